//! Wegman-Carter tags: an LFSR-Toeplitz hash keyed by borrowed pool bits,
//! encrypted with a fresh one-time pad.

use super::{KeyPool, ProtocolError, Step};
use crate::gf2::{derive_lfsr_spec, lfsr_toeplitz_tag, one_time_pad, BitString};
use crate::optimizer::auth_failure;
use crate::prob::Log2Prob;

fn raw_tag(pool: &mut KeyPool, step: Step, msg: &BitString, k: usize) -> Result<BitString, ProtocolError> {
    let gf2 = |source| ProtocolError::Gf2 { step, source };
    let construction = pool.borrow(step, 2 * k)?;
    let spec = derive_lfsr_spec(&construction, k, msg.len()).map_err(gf2);
    pool.give_back(step, construction);
    let tag = lfsr_toeplitz_tag(&spec?, msg).map_err(gf2)?;
    let pad = pool.consume(step, k)?;
    one_time_pad(&tag, &pad).map_err(gf2)
}

/// Encrypted `k`-bit tag of `msg`. Spends `k` pool bits; the `2k` hash
/// construction bits go back to the pool.
pub fn authenticate(pool: &mut KeyPool, step: Step, msg: &BitString, k: usize) -> Result<BitString, ProtocolError> {
    raw_tag(pool, step, msg, k)
}

/// Recomputes the tag from the receiver's pool copy and compares.
pub fn verify_tag(
    pool: &mut KeyPool,
    step: Step,
    msg: &BitString,
    tag: &BitString,
    k: usize,
) -> Result<bool, ProtocolError> {
    Ok(raw_tag(pool, step, msg, k)? == *tag)
}

/// `m 2^(-k_ev + 1)`.
pub fn ev_failure(m: u64, k_ev: u64) -> Log2Prob {
    auth_failure(m, k_ev)
}
