use serde::Serialize;

use crate::gf2::{toeplitz_apply, BitString, Gf2Error, ToeplitzSpec};
use crate::optimizer::auth_failure;
use crate::prob::Log2Prob;

/// Final key `M x` for the `l x m` Toeplitz matrix described by the
/// `m + l - 1` seed bits.
pub fn privacy_amplify_key(key: &BitString, l: usize, seed: &BitString) -> Result<BitString, Gf2Error> {
    let spec = ToeplitzSpec::new(l, key.len(), seed.clone())?;
    toeplitz_apply(&spec, key)
}

/// `(m + l - 1) 2^(-k_pa + 1) + 2^(-t_oe)`.
pub fn pa_failure(m: u64, l: u64, k_pa: u64, t_oe: u64) -> Log2Prob {
    Log2Prob::sum([
        auth_failure((m + l).saturating_sub(1), k_pa),
        Log2Prob::from_log2(-(t_oe as f64)),
    ])
}

/// Result of the privacy amplification step as seen by one party.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PaOutcome {
    pub l: u64,
    pub m: u64,
    pub failure: Log2Prob,
}
