//! Cascade reconciliation over an encrypted parity channel.
//!
//! Each exchange is one `EC_PARITY` frame from Alice carrying padded parities
//! and one from Bob carrying the padded mismatch bits. Both pads come from the
//! pool, in that order, on both sides. Bob corrects his key; Alice's never
//! changes. Binary searches for all odd blocks of a pass run in lockstep, one
//! exchange per halving.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::party::{expect_len, recv_frame, send_frame};
use super::{KeyPool, Link, MessageFrame, MsgType, ProtocolError, Role, Step};
use crate::gf2::BitString;

pub const PASSES: usize = 4;
const STEP: Step = Step::ErrorCorrection;
const PERM_DOMAIN: u64 = 0x4341_5343_4144_4500;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CascadeStats {
    /// Parity bits sent by Alice.
    pub parity_bits: u64,
    /// Mismatch bits returned by Bob.
    pub reply_bits: u64,
    /// Bits Bob flipped.
    pub corrections: u64,
    pub passes: u64,
    pub exchanges: u64,
}

impl CascadeStats {
    /// Pool bits consumed: every exchanged bit is padded.
    pub fn pool_bits(&self) -> u64 {
        self.parity_bits + self.reply_bits
    }

    pub fn merge(&mut self, other: &CascadeStats) {
        self.parity_bits += other.parity_bits;
        self.reply_bits += other.reply_bits;
        self.corrections += other.corrections;
        self.passes += other.passes;
        self.exchanges += other.exchanges;
    }
}

/// Block size per pass: `round(0.73 / e)` doubling each pass, stopping once a
/// single block covers the whole key.
pub fn block_sizes(n: usize, e_est: f64) -> Vec<usize> {
    if n == 0 {
        return Vec::new();
    }
    let first = if e_est > 0.0 { (0.73 / e_est).round() } else { n as f64 };
    let mut k = (first as usize).clamp(1, n);
    let mut out = vec![k];
    while out.len() < PASSES && k < n {
        k = (2 * k).min(n);
        out.push(k);
    }
    out
}

fn parity(bits: &[bool]) -> bool {
    bits.iter().fold(false, |acc, &b| acc ^ b)
}

fn permutation(n: usize, basis: u8, attempt: u32, pass: usize) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    if pass == 0 && attempt == 0 {
        return perm;
    }
    let seed = PERM_DOMAIN ^ ((basis as u64) << 40) ^ ((attempt as u64) << 16) ^ pass as u64;
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    perm
}

struct Pass {
    k: usize,
    perm: Vec<usize>,
    inv: Vec<usize>,
    /// This party's key in permuted order.
    bits: Vec<bool>,
    odd: Vec<bool>,
}

impl Pass {
    fn new(key: &BitString, k: usize, perm: Vec<usize>) -> Self {
        let mut inv = vec![0; perm.len()];
        for (pos, &p) in perm.iter().enumerate() {
            inv[p] = pos;
        }
        let bits = perm.iter().map(|&p| key.get(p)).collect();
        Pass {
            k,
            perm,
            inv,
            bits,
            odd: Vec::new(),
        }
    }

    fn block(&self, b: usize) -> (usize, usize) {
        (b * self.k, ((b + 1) * self.k).min(self.bits.len()))
    }

    fn block_parities(&self) -> Vec<bool> {
        (0..self.bits.len().div_ceil(self.k))
            .map(|b| {
                let (lo, hi) = self.block(b);
                parity(&self.bits[lo..hi])
            })
            .collect()
    }
}

struct Exchanger<'a, L: Link + ?Sized> {
    link: &'a mut L,
    pool: &'a mut KeyPool,
    role: Role,
    budget: u64,
    stats: CascadeStats,
}

impl<L: Link + ?Sized> Exchanger<'_, L> {
    /// Trades this party's parities for the mismatch pattern.
    fn exchange(&mut self, mine: &[bool]) -> Result<Vec<bool>, ProtocolError> {
        let len = mine.len();
        if len == 0 {
            return Ok(Vec::new());
        }
        let sent = self.stats.parity_bits + len as u64;
        if sent > self.budget {
            return Err(ProtocolError::ParityBudget {
                sent,
                budget: self.budget,
            });
        }
        self.stats.exchanges += 1;
        let mine = BitString::from_bools(mine.iter().copied());
        let gf2 = |source| ProtocolError::Gf2 { step: STEP, source };
        let pad_a = self.pool.consume(STEP, len)?;
        self.stats.parity_bits += len as u64;
        let mismatch = match self.role {
            Role::Alice => {
                let out = MessageFrame::new(MsgType::EcParity, mine.xor(&pad_a).map_err(gf2)?, BitString::zeros(0));
                send_frame(self.link, STEP, &out)?;
                let pad_b = self.pool.consume(STEP, len)?;
                self.stats.reply_bits += len as u64;
                let reply = recv_frame(self.link, STEP, MsgType::EcParity)?;
                expect_len(STEP, "mismatch reply", &reply.payload, len)?;
                reply.payload.xor(&pad_b).map_err(gf2)?
            }
            Role::Bob => {
                let msg = recv_frame(self.link, STEP, MsgType::EcParity)?;
                expect_len(STEP, "parity message", &msg.payload, len)?;
                let mismatch = msg.payload.xor(&pad_a).map_err(gf2)?.xor(&mine).map_err(gf2)?;
                let pad_b = self.pool.consume(STEP, len)?;
                self.stats.reply_bits += len as u64;
                let out = MessageFrame::new(MsgType::EcParity, mismatch.xor(&pad_b).map_err(gf2)?, BitString::zeros(0));
                send_frame(self.link, STEP, &out)?;
                mismatch
            }
        };
        Ok(mismatch.iter().collect())
    }

    /// Halves every range in lockstep until each holds one differing bit.
    fn locate(&mut self, pass: &Pass, mut ranges: Vec<(usize, usize)>) -> Result<Vec<usize>, ProtocolError> {
        loop {
            let active: Vec<usize> = (0..ranges.len()).filter(|&i| ranges[i].1 - ranges[i].0 > 1).collect();
            if active.is_empty() {
                return Ok(ranges.into_iter().map(|(lo, _)| lo).collect());
            }
            let mids: Vec<usize> = active.iter().map(|&i| ranges[i].0 + (ranges[i].1 - ranges[i].0) / 2).collect();
            let mine: Vec<bool> = active
                .iter()
                .zip(&mids)
                .map(|(&i, &mid)| parity(&pass.bits[ranges[i].0..mid]))
                .collect();
            let left_differs = self.exchange(&mine)?;
            for ((&i, &mid), &left) in active.iter().zip(&mids).zip(&left_differs) {
                ranges[i] = if left { (ranges[i].0, mid) } else { (mid, ranges[i].1) };
            }
        }
    }
}

/// Runs Cascade on one basis. Alice's `key` is left untouched; Bob's is
/// corrected in place. `basis` and `attempt` select the public shuffles, so
/// a retry after failed verification uses fresh permutations throughout.
/// Aborts once Alice's parity count would exceed `budget`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn reconcile<L: Link + ?Sized>(
    link: &mut L,
    pool: &mut KeyPool,
    role: Role,
    key: &mut BitString,
    e_est: f64,
    basis: u8,
    attempt: u32,
    budget: u64,
) -> Result<CascadeStats, ProtocolError> {
    let n = key.len();
    let mut ex = Exchanger {
        link,
        pool,
        role,
        budget,
        stats: CascadeStats::default(),
    };
    let mut passes: Vec<Pass> = Vec::new();
    for (i, k) in block_sizes(n, e_est).into_iter().enumerate() {
        let mut pass = Pass::new(key, k, permutation(n, basis, attempt, i));
        pass.odd = ex.exchange(&pass.block_parities())?;
        passes.push(pass);
        ex.stats.passes += 1;
        // Resolve the earliest pass with odd blocks first; each correction
        // toggles the containing block in every pass so far.
        while let Some(j) = passes.iter().position(|p| p.odd.contains(&true)) {
            let ranges = (0..passes[j].odd.len())
                .filter(|&b| passes[j].odd[b])
                .map(|b| passes[j].block(b))
                .collect();
            let found = ex.locate(&passes[j], ranges)?;
            for pos in found {
                let p = passes[j].perm[pos];
                if role == Role::Bob {
                    key.flip(p);
                }
                ex.stats.corrections += 1;
                for pass in passes.iter_mut() {
                    let q = pass.inv[p];
                    if role == Role::Bob {
                        pass.bits[q] ^= true;
                    }
                    pass.odd[q / pass.k] ^= true;
                }
            }
        }
    }
    Ok(ex.stats)
}
