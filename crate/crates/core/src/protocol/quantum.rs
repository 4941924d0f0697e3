//! Stochastic stand-in for the quantum transmission.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{ProtocolError, SessionParams};
use crate::gf2::BitString;

/// Alice's preparation record per pulse. A set basis bit means X.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AliceRecords {
    pub bases: BitString,
    pub bits: BitString,
}

/// Bob's measurement record per pulse. `bits` is meaningful only where
/// `detected` is set and `double_click` is not.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BobRecords {
    pub detected: BitString,
    pub double_click: BitString,
    pub bases: BitString,
    pub bits: BitString,
}

pub(crate) fn party_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws bases and bits for both parties and runs each pulse through a
/// lossy, noisy channel: detection with probability `eta`, a double click
/// with probability `p_dc` among detections, and on matching bases a bit
/// flip with probability `e_bx` or `e_bz`. Deterministic in the three seeds.
pub fn simulate_quantum_phase(params: &SessionParams) -> Result<(AliceRecords, BobRecords), ProtocolError> {
    params.validate()?;
    let n = usize::try_from(params.n_pulses).map_err(|_| ProtocolError::Config("n_pulses too large".into()))?;
    let mut ra = party_rng(params.rng_seed_alice, 0);
    let mut rb = party_rng(params.rng_seed_bob, 0);
    let mut rc = party_rng(params.rng_seed_channel, 0);
    let mut alice = AliceRecords {
        bases: BitString::zeros(n),
        bits: BitString::zeros(n),
    };
    let mut bob = BobRecords {
        detected: BitString::zeros(n),
        double_click: BitString::zeros(n),
        bases: BitString::zeros(n),
        bits: BitString::zeros(n),
    };
    for i in 0..n {
        let a_x = ra.gen::<f64>() < params.p_x;
        let a_bit = ra.gen::<bool>();
        let b_x = rb.gen::<f64>() < params.p_x;
        alice.bases.set(i, a_x);
        alice.bits.set(i, a_bit);
        bob.bases.set(i, b_x);
        if rc.gen::<f64>() >= params.eta {
            continue;
        }
        bob.detected.set(i, true);
        if rc.gen::<f64>() < params.p_dc {
            bob.double_click.set(i, true);
            continue;
        }
        let bit = if a_x == b_x {
            let e = if a_x { params.e_bx } else { params.e_bz };
            a_bit ^ (rc.gen::<f64>() < e)
        } else {
            rc.gen::<bool>()
        };
        bob.bits.set(i, bit);
    }
    Ok((alice, bob))
}

/// Bob's raw key after discarding no-clicks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiftedRaw {
    /// Pulse indices with a detection, ascending.
    pub positions: Vec<usize>,
    pub bits: BitString,
    pub bases: BitString,
    pub double_clicks: usize,
}

/// Keeps detected pulses; double clicks get a uniformly random bit, and a
/// random basis too when `randomize_basis` is set.
pub fn key_sift<R: Rng + ?Sized>(bob: &BobRecords, randomize_basis: bool, rng: &mut R) -> SiftedRaw {
    let mut out = SiftedRaw {
        positions: Vec::new(),
        bits: BitString::zeros(0),
        bases: BitString::zeros(0),
        double_clicks: 0,
    };
    for i in 0..bob.detected.len() {
        if !bob.detected.get(i) {
            continue;
        }
        out.positions.push(i);
        if bob.double_click.get(i) {
            out.double_clicks += 1;
            out.bits.push(rng.gen());
            out.bases.push(if randomize_basis { rng.gen() } else { bob.bases.get(i) });
        } else {
            out.bits.push(bob.bits.get(i));
            out.bases.push(bob.bases.get(i));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SessionParams {
        SessionParams {
            n_pulses: 100_000,
            eta: 0.1,
            e_bx: 0.04,
            e_bz: 0.04,
            p_x: 0.5,
            p_dc: 0.0,
            epsilon: 1e-4,
            f_ec: 1.0,
            rng_seed_alice: 11,
            rng_seed_bob: 12,
            rng_seed_channel: 13,
            pool_seed: 0,
            pool_init: 0,
            randomize_double_click_basis: false,
        }
    }

    #[test]
    fn no_transmission_no_detections() {
        let (_, bob) = simulate_quantum_phase(&SessionParams { eta: 0.0, ..params() }).unwrap();
        assert!(bob.detected.is_zero());
        let raw = key_sift(&bob, false, &mut party_rng(1, 1));
        assert!(raw.bits.is_empty());
    }

    #[test]
    fn noiseless_channel_agrees_on_matched_bases() {
        let p = SessionParams {
            n_pulses: 5000,
            eta: 1.0,
            e_bx: 0.0,
            e_bz: 0.0,
            ..params()
        };
        let (alice, bob) = simulate_quantum_phase(&p).unwrap();
        for i in 0..5000 {
            if alice.bases.get(i) == bob.bases.get(i) {
                assert_eq!(alice.bits.get(i), bob.bits.get(i));
            }
        }
    }

    #[test]
    fn detection_count_is_binomial() {
        let (_, bob) = simulate_quantum_phase(&params()).unwrap();
        let d = bob.detected.count_ones() as f64;
        let sigma = (1e5f64 * 0.1 * 0.9).sqrt();
        assert!((d - 1e4).abs() < 5.0 * sigma, "{d}");
    }

    #[test]
    fn deterministic_in_seeds() {
        let a = simulate_quantum_phase(&params()).unwrap();
        let b = simulate_quantum_phase(&params()).unwrap();
        assert_eq!(a, b);
        let c = simulate_quantum_phase(&SessionParams { rng_seed_channel: 99, ..params() }).unwrap();
        assert_ne!(a.1.detected, c.1.detected);
    }

    #[test]
    fn sift_without_double_clicks_is_verbatim() {
        let (_, bob) = simulate_quantum_phase(&params()).unwrap();
        let raw = key_sift(&bob, false, &mut party_rng(5, 1));
        assert_eq!(raw.double_clicks, 0);
        assert_eq!(raw.bits, bob.bits.select(&raw.positions));
        assert_eq!(raw.bases, bob.bases.select(&raw.positions));
    }

    #[test]
    fn double_click_bits_are_uniform() {
        let p = SessionParams {
            p_dc: 1.0,
            n_pulses: 20_000,
            ..params()
        };
        let (_, bob) = simulate_quantum_phase(&p).unwrap();
        for seed in 0..20 {
            let raw = key_sift(&bob, false, &mut party_rng(seed, 1));
            let n = raw.bits.len() as f64;
            let ones = raw.bits.count_ones() as f64;
            assert_eq!(raw.double_clicks, raw.bits.len());
            assert!((ones - n / 2.0).abs() < 5.0 * (n / 4.0).sqrt());
        }
    }
}
