//! Failure-probability aggregation and the trace-distance security parameter.

use serde::Serialize;
use thiserror::Error;

use crate::prob::Log2Prob;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AccountingError {
    #[error("domain error: {0}")]
    Domain(String),
}

/// Per-step failure probabilities of one session.
///
/// `epsilon = 2 eps_bs + eps_ev + eps_ph + eps_pa` (basis sift is counted
/// twice, once per direction) and `epsilon3 = 2 eps_bs + eps_ev + eps_pa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FailureBudget {
    pub eps_bs: Log2Prob,
    pub eps_ev: Log2Prob,
    pub eps_ph: Log2Prob,
    pub eps_pa: Log2Prob,
    pub epsilon: Log2Prob,
    pub epsilon3: Log2Prob,
}

impl FailureBudget {
    pub fn new(eps_bs: Log2Prob, eps_ev: Log2Prob, eps_ph: Log2Prob, eps_pa: Log2Prob) -> Self {
        FailureBudget {
            eps_bs,
            eps_ev,
            eps_ph,
            eps_pa,
            epsilon: Log2Prob::sum([eps_bs.scale(2.0), eps_ev, eps_ph, eps_pa]),
            epsilon3: Log2Prob::sum([eps_bs.scale(2.0), eps_ev, eps_pa]),
        }
    }

    /// Recomputes both totals from the components and compares bit for bit.
    pub fn is_consistent(&self) -> bool {
        let again = FailureBudget::new(self.eps_bs, self.eps_ev, self.eps_ph, self.eps_pa);
        again.epsilon.log2().to_bits() == self.epsilon.log2().to_bits()
            && again.epsilon3.log2().to_bits() == self.epsilon3.log2().to_bits()
    }

    pub fn zeta(&self) -> f64 {
        zeta_from_log2(self.epsilon.log2())
    }
}

/// Secret-key costs in bits of one session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct KeyCost {
    pub k_bs: u64,
    pub k_ec: u64,
    pub k_ev: u64,
    pub k_pa: u64,
}

impl KeyCost {
    /// Bits drawn from the pool: two sift tags, EC pads, EV and PA tags.
    pub fn total(&self) -> u64 {
        2 * self.k_bs + self.k_ec + self.k_ev + self.k_pa
    }

    /// `l - 2 k_bs - k_ec - k_ev - k_pa`, may be negative.
    pub fn net_key(&self, l: u64) -> i64 {
        l as i64 - self.total() as i64
    }
}

/// `zeta = sqrt(eps (2 - eps))`: a key that fails with probability `eps` is
/// `zeta`-secure in the trace-distance sense.
pub fn composable_zeta(eps: f64) -> Result<f64, AccountingError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(AccountingError::Domain(format!("epsilon {eps} outside [0, 1]")));
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    Ok(zeta_from_log2(eps.log2()))
}

/// `zeta` evaluated as `2^((log2 eps + log2(2 - eps)) / 2)`, which survives
/// epsilons far below the smallest double.
pub fn zeta_from_log2(log2_eps: f64) -> f64 {
    if log2_eps == f64::NEG_INFINITY {
        return 0.0;
    }
    let log2_eps = log2_eps.min(0.0);
    // log2(2 - eps) = 1 + log2(1 - eps/2)
    let tail = (-(log2_eps - 1.0).exp2()).ln_1p() / std::f64::consts::LN_2;
    ((log2_eps + 1.0 + tail) / 2.0).exp2()
}

/// `rounds * zeta`, clamped to 1.
pub fn compose_rounds(zeta: f64, rounds: u64) -> f64 {
    (zeta * rounds as f64).min(1.0)
}

/// `2^-k_initial`: no protocol can fail less often than an adversary who
/// guesses the whole pre-shared pool.
pub fn failure_lower_bound(k_initial: u64) -> Log2Prob {
    Log2Prob::from_log2(-(k_initial as f64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_endpoints_and_reference() {
        assert_eq!(composable_zeta(0.0).unwrap(), 0.0);
        assert!((composable_zeta(1.0).unwrap() - 1.0).abs() < 1e-15);
        let z = composable_zeta(1.0073e-7).unwrap();
        assert!((z / 4.4884e-4 - 1.0).abs() < 1e-4, "{z}");
        assert!(composable_zeta(1.5).is_err());
        assert!(composable_zeta(-0.1).is_err());
    }

    #[test]
    fn zeta_log_form_matches_direct() {
        for i in 1..1000 {
            let eps = i as f64 / 1000.0;
            let direct = (eps * (2.0 - eps)).sqrt();
            assert!((composable_zeta(eps).unwrap() - direct).abs() < 1e-14);
        }
        // Far below f64 range: zeta = sqrt(2 eps).
        assert!((zeta_from_log2(-2000.0).log2() - (-999.5)).abs() < 1e-12);
    }

    #[test]
    fn zeta_monotone_and_bracketed() {
        let mut prev = -1.0;
        for i in 0..=10_000 {
            let eps = i as f64 / 10_000.0;
            let z = composable_zeta(eps).unwrap();
            assert!(z > prev);
            assert!(z >= eps - 1e-15 && z <= (2.0 * eps).sqrt() + 1e-15);
            prev = z;
        }
    }

    #[test]
    fn rounds_and_lower_bound() {
        assert_eq!(compose_rounds(0.3, 1), 0.3);
        assert_eq!(compose_rounds(4.4884e-4, 1_000_000), 1.0);
        assert!((compose_rounds(1e-9, 1_000_000) - 1e-3).abs() < 1e-18);
        assert_eq!(failure_lower_bound(0).linear(), 1.0);
        assert_eq!(failure_lower_bound(10).linear(), 1.0 / 1024.0);
        assert!(Log2Prob::from_linear(1.0073e-7) >= failure_lower_bound(543));
    }

    #[test]
    fn budget_identity() {
        let b = FailureBudget::new(
            Log2Prob::from_log2(-120.0),
            Log2Prob::from_log2(-110.5),
            Log2Prob::from_linear(1e-7),
            Log2Prob::from_log2(-100.25),
        );
        assert!(b.is_consistent());
        let direct = 2.0 * (-120f64).exp2() + (-110.5f64).exp2() + 1e-7 + (-100.25f64).exp2();
        assert!((b.epsilon.linear() / direct - 1.0).abs() < 1e-12);
        assert!(b.epsilon3 < b.epsilon);
        let tampered = FailureBudget {
            epsilon: Log2Prob::from_log2(b.epsilon.log2() + 1e-9),
            ..b
        };
        assert!(!tampered.is_consistent());
    }

    #[test]
    fn key_cost_net() {
        let c = KeyCost {
            k_bs: 10,
            k_ec: 100,
            k_ev: 12,
            k_pa: 13,
        };
        assert_eq!(c.total(), 145);
        assert_eq!(c.net_key(1000), 855);
        assert_eq!(c.net_key(100), -45);
    }
}
