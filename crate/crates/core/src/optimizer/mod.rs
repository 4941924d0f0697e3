//! Parameter planning for a session.
//!
//! The aggregate secret-key cost `k_3 = 2 k_bs + k_ev + k_pa + t_oe` is fixed
//! first from the target failure probability, split between the steps by
//! the AM-GM optimum, and the key length is then maximized over the basis
//! bias and the two phase-error deviations with `eps_ph = eps`.

mod curves;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bounds::{entropy_unchecked, BoundsError};
use crate::prob::Log2Prob;

pub use curves::{
    min_feasible_n, px_for_q,
    key_vs_bias, min_n_vs_eps, optbias_vs_n, rate_vs_n, BiasRow, MinNRow, OptBiasRow, RateRow,
};
pub use search::{optimize, optimize_fixed_px, theta_for_budget};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimizeError {
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
}

impl From<BoundsError> for OptimizeError {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Domain(s) => OptimizeError::Domain(s),
        }
    }
}

/// `ceil(-5 log2 eps + 4 log2 n + 50)`.
pub fn k3_simplified(eps: f64, n: u64) -> Result<u64, OptimizeError> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(OptimizeError::Domain(format!("epsilon {eps} outside (0, 1)")));
    }
    if n < 2 {
        return Err(OptimizeError::Domain("n must be at least 2".into()));
    }
    let v = -5.0 * eps.log2() + 4.0 * (n as f64).log2() + 50.0;
    Ok((v - 1e-9).ceil() as u64)
}

/// `log2 A` with `A = n^2 m (m + l - 1)`, `m = n_x + n_z`.
pub fn log2_a(n: u64, m: u64, l: u64) -> f64 {
    2.0 * (n as f64).log2() + (m as f64).log2() + ((m + l).max(2) as f64 - 1.0).log2()
}

/// Integer split of `k_3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Allocation {
    pub t_oe: u64,
    pub k_bs: u64,
    pub k_ev: u64,
    pub k_pa: u64,
}

/// Failure probabilities implied by an [`Allocation`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocationFailure {
    /// `n 2^(-k_bs + 1)`, per direction.
    pub eps_bs: Log2Prob,
    /// `m 2^(-k_ev + 1)`.
    pub eps_ev: Log2Prob,
    /// `(m + l - 1) 2^(-k_pa + 1) + 2^(-t_oe)`.
    pub eps_pa: Log2Prob,
    /// `2 eps_bs + eps_ev + eps_pa`.
    pub eps3: Log2Prob,
}

impl Allocation {
    pub fn cost(&self) -> u64 {
        2 * self.k_bs + self.k_ev + self.k_pa + self.t_oe
    }

    pub fn failure(&self, n: u64, m: u64, l: u64) -> AllocationFailure {
        let eps_bs = auth_failure(n, self.k_bs);
        let eps_ev = auth_failure(m, self.k_ev);
        let eps_pa = Log2Prob::sum([
            auth_failure((m + l).saturating_sub(1), self.k_pa),
            Log2Prob::from_log2(-(self.t_oe as f64)),
        ]);
        AllocationFailure {
            eps_bs,
            eps_ev,
            eps_pa,
            eps3: Log2Prob::sum([eps_bs, eps_bs, eps_ev, eps_pa]),
        }
    }
}

/// `len 2^(-k + 1)`: forgery probability of a `k`-bit LFSR tag on `len` bits.
pub fn auth_failure(len: u64, k: u64) -> Log2Prob {
    if len == 0 {
        return Log2Prob::ZERO;
    }
    Log2Prob::from_log2((len as f64).log2() - k as f64 + 1.0)
}

/// Splits `k_3` into `t_oe, k_bs, k_ev, k_pa` near the AM-GM optimum
///
/// ```text
/// t_oe = k_3/5 - 4/5 - log2(A)/5,  k_bs = t_oe + 1 + log2 n,
/// k_ev = t_oe + 1 + log2 m,         k_pa = t_oe + 1 + log2(m + l - 1).
/// ```
///
/// `t_oe` is floored and the others ceiled; if that overshoots `k_3`, `t_oe`
/// drops by one. Leftover bits then go, one increment at a time, to whichever
/// term removes the most failure probability per bit spent.
pub fn allocate_costs(k3: u64, n: u64, n_x: u64, n_z: u64, l: u64) -> Result<Allocation, OptimizeError> {
    if n == 0 || n_x + n_z == 0 {
        return Err(OptimizeError::Domain("counts must be positive".into()));
    }
    let m = n_x + n_z;
    let lg_n = (n as f64).log2();
    let lg_m = (m as f64).log2();
    let lg_pa = ((m + l.max(1) - 1) as f64).log2();
    let mut t = ((k3 as f64 - 4.0 - log2_a(n, m, l.max(1))) / 5.0 + 1e-12).floor();
    loop {
        if t < 1.0 {
            return Err(OptimizeError::Infeasible(format!("k_3 = {k3} leaves no room for t_oe >= 1")));
        }
        let up = |c: f64| (t + 1.0 + c - 1e-12).ceil() as u64;
        let mut a = Allocation {
            t_oe: t as u64,
            k_bs: up(lg_n),
            k_ev: up(lg_m),
            k_pa: up(lg_pa),
        };
        if a.cost() > k3 {
            t -= 1.0;
            continue;
        }
        let mut spare = k3 - a.cost();
        loop {
            let f = a.failure(n, m, l.max(1));
            let pa_auth = auth_failure(m + l.max(1) - 1, a.k_pa).log2();
            // Probability removed per bit spent, in log2. Raising k_bs halves
            // both sift terms for two bits.
            let candidates = [
                (f.eps_bs.log2() - 1.0, 2u64, 0usize),
                (f.eps_ev.log2() - 1.0, 1, 1),
                (pa_auth - 1.0, 1, 2),
                (-(a.t_oe as f64) - 1.0, 1, 3),
            ];
            let best = candidates
                .iter()
                .filter(|c| c.1 <= spare)
                .fold(None::<(f64, u64, usize)>, |acc, &c| match acc {
                    Some(b) if b.0 >= c.0 => Some(b),
                    _ => Some(c),
                });
            let Some((_, cost, which)) = best else { break };
            match which {
                0 => a.k_bs += 1,
                1 => a.k_ev += 1,
                2 => a.k_pa += 1,
                _ => a.t_oe += 1,
            }
            spare -= cost;
        }
        return Ok(a);
    }
}

/// Closed form `eps_3 = 5 A^(1/5) 2^(-(k_3 - 4)/5)`, as log2.
pub fn epsilon3(k3: u64, log2_a: f64) -> Log2Prob {
    Log2Prob::from_log2(5f64.log2() + log2_a / 5.0 - (k3 as f64 - 4.0) / 5.0)
}

/// Per-basis terms of the finite key length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyObjective {
    /// `n_x [1 - f H(e_bx) - H(e_bz + theta_z)]`.
    pub contribution_x: f64,
    /// `n_z [1 - f H(e_bz) - H(e_bx + theta_x)]`.
    pub contribution_z: f64,
    pub key_x: bool,
    pub key_z: bool,
    /// Sum of positive contributions minus `k_3`.
    pub nr: f64,
    /// Bits left after privacy amplification before `t_oe` is subtracted:
    /// `n_x [1 - H(e_bz + theta_z)] + n_z [1 - H(e_bx + theta_x)]` over keyed bases.
    pub pa_bits: f64,
    /// Predicted error-correction leakage `f n_b H(e_b)` over keyed bases.
    pub ec_bits: f64,
}

impl KeyObjective {
    /// Bits entering error verification and privacy amplification.
    pub fn keyed_bits(&self, n_x: u64, n_z: u64) -> u64 {
        (if self.key_x { n_x } else { 0 }) + (if self.key_z { n_z } else { 0 })
    }

    /// `floor(pa_bits - t_oe)`, at least zero.
    pub fn key_length(&self, t_oe: u64) -> u64 {
        (self.pa_bits - t_oe as f64).floor().max(0.0) as u64
    }
}

/// Finite key length for given deviations. A basis whose contribution is
/// not positive is kept for parameter estimation only and left out of the key.
#[allow(clippy::too_many_arguments)]
pub fn key_length_objective(
    n_x: u64,
    n_z: u64,
    e_bx: f64,
    e_bz: f64,
    theta_x: f64,
    theta_z: f64,
    k3: u64,
    f: f64,
) -> Result<KeyObjective, OptimizeError> {
    for (e, t) in [(e_bx, theta_x), (e_bz, theta_z)] {
        if !(0.0..=1.0).contains(&e) || t < 0.0 || e + t > 1.0 {
            return Err(OptimizeError::Domain(format!("error rate {e} with deviation {t}")));
        }
    }
    if f < 1.0 {
        return Err(OptimizeError::Domain(format!("efficiency {f} below 1")));
    }
    let (nx, nz) = (n_x as f64, n_z as f64);
    let pa_x = nx * (1.0 - entropy_unchecked(e_bz + theta_z));
    let pa_z = nz * (1.0 - entropy_unchecked(e_bx + theta_x));
    let ec_x = nx * f * entropy_unchecked(e_bx);
    let ec_z = nz * f * entropy_unchecked(e_bz);
    let contribution_x = pa_x - ec_x;
    let contribution_z = pa_z - ec_z;
    let key_x = contribution_x > 0.0;
    let key_z = contribution_z > 0.0;
    let pick = |on: bool, v: f64| if on { v } else { 0.0 };
    Ok(KeyObjective {
        contribution_x,
        contribution_z,
        key_x,
        key_z,
        nr: pick(key_x, contribution_x) + pick(key_z, contribution_z) - k3 as f64,
        pa_bits: pick(key_x, pa_x) + pick(key_z, pa_z),
        ec_bits: pick(key_x, ec_x) + pick(key_z, ec_z),
    })
}

/// `n [1 - H(e_bx) - H(e_bz)]`; negative values are returned as is.
pub fn asymptotic_key(n: u64, e_bx: f64, e_bz: f64) -> Result<f64, OptimizeError> {
    let hx = crate::bounds::binary_entropy(e_bx)?;
    let hz = crate::bounds::binary_entropy(e_bz)?;
    Ok(n as f64 * (1.0 - hx - hz))
}

/// Planning inputs: raw key length, expected error rates, failure target and
/// error-correction efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanInputs {
    pub n: u64,
    pub e_bx: f64,
    pub e_bz: f64,
    pub epsilon: f64,
    pub f: f64,
}

impl PlanInputs {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        if self.n < 2 {
            return Err(OptimizeError::Domain("n must be at least 2".into()));
        }
        for (name, e) in [("e_bx", self.e_bx), ("e_bz", self.e_bz)] {
            if !(0.0..0.5).contains(&e) {
                return Err(OptimizeError::Domain(format!("{name} = {e} outside [0, 0.5)")));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(OptimizeError::Domain(format!("epsilon {} outside (0, 1)", self.epsilon)));
        }
        if !(self.f >= 1.0) || !self.f.is_finite() {
            return Err(OptimizeError::Domain(format!("efficiency {} below 1", self.f)));
        }
        Ok(())
    }
}

/// Output of [`optimize`]: everything a session needs plus the bookkeeping
/// that justifies it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedPlan {
    pub inputs: PlanInputs,
    pub p_x: f64,
    pub q_x: f64,
    pub n_x: u64,
    pub n_z: u64,
    pub theta_x: f64,
    pub theta_z: f64,
    pub k3: u64,
    pub allocation: Allocation,
    /// Final key length after privacy amplification.
    pub l: u64,
    pub objective: KeyObjective,
    /// `l - 2 k_bs - ceil(k_ec) - k_ev - k_pa` with the predicted `k_ec`.
    pub net_key: i64,
    pub k_ec_predicted: u64,
    pub log2_a: f64,
    pub p_theta_x: Log2Prob,
    pub p_theta_z: Log2Prob,
    pub eps_ph: Log2Prob,
    pub failure: AllocationFailure,
    /// Closed-form estimate of `eps_3` for comparison with the allocated one.
    pub eps3_closed_form: Log2Prob,
    pub eps_final: Log2Prob,
    pub zeta: f64,
    pub asymptotic_key: f64,
}
