//! Tables of optimized key rates over grids of the planning inputs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{optimize, optimize_fixed_px, OptimizeError, OptimizedPlan, PlanInputs};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: u64,
    pub epsilon: f64,
    /// Net key bits per raw bit; 0 where no positive key exists.
    pub rate: f64,
    pub q_x: Option<f64>,
    pub theta_x: Option<f64>,
    pub theta_z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinNRow {
    pub epsilon: f64,
    pub min_n: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasRow {
    pub q_target: f64,
    pub p_x: f64,
    pub q_x: f64,
    pub key: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptBiasRow {
    pub n: u64,
    pub p_x: Option<f64>,
    pub q_x: Option<f64>,
    pub key: u64,
}

fn planned(r: Result<OptimizedPlan, OptimizeError>) -> Result<Option<OptimizedPlan>, OptimizeError> {
    match r {
        Ok(p) => Ok(Some(p)),
        Err(OptimizeError::Infeasible(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn net(plan: &Option<OptimizedPlan>) -> u64 {
    plan.as_ref().map_or(0, |p| p.net_key.max(0) as u64)
}

/// Key rate against raw key length for each target failure probability.
pub fn rate_vs_n(ns: &[u64], epsilons: &[f64], base: &PlanInputs) -> Result<Vec<RateRow>, OptimizeError> {
    if ns.is_empty() || epsilons.is_empty() {
        return Err(OptimizeError::Domain("empty grid".into()));
    }
    let cells: Vec<(f64, u64)> = epsilons.iter().flat_map(|&e| ns.iter().map(move |&n| (e, n))).collect();
    cells
        .par_iter()
        .map(|&(epsilon, n)| {
            let plan = planned(optimize(&PlanInputs { n, epsilon, ..*base }))?;
            Ok(RateRow {
                n,
                epsilon,
                rate: net(&plan) as f64 / n as f64,
                q_x: plan.as_ref().map(|p| p.q_x),
                theta_x: plan.as_ref().map(|p| p.theta_x),
                theta_z: plan.as_ref().map(|p| p.theta_z),
            })
        })
        .collect()
}

fn feasible(base: &PlanInputs, n: u64) -> Result<bool, OptimizeError> {
    Ok(net(&planned(optimize(&PlanInputs { n, ..*base }))?) > 0)
}

/// Smallest raw key length with a positive net key, by doubling then
/// bisection with feasibility as the predicate.
pub fn min_feasible_n(base: &PlanInputs) -> Result<u64, OptimizeError> {
    const CAP: u64 = 1 << 40;
    let mut hi = 64u64;
    while !feasible(base, hi)? {
        hi *= 2;
        if hi > CAP {
            return Err(OptimizeError::Infeasible(format!("no positive key below n = {CAP}")));
        }
    }
    let mut lo = (hi / 2).max(2);
    if lo == hi || feasible(base, lo)? {
        return Ok(lo.min(hi));
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if feasible(base, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

pub fn min_n_vs_eps(epsilons: &[f64], base: &PlanInputs) -> Result<Vec<MinNRow>, OptimizeError> {
    if epsilons.is_empty() {
        return Err(OptimizeError::Domain("empty grid".into()));
    }
    epsilons
        .par_iter()
        .map(|&epsilon| {
            Ok(MinNRow {
                epsilon,
                min_n: min_feasible_n(&PlanInputs { epsilon, ..*base })?,
            })
        })
        .collect()
}

/// `p_x` that gives bias ratio `q = p^2 / (p^2 + (1-p)^2)`.
pub fn px_for_q(q: f64) -> f64 {
    let (a, b) = (q.sqrt(), (1.0 - q).sqrt());
    a / (a + b)
}

/// Net key at fixed bias ratios (deviations still optimized).
pub fn key_vs_bias(qs: &[f64], base: &PlanInputs) -> Result<Vec<BiasRow>, OptimizeError> {
    if qs.is_empty() {
        return Err(OptimizeError::Domain("empty grid".into()));
    }
    qs.par_iter()
        .map(|&q| {
            if !(q > 0.0 && q < 1.0) {
                return Err(OptimizeError::Domain(format!("bias ratio {q} outside (0, 1)")));
            }
            let p_x = px_for_q(q);
            let plan = planned(optimize_fixed_px(base, p_x))?;
            let n = base.n as f64;
            let (nx, nz) = ((n * p_x * p_x).floor(), (n * (1.0 - p_x) * (1.0 - p_x)).floor());
            Ok(BiasRow {
                q_target: q,
                p_x,
                q_x: nx / (nx + nz),
                key: net(&plan),
            })
        })
        .collect()
}

/// Optimal bias ratio against raw key length.
pub fn optbias_vs_n(ns: &[u64], base: &PlanInputs) -> Result<Vec<OptBiasRow>, OptimizeError> {
    if ns.is_empty() {
        return Err(OptimizeError::Domain("empty grid".into()));
    }
    ns.par_iter()
        .map(|&n| {
            let plan = planned(optimize(&PlanInputs { n, ..*base }))?;
            Ok(OptBiasRow {
                n,
                p_x: plan.as_ref().map(|p| p.p_x),
                q_x: plan.as_ref().map(|p| p.q_x),
                key: net(&plan),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> PlanInputs {
        PlanInputs {
            n: 0,
            e_bx: 0.04,
            e_bz: 0.04,
            epsilon: 1e-7,
            f: 1.0,
        }
    }

    #[test]
    fn q_to_p_roundtrip() {
        for q in [0.5, 0.7, 0.9, 0.998] {
            let p = px_for_q(q);
            let back = p * p / (p * p + (1.0 - p) * (1.0 - p));
            assert!((back - q).abs() < 1e-12);
        }
        assert!((px_for_q(0.998) - 0.957).abs() < 0.002);
    }

    #[test]
    fn rate_grows_with_n() {
        let rows = rate_vs_n(&[10_000, 100_000, 1_000_000], &[1e-7], &base()).unwrap();
        assert!(rows.windows(2).all(|w| w[1].rate >= w[0].rate));
        assert!(rows[2].rate > 0.3);
    }

    #[test]
    fn empty_grids_rejected() {
        assert!(rate_vs_n(&[], &[1e-7], &base()).is_err());
        assert!(min_n_vs_eps(&[], &base()).is_err());
        assert!(key_vs_bias(&[], &base()).is_err());
        assert!(optbias_vs_n(&[], &base()).is_err());
    }
}
