// Maximization of the finite key length over the basis bias and the two
// phase-error deviations.
//
// For a fixed bias the constraint P_theta_x + P_theta_z = eps leaves one free
// variable. We take it to be the grid index of the coarser deviation (the
// one whose quantum 1/n_target is larger): once it is fixed, the remaining
// budget eps - P_coarse determines the finer deviation by bisection. The
// bias is searched on a log grid in the minority-basis probability on both
// sides of 1/2, then refined by golden section.

use rayon::prelude::*;

use super::{
    allocate_costs, epsilon3, k3_simplified, key_length_objective, log2_a, KeyObjective, OptimizeError,
    OptimizedPlan, PlanInputs,
};
use crate::accounting::zeta_from_log2;
use crate::bounds::{phase_sampling_bound_log2, zero_error_substitute};
use crate::prob::Log2Prob;

const INV_PHI: f64 = 0.618_033_988_749_894_9;
/// Grid over `a` with minority probability `d = 0.5 * 10^-a`.
const A_STEP: f64 = 0.05;
const A_MAX: f64 = 4.5;
const A_TOL: f64 = 1e-6;

/// Smallest `j` such that the bound at `theta = j / n_target` is at most
/// `budget_log2`, searched over `e + theta <= 1/2`. Returns `(j, bound_log2)`.
///
/// The bit error rate is replaced by `1/n_sample` when it is zero.
pub fn theta_for_budget(n_sample: u64, n_target: u64, e_b: f64, budget_log2: f64) -> Option<(u64, f64)> {
    if n_sample == 0 || n_target == 0 {
        return None;
    }
    let e = zero_error_substitute(e_b, n_sample);
    if !(e > 0.0 && e < 1.0) {
        return None;
    }
    let bound = |j: u64| phase_sampling_bound_log2(n_sample, n_target, e, j as f64 / n_target as f64).ok();
    let b0 = bound(0)?;
    if b0 <= budget_log2 {
        return Some((0, b0));
    }
    let j_max = ((0.5 - e).max(0.0) * n_target as f64 + 1e-9).floor() as u64;
    let b_max = bound(j_max)?;
    if j_max == 0 || b_max > budget_log2 {
        return None;
    }
    let (mut lo, mut hi, mut b_hi) = (0u64, j_max, b_max);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let b = bound(mid)?;
        if b <= budget_log2 {
            hi = mid;
            b_hi = b;
        } else {
            lo = mid;
        }
    }
    Some((hi, b_hi))
}

#[derive(Debug, Clone, Copy)]
struct Basis {
    n_sample: u64,
    n_target: u64,
    e: f64,
}

impl Basis {
    fn bound(&self, j: u64) -> f64 {
        let e = zero_error_substitute(self.e, self.n_sample);
        phase_sampling_bound_log2(self.n_sample, self.n_target, e, j as f64 / self.n_target as f64)
            .unwrap_or(f64::INFINITY)
    }

    fn j_max(&self) -> u64 {
        let e = zero_error_substitute(self.e, self.n_sample);
        ((0.5 - e).max(0.0) * self.n_target as f64 + 1e-9).floor() as u64
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    n_x: u64,
    n_z: u64,
    j_x: u64,
    j_z: u64,
    p_theta_x: f64,
    p_theta_z: f64,
    objective: KeyObjective,
}

impl Point {
    fn theta_x(&self) -> f64 {
        self.j_x as f64 / self.n_z as f64
    }

    fn theta_z(&self) -> f64 {
        self.j_z as f64 / self.n_x as f64
    }
}

struct Inner<'a> {
    inputs: &'a PlanInputs,
    k3: u64,
    n_x: u64,
    n_z: u64,
    x: Basis,
    z: Basis,
    coarse_is_x: bool,
}

impl<'a> Inner<'a> {
    fn new(inputs: &'a PlanInputs, k3: u64, n_x: u64, n_z: u64) -> Self {
        Inner {
            inputs,
            k3,
            n_x,
            n_z,
            // theta_x bounds Z-bit phase errors from the X-basis sample.
            x: Basis {
                n_sample: n_x,
                n_target: n_z,
                e: inputs.e_bx,
            },
            z: Basis {
                n_sample: n_z,
                n_target: n_x,
                e: inputs.e_bz,
            },
            coarse_is_x: n_z <= n_x,
        }
    }

    fn coarse(&self) -> Basis {
        if self.coarse_is_x {
            self.x
        } else {
            self.z
        }
    }

    fn fine(&self) -> Basis {
        if self.coarse_is_x {
            self.z
        } else {
            self.x
        }
    }

    fn at(&self, j_coarse: u64) -> Option<Point> {
        let log_eps = self.inputs.epsilon.log2();
        let p_c = self.coarse().bound(j_coarse);
        if p_c >= log_eps {
            return None;
        }
        let residual = log_eps + (-(p_c - log_eps).exp2()).ln_1p() / std::f64::consts::LN_2;
        let fine = self.fine();
        let (j_f, p_f) = theta_for_budget(fine.n_sample, fine.n_target, fine.e, residual)?;
        let (j_x, j_z, p_x, p_z) = if self.coarse_is_x {
            (j_coarse, j_f, p_c, p_f)
        } else {
            (j_f, j_coarse, p_f, p_c)
        };
        let ex = zero_error_substitute(self.inputs.e_bx, self.n_x);
        let ez = zero_error_substitute(self.inputs.e_bz, self.n_z);
        let tx = j_x as f64 / self.n_z as f64;
        let tz = j_z as f64 / self.n_x as f64;
        let objective = key_length_objective(self.n_x, self.n_z, ex, ez, tx, tz, self.k3, self.inputs.f).ok()?;
        Some(Point {
            n_x: self.n_x,
            n_z: self.n_z,
            j_x,
            j_z,
            p_theta_x: p_x,
            p_theta_z: p_z,
            objective,
        })
    }

    fn best(&self) -> Option<Point> {
        let c = self.coarse();
        let (j_lo, _) = theta_for_budget(c.n_sample, c.n_target, c.e, self.inputs.epsilon.log2() - 1e-6)?;
        let j_hi = c.j_max().max(j_lo);
        let score = |j: u64| self.at(j).map_or(f64::NEG_INFINITY, |p| p.objective.nr);
        let j = golden_max_int(j_lo, j_hi, score);
        self.at(j)
    }
}

/// Maximizes a unimodal function on `lo..=hi`, then hill-climbs from the
/// result so that neither neighbour is better.
fn golden_max_int(lo: u64, hi: u64, f: impl Fn(u64) -> f64) -> u64 {
    let (mut a, mut b) = (lo, hi);
    while b - a > 4 {
        let span = (b - a) as f64;
        let c = b - (span * INV_PHI).round() as u64;
        let d = a + (span * INV_PHI).round() as u64;
        if c >= d {
            break;
        }
        if f(c) >= f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    let mut best = a;
    let mut best_v = f(a);
    for j in a + 1..=b {
        let v = f(j);
        if v > best_v {
            best = j;
            best_v = v;
        }
    }
    loop {
        let mut moved = false;
        for cand in [best.checked_sub(1), best.checked_add(1)].into_iter().flatten() {
            if cand < lo || cand > hi {
                continue;
            }
            let v = f(cand);
            if v > best_v {
                best = cand;
                best_v = v;
                moved = true;
            }
        }
        if !moved {
            return best;
        }
    }
}

/// Which basis is chosen with probability `1 - d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    XHeavy,
    ZHeavy,
}

fn counts(n: u64, side: Side, a: f64) -> (f64, u64, u64) {
    let d = 0.5 * 10f64.powf(-a);
    let major = ((n as f64) * (1.0 - d) * (1.0 - d)).floor() as u64;
    let minor = ((n as f64) * d * d).floor() as u64;
    match side {
        Side::XHeavy => (1.0 - d, major, minor),
        Side::ZHeavy => (d, minor, major),
    }
}

fn evaluate(inputs: &PlanInputs, k3: u64, side: Side, a: f64) -> Option<(f64, Point)> {
    let (p_x, n_x, n_z) = counts(inputs.n, side, a);
    if n_x == 0 || n_z == 0 {
        return None;
    }
    Inner::new(inputs, k3, n_x, n_z).best().map(|p| (p_x, p))
}

fn score(r: &Option<(f64, Point)>) -> f64 {
    r.as_ref().map_or(f64::NEG_INFINITY, |(_, p)| p.objective.nr)
}

/// Plans a session: maximizes the finite key length over `p_x`, `theta_x`
/// and `theta_z` at `eps_ph = eps`, with `n_x = n p_x^2`, `n_z = n (1-p_x)^2`.
///
/// Deterministic: grid points are evaluated in parallel but reduced in grid
/// order, and ties go to `p_x >= 1/2`.
pub fn optimize(inputs: &PlanInputs) -> Result<OptimizedPlan, OptimizeError> {
    inputs.validate()?;
    let k3 = k3_simplified(inputs.epsilon, inputs.n)?;
    let steps = (A_MAX / A_STEP).round() as usize;
    let grid: Vec<(Side, f64)> = [Side::XHeavy, Side::ZHeavy]
        .into_iter()
        .flat_map(|s| (0..=steps).map(move |i| (s, i as f64 * A_STEP)))
        .collect();
    let results: Vec<Option<(f64, Point)>> = grid
        .par_iter()
        .map(|&(side, a)| evaluate(inputs, k3, side, a))
        .collect();
    let mut best_idx = None;
    let mut best_v = f64::NEG_INFINITY;
    for (i, r) in results.iter().enumerate() {
        let v = score(r);
        if v > best_v {
            best_v = v;
            best_idx = Some(i);
        }
    }
    let Some(best_idx) = best_idx else {
        return Err(OptimizeError::Infeasible(format!(
            "no bias gives a positive key at n = {}",
            inputs.n
        )));
    };
    if best_v <= 0.0 {
        return Err(OptimizeError::Infeasible(format!(
            "best key length {best_v:.1} is not positive at n = {}",
            inputs.n
        )));
    }
    let (side, a0) = grid[best_idx];
    let mut best = results[best_idx].expect("scored point exists");

    // Golden section in a = -log10(2 d) on the neighbouring grid cells.
    let f = |a: f64| evaluate(inputs, k3, side, a);
    let (mut lo, mut hi) = ((a0 - A_STEP).max(0.0), (a0 + A_STEP).min(A_MAX));
    let mut c = hi - (hi - lo) * INV_PHI;
    let mut d = lo + (hi - lo) * INV_PHI;
    let (mut fc, mut fd) = (f(c), f(d));
    while hi - lo > A_TOL {
        if score(&fc) >= score(&fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - (hi - lo) * INV_PHI;
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + (hi - lo) * INV_PHI;
            fd = f(d);
        }
    }
    for cand in [fc, fd] {
        if score(&cand) > best.1.objective.nr {
            best = cand.expect("finite score");
        }
    }
    build_plan(inputs, k3, best.0, &best.1)
}

/// Plans a session at a fixed basis probability, optimizing only the two
/// deviations.
pub fn optimize_fixed_px(inputs: &PlanInputs, p_x: f64) -> Result<OptimizedPlan, OptimizeError> {
    inputs.validate()?;
    if !(p_x > 0.0 && p_x < 1.0) {
        return Err(OptimizeError::Domain(format!("p_x = {p_x} outside (0, 1)")));
    }
    let k3 = k3_simplified(inputs.epsilon, inputs.n)?;
    let n = inputs.n as f64;
    let n_x = (n * p_x * p_x).floor() as u64;
    let n_z = (n * (1.0 - p_x) * (1.0 - p_x)).floor() as u64;
    if n_x == 0 || n_z == 0 {
        return Err(OptimizeError::Infeasible("a basis receives no bits".into()));
    }
    let point = Inner::new(inputs, k3, n_x, n_z)
        .best()
        .ok_or_else(|| OptimizeError::Infeasible("phase-error budget cannot be met".into()))?;
    if point.objective.nr <= 0.0 {
        return Err(OptimizeError::Infeasible(format!(
            "key length {:.1} is not positive",
            point.objective.nr
        )));
    }
    build_plan(inputs, k3, p_x, &point)
}

fn build_plan(inputs: &PlanInputs, k3: u64, p_x: f64, pt: &Point) -> Result<OptimizedPlan, OptimizeError> {
    let obj = pt.objective;
    let keyed_x = if obj.key_x { pt.n_x } else { 0 };
    let keyed_z = if obj.key_z { pt.n_z } else { 0 };
    let m = keyed_x + keyed_z;
    // t_oe grows as l shrinks, so this sequence decreases to a fixed point.
    let mut l = obj.pa_bits.floor().max(1.0) as u64;
    let mut alloc = allocate_costs(k3, inputs.n, keyed_x, keyed_z, l)?;
    for _ in 0..64 {
        let next = obj.key_length(alloc.t_oe);
        if next == l {
            break;
        }
        l = next;
        if l == 0 {
            return Err(OptimizeError::Infeasible("privacy amplification leaves no key".into()));
        }
        alloc = allocate_costs(k3, inputs.n, keyed_x, keyed_z, l)?;
    }
    let failure = alloc.failure(inputs.n, m, l);
    let p_theta_x = Log2Prob::from_log2(pt.p_theta_x);
    let p_theta_z = Log2Prob::from_log2(pt.p_theta_z);
    let eps_ph = Log2Prob::sum([p_theta_x, p_theta_z]);
    let eps_final = Log2Prob::sum([failure.eps3, eps_ph]);
    let la = log2_a(inputs.n, m, l);
    let k_ec_predicted = (obj.ec_bits - 1e-9).ceil().max(0.0) as u64;
    let net_key = l as i64 - (2 * alloc.k_bs + k_ec_predicted + alloc.k_ev + alloc.k_pa) as i64;
    Ok(OptimizedPlan {
        inputs: *inputs,
        p_x,
        q_x: pt.n_x as f64 / (pt.n_x + pt.n_z) as f64,
        n_x: pt.n_x,
        n_z: pt.n_z,
        theta_x: pt.theta_x(),
        theta_z: pt.theta_z(),
        k3,
        allocation: alloc,
        l,
        objective: obj,
        net_key,
        k_ec_predicted,
        log2_a: la,
        p_theta_x,
        p_theta_z,
        eps_ph,
        failure,
        eps3_closed_form: epsilon3(k3, la),
        eps_final,
        zeta: zeta_from_log2(eps_final.log2()),
        asymptotic_key: super::asymptotic_key(inputs.n, inputs.e_bx, inputs.e_bz)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(n: u64) -> PlanInputs {
        PlanInputs {
            n,
            e_bx: 0.04,
            e_bz: 0.04,
            epsilon: 1e-7,
            f: 1.0,
        }
    }

    #[test]
    fn theta_search_is_minimal() {
        let budget = (1e-7f64 / 2.0).log2();
        let (j, b) = theta_for_budget(100_000, 20_000, 0.04, budget).unwrap();
        assert!(b <= budget);
        let prev = phase_sampling_bound_log2(100_000, 20_000, 0.04, (j - 1) as f64 / 20_000.0).unwrap();
        assert!(prev > budget);
        assert_eq!(theta_for_budget(100_000, 20_000, 0.04, 10.0).unwrap().0, 0);
        assert!(theta_for_budget(10, 10, 0.04, -1000.0).is_none());
    }

    #[test]
    fn golden_int_finds_peak() {
        for peak in [0u64, 1, 7, 50, 99, 100] {
            let j = golden_max_int(0, 100, |j| -((j as f64 - peak as f64).powi(2)));
            assert_eq!(j, peak);
        }
    }

    #[test]
    fn plan_invariants_mid_size() {
        let plan = optimize(&inputs(1_000_000)).unwrap();
        assert!(plan.allocation.cost() <= plan.k3);
        assert!(plan.eps_ph.linear() <= 1e-7 * (1.0 + 1e-12));
        let ratio = plan.eps_final.linear() / 1e-7;
        assert!((1.0..=1.01).contains(&ratio), "{ratio}");
        assert!(plan.failure.eps3.linear() < 1e-9);
        // theta on the quantum of the opposite basis.
        let jx = plan.theta_x * plan.n_z as f64;
        let jz = plan.theta_z * plan.n_x as f64;
        assert!((jx - jx.round()).abs() < 1e-6 && (jz - jz.round()).abs() < 1e-6);
        assert!(plan.q_x >= 0.5);
    }

    #[test]
    fn swapped_errors_mirror_the_plan() {
        let a = PlanInputs {
            e_bx: 0.03,
            e_bz: 0.05,
            ..inputs(200_000)
        };
        let b = PlanInputs {
            e_bx: 0.05,
            e_bz: 0.03,
            ..inputs(200_000)
        };
        let pa = optimize(&a).unwrap();
        let pb = optimize(&b).unwrap();
        assert_eq!(pa.n_x, pb.n_z);
        assert_eq!(pa.n_z, pb.n_x);
        assert_eq!(pa.theta_x, pb.theta_z);
        assert_eq!(pa.theta_z, pb.theta_x);
        assert_eq!(pa.l, pb.l);
    }

    #[test]
    fn tiny_n_infeasible() {
        assert!(matches!(optimize(&inputs(500)), Err(OptimizeError::Infeasible(_))));
    }
}
