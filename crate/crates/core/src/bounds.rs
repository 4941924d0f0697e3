//! Closed-form statistics for phase-error estimation.
//!
//! The phase error rate of one basis is bounded from the bit error rate
//! observed in the other by a sampling-without-replacement argument. The
//! worst-case single-`m` hypergeometric term is bounded in closed form by
//!
//! ```text
//! P_theta < sqrt(N) / sqrt(e (1 - e) n_s n_t) * 2^(-N xi(theta))
//! xi(theta) = H(e + theta - q theta) - q H(e) - (1 - q) H(e + theta)
//! ```
//!
//! with `N = n_s + n_t` and `q = n_s / N`. Everything is evaluated as log2.

use std::f64::consts::LN_2;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::prob::Log2Prob;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("domain error: {0}")]
    Domain(String),
}

fn domain(msg: impl Into<String>) -> BoundsError {
    BoundsError::Domain(msg.into())
}

/// Below this population size the exact hypergeometric term uses big
/// integers; above it, log-gamma.
const EXACT_HYPERGEOMETRIC_MAX_N: u64 = 10_000;
const EXACT_BINOMIAL_SUM_MAX_N: u64 = 4000;

/// `H(x) = -x log2 x - (1-x) log2 (1-x)`, with `H(0) = H(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64, BoundsError> {
    if !(0.0..=1.0).contains(&x) {
        return Err(domain(format!("entropy argument {x} outside [0, 1]")));
    }
    Ok(entropy_unchecked(x))
}

#[inline]
pub(crate) fn entropy_unchecked(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

/// Exponent coefficient of the sampling bound.
pub fn xi(e_b: f64, q: f64, theta: f64) -> Result<f64, BoundsError> {
    if !(q > 0.0 && q < 1.0) {
        return Err(domain(format!("bias ratio {q} outside (0, 1)")));
    }
    if e_b < 0.0 || theta < 0.0 {
        return Err(domain(format!("negative error rate {e_b} or deviation {theta}")));
    }
    if e_b + theta > 1.0 {
        return Err(domain(format!("e_b + theta = {} exceeds 1", e_b + theta)));
    }
    Ok(xi_unchecked(e_b, q, theta))
}

#[inline]
fn xi_unchecked(e_b: f64, q: f64, theta: f64) -> f64 {
    entropy_unchecked(e_b + theta - q * theta)
        - q * entropy_unchecked(e_b)
        - (1.0 - q) * entropy_unchecked(e_b + theta)
}

/// Second-order expansion of [`xi`] in `theta`: `q(1-q) theta^2 / (2 ln2 e (1-e))`.
pub fn xi_taylor(e_b: f64, q: f64, theta: f64) -> f64 {
    q * (1.0 - q) * theta * theta / (2.0 * LN_2 * e_b * (1.0 - e_b))
}

/// Replaces a zero error count by one error (`e_b = 1/n_sample`).
pub fn zero_error_substitute(e_b: f64, n_sample: u64) -> f64 {
    if e_b * (n_sample as f64) < 0.5 {
        1.0 / n_sample as f64
    } else {
        e_b
    }
}

/// log2 of the closed-form bound on `Pr{e_phase >= e_b + theta}` when `n_sample`
/// bits with error rate `e_b` are used to estimate `n_target` unmeasured bits.
///
/// Not clamped: for small `theta` the value can exceed 0 (a vacuous bound).
/// `e_b` must be strictly inside (0, 1); apply [`zero_error_substitute`] first.
pub fn phase_sampling_bound_log2(n_sample: u64, n_target: u64, e_b: f64, theta: f64) -> Result<f64, BoundsError> {
    if n_sample == 0 || n_target == 0 {
        return Err(domain("sample and target sizes must be at least 1"));
    }
    if !(e_b > 0.0 && e_b < 1.0) {
        return Err(domain(format!(
            "bit error rate {e_b} must be in (0, 1); substitute 1/n_sample for a zero count"
        )));
    }
    let ns = n_sample as f64;
    let nt = n_target as f64;
    let total = ns + nt;
    let x = xi(e_b, ns / total, theta)?;
    let prefactor = 0.5 * total.log2() - 0.5 * (e_b * (1.0 - e_b) * ns * nt).log2();
    Ok(prefactor - total * x)
}

/// The closed-form bound expressed through the hypergeometric parameters:
/// `k` errors seen in a sample of `n` out of `N`, with `m` errors in total.
///
/// Returns `None` when the deviation is not positive (the bound says nothing).
/// A zero count is replaced by `k = 1` at the same `m`.
pub fn sampling_bound_from_counts_log2(
    total: u64,
    sample: u64,
    k: u64,
    m: u64,
) -> Result<Option<f64>, BoundsError> {
    if sample == 0 || sample >= total {
        return Err(domain("need 0 < sample < total"));
    }
    let k = k.max(1);
    if k >= sample || m < k || m - k > total - sample {
        return Err(domain(format!("inconsistent counts k={k}, m={m}, n={sample}, N={total}")));
    }
    let e_b = k as f64 / sample as f64;
    let e_p = (m - k) as f64 / (total - sample) as f64;
    let theta = e_p - e_b;
    if theta <= 0.0 {
        return Ok(None);
    }
    phase_sampling_bound_log2(sample, total - sample, e_b, theta).map(Some)
}

fn binomial_big(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

fn ln_binomial(n: u64, k: u64) -> f64 {
    libm::lgamma(n as f64 + 1.0) - libm::lgamma(k as f64 + 1.0) - libm::lgamma((n - k) as f64 + 1.0)
}

fn big_log2(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits").log2();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    top.to_f64().expect("fits").log2() + shift as f64
}

/// `Pr{k | m, n, N} = C(m,k) C(N-m, n-k) / C(N, n)`: exactly `k` marked items
/// in a uniform `n`-subset of `N` items of which `m` are marked.
///
/// Impossible arguments give 0.
pub fn hypergeometric_tail_exact(total: u64, n: u64, k: u64, m: u64) -> f64 {
    if n > total || m > total || k > n || k > m || n - k > total - m {
        return 0.0;
    }
    if total <= EXACT_HYPERGEOMETRIC_MAX_N {
        let num = binomial_big(m, k) * binomial_big(total - m, n - k);
        let den = binomial_big(total, n);
        // Shift so the quotient keeps at least 64 significant bits however
        // small the probability is.
        let shift = 64 + den.bits().saturating_sub(num.bits());
        let scaled = (num << shift) / &den;
        return libm::ldexp(scaled.to_f64().expect("below 2^130"), -(shift as i32));
    }
    hypergeometric_log2(total, n, k, m).exp2()
}

/// log2 of [`hypergeometric_tail_exact`] via log-gamma; `-inf` if impossible.
pub fn hypergeometric_log2(total: u64, n: u64, k: u64, m: u64) -> f64 {
    if n > total || m > total || k > n || k > m || n - k > total - m {
        return f64::NEG_INFINITY;
    }
    (ln_binomial(m, k) + ln_binomial(total - m, n - k) - ln_binomial(total, n)) / LN_2
}

/// Sizes, error rates and deviations for both bases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingInput {
    pub n_x: u64,
    pub n_z: u64,
    pub e_bx: f64,
    pub e_bz: f64,
    pub theta_x: f64,
    pub theta_z: f64,
}

impl SamplingInput {
    pub fn validate(&self) -> Result<(), BoundsError> {
        if self.n_x == 0 || self.n_z == 0 {
            return Err(domain("n_x and n_z must be at least 1"));
        }
        for (name, e, t) in [("x", self.e_bx, self.theta_x), ("z", self.e_bz, self.theta_z)] {
            if !(0.0..=1.0).contains(&e) {
                return Err(domain(format!("e_b{name} = {e} outside [0, 1]")));
            }
            if t < 0.0 || e + t > 1.0 {
                return Err(domain(format!("theta_{name} = {t} invalid for e_b{name} = {e}")));
            }
        }
        Ok(())
    }

    /// `n_x / (n_x + n_z)`.
    pub fn q_x(&self) -> f64 {
        self.n_x as f64 / (self.n_x + self.n_z) as f64
    }
}

/// Unclamped log2 bounds `(P_theta_x, P_theta_z)`.
///
/// `P_theta_x` bounds the phase errors of the Z bits using the X-basis bit
/// error rate; `P_theta_z` is the mirror image. Zero error counts are
/// substituted before evaluation.
pub fn phase_failure_components(s: &SamplingInput) -> Result<(f64, f64), BoundsError> {
    s.validate()?;
    let e_x = zero_error_substitute(s.e_bx, s.n_x);
    let e_z = zero_error_substitute(s.e_bz, s.n_z);
    let p_x = bound_or_vacuous(s.n_x, s.n_z, e_x, s.theta_x)?;
    let p_z = bound_or_vacuous(s.n_z, s.n_x, e_z, s.theta_z)?;
    Ok((p_x, p_z))
}

fn bound_or_vacuous(n_s: u64, n_t: u64, e: f64, theta: f64) -> Result<f64, BoundsError> {
    if e >= 1.0 || e + theta > 1.0 {
        return Ok(0.0);
    }
    phase_sampling_bound_log2(n_s, n_t, e, theta)
}

/// `eps_ph <= P_theta_x + P_theta_z`, clamped to 1.
pub fn phase_failure_total(s: &SamplingInput) -> Result<Log2Prob, BoundsError> {
    let (p_x, p_z) = phase_failure_components(s)?;
    Ok(Log2Prob::sum([Log2Prob::from_log2(p_x), Log2Prob::from_log2(p_z)]).clamp_to_one())
}

/// Large-sample, balanced-basis form
/// `1 / (2 sqrt(2 n e (1-e))) * exp(-theta^2 n / (4 e (1-e)))`, with `n` the
/// number of bits in each basis.
pub fn gaussian_approx_failure(n: u64, e_b: f64, theta: f64) -> Result<f64, BoundsError> {
    Ok(gaussian_approx_failure_log2(n, e_b, theta)?.exp2())
}

pub fn gaussian_approx_failure_log2(n: u64, e_b: f64, theta: f64) -> Result<f64, BoundsError> {
    if !(e_b > 0.0 && e_b < 1.0) {
        return Err(domain(format!("error rate {e_b} must be in (0, 1)")));
    }
    if n == 0 || theta < 0.0 {
        return Err(domain("need n >= 1 and theta >= 0"));
    }
    let v = e_b * (1.0 - e_b);
    let n = n as f64;
    let prefactor = -(2.0 * (2.0 * n * v).sqrt()).log2();
    Ok(prefactor - theta * theta * n / (4.0 * v) / LN_2)
}

/// log2 of the number of phase-error patterns on `n_bits` bits with rate
/// below `e_b + theta`.
///
/// Uses `n_bits H(e_b + theta)` when `e_b + theta < 1/3`, otherwise the exact
/// binomial sum from [`phase_pattern_count_exact_log2`].
pub fn phase_pattern_count_log2(n_bits: u64, e_b: f64, theta: f64) -> Result<f64, BoundsError> {
    let rate = e_b + theta;
    if !(0.0..=1.0).contains(&rate) || e_b < 0.0 || theta < 0.0 {
        return Err(domain(format!("pattern rate {rate} outside [0, 1]")));
    }
    if rate < 1.0 / 3.0 {
        Ok(n_bits as f64 * entropy_unchecked(rate))
    } else {
        Ok(phase_pattern_count_exact_log2(n_bits, rate))
    }
}

/// `log2 sum_{k=0}^{ceil(rate n - 1)} C(n, k)`; `-inf` for an empty sum.
pub fn phase_pattern_count_exact_log2(n_bits: u64, rate: f64) -> f64 {
    let top = (rate * n_bits as f64 - 1.0 - 1e-9).ceil();
    if top < 0.0 {
        return f64::NEG_INFINITY;
    }
    let top = (top as u64).min(n_bits);
    if n_bits <= EXACT_BINOMIAL_SUM_MAX_N {
        let mut sum = BigUint::zero();
        let mut term = BigUint::one();
        for k in 0..=top {
            if k > 0 {
                term = term * BigUint::from(n_bits - k + 1) / BigUint::from(k);
            }
            sum += &term;
        }
        return big_log2(&sum);
    }
    let logs: Vec<Log2Prob> = (0..=top)
        .map(|k| Log2Prob::from_log2(ln_binomial(n_bits, k) / LN_2))
        .collect();
    Log2Prob::sum(logs).log2()
}

/// Exact check of `sum_{k<m} C(n,k) < C(n,m)`.
pub fn binomial_prefix_below_term(n: u64, m: u64) -> bool {
    let mut sum = BigUint::zero();
    for k in 0..m {
        sum += binomial_big(n, k);
    }
    sum < binomial_big(n, m)
}

/// Mixed-basis phase estimate from Azuma's inequality.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AzumaBound {
    /// `(1 + alpha) eps_az`: allowed gap between `e_p` and `alpha e_b`.
    pub deviation: f64,
    /// `4 exp(-n eps_az^2)`, unclamped.
    pub prob: f64,
    /// `2 exp(-n eps_az^2 / 2)` for a single rate.
    pub single_variable_prob: f64,
}

pub fn azuma_phase_bound(n: u64, eps_az: f64, alpha: f64) -> Result<AzumaBound, BoundsError> {
    if n == 0 || eps_az < 0.0 || alpha < 1.0 {
        return Err(domain("need n >= 1, eps_az >= 0, alpha >= 1"));
    }
    let n = n as f64;
    Ok(AzumaBound {
        deviation: (1.0 + alpha) * eps_az,
        prob: 4.0 * (-n * eps_az * eps_az).exp(),
        single_variable_prob: 2.0 * (-n * eps_az * eps_az / 2.0).exp(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn entropy_values() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // 0.242292189082414... from a 30-digit evaluation.
        assert!((binary_entropy(0.04).unwrap() - 0.242_292_189_082_414_8).abs() < 1e-12);
        assert!((binary_entropy(0.3).unwrap() - binary_entropy(0.7).unwrap()).abs() < 1e-15);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.1).is_err());
    }

    #[test]
    fn xi_zero_at_zero_theta_and_positive_otherwise() {
        assert!(xi(0.04, 0.3, 0.0).unwrap().abs() < 1e-15);
        let v = xi(0.04, 0.5, 0.01).unwrap();
        // 30-digit evaluation: 4.20460836495196e-4
        assert!((v - 4.204_608_364_951_96e-4).abs() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..1000 {
            let e = rng.gen_range(0.0..0.5);
            let q = rng.gen_range(0.001..0.999);
            let theta = rng.gen_range(1e-4..(1.0 - e));
            assert!(xi(e, q, theta).unwrap() > 0.0, "e={e} q={q} theta={theta}");
        }
        assert!(xi(0.9, 0.5, 0.2).is_err());
        assert!(xi(0.1, 1.0, 0.2).is_err());
    }

    #[test]
    fn xi_taylor_agreement_is_third_order() {
        for &e in &[0.01, 0.04, 0.1, 0.2] {
            for &q in &[0.1, 0.5, 0.9, 0.998] {
                for i in 1..=20 {
                    let theta = 0.0005 * i as f64;
                    let diff = (xi(e, q, theta).unwrap() - xi_taylor(e, q, theta)).abs();
                    // |H'''(e)|/6 * q(1-q)|1-2q|... is bounded by |H'''| theta^3 / 6 * 2.
                    let h3 = (1.0 - 2.0 * e) / (LN_2 * e * e * (1.0 - e) * (1.0 - e));
                    let c = 2.0 * h3.abs();
                    assert!(diff <= c * theta.powi(3), "e={e} q={q} theta={theta}: {diff}");
                }
            }
        }
    }

    #[test]
    fn hypergeometric_small_enumeration() {
        // Enumerate every 2-subset of {0,1,2,3} with items {0,1} marked.
        let mut counts = [0u32; 3];
        for a in 0..4 {
            for b in (a + 1)..4 {
                counts[(a < 2) as usize + (b < 2) as usize] += 1;
            }
        }
        assert_eq!(counts, [1, 4, 1]);
        assert!((hypergeometric_tail_exact(4, 2, 1, 2) - 4.0 / 6.0).abs() < 1e-15);
        assert!((hypergeometric_tail_exact(4, 2, 0, 2) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(hypergeometric_tail_exact(4, 2, 3, 2), 0.0);
        assert_eq!(hypergeometric_tail_exact(4, 3, 0, 3), 0.0);
    }

    #[test]
    fn hypergeometric_normalizes() {
        for total in 1..=60u64 {
            for n in 0..=total {
                for m in 0..=total {
                    let s: f64 = (0..=n).map(|k| hypergeometric_tail_exact(total, n, k, m)).sum();
                    assert!((s - 1.0).abs() < 1e-12, "N={total} n={n} m={m}: {s}");
                }
            }
        }
    }

    #[test]
    fn lgamma_route_matches_exact_route() {
        for (total, n, k, m) in [(150, 40, 5, 30), (200, 100, 50, 100), (120, 7, 1, 9)] {
            let exact = hypergeometric_tail_exact(total, n, k, m);
            let lg = hypergeometric_log2(total, n, k, m).exp2();
            assert!((exact - lg).abs() <= 1e-9 * exact, "{exact} vs {lg}");
        }
    }

    #[test]
    fn sampling_bound_vacuous_at_zero_theta_and_decreasing() {
        // At theta = 0 only the prefactor remains.
        let b0 = phase_sampling_bound_log2(5_000_000, 5_000_000, 0.04, 0.0).unwrap();
        let pre = 0.5 * (1e7f64 / (0.04 * 0.96 * 2.5e13)).log2();
        assert!((b0 - pre).abs() < 1e-9);
        assert!(phase_sampling_bound_log2(5, 5, 0.2, 0.0).unwrap() > 0.0);
        let mut prev = b0;
        for i in 1..=200 {
            let theta = i as f64 * 1e-4;
            let b = phase_sampling_bound_log2(5_000_000, 5_000_000, 0.04, theta).unwrap();
            assert!(b < prev);
            prev = b;
        }
        assert!(phase_sampling_bound_log2(10, 10, 0.0, 0.1).is_err());
    }

    #[test]
    fn zero_error_substitution_equals_k_one() {
        let (total, sample, m) = (50u64, 20u64, 12u64);
        let at_zero = sampling_bound_from_counts_log2(total, sample, 0, m).unwrap();
        let at_one = sampling_bound_from_counts_log2(total, sample, 1, m).unwrap();
        assert_eq!(at_zero, at_one);
        let e = zero_error_substitute(0.0, sample);
        assert_eq!(e, 1.0 / 20.0);
        let theta = (m - 1) as f64 / 30.0 - e;
        let direct = phase_sampling_bound_log2(sample, total - sample, e, theta).unwrap();
        assert_eq!(at_one.unwrap(), direct);
    }

    #[test]
    fn phase_total_symmetry_and_vacuity() {
        let s = SamplingInput {
            n_x: 1000,
            n_z: 1000,
            e_bx: 0.05,
            e_bz: 0.05,
            theta_x: 0.03,
            theta_z: 0.03,
        };
        let (px, pz) = phase_failure_components(&s).unwrap();
        assert_eq!(px, pz);
        let total = phase_failure_total(&s).unwrap();
        assert!((total.log2() - (px + 1.0)).abs() < 1e-12);

        let flat = SamplingInput {
            n_x: 5,
            n_z: 5,
            e_bx: 0.2,
            e_bz: 0.2,
            theta_x: 0.0,
            theta_z: 0.0,
        };
        let (px, pz) = phase_failure_components(&flat).unwrap();
        assert!(Log2Prob::sum([Log2Prob::from_log2(px), Log2Prob::from_log2(pz)]).log2() >= 0.0);
        assert_eq!(phase_failure_total(&flat).unwrap(), Log2Prob::ONE);
    }

    #[test]
    fn gaussian_form_monotone() {
        let v = gaussian_approx_failure(1_000_000, 0.04, 0.01).unwrap();
        // 30-digit evaluation of the closed form.
        assert!((v / 3.254_513_458_922_322e-286 - 1.0).abs() < 1e-9);
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let p = gaussian_approx_failure_log2(100_000, 0.04, i as f64 * 1e-3).unwrap();
            assert!(p < prev);
            prev = p;
        }
        let mut prev = f64::INFINITY;
        for n in [10u64, 100, 1000, 10_000] {
            let p = gaussian_approx_failure_log2(n, 0.04, 0.01).unwrap();
            assert!(p < prev);
            prev = p;
        }
        assert!(gaussian_approx_failure(10, 0.0, 0.1).is_err());
        // Prefactor below one exactly when 2 sqrt(2 n e (1-e)) > 1.
        for n in [1u64, 2, 3, 4, 10, 100] {
            let pre = gaussian_approx_failure_log2(n, 0.04, 0.0).unwrap();
            let big = 2.0 * (2.0 * n as f64 * 0.04 * 0.96).sqrt() > 1.0;
            assert_eq!(pre < 0.0, big, "n={n}");
        }
    }

    #[test]
    fn gaussian_small_theta_relation_to_closed_form() {
        // Balanced bases, n bits each: the closed form's prefactor is
        // 2 / sqrt(2 n e (1-e)), four times the Gaussian one, and the
        // exponents agree to second order.
        for n in [100_000u64, 1_000_000] {
            let theta = 1e-5;
            let closed = phase_sampling_bound_log2(n, n, 0.04, theta).unwrap();
            let gauss = gaussian_approx_failure_log2(n, 0.04, theta).unwrap();
            assert!((closed - gauss - 2.0).abs() < 1e-3, "n={n}: {}", closed - gauss);
        }
    }

    #[test]
    fn pattern_count_cases() {
        assert_eq!(phase_pattern_count_exact_log2(40, 1.0 / 40.0), 0.0);
        assert_eq!(phase_pattern_count_exact_log2(40, 0.0), f64::NEG_INFINITY);
        let shortcut = phase_pattern_count_log2(1000, 0.04, 0.01).unwrap();
        assert!((shortcut - 1000.0 * entropy_unchecked(0.05)).abs() < 1e-9);
        // Above 1/3 the exact sum is used.
        let exact = phase_pattern_count_log2(30, 0.3, 0.1).unwrap();
        assert_eq!(exact, phase_pattern_count_exact_log2(30, 0.4));
        assert!(phase_pattern_count_log2(30, 0.9, 0.2).is_err());
    }

    #[test]
    fn entropy_dominates_exact_pattern_count() {
        for n in 1..=40u64 {
            for num in 1..=(n / 2) {
                let rate = num as f64 / n as f64;
                let exact = phase_pattern_count_exact_log2(n, rate);
                assert!(n as f64 * entropy_unchecked(rate) >= exact - 1e-12, "n={n} rate={rate}");
            }
        }
    }

    #[test]
    fn lgamma_pattern_sum_matches_bigint() {
        let exact = phase_pattern_count_exact_log2(4000, 0.4);
        let top = (0.4f64 * 4000.0 - 1.0 - 1e-9).ceil() as u64;
        let logs: Vec<Log2Prob> = (0..=top)
            .map(|k| Log2Prob::from_log2(ln_binomial(4000, k) / LN_2))
            .collect();
        assert!((Log2Prob::sum(logs).log2() - exact).abs() < 1e-6);
    }

    #[test]
    fn binomial_prefix_claim_small() {
        assert!(binomial_prefix_below_term(40, 13));
        assert!(binomial_prefix_below_term(9, 3));
        // Fails above n/3 for some n, e.g. n = 4, m = 2: 1 + 4 = 5 < 6 holds, n=3, m=2: 1+3 = 4 > 3.
        assert!(!binomial_prefix_below_term(3, 2));
    }

    #[test]
    fn azuma_values() {
        let b = azuma_phase_bound(200, 0.1, 1.0).unwrap();
        assert!((b.single_variable_prob - 0.735_758_882_342_884_6).abs() < 1e-12);
        assert!((b.deviation - 0.2).abs() < 1e-15);
        assert_eq!(azuma_phase_bound(10, 0.0, 1.5).unwrap().prob, 4.0);
        assert!(azuma_phase_bound(0, 0.1, 1.0).is_err());
        assert!(azuma_phase_bound(10, 0.1, 0.5).is_err());
    }

    #[test]
    fn azuma_is_weaker_than_sampling_for_bb84() {
        let n = 100_000u64;
        for i in 1..=20 {
            let theta = 0.001 * i as f64;
            let az = azuma_phase_bound(n, theta / 2.0, 1.0).unwrap();
            let sampling = phase_sampling_bound_log2(n / 2, n / 2, 0.04, theta).unwrap();
            assert!(az.prob.min(1.0).log2() >= sampling.min(0.0), "theta={theta}");
        }
    }
}
