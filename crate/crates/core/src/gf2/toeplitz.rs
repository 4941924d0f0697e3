use serde::Serialize;

use super::clmul::poly_mul;
use super::{BitString, Gf2Error};

/// Rows at or below this use the sliding-window dot product; above it the
/// product goes through carry-less polynomial multiplication.
const WINDOW_ROWS_MAX: usize = 128;

/// An `rows x cols` Toeplitz matrix over GF(2) described by its diagonals.
///
/// `diag` holds `(a_{-cols+1}, ..., a_0, ..., a_{rows-1})`, so element
/// `(i, j)` is `diag[i - j + cols - 1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ToeplitzSpec {
    rows: usize,
    cols: usize,
    diag: BitString,
}

impl ToeplitzSpec {
    pub fn new(rows: usize, cols: usize, diag: BitString) -> Result<Self, Gf2Error> {
        if cols == 0 {
            return Err(Gf2Error::InvalidSpec("Toeplitz matrix needs at least one column".into()));
        }
        let expected = rows + cols - 1;
        if diag.len() != expected {
            return Err(Gf2Error::LengthMismatch {
                expected,
                actual: diag.len(),
            });
        }
        Ok(ToeplitzSpec { rows, cols, diag })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn diag(&self) -> &BitString {
        &self.diag
    }

    pub fn element(&self, i: usize, j: usize) -> bool {
        self.diag.get(i + self.cols - 1 - j)
    }
}

/// Computes `M x` for the Toeplitz matrix `M` described by `spec`.
pub fn toeplitz_apply(spec: &ToeplitzSpec, x: &BitString) -> Result<BitString, Gf2Error> {
    check_cols(spec, x)?;
    if spec.rows <= WINDOW_ROWS_MAX {
        Ok(apply_window(spec, x))
    } else {
        Ok(apply_clmul(spec, x))
    }
}

/// Reference triple-loop multiply; the fast paths must agree with it bit for bit.
pub fn toeplitz_apply_naive(spec: &ToeplitzSpec, x: &BitString) -> Result<BitString, Gf2Error> {
    check_cols(spec, x)?;
    let mut out = BitString::zeros(spec.rows);
    for i in 0..spec.rows {
        let mut acc = false;
        for j in 0..spec.cols {
            acc ^= spec.element(i, j) & x.get(j);
        }
        out.set(i, acc);
    }
    Ok(out)
}

fn check_cols(spec: &ToeplitzSpec, x: &BitString) -> Result<(), Gf2Error> {
    if x.len() != spec.cols {
        return Err(Gf2Error::LengthMismatch {
            expected: spec.cols,
            actual: x.len(),
        });
    }
    Ok(())
}

// out[i] = parity(reverse(x) & diag[i .. i + cols])
pub(crate) fn apply_window(spec: &ToeplitzSpec, x: &BitString) -> BitString {
    let rx = x.reversed();
    let mut out = BitString::zeros(spec.rows);
    for i in 0..spec.rows {
        if spec.diag.dot_at(i, &rx) {
            out.set(i, true);
        }
    }
    out
}

// With A(z) = sum diag[d] z^d and X(z) = sum x[j] z^j, out[i] is the
// coefficient of z^(i + cols - 1) in A(z) X(z).
pub(crate) fn apply_clmul(spec: &ToeplitzSpec, x: &BitString) -> BitString {
    let product = poly_mul(spec.diag.words(), x.words());
    let total_bits = product.len() * 64;
    let prod = BitString::from_words(product, total_bits);
    prod.slice(spec.cols - 1, spec.rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hand_computed_2x3() {
        // diag = (a_-2, a_-1, a_0, a_1) = (1, 0, 1, 1) gives M = [[1,0,1],[1,1,0]].
        let spec = ToeplitzSpec::new(2, 3, BitString::parse("1011").unwrap()).unwrap();
        assert_eq!(spec.element(0, 0), true);
        assert_eq!(spec.element(0, 1), false);
        assert_eq!(spec.element(0, 2), true);
        assert_eq!(spec.element(1, 0), true);
        assert_eq!(spec.element(1, 1), true);
        assert_eq!(spec.element(1, 2), false);
        let x = BitString::parse("110").unwrap();
        assert_eq!(toeplitz_apply(&spec, &x).unwrap(), BitString::parse("10").unwrap());
        assert_eq!(apply_clmul(&spec, &x), BitString::parse("10").unwrap());
    }

    #[test]
    fn zero_matrix_gives_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (l, m) in [(3, 7), (200, 150), (1, 1)] {
            let spec = ToeplitzSpec::new(l, m, BitString::zeros(l + m - 1)).unwrap();
            let x = BitString::random(m, &mut rng);
            assert!(toeplitz_apply(&spec, &x).unwrap().is_zero());
        }
    }

    #[test]
    fn identity_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for m in [1, 5, 64, 129, 300] {
            let mut diag = BitString::zeros(2 * m - 1);
            diag.set(m - 1, true);
            let spec = ToeplitzSpec::new(m, m, diag).unwrap();
            let x = BitString::random(m, &mut rng);
            assert_eq!(toeplitz_apply(&spec, &x).unwrap(), x);
        }
    }

    #[test]
    fn dimension_errors() {
        assert!(ToeplitzSpec::new(2, 3, BitString::zeros(5)).is_err());
        assert!(ToeplitzSpec::new(2, 0, BitString::zeros(1)).is_err());
        let spec = ToeplitzSpec::new(2, 3, BitString::zeros(4)).unwrap();
        assert!(matches!(
            toeplitz_apply(&spec, &BitString::zeros(4)),
            Err(Gf2Error::LengthMismatch { expected: 3, actual: 4 })
        ));
    }

    #[test]
    fn zero_rows_is_empty_output() {
        let spec = ToeplitzSpec::new(0, 10, BitString::ones(9)).unwrap();
        let out = toeplitz_apply(&spec, &BitString::ones(10)).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn both_fast_paths_match_naive() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let l = rng.gen_range(1..=256);
            let m = rng.gen_range(1..=256);
            let spec = ToeplitzSpec::new(l, m, BitString::random(l + m - 1, &mut rng)).unwrap();
            let x = BitString::random(m, &mut rng);
            let naive = toeplitz_apply_naive(&spec, &x).unwrap();
            assert_eq!(apply_window(&spec, &x), naive);
            assert_eq!(apply_clmul(&spec, &x), naive);
        }
    }

    #[test]
    fn linear_in_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let l = rng.gen_range(1..=300);
            let m = rng.gen_range(1..=300);
            let spec = ToeplitzSpec::new(l, m, BitString::random(l + m - 1, &mut rng)).unwrap();
            let x = BitString::random(m, &mut rng);
            let y = BitString::random(m, &mut rng);
            let lhs = toeplitz_apply(&spec, &x.xor(&y).unwrap()).unwrap();
            let rhs = toeplitz_apply(&spec, &x)
                .unwrap()
                .xor(&toeplitz_apply(&spec, &y).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }
}
