//! LFSR-generated Toeplitz hashing (Krawczyk's construction) used for
//! message authentication and error verification.
//!
//! A degree-`k` connection polynomial `p(x) = x^k + sum c_i x^i` and a
//! nonzero `k`-bit start state define the sequence
//! `s_{t+k} = sum_i c_i s_{t+i}`. Column `j` of the `k x n` hashing matrix is
//! the register window `(s_j, ..., s_{j+k-1})`, so `M(i, j) = s_{i+j}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::poly::Gf2Poly;
use super::toeplitz::ToeplitzSpec;
use super::{BitString, Gf2Error};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LfsrToeplitzSpec {
    tag_len: usize,
    msg_len: usize,
    poly: Gf2Poly,
    state: BitString,
}

impl LfsrToeplitzSpec {
    pub fn new(tag_len: usize, msg_len: usize, poly: Gf2Poly, state: BitString) -> Result<Self, Gf2Error> {
        if tag_len == 0 {
            return Err(Gf2Error::InvalidSpec("tag length must be at least 1".into()));
        }
        if poly.degree() != Some(tag_len) {
            return Err(Gf2Error::InvalidSpec(format!(
                "connection polynomial must have degree {tag_len}, got {:?}",
                poly.degree()
            )));
        }
        if !poly.is_irreducible() {
            return Err(Gf2Error::InvalidSpec("connection polynomial is reducible".into()));
        }
        if state.len() != tag_len {
            return Err(Gf2Error::LengthMismatch {
                expected: tag_len,
                actual: state.len(),
            });
        }
        if state.is_zero() {
            return Err(Gf2Error::InvalidSpec("initial register state is zero".into()));
        }
        Ok(LfsrToeplitzSpec {
            tag_len,
            msg_len,
            poly,
            state,
        })
    }

    pub fn tag_len(&self) -> usize {
        self.tag_len
    }

    pub fn msg_len(&self) -> usize {
        self.msg_len
    }

    pub fn poly(&self) -> &Gf2Poly {
        &self.poly
    }

    pub fn state(&self) -> &BitString {
        &self.state
    }

    /// The first `len` output bits of the register, starting with the state.
    pub fn sequence(&self, len: usize) -> BitString {
        let k = self.tag_len;
        let mut seq = BitString::zeros(len.max(k));
        for i in 0..k {
            seq.set(i, self.state.get(i));
        }
        let taps = BitString::from_bools((0..k).map(|i| self.poly.coeff(i)));
        for t in 0..seq.len() - k {
            if seq.dot_at(t, &taps) {
                seq.set(t + k, true);
            }
        }
        seq.slice(0, len)
    }

    /// Column `j` of the hashing matrix: the register contents after `j` shifts.
    pub fn column(&self, j: usize) -> BitString {
        self.sequence(j + self.tag_len).slice(j, self.tag_len)
    }

    /// The same matrix with its rows in reverse order, which is Toeplitz in
    /// the `ToeplitzSpec` convention: `tag = reverse(toeplitz_apply(spec, msg))`.
    pub fn to_row_reversed_toeplitz(&self) -> ToeplitzSpec {
        let seq = self.sequence(self.msg_len + self.tag_len - 1);
        ToeplitzSpec::new(self.tag_len, self.msg_len, seq.reversed())
            .expect("sequence length matches rows + cols - 1")
    }
}

/// JSON-friendly description of an LFSR spec (polynomial as coefficient bits).
#[derive(Serialize)]
pub struct LfsrSpecSummary {
    pub tag_len: usize,
    pub msg_len: usize,
    pub poly_low_coeffs: BitString,
    pub state: BitString,
}

impl From<&LfsrToeplitzSpec> for LfsrSpecSummary {
    fn from(spec: &LfsrToeplitzSpec) -> Self {
        LfsrSpecSummary {
            tag_len: spec.tag_len,
            msg_len: spec.msg_len,
            poly_low_coeffs: BitString::from_bools((0..spec.tag_len).map(|i| spec.poly.coeff(i))),
            state: spec.state.clone(),
        }
    }
}

/// Hashes `msg` to a `tag_len`-bit tag.
pub fn lfsr_toeplitz_tag(spec: &LfsrToeplitzSpec, msg: &BitString) -> Result<BitString, Gf2Error> {
    if msg.len() != spec.msg_len {
        return Err(Gf2Error::LengthMismatch {
            expected: spec.msg_len,
            actual: msg.len(),
        });
    }
    let seq = spec.sequence(spec.msg_len + spec.tag_len - 1);
    let mut tag = BitString::zeros(spec.tag_len);
    for i in 0..spec.tag_len {
        if seq.dot_at(i, msg) {
            tag.set(i, true);
        }
    }
    Ok(tag)
}

/// Maps `2k` shared secret bits to an LFSR hashing spec.
///
/// The first `k` bits, packed MSB-first and XOR-folded into a 32-byte key,
/// seed a ChaCha20 generator. The generator proposes monic degree-`k`
/// polynomials (low coefficients drawn as `k` bits, constant term forced
/// to 1) until one passes Rabin's irreducibility test, giving up after
/// `max(4k^2, 64)` proposals. The last `k` bits are the start state; if they
/// are all zero, fresh `k`-bit states are drawn from the same generator
/// until one is nonzero.
pub fn derive_lfsr_spec(secret: &BitString, k: usize, n: usize) -> Result<LfsrToeplitzSpec, Gf2Error> {
    if k == 0 {
        return Err(Gf2Error::InvalidSpec("tag length must be at least 1".into()));
    }
    if secret.len() != 2 * k {
        return Err(Gf2Error::LengthMismatch {
            expected: 2 * k,
            actual: secret.len(),
        });
    }
    let mut seed = [0u8; 32];
    for (i, b) in secret.slice(0, k).to_bytes().into_iter().enumerate() {
        seed[i % 32] ^= b;
    }
    let mut rng = ChaCha20Rng::from_seed(seed);

    let attempts = (4 * k * k).max(64);
    let mut poly = None;
    for _ in 0..attempts {
        let low = BitString::random(k, &mut rng);
        let candidate = Gf2Poly::monic(k, |i| i == 0 || low.get(i));
        if candidate.is_irreducible() {
            poly = Some(candidate);
            break;
        }
    }
    let poly = poly.ok_or_else(|| {
        Gf2Error::InvalidSpec(format!("no irreducible degree-{k} polynomial in {attempts} draws"))
    })?;

    let mut state = secret.slice(k, k);
    while state.is_zero() {
        state = BitString::from_bools((0..k).map(|_| rng.gen::<bool>()));
    }
    LfsrToeplitzSpec::new(k, n, poly, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf2::toeplitz_apply;
    use rand_chacha::ChaCha8Rng;

    fn x2_x_1() -> Gf2Poly {
        Gf2Poly::from_words(vec![0b111])
    }

    #[test]
    fn first_column_is_initial_state() {
        let spec = LfsrToeplitzSpec::new(2, 3, x2_x_1(), BitString::parse("10").unwrap()).unwrap();
        // s = 1,0,1,1,0: columns (1,0), (0,1), (1,1)
        assert_eq!(spec.sequence(5), BitString::parse("10110").unwrap());
        assert_eq!(spec.column(0), BitString::parse("10").unwrap());
        assert_eq!(spec.column(2), BitString::parse("11").unwrap());
        let tag = lfsr_toeplitz_tag(&spec, &BitString::parse("100").unwrap()).unwrap();
        assert_eq!(tag, BitString::parse("10").unwrap());
    }

    #[test]
    fn zero_message_zero_tag() {
        let spec = LfsrToeplitzSpec::new(2, 3, x2_x_1(), BitString::parse("11").unwrap()).unwrap();
        assert!(lfsr_toeplitz_tag(&spec, &BitString::zeros(3)).unwrap().is_zero());
    }

    #[test]
    fn rejects_bad_specs() {
        let reducible = Gf2Poly::from_words(vec![0b101]); // x^2 + 1 = (x+1)^2
        assert!(LfsrToeplitzSpec::new(2, 3, reducible, BitString::parse("10").unwrap()).is_err());
        assert!(LfsrToeplitzSpec::new(2, 3, x2_x_1(), BitString::zeros(2)).is_err());
        assert!(LfsrToeplitzSpec::new(3, 3, x2_x_1(), BitString::parse("100").unwrap()).is_err());
        let spec = LfsrToeplitzSpec::new(2, 3, x2_x_1(), BitString::parse("01").unwrap()).unwrap();
        assert!(lfsr_toeplitz_tag(&spec, &BitString::zeros(4)).is_err());
    }

    #[test]
    fn tag_matches_column_sum_and_toeplitz_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for k in [1usize, 2, 5, 17, 64, 70] {
            for n in [1usize, 3, 64, 100, 257] {
                let spec = derive_lfsr_spec(&BitString::random(2 * k, &mut rng), k, n).unwrap();
                let msg = BitString::random(n, &mut rng);
                let mut expect = BitString::zeros(k);
                for j in 0..n {
                    if msg.get(j) {
                        expect.xor_assign(&spec.column(j)).unwrap();
                    }
                }
                let tag = lfsr_toeplitz_tag(&spec, &msg).unwrap();
                assert_eq!(tag, expect, "k={k} n={n}");
                let t = spec.to_row_reversed_toeplitz();
                assert_eq!(toeplitz_apply(&t, &msg).unwrap().reversed(), tag);
            }
        }
    }

    #[test]
    fn tag_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let spec = derive_lfsr_spec(&BitString::random(40, &mut rng), 20, 300).unwrap();
            let a = BitString::random(300, &mut rng);
            let b = BitString::random(300, &mut rng);
            let lhs = lfsr_toeplitz_tag(&spec, &a.xor(&b).unwrap()).unwrap();
            let rhs = lfsr_toeplitz_tag(&spec, &a)
                .unwrap()
                .xor(&lfsr_toeplitz_tag(&spec, &b).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn derivation_is_deterministic_and_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let k = rng.gen_range(1..=40);
            let secret = BitString::random(2 * k, &mut rng);
            let a = derive_lfsr_spec(&secret, k, 10).unwrap();
            let b = derive_lfsr_spec(&secret, k, 10).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.poly().degree(), Some(k));
            assert!(a.poly().is_irreducible());
            assert!(!a.state().is_zero());
        }
    }

    #[test]
    fn degree_two_always_gets_x2_x_1() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..200 {
            let spec = derive_lfsr_spec(&BitString::random(4, &mut rng), 2, 5).unwrap();
            assert_eq!(spec.poly(), &x2_x_1());
        }
    }

    #[test]
    fn zero_state_bits_are_redrawn() {
        let secret = BitString::parse("10110000").unwrap();
        let spec = derive_lfsr_spec(&secret, 4, 8).unwrap();
        assert!(!spec.state().is_zero());
    }

    #[test]
    fn derive_rejects_bad_lengths() {
        assert!(derive_lfsr_spec(&BitString::zeros(0), 0, 4).is_err());
        assert!(derive_lfsr_spec(&BitString::zeros(5), 3, 4).is_err());
    }
}
