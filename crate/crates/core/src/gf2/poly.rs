//! Dense GF(2)[x] polynomials, just enough for irreducibility testing of
//! LFSR connection polynomials.

use super::clmul::poly_mul;

/// Polynomial over GF(2); coefficient of `x^i` is bit `i` of the word vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gf2Poly {
    words: Vec<u64>,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Gf2Poly { words: Vec::new() }
    }

    pub fn one() -> Self {
        Gf2Poly { words: vec![1] }
    }

    pub fn x() -> Self {
        Gf2Poly { words: vec![2] }
    }

    pub fn from_words(words: Vec<u64>) -> Self {
        let mut p = Gf2Poly { words };
        p.trim();
        p
    }

    /// Builds `x^degree + sum(low[i] x^i)` from the `degree` low coefficients.
    pub fn monic(degree: usize, low: impl Fn(usize) -> bool) -> Self {
        let mut p = Gf2Poly {
            words: vec![0; degree / 64 + 1],
        };
        for i in 0..degree {
            if low(i) {
                p.words[i / 64] |= 1 << (i % 64);
            }
        }
        p.words[degree / 64] |= 1 << (degree % 64);
        p
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        let last = *self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.words
            .get(i / 64)
            .is_some_and(|w| (w >> (i % 64)) & 1 == 1)
    }

    pub fn add(&self, other: &Gf2Poly) -> Gf2Poly {
        let n = self.words.len().max(other.words.len());
        let words = (0..n)
            .map(|i| self.words.get(i).copied().unwrap_or(0) ^ other.words.get(i).copied().unwrap_or(0))
            .collect();
        Gf2Poly::from_words(words)
    }

    pub fn mul(&self, other: &Gf2Poly) -> Gf2Poly {
        Gf2Poly::from_words(poly_mul(&self.words, &other.words))
    }

    /// Remainder of division by `modulus`. Panics on a zero modulus.
    pub fn rem(&self, modulus: &Gf2Poly) -> Gf2Poly {
        let md = modulus.degree().expect("division by zero polynomial");
        let mut r = self.clone();
        while let Some(rd) = r.degree() {
            if rd < md {
                break;
            }
            let shift = rd - md;
            let ws = shift / 64;
            let bs = shift % 64;
            for (i, &w) in modulus.words.iter().enumerate() {
                r.words[i + ws] ^= w << bs;
                if bs != 0 && i + ws + 1 < r.words.len() {
                    r.words[i + ws + 1] ^= w >> (64 - bs);
                }
            }
            r.trim();
        }
        r
    }

    pub fn mul_mod(&self, other: &Gf2Poly, modulus: &Gf2Poly) -> Gf2Poly {
        self.mul(other).rem(modulus)
    }

    pub fn gcd(&self, other: &Gf2Poly) -> Gf2Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b);
            a = b;
            b = r;
        }
        a
    }

    /// Rabin's test: `p` of degree `k` is irreducible iff `x^(2^k) = x mod p`
    /// and `gcd(x^(2^(k/r)) - x, p) = 1` for every prime `r | k`.
    pub fn is_irreducible(&self) -> bool {
        let k = match self.degree() {
            None | Some(0) => return false,
            Some(k) => k,
        };
        if k == 1 {
            return true;
        }
        let x = Gf2Poly::x();
        // powers[i] = x^(2^i) mod p
        let mut powers = Vec::with_capacity(k + 1);
        let mut cur = x.rem(self);
        powers.push(cur.clone());
        for _ in 0..k {
            cur = cur.mul_mod(&cur, self);
            powers.push(cur.clone());
        }
        if powers[k] != x.rem(self) {
            return false;
        }
        for r in prime_factors(k) {
            let h = powers[k / r].add(&x);
            if h.gcd(self).degree() != Some(0) {
                return false;
            }
        }
        true
    }

    fn trim(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }
}

fn prime_factors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    // Trial division by every polynomial of degree 1..=deg/2.
    fn irreducible_by_trial(p: &Gf2Poly) -> bool {
        let k = p.degree().unwrap();
        if k == 0 {
            return false;
        }
        for d in 1..=k / 2 {
            for low in 0u64..(1 << d) {
                let q = Gf2Poly::from_words(vec![low | (1 << d)]);
                if p.rem(&q).is_zero() {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn rabin_agrees_with_trial_division() {
        for k in 1..=12usize {
            let mut count = 0;
            for low in 0u64..(1 << k) {
                let p = Gf2Poly::from_words(vec![low | (1 << k)]);
                let fast = p.is_irreducible();
                assert_eq!(fast, irreducible_by_trial(&p), "poly {:#b}", low | (1 << k));
                count += fast as usize;
            }
            // Necklace count of irreducible binary polynomials of degree k.
            let expected = [0, 2, 1, 2, 3, 6, 9, 18, 30, 56, 99, 186, 335][k];
            assert_eq!(count, expected, "degree {k}");
        }
    }

    #[test]
    fn only_degree_two_irreducible_is_x2_x_1() {
        let irreducible: Vec<u64> = (0u64..4)
            .map(|low| low | 4)
            .filter(|&w| Gf2Poly::from_words(vec![w]).is_irreducible())
            .collect();
        assert_eq!(irreducible, vec![0b111]);
    }

    #[test]
    fn large_known_irreducible() {
        // x^127 + x + 1 is irreducible (a known primitive trinomial).
        let p = Gf2Poly::monic(127, |i| i == 0 || i == 1);
        assert!(p.is_irreducible());
        let q = Gf2Poly::monic(127, |i| i == 0 || i == 2);
        let product = p.mul(&q);
        assert!(!product.is_irreducible());
    }

    #[test]
    fn degree_and_coefficients() {
        let p = Gf2Poly::monic(70, |i| i == 3);
        assert_eq!(p.degree(), Some(70));
        assert!(p.coeff(3) && p.coeff(70) && !p.coeff(4));
        assert_eq!(Gf2Poly::zero().degree(), None);
    }
}
