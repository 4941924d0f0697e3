//! Bit strings over GF(2) and the two Toeplitz hashing families.

mod bitstring;
pub mod clmul;
mod lfsr;
mod poly;
mod toeplitz;

use thiserror::Error;

pub use bitstring::BitString;
pub use lfsr::{derive_lfsr_spec, lfsr_toeplitz_tag, LfsrSpecSummary, LfsrToeplitzSpec};
pub use poly::Gf2Poly;
pub use toeplitz::{toeplitz_apply, toeplitz_apply_naive, ToeplitzSpec};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Gf2Error {
    #[error("length mismatch: expected {expected} bits, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid hash spec: {0}")]
    InvalidSpec(String),
    #[error("invalid bit character {0:?}")]
    InvalidBitChar(char),
    #[error("buffer truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("padding bits after the last bit are not zero")]
    NonZeroPadding,
    #[error("bit length {0} does not fit in memory")]
    TooLong(u64),
}

/// XORs `data` with an equal-length pad.
pub fn one_time_pad(data: &BitString, pad: &BitString) -> Result<BitString, Gf2Error> {
    data.xor(pad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pad_basics() {
        let d = BitString::parse("101").unwrap();
        let p = BitString::parse("110").unwrap();
        assert_eq!(one_time_pad(&d, &p).unwrap(), BitString::parse("011").unwrap());
        assert_eq!(one_time_pad(&d, &BitString::zeros(3)).unwrap(), d);
        assert!(one_time_pad(&d, &BitString::zeros(2)).is_err());
    }

    #[test]
    fn pad_is_involutive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for len in [0, 1, 63, 64, 65, 1000] {
            let d = BitString::random(len, &mut rng);
            let p = BitString::random(len, &mut rng);
            let enc = one_time_pad(&d, &p).unwrap();
            assert_eq!(one_time_pad(&enc, &p).unwrap(), d);
        }
    }
}
