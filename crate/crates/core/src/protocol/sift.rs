use crate::gf2::BitString;

/// Raw-key indices where both parties used the same basis, split by basis.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SiftedKeys {
    pub x_positions: Vec<usize>,
    pub z_positions: Vec<usize>,
}

impl SiftedKeys {
    pub fn n_x(&self) -> usize {
        self.x_positions.len()
    }

    pub fn n_z(&self) -> usize {
        self.z_positions.len()
    }

    pub fn q_x(&self) -> f64 {
        self.n_x() as f64 / (self.n_x() + self.n_z()) as f64
    }

    pub fn x_key(&self, raw: &BitString) -> BitString {
        raw.select(&self.x_positions)
    }

    pub fn z_key(&self, raw: &BitString) -> BitString {
        raw.select(&self.z_positions)
    }
}

/// Compares the two announced basis strings (set bit = X).
pub fn basis_sift_positions(alice: &BitString, bob: &BitString) -> SiftedKeys {
    assert_eq!(alice.len(), bob.len(), "basis strings must have equal length");
    let mut out = SiftedKeys::default();
    for i in 0..alice.len() {
        match (alice.get(i), bob.get(i)) {
            (true, true) => out.x_positions.push(i),
            (false, false) => out.z_positions.push(i),
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_bases_keep_everything() {
        let b = BitString::parse("1100101").unwrap();
        let s = basis_sift_positions(&b, &b);
        assert_eq!(s.n_x() + s.n_z(), 7);
        assert_eq!(s.x_positions, vec![0, 1, 4, 6]);
    }

    #[test]
    fn bias_ratio_follows_px() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for &p in &[0.5, 0.8, 0.95] {
            let expected = p * p / (p * p + (1.0 - p) * (1.0 - p));
            let mut total = 0.0;
            for _ in 0..20 {
                let n = 20_000;
                let a = BitString::from_bools((0..n).map(|_| rng.gen::<f64>() < p));
                let b = BitString::from_bools((0..n).map(|_| rng.gen::<f64>() < p));
                total += basis_sift_positions(&a, &b).q_x();
            }
            let mean = total / 20.0;
            assert!((mean - expected).abs() < 0.005, "p={p}: {mean} vs {expected}");
        }
    }
}
