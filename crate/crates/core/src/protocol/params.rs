use serde::{Deserialize, Serialize};

use super::ProtocolError;

/// Experiment configuration: channel model, basis choice, failure target,
/// seeds and the size of the pre-shared pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionParams {
    /// Pulses sent by Alice.
    pub n_pulses: u64,
    /// Channel transmittance times detector efficiency.
    pub eta: f64,
    pub e_bx: f64,
    pub e_bz: f64,
    /// Probability that either party picks the X basis.
    pub p_x: f64,
    /// Probability that a detection is a double click.
    #[serde(default)]
    pub p_dc: f64,
    pub epsilon: f64,
    /// Error-correction efficiency assumed when planning.
    #[serde(default = "default_f")]
    pub f_ec: f64,
    pub rng_seed_alice: u64,
    pub rng_seed_bob: u64,
    pub rng_seed_channel: u64,
    /// Seed from which both parties expand the pre-shared pool.
    #[serde(default)]
    pub pool_seed: u64,
    /// Pre-shared secret bits.
    pub pool_init: u64,
    /// Double clicks also get a random basis (passive basis choice).
    #[serde(default)]
    pub randomize_double_click_basis: bool,
}

fn default_f() -> f64 {
    1.0
}

impl SessionParams {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::Config(m));
        if self.n_pulses == 0 {
            return bad("n_pulses must be at least 1".into());
        }
        for (name, v) in [
            ("eta", self.eta),
            ("e_bx", self.e_bx),
            ("e_bz", self.e_bz),
            ("p_x", self.p_x),
            ("p_dc", self.p_dc),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} outside [0, 1]"));
            }
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon = {} outside (0, 1)", self.epsilon));
        }
        if !(self.f_ec >= 1.0 && self.f_ec.is_finite()) {
            return bad(format!("f_ec = {} must be at least 1", self.f_ec));
        }
        if self.pool_init > usize::MAX as u64 {
            return bad("pool_init too large".into());
        }
        Ok(())
    }

    /// Expected raw key length `N eta`.
    pub fn expected_raw(&self) -> u64 {
        (self.n_pulses as f64 * self.eta).round() as u64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn sample() -> SessionParams {
        SessionParams {
            n_pulses: 1000,
            eta: 0.5,
            e_bx: 0.01,
            e_bz: 0.01,
            p_x: 0.5,
            p_dc: 0.0,
            epsilon: 1e-4,
            f_ec: 1.0,
            rng_seed_alice: 1,
            rng_seed_bob: 2,
            rng_seed_channel: 3,
            pool_seed: 4,
            pool_init: 10_000,
            randomize_double_click_basis: false,
        }
    }

    #[test]
    fn validation() {
        assert!(sample().validate().is_ok());
        assert!(SessionParams { epsilon: 1.0, ..sample() }.validate().is_err());
        assert!(SessionParams { eta: 1.5, ..sample() }.validate().is_err());
        assert!(SessionParams { f_ec: 0.9, ..sample() }.validate().is_err());
        assert!(SessionParams { n_pulses: 0, ..sample() }.validate().is_err());
        assert_eq!(sample().expected_raw(), 500);
    }
}
