use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;

use super::{ProtocolError, Step};
use crate::gf2::BitString;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LedgerKind {
    /// Spent for good (one-time pads).
    Consumed,
    /// Taken out temporarily as hash-construction bits.
    Borrowed,
    /// Hash-construction bits put back at the end of the pool.
    Returned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LedgerEntry {
    pub step: Step,
    pub kind: LedgerKind,
    pub bits: u64,
}

/// Pre-shared secret bits with an append-only ledger.
///
/// Draws come from the front; returned construction bits go to the back, so
/// no bit is handed out twice before every other bit has been.
#[derive(Debug, Clone)]
pub struct KeyPool {
    initial: u64,
    bits: VecDeque<bool>,
    ledger: Vec<LedgerEntry>,
}

impl KeyPool {
    pub fn new(bits: BitString) -> Self {
        KeyPool {
            initial: bits.len() as u64,
            bits: bits.iter().collect(),
            ledger: Vec::new(),
        }
    }

    /// Both parties expand the same seed into identical pools.
    pub fn from_seed(seed: u64, len: usize) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        KeyPool::new(BitString::random(len, &mut rng))
    }

    pub fn initial(&self) -> u64 {
        self.initial
    }

    pub fn remaining(&self) -> usize {
        self.bits.len()
    }

    pub fn ledger(&self) -> &[LedgerEntry] {
        &self.ledger
    }

    /// Bits permanently spent at `step`.
    pub fn consumed_at(&self, step: Step) -> u64 {
        self.ledger
            .iter()
            .filter(|e| e.step == step && e.kind == LedgerKind::Consumed)
            .map(|e| e.bits)
            .sum()
    }

    /// `initial == remaining + consumed + borrowed - returned`.
    pub fn is_conserved(&self) -> bool {
        let mut out: i128 = 0;
        for e in &self.ledger {
            match e.kind {
                LedgerKind::Consumed | LedgerKind::Borrowed => out += e.bits as i128,
                LedgerKind::Returned => out -= e.bits as i128,
            }
        }
        self.initial as i128 == self.bits.len() as i128 + out
    }

    fn record(&mut self, step: Step, kind: LedgerKind, bits: u64) {
        if bits == 0 {
            return;
        }
        if let Some(last) = self.ledger.last_mut() {
            if last.step == step && last.kind == kind {
                last.bits += bits;
                return;
            }
        }
        self.ledger.push(LedgerEntry { step, kind, bits });
    }

    fn take(&mut self, step: Step, len: usize) -> Result<BitString, ProtocolError> {
        if len > self.bits.len() {
            return Err(ProtocolError::PoolExhausted {
                step,
                needed: len,
                available: self.bits.len(),
            });
        }
        Ok(self.bits.drain(..len).collect())
    }

    /// Spends `len` bits as a one-time pad.
    pub fn consume(&mut self, step: Step, len: usize) -> Result<BitString, ProtocolError> {
        let out = self.take(step, len)?;
        self.record(step, LedgerKind::Consumed, len as u64);
        Ok(out)
    }

    /// Takes `len` bits out for hash construction; give them back with
    /// [`KeyPool::give_back`].
    pub fn borrow(&mut self, step: Step, len: usize) -> Result<BitString, ProtocolError> {
        let out = self.take(step, len)?;
        self.record(step, LedgerKind::Borrowed, len as u64);
        Ok(out)
    }

    pub fn give_back(&mut self, step: Step, bits: BitString) {
        self.record(step, LedgerKind::Returned, bits.len() as u64);
        self.bits.extend(bits.iter());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conservation_through_draws() {
        let mut p = KeyPool::from_seed(7, 100);
        let first = p.borrow(Step::BasisSift, 20).unwrap();
        let pad = p.consume(Step::BasisSift, 10).unwrap();
        assert!(p.is_conserved());
        p.give_back(Step::BasisSift, first.clone());
        assert!(p.is_conserved());
        assert_eq!(p.remaining(), 90);
        assert_eq!(p.consumed_at(Step::BasisSift), 10);
        // The returned bits sit at the back.
        let rest = p.consume(Step::ErrorCorrection, 70).unwrap();
        let back = p.consume(Step::ErrorCorrection, 20).unwrap();
        assert_eq!(back, first);
        assert_ne!(rest.slice(0, 10), pad);
        assert!(matches!(
            p.consume(Step::ErrorCorrection, 1),
            Err(ProtocolError::PoolExhausted { available: 0, .. })
        ));
        assert!(p.is_conserved());
        assert_eq!(p.consumed_at(Step::ErrorCorrection), 90);
        assert_eq!(p.ledger().len(), 4);
    }

    #[test]
    fn same_seed_same_pool() {
        let mut a = KeyPool::from_seed(9, 64);
        let mut b = KeyPool::from_seed(9, 64);
        assert_eq!(a.consume(Step::KeySift, 64).unwrap(), b.consume(Step::KeySift, 64).unwrap());
    }
}
