//! The post-processing pipeline as two party state machines.
//!
//! Alice and Bob each run a blocking, single-threaded routine over a
//! [`Link`]: key sift, authenticated basis sift, encrypted Cascade error
//! correction per basis, error verification, phase-error estimation and
//! authenticated privacy amplification. Both consume the same pre-shared
//! [`KeyPool`] in the same order, so their pool copies never diverge.

mod amplify;
mod cascade;
mod frame;
mod params;
mod party;
mod pool;
mod quantum;
mod session;
mod sift;
mod transport;
mod verify;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf2::Gf2Error;
use crate::prob::Log2Prob;

pub use amplify::{pa_failure, privacy_amplify_key, PaOutcome};
pub use cascade::{block_sizes, CascadeStats};
pub use frame::{MessageFrame, MsgType};
pub use params::SessionParams;
pub use party::{run_alice, run_bob, run_party, Direction, FrameLog, PartyInput, PartyOutcome, Records, Role};
pub use pool::{KeyPool, LedgerEntry, LedgerKind};
pub use quantum::{key_sift, simulate_quantum_phase, AliceRecords, BobRecords, SiftedRaw};
pub use session::{plan_inputs, run_session, run_session_with_fault, PhaseEstimate, PoolSummary, SessionCounts, SessionResult};
pub use sift::{basis_sift_positions, SiftedKeys};
pub use transport::{
    in_memory_pair, tcp_accept, tcp_connect, FaultSpec, FaultTarget, FaultyLink, Link, MemLink, TcpLink,
};
pub use verify::{authenticate, verify_tag, ev_failure};

/// Post-processing steps in protocol order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    KeySift,
    BasisSift,
    ErrorCorrection,
    ErrorVerification,
    PhaseEstimation,
    PrivacyAmplification,
}

impl Step {
    pub fn label(self) -> &'static str {
        match self {
            Step::KeySift => "key_sift",
            Step::BasisSift => "basis_sift",
            Step::ErrorCorrection => "error_correction",
            Step::ErrorVerification => "error_verification",
            Step::PhaseEstimation => "phase_estimation",
            Step::PrivacyAmplification => "privacy_amplification",
        }
    }
}

impl fmt::Display for Step {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Cost and failure contribution of one step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub step: Step,
    /// Secret bits spent by this step (pads only; borrowed hash keys are returned).
    pub key_cost: u64,
    pub failure: Log2Prob,
    pub aux: BTreeMap<String, f64>,
}

impl StepReport {
    pub fn new(step: Step, key_cost: u64, failure: Log2Prob) -> Self {
        StepReport {
            step,
            key_cost,
            failure,
            aux: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.aux.insert(key.to_string(), value);
        self
    }
}

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("peer disconnected")]
    Disconnected,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed frame: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("{step}: link failure: {source}")]
    Link {
        step: Step,
        #[source]
        source: LinkError,
    },
    #[error("{step}: authentication tag rejected")]
    AuthFailed { step: Step },
    #[error("{step}: key pool exhausted (need {needed} bits, {available} left)")]
    PoolExhausted { step: Step, needed: usize, available: usize },
    #[error("{step}: expected {expected:?} frame, got {got:?}")]
    Unexpected { step: Step, expected: MsgType, got: MsgType },
    #[error("{step}: malformed message: {detail}")]
    Malformed { step: Step, detail: String },
    #[error("error_correction: parity budget exceeded ({sent} > {budget} bits)")]
    ParityBudget { sent: u64, budget: u64 },
    #[error("error_verification: keys still differ after retry")]
    VerificationFailed,
    #[error("phase_estimation: {0}")]
    Estimation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{step}: {source}")]
    Gf2 {
        step: Step,
        #[source]
        source: Gf2Error,
    },
}

impl ProtocolError {
    pub fn step(&self) -> Option<Step> {
        match self {
            ProtocolError::Link { step, .. }
            | ProtocolError::AuthFailed { step }
            | ProtocolError::PoolExhausted { step, .. }
            | ProtocolError::Unexpected { step, .. }
            | ProtocolError::Malformed { step, .. }
            | ProtocolError::Gf2 { step, .. } => Some(*step),
            ProtocolError::ParityBudget { .. } => Some(Step::ErrorCorrection),
            ProtocolError::VerificationFailed => Some(Step::ErrorVerification),
            ProtocolError::Estimation(_) => Some(Step::PhaseEstimation),
            ProtocolError::Config(_) => None,
        }
    }

    /// True when this party only noticed that the other side went away.
    pub fn is_peer_loss(&self) -> bool {
        matches!(
            self,
            ProtocolError::Link {
                source: LinkError::Disconnected,
                ..
            }
        )
    }
}

/// Why and where a session stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbortInfo {
    pub step: Option<Step>,
    pub reason: String,
}

impl From<&ProtocolError> for AbortInfo {
    fn from(e: &ProtocolError) -> Self {
        AbortInfo {
            step: e.step(),
            reason: e.to_string(),
        }
    }
}
