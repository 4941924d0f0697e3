use serde::Serialize;

use super::{
    in_memory_pair, run_party, simulate_quantum_phase, AbortInfo, FaultSpec, FaultyLink, FrameLog, KeyPool, LedgerEntry,
    Link, PartyInput, PartyOutcome, ProtocolError, Records, SessionParams, StepReport,
};
use crate::accounting::{FailureBudget, KeyCost};
use crate::gf2::BitString;
use crate::optimizer::{OptimizedPlan, PlanInputs};
use crate::prob::Log2Prob;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SessionCounts {
    pub n_pulses: u64,
    pub n_raw: u64,
    /// Known to Bob only.
    pub double_clicks: Option<u64>,
    pub n_x: u64,
    pub n_z: u64,
    /// Bits entering verification and privacy amplification.
    pub m: u64,
    pub errors_x: u64,
    pub errors_z: u64,
}

/// Observed error rates and the deviations actually applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseEstimate {
    pub e_bx: f64,
    pub e_bz: f64,
    /// After the zero-error substitution.
    pub e_bx_used: f64,
    pub e_bz_used: f64,
    pub theta_x: f64,
    pub theta_z: f64,
    pub eps_ph: Log2Prob,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoolSummary {
    pub initial: u64,
    pub remaining: u64,
    pub conserved: bool,
    pub ledger: Vec<LedgerEntry>,
}

impl From<&KeyPool> for PoolSummary {
    fn from(p: &KeyPool) -> Self {
        PoolSummary {
            initial: p.initial(),
            remaining: p.remaining() as u64,
            conserved: p.is_conserved(),
            ledger: p.ledger().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SessionResult {
    pub abort: Option<AbortInfo>,
    #[serde(skip)]
    pub alice_key: Option<BitString>,
    #[serde(skip)]
    pub bob_key: Option<BitString>,
    pub keys_match: bool,
    /// Final key length.
    pub l: Option<u64>,
    pub net_key: Option<i64>,
    /// Alice's step reports.
    pub reports: Vec<StepReport>,
    /// Both parties produced identical reports.
    pub reports_agree: bool,
    pub budget: Option<FailureBudget>,
    /// Sum of the reported step failures.
    pub epsilon: Option<Log2Prob>,
    pub zeta: Option<f64>,
    pub key_cost: KeyCost,
    pub counts: SessionCounts,
    pub phase: Option<PhaseEstimate>,
    pub pool_alice: PoolSummary,
    pub pool_bob: PoolSummary,
    /// Frames as seen by Alice.
    pub transcript: Vec<FrameLog>,
}

impl SessionResult {
    /// Assembles the joint view from the two party outcomes.
    pub fn from_outcomes(alice: PartyOutcome, bob: PartyOutcome) -> Self {
        let abort = [&alice.error, &bob.error]
            .into_iter()
            .flatten()
            .find(|e| !e.is_peer_loss())
            .or(alice.error.as_ref().or(bob.error.as_ref()))
            .map(AbortInfo::from);
        let done = abort.is_none();
        let epsilon = done.then(|| Log2Prob::sum(alice.reports.iter().map(|r| r.failure)));
        let mut counts = alice.counts.clone();
        counts.double_clicks = bob.counts.double_clicks;
        SessionResult {
            keys_match: done && alice.key == bob.key,
            l: if done { alice.l } else { None },
            net_key: if done { alice.l.map(|l| alice.key_cost.net_key(l)) } else { None },
            reports_agree: alice.reports == bob.reports,
            budget: if done { alice.budget } else { None },
            zeta: epsilon.map(|e| crate::accounting::zeta_from_log2(e.log2())),
            epsilon,
            key_cost: alice.key_cost,
            counts,
            phase: alice.phase,
            pool_alice: PoolSummary::from(&alice.pool),
            pool_bob: PoolSummary::from(&bob.pool),
            transcript: alice.transcript,
            reports: alice.reports,
            alice_key: alice.key,
            bob_key: bob.key,
            abort,
        }
    }
}

/// Planner inputs implied by a session configuration: the expected raw key
/// length and the channel error rates.
pub fn plan_inputs(params: &SessionParams) -> PlanInputs {
    PlanInputs {
        n: params.expected_raw(),
        e_bx: params.e_bx,
        e_bz: params.e_bz,
        epsilon: params.epsilon,
        f: params.f_ec,
    }
}

/// Simulates the quantum phase and runs both parties in memory on two
/// threads. Errors only for invalid configuration; protocol aborts are
/// reported in the result.
pub fn run_session(params: &SessionParams, plan: &OptimizedPlan) -> Result<SessionResult, ProtocolError> {
    run_session_with_fault(params, plan, None)
}

/// As [`run_session`], with every outgoing frame of the faulted type
/// corrupted on both sides.
pub fn run_session_with_fault(
    params: &SessionParams,
    plan: &OptimizedPlan,
    fault: Option<FaultSpec>,
) -> Result<SessionResult, ProtocolError> {
    let (alice_rec, bob_rec) = simulate_quantum_phase(params)?;
    let (la, lb) = in_memory_pair();
    let wrap = |l| -> Box<dyn Link + Send> {
        match fault {
            Some(f) => Box::new(FaultyLink::new(l, f)),
            None => Box::new(l),
        }
    };
    let (la, lb) = (wrap(la), wrap(lb));
    let alice_in = PartyInput {
        params: params.clone(),
        plan: plan.clone(),
        records: Records::Alice(alice_rec),
    };
    let bob_in = PartyInput {
        params: params.clone(),
        plan: plan.clone(),
        records: Records::Bob(bob_rec),
    };
    let (alice, bob) = std::thread::scope(|s| {
        let a = s.spawn(|| run_party(&alice_in, la));
        let b = run_party(&bob_in, lb);
        (a.join().expect("alice thread panicked"), b)
    });
    Ok(SessionResult::from_outcomes(alice, bob))
}
