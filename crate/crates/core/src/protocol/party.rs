use serde::{Deserialize, Serialize};

use super::amplify::{pa_failure, privacy_amplify_key};
use super::cascade::{reconcile, CascadeStats};
use super::quantum::party_rng;
use super::session::{PhaseEstimate, SessionCounts};
use super::sift::basis_sift_positions;
use super::verify::{authenticate, ev_failure, verify_tag};
use super::{
    key_sift, AliceRecords, BobRecords, KeyPool, Link, LinkError, MessageFrame, MsgType, ProtocolError, SessionParams,
    Step, StepReport,
};
use crate::accounting::{FailureBudget, KeyCost};
use crate::bounds::{binary_entropy, phase_failure_total, zero_error_substitute, SamplingInput};
use crate::gf2::BitString;
use crate::optimizer::{auth_failure, OptimizedPlan};
use crate::prob::Log2Prob;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Alice,
    Bob,
}

/// Private quantum-phase records of one party.
#[derive(Debug, Clone)]
pub enum Records {
    Alice(AliceRecords),
    Bob(BobRecords),
}

impl Records {
    pub fn role(&self) -> Role {
        match self {
            Records::Alice(_) => Role::Alice,
            Records::Bob(_) => Role::Bob,
        }
    }
}

/// Everything one party needs: the public configuration and plan (known to
/// both), and its own records.
#[derive(Debug, Clone)]
pub struct PartyInput {
    pub params: SessionParams,
    pub plan: OptimizedPlan,
    pub records: Records,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Sent,
    Received,
}

/// One line of the public transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameLog {
    pub direction: Direction,
    pub msg_type: MsgType,
    pub payload_bits: usize,
    pub tag_bits: usize,
}

#[derive(Debug)]
pub struct PartyOutcome {
    pub role: Role,
    /// Final key; `None` if the party aborted.
    pub key: Option<BitString>,
    pub error: Option<ProtocolError>,
    /// Reports of completed steps, in protocol order.
    pub reports: Vec<StepReport>,
    pub pool: KeyPool,
    pub counts: SessionCounts,
    pub phase: Option<PhaseEstimate>,
    pub key_cost: KeyCost,
    pub l: Option<u64>,
    pub budget: Option<FailureBudget>,
    pub transcript: Vec<FrameLog>,
}

pub(crate) fn send_frame<L: Link + ?Sized>(link: &mut L, step: Step, frame: &MessageFrame) -> Result<(), ProtocolError> {
    link.send(frame).map_err(|source| ProtocolError::Link { step, source })
}

pub(crate) fn recv_frame<L: Link + ?Sized>(
    link: &mut L,
    step: Step,
    expected: MsgType,
) -> Result<MessageFrame, ProtocolError> {
    let frame = link.recv().map_err(|source| ProtocolError::Link { step, source })?;
    if frame.msg_type != expected {
        return Err(ProtocolError::Unexpected {
            step,
            expected,
            got: frame.msg_type,
        });
    }
    Ok(frame)
}

pub(crate) fn expect_len(step: Step, what: &str, bits: &BitString, len: usize) -> Result<(), ProtocolError> {
    if bits.len() != len {
        return Err(ProtocolError::Malformed {
            step,
            detail: format!("{what} has {} bits, expected {len}", bits.len()),
        });
    }
    Ok(())
}

struct Recorder<L> {
    inner: L,
    log: Vec<FrameLog>,
}

impl<L: Link> Recorder<L> {
    fn note(&mut self, direction: Direction, f: &MessageFrame) {
        self.log.push(FrameLog {
            direction,
            msg_type: f.msg_type,
            payload_bits: f.payload.len(),
            tag_bits: f.tag.len(),
        });
    }
}

impl<L: Link> Link for Recorder<L> {
    fn send(&mut self, frame: &MessageFrame) -> Result<(), LinkError> {
        self.inner.send(frame)?;
        self.note(Direction::Sent, frame);
        Ok(())
    }

    fn recv(&mut self) -> Result<MessageFrame, LinkError> {
        let f = self.inner.recv()?;
        self.note(Direction::Received, &f);
        Ok(f)
    }
}

struct State {
    pool: KeyPool,
    reports: Vec<StepReport>,
    counts: SessionCounts,
    phase: Option<PhaseEstimate>,
    cost: KeyCost,
    l: Option<u64>,
    budget: Option<FailureBudget>,
}

/// Runs Alice's side to completion or abort. The link is dropped on return,
/// which the peer sees as a disconnect if it is still waiting.
pub fn run_alice<L: Link>(input: &PartyInput, link: L) -> PartyOutcome {
    assert_eq!(input.records.role(), Role::Alice, "run_alice needs Alice's records");
    run_party(input, link)
}

pub fn run_bob<L: Link>(input: &PartyInput, link: L) -> PartyOutcome {
    assert_eq!(input.records.role(), Role::Bob, "run_bob needs Bob's records");
    run_party(input, link)
}

/// Runs whichever side `input.records` belongs to.
pub fn run_party<L: Link>(input: &PartyInput, link: L) -> PartyOutcome {
    let role = input.records.role();
    let mut link = Recorder {
        inner: link,
        log: Vec::new(),
    };
    let mut st = State {
        pool: KeyPool::from_seed(input.params.pool_seed, input.params.pool_init as usize),
        reports: Vec::new(),
        counts: SessionCounts {
            n_pulses: input.params.n_pulses,
            ..SessionCounts::default()
        },
        phase: None,
        cost: KeyCost::default(),
        l: None,
        budget: None,
    };
    let result = pipeline(input, role, &mut link, &mut st);
    let (key, error) = match result {
        Ok(k) => (Some(k), None),
        Err(e) => {
            log::debug!("{role:?} aborted: {e}");
            (None, Some(e))
        }
    };
    PartyOutcome {
        role,
        key,
        error,
        reports: st.reports,
        pool: st.pool,
        counts: st.counts,
        phase: st.phase,
        key_cost: st.cost,
        l: st.l,
        budget: st.budget,
        transcript: link.log,
    }
}

fn entropy(e: f64) -> f64 {
    binary_entropy(e.clamp(0.0, 0.5)).unwrap_or(1.0)
}

fn pipeline<L: Link>(input: &PartyInput, role: Role, link: &mut L, st: &mut State) -> Result<BitString, ProtocolError> {
    let params = &input.params;
    let plan = &input.plan;
    let alloc = plan.allocation;

    // Key sift: Bob announces which pulses clicked.
    let n_pulses = params.n_pulses as usize;
    let (raw_bits, raw_bases) = match &input.records {
        Records::Bob(bob) => {
            let raw = key_sift(bob, params.randomize_double_click_basis, &mut party_rng(params.rng_seed_bob, 1));
            st.counts.double_clicks = Some(raw.double_clicks as u64);
            let frame = MessageFrame::new(MsgType::KeySift, bob.detected.clone(), BitString::zeros(0));
            send_frame(link, Step::KeySift, &frame)?;
            (raw.bits, raw.bases)
        }
        Records::Alice(alice) => {
            let frame = recv_frame(link, Step::KeySift, MsgType::KeySift)?;
            expect_len(Step::KeySift, "detection map", &frame.payload, n_pulses)?;
            let positions: Vec<usize> = (0..n_pulses).filter(|&i| frame.payload.get(i)).collect();
            (alice.bits.select(&positions), alice.bases.select(&positions))
        }
    };
    let n = raw_bits.len();
    st.counts.n_raw = n as u64;
    st.reports
        .push(StepReport::new(Step::KeySift, 0, Log2Prob::ZERO).with("n_raw", n as f64));

    // Basis sift: Bob first, then Alice, each tagged with k_bs bits.
    let step = Step::BasisSift;
    let k_bs = alloc.k_bs as usize;
    let receive_bases = |link: &mut L, pool: &mut KeyPool| -> Result<BitString, ProtocolError> {
        let f = recv_frame(link, step, MsgType::BasisSift)?;
        expect_len(step, "basis string", &f.payload, n)?;
        expect_len(step, "basis tag", &f.tag, k_bs)?;
        if !verify_tag(pool, step, &f.payload, &f.tag, k_bs)? {
            return Err(ProtocolError::AuthFailed { step });
        }
        Ok(f.payload)
    };
    let announce = |link: &mut L, pool: &mut KeyPool| -> Result<(), ProtocolError> {
        let tag = authenticate(pool, step, &raw_bases, k_bs)?;
        send_frame(link, step, &MessageFrame::new(MsgType::BasisSift, raw_bases.clone(), tag))
    };
    let sifted = match role {
        Role::Bob => {
            announce(link, &mut st.pool)?;
            let theirs = receive_bases(link, &mut st.pool)?;
            basis_sift_positions(&theirs, &raw_bases)
        }
        Role::Alice => {
            let theirs = receive_bases(link, &mut st.pool)?;
            announce(link, &mut st.pool)?;
            basis_sift_positions(&raw_bases, &theirs)
        }
    };
    let (n_x, n_z) = (sifted.n_x() as u64, sifted.n_z() as u64);
    st.counts.n_x = n_x;
    st.counts.n_z = n_z;
    st.cost.k_bs = alloc.k_bs;
    let eps_bs = auth_failure(n as u64, alloc.k_bs);
    st.reports.push(
        StepReport::new(step, 2 * alloc.k_bs, eps_bs.scale(2.0))
            .with("n", n as f64)
            .with("n_x", n_x as f64)
            .with("n_z", n_z as f64)
            .with("q_x", if n_x + n_z > 0 { sifted.q_x() } else { 0.0 }),
    );

    // Error correction on both bases (error counts feed phase estimation),
    // then verification of the keyed part; one retry with fresh shuffles.
    let mut key_x = sifted.x_key(&raw_bits);
    let mut key_z = sifted.z_key(&raw_bits);
    let keyed = |x: &BitString, z: &BitString| {
        let mut k = BitString::zeros(0);
        if plan.objective.key_x {
            k.extend_from(x);
        }
        if plan.objective.key_z {
            k.extend_from(z);
        }
        k
    };
    let m = keyed(&key_x, &key_z).len() as u64;
    st.counts.m = m;
    if m == 0 {
        return Err(ProtocolError::Estimation("no sifted bits in the keyed bases".into()));
    }
    let f = params.f_ec;
    let mut ec = [CascadeStats::default(); 2];
    let mut ev_attempts = 0u64;
    let k_ev = alloc.k_ev as usize;
    let final_key = loop {
        let attempt = ev_attempts as u32;
        for (basis, key, e_est) in [(0u8, &mut key_x, plan.inputs.e_bx), (1u8, &mut key_z, plan.inputs.e_bz)] {
            let predicted = (key.len() as f64 * f * entropy(e_est)).ceil() as u64;
            let budget = 3 * predicted + 64;
            let stats = reconcile(link, &mut st.pool, role, key, e_est, basis, attempt, budget)?;
            ec[basis as usize].merge(&stats);
        }
        ev_attempts += 1;
        let step = Step::ErrorVerification;
        let candidate = keyed(&key_x, &key_z);
        let ok = match role {
            Role::Alice => {
                let tag = authenticate(&mut st.pool, step, &candidate, k_ev)?;
                send_frame(link, step, &MessageFrame::new(MsgType::EvTag, BitString::zeros(0), tag))?;
                let verdict = recv_frame(link, step, MsgType::EvTag)?;
                expect_len(step, "verdict", &verdict.payload, 1)?;
                verdict.payload.get(0)
            }
            Role::Bob => {
                let frame = recv_frame(link, step, MsgType::EvTag)?;
                expect_len(step, "verification tag", &frame.tag, k_ev)?;
                let ok = verify_tag(&mut st.pool, step, &candidate, &frame.tag, k_ev)?;
                let verdict = BitString::from_bools([ok]);
                send_frame(link, step, &MessageFrame::new(MsgType::EvTag, verdict, BitString::zeros(0)))?;
                ok
            }
        };
        if ok {
            break candidate;
        }
        log::debug!("{role:?}: verification attempt {ev_attempts} failed");
        if ev_attempts == 2 {
            return Err(ProtocolError::VerificationFailed);
        }
    };
    st.counts.errors_x = ec[0].corrections;
    st.counts.errors_z = ec[1].corrections;
    let k_ec: u64 = ec.iter().map(|s| s.pool_bits()).sum();
    st.cost.k_ec = k_ec;
    st.cost.k_ev = alloc.k_ev * ev_attempts;
    let mut ec_report = StepReport::new(Step::ErrorCorrection, k_ec, Log2Prob::ZERO)
        .with("parity_bits", (ec[0].parity_bits + ec[1].parity_bits) as f64)
        .with("reply_bits", (ec[0].reply_bits + ec[1].reply_bits) as f64)
        .with("errors_x", ec[0].corrections as f64)
        .with("errors_z", ec[1].corrections as f64)
        .with("attempts", ev_attempts as f64);
    for (name, s, nb) in [("realized_f_x", &ec[0], n_x), ("realized_f_z", &ec[1], n_z)] {
        if s.corrections > 0 {
            let h = entropy(s.corrections as f64 / nb as f64);
            ec_report = ec_report.with(name, s.parity_bits as f64 / (nb as f64 * h));
        }
    }
    st.reports.push(ec_report);
    let eps_ev = ev_failure(m, alloc.k_ev).scale(ev_attempts as f64);
    st.reports.push(
        StepReport::new(Step::ErrorVerification, st.cost.k_ev, eps_ev)
            .with("m", m as f64)
            .with("attempts", ev_attempts as f64),
    );

    // Phase estimation from the corrected error counts.
    if n_x == 0 || n_z == 0 {
        return Err(ProtocolError::Estimation(format!("empty basis (n_x = {n_x}, n_z = {n_z})")));
    }
    let e_bx = ec[0].corrections as f64 / n_x as f64;
    let e_bz = ec[1].corrections as f64 / n_z as f64;
    let quantize = |theta: f64, n_t: u64| ((theta * n_t as f64) - 1e-9).ceil().max(0.0) / n_t as f64;
    let theta_x = quantize(plan.theta_x, n_z);
    let theta_z = quantize(plan.theta_z, n_x);
    let sample = SamplingInput {
        n_x,
        n_z,
        e_bx,
        e_bz,
        theta_x,
        theta_z,
    };
    let eps_ph = phase_failure_total(&sample).map_err(|e| ProtocolError::Estimation(e.to_string()))?;
    let e_x_used = zero_error_substitute(e_bx, n_x);
    let e_z_used = zero_error_substitute(e_bz, n_z);
    let mut pa_bits = 0.0;
    if plan.objective.key_x {
        pa_bits += n_x as f64 * (1.0 - entropy(e_z_used + theta_z));
    }
    if plan.objective.key_z {
        pa_bits += n_z as f64 * (1.0 - entropy(e_x_used + theta_x));
    }
    let l = (pa_bits - alloc.t_oe as f64).floor().max(0.0) as u64;
    st.l = Some(l);
    st.phase = Some(PhaseEstimate {
        e_bx,
        e_bz,
        e_bx_used: e_x_used,
        e_bz_used: e_z_used,
        theta_x,
        theta_z,
        eps_ph,
    });
    st.reports.push(
        StepReport::new(Step::PhaseEstimation, 0, eps_ph)
            .with("e_bx", e_bx)
            .with("e_bz", e_bz)
            .with("theta_x", theta_x)
            .with("theta_z", theta_z)
            .with("l", l as f64),
    );

    // Privacy amplification: Alice picks the Toeplitz seed.
    let step = Step::PrivacyAmplification;
    let k_pa = alloc.k_pa as usize;
    let seed_len = (m + l - 1) as usize;
    let seed = match role {
        Role::Alice => {
            let seed = BitString::random(seed_len, &mut party_rng(params.rng_seed_alice, 1));
            let tag = authenticate(&mut st.pool, step, &seed, k_pa)?;
            send_frame(link, step, &MessageFrame::new(MsgType::PaSeed, seed.clone(), tag))?;
            seed
        }
        Role::Bob => {
            let f = recv_frame(link, step, MsgType::PaSeed)?;
            expect_len(step, "seed", &f.payload, seed_len)?;
            expect_len(step, "seed tag", &f.tag, k_pa)?;
            if !verify_tag(&mut st.pool, step, &f.payload, &f.tag, k_pa)? {
                return Err(ProtocolError::AuthFailed { step });
            }
            f.payload
        }
    };
    let key = privacy_amplify_key(&final_key, l as usize, &seed).map_err(|source| ProtocolError::Gf2 { step, source })?;
    st.cost.k_pa = alloc.k_pa;
    let eps_pa = pa_failure(m, l, alloc.k_pa, alloc.t_oe);
    st.reports.push(
        StepReport::new(step, alloc.k_pa, eps_pa)
            .with("l", l as f64)
            .with("m", m as f64)
            .with("t_oe", alloc.t_oe as f64),
    );
    st.budget = Some(FailureBudget::new(eps_bs, eps_ev, eps_ph, eps_pa));
    Ok(key)
}
