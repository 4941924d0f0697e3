use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use qkdd_core::accounting::{zeta_from_log2, FailureBudget, KeyCost};
use qkdd_core::prob::Log2Prob;
use qkdd_core::protocol::{AbortInfo, PartyOutcome, PhaseEstimate, PoolSummary, Role, SessionCounts, StepReport};

fn sink(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Pretty JSON followed by a newline.
pub fn write_json<T: Serialize + ?Sized>(path: Option<&Path>, value: &T) -> io::Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()
}

/// CSV with a header row; `None` fields are left empty.
pub fn write_csv<T: Serialize>(path: Option<&Path>, rows: &[T]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(sink(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

/// One party's view of a TCP session.
#[derive(Debug, Serialize)]
pub struct PartyView {
    pub role: Role,
    pub abort: Option<AbortInfo>,
    pub l: Option<u64>,
    pub net_key: Option<i64>,
    /// SHA-256 over the final key bytes, for comparing the two sides.
    pub key_sha256: Option<String>,
    pub reports: Vec<StepReport>,
    pub budget: Option<FailureBudget>,
    pub epsilon: Option<Log2Prob>,
    pub zeta: Option<f64>,
    pub key_cost: KeyCost,
    pub counts: SessionCounts,
    pub phase: Option<PhaseEstimate>,
    pub pool: PoolSummary,
    pub frames: usize,
}

impl From<&PartyOutcome> for PartyView {
    fn from(o: &PartyOutcome) -> Self {
        let done = o.error.is_none();
        let epsilon = done.then(|| Log2Prob::sum(o.reports.iter().map(|r| r.failure)));
        PartyView {
            role: o.role,
            abort: o.error.as_ref().map(AbortInfo::from),
            l: if done { o.l } else { None },
            net_key: if done { o.l.map(|l| o.key_cost.net_key(l)) } else { None },
            key_sha256: o.key.as_ref().map(|k| {
                Sha256::digest(k.serialize())
                    .iter()
                    .map(|b| format!("{b:02x}"))
                    .collect()
            }),
            reports: o.reports.clone(),
            budget: o.budget,
            zeta: epsilon.map(|e| zeta_from_log2(e.log2())),
            epsilon,
            key_cost: o.key_cost,
            counts: o.counts.clone(),
            phase: o.phase,
            pool: PoolSummary::from(&o.pool),
            frames: o.transcript.len(),
        }
    }
}
