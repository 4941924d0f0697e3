use anyhow::Result;
use clap::{Args, Subcommand};
use serde_json::{json, Value};

use qkdd_core::accounting::composable_zeta;
use qkdd_core::bounds::{
    binary_entropy, gaussian_approx_failure_log2, hypergeometric_log2, hypergeometric_tail_exact, phase_failure_total,
    phase_sampling_bound_log2, sampling_bound_from_counts_log2, xi, SamplingInput,
};
use qkdd_core::optimizer::{asymptotic_key, k3_simplified};
use qkdd_core::prob::Log2Prob;

#[derive(Args)]
pub struct BoundsArgs {
    #[command(subcommand)]
    what: Bound,
}

#[derive(Subcommand)]
enum Bound {
    /// Binary entropy H(x).
    Entropy {
        #[arg(long)]
        x: f64,
    },
    /// Exponent xi(e, q, theta) of the sampling bound.
    Xi {
        #[arg(long)]
        e: f64,
        #[arg(long)]
        q: f64,
        #[arg(long)]
        theta: f64,
    },
    /// Closed-form bound on the phase error exceeding the bit error by theta.
    Phase {
        #[arg(long)]
        n_sample: u64,
        #[arg(long)]
        n_target: u64,
        #[arg(long)]
        e: f64,
        #[arg(long)]
        theta: f64,
    },
    /// Both-basis phase failure with zero-error substitution.
    PhaseTotal {
        #[arg(long)]
        n_x: u64,
        #[arg(long)]
        n_z: u64,
        #[arg(long)]
        e_bx: f64,
        #[arg(long)]
        e_bz: f64,
        #[arg(long)]
        theta_x: f64,
        #[arg(long)]
        theta_z: f64,
    },
    /// Exact hypergeometric probability and the closed-form bound for the same counts.
    Hypergeom {
        #[arg(long)]
        total: u64,
        #[arg(long)]
        sample: u64,
        #[arg(long)]
        k: u64,
        #[arg(long)]
        m: u64,
    },
    /// Gaussian large-n approximation of the phase failure at q = 1/2.
    Gaussian {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        e: f64,
        #[arg(long)]
        theta: f64,
    },
    /// Simplified authentication budget k_3.
    K3 {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        n: u64,
    },
    /// Trace-distance parameter for a failure probability.
    Zeta {
        #[arg(long)]
        epsilon: f64,
    },
    /// Asymptotic key length n [1 - H(e_bx) - H(e_bz)].
    Asymptotic {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        e_bx: f64,
        #[arg(long)]
        e_bz: f64,
    },
}

fn prob(log2: f64) -> Value {
    serde_json::to_value(Log2Prob::from_log2(log2)).expect("serializable")
}

pub fn run(args: BoundsArgs) -> Result<()> {
    let out = match args.what {
        Bound::Entropy { x } => json!({ "x": x, "entropy": binary_entropy(x)? }),
        Bound::Xi { e, q, theta } => json!({ "e": e, "q": q, "theta": theta, "xi": xi(e, q, theta)? }),
        Bound::Phase {
            n_sample,
            n_target,
            e,
            theta,
        } => json!({
            "n_sample": n_sample, "n_target": n_target, "e": e, "theta": theta,
            "bound": prob(phase_sampling_bound_log2(n_sample, n_target, e, theta)?),
        }),
        Bound::PhaseTotal {
            n_x,
            n_z,
            e_bx,
            e_bz,
            theta_x,
            theta_z,
        } => {
            let s = SamplingInput {
                n_x,
                n_z,
                e_bx,
                e_bz,
                theta_x,
                theta_z,
            };
            json!({ "input": s, "eps_ph": phase_failure_total(&s)? })
        }
        Bound::Hypergeom { total, sample, k, m } => json!({
            "total": total, "sample": sample, "k": k, "m": m,
            "exact": { "log2": hypergeometric_log2(total, sample, k, m), "linear": hypergeometric_tail_exact(total, sample, k, m) },
            "closed_form": sampling_bound_from_counts_log2(total, sample, k, m)?.map(prob),
        }),
        Bound::Gaussian { n, e, theta } => json!({
            "n": n, "e": e, "theta": theta,
            "approx": prob(gaussian_approx_failure_log2(n, e, theta)?),
        }),
        Bound::K3 { epsilon, n } => json!({ "epsilon": epsilon, "n": n, "k3": k3_simplified(epsilon, n)? }),
        Bound::Zeta { epsilon } => json!({ "epsilon": epsilon, "zeta": composable_zeta(epsilon)? }),
        Bound::Asymptotic { n, e_bx, e_bz } => json!({
            "n": n, "e_bx": e_bx, "e_bz": e_bz, "key": asymptotic_key(n, e_bx, e_bz)?,
        }),
    };
    crate::output::write_json(None, &out)?;
    Ok(())
}
