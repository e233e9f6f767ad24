//! Thin command-line front end over [`jgl::cli`].

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use jgl::cli::{run, Command, RunConfig};
use jgl::Error;

#[derive(Parser)]
#[command(
    name = "jgl",
    about = "Hankel determinants for the Gaussian weight with two jumps: \
             verification of the ladder-operator identity web, the coupled \
             Painleve IV system, soft-edge scaling to coupled Painleve II, \
             and Monte Carlo gap-probability cross-checks",
    version
)]
struct CliArgs {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Read the whole configuration from a JSON file (other flags ignored).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Weight amplitude A (>= 0).
    #[arg(long = "A", default_value_t = 1.0)]
    a: f64,
    /// First jump amplitude B1.
    #[arg(long = "B1", default_value_t = 0.0, allow_hyphen_values = true)]
    b1: f64,
    /// Second jump amplitude B2.
    #[arg(long = "B2", default_value_t = 0.0, allow_hyphen_values = true)]
    b2: f64,
    /// First jump location s1 (< s2).
    #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
    s1: f64,
    /// Second jump location s2.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    s2: f64,
    /// Permit degenerate jumps B1 = 0 or B2 = 0.
    #[arg(long)]
    relaxed: bool,
    /// Highest polynomial degree to compute.
    #[arg(long)]
    n_max: Option<usize>,
    /// Significand bits (default: auto; env JGL_PRECISION_BITS overrides auto).
    #[arg(long)]
    precision_bits: Option<u32>,
    /// Finite-difference step for derivative checks.
    #[arg(long, allow_hyphen_values = true)]
    fd_step: Option<f64>,
    /// Integrator tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Output base path; writes <path>.json and, where applicable, <path>.csv.
    #[arg(long = "output")]
    output_path: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct EdgeArgs {
    /// Scaled offset t1 of the first jump from the edge.
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<f64>,
    /// Scaled offset t2 (> t1).
    #[arg(long, allow_hyphen_values = true)]
    t2: Option<f64>,
    /// Doubling sweep of matrix sizes, comma separated (e.g. 32,64,128,256).
    #[arg(long, value_delimiter = ',')]
    n_list: Option<Vec<usize>>,
    /// Grid spacing in t for limit-function derivatives.
    #[arg(long)]
    delta: Option<f64>,
    /// Half-length of the Painleve II integration span in xi.
    #[arg(long)]
    xi_span: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct McArgs {
    /// Matrix dimension.
    #[arg(long)]
    n: Option<usize>,
    /// Sample budget (>= 10^4).
    #[arg(long)]
    samples: Option<u64>,
    /// RNG seed; fully determines the sample stream.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args, Clone, Default)]
struct MomentArgs {
    /// Highest moment order to print.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form Hankel moments m_k of the weight.
    Moments {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        moments: MomentArgs,
    },
    /// Recurrence ledger (h_n, alpha_n, beta_n, p(n), ln D_n) with a
    /// Stieltjes cross-check.
    Recurrence {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Finite-n identity suite: difference system, sigma routes,
    /// Christoffel-Darboux, ladder compatibility, derivative relations,
    /// Riccati analogs, and the second-order PDEs.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Coupled Painleve IV: Hamilton equations and recurrence maps.
    Painleve4 {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Soft-edge double scaling: sweep, limit extraction, rates, limit PDEs.
    Softedge {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        edge: EdgeArgs,
    },
    /// Integrate the coupled Painleve II flow from extracted data and match
    /// it against fresh extractions.
    #[command(name = "integrate-pii")]
    IntegratePii {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        edge: EdgeArgs,
    },
    /// GUE sampling cross-check of the determinant gap probabilities.
    Montecarlo {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        mc: McArgs,
    },
}

fn build_config(
    command: Command,
    common: &CommonArgs,
    edge: Option<&EdgeArgs>,
    mc: Option<&McArgs>,
    k: Option<usize>,
) -> Result<RunConfig, Error> {
    if let Some(path) = &common.config {
        return RunConfig::from_json_file(path);
    }
    let edge = edge.cloned().unwrap_or_default();
    let mc = mc.cloned().unwrap_or_default();
    Ok(RunConfig {
        command,
        a: common.a,
        b1: common.b1,
        b2: common.b2,
        s1: common.s1,
        s2: common.s2,
        relaxed: common.relaxed,
        n_max: common.n_max,
        precision_bits: common.precision_bits,
        fd_step: common.fd_step,
        tolerance: common.tolerance,
        t1: edge.t1,
        t2: edge.t2,
        n_list: edge.n_list,
        delta: edge.delta,
        xi_span: edge.xi_span,
        n: mc.n,
        samples: mc.samples,
        seed: mc.seed,
        k,
        output_path: common.output_path.clone(),
    })
}

fn main() -> ExitCode {
    let cli = CliArgs::parse();
    let config = match &cli.command {
        Cmd::Moments { common, moments } => {
            build_config(Command::Moments, common, None, None, moments.k)
        }
        Cmd::Recurrence { common } => build_config(Command::Recurrence, common, None, None, None),
        Cmd::Verify { common } => build_config(Command::Verify, common, None, None, None),
        Cmd::Painleve4 { common } => build_config(Command::Painleve4, common, None, None, None),
        Cmd::Softedge { common, edge } => {
            build_config(Command::Softedge, common, Some(edge), None, None)
        }
        Cmd::IntegratePii { common, edge } => {
            build_config(Command::IntegratePii, common, Some(edge), None, None)
        }
        Cmd::Montecarlo { common, mc } => {
            build_config(Command::Montecarlo, common, None, Some(mc), None)
        }
    };
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(summary) => ExitCode::from(summary.exit_code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::ConfigInvalid(_) | Error::InvalidParams(_) => 2,
                Error::PrecisionExhausted(_) | Error::NotPositiveDefinite { .. } => 3,
                _ => 4,
            };
            ExitCode::from(code)
        }
    }
}
