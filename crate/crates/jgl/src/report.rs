//! Report emission: JSON check records and CSV data files.
//!
//! All real numbers are serialized as decimal strings with 40 significant
//! digits so reports round-trip losslessly through text tools, and files are
//! written atomically (temp file + rename) so an interrupted run never
//! leaves a half-written artifact.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::identities::ResidualReport;
use crate::numerics::Real;
use crate::softedge::ScalingPoint;
use crate::weight::{Mode, WeightParams};
use crate::Result;

/// Decimal string with 40 significant digits (rug counts the precision of
/// `{:.Ne}` as total significant digits).
pub fn dec40(x: &Real) -> String {
    format!("{x:.40e}")
}

fn dec40_f64(x: f64) -> String {
    let r = Real::with_val(192, x);
    dec40(&r)
}

/// One check in the JSON report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckRecord {
    pub label: String,
    pub n: usize,
    pub lhs: String,
    pub rhs: String,
    pub rel_residual: String,
    pub threshold: String,
    pub pass: bool,
}

impl CheckRecord {
    pub fn from_residual(report: &ResidualReport, threshold: f64) -> Self {
        let pass = report.rel_f64() < threshold;
        Self {
            label: report.label.clone(),
            n: report.n,
            lhs: dec40(&report.lhs),
            rhs: dec40(&report.rhs),
            rel_residual: dec40(&report.rel_residual),
            threshold: dec40_f64(threshold),
            pass,
        }
    }

    /// Record for a scalar-vs-target comparison (rates, deviations).
    pub fn from_scalar(label: &str, n: usize, got: f64, want: f64, threshold: f64) -> Self {
        let dev = (got - want).abs();
        Self {
            label: label.to_string(),
            n,
            lhs: dec40_f64(got),
            rhs: dec40_f64(want),
            rel_residual: dec40_f64(dev),
            threshold: dec40_f64(threshold),
            pass: dev < threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamsJson {
    #[serde(rename = "A")]
    pub a: String,
    #[serde(rename = "B1")]
    pub b1: String,
    #[serde(rename = "B2")]
    pub b2: String,
    pub s1: String,
    pub s2: String,
    pub mode: String,
}

impl ParamsJson {
    pub fn from_params(p: &WeightParams) -> Self {
        Self {
            a: dec40_f64(p.a()),
            b1: dec40_f64(p.b1()),
            b2: dec40_f64(p.b2()),
            s1: dec40(p.s1()),
            s2: dec40(p.s2()),
            mode: match p.mode() {
                Mode::Strict => "strict".into(),
                Mode::Relaxed => "relaxed".into(),
            },
        }
    }
}

/// Top-level JSON report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub params: ParamsJson,
    pub precision_bits: u32,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Atomic write: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into())
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// CSV for the soft-edge sweep: one row per `n`.
pub fn softedge_csv(points: &[ScalingPoint]) -> String {
    let mut out = String::from("n,t1,t2,mu1_hat,nu1_hat,sigma_hat,alpha_n,beta_n\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.n,
            dec40(&p.t1),
            dec40(&p.t2),
            dec40(&p.mu1_hat),
            dec40(&p.nu1_hat),
            dec40(&p.sigma_hat),
            dec40(&p.alpha_n),
            dec40(&p.beta_n),
        ));
    }
    out
}

/// CSV for a Painleve II trajectory.
pub fn trajectory_csv(states: &[crate::painleve2::PIIState]) -> String {
    let mut out = String::from("xi,v1,v2,w1,w2,H2\n");
    for s in states {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            dec40(&s.xi),
            dec40(&s.v[0]),
            dec40(&s.v[1]),
            dec40(&s.w[0]),
            dec40(&s.w[1]),
            dec40(&s.h2),
        ));
    }
    out
}

/// CSV row set for the Monte Carlo cross-check.
pub struct MonteCarloRow {
    pub n: usize,
    pub s1: f64,
    pub s2: f64,
    pub mode: &'static str,
    pub p_hat: f64,
    pub stderr: f64,
    pub p_det: Real,
    pub sigma_distance: f64,
}

pub fn montecarlo_csv(rows: &[MonteCarloRow]) -> String {
    let mut out = String::from("n,s1,s2,mode,p_hat,stderr,p_det,sigma_distance\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.n,
            dec40_f64(r.s1),
            dec40_f64(r.s2),
            r.mode,
            dec40_f64(r.p_hat),
            dec40_f64(r.stderr),
            dec40(&r.p_det),
            dec40_f64(r.sigma_distance),
        ));
    }
    out
}

/// CSV for plain moment output.
pub fn moments_csv(rows: &[(usize, Real)]) -> String {
    let mut out = String::from("k,m_k\n");
    for (k, m) in rows {
        out.push_str(&format!("{},{}\n", k, dec40(m)));
    }
    out
}

/// CSV for the recurrence ledger.
pub fn recurrence_csv(sys: &crate::ortho::OrthoSystem) -> String {
    let mut out = String::from("n,h_n,alpha_n,beta_n,p_n,ln_D_n\n");
    for n in 0..=sys.n_max() {
        let ln_d = if n >= 1 {
            dec40(sys.log_d(n))
        } else {
            String::from("0")
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            n,
            dec40(sys.h(n)),
            dec40(sys.alpha(n)),
            dec40(sys.beta(n)),
            dec40(sys.p(n)),
            ln_d,
        ));
    }
    out
}
