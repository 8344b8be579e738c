use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const POLICY_DEFAULT: &str = "default";
pub const POLICY_BEST_OF: &str = "best-of";
pub const POLICY_LV: &str = "lv";
pub const POLICY_ORACLE: &str = "oracle";
pub const POLICY_ADAPTIVE: &str = "adaptive";

/// Width of the learned-policy bins in the per-user table.
pub const P_BIN_WIDTH: f64 = 0.08;

pub fn safety_name(threshold: f64) -> String {
    format!("safety@{threshold}")
}

pub fn p_bin(p: f64) -> f64 {
    let k = (p / P_BIN_WIDTH + 1e-9).floor();
    (k * P_BIN_WIDTH * 1e12).round() / 1e12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySummary {
    pub policy: String,
    /// Mean over replications of the per-replication mean LTE.
    pub mean_lte: f64,
    /// Relative to the default policy, percent.
    pub gain_pct: Option<f64>,
    /// Standard error of `mean_lte` over replications.
    pub stderr: f64,
    /// Half-width of the 95% t-interval of `mean_lte`.
    pub ci95: f64,
    /// Standard error over replications of the per-replication gain.
    pub gain_stderr: f64,
    /// Gain of the learned policy over this policy, percent.
    pub lv_gain_over_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorRecord {
    pub p: f64,
    pub train_rmse: f64,
    /// Held-out RMSE on test users, where a rollout under `p` exists.
    pub heldout_rmse: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    /// Factorization RMSE on ratings outside the CF subset.
    pub cf_rmse: f64,
    pub predictors: Vec<PredictorRecord>,
    /// Aligned with [`ResultsTable::policies`].
    pub mean_lte: Vec<f64>,
    pub zero_p_fraction: f64,
    pub degenerate_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub replication: usize,
    pub user: u32,
    pub p_hat: f64,
    pub best_of_p: f64,
    pub oracle_p: f64,
    pub degenerate: Option<String>,
    /// Aligned with [`ResultsTable::policies`].
    pub lte: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub policy: String,
    pub p1: f64,
    pub mean_lte: f64,
    pub gain_pct: Option<f64>,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRecord {
    pub t0: f64,
    pub rating_density: f64,
    pub mean_lte: f64,
    pub gain_pct: Option<f64>,
    pub stderr: f64,
    /// Gain over the non-adaptive learned policy, percent.
    pub gain_over_lv_pct: Option<f64>,
    /// Standard error over replications of the per-replication difference
    /// adaptive minus learned policy.
    pub diff_stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ResultsTable {
    pub policies: Vec<String>,
    pub summary: Vec<PolicySummary>,
    pub replications: Vec<ReplicationRecord>,
    pub per_user: Vec<UserRecord>,
    pub sweep: Vec<SweepRecord>,
    pub adaptive: Vec<AdaptiveRecord>,
}

impl ResultsTable {
    pub fn policy_index(&self, name: &str) -> Option<usize> {
        self.policies.iter().position(|p| p == name)
    }

    pub fn summary_for(&self, name: &str) -> Option<&PolicySummary> {
        self.summary.iter().find(|s| s.policy == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Csv,
    Json,
    Both,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn summary_csv(r: &ResultsTable) -> String {
    let mut s = String::from("policy,mean_lte,gain_pct,stderr,ci95,gain_stderr,lv_gain_over_pct\n");
    for p in &r.summary {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.policy,
            p.mean_lte,
            opt(p.gain_pct),
            p.stderr,
            p.ci95,
            p.gain_stderr,
            opt(p.lv_gain_over_pct)
        );
    }
    s
}

pub fn per_user_csv(r: &ResultsTable) -> String {
    let mut s = String::from("replication,user,p_hat,p_hat_bin,best_of_p,oracle_p,degenerate");
    for p in &r.policies {
        let _ = write!(s, ",lte_{p}");
    }
    s.push_str(",gain_pct\n");
    let (d, lv) = (r.policy_index(POLICY_DEFAULT), r.policy_index(POLICY_LV));
    for u in &r.per_user {
        let _ = write!(
            s,
            "{},{},{},{:.2},{},{},{}",
            u.replication,
            u.user,
            u.p_hat,
            p_bin(u.p_hat),
            u.best_of_p,
            u.oracle_p,
            u.degenerate.as_deref().unwrap_or("")
        );
        for v in &u.lte {
            let _ = write!(s, ",{v}");
        }
        let gain = match (d, lv) {
            (Some(d), Some(lv)) => crate::stats::relative_gain(u.lte[lv], u.lte[d]),
            _ => None,
        };
        let _ = writeln!(s, ",{}", opt(gain));
    }
    s
}

pub fn sweep_csv(r: &ResultsTable) -> String {
    let mut s = String::from("policy,p1,mean_lte,gain_pct,stderr\n");
    for w in &r.sweep {
        let _ = writeln!(s, "{},{},{},{},{}", w.policy, w.p1, w.mean_lte, opt(w.gain_pct), w.stderr);
    }
    s
}

pub fn adaptive_csv(r: &ResultsTable) -> String {
    let mut s = String::from("t0,rating_density,mean_lte,gain_pct,stderr,gain_over_lv_pct,diff_stderr\n");
    for a in &r.adaptive {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            a.t0,
            a.rating_density,
            a.mean_lte,
            opt(a.gain_pct),
            a.stderr,
            opt(a.gain_over_lv_pct),
            a.diff_stderr
        );
    }
    s
}

/// Writes the report files into `out` and returns their paths.
pub fn report(results: &ResultsTable, format: ReportFormat, out: &Path) -> Result<Vec<PathBuf>> {
    if results.summary.is_empty() && results.sweep.is_empty() {
        return Err(HarnessError::Data("results table is empty".into()));
    }
    fs::create_dir_all(out)?;
    let mut files: Vec<(&str, String)> = Vec::new();
    if matches!(format, ReportFormat::Csv | ReportFormat::Both) {
        files.push(("summary.csv", summary_csv(results)));
        files.push(("per_user.csv", per_user_csv(results)));
        files.push(("sweep.csv", sweep_csv(results)));
        files.push(("adaptive.csv", adaptive_csv(results)));
    }
    if matches!(format, ReportFormat::Json | ReportFormat::Both) {
        files.push(("results.json", results.to_json()?));
    }
    let mut written = Vec::new();
    for (name, body) in files {
        let path = out.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bins() {
        assert_eq!(p_bin(0.0), 0.0);
        assert_eq!(p_bin(0.079), 0.0);
        assert_eq!(p_bin(0.08), 0.08);
        assert_eq!(p_bin(0.17), 0.16);
        assert_eq!(p_bin(0.24), 0.24);
    }

    #[test]
    fn empty_report_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(report(&ResultsTable::default(), ReportFormat::Both, dir.path()).is_err());
    }
}
