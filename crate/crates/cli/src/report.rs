use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::PathBuf;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::config::ExperimentConfig;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub expected: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Where the expected value comes from: `closed form`, `oracle`,
    /// `structural` or `reference value`.
    pub source: &'static str,
}

impl Check {
    /// `|measured − expected| ≤ tolerance`.
    pub fn near(name: impl Into<String>, measured: f64, expected: f64, tolerance: f64, source: &'static str) -> Self {
        let passed = (measured - expected).abs() <= tolerance;
        Self { name: name.into(), measured, expected, tolerance, passed, source }
    }

    /// `measured ≤ bound`.
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64, source: &'static str) -> Self {
        Self { name: name.into(), measured, expected: bound, tolerance: 0.0, passed: measured <= bound, source }
    }

    /// `measured ≥ bound`.
    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64, source: &'static str) -> Self {
        Self { name: name.into(), measured, expected: bound, tolerance: 0.0, passed: measured >= bound, source }
    }

    /// Boolean outcome recorded as 1/0.
    pub fn holds(name: impl Into<String>, ok: bool, source: &'static str) -> Self {
        Self { name: name.into(), measured: ok as u8 as f64, expected: 1.0, tolerance: 0.0, passed: ok, source }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub os: &'static str,
    pub arch: &'static str,
    pub threads: usize,
    pub unix_time: u64,
}

impl Environment {
    fn capture(threads: usize) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            os: std::env::consts::OS,
            arch: std::env::consts::ARCH,
            threads,
            unix_time: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
    pub artifacts: Vec<String>,
    pub environment: Environment,
    pub stages: Vec<Stage>,
    pub passed: bool,
}

/// Timer for the stages of one run.
pub struct Stages {
    stages: Vec<Stage>,
    last: Instant,
}

impl Stages {
    pub fn start() -> Self {
        Self { stages: vec![], last: Instant::now() }
    }

    pub fn mark(&mut self, name: &str) {
        let now = Instant::now();
        self.stages.push(Stage { name: name.into(), seconds: (now - self.last).as_secs_f64() });
        self.last = now;
    }
}

/// Everything a pipeline produces before anything touches the disk.
pub struct Outcome {
    pub csv: String,
    pub checks: Vec<Check>,
    pub result: serde_json::Value,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.canonical().as_bytes());
    digest.iter().take(6).map(|b| format!("{b:02x}")).collect()
}

pub fn artifact_stem(cfg: &ExperimentConfig) -> String {
    format!("{}_{}", cfg.kind.name(), config_hash(cfg))
}

impl Report {
    pub fn assemble(config: &ExperimentConfig, outcome: Outcome, mut stages: Stages, threads: usize) -> (Self, String) {
        stages.mark("write");
        let stem = artifact_stem(config);
        let passed = outcome.checks.iter().all(|c| c.passed);
        let report = Report {
            config: config.clone(),
            checks: outcome.checks,
            result: outcome.result,
            artifacts: vec![format!("{stem}.csv"), format!("{stem}.json")],
            environment: Environment::capture(threads),
            stages: stages.stages,
            passed,
        };
        (report, outcome.csv)
    }

    /// Write `<stem>.csv` and `<stem>.json` into the configured outdir. Both
    /// go through temporary names so a failed write leaves nothing behind.
    pub fn write(&self, csv: &str) -> std::io::Result<Vec<PathBuf>> {
        let dir = &self.config.outdir;
        fs::create_dir_all(dir)?;
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)? + "\n";
        let files = [(&self.artifacts[0], csv), (&self.artifacts[1], json.as_str())];
        let mut staged = Vec::new();
        for (name, body) in files {
            let tmp = dir.join(format!(".{name}.tmp"));
            if let Err(e) = fs::write(&tmp, body) {
                cleanup(&staged);
                let _ = fs::remove_file(&tmp);
                return Err(e);
            }
            staged.push((tmp, dir.join(name)));
        }
        for (tmp, dst) in &staged {
            fs::rename(tmp, dst)?;
        }
        Ok(staged.into_iter().map(|(_, d)| d).collect())
    }

    pub fn table(&self) -> String {
        let width = self.checks.iter().map(|c| c.name.chars().count()).max().unwrap_or(5).max(5);
        let mut out = format!(
            "{:<width$}  {:>14}  {:>14}  {:>10}  {:<6}  {}\n",
            "check", "measured", "expected", "tolerance", "result", "source"
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<width$}  {:>14.6e}  {:>14.6e}  {:>10.1e}  {:<6}  {}\n",
                c.name,
                c.measured,
                c.expected,
                c.tolerance,
                if c.passed { "pass" } else { "FAIL" },
                c.source
            ));
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        out.push_str(&format!("{n} of {} checks passed\n", self.checks.len()));
        out
    }
}

fn cleanup(staged: &[(PathBuf, PathBuf)]) {
    for (tmp, _) in staged {
        let _ = fs::remove_file(tmp);
    }
}

/// CSV line from already formatted fields.
pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

pub fn num(x: f64) -> String {
    format!("{x:.12e}")
}
