use serde::{Deserialize, Serialize};

use crate::diagnostics::{contraction_ledger_with, vi_gap_with};
use crate::error::Result;
use crate::par::Execution;
use crate::problem::{Instance, PrimalDualPoint};
use crate::solvers::RunHistory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Check {
    Contraction,
    Gap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub checks: Vec<Check>,
    /// Ergodic horizons; ones the history is too short for are skipped.
    pub horizons: Vec<usize>,
    pub probes: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionSummary {
    pub steps: usize,
    pub failures: usize,
    pub worst_slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub t: usize,
    pub probes: usize,
    pub max_lhs: f64,
    pub bound: f64,
    pub worst_excess: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertifyReport {
    pub contraction: Option<ContractionSummary>,
    pub gaps: Vec<GapSummary>,
    pub skipped_horizons: Vec<usize>,
    pub passed: bool,
}

/// Replays the requested certificates over a recorded run.
pub fn certify(
    exec: Execution,
    instance: &Instance,
    history: &RunHistory,
    reference: Option<&PrimalDualPoint>,
    opts: &CertifyOptions,
) -> Result<CertifyReport> {
    let mut report = CertifyReport {
        contraction: None,
        gaps: Vec::new(),
        skipped_horizons: Vec::new(),
        passed: true,
    };
    if opts.checks.contains(&Check::Contraction) {
        let certs = contraction_ledger_with(exec, history, &history.metric, reference, history.alpha())?;
        let failures = certs.iter().filter(|c| !c.passed()).count();
        let worst_slack = certs.iter().map(|c| c.slack).fold(f64::INFINITY, f64::min);
        report.passed &= failures == 0;
        report.contraction = Some(ContractionSummary {
            steps: certs.len(),
            failures,
            worst_slack,
        });
    }
    if opts.checks.contains(&Check::Gap) {
        for &t in &opts.horizons {
            if t + 2 > history.iterates.len() {
                report.skipped_horizons.push(t);
                continue;
            }
            let cert = vi_gap_with(exec, instance, history, t, opts.probes, opts.seed)?;
            report.passed &= cert.passed;
            report.gaps.push(GapSummary {
                t,
                probes: cert.probe_points.len(),
                max_lhs: cert.max_lhs,
                bound: cert.bound,
                worst_excess: cert.worst_excess,
                passed: cert.passed,
            });
        }
    }
    Ok(report)
}
