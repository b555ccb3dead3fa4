#![allow(dead_code)]

use gkw_core::{
    generate, Algorithm, AnswerCheck, ExactOracle, QuerySnapshot, ScheduleMode, StreamItem, StreamSpec,
    StreamSummary,
};
use num_rational::Ratio;

/// `0.01, 0.02, .., 0.99`.
pub fn phi_grid() -> Vec<Ratio<u64>> {
    (1..=99).map(|k| Ratio::new(k, 100)).collect()
}

pub fn items(spec: &str) -> Vec<StreamItem> {
    generate(&spec.parse::<StreamSpec>().unwrap()).collect()
}

pub fn oracle_of(items: &[StreamItem]) -> ExactOracle<i64> {
    let mut o = ExactOracle::new();
    for it in items {
        o.push(it.value, it.weight).unwrap();
    }
    o
}

/// Checks every grid quantile of `snap` against the oracle.
pub fn grid_violations(snap: &QuerySnapshot<i64>, oracle: &ExactOracle<i64>) -> Vec<String> {
    let eps = Ratio::new(1, snap.ell());
    let mut out = Vec::new();
    for phi in phi_grid() {
        let (v, b) = snap.query_quantile(phi).expect("non-empty");
        let check = oracle.check_answer(phi, &v, eps);
        if check != AnswerCheck::Pass {
            out.push(format!("phi={phi} answer={v} bounds=({},{}) {check:?}", b.rmin, b.rmax));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Checks {
    pub invariant_each_step: bool,
    pub query_condition_each_step: bool,
    pub coverage_each_step: bool,
}

#[derive(Debug, Default)]
pub struct RunReport {
    pub violations: Vec<String>,
    pub steps: u64,
    pub max_size: usize,
    pub final_size: usize,
}

/// Feeds `items` through one configuration, running the requested checks
/// after every completed deletion step and the grid check at the end.
pub fn run(
    alg: Algorithm,
    mode: ScheduleMode,
    ell: u64,
    items: &[StreamItem],
    checks: Checks,
) -> RunReport {
    let mut s = StreamSummary::with_ell(ell, alg, mode).unwrap();
    if checks.coverage_each_step {
        s.enable_coverage().unwrap();
    }
    let mut report = RunReport::default();
    let audit = |s: &StreamSummary<i64>, report: &mut RunReport, at: usize| {
        if checks.invariant_each_step {
            if let Err(e) = s.summary().check_invariant() {
                report.violations.push(format!("item {at}: {e}"));
            }
        }
        if checks.query_condition_each_step && !s.snapshot().verify_query_condition() {
            report.violations.push(format!("item {at}: query condition fails"));
        }
        if checks.coverage_each_step {
            let r = s.summary().coverage_audit().unwrap();
            for v in r.violations.into_iter().take(3) {
                report.violations.push(format!("item {at}: {v}"));
            }
        }
    };
    for (i, it) in items.iter().enumerate() {
        if s.process(it.value, it.weight).unwrap().is_some() {
            audit(&s, &mut report, i);
        }
    }
    s.flush();
    audit(&s, &mut report, items.len());
    if !items.is_empty() {
        let snap = s.snapshot();
        if !snap.verify_query_condition() {
            report.violations.push("final query condition fails".into());
        }
        report.violations.extend(grid_violations(&snap, &oracle_of(items)));
    }
    report.steps = s.deletion_steps();
    report.max_size = s.max_size();
    report.final_size = s.summary().len();
    report
}
