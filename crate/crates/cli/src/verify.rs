use std::io::Write;

use gkw_core::{
    ell_for_epsilon, generate, Algorithm, AnswerCheck, ExactOracle, OracleError, ScheduleMode, StreamItem,
    StreamSummary,
};
use num_rational::Ratio;

use crate::input::{self, position_word};
use crate::{CliError, VerifyArgs};

const CHECKS: [&str; 4] = ["gap_invariant", "query_condition", "grid_accuracy", "coverage"];

/// First failure per check, indexed like `CHECKS`.
#[derive(Default)]
struct Outcome {
    first: [Option<String>; 4],
    counts: [u64; 4],
}

impl Outcome {
    fn record(&mut self, check: usize, ok: bool, detail: impl FnOnce() -> String) {
        self.counts[check] += 1;
        if !ok && self.first[check].is_none() {
            self.first[check] = Some(detail());
        }
    }
}

fn schedule_tag(mode: ScheduleMode) -> &'static str {
    match mode {
        ScheduleMode::EveryStep => "every",
        ScheduleMode::Delayed => "delayed",
    }
}

fn audit(s: &StreamSummary<i64>, out: &mut Outcome, at: u64) {
    let inv = s.summary().check_invariant();
    out.record(0, inv.is_ok(), || format!("after {at} items: {}", inv.unwrap_err()));
    let snap_ok = s.snapshot().verify_query_condition();
    out.record(1, snap_ok, || format!("after {at} items: rank bounds overlap or exceed the tolerance"));
    if let Some(report) = s.summary().coverage_audit() {
        let first = report.violations.first().cloned();
        out.record(3, first.is_none(), || format!("after {at} items: {}", first.unwrap_or_default()));
    }
}

fn run_one(
    alg: Algorithm,
    mode: ScheduleMode,
    ell: u64,
    smooth: bool,
    items: &[StreamItem],
    oracle: &ExactOracle<i64>,
    inject_fault: bool,
) -> Result<Outcome, CliError> {
    let config = |e: gkw_core::SummaryError| CliError::Config(e.to_string());
    let mut s = StreamSummary::with_ell(ell, alg, mode).map_err(config)?;
    if smooth {
        s.enable_smoothing().map_err(config)?;
    }
    s.enable_coverage().map_err(config)?;
    let mut out = Outcome::default();
    let half = items.len() / 2;
    for (i, it) in items.iter().enumerate() {
        let stepped = s.process(it.value, it.weight).map_err(|e| CliError::Input(format!("item {}: {e}", i + 1)))?;
        let faulted = inject_fault && i == half;
        if faulted {
            s.summary_mut().inject_delta_fault();
        }
        if stepped.is_some() || faulted {
            audit(&s, &mut out, i as u64 + 1);
        }
    }
    s.flush();
    audit(&s, &mut out, items.len() as u64);
    if !items.is_empty() {
        let snap = s.snapshot();
        let eps = s.summary().effective_epsilon();
        for k in 1..=99u64 {
            let phi = Ratio::new(k, 100);
            let (v, _) = snap.query_quantile(phi).expect("summary is non-empty");
            let check = oracle.check_answer(phi, &v, eps);
            out.record(2, check == AnswerCheck::Pass, || format!("phi {phi}: answer {v} ({check:?})"));
        }
    }
    Ok(out)
}

/// Default matrix: every order at `size` items, unit weights for all
/// algorithms and uniform weights for the weighted ones.
fn default_streams(size: u64, seed: u64) -> Vec<(String, bool, Vec<StreamItem>)> {
    let mut streams = Vec::new();
    for weights in ["unit", "uniform(1000)"] {
        for order in ["random", "sorted", "reverse", "sawtooth", "dup"] {
            let spec = input::parse_spec(&format!("{order}:{weights}:{seed}:{size}"), None).expect("valid spec");
            streams.push((spec.to_string(), weights != "unit", generate(&spec).collect()));
        }
    }
    streams
}

pub fn run(args: &VerifyArgs, out: &mut impl Write) -> Result<(), CliError> {
    let ell = ell_for_epsilon(args.epsilon).map_err(|e| CliError::Config(e.to_string()))?;
    let streams = if args.input.gen.is_none() && args.input.file.is_none() {
        default_streams(args.size, args.input.seed.unwrap_or(1))
    } else {
        let word = position_word(&args.input);
        let mut items = Vec::new();
        for r in input::open(&args.input)? {
            let (_, it) = r?;
            items.push(it);
        }
        if items.len() > gkw_core::oracle::ORACLE_MAX_ITEMS {
            return Err(CliError::Config(format!("verify: {}", OracleError::TooLarge)));
        }
        let weighted = items.iter().any(|it| it.weight != 1);
        if weighted && args.algo.is_some_and(|a| !a.is_weighted()) {
            let pos = items.iter().position(|it| it.weight != 1).unwrap_or(0) + 1;
            return Err(CliError::Input(format!("{word} {pos}: the unweighted algorithms accept only weight 1")));
        }
        vec![(input::describe(&args.input)?, weighted, items)]
    };
    let algs: Vec<Algorithm> = args.algo.map_or(Algorithm::ALL.to_vec(), |a| vec![a]);
    let modes: Vec<ScheduleMode> = match (args.schedule, args.smooth) {
        (Some(m), _) => vec![m],
        (None, true) => vec![ScheduleMode::Delayed],
        (None, false) => vec![ScheduleMode::Delayed, ScheduleMode::EveryStep],
    };

    writeln!(out, "algorithm,schedule,stream,check,status,detail")?;
    let mut failures = Vec::new();
    for (label, weighted, items) in &streams {
        let mut oracle = ExactOracle::new();
        for it in items {
            oracle.push(it.value, it.weight).map_err(|e| CliError::Config(format!("verify: {e}")))?;
        }
        for &alg in &algs {
            if *weighted && !alg.is_weighted() {
                continue;
            }
            for &mode in &modes {
                let o = run_one(alg, mode, ell, args.smooth, items, &oracle, args.inject_fault)?;
                for (c, name) in CHECKS.iter().enumerate() {
                    let prefix = format!("{alg},{},{label},{name}", schedule_tag(mode));
                    match &o.first[c] {
                        None => writeln!(out, "{prefix},pass,{} checks", o.counts[c])?,
                        Some(d) => {
                            let d = d.replace(',', ";");
                            writeln!(out, "{prefix},fail,{d}")?;
                            failures.push(format!("{alg} {} {label}: {name}: {d}", schedule_tag(mode)));
                        }
                    }
                }
            }
        }
    }
    match failures.first() {
        None => Ok(()),
        Some(first) => Err(CliError::Verify(format!("{} checks failed; first: {first}", failures.len()))),
    }
}
