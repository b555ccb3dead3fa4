use std::io::Write;

use gkw_core::{ell_for_epsilon, parse_phi, AnswerCheck, ExactOracle, OracleError, StreamSummary};

use crate::input::{self, position_word};
use crate::{CliError, SummarizeArgs};

pub fn run(args: &SummarizeArgs, out: &mut impl Write) -> Result<(), CliError> {
    let ell = ell_for_epsilon(args.epsilon).map_err(|e| CliError::Config(e.to_string()))?;
    let phis = args
        .query
        .iter()
        .map(|q| parse_phi(q).map(|p| (q.trim(), p)).map_err(|e| CliError::Config(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut s = StreamSummary::with_ell(ell, args.algo, args.schedule).map_err(|e| CliError::Config(e.to_string()))?;
    if args.smooth {
        s.enable_smoothing().map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut oracle = args.verify.then(ExactOracle::new);
    let items = input::open(&args.input)?;
    let word = position_word(&args.input);

    if args.stats.is_some() {
        writeln!(out, "elements_seen,total_weight,time_step,summary_size")?;
    }
    let mut last_time = 0;
    for item in items {
        let (pos, it) = item?;
        s.process(it.value, it.weight).map_err(|e| CliError::Input(format!("{word} {pos}: {e}")))?;
        if let Some(o) = oracle.as_mut() {
            o.push(it.value, it.weight).map_err(|e| match e {
                OracleError::TooLarge => CliError::Config(format!("--verify: {e}")),
                other => CliError::Input(format!("{word} {pos}: {other}")),
            })?;
        }
        if let Some(every) = args.stats {
            let sm = s.summary();
            let due = match every {
                0 => sm.current_time() > last_time,
                n => sm.elements_seen() % n == 0,
            };
            if due {
                last_time = sm.current_time();
                writeln!(out, "{},{},{},{}", sm.elements_seen(), sm.total_weight(), sm.current_time(), sm.len())?;
            }
        }
    }
    s.flush();

    let sm = s.summary();
    writeln!(out, "summary_size,{}", sm.len())?;
    writeln!(out, "max_summary_size,{}", s.max_size())?;
    writeln!(out, "effective_epsilon,{}", sm.effective_epsilon())?;
    writeln!(out, "total_weight,{}", sm.total_weight())?;
    writeln!(out, "elements_seen,{}", sm.elements_seen())?;
    if phis.is_empty() {
        return Ok(());
    }
    if sm.is_empty() {
        return Err(CliError::Input("no items to answer quantile queries on".into()));
    }
    let snap = s.snapshot();
    let eps = sm.effective_epsilon();
    let mut failures = Vec::new();
    writeln!(out, "phi,value,rmin,rmax")?;
    for (text, phi) in &phis {
        let (v, b) = snap.query_quantile(*phi).expect("summary is non-empty");
        writeln!(out, "{text},{v},{},{}", b.rmin, b.rmax)?;
        if let Some(o) = &oracle {
            let check = o.check_answer(*phi, &v, eps);
            if check != AnswerCheck::Pass {
                failures.push(format!("phi {text}: answer {v} fails ({check:?})"));
            }
        }
    }
    if oracle.is_some() {
        writeln!(out, "verified,{}/{}", phis.len() - failures.len(), phis.len())?;
    }
    match failures.first() {
        None => Ok(()),
        Some(first) => Err(CliError::Verify(format!("{} answers outside the rank window; first: {first}", failures.len()))),
    }
}
