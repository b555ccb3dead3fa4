use std::io::Write;
use std::time::Instant;

use gkw_core::stream::{Order, WeightDist};
use gkw_core::{ell_for_epsilon, generate, Algorithm, ScheduleMode, StreamItem, StreamSpec, StreamSummary};
use rayon::prelude::*;

use crate::{BenchArgs, CliError};

#[derive(Debug, Clone)]
struct Cell {
    algorithm: Algorithm,
    epsilon: f64,
    ell: u64,
    n: u64,
    order: Order,
}

impl Cell {
    /// Sort key: algorithm, then decreasing epsilon, then n, then order.
    fn key(&self) -> (usize, u64, u64, &'static str) {
        let a = Algorithm::ALL.iter().position(|&x| x == self.algorithm).unwrap_or(0);
        (a, self.ell, self.n, self.order.name())
    }
}

struct Row {
    max_size: usize,
    final_size: usize,
    wall_ms: f64,
}

fn measure(cell: &Cell, mode: ScheduleMode, smooth: bool, seed: u64) -> Result<Row, CliError> {
    let spec = StreamSpec { n: cell.n, order: cell.order, weights: WeightDist::Unit, seed };
    let items: Vec<StreamItem> = generate(&spec).collect();
    let config = |e: gkw_core::SummaryError| CliError::Config(e.to_string());
    let mut s = StreamSummary::with_ell(cell.ell, cell.algorithm, mode).map_err(config)?;
    if smooth {
        s.enable_smoothing().map_err(config)?;
    }
    let start = Instant::now();
    for it in &items {
        s.process(it.value, 1).expect("unit weights are always accepted");
    }
    s.flush();
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(Row { max_size: s.max_size(), final_size: s.summary().len(), wall_ms })
}

pub fn run(args: &BenchArgs, out: &mut impl Write) -> Result<(), CliError> {
    let orders = args
        .order
        .iter()
        .map(|o| o.parse::<Order>().map_err(|e| CliError::Config(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let mut cells = Vec::new();
    for &algorithm in &args.algo {
        for &epsilon in &args.epsilon {
            let ell = ell_for_epsilon(epsilon).map_err(|e| CliError::Config(e.to_string()))?;
            for &n in &args.n {
                for &order in &orders {
                    cells.push(Cell { algorithm, epsilon, ell, n, order });
                }
            }
        }
    }
    cells.sort_by(|a, b| a.key().cmp(&b.key()));
    cells.dedup_by(|a, b| a.key() == b.key());

    let rows: Vec<Result<Row, CliError>> = if args.parallel {
        cells.par_iter().map(|c| measure(c, args.schedule, args.smooth, args.seed)).collect()
    } else {
        cells.iter().map(|c| measure(c, args.schedule, args.smooth, args.seed)).collect()
    };

    writeln!(out, "algorithm,epsilon,n,order,max_size,final_size,wall_ms,ns_per_item")?;
    for (c, row) in cells.iter().zip(rows) {
        let r = row?;
        let ns = if c.n == 0 { 0.0 } else { r.wall_ms * 1e6 / c.n as f64 };
        writeln!(
            out,
            "{},{},{},{},{},{},{:.3},{:.1}",
            c.algorithm,
            c.epsilon,
            c.n,
            c.order.name(),
            r.max_size,
            r.final_size,
            r.wall_ms,
            ns
        )?;
    }
    Ok(())
}
