//! Text stream format and deterministic stream generators.
//!
//! Input lines are `value` or `value,weight`; blank lines and lines starting
//! with `#` are skipped.
//!
//! Generators are driven by ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`).
//! A bounded draw in `[0, m)` takes one `next_u64` and returns
//! `(x * m) >> 64`. Zipf weights use inverse-CDF lookup with
//! `u = (next_u64 >> 11) * 2^-53`. Per item the value draw (if any) comes
//! before the weight draw (if any).

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use thiserror::Error;

use crate::summary::MAX_WEIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamItem {
    pub value: i64,
    pub weight: u64,
}

impl StreamItem {
    pub fn new(value: i64, weight: u64) -> Self {
        Self { value, weight }
    }
}

impl fmt::Display for StreamItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.weight == 1 {
            write!(f, "{}", self.value)
        } else {
            write!(f, "{},{}", self.value, self.weight)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("malformed value '{0}'")]
    BadValue(String),
    #[error("malformed weight '{0}'")]
    BadWeight(String),
    #[error("weight must be positive, got {0}")]
    NonPositiveWeight(String),
    #[error("weight {0} is not below 2^32")]
    WeightTooLarge(String),
    #[error("read failed: {0}")]
    Io(String),
}

/// Parses one input line. `Ok(None)` for blank and comment lines.
pub fn parse_line(text: &str, line: usize) -> Result<Option<StreamItem>, ParseError> {
    let err = |kind| ParseError { line, kind };
    let s = text.trim();
    if s.is_empty() || s.starts_with('#') {
        return Ok(None);
    }
    let (v, w) = match s.split_once(',') {
        Some((v, w)) => (v.trim(), Some(w.trim())),
        None => (s, None),
    };
    let value: i64 = v.parse().map_err(|_| err(ParseErrorKind::BadValue(v.into())))?;
    let weight = match w {
        None => 1,
        Some(w) => {
            let n: i128 = w.parse().map_err(|_| err(ParseErrorKind::BadWeight(w.into())))?;
            if n <= 0 {
                return Err(err(ParseErrorKind::NonPositiveWeight(w.into())));
            }
            if n > MAX_WEIGHT as i128 {
                return Err(err(ParseErrorKind::WeightTooLarge(w.into())));
            }
            n as u64
        }
    };
    Ok(Some(StreamItem { value, weight }))
}

/// Reads items from a line-oriented source, numbering lines from 1.
pub fn read_items<R: BufRead>(reader: R) -> impl Iterator<Item = Result<StreamItem, ParseError>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Ok(text) => parse_line(&text, i + 1).transpose(),
        Err(e) => Some(Err(ParseError { line: i + 1, kind: ParseErrorKind::Io(e.to_string()) })),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Uniform values in `[0, 10^9)`.
    Random,
    /// `0, 1, .., n-1`.
    Sorted,
    /// `n-1, .., 0`.
    Reverse,
    /// Ascending ramps of length `max(1, floor(sqrt(n)))`.
    Sawtooth,
    /// Uniform values in `[0, 10)`.
    DuplicateHeavy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDist {
    Unit,
    /// Uniform in `1..=max`.
    Uniform { max: u64 },
    /// `P(k) ~ k^-s` for `k` in `1..=max`.
    Zipf { s: f64, max: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid stream spec '{spec}': {reason}")]
pub struct SpecError {
    pub spec: String,
    pub reason: String,
}

/// Generator parameters, written `order:weights:seed:n`, for example
/// `random:uniform(1000):7:20000` or `dup:zipf(1.2,100):1:5000`.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamSpec {
    pub n: u64,
    pub order: Order,
    pub weights: WeightDist,
    pub seed: u64,
}

impl Order {
    pub fn name(self) -> &'static str {
        match self {
            Order::Random => "random",
            Order::Sorted => "sorted",
            Order::Reverse => "reverse",
            Order::Sawtooth => "sawtooth",
            Order::DuplicateHeavy => "dup",
        }
    }
}

impl FromStr for Order {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "random" => Order::Random,
            "sorted" => Order::Sorted,
            "reverse" => Order::Reverse,
            "sawtooth" => Order::Sawtooth,
            "dup" | "duplicate-heavy" => Order::DuplicateHeavy,
            _ => return Err(format!("unknown order '{s}'")),
        })
    }
}

impl fmt::Display for WeightDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightDist::Unit => write!(f, "unit"),
            WeightDist::Uniform { max } => write!(f, "uniform({max})"),
            WeightDist::Zipf { s, max } => write!(f, "zipf({s},{max})"),
        }
    }
}

impl FromStr for WeightDist {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unit" {
            return Ok(WeightDist::Unit);
        }
        let args = |name: &str| {
            s.strip_prefix(name)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        let max = |m: &str| -> Result<u64, String> {
            match m.trim().parse::<u64>() {
                Ok(b) if (1..=MAX_WEIGHT).contains(&b) => Ok(b),
                _ => Err(format!("weight bound '{m}' must be in 1..2^32")),
            }
        };
        if let Some(a) = args("uniform") {
            return Ok(WeightDist::Uniform { max: max(a)? });
        }
        if let Some(a) = args("zipf") {
            let (sv, b) = a.split_once(',').ok_or("zipf needs (s,B)")?;
            let sv: f64 = sv.trim().parse().map_err(|_| format!("bad zipf exponent '{sv}'"))?;
            if !(sv.is_finite() && sv > 0.0) {
                return Err(format!("zipf exponent must be positive, got {sv}"));
            }
            return Ok(WeightDist::Zipf { s: sv, max: max(b)? });
        }
        Err(format!("unknown weight distribution '{s}'"))
    }
}

impl fmt::Display for StreamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}:{}", self.order.name(), self.weights, self.seed, self.n)
    }
}

impl FromStr for StreamSpec {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let fail = |reason: String| SpecError { spec: s.to_string(), reason };
        let parts: Vec<&str> = s.split(':').collect();
        let [order, weights, seed, n] = parts[..] else {
            return Err(fail("expected order:weights:seed:n".into()));
        };
        Ok(StreamSpec {
            order: order.parse().map_err(fail)?,
            weights: weights.parse().map_err(fail)?,
            seed: seed.parse().map_err(|_| fail(format!("bad seed '{seed}'")))?,
            n: n.parse().map_err(|_| fail(format!("bad length '{n}'")))?,
        })
    }
}

fn below(rng: &mut ChaCha8Rng, m: u64) -> u64 {
    ((rng.next_u64() as u128 * m as u128) >> 64) as u64
}

/// Iterator over the items described by a [`StreamSpec`].
#[derive(Debug, Clone)]
pub struct Generator {
    spec: StreamSpec,
    rng: ChaCha8Rng,
    i: u64,
    period: u64,
    zipf_cdf: Vec<f64>,
}

pub fn generate(spec: &StreamSpec) -> Generator {
    let zipf_cdf = match spec.weights {
        WeightDist::Zipf { s, max } => {
            let mut acc = 0.0;
            let mut cdf: Vec<f64> = (1..=max)
                .map(|k| {
                    acc += (k as f64).powf(-s);
                    acc
                })
                .collect();
            for c in &mut cdf {
                *c /= acc;
            }
            cdf
        }
        _ => Vec::new(),
    };
    Generator {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        i: 0,
        period: ((spec.n as f64).sqrt() as u64).max(1),
        zipf_cdf,
        spec: spec.clone(),
    }
}

impl Iterator for Generator {
    type Item = StreamItem;

    fn next(&mut self) -> Option<StreamItem> {
        if self.i >= self.spec.n {
            return None;
        }
        let i = self.i;
        self.i += 1;
        let value = match self.spec.order {
            Order::Random => below(&mut self.rng, 1_000_000_000) as i64,
            Order::Sorted => i as i64,
            Order::Reverse => (self.spec.n - 1 - i) as i64,
            Order::Sawtooth => (i % self.period) as i64,
            Order::DuplicateHeavy => below(&mut self.rng, 10) as i64,
        };
        let weight = match self.spec.weights {
            WeightDist::Unit => 1,
            WeightDist::Uniform { max } => 1 + below(&mut self.rng, max),
            WeightDist::Zipf { .. } => {
                let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                let k = self.zipf_cdf.partition_point(|&c| c <= u);
                (k as u64 + 1).min(self.zipf_cdf.len() as u64)
            }
        };
        Some(StreamItem { value, weight })
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.spec.n - self.i) as usize;
        (left, Some(left))
    }
}
