//! Exact ground truth over a fully stored stream.
//!
//! Ranks refer to the unfolded stream, where an update `(x, w)` stands for
//! `w` consecutive copies of `x` and equal values are ordered by arrival.

use std::cell::OnceCell;

use num_rational::Ratio;
use thiserror::Error;

use crate::query::target_rank;

/// Maximum number of updates an oracle will hold.
pub const ORACLE_MAX_ITEMS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("oracle is limited to {ORACLE_MAX_ITEMS} updates")]
    TooLarge,
    #[error("weight must be at least 1")]
    ZeroWeight,
    #[error("the oracle holds no stream items")]
    Empty,
    #[error("unknown arrival index {0}")]
    UnknownArrival(u64),
}

/// Outcome of checking an answer against the exact ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnswerCheck {
    Pass,
    /// The value's rank window `[below, through]` misses the target window.
    OutsideWindow { below: u64, through: u64 },
    NotInStream,
}

impl AnswerCheck {
    pub fn passed(self) -> bool {
        self == AnswerCheck::Pass
    }
}

#[derive(Debug, Clone)]
struct Index {
    /// Arrival indices sorted by `(value, arrival)`.
    order: Vec<usize>,
    /// `prefix[k]` is the weight of the first `k` items in sorted order.
    prefix: Vec<u64>,
    /// Sorted position of each arrival.
    pos: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct ExactOracle<V> {
    items: Vec<(V, u64)>,
    total: u64,
    index: OnceCell<Index>,
}

impl<V: Ord + Clone> ExactOracle<V> {
    pub fn new() -> Self {
        Self { items: Vec::new(), total: 0, index: OnceCell::new() }
    }

    /// Records one update and returns its arrival index.
    pub fn push(&mut self, value: V, weight: u64) -> Result<u64, OracleError> {
        if weight == 0 {
            return Err(OracleError::ZeroWeight);
        }
        if self.items.len() >= ORACLE_MAX_ITEMS {
            return Err(OracleError::TooLarge);
        }
        self.items.push((value, weight));
        self.total += weight;
        self.index.take();
        Ok(self.items.len() as u64 - 1)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn total_weight(&self) -> u64 {
        self.total
    }

    pub fn items(&self) -> &[(V, u64)] {
        &self.items
    }

    fn index(&self) -> &Index {
        self.index.get_or_init(|| {
            let mut order: Vec<usize> = (0..self.items.len()).collect();
            order.sort_by(|&a, &b| self.items[a].0.cmp(&self.items[b].0).then(a.cmp(&b)));
            let mut prefix = Vec::with_capacity(order.len() + 1);
            prefix.push(0);
            let mut pos = vec![0; order.len()];
            let mut acc = 0;
            for (k, &i) in order.iter().enumerate() {
                acc += self.items[i].1;
                prefix.push(acc);
                pos[i] = k;
            }
            Index { order, prefix, pos }
        })
    }

    /// `(weight ranked before this arrival, that plus its own weight)`,
    /// with equal values ordered by arrival.
    pub fn rank_window_of_arrival(&self, arrival: u64) -> Result<(u64, u64), OracleError> {
        let idx = self.index();
        let k = *idx.pos.get(arrival as usize).ok_or(OracleError::UnknownArrival(arrival))?;
        Ok((idx.prefix[k], idx.prefix[k + 1]))
    }

    /// `(weight of values < value, weight of values <= value)`, or `None`
    /// if the value never occurred.
    pub fn rank_window(&self, value: &V) -> Option<(u64, u64)> {
        let idx = self.index();
        let lo = idx.order.partition_point(|&i| self.items[i].0 < *value);
        let hi = idx.order.partition_point(|&i| self.items[i].0 <= *value);
        (lo < hi).then(|| (idx.prefix[lo], idx.prefix[hi]))
    }

    /// The item at unfolded rank `clamp(ceil(phi * W), 1, W)`.
    pub fn quantile(&self, phi: Ratio<u64>) -> Result<V, OracleError> {
        if self.items.is_empty() {
            return Err(OracleError::Empty);
        }
        let idx = self.index();
        let r = target_rank(phi, self.total);
        let k = idx.prefix[1..].partition_point(|&p| p < r);
        Ok(self.items[idx.order[k]].0.clone())
    }

    /// Whether `value`'s rank window meets `[(phi - eps) W, (phi + eps) W]`.
    pub fn check_answer(&self, phi: Ratio<u64>, value: &V, epsilon: Ratio<u64>) -> AnswerCheck {
        let Some((below, through)) = self.rank_window(value) else {
            return AnswerCheck::NotInStream;
        };
        let (p, q) = (*phi.numer() as i128, *phi.denom() as i128);
        let (en, ed) = (*epsilon.numer() as i128, *epsilon.denom() as i128);
        let w = self.total as i128;
        // below <= (p/q + en/ed) W  and  through >= (p/q - en/ed) W
        let upper_ok = below as i128 * q * ed <= (p * ed + en * q) * w;
        let lower_ok = through as i128 * q * ed >= (p * ed - en * q) * w;
        if upper_ok && lower_ok {
            AnswerCheck::Pass
        } else {
            AnswerCheck::OutsideWindow { below, through }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn oracle(items: &[(i64, u64)]) -> ExactOracle<i64> {
        let mut o = ExactOracle::new();
        for &(v, w) in items {
            o.push(v, w).unwrap();
        }
        o
    }

    #[test]
    fn windows() {
        assert_eq!(oracle(&[(7, 3)]).rank_window(&7), Some((0, 3)));
        let o = oracle(&[(10, 5), (20, 5)]);
        assert_eq!(o.rank_window(&20), Some((5, 10)));
        assert_eq!(o.rank_window(&15), None);
        assert_eq!(o.rank_window_of_arrival(1), Ok((5, 10)));
        assert_eq!(o.rank_window_of_arrival(2), Err(OracleError::UnknownArrival(2)));
    }

    #[test]
    fn equal_values_rank_by_arrival() {
        let o = oracle(&[(4, 2), (1, 1), (4, 3)]);
        assert_eq!(o.rank_window_of_arrival(0), Ok((1, 3)));
        assert_eq!(o.rank_window_of_arrival(2), Ok((3, 6)));
        assert_eq!(o.rank_window(&4), Some((1, 6)));
    }

    #[test]
    fn quantiles() {
        let o = oracle(&(1..=10).map(|v| (v, 1)).collect::<Vec<_>>());
        assert_eq!(o.quantile(Ratio::new(3, 10)), Ok(3));
        assert_eq!(o.quantile(Ratio::from_integer(1)), Ok(10));
        assert_eq!(o.quantile(Ratio::from_integer(0)), Ok(1));
        let o = oracle(&[(1, 9), (100, 1)]);
        assert_eq!(o.quantile(Ratio::new(95, 100)), Ok(100));
        assert_eq!(ExactOracle::<i64>::new().quantile(Ratio::new(1, 2)), Err(OracleError::Empty));
    }

    #[test]
    fn answer_checks() {
        let o = oracle(&(1..=100).map(|v| (v, 1)).collect::<Vec<_>>());
        let half = Ratio::new(1, 2);
        let eps = Ratio::new(1, 10);
        assert!(o.check_answer(half, &50, Ratio::from_integer(0)).passed());
        assert!(o.check_answer(half, &41, eps).passed());
        assert!(o.check_answer(half, &60, eps).passed());
        // 61 has rank window [60, 61]; 60 <= 60 still meets the window edge.
        assert!(o.check_answer(half, &61, eps).passed());
        assert!(!o.check_answer(half, &62, eps).passed());
        assert!(!o.check_answer(half, &39, eps).passed());
        assert_eq!(o.check_answer(half, &1000, eps), AnswerCheck::NotInStream);
    }

    #[test]
    fn rejects_zero_weight() {
        assert_eq!(ExactOracle::new().push(1i64, 0), Err(OracleError::ZeroWeight));
    }
}
