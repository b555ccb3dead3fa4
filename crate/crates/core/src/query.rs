//! Frozen prefix-sum view of a summary and the quantile/rank queries on it.

use num_rational::Ratio;
use thiserror::Error;

use crate::summary::{RankBounds, Summary};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("the summary holds no stream items")]
    Empty,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhiError {
    #[error("cannot parse '{0}' as a quantile")]
    Malformed(String),
    #[error("quantile {0} lies outside [0, 1]")]
    OutOfRange(String),
}

/// Parses a decimal (`0.25`, `.5`, `1`) or fraction (`1/3`) into an exact
/// ratio in `[0, 1]`.
pub fn parse_phi(text: &str) -> Result<Ratio<u64>, PhiError> {
    let s = text.trim();
    let bad = || PhiError::Malformed(text.to_string());
    let ratio = if let Some((n, d)) = s.split_once('/') {
        let n: u64 = n.trim().parse().map_err(|_| bad())?;
        let d: u64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        Ratio::new(n, d)
    } else {
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        let digits = |p: &str| p.is_empty() || p.bytes().all(|b| b.is_ascii_digit());
        if !digits(int) || !digits(frac) || frac.len() > 18 {
            return Err(bad());
        }
        let int: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
        let den = 10u64.pow(frac.len() as u32);
        let frac: u64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let num = int.checked_mul(den).and_then(|x| x.checked_add(frac)).ok_or_else(bad)?;
        Ratio::new(num, den)
    };
    if ratio > Ratio::from_integer(1) {
        return Err(PhiError::OutOfRange(text.to_string()));
    }
    Ok(ratio)
}

/// `clamp(ceil(phi * w), 1, w)` in exact arithmetic.
pub fn target_rank(phi: Ratio<u64>, w: u64) -> u64 {
    let (p, q) = (*phi.numer() as u128, *phi.denom() as u128);
    let r = (p * w as u128).div_ceil(q);
    r.clamp(1, w.max(1) as u128) as u64
}

/// Immutable per-entry rank bounds. The sentinel is kept separately.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySnapshot<V> {
    values: Vec<V>,
    weights: Vec<u64>,
    rmin: Vec<u64>,
    rmax: Vec<u64>,
    /// Lower bound on the rank of each entry's last copy.
    last: Vec<u64>,
    sentinel: RankBounds,
    total_weight: u64,
    ell: u64,
}

impl<V: Ord + Clone> QuerySnapshot<V> {
    pub fn from_summary(s: &Summary<V>) -> Self {
        let rows = s.reconstruct_rank_bounds();
        let n = rows.len() - 1;
        let mut snap = Self {
            values: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            rmin: Vec::with_capacity(n),
            rmax: Vec::with_capacity(n),
            last: Vec::with_capacity(n),
            sentinel: rows[n].1,
            total_weight: s.total_weight(),
            ell: s.ell(),
        };
        for (e, b) in rows.into_iter().take(n) {
            snap.values.push(e.value.expect("stored entry"));
            snap.weights.push(e.weight);
            snap.rmin.push(b.rmin);
            snap.rmax.push(b.rmax);
            snap.last.push(b.rmin + e.weight - 1);
        }
        snap
    }

    /// Hand-built snapshot from `(value, weight, rmin, rmax)` rows. The
    /// sentinel sits at rank `total_weight + 1`.
    pub fn from_parts(ell: u64, total_weight: u64, rows: Vec<(V, u64, u64, u64)>) -> Self {
        let mut snap = Self {
            values: Vec::new(),
            weights: Vec::new(),
            rmin: Vec::new(),
            rmax: Vec::new(),
            last: Vec::new(),
            sentinel: RankBounds::new(total_weight + 1, total_weight + 1),
            total_weight,
            ell,
        };
        for (v, w, lo, hi) in rows {
            snap.values.push(v);
            snap.weights.push(w);
            snap.rmin.push(lo);
            snap.rmax.push(hi);
            snap.last.push(lo + w - 1);
        }
        snap
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Stream weight `W`, sentinel excluded.
    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    /// Unfolded length including the sentinel copy.
    pub fn unfolded_len(&self) -> u64 {
        self.total_weight + 1
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    /// `floor(W / ell)`.
    pub fn tolerance(&self) -> u64 {
        self.total_weight / self.ell
    }

    /// Row `i` as `(value, weight, bounds)`.
    pub fn row(&self, i: usize) -> (&V, u64, RankBounds) {
        (&self.values[i], self.weights[i], RankBounds::new(self.rmin[i], self.rmax[i]))
    }

    pub fn sentinel_bounds(&self) -> RankBounds {
        self.sentinel
    }

    /// Answer for quantile `phi`: the first entry whose last copy can reach
    /// rank `r - floor(W/ell)` where `r = ceil(phi * W)`.
    pub fn query_quantile(&self, phi: Ratio<u64>) -> Result<(V, RankBounds), QueryError> {
        if self.values.is_empty() || self.total_weight == 0 {
            return Err(QueryError::Empty);
        }
        let need = target_rank(phi, self.total_weight).saturating_sub(self.tolerance());
        let i = self.last.partition_point(|&x| x < need).min(self.values.len() - 1);
        let (v, _, b) = self.row(i);
        Ok((v.clone(), b))
    }

    /// Same answer as [`Self::query_quantile`] by linear scan.
    pub fn query_quantile_linear(&self, phi: Ratio<u64>) -> Result<(V, RankBounds), QueryError> {
        if self.values.is_empty() || self.total_weight == 0 {
            return Err(QueryError::Empty);
        }
        let need = target_rank(phi, self.total_weight).saturating_sub(self.tolerance());
        let i = (0..self.values.len())
            .find(|&i| self.rmin[i] + self.weights[i] - 1 >= need)
            .unwrap_or(self.values.len() - 1);
        let (v, _, b) = self.row(i);
        Ok((v.clone(), b))
    }

    /// Bounds on the rank of the last copy of the largest stored entry
    /// `<= value`; `(0, 0)` when every stored value is larger.
    pub fn query_rank(&self, value: &V) -> RankBounds {
        let count = self.values.partition_point(|v| v <= value);
        if count == 0 {
            return RankBounds::default();
        }
        let i = count - 1;
        let extra = self.weights[i] - 1;
        RankBounds::new(self.rmin[i] + extra, self.rmax[i] + extra)
    }

    /// True iff every gap `rmax_i - (rmin_{i-1} + w_{i-1} - 1)` is at most
    /// `max(floor(W/ell), 1)` and first-copy ranks are strictly ordered.
    pub fn verify_query_condition(&self) -> bool {
        let limit = self.tolerance().max(1);
        let mut prev_last = 0u64;
        let rows = (0..self.values.len())
            .map(|i| (self.weights[i], self.rmin[i], self.rmax[i]))
            .chain([(1, self.sentinel.rmin, self.sentinel.rmax)]);
        for (w, lo, hi) in rows {
            if lo <= prev_last || hi < lo || hi - prev_last > limit {
                return false;
            }
            prev_last = lo + w - 1;
        }
        true
    }
}
