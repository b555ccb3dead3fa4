//! Summary storage with the primitive insert and delete operations.
//!
//! Each stored entry keeps `g` (rank increment over its predecessor), `delta`
//! (rank uncertainty), its weight and its insertion time step. Rank bounds
//! are recovered with prefix sums:
//!
//! ```text
//! rmin(e_i) = g_i + sum_{j<i} (g_j + w_j - 1)
//! rmax(e_i) = rmin(e_i) + delta_i
//! ```
//!
//! A `+inf` sentinel with weight 1 sits above every stored value.

use std::collections::{BTreeMap, HashMap};
use std::ops::Bound::{Excluded, Unbounded};

use num_rational::Ratio;
use thiserror::Error;

use crate::band;

/// Largest accepted update weight.
pub const MAX_WEIGHT: u64 = u32::MAX as u64;

/// Arrival index reported for the sentinel.
pub const SENTINEL_ARRIVAL: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SummaryError {
    #[error("epsilon must lie strictly between 0 and 1, got {0}")]
    InvalidEpsilon(f64),
    #[error("chunk size must be positive")]
    ZeroEll,
    #[error("weight must be at least 1")]
    ZeroWeight,
    #[error("weight {0} exceeds the maximum of {MAX_WEIGHT}")]
    WeightTooLarge(u64),
    #[error("total weight overflows a 64-bit counter")]
    WeightOverflow,
    #[error("unweighted algorithms accept only weight 1, got {0}")]
    NonUnitWeight(u64),
    #[error("the sentinel cannot be deleted")]
    SentinelDeletion,
    #[error("no stored entry matches the handle")]
    UnknownEntry,
    #[error("invalid raw state: {0}")]
    InvalidRawState(&'static str),
    #[error("coverage tracking must be enabled before the first insert")]
    CoverageAfterInsert,
    #[error("smoothing requires the delayed schedule")]
    SmoothingNeedsDelay,
}

/// Lower and upper bound on an entry's rank in the unfolded stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RankBounds {
    pub rmin: u64,
    pub rmax: u64,
}

impl RankBounds {
    pub fn new(rmin: u64, rmax: u64) -> Self {
        Self { rmin, rmax }
    }
}

/// Identifies a stored entry. Equal values are distinguished by arrival index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryHandle<V> {
    Stored { value: V, arrival: u64 },
    Sentinel,
}

/// Read-only view of one stored entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SummaryEntry<V> {
    /// `None` for the sentinel.
    pub value: Option<V>,
    pub arrival: u64,
    pub weight: u64,
    pub g: u64,
    pub delta: u64,
    pub t0: u64,
}

impl<V: Clone> SummaryEntry<V> {
    pub fn is_sentinel(&self) -> bool {
        self.value.is_none()
    }

    /// Unfolded weight this entry accounts for: `g + w - 1`.
    pub fn big_g(&self) -> u64 {
        self.g + self.weight - 1
    }

    pub fn handle(&self) -> EntryHandle<V> {
        match &self.value {
            Some(v) => EntryHandle::Stored { value: v.clone(), arrival: self.arrival },
            None => EntryHandle::Sentinel,
        }
    }
}

/// Raw entry description for [`Summary::from_raw_parts`].
#[derive(Debug, Clone)]
pub struct RawEntry<V> {
    pub value: V,
    pub weight: u64,
    pub g: u64,
    pub delta: u64,
    pub t0: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Meta {
    pub weight: u64,
    pub g: u64,
    pub delta: u64,
    pub t0: u64,
}

impl Meta {
    pub fn big_g(&self) -> u64 {
        self.g + self.weight - 1
    }
}

/// Violation of the `g + delta <= t` invariant.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("gap_invariant violated at entry #{position} (arrival {arrival}): g + delta = {sum} > {bound}")]
pub struct InvariantViolation {
    pub position: usize,
    pub arrival: u64,
    pub sum: u64,
    pub bound: u64,
}

/// Result of checking explicit coverage sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CoverageReport {
    pub entries_checked: usize,
    pub items_checked: usize,
    pub violations: Vec<String>,
}

impl CoverageReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Default)]
struct Coverage {
    /// `(weight, t0)` per arrival index.
    items: Vec<(u64, u64)>,
    /// Arrivals covered by each stored entry, keyed by the entry's arrival.
    covers: HashMap<u64, Vec<u64>>,
}

/// Ordered summary storage.
#[derive(Debug, Clone)]
pub struct Summary<V> {
    pub(crate) entries: BTreeMap<(V, u64), Meta>,
    pub(crate) top: Meta,
    ell: u64,
    elements_seen: u64,
    total_weight: u64,
    coverage: Option<Coverage>,
}

/// Chunk size for a target precision: `max(1, round(1/eps))`.
pub fn ell_for_epsilon(epsilon: f64) -> Result<u64, SummaryError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SummaryError::InvalidEpsilon(epsilon));
    }
    Ok(((1.0 / epsilon).round() as u64).max(1))
}

const FRESH_TOP: Meta = Meta { weight: 1, g: 1, delta: 0, t0: 0 };

impl<V: Ord + Clone> Summary<V> {
    pub fn with_ell(ell: u64) -> Result<Self, SummaryError> {
        if ell == 0 {
            return Err(SummaryError::ZeroEll);
        }
        Ok(Self {
            entries: BTreeMap::new(),
            top: FRESH_TOP,
            ell,
            elements_seen: 0,
            total_weight: 0,
            coverage: None,
        })
    }

    pub fn with_epsilon(epsilon: f64) -> Result<Self, SummaryError> {
        Self::with_ell(ell_for_epsilon(epsilon)?)
    }

    /// Builds an arbitrary state. Entries must be sorted by value; they get
    /// arrival indices `0..len` in the given order. Total weight follows from
    /// conservation: `sum(g + w - 1) + sentinel_g = W + 1`.
    pub fn from_raw_parts(
        ell: u64,
        raw: Vec<RawEntry<V>>,
        sentinel_g: u64,
    ) -> Result<Self, SummaryError> {
        let mut s = Self::with_ell(ell)?;
        if sentinel_g == 0 {
            return Err(SummaryError::InvalidRawState("sentinel g must be at least 1"));
        }
        let mut covered = sentinel_g - 1;
        for (i, r) in raw.into_iter().enumerate() {
            if r.weight == 0 || r.g == 0 {
                return Err(SummaryError::InvalidRawState("weight and g must be at least 1"));
            }
            if r.weight > MAX_WEIGHT {
                return Err(SummaryError::WeightTooLarge(r.weight));
            }
            if let Some(((last, _), _)) = s.entries.last_key_value() {
                if *last > r.value {
                    return Err(SummaryError::InvalidRawState("entries must be sorted by value"));
                }
            }
            covered = covered
                .checked_add(r.g + r.weight - 1)
                .ok_or(SummaryError::WeightOverflow)?;
            let meta = Meta { weight: r.weight, g: r.g, delta: r.delta, t0: r.t0 };
            s.entries.insert((r.value, i as u64), meta);
        }
        s.top.g = sentinel_g;
        s.total_weight = covered;
        s.elements_seen = s.entries.len() as u64;
        Ok(s)
    }

    /// Turns on explicit coverage tracking. Only allowed on a fresh summary.
    pub fn enable_coverage(&mut self) -> Result<(), SummaryError> {
        if self.elements_seen > 0 {
            return Err(SummaryError::CoverageAfterInsert);
        }
        self.coverage = Some(Coverage::default());
        Ok(())
    }

    pub fn coverage_enabled(&self) -> bool {
        self.coverage.is_some()
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn effective_epsilon(&self) -> Ratio<u64> {
        Ratio::new(1, self.ell)
    }

    pub fn elements_seen(&self) -> u64 {
        self.elements_seen
    }

    pub fn total_weight(&self) -> u64 {
        self.total_weight
    }

    pub fn current_time(&self) -> u64 {
        band::current_time(self.total_weight, self.ell)
    }

    /// Number of stored entries, sentinel excluded.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts one update and returns its handle.
    pub fn insert(&mut self, value: V, weight: u64) -> Result<EntryHandle<V>, SummaryError> {
        if weight == 0 {
            return Err(SummaryError::ZeroWeight);
        }
        if weight > MAX_WEIGHT {
            return Err(SummaryError::WeightTooLarge(weight));
        }
        let new_total = self
            .total_weight
            .checked_add(weight)
            .ok_or(SummaryError::WeightOverflow)?;
        let arrival = self.elements_seen;
        let succ = self
            .entries
            .range((Excluded((value.clone(), u64::MAX)), Unbounded))
            .next()
            .map(|(_, m)| *m)
            .unwrap_or(self.top);
        let t0 = band::insertion_time(self.total_weight, self.ell);
        let meta = Meta { weight, g: 1, delta: succ.g + succ.delta - 1, t0 };
        self.entries.insert((value.clone(), arrival), meta);
        self.total_weight = new_total;
        self.elements_seen += 1;
        if let Some(cov) = &mut self.coverage {
            cov.items.push((weight, t0));
            cov.covers.insert(arrival, vec![arrival]);
        }
        Ok(EntryHandle::Stored { value, arrival })
    }

    /// Removes an entry, folding its `G = g + w - 1` into the successor's `g`.
    pub fn delete_entry(&mut self, handle: &EntryHandle<V>) -> Result<(), SummaryError> {
        match handle {
            EntryHandle::Sentinel => Err(SummaryError::SentinelDeletion),
            EntryHandle::Stored { value, arrival } => {
                let key = (value.clone(), *arrival);
                self.remove_key(&key).ok_or(SummaryError::UnknownEntry)
            }
        }
    }

    /// Removes by key. `None` if the key is not stored.
    pub(crate) fn remove_key(&mut self, key: &(V, u64)) -> Option<()> {
        let meta = self.entries.remove(key)?;
        let g = meta.big_g();
        let succ_arrival = match self.entries.range_mut((Excluded(key), Unbounded)).next() {
            Some(((_, a), m)) => {
                m.g += g;
                *a
            }
            None => {
                self.top.g += g;
                SENTINEL_ARRIVAL
            }
        };
        if let Some(cov) = &mut self.coverage {
            let moved = cov.covers.remove(&key.1).unwrap_or_default();
            cov.covers.entry(succ_arrival).or_default().extend(moved);
        }
        Some(())
    }

    /// All entries in order, sentinel last.
    pub fn entries(&self) -> Vec<SummaryEntry<V>> {
        let mut out: Vec<SummaryEntry<V>> = self
            .entries
            .iter()
            .map(|((v, a), m)| SummaryEntry {
                value: Some(v.clone()),
                arrival: *a,
                weight: m.weight,
                g: m.g,
                delta: m.delta,
                t0: m.t0,
            })
            .collect();
        out.push(SummaryEntry {
            value: None,
            arrival: SENTINEL_ARRIVAL,
            weight: self.top.weight,
            g: self.top.g,
            delta: self.top.delta,
            t0: self.top.t0,
        });
        out
    }

    /// Entries with reconstructed rank bounds, sentinel last.
    pub fn reconstruct_rank_bounds(&self) -> Vec<(SummaryEntry<V>, RankBounds)> {
        let mut base = 0u64;
        self.entries()
            .into_iter()
            .map(|e| {
                let rmin = base + e.g;
                base = rmin + e.weight - 1;
                let b = RankBounds::new(rmin, rmin + e.delta);
                (e, b)
            })
            .collect()
    }

    /// Checks `g + delta <= max(t, 1)` for every entry.
    pub fn check_invariant(&self) -> Result<(), InvariantViolation> {
        let bound = self.current_time().max(1);
        let rows = self.entries.iter().map(|((_, a), m)| (*a, m)).chain([(SENTINEL_ARRIVAL, &self.top)]);
        for (position, (arrival, m)) in rows.enumerate() {
            let sum = m.g + m.delta;
            if sum > bound {
                return Err(InvariantViolation { position, arrival, sum, bound });
            }
        }
        Ok(())
    }

    /// Sum of `g + w - 1` over all entries including the sentinel.
    pub fn covered_weight(&self) -> u64 {
        self.entries.values().map(Meta::big_g).sum::<u64>() + self.top.big_g()
    }

    /// Verifies explicit coverage sets against the stored metadata.
    /// Returns `None` when tracking is off.
    pub fn coverage_audit(&self) -> Option<CoverageReport> {
        let cov = self.coverage.as_ref()?;
        let t = self.current_time();
        let mut report = CoverageReport::default();
        let mut seen = vec![false; cov.items.len()];
        let rows = self
            .entries
            .iter()
            .map(|((_, a), m)| (*a, *m, false))
            .chain([(SENTINEL_ARRIVAL, self.top, true)]);
        for (arrival, meta, sentinel) in rows {
            report.entries_checked += 1;
            let owned: &[u64] = cov.covers.get(&arrival).map(Vec::as_slice).unwrap_or(&[]);
            let band_e = band::band_unchecked(meta.t0.min(t), t);
            let mut weight = if sentinel { 1 } else { 0 };
            for &x in owned {
                report.items_checked += 1;
                let Some(&(w, t0)) = cov.items.get(x as usize) else {
                    report.violations.push(format!("entry {arrival} covers unknown arrival {x}"));
                    continue;
                };
                if std::mem::replace(&mut seen[x as usize], true) {
                    report.violations.push(format!("arrival {x} is covered twice"));
                }
                weight += w;
                let band_x = band::band_unchecked(t0.min(t), t);
                if band_x > band_e {
                    report.violations.push(format!(
                        "entry {arrival} (band {band_e}) covers arrival {x} of band {band_x} at t={t}"
                    ));
                }
            }
            if weight != meta.big_g() {
                report.violations.push(format!(
                    "entry {arrival}: G = {} but covered weight is {weight}",
                    meta.big_g()
                ));
            }
        }
        if let Some(x) = seen.iter().position(|s| !s) {
            report.violations.push(format!("arrival {x} is not covered by any entry"));
        }
        Some(report)
    }

    /// Corrupts one entry's `delta` so that the gap invariant fails.
    #[doc(hidden)]
    pub fn inject_delta_fault(&mut self) {
        let bump = self.current_time() + 2;
        match self.entries.values_mut().next() {
            Some(m) => m.delta += bump,
            None => self.top.delta += bump,
        }
    }
}
