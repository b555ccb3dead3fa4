//! Deletion rules, deletion schedules and the per-item stream driver.
//!
//! A deletion step freezes the band values at the current time, walks the
//! summary from the largest value down and removes entries whose removal
//! keeps `g + delta <= t` for their right neighbour. The greedy rule removes
//! single entries; the segment rule removes an entry together with the run of
//! smaller-band entries directly to its left.

use std::collections::VecDeque;
use std::fmt;
use std::ops::Bound::{Excluded, Unbounded};
use std::str::FromStr;

use crate::band;
use crate::query::QuerySnapshot;
use crate::summary::{Summary, SummaryError, MAX_WEIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompactionRule {
    GreedyAdjacent,
    SegmentMerge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    GreedyUnweighted,
    GkUnweighted,
    GkWeighted,
    GreedyWeighted,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::GreedyUnweighted,
        Algorithm::GkUnweighted,
        Algorithm::GkWeighted,
        Algorithm::GreedyWeighted,
    ];

    pub fn rule(self) -> CompactionRule {
        match self {
            Algorithm::GreedyUnweighted | Algorithm::GreedyWeighted => CompactionRule::GreedyAdjacent,
            Algorithm::GkUnweighted | Algorithm::GkWeighted => CompactionRule::SegmentMerge,
        }
    }

    pub fn is_weighted(self) -> bool {
        matches!(self, Algorithm::GkWeighted | Algorithm::GreedyWeighted)
    }

    /// Short name used on the command line.
    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::GreedyUnweighted => "greedy",
            Algorithm::GkUnweighted => "gk",
            Algorithm::GkWeighted => "wgk",
            Algorithm::GreedyWeighted => "wgreedy",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| format!("unknown algorithm '{s}' (expected greedy, gk, wgreedy or wgk)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    /// Unweighted: after every completed chunk. Weighted: after every item.
    EveryStep,
    /// Delayed deletions with logarithmic gaps between steps.
    Delayed,
}

impl FromStr for ScheduleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "every" => Ok(ScheduleMode::EveryStep),
            "delayed" | "paper" => Ok(ScheduleMode::Delayed),
            _ => Err(format!("unknown schedule '{s}' (expected every or delayed)")),
        }
    }
}

/// When the next deletion step fires. `next_trigger` counts time steps for
/// unweighted algorithms and elements for weighted ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeletionSchedule {
    pub mode: ScheduleMode,
    pub next_trigger: u64,
    last_step_time: u64,
}

impl DeletionSchedule {
    pub fn new(mode: ScheduleMode) -> Self {
        Self { mode, next_trigger: 2, last_step_time: 0 }
    }
}

fn log2(t: u64) -> f64 {
    if t <= 1 {
        0.0
    } else {
        (t as f64).log2()
    }
}

/// Gap to the next delayed step, in time steps (unweighted) or elements.
pub fn delay_increment(algorithm: Algorithm, t: u64, ell: u64) -> u64 {
    let lg = log2(t);
    let inc = match algorithm {
        Algorithm::GreedyUnweighted => (lg * lg).ceil() as u64,
        Algorithm::GkUnweighted => lg.ceil() as u64,
        Algorithm::GkWeighted => (ell as f64 * lg).ceil() as u64,
        Algorithm::GreedyWeighted => ell.saturating_mul(((lg * lg).ceil() as u64).max(1)),
    };
    inc.max(1)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeletionStats {
    /// Time step the bands were frozen at.
    pub time: u64,
    pub examined: usize,
    pub deleted: usize,
}

/// Segment sums: each entry's `G` plus the `G*` of every maximal run of
/// directly preceding entries with a strictly smaller band. Input is
/// `(band, G)` in value order.
pub fn compute_gstar(items: &[(u32, u64)]) -> Vec<u64> {
    let mut out = Vec::with_capacity(items.len());
    let mut stack: Vec<usize> = Vec::new();
    for (i, &(band, g)) in items.iter().enumerate() {
        let mut total = g;
        while let Some(&top) = stack.last() {
            if items[top].0 >= band {
                break;
            }
            total += out[top];
            stack.pop();
        }
        out.push(total);
        stack.push(i);
    }
    out
}

/// Budget of deletion work units per arrival so that a step over `size`
/// entries finishes within the first half of a `gap`-arrival window.
pub fn smoothed_step_budget(size: usize, gap: u64) -> u64 {
    if size == 0 {
        return 0;
    }
    (2 * size as u64).div_ceil(gap.max(1))
}

#[derive(Debug, Clone)]
struct Node<V> {
    key: Option<(V, u64)>,
    band: u32,
    big_g: u64,
    gstar: u64,
    seg_start: usize,
    g: u64,
    delta: u64,
}

/// A deletion step that can be advanced a few micro-steps at a time.
/// Collecting one entry and examining one entry each cost one micro-step.
#[derive(Debug, Clone)]
pub(crate) struct DeletionPass<V> {
    rule: CompactionRule,
    time: u64,
    nodes: Vec<Node<V>>,
    stack: Vec<usize>,
    collected: bool,
    back: usize,
    right: usize,
    stats: DeletionStats,
}

impl<V: Ord + Clone> DeletionPass<V> {
    pub fn new(rule: CompactionRule, time: u64) -> Self {
        Self {
            rule,
            time,
            nodes: Vec::new(),
            stack: Vec::new(),
            collected: false,
            back: 0,
            right: 0,
            stats: DeletionStats { time, ..Default::default() },
        }
    }

    pub fn stats(&self) -> DeletionStats {
        self.stats
    }

    /// Runs up to `budget` micro-steps. Returns true once the pass is done.
    pub fn advance(&mut self, s: &mut Summary<V>, mut budget: u64) -> bool {
        while budget > 0 {
            if !self.collected {
                self.collect_one(s);
            } else if self.back == 0 {
                return true;
            } else {
                self.examine_one(s);
            }
            budget -= 1;
        }
        self.collected && self.back == 0
    }

    fn collect_one(&mut self, s: &Summary<V>) {
        let next = match self.nodes.last().and_then(|n| n.key.as_ref()) {
            None => s.entries.iter().next(),
            Some(k) => s.entries.range((Excluded(k), Unbounded)).next(),
        };
        let (key, meta) = match next {
            Some((k, m)) => (Some(k.clone()), *m),
            None => (None, s.top),
        };
        let idx = self.nodes.len();
        let band = band::band_unchecked(meta.t0.min(self.time), self.time);
        let mut gstar = meta.big_g();
        let mut seg_start = idx;
        while let Some(&top) = self.stack.last() {
            if self.nodes[top].band >= band {
                break;
            }
            gstar += self.nodes[top].gstar;
            seg_start = self.nodes[top].seg_start;
            self.stack.pop();
        }
        self.stack.push(idx);
        let done = key.is_none();
        self.nodes.push(Node { key, band, big_g: meta.big_g(), gstar, seg_start, g: meta.g, delta: meta.delta });
        if done {
            self.collected = true;
            self.stack = Vec::new();
            self.right = idx;
            self.back = idx;
        }
    }

    /// Examines node `back - 1` against the live right neighbour.
    fn examine_one(&mut self, s: &mut Summary<V>) {
        let i = self.back - 1;
        self.stats.examined += 1;
        let r = self.right;
        let node = &self.nodes[i];
        let (lhs, from) = match self.rule {
            CompactionRule::GreedyAdjacent => (node.big_g, i),
            CompactionRule::SegmentMerge => (node.gstar, node.seg_start),
        };
        let right = &self.nodes[r];
        let fits = lhs
            .checked_add(right.g)
            .and_then(|x| x.checked_add(right.delta))
            .is_some_and(|x| x <= self.time);
        if node.band <= right.band && fits {
            for k in from..=i {
                let key = self.nodes[k].key.take().expect("stored entry");
                s.remove_key(&key).expect("entry present during pass");
            }
            self.nodes[r].g += lhs;
            self.stats.deleted += i + 1 - from;
            self.back = from;
        } else {
            self.right = i;
            self.back = i;
        }
    }
}

impl<V: Ord + Clone> Summary<V> {
    /// One full deletion pass under `rule` at the current time step.
    pub fn deletion_step(&mut self, rule: CompactionRule) -> DeletionStats {
        let mut pass = DeletionPass::new(rule, self.current_time());
        pass.advance(self, u64::MAX);
        pass.stats()
    }
}

#[derive(Debug, Clone)]
struct Smoother<V> {
    pending: Option<DeletionPass<V>>,
    units: u64,
    buffer: VecDeque<(V, u64)>,
    max_buffer: usize,
}

/// A summary driven item by item under one algorithm and schedule.
#[derive(Debug, Clone)]
pub struct StreamSummary<V> {
    summary: Summary<V>,
    algorithm: Algorithm,
    schedule: DeletionSchedule,
    smoother: Option<Smoother<V>>,
    buffered_weight: u64,
    max_size: usize,
    steps: u64,
}

impl<V: Ord + Clone> StreamSummary<V> {
    /// New summary with `ell = max(1, round(1/epsilon))` and the delayed schedule.
    pub fn new(epsilon: f64, algorithm: Algorithm) -> Result<Self, SummaryError> {
        Ok(Self::from_summary(Summary::with_epsilon(epsilon)?, algorithm, ScheduleMode::Delayed))
    }

    pub fn with_ell(ell: u64, algorithm: Algorithm, mode: ScheduleMode) -> Result<Self, SummaryError> {
        Ok(Self::from_summary(Summary::with_ell(ell)?, algorithm, mode))
    }

    fn from_summary(summary: Summary<V>, algorithm: Algorithm, mode: ScheduleMode) -> Self {
        Self {
            summary,
            algorithm,
            schedule: DeletionSchedule::new(mode),
            smoother: None,
            buffered_weight: 0,
            max_size: 0,
            steps: 0,
        }
    }

    pub fn set_schedule(&mut self, mode: ScheduleMode) -> Result<(), SummaryError> {
        if self.smoother.is_some() && mode == ScheduleMode::EveryStep {
            return Err(SummaryError::SmoothingNeedsDelay);
        }
        self.schedule.mode = mode;
        Ok(())
    }

    /// Spreads each deletion step over the arrivals that follow its trigger.
    pub fn enable_smoothing(&mut self) -> Result<(), SummaryError> {
        if self.schedule.mode != ScheduleMode::Delayed {
            return Err(SummaryError::SmoothingNeedsDelay);
        }
        self.smoother.get_or_insert_with(|| Smoother {
            pending: None,
            units: 0,
            buffer: VecDeque::new(),
            max_buffer: 0,
        });
        Ok(())
    }

    pub fn enable_coverage(&mut self) -> Result<(), SummaryError> {
        self.summary.enable_coverage()
    }

    pub fn summary(&self) -> &Summary<V> {
        &self.summary
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn schedule(&self) -> DeletionSchedule {
        self.schedule
    }

    /// Largest stored size (sentinel excluded) seen so far.
    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn deletion_steps(&self) -> u64 {
        self.steps
    }

    /// Items waiting in the smoothing buffer.
    pub fn buffered(&self) -> usize {
        self.smoother.as_ref().map_or(0, |s| s.buffer.len())
    }

    pub fn max_buffered(&self) -> usize {
        self.smoother.as_ref().map_or(0, |s| s.max_buffer)
    }

    pub fn step_in_progress(&self) -> bool {
        self.smoother.as_ref().is_some_and(|s| s.pending.is_some())
    }

    pub fn snapshot(&self) -> QuerySnapshot<V> {
        QuerySnapshot::from_summary(&self.summary)
    }

    fn validate(&self, weight: u64) -> Result<(), SummaryError> {
        if weight == 0 {
            return Err(SummaryError::ZeroWeight);
        }
        if weight > MAX_WEIGHT {
            return Err(SummaryError::WeightTooLarge(weight));
        }
        if !self.algorithm.is_weighted() && weight != 1 {
            return Err(SummaryError::NonUnitWeight(weight));
        }
        self.summary
            .total_weight()
            .checked_add(self.buffered_weight)
            .and_then(|w| w.checked_add(weight))
            .ok_or(SummaryError::WeightOverflow)?;
        Ok(())
    }

    /// Feeds one update. Returns the stats of a deletion step that completed
    /// during this call, if any.
    pub fn process(&mut self, value: V, weight: u64) -> Result<Option<DeletionStats>, SummaryError> {
        self.validate(weight)?;
        if self.smoother.is_none() {
            return self.insert_and_trigger(value, weight);
        }
        let sm = self.smoother.as_mut().expect("smoothing enabled");
        if let Some(pass) = sm.pending.as_mut() {
            sm.buffer.push_back((value, weight));
            sm.max_buffer = sm.max_buffer.max(sm.buffer.len());
            self.buffered_weight += weight;
            let budget = sm.units.saturating_mul(2);
            if pass.advance(&mut self.summary, budget) {
                let stats = pass.stats();
                sm.pending = None;
                self.steps += 1;
                return Ok(Some(stats));
            }
            return Ok(None);
        }
        if sm.buffer.is_empty() {
            return self.insert_and_trigger(value, weight);
        }
        sm.buffer.push_back((value, weight));
        sm.max_buffer = sm.max_buffer.max(sm.buffer.len());
        self.buffered_weight += weight;
        let mut completed = None;
        for _ in 0..2 {
            let sm = self.smoother.as_mut().expect("smoothing enabled");
            if sm.pending.is_some() {
                break;
            }
            let Some((v, w)) = sm.buffer.pop_front() else { break };
            self.buffered_weight -= w;
            completed = self.insert_and_trigger(v, w)?.or(completed);
        }
        Ok(completed)
    }

    fn insert_and_trigger(&mut self, value: V, weight: u64) -> Result<Option<DeletionStats>, SummaryError> {
        self.summary.insert(value, weight)?;
        self.max_size = self.max_size.max(self.summary.len());
        if !self.trigger_due() {
            return Ok(None);
        }
        let t = self.summary.current_time();
        let gap = self.advance_schedule();
        let rule = self.algorithm.rule();
        match self.smoother.as_mut() {
            Some(sm) => {
                // The triggering arrival does the first share of the work.
                sm.units = smoothed_step_budget(self.summary.len() + 1, gap);
                let mut pass = DeletionPass::new(rule, t);
                if pass.advance(&mut self.summary, sm.units.saturating_mul(2)) {
                    self.steps += 1;
                    return Ok(Some(pass.stats()));
                }
                sm.pending = Some(pass);
                Ok(None)
            }
            None => {
                self.steps += 1;
                Ok(Some(self.summary.deletion_step(rule)))
            }
        }
    }

    fn trigger_due(&self) -> bool {
        let s = &self.summary;
        match (self.algorithm.is_weighted(), self.schedule.mode) {
            (false, ScheduleMode::EveryStep) => s.current_time() > self.schedule.last_step_time,
            (false, ScheduleMode::Delayed) => s.current_time() >= self.schedule.next_trigger,
            (true, ScheduleMode::EveryStep) => true,
            (true, ScheduleMode::Delayed) => s.elements_seen() >= self.schedule.next_trigger,
        }
    }

    /// Moves the trigger forward and returns the number of arrivals until it.
    fn advance_schedule(&mut self) -> u64 {
        let s = &self.summary;
        let t = s.current_time();
        let ell = s.ell();
        self.schedule.last_step_time = t;
        if self.schedule.mode == ScheduleMode::EveryStep {
            return if self.algorithm.is_weighted() { 1 } else { ell };
        }
        let inc = delay_increment(self.algorithm, t, ell);
        if self.algorithm.is_weighted() {
            self.schedule.next_trigger = s.elements_seen() + inc;
            inc
        } else {
            self.schedule.next_trigger = t + inc;
            (t + inc).saturating_mul(ell) - s.total_weight()
        }
    }

    /// Completes any in-flight step, drains buffered items and runs a final
    /// deletion step.
    pub fn flush(&mut self) -> DeletionStats {
        loop {
            let Some(sm) = self.smoother.as_mut() else { break };
            if let Some(mut pass) = sm.pending.take() {
                pass.advance(&mut self.summary, u64::MAX);
                self.steps += 1;
                continue;
            }
            let Some((v, w)) = sm.buffer.pop_front() else { break };
            self.buffered_weight -= w;
            self.insert_and_trigger(v, w).expect("buffered items were validated");
        }
        self.steps += 1;
        self.summary.deletion_step(self.algorithm.rule())
    }

    #[doc(hidden)]
    pub fn summary_mut(&mut self) -> &mut Summary<V> {
        &mut self.summary
    }
}
