//! Deterministic streaming quantile summaries.
//!
//! Four compaction algorithms share one storage layer: greedy and
//! segment-merging (GK-style) variants, each for unit-weight and weighted
//! streams. Summaries answer any quantile within `eps * W` ranks, where `W`
//! is the total stream weight.
//!
//! ```
//! use gkw_core::{Algorithm, StreamSummary};
//! use num_rational::Ratio;
//!
//! let mut s = StreamSummary::new(0.01, Algorithm::GkWeighted).unwrap();
//! for v in 0..10_000i64 {
//!     s.process(v, 1 + (v as u64 % 3)).unwrap();
//! }
//! s.flush();
//! let (median, _bounds) = s.snapshot().query_quantile(Ratio::new(1, 2)).unwrap();
//! assert!((4_700..5_300).contains(&median));
//! ```

pub mod band;
pub mod compaction;
pub mod oracle;
pub mod query;
pub mod stream;
pub mod summary;

pub use compaction::{
    compute_gstar, delay_increment, smoothed_step_budget, Algorithm, CompactionRule, DeletionSchedule,
    DeletionStats, ScheduleMode, StreamSummary,
};
pub use oracle::{AnswerCheck, ExactOracle, OracleError};
pub use query::{parse_phi, target_rank, PhiError, QueryError, QuerySnapshot};
pub use stream::{generate, parse_line, read_items, StreamItem, StreamSpec};
pub use summary::{
    ell_for_epsilon, CoverageReport, EntryHandle, InvariantViolation, RankBounds, RawEntry, Summary,
    SummaryEntry, SummaryError,
};
