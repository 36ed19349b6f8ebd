//! Streaming quantile summaries over totally ordered data.
//!
//! The centerpiece is [`OnlineSummary`], a randomized cash-register-model
//! summary that answers rank and quantile queries to epsilon-relative error
//! at any point in a stream of unknown length, in space that depends on
//! epsilon but not on the stream. It is assembled from two parts that are
//! useful on their own:
//!
//!   * [`GkSummary`], the deterministic Greenwald-Khanna summary, and
//!   * [`BernoulliSampler`], seeded exact-rational-rate downsampling,
//!
//! composed once for streams of known length ([`FixedNSummary`]) and arranged
//! into exponentially growing rows for the online case.
//!
//! Everything needed to check the claims empirically ships alongside: an
//! exact rank oracle ([`ExactOracle`]), reproducible stream generators
//! ([`stream`]), and harness entry points for error evaluation ([`eval`]),
//! space/throughput measurement ([`bench`]), and sample-stream health
//! ([`goodness`]).

pub mod bench;
pub mod error;
pub mod eval;
pub mod fixed_n;
pub mod gk;
pub mod goodness;
pub mod online;
pub mod oracle;
pub mod reservoir;
pub mod sampler;
pub mod stream;

pub use error::{QsError, StreamError, SummaryError};
pub use eval::Algorithm;
pub use fixed_n::{FixedNSummary, RankAnswer};
pub use gk::{GkSummary, GkTuple};
pub use online::{OnlineConfig, OnlineStats, OnlineSummary, ReplacementQueue};
pub use oracle::ExactOracle;
pub use reservoir::ReservoirSummary;
pub use sampler::BernoulliSampler;
pub use stream::{StreamKind, StreamSpec};
