//! Benchmark-only crate; see `benches/summaries.rs`.
