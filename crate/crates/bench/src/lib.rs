//! Criterion benchmarks for the planning and simulation pipeline live in
//! `benches/pipeline.rs`; this crate intentionally exports nothing.
