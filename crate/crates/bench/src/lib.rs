//! Benchmarks live in `benches/`; run `cargo bench -p osse-bench`.
