//! Criterion benchmarks for the `dichotomy` crate live in `benches/`.
