//! Benchmarks for the selection hot paths live in `benches/`.
