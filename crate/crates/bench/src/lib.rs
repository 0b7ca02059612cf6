//! Benchmarks for the memory functional; see `benches/`.
