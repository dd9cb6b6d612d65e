//! Criterion benchmarks for the crypto core and roll preparation; see `benches/`.
