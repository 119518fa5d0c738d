//! Criterion benchmarks for the clustering pipeline live in `benches/`.
