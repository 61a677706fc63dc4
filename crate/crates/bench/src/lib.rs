//! Criterion benchmarks for the `polyion` kernels; see `benches/kernels.rs`.
