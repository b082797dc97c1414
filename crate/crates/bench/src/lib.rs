//! Criterion benchmarks for `qflow-core`; see `benches/`.
