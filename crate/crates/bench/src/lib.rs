//! Criterion benchmarks for the corrector decisions and score evaluation; see `benches/`.
