//! Benchmarks for the `fdiab` solvers and simulator; see `benches/solvers.rs`.
