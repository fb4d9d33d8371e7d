//! Benchmarks for `fairrank-core`; run with `cargo bench -p fairrank-bench`.
