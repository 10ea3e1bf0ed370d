//! Benchmark-only crate; see benches/decode.rs.
