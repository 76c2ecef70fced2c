// benchmark-only crate; see benches/core.rs
