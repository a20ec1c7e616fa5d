//! Reference-value acceptance checks live in `tests/acceptance.rs`.
