//! Host crate for the `acceptance` test target. See `tests/acceptance.rs`.
