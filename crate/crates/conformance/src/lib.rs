//! Acceptance checks for `longpath`; see `tests/acceptance.rs`.
