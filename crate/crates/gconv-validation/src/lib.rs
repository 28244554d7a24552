//! End-to-end acceptance suite for `gconv`; the checks live in
//! `tests/acceptance.rs`.
