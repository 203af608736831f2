//! Library side of the `isserlis` command: spec parsing, dispatch, result
//! records and the selftest suites.

pub mod record;
pub mod run;
pub mod selftest;
pub mod spec;
