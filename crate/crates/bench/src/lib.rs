//! Workload generation, oracle-diff replay, fuzzing, cost tables and SSSP
//! batch runs for the `lowenv` structures.

pub mod cost;
pub mod disks;
pub mod fuzz;
pub mod runner;
pub mod workload;

use std::fmt;

/// A malformed input line. Line 0 means the input as a whole.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub msg: String,
}

impl ParseError {
    pub fn new(line: usize, msg: String) -> Self {
        ParseError { line, msg }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.msg)
    }
}

impl std::error::Error for ParseError {}
