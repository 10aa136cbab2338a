//! Harness for iterative example-based code generation.
//!
//! Tasks pair a reference program with a signature and input constraints.
//! Synthesizers see I/O examples, their candidates are checked against the
//! examples and then against the reference by differential search, and
//! counterexamples are fed back until the candidate is equivalent, conflicts
//! with a shown example, or runs out of rounds.

pub mod checker;
pub mod config;
pub mod constraint;
pub mod controller;
pub mod example_engine;
pub mod ledger;
pub mod metrics;
pub mod minilang;
pub mod rng;
pub mod run;
pub mod runner;
pub mod synth;
pub mod task;
pub mod value;
