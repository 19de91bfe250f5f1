//! File formats, reports and the command-line front end of `relusolve`.

pub mod commands;
pub mod coo;
pub mod error;
pub mod netfile;
pub mod output;
pub mod problem;
pub mod report;
