//! Surface files, experiment configuration and CSV reports.

pub mod config;
pub mod format;
pub mod report;
