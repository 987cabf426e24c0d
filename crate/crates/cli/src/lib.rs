//! Harness around `bellstab_core`: JSON configuration, the experiment
//! runners behind each subcommand, and CSV/JSON result files.

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
