//! Library half of the `lpwan-lt` command-line tool.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
