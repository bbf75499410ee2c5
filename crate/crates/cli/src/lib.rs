//! Library side of the command-line driver: the flat configuration
//! document, fixture parsing and validation, and the subcommand
//! implementations.

pub mod commands;
pub mod config;
pub mod fixture;

pub use commands::{EXIT_ABORT, EXIT_CONFIG, EXIT_DBA_VIOLATION, EXIT_OK};
pub use config::{Config, Overrides};
pub use fixture::{read_fixture, validate_fixture, FixtureReport, FixtureRow};
