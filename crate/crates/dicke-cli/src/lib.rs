//! Library surface of the scenario runner, exposed so integration tests can
//! drive config validation and the pipelines directly.

pub mod config;
pub mod output;
pub mod scenario;
