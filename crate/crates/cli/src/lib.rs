//! Problem DSL, reports and command dispatch.

pub mod dsl;
pub mod report;
pub mod run;
