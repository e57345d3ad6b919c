//! File formats, scenarios, reports and the acceptance suite around
//! `bvlab-core`.

pub mod acceptance;
pub mod json;
pub mod report;
pub mod scenario;
pub mod suites;
