//! Engine side of catfuzz: supervised workers, the synthetic target suite,
//! database persistence, campaigns and reports.

pub mod campaign;
pub mod exec;
pub mod log;
pub mod protocol;
pub mod report;
pub mod store;
pub mod synthetic;
