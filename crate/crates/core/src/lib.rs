pub mod cli;
pub mod dataset;
pub mod ddpo;
pub mod metrics;
pub mod reward;
pub mod verbalization;
