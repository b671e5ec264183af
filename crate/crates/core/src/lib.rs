//! Day-ahead plus FCR-N / FCR-D scheduling for a battery, with calendar and
//! cycle degradation priced inside a daily MILP.

pub mod builder;
pub mod config;
pub mod degradation;
pub mod droop;
pub mod ingest;
pub mod orchestrator;
pub mod report;
