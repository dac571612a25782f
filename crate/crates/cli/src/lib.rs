//! Command line and HTTP front end for the blimp design workbench.

pub mod api;
pub mod report;
pub mod store;
