//! Library surface of the batch front door, shared by the binary and the
//! acceptance test target.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;
