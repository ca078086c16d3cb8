//! Library half of the CLI: document formats, command logic, and the
//! benchmark harness. The binary in `main.rs` is a thin argument parser
//! over these modules so that integration tests can drive them directly.

pub mod bench;
pub mod commands;
pub mod conic_doc;
pub mod doc;
