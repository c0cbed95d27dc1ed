//! Frame server for the headless visual environment, plus the operator
//! commands built on it (`serve`, `dump`, `bench`).

pub mod cli;
pub mod client;
pub mod dump;
pub mod host;
pub mod server;
pub mod session;

pub use server::{start, ServerConfig, ServerHandle};
