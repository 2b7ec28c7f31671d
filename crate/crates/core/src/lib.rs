pub mod battery;
pub mod duty_cycle;
pub mod error;
pub mod lambert;
pub mod lifetime;
pub mod simulator;
pub mod trace;

pub use error::{Error, Result};
