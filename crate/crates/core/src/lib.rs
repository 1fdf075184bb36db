pub mod arith;
pub mod error;
pub mod forms;
pub mod harper;
pub mod lfun;
pub mod moments;
pub mod petersson;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
