pub mod census;
pub mod cli;
pub mod cyclegraph;
pub mod error;
pub mod ffield;
pub mod numthy;
pub mod oracle;
pub mod par;
pub mod verify;

pub use error::{Error, Result};
pub use numthy::Nat;
pub use par::Exec;
