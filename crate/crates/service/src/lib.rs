//! Experiment service: serves stimuli to the browser UI in seeded random
//! order and stores every answer in an append-only log that the evaluation
//! readers accept as is.

pub mod display;
pub mod error;
pub mod http;
pub mod session;

pub use display::DisplayGeometry;
pub use error::{Result, ServiceError};
pub use http::{cors, router};
pub use session::Service;
