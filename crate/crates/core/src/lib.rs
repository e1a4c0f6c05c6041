//! Min-max MSE transceiver design for multi-pair MIMO relay networks.
//!
//! The crate covers one-way and two-way amplify-and-forward relaying with
//! source precoders, a relay matrix and linear receivers. Designs are
//! computed by an alternating scheme of convex subproblems or by a cheaper
//! decomposition into first-hop and second-hop problems, all solved by the
//! embedded conic solver in [`conic`].

pub mod conic;
pub mod error;
pub mod linalg;
pub mod model;
pub mod oneway;
pub mod opt;
pub mod sim;
pub mod twoway;

pub use error::{Error, Result};
