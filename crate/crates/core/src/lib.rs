//! Twin-actor soft actor-critic (TASAC) control of a jacketed batch
//! transesterification reactor.
//!
//! The crate is organized bottom-up:
//!
//! - [`nn`]: dense ReLU networks with hand-written reverse-mode gradients,
//!   Adam, and the tanh-squashed Gaussian policy head.
//! - [`reactor`]: kinetic and energy-balance model, RK4 integration, and the
//!   control environment with its nominal, measurement-noise and
//!   batch-to-batch-variation scenarios.
//! - [`replay`]: ring-buffer experience replay.
//! - [`agent`]: the twin-actor agent, the five action-selection strategies,
//!   the single-actor SAC baseline, and the training loop.
//! - [`bench`]: multi-seed experiments, ITAE aggregation, comparison tables
//!   and plot data.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod agent;
pub mod bench;
mod binio;
pub mod error;
pub mod metrics;
pub mod nn;
pub mod reactor;
pub mod replay;
pub mod rng;

pub use error::{Error, Result};
pub use rng::Rng;
