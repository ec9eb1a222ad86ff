//! Small dense-network kernel: ReLU MLPs with reverse-mode gradients, Adam,
//! and the tanh-squashed Gaussian policy head.

mod adam;
mod mlp;
mod policy;

pub use adam::{adam_update, AdamConfig, AdamMoments, ScalarAdam};
pub(crate) use mlp::{hcat, stack_rows};
pub use mlp::{Dense, Gradients, Mlp, Tape};
pub use policy::{
    deterministic_action, sample_squashed_gaussian, squash_with_noise, tanh_log_det_jacobian,
    GaussianHead, LogStdBounds, SquashedSample,
};
