//! Entity model fusion: trust-weighted ensembles over internal regressors
//! and external domain-knowledge models, distilled into a compact GAN
//! generator.

mod demo;
mod ensemble;
mod gan;
pub mod protocol;

pub use demo::run_demo;
pub use ensemble::{register_dkm, EnsembleModel, MemberDescriptor, PredictorHandle, PredictorKind};
pub use gan::{
    discriminator_grads, discriminator_loss, distill, generator_grads, generator_loss,
    Discriminator, DistillReport, FusionConfig, GaenBundle, Generator, Mlp,
};
pub use protocol::{serve_stdio, DkmClient, DkmRequest, DkmResponse, DEFAULT_TIMEOUT};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum GaenError {
    #[error("empty DKM descriptor: {descriptor}")]
    BadDescriptor { descriptor: String },
    #[error("failed to launch DKM `{command}`: {message}")]
    Spawn { command: String, message: String },
    #[error("broken pipe to DKM `{command}`: {message}")]
    Pipe { command: String, message: String },
    #[error("DKM `{command}` timed out on request {id}")]
    Timeout { command: String, id: u64 },
    #[error("malformed response from DKM `{command}`: {line}")]
    Malformed { command: String, line: String },
    #[error("DKM `{command}` answered request {expected} with id {got}")]
    IdMismatch {
        command: String,
        expected: u64,
        got: u64,
    },
    #[error("trust weight must be positive, got {trust_weight}")]
    BadTrustWeight { trust_weight: f64 },
    #[error("member `{member}`: expected dimension {expected}, got {got}")]
    DimMismatch {
        member: String,
        expected: usize,
        got: usize,
    },
    #[error("member `{member}` failed: {message}")]
    MemberFailure { member: String, message: String },
    #[error("an ensemble needs at least one member")]
    EmptyEnsemble,
    #[error("ensemble members disagree on dimension")]
    InconsistentMembers,
    #[error("invalid fusion config (band, batch size, noise std, learning rate)")]
    BadFusionConfig,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}
