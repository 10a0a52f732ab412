//! Taylor-map polynomial neural networks.
//!
//! A TMPNN is a multi-target polynomial regressor of order `k^p` built from
//! `p` applications of one order-`k` polynomial map with shared weights.
//! The input features are padded with target (and optional latent) slots,
//! the map is iterated, and the target slots of the final state are the
//! predictions. Because each application is an Euler step of a polynomial
//! ODE, a trained model can be read back as a system of differential
//! equations, and re-discretized with more steps.
//!
//! Modules:
//!
//! - [`basis`]: reduced monomial basis and its Jacobian.
//! - [`taylor_map`]: the shared layer and its gradients.
//! - [`model`]: the regressor, reverse-mode gradients and the training loop.
//! - [`optim`]: Adamax and gradient clipping.
//! - [`odeview`]: ODE extraction, rendering, RK4 reference integration,
//!   order raising and time rescaling.
//! - [`data`]: generators, CSV loading, splits, scaling and metrics.

pub mod basis;
pub mod data;
pub mod error;
pub mod model;
pub mod odeview;
pub mod optim;
pub mod taylor_map;

pub use basis::{build_basis, MonomialBasis};
pub use data::{Dataset, Scaler, TargetSpec};
pub use error::{Result, TmpnnError};
pub use model::{
    BatchSize, EarlyStop, EpochRecord, Forward, Gradient, Init, ModelSpec, Scaling, TmpnnModel,
    TrainConfig, TrainReport,
};
pub use odeview::OdeSystem;
pub use optim::{AdamaxConfig, AdamaxState};
pub use taylor_map::TaylorMapWeights;
