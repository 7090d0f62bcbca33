//! Stochastic-calculus verification toolkit.
//!
//! The crate covers the whole pipeline from noise interpretation to density
//! equation: λ-point stochastic integrals, conversion of kinetic (λ = 1) SDEs
//! to Itô form, the structural condition `∇·D = 2σ∇·σᵀ` under which the Fick
//! form of the convection-diffusion equation is the density equation of a
//! drift-uncorrected kinetic SDE, and a finite-volume Fokker-Planck solver
//! used as the density oracle for Monte Carlo ensembles.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod error;
pub mod fokker_planck;
pub mod model_zoo;
pub mod rng;
pub mod sde_engine;
pub mod stats;
pub mod stoch_integrals;
pub mod tensor_field;

pub use error::{Error, Result};
pub use fokker_planck::{DensityGrid, GridAxis, PdeForm};
pub use model_zoo::{ModelSpec, ParamValue, ScalarSdeSpec};
pub use sde_engine::{EffectiveItoSde, PathStatus, SamplePath};
pub use stoch_integrals::{BrownianPath, BrownianSource, InterpretationTag, Partition};
pub use tensor_field::{DerivativeMode, Matrix, Rank3Field, SymMatrix, TensorFieldModel};
