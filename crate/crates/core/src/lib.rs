//! Simulation and exact analytics for the γ-Brownian ratchet: reflected
//! Brownian motion whose reflection point jumps, at rate `γ(X − R)`, to a
//! uniform point of `[R, X]`.

pub mod engine;
pub mod error;
pub mod experiment;
pub mod io;
pub mod jumpchain;
pub mod model;
pub mod real;
pub mod rng;
pub mod renewal;
pub mod special;
pub mod variants;

pub use error::{Error, Result};
pub use model::{
    rescale_trajectory, validate, BindingMeasure, BindingWindow, EngineKind, JumpEvent,
    RatchetParams, RatchetState, Touch, Trajectory, ValidationReport, VariantKind, VariantSpec,
};
pub use real::Real;

pub type Params = RatchetParams<f64>;
pub type State = RatchetState<f64>;
pub type Path = Trajectory<f64>;
pub type Jump = JumpEvent<f64>;
pub type Variant = VariantSpec<f64>;
