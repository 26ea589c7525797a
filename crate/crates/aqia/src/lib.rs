//! Adaptive quantum Ising agents.
//!
//! An ensemble of small, exactly diagonalized transverse-field Ising patches
//! ("agents") coupled through Gaussian similarity kernels built from each
//! agent's reduced observables. Iterating the resulting mean-field
//! self-consistency map organizes the ensemble into critical, glassy, or
//! community-polarized equilibria; this crate implements the simulation
//! engine, the diagnostics (order parameters, modularity, susceptibility,
//! Binder cumulant), and the scaling-analysis pipeline (hysteresis sweeps,
//! data collapse, bootstrap confidence intervals).
//!
//! See the `examples/` directory for one runnable walkthrough per capability
//! and the `aqia` binary for the batch-oriented command-line interface.

pub mod agent;
pub mod cli;
pub mod config;
pub mod diagnostics;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod kernels;
pub mod meanfield;
pub mod rng;
pub mod scaling;

pub use agent::{AgentParams, Channel, FeedbackFields, GroundState, Summary};
pub use ensemble::{EnsembleRecord, RealizationResult, RegimePreset, Topology};
pub use error::{AqiaError, Result};
pub use kernels::{ChannelWeights, EnsembleStats, FieldNorm, KernelConfig};
pub use meanfield::{FixedPoint, IterationTrace, LoopConfig};
pub use scaling::{FssDataset, FssRaw, ScalingFit, SweepResult};
