//! Thermodynamics of a single bosonic mode coupled to a squeezed thermal
//! reservoir.
//!
//! The crate provides two independent dynamical backends — exact Gaussian
//! moment algebra ([`gaussian`]) and a truncated-Fock-space Lindblad solver
//! ([`fock`]) — plus thermodynamic bookkeeping of heat, quadrature asymmetry,
//! entropy flow and entropy production ([`thermo`]), the analytic Otto cycle
//! with its four operational regimes ([`otto`]), and a Monte-Carlo
//! repeated-interaction model of the reservoir ([`collisional`]).
//!
//! Units: ħ = k_B = 1 and the base mode frequency ω₁ = 1 set the scale;
//! all quantities are dimensionless in these units.

pub mod collisional;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod otto;
pub mod reservoir;
pub mod thermo;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, GaussianUnitary, ModeSpec, SqueezeParams};
pub use reservoir::ReservoirSpec;
