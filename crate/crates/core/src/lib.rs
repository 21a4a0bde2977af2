//! Estimation of the initial state parameter of contractive soils from
//! undrained CPTu records.
//!
//! - [`material`]: critical-state parameters and in-situ initialization.
//! - [`casm`]: single-element undrained triaxial driver for the CASM model.
//! - [`cavity`]: undrained spherical and cylindrical cavity expansion.
//! - [`inversion`]: cone metrics and state parameter inversion methods.
//! - [`fixtures`]: bundled reference tables.

// `!(x > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod casm;
pub mod cavity;
pub mod error;
pub mod fixtures;
pub mod inversion;
pub mod material;

pub use casm::{
    simulate_undrained_triaxial, PathPoint, PreconsolidationAnchor, StartMode, TriaxialConfig,
    TriaxialResult,
};
pub use cavity::{
    dilog_series, normalized_effective_resistance, total_limit_pressure, CavityGeometry,
    CavityInput, CavityResult,
};
pub use error::{Error, Result};
pub use fixtures::{load_fixtures, FixtureCptuRow, FixtureMaterialRow, Fixtures};
pub use inversion::{
    cq_factor, interpret_profile, invert_psi, k0_correction, method_params, normalized_metrics,
    CptuRecord, InterpretConfig, InversionParams, K0Policy, Method, NormalizedMetrics, ProfileRow,
};
pub use material::{
    csl_slope_m, initialize_in_situ, state_parameter, CasmMaterial, LoadingGeometry, SoilState,
};
