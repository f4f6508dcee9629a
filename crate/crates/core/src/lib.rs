//! Design and simulation toolkit for a linear Paul trap with an integrated
//! optical cavity.
//!
//! - [`trap`]: secular frequencies, Mathieu q, pseudopotential, density;
//! - [`crystal`]: cold-plasma spheroids and two-species structure;
//! - [`cavity`]: resonator characterisation and ion-mode coupling;
//! - [`md`]: time-dependent molecular dynamics used to check the models;
//! - [`optimizer`]: voltage sweeps for the number of ions in the mode;
//! - [`analysis`]: linear fits of measured series;
//! - [`config`]: TOML configuration with apparatus defaults.
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below are the usual entry points.

// `!(x > 0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cavity;
pub mod config;
pub mod constants;
pub mod crystal;
pub mod error;
pub mod md;
pub mod num;
pub mod optimizer;
pub mod quadrature;
pub mod trap;

pub use error::{Error, Result};
pub use num::Real;

pub type TrapGeometry64 = trap::TrapGeometry<f64>;
pub type TrapGeometry32 = trap::TrapGeometry<f32>;
pub type DriveVoltages64 = trap::DriveVoltages<f64>;
pub type DriveVoltages32 = trap::DriveVoltages<f32>;
pub type IonSpecies64 = trap::IonSpecies<f64>;
pub type IonSpecies32 = trap::IonSpecies<f32>;
pub type CrystalSpec64 = crystal::CrystalSpec<f64>;
pub type CrystalSpec32 = crystal::CrystalSpec<f32>;
pub type CavitySpec64 = cavity::CavitySpec<f64>;
pub type CavitySpec32 = cavity::CavitySpec<f32>;
pub type SimConfig64 = md::SimConfig<f64>;
pub type SimConfig32 = md::SimConfig<f32>;
pub type SimState64 = md::SimState<f64>;
pub type SimState32 = md::SimState<f32>;
pub type SweepResult64 = optimizer::SweepResult<f64>;
pub type TimeSeries64 = analysis::TimeSeries<f64>;
