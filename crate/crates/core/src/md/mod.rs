//! Molecular dynamics of ions in the time-dependent linear Paul trap field.
//!
//! Ions move under the instantaneous rf quadrupole
//! `Phi_rf = U_rf cos(Omega t + phase) (x^2 - y^2) / (2 r0^2)`, the static
//! end-cap potential `Phi_end = eta U_end (z^2 - (x^2 + y^2) / 2) / z_half^2`
//! and direct-summation Coulomb repulsion. Laser cooling is a linear friction
//! force, axial by default, optionally with a Langevin recoil term.
//!
//! The integrator is velocity Verlet with the friction (and noise) applied as
//! exact half-step velocity damping on either side of the Verlet update, so
//! with zero friction it reduces to plain symplectic Verlet.

mod engine;
pub mod io;
pub mod observables;
mod relax;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::trap::{DriveVoltages, IonSpecies, TrapGeometry};

pub use engine::{coulomb_forces, step, Simulation};
pub use observables::{Observables, Spectrum, Trajectory, Window};
pub use relax::{initial_cloud, relax_to_crystal, Relaxed};

/// Ions closer than this abort the run.
pub const COLLISION_DISTANCE: f64 = 1e-9;
/// Desk-scale guard on crystal relaxation.
pub const MAX_RELAX_IONS: usize = 2048;
/// Timestep ceiling as a fraction of the rf period.
pub const STEPS_PER_RF_PERIOD_MIN: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForceModel {
    /// Time-dependent rf quadrupole plus static end caps.
    FullRf,
    /// Time-averaged harmonic pseudopotential per species.
    Pseudopotential,
    /// No trap; Coulomb interaction only.
    CoulombOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoolingAxes {
    /// Friction along z only (counter-propagating beams on the trap axis).
    Axial,
    /// Friction on all three axes.
    All,
}

impl CoolingAxes {
    pub(crate) fn mask(self) -> [bool; 3] {
        match self {
            CoolingAxes::Axial => [false, false, true],
            CoolingAxes::All => [true, true, true],
        }
    }
}

/// Simulation parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig<T> {
    pub geometry: TrapGeometry<T>,
    pub voltages: DriveVoltages<T>,
    pub species: Vec<IonSpecies<T>>,
    /// Ions per species, used by [`relax_to_crystal`].
    pub counts: Vec<usize>,
    /// s; at most 1/100 of the rf period.
    pub timestep: T,
    /// Maximum simulated time for relaxation, s.
    pub duration: T,
    /// Linear friction coefficient beta, kg/s.
    pub friction: T,
    pub cooling_axes: CoolingAxes,
    /// Temperature of the Langevin recoil noise on the cooled axes, K.
    pub recoil_temperature: Option<T>,
    pub force_model: ForceModel,
    /// Phase of the rf drive at t = 0, rad.
    pub rf_phase: T,
    /// Secular temperature below which a crystal counts as relaxed, K.
    pub temperature_threshold: T,
    pub seed: u64,
}

impl<T: Real> SimConfig<T> {
    /// Defaults for a single species: 2.5 ns steps, full rf, axial friction
    /// with a 1e5 /s damping rate for the given species.
    pub fn new(geometry: TrapGeometry<T>, voltages: DriveVoltages<T>, species: IonSpecies<T>, count: usize) -> Self {
        let friction = species.mass * T::lit(1e5);
        Self {
            timestep: geometry.rf_period() / T::lit(STEPS_PER_RF_PERIOD_MIN),
            geometry,
            voltages,
            species: vec![species],
            counts: vec![count],
            duration: T::lit(2e-3),
            friction,
            cooling_axes: CoolingAxes::Axial,
            recoil_temperature: None,
            force_model: ForceModel::FullRf,
            rf_phase: T::zero(),
            temperature_threshold: T::lit(1e-3),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.voltages.validate()?;
        if self.species.is_empty() {
            return Err(Error::InvalidParameter("at least one species required".into()));
        }
        for s in &self.species {
            s.validate()?;
        }
        if self.counts.len() != self.species.len() {
            return Err(Error::InvalidParameter(format!(
                "{} ion counts for {} species",
                self.counts.len(),
                self.species.len()
            )));
        }
        let ceiling = self.geometry.rf_period() / T::lit(STEPS_PER_RF_PERIOD_MIN) * T::lit(1.0 + 1e-9);
        if !(self.timestep > T::zero() && self.timestep <= ceiling) {
            return Err(Error::InvalidParameter(format!(
                "timestep {} s must be positive and at most 1/100 of the rf period",
                self.timestep
            )));
        }
        if !(self.duration > T::zero()) {
            return Err(Error::InvalidParameter("duration must be > 0".into()));
        }
        if !(self.friction >= T::zero()) {
            return Err(Error::InvalidParameter("friction must be >= 0".into()));
        }
        if let Some(t) = self.recoil_temperature {
            if !(t >= T::zero()) {
                return Err(Error::InvalidParameter("recoil temperature must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Integration steps per rf period (rounded).
    pub fn steps_per_rf_period(&self) -> usize {
        (self.geometry.rf_period() / self.timestep).round().as_f64().max(1.0) as usize
    }

    pub fn total_ions(&self) -> usize {
        self.counts.iter().sum()
    }
}

/// Positions and velocities of every ion at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState<T> {
    /// s.
    pub time: T,
    /// Number of steps taken; selects the noise stream of the next step.
    pub step_index: u64,
    /// m.
    pub positions: Vec<[T; 3]>,
    /// m/s.
    pub velocities: Vec<[T; 3]>,
    /// Index into [`SimConfig::species`].
    pub species: Vec<usize>,
    pub rng_seed: u64,
}

impl<T: Real> SimState<T> {
    pub fn new(positions: Vec<[T; 3]>, velocities: Vec<[T; 3]>, species: Vec<usize>, rng_seed: u64) -> Result<Self> {
        let s = Self {
            time: T::zero(),
            step_index: 0,
            positions,
            velocities,
            species,
            rng_seed,
        };
        s.validate(usize::MAX)?;
        Ok(s)
    }

    /// Ions at rest at the given positions, all of species 0.
    pub fn at_rest(positions: Vec<[T; 3]>, rng_seed: u64) -> Self {
        let n = positions.len();
        Self {
            time: T::zero(),
            step_index: 0,
            positions,
            velocities: vec![[T::zero(); 3]; n],
            species: vec![0; n],
            rng_seed,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self, species_count: usize) -> Result<()> {
        let n = self.positions.len();
        if self.velocities.len() != n || self.species.len() != n {
            return Err(Error::InvalidParameter(format!(
                "state arrays differ in length: {} positions, {} velocities, {} species",
                n,
                self.velocities.len(),
                self.species.len()
            )));
        }
        let finite = |v: &[T; 3]| v.iter().all(|c| c.is_finite());
        if !self.positions.iter().all(finite) || !self.velocities.iter().all(finite) {
            return Err(Error::InvalidParameter("non-finite coordinate in state".into()));
        }
        if let Some(&bad) = self.species.iter().find(|&&s| s >= species_count) {
            return Err(Error::InvalidParameter(format!("species index {bad} out of range")));
        }
        Ok(())
    }
}
