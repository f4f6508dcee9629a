//! TOML configuration. Every block is optional and defaults to the
//! apparatus values; unknown keys are rejected. Key names carry their units.
//!
//! ```toml
//! [trap]
//! z_half_m = 2.5e-3
//! r0_m = 2.35e-3
//! eta = 0.342
//! rf_frequency_hz = 4.0e6
//!
//! [voltages]
//! u_rf_volts = 130.0
//! u_end_volts = 3.9
//!
//! [[species]]
//! label = "40Ca+"
//! mass_u = 39.96259086
//! isotope_shift_hz = 0.0
//!
//! [crystal]
//! u_rf_volts = 300.0
//! u_end_volts = 1.7
//! ion_count = 88000
//! length_m = 3.0e-3
//!
//! [cavity]
//! length_m = 11.8e-3
//! linewidth_hz = 4.0e6
//!
//! [sweep]
//! u_rf_min_volts = 150.0
//! u_rf_max_volts = 400.0
//!
//! [sweep.constraint]
//! kind = "table"
//! points = [[150.0, 6.0e-3], [400.0, 1.6e-3]]
//!
//! [md]
//! ion_counts = [100]
//! seed = 7
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cavity::CavitySpec;
use crate::constants::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE};
use crate::error::{Error, Result};
use crate::md::{CoolingAxes, ForceModel, SimConfig};
use crate::optimizer::{GridSpec, StabilityConstraint, SweepInputs, DEFAULT_CONSTRAINT_TABLE};
use crate::trap::{DriveVoltages, IonSpecies, TransitionData, TrapGeometry, CA_866_DIPOLE_MOMENT};

const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToolConfig {
    pub trap: TrapBlock,
    pub voltages: VoltageBlock,
    /// Entries override the built-in calcium table by label or extend it.
    pub species: Vec<SpeciesEntry>,
    pub crystal: CrystalBlock,
    pub cavity: CavityBlock,
    pub sweep: SweepBlock,
    pub md: MdBlock,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrapBlock {
    pub z_half_m: f64,
    pub r0_m: f64,
    pub eta: f64,
    pub rf_frequency_hz: f64,
}

impl Default for TrapBlock {
    fn default() -> Self {
        let g = TrapGeometry::<f64>::default();
        Self {
            z_half_m: g.z_half,
            r0_m: g.r0,
            eta: g.eta,
            rf_frequency_hz: g.omega_rf / TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VoltageBlock {
    pub u_rf_volts: f64,
    pub u_end_volts: f64,
}

impl Default for VoltageBlock {
    fn default() -> Self {
        Self {
            u_rf_volts: 130.0,
            u_end_volts: 3.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesEntry {
    pub label: String,
    pub mass_u: f64,
    #[serde(default = "one")]
    pub charge_e: f64,
    #[serde(default = "default_dipole")]
    pub dipole_moment_c_m: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength_m: f64,
    #[serde(default = "default_gamma")]
    pub dipole_decay_rate_hz: f64,
    #[serde(default)]
    pub isotope_shift_hz: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn default_dipole() -> f64 {
    CA_866_DIPOLE_MOMENT
}
fn default_wavelength() -> f64 {
    866e-9
}
fn default_gamma() -> f64 {
    11.0e6
}

impl SpeciesEntry {
    pub fn to_species(&self) -> Result<IonSpecies<f64>> {
        IonSpecies::new(
            self.label.clone(),
            self.mass_u * ATOMIC_MASS_UNIT,
            self.charge_e * ELEMENTARY_CHARGE,
            TransitionData {
                dipole_moment: self.dipole_moment_c_m,
                wavelength: self.wavelength_m,
                dipole_decay_rate: TAU * self.dipole_decay_rate_hz,
                isotope_shift: self.isotope_shift_hz,
            },
        )
    }
}

/// Crystal used by the `crystal` and `ions-in-mode` reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrystalBlock {
    pub species: String,
    pub u_rf_volts: f64,
    pub u_end_volts: f64,
    pub ion_count: f64,
    /// Observed total length. With it the crystal is the spheroid of this
    /// length holding `ion_count` ions at the trap density; without it the
    /// length follows from the trap aspect ratio.
    pub length_m: Option<f64>,
    /// Optional second species for a two-component crystal.
    pub second_species: Option<String>,
    pub second_ion_count: Option<f64>,
}

impl Default for CrystalBlock {
    fn default() -> Self {
        Self {
            species: "40Ca+".into(),
            u_rf_volts: 300.0,
            u_end_volts: 1.7,
            ion_count: 88000.0,
            length_m: Some(3.0e-3),
            second_species: None,
            second_ion_count: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CavityBlock {
    pub length_m: f64,
    pub mirror_roc_m: f64,
    pub transmission_in_ppm: f64,
    pub transmission_out_ppm: f64,
    pub loss_ppm: f64,
    pub wavelength_m: f64,
    /// Measured resonance FWHM.
    pub linewidth_hz: f64,
    /// Measured free spectral range; geometric c / 2L when absent.
    pub measured_fsr_hz: Option<f64>,
    /// Species whose transition couples to the cavity.
    pub species: String,
}

impl Default for CavityBlock {
    fn default() -> Self {
        let c = CavitySpec::<f64>::default();
        Self {
            length_m: c.length,
            mirror_roc_m: c.mirror_roc,
            transmission_in_ppm: c.transmission_in * 1e6,
            transmission_out_ppm: c.transmission_out * 1e6,
            loss_ppm: c.intracavity_loss * 1e6,
            wavelength_m: c.wavelength,
            linewidth_hz: 4.0e6,
            measured_fsr_hz: Some(12.7e9),
            species: "40Ca+".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBlock {
    pub species: String,
    pub u_rf_min_volts: f64,
    pub u_rf_max_volts: f64,
    pub u_rf_points: usize,
    pub u_end_min_volts: f64,
    pub u_end_max_volts: f64,
    pub u_end_points: usize,
    pub total_ions: f64,
    pub cooling_level: f64,
    pub constraint: ConstraintBlock,
}

impl Default for SweepBlock {
    fn default() -> Self {
        let g = GridSpec::<f64>::default();
        Self {
            species: "40Ca+".into(),
            u_rf_min_volts: g.u_rf[0],
            u_rf_max_volts: *g.u_rf.last().unwrap_or(&400.0),
            u_rf_points: g.u_rf.len(),
            u_end_min_volts: g.u_end[0],
            u_end_max_volts: *g.u_end.last().unwrap_or(&10.0),
            u_end_points: g.u_end.len(),
            total_ions: 1e5,
            cooling_level: 1.0,
            constraint: ConstraintBlock::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ConstraintBlock {
    Unlimited,
    /// Inline `points = [[u_rf_volts, max_length_m], ...]` or a CSV file.
    Table {
        #[serde(default)]
        points: Option<Vec<(f64, f64)>>,
        #[serde(default)]
        file: Option<PathBuf>,
    },
    PowerLaw {
        reference_length_m: f64,
        reference_u_rf_volts: f64,
        reference_ion_count: f64,
        rf_exponent: f64,
        #[serde(default)]
        count_exponent: f64,
        #[serde(default)]
        cooling_exponent: f64,
    },
}

impl Default for ConstraintBlock {
    fn default() -> Self {
        Self::Table {
            points: Some(DEFAULT_CONSTRAINT_TABLE.to_vec()),
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MdBlock {
    /// Species labels, one per entry of `ion_counts`.
    pub species: Vec<String>,
    pub ion_counts: Vec<usize>,
    /// Override of the `[voltages]` block for simulations.
    pub u_rf_volts: Option<f64>,
    pub u_end_volts: Option<f64>,
    pub timestep_s: f64,
    pub duration_s: f64,
    /// Friction per unit mass of the first species (beta / M).
    pub damping_rate_per_s: f64,
    pub cooling_axes: CoolingAxes,
    pub recoil_temperature_k: Option<f64>,
    pub force_model: ForceModel,
    pub temperature_threshold_k: f64,
    pub seed: u64,
    /// Frames recorded after relaxation.
    pub samples: usize,
    /// Integration steps between frames.
    pub sample_every_steps: usize,
}

impl Default for MdBlock {
    fn default() -> Self {
        Self {
            species: vec!["40Ca+".into()],
            ion_counts: vec![2],
            u_rf_volts: None,
            u_end_volts: None,
            timestep_s: 2.5e-9,
            duration_s: 2e-3,
            damping_rate_per_s: 1e5,
            cooling_axes: CoolingAxes::All,
            recoil_temperature_k: None,
            force_model: ForceModel::FullRf,
            temperature_threshold_k: 1e-3,
            seed: 0,
            samples: 4096,
            sample_every_steps: 20,
        }
    }
}

impl ToolConfig {
    /// Parses and validates TOML text.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string().trim_end().to_string()))?;
        cfg.validate().map_err(|e| match e {
            Error::Config(msg) => Error::Config(locate(text, msg)),
            other => other,
        })?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })?;
        // constraint files are relative to the config file
        if let ConstraintBlock::Table { file: Some(f), .. } = &mut cfg.sweep.constraint {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Semantic checks; messages start with the offending key path.
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, why: &str| Err(Error::Config(format!("{key}: {why}")));
        self.geometry()
            .map_err(|e| Error::Config(format!("trap: {}", strip(&e))))?;
        for (key, v) in [
            ("voltages.u_rf_volts", self.voltages.u_rf_volts),
            ("voltages.u_end_volts", self.voltages.u_end_volts),
            ("crystal.u_rf_volts", self.crystal.u_rf_volts),
            ("crystal.u_end_volts", self.crystal.u_end_volts),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(key, "must be >= 0");
            }
        }
        for (i, s) in self.species.iter().enumerate() {
            s.to_species()
                .map_err(|e| Error::Config(format!("species[{i}]: {}", strip(&e))))?;
        }
        for (key, label) in [
            ("crystal.species", &self.crystal.species),
            ("cavity.species", &self.cavity.species),
            ("sweep.species", &self.sweep.species),
        ] {
            if self.species_by_label(label).is_err() {
                return bad(key, &format!("unknown species {label:?}"));
            }
        }
        if !(self.crystal.ion_count >= 1.0) {
            return bad("crystal.ion_count", "must be >= 1");
        }
        if self.crystal.length_m.is_some_and(|l| !(l > 0.0 && l.is_finite())) {
            return bad("crystal.length_m", "must be > 0");
        }
        if self.crystal.second_species.is_some() != self.crystal.second_ion_count.is_some() {
            return bad(
                "crystal.second_species",
                "second_species and second_ion_count must be given together",
            );
        }
        if let Some(label) = &self.crystal.second_species {
            if self.species_by_label(label).is_err() {
                return bad("crystal.second_species", &format!("unknown species {label:?}"));
            }
        }
        self.cavity_spec()
            .validate()
            .map_err(|e| Error::Config(format!("cavity: {}", strip(&e))))?;
        if !(self.cavity.linewidth_hz > 0.0) {
            return bad("cavity.linewidth_hz", "must be > 0");
        }
        if self.sweep.u_rf_points == 0 || self.sweep.u_end_points == 0 {
            return bad("sweep.u_rf_points", "grid needs at least one point per axis");
        }
        if !(self.sweep.total_ions >= 1.0) {
            return bad("sweep.total_ions", "must be >= 1");
        }
        if let ConstraintBlock::Table { points, file } = &self.sweep.constraint {
            if points.is_some() == file.is_some() {
                return bad("sweep.constraint", "give exactly one of points or file");
            }
        }
        if self.md.species.len() != self.md.ion_counts.len() {
            return bad("md.ion_counts", "needs one count per entry of md.species");
        }
        for label in &self.md.species {
            if self.species_by_label(label).is_err() {
                return bad("md.species", &format!("unknown species {label:?}"));
            }
        }
        if !(self.md.timestep_s > 0.0 && self.md.duration_s > 0.0) {
            return bad("md.timestep_s", "timestep and duration must be > 0");
        }
        Ok(())
    }

    pub fn geometry(&self) -> Result<TrapGeometry<f64>> {
        TrapGeometry::new(
            self.trap.z_half_m,
            self.trap.r0_m,
            self.trap.eta,
            TAU * self.trap.rf_frequency_hz,
        )
    }

    pub fn voltages(&self) -> DriveVoltages<f64> {
        DriveVoltages {
            u_rf: self.voltages.u_rf_volts,
            u_end: self.voltages.u_end_volts,
        }
    }

    pub fn crystal_voltages(&self) -> DriveVoltages<f64> {
        DriveVoltages {
            u_rf: self.crystal.u_rf_volts,
            u_end: self.crystal.u_end_volts,
        }
    }

    /// Built-in calcium isotopes merged with the configured entries.
    pub fn species_table(&self) -> Result<Vec<IonSpecies<f64>>> {
        let mut table: Vec<IonSpecies<f64>> = [40, 42, 43, 44, 46, 48]
            .into_iter()
            .map(IonSpecies::calcium)
            .collect::<Result<_>>()?;
        for entry in &self.species {
            let s = entry.to_species()?;
            match table.iter_mut().find(|t| t.isotope_label == s.isotope_label) {
                Some(slot) => *slot = s,
                None => table.push(s),
            }
        }
        Ok(table)
    }

    pub fn species_by_label(&self, label: &str) -> Result<IonSpecies<f64>> {
        self.species_table()?
            .into_iter()
            .find(|s| s.isotope_label == label)
            .ok_or_else(|| Error::Config(format!("unknown species {label:?}")))
    }

    pub fn cavity_spec(&self) -> CavitySpec<f64> {
        CavitySpec {
            length: self.cavity.length_m,
            mirror_roc: self.cavity.mirror_roc_m,
            transmission_in: self.cavity.transmission_in_ppm * 1e-6,
            transmission_out: self.cavity.transmission_out_ppm * 1e-6,
            intracavity_loss: self.cavity.loss_ppm * 1e-6,
            wavelength: self.cavity.wavelength_m,
        }
    }

    pub fn grid(&self) -> Result<GridSpec<f64>> {
        let s = &self.sweep;
        GridSpec::linspace(
            (s.u_rf_min_volts, s.u_rf_max_volts, s.u_rf_points),
            (s.u_end_min_volts, s.u_end_max_volts, s.u_end_points),
        )
    }

    pub fn constraint(&self) -> Result<StabilityConstraint<f64>> {
        let c = match &self.sweep.constraint {
            ConstraintBlock::Unlimited => StabilityConstraint::Unlimited,
            ConstraintBlock::Table { points: Some(p), .. } => StabilityConstraint::table(p.clone())?,
            ConstraintBlock::Table { file: Some(f), .. } => {
                let file = std::fs::File::open(f)
                    .map_err(|e| Error::Config(format!("sweep.constraint.file: {}: {e}", f.display())))?;
                StabilityConstraint::from_csv(file)?
            }
            ConstraintBlock::Table { .. } => {
                return Err(Error::Config("sweep.constraint: give exactly one of points or file".into()))
            }
            ConstraintBlock::PowerLaw {
                reference_length_m,
                reference_u_rf_volts,
                reference_ion_count,
                rf_exponent,
                count_exponent,
                cooling_exponent,
            } => StabilityConstraint::PowerLaw {
                reference_length: *reference_length_m,
                reference_u_rf: *reference_u_rf_volts,
                reference_count: *reference_ion_count,
                rf_exponent: *rf_exponent,
                count_exponent: *count_exponent,
                cooling_exponent: *cooling_exponent,
            },
        };
        c.validate()?;
        Ok(c)
    }

    pub fn sweep_inputs(&self) -> Result<SweepInputs<f64>> {
        Ok(SweepInputs {
            geometry: self.geometry()?,
            species: self.species_by_label(&self.sweep.species)?,
            cavity: self.cavity_spec(),
            cavity_linewidth: self.cavity.linewidth_hz,
            total_ions: self.sweep.total_ions,
            cooling_level: self.sweep.cooling_level,
            constraint: self.constraint()?,
        })
    }

    pub fn sim_config(&self) -> Result<SimConfig<f64>> {
        let species = self
            .md
            .species
            .iter()
            .map(|l| self.species_by_label(l))
            .collect::<Result<Vec<_>>>()?;
        let first = species
            .first()
            .ok_or_else(|| Error::Config("md.species: at least one species required".into()))?;
        let voltages = DriveVoltages {
            u_rf: self.md.u_rf_volts.unwrap_or(self.voltages.u_rf_volts),
            u_end: self.md.u_end_volts.unwrap_or(self.voltages.u_end_volts),
        };
        let mut cfg = SimConfig::new(self.geometry()?, voltages, first.clone(), 0);
        cfg.friction = first.mass * self.md.damping_rate_per_s;
        cfg.species = species;
        cfg.counts = self.md.ion_counts.clone();
        cfg.timestep = self.md.timestep_s;
        cfg.duration = self.md.duration_s;
        cfg.cooling_axes = self.md.cooling_axes;
        cfg.recoil_temperature = self.md.recoil_temperature_k;
        cfg.force_model = self.md.force_model;
        cfg.temperature_threshold = self.md.temperature_threshold_k;
        cfg.seed = self.md.seed;
        cfg.validate()
            .map_err(|e| Error::Config(format!("md: {}", strip(&e))))?;
        Ok(cfg)
    }
}

fn strip(e: &Error) -> String {
    match e {
        Error::InvalidParameter(m) | Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

/// Prefixes `msg` (which starts with a dotted key path) with the line where
/// the last path segment is assigned, if it can be found.
fn locate(text: &str, msg: String) -> String {
    let key = msg.split(':').next().unwrap_or("");
    let leaf = key.rsplit('.').next().unwrap_or(key);
    let leaf = leaf.split('[').next().unwrap_or(leaf);
    let section = key.split('.').next().unwrap_or("");
    let line = text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(leaf).is_some_and(|rest| rest.trim_start().starts_with('='))
    });
    let line = line.or_else(|| {
        text.lines()
            .position(|l| l.trim() == format!("[{section}]") || l.trim() == format!("[[{section}]]"))
    });
    match line {
        Some(i) => format!("line {}: {msg}", i + 1),
        None => msg,
    }
}
