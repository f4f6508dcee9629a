//! One result object per subcommand. Each is computed once and rendered
//! either as JSON or as an aligned table.

use std::f64::consts::TAU;

use ioncavity::analysis::{fit, fit_pzt_calibration, TimeSeries};
use ioncavity::cavity::{self, characterize, ions_in_mode, waist_from_geometry};
use ioncavity::config::ToolConfig;
use ioncavity::crystal::{self, two_component_structure, CrystalSpec};
use ioncavity::md::observables::observe;
use ioncavity::md::{relax_to_crystal, Simulation, Trajectory};
use ioncavity::optimizer::{sweep, SweepResult, SweepSummary};
use ioncavity::trap::{self, QValidity};
use ioncavity::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::table::{sig, two_pi, Line, Table};

const HISTOGRAM_BINS: usize = 16;

fn freq_line(label: &str, omega: f64) -> Line {
    let (value, unit) = two_pi(omega / TAU);
    Line::new(label, value, unit)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapParams {
    pub species: String,
    pub u_rf_volts: f64,
    pub u_end_volts: f64,
    pub axial_frequency_rad_s: f64,
    pub radial_frequency_rad_s: f64,
    /// Radial frequency without end-cap defocusing.
    pub rf_radial_frequency_rad_s: f64,
    pub mathieu_q: f64,
    pub q_validity: QValidity,
    pub density_m3: f64,
}

pub fn trap_params(cfg: &ToolConfig) -> Result<TrapParams> {
    let (geom, v) = (cfg.geometry()?, cfg.voltages());
    let ion = cfg.species_by_label(&cfg.crystal.species)?;
    let secular = trap::secular_frequencies(&geom, &v, &ion)?;
    let q = trap::mathieu_q(&geom, &v, &ion);
    Ok(TrapParams {
        species: ion.isotope_label.clone(),
        u_rf_volts: v.u_rf,
        u_end_volts: v.u_end,
        axial_frequency_rad_s: secular.axial,
        radial_frequency_rad_s: secular.radial,
        rf_radial_frequency_rad_s: trap::rf_radial_frequency(&geom, &v, &ion),
        mathieu_q: q.q,
        q_validity: q.validity,
        density_m3: trap::crystal_density(&geom, &v, &ion),
    })
}

impl Table for TrapParams {
    fn lines(&self) -> Vec<Line> {
        vec![
            Line::heading(format!("{} at U_rf = {} V, U_end = {} V", self.species, self.u_rf_volts, self.u_end_volts)),
            freq_line("axial frequency", self.axial_frequency_rad_s),
            freq_line("radial frequency", self.radial_frequency_rad_s),
            freq_line("radial (rf only)", self.rf_radial_frequency_rad_s),
            Line::new("Mathieu q", format!("{} ({:?})", sig(self.mathieu_q, 4), self.q_validity).to_uppercase(), ""),
            Line::new("crystal density", sig(self.density_m3 * 1e-6, 4), "cm^-3"),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shell {
    pub inner_species: String,
    pub outer_species: String,
    pub boundary_radius_m: f64,
    pub outer_radius_m: f64,
    pub length_m: f64,
    pub core_fits: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalReport {
    pub species: String,
    pub u_rf_volts: f64,
    pub u_end_volts: f64,
    pub density_m3: f64,
    pub ion_count: f64,
    /// Crystal used downstream: the observed one when a length is
    /// configured, otherwise the trap-shaped spheroid.
    pub length_m: f64,
    pub radius_m: f64,
    /// Length of a spheroid holding `ion_count` ions with the trap's own
    /// aspect ratio.
    pub model_length_m: f64,
    pub model_radius_m: f64,
    /// Ions in a trap-shaped spheroid of the observed length.
    pub count_at_observed_length: Option<f64>,
    pub two_component: Option<Shell>,
}

/// The configured crystal as used by the `crystal` and `ions-in-mode`
/// commands.
pub fn crystal_spec(cfg: &ToolConfig, model_length: bool) -> Result<CrystalSpec<f64>> {
    let (geom, v) = (cfg.geometry()?, cfg.crystal_voltages());
    let ion = cfg.species_by_label(&cfg.crystal.species)?;
    match cfg.crystal.length_m {
        Some(l) if !model_length => {
            let rho = trap::crystal_density(&geom, &v, &ion);
            CrystalSpec::from_measured(ion, rho, cfg.crystal.ion_count, l)
        }
        _ => crystal::spheroid_from_count(&geom, &v, &ion, cfg.crystal.ion_count),
    }
}

pub fn crystal_report(cfg: &ToolConfig) -> Result<CrystalReport> {
    let (geom, v) = (cfg.geometry()?, cfg.crystal_voltages());
    let ion = cfg.species_by_label(&cfg.crystal.species)?;
    let used = crystal_spec(cfg, false)?;
    let model = crystal::spheroid_from_count(&geom, &v, &ion, cfg.crystal.ion_count)?;
    let count_at_observed_length = cfg
        .crystal
        .length_m
        .map(|l| crystal::count_from_length(&geom, &v, &ion, l))
        .transpose()?;
    let two_component = match (&cfg.crystal.second_species, cfg.crystal.second_ion_count) {
        (Some(label), Some(n)) => {
            let other = cfg.species_by_label(label)?;
            let t = two_component_structure(&geom, &v, &ion, &other, cfg.crystal.ion_count, n)?;
            Some(Shell {
                inner_species: t.inner.species.isotope_label.clone(),
                outer_species: t.outer.species.isotope_label.clone(),
                boundary_radius_m: t.boundary_radius,
                outer_radius_m: t.outer.radius,
                length_m: t.outer.total_length(),
                core_fits: t.core_fits,
            })
        }
        _ => None,
    };
    Ok(CrystalReport {
        species: ion.isotope_label.clone(),
        u_rf_volts: v.u_rf,
        u_end_volts: v.u_end,
        density_m3: used.density,
        ion_count: used.ion_count,
        length_m: used.total_length(),
        radius_m: used.radius,
        model_length_m: model.total_length(),
        model_radius_m: model.radius,
        count_at_observed_length,
        two_component,
    })
}

impl Table for CrystalReport {
    fn lines(&self) -> Vec<Line> {
        let mut out = vec![
            Line::heading(format!("{} crystal at U_rf = {} V, U_end = {} V", self.species, self.u_rf_volts, self.u_end_volts)),
            Line::new("density", sig(self.density_m3 * 1e-6, 4), "cm^-3"),
            Line::new("ions", sig(self.ion_count, 5), ""),
            Line::new("length", sig(self.length_m * 1e3, 4), "mm"),
            Line::new("radius", sig(self.radius_m * 1e6, 4), "um"),
            Line::new("trap-shaped length", sig(self.model_length_m * 1e3, 4), "mm"),
            Line::new("trap-shaped radius", sig(self.model_radius_m * 1e6, 4), "um"),
        ];
        if let Some(n) = self.count_at_observed_length {
            out.push(Line::new("trap-shaped ions at this length", sig(n, 5), ""));
        }
        if let Some(s) = &self.two_component {
            out.push(Line::heading(format!("{} core inside {} shell", s.inner_species, s.outer_species)));
            out.push(Line::new("boundary radius", sig(s.boundary_radius_m * 1e6, 4), "um"));
            out.push(Line::new("outer radius", sig(s.outer_radius_m * 1e6, 4), "um"));
            out.push(Line::new("length", sig(s.length_m * 1e3, 4), "mm"));
            out.push(Line::new("core fits", s.core_fits.to_string(), ""));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CavitySummary {
    pub species: String,
    pub free_spectral_range_hz: f64,
    pub finesse_from_linewidth: f64,
    pub finesse_from_losses: f64,
    pub decay_rate_rad_s: f64,
    pub waist_m: f64,
    pub rayleigh_range_m: f64,
    pub mode_volume_m3: f64,
    pub single_ion_coupling_rad_s: f64,
    pub dipole_decay_rate_rad_s: f64,
    pub strong_coupling_threshold: u64,
}

pub fn cavity_summary(cfg: &ToolConfig) -> Result<CavitySummary> {
    let ion = cfg.species_by_label(&cfg.cavity.species)?;
    let r = characterize(&cfg.cavity_spec(), &ion, cfg.cavity.linewidth_hz, cfg.cavity.measured_fsr_hz)?;
    Ok(CavitySummary {
        species: ion.isotope_label.clone(),
        free_spectral_range_hz: r.free_spectral_range,
        finesse_from_linewidth: r.finesse_from_linewidth,
        finesse_from_losses: r.finesse_from_losses,
        decay_rate_rad_s: r.decay_rate,
        waist_m: r.mode.waist,
        rayleigh_range_m: r.mode.rayleigh_range,
        mode_volume_m3: r.mode.mode_volume,
        single_ion_coupling_rad_s: r.single_ion_coupling,
        dipole_decay_rate_rad_s: r.dipole_decay_rate,
        strong_coupling_threshold: r.strong_coupling_threshold,
    })
}

impl Table for CavitySummary {
    fn lines(&self) -> Vec<Line> {
        vec![
            Line::heading(format!("cavity, coupled to {}", self.species)),
            Line::new("free spectral range", sig(self.free_spectral_range_hz * 1e-9, 5), "GHz"),
            Line::new("finesse (linewidth)", sig(self.finesse_from_linewidth, 4), ""),
            Line::new("finesse (losses)", sig(self.finesse_from_losses, 4), ""),
            freq_line("kappa", self.decay_rate_rad_s),
            Line::new("waist", sig(self.waist_m * 1e6, 4), "um"),
            Line::new("Rayleigh range", sig(self.rayleigh_range_m * 1e3, 4), "mm"),
            freq_line("g0", self.single_ion_coupling_rad_s),
            freq_line("gamma", self.dipole_decay_rate_rad_s),
            Line::new("strong-coupling threshold", self.strong_coupling_threshold.to_string(), "ions"),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeOccupancy {
    pub species: String,
    pub crystal_length_m: f64,
    pub crystal_radius_m: f64,
    pub density_m3: f64,
    pub n_closed_form: f64,
    pub n_quadrature: f64,
    pub relative_difference: f64,
    pub closed_form_valid: bool,
    pub radial_truncation_significant: bool,
    pub single_ion_coupling_rad_s: f64,
    pub collective_coupling_rad_s: f64,
    pub strong_coupling_threshold: u64,
}

pub fn ions_in_mode_report(cfg: &ToolConfig, model_length: bool) -> Result<ModeOccupancy> {
    let crystal = crystal_spec(cfg, model_length)?;
    let mode = waist_from_geometry(&cfg.cavity_spec())?;
    let r = ions_in_mode(&crystal, &mode);
    let kappa = cavity::cavity_decay_rate(cfg.cavity.linewidth_hz);
    Ok(ModeOccupancy {
        species: crystal.species.isotope_label.clone(),
        crystal_length_m: crystal.total_length(),
        crystal_radius_m: crystal.radius,
        density_m3: crystal.density,
        n_closed_form: r.closed_form,
        n_quadrature: r.quadrature,
        relative_difference: r.relative_difference,
        closed_form_valid: r.closed_form_valid,
        radial_truncation_significant: r.radial_truncation_significant,
        single_ion_coupling_rad_s: r.single_ion_coupling,
        collective_coupling_rad_s: r.collective_coupling,
        strong_coupling_threshold: cavity::strong_coupling_threshold(&crystal.species, &mode, kappa)?,
    })
}

impl Table for ModeOccupancy {
    fn lines(&self) -> Vec<Line> {
        vec![
            Line::heading(format!(
                "{} crystal, {} mm long, {} um radius",
                self.species,
                sig(self.crystal_length_m * 1e3, 4),
                sig(self.crystal_radius_m * 1e6, 4)
            )),
            Line::new("ions in mode", sig(self.n_closed_form, 4), ""),
            Line::new("ions in mode (integrated)", sig(self.n_quadrature, 4), ""),
            Line::new("relative difference", format!("{:+.2}", 100.0 * self.relative_difference), "%"),
            Line::new("closed form valid", self.closed_form_valid.to_string(), ""),
            freq_line("g0", self.single_ion_coupling_rad_s),
            freq_line("g0 sqrt(N)", self.collective_coupling_rad_s),
            Line::new("strong-coupling threshold", self.strong_coupling_threshold.to_string(), "ions"),
        ]
    }
}

pub fn run_sweep(cfg: &ToolConfig) -> Result<SweepResult<f64>> {
    sweep(&cfg.grid()?, &cfg.sweep_inputs()?)
}

impl Table for SweepSummary<f64> {
    fn lines(&self) -> Vec<Line> {
        let a = &self.argmax;
        let mut out = vec![
            Line::heading(format!("sweep over {} points, {} feasible", self.grid_points, self.feasible_points)),
            Line::new("best U_rf", sig(a.u_rf, 4), "V"),
            Line::new("best U_end", sig(a.u_end, 4), "V"),
            Line::new("ions in mode", sig(a.n_in_mode, 5), ""),
            Line::new("crystal length", sig(a.length * 1e3, 4), "mm"),
            Line::new("length capped", a.length_capped.to_string(), ""),
            freq_line("g0 sqrt(N)", a.collective_coupling),
            Line::new("strong-coupling threshold", self.strong_coupling_threshold.to_string(), "ions"),
        ];
        for u in &self.threshold_crossings {
            out.push(Line::new("threshold crossed at", sig(*u, 4), "V"));
        }
        out.push(Line::heading("best point per rf voltage"));
        for (u_rf, u_end, n) in &self.profile {
            let value = match u_end {
                Some(e) => format!("{} at {} V", sig(*n, 5), sig(*e, 3)),
                None => "infeasible".into(),
            };
            out.push(Line::new(format!("{} V", sig(*u_rf, 4)), value, ""));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub species: Vec<String>,
    pub ion_counts: Vec<usize>,
    pub seed: u64,
    pub relaxation_time_s: f64,
    pub secular_temperature_k: f64,
    /// Dominant centre-of-mass frequency along x, y, z.
    pub com_frequencies_hz: [Option<f64>; 3],
    pub breathing_frequency_hz: Option<f64>,
    /// Pseudopotential prediction for the first species (axial, radial).
    pub predicted_frequencies_hz: (f64, f64),
    pub ellipsoid_half_length_m: f64,
    pub ellipsoid_radius_m: f64,
    pub ellipsoid_density_m3: f64,
    pub wigner_seitz_density_m3: f64,
    pub boundary_radius_m: Option<f64>,
    pub kinetic_temperatures_k: Vec<f64>,
}

/// Relaxes the configured ions, records a trajectory and summarises it.
pub fn simulate(cfg: &ToolConfig) -> Result<(SimulationReport, Trajectory<f64>)> {
    let sim_cfg = cfg.sim_config()?;
    let relaxed = relax_to_crystal(&sim_cfg)?;
    let mut sim = Simulation::new(sim_cfg.clone(), relaxed.state)?;
    let traj = Trajectory::record(&mut sim, cfg.md.samples, cfg.md.sample_every_steps)?;
    let masses: Vec<f64> = sim_cfg.species.iter().map(|s| s.mass).collect();
    let obs = observe(&traj, &masses, HISTOGRAM_BINS)?;
    let first = &sim_cfg.species[0];
    let secular = trap::secular_frequencies(&sim_cfg.geometry, &sim_cfg.voltages, first)?;
    let report = SimulationReport {
        species: sim_cfg.species.iter().map(|s| s.isotope_label.clone()).collect(),
        ion_counts: sim_cfg.counts.clone(),
        seed: sim_cfg.seed,
        relaxation_time_s: relaxed.elapsed,
        secular_temperature_k: relaxed.secular_temperature,
        com_frequencies_hz: [0, 1, 2].map(|k| obs.com_spectra[k].dominant_peak()),
        breathing_frequency_hz: obs.axial_breathing_spectrum.dominant_peak(),
        predicted_frequencies_hz: (secular.axial / TAU, secular.radial / TAU),
        ellipsoid_half_length_m: obs.ellipsoid.half_length,
        ellipsoid_radius_m: obs.ellipsoid.radius,
        ellipsoid_density_m3: obs.ellipsoid.density,
        wigner_seitz_density_m3: obs.wigner_seitz_density,
        boundary_radius_m: obs.boundary_radius,
        kinetic_temperatures_k: obs.kinetic_temperatures,
    };
    Ok((report, traj))
}

fn peak(f: Option<f64>) -> (String, &'static str) {
    match f {
        Some(f) => two_pi(f),
        None => ("none".into(), ""),
    }
}

impl Table for SimulationReport {
    fn lines(&self) -> Vec<Line> {
        let ions: Vec<String> = self.species.iter().zip(&self.ion_counts).map(|(s, n)| format!("{n} {s}")).collect();
        let mut out = vec![
            Line::heading(format!("{} (seed {})", ions.join(" + "), self.seed)),
            Line::new("relaxation time", sig(self.relaxation_time_s * 1e3, 4), "ms"),
            Line::new("secular temperature", sig(self.secular_temperature_k * 1e3, 3), "mK"),
        ];
        for (axis, f) in ["x", "y", "z"].iter().zip(self.com_frequencies_hz) {
            let (v, u) = peak(f);
            out.push(Line::new(format!("COM peak {axis}"), v, u));
        }
        let (v, u) = peak(self.breathing_frequency_hz);
        out.push(Line::new("axial breathing peak", v, u));
        let (v, u) = two_pi(self.predicted_frequencies_hz.0);
        out.push(Line::new("predicted axial", v, u));
        let (v, u) = two_pi(self.predicted_frequencies_hz.1);
        out.push(Line::new("predicted radial", v, u));
        out.push(Line::new("fitted half length", sig(self.ellipsoid_half_length_m * 1e6, 4), "um"));
        out.push(Line::new("fitted radius", sig(self.ellipsoid_radius_m * 1e6, 4), "um"));
        out.push(Line::new("fitted density", sig(self.ellipsoid_density_m3 * 1e-6, 4), "cm^-3"));
        out.push(Line::new("Wigner-Seitz density", sig(self.wigner_seitz_density_m3 * 1e-6, 4), "cm^-3"));
        if let Some(r) = self.boundary_radius_m {
            out.push(Line::new("species boundary", sig(r * 1e6, 4), "um"));
        }
        for (s, t) in self.species.iter().zip(&self.kinetic_temperatures_k) {
            out.push(Line::new(format!("kinetic temperature {s}"), sig(t * 1e3, 3), "mK"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum FitKind {
    /// Value against time, e.g. ions loaded.
    Linear,
    /// Frequency detuning in Hz against piezo voltage.
    Pzt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub kind: FitKind,
    pub slope: f64,
    pub slope_error: f64,
    pub intercept: f64,
    pub intercept_error: f64,
    /// Residual standard deviation, or reduced chi-square when weighted.
    pub residual: f64,
    pub points: usize,
    pub weighted: bool,
}

pub fn fit_report(series: &TimeSeries<f64>, kind: FitKind, weighted: bool) -> Result<FitReport> {
    let f = match kind {
        FitKind::Linear => fit(series, weighted)?,
        FitKind::Pzt => fit_pzt_calibration(series, weighted)?.fit,
    };
    Ok(FitReport {
        kind,
        slope: f.slope,
        slope_error: f.slope_error,
        intercept: f.intercept,
        intercept_error: f.intercept_error,
        residual: f.residual,
        points: f.points,
        weighted: f.weighted,
    })
}

impl Table for FitReport {
    fn lines(&self) -> Vec<Line> {
        let mut out = vec![Line::heading(format!(
            "{} fit to {} points{}",
            if self.kind == FitKind::Pzt { "piezo calibration" } else { "linear" },
            self.points,
            if self.weighted { ", weighted" } else { "" }
        ))];
        match self.kind {
            FitKind::Pzt => {
                out.push(Line::new("slope", format!("{} +- {}", sig(self.slope * 1e-6, 4), sig(self.slope_error * 1e-6, 2)), "MHz/V"));
                out.push(Line::new("offset", format!("{} +- {}", sig(self.intercept * 1e-6, 4), sig(self.intercept_error * 1e-6, 2)), "MHz"));
            }
            FitKind::Linear => {
                out.push(Line::new("slope", format!("{} +- {}", sig(self.slope, 5), sig(self.slope_error, 2)), "/s"));
                out.push(Line::new("intercept", format!("{} +- {}", sig(self.intercept, 5), sig(self.intercept_error, 2)), ""));
            }
        }
        let label = if self.weighted { "reduced chi-square" } else { "residual sd" };
        out.push(Line::new(label, sig(self.residual, 3), ""));
        out
    }
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Infeasible(_)
        | Error::NotCrystallized { .. }
        | Error::RadiallyDeconfined { .. }
        | Error::ExtremeAnisotropy { .. }
        | Error::UnstableResonator { .. }
        | Error::Collision { .. } => 3,
        _ => 1,
    }
}
