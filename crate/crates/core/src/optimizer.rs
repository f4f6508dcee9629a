//! Voltage sweeps for the number of ions inside the cavity mode.
//!
//! At each (U_rf, U_end) a crystal of fixed total size takes the model
//! spheroid length, clipped to the maximum stable length supplied by a
//! [`StabilityConstraint`]. The ions in the mode then follow from
//! `rho pi w0^2 l / 4`.
//!
//! The constraint is an empirical input describing when long crystals are
//! lost to rf heating. The shipped table is calibrated to put the optimum at
//! 350 V with just over 2000 ions in the mode; it is not a prediction.

use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cavity::{self, CavitySpec, ModeGeometry};
use crate::crystal;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::trap::{self, DriveVoltages, IonSpecies, QValidity, TrapGeometry};

/// Default stability table: (U_rf in V, maximum crystal length in m).
pub const DEFAULT_CONSTRAINT_TABLE: [(f64, f64); 6] = [
    (150.0, 6.0e-3),
    (200.0, 5.0e-3),
    (250.0, 4.0e-3),
    (300.0, 2.9e-3),
    (350.0, 2.4e-3),
    (400.0, 1.6e-3),
];

/// Maximum crystal length before the crystal is lost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StabilityConstraint<T> {
    Unlimited,
    /// Piecewise-linear in U_rf; undefined outside the tabulated range.
    Table { points: Vec<(T, T)> },
    /// `l_ref (U_rf / U_ref)^-p (N / N_ref)^-q c^s` with cooling level `c`.
    PowerLaw {
        reference_length: T,
        reference_u_rf: T,
        reference_count: T,
        rf_exponent: T,
        count_exponent: T,
        cooling_exponent: T,
    },
}

impl<T: Real> Default for StabilityConstraint<T> {
    fn default() -> Self {
        Self::Table {
            points: DEFAULT_CONSTRAINT_TABLE
                .iter()
                .map(|&(u, l)| (T::lit(u), T::lit(l)))
                .collect(),
        }
    }
}

impl<T: Real> StabilityConstraint<T> {
    /// Table constraint from (U_rf, max length) pairs.
    pub fn table(points: Vec<(T, T)>) -> Result<Self> {
        let c = Self::Table { points };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Unlimited => Ok(()),
            Self::Table { points } => {
                if points.is_empty() {
                    return Err(Error::InvalidParameter("constraint table is empty".into()));
                }
                if points.iter().any(|&(u, l)| !(u.is_finite() && l.is_finite() && l > T::zero())) {
                    return Err(Error::InvalidParameter(
                        "constraint table lengths must be finite and > 0".into(),
                    ));
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::InvalidParameter(
                        "constraint table voltages must be strictly increasing".into(),
                    ));
                }
                Ok(())
            }
            Self::PowerLaw {
                reference_length,
                reference_u_rf,
                reference_count,
                ..
            } => {
                if *reference_length > T::zero() && *reference_u_rf > T::zero() && *reference_count > T::zero() {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter("power-law references must be > 0".into()))
                }
            }
        }
    }

    /// Maximum length at this drive, ion number and cooling level, m.
    /// `None` where the constraint is undefined; infinite when unlimited.
    pub fn max_length(&self, u_rf: T, total_ions: T, cooling_level: T) -> Option<T> {
        match self {
            Self::Unlimited => Some(T::infinity()),
            Self::Table { points } => interpolate(points, u_rf),
            Self::PowerLaw {
                reference_length,
                reference_u_rf,
                reference_count,
                rf_exponent,
                count_exponent,
                cooling_exponent,
            } => {
                if !(u_rf > T::zero() && total_ions > T::zero() && cooling_level > T::zero()) {
                    return None;
                }
                Some(
                    *reference_length
                        * (u_rf / *reference_u_rf).powf(-*rf_exponent)
                        * (total_ions / *reference_count).powf(-*count_exponent)
                        * cooling_level.powf(*cooling_exponent),
                )
            }
        }
    }

    /// Reads a `u_rf_V,max_length_m` table.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row<T> {
            #[serde(rename = "u_rf_V")]
            u_rf: T,
            #[serde(rename = "max_length_m")]
            max_length: T,
        }
        let mut points = Vec::new();
        for row in csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input).deserialize() {
            let row: Row<T> = row?;
            points.push((row.u_rf, row.max_length));
        }
        Self::table(points)
    }
}

fn interpolate<T: Real>(points: &[(T, T)], x: T) -> Option<T> {
    let first = points.first()?;
    let last = points.last()?;
    if x < first.0 || x > last.0 {
        return None;
    }
    if points.len() == 1 {
        return Some(first.1);
    }
    let i = points.partition_point(|p| p.0 <= x).clamp(1, points.len() - 1);
    let (x0, y0) = points[i - 1];
    let (x1, y1) = points[i];
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Fixed inputs of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepInputs<T> {
    pub geometry: TrapGeometry<T>,
    pub species: IonSpecies<T>,
    pub cavity: CavitySpec<T>,
    /// Cavity linewidth (FWHM), Hz; sets kappa for the threshold line.
    pub cavity_linewidth: T,
    /// Total ions in the crystal.
    pub total_ions: T,
    /// Relative cooling level passed to the constraint (1 = nominal).
    pub cooling_level: T,
    pub constraint: StabilityConstraint<T>,
}

impl<T: Real> Default for SweepInputs<T> {
    fn default() -> Self {
        Self {
            geometry: TrapGeometry::default(),
            species: IonSpecies::calcium(40).expect("40Ca+ is tabulated"),
            cavity: CavitySpec::default(),
            cavity_linewidth: T::lit(4.0e6),
            total_ions: T::lit(1e5),
            cooling_level: T::one(),
            constraint: StabilityConstraint::default(),
        }
    }
}

/// Voltage grid, U_rf outer, U_end inner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    pub u_rf: Vec<T>,
    pub u_end: Vec<T>,
}

impl<T: Real> GridSpec<T> {
    /// Evenly spaced grid including both end points.
    pub fn linspace(u_rf: (T, T, usize), u_end: (T, T, usize)) -> Result<Self> {
        Ok(Self {
            u_rf: linspace(u_rf.0, u_rf.1, u_rf.2)?,
            u_end: linspace(u_end.0, u_end.1, u_end.2)?,
        })
    }

    pub fn len(&self) -> usize {
        self.u_rf.len() * self.u_end.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl<T: Real> Default for GridSpec<T> {
    /// 150-400 V in 10 V steps, 0.2-10 V in 0.2 V steps.
    fn default() -> Self {
        Self::linspace((T::lit(150.0), T::lit(400.0), 26), (T::lit(0.2), T::lit(10.0), 50))
            .expect("static grid is valid")
    }
}

fn linspace<T: Real>(lo: T, hi: T, n: usize) -> Result<Vec<T>> {
    match n {
        0 => Err(Error::InvalidParameter("grid axis needs at least one point".into())),
        1 => Ok(vec![lo]),
        _ => {
            if !(hi >= lo) {
                return Err(Error::InvalidParameter(format!("grid range [{lo}, {hi}] is reversed")));
            }
            let step = (hi - lo) / T::lit((n - 1) as f64);
            Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + step * T::lit(i as f64) }).collect())
        }
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord<T> {
    /// V.
    pub u_rf: T,
    /// V.
    pub u_end: T,
    /// m^-3.
    pub density: T,
    pub mathieu_q: T,
    pub q_validity: QValidity,
    /// Unconstrained model length, m (zero when the crystal model fails).
    pub model_length: T,
    /// Constraint limit, m; `None` when undefined, infinite when unlimited.
    pub max_length: Option<T>,
    /// Length used for the mode count, m.
    pub length: T,
    pub length_capped: bool,
    pub n_in_mode: T,
    /// `g0 sqrt(N)`, rad/s.
    pub collective_coupling: T,
    /// Model crystal radius under 2 w(l / 2): the closed form overestimates.
    pub radial_truncation_significant: bool,
    pub feasible: bool,
    /// Why the point is infeasible.
    pub reason: Option<String>,
}

pub fn evaluate_point<T: Real>(inputs: &SweepInputs<T>, u_rf: T, u_end: T) -> Result<PointRecord<T>> {
    let mode = cavity::waist_from_geometry(&inputs.cavity)?;
    Ok(evaluate_with_mode(inputs, &mode, u_rf, u_end))
}

fn evaluate_with_mode<T: Real>(inputs: &SweepInputs<T>, mode: &ModeGeometry<T>, u_rf: T, u_end: T) -> PointRecord<T> {
    let geom = &inputs.geometry;
    let ion = &inputs.species;
    let v = DriveVoltages { u_rf, u_end };
    let density = trap::crystal_density(geom, &v, ion);
    let q = trap::mathieu_q(geom, &v, ion);
    let max_length = inputs.constraint.max_length(u_rf, inputs.total_ions, inputs.cooling_level);
    let mut rec = PointRecord {
        u_rf,
        u_end,
        density,
        mathieu_q: q.q,
        q_validity: q.validity,
        model_length: T::zero(),
        max_length,
        length: T::zero(),
        length_capped: false,
        n_in_mode: T::zero(),
        collective_coupling: T::zero(),
        radial_truncation_significant: false,
        feasible: false,
        reason: None,
    };
    if let Err(e) = v.validate() {
        rec.reason = Some(e.to_string());
        return rec;
    }
    if q.validity == QValidity::Unstable {
        rec.reason = Some(format!("Mathieu q = {} outside the stability region", q.q));
        return rec;
    }
    let crystal = match crystal::spheroid_from_count(geom, &v, ion, inputs.total_ions) {
        Ok(c) => c,
        Err(e) => {
            rec.reason = Some(e.to_string());
            return rec;
        }
    };
    rec.model_length = crystal.total_length();
    let Some(limit) = max_length else {
        rec.reason = Some(format!("stability constraint undefined at {u_rf} V"));
        return rec;
    };
    rec.length_capped = rec.model_length > limit;
    rec.length = rec.model_length.min(limit);
    rec.n_in_mode = density * T::PI() * mode.waist * mode.waist * rec.length / T::lit(4.0);
    rec.collective_coupling = cavity::single_ion_coupling(ion, mode) * rec.n_in_mode.sqrt();
    rec.radial_truncation_significant = crystal.radius < T::two() * mode.beam_radius(rec.length / T::two());
    rec.feasible = true;
    rec
}

/// Best feasible point at one rf voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry<T> {
    pub u_rf: T,
    /// Index into [`SweepResult::points`], if any point at this U_rf is feasible.
    pub best: Option<usize>,
    pub n_in_mode: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult<T> {
    pub grid: GridSpec<T>,
    /// Row-major, U_rf outer.
    pub points: Vec<PointRecord<T>>,
    /// Index of the feasible maximum of `n_in_mode`.
    pub argmax: usize,
    /// Maximum over U_end at each U_rf.
    pub profile: Vec<ProfileEntry<T>>,
    /// Smallest ion number in the mode giving strong collective coupling.
    pub strong_coupling_threshold: u64,
    /// Rf voltages where the profile crosses the threshold (linear
    /// interpolation), V.
    pub threshold_crossings: Vec<T>,
}

impl<T: Real> SweepResult<T> {
    pub fn best(&self) -> &PointRecord<T> {
        &self.points[self.argmax]
    }

    pub fn point(&self, i_rf: usize, i_end: usize) -> &PointRecord<T> {
        &self.points[i_rf * self.grid.u_end.len() + i_end]
    }

    pub fn summary(&self) -> SweepSummary<T> {
        SweepSummary {
            argmax: self.best().clone(),
            strong_coupling_threshold: self.strong_coupling_threshold,
            threshold_crossings: self.threshold_crossings.clone(),
            profile: self
                .profile
                .iter()
                .map(|p| (p.u_rf, p.best.map(|i| self.points[i].u_end), p.n_in_mode))
                .collect(),
            grid_points: self.points.len(),
            feasible_points: self.points.iter().filter(|p| p.feasible).count(),
        }
    }
}

/// Index of the largest value, ignoring `None`; ties go to the first.
pub fn argmax_feasible<T: Real>(values: impl IntoIterator<Item = Option<T>>) -> Option<usize> {
    let mut best: Option<(usize, T)> = None;
    for (i, v) in values.into_iter().enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Evaluates every grid point (in parallel) and locates the optimum.
pub fn sweep<T: Real>(grid: &GridSpec<T>, inputs: &SweepInputs<T>) -> Result<SweepResult<T>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("sweep grid is empty".into()));
    }
    inputs.constraint.validate()?;
    inputs.cavity.validate()?;
    let mode = cavity::waist_from_geometry(&inputs.cavity)?;
    let kappa = cavity::cavity_decay_rate(inputs.cavity_linewidth);
    let threshold = cavity::strong_coupling_threshold(&inputs.species, &mode, kappa)?;

    let n_end = grid.u_end.len();
    let points: Vec<PointRecord<T>> = (0..grid.len())
        .into_par_iter()
        .map(|i| evaluate_with_mode(inputs, &mode, grid.u_rf[i / n_end], grid.u_end[i % n_end]))
        .collect();

    let score = |p: &PointRecord<T>| p.feasible.then_some(p.n_in_mode);
    let argmax = argmax_feasible(points.iter().map(score))
        .ok_or_else(|| Error::Infeasible(format!("none of the {} grid points is feasible", points.len())))?;

    let profile: Vec<ProfileEntry<T>> = grid
        .u_rf
        .iter()
        .enumerate()
        .map(|(i, &u_rf)| {
            let row = &points[i * n_end..(i + 1) * n_end];
            let best = argmax_feasible(row.iter().map(score)).map(|j| i * n_end + j);
            ProfileEntry {
                u_rf,
                best,
                n_in_mode: best.map_or(T::zero(), |b| points[b].n_in_mode),
            }
        })
        .collect();

    let thr = T::lit(threshold as f64);
    let threshold_crossings = profile
        .windows(2)
        .filter(|w| w[0].best.is_some() && w[1].best.is_some())
        .filter_map(|w| {
            let (d0, d1) = (w[0].n_in_mode - thr, w[1].n_in_mode - thr);
            if (d0 < T::zero()) == (d1 < T::zero()) {
                return None;
            }
            Some(w[0].u_rf + (w[1].u_rf - w[0].u_rf) * d0 / (d0 - d1))
        })
        .collect();

    Ok(SweepResult {
        grid: grid.clone(),
        points,
        argmax,
        profile,
        strong_coupling_threshold: threshold,
        threshold_crossings,
    })
}

/// Machine-readable summary of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary<T> {
    pub argmax: PointRecord<T>,
    pub strong_coupling_threshold: u64,
    pub threshold_crossings: Vec<T>,
    /// (U_rf, best U_end, N in mode) per rf voltage.
    pub profile: Vec<(T, Option<T>, T)>,
    pub grid_points: usize,
    pub feasible_points: usize,
}

/// One line of the sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow<T> {
    #[serde(rename = "u_rf_V")]
    pub u_rf: T,
    #[serde(rename = "u_end_V")]
    pub u_end: T,
    #[serde(rename = "density_m3")]
    pub density: T,
    #[serde(rename = "length_m")]
    pub length: T,
    pub n_in_mode: T,
    #[serde(rename = "g_coll_rad_s")]
    pub collective_coupling: T,
    pub feasible: bool,
}

impl<T: Real> From<&PointRecord<T>> for SweepRow<T> {
    fn from(p: &PointRecord<T>) -> Self {
        Self {
            u_rf: p.u_rf,
            u_end: p.u_end,
            density: p.density,
            length: p.length,
            n_in_mode: p.n_in_mode,
            collective_coupling: p.collective_coupling,
            feasible: p.feasible,
        }
    }
}

/// Writes `u_rf_V,u_end_V,density_m3,length_m,n_in_mode,g_coll_rad_s,feasible`.
pub fn write_sweep_csv<T: Real, W: Write>(result: &SweepResult<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &result.points {
        w.serialize(SweepRow::from(p))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<T: Real, R: Read>(input: R) -> Result<Vec<SweepRow<T>>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Writes the grid as CSV and the summary as pretty JSON.
pub fn emit_report<T: Real, C: Write, J: Write>(result: &SweepResult<T>, csv_out: C, mut json_out: J) -> Result<()> {
    write_sweep_csv(result, csv_out)?;
    serde_json::to_writer_pretty(&mut json_out, &result.summary())?;
    writeln!(json_out)?;
    Ok(())
}

/// Sweeps and reports; a failed sweep is written as an error object to the
/// JSON sink and returned.
pub fn sweep_and_report<T: Real, C: Write, J: Write>(
    grid: &GridSpec<T>,
    inputs: &SweepInputs<T>,
    csv_out: C,
    mut json_out: J,
) -> Result<SweepResult<T>> {
    match sweep(grid, inputs) {
        Ok(r) => {
            emit_report(&r, csv_out, json_out)?;
            Ok(r)
        }
        Err(e) => {
            serde_json::to_writer_pretty(&mut json_out, &e.to_json())?;
            writeln!(json_out)?;
            Err(e)
        }
    }
}
