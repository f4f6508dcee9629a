//! Analysis of recorded trajectories: spectra, density, radial structure and
//! temperatures.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::Simulation;
use crate::constants::BOLTZMANN;
use crate::error::{Error, Result};
use crate::num::Real;

/// Minimum series length accepted by [`spectrum`].
pub const MIN_SPECTRUM_SAMPLES: usize = 1 << 12;
/// Nearest-neighbour distance over Wigner-Seitz radius for a bcc/fcc-like
/// local order.
pub const NN_TO_WIGNER_SEITZ: f64 = 1.8;

/// Sampled positions and velocities of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory<T> {
    pub times: Vec<T>,
    pub positions: Vec<Vec<[T; 3]>>,
    pub velocities: Vec<Vec<[T; 3]>>,
    pub species: Vec<usize>,
}

impl<T: Real> Trajectory<T> {
    /// Steps `sim`, recording `samples` frames every `every` steps.
    pub fn record(sim: &mut Simulation<T>, samples: usize, every: usize) -> Result<Self> {
        let every = every.max(1);
        let mut traj = Self {
            times: Vec::with_capacity(samples),
            positions: Vec::with_capacity(samples),
            velocities: Vec::with_capacity(samples),
            species: sim.state().species.clone(),
        };
        for _ in 0..samples {
            sim.run(every)?;
            let s = sim.state();
            traj.times.push(s.time);
            traj.positions.push(s.positions.clone());
            traj.velocities.push(s.velocities.clone());
        }
        Ok(traj)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn ion_count(&self) -> usize {
        self.species.len()
    }

    /// Time between samples (from the first two frames).
    pub fn sample_interval(&self) -> Option<T> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }

    /// Centre-of-mass coordinate along `axis` for every frame.
    pub fn center_of_mass(&self, axis: usize) -> Vec<T> {
        let n = T::lit(self.ion_count().max(1) as f64);
        self.positions
            .iter()
            .map(|frame| frame.iter().map(|p| p[axis]).sum::<T>() / n)
            .collect()
    }

    /// Mean squared coordinate along `axis` for every frame (breathing mode).
    pub fn breathing(&self, axis: usize) -> Vec<T> {
        let n = T::lit(self.ion_count().max(1) as f64);
        self.positions
            .iter()
            .map(|frame| frame.iter().map(|p| p[axis] * p[axis]).sum::<T>() / n)
            .collect()
    }

    /// Coordinate `axis` of ion `ion` for every frame.
    pub fn coordinate(&self, ion: usize, axis: usize) -> Vec<T> {
        self.positions.iter().map(|frame| frame[ion][axis]).collect()
    }

    /// Time-averaged positions of each ion.
    pub fn mean_positions(&self) -> Vec<[T; 3]> {
        let n = self.ion_count();
        let mut mean = vec![[T::zero(); 3]; n];
        for frame in &self.positions {
            for (m, p) in mean.iter_mut().zip(frame) {
                for k in 0..3 {
                    m[k] += p[k];
                }
            }
        }
        let inv = T::one() / T::lit(self.len().max(1) as f64);
        for m in &mut mean {
            for c in m.iter_mut() {
                *c *= inv;
            }
        }
        mean
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Window {
    Rectangular,
    Hann,
}

/// One-sided power spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Hz.
    pub frequencies: Vec<f64>,
    pub power: Vec<f64>,
}

impl Spectrum {
    pub fn resolution(&self) -> f64 {
        self.frequencies.get(1).copied().unwrap_or(0.0)
    }

    /// Strongest non-DC bin, refined by parabolic interpolation.
    pub fn dominant_peak(&self) -> Option<f64> {
        let idx = (1..self.power.len()).max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))?;
        Some(self.refine(idx))
    }

    /// Strongest bin within `target * (1 +- rel_window)`, refined.
    pub fn peak_near(&self, target: f64, rel_window: f64) -> Option<f64> {
        let lo = target * (1.0 - rel_window);
        let hi = target * (1.0 + rel_window);
        let idx = (1..self.power.len())
            .filter(|&k| self.frequencies[k] >= lo && self.frequencies[k] <= hi)
            .max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))?;
        Some(self.refine(idx))
    }

    /// Local maxima whose power exceeds `min_relative` times the global
    /// maximum, strongest first.
    pub fn peaks(&self, min_relative: f64) -> Vec<f64> {
        let max = self.power.iter().skip(1).copied().fold(0.0, f64::max);
        let mut found: Vec<(f64, f64)> = (2..self.power.len().saturating_sub(1))
            .filter(|&k| {
                self.power[k] > self.power[k - 1]
                    && self.power[k] >= self.power[k + 1]
                    && self.power[k] >= min_relative * max
            })
            .map(|k| (self.power[k], self.refine(k)))
            .collect();
        found.sort_by(|a, b| b.0.total_cmp(&a.0));
        found.into_iter().map(|(_, f)| f).collect()
    }

    fn refine(&self, k: usize) -> f64 {
        if k == 0 || k + 1 >= self.power.len() {
            return self.frequencies[k];
        }
        let peak = self.power[k];
        if self.power[k - 1].min(self.power[k + 1]) < 1e-12 * peak {
            // neighbours at round-off level: the line sits on the bin
            return self.frequencies[k];
        }
        let ln = |p: f64| p.ln();
        let (a, b, c) = (ln(self.power[k - 1]), ln(self.power[k]), ln(self.power[k + 1]));
        let denom = a - 2.0 * b + c;
        let shift = if denom.abs() > 0.0 { 0.5 * (a - c) / denom } else { 0.0 };
        self.frequencies[k] + shift.clamp(-0.5, 0.5) * self.resolution()
    }
}

/// Power spectrum of an evenly sampled series (mean removed).
pub fn spectrum<T: Real>(series: &[T], sample_interval: T, window: Window) -> Result<Spectrum> {
    let n = series.len();
    if n < MIN_SPECTRUM_SAMPLES {
        return Err(Error::InsufficientSamples {
            got: n,
            needed: MIN_SPECTRUM_SAMPLES,
        });
    }
    let dt = sample_interval.as_f64();
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("sample interval must be > 0".into()));
    }
    let mean = series.iter().map(|v| v.as_f64()).sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = series
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let w = match window {
                Window::Rectangular => 1.0,
                Window::Hann => 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos(),
            };
            Complex::new((v.as_f64() - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins = n / 2 + 1;
    let df = 1.0 / (n as f64 * dt);
    Ok(Spectrum {
        frequencies: (0..bins).map(|k| k as f64 * df).collect(),
        power: buf[..bins].iter().map(|c| c.norm_sqr()).collect(),
    })
}

/// Uniform spheroid matched to the second moments of a point set:
/// `<z^2> = a^2 / 5`, `<x^2 + y^2> = 2 R^2 / 5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipsoidFit<T> {
    pub half_length: T,
    pub radius: T,
    /// m^-3.
    pub density: T,
}

pub fn ellipsoid_fit<T: Real>(positions: &[[T; 3]]) -> Result<EllipsoidFit<T>> {
    let n = positions.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { got: n, needed: 2 });
    }
    let nf = T::lit(n as f64);
    let mut c = [T::zero(); 3];
    for p in positions {
        for k in 0..3 {
            c[k] += p[k] / nf;
        }
    }
    let (mut rr, mut zz) = (T::zero(), T::zero());
    for p in positions {
        let (x, y, z) = (p[0] - c[0], p[1] - c[1], p[2] - c[2]);
        rr += (x * x + y * y) / nf;
        zz += z * z / nf;
    }
    let five = T::lit(5.0);
    let half_length = (five * zz).sqrt();
    let radius = (five * rr / T::two()).sqrt();
    let volume = T::lit(4.0 / 3.0) * T::PI() * radius * radius * half_length;
    Ok(EllipsoidFit {
        half_length,
        radius,
        density: nf / volume,
    })
}

/// Mean nearest-neighbour distance, m.
pub fn mean_nearest_neighbour<T: Real>(positions: &[[T; 3]]) -> Result<T> {
    let n = positions.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { got: n, needed: 2 });
    }
    let total: T = positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            positions
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, q)| (0..3).map(|k| (p[k] - q[k]) * (p[k] - q[k])).sum::<T>())
                .fold(T::infinity(), T::min)
                .sqrt()
        })
        .sum();
    Ok(total / T::lit(n as f64))
}

/// Density from the Wigner-Seitz radius `a_ws = d_nn / nn_ratio`,
/// `rho = 3 / (4 pi a_ws^3)`.
pub fn wigner_seitz_density<T: Real>(positions: &[[T; 3]], nn_ratio: T) -> Result<T> {
    let a = mean_nearest_neighbour(positions)? / nn_ratio;
    Ok(T::lit(3.0) / (T::lit(4.0) * T::PI() * a * a * a))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialHistogram<T> {
    pub species: usize,
    /// `bins + 1` edges, m.
    pub edges: Vec<T>,
    pub counts: Vec<usize>,
}

/// Histograms of the distance from the trap axis, one per species, over a
/// common range.
pub fn radial_histograms<T: Real>(
    positions: &[[T; 3]],
    species: &[usize],
    species_count: usize,
    bins: usize,
) -> Vec<RadialHistogram<T>> {
    let bins = bins.max(1);
    let radius = |p: &[T; 3]| (p[0] * p[0] + p[1] * p[1]).sqrt();
    let r_max = positions.iter().map(radius).fold(T::zero(), T::max) * T::lit(1.0 + 1e-9);
    let width = if r_max > T::zero() { r_max / T::lit(bins as f64) } else { T::one() };
    let edges: Vec<T> = (0..=bins).map(|k| width * T::lit(k as f64)).collect();
    (0..species_count)
        .map(|s| {
            let mut counts = vec![0; bins];
            for (p, &sp) in positions.iter().zip(species) {
                if sp == s {
                    let k = (radius(p) / width).floor().as_f64() as usize;
                    counts[k.min(bins - 1)] += 1;
                }
            }
            RadialHistogram {
                species: s,
                edges: edges.clone(),
                counts,
            }
        })
        .collect()
}

/// Radius that best separates `inner` from all other species: the split of
/// the sorted radial coordinates with the fewest misassigned ions, reported
/// as the midpoint between the neighbouring radii.
pub fn species_boundary_radius<T: Real>(positions: &[[T; 3]], species: &[usize], inner: usize) -> Option<T> {
    let mut radii: Vec<(T, bool)> = positions
        .iter()
        .zip(species)
        .map(|(p, &s)| ((p[0] * p[0] + p[1] * p[1]).sqrt(), s == inner))
        .collect();
    let n_inner = radii.iter().filter(|r| r.1).count();
    if n_inner == 0 || n_inner == radii.len() {
        return None;
    }
    radii.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    // errors(k): outer ions among the first k plus inner ions after them
    let mut outer_below = 0usize;
    let mut inner_below = 0usize;
    let mut best = (usize::MAX, 0usize);
    for k in 1..radii.len() {
        if radii[k - 1].1 {
            inner_below += 1;
        } else {
            outer_below += 1;
        }
        let errors = outer_below + (n_inner - inner_below);
        if errors < best.0 {
            best = (errors, k);
        }
    }
    let k = best.1;
    Some(T::half() * (radii[k - 1].0 + radii[k].0))
}

/// Kinetic temperature `M <v^2> / 3 k_B` of each species over all frames, K.
pub fn kinetic_temperatures<T: Real>(traj: &Trajectory<T>, masses: &[T]) -> Vec<T> {
    let mut sums = vec![T::zero(); masses.len()];
    let mut counts = vec![0usize; masses.len()];
    for frame in &traj.velocities {
        for (v, &s) in frame.iter().zip(&traj.species) {
            sums[s] += masses[s] * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
            counts[s] += 1;
        }
    }
    sums.iter()
        .zip(&counts)
        .map(|(&s, &c)| {
            if c == 0 {
                T::zero()
            } else {
                s / (T::lit(3.0 * BOLTZMANN) * T::lit(c as f64))
            }
        })
        .collect()
}

/// Summary of a recorded trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observables<T> {
    /// Centre-of-mass spectra along x, y, z.
    pub com_spectra: [Spectrum; 3],
    /// Spectrum of the axial breathing coordinate `<z^2>`.
    pub axial_breathing_spectrum: Spectrum,
    /// Fit to the time-averaged positions.
    pub ellipsoid: EllipsoidFit<T>,
    pub wigner_seitz_density: T,
    pub radial_histograms: Vec<RadialHistogram<T>>,
    /// Boundary between species 0 and the rest, when more than one is present.
    pub boundary_radius: Option<T>,
    /// K, per species.
    pub kinetic_temperatures: Vec<T>,
}

pub fn observe<T: Real>(traj: &Trajectory<T>, masses: &[T], histogram_bins: usize) -> Result<Observables<T>> {
    let dt = traj
        .sample_interval()
        .ok_or(Error::InsufficientSamples { got: traj.len(), needed: MIN_SPECTRUM_SAMPLES })?;
    let com = |axis| spectrum(&traj.center_of_mass(axis), dt, Window::Hann);
    let mean = traj.mean_positions();
    let species_count = masses.len();
    Ok(Observables {
        com_spectra: [com(0)?, com(1)?, com(2)?],
        axial_breathing_spectrum: spectrum(&traj.breathing(2), dt, Window::Hann)?,
        ellipsoid: ellipsoid_fit(&mean)?,
        wigner_seitz_density: wigner_seitz_density(&mean, T::lit(NN_TO_WIGNER_SEITZ))?,
        radial_histograms: radial_histograms(&mean, &traj.species, species_count, histogram_bins),
        boundary_radius: if species_count > 1 {
            species_boundary_radius(&mean, &traj.species, 0)
        } else {
            None
        },
        kinetic_temperatures: kinetic_temperatures(traj, masses),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_sine_is_a_single_bin() {
        let n = 4096;
        let dt = 1e-6;
        let k0 = 300;
        let f = k0 as f64 / (n as f64 * dt);
        let series: Vec<f64> = (0..n).map(|i| (std::f64::consts::TAU * f * i as f64 * dt).sin()).collect();
        let s = spectrum(&series, dt, Window::Rectangular).unwrap();
        let total: f64 = s.power.iter().sum();
        assert!(s.power[k0] / total > 1.0 - 1e-12);
        assert!((s.dominant_peak().unwrap() - f).abs() < 1e-9 * f);
    }

    #[test]
    fn short_series_rejected() {
        let err = spectrum(&vec![0.0f64; 100], 1.0, Window::Hann).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { got: 100, .. }));
    }

    #[test]
    fn off_bin_peak_refined() {
        let n = 8192;
        let dt = 1e-7;
        let f = 123_456.0;
        let series: Vec<f64> = (0..n).map(|i| (std::f64::consts::TAU * f * i as f64 * dt).cos()).collect();
        let s = spectrum(&series, dt, Window::Hann).unwrap();
        let p = s.peak_near(f, 0.1).unwrap();
        assert!((p - f).abs() < 0.2 * s.resolution(), "{p} vs {f}");
    }

    #[test]
    fn two_ion_density_from_spacing() {
        let d = 19e-6;
        let pos = [[0.0, 0.0, -d / 2.0], [0.0, 0.0, d / 2.0]];
        let rho = wigner_seitz_density(&pos, NN_TO_WIGNER_SEITZ).unwrap();
        let a = d / NN_TO_WIGNER_SEITZ;
        assert!((rho - 3.0 / (4.0 * std::f64::consts::PI * a.powi(3))).abs() < 1e-9 * rho);
    }

    #[test]
    fn uniform_ball_moment_fit() {
        // points on a fine cubic lattice inside a spheroid
        let (a, r, h) = (40e-6, 20e-6, 1e-6);
        let mut pts = Vec::new();
        let m = (a / h) as i32 + 1;
        for i in -m..=m {
            for j in -m..=m {
                for k in -m..=m {
                    let p = [i as f64 * h, j as f64 * h, k as f64 * h];
                    if (p[0] * p[0] + p[1] * p[1]) / (r * r) + p[2] * p[2] / (a * a) <= 1.0 {
                        pts.push(p);
                    }
                }
            }
        }
        let fit = ellipsoid_fit(&pts).unwrap();
        assert!((fit.half_length / a - 1.0).abs() < 0.02);
        assert!((fit.radius / r - 1.0).abs() < 0.02);
        assert!((fit.density * h.powi(3) - 1.0).abs() < 0.05);
    }

    #[test]
    fn boundary_between_separated_species() {
        let pos = [[1e-6, 0.0, 0.0], [2e-6, 0.0, 0.0], [5e-6, 0.0, 0.0], [6e-6, 0.0, 0.0]];
        let species = [0, 0, 1, 1];
        let b: f64 = species_boundary_radius(&pos, &species, 0).unwrap();
        assert!((b - 3.5e-6).abs() < 1e-15);
        let h = radial_histograms(&pos, &species, 2, 6);
        assert_eq!(h[0].counts.iter().sum::<usize>(), 2);
        assert_eq!(h[1].counts.iter().sum::<usize>(), 2);
        assert!(species_boundary_radius(&pos, &[0, 0, 0, 0], 0).is_none());
    }
}
