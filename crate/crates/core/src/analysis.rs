//! Straight-line fits of measured series: ion loading curves, piezo
//! calibrations and similar.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::trap::IonSpecies;

/// Minimum number of points for a fit with uncertainties.
pub const MIN_FIT_POINTS: usize = 3;

/// Samples `(t, value)` with strictly increasing `t` and an optional
/// per-point standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries<T> {
    t: Vec<T>,
    value: Vec<T>,
    sigma: Option<Vec<T>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Row<T> {
    t_s: T,
    value: T,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn new(t: Vec<T>, value: Vec<T>, sigma: Option<Vec<T>>) -> Result<Self> {
        if t.len() != value.len() || sigma.as_ref().is_some_and(|s| s.len() != t.len()) {
            return Err(Error::InvalidParameter("series columns differ in length".into()));
        }
        if let Some(i) = t.iter().chain(&value).position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite entry at position {}", i % t.len().max(1))));
        }
        if let Some(i) = t.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(format!(
                "abscissa not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(s) = &sigma {
            if s.iter().any(|v| !(v.is_finite() && *v > T::zero())) {
                return Err(Error::InvalidParameter("uncertainties must be finite and > 0".into()));
            }
        }
        Ok(Self { t, value, sigma })
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (T, T)>) -> Result<Self> {
        let (t, value) = pairs.into_iter().unzip();
        Self::new(t, value, None)
    }

    pub fn t(&self) -> &[T] {
        &self.t
    }

    pub fn value(&self) -> &[T] {
        &self.value
    }

    pub fn sigma(&self) -> Option<&[T]> {
        self.sigma.as_deref()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Reads `t_s,value[,sigma]`. The sigma column must be filled on every
    /// row or on none.
    pub fn from_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let (mut t, mut value, mut sigma) = (Vec::new(), Vec::new(), Vec::new());
        for row in r.deserialize() {
            let row: Row<T> = row?;
            t.push(row.t_s);
            value.push(row.value);
            sigma.push(row.sigma);
        }
        let sigma = match sigma.iter().filter(|s| s.is_some()).count() {
            0 => None,
            n if n == sigma.len() => Some(sigma.into_iter().flatten().collect()),
            _ => return Err(Error::Parse("sigma column present on some rows only".into())),
        };
        Self::new(t, value, sigma)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        if self.sigma.is_none() {
            w.write_record(["t_s", "value"])?;
        } else {
            w.write_record(["t_s", "value", "sigma"])?;
        }
        for i in 0..self.len() {
            let mut rec = vec![self.t[i].to_string(), self.value[i].to_string()];
            if let Some(s) = &self.sigma {
                rec.push(s[i].to_string());
            }
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `value = slope * t + intercept` with one-sigma standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit<T> {
    pub slope: T,
    pub intercept: T,
    pub slope_error: T,
    pub intercept_error: T,
    /// Residual standard deviation (unweighted) or reduced chi-square
    /// (weighted).
    pub residual: T,
    pub points: usize,
    pub weighted: bool,
}

/// Ordinary least squares; any uncertainty column is ignored.
pub fn fit_linear<T: Real>(series: &TimeSeries<T>) -> Result<LinearFit<T>> {
    fit(series, false)
}

/// Least squares, weighted by `1 / sigma^2` when `weighted` is set. Weighted
/// errors come from the stated uncertainties alone.
pub fn fit<T: Real>(series: &TimeSeries<T>, weighted: bool) -> Result<LinearFit<T>> {
    let n = series.len();
    if n < MIN_FIT_POINTS {
        return Err(Error::InsufficientSamples {
            got: n,
            needed: MIN_FIT_POINTS,
        });
    }
    let weights: Vec<T> = match (weighted, series.sigma()) {
        (true, Some(s)) => s.iter().map(|&s| T::one() / (s * s)).collect(),
        (true, None) => {
            return Err(Error::InvalidParameter(
                "weighted fit requested but the series has no uncertainty column".into(),
            ))
        }
        (false, _) => vec![T::one(); n],
    };
    let (x, y) = (series.t(), series.value());
    let sw: T = weights.iter().copied().sum();
    let xm = x.iter().zip(&weights).map(|(&x, &w)| w * x).sum::<T>() / sw;
    let ym = y.iter().zip(&weights).map(|(&y, &w)| w * y).sum::<T>() / sw;
    let (mut sxx, mut sxy) = (T::zero(), T::zero());
    for i in 0..n {
        let dx = x[i] - xm;
        sxx += weights[i] * dx * dx;
        sxy += weights[i] * dx * (y[i] - ym);
    }
    if !(sxx > T::zero()) {
        return Err(Error::DegenerateAbscissa);
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let chi2: T = (0..n)
        .map(|i| {
            let r = y[i] - slope * x[i] - intercept;
            weights[i] * r * r
        })
        .sum();
    let dof = T::lit((n - 2) as f64);
    // unweighted: scale by the residual variance; weighted: trust sigma
    let scale = if weighted { T::one() } else { chi2 / dof };
    let var_slope = scale / sxx;
    let var_intercept = scale * (T::one() / sw + xm * xm / sxx);
    Ok(LinearFit {
        slope,
        intercept,
        slope_error: var_slope.sqrt(),
        intercept_error: var_intercept.sqrt(),
        residual: if weighted { chi2 / dof } else { (chi2 / dof).sqrt() },
        points: n,
        weighted,
    })
}

/// Piezo calibration from (PZT voltage, frequency detuning in Hz) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PztCalibration<T> {
    /// Hz/V.
    pub slope: T,
    /// Hz/V.
    pub slope_error: T,
    /// Detuning at zero voltage, Hz.
    pub offset: T,
    pub fit: LinearFit<T>,
}

pub fn fit_pzt_calibration<T: Real>(series: &TimeSeries<T>, weighted: bool) -> Result<PztCalibration<T>> {
    let fit = fit(series, weighted)?;
    Ok(PztCalibration {
        slope: fit.slope,
        slope_error: fit.slope_error,
        offset: fit.intercept,
        fit,
    })
}

/// Straight line sampled at `t` with seeded Gaussian noise of standard
/// deviation `noise` (zero for an exact line).
pub fn synthetic_line<T: Real>(t: &[T], slope: T, intercept: T, noise: T, seed: u64) -> Result<TimeSeries<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.as_f64()).map_err(|e| Error::InvalidParameter(format!("noise: {e}")))?;
    let value = t
        .iter()
        .map(|&t| {
            let e = if noise > T::zero() { T::lit(normal.sample(&mut rng)) } else { T::zero() };
            slope * t + intercept + e
        })
        .collect();
    let sigma = (noise > T::zero()).then(|| vec![noise; t.len()]);
    TimeSeries::new(t.to_vec(), value, sigma)
}

/// 866 nm isotope shift of the species with the given label, Hz.
pub fn isotope_shift<'a, T: Real>(table: impl IntoIterator<Item = &'a IonSpecies<T>>, label: &str) -> Result<T> {
    let species = table
        .into_iter()
        .find(|s| s.isotope_label == label)
        .ok_or_else(|| Error::InvalidParameter(format!("species {label:?} not in the species table")))?;
    species
        .transition
        .isotope_shift
        .ok_or_else(|| Error::InvalidParameter(format!("no isotope shift recorded for {label}")))
}
