//! Optical cavity characterisation and ion-cavity coupling.
//!
//! Conventions:
//! - cavity field decay rate `kappa = 2 pi * (FWHM / 2)`, rad/s;
//! - the standing-wave TEM00 mode function is
//!   `Psi = (w0 / w(z)) exp(-(x^2 + y^2) / w(z)^2) sin(kz)`, normalised to
//!   one at the waist antinode, so the effective number of ions in the mode,
//!   `N = rho * int Psi^2 dV`, is `rho * pi w0^2 l / 4` for a crystal that
//!   covers the mode radially over its length `l`;
//! - strong collective coupling means `g0 sqrt(N) > max(gamma, kappa)`,
//!   strictly.

use serde::{Deserialize, Serialize};

use crate::constants::{EPSILON_0, HBAR, SPEED_OF_LIGHT};
use crate::crystal::{CrystalShape, CrystalSpec};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::quadrature::GaussLegendre;
use crate::trap::IonSpecies;

/// Symmetric two-mirror resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavitySpec<T> {
    /// Mirror separation, m.
    pub length: T,
    /// Radius of curvature of each mirror, m.
    pub mirror_roc: T,
    pub transmission_in: T,
    pub transmission_out: T,
    /// Round-trip intracavity loss excluding transmission.
    pub intracavity_loss: T,
    /// Wavelength, m.
    pub wavelength: T,
}

impl<T: Real> CavitySpec<T> {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: T| v > T::zero() && v < T::one();
        if !(self.length > T::zero() && self.mirror_roc > T::zero() && self.wavelength > T::zero()) {
            return Err(Error::InvalidParameter(
                "cavity length, mirror curvature and wavelength must be > 0".into(),
            ));
        }
        if !(unit(self.transmission_in) && unit(self.transmission_out) && unit(self.intracavity_loss)) {
            return Err(Error::InvalidParameter(
                "mirror transmissions and loss must lie in (0, 1)".into(),
            ));
        }
        self.check_stability()
    }

    fn check_stability(&self) -> Result<()> {
        let limit = T::two() * self.mirror_roc;
        if self.length > T::zero() && self.length < limit {
            Ok(())
        } else {
            Err(Error::UnstableResonator {
                length: self.length.as_f64(),
                limit: limit.as_f64(),
            })
        }
    }

    /// Total round-trip loss: both transmissions plus intracavity loss.
    pub fn round_trip_loss(&self) -> T {
        self.transmission_in + self.transmission_out + self.intracavity_loss
    }
}

impl<T: Real> Default for CavitySpec<T> {
    fn default() -> Self {
        Self {
            length: T::lit(11.8e-3),
            mirror_roc: T::lit(10e-3),
            transmission_in: T::lit(1500e-6),
            transmission_out: T::lit(5e-6),
            intracavity_loss: T::lit(350e-6),
            wavelength: T::lit(866e-9),
        }
    }
}

/// Gaussian TEM00 mode of the resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeGeometry<T> {
    /// Waist radius w0, m.
    pub waist: T,
    /// Rayleigh range pi w0^2 / lambda, m.
    pub rayleigh_range: T,
    /// Wavenumber 2 pi / lambda, 1/m.
    pub wavenumber: T,
    /// Standing-wave mode volume pi w0^2 L / 4, m^3.
    pub mode_volume: T,
}

impl<T: Real> ModeGeometry<T> {
    /// Beam radius w(z) at distance `z` from the waist.
    pub fn beam_radius(&self, z: T) -> T {
        let u = z / self.rayleigh_range;
        self.waist * (T::one() + u * u).sqrt()
    }

    pub fn wavelength(&self) -> T {
        T::tau() / self.wavenumber
    }

    /// Squared mode function Psi^2 at (r, z).
    pub fn mode_function_sq(&self, r: T, z: T) -> T {
        let w = self.beam_radius(z);
        let s = (self.wavenumber * z).sin();
        self.waist * self.waist / (w * w) * (-T::two() * r * r / (w * w)).exp() * s * s
    }
}

/// Free spectral range c / 2L, Hz.
pub fn free_spectral_range<T: Real>(cavity: &CavitySpec<T>) -> T {
    T::lit(SPEED_OF_LIGHT) / (T::two() * cavity.length)
}

/// Cavity length matching a measured free spectral range, m.
pub fn length_from_fsr<T: Real>(fsr: T) -> T {
    T::lit(SPEED_OF_LIGHT) / (T::two() * fsr)
}

/// Finesse as free spectral range over resonance FWHM.
pub fn finesse_from_linewidth<T: Real>(fsr: T, linewidth_fwhm: T) -> T {
    fsr / linewidth_fwhm
}

/// Finesse from mirror transmissions and losses, 2 pi / (T1 + T2 + loss).
pub fn finesse_from_losses<T: Real>(cavity: &CavitySpec<T>) -> T {
    T::tau() / cavity.round_trip_loss()
}

/// Field decay rate (angular half width) from the intensity FWHM in Hz.
pub fn cavity_decay_rate<T: Real>(linewidth_fwhm: T) -> T {
    T::PI() * linewidth_fwhm
}

/// Waist and derived mode quantities of a symmetric resonator,
/// `w0^2 = (lambda / 2 pi) sqrt(L (2 ROC - L))`.
pub fn waist_from_geometry<T: Real>(cavity: &CavitySpec<T>) -> Result<ModeGeometry<T>> {
    cavity.check_stability()?;
    let l = cavity.length;
    let lambda = cavity.wavelength;
    let w0_sq = lambda / T::tau() * (l * (T::two() * cavity.mirror_roc - l)).sqrt();
    Ok(ModeGeometry {
        waist: w0_sq.sqrt(),
        rayleigh_range: T::PI() * w0_sq / lambda,
        wavenumber: T::tau() / lambda,
        mode_volume: T::PI() * w0_sq * l / T::lit(4.0),
    })
}

/// Single-ion coupling at the waist antinode,
/// `g0 = (D / hbar) sqrt(hbar omega / (2 eps0 V))`, rad/s.
pub fn single_ion_coupling<T: Real>(ion: &IonSpecies<T>, mode: &ModeGeometry<T>) -> T {
    let omega = ion.transition.angular_frequency();
    let field = (T::lit(HBAR) * omega / (T::two() * T::lit(EPSILON_0) * mode.mode_volume)).sqrt();
    ion.transition.dipole_moment / T::lit(HBAR) * field
}

/// Dipole moment giving coupling `g0` for a transition at `wavelength` in `mode`.
pub fn dipole_for_coupling<T: Real>(g0: T, wavelength: T, mode: &ModeGeometry<T>) -> T {
    let omega = T::tau() * T::lit(SPEED_OF_LIGHT) / wavelength;
    let field = (T::lit(HBAR) * omega / (T::two() * T::lit(EPSILON_0) * mode.mode_volume)).sqrt();
    g0 * T::lit(HBAR) / field
}

/// Smallest ion number with `g0 sqrt(N) > max(gamma, kappa)`.
pub fn strong_coupling_threshold_from_rates<T: Real>(g0: T, gamma: T, kappa: T) -> Result<u64> {
    if !(g0 > T::zero()) {
        return Err(Error::InvalidParameter("g0 must be > 0".into()));
    }
    let ratio = gamma.max(kappa) / g0;
    // smallest integer strictly above ratio^2
    Ok((ratio * ratio).floor().as_f64() as u64 + 1)
}

/// Strong collective coupling threshold for `ion` in `mode` with decay rate `kappa`.
pub fn strong_coupling_threshold<T: Real>(ion: &IonSpecies<T>, mode: &ModeGeometry<T>, kappa: T) -> Result<u64> {
    strong_coupling_threshold_from_rates(
        single_ion_coupling(ion, mode),
        ion.transition.dipole_decay_rate,
        kappa,
    )
}

/// Effective ion number in the cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IonsInMode<T> {
    /// `rho pi w0^2 l / 4`.
    pub closed_form: T,
    /// `rho int Psi^2 dV` over the crystal volume.
    pub quadrature: T,
    /// `(quadrature - closed_form) / closed_form`.
    pub relative_difference: T,
    /// Single-ion coupling of the crystal species, rad/s.
    pub single_ion_coupling: T,
    /// `g0 sqrt(closed_form)`, rad/s.
    pub collective_coupling: T,
    /// Crystal radius below 2 w(z) somewhere along the crystal.
    pub radial_truncation_significant: bool,
    /// The crystal covers at least 4 w(z) radially at every z, so the
    /// closed form is expected to match the quadrature.
    pub closed_form_valid: bool,
}

const AXIAL_NODES: usize = 8;
const RADIAL_NODES: usize = 32;
/// Radial integration stops here (in units of w(z)); exp(-2 * 36) is negligible.
const RADIAL_CUTOFF: f64 = 6.0;

/// Ions in the mode for a crystal centred on the cavity axis with the mode
/// waist at the crystal centre.
pub fn ions_in_mode<T: Real>(crystal: &CrystalSpec<T>, mode: &ModeGeometry<T>) -> IonsInMode<T> {
    let g0 = single_ion_coupling(&crystal.species, mode);
    let length = crystal.total_length();
    let closed_form = crystal.density * T::PI() * mode.waist * mode.waist * length / T::lit(4.0);
    let quadrature = crystal.density * mode_overlap_integral(crystal, mode);
    let relative_difference = if closed_form > T::zero() {
        (quadrature - closed_form) / closed_form
    } else {
        T::zero()
    };

    let edge_radius = mode.beam_radius(crystal.half_length);
    let truncated = !matches!(crystal.shape, CrystalShape::Point)
        && crystal.radius < T::two() * edge_radius;

    IonsInMode {
        closed_form,
        quadrature,
        relative_difference,
        single_ion_coupling: g0,
        collective_coupling: g0 * closed_form.sqrt(),
        radial_truncation_significant: truncated,
        closed_form_valid: covers_mode(crystal, mode, T::lit(4.0)),
    }
}

fn covers_mode<T: Real>(crystal: &CrystalSpec<T>, mode: &ModeGeometry<T>, factor: T) -> bool {
    if matches!(crystal.shape, CrystalShape::Point) || crystal.half_length <= T::zero() {
        return false;
    }
    let samples = 1000;
    (0..=samples).all(|i| {
        let z = crystal.half_length * (T::two() * T::lit(i as f64 / samples as f64) - T::one());
        match crystal.radial_bounds(z) {
            Some((inner, outer)) => inner <= T::zero() && outer >= factor * mode.beam_radius(z),
            None => false,
        }
    })
}

/// `int Psi^2 dV` over the crystal, by composite Gauss-Legendre in z (one
/// panel per half wavelength) and Gauss-Legendre in r.
pub fn mode_overlap_integral<T: Real>(crystal: &CrystalSpec<T>, mode: &ModeGeometry<T>) -> T {
    if matches!(crystal.shape, CrystalShape::Point) || crystal.half_length <= T::zero() {
        return T::zero();
    }
    let axial = GaussLegendre::new(AXIAL_NODES);
    let radial = GaussLegendre::new(RADIAL_NODES);
    let a = crystal.half_length;
    let panel = T::PI() / mode.wavenumber;
    let panels = ((T::two() * a / panel).ceil().as_f64() as usize).max(1);

    let transverse = |z: T| -> T {
        let Some((inner, outer)) = crystal.radial_bounds(z) else {
            return T::zero();
        };
        let w = mode.beam_radius(z);
        let outer = outer.min(T::lit(RADIAL_CUTOFF) * w);
        if outer <= inner {
            return T::zero();
        }
        let amp = mode.waist * mode.waist / (w * w);
        radial.integrate(inner, outer, |r| {
            amp * (-T::two() * r * r / (w * w)).exp() * T::tau() * r
        })
    };

    let mut total = T::zero();
    for p in 0..panels {
        let z0 = -a + panel * T::lit(p as f64);
        let z1 = (z0 + panel).min(a);
        total += axial.integrate(z0, z1, |z| {
            let s = (mode.wavenumber * z).sin();
            transverse(z) * s * s
        });
    }
    total
}

/// Everything derived from a cavity description and a measured linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityReport<T> {
    /// Hz.
    pub free_spectral_range: T,
    pub finesse_from_linewidth: T,
    pub finesse_from_losses: T,
    /// rad/s.
    pub decay_rate: T,
    pub mode: ModeGeometry<T>,
    /// rad/s.
    pub single_ion_coupling: T,
    /// rad/s.
    pub dipole_decay_rate: T,
    pub strong_coupling_threshold: u64,
}

/// Full cavity characterisation. When `measured_fsr` is given it is used for
/// the linewidth finesse; otherwise the geometric c / 2L.
pub fn characterize<T: Real>(
    cavity: &CavitySpec<T>,
    ion: &IonSpecies<T>,
    linewidth_fwhm: T,
    measured_fsr: Option<T>,
) -> Result<CavityReport<T>> {
    cavity.validate()?;
    let fsr = measured_fsr.unwrap_or_else(|| free_spectral_range(cavity));
    let mode = waist_from_geometry(cavity)?;
    let kappa = cavity_decay_rate(linewidth_fwhm);
    Ok(CavityReport {
        free_spectral_range: fsr,
        finesse_from_linewidth: finesse_from_linewidth(fsr, linewidth_fwhm),
        finesse_from_losses: finesse_from_losses(cavity),
        decay_rate: kappa,
        mode,
        single_ion_coupling: single_ion_coupling(ion, &mode),
        dipole_decay_rate: ion.transition.dipole_decay_rate,
        strong_coupling_threshold: strong_coupling_threshold(ion, &mode, kappa)?,
    })
}
