//! Zero-temperature charged-liquid model of ion Coulomb crystals.
//!
//! A cold one-component plasma in a harmonic trap is a uniformly charged
//! spheroid. Inside a uniformly charged spheroid the space-charge field is
//! linear, `E_i = (rho Q / eps0) L_i x_i`, with depolarisation factors
//! `L_x = L_y = (1 - L_z) / 2`. Force balance against the trap gives
//! `omega_z^2 / omega_r^2 = 2 L_z(alpha) / (1 - L_z(alpha))`, where
//! `alpha = a / R` is the axial-to-radial semi-axis ratio. The ratio is a
//! strictly decreasing function of `alpha`, so the aspect ratio is found by
//! bisection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::Real;
use crate::trap::{self, DriveVoltages, IonSpecies, TrapGeometry};

/// Search interval for the aspect ratio a / R.
pub const ALPHA_MIN: f64 = 1e-3;
pub const ALPHA_MAX: f64 = 1e3;
const ALPHA_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CrystalShape<T> {
    /// Single ion, zero extent.
    Point,
    /// Uniform spheroid with semi-axes (radius, radius, half_length).
    Spheroid,
    /// Cylinder of the given radius spanning [-half_length, half_length].
    Cylinder,
    /// Spheroid with a coaxial cylindrical core of `core_radius` removed.
    SpheroidalShell { core_radius: T },
}

/// A cold crystal of a single species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec<T> {
    pub ion_count: T,
    /// Number density, m^-3.
    pub density: T,
    /// Axial semi-axis a, m.
    pub half_length: T,
    /// Radial semi-axis R, m.
    pub radius: T,
    pub species: IonSpecies<T>,
    pub shape: CrystalShape<T>,
}

impl<T: Real> CrystalSpec<T> {
    /// Total axial length 2a.
    pub fn total_length(&self) -> T {
        T::two() * self.half_length
    }

    pub fn aspect_ratio(&self) -> T {
        self.half_length / self.radius
    }

    /// Geometric volume of the occupied region, m^3.
    pub fn volume(&self) -> T {
        let pi = T::PI();
        let spheroid = T::lit(4.0 / 3.0) * pi * self.radius * self.radius * self.half_length;
        match self.shape {
            CrystalShape::Point => T::zero(),
            CrystalShape::Spheroid => spheroid,
            CrystalShape::Cylinder => pi * self.radius * self.radius * self.total_length(),
            CrystalShape::SpheroidalShell { core_radius } => {
                spheroid - pi * core_radius * core_radius * self.total_length()
            }
        }
    }

    /// Radial extent `(inner, outer)` of the crystal at axial position `z`.
    /// Returns `None` outside the crystal.
    pub fn radial_bounds(&self, z: T) -> Option<(T, T)> {
        if z.abs() > self.half_length {
            return None;
        }
        let spheroid_radius = || {
            let u = z / self.half_length;
            self.radius * (T::one() - u * u).max(T::zero()).sqrt()
        };
        match self.shape {
            CrystalShape::Point => None,
            CrystalShape::Spheroid => Some((T::zero(), spheroid_radius())),
            CrystalShape::Cylinder => Some((T::zero(), self.radius)),
            CrystalShape::SpheroidalShell { core_radius } => {
                let outer = spheroid_radius();
                Some((core_radius.min(outer), outer))
            }
        }
    }

    /// Relative mismatch between `density * volume` and `ion_count`.
    pub fn count_mismatch(&self) -> T {
        if matches!(self.shape, CrystalShape::Point) {
            return T::zero();
        }
        ((self.density * self.volume() - self.ion_count) / self.ion_count).abs()
    }

    /// Spheroid from an observed density, ion count and total length.
    pub fn from_measured(species: IonSpecies<T>, density: T, ion_count: T, total_length: T) -> Result<Self> {
        if !(density > T::zero() && ion_count > T::zero() && total_length > T::zero()) {
            return Err(Error::InvalidParameter(
                "density, ion count and length must be positive".into(),
            ));
        }
        let a = total_length / T::two();
        let radius = (T::lit(3.0) * ion_count / (T::lit(4.0) * T::PI() * density * a)).sqrt();
        Ok(Self {
            ion_count,
            density,
            half_length: a,
            radius,
            species,
            shape: CrystalShape::Spheroid,
        })
    }
}

/// Axial depolarisation factor L_z of a spheroid with aspect ratio
/// `alpha = a / R` (a along the symmetry axis).
pub fn axial_depolarization<T: Real>(alpha: T) -> T {
    let one = T::one();
    let third = T::lit(1.0 / 3.0);
    if alpha > one {
        let e2 = one - one / (alpha * alpha);
        if e2 < T::lit(1e-4) {
            // (1 - e^2)(1/3 + e^2/5 + e^4/7 + e^6/9)
            return (one - e2) * (third + e2 * (T::lit(0.2) + e2 * (T::lit(1.0 / 7.0) + e2 / T::lit(9.0))));
        }
        let e = e2.sqrt();
        (one - e2) / (e2 * e) * (e.atanh() - e)
    } else if alpha < one {
        let e2 = one / (alpha * alpha) - one;
        if e2 < T::lit(1e-4) {
            return (one + e2) * (third - e2 * (T::lit(0.2) - e2 * (T::lit(1.0 / 7.0) - e2 / T::lit(9.0))));
        }
        let e = e2.sqrt();
        (one + e2) / (e2 * e) * (e - e.atan())
    } else {
        third
    }
}

/// `omega_z^2 / omega_r^2` supported by a spheroid of aspect ratio `alpha`.
pub fn frequency_ratio_sq<T: Real>(alpha: T) -> T {
    let l = axial_depolarization(alpha);
    T::two() * l / (T::one() - l)
}

/// Aspect ratio a / R for a given `omega_z^2 / omega_r^2`.
pub fn aspect_ratio_from_frequencies<T: Real>(ratio_sq: T) -> Result<T> {
    let lo = T::lit(ALPHA_MIN);
    let hi = T::lit(ALPHA_MAX);
    let f = |alpha: T| frequency_ratio_sq(alpha) - ratio_sq;
    if !(ratio_sq.is_finite() && ratio_sq > T::zero()) || f(lo) < T::zero() || f(hi) > T::zero() {
        return Err(Error::ExtremeAnisotropy {
            ratio: ratio_sq.as_f64(),
        });
    }
    let tol = T::lit(ALPHA_REL_TOL).max(T::epsilon() * T::lit(4.0));
    let (mut lo, mut hi) = (lo.ln(), hi.ln());
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = T::half() * (lo + hi);
        if f(mid.exp()) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((T::half() * (lo + hi)).exp())
}

fn aspect_ratio_in_trap<T: Real>(
    geom: &TrapGeometry<T>,
    v: &DriveVoltages<T>,
    ion: &IonSpecies<T>,
) -> Result<T> {
    let wr = trap::radial_frequency(geom, v, ion)?;
    let wz2 = trap::axial_frequency_sq(geom, v, ion);
    aspect_ratio_from_frequencies(wz2 / (wr * wr))
}

/// Crystal of `ion_count` ions at the trap's zero-temperature density.
pub fn spheroid_from_count<T: Real>(
    geom: &TrapGeometry<T>,
    v: &DriveVoltages<T>,
    ion: &IonSpecies<T>,
    ion_count: T,
) -> Result<CrystalSpec<T>> {
    if !(ion_count >= T::one()) {
        return Err(Error::InvalidParameter(format!("ion count must be >= 1, got {ion_count}")));
    }
    let density = trap::crystal_density(geom, v, ion);
    if ion_count == T::one() {
        log::warn!("single ion requested: returning a point crystal");
        trap::radial_frequency(geom, v, ion)?;
        return Ok(CrystalSpec {
            ion_count,
            density,
            half_length: T::zero(),
            radius: T::zero(),
            species: ion.clone(),
            shape: CrystalShape::Point,
        });
    }
    let alpha = aspect_ratio_in_trap(geom, v, ion)?;
    let volume = ion_count / density;
    let radius = (T::lit(3.0) * volume / (T::lit(4.0) * T::PI() * alpha)).cbrt();
    Ok(CrystalSpec {
        ion_count,
        density,
        half_length: alpha * radius,
        radius,
        species: ion.clone(),
        shape: CrystalShape::Spheroid,
    })
}

/// Number of ions in a crystal of the given total length (inverse of
/// [`spheroid_from_count`]).
pub fn count_from_length<T: Real>(
    geom: &TrapGeometry<T>,
    v: &DriveVoltages<T>,
    ion: &IonSpecies<T>,
    total_length: T,
) -> Result<T> {
    if !(total_length > T::zero()) {
        return Err(Error::InvalidParameter(format!(
            "crystal length must be > 0, got {total_length}"
        )));
    }
    let alpha = aspect_ratio_in_trap(geom, v, ion)?;
    let a = total_length / T::two();
    let radius = a / alpha;
    let density = trap::crystal_density(geom, v, ion);
    Ok(density * T::lit(4.0 / 3.0) * T::PI() * radius * radius * a)
}

/// Radially separated two-species crystal: a cylindrical core of the
/// species with the larger charge-to-mass ratio inside a spheroidal shell of
/// the other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoComponentCrystal<T> {
    pub inner: CrystalSpec<T>,
    pub outer: CrystalSpec<T>,
    /// Radius of the core / shell interface, m.
    pub boundary_radius: T,
    /// False when the core radius reaches the outer equatorial radius, i.e.
    /// the long-crystal approximation has broken down.
    pub core_fits: bool,
}

/// Long-crystal model: the core spans the full crystal length and its radius
/// follows from the inner species' count at its own density. The envelope
/// holds both volumes and takes its aspect ratio from the outer species.
pub fn two_component_structure<T: Real>(
    geom: &TrapGeometry<T>,
    v: &DriveVoltages<T>,
    first: &IonSpecies<T>,
    second: &IonSpecies<T>,
    first_count: T,
    second_count: T,
) -> Result<TwoComponentCrystal<T>> {
    let (qm1, qm2) = (first.charge_to_mass(), second.charge_to_mass());
    if ((qm1 - qm2) / qm1).abs() < T::lit(1e-12) {
        return Err(Error::NoSeparation);
    }
    if !(first_count > T::zero() && second_count > T::zero()) {
        return Err(Error::InvalidParameter("both species need a positive ion count".into()));
    }
    let ((inner, n_in), (outer, n_out)) = if qm1 > qm2 {
        ((first, first_count), (second, second_count))
    } else {
        ((second, second_count), (first, first_count))
    };
    trap::radial_frequency(geom, v, inner)?;
    let alpha = aspect_ratio_in_trap(geom, v, outer)?;

    let rho_in = trap::crystal_density(geom, v, inner);
    let rho_out = trap::crystal_density(geom, v, outer);
    let v_in = n_in / rho_in;
    let v_total = v_in + n_out / rho_out;
    let radius = (T::lit(3.0) * v_total / (T::lit(4.0) * T::PI() * alpha)).cbrt();
    let half_length = alpha * radius;
    let core_radius = (v_in / (T::two() * T::PI() * half_length)).sqrt();

    Ok(TwoComponentCrystal {
        inner: CrystalSpec {
            ion_count: n_in,
            density: rho_in,
            half_length,
            radius: core_radius,
            species: inner.clone(),
            shape: CrystalShape::Cylinder,
        },
        outer: CrystalSpec {
            ion_count: n_out,
            density: rho_out,
            half_length,
            radius,
            species: outer.clone(),
            shape: CrystalShape::SpheroidalShell { core_radius },
        },
        boundary_radius: core_radius,
        core_fits: core_radius < radius,
    })
}
