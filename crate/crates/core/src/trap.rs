//! Linear Paul trap: geometry, drive voltages, ion species and the secular
//! (pseudopotential) description of the trapping field.
//!
//! The axial potential is `Phi_z = 1/2 M omega_z^2 z^2` with
//! `omega_z^2 = 2 eta Q U_end / (M z_half^2)`. The radial pseudopotential is
//! `Phi_r = 1/2 M omega_r^2 r^2` with
//! `omega_r^2 = Q^2 U_rf^2 / (2 M^2 r0^4 Omega_rf^2) - eta Q U_end / (M z_half^2)`.
//! The zero-temperature crystal density depends on the rf amplitude only:
//! `rho = eps0 U_rf^2 / (M r0^4 Omega_rf^2)`.
//!
//! `z_half` is the half-length of the centre electrode: the electrode itself
//! is 5.0 mm long, and the axial formula is evaluated with 2.5 mm.

use serde::{Deserialize, Serialize};

use crate::constants::{ATOMIC_MASS_UNIT, ELEMENTARY_CHARGE, EPSILON_0};
use crate::error::{Error, Result};
use crate::num::Real;

/// Mathieu q above which the pseudopotential description is flagged.
pub const Q_WARN_THRESHOLD: f64 = 0.5;
/// Single-ion first stability region edge on the a = 0 line.
pub const Q_STABILITY_EDGE: f64 = 0.908;

/// Electrode geometry and rf drive frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapGeometry<T> {
    /// Half-length of the centre electrode section, m.
    pub z_half: T,
    /// Trap centre to electrode surface distance, m.
    pub r0: T,
    /// Dimensionless geometric factor of the end-cap potential.
    pub eta: T,
    /// Angular rf drive frequency, rad/s.
    pub omega_rf: T,
}

impl<T: Real> TrapGeometry<T> {
    pub fn new(z_half: T, r0: T, eta: T, omega_rf: T) -> Result<Self> {
        let geometry = Self {
            z_half,
            r0,
            eta,
            omega_rf,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.z_half) {
            return Err(Error::InvalidParameter(format!("z_half must be > 0, got {}", self.z_half)));
        }
        if !positive(self.r0) {
            return Err(Error::InvalidParameter(format!("r0 must be > 0, got {}", self.r0)));
        }
        if !positive(self.omega_rf) {
            return Err(Error::InvalidParameter(format!(
                "omega_rf must be > 0, got {}",
                self.omega_rf
            )));
        }
        if !(self.eta > T::zero() && self.eta < T::one()) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        Ok(())
    }

    /// Period of the rf drive, s.
    pub fn rf_period(&self) -> T {
        T::tau() / self.omega_rf
    }
}

impl<T: Real> Default for TrapGeometry<T> {
    fn default() -> Self {
        Self {
            z_half: T::lit(2.5e-3),
            r0: T::lit(2.35e-3),
            eta: T::lit(0.342),
            omega_rf: T::lit(2.0 * std::f64::consts::PI * 4.0e6),
        }
    }
}

/// Applied voltages: rf amplitude between rod pairs and static end voltage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveVoltages<T> {
    pub u_rf: T,
    pub u_end: T,
}

impl<T: Real> DriveVoltages<T> {
    pub fn new(u_rf: T, u_end: T) -> Result<Self> {
        let v = Self { u_rf, u_end };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u_rf.is_finite() && self.u_rf >= T::zero()) {
            return Err(Error::InvalidParameter(format!("u_rf must be >= 0, got {}", self.u_rf)));
        }
        if !(self.u_end.is_finite() && self.u_end >= T::zero()) {
            return Err(Error::InvalidParameter(format!("u_end must be >= 0, got {}", self.u_end)));
        }
        Ok(())
    }
}

/// Optical transition used for cavity coupling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionData<T> {
    /// Transition dipole moment, C m.
    pub dipole_moment: T,
    /// Vacuum wavelength, m.
    pub wavelength: T,
    /// Atomic dipole decay rate gamma (half the population decay rate), rad/s.
    pub dipole_decay_rate: T,
    /// Isotope shift of this transition relative to the reference isotope, Hz.
    pub isotope_shift: Option<T>,
}

impl<T: Real> TransitionData<T> {
    /// The 866 nm D3/2 -> P1/2 line of Ca+.
    ///
    /// The dipole moment reproduces a single-ion coupling of 2 pi x 0.53 MHz
    /// in the default cavity; gamma = 2 pi x 11 MHz.
    pub fn calcium_866() -> Self {
        Self {
            dipole_moment: T::lit(CA_866_DIPOLE_MOMENT),
            wavelength: T::lit(866e-9),
            dipole_decay_rate: T::lit(2.0 * std::f64::consts::PI * 11.0e6),
            isotope_shift: None,
        }
    }

    /// Transition angular frequency 2 pi c / lambda, rad/s.
    pub fn angular_frequency(&self) -> T {
        T::tau() * T::lit(crate::constants::SPEED_OF_LIGHT) / self.wavelength
    }
}

/// Dipole moment of the Ca+ 866 nm line, C m.
pub const CA_866_DIPOLE_MOMENT: f64 = 1.0938e-29;

/// A trapped ion species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IonSpecies<T> {
    /// Mass, kg.
    pub mass: T,
    /// Charge, C.
    pub charge: T,
    pub isotope_label: String,
    pub transition: TransitionData<T>,
}

impl<T: Real> IonSpecies<T> {
    pub fn new(
        isotope_label: impl Into<String>,
        mass: T,
        charge: T,
        transition: TransitionData<T>,
    ) -> Result<Self> {
        let s = Self {
            mass,
            charge,
            isotope_label: isotope_label.into(),
            transition,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.mass) {
            return Err(Error::InvalidParameter(format!("{}: mass must be > 0", self.isotope_label)));
        }
        if !positive(self.charge) {
            return Err(Error::InvalidParameter(format!("{}: charge must be > 0", self.isotope_label)));
        }
        if !positive(self.transition.wavelength) {
            return Err(Error::InvalidParameter(format!(
                "{}: transition wavelength must be > 0",
                self.isotope_label
            )));
        }
        if !positive(self.transition.dipole_decay_rate) {
            return Err(Error::InvalidParameter(format!(
                "{}: dipole decay rate must be > 0",
                self.isotope_label
            )));
        }
        Ok(())
    }

    /// Singly charged calcium isotope with atomic mass in u.
    ///
    /// Known 866 nm isotope shifts are attached for 44 (4.5 GHz) and 48
    /// (8.3 GHz); the reference isotope 40 carries a shift of zero.
    pub fn calcium(mass_number: u32) -> Result<Self> {
        let mass_u = match mass_number {
            40 => 39.962_590_86,
            42 => 41.958_617_83,
            43 => 42.958_766_44,
            44 => 43.955_481_56,
            46 => 45.953_689_0,
            48 => 47.952_522_76,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "no stable calcium isotope with mass number {other}"
                )))
            }
        };
        let mut transition = TransitionData::calcium_866();
        transition.isotope_shift = match mass_number {
            40 => Some(T::zero()),
            44 => Some(T::lit(4.5e9)),
            48 => Some(T::lit(8.3e9)),
            _ => None,
        };
        Self::new(
            format!("{mass_number}Ca+"),
            T::lit(mass_u * ATOMIC_MASS_UNIT),
            T::lit(ELEMENTARY_CHARGE),
            transition,
        )
    }

    /// Mass in unified atomic mass units.
    pub fn mass_u(&self) -> T {
        self.mass / T::lit(ATOMIC_MASS_UNIT)
    }

    pub fn charge_to_mass(&self) -> T {
        self.charge / self.mass
    }
}

/// Validity of the pseudopotential description at a given Mathieu q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum QValidity {
    /// q < 0.5.
    Ok,
    /// 0.5 <= q < 0.908: adiabatic approximation degraded.
    Warn,
    /// q >= 0.908: outside the first stability region.
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MathieuQ<T> {
    pub q: T,
    pub validity: QValidity,
}

/// Squared axial secular frequency, rad^2/s^2.
pub fn axial_frequency_sq<T: Real>(geom: &TrapGeometry<T>, v: &DriveVoltages<T>, ion: &IonSpecies<T>) -> T {
    T::two() * geom.eta * ion.charge_to_mass() * v.u_end / (geom.z_half * geom.z_half)
}

/// Axial secular frequency, rad/s. Zero end voltage gives zero.
pub fn axial_frequency<T: Real>(geom: &TrapGeometry<T>, v: &DriveVoltages<T>, ion: &IonSpecies<T>) -> T {
    axial_frequency_sq(geom, v, ion).sqrt()
}

/// Mathieu q = 2 Q U_rf / (M r0^2 Omega_rf^2) with its validity flag.
pub fn mathieu_q<T: Real>(geom: &TrapGeometry<T>, v: &DriveVoltages<T>, ion: &IonSpecies<T>) -> MathieuQ<T> {
    let r0_omega = geom.r0 * geom.omega_rf;
    let q = T::two() * ion.charge_to_mass() * v.u_rf / (r0_omega * r0_omega);
    let validity = if q >= T::lit(Q_STABILITY_EDGE) {
        QValidity::Unstable
    } else if q >= T::lit(Q_WARN_THRESHOLD) {
        QValidity::Warn
    } else {
        QValidity::Ok
    };
    MathieuQ { q, validity }
}

/// Radial pseudopotential frequency without end-cap defocusing,
/// `q Omega_rf / (2 sqrt 2)`, rad/s.
pub fn rf_radial_frequency<T: Real>(geom: &TrapGeometry<T>, v: &DriveVoltages<T>, ion: &IonSpecies<T>) -> T {
    mathieu_q(geom, v, ion).q * geom.omega_rf / (T::two() * T::SQRT_2())
}

/// Squared radial secular frequency; may be negative.
pub fn radial_frequency_sq<T: Real>(geom: &TrapGeometry<T>, v: &DriveVoltages<T>, ion: &IonSpecies<T>) -> T {
    let rf = rf_radial_frequency(geom, v, ion);
    rf * rf - T::half() * axial_frequency_sq(geom, v, ion)
}

/// Radial secular frequency, rad/s.
pub fn radial_frequency<T: Real>(geom: &TrapGeometry<T>, v: &DriveVoltages<T>, ion: &IonSpecies<T>) -> Result<T> {
    let w2 = radial_frequency_sq(geom, v, ion);
    if w2 > T::zero() {
        Ok(w2.sqrt())
    } else {
        Err(Error::RadiallyDeconfined {
            omega_r_sq: w2.as_f64(),
        })
    }
}

/// Zero-temperature crystal number density, m^-3. Independent of `u_end`.
pub fn crystal_density<T: Real>(geom: &TrapGeometry<T>, v: &DriveVoltages<T>, ion: &IonSpecies<T>) -> T {
    let x = v.u_rf / (geom.r0 * geom.r0 * geom.omega_rf);
    T::lit(EPSILON_0) / ion.mass * x * x
}

/// Pseudopotential energy at `position` (x, y, z), J.
pub fn pseudo_potential<T: Real>(
    geom: &TrapGeometry<T>,
    v: &DriveVoltages<T>,
    ion: &IonSpecies<T>,
    position: [T; 3],
) -> Result<T> {
    let wr = radial_frequency(geom, v, ion)?;
    let wz2 = axial_frequency_sq(geom, v, ion);
    let [x, y, z] = position;
    Ok(T::half() * ion.mass * (wr * wr * (x * x + y * y) + wz2 * z * z))
}

/// Secular frequencies of one species in one trap setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecularFrequencies<T> {
    pub axial: T,
    pub radial: T,
}

pub fn secular_frequencies<T: Real>(
    geom: &TrapGeometry<T>,
    v: &DriveVoltages<T>,
    ion: &IonSpecies<T>,
) -> Result<SecularFrequencies<T>> {
    Ok(SecularFrequencies {
        axial: axial_frequency(geom, v, ion),
        radial: radial_frequency(geom, v, ion)?,
    })
}
