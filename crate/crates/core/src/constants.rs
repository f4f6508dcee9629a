//! Physical constants (CODATA 2018 exact/recommended values, SI units).
//!
//! Stored as `f64`; generic code lifts them with [`Real::lit`](crate::Real::lit).

/// Vacuum permittivity, F/m.
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Unified atomic mass unit, kg.
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Coulomb constant 1/(4 pi eps0), N m^2 / C^2.
pub fn coulomb_constant() -> f64 {
    1.0 / (4.0 * std::f64::consts::PI * EPSILON_0)
}
