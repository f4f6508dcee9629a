use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ForceModel, SimConfig, SimState, COLLISION_DISTANCE};
use crate::constants::{coulomb_constant, BOLTZMANN};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::trap;

/// Per-species coefficients, precomputed once per run.
#[derive(Debug, Clone, Copy)]
struct SpeciesCoefficients<T> {
    mass: T,
    /// Q sqrt(k_C); products give Coulomb force prefactors without
    /// leaving the f32 range.
    scaled_charge: T,
    /// Q U_rf / (M r0^2).
    rf: T,
    /// Q eta U_end / (M z_half^2).
    end: T,
    radial_sq: T,
    axial_sq: T,
    /// exp(-beta dt / 2M).
    damping: T,
    /// Langevin kick standard deviation per half step, m/s.
    kick: T,
}

impl<T: Real> SpeciesCoefficients<T> {
    fn build(config: &SimConfig<T>) -> Vec<Self> {
        let g = &config.geometry;
        let v = &config.voltages;
        let sqrt_kc = T::lit(coulomb_constant().sqrt());
        config
            .species
            .iter()
            .map(|s| {
                let qm = s.charge_to_mass();
                let rate = config.friction / s.mass * config.timestep * T::half();
                let damping = (-rate).exp();
                let kick = match config.recoil_temperature {
                    Some(temp) => ((T::one() - damping * damping) * T::lit(BOLTZMANN) * temp / s.mass).sqrt(),
                    None => T::zero(),
                };
                Self {
                    mass: s.mass,
                    scaled_charge: s.charge * sqrt_kc,
                    rf: qm * v.u_rf / (g.r0 * g.r0),
                    end: qm * g.eta * v.u_end / (g.z_half * g.z_half),
                    radial_sq: trap::radial_frequency_sq(g, v, s),
                    axial_sq: trap::axial_frequency_sq(g, v, s),
                    damping,
                    kick,
                }
            })
            .collect()
    }
}

/// Pairwise Coulomb forces, N. Pairs are visited in a fixed order and each
/// pair contributes equal and opposite terms.
pub(crate) fn coulomb_forces_into<T: Real>(
    positions: &[[T; 3]],
    scaled_charges: &[T],
    time: T,
    out: &mut [[T; 3]],
) -> Result<()> {
    for f in out.iter_mut() {
        *f = [T::zero(); 3];
    }
    let min_sq = T::lit(COLLISION_DISTANCE * COLLISION_DISTANCE);
    for i in 0..positions.len() {
        let pi = positions[i];
        let qi = scaled_charges[i];
        let mut acc = [T::zero(); 3];
        for j in (i + 1)..positions.len() {
            let pj = positions[j];
            let d = [pi[0] - pj[0], pi[1] - pj[1], pi[2] - pj[2]];
            let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
            if !(r2 >= min_sq) {
                return Err(Error::Collision {
                    first: i,
                    second: j,
                    separation: r2.sqrt().as_f64(),
                    time: time.as_f64(),
                });
            }
            let r = r2.sqrt();
            let s = qi * scaled_charges[j] / (r2 * r);
            for k in 0..3 {
                let f = s * d[k];
                acc[k] += f;
                out[j][k] -= f;
            }
        }
        for k in 0..3 {
            out[i][k] += acc[k];
        }
    }
    Ok(())
}

/// Coulomb forces on each ion for the given configuration's species.
pub fn coulomb_forces<T: Real>(state: &SimState<T>, config: &SimConfig<T>) -> Result<Vec<[T; 3]>> {
    let sqrt_kc = T::lit(coulomb_constant().sqrt());
    let charges: Vec<T> = state
        .species
        .iter()
        .map(|&s| config.species[s].charge * sqrt_kc)
        .collect();
    let mut out = vec![[T::zero(); 3]; state.len()];
    coulomb_forces_into(&state.positions, &charges, state.time, &mut out)?;
    Ok(out)
}

/// Stateful integrator: owns the state, cached accelerations and scratch
/// buffers.
#[derive(Debug, Clone)]
pub struct Simulation<T> {
    config: SimConfig<T>,
    state: SimState<T>,
    coefficients: Vec<SpeciesCoefficients<T>>,
    scaled_charges: Vec<T>,
    accel: Vec<[T; 3]>,
    forces: Vec<[T; 3]>,
    cooled: [bool; 3],
}

impl<T: Real> Simulation<T> {
    pub fn new(config: SimConfig<T>, state: SimState<T>) -> Result<Self> {
        config.validate()?;
        state.validate(config.species.len())?;
        let coefficients = SpeciesCoefficients::build(&config);
        let scaled_charges = state.species.iter().map(|&s| coefficients[s].scaled_charge).collect();
        let n = state.len();
        let cooled = config.cooling_axes.mask();
        let mut sim = Self {
            config,
            state,
            coefficients,
            scaled_charges,
            accel: vec![[T::zero(); 3]; n],
            forces: vec![[T::zero(); 3]; n],
            cooled,
        };
        sim.update_accelerations()?;
        Ok(sim)
    }

    pub fn state(&self) -> &SimState<T> {
        &self.state
    }

    pub fn config(&self) -> &SimConfig<T> {
        &self.config
    }

    pub fn into_state(self) -> SimState<T> {
        self.state
    }

    fn update_accelerations(&mut self) -> Result<()> {
        coulomb_forces_into(&self.state.positions, &self.scaled_charges, self.state.time, &mut self.forces)?;
        let phase = self.config.geometry.omega_rf * self.state.time + self.config.rf_phase;
        let cos = phase.cos();
        let model = self.config.force_model;
        for (i, a) in self.accel.iter_mut().enumerate() {
            let c = &self.coefficients[self.state.species[i]];
            let [x, y, z] = self.state.positions[i];
            let trap = match model {
                ForceModel::FullRf => {
                    let rf = c.rf * cos;
                    [-(rf - c.end) * x, (rf + c.end) * y, -T::two() * c.end * z]
                }
                ForceModel::Pseudopotential => [-c.radial_sq * x, -c.radial_sq * y, -c.axial_sq * z],
                ForceModel::CoulombOnly => [T::zero(); 3],
            };
            let f = self.forces[i];
            for k in 0..3 {
                a[k] = trap[k] + f[k] / c.mass;
            }
        }
        Ok(())
    }

    fn apply_friction(&mut self, rng: &mut Option<ChaCha8Rng>) {
        if self.config.friction <= T::zero() {
            return;
        }
        for (i, v) in self.state.velocities.iter_mut().enumerate() {
            let c = &self.coefficients[self.state.species[i]];
            for (vk, _) in v.iter_mut().zip(self.cooled).filter(|(_, cooled)| *cooled) {
                *vk *= c.damping;
                if let Some(rng) = rng.as_mut() {
                    let xi: f64 = rng.sample(StandardNormal);
                    *vk += c.kick * T::lit(xi);
                }
            }
        }
    }

    /// Advances one timestep.
    pub fn step(&mut self) -> Result<()> {
        let dt = self.config.timestep;
        let half_dt = T::half() * dt;
        let mut rng = match self.config.recoil_temperature {
            Some(t) if t > T::zero() && self.config.friction > T::zero() => {
                let mut r = ChaCha8Rng::seed_from_u64(self.state.rng_seed);
                r.set_stream(self.state.step_index);
                Some(r)
            }
            _ => None,
        };

        self.apply_friction(&mut rng);
        for ((x, v), a) in self
            .state
            .positions
            .iter_mut()
            .zip(self.state.velocities.iter_mut())
            .zip(&self.accel)
        {
            for k in 0..3 {
                v[k] += half_dt * a[k];
                x[k] += dt * v[k];
            }
        }
        self.state.step_index += 1;
        self.state.time = self.config.timestep * T::lit(self.state.step_index as f64);
        self.update_accelerations()?;
        for (v, a) in self.state.velocities.iter_mut().zip(&self.accel) {
            for k in 0..3 {
                v[k] += half_dt * a[k];
            }
        }
        self.apply_friction(&mut rng);
        Ok(())
    }

    pub fn run(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    pub fn kinetic_energy(&self) -> T {
        self.state
            .velocities
            .iter()
            .zip(&self.state.species)
            .map(|(v, &s)| T::half() * self.coefficients[s].mass * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]))
            .sum()
    }

    /// Trap potential energy of all ions at the current time, J.
    pub fn trap_energy(&self) -> T {
        let phase = self.config.geometry.omega_rf * self.state.time + self.config.rf_phase;
        let cos = phase.cos();
        self.state
            .positions
            .iter()
            .zip(&self.state.species)
            .map(|(p, &s)| {
                let c = &self.coefficients[s];
                let [x, y, z] = *p;
                let per_mass = match self.config.force_model {
                    ForceModel::FullRf => {
                        T::half() * c.rf * cos * (x * x - y * y) + c.end * (z * z - T::half() * (x * x + y * y))
                    }
                    ForceModel::Pseudopotential => {
                        T::half() * (c.radial_sq * (x * x + y * y) + c.axial_sq * z * z)
                    }
                    ForceModel::CoulombOnly => T::zero(),
                };
                c.mass * per_mass
            })
            .sum()
    }

    pub fn coulomb_energy(&self) -> T {
        let p = &self.state.positions;
        let q = &self.scaled_charges;
        let mut e = T::zero();
        for i in 0..p.len() {
            for j in (i + 1)..p.len() {
                let d = [p[i][0] - p[j][0], p[i][1] - p[j][1], p[i][2] - p[j][2]];
                e += q[i] * q[j] / (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            }
        }
        e
    }

    /// Kinetic + trap + Coulomb energy. Conserved only for the
    /// pseudopotential and Coulomb-only models without friction.
    pub fn total_energy(&self) -> T {
        self.kinetic_energy() + self.trap_energy() + self.coulomb_energy()
    }

    pub fn momentum(&self) -> [T; 3] {
        let mut p = [T::zero(); 3];
        for (v, &s) in self.state.velocities.iter().zip(&self.state.species) {
            for k in 0..3 {
                p[k] += self.coefficients[s].mass * v[k];
            }
        }
        p
    }
}

/// Advances `state` by one timestep under `config`.
///
/// Identical to [`Simulation::step`]; the Langevin noise stream is selected
/// by `state.step_index`, so repeated calls reproduce a continuous run.
pub fn step<T: Real>(state: &SimState<T>, config: &SimConfig<T>) -> Result<SimState<T>> {
    let mut sim = Simulation::new(config.clone(), state.clone())?;
    sim.step()?;
    Ok(sim.into_state())
}
