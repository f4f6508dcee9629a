use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Simulation, SimConfig, SimState, MAX_RELAX_IONS};
use crate::constants::BOLTZMANN;
use crate::crystal;
use crate::error::{Error, Result};
use crate::num::Real;
use crate::trap;

/// Consecutive rf periods below threshold required to accept a crystal.
const SETTLE_PERIODS: usize = 50;
/// Initial cloud size relative to the predicted crystal.
const CLOUD_SCALE: f64 = 1.5;

/// Outcome of [`relax_to_crystal`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relaxed<T> {
    pub state: SimState<T>,
    /// Positions averaged over the final rf period (micromotion removed).
    pub secular_positions: Vec<[T; 3]>,
    /// Secular kinetic temperature over the final rf period, K.
    pub secular_temperature: T,
    /// Simulated time spent relaxing, s.
    pub elapsed: T,
}

/// Random ions at rest inside an ellipsoid 1.5x the size of the predicted
/// crystal of the first species. Species are assigned in `config.counts` order.
pub fn initial_cloud<T: Real>(config: &SimConfig<T>) -> Result<SimState<T>> {
    config.validate()?;
    let n = config.total_ions();
    let first = &config.species[0];
    let density = trap::crystal_density(&config.geometry, &config.voltages, first);
    let (half_length, radius) = match crystal::spheroid_from_count(&config.geometry, &config.voltages, first, T::lit(n.max(2) as f64)) {
        Ok(c) => (c.half_length, c.radius),
        Err(_) => {
            let r = (T::lit(3.0 * n.max(2) as f64) / (T::lit(4.0) * T::PI() * density)).cbrt();
            (r, r)
        }
    };
    let scale = T::lit(CLOUD_SCALE);
    let semi = [radius * scale, radius * scale, half_length * scale];
    let wigner_seitz = (T::lit(3.0) / (T::lit(4.0) * T::PI() * density)).cbrt();
    let min_sep = T::lit(0.3) * wigner_seitz;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut positions: Vec<[T; 3]> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while positions.len() < n {
        attempts += 1;
        if attempts > 1000 * n.max(1) {
            return Err(Error::InvalidParameter("could not place ions in the initial cloud".into()));
        }
        let u: [f64; 3] = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        if u.iter().map(|c| c * c).sum::<f64>() > 1.0 {
            continue;
        }
        let p = [semi[0] * T::lit(u[0]), semi[1] * T::lit(u[1]), semi[2] * T::lit(u[2])];
        let clear = positions.iter().all(|q| {
            let d2: T = (0..3).map(|k| (p[k] - q[k]) * (p[k] - q[k])).sum();
            d2 > min_sep * min_sep
        });
        if clear {
            positions.push(p);
        }
    }
    let species = config
        .counts
        .iter()
        .enumerate()
        .flat_map(|(s, &c)| std::iter::repeat_n(s, c))
        .collect();
    SimState::new(positions, vec![[T::zero(); 3]; n], species, config.seed)
}

/// Cools a random initial cloud until the secular temperature, measured
/// from rf-period-averaged positions, stays below
/// `config.temperature_threshold` for 50 consecutive rf periods.
pub fn relax_to_crystal<T: Real>(config: &SimConfig<T>) -> Result<Relaxed<T>> {
    let n = config.total_ions();
    if n == 0 || n > MAX_RELAX_IONS {
        return Err(Error::InvalidParameter(format!(
            "relaxation supports 1..={MAX_RELAX_IONS} ions, got {n}"
        )));
    }
    let state = initial_cloud(config)?;
    relax_from(config, state)
}

pub(crate) fn relax_from<T: Real>(config: &SimConfig<T>, state: SimState<T>) -> Result<Relaxed<T>> {
    let mut sim = Simulation::new(config.clone(), state)?;
    let n = sim.state().len();
    let period_steps = config.steps_per_rf_period();
    let period = config.timestep * T::lit(period_steps as f64);
    let masses: Vec<T> = sim.state().species.iter().map(|&s| config.species[s].mass).collect();
    let start = sim.state().time;

    let mut previous: Option<Vec<[T; 3]>> = None;
    let mut settled = 0usize;
    let mut temperature = T::infinity();
    loop {
        let mut mean = vec![[T::zero(); 3]; n];
        for _ in 0..period_steps {
            sim.step()?;
            for (m, p) in mean.iter_mut().zip(&sim.state().positions) {
                for k in 0..3 {
                    m[k] += p[k];
                }
            }
        }
        let inv = T::one() / T::lit(period_steps as f64);
        for m in mean.iter_mut() {
            for c in m.iter_mut() {
                *c *= inv;
            }
        }
        if let Some(prev) = &previous {
            let twice_ke: T = mean
                .iter()
                .zip(prev)
                .zip(&masses)
                .map(|((a, b), &m)| {
                    let v2: T = (0..3).map(|k| (a[k] - b[k]) * (a[k] - b[k])).sum::<T>() / (period * period);
                    m * v2
                })
                .sum();
            temperature = twice_ke / (T::lit(3.0 * BOLTZMANN) * T::lit(n as f64));
            if temperature < config.temperature_threshold {
                settled += 1;
            } else {
                settled = 0;
            }
        }
        let elapsed = sim.state().time - start;
        if settled >= SETTLE_PERIODS {
            return Ok(Relaxed {
                state: sim.into_state(),
                secular_positions: mean,
                secular_temperature: temperature,
                elapsed,
            });
        }
        if elapsed >= config.duration {
            return Err(Error::NotCrystallized {
                elapsed: elapsed.as_f64(),
                temperature: temperature.as_f64(),
                threshold: config.temperature_threshold.as_f64(),
            });
        }
        previous = Some(mean);
    }
}
