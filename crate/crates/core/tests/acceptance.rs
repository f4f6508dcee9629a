//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints its own PASS/FAIL line; exits non-zero if any fail.

use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use ioncavity::analysis::{fit, fit_linear, fit_pzt_calibration, synthetic_line};
use ioncavity::cavity::{
    self, cavity_decay_rate, finesse_from_linewidth, finesse_from_losses, free_spectral_range, ions_in_mode,
    length_from_fsr, waist_from_geometry, CavitySpec,
};
use ioncavity::crystal::{self, CrystalShape, CrystalSpec};
use ioncavity::md::observables::{ellipsoid_fit, species_boundary_radius, spectrum};
use ioncavity::md::{
    initial_cloud, relax_to_crystal, CoolingAxes, ForceModel, SimConfig, SimState, Simulation, Window,
};
use ioncavity::optimizer::{sweep, GridSpec, StabilityConstraint, SweepInputs};
use ioncavity::trap::{self, DriveVoltages, IonSpecies, TrapGeometry};

// Reference constants, kept separate from the library's own table.
const E: f64 = 1.602_176_634e-19;
const EPS0: f64 = 8.854_187_812_8e-12;
const AMU: f64 = 1.660_539_066_60e-27;
const M40: f64 = 39.962_590_86 * AMU;
const MHZ: f64 = 1e6;
const KHZ: f64 = 1e3;

struct Check {
    name: String,
    ok: bool,
    detail: String,
}

#[derive(Default)]
struct Criterion {
    checks: Vec<Check>,
}

impl Criterion {
    fn check(&mut self, name: &str, ok: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            ok,
            detail: detail.into(),
        });
    }

    fn within(&mut self, name: &str, got: f64, want: f64, rel: f64) {
        let err = (got - want).abs() / want.abs();
        self.check(name, err <= rel, format!("{got:.6e} vs {want:.6e} ({:.3}% , tol {:.3}%)", err * 100.0, rel * 100.0));
    }

    fn within_abs(&mut self, name: &str, got: f64, want: f64, tol: f64) {
        let err = (got - want).abs();
        self.check(name, err <= tol, format!("{got:.6e} vs {want:.6e} (|diff| {err:.3e}, tol {tol:.3e})"));
    }

    fn fail(&mut self, name: &str, err: impl std::fmt::Display) {
        self.check(name, false, format!("error: {err}"));
    }
}

fn ca40() -> IonSpecies<f64> {
    IonSpecies::calcium(40).unwrap()
}

fn geom() -> TrapGeometry<f64> {
    TrapGeometry::default()
}

fn v(u_rf: f64, u_end: f64) -> DriveVoltages<f64> {
    DriveVoltages { u_rf, u_end }
}

// Independent closed forms with the default geometry.
fn oracle_axial(u_end: f64) -> f64 {
    (2.0 * 0.342 * E * u_end / (M40 * 2.5e-3f64.powi(2))).sqrt()
}

fn oracle_radial(u_rf: f64, u_end: f64) -> f64 {
    let omega = TAU * 4.0e6;
    let q = 2.0 * E * u_rf / (M40 * 2.35e-3f64.powi(2) * omega * omega);
    (q * q * omega * omega / 8.0 - oracle_axial(u_end).powi(2) / 2.0).sqrt()
}

fn oracle_density(u_rf: f64) -> f64 {
    EPS0 * u_rf * u_rf / (M40 * 2.35e-3f64.powi(4) * (TAU * 4.0e6f64).powi(2))
}

fn trap_frequencies() -> Criterion {
    let mut c = Criterion::default();
    let (g, ion, vv) = (geom(), ca40(), v(130.0, 3.9));
    let wz = trap::axial_frequency(&g, &vv, &ion);
    let wr = trap::radial_frequency(&g, &vv, &ion).unwrap();
    c.within("omega_z vs 2pi x 160 kHz", wz / TAU, 160.0 * KHZ, 0.03);
    c.within("omega_r vs 2pi x 225 kHz", wr / TAU, 225.0 * KHZ, 0.03);
    c.within("omega_z vs closed form", wz, oracle_axial(3.9), 1e-9);
    c.within("omega_r vs closed form", wr, oracle_radial(130.0, 3.9), 1e-9);
    c
}

fn density_law() -> Criterion {
    let mut c = Criterion::default();
    let (g, ion) = (geom(), ca40());
    for (u, want_cm3) in [(100.0, 6.8e7), (400.0, 1.1e9), (300.0, 6.1e8)] {
        let rho = trap::crystal_density(&g, &v(u, 1.0), &ion);
        c.within(&format!("rho({u} V) vs {want_cm3:e} cm^-3"), rho * 1e-6, want_cm3, 0.05);
        c.within(&format!("rho({u} V) vs closed form"), rho, oracle_density(u), 1e-9);
    }
    c
}

fn cavity_chain() -> Criterion {
    let mut c = Criterion::default();
    let cav = CavitySpec::<f64>::default();
    let fsr_measured = 12.7e9;
    let linewidth = 4.0e6;
    c.within("L from FSR 12.7 GHz", length_from_fsr(fsr_measured), 11.8e-3, 0.01);
    c.within("FSR from L 11.8 mm", free_spectral_range(&cav), fsr_measured, 0.01);
    let f_lw = finesse_from_linewidth(fsr_measured, linewidth);
    c.within("finesse from linewidth = 3175", f_lw, 3175.0, 1e-9);
    c.within_abs("finesse from linewidth in 3200 +- 300", f_lw, 3200.0, 300.0);
    let f_loss = finesse_from_losses(&cav);
    c.within_abs("finesse from losses = 3387", f_loss, TAU / (1500e-6 + 5e-6 + 350e-6), 1e-6);
    c.within_abs("finesse from losses in 3200 +- 300", f_loss, 3200.0, 300.0);
    c.within_abs("kappa = 2pi x 2.0 MHz", cavity_decay_rate(linewidth) / TAU / MHZ, 2.0, 0.1);
    match waist_from_geometry(&cav) {
        Ok(mode) => {
            c.within_abs("w0 = 37 um", mode.waist * 1e6, 37.0, 1.0);
            let oracle = ((866e-9 / TAU) * (11.8e-3 * (2.0 * 10e-3 - 11.8e-3f64)).sqrt()).sqrt();
            c.within("w0 vs Gaussian-beam closed form", mode.waist, oracle, 1e-9);
        }
        Err(e) => c.fail("w0", e),
    }
    c
}

fn coupling_arithmetic() -> Criterion {
    let mut c = Criterion::default();
    let ion = ca40();
    let cav = CavitySpec::<f64>::default();
    let mode = waist_from_geometry(&cav).unwrap();
    let kappa = cavity_decay_rate(4.0e6);
    match cavity::strong_coupling_threshold(&ion, &mode, kappa) {
        Ok(n) => {
            let g0 = cavity::single_ion_coupling(&ion, &mode);
            let ratio = (TAU * 11.0e6f64).max(kappa) / g0;
            let oracle = (ratio * ratio).floor() as u64 + 1;
            c.check("N_min = 431", n == 431, format!("{n} (paper rounds to ~500)"));
            c.check("N_min in [400, 500]", (400..=500).contains(&n), format!("{n}"));
            c.check("N_min vs (max(gamma, kappa) / g0)^2", n == oracle, format!("{n} vs {oracle}"));
            c.within("g0 = 2pi x 0.53 MHz", g0 / TAU / MHZ, 0.53, 0.005);
            c.within("g0 sqrt(2000) vs 2pi x 24 MHz", g0 * 2000f64.sqrt() / TAU / MHZ, 24.0, 0.02);
            c.within("g0 sqrt(2000) = 2pi x 23.7 MHz", g0 * 2000f64.sqrt() / TAU / MHZ, 23.7, 0.005);
        }
        Err(e) => c.fail("threshold", e),
    }
    c
}

fn cylinder(radius: f64, half_length: f64, density: f64) -> CrystalSpec<f64> {
    CrystalSpec {
        ion_count: density * PI * radius * radius * 2.0 * half_length,
        density,
        half_length,
        radius,
        species: ca40(),
        shape: CrystalShape::Cylinder,
    }
}

fn ions_in_mode_check() -> Criterion {
    let mut c = Criterion::default();
    let start = Instant::now();
    let mode = waist_from_geometry(&CavitySpec::<f64>::default()).unwrap();
    let w0 = mode.waist;
    for (radius_w0, half_length, rho) in [(4.2, 0.5e-3, 6.2e14), (6.0, 1.5e-3, 6.2e14), (10.0, 2.0e-3, 1.1e15), (4.5, 0.25e-3, 1e14)] {
        let crystal = cylinder(radius_w0 * w0 * (1.0 + (half_length / mode.rayleigh_range).powi(2)).sqrt(), half_length, rho);
        let r = ions_in_mode(&crystal, &mode);
        c.check(
            &format!("R = {radius_w0} w(a), l = {:.1} mm marked closed-form valid", 2e3 * half_length),
            r.closed_form_valid,
            format!("{}", r.closed_form_valid),
        );
        c.within(
            &format!("R = {radius_w0} w(a), l = {:.1} mm: quadrature vs closed form", 2e3 * half_length),
            r.quadrature,
            r.closed_form,
            0.01,
        );
    }
    let (g, ion) = (geom(), ca40());
    let rho = trap::crystal_density(&g, &v(300.0, 1.7), &ion);
    match CrystalSpec::from_measured(ion, rho, 88000.0, 3.0e-3) {
        Ok(fig4) => {
            let r = ions_in_mode(&fig4, &mode);
            c.within("3 mm / 88000-ion crystal: closed-form N ~ 2000", r.closed_form, 2000.0, 0.05);
            c.within("3 mm / 88000-ion crystal: quadrature N ~ 2000", r.quadrature, 2000.0, 0.05);
            c.within("closed form vs rho pi w0^2 l / 4", r.closed_form, rho * PI * w0 * w0 * 3.0e-3 / 4.0, 1e-9);
        }
        Err(e) => c.fail("3 mm crystal", e),
    }
    let elapsed = start.elapsed();
    c.check("runtime < 1 s", elapsed < Duration::from_secs(1), format!("{elapsed:?}"));
    c
}

fn crystal_geometry() -> Criterion {
    let mut c = Criterion::default();
    let (g, ion) = (geom(), ca40());
    match crystal::spheroid_from_count(&g, &v(300.0, 1.7), &ion, 88000.0) {
        Ok(s) => {
            c.within("total length vs 3 mm", s.total_length(), 3.0e-3, 0.15);
            let identity = (s.density * s.volume() / s.ion_count - 1.0).abs();
            c.check("N = rho V to 1e-6", identity < 1e-6, format!("{identity:.3e}"));
            let wz2 = oracle_axial(1.7).powi(2);
            let wr2 = oracle_radial(300.0, 1.7).powi(2);
            let alpha = s.aspect_ratio();
            let e = (1.0 - 1.0 / (alpha * alpha)).sqrt();
            let lz = (1.0 - e * e) / e.powi(3) * (e.atanh() - e);
            c.within("aspect ratio satisfies force balance", wz2 / wr2, 2.0 * lz / (1.0 - lz), 1e-6);
        }
        Err(e) => c.fail("spheroid", e),
    }
    c
}

/// U_end giving the requested axial frequency for 40Ca+.
fn u_end_for(omega_z: f64) -> f64 {
    omega_z * omega_z * M40 * 2.5e-3f64.powi(2) / (2.0 * 0.342 * E)
}

fn cold_config(u_rf: f64, u_end: f64, count: usize) -> SimConfig<f64> {
    let mut cfg = SimConfig::new(geom(), v(u_rf, u_end), ca40(), count);
    cfg.cooling_axes = CoolingAxes::All;
    cfg.temperature_threshold = 1e-5;
    cfg.seed = 11;
    cfg
}

fn radius(p: &[f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

fn md_suite() -> Criterion {
    let mut c = Criterion::default();
    let start = Instant::now();

    // (a) two-ion spacing
    let wz = TAU * 160.0 * KHZ;
    match relax_to_crystal(&cold_config(130.0, u_end_for(wz), 2)) {
        Ok(r) => {
            let [p, q] = [r.secular_positions[0], r.secular_positions[1]];
            let d = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
            let oracle = (E * E / (2.0 * PI * EPS0 * M40 * wz * wz)).cbrt();
            c.within("(a) two-ion spacing = 19.0 um", d, oracle, 0.02);
            c.check(
                "(a) pair aligned with the trap axis",
                (p[2] - q[2]).abs() > 0.999 * d,
                format!("axial component {:.4e} of {d:.4e}", (p[2] - q[2]).abs()),
            );
        }
        Err(e) => c.fail("(a) two-ion relaxation", e),
    }

    // (b) single-ion spectra, no friction
    let (g, ion, vv) = (geom(), ca40(), v(130.0, 3.9));
    let fz = trap::axial_frequency(&g, &vv, &ion) / TAU;
    let fr = trap::radial_frequency(&g, &vv, &ion).unwrap() / TAU;
    let f_rf = g.omega_rf / TAU;
    let single = |start: [f64; 3], axis: usize| -> ioncavity::Result<ioncavity::md::Spectrum> {
        let mut cfg = SimConfig::new(g, vv, ion.clone(), 1);
        cfg.friction = 0.0;
        let mut sim = Simulation::new(cfg, SimState::at_rest(vec![start], 0))?;
        let every = 20;
        let samples = 1 << 15;
        let mut series = Vec::with_capacity(samples);
        for _ in 0..samples {
            sim.run(every)?;
            series.push(sim.state().positions[0][axis]);
        }
        spectrum(&series, 2.5e-9 * every as f64, Window::Hann)
    };
    match single([0.0, 0.0, 5e-6], 2) {
        Ok(s) => match s.dominant_peak() {
            Some(p) => c.within("(b) axial peak vs omega_z", p, fz, 0.02),
            None => c.fail("(b) axial peak", "no peak"),
        },
        Err(e) => c.fail("(b) axial run", e),
    }
    match single([5e-6, 0.0, 0.0], 0) {
        Ok(s) => {
            match s.dominant_peak() {
                Some(p) => c.within("(b) radial peak vs omega_r", p, fr, 0.02),
                None => c.fail("(b) radial peak", "no peak"),
            }
            let mut sorted = s.power.clone();
            sorted.sort_by(f64::total_cmp);
            let median = sorted[sorted.len() / 2];
            for (label, f) in [("Omega - omega_r", f_rf - fr), ("Omega + omega_r", f_rf + fr)] {
                match s.peak_near(f, 0.02) {
                    Some(p) => {
                        let k = (p / s.resolution()).round() as usize;
                        let strength = s.power[k.saturating_sub(1)..=k + 1].iter().copied().fold(0.0, f64::max) / median;
                        c.within(&format!("(b) sideband at {label}"), p, f, 0.02);
                        c.check(
                            &format!("(b) sideband at {label} is a resolved line"),
                            strength > 1e4,
                            format!("peak / median power = {strength:.2e}"),
                        );
                    }
                    None => c.fail(&format!("(b) sideband {label}"), "no peak in window"),
                }
            }
        }
        Err(e) => c.fail("(b) radial run", e),
    }

    // (c) 100-ion density
    match relax_to_crystal(&cold_config(130.0, 3.9, 100)) {
        Ok(r) => match ellipsoid_fit(&r.secular_positions) {
            Ok(f) => c.within("(c) 100-ion density vs analytic", f.density, oracle_density(130.0), 0.10),
            Err(e) => c.fail("(c) fit", e),
        },
        Err(e) => c.fail("(c) 100-ion relaxation", e),
    }

    // (d) 40/44 mixture
    let mut mixed = cold_config(130.0, 3.9, 50);
    mixed.species.push(IonSpecies::calcium(44).unwrap());
    mixed.counts = vec![50, 50];
    match relax_to_crystal(&mixed) {
        Ok(r) => {
            let radii = |s: usize| -> Vec<f64> {
                r.secular_positions
                    .iter()
                    .zip(&r.state.species)
                    .filter(|x| *x.1 == s)
                    .map(|(p, _)| radius(p))
                    .collect()
            };
            let (r40, r44) = (radii(0), radii(1));
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            let max40 = r40.iter().copied().fold(0.0, f64::max);
            let min44 = r44.iter().copied().fold(f64::INFINITY, f64::min);
            c.check(
                "(d) mean radius 40 < 44",
                mean(&r40) < mean(&r44),
                format!("{:.3e} vs {:.3e} m", mean(&r40), mean(&r44)),
            );
            c.check(
                "(d) every 40Ca+ inside every 44Ca+",
                max40 < min44,
                format!("max r40 {max40:.3e} m, min r44 {min44:.3e} m"),
            );
            let model = crystal::two_component_structure(&g, &mixed.voltages, &ion, &mixed.species[1], 50.0, 50.0);
            match (species_boundary_radius(&r.secular_positions, &r.state.species, 0), model) {
                (Some(b), Ok(m)) => c.within("(d) boundary vs two-component model", b, m.boundary_radius, 0.20),
                (_, Err(e)) => c.fail("(d) model", e),
                (None, _) => c.fail("(d) boundary", "not found"),
            }
        }
        Err(e) => c.fail("(d) mixed relaxation", e),
    }

    // (e) energy drift in the pseudopotential without friction
    let mut cfg = SimConfig::new(g, vv, ion.clone(), 10);
    cfg.force_model = ForceModel::Pseudopotential;
    cfg.friction = 0.0;
    cfg.seed = 3;
    match initial_cloud(&cfg).and_then(|s| Simulation::new(cfg.clone(), s)) {
        Ok(mut sim) => {
            let window = 5000;
            let steps = 100_000;
            let mut first = 0.0;
            let mut last = 0.0;
            let mut ok = true;
            for i in 0..steps {
                if let Err(e) = sim.step() {
                    c.fail("(e) run", e);
                    ok = false;
                    break;
                }
                let e = sim.total_energy();
                if i < window {
                    first += e / window as f64;
                } else if i >= steps - window {
                    last += e / window as f64;
                }
            }
            if ok {
                let drift = ((last - first) / first).abs();
                c.check("(e) relative drift per 1e5 steps < 1e-6", drift < 1e-6, format!("{drift:.3e}"));
            }
        }
        Err(e) => c.fail("(e) setup", e),
    }

    // (f) determinism with recoil noise
    let mut noisy = cold_config(130.0, 3.9, 20);
    noisy.recoil_temperature = Some(5e-4);
    noisy.duration = 5e-5;
    let run = || -> ioncavity::Result<SimState<f64>> {
        let mut sim = Simulation::new(noisy.clone(), initial_cloud(&noisy)?)?;
        sim.run(5000)?;
        Ok(sim.into_state())
    };
    match (run(), run()) {
        (Ok(a), Ok(b)) => {
            let bits = |s: &SimState<f64>| -> Vec<u64> {
                s.positions.iter().chain(&s.velocities).flatten().map(|x| x.to_bits()).collect()
            };
            c.check("(f) identical seeds give bit-identical states", bits(&a) == bits(&b), "5000 noisy steps, 20 ions");
            let mut other = noisy.clone();
            other.seed = 12;
            let differs = Simulation::new(other.clone(), initial_cloud(&other).unwrap())
                .and_then(|mut s| s.run(5000).map(|_| s.into_state()))
                .map(|s| bits(&s) != bits(&a))
                .unwrap_or(false);
            c.check("(f) a different seed gives a different state", differs, "");
        }
        (Err(e), _) | (_, Err(e)) => c.fail("(f) run", e),
    }

    let elapsed = start.elapsed();
    c.check("suite runtime < 10 min", elapsed < Duration::from_secs(600), format!("{elapsed:?}"));
    c
}

fn optimizer_check() -> Criterion {
    let mut c = Criterion::default();
    let start = Instant::now();
    let grid = GridSpec::<f64>::default();
    let inputs = SweepInputs::<f64>::default();
    match sweep(&grid, &inputs) {
        Ok(r) => {
            let best = r.best();
            c.check("argmax at U_rf = 350 V", best.u_rf == 350.0, format!("{} V, U_end {} V", best.u_rf, best.u_end));
            c.check("N in mode >= 2000 at argmax", best.n_in_mode >= 2000.0, format!("{:.1}", best.n_in_mode));
            let mode = waist_from_geometry(&inputs.cavity).unwrap();
            let bound = oracle_density(350.0) * PI * mode.waist.powi(2) * 2.4e-3 / 4.0;
            c.within("argmax N = rho(350 V) pi w0^2 l_max / 4", best.n_in_mode, bound, 1e-6);
            c.check("threshold line at 431", r.strong_coupling_threshold == 431, format!("{}", r.strong_coupling_threshold));
        }
        Err(e) => c.fail("constrained sweep", e),
    }
    let unconstrained = SweepInputs {
        constraint: StabilityConstraint::Unlimited,
        ..SweepInputs::default()
    };
    match sweep(&grid, &unconstrained) {
        Ok(r) => {
            let profile: Vec<f64> = r.profile.iter().map(|p| p.n_in_mode).collect();
            let monotone = profile.windows(2).all(|w| w[1] >= w[0]);
            c.check(
                "unconstrained N in mode monotone in U_rf",
                monotone,
                format!("{:.0} .. {:.0}", profile[0], profile[profile.len() - 1]),
            );
            c.check(
                "unconstrained argmax at the top of the grid",
                r.best().u_rf == *grid.u_rf.last().unwrap(),
                format!("{} V", r.best().u_rf),
            );
        }
        Err(e) => c.fail("unconstrained sweep", e),
    }
    let elapsed = start.elapsed();
    c.check("runtime < 1 s", elapsed < Duration::from_secs(1), format!("{elapsed:?}"));
    c
}

fn fits() -> Criterion {
    let mut c = Criterion::default();
    let t: Vec<f64> = (0..=30).map(f64::from).collect();
    let exact = fit_linear(&synthetic_line(&t, 3200.0, 0.0, 0.0, 0).unwrap()).unwrap();
    c.check("noiseless loading line: slope 3200 exactly", exact.slope == 3200.0, format!("{}", exact.slope));
    c.check("noiseless loading line: intercept 0 exactly", exact.intercept == 0.0, format!("{}", exact.intercept));
    let volts: Vec<f64> = (0..=10).map(|i| 2.5 * i as f64).collect();
    let exact_pzt = fit_pzt_calibration(&synthetic_line(&volts, 82.0 * MHZ, -150.0 * MHZ, 0.0, 0).unwrap(), false).unwrap();
    c.within("noiseless PZT line: 82 MHz/V", exact_pzt.slope, 82.0 * MHZ, 1e-12);
    let zero = fit_linear(&synthetic_line(&t, 0.0, 5.0, 0.0, 0).unwrap()).unwrap();
    c.check("noiseless flat line: slope 0", zero.slope == 0.0, format!("{}", zero.slope));

    let noisy = fit_linear(&synthetic_line(&t, 3200.0, 0.0, 500.0, 2024).unwrap()).unwrap();
    c.check(
        "noisy loading series: |slope - 3200| < 3 sigma_fit",
        (noisy.slope - 3200.0).abs() < 3.0 * noisy.slope_error,
        format!("{:.1} +- {:.1} ions/s", noisy.slope, noisy.slope_error),
    );
    let noisy_w = fit(&synthetic_line(&t, 3200.0, 0.0, 500.0, 2024).unwrap(), true).unwrap();
    c.check(
        "noisy loading series (weighted): |slope - 3200| < 3 sigma_fit",
        (noisy_w.slope - 3200.0).abs() < 3.0 * noisy_w.slope_error,
        format!("{:.1} +- {:.1} ions/s", noisy_w.slope, noisy_w.slope_error),
    );
    let pzt = fit_pzt_calibration(&synthetic_line(&volts, 82.0 * MHZ, -150.0 * MHZ, 10.0 * MHZ, 7).unwrap(), true).unwrap();
    c.within_abs("noisy PZT series: 82 +- 2 MHz/V", pzt.slope / MHZ, 82.0, 2.0);
    c
}

type CriterionFn = fn() -> Criterion;

fn main() {
    let criteria: [(&str, CriterionFn); 9] = [
        ("trap frequencies", trap_frequencies),
        ("density law", density_law),
        ("cavity chain", cavity_chain),
        ("coupling arithmetic", coupling_arithmetic),
        ("ions in mode", ions_in_mode_check),
        ("crystal geometry", crystal_geometry),
        ("molecular dynamics", md_suite),
        ("optimizer", optimizer_check),
        ("fits", fits),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let result = run();
        let ok = result.checks.iter().all(|c| c.ok);
        if !ok {
            failed += 1;
        }
        println!(
            "[{}] {name}: {} ({:.2?})",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            started.elapsed()
        );
        for check in &result.checks {
            println!("      {} {}: {}", if check.ok { "ok  " } else { "FAIL" }, check.name, check.detail);
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
