use ioncavity::crystal::{count_from_length, spheroid_from_count, two_component_structure};
use ioncavity::trap::{self, DriveVoltages, IonSpecies, QValidity, TrapGeometry};
use proptest::prelude::*;

fn ca(n: u32) -> IonSpecies<f64> {
    IonSpecies::calcium(n).unwrap()
}

#[test]
fn quadrupled_end_voltage_doubles_axial_frequency() {
    let g = TrapGeometry::default();
    let one = trap::axial_frequency(&g, &DriveVoltages { u_rf: 130.0, u_end: 3.9 }, &ca(40));
    let four = trap::axial_frequency(&g, &DriveVoltages { u_rf: 130.0, u_end: 15.6 }, &ca(40));
    assert!((four / one - 2.0).abs() < 1e-12);
}

#[test]
fn zero_end_voltage_gives_no_axial_confinement() {
    let g = TrapGeometry::default();
    assert_eq!(trap::axial_frequency(&g, &DriveVoltages { u_rf: 130.0, u_end: 0.0 }, &ca(40)), 0.0);
}

#[test]
fn weak_rf_is_radially_deconfined() {
    let g = TrapGeometry::default();
    let err = trap::radial_frequency(&g, &DriveVoltages { u_rf: 10.0, u_end: 10.0 }, &ca(40)).unwrap_err();
    assert_eq!(err.kind(), "radially_deconfined");
}

#[test]
fn q_flags_follow_thresholds() {
    let g = TrapGeometry::default();
    let q = |u| trap::mathieu_q(&g, &DriveVoltages { u_rf: u, u_end: 1.0 }, &ca(40));
    assert_eq!(q(130.0).validity, QValidity::Ok);
    assert_eq!(q(400.0).validity, QValidity::Warn);
    assert_eq!(q(700.0).validity, QValidity::Unstable);
    // q = 2 Q U / (M r0^2 Omega^2), independent arithmetic
    let m = 39.962_590_86 * 1.660_539_066_60e-27;
    let omega = std::f64::consts::TAU * 4e6;
    let oracle = 2.0 * 1.602_176_634e-19 * 130.0 / (m * 2.35e-3f64.powi(2) * omega * omega);
    assert!((q(130.0).q / oracle - 1.0).abs() < 1e-9);
}

#[test]
fn single_precision_tracks_double() {
    let g32 = TrapGeometry::<f32>::default();
    let v32 = DriveVoltages::<f32> { u_rf: 300.0, u_end: 1.7 };
    let ion32 = IonSpecies::<f32>::calcium(40).unwrap();
    let c32 = spheroid_from_count(&g32, &v32, &ion32, 88000.0).unwrap();
    let c64 = spheroid_from_count(&TrapGeometry::default(), &DriveVoltages { u_rf: 300.0, u_end: 1.7 }, &ca(40), 88000.0).unwrap();
    assert!((f64::from(c32.total_length()) / c64.total_length() - 1.0).abs() < 1e-4);
    assert!((f64::from(c32.density) / c64.density - 1.0).abs() < 1e-5);
}

proptest! {
    #[test]
    fn density_scales_with_rf_squared(u in 50.0f64..500.0, k in 0.1f64..4.0) {
        let g = TrapGeometry::default();
        let r1 = trap::crystal_density(&g, &DriveVoltages { u_rf: u, u_end: 1.0 }, &ca(40));
        let r2 = trap::crystal_density(&g, &DriveVoltages { u_rf: u * k, u_end: 7.0 }, &ca(40));
        prop_assert!((r2 / r1 / (k * k) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pseudopotential_is_quadratic(x in -50e-6f64..50e-6, z in -50e-6f64..50e-6) {
        let g = TrapGeometry::default();
        let v = DriveVoltages { u_rf: 130.0, u_end: 3.9 };
        let e1 = trap::pseudo_potential(&g, &v, &ca(40), [x, 0.0, z]).unwrap();
        let e2 = trap::pseudo_potential(&g, &v, &ca(40), [2.0 * x, 0.0, 2.0 * z]).unwrap();
        prop_assert!(e1 >= 0.0);
        prop_assert!((e2 - 4.0 * e1).abs() <= 1e-12 * e2.max(1e-40));
    }

    #[test]
    fn count_length_round_trip(u_rf in 150.0f64..400.0, u_end in 0.5f64..5.0, n in 100.0f64..1e6) {
        let g = TrapGeometry::default();
        let v = DriveVoltages { u_rf, u_end };
        if let Ok(c) = spheroid_from_count(&g, &v, &ca(40), n) {
            let back = count_from_length(&g, &v, &ca(40), c.total_length()).unwrap();
            prop_assert!((back / n - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn lighter_isotope_always_inside(n1 in 10.0f64..1e5, n2 in 10.0f64..1e5, heavy in prop::sample::select(vec![42u32, 43, 44, 48])) {
        let g = TrapGeometry::default();
        let v = DriveVoltages { u_rf: 220.0, u_end: 2.0 };
        let s = two_component_structure(&g, &v, &ca(heavy), &ca(40), n2, n1).unwrap();
        prop_assert_eq!(s.inner.species.isotope_label.as_str(), "40Ca+");
        prop_assert!(s.boundary_radius > 0.0);
        let total = s.inner.density * s.inner.volume() + s.outer.density * s.outer.volume();
        prop_assert!((total / (n1 + n2) - 1.0).abs() < 1e-9);
    }
}
