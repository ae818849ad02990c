use proptest::prelude::*;
use sff_core::ambient::space_form;
use sff_core::curves::*;
use sff_core::iigeom::ii_geometry;
use sff_core::jet::{Jet, Real};
use sff_core::GeomError;
use std::f64::consts::PI;
use std::sync::Arc;

fn plane() -> sff_core::ambient::MetricChart {
    space_form(2, 0.0, 0).unwrap()
}

fn s2() -> sff_core::ambient::MetricChart {
    space_form(2, 1.0, 0).unwrap()
}

#[test]
fn circles_and_latitudes() {
    for r in [0.5, 1.0, 3.0] {
        let c = FrenetCurve::circle(plane(), r).unwrap();
        for s in [0.0, 0.7, 2.0] {
            let p = frenet(&c, s).unwrap();
            assert!((p.kappa - 1.0 / r).abs() < 1e-12);
            assert!(p.serret_t < 1e-8 && p.serret_u < 1e-8);
            assert!((h_ii_curve(&c, s).unwrap() - 0.5 / r).abs() < 1e-12);
        }
        let l = length_ii(&c, 0.0, 2.0 * PI * r).unwrap();
        assert!((l - 2.0 * PI * r.sqrt()).abs() < 1e-10, "{l}");
    }
    for th in [PI / 4.0, 0.3, 1.2] {
        let c = FrenetCurve::latitude(s2(), th).unwrap();
        let p = frenet(&c, 0.4).unwrap();
        assert!((p.kappa - 1.0 / th.tan()).abs() < 1e-10, "{p:?}");
        assert!((p.k_bar - 1.0).abs() < 1e-12);
        assert!(p.serret_t < 1e-8 && p.serret_u < 1e-8);
    }
    let c = FrenetCurve::latitude(s2(), PI / 4.0).unwrap();
    assert!(h_ii_curve(&c, 1.0).unwrap().abs() < 1e-12);
}

#[test]
fn non_frenet_and_bad_speed() {
    let l = FrenetCurve::line(plane(), [0.1, 0.2], [1.0, 2.0]).unwrap();
    assert!(matches!(frenet(&l, 0.3), Err(GeomError::NotFrenet(_))));
    let fast = FrenetCurve::new(
        plane(),
        Arc::new(|s: &Jet| vec![(s.clone() * 2.0).cos(), (s.clone() * 2.0).sin()]),
        "fast",
    )
    .unwrap();
    assert!(matches!(
        frenet(&fast, 0.0),
        Err(GeomError::NotUnitSpeed(_))
    ));
    assert_eq!(length_ii(&l, 1.0, 1.0).unwrap(), 0.0);
}

#[test]
fn catenary_is_ii_minimal() {
    let c = FrenetCurve::catenary(plane(), 1.0, 0.0).unwrap();
    let p = frenet(&c, 0.0).unwrap();
    assert!(
        (p.kappa - 1.0).abs() < 1e-12 && (p.kappa_2 + 2.0).abs() < 1e-10,
        "{p:?}"
    );
    for (a, q) in [(1.0, 0.0), (2.0, 0.3), (0.5, -1.0)] {
        let c = FrenetCurve::catenary(plane(), a, q).unwrap();
        for s in [0.0, 0.5, 2.0] {
            let p = frenet(&c, s).unwrap();
            assert!((p.kappa - catenary_kappa(a, q, s)).abs() < 1e-12);
            assert!(h_ii_curve(&c, s).unwrap().abs() < 1e-9);
            assert!(ode_residual(p.kappa, p.kappa_1, p.kappa_2, CurveAmbient::Planar).abs() < 1e-9);
        }
    }
}

#[test]
fn ode_residuals() {
    for s in [0.0, 0.5, 2.0] {
        let k = catenary_kappa(1.0, 0.0, s);
        let d = 1.0 + s * s;
        let k1 = -2.0 * s / (d * d);
        let k2 = (6.0 * s * s - 2.0) / (d * d * d);
        assert!(ode_residual(k, k1, k2, CurveAmbient::Planar).abs() < 1e-12);
    }
    assert_eq!(ode_residual(1.0, 0.0, 0.0, CurveAmbient::UnitSphere), 0.0);
    assert_eq!(ode_residual(1.0, 0.0, 0.0, CurveAmbient::Planar), 4.0);
}

#[test]
fn integrated_solutions() {
    let sol = integrate_ii_minimal(CurveAmbient::Planar, 1.0, 0.0, 3.0).unwrap();
    let dev = sol
        .s
        .iter()
        .zip(&sol.kappa)
        .map(|(s, k)| (k - 1.0 / (1.0 + s * s)).abs())
        .fold(0.0, f64::max);
    assert!(dev < 1e-8, "{dev}");
    assert!(sol.halving_gap < 1e-8);
    let sol = integrate_ii_minimal(CurveAmbient::Planar, 2.0, 0.0, 3.0).unwrap();
    let dev = sol
        .s
        .iter()
        .zip(&sol.kappa)
        .map(|(s, k)| (k - 2.0 / (4.0 * s * s + 1.0)).abs())
        .fold(0.0, f64::max);
    assert!(dev < 1e-8, "{dev}");
    let sol = integrate_ii_minimal(CurveAmbient::UnitSphere, 1.0, 0.0, 5.0).unwrap();
    assert!(sol.kappa.iter().all(|k| (k - 1.0).abs() < 1e-12));
    // third difference of φ = 1/κ vanishes
    let sol = integrate_ii_minimal(CurveAmbient::Planar, 1.3, 0.4, 2.0).unwrap();
    let h = sol.s[1] - sol.s[0];
    let phi: Vec<f64> = sol.kappa.iter().step_by(64).map(|k| 1.0 / k).collect();
    let h3 = (64.0 * h).powi(3);
    let worst = phi
        .windows(4)
        .map(|w| ((w[3] - 3.0 * w[2] + 3.0 * w[1] - w[0]) / h3).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn blow_up_and_bad_input() {
    let r = integrate_ii_minimal(CurveAmbient::Planar, 1.0, 0.0, 3e4);
    assert!(matches!(r, Err(GeomError::BlowUp(_))), "{r:?}");
    assert!(matches!(
        integrate_ii_minimal(CurveAmbient::Planar, -1.0, 0.0, 1.0),
        Err(GeomError::BadParameters(_))
    ));
}

#[test]
fn length_ii_decreases_for_flat_arcs() {
    let d = 1.0;
    let mut last = f64::INFINITY;
    for r in [1.0, 10.0, 100.0] {
        let c = FrenetCurve::circle(plane(), r).unwrap();
        let len = 2.0 * r * (d / (2.0 * r)).asin();
        let l = length_ii(&c, 0.0, len).unwrap();
        assert!((l - len / r.sqrt()).abs() < 1e-12);
        assert!(l < last);
        last = l;
    }
}

#[test]
fn lorentzian_hyperbola_carries_signs() {
    let mink = space_form(2, 0.0, 1).unwrap();
    let c = FrenetCurve::new(
        mink,
        Arc::new(|s: &Jet| vec![s.clone().sinh(), s.clone().cosh()]),
        "hyperbola",
    )
    .unwrap();
    let p = frenet(&c, 0.3).unwrap();
    assert_eq!((p.alpha, p.beta), (1.0, -1.0));
    assert!((p.kappa + 1.0).abs() < 1e-12);
    assert!(p.serret_t < 1e-8 && p.serret_u < 1e-8);
    assert!((h_ii_curve(&c, 0.3).unwrap() + 0.5).abs() < 1e-12);
}

#[test]
fn closed_formula_matches_general_pipeline() {
    let cases = vec![
        FrenetCurve::circle(plane(), 1.7).unwrap(),
        FrenetCurve::catenary(plane(), 1.4, 0.2).unwrap(),
        FrenetCurve::latitude(s2(), 0.9).unwrap(),
        FrenetCurve::latitude(s2(), 2.0).unwrap(),
    ];
    for c in cases {
        let imm = CurveImmersion {
            curve: c.clone(),
            range: (-10.0, 10.0),
        };
        for s in [0.0, 0.8] {
            let closed = h_ii_curve(&c, s).unwrap();
            let p = ii_geometry(&imm, &[s]).unwrap();
            assert!(
                (p.h_ii.variational - closed).abs() < 1e-6,
                "{}: {} vs {closed}",
                c.label,
                p.h_ii.variational
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn shift_maps_solutions(a in 0.3f64..3.0, q in -2.0f64..2.0, s in -1.0f64..1.0) {
        prop_assert_eq!(catenary_kappa(a, q, s), catenary_kappa(a, 0.0, s + q));
        let (fa, fq) = catenary_fit(catenary_kappa(a, q, 0.0), {
            let d = a * a * q * q + 1.0;
            -2.0 * a.powi(3) * q / (d * d)
        });
        prop_assert!((fa - a).abs() < 1e-10 * a && (fq - q).abs() < 1e-10);
    }
}
