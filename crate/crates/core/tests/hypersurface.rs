use proptest::prelude::*;
use sff_core::ambient::{custom_chart, space_form, MetricChart};
use sff_core::hypersurface::*;
use sff_core::linalg::bilinear;
use sff_core::GeomError;
use std::f64::consts::PI;
use std::sync::Arc;

fn e3() -> MetricChart {
    space_form(3, 0.0, 0).unwrap()
}

fn max_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Invariants every SurfacePointData must satisfy.
fn check_invariants(imm: &dyn Immersion, sp: &SurfacePointData) {
    let chart = imm.ambient();
    let gb = chart.metric_at(&sp.x);
    let m = sp.first.len();
    for t in &sp.tangent {
        assert!(bilinear(&gb, &sp.normal, t).abs() < 1e-10, "U not normal");
    }
    let uu = bilinear(&gb, &sp.normal, &sp.normal);
    assert!((uu - sp.alpha).abs() < 1e-10, "ḡ(U,U) = {uu}");
    for i in 0..m {
        for j in 0..m {
            assert!((sp.second[i][j] - sp.second[j][i]).abs() < 1e-10);
            let ga: f64 = sp.alpha * (0..m).map(|k| sp.first[i][k] * sp.shape[k][j]).sum::<f64>();
            assert!((ga - sp.second[i][j]).abs() < 1e-9, "α g A ≠ II");
            let aga: f64 = (0..m)
                .flat_map(|k| (0..m).map(move |l| (k, l)))
                .map(|(k, l)| sp.shape[k][i] * sp.first[k][l] * sp.shape[l][j])
                .sum();
            assert!((aga - sp.third[i][j]).abs() < 1e-9);
        }
    }
    let tr: f64 = (0..m).map(|i| sp.shape[i][i]).sum();
    assert!((sp.mean_curvature - sp.alpha * tr / m as f64).abs() < 1e-10);
    if sp.diagonalizable {
        let prod: f64 = sp.lambda.iter().product();
        assert!(
            (prod - sp.det_a).abs() < 1e-8,
            "det A {} vs Πλ {}",
            sp.det_a,
            prod
        );
    }
    assert!(
        sp.ii_route_gap < 1e-9,
        "II routes differ by {}",
        sp.ii_route_gap
    );
    assert!(sp.normal_leak < 1e-9, "normal leak {}", sp.normal_leak);
}

fn grid_check(imm: &dyn Immersion, k: usize) {
    for u in sample_grid(imm, k, 0.07) {
        let sp = surface_point(imm, &u).unwrap();
        check_invariants(imm, &sp);
    }
}

#[test]
fn sphere_radius_two_in_e3() {
    let s = standard_immersion(
        &ImmersionSpec::RoundSphere {
            radius: 2.0,
            center: None,
        },
        &e3(),
    )
    .unwrap();
    for u in sample_grid(&s, 5, 0.1) {
        let sp = surface_point(&s, &u).unwrap();
        check_invariants(&s, &sp);
        assert!(max_diff(&sp.shape, &[vec![0.5, 0.0], vec![0.0, 0.5]]) < 1e-12);
        assert!((sp.mean_curvature - 0.5).abs() < 1e-12);
        assert!((sp.det_a - 0.25).abs() < 1e-12);
        let quarter: Vec<Vec<f64>> = sp
            .first
            .iter()
            .map(|r| r.iter().map(|v| v / 4.0).collect())
            .collect();
        assert!(max_diff(&sp.third, &quarter) < 1e-12);
        // inward: U = −x/2
        for a in 0..3 {
            assert!((sp.normal[a] + sp.x[a] / 2.0).abs() < 1e-12);
        }
        let st = u[0].sin();
        assert!(max_diff(&sp.first, &[vec![4.0, 0.0], vec![0.0, 4.0 * st * st]]) < 1e-12);
        assert!(umbilic_defect(&sp) < 1e-12);
        let gc = gauss_codazzi_residual(&s, &u).unwrap();
        assert!(gc.gauss < 1e-8 && gc.codazzi < 1e-8, "{gc:?}");
    }
}

#[test]
fn unit_sphere_has_identity_shape_operator() {
    let s = standard_immersion(
        &ImmersionSpec::RoundSphere {
            radius: 1.0,
            center: Some(vec![0.3, -0.2, 0.1]),
        },
        &e3(),
    )
    .unwrap();
    let sp = surface_point(&s, &[1.0, 2.0]).unwrap();
    assert!(max_diff(&sp.shape, &[vec![1.0, 0.0], vec![0.0, 1.0]]) < 1e-12);
    assert!(sp.lambda.iter().all(|l| (l - 1.0).abs() < 1e-8));
}

#[test]
fn clifford_torus_in_unit_s3() {
    let s3 = space_form(3, 1.0, 0).unwrap();
    let c = standard_immersion(&ImmersionSpec::Clifford, &s3).unwrap();
    for u in sample_grid(&c, 5, 0.05) {
        let sp = surface_point(&c, &u).unwrap();
        check_invariants(&c, &sp);
        assert!(sp.mean_curvature.abs() < 1e-12);
        assert!((sp.det_a + 1.0).abs() < 1e-10);
        assert!((sp.lambda[0] + 1.0).abs() < 1e-9 && (sp.lambda[1] - 1.0).abs() < 1e-9);
        let d = sp.second[0][0] * sp.second[1][1] - sp.second[0][1] * sp.second[1][0];
        assert!(d < 0.0, "II should be indefinite");
        let gc = gauss_codazzi_residual(&c, &u).unwrap();
        assert!(gc.gauss < 1e-7 && gc.codazzi < 1e-7, "{gc:?}");
    }
}

#[test]
fn paraboloid_at_critical_point_and_graph_oracle() {
    let p = standard_immersion(
        &ImmersionSpec::Graph {
            terms: vec![(vec![2, 0], 0.5), (vec![0, 2], 0.5)],
            half_width: None,
        },
        &e3(),
    )
    .unwrap();
    let sp = surface_point(&p, &[0.0, 0.0]).unwrap();
    assert!(max_diff(&sp.shape, &[vec![1.0, 0.0], vec![0.0, 1.0]]) < 1e-12);
    assert!((sp.mean_curvature - 1.0).abs() < 1e-12 && (sp.det_a - 1.0).abs() < 1e-12);
    assert!(sp.normal[2] > 0.0, "upward normal");
    // general point: II = Hess f / √(1+|∇f|²), g = δ + ∇f∇fᵀ
    let (x, y) = (0.4, -0.7);
    let sp = surface_point(&p, &[x, y]).unwrap();
    check_invariants(&p, &sp);
    let w = (1.0 + x * x + y * y).sqrt();
    assert!(max_diff(&sp.second, &[vec![1.0 / w, 0.0], vec![0.0, 1.0 / w]]) < 1e-12);
    assert!(
        max_diff(
            &sp.first,
            &[vec![1.0 + x * x, x * y], vec![x * y, 1.0 + y * y]]
        ) < 1e-12
    );
    assert!((sp.det_a - 1.0 / w.powi(4)).abs() < 1e-12);
}

#[test]
fn catenoid_is_minimal_with_negative_curvature() {
    let c = standard_immersion(&ImmersionSpec::Catenoid { waist: Some(0.8) }, &e3()).unwrap();
    for u in sample_grid(&c, 5, 0.05) {
        let sp = surface_point(&c, &u).unwrap();
        check_invariants(&c, &sp);
        let ch = (u[0] / 0.8).cosh();
        assert!(sp.mean_curvature.abs() < 1e-10);
        assert!(sp.det_a < 0.0);
        assert!((sp.det_a + 1.0 / (0.64 * ch.powi(4))).abs() < 1e-10);
        assert!((sp.lambda[1] - 1.0 / (0.8 * ch * ch)).abs() < 1e-9);
        let gc = gauss_codazzi_residual(&c, &u).unwrap();
        assert!(gc.gauss < 1e-8 && gc.codazzi < 1e-8, "{gc:?}");
    }
}

#[test]
fn geodesic_spheres_in_space_forms() {
    for (cb, rho) in [
        (1.0, PI / 4.0),
        (1.0, 0.3),
        (-1.0, 0.7),
        (0.0, 0.5),
        (4.0, 0.2),
    ] {
        for dim in [3, 4] {
            let chart = space_form(dim, cb, 0).unwrap();
            let s = standard_immersion(
                &ImmersionSpec::SmallSphere {
                    geodesic_radius: rho,
                },
                &chart,
            )
            .unwrap();
            let expect = if cb > 0.0 {
                cb.sqrt() / (cb.sqrt() * rho).tan()
            } else if cb < 0.0 {
                (-cb).sqrt() / ((-cb).sqrt() * rho).tanh()
            } else {
                1.0 / rho
            };
            for u in sample_grid(&s, 3, 0.15) {
                let sp = surface_point(&s, &u).unwrap();
                check_invariants(&s, &sp);
                for l in &sp.lambda {
                    assert!(
                        (l - expect).abs() < 1e-9,
                        "C={cb} ρ={rho}: λ = {l}, want {expect}"
                    );
                }
                assert!((sp.lambda[dim - 2] - sp.lambda[0]).abs() < 1e-8);
            }
        }
    }
}

#[test]
fn product_spheres_have_two_principal_curvatures() {
    // S^k(r1) × S^{m−k}(r2) in unit S^{m+1}: λ = r2/r1 (k times) and −r1/r2
    let s4 = space_form(4, 1.0, 0).unwrap();
    let r1 = 0.6f64;
    let r2 = (1.0 - r1 * r1).sqrt();
    let p = standard_immersion(
        &ImmersionSpec::ProductSphere {
            k: 1,
            radius: Some(r1),
        },
        &s4,
    )
    .unwrap();
    for u in sample_grid(&p, 3, 0.15) {
        let sp = surface_point(&p, &u).unwrap();
        check_invariants(&p, &sp);
        let mut want = vec![-r1 / r2, -r1 / r2, r2 / r1];
        let mut got = sp.lambda.clone();
        if sp.mean_curvature > 0.0 {
            want = want.iter().map(|v| -v).collect();
        }
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-9, "{got:?} vs {want:?}");
        }
        assert!(sp.mean_curvature.abs() > 0.0);
        let gc = gauss_codazzi_residual(&p, &u).unwrap();
        assert!(gc.gauss < 1e-7 && gc.codazzi < 1e-7, "{gc:?}");
    }
}

#[test]
fn equatorial_product_in_s4_is_clifford_like() {
    let s4 = space_form(4, 1.0, 0).unwrap();
    let p = standard_immersion(&ImmersionSpec::ProductSphere { k: 2, radius: None }, &s4).unwrap();
    let sp = surface_point(&p, &[1.1, 0.4, 2.0]).unwrap();
    check_invariants(&p, &sp);
    assert!(sp.lambda.iter().all(|l| (l.abs() - 1.0).abs() < 1e-9));
}

#[test]
fn lorentzian_graph_in_minkowski() {
    // x2 = f(x0, x1) in diag(−1,1,1): N = (f0, −f1, 1), ḡ(N,N) = 1 − f0² + f1²
    let m3 = space_form(3, 0.0, 1).unwrap();
    let terms = vec![
        (vec![2, 0], 0.3),
        (vec![1, 1], 0.2),
        (vec![0, 2], 0.4),
        (vec![0, 3], 0.1),
    ];
    let gr = standard_immersion(
        &ImmersionSpec::Graph {
            terms,
            half_width: Some(0.5),
        },
        &m3,
    )
    .unwrap();
    let (a, b) = (0.2, -0.3);
    let sp = surface_point(&gr, &[a, b]).unwrap();
    check_invariants(&gr, &sp);
    let f0 = 0.6 * a + 0.2 * b;
    let f1 = 0.2 * a + 0.8 * b + 0.3 * b * b;
    let nn = 1.0 - f0 * f0 + f1 * f1;
    assert_eq!(sp.alpha, 1.0);
    let hess = [[0.6, 0.2], [0.2, 0.8 + 0.6 * b]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((sp.second[i][j].abs() - hess[i][j].abs() / nn.sqrt()).abs() < 1e-12);
        }
    }
    assert!((sp.first[0][0] - (-1.0 + f0 * f0)).abs() < 1e-12);
    grid_check(&gr, 5);
    for u in sample_grid(&gr, 4, 0.1) {
        let gc = gauss_codazzi_residual(&gr, &u).unwrap();
        assert!(gc.gauss < 1e-8 && gc.codazzi < 1e-8, "{gc:?}");
    }
}

#[test]
fn spacelike_surface_has_timelike_normal() {
    let m3 = space_form(3, 0.0, 1).unwrap();
    // x0 is the graph coordinate here: reparametrize (u0,u1) ↦ (f, u0, u1)
    // using a sphere-like radial graph is awkward, so take the hyperboloid
    // cap x0 = √(1 + x1² + x2²) through a rotated graph
    struct Hyperboloid(MetricChart);
    impl Immersion for Hyperboloid {
        fn param_dim(&self) -> usize {
            2
        }
        fn ambient(&self) -> &MetricChart {
            &self.0
        }
        fn param_domain(&self) -> (Vec<f64>, Vec<f64>) {
            (vec![-0.8, -0.8], vec![0.8, 0.8])
        }
        fn map_jets(&self, u: &[sff_core::jet::Jet]) -> sff_core::Result<Vec<sff_core::jet::Jet>> {
            use sff_core::jet::Real;
            let r2 = u[0].clone() * u[0].clone() + u[1].clone() * u[1].clone();
            Ok(vec![(r2 + 1.0).sqrt(), u[0].clone(), u[1].clone()])
        }
        fn label(&self) -> String {
            "hyperboloid".into()
        }
    }
    let h = Hyperboloid(m3);
    for u in sample_grid(&h, 4, 0.1) {
        let sp = surface_point(&h, &u).unwrap();
        check_invariants(&h, &sp);
        assert_eq!(sp.alpha, -1.0);
        // totally umbilic with |λ| = 1
        assert!(
            sp.lambda.iter().all(|l| (l.abs() - 1.0).abs() < 1e-9),
            "{:?}",
            sp.lambda
        );
        assert!(umbilic_defect(&sp) < 1e-10);
        let gc = gauss_codazzi_residual(&h, &u).unwrap();
        assert!(gc.gauss < 1e-8 && gc.codazzi < 1e-8, "{gc:?}");
    }
}

#[test]
fn residuals_in_non_symmetric_ambients() {
    for (name, dim) in [
        ("perturbed_euclidean", 3),
        ("conformal_bump", 3),
        ("conformal_bump", 4),
        ("perturbed_euclidean", 4),
    ] {
        let chart = custom_chart(name, dim, None).unwrap();
        let s = standard_immersion(
            &ImmersionSpec::RoundSphere {
                radius: 0.7,
                center: None,
            },
            &chart,
        )
        .unwrap();
        for u in sample_grid(&s, 3, 0.2) {
            let sp = surface_point(&s, &u).unwrap();
            check_invariants(&s, &sp);
            let gc = gauss_codazzi_residual(&s, &u).unwrap();
            assert!(gc.gauss < 1e-8 && gc.codazzi < 1e-8, "{name}: {gc:?}");
        }
    }
    let lor = custom_chart("perturbed_minkowski", 3, None).unwrap();
    let gr = standard_immersion(
        &ImmersionSpec::Graph {
            terms: vec![(vec![2, 0], 0.2), (vec![0, 2], 0.3)],
            half_width: Some(0.5),
        },
        &lor,
    )
    .unwrap();
    for u in sample_grid(&gr, 3, 0.1) {
        let sp = surface_point(&gr, &u).unwrap();
        check_invariants(&gr, &sp);
        let gc = gauss_codazzi_residual(&gr, &u).unwrap();
        assert!(gc.gauss < 1e-8 && gc.codazzi < 1e-8, "{gc:?}");
    }
}

#[test]
fn ovaloids_pass_invariants_and_residuals() {
    for seed in 0..4u64 {
        let o = standard_immersion(
            &ImmersionSpec::Ovaloid {
                radius: 1.0,
                amplitude: 0.05,
                seed,
                center: None,
            },
            &e3(),
        )
        .unwrap();
        for u in sample_grid(&o, 5, 0.08) {
            let sp = surface_point(&o, &u).unwrap();
            check_invariants(&o, &sp);
            assert!(
                sp.det_a > 0.0 && sp.mean_curvature > 0.0,
                "ovaloid not convex at {u:?}"
            );
            let gc = gauss_codazzi_residual(&o, &u).unwrap();
            assert!(gc.gauss < 1e-6 && gc.codazzi < 1e-6, "{gc:?}");
        }
    }
}

#[test]
fn ellipsoid_is_not_umbilic_and_matches_gauss_curvature() {
    let (a, b, c) = (1.0, 1.3, 0.7);
    let e = standard_immersion(
        &ImmersionSpec::Ellipsoid {
            axes: vec![a, b, c],
        },
        &e3(),
    )
    .unwrap();
    for u in sample_grid(&e, 4, 0.1) {
        let sp = surface_point(&e, &u).unwrap();
        check_invariants(&e, &sp);
        let (x, y, z) = (sp.x[0], sp.x[1], sp.x[2]);
        let q = x * x / a.powi(4) + y * y / b.powi(4) + z * z / c.powi(4);
        let k = 1.0 / (a * a * b * b * c * c * q * q);
        assert!((sp.det_a - k).abs() < 1e-10);
    }
    let sp = surface_point(&e, &[1.0, 0.5]).unwrap();
    assert!(umbilic_defect(&sp) > 1e-3);
}

#[test]
fn reparametrization_invariance() {
    let o: Arc<dyn Immersion> = Arc::new(
        standard_immersion(
            &ImmersionSpec::Ovaloid {
                radius: 1.0,
                amplitude: 0.05,
                seed: 11,
                center: None,
            },
            &e3(),
        )
        .unwrap(),
    );
    let rp = AffineReparam {
        inner: o.clone(),
        mat: vec![vec![0.7, 0.4], vec![-0.3, 1.2]],
        shift: vec![0.2, -0.1],
    };
    for u in sample_grid(o.as_ref(), 3, 0.25) {
        let v = rp.outer_param(&u).unwrap();
        let a = surface_point(o.as_ref(), &u).unwrap();
        let b = surface_point(&rp, &v).unwrap();
        assert!((a.mean_curvature - b.mean_curvature).abs() < 1e-8);
        assert!((a.det_a - b.det_a).abs() < 1e-8);
        for (x, y) in a.lambda.iter().zip(&b.lambda) {
            assert!((x - y).abs() < 1e-8);
        }
        let ga = gauss_codazzi_residual(o.as_ref(), &u).unwrap();
        let gb = gauss_codazzi_residual(&rp, &v).unwrap();
        assert!(ga.gauss < 1e-8 && gb.gauss < 1e-8 && ga.codazzi < 1e-8 && gb.codazzi < 1e-8);
    }
}

#[test]
fn normal_flip_identities() {
    let o: Arc<dyn Immersion> = Arc::new(
        standard_immersion(
            &ImmersionSpec::Ovaloid {
                radius: 1.0,
                amplitude: 0.05,
                seed: 3,
                center: None,
            },
            &e3(),
        )
        .unwrap(),
    );
    let f = Flipped(o.clone());
    for u in sample_grid(o.as_ref(), 3, 0.2) {
        let a = surface_point(o.as_ref(), &u).unwrap();
        let b = surface_point(&f, &u).unwrap();
        let neg = |m: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            m.iter().map(|r| r.iter().map(|v| -v).collect()).collect()
        };
        assert!(max_diff(&a.first, &b.first) < 1e-10);
        assert!(max_diff(&a.second, &neg(&b.second)) < 1e-10);
        assert!(max_diff(&a.shape, &neg(&b.shape)) < 1e-10);
        assert!(max_diff(&a.third, &b.third) < 1e-10);
        assert!((a.mean_curvature + b.mean_curvature).abs() < 1e-10);
        assert!((a.det_a - b.det_a).abs() < 1e-10);
        for k in 0..3 {
            assert!((a.normal[k] + b.normal[k]).abs() < 1e-10);
        }
    }
}

#[test]
fn error_cases() {
    let s = standard_immersion(
        &ImmersionSpec::RoundSphere {
            radius: 1.0,
            center: None,
        },
        &e3(),
    )
    .unwrap();
    assert!(matches!(
        surface_point(&s, &[0.0, 1.0]),
        Err(GeomError::DegenerateImmersion(_))
    ));
    assert!(matches!(
        surface_point(&s, &[4.0, 1.0]),
        Err(GeomError::OutOfDomain(_))
    ));
    assert!(matches!(
        standard_immersion(
            &ImmersionSpec::RoundSphere {
                radius: -1.0,
                center: None
            },
            &e3()
        ),
        Err(GeomError::BadParameters(_))
    ));
    assert!(matches!(
        standard_immersion(
            &ImmersionSpec::SmallSphere {
                geodesic_radius: 4.0
            },
            &space_form(3, 1.0, 0).unwrap()
        ),
        Err(GeomError::BadParameters(_))
    ));
    assert!(matches!(
        standard_immersion(&ImmersionSpec::Clifford, &e3()),
        Err(GeomError::BadParameters(_))
    ));
    // the null plane x2 = x0 in Minkowski space
    let m3 = space_form(3, 0.0, 1).unwrap();
    let null = standard_immersion(
        &ImmersionSpec::Graph {
            terms: vec![(vec![1, 0], 1.0)],
            half_width: None,
        },
        &m3,
    )
    .unwrap();
    assert!(matches!(
        surface_point(&null, &[0.1, 0.2]),
        Err(GeomError::NullNormal(_))
    ));
}

#[test]
fn immersion_spec_json_roundtrip() {
    let s: ImmersionSpec = serde_json::from_str(r#"{"kind":"clifford"}"#).unwrap();
    assert_eq!(s, ImmersionSpec::Clifford);
    let s: ImmersionSpec =
        serde_json::from_str(r#"{"kind":"small_sphere","geodesic_radius":0.5}"#).unwrap();
    assert_eq!(
        s,
        ImmersionSpec::SmallSphere {
            geodesic_radius: 0.5
        }
    );
    assert!(serde_json::from_str::<ImmersionSpec>(r#"{"kind":"torus"}"#).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ovaloid_invariants_hold_anywhere(seed in 0u64..1000, t in 0.3f64..2.8, p in 0.0f64..6.2, amp in 0.0f64..0.08) {
        let o = standard_immersion(&ImmersionSpec::Ovaloid { radius: 0.9, amplitude: amp, seed, center: None }, &e3()).unwrap();
        let sp = surface_point(&o, &[t, p]).unwrap();
        check_invariants(&o, &sp);
        // Cayley–Hamilton for m = 2: III − trA·αII + detA·g = 0
        let tr = sp.shape[0][0] + sp.shape[1][1];
        for i in 0..2 {
            for j in 0..2 {
                let r = sp.third[i][j] - tr * sp.alpha * sp.second[i][j] + sp.det_a * sp.first[i][j];
                prop_assert!(r.abs() < 1e-9);
            }
        }
        let gc = gauss_codazzi_residual(&o, &[t, p]).unwrap();
        prop_assert!(gc.gauss < 1e-6 && gc.codazzi < 1e-6);
    }

    #[test]
    fn random_graph_in_perturbed_metric(c in prop::collection::vec(-0.5f64..0.5, 5), x in -0.5f64..0.5, y in -0.5f64..0.5) {
        let chart = custom_chart("perturbed_euclidean", 3, Some(0.15)).unwrap();
        let terms = vec![(vec![2, 0], c[0]), (vec![1, 1], c[1]), (vec![0, 2], c[2]), (vec![3, 0], c[3]), (vec![1, 2], c[4])];
        let g = standard_immersion(&ImmersionSpec::Graph { terms, half_width: None }, &chart).unwrap();
        let sp = surface_point(&g, &[x, y]).unwrap();
        check_invariants(&g, &sp);
        let gc = gauss_codazzi_residual(&g, &[x, y]).unwrap();
        prop_assert!(gc.gauss < 1e-8 && gc.codazzi < 1e-8);
    }
}
