use approx::assert_relative_eq;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sff_core::ambient::*;
use sff_core::jet::{Jet, Layout};
use sff_core::riemann::{ix3, ix4};
use sff_core::GeomError;

fn random_point(rng: &mut ChaCha8Rng, dim: usize, half: f64) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-half..half)).collect()
}

fn model_charts() -> Vec<MetricChart> {
    let s2 = space_form(2, 1.0, 0).unwrap();
    vec![
        space_form(3, 0.0, 0).unwrap(),
        space_form(4, 1.0, 0).unwrap(),
        space_form(4, -1.0, 0).unwrap(),
        space_form(3, 1.0, 1).unwrap(),
        space_form(3, -0.5, 1).unwrap(),
        product_chart(&s2, &s2).unwrap(),
        custom_chart("perturbed_euclidean", 3, None).unwrap(),
        custom_chart("perturbed_minkowski", 3, None).unwrap(),
        custom_chart("conformal_bump", 4, None).unwrap(),
    ]
}

// Central-difference oracle for ∂_a ḡ_ij with one Richardson step.
fn fd_dmetric(chart: &MetricChart, x: &[f64], a: usize, h: f64) -> Vec<Vec<f64>> {
    let d = |h: f64| {
        let mut p = x.to_vec();
        let mut m = x.to_vec();
        p[a] += h;
        m[a] -= h;
        let (gp, gm) = (chart.metric_at(&p), chart.metric_at(&m));
        (0..x.len())
            .map(|i| {
                (0..x.len())
                    .map(|j| (gp[i][j] - gm[i][j]) / (2.0 * h))
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>()
    };
    let (d1, d2) = (d(h), d(h / 2.0));
    d1.iter()
        .zip(&d2)
        .map(|(r1, r2)| {
            r1.iter()
                .zip(r2)
                .map(|(u, v)| (4.0 * v - u) / 3.0)
                .collect()
        })
        .collect()
}

fn fd_christoffel(chart: &MetricChart, x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let g = chart.metric_at(x);
    let (ginv, _) = sff_core::linalg::inverse_det(&g, 1e-300).unwrap();
    let dg: Vec<_> = (0..n).map(|a| fd_dmetric(chart, x, a, 1e-3)).collect();
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s += 0.5 * ginv[k][l] * (dg[i][j][l] + dg[j][i][l] - dg[l][i][j]);
                }
                out[ix3(n, k, i, j)] = s;
            }
        }
    }
    out
}

#[test]
fn euclidean_christoffel_vanishes() {
    let e = space_form(4, 0.0, 0).unwrap();
    let g = christoffel(&e, &[0.3, -1.0, 2.0, 0.5]).unwrap();
    assert!(g.iter().all(|v| v.abs() == 0.0));
}

#[test]
fn sphere_christoffel_at_origin_and_offset() {
    let s = space_form(4, 1.0, 0).unwrap();
    let g0 = christoffel(&s, &[0.0; 4]).unwrap();
    assert!(g0.iter().all(|v| v.abs() < 1e-15));
    let x = [0.1, 0.0, 0.0, 0.0];
    let g = christoffel(&s, &x).unwrap();
    let fd = fd_christoffel(&s, &x);
    for (a, b) in g.iter().zip(&fd) {
        assert!((a - b).abs() < 1e-7, "{a} vs {b}");
    }
}

#[test]
fn christoffel_matches_finite_differences_on_all_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for chart in model_charts() {
        for _ in 0..3 {
            let x = random_point(&mut rng, chart.dim, 0.6);
            let g = christoffel(&chart, &x).unwrap();
            let fd = fd_christoffel(&chart, &x);
            let generic: Vec<f64> = chart.christoffel_generic(&x).unwrap();
            for ((a, b), c) in g.iter().zip(&fd).zip(&generic) {
                assert!((a - b).abs() < 1e-7, "{} {a} vs {b}", chart.label);
                assert!((a - c).abs() < 1e-14);
            }
            // symmetric lower indices
            let n = chart.dim;
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        assert!((g[ix3(n, k, i, j)] - g[ix3(n, k, j, i)]).abs() < 1e-14);
                    }
                }
            }
        }
    }
}

#[test]
fn metric_compatibility_recomputed() {
    // ∂_k g_ij = Γ^l_{ki} g_lj + Γ^l_{kj} g_il
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for chart in model_charts() {
        let n = chart.dim;
        let x = random_point(&mut rng, n, 0.5);
        let gam = christoffel(&chart, &x).unwrap();
        let gj = chart.metric_jets(&x, 1);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut rhs = 0.0;
                    for l in 0..n {
                        rhs += gam[ix3(n, l, k, i)] * gj[l][j].value()
                            + gam[ix3(n, l, k, j)] * gj[i][l].value();
                    }
                    assert!((gj[i][j].d1(k) - rhs).abs() < 1e-9);
                }
            }
        }
    }
}

#[test]
fn taylor_derivatives_match_nested_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for chart in model_charts() {
        let n = chart.dim;
        for _ in 0..5 {
            let x = random_point(&mut rng, n, 0.5);
            let gj = chart.metric_jets(&x, 4);
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            // second derivative by nested central differences of the first
            let h = 1e-3;
            let second = |h: f64| {
                let mut p = x.clone();
                let mut m = x.clone();
                p[b] += h;
                m[b] -= h;
                let (dp, dm) = (
                    fd_dmetric(&chart, &p, a, 1e-3),
                    fd_dmetric(&chart, &m, a, 1e-3),
                );
                (dp[0][n - 1] - dm[0][n - 1]) / (2.0 * h)
            };
            let fd = (4.0 * second(h / 2.0) - second(h)) / 3.0;
            let tj = gj[0][n - 1].d2(a, b);
            assert!(
                (fd - tj).abs() <= 1e-6 * (1.0 + tj.abs()),
                "{} {fd} vs {tj}",
                chart.label
            );
            // fourth-order coefficient against a stencil on the jet itself:
            // the 3rd derivative along a of the order-4 jet equals the first
            // derivative of the 2nd derivative jet at nearby points
            let mut e = vec![0u8; n];
            e[a] += 3;
            let d3 = gj[0][0].derivative(&e);
            let d2_at = |s: f64| {
                let mut p = x.clone();
                p[a] += s;
                chart.metric_jets(&p, 2)[0][0].d2(a, a)
            };
            let fd3 = (8.0 * (d2_at(1e-3) - d2_at(-1e-3)) - (d2_at(2e-3) - d2_at(-2e-3))) / 12e-3;
            assert!(
                (fd3 - d3).abs() <= 1e-6 * (1.0 + d3.abs()),
                "{} {fd3} vs {d3}",
                chart.label
            );
        }
    }
}

#[test]
fn unit_three_sphere_jet_values() {
    let s3 = space_form(3, 1.0, 0).unwrap();
    let jet = curvature_jet(&s3, &[0.0; 3], 0).unwrap();
    // chart metric at origin is δ, so the chart basis is orthonormal there
    assert_relative_eq!(jet.r(0, 1, 0, 1), 1.0, epsilon = 1e-12);
    assert_relative_eq!(jet.scalar, 6.0, epsilon = 1e-12);
    for i in 0..3 {
        for j in 0..3 {
            assert_relative_eq!(jet.ricci[i][j], 2.0 * jet.metric[i][j], epsilon = 1e-12);
        }
    }
}

fn space_form_residual(jet: &CurvatureJet, c: f64) -> f64 {
    let n = jet.dim;
    let g = &jet.metric;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let want = c * (g[i][k] * g[j][l] - g[i][l] * g[j][k]);
                    worst = worst.max((jet.r(i, j, k, l) - want).abs());
                }
            }
        }
    }
    worst
}

#[test]
fn space_forms_have_constant_curvature_and_parallel_riemann() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (dim, c, idx) in [
        (3, 1.0, 0),
        (4, 1.0, 0),
        (4, -1.0, 0),
        (3, 1.0, 1),
        (3, -1.0, 1),
        (3, 0.0, 0),
    ] {
        let chart = space_form(dim, c, idx).unwrap();
        let half = if idx == 1 || c < 0.0 { 0.4 } else { 1.0 };
        for t in 0..10 {
            let x = random_point(&mut rng, dim, half);
            let order = if t < 3 { 2 } else { 1 };
            let jet = curvature_jet(&chart, &x, order).unwrap();
            assert!(
                space_form_residual(&jet, c) < 1e-8,
                "{} at {:?}",
                chart.label,
                x
            );
            assert!(jet.nabla_riem.iter().all(|v| v.abs() < 1e-7));
            assert!(jet.nabla2_riem.iter().all(|v| v.abs() < 1e-7));
        }
    }
}

#[test]
fn four_sphere_scalar_curvature() {
    let s4 = space_form(4, 1.0, 0).unwrap();
    let jet = curvature_jet(&s4, &[0.0; 4], 0).unwrap();
    assert_relative_eq!(jet.scalar, 12.0, epsilon = 1e-12);
}

#[test]
fn de_sitter_sectional_curvature_is_one_on_sampled_planes() {
    let ds = space_form(3, 1.0, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let x = [0.2, -0.1, 0.3];
    let jet = curvature_jet(&ds, &x, 0).unwrap();
    let g = &jet.metric;
    for _ in 0..20 {
        let u: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = |a: &[f64], c: &[f64]| sff_core::linalg::bilinear(g, a, c);
        let den = b(&u, &u) * b(&v, &v) - b(&u, &v).powi(2);
        if den.abs() < 1e-3 {
            continue;
        }
        let mut num = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        num += jet.r(i, j, k, l) * u[i] * v[j] * u[k] * v[l];
                    }
                }
            }
        }
        assert_relative_eq!(num / den, 1.0, epsilon = 1e-9);
    }
}

#[test]
fn product_curvature_oracles() {
    let s2 = space_form(2, 1.0, 0).unwrap();
    let e1 = space_form(1, 0.0, 0).unwrap();
    let e2 = space_form(2, 0.0, 0).unwrap();
    let e3 = product_chart(&e1, &e2).unwrap();
    let j = curvature_jet(&e3, &[0.1, 0.2, 0.3], 1).unwrap();
    assert!(j.riem.iter().all(|v| v.abs() < 1e-14));

    let ss = product_chart(&s2, &s2).unwrap();
    let x = [0.3, -0.2, 0.1, 0.4];
    let j = curvature_jet(&ss, &x, 0).unwrap();
    assert_relative_eq!(j.scalar, 4.0, epsilon = 1e-10);
    let n = 4;
    for i in 0..n {
        for k in 0..n {
            // Ric = g blockwise
            assert_relative_eq!(j.ricci[i][k], j.metric[i][k], epsilon = 1e-10);
            for jj in 0..n {
                for l in 0..n {
                    let blocks = [i, jj, k, l].map(|q| q / 2);
                    if blocks.iter().any(|&b| b != blocks[0]) {
                        assert!(j.r(i, jj, k, l).abs() < 1e-12);
                    }
                }
            }
        }
    }

    let se = product_chart(&s2, &e2).unwrap();
    let j = curvature_jet(&se, &x, 0).unwrap();
    assert_relative_eq!(j.scalar, 2.0, epsilon = 1e-10);
    let js2 = curvature_jet(&s2, &x[..2], 0).unwrap();
    let norm2 = |jet: &CurvatureJet| {
        let n = jet.dim;
        let gi = &jet.metric_inv;
        let mut s = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        for p in 0..n {
                            for q in 0..n {
                                for r in 0..n {
                                    for t in 0..n {
                                        s += gi[a][p]
                                            * gi[b][q]
                                            * gi[c][r]
                                            * gi[d][t]
                                            * jet.r(a, b, c, d)
                                            * jet.r(p, q, r, t);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        s
    };
    assert_relative_eq!(norm2(&j), norm2(&js2), epsilon = 1e-9);
    assert!(product_chart(&space_form(3, 1.0, 1).unwrap(), &s2).is_err());
}

#[test]
fn curvature_symmetries_and_bianchi_on_generic_metrics() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for chart in model_charts() {
        let n = chart.dim;
        let x = random_point(&mut rng, n, 0.4);
        let j = curvature_jet(&chart, &x, 2).unwrap();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = j.r(a, b, c, d);
                        assert!((r + j.r(b, a, c, d)).abs() < 1e-10);
                        assert!((r + j.r(a, b, d, c)).abs() < 1e-10);
                        assert!((r - j.r(c, d, a, b)).abs() < 1e-10);
                        let bianchi = r + j.r(b, c, a, d) + j.r(c, a, b, d);
                        assert!(bianchi.abs() < 1e-9);
                    }
                }
            }
        }
        let mut tr = 0.0;
        for a in 0..n {
            for b in 0..n {
                tr += j.metric_inv[a][b] * j.ricci[a][b];
                assert!((j.ricci[a][b] - j.ricci[b][a]).abs() < 1e-10);
                assert!(
                    (j.hess_scalar[a][b] - j.hess_scalar[b][a]).abs() < 1e-8,
                    "{}",
                    chart.label
                );
            }
        }
        assert!((tr - j.scalar).abs() < 1e-10);
        // 2 div Ric = dS
        for l in 0..n {
            let mut div = 0.0;
            for a in 0..n {
                for b in 0..n {
                    div += j.metric_inv[a][b] * j.nabla_ricci[ix3(n, a, b, l)];
                }
            }
            assert!(
                (2.0 * div - j.grad_scalar[l]).abs() < 1e-8,
                "{}",
                chart.label
            );
        }
        // second Bianchi for ∇R itself
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let nr = |p: usize, i: usize, k: usize| {
                        j.nabla_riem[p * n.pow(4) + ix4(n, i, k, 0, 1)]
                    };
                    let s = nr(a, b, c) + nr(b, c, a) + nr(c, a, b);
                    assert!(s.abs() < 1e-8);
                }
            }
        }
    }
}

#[test]
fn curvature_jet_rejects_bad_requests() {
    let s = space_form(3, 1.0, 0).unwrap();
    assert!(matches!(
        curvature_jet(&s, &[0.0; 3], 3),
        Err(GeomError::InsufficientSmoothness(_))
    ));
    assert!(matches!(
        curvature_jet(&s, &[100.0, 0.0, 0.0], 0),
        Err(GeomError::OutOfDomain(_))
    ));
    assert!(matches!(
        space_form(3, 1.0, 2),
        Err(GeomError::UnsupportedSignature(_))
    ));
}

// Stereographic inverse x ↦ q on the unit sphere (q0 is the pole coordinate)
fn to_sphere<S: sff_core::jet::Real>(x: &[S]) -> Vec<S> {
    let mut s = S::cst(0.0);
    for v in x {
        s = s + v.clone() * v.clone() * 0.25;
    }
    let den = (s.clone() + 1.0).recip();
    let mut q = vec![(-s + 1.0) * den.clone()];
    q.extend(x.iter().map(|v| v.clone() * den.clone()));
    q
}

fn to_chart(q: &[f64]) -> Vec<f64> {
    q[1..].iter().map(|v| 2.0 * v / (1.0 + q[0])).collect()
}

#[test]
fn geodesics_follow_straight_lines_and_great_circles() {
    let e = space_form(3, 0.0, 0).unwrap();
    let p = geodesic(&e, &[0.0; 3], &[1.0, 0.0, 0.0], 0.7).unwrap();
    assert_relative_eq!(p[0], 0.7, epsilon = 1e-12);
    assert!(p[1].abs() < 1e-15 && p[2].abs() < 1e-15);

    let s3 = space_form(3, 1.0, 0).unwrap();
    let n = [0.3, -0.2, 0.5];
    let g = s3.metric_at(&n);
    let raw = [0.4, 0.7, -0.2];
    let norm = sff_core::linalg::bilinear(&g, &raw, &raw).sqrt();
    let v: Vec<f64> = raw.iter().map(|x| x / norm).collect();
    let r = 0.5;
    let got = geodesic(&s3, &n, &v, r).unwrap();
    // embedding-space oracle cos(r) q + sin(r) dq(v)
    let l = Layout::get(1, 1);
    let t = Jet::variable(l, 1, 0, 0.0);
    let line: Vec<Jet> = n.iter().zip(&v).map(|(a, b)| t.clone() * *b + *a).collect();
    let q = to_sphere(&line);
    let want: Vec<f64> = q
        .iter()
        .map(|c| r.cos() * c.value() + r.sin() * c.d1(0))
        .collect();
    let want = to_chart(&want);
    for (a, b) in got.iter().zip(&want) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
    assert_eq!(geodesic(&s3, &n, &v, 0.0).unwrap(), n.to_vec());
}

#[test]
fn geodesic_flow_property_and_errors() {
    let chart = custom_chart("perturbed_euclidean", 3, None).unwrap();
    let n = [0.1, 0.0, -0.2];
    let g = chart.metric_at(&n);
    let raw = [0.3, 1.0, 0.2];
    let norm = sff_core::linalg::bilinear(&g, &raw, &raw).sqrt();
    let v: Vec<f64> = raw.iter().map(|x| x / norm).collect();
    let (mid, vel) = geodesic_with_velocity(&chart, &n, &v, 0.3).unwrap();
    let end = geodesic(&chart, &mid, &vel, 0.4).unwrap();
    let direct = geodesic(&chart, &n, &v, 0.7).unwrap();
    for (a, b) in end.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-7);
    }
    assert!(matches!(
        geodesic(&chart, &n, &raw, 0.3),
        Err(GeomError::BadDirection(_))
    ));
    assert!(matches!(
        geodesic(&chart, &n, &v, 10.0),
        Err(GeomError::LeftDomain(_))
    ));
}

#[test]
fn chart_descriptors_round_trip() {
    let spec: ChartSpec = serde_json_like();
    let chart = spec.build().unwrap();
    assert_eq!(chart.dim, 4);
}

fn serde_json_like() -> ChartSpec {
    ChartSpec::Product {
        factors: vec![
            ChartSpec::SpaceForm {
                dim: 2,
                index: 0,
                cbar: 1.0,
            },
            ChartSpec::SpaceForm {
                dim: 2,
                index: 0,
                cbar: 1.0,
            },
        ],
    }
}
