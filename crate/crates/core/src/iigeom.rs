//! Geometry of the second fundamental form as a metric: its frame,
//! connection and curvature, the difference tensor L = ∇^II − ∇, the field
//! Z, the II-Laplacian and divergence, H_II by three routes, and the
//! inequality diagnostics for extrinsic hyperspheres.

use crate::hypersurface::{
    adapted_jets, intrinsic_curvature, Adapted, Immersion, SurfacePointData,
};
use crate::jet::{Jet, Layout, Real};
use crate::linalg::{determinant, inverse_det, pivoted_gram_schmidt, to_f64, Mat};
use crate::riemann::{connection, ix3, ix4, ricci_scalar};
use crate::{GeomError, Result};
use serde::Serialize;

/// Scalar field given as a function of parameter jets and chart-coordinate
/// jets of the patch.
pub type ScalarField = dyn Fn(&[Jet], &[Jet]) -> Jet + Send + Sync;
/// Tangent field in parameter components, same arguments.
pub type TangentField = dyn Fn(&[Jet], &[Jet]) -> Vec<Jet> + Send + Sync;

const LAMBDA_MIN: f64 = 1e-8;

fn sum_jets(terms: impl Iterator<Item = Jet>) -> Jet {
    let mut acc = Jet::constant(0.0);
    for t in terms {
        acc += t;
    }
    acc
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct HiiRoutes {
    pub variational: f64,
    /// `None` where A is not diagonalizable or has nearly equal but distinct
    /// principal curvatures.
    pub principal: Option<f64>,
    pub gauss: f64,
}

impl HiiRoutes {
    /// Largest pairwise gap relative to 1 + |H_II|.
    pub fn spread(&self) -> f64 {
        let mut v = vec![self.variational, self.gauss];
        v.extend(self.principal);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        (hi - lo) / (1.0 + self.variational.abs())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IIGeometryPoint {
    pub base: SurfacePointData,
    /// II-orthonormal frame V_i (parameter components) and κ_i = II(V_i,V_i).
    pub ii_frame: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
    /// Γ_II^k_ij at ix3.
    pub gamma_ii: Vec<f64>,
    /// L^k_ij = Γ_II − Γ_g at ix3.
    pub l: Vec<f64>,
    /// Σ κ_i L(V_i, V_i).
    pub tr_ii_l: Vec<f64>,
    pub z: Vec<f64>,
    pub h_ii: HiiRoutes,
    pub s_ii: f64,
    /// Gaussian curvature of II by the Brioschi formula (m = 2).
    pub k_ii: Option<f64>,
    pub ii_ll: f64,
    pub tr_a_inv: f64,
    /// II^{ij} R̄(∂i,U,∂j,U) = Σ κ_i R̄(V_i,U,V_i,U).
    pub curvature_sum: f64,
    pub lap_log_det_a: f64,
    pub div_z: f64,
    pub tr_ii_ric_bar: f64,
    pub tr_ii_ric: f64,
    /// Δ_II det A / det A and II(∇^II det A, ∇^II det A)/det A².
    pub lap_det_over_det: f64,
    pub grad_det_sq: f64,
    /// Ambient scalar curvature at the point.
    pub scalar_bar: f64,
    /// Gaussian curvature of g (m = 2).
    pub k_g: Option<f64>,
    pub nabla_ii_residual: f64,
    pub l_asymmetry: f64,
    pub ii_frame_residual: f64,
}

/// II-orthonormal frame by pivoted Gram–Schmidt.
pub fn ii_frame(ii: &Mat<f64>) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    pivoted_gram_schmidt(ii, 1e-12)
        .ok_or_else(|| GeomError::DegenerateII("II has a null direction".into()))
}

fn check_invertible(sp: &SurfacePointData) -> Result<()> {
    let m = sp.first.len();
    let small = if sp.diagonalizable {
        sp.lambda.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()))
    } else {
        sp.det_a.abs().powf(1.0 / m as f64)
    };
    if !(small >= LAMBDA_MIN) {
        return Err(GeomError::SingularShapeOperator(format!(
            "min |λ| = {small:.3e} at u = {:?}",
            sp.u
        )));
    }
    Ok(())
}

/// Shared II-metric jets at a point: II, II^{-1}, √|det II|.
struct IIJets {
    ii: Mat<Jet>,
    ii_inv: Mat<Jet>,
    w: Jet,
}

fn ii_jets(ad: &Adapted) -> Result<IIJets> {
    let (ii_inv, det) = inverse_det(&ad.ii, 0.0)
        .ok_or_else(|| GeomError::DegenerateII(format!("at u = {:?}", ad.u)))?;
    let nrm: f64 = to_f64(&ad.ii)
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt())
        .product();
    if !(det.value().abs() > 1e-12 * nrm) {
        return Err(GeomError::DegenerateII(format!(
            "det II = {:.3e} at u = {:?}",
            det.value(),
            ad.u
        )));
    }
    let s = det.value().signum();
    Ok(IIJets {
        ii: ad.ii.clone(),
        ii_inv,
        w: (det * s).sqrt(),
    })
}

impl IIJets {
    /// (1/w) ∂_i(w II^{ij} ∂_j f) at the base point.
    fn laplacian(&self, f: &Jet) -> f64 {
        let m = self.ii.len();
        let df: Vec<Jet> = (0..m).map(|j| f.diff(j)).collect();
        let mut out = 0.0;
        for i in 0..m {
            let v = &self.w * &sum_jets((0..m).map(|j| &self.ii_inv[i][j] * &df[j]));
            out += v.d1(i);
        }
        out / self.w.value()
    }

    fn divergence(&self, x: &[Jet]) -> f64 {
        let m = self.ii.len();
        (0..m).map(|i| (&self.w * &x[i]).d1(i)).sum::<f64>() / self.w.value()
    }

    fn inv_values(&self) -> Mat<f64> {
        to_f64(&self.ii_inv)
    }
}

/// w^k = g^{kl} II^{ij} R̄(∂i,U,∂j,∂l) as jets.
fn curvature_vector(ad: &Adapted, iij: &IIJets) -> Result<Vec<Jet>> {
    let m = ad.m;
    let n = ad.n();
    let rb = ad
        .riem_bar
        .as_ref()
        .ok_or_else(|| GeomError::JetTooShallow("ambient curvature not computed".into()))?;
    let ord = rb[0].order();
    let un: Vec<Jet> = ad.normal.iter().map(|v| v.clone().truncate(ord)).collect();
    // c_l = II^{ij} R̄_{i a j l} U^a
    let cl: Vec<Jet> = (0..m)
        .map(|l| {
            sum_jets(
                (0..m)
                    .flat_map(|i| (0..m).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let r = sum_jets((0..n).map(|a| &rb[ix4(n, i, a, j, l)] * &un[a]));
                        &iij.ii_inv[i][j] * &r
                    }),
            )
        })
        .collect();
    Ok((0..m)
        .map(|k| sum_jets((0..m).map(|l| &ad.ginv[k][l] * &cl[l])))
        .collect())
}

/// Z = A^{-1} w as jets (order one below R̄).
fn z_jets(ad: &Adapted, iij: &IIJets) -> Result<Vec<Jet>> {
    let a = ad.shape_jets();
    let (ainv, _) = inverse_det(&a, 0.0)
        .ok_or_else(|| GeomError::SingularShapeOperator(format!("at u = {:?}", ad.u)))?;
    let w = curvature_vector(ad, iij)?;
    let m = ad.m;
    Ok((0..m)
        .map(|k| sum_jets((0..m).map(|l| &ainv[k][l] * &w[l])))
        .collect())
}

/// Ambient Ricci Ric̄_{jl} = Ḡ^{ik} R̄_{ijkl} in adapted indices (values).
fn ricci_bar(ad: &Adapted) -> Result<(Mat<f64>, f64)> {
    let rb = ad.riem_values()?;
    let gi = to_f64(&ad.gbar_inv);
    Ok(ricci_scalar(ad.n(), &gi, &rb))
}

fn alternate_z(
    ad: &Adapted,
    sp: &SurfacePointData,
    ric_bar: &Mat<f64>,
    ii_inv: &Mat<f64>,
) -> Vec<f64> {
    // II(Z0, X) = Ric̄(U, X); Z = A Z0 / det A
    let m = ad.m;
    let n = ad.n();
    let uval: Vec<f64> = ad.normal.iter().map(|v| v.value()).collect();
    let ru: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|a| ric_bar[a][j] * uval[a]).sum())
        .collect();
    let z0: Vec<f64> = (0..m)
        .map(|i| (0..m).map(|j| ii_inv[i][j] * ru[j]).sum())
        .collect();
    (0..m)
        .map(|i| (0..m).map(|j| sp.shape[i][j] * z0[j]).sum::<f64>() / sp.det_a)
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct ZField {
    pub z: Vec<f64>,
    /// A(Z₀)/det A with II(Z₀, ·) = Ric̄(U, ·), for surfaces.
    pub alternate: Option<Vec<f64>>,
}

pub fn z_field(imm: &dyn Immersion, u: &[f64]) -> Result<ZField> {
    let ad = adapted_jets(imm, u, 2, true)?;
    let sp = SurfacePointData::from_adapted(&ad);
    check_invertible(&sp)?;
    let iij = ii_jets(&ad)?;
    let z: Vec<f64> = z_jets(&ad, &iij)?.iter().map(|v| v.value()).collect();
    let alternate = if ad.m == 2 {
        let (ric, _) = ricci_bar(&ad)?;
        Some(alternate_z(&ad, &sp, &ric, &iij.inv_values()))
    } else {
        None
    };
    Ok(ZField { z, alternate })
}

fn field_seeds(imm: &dyn Immersion, ad: &Adapted, order: usize) -> Result<(Vec<Jet>, Vec<Jet>)> {
    let lm = Layout::get(ad.m, ad.order);
    let us: Vec<Jet> = (0..ad.m)
        .map(|i| Jet::variable(lm, order, i, ad.u[i]))
        .collect();
    let xs = imm.map_jets(&us)?;
    Ok((us, xs))
}

/// Δ_II f at u, with the sign convention Δf = f'' on the line.
pub fn laplacian_ii(imm: &dyn Immersion, f: &ScalarField, u: &[f64]) -> Result<f64> {
    let ad = adapted_jets(imm, u, 2, false)?;
    let iij = ii_jets(&ad)?;
    let (us, xs) = field_seeds(imm, &ad, 2)?;
    let fj = f(&us, &xs);
    if fj.order() < 2 {
        return Err(GeomError::JetTooShallow(
            "scalar field needs two derivatives".into(),
        ));
    }
    Ok(iij.laplacian(&fj))
}

pub fn div_ii(imm: &dyn Immersion, x: &TangentField, u: &[f64]) -> Result<f64> {
    let ad = adapted_jets(imm, u, 2, false)?;
    let iij = ii_jets(&ad)?;
    let (us, xs) = field_seeds(imm, &ad, 1)?;
    let xv = x(&us, &xs);
    if xv.len() != ad.m {
        return Err(GeomError::BadParameters(
            "tangent field has wrong dimension".into(),
        ));
    }
    Ok(iij.divergence(&xv))
}

/// Gaussian curvature of the 2×2 metric (E, F, G) by the Brioschi formula.
pub fn brioschi(e: &Jet, f: &Jet, g: &Jet) -> f64 {
    let (ev, fv, gv) = (e.value(), f.value(), g.value());
    let (eu, ev_) = (e.d1(0), e.d1(1));
    let (fu, fv_) = (f.d1(0), f.d1(1));
    let (gu, gv_) = (g.d1(0), g.d1(1));
    let evv = e.d2(1, 1);
    let fuv = f.d2(0, 1);
    let guu = g.d2(0, 0);
    let m1 = vec![
        vec![-0.5 * evv + fuv - 0.5 * guu, 0.5 * eu, fu - 0.5 * ev_],
        vec![fv_ - 0.5 * gu, ev, fv],
        vec![0.5 * gv_, fv, gv],
    ];
    let m2 = vec![
        vec![0.0, 0.5 * ev_, 0.5 * gu],
        vec![0.5 * ev_, ev, fv],
        vec![0.5 * gu, fv, gv],
    ];
    let d = ev * gv - fv * fv;
    (determinant(&m1) - determinant(&m2)) / (d * d)
}

/// Full II-geometry package at `u`.
pub fn ii_geometry(imm: &dyn Immersion, u: &[f64]) -> Result<IIGeometryPoint> {
    let ad = adapted_jets(imm, u, 3, true)?;
    ii_geometry_from_adapted(&ad)
}

pub fn ii_geometry_from_adapted(ad: &Adapted) -> Result<IIGeometryPoint> {
    if ad.order < 3 || ad.riem_bar.is_none() {
        return Err(GeomError::JetTooShallow(
            "II geometry needs order-3 adapted jets with curvature".into(),
        ));
    }
    let m = ad.m;
    let n = ad.n();
    let alpha = ad.alpha;
    let sp = SurfacePointData::from_adapted(ad);
    check_invertible(&sp)?;
    let iij = ii_jets(ad)?;
    let ii = to_f64(&ad.ii);
    let ii_inv = iij.inv_values();
    let (frame, kappa) = ii_frame(&ii)?;
    let mut frame_res = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let v = crate::linalg::bilinear(&ii, &frame[i], &frame[j]);
            frame_res = frame_res.max((v - if i == j { kappa[i] } else { 0.0 }).abs());
        }
    }

    // det A and its logarithm
    let a = ad.shape_jets();
    let det_a = determinant(&a);
    let sdet = det_a.value().signum();
    let log_det = (det_a.clone() * sdet).ln();
    let lap_log_det_a = iij.laplacian(&log_det);
    let lap_det_over_det = iij.laplacian(&det_a) / det_a.value();
    let grad: Vec<f64> = (0..m).map(|i| det_a.d1(i)).collect();
    let mut grad_sq = 0.0;
    for i in 0..m {
        for j in 0..m {
            grad_sq += ii_inv[i][j] * grad[i] * grad[j];
        }
    }
    let grad_det_sq = grad_sq / (det_a.value() * det_a.value());

    let zj = z_jets(ad, &iij)?;
    let z: Vec<f64> = zj.iter().map(|v| v.value()).collect();
    let div_z = iij.divergence(&zj);

    let rb = ad.riem_values()?;
    let uval: Vec<f64> = ad.normal.iter().map(|v| v.value()).collect();
    let r_xu_yu = |x: &[f64], y: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                let xy = x[i] * y[j];
                if xy == 0.0 {
                    continue;
                }
                for p in 0..n {
                    for q in 0..n {
                        s += xy * rb[ix4(n, i, p, j, q)] * uval[p] * uval[q];
                    }
                }
            }
        }
        s
    };
    let mut curvature_sum = 0.0;
    for i in 0..m {
        for j in 0..m {
            let mut ei = vec![0.0; m];
            let mut ej = vec![0.0; m];
            ei[i] = 1.0;
            ej[j] = 1.0;
            curvature_sum += ii_inv[i][j] * r_xu_yu(&ei, &ej);
        }
    }
    let mh = alpha * (0..m).map(|i| sp.shape[i][i]).sum::<f64>();
    let variational = 0.5 * (mh - curvature_sum + 0.5 * alpha * lap_log_det_a - alpha * div_z);

    let principal = principal_route(&sp, alpha, &r_xu_yu)
        .map(|s| 0.5 * (mh - s) + 0.25 * alpha * lap_log_det_a - 0.5 * alpha * div_z);

    let (ric_bar, scalar_bar) = ricci_bar(ad)?;
    let mut tr_ii_ric_bar = 0.0;
    for i in 0..m {
        for j in 0..m {
            tr_ii_ric_bar += ii_inv[i][j] * ric_bar[i][j];
        }
    }
    let (gam_g, riem_g) = intrinsic_curvature(&ad.g)?;
    let riem_gv: Vec<f64> = riem_g.iter().map(|v| v.value()).collect();
    let ginv = to_f64(&ad.ginv);
    let (ric_g, _) = ricci_scalar(m, &ginv, &riem_gv);
    let mut tr_ii_ric = 0.0;
    for i in 0..m {
        for j in 0..m {
            tr_ii_ric += ii_inv[i][j] * ric_g[i][j];
        }
    }
    let h = sp.mean_curvature;
    let mf = m as f64;
    let gauss = -0.5
        * alpha
        * (tr_ii_ric_bar - tr_ii_ric + alpha * (mf * mf - 2.0 * mf) * h - 0.5 * lap_log_det_a
            + div_z);

    // connection and curvature of II
    let con_ii =
        connection(&ad.ii, 0.0).ok_or_else(|| GeomError::DegenerateII("singular II".into()))?;
    let gamma_ii: Vec<f64> = con_ii.gamma.iter().map(|v| v.value()).collect();
    let r_ii: Vec<f64> = con_ii.riemann().iter().map(|v| v.value()).collect();
    let (_, s_ii) = ricci_scalar(m, &ii_inv, &r_ii);
    let l: Vec<f64> = gamma_ii
        .iter()
        .zip(&gam_g)
        .map(|(x, y)| x - y.value())
        .collect();
    let mut l_asym = 0.0f64;
    let mut tr_ii_l = vec![0.0; m];
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                l_asym = l_asym.max((l[ix3(m, k, i, j)] - l[ix3(m, k, j, i)]).abs());
                tr_ii_l[k] += ii_inv[i][j] * l[ix3(m, k, i, j)];
            }
        }
    }
    // L_{ijk} = II_{kl} L^l_{ij}
    let mut low = vec![0.0; m * m * m];
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                low[ix3(m, i, j, k)] = (0..m).map(|q| ii[k][q] * l[ix3(m, q, i, j)]).sum();
            }
        }
    }
    // raise all three indices with II^{-1}
    let mut ii_ll = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let mut up = 0.0;
                for p in 0..m {
                    for q in 0..m {
                        for r in 0..m {
                            up += ii_inv[i][p] * ii_inv[j][q] * ii_inv[k][r] * low[ix3(m, p, q, r)];
                        }
                    }
                }
                ii_ll += up * low[ix3(m, i, j, k)];
            }
        }
    }
    // ∇^II II = 0
    let mut nabla_res = 0.0f64;
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                let mut v = ad.ii[i][j].d1(k);
                for q in 0..m {
                    v -=
                        gamma_ii[ix3(m, q, k, i)] * ii[q][j] + gamma_ii[ix3(m, q, k, j)] * ii[i][q];
                }
                nabla_res = nabla_res.max(v.abs());
            }
        }
    }
    let (k_ii, k_g) = if m == 2 {
        let kg = riem_gv[ix4(2, 0, 1, 0, 1)] / determinant(&to_f64(&ad.g));
        (
            Some(brioschi(&ad.ii[0][0], &ad.ii[0][1], &ad.ii[1][1])),
            Some(kg),
        )
    } else {
        (None, None)
    };
    let tr_a_inv = {
        let (ainv, _) = inverse_det(&sp.shape, 0.0)
            .ok_or_else(|| GeomError::SingularShapeOperator("A".into()))?;
        (0..m).map(|i| ainv[i][i]).sum()
    };
    Ok(IIGeometryPoint {
        base: sp,
        ii_frame: frame,
        kappa,
        gamma_ii,
        l,
        tr_ii_l,
        z,
        h_ii: HiiRoutes {
            variational,
            principal,
            gauss,
        },
        s_ii,
        k_ii,
        ii_ll,
        tr_a_inv,
        curvature_sum,
        lap_log_det_a,
        div_z,
        tr_ii_ric_bar,
        tr_ii_ric,
        lap_det_over_det,
        grad_det_sq,
        scalar_bar,
        k_g,
        nabla_ii_residual: nabla_res,
        l_asymmetry: l_asym,
        ii_frame_residual: frame_res,
    })
}

/// Σ (1/λ_i) K̄(E_i, U) over principal directions, or `None` if the
/// spectrum is unusable.
fn principal_route(
    sp: &SurfacePointData,
    alpha: f64,
    r: &dyn Fn(&[f64], &[f64]) -> f64,
) -> Option<f64> {
    if !sp.diagonalizable {
        return None;
    }
    let lam = &sp.lambda;
    for i in 0..lam.len() {
        for j in i + 1..lam.len() {
            let gap = (lam[i] - lam[j]).abs();
            let same = gap <= 1e-9 * (1.0 + lam[i].abs());
            if !same && gap <= 1e-6 {
                return None;
            }
        }
    }
    let mut s = 0.0;
    for (i, e) in sp.directions.iter().enumerate() {
        let kbar = r(e, e) / (sp.epsilon[i] * alpha);
        s += kbar / lam[i];
    }
    Some(s)
}

/// Parameter curve through the base point used by the transport probe.
pub struct ParamCurve {
    pub point: Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    pub velocity: Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
}

impl ParamCurve {
    pub fn line(u0: Vec<f64>, dir: Vec<f64>) -> ParamCurve {
        let d2 = dir.clone();
        ParamCurve {
            point: Box::new(move |t| u0.iter().zip(&dir).map(|(a, b)| a + t * b).collect()),
            velocity: Box::new(move |_| d2.clone()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TransportProbe {
    /// (v★_ε − v)/ε at ε, ε/2, ε/4.
    pub quotients: Vec<Vec<f64>>,
    /// Richardson extrapolation of the quotients to ε → 0.
    pub extrapolated: Vec<f64>,
    /// L(v, c'(0)) from the Christoffel difference.
    pub direct: Vec<f64>,
}

fn christoffels_g_ii(imm: &dyn Immersion, u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let ad = adapted_jets(imm, u, 2, false)?;
    let cg =
        connection(&ad.g, 0.0).ok_or_else(|| GeomError::DegenerateInducedMetric("g".into()))?;
    let ci = connection(&ad.ii, 0.0).ok_or_else(|| GeomError::DegenerateII("II".into()))?;
    Ok((
        cg.gamma.iter().map(|v| v.value()).collect(),
        ci.gamma.iter().map(|v| v.value()).collect(),
    ))
}

fn transport(
    imm: &dyn Immersion,
    c: &ParamCurve,
    v: &[f64],
    t0: f64,
    t1: f64,
    steps: usize,
    use_ii: bool,
) -> Result<Vec<f64>> {
    let m = v.len();
    let rhs = |t: f64, w: &[f64]| -> Result<Vec<f64>> {
        let (gg, gi) = christoffels_g_ii(imm, &(c.point)(t))?;
        let gam = if use_ii { gi } else { gg };
        let cd = (c.velocity)(t);
        Ok((0..m)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        s += gam[ix3(m, k, i, j)] * cd[i] * w[j];
                    }
                }
                -s
            })
            .collect())
    };
    let h = (t1 - t0) / steps as f64;
    let mut w = v.to_vec();
    let mut t = t0;
    let ax = |a: &[f64], b: &[f64], s: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + s * y).collect()
    };
    for _ in 0..steps {
        let k1 = rhs(t, &w)?;
        let k2 = rhs(t + h / 2.0, &ax(&w, &k1, h / 2.0))?;
        let k3 = rhs(t + h / 2.0, &ax(&w, &k2, h / 2.0))?;
        let k4 = rhs(t + h, &ax(&w, &k3, h))?;
        for i in 0..m {
            w[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += h;
    }
    Ok(w)
}

/// Transports `v` along `c` from 0 to ε with ∇, back with ∇^II, and returns
/// the difference quotients at ε, ε/2, ε/4 with their extrapolation.
pub fn transport_holonomy_probe(
    imm: &dyn Immersion,
    c: &ParamCurve,
    v: &[f64],
    eps: f64,
) -> Result<TransportProbe> {
    if !(eps.abs() > 0.0) || !eps.is_finite() {
        return Err(GeomError::StepFailure(format!("transport step ε = {eps}")));
    }
    let m = imm.param_dim();
    if v.len() != m {
        return Err(GeomError::BadParameters(
            "vector has wrong dimension".into(),
        ));
    }
    let mut quotients = Vec::new();
    for k in 0..3 {
        let e = eps / f64::powi(2.0, k);
        let fwd = transport(imm, c, v, 0.0, e, 8, false)?;
        let back = transport(imm, c, &fwd, e, 0.0, 8, true)?;
        quotients.push((0..m).map(|i| (back[i] - v[i]) / e).collect::<Vec<f64>>());
    }
    let r1: Vec<Vec<f64>> = (0..2)
        .map(|k| {
            (0..m)
                .map(|i| 2.0 * quotients[k + 1][i] - quotients[k][i])
                .collect()
        })
        .collect();
    let extrapolated: Vec<f64> = (0..m).map(|i| (4.0 * r1[1][i] - r1[0][i]) / 3.0).collect();
    let u0 = (c.point)(0.0);
    let cd = (c.velocity)(0.0);
    let (gg, gi) = christoffels_g_ii(imm, &u0)?;
    let direct = (0..m)
        .map(|k| {
            let mut s = 0.0;
            for i in 0..m {
                for j in 0..m {
                    s += (gi[ix3(m, k, i, j)] - gg[ix3(m, k, i, j)]) * v[i] * cd[j];
                }
            }
            s
        })
        .collect();
    Ok(TransportProbe {
        quotients,
        extrapolated,
        direct,
    })
}

/// Diagnostics for one grid point; `None` where a quantity does not apply.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityRow {
    pub u: Vec<f64>,
    pub status: String,
    pub mean_curvature: Option<f64>,
    pub det_a: Option<f64>,
    pub h_ii_variational: Option<f64>,
    pub h_ii_gauss: Option<f64>,
    pub s_ii: Option<f64>,
    /// S_II − 2α(m−1)(H_II + C̄ tr A^{-1}) (space forms).
    pub s_ii_identity: Option<f64>,
    /// II(L,L) + (2m−3)/4·|∇det A|²/det A² − (m−1)/2·Δ det A/det A.
    pub ll_identity: Option<f64>,
    /// H_II + m√((m−2)S̄/(m+1)) − ½ tr_II Ric (Einstein, m ≥ 3, S̄ > 0).
    pub einstein_bound: Option<f64>,
    /// K_II − αH_II − ½ tr_II Ric̄ (m = 2).
    pub k_ii_identity: Option<f64>,
    /// H_II − αK_II + 2C̄H/(K − C̄) (m = 2, space forms).
    pub k_ii_space_form: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ColumnSummary {
    pub name: String,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub rows: Vec<InequalityRow>,
    pub summary: Vec<ColumnSummary>,
}

fn is_einstein(ad: &Adapted) -> Result<bool> {
    let (ric, s) = ricci_bar(ad)?;
    let gb = to_f64(&ad.gbar);
    let n = ad.n();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            dev = dev.max((ric[i][j] - s / n as f64 * gb[i][j]).abs());
        }
    }
    Ok(dev <= 1e-8 * (1.0 + s.abs()))
}

pub fn inequality_row(imm: &dyn Immersion, u: &[f64]) -> InequalityRow {
    let empty = |status: String| InequalityRow {
        u: u.to_vec(),
        status,
        mean_curvature: None,
        det_a: None,
        h_ii_variational: None,
        h_ii_gauss: None,
        s_ii: None,
        s_ii_identity: None,
        ll_identity: None,
        einstein_bound: None,
        k_ii_identity: None,
        k_ii_space_form: None,
    };
    let ad = match adapted_jets(imm, u, 3, true) {
        Ok(a) => a,
        Err(e) => return empty(e.code().into()),
    };
    let p = match ii_geometry_from_adapted(&ad) {
        Ok(p) => p,
        Err(e) => return empty(e.code().into()),
    };
    let m = ad.m as f64;
    let alpha = ad.alpha;
    let hii = p.h_ii.variational;
    let cbar = imm.ambient().constant_curvature();
    let s_ii_identity = cbar.map(|c| p.s_ii - 2.0 * alpha * (m - 1.0) * (hii + c * p.tr_a_inv));
    let ll_identity = Some(
        p.ii_ll + (2.0 * m - 3.0) / 4.0 * p.grad_det_sq - (m - 1.0) / 2.0 * p.lap_det_over_det,
    );
    let einstein_bound = if ad.m >= 3 && p.scalar_bar > 0.0 && is_einstein(&ad).unwrap_or(false) {
        Some(hii + m * ((m - 2.0) / (m + 1.0) * p.scalar_bar).sqrt() - 0.5 * p.tr_ii_ric)
    } else {
        None
    };
    let k_ii_identity = p.k_ii.map(|k| k - alpha * hii - 0.5 * p.tr_ii_ric_bar);
    let k_ii_space_form = match (p.k_ii, p.k_g, cbar) {
        (Some(kii), Some(kg), Some(c)) if (kg - c).abs() > 1e-12 => {
            Some(hii - alpha * kii + 2.0 * c * p.base.mean_curvature / (kg - c))
        }
        _ => None,
    };
    InequalityRow {
        u: u.to_vec(),
        status: "ok".into(),
        mean_curvature: Some(p.base.mean_curvature),
        det_a: Some(p.base.det_a),
        h_ii_variational: Some(hii),
        h_ii_gauss: Some(p.h_ii.gauss),
        s_ii: Some(p.s_ii),
        s_ii_identity,
        ll_identity,
        einstein_bound,
        k_ii_identity,
        k_ii_space_form,
    }
}

pub fn sphere_inequality_report(imm: &dyn Immersion, grid: &[Vec<f64>]) -> InequalityReport {
    use rayon::prelude::*;
    let rows: Vec<InequalityRow> = grid.par_iter().map(|u| inequality_row(imm, u)).collect();
    let col = |name: &str, f: &dyn Fn(&InequalityRow) -> Option<f64>| {
        let vals: Vec<f64> = rows.iter().filter_map(f).collect();
        ColumnSummary {
            name: name.into(),
            min: vals.iter().cloned().reduce(f64::min),
            max: vals.iter().cloned().reduce(f64::max),
        }
    };
    let summary = vec![
        col("H_II", &|r| r.h_ii_variational),
        col("S_II", &|r| r.s_ii),
        col("s_ii_identity", &|r| r.s_ii_identity),
        col("ll_identity", &|r| r.ll_identity),
        col("einstein_bound", &|r| r.einstein_bound),
        col("k_ii_identity", &|r| r.k_ii_identity),
        col("k_ii_space_form", &|r| r.k_ii_space_form),
    ];
    InequalityReport { rows, summary }
}
