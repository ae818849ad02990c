//! Quadrature of Area and Area_II, normal deformations of a patch, and
//! finite-difference checks of the first-variation formulas.

use crate::ambient::geodesic_flow;
use crate::ambient::MetricChart;
use crate::hypersurface::{
    adapted_jets, effective_sigma, intrinsic_curvature, surface_point, Immersion, Orientation,
};
use crate::iigeom::{ii_geometry, ScalarField};
use crate::jet::Real;
use crate::jet::{Jet, Layout};
use crate::linalg::{determinant, inverse_det, matvec};
use crate::riemann::{ix3, ix4};
use crate::{GeomError, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Gauss–Legendre nodes and weights on [a, b] (Newton on P_n).
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 {
                1.0
            } else if n == 1 {
                z
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    let (h, c) = ((b - a) / 2.0, (a + b) / 2.0);
    (
        x.iter().map(|t| c + h * t).collect(),
        w.iter().map(|t| t * h).collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisRule {
    GaussLegendre,
    /// Equispaced periodic trapezoid.
    Periodic,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Axis {
    pub rule: AxisRule,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        match self.rule {
            AxisRule::GaussLegendre => gauss_legendre(self.n, self.lo, self.hi),
            AxisRule::Periodic => {
                let h = (self.hi - self.lo) / self.n as f64;
                (
                    (0..self.n).map(|k| self.lo + h * k as f64).collect(),
                    vec![h; self.n],
                )
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    TensorGaussLegendre,
    LatLongSphere,
    Product,
}

/// Tensor-product quadrature on the parameter box.
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureGrid {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub scheme: Scheme,
    pub axes: Vec<Axis>,
}

impl QuadratureGrid {
    pub fn from_axes(axes: Vec<Axis>, scheme: Scheme) -> QuadratureGrid {
        let mut nodes = vec![Vec::new()];
        let mut weights = vec![1.0];
        for ax in &axes {
            let (x, w) = ax.nodes();
            let mut nn = Vec::with_capacity(nodes.len() * x.len());
            let mut nw = Vec::with_capacity(nodes.len() * x.len());
            for (p, pw) in nodes.iter().zip(&weights) {
                for (xi, wi) in x.iter().zip(&w) {
                    let mut q = p.clone();
                    q.push(*xi);
                    nn.push(q);
                    nw.push(pw * wi);
                }
            }
            nodes = nn;
            weights = nw;
        }
        QuadratureGrid {
            nodes,
            weights,
            scheme,
            axes,
        }
    }

    /// Gauss–Legendre in every coordinate of a box.
    pub fn tensor_gauss_legendre(lo: &[f64], hi: &[f64], n: &[usize]) -> QuadratureGrid {
        let axes = (0..lo.len())
            .map(|i| Axis {
                rule: AxisRule::GaussLegendre,
                lo: lo[i],
                hi: hi[i],
                n: n[i],
            })
            .collect();
        QuadratureGrid::from_axes(axes, Scheme::TensorGaussLegendre)
    }

    fn sphere_axes(m: usize, n_lat: usize, n_lon: usize) -> Vec<Axis> {
        let mut axes: Vec<Axis> = (0..m - 1)
            .map(|_| Axis {
                rule: AxisRule::GaussLegendre,
                lo: 0.0,
                hi: PI,
                n: n_lat,
            })
            .collect();
        axes.push(Axis {
            rule: AxisRule::Periodic,
            lo: 0.0,
            hi: 2.0 * PI,
            n: n_lon,
        });
        axes
    }

    /// Gauss–Legendre in the polar angles, periodic in the azimuth, for the
    /// hyperspherical parametrization of S^m.
    pub fn lat_long(m: usize, n_lat: usize, n_lon: usize) -> QuadratureGrid {
        QuadratureGrid::from_axes(
            QuadratureGrid::sphere_axes(m, n_lat, n_lon),
            Scheme::LatLongSphere,
        )
    }

    /// Lat-long grids on both factors of S^k × S^{m−k}.
    pub fn product_spheres(k: usize, m: usize, n_lat: usize, n_lon: usize) -> QuadratureGrid {
        let mut axes = QuadratureGrid::sphere_axes(k, n_lat, n_lon);
        axes.extend(QuadratureGrid::sphere_axes(m - k, n_lat, n_lon));
        QuadratureGrid::from_axes(axes, Scheme::Product)
    }

    /// The same rule with every axis doubled.
    pub fn refined(&self) -> QuadratureGrid {
        let axes = self
            .axes
            .iter()
            .map(|a| Axis {
                n: a.n * 2,
                ..a.clone()
            })
            .collect();
        QuadratureGrid::from_axes(axes, self.scheme)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.n).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AreaKind {
    FirstForm,
    SecondForm,
}

/// Area density √|det g| (times √|det A| for the second form) at u.
pub fn area_density(imm: &dyn Immersion, u: &[f64], which: AreaKind) -> Result<f64> {
    let sp = surface_point(imm, u)?;
    let dg = determinant(&sp.first).abs().sqrt();
    match which {
        AreaKind::FirstForm => Ok(dg),
        AreaKind::SecondForm => {
            if sp.det_a.abs() < 1e-16 {
                return Err(GeomError::SingularShapeOperator(format!(
                    "det A = {:.3e} at u = {u:?}",
                    sp.det_a
                )));
            }
            Ok(dg * sp.det_a.abs().sqrt())
        }
    }
}

/// Quadrature sum of the area density.
pub fn area_value(imm: &dyn Immersion, grid: &QuadratureGrid, which: AreaKind) -> Result<f64> {
    let vals: Result<Vec<f64>> = grid
        .nodes
        .par_iter()
        .zip(&grid.weights)
        .map(|(u, w)| Ok(w * area_density(imm, u, which)?))
        .collect();
    Ok(vals?.iter().sum())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct AreaEstimate {
    pub value: f64,
    /// Same rule at doubled resolution.
    pub refined: f64,
    pub error_estimate: f64,
}

pub fn area(imm: &dyn Immersion, grid: &QuadratureGrid, which: AreaKind) -> Result<AreaEstimate> {
    let value = area_value(imm, grid, which)?;
    let refined = area_value(imm, &grid.refined(), which)?;
    Ok(AreaEstimate {
        value,
        refined,
        error_estimate: (refined - value).abs(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeformMode {
    /// x + s·f·U in chart components.
    ChartLinear,
    /// exp_x(s·f·U).
    AmbientExponential,
}

/// The normal variation μ_s of a patch with amplitude f.
pub struct Deformation {
    pub base: Arc<dyn Immersion>,
    pub f: Arc<ScalarField>,
    pub s: f64,
    pub mode: DeformMode,
}

pub fn normal_deform(
    base: Arc<dyn Immersion>,
    f: Arc<ScalarField>,
    s: f64,
    mode: DeformMode,
) -> Deformation {
    Deformation { base, f, s, mode }
}

const EXP_STEPS: usize = 8;

/// Chart components of the oriented unit normal as a jet of order `q` in
/// the displacement from `u0`.
pub fn unit_normal_chart_jets(imm: &dyn Immersion, u0: &[f64], q: usize) -> Result<Vec<Jet>> {
    let m = imm.param_dim();
    let chart = imm.ambient();
    let n = chart.dim;
    let sigma = effective_sigma(imm, u0)?;
    let l = Layout::get(m, q + 1);
    let x = imm.map_jets(&Jet::seed(l, q + 1, u0))?;
    let jac: Vec<Vec<Jet>> = x
        .iter()
        .map(|xa| (0..m).map(|i| xa.diff(i)).collect())
        .collect();
    let nu: Vec<Jet> = (0..n)
        .map(|k| {
            let minor: Vec<Vec<Jet>> = (0..n).filter(|&r| r != k).map(|r| jac[r].clone()).collect();
            let d = if m == 0 {
                Jet::constant(1.0)
            } else {
                determinant(&minor)
            };
            if (k + m).is_multiple_of(2) {
                d
            } else {
                -d
            }
        })
        .collect();
    let xq: Vec<Jet> = x.iter().map(|v| v.clone().truncate(q)).collect();
    let gb = chart.metric(&xq);
    let (gi, _) = inverse_det(&gb, 0.0)
        .ok_or_else(|| GeomError::DegenerateMetric(format!("at u = {u0:?}")))?;
    let raised = matvec(&gi, &nu);
    let mut nn = Jet::constant(0.0);
    for (a, b) in raised.iter().zip(&nu) {
        nn += a * b;
    }
    if nn.value().abs() < 1e-14 * (1.0 + nu.iter().map(|v| v.value().powi(2)).sum::<f64>()) {
        return Err(GeomError::NullNormal(format!("at u = {u0:?}")));
    }
    let scale = if nn.value() < 0.0 { -nn } else { nn }.sqrt().recip() * sigma;
    Ok(raised.iter().map(|v| v * &scale).collect())
}

impl Immersion for Deformation {
    fn param_dim(&self) -> usize {
        self.base.param_dim()
    }
    fn ambient(&self) -> &MetricChart {
        self.base.ambient()
    }
    fn param_domain(&self) -> (Vec<f64>, Vec<f64>) {
        self.base.param_domain()
    }
    fn check_param(&self, u: &[f64]) -> Result<()> {
        self.base.check_param(u)
    }
    fn label(&self) -> String {
        format!("deform({}, s={})", self.base.label(), self.s)
    }
    fn orientation_at(&self, u: &[f64]) -> Result<Orientation> {
        Ok(Orientation::Fixed(effective_sigma(self.base.as_ref(), u)?))
    }
    fn map_jets(&self, u: &[Jet]) -> Result<Vec<Jet>> {
        let x = self.base.map_jets(u)?;
        if self.s == 0.0 {
            return Ok(x);
        }
        let u0: Vec<f64> = u.iter().map(|v| v.value()).collect();
        let q = u
            .iter()
            .filter(|v| !v.is_constant())
            .map(|v| v.order())
            .min()
            .unwrap_or(0);
        let nj = unit_normal_chart_jets(self.base.as_ref(), &u0, q)?;
        let delta: Vec<Jet> = u.iter().zip(&u0).map(|(v, c)| v.clone() - *c).collect();
        let un: Vec<Jet> = nj.iter().map(|c| c.substitute(&delta)).collect();
        let amp = (self.f)(u, &x) * self.s;
        let v: Vec<Jet> = un.iter().map(|c| c * &amp).collect();
        match self.mode {
            DeformMode::ChartLinear => Ok(x.iter().zip(&v).map(|(a, b)| a + b).collect()),
            DeformMode::AmbientExponential => {
                let (xe, _) = geodesic_flow(self.base.ambient(), x, v, 1.0, EXP_STEPS)?;
                Ok(xe)
            }
        }
    }
}

/// Membership in the class with nondegenerate II: min |λ_i| > 1e−6 on the
/// grid.
pub fn check_epsilon_class(imm: &dyn Immersion, grid: &QuadratureGrid) -> Result<()> {
    grid.nodes.par_iter().try_for_each(|u| {
        let sp = surface_point(imm, u)?;
        let small = if sp.diagonalizable {
            sp.lambda.iter().fold(f64::INFINITY, |a, l| a.min(l.abs()))
        } else {
            sp.det_a.abs()
        };
        if small > 1e-6 {
            Ok(())
        } else {
            Err(GeomError::LeftEpsilonClass(format!(
                "min |λ| = {small:.3e} at u = {u:?}"
            )))
        }
    })
}

/// Normal amplitude f = c + b·x + xᵀQx in chart coordinates.
#[derive(Clone, Debug, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub linear: Vec<f64>,
    #[serde(default)]
    pub quadratic: Vec<Vec<f64>>,
}

impl FieldSpec {
    pub fn constant(c: f64) -> FieldSpec {
        FieldSpec {
            constant: c,
            ..Default::default()
        }
    }

    pub fn build(&self) -> Arc<ScalarField> {
        let s = self.clone();
        Arc::new(move |_u: &[Jet], x: &[Jet]| {
            let mut acc = Jet::constant(s.constant);
            for (b, xi) in s.linear.iter().zip(x) {
                acc += xi.clone() * *b;
            }
            for (i, row) in s.quadratic.iter().enumerate() {
                for (j, q) in row.iter().enumerate() {
                    if *q != 0.0 && i < x.len() && j < x.len() {
                        acc += &x[i] * &x[j] * *q;
                    }
                }
            }
            acc
        })
    }
}

/// Default finite-difference ladder.
pub const S_LADDER: [f64; 3] = [1e-2, 5e-3, 2.5e-3];

#[derive(Clone, Debug, Serialize)]
pub struct FdResult {
    /// Central differences at each ladder step.
    pub quotients: Vec<f64>,
    /// Two-level Richardson extrapolation.
    pub value: f64,
    /// Fitted log-log slope of |quotient − value| in s (∞ at the noise floor).
    pub slope: f64,
}

/// Central differences of `g` at ±s with Richardson extrapolation.
pub fn central_difference(
    ladder: &[f64],
    g: &(dyn Fn(f64) -> Result<f64> + Sync),
) -> Result<FdResult> {
    let mut r = central_difference_vec(ladder, &|s| Ok(vec![g(s)?]))?;
    Ok(r.remove(0))
}

/// Componentwise `central_difference` for a vector-valued `g`.
pub fn central_difference_vec(
    ladder: &[f64],
    g: &(dyn Fn(f64) -> Result<Vec<f64>> + Sync),
) -> Result<Vec<FdResult>> {
    if ladder.is_empty() {
        return Err(GeomError::BadParameters("empty s ladder".into()));
    }
    let vals: Result<Vec<(Vec<f64>, Vec<f64>)>> =
        ladder.par_iter().map(|&s| Ok((g(s)?, g(-s)?))).collect();
    let vals = vals?;
    let dim = vals[0].0.len();
    let ratio = if ladder.len() > 1 {
        ladder[0] / ladder[1]
    } else {
        2.0
    };
    let smin = ladder.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((0..dim)
        .map(|c| {
            let quotients: Vec<f64> = ladder
                .iter()
                .zip(&vals)
                .map(|(s, (p, m))| (p[c] - m[c]) / (2.0 * s))
                .collect();
            let mut level = quotients.clone();
            let mut factor = ratio * ratio;
            while level.len() > 1 {
                level = level
                    .windows(2)
                    .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
                    .collect();
                factor *= ratio * ratio;
            }
            let value = level[0];
            let scale = vals
                .iter()
                .fold(0.0f64, |a, (p, m)| a.max(p[c].abs()).max(m[c].abs()));
            let floor = 1e-11 * (1.0 + scale) / smin;
            let errs: Vec<f64> = quotients.iter().map(|q| (q - value).abs()).collect();
            let slope = if ladder.len() < 2 || errs.iter().any(|&e| e <= floor) {
                f64::INFINITY
            } else {
                let xs: Vec<f64> = ladder.iter().map(|s| s.ln()).collect();
                let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
                let n = xs.len() as f64;
                let mx = xs.iter().sum::<f64>() / n;
                let my = ys.iter().sum::<f64>() / n;
                let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
                let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
                num / den
            };
            FdResult {
                quotients,
                value,
                slope,
            }
        })
        .collect())
}

/// Area and Area_II from one pass over the grid.
pub fn area_pair(imm: &dyn Immersion, grid: &QuadratureGrid) -> Result<(f64, f64)> {
    let vals: Result<Vec<(f64, f64)>> = grid
        .nodes
        .par_iter()
        .zip(&grid.weights)
        .map(|(u, w)| {
            let sp = surface_point(imm, u)?;
            let dg = determinant(&sp.first).abs().sqrt() * w;
            Ok((dg, dg * sp.det_a.abs().sqrt()))
        })
        .collect();
    let vals = vals?;
    Ok((
        vals.iter().map(|v| v.0).sum(),
        vals.iter().map(|v| v.1).sum(),
    ))
}

fn rel_gap(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / rhs.abs().max(f64::MIN_POSITIVE)
}

#[derive(Clone, Debug, Serialize)]
pub struct FirstVariation {
    pub lhs_area: f64,
    pub rhs_area: f64,
    pub lhs_area_ii: f64,
    pub rhs_area_ii: f64,
    pub gap_area: f64,
    pub gap_area_ii: f64,
    pub abs_gap_area_ii: f64,
    pub slope_area: f64,
    pub slope_area_ii: f64,
    pub s_ladder: Vec<f64>,
    pub grid: Vec<usize>,
}

/// d/ds Area and d/ds Area_II by finite differences against
/// −mα∫fH dΩ and −α∫f H_II dΩ_II.
pub fn first_variation_check(
    imm: Arc<dyn Immersion>,
    f: Arc<ScalarField>,
    grid: &QuadratureGrid,
    mode: DeformMode,
    ladder: &[f64],
) -> Result<FirstVariation> {
    let m = imm.param_dim() as f64;
    let rhs: Result<Vec<(f64, f64)>> = grid
        .nodes
        .par_iter()
        .zip(&grid.weights)
        .map(|(u, w)| {
            let p = ii_geometry(imm.as_ref(), u)?;
            let lm = Layout::get(imm.param_dim(), 0);
            let uj: Vec<Jet> = u.iter().map(|&v| Jet::constant_in(lm, 0, v)).collect();
            let xj = imm.map_jets(&uj)?;
            let fv = (f)(&uj, &xj).value();
            let dom = determinant(&p.base.first).abs().sqrt() * w;
            let a = p.base.alpha;
            Ok((
                -m * a * fv * p.base.mean_curvature * dom,
                -a * fv * p.h_ii.variational * dom * p.base.det_a.abs().sqrt(),
            ))
        })
        .collect();
    let rhs = rhs?;
    let rhs_area: f64 = rhs.iter().map(|r| r.0).sum();
    let rhs_area_ii: f64 = rhs.iter().map(|r| r.1).sum();
    let deformed = |s: f64| -> Deformation { normal_deform(imm.clone(), f.clone(), s, mode) };
    let fd = central_difference_vec(ladder, &|s| {
        let (a, b) = area_pair(&deformed(s), grid)?;
        Ok(vec![a, b])
    })?;
    let (fd_a, fd_ii) = (&fd[0], &fd[1]);
    let largest = ladder.iter().cloned().fold(0.0, f64::max);
    check_epsilon_class(&deformed(largest), grid)?;
    check_epsilon_class(&deformed(-largest), grid)?;
    Ok(FirstVariation {
        lhs_area: fd_a.value,
        rhs_area,
        lhs_area_ii: fd_ii.value,
        rhs_area_ii,
        gap_area: rel_gap(fd_a.value, rhs_area),
        gap_area_ii: rel_gap(fd_ii.value, rhs_area_ii),
        abs_gap_area_ii: (fd_ii.value - rhs_area_ii).abs(),
        slope_area: fd_a.slope,
        slope_area_ii: fd_ii.slope,
        s_ladder: ladder.to_vec(),
        grid: grid.shape(),
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SecondFormVariation {
    pub numeric: f64,
    pub formula: f64,
    pub gap: f64,
}

/// d/ds II(μ_s)(X, Y) at u against α f (R̄(U,X,U,Y) − III(X,Y)) + Hess_f(X,Y).
pub fn second_form_variation_check(
    imm: Arc<dyn Immersion>,
    f: Arc<ScalarField>,
    u: &[f64],
    x: &[f64],
    y: &[f64],
    mode: DeformMode,
) -> Result<SecondFormVariation> {
    let m = imm.param_dim();
    if x.len() != m || y.len() != m {
        return Err(GeomError::BadParameters(
            "tangent vectors have wrong dimension".into(),
        ));
    }
    let ad = adapted_jets(imm.as_ref(), u, 2, true)?;
    let n = ad.n();
    let sp = crate::hypersurface::SurfacePointData::from_adapted(&ad);
    let rb = ad.riem_values()?;
    let un: Vec<f64> = ad.normal.iter().map(|v| v.value()).collect();
    let mut ruxuy = 0.0;
    for a in 0..n {
        for b in 0..n {
            for i in 0..m {
                for j in 0..m {
                    ruxuy += rb[ix4(n, a, i, b, j)] * un[a] * x[i] * un[b] * y[j];
                }
            }
        }
    }
    let iii = crate::linalg::bilinear(&sp.third, x, y);
    let lm = Layout::get(m, 2);
    let uj = Jet::seed(lm, 2, u);
    let xj = imm.map_jets(&uj)?;
    let fj = (f)(&uj, &xj);
    let (gam, _) = intrinsic_curvature(
        &ad.g
            .iter()
            .map(|r| r.iter().map(|v| v.clone().truncate(1)).collect())
            .collect::<Vec<_>>(),
    )?;
    let mut hess = 0.0;
    for i in 0..m {
        for j in 0..m {
            let mut h = fj.d2(i, j);
            for k in 0..m {
                h -= gam[ix3(m, k, i, j)].value() * fj.d1(k);
            }
            hess += h * x[i] * y[j];
        }
    }
    let formula = ad.alpha * fj.value() * (ruxuy - iii) + hess;
    let fd = central_difference(&S_LADDER, &|s| {
        let d = normal_deform(imm.clone(), f.clone(), s, mode);
        let p = surface_point(&d, u)?;
        Ok(crate::linalg::bilinear(&p.second, x, y))
    })?;
    let gap = (fd.value - formula).abs() / (1.0 + formula.abs());
    Ok(SecondFormVariation {
        numeric: fd.value,
        formula,
        gap,
    })
}
