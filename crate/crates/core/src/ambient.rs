//! Ambient semi-Riemannian charts, their curvature jets, and geodesics.

use crate::error::{GeomError, Result};
use crate::jet::{Dual, Jet, Layout, Real};
use crate::linalg::{inverse_det, negative_index, Mat};
use crate::riemann::{connection, ix3, ricci_scalar};
use serde::{Deserialize, Serialize};

/// Smallest |det ḡ| accepted anywhere.
pub const METRIC_DET_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum CustomKind {
    /// δ_ij + a·sin(x_i + x_j + 0.3(i+j)): generic, non-diagonal, Riemannian.
    PerturbedEuclidean,
    /// Same perturbation on the Minkowski form diag(−1, 1, …).
    PerturbedMinkowski,
    /// exp(2a·e^{−|x|²}) δ_ij: conformally flat with varying curvature.
    ConformalBump,
}

#[derive(Clone, Debug)]
pub enum MetricModel {
    SpaceForm { cbar: f64, eps: Vec<f64> },
    Product(Box<MetricChart>, Box<MetricChart>),
    Custom { kind: CustomKind, amp: f64 },
}

/// A single chart of the ambient manifold: `ḡ_ij(x)` on an open box.
#[derive(Clone, Debug)]
pub struct MetricChart {
    pub dim: usize,
    pub index: usize,
    pub model: MetricModel,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub label: String,
}

/// JSON descriptor of a chart.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    SpaceForm {
        dim: usize,
        #[serde(default)]
        index: usize,
        #[serde(rename = "Cbar")]
        cbar: f64,
    },
    Product {
        factors: Vec<ChartSpec>,
    },
    Custom {
        name: String,
        dim: usize,
        #[serde(default)]
        amplitude: Option<f64>,
    },
}

impl ChartSpec {
    pub fn build(&self) -> Result<MetricChart> {
        match self {
            ChartSpec::SpaceForm { dim, index, cbar } => space_form(*dim, *cbar, *index),
            ChartSpec::Product { factors } => {
                let mut it = factors.iter();
                let first = it
                    .next()
                    .ok_or_else(|| GeomError::BadParameters("product needs factors".into()))?
                    .build()?;
                it.try_fold(first, |acc, f| product_chart(&acc, &f.build()?))
            }
            ChartSpec::Custom {
                name,
                dim,
                amplitude,
            } => custom_chart(name, *dim, *amplitude),
        }
    }
}

/// Constant-curvature chart ḡ_ij = ε_i δ_ij / (1 + C⟨x,x⟩_ε/4)².
pub fn space_form(dim: usize, cbar: f64, index: usize) -> Result<MetricChart> {
    if index > 1 {
        return Err(GeomError::UnsupportedSignature(format!("index {index}")));
    }
    if dim < 1 {
        return Err(GeomError::BadParameters(format!("dimension {dim} < 1")));
    }
    let eps: Vec<f64> = (0..dim)
        .map(|i| if i < index { -1.0 } else { 1.0 })
        .collect();
    let half = if cbar == 0.0 {
        1e3
    } else if cbar > 0.0 && index == 0 {
        6.0 / cbar.sqrt()
    } else {
        2.0 / cbar.abs().sqrt()
    };
    let label = match (index, cbar.partial_cmp(&0.0)) {
        (0, Some(std::cmp::Ordering::Equal)) => format!("E{dim}"),
        (0, Some(std::cmp::Ordering::Greater)) => format!("S{dim}({cbar})"),
        (0, _) => format!("H{dim}({cbar})"),
        _ => format!("Q{dim}_1({cbar})"),
    };
    Ok(MetricChart {
        dim,
        index,
        model: MetricModel::SpaceForm { cbar, eps },
        lower: vec![-half; dim],
        upper: vec![half; dim],
        label,
    })
}

/// Riemannian product with block-diagonal metric.
pub fn product_chart(a: &MetricChart, b: &MetricChart) -> Result<MetricChart> {
    if a.index != 0 || b.index != 0 {
        return Err(GeomError::UnsupportedSignature(
            "product factors must be Riemannian".into(),
        ));
    }
    let mut lower = a.lower.clone();
    lower.extend(&b.lower);
    let mut upper = a.upper.clone();
    upper.extend(&b.upper);
    Ok(MetricChart {
        dim: a.dim + b.dim,
        index: 0,
        model: MetricModel::Product(Box::new(a.clone()), Box::new(b.clone())),
        lower,
        upper,
        label: format!("{}x{}", a.label, b.label),
    })
}

/// Registry of built-in non-symmetric metrics.
pub fn custom_chart(name: &str, dim: usize, amplitude: Option<f64>) -> Result<MetricChart> {
    let (kind, index, amp) = match name {
        "perturbed_euclidean" => (CustomKind::PerturbedEuclidean, 0, amplitude.unwrap_or(0.1)),
        "perturbed_minkowski" => (CustomKind::PerturbedMinkowski, 1, amplitude.unwrap_or(0.05)),
        "conformal_bump" => (CustomKind::ConformalBump, 0, amplitude.unwrap_or(0.3)),
        _ => {
            return Err(GeomError::BadParameters(format!(
                "unknown custom metric '{name}'"
            )))
        }
    };
    if dim < 2 {
        return Err(GeomError::BadParameters(format!("dimension {dim} < 2")));
    }
    if kind != CustomKind::ConformalBump && amp.abs() * dim as f64 >= 0.9 {
        return Err(GeomError::BadParameters(
            "amplitude too large for a definite signature".into(),
        ));
    }
    Ok(MetricChart {
        dim,
        index,
        model: MetricModel::Custom { kind, amp },
        lower: vec![-1.5; dim],
        upper: vec![1.5; dim],
        label: format!("{name}{dim}"),
    })
}

impl MetricChart {
    /// Metric components at `x`, in any scalar arithmetic.
    pub fn metric<S: Real>(&self, x: &[S]) -> Mat<S> {
        let n = self.dim;
        match &self.model {
            MetricModel::SpaceForm { cbar, eps } => {
                let mut q = S::cst(0.0);
                for i in 0..n {
                    q = q + x[i].clone() * x[i].clone() * eps[i];
                }
                let phi = q * (cbar / 4.0) + 1.0;
                let w = (phi.clone() * phi).recip();
                let mut g = vec![vec![S::cst(0.0); n]; n];
                for i in 0..n {
                    g[i][i] = w.clone() * eps[i];
                }
                g
            }
            MetricModel::Product(a, b) => {
                let ga = a.metric(&x[..a.dim]);
                let gb = b.metric(&x[a.dim..]);
                let mut g = vec![vec![S::cst(0.0); n]; n];
                for i in 0..a.dim {
                    for j in 0..a.dim {
                        g[i][j] = ga[i][j].clone();
                    }
                }
                for i in 0..b.dim {
                    for j in 0..b.dim {
                        g[a.dim + i][a.dim + j] = gb[i][j].clone();
                    }
                }
                g
            }
            MetricModel::Custom { kind, amp } => {
                let mut g = vec![vec![S::cst(0.0); n]; n];
                match kind {
                    CustomKind::PerturbedEuclidean | CustomKind::PerturbedMinkowski => {
                        for i in 0..n {
                            for j in i..n {
                                let arg = x[i].clone() + x[j].clone() + 0.3 * (i + j) as f64;
                                let mut v = arg.sin() * *amp;
                                if i == j {
                                    let e = if *kind == CustomKind::PerturbedMinkowski && i == 0 {
                                        -1.0
                                    } else {
                                        1.0
                                    };
                                    v = v + e;
                                }
                                g[i][j] = v.clone();
                                g[j][i] = v;
                            }
                        }
                    }
                    CustomKind::ConformalBump => {
                        let mut r2 = S::cst(0.0);
                        for xi in x.iter().take(n) {
                            r2 = r2 + xi.clone() * xi.clone();
                        }
                        let w = ((-r2).exp() * (2.0 * amp)).exp();
                        for (i, row) in g.iter_mut().enumerate() {
                            row[i] = w.clone();
                        }
                    }
                }
                g
            }
        }
    }

    pub fn metric_at(&self, x: &[f64]) -> Mat<f64> {
        self.metric(x)
    }

    /// Inside the box and, for conformal charts, away from the conformal
    /// factor's zero set.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        if x.len() != self.dim {
            return false;
        }
        if !x
            .iter()
            .zip(&self.lower)
            .zip(&self.upper)
            .all(|((v, lo), hi)| v > lo && v < hi)
        {
            return false;
        }
        match &self.model {
            MetricModel::SpaceForm { cbar, eps } => {
                let q: f64 = x.iter().zip(eps).map(|(v, e)| e * v * v).sum();
                1.0 + cbar * q / 4.0 > 0.05
            }
            MetricModel::Product(a, b) => a.in_domain(&x[..a.dim]) && b.in_domain(&x[a.dim..]),
            MetricModel::Custom { .. } => true,
        }
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if !self.in_domain(x) {
            return Err(GeomError::OutOfDomain(format!("{:?} in {}", x, self.label)));
        }
        Ok(())
    }

    /// Constant sectional curvature, when the chart is a space form.
    pub fn constant_curvature(&self) -> Option<f64> {
        match &self.model {
            MetricModel::SpaceForm { cbar, .. } => Some(*cbar),
            _ => None,
        }
    }

    /// Metric component jets of the given order in `dim` variables at `x0`.
    pub fn metric_jets(&self, x0: &[f64], order: usize) -> Mat<Jet> {
        let l = Layout::get(self.dim, order.max(1));
        let x = Jet::seed(l, order, x0);
        self.metric(&x)
    }

    /// Christoffel symbols Γ^k_{ij} (flat, ix3(k,i,j)) at a point given in
    /// any scalar arithmetic, via forward-mode first derivatives.
    pub fn christoffel_generic<S: Real>(&self, x: &[S]) -> Option<Vec<S>> {
        let n = self.dim;
        let xd: Vec<Dual<S>> = x
            .iter()
            .enumerate()
            .map(|(i, v)| Dual::variable(v.clone(), i, n))
            .collect();
        let gd = self.metric(&xd);
        let g: Mat<S> = gd
            .iter()
            .map(|r| r.iter().map(|d| d.v.clone()).collect())
            .collect();
        let dg = |k: usize, i: usize, j: usize| -> S {
            let e = &gd[i][j].g;
            if e.is_empty() {
                S::cst(0.0)
            } else {
                e[k].clone()
            }
        };
        let (ginv, det) = inverse_det(&g, 1e-300)?;
        if det.val().abs() <= METRIC_DET_TOL {
            return None;
        }
        let mut low = Vec::with_capacity(n * n * n);
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    low.push((dg(i, j, l) + dg(j, i, l) - dg(l, i, j)) * 0.5);
                }
            }
        }
        let mut gam = Vec::with_capacity(n * n * n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = ginv[k][0].clone() * low[ix3(n, 0, i, j)].clone();
                    for l in 1..n {
                        s = s + ginv[k][l].clone() * low[ix3(n, l, i, j)].clone();
                    }
                    gam.push(s);
                }
            }
        }
        Some(gam)
    }
}

/// Γ^k_{ij} at `x` from first-order metric jets.
pub fn christoffel(chart: &MetricChart, x: &[f64]) -> Result<Vec<f64>> {
    chart.check_point(x)?;
    let g = chart.metric_jets(x, 1);
    let con = connection(&g, METRIC_DET_TOL)
        .ok_or_else(|| GeomError::DegenerateMetric(format!("at {:?}", x)))?;
    Ok(con.gamma.iter().map(|j| j.value()).collect())
}

/// Pointwise curvature data up to second covariant derivatives of R̄.
#[derive(Clone, Debug)]
pub struct CurvatureJet {
    pub point: Vec<f64>,
    pub dim: usize,
    pub order: usize,
    pub metric: Mat<f64>,
    pub metric_inv: Mat<f64>,
    /// Γ^k_{ij} at ix3(k,i,j).
    pub gamma: Vec<f64>,
    /// R̄_{ijkl} at ix4.
    pub riem: Vec<f64>,
    pub ricci: Mat<f64>,
    pub scalar: f64,
    /// (∇R̄)_{a;ijkl} at ix5(a,i,j,k,l).
    pub nabla_riem: Vec<f64>,
    /// (∇²R̄)_{ab;ijkl}, flat index (a·n + b)·n⁴ + ix4(i,j,k,l); `a` is the
    /// outer derivative.
    pub nabla2_riem: Vec<f64>,
    /// (∇Ric̄)_{a;jl} at ix3.
    pub nabla_ricci: Vec<f64>,
    /// (∇²Ric̄)_{ab;jl} at ix4.
    pub nabla2_ricci: Vec<f64>,
    pub hess_scalar: Mat<f64>,
    pub lap_ricci: Mat<f64>,
    pub grad_scalar: Vec<f64>,
}

/// Covariant derivative of a fully lowered rank-`p` tensor field given by
/// component jets: output index a·n^p + I.
pub fn covariant_derivative(n: usize, p: usize, t: &[Jet], gamma: &[Jet]) -> Vec<Jet> {
    let np = n.pow(p as u32);
    let mut out = Vec::with_capacity(n * np);
    let mut idx = vec![0usize; p];
    for a in 0..n {
        for flat in 0..np {
            let mut r = flat;
            for s in (0..p).rev() {
                idx[s] = r % n;
                r /= n;
            }
            let mut acc = t[flat].diff(a);
            for s in 0..p {
                let stride = n.pow((p - 1 - s) as u32);
                let base = flat - idx[s] * stride;
                for q in 0..n {
                    let gq = &gamma[ix3(n, q, a, idx[s])];
                    acc -= &(gq * &t[base + q * stride]);
                }
            }
            out.push(acc);
        }
    }
    out
}

/// Curvature jet at `x` with covariant derivatives up to `order` ∈ {0,1,2}.
pub fn curvature_jet(chart: &MetricChart, x: &[f64], order: usize) -> Result<CurvatureJet> {
    if order > 2 {
        return Err(GeomError::InsufficientSmoothness(format!(
            "order {order} > 2"
        )));
    }
    chart.check_point(x)?;
    let n = chart.dim;
    let g = chart.metric_jets(x, 2 + order);
    let con = connection(&g, METRIC_DET_TOL)
        .ok_or_else(|| GeomError::DegenerateMetric(format!("at {:?}", x)))?;
    let riem_j = con.riemann();
    let metric: Mat<f64> = g
        .iter()
        .map(|r| r.iter().map(|v| v.value()).collect())
        .collect();
    let metric_inv: Mat<f64> = con
        .ginv
        .iter()
        .map(|r| r.iter().map(|v| v.value()).collect())
        .collect();
    let riem: Vec<f64> = riem_j.iter().map(|v| v.value()).collect();
    let (ricci, scalar) = ricci_scalar(n, &metric_inv, &riem);
    let gamma: Vec<f64> = con.gamma.iter().map(|v| v.value()).collect();

    let mut jet = CurvatureJet {
        point: x.to_vec(),
        dim: n,
        order,
        metric,
        metric_inv: metric_inv.clone(),
        gamma,
        riem,
        ricci,
        scalar,
        nabla_riem: vec![],
        nabla2_riem: vec![],
        nabla_ricci: vec![],
        nabla2_ricci: vec![],
        hess_scalar: vec![vec![0.0; n]; n],
        lap_ricci: vec![vec![0.0; n]; n],
        grad_scalar: vec![0.0; n],
    };
    if order == 0 {
        return Ok(jet);
    }
    let n4 = n.pow(4);
    let nr = covariant_derivative(n, 4, &riem_j, &con.gamma);
    jet.nabla_riem = nr.iter().map(|v| v.value()).collect();
    let contract = |t: &[f64], off: usize| -> Mat<f64> {
        let mut m = vec![vec![0.0; n]; n];
        for j in 0..n {
            for l in 0..n {
                for i in 0..n {
                    for k in 0..n {
                        m[j][l] += metric_inv[i][k] * t[off + crate::riemann::ix4(n, i, j, k, l)];
                    }
                }
            }
        }
        m
    };
    let trace = |m: &Mat<f64>| -> f64 {
        let mut s = 0.0;
        for j in 0..n {
            for l in 0..n {
                s += metric_inv[j][l] * m[j][l];
            }
        }
        s
    };
    jet.nabla_ricci = vec![0.0; n * n * n];
    for a in 0..n {
        let m = contract(&jet.nabla_riem, a * n4);
        jet.grad_scalar[a] = trace(&m);
        for j in 0..n {
            for l in 0..n {
                jet.nabla_ricci[ix3(n, a, j, l)] = m[j][l];
            }
        }
    }
    if order == 1 {
        return Ok(jet);
    }
    let nr2 = covariant_derivative(n, 5, &nr, &con.gamma);
    jet.nabla2_riem = nr2.iter().map(|v| v.value()).collect();
    jet.nabla2_ricci = vec![0.0; n.pow(4)];
    for a in 0..n {
        for b in 0..n {
            let m = contract(&jet.nabla2_riem, (a * n + b) * n4);
            jet.hess_scalar[a][b] = trace(&m);
            for j in 0..n {
                for l in 0..n {
                    jet.nabla2_ricci[crate::riemann::ix4(n, a, b, j, l)] = m[j][l];
                    jet.lap_ricci[j][l] += metric_inv[a][b] * m[j][l];
                }
            }
        }
    }
    Ok(jet)
}

impl CurvatureJet {
    pub fn r(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.riem[crate::riemann::ix4(self.dim, i, j, k, l)]
    }
}

/// Integrates the geodesic equation with initial velocity `v` for parameter
/// time `t` using `steps` classical RK4 steps, in any scalar arithmetic.
pub fn geodesic_flow<S: Real>(
    chart: &MetricChart,
    x0: Vec<S>,
    v0: Vec<S>,
    t: f64,
    steps: usize,
) -> Result<(Vec<S>, Vec<S>)> {
    let n = chart.dim;
    let h = t / steps as f64;
    let accel = |x: &[S], v: &[S]| -> Result<Vec<S>> {
        let xv: Vec<f64> = x.iter().map(|s| s.val()).collect();
        if !chart.in_domain(&xv) {
            return Err(GeomError::LeftDomain(format!("{:?}", xv)));
        }
        let gam = chart
            .christoffel_generic(x)
            .ok_or_else(|| GeomError::DegenerateMetric(format!("at {:?}", xv)))?;
        let mut a = Vec::with_capacity(n);
        for k in 0..n {
            let mut s = S::cst(0.0);
            for i in 0..n {
                let mut inner = S::cst(0.0);
                for j in 0..n {
                    inner = inner + gam[ix3(n, k, i, j)].clone() * v[j].clone();
                }
                s = s + inner * v[i].clone();
            }
            a.push(-s);
        }
        Ok(a)
    };
    let axpy = |x: &[S], k: &[S], c: f64| -> Vec<S> {
        x.iter()
            .zip(k)
            .map(|(a, b)| a.clone() + b.clone() * c)
            .collect()
    };
    let (mut x, mut v) = (x0, v0);
    for _ in 0..steps {
        let k1x = v.clone();
        let k1v = accel(&x, &v)?;
        let x2 = axpy(&x, &k1x, h / 2.0);
        let v2 = axpy(&v, &k1v, h / 2.0);
        let k2v = accel(&x2, &v2)?;
        let x3 = axpy(&x, &v2, h / 2.0);
        let v3 = axpy(&v, &k2v, h / 2.0);
        let k3v = accel(&x3, &v3)?;
        let x4 = axpy(&x, &v3, h);
        let v4 = axpy(&v, &k3v, h);
        let k4v = accel(&x4, &v4)?;
        for i in 0..n {
            let dx = k1x[i].clone() + v2[i].clone() * 2.0 + v3[i].clone() * 2.0 + v4[i].clone();
            let dv = k1v[i].clone() + k2v[i].clone() * 2.0 + k3v[i].clone() * 2.0 + k4v[i].clone();
            x[i] = x[i].clone() + dx * (h / 6.0);
            v[i] = v[i].clone() + dv * (h / 6.0);
        }
    }
    let xv: Vec<f64> = x.iter().map(|s| s.val()).collect();
    if !chart.in_domain(&xv) {
        return Err(GeomError::LeftDomain(format!("{:?}", xv)));
    }
    Ok((x, v))
}

/// Point at arclength `r` along the unit-speed geodesic from `n` with
/// initial velocity `v`: RK4 with step r/1024 and a halving error check.
pub fn geodesic(chart: &MetricChart, n: &[f64], v: &[f64], r: f64) -> Result<Vec<f64>> {
    Ok(geodesic_with_velocity(chart, n, v, r)?.0)
}

pub fn geodesic_with_velocity(
    chart: &MetricChart,
    n: &[f64],
    v: &[f64],
    r: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    chart.check_point(n)?;
    if r < 0.0 || !r.is_finite() {
        return Err(GeomError::BadParameters(format!("arclength {r}")));
    }
    let g = chart.metric_at(n);
    let vv = crate::linalg::bilinear(&g, v, v);
    if (vv.abs() - 1.0).abs() > 1e-9 {
        return Err(GeomError::BadDirection(format!("ḡ(v,v) = {vv}")));
    }
    if r == 0.0 {
        return Ok((n.to_vec(), v.to_vec()));
    }
    let mut steps = 1024;
    let mut coarse = geodesic_flow(chart, n.to_vec(), v.to_vec(), r, steps)?;
    loop {
        steps *= 2;
        let fine = geodesic_flow(chart, n.to_vec(), v.to_vec(), r, steps)?;
        let err = coarse
            .0
            .iter()
            .zip(&fine.0)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        let scale = 1.0 + fine.0.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        if err <= 1e-9 * scale {
            let gx = chart.metric_at(&fine.0);
            let speed = crate::linalg::bilinear(&gx, &fine.1, &fine.1);
            if (speed - vv).abs() > 1e-9 {
                return Err(GeomError::StepFailure(format!(
                    "speed drift {}",
                    speed - vv
                )));
            }
            return Ok(fine);
        }
        if steps > 1 << 16 {
            return Err(GeomError::StepFailure(format!(
                "no convergence, error {err}"
            )));
        }
        coarse = fine;
    }
}

/// ḡ(x)-orthonormal frame at `x`, Gram–Schmidt on the chart basis with the
/// given first vector (normalized) and ties to the lowest index.
pub fn orthonormal_frame(
    chart: &MetricChart,
    x: &[f64],
    e0: Option<&[f64]>,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let g = chart.metric_at(x);
    let n = chart.dim;
    let mut cands: Vec<Vec<f64>> = Vec::new();
    if let Some(e) = e0 {
        cands.push(e.to_vec());
    }
    for i in 0..n {
        cands.push((0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect());
    }
    let mut frame: Vec<Vec<f64>> = Vec::new();
    let mut signs = Vec::new();
    for c in cands {
        if frame.len() == n {
            break;
        }
        let mut w = c.clone();
        for (f, s) in frame.iter().zip(&signs) {
            let p = crate::linalg::bilinear(&g, &w, f) * s;
            for k in 0..n {
                w[k] -= p * f[k];
            }
        }
        let nn = crate::linalg::bilinear(&g, &w, &w);
        if nn.abs() < 1e-10 {
            if frame.is_empty() && e0.is_some() {
                return Err(GeomError::BadDirection("null or zero first vector".into()));
            }
            continue;
        }
        frame.push(w.iter().map(|v| v / nn.abs().sqrt()).collect());
        signs.push(nn.signum());
    }
    if frame.len() < n {
        return Err(GeomError::DegenerateMetric(
            "frame completion failed".into(),
        ));
    }
    Ok((frame, signs))
}

/// Largest eigenvalue of the curvature operator on bivectors at `x`, an
/// upper bound for the sectional curvatures there.
pub fn curvature_operator_max(jet: &CurvatureJet) -> f64 {
    let n = jet.dim;
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    // curvature components in an orthonormal frame
    let frame = match orthonormal_frame_from_metric(&jet.metric) {
        Some(f) => f,
        None => return f64::INFINITY,
    };
    let rf = |a: usize, b: usize, c: usize, d: usize| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        s += jet.r(i, j, k, l)
                            * frame[a][i]
                            * frame[b][j]
                            * frame[c][k]
                            * frame[d][l];
                    }
                }
            }
        }
        s
    };
    let p = pairs.len();
    let m = nalgebra::DMatrix::from_fn(p, p, |x, y| {
        rf(pairs[x].0, pairs[x].1, pairs[y].0, pairs[y].1)
    });
    let m = (&m + m.transpose()) * 0.5;
    nalgebra::SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn orthonormal_frame_from_metric(g: &Mat<f64>) -> Option<Vec<Vec<f64>>> {
    crate::linalg::pivoted_gram_schmidt(g, 1e-12).map(|(f, _)| f)
}

/// Signature check at sampled points: returns the first offending point.
pub fn check_signature(chart: &MetricChart, points: &[Vec<f64>]) -> Result<()> {
    for x in points {
        let g = chart.metric_at(x);
        let det = crate::linalg::determinant(&g);
        if det.abs() <= METRIC_DET_TOL {
            return Err(GeomError::DegenerateMetric(format!("det {det} at {:?}", x)));
        }
        if negative_index(&g) != chart.index {
            return Err(GeomError::UnsupportedSignature(format!(
                "signature change at {:?}",
                x
            )));
        }
    }
    Ok(())
}
