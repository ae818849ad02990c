//! Immersed hypersurface patches and their fundamental forms.
//!
//! Pointwise quantities are computed in adapted coordinates
//! (u, t) ↦ X(u) + t·n0, where n0 is the chart-Euclidean normal of the patch
//! at the base point. The hypersurface is then t = 0, the induced metric is
//! the (u,u) block of the pulled-back metric G, the unit normal is
//! U = σ G^{·t}/√|G^{tt}|, and II_ij = α ḡ(∇̄_{∂i}∂_j, U) is read off Γ^t_ij.

use crate::ambient::MetricChart;
use crate::jet::{Jet, Layout, Real};
use crate::linalg::{
    bilinear, determinant, generalized_eigen, inverse_det, pivoted_gram_schmidt, to_dmatrix,
    to_f64, Mat,
};
use crate::riemann::{connection, ix3, ix4};
use crate::{GeomError, Result};
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// How the unit normal is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Orientation {
    /// The normal with tr A > 0, falling back to the cofactor normal where
    /// tr A vanishes.
    Convex,
    /// Sign relative to the cofactor normal n0 (only the sign is used).
    Fixed(f64),
}

/// A parametrized hypersurface patch u ∈ box ↦ X(u) in an ambient chart of
/// dimension `param_dim() + 1`.
pub trait Immersion: Send + Sync {
    fn param_dim(&self) -> usize;
    fn ambient(&self) -> &MetricChart;
    fn param_domain(&self) -> (Vec<f64>, Vec<f64>);
    /// Chart coordinates of X for parameter jets of any layout.
    fn map_jets(&self, u: &[Jet]) -> Result<Vec<Jet>>;
    fn label(&self) -> String;

    fn orientation_at(&self, _u: &[f64]) -> Result<Orientation> {
        Ok(Orientation::Convex)
    }

    fn check_param(&self, u: &[f64]) -> Result<()> {
        let (lo, hi) = self.param_domain();
        if u.len() != self.param_dim() {
            return Err(GeomError::BadParameters(format!(
                "expected {} parameters, got {}",
                self.param_dim(),
                u.len()
            )));
        }
        let slack = 1e-9;
        for i in 0..u.len() {
            if !u[i].is_finite() || u[i] < lo[i] - slack || u[i] > hi[i] + slack {
                return Err(GeomError::OutOfDomain(format!(
                    "parameter {:?} outside {:?}..{:?}",
                    u, lo, hi
                )));
            }
        }
        Ok(())
    }

    fn map(&self, u: &[f64]) -> Result<Vec<f64>> {
        let j: Vec<Jet> = u.iter().map(|&v| Jet::constant(v)).collect();
        Ok(self.map_jets(&j)?.iter().map(|x| x.value()).collect())
    }
}

/// Hyperspherical coordinates on S^m: u = (θ_1, …, θ_{m−1}, φ).
/// u = (π/2, …, π/2, 0) maps to e_0.
pub fn sphere_point<S: Real>(u: &[S]) -> Vec<S> {
    let m = u.len();
    let phi = u[m - 1].clone();
    let th = &u[..m - 1];
    let prod = |count: usize| -> S {
        let mut p = S::cst(1.0);
        for t in th.iter().take(count) {
            p = p * t.clone().sin();
        }
        p
    };
    let mut out = Vec::with_capacity(m + 1);
    let base = prod(m - 1);
    out.push(base.clone() * phi.clone().cos());
    out.push(base * phi.sin());
    for j in 2..=m {
        out.push(prod(m - j) * th[m - j].clone().cos());
    }
    out
}

fn sphere_domain(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![0.0; m];
    let mut hi = vec![std::f64::consts::PI; m];
    hi[m - 1] = 2.0 * std::f64::consts::PI;
    lo[m - 1] = 0.0;
    (lo, hi)
}

/// Polynomial Σ c_e x^e.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Poly {
    pub terms: Vec<(Vec<u8>, f64)>,
}

impl Poly {
    pub fn eval<S: Real>(&self, x: &[S]) -> S {
        let mut acc = S::cst(0.0);
        for (e, c) in &self.terms {
            let mut t = S::cst(*c);
            for (xi, &p) in x.iter().zip(e) {
                if p > 0 {
                    t = t * xi.clone().powi(p as i32);
                }
            }
            acc = acc + t;
        }
        acc
    }
}

#[derive(Clone, Debug)]
enum Kind {
    /// x = c + r·a∘(1 + P(ω))ω.
    RadialGraph {
        center: Vec<f64>,
        radius: f64,
        axes: Vec<f64>,
        poly: Poly,
    },
    /// x = (u, p(u)).
    Graph {
        poly: Poly,
    },
    Catenoid {
        waist: f64,
    },
    /// S^k(r1) × S^{m−k}(r2) ⊂ S^{m+1}(1/√C), r1² + r2² = 1/C, through the
    /// stereographic chart.
    ProductSphere {
        k: usize,
        r1: f64,
        r2: f64,
        big_r: f64,
    },
}

/// The built-in immersions in closed form.
#[derive(Clone, Debug)]
pub struct StandardImmersion {
    chart: MetricChart,
    kind: Kind,
    m: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    orientation: Orientation,
    label: String,
}

impl StandardImmersion {
    pub fn eval<S: Real>(&self, u: &[S]) -> Vec<S> {
        let m = self.m;
        match &self.kind {
            Kind::RadialGraph {
                center,
                radius,
                axes,
                poly,
            } => {
                let w = sphere_point(u);
                let f = poly.eval(&w) + 1.0;
                (0..=m)
                    .map(|i| f.clone() * w[i].clone() * (radius * axes[i]) + center[i])
                    .collect()
            }
            Kind::Graph { poly } => {
                let mut x: Vec<S> = u.to_vec();
                x.push(poly.eval(u));
                x
            }
            Kind::Catenoid { waist } => {
                let c = *waist;
                let rr = (u[0].clone() / c).cosh() * c;
                vec![
                    rr.clone() * u[1].clone().cos(),
                    rr * u[1].clone().sin(),
                    u[0].clone(),
                ]
            }
            Kind::ProductSphere { k, r1, r2, big_r } => {
                let k = *k;
                let mut q: Vec<S> = sphere_point(&u[..k])
                    .into_iter()
                    .map(|v| v * (*r1 / big_r))
                    .collect();
                q.extend(sphere_point(&u[k..]).into_iter().map(|v| v * (*r2 / big_r)));
                let den = (q[0].clone() + 1.0).recip() * (2.0 * big_r);
                q[1..].iter().map(|v| v.clone() * den.clone()).collect()
            }
        }
    }

    pub fn with_orientation(mut self, o: Orientation) -> Self {
        self.orientation = o;
        self
    }

    pub fn with_domain(mut self, lo: Vec<f64>, hi: Vec<f64>) -> Self {
        self.lo = lo;
        self.hi = hi;
        self
    }
}

impl Immersion for StandardImmersion {
    fn param_dim(&self) -> usize {
        self.m
    }
    fn ambient(&self) -> &MetricChart {
        &self.chart
    }
    fn param_domain(&self) -> (Vec<f64>, Vec<f64>) {
        (self.lo.clone(), self.hi.clone())
    }
    fn map_jets(&self, u: &[Jet]) -> Result<Vec<Jet>> {
        if u.len() != self.m {
            return Err(GeomError::BadParameters(format!(
                "expected {} parameters",
                self.m
            )));
        }
        Ok(self.eval(u))
    }
    fn label(&self) -> String {
        self.label.clone()
    }
    fn orientation_at(&self, _u: &[f64]) -> Result<Orientation> {
        Ok(self.orientation)
    }
}

/// JSON descriptor of a built-in immersion.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ImmersionSpec {
    RoundSphere {
        radius: f64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    /// Geodesic sphere about the chart origin of a Riemannian space form.
    SmallSphere {
        geodesic_radius: f64,
    },
    Ellipsoid {
        axes: Vec<f64>,
    },
    /// Radial graph r(ω) = radius·(1 + P(ω)) with a seeded random
    /// polynomial P of degree ≤ 4 and Σ|coeff| = amplitude.
    Ovaloid {
        radius: f64,
        amplitude: f64,
        seed: u64,
        #[serde(default)]
        center: Option<Vec<f64>>,
    },
    Graph {
        terms: Vec<(Vec<u8>, f64)>,
        #[serde(default)]
        half_width: Option<f64>,
    },
    Catenoid {
        #[serde(default)]
        waist: Option<f64>,
    },
    Clifford,
    ProductSphere {
        k: usize,
        #[serde(default)]
        radius: Option<f64>,
    },
}

impl ImmersionSpec {
    pub fn build(&self, chart: &MetricChart) -> Result<StandardImmersion> {
        standard_immersion(self, chart)
    }
}

fn bad(msg: impl Into<String>) -> GeomError {
    GeomError::BadParameters(msg.into())
}

/// Seeded polynomial on R^{nv} with monomials of degree 2..=4 whose
/// coefficients have Σ|c| = amplitude.
pub fn random_poly(nv: usize, amplitude: f64, seed: u64) -> Poly {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let lay = Layout::get(nv, 4);
    let mut terms = Vec::new();
    for idx in 0..lay.len_for(4) {
        let e = lay.exponents(idx);
        let d: u32 = e.iter().map(|&p| p as u32).sum();
        if d >= 2 {
            terms.push((e.to_vec(), rng.gen_range(-1.0..1.0)));
        }
    }
    let total: f64 = terms.iter().map(|t| f64::abs(t.1)).sum();
    for t in terms.iter_mut() {
        t.1 *= amplitude / total;
    }
    Poly { terms }
}

/// Chart radius of the geodesic sphere of radius ρ about the origin of the
/// conformal space-form chart with curvature C.
pub fn chart_radius_of_geodesic(c: f64, rho: f64) -> f64 {
    if c > 0.0 {
        2.0 / c.sqrt() * (c.sqrt() * rho / 2.0).tan()
    } else if c < 0.0 {
        2.0 / (-c).sqrt() * ((-c).sqrt() * rho / 2.0).tanh()
    } else {
        rho
    }
}

pub fn standard_immersion(spec: &ImmersionSpec, chart: &MetricChart) -> Result<StandardImmersion> {
    let n = chart.dim;
    if n < 2 {
        return Err(bad("ambient dimension must be at least 2"));
    }
    let m = n - 1;
    let (slo, shi) = sphere_domain(m);
    let radial = |center: Vec<f64>, radius: f64, axes: Vec<f64>, poly: Poly, label: String| {
        StandardImmersion {
            chart: chart.clone(),
            kind: Kind::RadialGraph {
                center,
                radius,
                axes,
                poly,
            },
            m,
            lo: slo.clone(),
            hi: shi.clone(),
            orientation: Orientation::Convex,
            label,
        }
    };
    let center_or_origin = |c: &Option<Vec<f64>>| -> Result<Vec<f64>> {
        match c {
            None => Ok(vec![0.0; n]),
            Some(v) if v.len() == n => Ok(v.clone()),
            Some(_) => Err(bad("center has wrong dimension")),
        }
    };
    let imm = match spec {
        ImmersionSpec::RoundSphere { radius, center } => {
            if !(*radius > 0.0) {
                return Err(bad("radius must be positive"));
            }
            radial(
                center_or_origin(center)?,
                *radius,
                vec![1.0; n],
                Poly::default(),
                format!("sphere(R={radius})"),
            )
        }
        ImmersionSpec::SmallSphere { geodesic_radius } => {
            let c = chart
                .constant_curvature()
                .ok_or_else(|| bad("small_sphere needs a space-form chart"))?;
            if chart.index != 0 {
                return Err(GeomError::UnsupportedSignature(
                    "small_sphere needs a Riemannian space form".into(),
                ));
            }
            let rho = *geodesic_radius;
            if !(rho > 0.0) || (c > 0.0 && c.sqrt() * rho >= std::f64::consts::PI) {
                return Err(bad(format!("geodesic radius {rho}")));
            }
            let r = chart_radius_of_geodesic(c, rho);
            radial(
                vec![0.0; n],
                r,
                vec![1.0; n],
                Poly::default(),
                format!("geodesic_sphere(rho={rho})"),
            )
        }
        ImmersionSpec::Ellipsoid { axes } => {
            if axes.len() != n || axes.iter().any(|&a| !(a > 0.0)) {
                return Err(bad(
                    "ellipsoid needs one positive semi-axis per ambient dimension",
                ));
            }
            radial(
                vec![0.0; n],
                1.0,
                axes.clone(),
                Poly::default(),
                format!("ellipsoid{:?}", axes),
            )
        }
        ImmersionSpec::Ovaloid {
            radius,
            amplitude,
            seed,
            center,
        } => {
            if !(*radius > 0.0) || !(amplitude.abs() < 0.2) {
                return Err(bad("ovaloid needs radius > 0 and |amplitude| < 0.2"));
            }
            let poly = random_poly(n, *amplitude, *seed);
            radial(
                center_or_origin(center)?,
                *radius,
                vec![1.0; n],
                poly,
                format!("ovaloid(seed={seed})"),
            )
        }
        ImmersionSpec::Graph { terms, half_width } => {
            if terms.iter().any(|(e, _)| e.len() != m) {
                return Err(bad("graph exponents must have one entry per parameter"));
            }
            let h = half_width.unwrap_or(1.0);
            StandardImmersion {
                chart: chart.clone(),
                kind: Kind::Graph {
                    poly: Poly {
                        terms: terms.clone(),
                    },
                },
                m,
                lo: vec![-h; m],
                hi: vec![h; m],
                orientation: Orientation::Convex,
                label: "graph".into(),
            }
        }
        ImmersionSpec::Catenoid { waist } => {
            if n != 3 {
                return Err(bad("catenoid lives in a 3-dimensional chart"));
            }
            let c = waist.unwrap_or(1.0);
            if !(c > 0.0) {
                return Err(bad("waist must be positive"));
            }
            StandardImmersion {
                chart: chart.clone(),
                kind: Kind::Catenoid { waist: c },
                m,
                lo: vec![-2.0 * c, 0.0],
                hi: vec![2.0 * c, 2.0 * std::f64::consts::PI],
                orientation: Orientation::Convex,
                label: format!("catenoid(c={c})"),
            }
        }
        ImmersionSpec::Clifford => {
            if n != 3 && n != 4 {
                return Err(bad(
                    "clifford needs a 3- or 4-dimensional sphere chart; use product_sphere",
                ));
            }
            standard_immersion(&ImmersionSpec::ProductSphere { k: 1, radius: None }, chart)?
        }
        ImmersionSpec::ProductSphere { k, radius } => {
            let c = chart
                .constant_curvature()
                .filter(|&c| c > 0.0 && chart.index == 0);
            let c = c.ok_or_else(|| bad("product_sphere needs a round sphere chart"))?;
            let k = *k;
            if k < 1 || k >= m {
                return Err(bad(format!(
                    "factor dimension k = {k} must satisfy 1 ≤ k < {m}"
                )));
            }
            let big_r = 1.0 / c.sqrt();
            let r1 = radius.unwrap_or(big_r / 2f64.sqrt());
            if !(r1 > 0.0 && r1 < big_r) {
                return Err(bad("first factor radius must lie in (0, 1/√C)"));
            }
            let r2 = (big_r * big_r - r1 * r1).sqrt();
            let (alo, ahi) = sphere_domain(k);
            let (blo, bhi) = sphere_domain(m - k);
            StandardImmersion {
                chart: chart.clone(),
                kind: Kind::ProductSphere { k, r1, r2, big_r },
                m,
                lo: [alo, blo].concat(),
                hi: [ahi, bhi].concat(),
                orientation: Orientation::Convex,
                label: format!("S{k}({r1:.4})xS{}({r2:.4})", m - k),
            }
        }
    };
    Ok(imm)
}

/// Reparametrization u = M v + b of another immersion.
pub struct AffineReparam {
    pub inner: Arc<dyn Immersion>,
    pub mat: Mat<f64>,
    pub shift: Vec<f64>,
}

impl AffineReparam {
    pub fn inner_param(&self, v: &[f64]) -> Vec<f64> {
        self.mat
            .iter()
            .zip(&self.shift)
            .map(|(row, b)| row.iter().zip(v).map(|(a, x)| a * x).sum::<f64>() + b)
            .collect()
    }

    /// Parameter v mapping to the inner parameter u.
    pub fn outer_param(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (inv, _) =
            inverse_det(&self.mat, 1e-14).ok_or_else(|| bad("singular reparametrization"))?;
        let d: Vec<f64> = u.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        Ok(inv
            .iter()
            .map(|row| row.iter().zip(&d).map(|(a, x)| a * x).sum())
            .collect())
    }
}

impl Immersion for AffineReparam {
    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }
    fn ambient(&self) -> &MetricChart {
        self.inner.ambient()
    }
    fn param_domain(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.param_dim();
        (vec![f64::NEG_INFINITY; m], vec![f64::INFINITY; m])
    }
    fn check_param(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.param_dim() {
            return Err(bad("wrong parameter count"));
        }
        self.inner.check_param(&self.inner_param(v))
    }
    fn map_jets(&self, v: &[Jet]) -> Result<Vec<Jet>> {
        let u: Vec<Jet> = self
            .mat
            .iter()
            .zip(&self.shift)
            .map(|(row, b)| {
                let mut s = Jet::constant(*b);
                for (a, x) in row.iter().zip(v) {
                    s += x.clone() * *a;
                }
                s
            })
            .collect();
        self.inner.map_jets(&u)
    }
    fn label(&self) -> String {
        format!("reparam({})", self.inner.label())
    }
    fn orientation_at(&self, v: &[f64]) -> Result<Orientation> {
        // the cofactor normal flips with the sign of det M
        let s = determinant(&self.mat).signum();
        match self.inner.orientation_at(&self.inner_param(v))? {
            Orientation::Convex => Ok(Orientation::Convex),
            Orientation::Fixed(f) => Ok(Orientation::Fixed(f * s)),
        }
    }
}

/// The same patch with a prescribed orientation.
pub struct Oriented {
    pub inner: Arc<dyn Immersion>,
    pub orientation: Orientation,
}

impl Immersion for Oriented {
    fn param_dim(&self) -> usize {
        self.inner.param_dim()
    }
    fn ambient(&self) -> &MetricChart {
        self.inner.ambient()
    }
    fn param_domain(&self) -> (Vec<f64>, Vec<f64>) {
        self.inner.param_domain()
    }
    fn check_param(&self, u: &[f64]) -> Result<()> {
        self.inner.check_param(u)
    }
    fn map_jets(&self, u: &[Jet]) -> Result<Vec<Jet>> {
        self.inner.map_jets(u)
    }
    fn label(&self) -> String {
        self.inner.label()
    }
    fn orientation_at(&self, _u: &[f64]) -> Result<Orientation> {
        Ok(self.orientation)
    }
}

/// The patch with the opposite unit normal at every point.
pub struct Flipped(pub Arc<dyn Immersion>);

impl Immersion for Flipped {
    fn param_dim(&self) -> usize {
        self.0.param_dim()
    }
    fn ambient(&self) -> &MetricChart {
        self.0.ambient()
    }
    fn param_domain(&self) -> (Vec<f64>, Vec<f64>) {
        self.0.param_domain()
    }
    fn check_param(&self, u: &[f64]) -> Result<()> {
        self.0.check_param(u)
    }
    fn map_jets(&self, u: &[Jet]) -> Result<Vec<Jet>> {
        self.0.map_jets(u)
    }
    fn label(&self) -> String {
        format!("flipped({})", self.0.label())
    }
    fn orientation_at(&self, u: &[f64]) -> Result<Orientation> {
        Ok(Orientation::Fixed(-effective_sigma(self.0.as_ref(), u)?))
    }
}

/// Fundamental-form jets of the patch at one parameter point, in adapted
/// coordinates. The induced quantities are jets in `m` variables; ambient
/// quantities carry adapted indices 0..m (tangent) and m (transversal).
#[derive(Clone, Debug)]
pub struct Adapted {
    pub m: usize,
    pub order: usize,
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    /// ∂X^a/∂u^i as rows a.
    pub jac: Mat<f64>,
    pub n0: Vec<f64>,
    pub alpha: f64,
    pub sigma: f64,
    /// Induced metric, order `order`.
    pub g: Mat<Jet>,
    pub ginv: Mat<Jet>,
    /// Second fundamental form, order `order − 1`.
    pub ii: Mat<Jet>,
    /// Unit normal in adapted components, order `order`.
    pub normal: Vec<Jet>,
    /// Chart components of the adapted coordinate vectors (rows a, cols b).
    pub dphi: Mat<Jet>,
    pub gbar: Mat<Jet>,
    pub gbar_inv: Mat<Jet>,
    /// Ambient Γ̄ in adapted coordinates at ix3, order `order − 1`.
    pub gamma_bar: Vec<Jet>,
    /// Ambient R̄_{abcd} in adapted coordinates at ix4, order `order − 2`.
    pub riem_bar: Option<Vec<Jet>>,
}

/// Generalized cross product of the columns of an (m+1)×m matrix, with
/// det[J | n] > 0.
pub fn cofactor_normal(jac: &Mat<f64>) -> Vec<f64> {
    let n = jac.len();
    let m = n - 1;
    (0..n)
        .map(|k| {
            let minor: Mat<f64> = (0..n).filter(|&r| r != k).map(|r| jac[r].clone()).collect();
            let s = if (k + m).is_multiple_of(2) { 1.0 } else { -1.0 };
            if m == 0 {
                s
            } else {
                s * determinant(&minor)
            }
        })
        .collect()
}

fn sum_jets(terms: impl Iterator<Item = Jet>) -> Jet {
    let mut acc = Jet::constant(0.0);
    for t in terms {
        acc += t;
    }
    acc
}

/// Sign of the normal actually used at `u` relative to n0.
pub fn effective_sigma(imm: &dyn Immersion, u: &[f64]) -> Result<f64> {
    Ok(adapted_jets(imm, u, 1, false)?.sigma)
}

/// Adapted-coordinate jets of order `order` (≥ 1) for the induced metric.
pub fn adapted_jets(
    imm: &dyn Immersion,
    u: &[f64],
    order: usize,
    curvature: bool,
) -> Result<Adapted> {
    let m = imm.param_dim();
    let chart = imm.ambient();
    let n = chart.dim;
    if n != m + 1 {
        return Err(bad(format!(
            "patch dimension {m} in a {n}-dimensional chart"
        )));
    }
    if order < 1 {
        return Err(bad("jet order must be at least 1"));
    }
    imm.check_param(u)?;
    let big = Layout::get(n, order + 1);
    let useed: Vec<Jet> = (0..m)
        .map(|i| Jet::variable(big, order + 1, i, u[i]))
        .collect();
    let xj = imm.map_jets(&useed)?;
    let x: Vec<f64> = xj.iter().map(|v| v.value()).collect();
    chart.check_point(&x)?;
    let jac: Mat<f64> = xj
        .iter()
        .map(|v| (0..m).map(|i| v.d1(i)).collect())
        .collect();
    let sv = to_dmatrix(&jac).singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 1e-10) {
        return Err(GeomError::DegenerateImmersion(format!(
            "smallest singular value {smin:.3e} at u = {u:?}"
        )));
    }
    let mut n0 = cofactor_normal(&jac);
    let nn = n0.iter().map(|v| v * v).sum::<f64>().sqrt();
    n0.iter_mut().for_each(|v| *v /= nn);

    let t = Jet::variable(big, order + 1, m, 0.0);
    let phi: Vec<Jet> = (0..n).map(|a| &xj[a] + &(t.clone() * n0[a])).collect();
    let gphi = chart.metric(&phi);
    let dphi: Mat<Jet> = (0..n)
        .map(|a| (0..n).map(|b| phi[a].diff(b)).collect())
        .collect();
    let gphi: Mat<Jet> = gphi
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.truncate(order)).collect())
        .collect();
    // G_bc = Σ DΦ_ab ḡ_ad DΦ_dc
    let h: Mat<Jet> = (0..n)
        .map(|a| {
            (0..n)
                .map(|c| sum_jets((0..n).map(|d| &gphi[a][d] * &dphi[d][c])))
                .collect()
        })
        .collect();
    let mut gbig: Mat<Jet> = vec![vec![Jet::constant(0.0); n]; n];
    for b in 0..n {
        for c in b..n {
            let v = sum_jets((0..n).map(|a| &dphi[a][b] * &h[a][c]));
            gbig[c][b] = v.clone();
            gbig[b][c] = v;
        }
    }
    let con = connection(&gbig, 0.0).ok_or_else(|| {
        GeomError::DegenerateMetric(format!("ambient metric degenerate at {x:?}"))
    })?;

    let lm = Layout::get(m, order);
    let r = |j: &Jet| j.restrict(lm);
    let g: Mat<Jet> = (0..m)
        .map(|i| (0..m).map(|j| r(&gbig[i][j])).collect())
        .collect();
    let gbar_inv: Mat<Jet> = con
        .ginv
        .iter()
        .map(|row| row.iter().map(r).collect())
        .collect();
    let gtt = gbar_inv[m][m].clone();
    let scale = 1.0
        + gbar_inv
            .iter()
            .flatten()
            .fold(0.0f64, |s, v| s.max(v.value().abs()));
    if gtt.value().abs() <= 1e-10 * scale {
        return Err(GeomError::NullNormal(format!("ḡ(N,N) ≈ 0 at u = {u:?}")));
    }
    let gv = to_f64(&g);
    let rownorm: f64 = gv
        .iter()
        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
        .product();
    let detg = determinant(&gv);
    if !(detg.abs() > 1e-10 * rownorm) {
        return Err(GeomError::DegenerateInducedMetric(format!(
            "det g = {detg:.3e} at u = {u:?}"
        )));
    }
    let (ginv, _) = inverse_det(&g, 0.0)
        .ok_or_else(|| GeomError::DegenerateInducedMetric(format!("singular g at u = {u:?}")))?;
    let alpha = gtt.value().signum();
    let inv_len = (gtt.clone() * alpha).sqrt().recip();
    let gamma_bar: Vec<Jet> = con.gamma.iter().map(r).collect();
    let mut ii: Mat<Jet> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| &gamma_bar[ix3(n, m, i, j)] * &inv_len * alpha)
                .collect()
        })
        .collect();
    let mut normal: Vec<Jet> = (0..n).map(|a| &gbar_inv[a][m] * &inv_len).collect();

    let mut tr = 0.0;
    for i in 0..m {
        for j in 0..m {
            tr += ginv[i][j].value() * ii[j][i].value();
        }
    }
    tr *= alpha;
    let sigma = match imm.orientation_at(u)? {
        Orientation::Convex => {
            if tr.abs() > 1e-10 {
                tr.signum()
            } else {
                1.0
            }
        }
        Orientation::Fixed(s) => {
            if s < 0.0 {
                -1.0
            } else {
                1.0
            }
        }
    };
    if sigma < 0.0 {
        ii = ii
            .into_iter()
            .map(|row| row.into_iter().map(|v| -v).collect())
            .collect();
        normal = normal.into_iter().map(|v| -v).collect();
    }
    let riem_bar = if curvature && order >= 2 {
        Some(con.riemann().iter().map(r).collect())
    } else {
        None
    };
    Ok(Adapted {
        m,
        order,
        u: u.to_vec(),
        x,
        jac,
        n0,
        alpha,
        sigma,
        g,
        ginv,
        ii,
        normal,
        dphi: dphi.iter().map(|row| row.iter().map(r).collect()).collect(),
        gbar: gbig.iter().map(|row| row.iter().map(r).collect()).collect(),
        gbar_inv,
        gamma_bar,
        riem_bar,
    })
}

impl Adapted {
    pub fn n(&self) -> usize {
        self.m + 1
    }

    /// Shape operator A^i_j = α g^{ik} II_kj as jets.
    pub fn shape_jets(&self) -> Mat<Jet> {
        let m = self.m;
        (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| {
                        sum_jets((0..m).map(|k| &self.ginv[i][k] * &self.ii[k][j])) * self.alpha
                    })
                    .collect()
            })
            .collect()
    }

    /// Chart components of the unit normal as jets in u.
    pub fn normal_chart_jets(&self) -> Vec<Jet> {
        let n = self.n();
        (0..n)
            .map(|a| sum_jets((0..n).map(|b| &self.dphi[a][b] * &self.normal[b])))
            .collect()
    }

    /// R̄ at ix4 in adapted indices, values.
    pub fn riem_values(&self) -> Result<Vec<f64>> {
        self.riem_bar
            .as_ref()
            .map(|r| r.iter().map(|v| v.value()).collect())
            .ok_or_else(|| GeomError::JetTooShallow("ambient curvature not computed".into()))
    }
}

/// Fundamental forms and principal data at one parameter point.
#[derive(Clone, Debug, Serialize)]
pub struct SurfacePointData {
    pub u: Vec<f64>,
    pub x: Vec<f64>,
    /// Coordinate tangent vectors ∂_iX in chart components.
    pub tangent: Vec<Vec<f64>>,
    /// Unit normal in chart components.
    pub normal: Vec<f64>,
    pub alpha: f64,
    pub sigma: f64,
    pub first: Mat<f64>,
    pub second: Mat<f64>,
    pub third: Mat<f64>,
    /// A^i_j.
    pub shape: Mat<f64>,
    pub mean_curvature: f64,
    pub det_a: f64,
    /// Principal curvatures (empty when A is not diagonalizable).
    pub lambda: Vec<f64>,
    /// g-orthonormal principal directions in parameter components.
    pub directions: Vec<Vec<f64>>,
    /// g(E_i, E_i) = ±1.
    pub epsilon: Vec<f64>,
    pub diagonalizable: bool,
    /// max |II − α g(A·,·)| between the Γ̄^t route and the −∇̄U route.
    pub ii_route_gap: f64,
    /// Transversal component of ∇̄U, which vanishes for an exact normal.
    pub normal_leak: f64,
}

impl SurfacePointData {
    pub fn from_adapted(ad: &Adapted) -> SurfacePointData {
        let m = ad.m;
        let n = ad.n();
        let g = to_f64(&ad.g);
        let ginv = to_f64(&ad.ginv);
        let ii = to_f64(&ad.ii);
        let alpha = ad.alpha;
        let shape: Mat<f64> = (0..m)
            .map(|i| {
                (0..m)
                    .map(|j| alpha * (0..m).map(|k| ginv[i][k] * ii[k][j]).sum::<f64>())
                    .collect()
            })
            .collect();
        let mut third = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                let mut s = 0.0;
                for k in 0..m {
                    for l in 0..m {
                        s += shape[k][i] * g[k][l] * shape[l][j];
                    }
                }
                third[i][j] = s;
            }
        }
        let tr: f64 = (0..m).map(|i| shape[i][i]).sum();
        let det_a = determinant(&shape);

        // second route: A = −∇̄U restricted to tangent directions
        let mut a2 = vec![vec![0.0; m]; n];
        for a in 0..n {
            for j in 0..m {
                let mut s = ad.normal[a].d1(j);
                for b in 0..n {
                    s += ad.gamma_bar[ix3(n, a, j, b)].value() * ad.normal[b].value();
                }
                a2[a][j] = -s;
            }
        }
        let mut gap = 0.0f64;
        for i in 0..m {
            for j in 0..m {
                let v: f64 = alpha * (0..m).map(|k| g[i][k] * a2[k][j]).sum::<f64>();
                gap = gap.max((v - ii[i][j]).abs());
            }
        }
        let leak = a2[m].iter().fold(0.0f64, |s, v| s.max(v.abs()));

        let (lambda, directions, epsilon, diagonalizable) = match generalized_eigen(&g, &ii, 1e-10)
        {
            Ok((vals, vecs, signs)) => {
                let mut idx: Vec<usize> = (0..vals.len()).collect();
                idx.sort_by(|&p, &q| (alpha * vals[p]).partial_cmp(&(alpha * vals[q])).unwrap());
                (
                    idx.iter().map(|&k| alpha * vals[k]).collect(),
                    idx.iter().map(|&k| vecs[k].clone()).collect(),
                    idx.iter().map(|&k| signs[k]).collect(),
                    true,
                )
            }
            Err(_) => {
                let signs = pivoted_gram_schmidt(&g, 1e-12)
                    .map(|(_, s)| s)
                    .unwrap_or_default();
                (Vec::new(), Vec::new(), signs, false)
            }
        };
        let nchart: Vec<f64> = ad.normal_chart_jets().iter().map(|v| v.value()).collect();
        SurfacePointData {
            u: ad.u.clone(),
            x: ad.x.clone(),
            tangent: (0..m)
                .map(|i| (0..n).map(|a| ad.jac[a][i]).collect())
                .collect(),
            normal: nchart,
            alpha,
            sigma: ad.sigma,
            first: g,
            second: ii,
            third,
            shape,
            mean_curvature: alpha * tr / m as f64,
            det_a,
            lambda,
            directions,
            epsilon,
            diagonalizable,
            ii_route_gap: gap,
            normal_leak: leak,
        }
    }
}

pub fn surface_point(imm: &dyn Immersion, u: &[f64]) -> Result<SurfacePointData> {
    let ad = adapted_jets(imm, u, 1, false)?;
    Ok(SurfacePointData::from_adapted(&ad))
}

/// Intrinsic Christoffel symbols Γ^k_ij (ix3) and curvature R_ijkl (ix4)
/// of the induced metric, as jets one and two orders below `g`.
pub fn intrinsic_curvature(g: &Mat<Jet>) -> Result<(Vec<Jet>, Vec<Jet>)> {
    let con = connection(g, 0.0)
        .ok_or_else(|| GeomError::DegenerateInducedMetric("singular g".into()))?;
    let riem = if g[0][0].order() >= 2 {
        con.riemann()
    } else {
        Vec::new()
    };
    Ok((con.gamma, riem))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GaussCodazzi {
    pub gauss: f64,
    pub codazzi: f64,
}

/// Largest component of the Gauss and Codazzi residuals at `u`.
pub fn gauss_codazzi_residual(imm: &dyn Immersion, u: &[f64]) -> Result<GaussCodazzi> {
    let ad = adapted_jets(imm, u, 2, true)?;
    let m = ad.m;
    let n = ad.n();
    let (gam, riem) = intrinsic_curvature(&ad.g)?;
    let rb = ad.riem_values()?;
    let ii = to_f64(&ad.ii);
    let alpha = ad.alpha;
    let mut gauss = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    let lhs = riem[ix4(m, i, j, k, l)].value();
                    let rhs = rb[ix4(n, i, j, k, l)]
                        + alpha * (ii[i][k] * ii[j][l] - ii[i][l] * ii[j][k]);
                    gauss = gauss.max((lhs - rhs).abs());
                }
            }
        }
    }
    let a = ad.shape_jets();
    let ginv = to_f64(&ad.ginv);
    let uval: Vec<f64> = ad.normal.iter().map(|v| v.value()).collect();
    let gv = |k: usize, i: usize, j: usize| gam[ix3(m, k, i, j)].value();
    // (∇_i A)^k_j
    let nabla_a = |i: usize, k: usize, j: usize| -> f64 {
        let mut s = a[k][j].d1(i);
        for l in 0..m {
            s += gv(k, i, l) * a[l][j].value() - gv(l, i, j) * a[k][l].value();
        }
        s
    };
    let mut codazzi = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                let lhs = nabla_a(i, k, j) - nabla_a(j, k, i);
                let mut rhs = 0.0;
                for l in 0..m {
                    let mut w = 0.0;
                    for c in 0..n {
                        w += rb[ix4(n, i, j, c, l)] * uval[c];
                    }
                    rhs += ginv[k][l] * w;
                }
                codazzi = codazzi.max((lhs - rhs).abs());
            }
        }
    }
    Ok(GaussCodazzi { gauss, codazzi })
}

/// Interior k^m grid of the parameter box, inset by `inset` of each side.
pub fn sample_grid(imm: &dyn Immersion, k: usize, inset: f64) -> Vec<Vec<f64>> {
    let (lo, hi) = imm.param_domain();
    let m = imm.param_dim();
    let axis: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let (a, b) = (
                lo[i] + inset * (hi[i] - lo[i]),
                hi[i] - inset * (hi[i] - lo[i]),
            );
            (0..k)
                .map(|s| {
                    if k == 1 {
                        0.5 * (a + b)
                    } else {
                        a + (b - a) * s as f64 / (k - 1) as f64
                    }
                })
                .collect()
        })
        .collect();
    let mut out = vec![Vec::new()];
    for ax in axis {
        out = out
            .into_iter()
            .flat_map(|p| {
                ax.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

/// Umbilicity measure max|A − (trA/m)·id| relative to 1 + |A|.
pub fn umbilic_defect(sp: &SurfacePointData) -> f64 {
    let m = sp.shape.len();
    let h = (0..m).map(|i| sp.shape[i][i]).sum::<f64>() / m as f64;
    let mut d = 0.0f64;
    let mut big = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let id = if i == j { h } else { 0.0 };
            d = d.max((sp.shape[i][j] - id).abs());
            big = big.max(sp.shape[i][j].abs());
        }
    }
    d / (1.0 + big)
}

/// Ambient inner product of two chart vectors at the point.
pub fn ambient_inner(sp: &SurfacePointData, chart: &MetricChart, a: &[f64], b: &[f64]) -> f64 {
    bilinear(&chart.metric_at(&sp.x), a, b)
}
