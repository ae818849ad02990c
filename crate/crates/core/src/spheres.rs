//! Geodesic hyperspheres built through the exponential map, and the small-r
//! power series of their curvature quantities.

use crate::ambient::{
    curvature_jet, curvature_operator_max, geodesic_flow, orthonormal_frame, CurvatureJet,
    MetricChart,
};
use crate::hypersurface::{sphere_point, surface_point, Immersion};
use crate::iigeom::ii_geometry;
use crate::jet::Jet;
use crate::riemann::{ix3, ix4};
use crate::variation::{area_value, central_difference, AreaKind, QuadratureGrid};
use crate::{GeomError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Area of the unit hypersphere S^m ⊂ E^{m+1}: 2π^{(m+1)/2}/Γ((m+1)/2).
pub fn unit_sphere_area(m: usize) -> f64 {
    let h = (m as f64 + 1.0) / 2.0;
    2.0 * PI.powf(h) / statrs::function::gamma::gamma(h)
}

fn require_riemannian(chart: &MetricChart) -> Result<()> {
    if chart.index != 0 {
        return Err(GeomError::UnsupportedSignature(format!(
            "geodesic spheres need a Riemannian ambient, {} has index {}",
            chart.label, chart.index
        )));
    }
    Ok(())
}

fn unit_direction(chart: &MetricChart, n: &[f64], e0: &[f64]) -> Result<()> {
    if e0.len() != chart.dim {
        return Err(GeomError::BadDirection(format!(
            "direction has {} components, need {}",
            e0.len(),
            chart.dim
        )));
    }
    let g = chart.metric_at(n);
    let norm = crate::linalg::bilinear(&g, e0, e0);
    if (norm - 1.0).abs() > 1e-9 {
        return Err(GeomError::BadDirection(format!("ḡ(e0, e0) = {norm}")));
    }
    Ok(())
}

/// The hypersphere exp_n(r ξ), ξ running over the unit sphere of T_n
/// in hyperspherical coordinates. The point u* of `center_param` maps to
/// exp_n(r e₀).
pub struct GeodesicSphere {
    pub chart: MetricChart,
    pub center: Vec<f64>,
    pub radius: f64,
    /// ḡ(n)-orthonormal frame with e₀ first.
    pub frame: Vec<Vec<f64>>,
    pub steps: usize,
}

impl GeodesicSphere {
    pub fn center_param(&self) -> Vec<f64> {
        let m = self.chart.dim - 1;
        let mut u = vec![PI / 2.0; m];
        u[m - 1] = 0.0;
        u
    }
}

/// RK4 steps for exp_n(rξ): the global error behaves like (r√K/steps)⁴.
pub fn exp_steps(r: f64, curvature_scale: f64) -> usize {
    ((128.0 * r * curvature_scale.sqrt()).ceil() as usize).clamp(24, 96)
}

/// Geodesic hypersphere of radius r about n, with e₀ (or the first chart
/// axis, normalized) as the distinguished direction.
pub fn geodesic_sphere(
    chart: &MetricChart,
    n: &[f64],
    r: f64,
    e0: Option<&[f64]>,
) -> Result<GeodesicSphere> {
    require_riemannian(chart)?;
    chart.check_point(n)?;
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeomError::BadParameters(format!("radius {r}")));
    }
    if chart.dim < 2 {
        return Err(GeomError::DimensionTooSmall(
            "hyperspheres need ambient dimension ≥ 2".into(),
        ));
    }
    if let Some(e) = e0 {
        unit_direction(chart, n, e)?;
    }
    let jet = curvature_jet(chart, n, 0)?;
    let kmax = curvature_operator_max(&jet);
    if kmax > 0.0 && r * kmax.sqrt() >= PI * (1.0 - 1e-9) {
        return Err(GeomError::ConjugatePoint(format!(
            "r·√K = {:.6} ≥ π",
            r * kmax.sqrt()
        )));
    }
    let (frame, _) = orthonormal_frame(chart, n, e0)?;
    let scale = transform4(chart.dim, &jet.riem, &frame)
        .iter()
        .fold(0.0f64, |a, v| a.max(v.abs()));
    // flat space-form charts are Cartesian, where RK4 is exact on straight lines
    let steps = if chart.constant_curvature() == Some(0.0) {
        1
    } else {
        exp_steps(r, scale)
    };
    let s = GeodesicSphere {
        chart: chart.clone(),
        center: n.to_vec(),
        radius: r,
        frame,
        steps,
    };
    // rank check at the distinguished point
    match surface_point(&s, &s.center_param()) {
        Err(GeomError::DegenerateImmersion(msg)) => Err(GeomError::ConjugatePoint(msg)),
        Err(e) => Err(e),
        Ok(_) => Ok(s),
    }
}

impl Immersion for GeodesicSphere {
    fn param_dim(&self) -> usize {
        self.chart.dim - 1
    }
    fn ambient(&self) -> &MetricChart {
        &self.chart
    }
    fn param_domain(&self) -> (Vec<f64>, Vec<f64>) {
        let m = self.param_dim();
        let mut hi = vec![PI; m];
        hi[m - 1] = 2.0 * PI;
        (vec![0.0; m], hi)
    }
    fn label(&self) -> String {
        format!(
            "geodesic_sphere(r={}, center={:?})",
            self.radius, self.center
        )
    }
    fn map_jets(&self, u: &[Jet]) -> Result<Vec<Jet>> {
        let w = sphere_point(u);
        let n = self.chart.dim;
        let v: Vec<Jet> = (0..n)
            .map(|k| {
                let mut acc = Jet::constant(0.0);
                for (a, wa) in w.iter().enumerate() {
                    acc += wa.clone() * (self.frame[a][k] * self.radius);
                }
                acc
            })
            .collect();
        let x0: Vec<Jet> = self.center.iter().map(|&c| Jet::constant(c)).collect();
        let (x, _) = geodesic_flow(&self.chart, x0, v, 1.0, self.steps)?;
        Ok(x)
    }
}

/// Components of a 4-tensor in the frame whose rows are `frame`.
fn transform4(n: usize, src: &[f64], frame: &[Vec<f64>]) -> Vec<f64> {
    let n4 = n.pow(4);
    let mut cur = src.to_vec();
    for slot in 0..4u32 {
        let mut next = vec![0.0; n4];
        let stride = n.pow(3 - slot);
        for (idx, out) in next.iter_mut().enumerate() {
            let digit = (idx / stride) % n;
            let base = idx - digit * stride;
            *out = (0..n)
                .map(|k| frame[digit][k] * cur[base + k * stride])
                .sum();
        }
        cur = next;
    }
    cur
}

/// Curvature of the ambient at n in a ḡ(n)-orthonormal frame with e₀ as
/// axis 0: R̄ (n⁴), ∇R̄ (n⁵, derivative index first), ∇²R̄ (n⁶).
#[derive(Clone, Debug, Serialize)]
pub struct FrameJet {
    pub n: usize,
    pub riem: Vec<f64>,
    pub nabla: Vec<f64>,
    pub nabla2: Vec<f64>,
}

impl FrameJet {
    pub fn r(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.riem[ix4(self.n, a, b, c, d)]
    }
    pub fn d(&self, e: usize, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.nabla[e * self.n.pow(4) + ix4(self.n, a, b, c, d)]
    }
    pub fn d2(&self, e: usize, f: usize, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.nabla2[(e * self.n + f) * self.n.pow(4) + ix4(self.n, a, b, c, d)]
    }

    /// Express a coordinate curvature jet in the frame `frame` (rows are
    /// frame vectors in chart components).
    pub fn from_curvature_jet(jet: &CurvatureJet, frame: &[Vec<f64>]) -> Result<FrameJet> {
        if jet.order < 2 {
            return Err(GeomError::JetTooShallow(format!(
                "curvature jet of order {}, need 2",
                jet.order
            )));
        }
        let n = jet.dim;
        let n4 = n.pow(4);
        let tr4 = |src: &[f64]| transform4(n, src, frame);
        let riem = tr4(&jet.riem);
        let mut d1c = vec![0.0; n * n4];
        for e in 0..n {
            d1c[e * n4..(e + 1) * n4].copy_from_slice(&tr4(&jet.nabla_riem[e * n4..(e + 1) * n4]));
        }
        let mut nabla = vec![0.0; n * n4];
        for a in 0..n {
            for e in 0..n {
                let w = frame[a][e];
                if w != 0.0 {
                    for k in 0..n4 {
                        nabla[a * n4 + k] += w * d1c[e * n4 + k];
                    }
                }
            }
        }
        let mut d2c = vec![0.0; n * n * n4];
        for ef in 0..n * n {
            d2c[ef * n4..(ef + 1) * n4]
                .copy_from_slice(&tr4(&jet.nabla2_riem[ef * n4..(ef + 1) * n4]));
        }
        let mut nabla2 = vec![0.0; n * n * n4];
        for a in 0..n {
            for b in 0..n {
                for e in 0..n {
                    for f in 0..n {
                        let w = frame[a][e] * frame[b][f];
                        if w != 0.0 {
                            for k in 0..n4 {
                                nabla2[(a * n + b) * n4 + k] += w * d2c[(e * n + f) * n4 + k];
                            }
                        }
                    }
                }
            }
        }
        Ok(FrameJet {
            n,
            riem,
            nabla,
            nabla2,
        })
    }

    /// Random tensors with the pair symmetries of a curvature tensor (and
    /// of its derivatives) and no Bianchi identities.
    pub fn synthetic(n: usize, seed: u64) -> FrameJet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n4 = n.pow(4);
        let block = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let mut t = vec![0.0; n4];
            for a in 0..n {
                for b in a + 1..n {
                    for c in 0..n {
                        for d in c + 1..n {
                            if (a, b) > (c, d) {
                                continue;
                            }
                            let v: f64 = rng.gen_range(-1.0..1.0);
                            for (p, q, s) in [((a, b), (c, d), 1.0), ((c, d), (a, b), 1.0)] {
                                t[ix4(n, p.0, p.1, q.0, q.1)] = s * v;
                                t[ix4(n, p.1, p.0, q.0, q.1)] = -s * v;
                                t[ix4(n, p.0, p.1, q.1, q.0)] = -s * v;
                                t[ix4(n, p.1, p.0, q.1, q.0)] = s * v;
                            }
                        }
                    }
                }
            }
            t
        };
        let riem = block(&mut rng);
        let nabla: Vec<f64> = (0..n).flat_map(|_| block(&mut rng)).collect();
        let nabla2: Vec<f64> = (0..n * n).flat_map(|_| block(&mut rng)).collect();
        FrameJet {
            n,
            riem,
            nabla,
            nabla2,
        }
    }

    fn ric(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).map(|a| self.r(a, i, a, j)).sum())
                    .collect()
            })
            .collect()
    }
}

/// The scalar contractions that appear in the series.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesInvariants {
    pub m: usize,
    pub scalar: f64,
    pub ric00: f64,
    /// ∇₀Ric̄₀₀
    pub d_ric00: f64,
    /// ∂₀S̄
    pub d_scalar: f64,
    /// ∇²₀₀Ric̄₀₀
    pub d2_ric00: f64,
    /// Hess(S̄)₀₀
    pub hess_scalar00: f64,
    /// Δ̄Ric̄₀₀
    pub lap_ric00: f64,
    pub lap_scalar: f64,
    /// Σ R̄₀ᵢ₀ⱼ²
    pub r0i0j_sq: f64,
    /// Σ R̄₀ᵢ₀ⱼ Ric̄ᵢⱼ
    pub r0i0j_ric: f64,
    /// Σ_{v≥1} Ric̄₀ᵥ²
    pub ric0v_sq: f64,
    /// Σ R̄_{ace0}²
    pub race0_sq: f64,
    pub ric_norm2: f64,
    pub riem_norm2: f64,
}

impl SeriesInvariants {
    pub fn new(j: &FrameJet) -> SeriesInvariants {
        let n = j.n;
        let ric = j.ric();
        let mut s = SeriesInvariants {
            m: n - 1,
            scalar: (0..n).map(|i| ric[i][i]).sum(),
            ric00: ric[0][0],
            d_ric00: (0..n).map(|a| j.d(0, a, 0, a, 0)).sum(),
            d_scalar: 0.0,
            d2_ric00: (0..n).map(|a| j.d2(0, 0, a, 0, a, 0)).sum(),
            hess_scalar00: 0.0,
            lap_ric00: 0.0,
            lap_scalar: 0.0,
            r0i0j_sq: 0.0,
            r0i0j_ric: 0.0,
            ric0v_sq: (1..n).map(|v| ric[0][v] * ric[0][v]).sum(),
            race0_sq: 0.0,
            ric_norm2: ric.iter().flatten().map(|v| v * v).sum(),
            riem_norm2: j.riem.iter().map(|v| v * v).sum(),
        };
        for a in 0..n {
            for b in 0..n {
                s.d_scalar += j.d(0, a, b, a, b);
                s.hess_scalar00 += j.d2(0, 0, a, b, a, b);
                s.lap_ric00 += j.d2(a, a, b, 0, b, 0);
                for c in 0..n {
                    s.lap_scalar += j.d2(c, c, a, b, a, b);
                    s.race0_sq += j.r(a, b, c, 0).powi(2);
                }
                s.r0i0j_sq += j.r(0, a, 0, b).powi(2);
                s.r0i0j_ric += j.r(0, a, 0, b) * ric[a][b];
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    H,
    LogDetA,
    LapIiLogDetA,
    DivIiZ,
    TrIiRicbar,
    TrIiRic,
    #[serde(rename = "h_ii")]
    HII,
    #[serde(rename = "area_ii")]
    AreaII,
    MetricG,
    ShapeA,
    #[serde(rename = "second_form_ii")]
    SecondFormII,
    #[serde(rename = "christoffel_ii")]
    ChristoffelII,
}

impl Quantity {
    pub const SCALARS: [Quantity; 8] = [
        Quantity::H,
        Quantity::LogDetA,
        Quantity::LapIiLogDetA,
        Quantity::DivIiZ,
        Quantity::TrIiRicbar,
        Quantity::TrIiRic,
        Quantity::HII,
        Quantity::AreaII,
    ];
}

/// Truncated expansion prefactor · r^{prefactor_power} · Σ c_k r^k
/// (+ log_coeff · log r), each c_k a flattened tensor of shape `shape`.
#[derive(Clone, Debug, Serialize)]
pub struct SeriesCoefficients {
    pub quantity: Quantity,
    pub center: Vec<f64>,
    pub direction: Option<Vec<f64>>,
    pub shape: Vec<usize>,
    pub prefactor: f64,
    pub prefactor_power: f64,
    pub log_coeff: f64,
    /// (power, coefficient)
    pub terms: Vec<(i32, Vec<f64>)>,
    pub truncation_order: i32,
}

impl SeriesCoefficients {
    pub fn eval(&self, r: f64) -> Vec<f64> {
        let len = self.shape.iter().product::<usize>().max(1);
        let mut out = vec![0.0; len];
        for (p, c) in &self.terms {
            let w = r.powi(*p);
            for (o, v) in out.iter_mut().zip(c) {
                *o += w * v;
            }
        }
        let pre = self.prefactor * r.powf(self.prefactor_power);
        for o in out.iter_mut() {
            *o = *o * pre + self.log_coeff * r.ln();
        }
        out
    }

    pub fn scalar(&self, r: f64) -> f64 {
        self.eval(r)[0]
    }

    pub fn coeff(&self, power: i32) -> Vec<f64> {
        self.terms
            .iter()
            .find(|(p, _)| *p == power)
            .map(|(_, c)| c.clone())
            .unwrap_or_default()
    }
}

fn scalar_terms(q: Quantity, s: &SeriesInvariants) -> (Vec<(i32, f64)>, f64, f64, f64) {
    let m = s.m as f64;
    let (sb, r00, d1, s1, d2, hs, lap, u2, v, p, t, q2) = (
        s.scalar,
        s.ric00,
        s.d_ric00,
        s.d_scalar,
        s.d2_ric00,
        s.hess_scalar00,
        s.lap_ric00,
        s.r0i0j_sq,
        s.r0i0j_ric,
        s.ric0v_sq,
        s.race0_sq,
        s.ric00 * s.ric00,
    );
    // (terms, prefactor, prefactor power, log coefficient)
    match q {
        Quantity::H => (
            vec![
                (-1, 1.0),
                (1, -r00 / (3.0 * m)),
                (2, -d1 / (4.0 * m)),
                (3, (-d2 / 10.0 - u2 / 45.0) / m),
            ],
            1.0,
            0.0,
            0.0,
        ),
        Quantity::LogDetA => (
            vec![
                (2, -r00 / 3.0),
                (3, -d1 / 4.0),
                (4, -7.0 / 90.0 * u2 - d2 / 10.0),
            ],
            1.0,
            0.0,
            -m,
        ),
        Quantity::LapIiLogDetA => (
            vec![
                (1, -2.0 / 3.0 * (sb - (m + 1.0) * r00)),
                (2, -s1 + 0.75 * (m + 2.0) * d1),
                (
                    3,
                    -16.0 / 45.0 * v + 14.0 / 45.0 * (3.0 + m) * u2 - 7.0 / 15.0 * t - 0.6 * hs
                        + (6.0 + 2.0 * m) / 5.0 * d2
                        + 22.0 / 45.0 * (p + q2)
                        - 4.0 / 9.0 * q2
                        - lap / 5.0,
                ),
            ],
            1.0,
            0.0,
            0.0,
        ),
        Quantity::DivIiZ => (
            vec![
                (1, (m + 1.0) * r00 - sb),
                (2, (m + 2.0) * d1 - 1.5 * s1),
                (
                    3,
                    -v / 3.0 + (m + 3.0) / 2.0 * d2 + 2.0 / 3.0 * p + (m + 3.0) / 3.0 * u2
                        - hs
                        - 0.5 * t,
                ),
            ],
            1.0,
            0.0,
            0.0,
        ),
        Quantity::TrIiRicbar => (
            vec![
                (1, sb - r00),
                (2, s1 - d1),
                (3, v / 3.0 - d2 / 2.0 + hs / 2.0),
            ],
            1.0,
            0.0,
            0.0,
        ),
        Quantity::TrIiRic => (
            vec![
                (-1, m * (m - 1.0)),
                (1, sb - (m + 5.0) / 3.0 * r00),
                (2, s1 - (m + 7.0) / 4.0 * d1),
                (
                    3,
                    v / 3.0 - (m + 9.0) / 10.0 * d2 - (m + 14.0) / 45.0 * u2 + hs / 2.0,
                ),
            ],
            1.0,
            0.0,
            0.0,
        ),
        Quantity::HII => (
            vec![
                (-1, m / 2.0),
                (1, (sb - (m + 3.0) * r00) / 3.0),
                (2, s1 / 2.0 - (20.0 + 5.0 * m) / 16.0 * d1),
                (
                    3,
                    7.0 / 90.0 * v
                        - (15.0 + 3.0 * m) / 20.0 * d2
                        - 19.0 / 90.0 * p
                        - (20.0 + 4.0 * m) / 45.0 * u2
                        + 7.0 / 20.0 * hs
                        + 2.0 / 15.0 * t
                        + q2 / 90.0
                        - lap / 20.0,
                ),
            ],
            1.0,
            0.0,
            0.0,
        ),
        Quantity::AreaII => (
            vec![
                (0, 1.0),
                (2, -sb / (3.0 * (m + 1.0))),
                (
                    4,
                    (sb * sb / 18.0 + s.ric_norm2 / 15.0
                        - s.riem_norm2 / 15.0
                        - 0.15 * s.lap_scalar)
                        / ((m + 1.0) * (m + 3.0)),
                ),
            ],
            unit_sphere_area(s.m),
            m / 2.0,
            0.0,
        ),
        _ => unreachable!(),
    }
}

fn tensor_terms(q: Quantity, j: &FrameJet) -> (Vec<usize>, Vec<(i32, Vec<f64>)>) {
    let n = j.n;
    let m = n - 1;
    let sq =
        |i: usize, k: usize| -> f64 { (0..n).map(|s| j.r(0, i, 0, s) * j.r(0, k, 0, s)).sum() };
    let mat = |lo: usize, f: &dyn Fn(usize, usize) -> f64| -> Vec<f64> {
        (lo..n)
            .flat_map(|i| (lo..n).map(move |k| (i, k)))
            .map(|(i, k)| f(i, k))
            .collect()
    };
    let delta = |i: usize, k: usize| if i == k { 1.0 } else { 0.0 };
    match q {
        Quantity::MetricG => (
            vec![n, n],
            vec![
                (0, mat(0, &delta)),
                (2, mat(0, &|i, k| -j.r(0, i, 0, k) / 3.0)),
                (3, mat(0, &|i, k| -j.d(0, 0, i, 0, k) / 6.0)),
                (
                    4,
                    mat(0, &|i, k| {
                        (-6.0 * j.d2(0, 0, 0, i, 0, k) + 16.0 / 3.0 * sq(i, k)) / 120.0
                    }),
                ),
            ],
        ),
        Quantity::ShapeA => (
            vec![m, m],
            vec![
                (-1, mat(1, &delta)),
                (1, mat(1, &|i, k| -j.r(0, i, 0, k) / 3.0)),
                (2, mat(1, &|i, k| -j.d(0, 0, i, 0, k) / 4.0)),
                (
                    3,
                    mat(1, &|i, k| -j.d2(0, 0, 0, i, 0, k) / 10.0 - sq(i, k) / 45.0),
                ),
            ],
        ),
        Quantity::SecondFormII => (
            vec![m, m],
            vec![
                (-1, mat(1, &delta)),
                (1, mat(1, &|i, k| -2.0 / 3.0 * j.r(0, i, 0, k))),
                (2, mat(1, &|i, k| -5.0 / 12.0 * j.d(0, 0, i, 0, k))),
                (
                    3,
                    mat(1, &|i, k| {
                        -3.0 / 20.0 * j.d2(0, 0, 0, i, 0, k) + 2.0 / 15.0 * sq(i, k)
                    }),
                ),
            ],
        ),
        Quantity::ChristoffelII => {
            let mut c = vec![0.0; m * m * m];
            for s in 0..m {
                for a in 0..m {
                    for b in 0..m {
                        c[ix3(m, s, a, b)] =
                            2.0 / 3.0 * (j.r(s + 1, a + 1, 0, b + 1) + j.r(0, a + 1, s + 1, b + 1));
                    }
                }
            }
            (vec![m, m, m], vec![(1, c)])
        }
        _ => unreachable!(),
    }
}

/// Series coefficients from frame data.
pub fn series_from_frame(j: &FrameJet, quantity: Quantity) -> SeriesCoefficients {
    let base = SeriesCoefficients {
        quantity,
        center: Vec::new(),
        direction: None,
        shape: vec![],
        prefactor: 1.0,
        prefactor_power: 0.0,
        log_coeff: 0.0,
        terms: vec![],
        truncation_order: 3,
    };
    if Quantity::SCALARS.contains(&quantity) {
        let inv = SeriesInvariants::new(j);
        let (terms, pre, pp, lc) = scalar_terms(quantity, &inv);
        SeriesCoefficients {
            prefactor: pre,
            prefactor_power: pp,
            log_coeff: lc,
            terms: terms.into_iter().map(|(p, c)| (p, vec![c])).collect(),
            truncation_order: match quantity {
                Quantity::LogDetA | Quantity::AreaII => 4,
                _ => 3,
            },
            ..base
        }
    } else {
        let (shape, terms) = tensor_terms(quantity, j);
        SeriesCoefficients {
            shape,
            truncation_order: match quantity {
                Quantity::MetricG => 4,
                Quantity::ChristoffelII => 1,
                _ => 3,
            },
            terms,
            ..base
        }
    }
}

/// Frame data at n with e₀ as axis 0.
pub fn frame_jet(chart: &MetricChart, n: &[f64], e0: &[f64]) -> Result<FrameJet> {
    require_riemannian(chart)?;
    unit_direction(chart, n, e0)?;
    let jet = curvature_jet(chart, n, 2)?;
    let (frame, _) = orthonormal_frame(chart, n, Some(e0))?;
    FrameJet::from_curvature_jet(&jet, &frame)
}

/// Truncated series of `quantity` for spheres about n, along e₀.
pub fn series_coefficients(
    chart: &MetricChart,
    n: &[f64],
    e0: &[f64],
    quantity: Quantity,
) -> Result<SeriesCoefficients> {
    let j = frame_jet(chart, n, e0)?;
    let mut s = series_from_frame(&j, quantity);
    s.center = n.to_vec();
    s.direction = if quantity == Quantity::AreaII {
        None
    } else {
        Some(e0.to_vec())
    };
    Ok(s)
}

/// Value of the truncated series at radius r.
pub fn series_eval(
    chart: &MetricChart,
    n: &[f64],
    e0: &[f64],
    r: f64,
    quantity: Quantity,
) -> Result<Vec<f64>> {
    Ok(series_coefficients(chart, n, e0, quantity)?.eval(r))
}

/// −½(tr_II Ric̄ − tr_II Ric + (m² − 2m)H − ½Δ_II log det A + div_II Z) applied
/// to the coefficient of r^k of each series.
pub fn recombine_h_ii(m: usize, power: i32, parts: &[(Quantity, &SeriesCoefficients)]) -> f64 {
    let get = |q: Quantity| -> f64 {
        parts
            .iter()
            .find(|(p, _)| *p == q)
            .map(|(_, s)| s.coeff(power).first().copied().unwrap_or(0.0))
            .unwrap_or(0.0)
    };
    let m = m as f64;
    -0.5 * (get(Quantity::TrIiRicbar) - get(Quantity::TrIiRic)
        + (m * m - 2.0 * m) * get(Quantity::H)
        - 0.5 * get(Quantity::LapIiLogDetA)
        + get(Quantity::DivIiZ))
}

/// Numeric value of a scalar quantity on the sphere of radius r (at
/// exp_n(r e₀), or integrated for Area_II).
pub fn numeric_value(
    sphere: &GeodesicSphere,
    quantity: Quantity,
    grid: &QuadratureGrid,
) -> Result<f64> {
    let u = sphere.center_param();
    Ok(match quantity {
        Quantity::H => surface_point(sphere, &u)?.mean_curvature,
        Quantity::LogDetA => surface_point(sphere, &u)?.det_a.ln(),
        Quantity::AreaII => area_value(sphere, grid, AreaKind::SecondForm)?,
        Quantity::LapIiLogDetA
        | Quantity::DivIiZ
        | Quantity::TrIiRicbar
        | Quantity::TrIiRic
        | Quantity::HII => {
            let p = ii_geometry(sphere, &u)?;
            match quantity {
                Quantity::LapIiLogDetA => p.lap_log_det_a,
                Quantity::DivIiZ => p.div_z,
                Quantity::TrIiRicbar => p.tr_ii_ric_bar,
                Quantity::TrIiRic => p.tr_ii_ric,
                _ => p.h_ii.variational,
            }
        }
        q => {
            return Err(GeomError::BadParameters(format!(
                "{q:?} has no scalar numeric counterpart"
            )))
        }
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RemainderRow {
    pub r: f64,
    pub numeric: f64,
    pub series: f64,
    /// numeric − series (divided by r^{m/2} for Area_II)
    pub remainder: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RemainderStudy {
    pub quantity: Quantity,
    pub rows: Vec<RemainderRow>,
    /// Least-squares slope of log|remainder| against log r (∞ at the noise floor).
    pub slope: f64,
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}

/// Numeric-minus-series remainders over several radii.
pub fn series_vs_numeric(
    chart: &MetricChart,
    n: &[f64],
    e0: &[f64],
    quantity: Quantity,
    radii: &[f64],
    grid: &QuadratureGrid,
) -> Result<RemainderStudy> {
    let series = series_coefficients(chart, n, e0, quantity)?;
    let m = chart.dim - 1;
    let rows: Result<Vec<RemainderRow>> = radii
        .par_iter()
        .map(|&r| {
            let s = geodesic_sphere(chart, n, r, Some(e0))?;
            let numeric = numeric_value(&s, quantity, grid)?;
            let sv = series.scalar(r);
            let scale = if quantity == Quantity::AreaII {
                r.powf(m as f64 / 2.0)
            } else {
                1.0
            };
            Ok(RemainderRow {
                r,
                numeric,
                series: sv,
                remainder: (numeric - sv) / scale,
            })
        })
        .collect();
    let rows = rows?;
    let floor = rows
        .iter()
        .any(|row| row.remainder.abs() < 1e-13 * (1.0 + row.series.abs()));
    let slope = if floor || rows.len() < 2 {
        f64::INFINITY
    } else {
        loglog_slope(
            &rows.iter().map(|r| r.r).collect::<Vec<_>>(),
            &rows.iter().map(|r| r.remainder.abs()).collect::<Vec<_>>(),
        )
    };
    Ok(RemainderStudy {
        quantity,
        rows,
        slope,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct FlatnessDiagnostic {
    pub scalar: f64,
    pub riem_norm2: f64,
    pub ricci_norm2: f64,
    pub weyl_norm2: f64,
    pub weyl_norm2_identity: f64,
    /// S̄ and ‖R̄‖² − ‖Ric̄‖².
    pub condition_residuals: [f64; 2],
    /// +1 or −1 if Ric̄ is positive or negative semidefinite, 0 otherwise.
    pub ricci_definiteness: i8,
}

/// The two necessary conditions for Euclidean Area_II of all small
/// geodesic spheres, with the Weyl norm computed directly and by identity.
pub fn flatness_diagnostic(jet: &CurvatureJet) -> Result<FlatnessDiagnostic> {
    let n = jet.dim;
    if n < 3 {
        return Err(GeomError::DimensionTooSmall(format!(
            "ambient dimension {n} < 3"
        )));
    }
    let frame = {
        let g = &jet.metric;
        let a = nalgebra::DMatrix::from_fn(n, n, |i, j| g[i][j]);
        let ch = a.clone().cholesky().ok_or_else(|| {
            GeomError::UnsupportedSignature("metric is not positive definite".into())
        })?;
        let linv = ch
            .l()
            .try_inverse()
            .ok_or_else(|| GeomError::DegenerateMetric("singular metric".into()))?;
        (0..n)
            .map(|a| (0..n).map(|k| linv[(a, k)]).collect::<Vec<f64>>())
            .collect::<Vec<_>>()
    };
    let fj = FrameJet {
        n,
        riem: transform4(n, &jet.riem, &frame),
        nabla: vec![],
        nabla2: vec![],
    };
    let ric = fj.ric();
    let s: f64 = (0..n).map(|i| ric[i][i]).sum();
    let riem2: f64 = fj.riem.iter().map(|v| v * v).sum();
    let ric2: f64 = ric.iter().flatten().map(|v| v * v).sum();
    let d = n as f64;
    let mut weyl2 = 0.0;
    let del = |i: usize, k: usize| if i == k { 1.0 } else { 0.0 };
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for e in 0..n {
                    let kn_ric = ric[a][c] * del(b, e) + ric[b][e] * del(a, c)
                        - ric[a][e] * del(b, c)
                        - ric[b][c] * del(a, e);
                    let kn_g = 2.0 * (del(a, c) * del(b, e) - del(a, e) * del(b, c));
                    let w = fj.r(a, b, c, e) - kn_ric / (d - 2.0)
                        + s / (2.0 * (d - 1.0) * (d - 2.0)) * kn_g;
                    weyl2 += w * w;
                }
            }
        }
    }
    let m = d - 1.0;
    let identity = riem2 - 4.0 / (m - 1.0) * ric2 + 2.0 / (m * (m - 1.0)) * s * s;
    let eig = nalgebra::DMatrix::from_fn(n, n, |i, j| ric[i][j]).symmetric_eigenvalues();
    let tol = 1e-10 * (1.0 + eig.amax());
    let definiteness = if eig.iter().all(|&l| l >= -tol) {
        1
    } else if eig.iter().all(|&l| l <= tol) {
        -1
    } else {
        0
    };
    Ok(FlatnessDiagnostic {
        scalar: s,
        riem_norm2: riem2,
        ricci_norm2: ric2,
        weyl_norm2: weyl2,
        weyl_norm2_identity: identity,
        condition_residuals: [s, riem2 - ric2],
        ricci_definiteness: definiteness,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaDerivative {
    pub numeric: f64,
    pub integral: f64,
    pub gap: f64,
}

/// ∂_r Area_II(𝒢_n(r)) by central differences against ∫ H_II dΩ_II.
pub fn area_derivative_check(
    chart: &MetricChart,
    n: &[f64],
    r: f64,
    grid: &QuadratureGrid,
) -> Result<AreaDerivative> {
    let base = geodesic_sphere(chart, n, r, None)?;
    let ladder = [0.04 * r, 0.02 * r, 0.01 * r];
    let fd = central_difference(&ladder, &|d| {
        let s = geodesic_sphere(chart, n, r + d, None)?;
        area_value(&s, grid, AreaKind::SecondForm)
    })?;
    let parts: Result<Vec<f64>> = grid
        .nodes
        .par_iter()
        .zip(&grid.weights)
        .map(|(u, w)| {
            let p = ii_geometry(&base, u)?;
            let dom =
                crate::linalg::determinant(&p.base.first).abs().sqrt() * p.base.det_a.abs().sqrt();
            Ok(w * p.h_ii.variational * dom)
        })
        .collect();
    let integral: f64 = parts?.iter().sum();
    Ok(AreaDerivative {
        numeric: fd.value,
        integral,
        gap: (fd.value - integral).abs() / integral.abs().max(f64::MIN_POSITIVE),
    })
}

/// A unit vector at n drawn from a seeded generator.
pub fn random_unit_direction(chart: &MetricChart, n: &[f64], seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..chart.dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let g = chart.metric_at(n);
    let q = crate::linalg::bilinear(&g, &v, &v);
    if q <= 0.0 {
        return Err(GeomError::BadDirection(
            "random vector is not spacelike".into(),
        ));
    }
    Ok(v.iter().map(|c| c / q.sqrt()).collect())
}
