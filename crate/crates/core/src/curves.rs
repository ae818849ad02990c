//! Curves in semi-Riemannian surfaces: Frenet data, H_II from the geodesic
//! curvature, Length_II and the II-minimal curvature ODEs.

use crate::ambient::{curvature_jet, MetricChart};
use crate::hypersurface::{Immersion, Orientation};
use crate::jet::{Jet, Layout, Real};
use crate::riemann::ix3;
use crate::variation::gauss_legendre;
use crate::{GeomError, Result};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Arclength parametrization s ↦ chart coordinates, in jets of s.
pub type CurveFn = dyn Fn(&Jet) -> Vec<Jet> + Send + Sync;

#[derive(Clone)]
pub struct FrenetCurve {
    pub surface: MetricChart,
    pub curve: Arc<CurveFn>,
    pub label: String,
}

impl FrenetCurve {
    pub fn new(
        surface: MetricChart,
        curve: Arc<CurveFn>,
        label: impl Into<String>,
    ) -> Result<FrenetCurve> {
        if surface.dim != 2 {
            return Err(GeomError::BadParameters(format!(
                "curves need a surface chart, got dim {}",
                surface.dim
            )));
        }
        Ok(FrenetCurve {
            surface,
            curve,
            label: label.into(),
        })
    }

    /// Circle of radius r about the chart origin of a flat chart.
    pub fn circle(surface: MetricChart, r: f64) -> Result<FrenetCurve> {
        if r <= 0.0 {
            return Err(GeomError::BadParameters("radius must be positive".into()));
        }
        FrenetCurve::new(
            surface,
            Arc::new(move |s: &Jet| vec![(s.clone() / r).cos() * r, (s.clone() / r).sin() * r]),
            format!("circle(r={r})"),
        )
    }

    /// Unit-speed line through `p` with direction `d`.
    pub fn line(surface: MetricChart, p: [f64; 2], d: [f64; 2]) -> Result<FrenetCurve> {
        let n = (d[0] * d[0] + d[1] * d[1]).sqrt();
        FrenetCurve::new(
            surface,
            Arc::new(move |s: &Jet| {
                vec![s.clone() * (d[0] / n) + p[0], s.clone() * (d[1] / n) + p[1]]
            }),
            "line",
        )
    }

    /// Circle of colatitude θ₀ about the pole of a unit-sphere chart.
    pub fn latitude(surface: MetricChart, theta0: f64) -> Result<FrenetCurve> {
        let c = surface
            .constant_curvature()
            .filter(|c| (*c - 1.0).abs() < 1e-12 && surface.index == 0);
        if c.is_none() {
            return Err(GeomError::BadParameters(
                "latitude circles need the unit sphere chart".into(),
            ));
        }
        if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
            return Err(GeomError::BadParameters(
                "colatitude must lie in (0, π)".into(),
            ));
        }
        let rho = 2.0 * (theta0 / 2.0).tan();
        let w = 1.0 / theta0.sin();
        FrenetCurve::new(
            surface,
            Arc::new(move |s: &Jet| vec![(s.clone() * w).cos() * rho, (s.clone() * w).sin() * rho]),
            format!("latitude(θ={theta0})"),
        )
    }

    /// Catenary whose curvature is A/(A²(s+Q)² + 1).
    pub fn catenary(surface: MetricChart, a: f64, q: f64) -> Result<FrenetCurve> {
        if a <= 0.0 {
            return Err(GeomError::BadParameters(
                "catenary parameter A must be positive".into(),
            ));
        }
        FrenetCurve::new(
            surface,
            Arc::new(move |s: &Jet| {
                let w = (s.clone() + q) * a;
                vec![w.clone().asinh() / a, (w.clone() * w + 1.0).sqrt() / a]
            }),
            format!("catenary(A={a},Q={q})"),
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrenetPoint {
    pub s: f64,
    pub x: Vec<f64>,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub kappa: f64,
    pub kappa_1: f64,
    pub kappa_2: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Gauss curvature of the surface at the point.
    pub k_bar: f64,
    pub unit_speed_defect: f64,
    pub serret_t: f64,
    pub serret_u: f64,
}

fn covariant_derivative(chart: &MetricChart, x: &[Jet], v: &[Jet], t: &[Jet]) -> Result<Vec<Jet>> {
    let gam = chart.christoffel_generic(x).ok_or_else(|| {
        GeomError::DegenerateMetric(format!(
            "at {:?}",
            x.iter().map(|v| v.value()).collect::<Vec<_>>()
        ))
    })?;
    Ok((0..2)
        .map(|k| {
            let mut acc = v[k].diff(0);
            for i in 0..2 {
                for j in 0..2 {
                    acc += &gam[ix3(2, k, i, j)]
                        * &(&t[i].clone().truncate(acc.order())
                            * &v[j].clone().truncate(acc.order()));
                }
            }
            acc
        })
        .collect())
}

fn inner(g: &[Vec<Jet>], a: &[Jet], b: &[Jet]) -> Jet {
    let mut acc = Jet::constant(0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += &g[i][j] * &(&a[i] * &b[j]);
        }
    }
    acc
}

fn trunc(v: &[Jet], k: usize) -> Vec<Jet> {
    v.iter().map(|c| c.clone().truncate(k)).collect()
}

/// Frenet frame, κ with its first two derivatives, and the frame residuals.
/// U is the normalization of ∇̄_T T, so βκ > 0.
pub fn frenet(curve: &FrenetCurve, s: f64) -> Result<FrenetPoint> {
    let chart = &curve.surface;
    let l = Layout::get(1, 5);
    let sj = Jet::variable(l, 5, 0, s);
    let x = (curve.curve)(&sj);
    let xv: Vec<f64> = x.iter().map(|v| v.value()).collect();
    chart.check_point(&xv)?;
    let t: Vec<Jet> = x.iter().map(|c| c.diff(0)).collect();
    let x3 = trunc(&x, 3);
    let nt = covariant_derivative(chart, &x3, &trunc(&t, 3), &trunc(&t, 3))?;
    let g = chart.metric(&x3);
    let tt = inner(&g, &trunc(&t, 2), &trunc(&t, 2));
    let speed = tt.value();
    let beta = speed.signum();
    let unit_speed_defect = (speed.abs() - 1.0).abs();
    if unit_speed_defect > 1e-9 {
        return Err(GeomError::NotUnitSpeed(format!(
            "|ḡ(T,T)| = {} at s = {s}",
            speed.abs()
        )));
    }
    let nn = inner(&g, &nt, &nt);
    if nn.value().abs() <= 1e-10 {
        return Err(GeomError::NotFrenet(format!(
            "ḡ(∇T T, ∇T T) = {:.3e} at s = {s}",
            nn.value()
        )));
    }
    let alpha = nn.value().signum();
    let len = if alpha < 0.0 { -nn } else { nn }.sqrt();
    let kappa = len.clone() * beta;
    let inv = len.recip();
    let u: Vec<Jet> = nt.iter().map(|c| c * &inv).collect();
    let nu = covariant_derivative(chart, &trunc(&x3, 2), &trunc(&u, 2), &trunc(&t, 2))?;
    let k0 = kappa.value();
    let t0: Vec<f64> = t.iter().map(|v| v.value()).collect();
    let u0: Vec<f64> = u.iter().map(|v| v.value()).collect();
    let serret_t = (0..2)
        .map(|k| (nt[k].value() - beta * k0 * u0[k]).abs())
        .fold(0.0, f64::max);
    let serret_u = (0..2)
        .map(|k| (nu[k].value() + alpha * k0 * t0[k]).abs())
        .fold(0.0, f64::max);
    let cj = curvature_jet(chart, &xv, 0)?;
    Ok(FrenetPoint {
        s,
        x: xv,
        t: t0,
        u: u0,
        kappa: k0,
        kappa_1: kappa.d1(0),
        kappa_2: kappa.d2(0, 0),
        alpha,
        beta,
        k_bar: cj.scalar / 2.0,
        unit_speed_defect,
        serret_t,
        serret_u,
    })
}

/// ½(−αK̄/κ + κ + (αβ/4)(2κ″/κ² − 3κ′²/κ³)) from the curvature data.
pub fn h_ii_from_kappa(kappa: f64, k1: f64, k2: f64, k_bar: f64, alpha: f64, beta: f64) -> f64 {
    0.5 * (-alpha * k_bar / kappa
        + kappa
        + alpha * beta / 4.0 * (2.0 * k2 / (kappa * kappa) - 3.0 * k1 * k1 / kappa.powi(3)))
}

pub fn h_ii_curve(curve: &FrenetCurve, s: f64) -> Result<f64> {
    let p = frenet(curve, s)?;
    Ok(h_ii_from_kappa(
        p.kappa, p.kappa_1, p.kappa_2, p.k_bar, p.alpha, p.beta,
    ))
}

/// ∫_a^b √|κ| ds by composite Gauss–Legendre.
pub fn length_ii(curve: &FrenetCurve, a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut acc = 0.0;
    for p in 0..panels {
        let lo = a + h * p as f64;
        let (x, w) = gauss_legendre(16, lo, lo + h);
        for (s, wi) in x.iter().zip(&w) {
            acc += wi * frenet(curve, *s)?.kappa.abs().sqrt();
        }
    }
    Ok(acc)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveAmbient {
    Planar,
    UnitSphere,
}

/// Left-hand side of the H_II = 0 equation for κ(s).
pub fn ode_residual(kappa: f64, k1: f64, k2: f64, ambient: CurveAmbient) -> f64 {
    match ambient {
        CurveAmbient::Planar => 4.0 * kappa.powi(4) + 2.0 * kappa * k2 - 3.0 * k1 * k1,
        CurveAmbient::UnitSphere => {
            4.0 * kappa * kappa - 4.0 * kappa.powi(4) - 2.0 * k2 * kappa + 3.0 * k1 * k1
        }
    }
}

fn kappa_accel(k: f64, k1: f64, ambient: CurveAmbient) -> f64 {
    match ambient {
        CurveAmbient::Planar => (3.0 * k1 * k1 - 4.0 * k.powi(4)) / (2.0 * k),
        CurveAmbient::UnitSphere => (4.0 * k * k - 4.0 * k.powi(4) + 3.0 * k1 * k1) / (2.0 * k),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaSolution {
    pub s: Vec<f64>,
    pub kappa: Vec<f64>,
    pub kappa_1: Vec<f64>,
    /// Largest deviation from the run with half the step.
    pub halving_gap: f64,
}

fn rk4_kappa(
    ambient: CurveAmbient,
    k0: f64,
    k10: f64,
    s_max: f64,
    steps: usize,
) -> Result<Vec<(f64, f64, f64)>> {
    let h = s_max / steps as f64;
    let f = |k: f64, k1: f64| (k1, kappa_accel(k, k1, ambient));
    let mut out = Vec::with_capacity(steps + 1);
    let (mut k, mut k1) = (k0, k10);
    out.push((0.0, k, k1));
    for i in 0..steps {
        let (a1, b1) = f(k, k1);
        let (a2, b2) = f(k + 0.5 * h * a1, k1 + 0.5 * h * b1);
        let (a3, b3) = f(k + 0.5 * h * a2, k1 + 0.5 * h * b2);
        let (a4, b4) = f(k + h * a3, k1 + h * b3);
        k += h / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        k1 += h / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4);
        let s = h * (i + 1) as f64;
        if !(k > 1e-8 && k < 1e8) || !k1.is_finite() {
            return Err(GeomError::BlowUp(format!("κ = {k:.3e} at s = {s:.6}")));
        }
        out.push((s, k, k1));
    }
    Ok(out)
}

/// RK4 for the II-minimal curvature equation with h = s_max/4096.
pub fn integrate_ii_minimal(
    ambient: CurveAmbient,
    k0: f64,
    k10: f64,
    s_max: f64,
) -> Result<KappaSolution> {
    if !(k0 > 0.0) || !(s_max > 0.0) || !k10.is_finite() {
        return Err(GeomError::BadParameters("need κ₀ > 0 and s_max > 0".into()));
    }
    let n = 4096;
    let coarse = rk4_kappa(ambient, k0, k10, s_max, n)?;
    let fine = rk4_kappa(ambient, k0, k10, s_max, 2 * n)?;
    let halving_gap = coarse
        .iter()
        .zip(fine.iter().step_by(2))
        .map(|(a, b)| (a.1 - b.1).abs())
        .fold(0.0, f64::max);
    Ok(KappaSolution {
        s: coarse.iter().map(|p| p.0).collect(),
        kappa: coarse.iter().map(|p| p.1).collect(),
        kappa_1: coarse.iter().map(|p| p.2).collect(),
        halving_gap,
    })
}

/// κ(s) = A/(A²(s+Q)² + 1).
pub fn catenary_kappa(a: f64, q: f64, s: f64) -> f64 {
    a / (a * a * (s + q).powi(2) + 1.0)
}

/// (A, Q) of the planar solution through κ(0) = κ₀, κ′(0) = κ₁, from
/// φ = 1/κ = A(s+Q)² + 1/A.
pub fn catenary_fit(k0: f64, k1: f64) -> (f64, f64) {
    let phi = 1.0 / k0;
    let dphi = -k1 / (k0 * k0);
    let a = (4.0 + dphi * dphi) / (4.0 * phi);
    (a, dphi / (2.0 * a))
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveRow {
    pub s: f64,
    pub kappa: f64,
    pub h_ii: f64,
    pub ode_residual: f64,
    pub serret_t: f64,
    pub serret_u: f64,
}

/// Samples of (s, κ, H_II, residuals) on a uniform grid of `n + 1` points.
pub fn curve_table(
    curve: &FrenetCurve,
    a: f64,
    b: f64,
    n: usize,
    ambient: CurveAmbient,
) -> Result<Vec<CurveRow>> {
    (0..=n)
        .map(|i| {
            let s = if n == 0 {
                a
            } else {
                a + (b - a) * i as f64 / n as f64
            };
            let p = frenet(curve, s)?;
            Ok(CurveRow {
                s,
                kappa: p.kappa,
                h_ii: h_ii_from_kappa(p.kappa, p.kappa_1, p.kappa_2, p.k_bar, p.alpha, p.beta),
                ode_residual: ode_residual(p.kappa, p.kappa_1, p.kappa_2, ambient),
                serret_t: p.serret_t,
                serret_u: p.serret_u,
            })
        })
        .collect()
}

/// A curve seen as a one-dimensional hypersurface of its surface.
pub struct CurveImmersion {
    pub curve: FrenetCurve,
    pub range: (f64, f64),
}

impl Immersion for CurveImmersion {
    fn param_dim(&self) -> usize {
        1
    }
    fn ambient(&self) -> &MetricChart {
        &self.curve.surface
    }
    fn param_domain(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![self.range.0], vec![self.range.1])
    }
    fn map_jets(&self, u: &[Jet]) -> Result<Vec<Jet>> {
        Ok((self.curve.curve)(&u[0]))
    }
    fn label(&self) -> String {
        self.curve.label.clone()
    }
    fn orientation_at(&self, _u: &[f64]) -> Result<Orientation> {
        Ok(Orientation::Convex)
    }
}
