//! Runs the checks of a parsed scenario.

use crate::scenario::{Check, CheckOp, CurveSpec, GridSpec, Reference, Scenario, Subject};
use serde::Serialize;
use sff_core::ambient::{curvature_jet, MetricChart};
use sff_core::curves::{
    catenary_fit, catenary_kappa, curve_table, integrate_ii_minimal, CurveAmbient, FrenetCurve,
};
use sff_core::hypersurface::{
    gauss_codazzi_residual, sample_grid, Immersion, ImmersionSpec, StandardImmersion,
};
use sff_core::iigeom::{ii_geometry, transport_holonomy_probe, ParamCurve};
use sff_core::spheres::{
    area_derivative_check, flatness_diagnostic, geodesic_sphere, numeric_value,
    random_unit_direction, recombine_h_ii, series_coefficients, series_from_frame,
    series_vs_numeric, FrameJet, Quantity, SeriesCoefficients,
};
use sff_core::variation::{area, first_variation_check, AreaKind, QuadratureGrid, S_LADDER};
use sff_core::GeomError;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub index: usize,
    pub check: String,
    pub status: Status,
    pub value: Option<f64>,
    /// Tolerance after scaling, or the minimum slope for slope checks.
    pub threshold: Option<f64>,
    pub detail: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<Table>,
}

#[derive(Debug)]
pub enum RunError {
    Schema(String),
    Geom(GeomError),
}

impl From<GeomError> for RunError {
    fn from(e: GeomError) -> Self {
        RunError::Geom(e)
    }
}

type R<T> = Result<T, RunError>;

pub struct Context {
    pub seed: u64,
    pub tolerance_scale: f64,
}

enum Built {
    Immersions(Vec<StandardImmersion>, GridSpec),
    Curve(FrenetCurve, [f64; 2], usize, CurveAmbient),
    Ode(CurveAmbient),
    Sphere(MetricChart, Vec<f64>, Vec<f64>),
    Jets(Vec<usize>, usize),
}

fn chart(s: &Scenario) -> R<MetricChart> {
    let spec = s
        .chart
        .as_ref()
        .ok_or_else(|| RunError::Schema("subject needs a chart".into()))?;
    Ok(spec.build()?)
}

fn build(s: &Scenario, ctx: &Context) -> R<Built> {
    let default_grid = GridSpec::Sample { k: 6, inset: 0.05 };
    Ok(match &s.subject {
        Subject::Immersion { immersion, grid } => Built::Immersions(
            vec![immersion.build(&chart(s)?)?],
            grid.clone().unwrap_or(default_grid),
        ),
        Subject::OvaloidFamily {
            count,
            radius,
            amplitude,
            grid,
        } => {
            let c = chart(s)?;
            let imms = (0..*count as u64)
                .map(|k| {
                    ImmersionSpec::Ovaloid {
                        radius: *radius,
                        amplitude: *amplitude,
                        seed: ctx.seed + k,
                        center: None,
                    }
                    .build(&c)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Built::Immersions(imms, grid.clone().unwrap_or(default_grid))
        }
        Subject::Curve {
            curve,
            range,
            points,
            ambient,
        } => {
            let c = chart(s)?;
            let fc = match curve {
                CurveSpec::Circle { radius } => FrenetCurve::circle(c, *radius)?,
                CurveSpec::Catenary { a, q } => FrenetCurve::catenary(c, *a, *q)?,
                CurveSpec::Latitude { theta } => FrenetCurve::latitude(c, *theta)?,
                CurveSpec::Line { point, direction } => FrenetCurve::line(c, *point, *direction)?,
            };
            Built::Curve(fc, *range, *points, *ambient)
        }
        Subject::CurveOde { ambient } => Built::Ode(*ambient),
        Subject::SphereStudy { center, direction } => {
            let c = chart(s)?;
            c.check_point(center)?;
            let d = match direction {
                Some(d) => d.clone(),
                None => {
                    let (frame, _) = sff_core::ambient::orthonormal_frame(&c, center, None)?;
                    frame[0].clone()
                }
            };
            Built::Sphere(c, center.clone(), d)
        }
        Subject::SyntheticJets { dims, count } => Built::Jets(dims.clone(), *count),
    })
}

fn points(imm: &dyn Immersion, grid: &GridSpec) -> R<Vec<Vec<f64>>> {
    Ok(match grid {
        GridSpec::Sample { k, inset } => sample_grid(imm, *k, *inset),
        _ => quadrature(imm, grid)?.nodes,
    })
}

fn quadrature(imm: &dyn Immersion, grid: &GridSpec) -> R<QuadratureGrid> {
    let m = imm.param_dim();
    Ok(match grid {
        GridSpec::Sample { .. } => {
            return Err(RunError::Schema(
                "integration needs a quadrature grid, not a sample lattice".into(),
            ))
        }
        GridSpec::Tensor { n } => {
            if n.len() != m {
                return Err(RunError::Schema(format!(
                    "tensor grid has {} axes, immersion has {m}",
                    n.len()
                )));
            }
            let (lo, hi) = imm.param_domain();
            QuadratureGrid::tensor_gauss_legendre(&lo, &hi, n)
        }
        GridSpec::LatLong { n_lat, n_lon } => QuadratureGrid::lat_long(m, *n_lat, *n_lon),
        GridSpec::ProductSpheres { k, n_lat, n_lon } => {
            QuadratureGrid::product_spheres(*k, m, *n_lat, *n_lon)
        }
    })
}

fn sphere_grid(m: usize, grid: &Option<GridSpec>) -> R<QuadratureGrid> {
    match grid {
        None => Ok(QuadratureGrid::lat_long(m, 24, 48)),
        Some(GridSpec::LatLong { n_lat, n_lon }) => Ok(QuadratureGrid::lat_long(m, *n_lat, *n_lon)),
        Some(_) => Err(RunError::Schema("sphere studies use lat_long grids".into())),
    }
}

/// Outcome of one check before thresholds are applied.
struct Measured {
    value: f64,
    /// Extra pass condition beyond value ≤ tolerance.
    extra: Option<(bool, String)>,
    detail: String,
    table: Option<Table>,
}

fn measured(value: f64, detail: impl Into<String>) -> Measured {
    Measured {
        value,
        extra: None,
        detail: detail.into(),
        table: None,
    }
}

fn max_over<F>(imms: &[StandardImmersion], grid: &GridSpec, f: F) -> R<(f64, String)>
where
    F: Fn(&dyn Immersion, &[f64]) -> R<f64>,
{
    let mut worst = 0.0f64;
    let mut at = String::new();
    let mut count = 0usize;
    for imm in imms {
        for u in points(imm, grid)? {
            let v = f(imm, &u).map_err(|e| match e {
                RunError::Geom(g) => {
                    RunError::Geom(annotate(g, &format!("{} at u = {u:?}", imm.label())))
                }
                other => other,
            })?;
            count += 1;
            if !(v <= worst) {
                worst = v;
                at = format!("{} at u = {u:?}", imm.label());
            }
        }
    }
    Ok((worst, format!("max over {count} points, attained on {at}")))
}

fn annotate(e: GeomError, ctx: &str) -> GeomError {
    use GeomError::*;
    let add = |m: String| format!("{m} ({ctx})");
    match e {
        DegenerateMetric(m) => DegenerateMetric(add(m)),
        OutOfDomain(m) => OutOfDomain(add(m)),
        DegenerateImmersion(m) => DegenerateImmersion(add(m)),
        NullNormal(m) => NullNormal(add(m)),
        SingularShapeOperator(m) => SingularShapeOperator(add(m)),
        DegenerateII(m) => DegenerateII(add(m)),
        other => other,
    }
}

fn run_immersion_check(op: &CheckOp, imms: &[StandardImmersion], grid: &GridSpec) -> R<Measured> {
    Ok(match op {
        CheckOp::MaxAbsHII => {
            let (v, d) = max_over(imms, grid, |imm, u| {
                let p = ii_geometry(imm, u)?;
                Ok(p.h_ii.variational.abs().max(p.h_ii.gauss.abs()))
            })?;
            measured(v, d)
        }
        CheckOp::HIIValue { expected } => {
            let (v, d) = max_over(imms, grid, |imm, u| {
                Ok((ii_geometry(imm, u)?.h_ii.variational - expected).abs())
            })?;
            measured(v, d)
        }
        CheckOp::HIIRouteSpread => {
            let (v, d) = max_over(imms, grid, |imm, u| Ok(ii_geometry(imm, u)?.h_ii.spread()))?;
            measured(v, d)
        }
        CheckOp::GaussCodazzi => {
            let (v, d) = max_over(imms, grid, |imm, u| {
                let r = gauss_codazzi_residual(imm, u)?;
                Ok(r.gauss.max(r.codazzi))
            })?;
            measured(v, d)
        }
        CheckOp::NablaIIResidual => {
            let (v, d) = max_over(imms, grid, |imm, u| {
                Ok(ii_geometry(imm, u)?.nabla_ii_residual)
            })?;
            measured(v, d)
        }
        CheckOp::ZVanishes => {
            let (v, d) = max_over(imms, grid, |imm, u| {
                Ok(ii_geometry(imm, u)?
                    .z
                    .iter()
                    .fold(0.0f64, |a, z| a.max(z.abs())))
            })?;
            measured(v, d)
        }
        CheckOp::TransportProbe {
            u0,
            direction,
            v,
            eps,
        } => {
            let mut worst = 0.0f64;
            for imm in imms {
                let c = ParamCurve::line(u0.clone(), direction.clone());
                let p = transport_holonomy_probe(imm, &c, v, *eps)?;
                let scale = p
                    .direct
                    .iter()
                    .fold(0.0f64, |a, x| a.max(x.abs()))
                    .max(1e-300);
                let gap = p
                    .extrapolated
                    .iter()
                    .zip(&p.direct)
                    .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()));
                worst = worst.max(gap / scale);
            }
            measured(
                worst,
                "relative gap between the holonomy probe and L(γ', v)",
            )
        }
        CheckOp::Area { expected, grid: g } | CheckOp::AreaII { expected, grid: g } => {
            let kind = if matches!(op, CheckOp::Area { .. }) {
                AreaKind::FirstForm
            } else {
                AreaKind::SecondForm
            };
            let mut worst = 0.0f64;
            let mut detail = String::new();
            for imm in imms {
                let q = quadrature(imm, g.as_ref().unwrap_or(grid))?;
                let a = area(imm, &q, kind)?;
                let rel = (a.value - expected).abs() / expected.abs().max(1e-300);
                if !(rel <= worst) {
                    worst = rel;
                    detail = format!(
                        "value {} (refined {}) on {}",
                        a.value,
                        a.refined,
                        imm.label()
                    );
                }
            }
            measured(worst, detail)
        }
        CheckOp::FirstVariation {
            field,
            mode,
            min_slope,
            grid: g,
        } => {
            let mut worst = 0.0f64;
            let mut slope = f64::INFINITY;
            let mut table = Table {
                header: [
                    "lhs_area",
                    "rhs_area",
                    "lhs_area_ii",
                    "rhs_area_ii",
                    "slope_area",
                    "slope_area_ii",
                ]
                .map(String::from)
                .to_vec(),
                rows: vec![],
            };
            for imm in imms {
                let q = quadrature(imm, g.as_ref().unwrap_or(grid))?;
                let shared: Arc<dyn Immersion> = Arc::new(imm.clone());
                let fv = first_variation_check(shared, field.build(), &q, *mode, &S_LADDER)?;
                worst = worst.max(fv.gap_area).max(fv.gap_area_ii);
                slope = slope.min(fv.slope_area).min(fv.slope_area_ii);
                table.rows.push(vec![
                    fv.lhs_area,
                    fv.rhs_area,
                    fv.lhs_area_ii,
                    fv.rhs_area_ii,
                    fv.slope_area,
                    fv.slope_area_ii,
                ]);
            }
            let extra =
                min_slope.map(|m| (slope >= m, format!("log-log slope {slope:.3}, need ≥ {m}")));
            Measured {
                value: worst,
                extra,
                detail: "relative gaps of d/ds Area and d/ds Area_II against their first-variation integrals".into(),
                table: Some(table),
            }
        }
        _ => unreachable!("validated"),
    })
}

fn run_curve_check(
    op: &CheckOp,
    curve: &FrenetCurve,
    range: [f64; 2],
    n: usize,
    ambient: CurveAmbient,
) -> R<Measured> {
    let rows = curve_table(curve, range[0], range[1], n, ambient)?;
    let table = Table {
        header: ["s", "kappa", "h_ii", "ode_residual", "serret_t", "serret_u"]
            .map(String::from)
            .to_vec(),
        rows: rows
            .iter()
            .map(|r| vec![r.s, r.kappa, r.h_ii, r.ode_residual, r.serret_t, r.serret_u])
            .collect(),
    };
    let worst =
        |f: &dyn Fn(&sff_core::curves::CurveRow) -> f64| rows.iter().map(f).fold(0.0f64, f64::max);
    let (value, detail) = match op {
        CheckOp::OdeResidual => (
            worst(&|r| r.ode_residual.abs()),
            "max |ODE residual| along the curve",
        ),
        CheckOp::CurveHII { expected } => (
            worst(&|r| (r.h_ii - expected).abs()),
            "max |H_II − expected|",
        ),
        CheckOp::SerretResidual => (
            worst(&|r| r.serret_t.max(r.serret_u)),
            "max Frenet–Serret residual",
        ),
        _ => unreachable!("validated"),
    };
    Ok(Measured {
        value,
        extra: None,
        detail: format!("{detail} ({})", curve.label),
        table: Some(table),
    })
}

fn run_ode_check(op: &CheckOp, ambient: CurveAmbient) -> R<Measured> {
    let CheckOp::Integrate {
        k0,
        k1,
        s_max,
        reference,
    } = op
    else {
        unreachable!("validated")
    };
    let sol = integrate_ii_minimal(ambient, *k0, *k1, *s_max)?;
    let want: Box<dyn Fn(f64) -> f64> = match reference {
        Reference::Constant => Box::new(|_| *k0),
        Reference::Catenary => {
            if ambient != CurveAmbient::Planar {
                return Err(RunError::Schema(
                    "the catenary reference applies to planar curves".into(),
                ));
            }
            let (a, q) = catenary_fit(*k0, *k1);
            Box::new(move |s| catenary_kappa(a, q, s))
        }
    };
    let dev = sol
        .s
        .iter()
        .zip(&sol.kappa)
        .map(|(s, k)| (k - want(*s)).abs())
        .fold(0.0, f64::max);
    let stride = (sol.s.len() / 64).max(1);
    let table = Table {
        header: ["s", "kappa", "kappa_1", "reference"]
            .map(String::from)
            .to_vec(),
        rows: (0..sol.s.len())
            .step_by(stride)
            .map(|i| vec![sol.s[i], sol.kappa[i], sol.kappa_1[i], want(sol.s[i])])
            .collect(),
    };
    Ok(Measured {
        value: dev,
        extra: None,
        detail: format!(
            "max |κ − reference| on [0, {s_max}], step-halving gap {:.3e}",
            sol.halving_gap
        ),
        table: Some(table),
    })
}

fn remainder_table(rows: &[sff_core::spheres::RemainderRow]) -> Table {
    Table {
        header: ["r", "numeric", "series", "remainder"]
            .map(String::from)
            .to_vec(),
        rows: rows
            .iter()
            .map(|r| vec![r.r, r.numeric, r.series, r.remainder])
            .collect(),
    }
}

fn run_sphere_check(
    op: &CheckOp,
    chart: &MetricChart,
    n: &[f64],
    e0: &[f64],
    ctx: &Context,
) -> R<Measured> {
    let m = chart.dim - 1;
    Ok(match op {
        CheckOp::SeriesSlope {
            quantity,
            radii,
            min_slope,
            grid,
        } => {
            let st = series_vs_numeric(chart, n, e0, *quantity, radii, &sphere_grid(m, grid)?)?;
            Measured {
                value: st.slope,
                extra: Some((
                    st.slope >= *min_slope,
                    format!("slope {:.3}, need ≥ {min_slope}", st.slope),
                )),
                detail: format!("log-log slope of the {quantity:?} remainder"),
                table: Some(remainder_table(&st.rows)),
            }
        }
        CheckOp::SeriesExact {
            quantity,
            radii,
            grid,
        } => {
            let st = series_vs_numeric(chart, n, e0, *quantity, radii, &sphere_grid(m, grid)?)?;
            let v = st
                .rows
                .iter()
                .map(|r| r.remainder.abs())
                .fold(0.0, f64::max);
            Measured {
                value: v,
                extra: None,
                detail: format!("max |{quantity:?} remainder|"),
                table: Some(remainder_table(&st.rows)),
            }
        }
        CheckOp::NumericValue {
            quantity,
            radii,
            expected,
            grid,
        } => {
            if radii.len() != expected.len() {
                return Err(RunError::Schema(
                    "radii and expected differ in length".into(),
                ));
            }
            let q = sphere_grid(m, grid)?;
            let mut rows = vec![];
            for (&r, &want) in radii.iter().zip(expected) {
                let s = geodesic_sphere(chart, n, r, Some(e0))?;
                rows.push(vec![r, numeric_value(&s, *quantity, &q)?, want]);
            }
            let v = rows.iter().map(|r| (r[1] - r[2]).abs()).fold(0.0, f64::max);
            Measured {
                value: v,
                extra: None,
                detail: format!("max |numeric {quantity:?} − expected|"),
                table: Some(Table {
                    header: ["r", "numeric", "expected"].map(String::from).to_vec(),
                    rows,
                }),
            }
        }
        CheckOp::DirectionIndependence { quantity, count, r } => {
            let base = series_coefficients(chart, n, e0, *quantity)?.eval(*r);
            let mut worst = 0.0f64;
            for k in 0..*count as u64 {
                let d = random_unit_direction(chart, n, ctx.seed + k)?;
                let other = series_coefficients(chart, n, &d, *quantity)?.eval(*r);
                worst = base
                    .iter()
                    .zip(&other)
                    .fold(worst, |a, (x, y)| a.max((x - y).abs()));
            }
            measured(
                worst,
                format!("max change of the {quantity:?} series over {count} directions at r = {r}"),
            )
        }
        CheckOp::AreaDerivative { radius, grid } => {
            let d = area_derivative_check(chart, n, *radius, &sphere_grid(m, grid)?)?;
            measured(
                d.gap,
                format!("d/dr Area_II = {}, ∫H_II dΩ_II = {}", d.numeric, d.integral),
            )
        }
        CheckOp::Flatness { expect_flat } => {
            let f = flatness_diagnostic(&curvature_jet(chart, n, 0)?)?;
            let holds = f.condition_residuals.iter().all(|c| c.abs() < 1e-10);
            let identity_gap = (f.weyl_norm2 - f.weyl_norm2_identity).abs();
            let mut ok = holds == *expect_flat;
            let mut note = format!(
                "S̄ = {}, ‖R̄‖² − ‖Ric̄‖² = {}, ‖W̄‖² = {}",
                f.condition_residuals[0], f.condition_residuals[1], f.weyl_norm2
            );
            if holds && m <= 4 {
                let flat = f.riem_norm2.abs() < 1e-10;
                ok &= flat;
                note.push_str(&format!("; conditions hold, ‖R̄‖² = {}", f.riem_norm2));
            }
            Measured {
                value: identity_gap,
                extra: Some((ok, note)),
                detail: "Weyl norm: direct minus identity".into(),
                table: None,
            }
        }
        _ => unreachable!("validated"),
    })
}

fn run_jet_check(dims: &[usize], count: usize, ctx: &Context) -> R<Measured> {
    let mut worst = 0.0f64;
    for &n in dims {
        for k in 0..count as u64 {
            let j = FrameJet::synthetic(n, ctx.seed + k);
            let parts: Vec<(Quantity, SeriesCoefficients)> = Quantity::SCALARS
                .iter()
                .map(|&q| (q, series_from_frame(&j, q)))
                .collect();
            let refs: Vec<(Quantity, &SeriesCoefficients)> =
                parts.iter().map(|(q, s)| (*q, s)).collect();
            let h = &parts
                .iter()
                .find(|(q, _)| *q == Quantity::HII)
                .expect("H_II series")
                .1;
            for p in -1..=3 {
                let want = h.coeff(p).first().copied().unwrap_or(0.0);
                let got = recombine_h_ii(n - 1, p, &refs);
                worst = worst.max((got - want).abs() / (1.0 + want.abs()));
            }
        }
    }
    Ok(measured(
        worst,
        format!(
            "relative recombination gap over {} synthetic jets",
            dims.len() * count
        ),
    ))
}

fn judge(index: usize, check: &Check, outcome: R<Measured>, ctx: &Context) -> R<CheckResult> {
    let name = check.op.name().to_string();
    let threshold = match &check.op {
        CheckOp::SeriesSlope { min_slope, .. } => Some(*min_slope),
        _ => check.tolerance.map(|t| t * ctx.tolerance_scale),
    };
    let mk = |status, value, detail: String, table| CheckResult {
        index,
        check: name.clone(),
        status,
        value,
        threshold,
        detail,
        table,
    };
    match (outcome, &check.expect_error) {
        (Err(RunError::Schema(m)), _) => Err(RunError::Schema(m)),
        (Err(RunError::Geom(e)), Some(code)) if e.code() == code => Ok(mk(
            Status::Pass,
            None,
            format!("expected {code}: {e}"),
            None,
        )),
        (Err(RunError::Geom(e)), _) => {
            Ok(mk(Status::Error, None, format!("{}: {e}", e.code()), None))
        }
        (Ok(m), Some(code)) => Ok(mk(
            Status::Fail,
            Some(m.value),
            format!("expected {code}, but the check completed"),
            m.table,
        )),
        (Ok(m), None) => {
            let within = match &check.op {
                CheckOp::SeriesSlope { .. } => true,
                _ => threshold.is_some_and(|t| m.value <= t),
            };
            let (extra_ok, extra_note) = m.extra.clone().unwrap_or((true, String::new()));
            let detail = if extra_note.is_empty() {
                m.detail.clone()
            } else {
                format!("{}; {extra_note}", m.detail)
            };
            let status = if within && extra_ok {
                Status::Pass
            } else {
                Status::Fail
            };
            Ok(mk(status, Some(m.value), detail, m.table))
        }
    }
}

/// Results of every check, or a schema error.
pub fn execute(s: &Scenario, ctx: &Context) -> Result<Vec<CheckResult>, String> {
    let built = match build(s, ctx) {
        Ok(b) => {
            if let Some(code) = &s.expect_error {
                let msg = format!("expected the subject to raise {code}, but it was built");
                return Ok(vec![CheckResult {
                    index: 0,
                    check: "subject".into(),
                    status: Status::Fail,
                    value: None,
                    threshold: None,
                    detail: msg,
                    table: None,
                }]);
            }
            b
        }
        Err(RunError::Schema(m)) => return Err(m),
        Err(RunError::Geom(e)) => {
            let expected = s.expect_error.as_deref() == Some(e.code());
            return Ok(vec![CheckResult {
                index: 0,
                check: "subject".into(),
                status: if expected {
                    Status::Pass
                } else {
                    Status::Error
                },
                value: None,
                threshold: None,
                detail: format!("{}: {e}", e.code()),
                table: None,
            }]);
        }
    };
    let mut out = Vec::with_capacity(s.checks.len());
    for (i, c) in s.checks.iter().enumerate() {
        let outcome = match &built {
            Built::Immersions(imms, grid) => run_immersion_check(&c.op, imms, grid),
            Built::Curve(curve, range, n, amb) => run_curve_check(&c.op, curve, *range, *n, *amb),
            Built::Ode(amb) => run_ode_check(&c.op, *amb),
            Built::Sphere(chart, n, e0) => run_sphere_check(&c.op, chart, n, e0, ctx),
            Built::Jets(dims, count) => run_jet_check(dims, *count, ctx),
        };
        match judge(i, c, outcome, ctx) {
            Ok(r) => out.push(r),
            Err(RunError::Schema(m)) => return Err(format!("check {i} ({}): {m}", c.op.name())),
            Err(RunError::Geom(_)) => unreachable!(),
        }
    }
    Ok(out)
}
