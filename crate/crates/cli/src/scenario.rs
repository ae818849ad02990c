//! Scenario file schema (version 1).

use serde::Deserialize;
use sff_core::ambient::ChartSpec;
use sff_core::curves::CurveAmbient;
use sff_core::hypersurface::ImmersionSpec;
use sff_core::spheres::Quantity;
use sff_core::variation::{DeformMode, FieldSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerance_scale: Option<f64>,
    #[serde(default)]
    pub chart: Option<ChartSpec>,
    pub subject: Subject,
    pub checks: Vec<Check>,
    #[serde(default)]
    pub output: Output,
    /// Error code the subject itself is expected to raise.
    #[serde(default)]
    pub expect_error: Option<String>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub json: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Subject {
    Immersion {
        immersion: ImmersionSpec,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    /// Ovaloids with seeds seed, seed+1, …
    OvaloidFamily {
        count: usize,
        radius: f64,
        amplitude: f64,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    Curve {
        curve: CurveSpec,
        range: [f64; 2],
        #[serde(default = "default_curve_points")]
        points: usize,
        #[serde(default = "default_planar")]
        ambient: CurveAmbient,
    },
    CurveOde {
        ambient: CurveAmbient,
    },
    SphereStudy {
        center: Vec<f64>,
        #[serde(default)]
        direction: Option<Vec<f64>>,
    },
    SyntheticJets {
        dims: Vec<usize>,
        count: usize,
    },
}

fn default_curve_points() -> usize {
    64
}

fn default_planar() -> CurveAmbient {
    CurveAmbient::Planar
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridSpec {
    /// Interior k^m lattice inset from each side of the parameter box.
    Sample {
        k: usize,
        #[serde(default)]
        inset: f64,
    },
    /// Tensor Gauss–Legendre over the parameter box.
    Tensor {
        n: Vec<usize>,
    },
    LatLong {
        n_lat: usize,
        n_lon: usize,
    },
    ProductSpheres {
        k: usize,
        n_lat: usize,
        n_lon: usize,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Circle {
        radius: f64,
    },
    Catenary {
        a: f64,
        q: f64,
    },
    Latitude {
        theta: f64,
    },
    Line {
        point: [f64; 2],
        direction: [f64; 2],
    },
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// κ = catenary_kappa(A, Q, s) with (A, Q) fitted to the initial data.
    Catenary,
    /// κ ≡ κ₀.
    Constant,
}

#[derive(Clone, Debug, Deserialize)]
pub struct Check {
    #[serde(flatten)]
    pub op: CheckOp,
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub expect_error: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case")]
pub enum CheckOp {
    #[serde(rename = "max_abs_h_ii")]
    MaxAbsHII,
    #[serde(rename = "h_ii_value")]
    HIIValue {
        expected: f64,
    },
    #[serde(rename = "h_ii_route_spread")]
    HIIRouteSpread,
    GaussCodazzi,
    #[serde(rename = "nabla_ii_residual")]
    NablaIIResidual,
    ZVanishes,
    TransportProbe {
        u0: Vec<f64>,
        direction: Vec<f64>,
        v: Vec<f64>,
        #[serde(default = "default_eps")]
        eps: f64,
    },
    Area {
        expected: f64,
        grid: Option<GridSpec>,
    },
    #[serde(rename = "area_ii")]
    AreaII {
        expected: f64,
        grid: Option<GridSpec>,
    },
    FirstVariation {
        field: FieldSpec,
        #[serde(default = "default_mode")]
        mode: DeformMode,
        #[serde(default)]
        min_slope: Option<f64>,
        grid: Option<GridSpec>,
    },
    OdeResidual,
    #[serde(rename = "curve_h_ii")]
    CurveHII {
        expected: f64,
    },
    SerretResidual,
    Integrate {
        k0: f64,
        k1: f64,
        s_max: f64,
        reference: Reference,
    },
    SeriesSlope {
        quantity: Quantity,
        radii: Vec<f64>,
        min_slope: f64,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    SeriesExact {
        quantity: Quantity,
        radii: Vec<f64>,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    NumericValue {
        quantity: Quantity,
        radii: Vec<f64>,
        expected: Vec<f64>,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    DirectionIndependence {
        quantity: Quantity,
        #[serde(default = "default_count")]
        count: usize,
        r: f64,
    },
    AreaDerivative {
        radius: f64,
        #[serde(default)]
        grid: Option<GridSpec>,
    },
    Flatness {
        expect_flat: bool,
    },
    Recombination,
}

fn default_eps() -> f64 {
    0.04
}

fn default_mode() -> DeformMode {
    DeformMode::ChartLinear
}

fn default_count() -> usize {
    5
}

impl CheckOp {
    pub fn name(&self) -> &'static str {
        use CheckOp::*;
        match self {
            MaxAbsHII => "max_abs_h_ii",
            HIIValue { .. } => "h_ii_value",
            HIIRouteSpread => "h_ii_route_spread",
            GaussCodazzi => "gauss_codazzi",
            NablaIIResidual => "nabla_ii_residual",
            ZVanishes => "z_vanishes",
            TransportProbe { .. } => "transport_probe",
            Area { .. } => "area",
            AreaII { .. } => "area_ii",
            FirstVariation { .. } => "first_variation",
            OdeResidual => "ode_residual",
            CurveHII { .. } => "curve_h_ii",
            SerretResidual => "serret_residual",
            Integrate { .. } => "integrate",
            SeriesSlope { .. } => "series_slope",
            SeriesExact { .. } => "series_exact",
            NumericValue { .. } => "numeric_value",
            DirectionIndependence { .. } => "direction_independence",
            AreaDerivative { .. } => "area_derivative",
            Flatness { .. } => "flatness",
            Recombination => "recombination",
        }
    }

    /// Checks judged by a threshold other than the tolerance.
    pub fn needs_tolerance(&self) -> bool {
        !matches!(self, CheckOp::SeriesSlope { .. })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SchemaError {
    #[error("cannot read {0}: {1}")]
    Io(String, std::io::Error),
    #[error("{0}")]
    Parse(#[from] serde_json::Error),
    #[error("{0}")]
    Invalid(String),
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, SchemaError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    fn validate(&self) -> Result<(), SchemaError> {
        let bad = |m: String| Err(SchemaError::Invalid(m));
        if self.schema != SCHEMA_VERSION {
            return bad(format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                self.schema
            ));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return bad(format!("invalid scenario name {:?}", self.name));
        }
        if self.checks.is_empty() {
            return bad("scenario has no checks".into());
        }
        if let Some(t) = self.tolerance_scale {
            if !(t > 0.0) {
                return bad(format!("tolerance_scale {t} must be positive"));
            }
        }
        let needs_chart = !matches!(
            self.subject,
            Subject::SyntheticJets { .. } | Subject::CurveOde { .. }
        );
        if needs_chart && self.chart.is_none() {
            return bad("subject needs a chart".into());
        }
        for (i, c) in self.checks.iter().enumerate() {
            match c.tolerance {
                Some(t) if !(t > 0.0) => {
                    return bad(format!(
                        "check {i} ({}): tolerance {t} must be positive",
                        c.op.name()
                    ))
                }
                None if c.op.needs_tolerance() && c.expect_error.is_none() => {
                    return bad(format!("check {i} ({}): missing tolerance", c.op.name()))
                }
                _ => {}
            }
            if !allowed(&self.subject, &c.op) {
                return bad(format!(
                    "check {i} ({}) does not apply to this subject",
                    c.op.name()
                ));
            }
        }
        Ok(())
    }
}

fn allowed(subject: &Subject, op: &CheckOp) -> bool {
    use CheckOp::*;
    match subject {
        Subject::Immersion { .. } | Subject::OvaloidFamily { .. } => matches!(
            op,
            MaxAbsHII
                | HIIValue { .. }
                | HIIRouteSpread
                | GaussCodazzi
                | NablaIIResidual
                | ZVanishes
                | TransportProbe { .. }
                | Area { .. }
                | AreaII { .. }
                | FirstVariation { .. }
        ),
        Subject::Curve { .. } => matches!(op, OdeResidual | CurveHII { .. } | SerretResidual),
        Subject::CurveOde { .. } => matches!(op, Integrate { .. }),
        Subject::SphereStudy { .. } => matches!(
            op,
            SeriesSlope { .. }
                | SeriesExact { .. }
                | NumericValue { .. }
                | DirectionIndependence { .. }
                | AreaDerivative { .. }
                | Flatness { .. }
        ),
        Subject::SyntheticJets { .. } => matches!(op, Recombination),
    }
}
