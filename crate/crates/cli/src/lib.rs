//! Scenario runner: JSON scenarios in, CSV/JSON reports and CI exit codes out.

pub mod exec;
pub mod report;
pub mod scenario;

use exec::{Context, Status};
use scenario::Scenario;
use std::path::Path;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

macro_rules! bundled {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../scenarios/", $name, ".json")))),*]
    };
}

/// Scenario files shipped with the binary.
pub const BUNDLED: &[(&str, &str)] = bundled![
    "clifford_ii_minimal",
    "s2_in_s3_ii_minimal",
    "s3_in_s4_ii_minimal",
    "ovaloids_e3_routes",
    "ovaloids_s4_routes",
    "ovaloids_h4_routes",
    "first_variation_unit_sphere",
    "first_variation_geodesic_sphere_s3",
    "catenary_ode",
    "curve_ode_integration",
    "curve_ode_sphere_constant",
    "latitude_ii_minimal",
    "geodesic_sphere_exact_s3",
    "series_slopes_s3",
    "series_exact_e3",
    "series_exact_e4",
    "series_recombination",
    "flatness_euclidean",
    "flatness_s4",
    "flatness_s2xs2",
    "area_derivative_e3",
    "area_derivative_s3",
    "structural_identities",
    "singular_plane_expected",
];

pub struct Options {
    pub seed: Option<u64>,
    pub tolerance_scale: Option<f64>,
    pub out_dir: std::path::PathBuf,
}

/// Scenario text for a path, falling back to a bundled name.
pub fn load(arg: &str) -> Result<String, String> {
    let p = Path::new(arg);
    if p.exists() {
        return std::fs::read_to_string(p).map_err(|e| format!("cannot read {arg}: {e}"));
    }
    let name = arg.strip_suffix(".json").unwrap_or(arg);
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, t)| t.to_string())
        .ok_or_else(|| format!("{arg}: no such file or bundled scenario"))
}

/// Run a scenario given as text; prints a line per check and returns the exit code.
pub fn run_text(text: &str, opts: &Options) -> i32 {
    let s = match Scenario::parse(text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("schema error: {e}");
            return EXIT_SCHEMA;
        }
    };
    let ctx = Context {
        seed: opts.seed.or(s.seed).unwrap_or(0),
        tolerance_scale: opts.tolerance_scale.or(s.tolerance_scale).unwrap_or(1.0),
    };
    let results = match exec::execute(&s, &ctx) {
        Ok(r) => r,
        Err(m) => {
            eprintln!("schema error: {m}");
            return EXIT_SCHEMA;
        }
    };
    let passed = results.iter().all(|r| r.status == Status::Pass);
    let summary = report::Summary {
        schema: scenario::SCHEMA_VERSION,
        scenario: &s.name,
        description: &s.description,
        seed: ctx.seed,
        tolerance_scale: ctx.tolerance_scale,
        passed,
        checks: &results,
    };
    let csv_name = s
        .output
        .csv
        .clone()
        .unwrap_or_else(|| format!("{}.csv", s.name));
    let json_name = s
        .output
        .json
        .clone()
        .unwrap_or_else(|| format!("{}.json", s.name));
    if let Err(e) = report::write_reports(&opts.out_dir, &csv_name, &json_name, &summary) {
        eprintln!("cannot write reports to {}: {e}", opts.out_dir.display());
        return EXIT_NUMERIC;
    }
    for r in &results {
        let v = r
            .value
            .map(|v| format!("{v:.3e}"))
            .unwrap_or_else(|| "-".into());
        let t = r
            .threshold
            .map(|v| format!("{v:.1e}"))
            .unwrap_or_else(|| "-".into());
        println!(
            "{:<5} {:>2} {:<24} value {v:<10} threshold {t}",
            format!("{:?}", r.status).to_uppercase(),
            r.index,
            r.check
        );
        if r.status != Status::Pass {
            eprintln!("{} check {} ({}): {}", s.name, r.index, r.check, r.detail);
        }
    }
    if results.iter().any(|r| r.status == Status::Error) {
        EXIT_NUMERIC
    } else if passed {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

#[derive(serde::Serialize)]
pub struct Listing {
    pub name: String,
    pub description: String,
    pub source: String,
}

/// Bundled scenarios plus any parseable *.json files in `dir`.
pub fn list(dir: Option<&Path>) -> Vec<Listing> {
    let describe = |text: &str| -> String {
        serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| {
                v.get("description")
                    .and_then(|d| d.as_str())
                    .map(String::from)
            })
            .unwrap_or_default()
    };
    let mut out: Vec<Listing> = BUNDLED
        .iter()
        .map(|(n, t)| Listing {
            name: n.to_string(),
            description: describe(t),
            source: "bundled".into(),
        })
        .collect();
    if let Some(d) = dir {
        let mut files: Vec<_> = std::fs::read_dir(d)
            .map(|it| {
                it.filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "json"))
                    .collect()
            })
            .unwrap_or_default();
        files.sort();
        for p in files {
            if let Ok(text) = std::fs::read_to_string(&p) {
                if let Ok(s) = Scenario::parse(&text) {
                    out.push(Listing {
                        name: s.name,
                        description: s.description,
                        source: p.display().to_string(),
                    });
                }
            }
        }
    }
    out
}
