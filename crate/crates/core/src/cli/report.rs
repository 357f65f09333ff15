use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::linalg::{self, Vector};
use crate::oracle::{self, Grid};
use crate::regularity::{
    coderivative_criterion, empirical_directional_modulus, modulus_from_slopes, parametric_sweep,
    perturbation_bound, perturbation_gamma, perturbation_limit, robinson_condition, slope_criterion, CertifyOptions,
    LpBounds, PairSample, RegularityQuery, NORM_CHOICE,
};
use crate::slopes::{error_bound_certificate, ScalarField};
use crate::tolerances::Tolerances;

use super::problem::{Analysis, ProblemFile};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Witness {
    pub label: String,
    pub point: Vector,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vector>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub op: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub result: Value,
    pub witnesses: Vec<Witness>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub problem: ProblemFile,
    /// Keyed by `op`, with `_2`, `_3`, … for repeats.
    #[serde(flatten)]
    pub results: BTreeMap<String, AnalysisReport>,
    pub all_hold: bool,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub norm_choice: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }
}

/// Outcome of a run: the report plus the per-pair samples of the first
/// modulus analysis, for the CSV dump.
pub struct RunOutput {
    pub report: Report,
    pub samples: Option<Vec<PairSample>>,
}

/// Verdict-level failures are recorded in the report; anything else aborts.
fn soft(e: &Error) -> bool {
    matches!(
        e,
        Error::NoAdmissibleSamples { .. } | Error::GridTooCoarse(_) | Error::InvalidPerturbation { .. }
    )
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn ext(v: ExtReal) -> Value {
    to_value(&v)
}

struct Outcome {
    holds: bool,
    result: Value,
    witnesses: Vec<Witness>,
    samples: Option<Vec<PairSample>>,
}

impl Outcome {
    fn new(holds: bool, result: Value) -> Self {
        Outcome {
            holds,
            result,
            witnesses: Vec::new(),
            samples: None,
        }
    }
}

fn witness(label: &str, point: &[f64], y: Option<&[f64]>) -> Witness {
    Witness {
        label: label.into(),
        point: point.to_vec(),
        y: y.map(<[f64]>::to_vec),
    }
}

fn run_one(file: &ProblemFile, q: &RegularityQuery, a: &Analysis) -> Result<Outcome> {
    Ok(match a {
        Analysis::Modulus { tau } => {
            let m = empirical_directional_modulus(q)?;
            let holds = match (m.sup_ratio, tau) {
                (ExtReal::Finite(v), Some(t)) => v <= *t,
                (ExtReal::Finite(_), None) => true,
                (ExtReal::Infinity, _) => false,
            };
            let mut o = Outcome::new(holds, to_value(&m));
            if let Some((x, y)) = &m.worst_witness {
                o.witnesses.push(witness("worst_ratio", x, Some(y)));
            }
            o.samples = Some(m.samples);
            o
        }
        Analysis::Slope { tau } => {
            let s = modulus_from_slopes(q)?;
            let mut result = json!({
                "modulus_from_slopes": ext(s.value),
                "min_slope": s.min_slope,
                "ladder": s.ladder,
            });
            match tau {
                Some(t) => {
                    let c = slope_criterion(q, *t)?;
                    let witnesses = c
                        .violators
                        .iter()
                        .take(3)
                        .map(|v| witness("slope_violator", &v.x, Some(&v.y)))
                        .collect();
                    result["criterion"] = to_value(&c);
                    Outcome {
                        holds: c.holds,
                        result,
                        witnesses,
                        samples: None,
                    }
                }
                None => Outcome::new(s.min_slope > 0.0, result),
            }
        }
        Analysis::Robinson {
            ybar,
            lambda_max,
            u_max,
        } => {
            let d = LpBounds::default();
            let bounds = LpBounds {
                lambda_max: lambda_max.unwrap_or(d.lambda_max),
                u_max: u_max.unwrap_or(d.u_max),
            };
            let dir = ybar.clone().unwrap_or_else(|| file.ybar.clone());
            let r = robinson_condition(&q.map, &q.x0, &dir, bounds)?;
            let mut result = to_value(&r);
            result["ybar"] = to_value(&dir);
            Outcome::new(r.holds, result)
        }
        Analysis::Coderivative { delta_ladder } => {
            let ladder = delta_ladder.clone().unwrap_or_else(|| CertifyOptions::default().delta_ladder);
            let c = coderivative_criterion(q, &ladder)?;
            let mut o = Outcome::new(c.holds_for(q.tol.feas), to_value(&c));
            if let Some(w) = &c.witness {
                o.witnesses.push(witness("coderivative_min", &w.x, None));
            }
            o
        }
        Analysis::ErrorBound { xbar } => {
            let field = ScalarField::residual(&q.map, &q.y0)?;
            let c = error_bound_certificate(&field, xbar, &q.region)?;
            let mut o = Outcome::new(c.holds, to_value(&c));
            o.witnesses.push(witness("nearest_in_sublevel", &c.nearest, None));
            o
        }
        Analysis::Perturb { tau, alpha, lipschitz } => {
            let ybar_norm = linalg::norm(&file.ybar);
            let limit = perturbation_limit(*tau, file.delta, ybar_norm, *alpha)?;
            let bound = perturbation_bound(*tau, file.delta, ybar_norm, *alpha, *lipschitz)?;
            Outcome::new(
                true,
                json!({
                    "bound": bound,
                    "gamma": perturbation_gamma(file.delta, ybar_norm, *alpha),
                    "limit": limit,
                }),
            )
        }
        Analysis::Sweep { a1, p_grid } => {
            let family = file.pencil(a1)?;
            let s = parametric_sweep(&family, p_grid, q)?;
            Outcome::new(s.uniform_modulus.is_finite(), to_value(&s))
        }
        Analysis::OracleCheck {
            points_per_axis,
            rel_tol,
        } => {
            let m = points_per_axis.unwrap_or(21);
            let tol = rel_tol.unwrap_or(0.05);
            let gx = Grid::cube(&q.x0, q.epsilon, m)?;
            let gy = Grid::cube(&q.y0, q.epsilon, m)?;
            let grid = oracle::grid_modulus(q, &gx, &gy)?;
            let est = empirical_directional_modulus(q)?.sup_ratio;
            let holds = match (est, grid) {
                (ExtReal::Finite(e), ExtReal::Finite(g)) => (e - g).abs() <= tol * g.max(e),
                (ExtReal::Infinity, ExtReal::Infinity) => true,
                _ => false,
            };
            Outcome::new(
                holds,
                json!({
                    "estimate": ext(est),
                    "oracle": ext(grid),
                    "points_per_axis": m,
                    "rel_tol": tol,
                }),
            )
        }
    })
}

/// Runs every analysis of the file. Errors other than verdict-level ones
/// abort the run without a report.
pub fn run_analyses(file: &ProblemFile, timed: bool) -> Result<RunOutput> {
    let start = std::time::Instant::now();
    let q = file.query()?;
    let mut results = BTreeMap::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut samples = None;
    for a in &file.analyses {
        let op = a.op();
        let c = counts.entry(op).or_insert(0);
        *c += 1;
        let key = if *c == 1 { op.to_string() } else { format!("{op}_{c}") };
        let entry = match run_one(file, &q, a) {
            Ok(o) => {
                if samples.is_none() {
                    samples = o.samples;
                }
                AnalysisReport {
                    op: op.into(),
                    holds: o.holds,
                    error: None,
                    result: o.result,
                    witnesses: o.witnesses,
                }
            }
            Err(e) if soft(&e) => AnalysisReport {
                op: op.into(),
                holds: false,
                error: Some(e.to_string()),
                result: Value::Null,
                witnesses: Vec::new(),
            },
            Err(e) => return Err(e),
        };
        results.insert(key, entry);
    }
    let all_hold = results.values().all(|r| r.holds);
    let report = Report {
        schema_version: super::problem::SCHEMA_VERSION,
        problem: file.clone(),
        results,
        all_hold,
        seed: q.region.seed,
        tolerances: q.tol,
        norm_choice: NORM_CHOICE.to_string(),
        wall_time_s: timed.then(|| start.elapsed().as_secs_f64()),
        timestamp: timed.then(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
    };
    Ok(RunOutput { report, samples })
}

/// Per-pair table: `x0…, y0…, image_dist, preimage_dist, ratio, admissible`.
pub fn write_csv<W: std::io::Write>(out: W, samples: &[PairSample], n: usize, m: usize) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    header.extend((0..m).map(|i| format!("y{i}")));
    header.extend(["image_dist", "preimage_dist", "ratio", "admissible"].map(String::from));
    w.write_record(&header)?;
    let cell = |v: Option<ExtReal>| match v {
        Some(ExtReal::Finite(x)) => x.to_string(),
        Some(ExtReal::Infinity) => "inf".to_string(),
        None => String::new(),
    };
    for s in samples {
        let mut row: Vec<String> = s.x.iter().chain(&s.y).map(f64::to_string).collect();
        row.push(s.image_dist.to_string());
        row.push(cell(s.preimage_dist));
        row.push(cell(s.ratio));
        row.push(s.admissible.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
