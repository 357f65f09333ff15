use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexSet, DirectionalCone};
use crate::instances::NamedInstance;
use crate::linalg::{check_dim, Vector};
use crate::multimap::{MultiMap, SearchRegion, SmoothMap};
use crate::regularity::RegularityQuery;

pub const SCHEMA_VERSION: u32 = 1;

/// One requested analysis; `op` selects the variant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Analysis {
    /// Sampled supremum of distance ratios; holds when finite and, if
    /// `tau` is given, at most `tau`.
    Modulus {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
    },
    /// Envelope slopes; with `tau` the slope criterion decides, otherwise a
    /// positive minimum slope.
    Slope {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tau: Option<f64>,
    },
    Robinson {
        /// Direction to test; defaults to the file's `ybar`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ybar: Option<Vector>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda_max: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u_max: Option<f64>,
    },
    Coderivative {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        delta_ladder: Option<Vec<f64>>,
    },
    /// Error-bound certificate for `u ↦ d(y₀, F(u))` at `xbar`.
    ErrorBound { xbar: Vector },
    /// Modulus bound for `F + g` with `g` `L`-Lipschitz, using the file's
    /// `delta` and `‖ybar‖`.
    Perturb {
        tau: f64,
        alpha: f64,
        #[serde(rename = "L")]
        lipschitz: f64,
    },
    /// Sweep over `f_p(x) = (A₀ + p·A₁)x + b` for affine `f = A₀x + b`.
    Sweep { a1: Vec<Vector>, p_grid: Vec<f64> },
    /// Sampled modulus against the lattice oracle.
    OracleCheck {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        points_per_axis: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rel_tol: Option<f64>,
    },
}

impl Analysis {
    pub fn op(&self) -> &'static str {
        match self {
            Analysis::Modulus { .. } => "modulus",
            Analysis::Slope { .. } => "slope",
            Analysis::Robinson { .. } => "robinson",
            Analysis::Coderivative { .. } => "coderivative",
            Analysis::ErrorBound { .. } => "error_bound",
            Analysis::Perturb { .. } => "perturb",
            Analysis::Sweep { .. } => "sweep",
            Analysis::OracleCheck { .. } => "oracle_check",
        }
    }
}

/// Search box and sampling settings; missing fields take the defaults of
/// [`SearchRegion::default_for`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<Vector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl RegionSpec {
    pub fn resolve(&self, dim: usize) -> Result<SearchRegion> {
        let d = SearchRegion::default_for(dim);
        SearchRegion::new(
            self.lower.clone().unwrap_or(d.lower),
            self.upper.clone().unwrap_or(d.upper),
            self.grid_resolution.unwrap_or(d.grid_resolution),
            self.budget.unwrap_or(d.sample_budget),
            self.seed.unwrap_or(d.seed),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema_version: u32,
    pub f: SmoothMap,
    #[serde(rename = "K")]
    pub k: ConvexSet,
    pub x0: Vector,
    pub y0: Vector,
    pub ybar: Vector,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default)]
    pub region: RegionSpec,
    /// Membership tolerance; the library default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default)]
    pub analyses: Vec<Analysis>,
}

/// Rejected problem input, with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn at(field: &str, e: Error) -> InputError {
    InputError(format!("{field}: {e}"))
}

impl ProblemFile {
    /// Parses and validates. Syntax and type errors report the field path
    /// and line/column; semantic errors report the field.
    pub fn parse(text: &str) -> std::result::Result<ProblemFile, InputError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let file: ProblemFile = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            InputError(format!("{path}: {inner}"))
        })?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> std::result::Result<(), InputError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(InputError(format!(
                "schema_version: expected {SCHEMA_VERSION}, found {}",
                self.schema_version
            )));
        }
        let (n, m) = (self.f.dim_in(), self.f.dim_out());
        check_dim(m, self.k.dim()).map_err(|e| at("K", e))?;
        check_dim(n, self.x0.len()).map_err(|e| at("x0", e))?;
        check_dim(m, self.y0.len()).map_err(|e| at("y0", e))?;
        check_dim(m, self.ybar.len()).map_err(|e| at("ybar", e))?;
        self.cone().map_err(|e| at("delta", e))?;
        self.region.resolve(n).map_err(|e| at("region", e))?;
        self.query().map_err(|e| at("y0", e))?;
        for (i, a) in self.analyses.iter().enumerate() {
            self.check_analysis(a).map_err(|e| at(&format!("analyses[{i}]"), e))?;
        }
        Ok(())
    }

    fn check_analysis(&self, a: &Analysis) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")))
            }
        };
        match a {
            Analysis::Modulus { tau } | Analysis::Slope { tau } => {
                if let Some(t) = tau {
                    positive("tau", *t)?;
                }
            }
            Analysis::Robinson { ybar, .. } => {
                if let Some(y) = ybar {
                    check_dim(self.f.dim_out(), y.len())?;
                }
            }
            Analysis::Coderivative { delta_ladder } => {
                if let Some(l) = delta_ladder {
                    if l.is_empty() {
                        return Err(Error::InvalidParameter("delta_ladder is empty".into()));
                    }
                    for d in l {
                        positive("delta", *d)?;
                    }
                }
            }
            Analysis::ErrorBound { xbar } => check_dim(self.f.dim_in(), xbar.len())?,
            Analysis::Perturb { tau, .. } => positive("tau", *tau)?,
            Analysis::Sweep { a1, p_grid } => {
                let _ = self.pencil(a1)?;
                if p_grid.is_empty() {
                    return Err(Error::InvalidParameter("p_grid is empty".into()));
                }
            }
            Analysis::OracleCheck { points_per_axis, .. } => {
                if let Some(p) = points_per_axis {
                    if *p < 2 {
                        return Err(Error::InvalidParameter("points_per_axis must be ≥ 2".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn cone(&self) -> Result<DirectionalCone> {
        DirectionalCone::new(self.ybar.clone(), self.delta)
    }

    pub fn map(&self) -> Result<MultiMap> {
        MultiMap::new(self.f.clone(), self.k.clone())
    }

    pub fn query(&self) -> Result<RegularityQuery> {
        let mut q = RegularityQuery::new(
            self.map()?,
            self.x0.clone(),
            self.y0.clone(),
            self.cone()?,
            self.epsilon,
            self.region.resolve(self.f.dim_in())?,
        )?;
        if let Some(t) = self.tol {
            if !(t > 0.0) || !t.is_finite() {
                return Err(Error::InvalidParameter(format!("tol must be positive, got {t}")));
            }
            q.tol.member = t;
            q.validate()?;
        }
        Ok(q)
    }

    /// `p ↦ F_p` with `f_p(x) = (A₀ + p·A₁)x + b`.
    pub fn pencil(&self, a1: &[Vector]) -> Result<impl Fn(f64) -> Result<MultiMap> + Sync + '_> {
        let (a0, b) = self.f.as_affine().ok_or(Error::NotAffine)?;
        let a1 = crate::linalg::Matrix::from_rows(a1, a0.cols())?;
        check_dim(a0.rows(), a1.rows())?;
        Ok(move |p: f64| {
            let rows: Vec<Vector> = (0..a0.rows())
                .map(|i| a0.row(i).iter().zip(a1.row(i)).map(|(u, v)| u + p * v).collect())
                .collect();
            let a = crate::linalg::Matrix::from_rows(&rows, a0.cols())?;
            MultiMap::new(SmoothMap::affine(a, b.to_vec())?, self.k.clone())
        })
    }

    /// Problem file for a registry instance with its default analyses.
    pub fn from_instance(inst: &NamedInstance) -> ProblemFile {
        let tau = inst
            .known
            .as_ref()
            .and_then(|k| k.modulus.finite())
            .map(|m| 1.1 * m);
        let mut analyses = vec![Analysis::Modulus { tau }, Analysis::Slope { tau: None }];
        if inst.map.k.is_polyhedral() {
            analyses.push(Analysis::Robinson {
                ybar: None,
                lambda_max: None,
                u_max: None,
            });
            analyses.push(Analysis::Coderivative { delta_ladder: None });
        }
        ProblemFile {
            schema_version: SCHEMA_VERSION,
            f: inst.map.f.clone(),
            k: inst.map.k.clone(),
            x0: inst.x0.clone(),
            y0: inst.y0.clone(),
            ybar: inst.dc.ybar().to_vec(),
            delta: inst.dc.delta(),
            epsilon: inst.epsilon,
            region: RegionSpec::default(),
            tol: None,
            analyses,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("problem files serialize")
    }
}
