//! Certification of directional metric regularity for `F(x) = f(x) − K`.
//!
//! Primal side: sampled distance ratios and envelope slopes. Dual side:
//! coderivative values over `T(ȳ, δ)` and a Robinson-type interiority LP.
//! Also the modulus bound under Lipschitz perturbations.

mod dual;
mod modulus;
mod perturbation;
mod robinson;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use dual::{
    coderivative_criterion, in_c, in_s, sample_dual_pairs, sample_dual_pairs_counted, CoderivativeResult,
    CoderivativeWitness, DualPair, DualSample, DUAL_TOL,
};
pub use modulus::{
    empirical_directional_modulus, modulus_from_slopes, pair_ratio, parametric_sweep, slope_criterion,
    ModulusEstimate, PairSample, SlopeCriterion, SlopeModulus, SlopeViolator, SweepPoint, SweepResult,
    SLOPE_SLACK,
};
pub use perturbation::{perturbation_bound, perturbation_gamma, perturbation_limit};
pub use robinson::{convex_range_condition, robinson_condition, InteriorResult, LpBounds};

use crate::error::{Error, Result};
use crate::ext_real::ExtReal;
use crate::geometry::DirectionalCone;
use crate::linalg::{check_dim, Vector};
use crate::multimap::{MultiMap, SearchRegion};
use crate::tolerances::Tolerances;

/// Norm used on `X × Y` for the neighbourhood `B((x₀, y₀), ε)`.
pub const NORM_CHOICE: &str = "max of component Euclidean norms";

/// Base point `(x₀, y₀) ∈ gph F`, direction `(ȳ, δ)`, radius `ε` and the
/// search region used by every estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityQuery {
    #[serde(rename = "F")]
    pub map: MultiMap,
    pub x0: Vector,
    pub y0: Vector,
    pub dc: DirectionalCone,
    pub epsilon: f64,
    pub region: SearchRegion,
    #[serde(default)]
    pub tol: Tolerances,
}

impl RegularityQuery {
    pub fn new(
        map: MultiMap,
        x0: Vector,
        y0: Vector,
        dc: DirectionalCone,
        epsilon: f64,
        region: SearchRegion,
    ) -> Result<Self> {
        let q = RegularityQuery {
            map,
            x0,
            y0,
            dc,
            epsilon,
            region,
            tol: Tolerances::default(),
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        check_dim(self.map.dim_in(), self.x0.len())?;
        check_dim(self.map.dim_out(), self.y0.len())?;
        check_dim(self.map.dim_out(), self.dc.dim())?;
        check_dim(self.map.dim_in(), self.region.dim())?;
        self.region.validate()?;
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidParameter(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        let d = self.map.image_distance(&self.x0, &self.y0)?;
        if d > self.tol.member {
            return Err(Error::NotInSet {
                distance: d,
                tol: self.tol.member,
            });
        }
        Ok(())
    }

    pub fn with_dc(mut self, dc: DirectionalCone) -> Self {
        self.dc = dc;
        self
    }

    pub fn with_region(mut self, region: SearchRegion) -> Self {
        self.region = region;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.region.seed = seed;
        self
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.region = self.region.with_budget(budget);
        self
    }
}

/// Which criteria [`certify`] runs and with what parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Target modulus for the slope criterion; skipped when absent.
    pub tau: Option<f64>,
    pub delta_ladder: Vec<f64>,
    pub bounds: LpBounds,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            tau: None,
            delta_ladder: vec![0.1, 0.05, 0.01],
            bounds: LpBounds::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportWitness {
    pub label: String,
    pub x: Vector,
    pub y: Vector,
}

/// Verdicts and estimates from one [`certify`] run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub verdicts: BTreeMap<String, bool>,
    pub modulus_estimate: Option<ExtReal>,
    pub modulus_from_slopes: Option<ExtReal>,
    pub min_slope: Option<f64>,
    pub coderivative_inf: Option<f64>,
    pub robinson_margin: Option<f64>,
    pub witnesses: Vec<ReportWitness>,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub norm_choice: String,
}

impl RegularityReport {
    pub fn all_hold(&self) -> bool {
        self.verdicts.values().all(|v| *v)
    }
}

/// Runs every criterion applicable to the query.
///
/// Coderivative and Robinson checks need a polyhedral `K` and are skipped
/// otherwise. A modulus with no admissible samples is recorded as missing.
pub fn certify(q: &RegularityQuery, opts: &CertifyOptions) -> Result<RegularityReport> {
    q.validate()?;
    let mut verdicts = BTreeMap::new();
    let mut witnesses = Vec::new();

    let modulus = match empirical_directional_modulus(q) {
        Ok(m) => Some(m),
        Err(Error::NoAdmissibleSamples { .. }) => None,
        Err(e) => return Err(e),
    };
    if let Some(m) = &modulus {
        verdicts.insert("modulus_finite".to_string(), m.sup_ratio.is_finite());
        if let Some((x, y)) = &m.worst_witness {
            witnesses.push(ReportWitness {
                label: "worst_ratio".into(),
                x: x.clone(),
                y: y.clone(),
            });
        }
    }

    let slopes = match modulus_from_slopes(q) {
        Ok(s) => Some(s),
        Err(Error::NoAdmissibleSamples { .. }) => None,
        Err(e) => return Err(e),
    };

    let mut min_slope = slopes.as_ref().map(|s| s.min_slope);
    if let Some(tau) = opts.tau {
        match slope_criterion(q, tau) {
            Ok(c) => {
                verdicts.insert("slope_criterion".to_string(), c.holds);
                min_slope = Some(c.min_slope);
                witnesses.extend(c.violators.iter().take(3).map(|v| ReportWitness {
                    label: "slope_violator".into(),
                    x: v.x.clone(),
                    y: v.y.clone(),
                }));
            }
            Err(Error::NoAdmissibleSamples { .. }) => {}
            Err(e) => return Err(e),
        }
    }

    let polyhedral = q.map.k.is_polyhedral();
    let coderivative_inf = if polyhedral {
        let c = coderivative_criterion(q, &opts.delta_ladder)?;
        verdicts.insert("coderivative".to_string(), c.holds_for(q.tol.feas));
        Some(c.inf_value)
    } else {
        None
    };
    let robinson_margin = if polyhedral {
        let r = robinson_condition(&q.map, &q.x0, q.dc.ybar(), opts.bounds)?;
        verdicts.insert("robinson".to_string(), r.holds);
        Some(r.margin)
    } else {
        None
    };

    Ok(RegularityReport {
        verdicts,
        modulus_estimate: modulus.map(|m| m.sup_ratio),
        modulus_from_slopes: slopes.map(|s| s.value),
        min_slope,
        coderivative_inf,
        robinson_margin,
        witnesses,
        seed: q.region.seed,
        tolerances: q.tol,
        norm_choice: NORM_CHOICE.to_string(),
    })
}
