//! Entropy landscapes over (θ₁, θ₂, α₁, α₂).
//!
//! A sweep spec names one or two axes and fixes the remaining parameters:
//!
//! ```json
//! {"outcome": "g1g2g3",
//!  "axis1": {"name": "theta1", "min": "15deg", "max": "90deg", "steps": 15},
//!  "axis2": {"name": "alpha1", "min": 0.5, "max": 3, "steps": 15},
//!  "fixed": {"theta_ratio": 1, "alpha_ratio": 1, "delta": 0}}
//! ```
//!
//! θ₂ defaults to theta_ratio·θ₁ and α₂ to alpha_ratio·α₁ unless set on an
//! axis or in `fixed`. `outcome` is a label, a table index, or "all".

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::entanglement::{entropy_analytic, entropy_gram};
use crate::error::{Error, Result};
use crate::protocol::{project_atoms, run_protocol, MeasurementOutcome, ProtocolConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    Theta1,
    Theta2,
    Alpha1,
    Alpha2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: AxisName,
    #[serde(deserialize_with = "crate::angle::de")]
    pub min: f64,
    #[serde(deserialize_with = "crate::angle::de")]
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.min];
        }
        let h = (self.max - self.min) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| self.min + k as f64 * h).collect()
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixed {
    #[serde(default)]
    pub alpha1: Option<f64>,
    #[serde(default)]
    pub alpha2: Option<f64>,
    #[serde(default, deserialize_with = "crate::angle::de_opt")]
    pub theta1: Option<f64>,
    #[serde(default, deserialize_with = "crate::angle::de_opt")]
    pub theta2: Option<f64>,
    #[serde(default = "one")]
    pub theta_ratio: f64,
    #[serde(default = "one")]
    pub alpha_ratio: f64,
    #[serde(default, deserialize_with = "crate::angle::de")]
    pub delta: f64,
}

impl Default for Fixed {
    fn default() -> Self {
        Self {
            alpha1: None,
            alpha2: None,
            theta1: None,
            theta2: None,
            theta_ratio: 1.0,
            alpha_ratio: 1.0,
            delta: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutcomeSelector {
    Index(usize),
    Label(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub outcome: OutcomeSelector,
    pub axis1: Axis,
    #[serde(default)]
    pub axis2: Option<Axis>,
    #[serde(default)]
    pub fixed: Fixed,
}

impl SweepSpec {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let spec: Self = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn outcomes(&self) -> Result<Vec<MeasurementOutcome>> {
        match &self.outcome {
            OutcomeSelector::Index(j) => Ok(vec![MeasurementOutcome::from_index(*j)?]),
            OutcomeSelector::Label(s) if s == "all" => Ok(MeasurementOutcome::all().to_vec()),
            OutcomeSelector::Label(s) => Ok(vec![s.parse()?]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.outcomes()?;
        let axes: Vec<&Axis> = std::iter::once(&self.axis1).chain(&self.axis2).collect();
        for a in &axes {
            if a.steps == 0 {
                return Err(Error::Config(format!("axis {:?} has zero steps", a.name)));
            }
            if !(a.min.is_finite() && a.max.is_finite()) {
                return Err(Error::Config(format!("axis {:?} has a non-finite bound", a.name)));
            }
        }
        if axes.len() == 2 && axes[0].name == axes[1].name {
            return Err(Error::Config("both axes sweep the same parameter".into()));
        }
        let on_axis = |n: AxisName| axes.iter().any(|a| a.name == n);
        if !on_axis(AxisName::Theta1) && self.fixed.theta1.is_none() {
            return Err(Error::Config("theta1 is neither swept nor fixed".into()));
        }
        if !on_axis(AxisName::Alpha1) && self.fixed.alpha1.is_none() {
            return Err(Error::Config("alpha1 is neither swept nor fixed".into()));
        }
        Ok(())
    }

    /// Protocol parameters at one grid point.
    pub fn config_at(&self, v1: f64, v2: Option<f64>) -> ProtocolConfig {
        let pick = |n: AxisName| {
            if self.axis1.name == n {
                Some(v1)
            } else if self.axis2.as_ref().map(|a| a.name) == Some(n) {
                v2
            } else {
                None
            }
        };
        let f = &self.fixed;
        let theta1 = pick(AxisName::Theta1).or(f.theta1).unwrap_or(0.0);
        let theta2 = pick(AxisName::Theta2)
            .or(f.theta2)
            .unwrap_or(f.theta_ratio * theta1);
        let alpha1 = pick(AxisName::Alpha1).or(f.alpha1).unwrap_or(0.0);
        let alpha2 = pick(AxisName::Alpha2)
            .or(f.alpha2)
            .unwrap_or(f.alpha_ratio * alpha1);
        ProtocolConfig::new(alpha1, alpha2, theta1, theta2, f.delta)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub outcome: String,
    /// Gram-path entropy (bits); absent for zero-probability outcomes.
    pub entropy: Option<f64>,
    /// 2×2 analytic-path entropy when the state splits into two blocks.
    pub entropy_analytic: Option<f64>,
    pub probability: f64,
}

fn cell(spec: &SweepSpec, outcomes: &[MeasurementOutcome], v1: f64, v2: Option<f64>) -> Result<Vec<SweepRow>> {
    let cfg = spec.config_at(v1, v2);
    let state = run_protocol(&cfg)?;
    outcomes
        .iter()
        .map(|&o| {
            let (entropy, entropy_analytic, probability) = match project_atoms(&state, o) {
                Ok(c) => (
                    Some(entropy_gram(&c.state, 1)?.entropy),
                    entropy_analytic(&c.state).ok().map(|e| e.entropy),
                    c.probability,
                ),
                Err(Error::DegenerateState { .. }) => (None, None, 0.0),
                Err(e) => return Err(e),
            };
            Ok(SweepRow {
                axis1: v1,
                axis2: v2,
                outcome: o.label(),
                entropy,
                entropy_analytic,
                probability,
            })
        })
        .collect()
}

/// Rows in row-major grid order (axis1 outer, axis2 inner, outcomes in
/// table order), independent of thread count.
pub fn entropy_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let outcomes = spec.outcomes()?;
    let points: Vec<(f64, Option<f64>)> = spec
        .axis1
        .values()
        .into_iter()
        .flat_map(|v1| match &spec.axis2 {
            Some(a2) => a2.values().into_iter().map(|v2| (v1, Some(v2))).collect::<Vec<_>>(),
            None => vec![(v1, None)],
        })
        .collect();
    let cells: Vec<Vec<SweepRow>> = points
        .par_iter()
        .map(|&(v1, v2)| cell(spec, &outcomes, v1, v2))
        .collect::<Result<_>>()?;
    Ok(cells.into_iter().flatten().collect())
}

pub const CSV_HEADER: &str = "axis1,axis2,outcome,entropy,entropy_analytic,probability";

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{:.16e},{},{},{},{},{:.16e}",
            r.axis1,
            fmt_opt(r.axis2),
            r.outcome,
            fmt_opt(r.entropy),
            fmt_opt(r.entropy_analytic),
            r.probability
        )
        .expect("writing to a String");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entanglement::state_entropy;
    use std::f64::consts::FRAC_PI_2;

    fn spec(text: &str) -> SweepSpec {
        SweepSpec::from_json_str(text).unwrap()
    }

    #[test]
    fn axis_values() {
        let a = Axis { name: AxisName::Alpha1, min: 0.5, max: 3.0, steps: 6 };
        assert_eq!(a.values(), vec![0.5, 1.0, 1.5, 2.0, 2.5, 3.0]);
        let single = Axis { name: AxisName::Alpha1, min: 0.5, max: 3.0, steps: 1 };
        assert_eq!(single.values(), vec![0.5]);
    }

    #[test]
    fn ratios_fill_unswept_parameters() {
        let s = spec(
            r#"{"outcome":"g1g2g3","axis1":{"name":"theta1","min":"30deg","max":"90deg","steps":3},
                "fixed":{"alpha1":2,"theta_ratio":0.5,"alpha_ratio":1.5}}"#,
        );
        let cfg = s.config_at(1.0, None);
        assert_eq!(cfg.theta2, 0.5);
        assert_eq!(cfg.alpha2.re, 3.0);
        assert!((s.axis1.min - FRAC_PI_2 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn single_cell_equals_direct_call() {
        let s = spec(
            r#"{"outcome":7,"axis1":{"name":"alpha1","min":1,"max":1,"steps":1},
                "fixed":{"theta1":"90deg"}}"#,
        );
        let rows = entropy_sweep(&s).unwrap();
        assert_eq!(rows.len(), 1);
        let cfg = ProtocolConfig::symmetric(1.0, FRAC_PI_2, 0.0);
        let st = project_atoms(&run_protocol(&cfg).unwrap(), "f1g2e3".parse().unwrap()).unwrap();
        let direct = state_entropy(&st.state).unwrap().entropy;
        assert!((rows[0].entropy.unwrap() - direct).abs() < 1e-8);
        assert!((rows[0].entropy_analytic.unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn row_order_is_row_major() {
        let s = spec(
            r#"{"outcome":"all","axis1":{"name":"theta1","min":0.5,"max":1.5,"steps":2},
                "axis2":{"name":"alpha1","min":1,"max":2,"steps":3},"fixed":{}}"#,
        );
        let rows = entropy_sweep(&s).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 8);
        assert_eq!(rows[0].axis2, Some(1.0));
        assert_eq!(rows[8].axis2, Some(1.5));
        assert_eq!(rows[24].axis1, 1.5);
        assert_eq!(rows[1].outcome, "g1e2g3");
        let csv = rows_to_csv(&rows);
        assert_eq!(csv.lines().next().unwrap(), CSV_HEADER);
        assert_eq!(csv, rows_to_csv(&entropy_sweep(&s).unwrap()));
    }

    #[test]
    fn degenerate_outcomes_have_zero_probability() {
        let s = spec(
            r#"{"outcome":"all","axis1":{"name":"theta1","min":0,"max":0,"steps":1},"fixed":{"alpha1":1}}"#,
        );
        let rows = entropy_sweep(&s).unwrap();
        let zero: Vec<_> = rows.iter().filter(|r| r.probability == 0.0).collect();
        // without interaction only f1g2g3 is left
        assert_eq!(zero.len(), 7);
        assert!(zero.iter().all(|r| r.entropy.is_none() && r.outcome != "f1g2g3"));
        assert!(rows_to_csv(&rows).contains(",g1e2g3,,,"));
    }

    #[test]
    fn spec_errors() {
        for bad in [
            r#"{"outcome":"x1g2g3","axis1":{"name":"theta1","min":0,"max":1,"steps":2},"fixed":{"alpha1":1}}"#,
            r#"{"outcome":1,"axis1":{"name":"theta1","min":0,"max":1,"steps":0},"fixed":{"alpha1":1}}"#,
            r#"{"outcome":1,"axis1":{"name":"theta1","min":0,"max":1,"steps":2}}"#,
            r#"{"outcome":1,"axis1":{"name":"gamma","min":0,"max":1,"steps":2},"fixed":{"alpha1":1}}"#,
            r#"{"outcome":9,"axis1":{"name":"theta1","min":0,"max":1,"steps":2},"fixed":{"alpha1":1}}"#,
        ] {
            assert!(SweepSpec::from_json_str(bad).is_err(), "{bad}");
        }
    }
}
