//! Cross-module oracle suite: protocol against the tabulated states,
//! entropy through three independent paths, and Wigner fields through the
//! dyad kernel, the closed form and the number basis.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6};

use serde::Serialize;

use crate::coherent::{fidelity, SuperState};
use crate::entanglement::{decompose, eigenvalues_2x2, entropy, entropy_gram, reduced_density};
use crate::error::Result;
use crate::fock::{FockState2, TruncationPolicy};
use crate::protocol::{
    project_atoms, project_raw, reference_unmerged, run_protocol, MeasurementOutcome, ProtocolConfig,
};
use crate::wigner::{closed_form_reduced, reduced_wigner, reduced_wigner_at, GeneralCatParams, PhaseSpaceGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteLevel {
    Fast,
    Full,
}

/// Deliberate corruption used to confirm the suite can fail.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fault {
    None,
    /// Flip the relative sign of the two product blocks in the reference.
    FlipBlockSign,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, max_deviation: f64, tolerance: f64, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed: max_deviation <= tolerance,
            max_deviation,
            tolerance,
            detail,
        }
    }

    fn error(name: &str, tolerance: f64, err: crate::Error) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            max_deviation: f64::INFINITY,
            tolerance,
            detail: err.to_string(),
        }
    }
}

fn reference(o: MeasurementOutcome, cfg: &ProtocolConfig, fault: Fault) -> Result<SuperState> {
    let mut s = reference_unmerged(o, cfg);
    if fault == Fault::FlipBlockSign {
        for t in s.terms.iter_mut().skip(4) {
            t.coefficient = -t.coefficient;
        }
    }
    s.normalized()
}

fn grid_configs(thetas: &[f64], alphas: &[f64], deltas: &[f64]) -> Vec<ProtocolConfig> {
    let mut out = Vec::new();
    for &t in thetas {
        for &a in alphas {
            for &d in deltas {
                out.push(ProtocolConfig::symmetric(a, t, d));
            }
        }
    }
    out
}

fn protocol_check(name: &str, cfgs: &[ProtocolConfig], fault: Fault) -> CheckResult {
    let tol = 1e-10;
    let run = || -> Result<(f64, f64)> {
        let (mut fid_dev, mut prob_dev) = (0.0f64, 0.0f64);
        for cfg in cfgs {
            let s = run_protocol(cfg)?;
            let mut total = 0.0;
            for o in MeasurementOutcome::all() {
                total += project_raw(&s, o)?.1;
                let sim = project_atoms(&s, o)?.state;
                fid_dev = fid_dev.max((fidelity(&sim, &reference(o, cfg, fault)?)? - 1.0).abs());
            }
            prob_dev = prob_dev.max((total - 1.0).abs());
        }
        Ok((fid_dev, prob_dev))
    };
    match run() {
        Ok((f, p)) => CheckResult::new(
            name,
            f.max(p),
            tol,
            format!("{} configs; fidelity dev {f:.2e}, probability-sum dev {p:.2e}", cfgs.len()),
        ),
        Err(e) => CheckResult::error(name, tol, e),
    }
}

fn entropy_triple_check(name: &str, cfgs: &[ProtocolConfig], fault: Fault) -> CheckResult {
    let tol = 1e-7;
    let run = || -> Result<(f64, usize)> {
        let mut worst = 0.0f64;
        let mut n = 0;
        for cfg in cfgs {
            for o in MeasurementOutcome::all() {
                let s = match reference(o, cfg, fault) {
                    Ok(s) => s,
                    Err(crate::Error::DegenerateState { .. }) => continue,
                    Err(e) => return Err(e),
                };
                let analytic = entropy(eigenvalues_2x2(&reduced_density(&decompose(&s)?))?).entropy;
                let gram = entropy_gram(&s, 1)?.entropy;
                let policy = TruncationPolicy::for_state(&s);
                let fock = FockState2::from_superstate(&s, &policy)?
                    .partial_trace(1)?
                    .entropy()
                    .entropy;
                worst = worst
                    .max((analytic - gram).abs())
                    .max((analytic - fock).abs())
                    .max((gram - fock).abs());
                n += 1;
            }
        }
        Ok((worst, n))
    };
    match run() {
        Ok((w, n)) => CheckResult::new(name, w, tol, format!("{n} states, max pairwise |ΔE| {w:.2e}")),
        Err(e) => CheckResult::error(name, tol, e),
    }
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn wigner_dual_path_check(fault: Fault) -> CheckResult {
    let name = "wigner kernel vs closed form (ψ1, ψ5; α=2, 41×41 over ±6)";
    let tol = 1e-8;
    let run = || -> Result<f64> {
        let grid = PhaseSpaceGrid::square(6.0, 41)?;
        let cfg = ProtocolConfig::symmetric(2.0, FRAC_PI_2, 0.0);
        let mut worst = 0.0f64;
        for (j, params) in [(1, GeneralCatParams::psi1(2.0, 2.0)), (5, GeneralCatParams::psi5(2.0, 2.0))] {
            let s = reference(MeasurementOutcome::from_index(j)?, &cfg, fault)?;
            let kernel = reduced_wigner(&s, 1, &grid)?;
            let closed = closed_form_reduced(&params, 1, &grid)?;
            worst = worst.max(max_dev(&kernel.values, &closed.values));
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => CheckResult::new(name, w, tol, format!("max pointwise deviation {w:.2e}")),
        Err(e) => CheckResult::error(name, tol, e),
    }
}

fn wigner_fock_check(fault: Fault) -> CheckResult {
    let name = "wigner kernel vs number-basis parity (ψ1, α=3)";
    let tol = 1e-8;
    let run = || -> Result<f64> {
        let cfg = ProtocolConfig::symmetric(3.0, FRAC_PI_2, 0.0);
        let s = reference(MeasurementOutcome::from_index(1)?, &cfg, fault)?;
        let exact = reference(MeasurementOutcome::from_index(1)?, &cfg, Fault::None)?;
        let rho = FockState2::from_superstate(&exact, &TruncationPolicy::for_state(&exact))?.partial_trace(1)?;
        let tr = rho.trace();
        let mut worst = 0.0f64;
        for i in 0..9 {
            for j in 0..9 {
                let (x, p) = (-6.0 + 1.5 * i as f64, -6.0 + 1.5 * j as f64);
                let k = reduced_wigner_at(&s, 1, x, p)?;
                worst = worst.max((k - rho.wigner(x, p) / tr).abs());
            }
        }
        Ok(worst)
    };
    match run() {
        Ok(w) => CheckResult::new(name, w, tol, format!("81 points, max deviation {w:.2e}")),
        Err(e) => CheckResult::error(name, tol, e),
    }
}

fn marginal_check(fault: Fault) -> CheckResult {
    let name = "wigner x-marginal vs number-basis density (ψ1, α=3)";
    let tol = 1e-6;
    let run = || -> Result<f64> {
        let cfg = ProtocolConfig::symmetric(3.0, FRAC_PI_2, 0.0);
        let s = reference(MeasurementOutcome::from_index(1)?, &cfg, fault)?;
        let exact = reference(MeasurementOutcome::from_index(1)?, &cfg, Fault::None)?;
        let grid = PhaseSpaceGrid::wide(3.0);
        let field = reduced_wigner(&s, 1, &grid)?;
        let rho = FockState2::from_superstate(&exact, &TruncationPolicy::for_state(&exact))?.partial_trace(1)?;
        let tr = rho.trace();
        let marg = field.marginal_x();
        Ok((0..grid.nx)
            .map(|i| (marg[i] - rho.position_density(grid.x(i)) / tr).abs())
            .fold(0.0, f64::max))
    };
    match run() {
        Ok(w) => CheckResult::new(name, w, tol, format!("max deviation {w:.2e}")),
        Err(e) => CheckResult::error(name, tol, e),
    }
}

pub fn run_suite(level: SuiteLevel, fault: Fault) -> Vec<CheckResult> {
    let fast_cfgs = grid_configs(&[FRAC_PI_2], &[1.0, 2.0], &[0.0, 0.7]);
    let mut out = vec![
        protocol_check("protocol vs table (θ=π/2, α∈{1,2})", &fast_cfgs, fault),
        entropy_triple_check(
            "entropy analytic/Gram/number-basis (θ=π/2, α∈{1,2})",
            &grid_configs(&[FRAC_PI_2], &[1.0, 2.0], &[0.0]),
            fault,
        ),
        wigner_dual_path_check(fault),
    ];
    if level == SuiteLevel::Full {
        let thetas = [FRAC_PI_6, FRAC_PI_3, FRAC_PI_2];
        let alphas = [0.5, 1.0, 2.0, 3.0];
        out.push(protocol_check(
            "protocol vs table (θ∈{π/6,π/3,π/2}, α∈{0.5,1,2,3}, δ∈{0,0.7})",
            &grid_configs(&thetas, &alphas, &[0.0, 0.7]),
            fault,
        ));
        out.push(entropy_triple_check(
            "entropy analytic/Gram/number-basis (θ∈{π/6,π/3,π/2}, α∈{0.5,1,2,3})",
            &grid_configs(&thetas, &alphas, &[0.0]),
            fault,
        ));
        out.push(wigner_fock_check(fault));
        out.push(marginal_check(fault));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suite_passes() {
        let r = run_suite(SuiteLevel::Fast, Fault::None);
        assert_eq!(r.len(), 3);
        for c in &r {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }

    #[test]
    fn injected_fault_is_caught() {
        let r = run_suite(SuiteLevel::Fast, Fault::FlipBlockSign);
        assert!(!r[0].passed);
        assert!(!r[2].passed);
    }
}
