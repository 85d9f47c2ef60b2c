//! Closed-form Wigner function of the antipodal two-block cat family
//!
//! ```text
//! |Ψ⟩ = (1/8)[ A ĉ(α₁e^{iθ₁}, ξ₁) ĉ(α₂e^{iφ₂}, ζ₂) + B ĉ(α₁e^{iφ₁}, ζ₁) ĉ(α₂e^{iθ₂}, ξ₂) ]
//! ĉ(β, ξ) = (|β⟩ + e^{iξ}|−β⟩) / √(2(1 + e^{−2|β|²} cos ξ))
//! ```
//!
//! W(x₁,p₁;x₂,p₂) = e^{−(|α₁|²+|α₂|²+x₁²+x₂²+p₁²+p₂²)}/(64π²) · [W_D1 + W_D2 + W_OD1 + W_OD2]
//! with the four components written as products of complex cosines. In the
//! module's phase-space convention this is exactly the Wigner function of
//! the (unnormalized) state above: the variables map by the identity and
//! the only correction is division by ⟨Ψ|Ψ⟩, which is the 4D integral of
//! the expression. Each component factorizes into a mode-1 and a mode-2
//! function, so the reduced field needs only one quadrature per component.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;

use super::{PhaseSpaceGrid, WignerField, CONVENTION, IMAG_TOL};
use crate::coherent::{BasisTerm, SuperState};
use crate::entanglement::decompose;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralCatParams {
    pub alpha1: C64,
    pub alpha2: C64,
    pub theta1: f64,
    pub theta2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub xi1: f64,
    pub xi2: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub coeff_a: C64,
    pub coeff_b: C64,
}

const HALF_PI: f64 = std::f64::consts::FRAC_PI_2;

impl GeneralCatParams {
    /// |g₁g₂g₃⟩ state at θ₁ = θ₂ = π/2.
    pub fn psi1(alpha1: f64, alpha2: f64) -> Self {
        Self {
            alpha1: C64::new(alpha1, 0.0),
            alpha2: C64::new(alpha2, 0.0),
            theta1: 0.0,
            theta2: 0.0,
            phi1: HALF_PI,
            phi2: HALF_PI,
            xi1: HALF_PI,
            xi2: HALF_PI,
            zeta1: 3.0 * HALF_PI,
            zeta2: 3.0 * HALF_PI,
            coeff_a: C64::new(0.0, -1.0),
            coeff_b: C64::new(0.0, 1.0),
        }
    }

    /// |g₁g₂e₃⟩ state at θ₁ = θ₂ = π/2.
    pub fn psi5(alpha1: f64, alpha2: f64) -> Self {
        Self {
            alpha1: C64::new(alpha1, 0.0),
            alpha2: C64::new(alpha2, 0.0),
            theta1: 0.0,
            theta2: 0.0,
            phi1: HALF_PI,
            phi2: HALF_PI,
            xi1: HALF_PI,
            xi2: 3.0 * HALF_PI,
            zeta1: 3.0 * HALF_PI,
            zeta2: HALF_PI,
            coeff_a: C64::new(0.0, -1.0),
            coeff_b: C64::new(0.0, -1.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let reals = [
            self.theta1, self.theta2, self.phi1, self.phi2, self.xi1, self.xi2, self.zeta1,
            self.zeta2,
        ];
        let cplx = [self.alpha1, self.alpha2, self.coeff_a, self.coeff_b];
        if reals.iter().all(|v| v.is_finite())
            && cplx.iter().all(|z| z.re.is_finite() && z.im.is_finite())
        {
            Ok(())
        } else {
            Err(Error::Domain("non-finite cat parameter".into()))
        }
    }

    fn norm_factor(alpha: C64, xi: f64) -> f64 {
        1.0 + (-2.0 * alpha.norm_sqr()).exp() * xi.cos()
    }

    /// The state these parameters describe, with unit-normalized cats.
    pub fn to_state(&self) -> SuperState {
        let e = |t: f64| C64::from_polar(1.0, t);
        let cat = |beta: C64, xi: f64| {
            let k = 1.0 / (2.0 * Self::norm_factor(beta, xi)).sqrt();
            [(C64::new(k, 0.0), beta), (e(xi) * k, -beta)]
        };
        let mut terms = Vec::with_capacity(8);
        let mut block = |coeff: C64, m1: [(C64, C64); 2], m2: [(C64, C64); 2]| {
            for (c1, b1) in m1 {
                for (c2, b2) in m2 {
                    terms.push(BasisTerm::field(coeff / 8.0 * c1 * c2, &[b1, b2]));
                }
            }
        };
        block(
            self.coeff_a,
            cat(self.alpha1 * e(self.theta1), self.xi1),
            cat(self.alpha2 * e(self.phi2), self.zeta2),
        );
        block(
            self.coeff_b,
            cat(self.alpha1 * e(self.phi1), self.zeta1),
            cat(self.alpha2 * e(self.theta2), self.xi2),
        );
        SuperState::new(terms)
    }

    /// Reads the parameters off a two-block state whose factors are all
    /// antipodal pairs c(|β⟩ + e^{iξ}|−β⟩), with one amplitude modulus per mode.
    pub fn from_state(state: &SuperState) -> Result<Self> {
        let dec = decompose(state)?;
        let pair = |s: &SuperState| -> Result<(C64, f64)> {
            if s.len() != 2 || (s.terms[0].fields[0].0 + s.terms[1].fields[0].0).norm() > 1e-10 {
                return Err(Error::Domain("factor is not an antipodal coherent pair".into()));
            }
            let ratio = s.terms[1].coefficient / s.terms[0].coefficient;
            if (ratio.norm() - 1.0).abs() > 1e-10 {
                return Err(Error::Domain("antipodal pair with unequal weights".into()));
            }
            Ok((s.terms[0].fields[0].0, ratio.arg()))
        };
        let (b_mu1, xi1) = pair(&dec.mu1)?;
        let (b_nu2, zeta2) = pair(&dec.nu2)?;
        let (b_nu1, zeta1) = pair(&dec.nu1)?;
        let (b_mu2, xi2) = pair(&dec.mu2)?;
        if (b_mu1.norm() - b_nu1.norm()).abs() > 1e-10 || (b_mu2.norm() - b_nu2.norm()).abs() > 1e-10 {
            return Err(Error::Domain("blocks use different amplitudes in one mode".into()));
        }
        let alpha1 = C64::new(b_mu1.norm(), 0.0);
        let alpha2 = C64::new(b_mu2.norm(), 0.0);
        // unit factors carry a real positive leading coefficient, so they equal ĉ
        Ok(Self {
            alpha1,
            alpha2,
            theta1: b_mu1.arg(),
            theta2: b_mu2.arg(),
            phi1: b_nu1.arg(),
            phi2: b_nu2.arg(),
            xi1,
            xi2,
            zeta1,
            zeta2,
            coeff_a: dec.coeff_a * 8.0,
            coeff_b: dec.coeff_b * 8.0,
        })
    }
}

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// e^{−|α|²}cos{√2ix(αe^{iθ}+α*e^{−iθ}) + √2p(αe^{iθ}−α*e^{−iθ})}
/// + e^{|α|²}cos{ξ + √2ix(αe^{iθ}−α*e^{−iθ}) + √2p(αe^{iθ}+α*e^{−iθ})}
fn diag_factor(alpha: C64, theta: f64, xi: f64, x: f64, p: f64) -> C64 {
    let u = alpha * C64::from_polar(1.0, theta);
    let v = alpha.conj() * C64::from_polar(1.0, -theta);
    let a2 = alpha.norm_sqr();
    let first = (I * SQRT_2 * x * (u + v) + SQRT_2 * p * (u - v)).cos() * (-a2).exp();
    let second = (xi + I * SQRT_2 * x * (u - v) + SQRT_2 * p * (u + v)).cos() * a2.exp();
    first + second
}

/// e^{−|α|²e^{i(θa−θb)}}cos{(ζ−ξ)/2 ± [√2ix(αe^{iθa}+α*e^{−iθb}) + √2p(αe^{iθa}−α*e^{−iθb})]}
/// + e^{|α|²e^{i(θa−θb)}}cos{(ζ+ξ)/2 + √2ix(αe^{iθa}−α*e^{−iθb}) + √2p(αe^{iθa}+α*e^{−iθb})}
#[allow(clippy::too_many_arguments)]
fn off_factor(alpha: C64, theta_a: f64, theta_b: f64, zeta: f64, xi: f64, sign: f64, x: f64, p: f64) -> C64 {
    let u = alpha * C64::from_polar(1.0, theta_a);
    let v = alpha.conj() * C64::from_polar(1.0, -theta_b);
    let e = C64::from_polar(alpha.norm_sqr(), theta_a - theta_b);
    let first = ((zeta - xi) / 2.0 + sign * (I * SQRT_2 * x * (u + v) + SQRT_2 * p * (u - v))).cos()
        * (-e).exp();
    let second = ((zeta + xi) / 2.0 + I * SQRT_2 * x * (u - v) + SQRT_2 * p * (u + v)).cos() * e.exp();
    first + second
}

/// Per-mode prefactor share: e^{−(|α|² + x² + p²)}/(8π).
fn mode_prefactor(alpha: C64, x: f64, p: f64) -> f64 {
    (-(alpha.norm_sqr() + x * x + p * p)).exp() / (8.0 * PI)
}

/// Evaluator for the four-component closed form.
#[derive(Clone, Copy, Debug)]
pub struct ClosedFormWigner {
    pub params: GeneralCatParams,
}

impl ClosedFormWigner {
    pub fn new(params: GeneralCatParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    fn coefficients(&self) -> [C64; 4] {
        let q = &self.params;
        let n = GeneralCatParams::norm_factor;
        let (a, b) = (q.coeff_a, q.coeff_b);
        let n_a = n(q.alpha1, q.xi1) * n(q.alpha2, q.zeta2);
        let n_b = n(q.alpha1, q.zeta1) * n(q.alpha2, q.xi2);
        let root = (n_a * n_b).sqrt();
        let ph = ((q.xi1 - q.xi2) - (q.zeta1 - q.zeta2)) / 2.0;
        [
            C64::new(a.norm_sqr() / n_a, 0.0),
            C64::new(b.norm_sqr() / n_b, 0.0),
            a * b.conj() * C64::from_polar(1.0 / root, ph),
            a.conj() * b * C64::from_polar(1.0 / root, -ph),
        ]
    }

    /// Mode-`mode` factor of each component, prefactor share included.
    fn mode_factors(&self, mode: usize, x: f64, p: f64) -> [C64; 4] {
        let q = &self.params;
        if mode == 1 {
            let pre = mode_prefactor(q.alpha1, x, p);
            [
                diag_factor(q.alpha1, q.theta1, q.xi1, x, p) * pre,
                diag_factor(q.alpha1, q.phi1, q.zeta1, x, p) * pre,
                off_factor(q.alpha1, q.theta1, q.phi1, q.zeta1, q.xi1, -1.0, x, p) * pre,
                off_factor(q.alpha1, q.phi1, q.theta1, q.xi1, q.zeta1, -1.0, x, p) * pre,
            ]
        } else {
            let pre = mode_prefactor(q.alpha2, x, p);
            [
                diag_factor(q.alpha2, q.phi2, q.zeta2, x, p) * pre,
                diag_factor(q.alpha2, q.theta2, q.xi2, x, p) * pre,
                off_factor(q.alpha2, q.phi2, q.theta2, q.zeta2, q.xi2, 1.0, x, p) * pre,
                off_factor(q.alpha2, q.theta2, q.phi2, q.xi2, q.zeta2, 1.0, x, p) * pre,
            ]
        }
    }

    /// [W_D1, W_D2, W_OD1, W_OD2] including the overall prefactor.
    pub fn components(&self, x1: f64, p1: f64, x2: f64, p2: f64) -> [C64; 4] {
        let c = self.coefficients();
        let f1 = self.mode_factors(1, x1, p1);
        let f2 = self.mode_factors(2, x2, p2);
        [0, 1, 2, 3].map(|k| c[k] * f1[k] * f2[k])
    }

    /// Unnormalized two-mode Wigner function W(x₁,p₁;x₂,p₂).
    pub fn evaluate(&self, x1: f64, p1: f64, x2: f64, p2: f64) -> C64 {
        self.components(x1, p1, x2, p2).iter().sum()
    }

    /// ∫ over one mode's plane of each component factor (trapezoid rule on
    /// a grid fine enough for the Gaussian envelope and its fringes).
    fn mode_integrals(&self, mode: usize) -> [C64; 4] {
        let alpha = if mode == 1 { self.params.alpha1 } else { self.params.alpha2 };
        let a = alpha.norm();
        let half = SQRT_2 * a + 8.0;
        let h = 0.05 * (2.0 / a.max(2.0));
        let n = (2.0 * half / h).ceil() as usize + 1;
        let h = 2.0 * half / (n - 1) as f64;
        let rows: Vec<[C64; 4]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let x = -half + i as f64 * h;
                let mut acc = [C64::new(0.0, 0.0); 4];
                for j in 0..n {
                    let f = self.mode_factors(mode, x, -half + j as f64 * h);
                    for k in 0..4 {
                        acc[k] += f[k];
                    }
                }
                acc
            })
            .collect();
        let mut out = [C64::new(0.0, 0.0); 4];
        for r in rows {
            for k in 0..4 {
                out[k] += r[k];
            }
        }
        out.map(|z| z * h * h)
    }

    /// ⟨Ψ|Ψ⟩ as the full phase-space integral of the expression.
    pub fn norm(&self) -> f64 {
        let c = self.coefficients();
        let i1 = self.mode_integrals(1);
        let i2 = self.mode_integrals(2);
        (0..4).map(|k| c[k] * i1[k] * i2[k]).sum::<C64>().re
    }
}

/// Reduced field of `mode` from the closed form, normalized to unit integral.
pub fn closed_form_reduced(
    params: &GeneralCatParams,
    mode: usize,
    grid: &PhaseSpaceGrid,
) -> Result<WignerField> {
    if mode != 1 && mode != 2 {
        return Err(Error::Domain(format!("mode {mode} is not 1 or 2")));
    }
    let cf = ClosedFormWigner::new(*params)?;
    let c = cf.coefficients();
    let other = cf.mode_integrals(3 - mode);
    let own = cf.mode_integrals(mode);
    let norm = (0..4).map(|k| c[k] * own[k] * other[k]).sum::<C64>();
    if !(norm.re > 0.0) {
        return Err(Error::DegenerateState { norm_sq: norm.re });
    }
    let weights: [C64; 4] = [0, 1, 2, 3].map(|k| c[k] * other[k] / norm.re);
    let rows: Vec<(Vec<f64>, f64)> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let mut worst: f64 = 0.0;
            let row = (0..grid.np)
                .map(|j| {
                    let f = cf.mode_factors(mode, x, grid.p(j));
                    let w: C64 = (0..4).map(|k| weights[k] * f[k]).sum();
                    worst = worst.max(w.im.abs());
                    w.re
                })
                .collect();
            (row, worst)
        })
        .collect();
    let residue = rows.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    if residue > IMAG_TOL {
        return Err(Error::Hermiticity { residue });
    }
    Ok(WignerField {
        grid: *grid,
        values: rows.into_iter().flat_map(|(r, _)| r).collect(),
        convention: CONVENTION,
    })
}
