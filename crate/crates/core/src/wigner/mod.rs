//! Reduced single-mode Wigner functions.
//!
//! Convention: α = (x + ip)/√2, so |α⟩ is a Gaussian centred at
//! (√2 Re α, √2 Im α); W integrates to one over dx dp and a pure state peaks
//! at most at 1/π. The Wigner transform of the dyad |α⟩⟨β| is
//!
//! ```text
//! K(α, β; z) = (1/π) ⟨β|α⟩ exp(−2 (z* − β*)(z − α)),   z = (x + ip)/√2
//! ```
//!
//! and tracing out the other mode only leaves coherent overlaps, so the
//! reduced field is a finite sum of such kernels.

mod closed_form;
mod export;
mod lobes;

pub use closed_form::{closed_form_reduced, ClosedFormWigner, GeneralCatParams};
pub use export::{field_sidecar, to_csv, to_ppm};
pub use lobes::{checkerboard, husimi_smoothed, lobe_positions, CheckerboardReport, Lobe, LobeReport};

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::coherent::SuperState;
use crate::entanglement::{gram_matrix, ModeMatrix};
use crate::error::{Error, Result};
use crate::C64;

/// Largest tolerated imaginary part of a reduced Wigner sum.
pub const IMAG_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PhaseSpaceGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub nx: usize,
    pub np: usize,
}

impl PhaseSpaceGrid {
    pub fn new(x_min: f64, x_max: f64, p_min: f64, p_max: f64, nx: usize, np: usize) -> Result<Self> {
        let finite = [x_min, x_max, p_min, p_max].iter().all(|v| v.is_finite());
        if !finite || x_min >= x_max || p_min >= p_max || nx < 2 || np < 2 {
            return Err(Error::Domain(format!(
                "bad grid x∈[{x_min}, {x_max}] p∈[{p_min}, {p_max}] {nx}×{np}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            p_min,
            p_max,
            nx,
            np,
        })
    }

    /// [−half_width, half_width]² with n points per axis.
    pub fn square(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, half_width, -half_width, half_width, n, n)
    }

    /// ±(√2|α| + 5), 201 × 201.
    pub fn wide(abs_alpha: f64) -> Self {
        Self::square(SQRT_2 * abs_alpha + 5.0, 201).expect("valid by construction")
    }

    /// ±1.5, 201 × 201.
    pub fn zoom() -> Self {
        Self::square(1.5, 201).expect("valid by construction")
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.np - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p_min + j as f64 * self.dp()
    }

    pub fn len(&self) -> usize {
        self.nx * self.np
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Convention {
    /// Coherent state |α⟩ sits at alpha_center_scale · (Re α, Im α).
    pub alpha_center_scale: f64,
    pub normalization: &'static str,
}

pub const CONVENTION: Convention = Convention {
    alpha_center_scale: SQRT_2,
    normalization: "unit integral over dx dp",
};

/// Real field sampled on a grid; `values[i * np + j]` is W(x_i, p_j).
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    pub grid: PhaseSpaceGrid,
    pub values: Vec<f64>,
    pub convention: Convention,
}

impl WignerField {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.np + j]
    }

    pub fn cell(&self) -> f64 {
        self.grid.dx() * self.grid.dp()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// ∫ W dp at each x_i.
    pub fn marginal_x(&self) -> Vec<f64> {
        let np = self.grid.np;
        (0..self.grid.nx)
            .map(|i| self.values[i * np..(i + 1) * np].iter().sum::<f64>() * self.grid.dp())
            .collect()
    }

    pub fn negativity_volume(&self) -> f64 {
        negativity_volume(self)
    }
}

/// Σ max(0, −W) Δx Δp.
pub fn negativity_volume(field: &WignerField) -> f64 {
    field.values.iter().map(|&w| (-w).max(0.0)).sum::<f64>() * field.cell()
}

/// Exponent of π·K(α, β; z) without the 1/π.
#[inline]
fn dyad_exponent(alpha: C64, beta: C64, z: C64) -> C64 {
    -0.5 * alpha.norm_sqr() - 0.5 * beta.norm_sqr() + beta.conj() * alpha
        - 2.0 * (z.conj() - beta.conj()) * (z - alpha)
}

/// Wigner transform of |α⟩⟨β| at (x, p).
pub fn coherent_dyad_wigner(alpha: C64, beta: C64, x: f64, p: f64) -> C64 {
    let z = C64::new(x, p) / SQRT_2;
    dyad_exponent(alpha, beta, z).exp() / PI
}

/// Mode-`mode` labels and the reduced coefficient matrix R with
/// ρ = Σ R[i, i'] |u_i⟩⟨u_i'|, normalized to unit trace.
pub fn reduced_dyads(state: &SuperState, mode: usize) -> Result<(Vec<C64>, DMatrix<C64>)> {
    if mode != 1 && mode != 2 {
        return Err(Error::Domain(format!("mode {mode} is not 1 or 2")));
    }
    let mm = ModeMatrix::from_state(state)?;
    let c = mm.oriented(mode);
    let labels = mm.labels(mode).to_vec();
    // M[k, k'] = ⟨v_k'|v_k⟩
    let m = gram_matrix(mm.labels(3 - mode)).transpose();
    let r = &c * m * c.adjoint();
    let g = gram_matrix(&labels);
    let tr: C64 = (0..labels.len())
        .flat_map(|i| (0..labels.len()).map(move |k| (i, k)))
        .map(|(i, k)| r[(i, k)] * g[(k, i)])
        .sum();
    if !(tr.re > 0.0) {
        return Err(Error::DegenerateState { norm_sq: tr.re });
    }
    Ok((labels, r / C64::new(tr.re, 0.0)))
}

/// Σ R[i, i'] K(u_i, u_i'; x, p), complex before the reality check.
pub fn dyad_sum(labels: &[C64], r: &DMatrix<C64>, x: f64, p: f64) -> C64 {
    let z = C64::new(x, p) / SQRT_2;
    let mut acc = C64::new(0.0, 0.0);
    for (i, &a) in labels.iter().enumerate() {
        for (k, &b) in labels.iter().enumerate() {
            let rik = r[(i, k)];
            if rik.norm() > 0.0 {
                acc += rik * dyad_exponent(a, b, z).exp();
            }
        }
    }
    acc / PI
}

/// Reduced Wigner function of `mode` (1 or 2) of a two-mode field state.
pub fn reduced_wigner(state: &SuperState, mode: usize, grid: &PhaseSpaceGrid) -> Result<WignerField> {
    let (labels, r) = reduced_dyads(state, mode)?;
    let rows: Vec<(Vec<f64>, f64)> = (0..grid.nx)
        .into_par_iter()
        .map(|i| {
            let x = grid.x(i);
            let mut worst: f64 = 0.0;
            let row = (0..grid.np)
                .map(|j| {
                    let w = dyad_sum(&labels, &r, x, grid.p(j));
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
    let values: Vec<f64> = rows.into_iter().flat_map(|(row, _)| row).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalConsistency("non-finite Wigner value".into()));
    }
    Ok(WignerField {
        grid: *grid,
        values,
        convention: CONVENTION,
    })
}

/// Single-point evaluation of the reduced field.
pub fn reduced_wigner_at(state: &SuperState, mode: usize, x: f64, p: f64) -> Result<f64> {
    let (labels, r) = reduced_dyads(state, mode)?;
    let w = dyad_sum(&labels, &r, x, p);
    if w.im.abs() > IMAG_TOL {
        return Err(Error::Hermiticity { residue: w.im.abs() });
    }
    Ok(w.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{coherent_overlap, BasisTerm};
    use crate::fock::{FockDensity, FockState2, TruncationPolicy};
    use crate::protocol::{reference_state, MeasurementOutcome, ProtocolConfig};
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn psi(j: usize, alpha: f64, theta: f64) -> SuperState {
        let cfg = ProtocolConfig::symmetric(alpha, theta, 0.0);
        reference_state(MeasurementOutcome::from_index(j).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn kernel_diagonal_is_gaussian() {
        let a = c(1.0, -0.5);
        let (x0, p0) = (SQRT_2 * a.re, SQRT_2 * a.im);
        assert!((coherent_dyad_wigner(a, a, x0, p0) - 1.0 / PI).norm() < 1e-15);
        let (x, p) = (0.3, 0.9);
        let expect = (-(x - x0).powi(2) - (p - p0).powi(2)).exp() / PI;
        assert!((coherent_dyad_wigner(a, a, x, p) - expect).norm() < 1e-15);
    }

    #[test]
    fn kernel_hermiticity() {
        let (a, b) = (c(1.0, 0.5), c(-0.3, 1.2));
        for (x, p) in [(0.0, 0.0), (1.1, -0.7), (-2.0, 2.5)] {
            let k1 = coherent_dyad_wigner(a, b, x, p);
            let k2 = coherent_dyad_wigner(b, a, x, p);
            assert!((k1 - k2.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn kernel_integrates_to_overlap() {
        let grid = PhaseSpaceGrid::square(9.0, 301).unwrap();
        for (a, b) in [(c(1.5, 0.0), c(-1.5, 0.0)), (c(1.0, 0.5), c(0.0, -0.7))] {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..grid.nx {
                for j in 0..grid.np {
                    acc += coherent_dyad_wigner(a, b, grid.x(i), grid.p(j));
                }
            }
            acc *= grid.dx() * grid.dp();
            assert!((acc - coherent_overlap(b, a).unwrap()).norm() < 1e-10);
        }
    }

    #[test]
    fn kernel_matches_fock_dyad() {
        let (a, b) = (c(1.0, 0.5), c(0.0, -0.7));
        let p = TruncationPolicy::for_amplitude(1.2);
        let va = crate::fock::coherent_to_fock(a, &p).unwrap();
        let vb = crate::fock::coherent_to_fock(b, &p).unwrap();
        // Hermitian part of the dyad, W is linear in ρ
        let rho = FockDensity {
            matrix: (&va * vb.adjoint() + &vb * va.adjoint()) * C64::new(0.5, 0.0),
        };
        for (x, y) in [(0.0, 0.0), (1.2, -0.4), (-1.5, 2.0), (2.2, 0.9)] {
            let k = 0.5 * (coherent_dyad_wigner(a, b, x, y) + coherent_dyad_wigner(b, a, x, y));
            assert!((k.re - rho.wigner(x, y)).abs() < 1e-8);
        }
    }

    #[test]
    fn product_state_is_gaussian() {
        let s = SuperState::coherent_product(&[c(1.0, 1.0), c(-2.0, 0.0)]);
        let grid = PhaseSpaceGrid::wide(2.0);
        let f = reduced_wigner(&s, 1, &grid).unwrap();
        assert!(f.min() > -1e-15);
        assert_eq!(negativity_volume(&f), 0.0);
        assert!((f.integral() - 1.0).abs() < 2e-3);
        let w = reduced_wigner_at(&s, 1, SQRT_2, SQRT_2).unwrap();
        assert!((w - 1.0 / PI).abs() < 1e-14);
    }

    #[test]
    fn psi1_normalization_and_bound() {
        let s = psi(1, 3.0, FRAC_PI_2);
        let f = reduced_wigner(&s, 1, &PhaseSpaceGrid::wide(3.0)).unwrap();
        assert!((f.integral() - 1.0).abs() < 2e-3);
        assert!(f.max_abs() <= 1.0 / PI + 1e-9);
        assert!(f.min() < -1e-3);
    }

    #[test]
    fn reduced_matches_fock_wigner() {
        let s = psi(1, 2.0, FRAC_PI_2);
        let policy = TruncationPolicy::for_state(&s);
        let rho = FockState2::from_superstate(&s, &policy)
            .unwrap()
            .partial_trace(1)
            .unwrap();
        let mut seed = 7u64;
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 10.0 - 5.0
        };
        for _ in 0..25 {
            let (x, p) = (next(), next());
            let k = reduced_wigner_at(&s, 1, x, p).unwrap();
            let f = rho.wigner(x, p) / rho.trace();
            assert!((k - f).abs() < 1e-8, "({x}, {p}): {k} vs {f}");
        }
    }

    #[test]
    fn field_only_two_mode_required() {
        let one = SuperState::new(vec![BasisTerm::field(c(1.0, 0.0), &[c(1.0, 0.0)])]);
        assert!(matches!(
            reduced_wigner(&one, 1, &PhaseSpaceGrid::zoom()),
            Err(Error::Shape(_))
        ));
        let two = SuperState::coherent_product(&[c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(reduced_wigner(&two, 3, &PhaseSpaceGrid::zoom()).is_err());
        assert!(PhaseSpaceGrid::new(1.0, 0.0, 0.0, 1.0, 10, 10).is_err());
        assert!(PhaseSpaceGrid::new(0.0, 1.0, 0.0, 1.0, 1, 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn pure_state_bound(
            a in 0.3f64..2.5, t1 in 0.1f64..3.0, t2 in 0.1f64..3.0, j in 1usize..=8,
            x in -6.0f64..6.0, p in -6.0f64..6.0,
        ) {
            let cfg = ProtocolConfig::new(a, a, t1, t2, 0.0);
            let s = reference_state(MeasurementOutcome::from_index(j).unwrap(), &cfg).unwrap();
            let w = reduced_wigner_at(&s, 1, x, p).unwrap();
            prop_assert!(w.abs() <= 1.0 / PI + 1e-9);
        }
    }
}
