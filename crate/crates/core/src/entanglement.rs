//! Bipartite entanglement of two-mode field states.
//!
//! The analytic path writes the state as a|μ₁⟩|ν₂⟩ + b|ν₁⟩|μ₂⟩ with unit
//! factors, orthonormalizes each factor pair (|0⟩ = |μ⟩,
//! |1⟩ = (|ν⟩ − p|0⟩)/q) and diagonalizes the resulting 2×2 reduced density
//! matrix. The Gram path works for any two-mode superposition: it whitens
//! the coherent components of each mode with their overlap matrix and takes
//! the spectrum of the reduced density operator in that orthonormal basis.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::coherent::{overlap_unchecked, BasisTerm, CoherentLabel, SuperState, NULL_NORM_SQ};
use crate::error::{Error, Result};
use crate::C64;

/// Pairs with q at or below this are collinear (separable limit).
pub const COLLINEAR_TOL: f64 = 1e-9;
/// Gram condition number above which a warning is attached.
pub const GRAM_COND_WARN: f64 = 1e12;
/// Eigenvalues in [−CLAMP_TOL, 0) are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// Distinct coherent labels of each mode and the coefficient matrix
/// C[i][j] of |x_i⟩|y_j⟩.
#[derive(Clone, Debug)]
pub struct ModeMatrix {
    pub labels1: Vec<C64>,
    pub labels2: Vec<C64>,
    pub coeffs: DMatrix<C64>,
}

fn index_of(labels: &mut Vec<C64>, z: C64) -> usize {
    match labels
        .iter()
        .position(|&l| CoherentLabel(l).same_as(CoherentLabel(z)))
    {
        Some(i) => i,
        None => {
            labels.push(z);
            labels.len() - 1
        }
    }
}

impl ModeMatrix {
    pub fn from_state(state: &SuperState) -> Result<Self> {
        if !state.is_field_only() || state.n_modes() != Some(2) {
            return Err(Error::Shape(
                "expected a field-only two-mode state".into(),
            ));
        }
        let s = state.merged();
        let mut labels1 = Vec::new();
        let mut labels2 = Vec::new();
        let mut entries = Vec::with_capacity(s.len());
        for t in &s.terms {
            let i = index_of(&mut labels1, t.fields[0].0);
            let j = index_of(&mut labels2, t.fields[1].0);
            entries.push((i, j, t.coefficient));
        }
        let mut coeffs = DMatrix::zeros(labels1.len(), labels2.len());
        for (i, j, c) in entries {
            coeffs[(i, j)] += c;
        }
        Ok(Self {
            labels1,
            labels2,
            coeffs,
        })
    }

    /// Labels of `mode` (1 or 2).
    pub fn labels(&self, mode: usize) -> &[C64] {
        if mode == 1 {
            &self.labels1
        } else {
            &self.labels2
        }
    }

    /// Coefficient matrix with `mode` as the row index.
    pub fn oriented(&self, mode: usize) -> DMatrix<C64> {
        if mode == 1 {
            self.coeffs.clone()
        } else {
            self.coeffs.transpose()
        }
    }
}

pub fn gram_matrix(labels: &[C64]) -> DMatrix<C64> {
    DMatrix::from_fn(labels.len(), labels.len(), |i, k| {
        overlap_unchecked(labels[i], labels[k])
    })
}

fn single_mode(labels: &[C64], coeffs: &[C64]) -> SuperState {
    SuperState::new(
        labels
            .iter()
            .zip(coeffs)
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(&l, &c)| BasisTerm::field(c, &[l]))
            .collect(),
    )
}

/// Unit-normalizes the factor and rotates it so its first nonzero
/// coefficient is real positive. Returns the factor and the scalar taken out.
fn unit_factor(labels: &[C64], coeffs: &[C64]) -> Result<(SuperState, C64)> {
    let raw = single_mode(labels, coeffs);
    let n2 = raw.norm_sqr();
    if !(n2 > NULL_NORM_SQ) {
        return Err(Error::DegenerateState { norm_sq: n2 });
    }
    let lead = raw.terms[0].coefficient;
    let phase = lead / lead.norm();
    let scale = phase * n2.sqrt();
    let mut unit = raw.scaled(C64::new(1.0, 0.0) / scale);
    unit.is_normalized = true;
    Ok((unit, scale))
}

#[derive(Clone, Debug)]
pub struct BipartiteDecomposition {
    pub mu1: SuperState,
    pub nu1: SuperState,
    pub mu2: SuperState,
    pub nu2: SuperState,
    pub coeff_a: C64,
    pub coeff_b: C64,
    pub p1: C64,
    pub p2: C64,
    pub q1: f64,
    pub q2: f64,
    pub collinear1: bool,
    pub collinear2: bool,
}

impl BipartiteDecomposition {
    fn assemble(
        a: C64,
        (mu1, nu2): (SuperState, SuperState),
        b: C64,
        (nu1, mu2): (SuperState, SuperState),
    ) -> Result<Self> {
        let (p1, q1, collinear1) = orthonormalize_pair(&mu1, &nu1)?;
        let (p2, q2, collinear2) = orthonormalize_pair(&mu2, &nu2)?;
        Ok(Self {
            mu1,
            nu1,
            mu2,
            nu2,
            coeff_a: a,
            coeff_b: b,
            p1,
            p2,
            q1,
            q2,
            collinear1,
            collinear2,
        })
    }

    /// a|μ₁⟩|ν₂⟩ + b|ν₁⟩|μ₂⟩ as a two-mode superposition.
    pub fn reassemble(&self) -> SuperState {
        let mut terms = Vec::new();
        let mut block = |c: C64, m1: &SuperState, m2: &SuperState| {
            for t1 in &m1.terms {
                for t2 in &m2.terms {
                    terms.push(BasisTerm::field(
                        c * t1.coefficient * t2.coefficient,
                        &[t1.fields[0].0, t2.fields[0].0],
                    ));
                }
            }
        };
        block(self.coeff_a, &self.mu1, &self.nu2);
        block(self.coeff_b, &self.nu1, &self.mu2);
        SuperState::new(terms).merged()
    }

    pub fn is_product(&self) -> bool {
        self.coeff_b.norm() <= CLAMP_TOL || self.collinear1 || self.collinear2
    }
}

/// p = ⟨μ|ν⟩, q = √(1 − |p|²), and the collinearity flag (q ≤ 1e−9).
pub fn orthonormalize_pair(mu: &SuperState, nu: &SuperState) -> Result<(C64, f64, bool)> {
    for (name, s) in [("mu", mu), ("nu", nu)] {
        let n2 = s.norm_sqr();
        if (n2 - 1.0).abs() > 1e-10 {
            return Err(Error::Contract(format!(
                "{name} is not unit-normalized (norm² = {n2})"
            )));
        }
    }
    let p = crate::coherent::inner_product(mu, nu)?;
    // residual ν − pμ after merging, so identical labels cancel exactly
    let mut terms = nu.terms.clone();
    terms.extend(mu.scaled(-p).terms);
    let q = SuperState::new(terms).merged().norm_sqr().max(0.0).sqrt();
    Ok((p, q, q <= COLLINEAR_TOL))
}

fn rank1_factors(m: &DMatrix<C64>) -> Option<(Vec<C64>, Vec<C64>)> {
    let (mut pi, mut pj, mut best) = (0, 0, 0.0);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if m[(i, j)].norm() > best {
                best = m[(i, j)].norm();
                pi = i;
                pj = j;
            }
        }
    }
    if best == 0.0 {
        return None;
    }
    let u: Vec<C64> = (0..m.nrows()).map(|i| m[(i, pj)]).collect();
    let v: Vec<C64> = (0..m.ncols()).map(|j| m[(pi, j)] / m[(pi, pj)]).collect();
    let ok = (0..m.nrows())
        .all(|i| (0..m.ncols()).all(|j| (m[(i, j)] - u[i] * v[j]).norm() <= 1e-10 * best));
    ok.then_some((u, v))
}

fn components(m: &DMatrix<C64>) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (r, c) = m.shape();
    let mut parent: Vec<usize> = (0..r + c).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut x = x;
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..r {
        for j in 0..c {
            if m[(i, j)].norm() > 0.0 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, r + j));
                parent[a] = b;
            }
        }
    }
    let mut roots: Vec<usize> = Vec::new();
    let mut out: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for x in 0..r + c {
        let root = find(&mut parent, x);
        let k = match roots.iter().position(|&q| q == root) {
            Some(k) => k,
            None => {
                roots.push(root);
                out.push((Vec::new(), Vec::new()));
                roots.len() - 1
            }
        };
        if x < r {
            out[k].0.push(x);
        } else {
            out[k].1.push(x - r);
        }
    }
    out.retain(|(rows, cols)| !rows.is_empty() && !cols.is_empty());
    out
}

fn block_factor(
    mm: &ModeMatrix,
    rows: &[usize],
    cols: &[usize],
    u: &[C64],
    v: &[C64],
) -> Result<(C64, SuperState, SuperState)> {
    let l1: Vec<C64> = rows.iter().map(|&i| mm.labels1[i]).collect();
    let l2: Vec<C64> = cols.iter().map(|&j| mm.labels2[j]).collect();
    let (f1, s1) = unit_factor(&l1, u)?;
    let (f2, s2) = unit_factor(&l2, v)?;
    Ok((s1 * s2, f1, f2))
}

/// Splits a two-mode field state into two product blocks.
///
/// Disconnected label blocks are used directly (block A holds the first
/// term). Otherwise the coefficient matrix is split by SVD, which succeeds
/// whenever its rank is at most two. A rank-one state comes back with
/// `coeff_b = 0` and ν = μ.
pub fn decompose(state: &SuperState) -> Result<BipartiteDecomposition> {
    let mm = ModeMatrix::from_state(state)?;
    let c = &mm.coeffs;
    if c.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::DegenerateState { norm_sq: 0.0 });
    }

    let comps = components(c);
    if comps.len() == 2 {
        let sub = |(rows, cols): &(Vec<usize>, Vec<usize>)| {
            DMatrix::from_fn(rows.len(), cols.len(), |i, j| c[(rows[i], cols[j])])
        };
        if let (Some((ua, va)), Some((ub, vb))) =
            (rank1_factors(&sub(&comps[0])), rank1_factors(&sub(&comps[1])))
        {
            let (a, mu1, nu2) = block_factor(&mm, &comps[0].0, &comps[0].1, &ua, &va)?;
            let (b, nu1, mu2) = block_factor(&mm, &comps[1].0, &comps[1].1, &ub, &vb)?;
            return BipartiteDecomposition::assemble(a, (mu1, nu2), b, (nu1, mu2));
        }
    }

    let svd = c.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let smax = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-12 * smax)
        .count();
    let all1: Vec<usize> = (0..c.nrows()).collect();
    let all2: Vec<usize> = (0..c.ncols()).collect();
    // C = Σ s_k u_k v_kᵀ with v_kᵀ the k-th row of Vᴴ
    let dyad = |k: usize| -> Result<(C64, SuperState, SuperState)> {
        let uk: Vec<C64> = u.column(k).iter().map(|&z| z * svd.singular_values[k]).collect();
        let vk: Vec<C64> = vt.row(k).iter().copied().collect();
        block_factor(&mm, &all1, &all2, &uk, &vk)
    };
    match rank {
        1 => {
            let (a, mu1, nu2) = dyad(0)?;
            BipartiteDecomposition::assemble(a, (mu1.clone(), nu2.clone()), C64::new(0.0, 0.0), (mu1, nu2))
        }
        2 => {
            let (a, mu1, nu2) = dyad(0)?;
            let (b, nu1, mu2) = dyad(1)?;
            BipartiteDecomposition::assemble(a, (mu1, nu2), b, (nu1, mu2))
        }
        r => Err(Error::Structure(format!(
            "coefficient matrix has rank {r}; not a sum of two products"
        ))),
    }
}

/// A 2×2 reduced density matrix in an orthonormalized factor basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReducedDensity2 {
    pub entries: [[C64; 2]; 2],
}

impl ReducedDensity2 {
    pub fn trace(&self) -> f64 {
        (self.entries[0][0] + self.entries[1][1]).re
    }

    pub fn det(&self) -> f64 {
        let e = &self.entries;
        (e[0][0] * e[1][1] - e[0][1] * e[1][0]).re
    }

    pub fn hermiticity_residue(&self) -> f64 {
        let e = &self.entries;
        let mut r: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                r = r.max((e[i][j] - e[j][i].conj()).norm());
            }
        }
        r
    }
}

/// Amplitudes of the state in the orthonormalized product basis:
/// rows index mode 1 ({μ̂₁, ν̂₁⊥}), columns mode 2 ({μ̂₂, ν̂₂⊥}).
pub fn orthogonal_amplitudes(dec: &BipartiteDecomposition) -> [[C64; 2]; 2] {
    let (a, b) = (dec.coeff_a, dec.coeff_b);
    let z = C64::new(0.0, 0.0);
    [
        [a * dec.p2 + b * dec.p1, a * dec.q2],
        [b * dec.q1, z],
    ]
}

fn rho_from(m: [[C64; 2]; 2]) -> ReducedDensity2 {
    let mut e = [[C64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for k in 0..2 {
            e[i][k] = (0..2).map(|j| m[i][j] * m[k][j].conj()).sum();
        }
    }
    ReducedDensity2 { entries: e }
}

/// ρ₁ = Tr₂ |ψ⟩⟨ψ| in the basis {μ̂₁, (ν̂₁ − p₁μ̂₁)/q₁}.
pub fn reduced_density(dec: &BipartiteDecomposition) -> ReducedDensity2 {
    rho_from(orthogonal_amplitudes(dec))
}

/// ρ₂ in the basis {μ̂₂, (ν̂₂ − p₂μ̂₂)/q₂}.
pub fn reduced_density_mode2(dec: &BipartiteDecomposition) -> ReducedDensity2 {
    let m = orthogonal_amplitudes(dec);
    rho_from([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
}

/// λ± = ½[1 ± √(1 − 4 det ρ)], returned as (λ₊, λ₋).
pub fn eigenvalues_2x2(rho: &ReducedDensity2) -> Result<(f64, f64)> {
    let tr = rho.trace();
    let det = rho.det() / (tr * tr);
    let disc = 1.0 - 4.0 * det;
    if disc < -CLAMP_TOL {
        return Err(Error::NumericalConsistency(format!(
            "1 − 4 det ρ = {disc:e} is negative"
        )));
    }
    let root = disc.max(0.0).sqrt();
    let plus = 0.5 * (1.0 + root);
    Ok((plus, 1.0 - plus))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LogBase {
    Two,
    E,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntropyResult {
    pub entropy: f64,
    /// Nonzero spectrum, descending.
    pub eigenvalues: Vec<f64>,
    pub warning: Option<String>,
}

pub fn entropy_with_base(eigs: &[f64], base: LogBase) -> EntropyResult {
    let mut eigenvalues: Vec<f64> = eigs
        .iter()
        .map(|&l| if (-CLAMP_TOL..0.0).contains(&l) { 0.0 } else { l })
        .filter(|&l| l > 0.0)
        .collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    let nats: f64 = eigenvalues.iter().map(|&l| -l * l.ln()).sum();
    let entropy = match base {
        LogBase::Two => nats / std::f64::consts::LN_2,
        LogBase::E => nats,
    };
    EntropyResult {
        entropy: entropy.max(0.0),
        eigenvalues,
        warning: None,
    }
}

/// Base-2 von Neumann entropy of a two-level spectrum.
pub fn entropy(eigs: (f64, f64)) -> EntropyResult {
    entropy_with_base(&[eigs.0, eigs.1], LogBase::Two)
}

/// Entropy through the block decomposition and the 2×2 reduced matrix.
pub fn entropy_analytic(state: &SuperState) -> Result<EntropyResult> {
    let dec = decompose(state)?;
    let rho = reduced_density(&dec);
    Ok(entropy(eigenvalues_2x2(&rho)?))
}

/// Reduced spectrum of `mode` from the whitened coefficient matrix.
pub fn gram_spectrum(state: &SuperState, mode: usize) -> Result<(Vec<f64>, f64)> {
    if mode != 1 && mode != 2 {
        return Err(Error::Domain(format!("mode {mode} is not 1 or 2")));
    }
    let mm = ModeMatrix::from_state(state)?;
    let other = 3 - mode;
    let (b_self, cond_self) = whitener(mm.labels(mode));
    let (b_other, cond_other) = whitener(mm.labels(other));
    let psi = &b_self * mm.oriented(mode) * b_other.transpose();
    let rho = &psi * psi.adjoint();
    let tr = rho.trace().re;
    if !(tr > NULL_NORM_SQ) {
        return Err(Error::DegenerateState { norm_sq: tr });
    }
    let rho = rho / C64::new(tr, 0.0);
    let eig = SymmetricEigen::new(rho);
    Ok((
        eig.eigenvalues.iter().copied().collect(),
        cond_self.max(cond_other),
    ))
}

/// B = D^{1/2} Vᴴ with G = V D Vᴴ, so that BᴴB = G. Rows for numerically
/// null directions are dropped. Also returns the condition number of G.
fn whitener(labels: &[C64]) -> (DMatrix<C64>, f64) {
    let g = gram_matrix(labels);
    let eig = SymmetricEigen::new(g);
    let dmax = eig.eigenvalues.max();
    let keep: Vec<usize> = (0..labels.len())
        .filter(|&k| eig.eigenvalues[k] > 1e-14 * dmax)
        .collect();
    let dmin = keep
        .iter()
        .map(|&k| eig.eigenvalues[k])
        .fold(f64::INFINITY, f64::min);
    let raw_min = eig.eigenvalues.min();
    let b = DMatrix::from_fn(keep.len(), labels.len(), |r, i| {
        let k = keep[r];
        eig.eigenvectors[(i, k)].conj() * eig.eigenvalues[k].sqrt()
    });
    let cond = if raw_min > 0.0 { dmax / raw_min } else { dmax / dmin.max(f64::MIN_POSITIVE) };
    (b, cond.max(1.0))
}

/// General reduced-spectrum entropy; any number of components per mode.
pub fn entropy_gram(state: &SuperState, mode: usize) -> Result<EntropyResult> {
    let (eigs, cond) = gram_spectrum(state, mode)?;
    let mut out = entropy_with_base(&eigs, LogBase::Two);
    if cond > GRAM_COND_WARN {
        out.warning = Some(format!("Gram matrix ill-conditioned (condition {cond:.3e})"));
    }
    Ok(out)
}

/// Analytic path when the state decomposes, Gram path otherwise.
pub fn state_entropy(state: &SuperState) -> Result<EntropyResult> {
    match entropy_analytic(state) {
        Err(Error::Structure(_)) => entropy_gram(state, 1),
        other => other,
    }
}

/// Closed-form eigenvalues (λ₁, λ₂) of the non-maximally entangled states at
/// θ = π/2 with equal amplitudes:
/// λ₁ = (1−e^{−α²})²/(2(1+e^{−2α²})), λ₂ = (1+e^{−α²})²/(2(1+e^{−2α²})).
pub fn quarter_turn_lambdas(alpha: f64) -> (f64, f64) {
    let x = (-alpha * alpha).exp();
    let d = 2.0 * (1.0 + x * x);
    ((1.0 - x).powi(2) / d, (1.0 + x).powi(2) / d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::fidelity;
    use crate::protocol::{reference_state, MeasurementOutcome, ProtocolConfig};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn psi(j: usize, alpha: f64, theta: f64) -> SuperState {
        let cfg = ProtocolConfig::symmetric(alpha, theta, 0.0);
        reference_state(MeasurementOutcome::from_index(j).unwrap(), &cfg).unwrap()
    }

    fn cat(alpha: C64, sign: C64) -> SuperState {
        SuperState::new(vec![
            BasisTerm::field(c(1.0, 0.0), &[alpha]),
            BasisTerm::field(sign, &[-alpha]),
        ])
        .normalized()
        .unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy((0.5, 0.5)).entropy - 1.0).abs() < 1e-15);
        assert_eq!(entropy((1.0, 0.0)).entropy, 0.0);
        let (l1, l2) = quarter_turn_lambdas(1.0);
        assert!((l1 - 0.17597286316805727).abs() < 1e-12);
        assert!((l1 + l2 - 1.0).abs() < 1e-15);
        assert!((entropy((l1, l2)).entropy - 0.671_187_446_125_224_5).abs() < 1e-12);
        let nats = entropy_with_base(&[0.5, 0.5], LogBase::E).entropy;
        assert!((nats - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn eigenvalue_examples() {
        let half = ReducedDensity2 {
            entries: [[c(0.5, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.5, 0.0)]],
        };
        assert_eq!(eigenvalues_2x2(&half).unwrap(), (0.5, 0.5));
        let pure = ReducedDensity2 {
            entries: [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]],
        };
        assert_eq!(eigenvalues_2x2(&pure).unwrap(), (1.0, 0.0));
        let bad = ReducedDensity2 {
            entries: [[c(0.5, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.5, 0.0)]],
        };
        assert!(matches!(eigenvalues_2x2(&bad), Err(Error::NumericalConsistency(_))));
    }

    #[test]
    fn orthonormalize_examples() {
        let a = cat(c(1.0, 0.0), c(1.0, 0.0));
        let (p, q, col) = orthonormalize_pair(&a, &a).unwrap();
        assert!((p - 1.0).norm() < 1e-12 && q < 1e-6 && col);

        let even = cat(c(1.5, 0.0), c(1.0, 0.0));
        let odd = cat(c(1.5, 0.0), c(-1.0, 0.0));
        let (p, q, col) = orthonormalize_pair(&even, &odd).unwrap();
        assert!(p.norm() < 1e-14 && (q - 1.0).abs() < 1e-14 && !col);

        let raw = SuperState::new(vec![BasisTerm::field(c(2.0, 0.0), &[c(1.0, 0.0)])]);
        assert!(matches!(orthonormalize_pair(&raw, &a), Err(Error::Contract(_))));
    }

    #[test]
    fn decompose_psi1_quarter_turn() {
        let alpha = 1.3;
        let s = psi(1, alpha, FRAC_PI_2);
        let dec = decompose(&s).unwrap();
        // horizontal (±α) and vertical (±iα) cats of mode 1
        for t in &dec.mu1.terms {
            assert!(t.fields[0].0.im.abs() < 1e-12);
        }
        for t in &dec.nu1.terms {
            assert!(t.fields[0].0.re.abs() < 1e-12);
        }
        assert!((dec.p1 - dec.p2).norm() < 1e-12);
        assert!((dec.q1 - dec.q2).abs() < 1e-12);
        let back = dec.reassemble();
        assert!((fidelity(&back, &s).unwrap() - 1.0).abs() < 1e-10);
        assert!((back.norm_sqr() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn decompose_product_state() {
        let s = psi(3, 1.0, 0.0);
        let dec = decompose(&s).unwrap();
        assert!(dec.is_product());
        let rho = reduced_density(&dec);
        assert!(rho.det().abs() < 1e-12);
        assert!(entropy_analytic(&s).unwrap().entropy < 1e-8);
    }

    #[test]
    fn rank_three_is_structure_error() {
        let s = SuperState::new(vec![
            BasisTerm::field(c(1.0, 0.0), &[c(1.0, 0.0), c(1.0, 0.0)]),
            BasisTerm::field(c(1.0, 0.0), &[c(-1.0, 0.0), c(-1.0, 0.0)]),
            BasisTerm::field(c(1.0, 0.0), &[c(0.0, 1.0), c(0.0, 1.0)]),
        ])
        .normalized()
        .unwrap();
        assert!(matches!(decompose(&s), Err(Error::Structure(_))));
        let e = state_entropy(&s).unwrap();
        assert_eq!(e.eigenvalues.len(), 3);
    }

    #[test]
    fn reduced_density_is_physical() {
        let cfg = ProtocolConfig::new(1.1, 0.7, 0.6, 1.2, 0.0);
        for o in MeasurementOutcome::all() {
            let s = reference_state(o, &cfg).unwrap();
            let dec = decompose(&s).unwrap();
            for rho in [reduced_density(&dec), reduced_density_mode2(&dec)] {
                assert!(rho.hermiticity_residue() < 1e-12);
                assert!((rho.trace() - 1.0).abs() < 1e-12);
                assert!(rho.det() >= -1e-12 && rho.det() <= 0.25 + 1e-12);
            }
            let det = reduced_density(&dec).det();
            let expect = (dec.coeff_a * dec.coeff_b).norm_sqr() * (dec.q1 * dec.q2).powi(2);
            assert!((det - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_matches_gram() {
        let cfg = ProtocolConfig::new(0.9, 1.6, 0.7, 0.4, 0.0);
        for o in MeasurementOutcome::all() {
            let s = reference_state(o, &cfg).unwrap();
            let (lp, lm) = eigenvalues_2x2(&reduced_density(&decompose(&s).unwrap())).unwrap();
            let g = entropy_gram(&s, 1).unwrap();
            assert!((g.eigenvalues[0] - lp).abs() < 1e-10, "{o}");
            assert!((g.eigenvalues.get(1).copied().unwrap_or(0.0) - lm).abs() < 1e-10);
            let a = entropy((lp, lm)).entropy;
            assert!((a - g.entropy).abs() < 1e-8);
            assert!((entropy_gram(&s, 2).unwrap().entropy - g.entropy).abs() < 1e-8);
        }
    }

    #[test]
    fn gram_examples() {
        let product = SuperState::new(vec![BasisTerm::field(c(1.0, 0.0), &[c(1.0, 0.5), c(-2.0, 0.0)])]);
        assert!(entropy_gram(&product, 1).unwrap().entropy.abs() < 1e-12);

        // even/odd cats are exactly orthogonal
        let e1 = cat(c(2.0, 0.0), c(1.0, 0.0));
        let o1 = cat(c(2.0, 0.0), c(-1.0, 0.0));
        let mut terms = Vec::new();
        for (x, y) in [(&e1, &e1), (&o1, &o1)] {
            for t1 in &x.terms {
                for t2 in &y.terms {
                    terms.push(BasisTerm::field(
                        t1.coefficient * t2.coefficient,
                        &[t1.fields[0].0, t2.fields[0].0],
                    ));
                }
            }
        }
        let bell = SuperState::new(terms).normalized().unwrap();
        assert!((entropy_gram(&bell, 1).unwrap().entropy - 1.0).abs() < 1e-10);

        let e = entropy_gram(&psi(1, 3.0, FRAC_PI_2), 1).unwrap();
        assert!((e.entropy - 1.0).abs() < 1e-8);
        assert!(e.warning.is_none());
    }

    #[test]
    fn product_at_even_multiples_of_pi() {
        for theta in [0.0, 2.0 * PI] {
            let cfg = ProtocolConfig::symmetric(1.5, theta, 0.0);
            for o in MeasurementOutcome::all() {
                if let Ok(s) = reference_state(o, &cfg) {
                    assert!(state_entropy(&s).unwrap().entropy < 1e-8, "{o} at {theta}");
                }
            }
        }
    }

    #[test]
    fn half_turn_acts_as_parity() {
        // e^{iπn} maps |α⟩ to |−α⟩, so the surviving outcomes carry
        // |α,−α⟩ ∓ |−α,α⟩ rather than a product
        let cfg = ProtocolConfig::symmetric(1.5, PI, 0.0);
        let mut seen = 0;
        for o in MeasurementOutcome::all() {
            if let Ok(s) = reference_state(o, &cfg) {
                let e = state_entropy(&s).unwrap().entropy;
                assert!(e > 0.9, "{o}: {e}");
                seen += 1;
            }
        }
        assert_eq!(seen, 2);
    }

    #[test]
    fn ill_conditioned_gram_warns() {
        let s = SuperState::new(vec![
            BasisTerm::field(c(1.0, 0.0), &[c(0.1, 0.0), c(0.1, 0.0)]),
            BasisTerm::field(c(-1.0, 0.0), &[c(0.1, 1e-7), c(0.1, 1e-7)]),
        ])
        .normalized()
        .unwrap();
        assert!(entropy_gram(&s, 1).unwrap().warning.is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn entropy_bounds_and_symmetry(
            a1 in 0.3f64..2.5, a2 in 0.3f64..2.5,
            t1 in 0.1f64..3.0, t2 in 0.1f64..3.0,
            j in 1usize..=8,
        ) {
            let cfg = ProtocolConfig::new(a1, a2, t1, t2, 0.0);
            let s = reference_state(MeasurementOutcome::from_index(j).unwrap(), &cfg).unwrap();
            let g1 = entropy_gram(&s, 1).unwrap();
            let g2 = entropy_gram(&s, 2).unwrap();
            prop_assert!(g1.entropy >= -1e-12 && g1.entropy <= 1.0 + 1e-12);
            prop_assert!((g1.entropy - g2.entropy).abs() < 1e-8);
            prop_assert!((g1.eigenvalues.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            let dec = decompose(&s).unwrap();
            prop_assert!((fidelity(&dec.reassemble(), &s).unwrap() - 1.0).abs() < 1e-10);
            let (lp, lm) = eigenvalues_2x2(&reduced_density(&dec)).unwrap();
            prop_assert!(lp >= lm && lm >= 0.0);
            prop_assert!((lp + lm - 1.0).abs() < 1e-15);
            prop_assert!((entropy((lp, lm)).entropy - g1.entropy).abs() < 1e-8);
        }
    }
}
