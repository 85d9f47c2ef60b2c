//! Truncated number-basis backend used to cross-check the coherent-state
//! algebra, the entropy paths and the Wigner kernels.
//!
//! n_max = ⌈|α|²_max + 8|α|_max + 10⌉ keeps the Poisson tail below 1e−12 up
//! to |α| = 4 (n_max = 58). Coefficients ⟨n|α⟩ are built in log space.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::coherent::{AtomLabel, BasisTerm, Level, SuperState};
use crate::entanglement::{entropy_with_base, EntropyResult, LogBase};
use crate::error::{Error, Result};
use crate::protocol::apply_dispersive;
use crate::C64;

pub const TAIL_BOUND: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TruncationPolicy {
    pub n_max: usize,
}

impl TruncationPolicy {
    pub fn for_amplitude(abs_alpha_max: f64) -> Self {
        let a = abs_alpha_max;
        Self {
            n_max: (a * a + 8.0 * a + 10.0).ceil() as usize,
        }
    }

    /// Policy covering every coherent label in the state.
    pub fn for_state(state: &SuperState) -> Self {
        let a = state
            .terms
            .iter()
            .flat_map(|t| t.fields.iter().map(|f| f.0.norm()))
            .fold(0.0, f64::max);
        Self::for_amplitude(a)
    }

    pub fn dim(&self) -> usize {
        self.n_max + 1
    }
}

fn tail_mass(alpha: C64, n_max: usize) -> f64 {
    // Σ_{n>n_max} Poisson(|α|²), summed in log space until negligible
    let x = alpha.norm_sqr();
    if x == 0.0 {
        return 0.0;
    }
    let ln_x = x.ln();
    let mut ln_term = -x + (n_max as f64 + 1.0) * ln_x - ln_factorial(n_max + 1);
    let mut sum = 0.0;
    let mut n = n_max + 1;
    loop {
        let term = ln_term.exp();
        sum += term;
        if term < 1e-300 || (term < sum * 1e-17 && n as f64 > x) {
            break;
        }
        n += 1;
        ln_term += ln_x - (n as f64).ln();
    }
    sum
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// ⟨n|α⟩ for n = 0..=n_max.
pub fn coherent_to_fock(alpha: C64, policy: &TruncationPolicy) -> Result<DVector<C64>> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::Domain(format!("alpha = {alpha}")));
    }
    let tail = tail_mass(alpha, policy.n_max);
    if tail > TAIL_BOUND {
        return Err(Error::Truncation {
            tail,
            n_max: policy.n_max,
        });
    }
    let r = alpha.norm();
    let phase = alpha.arg();
    let mut v = DVector::zeros(policy.dim());
    if r == 0.0 {
        v[0] = C64::new(1.0, 0.0);
        return Ok(v);
    }
    let ln_r = r.ln();
    let mut ln_mag = -0.5 * r * r;
    for n in 0..policy.dim() {
        if n > 0 {
            ln_mag += ln_r - 0.5 * (n as f64).ln();
        }
        v[n] = C64::from_polar(ln_mag.exp(), n as f64 * phase);
    }
    Ok(v)
}

/// Single-mode field state as a number-basis vector.
pub fn single_mode_to_fock(state: &SuperState, policy: &TruncationPolicy) -> Result<DVector<C64>> {
    if !state.is_field_only() || state.n_modes() != Some(1) {
        return Err(Error::Shape("expected a field-only one-mode state".into()));
    }
    let mut v = DVector::zeros(policy.dim());
    for t in &state.terms {
        v += coherent_to_fock(t.fields[0].0, policy)? * t.coefficient;
    }
    Ok(v)
}

/// Two-mode pure state Ψ[n₁, n₂].
#[derive(Clone, Debug)]
pub struct FockState2 {
    pub psi: DMatrix<C64>,
}

impl FockState2 {
    pub fn from_superstate(state: &SuperState, policy: &TruncationPolicy) -> Result<Self> {
        if !state.is_field_only() || state.n_modes() != Some(2) {
            return Err(Error::Shape("expected a field-only two-mode state".into()));
        }
        let d = policy.dim();
        let mut psi = DMatrix::zeros(d, d);
        for t in &state.terms {
            let v1 = coherent_to_fock(t.fields[0].0, policy)?;
            let v2 = coherent_to_fock(t.fields[1].0, policy)?;
            psi += (v1 * v2.transpose()) * t.coefficient;
        }
        Ok(Self { psi })
    }

    pub fn inner_product(&self, other: &Self) -> C64 {
        self.psi
            .iter()
            .zip(other.psi.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Coefficients flattened mode-1-major.
    pub fn flattened(&self) -> Vec<C64> {
        self.psi.transpose().iter().copied().collect()
    }

    /// Reduced density of `mode` (1 or 2).
    pub fn partial_trace(&self, mode: usize) -> Result<FockDensity> {
        let m = match mode {
            1 => &self.psi * self.psi.adjoint(),
            2 => self.psi.transpose() * self.psi.map(|z| z.conj()),
            _ => return Err(Error::Domain(format!("mode {mode} is not 1 or 2"))),
        };
        Ok(FockDensity { matrix: m })
    }
}

#[derive(Clone, Debug)]
pub struct FockDensity {
    pub matrix: DMatrix<C64>,
}

impl FockDensity {
    pub fn pure(v: &DVector<C64>) -> Self {
        Self {
            matrix: v * v.adjoint(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Spectrum of the unit-trace normalized matrix, descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = &self.matrix / C64::new(self.trace(), 0.0);
        let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        e.sort_by(|a, b| b.total_cmp(a));
        e
    }

    pub fn entropy(&self) -> EntropyResult {
        entropy_with_base(&self.eigenvalues(), LogBase::Two)
    }

    /// W(x, p) = (1/π) Σ ρ_nm (−1)ⁿ ⟨m|D(2β)|n⟩, β = (x + ip)/√2.
    pub fn wigner(&self, x: f64, p: f64) -> f64 {
        let d = self.matrix.nrows();
        let gamma = C64::new(x, p) * std::f64::consts::SQRT_2;
        let disp = displacement_matrix(gamma, d);
        let mut acc = C64::new(0.0, 0.0);
        for n in 0..d {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let mut row = C64::new(0.0, 0.0);
            for m in 0..d {
                row += self.matrix[(n, m)] * disp[(m, n)];
            }
            acc += row * sign;
        }
        acc.re / std::f64::consts::PI
    }

    /// ⟨x|ρ|x⟩ for the quadrature x = (a + a†)/√2.
    pub fn position_density(&self, x: f64) -> f64 {
        let h = hermite_functions(x, self.matrix.nrows());
        let mut acc = C64::new(0.0, 0.0);
        for n in 0..h.len() {
            for m in 0..h.len() {
                acc += self.matrix[(n, m)] * h[n] * h[m];
            }
        }
        acc.re
    }
}

/// ⟨m|D(γ)|n⟩ for m, n < dim via associated Laguerre polynomials:
/// for m ≥ n, √(n!/m!) γ^{m−n} e^{−|γ|²/2} L_n^{(m−n)}(|γ|²), and the
/// same with (−γ*)^{m−n} above the diagonal. The magnitude prefactor is
/// assembled in log space.
pub fn displacement_matrix(gamma: C64, dim: usize) -> DMatrix<C64> {
    let mut d = DMatrix::zeros(dim, dim);
    let x = gamma.norm_sqr();
    if x == 0.0 {
        for n in 0..dim {
            d[(n, n)] = C64::new(1.0, 0.0);
        }
        return d;
    }
    let mut ln_fact = vec![0.0f64; dim + 1];
    for j in 1..=dim {
        ln_fact[j] = ln_fact[j - 1] + (j as f64).ln();
    }
    let (r, phase) = (gamma.norm(), gamma.arg());
    let mut lag = vec![0.0f64; dim];
    for k in 0..dim {
        let kf = k as f64;
        let len = dim - k;
        lag[0] = 1.0;
        if len > 1 {
            lag[1] = 1.0 + kf - x;
        }
        for j in 1..len.saturating_sub(1) {
            let jf = j as f64;
            lag[j + 1] = ((2.0 * jf + 1.0 + kf - x) * lag[j] - (jf + kf) * lag[j - 1]) / (jf + 1.0);
        }
        for n in 0..len {
            let m = n + k;
            let ln_mag = 0.5 * (ln_fact[n] - ln_fact[m]) + kf * r.ln() - 0.5 * x;
            let mag = ln_mag.exp() * lag[n];
            // ⟨m|D|n⟩ carries γ^k, ⟨n|D|m⟩ carries (−γ*)^k
            d[(m, n)] = C64::from_polar(mag, kf * phase);
            if k > 0 {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                d[(n, m)] = C64::from_polar(sign * mag, -kf * phase);
            }
        }
    }
    d
}

/// Normalized Hermite functions ψ₀…ψ_{dim−1} at x.
pub fn hermite_functions(x: f64, dim: usize) -> Vec<f64> {
    let mut h = vec![0.0; dim];
    h[0] = std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp();
    if dim > 1 {
        h[1] = std::f64::consts::SQRT_2 * x * h[0];
    }
    for n in 1..dim.saturating_sub(1) {
        let nf = n as f64;
        h[n + 1] = (2.0 / (nf + 1.0)).sqrt() * x * h[n] - (nf / (nf + 1.0)).sqrt() * h[n - 1];
    }
    h
}

/// exp(−iθ(σ₊σ₋ + n σ₃)) applied to |level⟩|α⟩ in the number basis:
/// phases e^{+iθn} (g), e^{−iθ(1+n)} (e), 1 (f).
pub fn dispersive_fock(
    theta: f64,
    alpha: C64,
    level: Level,
    policy: &TruncationPolicy,
) -> Result<DVector<C64>> {
    let mut v = coherent_to_fock(alpha, policy)?;
    for (n, c) in v.iter_mut().enumerate() {
        let energy = match level {
            Level::G => -(n as f64),
            Level::E => 1.0 + n as f64,
            Level::F => 0.0,
        };
        *c *= C64::from_polar(1.0, -theta * energy);
    }
    Ok(v)
}

/// Max deviation between the number-basis exponential and the coherent-label
/// rule used by the protocol.
pub fn dispersive_exponential_check(theta: f64, alpha: C64, level: AtomLabel) -> Result<f64> {
    let policy = TruncationPolicy::for_amplitude(alpha.norm());
    let expected = dispersive_fock(theta, alpha, level.level, &policy)?;
    let s = SuperState::new(vec![BasisTerm::new(
        C64::new(1.0, 0.0),
        vec![level],
        vec![crate::coherent::CoherentLabel(alpha)],
    )]);
    let evolved = apply_dispersive(&s, level.atom_index, 1, theta)?;
    let mut got = DVector::zeros(policy.dim());
    for t in &evolved.terms {
        got += coherent_to_fock(t.fields[0].0, &policy)? * t.coefficient;
    }
    Ok((got - expected).iter().map(|z| z.norm()).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coherent::{coherent_overlap, inner_product};
    use crate::entanglement::{entropy_gram, quarter_turn_lambdas};
    use crate::protocol::{reference_state, MeasurementOutcome, ProtocolConfig};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn policy_values() {
        assert_eq!(TruncationPolicy::for_amplitude(3.0).n_max, 43);
        assert_eq!(TruncationPolicy::for_amplitude(4.0).n_max, 58);
    }

    #[test]
    fn coherent_vectors() {
        let p = TruncationPolicy::for_amplitude(3.0);
        let v0 = coherent_to_fock(c(0.0, 0.0), &p).unwrap();
        assert_eq!(v0[0], c(1.0, 0.0));
        assert!(v0.iter().skip(1).all(|z| *z == c(0.0, 0.0)));
        let v = coherent_to_fock(c(3.0, 0.0), &p).unwrap();
        assert!((v.norm_squared() - 1.0).abs() < 1e-12);
        assert!(v[p.n_max].norm_sqr() < TAIL_BOUND);

        let small = TruncationPolicy { n_max: 10 };
        assert!(matches!(
            coherent_to_fock(c(3.0, 0.0), &small),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn overlaps_match_coherent_algebra() {
        let p = TruncationPolicy::for_amplitude(4.0);
        let pts = [c(0.0, 0.0), c(1.0, 0.5), c(-2.0, 1.0), c(0.0, -4.0), c(2.8, 2.8)];
        for &a in &pts {
            for &b in &pts {
                if a.norm() > 4.0 || b.norm() > 4.0 {
                    continue;
                }
                let va = coherent_to_fock(a, &p).unwrap();
                let vb = coherent_to_fock(b, &p).unwrap();
                let f = va.dotc(&vb);
                assert!((f - coherent_overlap(a, b).unwrap()).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn two_mode_inner_products() {
        let cat = SuperState::new(vec![
            BasisTerm::field(c(1.0, 0.0), &[c(2.0, 0.0), c(1.0, 0.0)]),
            BasisTerm::field(c(1.0, 0.0), &[c(-2.0, 0.0), c(1.0, 0.0)]),
        ]);
        let product = SuperState::coherent_product(&[c(0.5, 1.0), c(-1.0, 0.0)]);
        let psi1 = reference_state(
            MeasurementOutcome::from_index(1).unwrap(),
            &ProtocolConfig::symmetric(2.0, FRAC_PI_2, 0.0),
        )
        .unwrap();
        let p = TruncationPolicy::for_amplitude(2.0);
        let states = [cat, product, psi1];
        for a in &states {
            for b in &states {
                let fa = FockState2::from_superstate(a, &p).unwrap();
                let fb = FockState2::from_superstate(b, &p).unwrap();
                let exact = inner_product(a, b).unwrap();
                assert!((fa.inner_product(&fb) - exact).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn dispersive_branches() {
        for level in [Level::G, Level::E, Level::F] {
            for theta in [0.3, FRAC_PI_2, 2.0] {
                let dev = dispersive_exponential_check(theta, c(1.5, -0.5), AtomLabel::new(level, 2))
                    .unwrap();
                assert!(dev < 1e-8, "{level:?} θ={theta}: {dev}");
            }
        }
    }

    #[test]
    fn partial_trace_examples() {
        let p = TruncationPolicy::for_amplitude(2.0);
        let product = SuperState::coherent_product(&[c(1.0, 0.0), c(2.0, 0.0)]);
        let rho = FockState2::from_superstate(&product, &p)
            .unwrap()
            .partial_trace(1)
            .unwrap();
        let e = rho.eigenvalues();
        assert!((e[0] - 1.0).abs() < 1e-10 && e[1].abs() < 1e-10);

        let psi7 = reference_state(
            MeasurementOutcome::from_index(7).unwrap(),
            &ProtocolConfig::symmetric(1.0, FRAC_PI_2, 0.0),
        )
        .unwrap();
        let rho = FockState2::from_superstate(&psi7, &TruncationPolicy::for_amplitude(1.0))
            .unwrap()
            .partial_trace(1)
            .unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-10);
        let e = rho.eigenvalues();
        let (l1, l2) = quarter_turn_lambdas(1.0);
        assert!((e[0] - l2).abs() < 1e-8 && (e[1] - l1).abs() < 1e-8);
        let g = entropy_gram(&psi7, 1).unwrap().entropy;
        assert!((rho.entropy().entropy - g).abs() < 1e-7);
    }

    #[test]
    fn wigner_examples() {
        let p = TruncationPolicy::for_amplitude(2.0);
        let vac = FockDensity::pure(&coherent_to_fock(c(0.0, 0.0), &p).unwrap());
        assert!((vac.wigner(0.0, 0.0) - 1.0 / PI).abs() < 1e-14);
        let a = c(1.2, -0.8);
        let coh = FockDensity::pure(&coherent_to_fock(a, &p).unwrap());
        let r2 = std::f64::consts::SQRT_2;
        assert!((coh.wigner(r2 * a.re, r2 * a.im) - 1.0 / PI).abs() < 1e-12);
        // one unit of vacuum width away: W = e^{−1}/π
        assert!((coh.wigner(r2 * a.re + 1.0, r2 * a.im) - (-1.0f64).exp() / PI).abs() < 1e-12);
    }

    #[test]
    fn displacement_first_column_is_coherent() {
        let gamma = c(1.2, -0.7);
        let p = TruncationPolicy::for_amplitude(gamma.norm());
        let d = displacement_matrix(gamma, p.dim());
        let v = coherent_to_fock(gamma, &p).unwrap();
        for m in 0..p.dim() {
            assert!((d[(m, 0)] - v[m]).norm() < 1e-13);
        }
        // D(γ)|1⟩ = (a† − γ*)|γ⟩
        for m in 0..p.dim() - 1 {
            let expect = v[m] * (-gamma.conj()) + if m > 0 { v[m - 1] * (m as f64).sqrt() } else { c(0.0, 0.0) };
            assert!((d[(m, 1)] - expect).norm() < 1e-13);
        }
    }

    #[test]
    fn displacement_recursion_is_stable() {
        // |⟨m|D(γ)|n⟩| columns stay unitary well outside the state's support
        let dim = 59;
        for gamma in [c(0.3, 0.2), c(6.0, -4.0), c(-12.0, 9.0)] {
            let d = displacement_matrix(gamma, dim);
            for n in 0..dim {
                for m in 0..dim {
                    assert!(d[(m, n)].norm() <= 1.0 + 1e-9);
                }
            }
            // ⟨m|D(γ)|n⟩ = conj⟨n|D(−γ)|m⟩
            let dm = displacement_matrix(-gamma, dim);
            for n in 0..20 {
                for m in 0..20 {
                    assert!((d[(m, n)] - dm[(n, m)].conj()).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn hermite_marginal_of_vacuum() {
        let p = TruncationPolicy::for_amplitude(1.0);
        let a = c(1.0, 0.4);
        let rho = FockDensity::pure(&coherent_to_fock(a, &p).unwrap());
        for x in [-1.0, 0.0, 0.7, 2.5] {
            let x0 = std::f64::consts::SQRT_2 * a.re;
            let expect = (-(x - x0) * (x - x0)).exp() / PI.sqrt();
            let got = rho.position_density(x);
            // amplitude tail of order √TAIL_BOUND enters through cross terms
            assert!((got - expect).abs() < 1e-9, "{x}: {got} vs {expect}");
        }
    }
}
