//! Finite superpositions of multimode coherent states tensored with
//! three-level atomic registers.
//!
//! A [`SuperState`] is a list of [`BasisTerm`]s, each a complex coefficient
//! times a product of atomic levels and coherent-state labels (one per
//! cavity mode). Atomic labels are orthonormal; the field factor of an inner
//! product is the product of coherent overlaps
//! ⟨α|β⟩ = exp(−|α|²/2 − |β|²/2 + α*β).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Coherent labels closer than this are the same state.
pub const LABEL_TOL: f64 = 1e-12;
/// Coefficients at or below this modulus are dropped by [`SuperState::merged`].
pub const CULL_TOL: f64 = 1e-14;
/// Squared norms at or below this are treated as the null vector.
pub const NULL_NORM_SQ: f64 = 1e-28;

fn check_finite(z: C64, what: &str) -> Result<()> {
    if z.re.is_finite() && z.im.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} is not finite: {z}")))
    }
}

/// ⟨α|β⟩ for coherent states.
pub fn coherent_overlap(alpha: C64, beta: C64) -> Result<C64> {
    check_finite(alpha, "alpha")?;
    check_finite(beta, "beta")?;
    Ok(overlap_unchecked(alpha, beta))
}

#[inline]
pub(crate) fn overlap_unchecked(alpha: C64, beta: C64) -> C64 {
    (-0.5 * alpha.norm_sqr() - 0.5 * beta.norm_sqr() + alpha.conj() * beta).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentLabel(pub C64);

impl CoherentLabel {
    pub fn new(amplitude: C64) -> Result<Self> {
        check_finite(amplitude, "coherent amplitude")?;
        Ok(Self(amplitude))
    }

    pub fn amplitude(self) -> C64 {
        self.0
    }

    pub fn same_as(self, other: Self) -> bool {
        (self.0 - other.0).norm() <= LABEL_TOL
    }

    pub fn rotated(self, phase: f64) -> Self {
        Self(self.0 * C64::from_polar(1.0, phase))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    G,
    E,
    F,
}

impl Level {
    pub fn as_char(self) -> char {
        match self {
            Level::G => 'g',
            Level::E => 'e',
            Level::F => 'f',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'g' => Some(Level::G),
            'e' => Some(Level::E),
            'f' => Some(Level::F),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomLabel {
    pub level: Level,
    /// 1, 2 or 3 (atoms A, B, C).
    pub atom_index: u8,
}

impl AtomLabel {
    pub fn new(level: Level, atom_index: u8) -> Self {
        Self { level, atom_index }
    }
}

impl fmt::Display for AtomLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.level.as_char(), self.atom_index)
    }
}

impl std::str::FromStr for AtomLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        let level = chars
            .next()
            .and_then(Level::from_char)
            .ok_or_else(|| Error::Config(format!("bad atom label {s:?}")))?;
        let index: u8 = chars
            .as_str()
            .parse()
            .map_err(|_| Error::Config(format!("bad atom label {s:?}")))?;
        if !(1..=3).contains(&index) {
            return Err(Error::Config(format!("atom index out of range in {s:?}")));
        }
        Ok(Self::new(level, index))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisTerm {
    pub coefficient: C64,
    /// Sorted by `atom_index`.
    pub atoms: Vec<AtomLabel>,
    /// Indexed by cavity: `fields[0]` is mode 1.
    pub fields: Vec<CoherentLabel>,
}

impl BasisTerm {
    pub fn new(coefficient: C64, mut atoms: Vec<AtomLabel>, fields: Vec<CoherentLabel>) -> Self {
        atoms.sort_by_key(|a| a.atom_index);
        Self {
            coefficient,
            atoms,
            fields,
        }
    }

    /// Field-only term.
    pub fn field(coefficient: C64, fields: &[C64]) -> Self {
        Self::new(
            coefficient,
            Vec::new(),
            fields.iter().map(|&a| CoherentLabel(a)).collect(),
        )
    }

    pub fn same_labels(&self, other: &BasisTerm) -> bool {
        self.atoms == other.atoms
            && self.fields.len() == other.fields.len()
            && self
                .fields
                .iter()
                .zip(&other.fields)
                .all(|(a, b)| a.same_as(*b))
    }

    /// ⟨self-labels|other-labels⟩ without coefficients.
    fn label_overlap(&self, other: &BasisTerm) -> C64 {
        if self.atoms != other.atoms {
            return C64::new(0.0, 0.0);
        }
        self.fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| overlap_unchecked(a.0, b.0))
            .product()
    }

    pub fn level_of(&self, atom_index: u8) -> Option<Level> {
        self.atoms
            .iter()
            .find(|a| a.atom_index == atom_index)
            .map(|a| a.level)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SuperState {
    pub terms: Vec<BasisTerm>,
    pub is_normalized: bool,
}

impl SuperState {
    pub fn new(terms: Vec<BasisTerm>) -> Self {
        Self {
            terms,
            is_normalized: false,
        }
    }

    /// Field-only product of coherent states.
    pub fn coherent_product(amplitudes: &[C64]) -> Self {
        let mut s = Self::new(vec![BasisTerm::field(C64::new(1.0, 0.0), amplitudes)]);
        s.is_normalized = true;
        s
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn n_modes(&self) -> Option<usize> {
        self.terms.first().map(|t| t.fields.len())
    }

    /// Atom indices present in the register (from the first term).
    pub fn atom_indices(&self) -> Vec<u8> {
        self.terms
            .first()
            .map(|t| t.atoms.iter().map(|a| a.atom_index).collect())
            .unwrap_or_default()
    }

    pub fn is_field_only(&self) -> bool {
        self.terms.iter().all(|t| t.atoms.is_empty())
    }

    fn check_arity(&self) -> Result<Option<(Vec<u8>, usize)>> {
        let Some(first) = self.terms.first() else {
            return Ok(None);
        };
        let atoms: Vec<u8> = first.atoms.iter().map(|a| a.atom_index).collect();
        let modes = first.fields.len();
        for t in &self.terms {
            let idx: Vec<u8> = t.atoms.iter().map(|a| a.atom_index).collect();
            if idx != atoms || t.fields.len() != modes {
                return Err(Error::Shape("terms of one state disagree in arity".into()));
            }
            check_finite(t.coefficient, "coefficient")?;
            for f in &t.fields {
                check_finite(f.0, "coherent label")?;
            }
        }
        Ok(Some((atoms, modes)))
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self::new(
            self.terms
                .iter()
                .map(|t| BasisTerm {
                    coefficient: t.coefficient * factor,
                    ..t.clone()
                })
                .collect(),
        )
    }

    /// Concatenation of term lists (not merged).
    pub fn plus(&self, other: &SuperState) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms)
    }

    /// Sums coefficients of label-equal terms and drops negligible ones.
    /// Terms keep their first-appearance order.
    pub fn merged(&self) -> Self {
        let mut out: Vec<BasisTerm> = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            match out.iter_mut().find(|o| o.same_labels(t)) {
                Some(o) => o.coefficient += t.coefficient,
                None => out.push(t.clone()),
            }
        }
        out.retain(|t| t.coefficient.norm() > CULL_TOL);
        Self::new(out)
    }

    pub fn norm_sqr(&self) -> f64 {
        inner_product_unchecked(self, self).re
    }

    /// Unit-norm copy; the coefficients are rescaled by a positive real so
    /// the global phase is untouched.
    pub fn normalized(&self) -> Result<Self> {
        let merged = self.merged();
        let n2 = merged.norm_sqr();
        if !(n2 > NULL_NORM_SQ) {
            return Err(Error::DegenerateState { norm_sq: n2 });
        }
        let mut s = merged.scaled(C64::new(1.0 / n2.sqrt(), 0.0));
        s.is_normalized = true;
        Ok(s)
    }

    /// Tensor a new atom in the given level into every term.
    pub fn with_atom(&self, label: AtomLabel) -> Result<Self> {
        if self.atom_indices().contains(&label.atom_index) {
            return Err(Error::ProtocolSequence(format!(
                "atom {} is already in the register",
                label.atom_index
            )));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let mut atoms = t.atoms.clone();
                atoms.push(label);
                BasisTerm::new(t.coefficient, atoms, t.fields.clone())
            })
            .collect();
        Ok(Self {
            terms,
            is_normalized: self.is_normalized,
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<TermJson> = self.terms.iter().map(TermJson::from).collect();
        serde_json::to_value(terms).expect("term serialization is infallible")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let raw: Vec<TermJson> = serde_json::from_value(value.clone())?;
        let terms = raw
            .into_iter()
            .map(BasisTerm::try_from)
            .collect::<Result<Vec<_>>>()?;
        let s = Self::new(terms);
        s.check_arity()?;
        Ok(s)
    }
}

/// ⟨a|b⟩.
pub fn inner_product(a: &SuperState, b: &SuperState) -> Result<C64> {
    let sa = a.check_arity()?;
    let sb = b.check_arity()?;
    if let (Some(x), Some(y)) = (&sa, &sb) {
        if x != y {
            return Err(Error::Shape(format!(
                "atoms {:?} / {} modes vs atoms {:?} / {} modes",
                x.0, x.1, y.0, y.1
            )));
        }
    }
    Ok(inner_product_unchecked(a, b))
}

pub(crate) fn inner_product_unchecked(a: &SuperState, b: &SuperState) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for ta in &a.terms {
        for tb in &b.terms {
            acc += ta.coefficient.conj() * tb.coefficient * ta.label_overlap(tb);
        }
    }
    acc
}

/// |⟨a|b⟩| / (‖a‖‖b‖).
pub fn fidelity(a: &SuperState, b: &SuperState) -> Result<f64> {
    let ab = inner_product(a, b)?;
    let na = a.norm_sqr();
    let nb = b.norm_sqr();
    if !(na > NULL_NORM_SQ && nb > NULL_NORM_SQ) {
        return Err(Error::DegenerateState { norm_sq: na.min(nb) });
    }
    Ok(ab.norm() / (na * nb).sqrt())
}

pub fn merge_terms(s: &SuperState) -> SuperState {
    s.merged()
}

pub fn normalize(s: &SuperState) -> Result<SuperState> {
    s.normalized()
}

#[derive(Serialize, Deserialize)]
struct ComplexJson {
    re: f64,
    im: f64,
}

#[derive(Serialize, Deserialize)]
struct TermJson {
    re: f64,
    im: f64,
    atoms: Vec<String>,
    fields: Vec<ComplexJson>,
}

impl From<&BasisTerm> for TermJson {
    fn from(t: &BasisTerm) -> Self {
        Self {
            re: t.coefficient.re,
            im: t.coefficient.im,
            atoms: t.atoms.iter().map(|a| a.to_string()).collect(),
            fields: t
                .fields
                .iter()
                .map(|f| ComplexJson {
                    re: f.0.re,
                    im: f.0.im,
                })
                .collect(),
        }
    }
}

impl TryFrom<TermJson> for BasisTerm {
    type Error = Error;

    fn try_from(j: TermJson) -> Result<Self> {
        let atoms = j
            .atoms
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<AtomLabel>>>()?;
        let fields = j
            .fields
            .iter()
            .map(|c| CoherentLabel::new(C64::new(c.re, c.im)))
            .collect::<Result<Vec<_>>>()?;
        Ok(BasisTerm::new(C64::new(j.re, j.im), atoms, fields))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn g1(alpha: C64, coeff: C64) -> BasisTerm {
        BasisTerm::new(coeff, vec![AtomLabel::new(Level::G, 1)], vec![CoherentLabel(alpha)])
    }

    #[test]
    fn overlap_examples() {
        let a = c(0.3, -1.2);
        assert!((coherent_overlap(a, a).unwrap() - 1.0).norm() < 1e-15);
        let v = coherent_overlap(c(0.0, 0.0), c(2.0, 0.0)).unwrap();
        assert!((v - (-2.0f64).exp()).norm() < 1e-15);
        let v = coherent_overlap(c(-1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!((v.re - (-2.0f64).exp()).abs() < 1e-15 && v.im.abs() < 1e-15);
        assert!(coherent_overlap(c(f64::NAN, 0.0), c(1.0, 0.0)).is_err());
    }

    #[test]
    fn atomic_orthogonality() {
        let a = c(1.0, 0.5);
        let s1 = SuperState::new(vec![g1(a, c(1.0, 0.0))]);
        let s2 = SuperState::new(vec![BasisTerm::new(
            c(1.0, 0.0),
            vec![AtomLabel::new(Level::E, 1)],
            vec![CoherentLabel(a)],
        )]);
        assert_eq!(inner_product(&s1, &s2).unwrap(), c(0.0, 0.0));
        let s3 = SuperState::new(vec![g1(c(-0.4, 0.2), c(1.0, 0.0))]);
        let expect = coherent_overlap(a, c(-0.4, 0.2)).unwrap();
        assert!((inner_product(&s1, &s3).unwrap() - expect).norm() < 1e-15);
    }

    #[test]
    fn arity_mismatch_is_shape_error() {
        let a = SuperState::coherent_product(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let b = SuperState::coherent_product(&[c(1.0, 0.0)]);
        assert!(matches!(inner_product(&a, &b), Err(Error::Shape(_))));
        let b = a.with_atom(AtomLabel::new(Level::G, 1)).unwrap();
        assert!(matches!(inner_product(&a, &b), Err(Error::Shape(_))));
    }

    #[test]
    fn merge_examples() {
        let a = c(0.7, 0.0);
        let s = SuperState::new(vec![g1(a, c(0.5, 0.0)), g1(a, c(0.5, 0.0))]).merged();
        assert_eq!(s.len(), 1);
        assert!((s.terms[0].coefficient - 1.0).norm() < 1e-15);

        let s = SuperState::new(vec![g1(a, c(0.5, 0.0)), g1(a, c(-0.5, 0.0))]).merged();
        assert!(s.is_empty());

        let s = SuperState::new(vec![g1(a, c(0.5, 0.0)), g1(-a, c(0.5, 0.0))]).merged();
        assert_eq!(s.len(), 2);

        // i·α reached through a rotation merges with the literal label
        let r = CoherentLabel(a).rotated(std::f64::consts::FRAC_PI_2);
        let s = SuperState::new(vec![g1(r.0, c(1.0, 0.0)), g1(c(0.0, 0.7), c(1.0, 0.0))]).merged();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn normalize_examples() {
        let a = c(1.3, 0.0);
        let s = SuperState::new(vec![g1(a, c(1.0, 0.0)), g1(a, c(1.0, 0.0))]).normalized().unwrap();
        assert_eq!(s.len(), 1);
        assert!((s.terms[0].coefficient - 1.0).norm() < 1e-14);
        assert!(s.is_normalized);

        // even cat at α = 1
        let cat = SuperState::new(vec![
            BasisTerm::field(c(1.0, 0.0), &[c(1.0, 0.0)]),
            BasisTerm::field(c(1.0, 0.0), &[c(-1.0, 0.0)]),
        ])
        .normalized()
        .unwrap();
        let expect = 1.0 / (2.0 + 2.0 * (-2.0f64).exp()).sqrt();
        assert!((cat.terms[0].coefficient.re - expect).abs() < 1e-14);
        assert!((cat.norm_sqr() - 1.0).abs() < 1e-12);

        // global phase preserved
        let phase = C64::from_polar(3.0, 2.1);
        let s = SuperState::new(vec![g1(a, phase)]).normalized().unwrap();
        assert!((s.terms[0].coefficient.arg() - 2.1).abs() < 1e-14);

        let null = SuperState::new(vec![g1(a, c(1e-20, 0.0))]);
        assert!(matches!(null.normalized(), Err(Error::DegenerateState { .. })));
    }

    #[test]
    fn json_round_trip_preserves_state() {
        let s = SuperState::new(vec![
            BasisTerm::new(
                c(0.25, -0.5),
                vec![AtomLabel::new(Level::F, 1), AtomLabel::new(Level::E, 2)],
                vec![CoherentLabel(c(1.0, 2.0)), CoherentLabel(c(-0.5, 0.0))],
            ),
            BasisTerm::new(
                c(-0.1, 0.0),
                vec![AtomLabel::new(Level::G, 1), AtomLabel::new(Level::G, 2)],
                vec![CoherentLabel(c(0.0, 2.0)), CoherentLabel(c(0.5, 0.5))],
            ),
        ]);
        let v = s.to_json();
        assert_eq!(v[0]["atoms"][0], "f1");
        assert_eq!(v[0]["fields"][1]["re"], -0.5);
        let back = SuperState::from_json(&v).unwrap();
        assert_eq!(back.terms, s.terms);
    }

    fn small_state() -> impl Strategy<Value = SuperState> {
        let term = (
            -1.0f64..1.0,
            -1.0f64..1.0,
            0usize..2,
            -2.0f64..2.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
            -2.0f64..2.0,
        )
            .prop_map(|(cr, ci, lvl, a, b, x, y)| {
                let level = if lvl == 0 { Level::G } else { Level::F };
                BasisTerm::new(
                    c(cr, ci),
                    vec![AtomLabel::new(level, 1)],
                    vec![CoherentLabel(c(a, b)), CoherentLabel(c(x, y))],
                )
            });
        proptest::collection::vec(term, 1..5).prop_map(SuperState::new)
    }

    proptest! {
        #[test]
        fn conjugate_symmetry(a in small_state(), b in small_state()) {
            let ab = inner_product(&a, &b).unwrap();
            let ba = inner_product(&b, &a).unwrap();
            prop_assert!((ab - ba.conj()).norm() < 1e-12);
        }

        #[test]
        fn cauchy_schwarz(a in small_state(), b in small_state()) {
            let ab = inner_product(&a, &b).unwrap();
            prop_assert!(ab.norm_sqr() <= a.norm_sqr() * b.norm_sqr() + 1e-12);
        }

        #[test]
        fn merge_idempotent_and_norm_preserving(a in small_state()) {
            let doubled = a.plus(&a.scaled(c(0.0, 1.0)));
            let m = doubled.merged();
            prop_assert!((m.norm_sqr() - doubled.norm_sqr()).abs() < 1e-12);
            let mm = m.merged();
            prop_assert_eq!(mm.terms.len(), m.terms.len());
            prop_assert!(m.terms.len() <= a.terms.len());
        }

        #[test]
        fn overlap_modulus_bounded(ar in -4.0f64..4.0, ai in -4.0f64..4.0, br in -4.0f64..4.0, bi in -4.0f64..4.0) {
            let v = coherent_overlap(c(ar, ai), c(br, bi)).unwrap();
            prop_assert!(v.norm() <= 1.0 + 1e-15);
        }
    }
}
