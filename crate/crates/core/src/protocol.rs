//! The two-cavity, three-atom circuit.
//!
//! Atom A (index 1) crosses R1 (π/2), C1, R2 (π), C2, R3 (π/2) on the (g,f)
//! pair. Atom B (index 2) crosses R4, C1, R5 on the (g,e) pair with C2 off.
//! Atom C (index 3) crosses R6, C2, R7 on the (g,e) pair with C1 off. All
//! Ramsey zones share one phase δ.
//!
//! Dispersive evolution under H = ħχ(σ₊σ₋ + a†a σ₃) for a time t with
//! θ = χt acts per atomic level:
//!
//! ```text
//! |g⟩|α⟩ → |g⟩|α e^{+iθ}⟩
//! |e⟩|α⟩ → e^{−iθ} |e⟩|α e^{−iθ}⟩
//! |f⟩|α⟩ → |f⟩|α⟩
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coherent::{AtomLabel, BasisTerm, CoherentLabel, Level, SuperState, NULL_NORM_SQ};
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    #[serde(with = "amplitude_serde")]
    pub alpha1: C64,
    #[serde(with = "amplitude_serde")]
    pub alpha2: C64,
    #[serde(deserialize_with = "crate::angle::de")]
    pub theta1: f64,
    #[serde(deserialize_with = "crate::angle::de")]
    pub theta2: f64,
    #[serde(default, deserialize_with = "crate::angle::de")]
    pub delta: f64,
}

impl ProtocolConfig {
    /// Real amplitudes, θ in radians.
    pub fn new(alpha1: f64, alpha2: f64, theta1: f64, theta2: f64, delta: f64) -> Self {
        Self {
            alpha1: C64::new(alpha1, 0.0),
            alpha2: C64::new(alpha2, 0.0),
            theta1,
            theta2,
            delta,
        }
    }

    /// α₁ = α₂ = α, θ₁ = θ₂ = θ.
    pub fn symmetric(alpha: f64, theta: f64, delta: f64) -> Self {
        Self::new(alpha, alpha, theta, theta, delta)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha1.re,
            self.alpha1.im,
            self.alpha2.re,
            self.alpha2.im,
            self.theta1,
            self.theta2,
            self.delta,
        ]
        .iter()
        .all(|v| v.is_finite());
        if finite {
            Ok(())
        } else {
            Err(Error::Domain(format!("non-finite protocol parameter in {self:?}")))
        }
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

mod amplitude_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::C64;

    #[derive(Serialize, Deserialize)]
    struct ReIm {
        re: f64,
        #[serde(default)]
        im: f64,
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Real(f64),
        Complex(ReIm),
    }

    pub fn serialize<S: Serializer>(z: &C64, s: S) -> Result<S::Ok, S::Error> {
        ReIm { re: z.re, im: z.im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<C64, D::Error> {
        Ok(match Raw::deserialize(d)? {
            Raw::Real(re) => C64::new(re, 0.0),
            Raw::Complex(ReIm { re, im }) => C64::new(re, im),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PulseKind {
    HalfPi,
    Pi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LevelPair {
    /// (g, f): atom A.
    GF,
    /// (g, e): atoms B and C.
    GE,
}

impl LevelPair {
    pub fn upper(self) -> Level {
        match self {
            LevelPair::GF => Level::F,
            LevelPair::GE => Level::E,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSpec {
    pub kind: PulseKind,
    pub atom_index: u8,
    pub level_pair: LevelPair,
    pub phase: f64,
}

impl PulseSpec {
    pub fn half_pi(atom_index: u8, level_pair: LevelPair, phase: f64) -> Self {
        Self {
            kind: PulseKind::HalfPi,
            atom_index,
            level_pair,
            phase,
        }
    }

    pub fn pi(atom_index: u8, level_pair: LevelPair, phase: f64) -> Self {
        Self {
            kind: PulseKind::Pi,
            atom_index,
            level_pair,
            phase,
        }
    }
}

fn require_atom(s: &SuperState, atom_index: u8) -> Result<()> {
    if s.terms.iter().all(|t| t.level_of(atom_index).is_some()) && !s.is_empty() {
        Ok(())
    } else {
        Err(Error::ProtocolSequence(format!(
            "atom {atom_index} is not in the register"
        )))
    }
}

fn relabel(t: &BasisTerm, atom_index: u8, level: Level, factor: C64) -> BasisTerm {
    let atoms = t
        .atoms
        .iter()
        .map(|a| {
            if a.atom_index == atom_index {
                AtomLabel::new(level, atom_index)
            } else {
                *a
            }
        })
        .collect();
    BasisTerm::new(t.coefficient * factor, atoms, t.fields.clone())
}

/// Ramsey π/2 pulse on the pulse's level pair (g, x):
/// |g⟩ → (|g⟩ + e^{iδ}|x⟩)/√2, |x⟩ → (e^{−iδ}|g⟩ − |x⟩)/√2.
/// Levels outside the pair are untouched.
pub fn apply_pi2(s: &SuperState, pulse: &PulseSpec) -> Result<SuperState> {
    if pulse.kind != PulseKind::HalfPi {
        return Err(Error::Contract("apply_pi2 called with a π pulse".into()));
    }
    require_atom(s, pulse.atom_index)?;
    let upper = pulse.level_pair.upper();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let up_phase = C64::from_polar(h, pulse.phase);
    let down_phase = C64::from_polar(h, -pulse.phase);
    let mut out = Vec::with_capacity(2 * s.len());
    for t in &s.terms {
        match t.level_of(pulse.atom_index) {
            Some(Level::G) => {
                out.push(relabel(t, pulse.atom_index, Level::G, C64::new(h, 0.0)));
                out.push(relabel(t, pulse.atom_index, upper, up_phase));
            }
            Some(l) if l == upper => {
                out.push(relabel(t, pulse.atom_index, Level::G, down_phase));
                out.push(relabel(t, pulse.atom_index, upper, C64::new(-h, 0.0)));
            }
            _ => out.push(t.clone()),
        }
    }
    Ok(SuperState::new(out).merged())
}

/// Ramsey π pulse: |g⟩ → e^{iδ}|x⟩, |x⟩ → −e^{−iδ}|g⟩.
pub fn apply_pi(s: &SuperState, pulse: &PulseSpec) -> Result<SuperState> {
    if pulse.kind != PulseKind::Pi {
        return Err(Error::Contract("apply_pi called with a π/2 pulse".into()));
    }
    require_atom(s, pulse.atom_index)?;
    let upper = pulse.level_pair.upper();
    let terms = s
        .terms
        .iter()
        .map(|t| match t.level_of(pulse.atom_index) {
            Some(Level::G) => relabel(t, pulse.atom_index, upper, C64::from_polar(1.0, pulse.phase)),
            Some(l) if l == upper => {
                relabel(t, pulse.atom_index, Level::G, -C64::from_polar(1.0, -pulse.phase))
            }
            _ => t.clone(),
        })
        .collect();
    Ok(SuperState::new(terms).merged())
}

pub fn apply_pulse(s: &SuperState, pulse: &PulseSpec) -> Result<SuperState> {
    match pulse.kind {
        PulseKind::HalfPi => apply_pi2(s, pulse),
        PulseKind::Pi => apply_pi(s, pulse),
    }
}

/// Dispersive interaction of one atom with one cavity mode (1-based), θ = χt.
pub fn apply_dispersive(
    s: &SuperState,
    atom_index: u8,
    mode_index: usize,
    theta: f64,
) -> Result<SuperState> {
    if !theta.is_finite() {
        return Err(Error::Domain(format!("theta = {theta}")));
    }
    require_atom(s, atom_index)?;
    let n_modes = s.n_modes().unwrap_or(0);
    if mode_index == 0 || mode_index > n_modes {
        return Err(Error::ProtocolSequence(format!(
            "mode {mode_index} absent (state has {n_modes} modes)"
        )));
    }
    let m = mode_index - 1;
    let terms = s
        .terms
        .iter()
        .map(|t| {
            let mut t = t.clone();
            match t.level_of(atom_index) {
                Some(Level::G) => t.fields[m] = t.fields[m].rotated(theta),
                Some(Level::E) => {
                    t.fields[m] = t.fields[m].rotated(-theta);
                    t.coefficient *= C64::from_polar(1.0, -theta);
                }
                _ => {}
            }
            t
        })
        .collect();
    Ok(SuperState::new(terms).merged())
}

#[derive(Clone, Debug, PartialEq)]
pub enum Step {
    /// A fresh atom enters in the given level.
    Inject(AtomLabel),
    Pulse { zone: &'static str, pulse: PulseSpec },
    Cavity {
        zone: &'static str,
        atom_index: u8,
        mode_index: usize,
        theta: f64,
    },
}

impl Step {
    pub fn zone(&self) -> &'static str {
        match self {
            Step::Inject(l) => match l.atom_index {
                1 => "A",
                2 => "B",
                _ => "C",
            },
            Step::Pulse { zone, .. } | Step::Cavity { zone, .. } => zone,
        }
    }

    pub fn apply(&self, s: &SuperState) -> Result<SuperState> {
        match self {
            Step::Inject(label) => s.with_atom(*label),
            Step::Pulse { pulse, .. } => apply_pulse(s, pulse),
            Step::Cavity {
                atom_index,
                mode_index,
                theta,
                ..
            } => apply_dispersive(s, *atom_index, *mode_index, *theta),
        }
    }
}

/// The ordered circuit. Cavities that are "off" for an atom do not appear.
pub fn circuit(cfg: &ProtocolConfig) -> Vec<Step> {
    use LevelPair::{GE, GF};
    let d = cfg.delta;
    let g = |i| Step::Inject(AtomLabel::new(Level::G, i));
    vec![
        g(1),
        Step::Pulse { zone: "R1", pulse: PulseSpec::half_pi(1, GF, d) },
        Step::Cavity { zone: "C1", atom_index: 1, mode_index: 1, theta: cfg.theta1 },
        Step::Pulse { zone: "R2", pulse: PulseSpec::pi(1, GF, d) },
        Step::Cavity { zone: "C2", atom_index: 1, mode_index: 2, theta: cfg.theta2 },
        Step::Pulse { zone: "R3", pulse: PulseSpec::half_pi(1, GF, d) },
        g(2),
        Step::Pulse { zone: "R4", pulse: PulseSpec::half_pi(2, GE, d) },
        Step::Cavity { zone: "C1", atom_index: 2, mode_index: 1, theta: cfg.theta1 },
        Step::Pulse { zone: "R5", pulse: PulseSpec::half_pi(2, GE, d) },
        g(3),
        Step::Pulse { zone: "R6", pulse: PulseSpec::half_pi(3, GE, d) },
        Step::Cavity { zone: "C2", atom_index: 3, mode_index: 2, theta: cfg.theta2 },
        Step::Pulse { zone: "R7", pulse: PulseSpec::half_pi(3, GE, d) },
    ]
}

fn initial_state(cfg: &ProtocolConfig) -> SuperState {
    SuperState::coherent_product(&[cfg.alpha1, cfg.alpha2])
}

/// State after every step, labelled by zone.
pub fn run_stages(cfg: &ProtocolConfig) -> Result<Vec<(&'static str, SuperState)>> {
    cfg.validate()?;
    let mut s = initial_state(cfg);
    let mut out = Vec::new();
    for step in circuit(cfg) {
        s = step.apply(&s)?;
        out.push((step.zone(), s.clone()));
    }
    Ok(out)
}

/// Final normalized three-atom ⊗ two-mode state (64 terms for generic θ).
pub fn run_protocol(cfg: &ProtocolConfig) -> Result<SuperState> {
    cfg.validate()?;
    circuit(cfg)
        .iter()
        .try_fold(initial_state(cfg), |s, step| step.apply(&s))?
        .normalized()
}

/// One of the eight detectable atomic outcomes: atom A in {g, f},
/// atoms B and C in {g, e}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MeasurementOutcome {
    levels: [Level; 3],
}

impl MeasurementOutcome {
    pub fn new(levels: [Level; 3]) -> Result<Self> {
        let ok = matches!(levels[0], Level::G | Level::F)
            && matches!(levels[1], Level::G | Level::E)
            && matches!(levels[2], Level::G | Level::E);
        if ok {
            Ok(Self { levels })
        } else {
            Err(Error::Config(format!("not a detectable outcome: {levels:?}")))
        }
    }

    pub fn levels(&self) -> [Level; 3] {
        self.levels
    }

    /// All eight outcomes in table order (|ψ₁⟩ … |ψ₈⟩).
    pub fn all() -> [Self; 8] {
        use Level::{E, F, G};
        [
            [G, G, G],
            [G, E, G],
            [F, G, G],
            [F, E, G],
            [G, G, E],
            [G, E, E],
            [F, G, E],
            [F, E, E],
        ]
        .map(|levels| Self { levels })
    }

    /// 1-based row number j of |ψⱼ⟩.
    pub fn index(&self) -> usize {
        Self::all().iter().position(|o| o == self).expect("closed set") + 1
    }

    pub fn from_index(j: usize) -> Result<Self> {
        if (1..=8).contains(&j) {
            Ok(Self::all()[j - 1])
        } else {
            Err(Error::Config(format!("outcome index {j} outside 1..=8")))
        }
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for MeasurementOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, l) in self.levels.iter().enumerate() {
            write!(f, "{}{}", l.as_char(), i + 1)?;
        }
        Ok(())
    }
}

impl FromStr for MeasurementOutcome {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let chars: Vec<char> = s.trim().chars().collect();
        if chars.len() != 6 {
            return Err(Error::Config(format!("bad outcome label {s:?}")));
        }
        let mut levels = [Level::G; 3];
        for i in 0..3 {
            let l = Level::from_char(chars[2 * i])
                .ok_or_else(|| Error::Config(format!("bad outcome label {s:?}")))?;
            if chars[2 * i + 1].to_digit(10) != Some(i as u32 + 1) {
                return Err(Error::Config(format!("bad outcome label {s:?}")));
            }
            levels[i] = l;
        }
        Self::new(levels)
    }
}

#[derive(Clone, Debug)]
pub struct ConditionalResult {
    pub outcome: MeasurementOutcome,
    /// Normalized, field only.
    pub state: SuperState,
    pub probability: f64,
}

impl ConditionalResult {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "outcome": self.outcome.label(),
            "probability": self.probability,
            "state": self.state.to_json(),
        })
    }
}

/// Unnormalized field component left by detecting `outcome`, and its
/// probability.
pub fn project_raw(s: &SuperState, outcome: MeasurementOutcome) -> Result<(SuperState, f64)> {
    for i in 1..=3 {
        require_atom(s, i)?;
    }
    let want: Vec<AtomLabel> = outcome
        .levels
        .iter()
        .enumerate()
        .map(|(i, &l)| AtomLabel::new(l, i as u8 + 1))
        .collect();
    let terms: Vec<BasisTerm> = s
        .terms
        .iter()
        .filter(|t| t.atoms == want)
        .map(|t| BasisTerm::new(t.coefficient, Vec::new(), t.fields.clone()))
        .collect();
    let component = SuperState::new(terms).merged();
    let total = s.norm_sqr();
    let p = component.norm_sqr() / total;
    Ok((component, p))
}

pub fn project_atoms(s: &SuperState, outcome: MeasurementOutcome) -> Result<ConditionalResult> {
    let (component, p) = project_raw(s, outcome)?;
    if !(p > NULL_NORM_SQ) {
        return Err(Error::DegenerateState { norm_sq: p.max(0.0) });
    }
    Ok(ConditionalResult {
        outcome,
        state: component.normalized()?,
        probability: p,
    })
}

/// One row of the conditional-state table, general θ:
///
/// ```text
/// σ e^{ikδ}/8 · [ (|α₁e^{2iθ₁}⟩ + s₁e^{−iθ₁}|α₁⟩)(|α₂e^{iθ₂}⟩ + s₂e^{−iθ₂}|α₂e^{−iθ₂}⟩)
///               + b (|α₁e^{iθ₁}⟩ + s₁e^{−iθ₁}|α₁e^{−iθ₁}⟩)(|α₂e^{2iθ₂}⟩ + s₂e^{−iθ₂}|α₂⟩) ]
/// ```
struct TableRow {
    sign: f64,
    delta_power: i32,
    s1: f64,
    s2: f64,
    block: f64,
}

#[rustfmt::skip]
const TABLE: [TableRow; 8] = [
    TableRow { sign:  1.0, delta_power: 0, s1:  1.0, s2:  1.0, block: -1.0 }, // g1g2g3
    TableRow { sign:  1.0, delta_power: 1, s1: -1.0, s2:  1.0, block: -1.0 }, // g1e2g3
    TableRow { sign: -1.0, delta_power: 1, s1:  1.0, s2:  1.0, block:  1.0 }, // f1g2g3
    TableRow { sign: -1.0, delta_power: 2, s1: -1.0, s2:  1.0, block:  1.0 }, // f1e2g3
    TableRow { sign:  1.0, delta_power: 1, s1:  1.0, s2: -1.0, block: -1.0 }, // g1g2e3
    TableRow { sign:  1.0, delta_power: 2, s1: -1.0, s2: -1.0, block: -1.0 }, // g1e2e3
    TableRow { sign: -1.0, delta_power: 2, s1:  1.0, s2: -1.0, block:  1.0 }, // f1g2e3
    TableRow { sign: -1.0, delta_power: 3, s1: -1.0, s2: -1.0, block:  1.0 }, // f1e2e3
];

fn ket(terms: &mut Vec<BasisTerm>, coeff: C64, a: C64, b: C64) {
    terms.push(BasisTerm::new(
        coeff,
        Vec::new(),
        vec![CoherentLabel(a), CoherentLabel(b)],
    ));
}

/// Product of two one-mode superpositions, expanded.
fn product_block(terms: &mut Vec<BasisTerm>, scale: C64, mode1: &[(C64, C64)], mode2: &[(C64, C64)]) {
    for &(c1, a1) in mode1 {
        for &(c2, a2) in mode2 {
            ket(terms, scale * c1 * c2, a1, a2);
        }
    }
}

/// Conditional field state transcribed directly from the tabulated
/// expressions (independent of [`run_protocol`]); normalized.
pub fn reference_state(outcome: MeasurementOutcome, cfg: &ProtocolConfig) -> Result<SuperState> {
    cfg.validate()?;
    reference_unmerged(outcome, cfg).normalized()
}

/// The eight-term expansion before merging and normalization.
pub fn reference_unmerged(outcome: MeasurementOutcome, cfg: &ProtocolConfig) -> SuperState {
    let row = &TABLE[outcome.index() - 1];
    let e = |phi: f64| C64::from_polar(1.0, phi);
    let (a1, a2, t1, t2) = (cfg.alpha1, cfg.alpha2, cfg.theta1, cfg.theta2);
    let one = C64::new(1.0, 0.0);
    let prefactor = e(row.delta_power as f64 * cfg.delta) * (row.sign / 8.0);

    let mu1 = [(one, a1 * e(2.0 * t1)), (row.s1 * e(-t1), a1)];
    let nu2 = [(one, a2 * e(t2)), (row.s2 * e(-t2), a2 * e(-t2))];
    let nu1 = [(one, a1 * e(t1)), (row.s1 * e(-t1), a1 * e(-t1))];
    let mu2 = [(one, a2 * e(2.0 * t2)), (row.s2 * e(-t2), a2)];

    let mut terms = Vec::with_capacity(8);
    product_block(&mut terms, prefactor, &mu1, &nu2);
    product_block(&mut terms, prefactor * row.block, &nu1, &mu2);
    SuperState::new(terms)
}

/// One row of the θ₁ = θ₂ = π/2 specialisation:
///
/// ```text
/// γ/8 · [ (|α₁⟩ + c₁|−α₁⟩)(|iα₂⟩ + c₂|−iα₂⟩) + b (|iα₁⟩ + d₁|−iα₁⟩)(|α₂⟩ + d₂|−α₂⟩) ]
/// ```
struct QuarterTurnRow {
    gamma: C64,
    c1: C64,
    c2: C64,
    block: f64,
    d1: C64,
    d2: C64,
}

const I: C64 = C64 { re: 0.0, im: 1.0 };
const MI: C64 = C64 { re: 0.0, im: -1.0 };

#[rustfmt::skip]
const QUARTER_TURN: [QuarterTurnRow; 8] = [
    QuarterTurnRow { gamma: MI, c1: I,  c2: MI, block: -1.0, d1: MI, d2: I  },
    QuarterTurnRow { gamma: I,  c1: MI, c2: MI, block:  1.0, d1: I,  d2: I  },
    QuarterTurnRow { gamma: I,  c1: I,  c2: MI, block:  1.0, d1: MI, d2: I  },
    QuarterTurnRow { gamma: MI, c1: MI, c2: MI, block: -1.0, d1: I,  d2: I  },
    QuarterTurnRow { gamma: MI, c1: I,  c2: I,  block:  1.0, d1: MI, d2: MI },
    QuarterTurnRow { gamma: I,  c1: MI, c2: I,  block: -1.0, d1: I,  d2: MI },
    QuarterTurnRow { gamma: I,  c1: I,  c2: I,  block: -1.0, d1: MI, d2: MI },
    QuarterTurnRow { gamma: MI, c1: MI, c2: I,  block:  1.0, d1: I,  d2: MI },
];

/// Horizontal/vertical cat form of each conditional state at θ₁ = θ₂ = π/2.
pub fn quarter_turn_reference(
    outcome: MeasurementOutcome,
    alpha1: C64,
    alpha2: C64,
) -> Result<SuperState> {
    let row = &QUARTER_TURN[outcome.index() - 1];
    let one = C64::new(1.0, 0.0);
    let mut terms = Vec::with_capacity(8);
    let scale = row.gamma / 8.0;
    product_block(
        &mut terms,
        scale,
        &[(one, alpha1), (row.c1, -alpha1)],
        &[(one, I * alpha2), (row.c2, -I * alpha2)],
    );
    product_block(
        &mut terms,
        scale * row.block,
        &[(one, I * alpha1), (row.d1, -I * alpha1)],
        &[(one, alpha2), (row.d2, -alpha2)],
    );
    SuperState::new(terms).normalized()
}

/// Run the circuit once and condition on every outcome. Zero-probability
/// outcomes come back as `Err(DegenerateState)` in their slot.
pub fn all_conditionals(cfg: &ProtocolConfig) -> Result<Vec<(MeasurementOutcome, Result<ConditionalResult>)>> {
    let s = run_protocol(cfg)?;
    Ok(MeasurementOutcome::all()
        .into_iter()
        .map(|o| (o, project_atoms(&s, o)))
        .collect())
}
