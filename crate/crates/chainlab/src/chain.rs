//! Chain specifications, phase states, Hamiltonians and vector fields.
//!
//! Two chain kinds share the same kinetic term `sum p_j^2 / 2`:
//!
//! ```text
//! rotator:     H = sum_j p_j^2/2 + sum_{j<N} V_j(q_j - q_{j+1})     q on T^N
//! oscillator:  H = sum_j p_j^2/2 + sum_j U_j(q_j)
//!                                + sum_{j<N} V_j(q_j - q_{j+1})     q on R^N
//! ```
//!
//! The equations of motion are `dq_j = p_j`, `dp_j = -grad_q H - [damped_j] p_j`,
//! with damping on particle 1 by default (optionally also particle N). Along
//! the deterministic flow the energy obeys the exact identity
//! `L_F H = -sum_damped p_j^2`.

use serde::{Deserialize, Serialize};

use crate::jets::{Jet, PhaseJets};
use crate::potentials::Potential;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChainKind {
    Rotator,
    Oscillator,
}

#[derive(Debug, thiserror::Error)]
pub enum ChainError {
    #[error("chain needs at least 2 particles, got {0}")]
    TooShort(usize),
    #[error("expected {expected} {what} potentials, got {got}")]
    BadPotentialCount {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{what} has wrong length {got}, expected {expected}")]
    BadLength {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("temperature set on undamped particle {0}")]
    TemperatureWithoutDamping(usize),
    #[error("xi index {0} out of range for chain of {1} particles")]
    XiIndex(usize, usize),
}

/// Full description of a chain: kind, length, potentials, damping mask and
/// Langevin temperatures. Immutable once built.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainSpec {
    kind: ChainKind,
    n: usize,
    interaction: Vec<Potential>,
    pinning: Vec<Potential>,
    damping_mask: Vec<bool>,
    temperatures: Vec<f64>,
}

impl ChainSpec {
    /// Rotator chain with damping on particle 1 only.
    pub fn rotator(n: usize, interaction: Vec<Potential>) -> Result<Self, ChainError> {
        Self::build(ChainKind::Rotator, n, interaction, Vec::new())
    }

    /// Uniform rotator chain with every interaction equal to `pot`.
    pub fn rotator_uniform(n: usize, pot: Potential) -> Result<Self, ChainError> {
        Self::rotator(n, vec![pot; n.saturating_sub(1)])
    }

    /// Oscillator chain with damping on particle 1 only.
    pub fn oscillator(
        n: usize,
        interaction: Vec<Potential>,
        pinning: Vec<Potential>,
    ) -> Result<Self, ChainError> {
        Self::build(ChainKind::Oscillator, n, interaction, pinning)
    }

    /// Uniform oscillator chain: all pinnings `u`, all interactions `v`.
    pub fn oscillator_uniform(n: usize, u: Potential, v: Potential) -> Result<Self, ChainError> {
        Self::oscillator(n, vec![v; n.saturating_sub(1)], vec![u; n])
    }

    fn build(
        kind: ChainKind,
        n: usize,
        interaction: Vec<Potential>,
        pinning: Vec<Potential>,
    ) -> Result<Self, ChainError> {
        if n < 2 {
            return Err(ChainError::TooShort(n));
        }
        if interaction.len() != n - 1 {
            return Err(ChainError::BadPotentialCount {
                what: "interaction",
                expected: n - 1,
                got: interaction.len(),
            });
        }
        let expected_pinning = match kind {
            ChainKind::Rotator => 0,
            ChainKind::Oscillator => n,
        };
        if pinning.len() != expected_pinning {
            return Err(ChainError::BadPotentialCount {
                what: "pinning",
                expected: expected_pinning,
                got: pinning.len(),
            });
        }
        let mut damping_mask = vec![false; n];
        damping_mask[0] = true;
        Ok(ChainSpec {
            kind,
            n,
            interaction,
            pinning,
            damping_mask,
            temperatures: vec![0.0; n],
        })
    }

    /// Replace the damping mask (default: particle 1 only).
    pub fn with_damping(mut self, mask: Vec<bool>) -> Result<Self, ChainError> {
        if mask.len() != self.n {
            return Err(ChainError::BadLength {
                what: "damping mask",
                expected: self.n,
                got: mask.len(),
            });
        }
        for (j, (&t, &d)) in self.temperatures.iter().zip(&mask).enumerate() {
            if t != 0.0 && !d {
                return Err(ChainError::TemperatureWithoutDamping(j + 1));
            }
        }
        self.damping_mask = mask;
        Ok(self)
    }

    /// Set Langevin temperatures; nonzero entries require damping there.
    pub fn with_temperatures(mut self, temps: Vec<f64>) -> Result<Self, ChainError> {
        if temps.len() != self.n {
            return Err(ChainError::BadLength {
                what: "temperatures",
                expected: self.n,
                got: temps.len(),
            });
        }
        for (j, (&t, &d)) in temps.iter().zip(&self.damping_mask).enumerate() {
            if t != 0.0 && !d {
                return Err(ChainError::TemperatureWithoutDamping(j + 1));
            }
        }
        self.temperatures = temps;
        Ok(self)
    }

    pub fn kind(&self) -> ChainKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Interaction potential `V_j` for 1-based index `1 <= j <= N-1`.
    pub fn interaction(&self, j: usize) -> &Potential {
        &self.interaction[j - 1]
    }

    pub fn interactions(&self) -> &[Potential] {
        &self.interaction
    }

    /// Pinning potential `U_j` for 1-based index `1 <= j <= N` (oscillators).
    pub fn pinning(&self, j: usize) -> &Potential {
        &self.pinning[j - 1]
    }

    pub fn pinnings(&self) -> &[Potential] {
        &self.pinning
    }

    pub fn damping_mask(&self) -> &[bool] {
        &self.damping_mask
    }

    pub fn is_damped(&self, idx: usize) -> bool {
        self.damping_mask[idx]
    }

    pub fn temperatures(&self) -> &[f64] {
        &self.temperatures
    }

    /// Upper bound of `sum_j sup V_j` (plus `sup U` terms have no finite sup
    /// on the line, so this is only offered for rotators).
    pub fn potential_sup_bound(&self) -> f64 {
        self.interaction.iter().map(|v| v.sup_deriv_bound(0)).sum()
    }
}

/// Phase point. For rotators the coordinates are kept reduced mod `2*pi`
/// (only differences enter the forces).
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl State {
    pub fn new(spec: &ChainSpec, p: Vec<f64>, q: Vec<f64>) -> Self {
        assert_eq!(p.len(), spec.n());
        assert_eq!(q.len(), spec.n());
        let mut s = State { p, q };
        if spec.kind() == ChainKind::Rotator {
            s.reduce_torus();
        }
        s
    }

    pub fn zero(spec: &ChainSpec) -> Self {
        State {
            p: vec![0.0; spec.n()],
            q: vec![0.0; spec.n()],
        }
    }

    /// Reduce all coordinates into `[0, 2*pi)`.
    pub fn reduce_torus(&mut self) {
        let tau = std::f64::consts::TAU;
        for q in &mut self.q {
            *q = q.rem_euclid(tau);
        }
    }

    /// Euclidean norm of the phase point (rotor q taken canonical).
    pub fn norm(&self) -> f64 {
        self.p
            .iter()
            .chain(self.q.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().chain(self.q.iter()).all(|x| x.is_finite())
    }
}

/// Plain `(dq, dp)` pair; no phase-space geometry beyond that.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector {
    pub dq: Vec<f64>,
    pub dp: Vec<f64>,
}

/// Hamiltonian `H(p, q)` of the chain.
pub fn energy(spec: &ChainSpec, s: &State) -> f64 {
    let mut h = s.p.iter().map(|p| p * p).sum::<f64>() / 2.0;
    for (i, v) in spec.interactions().iter().enumerate() {
        h += v.eval_deriv(s.q[i] - s.q[i + 1], 0);
    }
    for (i, u) in spec.pinnings().iter().enumerate() {
        h += u.eval_deriv(s.q[i], 0);
    }
    h
}

/// Deterministic vector field, damping terms included per the mask
/// (the stochastic forcing lives in `sim`).
pub fn vector_field(spec: &ChainSpec, s: &State) -> TangentVector {
    let n = spec.n();
    let dq = s.p.clone();
    let mut dp = vec![0.0; n];
    for i in 0..n {
        let mut f = 0.0;
        if spec.is_damped(i) {
            f -= s.p[i];
        }
        if i >= 1 {
            f += spec.interactions()[i - 1].eval_deriv(s.q[i - 1] - s.q[i], 1);
        }
        if i + 1 < n {
            f -= spec.interactions()[i].eval_deriv(s.q[i] - s.q[i + 1], 1);
        }
        if !spec.pinnings().is_empty() {
            f -= spec.pinnings()[i].eval_deriv(s.q[i], 1);
        }
        dp[i] = f;
    }
    TangentVector { dq, dp }
}

/// Same vector field evaluated in jet arithmetic.
pub fn vector_field_jets(spec: &ChainSpec, jets: &PhaseJets) -> (Vec<Jet>, Vec<Jet>) {
    let n = spec.n();
    let order = jets.order();
    let dq: Vec<Jet> = jets.p.to_vec();
    let mut diffs: Vec<Jet> = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        diffs.push(jets.q[i].sub(&jets.q[i + 1]));
    }
    let mut dp = Vec::with_capacity(n);
    for i in 0..n {
        let mut f = Jet::constant(0.0, order);
        if spec.is_damped(i) {
            f = f.sub(&jets.p[i]);
        }
        if i >= 1 {
            f = f.add(&spec.interactions()[i - 1].eval_deriv_jet(&diffs[i - 1], 1));
        }
        if i + 1 < n {
            f = f.sub(&spec.interactions()[i].eval_deriv_jet(&diffs[i], 1));
        }
        if !spec.pinnings().is_empty() {
            f = f.sub(&spec.pinnings()[i].eval_deriv_jet(&jets.q[i], 1));
        }
        dp.push(f);
    }
    (dq, dp)
}

/// Hamiltonian evaluated in jet arithmetic.
pub fn energy_jet(spec: &ChainSpec, jets: &PhaseJets) -> Jet {
    let order = jets.order();
    let mut h = Jet::constant(0.0, order);
    for p in &jets.p {
        h = h.add(&p.mul(p).scale(0.5));
    }
    for (i, v) in spec.interactions().iter().enumerate() {
        let d = jets.q[i].sub(&jets.q[i + 1]);
        h = h.add(&v.eval_deriv_jet(&d, 0));
    }
    for (i, u) in spec.pinnings().iter().enumerate() {
        h = h.add(&u.eval_deriv_jet(&jets.q[i], 0));
    }
    h
}

/// `xi_j = -V_j'(q_j - q_{j+1})` with the 1-based particle index and the
/// convention `xi_0 = 0`.
pub fn xi(spec: &ChainSpec, s: &State, j: usize) -> Result<f64, ChainError> {
    if j > spec.n() - 1 {
        return Err(ChainError::XiIndex(j, spec.n()));
    }
    if j == 0 {
        return Ok(0.0);
    }
    Ok(-spec.interaction(j).eval_deriv(s.q[j - 1] - s.q[j], 1))
}

/// Closed-form `L_F xi_j = -(p_j - p_{j+1}) V_j''(q_j - q_{j+1})`.
pub fn lie_xi(spec: &ChainSpec, s: &State, j: usize) -> Result<f64, ChainError> {
    if j > spec.n() - 1 {
        return Err(ChainError::XiIndex(j, spec.n()));
    }
    if j == 0 {
        return Ok(0.0);
    }
    let v2 = spec.interaction(j).eval_deriv(s.q[j - 1] - s.q[j], 2);
    Ok(-(s.p[j - 1] - s.p[j]) * v2)
}

/// Analytic directional derivative of the energy along the vector field,
/// `grad H . F`, evaluated by the chain rule. Equals `-sum_damped p_j^2`
/// as an algebraic identity; keeping the chain-rule route makes the
/// identity checkable rather than assumed.
pub fn lie_energy_analytic(spec: &ChainSpec, s: &State) -> f64 {
    let f = vector_field(spec, s);
    let n = spec.n();
    let mut grad_q = vec![0.0; n];
    for (i, v) in spec.interactions().iter().enumerate() {
        let d1 = v.eval_deriv(s.q[i] - s.q[i + 1], 1);
        grad_q[i] += d1;
        grad_q[i + 1] -= d1;
    }
    for (i, u) in spec.pinnings().iter().enumerate() {
        grad_q[i] += u.eval_deriv(s.q[i], 1);
    }
    let mut acc = 0.0;
    for i in 0..n {
        acc += s.p[i] * f.dp[i] + grad_q[i] * f.dq[i];
    }
    acc
}

/// `-sum_damped p_j^2`, the closed-form value of `L_F H`.
pub fn dissipation_rate(spec: &ChainSpec, s: &State) -> f64 {
    -s.p
        .iter()
        .zip(spec.damping_mask())
        .filter(|(_, &d)| d)
        .map(|(p, _)| p * p)
        .sum::<f64>()
}

/// Scalar observables shared across the crate; `W` lives in
/// `rotor_lyapunov` as it needs calibrated coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    Energy,
    /// `p_j`, 1-based particle index.
    Momentum(usize),
    /// `p_j^2`, 1-based particle index.
    MomentumSquared(usize),
    /// `xi_j`, 1-based index (`xi_0 = 0`).
    Xi(usize),
}

impl Observable {
    pub fn eval(&self, spec: &ChainSpec, s: &State) -> f64 {
        match *self {
            Observable::Energy => energy(spec, s),
            Observable::Momentum(j) => s.p[j - 1],
            Observable::MomentumSquared(j) => s.p[j - 1] * s.p[j - 1],
            Observable::Xi(j) => xi(spec, s, j).expect("xi index"),
        }
    }

    pub fn eval_jet(&self, spec: &ChainSpec, jets: &PhaseJets) -> Jet {
        match *self {
            Observable::Energy => energy_jet(spec, jets),
            Observable::Momentum(j) => jets.p[j - 1].clone(),
            Observable::MomentumSquared(j) => jets.p[j - 1].mul(&jets.p[j - 1]),
            Observable::Xi(j) => {
                if j == 0 {
                    Jet::constant(0.0, jets.order())
                } else {
                    let d = jets.q[j - 1].sub(&jets.q[j]);
                    spec.interaction(j).eval_deriv_jet(&d, 1).neg()
                }
            }
        }
    }

    /// Second partial derivative in `p_j` (1-based), needed by the
    /// stochastic generator. Exact for these closed-form observables.
    pub fn d2_dp2(&self, _spec: &ChainSpec, _s: &State, j: usize) -> f64 {
        match *self {
            Observable::Energy => 1.0,
            Observable::Momentum(_) => 0.0,
            Observable::MomentumSquared(i) => {
                if i == j {
                    2.0
                } else {
                    0.0
                }
            }
            Observable::Xi(_) => 0.0,
        }
    }
}
