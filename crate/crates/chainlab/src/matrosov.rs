//! Generic construction of a strict Lyapunov function from a non-strict one.
//!
//! Starting from the energy `H` (non-strict: `L_F H = -sum_damped p^2 <= 0`)
//! and the non-degeneracy order `r` of its iterated Lie derivatives, the
//! strict function is
//!
//! ```text
//! W#(x) = A(W) - sum_{k=2..r} B_k(W) L^{k-1}_F W  L^k_F W
//! B_k   = 2^{(r-k)(r-k+1)} (Phi^2 / phi)^{r-k}
//! A'    > Phi^2 sum_k |B_k'| + Phi B_2 + 1
//! ```
//!
//! where `phi`, `Phi` envelope the Lie-derivative magnitudes on level sets:
//!
//! ```text
//! |L_F W| + sum_{k=2..r} |L^k_F W|^2  >=  phi(W)
//! |L^k_F W|  <=  Phi(W)    for k <= r+1,      with phi <= Phi^2
//! ```
//!
//! With these choices `L_F W# <= -phi(W)/4` outside the cutoff collar.
//!
//! The envelopes here are *sampled* minima/maxima over level sets with
//! explicit safety factors (0.5 down, 2 up), tabulated on a log grid with
//! log-linear interpolation. Everything downstream of the tables is exact:
//! the `B_k` closed form is cross-checked against its recursion
//! `B_{k-1} = 4 B_k^2 / B_{k+1}`, and `A` is integrated so its slope clears
//! the required bound on every grid cell. Certification over fresh samples
//! is therefore statistical, not rigorous, evidence; reports say so.

use rand::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{energy, energy_jet, ChainKind, ChainSpec, State};
use crate::jets::lie_derivatives;
use crate::potentials::validate_oscillator_potentials;
use crate::sampling::{sample_on_level, stream_rng};

#[derive(Debug, thiserror::Error)]
pub enum MatrosovError {
    #[error("sampled envelope floor vanished at level w = {w:.6e}: min = {min:.3e} (non-degeneracy assumption fails there)")]
    EnvelopeDegenerate { w: f64, min: f64 },
    #[error("level-set sampling failed at w = {0}")]
    SamplingFailed(f64),
    #[error("oscillator potentials failed validation: {0:?}")]
    ValidationFailed(Vec<String>),
    #[error("table values overflowed the float range (r too large for this energy window)")]
    Overflow,
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed table file: {0}")]
    Parse(String),
}

/// Build settings. `r` and `q_threshold` default from the chain
/// classification when unset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrosovConfig {
    pub r: Option<usize>,
    pub q_threshold: Option<f64>,
    pub eps: f64,
    pub w_max: f64,
    pub levels_per_decade: usize,
    pub budget_per_level: usize,
    /// phi is the sampled min times this factor (down-safety).
    pub safety_phi: f64,
    /// Phi is the sampled max times this factor (up-safety).
    pub safety_cap: f64,
    /// Finite-difference `|B_k'|` estimates are inflated by this factor.
    pub deriv_inflation: f64,
    /// Degeneracy alarm: fail when the sampled min falls below
    /// `floor * (1 + w)^2`.
    pub degeneracy_floor: f64,
}

impl Default for MatrosovConfig {
    fn default() -> Self {
        MatrosovConfig {
            r: None,
            q_threshold: None,
            eps: 1.0,
            w_max: 1e3,
            levels_per_decade: 64,
            budget_per_level: 256,
            safety_phi: 0.5,
            safety_cap: 2.0,
            deriv_inflation: 2.0,
            degeneracy_floor: 1e-10,
        }
    }
}

/// Tabulated envelopes and the derived `B_k`, `A` tables on a log grid over
/// `(Q + eps/2, w_max]`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrosovData {
    pub r: usize,
    pub q_threshold: f64,
    pub eps: f64,
    /// Grid levels, increasing.
    pub grid: Vec<f64>,
    pub phi: Vec<f64>,
    /// `Phi` (capital) envelope.
    pub cap: Vec<f64>,
    /// `b[k - 2][i]` holds `B_k(grid[i])` for `k = 2..=r`.
    pub b: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    /// Raw sampled minima/maxima before safety factors (kept for audit).
    pub raw_min: Vec<f64>,
    pub raw_max: Vec<f64>,
}

fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).ceil() as usize).max(2);
    (0..=n)
        .map(|i| lo * 10f64.powf(decades * i as f64 / n as f64))
        .collect()
}

/// Level-set sampler mix: full kinetic sweep plus `p ~ 0` slices, where the
/// high-order states live.
fn level_beta(rng: &mut impl Rng, i: usize) -> f64 {
    match i % 4 {
        0 => 1.0,
        1 => 0.9 + 0.1 * rng.random::<f64>(),
        _ => rng.random::<f64>(),
    }
}

/// Sample `|L_F W| + sum |L^k_F W|^2` minima and `max_k |L^k_F W|` maxima
/// per grid level.
pub fn estimate_envelopes(
    spec: &ChainSpec,
    r: usize,
    grid: &[f64],
    budget_per_level: usize,
    degeneracy_floor: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>), MatrosovError> {
    let mut mins = Vec::with_capacity(grid.len());
    let mut maxs = Vec::with_capacity(grid.len());
    for (li, &w) in grid.iter().enumerate() {
        let mut rng = stream_rng(seed, 0xe57, li as u64);
        let mut m = f64::INFINITY;
        let mut cap: f64 = 0.0;
        let mut got = 0;
        for i in 0..budget_per_level {
            let beta = level_beta(&mut rng, i);
            let Some(s) = sample_on_level(spec, &mut rng, w, beta) else {
                continue;
            };
            let Ok(lie) = lie_derivatives(spec, &s, energy_jet, r + 1) else {
                return Err(MatrosovError::Overflow);
            };
            let mut sum = lie[1].abs();
            for lk in lie.iter().take(r + 1).skip(2) {
                sum += lk * lk;
            }
            m = m.min(sum);
            for lk in lie.iter().skip(1) {
                cap = cap.max(lk.abs());
            }
            got += 1;
        }
        if got == 0 {
            return Err(MatrosovError::SamplingFailed(w));
        }
        if m <= degeneracy_floor * (1.0 + w) * (1.0 + w) {
            return Err(MatrosovError::EnvelopeDegenerate { w, min: m });
        }
        mins.push(m);
        maxs.push(cap);
    }
    Ok((mins, maxs))
}

/// Assemble the full table set for a chain. `r` and `Q` follow the
/// classification defaults unless overridden: oscillators use the validated
/// threshold with `Q = max H` over the equilibrium box (0 for strictly
/// convex chains), rotators use `r = 4N - 3` with `Q` above the potential
/// ceiling (noting this `r` differs from the oscillator thresholds).
pub fn build(
    spec: &ChainSpec,
    cfg: &MatrosovConfig,
    seed: u64,
) -> Result<MatrosovData, MatrosovError> {
    let (r_default, q_default) = match spec.kind() {
        ChainKind::Oscillator => {
            let val = validate_oscillator_potentials(spec);
            if !val.pass {
                return Err(MatrosovError::ValidationFailed(val.messages));
            }
            let r = val.r.unwrap();
            let q = match val.class.unwrap() {
                crate::potentials::OscClass::StrictlyConvex => {
                    energy(spec, &State::zero(spec))
                }
                crate::potentials::OscClass::GeneralConvexAtInfinity => {
                    // Conservative: max potential energy over the certified
                    // equilibrium box.
                    let cert = crate::oscillators::certify_box(spec, &val);
                    let mut rng = stream_rng(seed, 0x9b0c, 0);
                    let n = spec.n();
                    let mut q_max: f64 = 0.0;
                    for _ in 0..20_000 {
                        let q: Vec<f64> = (0..n)
                            .map(|_| rng.random_range(-cert.b..cert.a))
                            .collect();
                        let pot = energy(spec, &State { p: vec![0.0; n], q });
                        q_max = q_max.max(pot);
                    }
                    1.5 * q_max
                }
            };
            (r, q)
        }
        ChainKind::Rotator => {
            let r = 4 * spec.n() - 3;
            (r, spec.potential_sup_bound() + 1.0)
        }
    };
    let r = cfg.r.unwrap_or(r_default);
    let q_threshold = cfg.q_threshold.unwrap_or(q_default);
    let w_lo = q_threshold + cfg.eps / 2.0;
    assert!(cfg.w_max > w_lo, "w_max must exceed Q + eps/2");
    let grid = log_grid(w_lo.max(1e-6), cfg.w_max, cfg.levels_per_decade);

    let (raw_min, raw_max) = estimate_envelopes(
        spec,
        r,
        &grid,
        cfg.budget_per_level,
        cfg.degeneracy_floor,
        seed,
    )?;

    // Neighborhood-enveloped tables with safety factors, then the phi <= Phi^2
    // clamp.
    let n = grid.len();
    let window = |v: &[f64], i: usize, lower: bool| -> f64 {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(n - 1);
        let it = v[lo..=hi].iter().copied();
        if lower {
            it.fold(f64::INFINITY, f64::min)
        } else {
            it.fold(0.0, f64::max)
        }
    };
    let mut phi: Vec<f64> = (0..n)
        .map(|i| cfg.safety_phi * window(&raw_min, i, true))
        .collect();
    let cap: Vec<f64> = (0..n)
        .map(|i| cfg.safety_cap * window(&raw_max, i, false))
        .collect();
    for i in 0..n {
        phi[i] = phi[i].min(cap[i] * cap[i]);
    }

    // B_k closed form from the envelope ratio.
    let mut b = vec![vec![0.0; n]; r - 1];
    for i in 0..n {
        let ratio = cap[i] * cap[i] / phi[i];
        for k in 2..=r {
            let e = (r - k) as i32;
            let val = 2f64.powi(e * (e + 1)) * ratio.powi(e);
            if !val.is_finite() {
                return Err(MatrosovError::Overflow);
            }
            b[k - 2][i] = val;
        }
    }

    // A' > Phi^2 sum |B_k'| + Phi B_2 + 1 cellwise: integrate with the
    // cell-max of the right-hand side plus a unit margin, then inflate so
    // that A(w) >= sum_k B_k Phi^2 + w (properness of W#).
    let bprime = b_deriv_tables(&grid, &b, cfg.deriv_inflation);
    let rhs: Vec<f64> = (0..n)
        .map(|i| {
            let sum_bp: f64 = bprime.iter().map(|tbl| tbl[i]).sum();
            cap[i] * cap[i] * sum_bp + cap[i] * b[0][i] + 1.0
        })
        .collect();
    let mut a = vec![0.0; n];
    for i in 1..n {
        let slope = rhs[i - 1].max(rhs[i]) + 1.0;
        a[i] = a[i - 1] + slope * (grid[i] - grid[i - 1]);
        if !a[i].is_finite() {
            return Err(MatrosovError::Overflow);
        }
    }
    let mut lift: f64 = 0.0;
    for i in 0..n {
        let needed: f64 = b.iter().map(|tbl| tbl[i]).sum::<f64>() * cap[i] * cap[i] + grid[i];
        lift = lift.max(needed - a[i]);
    }
    if lift > 0.0 {
        for ai in &mut a {
            *ai += lift;
        }
    }

    Ok(MatrosovData {
        r,
        q_threshold,
        eps: cfg.eps,
        grid,
        phi,
        cap,
        b,
        a,
        raw_min,
        raw_max,
    })
}

/// `|B_k'|` tables: worst adjacent finite difference, inflated.
fn b_deriv_tables(grid: &[f64], b: &[Vec<f64>], inflation: f64) -> Vec<Vec<f64>> {
    let n = grid.len();
    b.iter()
        .map(|tbl| {
            (0..n)
                .map(|i| {
                    let mut d: f64 = 0.0;
                    if i > 0 {
                        d = d.max(((tbl[i] - tbl[i - 1]) / (grid[i] - grid[i - 1])).abs());
                    }
                    if i + 1 < n {
                        d = d.max(((tbl[i + 1] - tbl[i]) / (grid[i + 1] - grid[i])).abs());
                    }
                    inflation * d
                })
                .collect()
        })
        .collect()
}

impl MatrosovData {
    /// Cell index and log-space fraction for `w`; clamps below the grid and
    /// extrapolates above it (flagged).
    fn locate(&self, w: f64) -> (usize, f64, bool) {
        let n = self.grid.len();
        if w <= self.grid[0] {
            return (0, 0.0, w < self.grid[0] * (1.0 - 1e-12));
        }
        if w >= self.grid[n - 1] {
            let i = n - 2;
            let t = (w / self.grid[i]).ln() / (self.grid[i + 1] / self.grid[i]).ln();
            return (i, t, w > self.grid[n - 1] * (1.0 + 1e-12));
        }
        let mut lo = 0;
        let mut hi = n - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.grid[mid] <= w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (w / self.grid[lo]).ln() / (self.grid[lo + 1] / self.grid[lo]).ln();
        (lo, t, false)
    }

    fn log_lerp(&self, tbl: &[f64], w: f64) -> f64 {
        let (i, t, _) = self.locate(w);
        (tbl[i].ln() * (1.0 - t) + tbl[i + 1].ln() * t).exp()
    }

    pub fn extrapolates(&self, w: f64) -> bool {
        self.locate(w).2
    }

    pub fn phi_at(&self, w: f64) -> f64 {
        self.log_lerp(&self.phi, w)
    }

    pub fn cap_at(&self, w: f64) -> f64 {
        self.log_lerp(&self.cap, w)
    }

    pub fn b_at(&self, k: usize, w: f64) -> f64 {
        self.log_lerp(&self.b[k - 2], w)
    }

    /// Analytic derivative of the log-linear interpolant within its cell.
    pub fn b_deriv_at(&self, k: usize, w: f64) -> f64 {
        let (i, _, _) = self.locate(w);
        let tbl = &self.b[k - 2];
        let slope = (tbl[i + 1] / tbl[i]).ln() / (self.grid[i + 1] / self.grid[i]).ln();
        slope * self.b_at(k, w) / w
    }

    /// `A` interpolates linearly (it crosses zero), its derivative is the
    /// cell slope.
    pub fn a_at(&self, w: f64) -> f64 {
        let (i, _, _) = self.locate(w);
        let t = (w - self.grid[i]) / (self.grid[i + 1] - self.grid[i]);
        self.a[i] * (1.0 - t) + self.a[i + 1] * t
    }

    pub fn a_deriv_at(&self, w: f64) -> f64 {
        let (i, _, _) = self.locate(w);
        (self.a[i + 1] - self.a[i]) / (self.grid[i + 1] - self.grid[i])
    }

    /// C1 smoothstep cutoff: 0 below `Q + eps/2`, 1 above `Q + eps`.
    pub fn cutoff(&self, w: f64) -> f64 {
        let lo = self.q_threshold + self.eps / 2.0;
        let hi = self.q_threshold + self.eps;
        if w <= lo {
            0.0
        } else if w >= hi {
            1.0
        } else {
            let s = (w - lo) / (hi - lo);
            s * s * (3.0 - 2.0 * s)
        }
    }

    fn cutoff_deriv(&self, w: f64) -> f64 {
        let lo = self.q_threshold + self.eps / 2.0;
        let hi = self.q_threshold + self.eps;
        if w <= lo || w >= hi {
            0.0
        } else {
            let s = (w - lo) / (hi - lo);
            6.0 * s * (1.0 - s) / (hi - lo)
        }
    }

    /// Worst relative disagreement between the stored `B_k` tables and the
    /// downward recursion `B_{k-1} = 4 B_k^2 / B_{k+1}` seeded by `B_r = 1`,
    /// `B_{r-1} = 4 Phi^2/phi`. Coherent data keeps this at roundoff.
    pub fn bk_consistency(&self) -> f64 {
        let r = self.r;
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let ratio = self.cap[i] * self.cap[i] / self.phi[i];
            let mut rec = vec![0.0; r + 2];
            rec[r] = 1.0;
            if r >= 2 {
                rec[r - 1] = 4.0 * ratio;
            }
            for k in (2..r.saturating_sub(1).max(2)).rev() {
                rec[k] = 4.0 * rec[k + 1] * rec[k + 1] / rec[k + 2];
            }
            for k in 2..=r {
                let stored = self.b[k - 2][i];
                let rel = (stored - rec[k]).abs() / stored.abs().max(rec[k].abs());
                worst = worst.max(rel);
            }
        }
        worst
    }
}

/// `W#` at a state: the cutoff times `A(W) - sum B_k L^{k-1}W L^kW`, zero
/// inside the compact set. The flag marks table extrapolation above
/// `w_max`.
pub fn eval_wsharp(spec: &ChainSpec, data: &MatrosovData, s: &State) -> (f64, bool) {
    let w = energy(spec, s);
    if w <= data.q_threshold + data.eps / 2.0 {
        return (0.0, false);
    }
    let lie = lie_derivatives(spec, s, energy_jet, data.r).expect("lie derivatives");
    let mut core = data.a_at(w);
    for k in 2..=data.r {
        core -= data.b_at(k, w) * lie[k - 1] * lie[k];
    }
    (core * data.cutoff(w), data.extrapolates(w))
}

/// `L_F W#` with the tables treated as smooth interpolants (their grid-local
/// derivatives are analytic within each cell).
pub fn lie_wsharp(spec: &ChainSpec, data: &MatrosovData, s: &State) -> f64 {
    let w = energy(spec, s);
    if w <= data.q_threshold + data.eps / 2.0 {
        return 0.0;
    }
    let lie = lie_derivatives(spec, s, energy_jet, data.r + 1).expect("lie derivatives");
    let l1 = lie[1];
    let mut bracket = data.a_deriv_at(w);
    let mut quadratic = 0.0;
    for k in 2..=data.r {
        let bk = data.b_at(k, w);
        bracket -= data.b_deriv_at(k, w) * lie[k - 1] * lie[k];
        quadratic += bk * (lie[k] * lie[k] + lie[k - 1] * lie[k + 1]);
    }
    let core_lie = bracket * l1 - quadratic;
    let chi = data.cutoff(w);
    if chi >= 1.0 {
        core_lie
    } else {
        let mut core = data.a_at(w);
        for k in 2..=data.r {
            core -= data.b_at(k, w) * lie[k - 1] * lie[k];
        }
        chi * core_lie + data.cutoff_deriv(w) * l1 * core
    }
}

/// Strictness certification report.
#[derive(Clone, Debug)]
pub struct CertReport {
    /// Data-coherence precheck outcome (table invariants).
    pub coherent: bool,
    pub coherence_messages: Vec<String>,
    pub samples: usize,
    /// max of `L_F W# + phi(W)/4` (strictness demands <= 0).
    pub max_violation: f64,
    /// min of `-L_F W# / (phi(W)/4)` (certificate headroom).
    pub min_slack: f64,
    pub violations: usize,
    pub pass: bool,
}

/// Verify the stored tables' invariants, then sample fresh states with
/// `W in (Q + eps, w_max]` and check `L_F W# <= -phi(W)/4` on each.
pub fn certify_strictness(
    spec: &ChainSpec,
    data: &MatrosovData,
    budget: usize,
    seed: u64,
) -> CertReport {
    let mut messages = Vec::new();
    let n = data.grid.len();
    let r = data.r;

    for i in 0..n {
        if data.phi[i] > data.cap[i] * data.cap[i] * (1.0 + 1e-12) {
            messages.push(format!(
                "phi > Phi^2 at w = {:.6e} (envelope ordering violated)",
                data.grid[i]
            ));
            break;
        }
    }
    let bk_rel = data.bk_consistency();
    if bk_rel > 1e-12 {
        messages.push(format!(
            "B_k tables disagree with their recursion (worst rel {bk_rel:.3e})"
        ));
    }
    if data.b.iter().any(|tbl| tbl.iter().any(|&v| v < 1.0)) {
        messages.push("some B_k < 1".into());
    }
    // Chebyshev-mean inequality B_k <= sqrt(B_{k-1} B_{k+1}) / 2.
    'outer: for k in 3..r {
        for i in 0..n {
            let lhs = data.b[k - 2][i];
            let rhs = (data.b[k - 3][i] * data.b[k - 1][i]).sqrt() / 2.0;
            if lhs > rhs * (1.0 + 1e-9) {
                messages.push(format!("mean inequality fails at k = {k}, w = {:.3e}", data.grid[i]));
                break 'outer;
            }
        }
    }
    for i in 1..n {
        if data.a[i] <= data.a[i - 1] {
            messages.push("A is not strictly increasing".into());
            break;
        }
    }
    // A' must clear the required slope on every cell; the uninflated finite
    // difference is the conservative lower estimate of what the build used.
    let bprime = b_deriv_tables(&data.grid, &data.b, 1.0);
    let mut slope_bad = 0;
    for i in 1..n {
        let slope = (data.a[i] - data.a[i - 1]) / (data.grid[i] - data.grid[i - 1]);
        for j in [i - 1, i] {
            let sum_bp: f64 = bprime.iter().map(|tbl| tbl[j]).sum();
            let rhs = data.cap[j] * data.cap[j] * sum_bp + data.cap[j] * data.b[0][j] + 1.0;
            if slope <= rhs {
                slope_bad += 1;
            }
        }
    }
    if slope_bad > 0 {
        messages.push(format!("A' fails the slope bound on {slope_bad} cell ends"));
    }
    // Properness proxy: A >= sum B_k Phi^2 + w at the nodes.
    for i in 0..n {
        let needed: f64 =
            data.b.iter().map(|tbl| tbl[i]).sum::<f64>() * data.cap[i] * data.cap[i]
                + data.grid[i];
        if data.a[i] < needed * (1.0 - 1e-12) {
            messages.push("A properness inflation violated".into());
            break;
        }
    }
    let coherent = messages.is_empty();

    let w_lo = data.q_threshold + data.eps;
    let w_hi = *data.grid.last().unwrap();
    let mut rng = stream_rng(seed, 0xce87, 0);
    let mut max_violation = f64::NEG_INFINITY;
    let mut min_slack = f64::INFINITY;
    let mut violations = 0;
    let mut samples = 0;
    for i in 0..budget {
        let w = w_lo * (w_hi / w_lo).powf(rng.random::<f64>());
        let beta = level_beta(&mut rng, i);
        let Some(s) = sample_on_level(spec, &mut rng, w, beta) else {
            continue;
        };
        let w_actual = energy(spec, &s);
        if w_actual <= w_lo {
            continue;
        }
        let lw = lie_wsharp(spec, data, &s);
        let phi4 = data.phi_at(w_actual) / 4.0;
        let viol = lw + phi4;
        max_violation = max_violation.max(viol);
        min_slack = min_slack.min(-lw / phi4);
        if viol > 0.0 {
            violations += 1;
        }
        samples += 1;
    }

    CertReport {
        coherent,
        coherence_messages: messages,
        samples,
        max_violation,
        min_slack,
        violations,
        pass: coherent && violations == 0,
    }
}

/// Negative-control corruption: inflate the stored `phi` table in place
/// (invalidating the certificate's envelope claim) without rebuilding the
/// dependent tables.
pub fn corrupt_phi(data: &mut MatrosovData, factor: f64) {
    for v in &mut data.phi {
        *v *= factor;
    }
}

/// Persist tables as CSV plus a small TOML header (versioned, replayable).
pub fn save(data: &MatrosovData, dir: &std::path::Path) -> Result<(), MatrosovError> {
    std::fs::create_dir_all(dir)?;
    let meta = MatrosovMeta {
        version: 1,
        r: data.r,
        q_threshold: data.q_threshold,
        eps: data.eps,
        levels: data.grid.len(),
    };
    let meta_str = toml::to_string(&meta).expect("meta serializes");
    std::fs::write(dir.join("matrosov_meta.toml"), meta_str)?;
    let mut csv = String::from("w,phi,cap,raw_min,raw_max,a");
    for k in 2..=data.r {
        csv.push_str(&format!(",b{k}"));
    }
    csv.push('\n');
    for i in 0..data.grid.len() {
        csv.push_str(&format!(
            "{},{},{},{},{},{}",
            data.grid[i], data.phi[i], data.cap[i], data.raw_min[i], data.raw_max[i], data.a[i]
        ));
        for k in 2..=data.r {
            csv.push_str(&format!(",{}", data.b[k - 2][i]));
        }
        csv.push('\n');
    }
    std::fs::write(dir.join("matrosov_tables.csv"), csv)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct MatrosovMeta {
    version: u32,
    r: usize,
    q_threshold: f64,
    eps: f64,
    levels: usize,
}

pub fn load(dir: &std::path::Path) -> Result<MatrosovData, MatrosovError> {
    let meta_str = std::fs::read_to_string(dir.join("matrosov_meta.toml"))?;
    let meta: MatrosovMeta =
        toml::from_str(&meta_str).map_err(|e| MatrosovError::Parse(e.to_string()))?;
    let body = std::fs::read_to_string(dir.join("matrosov_tables.csv"))?;
    let mut lines = body.lines();
    let _header = lines.next().ok_or_else(|| MatrosovError::Parse("empty".into()))?;
    let mut grid = Vec::new();
    let mut phi = Vec::new();
    let mut cap = Vec::new();
    let mut raw_min = Vec::new();
    let mut raw_max = Vec::new();
    let mut a = Vec::new();
    let mut b = vec![Vec::new(); meta.r - 1];
    for line in lines {
        let f: Vec<f64> = line
            .split(',')
            .map(|x| x.parse::<f64>().map_err(|e| MatrosovError::Parse(e.to_string())))
            .collect::<Result<_, _>>()?;
        if f.len() != 6 + meta.r - 1 {
            return Err(MatrosovError::Parse(format!(
                "expected {} columns, got {}",
                6 + meta.r - 1,
                f.len()
            )));
        }
        grid.push(f[0]);
        phi.push(f[1]);
        cap.push(f[2]);
        raw_min.push(f[3]);
        raw_max.push(f[4]);
        a.push(f[5]);
        for (k, tbl) in b.iter_mut().enumerate() {
            tbl.push(f[6 + k]);
        }
    }
    if grid.len() != meta.levels {
        return Err(MatrosovError::Parse("level count mismatch".into()));
    }
    Ok(MatrosovData {
        r: meta.r,
        q_threshold: meta.q_threshold,
        eps: meta.eps,
        grid,
        phi,
        cap,
        b,
        a,
        raw_min,
        raw_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Potential;

    fn quad2() -> ChainSpec {
        ChainSpec::oscillator_uniform(2, Potential::harmonic(), Potential::harmonic()).unwrap()
    }

    fn small_cfg() -> MatrosovConfig {
        MatrosovConfig {
            w_max: 100.0,
            levels_per_decade: 16,
            budget_per_level: 64,
            ..MatrosovConfig::default()
        }
    }

    #[test]
    fn bk_closed_form_example_r4() {
        // Constant envelopes with Phi^2/phi = 1: B2 = 64, B3 = 4, B4 = 1,
        // and the mean inequality is tight at k = 3.
        let data = MatrosovData {
            r: 4,
            q_threshold: 0.0,
            eps: 1.0,
            grid: vec![1.0, 10.0],
            phi: vec![1.0, 1.0],
            cap: vec![1.0, 1.0],
            b: vec![vec![64.0, 64.0], vec![4.0, 4.0], vec![1.0, 1.0]],
            a: vec![0.0, 1.0],
            raw_min: vec![1.0, 1.0],
            raw_max: vec![1.0, 1.0],
        };
        assert!(data.bk_consistency() < 1e-15);
        let b3 = 4.0f64;
        let mean = (64.0f64 * 1.0).sqrt() / 2.0;
        assert_eq!(b3, mean);
    }

    #[test]
    fn build_quadratic_n2() {
        let spec = quad2();
        let data = build(&spec, &small_cfg(), 9).unwrap();
        assert_eq!(data.r, 7);
        assert_eq!(data.q_threshold, 0.0);
        assert!(data.bk_consistency() < 1e-12);
        // B_r is identically 1, B_{r-1} = 4 Phi^2/phi.
        for i in 0..data.grid.len() {
            assert_eq!(data.b[7 - 2][i], 1.0);
            let expect = 4.0 * data.cap[i] * data.cap[i] / data.phi[i];
            assert!((data.b[6 - 2][i] - expect).abs() / expect < 1e-12);
            assert!(data.phi[i] <= data.cap[i] * data.cap[i] * (1.0 + 1e-12));
        }
        // A strictly increasing and proper.
        for i in 1..data.grid.len() {
            assert!(data.a[i] > data.a[i - 1]);
        }
    }

    #[test]
    fn wsharp_zero_inside_compact_set() {
        let spec = quad2();
        let data = build(&spec, &small_cfg(), 9).unwrap();
        let s = State::new(&spec, vec![0.1, 0.0], vec![0.2, -0.1]);
        let w = energy(&spec, &s);
        assert!(w < data.q_threshold + data.eps / 2.0);
        assert_eq!(eval_wsharp(&spec, &data, &s).0, 0.0);
    }

    #[test]
    fn a_table_is_proper_and_dominant() {
        let spec = quad2();
        let data = build(&spec, &small_cfg(), 9).unwrap();
        // A(w) >= sum_k B_k(w) Phi(w)^2 + w at every node, so W# >= W - Q - eps
        // wherever the correction sum is active (sublevel sets of W# nest
        // inside sublevel sets of W).
        for i in 0..data.grid.len() {
            let needed: f64 = data.b.iter().map(|t| t[i]).sum::<f64>()
                * data.cap[i]
                * data.cap[i]
                + data.grid[i];
            assert!(data.a[i] >= needed - 1e-9 * needed.abs());
        }
    }

    #[test]
    fn wsharp_dominates_w_on_samples() {
        let spec = quad2();
        let data = build(&spec, &small_cfg(), 9).unwrap();
        let mut rng = stream_rng(77, 0, 0);
        for _ in 0..200 {
            let w = 2.0 + rng.random::<f64>() * 90.0;
            let beta = rng.random::<f64>();
            let Some(s) = sample_on_level(&spec, &mut rng, w, beta) else {
                continue;
            };
            let (ws, extrap) = eval_wsharp(&spec, &data, &s);
            assert!(!extrap);
            let w_actual = energy(&spec, &s);
            assert!(
                ws >= w_actual - data.q_threshold - data.eps - 1e-9 * ws.abs().max(1.0),
                "W# = {ws} below properness floor at W = {w_actual}"
            );
        }
    }

    #[test]
    fn certification_passes_and_corruption_fails() {
        let spec = quad2();
        let data = build(&spec, &small_cfg(), 9).unwrap();
        let rep = certify_strictness(&spec, &data, 800, 33);
        assert!(rep.coherent, "{:?}", rep.coherence_messages);
        assert!(rep.pass, "violations {} max {}", rep.violations, rep.max_violation);
        assert!(rep.min_slack >= 1.0);

        let mut bad = data.clone();
        corrupt_phi(&mut bad, 100.0);
        let rep = certify_strictness(&spec, &bad, 800, 33);
        assert!(!rep.pass);
        assert!(!rep.coherent);
    }

    #[test]
    fn rotator_build_uses_its_own_threshold() {
        // r defaults to 4N - 3 for rotator chains, with Q above the
        // potential ceiling so every grid level set is nonempty.
        let spec =
            crate::chain::ChainSpec::rotator_uniform(2, Potential::cosine(2.0)).unwrap();
        let cfg = MatrosovConfig {
            w_max: 200.0,
            levels_per_decade: 12,
            budget_per_level: 48,
            ..MatrosovConfig::default()
        };
        let data = build(&spec, &cfg, 21).unwrap();
        assert_eq!(data.r, 5);
        assert!(data.q_threshold >= spec.potential_sup_bound());
        let rep = certify_strictness(&spec, &data, 400, 22);
        assert!(rep.coherent, "{:?}", rep.coherence_messages);
        assert!(rep.pass, "max violation {}", rep.max_violation);
    }

    #[test]
    fn undamped_chain_degenerates_the_envelope() {
        // With no dissipation every iterated Lie derivative of H vanishes
        // identically, so the envelope floor collapses.
        let spec = ChainSpec::oscillator_uniform(2, Potential::harmonic(), Potential::harmonic())
            .unwrap()
            .with_damping(vec![false, false])
            .unwrap();
        let grid = vec![1.0, 2.0, 4.0];
        match estimate_envelopes(&spec, 7, &grid, 32, 1e-10, 5) {
            Err(MatrosovError::EnvelopeDegenerate { w, min }) => {
                assert_eq!(w, 1.0);
                assert!(min.abs() < 1e-20);
            }
            other => panic!("expected EnvelopeDegenerate, got {other:?}"),
        }
    }

    #[test]
    fn save_load_roundtrip() {
        let spec = quad2();
        let data = build(&spec, &small_cfg(), 9).unwrap();
        let dir = std::env::temp_dir().join(format!("matrosov_rt_{}", std::process::id()));
        save(&data, &dir).unwrap();
        let back = load(&dir).unwrap();
        assert_eq!(data.grid, back.grid);
        assert_eq!(data.phi, back.phi);
        assert_eq!(data.a, back.a);
        assert_eq!(data.b, back.b);
        std::fs::remove_dir_all(&dir).ok();
    }
}
