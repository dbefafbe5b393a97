//! Time integration and the experiments built on it.
//!
//! Deterministic trajectories use the adaptive Dormand-Prince pair from
//! [`dopri`], with the dissipation ledger `z(t) = int_0^t sum_damped p_j^2`
//! integrated alongside the phase coordinates, so every run carries its own
//! energy audit: `H(0) - H(t) = z(t)` up to integrator tolerance.
//!
//! Stochastic (Langevin) trajectories use fixed-step Euler-Maruyama from
//! [`sde`]; only weak statistics are consumed downstream. [`decay`] runs the
//! energy-dissipation scaling experiment and [`generator`] the Monte-Carlo
//! consistency check of the stochastic generator.

pub mod decay;
pub mod dopri;
pub mod generator;
pub mod sde;

pub use dopri::SimError;

use std::time::Instant;

use crate::chain::{energy, ChainSpec, State};

/// Settings for a deterministic run.
#[derive(Clone, Copy, Debug)]
pub struct IntegrateOptions {
    /// Relative tolerance of the embedded pair.
    pub rtol: f64,
    /// Absolute tolerance floor.
    pub atol: f64,
    /// Number of evenly spaced dense-output samples (besides t = 0).
    pub samples: usize,
    /// Optional wall-clock cap; a capped run is returned truncated with
    /// `capped = true` (and is then no longer reproducible byte-for-byte,
    /// which every report states).
    pub wall_clock: Option<std::time::Duration>,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            rtol: 1e-10,
            atol: 1e-12,
            samples: 256,
            wall_clock: None,
        }
    }
}

/// Sampled deterministic or stochastic trajectory with its energy ledger.
#[derive(Clone, Debug)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub energies: Vec<f64>,
    /// Running `int_0^t sum_damped p_j^2 ds`.
    pub dissipated: Vec<f64>,
    /// RNG seed for stochastic runs.
    pub seed: Option<u64>,
    /// True when the wall-clock cap cut the run short.
    pub capped: bool,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl TrajectoryRecord {
    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn final_state(&self) -> &State {
        self.states.last().unwrap()
    }

    pub fn initial_energy(&self) -> f64 {
        self.energies[0]
    }

    /// Worst violation of `H(0) - H(t) = z(t)` over the samples, relative to
    /// `max(H(0), 1)`.
    pub fn ledger_residual(&self) -> f64 {
        let h0 = self.energies[0];
        let scale = h0.abs().max(1.0);
        self.energies
            .iter()
            .zip(&self.dissipated)
            .map(|(&h, &z)| ((h0 - h) - z).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Largest upward energy jump between consecutive samples (should be at
    /// integrator-noise level for damped runs).
    pub fn worst_energy_increase(&self) -> f64 {
        self.energies
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

fn pack(s: &State) -> Vec<f64> {
    let mut y = Vec::with_capacity(2 * s.q.len() + 1);
    y.extend_from_slice(&s.q);
    y.extend_from_slice(&s.p);
    y.push(0.0); // dissipation ledger
    y
}

fn unpack(spec: &ChainSpec, y: &[f64]) -> (State, f64) {
    let n = spec.n();
    // State::new keeps rotor coordinates canonical in the record; the
    // integrator's own variables stay unreduced for continuity.
    (
        State::new(spec, y[n..2 * n].to_vec(), y[..n].to_vec()),
        y[2 * n],
    )
}

/// Deterministic integration of the damped chain with dense-output sampling
/// and the dissipation ledger.
pub fn integrate(
    spec: &ChainSpec,
    s0: &State,
    t_end: f64,
    opts: &IntegrateOptions,
) -> Result<TrajectoryRecord, SimError> {
    let n = spec.n();
    let y0 = pack(s0);
    let rhs = |y: &[f64], dy: &mut [f64]| {
        // Inlined vector field on the packed layout to avoid allocation.
        let (q, rest) = y.split_at(n);
        let p = &rest[..n];
        dy[..n].copy_from_slice(p);
        let mut ledger = 0.0;
        for i in 0..n {
            let mut f = 0.0;
            if spec.is_damped(i) {
                f -= p[i];
                ledger += p[i] * p[i];
            }
            if i >= 1 {
                f += spec.interactions()[i - 1].eval_deriv(q[i - 1] - q[i], 1);
            }
            if i + 1 < n {
                f -= spec.interactions()[i].eval_deriv(q[i] - q[i + 1], 1);
            }
            if !spec.pinnings().is_empty() {
                f -= spec.pinnings()[i].eval_deriv(q[i], 1);
            }
            dy[n + i] = f;
        }
        dy[2 * n] = ledger;
    };

    let sample_times: Vec<f64> = (1..=opts.samples)
        .map(|i| t_end * i as f64 / opts.samples as f64)
        .collect();

    let mut times = vec![0.0];
    let mut states = vec![s0.clone()];
    let mut energies = vec![energy(spec, s0)];
    let mut dissipated = vec![0.0];
    let started = Instant::now();
    let mut capped = false;

    let (y_final, t_final, stats) = dopri::integrate_adaptive(
        rhs,
        &y0,
        0.0,
        t_end,
        opts.rtol,
        opts.atol,
        &sample_times,
        |t, y| {
            let (s, z) = unpack(spec, y);
            energies.push(energy(spec, &s));
            dissipated.push(z);
            states.push(s);
            times.push(t);
            if let Some(cap) = opts.wall_clock {
                if started.elapsed() > cap {
                    capped = true;
                    return false;
                }
            }
            true
        },
    )?;

    if !capped && times.last().copied() != Some(t_final) {
        let (s, z) = unpack(spec, &y_final);
        energies.push(energy(spec, &s));
        dissipated.push(z);
        states.push(s);
        times.push(t_final);
    }

    Ok(TrajectoryRecord {
        times,
        states,
        energies,
        dissipated,
        seed: None,
        capped,
        accepted_steps: stats.accepted,
        rejected_steps: stats.rejected,
    })
}
