//! Fixed-step Euler-Maruyama integration of the Langevin chain
//!
//! ```text
//! dq_j = p_j dt
//! dp_j = (force_j - [damped_j] p_j) dt + sqrt(2 T_j) dB_j     (T_j on damped ends)
//! ```
//!
//! Weak order 1 is all the downstream consumers need (generator checks and
//! thermostat statistics), so no higher-order scheme is attempted. Runs are
//! reproducible from the seed; ensembles assign one independent stream per
//! trajectory.

use rand::prelude::*;
use rand_distr::StandardNormal;

use crate::chain::{energy, vector_field, ChainSpec, State};
use crate::sampling::stream_rng;
use crate::sim::TrajectoryRecord;

/// One Euler-Maruyama step; noise applied only to damped particles with
/// nonzero temperature.
pub fn em_step(spec: &ChainSpec, s: &mut State, dt: f64, rng: &mut impl Rng) {
    let f = vector_field(spec, s);
    let sqdt = dt.sqrt();
    for i in 0..spec.n() {
        s.q[i] += f.dq[i] * dt;
        s.p[i] += f.dp[i] * dt;
        let t_i = spec.temperatures()[i];
        if spec.is_damped(i) && t_i > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            s.p[i] += (2.0 * t_i).sqrt() * sqdt * z;
        }
    }
}

/// Integrate the SDE to `t_end` with fixed step `dt`, recording about
/// `samples` evenly spaced states (always including start and end).
pub fn integrate_sde(
    spec: &ChainSpec,
    s0: &State,
    t_end: f64,
    dt: f64,
    seed: u64,
    samples: usize,
) -> TrajectoryRecord {
    assert!(dt > 0.0);
    let steps = (t_end / dt).round().max(1.0) as usize;
    let record_every = (steps / samples.max(1)).max(1);
    let mut rng = stream_rng(seed, 0x5de, 0);

    let mut s = s0.clone();
    let mut z = 0.0;
    let mut times = vec![0.0];
    let mut states = vec![s0.clone()];
    let mut energies = vec![energy(spec, s0)];
    let mut dissipated = vec![0.0];

    for step in 1..=steps {
        // Ledger uses the pre-step momenta (left-point rule, consistent with
        // the Euler-Maruyama discretization).
        for i in 0..spec.n() {
            if spec.is_damped(i) {
                z += s.p[i] * s.p[i] * dt;
            }
        }
        em_step(spec, &mut s, dt, &mut rng);
        if step % record_every == 0 || step == steps {
            times.push(step as f64 * dt);
            energies.push(energy(spec, &s));
            dissipated.push(z);
            states.push(s.clone());
        }
    }

    TrajectoryRecord {
        times,
        states,
        energies,
        dissipated,
        seed: Some(seed),
        capped: false,
        accepted_steps: steps,
        rejected_steps: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Potential;
    use crate::sim::{integrate, IntegrateOptions};
    use crate::stats;

    /// Constant interaction makes particle 1 an exact Ornstein-Uhlenbeck
    /// process: stationary variance of p_1 equals T_1.
    fn free_particle_spec(t1: f64) -> ChainSpec {
        ChainSpec::rotator_uniform(2, Potential::trig(1.0, vec![], vec![]))
            .unwrap()
            .with_temperatures(vec![t1, 0.0])
            .unwrap()
    }

    #[test]
    fn zero_temperature_matches_deterministic_within_order_one() {
        let spec = ChainSpec::rotator_uniform(2, Potential::cosine(2.0))
            .unwrap()
            .with_temperatures(vec![0.0, 0.0])
            .unwrap();
        let s0 = State::new(&spec, vec![1.0, -0.5], vec![0.2, 1.4]);
        let dt = 1e-4;
        let rec_sde = integrate_sde(&spec, &s0, 2.0, dt, 42, 8);
        let rec_det = integrate(&spec, &s0, 2.0, &IntegrateOptions::default()).unwrap();
        let end_sde = rec_sde.final_state();
        let end_det = rec_det.final_state();
        for i in 0..2 {
            assert!(
                (end_sde.p[i] - end_det.p[i]).abs() < 50.0 * dt,
                "p[{i}] {} vs {}",
                end_sde.p[i],
                end_det.p[i]
            );
        }
    }

    #[test]
    fn ou_stationary_variance_matches_temperature() {
        let t1 = 1.0;
        let spec = free_particle_spec(t1);
        let s0 = State::zero(&spec);
        let dt = 5e-3;
        let t_end = 20.0; // ~20 relaxation times
        let n_traj = 400;
        let p_sq: Vec<f64> = (0..n_traj)
            .map(|i| {
                let rec = integrate_sde(&spec, &s0, t_end, dt, 1000 + i, 2);
                let p = rec.final_state().p[0];
                p * p
            })
            .collect();
        let mean = stats::mean(&p_sq);
        let se = stats::stderr(&p_sq);
        assert!(
            (mean - t1).abs() <= 3.0 * se + 2.0 * dt,
            "E p^2 = {mean} +- {se}, expected {t1}"
        );
    }

    #[test]
    fn fixed_seed_reproduces_bitwise() {
        let spec = free_particle_spec(0.7);
        let s0 = State::zero(&spec);
        let a = integrate_sde(&spec, &s0, 1.0, 1e-3, 7, 16);
        let b = integrate_sde(&spec, &s0, 1.0, 1e-3, 7, 16);
        assert_eq!(a.states.last().unwrap().p, b.states.last().unwrap().p);
        assert_eq!(a.energies, b.energies);
        let c = integrate_sde(&spec, &s0, 1.0, 1e-3, 8, 16);
        assert_ne!(a.states.last().unwrap().p, c.states.last().unwrap().p);
    }
}
