//! State samplers and deterministic RNG streams.
//!
//! Every randomized routine in the crate derives its generator from
//! `(master seed, stream id, index)` so that ensembles are reproducible
//! bit-for-bit regardless of thread scheduling.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::chain::{energy, ChainKind, ChainSpec, State};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent generator for `(seed, stream, index)`.
pub fn stream_rng(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    let mixed = splitmix64(splitmix64(seed ^ stream.rotate_left(17)) ^ index);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// How the kinetic energy is distributed when sampling at a target energy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KineticLayout {
    /// `p` uniform on the momentum sphere of the residual kinetic energy.
    Sphere,
    /// Kinetic energy split across particles by a uniform simplex draw,
    /// momentum signs random.
    Split,
    /// All kinetic energy in the last particle (the slow-decay probe family).
    LastParticle,
}

/// Unit vector uniform on the sphere in `R^n`.
pub fn unit_sphere(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n)
            .map(|_| rand_distr::StandardNormal.sample(rng))
            .collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Uniform point on the standard simplex (shares of 1 across `n` slots).
pub fn simplex_shares(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Sample a rotator state with energy exactly `target_h` (up to roundoff):
/// coordinates uniform on the torus, then momenta carrying the residual
/// kinetic energy in the requested layout. `None` when `target_h` is below
/// the sampled potential level after a bounded number of retries.
pub fn sample_rotor_at_energy(
    spec: &ChainSpec,
    rng: &mut impl Rng,
    target_h: f64,
    layout: KineticLayout,
) -> Option<State> {
    assert_eq!(spec.kind(), ChainKind::Rotator);
    let n = spec.n();
    let tau = std::f64::consts::TAU;
    for _ in 0..64 {
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..tau)).collect();
        let pot = energy(spec, &State { p: vec![0.0; n], q: q.clone() });
        let kinetic = target_h - pot;
        if kinetic < 0.0 {
            continue;
        }
        let p = match layout {
            KineticLayout::Sphere => {
                let dir = unit_sphere(rng, n);
                let r = (2.0 * kinetic).sqrt();
                dir.into_iter().map(|d| r * d).collect()
            }
            KineticLayout::Split => {
                let shares = simplex_shares(rng, n);
                shares
                    .into_iter()
                    .map(|s| {
                        let mag = (2.0 * kinetic * s).sqrt();
                        if rng.random::<bool>() {
                            mag
                        } else {
                            -mag
                        }
                    })
                    .collect()
            }
            KineticLayout::LastParticle => {
                let mut p = vec![0.0; n];
                p[n - 1] = if rng.random::<bool>() {
                    (2.0 * kinetic).sqrt()
                } else {
                    -(2.0 * kinetic).sqrt()
                };
                p
            }
        };
        return Some(State::new(spec, p, q));
    }
    None
}

/// Monotone scalar root: smallest `s > 0` with `f(s) = 0`, for `f`
/// increasing once it crosses; bracket by doubling then bisect.
pub fn solve_increasing(f: impl Fn(f64) -> f64, s0: f64) -> Option<f64> {
    let mut hi = s0.max(1e-8);
    let mut tries = 0;
    while f(hi) < 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi.max(1.0) {
            break;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Sample a state on the energy level set `{H = w}` for any chain kind:
/// the coordinate ray is scaled so the potential part equals `beta * w`
/// (1-D root finding along the ray), then the momentum ray is scaled so the
/// total is `w`. `beta = 1` gives the `p = 0` slice.
pub fn sample_on_level(
    spec: &ChainSpec,
    rng: &mut impl Rng,
    w: f64,
    beta: f64,
) -> Option<State> {
    let n = spec.n();
    let q = match spec.kind() {
        ChainKind::Rotator => {
            // Torus coordinates: uniform q, retry until the potential fits.
            let tau = std::f64::consts::TAU;
            let mut q = None;
            for _ in 0..64 {
                let cand: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..tau)).collect();
                let pot = energy(spec, &State { p: vec![0.0; n], q: cand.clone() });
                if pot <= w {
                    q = Some(cand);
                    break;
                }
            }
            q?
        }
        ChainKind::Oscillator => {
            let dir = unit_sphere(rng, n);
            let pot_target = (beta * w).max(0.0);
            let pot_on_ray = |s: f64| {
                let q: Vec<f64> = dir.iter().map(|d| s * d).collect();
                energy(spec, &State { p: vec![0.0; n], q }) - pot_target
            };
            let s = solve_increasing(pot_on_ray, 1.0)?;
            dir.iter().map(|d| s * d).collect()
        }
    };
    let pot = energy(spec, &State { p: vec![0.0; n], q: q.clone() });
    if pot > w * (1.0 + 1e-12) {
        return None;
    }
    let dir = unit_sphere(rng, n);
    let q2 = q.clone();
    let h_on_ray = |s: f64| {
        let p: Vec<f64> = dir.iter().map(|d| s * d).collect();
        energy(spec, &State { p, q: q2.clone() }) - w
    };
    let s = solve_increasing(h_on_ray, (2.0 * (w - pot).abs()).sqrt().max(1e-8))?;
    let p: Vec<f64> = dir.iter().map(|d| s * d).collect();
    Some(State::new(spec, p, q))
}
