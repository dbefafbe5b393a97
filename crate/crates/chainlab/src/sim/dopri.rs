//! Dormand-Prince 5(4) adaptive Runge-Kutta with dense output.
//!
//! Classic explicit embedded pair: fifth-order propagation, fourth-order
//! error estimate, FSAL, PI-free standard step control
//! (`h *= 0.9 err^{-1/5}` clamped to `[0.2, 5]`), and the standard
//! fourth-order continuous extension for sampling between steps. The
//! right-hand side is autonomous.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    /// Step size collapsed below `1e-14 * t_end`; the problem is stiffer
    /// than an explicit pair can handle at this tolerance.
    #[error("step underflow at t = {t}: h = {h}")]
    StepUnderflow { t: f64, h: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
}

const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Clone, Copy, Debug)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Dense-output coefficients of one accepted step.
struct DenseSegment {
    t0: f64,
    h: f64,
    r: [Vec<f64>; 5],
}

impl DenseSegment {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t0) / self.h;
        let th1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.r[0][i]
                + theta
                    * (self.r[1][i]
                        + th1 * (self.r[2][i] + theta * (self.r[3][i] + th1 * self.r[4][i])));
        }
    }
}

/// Integrate `dy/dt = f(y)` from `t0` to `t_end`, invoking `on_sample` at
/// each requested time (strictly increasing, inside `[t0, t_end]`) using
/// dense output. Returns the final state, the reached time and step stats.
///
/// `on_sample` returning `false` aborts the run early (wall-clock capping);
/// the reached time then points at the end of the aborted step.
#[allow(clippy::too_many_arguments)]
pub fn integrate_adaptive<F>(
    f: F,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
    sample_times: &[f64],
    mut on_sample: impl FnMut(f64, &[f64]) -> bool,
) -> Result<(Vec<f64>, f64, StepStats), SimError>
where
    F: Fn(&[f64], &mut [f64]),
{
    let n = y0.len();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut stats = StepStats {
        accepted: 0,
        rejected: 0,
        rhs_evals: 0,
    };
    let mut k: [Vec<f64>; 7] = Default::default();
    for ki in &mut k {
        *ki = vec![0.0; n];
    }
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];

    f(&y, &mut k[0]);
    stats.rhs_evals += 1;

    let mut h = initial_step(&f, &y, &k[0], rtol, atol, t_end - t0, &mut stats);
    let h_floor = 1e-14 * (t_end - t0).abs().max(1.0);
    let mut next_sample = 0usize;
    while next_sample < sample_times.len() && sample_times[next_sample] <= t0 {
        if !on_sample(sample_times[next_sample], &y) {
            return Ok((y, t, stats));
        }
        next_sample += 1;
    }
    let mut facmax = 5.0;

    while t < t_end {
        if h < h_floor {
            return Err(SimError::StepUnderflow { t, h });
        }
        if t + h > t_end {
            h = t_end - t;
        }

        // Stage evaluations (k[0] holds f(y) from FSAL).
        let a_rows: [&[f64]; 5] = [&A2, &A3, &A4, &A5, &A6];
        for (s, a) in a_rows.iter().enumerate() {
            let (prev, rest) = k.split_at_mut(s + 1);
            for i in 0..n {
                let mut acc = 0.0;
                for (j, &aj) in a.iter().enumerate() {
                    acc += aj * prev[j][i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            f(&ytmp, &mut rest[0]);
            stats.rhs_evals += 1;
        }
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..6 {
                acc += B[j] * k[j][i];
            }
            ynew[i] = y[i] + h * acc;
        }
        f(&ynew, &mut k[6]);
        stats.rhs_evals += 1;

        // Embedded error estimate.
        let mut err = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for j in 0..7 {
                e += (B[j] - B4[j]) * k[j][i];
            }
            let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
            let r = h * e / sc;
            err += r * r;
        }
        err = (err / n as f64).sqrt();

        if !err.is_finite() {
            return Err(SimError::NonFinite { t });
        }

        if err <= 1.0 {
            // Dense output for any samples inside (t, t+h].
            if next_sample < sample_times.len() && sample_times[next_sample] <= t + h {
                let seg = dense_segment(&y, &ynew, &k, t, h);
                let mut buf = vec![0.0; n];
                while next_sample < sample_times.len() && sample_times[next_sample] <= t + h {
                    seg.eval(sample_times[next_sample], &mut buf);
                    if !on_sample(sample_times[next_sample], &buf) {
                        return Ok((ynew, t + h, stats));
                    }
                    next_sample += 1;
                }
            }
            t += h;
            std::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6); // FSAL
            stats.accepted += 1;
            let fac = 0.9 * err.powf(-0.2);
            h *= fac.clamp(0.2, facmax);
            facmax = 5.0;
        } else {
            stats.rejected += 1;
            let fac = 0.9 * err.powf(-0.2);
            h *= fac.clamp(0.2, 1.0);
            facmax = 1.0;
        }
    }
    Ok((y, t, stats))
}

fn dense_segment(y: &[f64], ynew: &[f64], k: &[Vec<f64>; 7], t: f64, h: f64) -> DenseSegment {
    let n = y.len();
    let mut r = [
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    ];
    for i in 0..n {
        let ydiff = ynew[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        r[0][i] = y[i];
        r[1][i] = ydiff;
        r[2][i] = bspl;
        r[3][i] = ydiff - h * k[6][i] - bspl;
        let mut d = 0.0;
        for j in 0..7 {
            d += D[j] * k[j][i];
        }
        r[4][i] = h * d;
    }
    DenseSegment { t0: t, h, r }
}

/// Hairer's starting-step heuristic, simplified for autonomous systems.
fn initial_step<F: Fn(&[f64], &mut [f64])>(
    f: &F,
    y: &[f64],
    f0: &[f64],
    rtol: f64,
    atol: f64,
    span: f64,
    stats: &mut StepStats,
) -> f64 {
    let n = y.len();
    let sc: Vec<f64> = y.iter().map(|&yi| atol + rtol * yi.abs()).collect();
    let d0 = (y
        .iter()
        .zip(&sc)
        .map(|(&yi, &s)| (yi / s) * (yi / s))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let d1 = (f0
        .iter()
        .zip(&sc)
        .map(|(&fi, &s)| (fi / s) * (fi / s))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y.iter().zip(f0).map(|(&yi, &fi)| yi + h0 * fi).collect();
    let mut f1 = vec![0.0; n];
    f(&y1, &mut f1);
    stats.rhs_evals += 1;
    let d2 = (f1
        .iter()
        .zip(f0)
        .zip(&sc)
        .map(|((&a, &b), &s)| {
            let d = (a - b) / s;
            d * d
        })
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_returns_after_period() {
        // dq = p, dp = -q; period 2*pi.
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let (y, t, stats) = integrate_adaptive(
            f,
            &[1.0, 0.0],
            0.0,
            std::f64::consts::TAU,
            1e-10,
            1e-12,
            &[],
            |_, _| true,
        )
        .unwrap();
        assert!((t - std::f64::consts::TAU).abs() < 1e-12);
        assert!((y[0] - 1.0).abs() < 1e-8, "q = {}", y[0]);
        assert!(y[1].abs() < 1e-8);
        assert!(stats.accepted > 10);
    }

    #[test]
    fn dense_output_matches_exact_solution() {
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let samples: Vec<f64> = (1..40).map(|i| 0.157 * i as f64).collect();
        let mut worst: f64 = 0.0;
        integrate_adaptive(
            f,
            &[1.0, 0.0],
            0.0,
            2.0 * std::f64::consts::TAU,
            1e-10,
            1e-12,
            &samples,
            |t, y| {
                worst = worst.max((y[0] - t.cos()).abs()).max((y[1] + t.sin()).abs());
                true
            },
        )
        .unwrap();
        assert!(worst < 1e-8, "dense output error {worst}");
    }

    #[test]
    fn exponential_decay_accuracy() {
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = -y[0];
        };
        let (y, _, _) =
            integrate_adaptive(f, &[1.0], 0.0, 5.0, 1e-12, 1e-14, &[], |_, _| true).unwrap();
        assert!((y[0] - (-5.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn early_abort_from_sampler() {
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = 1.0 + 0.0 * y[0];
        };
        let samples = [1.0, 2.0, 3.0];
        let mut seen = 0;
        let (_, t, _) = integrate_adaptive(
            f,
            &[0.0],
            0.0,
            10.0,
            1e-9,
            1e-9,
            &samples,
            |_, _| {
                seen += 1;
                seen < 2
            },
        )
        .unwrap();
        assert_eq!(seen, 2);
        assert!(t < 10.0);
    }
}
