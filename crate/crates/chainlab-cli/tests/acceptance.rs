//! Acceptance suite: one test per criterion, each printing a PASS/FAIL
//! line (run with `--nocapture` to see them). Every tolerance is pinned
//! here, in code.

#![allow(clippy::needless_range_loop)]

use std::path::{Path, PathBuf};
use std::process::Command;

use chainlab::chain::{
    dissipation_rate, energy, energy_jet, lie_energy_analytic, ChainSpec, State,
};
use chainlab::jets::lie_derivatives;
use chainlab::matrosov;
use chainlab::oscillators;
use chainlab::potentials::Potential;
use chainlab::rotor_lyapunov::{self, CalibConfig, LyapCoeffs};
use chainlab::sampling::{sample_rotor_at_energy, stream_rng, KineticLayout};
use chainlab::sim::decay::{decay_scan, DecayConfig, Family};
use chainlab::sim::dopri::integrate_adaptive;
use chainlab::sim::generator::{generator_check, GenObservable, GeneratorConfig};
use chainlab::stats::slope_nonpositive_95;

fn report(criterion: usize, name: &str, pass: bool, details: &str) {
    println!(
        "ACCEPTANCE {criterion:2} {name}: {} ({details})",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {details}");
}

fn rotor(n: usize) -> ChainSpec {
    ChainSpec::rotator_uniform(n, Potential::cosine(2.0)).unwrap()
}

fn quad_osc(n: usize) -> ChainSpec {
    ChainSpec::oscillator_uniform(n, Potential::harmonic(), Potential::harmonic()).unwrap()
}

// ---------------------------------------------------------------- 1 ----

#[test]
fn criterion_01_dissipation_identity() {
    let started = std::time::Instant::now();
    let mut worst: f64 = 0.0;
    for n in [2usize, 3, 4] {
        let spec = rotor(n);
        let mut rng = stream_rng(0xacc1, n as u64, 0);
        for i in 0..1000 {
            let h = 1.0 + 999.0 * (i as f64 / 1000.0);
            let Some(s) = sample_rotor_at_energy(&spec, &mut rng, h, KineticLayout::Split)
            else {
                continue;
            };
            let err = (lie_energy_analytic(&spec, &s) - dissipation_rate(&spec, &s)).abs();
            worst = worst.max(err);
        }
    }
    let pass = worst <= 1e-12 && started.elapsed().as_secs_f64() < 1.0;
    report(
        1,
        "dissipation identity",
        pass,
        &format!(
            "worst |L_F H + sum p^2| = {worst:.3e}, {:.2}s",
            started.elapsed().as_secs_f64()
        ),
    );
}

// ---------------------------------------------------------------- 2 ----

fn flow(spec: &ChainSpec, s0: &State, t: f64) -> State {
    if t == 0.0 {
        return s0.clone();
    }
    let n = spec.n();
    let mut y0 = Vec::with_capacity(2 * n);
    y0.extend_from_slice(&s0.q);
    y0.extend_from_slice(&s0.p);
    let sign = t.signum();
    let rhs = move |y: &[f64], dy: &mut [f64]| {
        let s = State {
            q: y[..n].to_vec(),
            p: y[n..].to_vec(),
        };
        let f = chainlab::chain::vector_field(spec, &s);
        for i in 0..n {
            dy[i] = sign * f.dq[i];
            dy[n + i] = sign * f.dp[i];
        }
    };
    let (y, _, _) =
        integrate_adaptive(rhs, &y0, 0.0, t.abs(), 1e-13, 1e-14, &[], |_, _| true).unwrap();
    State {
        q: y[..n].to_vec(),
        p: y[n..].to_vec(),
    }
}

fn fd_stencil(
    spec: &ChainSpec,
    s0: &State,
    g: &dyn Fn(&ChainSpec, &State) -> f64,
    k: usize,
    h: f64,
) -> f64 {
    let gt = |j: i32| g(spec, &flow(spec, s0, j as f64 * h));
    match k {
        1 => (gt(1) - gt(-1)) / (2.0 * h),
        2 => (gt(1) - 2.0 * gt(0) + gt(-1)) / (h * h),
        3 => (gt(2) - 2.0 * gt(1) + 2.0 * gt(-1) - gt(-2)) / (2.0 * h * h * h),
        4 => (gt(2) - 4.0 * gt(1) + 6.0 * gt(0) - 4.0 * gt(-1) + gt(-2)) / h.powi(4),
        _ => unreachable!(),
    }
}

fn fd_lie(
    spec: &ChainSpec,
    s0: &State,
    g: &dyn Fn(&ChainSpec, &State) -> f64,
    k: usize,
) -> f64 {
    let h = match k {
        1 => 1e-3,
        2 => 4e-3,
        3 => 1.2e-2,
        _ => 2e-2,
    };
    (4.0 * fd_stencil(spec, s0, g, k, h / 2.0) - fd_stencil(spec, s0, g, k, h)) / 3.0
}

fn n2_ladder() -> LyapCoeffs {
    LyapCoeffs {
        a: vec![512000.0, 800.0, 10.0],
        gamma0: 3,
        alpha: vec![1, 0],
        h0: 1.0,
        c1: 0.0,
    }
}

type ScalarObs = Box<dyn Fn(&ChainSpec, &State) -> f64>;

#[test]
fn criterion_02_jet_engine_oracle() {
    let started = std::time::Instant::now();
    let spec = rotor(2);
    let coeffs = n2_ladder();
    let mut rng = stream_rng(0xacc2, 0, 0);
    let mut worst_rel: f64 = 0.0;
    let mut states = 0;
    // 60 energy states + 40 W states = 100 oracle comparisons for k <= 4.
    for i in 0..100 {
        let h_target = 3.5 + 0.12 * i as f64;
        let Some(s) = sample_rotor_at_energy(&spec, &mut rng, h_target, KineticLayout::Split)
        else {
            continue;
        };
        let (lie, g): (Vec<f64>, ScalarObs) = if i % 5 < 3 {
            (
                lie_derivatives(&spec, &s, energy_jet, 4).unwrap(),
                Box::new(|sp: &ChainSpec, st: &State| energy(sp, st)),
            )
        } else {
            let c = coeffs.clone();
            let cj = coeffs.clone();
            (
                lie_derivatives(
                    &spec,
                    &s,
                    move |sp: &ChainSpec, j: &chainlab::jets::PhaseJets| {
                        rotor_lyapunov::w_jet(sp, &cj, j)
                    },
                    4,
                )
                .unwrap(),
                Box::new(move |sp: &ChainSpec, st: &State| rotor_lyapunov::eval_w(sp, &c, st)),
            )
        };
        let scale = lie.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        for k in 1..=4 {
            let fd = fd_lie(&spec, &s, g.as_ref(), k);
            worst_rel = worst_rel.max((lie[k] - fd).abs() / scale);
        }
        states += 1;
    }

    // Binomial identity to k = 8, relative 1e-8.
    let binom = |n: usize, k: usize| -> f64 {
        let mut acc = 1.0;
        for i in 0..k {
            acc *= (n - i) as f64 / (i + 1) as f64;
        }
        acc
    };
    let mut worst_binom: f64 = 0.0;
    for i in 0..30 {
        let h_target = 5.0 + i as f64;
        let Some(s) = sample_rotor_at_energy(&spec, &mut rng, h_target, KineticLayout::Sphere)
        else {
            continue;
        };
        let lie_h = lie_derivatives(&spec, &s, energy_jet, 9).unwrap();
        let p1 = |_: &ChainSpec, j: &chainlab::jets::PhaseJets| j.p[0].clone();
        let lie_p1 = lie_derivatives(&spec, &s, p1, 9).unwrap();
        for k in 0..=8 {
            let mut sum = 0.0;
            for j in 0..=k {
                sum -= binom(k, j) * lie_p1[j] * lie_p1[k - j];
            }
            let scale = lie_h[k + 1].abs().max(sum.abs()).max(1e-12);
            worst_binom = worst_binom.max((lie_h[k + 1] - sum).abs() / scale);
        }
    }

    let secs = started.elapsed().as_secs_f64();
    let pass = states >= 95 && worst_rel <= 1e-4 && worst_binom <= 1e-8 && secs < 30.0;
    report(
        2,
        "jet-engine oracle",
        pass,
        &format!(
            "{states} states, worst fd rel {worst_rel:.3e}, worst binomial rel {worst_binom:.3e}, {secs:.1}s"
        ),
    );
}

// ---------------------------------------------------------------- 3, 4 --

fn calib_cfg() -> CalibConfig {
    CalibConfig {
        samples_per_decade: 3334,
        ..CalibConfig::default()
    }
}

#[test]
fn criterion_03_rotor_dissipation_bound() {
    let started = std::time::Instant::now();
    let mut all_pass = true;
    let mut details = Vec::new();
    for n in [2usize, 3] {
        let spec = rotor(n);
        let (coeffs, _) =
            rotor_lyapunov::calibrate(&spec, &calib_cfg(), 0xacc3).expect("calibration");
        let rep = rotor_lyapunov::verify_bound(&spec, &coeffs, &calib_cfg(), 0x333 + n as u64);
        let slope_ok = slope_nonpositive_95(&rep.slope_fit);
        let ok = rep.samples >= 10_000
            && rep.dissipation_ok
            && slope_ok
            && rep.sandwich_violations == 0;
        all_pass &= ok;
        details.push(format!(
            "N={n}: samples={} max(L_FW+H)={:.3e} <= C1={:.3e}: {}, slope={:.2e}+-{:.2e}, sandwich_viol={}",
            rep.samples,
            rep.max_lw_plus_h,
            rep.c1,
            rep.dissipation_ok,
            rep.slope_fit.slope,
            rep.slope_fit.slope_se,
            rep.sandwich_violations
        ));
    }
    let secs = started.elapsed().as_secs_f64();
    all_pass &= secs < 300.0;
    report(
        3,
        "rotor dissipation bound",
        all_pass,
        &format!("{} | {secs:.1}s", details.join(" | ")),
    );
}

#[test]
fn criterion_04_proof_term_audits() {
    let started = std::time::Instant::now();
    let mut all_pass = true;
    let mut details = Vec::new();
    for n in [2usize, 3] {
        let spec = rotor(n);
        let (coeffs, _) =
            rotor_lyapunov::calibrate(&spec, &calib_cfg(), 0xacc4).expect("calibration");
        let rep = rotor_lyapunov::verify_bound(&spec, &coeffs, &calib_cfg(), 0x444 + n as u64);
        let ok = rep.max_dotxi_rel <= 1e-12 && rep.i_xi_negatives == 0;
        all_pass &= ok;
        details.push(format!(
            "N={n}: max|I_dotxi|rel={:.3e}, I_xi<0 count={}",
            rep.max_dotxi_rel, rep.i_xi_negatives
        ));
    }
    let secs = started.elapsed().as_secs_f64();
    all_pass &= secs < 60.0;
    report(
        4,
        "proof-term audits",
        all_pass,
        &format!("{} | {secs:.1}s", details.join(" | ")),
    );
}

// ---------------------------------------------------------------- 5 ----

#[test]
fn criterion_05_decay_scaling() {
    let started = std::time::Instant::now();
    let spec = rotor(2);
    let (coeffs, _) = rotor_lyapunov::calibrate(&spec, &calib_cfg(), 0xacc5).expect("calibration");
    let cfg = DecayConfig {
        h0_list: vec![1e2, 1e3, 1e4],
        epsilon: 0.05,
        ensemble: 16,
        families: vec![Family::FastRotor],
        t_factor: 2.5,
        rtol: 1e-10,
        atol: 1e-12,
        samples_per_trajectory: 128,
        wall_clock_minutes: Some(115.0),
    };
    let rep = decay_scan(&spec, &coeffs, &cfg, 0xacc5).expect("decay scan");
    let in_window = rep
        .rows
        .iter()
        .all(|r| !r.window_empty && r.t_meas >= r.window_lo && r.t_meas <= r.window_hi);
    let ledger_ok = rep.rows.iter().all(|r| r.ledger_residual <= 1e-6);
    let slope = rep.slope_fit.as_ref().map(|f| f.slope).unwrap_or(f64::NAN);
    let slope_ok = (-1.4..=0.0).contains(&slope);
    let c_ok = rep.c_lower.is_finite() && rep.c_lower > 0.0;
    let capped = rep.rows.iter().any(|r| r.capped);
    let secs = started.elapsed().as_secs_f64();
    let pass = in_window && ledger_ok && slope_ok && c_ok && !capped && secs < 7200.0;
    report(
        5,
        "energy-decay scaling",
        pass,
        &format!(
            "slope={slope:.4}, C_lower={:.4}, in_window={in_window}, ledger_ok={ledger_ok}, {secs:.0}s",
            rep.c_lower
        ),
    );
}

// ---------------------------------------------------------------- 6 ----

#[test]
fn criterion_06_order_thresholds() {
    let started = std::time::Instant::now();
    let mut all_pass = true;
    let mut details = Vec::new();
    for n in [2usize, 3] {
        let spec = quad_osc(n);
        let r = 4 * n - 1;
        let cfg = oscillators::OrderStatsConfig {
            budget: 10_000,
            kmax: r + 2,
            zero_tol: 1e-9,
            perturbations: vec![1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            amplitude: 3.0,
        };
        let rep = oscillators::order_statistics(&spec, &cfg, 0xacc6).expect("order statistics");
        // Threshold claim on the O(1)-magnitude sample families.
        let bulk_max = rep
            .rows
            .iter()
            .filter(|row| row.family == "generic" || row.family == "p_zero")
            .filter_map(|row| row.order)
            .max()
            .unwrap_or(0);
        let bulk_unresolved = rep
            .rows
            .iter()
            .filter(|row| (row.family == "generic" || row.family == "p_zero") && row.order.is_none())
            .count();
        let equilibrium_unresolved = rep
            .rows
            .iter()
            .filter(|row| row.family == "equilibrium")
            .all(|row| row.order.is_none());
        let ok = bulk_max <= r
            && bulk_unresolved == 0
            && equilibrium_unresolved
            && rep.cascade_mismatches == 0;
        all_pass &= ok;
        details.push(format!(
            "N={n}: r={r}, bulk max order={bulk_max}, bulk unresolved={bulk_unresolved}, eq unresolved={equilibrium_unresolved}"
        ));
    }
    let secs = started.elapsed().as_secs_f64();
    all_pass &= secs < 120.0;
    report(
        6,
        "oscillator order thresholds",
        all_pass,
        &format!("{} | {secs:.1}s", details.join(" | ")),
    );
}

// ---------------------------------------------------------------- 7 ----

#[test]
fn criterion_07_equilibria_boxed() {
    let started = std::time::Instant::now();
    let u = Potential::polynomial(&[0.0, 0.0, -1.0, 0.0, 1.0]);
    let spec = ChainSpec::oscillator_uniform(2, u, Potential::harmonic()).unwrap();
    let rep = oscillators::find_equilibria(&spec, 256, 0xacc7).expect("equilibria");
    let inside = rep.roots.iter().all(|r| r.inside_box);
    let residuals = rep.roots.iter().all(|r| r.residual_inf <= 1e-10);
    let brute = oscillators::brute_force_roots_2d(&spec, 2000, rep.certificate.a + 0.5);
    let mut found: Vec<Vec<f64>> = rep.roots.iter().map(|r| r.q.clone()).collect();
    found.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let matches = brute.len() == found.len()
        && brute
            .iter()
            .zip(&found)
            .all(|(a, b)| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-6));
    let secs = started.elapsed().as_secs_f64();
    let pass = inside && residuals && matches && secs < 120.0;
    report(
        7,
        "equilibria in certified box",
        pass,
        &format!(
            "roots={} brute={} matches={matches} box=[-{}, {}] {secs:.1}s",
            found.len(),
            brute.len(),
            rep.certificate.b,
            rep.certificate.a
        ),
    );
}

// ---------------------------------------------------------------- 8 ----

#[test]
fn criterion_08_matrosov_strictness() {
    let started = std::time::Instant::now();
    let spec = quad_osc(2);
    let cfg = matrosov::MatrosovConfig::default();
    let data = matrosov::build(&spec, &cfg, 0xacc8).expect("table build");
    let r_ok = data.r == 7;
    let bk_rel = data.bk_consistency();
    let rep = matrosov::certify_strictness(&spec, &data, 10_000, 0x888);
    let mut bad = data.clone();
    matrosov::corrupt_phi(&mut bad, 100.0);
    let neg = matrosov::certify_strictness(&spec, &bad, 10_000, 0x888);
    let secs = started.elapsed().as_secs_f64();
    let pass = r_ok
        && bk_rel <= 1e-12
        && rep.pass
        && rep.samples >= 10_000
        && !neg.pass
        && secs < 600.0;
    report(
        8,
        "strict Lyapunov certification",
        pass,
        &format!(
            "r={} bk_rel={bk_rel:.3e} cert pass={} ({} samples, max_viol={:.2e}), corrupted fails={} | {secs:.1}s",
            data.r, rep.pass, rep.samples, rep.max_violation, !neg.pass
        ),
    );
}

// ---------------------------------------------------------------- 9 ----

#[test]
fn criterion_09_generator_consistency() {
    let started = std::time::Instant::now();
    let spec = ChainSpec::rotator_uniform(2, Potential::cosine(2.0))
        .unwrap()
        .with_temperatures(vec![1.0, 0.0])
        .unwrap();
    let (coeffs, _) = rotor_lyapunov::calibrate(&spec, &calib_cfg(), 0xacc9).expect("calibration");
    // Fast-rotor probe at H = 1000: p_1 = 0, the regime where the momentum
    // curvature of W dominates its deterministic dissipation.
    let q = vec![2.0, 0.0];
    let pot = energy(&spec, &State::new(&spec, vec![0.0, 0.0], q.clone()));
    let s = State::new(&spec, vec![0.0, (2.0 * (1000.0 - pot)).sqrt()], q);
    // Each observable gets its own dt window: the bias coefficients of
    // p_1^2, H and W sit at incompatible scales relative to their
    // sampling errors.
    type Runs = Vec<(GenObservable, Vec<f64>)>;
    let runs: Runs = vec![
        (GenObservable::P1Squared, vec![0.02, 0.01, 0.005]),
        (GenObservable::Energy, vec![8e-5, 4e-5, 1e-5]),
        (GenObservable::RotorW(coeffs), vec![8e-5, 4e-5, 1e-5]),
    ];
    let mut all_pass = true;
    let mut details = Vec::new();
    let mut w_value = None;
    for (obs, dt_list) in runs {
        let cfg = GeneratorConfig {
            dt_list,
            ensemble: 200_000,
        };
        let rep = generator_check(&spec, std::slice::from_ref(&obs), &s, &cfg, 0xacc9);
        let check = &rep.checks[0];
        let ok = check.bias_r_squared >= 0.9 && check.finest_sigma <= 3.0;
        all_pass &= ok;
        details.push(format!(
            "{}: R2={:.3} finest={:.2}sigma",
            check.name, check.bias_r_squared, check.finest_sigma
        ));
        if rep.w_generator_value.is_some() {
            w_value = rep.w_generator_value;
        }
    }
    let gen_w_positive = w_value.map(|v| v > 0.0).unwrap_or(false);
    all_pass &= gen_w_positive;
    let secs = started.elapsed().as_secs_f64();
    all_pass &= secs < 600.0;
    report(
        9,
        "stochastic generator",
        all_pass,
        &format!(
            "{} | LW under generator = {:.3e} > 0: {gen_w_positive} | {secs:.1}s",
            details.join(", "),
            w_value.unwrap_or(f64::NAN)
        ),
    );
}

// --------------------------------------------------------------- 10 ----

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_chainlab"))
        .args(args)
        .output()
        .expect("spawn chainlab")
}

fn collect_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().map(|e| e == "csv").unwrap_or(false) {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}

#[test]
fn criterion_10_reproducibility() {
    let started = std::time::Instant::now();
    let base = std::env::temp_dir().join(format!("chainlab_accept_{}", std::process::id()));
    let cfg_dir = base.join("configs");
    std::fs::create_dir_all(&cfg_dir).unwrap();

    // Small-budget configs exercising the same code paths as criteria 1-9.
    let rotor_cfg = cfg_dir.join("rotor.toml");
    std::fs::write(
        &rotor_cfg,
        r#"
[chain]
kind = "rotator"
n = 2
temperatures = [1.0, 0.0]

[[chain.interaction]]
kind = "trigpoly"
c0 = 2.0
cos = [1.0]

[run]
seed = 7

[calibrate]
samples_per_decade = 500

[simulate]
t_end = 5.0
initial_h = 50.0
with_w = true

[sde]
t_end = 1.0
dt = 1e-3
ensemble = 2
samples = 32

[decay]
h0_list = [100.0]
ensemble = 2
families = ["fast_rotor"]
t_factor = 1.2
rtol = 1e-9
atol = 1e-11
samples_per_trajectory = 32

[generator]
observables = ["p1_squared", "energy"]
dt_list = [0.002, 0.001]
ensemble = 5000
target_h = 100.0
layout = "last"
"#,
    )
    .unwrap();

    let osc_cfg = cfg_dir.join("osc.toml");
    std::fs::write(
        &osc_cfg,
        r#"
[chain]
kind = "oscillator"
n = 2

[[chain.interaction]]
kind = "polynomial"
coeffs = [0.0, 0.0, 0.5]

[[chain.pinning]]
kind = "polynomial"
coeffs = [0.0, 0.0, 0.5]

[run]
seed = 7

[equilibria]
starts = 32
brute_grid = 120

[order_stats]
budget = 200

[matrosov]
w_max = 100.0
levels_per_decade = 16
budget_per_level = 64
certify_budget = 500
"#,
    )
    .unwrap();

    // (command, config, artifact directory key); the matrosov pair shares a
    // directory so certify can load the tables build wrote.
    let jobs: Vec<(&str, &PathBuf, &str)> = vec![
        ("validate", &rotor_cfg, "validate_rotor"),
        ("calibrate", &rotor_cfg, "calibrate"),
        ("verify-lyapunov", &rotor_cfg, "verify"),
        ("simulate", &rotor_cfg, "simulate"),
        ("simulate-sde", &rotor_cfg, "sde"),
        ("decay-scan", &rotor_cfg, "decay"),
        ("generator-check", &rotor_cfg, "generator"),
        ("validate", &osc_cfg, "validate_osc"),
        ("equilibria", &osc_cfg, "equilibria"),
        ("order-stats", &osc_cfg, "orders"),
        ("matrosov-build", &osc_cfg, "matrosov"),
        ("matrosov-certify", &osc_cfg, "matrosov"),
    ];

    let mut all_match = true;
    let mut compared = 0;
    for round in ["a", "b"] {
        for (cmd, cfg, key) in &jobs {
            let out_dir = base.join(format!("{round}/{key}"));
            let out = run_cli(&[
                cmd,
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
            ]);
            assert!(
                out.status.code() == Some(0),
                "{cmd} exited {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
    let mut keys: Vec<&str> = jobs.iter().map(|(_, _, k)| *k).collect();
    keys.dedup();
    for key in keys {
        let a = collect_csvs(&base.join(format!("a/{key}")));
        let b = collect_csvs(&base.join(format!("b/{key}")));
        assert!(!a.is_empty(), "{key} produced no CSVs");
        if a.len() != b.len() {
            all_match = false;
            continue;
        }
        for ((na, ba), (nb, bb)) in a.iter().zip(&b) {
            compared += 1;
            if na != nb || ba != bb {
                all_match = false;
                println!("  mismatch in {key}: {na}");
            }
        }
    }
    std::fs::remove_dir_all(&base).ok();
    let secs = started.elapsed().as_secs_f64();
    report(
        10,
        "byte reproducibility",
        all_match && compared > 0,
        &format!("{compared} CSV artifacts compared across {} commands | {secs:.1}s", jobs.len()),
    );
}
