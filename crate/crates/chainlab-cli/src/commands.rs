use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};

use chainlab::chain::{ChainKind, ChainSpec, State};
use chainlab::config::ExperimentConfig;
use chainlab::matrosov;
use chainlab::oscillators::{self, OscError};
use chainlab::potentials::{validate_oscillator_potentials, validate_rotor_potential, GridConfig};
use chainlab::report::{fmt_f64, Csv, Summary};
use chainlab::rotor_lyapunov::{self, CalibrationError, LyapCoeffs};
use chainlab::sampling::{sample_on_level, sample_rotor_at_energy, stream_rng, KineticLayout};
use chainlab::sim::{self, generator::GenObservable, IntegrateOptions};

struct Ctx {
    cfg: ExperimentConfig,
    spec: ChainSpec,
    hash: u64,
    seed: u64,
    out: PathBuf,
    wall_clock_minutes: f64,
}

impl Ctx {
    fn csv_path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write_csv(&self, name: &str, csv: &Csv) -> Result<()> {
        csv.write_to(&self.csv_path(name), self.hash, self.seed)
            .with_context(|| format!("writing {name}"))
    }

    fn summary(&self, title: &str) -> Summary {
        Summary::new(title, self.hash, self.seed)
    }

    fn write_summary(&self, name: &str, s: &Summary) -> Result<()> {
        s.write_to(&self.csv_path(name))
            .with_context(|| format!("writing {name}"))
    }
}

pub fn run(name: &str, common: &super::Common) -> Result<ExitCode> {
    let (cfg, hash) = ExperimentConfig::load(&common.config)
        .with_context(|| format!("loading config {}", common.config.display()))?;
    let spec = cfg.chain.build().context("building chain spec")?;
    let seed = common.seed.unwrap_or(cfg.run.seed);
    let out = common
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&cfg.run.out_dir));
    let threads = common.threads.unwrap_or(cfg.run.threads);
    if threads > 0 {
        // Ignore the error when a global pool already exists (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let wall_clock_minutes = common.wall_clock.unwrap_or(cfg.run.wall_clock_minutes);
    std::fs::create_dir_all(&out)?;
    let ctx = Ctx {
        cfg,
        spec,
        hash,
        seed,
        out,
        wall_clock_minutes,
    };

    match name {
        "validate" => cmd_validate(&ctx),
        "simulate" => cmd_simulate(&ctx),
        "simulate-sde" => cmd_simulate_sde(&ctx),
        "calibrate" => cmd_calibrate(&ctx),
        "verify-lyapunov" => cmd_verify(&ctx),
        "matrosov-build" => cmd_matrosov_build(&ctx),
        "matrosov-certify" => cmd_matrosov_certify(&ctx),
        "equilibria" => cmd_equilibria(&ctx),
        "order-stats" => cmd_order_stats(&ctx),
        "decay-scan" => cmd_decay_scan(&ctx),
        "generator-check" => cmd_generator_check(&ctx),
        other => bail!("unknown command {other}"),
    }
}

fn grid_config(ctx: &Ctx) -> GridConfig {
    GridConfig {
        points: ctx.cfg.validate.grid_points,
        floor: ctx.cfg.validate.floor,
        refine_rounds: ctx.cfg.validate.refine_rounds,
    }
}

fn cmd_validate(ctx: &Ctx) -> Result<ExitCode> {
    let mut csv = Csv::new([
        "potential",
        "role",
        "pass",
        "nondegeneracy_min",
        "argmin",
        "value_min",
        "shift",
    ]);
    let mut summary = ctx.summary("potential validation");
    let mut all_pass = true;
    match ctx.spec.kind() {
        ChainKind::Rotator => {
            let grid = grid_config(ctx);
            for (i, v) in ctx.spec.interactions().iter().enumerate() {
                let rep = validate_rotor_potential(v, &grid);
                all_pass &= rep.pass;
                csv.push([
                    format!("V{}", i + 1),
                    "interaction".into(),
                    rep.pass.to_string(),
                    fmt_f64(rep.nondegeneracy_min),
                    fmt_f64(rep.nondegeneracy_argmin),
                    fmt_f64(rep.value_min),
                    fmt_f64(rep.applied_shift),
                ]);
                for m in &rep.messages {
                    summary.line(format!("V{}: {m}", i + 1));
                }
            }
            summary.kv("kind", "rotator");
        }
        ChainKind::Oscillator => {
            let val = validate_oscillator_potentials(&ctx.spec);
            all_pass = val.pass;
            summary.kv("kind", "oscillator");
            summary.kv(
                "class",
                val.class
                    .map(|c| format!("{c:?}"))
                    .unwrap_or_else(|| "none".into()),
            );
            summary.kv(
                "order_threshold_r",
                val.r.map(|r| r.to_string()).unwrap_or_else(|| "-".into()),
            );
            summary.kv("convexity_radius", fmt_f64(val.convexity_radius));
            for m in &val.messages {
                summary.line(m.clone());
            }
            csv.push([
                "chain".into(),
                "classification".into(),
                val.pass.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
        }
    }
    summary.kv("pass", all_pass);
    ctx.write_csv("validate.csv", &csv)?;
    ctx.write_summary("validate_summary.txt", &summary)?;
    Ok(exit(all_pass))
}

fn initial_state(
    ctx: &Ctx,
    p: &[f64],
    q: &[f64],
    initial_h: f64,
    layout: &str,
    stream: u64,
) -> Result<State> {
    if !p.is_empty() || !q.is_empty() {
        if p.len() != ctx.spec.n() || q.len() != ctx.spec.n() {
            bail!("explicit initial state must give {} p and q values", ctx.spec.n());
        }
        return Ok(State::new(&ctx.spec, p.to_vec(), q.to_vec()));
    }
    let mut rng = stream_rng(ctx.seed, stream, 0);
    match ctx.spec.kind() {
        ChainKind::Rotator => {
            let layout = match layout {
                "sphere" => KineticLayout::Sphere,
                "split" => KineticLayout::Split,
                "last" => KineticLayout::LastParticle,
                other => bail!("unknown layout '{other}' (sphere | split | last)"),
            };
            sample_rotor_at_energy(&ctx.spec, &mut rng, initial_h, layout)
                .context("sampling initial rotator state (initial_h below the potential floor?)")
        }
        ChainKind::Oscillator => sample_on_level(&ctx.spec, &mut rng, initial_h, 0.5)
            .context("sampling initial oscillator state"),
    }
}

fn calibrated(ctx: &Ctx) -> Result<(LyapCoeffs, rotor_lyapunov::CalibrationReport), CalibrationError> {
    rotor_lyapunov::calibrate(&ctx.spec, &ctx.cfg.calibrate.to_config(), ctx.seed)
}

fn cmd_simulate(ctx: &Ctx) -> Result<ExitCode> {
    let sb = &ctx.cfg.simulate;
    let s0 = initial_state(ctx, &sb.p, &sb.q, sb.initial_h, &sb.layout, 0x51)?;
    let coeffs = if sb.with_w {
        if ctx.spec.kind() != ChainKind::Rotator {
            bail!("with_w needs a rotator chain");
        }
        Some(calibrated(ctx).map_err(|e| anyhow::anyhow!("{e}"))?.0)
    } else {
        None
    };
    let opts = IntegrateOptions {
        rtol: sb.rtol,
        atol: sb.atol,
        samples: sb.samples,
        wall_clock: wall(ctx),
    };
    let rec = sim::integrate(&ctx.spec, &s0, sb.t_end, &opts)?;
    let mut csv = Csv::new(["t", "h", "w", "ledger"]);
    for i in 0..rec.times.len() {
        let w = coeffs
            .as_ref()
            .map(|c| fmt_f64(rotor_lyapunov::eval_w(&ctx.spec, c, &rec.states[i])))
            .unwrap_or_default();
        csv.push([
            fmt_f64(rec.times[i]),
            fmt_f64(rec.energies[i]),
            w,
            fmt_f64(rec.dissipated[i]),
        ]);
    }
    ctx.write_csv("trajectory.csv", &csv)?;
    let mut summary = ctx.summary("deterministic trajectory");
    summary.kv("t_end_requested", fmt_f64(sb.t_end));
    summary.kv("t_reached", fmt_f64(rec.final_time()));
    summary.kv("h_initial", fmt_f64(rec.energies[0]));
    summary.kv("h_final", fmt_f64(*rec.energies.last().unwrap()));
    summary.kv("ledger_residual_rel", fmt_f64(rec.ledger_residual()));
    summary.kv("worst_energy_increase", fmt_f64(rec.worst_energy_increase()));
    summary.kv("accepted_steps", rec.accepted_steps);
    summary.kv("rejected_steps", rec.rejected_steps);
    summary.kv("capped", rec.capped);
    ctx.write_summary("simulate_summary.txt", &summary)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate_sde(ctx: &Ctx) -> Result<ExitCode> {
    let sb = &ctx.cfg.sde;
    let mut csv = Csv::new(["member", "member_seed", "t", "h", "ledger"]);
    for member in 0..sb.ensemble {
        let s0 = initial_state(ctx, &sb.p, &sb.q, sb.initial_h, &sb.layout, 0x5de0 + member as u64)?;
        let member_seed = ctx.seed.wrapping_add(member as u64);
        let rec = sim::sde::integrate_sde(&ctx.spec, &s0, sb.t_end, sb.dt, member_seed, sb.samples);
        for i in 0..rec.times.len() {
            csv.push([
                member.to_string(),
                member_seed.to_string(),
                fmt_f64(rec.times[i]),
                fmt_f64(rec.energies[i]),
                fmt_f64(rec.dissipated[i]),
            ]);
        }
    }
    ctx.write_csv("sde_trajectories.csv", &csv)?;
    let mut summary = ctx.summary("Langevin trajectories");
    summary.kv("ensemble", sb.ensemble);
    summary.kv("dt", fmt_f64(sb.dt));
    summary.kv("t_end", fmt_f64(sb.t_end));
    summary.kv(
        "temperatures",
        ctx.spec
            .temperatures()
            .iter()
            .map(|t| fmt_f64(*t))
            .collect::<Vec<_>>()
            .join(" "),
    );
    ctx.write_summary("sde_summary.txt", &summary)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_calibrate(ctx: &Ctx) -> Result<ExitCode> {
    match calibrated(ctx) {
        Ok((coeffs, report)) => {
            let mut csv = Csv::new(["k", "a_k"]);
            for (k, a) in coeffs.a.iter().enumerate() {
                csv.push([k.to_string(), fmt_f64(*a)]);
            }
            ctx.write_csv("coefficients.csv", &csv)?;
            let mut decades = Csv::new(["h_center", "max_lw_plus_h", "samples"]);
            for d in &report.per_decade {
                decades.push([
                    fmt_f64(d.h_center),
                    fmt_f64(d.max_lw_plus_h),
                    d.samples.to_string(),
                ]);
            }
            ctx.write_csv("calibrate_decades.csv", &decades)?;
            let mut summary = ctx.summary("rotor Lyapunov calibration");
            summary.kv("rounds", report.rounds);
            summary.kv("samples", report.total_samples);
            summary.kv("gamma0", coeffs.gamma0);
            summary.kv("c1_observed", fmt_f64(report.c1_observed));
            summary.kv("c1", fmt_f64(coeffs.c1));
            summary.kv("h0", fmt_f64(coeffs.h0));
            summary.kv("c_sandwich", fmt_f64(report.c_sandwich));
            summary.kv("decade_slope", fmt_f64(report.slope_fit.slope));
            summary.kv("decade_slope_se", fmt_f64(report.slope_fit.slope_se));
            for (idx, factor) in &report.bumps {
                summary.line(format!("bumped a_{idx} by x{factor}"));
            }
            summary.kv("pass", true);
            ctx.write_summary("calibrate_summary.txt", &summary)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(CalibrationError::Failed {
            rounds,
            worst_value,
            worst_h,
            worst_state,
        }) => {
            let mut summary = ctx.summary("rotor Lyapunov calibration");
            summary.kv("pass", false);
            summary.kv("rounds", rounds);
            summary.kv("worst_lw_plus_h", fmt_f64(worst_value));
            summary.kv("worst_h", fmt_f64(worst_h));
            summary.line(format!(
                "worst_state_p: {}",
                worst_state.p.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ")
            ));
            summary.line(format!(
                "worst_state_q: {}",
                worst_state.q.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ")
            ));
            summary.line("calibration failed: dissipation bound not achieved");
            ctx.write_summary("calibrate_summary.txt", &summary)?;
            Ok(ExitCode::from(2))
        }
        Err(e) => bail!("{e}"),
    }
}

fn cmd_verify(ctx: &Ctx) -> Result<ExitCode> {
    let (coeffs, _) = calibrated(ctx).map_err(|e| anyhow::anyhow!("{e}"))?;
    let rep = rotor_lyapunov::verify_bound(
        &ctx.spec,
        &coeffs,
        &ctx.cfg.calibrate.to_config(),
        ctx.seed ^ 0xfe11,
    );
    let mut decades = Csv::new(["h_center", "max_lw_plus_h", "samples"]);
    for d in &rep.per_decade {
        decades.push([
            fmt_f64(d.h_center),
            fmt_f64(d.max_lw_plus_h),
            d.samples.to_string(),
        ]);
    }
    ctx.write_csv("verify_decades.csv", &decades)?;
    let mut summary = ctx.summary("rotor Lyapunov verification");
    summary.kv("samples", rep.samples);
    summary.kv("c1", fmt_f64(rep.c1));
    summary.kv("max_lw_plus_h", fmt_f64(rep.max_lw_plus_h));
    summary.kv("dissipation_ok", rep.dissipation_ok);
    summary.kv("c_sandwich", fmt_f64(rep.c_sandwich));
    summary.kv("sandwich_violations", rep.sandwich_violations);
    summary.kv("h0", fmt_f64(coeffs.h0));
    summary.kv("c2_empirical", fmt_f64(rep.c2));
    summary.kv("max_dotxi_rel", fmt_f64(rep.max_dotxi_rel));
    summary.kv("i_xi_negatives", rep.i_xi_negatives);
    summary.kv("i_p_fitted_c", fmt_f64(rep.i_p_fitted_c));
    summary.kv("i_p_theoretical_c", fmt_f64(rep.c_p));
    summary.kv("audit_bound_violations", rep.audit_bound_violations);
    summary.kv("max_dual_path_rel", fmt_f64(rep.max_dual_path_rel));
    summary.kv("c_pxi", fmt_f64(rep.c_pxi));
    summary.kv("c_xilxi", fmt_f64(rep.c_xilxi));
    summary.kv("decade_slope", fmt_f64(rep.slope_fit.slope));
    let pass = rep.dissipation_ok
        && rep.sandwich_violations == 0
        && rep.i_xi_negatives == 0
        && rep.max_dotxi_rel <= 1e-12
        && rep.max_dual_path_rel <= 1e-10;
    summary.kv("pass", pass);
    ctx.write_summary("verify_summary.txt", &summary)?;
    Ok(exit(pass))
}

fn tables_dir(ctx: &Ctx) -> PathBuf {
    ctx.out.join(&ctx.cfg.matrosov.tables_dir)
}

fn cmd_matrosov_build(ctx: &Ctx) -> Result<ExitCode> {
    let mcfg = ctx.cfg.matrosov.to_config();
    match matrosov::build(&ctx.spec, &mcfg, ctx.seed) {
        Ok(data) => {
            matrosov::save(&data, &tables_dir(ctx)).map_err(|e| anyhow::anyhow!("{e}"))?;
            let mut summary = ctx.summary("strict-Lyapunov table build");
            summary.kv("r", data.r);
            summary.kv("q_threshold", fmt_f64(data.q_threshold));
            summary.kv("eps", fmt_f64(data.eps));
            summary.kv("levels", data.grid.len());
            summary.kv("w_lo", fmt_f64(data.grid[0]));
            summary.kv("w_hi", fmt_f64(*data.grid.last().unwrap()));
            summary.kv("bk_recursion_rel", fmt_f64(data.bk_consistency()));
            if ctx.spec.kind() == ChainKind::Rotator {
                summary.line(
                    "note: rotator default r = 4N-3 differs from the oscillator thresholds"
                        .to_string(),
                );
            }
            summary.kv("pass", true);
            ctx.write_summary("matrosov_build_summary.txt", &summary)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ matrosov::MatrosovError::EnvelopeDegenerate { .. }) => {
            let mut summary = ctx.summary("strict-Lyapunov table build");
            summary.kv("pass", false);
            summary.line(format!("{e}"));
            ctx.write_summary("matrosov_build_summary.txt", &summary)?;
            Ok(ExitCode::from(2))
        }
        Err(e) => bail!("{e}"),
    }
}

fn cmd_matrosov_certify(ctx: &Ctx) -> Result<ExitCode> {
    let mut data = matrosov::load(&tables_dir(ctx)).map_err(|e| anyhow::anyhow!("{e}"))?;
    let corrupt = ctx.cfg.matrosov.corrupt_phi;
    if corrupt > 0.0 {
        matrosov::corrupt_phi(&mut data, corrupt);
    }
    let rep = matrosov::certify_strictness(
        &ctx.spec,
        &data,
        ctx.cfg.matrosov.certify_budget,
        ctx.seed ^ 0xce87,
    );
    let mut csv = Csv::new([
        "samples",
        "coherent",
        "violations",
        "max_violation",
        "min_slack",
        "pass",
    ]);
    csv.push([
        rep.samples.to_string(),
        rep.coherent.to_string(),
        rep.violations.to_string(),
        fmt_f64(rep.max_violation),
        fmt_f64(rep.min_slack),
        rep.pass.to_string(),
    ]);
    ctx.write_csv("matrosov_certify.csv", &csv)?;
    let mut summary = ctx.summary("strict-Lyapunov certification");
    if corrupt > 0.0 {
        summary.kv("corrupt_phi_factor", fmt_f64(corrupt));
    }
    summary.kv("samples", rep.samples);
    summary.kv("coherent", rep.coherent);
    for m in &rep.coherence_messages {
        summary.line(format!("coherence: {m}"));
    }
    summary.kv("violations", rep.violations);
    summary.kv("max_violation", fmt_f64(rep.max_violation));
    summary.kv("min_slack", fmt_f64(rep.min_slack));
    summary.line("evidence is statistical (sampled envelopes), not rigorous".to_string());
    summary.kv("pass", rep.pass);
    ctx.write_summary("matrosov_certify_summary.txt", &summary)?;
    Ok(exit(rep.pass))
}

fn cmd_equilibria(ctx: &Ctx) -> Result<ExitCode> {
    match oscillators::find_equilibria(&ctx.spec, ctx.cfg.equilibria.starts, ctx.seed) {
        Ok(rep) => {
            let n = ctx.spec.n();
            let mut cols = vec!["root".to_string()];
            cols.extend((1..=n).map(|i| format!("q{i}")));
            cols.push("residual_inf".into());
            cols.push("inside_box".into());
            let mut csv = Csv::new(cols);
            for (i, root) in rep.roots.iter().enumerate() {
                let mut row = vec![i.to_string()];
                row.extend(root.q.iter().map(|x| fmt_f64(*x)));
                row.push(fmt_f64(root.residual_inf));
                row.push(root.inside_box.to_string());
                csv.push(row);
            }
            ctx.write_csv("equilibria.csv", &csv)?;
            let mut summary = ctx.summary("equilibrium search");
            summary.kv("class", format!("{:?}", rep.class));
            summary.kv("roots", rep.roots.len());
            summary.kv("starts", rep.starts);
            summary.kv("certificate_m", fmt_f64(rep.certificate.m));
            summary.kv("certificate_a", fmt_f64(rep.certificate.a));
            summary.kv("certificate_b", fmt_f64(rep.certificate.b));
            summary.kv("convexity_radius", fmt_f64(rep.certificate.r_radius));
            let all_inside = rep.roots.iter().all(|r| r.inside_box);
            summary.kv("all_inside_box", all_inside);
            let mut pass = all_inside;
            if ctx.cfg.equilibria.brute_grid > 0 && n == 2 {
                let brute = oscillators::brute_force_roots_2d(
                    &ctx.spec,
                    ctx.cfg.equilibria.brute_grid,
                    rep.certificate.a.max(rep.certificate.b) + 0.5,
                );
                summary.kv("brute_force_roots", brute.len());
                let matched = brute.len() == rep.roots.len();
                summary.kv("brute_force_matches", matched);
                pass &= matched;
            }
            summary.kv("pass", pass);
            ctx.write_summary("equilibria_summary.txt", &summary)?;
            Ok(exit(pass))
        }
        Err(e @ OscError::NoConvergence) => {
            let mut summary = ctx.summary("equilibrium search");
            summary.kv("pass", false);
            summary.line(format!("{e}"));
            ctx.write_summary("equilibria_summary.txt", &summary)?;
            Ok(ExitCode::from(2))
        }
        Err(e) => bail!("{e}"),
    }
}

fn cmd_order_stats(ctx: &Ctx) -> Result<ExitCode> {
    let block = &ctx.cfg.order_stats;
    let val = validate_oscillator_potentials(&ctx.spec);
    if !val.pass {
        bail!("potential validation failed: {:?}", val.messages);
    }
    let r = val.r.unwrap();
    let cfg = oscillators::OrderStatsConfig {
        budget: block.budget,
        kmax: if block.kmax > 0 { block.kmax } else { r + 2 },
        zero_tol: block.zero_tol,
        perturbations: block.perturbations.clone(),
        amplitude: block.amplitude,
    };
    match oscillators::order_statistics(&ctx.spec, &cfg, ctx.seed) {
        Ok(rep) => {
            let mut csv = Csv::new(["state_hash", "family", "h", "order", "resolved", "in_k_box"]);
            for row in &rep.rows {
                csv.push([
                    format!("{:016x}", row.state_hash),
                    row.family.to_string(),
                    fmt_f64(row.h),
                    row.order.map(|k| k.to_string()).unwrap_or_default(),
                    row.order.is_some().to_string(),
                    row.in_k_box.to_string(),
                ]);
            }
            ctx.write_csv("orders.csv", &csv)?;
            let mut summary = ctx.summary("order-of-vanishing statistics");
            summary.kv("threshold_r", rep.threshold_r);
            summary.kv("kmax", cfg.kmax);
            summary.kv("rows", rep.rows.len());
            summary.kv("max_finite_order", rep.max_finite_order);
            summary.kv("unresolved", rep.unresolved);
            summary.kv("cascade_mismatches", rep.cascade_mismatches);
            let hist = rep
                .order_counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(k, &c)| format!("{k}:{c}"))
                .collect::<Vec<_>>()
                .join(" ");
            summary.kv("order_histogram", hist);
            summary.kv("pass", true);
            ctx.write_summary("order_stats_summary.txt", &summary)?;
            Ok(ExitCode::SUCCESS)
        }
        Err(e @ OscError::ThresholdViolation { .. }) => {
            let mut summary = ctx.summary("order-of-vanishing statistics");
            summary.kv("pass", false);
            summary.line(format!("{e}"));
            ctx.write_summary("order_stats_summary.txt", &summary)?;
            Ok(ExitCode::from(2))
        }
        Err(e) => bail!("{e}"),
    }
}

fn cmd_decay_scan(ctx: &Ctx) -> Result<ExitCode> {
    let (coeffs, _) = calibrated(ctx).map_err(|e| anyhow::anyhow!("{e}"))?;
    let dcfg = ctx.cfg.decay.to_config(ctx.wall_clock_minutes)?;
    let rep = chainlab::sim::decay::decay_scan(&ctx.spec, &coeffs, &dcfg, ctx.seed)?;
    let mut csv = Csv::new([
        "h0",
        "family",
        "member",
        "window_lo",
        "window_hi",
        "t_meas",
        "rho",
        "delta_h",
        "ledger_residual",
        "w_increase_rel",
        "w_bound_c",
        "window_empty",
        "capped",
    ]);
    for r in &rep.rows {
        csv.push([
            fmt_f64(r.h0),
            r.family.to_string(),
            r.member.to_string(),
            fmt_f64(r.window_lo),
            fmt_f64(r.window_hi),
            fmt_f64(r.t_meas),
            fmt_f64(r.rho),
            fmt_f64(r.delta_h),
            fmt_f64(r.ledger_residual),
            fmt_f64(r.w_increase_rel),
            fmt_f64(r.w_bound_c),
            r.window_empty.to_string(),
            r.capped.to_string(),
        ]);
    }
    ctx.write_csv("decay.csv", &csv)?;
    let mut summary = ctx.summary("energy-dissipation scaling scan");
    summary.kv("gamma0", rep.gamma0);
    for (h0, rho) in &rep.per_h0_fast {
        summary.line(format!("fast_rotor H0={} mean_rho={}", fmt_f64(*h0), fmt_f64(*rho)));
    }
    if let Some(fit) = &rep.slope_fit {
        summary.kv("log_rho_slope", fmt_f64(fit.slope));
        summary.kv("log_rho_slope_se", fmt_f64(fit.slope_se));
    } else {
        summary.line("slope fit unavailable (fewer than 2 in-window energy levels)".to_string());
    }
    summary.kv("c_lower_bound", fmt_f64(rep.c_lower));
    let empties = rep.rows.iter().filter(|r| r.window_empty).count();
    summary.kv("window_empty_rows", empties);
    let capped = rep.rows.iter().filter(|r| r.capped).count();
    summary.kv("capped_rows", capped);
    if capped > 0 {
        summary.line("wall-clock cap engaged: byte reproducibility void for this run".to_string());
    }
    ctx.write_summary("decay_summary.txt", &summary)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_generator_check(ctx: &Ctx) -> Result<ExitCode> {
    let gb = &ctx.cfg.generator;
    let mut observables = Vec::new();
    for name in &gb.observables {
        match name.as_str() {
            "p1_squared" => observables.push(GenObservable::P1Squared),
            "energy" => observables.push(GenObservable::Energy),
            "rotor_w" => {
                let (coeffs, _) = calibrated(ctx).map_err(|e| anyhow::anyhow!("{e}"))?;
                observables.push(GenObservable::RotorW(coeffs));
            }
            other => bail!("unknown generator observable '{other}'"),
        }
    }
    let s = initial_state(ctx, &[], &[], gb.target_h, &gb.layout, 0x9e4)?;
    let gcfg = chainlab::sim::generator::GeneratorConfig {
        dt_list: gb.dt_list.clone(),
        ensemble: gb.ensemble,
    };
    let rep =
        chainlab::sim::generator::generator_check(&ctx.spec, &observables, &s, &gcfg, ctx.seed);
    let mut csv = Csv::new([
        "observable",
        "dt",
        "mc_estimate",
        "std_err",
        "analytic",
        "bias",
    ]);
    for check in &rep.checks {
        for row in &check.rows {
            csv.push([
                check.name.to_string(),
                fmt_f64(row.dt),
                fmt_f64(row.mc_estimate),
                fmt_f64(row.std_err),
                fmt_f64(check.analytic_total),
                fmt_f64(row.bias),
            ]);
        }
    }
    ctx.write_csv("generator.csv", &csv)?;
    let mut summary = ctx.summary("stochastic generator check");
    summary.kv("probe_energy", fmt_f64(rep.probe_energy));
    summary.kv("ensemble", gb.ensemble);
    for check in &rep.checks {
        summary.line(format!(
            "{}: analytic={} lie={} curvature={} bias_r2={} finest_sigma={}",
            check.name,
            fmt_f64(check.analytic_total),
            fmt_f64(check.analytic_lie),
            fmt_f64(check.curvature_term),
            fmt_f64(check.bias_r_squared),
            fmt_f64(check.finest_sigma),
        ));
    }
    if let (Some(asym), Some(val)) = (rep.w_curvature_asymptote, rep.w_generator_value) {
        summary.kv("w_curvature_asymptote", fmt_f64(asym));
        summary.kv("w_generator_value", fmt_f64(val));
        summary.kv("w_generator_positive", val > 0.0);
        summary.line(
            "positive generator action on W: not a stochastic Lyapunov function".to_string(),
        );
    }
    ctx.write_summary("generator_summary.txt", &summary)?;
    Ok(ExitCode::SUCCESS)
}

fn wall(ctx: &Ctx) -> Option<std::time::Duration> {
    (ctx.wall_clock_minutes > 0.0)
        .then(|| std::time::Duration::from_secs_f64(ctx.wall_clock_minutes * 60.0))
}

fn exit(pass: bool) -> ExitCode {
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
