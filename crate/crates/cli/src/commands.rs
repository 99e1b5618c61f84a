use crate::config::{self, FileConfig, DEFAULT_START};
use crate::manifest::{Outputs, RunManifest};
use crate::{Cli, Command, DynamicsArgs, EnumerateArgs, Failure, LyapunovArgs, MinorityArgs, Mode, PoincareArgs, SimulateArgs, OUT_DIR_ENV};
use gamedyn::bimatrix::{build_generalized_rps, game_from_json, identity_coordination_game, MixedProfile, RpsParams};
use gamedyn::chaos::{
    classify_regime, lyapunov_spectrum_with, lyapunov_sweep, poincare_section, residence_times, section_occupancy, LyapunovResult,
};
use gamedyn::equilibrium::{
    enumerate_equilibria, lemke_howson, random_nondegenerate_game, report_to_json, verify_counting_laws, LawCheck, LawStatus,
};
use gamedyn::minority::{attendance_sigma, mean_attendance, sigma_vs_m_sweep, MinorityGame};
use gamedyn::replicator::{integrate, time_average_payoff, Coords};
use gamedyn::scalar::rational_to_string;
use gamedyn::{export, Error, Game, RationalGame, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

type CmdResult = std::result::Result<(), Failure>;

struct Ctx {
    file: FileConfig,
    out_dir: PathBuf,
    started: Instant,
}

impl Ctx {
    fn finish(&self, outputs: Outputs, command: &str, seed: Option<u64>, config: Value, summary: Value) -> Result<()> {
        let manifest = RunManifest {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            outputs: Vec::new(),
            summary: summary.clone(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let path = outputs.finish(manifest)?;
        println!("{}", serde_json::to_string_pretty(&json!({ "manifest": path, "summary": summary })).unwrap());
        Ok(())
    }

    fn eps(&self, d: &DynamicsArgs) -> Result<(f64, f64)> {
        match (&d.eps, self.file.game.eps_x, self.file.game.eps_y) {
            (Some(v), _, _) => Ok((v[0], v[1])),
            (None, Some(x), Some(y)) => Ok((x, y)),
            _ => Err(Error::Parse("tie payoffs missing: pass --eps EPS_X EPS_Y or set game.eps_x/eps_y".into())),
        }
    }

    fn start(&self, d: &DynamicsArgs) -> Result<(String, MixedProfile<f64>)> {
        let s = d.start.clone().or_else(|| self.file.game.start.clone()).unwrap_or_else(|| DEFAULT_START.into());
        let p = config::parse_start(&s, 3, 3)?;
        Ok((s, p))
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("plain data serializes")
}

pub fn run(cli: Cli) -> CmdResult {
    let file = match &cli.config {
        Some(p) => config::load(p)?,
        None => FileConfig::default(),
    };
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gamedyn-out"));
    let ctx = Ctx { file, out_dir, started: Instant::now() };
    match cli.command {
        Command::Enumerate(a) => enumerate(&ctx, a),
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Lyapunov(a) => lyapunov(&ctx, a),
        Command::Poincare(a) => poincare(&ctx, a),
        Command::Minority(a) => minority(&ctx, a),
    }
}

fn law_json(checks: &[LawCheck]) -> Value {
    to_json(&checks)
}

fn enumerate(ctx: &Ctx, a: EnumerateArgs) -> CmdResult {
    let mut out = Outputs::new(&ctx.out_dir)?;
    if let Some(shape) = &a.random {
        return enumerate_random(ctx, &a, shape, out);
    }
    let (source, game): (String, RationalGame) = if let Some(n) = a.identity {
        (format!("identity {n}"), identity_coordination_game(n)?)
    } else if let Some(eps) = &a.rps {
        let g: Game = build_generalized_rps(&RpsParams::new(eps[0], eps[1])?)?;
        (format!("rps {} {}", eps[0], eps[1]), g.to_rational()?)
    } else if let Some(path) = &a.game {
        let text = std::fs::read_to_string(path).map_err(Error::from)?;
        (path.display().to_string(), game_from_json(&text)?.to_rational()?)
    } else {
        return Err(Error::Parse("no game given: use --identity, --rps, --random or a game file".into()).into());
    };

    let report = enumerate_equilibria(&game)?;
    let n = if game.rows() == game.cols() { game.rows() } else { 0 };
    let laws = verify_counting_laws(&report, n);
    let lh = match a.lemke_howson {
        Some(label) => {
            let eq = lemke_howson(&game, label)?;
            let strs = |v: &[gamedyn::Rational]| v.iter().map(rational_to_string).collect::<Vec<_>>();
            Some(json!({ "label": label, "x": strs(&eq.x), "y": strs(&eq.y), "in_enumeration": report.contains(&eq) }))
        }
        None => None,
    };
    let mut doc = report_to_json(&report);
    doc["laws"] = law_json(&laws);
    if let Some(lh) = &lh {
        doc["lemke_howson"] = lh.clone();
    }
    out.write_json("enumerate.json", &doc)?;
    let summary = json!({
        "source": source,
        "count": report.count(),
        "pure_count": report.pure_count(),
        "degenerate": report.degenerate,
        "laws_passed": laws.iter().all(|c| c.status == LawStatus::Pass || c.status == LawStatus::NotApplicable),
    });
    ctx.finish(out, "enumerate", None, json!({ "source": source, "lemke_howson": a.lemke_howson }), summary)?;
    if a.assert_laws {
        if report.degenerate {
            return Err(Error::Degenerate("counting laws do not apply to degenerate games".into()).into());
        }
        if let Some(bad) = laws.iter().find(|c| !c.passed()) {
            return Err(Failure::Assertion(format!("{:?}: {}", bad.law, bad.detail)));
        }
    }
    Ok(())
}

fn enumerate_random(ctx: &Ctx, a: &EnumerateArgs, shape: &str, mut out: Outputs) -> CmdResult {
    let (rows, cols) = config::parse_shape(shape)?;
    if a.trials == 0 || a.max_payoff < 1 {
        return Err(Error::Bounds("need --trials >= 1 and --max-payoff >= 1".into()).into());
    }
    if rows.max(cols) > gamedyn::equilibrium::MAX_ENUM_SIZE || rows == 0 || cols == 0 {
        return Err(Error::Size { rows, cols, limit: gamedyn::equilibrium::MAX_ENUM_SIZE }.into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let games: Vec<RationalGame> = (0..a.trials).map(|_| random_nondegenerate_game(rows, cols, -a.max_payoff, a.max_payoff, &mut rng)).collect();
    let n = if rows == cols { rows } else { 0 };
    let results: Vec<(usize, usize, Vec<String>)> = games
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let rep = enumerate_equilibria(g)?;
            let bad = verify_counting_laws(&rep, n)
                .into_iter()
                .filter(|c| !c.passed())
                .map(|c| format!("game {i}: {:?} ({})", c.law, c.detail))
                .collect();
            Ok((rep.count(), rep.pure_count(), bad))
        })
        .collect::<Result<_>>()?;
    let mut histogram = BTreeMap::new();
    for (c, _, _) in &results {
        *histogram.entry(*c).or_insert(0usize) += 1;
    }
    let violations: Vec<String> = results.iter().flat_map(|r| r.2.clone()).collect();
    let doc = json!({
        "shape": shape,
        "trials": a.trials,
        "seed": a.seed,
        "counts": results.iter().map(|r| r.0).collect::<Vec<_>>(),
        "pure_counts": results.iter().map(|r| r.1).collect::<Vec<_>>(),
        "count_histogram": histogram,
        "violations": violations,
    });
    out.write_json("enumerate.json", &doc)?;
    let summary = json!({
        "trials": a.trials,
        "max_count": results.iter().map(|r| r.0).max(),
        "count_histogram": histogram,
        "violations": violations.len(),
    });
    let config = json!({ "shape": shape, "trials": a.trials, "max_payoff": a.max_payoff });
    ctx.finish(out, "enumerate", Some(a.seed), config, summary)?;
    if a.assert_laws && !violations.is_empty() {
        return Err(Failure::Assertion(violations.join("; ")));
    }
    Ok(())
}

fn simulate(ctx: &Ctx, a: SimulateArgs) -> CmdResult {
    let (ex, ey) = ctx.eps(&a.dynamics)?;
    let params = RpsParams::new(ex, ey)?;
    let game = build_generalized_rps(&params)?;
    let (start_str, start) = ctx.start(&a.dynamics)?;
    let mut cfg = ctx.file.integrator.clone();
    if let Some(t) = a.t_end {
        cfg.t_end = t;
    }
    if let Some(r) = a.record_every {
        cfg.record_every = r;
    }
    match a.mode {
        Some(Mode::Simplex) => cfg.coords = Coords::Simplex,
        Some(Mode::LogRatio) => cfg.coords = Coords::LogRatio,
        None => {}
    }
    let threshold = a.threshold.unwrap_or(ctx.file.diagnostics.residence_threshold);

    let traj = integrate(&game, &start, &cfg)?;
    let mut out = Outputs::new(&ctx.out_dir)?;
    out.write("trajectory.csv", |buf| export::write_trajectory(&traj, buf))?;
    let mut summary = json!({
        "samples": traj.samples.len(),
        "zero_sum": params.is_zero_sum(),
        "hamiltonian_drift": traj.hamiltonian_drift(),
        "final": { "x": traj.samples.last().map(|s| s.profile.x().to_vec()), "y": traj.samples.last().map(|s| s.profile.y().to_vec()) },
    });
    if let Ok((p1, p2)) = time_average_payoff(&traj, &game) {
        summary["time_average_payoff"] = json!([p1, p2]);
    }
    if cfg.coords == Coords::Simplex {
        let rep = residence_times(&traj, threshold)?;
        out.write("residence.csv", |buf| export::write_residence(&rep, buf))?;
        let fit = rep.duration_trend(0);
        summary["residence"] = json!({
            "threshold": threshold,
            "episodes": rep.episodes.len(),
            "corner_order": rep.corner_order().iter().map(|c| c + 1).collect::<Vec<_>>(),
            "duration_slope": fit.map(|f| f.slope),
            "duration_r_squared": fit.map(|f| f.r_squared),
        });
    }
    let config = json!({ "eps_x": ex, "eps_y": ey, "start": start_str, "integrator": to_json(&cfg), "residence_threshold": threshold });
    ctx.finish(out, "simulate", None, config, summary)?;
    Ok(())
}

fn spectrum_json(r: &LyapunovResult<f64>, tol: f64) -> Value {
    let regime = match classify_regime(r, tol) {
        Ok(c) => to_json(&c.regime),
        Err(_) => json!("inconclusive"),
    };
    json!({
        "exponents": r.exponents,
        "pair_residual": r.pair_residual(),
        "sum": r.sum(),
        "escaped": r.escaped,
        "regime": regime,
    })
}

fn lyapunov(ctx: &Ctx, a: LyapunovArgs) -> CmdResult {
    let mut cfg = ctx.file.diagnostics.lyapunov.clone();
    if let Some(t) = a.t_total {
        cfg.t_total = t;
    }
    if let Some(q) = a.qr_interval {
        cfg.qr_interval = q;
    }
    if let Some(t) = a.transient {
        cfg.transient = t;
    }
    let tol = ctx.file.diagnostics.chaos_tol;
    let (start_str, start) = ctx.start(&a.dynamics)?;
    let mut out = Outputs::new(&ctx.out_dir)?;
    let mut residuals = Vec::new();

    let (summary, config) = if let Some(sweep) = &a.eps_sweep {
        let values = config::parse_sweep(sweep)?;
        let results = lyapunov_sweep(&values, a.zero_sum, &start, &cfg)?;
        out.write("lyapunov_sweep.csv", |buf| {
            let mut w = csv::Writer::from_writer(buf);
            let io = |e: csv::Error| Error::Io(e.to_string());
            w.write_record(["eps_x", "eps_y", "lambda1", "lambda2", "lambda3", "lambda4", "regime"]).map_err(io)?;
            for (e, r) in &results {
                let ey = if a.zero_sum { 0.0 - e } else { *e };
                let mut row = vec![format!("{e:e}"), format!("{ey:e}")];
                row.extend(r.exponents.iter().map(|l| format!("{l:e}")));
                row.push(spectrum_json(r, tol)["regime"].as_str().unwrap_or("").to_string());
                w.write_record(&row).map_err(io)?;
            }
            w.flush()?;
            Ok(())
        })?;
        residuals.extend(results.iter().map(|(e, r)| (*e, r.pair_residual())));
        let rows: Vec<Value> = results.iter().map(|(e, r)| json!({ "eps_x": e, "spectrum": spectrum_json(r, tol) })).collect();
        (json!({ "sweep": rows }), json!({ "eps_sweep": sweep, "zero_sum": a.zero_sum }))
    } else {
        let (ex, ey) = ctx.eps(&a.dynamics)?;
        let game = build_generalized_rps(&RpsParams::new(ex, ey)?)?;
        let r = lyapunov_spectrum_with(&game, &start, &cfg)?;
        out.write("lyapunov.csv", |buf| export::write_lyapunov(&r, buf))?;
        residuals.push((ex, r.pair_residual()));
        (spectrum_json(&r, tol), json!({ "eps_x": ex, "eps_y": ey }))
    };
    let mut config = config;
    config["start"] = json!(start_str);
    config["lyapunov"] = to_json(&cfg);
    config["chaos_tol"] = json!(tol);
    ctx.finish(out, "lyapunov", None, config, summary)?;
    if a.check_pairs {
        if let Some((e, r)) = residuals.iter().find(|(_, r)| !(*r < 0.01)) {
            return Err(Failure::Assertion(format!("pair residual {r:e} at eps_x = {e}")));
        }
    }
    Ok(())
}

fn poincare(ctx: &Ctx, a: PoincareArgs) -> CmdResult {
    let (ex, ey) = ctx.eps(&a.dynamics)?;
    let game = build_generalized_rps(&RpsParams::new(ex, ey)?)?;
    let (start_str, start) = ctx.start(&a.dynamics)?;
    let mut cfg = ctx.file.integrator.clone();
    if let Some(t) = a.t_end {
        cfg.t_end = t;
    }
    let traj = integrate(&game, &start, &cfg)?;
    let section = poincare_section(&traj)?;
    let grid = ctx.file.diagnostics.grid;
    let mut out = Outputs::new(&ctx.out_dir)?;
    out.write("section.csv", |buf| export::write_section(&section.points, buf))?;
    let summary = json!({
        "points": section.points.len(),
        "degenerate": section.degenerate,
        "grid": grid,
        "occupancy": section_occupancy(&section.points, grid, None),
        "occupancy_increasing": section_occupancy(&section.points, grid, Some(1)),
    });
    let config = json!({ "eps_x": ex, "eps_y": ey, "start": start_str, "integrator": to_json(&cfg) });
    ctx.finish(out, "poincare", None, config, summary)?;
    Ok(())
}

fn minority(ctx: &Ctx, a: MinorityArgs) -> CmdResult {
    let mut cfg = ctx.file.minority.clone();
    if let Some(n) = a.n {
        cfg.n_agents = n;
    }
    if let Some(m) = a.m {
        cfg.m = m;
    }
    if let Some(s) = a.s {
        cfg.s = s;
    }
    if let Some(t) = a.steps {
        cfg.t_steps = t;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    let mut out = Outputs::new(&ctx.out_dir)?;

    if let Some(range) = &a.m_sweep {
        let ms = config::parse_int_range(range)?;
        let seeds: Vec<u64> = (cfg.seed..cfg.seed + a.seeds).collect();
        let sweep = sigma_vs_m_sweep(cfg.n_agents, cfg.s, &ms, cfg.t_steps, &seeds, a.discard)?;
        out.write("sweep.csv", |buf| export::write_sigma_sweep(&sweep, buf))?;
        let summary = json!({
            "rows": to_json(&sweep.rows),
            "argmin_m": sweep.argmin_m,
            "interior_minimum": sweep.has_interior_minimum(),
        });
        let config = json!({ "minority": to_json(&cfg), "m_sweep": range, "seeds": seeds, "discard": a.discard });
        ctx.finish(out, "minority", Some(cfg.seed), config, summary)?;
        return Ok(());
    }

    let mut game = MinorityGame::new(&cfg)?;
    if a.dump_population {
        let doc = json!({ "agents": to_json(&game.agents), "initial_labels": game.record.initial_labels });
        out.write_json("population.json", &doc)?;
    }
    game.run_for(cfg.t_steps);
    let rec = &game.record;
    out.write("minority.csv", |buf| export::write_minority_run(rec, buf))?;
    let summary = json!({
        "steps": rec.len(),
        "mean_attendance": (!rec.is_empty()).then(|| mean_attendance(rec, a.discard.min(rec.len()))),
        "sigma": attendance_sigma(rec, a.discard).ok(),
        "sigma_random_baseline": (cfg.n_agents as f64).sqrt() / 2.0,
        "wins": game.agents.iter().map(|g| g.wins).collect::<Vec<_>>(),
    });
    let config = json!({ "minority": to_json(&cfg), "discard": a.discard });
    ctx.finish(out, "minority", Some(cfg.seed), config, summary)?;
    Ok(())
}
