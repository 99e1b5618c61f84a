//! Acceptance checks. Each test prints one `criterion N ...: PASS|FAIL` line
//! before asserting; run with `--nocapture` to see them.

use gamedyn::bimatrix::{build_generalized_rps, identity_coordination_game, is_nash, MixedProfile, RpsParams};
use gamedyn::chaos::{lyapunov_spectrum_with, poincare_section, residence_times, section_occupancy, LyapunovConfig};
use gamedyn::equilibrium::{enumerate_equilibria, lemke_howson, random_nondegenerate_game, verify_counting_laws};
use gamedyn::export;
use gamedyn::minority::{
    attendance_sigma, coin_flip_record, mean_attendance, predictability, run, sigma_vs_m_sweep, Agent, MinorityGame,
    MinorityGameConfig, StrategyTable,
};
use gamedyn::ode::OdeSystem;
use gamedyn::replicator::{
    hamiltonian_gradient, integrate, poisson_structure, time_average_payoff, vector_field, Coords, IntegratorConfig,
    LogRatioFlow,
};
use gamedyn::{Rational, RationalGame};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::time::{Duration, Instant};

fn report(n: &str, name: &str, pass: bool, detail: String) -> bool {
    println!("criterion {n} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    pass
}

fn chaotic_start() -> MixedProfile<f64> {
    MixedProfile::new(vec![0.5, 0.01, 0.49], vec![0.5, 0.25, 0.25]).unwrap()
}

fn zero_sum(eps: f64) -> gamedyn::Game {
    build_generalized_rps(&RpsParams::zero_sum(eps).unwrap()).unwrap()
}

#[test]
fn c01_identity_game_counts() {
    let mut ok = true;
    let mut detail = Vec::new();
    for (n, expected) in [(2, 3), (3, 7), (4, 15)] {
        let game: RationalGame = identity_coordination_game(n).unwrap();
        let t0 = Instant::now();
        let rep = enumerate_equilibria(&game).unwrap();
        let dt = t0.elapsed();
        ok &= rep.count() == expected && dt < Duration::from_secs(1);
        detail.push(format!("n={n}: {} in {dt:.2?}", rep.count()));
    }
    assert!(report("1", "identity-game counts", ok, detail.join(", ")));
}

#[test]
fn c02_counting_laws() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut max_counts = Vec::new();
    for n in [2usize, 3, 4] {
        let games: Vec<RationalGame> = (0..200).map(|_| random_nondegenerate_game(n, n, -10, 10, &mut rng)).collect();
        let results: Vec<(usize, Vec<String>)> = games
            .par_iter()
            .map(|g| {
                let rep = enumerate_equilibria(g).unwrap();
                let bad = verify_counting_laws(&rep, n)
                    .into_iter()
                    .filter(|c| !c.passed() || rep.degenerate)
                    .map(|c| format!("{n}x{n} {:?}: {}", c.law, c.detail))
                    .collect();
                (rep.count(), bad)
            })
            .collect();
        max_counts.push(format!("{n}x{n} max {}", results.iter().map(|r| r.0).max().unwrap()));
        failures.extend(results.into_iter().flat_map(|r| r.1));
    }
    let dt = t0.elapsed();
    let ok = failures.is_empty() && dt < Duration::from_secs(120);
    assert!(report("2", "counting laws", ok, format!("600 games, {}, {} violations, {dt:.2?}", max_counts.join(", "), failures.len())), "{failures:?}");
}

#[test]
fn c03_lemke_howson_in_enumerated_set() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let games: Vec<RationalGame> = (0..100).map(|_| random_nondegenerate_game(3, 3, -10, 10, &mut rng)).collect();
    let misses = games
        .par_iter()
        .filter(|g| {
            let eq = lemke_howson(*g, 1).unwrap();
            !enumerate_equilibria(*g).unwrap().contains(&eq)
        })
        .count();
    let dt = t0.elapsed();
    let ok = misses == 0 && dt < Duration::from_secs(30);
    assert!(report("3", "Lemke-Howson membership", ok, format!("{misses}/100 misses, {dt:.2?}")));
}

#[test]
fn c04_uniform_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let uniform = MixedProfile::uniform(3, 3);
    let mut worst = 0.0f64;
    let mut all_nash = true;
    for _ in 0..50 {
        let p = RpsParams::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)).unwrap();
        let game = build_generalized_rps(&p).unwrap();
        let (dx, dy): (Vec<f64>, Vec<f64>) = vector_field(&game, &uniform).unwrap();
        worst = dx.iter().chain(&dy).fold(worst, |a, v| a.max(v.abs()));
        all_nash &= is_nash(&game, &uniform, &1e-12).unwrap();
        // exact check on a nearby rational game
        let q = |k: i64| Rational::new(k.into(), 100.into());
        let rp = RpsParams::new(q(rng.gen_range(-100..=100)), q(rng.gen_range(-100..=100))).unwrap();
        let exact: RationalGame = build_generalized_rps(&rp).unwrap();
        all_nash &= is_nash(&exact, &MixedProfile::uniform(3, 3), &q(0)).unwrap();
    }
    let ok = worst < 1e-15 && all_nash;
    assert!(report("4", "uniform Nash fixed point", ok, format!("max |field| = {worst:e}, all Nash = {all_nash}")));
}

#[test]
fn c05_hamiltonian_conservation() {
    let t0 = Instant::now();
    let cfg = IntegratorConfig { t_end: 1000.0, tol_rel: 1e-10, tol_abs: 1e-10, ..Default::default() };
    let drifts: Vec<(f64, f64)> = [0.1, 0.25, 0.5]
        .par_iter()
        .map(|&e| (e, integrate(&zero_sum(e), &chaotic_start(), &cfg).unwrap().hamiltonian_drift().unwrap()))
        .collect();
    let control_game = build_generalized_rps(&RpsParams::new(0.2, 0.2).unwrap()).unwrap();
    let control = integrate(&control_game, &chaotic_start(), &cfg).unwrap().hamiltonian_drift().unwrap();
    let dt = t0.elapsed();
    let ok = drifts.iter().all(|(_, d)| *d < 1e-6) && control > 1e-3 && dt < Duration::from_secs(60);
    let detail = drifts.iter().map(|(e, d)| format!("eps={e}: {d:.2e}")).collect::<Vec<_>>().join(", ");
    assert!(report("5", "Hamiltonian conservation", ok, format!("{detail}; control drift {control:.3e}; {dt:.2?}")));
}

#[test]
fn c06_poisson_consistency() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let eps: f64 = rng.gen_range(-1.0..=1.0);
        let game = zero_sum(eps);
        let mut draw = || {
            let w: Vec<f64> = (0..3).map(|_| rng.gen_range(0.01..1.0)).collect();
            let s: f64 = w.iter().sum();
            w.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let p = MixedProfile::new(draw(), draw()).unwrap();
        let flow = LogRatioFlow { game: &game };
        let s = flow.to_state(&p).unwrap();
        let mut f = [0.0; 4];
        flow.rhs(0.0, &s, &mut f);
        let (u, v) = flow.split(&s);
        let jg = poisson_structure(eps).unwrap().apply(&hamiltonian_gradient(u, v));
        let norm = |a: &[f64]| a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = f.iter().zip(&jg).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff) / norm(&f).max(1e-12));
    }
    assert!(report("6", "J-consistency", worst < 1e-6, format!("max relative error {worst:.2e} over 100 points")));
}

#[test]
fn c07_chaos_transition() {
    let t0 = Instant::now();
    let cfg = LyapunovConfig { t_total: 5000.0, qr_interval: 1.0, ..Default::default() };
    let runs: Vec<_> = [0.0, 0.5].par_iter().map(|&e| lyapunov_spectrum_with(&zero_sum(e), &chaotic_start(), &cfg).unwrap()).collect();
    let (r0, r5) = (&runs[0], &runs[1]);
    let pairs_ok = runs.iter().all(|r| r.pair_residual() < 0.01 && r.sum().abs() < 0.01);
    let dt = t0.elapsed();
    let ok = r0.largest().abs() < 0.005 && r5.largest() > 0.01 && pairs_ok && !r0.escaped && !r5.escaped && dt < Duration::from_secs(300);
    let detail = format!(
        "lambda1(0) = {:.5}, lambda1(0.5) = {:.5}, pair residuals {:.1e}/{:.1e}, {dt:.2?}",
        r0.largest(),
        r5.largest(),
        r0.pair_residual(),
        r5.pair_residual()
    );
    assert!(report("7", "chaos transition", ok, detail));
}

#[test]
fn c08_time_average_payoff() {
    let t0 = Instant::now();
    let cfg = IntegratorConfig { t_end: 5000.0, ..Default::default() };
    let results: Vec<(f64, f64)> = [0.0, 0.1, 0.25, 0.5]
        .par_iter()
        .map(|&e| {
            let game = zero_sum(e);
            let traj = integrate(&game, &chaotic_start(), &cfg).unwrap();
            (e, time_average_payoff(&traj, &game).unwrap().0)
        })
        .collect();
    let dt = t0.elapsed();
    let ok = results.iter().all(|(e, avg)| (avg - e / 3.0).abs() < 0.02) && dt < Duration::from_secs(60);
    let detail = results.iter().map(|(e, a)| format!("eps={e}: {a:.4} vs {:.4}", e / 3.0)).collect::<Vec<_>>().join(", ");
    assert!(report("8", "time-average payoff", ok, format!("{detail}; {dt:.2?}")));
}

#[test]
fn c09_poincare_occupancy() {
    let t0 = Instant::now();
    let cfg = IntegratorConfig { t_end: 5000.0, ..Default::default() };
    let occ: Vec<usize> = [0.0, 0.5]
        .par_iter()
        .map(|&e| {
            let traj = integrate(&zero_sum(e), &chaotic_start(), &cfg).unwrap();
            section_occupancy(&poincare_section(&traj).unwrap().points, 50, None)
        })
        .collect();
    let dt = t0.elapsed();
    let ratio = occ[1] as f64 / occ[0] as f64;
    let ok = ratio >= 3.0 && dt < Duration::from_secs(120);
    assert!(report("9", "Poincare occupancy", ok, format!("cells {} vs {}, ratio {ratio:.2}, {dt:.2?}", occ[1], occ[0])));
}

#[test]
fn c10_heteroclinic_residence() {
    let cfg = IntegratorConfig { t_end: 1000.0, coords: Coords::Simplex, ..Default::default() };
    let fit = |ex: f64, ey: f64| {
        let game = build_generalized_rps(&RpsParams::new(ex, ey).unwrap()).unwrap();
        let traj = integrate(&game, &chaotic_start(), &cfg).unwrap();
        let rep = residence_times(&traj, 0.9).unwrap();
        (rep.episodes.len(), rep.duration_trend(0).unwrap())
    };
    let (n_het, het) = fit(-0.1, 0.05);
    let (n_tr, tr) = fit(0.1, -0.05);
    let ok = het.slope > 0.0 && het.r_squared > 0.8 && tr.r_squared < het.r_squared;
    let detail = format!(
        "sum<0: {n_het} episodes, slope {:.3}, R2 {:.3}; sum>0: {n_tr} episodes, R2 {:.3}",
        het.slope, het.r_squared, tr.r_squared
    );
    assert!(report("10", "heteroclinic residence", ok, detail));
}

#[test]
fn c11a_minority_attendance() {
    let rec = run(&MinorityGameConfig { n_agents: 101, m: 2, s: 2, t_steps: 10_000, seed: 0 }).unwrap();
    let mean = mean_attendance(&rec, 0);
    let sigma = attendance_sigma(&rec, 0).unwrap();
    let baseline = 101f64.sqrt() / 2.0;
    let ok = (mean - 50.5).abs() <= 1.0 && sigma < baseline;
    assert!(report("11a", "minority attendance", ok, format!("mean {mean:.3}, sigma {sigma:.3} vs sqrt(N)/2 = {baseline:.3}")));
}

#[test]
fn c11b_sigma_sweep() {
    let t0 = Instant::now();
    let ms: Vec<usize> = (1..=12).collect();
    let sweep = sigma_vs_m_sweep(101, 2, &ms, 10_000, &[0, 1, 2, 3, 4], 1000).unwrap();
    let sig: Vec<String> = sweep.rows.iter().map(|r| format!("{:.2}", r.sigma_mean)).collect();
    let ok = sweep.has_interior_minimum() && t0.elapsed() < Duration::from_secs(180);
    assert!(report("11b", "sigma vs m", ok, format!("argmin m = {}, sigma = [{}]", sweep.argmin_m, sig.join(" "))));
}

#[test]
fn c11c_predictability() {
    let steps = 10_000;
    let probe = |m: usize| {
        let rec = run(&MinorityGameConfig { n_agents: 101, m, s: 2, t_steps: steps, seed: 0 }).unwrap();
        let coin = coin_flip_record(101, m, steps, 1).unwrap();
        (predictability(&rec, m).unwrap().flatness.unwrap(), predictability(&coin, m).unwrap().flatness.unwrap())
    };
    let (small, coin_small) = probe(2);
    let (large, coin_large) = probe(6);
    // flat: no worse than sampling noise; non-flat: well beyond it
    let ok = small <= coin_small.max(0.05) && large > 3.0 * coin_large;
    let detail = format!("m=2: {small:.4} (coin {coin_small:.4}); m=6: {large:.4} (coin {coin_large:.4})");
    assert!(report("11c", "predictability", ok, detail));
}

/// Three agents, `m = 1`, one table each: two contrarians and one follower,
/// starting after an A-majority step.
///
/// | t | history | choices | attendance(A) | minority |
/// |---|---------|---------|---------------|----------|
/// | 0 | 0       | B B A   | 1             | A (0)    |
/// | 1 | 1       | A A B   | 2             | B (1)    |
/// | 2 | 0       | B B A   | 1             | A (0)    |
/// | 3 | 1       | A A B   | 2             | B (1)    |
/// | 4 | 0       | B B A   | 1             | A (0)    |
#[test]
fn c11d_hand_trace() {
    let contrarian = || Agent::new(vec![StrategyTable::new(1, vec![1, 0]).unwrap()]).unwrap();
    let follower = Agent::new(vec![StrategyTable::new(1, vec![0, 1]).unwrap()]).unwrap();
    let mut g = MinorityGame::from_parts(vec![contrarian(), contrarian(), follower], vec![0], ChaCha8Rng::seed_from_u64(0)).unwrap();
    g.run_for(5);
    let r = &g.record;
    let wins: Vec<u64> = g.agents.iter().map(|a| a.wins).collect();
    let scores: Vec<i64> = g.agents.iter().map(|a| a.virtual_scores[0]).collect();
    let ok = r.attendance == [1, 2, 1, 2, 1]
        && r.minority_bits == [0, 1, 0, 1, 0]
        && r.histories == [0, 1, 0, 1, 0]
        && wins == [0, 0, 5]
        && scores == [0, 0, 5];
    assert!(report("11d", "hand trace", ok, format!("attendance {:?}, wins {wins:?}", r.attendance)));
}

#[test]
fn c12_determinism() {
    fn twice(f: impl Fn() -> Vec<u8>) -> bool {
        let a = f();
        !a.is_empty() && a == f()
    }
    let minority = twice(|| {
        let mut buf = Vec::new();
        export::write_minority_run(&run(&MinorityGameConfig { seed: 12, ..Default::default() }).unwrap(), &mut buf).unwrap();
        buf
    });
    let sweep = twice(|| {
        let mut buf = Vec::new();
        export::write_sigma_sweep(&sigma_vs_m_sweep(51, 2, &[1, 3, 5], 2000, &[1, 2, 3], 100).unwrap(), &mut buf).unwrap();
        buf
    });
    let trajectory = twice(|| {
        let mut buf = Vec::new();
        let traj = integrate(&zero_sum(0.5), &chaotic_start(), &IntegratorConfig { t_end: 200.0, ..Default::default() }).unwrap();
        export::write_trajectory(&traj, &mut buf).unwrap();
        export::write_section(&poincare_section(&traj).unwrap().points, &mut buf).unwrap();
        buf
    });
    let lyapunov = twice(|| {
        let mut buf = Vec::new();
        let cfg = LyapunovConfig { t_total: 300.0, transient: 30.0, ..Default::default() };
        export::write_lyapunov(&lyapunov_spectrum_with(&zero_sum(0.25), &chaotic_start(), &cfg).unwrap(), &mut buf).unwrap();
        buf
    });
    let ok = minority && sweep && trajectory && lyapunov;
    let detail = format!("minority {minority}, sweep {sweep}, trajectory+section {trajectory}, lyapunov {lyapunov}");
    assert!(report("12", "determinism", ok, detail));
}
