//! The minority game.
//!
//! Choices are coded `0 = A`, `1 = B`. Each step is labelled with the more
//! popular choice; the last `m` labels form the public history an agent's
//! lookup table maps to a choice. Agents on the less popular side win.
//!
//! Histories index tables as binary numbers with the oldest label as the
//! most significant bit, so for `m = 2` the input `(0, 1)` (A then B) is
//! entry 1.

use crate::error::{Error, Result};
use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const MAX_MEMORY: usize = 16;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StrategyTable {
    m: usize,
    outputs: Vec<u8>,
}

impl StrategyTable {
    pub fn new(m: usize, outputs: Vec<u8>) -> Result<Self> {
        check_memory(m)?;
        if outputs.len() != 1 << m {
            return Err(Error::Dimension(format!("table for m = {m} needs {} outputs, got {}", 1 << m, outputs.len())));
        }
        if outputs.iter().any(|b| *b > 1) {
            return Err(Error::Domain("table outputs must be 0 or 1".into()));
        }
        Ok(Self { m, outputs })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn outputs(&self) -> &[u8] {
        &self.outputs
    }

    pub fn choice(&self, history: usize) -> u8 {
        self.outputs[history]
    }
}

fn check_memory(m: usize) -> Result<()> {
    if (1..=MAX_MEMORY).contains(&m) {
        Ok(())
    } else {
        Err(Error::Bounds(format!("memory m = {m} outside 1..={MAX_MEMORY}")))
    }
}

/// Table with independent fair output bits.
pub fn random_strategy<R: Rng>(m: usize, rng: &mut R) -> Result<StrategyTable> {
    check_memory(m)?;
    let outputs = (0..1usize << m).map(|_| u8::from(rng.gen::<bool>())).collect();
    Ok(StrategyTable { m, outputs })
}

/// Number of distinct lookup tables over `m`-bit histories: `2^(2^m)`.
pub fn strategy_space_size(m: u32) -> BigUint {
    BigUint::from(1u8) << (1usize << m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub strategies: Vec<StrategyTable>,
    pub virtual_scores: Vec<i64>,
    pub last_played: usize,
    /// Number of steps this agent was in the minority.
    pub wins: u64,
}

impl Agent {
    pub fn new(strategies: Vec<StrategyTable>) -> Result<Self> {
        let Some(first) = strategies.first() else {
            return Err(Error::Bounds("an agent needs at least one strategy".into()));
        };
        if strategies.iter().any(|s| s.m() != first.m()) {
            return Err(Error::Dimension("strategies of one agent must share m".into()));
        }
        let s = strategies.len();
        Ok(Self { strategies, virtual_scores: vec![0; s], last_played: 0, wins: 0 })
    }

    fn pick<R: Rng>(&mut self, rng: &mut R) -> usize {
        let best = *self.virtual_scores.iter().max().unwrap();
        let tied: Vec<usize> = (0..self.virtual_scores.len()).filter(|&i| self.virtual_scores[i] == best).collect();
        let idx = if tied.len() == 1 { tied[0] } else { tied[rng.gen_range(0..tied.len())] };
        self.last_played = idx;
        idx
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinorityGameConfig {
    pub n_agents: usize,
    pub m: usize,
    pub s: usize,
    pub t_steps: usize,
    pub seed: u64,
}

impl Default for MinorityGameConfig {
    fn default() -> Self {
        Self { n_agents: 101, m: 2, s: 2, t_steps: 10_000, seed: 0 }
    }
}

impl MinorityGameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_agents.is_multiple_of(2) {
            return Err(Error::Bounds(format!("n_agents = {} must be odd", self.n_agents)));
        }
        check_memory(self.m)?;
        if self.s == 0 {
            return Err(Error::Bounds("s must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub n_agents: usize,
    /// Number of agents choosing A at each step.
    pub attendance: Vec<u32>,
    /// Winning (less popular) choice at each step.
    pub minority_bits: Vec<u8>,
    /// History index in effect at each step, before it is played.
    pub histories: Vec<u32>,
    /// Labels (more popular choice) preceding the first step, oldest first.
    pub initial_labels: Vec<u8>,
}

impl GameRecord {
    pub fn len(&self) -> usize {
        self.attendance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attendance.is_empty()
    }

    /// Label of every step: the more popular choice.
    pub fn labels(&self) -> impl Iterator<Item = u8> + '_ {
        self.minority_bits.iter().map(|b| 1 - b)
    }

    fn push(&mut self, history: usize, attendance: u32) {
        let a_popular = 2 * attendance as usize > self.n_agents;
        self.histories.push(history as u32);
        self.attendance.push(attendance);
        self.minority_bits.push(u8::from(a_popular));
    }
}

/// Population plus the public history; advanced one step at a time.
#[derive(Clone, Debug)]
pub struct MinorityGame {
    pub agents: Vec<Agent>,
    m: usize,
    history: usize,
    rng: ChaCha8Rng,
    pub record: GameRecord,
}

impl MinorityGame {
    /// Random population and initial history drawn from `config.seed`: tables
    /// agent by agent, then the `m` initial labels.
    pub fn new(config: &MinorityGameConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let agents = (0..config.n_agents)
            .map(|_| Agent::new((0..config.s).map(|_| random_strategy(config.m, &mut rng)).collect::<Result<_>>()?))
            .collect::<Result<Vec<_>>>()?;
        let labels: Vec<u8> = (0..config.m).map(|_| u8::from(rng.gen::<bool>())).collect();
        Self::from_parts(agents, labels, rng)
    }

    /// Explicit population and initial labels (oldest first); `rng` only
    /// breaks score ties.
    pub fn from_parts(agents: Vec<Agent>, initial_labels: Vec<u8>, rng: ChaCha8Rng) -> Result<Self> {
        let Some(first) = agents.first() else {
            return Err(Error::Bounds("empty population".into()));
        };
        let m = first.strategies[0].m();
        if agents.iter().any(|a| a.strategies[0].m() != m) {
            return Err(Error::Dimension("all agents must share m".into()));
        }
        if agents.len().is_multiple_of(2) {
            return Err(Error::Bounds(format!("population size {} must be odd", agents.len())));
        }
        if initial_labels.len() != m || initial_labels.iter().any(|b| *b > 1) {
            return Err(Error::Domain(format!("need {m} initial labels in {{0, 1}}")));
        }
        let history = initial_labels.iter().fold(0usize, |h, b| (h << 1) | *b as usize);
        let record = GameRecord { n_agents: agents.len(), initial_labels, ..Default::default() };
        Ok(Self { agents, m, history, rng, record })
    }

    pub fn history(&self) -> usize {
        self.history
    }

    pub fn step(&mut self) {
        let h = self.history;
        let mut choices = Vec::with_capacity(self.agents.len());
        for agent in &mut self.agents {
            let k = agent.pick(&mut self.rng);
            choices.push(agent.strategies[k].choice(h));
        }
        let attendance = choices.iter().filter(|c| **c == 0).count() as u32;
        self.record.push(h, attendance);
        let minority = *self.record.minority_bits.last().unwrap();
        for (agent, c) in self.agents.iter_mut().zip(&choices) {
            for (score, table) in agent.virtual_scores.iter_mut().zip(&agent.strategies) {
                if table.choice(h) == minority {
                    *score += 1;
                }
            }
            if *c == minority {
                agent.wins += 1;
            }
        }
        let mask = (1usize << self.m) - 1;
        self.history = ((h << 1) | (1 - minority) as usize) & mask;
    }

    pub fn run_for(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }
}

pub fn run(config: &MinorityGameConfig) -> Result<GameRecord> {
    let mut game = MinorityGame::new(config)?;
    game.run_for(config.t_steps);
    Ok(game.record)
}

/// Every agent flips a fair coin every step; histories are tracked with
/// memory `m` so the record can be probed like a real run.
pub fn coin_flip_record(n_agents: usize, m: usize, t_steps: usize, seed: u64) -> Result<GameRecord> {
    MinorityGameConfig { n_agents, m, s: 1, t_steps, seed }.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial_labels: Vec<u8> = (0..m).map(|_| u8::from(rng.gen::<bool>())).collect();
    let mut history = initial_labels.iter().fold(0usize, |h, b| (h << 1) | *b as usize);
    let mut record = GameRecord { n_agents, initial_labels, ..Default::default() };
    let mask = (1usize << m) - 1;
    for _ in 0..t_steps {
        let attendance = (0..n_agents).filter(|_| rng.gen::<bool>()).count() as u32;
        record.push(history, attendance);
        let label = 1 - record.minority_bits.last().unwrap();
        history = ((history << 1) | label as usize) & mask;
    }
    Ok(record)
}

pub const MIN_SIGMA_STEPS: usize = 100;

/// Sample standard deviation of attendance after the first `discard` steps.
pub fn attendance_sigma(record: &GameRecord, discard: usize) -> Result<f64> {
    let xs = record.attendance.get(discard..).unwrap_or(&[]);
    if xs.len() < MIN_SIGMA_STEPS {
        return Err(Error::TooFewSamples(format!("{} steps after discard, need {MIN_SIGMA_STEPS}", xs.len())));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().map(|&a| a as f64).sum::<f64>() / n;
    let var = xs.iter().map(|&a| (a as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt())
}

pub fn mean_attendance(record: &GameRecord, discard: usize) -> f64 {
    let xs = record.attendance.get(discard..).unwrap_or(&[]);
    xs.iter().map(|&a| a as f64).sum::<f64>() / xs.len() as f64
}

/// Histories seen fewer times than this are flagged.
pub const MIN_HISTORY_SUPPORT: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictabilityEntry {
    pub history: u32,
    pub occurrences: usize,
    /// `P(next minority bit = 1 | history)`; `None` if never seen.
    pub p_one: Option<f64>,
    pub low_support: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Predictability {
    pub m_probe: usize,
    pub entries: Vec<PredictabilityEntry>,
    /// `max |p - 1/2|` over well-supported histories; `None` if there are none.
    pub flatness: Option<f64>,
}

/// Conditional probability of the next winning side given the preceding
/// `m_probe` labels.
pub fn predictability(record: &GameRecord, m_probe: usize) -> Result<Predictability> {
    check_memory(m_probe)?;
    let labels: Vec<u8> = record.labels().collect();
    let mut counts = vec![(0usize, 0usize); 1 << m_probe];
    for t in m_probe..labels.len() {
        let h = labels[t - m_probe..t].iter().fold(0usize, |h, b| (h << 1) | *b as usize);
        counts[h].0 += 1;
        counts[h].1 += record.minority_bits[t] as usize;
    }
    let entries: Vec<PredictabilityEntry> = counts
        .iter()
        .enumerate()
        .map(|(h, &(n, ones))| PredictabilityEntry {
            history: h as u32,
            occurrences: n,
            p_one: (n > 0).then(|| ones as f64 / n as f64),
            low_support: n < MIN_HISTORY_SUPPORT,
        })
        .collect();
    let flatness = entries
        .iter()
        .filter(|e| !e.low_support)
        .filter_map(|e| e.p_one)
        .map(|p| (p - 0.5).abs())
        .fold(None, |acc: Option<f64>, d| Some(acc.map_or(d, |a| a.max(d))));
    Ok(Predictability { m_probe, entries, flatness })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub m: usize,
    pub sigma_mean: f64,
    pub sigma_stderr: f64,
    pub n_seeds: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SigmaSweep {
    pub rows: Vec<SweepRow>,
    pub argmin_m: usize,
}

impl SigmaSweep {
    /// The minimum lies strictly inside the swept range.
    pub fn has_interior_minimum(&self) -> bool {
        let i = self.rows.iter().position(|r| r.m == self.argmin_m).unwrap_or(0);
        i > 0 && i + 1 < self.rows.len()
    }
}

/// σ for every `m` and seed, in parallel; rows sorted by `m`.
pub fn sigma_vs_m_sweep(n_agents: usize, s: usize, m_list: &[usize], t_steps: usize, seeds: &[u64], discard: usize) -> Result<SigmaSweep> {
    if m_list.is_empty() || seeds.is_empty() {
        return Err(Error::Bounds("sweep needs at least one m and one seed".into()));
    }
    let jobs: Vec<(usize, u64)> = m_list.iter().flat_map(|&m| seeds.iter().map(move |&seed| (m, seed))).collect();
    let sigmas: Vec<(usize, f64)> = jobs
        .par_iter()
        .map(|&(m, seed)| {
            let rec = run(&MinorityGameConfig { n_agents, m, s, t_steps, seed })?;
            Ok((m, attendance_sigma(&rec, discard)?))
        })
        .collect::<Result<_>>()?;
    let mut ms = m_list.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let rows: Vec<SweepRow> = ms
        .iter()
        .map(|&m| {
            let v: Vec<f64> = sigmas.iter().filter(|(mm, _)| *mm == m).map(|(_, s)| *s).collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let stderr = if v.len() > 1 { (v.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt() } else { 0.0 };
            SweepRow { m, sigma_mean: mean, sigma_stderr: stderr, n_seeds: v.len() }
        })
        .collect();
    let argmin_m = rows.iter().min_by(|a, b| a.sigma_mean.total_cmp(&b.sigma_mean)).unwrap().m;
    Ok(SigmaSweep { rows, argmin_m })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategy_space_is_double_exponential() {
        assert_eq!(strategy_space_size(1), BigUint::from(4u8));
        assert_eq!(strategy_space_size(2), BigUint::from(16u8));
        assert_eq!(strategy_space_size(5), BigUint::from(4_294_967_296u64));
        assert!(strategy_space_size(10).to_string().len() > 300);
    }

    #[test]
    fn table_lookup_uses_oldest_label_as_high_bit() {
        let t = StrategyTable::new(2, vec![1, 0, 0, 1]).unwrap();
        // history (0, 1) -> index 1
        assert_eq!(t.choice(0b01), 0);
        assert_eq!(t.choice(0b11), 1);
        assert!(StrategyTable::new(2, vec![1, 0]).is_err());
        assert!(StrategyTable::new(0, vec![1]).is_err());
        assert!(random_strategy(17, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn m1_random_tables_cover_the_space() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let seen: std::collections::HashSet<Vec<u8>> = (0..1000).map(|_| random_strategy(1, &mut rng).unwrap().outputs).collect();
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn single_agent_is_always_the_majority() {
        let rec = {
            let mut g = MinorityGame::new(&MinorityGameConfig { n_agents: 1, m: 1, s: 2, t_steps: 0, seed: 3 }).unwrap();
            g.run_for(50);
            assert_eq!(g.agents[0].wins, 0);
            g.record
        };
        assert!(rec.attendance.iter().all(|a| *a <= 1));
    }

    #[test]
    fn invariants_per_step() {
        let cfg = MinorityGameConfig { n_agents: 21, m: 3, s: 3, t_steps: 0, seed: 5 };
        let mut g = MinorityGame::new(&cfg).unwrap();
        let mut prev_scores: Vec<Vec<i64>> = g.agents.iter().map(|a| a.virtual_scores.clone()).collect();
        let mut prev_wins = 0u64;
        for t in 1..=200 {
            g.step();
            let a = *g.record.attendance.last().unwrap() as usize;
            let minority_size = if 2 * a > cfg.n_agents { cfg.n_agents - a } else { a };
            assert!(minority_size <= (cfg.n_agents - 1) / 2);
            let wins: u64 = g.agents.iter().map(|x| x.wins).sum();
            assert_eq!((wins - prev_wins) as usize, minority_size);
            prev_wins = wins;
            for (agent, prev) in g.agents.iter().zip(&prev_scores) {
                assert!(agent.virtual_scores.iter().zip(prev).all(|(s, p)| s >= p && *s <= t));
            }
            prev_scores = g.agents.iter().map(|a| a.virtual_scores.clone()).collect();
        }
    }

    #[test]
    fn even_population_rejected() {
        assert!(run(&MinorityGameConfig { n_agents: 10, ..Default::default() }).is_err());
    }

    #[test]
    fn sigma_edge_cases() {
        let rec = GameRecord { n_agents: 3, attendance: vec![1; 150], minority_bits: vec![0; 150], ..Default::default() };
        assert_eq!(attendance_sigma(&rec, 0).unwrap(), 0.0);
        assert!(matches!(attendance_sigma(&rec, 60), Err(Error::TooFewSamples(_))));
    }

    #[test]
    fn coin_record_is_flat() {
        let rec = coin_flip_record(101, 2, 10_000, 9).unwrap();
        let p = predictability(&rec, 2).unwrap();
        assert!(p.flatness.unwrap() < 0.05);
        let sigma = attendance_sigma(&rec, 0).unwrap();
        let expected = (101f64).sqrt() / 2.0;
        assert!((sigma - expected).abs() < 0.1 * expected);
    }

    #[test]
    fn sparse_histories_are_flagged() {
        let rec = coin_flip_record(11, 2, 200, 1).unwrap();
        let p = predictability(&rec, 10).unwrap();
        assert!(p.entries.iter().all(|e| e.low_support));
        assert_eq!(p.flatness, None);
    }

    #[test]
    fn single_m_sweep() {
        let sw = sigma_vs_m_sweep(11, 2, &[3], 500, &[1, 2], 100).unwrap();
        assert_eq!(sw.rows.len(), 1);
        assert_eq!(sw.argmin_m, 3);
        assert!(!sw.has_interior_minimum());
    }
}
