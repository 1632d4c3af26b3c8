//! Experiment configuration and execution: sampling instances, running
//! seeded batches in parallel, aggregating traces, and writing results.

mod figures;
mod output;

pub use figures::{figure_configs, run_figure, Figure, FigureReport};
pub use output::{emit_csv, emit_csv_file, emit_svg, emit_svg_file, SeriesData};

use crate::attack::{
    BurstAttack, DesyncAttack, LowerBoundAttack, McAttack, SicMmabAttack, Silent,
    UniformRandomAttack,
};
use crate::baselines::{compute_mc_t0, Mc, McParams, SicMmab, SicMmabParams};
use crate::defense::{
    compute_t0, compute_t0_dc, DefenseError, Resync, Resync2, Resync2Params, ResyncParams,
};
use crate::env::{
    player_stream_id, run_seed, stream, Arm, BanditInstance, EnvError, SensingMode,
    STREAM_ENV, STREAM_INSTANCE,
};
use crate::metagame::{check_conformance, EpochSnapshot};
use crate::sim::{run_game, Agent, RunTrace};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Default number of independent runs per experiment.
pub const DEFAULT_RUNS: usize = 20;
/// Default trace logging stride in rounds.
pub const DEFAULT_STRIDE: u64 = 100;
/// Default minimum gap enforced when sampling instances.
pub const DEFAULT_DELTA_FLOOR: f64 = 0.05;
/// Default master seed for experiment batches.
pub const DEFAULT_SEED: u64 = 17;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("could not sample an instance with gap >= {floor} after {attempts} attempts")]
    InstanceInfeasible { floor: f64, attempts: u32 },
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Defense(#[from] DefenseError),
    #[error("writing {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Defender algorithm selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefenderAlgo {
    Resync,
    Resync2,
    Mc,
    SicMmab,
}

impl DefenderAlgo {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "resync" => Ok(Self::Resync),
            "resync2" => Ok(Self::Resync2),
            "mc" => Ok(Self::Mc),
            "sicmmab" => Ok(Self::SicMmab),
            other => Err(HarnessError::Config(format!(
                "unknown algorithm '{other}' (expected resync|resync2|mc|sicmmab)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Resync => "resync",
            Self::Resync2 => "resync2",
            Self::Mc => "mc",
            Self::SicMmab => "sicmmab",
        }
    }
}

/// Attacker policy selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackerKind {
    Silent,
    Burst,
    Uniform,
    McAttack,
    SicMmabAttack,
    DesyncAttack,
    LowerBound,
}

impl AttackerKind {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        match s {
            "silent" => Ok(Self::Silent),
            "burst" => Ok(Self::Burst),
            "uniform" => Ok(Self::Uniform),
            "mc-attack" => Ok(Self::McAttack),
            "sicmmab-attack" => Ok(Self::SicMmabAttack),
            "desync-attack" => Ok(Self::DesyncAttack),
            "lower-bound" => Ok(Self::LowerBound),
            other => Err(HarnessError::Config(format!(
                "unknown attacker '{other}' (expected silent|burst|uniform|mc-attack|sicmmab-attack|desync-attack|lower-bound)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Silent => "silent",
            Self::Burst => "burst",
            Self::Uniform => "uniform",
            Self::McAttack => "mc-attack",
            Self::SicMmabAttack => "sicmmab-attack",
            Self::DesyncAttack => "desync-attack",
            Self::LowerBound => "lower-bound",
        }
    }
}

/// Full description of one experiment batch.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub arms: usize,
    pub defenders: usize,
    pub attackers: usize,
    pub horizon: u64,
    pub delta_floor: f64,
    pub algo: DefenderAlgo,
    pub attacker: AttackerKind,
    /// Budget for the lower-bound attacker.
    pub attacker_budget: u64,
    /// Active window for the uniform attacker.
    pub attacker_until: u64,
    /// Start of the second burst window.
    pub burst_second_start: u64,
    pub t0_override: Option<u64>,
    pub sensing: SensingMode,
    pub seed: u64,
    pub runs: usize,
    pub stride: u64,
    pub out_csv: Option<PathBuf>,
    pub out_svg: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            arms: 10,
            defenders: 5,
            attackers: 0,
            horizon: 100_000,
            delta_floor: DEFAULT_DELTA_FLOOR,
            algo: DefenderAlgo::Resync,
            attacker: AttackerKind::Silent,
            attacker_budget: 10_000,
            attacker_until: 5_000,
            burst_second_start: 50_000,
            t0_override: None,
            sensing: SensingMode::NonDistinguishable,
            seed: DEFAULT_SEED,
            runs: DEFAULT_RUNS,
            stride: DEFAULT_STRIDE,
            out_csv: None,
            out_svg: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.defenders == 0 || self.defenders > self.arms {
            return Err(HarnessError::Config(format!(
                "need 1 <= N <= K, got N={} K={}",
                self.defenders, self.arms
            )));
        }
        if self.runs == 0 {
            return Err(HarnessError::Config("runs must be >= 1".into()));
        }
        if self.stride == 0 {
            return Err(HarnessError::Config("stride must be >= 1".into()));
        }
        if self.horizon == 0 {
            return Err(HarnessError::Config("horizon must be >= 1".into()));
        }
        if !(self.delta_floor >= 0.0 && self.delta_floor < 1.0) {
            return Err(HarnessError::Config("delta_floor must lie in [0, 1)".into()));
        }
        match (self.algo, self.sensing) {
            (DefenderAlgo::Resync2, SensingMode::NonDistinguishable) => {
                return Err(HarnessError::Config(
                    "resync2 requires distinguishable sensing (--sensing d)".into(),
                ));
            }
            (DefenderAlgo::Resync | DefenderAlgo::Mc | DefenderAlgo::SicMmab, SensingMode::Distinguishable) => {
                return Err(HarnessError::Config(format!(
                    "{} runs under non-distinguishable sensing (--sensing nd)",
                    self.algo.name()
                )));
            }
            _ => {}
        }
        let single_attacker = matches!(
            self.attacker,
            AttackerKind::McAttack
                | AttackerKind::SicMmabAttack
                | AttackerKind::DesyncAttack
                | AttackerKind::LowerBound
        );
        if single_attacker && self.attackers != 1 {
            return Err(HarnessError::Config(format!(
                "attacker '{}' needs exactly one attacker, got M={}",
                self.attacker.name(),
                self.attackers
            )));
        }
        if self.attackers == 0 && self.attacker != AttackerKind::Silent {
            return Err(HarnessError::Config(
                "an attacker policy other than 'silent' needs M >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Loads a line-oriented `key = value` config file. `#` starts a
    /// comment; keys mirror the struct fields.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| HarnessError::Io { path: path.display().to_string(), source })?;
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HarnessError::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key = value` pair. Shared by the file parser and CLI
    /// overrides.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let bad = |what: &str| HarnessError::Config(format!("invalid {what}: '{value}'"));
        match key {
            "arms" | "k" => self.arms = value.parse().map_err(|_| bad("arms"))?,
            "defenders" | "n" => self.defenders = value.parse().map_err(|_| bad("defenders"))?,
            "attackers" | "m" => self.attackers = value.parse().map_err(|_| bad("attackers"))?,
            "horizon" | "t" => self.horizon = value.parse().map_err(|_| bad("horizon"))?,
            "delta_floor" => self.delta_floor = value.parse().map_err(|_| bad("delta_floor"))?,
            "algo" => self.algo = DefenderAlgo::parse(value)?,
            "attacker" => self.attacker = AttackerKind::parse(value)?,
            "attacker_budget" => {
                self.attacker_budget = value.parse().map_err(|_| bad("attacker_budget"))?
            }
            "attacker_until" => {
                self.attacker_until = value.parse().map_err(|_| bad("attacker_until"))?
            }
            "burst_second_start" => {
                self.burst_second_start = value.parse().map_err(|_| bad("burst_second_start"))?
            }
            "t0" => self.t0_override = Some(value.parse().map_err(|_| bad("t0"))?),
            "seed" => self.seed = value.parse().map_err(|_| bad("seed"))?,
            "runs" => self.runs = value.parse().map_err(|_| bad("runs"))?,
            "stride" => self.stride = value.parse().map_err(|_| bad("stride"))?,
            "sensing" => {
                self.sensing = match value {
                    "nd" => SensingMode::NonDistinguishable,
                    "d" => SensingMode::Distinguishable,
                    _ => return Err(bad("sensing (nd|d)")),
                }
            }
            "out_csv" => self.out_csv = Some(PathBuf::from(value)),
            "out_svg" => self.out_svg = Some(PathBuf::from(value)),
            other => {
                return Err(HarnessError::Config(format!("unknown config key '{other}'")));
            }
        }
        Ok(())
    }
}

/// Draws arm means uniformly from `[0, 1]`, resampling the whole vector
/// until all means are distinct and the top-`N` gap clears the floor.
pub fn sample_instance(
    config: &ExperimentConfig,
    rng: &mut ChaCha8Rng,
) -> Result<BanditInstance, HarnessError> {
    const MAX_ATTEMPTS: u32 = 10_000;
    for _ in 0..MAX_ATTEMPTS {
        let means: Vec<f64> = (0..config.arms).map(|_| rng.random::<f64>()).collect();
        let candidate = BanditInstance {
            means,
            reward_kind: crate::env::RewardKind::Bernoulli,
            defenders: config.defenders,
            attackers: config.attackers,
            horizon: config.horizon,
            sensing: config.sensing,
        };
        if candidate.validate().is_err() {
            continue;
        }
        if config.defenders < config.arms && candidate.gap() < config.delta_floor {
            continue;
        }
        return Ok(candidate);
    }
    Err(HarnessError::InstanceInfeasible { floor: config.delta_floor, attempts: MAX_ATTEMPTS })
}

/// Everything retained from one simulation run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub run_idx: u64,
    pub instance: BanditInstance,
    pub trace: RunTrace,
    /// Per-epoch abstraction, present for the epoch-based defender.
    pub snapshots: Vec<EpochSnapshot>,
    /// Abstract-machine conformance over `snapshots`.
    pub conformance_error: Option<String>,
    pub transitions_checked: usize,
    /// Arms committed to by seat-taking defenders, where applicable.
    pub committed: Vec<Option<Arm>>,
    /// Defender faults (protocol errors, desynchronizations).
    pub faults: Vec<String>,
    /// Rounds in which each attacker pulled.
    pub attacker_pulls: Vec<u64>,
    /// Epoch length of the epoch-based defender, when applicable.
    pub epoch_len: Option<u64>,
}

/// Executes one run of the batch.
pub fn run_one(config: &ExperimentConfig, run_idx: u64) -> Result<RunOutcome, HarnessError> {
    let seed = run_seed(config.seed, run_idx);
    let mut instance_rng = stream(seed, STREAM_INSTANCE);
    let instance = sample_instance(config, &mut instance_rng)?;
    let mut env_rng = stream(seed, STREAM_ENV);

    // Defender protocols receive the true gap, matching their assumed prior
    // knowledge; the burst attacker receives the true top arms, matching
    // its role as a worst-case experiment schedule.
    let gap = if config.defenders < config.arms { instance.gap() } else { 1.0 };

    let mut attackers = build_attackers(config, &instance, seed);
    let mut attacker_refs: Vec<&mut dyn Agent> =
        attackers.iter_mut().map(|a| a.as_mut() as &mut dyn Agent).collect();

    let mut outcome = RunOutcome {
        run_idx,
        instance: instance.clone(),
        trace: RunTrace::default(),
        snapshots: Vec::new(),
        conformance_error: None,
        transitions_checked: 0,
        committed: Vec::new(),
        faults: Vec::new(),
        attacker_pulls: Vec::new(),
        epoch_len: None,
    };

    match config.algo {
        DefenderAlgo::Resync => {
            let t0 = compute_t0(config.arms, config.horizon, gap, config.t0_override)?;
            let params = ResyncParams::new(config.arms, config.defenders, config.horizon, t0)?;
            let mut team: Vec<Resync> =
                (1..=config.defenders).map(|j| Resync::new(params, j)).collect::<Result<_, _>>()?;
            {
                let mut refs: Vec<&mut dyn Agent> =
                    team.iter_mut().map(|d| d as &mut dyn Agent).collect();
                outcome.trace =
                    run_game(&instance, &mut refs, &mut attacker_refs, &mut env_rng, false)?;
            }
            let tb = params.epoch_len();
            outcome.epoch_len = Some(tb);
            let epochs = (config.horizon / tb) as usize;
            let costs: Vec<u64> = (0..epochs as u64)
                .map(|e| outcome.trace.attack_cost_in(e * tb, (e + 1) * tb))
                .collect();
            let logs: Vec<&[crate::defense::EpochRecord]> =
                team.iter().map(|d| d.epoch_log()).collect();
            outcome.snapshots = EpochSnapshot::from_logs(&logs, &costs);
            match check_conformance(&outcome.snapshots) {
                Ok(n) => outcome.transitions_checked = n,
                Err(e) => outcome.conformance_error = Some(e.to_string()),
            }
            outcome.faults =
                team.iter().filter_map(|d| d.fault().map(|f| f.to_string())).collect();
        }
        DefenderAlgo::Resync2 => {
            let t0 = compute_t0_dc(config.arms, config.horizon, gap, config.t0_override)?;
            let params = Resync2Params::new(config.arms, config.horizon, t0)?;
            let mut team: Vec<Resync2> = (0..config.defenders)
                .map(|i| Resync2::new(params, stream(seed, player_stream_id(i))))
                .collect();
            {
                let mut refs: Vec<&mut dyn Agent> =
                    team.iter_mut().map(|d| d as &mut dyn Agent).collect();
                outcome.trace =
                    run_game(&instance, &mut refs, &mut attacker_refs, &mut env_rng, false)?;
            }
            outcome.faults = team
                .iter()
                .filter_map(|d| d.fault().map(|f| f.to_string()))
                .chain(team.iter().filter(|d| d.init_fault()).map(|_| "init fault".to_string()))
                .collect();
        }
        DefenderAlgo::Mc => {
            let min_gap = min_adjacent_gap(&instance);
            let t0 = match config.t0_override {
                Some(t0) => t0,
                None => compute_mc_t0(config.arms, config.horizon, min_gap)?,
            };
            let params = McParams {
                arms: config.arms,
                defenders: config.defenders,
                horizon: config.horizon,
                t0,
            };
            let mut team: Vec<Mc> = (0..config.defenders)
                .map(|i| Mc::new(params, stream(seed, player_stream_id(i))))
                .collect();
            {
                let mut refs: Vec<&mut dyn Agent> =
                    team.iter_mut().map(|d| d as &mut dyn Agent).collect();
                outcome.trace =
                    run_game(&instance, &mut refs, &mut attacker_refs, &mut env_rng, false)?;
            }
            outcome.committed = team.iter().map(|d| d.committed()).collect();
        }
        DefenderAlgo::SicMmab => {
            let params = SicMmabParams { arms: config.arms, horizon: config.horizon };
            let mut team: Vec<SicMmab> = (0..config.defenders)
                .map(|i| SicMmab::new(params, stream(seed, player_stream_id(i))))
                .collect();
            {
                let mut refs: Vec<&mut dyn Agent> =
                    team.iter_mut().map(|d| d as &mut dyn Agent).collect();
                outcome.trace =
                    run_game(&instance, &mut refs, &mut attacker_refs, &mut env_rng, false)?;
            }
            outcome.committed = team.iter().map(|d| d.committed()).collect();
            outcome.faults = team
                .iter()
                .flat_map(|d| d.faults().iter().map(|f| f.reason.clone()))
                .collect();
        }
    }

    outcome.attacker_pulls =
        outcome.trace.pulls_per_player[config.defenders..].to_vec();
    Ok(outcome)
}

fn min_adjacent_gap(instance: &BanditInstance) -> f64 {
    let sorted = instance.sorted_means();
    sorted
        .windows(2)
        .map(|w| w[0] - w[1])
        .fold(f64::INFINITY, f64::min)
        .max(1e-9)
}

fn build_attackers(
    config: &ExperimentConfig,
    instance: &BanditInstance,
    seed: u64,
) -> Vec<Box<dyn Agent>> {
    let m = config.attackers;
    let rng_for = |i: usize| stream(seed, player_stream_id(config.defenders + i));
    match config.attacker {
        AttackerKind::Silent => (0..m).map(|_| Box::new(Silent) as Box<dyn Agent>).collect(),
        AttackerKind::Burst => {
            // One top arm per attacker, pulled over both windows.
            let arms = instance.top_arms(m.min(config.arms));
            let len = burst_len(config);
            (0..m)
                .map(|i| {
                    let arm = arms[i % arms.len()];
                    Box::new(BurstAttack::new(
                        arm,
                        vec![(0, len), (config.burst_second_start, len)],
                    )) as Box<dyn Agent>
                })
                .collect()
        }
        AttackerKind::Uniform => (0..m)
            .map(|i| {
                Box::new(UniformRandomAttack::new(config.arms, config.attacker_until, rng_for(i)))
                    as Box<dyn Agent>
            })
            .collect(),
        AttackerKind::McAttack => {
            let t0 = resolved_mc_t0(config, instance);
            vec![Box::new(McAttack::new(config.arms, config.horizon, t0, rng_for(0)))]
        }
        AttackerKind::SicMmabAttack => {
            let params = SicMmabParams { arms: config.arms, horizon: config.horizon };
            let mut rng = rng_for(0);
            vec![Box::new(SicMmabAttack::new(params, &mut rng))]
        }
        AttackerKind::DesyncAttack => {
            vec![Box::new(DesyncAttack::new(config.arms, config.horizon))]
        }
        AttackerKind::LowerBound => {
            let mut rng = rng_for(0);
            vec![Box::new(LowerBoundAttack::new(config.arms, config.attacker_budget, &mut rng))]
        }
    }
}

/// Burst window length: the defenders' configured exploration length.
fn burst_len(config: &ExperimentConfig) -> u64 {
    config.t0_override.unwrap_or(3000)
}

fn resolved_mc_t0(config: &ExperimentConfig, instance: &BanditInstance) -> u64 {
    match config.t0_override {
        Some(t0) => t0,
        None => compute_mc_t0(config.arms, config.horizon, min_adjacent_gap(instance))
            .unwrap_or(3000),
    }
}

/// Per-round aggregate over a batch, logged every `stride` rounds.
#[derive(Clone, Debug)]
pub struct AggregateTrace {
    pub stride: u64,
    /// Logged rounds: `stride, 2*stride, ..., <= horizon`.
    pub rounds: Vec<u64>,
    pub mean_regret: Vec<f64>,
    pub std_regret: Vec<f64>,
    pub final_attack_costs: Vec<u64>,
}

impl AggregateTrace {
    pub fn from_runs(runs: &[RunOutcome], stride: u64, horizon: u64) -> Self {
        let rounds: Vec<u64> = (1..=horizon / stride).map(|i| i * stride).collect();
        let n = runs.len().max(1) as f64;
        let mut mean_regret = Vec::with_capacity(rounds.len());
        let mut std_regret = Vec::with_capacity(rounds.len());
        for &t in &rounds {
            let idx = t as usize - 1;
            let values: Vec<f64> =
                runs.iter().map(|r| r.trace.cum_regret.get(idx).copied().unwrap_or(0.0)).collect();
            let mean = values.iter().sum::<f64>() / n;
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            mean_regret.push(mean);
            std_regret.push(var.sqrt());
        }
        AggregateTrace {
            stride,
            rounds,
            mean_regret,
            std_regret,
            final_attack_costs: runs.iter().map(|r| r.trace.final_attack_cost()).collect(),
        }
    }
}

/// Result of a full batch.
#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub runs: Vec<RunOutcome>,
    pub aggregate: AggregateTrace,
}

/// Executes `config.runs` independent simulations with derived seeds, in
/// parallel, and aggregates them. Per-run faults are recorded, not fatal.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult, HarnessError> {
    config.validate()?;
    let mut runs: Vec<RunOutcome> = (0..config.runs as u64)
        .into_par_iter()
        .map(|i| run_one(config, i))
        .collect::<Result<Vec<_>, _>>()?;
    runs.sort_by_key(|r| r.run_idx);
    let aggregate = AggregateTrace::from_runs(&runs, config.stride, config.horizon);
    Ok(ExperimentResult { runs, aggregate })
}
