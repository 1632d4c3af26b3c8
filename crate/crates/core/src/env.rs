//! Bandit environment: reward sampling, collision resolution, regret and
//! attack-cost accounting.
//!
//! Players are indexed `1..=N+M`; indices `1..=N` are defenders, the rest are
//! attackers. Arms are indexed `1..=K`. Each round every player submits an
//! action, the environment draws one reward sample per arm, and every pulling
//! player on arm `k` receives `X_k * (1 - eta_k)` where `eta_k` is set when
//! two or more players chose `k`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Arm index in `1..=K`.
pub type Arm = usize;

/// One player's move for a round. Only attackers may stay quiet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AgentAction {
    Pull(Arm),
    NoPull,
}

/// What collision information defenders receive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SensingMode {
    /// A single collision bit per pulled arm.
    NonDistinguishable,
    /// Separate bits for defender-caused and attacker-caused collisions.
    Distinguishable,
}

/// Per-arm reward distribution family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RewardKind {
    /// `X_k ~ Bernoulli(mu_k)`. The default.
    Bernoulli,
    /// Gaussian with the given standard deviation, clipped to `[0, 1]`.
    ClippedGaussian { std_dev: f64 },
}

/// Errors raised by environment operations.
#[derive(Debug, Error)]
pub enum EnvError {
    #[error("player {player} pulled arm {arm}, outside 1..={arms}")]
    InvalidAction { player: usize, arm: Arm, arms: usize },
    #[error("defender {player} may not stay quiet")]
    DefenderNoPull { player: usize },
    #[error("invalid bandit instance: {0}")]
    BadInstance(String),
    #[error("action vector has {got} entries, expected {expected}")]
    WrongPlayerCount { got: usize, expected: usize },
}

/// Ground-truth environment: arm means and player/horizon bookkeeping.
#[derive(Clone, Debug)]
pub struct BanditInstance {
    /// True arm means, `means[k-1] = mu_k`, each in `[0, 1]`.
    pub means: Vec<f64>,
    pub reward_kind: RewardKind,
    /// Number of defenders `N`.
    pub defenders: usize,
    /// Number of attackers `M`.
    pub attackers: usize,
    /// Horizon `T` in rounds.
    pub horizon: u64,
    pub sensing: SensingMode,
}

impl BanditInstance {
    /// Builds and validates an instance. Means must be pairwise distinct,
    /// `1 <= N <= K`, and the gap between the `N`-th and `(N+1)`-th best
    /// means must be positive when `N < K`.
    pub fn new(
        means: Vec<f64>,
        defenders: usize,
        attackers: usize,
        horizon: u64,
        sensing: SensingMode,
    ) -> Result<Self, EnvError> {
        let inst = Self {
            means,
            reward_kind: RewardKind::Bernoulli,
            defenders,
            attackers,
            horizon,
            sensing,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let k = self.means.len();
        if k == 0 {
            return Err(EnvError::BadInstance("no arms".into()));
        }
        if self.defenders == 0 || self.defenders > k {
            return Err(EnvError::BadInstance(format!(
                "need 1 <= N <= K, got N={} K={k}",
                self.defenders
            )));
        }
        if self.means.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(EnvError::BadInstance("means must lie in [0,1]".into()));
        }
        let mut sorted = self.means.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(EnvError::BadInstance("means must be pairwise distinct".into()));
        }
        if self.defenders < k && self.gap() <= 0.0 {
            return Err(EnvError::BadInstance("gap must be positive".into()));
        }
        Ok(())
    }

    /// Number of arms `K`.
    pub fn arms(&self) -> usize {
        self.means.len()
    }

    /// Total players `N + M`.
    pub fn players(&self) -> usize {
        self.defenders + self.attackers
    }

    /// Means sorted descending: `mu_(1) >= mu_(2) >= ...`.
    pub fn sorted_means(&self) -> Vec<f64> {
        let mut s = self.means.clone();
        s.sort_by(|a, b| b.partial_cmp(a).unwrap());
        s
    }

    /// Gap between the `N`-th and `(N+1)`-th best means. Requires `N < K`.
    pub fn gap(&self) -> f64 {
        let s = self.sorted_means();
        s[self.defenders - 1] - s[self.defenders]
    }

    /// The `n` arms with the largest means, sorted ascending by index.
    pub fn top_arms(&self, n: usize) -> Vec<Arm> {
        let mut idx: Vec<Arm> = (1..=self.arms()).collect();
        idx.sort_by(|&a, &b| self.means[b - 1].partial_cmp(&self.means[a - 1]).unwrap());
        let mut top: Vec<Arm> = idx.into_iter().take(n).collect();
        top.sort_unstable();
        top
    }

    /// Sum of the top-`N` means, the per-round optimal team reward.
    pub fn optimal_round_reward(&self) -> f64 {
        self.sorted_means().iter().take(self.defenders).sum()
    }

    /// Draws one reward realization per arm. Always samples all `K` arms so
    /// the reward stream does not depend on which arms players chose.
    pub fn draw_rewards(&self, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
        out.clear();
        for &mu in &self.means {
            let x = match self.reward_kind {
                RewardKind::Bernoulli => {
                    if rng.random::<f64>() < mu {
                        1.0
                    } else {
                        0.0
                    }
                }
                RewardKind::ClippedGaussian { std_dev } => {
                    // Box-Muller; the second uniform is always drawn so the
                    // stream advance per arm is constant.
                    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
                    let u2: f64 = rng.random::<f64>();
                    let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
                    (mu + std_dev * z).clamp(0.0, 1.0)
                }
            };
            out.push(x);
        }
    }
}

/// Feedback delivered to a player who pulled an arm this round.
///
/// In non-distinguishable sensing `defender_collision` and
/// `attacker_collision` are always false; only `collided` carries
/// information.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct RoundFeedback {
    /// `X_k * (1 - eta_k)`: zero whenever a collision occurred.
    pub reward: f64,
    /// `eta_k`: two or more players (of any kind) pulled this arm.
    pub collided: bool,
    /// `eta^D_k`: two or more defenders pulled this arm.
    pub defender_collision: bool,
    /// `eta^A_k`: at least one attacker pulled this arm.
    pub attacker_collision: bool,
}

/// Resolves one round. `actions` is indexed by player (defenders first),
/// `arm_rewards[k-1]` is this round's realization for arm `k`. Players who
/// stayed quiet get `None`; staying quiet is an attacker-only capability.
pub fn resolve_round(
    actions: &[AgentAction],
    instance: &BanditInstance,
    arm_rewards: &[f64],
) -> Result<Vec<Option<RoundFeedback>>, EnvError> {
    if actions.len() != instance.players() {
        return Err(EnvError::WrongPlayerCount {
            got: actions.len(),
            expected: instance.players(),
        });
    }
    let k = instance.arms();
    let mut total = vec![0usize; k + 1];
    let mut defenders_on = vec![0usize; k + 1];
    let mut attackers_on = vec![0usize; k + 1];

    for (idx, action) in actions.iter().enumerate() {
        let player = idx + 1;
        match *action {
            AgentAction::Pull(arm) => {
                if arm == 0 || arm > k {
                    return Err(EnvError::InvalidAction { player, arm, arms: k });
                }
                total[arm] += 1;
                if player <= instance.defenders {
                    defenders_on[arm] += 1;
                } else {
                    attackers_on[arm] += 1;
                }
            }
            AgentAction::NoPull => {
                if player <= instance.defenders {
                    return Err(EnvError::DefenderNoPull { player });
                }
            }
        }
    }

    let distinguishable = instance.sensing == SensingMode::Distinguishable;
    let out = actions
        .iter()
        .enumerate()
        .map(|(idx, action)| match *action {
            AgentAction::Pull(arm) => {
                let collided = total[arm] > 1;
                // The defender/attacker split is information only defenders
                // receive; attackers see the plain collision bit.
                let split = distinguishable && idx < instance.defenders;
                Some(RoundFeedback {
                    reward: if collided { 0.0 } else { arm_rewards[arm - 1] },
                    collided,
                    defender_collision: split && defenders_on[arm] > 1,
                    attacker_collision: split && attackers_on[arm] > 0,
                })
            }
            AgentAction::NoPull => None,
        })
        .collect();
    Ok(out)
}

/// Pseudo-regret increment for one resolved round:
/// `sum of top-N means  -  sum over defenders of mu_{pulled} * (1 - eta)`.
/// Uses true means only, never sampled rewards.
pub fn accrue_regret(
    actions: &[AgentAction],
    feedbacks: &[Option<RoundFeedback>],
    instance: &BanditInstance,
) -> f64 {
    let mut collected = 0.0;
    for idx in 0..instance.defenders {
        if let AgentAction::Pull(arm) = actions[idx] {
            let collided = feedbacks[idx].map(|f| f.collided).unwrap_or(true);
            if !collided {
                collected += instance.means[arm - 1];
            }
        }
    }
    instance.optimal_round_reward() - collected
}

/// 1 if some defender and some attacker pulled the same arm this round,
/// else 0. Counts rounds, not collision pairs.
pub fn accrue_attack_cost(actions: &[AgentAction], defenders: usize) -> u64 {
    let mut seen: Vec<Arm> = Vec::new();
    for action in actions.iter().take(defenders) {
        if let AgentAction::Pull(arm) = *action {
            seen.push(arm);
        }
    }
    for action in actions.iter().skip(defenders) {
        if let AgentAction::Pull(arm) = *action {
            if seen.contains(&arm) {
                return 1;
            }
        }
    }
    0
}

// ── Seed derivation ───────────────────────────────────────────────────────
//
// One master seed per batch. Run seeds are a fixed mix of the master seed and
// the run index, so extending a batch never reshuffles earlier runs. Each run
// splits into numbered streams: 0 samples the instance, 1 drives environment
// rewards, and 2 + i belongs to player i (0-based). Player decisions therefore
// never perturb the reward sampling order.

const SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

/// Seed for run `run_idx` of a batch with the given master seed.
pub fn run_seed(master: u64, run_idx: u64) -> u64 {
    master ^ (run_idx.wrapping_add(1)).wrapping_mul(SEED_MIX)
}

/// Numbered RNG stream within a run.
pub fn stream(run_seed: u64, stream_id: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(run_seed ^ stream_id.wrapping_mul(SEED_MIX).rotate_left(17))
}

/// Stream id for the instance sampler.
pub const STREAM_INSTANCE: u64 = 0;
/// Stream id for environment reward draws.
pub const STREAM_ENV: u64 = 1;

/// Stream id for player `i` (0-based, defenders first).
pub fn player_stream_id(player_idx: usize) -> u64 {
    2 + player_idx as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance(means: &[f64], n: usize, m: usize, sensing: SensingMode) -> BanditInstance {
        BanditInstance::new(means.to_vec(), n, m, 1000, sensing).unwrap()
    }

    #[test]
    fn lone_pull_gets_the_sample() {
        let inst = instance(&[0.9, 0.5, 0.2], 1, 0, SensingMode::NonDistinguishable);
        let fb = resolve_round(&[AgentAction::Pull(1)], &inst, &[1.0, 0.0, 0.0]).unwrap();
        let f = fb[0].unwrap();
        assert_eq!(f.reward, 1.0);
        assert!(!f.collided);
    }

    #[test]
    fn two_defenders_same_arm_collide() {
        let inst = instance(&[0.9, 0.5, 0.2], 2, 0, SensingMode::NonDistinguishable);
        let fb = resolve_round(
            &[AgentAction::Pull(3), AgentAction::Pull(3)],
            &inst,
            &[1.0, 1.0, 1.0],
        )
        .unwrap();
        for f in fb {
            let f = f.unwrap();
            assert_eq!(f.reward, 0.0);
            assert!(f.collided);
        }
    }

    // Hand enumeration of the indicator definitions for one defender and one
    // attacker sharing an arm under distinguishable sensing.
    #[test]
    fn defender_attacker_overlap_distinguishable() {
        let inst = instance(&[0.9, 0.5, 0.2], 1, 1, SensingMode::Distinguishable);
        let fb = resolve_round(
            &[AgentAction::Pull(2), AgentAction::Pull(2)],
            &inst,
            &[1.0, 1.0, 1.0],
        )
        .unwrap();
        let f = fb[0].unwrap();
        assert!(!f.defender_collision);
        assert!(f.attacker_collision);
        assert!(f.collided);
        assert_eq!(f.reward, 0.0);
    }

    #[test]
    fn nopull_attacker_gets_no_feedback_and_costs_nothing() {
        let inst = instance(&[0.9, 0.5, 0.2], 1, 1, SensingMode::NonDistinguishable);
        let actions = [AgentAction::Pull(1), AgentAction::NoPull];
        let fb = resolve_round(&actions, &inst, &[1.0, 1.0, 1.0]).unwrap();
        assert!(fb[1].is_none());
        assert_eq!(accrue_attack_cost(&actions, 1), 0);
    }

    #[test]
    fn attack_cost_counts_rounds_not_pairs() {
        // Two attackers and one defender on arm 5 is one unit of cost.
        let actions = [
            AgentAction::Pull(5),
            AgentAction::Pull(5),
            AgentAction::Pull(5),
        ];
        assert_eq!(accrue_attack_cost(&actions, 1), 1);
        let disjoint = [
            AgentAction::Pull(1),
            AgentAction::Pull(2),
            AgentAction::Pull(3),
            AgentAction::Pull(4),
        ];
        assert_eq!(accrue_attack_cost(&disjoint, 3), 0);
    }

    #[test]
    fn regret_zero_on_optimal_orthogonal_play() {
        let inst = instance(&[0.9, 0.8, 0.5], 2, 0, SensingMode::NonDistinguishable);
        let actions = [AgentAction::Pull(1), AgentAction::Pull(2)];
        let fb = resolve_round(&actions, &inst, &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(accrue_regret(&actions, &fb, &inst), 0.0);
    }

    #[test]
    fn regret_full_on_total_collision() {
        let inst = instance(&[0.9, 0.8, 0.5], 2, 0, SensingMode::NonDistinguishable);
        let actions = [AgentAction::Pull(1), AgentAction::Pull(1)];
        let fb = resolve_round(&actions, &inst, &[1.0, 1.0, 1.0]).unwrap();
        assert!((accrue_regret(&actions, &fb, &inst) - 1.7).abs() < 1e-12);
    }

    // Direct evaluation: N=2, means (0.9, 0.8, 0.5), defenders on arms 1 and
    // 3 collect 0.9 + 0.5 against an optimum of 1.7.
    #[test]
    fn regret_formula_spot_check() {
        let inst = instance(&[0.9, 0.8, 0.5], 2, 0, SensingMode::NonDistinguishable);
        let actions = [AgentAction::Pull(1), AgentAction::Pull(3)];
        let fb = resolve_round(&actions, &inst, &[1.0, 1.0, 1.0]).unwrap();
        assert!((accrue_regret(&actions, &fb, &inst) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn defender_nopull_rejected() {
        let inst = instance(&[0.9, 0.5], 1, 0, SensingMode::NonDistinguishable);
        let err = resolve_round(&[AgentAction::NoPull], &inst, &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, EnvError::DefenderNoPull { player: 1 }));
    }

    #[test]
    fn out_of_range_arm_rejected() {
        let inst = instance(&[0.9, 0.5], 1, 0, SensingMode::NonDistinguishable);
        let err = resolve_round(&[AgentAction::Pull(3)], &inst, &[0.0, 0.0]).unwrap_err();
        assert!(matches!(err, EnvError::InvalidAction { arm: 3, .. }));
    }

    #[test]
    fn instance_rejects_duplicate_means() {
        assert!(BanditInstance::new(
            vec![0.5, 0.5, 0.1],
            1,
            0,
            10,
            SensingMode::NonDistinguishable
        )
        .is_err());
    }

    #[test]
    fn run_seeds_are_stable_under_batch_extension() {
        let first: Vec<u64> = (0..5).map(|i| run_seed(42, i)).collect();
        let extended: Vec<u64> = (0..8).map(|i| run_seed(42, i)).collect();
        assert_eq!(first[..], extended[..5]);
    }
}
