//! Attacker policies. An attacker may pull an arm or stay quiet; staying
//! quiet yields no feedback and costs nothing. Algorithm-aware attackers are
//! granted the horizon and the target algorithm's phase timing, never the
//! true arm means.

use crate::baselines::SicMmabParams;
use crate::env::{AgentAction, Arm, RoundFeedback};
use crate::proto::{wrap, CollisionCensus};
use crate::sim::Agent;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// Never pulls.
pub struct Silent;

impl Agent for Silent {
    fn choose(&mut self, _t: u64) -> AgentAction {
        AgentAction::NoPull
    }
    fn observe(&mut self, _t: u64, _f: Option<&RoundFeedback>) {}
}

/// Samples one arm uniformly, pulls it for the first `budget` rounds, then
/// stays quiet forever. The cheapest attack that already forces regret
/// proportional to its budget.
pub struct LowerBoundAttack {
    arm: Arm,
    budget: u64,
}

impl LowerBoundAttack {
    pub fn new(arms: usize, budget: u64, rng: &mut ChaCha8Rng) -> Self {
        Self { arm: rng.random_range(1..=arms), budget }
    }

    pub fn arm(&self) -> Arm {
        self.arm
    }
}

impl Agent for LowerBoundAttack {
    fn choose(&mut self, t: u64) -> AgentAction {
        if t < self.budget {
            AgentAction::Pull(self.arm)
        } else {
            AgentAction::NoPull
        }
    }
    fn observe(&mut self, _t: u64, _f: Option<&RoundFeedback>) {}
}

/// Sits on one arm during each of the given `[start, start + len)` windows,
/// quiet otherwise. A team of burst attackers covers several arms by giving
/// each member its own arm and the same windows.
pub struct BurstAttack {
    arm: Arm,
    windows: Vec<(u64, u64)>,
}

impl BurstAttack {
    pub fn new(arm: Arm, windows: Vec<(u64, u64)>) -> Self {
        Self { arm, windows }
    }
}

impl Agent for BurstAttack {
    fn choose(&mut self, t: u64) -> AgentAction {
        if self.windows.iter().any(|&(s, len)| t >= s && t < s + len) {
            AgentAction::Pull(self.arm)
        } else {
            AgentAction::NoPull
        }
    }
    fn observe(&mut self, _t: u64, _f: Option<&RoundFeedback>) {}
}

/// Pulls a uniformly random arm each round until `until`, then goes quiet.
pub struct UniformRandomAttack {
    arms: usize,
    until: u64,
    rng: ChaCha8Rng,
}

impl UniformRandomAttack {
    pub fn new(arms: usize, until: u64, rng: ChaCha8Rng) -> Self {
        Self { arms, until, rng }
    }
}

impl Agent for UniformRandomAttack {
    fn choose(&mut self, t: u64) -> AgentAction {
        if t < self.until {
            AgentAction::Pull(self.rng.random_range(1..=self.arms))
        } else {
            AgentAction::NoPull
        }
    }
    fn observe(&mut self, _t: u64, _f: Option<&RoundFeedback>) {}
}

/// Test and experiment helper: fixed round-to-arm pulls plus optional
/// windows of random pulls. Quiet outside both.
pub struct ScriptedAttack {
    pulls: BTreeMap<u64, Arm>,
    /// `(start, end, probability)` half-open windows of uniform pulls.
    noise: Vec<(u64, u64, f64)>,
    arms: usize,
    rng: ChaCha8Rng,
}

impl ScriptedAttack {
    pub fn new(arms: usize, pulls: BTreeMap<u64, Arm>, rng: ChaCha8Rng) -> Self {
        Self { pulls, noise: Vec::new(), arms, rng }
    }

    pub fn with_noise(mut self, start: u64, end: u64, probability: f64) -> Self {
        self.noise.push((start, end, probability));
        self
    }
}

impl Agent for ScriptedAttack {
    fn choose(&mut self, t: u64) -> AgentAction {
        if let Some(&arm) = self.pulls.get(&t) {
            return AgentAction::Pull(arm);
        }
        for &(s, e, p) in &self.noise {
            if t >= s && t < e && self.rng.random::<f64>() < p {
                return AgentAction::Pull(self.rng.random_range(1..=self.arms));
            }
        }
        AgentAction::NoPull
    }
    fn observe(&mut self, _t: u64, _f: Option<&RoundFeedback>) {}
}

/// Attack on the musical-chairs defender: estimate means alongside the
/// defenders for `t0` rounds, then occupy the empirically best arm for
/// `ceil(K ln T)` rounds — exactly the window in which defenders grab
/// seats — and go quiet. No defender ends up seated on the best arm.
pub struct McAttack {
    arms: usize,
    t0: u64,
    hold_rounds: u64,
    rng: ChaCha8Rng,
    obs: Vec<u64>,
    sums: Vec<f64>,
    best: Option<Arm>,
    last_arm: Arm,
}

impl McAttack {
    /// `t0` must match the defenders' estimation length.
    pub fn new(arms: usize, horizon: u64, t0: u64, rng: ChaCha8Rng) -> Self {
        Self {
            arms,
            t0,
            hold_rounds: (arms as f64 * (horizon as f64).ln()).ceil() as u64,
            rng,
            obs: vec![0; arms],
            sums: vec![0.0; arms],
            best: None,
            last_arm: 1,
        }
    }

    /// Worst-case number of pulls this policy can make.
    pub fn pull_budget(&self) -> u64 {
        self.t0 + self.hold_rounds
    }

    pub fn occupied_arm(&self) -> Option<Arm> {
        self.best
    }
}

impl Agent for McAttack {
    fn choose(&mut self, t: u64) -> AgentAction {
        if t < self.t0 {
            let arm = self.rng.random_range(1..=self.arms);
            self.last_arm = arm;
            AgentAction::Pull(arm)
        } else if t < self.t0 + self.hold_rounds {
            if self.best.is_none() {
                let mean = |a: Arm| {
                    if self.obs[a - 1] == 0 { 0.0 } else { self.sums[a - 1] / self.obs[a - 1] as f64 }
                };
                self.best = (1..=self.arms).max_by(|&a, &b| {
                    mean(a).partial_cmp(&mean(b)).unwrap().then(b.cmp(&a))
                });
            }
            AgentAction::Pull(self.best.unwrap())
        } else {
            AgentAction::NoPull
        }
    }

    fn observe(&mut self, t: u64, feedback: Option<&RoundFeedback>) {
        if t < self.t0 {
            if let Some(fb) = feedback {
                if !fb.collided {
                    self.obs[self.last_arm - 1] += 1;
                    self.sums[self.last_arm - 1] += fb.reward;
                }
            }
        }
    }
}

/// Attack on the successive accepts/rejects defender. Grabs internal rank 1
/// by sitting on arm 1 through initialization, plays the census honestly,
/// and then, phase by phase, shadows the top-ranked defender's exploration
/// hops while rewriting the communication phase: the target receives a
/// full-scale statistic for one target arm and zero elsewhere, every other
/// defender pair is jammed to all-ones. Goes quiet once the cumulative
/// exploration rounds reach `18 I^2 ln T` — the point at which the target's
/// accept rule fires on the planted arm.
pub struct SicMmabAttack {
    params: SicMmabParams,
    target_arm: Arm,
    census: Option<CollisionCensus>,
    players: usize,
    phase: u32,
    stage: SicAttackStage,
    stage_round: u64,
    expl_rounds: u64,
}

enum SicAttackStage {
    Init,
    Census,
    Explore,
    Communicate,
    Quiet,
}

impl SicMmabAttack {
    pub fn new(params: SicMmabParams, rng: &mut ChaCha8Rng) -> Self {
        Self {
            params,
            target_arm: rng.random_range(1..=params.arms),
            census: None,
            players: 1,
            phase: 1,
            stage: SicAttackStage::Init,
            stage_round: 0,
            expl_rounds: 0,
        }
    }

    /// The arm the target defender is steered toward.
    pub fn target_arm(&self) -> Arm {
        self.target_arm
    }

    /// Believed player count after the census (equals `N + 1` on success).
    pub fn player_estimate(&self) -> usize {
        self.players
    }

    fn quiet_threshold(&self) -> f64 {
        18.0 * (self.players as f64).powi(2) * (self.params.horizon as f64).ln()
    }

    fn bits(&self) -> u32 {
        self.phase + 1
    }

    fn stat_for(&self, receiver_rank: usize, arm: Arm) -> u64 {
        let max = (1u64 << self.bits()) - 1;
        if receiver_rank == self.players {
            // The target defender: plant the target arm, bury the rest.
            if arm == self.target_arm { max } else { 0 }
        } else {
            max
        }
    }
}

impl Agent for SicMmabAttack {
    fn choose(&mut self, t: u64) -> AgentAction {
        if t == self.params.census_start() {
            self.census = Some(CollisionCensus::new(self.params.arms, 1));
            self.stage = SicAttackStage::Census;
        }
        if t == self.params.phases_start() {
            let (players, _rank) = self.census.as_ref().map(|c| c.result()).unwrap_or((1, 1));
            self.players = players;
            self.stage = SicAttackStage::Explore;
            self.stage_round = 0;
        }

        match &self.stage {
            SicAttackStage::Init => AgentAction::Pull(1),
            SicAttackStage::Census => {
                let local = t - self.params.census_start();
                AgentAction::Pull(self.census.as_mut().unwrap().arm(local))
            }
            SicAttackStage::Explore => {
                // Mirror of the rank-I defender's hop over the full arm set.
                let k = self.params.arms;
                let arm = wrap(self.players as u64 + self.stage_round + 1, k);
                self.stage_round += 1;
                self.expl_rounds += 1;
                if self.stage_round == k as u64 * (1u64 << self.phase) {
                    self.stage = SicAttackStage::Communicate;
                    self.stage_round = 0;
                }
                AgentAction::Pull(arm)
            }
            SicAttackStage::Communicate => {
                let a = self.players;
                let kp = self.params.arms;
                let bits = self.bits() as u64;
                let per_pair = kp as u64 * bits;
                let pair = self.stage_round / per_pair;
                let within = self.stage_round % per_pair;
                let sender = (pair / (a as u64 - 1)) as usize + 1;
                let recv_slot = (pair % (a as u64 - 1)) as usize + 1;
                let receiver = recv_slot + usize::from(recv_slot >= sender);
                let arm = (within / bits) as usize + 1;
                let bit = (within % bits) as u32;

                let pull = if sender == 1 {
                    // Our own slot: send the planted statistics bit by bit.
                    if self.stat_for(receiver, arm) >> bit & 1 == 1 {
                        receiver // receiver's communication arm
                    } else {
                        1 // our own communication arm
                    }
                } else {
                    // Jam defender-to-defender traffic on the receiver's arm.
                    receiver
                };

                self.stage_round += 1;
                let comm_len = (a * (a - 1)) as u64 * kp as u64 * bits;
                if self.stage_round == comm_len {
                    self.phase += 1;
                    self.stage_round = 0;
                    self.stage = if (self.expl_rounds as f64) < self.quiet_threshold() {
                        SicAttackStage::Explore
                    } else {
                        SicAttackStage::Quiet
                    };
                }
                AgentAction::Pull(pull)
            }
            SicAttackStage::Quiet => AgentAction::NoPull,
        }
    }

    fn observe(&mut self, t: u64, feedback: Option<&RoundFeedback>) {
        if matches!(self.stage, SicAttackStage::Census) {
            if let Some(fb) = feedback {
                let local = t - self.params.census_start();
                self.census.as_mut().unwrap().record(local, fb.collided);
            }
        }
    }
}

/// Desynchronization attack on the census: stay quiet through
/// orthogonalization, then hop arms until the first collision reveals a
/// defender, and shadow that defender's census trajectory until the
/// protocol's `2K` rounds end. The victim counts at least `K + 1`
/// collisions and concludes there are more players than arms.
pub struct DesyncAttack {
    arms: usize,
    census_start: u64,
    census_len: u64,
    state: DesyncState,
}

enum DesyncState {
    Quiet,
    Hunt { pi: u64 },
    Shadow { found_at: u64, arm: Arm, pi: u64 },
    Done,
}

impl DesyncAttack {
    pub fn new(arms: usize, horizon: u64) -> Self {
        let params = SicMmabParams { arms, horizon };
        Self {
            arms,
            census_start: params.census_start(),
            census_len: CollisionCensus::rounds(arms),
            state: DesyncState::Quiet,
        }
    }

    /// Worst-case pulls: the hunt plus the rest of the census window.
    pub fn pull_budget(&self) -> u64 {
        3 * self.arms as u64
    }
}

impl Agent for DesyncAttack {
    fn choose(&mut self, t: u64) -> AgentAction {
        if t == self.census_start {
            self.state = DesyncState::Hunt { pi: 0 };
        }
        let local = t.saturating_sub(self.census_start);
        match &mut self.state {
            DesyncState::Quiet => AgentAction::NoPull,
            DesyncState::Hunt { pi } => {
                *pi += 1;
                AgentAction::Pull(wrap(*pi, self.arms))
            }
            DesyncState::Shadow { found_at, arm, pi } => {
                // Sit on the victim's arm through her sitting block, then
                // track her sweep until the census window closes.
                if local >= self.census_len {
                    self.state = DesyncState::Done;
                    return AgentAction::NoPull;
                }
                let round1 = local + 1; // 1-based census round
                if round1 <= 2 * *found_at {
                    AgentAction::Pull(*arm)
                } else {
                    *pi += 1;
                    AgentAction::Pull(wrap(*pi, self.arms))
                }
            }
            DesyncState::Done => AgentAction::NoPull,
        }
    }

    fn observe(&mut self, t: u64, feedback: Option<&RoundFeedback>) {
        if let DesyncState::Hunt { pi } = &self.state {
            let collided = feedback.map(|f| f.collided).unwrap_or(false);
            if collided {
                let d = *pi; // victim's external rank
                let local = t - self.census_start;
                let _ = local;
                self.state = DesyncState::Shadow { found_at: d, arm: wrap(d, self.arms), pi: d };
            }
        }
    }
}
