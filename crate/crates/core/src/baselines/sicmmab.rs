//! Synchronized successive accepts/rejects with implicit communication
//! through forced collisions.
//!
//! Structure:
//!
//! 1. Initialization: random orthogonalization (`ceil(K ln T)` rounds)
//!    followed by a `2K`-round collision census over the plain collision
//!    bit, yielding the believed player count `I` and a rank in `[I]`.
//! 2. Phases `p = 1, 2, ...`: exploration (every active arm pulled `2^p`
//!    times by hopping the active set), then communication (every ordered
//!    player pair exchanges one quantized statistic per active arm as
//!    `p + 1` bits, low bit first: a one-bit is sent by pulling the
//!    receiver's communication arm, a zero-bit by pulling one's own).
//! 3. After each communication phase the shared estimates feed a successive
//!    accepts/rejects rule with confidence radius `3 sqrt(ln T / 2s)`, `s`
//!    being the cumulative number of exploration rounds. Accepted arms go to
//!    the highest-ranked active players, who exploit them forever.
//!
//! Statistics are quantized as `min(2^{p+1} - 1, round(2^{p+1} * mean))`
//! and a received word is read back against the full scale `2^{p+1} - 1`,
//! so a jammed all-ones message decodes exactly to 1. Exploration rewards
//! are not collision-filtered; colliding with an explorer drags her
//! estimate toward zero, which is precisely what the known attacks exploit.
//!
//! Any bookkeeping step that would need an arm index beyond the active set
//! (the signature of a forced player-count overestimate) is recorded as a
//! [`DesyncFault`] and drops the defender into a fallback that sits on her
//! initialization arm.

use crate::env::{AgentAction, Arm, RoundFeedback};
use crate::proto::{CollisionCensus, Orthogonalizer};
use crate::sim::Agent;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct SicMmabParams {
    pub arms: usize,
    pub horizon: u64,
}

impl SicMmabParams {
    pub fn orthogonalization_rounds(&self) -> u64 {
        Orthogonalizer::rounds(self.arms, self.horizon)
    }

    pub fn census_start(&self) -> u64 {
        self.orthogonalization_rounds()
    }

    pub fn phases_start(&self) -> u64 {
        self.orthogonalization_rounds() + CollisionCensus::rounds(self.arms)
    }

    /// Confidence radius for the accept/reject rule after `s` cumulative
    /// exploration rounds.
    pub fn confidence_radius(&self, s: u64) -> f64 {
        3.0 * ((self.horizon as f64).ln() / (2.0 * s as f64)).sqrt()
    }
}

/// A recorded desynchronization: the protocol needed a resource (typically
/// an arm index) that cannot exist, implying the player count estimate was
/// corrupted.
#[derive(Clone, Debug)]
pub struct DesyncFault {
    pub round: u64,
    pub reason: String,
}

enum Stage {
    Orthogonalize(Orthogonalizer),
    Census(CollisionCensus),
    Explore,
    Communicate,
    Exploit(Arm),
    Fallback(Arm),
}

/// Decomposes a 0-based communication round into
/// `(sender_pos, receiver_pos, arm_pos, bit)` for `a` active players, `kp`
/// active arms, and `bits`-bit words.
fn comm_slot(a: usize, kp: usize, bits: u32, round: u64) -> (usize, usize, usize, u32) {
    let per_pair = kp as u64 * bits as u64;
    let pair = round / per_pair;
    let within = round % per_pair;
    let sender_pos = (pair / (a as u64 - 1)) as usize;
    let recv_slot = (pair % (a as u64 - 1)) as usize;
    let receiver_pos = recv_slot + usize::from(recv_slot >= sender_pos);
    let arm_pos = (within / bits as u64) as usize;
    let bit = (within % bits as u64) as u32;
    (sender_pos, receiver_pos, arm_pos, bit)
}

/// One defender running the protocol.
pub struct SicMmab {
    params: SicMmabParams,
    rng: ChaCha8Rng,
    stage: Stage,
    /// 0-based round within the current exploration or communication phase.
    stage_round: u64,
    external_arm: Arm,
    players: usize,
    rank: usize,
    phase: u32,
    active_arms: Vec<Arm>,
    active_ranks: Vec<usize>,
    obs: Vec<u64>,
    sums: Vec<f64>,
    stat_sum: Vec<f64>,
    stat_norm: f64,
    expl_rounds: u64,
    my_stats: Vec<u64>,
    incoming: u64,
    last_arm: Arm,
    committed_at: Option<u64>,
    faults: Vec<DesyncFault>,
}

impl SicMmab {
    pub fn new(params: SicMmabParams, rng: ChaCha8Rng) -> Self {
        Self {
            params,
            rng,
            stage: Stage::Orthogonalize(Orthogonalizer::new(params.arms)),
            stage_round: 0,
            external_arm: 1,
            players: 1,
            rank: 1,
            phase: 1,
            active_arms: (1..=params.arms).collect(),
            active_ranks: vec![1],
            obs: vec![0; params.arms],
            sums: vec![0.0; params.arms],
            stat_sum: vec![0.0; params.arms],
            stat_norm: 0.0,
            expl_rounds: 0,
            my_stats: Vec::new(),
            incoming: 0,
            last_arm: 1,
            committed_at: None,
            faults: Vec::new(),
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Believed total player count after the census.
    pub fn player_estimate(&self) -> usize {
        self.players
    }

    pub fn external_arm(&self) -> Arm {
        self.external_arm
    }

    pub fn committed(&self) -> Option<Arm> {
        match self.stage {
            Stage::Exploit(arm) => Some(arm),
            _ => None,
        }
    }

    pub fn committed_at(&self) -> Option<u64> {
        self.committed_at
    }

    pub fn faults(&self) -> &[DesyncFault] {
        &self.faults
    }

    /// Shared estimate for one arm, frozen once the arm (or this defender)
    /// leaves the active sets.
    pub fn estimate_of(&self, arm: Arm) -> f64 {
        if self.stat_norm > 0.0 {
            self.stat_sum[arm - 1] / self.stat_norm
        } else {
            0.0
        }
    }

    /// Shared estimates for the still-active arms.
    pub fn common_estimates(&self) -> Vec<(Arm, f64)> {
        self.active_arms
            .iter()
            .map(|&a| {
                let est = if self.stat_norm > 0.0 { self.stat_sum[a - 1] / self.stat_norm } else { 0.0 };
                (a, est)
            })
            .collect()
    }

    pub fn current_phase(&self) -> u32 {
        self.phase
    }

    pub fn cumulative_exploration_rounds(&self) -> u64 {
        self.expl_rounds
    }

    fn exploration_len(&self) -> u64 {
        self.active_arms.len() as u64 * (1u64 << self.phase)
    }

    fn bits(&self) -> u32 {
        self.phase + 1
    }

    fn stat_max(&self) -> u64 {
        (1u64 << self.bits()) - 1
    }

    fn communication_len(&self) -> u64 {
        let a = self.active_ranks.len() as u64;
        a * (a - 1) * self.active_arms.len() as u64 * self.bits() as u64
    }

    fn my_pos(&self) -> Option<usize> {
        self.active_ranks.iter().position(|&r| r == self.rank)
    }

    fn fault(&mut self, t: u64, reason: String) {
        self.faults.push(DesyncFault { round: t, reason });
        self.stage = Stage::Fallback(self.external_arm);
    }

    /// Builds this phase's outgoing statistics and folds our own
    /// contribution into the shared totals.
    fn start_communication(&mut self, t: u64) -> bool {
        if self.active_ranks.len() > self.active_arms.len() {
            let need = self.active_ranks.len();
            let have = self.active_arms.len();
            self.fault(
                t,
                format!("communication needs {need} distinct arms but only {have} are active"),
            );
            return false;
        }
        let max = self.stat_max();
        self.my_stats = self
            .active_arms
            .iter()
            .map(|&arm| {
                let mean = if self.obs[arm - 1] == 0 {
                    0.0
                } else {
                    self.sums[arm - 1] / self.obs[arm - 1] as f64
                };
                (((1u64 << self.bits()) as f64 * mean).round() as u64).min(max)
            })
            .collect();
        for (pos, &arm) in self.active_arms.iter().enumerate() {
            self.stat_sum[arm - 1] += self.my_stats[pos] as f64;
        }
        self.stat_norm += self.active_ranks.len() as f64 * max as f64;
        true
    }

    /// Successive accepts and rejects on the shared estimates, then arm
    /// assignment: accepted arms (ascending index) go to the active players
    /// of descending rank.
    fn accept_reject(&mut self, t: u64) {
        let a = self.active_ranks.len();
        let kp = self.active_arms.len();
        let radius = self.params.confidence_radius(self.expl_rounds.max(1));
        let est: Vec<f64> = self
            .active_arms
            .iter()
            .map(|&arm| self.stat_sum[arm - 1] / self.stat_norm)
            .collect();

        let mut accepted: Vec<Arm> = Vec::new();
        let mut rejected: Vec<Arm> = Vec::new();
        for (i, &arm) in self.active_arms.iter().enumerate() {
            let beats = est
                .iter()
                .enumerate()
                .filter(|&(j, &e)| j != i && est[i] - radius >= e + radius)
                .count();
            let beaten = est
                .iter()
                .enumerate()
                .filter(|&(j, &e)| j != i && e - radius >= est[i] + radius)
                .count();
            if beats >= kp - a {
                accepted.push(arm);
            } else if beaten >= a {
                rejected.push(arm);
            }
        }

        let mut ranks_desc = self.active_ranks.clone();
        ranks_desc.sort_unstable_by(|x, y| y.cmp(x));
        let assigned: Vec<(Arm, usize)> =
            accepted.iter().copied().zip(ranks_desc.iter().copied()).collect();

        for &(arm, rank) in &assigned {
            self.active_arms.retain(|&x| x != arm);
            self.active_ranks.retain(|&r| r != rank);
            if rank == self.rank {
                self.committed_at = Some(t);
                self.stage = Stage::Exploit(arm);
            }
        }
        self.active_arms.retain(|a| !rejected.contains(a));

        if matches!(self.stage, Stage::Exploit(_)) {
            return;
        }
        if self.active_ranks.len() > self.active_arms.len() {
            let need = self.active_ranks.len();
            let have = self.active_arms.len();
            self.fault(t, format!("{need} active players left with {have} active arms"));
            return;
        }
        self.phase += 1;
        self.stage_round = 0;
        self.stage = Stage::Explore;
    }
}

impl Agent for SicMmab {
    fn choose(&mut self, t: u64) -> AgentAction {
        // Clock-driven transitions out of initialization.
        if t == self.params.census_start() {
            if let Stage::Orthogonalize(orth) = &self.stage {
                let home = orth.final_arm();
                self.external_arm = home;
                self.stage = Stage::Census(CollisionCensus::new(self.params.arms, home));
            }
        }
        if t == self.params.phases_start() {
            if let Stage::Census(census) = &self.stage {
                let (players, rank) = census.result();
                self.players = players;
                self.rank = rank;
                self.active_ranks = (1..=players).collect();
                self.stage_round = 0;
                self.stage = Stage::Explore;
            }
        }

        let arm = match &mut self.stage {
            Stage::Orthogonalize(orth) => orth.arm(&mut self.rng),
            Stage::Census(census) => census.arm(t - self.params.census_start()),
            Stage::Explore => {
                let kp = self.active_arms.len();
                match self.my_pos() {
                    Some(pos) => self.active_arms[(pos + 1 + self.stage_round as usize) % kp],
                    None => {
                        self.fault(t, "exploring while not in the active player set".into());
                        self.external_arm
                    }
                }
            }
            Stage::Communicate => {
                let (sender_pos, receiver_pos, arm_pos, bit) = comm_slot(
                    self.active_ranks.len(),
                    self.active_arms.len(),
                    self.bits(),
                    self.stage_round,
                );
                match self.my_pos() {
                    Some(my_pos) => {
                        let target_pos =
                            if sender_pos == my_pos && self.my_stats[arm_pos] >> bit & 1 == 1 {
                                receiver_pos
                            } else {
                                my_pos
                            };
                        match self.active_arms.get(target_pos).copied() {
                            Some(a) => a,
                            None => {
                                self.fault(
                                    t,
                                    format!(
                                        "communication slot needs active arm #{}",
                                        target_pos + 1
                                    ),
                                );
                                self.external_arm
                            }
                        }
                    }
                    None => {
                        self.fault(t, "communicating while not in the active player set".into());
                        self.external_arm
                    }
                }
            }
            Stage::Exploit(arm) | Stage::Fallback(arm) => *arm,
        };
        self.last_arm = arm;
        AgentAction::Pull(arm)
    }

    fn observe(&mut self, t: u64, feedback: Option<&RoundFeedback>) {
        let Some(fb) = feedback else { return };
        match &mut self.stage {
            Stage::Orthogonalize(orth) => {
                orth.record(fb.collided);
                return;
            }
            Stage::Census(census) => {
                census.record(t - self.params.census_start(), fb.collided);
                return;
            }
            Stage::Exploit(_) | Stage::Fallback(_) => return,
            Stage::Explore | Stage::Communicate => {}
        }

        if matches!(self.stage, Stage::Explore) {
            self.obs[self.last_arm - 1] += 1;
            self.sums[self.last_arm - 1] += fb.reward;
            self.expl_rounds += 1;
            self.stage_round += 1;
            if self.stage_round == self.exploration_len() && self.start_communication(t) {
                self.stage_round = 0;
                if self.communication_len() == 0 {
                    // Sole active player: nothing to exchange.
                    self.accept_reject(t);
                } else {
                    self.stage = Stage::Communicate;
                }
            }
        } else {
            let (sender_pos, receiver_pos, arm_pos, bit) = comm_slot(
                self.active_ranks.len(),
                self.active_arms.len(),
                self.bits(),
                self.stage_round,
            );
            if let Some(my_pos) = self.my_pos() {
                if receiver_pos == my_pos && sender_pos != my_pos {
                    self.incoming |= (fb.collided as u64) << bit;
                    if bit == self.phase {
                        let arm = self.active_arms[arm_pos];
                        self.stat_sum[arm - 1] += self.incoming as f64;
                        self.incoming = 0;
                    }
                }
            }
            self.stage_round += 1;
            if self.stage_round == self.communication_len() {
                self.accept_reject(t);
            }
        }
    }
}
