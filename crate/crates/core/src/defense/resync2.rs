//! Defender protocol for distinguishable collision sensing. Unlike the
//! non-distinguishable protocol, no rank or team size is assumed: both are
//! established online, and the exploration/exploitation phases run strictly
//! in sequence.
//!
//! 1. Orthogonalization (`ceil(K ln T)` rounds): random pulls until a
//!    collision-free round fixes this defender on an arm.
//! 2. Census (`2K` rounds): collision counting over the defender-only
//!    indicator yields the exact team size and a distinct rank, no matter
//!    what the attackers pull.
//! 3. Exploration in epochs of `2K` rounds: `K` rounds of sequential hopping
//!    collect one observation per arm, then `K` communication rounds spread
//!    the outcome — a defender who saw a collision parks on arm 1 where
//!    every hopping defender must cross her, again over the defender-only
//!    indicator. An epoch counts only if nobody restarted; exploration ends
//!    after `t0 / 2K` successful epochs.
//! 4. Exploitation: hop the optimal set until the horizon.

use super::{build_opt, DefenseError};
use crate::env::{AgentAction, Arm, RoundFeedback};
use crate::proto::{wrap, wrap_idx, CollisionCensus, Orthogonalizer};
use crate::sim::Agent;
use rand_chacha::ChaCha8Rng;

/// Fixed parameters. `t0` is the exploration budget; the protocol runs
/// `t0 / 2K` successful epochs, each contributing one observation per arm.
#[derive(Clone, Copy, Debug)]
pub struct Resync2Params {
    pub arms: usize,
    pub horizon: u64,
    pub t0: u64,
}

impl Resync2Params {
    pub fn new(arms: usize, horizon: u64, t0: u64) -> Result<Self, DefenseError> {
        if arms == 0 {
            return Err(DefenseError::BadParams("need at least one arm".into()));
        }
        if t0 == 0 {
            return Err(DefenseError::BadParams("t0 must be positive".into()));
        }
        Ok(Self { arms, horizon, t0 })
    }

    pub fn orthogonalization_rounds(&self) -> u64 {
        Orthogonalizer::rounds(self.arms, self.horizon)
    }

    pub fn census_rounds(&self) -> u64 {
        CollisionCensus::rounds(self.arms)
    }

    /// Round at which exploration epochs start.
    pub fn exploration_start(&self) -> u64 {
        self.orthogonalization_rounds() + self.census_rounds()
    }

    /// Exploration epoch length (`2K`).
    pub fn epoch_len(&self) -> u64 {
        2 * self.arms as u64
    }

    /// Successful epochs required before exploitation.
    pub fn epochs_needed(&self) -> u64 {
        self.t0.div_ceil(self.epoch_len())
    }
}

enum Stage {
    Orthogonalize(Orthogonalizer),
    Census(CollisionCensus),
    Explore,
    Exploit,
}

/// One defender for the distinguishable-sensing game.
pub struct Resync2 {
    params: Resync2Params,
    rng: ChaCha8Rng,
    stage: Stage,
    external_arm: Option<Arm>,
    team_size: usize,
    rank: usize,
    restart: bool,
    successful: u64,
    epochs_run: u64,
    obs: Vec<u64>,
    sums: Vec<f64>,
    opt: Option<Vec<Arm>>,
    exploit_from: Option<u64>,
    init_fault: bool,
    fault: Option<String>,
}

impl Resync2 {
    pub fn new(params: Resync2Params, rng: ChaCha8Rng) -> Self {
        Self {
            params,
            rng,
            stage: Stage::Orthogonalize(Orthogonalizer::new(params.arms)),
            external_arm: None,
            team_size: 1,
            rank: 1,
            restart: false,
            successful: 0,
            epochs_run: 0,
            obs: vec![0; params.arms],
            sums: vec![0.0; params.arms],
            opt: None,
            exploit_from: None,
            init_fault: false,
            fault: None,
        }
    }

    pub fn params(&self) -> &Resync2Params {
        &self.params
    }

    /// Arm fixed during orthogonalization.
    pub fn external_arm(&self) -> Option<Arm> {
        self.external_arm
    }

    /// Estimated number of defenders (exact once the census has run
    /// from an orthogonal position).
    pub fn team_size(&self) -> usize {
        self.team_size
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Exploration epochs executed, counting discarded ones.
    pub fn epochs_run(&self) -> u64 {
        self.epochs_run
    }

    pub fn successful_epochs(&self) -> u64 {
        self.successful
    }

    /// Global round at which exploitation began, if it has.
    pub fn exploit_from(&self) -> Option<u64> {
        self.exploit_from
    }

    pub fn opt(&self) -> Option<&[Arm]> {
        self.opt.as_deref()
    }

    pub fn observations(&self) -> &[u64] {
        &self.obs
    }

    /// True if orthogonalization ran out of rounds without fixing an arm.
    pub fn init_fault(&self) -> bool {
        self.init_fault
    }

    pub fn fault(&self) -> Option<&str> {
        self.fault.as_deref()
    }

    fn begin_exploitation(&mut self, t: u64) {
        match build_opt(&self.obs, &self.sums, self.team_size.min(self.params.arms)) {
            Ok(opt) => {
                self.opt = Some(opt);
                self.exploit_from = Some(t);
                self.stage = Stage::Exploit;
            }
            Err(e) => {
                self.fault.get_or_insert(format!("opt build failed: {e}"));
                self.stage = Stage::Exploit;
                self.exploit_from = Some(t);
            }
        }
    }
}

impl Agent for Resync2 {
    fn choose(&mut self, t: u64) -> AgentAction {
        let t_orth = self.params.orthogonalization_rounds();
        let t_expl = self.params.exploration_start();

        // Stage advances are driven by the global clock so that all
        // defenders move in lockstep.
        if t == t_orth {
            if let Stage::Orthogonalize(orth) = &self.stage {
                self.init_fault = orth.fixed().is_none();
                let home = orth.final_arm();
                self.external_arm = Some(home);
                self.stage = Stage::Census(CollisionCensus::new(self.params.arms, home));
            }
        }
        if t == t_expl {
            if let Stage::Census(census) = &self.stage {
                let (players, rank) = census.result();
                self.team_size = players;
                self.rank = rank;
                self.stage = Stage::Explore;
            }
        }

        let arm = match &mut self.stage {
            Stage::Orthogonalize(orth) => orth.arm(&mut self.rng),
            Stage::Census(census) => census.arm(t - t_orth),
            Stage::Explore => {
                let rel = (t - t_expl) % self.params.epoch_len();
                if rel == 0 {
                    self.restart = false;
                }
                if rel < self.params.arms as u64 {
                    wrap(t + self.rank as u64, self.params.arms)
                } else if self.restart {
                    1
                } else {
                    wrap(t + self.rank as u64, self.params.arms)
                }
            }
            Stage::Exploit => match &self.opt {
                Some(opt) => opt[wrap_idx(t + self.rank as u64, opt.len())],
                None => self.external_arm.unwrap_or(1),
            },
        };
        AgentAction::Pull(arm)
    }

    fn observe(&mut self, t: u64, feedback: Option<&RoundFeedback>) {
        let fb = match feedback {
            Some(fb) => fb,
            None => {
                self.fault.get_or_insert("missing feedback for a pulled arm".into());
                return;
            }
        };
        let t_orth = self.params.orthogonalization_rounds();
        let t_expl = self.params.exploration_start();
        let mut exploit_at: Option<u64> = None;
        match &mut self.stage {
            Stage::Orthogonalize(orth) => orth.record(fb.collided),
            Stage::Census(census) => census.record(t - t_orth, fb.defender_collision),
            Stage::Explore => {
                let rel = (t - t_expl) % self.params.epoch_len();
                if rel < self.params.arms as u64 {
                    if fb.collided {
                        self.restart = true;
                    } else {
                        let arm = wrap(t + self.rank as u64, self.params.arms);
                        self.obs[arm - 1] += 1;
                        self.sums[arm - 1] += fb.reward;
                    }
                } else {
                    if !self.restart && fb.defender_collision {
                        self.restart = true;
                    }
                    if rel == self.params.epoch_len() - 1 {
                        self.epochs_run += 1;
                        if !self.restart {
                            self.successful += 1;
                        }
                        if self.successful >= self.params.epochs_needed() {
                            exploit_at = Some(t + 1);
                        }
                    }
                }
            }
            Stage::Exploit => {}
        }
        if let Some(at) = exploit_at {
            self.begin_exploitation(at);
        }
    }
}
