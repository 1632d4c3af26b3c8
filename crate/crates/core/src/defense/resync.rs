//! Epoch-based defender protocol for non-distinguishable collision sensing.
//!
//! Time is divided into epochs of `T_B = T0 + 2N^2 + N` rounds. A defender
//! spends each epoch either exploring or exploiting, and a per-epoch
//! `restart` flag — raised by collisions in designated sub-phases — sends
//! every defender back to exploration in lockstep. Exploration epochs run
//! four sub-phases:
//!
//! 1. sequential hopping (`T0` rounds): pull `(t + rank) mod K`, accumulate
//!    reward statistics on collision-free rounds, raise `restart` on any
//!    collision;
//! 2. sensing (`N^2` rounds): during her own `N`-round slot a defender sits
//!    on the lowest-indexed empirically optimal arm to detect defenders that
//!    are still exploiting; everyone else parks one arm above it;
//! 3. intra-communication (`N^2` rounds): each defender broadcasts her
//!    restart bit by colliding with each listener's rank arm — a collision
//!    can raise a listener's bit but nothing can lower a raised one;
//! 4. inter-communication (`N` rounds): sit on the optimal arm with the
//!    lowest index to recall any exploiters.
//!
//! Exploitation epochs hop over the stored optimal set, listening for
//! recall collisions only during the final `N` rounds.

use super::{build_opt, DefenseError};
use crate::env::{AgentAction, Arm, RoundFeedback};
use crate::proto::{wrap, wrap_idx};
use crate::sim::Agent;

/// Fixed parameters shared by the defender team.
#[derive(Clone, Copy, Debug)]
pub struct ResyncParams {
    pub arms: usize,
    pub defenders: usize,
    pub horizon: u64,
    /// Sequential-hopping length per exploration epoch.
    pub t0: u64,
}

impl ResyncParams {
    pub fn new(arms: usize, defenders: usize, horizon: u64, t0: u64) -> Result<Self, DefenseError> {
        if defenders == 0 || defenders > arms {
            return Err(DefenseError::BadParams(format!(
                "need 1 <= N <= K, got N={defenders} K={arms}"
            )));
        }
        if t0 == 0 {
            return Err(DefenseError::BadParams("t0 must be positive".into()));
        }
        Ok(Self { arms, defenders, horizon, t0 })
    }

    /// Epoch length `T_B = T0 + 2N^2 + N`.
    pub fn epoch_len(&self) -> u64 {
        let n = self.defenders as u64;
        self.t0 + 2 * n * n + n
    }

    /// Number of complete epochs in the horizon.
    pub fn complete_epochs(&self) -> u64 {
        self.horizon / self.epoch_len()
    }
}

/// Which of the two epoch modes a defender is in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefensePhase {
    Exploration,
    Exploitation,
}

/// Summary of one completed epoch, used by the meta-game abstraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EpochRecord {
    pub phase: DefensePhase,
    /// Restart flag at the end of the epoch; true sends this defender into
    /// exploration next epoch.
    pub restarted: bool,
}

/// One defender running the restart-synchronized protocol. Given its rank,
/// parameters, and feedback sequence the action sequence is deterministic.
pub struct Resync {
    params: ResyncParams,
    rank: usize,
    phase: DefensePhase,
    restart: bool,
    suff_obs: bool,
    obs: Vec<u64>,
    sums: Vec<f64>,
    opt: Option<Vec<Arm>>,
    epoch_log: Vec<EpochRecord>,
    fault: Option<String>,
}

impl Resync {
    /// `rank` is this defender's unique identifier in `1..=N`.
    pub fn new(params: ResyncParams, rank: usize) -> Result<Self, DefenseError> {
        if rank == 0 || rank > params.defenders {
            return Err(DefenseError::BadParams(format!(
                "rank {rank} outside 1..={}",
                params.defenders
            )));
        }
        Ok(Self {
            params,
            rank,
            phase: DefensePhase::Exploration,
            // Every defender starts with a pending restart, so epoch 0 is an
            // exploration epoch for the whole team.
            restart: true,
            suff_obs: false,
            obs: vec![0; params.arms],
            sums: vec![0.0; params.arms],
            opt: None,
            epoch_log: Vec::new(),
            fault: None,
        })
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn params(&self) -> &ResyncParams {
        &self.params
    }

    pub fn phase(&self) -> DefensePhase {
        self.phase
    }

    pub fn restart_pending(&self) -> bool {
        self.restart
    }

    pub fn sufficient_observations(&self) -> bool {
        self.suff_obs
    }

    pub fn observations(&self) -> &[u64] {
        &self.obs
    }

    pub fn opt(&self) -> Option<&[Arm]> {
        self.opt.as_deref()
    }

    /// Records of all completed epochs, in order.
    pub fn epoch_log(&self) -> &[EpochRecord] {
        &self.epoch_log
    }

    pub fn fault(&self) -> Option<&str> {
        self.fault.as_deref()
    }

    fn n(&self) -> usize {
        self.params.defenders
    }

    /// Sensing and intra-communication rounds map onto `(sender, target)`
    /// pairs row-major: 1-based round `r` in `[N^2]` is pair
    /// `(ceil(r / N), ((r - 1) mod N) + 1)`, giving each defender `N`
    /// consecutive rounds as the sender.
    fn pair(&self, r1: u64) -> (usize, usize) {
        let n = self.n() as u64;
        (((r1 - 1) / n) as usize + 1, ((r1 - 1) % n) as usize + 1)
    }

    fn begin_epoch(&mut self, t: u64) {
        if t > 0 {
            self.epoch_log.push(EpochRecord { phase: self.phase, restarted: self.restart });
        }
        self.phase = if self.restart { DefensePhase::Exploration } else { DefensePhase::Exploitation };
        self.restart = false;
        self.suff_obs = false;
    }

    /// End of sequential hopping: check per-arm counts against the exact
    /// threshold `o_i >= T0 / K` (compared in integers as `o_i * K >= T0`)
    /// and rebuild the optimal set from the cumulative statistics.
    fn finish_seqhop(&mut self) {
        let k = self.params.arms as u64;
        self.suff_obs = self.obs.iter().all(|&o| o.saturating_mul(k) >= self.params.t0);
        if self.suff_obs {
            match build_opt(&self.obs, &self.sums, self.n()) {
                Ok(opt) => self.opt = Some(opt),
                Err(e) => {
                    self.fault.get_or_insert(format!("opt build failed: {e}"));
                    self.restart = true;
                    self.suff_obs = false;
                }
            }
        } else {
            self.restart = true;
        }
    }

    fn opt_first(&self) -> Arm {
        self.opt.as_ref().map(|o| o[0]).unwrap_or(1)
    }

    /// Exploitation pull for global round `t`: the stored optimal set is
    /// hopped by rank so that distinct ranks never collide.
    fn exploit_arm(&mut self, t: u64) -> Arm {
        match self.opt.as_ref() {
            Some(opt) => opt[wrap_idx(t + self.rank as u64, opt.len())],
            None => {
                self.fault.get_or_insert("exploitation without an optimal set".into());
                self.rank
            }
        }
    }
}

impl Agent for Resync {
    fn choose(&mut self, t: u64) -> AgentAction {
        let tb = self.params.epoch_len();
        let rel = t % tb;
        if rel == 0 {
            self.begin_epoch(t);
        }
        let t0 = self.params.t0;
        let nn = (self.n() * self.n()) as u64;
        let arm = match self.phase {
            DefensePhase::Exploration => {
                if rel < t0 {
                    wrap(t + self.rank as u64, self.params.arms)
                } else if rel < t0 + nn {
                    if rel == t0 {
                        self.finish_seqhop();
                    }
                    let (sender, _) = self.pair(rel - t0 + 1);
                    if self.suff_obs {
                        if sender == self.rank {
                            self.opt_first()
                        } else {
                            wrap(self.opt_first() as u64 + 1, self.params.arms)
                        }
                    } else {
                        1
                    }
                } else if rel < t0 + 2 * nn {
                    let (sender, target) = self.pair(rel - t0 - nn + 1);
                    if sender == self.rank {
                        if self.restart {
                            target
                        } else {
                            self.rank
                        }
                    } else {
                        self.rank
                    }
                } else {
                    // Inter-communication: recall exploiters.
                    if self.suff_obs {
                        self.opt_first()
                    } else {
                        1
                    }
                }
            }
            DefensePhase::Exploitation => self.exploit_arm(t),
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
        let tb = self.params.epoch_len();
        let rel = t % tb;
        let t0 = self.params.t0;
        let nn = (self.n() * self.n()) as u64;
        match self.phase {
            DefensePhase::Exploration => {
                if rel < t0 {
                    if fb.collided {
                        self.restart = true;
                    } else {
                        let arm = wrap(t + self.rank as u64, self.params.arms);
                        self.obs[arm - 1] += 1;
                        self.sums[arm - 1] += fb.reward;
                    }
                } else if rel < t0 + nn {
                    let (sender, _) = self.pair(rel - t0 + 1);
                    if sender == self.rank && self.suff_obs && fb.collided {
                        self.restart = true;
                    }
                } else if rel < t0 + 2 * nn {
                    let (sender, _) = self.pair(rel - t0 - nn + 1);
                    if sender != self.rank && fb.collided {
                        self.restart = true;
                    }
                }
                // Inter-communication collisions carry no information for
                // an exploring defender.
            }
            DefensePhase::Exploitation => {
                if rel >= t0 + 2 * nn && fb.collided {
                    self.restart = true;
                }
            }
        }
    }

    fn finish(&mut self, t_end: u64) {
        if t_end > 0 && t_end.is_multiple_of(self.params.epoch_len()) {
            self.epoch_log.push(EpochRecord { phase: self.phase, restarted: self.restart });
        }
    }
}
