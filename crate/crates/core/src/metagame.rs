//! Epoch-level abstraction of the defender system as a deterministic
//! three-state machine, plus an exhaustive checker for the bound on the
//! number of non-exploitation epochs.
//!
//! States describe one epoch of the full game: every defender exploring,
//! a genuine mix, or every defender exploiting. Actions describe what the
//! attackers achieved during that epoch: nobody restarted, everybody
//! restarted, or a proper subset restarted.

use crate::defense::{DefensePhase, EpochRecord};
use std::fmt;
use thiserror::Error;

/// Epoch-level system state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaState {
    /// All defenders in exploration.
    Explore,
    /// At least one exploring and at least one exploiting.
    Desync,
    /// All defenders in exploitation.
    Exploit,
}

impl fmt::Display for MetaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetaState::Explore => write!(f, "explore"),
            MetaState::Desync => write!(f, "desync"),
            MetaState::Exploit => write!(f, "exploit"),
        }
    }
}

/// Effect of the attackers' pulls over one epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MetaAction {
    /// No defender restarted.
    NoCollision,
    /// Every defender restarted.
    AllRestart,
    /// A proper nonempty subset restarted.
    SplitRestart,
}

impl fmt::Display for MetaAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetaAction::NoCollision => write!(f, "none"),
            MetaAction::AllRestart => write!(f, "all-restart"),
            MetaAction::SplitRestart => write!(f, "split-restart"),
        }
    }
}

pub const ALL_STATES: [MetaState; 3] = [MetaState::Explore, MetaState::Desync, MetaState::Exploit];
pub const ALL_ACTIONS: [MetaAction; 3] =
    [MetaAction::NoCollision, MetaAction::AllRestart, MetaAction::SplitRestart];

/// Deterministic transition function. A desynchronized epoch resolves to
/// full exploration no matter what the attackers do: the sensing and
/// recall collisions that drive it come from defenders and cannot be
/// erased.
pub fn meta_step(state: MetaState, action: MetaAction) -> MetaState {
    use MetaAction::*;
    use MetaState::*;
    match (state, action) {
        (Explore, NoCollision) => Exploit,
        (Explore, AllRestart) => Explore,
        (Explore, SplitRestart) => Desync,
        (Desync, _) => Explore,
        (Exploit, NoCollision) => Exploit,
        (Exploit, AllRestart) => Explore,
        (Exploit, SplitRestart) => Desync,
    }
}

/// A sequence violating the non-exploitation bound.
#[derive(Clone, Debug)]
pub struct BoundViolation {
    pub start: MetaState,
    pub actions: Vec<MetaAction>,
    pub non_exploit: u64,
    pub attacks: u64,
}

/// Outcome of the exhaustive bound check.
#[derive(Clone, Debug)]
pub struct BoundReport {
    pub horizon: usize,
    pub sequences: u64,
    /// At most the first few violations found.
    pub violations: Vec<BoundViolation>,
}

impl BoundReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustively replays every action sequence of the given length from
/// every start state and checks that the number of non-exploitation states
/// visited (including start and final state) is at most `1 + 3 * attacks`.
///
/// `attacks` counts the restart-forcing actions in the sequence, plus one
/// when the start state is desynchronized: a desync state can only ever be
/// entered through a split restart, so an isolated desync start stands for
/// an attack spent just before the window.
///
/// `budget` restricts the check to sequences with at most that many
/// attacks; `None` checks all `3 * 3^horizon` sequences.
pub fn verify_bound(horizon: usize, budget: Option<u64>) -> BoundReport {
    assert!((1..=20).contains(&horizon), "exhaustive check needs 1 <= horizon <= 20");
    let total: u64 = 3u64.pow(horizon as u32);
    let mut report =
        BoundReport { horizon, sequences: 0, violations: Vec::new() };

    let mut actions = vec![MetaAction::NoCollision; horizon];
    for &start in &ALL_STATES {
        for code in 0..total {
            let mut c = code;
            for slot in actions.iter_mut() {
                *slot = ALL_ACTIONS[(c % 3) as usize];
                c /= 3;
            }
            let mut attacks = u64::from(start == MetaState::Desync);
            let mut non_exploit = u64::from(start != MetaState::Exploit);
            let mut state = start;
            for &a in &actions {
                if a != MetaAction::NoCollision {
                    attacks += 1;
                }
                state = meta_step(state, a);
                if state != MetaState::Exploit {
                    non_exploit += 1;
                }
            }
            if let Some(b) = budget {
                if attacks > b {
                    continue;
                }
            }
            report.sequences += 1;
            if non_exploit > 1 + 3 * attacks && report.violations.len() < 8 {
                report.violations.push(BoundViolation {
                    start,
                    actions: actions.clone(),
                    non_exploit,
                    attacks,
                });
            }
        }
    }
    report
}

/// Per-epoch observation of a full simulation: each defender's phase during
/// the epoch and restart flag at its end, plus whether any
/// defender-attacker collision happened.
#[derive(Clone, Debug)]
pub struct EpochSnapshot {
    pub phases: Vec<DefensePhase>,
    pub restarts: Vec<bool>,
    pub attacked: bool,
}

impl EpochSnapshot {
    /// Builds snapshots from per-defender epoch logs and per-epoch attack
    /// costs. All logs must have equal length.
    pub fn from_logs(logs: &[&[EpochRecord]], attack_costs: &[u64]) -> Vec<EpochSnapshot> {
        let epochs = logs.iter().map(|l| l.len()).min().unwrap_or(0).min(attack_costs.len());
        (0..epochs)
            .map(|e| EpochSnapshot {
                phases: logs.iter().map(|l| l[e].phase).collect(),
                restarts: logs.iter().map(|l| l[e].restarted).collect(),
                attacked: attack_costs[e] > 0,
            })
            .collect()
    }
}

/// Maps an epoch to its abstract state.
pub fn classify_state(snap: &EpochSnapshot) -> MetaState {
    let exploring = snap.phases.iter().filter(|&&p| p == DefensePhase::Exploration).count();
    if exploring == snap.phases.len() {
        MetaState::Explore
    } else if exploring == 0 {
        MetaState::Exploit
    } else {
        MetaState::Desync
    }
}

/// Maps an epoch to the attacker action it realized, judged by effect: the
/// restart flags are what carry over to the next epoch.
pub fn classify_action(snap: &EpochSnapshot) -> MetaAction {
    let restarts = snap.restarts.iter().filter(|&&r| r).count();
    if restarts == 0 {
        MetaAction::NoCollision
    } else if restarts == snap.restarts.len() {
        MetaAction::AllRestart
    } else {
        MetaAction::SplitRestart
    }
}

/// A simulation epoch whose successor disagrees with the abstract machine.
#[derive(Clone, Debug, Error)]
#[error("epoch {epoch}: {state} --{action}--> {expected} expected, simulator reached {actual}")]
pub struct ConformanceMismatch {
    pub epoch: usize,
    pub state: MetaState,
    pub action: MetaAction,
    pub expected: MetaState,
    pub actual: MetaState,
}

/// Replays the abstract machine over a full run's epoch snapshots and
/// checks it reproduces the simulator's state sequence exactly. Returns the
/// number of transitions checked.
pub fn check_conformance(snaps: &[EpochSnapshot]) -> Result<usize, ConformanceMismatch> {
    for (e, pair) in snaps.windows(2).enumerate() {
        let state = classify_state(&pair[0]);
        let action = classify_action(&pair[0]);
        let expected = meta_step(state, action);
        let actual = classify_state(&pair[1]);
        if expected != actual {
            return Err(ConformanceMismatch { epoch: e, state, action, expected, actual });
        }
    }
    Ok(snaps.len().saturating_sub(1))
}
