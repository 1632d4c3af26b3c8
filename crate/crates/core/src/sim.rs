//! Round-lockstep game runner.
//!
//! Each round all players submit actions, the environment resolves rewards
//! and collisions, and then all players observe their own feedback. A single
//! run is strictly single-threaded; independent runs parallelize in the
//! harness.

use crate::env::{
    accrue_attack_cost, accrue_regret, resolve_round, AgentAction, BanditInstance, EnvError,
    RoundFeedback,
};
use rand_chacha::ChaCha8Rng;

/// A player in the round-lockstep game. Implementations are isolated state
/// machines: they see only the global round index and their own feedback.
pub trait Agent {
    /// Action for round `t` (0-based).
    fn choose(&mut self, t: u64) -> AgentAction;

    /// Feedback for the action returned by the matching `choose` call.
    /// `None` when the agent stayed quiet.
    fn observe(&mut self, t: u64, feedback: Option<&RoundFeedback>);

    /// Called once after the final round.
    fn finish(&mut self, _t_end: u64) {}
}

/// Time series produced by one run.
#[derive(Clone, Debug, Default)]
pub struct RunTrace {
    /// Cumulative pseudo-regret after each round.
    pub cum_regret: Vec<f64>,
    /// Cumulative attack cost after each round; increments by at most one
    /// per round.
    pub cum_attack_cost: Vec<u64>,
    /// Rounds in which each player pulled an arm (defenders first).
    pub pulls_per_player: Vec<u64>,
    /// Full action log, kept only on request.
    pub actions: Option<Vec<Vec<AgentAction>>>,
}

impl RunTrace {
    pub fn final_regret(&self) -> f64 {
        self.cum_regret.last().copied().unwrap_or(0.0)
    }

    pub fn final_attack_cost(&self) -> u64 {
        self.cum_attack_cost.last().copied().unwrap_or(0)
    }

    /// Attack cost accrued in the half-open round window `[from, to)`.
    pub fn attack_cost_in(&self, from: u64, to: u64) -> u64 {
        let at = |t: u64| -> u64 {
            if t == 0 {
                0
            } else {
                self.cum_attack_cost[(t as usize - 1).min(self.cum_attack_cost.len() - 1)]
            }
        };
        at(to) - at(from)
    }

    /// Regret accrued in the half-open round window `[from, to)`.
    pub fn regret_in(&self, from: u64, to: u64) -> f64 {
        let at = |t: u64| -> f64 {
            if t == 0 {
                0.0
            } else {
                self.cum_regret[(t as usize - 1).min(self.cum_regret.len() - 1)]
            }
        };
        at(to) - at(from)
    }
}

/// Runs the full horizon. Defenders come first in the player order and may
/// never stay quiet; attackers may. `env_rng` drives reward sampling only,
/// so runs with different player policies share identical reward tables.
pub fn run_game(
    instance: &BanditInstance,
    defenders: &mut [&mut dyn Agent],
    attackers: &mut [&mut dyn Agent],
    env_rng: &mut ChaCha8Rng,
    record_actions: bool,
) -> Result<RunTrace, EnvError> {
    assert_eq!(defenders.len(), instance.defenders);
    assert_eq!(attackers.len(), instance.attackers);

    let players = instance.players();
    let mut trace = RunTrace {
        cum_regret: Vec::with_capacity(instance.horizon as usize),
        cum_attack_cost: Vec::with_capacity(instance.horizon as usize),
        pulls_per_player: vec![0; players],
        actions: if record_actions { Some(Vec::new()) } else { None },
    };

    let mut actions = vec![AgentAction::NoPull; players];
    let mut rewards: Vec<f64> = Vec::with_capacity(instance.arms());
    let mut cum_regret = 0.0;
    let mut cum_cost = 0u64;

    for t in 0..instance.horizon {
        for (i, d) in defenders.iter_mut().enumerate() {
            actions[i] = d.choose(t);
        }
        for (i, a) in attackers.iter_mut().enumerate() {
            actions[instance.defenders + i] = a.choose(t);
        }

        instance.draw_rewards(env_rng, &mut rewards);
        let feedbacks = resolve_round(&actions, instance, &rewards)?;

        cum_regret += accrue_regret(&actions, &feedbacks, instance);
        cum_cost += accrue_attack_cost(&actions, instance.defenders);
        trace.cum_regret.push(cum_regret);
        trace.cum_attack_cost.push(cum_cost);
        for (i, action) in actions.iter().enumerate() {
            if matches!(action, AgentAction::Pull(_)) {
                trace.pulls_per_player[i] += 1;
            }
        }
        if let Some(log) = trace.actions.as_mut() {
            log.push(actions.clone());
        }

        for (i, d) in defenders.iter_mut().enumerate() {
            d.observe(t, feedbacks[i].as_ref());
        }
        for (i, a) in attackers.iter_mut().enumerate() {
            a.observe(t, feedbacks[instance.defenders + i].as_ref());
        }
    }

    for d in defenders.iter_mut() {
        d.finish(instance.horizon);
    }
    for a in attackers.iter_mut() {
        a.finish(instance.horizon);
    }
    Ok(trace)
}
