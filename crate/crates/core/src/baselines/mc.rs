//! Musical-chairs defender: estimate all arm means from uniformly random
//! collision-filtered pulls, then grab a seat among the empirically best `N`
//! arms and keep it forever.

use crate::defense::DefenseError;
use crate::env::{AgentAction, Arm, RoundFeedback};
use crate::sim::Agent;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Default estimation length:
/// `ceil(max(64 K ln(4 K^2 T) / min_gap^2, K^2 ln(4T) / 0.02))`.
pub fn compute_mc_t0(arms: usize, horizon: u64, min_gap: f64) -> Result<u64, DefenseError> {
    if !(min_gap > 0.0 && min_gap <= 1.0) {
        return Err(DefenseError::GapOutOfRange(min_gap));
    }
    let k = arms as f64;
    let t = horizon as f64;
    let a = 64.0 * k * (4.0 * k * k * t).ln() / (min_gap * min_gap);
    let b = k * k * (4.0 * t).ln() / 0.02;
    Ok(a.max(b).ceil() as u64)
}

#[derive(Clone, Copy, Debug)]
pub struct McParams {
    pub arms: usize,
    /// The number of seats to fight for; the team size is assumed known.
    pub defenders: usize,
    pub horizon: u64,
    /// Estimation phase length.
    pub t0: u64,
}

/// One musical-chairs defender.
pub struct Mc {
    params: McParams,
    rng: ChaCha8Rng,
    obs: Vec<u64>,
    sums: Vec<f64>,
    collisions_seen: u64,
    top_set: Option<Vec<Arm>>,
    committed: Option<Arm>,
    last_arm: Arm,
}

impl Mc {
    pub fn new(params: McParams, rng: ChaCha8Rng) -> Self {
        Self {
            params,
            rng,
            obs: vec![0; params.arms],
            sums: vec![0.0; params.arms],
            collisions_seen: 0,
            top_set: None,
            committed: None,
            last_arm: 1,
        }
    }

    /// The arm this defender committed to, if any. Never changes once set.
    pub fn committed(&self) -> Option<Arm> {
        self.committed
    }

    /// Empirical top set used for the musical-chairs stage.
    pub fn top_set(&self) -> Option<&[Arm]> {
        self.top_set.as_deref()
    }

    /// Total-player estimate from the collision frequency of uniform pulls:
    /// a round collides with probability `1 - (1 - 1/K)^(players - 1)`.
    /// The team size is known, so the estimate is floored at it; extra
    /// collisions (from players that are not teammates) raise the number of
    /// chairs contested below.
    pub fn estimated_players(&self) -> usize {
        let k = self.params.arms as f64;
        let rate =
            (self.collisions_seen as f64 / self.params.t0 as f64).clamp(0.0, 1.0 - 1e-9);
        let est = 1.0 + (1.0 - rate).ln() / (1.0 - 1.0 / k).ln();
        (est.round() as usize).clamp(self.params.defenders, self.params.arms)
    }

    /// Arms never observed without collision count as zero mean.
    fn empirical_top(&self, count: usize) -> Vec<Arm> {
        let mut idx: Vec<Arm> = (1..=self.params.arms).collect();
        let mean = |a: Arm| {
            if self.obs[a - 1] == 0 {
                0.0
            } else {
                self.sums[a - 1] / self.obs[a - 1] as f64
            }
        };
        idx.sort_by(|&a, &b| mean(b).partial_cmp(&mean(a)).unwrap().then(a.cmp(&b)));
        let mut top: Vec<Arm> = idx.into_iter().take(count).collect();
        top.sort_unstable();
        top
    }
}

impl Agent for Mc {
    fn choose(&mut self, t: u64) -> AgentAction {
        if let Some(arm) = self.committed {
            return AgentAction::Pull(arm);
        }
        let arm = if t < self.params.t0 {
            self.rng.random_range(1..=self.params.arms)
        } else {
            if self.top_set.is_none() {
                self.top_set = Some(self.empirical_top(self.estimated_players()));
            }
            let top = self.top_set.as_ref().unwrap();
            top[self.rng.random_range(0..top.len())]
        };
        self.last_arm = arm;
        AgentAction::Pull(arm)
    }

    fn observe(&mut self, t: u64, feedback: Option<&RoundFeedback>) {
        let Some(fb) = feedback else { return };
        if self.committed.is_some() {
            return;
        }
        if t < self.params.t0 {
            if fb.collided {
                self.collisions_seen += 1;
            } else {
                self.obs[self.last_arm - 1] += 1;
                self.sums[self.last_arm - 1] += fb.reward;
            }
        } else if !fb.collided {
            self.committed = Some(self.last_arm);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::stream;

    #[test]
    fn commits_on_first_free_seat_and_stays() {
        let params = McParams { arms: 3, defenders: 2, horizon: 100, t0: 10 };
        let mut d = Mc::new(params, stream(1, 2));
        for t in 0..30u64 {
            let AgentAction::Pull(arm) = d.choose(t) else { panic!() };
            // Nobody else plays: no collisions, reward 1 on arm 1 only.
            let fb = RoundFeedback {
                reward: if arm == 1 { 1.0 } else { 0.0 },
                ..Default::default()
            };
            d.observe(t, Some(&fb));
        }
        let committed = d.committed().expect("should commit after t0");
        // From then on the action never changes.
        for t in 30..40 {
            assert_eq!(d.choose(t), AgentAction::Pull(committed));
        }
        assert!(d.top_set().unwrap().contains(&committed));
    }

    #[test]
    fn player_estimate_tracks_collision_rate() {
        let params = McParams { arms: 10, defenders: 5, horizon: 1000, t0: 1000 };
        let mut d = Mc::new(params, stream(0, 2));
        // No collisions at all: floored at the known team size.
        assert_eq!(d.estimated_players(), 5);
        // Collision frequency of six uniform players: 1 - 0.9^5.
        d.collisions_seen = ((1.0 - 0.9f64.powi(5)) * 1000.0).round() as u64;
        assert_eq!(d.estimated_players(), 6);
    }

    #[test]
    fn default_t0_formula() {
        // max(64*10*ln(4e7)/0.0025, 100*ln(4e5)/0.02): the first term wins.
        let k = 10.0f64;
        let t = 100_000.0f64;
        let expect = (64.0 * k * (4.0 * k * k * t).ln() / 0.0025)
            .max(k * k * (4.0 * t).ln() / 0.02)
            .ceil() as u64;
        assert_eq!(compute_mc_t0(10, 100_000, 0.05).unwrap(), expect);
    }
}
