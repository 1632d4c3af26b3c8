//! Building blocks shared by the defender protocols: 1-based modular arm
//! indexing, random orthogonalization, and the collision-counting census
//! that estimates the team size and assigns ranks.

use crate::env::Arm;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Maps `x >= 1` onto the 1-based ring `1..=modulus`, with residue 0 landing
/// on `modulus`. All `(t + j) mod K` style indexing in this crate goes
/// through here so the convention is fixed in one place.
pub fn wrap(x: u64, modulus: usize) -> Arm {
    debug_assert!(modulus > 0);
    ((x - 1) % modulus as u64) as usize + 1
}

/// Position variant of [`wrap`] for indexing into a 0-based slice of length
/// `modulus`.
pub fn wrap_idx(x: u64, modulus: usize) -> usize {
    wrap(x, modulus) - 1
}

/// Random orthogonalization: pull uniformly until a collision-free round,
/// then hold that arm. After `ceil(K ln T)` rounds every player holds a
/// distinct arm with probability at least `1 - N/T`.
#[derive(Clone, Debug)]
pub struct Orthogonalizer {
    arms: usize,
    fixed: Option<Arm>,
    last: Arm,
}

impl Orthogonalizer {
    pub fn new(arms: usize) -> Self {
        Self { arms, fixed: None, last: 1 }
    }

    /// Number of rounds the procedure runs for.
    pub fn rounds(arms: usize, horizon: u64) -> u64 {
        (arms as f64 * (horizon as f64).ln()).ceil().max(1.0) as u64
    }

    pub fn arm(&mut self, rng: &mut ChaCha8Rng) -> Arm {
        let arm = match self.fixed {
            Some(a) => a,
            None => rng.random_range(1..=self.arms),
        };
        self.last = arm;
        arm
    }

    pub fn record(&mut self, collided: bool) {
        if self.fixed.is_none() && !collided {
            self.fixed = Some(self.last);
        }
    }

    pub fn fixed(&self) -> Option<Arm> {
        self.fixed
    }

    /// The arm this player ends on. Falls back to the last pull when the
    /// procedure never found a free round (a probability-`1/T` event).
    pub fn final_arm(&self) -> Arm {
        self.fixed.unwrap_or(self.last)
    }
}

/// Collision-counting census over `2K` rounds, run from an orthogonal
/// position: sit on your own arm `k` for `2k` rounds, counting collisions
/// into both the team-size estimate and your rank, then sweep the remaining
/// arms counting into the team size only.
///
/// Which collision bit to feed to [`CollisionCensus::record`] is the
/// caller's choice: the defender-only bit makes the census immune to
/// attackers, the plain bit does not.
#[derive(Clone, Debug)]
pub struct CollisionCensus {
    arms: usize,
    home: Arm,
    players: usize,
    rank: usize,
    pi: Arm,
}

impl CollisionCensus {
    pub fn new(arms: usize, home: Arm) -> Self {
        Self { arms, home, players: 1, rank: 1, pi: home }
    }

    /// Total length of the census in rounds.
    pub fn rounds(arms: usize) -> u64 {
        2 * arms as u64
    }

    /// Arm to pull at 0-based local round `t_local`.
    pub fn arm(&mut self, t_local: u64) -> Arm {
        if t_local < 2 * self.home as u64 {
            self.home
        } else {
            self.pi = wrap(self.pi as u64 + 1, self.arms);
            self.pi
        }
    }

    /// Feed the collision indicator observed at `t_local`.
    pub fn record(&mut self, t_local: u64, collided: bool) {
        if collided {
            self.players += 1;
            if t_local < 2 * self.home as u64 {
                self.rank += 1;
            }
        }
    }

    /// `(estimated player count, own rank)`.
    pub fn result(&self) -> (usize, usize) {
        (self.players, self.rank)
    }
}
