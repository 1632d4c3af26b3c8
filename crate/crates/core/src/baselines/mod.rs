//! Defender baselines used as attack targets and experiment comparisons.

mod mc;
mod sicmmab;

pub use mc::{compute_mc_t0, Mc, McParams};
pub use sicmmab::{DesyncFault, SicMmab, SicMmabParams};

use crate::env::{AgentAction, Arm, RoundFeedback};
use crate::sim::Agent;

/// A defender pinned to one arm forever. Serves as the omniscient control
/// team for lower-bound experiments.
pub struct PinnedDefender {
    arm: Arm,
}

impl PinnedDefender {
    pub fn new(arm: Arm) -> Self {
        Self { arm }
    }
}

impl Agent for PinnedDefender {
    fn choose(&mut self, _t: u64) -> AgentAction {
        AgentAction::Pull(self.arm)
    }

    fn observe(&mut self, _t: u64, _feedback: Option<&RoundFeedback>) {}
}
