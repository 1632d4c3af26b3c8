//! Round-lockstep simulator for decentralized multi-player multi-armed bandits
//! with collision sensing and malicious players.
//!
//! A team of `N` cooperating defenders plays a `K`-armed stochastic bandit
//! against `M` attackers who may pull arms purely to collide. Whenever two or
//! more players pull the same arm in a round, everyone on that arm receives
//! zero reward and a collision bit. The crate provides:
//!
//! - [`env`](mod@env): the bandit environment — reward sampling, collision
//!   resolution, pseudo-regret and attack-cost accounting;
//! - [`defense`]: restart-synchronized defender protocols for the
//!   non-distinguishable (`RESYNC`) and distinguishable (`RESYNC2`) sensing
//!   models;
//! - [`baselines`]: the musical-chairs (`MC`) and `SIC-MMAB` defender
//!   algorithms used as attack targets and experiment baselines;
//! - [`attack`]: attacker policies, from scripted colliders to algorithm-aware
//!   strategies that break the baselines;
//! - [`metagame`]: the three-state epoch-level abstraction of the defender
//!   system and an exhaustive checker for its non-exploitation bound;
//! - [`harness`]: experiment configuration, multi-run execution, and CSV/SVG
//!   trace output.

pub mod attack;
pub mod baselines;
pub mod defense;
pub mod env;
pub mod harness;
pub mod metagame;
pub mod proto;
pub mod sim;

pub use env::{AgentAction, Arm, BanditInstance, RewardKind, RoundFeedback, SensingMode};
pub use sim::{run_game, Agent, RunTrace};
