//! Property and invariant tests that sit outside the acceptance checklist:
//! feedback-model identities, protocol determinism and orthogonality,
//! initialization success, attack mechanics, and batch reproducibility.

use mpmab_core::attack::{DesyncAttack, McAttack, ScriptedAttack, SicMmabAttack, Silent};
use mpmab_core::baselines::{Mc, McParams, SicMmab, SicMmabParams};
use mpmab_core::defense::{compute_t0, Resync, Resync2, Resync2Params, ResyncParams};
use mpmab_core::env::{
    accrue_attack_cost, accrue_regret, player_stream_id, resolve_round, run_seed, stream,
    AgentAction, Arm, BanditInstance, RewardKind, RoundFeedback, SensingMode, STREAM_ENV,
};
use mpmab_core::harness::{
    emit_csv, run_experiment, sample_instance, AttackerKind, DefenderAlgo, ExperimentConfig,
};
use mpmab_core::proto::{wrap, Orthogonalizer};
use mpmab_core::sim::{run_game, Agent};
use proptest::prelude::*;
use rand::Rng;
use std::collections::BTreeMap;

fn instance(means: &[f64], n: usize, m: usize, horizon: u64, sensing: SensingMode) -> BanditInstance {
    BanditInstance {
        means: means.to_vec(),
        reward_kind: RewardKind::Bernoulli,
        defenders: n,
        attackers: m,
        horizon,
        sensing,
    }
}

// ── Feedback model ────────────────────────────────────────────────────────

proptest! {
    // eta = etaD or etaA for every pulling player, on random rounds.
    #[test]
    fn collision_bit_is_the_disjunction(
        seed in 0u64..500,
        n in 1usize..4,
        m in 0usize..4,
    ) {
        let k = 5;
        let inst = instance(&[0.9, 0.7, 0.5, 0.3, 0.1], n, m, 10, SensingMode::Distinguishable);
        let mut rng = stream(seed, 1);
        let actions: Vec<AgentAction> = (0..n + m)
            .map(|i| {
                if i >= n && rng.random::<f64>() < 0.3 {
                    AgentAction::NoPull
                } else {
                    AgentAction::Pull(rng.random_range(1..=k))
                }
            })
            .collect();
        let rewards = vec![1.0; k];
        let feedbacks = resolve_round(&actions, &inst, &rewards).unwrap();
        for (idx, fb) in feedbacks.into_iter().enumerate() {
            let Some(fb) = fb else { continue };
            if idx < n {
                prop_assert_eq!(fb.collided, fb.defender_collision || fb.attacker_collision);
            } else {
                // Attackers never receive the defender/attacker split.
                prop_assert!(!fb.defender_collision && !fb.attacker_collision);
            }
            if fb.collided {
                prop_assert_eq!(fb.reward, 0.0);
            }
        }
    }

    // All pullers of one arm observe the identical shared sample.
    #[test]
    fn one_sample_per_arm_per_round(seed in 0u64..200) {
        let inst = instance(&[0.9, 0.7, 0.5], 1, 2, 10, SensingMode::NonDistinguishable);
        let mut rng = stream(seed, 1);
        let mut rewards = Vec::new();
        inst.draw_rewards(&mut rng, &mut rewards);
        // One defender and one attacker on arm 2, second attacker absent:
        // collision zeroes the reward for both pullers symmetrically.
        let actions = [AgentAction::Pull(2), AgentAction::Pull(2), AgentAction::NoPull];
        let feedbacks = resolve_round(&actions, &inst, &rewards).unwrap();
        let f0 = feedbacks[0].unwrap();
        let f1 = feedbacks[1].unwrap();
        prop_assert_eq!(f0.reward, f1.reward);
        prop_assert_eq!(f0.collided, f1.collided);
    }

    // Per-round regret is non-negative, and zero exactly on a collision-free
    // covering of the top arms.
    #[test]
    fn regret_nonnegative_and_tight(seed in 0u64..500) {
        let inst = instance(&[0.9, 0.7, 0.5, 0.2], 2, 1, 10, SensingMode::NonDistinguishable);
        let mut rng = stream(seed, 2);
        let actions: Vec<AgentAction> =
            (0..3).map(|_| AgentAction::Pull(rng.random_range(1..=4))).collect();
        let feedbacks = resolve_round(&actions, &inst, &[1.0; 4]).unwrap();
        let inc = accrue_regret(&actions, &feedbacks, &inst);
        prop_assert!(inc >= -1e-12);
        let top = inst.top_arms(2);
        let defender_arms: Vec<Arm> = actions[..2]
            .iter()
            .map(|a| match a {
                AgentAction::Pull(arm) => *arm,
                AgentAction::NoPull => unreachable!(),
            })
            .collect();
        let covered = top.iter().all(|a| defender_arms.contains(a));
        let collided = feedbacks[..2].iter().any(|f| f.unwrap().collided);
        if inc.abs() < 1e-12 {
            prop_assert!(covered && !collided);
        }
        if covered && !collided {
            prop_assert!(inc.abs() < 1e-12);
        }
    }

    // The log inequality behind the horizon lower bounds:
    // x = 4a ln(2a) + 2b implies x >= a ln x + b.
    #[test]
    fn log_inequality(a in 1.0f64..100.0, b in 0.01f64..100.0) {
        let x = 4.0 * a * (2.0 * a).ln() + 2.0 * b;
        prop_assert!(x >= a * x.ln() + b - 1e-9);
    }
}

// ── Epoch-protocol invariants ─────────────────────────────────────────────

const MEANS5: [f64; 5] = [0.9, 0.75, 0.6, 0.3, 0.1];

/// In an attacker-free run the team is collision-free outside the sensing
/// and talk blocks of exploration epochs.
#[test]
fn defenders_never_collide_while_hopping() {
    let t0 = 500u64;
    let n = 3usize;
    let params = ResyncParams::new(5, n, 1_000_000, t0).unwrap();
    let tb = params.epoch_len();
    let horizon = 6 * tb;
    let inst = instance(&MEANS5, n, 0, horizon, SensingMode::NonDistinguishable);
    let mut team: Vec<Resync> = (1..=n).map(|j| Resync::new(params, j).unwrap()).collect();
    let trace = {
        let mut defs: Vec<&mut dyn Agent> = team.iter_mut().map(|d| d as &mut dyn Agent).collect();
        run_game(&inst, &mut defs, &mut [], &mut stream(3, STREAM_ENV), true).unwrap()
    };
    let log = trace.actions.unwrap();
    let epoch_log = team[0].epoch_log();
    for (t, actions) in log.iter().enumerate() {
        let rel = t as u64 % tb;
        let epoch = (t as u64 / tb) as usize;
        let exploring = epoch_log
            .get(epoch)
            .map(|r| r.phase == mpmab_core::defense::DefensePhase::Exploration)
            .unwrap_or(true);
        // Sensing, talk, and recall blocks of exploration epochs collide by
        // design; sequential hopping and exploitation never do.
        if exploring && rel >= t0 {
            continue;
        }
        let mut arms: Vec<Arm> = actions
            .iter()
            .map(|a| match a {
                AgentAction::Pull(arm) => *arm,
                AgentAction::NoPull => unreachable!(),
            })
            .collect();
        arms.sort_unstable();
        arms.dedup();
        assert_eq!(arms.len(), n, "defender collision at round {t}");
    }
}

/// Given rank, parameters, and the feedback sequence, the action sequence
/// is a pure function: replaying identical feedback yields identical pulls.
#[test]
fn epoch_defender_is_deterministic() {
    let params = ResyncParams::new(5, 2, 100_000, 100).unwrap();
    let synth = |seed: u64| -> Vec<AgentAction> {
        let mut d = Resync::new(params, 2).unwrap();
        let mut rng = stream(seed, 0);
        let mut actions = Vec::new();
        for t in 0..3 * params.epoch_len() {
            actions.push(d.choose(t));
            let fb = RoundFeedback {
                reward: f64::from(rng.random::<f64>() < 0.5),
                collided: rng.random::<f64>() < 0.1,
                ..Default::default()
            };
            d.observe(t, Some(&fb));
        }
        actions
    };
    assert_eq!(synth(7), synth(7));
}

/// Completion of the observation threshold under the cheapest starving
/// attacker: one defender blocked on one arm. Statistics persist across
/// epochs, so the team finishes within the first clean exploration epoch,
/// and only attacked epochs fail to be final.
#[test]
fn starved_observations_complete_in_first_clean_epoch() {
    let t0 = 500u64;
    let n = 3usize;
    let k = MEANS5.len();
    let params = ResyncParams::new(k, n, 1_000_000, t0).unwrap();
    let tb = params.epoch_len();
    let horizon = 3 * tb;
    // Block every visit of the rank-1 defender to arm 5 during epoch 0.
    let mut pulls = BTreeMap::new();
    for t in 0..t0 {
        if wrap(t + 1, k) == 5 {
            pulls.insert(t, 5);
        }
    }
    let inst = instance(&MEANS5, n, 1, horizon, SensingMode::NonDistinguishable);
    let mut team: Vec<Resync> = (1..=n).map(|j| Resync::new(params, j).unwrap()).collect();
    let mut attacker = ScriptedAttack::new(k, pulls, stream(4, 50));
    let trace = {
        let mut defs: Vec<&mut dyn Agent> = team.iter_mut().map(|d| d as &mut dyn Agent).collect();
        let mut atts: Vec<&mut dyn Agent> = vec![&mut attacker];
        run_game(&inst, &mut defs, &mut atts, &mut stream(4, STREAM_ENV), false).unwrap()
    };
    // After the clean epoch 1's hop block, everyone clears the threshold.
    for d in &team {
        assert!(d.observations().iter().all(|&o| o * k as u64 >= t0));
    }
    // The attacker spent one collision per blocked visit; only epoch 0 was
    // attacked, and only epoch 0 restarted the team.
    assert_eq!(trace.final_attack_cost(), t0 / k as u64);
    let epoch1 = team[0].epoch_log()[1];
    assert!(!epoch1.restarted);
}

/// Exploration epochs discarded by the distinguishable-sensing protocol
/// never exceed the number of epochs containing an adversarial collision.
#[test]
fn discarded_epochs_bounded_by_attacked_epochs() {
    let k = 5usize;
    let t0 = 200u64;
    let horizon = 4000u64;
    let params = Resync2Params::new(k, horizon, t0).unwrap();
    let inst = instance(&MEANS5, 2, 1, horizon, SensingMode::Distinguishable);
    for seed in 0..20u64 {
        let mut team: Vec<Resync2> = (0..2)
            .map(|i| Resync2::new(params, stream(seed, player_stream_id(i))))
            .collect();
        let mut attacker = ScriptedAttack::new(k, BTreeMap::new(), stream(seed, 77))
            .with_noise(params.exploration_start(), params.exploration_start() + 300, 0.25);
        let trace = {
            let mut defs: Vec<&mut dyn Agent> =
                team.iter_mut().map(|d| d as &mut dyn Agent).collect();
            let mut atts: Vec<&mut dyn Agent> = vec![&mut attacker];
            run_game(&inst, &mut defs, &mut atts, &mut stream(seed, STREAM_ENV), false).unwrap()
        };
        let d = &team[0];
        assert_eq!(d.successful_epochs(), params.epochs_needed());
        let discarded = d.epochs_run() - params.epochs_needed();
        let attacked_epochs = (0..d.epochs_run())
            .filter(|&e| {
                let s = params.exploration_start() + e * params.epoch_len();
                trace.attack_cost_in(s, s + params.epoch_len()) > 0
            })
            .count() as u64;
        assert!(
            discarded <= attacked_epochs,
            "seed {seed}: {discarded} discarded > {attacked_epochs} attacked"
        );
    }
}

// ── Initialization ────────────────────────────────────────────────────────

/// With no attackers, every defender fixes on a distinct arm within the
/// orthogonalization window; ranks and team size come out exact.
#[test]
fn initialization_succeeds_across_seeds() {
    let k = 6usize;
    let horizon = 100_000u64;
    let t0 = 240u64;
    let means = [0.9, 0.75, 0.6, 0.45, 0.3, 0.1];
    let params = Resync2Params::new(k, horizon, t0).unwrap();
    for seed in 0..50u64 {
        let inst = instance(&means, 4, 0, 3000, SensingMode::Distinguishable);
        let mut team: Vec<Resync2> = (0..4)
            .map(|i| Resync2::new(params, stream(seed, player_stream_id(i))))
            .collect();
        {
            let mut defs: Vec<&mut dyn Agent> =
                team.iter_mut().map(|d| d as &mut dyn Agent).collect();
            run_game(&inst, &mut defs, &mut [], &mut stream(seed, STREAM_ENV), false).unwrap();
        }
        let mut externals: Vec<Arm> = Vec::new();
        let mut ranks: Vec<usize> = Vec::new();
        for d in &team {
            assert!(!d.init_fault(), "seed {seed}");
            assert_eq!(d.team_size(), 4, "seed {seed}");
            externals.push(d.external_arm().unwrap());
            ranks.push(d.rank());
        }
        externals.sort_unstable();
        externals.dedup();
        assert_eq!(externals.len(), 4, "seed {seed}: external arms must be distinct");
        ranks.sort_unstable();
        assert_eq!(ranks, vec![1, 2, 3, 4], "seed {seed}");
    }
}

/// Hand-checkable census case: homes {2, 5, 7} among ten arms. Each pair
/// meets exactly once, so everyone counts three players, ranked by home.
#[test]
fn census_on_ten_arms_with_three_defenders() {
    use mpmab_core::proto::CollisionCensus;
    let k = 10usize;
    let homes = [2usize, 5, 7];
    let means: Vec<f64> = (0..k).map(|i| 0.93 - 0.09 * i as f64).collect();
    let inst = instance(&means, 3, 0, CollisionCensus::rounds(k), SensingMode::Distinguishable);
    struct Probe(CollisionCensus);
    impl Agent for Probe {
        fn choose(&mut self, t: u64) -> AgentAction {
            AgentAction::Pull(self.0.arm(t))
        }
        fn observe(&mut self, t: u64, fb: Option<&RoundFeedback>) {
            self.0.record(t, fb.map(|f| f.defender_collision).unwrap_or(false));
        }
    }
    let mut probes: Vec<Probe> =
        homes.iter().map(|&h| Probe(CollisionCensus::new(k, h))).collect();
    {
        let mut defs: Vec<&mut dyn Agent> =
            probes.iter_mut().map(|p| p as &mut dyn Agent).collect();
        run_game(&inst, &mut defs, &mut [], &mut stream(0, STREAM_ENV), false).unwrap();
    }
    let results: Vec<(usize, usize)> = probes.iter().map(|p| p.0.result()).collect();
    assert_eq!(results, vec![(3, 1), (3, 2), (3, 3)]);
}

/// A defender facing attackers camped on all arms but one still fixes, on
/// the one free arm.
#[test]
fn orthogonalization_finds_the_only_free_arm() {
    let k = 5usize;
    let horizon = 10_000u64;
    let means = MEANS5;
    let rounds = Orthogonalizer::rounds(k, horizon);
    let inst = instance(&means, 1, k - 1, rounds + 1, SensingMode::Distinguishable);
    let params = Resync2Params::new(k, horizon, 100).unwrap();
    let mut d = Resync2::new(params, stream(9, player_stream_id(0)));
    // Attackers sit on arms 2..=K forever; arm 1 is the only free one.
    let mut attackers: Vec<PinnedAttacker> =
        (2..=k).map(|arm| PinnedAttacker { arm }).collect();
    {
        let mut defs: Vec<&mut dyn Agent> = vec![&mut d];
        let mut atts: Vec<&mut dyn Agent> =
            attackers.iter_mut().map(|a| a as &mut dyn Agent).collect();
        run_game(&inst, &mut defs, &mut atts, &mut stream(9, STREAM_ENV), false).unwrap();
    }
    assert_eq!(d.external_arm(), Some(1));
    assert!(!d.init_fault());
}

struct PinnedAttacker {
    arm: Arm,
}

impl Agent for PinnedAttacker {
    fn choose(&mut self, _t: u64) -> AgentAction {
        AgentAction::Pull(self.arm)
    }
    fn observe(&mut self, _t: u64, _f: Option<&RoundFeedback>) {}
}

// ── Baseline behavior ─────────────────────────────────────────────────────

/// Seat-taking defenders end up on pairwise distinct arms in attacker-free
/// runs.
#[test]
fn mc_commits_are_distinct_without_attackers() {
    for seed in 0..20u64 {
        let params = McParams { arms: 6, defenders: 3, horizon: 20_000, t0: 1200 };
        let means = [0.9, 0.75, 0.6, 0.45, 0.3, 0.1];
        let inst = instance(&means, 3, 0, 20_000, SensingMode::NonDistinguishable);
        let mut team: Vec<Mc> =
            (0..3).map(|i| Mc::new(params, stream(seed, player_stream_id(i)))).collect();
        {
            let mut defs: Vec<&mut dyn Agent> =
                team.iter_mut().map(|d| d as &mut dyn Agent).collect();
            run_game(&inst, &mut defs, &mut [], &mut stream(seed, STREAM_ENV), false).unwrap();
        }
        let mut committed: Vec<Arm> =
            team.iter().map(|d| d.committed().expect("must commit")).collect();
        committed.sort_unstable();
        committed.dedup();
        assert_eq!(committed.len(), 3, "seed {seed}: commits must be distinct");
    }
}

/// Two accepts/rejects defenders alone exchange statistics losslessly and
/// settle on the two best arms.
#[test]
fn sicmmab_pair_settles_on_top_arms() {
    let params = SicMmabParams { arms: 3, horizon: 30_000 };
    let means = [0.9, 0.5, 0.2];
    for seed in 0..10u64 {
        let inst = instance(&means, 2, 0, 30_000, SensingMode::NonDistinguishable);
        let mut team: Vec<SicMmab> = (0..2)
            .map(|i| SicMmab::new(params, stream(seed, player_stream_id(i))))
            .collect();
        {
            let mut defs: Vec<&mut dyn Agent> =
                team.iter_mut().map(|d| d as &mut dyn Agent).collect();
            run_game(&inst, &mut defs, &mut [], &mut stream(seed, STREAM_ENV), false).unwrap();
        }
        let mut committed: Vec<Arm> =
            team.iter().map(|d| d.committed().expect("must commit")).collect();
        committed.sort_unstable();
        assert_eq!(committed, vec![1, 2], "seed {seed}");
        assert!(team.iter().all(|d| d.faults().is_empty()));
    }
}

// ── Attack mechanics ──────────────────────────────────────────────────────

/// The targeted attacker's exploration pulls shadow the top-ranked
/// defender's hop sequence round for round.
#[test]
fn targeted_attack_shadows_the_top_rank_exploration() {
    let config_defenders = 3usize;
    let k = 10usize;
    let horizon = 100_000u64;
    let seed = run_seed(21, 0);
    let means: Vec<f64> = (0..k).map(|i| 0.93 - 0.09 * i as f64).collect();
    let inst = instance(&means, config_defenders, 1, horizon, SensingMode::NonDistinguishable);
    let params = SicMmabParams { arms: k, horizon };
    let mut team: Vec<SicMmab> = (0..config_defenders)
        .map(|i| SicMmab::new(params, stream(seed, player_stream_id(i))))
        .collect();
    let mut rng_a = stream(seed, player_stream_id(config_defenders));
    let mut attacker = SicMmabAttack::new(params, &mut rng_a);
    let trace = {
        let mut defs: Vec<&mut dyn Agent> = team.iter_mut().map(|d| d as &mut dyn Agent).collect();
        let mut atts: Vec<&mut dyn Agent> = vec![&mut attacker];
        run_game(&inst, &mut defs, &mut atts, &mut stream(seed, STREAM_ENV), true).unwrap()
    };
    let i_total = config_defenders + 1;
    let target_idx = team
        .iter()
        .position(|d| d.rank() == i_total)
        .expect("initialization should give someone the top rank");
    let log = trace.actions.unwrap();
    // Walk the phase schedule: exploration of phase p spans K * 2^p rounds,
    // then communication spans I(I-1)K(p+1).
    let mut t = params.phases_start();
    let mut checked = 0u64;
    for p in 1u32..=8 {
        let expl = k as u64 * (1 << p);
        for round in t..t + expl {
            let defender = log[round as usize][target_idx];
            let attacker_action = log[round as usize][config_defenders];
            assert_eq!(defender, attacker_action, "round {round} phase {p}");
            checked += 1;
        }
        t += expl + (i_total * (i_total - 1) * k) as u64 * (p as u64 + 1);
    }
    assert!(checked > 5000);
}

/// The census attack leaves its victim believing there are more players
/// than arms, which surfaces as a recorded desynchronization fault.
#[test]
fn desync_attack_forces_player_overcount() {
    let k = 10usize;
    let horizon = 50_000u64;
    let means: Vec<f64> = (0..k).map(|i| 0.93 - 0.09 * i as f64).collect();
    for seed in 0..10u64 {
        let params = SicMmabParams { arms: k, horizon };
        let inst = instance(&means, 3, 1, horizon, SensingMode::NonDistinguishable);
        let mut team: Vec<SicMmab> = (0..3)
            .map(|i| SicMmab::new(params, stream(seed, player_stream_id(i))))
            .collect();
        let mut attacker = DesyncAttack::new(k, horizon);
        let trace = {
            let mut defs: Vec<&mut dyn Agent> =
                team.iter_mut().map(|d| d as &mut dyn Agent).collect();
            let mut atts: Vec<&mut dyn Agent> = vec![&mut attacker];
            run_game(&inst, &mut defs, &mut atts, &mut stream(seed, STREAM_ENV), false).unwrap()
        };
        let victim = team.iter().max_by_key(|d| d.player_estimate()).unwrap();
        assert!(
            victim.player_estimate() > k,
            "seed {seed}: victim estimate {} should exceed the arm count",
            victim.player_estimate()
        );
        assert!(
            victim.faults().iter().any(|f| f.reason.contains("arms")),
            "seed {seed}: expected a recorded desynchronization fault"
        );
        assert!(trace.pulls_per_player[3] <= attacker.pull_budget());
    }
}

/// After the estimation-phase attack, the seat defenders settle off the
/// best arm and their regret keeps growing.
#[test]
fn mc_attack_denies_the_best_arm() {
    let k = 6usize;
    let n = 3usize;
    let t0 = 3000u64;
    let horizon = 60_000u64;
    let means = [0.9, 0.8, 0.7, 0.5, 0.3, 0.1];
    let mut denied = 0;
    for seed in 0..10u64 {
        let params = McParams { arms: k, defenders: n, horizon, t0 };
        let inst = instance(&means, n, 1, horizon, SensingMode::NonDistinguishable);
        let mut team: Vec<Mc> =
            (0..n).map(|i| Mc::new(params, stream(seed, player_stream_id(i)))).collect();
        let mut attacker = McAttack::new(k, horizon, t0, stream(seed, player_stream_id(n)));
        let trace = {
            let mut defs: Vec<&mut dyn Agent> =
                team.iter_mut().map(|d| d as &mut dyn Agent).collect();
            let mut atts: Vec<&mut dyn Agent> = vec![&mut attacker];
            run_game(&inst, &mut defs, &mut atts, &mut stream(seed, STREAM_ENV), false).unwrap()
        };
        let commits: Vec<Option<Arm>> = team.iter().map(|d| d.committed()).collect();
        if commits.iter().all(|c| *c != Some(1)) {
            denied += 1;
            // Best arm abandoned: regret keeps accruing after commitment.
            let tail = trace.regret_in(horizon / 2, horizon);
            assert!(
                tail >= 0.05 * (means[0] - means[3]) * horizon as f64 / 2.0,
                "seed {seed}: tail {tail}"
            );
        }
    }
    assert!(denied >= 8, "best arm denied in only {denied}/10 runs");
}

// ── Harness-level reproducibility and behavior ────────────────────────────

/// Same config and master seed produce byte-identical CSV output.
#[test]
fn batch_csv_is_byte_identical() {
    let config = ExperimentConfig {
        arms: 6,
        defenders: 3,
        horizon: 3000,
        algo: DefenderAlgo::Mc,
        t0_override: Some(600),
        runs: 3,
        stride: 50,
        seed: 123,
        ..Default::default()
    };
    let emit = || {
        let result = run_experiment(&config).unwrap();
        let mut buf = Vec::new();
        emit_csv(&result.runs, config.stride, config.horizon, &mut buf).unwrap();
        buf
    };
    assert_eq!(emit(), emit());
}

/// Infeasible gap floors are reported, not retried forever.
#[test]
fn impossible_gap_floor_errors_out() {
    let config = ExperimentConfig {
        arms: 10,
        defenders: 5,
        delta_floor: 0.9999,
        ..Default::default()
    };
    let mut rng = stream(1, 0);
    assert!(sample_instance(&config, &mut rng).is_err());
}

/// Distinguishable-sensing defence under early uniform attackers: regret
/// stops growing once exploration completes, shortly after round 10^4.
#[test]
fn dc_defense_flat_after_uniform_attack_ends() {
    let config = ExperimentConfig {
        arms: 10,
        defenders: 5,
        attackers: 4,
        horizon: 100_000,
        algo: DefenderAlgo::Resync2,
        sensing: SensingMode::Distinguishable,
        attacker: AttackerKind::Uniform,
        attacker_until: 5000,
        t0_override: Some(5000),
        runs: 5,
        ..Default::default()
    };
    let result = run_experiment(&config).unwrap();
    let mean_final: f64 = result.runs.iter().map(|r| r.trace.final_regret()).sum::<f64>() / 5.0;
    let mean_tail: f64 =
        result.runs.iter().map(|r| r.trace.regret_in(15_000, 100_000)).sum::<f64>() / 5.0;
    assert!(
        mean_tail <= 0.02 * mean_final,
        "tail {mean_tail} vs final {mean_final}: regret should be constant after exploration"
    );
}

/// Attack cost accumulates exactly the per-round indicator.
#[test]
fn attack_cost_equals_per_round_indicator_sum() {
    let inst = instance(&MEANS5, 2, 1, 2000, SensingMode::NonDistinguishable);
    let mut d1 = PinnedAttacker { arm: 1 };
    let mut d2 = PinnedAttacker { arm: 2 };
    let mut attacker = ScriptedAttack::new(5, BTreeMap::new(), stream(11, 60))
        .with_noise(0, 2000, 0.5);
    let trace = {
        let mut defs: Vec<&mut dyn Agent> = vec![&mut d1, &mut d2];
        let mut atts: Vec<&mut dyn Agent> = vec![&mut attacker];
        run_game(&inst, &mut defs, &mut atts, &mut stream(11, STREAM_ENV), true).unwrap()
    };
    let log = trace.actions.as_ref().unwrap();
    let mut expect = 0u64;
    for actions in log {
        expect += accrue_attack_cost(actions, 2);
    }
    assert_eq!(trace.final_attack_cost(), expect);
}

/// Silent attackers cost nothing and change nothing.
#[test]
fn silent_attacker_is_free() {
    let inst = instance(&MEANS5, 2, 1, 500, SensingMode::NonDistinguishable);
    let params = ResyncParams::new(5, 2, 500, 100).unwrap();
    let mut team: Vec<Resync> = (1..=2).map(|j| Resync::new(params, j).unwrap()).collect();
    let mut silent = Silent;
    let trace = {
        let mut defs: Vec<&mut dyn Agent> = team.iter_mut().map(|d| d as &mut dyn Agent).collect();
        let mut atts: Vec<&mut dyn Agent> = vec![&mut silent];
        run_game(&inst, &mut defs, &mut atts, &mut stream(2, STREAM_ENV), false).unwrap()
    };
    assert_eq!(trace.final_attack_cost(), 0);
    assert_eq!(trace.pulls_per_player[2], 0);
}

/// The exploration-length formula is monotone in the gap and horizon.
#[test]
fn exploration_length_reacts_to_parameters() {
    let a = compute_t0(10, 100_000, 0.05, None).unwrap();
    let b = compute_t0(10, 100_000, 0.1, None).unwrap();
    let c = compute_t0(10, 1_000_000, 0.05, None).unwrap();
    assert!(b < a);
    assert!(c > a);
}
