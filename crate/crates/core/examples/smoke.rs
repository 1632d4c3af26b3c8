//! Quick end-to-end smoke run of every defender/attacker pairing used by
//! the experiment presets. Prints one summary line per scenario.

use mpmab_core::harness::{
    run_one, AttackerKind, DefenderAlgo, ExperimentConfig,
};
use mpmab_core::env::SensingMode;

fn main() {
    let scenarios: Vec<(&str, ExperimentConfig)> = vec![
        (
            "resync/no-attack",
            ExperimentConfig {
                t0_override: Some(3000),
                ..Default::default()
            },
        ),
        (
            "resync/burst",
            ExperimentConfig {
                attackers: 2,
                attacker: AttackerKind::Burst,
                t0_override: Some(3000),
                ..Default::default()
            },
        ),
        (
            "mc/no-attack",
            ExperimentConfig {
                algo: DefenderAlgo::Mc,
                t0_override: Some(3000),
                ..Default::default()
            },
        ),
        (
            "mc/burst",
            ExperimentConfig {
                algo: DefenderAlgo::Mc,
                attackers: 2,
                attacker: AttackerKind::Burst,
                t0_override: Some(3000),
                ..Default::default()
            },
        ),
        (
            "mc/mc-attack",
            ExperimentConfig {
                algo: DefenderAlgo::Mc,
                attackers: 1,
                attacker: AttackerKind::McAttack,
                t0_override: Some(3000),
                ..Default::default()
            },
        ),
        (
            "sicmmab/no-attack",
            ExperimentConfig {
                algo: DefenderAlgo::SicMmab,
                ..Default::default()
            },
        ),
        (
            "sicmmab/burst",
            ExperimentConfig {
                algo: DefenderAlgo::SicMmab,
                attackers: 2,
                attacker: AttackerKind::Burst,
                t0_override: Some(3000),
                ..Default::default()
            },
        ),
        (
            "sicmmab/targeted",
            ExperimentConfig {
                algo: DefenderAlgo::SicMmab,
                defenders: 3,
                attackers: 1,
                attacker: AttackerKind::SicMmabAttack,
                ..Default::default()
            },
        ),
        (
            "sicmmab/desync",
            ExperimentConfig {
                algo: DefenderAlgo::SicMmab,
                defenders: 3,
                attackers: 1,
                attacker: AttackerKind::DesyncAttack,
                ..Default::default()
            },
        ),
        (
            "resync2/no-attack",
            ExperimentConfig {
                algo: DefenderAlgo::Resync2,
                sensing: SensingMode::Distinguishable,
                t0_override: Some(5000),
                ..Default::default()
            },
        ),
        (
            "resync2/uniform",
            ExperimentConfig {
                algo: DefenderAlgo::Resync2,
                sensing: SensingMode::Distinguishable,
                attackers: 4,
                attacker: AttackerKind::Uniform,
                attacker_until: 5000,
                t0_override: Some(5000),
                ..Default::default()
            },
        ),
    ];

    for (name, config) in scenarios {
        match run_one(&config, 0) {
            Ok(out) => {
                let half = config.horizon / 2;
                let tail = out.trace.regret_in(half, config.horizon);
                println!(
                    "{name:22} regret={:>10.1} tail50%={:>9.1} cost={:>6} conf={:?} faults={} committed={:?} pulls={:?}",
                    out.trace.final_regret(),
                    tail,
                    out.trace.final_attack_cost(),
                    out.conformance_error.as_deref().unwrap_or("ok"),
                    out.faults.len(),
                    out.committed,
                    out.attacker_pulls,
                );
            }
            Err(e) => println!("{name:22} ERROR: {e}"),
        }
    }
}
