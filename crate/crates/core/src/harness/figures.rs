//! Canned experiment presets reproducing the benchmark scenarios: algorithm
//! comparisons with and without attackers in both sensing models.

use super::output::{emit_csv_file, emit_svg_file, SeriesData};
use super::{
    run_experiment, AttackerKind, DefenderAlgo, ExperimentConfig, ExperimentResult, HarnessError,
};
use crate::env::SensingMode;
use std::path::Path;

/// The four canned scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    /// Non-distinguishable sensing, no attackers: resync vs mc vs sicmmab.
    Fig3,
    /// Non-distinguishable sensing, two burst attackers on the top arms.
    Fig4,
    /// Distinguishable sensing, no attackers: resync2 alone.
    Fig5,
    /// Distinguishable sensing, four uniform attackers for 5000 rounds.
    Fig6,
}

impl Figure {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "fig3" => Some(Self::Fig3),
            "fig4" => Some(Self::Fig4),
            "fig5" => Some(Self::Fig5),
            "fig6" => Some(Self::Fig6),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig5 => "fig5",
            Self::Fig6 => "fig6",
        }
    }
}

fn base_nd() -> ExperimentConfig {
    ExperimentConfig {
        arms: 10,
        defenders: 5,
        attackers: 0,
        horizon: 100_000,
        t0_override: Some(3000),
        ..Default::default()
    }
}

fn base_dc() -> ExperimentConfig {
    ExperimentConfig {
        arms: 10,
        defenders: 5,
        attackers: 0,
        horizon: 100_000,
        algo: DefenderAlgo::Resync2,
        sensing: SensingMode::Distinguishable,
        t0_override: Some(5000),
        ..Default::default()
    }
}

/// Labeled configurations plus output-metadata notes for one figure.
pub fn figure_configs(fig: Figure) -> (Vec<(String, ExperimentConfig)>, Vec<String>) {
    match fig {
        Figure::Fig3 => {
            let mk = |algo| {
                let mut c = base_nd();
                c.algo = algo;
                c
            };
            (
                vec![
                    ("resync".into(), mk(DefenderAlgo::Resync)),
                    ("mc".into(), mk(DefenderAlgo::Mc)),
                    ("sicmmab".into(), mk(DefenderAlgo::SicMmab)),
                ],
                vec!["K=10 N=5 M=0 T=100000, 20 runs, no attackers".into()],
            )
        }
        Figure::Fig4 => {
            let mk = |algo| {
                let mut c = base_nd();
                c.algo = algo;
                c.attackers = 2;
                c.attacker = AttackerKind::Burst;
                c
            };
            (
                vec![
                    ("resync".into(), mk(DefenderAlgo::Resync)),
                    ("mc".into(), mk(DefenderAlgo::Mc)),
                    ("sicmmab".into(), mk(DefenderAlgo::SicMmab)),
                ],
                vec![
                    "K=10 N=5 M=2 T=100000, 20 runs".into(),
                    "burst attackers hold two top arms over [0,3000) and [50000,53000)".into(),
                ],
            )
        }
        Figure::Fig5 => (
            vec![("resync2".into(), base_dc())],
            vec![
                "K=10 N=5 M=0 T=100000, 20 runs, distinguishable sensing".into(),
                "comparison curve from prior work omitted: that algorithm is out of scope".into(),
            ],
        ),
        Figure::Fig6 => {
            let mut c = base_dc();
            c.attackers = 4;
            c.attacker = AttackerKind::Uniform;
            c.attacker_until = 5000;
            (
                vec![("resync2".into(), c)],
                vec![
                    "K=10 N=5 M=4 T=100000, 20 runs, uniform attackers for 5000 rounds".into(),
                    "comparison curve from prior work omitted: that algorithm is out of scope".into(),
                ],
            )
        }
    }
}

/// Outcome of reproducing one figure.
pub struct FigureReport {
    pub figure: Figure,
    pub results: Vec<(String, ExperimentResult)>,
    pub notes: Vec<String>,
    pub csv_paths: Vec<std::path::PathBuf>,
    pub svg_path: std::path::PathBuf,
}

impl FigureReport {
    /// Conformance mismatches across all runs of all series.
    pub fn conformance_errors(&self) -> Vec<String> {
        self.results
            .iter()
            .flat_map(|(label, res)| {
                res.runs.iter().filter_map(move |r| {
                    r.conformance_error
                        .as_ref()
                        .map(|e| format!("{label} run {}: {e}", r.run_idx))
                })
            })
            .collect()
    }
}

/// Runs all series of a figure and writes one CSV per series plus one
/// combined SVG into `out_dir`.
pub fn run_figure(fig: Figure, out_dir: &Path) -> Result<FigureReport, HarnessError> {
    std::fs::create_dir_all(out_dir).map_err(|source| HarnessError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let (configs, notes) = figure_configs(fig);
    let mut results = Vec::new();
    let mut csv_paths = Vec::new();
    for (label, config) in configs {
        let result = run_experiment(&config)?;
        let csv_path = out_dir.join(format!("{}_{}.csv", fig.name(), label));
        emit_csv_file(&result.runs, config.stride, config.horizon, &csv_path)?;
        csv_paths.push(csv_path);
        results.push((label, result));
    }
    let series: Vec<SeriesData<'_>> = results
        .iter()
        .map(|(label, res)| SeriesData { label: label.clone(), aggregate: &res.aggregate })
        .collect();
    let svg_path = out_dir.join(format!("{}.svg", fig.name()));
    emit_svg_file(&series, &format!("cumulative regret — {}", fig.name()), &notes, &svg_path)?;
    Ok(FigureReport { figure: fig, results, notes, csv_paths, svg_path })
}
