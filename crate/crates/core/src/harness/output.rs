//! Trace output: CSV rows per logged round and a static SVG chart of the
//! mean regret with a standard-deviation band.

use super::{AggregateTrace, HarnessError, RunOutcome};
use std::io::Write;
use std::path::Path;

/// Writes `run,t,cum_regret,cum_attack_cost` rows, one per logged round per
/// run, rounds `stride, 2*stride, ..., <= horizon`. An empty batch yields a
/// header-only file.
pub fn emit_csv<W: Write>(
    runs: &[RunOutcome],
    stride: u64,
    horizon: u64,
    out: &mut W,
) -> std::io::Result<()> {
    writeln!(out, "run,t,cum_regret,cum_attack_cost")?;
    for run in runs {
        for i in 1..=horizon / stride {
            let t = i * stride;
            let idx = t as usize - 1;
            let regret = run.trace.cum_regret.get(idx).copied().unwrap_or(0.0);
            let cost = run.trace.cum_attack_cost.get(idx).copied().unwrap_or(0);
            writeln!(out, "{},{},{:.6},{}", run.run_idx, t, regret, cost)?;
        }
    }
    Ok(())
}

/// Convenience wrapper writing the CSV to a path.
pub fn emit_csv_file(
    runs: &[RunOutcome],
    stride: u64,
    horizon: u64,
    path: &Path,
) -> Result<(), HarnessError> {
    let wrap = |source: std::io::Error| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(wrap)?;
    let mut buf = std::io::BufWriter::new(file);
    emit_csv(runs, stride, horizon, &mut buf).map_err(wrap)
}

/// One labeled curve on the chart.
pub struct SeriesData<'a> {
    pub label: String,
    pub aggregate: &'a AggregateTrace,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 50.0;

/// Renders mean cumulative regret over rounds for each series, with a
/// shaded band of one standard deviation.
pub fn emit_svg<W: Write>(
    series: &[SeriesData<'_>],
    title: &str,
    notes: &[String],
    out: &mut W,
) -> std::io::Result<()> {
    let x_max = series
        .iter()
        .flat_map(|s| s.aggregate.rounds.last().copied())
        .max()
        .unwrap_or(1) as f64;
    let y_max = series
        .iter()
        .flat_map(|s| {
            s.aggregate
                .mean_regret
                .iter()
                .zip(&s.aggregate.std_regret)
                .map(|(m, sd)| m + sd)
        })
        .fold(1.0f64, f64::max);

    let plot_w = WIDTH - MARGIN_L - MARGIN_R;
    let plot_h = HEIGHT - MARGIN_T - MARGIN_B;
    let x = |t: f64| MARGIN_L + t / x_max * plot_w;
    let y = |v: f64| MARGIN_T + (1.0 - v / y_max) * plot_h;

    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    )?;
    writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#)?;
    writeln!(
        out,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="16" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        title
    )?;

    // Axes with five ticks each.
    for i in 0..=5 {
        let frac = i as f64 / 5.0;
        let tx = x(frac * x_max);
        let ty = y(frac * y_max);
        writeln!(
            out,
            r##"<line x1="{tx:.1}" y1="{:.1}" x2="{tx:.1}" y2="{:.1}" stroke="#dddddd"/>"##,
            MARGIN_T,
            HEIGHT - MARGIN_B
        )?;
        writeln!(
            out,
            r##"<line x1="{:.1}" y1="{ty:.1}" x2="{:.1}" y2="{ty:.1}" stroke="#dddddd"/>"##,
            MARGIN_L,
            WIDTH - MARGIN_R
        )?;
        writeln!(
            out,
            r#"<text x="{tx:.1}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{:.0}</text>"#,
            HEIGHT - MARGIN_B + 18.0,
            frac * x_max
        )?;
        writeln!(
            out,
            r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="11" text-anchor="end">{:.0}</text>"#,
            MARGIN_L - 6.0,
            ty + 4.0,
            frac * y_max
        )?;
    }
    writeln!(
        out,
        r#"<line x1="{MARGIN_L}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN_B,
        WIDTH - MARGIN_R,
        HEIGHT - MARGIN_B
    )?;
    writeln!(
        out,
        r#"<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" y2="{}" stroke="black"/>"#,
        HEIGHT - MARGIN_B
    )?;
    writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">round</text>"#,
        MARGIN_L + plot_w / 2.0,
        HEIGHT - 12.0
    )?;
    writeln!(
        out,
        r#"<text x="16" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle" transform="rotate(-90 16 {})">cumulative regret</text>"#,
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0
    )?;

    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let agg = s.aggregate;
        if agg.rounds.is_empty() {
            continue;
        }
        // Band: mean + std forward, mean - std backward.
        let mut band = String::new();
        for (j, &t) in agg.rounds.iter().enumerate() {
            band.push_str(&format!(
                "{:.1},{:.1} ",
                x(t as f64),
                y((agg.mean_regret[j] + agg.std_regret[j]).min(y_max))
            ));
        }
        for (j, &t) in agg.rounds.iter().enumerate().rev() {
            band.push_str(&format!(
                "{:.1},{:.1} ",
                x(t as f64),
                y((agg.mean_regret[j] - agg.std_regret[j]).max(0.0))
            ));
        }
        writeln!(
            out,
            r#"<polygon points="{}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            band.trim_end()
        )?;
        let line: String = agg
            .rounds
            .iter()
            .enumerate()
            .map(|(j, &t)| format!("{:.1},{:.1}", x(t as f64), y(agg.mean_regret[j])))
            .collect::<Vec<_>>()
            .join(" ");
        writeln!(
            out,
            r#"<polyline points="{line}" fill="none" stroke="{color}" stroke-width="1.8"/>"#
        )?;
        let ly = MARGIN_T + 14.0 + 18.0 * i as f64;
        writeln!(
            out,
            r#"<line x1="{}" y1="{ly:.1}" x2="{}" y2="{ly:.1}" stroke="{color}" stroke-width="3"/>"#,
            MARGIN_L + 10.0,
            MARGIN_L + 40.0
        )?;
        writeln!(
            out,
            r#"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="12">{}</text>"#,
            MARGIN_L + 46.0,
            ly + 4.0,
            s.label
        )?;
    }

    for (i, note) in notes.iter().enumerate() {
        writeln!(
            out,
            r##"<text x="{}" y="{:.1}" font-family="sans-serif" font-size="10" fill="#555555">{}</text>"##,
            MARGIN_L,
            HEIGHT - MARGIN_B + 32.0 + 12.0 * i as f64,
            note
        )?;
    }
    writeln!(out, "</svg>")
}

/// Convenience wrapper writing the SVG to a path.
pub fn emit_svg_file(
    series: &[SeriesData<'_>],
    title: &str,
    notes: &[String],
    path: &Path,
) -> Result<(), HarnessError> {
    let wrap = |source: std::io::Error| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(wrap)?;
    let mut buf = std::io::BufWriter::new(file);
    emit_svg(series, title, notes, &mut buf).map_err(wrap)
}
