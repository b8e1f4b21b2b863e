//! Aggregation of run records into per-query statistics, figure-input CSVs,
//! and static plots.
//!
//! Statistics use the sample (n-1) standard deviation over warm successful
//! runs only. CSV values are milliseconds with 3-decimal precision.

use crate::bench::{Outcome, Phase, RunRecord};
use crate::model::ScaleFactor;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq)]
pub struct QueryStats {
    pub backend: String,
    pub query: String,
    pub sf: ScaleFactor,
    /// Mean over warm successful runs; absent when none succeeded.
    pub mean_ms: Option<f64>,
    pub std_dev_ms: Option<f64>,
    pub run_count: u64,
    pub error_count: u64,
    /// Set for single-run groups, where the std dev is 0 by convention.
    pub low_confidence: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("malformed runs row: {0}")]
    BadRow(String),
}

/// Groups warm runs by (backend, query, sf) and computes mean and sample
/// standard deviation; cold runs never contribute.
pub fn summarize(runs: &[RunRecord]) -> Vec<QueryStats> {
    let mut groups: BTreeMap<(String, String, String), (Vec<f64>, u64)> = BTreeMap::new();
    let mut sfs: BTreeMap<(String, String, String), ScaleFactor> = BTreeMap::new();
    for run in runs {
        if run.phase != Phase::Warm {
            continue;
        }
        let key = (run.backend.clone(), run.query.clone(), run.sf.to_string());
        sfs.insert(key.clone(), run.sf);
        let entry = groups.entry(key).or_default();
        match run.outcome {
            Outcome::Success => entry.0.push(run.elapsed.as_secs_f64() * 1000.0),
            _ => entry.1 += 1,
        }
    }
    groups
        .into_iter()
        .map(|(key, (samples, error_count))| {
            let sf = sfs[&key];
            let (backend, query, _) = key;
            let run_count = samples.len() as u64;
            let (mean_ms, std_dev_ms, low_confidence) = match samples.len() {
                0 => (None, None, false),
                1 => (Some(samples[0]), Some(0.0), true),
                n => {
                    let mean = samples.iter().sum::<f64>() / n as f64;
                    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>()
                        / (n as f64 - 1.0);
                    (Some(mean), Some(var.sqrt()), false)
                }
            };
            QueryStats {
                backend,
                query,
                sf,
                mean_ms,
                std_dev_ms,
                run_count,
                error_count,
                low_confidence,
            }
        })
        .collect()
}

fn sf_axis_position(sf: ScaleFactor) -> usize {
    ScaleFactor::ALL
        .iter()
        .position(|v| v.value() == sf.value())
        .expect("scale factor is one of the four enumerated values")
        + 1
}

/// File-system-safe name for a query's canonical text.
pub fn query_file_stem(query: &str) -> String {
    query
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect::<String>()
        .trim_matches('_')
        .replace("__", "_")
}

/// Writes one figure-input CSV per query: `NO_DOCS` (the SF axis position
/// 1..4), then `<NAME>_AVG` and `<NAME>_STD` per backend; missing cells
/// stay empty. Returns the written file paths.
pub fn emit_figure_csv(
    stats: &[QueryStats],
    out_dir: &Path,
) -> Result<Vec<std::path::PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir)?;
    let mut queries: Vec<String> = stats.iter().map(|s| s.query.clone()).collect();
    queries.sort();
    queries.dedup();
    let mut backends: Vec<String> = stats.iter().map(|s| s.backend.clone()).collect();
    backends.sort();
    backends.dedup();

    let mut written = Vec::new();
    for query in &queries {
        let path = out_dir.join(format!("{}.csv", query_file_stem(query)));
        let mut writer = csv::Writer::from_path(&path)?;
        let mut header = vec!["NO_DOCS".to_string()];
        for backend in &backends {
            let name = backend.to_uppercase();
            header.push(format!("{name}_AVG"));
            header.push(format!("{name}_STD"));
        }
        writer.write_record(&header)?;
        for sf in ScaleFactor::ALL {
            let mut row = vec![sf_axis_position(sf).to_string()];
            for backend in &backends {
                let cell = stats.iter().find(|s| {
                    &s.query == query && &s.backend == backend && s.sf.value() == sf.value()
                });
                match cell.and_then(|s| s.mean_ms.zip(s.std_dev_ms)) {
                    Some((mean, std)) => {
                        row.push(format!("{mean:.3}"));
                        row.push(format!("{std:.3}"));
                    }
                    None => {
                        row.push(String::new());
                        row.push(String::new());
                    }
                }
            }
            writer.write_record(&row)?;
        }
        writer.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// One measured selectivity cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectivityRow {
    pub sf: ScaleFactor,
    pub query: String,
    pub s: f64,
}

/// Companion selectivity CSVs: rows are scale factors, columns query ids,
/// filter and aggregation queries in separate files.
pub fn emit_selectivity_csv(
    rows: &[SelectivityRow],
    out_dir: &Path,
) -> Result<Vec<std::path::PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir)?;
    let filter_columns = [
        "Q1(i=1)",
        "Q1(i=2)",
        "Q1(i=3)",
        "Q2(i=1,j=2)",
        "Q2(i=1,j=3)",
        "Q2(i=2,j=3)",
        "Q3(i=1,j=2)",
        "Q3(i=1,j=3)",
        "Q3(i=2,j=3)",
        "Q4(i=1,j=2,k=3)",
        "Q5(i=1,j=2,k=3)",
    ];
    let aggregation_columns = ["Q6", "Q7", "Q8(i=1,j=2,k=3)", "Q9(i=1,j=2,k=3)"];
    let mut written = Vec::new();
    for (file, columns) in [
        ("selectivity_filter.csv", filter_columns.as_slice()),
        ("selectivity_aggregation.csv", aggregation_columns.as_slice()),
    ] {
        let path = out_dir.join(file);
        let mut writer = csv::Writer::from_path(&path)?;
        let mut header = vec!["SF".to_string()];
        header.extend(columns.iter().map(|c| c.to_string()));
        writer.write_record(&header)?;
        for sf in ScaleFactor::ALL {
            let mut row = vec![sf.to_string()];
            for column in columns {
                let cell = rows
                    .iter()
                    .find(|r| r.sf.value() == sf.value() && &r.query == column);
                row.push(cell.map(|r| format!("{:.3}", r.s)).unwrap_or_default());
            }
            writer.write_record(&row)?;
        }
        writer.flush()?;
        written.push(path);
    }
    Ok(written)
}

/// Reads a runs.csv written by the bench stage back into run records.
pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRecord>, ReportError> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut runs = Vec::new();
    for result in reader.records() {
        let row = result?;
        let get = |i: usize| row.get(i).unwrap_or("").to_string();
        let sf: ScaleFactor = get(2)
            .parse()
            .map_err(|_| ReportError::BadRow(format!("bad sf in {row:?}")))?;
        let elapsed_ms: f64 = get(5)
            .parse()
            .map_err(|_| ReportError::BadRow(format!("bad elapsed in {row:?}")))?;
        let outcome_text = get(6);
        let outcome = if outcome_text == "success" {
            Outcome::Success
        } else if outcome_text == "timeout" {
            Outcome::Timeout
        } else {
            Outcome::Error(outcome_text.trim_start_matches("error: ").to_string())
        };
        runs.push(RunRecord {
            backend: get(0),
            query: get(1),
            sf,
            run_index: get(3)
                .parse()
                .map_err(|_| ReportError::BadRow(format!("bad run_index in {row:?}")))?,
            phase: if get(4) == "cold" { Phase::Cold } else { Phase::Warm },
            elapsed: Duration::from_secs_f64(elapsed_ms / 1000.0),
            outcome,
            result_count: row.get(7).and_then(|c| c.parse().ok()),
            started: Duration::ZERO,
            ended: Duration::ZERO,
        });
    }
    Ok(runs)
}

/// Renders one SVG per figure CSV: grouped bars per backend across SF with
/// std-dev error bars. Output is deterministic for fixed inputs.
pub fn emit_plots(csv_paths: &[std::path::PathBuf], out_dir: &Path) -> Result<Vec<std::path::PathBuf>, ReportError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for csv_path in csv_paths {
        let mut reader = csv::Reader::from_path(csv_path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(String::from).collect();
        let backends: Vec<String> = headers
            .iter()
            .skip(1)
            .step_by(2)
            .map(|h| h.trim_end_matches("_AVG").to_string())
            .collect();
        let mut rows: Vec<Vec<Option<(f64, f64)>>> = Vec::new();
        for record in reader.records() {
            let record = record?;
            let mut cells = Vec::new();
            for b in 0..backends.len() {
                let avg = record.get(1 + 2 * b).unwrap_or("");
                let std = record.get(2 + 2 * b).unwrap_or("");
                cells.push(match (avg.parse::<f64>(), std.parse::<f64>()) {
                    (Ok(a), Ok(s)) => Some((a, s)),
                    _ => None,
                });
            }
            rows.push(cells);
        }
        let stem = csv_path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "plot".into());
        let svg = render_svg(&stem, &backends, &rows);
        let out_path = out_dir.join(format!("{stem}.svg"));
        std::fs::write(&out_path, svg)?;
        written.push(out_path);
    }
    Ok(written)
}

const SVG_PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#000000", "#e377c2", "#8c564b", "#ff7f0e", "#7f7f7f",
];

fn render_svg(title: &str, backends: &[String], rows: &[Vec<Option<(f64, f64)>>]) -> String {
    let width = 640.0;
    let height = 420.0;
    let margin_left = 60.0;
    let margin_bottom = 50.0;
    let margin_top = 40.0;
    let plot_w = width - margin_left - 20.0;
    let plot_h = height - margin_top - margin_bottom;
    let max_value = rows
        .iter()
        .flatten()
        .flatten()
        .map(|(avg, std)| avg + std)
        .fold(0.0_f64, f64::max)
        .max(1e-9);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(svg, "<rect width=\"{width}\" height=\"{height}\" fill=\"white\"/>");
    let _ = writeln!(
        svg,
        "<text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">{title}</text>",
        width / 2.0
    );
    // axes
    let x0 = margin_left;
    let y0 = margin_top + plot_h;
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>",
        x0 + plot_w
    );
    let _ = writeln!(
        svg,
        "<line x1=\"{x0}\" y1=\"{}\" x2=\"{x0}\" y2=\"{y0}\" stroke=\"black\"/>",
        margin_top
    );
    let _ = writeln!(
        svg,
        "<text x=\"14\" y=\"{}\" transform=\"rotate(-90 14 {})\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">response time (ms)</text>",
        margin_top + plot_h / 2.0,
        margin_top + plot_h / 2.0
    );

    let group_count = rows.len().max(1) as f64;
    let group_w = plot_w / group_count;
    let sf_labels = ["0.125", "0.25", "0.5", "1"];
    for (row_idx, cells) in rows.iter().enumerate() {
        let group_x = x0 + row_idx as f64 * group_w;
        let bar_w = (group_w * 0.8) / backends.len().max(1) as f64;
        for (bar_idx, cell) in cells.iter().enumerate() {
            let color = SVG_PALETTE[bar_idx % SVG_PALETTE.len()];
            if let Some((avg, std)) = cell {
                let bar_h = (avg / max_value) * plot_h;
                let bx = group_x + group_w * 0.1 + bar_idx as f64 * bar_w;
                let by = y0 - bar_h;
                let _ = writeln!(
                    svg,
                    "<rect x=\"{bx:.2}\" y=\"{by:.2}\" width=\"{bar_w:.2}\" height=\"{bar_h:.2}\" fill=\"{color}\"/>"
                );
                // error bar
                let cx = bx + bar_w / 2.0;
                let e_top = y0 - ((avg + std) / max_value) * plot_h;
                let e_bot = y0 - ((avg - std).max(0.0) / max_value) * plot_h;
                let _ = writeln!(
                    svg,
                    "<line x1=\"{cx:.2}\" y1=\"{e_top:.2}\" x2=\"{cx:.2}\" y2=\"{e_bot:.2}\" stroke=\"black\" stroke-width=\"1\"/>"
                );
            }
        }
        let label = sf_labels.get(row_idx).copied().unwrap_or("");
        let _ = writeln!(
            svg,
            "<text x=\"{:.2}\" y=\"{}\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">{label}</text>",
            group_x + group_w / 2.0,
            y0 + 18.0
        );
    }
    // legend
    for (idx, backend) in backends.iter().enumerate() {
        let color = SVG_PALETTE[idx % SVG_PALETTE.len()];
        let lx = margin_left + idx as f64 * 100.0;
        let _ = writeln!(
            svg,
            "<rect class=\"legend\" x=\"{lx}\" y=\"{}\" width=\"10\" height=\"10\" fill=\"{color}\"/>",
            height - 20.0
        );
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\">{backend}</text>",
            lx + 14.0,
            height - 11.0
        );
    }
    svg.push_str("</svg>\n");
    svg
}
