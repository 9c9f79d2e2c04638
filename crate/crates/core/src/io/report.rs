//! Result files. Metric files carry no timing so they are byte-identical
//! across repeated runs; timing lives in `speed.csv` and the `solve_ms`
//! column of `results.csv` only.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use super::IoError;
use crate::eval::{BenchmarkReport, Direction, GroupSummary, RankTable, SequenceReport};
use crate::trackers::FrameResult;

pub const RESULTS_FILE: &str = "results.csv";
pub const COEFFS_FILE: &str = "coeffs.csv";
pub const RANK_CLE_FILE: &str = "rank_cle.csv";
pub const RANK_TSR_FILE: &str = "rank_tsr.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const AGGREGATE_FILE: &str = "aggregate.csv";
pub const SPEED_FILE: &str = "speed.csv";
pub const SUMMARY_FILE: &str = "summary.txt";

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), IoError> {
    let path = dir.join(name);
    fs::write(&path, bytes).map_err(|e| IoError::io(&path, e))
}

fn ensure_dir(dir: &Path) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))
}

/// `results.csv` bytes. Frames are numbered like the image files and
/// boxes use the same 1-based convention as `groundtruth_rect.txt`.
pub fn results_csv(results: &[FrameResult]) -> Vec<u8> {
    csv_bytes(
        &["frame", "x", "y", "w", "h", "residual", "solve_ms"],
        results.iter().map(|r| {
            vec![
                (r.frame_index + 1).to_string(),
                format!("{:.4}", r.bbox.x + 1.0),
                format!("{:.4}", r.bbox.y + 1.0),
                format!("{:.4}", r.bbox.w),
                format!("{:.4}", r.bbox.h),
                format!("{:.9e}", r.residual),
                format!("{:.4}", r.solve_time.as_secs_f64() * 1e3),
            ]
        }),
    )
}

/// `coeffs.csv` bytes: target coefficients first, then occlusion coefficients.
pub fn coeffs_csv(results: &[FrameResult]) -> Vec<u8> {
    csv_bytes(
        &["frame", "index", "value"],
        results.iter().flat_map(|r| {
            r.coefficients
                .joint()
                .iter()
                .enumerate()
                .map(|(i, v)| vec![(r.frame_index + 1).to_string(), i.to_string(), format!("{v:.9e}")])
                .collect::<Vec<_>>()
        }),
    )
}

pub fn write_track_results(dir: &Path, results: &[FrameResult]) -> Result<(), IoError> {
    ensure_dir(dir)?;
    write_file(dir, RESULTS_FILE, &results_csv(results))?;
    write_file(dir, COEFFS_FILE, &coeffs_csv(results))
}

fn rank_rows(reports: &[SequenceReport], pick: fn(&SequenceReport) -> &RankTable) -> Vec<Vec<String>> {
    reports
        .iter()
        .flat_map(|s| {
            pick(s)
                .entries
                .iter()
                .map(|e| {
                    vec![
                        s.sequence.clone(),
                        e.summary.label.clone(),
                        format!("{:.6}", e.summary.mean),
                        format!("{:.6}", e.summary.std),
                        e.summary.n.to_string(),
                        e.rank.to_string(),
                        e.differs_from_best.to_string(),
                    ]
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

const RANK_HEADER: [&str; 7] = ["sequence", "tracker", "mean", "std", "n", "rank", "differs_from_best"];

pub fn rank_cle_csv(report: &BenchmarkReport) -> Vec<u8> {
    csv_bytes(&RANK_HEADER, rank_rows(&report.sequences, |s| &s.cle))
}

pub fn rank_tsr_csv(report: &BenchmarkReport) -> Vec<u8> {
    csv_bytes(&RANK_HEADER, rank_rows(&report.sequences, |s| &s.tsr))
}

pub fn runs_csv(report: &BenchmarkReport) -> Vec<u8> {
    csv_bytes(
        &["tracker", "sequence", "run", "mean_cle", "tsr", "frames", "status"],
        report.runs.iter().map(|r| match &r.outcome {
            Ok(m) => vec![
                r.tracker.clone(),
                r.sequence.clone(),
                r.run.to_string(),
                format!("{:.6}", m.mean_cle),
                format!("{:.6}", m.tsr),
                m.frames.to_string(),
                "ok".into(),
            ],
            Err(e) => vec![
                r.tracker.clone(),
                r.sequence.clone(),
                r.run.to_string(),
                String::new(),
                String::new(),
                String::new(),
                format!("failed: {e}"),
            ],
        }),
    )
}

pub fn aggregate_csv(report: &BenchmarkReport) -> Vec<u8> {
    csv_bytes(
        &["tracker", "avg_cle", "avg_cle_rank", "avg_tsr", "avg_tsr_rank", "sequences"],
        report.aggregate.iter().map(|a| {
            vec![
                a.tracker.clone(),
                format!("{:.6}", a.avg_cle),
                format!("{:.4}", a.avg_cle_rank),
                format!("{:.6}", a.avg_tsr),
                format!("{:.4}", a.avg_tsr_rank),
                a.sequences.to_string(),
            ]
        }),
    )
}

/// Average speed per tracker over all sequences.
pub fn speed_csv(report: &BenchmarkReport) -> Vec<u8> {
    csv_bytes(
        &["tracker", "avg_fps", "mean_solve_ms"],
        report.aggregate.iter().map(|a| {
            let solve: Vec<f64> = report
                .sequences
                .iter()
                .filter_map(|s| s.cells.iter().find(|c| c.tracker == a.tracker).and_then(|c| c.mean_solve_time))
                .collect();
            let mean_solve = if solve.is_empty() {
                f64::NAN
            } else {
                solve.iter().sum::<f64>() / solve.len() as f64
            };
            vec![a.tracker.clone(), format!("{:.3}", a.avg_fps), format!("{:.4}", mean_solve * 1e3)]
        }),
    )
}

fn cell_text(table: &RankTable, label: &str, decimals: usize) -> String {
    match table.entries.iter().find(|e| e.summary.label == label) {
        Some(e) => format!(
            "{:.*} ± {:.*} ({}){}",
            decimals,
            e.summary.mean,
            decimals,
            e.summary.std,
            e.rank,
            if e.differs_from_best { "*" } else { "" }
        ),
        None => "n/a".into(),
    }
}

fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s}{}", " ".repeat(widths[c] - s.chars().count())))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

/// Aligned text tables: one row per sequence with `mean ± std (rank)` per
/// tracker, then the average metric and average rank. `*` marks a tracker
/// significantly different from the best one on that sequence.
pub fn summary_text(report: &BenchmarkReport) -> String {
    let labels: Vec<String> = report.aggregate.iter().map(|a| a.tracker.clone()).collect();
    let mut out = String::new();
    for (title, pick, decimals) in [
        ("CLE (pixels, lower is better)", (|s: &SequenceReport| &s.cle) as fn(&SequenceReport) -> &RankTable, 2usize),
        ("TSR (higher is better)", |s: &SequenceReport| &s.tsr, 3),
    ] {
        let is_cle = decimals == 2;
        let mut rows = vec![std::iter::once("Sequence".to_string()).chain(labels.iter().cloned()).collect::<Vec<_>>()];
        for s in &report.sequences {
            let mut row = vec![s.sequence.clone()];
            row.extend(labels.iter().map(|l| cell_text(pick(s), l, decimals)));
            rows.push(row);
        }
        let mut avg = vec![if is_cle { "Avg CLE/rank" } else { "Avg TSR/rank" }.to_string()];
        avg.extend(report.aggregate.iter().map(|a| {
            let (m, r) = if is_cle { (a.avg_cle, a.avg_cle_rank) } else { (a.avg_tsr, a.avg_tsr_rank) };
            format!("{m:.decimals$} / {r:.2}")
        }));
        rows.push(avg);
        out.push_str(title);
        out.push('\n');
        out.push_str(&aligned(&rows));
        out.push('\n');
    }
    out.push_str("* significantly different from the best tracker on that sequence (Tukey HSD, alpha 0.05)\n");
    out
}

pub fn write_bench_report(dir: &Path, report: &BenchmarkReport) -> Result<(), IoError> {
    ensure_dir(dir)?;
    write_file(dir, RANK_CLE_FILE, &rank_cle_csv(report))?;
    write_file(dir, RANK_TSR_FILE, &rank_tsr_csv(report))?;
    write_file(dir, RUNS_FILE, &runs_csv(report))?;
    write_file(dir, AGGREGATE_FILE, &aggregate_csv(report))?;
    write_file(dir, SPEED_FILE, &speed_csv(report))?;
    write_file(dir, SUMMARY_FILE, summary_text(report).as_bytes())
}

#[derive(Deserialize)]
struct SummaryRow {
    label: String,
    mean: f64,
    std: f64,
    n: usize,
}

/// Reads `label,mean,std,n` rows (header required).
pub fn parse_summaries(text: &str, file: &Path) -> Result<Vec<GroupSummary>, IoError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.deserialize::<SummaryRow>() {
        let row = rec.map_err(|e| IoError::Decode {
            file: file.to_path_buf(),
            line: e.position().map(|p| p.line() as usize),
            reason: e.to_string(),
        })?;
        let g = GroupSummary::new(row.label, row.mean, row.std, row.n);
        g.validate().map_err(|e| IoError::Decode {
            file: file.to_path_buf(),
            line: None,
            reason: e.to_string(),
        })?;
        out.push(g);
    }
    if out.is_empty() {
        return Err(IoError::Decode {
            file: file.to_path_buf(),
            line: None,
            reason: "no summary rows".into(),
        });
    }
    Ok(out)
}

pub fn read_summaries(path: &Path) -> Result<Vec<GroupSummary>, IoError> {
    let text = fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    parse_summaries(&text, path)
}

/// Rank table as aligned text in input order.
pub fn rank_table_text(table: &RankTable) -> String {
    let mut rows = vec![vec![
        "tracker".to_string(),
        "mean".into(),
        "std".into(),
        "n".into(),
        "rank".into(),
        "differs_from_best".into(),
    ]];
    for e in &table.entries {
        rows.push(vec![
            e.summary.label.clone(),
            format!("{}", e.summary.mean),
            format!("{}", e.summary.std),
            e.summary.n.to_string(),
            e.rank.to_string(),
            e.differs_from_best.to_string(),
        ]);
    }
    let dir = match table.direction {
        Direction::LowerBetter => "lower is better",
        Direction::HigherBetter => "higher is better",
    };
    format!("direction: {dir}\n{}", aligned(&rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{assign_ranks, pairwise_significant};

    #[test]
    fn summaries_parse_with_spaces_and_comments() {
        let text = "label, mean, std, n\n# Deer\nRR, 6.56, 0.75, 10\nL1_APG,35.99,36.68,10\n";
        let g = parse_summaries(text, Path::new("s.csv")).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(g[1], GroupSummary::new("L1_APG", 35.99, 36.68, 10));
        assert!(parse_summaries("label,mean,std,n\nRR,x,1,10\n", Path::new("s.csv")).is_err());
        assert!(parse_summaries("label,mean,std,n\nRR,1,1,1\n", Path::new("s.csv")).is_err());
        assert!(parse_summaries("label,mean,std,n\n", Path::new("s.csv")).is_err());
    }

    #[test]
    fn rank_text_lists_every_group() {
        let g = vec![GroupSummary::new("a", 1.0, 0.1, 10), GroupSummary::new("b", 5.0, 0.1, 10)];
        let t = assign_ranks(&g, &pairwise_significant(&g, 0.05).unwrap(), Direction::LowerBetter).unwrap();
        let text = rank_table_text(&t);
        assert!(text.starts_with("direction: lower is better\n"));
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(3).unwrap().contains("  2  "));
    }
}
