use std::collections::HashSet;

use serde::Serialize;

use super::anova::{anova_from_summary, AnovaResult, GroupSummary};
use super::metrics::{run_metrics, RunMetrics, DEFAULT_SUCCESS_THRESHOLD};
use super::ranking::{assign_ranks, Direction, RankTable};
use super::tukey::pairwise_significant;
use super::EvalError;
use crate::imagery::{BoundingBox, Frame};
use crate::trackers::{run_sequence, TrackerConfig};

/// Environment variable capping benchmark worker threads (`0` = automatic).
pub const THREADS_ENV: &str = "TRACKBENCH_THREADS";

/// Thread cap from [`THREADS_ENV`]; `None` when unset, empty, `0` or unparsable.
pub fn threads_from_env() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

#[derive(Debug, Clone)]
pub struct SequenceInput {
    pub name: String,
    pub frames: Vec<Frame>,
    pub ground_truth: Vec<BoundingBox>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    pub seed: u64,
    pub runs: usize,
    pub success_threshold: f64,
    pub alpha: f64,
    /// Worker cap; `None` uses every core.
    pub threads: Option<usize>,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            runs: 10,
            success_threshold: DEFAULT_SUCCESS_THRESHOLD,
            alpha: 0.05,
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub tracker: String,
    pub sequence: String,
    pub run: usize,
    pub outcome: Result<RunMetrics, String>,
}

/// Summaries of one (tracker, sequence) cell over its successful runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub tracker: String,
    pub succeeded: usize,
    pub cle: Option<GroupSummary>,
    pub tsr: Option<GroupSummary>,
    pub mean_fps: Option<f64>,
    pub mean_solve_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceReport {
    pub sequence: String,
    /// One per tracker, in configuration order.
    pub cells: Vec<CellSummary>,
    /// Ranks among the cells that have summaries.
    pub cle: RankTable,
    pub tsr: RankTable,
    pub cle_anova: Option<AnovaResult>,
    pub tsr_anova: Option<AnovaResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AggregateRow {
    pub tracker: String,
    /// Averages over the sequences where the tracker has a summary.
    pub avg_cle: f64,
    pub avg_cle_rank: f64,
    pub avg_tsr: f64,
    pub avg_tsr_rank: f64,
    pub avg_fps: f64,
    pub sequences: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchmarkReport {
    /// Ordered by (tracker, sequence, run).
    pub runs: Vec<RunRecord>,
    pub sequences: Vec<SequenceReport>,
    pub aggregate: Vec<AggregateRow>,
    pub warnings: Vec<String>,
}

fn run_cell(cfg: &TrackerConfig, seq: &SequenceInput, run: usize, opts: &BenchmarkOptions) -> RunRecord {
    let outcome = match run_sequence(cfg, &seq.frames, seq.ground_truth[0], opts.seed, run as u64) {
        Ok(results) => run_metrics(&results, &seq.ground_truth, opts.success_threshold).map_err(|e| e.to_string()),
        Err(aborted) => Err(aborted.to_string()),
    };
    RunRecord {
        tracker: cfg.label().to_string(),
        sequence: seq.name.clone(),
        run,
        outcome,
    }
}

#[cfg(feature = "parallel")]
fn execute(jobs: &[(usize, usize, usize)], trackers: &[TrackerConfig], sequences: &[SequenceInput], opts: &BenchmarkOptions) -> Result<Vec<RunRecord>, EvalError> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads.unwrap_or(0))
        .build()
        .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
    // Indexed collection keeps the output order independent of scheduling.
    Ok(pool.install(|| {
        jobs.par_iter()
            .map(|&(t, s, r)| run_cell(&trackers[t], &sequences[s], r, opts))
            .collect()
    }))
}

#[cfg(not(feature = "parallel"))]
fn execute(jobs: &[(usize, usize, usize)], trackers: &[TrackerConfig], sequences: &[SequenceInput], opts: &BenchmarkOptions) -> Result<Vec<RunRecord>, EvalError> {
    Ok(jobs
        .iter()
        .map(|&(t, s, r)| run_cell(&trackers[t], &sequences[s], r, opts))
        .collect())
}

fn rank_cells(summaries: &[GroupSummary], direction: Direction, alpha: f64) -> Result<(RankTable, Option<AnovaResult>), EvalError> {
    if summaries.is_empty() {
        return Ok((
            RankTable {
                direction,
                entries: Vec::new(),
            },
            None,
        ));
    }
    let sig = pairwise_significant(summaries, alpha)?;
    let anova = if summaries.len() >= 2 {
        Some(anova_from_summary(summaries)?)
    } else {
        None
    };
    Ok((assign_ranks(summaries, &sig, direction)?, anova))
}

/// Runs every (tracker, sequence, run) cell, summarizes each cell over its
/// successful runs and ranks trackers per sequence by CLE and TSR.
pub fn benchmark(trackers: &[TrackerConfig], sequences: &[SequenceInput], opts: &BenchmarkOptions) -> Result<BenchmarkReport, EvalError> {
    if opts.runs < 2 {
        return Err(EvalError::TooFewRuns(opts.runs));
    }
    if trackers.is_empty() || sequences.is_empty() {
        return Err(EvalError::EmptyBenchmark);
    }
    let mut seen = HashSet::new();
    for t in trackers {
        if !seen.insert(t.label().to_string()) {
            return Err(EvalError::DuplicateLabel(t.label().to_string()));
        }
    }
    for s in sequences {
        if s.frames.len() != s.ground_truth.len() || s.frames.is_empty() {
            return Err(EvalError::SequenceMismatch {
                name: s.name.clone(),
                frames: s.frames.len(),
                ground_truth: s.ground_truth.len(),
            });
        }
    }

    let mut jobs = Vec::with_capacity(trackers.len() * sequences.len() * opts.runs);
    for t in 0..trackers.len() {
        for s in 0..sequences.len() {
            for r in 0..opts.runs {
                jobs.push((t, s, r));
            }
        }
    }
    let runs = execute(&jobs, trackers, sequences, opts)?;

    let mut warnings = Vec::new();
    let mut reports = Vec::with_capacity(sequences.len());
    for (si, seq) in sequences.iter().enumerate() {
        let mut cells = Vec::with_capacity(trackers.len());
        for (ti, cfg) in trackers.iter().enumerate() {
            let label = cfg.label().to_string();
            let base = (ti * sequences.len() + si) * opts.runs;
            let ok: Vec<&RunMetrics> = runs[base..base + opts.runs]
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            for r in &runs[base..base + opts.runs] {
                if let Err(e) = &r.outcome {
                    warnings.push(format!("{label} on {}: run {} failed: {e}", seq.name, r.run));
                }
            }
            if ok.len() * 2 < opts.runs {
                warnings.push(format!(
                    "{label} on {}: only {}/{} runs succeeded",
                    seq.name,
                    ok.len(),
                    opts.runs
                ));
            }
            let summarize = |f: fn(&RunMetrics) -> f64| {
                let v: Vec<f64> = ok.iter().map(|m| f(m)).collect();
                GroupSummary::from_samples(label.clone(), &v).ok()
            };
            let mean_of = |f: fn(&RunMetrics) -> f64| (!ok.is_empty()).then(|| ok.iter().map(|m| f(m)).sum::<f64>() / ok.len() as f64);
            let cell = CellSummary {
                tracker: label.clone(),
                succeeded: ok.len(),
                cle: summarize(|m| m.mean_cle),
                tsr: summarize(|m| m.tsr),
                mean_fps: mean_of(|m| m.fps),
                mean_solve_time: mean_of(|m| m.mean_solve_time),
            };
            if cell.cle.is_none() {
                warnings.push(format!("{label} on {}: excluded from ranking (fewer than 2 successful runs)", seq.name));
            }
            cells.push(cell);
        }
        let cle: Vec<GroupSummary> = cells.iter().filter_map(|c| c.cle.clone()).collect();
        let tsr: Vec<GroupSummary> = cells.iter().filter_map(|c| c.tsr.clone()).collect();
        let (cle_table, cle_anova) = rank_cells(&cle, Direction::LowerBetter, opts.alpha)?;
        let (tsr_table, tsr_anova) = rank_cells(&tsr, Direction::HigherBetter, opts.alpha)?;
        reports.push(SequenceReport {
            sequence: seq.name.clone(),
            cells,
            cle: cle_table,
            tsr: tsr_table,
            cle_anova,
            tsr_anova,
        });
    }

    let aggregate = trackers
        .iter()
        .map(|cfg| {
            let label = cfg.label();
            let mut acc = [0.0; 5];
            let mut count = 0;
            let mut fps_count = 0;
            for rep in &reports {
                let cle = rep.cle.entries.iter().find(|e| e.summary.label == label);
                let tsr = rep.tsr.entries.iter().find(|e| e.summary.label == label);
                if let (Some(c), Some(t)) = (cle, tsr) {
                    acc[0] += c.summary.mean;
                    acc[1] += c.rank as f64;
                    acc[2] += t.summary.mean;
                    acc[3] += t.rank as f64;
                    count += 1;
                }
                if let Some(fps) = rep.cells.iter().find(|c| c.tracker == label).and_then(|c| c.mean_fps) {
                    acc[4] += fps;
                    fps_count += 1;
                }
            }
            let avg = |x: f64, n: usize| if n > 0 { x / n as f64 } else { f64::NAN };
            AggregateRow {
                tracker: label.to_string(),
                avg_cle: avg(acc[0], count),
                avg_cle_rank: avg(acc[1], count),
                avg_tsr: avg(acc[2], count),
                avg_tsr_rank: avg(acc[3], count),
                avg_fps: avg(acc[4], fps_count),
                sequences: count,
            }
        })
        .collect();

    Ok(BenchmarkReport {
        runs,
        sequences: reports,
        aggregate,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate, preset, Preset};
    use crate::trackers::TrackerKind;

    fn tiny_sequence(frames: usize) -> SequenceInput {
        let mut spec = preset(Preset::Translation);
        spec.frame_count = frames;
        let (f, g) = generate(&spec, 0).unwrap();
        SequenceInput {
            name: "tiny".into(),
            frames: f,
            ground_truth: g,
        }
    }

    fn rr(label: &str) -> TrackerConfig {
        let mut c = TrackerConfig::of_kind(TrackerKind::Rr);
        c.label = label.to_string();
        c.motion.particle_count = 40;
        c
    }

    fn opts(runs: usize) -> BenchmarkOptions {
        BenchmarkOptions {
            runs,
            threads: Some(2),
            ..BenchmarkOptions::default()
        }
    }

    #[test]
    fn single_tracker_ranks_first() {
        let rep = benchmark(&[rr("a")], &[tiny_sequence(4)], &opts(2)).unwrap();
        assert_eq!(rep.sequences[0].cle.ranks(), vec![1]);
        assert_eq!(rep.sequences[0].tsr.ranks(), vec![1]);
        assert_eq!(rep.runs.len(), 2);
        assert_eq!(rep.aggregate[0].avg_cle_rank, 1.0);
    }

    #[test]
    fn duplicated_config_matches_exactly() {
        let rep = benchmark(&[rr("a"), rr("b")], &[tiny_sequence(5)], &opts(3)).unwrap();
        let s = &rep.sequences[0];
        assert_eq!(s.cells[0].cle.as_ref().unwrap().mean, s.cells[1].cle.as_ref().unwrap().mean);
        assert_eq!(s.cle.ranks(), vec![1, 1]);
        assert_eq!(s.tsr.ranks(), vec![1, 1]);
    }

    #[test]
    fn aggregate_rank_is_mean_of_sequence_ranks() {
        let mut second = tiny_sequence(4);
        second.name = "tiny2".into();
        let rep = benchmark(&[rr("a"), rr("b")], &[tiny_sequence(4), second], &opts(2)).unwrap();
        for (i, row) in rep.aggregate.iter().enumerate() {
            let mean = rep.sequences.iter().map(|s| s.cle.entries[i].rank as f64).sum::<f64>() / 2.0;
            assert_eq!(row.avg_cle_rank, mean);
        }
    }

    #[test]
    fn failed_runs_are_excluded_with_warning() {
        let mut seq = tiny_sequence(4);
        seq.frames[2] = Frame::filled(8, 8, 0.5).unwrap();
        let rep = benchmark(&[rr("a")], &[seq], &opts(2)).unwrap();
        assert!(rep.runs.iter().all(|r| r.outcome.is_err()));
        assert!(rep.sequences[0].cle.entries.is_empty());
        assert!(rep.warnings.iter().any(|w| w.contains("0/2")));
    }

    #[test]
    fn argument_errors() {
        assert_eq!(benchmark(&[rr("a")], &[tiny_sequence(2)], &opts(1)).unwrap_err(), EvalError::TooFewRuns(1));
        assert!(matches!(
            benchmark(&[rr("a"), rr("a")], &[tiny_sequence(2)], &opts(2)),
            Err(EvalError::DuplicateLabel(_))
        ));
        let mut bad = tiny_sequence(3);
        bad.ground_truth.pop();
        assert!(matches!(benchmark(&[rr("a")], &[bad], &opts(2)), Err(EvalError::SequenceMismatch { .. })));
    }
}
