//! Sequence ingestion, configuration and result files.

mod config;
mod pgm;
mod report;
mod sequence;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{sequence_name, BenchConfig, SYNTH_PREFIX};
pub use pgm::{decode_pgm, encode_pgm, read_pgm, write_pgm};
pub use report::{
    aggregate_csv, coeffs_csv, parse_summaries, rank_cle_csv, rank_table_text, rank_tsr_csv, read_summaries,
    results_csv, runs_csv, speed_csv, summary_text, write_bench_report, write_track_results, AGGREGATE_FILE,
    COEFFS_FILE, RANK_CLE_FILE, RANK_TSR_FILE, RESULTS_FILE, RUNS_FILE, SPEED_FILE, SUMMARY_FILE,
};
pub use sequence::{
    format_ground_truth, frame_file_name, load_sequence, parse_ground_truth, write_sequence, GROUND_TRUTH_FILE,
    IMAGE_DIR,
};

fn line_suffix(line: &Option<usize>) -> String {
    line.map(|l| format!(":{l}")).unwrap_or_default()
}

#[derive(Debug, Error)]
pub enum IoError {
    #[error("missing frames at {}: {reason}", path.display())]
    MissingFrames { path: PathBuf, reason: String },
    #[error("{}: {lines} ground-truth lines for {frames} frames", file.display())]
    GroundTruthMismatch { file: PathBuf, frames: usize, lines: usize },
    #[error("{}{}: {reason}", file.display(), line_suffix(line))]
    Decode {
        file: PathBuf,
        line: Option<usize>,
        reason: String,
    },
    #[error("{}: {reason}", file.display())]
    Config { file: PathBuf, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IoError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
