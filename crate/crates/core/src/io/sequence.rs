//! Sequence directories: `img/0001.pgm, img/0002.pgm, …` plus
//! `groundtruth_rect.txt` with one `x,y,w,h` line per frame in 1-based
//! pixel coordinates.

use std::fs;
use std::path::{Path, PathBuf};

use super::pgm::{read_pgm, write_pgm};
use super::IoError;
use crate::imagery::{BoundingBox, Frame};

pub const IMAGE_DIR: &str = "img";
pub const GROUND_TRUTH_FILE: &str = "groundtruth_rect.txt";

pub fn frame_file_name(index: usize) -> String {
    format!("{:04}.pgm", index + 1)
}

/// Parses ground-truth text, converting to 0-based coordinates. Fields may
/// be separated by commas, tabs or spaces; blank lines are skipped.
pub fn parse_ground_truth(text: &str, file: &Path) -> Result<Vec<BoundingBox>, IoError> {
    let mut boxes = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: String| IoError::Decode {
            file: file.to_path_buf(),
            line: Some(i + 1),
            reason,
        };
        let fields: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .collect();
        if fields.len() != 4 {
            return Err(bad(format!("expected 4 fields, found {} in '{line}'", fields.len())));
        }
        let mut v = [0.0; 4];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f.parse::<f64>().map_err(|_| bad(format!("invalid number '{f}'")))?;
        }
        let b = BoundingBox::new(v[0] - 1.0, v[1] - 1.0, v[2], v[3]);
        if !b.is_valid() {
            return Err(bad(format!("box '{line}' must have finite coordinates and positive extent")));
        }
        boxes.push(b);
    }
    Ok(boxes)
}

/// One `x,y,w,h` line per box in 1-based coordinates.
pub fn format_ground_truth(boxes: &[BoundingBox]) -> String {
    boxes
        .iter()
        .map(|b| format!("{},{},{},{}\n", b.x + 1.0, b.y + 1.0, b.w, b.h))
        .collect()
}

/// Frame files found in `img_dir`, as `(1-based number, path)` sorted by number.
fn frame_files(img_dir: &Path) -> Result<Vec<(usize, PathBuf)>, IoError> {
    let entries = fs::read_dir(img_dir).map_err(|e| IoError::MissingFrames {
        path: img_dir.to_path_buf(),
        reason: format!("cannot read image directory: {e}"),
    })?;
    let mut found = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| IoError::io(img_dir, e))?.path();
        let (Some(stem), Some(ext)) = (path.file_stem().and_then(|s| s.to_str()), path.extension().and_then(|s| s.to_str())) else {
            continue;
        };
        if !ext.eq_ignore_ascii_case("pgm") || stem.len() < 4 || !stem.bytes().all(|b| b.is_ascii_digit()) {
            continue;
        }
        if let Ok(n) = stem.parse::<usize>() {
            found.push((n, path));
        }
    }
    found.sort();
    Ok(found)
}

pub fn load_sequence(dir: &Path) -> Result<(Vec<Frame>, Vec<BoundingBox>), IoError> {
    let img_dir = dir.join(IMAGE_DIR);
    let files = frame_files(&img_dir)?;
    if files.is_empty() {
        return Err(IoError::MissingFrames {
            path: img_dir.join(frame_file_name(0)),
            reason: "no frames found".into(),
        });
    }
    for (expected, (n, _)) in (1..).zip(&files) {
        if *n != expected {
            return Err(IoError::MissingFrames {
                path: img_dir.join(frame_file_name(expected - 1)),
                reason: format!("frame numbering must be contiguous from 0001; next file is {n:04}"),
            });
        }
    }
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    let text = fs::read_to_string(&gt_path).map_err(|e| IoError::io(&gt_path, e))?;
    let boxes = parse_ground_truth(&text, &gt_path)?;
    if boxes.len() != files.len() {
        return Err(IoError::GroundTruthMismatch {
            file: gt_path,
            frames: files.len(),
            lines: boxes.len(),
        });
    }
    let mut frames = Vec::with_capacity(files.len());
    for (_, path) in &files {
        let f = read_pgm(path)?;
        if let Some(first) = frames.first() {
            let first: &Frame = first;
            if (f.width(), f.height()) != (first.width(), first.height()) {
                return Err(IoError::Decode {
                    file: path.clone(),
                    line: None,
                    reason: format!(
                        "frame is {}x{}, expected {}x{}",
                        f.width(),
                        f.height(),
                        first.width(),
                        first.height()
                    ),
                });
            }
        }
        frames.push(f);
    }
    Ok((frames, boxes))
}

pub fn write_sequence(dir: &Path, frames: &[Frame], boxes: &[BoundingBox]) -> Result<(), IoError> {
    if frames.len() != boxes.len() {
        return Err(IoError::GroundTruthMismatch {
            file: dir.join(GROUND_TRUTH_FILE),
            frames: frames.len(),
            lines: boxes.len(),
        });
    }
    let img_dir = dir.join(IMAGE_DIR);
    fs::create_dir_all(&img_dir).map_err(|e| IoError::io(&img_dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        write_pgm(&img_dir.join(frame_file_name(i)), f)?;
    }
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    fs::write(&gt_path, format_ground_truth(boxes)).map_err(|e| IoError::io(&gt_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_based_to_zero_based() {
        let b = parse_ground_truth("10,20,30,40\n", Path::new("gt")).unwrap();
        assert_eq!(b, vec![BoundingBox::new(9.0, 19.0, 30.0, 40.0)]);
        let b = parse_ground_truth("10\t20\t30\t40\n\n1 2 3 4\n", Path::new("gt")).unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(b[1], BoundingBox::new(0.0, 1.0, 3.0, 4.0));
        assert_eq!(format_ground_truth(&b[..1]), "10,20,30,40\n");
    }

    #[test]
    fn bad_lines_are_located() {
        let err = parse_ground_truth("1,2,3,4\n1,2,3\n", Path::new("gt.txt")).unwrap_err();
        assert!(matches!(err, IoError::Decode { line: Some(2), .. }));
        let err = parse_ground_truth("1,2,0,4\n", Path::new("gt.txt")).unwrap_err();
        assert!(matches!(err, IoError::Decode { line: Some(1), .. }));
        assert!(err.to_string().contains("gt.txt"));
    }
}
