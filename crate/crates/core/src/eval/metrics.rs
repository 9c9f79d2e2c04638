use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::imagery::BoundingBox;
use crate::trackers::FrameResult;

/// Overlap a frame needs to count as a success.
pub const DEFAULT_SUCCESS_THRESHOLD: f64 = 0.5;

/// Distance between box centers, pixels.
pub fn cle(pred: &BoundingBox, gt: &BoundingBox) -> f64 {
    let (a, b) = (pred.center(), gt.center());
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// Intersection over union.
pub fn overlap(pred: &BoundingBox, gt: &BoundingBox) -> f64 {
    let iw = (pred.x + pred.w).min(gt.x + gt.w) - pred.x.max(gt.x);
    let ih = (pred.y + pred.h).min(gt.y + gt.h) - pred.y.max(gt.y);
    if iw <= 0.0 || ih <= 0.0 {
        return 0.0;
    }
    let inter = iw * ih;
    let union = pred.area() + gt.area() - inter;
    if union > 0.0 {
        (inter / union).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub mean_cle: f64,
    pub tsr: f64,
    pub frames: usize,
    /// Frames per second over the recorded step times.
    pub fps: f64,
    /// Mean coefficient-solve time per tracked frame (the first frame is
    /// the given initialization and is excluded), seconds.
    pub mean_solve_time: f64,
}

pub fn run_metrics(results: &[FrameResult], gt: &[BoundingBox], success_threshold: f64) -> Result<RunMetrics, EvalError> {
    if results.len() != gt.len() || results.is_empty() {
        return Err(EvalError::LengthMismatch {
            results: results.len(),
            ground_truth: gt.len(),
        });
    }
    let n = results.len() as f64;
    let mean_cle = results.iter().zip(gt).map(|(r, g)| cle(&r.bbox, g)).sum::<f64>() / n;
    let hits = results
        .iter()
        .zip(gt)
        .filter(|(r, g)| overlap(&r.bbox, g) >= success_threshold)
        .count();
    let total: f64 = results.iter().map(|r| r.step_time.as_secs_f64()).sum();
    let fps = if total > 0.0 { n / total } else { f64::INFINITY };
    let tracked = if results.len() > 1 { &results[1..] } else { results };
    let mean_solve_time = tracked.iter().map(|r| r.solve_time.as_secs_f64()).sum::<f64>() / tracked.len() as f64;
    Ok(RunMetrics {
        mean_cle,
        tsr: hits as f64 / n,
        frames: results.len(),
        fps,
        mean_solve_time,
    })
}
