//! Browser bindings. The pure-Rust types below hold all logic so they are
//! testable natively; the `#[wasm_bindgen]` wrappers only convert errors.

use nalgebra::DMatrix;
use wasm_bindgen::prelude::*;

use trackbench::eval::{cle, overlap};
use trackbench::solvers::{spectrum::total_variance, Dictionary};
use trackbench::synth::{colinear_scene, generate, preset, Preset};
use trackbench::trackers::{create_tracker, run_sequence, FrameResult, Tracker, TrackerConfig, TrackerKind};
use trackbench::{BoundingBox, Frame, RngStream};

/// A synthetic sequence tracked one frame at a time.
pub struct Session {
    frames: Vec<Frame>,
    gt: Vec<BoundingBox>,
    tracker: Tracker,
    last: FrameResult,
}

impl Session {
    pub fn new(preset_name: &str, kind: &str, lambda_ridge: f64, particles: usize, seed: u64) -> Result<Self, String> {
        let p: Preset = preset_name.parse().map_err(|e: trackbench::synth::SynthError| e.to_string())?;
        let kind: TrackerKind = kind.parse()?;
        let (frames, gt) = generate(&preset(p), seed).map_err(|e| e.to_string())?;
        let mut cfg = TrackerConfig::of_kind(kind);
        cfg.lambda_ridge = lambda_ridge;
        cfg.motion.particle_count = particles;
        cfg.validate()?;
        let tracker = create_tracker(cfg, &frames[0], gt[0], RngStream::new(seed)).map_err(|e| e.to_string())?;
        let last = tracker.initial_result(&frames[0]);
        Ok(Self {
            frames,
            gt,
            tracker,
            last,
        })
    }

    pub fn frame_index(&self) -> usize {
        self.last.frame_index
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn is_finished(&self) -> bool {
        self.frame_index() + 1 >= self.frames.len()
    }

    /// Advances one frame; `Ok(false)` once the sequence is exhausted.
    pub fn step(&mut self) -> Result<bool, String> {
        if self.is_finished() {
            return Ok(false);
        }
        let next = self.frame_index() + 1;
        self.last = self.tracker.step(&self.frames[next]).map_err(|e| e.to_string())?;
        Ok(true)
    }

    pub fn last(&self) -> &FrameResult {
        &self.last
    }

    pub fn ground_truth(&self) -> BoundingBox {
        self.gt[self.frame_index()]
    }

    pub fn frame(&self) -> &Frame {
        &self.frames[self.frame_index()]
    }

    pub fn cle(&self) -> f64 {
        cle(&self.last.bbox, &self.ground_truth())
    }

    pub fn overlap(&self) -> f64 {
        overlap(&self.last.bbox, &self.ground_truth())
    }
}

/// Grayscale frame as RGBA bytes for a canvas `ImageData`.
pub fn frame_rgba(frame: &Frame) -> Vec<u8> {
    frame
        .pixels()
        .iter()
        .flat_map(|&v| {
            let g = (v.clamp(0.0, 1.0) * 255.0).round() as u8;
            [g, g, g, 255]
        })
        .collect()
}

/// `[tv_ols, tv_ridge(λ₁), …]` for a random `d × n` dictionary whose columns
/// share a common direction; `spread` scales the independent part, so
/// small values make the columns nearly colinear. `tv_ols` is `+∞` when the
/// Gram matrix is numerically singular.
pub fn variance_curve(seed: u64, d: usize, n: usize, spread: f64, lambdas: &[f64]) -> Result<Vec<f64>, String> {
    if d < 2 || n < 1 {
        return Err(format!("need d >= 2 and n >= 1, got d {d}, n {n}"));
    }
    let mut rng = RngStream::new(seed);
    let common: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
    let m = DMatrix::from_fn(d, n, |i, _| common[i]) + DMatrix::from_fn(d, n, |_, _| spread * rng.standard_normal());
    let t = Dictionary::normalized(m).map_err(|e| e.to_string())?;
    let report = total_variance(&t, 1.0, 0.0);
    Ok(std::iter::once(report.tv_ols)
        .chain(lambdas.iter().map(|&l| report.tv_ridge_at(l)))
        .collect())
}

/// Largest coefficient magnitude per frame of an RR run on the colinear
/// ramp scene. With `lambda_ridge = 0` the magnitudes explode.
pub fn max_coefficient_trace(lambda_ridge: f64, frames: usize, particles: usize) -> Result<Vec<f64>, String> {
    let (f, gt) = generate(&colinear_scene(frames.max(2)), 0).map_err(|e| e.to_string())?;
    let mut cfg = TrackerConfig::of_kind(TrackerKind::Rr);
    cfg.lambda_ridge = lambda_ridge;
    cfg.motion.particle_count = particles;
    cfg.validate()?;
    let out = match run_sequence(&cfg, &f, gt[0], 0, 0) {
        Ok(r) => r,
        Err(aborted) => aborted.completed,
    };
    Ok(out.iter().map(|r| r.coefficients.max_abs()).collect())
}

fn js(e: String) -> JsError {
    JsError::new(&e)
}

#[wasm_bindgen]
pub struct TrackingDemo {
    inner: Session,
}

#[wasm_bindgen]
impl TrackingDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(preset: &str, kind: &str, lambda_ridge: f64, particles: usize, seed: u64) -> Result<TrackingDemo, JsError> {
        Session::new(preset, kind, lambda_ridge, particles, seed)
            .map(|inner| TrackingDemo { inner })
            .map_err(js)
    }

    pub fn step(&mut self) -> Result<bool, JsError> {
        self.inner.step().map_err(js)
    }

    pub fn width(&self) -> usize {
        self.inner.frame().width()
    }

    pub fn height(&self) -> usize {
        self.inner.frame().height()
    }

    #[wasm_bindgen(js_name = frameIndex)]
    pub fn frame_index(&self) -> usize {
        self.inner.frame_index()
    }

    #[wasm_bindgen(js_name = frameCount)]
    pub fn frame_count(&self) -> usize {
        self.inner.frame_count()
    }

    /// Current frame as RGBA bytes.
    pub fn rgba(&self) -> Vec<u8> {
        frame_rgba(self.inner.frame())
    }

    /// `[x, y, w, h]` of the current estimate.
    pub fn estimate(&self) -> Vec<f64> {
        let b = self.inner.last().bbox;
        vec![b.x, b.y, b.w, b.h]
    }

    #[wasm_bindgen(js_name = groundTruth)]
    pub fn ground_truth(&self) -> Vec<f64> {
        let b = self.inner.ground_truth();
        vec![b.x, b.y, b.w, b.h]
    }

    pub fn cle(&self) -> f64 {
        self.inner.cle()
    }

    pub fn overlap(&self) -> f64 {
        self.inner.overlap()
    }

    /// Target-template coefficients of the current estimate.
    pub fn coefficients(&self) -> Vec<f64> {
        self.inner.last().coefficients.alpha.iter().copied().collect()
    }

    #[wasm_bindgen(js_name = solveMs)]
    pub fn solve_ms(&self) -> f64 {
        self.inner.last().solve_time.as_secs_f64() * 1e3
    }
}

#[wasm_bindgen(js_name = totalVarianceCurve)]
pub fn total_variance_curve(seed: u64, d: usize, n: usize, spread: f64, lambdas: Vec<f64>) -> Result<Vec<f64>, JsError> {
    variance_curve(seed, d, n, spread, &lambdas).map_err(js)
}

#[wasm_bindgen(js_name = coefficientTrace)]
pub fn coefficient_trace(lambda_ridge: f64, frames: usize, particles: usize) -> Result<Vec<f64>, JsError> {
    max_coefficient_trace(lambda_ridge, frames, particles).map_err(js)
}
