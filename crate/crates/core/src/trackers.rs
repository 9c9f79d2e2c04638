//! The four trackers behind one particle-filter loop.
//!
//! All kinds share propagation, weighting, resampling and the template
//! update; they differ only in how each candidate patch is coded against the
//! dictionary:
//!
//! | kind          | dictionary | coefficient solve                         |
//! |---------------|------------|-------------------------------------------|
//! | `RR`          | `T`        | closed-form ridge                         |
//! | `L1_ORIGINAL` | `[T, I]`   | APG, uniform λ                            |
//! | `L1_APG`      | `[T, I]`   | APG, λ on targets and a heavier λ on `e`  |
//! | `L1_WMB`      | `[T, I]`   | APG, skipping candidates by an OLS bound  |
//!
//! Candidates are always ranked by the target-subspace error `‖y − Tα‖²`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use web_time::{Duration, Instant};

/// Clock accepted by [`Tracker::commit`]; works on native and wasm targets.
pub use web_time::Instant as StepClock;

use crate::appearance::{init_dictionary, prepare_patch, AppearanceError, TemplateDictionary, UpdateConfig};
use crate::filter::{map_index, propagate, resample, weigh, MotionConfig, ParticleSet};
use crate::imagery::{extract_patch, state_to_box, AffineState, BoundingBox, Frame};
use crate::rng::RngStream;
use crate::solvers::{
    target_residual, ApgOptions, ApgSolver, AugmentedDictionary, CoefficientVector, LeastSquaresBound, Penalty,
    RidgeSolver, SolverError,
};

/// Coefficient magnitude above which a solve is flagged unstable.
pub const INSTABILITY_THRESHOLD: f64 = 1e6;

const STREAM_PROPAGATE: u64 = 0;
const STREAM_RESAMPLE: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrackerKind {
    #[serde(rename = "RR")]
    Rr,
    #[serde(rename = "L1_ORIGINAL")]
    L1Original,
    #[serde(rename = "L1_WMB")]
    L1Wmb,
    #[serde(rename = "L1_APG")]
    L1Apg,
}

impl TrackerKind {
    pub const ALL: [TrackerKind; 4] = [TrackerKind::Rr, TrackerKind::L1Apg, TrackerKind::L1Wmb, TrackerKind::L1Original];

    pub fn as_str(&self) -> &'static str {
        match self {
            TrackerKind::Rr => "RR",
            TrackerKind::L1Original => "L1_ORIGINAL",
            TrackerKind::L1Wmb => "L1_WMB",
            TrackerKind::L1Apg => "L1_APG",
        }
    }

    pub fn uses_occlusion_templates(&self) -> bool {
        !matches!(self, TrackerKind::Rr)
    }
}

impl fmt::Display for TrackerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TrackerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.to_ascii_uppercase().replace('-', "_");
        match key.as_str() {
            "RR" => Ok(TrackerKind::Rr),
            "L1_ORIGINAL" => Ok(TrackerKind::L1Original),
            "L1_WMB" => Ok(TrackerKind::L1Wmb),
            "L1_APG" => Ok(TrackerKind::L1Apg),
            _ => Err(format!("unknown tracker kind '{s}'")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// Display name; defaults to the kind.
    pub label: String,
    pub kind: TrackerKind,
    pub lambda_ridge: f64,
    pub lambda_l1: f64,
    pub occlusion_lambda_scale: f64,
    pub wmb_margin: f64,
    pub motion: MotionConfig,
    pub update: UpdateConfig,
    pub template_count: usize,
    pub tw: usize,
    pub th: usize,
    /// Translation step between the initial templates, pixels.
    pub jitter: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            label: String::new(),
            kind: TrackerKind::Rr,
            lambda_ridge: 1.0,
            lambda_l1: 0.01,
            occlusion_lambda_scale: 10.0,
            wmb_margin: 0.0,
            motion: MotionConfig::default(),
            update: UpdateConfig::default(),
            template_count: 10,
            tw: 12,
            th: 15,
            jitter: 1.0,
        }
    }
}

impl TrackerConfig {
    pub fn of_kind(kind: TrackerKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn label(&self) -> &str {
        if self.label.is_empty() {
            self.kind.as_str()
        } else {
            &self.label
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(format!("{name} must be positive and finite, got {v}"))
            }
        };
        match self.kind {
            TrackerKind::Rr => {
                if !(self.lambda_ridge >= 0.0 && self.lambda_ridge.is_finite()) {
                    return Err(format!("lambda_ridge must be >= 0, got {}", self.lambda_ridge));
                }
            }
            TrackerKind::L1Apg => {
                positive("lambda_l1", self.lambda_l1)?;
                positive("occlusion_lambda_scale", self.occlusion_lambda_scale)?;
            }
            TrackerKind::L1Wmb => {
                positive("lambda_l1", self.lambda_l1)?;
                if !(self.wmb_margin >= 0.0 && self.wmb_margin.is_finite()) {
                    return Err(format!("wmb_margin must be >= 0, got {}", self.wmb_margin));
                }
            }
            TrackerKind::L1Original => positive("lambda_l1", self.lambda_l1)?,
        }
        if self.template_count == 0 {
            return Err("template_count must be at least 1".into());
        }
        if self.tw < 2 || self.th < 2 {
            return Err(format!("template size {}x{} is below 2x2", self.tw, self.th));
        }
        if !(self.jitter >= 0.0 && self.jitter.is_finite()) {
            return Err(format!("jitter must be >= 0, got {}", self.jitter));
        }
        self.motion.validate()?;
        self.update.validate()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TrackerError {
    #[error("invalid tracker config: {0}")]
    Config(String),
    #[error(transparent)]
    Appearance(#[from] AppearanceError),
    #[error("frame {index} is {got_w}x{got_h}, sequence is {want_w}x{want_h}")]
    FrameSize {
        index: usize,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("every candidate failed at frame {frame}: {reason}")]
    AllCandidatesFailed { frame: usize, reason: String },
    #[error("empty sequence")]
    EmptySequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_index: usize,
    pub bbox: BoundingBox,
    pub state: AffineState,
    /// `‖y − Tα‖²` of the selected candidate.
    pub residual: f64,
    pub coefficients: CoefficientVector,
    pub solve_time: Duration,
    /// Wall time of the whole step.
    pub step_time: Duration,
    pub performed_solves: usize,
    pub skipped_solves: usize,
    pub failed_candidates: usize,
    pub weight_underflow: bool,
    pub template_replaced: Option<usize>,
}

impl FrameResult {
    pub fn is_unstable(&self) -> bool {
        !self.coefficients.is_finite() || self.coefficients.max_abs() > INSTABILITY_THRESHOLD
    }

    /// Equality ignoring the timing fields.
    pub fn same_outcome(&self, other: &FrameResult) -> bool {
        self.frame_index == other.frame_index
            && self.bbox == other.bbox
            && self.state == other.state
            && self.residual.to_bits() == other.residual.to_bits()
            && self.coefficients == other.coefficients
            && self.performed_solves == other.performed_solves
            && self.skipped_solves == other.skipped_solves
            && self.failed_candidates == other.failed_candidates
            && self.weight_underflow == other.weight_underflow
            && self.template_replaced == other.template_replaced
    }
}

/// Propagated particles of one frame and their prepared observation vectors.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub frame_index: usize,
    pub particles: ParticleSet,
    /// `None` for candidates whose patch is constant.
    pub patches: Vec<Option<DVector<f64>>>,
    /// Resampling stream reserved for this frame.
    resample_rng: RngStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoringMode {
    /// The tracker's own solve (including WMB pruning).
    Native,
    /// Solve every candidate; WMB then behaves like `L1_ORIGINAL`.
    Exhaustive,
}

#[derive(Debug, Clone)]
pub struct Scores {
    pub residuals: Vec<f64>,
    pub coefficients: Vec<Option<CoefficientVector>>,
    /// Least-squares lower bounds (WMB only).
    pub bounds: Option<Vec<f64>>,
    pub performed: usize,
    pub skipped: usize,
    pub failures: usize,
    pub first_error: Option<SolverError>,
    pub solve_time: Duration,
}

impl Scores {
    fn new(n: usize) -> Self {
        Self {
            residuals: vec![f64::INFINITY; n],
            coefficients: vec![None; n],
            bounds: None,
            performed: 0,
            skipped: 0,
            failures: 0,
            first_error: None,
            solve_time: Duration::ZERO,
        }
    }

    pub fn winner(&self) -> usize {
        map_index(&self.residuals)
    }

    fn record(&mut self, i: usize, t: &crate::solvers::Dictionary, y: &DVector<f64>, res: Result<CoefficientVector, SolverError>) {
        self.performed += 1;
        match res {
            Ok(c) if c.is_finite() => {
                self.residuals[i] = target_residual(t, y, &c.alpha);
                self.coefficients[i] = Some(c);
            }
            Ok(c) => {
                // Overflowed solve: keep the coefficients for diagnostics but never select it.
                self.failures += 1;
                self.coefficients[i] = Some(c);
            }
            Err(e) => {
                self.failures += 1;
                self.first_error.get_or_insert(e);
            }
        }
    }

    fn fail(&mut self, i: usize) {
        let _ = i;
        self.failures += 1;
    }
}

/// Builds the per-atom penalty of an ℓ1 kind over `[T, I]`.
fn l1_penalty(cfg: &TrackerConfig, n: usize, d: usize) -> Penalty {
    match cfg.kind {
        TrackerKind::L1Apg => {
            let mut w = vec![cfg.lambda_l1; n];
            w.extend(std::iter::repeat_n(cfg.lambda_l1 * cfg.occlusion_lambda_scale, d));
            Penalty::PerAtom(w)
        }
        _ => Penalty::Uniform(cfg.lambda_l1),
    }
}

#[derive(Debug, Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    dict: TemplateDictionary,
    particles: ParticleSet,
    rng: RngStream,
    init_state: AffineState,
    init_box: BoundingBox,
    frame_index: usize,
    width: usize,
    height: usize,
}

/// Initializes a tracker on the first frame. `rng` is the run's stream; each
/// later frame draws from keyed substreams of it.
pub fn create_tracker(
    cfg: TrackerConfig,
    first_frame: &Frame,
    init_box: BoundingBox,
    rng: RngStream,
) -> Result<Tracker, TrackerError> {
    cfg.validate().map_err(TrackerError::Config)?;
    let dict = init_dictionary(first_frame, &init_box, cfg.template_count, cfg.tw, cfg.th, cfg.jitter)?
        .with_augmented(cfg.kind.uses_occlusion_templates());
    let init_state = AffineState::from_box(&init_box, cfg.tw, cfg.th);
    let particles = ParticleSet::replicate(init_state, cfg.motion.particle_count);
    Ok(Tracker {
        cfg,
        dict,
        particles,
        rng,
        init_state,
        init_box,
        frame_index: 0,
        width: first_frame.width(),
        height: first_frame.height(),
    })
}

impl Tracker {
    pub fn config(&self) -> &TrackerConfig {
        &self.cfg
    }

    pub fn dictionary(&self) -> &TemplateDictionary {
        &self.dict
    }

    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }

    pub fn frame_index(&self) -> usize {
        self.frame_index
    }

    /// Result for the first frame: the initial box verbatim, with the
    /// coefficients of the initial patch for the trace.
    pub fn initial_result(&self, first_frame: &Frame) -> FrameResult {
        let start = Instant::now();
        let proposal = Proposal {
            frame_index: 0,
            particles: ParticleSet::replicate(self.init_state, 1),
            patches: vec![extract_patch(first_frame, &self.init_state, self.cfg.tw, self.cfg.th)
                .ok()
                .and_then(|raw| prepare_patch(&raw))],
            resample_rng: self.rng,
        };
        let scores = self.score(&proposal, ScoringMode::Exhaustive);
        let n = self.dict.len();
        let coefficients = scores.coefficients[0].clone().unwrap_or_else(|| CoefficientVector {
            alpha: DVector::zeros(n),
            e: DVector::zeros(if self.dict.augmented() { self.dict.dim() } else { 0 }),
        });
        FrameResult {
            frame_index: 0,
            bbox: self.init_box,
            state: self.init_state,
            residual: if scores.residuals[0].is_finite() { scores.residuals[0] } else { 0.0 },
            coefficients,
            solve_time: scores.solve_time,
            step_time: start.elapsed(),
            performed_solves: scores.performed,
            skipped_solves: 0,
            failed_candidates: scores.failures,
            weight_underflow: false,
            template_replaced: None,
        }
    }

    /// Propagates the particle set for the next frame and extracts every
    /// candidate patch. Does not modify the tracker.
    pub fn propose(&self, frame: &Frame) -> Result<Proposal, TrackerError> {
        let index = self.frame_index + 1;
        if frame.width() != self.width || frame.height() != self.height {
            return Err(TrackerError::FrameSize {
                index,
                got_w: frame.width(),
                got_h: frame.height(),
                want_w: self.width,
                want_h: self.height,
            });
        }
        let frame_rng = self.rng.substream(index as u64);
        let mut motion_rng = frame_rng.substream(STREAM_PROPAGATE);
        let particles = propagate(&self.particles, &self.cfg.motion, &mut motion_rng);
        let patches = particles
            .states()
            .iter()
            .map(|s| {
                extract_patch(frame, s, self.cfg.tw, self.cfg.th)
                    .ok()
                    .and_then(|raw| prepare_patch(&raw))
            })
            .collect();
        Ok(Proposal {
            frame_index: index,
            particles,
            patches,
            resample_rng: frame_rng.substream(STREAM_RESAMPLE),
        })
    }

    /// Codes every candidate of `proposal` against the current dictionary.
    pub fn score(&self, proposal: &Proposal, mode: ScoringMode) -> Scores {
        let start = Instant::now();
        let mut scores = Scores::new(proposal.patches.len());
        let t = self.dict.templates();
        match self.cfg.kind {
            TrackerKind::Rr => {
                let solver = if self.cfg.lambda_ridge == 0.0 {
                    RidgeSolver::unchecked_ols(t)
                } else {
                    RidgeSolver::new(t, self.cfg.lambda_ridge)
                };
                match solver {
                    Ok(solver) => {
                        for (i, y) in proposal.patches.iter().enumerate() {
                            match y {
                                Some(y) => {
                                    let c = solver.coefficients(y).map(CoefficientVector::target_only);
                                    scores.record(i, t, y, c);
                                }
                                None => scores.fail(i),
                            }
                        }
                    }
                    Err(e) => {
                        scores.failures = proposal.patches.len();
                        scores.first_error = Some(e);
                    }
                }
            }
            TrackerKind::L1Original | TrackerKind::L1Apg | TrackerKind::L1Wmb => {
                let op = AugmentedDictionary::new(t.clone());
                let solver = ApgSolver::new(&op, l1_penalty(&self.cfg, t.atoms(), t.dim()), ApgOptions::default())
                    .expect("validated penalty");
                let solve = |y: &DVector<f64>| solver.solve(y).map(|(c, _)| c);
                if self.cfg.kind == TrackerKind::L1Wmb && mode == ScoringMode::Native {
                    self.score_with_bound(proposal, t, &solve, &mut scores);
                } else {
                    for (i, y) in proposal.patches.iter().enumerate() {
                        match y {
                            Some(y) => scores.record(i, t, y, solve(y)),
                            None => scores.fail(i),
                        }
                    }
                }
            }
        }
        scores.solve_time = start.elapsed();
        scores
    }

    /// Minimum-bound pruning: candidates are solved in ascending order of
    /// their least-squares residual; once a bound exceeds the best residual
    /// found so far (times `1 + margin`) the candidate keeps its bound as its
    /// residual and is not solved.
    fn score_with_bound(
        &self,
        proposal: &Proposal,
        t: &crate::solvers::Dictionary,
        solve: &dyn Fn(&DVector<f64>) -> Result<CoefficientVector, SolverError>,
        scores: &mut Scores,
    ) {
        let lsq = LeastSquaresBound::new(t);
        let bounds: Vec<f64> = proposal
            .patches
            .iter()
            .map(|y| y.as_ref().and_then(|y| lsq.bound(y).ok()).unwrap_or(f64::INFINITY))
            .collect();
        let mut order: Vec<usize> = (0..bounds.len()).collect();
        order.sort_by(|&a, &b| bounds[a].total_cmp(&bounds[b]).then(a.cmp(&b)));
        let mut best = f64::INFINITY;
        for i in order {
            let Some(y) = proposal.patches[i].as_ref() else {
                scores.fail(i);
                continue;
            };
            if bounds[i] > best * (1.0 + self.cfg.wmb_margin) {
                scores.skipped += 1;
                scores.residuals[i] = bounds[i];
                continue;
            }
            scores.record(i, t, y, solve(y));
            best = best.min(scores.residuals[i]);
        }
        scores.bounds = Some(bounds);
    }

    /// Weighs, selects, resamples and updates the dictionary from scored
    /// candidates.
    pub fn commit(&mut self, proposal: Proposal, scores: Scores, step_start: Instant) -> Result<FrameResult, TrackerError> {
        let winner = scores.winner();
        let Some(coefficients) = scores.coefficients[winner].clone().filter(|_| scores.residuals[winner].is_finite()) else {
            let reason = scores
                .first_error
                .as_ref()
                .map_or_else(|| "no usable candidate patch".to_string(), |e| e.to_string());
            return Err(TrackerError::AllCandidatesFailed {
                frame: proposal.frame_index,
                reason,
            });
        };
        let weighing = weigh(&proposal.particles, &scores.residuals, self.cfg.motion.likelihood_gamma);
        let state = proposal.particles.states()[winner];
        let mut resample_rng = proposal.resample_rng;
        self.particles = resample(&weighing.particles, &mut resample_rng);

        let patch = proposal.patches[winner].as_ref().expect("winner has a patch");
        let (dict, replaced) = self.dict.maybe_update(patch, &coefficients, &self.cfg.update);
        self.dict = dict;
        self.frame_index = proposal.frame_index;

        Ok(FrameResult {
            frame_index: proposal.frame_index,
            bbox: state_to_box(&state, self.cfg.tw, self.cfg.th),
            state,
            residual: scores.residuals[winner],
            coefficients,
            solve_time: scores.solve_time,
            step_time: step_start.elapsed(),
            performed_solves: scores.performed,
            skipped_solves: scores.skipped,
            failed_candidates: scores.failures,
            weight_underflow: weighing.underflow,
            template_replaced: replaced,
        })
    }

    pub fn step(&mut self, frame: &Frame) -> Result<FrameResult, TrackerError> {
        let start = Instant::now();
        let proposal = self.propose(frame)?;
        let scores = self.score(&proposal, ScoringMode::Native);
        self.commit(proposal, scores, start)
    }
}

/// A run stopped early; `completed` holds every frame processed before the failure.
#[derive(Debug, Clone, Error)]
#[error("run aborted after {} frames: {error}", completed.len())]
pub struct RunAborted {
    pub completed: Vec<FrameResult>,
    pub error: TrackerError,
}

/// The run stream for `(seed, run_index)`.
pub fn run_stream(seed: u64, run_index: u64) -> RngStream {
    RngStream::new(seed).substream(run_index)
}

/// Tracks a full sequence deterministically from the initial box.
pub fn run_sequence(
    cfg: &TrackerConfig,
    frames: &[Frame],
    init_box: BoundingBox,
    seed: u64,
    run_index: u64,
) -> Result<Vec<FrameResult>, RunAborted> {
    let abort = |completed, error| RunAborted { completed, error };
    let first = frames.first().ok_or_else(|| abort(Vec::new(), TrackerError::EmptySequence))?;
    let mut tracker =
        create_tracker(cfg.clone(), first, init_box, run_stream(seed, run_index)).map_err(|e| abort(Vec::new(), e))?;
    let mut results = Vec::with_capacity(frames.len());
    results.push(tracker.initial_result(first));
    for frame in &frames[1..] {
        match tracker.step(frame) {
            Ok(r) => results.push(r),
            Err(e) => return Err(abort(results, e)),
        }
    }
    Ok(results)
}
