//! Deterministic synthetic sequences with exact ground truth.
//!
//! A textured target moves along a piecewise-linear path over a textured
//! background. Optional nuisances: a global illumination ramp, occluders,
//! static distractors sharing the target texture, and additive Gaussian
//! noise. All intensities are quantized to 16-bit levels so sequences
//! survive a PGM round trip bit-exactly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::overlap;
use crate::imagery::{BoundingBox, Frame};
use crate::rng::RngStream;

/// Maximum IoU allowed between a distractor and the true target.
pub const MAX_CLUTTER_IOU: f64 = 0.25;
const QUANT: f64 = 65535.0;
const CLUTTER_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("infeasible scenario: {0}")]
    InfeasibleSpec(String),
    #[error("unknown preset '{0}' (expected translation, illumination, occlusion, clutter or fast_motion)")]
    UnknownPreset(String),
}

#[inline]
fn quantize(v: f64) -> f64 {
    (v.clamp(0.0, 1.0) * QUANT).round() / QUANT
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Texture {
    /// Smoothly interpolated lattice noise with the given cell size and range.
    ValueNoise { cell: usize, lo: f64, hi: f64 },
    /// `(c0 + c1·x + c2·y) / 65535` in frame coordinates; integer coefficients
    /// keep every pixel exactly on a 16-bit level.
    Ramp { c0: u32, c1: u32, c2: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    /// Top-left corner of the target at the end of the segment.
    pub to: [f64; 2],
    /// Pixels per frame.
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Fill {
    Solid(f64),
    Textured { seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OccluderEvent {
    pub first_frame: usize,
    /// Inclusive.
    pub last_frame: usize,
    /// `[x, y, w, h]` relative to the target's top-left corner.
    pub rect: [f64; 4],
    pub fill: Fill,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IlluminationRamp {
    /// Gain of the first frame.
    pub from: f64,
    /// Gain of the last frame; intermediate frames interpolate linearly.
    pub to: f64,
}

impl Default for IlluminationRamp {
    fn default() -> Self {
        Self { from: 1.0, to: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
    pub target_w: usize,
    pub target_h: usize,
    pub texture_seed: u64,
    pub target_texture: Texture,
    pub background: Texture,
    /// Top-left corner of the target in the first frame.
    pub start: [f64; 2],
    pub segments: Vec<Segment>,
    pub illumination: IlluminationRamp,
    pub occluders: Vec<OccluderEvent>,
    pub clutter_count: usize,
    pub noise_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    Translation,
    Illumination,
    Occlusion,
    Clutter,
    FastMotion,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::Translation,
        Preset::Illumination,
        Preset::Occlusion,
        Preset::Clutter,
        Preset::FastMotion,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Preset::Translation => "translation",
            Preset::Illumination => "illumination",
            Preset::Occlusion => "occlusion",
            Preset::Clutter => "clutter",
            Preset::FastMotion => "fast_motion",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Preset {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.as_str() == s.replace('-', "_"))
            .ok_or_else(|| SynthError::UnknownPreset(s.to_string()))
    }
}

/// The documented scenarios, all 192×144 with a 24×30 target:
///
/// * `translation`: 60 frames, 2 px/frame along an L-shaped path, no nuisances.
/// * `illumination`: the translation path under a gain ramp from 1.0 to 0.6.
/// * `occlusion`: the translation path plus a solid occluder over 80% of the
///   target area in frames 20–24.
/// * `clutter`: the translation path plus three distractors with the target texture.
/// * `fast_motion`: 60 frames bouncing horizontally at 12 px/frame.
///
/// All presets use noise std 0.01.
pub fn preset(which: Preset) -> ScenarioSpec {
    let translation = ScenarioSpec {
        width: 192,
        height: 144,
        frame_count: 60,
        target_w: 24,
        target_h: 30,
        texture_seed: 7,
        target_texture: Texture::ValueNoise {
            cell: 4,
            lo: 0.1,
            hi: 0.9,
        },
        background: Texture::ValueNoise {
            cell: 12,
            lo: 0.3,
            hi: 0.6,
        },
        start: [24.0, 30.0],
        segments: vec![
            Segment {
                to: [84.0, 30.0],
                speed: 2.0,
            },
            Segment {
                to: [84.0, 88.0],
                speed: 2.0,
            },
        ],
        illumination: IlluminationRamp::default(),
        occluders: Vec::new(),
        clutter_count: 0,
        noise_std: 0.01,
    };
    match which {
        Preset::Translation => translation,
        Preset::Illumination => ScenarioSpec {
            illumination: IlluminationRamp { from: 1.0, to: 0.6 },
            ..translation
        },
        Preset::Occlusion => ScenarioSpec {
            occluders: vec![OccluderEvent {
                first_frame: 20,
                last_frame: 24,
                rect: [0.0, 0.0, 24.0, 24.0],
                fill: Fill::Solid(0.15),
            }],
            ..translation
        },
        Preset::Clutter => ScenarioSpec {
            clutter_count: 3,
            ..translation
        },
        Preset::FastMotion => ScenarioSpec {
            start: [12.0, 57.0],
            segments: (0..5)
                .map(|i| Segment {
                    to: [if i % 2 == 0 { 156.0 } else { 12.0 }, 57.0],
                    speed: 12.0,
                })
                .collect(),
            ..translation
        },
    }
}

/// A noise-free scene whose every patch is the same linear ramp, so all
/// jittered templates are colinear in exact arithmetic.
pub fn colinear_scene(frame_count: usize) -> ScenarioSpec {
    let ramp = Texture::Ramp {
        c0: 2000,
        c1: 200,
        c2: 150,
    };
    ScenarioSpec {
        target_texture: ramp.clone(),
        background: ramp,
        segments: vec![Segment {
            to: [60.0, 30.0],
            speed: 1.0,
        }],
        noise_std: 0.0,
        frame_count,
        ..preset(Preset::Translation)
    }
}

/// A `w × h` raster, row-major.
struct Raster {
    w: usize,
    data: Vec<f64>,
}

impl Raster {
    fn render(texture: &Texture, w: usize, h: usize, origin: (f64, f64), seed: u64) -> Raster {
        let data = match texture {
            Texture::ValueNoise { cell, lo, hi } => value_noise(w, h, (*cell).max(1), *lo, *hi, seed),
            Texture::Ramp { c0, c1, c2 } => {
                let mut data = Vec::with_capacity(w * h);
                for y in 0..h {
                    for x in 0..w {
                        let k = *c0 as f64 + *c1 as f64 * (x as f64 + origin.0) + *c2 as f64 * (y as f64 + origin.1);
                        data.push(k.min(QUANT) / QUANT);
                    }
                }
                data
            }
        };
        Raster { w, data }
    }

    fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.w + x]
    }
}

fn value_noise(w: usize, h: usize, cell: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let gw = w / cell + 2;
    let gh = h / cell + 2;
    let mut rng = RngStream::new(seed);
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.uniform()).collect();
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let gy = y as f64 / cell as f64;
        let (y0, fy) = (gy.floor() as usize, smooth(gy.fract()));
        for x in 0..w {
            let gx = x as f64 / cell as f64;
            let (x0, fx) = (gx.floor() as usize, smooth(gx.fract()));
            let l = |i: usize, j: usize| lattice[j * gw + i];
            let v = (1.0 - fy) * ((1.0 - fx) * l(x0, y0) + fx * l(x0 + 1, y0))
                + fy * ((1.0 - fx) * l(x0, y0 + 1) + fx * l(x0 + 1, y0 + 1));
            out.push(quantize(lo + (hi - lo) * v));
        }
    }
    out
}

/// Integer top-left positions of the target for every frame.
fn path_positions(spec: &ScenarioSpec) -> Vec<(f64, f64)> {
    let mut pos = spec.start;
    let mut seg = 0;
    let mut out = Vec::with_capacity(spec.frame_count);
    for k in 0..spec.frame_count {
        if k > 0 && seg < spec.segments.len() {
            let mut budget = spec.segments[seg].speed;
            while budget > 0.0 && seg < spec.segments.len() {
                let to = spec.segments[seg].to;
                let (dx, dy) = (to[0] - pos[0], to[1] - pos[1]);
                let dist = (dx * dx + dy * dy).sqrt();
                if dist <= budget + 1e-12 {
                    pos = to;
                    budget -= dist;
                    seg += 1;
                    if let Some(next) = spec.segments.get(seg) {
                        // Leftover distance continues at the next segment's speed ratio.
                        budget *= next.speed / spec.segments[seg - 1].speed.max(1e-12);
                    }
                } else {
                    pos = [pos[0] + dx / dist * budget, pos[1] + dy / dist * budget];
                    budget = 0.0;
                }
            }
        }
        out.push((pos[0].round(), pos[1].round()));
    }
    out
}

fn validate(spec: &ScenarioSpec) -> Result<(), SynthError> {
    let bad = |m: String| Err(SynthError::InfeasibleSpec(m));
    if spec.frame_count == 0 {
        return bad("frame_count must be at least 1".into());
    }
    if spec.target_w < 2 || spec.target_h < 2 {
        return bad("target must be at least 2x2".into());
    }
    if spec.segments.iter().any(|s| !(s.speed > 0.0 && s.speed.is_finite())) {
        return bad("segment speeds must be positive".into());
    }
    let IlluminationRamp { from, to } = spec.illumination;
    if !(from > 0.0 && to > 0.0) {
        return bad(format!("illumination gains must be positive, got {from}..{to}"));
    }
    if !(spec.noise_std >= 0.0 && spec.noise_std.is_finite()) {
        return bad(format!("noise_std {}", spec.noise_std));
    }
    Ok(())
}

/// Renders the sequence and its ground-truth boxes. Deterministic in
/// `(spec, seed)`; `seed` drives only the additive noise.
pub fn generate(spec: &ScenarioSpec, seed: u64) -> Result<(Vec<Frame>, Vec<BoundingBox>), SynthError> {
    validate(spec)?;
    let (w, h) = (spec.width, spec.height);
    let (tw, th) = (spec.target_w, spec.target_h);
    let gt: Vec<BoundingBox> = path_positions(spec)
        .into_iter()
        .map(|(x, y)| BoundingBox::new(x, y, tw as f64, th as f64))
        .collect();
    for (k, b) in gt.iter().enumerate() {
        if b.x < 1.0 || b.y < 1.0 || b.x + b.w > (w - 1) as f64 || b.y + b.h > (h - 1) as f64 {
            return Err(SynthError::InfeasibleSpec(format!(
                "target at ({}, {}) in frame {k} is not at least 1 px inside the {w}x{h} frame",
                b.x, b.y
            )));
        }
    }

    let tex_rng = RngStream::new(spec.texture_seed);
    let background = Raster::render(&spec.background, w, h, (0.0, 0.0), tex_rng.substream(1).seed());
    let target_seed = tex_rng.substream(2).seed();
    let clutter = place_clutter(spec, &gt, tex_rng.substream(3))?;
    let noise_root = RngStream::new(seed);

    let mut frames = Vec::with_capacity(spec.frame_count);
    for (k, target) in gt.iter().enumerate() {
        let mut px = background.data.clone();
        let (tx, ty) = (target.x as usize, target.y as usize);
        let paste = |px: &mut Vec<f64>, ox: usize, oy: usize| {
            let tex = Raster::render(&spec.target_texture, tw, th, (ox as f64, oy as f64), target_seed);
            for y in 0..th {
                for x in 0..tw {
                    px[(oy + y) * w + ox + x] = tex.get(x, y);
                }
            }
        };
        for &(cx, cy) in &clutter {
            paste(&mut px, cx, cy);
        }
        paste(&mut px, tx, ty);
        for (oi, occ) in spec.occluders.iter().enumerate() {
            if !(occ.first_frame..=occ.last_frame).contains(&k) {
                continue;
            }
            let [rx, ry, rw, rh] = occ.rect;
            let x0 = (target.x + rx).max(0.0) as usize;
            let y0 = (target.y + ry).max(0.0) as usize;
            let x1 = ((target.x + rx + rw).max(0.0) as usize).min(w);
            let y1 = ((target.y + ry + rh).max(0.0) as usize).min(h);
            let textured = match occ.fill {
                Fill::Solid(_) => None,
                Fill::Textured { seed } => Some(Raster::render(
                    &Texture::ValueNoise {
                        cell: 3,
                        lo: 0.0,
                        hi: 1.0,
                    },
                    w,
                    h,
                    (0.0, 0.0),
                    seed ^ oi as u64,
                )),
            };
            for y in y0..y1 {
                for x in x0..x1 {
                    px[y * w + x] = match (&textured, occ.fill) {
                        (Some(r), _) => r.get(x, y),
                        (None, Fill::Solid(v)) => quantize(v),
                        (None, Fill::Textured { .. }) => unreachable!("textured fills are rendered above"),
                    };
                }
            }
        }
        let gain = if spec.frame_count > 1 {
            spec.illumination.from + (spec.illumination.to - spec.illumination.from) * k as f64 / (spec.frame_count - 1) as f64
        } else {
            spec.illumination.from
        };
        let mut noise = noise_root.substream(k as u64);
        if gain != 1.0 || spec.noise_std > 0.0 {
            for v in px.iter_mut() {
                let mut x = *v * gain;
                if spec.noise_std > 0.0 {
                    x += spec.noise_std * noise.standard_normal();
                }
                *v = quantize(x);
            }
        }
        frames.push(Frame::new(w, h, px).expect("quantized pixels are in range"));
    }
    Ok((frames, gt))
}

fn place_clutter(spec: &ScenarioSpec, gt: &[BoundingBox], mut rng: RngStream) -> Result<Vec<(usize, usize)>, SynthError> {
    let (tw, th) = (spec.target_w as f64, spec.target_h as f64);
    let max_x = spec.width as f64 - tw - 1.0;
    let max_y = spec.height as f64 - th - 1.0;
    let mut out = Vec::with_capacity(spec.clutter_count);
    let mut attempts = 0;
    while out.len() < spec.clutter_count {
        attempts += 1;
        if attempts > CLUTTER_ATTEMPTS || max_x < 1.0 || max_y < 1.0 {
            return Err(SynthError::InfeasibleSpec(format!(
                "could not place {} distractors away from the target path",
                spec.clutter_count
            )));
        }
        let x = (1.0 + rng.uniform() * (max_x - 1.0)).round();
        let y = (1.0 + rng.uniform() * (max_y - 1.0)).round();
        let candidate = BoundingBox::new(x, y, tw, th);
        if gt.iter().all(|b| overlap(&candidate, b) <= MAX_CLUTTER_IOU) {
            out.push((x as usize, y as usize));
        }
    }
    Ok(out)
}

/// The target texture as rendered at the given top-left position, before
/// illumination and noise.
pub fn target_texture(spec: &ScenarioSpec, top_left: (usize, usize)) -> Vec<f64> {
    let seed = RngStream::new(spec.texture_seed).substream(2).seed();
    Raster::render(&spec.target_texture, spec.target_w, spec.target_h, (top_left.0 as f64, top_left.1 as f64), seed).data
}

/// Distractor top-left positions of a scenario.
pub fn clutter_positions(spec: &ScenarioSpec) -> Result<Vec<(usize, usize)>, SynthError> {
    let gt: Vec<BoundingBox> = path_positions(spec)
        .into_iter()
        .map(|(x, y)| BoundingBox::new(x, y, spec.target_w as f64, spec.target_h as f64))
        .collect();
    place_clutter(spec, &gt, RngStream::new(spec.texture_seed).substream(3))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(mut spec: ScenarioSpec) -> ScenarioSpec {
        spec.noise_std = 0.0;
        spec
    }

    #[test]
    fn static_noise_free_frames_are_identical() {
        let mut spec = quiet(preset(Preset::Translation));
        spec.segments.clear();
        spec.frame_count = 5;
        let (frames, gt) = generate(&spec, 3).unwrap();
        assert!(frames.windows(2).all(|w| w[0] == w[1]));
        assert!(gt.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn translation_advances_two_pixels_per_frame() {
        let mut spec = preset(Preset::Translation);
        spec.frame_count = 30;
        let (_, gt) = generate(&spec, 0).unwrap();
        for w in gt.windows(2) {
            let (a, b) = (w[0].center(), w[1].center());
            assert_eq!(((b.0 - a.0).abs() + (b.1 - a.1).abs()), 2.0);
        }
        assert_eq!(gt[0].x + 2.0 * 29.0, gt[29].x);
    }

    #[test]
    fn preset_contracts() {
        let t = preset(Preset::Translation);
        assert_eq!(t.frame_count, 60);
        assert!(t.segments.iter().all(|s| s.speed == 2.0));
        assert!(t.occluders.is_empty() && t.clutter_count == 0 && t.illumination == IlluminationRamp::default());
        let (_, gt) = generate(&t, 0).unwrap();
        for w in gt.windows(2) {
            let d = (w[1].x - w[0].x).abs() + (w[1].y - w[0].y).abs();
            assert_eq!(d, 2.0);
        }

        let o = preset(Preset::Occlusion);
        assert_eq!(o.occluders.len(), 1);
        let ev = o.occluders[0];
        assert_eq!(ev.last_frame - ev.first_frame + 1, 5);
        assert!((ev.rect[2] * ev.rect[3] / (o.target_w * o.target_h) as f64 - 0.8).abs() < 1e-12);
        assert!(matches!(ev.fill, Fill::Solid(_)));

        let f = preset(Preset::FastMotion);
        assert!(f.segments.iter().all(|s| s.speed == 12.0));
        for name in ["translation", "illumination", "occlusion", "clutter", "fast_motion"] {
            let p: Preset = name.parse().unwrap();
            generate(&preset(p), 1).unwrap();
        }
        assert_eq!("zoom".parse::<Preset>(), Err(SynthError::UnknownPreset("zoom".into())));
    }

    #[test]
    fn full_occlusion_replaces_target_and_keeps_gt() {
        let mut spec = quiet(preset(Preset::Translation));
        spec.occluders = vec![OccluderEvent {
            first_frame: 10,
            last_frame: 14,
            rect: [0.0, 0.0, 24.0, 30.0],
            fill: Fill::Solid(0.0),
        }];
        let (frames, gt) = generate(&spec, 0).unwrap();
        let (clean, gt_clean) = generate(&quiet(preset(Preset::Translation)), 0).unwrap();
        assert_eq!(gt, gt_clean);
        for k in 0..frames.len() {
            let b = gt[k];
            let occluded = (10..=14).contains(&k);
            for y in 0..30 {
                for x in 0..24 {
                    let v = frames[k].get(b.x as usize + x, b.y as usize + y);
                    if occluded {
                        assert_eq!(v, 0.0);
                    } else {
                        assert_eq!(v, clean[k].get(b.x as usize + x, b.y as usize + y));
                    }
                }
            }
        }
    }

    #[test]
    fn ground_truth_crop_is_the_target_texture() {
        let spec = quiet(preset(Preset::Occlusion));
        let (frames, gt) = generate(&spec, 4).unwrap();
        let tex = target_texture(&spec, (0, 0));
        for (k, f) in frames.iter().enumerate() {
            let b = gt[k];
            for y in 0..spec.target_h {
                for x in 0..spec.target_w {
                    let inside_occluder = (20..=24).contains(&k) && x < 24 && y < 24;
                    if !inside_occluder {
                        assert_eq!(f.get(b.x as usize + x, b.y as usize + y), tex[y * spec.target_w + x]);
                    }
                }
            }
        }
    }

    #[test]
    fn clutter_stays_away_from_target() {
        let spec = preset(Preset::Clutter);
        let (_, gt) = generate(&spec, 0).unwrap();
        let pos = clutter_positions(&spec).unwrap();
        assert_eq!(pos.len(), 3);
        for (x, y) in pos {
            let c = BoundingBox::new(x as f64, y as f64, 24.0, 30.0);
            assert!(gt.iter().all(|b| overlap(&c, b) <= MAX_CLUTTER_IOU));
        }
    }

    #[test]
    fn leaving_the_frame_is_infeasible() {
        let mut spec = preset(Preset::Translation);
        spec.segments = vec![Segment {
            to: [400.0, 30.0],
            speed: 12.0,
        }];
        assert!(matches!(generate(&spec, 0), Err(SynthError::InfeasibleSpec(_))));
        spec.segments.clear();
        spec.illumination = IlluminationRamp { from: 1.0, to: 0.0 };
        assert!(matches!(generate(&spec, 0), Err(SynthError::InfeasibleSpec(_))));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = preset(Preset::Illumination);
        assert_eq!(generate(&spec, 9).unwrap(), generate(&spec, 9).unwrap());
        assert_ne!(generate(&spec, 9).unwrap().0, generate(&spec, 10).unwrap().0);
    }

    #[test]
    fn colinear_scene_is_an_exact_ramp() {
        let (frames, _) = generate(&colinear_scene(3), 0).unwrap();
        let f = &frames[0];
        assert_eq!(f.get(1, 0) * QUANT - f.get(0, 0) * QUANT, 200.0);
        assert_eq!((f.get(50, 40) * QUANT).round(), 2000.0 + 200.0 * 50.0 + 150.0 * 40.0);
        assert_eq!(quantize(f.get(50, 40)), f.get(50, 40));
    }
}
