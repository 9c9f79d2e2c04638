//! Frames, affine particle states and patch extraction.
//!
//! Pixel `(i, j)` covers the unit square `[i, i+1) × [j, j+1)`, so its center
//! sits at `(i + 0.5, j + 0.5)`. A template of `tw × th` samples has its
//! midpoint at the origin of template coordinates; an [`AffineState`] maps
//! template coordinates `u` to frame coordinates `A·u + t`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Warps with `det(A)` at or below this are degenerate.
pub const MIN_DETERMINANT: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageryError {
    #[error("degenerate warp: det(A) = {0:e}")]
    DegenerateWarp(f64),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("template must be at least 2x2, got {0}x{1}")]
    TemplateTooSmall(usize, usize),
}

/// A grayscale raster, row-major, intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, ImageryError> {
        if width == 0 || height == 0 {
            return Err(ImageryError::InvalidFrame(format!("empty frame {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(ImageryError::InvalidFrame(format!(
                "{} pixels for a {width}x{height} frame",
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(ImageryError::InvalidFrame(format!(
                "pixel {bad} has intensity {} outside [0, 1]",
                pixels[bad]
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, ImageryError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self, ImageryError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Bilinear sample at continuous pixel-index coordinates (integer values
    /// hit pixel centers), clamping to the border.
    #[inline]
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, max_x) };
        let y = if y.is_nan() { 0.0 } else { y.clamp(0.0, max_y) };
        let x0 = x.floor() as usize;
        let y0 = y.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let fx = x - x0 as f64;
        let fy = y - y0 as f64;
        let top = self.get(x0, y0) * (1.0 - fx) + self.get(x1, y0) * fx;
        let bottom = self.get(x0, y1) * (1.0 - fx) + self.get(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }
}

/// Axis-aligned box; `(x, y)` is the top-left corner in continuous pixel
/// coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0 && self.x.is_finite() && self.y.is_finite() && self.w.is_finite() && self.h.is_finite()
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + 0.5 * self.w, self.y + 0.5 * self.h)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    pub fn inside(&self, width: usize, height: usize) -> bool {
        self.x >= 0.0 && self.y >= 0.0 && self.x + self.w <= width as f64 && self.y + self.h <= height as f64
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        Self::new(self.x + dx, self.y + dy, self.w, self.h)
    }
}

/// Six-parameter affine warp `u ↦ A·u + t` with `A = [[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineState {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub tx: f64,
    pub ty: f64,
}

impl AffineState {
    pub fn identity_at(tx: f64, ty: f64) -> Self {
        Self::from_params([1.0, 0.0, 0.0, 1.0, tx, ty])
    }

    /// Parameters in the order `[a11, a12, a21, a22, tx, ty]`.
    pub fn from_params(p: [f64; 6]) -> Self {
        Self {
            a11: p[0],
            a12: p[1],
            a21: p[2],
            a22: p[3],
            tx: p[4],
            ty: p[5],
        }
    }

    pub fn params(&self) -> [f64; 6] {
        [self.a11, self.a12, self.a21, self.a22, self.tx, self.ty]
    }

    /// The axis-aligned warp that maps a `tw × th` template onto `bbox`.
    pub fn from_box(bbox: &BoundingBox, tw: usize, th: usize) -> Self {
        let (cx, cy) = bbox.center();
        Self::from_params([bbox.w / tw as f64, 0.0, 0.0, bbox.h / th as f64, cx, cy])
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn is_degenerate(&self) -> bool {
        !self.params().iter().all(|v| v.is_finite()) || !(self.det() > MIN_DETERMINANT)
    }

    #[inline]
    pub fn map(&self, ux: f64, uy: f64) -> (f64, f64) {
        (
            self.a11 * ux + self.a12 * uy + self.tx,
            self.a21 * ux + self.a22 * uy + self.ty,
        )
    }
}

/// Samples the frame on the warped `tw × th` template grid. The result is
/// stacked column-major (all rows of template column 0 first).
pub fn extract_patch(frame: &Frame, state: &AffineState, tw: usize, th: usize) -> Result<Vec<f64>, ImageryError> {
    if tw < 2 || th < 2 {
        return Err(ImageryError::TemplateTooSmall(tw, th));
    }
    if state.is_degenerate() {
        return Err(ImageryError::DegenerateWarp(state.det()));
    }
    let half_w = 0.5 * tw as f64;
    let half_h = 0.5 * th as f64;
    let mut out = Vec::with_capacity(tw * th);
    for i in 0..tw {
        let ux = i as f64 + 0.5 - half_w;
        for j in 0..th {
            let uy = j as f64 + 0.5 - half_h;
            let (px, py) = state.map(ux, uy);
            out.push(frame.sample_bilinear(px - 0.5, py - 0.5));
        }
    }
    Ok(out)
}

/// Axis-aligned hull of the four warped template corners.
pub fn state_to_box(state: &AffineState, tw: usize, th: usize) -> BoundingBox {
    let hw = 0.5 * tw as f64;
    let hh = 0.5 * th as f64;
    let corners = [(-hw, -hh), (hw, -hh), (hw, hh), (-hw, hh)].map(|(u, v)| state.map(u, v));
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (x, y) in corners {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    BoundingBox::new(x0, y0, x1 - x0, y1 - y0)
}

/// Unit-norm copy of `v`; the zero vector is returned unchanged.
pub fn normalize_patch(v: &[f64]) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return v.to_vec();
    }
    v.iter().map(|x| x / norm).collect()
}
