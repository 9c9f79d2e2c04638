//! Target-template dictionary: construction, occlusion augmentation and the
//! cosine-similarity update rule.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagery::{extract_patch, AffineState, BoundingBox, Frame, ImageryError};
use crate::solvers::{AugmentedDictionary, CoefficientVector, Dictionary, LinearOperator};

/// Patches whose mean-removed norm is below this are treated as zero.
const DEGENERATE_NORM: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AppearanceError {
    #[error("template patch is constant and cannot be normalized")]
    DegenerateTemplate,
    #[error("zero vector has no direction")]
    ZeroVector,
    #[error("initial box {0:?} is not inside the frame")]
    BoxOutsideFrame(BoundingBox),
    #[error("template count must be at least 1")]
    NoTemplates,
    #[error(transparent)]
    Imagery(#[from] ImageryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UpdateConfig {
    pub similarity_threshold: f64,
    pub weight_decay: f64,
}

impl Default for UpdateConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: 0.85,
            weight_decay: 0.95,
        }
    }
}

impl UpdateConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold < 1.0) {
            return Err(format!("similarity_threshold {} not in (0, 1)", self.similarity_threshold));
        }
        if !(self.weight_decay > 0.0 && self.weight_decay <= 1.0) {
            return Err(format!("weight_decay {} not in (0, 1]", self.weight_decay));
        }
        Ok(())
    }
}

/// Mean-removed, unit-norm copy of a raw patch; `None` for constant patches.
pub fn prepare_patch(raw: &[f64]) -> Option<DVector<f64>> {
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let mut v = DVector::from_iterator(raw.len(), raw.iter().map(|x| x - mean));
    let norm = v.norm();
    if !(norm > DEGENERATE_NORM) {
        return None;
    }
    v /= norm;
    Some(v)
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, AppearanceError> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(AppearanceError::ZeroVector);
    }
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((dot / (na * nb)).clamp(-1.0, 1.0))
}

/// Either `T` or the augmented `[T, I]`.
#[derive(Debug, Clone, PartialEq)]
pub enum EffectiveDictionary {
    Plain(Dictionary),
    Augmented(AugmentedDictionary),
}

impl EffectiveDictionary {
    pub fn targets(&self) -> &Dictionary {
        match self {
            EffectiveDictionary::Plain(t) => t,
            EffectiveDictionary::Augmented(a) => a.targets(),
        }
    }
}

impl LinearOperator for EffectiveDictionary {
    fn nrows(&self) -> usize {
        match self {
            Self::Plain(t) => t.nrows(),
            Self::Augmented(a) => a.nrows(),
        }
    }

    fn ncols(&self) -> usize {
        match self {
            Self::Plain(t) => t.ncols(),
            Self::Augmented(a) => a.ncols(),
        }
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Plain(t) => t.apply(x),
            Self::Augmented(a) => a.apply(x),
        }
    }

    fn apply_transpose(&self, r: &DVector<f64>) -> DVector<f64> {
        match self {
            Self::Plain(t) => t.apply_transpose(r),
            Self::Augmented(a) => a.apply_transpose(r),
        }
    }

    fn target_columns(&self) -> usize {
        match self {
            Self::Plain(t) => t.ncols(),
            Self::Augmented(a) => a.target_columns(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateDictionary {
    templates: Dictionary,
    weights: Vec<f64>,
    augmented: bool,
    tw: usize,
    th: usize,
}

/// Offsets of the 8-neighborhood, visited in raster order.
const NEIGHBORHOOD: [(f64, f64); 8] = [
    (-1.0, -1.0),
    (0.0, -1.0),
    (1.0, -1.0),
    (-1.0, 0.0),
    (1.0, 0.0),
    (-1.0, 1.0),
    (0.0, 1.0),
    (1.0, 1.0),
];

/// Translation offset of template `index` (0 is the unperturbed patch).
/// Each further pass over the 8-neighborhood steps one ring outward so that
/// no two templates sample the same position.
pub fn jitter_offset(index: usize, jitter: f64) -> (f64, f64) {
    if index == 0 {
        return (0.0, 0.0);
    }
    let ring = ((index - 1) / NEIGHBORHOOD.len() + 1) as f64;
    let (dx, dy) = NEIGHBORHOOD[(index - 1) % NEIGHBORHOOD.len()];
    (dx * jitter * ring, dy * jitter * ring)
}

/// Builds `n` templates from the first frame: the patch at `bbox` followed by
/// patches at jittered translations.
pub fn init_dictionary(
    frame: &Frame,
    bbox: &BoundingBox,
    n: usize,
    tw: usize,
    th: usize,
    jitter: f64,
) -> Result<TemplateDictionary, AppearanceError> {
    if n == 0 {
        return Err(AppearanceError::NoTemplates);
    }
    if !bbox.is_valid() || !bbox.inside(frame.width(), frame.height()) {
        return Err(AppearanceError::BoxOutsideFrame(*bbox));
    }
    let base = AffineState::from_box(bbox, tw, th);
    let mut cols = Vec::with_capacity(n);
    for k in 0..n {
        let (dx, dy) = jitter_offset(k, jitter);
        let mut state = base;
        state.tx += dx;
        state.ty += dy;
        let raw = extract_patch(frame, &state, tw, th)?;
        cols.push(prepare_patch(&raw).ok_or(AppearanceError::DegenerateTemplate)?);
    }
    let templates = Dictionary::from_columns(&cols).map_err(|_| AppearanceError::DegenerateTemplate)?;
    Ok(TemplateDictionary {
        templates,
        weights: vec![1.0; n],
        augmented: false,
        tw,
        th,
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

impl TemplateDictionary {
    /// Assembles a dictionary from already-prepared unit columns.
    pub fn from_parts(templates: Dictionary, weights: Vec<f64>, tw: usize, th: usize) -> Self {
        assert_eq!(templates.atoms(), weights.len());
        assert_eq!(templates.dim(), tw * th);
        Self {
            templates,
            weights,
            augmented: false,
            tw,
            th,
        }
    }

    pub fn with_augmented(mut self, augmented: bool) -> Self {
        self.augmented = augmented;
        self
    }

    pub fn templates(&self) -> &Dictionary {
        &self.templates
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn augmented(&self) -> bool {
        self.augmented
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.tw * self.th
    }

    pub fn template_size(&self) -> (usize, usize) {
        (self.tw, self.th)
    }

    pub fn effective_dictionary(&self) -> EffectiveDictionary {
        if self.augmented {
            EffectiveDictionary::Augmented(AugmentedDictionary::new(self.templates.clone()))
        } else {
            EffectiveDictionary::Plain(self.templates.clone())
        }
    }

    pub fn max_similarity(&self, patch: &[f64]) -> f64 {
        self.templates
            .matrix()
            .column_iter()
            .map(|col| cosine_similarity(patch, col.as_slice()).unwrap_or(-1.0))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Applies the weight update and, if the tracked patch is dissimilar to
    /// every template, replaces the lightest template. Returns the new
    /// dictionary and the replaced index.
    pub fn maybe_update(
        &self,
        result_patch: &DVector<f64>,
        alpha: &CoefficientVector,
        cfg: &UpdateConfig,
    ) -> (TemplateDictionary, Option<usize>) {
        let n = self.len();
        let coeffs = &alpha.alpha;
        debug_assert_eq!(coeffs.len(), n);
        let best = (0..n)
            .max_by(|&i, &j| coeffs[i].abs().total_cmp(&coeffs[j].abs()).then(j.cmp(&i)))
            .unwrap_or(0);
        let mut weights: Vec<f64> = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, &w)| {
                let decayed = if i == best { w } else { w * cfg.weight_decay };
                let inc = coeffs.get(i).map_or(0.0, |c| c.abs());
                decayed + if inc.is_finite() { inc } else { 0.0 }
            })
            .collect();

        let mut next = self.clone();
        let replaced = if self.max_similarity(result_patch.as_slice()) < cfg.similarity_threshold {
            let victim = (0..n).min_by(|&i, &j| weights[i].total_cmp(&weights[j])).unwrap_or(0);
            if n > 1 {
                let mut rest: Vec<f64> = weights
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != victim)
                    .map(|(_, &w)| w)
                    .collect();
                weights[victim] = median(&mut rest);
            }
            let mut m: DMatrix<f64> = next.templates.matrix().clone();
            let unit = result_patch / result_patch.norm();
            m.set_column(victim, &unit);
            next.templates = Dictionary::new(m).expect("unit columns are finite");
            Some(victim)
        } else {
            None
        };
        if !weights.iter().any(|&w| w > 0.0) {
            weights.iter_mut().for_each(|w| *w = 1.0);
        }
        next.weights = weights;
        (next, replaced)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn smooth_frame() -> Frame {
        Frame::from_fn(48, 48, |x, y| {
            let (x, y) = (x as f64, y as f64);
            0.5 + 0.25 * (x * 0.31).sin() * (y * 0.23).cos() + 0.1 * (x * 0.07 + y * 0.11).sin()
        })
        .unwrap()
    }

    fn unit(v: &[f64]) -> DVector<f64> {
        let v = DVector::from_column_slice(v);
        let n = v.norm();
        v / n
    }

    #[test]
    fn single_template() {
        let f = smooth_frame();
        let bb = BoundingBox::new(10.0, 10.0, 12.0, 15.0);
        let d = init_dictionary(&f, &bb, 1, 12, 15, 1.0).unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d.weights(), &[1.0]);
        let raw = extract_patch(&f, &AffineState::from_box(&bb, 12, 15), 12, 15).unwrap();
        let expect = prepare_patch(&raw).unwrap();
        assert_eq!(d.templates().matrix().column(0), expect.column(0));
    }

    #[test]
    fn nine_distinct_unit_templates() {
        let d = init_dictionary(&smooth_frame(), &BoundingBox::new(10.0, 10.0, 12.0, 15.0), 9, 12, 15, 1.0).unwrap();
        let m = d.templates().matrix();
        for i in 0..9 {
            assert_abs_diff_eq!(m.column(i).norm(), 1.0, epsilon = 1e-9);
            for j in 0..i {
                assert!((m.column(i) - m.column(j)).amax() > 1e-6);
            }
        }
    }

    #[test]
    fn constant_region_is_degenerate() {
        let f = Frame::filled(40, 40, 0.4).unwrap();
        let err = init_dictionary(&f, &BoundingBox::new(5.0, 5.0, 12.0, 15.0), 3, 12, 15, 1.0).unwrap_err();
        assert_eq!(err, AppearanceError::DegenerateTemplate);
    }

    #[test]
    fn box_must_be_inside_frame() {
        let err = init_dictionary(&smooth_frame(), &BoundingBox::new(40.0, 40.0, 12.0, 15.0), 1, 12, 15, 1.0).unwrap_err();
        assert!(matches!(err, AppearanceError::BoxOutsideFrame(_)));
    }

    #[test]
    fn cosine_cases() {
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(cosine_similarity(&[1.0, -2.0], &[-1.0, 2.0]).unwrap(), -1.0, epsilon = 1e-15);
        assert_eq!(cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]), Err(AppearanceError::ZeroVector));
    }

    fn three_axis_dict() -> TemplateDictionary {
        let t = Dictionary::new(DMatrix::from_row_slice(4, 3, &[
            1.0, 0.0, 0.0, //
            0.0, 1.0, 0.0, //
            0.0, 0.0, 1.0, //
            0.0, 0.0, 0.0,
        ]))
        .unwrap();
        TemplateDictionary::from_parts(t, vec![1.0, 2.0, 3.0], 2, 2)
    }

    #[test]
    fn matching_patch_only_reweights() {
        let d = three_axis_dict();
        let patch = unit(&[1.0, 0.0, 0.0, 0.0]);
        let alpha = CoefficientVector::target_only(DVector::from_vec(vec![0.9, 0.05, 0.0]));
        let (next, replaced) = d.maybe_update(&patch, &alpha, &UpdateConfig::default());
        assert_eq!(replaced, None);
        assert_eq!(next.templates(), d.templates());
        assert_abs_diff_eq!(next.weights()[0], 1.9, epsilon = 1e-12);
        assert_abs_diff_eq!(next.weights()[1], 2.0 * 0.95 + 0.05, epsilon = 1e-12);
        assert_abs_diff_eq!(next.weights()[2], 3.0 * 0.95, epsilon = 1e-12);
    }

    #[test]
    fn orthogonal_patch_replaces_lightest() {
        let d = three_axis_dict();
        let patch = unit(&[0.0, 0.0, 0.0, 1.0]);
        let alpha = CoefficientVector::target_only(DVector::from_vec(vec![0.0, 0.0, 0.0]));
        let cfg = UpdateConfig {
            similarity_threshold: 0.8,
            weight_decay: 0.95,
        };
        let (next, replaced) = d.maybe_update(&patch, &alpha, &cfg);
        // argmax |α| ties resolve to index 0, which keeps weight 1 and stays lightest.
        assert_eq!(replaced, Some(0));
        assert_eq!(next.templates().matrix().column(0), patch.column(0));
        assert_abs_diff_eq!(next.weights()[0], 0.5 * (2.0 * 0.95 + 3.0 * 0.95), epsilon = 1e-12);
    }

    #[test]
    fn single_template_replacement_keeps_weight() {
        let t = Dictionary::new(DMatrix::from_column_slice(4, 1, &[1.0, 0.0, 0.0, 0.0])).unwrap();
        let d = TemplateDictionary::from_parts(t, vec![2.0], 2, 2);
        let patch = unit(&[0.0, 1.0, 0.0, 0.0]);
        let alpha = CoefficientVector::target_only(DVector::from_vec(vec![0.0]));
        let (next, replaced) = d.maybe_update(&patch, &alpha, &UpdateConfig::default());
        assert_eq!(replaced, Some(0));
        assert_eq!(next.weights(), &[2.0]);
        assert_eq!(next.templates().matrix().column(0), patch.column(0));
    }

    #[test]
    fn augmented_effective_dictionary_shape() {
        let d = three_axis_dict();
        assert_eq!(d.effective_dictionary().ncols(), 3);
        let aug = d.clone().with_augmented(true).effective_dictionary();
        assert_eq!(aug.ncols(), 7);
        let dense = aug.to_dense();
        for i in 0..4 {
            for r in 0..4 {
                assert_eq!(dense[(r, 3 + i)], if r == i { 1.0 } else { 0.0 });
            }
        }
        let e = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5]);
        let c = CoefficientVector {
            alpha: DVector::zeros(3),
            e: e.clone(),
        };
        assert_eq!(aug.apply(&c.joint()), e);
    }

    proptest! {
        #[test]
        fn augmented_product_reproduces_t_alpha_plus_e(
            alpha in prop::collection::vec(-3.0f64..3.0, 3),
            e in prop::collection::vec(-3.0f64..3.0, 4),
        ) {
            let d = three_axis_dict().with_augmented(true);
            let op = d.effective_dictionary();
            let c = CoefficientVector { alpha: DVector::from_vec(alpha.clone()), e: DVector::from_vec(e.clone()) };
            let lhs = d.templates().matrix() * &c.alpha + &c.e;
            prop_assert_eq!((lhs - op.apply(&c.joint())).amax(), 0.0);
        }

        #[test]
        fn update_preserves_invariants(
            steps in prop::collection::vec((prop::collection::vec(-1.0f64..1.0, 4), prop::collection::vec(-1.0f64..1.0, 3)), 1..20),
            threshold in 0.1f64..0.99,
        ) {
            let cfg = UpdateConfig { similarity_threshold: threshold, weight_decay: 0.9 };
            let mut d = three_axis_dict();
            for (patch, coeffs) in steps {
                let p = DVector::from_vec(patch);
                if p.norm() < 1e-6 { continue; }
                let p = &p / p.norm();
                let sim = d.max_similarity(p.as_slice());
                let (next, replaced) = d.maybe_update(&p, &CoefficientVector::target_only(DVector::from_vec(coeffs)), &cfg);
                prop_assert_eq!(replaced.is_some(), sim < threshold);
                for col in next.templates().matrix().column_iter() {
                    prop_assert!((col.norm() - 1.0).abs() < 1e-9);
                }
                prop_assert!(next.weights().iter().all(|&w| w >= 0.0));
                prop_assert!(next.weights().iter().any(|&w| w > 0.0));
                d = next;
            }
        }

        #[test]
        fn argmax_template_weight_never_drops(
            coeffs in prop::collection::vec(0.0f64..0.5, 1..15),
        ) {
            let mut d = three_axis_dict();
            let p = unit(&[1.0, 0.0, 0.0, 0.0]);
            let mut last = d.weights()[0];
            for c in coeffs {
                let alpha = CoefficientVector::target_only(DVector::from_vec(vec![1.0 + c, c * 0.5, 0.0]));
                let (next, replaced) = d.maybe_update(&p, &alpha, &UpdateConfig::default());
                prop_assert_eq!(replaced, None);
                prop_assert!(next.weights()[0] >= last);
                last = next.weights()[0];
                d = next;
            }
        }
    }
}
