//! Random-erasing parameter laws, the erasing operator on dense grids, the
//! prediction changing ratio, and a small synthetic grid task to run them on.

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{LinearModel, VectorSet};
use crate::rng::{self, Rng};

/// Area and aspect-ratio intervals of the label-dependent law, per label.
pub const DEFAULT_LABEL_INTERVALS: [([f64; 2], [f64; 2]); 10] = [
    ([0.0, 1.0 / 3.0], [0.0, 1.0 / 3.0]),
    ([0.0, 1.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]),
    ([0.0, 1.0 / 3.0], [2.0 / 3.0, 1.0]),
    ([1.0 / 3.0, 2.0 / 3.0], [0.0, 1.0 / 3.0]),
    ([1.0 / 3.0, 2.0 / 3.0], [1.0 / 3.0, 2.0 / 3.0]),
    ([1.0 / 3.0, 2.0 / 3.0], [2.0 / 3.0, 1.0]),
    ([2.0 / 3.0, 1.0], [0.0, 1.0 / 3.0]),
    ([2.0 / 3.0, 1.0], [1.0 / 3.0, 2.0 / 3.0]),
    ([2.0 / 3.0, 1.0], [2.0 / 3.0, 1.0]),
    ([0.0, 0.0], [0.0, 0.0]),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasingParams {
    pub area_u: f64,
    pub aspect_u: f64,
    pub pos_x: f64,
    pub pos_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PositionLaw {
    Uniform,
    /// Density `4|x - 0.5|`.
    PeripheryM0,
    /// Density `2 - 4|x - 0.5|`.
    CenterM1,
}

impl PositionLaw {
    pub const ALL: [PositionLaw; 3] = [PositionLaw::Uniform, PositionLaw::PeripheryM0, PositionLaw::CenterM1];

    pub fn name(self) -> &'static str {
        match self {
            PositionLaw::Uniform => "uniform",
            PositionLaw::PeripheryM0 => "periphery",
            PositionLaw::CenterM1 => "center",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "uniform" => Ok(PositionLaw::Uniform),
            "periphery" | "periphery_m0" | "m0" => Ok(PositionLaw::PeripheryM0),
            "center" | "center_m1" | "m1" => Ok(PositionLaw::CenterM1),
            other => Err(Error::Invalid(format!("unknown position law {other:?}"))),
        }
    }

    /// Inverse CDF.
    pub fn quantile(self, q: f64) -> f64 {
        let lower = |q: f64| match self {
            PositionLaw::Uniform => q,
            PositionLaw::PeripheryM0 => (1.0 - (1.0 - 2.0 * q).max(0.0).sqrt()) / 2.0,
            PositionLaw::CenterM1 => (q / 2.0).sqrt(),
        };
        if q <= 0.5 {
            lower(q)
        } else {
            1.0 - lower(1.0 - q)
        }
    }

    pub fn cdf(self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let lower = |x: f64| match self {
            PositionLaw::Uniform => x,
            PositionLaw::PeripheryM0 => 2.0 * x - 2.0 * x * x,
            PositionLaw::CenterM1 => 2.0 * x * x,
        };
        if x <= 0.5 {
            lower(x)
        } else {
            1.0 - lower(1.0 - x)
        }
    }
}

pub fn sample_position(law: PositionLaw, rng: &mut Rng) -> f64 {
    law.quantile(rng.random::<f64>())
}

/// Maps `area_u` and `aspect_u` onto rectangle geometry: area fraction
/// `area_lo + u (area_hi - area_lo)` and aspect ratio (height / width)
/// `aspect_lo (aspect_hi / aspect_lo)^u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErasingGeometry {
    pub area_lo: f64,
    pub area_hi: f64,
    pub aspect_lo: f64,
    pub aspect_hi: f64,
}

impl Default for ErasingGeometry {
    fn default() -> Self {
        ErasingGeometry {
            area_lo: 0.02,
            area_hi: 0.40,
            aspect_lo: 1.0 / 3.0,
            aspect_hi: 3.0,
        }
    }
}

impl ErasingGeometry {
    pub fn validate(&self) -> Result<()> {
        let ok = (0.0..=1.0).contains(&self.area_lo)
            && (0.0..=1.0).contains(&self.area_hi)
            && self.area_lo <= self.area_hi
            && self.aspect_lo > 0.0
            && self.aspect_lo <= self.aspect_hi;
        if ok {
            Ok(())
        } else {
            Err(Error::Invalid(format!("invalid erasing geometry {self:?}")))
        }
    }

    pub fn area_fraction(&self, u: f64) -> f64 {
        self.area_lo + u * (self.area_hi - self.area_lo)
    }

    pub fn aspect_ratio(&self, u: f64) -> f64 {
        self.aspect_lo * (self.aspect_hi / self.aspect_lo).powf(u)
    }

    /// Pixel rectangle `(x0, y0, x1, y1)`, half-open and clipped to the grid.
    pub fn rectangle(&self, params: &ErasingParams, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let (w_f, h_f) = (width as f64, height as f64);
        let area = self.area_fraction(params.area_u) * w_f * h_f;
        if area <= 0.0 {
            return (0, 0, 0, 0);
        }
        let ratio = self.aspect_ratio(params.aspect_u);
        let h = (area * ratio).sqrt().min(h_f);
        let w = (area / h).min(w_f);
        // a width capped at the grid gives the remaining area back to the height
        let h = (area / w).min(h_f);
        let (h, w) = (h.round(), w.round());
        let span = |center: f64, len: f64, limit: f64| {
            let start = (center - len / 2.0).round();
            let lo = start.clamp(0.0, limit) as usize;
            let hi = (start + len).clamp(0.0, limit) as usize;
            (lo, hi)
        };
        let (x0, x1) = span(params.pos_x * w_f, w, w_f);
        let (y0, y1) = span(params.pos_y * h_f, h, h_f);
        (x0, y0, x1, y1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentDistribution {
    /// Probability of the label-dependent branch.
    pub alpha: f64,
    /// Per-label `([a, b] for area_u, [a, b] for aspect_u)`.
    pub label_intervals: Vec<([f64; 2], [f64; 2])>,
    pub position_law: PositionLaw,
    pub geometry: ErasingGeometry,
}

impl Default for AugmentDistribution {
    fn default() -> Self {
        AugmentDistribution {
            alpha: 0.0,
            label_intervals: DEFAULT_LABEL_INTERVALS.to_vec(),
            position_law: PositionLaw::Uniform,
            geometry: ErasingGeometry::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Independent,
    LabelDependent,
}

impl AugmentDistribution {
    pub fn new(alpha: f64, position_law: PositionLaw) -> Self {
        AugmentDistribution {
            alpha,
            position_law,
            ..AugmentDistribution::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Invalid(format!("alpha {} outside [0, 1]", self.alpha)));
        }
        for (label, (a, b)) in self.label_intervals.iter().enumerate() {
            for [lo, hi] in [a, b] {
                if !(0.0 <= *lo && lo <= hi && *hi <= 1.0) {
                    return Err(Error::Invalid(format!("label {label} interval [{lo}, {hi}]")));
                }
            }
        }
        self.geometry.validate()
    }

    /// Draws erasing parameters for `label` and reports which mixture
    /// branch produced them.
    pub fn sample_with_branch(&self, label: usize, rng: &mut Rng) -> Result<(ErasingParams, Branch)> {
        let (area_iv, aspect_iv) = *self.label_intervals.get(label).ok_or(Error::BadLabel(label))?;
        let dependent = rng.random::<f64>() < self.alpha;
        let draw = |iv: [f64; 2], rng: &mut Rng| {
            let u = rng.random::<f64>();
            if dependent {
                (iv[0] + u * (iv[1] - iv[0])).clamp(iv[0], iv[1])
            } else {
                u
            }
        };
        let area_u = draw(area_iv, rng);
        let aspect_u = draw(aspect_iv, rng);
        let pos_x = sample_position(self.position_law, rng);
        let pos_y = sample_position(self.position_law, rng);
        let branch = if dependent {
            Branch::LabelDependent
        } else {
            Branch::Independent
        };
        Ok((
            ErasingParams {
                area_u,
                aspect_u,
                pos_x,
                pos_y,
            },
            branch,
        ))
    }
}

pub fn sample_params(dist: &AugmentDistribution, label: usize, rng: &mut Rng) -> Result<ErasingParams> {
    dist.sample_with_branch(label, rng).map(|(p, _)| p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTensor {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// `values[(y * width + x) * channels + c]`.
    pub values: Vec<f64>,
}

impl GridTensor {
    pub fn new(width: usize, height: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || channels == 0 || values.len() != width * height * channels {
            return Err(Error::BadInputDim {
                expected: width * height * channels,
                got: values.len(),
            });
        }
        Ok(GridTensor {
            width,
            height,
            channels,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn at(&self, x: usize, y: usize, c: usize) -> f64 {
        self.values[(y * self.width + x) * self.channels + c]
    }
}

/// Copy of `grid` with the parameterized rectangle filled by `U(0, 1)` noise.
pub fn apply_erasing(grid: &GridTensor, params: &ErasingParams, geometry: &ErasingGeometry, rng: &mut Rng) -> GridTensor {
    let mut out = grid.clone();
    let (x0, y0, x1, y1) = geometry.rectangle(params, grid.width, grid.height);
    for y in y0..y1 {
        for x in x0..x1 {
            for c in 0..grid.channels {
                out.values[(y * grid.width + x) * grid.channels + c] = rng.random::<f64>();
            }
        }
    }
    out
}

/// Mean fraction of inputs whose predicted label changes when erased with
/// freshly sampled parameters, over `repeats` independent repeats.
pub fn prediction_changing_ratio(
    model: &LinearModel,
    inputs: &[GridTensor],
    dist: &AugmentDistribution,
    labels: &[usize],
    repeats: usize,
    seed: u64,
) -> Result<f64> {
    if repeats == 0 {
        return Err(Error::Invalid("repeats must be at least 1".into()));
    }
    if inputs.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if labels.len() != inputs.len() {
        return Err(Error::Invalid("one label per input is required".into()));
    }
    if let Some(g) = inputs.iter().find(|g| g.len() != model.dim()) {
        return Err(Error::BadInputDim {
            expected: model.dim(),
            got: g.len(),
        });
    }
    let base = inputs
        .iter()
        .map(|g| model.predict(&g.values))
        .collect::<Result<Vec<_>>>()?;
    let fractions = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng::derive(seed, r as u64, "changing-ratio");
            let mut changed = 0usize;
            for ((g, &label), &before) in inputs.iter().zip(labels).zip(&base) {
                let params = sample_params(dist, label, &mut rng)?;
                let erased = apply_erasing(g, &params, &dist.geometry, &mut rng);
                if model.predict(&erased.values)? != before {
                    changed += 1;
                }
            }
            Ok(changed as f64 / inputs.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(fractions.iter().sum::<f64>() / repeats as f64)
}

/// Square single-channel grids whose label is a fixed ±1 pattern in a
/// central block; everything outside the block is `U(0, background)` noise.
/// Both sit below the mean of the `U(0, 1)` erasing fill, so erased patches
/// are visible to a linear model.
#[derive(Debug, Clone, PartialEq)]
pub struct GridTask {
    pub size: usize,
    pub block: usize,
    pub classes: usize,
    /// Mean pixel level of the central block.
    pub level: f64,
    /// Signal amplitude of the central pattern around `level`.
    pub amplitude: f64,
    /// Gaussian pixel noise in the central block.
    pub noise: f64,
    /// Upper end of the uniform background outside the block.
    pub background: f64,
    /// One ±1 pattern per class, `block * block` entries each.
    pub patterns: Vec<Vec<f64>>,
}

impl GridTask {
    pub fn new(size: usize, block: usize, classes: usize, pattern_seed: u64) -> Self {
        let mut rng = rng::derive(pattern_seed, 0, "grid-patterns");
        let patterns = (0..classes)
            .map(|_| {
                (0..block * block)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        GridTask {
            size,
            block,
            classes,
            level: 0.15,
            amplitude: 0.1,
            noise: 0.1,
            background: 0.3,
            patterns,
        }
    }

    /// 8x8 grids, 4x4 central pattern, 10 classes.
    pub fn standard() -> Self {
        GridTask::new(8, 4, 10, 0x5eed)
    }

    pub fn input_dim(&self) -> usize {
        self.size * self.size
    }

    fn block_origin(&self) -> usize {
        (self.size - self.block) / 2
    }

    pub fn in_block(&self, x: usize, y: usize) -> bool {
        let o = self.block_origin();
        (o..o + self.block).contains(&x) && (o..o + self.block).contains(&y)
    }

    /// Renders one instance of `class` from an instance seed.
    pub fn render(&self, class: usize, instance_seed: u64) -> GridTensor {
        let mut rng = rng::derive(instance_seed, class as u64, "grid-render");
        self.render_with(class, &mut rng)
    }

    fn render_with(&self, class: usize, rng: &mut Rng) -> GridTensor {
        let o = self.block_origin();
        let mut values = Vec::with_capacity(self.input_dim());
        for y in 0..self.size {
            for x in 0..self.size {
                let v = if self.in_block(x, y) {
                    let s = self.patterns[class][(y - o) * self.block + (x - o)];
                    let n: f64 = rng.sample(StandardNormal);
                    (self.level + self.amplitude * s + self.noise * n).clamp(0.0, 1.0)
                } else {
                    self.background * rng.random::<f64>()
                };
                values.push(v);
            }
        }
        GridTensor {
            width: self.size,
            height: self.size,
            channels: 1,
            values,
        }
    }

    /// `per_class` instances of every class, class-major.
    pub fn sample(&self, per_class: usize, rng: &mut Rng) -> (Vec<GridTensor>, Vec<usize>) {
        let mut grids = Vec::with_capacity(per_class * self.classes);
        let mut labels = Vec::with_capacity(per_class * self.classes);
        for class in 0..self.classes {
            for _ in 0..per_class {
                grids.push(self.render_with(class, rng));
                labels.push(class);
            }
        }
        (grids, labels)
    }
}

pub fn to_vector_set(grids: &[GridTensor], labels: &[usize], num_labels: usize) -> Result<VectorSet> {
    let dim = grids.first().map_or(0, GridTensor::len);
    let x: Vec<f64> = grids.iter().flat_map(|g| g.values.iter().copied()).collect();
    VectorSet::new(dim, num_labels, x, labels.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Head;

    #[test]
    fn quantile_examples() {
        for law in PositionLaw::ALL {
            assert_eq!(law.quantile(0.5), 0.5);
        }
        let m0 = PositionLaw::PeripheryM0.quantile(0.125);
        assert!((m0 - (1.0 - 0.75f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((m0 - 0.066987).abs() < 1e-6);
        assert_eq!(PositionLaw::CenterM1.quantile(0.125), 0.25);
        assert_eq!(PositionLaw::CenterM1.quantile(0.875), 0.75);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for law in PositionLaw::ALL {
            for i in 0..=100 {
                let q = i as f64 / 100.0;
                assert!((law.cdf(law.quantile(q)) - q).abs() < 1e-12, "{law:?} {q}");
            }
        }
    }

    #[test]
    fn alpha_zero_ignores_the_label() {
        let dist = AugmentDistribution::new(0.0, PositionLaw::Uniform);
        let mut a = rng::seeded(1);
        let mut b = rng::seeded(1);
        for _ in 0..100 {
            let p0 = dist.sample_with_branch(9, &mut a).unwrap();
            let p3 = dist.sample_with_branch(3, &mut b).unwrap();
            assert_eq!(p0, p3);
            assert_eq!(p0.1, Branch::Independent);
        }
    }

    #[test]
    fn alpha_one_follows_the_label_intervals() {
        let dist = AugmentDistribution::new(1.0, PositionLaw::Uniform);
        let mut rng = rng::seeded(2);
        for _ in 0..1000 {
            let p = sample_params(&dist, 0, &mut rng).unwrap();
            assert!((0.0..=1.0 / 3.0).contains(&p.area_u));
            assert!((0.0..=1.0 / 3.0).contains(&p.aspect_u));
            let p = sample_params(&dist, 9, &mut rng).unwrap();
            assert_eq!((p.area_u, p.aspect_u), (0.0, 0.0));
        }
        assert!(matches!(sample_params(&dist, 10, &mut rng), Err(Error::BadLabel(10))));
    }

    fn grid(w: usize, h: usize) -> GridTensor {
        GridTensor::new(w, h, 1, (0..w * h).map(|i| i as f64 / (w * h) as f64).collect()).unwrap()
    }

    #[test]
    fn zero_area_leaves_grid_unchanged() {
        let geo = ErasingGeometry {
            area_lo: 0.0,
            ..ErasingGeometry::default()
        };
        let g = grid(8, 8);
        let params = ErasingParams {
            area_u: 0.0,
            aspect_u: 0.7,
            pos_x: 0.5,
            pos_y: 0.5,
        };
        assert_eq!(apply_erasing(&g, &params, &geo, &mut rng::seeded(0)), g);
    }

    #[test]
    fn full_area_replaces_everything() {
        let geo = ErasingGeometry {
            area_lo: 1.0,
            area_hi: 1.0,
            ..ErasingGeometry::default()
        };
        let g = grid(8, 8);
        for aspect_u in [0.0, 0.3, 0.5, 1.0] {
            let params = ErasingParams {
                area_u: 1.0,
                aspect_u,
                pos_x: 0.5,
                pos_y: 0.5,
            };
            assert_eq!(geo.rectangle(&params, 8, 8), (0, 0, 8, 8));
            let out = apply_erasing(&g, &params, &geo, &mut rng::seeded(0));
            assert!(out.values.iter().zip(&g.values).all(|(a, b)| a != b));
        }
    }

    #[test]
    fn rectangles_clip_at_the_border() {
        let geo = ErasingGeometry::default();
        let params = ErasingParams {
            area_u: 1.0,
            aspect_u: 0.5,
            pos_x: 0.0,
            pos_y: 1.0,
        };
        let (x0, y0, x1, y1) = geo.rectangle(&params, 8, 8);
        assert_eq!((x0, y1), (0, 8));
        assert!(x1 < 8 && y0 > 0);
        // 0.4 * 64 = 25.6 px -> 5x5 square starting at (-3, 6): 2x2 survives
        assert_eq!((x1 - x0) * (y1 - y0), 4);
    }

    #[test]
    fn erasing_is_deterministic_and_pure() {
        let g = grid(8, 8);
        let params = ErasingParams {
            area_u: 0.5,
            aspect_u: 0.5,
            pos_x: 0.3,
            pos_y: 0.6,
        };
        let geo = ErasingGeometry::default();
        let a = apply_erasing(&g, &params, &geo, &mut rng::seeded(5));
        let b = apply_erasing(&g, &params, &geo, &mut rng::seeded(5));
        assert_eq!(a, b);
        assert_ne!(a, g);
        let (x0, y0, x1, y1) = geo.rectangle(&params, 8, 8);
        for y in 0..8 {
            for x in 0..8 {
                let inside = (x0..x1).contains(&x) && (y0..y1).contains(&y);
                assert_eq!(a.at(x, y, 0) == g.at(x, y, 0), !inside);
            }
        }
    }

    #[test]
    fn changing_ratio_is_zero_for_identity_augmentation_or_constant_model() {
        let task = GridTask::standard();
        let (grids, labels) = task.sample(5, &mut rng::seeded(1));
        let trained = {
            let data = to_vector_set(&grids, &labels, 10).unwrap();
            let cfg = crate::models::TrainConfig {
                batch_size: 10,
                epochs: 5,
                ..Default::default()
            };
            crate::models::train(&data, &cfg).unwrap().model
        };
        let mut identity = AugmentDistribution::new(0.5, PositionLaw::Uniform);
        identity.geometry = ErasingGeometry {
            area_lo: 0.0,
            area_hi: 0.0,
            ..ErasingGeometry::default()
        };
        let r = prediction_changing_ratio(&trained, &grids, &identity, &labels, 5, 1).unwrap();
        assert_eq!(r, 0.0);

        let constant = LinearModel::zeros(Head::Softmax, 64, 10).unwrap();
        let dist = AugmentDistribution::new(1.0, PositionLaw::CenterM1);
        assert_eq!(prediction_changing_ratio(&constant, &grids, &dist, &labels, 5, 1).unwrap(), 0.0);
        let r = prediction_changing_ratio(&trained, &grids, &dist, &labels, 5, 1).unwrap();
        assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn changing_ratio_on_two_pixels_matches_enumeration() {
        // Model predicts class 1 iff pixel 0 > 0.5; pixel 0 starts at 0.2.
        let model = LinearModel::from_parts(Head::Sigmoid, vec![vec![1.0, 0.0]], vec![-0.5]).unwrap();
        let g = GridTensor::new(2, 1, 1, vec![0.2, 0.9]).unwrap();
        let mut dist = AugmentDistribution::new(0.0, PositionLaw::Uniform);
        dist.geometry = ErasingGeometry {
            area_lo: 0.5,
            area_hi: 0.5,
            aspect_lo: 1.0,
            aspect_hi: 1.0,
        };
        // Enumerate: a 1x1 rectangle covers pixel 0 iff round(2 pos_x - 0.5) == 0,
        // i.e. pos_x < 0.5 (up to a null set); the fill flips the prediction iff
        // it exceeds 0.5.
        let steps = 100_000;
        let covered = (0..steps)
            .filter(|i| {
                let pos = (*i as f64 + 0.5) / steps as f64;
                (2.0 * pos - 0.5).round() == 0.0
            })
            .count() as f64
            / steps as f64;
        let expected = covered * 0.5;
        assert!((expected - 0.25).abs() < 1e-4);
        let inputs = vec![g; 50];
        let labels = vec![0; 50];
        let r = prediction_changing_ratio(&model, &inputs, &dist, &labels, 200, 9).unwrap();
        let sd = (expected * (1.0 - expected) / 10_000.0).sqrt();
        assert!((r - expected).abs() < 4.0 * sd, "{r} vs {expected}");
    }

    #[test]
    fn changing_ratio_argument_errors() {
        let model = LinearModel::zeros(Head::Softmax, 4, 3).unwrap();
        let g = GridTensor::new(2, 2, 1, vec![0.0; 4]).unwrap();
        let dist = AugmentDistribution::default();
        assert!(prediction_changing_ratio(&model, &[g.clone()], &dist, &[0], 0, 0).is_err());
        let wide = GridTensor::new(3, 2, 1, vec![0.0; 6]).unwrap();
        assert!(matches!(
            prediction_changing_ratio(&model, &[wide], &dist, &[0], 1, 0),
            Err(Error::BadInputDim { .. })
        ));
    }

    #[test]
    fn grid_task_renders_noise_outside_the_block() {
        let task = GridTask::standard();
        let g = task.render(3, 17);
        assert_eq!(g.len(), 64);
        assert!(g.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(task.render(3, 17), g);
        assert!(task.in_block(2, 2) && task.in_block(5, 5) && !task.in_block(1, 4));
    }
}
