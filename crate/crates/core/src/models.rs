//! Generalized linear models with sigmoid or softmax heads, trained by
//! mini-batch SGD with momentum on cross-entropy.

use std::fmt::Write as _;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;
use crate::theory::argmax;

/// Labelled real vectors stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSet {
    dim: usize,
    num_labels: usize,
    x: Vec<f64>,
    y: Vec<usize>,
}

impl VectorSet {
    pub fn new(dim: usize, num_labels: usize, x: Vec<f64>, y: Vec<usize>) -> Result<Self> {
        if dim == 0 || x.len() != dim * y.len() {
            return Err(Error::BadInputDim {
                expected: dim * y.len(),
                got: x.len(),
            });
        }
        if let Some(&bad) = y.iter().find(|&&l| l >= num_labels) {
            return Err(Error::BadLabel(bad));
        }
        Ok(VectorSet { dim, num_labels, x, y })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>, y: Vec<usize>, num_labels: usize) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::BadInputDim { expected: dim, got: r.len() });
        }
        if rows.len() != y.len() {
            return Err(Error::Invalid("one label per row is required".into()));
        }
        VectorSet::new(dim, num_labels, rows.concat(), y)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.y[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.y
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(move |i| self.x[i * self.dim + j])
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn subset(&self, indices: &[usize]) -> VectorSet {
        let mut x = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            x.extend_from_slice(self.row(i));
        }
        VectorSet {
            dim: self.dim,
            num_labels: self.num_labels,
            x,
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Head {
    /// Binary classifier: one weight row, scores `(1 - s, s)` with `s = sigmoid(z)`.
    Sigmoid,
    Softmax,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    head: Head,
    dim: usize,
    /// Row-major `rows x dim`.
    weights: Vec<f64>,
    bias: Vec<f64>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl LinearModel {
    pub fn zeros(head: Head, dim: usize, num_classes: usize) -> Result<Self> {
        let rows = match head {
            Head::Sigmoid if num_classes == 2 => 1,
            Head::Sigmoid => {
                return Err(Error::Invalid(format!(
                    "a sigmoid head is binary, got {num_classes} classes"
                )))
            }
            Head::Softmax if num_classes >= 2 => num_classes,
            Head::Softmax => return Err(Error::Invalid("softmax needs at least 2 classes".into())),
        };
        Ok(LinearModel {
            head,
            dim,
            weights: vec![0.0; rows * dim],
            bias: vec![0.0; rows],
        })
    }

    pub fn from_parts(head: Head, weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        let dim = weights.first().map_or(0, Vec::len);
        let rows = weights.len();
        let ok = match head {
            Head::Sigmoid => rows == 1,
            Head::Softmax => rows >= 2,
        };
        if !ok || bias.len() != rows || weights.iter().any(|r| r.len() != dim) {
            return Err(Error::Invalid("weight rows and bias do not match the head".into()));
        }
        Ok(LinearModel {
            head,
            dim,
            weights: weights.concat(),
            bias,
        })
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_classes(&self) -> usize {
        match self.head {
            Head::Sigmoid => 2,
            Head::Softmax => self.bias.len(),
        }
    }

    pub fn rows(&self) -> usize {
        self.bias.len()
    }

    pub fn weight_row(&self, k: usize) -> &[f64] {
        &self.weights[k * self.dim..(k + 1) * self.dim]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Weight of input `j` in the (single) sigmoid row, or the largest
    /// absolute weight over softmax rows.
    pub fn abs_weight(&self, j: usize) -> f64 {
        (0..self.rows()).map(|k| self.weight_row(k)[j].abs()).fold(0.0, f64::max)
    }

    fn logits_into(&self, x: &[f64], z: &mut [f64]) {
        for (k, zk) in z.iter_mut().enumerate() {
            let w = self.weight_row(k);
            *zk = self.bias[k] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
    }

    fn probs_from_logits(&self, z: &[f64], out: &mut [f64]) {
        match self.head {
            Head::Sigmoid => {
                let s = sigmoid(z[0]);
                out[0] = 1.0 - s;
                out[1] = s;
            }
            Head::Softmax => {
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for (o, &zk) in out.iter_mut().zip(z) {
                    *o = (zk - m).exp();
                    total += *o;
                }
                out.iter_mut().for_each(|o| *o /= total);
            }
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::BadInputDim {
                expected: self.dim,
                got: x.len(),
            });
        }
        let mut z = vec![0.0; self.rows()];
        self.logits_into(x, &mut z);
        let mut p = vec![0.0; self.num_classes()];
        self.probs_from_logits(&z, &mut p);
        Ok(p)
    }

    /// Argmax of [`LinearModel::forward`], ties to the lowest class.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.forward(x)?))
    }

    /// Cross-entropy of one sample from its logits.
    fn sample_loss(&self, z: &[f64], y: usize) -> f64 {
        match self.head {
            Head::Sigmoid => {
                if y == 1 {
                    softplus(-z[0])
                } else {
                    softplus(z[0])
                }
            }
            Head::Softmax => {
                let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + z.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
                lse - z[y]
            }
        }
    }

    /// Writes `w[k][j]` rows followed by the bias row, 17 significant digits.
    pub fn to_text(&self) -> String {
        let head = match self.head {
            Head::Sigmoid => "sigmoid",
            Head::Softmax => "softmax",
        };
        let mut s = format!("# head={head} rows={} dim={}\n", self.rows(), self.dim);
        let fmt_row = |s: &mut String, row: &[f64]| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(s, "{}", cells.join(" "));
        };
        for k in 0..self.rows() {
            fmt_row(&mut s, self.weight_row(k));
        }
        fmt_row(&mut s, &self.bias);
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let parse = |line: usize, msg: String| Error::Parse { line, msg };
        let (_, header) = lines.next().ok_or_else(|| parse(1, "empty model".into()))?;
        let mut head = None;
        let mut rows = None;
        for field in header.trim_start_matches('#').split_whitespace() {
            match field.split_once('=') {
                Some(("head", "sigmoid")) => head = Some(Head::Sigmoid),
                Some(("head", "softmax")) => head = Some(Head::Softmax),
                Some(("rows", v)) => rows = v.parse::<usize>().ok(),
                _ => {}
            }
        }
        let head = head.ok_or_else(|| parse(1, "missing head".into()))?;
        let rows = rows.ok_or_else(|| parse(1, "missing rows".into()))?;
        let mut values = Vec::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|e| parse(i + 1, format!("{v:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        if values.len() != rows + 1 {
            return Err(parse(0, format!("expected {} rows, found {}", rows + 1, values.len())));
        }
        let bias = values.pop().expect("bias row");
        LinearModel::from_parts(head, values, bias)
    }
}

/// Mean cross-entropy of `model` on the given samples, with its gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    /// Same layout as the model weights.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

pub fn loss_and_gradient(model: &LinearModel, data: &VectorSet, indices: &[usize]) -> Result<LossGradient> {
    if data.dim() != model.dim {
        return Err(Error::BadInputDim {
            expected: model.dim,
            got: data.dim(),
        });
    }
    let rows = model.rows();
    let mut g = LossGradient {
        loss: 0.0,
        weights: vec![0.0; model.weights.len()],
        bias: vec![0.0; rows],
    };
    let mut z = vec![0.0; rows];
    let mut p = vec![0.0; model.num_classes()];
    let scale = 1.0 / indices.len() as f64;
    for &i in indices {
        let x = data.row(i);
        let y = data.label(i);
        model.logits_into(x, &mut z);
        g.loss += model.sample_loss(&z, y) * scale;
        model.probs_from_logits(&z, &mut p);
        for k in 0..rows {
            let dz = match model.head {
                Head::Sigmoid => p[1] - (y == 1) as u8 as f64,
                Head::Softmax => p[k] - (y == k) as u8 as f64,
            } * scale;
            g.bias[k] += dz;
            let row = &mut g.weights[k * model.dim..(k + 1) * model.dim];
            for (gw, xj) in row.iter_mut().zip(x) {
                *gw += dz * xj;
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for TrainConfig {
    /// Toy-experiment settings: lr 0.01, momentum 0.9, batch 256, 100 epochs.
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            momentum: 0.9,
            batch_size: 256,
            epochs: 100,
            seed: 0,
            shuffle: true,
        }
    }
}

impl TrainConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Invalid("learning rate must be a non-negative number".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Invalid("momentum must lie in [0, 1)".into()));
        }
        if self.batch_size == 0 || self.batch_size > n {
            return Err(Error::Invalid(format!(
                "batch size {} must be in 1..={n}",
                self.batch_size
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Invalid("epochs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: LinearModel,
    /// Mean training loss after each epoch.
    pub loss_curve: Vec<f64>,
    /// `1 - mean max output` on the training set after each epoch.
    pub estimated_error_curve: Vec<f64>,
}

fn head_for(num_labels: usize) -> Head {
    if num_labels == 2 {
        Head::Sigmoid
    } else {
        Head::Softmax
    }
}

/// Trains from zero initialization. Binary data gets a sigmoid head.
pub fn train(data: &VectorSet, config: &TrainConfig) -> Result<TrainOutcome> {
    train_with_head(data, config, head_for(data.num_labels()))
}

pub fn train_with_head(data: &VectorSet, config: &TrainConfig, head: Head) -> Result<TrainOutcome> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    config.validate(data.len())?;
    let mut model = LinearModel::zeros(head, data.dim(), data.num_labels().max(2))?;
    let mut vel_w = vec![0.0; model.weights.len()];
    let mut vel_b = vec![0.0; model.bias.len()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_curve = Vec::with_capacity(config.epochs);
    let mut estimated_error_curve = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng::derive(config.seed, epoch as u64, "shuffle"));
        }
        for batch in order.chunks(config.batch_size) {
            let g = loss_and_gradient(&model, data, batch)?;
            if !g.loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            for ((w, v), gw) in model.weights.iter_mut().zip(&mut vel_w).zip(&g.weights) {
                *v = config.momentum * *v + gw;
                *w -= config.learning_rate * *v;
            }
            for ((b, v), gb) in model.bias.iter_mut().zip(&mut vel_b).zip(&g.bias) {
                *v = config.momentum * *v + gb;
                *b -= config.learning_rate * *v;
            }
        }
        if model.weights.iter().chain(&model.bias).any(|v| !v.is_finite()) {
            return Err(Error::Diverged { epoch });
        }
        let (loss, mean_max) = loss_and_confidence(&model, data);
        if !loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        loss_curve.push(loss);
        estimated_error_curve.push(1.0 - mean_max);
    }
    Ok(TrainOutcome {
        model,
        loss_curve,
        estimated_error_curve,
    })
}

fn loss_and_confidence(model: &LinearModel, data: &VectorSet) -> (f64, f64) {
    let mut z = vec![0.0; model.rows()];
    let mut p = vec![0.0; model.num_classes()];
    let (mut loss, mut conf) = (0.0, 0.0);
    for i in 0..data.len() {
        model.logits_into(data.row(i), &mut z);
        loss += model.sample_loss(&z, data.label(i));
        model.probs_from_logits(&z, &mut p);
        conf += p.iter().copied().fold(0.0, f64::max);
    }
    let n = data.len() as f64;
    (loss / n, conf / n)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Risk {
    pub zero_one_error: f64,
    pub mean_max_output: f64,
}

pub fn risk(model: &LinearModel, data: &VectorSet) -> Result<Risk> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if data.dim() != model.dim {
        return Err(Error::BadInputDim {
            expected: model.dim,
            got: data.dim(),
        });
    }
    let mut z = vec![0.0; model.rows()];
    let mut p = vec![0.0; model.num_classes()];
    let (mut wrong, mut conf) = (0usize, 0.0);
    for i in 0..data.len() {
        model.logits_into(data.row(i), &mut z);
        model.probs_from_logits(&z, &mut p);
        if argmax(&p) != data.label(i) {
            wrong += 1;
        }
        conf += p.iter().copied().fold(0.0, f64::max);
    }
    let n = data.len() as f64;
    Ok(Risk {
        zero_one_error: wrong as f64 / n,
        mean_max_output: conf / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_models_are_uniform() {
        let m = LinearModel::zeros(Head::Softmax, 4, 3).unwrap();
        let p = m.forward(&[1.0, -2.0, 3.0, 0.5]).unwrap();
        assert!(p.iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-15));
        let m = LinearModel::zeros(Head::Sigmoid, 2, 2).unwrap();
        assert_eq!(m.forward(&[4.0, 1.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn inactive_feature_does_not_move_output() {
        let m = LinearModel::from_parts(Head::Sigmoid, vec![vec![1.0, 0.0]], vec![0.0]).unwrap();
        assert_eq!(m.forward(&[0.0, 5.0]).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn forward_rejects_bad_dimension() {
        let m = LinearModel::zeros(Head::Sigmoid, 2, 2).unwrap();
        assert!(matches!(m.forward(&[1.0]), Err(Error::BadInputDim { expected: 2, got: 1 })));
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let m = LinearModel::from_parts(Head::Softmax, vec![vec![1.0], vec![-1.0], vec![0.5]], vec![0.0; 3])
            .unwrap();
        let p = m.forward(&[1000.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(argmax(&p), 0);
    }

    fn separable() -> VectorSet {
        // margin-1 separable around the line x0 + x1 = 0
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..20 {
            let t = i as f64 / 4.0 - 2.5;
            rows.push(vec![t + 1.0, -t + 1.0]);
            y.push(1);
            rows.push(vec![t - 1.0, -t - 1.0]);
            y.push(0);
        }
        VectorSet::from_rows(rows, y, 2).unwrap()
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let data = separable();
        let cfg = TrainConfig {
            batch_size: 8,
            ..TrainConfig::default()
        };
        let out = train(&data, &cfg).unwrap();
        assert_eq!(risk(&out.model, &data).unwrap().zero_one_error, 0.0);
        assert_eq!(out.loss_curve.len(), 100);
        assert_eq!(out.estimated_error_curve.len(), 100);
        assert!(out.loss_curve[99] < out.loss_curve[0]);
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let data = separable();
        let cfg = TrainConfig {
            learning_rate: 0.0,
            batch_size: 8,
            epochs: 5,
            ..TrainConfig::default()
        };
        let out = train(&data, &cfg).unwrap();
        assert_eq!(out.model, LinearModel::zeros(Head::Sigmoid, 2, 2).unwrap());
        assert!(out.loss_curve.iter().all(|&l| l == out.loss_curve[0]));
        assert!((out.loss_curve[0] - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn training_is_deterministic() {
        let data = separable();
        let cfg = TrainConfig {
            batch_size: 7,
            epochs: 10,
            seed: 42,
            ..TrainConfig::default()
        };
        let a = train(&data, &cfg).unwrap();
        let b = train(&data, &cfg).unwrap();
        assert_eq!(a.model.to_text(), b.model.to_text());
    }

    #[test]
    fn divergence_is_reported() {
        let rows = vec![vec![1e300, -1e300], vec![-1e300, 1e300]];
        let data = VectorSet::from_rows(rows, vec![0, 1], 2).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e10,
            batch_size: 1,
            epochs: 3,
            ..TrainConfig::default()
        };
        assert!(matches!(train(&data, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn config_validation() {
        let data = separable();
        let too_big = TrainConfig { batch_size: 1000, ..TrainConfig::default() };
        assert!(train(&data, &too_big).is_err());
        let bad_momentum = TrainConfig { momentum: 1.0, batch_size: 4, ..TrainConfig::default() };
        assert!(train(&data, &bad_momentum).is_err());
    }

    #[test]
    fn risk_examples() {
        let uniform = LinearModel::zeros(Head::Sigmoid, 1, 2).unwrap();
        let data = VectorSet::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]], vec![0, 1, 1], 2).unwrap();
        let r = risk(&uniform, &data).unwrap();
        assert!((r.zero_one_error - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.mean_max_output, 0.5);

        // z = x - 1.5: predicts 0, 1, 1 for x = 1, 2, 3 against labels 0, 0, 1
        let m = LinearModel::from_parts(Head::Sigmoid, vec![vec![1.0]], vec![-1.5]).unwrap();
        let data = VectorSet::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]], vec![0, 0, 1], 2).unwrap();
        assert!((risk(&m, &data).unwrap().zero_one_error - 1.0 / 3.0).abs() < 1e-15);

        let preds: Vec<usize> = (0..3).map(|i| m.predict(data.row(i)).unwrap()).collect();
        let own = VectorSet::from_rows(vec![vec![1.0], vec![2.0], vec![3.0]], preds, 2).unwrap();
        assert_eq!(risk(&m, &own).unwrap().zero_one_error, 0.0);
    }

    #[test]
    fn text_round_trip_is_exact() {
        let m = LinearModel::from_parts(
            Head::Softmax,
            vec![vec![0.1, -1.0 / 3.0], vec![2e-17, 5.0], vec![1e300, -0.0]],
            vec![1.0, std::f64::consts::PI, -7.25],
        )
        .unwrap();
        let text = m.to_text();
        assert_eq!(LinearModel::from_text(&text).unwrap(), m);
        assert!(text.lines().nth(1).unwrap().starts_with("1.0000000000000001e-1 "));
    }
}
