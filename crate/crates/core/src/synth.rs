//! The Gaussian toy task with task-identically distributed test data, the
//! Balance substitution, influence ranking and the InvarTG loop.

use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::gv::{build_table, BinningPolicy, Correlation, Dataset, Exemplar, VariableId, VariableSpec};
use crate::info::{self, Nats};
use crate::models::{self, LinearModel, TrainConfig, VectorSet};
use crate::rng::{self, Rng};

/// Diagonal jitter added before the positive-semidefiniteness factorization.
pub const PSD_JITTER: f64 = 1e-9;
/// Ridge added to the resampled task-uncorrelated block.
pub const BLOCK_RIDGE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ToySpec {
    pub dims: usize,
    /// Width of the leading task-correlated block.
    pub task_correlated_dims: usize,
    pub classes: usize,
    /// Instances per class; the first half trains, the rest tests.
    pub per_class: usize,
    pub class_means: Vec<DVector<f64>>,
    pub class_covariances: Vec<DMatrix<f64>>,
    /// Range of the uniform draws that replace the task-uncorrelated mean
    /// of every test instance.
    pub test_mean_range: (f64, f64),
    /// Variance of the entries of the cross-block coupling `W`.
    pub coupling_variance: f64,
    pub seed: u64,
}

impl ToySpec {
    /// Random class means in `U(-1, 1)^dims` and covariances `A A^T / dims + 0.1 I`.
    pub fn random(dims: usize, task_correlated_dims: usize, classes: usize, per_class: usize, seed: u64) -> Self {
        let mut rng = rng::derive(seed, 0, "toy-spec");
        let class_means = (0..classes)
            .map(|_| DVector::from_fn(dims, |_, _| rng.random_range(-1.0..1.0)))
            .collect();
        let class_covariances = (0..classes)
            .map(|_| {
                let a = DMatrix::from_fn(dims, dims, |_, _| rng.sample::<f64, _>(StandardNormal));
                &a * a.transpose() / dims as f64 + DMatrix::identity(dims, dims) * 0.1
            })
            .collect();
        ToySpec {
            dims,
            task_correlated_dims,
            classes,
            per_class,
            class_means,
            class_covariances,
            test_mean_range: (-1.0, 1.0),
            coupling_variance: 0.1,
            seed,
        }
    }

    /// The 20-d, two-class, 5000-per-class setting.
    pub fn standard(seed: u64) -> Self {
        ToySpec::random(20, 10, 2, 5000, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if self.task_correlated_dims == 0 || self.task_correlated_dims > self.dims {
            return Err(Error::Invalid(format!(
                "task-correlated block {} must be in 1..={}",
                self.task_correlated_dims, self.dims
            )));
        }
        if self.classes < 2 || self.per_class < 2 {
            return Err(Error::Invalid("need two classes with at least two instances".into()));
        }
        if self.class_means.len() != self.classes || self.class_covariances.len() != self.classes {
            return Err(Error::Invalid("one mean and covariance per class".into()));
        }
        for (m, c) in self.class_means.iter().zip(&self.class_covariances) {
            if m.len() != self.dims || c.nrows() != self.dims || c.ncols() != self.dims {
                return Err(Error::Invalid("mean/covariance shape does not match dims".into()));
            }
            psd_factor(c)?;
        }
        Ok(())
    }

    pub fn train_per_class(&self) -> usize {
        self.per_class / 2
    }
}

/// Lower Cholesky factor of `cov + jitter I`, or `not-psd`.
pub fn psd_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if cov.nrows() != cov.ncols() {
        return Err(Error::NotPsd("matrix is not square".into()));
    }
    let asym = (cov - cov.transpose()).amax();
    if asym > 1e-9 * cov.amax().max(1.0) {
        return Err(Error::NotPsd(format!("matrix is not symmetric (max asymmetry {asym:e})")));
    }
    let jittered = cov + DMatrix::identity(cov.nrows(), cov.ncols()) * PSD_JITTER;
    jittered
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::NotPsd("Cholesky factorization failed".into()))
}

fn sample_gaussian(mean: &DVector<f64>, factor: &DMatrix<f64>, rng: &mut Rng) -> DVector<f64> {
    let z = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
    mean + factor * z
}

/// Mean and covariance of one test instance of `class`: the task-correlated
/// block of both is kept, the rest is redrawn so the result stays PSD.
pub fn test_instance_distribution(spec: &ToySpec, class: usize, rng: &mut Rng) -> (DVector<f64>, DMatrix<f64>) {
    let t = spec.task_correlated_dims;
    let u = spec.dims - t;
    let mut mean = spec.class_means[class].clone();
    let mut cov = spec.class_covariances[class].clone();
    if u == 0 {
        return (mean, cov);
    }
    let (lo, hi) = spec.test_mean_range;
    for j in t..spec.dims {
        mean[j] = rng.random_range(lo..hi);
    }
    let coupling = Normal::new(0.0, spec.coupling_variance.sqrt()).expect("finite variance");
    let w = DMatrix::from_fn(t, u, |_, _| coupling.sample(rng));
    let d = DMatrix::from_fn(u, u, |_, _| rng.sample::<f64, _>(StandardNormal));
    let s11 = cov.view((0, 0), (t, t)).clone_owned();
    let cross = &s11 * &w;
    let s22 = w.transpose() * &cross + &d * d.transpose() + DMatrix::identity(u, u) * BLOCK_RIDGE;
    cov.view_mut((0, t), (t, u)).copy_from(&cross);
    cov.view_mut((t, 0), (u, t)).copy_from(&cross.transpose());
    cov.view_mut((t, t), (u, u)).copy_from(&s22);
    (mean, cov)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyData {
    pub train: VectorSet,
    pub test: VectorSet,
}

pub fn generate_toy(spec: &ToySpec) -> Result<ToyData> {
    spec.validate()?;
    let n_train = spec.train_per_class();
    let n_test = spec.per_class - n_train;
    let mut train_rng = rng::derive(spec.seed, 0, "toy-train");
    let mut test_rng = rng::derive(spec.seed, 0, "toy-test");
    let (mut xtr, mut ytr) = (Vec::new(), Vec::new());
    let (mut xte, mut yte) = (Vec::new(), Vec::new());
    for class in 0..spec.classes {
        let factor = psd_factor(&spec.class_covariances[class])?;
        for _ in 0..n_train {
            xtr.extend(sample_gaussian(&spec.class_means[class], &factor, &mut train_rng).iter());
            ytr.push(class);
        }
        for _ in 0..n_test {
            let (mean, cov) = test_instance_distribution(spec, class, &mut test_rng);
            let f = psd_factor(&cov)?;
            xte.extend(sample_gaussian(&mean, &f, &mut test_rng).iter());
            yte.push(class);
        }
    }
    Ok(ToyData {
        train: VectorSet::new(spec.dims, spec.classes, xtr, ytr)?,
        test: VectorSet::new(spec.dims, spec.classes, xte, yte)?,
    })
}

/// Views a vector set as continuous generative variables (identity
/// generating function), each declared over its observed range.
pub fn as_dataset(data: &VectorSet, task_correlated_dims: usize) -> Result<Dataset> {
    let specs = (0..data.dim())
        .map(|j| {
            let (lo, hi) = data
                .column(j)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
            let (lo, hi) = if lo < hi { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
            let corr = if j < task_correlated_dims {
                Correlation::TaskCorrelated
            } else {
                Correlation::TaskUncorrelated
            };
            VariableSpec::continuous(j, lo, hi).with_correlation(corr)
        })
        .collect();
    let exemplars = (0..data.len())
        .map(|i| Exemplar {
            g: data.row(i).to_vec(),
            y: data.label(i),
        })
        .collect();
    Dataset::new(specs, exemplars, data.num_labels())
}

/// Candidates ordered by `H_S(Y | G_i)` ascending (most influential first),
/// ties by ascending id.
pub fn influence_rank(train: &Dataset, candidate_ids: &[VariableId], binning: &BinningPolicy) -> Result<Vec<(VariableId, Nats)>> {
    if candidate_ids.is_empty() {
        return Err(Error::Invalid("no candidate variables".into()));
    }
    let mut ranked = candidate_ids
        .iter()
        .map(|&id| {
            let table = build_table(train, &[id], binning)?;
            Ok((id, info::conditional_entropy(&table, &[id])?))
        })
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| a.1.value().total_cmp(&b.1.value()).then(a.0.cmp(&b.0)));
    Ok(ranked)
}

/// Copy of `train` with column `dim` replaced by i.i.d. `U(0, 1)` draws.
pub fn balance_substitute(train: &VectorSet, dim: usize, seed: u64) -> Result<VectorSet> {
    if dim >= train.dim() {
        return Err(Error::BadVariable(format!("dimension {dim} out of range")));
    }
    let mut rng = rng::derive(seed, dim as u64, "balance");
    let mut out = train.clone();
    for i in 0..out.len() {
        out.row_mut(i)[dim] = rng.random::<f64>();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarTgConfig {
    /// Balancing continues while the most influential remaining candidate
    /// has `H_S(Y | G) <= threshold`.
    pub threshold: Nats,
    pub max_rounds: usize,
    pub binning: BinningPolicy,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub chosen_id: VariableId,
    pub h_before: Nats,
    pub h_after: Nats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarTgOutcome {
    pub model: LinearModel,
    pub balanced_ids: Vec<VariableId>,
    pub log: Vec<RoundRecord>,
    pub train: VectorSet,
}

impl InvarTgOutcome {
    pub const LOG_HEADER: &'static str = "round,chosen_id,h_before,h_after";

    pub fn write_log_csv<W: std::io::Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", Self::LOG_HEADER)?;
        for r in &self.log {
            writeln!(
                out,
                "{},{},{},{}",
                r.round,
                r.chosen_id,
                r.h_before.value(),
                r.h_after.value()
            )?;
        }
        Ok(())
    }
}

fn conditional_entropy_of(data: &VectorSet, id: VariableId, binning: &BinningPolicy) -> Result<Nats> {
    let ds = as_dataset(data, 0)?;
    let table = build_table(&ds, &[id], binning)?;
    info::conditional_entropy(&table, &[id])
}

pub fn invar_tg(
    train: &VectorSet,
    candidate_ids: &[VariableId],
    config: &InvarTgConfig,
    trainer: &TrainConfig,
) -> Result<InvarTgOutcome> {
    if candidate_ids.is_empty() {
        return Err(Error::Invalid("no candidate variables".into()));
    }
    let mut current = train.clone();
    let mut remaining = candidate_ids.to_vec();
    remaining.sort_unstable();
    remaining.dedup();
    let mut log = Vec::new();
    while !remaining.is_empty() && log.len() < config.max_rounds {
        let ranked = influence_rank(&as_dataset(&current, 0)?, &remaining, &config.binning)?;
        let (chosen, h_before) = ranked[0];
        if h_before.value() > config.threshold.value() {
            break;
        }
        current = balance_substitute(&current, chosen, rng::derive_seed(config.seed, log.len() as u64, "invartg"))?;
        let h_after = conditional_entropy_of(&current, chosen, &config.binning)?;
        log.push(RoundRecord {
            round: log.len(),
            chosen_id: chosen,
            h_before,
            h_after,
        });
        remaining.retain(|&id| id != chosen);
    }
    let model = models::train(&current, trainer)?.model;
    Ok(InvarTgOutcome {
        model,
        balanced_ids: log.iter().map(|r| r.chosen_id).collect(),
        log,
        train: current,
    })
}
