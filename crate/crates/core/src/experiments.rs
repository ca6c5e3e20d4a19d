//! Runners behind the command-line experiments. Every run derives its
//! randomness from `(base seed, run index, purpose)`, so results do not
//! depend on scheduling; fan-out uses the ambient rayon pool.

use rayon::prelude::*;

use crate::augment::{self, AugmentDistribution, ErasingGeometry, GridTask, PositionLaw};
use crate::error::{Error, Result};
use crate::gv::BinningPolicy;
use crate::models::{self, TrainConfig, VectorSet};
use crate::rng;
use crate::synth::{self, ToySpec};
use crate::theory::BoundReport;
use crate::info::Nats;

/// Spearman correlation of two rank vectors (ranks already assigned).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        cov += (x - mean) * (y - mean);
        va += (x - mean).powi(2);
        vb += (y - mean).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va * vb).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyProtocol {
    pub dims: usize,
    pub task_correlated_dims: usize,
    pub per_class: usize,
    pub train: TrainConfig,
    pub binning: BinningPolicy,
    /// How many of the most influential dims get balanced.
    pub balance_top: usize,
}

impl Default for ToyProtocol {
    fn default() -> Self {
        ToyProtocol {
            dims: 20,
            task_correlated_dims: 10,
            per_class: 5000,
            train: TrainConfig::default(),
            binning: BinningPolicy::default(),
            balance_top: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceRow {
    pub dataset: usize,
    pub dim: usize,
    pub h_cond: f64,
    pub abs_weight: f64,
    /// 1 = lowest conditional entropy.
    pub rank_est: usize,
    /// 1 = largest absolute weight.
    pub rank_true: usize,
}

impl InfluenceRow {
    pub const CSV_HEADER: &'static str = "dataset,dim,h_cond,abs_weight,rank_est,rank_true";
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceRow {
    pub dataset: usize,
    pub dim: usize,
    pub w_before: f64,
    pub w_after: f64,
    pub acc_before: f64,
    pub acc_after: f64,
}

impl BalanceRow {
    pub const CSV_HEADER: &'static str = "dataset,dim,w_before,w_after,acc_before,acc_after";
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyRun {
    pub influence: Vec<InfluenceRow>,
    pub balance: Vec<BalanceRow>,
    pub spearman: f64,
}

fn accuracy(model: &models::LinearModel, data: &VectorSet) -> Result<f64> {
    Ok(1.0 - models::risk(model, data)?.zero_one_error)
}

/// One toy dataset: generate, train, rank the task-uncorrelated dims, and
/// optionally balance the top-ranked ones and retrain.
pub fn run_toy_dataset(protocol: &ToyProtocol, seed: u64, index: usize, balance: bool) -> Result<ToyRun> {
    let data_seed = rng::derive_seed(seed, index as u64, "toy-dataset");
    let spec = ToySpec::random(protocol.dims, protocol.task_correlated_dims, 2, protocol.per_class, data_seed);
    let data = synth::generate_toy(&spec)?;
    let trainer = TrainConfig {
        seed: rng::derive_seed(seed, index as u64, "toy-train"),
        ..protocol.train.clone()
    };
    let model = models::train(&data.train, &trainer)?.model;

    let candidates: Vec<usize> = (protocol.task_correlated_dims..protocol.dims).collect();
    let ds = synth::as_dataset(&data.train, protocol.task_correlated_dims)?;
    let ranked = synth::influence_rank(&ds, &candidates, &protocol.binning)?;
    let mut by_weight = candidates.clone();
    by_weight.sort_by(|&a, &b| model.abs_weight(b).total_cmp(&model.abs_weight(a)).then(a.cmp(&b)));

    let influence: Vec<InfluenceRow> = ranked
        .iter()
        .enumerate()
        .map(|(r, &(dim, h))| InfluenceRow {
            dataset: index,
            dim,
            h_cond: h.value(),
            abs_weight: model.abs_weight(dim),
            rank_est: r + 1,
            rank_true: by_weight.iter().position(|&d| d == dim).unwrap() + 1,
        })
        .collect();
    let est: Vec<f64> = influence.iter().map(|r| r.rank_est as f64).collect();
    let truth: Vec<f64> = influence.iter().map(|r| r.rank_true as f64).collect();
    let rho = spearman(&est, &truth);

    let mut rows = Vec::new();
    if balance {
        let acc_before = accuracy(&model, &data.test)?;
        let balance_seed = rng::derive_seed(seed, index as u64, "toy-balance");
        for &(dim, _) in ranked.iter().take(protocol.balance_top) {
            let balanced = synth::balance_substitute(&data.train, dim, balance_seed)?;
            let after = models::train(&balanced, &trainer)?.model;
            rows.push(BalanceRow {
                dataset: index,
                dim,
                w_before: model.abs_weight(dim),
                w_after: after.abs_weight(dim),
                acc_before,
                acc_after: accuracy(&after, &data.test)?,
            });
        }
    }
    Ok(ToyRun {
        influence,
        balance: rows,
        spearman: rho,
    })
}

pub fn run_toy(protocol: &ToyProtocol, seed: u64, datasets: usize, balance: bool) -> Result<Vec<ToyRun>> {
    if datasets == 0 {
        return Err(Error::Invalid("datasets must be at least 1".into()));
    }
    (0..datasets)
        .into_par_iter()
        .map(|i| run_toy_dataset(protocol, seed, i, balance))
        .collect()
}

pub fn write_influence_csv<W: std::io::Write>(runs: &[ToyRun], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", InfluenceRow::CSV_HEADER)?;
    for r in runs.iter().flat_map(|r| &r.influence) {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.dataset, r.dim, r.h_cond, r.abs_weight, r.rank_est, r.rank_true
        )?;
    }
    Ok(())
}

pub fn write_balance_csv<W: std::io::Write>(runs: &[ToyRun], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", BalanceRow::CSV_HEADER)?;
    for r in runs.iter().flat_map(|r| &r.balance) {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.dataset, r.dim, r.w_before, r.w_after, r.acc_before, r.acc_after
        )?;
    }
    Ok(())
}

pub fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Averages over datasets, per balance position (1st, 2nd, 3rd most
/// influential dim).
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceSummary {
    pub position: usize,
    pub w_before: f64,
    pub w_after: f64,
    pub acc_before: f64,
    pub acc_after: f64,
}

pub fn summarize_balance(runs: &[ToyRun]) -> Vec<BalanceSummary> {
    let top = runs.iter().map(|r| r.balance.len()).max().unwrap_or(0);
    (0..top)
        .map(|p| {
            let rows: Vec<&BalanceRow> = runs.iter().filter_map(|r| r.balance.get(p)).collect();
            BalanceSummary {
                position: p + 1,
                w_before: mean(rows.iter().map(|r| r.w_before)),
                w_after: mean(rows.iter().map(|r| r.w_after)),
                acc_before: mean(rows.iter().map(|r| r.acc_before)),
                acc_after: mean(rows.iter().map(|r| r.acc_after)),
            }
        })
        .collect()
}

/// Every combination of the grids; an empty `gamma` list gives
/// generalization-gap-only rows.
pub fn bound_grid(t: &[u64], k: &[u64], n: &[u64], delta: &[f64], gamma: &[f64]) -> Result<Vec<BoundReport>> {
    if t.is_empty() || k.is_empty() || n.is_empty() || delta.is_empty() {
        return Err(Error::Invalid("T, K, n and delta grids must be nonempty".into()));
    }
    let gammas: Vec<Option<Nats>> = if gamma.is_empty() {
        vec![None]
    } else {
        gamma.iter().map(|&g| Nats::new(g).map(Some)).collect::<Result<_>>()?
    };
    let mut out = Vec::new();
    for &t in t {
        for &k in k {
            for &n in n {
                for &d in delta {
                    for &g in &gammas {
                        out.push(BoundReport::evaluate(t, k, n, d, g)?);
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentProtocol {
    pub task: GridTask,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Erased copies of every training grid.
    pub copies: usize,
    pub train: TrainConfig,
    pub repeats: usize,
    pub geometry: ErasingGeometry,
    /// Per-label overrides of the label-dependent intervals.
    pub label_intervals: Vec<([f64; 2], [f64; 2])>,
}

impl Default for AugmentProtocol {
    fn default() -> Self {
        AugmentProtocol {
            task: GridTask::standard(),
            train_per_class: 100,
            test_per_class: 50,
            copies: 4,
            train: TrainConfig {
                learning_rate: 0.05,
                momentum: 0.9,
                batch_size: 64,
                epochs: 20,
                seed: 0,
                shuffle: true,
            },
            repeats: 100,
            geometry: ErasingGeometry::default(),
            label_intervals: augment::DEFAULT_LABEL_INTERVALS.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentRow {
    pub alpha: f64,
    pub law: PositionLaw,
    pub changing_ratio: f64,
    pub test_error: f64,
    pub seed: u64,
}

impl AugmentRow {
    pub const CSV_HEADER: &'static str = "alpha,law,changing_ratio,test_error,seed";
}

impl AugmentProtocol {
    pub fn distribution(&self, alpha: f64, law: PositionLaw) -> AugmentDistribution {
        AugmentDistribution {
            alpha,
            label_intervals: self.label_intervals.clone(),
            position_law: law,
            geometry: self.geometry,
        }
    }
}

/// Trains on erased copies drawn from `P_alpha` with the given position law,
/// then reports clean test error and the prediction changing ratio under the
/// label-independent law with the same positions.
///
/// Data, erasing noise and evaluation noise depend only on `seed`, so cells
/// that share a seed are paired.
pub fn run_augment_cell(protocol: &AugmentProtocol, alpha: f64, law: PositionLaw, seed: u64) -> Result<AugmentRow> {
    let dist = protocol.distribution(alpha, law);
    dist.validate()?;
    let k = protocol.task.classes;
    let (train_grids, train_labels) = protocol
        .task
        .sample(protocol.train_per_class, &mut rng::derive(seed, 0, "grid-train"));
    let (test_grids, test_labels) = protocol
        .task
        .sample(protocol.test_per_class, &mut rng::derive(seed, 0, "grid-test"));

    let mut erase_rng = rng::derive(seed, 0, "grid-augment");
    let mut grids = Vec::with_capacity(train_grids.len() * protocol.copies);
    let mut labels = Vec::with_capacity(grids.capacity());
    for _ in 0..protocol.copies {
        for (g, &y) in train_grids.iter().zip(&train_labels) {
            let params = augment::sample_params(&dist, y, &mut erase_rng)?;
            grids.push(augment::apply_erasing(g, &params, &dist.geometry, &mut erase_rng));
            labels.push(y);
        }
    }
    let train = augment::to_vector_set(&grids, &labels, k)?;
    let trainer = TrainConfig {
        seed: rng::derive_seed(seed, 0, "grid-sgd"),
        ..protocol.train.clone()
    };
    let model = models::train_with_head(&train, &trainer, models::Head::Softmax)?.model;

    let test = augment::to_vector_set(&test_grids, &test_labels, k)?;
    let test_error = models::risk(&model, &test)?.zero_one_error;
    let probe = protocol.distribution(0.0, law);
    let changing_ratio = augment::prediction_changing_ratio(
        &model,
        &test_grids,
        &probe,
        &test_labels,
        protocol.repeats,
        rng::derive_seed(seed, 0, "grid-probe"),
    )?;
    Ok(AugmentRow {
        alpha,
        law,
        changing_ratio,
        test_error,
        seed,
    })
}

/// Rows ordered by seed, then alpha, then law. Seeds are `base, base + 1, ...`.
pub fn run_augment_sweep(
    protocol: &AugmentProtocol,
    alphas: &[f64],
    laws: &[PositionLaw],
    base_seed: u64,
    seeds: usize,
) -> Result<Vec<AugmentRow>> {
    if alphas.is_empty() || laws.is_empty() || seeds == 0 {
        return Err(Error::Invalid("alphas, laws and seeds must be nonempty".into()));
    }
    let cells: Vec<(u64, f64, PositionLaw)> = (0..seeds as u64)
        .flat_map(|s| {
            let seed = base_seed.wrapping_add(s);
            alphas
                .iter()
                .flat_map(move |&a| laws.iter().map(move |&l| (seed, a, l)))
        })
        .collect();
    cells
        .into_par_iter()
        .map(|(seed, alpha, law)| run_augment_cell(protocol, alpha, law, seed))
        .collect()
}

pub fn write_augment_csv<W: std::io::Write>(rows: &[AugmentRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{}", AugmentRow::CSV_HEADER)?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.alpha,
            r.law.name(),
            r.changing_ratio,
            r.test_error,
            r.seed
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_extremes() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&a, &a) - 1.0).abs() < 1e-15);
        assert!((spearman(&a, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        // 1 - 6 * 2 / (4 * 15)
        assert!((spearman(&a, &[2.0, 1.0, 3.0, 4.0]) - 0.8).abs() < 1e-12);
    }

    fn small_toy() -> ToyProtocol {
        ToyProtocol {
            per_class: 400,
            train: TrainConfig {
                batch_size: 64,
                epochs: 10,
                ..TrainConfig::default()
            },
            ..ToyProtocol::default()
        }
    }

    #[test]
    fn toy_run_ranks_every_uncorrelated_dim_once() {
        let run = run_toy_dataset(&small_toy(), 3, 0, true).unwrap();
        assert_eq!(run.influence.len(), 10);
        let mut est: Vec<usize> = run.influence.iter().map(|r| r.rank_est).collect();
        let mut truth: Vec<usize> = run.influence.iter().map(|r| r.rank_true).collect();
        est.sort_unstable();
        truth.sort_unstable();
        assert_eq!(est, (1..=10).collect::<Vec<_>>());
        assert_eq!(truth, (1..=10).collect::<Vec<_>>());
        assert!(run.influence.iter().all(|r| r.dim >= 10));
        assert_eq!(run.balance.len(), 3);
        assert_eq!(run.balance[0].dim, run.influence[0].dim);
        assert!((-1.0..=1.0).contains(&run.spearman));
    }

    #[test]
    fn toy_runs_are_reproducible() {
        let p = small_toy();
        let a = run_toy(&p, 1, 2, false).unwrap();
        let b = run_toy(&p, 1, 2, false).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn bound_grid_shape() {
        let rows = bound_grid(&[2], &[2], &[100, 1000], &[0.05], &[]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows[0].thm1_gap > rows[1].thm1_gap);
        assert!(rows.iter().all(|r| r.thm2_excess.is_none()));
        let rows = bound_grid(&[2], &[2], &[100], &[0.05], &[0.0, 0.1]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(bound_grid(&[2], &[2], &[100], &[1.5], &[]).is_err());
        assert!(bound_grid(&[], &[2], &[100], &[0.5], &[]).is_err());
    }

    #[test]
    fn augment_sweep_grid_contract() {
        let protocol = AugmentProtocol {
            train_per_class: 10,
            test_per_class: 5,
            copies: 1,
            repeats: 3,
            train: TrainConfig {
                batch_size: 20,
                epochs: 2,
                ..AugmentProtocol::default().train
            },
            ..AugmentProtocol::default()
        };
        let rows = run_augment_sweep(&protocol, &[0.0, 0.5, 1.0], &PositionLaw::ALL, 7, 2).unwrap();
        assert_eq!(rows.len(), 2 * 3 * 3);
        assert_eq!(rows[0].seed, 7);
        assert_eq!(rows[9].seed, 8);
        assert_eq!((rows[4].alpha, rows[4].law), (0.5, PositionLaw::PeripheryM0));
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.changing_ratio)));
        let again = run_augment_sweep(&protocol, &[0.0, 0.5, 1.0], &PositionLaw::ALL, 7, 2).unwrap();
        assert_eq!(rows, again);
    }
}
