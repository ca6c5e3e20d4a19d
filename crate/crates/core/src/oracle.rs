//! Numerical cross-entropy minimization over per-configuration simplices.
//!
//! This is a check path only: it never reads the closed-form outputs and is
//! compared against them by the property sweeps.

use std::collections::BTreeMap;

use crate::gv::{ExemplarTable, VariableId};
use crate::error::Result;

#[derive(Debug, Clone, Copy)]
pub struct PgdConfig {
    pub step: f64,
    pub iterations: usize,
}

impl Default for PgdConfig {
    fn default() -> Self {
        PgdConfig {
            step: 0.1,
            iterations: 10_000,
        }
    }
}

/// Euclidean projection onto the probability simplex (sort and shift).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

fn cross_entropy(counts: &[u64], q: &[f64]) -> f64 {
    counts
        .iter()
        .zip(q)
        .filter(|(&c, _)| c > 0)
        .map(|(&c, &p)| if p > 0.0 { -(c as f64) * p.ln() } else { f64::INFINITY })
        .sum()
}

/// Minimizes `-sum_y n_y log q_y` over the simplex, starting from uniform.
///
/// Steps start at `config.step` and are halved until the objective does not
/// increase; a fixed step diverges when some label frequency is below
/// `step / 2`.
pub fn minimize_row(counts: &[u64], config: &PgdConfig) -> Vec<f64> {
    let k = counts.len();
    let total: u64 = counts.iter().sum();
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    let mut q = vec![1.0 / k as f64; k];
    let mut f = cross_entropy(counts, &q);
    for _ in 0..config.iterations {
        let grad: Vec<f64> = weights
            .iter()
            .zip(&q)
            .map(|(&w, &p)| if w > 0.0 { -w / p } else { 0.0 })
            .collect();
        let mut step = config.step;
        let mut accepted = None;
        while step > 1e-18 {
            let trial: Vec<f64> = q.iter().zip(&grad).map(|(p, g)| p - step * g).collect();
            let trial = project_simplex(&trial);
            let ft = cross_entropy(counts, &trial);
            if ft <= f {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((next, fnext)) => {
                let moved: f64 = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum();
                q = next;
                f = fnext;
                if moved < 1e-15 {
                    break;
                }
            }
            None => break,
        }
    }
    q
}

/// Runs [`minimize_row`] for every observed configuration of `determining_ids`.
pub fn minimize_cross_entropy(
    table: &ExemplarTable,
    determining_ids: &[VariableId],
    config: &PgdConfig,
) -> Result<BTreeMap<Vec<u32>, Vec<f64>>> {
    let marg = table.marginalize(determining_ids)?;
    Ok(marg
        .rows()
        .map(|(cfg, counts)| (cfg.to_vec(), minimize_row(counts, config)))
        .collect())
}
