//! Brute-force and randomized sweeps that compare the closed forms in
//! [`crate::theory`] and [`crate::info`] against independent routes.

use std::fmt::Write as _;

use rand::Rng as _;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::Result;
use crate::gv::ExemplarTable;
use crate::info::{self, Column, Nats, Over};
use crate::oracle::{self, PgdConfig};
use crate::rng::{self, Rng};
use crate::theory::{self, OptimalOutputs};

pub type OptimalFn = fn(&ExemplarTable, &[usize]) -> Result<OptimalOutputs>;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub cases: u64,
    pub violations: u64,
    /// Largest observed deviation in the direction that would violate the check.
    pub max_deviation: f64,
    pub tolerance: f64,
    /// First offending case, serialized.
    pub counterexample: Option<String>,
}

impl CheckOutcome {
    fn new(name: &'static str, tolerance: f64) -> Self {
        CheckOutcome {
            name,
            cases: 0,
            violations: 0,
            max_deviation: 0.0,
            tolerance,
            counterexample: None,
        }
    }

    fn record(&mut self, deviation: f64, violated: bool, case: impl FnOnce() -> String) {
        self.cases += 1;
        if deviation > self.max_deviation || deviation.is_nan() {
            self.max_deviation = deviation;
        }
        if violated {
            self.violations += 1;
            if self.counterexample.is_none() {
                self.counterexample = Some(case());
            }
        }
    }

    fn merge(mut self, other: CheckOutcome) -> CheckOutcome {
        self.cases += other.cases;
        self.violations += other.violations;
        self.max_deviation = self.max_deviation.max(other.max_deviation);
        if self.counterexample.is_none() {
            self.counterexample = other.counterexample;
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.violations == 0 && self.cases > 0
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub seed: u64,
    pub lemma1_draws: usize,
    pub thm4_tables: usize,
    pub cor2_tables: usize,
    pub thm5_tables: usize,
    pub thm3_laws: usize,
    pub chain_tables: usize,
    pub optimal: OptimalFn,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions {
            seed: 0,
            lemma1_draws: 100_000,
            thm4_tables: 200,
            cor2_tables: 500,
            thm5_tables: 100,
            thm3_laws: 8,
            chain_tables: 200,
            optimal: theory::optimal_outputs,
        }
    }
}

pub fn run_suite(opts: &SuiteOptions) -> Vec<CheckOutcome> {
    vec![
        lemma1_sweep(opts.seed, opts.lemma1_draws),
        lemma1_tightness(),
        thm1_grid(),
        thm1_monotone(),
        thm4_oracle(opts.seed, opts.thm4_tables, opts.optimal),
        cor2_equality(opts.seed, opts.cor2_tables, opts.optimal),
        thm5_independent(opts.seed, opts.thm5_tables),
        cor1_dependent(opts.seed, opts.thm5_tables),
        thm3_addition_rule(opts.seed, opts.thm3_laws),
        thm3_chain_decomposition(opts.seed, opts.thm3_laws),
        info_chain_rule(opts.seed, opts.chain_tables),
    ]
}

pub fn write_report<W: std::io::Write>(outcomes: &[CheckOutcome], mut out: W) -> std::io::Result<()> {
    writeln!(out, "check,passed,cases,violations,max_deviation,tolerance,counterexample")?;
    for o in outcomes {
        let ce = o.counterexample.as_deref().unwrap_or("").replace(',', ";");
        writeln!(
            out,
            "{},{},{},{},{:.6e},{:e},{}",
            o.name,
            o.passed(),
            o.cases,
            o.violations,
            o.max_deviation,
            o.tolerance,
            ce
        )?;
    }
    Ok(())
}

/// A random label distribution: Dirichlet(1) on a random support.
pub fn random_distribution(rng: &mut Rng, k: usize) -> Vec<f64> {
    let support = rng.random_range(1..=k);
    let mut p: Vec<f64> = (0..k)
        .map(|i| if i < support { Exp1.sample(rng) } else { 0.0 })
        .collect();
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

pub fn distribution_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

const SHARDS: usize = 16;

pub fn lemma1_sweep(seed: u64, draws: usize) -> CheckOutcome {
    let tol = 1e-12;
    (0..SHARDS)
        .into_par_iter()
        .map(|shard| {
            let mut rng = rng::derive(seed, shard as u64, "lemma1");
            let mut out = CheckOutcome::new("lemma1_max_probability", tol);
            let n = draws / SHARDS + usize::from(shard < draws % SHARDS);
            for _ in 0..n {
                let k = rng.random_range(2..=10);
                let p = random_distribution(&mut rng, k);
                let h = distribution_entropy(&p);
                let max_p = p.iter().copied().fold(0.0, f64::max);
                let dev = theory::lemma1_lower_bound(Nats::clamped(h)) - max_p;
                out.record(dev, dev > tol, || format!("p={p:?}"));
            }
            out
        })
        .reduce(|| CheckOutcome::new("lemma1_max_probability", tol), CheckOutcome::merge)
}

pub fn lemma1_tightness() -> CheckOutcome {
    let mut out = CheckOutcome::new("lemma1_binary_tightness", 1e-12);
    for k in 2..=10 {
        let mut p = vec![0.0; k];
        p[0] = 0.5;
        p[1] = 0.5;
        let bound = theory::lemma1_lower_bound(Nats::clamped(distribution_entropy(&p)));
        let dev = (bound - 0.5).abs();
        out.record(dev, dev > 1e-12, || format!("k={k} bound={bound}"));
    }
    out
}

/// Reference values of the uniform-deviation bound, from the closed form
/// evaluated with 30-digit arithmetic.
pub const THM1_REFERENCE: &[(u64, u64, u64, f64, f64)] = &[
    (2, 2, 1000, 0.05, 0.107_408_761),
    (1, 2, 100, 0.1, 0.271_620_303),
    (10, 10, 10_000, 0.01, 0.121_589_381),
    (4, 3, 500, 0.5, 0.189_851_662),
];

pub fn thm1_grid() -> CheckOutcome {
    let mut out = CheckOutcome::new("thm1_reference_grid", 1e-6);
    for &(t, k, n, delta, expected) in THM1_REFERENCE {
        let got = theory::thm1_bound(t, k, n, delta).unwrap_or(f64::NAN);
        let dev = (got - expected).abs();
        out.record(dev, !(dev <= 1e-6), || format!("T={t} K={k} n={n} delta={delta} got={got}"));
    }
    out
}

pub const GRID_T: [u64; 5] = [1, 2, 4, 8, 16];
pub const GRID_K: [u64; 5] = [2, 3, 5, 10, 100];
pub const GRID_N: [u64; 5] = [10, 100, 1000, 10_000, 100_000];
pub const GRID_DELTA: [f64; 5] = [0.001, 0.01, 0.05, 0.1, 0.5];

pub fn thm1_monotone() -> CheckOutcome {
    let mut out = CheckOutcome::new("thm1_monotonicity", 0.0);
    let b = |t, k, n, d| theory::thm1_bound(t, k, n, d).unwrap_or(f64::NAN);
    for (ti, &t) in GRID_T.iter().enumerate() {
        for (ki, &k) in GRID_K.iter().enumerate() {
            for (ni, &n) in GRID_N.iter().enumerate() {
                for (di, &d) in GRID_DELTA.iter().enumerate() {
                    let here = b(t, k, n, d);
                    let mut worst = f64::NEG_INFINITY;
                    if ti + 1 < 5 {
                        worst = worst.max(here - b(GRID_T[ti + 1], k, n, d));
                    }
                    if ki + 1 < 5 {
                        worst = worst.max(here - b(t, GRID_K[ki + 1], n, d));
                    }
                    if ni + 1 < 5 {
                        worst = worst.max(b(t, k, GRID_N[ni + 1], d) - here);
                    }
                    if di + 1 < 5 {
                        worst = worst.max(b(t, k, n, GRID_DELTA[di + 1]) - here);
                    }
                    let dev = worst.max(0.0);
                    out.record(dev, !(worst < 0.0), || {
                        format!("T={t} K={k} n={n} delta={d}")
                    });
                }
            }
        }
    }
    out
}

/// A random table over at most `max_configs` configurations of up to three
/// variables, with `2..=max_k` labels and cell counts in `0..=max_count`.
pub fn random_table(rng: &mut Rng, max_configs: u32, max_k: usize, max_count: u64) -> ExemplarTable {
    let m = rng.random_range(1..=3usize);
    let cards: Vec<u32> = loop {
        let c: Vec<u32> = (0..m).map(|_| rng.random_range(1..=4)).collect();
        if c.iter().product::<u32>() <= max_configs {
            break c;
        }
    };
    let k = rng.random_range(2..=max_k);
    let mut entries = Vec::new();
    for config in configurations(&cards) {
        for y in 0..k {
            entries.push((config.clone(), y, rng.random_range(0..=max_count)));
        }
    }
    if entries.iter().all(|e| e.2 == 0) {
        let i = rng.random_range(0..entries.len());
        entries[i].2 = 1;
    }
    ExemplarTable::from_counts((0..m).collect(), cards, k, entries).expect("valid random table")
}

/// All configurations of the given cardinalities in lexicographic order.
pub fn configurations(cards: &[u32]) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for &c in cards {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..c).map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out
}

fn describe(table: &ExemplarTable) -> String {
    let mut s = format!("cards={:?} K={} counts=", table.cardinalities(), table.num_labels());
    for (config, labels) in table.rows() {
        let _ = write!(s, "{config:?}:{labels:?} ");
    }
    s.trim_end().to_string()
}

pub fn thm4_oracle(seed: u64, tables: usize, optimal: OptimalFn) -> CheckOutcome {
    let tol = 1e-4;
    let pgd = PgdConfig::default();
    (0..tables)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::derive(seed, i as u64, "thm4");
            let table = random_table(&mut rng, 8, 4, 16);
            let ids: Vec<usize> = table.variable_ids().to_vec();
            let mut out = CheckOutcome::new("thm4_cross_entropy_optimum", tol);
            let numeric = oracle::minimize_cross_entropy(&table, &ids, &pgd).expect("oracle");
            match optimal(&table, &ids) {
                Ok(closed) => {
                    for (config, q) in &numeric {
                        let dev = closed
                            .get(config)
                            .map(|c| theory::total_variation(c, q))
                            .unwrap_or(f64::INFINITY);
                        out.record(dev, !(dev <= tol), || {
                            format!("{} config={config:?} numeric={q:?}", describe(&table))
                        });
                    }
                }
                Err(e) => out.record(f64::INFINITY, true, || format!("{}: {e}", describe(&table))),
            }
            out
        })
        .reduce(|| CheckOutcome::new("thm4_cross_entropy_optimum", tol), CheckOutcome::merge)
}

pub fn cor2_equality(seed: u64, tables: usize, optimal: OptimalFn) -> CheckOutcome {
    let tol = 1e-12;
    let mut out = CheckOutcome::new("cor2_training_error", tol);
    for i in 0..tables {
        let mut rng = rng::derive(seed, i as u64, "cor2");
        let table = random_table(&mut rng, 8, 4, 16);
        let ids = table.variable_ids().to_vec();
        let direct = theory::majority_vote_mistakes(&table, &ids).expect("counts");
        let direct = direct.0 as f64 / direct.1 as f64;
        let estimated = optimal(&table, &ids).and_then(|o| theory::estimated_training_error(&o, &table));
        let dev = estimated.map(|e| (e - direct).abs()).unwrap_or(f64::INFINITY);
        out.record(dev, !(dev <= tol), || format!("{} direct={direct}", describe(&table)));
    }
    out
}

/// Table over `(G_rest, G_t)` whose counts are the outer product of a random
/// `(G_rest, Y)` table and random `G_t` weights.
pub fn product_table(rng: &mut Rng) -> ExemplarTable {
    let rest_card = rng.random_range(1..=4u32);
    let t_card = rng.random_range(2..=4u32);
    let k = rng.random_range(2..=4usize);
    let joint: Vec<Vec<u64>> = (0..rest_card)
        .map(|_| (0..k).map(|_| rng.random_range(0..=16)).collect())
        .collect();
    let weights: Vec<u64> = (0..t_card).map(|_| rng.random_range(1..=8)).collect();
    let mut entries = Vec::new();
    for (r, row) in joint.iter().enumerate() {
        for (y, &c) in row.iter().enumerate() {
            for (t, &w) in weights.iter().enumerate() {
                entries.push((vec![r as u32, t as u32], y, c * w));
            }
        }
    }
    if entries.iter().all(|e| e.2 == 0) {
        for (t, &w) in weights.iter().enumerate() {
            entries.push((vec![0, t as u32], 0, w));
        }
    }
    ExemplarTable::from_counts(vec![0, 1], vec![rest_card, t_card], k, entries).expect("product table")
}

/// Table over `(G_rest, G_t)` where the label equals `G_t`.
pub fn label_copy_table(rng: &mut Rng) -> ExemplarTable {
    let rest_card = rng.random_range(1..=4u32);
    let t_card = rng.random_range(2..=4u32);
    let mut entries = Vec::new();
    for r in 0..rest_card {
        for t in 0..t_card {
            entries.push((vec![r, t], t as usize, rng.random_range(1..=16)));
        }
    }
    ExemplarTable::from_counts(vec![0, 1], vec![rest_card, t_card], t_card as usize, entries)
        .expect("label copy table")
}

pub fn thm5_independent(seed: u64, tables: usize) -> CheckOutcome {
    let tol = 1e-12;
    let mut out = CheckOutcome::new("thm5_independence_implies_invariance", tol);
    for i in 0..tables {
        let mut rng = rng::derive(seed, i as u64, "thm5");
        let table = product_table(&mut rng);
        let report = theory::check_strict_invariance(&table, &[0, 1], &[1]);
        let dev = report.map(|r| r.max_deviation).unwrap_or(f64::INFINITY);
        out.record(dev, !(dev <= tol), || describe(&table));
    }
    out
}

pub fn cor1_dependent(seed: u64, tables: usize) -> CheckOutcome {
    let mut out = CheckOutcome::new("cor1_dependence_detected", 0.0);
    for i in 0..tables {
        let mut rng = rng::derive(seed, i as u64, "cor1");
        let table = label_copy_table(&mut rng);
        let invariant = theory::check_strict_invariance(&table, &[0, 1], &[1])
            .map(|r| r.is_invariant)
            .unwrap_or(true);
        out.record(0.0, invariant, || describe(&table));
    }
    out
}

/// Prediction tables for every deterministic binary hypothesis over three
/// binary variables, under `laws` random joint laws each.
fn for_each_hypothesis(seed: u64, laws: usize, mut f: impl FnMut(&ExemplarTable, &[usize], &[usize], u8)) {
    let configs = configurations(&[2, 2, 2]);
    for law in 0..laws {
        let mut rng = rng::derive(seed, law as u64, "thm3");
        let weights: Vec<u64> = configs.iter().map(|_| rng.random_range(1..=16)).collect();
        for h in 0..=255u8 {
            let entries = configs.iter().enumerate().map(|(i, c)| (c.clone(), ((h >> i) & 1) as usize, weights[i]));
            let table = ExemplarTable::from_counts(vec![0, 1, 2], vec![2, 2, 2], 2, entries).expect("table");
            for mask in 0..8u8 {
                let gy: Vec<usize> = (0..3).filter(|b| mask >> b & 1 == 1).collect();
                let gu: Vec<usize> = (0..3).filter(|b| mask >> b & 1 == 0).collect();
                f(&table, &gy, &gu, h);
            }
        }
    }
}

pub fn thm3_addition_rule(seed: u64, laws: usize) -> CheckOutcome {
    let tol = 1e-10;
    let mut out = CheckOutcome::new("thm3_addition_rule", tol);
    for_each_hypothesis(seed, laws, |table, gy, gu, h| match theory::addition_rule_gamma(table, gy, gu) {
        Ok(r) => {
            let dev = r.h_pred_given_gy.value() - r.gamma_sum.value();
            out.record(dev, !r.holds(tol), || {
                format!(
                    "hypothesis={h:08b} gy={gy:?} gu={gu:?} gamma_sum={} h_pred_given_gy={} {}",
                    r.gamma_sum.value(),
                    r.h_pred_given_gy.value(),
                    describe(table)
                )
            });
        }
        Err(e) => out.record(f64::INFINITY, true, || format!("hypothesis={h:08b}: {e}")),
    });
    out
}

pub fn thm3_chain_decomposition(seed: u64, laws: usize) -> CheckOutcome {
    let tol = 1e-10;
    let mut out = CheckOutcome::new("thm3_chain_decomposition", tol);
    for_each_hypothesis(seed, laws, |table, gy, gu, h| {
        let dev = theory::addition_rule_gamma(table, gy, gu)
            .map(|r| (r.chain_sum.value() - r.h_pred_given_gy.value()).abs())
            .unwrap_or(f64::INFINITY);
        out.record(dev, !(dev <= tol), || format!("hypothesis={h:08b} gy={gy:?}"));
    });
    out
}

/// `I(Y; G_all) = sum_i I(Y; G_i | G_<i)` and `I(Y;G) = H(Y) - H(Y|G)`.
pub fn info_chain_rule(seed: u64, tables: usize) -> CheckOutcome {
    let tol = 1e-10;
    let mut out = CheckOutcome::new("info_chain_rule", tol);
    for i in 0..tables {
        let mut rng = rng::derive(seed, i as u64, "chain");
        let m = rng.random_range(1..=4usize);
        let cards: Vec<u32> = (0..m).map(|_| rng.random_range(1..=4)).collect();
        let k = rng.random_range(2..=4usize);
        let mut entries = Vec::new();
        for c in configurations(&cards) {
            for y in 0..k {
                entries.push((c.clone(), y, rng.random_range(0..=9)));
            }
        }
        entries[0].2 += 1;
        let table = ExemplarTable::from_counts((0..m).collect(), cards, k, entries).expect("table");
        let ids: Vec<usize> = (0..m).collect();
        let joint = info::label_information(&table, &ids).expect("mi").value();
        let mut chain = 0.0;
        for j in 0..m {
            chain += info::mutual_information(&table, &[Column::Label], &[Column::Var(j)], &info::vars(&ids[..j]))
                .expect("cmi")
                .value();
        }
        let h = info::entropy(&table, Over::Labels).expect("h").value();
        let hc = info::conditional_entropy(&table, &ids).expect("hc").value();
        let dev = (joint - chain).abs().max(((h - hc) - joint).abs());
        out.record(dev, !(dev <= tol), || describe(&table));
    }
    out
}
