//! Closed-form bounds and exact evaluators for cross-entropy-optimal
//! hypotheses over generative-variable tables.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;
use std::io::Write;

use crate::error::{Error, Result};
use crate::gv::{ExemplarTable, VariableId};
use crate::info::{self, Column, Nats};

/// Maximum deviation tolerated by [`check_strict_invariance`].
pub const INVARIANCE_TOLERANCE: f64 = 1e-9;

fn check_bound_args(t: u64, k: u64, n: u64, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::BadDelta(delta));
    }
    if n == 0 {
        return Err(Error::BadN);
    }
    if t == 0 || k == 0 {
        return Err(Error::Invalid("T and K must be positive".into()));
    }
    Ok(())
}

/// Uniform deviation `|L_S - L_D|` for hypotheses determined by the
/// task-correlated variables: `sqrt(2 (T K ln2 + ln(1/delta)) / n)`.
pub fn thm1_bound(t: u64, k: u64, n: u64, delta: f64) -> Result<f64> {
    check_bound_args(t, k, n, delta)?;
    let tk = t as f64 * k as f64;
    Ok((2.0 * (tk * LN_2 + (1.0 / delta).ln()) / n as f64).sqrt())
}

/// Excess risk over the best in-class hypothesis for a hypothesis leaking
/// `gamma` nats of dependence on task-uncorrelated variables. The uniform
/// convergence term is instantiated with [`thm1_bound`] at half accuracy,
/// so the accuracy term is twice the bound.
pub fn thm2_excess_risk(t: u64, k: u64, n: u64, delta: f64, gamma: Nats) -> Result<f64> {
    Ok(2.0 * thm1_bound(t, k, n, delta)? + gamma.value() / LN_2)
}

/// Lower bound on the largest probability of a distribution with entropy `h_y`.
pub fn lemma1_lower_bound(h_y: Nats) -> f64 {
    (1.0 - h_y.value() / (2.0 * LN_2)).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub t: u64,
    pub k: u64,
    pub n: u64,
    pub delta: f64,
    pub gamma: Option<Nats>,
    pub thm1_gap: f64,
    pub thm2_excess: Option<f64>,
    /// Name of the uniform convergence bound composed into `thm2_excess`.
    pub composed_bound: &'static str,
}

impl BoundReport {
    pub const CSV_HEADER: &'static str = "T,K,n,delta,gamma,thm1_gap,thm2_excess";

    pub fn evaluate(t: u64, k: u64, n: u64, delta: f64, gamma: Option<Nats>) -> Result<Self> {
        let thm1_gap = thm1_bound(t, k, n, delta)?;
        let thm2_excess = gamma.map(|g| thm2_excess_risk(t, k, n, delta, g)).transpose()?;
        Ok(BoundReport {
            t,
            k,
            n,
            delta,
            gamma,
            thm1_gap,
            thm2_excess,
            composed_bound: "thm1",
        })
    }

    pub fn write_csv_row<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let opt = |v: Option<f64>| v.map(|v| format!("{v:.17e}")).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{:.17e},{}",
            self.t,
            self.k,
            self.n,
            self.delta,
            self.gamma.map(|g| g.value().to_string()).unwrap_or_default(),
            self.thm1_gap,
            opt(self.thm2_excess)
        )
    }
}

/// Per-configuration output vectors of the cross-entropy-optimal hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalOutputs {
    pub determining_ids: Vec<VariableId>,
    pub num_labels: usize,
    pub outputs: BTreeMap<Vec<u32>, Vec<f64>>,
}

impl OptimalOutputs {
    pub fn get(&self, config: &[u32]) -> Option<&[f64]> {
        self.outputs.get(config).map(Vec::as_slice)
    }
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn argmax_counts(values: &[u64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// The empirical conditional label distribution for every observed
/// configuration of `determining_ids`.
pub fn optimal_outputs(table: &ExemplarTable, determining_ids: &[VariableId]) -> Result<OptimalOutputs> {
    if table.total() == 0 {
        return Err(Error::EmptyTable);
    }
    let marg = table.marginalize(determining_ids)?;
    let outputs = marg
        .rows()
        .map(|(config, labels)| {
            let row: u64 = labels.iter().sum();
            let probs = labels.iter().map(|&c| c as f64 / row as f64).collect();
            (config.to_vec(), probs)
        })
        .collect();
    Ok(OptimalOutputs {
        determining_ids: determining_ids.to_vec(),
        num_labels: table.num_labels(),
        outputs,
    })
}

fn matching_marginal(opt: &OptimalOutputs, table: &ExemplarTable) -> Result<ExemplarTable> {
    if opt.num_labels != table.num_labels() {
        return Err(Error::TableMismatch(format!(
            "outputs have {} labels, table has {}",
            opt.num_labels,
            table.num_labels()
        )));
    }
    if table.total() == 0 {
        return Err(Error::EmptyTable);
    }
    table
        .marginalize(&opt.determining_ids)
        .map_err(|e| Error::TableMismatch(e.to_string()))
}

/// `1 - E_S[max_y Q'_y]`: the training error predicted from output confidence.
pub fn estimated_training_error(opt: &OptimalOutputs, table: &ExemplarTable) -> Result<f64> {
    let marg = matching_marginal(opt, table)?;
    let n = marg.total() as f64;
    let mut expected_max = 0.0;
    for (config, labels) in marg.rows() {
        let q = opt
            .get(config)
            .ok_or_else(|| Error::TableMismatch(format!("configuration {config:?} has no output")))?;
        let row: u64 = labels.iter().sum();
        expected_max += row as f64 / n * q.iter().copied().fold(0.0, f64::max);
    }
    Ok(1.0 - expected_max)
}

/// Misclassification count and sample count of the argmax predictor built
/// from `opt`, evaluated on `table`.
pub fn argmax_mistakes(opt: &OptimalOutputs, table: &ExemplarTable) -> Result<(u64, u64)> {
    let marg = matching_marginal(opt, table)?;
    let mut mistakes = 0;
    for (config, labels) in marg.rows() {
        let q = opt
            .get(config)
            .ok_or_else(|| Error::TableMismatch(format!("configuration {config:?} has no output")))?;
        let predicted = argmax(q);
        mistakes += labels.iter().sum::<u64>() - labels[predicted];
    }
    Ok((mistakes, marg.total()))
}

/// Training error of the empirical majority-vote predictor, computed from
/// counts alone.
pub fn majority_vote_mistakes(table: &ExemplarTable, determining_ids: &[VariableId]) -> Result<(u64, u64)> {
    let marg = table.marginalize(determining_ids)?;
    let mistakes = marg
        .rows()
        .map(|(_, labels)| labels.iter().sum::<u64>() - labels[argmax_counts(labels)])
        .sum();
    Ok((mistakes, marg.total()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub is_invariant: bool,
    /// Largest total-variation distance between outputs that differ only in
    /// the invariant variables.
    pub max_deviation: f64,
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn check_strict_invariance(
    table: &ExemplarTable,
    determining_ids: &[VariableId],
    invariant_ids: &[VariableId],
) -> Result<InvarianceReport> {
    if let Some(id) = invariant_ids.iter().find(|id| !determining_ids.contains(id)) {
        return Err(Error::BadVariable(format!(
            "invariant variable {id} is not among the determining variables"
        )));
    }
    let opt = optimal_outputs(table, determining_ids)?;
    let rest: Vec<usize> = determining_ids
        .iter()
        .enumerate()
        .filter(|(_, id)| !invariant_ids.contains(id))
        .map(|(i, _)| i)
        .collect();
    let mut groups: BTreeMap<Vec<u32>, Vec<&[f64]>> = BTreeMap::new();
    for (config, q) in &opt.outputs {
        let key = rest.iter().map(|&i| config[i]).collect();
        groups.entry(key).or_default().push(q);
    }
    let mut max_deviation: f64 = 0.0;
    for members in groups.values() {
        for (i, p) in members.iter().enumerate() {
            for q in &members[i + 1..] {
                max_deviation = max_deviation.max(total_variation(p, q));
            }
        }
    }
    Ok(InvarianceReport {
        is_invariant: max_deviation <= INVARIANCE_TOLERANCE,
        max_deviation,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdditionRule {
    /// `sum_i I(Y_hat; G_U^(i) | G_Y)`.
    pub gamma_sum: Nats,
    /// `H(Y_hat | G_Y)`.
    pub h_pred_given_gy: Nats,
    /// The individual terms of `gamma_sum`, in `gu_ids` order.
    pub terms: Vec<(VariableId, Nats)>,
    /// `sum_i I(Y_hat; G_U^(i) | G_Y, G_U^(<i))`, which equals
    /// `H(Y_hat | G_Y)` exactly for a deterministic hypothesis.
    pub chain_sum: Nats,
}

impl AdditionRule {
    pub fn holds(&self, tolerance: f64) -> bool {
        self.gamma_sum.value() >= self.h_pred_given_gy.value() - tolerance
    }
}

/// Evaluates the per-variable dependence terms of a hypothesis whose
/// predictions sit in the label column of `prediction_table`.
///
/// The sum of marginal terms is reported alongside `H(Y_hat | G_Y)` and is
/// *not* guaranteed to dominate it: synergistic hypotheses (parity of two
/// independent variables) have zero marginal terms but positive
/// conditional entropy. Use [`AdditionRule::holds`] to test a case.
pub fn addition_rule_gamma(
    prediction_table: &ExemplarTable,
    gy_ids: &[VariableId],
    gu_ids: &[VariableId],
) -> Result<AdditionRule> {
    if prediction_table.total() == 0 {
        return Err(Error::EmptyTable);
    }
    if gy_ids.iter().any(|id| gu_ids.contains(id)) {
        return Err(Error::OverlappingVariables);
    }
    let covered = gy_ids.len() + gu_ids.len() == prediction_table.variable_ids().len()
        && prediction_table
            .variable_ids()
            .iter()
            .all(|id| gy_ids.contains(id) || gu_ids.contains(id));
    if !covered {
        return Err(Error::BadVariable(
            "task-correlated and task-uncorrelated ids must partition the table".into(),
        ));
    }
    for (config, labels) in prediction_table.rows() {
        if labels.iter().filter(|&&c| c > 0).count() > 1 {
            return Err(Error::NotAHypothesis { config: config.to_vec() });
        }
    }
    let gy = info::vars(gy_ids);
    let pred = [Column::Label];
    let mut terms = Vec::with_capacity(gu_ids.len());
    let mut chain = 0.0;
    let mut given = gy.clone();
    for &id in gu_ids {
        let term = info::mutual_information(prediction_table, &pred, &[Column::Var(id)], &gy)?;
        terms.push((id, term));
        chain += info::mutual_information(prediction_table, &pred, &[Column::Var(id)], &given)?.value();
        given.push(Column::Var(id));
    }
    let gamma_sum = terms.iter().map(|(_, t)| t.value()).sum();
    Ok(AdditionRule {
        gamma_sum: Nats::clamped(gamma_sum),
        h_pred_given_gy: info::conditional_entropy(prediction_table, gy_ids)?,
        terms,
        chain_sum: Nats::clamped(chain),
    })
}
