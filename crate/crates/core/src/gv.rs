//! Generative variables, exemplars and the empirical joint-count tables that
//! every estimator in this crate is built on.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub type VariableId = usize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VariableKind {
    Discrete { cardinality: u32 },
    Continuous { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Correlation {
    TaskCorrelated,
    TaskUncorrelated,
    #[default]
    Unknown,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub id: VariableId,
    pub name: String,
    pub kind: VariableKind,
    pub correlation: Correlation,
}

impl VariableSpec {
    pub fn discrete(id: VariableId, cardinality: u32) -> Self {
        VariableSpec {
            id,
            name: format!("g{id}"),
            kind: VariableKind::Discrete { cardinality },
            correlation: Correlation::Unknown,
        }
    }

    pub fn continuous(id: VariableId, lo: f64, hi: f64) -> Self {
        VariableSpec {
            id,
            name: format!("g{id}"),
            kind: VariableKind::Continuous { lo, hi },
            correlation: Correlation::Unknown,
        }
    }

    pub fn with_correlation(mut self, correlation: Correlation) -> Self {
        self.correlation = correlation;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            VariableKind::Discrete { cardinality } if cardinality == 0 => Err(Error::BadVariable(
                format!("variable {} has zero cardinality", self.id),
            )),
            VariableKind::Continuous { lo, hi } if !(lo < hi) => Err(Error::BadVariable(format!(
                "variable {} has degenerate range [{lo}, {hi}]",
                self.id
            ))),
            _ => Ok(()),
        }
    }

    fn accepts(&self, value: f64) -> bool {
        match self.kind {
            VariableKind::Discrete { cardinality } => {
                value.fract() == 0.0 && value >= 0.0 && value < cardinality as f64
            }
            VariableKind::Continuous { lo, hi } => value >= lo && value <= hi,
        }
    }
}

/// One sampled exemplar `(g, y)`. Discrete values are stored as integer codes.
#[derive(Debug, Clone, PartialEq)]
pub struct Exemplar {
    pub g: Vec<f64>,
    pub y: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    specs: Vec<VariableSpec>,
    exemplars: Vec<Exemplar>,
    num_labels: usize,
}

impl Dataset {
    pub fn new(specs: Vec<VariableSpec>, exemplars: Vec<Exemplar>, num_labels: usize) -> Result<Self> {
        if num_labels == 0 {
            return Err(Error::Invalid("label count must be positive".into()));
        }
        for (i, spec) in specs.iter().enumerate() {
            if spec.id != i {
                return Err(Error::BadVariable(format!(
                    "variable ids must be dense from 0; position {i} has id {}",
                    spec.id
                )));
            }
            spec.validate()?;
        }
        for (row, ex) in exemplars.iter().enumerate() {
            if ex.g.len() != specs.len() {
                return Err(Error::BadVariable(format!(
                    "exemplar {row} has {} values, expected {}",
                    ex.g.len(),
                    specs.len()
                )));
            }
            if ex.y >= num_labels {
                return Err(Error::BadLabel(ex.y));
            }
            if let Some(spec) = specs.iter().zip(&ex.g).find(|(s, v)| !s.accepts(**v)).map(|(s, _)| s) {
                return Err(Error::BadVariable(format!(
                    "exemplar {row} value {} outside the domain of variable {}",
                    ex.g[spec.id], spec.id
                )));
            }
        }
        Ok(Dataset {
            specs,
            exemplars,
            num_labels,
        })
    }

    pub fn specs(&self) -> &[VariableSpec] {
        &self.specs
    }

    pub fn exemplars(&self) -> &[Exemplar] {
        &self.exemplars
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn len(&self) -> usize {
        self.exemplars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exemplars.is_empty()
    }

    /// Writes `g0,...,g{m-1},y` CSV.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header: Vec<String> = (0..self.specs.len()).map(|i| format!("g{i}")).collect();
        if header.is_empty() {
            writeln!(out, "y")?;
        } else {
            writeln!(out, "{},y", header.join(","))?;
        }
        for ex in &self.exemplars {
            for (spec, v) in self.specs.iter().zip(&ex.g) {
                match spec.kind {
                    VariableKind::Discrete { .. } => write!(out, "{},", *v as u64)?,
                    VariableKind::Continuous { .. } => write!(out, "{v},")?,
                }
            }
            writeln!(out, "{}", ex.y)?;
        }
        Ok(())
    }

    /// Reads the CSV written by [`Dataset::write_csv`] against known specs.
    pub fn read_csv<R: BufRead>(input: R, specs: Vec<VariableSpec>, num_labels: usize) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let expected: Vec<String> = (0..specs.len())
            .map(|i| format!("g{i}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        match lines.next() {
            Some((_, Ok(h))) if h.trim_end().split(',').eq(expected.iter().map(String::as_str)) => {}
            Some((_, Ok(h))) => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("unexpected header {h:?}"),
                })
            }
            Some((_, Err(e))) => return Err(Error::Parse { line: 1, msg: e.to_string() }),
            None => return Err(Error::Parse { line: 1, msg: "missing header".into() }),
        }
        let mut exemplars = Vec::new();
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::Parse { line: idx + 1, msg: e.to_string() })?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != specs.len() + 1 {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {} fields, found {}", specs.len() + 1, fields.len()),
                });
            }
            let parse_err = |msg: String| Error::Parse { line: idx + 1, msg };
            let g = fields[..specs.len()]
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| parse_err(format!("{f:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            let y = fields[specs.len()]
                .parse::<usize>()
                .map_err(|e| parse_err(format!("label {:?}: {e}", fields[specs.len()])))?;
            exemplars.push(Exemplar { g, y });
        }
        Dataset::new(specs, exemplars, num_labels)
    }
}

/// Equal-width discretization of continuous variables over their declared range.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinningPolicy {
    pub bins: u32,
}

impl Default for BinningPolicy {
    fn default() -> Self {
        BinningPolicy { bins: 10 }
    }
}

impl BinningPolicy {
    pub fn new(bins: u32) -> Self {
        BinningPolicy { bins }
    }

    /// Bin index of `value`; out-of-range values clamp into the boundary bins.
    pub fn bin(&self, value: f64, lo: f64, hi: f64) -> u32 {
        let scaled = (value - lo) / (hi - lo) * self.bins as f64;
        if scaled.is_nan() || scaled < 0.0 {
            0
        } else {
            (scaled.floor() as u64).min(self.bins as u64 - 1) as u32
        }
    }
}

/// Empirical joint counts over discrete variable configurations and labels.
///
/// Configurations are stored sparsely; rows whose counts are all zero are
/// never kept, so every stored configuration has positive marginal count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExemplarTable {
    variable_ids: Vec<VariableId>,
    cardinalities: Vec<u32>,
    num_labels: usize,
    counts: BTreeMap<Vec<u32>, Vec<u64>>,
    total: u64,
}

impl ExemplarTable {
    /// Builds a table from explicit `(configuration, label, count)` triples.
    pub fn from_counts<I>(
        variable_ids: Vec<VariableId>,
        cardinalities: Vec<u32>,
        num_labels: usize,
        entries: I,
    ) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<u32>, usize, u64)>,
    {
        if variable_ids.len() != cardinalities.len() {
            return Err(Error::BadVariable("one cardinality per variable is required".into()));
        }
        if has_duplicates(&variable_ids) {
            return Err(Error::BadVariable(format!("duplicate ids in {variable_ids:?}")));
        }
        if cardinalities.contains(&0) {
            return Err(Error::BadVariable("zero cardinality".into()));
        }
        if num_labels == 0 {
            return Err(Error::Invalid("label count must be positive".into()));
        }
        let mut table = ExemplarTable {
            variable_ids,
            cardinalities,
            num_labels,
            counts: BTreeMap::new(),
            total: 0,
        };
        for (config, label, count) in entries {
            if config.len() != table.cardinalities.len()
                || config.iter().zip(&table.cardinalities).any(|(v, c)| v >= c)
            {
                return Err(Error::BadVariable(format!(
                    "configuration {config:?} violates cardinalities {:?}",
                    table.cardinalities
                )));
            }
            if label >= num_labels {
                return Err(Error::BadLabel(label));
            }
            table.add(config, label, count);
        }
        Ok(table)
    }

    fn add(&mut self, config: Vec<u32>, label: usize, count: u64) {
        if count == 0 {
            return;
        }
        let k = self.num_labels;
        self.counts.entry(config).or_insert_with(|| vec![0; k])[label] += count;
        self.total += count;
    }

    pub fn variable_ids(&self) -> &[VariableId] {
        &self.variable_ids
    }

    pub fn cardinalities(&self) -> &[u32] {
        &self.cardinalities
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Per-configuration label counts, in lexicographic configuration order.
    pub fn rows(&self) -> impl Iterator<Item = (&[u32], &[u64])> {
        self.counts.iter().map(|(c, v)| (c.as_slice(), v.as_slice()))
    }

    pub fn label_counts(&self, config: &[u32]) -> Option<&[u64]> {
        self.counts.get(config).map(Vec::as_slice)
    }

    pub fn count(&self, config: &[u32], label: usize) -> u64 {
        self.counts.get(config).and_then(|v| v.get(label).copied()).unwrap_or(0)
    }

    pub(crate) fn position_of(&self, id: VariableId) -> Option<usize> {
        self.variable_ids.iter().position(|&v| v == id)
    }

    /// Sums counts over every variable not in `keep_ids`; the result's
    /// variables follow the order of `keep_ids`.
    pub fn marginalize(&self, keep_ids: &[VariableId]) -> Result<ExemplarTable> {
        if has_duplicates(keep_ids) {
            return Err(Error::BadVariable(format!("duplicate ids in {keep_ids:?}")));
        }
        let positions = keep_ids
            .iter()
            .map(|&id| {
                self.position_of(id)
                    .ok_or_else(|| Error::BadVariable(format!("variable {id} is not in the table")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out = ExemplarTable {
            variable_ids: keep_ids.to_vec(),
            cardinalities: positions.iter().map(|&p| self.cardinalities[p]).collect(),
            num_labels: self.num_labels,
            counts: BTreeMap::new(),
            total: 0,
        };
        for (config, labels) in &self.counts {
            let projected: Vec<u32> = positions.iter().map(|&p| config[p]).collect();
            for (label, &c) in labels.iter().enumerate() {
                out.add(projected.clone(), label, c);
            }
        }
        Ok(out)
    }

    /// Expands the table into `(configuration, label, weight)` triples.
    pub fn to_weighted(&self) -> Vec<(Vec<u32>, usize, u64)> {
        self.counts
            .iter()
            .flat_map(|(config, labels)| {
                labels
                    .iter()
                    .enumerate()
                    .filter(|(_, &c)| c > 0)
                    .map(move |(label, &c)| (config.clone(), label, c))
            })
            .collect()
    }
}

fn has_duplicates(ids: &[VariableId]) -> bool {
    ids.iter().enumerate().any(|(i, id)| ids[..i].contains(id))
}

/// Counts the exemplars of `dataset` over the variables `variable_ids`.
pub fn build_table(dataset: &Dataset, variable_ids: &[VariableId], binning: &BinningPolicy) -> Result<ExemplarTable> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let specs = variable_ids
        .iter()
        .map(|&id| {
            dataset
                .specs
                .get(id)
                .ok_or_else(|| Error::BadVariable(format!("unknown variable id {id}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let cardinalities = specs
        .iter()
        .map(|s| match s.kind {
            VariableKind::Discrete { cardinality } => Ok(cardinality),
            VariableKind::Continuous { .. } if binning.bins >= 2 => Ok(binning.bins),
            VariableKind::Continuous { .. } => Err(Error::Invalid(format!(
                "continuous variable {} needs at least 2 bins",
                s.id
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    let entries = dataset.exemplars.iter().map(|ex| {
        let config = specs
            .iter()
            .map(|s| match s.kind {
                VariableKind::Discrete { .. } => ex.g[s.id] as u32,
                VariableKind::Continuous { lo, hi } => binning.bin(ex.g[s.id], lo, hi),
            })
            .collect();
        (config, ex.y, 1)
    });
    ExemplarTable::from_counts(variable_ids.to_vec(), cardinalities, dataset.num_labels, entries)
}

/// The map from generative variables to model inputs.
#[derive(Debug, Clone, PartialEq)]
pub enum GeneratingFn {
    /// `x = g`; the input dimension equals the variable count.
    Identity { dim: usize },
    /// Renders a grid from `g = [pattern class, instance noise seed]`.
    SyntheticImage(crate::augment::GridTask),
}

impl GeneratingFn {
    pub fn input_dim(&self) -> usize {
        match self {
            GeneratingFn::Identity { dim } => *dim,
            GeneratingFn::SyntheticImage(task) => task.input_dim(),
        }
    }

    pub fn apply(&self, g: &[f64]) -> Result<Vec<f64>> {
        match self {
            GeneratingFn::Identity { dim } => {
                if g.len() != *dim {
                    return Err(Error::BadInputDim { expected: *dim, got: g.len() });
                }
                Ok(g.to_vec())
            }
            GeneratingFn::SyntheticImage(task) => {
                if g.len() != 2 {
                    return Err(Error::BadInputDim { expected: 2, got: g.len() });
                }
                let class = g[0] as usize;
                if class >= task.classes {
                    return Err(Error::BadLabel(class));
                }
                Ok(task.render(class, g[1] as u64).values)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn binary_dataset() -> Dataset {
        let ex = |g: f64, y| Exemplar { g: vec![g], y };
        Dataset::new(
            vec![VariableSpec::discrete(0, 2)],
            vec![ex(0.0, 0), ex(0.0, 0), ex(1.0, 1), ex(1.0, 1)],
            2,
        )
        .unwrap()
    }

    #[test]
    fn counts_aggregate_exactly() {
        let t = build_table(&binary_dataset(), &[0], &BinningPolicy::default()).unwrap();
        assert_eq!(t.total(), 4);
        assert_eq!(t.count(&[0], 0), 2);
        assert_eq!(t.count(&[1], 1), 2);
        assert_eq!(t.count(&[0], 1), 0);
        assert_eq!(t.rows().count(), 2);
    }

    #[test]
    fn empty_id_list_gives_label_marginal() {
        let t = build_table(&binary_dataset(), &[], &BinningPolicy::default()).unwrap();
        assert_eq!(t.total(), 4);
        assert_eq!(t.label_counts(&[]), Some(&[2u64, 2][..]));
    }

    #[test]
    fn continuous_equal_width_bins() {
        let ds = Dataset::new(
            vec![VariableSpec::continuous(0, 0.0, 1.0)],
            vec![Exemplar { g: vec![0.1], y: 0 }, Exemplar { g: vec![0.9], y: 1 }],
            2,
        )
        .unwrap();
        let t = build_table(&ds, &[0], &BinningPolicy::new(2)).unwrap();
        assert_eq!(t.count(&[0], 0), 1);
        assert_eq!(t.count(&[1], 1), 1);
        assert_eq!(t.total(), 2);
    }

    #[test]
    fn out_of_range_values_clamp() {
        let b = BinningPolicy::new(4);
        assert_eq!(b.bin(-3.0, 0.0, 1.0), 0);
        assert_eq!(b.bin(1.0, 0.0, 1.0), 3);
        assert_eq!(b.bin(7.5, 0.0, 1.0), 3);
        assert_eq!(b.bin(0.26, 0.0, 1.0), 1);
    }

    #[test]
    fn build_errors() {
        let empty = Dataset::new(vec![VariableSpec::discrete(0, 2)], vec![], 2).unwrap();
        assert!(matches!(build_table(&empty, &[0], &BinningPolicy::default()), Err(Error::EmptyDataset)));
        assert!(matches!(
            build_table(&binary_dataset(), &[3], &BinningPolicy::default()),
            Err(Error::BadVariable(_))
        ));
        let ds = Dataset::new(
            vec![VariableSpec::continuous(0, 0.0, 1.0)],
            vec![Exemplar { g: vec![0.5], y: 0 }],
            1,
        )
        .unwrap();
        assert!(build_table(&ds, &[0], &BinningPolicy::new(1)).is_err());
    }

    #[test]
    fn dataset_rejects_nonconforming_exemplars() {
        let spec = vec![VariableSpec::discrete(0, 2)];
        assert!(Dataset::new(spec.clone(), vec![Exemplar { g: vec![2.0], y: 0 }], 2).is_err());
        assert!(matches!(
            Dataset::new(spec.clone(), vec![Exemplar { g: vec![1.0], y: 2 }], 2),
            Err(Error::BadLabel(2))
        ));
        assert!(Dataset::new(spec, vec![Exemplar { g: vec![0.0, 1.0], y: 0 }], 2).is_err());
        assert!(Dataset::new(vec![VariableSpec::continuous(0, 1.0, 1.0)], vec![], 2).is_err());
        assert!(Dataset::new(vec![VariableSpec::discrete(1, 2)], vec![], 2).is_err());
    }

    #[test]
    fn marginalize_cases() {
        let t = ExemplarTable::from_counts(
            vec![0, 1],
            vec![2, 3],
            2,
            vec![(vec![0, 0], 0, 1), (vec![0, 2], 0, 2), (vec![1, 1], 1, 4), (vec![1, 2], 0, 1)],
        )
        .unwrap();
        let m = t.marginalize(&[0]).unwrap();
        assert_eq!(m.total(), t.total());
        assert_eq!(m.count(&[0], 0), 3);
        assert_eq!(m.count(&[1], 1), 4);
        assert_eq!(m.count(&[1], 0), 1);
        assert_eq!(t.marginalize(&[0, 1]).unwrap(), t);
        let labels = t.marginalize(&[]).unwrap();
        assert_eq!(labels.label_counts(&[]), Some(&[4u64, 4][..]));
        assert!(matches!(t.marginalize(&[2]), Err(Error::BadVariable(_))));
    }

    #[test]
    fn csv_round_trip() {
        let ds = Dataset::new(
            vec![VariableSpec::discrete(0, 3), VariableSpec::continuous(1, -1.0, 1.0)],
            vec![
                Exemplar { g: vec![2.0, -0.125], y: 1 },
                Exemplar { g: vec![0.0, 0.1], y: 0 },
            ],
            2,
        )
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "g0,g1,y\n2,-0.125,1\n0,0.1,0\n");
        let back = Dataset::read_csv(&buf[..], ds.specs().to_vec(), 2).unwrap();
        assert_eq!(back, ds);
        assert!(Dataset::read_csv(&b"a,y\n"[..], ds.specs().to_vec(), 2).is_err());
    }

    #[test]
    fn identity_generating_fn_checks_dimension() {
        let phi = GeneratingFn::Identity { dim: 2 };
        assert_eq!(phi.apply(&[1.0, 2.0]).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(phi.apply(&[1.0]), Err(Error::BadInputDim { expected: 2, got: 1 })));
    }
}
