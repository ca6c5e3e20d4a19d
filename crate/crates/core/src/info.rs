//! Plug-in information measures over [`ExemplarTable`]s, in nats.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::gv::{ExemplarTable, VariableId};

/// Slack below zero tolerated before a value is rejected as a negative entropy.
pub const NEGATIVE_SLACK: f64 = 1e-12;

/// A non-negative information quantity in natural-log units.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Nats(f64);

impl Nats {
    pub const ZERO: Nats = Nats(0.0);

    pub fn new(value: f64) -> Result<Nats> {
        if value.is_nan() || value < -NEGATIVE_SLACK {
            return Err(Error::Invalid(format!("{value} is not a valid nats value")));
        }
        Ok(Nats(value.max(0.0)))
    }

    /// Clamps round-off negatives to zero. Larger negatives are a bug upstream.
    pub(crate) fn clamped(value: f64) -> Nats {
        debug_assert!(!(value < -1e-9), "negative information {value}");
        Nats(value.max(0.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn bits(self) -> f64 {
        self.0 / std::f64::consts::LN_2
    }
}

impl fmt::Display for Nats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} nats", self.0)
    }
}

/// Which marginal of a table [`entropy`] is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Over {
    Labels,
    Variables,
    Joint,
}

/// A column of a table: the label or one of its variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Column {
    Label,
    Var(VariableId),
}

pub fn vars(ids: &[VariableId]) -> Vec<Column> {
    ids.iter().map(|&id| Column::Var(id)).collect()
}

/// Entropy of a count vector with the given total. Zero counts contribute nothing.
pub(crate) fn entropy_of_counts<I: IntoIterator<Item = u64>>(counts: I, total: u64) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let s: f64 = counts
        .into_iter()
        .filter(|&c| c > 0)
        .map(|c| {
            let c = c as f64;
            c * c.ln()
        })
        .sum();
    n.ln() - s / n
}

fn resolve(table: &ExemplarTable, cols: &[Column]) -> Result<Vec<Option<usize>>> {
    cols.iter()
        .map(|c| match c {
            Column::Label => Ok(None),
            Column::Var(id) => table
                .position_of(*id)
                .map(Some)
                .ok_or_else(|| Error::BadVariable(format!("variable {id} is not in the table"))),
        })
        .collect()
}

/// Joint counts of the selected columns.
pub fn joint_counts(table: &ExemplarTable, cols: &[Column]) -> Result<BTreeMap<Vec<u32>, u64>> {
    let positions = resolve(table, cols)?;
    let mut out: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
    for (config, labels) in table.rows() {
        for (label, &c) in labels.iter().enumerate().filter(|(_, &c)| c > 0) {
            let key = positions
                .iter()
                .map(|p| match p {
                    Some(p) => config[*p],
                    None => label as u32,
                })
                .collect();
            *out.entry(key).or_insert(0) += c;
        }
    }
    Ok(out)
}

/// Joint entropy of an arbitrary set of columns.
pub fn joint_entropy(table: &ExemplarTable, cols: &[Column]) -> Result<Nats> {
    if table.total() == 0 {
        return Err(Error::EmptyTable);
    }
    let counts = joint_counts(table, cols)?;
    Ok(Nats::clamped(entropy_of_counts(counts.into_values(), table.total())))
}

pub fn entropy(table: &ExemplarTable, over: Over) -> Result<Nats> {
    let ids = table.variable_ids();
    let cols = match over {
        Over::Labels => vec![Column::Label],
        Over::Variables => vars(ids),
        Over::Joint => {
            let mut c = vars(ids);
            c.push(Column::Label);
            c
        }
    };
    joint_entropy(table, &cols)
}

/// `H(Y | G_given)`, computed as `sum_g p(g) H(Y | g)`.
pub fn conditional_entropy(table: &ExemplarTable, given_ids: &[VariableId]) -> Result<Nats> {
    if table.total() == 0 {
        return Err(Error::EmptyTable);
    }
    let marg = table.marginalize(given_ids)?;
    let n = marg.total() as f64;
    let h: f64 = marg
        .rows()
        .map(|(_, labels)| {
            let row_total: u64 = labels.iter().sum();
            row_total as f64 / n * entropy_of_counts(labels.iter().copied(), row_total)
        })
        .sum();
    Ok(Nats::clamped(h))
}

/// `I(A; B | C) = H(A|C) - H(A|B,C)`, clamped at zero.
pub fn mutual_information(table: &ExemplarTable, a: &[Column], b: &[Column], given: &[Column]) -> Result<Nats> {
    let mut all: Vec<Column> = a.iter().chain(b).chain(given).copied().collect();
    all.sort();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::OverlappingVariables);
    }
    let ac: Vec<Column> = a.iter().chain(given).copied().collect();
    let bc: Vec<Column> = b.iter().chain(given).copied().collect();
    let abc: Vec<Column> = a.iter().chain(b).chain(given).copied().collect();
    let h_ac = joint_entropy(table, &ac)?.value();
    let h_bc = joint_entropy(table, &bc)?.value();
    let h_abc = joint_entropy(table, &abc)?.value();
    let h_c = joint_entropy(table, given)?.value();
    Ok(Nats(((h_ac - h_c) - (h_abc - h_bc)).max(0.0)))
}

/// `I(Y; G_ids)` with the label on side A.
pub fn label_information(table: &ExemplarTable, ids: &[VariableId]) -> Result<Nats> {
    mutual_information(table, &[Column::Label], &vars(ids), &[])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn table(entries: Vec<(Vec<u32>, usize, u64)>, cards: Vec<u32>, k: usize) -> ExemplarTable {
        let ids = (0..cards.len()).collect();
        ExemplarTable::from_counts(ids, cards, k, entries).unwrap()
    }

    #[test]
    fn point_mass_has_zero_entropy() {
        let t = table(vec![(vec![0], 1, 7), (vec![1], 1, 3)], vec![2], 3);
        assert_eq!(entropy(&t, Over::Labels).unwrap().value(), 0.0);
    }

    #[test]
    fn uniform_label_entropies() {
        let t = table(vec![(vec![], 0, 5), (vec![], 1, 5)], vec![], 2);
        assert!((entropy(&t, Over::Labels).unwrap().value() - 0.693147).abs() < 1e-6);
        let t = table((0..4).map(|y| (vec![], y, 3)).collect(), vec![], 4);
        assert!((entropy(&t, Over::Labels).unwrap().value() - 1.386294).abs() < 1e-6);
    }

    #[test]
    fn joint_and_variable_entropy() {
        let t = table(
            vec![(vec![0], 0, 1), (vec![0], 1, 1), (vec![1], 0, 1), (vec![1], 1, 1)],
            vec![2],
            2,
        );
        assert!((entropy(&t, Over::Variables).unwrap().value() - LN_2).abs() < 1e-15);
        assert!((entropy(&t, Over::Joint).unwrap().value() - 2.0 * LN_2).abs() < 1e-15);
    }

    #[test]
    fn conditional_entropy_examples() {
        let det = table(vec![(vec![0], 0, 3), (vec![1], 1, 2)], vec![2], 2);
        assert_eq!(conditional_entropy(&det, &[0]).unwrap().value(), 0.0);

        let t = table(
            vec![(vec![0], 0, 2), (vec![0], 1, 2), (vec![1], 0, 1), (vec![1], 1, 1)],
            vec![2],
            2,
        );
        assert!((conditional_entropy(&t, &[0]).unwrap().value() - LN_2).abs() < 1e-15);
        assert_eq!(
            conditional_entropy(&det, &[]).unwrap(),
            entropy(&det, Over::Labels).unwrap()
        );
    }

    #[test]
    fn mutual_information_examples() {
        // product counts
        let t = table(
            vec![(vec![0, 0], 0, 2), (vec![0, 1], 0, 6), (vec![1, 0], 0, 1), (vec![1, 1], 0, 3)],
            vec![2, 2],
            1,
        );
        let i = mutual_information(&t, &[Column::Var(0)], &[Column::Var(1)], &[]).unwrap();
        assert!(i.value() < 1e-15);

        let same = table(vec![(vec![0, 0], 0, 4), (vec![1, 1], 0, 4)], vec![2, 2], 1);
        let i = mutual_information(&same, &[Column::Var(0)], &[Column::Var(1)], &[]).unwrap();
        assert!((i.value() - LN_2).abs() < 1e-15);
    }

    #[test]
    fn overlapping_columns_are_rejected() {
        let t = table(vec![(vec![0, 0], 0, 1)], vec![2, 2], 1);
        let r = mutual_information(&t, &[Column::Var(0)], &[Column::Var(0)], &[]);
        assert!(matches!(r, Err(Error::OverlappingVariables)));
        let r = mutual_information(&t, &[Column::Label], &[Column::Var(1)], &[Column::Label]);
        assert!(matches!(r, Err(Error::OverlappingVariables)));
    }

    #[test]
    fn empty_table_is_an_error() {
        let t = table(vec![], vec![2], 2);
        assert!(matches!(entropy(&t, Over::Labels), Err(Error::EmptyTable)));
        assert!(matches!(conditional_entropy(&t, &[0]), Err(Error::EmptyTable)));
    }

    #[test]
    fn nats_rejects_real_negatives() {
        assert_eq!(Nats::new(-1e-13).unwrap().value(), 0.0);
        assert!(Nats::new(-1e-6).is_err());
        assert!(Nats::new(f64::NAN).is_err());
        assert!((Nats::new(LN_2).unwrap().bits() - 1.0).abs() < 1e-15);
    }
}
