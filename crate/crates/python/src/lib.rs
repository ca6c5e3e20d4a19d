//! Python bindings for `itid`: count tables and entropy measures, bounds,
//! optimal outputs, the linear models, the toy generator and the erasing
//! samplers.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use itid::augment::{self, PositionLaw};
use itid::info::{self, Column, Nats, Over};
use itid::models::{self, Head, TrainConfig, VectorSet};
use itid::{gv, rng, synth, theory};

fn err(e: itid::Error) -> PyErr {
    PyValueError::new_err(format!("{e}"))
}

fn nats(v: f64) -> PyResult<Nats> {
    Nats::new(v).map_err(err)
}

/// Sparse joint counts over variables and labels.
#[pyclass(name = "ExemplarTable", frozen)]
struct PyTable(gv::ExemplarTable);

/// A column is a variable id or the string `"label"`.
#[derive(FromPyObject)]
enum PyColumn {
    Var(usize),
    Label(String),
}

fn columns(cols: Vec<PyColumn>) -> PyResult<Vec<Column>> {
    cols.into_iter()
        .map(|c| match c {
            PyColumn::Var(id) => Ok(Column::Var(id)),
            PyColumn::Label(s) if s == "label" => Ok(Column::Label),
            PyColumn::Label(s) => Err(PyValueError::new_err(format!("unknown column {s:?}"))),
        })
        .collect()
}

#[pymethods]
impl PyTable {
    /// `entries` are `(configuration, label, count)` triples.
    #[new]
    fn new(variable_ids: Vec<usize>, cardinalities: Vec<u32>, num_labels: usize, entries: Vec<(Vec<u32>, usize, u64)>) -> PyResult<Self> {
        gv::ExemplarTable::from_counts(variable_ids, cardinalities, num_labels, entries)
            .map(PyTable)
            .map_err(err)
    }

    #[getter]
    fn variable_ids(&self) -> Vec<usize> {
        self.0.variable_ids().to_vec()
    }

    #[getter]
    fn num_labels(&self) -> usize {
        self.0.num_labels()
    }

    #[getter]
    fn total(&self) -> u64 {
        self.0.total()
    }

    fn rows(&self) -> Vec<(Vec<u32>, Vec<u64>)> {
        self.0.rows().map(|(c, n)| (c.to_vec(), n.to_vec())).collect()
    }

    fn marginalize(&self, keep_ids: Vec<usize>) -> PyResult<PyTable> {
        self.0.marginalize(&keep_ids).map(PyTable).map_err(err)
    }

    /// `over` is `"labels"`, `"variables"` or `"joint"`.
    fn entropy(&self, over: &str) -> PyResult<f64> {
        let over = match over {
            "labels" => Over::Labels,
            "variables" => Over::Variables,
            "joint" => Over::Joint,
            other => return Err(PyValueError::new_err(format!("unknown entropy target {other:?}"))),
        };
        info::entropy(&self.0, over).map(Nats::value).map_err(err)
    }

    fn conditional_entropy(&self, given_ids: Vec<usize>) -> PyResult<f64> {
        info::conditional_entropy(&self.0, &given_ids).map(Nats::value).map_err(err)
    }

    #[pyo3(signature = (a, b, given = Vec::new()))]
    fn mutual_information(&self, a: Vec<PyColumn>, b: Vec<PyColumn>, given: Vec<PyColumn>) -> PyResult<f64> {
        info::mutual_information(&self.0, &columns(a)?, &columns(b)?, &columns(given)?)
            .map(Nats::value)
            .map_err(err)
    }

    /// `(configuration, optimal output vector)` pairs.
    fn optimal_outputs(&self, determining_ids: Vec<usize>) -> PyResult<Vec<(Vec<u32>, Vec<f64>)>> {
        theory::optimal_outputs(&self.0, &determining_ids)
            .map(|o| o.outputs.into_iter().collect())
            .map_err(err)
    }

    fn estimated_training_error(&self, determining_ids: Vec<usize>) -> PyResult<f64> {
        let opt = theory::optimal_outputs(&self.0, &determining_ids).map_err(err)?;
        theory::estimated_training_error(&opt, &self.0).map_err(err)
    }

    /// `(is_invariant, max_deviation)`.
    fn check_strict_invariance(&self, determining_ids: Vec<usize>, invariant_ids: Vec<usize>) -> PyResult<(bool, f64)> {
        theory::check_strict_invariance(&self.0, &determining_ids, &invariant_ids)
            .map(|r| (r.is_invariant, r.max_deviation))
            .map_err(err)
    }

    /// `(gamma_sum, h_pred_given_gy)` for a table whose label column is a
    /// deterministic prediction.
    fn addition_rule_gamma(&self, gy: Vec<usize>, gu: Vec<usize>) -> PyResult<(f64, f64)> {
        theory::addition_rule_gamma(&self.0, &gy, &gu)
            .map(|r| (r.gamma_sum.value(), r.h_pred_given_gy.value()))
            .map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "ExemplarTable(variables={:?}, labels={}, total={})",
            self.0.variable_ids(),
            self.0.num_labels(),
            self.0.total()
        )
    }
}

#[pyfunction]
fn thm1_bound(t: u64, k: u64, n: u64, delta: f64) -> PyResult<f64> {
    theory::thm1_bound(t, k, n, delta).map_err(err)
}

#[pyfunction]
fn thm2_excess_risk(t: u64, k: u64, n: u64, delta: f64, gamma: f64) -> PyResult<f64> {
    theory::thm2_excess_risk(t, k, n, delta, nats(gamma)?).map_err(err)
}

#[pyfunction]
fn lemma1_lower_bound(h_y: f64) -> PyResult<f64> {
    Ok(theory::lemma1_lower_bound(nats(h_y)?))
}

/// Generalized linear model with a sigmoid (binary) or softmax head.
#[pyclass(name = "LinearModel", frozen)]
struct PyModel(models::LinearModel);

fn vector_set(x: Vec<Vec<f64>>, y: Vec<usize>, num_labels: usize) -> PyResult<VectorSet> {
    VectorSet::from_rows(x, y, num_labels).map_err(err)
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    #[pyo3(signature = (x, y, num_labels, learning_rate = 0.01, momentum = 0.9, batch_size = 256, epochs = 100, seed = 0))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        py: Python<'_>,
        x: Vec<Vec<f64>>,
        y: Vec<usize>,
        num_labels: usize,
        learning_rate: f64,
        momentum: f64,
        batch_size: usize,
        epochs: usize,
        seed: u64,
    ) -> PyResult<PyModel> {
        let data = vector_set(x, y, num_labels)?;
        let cfg = TrainConfig {
            learning_rate,
            momentum,
            batch_size: batch_size.min(data.len()),
            epochs,
            seed,
            shuffle: true,
        };
        py.detach(|| models::train(&data, &cfg))
            .map(|o| PyModel(o.model))
            .map_err(err)
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<PyModel> {
        models::LinearModel::from_text(text).map(PyModel).map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn head(&self) -> &'static str {
        match self.0.head() {
            Head::Sigmoid => "sigmoid",
            Head::Softmax => "softmax",
        }
    }

    #[getter]
    fn weights(&self) -> Vec<Vec<f64>> {
        (0..self.0.rows()).map(|k| self.0.weight_row(k).to_vec()).collect()
    }

    #[getter]
    fn bias(&self) -> Vec<f64> {
        self.0.bias().to_vec()
    }

    fn forward(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        self.0.forward(&x).map_err(err)
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<usize> {
        self.0.predict(&x).map_err(err)
    }

    /// `(zero_one_error, mean_max_output)` on a labelled set.
    fn risk(&self, x: Vec<Vec<f64>>, y: Vec<usize>) -> PyResult<(f64, f64)> {
        let data = vector_set(x, y, self.0.num_classes())?;
        models::risk(&self.0, &data)
            .map(|r| (r.zero_one_error, r.mean_max_output))
            .map_err(err)
    }
}

type Split = (Vec<Vec<f64>>, Vec<usize>);

fn split(v: &VectorSet) -> Split {
    ((0..v.len()).map(|i| v.row(i).to_vec()).collect(), v.labels().to_vec())
}

/// Two-class toy data: `((train_x, train_y), (test_x, test_y))`.
#[pyfunction]
#[pyo3(signature = (seed, dims = 20, task_correlated_dims = 10, per_class = 5000))]
fn generate_toy(py: Python<'_>, seed: u64, dims: usize, task_correlated_dims: usize, per_class: usize) -> PyResult<(Split, Split)> {
    let spec = synth::ToySpec::random(dims, task_correlated_dims, 2, per_class, seed);
    let data = py.detach(|| synth::generate_toy(&spec)).map_err(err)?;
    Ok((split(&data.train), split(&data.test)))
}

fn law(name: &str) -> PyResult<PositionLaw> {
    PositionLaw::parse(name).map_err(err)
}

/// `count` erasing positions from `"uniform"`, `"periphery"` or `"center"`.
#[pyfunction]
fn sample_positions(name: &str, count: usize, seed: u64) -> PyResult<Vec<f64>> {
    let law = law(name)?;
    let mut r = rng::seeded(seed);
    Ok((0..count).map(|_| augment::sample_position(law, &mut r)).collect())
}

/// Draws `(area_u, aspect_u, pos_x, pos_y)` tuples for one label from the
/// `alpha` mixture.
#[pyfunction]
#[pyo3(signature = (alpha, label, count, seed, position_law = "uniform"))]
fn sample_erasing_params(alpha: f64, label: usize, count: usize, seed: u64, position_law: &str) -> PyResult<Vec<(f64, f64, f64, f64)>> {
    let dist = augment::AugmentDistribution::new(alpha, law(position_law)?);
    dist.validate().map_err(err)?;
    let mut r = rng::seeded(seed);
    (0..count)
        .map(|_| {
            augment::sample_params(&dist, label, &mut r)
                .map(|p| (p.area_u, p.aspect_u, p.pos_x, p.pos_y))
                .map_err(err)
        })
        .collect()
}

#[pymodule]
#[pyo3(name = "itid")]
fn itid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTable>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(thm1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(thm2_excess_risk, m)?)?;
    m.add_function(wrap_pyfunction!(lemma1_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(generate_toy, m)?)?;
    m.add_function(wrap_pyfunction!(sample_positions, m)?)?;
    m.add_function(wrap_pyfunction!(sample_erasing_params, m)?)?;
    Ok(())
}
