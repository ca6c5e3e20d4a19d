use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use itid::augment::{AugmentDistribution, PositionLaw};
use itid::checks::{self, SuiteOptions};
use itid::config::{parse_list, Config};
use itid::error::{Error, Result};
use itid::experiments::{self, AugmentProtocol, ToyProtocol, ToyRun};
use itid::gv::{BinningPolicy, ExemplarTable, VariableId};
use itid::svg::{Chart, Mark, Series};
use itid::theory::{self, BoundReport, OptimalOutputs};

#[derive(Parser)]
#[command(name = "itid", version, about = "Generalization experiments on task-identically distributed data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Base seed; every run derives its own streams from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of generated datasets (seeds for augment-sweep).
    #[arg(long)]
    datasets: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Emit SVG plots next to the CSV files.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    plot: Option<bool>,
    /// `key = value` file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Rank task-uncorrelated dims by H_S(Y|G) and compare with trained |w|.
    ToyInfluence(Common),
    /// Balance the most influential dims one at a time and retrain.
    ToyBalance(Common),
    /// Evaluate the generalization-gap and excess-risk bounds over grids.
    Bounds {
        #[command(flatten)]
        common: Common,
        /// Number of task-correlated variables (comma list).
        #[arg(long = "t")]
        t: Option<String>,
        /// Number of labels (comma list).
        #[arg(long = "k")]
        k: Option<String>,
        /// Sample sizes (comma list).
        #[arg(long = "n")]
        n: Option<String>,
        /// Confidence parameters (comma list).
        #[arg(long)]
        delta: Option<String>,
        /// Dependence levels in nats (comma list); empty gives gap-only rows.
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Run the exact-oracle property suite; exits 1 on any violation.
    TheoryCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Train on erased grids per (alpha, position law) and measure invariance.
    AugmentSweep {
        #[command(flatten)]
        common: Common,
        /// Mixture weights (comma list).
        #[arg(long)]
        alphas: Option<String>,
        /// Position laws: uniform, periphery, center (comma list).
        #[arg(long)]
        laws: Option<String>,
        /// Erasing repeats per changing-ratio estimate.
        #[arg(long)]
        repeats: Option<usize>,
    },
}

struct Run {
    seed: u64,
    datasets: usize,
    out: PathBuf,
    jobs: usize,
    plot: bool,
    config: Config,
}

impl Run {
    fn resolve(common: &Common) -> Result<Run> {
        let config = match &common.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        let datasets = pick(common.datasets, config.get("datasets")?, 100);
        if datasets == 0 {
            return Err(Error::Invalid("--datasets must be at least 1".into()));
        }
        let out = common
            .out
            .clone()
            .or(config.raw("out").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
        Ok(Run {
            seed: pick(common.seed, config.get("seed")?, 0),
            datasets,
            out,
            jobs: pick(common.jobs, config.get("jobs")?, 0),
            plot: pick(common.plot, config.get("plot")?, true),
            config,
        })
    }

    fn pool<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::Invalid(format!("worker pool: {e}")))?;
        Ok(pool.install(f))
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.path(name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))
    }

    fn plot(&self, name: &str, chart: &Chart) -> Result<()> {
        if self.plot {
            self.write(name, chart.render().as_bytes())?;
        }
        Ok(())
    }

    fn list<T: std::str::FromStr>(&self, flag: &Option<String>, key: &str, default: Vec<T>) -> Result<Vec<T>> {
        match flag {
            Some(v) => parse_list(v).map_err(|msg| Error::Invalid(format!("--{key}: {msg}"))),
            None => Ok(self.config.list(key)?.unwrap_or(default)),
        }
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn csv<F>(write: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut Vec<u8>) -> std::io::Result<()>,
{
    let mut buf = Vec::new();
    write(&mut buf).map_err(|e| Error::Invalid(format!("formatting csv: {e}")))?;
    Ok(buf)
}

fn toy_protocol(c: &Config) -> Result<ToyProtocol> {
    let mut p = ToyProtocol::default();
    p.per_class = c.get("per_class")?.unwrap_or(p.per_class);
    p.train.epochs = c.get("epochs")?.unwrap_or(p.train.epochs);
    p.train.learning_rate = c.get("learning_rate")?.unwrap_or(p.train.learning_rate);
    p.train.momentum = c.get("momentum")?.unwrap_or(p.train.momentum);
    p.train.batch_size = c.get("batch_size")?.unwrap_or(p.train.batch_size);
    p.binning = BinningPolicy::new(c.get("bins")?.unwrap_or(p.binning.bins));
    p.balance_top = c.get("balance_top")?.unwrap_or(p.balance_top);
    Ok(p)
}

fn run_toy(run: &Run, balance: bool) -> Result<Vec<ToyRun>> {
    let protocol = toy_protocol(&run.config)?;
    run.pool(|| experiments::run_toy(&protocol, run.seed, run.datasets, balance))?
}

fn cmd_toy_influence(run: &Run) -> Result<()> {
    let runs = run_toy(run, false)?;
    run.write("influence.csv", &csv(|b| experiments::write_influence_csv(&runs, b))?)?;
    let mean_rho = experiments::mean(runs.iter().map(|r| r.spearman));
    let ranks = runs[0].influence.len();
    let curve: Vec<(f64, f64)> = (1..=ranks)
        .map(|r| {
            let truth = runs
                .iter()
                .flat_map(|x| &x.influence)
                .filter(|x| x.rank_est == r)
                .map(|x| x.rank_true as f64);
            (r as f64, experiments::mean(truth))
        })
        .collect();
    run.plot(
        "influence.svg",
        &Chart {
            diagonal: true,
            ..Chart::new("Estimated vs. ground-truth influence rank", "rank by H_S(Y|G)", "rank by |w|")
        }
        .with(Series::new("mean over datasets", curve, Mark::Line)),
    )?;
    println!("mean Spearman correlation over {} datasets: {mean_rho:.4}", runs.len());
    Ok(())
}

fn cmd_toy_balance(run: &Run) -> Result<()> {
    let runs = run_toy(run, true)?;
    run.write("balance.csv", &csv(|b| experiments::write_balance_csv(&runs, b))?)?;
    let summary = experiments::summarize_balance(&runs);
    let series = |name: &str, f: fn(&experiments::BalanceSummary) -> f64| {
        Series::new(name, summary.iter().map(|s| (s.position as f64, f(s))).collect(), Mark::Line)
    };
    run.plot(
        "balance_weights.svg",
        &Chart::new("Absolute weight before and after Balance", "influence rank", "mean |w|")
            .with(series("original", |s| s.w_before))
            .with(series("balanced", |s| s.w_after)),
    )?;
    run.plot(
        "balance_accuracy.svg",
        &Chart::new("Test accuracy before and after Balance", "influence rank", "mean accuracy")
            .with(series("original", |s| s.acc_before))
            .with(series("balanced", |s| s.acc_after)),
    )?;
    println!("rank,w_before,w_after,acc_before,acc_after");
    for s in &summary {
        println!(
            "{},{:.4},{:.4},{:.4},{:.4}",
            s.position, s.w_before, s.w_after, s.acc_before, s.acc_after
        );
    }
    Ok(())
}

fn cmd_bounds(run: &Run, t: &Option<String>, k: &Option<String>, n: &Option<String>, delta: &Option<String>, gamma: &Option<String>) -> Result<()> {
    let t = run.list(t, "t", vec![2])?;
    let k = run.list(k, "k", vec![2])?;
    let n = run.list(n, "n", vec![100, 1_000, 10_000, 100_000])?;
    let delta = run.list(delta, "delta", vec![0.05])?;
    let gamma = run.list(gamma, "gamma", vec![])?;
    let rows = experiments::bound_grid(&t, &k, &n, &delta, &gamma)?;
    let bytes = csv(|b| {
        use std::io::Write;
        writeln!(b, "{}", BoundReport::CSV_HEADER)?;
        rows.iter().try_for_each(|r| r.write_csv_row(&mut *b))
    })?;
    run.write("bounds.csv", &bytes)?;
    let mut chart = Chart::new("Generalization gap bound", "log10 n", "bound");
    for &tt in &t {
        for &kk in &k {
            for &d in &delta {
                let pts = rows
                    .iter()
                    .filter(|r| r.t == tt && r.k == kk && r.delta == d && r.gamma.is_none_or(|g| g.value() == gamma[0]))
                    .map(|r| ((r.n as f64).log10(), r.thm1_gap))
                    .collect();
                chart.series.push(Series::new(format!("T={tt} K={kk} d={d}"), pts, Mark::Line));
            }
        }
    }
    run.plot("bounds.svg", &chart)?;
    println!("wrote {} rows to {}", rows.len(), run.path("bounds.csv").display());
    Ok(())
}

/// Closed form with a corrupted first configuration, for exercising the
/// failure path of the suite.
fn corrupted_optimal(table: &ExemplarTable, ids: &[VariableId]) -> Result<OptimalOutputs> {
    let mut opt = theory::optimal_outputs(table, ids)?;
    if let Some(q) = opt.outputs.values_mut().next() {
        q.reverse();
        if q.len() > 1 && q[0] == q[q.len() - 1] {
            q[0] += 0.25;
            let last = q.len() - 1;
            q[last] -= 0.25;
        }
    }
    Ok(opt)
}

fn cmd_theory_check(run: &Run, inject_fault: bool) -> Result<bool> {
    let mut opts = SuiteOptions {
        seed: run.seed,
        ..SuiteOptions::default()
    };
    if inject_fault {
        opts.optimal = corrupted_optimal;
    }
    let outcomes = run.pool(|| checks::run_suite(&opts))?;
    run.write("theory_report.csv", &csv(|b| checks::write_report(&outcomes, b))?)?;
    let mut ok = true;
    for o in &outcomes {
        let status = if o.passed() { "pass" } else { "FAIL" };
        println!(
            "{status} {:<40} cases={:<8} violations={:<6} max_dev={:.3e}",
            o.name, o.cases, o.violations, o.max_deviation
        );
        if !o.passed() {
            ok = false;
            if let Some(ce) = &o.counterexample {
                eprintln!("  {}: {ce}", o.name);
            }
        }
    }
    Ok(ok)
}

fn augment_protocol(c: &Config) -> Result<AugmentProtocol> {
    let mut p = AugmentProtocol::default();
    p.train_per_class = c.get("train_per_class")?.unwrap_or(p.train_per_class);
    p.test_per_class = c.get("test_per_class")?.unwrap_or(p.test_per_class);
    p.copies = c.get("copies")?.unwrap_or(p.copies);
    p.repeats = c.get("repeats")?.unwrap_or(p.repeats);
    p.train.epochs = c.get("epochs")?.unwrap_or(p.train.epochs);
    p.train.learning_rate = c.get("learning_rate")?.unwrap_or(p.train.learning_rate);
    p.train.batch_size = c.get("batch_size")?.unwrap_or(p.train.batch_size);
    let mut dist = AugmentDistribution::default();
    c.apply_augment(&mut dist)?;
    p.geometry = dist.geometry;
    p.label_intervals = dist.label_intervals;
    Ok(p)
}

fn cmd_augment_sweep(run: &Run, alphas: &Option<String>, laws: &Option<String>, repeats: Option<usize>) -> Result<()> {
    let mut protocol = augment_protocol(&run.config)?;
    if let Some(r) = repeats {
        protocol.repeats = r;
    }
    let alphas: Vec<f64> = run.list(alphas, "alphas", vec![0.0, 0.5, 1.0])?;
    let law_names: Vec<String> = run.list(laws, "laws", PositionLaw::ALL.iter().map(|l| l.name().to_string()).collect())?;
    let laws = law_names
        .iter()
        .map(|s| PositionLaw::parse(s))
        .collect::<Result<Vec<_>>>()?;
    let rows = run.pool(|| experiments::run_augment_sweep(&protocol, &alphas, &laws, run.seed, run.datasets))??;
    run.write("augment.csv", &csv(|b| experiments::write_augment_csv(&rows, b))?)?;
    let curve = |law: PositionLaw, f: fn(&experiments::AugmentRow) -> f64| {
        let pts = alphas
            .iter()
            .map(|&a| {
                let v = experiments::mean(rows.iter().filter(|r| r.alpha == a && r.law == law).map(f));
                (a, v)
            })
            .collect();
        Series::new(law.name(), pts, Mark::Line)
    };
    let mut ratio = Chart::new("Prediction changing ratio", "alpha", "changing ratio");
    let mut error = Chart::new("Clean test error", "alpha", "test error");
    println!("alpha,law,changing_ratio,test_error");
    for &law in &laws {
        ratio.series.push(curve(law, |r| r.changing_ratio));
        error.series.push(curve(law, |r| r.test_error));
        for &a in &alphas {
            let sel = || rows.iter().filter(|r| r.alpha == a && r.law == law);
            println!(
                "{a},{},{:.4},{:.4}",
                law.name(),
                experiments::mean(sel().map(|r| r.changing_ratio)),
                experiments::mean(sel().map(|r| r.test_error))
            );
        }
    }
    run.plot("augment_ratio.svg", &ratio)?;
    run.plot("augment_error.svg", &error)?;
    Ok(())
}

fn execute(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::ToyInfluence(c) => cmd_toy_influence(&Run::resolve(c)?).map(|_| true),
        Command::ToyBalance(c) => cmd_toy_balance(&Run::resolve(c)?).map(|_| true),
        Command::Bounds {
            common,
            t,
            k,
            n,
            delta,
            gamma,
        } => cmd_bounds(&Run::resolve(common)?, t, k, n, delta, gamma).map(|_| true),
        Command::TheoryCheck { common, inject_fault } => cmd_theory_check(&Run::resolve(common)?, *inject_fault),
        Command::AugmentSweep {
            common,
            alphas,
            laws,
            repeats,
        } => cmd_augment_sweep(&Run::resolve(common)?, alphas, laws, *repeats).map(|_| true),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
