//! Command-line front end for `polycwm`: CSV in, JSON reports and plot-ready
//! CSV tables out.

pub mod error;
pub mod input;
pub mod report;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use polycwm::rng::mix_seed;
use polycwm::simulate::{
    draw_labeled_rows, run_artificial_experiment, run_labeled_fraction_study, table1_params, ArtificialConfig,
    LabeledFractionConfig, TABLE1_GROUP_SIZES,
};
use polycwm::{
    adjusted_rand_index, fit, grid_search, sample, standard_errors, Algorithm, Criterion, Dataset64, FitConfig,
    Generator, LabeledSample, Partition,
};

pub use error::CliError;
pub use input::{load_csv, load_table, InputTable};
use report::{
    fraction_docs, write_json, write_plot_tables, ArtificialDoc, ClassifyDoc, ExperimentDoc, FitDoc, GridDoc,
    ParamsDoc, SelectDoc,
};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Parser)]
#[command(name = "polycwm", version, about = "Polynomial Gaussian cluster-weighted models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a sample from a cluster-weighted generator and write it as CSV.
    Simulate(SimulateArgs),
    /// Fit one (k, r) model.
    Fit(FitArgs),
    /// Fit every (k, r) in a grid and pick the best by BIC and ICL.
    Select(SelectArgs),
    /// Fit using the labeled rows and predict the unlabeled ones.
    Classify(FitArgs),
    /// Labeled-fraction study, optionally preceded by the artificial-data run.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Em,
    Cem,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CriterionArg {
    Bic,
    Icl,
}

#[derive(Debug, Clone, Args)]
pub struct EmArgs {
    #[arg(long, value_enum, default_value = "em")]
    pub algorithm: AlgorithmArg,
    /// Random initializations per fit.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Aitken stopping threshold.
    #[arg(long, default_value_t = 0.05)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl EmArgs {
    pub fn config(&self) -> FitConfig {
        FitConfig {
            algorithm: match self.algorithm {
                AlgorithmArg::Em => Algorithm::Em,
                AlgorithmArg::Cem => Algorithm::Cem,
            },
            restarts: self.restarts,
            epsilon: self.epsilon,
            max_iter: self.max_iter,
            seed: self.seed,
            ..FitConfig::default()
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// CSV file to write.
    #[arg(long)]
    pub output: PathBuf,
    /// Sample size. Without it the built-in cubic generator draws exactly
    /// 400 + 300 rows; with it memberships are drawn from the weights.
    #[arg(long)]
    pub n: Option<usize>,
    /// JSON parameters (`weights`, `components`) replacing the built-in generator.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Reveal the true label of this many random rows in the `label` column.
    #[arg(long, default_value_t = 0)]
    pub labeled: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Directory receiving report.json and the plot tables.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub r: usize,
    #[command(flatten)]
    pub em: EmArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value = "1:5", value_parser = parse_range)]
    pub k_range: Counts,
    #[arg(long, default_value = "1:5", value_parser = parse_range)]
    pub r_range: Counts,
    /// Criterion whose selected cell gets the full report and plot tables.
    #[arg(long, value_enum, default_value = "bic")]
    pub criterion: CriterionArg,
    #[command(flatten)]
    pub em: EmArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub output: PathBuf,
    /// Run the artificial-data grid search and then the labeled-fraction
    /// study on the same simulated sample.
    #[arg(long)]
    pub paper_experiment: bool,
    /// CSV with a `truth` column for the labeled-fraction study (ignored
    /// with --paper-experiment).
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    /// Replications per labeled count.
    #[arg(long, default_value_t = 500)]
    pub reps: usize,
    /// Labeled counts, as a comma list and/or A:B ranges.
    #[arg(long, default_value = "0,10,25,50,100,200", value_parser = parse_counts)]
    pub m_values: Counts,
    #[command(flatten)]
    pub em: EmArgs,
}

/// A parsed list of counts from `--k-range`, `--r-range` or `--m-values`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts(pub Vec<usize>);

/// `A:B` (inclusive) or a single number.
pub fn parse_range(s: &str) -> Result<Counts, String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|_| format!("`{t}` is not a count"));
    let (a, b) = match s.split_once(':') {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let v = parse(s)?;
            (v, v)
        }
    };
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok(Counts((a..=b).collect()))
}

/// Comma-separated counts and ranges, e.g. `0,10,20:25`, sorted and deduplicated.
pub fn parse_counts(s: &str) -> Result<Counts, String> {
    let mut out = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        out.extend(parse_range(part)?.0);
    }
    if out.is_empty() {
        return Err("no counts given".into());
    }
    out.sort_unstable();
    out.dedup();
    Ok(Counts(out))
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Select(a) => cmd_select(&a),
        Command::Classify(a) => cmd_classify(&a),
        Command::Experiment(a) => cmd_experiment(&a),
    }
}

fn prepare_output_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))
}

fn check_config(cfg: &FitConfig) -> Result<(), CliError> {
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))
}

fn check_model(k: usize) -> Result<(), CliError> {
    if k == 0 {
        return Err(CliError::Usage("k must be >= 1".into()));
    }
    Ok(())
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let psi = match &a.params {
        Some(p) => report::read_json::<ParamsDoc>(p)?.to_params()?,
        None => table1_params(),
    };
    let (n, group_sizes) = match (a.n, &a.params) {
        (Some(n), _) => (n, None),
        (None, None) => (TABLE1_GROUP_SIZES.iter().sum(), Some(TABLE1_GROUP_SIZES.to_vec())),
        (None, Some(_)) => return Err(CliError::Usage("--params requires --n".into())),
    };
    if n == 0 {
        return Err(CliError::Usage("--n must be >= 1".into()));
    }
    let s = sample(
        &Generator {
            psi,
            group_sizes,
            seed: a.seed,
        },
        n,
    )?;
    let revealed =
        draw_labeled_rows(n, a.labeled, mix_seed(&[a.seed, 0x1abe1]), 0).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut labels = vec![None; n];
    for i in revealed {
        labels[i] = Some(s.truth[i]);
    }
    let table = InputTable {
        x: s.x,
        y: s.y,
        labels,
        truth: Some(s.truth),
    };
    input::write_table(&a.output, &table)
}

/// Fits and serializes one model; also scores against `truth` when present.
fn fit_document(table: &InputTable, data: &Dataset64, a: &FitArgs) -> Result<FitDoc, CliError> {
    check_model(a.k)?;
    let cfg = a.em.config();
    check_config(&cfg)?;
    let res = fit(data, a.k, a.r, &cfg)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    let se = standard_errors(data, &res.psi_hat);
    let mut doc = FitDoc::new(data, &res, se);
    score(&mut doc, table)?;
    Ok(doc)
}

fn score(doc: &mut FitDoc, table: &InputTable) -> Result<(), CliError> {
    let Some(truth) = &table.truth else { return Ok(()) };
    if table.n() >= 2 {
        doc.ari = Some(adjusted_rand_index(
            &Partition(doc.labels.clone()),
            &Partition(truth.clone()),
        )?);
    }
    let unlabeled: Vec<usize> = (0..table.n()).filter(|&i| table.labels[i].is_none()).collect();
    if unlabeled.len() >= 2 {
        let pick = |v: &[usize]| Partition(unlabeled.iter().map(|&i| v[i]).collect());
        doc.ari_unlabeled = Some(adjusted_rand_index(&pick(&doc.labels), &pick(truth))?);
    }
    Ok(())
}

pub fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    let table = load_table(&a.input)?;
    let data = table.dataset()?;
    prepare_output_dir(&a.output)?;
    let doc = fit_document(&table, &data, a)?;
    write_json(&a.output.join(REPORT_FILE), &doc)?;
    write_plot_tables(&a.output, &table.x, &table.y, &doc)
}

pub fn cmd_classify(a: &FitArgs) -> Result<(), CliError> {
    let table = load_table(&a.input)?;
    let data = table.dataset()?;
    prepare_output_dir(&a.output)?;
    let fit = fit_document(&table, &data, a)?;
    let predictions = fit.unlabeled_predictions(&table.labels);
    let doc = ClassifyDoc { fit, predictions };
    write_json(&a.output.join(REPORT_FILE), &doc)?;
    write_plot_tables(&a.output, &table.x, &table.y, &doc.fit)
}

pub fn cmd_select(a: &SelectArgs) -> Result<(), CliError> {
    let table = load_table(&a.input)?;
    let data = table.dataset()?;
    prepare_output_dir(&a.output)?;
    let cfg = a.em.config();
    check_config(&cfg)?;
    if a.k_range.0.contains(&0) {
        return Err(CliError::Usage("k must be >= 1".into()));
    }
    let grid = grid_search(&data, &a.k_range.0, &a.r_range.0, &cfg)?;
    let criterion = match a.criterion {
        CriterionArg::Bic => Criterion::Bic,
        CriterionArg::Icl => Criterion::Icl,
    };
    let best = grid.best(criterion).fit.as_ref().expect("selected cell was fitted");
    let mut selected = FitDoc::new(&data, best, standard_errors(&data, &best.psi_hat));
    score(&mut selected, &table)?;
    let doc = SelectDoc {
        criterion: match a.criterion {
            CriterionArg::Bic => "bic".into(),
            CriterionArg::Icl => "icl".into(),
        },
        grid: GridDoc::from(&grid),
        selected,
    };
    write_json(&a.output.join(REPORT_FILE), &doc)?;
    write_plot_tables(&a.output, &table.x, &table.y, &doc.selected)
}

pub fn cmd_experiment(a: &ExperimentArgs) -> Result<(), CliError> {
    let em = a.em.config();
    check_config(&em)?;
    check_model(a.k)?;
    prepare_output_dir(&a.output)?;
    let (artificial, study_sample) = if a.paper_experiment {
        let cfg = ArtificialConfig {
            fit: em.clone(),
            ..ArtificialConfig::default()
        };
        let rep = run_artificial_experiment::<f64>(a.em.seed, &cfg)?;
        let data = rep.sample.unlabeled()?;
        let selected = FitDoc::new(&data, &rep.selected, rep.std_errors.clone());
        let doc = ArtificialDoc {
            seed: rep.seed,
            n: rep.sample.n(),
            grid: GridDoc::from(&rep.grid),
            selected,
            ari: rep.ari,
        };
        (Some(doc), rep.sample)
    } else {
        let path = a
            .input
            .as_ref()
            .ok_or_else(|| CliError::Usage("experiment needs --input or --paper-experiment".into()))?;
        let table = load_table(path)?;
        let truth = table
            .truth
            .clone()
            .ok_or_else(|| CliError::MissingColumn("truth".into()))?;
        (
            None,
            LabeledSample {
                x: table.x,
                y: table.y,
                truth,
            },
        )
    };
    let cfg = LabeledFractionConfig {
        m_values: a.m_values.0.clone(),
        reps: a.reps,
        k: a.k,
        degree: a.r,
        fit: em,
        seed: mix_seed(&[a.em.seed, 0xf4ac]),
    };
    let study = run_labeled_fraction_study(&study_sample, &cfg)?;
    let doc = ExperimentDoc {
        artificial,
        labeled_fraction: fraction_docs(&study),
    };
    write_json(&a.output.join(REPORT_FILE), &doc)
}
