use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use atlm::data::format_schema;
use atlm::registry::{DatasetSpec, Prepared};
use atlm::report::{self, EvaluationReport, Experiment, Format};
use atlm::validation::{self, PlanKind, ValidationPlan};
use atlm::{transform, Atlm, AtlmModel, Error, Execution, Result, UnseenLevelPolicy};

#[derive(Parser)]
#[command(name = "atlm", version, about = "Automatically transformed linear baseline for effort estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Show the schema and the transform chosen for each variable.
    Inspect {
        #[command(flatten)]
        data: DataArgs,
        /// text or json
        #[arg(long, default_value = "text")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate ATLM under a validation plan.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        plan: PlanArgs,
        /// json, csv or table
        #[arg(long, default_value = "json")]
        format: String,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for fold evaluation (0 = all cores, 1 = sequential).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        /// error or as-reference
        #[arg(long, default_value = "error")]
        unseen_level: String,
    },
    /// Write the train/test row positions of a plan as JSON.
    ExportFolds {
        #[command(flatten)]
        data: DataArgs,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerun a canned benchmark: table1, table2 or figure1.
    Reproduce {
        experiment: String,
        /// Directory for the output files; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        data_dir: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Fit ATLM on a whole dataset and write the model as JSON.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict a dataset with a saved model; writes row_id,predicted,actual.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value = "error")]
        unseen_level: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct DataArgs {
    /// Built-in dataset name (cocomo81, desharnais, maxwell) or a CSV path.
    #[arg(long)]
    dataset: String,
    /// Schema sidecar: one `name kind role` line per column.
    #[arg(long)]
    schema: Option<PathBuf>,
    /// Preparation recipe file.
    #[arg(long)]
    recipe: Option<PathBuf>,
    /// Directory holding the built-in CSV files.
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    /// loocv, kfold:K or holdout:SxR
    #[arg(long, default_value = "kfold:10")]
    plan: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

impl DataArgs {
    fn resolve(&self) -> Result<Prepared> {
        DatasetSpec {
            dataset: self.dataset.clone(),
            schema: self.schema.clone(),
            recipe: self.recipe.clone(),
            data_dir: self.data_dir.clone(),
        }
        .resolve()
    }
}

impl PlanArgs {
    fn plan(&self) -> Result<ValidationPlan> {
        Ok(ValidationPlan::new(self.plan.parse::<PlanKind>()?, self.seed))
    }
}

fn emit(out: Option<&Path>, contents: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, contents).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(contents.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Io {
                    path: PathBuf::from("<stdout>"),
                    source: e,
                })
        }
    }
}

fn inspect(prepared: &Prepared, format: &str) -> Result<String> {
    let ds = &prepared.dataset;
    let table = transform::calculate_transforms(ds)?;
    match format {
        "json" => {
            let value = serde_json::json!({
                "dataset": ds.name(),
                "rows": ds.n_rows(),
                "raw_rows": prepared.raw_rows,
                "schema": ds.schema(),
                "transforms": table,
            });
            let mut s = serde_json::to_string_pretty(&value)?;
            s.push('\n');
            Ok(s)
        }
        "text" => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "dataset {} ({} rows prepared from {} raw)",
                ds.name(),
                ds.n_rows(),
                prepared.raw_rows
            );
            for note in &prepared.recipe.notes {
                let _ = writeln!(s, "note: {note}");
            }
            s.push('\n');
            s.push_str(&format_schema(ds.schema()));
            s.push('\n');
            s.push_str(&table.to_text());
            Ok(s)
        }
        other => Err(Error::Plan(format!("unknown inspect format '{other}' (text, json)"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Inspect { data, format, out } => {
            let prepared = data.resolve()?;
            emit(out.as_deref(), &inspect(&prepared, &format)?)
        }
        Command::Evaluate {
            data,
            plan,
            format,
            out,
            jobs,
            unseen_level,
        } => {
            let format: Format = format.parse()?;
            let policy: UnseenLevelPolicy = unseen_level.parse()?;
            let plan = plan.plan()?;
            let prepared = data.resolve()?;
            let model = Atlm {
                unseen_levels: policy,
            };
            let outcome = Execution::with_jobs(jobs, |exec| {
                validation::run_validation(&prepared.dataset, &plan, &model, exec)
            })?;
            let report = EvaluationReport::new(&prepared, &outcome);
            emit(out.as_deref(), &report.render(format)?)
        }
        Command::ExportFolds { data, plan, out } => {
            let plan = plan.plan()?;
            let prepared = data.resolve()?;
            let folds = validation::generate_folds(&prepared.dataset, &plan)?;
            emit(out.as_deref(), &folds.to_json()?)
        }
        Command::Reproduce {
            experiment,
            out,
            data_dir,
            jobs,
        } => {
            let experiment: Experiment = experiment.parse()?;
            let bundle = Execution::with_jobs(jobs, |exec| {
                report::reproduce(experiment, data_dir.as_deref(), exec)
            })?;
            match out {
                Some(dir) => bundle.write_to(&dir),
                None => {
                    let mut all = String::new();
                    for (name, contents) in &bundle.files {
                        let _ = writeln!(all, "==> {name} <==");
                        all.push_str(contents);
                    }
                    emit(None, &all)
                }
            }
        }
        Command::Fit { data, out } => {
            let prepared = data.resolve()?;
            let model = atlm::atlm_fit(&prepared.dataset)?;
            let mut s = serde_json::to_string_pretty(&model)?;
            s.push('\n');
            emit(out.as_deref(), &s)
        }
        Command::Predict {
            model,
            data,
            unseen_level,
            out,
        } => {
            let policy: UnseenLevelPolicy = unseen_level.parse()?;
            let text = std::fs::read_to_string(&model).map_err(|e| Error::Io {
                path: model.clone(),
                source: e,
            })?;
            let model: AtlmModel = serde_json::from_str(&text)?;
            let prepared = data.resolve()?;
            let predictions = atlm::atlm_predict(&model, &prepared.dataset, policy)?;
            emit(out.as_deref(), &predictions.to_csv_string()?)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {message}", e.code());
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
