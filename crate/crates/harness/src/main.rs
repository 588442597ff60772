//! Command-line surface of the harness.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use chsh_agents::build_agent;
use chsh_core::grid::GridResults;
use chsh_core::model::{SamplingConfig, WordOrder, WordPair};
use chsh_harness::analyze::Analysis;
use chsh_harness::config::{GridSpec, RunConfig};
use chsh_harness::engine::{run_grid, EngineOptions, ProgressEvent};
use chsh_harness::report::export_reports;
use chsh_harness::store::{load_store, ParseMode, TrialFilter, TrialStore};
use chsh_harness::suites::run_synthetic_suites;

#[derive(Parser)]
#[command(
    name = "chsh-harness",
    about = "Semantic CHSH Bell tests over language-model and synthetic agents",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct StoreArgs {
    /// Trial store path (one JSON record per line).
    #[arg(long)]
    store: PathBuf,
    /// Only consider trials from this model id.
    #[arg(long)]
    model: Option<String>,
    /// Fail on corrupt store lines (default).
    #[arg(long, conflicts_with = "lenient")]
    strict: bool,
    /// Skip corrupt store lines, counting them.
    #[arg(long)]
    lenient: bool,
}

impl StoreArgs {
    fn mode(&self) -> ParseMode {
        if self.lenient {
            ParseMode::Lenient
        } else {
            ParseMode::Strict
        }
    }

    fn filter(&self) -> TrialFilter {
        TrialFilter {
            model_id: self.model.clone(),
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a config file and print the validation result.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run trials for a single grid point.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        store: PathBuf,
        /// Word pair as word1/word2 (default: first lexicon entry).
        #[arg(long)]
        pair: Option<String>,
        /// Word order: original or flipped.
        #[arg(long, default_value = "original")]
        order: String,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        top_p: Option<f64>,
        #[arg(long)]
        top_k: Option<u32>,
        /// Trials to attempt at this point (default: config trials_per_point).
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        model: Option<String>,
    },
    /// Run the full (pair x order x sampling) sweep.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        store: PathBuf,
        /// "default" for the built-in 27-point grid, or a TOML grid file.
        #[arg(long)]
        grid: Option<String>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        model: Option<String>,
    },
    /// Recompute CHSH results and summaries from the store.
    Analyze {
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Export summary tables, heatmaps, order effects, correlations, plots.
    Report {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        store: StoreArgs,
        #[arg(long)]
        outdir: PathBuf,
    },
    /// Run the synthetic suites and print the estimator comparison.
    Synthetic {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Samples per setting pair for the pairwise suites.
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
}

fn stderr_progress() -> Arc<dyn Fn(&ProgressEvent) + Send + Sync> {
    Arc::new(|event: &ProgressEvent| {
        if let Ok(line) = serde_json::to_string(event) {
            eprintln!("{line}");
        }
    })
}

fn find_pair(config: &RunConfig, wanted: Option<&str>) -> Result<WordPair> {
    match wanted {
        None => Ok(config.lexicon[0].clone()),
        Some(key) => config
            .lexicon
            .iter()
            .find(|p| p.key() == key)
            .cloned()
            .with_context(|| format!("pair {key} not in lexicon")),
    }
}

fn parse_order(raw: &str) -> Result<WordOrder> {
    match raw {
        "original" => Ok(WordOrder::Original),
        "flipped" => Ok(WordOrder::Flipped),
        other => bail!("order must be original or flipped, got {other}"),
    }
}

fn load_grid_arg(arg: Option<&str>, config: &RunConfig) -> Result<Vec<SamplingConfig>> {
    match arg {
        None => Ok(config.grid.expand()?),
        Some("default") => Ok(chsh_core::model::default_grid()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read grid file {path}"))?;
            let spec: GridSpec =
                toml::from_str(&text).with_context(|| format!("cannot parse grid file {path}"))?;
            Ok(spec.expand()?)
        }
    }
}

struct Session {
    config: RunConfig,
    config_dir: PathBuf,
}

impl Session {
    fn load(path: &Path) -> Result<Self> {
        let (config, config_dir) = RunConfig::load(path)?;
        Ok(Self { config, config_dir })
    }

    fn agent(&self, model_override: Option<&str>) -> Result<Arc<chsh_agents::AgentHandle>> {
        let mut descriptor = self.config.backend.descriptor();
        if let Some(model) = model_override {
            descriptor.model_id = model.to_string();
        }
        let script = self.config.backend.load_script(&self.config_dir)?;
        let seed = self
            .config
            .backend
            .synthetic_seed
            .unwrap_or(self.config.seed);
        let agent = build_agent(descriptor, script, seed)?
            .with_classifier_template(self.config.prompts.classifier.clone());
        Ok(agent.shared())
    }

    fn engine_options(&self, trials: Option<usize>, seed: Option<u64>) -> EngineOptions {
        EngineOptions {
            personas: self.config.personas.clone(),
            templates: self.config.templates.clone(),
            interpretation_template: self.config.prompts.interpretation.clone(),
            trials_per_point: trials.unwrap_or(self.config.trials_per_point),
            seed: seed.unwrap_or(self.config.seed),
            concurrency: self.config.concurrency,
        }
    }
}

#[tokio::main]
async fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Validate { config } => {
            let session = Session::load(&config)?;
            let grid = session.config.grid.expand()?;
            println!(
                "config ok: backend {} ({}), {} word pairs, {} templates, {} grid points, {} trials/point",
                session.config.backend.model_id,
                session.config.backend.kind,
                session.config.lexicon.len(),
                session.config.templates.len(),
                grid.len(),
                session.config.trials_per_point,
            );
            Ok(())
        }
        Command::Run {
            config,
            store,
            pair,
            order,
            tau,
            top_p,
            top_k,
            trials,
            seed,
            model,
        } => {
            let session = Session::load(&config)?;
            let agent = session.agent(model.as_deref())?;
            let store = Arc::new(TrialStore::open(&store)?);
            let pair = find_pair(&session.config, pair.as_deref())?;
            let order = parse_order(&order)?;
            let sampling = SamplingConfig::new(tau, top_p, top_k)?;
            let options = session.engine_options(trials, seed);
            let outcome = run_grid(
                agent,
                store,
                &[pair],
                &[order],
                &[sampling],
                &options,
                Some(stderr_progress()),
            )
            .await?;
            println!(
                "attempted {} trials ({} persisted, {} failed, {} already stored)",
                outcome.attempted, outcome.persisted, outcome.failed, outcome.skipped_existing
            );
            for (key, cell) in &outcome.results.cells {
                if let Some(chsh) = &cell.chsh {
                    println!(
                        "{key}: S = {:.4} (signed {}), {} used / {} discarded",
                        chsh.s_literal,
                        chsh.s_signed
                            .map_or_else(|| "n/a".into(), |s| format!("{s:.4}")),
                        chsh.n_complete,
                        chsh.n_discarded
                    );
                }
            }
            Ok(())
        }
        Command::Sweep {
            config,
            store,
            grid,
            trials,
            seed,
            model,
        } => {
            let session = Session::load(&config)?;
            let agent = session.agent(model.as_deref())?;
            let store = Arc::new(TrialStore::open(&store)?);
            let grid = load_grid_arg(grid.as_deref(), &session.config)?;
            let options = session.engine_options(trials, seed);
            let outcome = run_grid(
                agent,
                store,
                &session.config.lexicon,
                &WordOrder::ALL,
                &grid,
                &options,
                Some(stderr_progress()),
            )
            .await?;
            println!(
                "sweep done: attempted {}, persisted {}, failed {}, already stored {}",
                outcome.attempted, outcome.persisted, outcome.failed, outcome.skipped_existing
            );
            Ok(())
        }
        Command::Analyze { store, outdir } => {
            let loaded = load_store(&store.store, store.mode(), &store.filter())?;
            if store.lenient && loaded.skipped_lines > 0 {
                eprintln!("skipped {} corrupt store lines", loaded.skipped_lines);
            }
            let analysis = Analysis::from_trials(loaded.trials);
            std::fs::create_dir_all(&outdir)
                .with_context(|| format!("cannot create {}", outdir.display()))?;
            let out_path = outdir.join("analysis.json");
            std::fs::write(&out_path, analysis.to_json())
                .with_context(|| format!("cannot write {}", out_path.display()))?;
            for (model, model_analysis) in &analysis.models {
                match &model_analysis.summary {
                    Some(summary) => println!(
                        "{model}: n={} mean={:.3} sigma={:.3} iqr={:.3} viol={:.1}%",
                        summary.n,
                        summary.mean,
                        summary.std_dev,
                        summary.iqr,
                        summary.violation_rate * 100.0
                    ),
                    None => println!("{model}: no grid points with usable trials"),
                }
            }
            println!("analysis written to {}", out_path.display());
            Ok(())
        }
        Command::Report {
            config,
            store,
            outdir,
        } => {
            let session = Session::load(&config)?;
            let loaded = load_store(&store.store, store.mode(), &store.filter())?;
            if store.lenient && loaded.skipped_lines > 0 {
                eprintln!("skipped {} corrupt store lines", loaded.skipped_lines);
            }
            let per_model: BTreeMap<String, GridResults> = Analysis::grid_results(loaded.trials);
            let analysis_models = per_model.keys().cloned().collect::<Vec<_>>();
            let mut summaries = Vec::new();
            let mut order_reports = BTreeMap::new();
            for model in &analysis_models {
                let results = &per_model[model];
                if let Ok(summary) = chsh_core::analysis::summarize_model(model, results) {
                    summaries.push(summary);
                }
                order_reports.insert(model.clone(), chsh_core::analysis::order_effects(results));
            }
            let benchmarks = session.config.load_benchmarks(&session.config_dir)?;
            let manifest = export_reports(
                &per_model,
                &summaries,
                &order_reports,
                benchmarks.as_ref(),
                &outdir,
            )?;
            println!(
                "wrote {} files to {}",
                manifest.files.len(),
                outdir.display()
            );
            for file in &manifest.files {
                println!("  {file}");
            }
            for note in &manifest.notes {
                println!("  note: {note}");
            }
            Ok(())
        }
        Command::Synthetic { seed, samples } => {
            let report = run_synthetic_suites(seed, samples);
            println!("synthetic estimator comparison (seed {seed})");
            println!(
                "  local hidden variable: max |S| over 16 strategies = {:.4}, \
                 max |S_signed| over {} mixtures = {:.4}, S_literal on complete data = {:.4}",
                report.hidden_variable.max_abs_per_strategy,
                report.hidden_variable.mixtures,
                report.hidden_variable.max_abs_mixture,
                report.hidden_variable.literal_on_mixture,
            );
            println!(
                "  no-signaling box:      S_signed (pairwise, {} samples/pair) = {:.4}",
                report.pr_box.samples_per_pair, report.pr_box.signed_s
            );
            println!(
                "  singlet statistics:    S_signed (pairwise, {} samples/pair) = {:.4} \
                 (expected {:.4})",
                report.singlet.samples_per_pair, report.singlet.signed_s, report.singlet_expected
            );
            Ok(())
        }
    }
}
