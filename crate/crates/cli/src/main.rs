use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use retail_rules::config::{ConfigError, Overrides, PipelineConfig, Threshold};
use retail_rules::formats::{baskets_to_db, parse_assignments, read_baskets, write_baskets};
use retail_rules::kb::RuleKnowledgeBase;
use retail_rules::pipeline::{self, enumerate_levels, ingest_files, run_pipeline, PipelineError};
use retail_rules::WeightSource;
use retail_rules_core::apriori::mine;
use retail_rules_core::domain::Domain;

#[derive(Parser)]
#[command(
    name = "retail-rules",
    version,
    about = "Mine product-recommendation rules from retail transactions",
    allow_negative_numbers = true
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Pipeline configuration file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cut level for customer needs, or "enumerate".
    #[arg(long, global = true)]
    alpha: Option<Threshold>,
    /// Cut level for functional requirements, or "enumerate".
    #[arg(long, global = true)]
    beta: Option<Threshold>,
    #[arg(long, global = true)]
    minsup: Option<f64>,
    #[arg(long, global = true)]
    minconf: Option<f64>,
    /// Which declared functional-requirement weights to use.
    #[arg(long, global = true, value_enum)]
    weights: Option<WeightSource>,
    /// Write every intermediate matrix next to the knowledge base.
    #[arg(long, global = true)]
    dump_intermediates: bool,
    /// Label of the knowledge base to write or read.
    #[arg(long, global = true)]
    location: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate and repair the transaction data.
    Ingest,
    /// Show the functional-requirement and family weights.
    Weights,
    /// Cluster both domains, or list the cut levels with "enumerate".
    Cluster,
    /// Pair clusters and write the encoded transactions.
    Map,
    /// Mine rules from a basket file.
    Mine {
        /// Basket file; defaults to the one written by `map`.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run every stage and write the knowledge base.
    Run,
    /// Suggest products for a new customer's needs, e.g. a1=a11,a2=a21.
    Recommend {
        needs: String,
        #[arg(long)]
        kb: Option<PathBuf>,
    },
    /// Show the transactions and clusters behind a rule.
    Explain {
        rule_id: String,
        #[arg(long)]
        kb: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure {
            code: e.exit_code() as u8,
            message: e.to_string(),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        PipelineError::from(e).into()
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn io(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    }
}

impl Global {
    fn overrides(&self) -> Overrides {
        Overrides {
            alpha: self.alpha,
            beta: self.beta,
            minsup: self.minsup,
            minconf: self.minconf,
            location: self.location.clone(),
            weights: self.weights,
            dump_intermediates: self.dump_intermediates,
        }
    }

    fn load_config(&self) -> Result<PipelineConfig, Failure> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| invalid("--config is required"))?;
        let mut config = PipelineConfig::load(path)?;
        config.apply(&self.overrides());
        config.validate()?;
        Ok(config)
    }

    fn kb_path(&self, explicit: Option<PathBuf>) -> Result<PathBuf, Failure> {
        match explicit {
            Some(p) => Ok(p),
            None => Ok(self.load_config()?.kb_path()),
        }
    }
}

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

fn print_json<T: serde::Serialize>(value: &T) {
    out!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable")
    );
}

fn write_output(config: &PipelineConfig, name: &str, bytes: &[u8]) -> Result<PathBuf, Failure> {
    std::fs::create_dir_all(&config.output_dir).map_err(|e| io(&config.output_dir, e))?;
    let path = config.output_dir.join(name);
    pipeline::write_atomic(&path, bytes)?;
    Ok(path)
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match cli.command {
        Command::Ingest => {
            let config = g.load_config()?;
            let ingested = ingest_files(&config)?;
            out!(
                "{} record(s) accepted, {} rejected, {} value(s) repaired",
                ingested.dataset.len(),
                ingested.validation.rejected.len(),
                ingested.validation.repairs.len()
            );
            print_json(&ingested.validation);
        }
        Command::Weights => {
            let config = g.load_config()?;
            let doc =
                retail_rules::SchemaDocument::load(&config.schema).map_err(PipelineError::from)?;
            let (_, report) = doc.resolve(config.weights).map_err(PipelineError::from)?;
            print_json(&report);
        }
        Command::Cluster => {
            let config = g.load_config()?;
            let ingested = ingest_files(&config)?;
            let method = config.standardization;
            let mut partitions = serde_json::Map::new();
            for (name, domain, level) in [
                ("customer", Domain::Customer, config.alpha),
                ("product", Domain::Product, config.beta),
            ] {
                match level {
                    Threshold::Enumerate(_) => {
                        let levels = enumerate_levels(&ingested.dataset, domain, method)?;
                        out!("{name} cut levels:");
                        for l in &levels {
                            out!(
                                "  {:<22} {} cluster(s), sizes {:?}",
                                l.level,
                                l.clusters,
                                l.sizes
                            );
                        }
                    }
                    Threshold::Level(x) => {
                        let stage = pipeline::cluster_stage(&ingested.dataset, domain, method, x)?;
                        let tids: Vec<Vec<&str>> = stage
                            .clustering
                            .partition
                            .clusters
                            .iter()
                            .map(|c| {
                                c.iter()
                                    .map(|&i| ingested.dataset.records[i].tid.as_str())
                                    .collect()
                            })
                            .collect();
                        out!("{name} clusters at {x}: {}", tids.len());
                        for (k, c) in tids.iter().enumerate() {
                            out!("  {}{}: {}", &name[..1], k + 1, c.join(" "));
                        }
                        partitions.insert(
                            name.into(),
                            serde_json::json!({ "level": x, "clusters": tids }),
                        );
                    }
                }
            }
            if !partitions.is_empty() {
                let path = write_output(&config, "partitions.json", &json_bytes(&partitions))?;
                out!("wrote {}", path.display());
            }
        }
        Command::Map => {
            let config = g.load_config()?;
            let settings = config.settings()?;
            let ingested = ingest_files(&config)?;
            let d = &ingested.dataset;
            let c = pipeline::cluster_stage(
                d,
                Domain::Customer,
                settings.standardization,
                settings.alpha,
            )?;
            let p = pipeline::cluster_stage(
                d,
                Domain::Product,
                settings.standardization,
                settings.beta,
            )?;
            let m = pipeline::map_stage(d, &c.clustering.partition, &p.clustering.partition)?;
            for s in &m.dependency.selected {
                out!(
                    "g{} -> p{}  dependency {:.3}",
                    s.customer + 1,
                    s.product + 1,
                    s.score
                );
            }
            write_output(&config, "dependency.json", &json_bytes(&m.dependency))?;
            let mut buf = Vec::new();
            write_baskets(&mut buf, &m.transactions).map_err(|e| invalid(e.to_string()))?;
            let path = write_output(&config, "transactions.basket", &buf)?;
            out!(
                "wrote {} transaction(s) to {}",
                m.transactions.len(),
                path.display()
            );
        }
        Command::Mine { input } => {
            let config = match (&input, &g.config) {
                (Some(_), None) => None,
                _ => Some(g.load_config()?),
            };
            let input = match (input, &config) {
                (Some(p), _) => p,
                (None, Some(c)) => c.output_dir.join("transactions.basket"),
                (None, None) => unreachable!(),
            };
            let minsup = g.minsup.or(config.as_ref().map(|c| c.minsup));
            let minconf = g.minconf.or(config.as_ref().map(|c| c.minconf));
            let (Some(minsup), Some(minconf)) = (minsup, minconf) else {
                return Err(invalid(
                    "--minsup and --minconf are required without --config",
                ));
            };
            let file = std::fs::File::open(&input)
                .map_err(|e| invalid(format!("{}: {e}", input.display())))?;
            let baskets =
                read_baskets(file, &input.display().to_string()).map_err(PipelineError::from)?;
            let db = baskets_to_db(baskets);
            let max_len = config.as_ref().and_then(|c| c.max_itemset_len);
            let mined = mine(&db.baskets(), minsup, minconf, max_len)
                .map_err(|e| invalid(e.to_string()))?;
            for (i, r) in mined.rules.iter().enumerate() {
                out!(
                    "R{:<4} {} => {}  (support {:.3}, confidence {:.3})",
                    i + 1,
                    r.antecedent.join(" & "),
                    r.consequent.join(" & "),
                    r.support,
                    r.confidence
                );
            }
            if let Some(c) = &config {
                write_output(c, "rules.json", &json_bytes(&mined))?;
            }
        }
        Command::Run => {
            let config = g.load_config()?;
            let outcome = run_pipeline(&config)?;
            out!("{}", retail_rules::report::render(&outcome.kb));
            out!("wrote {}", outcome.kb_path.display());
        }
        Command::Recommend { needs, kb } => {
            let kb = RuleKnowledgeBase::load(&g.kb_path(kb)?)?;
            let needs = parse_assignments(&needs).map_err(invalid)?;
            kb.check_needs(&needs).map_err(invalid)?;
            let rec = kb.recommend(&needs)?;
            if let Some(w) = &rec.warning {
                eprintln!("warning: {w}");
            }
            print_json(&rec);
        }
        Command::Explain { rule_id, kb } => {
            let kb = RuleKnowledgeBase::load(&g.kb_path(kb)?)?;
            let explanation = kb.explain(&rule_id).map_err(|e| invalid(e.to_string()))?;
            print_json(&explanation);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors count as invalid input
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
