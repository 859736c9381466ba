//! Stage orchestration: ingest, cluster both domains, map, mine, persist.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use retail_rules_core::apriori::{mine, Mined, MiningError};
use retail_rules_core::distance::{dissimilarity_breakdown, dissimilarity_matrix, DistanceError};
use retail_rules_core::domain::{
    validate_dataset, Dataset, Domain, FeatureSchema, ValidationError, ValidationReport,
};
use retail_rules_core::features::DomainEncoder;
use retail_rules_core::fuzzy::{
    alpha_cut, cluster_domain, cut_levels, extract_clusters, similarity_relation,
    transitive_closure, ClusterError, DomainClustering, Partition,
};
use retail_rules_core::mapping::{
    encode_for_mining, profile_cluster, select_pairs, ClusterProfile, DependencyTable,
    EncodedTransactionDB, MappingError,
};
use retail_rules_core::preprocess::{Method, StandardizedMatrix};
use serde::Serialize;
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig, Settings};
use crate::formats::{load_dataset, write_baskets, write_matrix, FormatError};
use crate::kb::RuleKnowledgeBase;
use crate::schema_file::{SchemaDocument, SchemaFileError, WeightSource, WeightsReport};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("schema: {0}")]
    Schema(#[from] SchemaFileError),
    #[error("data: {0}")]
    Format(#[from] FormatError),
    #[error("validation: {0}")]
    Validation(#[from] ValidationError),
    #[error("distance: {0}")]
    Distance(#[from] DistanceError),
    #[error("clustering: {0}")]
    Cluster(#[from] ClusterError),
    #[error("mapping: {0}")]
    Mapping(#[from] MappingError),
    #[error("mining: {0}")]
    Mining(#[from] MiningError),
    #[error("knowledge base: {0}")]
    KnowledgeBase(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl PipelineError {
    /// 1 for bad input, 2 for a stage that failed on valid input.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_)
            | PipelineError::Schema(_)
            | PipelineError::Format(_)
            | PipelineError::Validation(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

pub struct Ingested {
    pub dataset: Dataset,
    pub validation: ValidationReport,
    pub weights: WeightsReport,
}

/// Resolves weights, then validates and repairs the raw records.
pub fn ingest(
    doc: &SchemaDocument,
    source: WeightSource,
    load: impl FnOnce(&FeatureSchema) -> Result<Dataset, FormatError>,
) -> Result<Ingested, PipelineError> {
    let (schema, weights) = doc.resolve(source)?;
    let raw = load(&schema)?;
    let validated = validate_dataset(raw)?;
    Ok(Ingested {
        dataset: validated.dataset,
        validation: validated.report,
        weights,
    })
}

pub fn ingest_files(config: &PipelineConfig) -> Result<Ingested, PipelineError> {
    config.validate()?;
    let doc = SchemaDocument::load(&config.schema)?;
    ingest(&doc, config.weights, |schema| {
        load_dataset(schema, &config.data)
    })
}

/// Encoder, standardized values and clustering for one domain.
pub struct DomainStage {
    pub encoder: DomainEncoder,
    pub standardized: StandardizedMatrix,
    pub clustering: DomainClustering,
}

pub fn cluster_stage(
    dataset: &Dataset,
    domain: Domain,
    method: Method,
    level: f64,
) -> Result<DomainStage, PipelineError> {
    let (encoder, standardized) = DomainEncoder::fit(dataset, domain, method);
    let features = encoder.encode(dataset);
    let metric = encoder.metric()?;
    let clustering = cluster_domain(&features, &metric, level)?;
    Ok(DomainStage {
        encoder,
        standardized,
        clustering,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSummary {
    pub level: f64,
    pub clusters: usize,
    pub sizes: Vec<usize>,
}

/// Partition size at every distinct cut level of one domain's closure.
pub fn enumerate_levels(
    dataset: &Dataset,
    domain: Domain,
    method: Method,
) -> Result<Vec<LevelSummary>, PipelineError> {
    let (encoder, _) = DomainEncoder::fit(dataset, domain, method);
    let features = encoder.encode(dataset);
    let d = dissimilarity_matrix(&features, &encoder.metric()?)?;
    let closure = transitive_closure(&similarity_relation(&d));
    cut_levels(&closure)
        .into_iter()
        .map(|level| {
            let p = extract_clusters(&alpha_cut(&closure, level)?, level)?;
            Ok(LevelSummary {
                level,
                clusters: p.len(),
                sizes: p.clusters.iter().map(Vec::len).collect(),
            })
        })
        .collect()
}

pub struct MappingStage {
    pub customer_profiles: Vec<ClusterProfile>,
    pub product_profiles: Vec<ClusterProfile>,
    pub dependency: DependencyTable,
    pub transactions: EncodedTransactionDB,
}

fn profiles(partition: &Partition, dataset: &Dataset) -> Result<Vec<ClusterProfile>, MappingError> {
    partition
        .clusters
        .iter()
        .enumerate()
        .map(|(id, members)| profile_cluster(id, members, dataset))
        .collect()
}

pub fn map_stage(
    dataset: &Dataset,
    customers: &Partition,
    products: &Partition,
) -> Result<MappingStage, PipelineError> {
    let customer_profiles = profiles(customers, dataset)?;
    let product_profiles = profiles(products, dataset)?;
    let dependency = select_pairs(customers, products)?;
    let transactions =
        encode_for_mining(dataset, customers, products, &dependency, &product_profiles)?;
    Ok(MappingStage {
        customer_profiles,
        product_profiles,
        dependency,
        transactions,
    })
}

/// Everything a run produces before it is persisted.
pub struct RunArtifacts {
    pub settings: Settings,
    pub ingested: Ingested,
    pub customer: DomainStage,
    pub product: DomainStage,
    pub mapping: MappingStage,
    pub mined: Mined,
}

impl RunArtifacts {
    pub fn tids(&self) -> Vec<String> {
        self.ingested
            .dataset
            .records
            .iter()
            .map(|r| r.tid.clone())
            .collect()
    }
}

/// The full pipeline over already-ingested data.
pub fn run_ingested(
    ingested: Ingested,
    settings: &Settings,
) -> Result<RunArtifacts, PipelineError> {
    let dataset = &ingested.dataset;
    let customer = cluster_stage(
        dataset,
        Domain::Customer,
        settings.standardization,
        settings.alpha,
    )?;
    let product = cluster_stage(
        dataset,
        Domain::Product,
        settings.standardization,
        settings.beta,
    )?;
    let mapping = map_stage(
        dataset,
        &customer.clustering.partition,
        &product.clustering.partition,
    )?;
    let mined = mine(
        &mapping.transactions.baskets(),
        settings.minsup,
        settings.minconf,
        settings.max_itemset_len,
    )?;
    Ok(RunArtifacts {
        settings: settings.clone(),
        ingested,
        customer,
        product,
        mapping,
        mined,
    })
}

pub fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

/// Writes `bytes` next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| PipelineError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| PipelineError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| PipelineError::KnowledgeBase(e.to_string()))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

fn write_csv(
    path: &Path,
    f: impl FnOnce(BufWriter<fs::File>) -> csv::Result<()>,
) -> Result<(), PipelineError> {
    let file = fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    f(BufWriter::new(file)).map_err(|e| PipelineError::io(path, std::io::Error::other(e)))
}

fn write_standardized(
    path: &Path,
    tids: &[String],
    m: &StandardizedMatrix,
) -> Result<(), PipelineError> {
    write_csv(path, |out| {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(
            std::iter::once("tid").chain(m.columns.iter().map(|c| c.variable.as_str())),
        )?;
        for (tid, row) in tids.iter().zip(&m.values) {
            w.write_record(
                std::iter::once(tid.clone()).chain(row.iter().map(ToString::to_string)),
            )?;
        }
        w.flush()?;
        Ok(())
    })
}

fn tid_partition(p: &Partition, tids: &[String]) -> Vec<Vec<String>> {
    p.clusters
        .iter()
        .map(|c| c.iter().map(|&i| tids[i].clone()).collect())
        .collect()
}

#[derive(Serialize)]
struct PartitionDump {
    alpha: f64,
    beta: f64,
    customer: Vec<Vec<String>>,
    product: Vec<Vec<String>>,
}

/// Dumps every intermediate matrix into `dir`, building it under
/// `dir.partial` so a failed run leaves no half-written directory behind.
pub fn write_intermediates(dir: &Path, run: &RunArtifacts) -> Result<(), PipelineError> {
    let partial = PathBuf::from(format!("{}.partial", dir.display()));
    if partial.exists() {
        fs::remove_dir_all(&partial).map_err(|e| PipelineError::io(&partial, e))?;
    }
    fs::create_dir_all(&partial).map_err(|e| PipelineError::io(&partial, e))?;
    let tids = run.tids();

    for (name, stage) in [("customer", &run.customer), ("product", &run.product)] {
        let c = &stage.clustering;
        let file = |what: &str| partial.join(format!("{name}_{what}.csv"));
        write_standardized(&file("standardized"), &tids, &stage.standardized)?;
        write_csv(&file("dissimilarity"), |o| {
            write_matrix(o, &tids, &c.dissimilarity.values)
        })?;
        write_csv(&file("similarity"), |o| {
            write_matrix(o, &tids, c.relation.matrix())
        })?;
        write_csv(&file("closure"), |o| {
            write_matrix(o, &tids, c.closure.matrix())
        })?;
        write_csv(&file("cut"), |o| {
            write_matrix(o, &tids, &c.cut.matrix().map(|b| u8::from(*b)))
        })?;
    }

    // per-family distances of the functional requirements
    let features = run.product.encoder.encode(&run.ingested.dataset);
    let breakdown = dissimilarity_breakdown(&features, &run.product.encoder.metric()?)?;
    if let Some(components) = &breakdown.components {
        for (family, m) in ["numerical", "binary", "nominal"].iter().zip(components) {
            let path = partial.join(format!("product_distance_{family}.csv"));
            write_csv(&path, |o| write_matrix(o, &tids, m))?;
        }
    }

    write_json(
        &partial.join("partitions.json"),
        &PartitionDump {
            alpha: run.settings.alpha,
            beta: run.settings.beta,
            customer: tid_partition(&run.customer.clustering.partition, &tids),
            product: tid_partition(&run.product.clustering.partition, &tids),
        },
    )?;
    write_json(&partial.join("weights.json"), &run.ingested.weights)?;
    write_json(&partial.join("validation.json"), &run.ingested.validation)?;
    write_json(&partial.join("dependency.json"), &run.mapping.dependency)?;
    write_json(
        &partial.join("customer_profiles.json"),
        &run.mapping.customer_profiles,
    )?;
    write_json(
        &partial.join("product_profiles.json"),
        &run.mapping.product_profiles,
    )?;
    write_json(&partial.join("frequent_itemsets.json"), &run.mined.itemsets)?;
    write_csv(&partial.join("transactions.basket"), |o| {
        write_baskets(o, &run.mapping.transactions)
    })?;

    if dir.exists() {
        fs::remove_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    fs::rename(&partial, dir).map_err(|e| PipelineError::io(dir, e))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub kb: RuleKnowledgeBase,
    pub kb_path: PathBuf,
    pub report_path: PathBuf,
}

/// Runs every stage from the config's files and persists the knowledge base,
/// a text report and, when asked, the intermediates.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunOutcome, PipelineError> {
    let settings = config.settings()?;
    let ingested = ingest_files(config)?;
    let run = run_ingested(ingested, &settings)?;
    let kb = RuleKnowledgeBase::build(&run, unix_time());

    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| PipelineError::io(out, e))?;
    if config.dump_intermediates {
        write_intermediates(
            &out.join(format!("intermediates_{}", settings.location)),
            &run,
        )?;
    }
    let kb_path = config.kb_path();
    kb.save(&kb_path)?;
    let report_path = out.join(format!("report_{}.txt", settings.location));
    write_atomic(&report_path, crate::report::render(&kb).as_bytes())?;
    Ok(RunOutcome {
        kb,
        kb_path,
        report_path,
    })
}
