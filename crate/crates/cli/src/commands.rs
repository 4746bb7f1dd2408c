//! Subcommand implementations. Data goes to stdout or files, diagnostics to
//! stderr.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ladder_core::ensemble::{
    self, AggregateError, AggregatorConfig, ChunkRef, EncoderBackend, ExternalBackend, ExternalConfig,
    SyntheticBackend, SyntheticParams, TableBackend,
};
use ladder_core::eval::{
    bd_br, cross_validate, generate_synthetic_dataset, write_cv_csv, write_sequence_csv, CvReport, DatasetEntry,
    Method, SyntheticDatasetSpec,
};
use ladder_core::learners::{
    classifier_ladder, regressor_ladder, rfe_select, train_classifier, train_regressor, ClassifierModel, FeatureMask,
    LearnError, LearnerKind, ModelFile, RegressorModel, TrainingSample,
};
use ladder_core::rq::io::{
    group_by_chunk, read_ladder, read_rq_csv_path, surface_from_records, surface_to_records, write_ladder,
    write_rq_csv, RqRecord,
};
use ladder_core::rq::{cross_over_bitrates, BitrateLadder, Resolution, RqPoint};
use ladder_core::video::y4m::read_y4m;
use ladder_core::video::yuv::{read_raw_yuv, RawSidecar};
use ladder_core::video::{
    chunk_features, read_feature_csv, write_feature_csv, FeatureRecord, VideoChunk, FEATURE_COUNT,
    FEATURE_NAMES,
};

use crate::config::AppConfig;

/// Input or validation problem.
pub const EXIT_INPUT: u8 = 2;
/// The encoder backend failed.
pub const EXIT_BACKEND: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn input(e: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_INPUT,
            error: e.into(),
        }
    }

    pub fn backend(e: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_BACKEND,
            error: e.into(),
        }
    }
}

type CmdResult<T = ()> = Result<T, Failure>;

trait OrInput<T> {
    fn or_input(self, what: impl FnOnce() -> String) -> CmdResult<T>;
}

impl<T, E> OrInput<T> for Result<T, E>
where
    E: std::error::Error + Send + Sync + 'static,
{
    fn or_input(self, what: impl FnOnce() -> String) -> CmdResult<T> {
        self.with_context(what).map_err(Failure::input)
    }
}

fn create_dir(dir: &Path) -> CmdResult {
    std::fs::create_dir_all(dir).or_input(|| format!("cannot create {}", dir.display()))
}

fn create_file(path: &Path) -> CmdResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .or_input(|| format!("cannot create {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut s = serde_json::to_string_pretty(value).map_err(Failure::input)?;
    s.push('\n');
    std::fs::write(path, s).or_input(|| format!("cannot write {}", path.display()))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> CmdResult<T> {
    let bytes = std::fs::read(path).or_input(|| format!("cannot read {}", path.display()))?;
    serde_json::from_slice(&bytes).or_input(|| format!("invalid JSON in {}", path.display()))
}

/// Chunk ids become file names, so they must be plain names.
fn check_chunk_id(id: &str) -> CmdResult {
    if id.is_empty() || id == "." || id == ".." || id.contains(['/', '\\']) {
        return Err(Failure::input(anyhow!("chunk id {id:?} cannot be used as a file name")));
    }
    Ok(())
}

fn read_features(path: &Path) -> CmdResult<Vec<FeatureRecord>> {
    let f = File::open(path).or_input(|| format!("cannot open {}", path.display()))?;
    read_feature_csv(BufReader::new(f)).or_input(|| format!("invalid feature CSV {}", path.display()))
}

fn mask_names(mask: &FeatureMask) -> Vec<&'static str> {
    mask.selected().into_iter().map(|i| FEATURE_NAMES[i]).collect()
}

// ---------------------------------------------------------------------------
// extract-features

#[derive(Args, Debug)]
pub struct ExtractArgs {
    /// Y4M or raw .yuv files, or directories holding them
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output CSV (stdout when absent)
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Width of raw .yuv inputs that have no `<file>.json` sidecar
    #[arg(long)]
    width: Option<usize>,
    /// Height of raw .yuv inputs that have no sidecar
    #[arg(long)]
    height: Option<usize>,
    /// Frame rate of raw .yuv inputs that have no sidecar
    #[arg(long, default_value_t = 30.0)]
    fps: f64,
    /// Write rows for the files that parsed even if others failed
    #[arg(long)]
    keep_going: bool,
}

fn is_video(p: &Path) -> bool {
    matches!(p.extension().and_then(|e| e.to_str()), Some("y4m" | "yuv"))
}

fn collect_inputs(inputs: &[PathBuf]) -> CmdResult<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .or_input(|| format!("cannot list {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.is_file() && is_video(f))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn load_chunk(path: &Path, args: &ExtractArgs) -> anyhow::Result<VideoChunk> {
    if path.extension().and_then(|e| e.to_str()) == Some("yuv") {
        let mut sidecar = path.as_os_str().to_owned();
        sidecar.push(".json");
        let sidecar = PathBuf::from(sidecar);
        let geom = if sidecar.exists() {
            serde_json::from_slice::<RawSidecar>(&std::fs::read(&sidecar)?)
                .with_context(|| format!("invalid sidecar {}", sidecar.display()))?
        } else {
            match (args.width, args.height) {
                (Some(width), Some(height)) => RawSidecar {
                    width,
                    height,
                    fps: args.fps,
                },
                _ => anyhow::bail!("raw YUV needs a {} sidecar or --width/--height", sidecar.display()),
            }
        };
        let bytes = std::fs::read(path)?;
        Ok(read_raw_yuv(&bytes, geom.width, geom.height, geom.fps)?)
    } else {
        Ok(read_y4m(BufReader::new(File::open(path)?))?)
    }
}

pub fn extract_features(cfg: &AppConfig, args: ExtractArgs) -> CmdResult {
    cfg.glcm.validate().map_err(Failure::input)?;
    let files = collect_inputs(&args.inputs)?;
    if files.is_empty() {
        return Err(Failure::input(anyhow!("no .y4m or .yuv inputs found")));
    }
    let results: Vec<anyhow::Result<FeatureRecord>> = files
        .par_iter()
        .map(|path| {
            let chunk_id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| anyhow!("file name is not valid UTF-8"))?
                .to_string();
            let chunk = load_chunk(path, &args)?;
            let features = chunk_features(&chunk, &cfg.glcm)?;
            Ok(FeatureRecord { chunk_id, features })
        })
        .collect();

    let mut rows = Vec::new();
    let mut failed = 0;
    for (path, r) in files.iter().zip(results) {
        match r {
            Ok(row) => rows.push(row),
            Err(e) => {
                failed += 1;
                eprintln!("{}: {e:#}", path.display());
            }
        }
    }
    if failed == 0 || args.keep_going {
        let out: Box<dyn Write> = match &args.output {
            Some(p) => Box::new(create_file(p)?),
            None => Box::new(std::io::stdout().lock()),
        };
        write_feature_csv(out, &rows).map_err(Failure::input)?;
    }
    if failed > 0 {
        return Err(Failure::input(anyhow!("{failed} of {} inputs failed", files.len())));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// build-gt

#[derive(Args, Debug)]
pub struct BuildGtArgs {
    /// RQ CSV with columns chunk_id,width,height,bitrate_bps,quality_db
    rq_csv: PathBuf,
    /// Directory for `<chunk>.json` ladders and `manifest.csv`
    #[arg(long)]
    out_dir: PathBuf,
}

/// One row of a training manifest: a chunk and its ground-truth ladder file.
#[derive(Debug, Serialize, Deserialize)]
struct ManifestRow {
    chunk_id: String,
    ladder: PathBuf,
}

pub fn build_gt(cfg: &AppConfig, args: BuildGtArgs) -> CmdResult {
    let set = cfg.resolution_set().map_err(Failure::input)?;
    let grid = cfg.grid().map_err(Failure::input)?;
    let records = read_rq_csv_path(&args.rq_csv).or_input(|| format!("cannot read {}", args.rq_csv.display()))?;
    let groups = group_by_chunk(records);
    for (id, _) in &groups {
        check_chunk_id(id)?;
    }
    let built: Vec<_> = groups
        .par_iter()
        .map(|(id, recs)| surface_from_records(id, recs, &set).map(|s| cross_over_bitrates(&s, &grid)))
        .collect();

    let mut ladders = Vec::with_capacity(built.len());
    let mut errors = Vec::new();
    for ((id, _), r) in groups.iter().zip(built) {
        match r {
            Ok(l) => ladders.push((id, l)),
            Err(e) => errors.push(format!("{id}: {e}")),
        }
    }
    if !errors.is_empty() {
        for e in &errors {
            eprintln!("{e}");
        }
        return Err(Failure::input(anyhow!("{} of {} chunks are unusable", errors.len(), groups.len())));
    }

    create_dir(&args.out_dir)?;
    let mut manifest = csv::Writer::from_writer(create_file(&args.out_dir.join("manifest.csv"))?);
    for (id, ladder) in &ladders {
        let name = format!("{id}.json");
        write_ladder(&args.out_dir.join(&name), ladder).map_err(Failure::input)?;
        manifest
            .serialize(ManifestRow {
                chunk_id: id.to_string(),
                ladder: PathBuf::from(name),
            })
            .map_err(Failure::input)?;
        println!("{id}: {}", format_ladder(ladder));
    }
    manifest.flush().map_err(Failure::input)?;
    Ok(())
}

fn format_ladder(l: &BitrateLadder) -> String {
    let c: Vec<String> = l.crossover_log2_rates().iter().map(|x| format!("{x:.3}")).collect();
    format!("cross-overs (log2 bps) [{}]", c.join(", "))
}

// ---------------------------------------------------------------------------
// train

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Feature CSV from extract-features
    #[arg(long)]
    features: PathBuf,
    /// CSV with columns chunk_id,ladder; ladder paths are relative to the manifest
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for classifier.json, regressor.json and masks.json
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Serialize)]
struct MasksFile {
    feature_names: Vec<&'static str>,
    classifier: FeatureMask,
    regressor: FeatureMask,
}

fn learn_failure(e: LearnError) -> Failure {
    Failure::input(e)
}

pub fn train(cfg: &AppConfig, args: TrainArgs) -> CmdResult {
    let learner = cfg.learner_config().map_err(Failure::input)?;
    let features = read_features(&args.features)?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));
    let mut rdr = csv::Reader::from_path(&args.manifest)
        .or_input(|| format!("cannot read {}", args.manifest.display()))?;
    let mut samples = Vec::new();
    for row in rdr.deserialize::<ManifestRow>() {
        let row = row.or_input(|| format!("invalid manifest {}", args.manifest.display()))?;
        let f = features
            .iter()
            .find(|f| f.chunk_id == row.chunk_id)
            .ok_or_else(|| Failure::input(anyhow!("chunk {} has no feature row", row.chunk_id)))?;
        let path = base.join(&row.ladder);
        let gt_ladder = read_ladder(&path).or_input(|| format!("cannot read ladder {}", path.display()))?;
        samples.push(TrainingSample {
            chunk_id: row.chunk_id,
            features: f.features,
            gt_ladder,
        });
    }

    let select = |kind| -> CmdResult<FeatureMask> {
        if cfg.rfe_target_k >= FEATURE_COUNT {
            Ok(FeatureMask::all())
        } else {
            rfe_select(&samples, kind, cfg.rfe_target_k, &learner).map_err(learn_failure)
        }
    };
    let cl_mask = select(LearnerKind::Classifier)?;
    let rg_mask = select(LearnerKind::Regressor)?;
    let cl = train_classifier(&samples, &cl_mask, &learner.grid, &learner.gbt).map_err(learn_failure)?;
    let rg = train_regressor(&samples, &rg_mask, &learner.grid, &learner.gp).map_err(learn_failure)?;

    create_dir(&args.out_dir)?;
    let save = |m: ModelFile, name: &str| -> CmdResult {
        let p = args.out_dir.join(name);
        m.save(&p).or_input(|| format!("cannot write {}", p.display()))
    };
    save(ModelFile::from_classifier(&cl).map_err(learn_failure)?, "classifier.json")?;
    save(ModelFile::from_regressor(&rg).map_err(learn_failure)?, "regressor.json")?;
    write_json(
        &args.out_dir.join("masks.json"),
        &MasksFile {
            feature_names: FEATURE_NAMES.to_vec(),
            classifier: cl_mask.clone(),
            regressor: rg_mask.clone(),
        },
    )?;

    println!("samples: {}", samples.len());
    println!(
        "classifier: {} classes, {} rounds, features [{}]",
        cl.class_count(),
        cl.trees.first().map_or(0, Vec::len),
        mask_names(&cl_mask).join(", ")
    );
    println!("regressor: features [{}]", mask_names(&rg_mask).join(", "));
    for (b, gp) in rg.gps.iter().enumerate() {
        println!(
            "  boundary {}: length_scale {:.4}, signal_variance {:.4}, noise_variance {:.3e}, log ML {:.3}",
            b + 1,
            gp.kernel.length_scale,
            gp.kernel.signal_variance,
            gp.kernel.noise_variance,
            gp.log_marginal_likelihood
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// predict

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Classifier model file
    #[arg(long)]
    classifier: PathBuf,
    /// Regressor model file
    #[arg(long)]
    regressor: PathBuf,
    /// Feature CSV
    #[arg(long)]
    features: PathBuf,
    /// Directory for `<chunk>.classifier.json` and `<chunk>.regressor.json`
    #[arg(long)]
    out_dir: PathBuf,
}

fn load_model<T>(path: &Path, convert: fn(ModelFile) -> Result<T, LearnError>) -> CmdResult<T> {
    let file = ModelFile::load(path).or_input(|| format!("cannot load model {}", path.display()))?;
    convert(file).or_input(|| format!("model {}", path.display()))
}

pub fn predict(cfg: &AppConfig, args: PredictArgs) -> CmdResult {
    let grid = cfg.grid().map_err(Failure::input)?;
    let cl: ClassifierModel = load_model(&args.classifier, ModelFile::into_classifier)?;
    let rg: RegressorModel = load_model(&args.regressor, ModelFile::into_regressor)?;
    if cl.resolutions != rg.resolutions {
        return Err(Failure::input(anyhow!("models were trained on different resolution sets")));
    }
    let features = read_features(&args.features)?;
    for f in &features {
        check_chunk_id(&f.chunk_id)?;
    }
    let ladders: Vec<(BitrateLadder, BitrateLadder)> = features
        .par_iter()
        .map(|f| (classifier_ladder(&cl, &f.features, &grid), regressor_ladder(&rg, &f.features)))
        .collect();
    create_dir(&args.out_dir)?;
    for (f, (l_cl, l_rg)) in features.iter().zip(&ladders) {
        for (suffix, l) in [("classifier", l_cl), ("regressor", l_rg)] {
            let p = args.out_dir.join(format!("{}.{suffix}.json", f.chunk_id));
            write_ladder(&p, l).or_input(|| format!("cannot write {}", p.display()))?;
        }
        println!("{} classifier: {}", f.chunk_id, format_ladder(l_cl));
        println!("{} regressor: {}", f.chunk_id, format_ladder(l_rg));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// aggregate

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BackendKind {
    /// Interpolate measured points from an RQ CSV
    Table,
    /// Closed-form saturating curves
    Synthetic,
    /// Run the configured encoder command
    External,
}

#[derive(Args, Debug)]
pub struct AggregateArgs {
    /// Ladder predicted by the classifier
    #[arg(long)]
    classifier_ladder: PathBuf,
    /// Ladder predicted by the regressor
    #[arg(long)]
    regressor_ladder: PathBuf,
    #[arg(long, value_enum)]
    backend: BackendKind,
    /// RQ CSV for the table backend
    #[arg(long, required_if_eq("backend", "table"))]
    rq_csv: Option<PathBuf>,
    /// Chunk id (defaults to the classifier ladder's file name up to the first dot)
    #[arg(long)]
    chunk: Option<String>,
    /// JSON curve parameters for the synthetic backend (built-in defaults when absent)
    #[arg(long)]
    synthetic_params: Option<PathBuf>,
    /// Native-resolution Y4M source for the external backend
    #[arg(long, required_if_eq("backend", "external"))]
    source: Option<PathBuf>,
    /// Final ladder JSON
    #[arg(long)]
    out: PathBuf,
    /// Aggregation report JSON
    #[arg(long)]
    report: PathBuf,
    /// Encode only the two predicted resolutions on disagreement
    #[arg(long)]
    fast: bool,
}

fn make_backend(cfg: &AppConfig, args: &AggregateArgs, ladder: &BitrateLadder, chunk: &str) -> CmdResult<Box<dyn EncoderBackend>> {
    let set = ladder.resolutions().clone();
    let grid = cfg.grid().map_err(Failure::input)?;
    Ok(match args.backend {
        BackendKind::Table => {
            let path = args.rq_csv.as_deref().expect("clap enforces --rq-csv");
            let records: Vec<RqRecord> = read_rq_csv_path(path)
                .or_input(|| format!("cannot read {}", path.display()))?
                .into_iter()
                .filter(|r| r.chunk_id == chunk)
                .collect();
            if records.is_empty() {
                return Err(Failure::input(anyhow!("{} has no rows for chunk {chunk}", path.display())));
            }
            let surface = surface_from_records(chunk, &records, &set).map_err(Failure::input)?;
            Box::new(TableBackend::for_grid(surface, &grid))
        }
        BackendKind::Synthetic => {
            let params: SyntheticParams = match &args.synthetic_params {
                Some(p) => read_json(p)?,
                None => SyntheticParams::default(),
            };
            Box::new(SyntheticBackend::new(params, set).map_err(Failure::input)?)
        }
        BackendKind::External => {
            let template = cfg
                .encoder
                .template
                .clone()
                .ok_or_else(|| Failure::input(anyhow!("external backend needs encoder.template or --encoder-template")))?;
            let path = args.source.as_deref().expect("clap enforces --source");
            let src = read_y4m(BufReader::new(
                File::open(path).or_input(|| format!("cannot open {}", path.display()))?,
            ))
            .or_input(|| format!("cannot parse {}", path.display()))?;
            let native = Resolution {
                index: 0,
                width: src.width() as u32,
                height: src.height() as u32,
                label: "native".into(),
            };
            let backend = ExternalBackend::new(ExternalConfig {
                command_template: template,
                workdir: cfg.encoder.workdir.clone(),
                cache_dir: cfg.encoder.cache_dir.clone(),
                native,
                resolutions: set,
                min_log2_rate: grid.min_log2(),
                max_log2_rate: grid.max_log2(),
            })
            .map_err(Failure::input)?;
            Box::new(backend)
        }
    })
}

pub fn aggregate(cfg: &AppConfig, args: AggregateArgs) -> CmdResult {
    let grid = cfg.grid().map_err(Failure::input)?;
    let l_cl = read_ladder(&args.classifier_ladder)
        .or_input(|| format!("cannot read {}", args.classifier_ladder.display()))?;
    let l_rg = read_ladder(&args.regressor_ladder)
        .or_input(|| format!("cannot read {}", args.regressor_ladder.display()))?;
    let chunk_id = match &args.chunk {
        Some(c) => c.clone(),
        None => args
            .classifier_ladder
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.split('.').next())
            .unwrap_or_default()
            .to_string(),
    };
    let backend = make_backend(cfg, &args, &l_cl, &chunk_id)?;
    let chunk = match &args.source {
        Some(src) => ChunkRef::with_source(chunk_id.clone(), src),
        None => ChunkRef::new(chunk_id.clone()),
    };
    let agg_cfg = AggregatorConfig {
        is_fast: args.fast || cfg.aggregator.fast,
        grid,
    };
    match ensemble::aggregate(&l_cl, &l_rg, backend.as_ref(), &chunk, &agg_cfg) {
        Ok(report) => {
            write_ladder(&args.out, &report.ladder).or_input(|| format!("cannot write {}", args.out.display()))?;
            write_json(&args.report, &report)?;
            println!("{chunk_id}: {}", format_ladder(&report.ladder));
            println!(
                "{chunk_id}: {} disagreements, {} encodes ({} mode)",
                report.disagreements(),
                report.total_encodes,
                if report.fast { "fast" } else { "full" }
            );
            Ok(())
        }
        Err(AggregateError::Backend {
            log2_rate,
            partial,
            source,
        }) => {
            write_json(&args.report, &partial)?;
            Err(Failure::backend(
                anyhow::Error::new(source).context(format!("backend failed at log2 rate {log2_rate}")),
            ))
        }
        Err(e) => Err(Failure::input(e)),
    }
}

// ---------------------------------------------------------------------------
// bdbr

#[derive(Args, Debug)]
pub struct BdbrArgs {
    /// Reference curve: CSV with bitrate_bps and quality_db columns
    reference: PathBuf,
    /// Test curve in the same format
    test: PathBuf,
}

#[derive(Deserialize)]
struct CurveRow {
    bitrate_bps: f64,
    quality_db: f64,
}

fn read_curve(path: &Path) -> CmdResult<Vec<RqPoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .or_input(|| format!("cannot read {}", path.display()))?;
    rdr.deserialize::<CurveRow>()
        .map(|r| {
            r.map(|r| RqPoint::from_bps(r.bitrate_bps, r.quality_db))
                .or_input(|| format!("invalid curve CSV {}", path.display()))
        })
        .collect()
}

/// Two decimals, without a negative zero.
fn format_percent(p: f64) -> String {
    let s = format!("{p:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

pub fn bdbr(args: BdbrArgs) -> CmdResult {
    let r = read_curve(&args.reference)?;
    let t = read_curve(&args.test)?;
    let res = bd_br(&r, &t).map_err(Failure::input)?;
    println!("{}", format_percent(res.percent));
    Ok(())
}

// ---------------------------------------------------------------------------
// crossval and synth

#[derive(Args, Debug)]
pub struct CrossvalArgs {
    /// Generate the synthetic dataset instead of reading one
    #[arg(long, conflicts_with = "dataset", required_unless_present = "dataset")]
    synthetic: bool,
    /// Directory holding features.csv and rq.csv
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Directory for cv_report.json, cv_report.csv and per_sequence.csv
    #[arg(long)]
    out_dir: PathBuf,
}

fn synthetic_spec(cfg: &AppConfig) -> CmdResult<SyntheticDatasetSpec> {
    Ok(SyntheticDatasetSpec {
        sequences: cfg.crossval.sequences,
        grid: cfg.grid().map_err(Failure::input)?,
        seed: cfg.seed,
        ..SyntheticDatasetSpec::default()
    })
}

fn load_dataset(cfg: &AppConfig, dir: &Path) -> CmdResult<Vec<DatasetEntry>> {
    let set = cfg.resolution_set().map_err(Failure::input)?;
    let grid = cfg.grid().map_err(Failure::input)?;
    let features = read_features(&dir.join("features.csv"))?;
    let rq_path = dir.join("rq.csv");
    let groups = group_by_chunk(read_rq_csv_path(&rq_path).or_input(|| format!("cannot read {}", rq_path.display()))?);
    features
        .into_iter()
        .map(|f| {
            let recs = groups
                .iter()
                .find(|(id, _)| *id == f.chunk_id)
                .map(|(_, r)| r)
                .ok_or_else(|| Failure::input(anyhow!("chunk {} has no RQ points", f.chunk_id)))?;
            let surface = surface_from_records(&f.chunk_id, recs, &set).map_err(Failure::input)?;
            let gt_ladder = cross_over_bitrates(&surface, &grid);
            Ok(DatasetEntry {
                chunk_id: f.chunk_id,
                latent: f64::NAN,
                features: f.features,
                params: SyntheticParams {
                    ceiling: Vec::new(),
                    steepness: Vec::new(),
                    onset: Vec::new(),
                },
                surface,
                gt_ladder,
            })
        })
        .collect()
}

fn print_summary(report: &CvReport) {
    println!(
        "{:<14} {:>18} {:>18} {:>18} {:>10}",
        "method", "accuracy", "bdbr_vs_gt %", "bdbr_vs_static %", "encodes"
    );
    for m in Method::ALL {
        let mu = report.mean_of(m);
        let se = report.std_error_of(m);
        println!(
            "{:<14} {:>9.4} ± {:<6.4} {:>9.3} ± {:<6.3} {:>9.3} ± {:<6.3} {:>10.1}",
            m.name(),
            mu.accuracy,
            se.accuracy,
            mu.bdbr_vs_gt,
            se.bdbr_vs_gt,
            mu.bdbr_vs_static,
            se.bdbr_vs_static,
            mu.encodes
        );
    }
    println!("disagreement points per fold: {:.1}", report.mean_of(Method::EnsembleFast).disagreements);
}

pub fn crossval(cfg: &AppConfig, args: CrossvalArgs) -> CmdResult {
    let cv_cfg = cfg.cv_config().map_err(Failure::input)?;
    let dataset = match &args.dataset {
        Some(dir) => load_dataset(cfg, dir)?,
        None => generate_synthetic_dataset(&synthetic_spec(cfg)?).map_err(Failure::input)?,
    };
    log::info!("cross-validating {} sequences in {} folds", dataset.len(), cv_cfg.folds);
    let report = cross_validate(&dataset, &cv_cfg).map_err(Failure::input)?;

    create_dir(&args.out_dir)?;
    write_json(&args.out_dir.join("cv_report.json"), &report)?;
    write_cv_csv(&report, create_file(&args.out_dir.join("cv_report.csv"))?).map_err(Failure::input)?;
    write_sequence_csv(&report, create_file(&args.out_dir.join("per_sequence.csv"))?).map_err(Failure::input)?;
    print_summary(&report);
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Directory for features.csv and rq.csv
    #[arg(long)]
    out_dir: PathBuf,
}

pub fn synth(cfg: &AppConfig, args: SynthArgs) -> CmdResult {
    let dataset = generate_synthetic_dataset(&synthetic_spec(cfg)?).map_err(Failure::input)?;
    create_dir(&args.out_dir)?;
    let rows: Vec<FeatureRecord> = dataset
        .iter()
        .map(|e| FeatureRecord {
            chunk_id: e.chunk_id.clone(),
            features: e.features,
        })
        .collect();
    write_feature_csv(create_file(&args.out_dir.join("features.csv"))?, &rows).map_err(Failure::input)?;
    let records: Vec<RqRecord> = dataset
        .iter()
        .flat_map(|e| surface_to_records(&e.chunk_id, &e.surface))
        .collect();
    write_rq_csv(create_file(&args.out_dir.join("rq.csv"))?, &records).map_err(Failure::input)?;
    println!("{} sequences, {} RQ points", dataset.len(), records.len());
    Ok(())
}
