//! Stage implementations. Each reads its inputs from the output layout,
//! writes its artifacts and returns a one-line summary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{ModelKind, PipelineConfig, SynthMode};
use super::{svg, CliError};
use crate::features::{
    assemble_dataset, join_weather, profile_track, read_dataset_csv, read_weather_csv, write_dataset, write_weather,
    Dataset,
};
use crate::fexai::{binary_labels, evaluate_fexai, reference_rule_base, rule_inputs, FuzzyFeature, RuleBase};
use crate::forest::{cross_validate, CvReport, Metrics, ModelSpec, Scenario, ScenarioSpec, TreeEnsemble};
use crate::ingest::{clip_to_tma, parse_track_csv, write_tracks, ArrivalTrack};
use crate::shapley::{
    ensemble_shap, global_importance, wd_report, write_shap_csv, GlobalImportance, ShapMatrix, WdReport,
};
use crate::synth::{gen_fleet, LabelMode, SynthSpec};

pub const FORMAT_VERSION: u32 = 1;

/// File locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    fn at(&self, stage: &str, file: &str) -> PathBuf {
        self.root.join(stage).join(file)
    }

    pub fn synth_tracks(&self) -> PathBuf {
        self.at("synth", "tracks.csv")
    }
    pub fn synth_weather(&self) -> PathBuf {
        self.at("synth", "weather.csv")
    }
    pub fn synth_truth(&self) -> PathBuf {
        self.at("synth", "truth.csv")
    }
    pub fn clipped_tracks(&self) -> PathBuf {
        self.at("ingest", "tracks_clipped.csv")
    }
    pub fn ingest_summary(&self) -> PathBuf {
        self.at("ingest", "ingest_summary.json")
    }
    pub fn dataset(&self) -> PathBuf {
        self.at("features", "dataset.csv")
    }
    pub fn features_summary(&self) -> PathBuf {
        self.at("features", "features_summary.json")
    }
    pub fn train_metrics(&self, s: Scenario, m: ModelKind) -> PathBuf {
        self.at("train", &format!("{}_{}_metrics.json", s.id(), m.id()))
    }
    pub fn train_models(&self, s: Scenario, m: ModelKind) -> PathBuf {
        self.at("train", &format!("{}_{}_models.json", s.id(), m.id()))
    }
    pub fn shap_values(&self, s: Scenario, m: ModelKind) -> PathBuf {
        self.at("explain", &format!("shap_{}_{}.csv", s.id(), m.id()))
    }
    pub fn shap_summary(&self, s: Scenario, m: ModelKind) -> PathBuf {
        self.at("explain", &format!("shap_summary_{}_{}.json", s.id(), m.id()))
    }
    pub fn dependence(&self, s: Scenario, m: ModelKind) -> PathBuf {
        self.at("explain", &format!("dependence_{}_{}.csv", s.id(), m.id()))
    }
    pub fn rules(&self) -> PathBuf {
        self.at("fexai", "rules.txt")
    }
    pub fn fexai_metrics(&self) -> PathBuf {
        self.at("fexai", "fexai_metrics.json")
    }
    pub fn report(&self, file: &str) -> PathBuf {
        self.at("report", file)
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn require(path: &Path, producer: &'static str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingInput {
            path: path.to_path_buf(),
            producer,
        })
    }
}

fn read_json<T: DeserializeOwned>(path: &Path, producer: &'static str) -> Result<T, CliError> {
    require(path, producer)?;
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_dataset(layout: &Layout) -> Result<Dataset, CliError> {
    let path = layout.dataset();
    require(&path, "features")?;
    let ds = read_dataset_csv(&path)?;
    if ds.is_empty() {
        return Err(CliError::Data(format!("{}: no flights", path.display())));
    }
    Ok(ds)
}

fn display_rel(layout: &Layout, path: &Path) -> String {
    path.strip_prefix(&layout.root).unwrap_or(path).display().to_string()
}

fn check_hash(cfg: &PipelineConfig, found: &str, path: &Path) {
    if found != cfg.hash() {
        warn!(
            "{} was produced with config_hash={found}, current is {}",
            path.display(),
            cfg.hash()
        );
    }
}

fn scenario_spec(cfg: &PipelineConfig, s: Scenario) -> Result<ScenarioSpec, CliError> {
    Ok(ScenarioSpec::new(s).with_positive_class(cfg.positive_class(s))?)
}

fn model_spec(cfg: &PipelineConfig, m: ModelKind) -> ModelSpec {
    match m {
        ModelKind::Rf => ModelSpec::RandomForest(cfg.forest),
        ModelKind::Gb => ModelSpec::GradientBoosting(cfg.boosting),
    }
}

pub fn cmd_synth(cfg: &PipelineConfig, layout: &Layout, rules: Option<&Path>) -> Result<String, CliError> {
    let mode = match cfg.synth_mode {
        SynthMode::Geometric => SynthSpec::default().mode,
        SynthMode::Rule => {
            let rules = match rules {
                Some(p) => {
                    let text = fs::read_to_string(p).map_err(io_err(p))?;
                    RuleBase::parse(&text)?
                }
                None => reference_rule_base(),
            };
            LabelMode::Rule {
                rules,
                system: cfg.fuzzy_system()?,
            }
        }
    };
    let spec = SynthSpec {
        n_flights: cfg.synth_n_flights,
        seed: cfg.seed,
        tma: cfg.tma,
        features: cfg.features,
        mode,
        ..SynthSpec::default()
    };
    let fleet = gen_fleet(&spec)?;
    let pre = cfg.preamble("synth");

    let tracks: Vec<ArrivalTrack> = fleet.flights.iter().map(|f| f.track.clone()).collect();
    let mut buf = Vec::new();
    write_tracks(&mut buf, &tracks, &pre)?;
    write_file(&layout.synth_tracks(), &buf)?;

    let weather: Vec<_> = fleet
        .flights
        .iter()
        .map(|f| (f.truth.flight_id.clone(), f.weather))
        .collect();
    let mut buf = Vec::new();
    write_weather(&mut buf, &weather, &pre)?;
    write_file(&layout.synth_weather(), &buf)?;

    let mut text = String::new();
    for line in &pre {
        let _ = writeln!(text, "# {line}");
    }
    text.push_str("flight_id,n_segments,level_offs,cdo_adherence,cdocat,mdrate,mdirection,compliance\n");
    for f in &fleet.flights {
        let t = &f.truth;
        let bits: String = t.compliance.iter().map(|&c| if c { '1' } else { '0' }).collect();
        let _ = writeln!(
            text,
            "{},{},{},{},{},{},{},{}",
            t.flight_id, t.n_segments, t.level_offs, t.adherence, t.category, t.mdrate, t.mdirection, bits
        );
    }
    write_file(&layout.synth_truth(), text.as_bytes())?;
    Ok(format!(
        "synth: {} flights (seed {}) -> {}",
        fleet.flights.len(),
        cfg.seed,
        layout.synth_tracks().parent().unwrap_or(&layout.root).display()
    ))
}

#[derive(Debug, Serialize, Deserialize)]
struct Dropped {
    flight_id: String,
    reason: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct StageSummary {
    config_hash: String,
    seed: u64,
    input: String,
    n_input: usize,
    n_kept: usize,
    dropped: Vec<Dropped>,
    warnings: Vec<String>,
}

fn clip_all(cfg: &PipelineConfig, tracks: &[ArrivalTrack], dropped: &mut Vec<Dropped>) -> Vec<ArrivalTrack> {
    let mut kept = Vec::with_capacity(tracks.len());
    for t in tracks {
        match clip_to_tma(t, &cfg.tma) {
            Ok(c) => kept.push(c),
            Err(e) => {
                warn!("dropping {}: {e}", t.flight_id);
                dropped.push(Dropped {
                    flight_id: t.flight_id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    kept
}

pub fn cmd_ingest(cfg: &PipelineConfig, layout: &Layout, tracks: Option<&Path>) -> Result<String, CliError> {
    let input = tracks.map(Path::to_path_buf).unwrap_or_else(|| layout.synth_tracks());
    require(&input, "synth")?;
    let set = parse_track_csv(&input)?;
    let mut dropped = Vec::new();
    let kept = clip_all(cfg, &set.tracks, &mut dropped);
    if kept.is_empty() {
        return Err(CliError::Data(format!(
            "{}: no track survives clipping",
            input.display()
        )));
    }
    let pre = cfg.preamble("ingest");
    let mut buf = Vec::new();
    write_tracks(&mut buf, &kept, &pre)?;
    write_file(&layout.clipped_tracks(), &buf)?;
    let summary = StageSummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        input: display_rel(layout, &input),
        n_input: set.tracks.len(),
        n_kept: kept.len(),
        dropped,
        warnings: set.warnings,
    };
    write_json(&layout.ingest_summary(), &summary)?;
    Ok(format!(
        "ingest: kept {}/{} tracks -> {}",
        summary.n_kept,
        summary.n_input,
        layout.clipped_tracks().display()
    ))
}

/// Builds the dataset. Tracks default to the clipped output of `ingest`
/// when present and otherwise to the raw `synth` tracks; clipping is
/// re-applied either way since it is idempotent.
pub fn cmd_features(
    cfg: &PipelineConfig,
    layout: &Layout,
    tracks: Option<&Path>,
    weather: Option<&Path>,
) -> Result<String, CliError> {
    let input = match tracks {
        Some(p) => p.to_path_buf(),
        None if layout.clipped_tracks().is_file() => layout.clipped_tracks(),
        None => layout.synth_tracks(),
    };
    require(&input, "synth")?;
    let weather_path = weather.map(Path::to_path_buf).unwrap_or_else(|| layout.synth_weather());
    require(&weather_path, "synth")?;
    let set = parse_track_csv(&input)?;
    let table = read_weather_csv(&weather_path)?;
    let mut dropped = Vec::new();
    let clipped = clip_all(cfg, &set.tracks, &mut dropped);
    let mut rows = Vec::with_capacity(clipped.len());
    for t in &clipped {
        let result = match table.records.get(&t.flight_id) {
            None => Err("no weather record".to_string()),
            Some(w) => profile_track(t, &cfg.tma, &cfg.features)
                .and_then(|p| join_weather(p, w.start, w.end))
                .map_err(|e| e.to_string()),
        };
        match result {
            Ok(r) => rows.push(r),
            Err(reason) => {
                warn!("dropping {}: {reason}", t.flight_id);
                dropped.push(Dropped {
                    flight_id: t.flight_id.clone(),
                    reason,
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Data(format!("{}: no usable flights", input.display())));
    }
    let ds = assemble_dataset(&rows)?;
    let mut buf = Vec::new();
    write_dataset(&mut buf, &ds, &cfg.preamble("features"))?;
    write_file(&layout.dataset(), &buf)?;
    let mut warnings = set.warnings;
    warnings.extend(table.warnings);
    let summary = StageSummary {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        input: display_rel(layout, &input),
        n_input: set.tracks.len(),
        n_kept: ds.len(),
        dropped,
        warnings,
    };
    write_json(&layout.features_summary(), &summary)?;
    let count = |c| ds.labels.iter().filter(|&&l| l == c).count();
    use crate::features::CdoCategory::*;
    Ok(format!(
        "features: {} flights (Low {}, Medium {}, High {}) -> {}",
        ds.len(),
        count(Low),
        count(Medium),
        count(High),
        layout.dataset().display()
    ))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainMetricsFile {
    pub format_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub scenario: String,
    pub model: String,
    pub class_names: Vec<String>,
    pub positive_class: Option<String>,
    pub k_folds: usize,
    pub folds: Vec<Metrics>,
    pub mean: Metrics,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FoldModel {
    pub test: Vec<usize>,
    pub model: TreeEnsemble,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainModelsFile {
    pub format_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub scenario: String,
    pub model: String,
    pub positive_class: usize,
    pub folds: Vec<FoldModel>,
}

pub fn cmd_train(cfg: &PipelineConfig, layout: &Layout) -> Result<String, CliError> {
    let ds = load_dataset(layout)?;
    let mut parts = Vec::new();
    for &s in &cfg.scenarios {
        let spec = scenario_spec(cfg, s)?;
        let y = spec.relabel(&ds.labels);
        for &m in &cfg.models {
            let out = cross_validate(
                &ds.matrix,
                &y,
                &ds.feature_names,
                &spec,
                &model_spec(cfg, m),
                cfg.k_folds,
                cfg.seed,
            )?;
            let names = spec.class_names();
            let metrics = TrainMetricsFile {
                format_version: FORMAT_VERSION,
                config_hash: cfg.hash(),
                seed: cfg.seed,
                scenario: s.id().into(),
                model: m.id().into(),
                class_names: names.iter().map(|n| n.to_string()).collect(),
                positive_class: s.is_binary().then(|| names[spec.positive_class].to_string()),
                k_folds: cfg.k_folds,
                folds: out.report.folds.clone(),
                mean: out.report.mean,
            };
            write_json(&layout.train_metrics(s, m), &metrics)?;
            let models = TrainModelsFile {
                format_version: FORMAT_VERSION,
                config_hash: cfg.hash(),
                seed: cfg.seed,
                scenario: s.id().into(),
                model: m.id().into(),
                positive_class: spec.positive_class,
                folds: out
                    .folds
                    .into_iter()
                    .map(|f| FoldModel {
                        test: f.test,
                        model: f.model,
                    })
                    .collect(),
            };
            let text = serde_json::to_string(&models)?;
            write_file(&layout.train_models(s, m), format!("{text}\n").as_bytes())?;
            parts.push(format!("{}/{} acc={:.3}", s.id(), m.id(), out.report.mean.accuracy));
        }
    }
    Ok(format!("train: {}-fold CV, {}", cfg.k_folds, parts.join(", ")))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ShapSummaryFile {
    pub format_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub scenario: String,
    pub model: String,
    /// `probability` for forests, `margin` (log-odds) for boosting.
    pub space: String,
    pub class_names: Vec<String>,
    pub positive_class: Option<String>,
    pub base_values: Vec<Vec<f64>>,
    pub global: GlobalImportance,
    pub top3: Vec<String>,
    pub wd: Option<WdReport>,
}

pub fn cmd_explain(cfg: &PipelineConfig, layout: &Layout) -> Result<String, CliError> {
    let ds = load_dataset(layout)?;
    let mut parts = Vec::new();
    for &s in &cfg.scenarios {
        let spec = scenario_spec(cfg, s)?;
        let y = spec.relabel(&ds.labels);
        let names = spec.class_names();
        for &m in &cfg.models {
            let path = layout.train_models(s, m);
            let file: TrainModelsFile = read_json(&path, "train")?;
            check_hash(cfg, &file.config_hash, &path);
            let mut blocks: Vec<ShapMatrix> = Vec::with_capacity(file.folds.len());
            let mut truth = Vec::new();
            for fold in &file.folds {
                if let Some(&bad) = fold.test.iter().find(|&&i| i >= ds.len()) {
                    return Err(CliError::Data(format!(
                        "{}: test index {bad} outside the {}-row dataset",
                        path.display(),
                        ds.len()
                    )));
                }
                let x = ds.matrix.select_rows(&fold.test);
                let ids = fold.test.iter().map(|&i| ds.flight_ids[i].clone()).collect();
                blocks.push(ensemble_shap(&fold.model, &x, ids)?);
                truth.extend(fold.test.iter().map(|&i| y[i]));
            }
            let positive = s.is_binary().then_some(file.positive_class);
            let global = global_importance(&blocks, positive)?;
            let top3: Vec<String> = global.top(3).into_iter().map(String::from).collect();
            let wd = match positive {
                Some(p) => {
                    let views = blocks.iter().map(|b| b.binary_view(p)).collect::<Result<Vec<_>, _>>()?;
                    let rows: Vec<&[f64]> = views.iter().flat_map(|v| v.rows_iter()).collect();
                    let pooled = crate::matrix::Matrix::from_rows(&rows, ds.feature_names.len());
                    Some(wd_report(&pooled, &truth, &ds.feature_names)?)
                }
                None => None,
            };
            let pre = cfg.preamble("explain");
            let mut buf = Vec::new();
            write_shap_csv(&blocks, &mut buf, &names, &pre)?;
            write_file(&layout.shap_values(s, m), &buf)?;

            if let Some(p) = positive {
                let mut text = String::new();
                for line in &pre {
                    let _ = writeln!(text, "# {line}");
                }
                text.push_str("sample_id,feature,value,shap_value\n");
                for feat in &top3 {
                    for b in &blocks {
                        let f = b.feature_index(feat)?;
                        for i in 0..b.n_samples {
                            let _ = writeln!(
                                text,
                                "{},{},{},{}",
                                b.sample_ids[i],
                                feat,
                                b.data.get(i, f),
                                b.binary_value(i, f, p)
                            );
                        }
                    }
                }
                write_file(&layout.dependence(s, m), text.as_bytes())?;
            }

            let summary = ShapSummaryFile {
                format_version: FORMAT_VERSION,
                config_hash: cfg.hash(),
                seed: cfg.seed,
                scenario: s.id().into(),
                model: m.id().into(),
                space: blocks[0].space.name().into(),
                class_names: names.iter().map(|n| n.to_string()).collect(),
                positive_class: positive.map(|p| names[p].to_string()),
                base_values: blocks.iter().map(|b| b.base_values.clone()).collect(),
                top3: top3.clone(),
                global,
                wd,
            };
            write_json(&layout.shap_summary(s, m), &summary)?;
            parts.push(format!("{}/{} top3=[{}]", s.id(), m.id(), top3.join(" ")));
        }
    }
    Ok(format!("explain: {}", parts.join(", ")))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FexaiMetricsFile {
    pub format_version: u32,
    pub config_hash: String,
    pub seed: u64,
    pub features: Vec<String>,
    pub thresholds: Vec<(f64, f64)>,
    pub k_folds: usize,
    pub n_rules: usize,
    pub fexai: CvReport,
    pub rf: CvReport,
    pub gb: CvReport,
}

pub fn cmd_fexai(cfg: &PipelineConfig, layout: &Layout) -> Result<String, CliError> {
    let ds = load_dataset(layout)?;
    let system = cfg.fuzzy_system()?;
    let rows = rule_inputs(&ds)?;
    let labels = binary_labels(&ds.labels);
    let outcome = evaluate_fexai(&rows, &labels, &system, cfg.k_folds, cfg.seed)?;

    let features: Vec<String> = FuzzyFeature::ALL.iter().map(|f| f.name().to_string()).collect();
    let cols: Vec<usize> = features
        .iter()
        .map(|n| {
            ds.feature_index(n)
                .ok_or_else(|| CliError::Data(format!("dataset lacks {n}")))
        })
        .collect::<Result<_, _>>()?;
    let x3 = ds.matrix.select_cols(&cols);
    let spec = ScenarioSpec::new(Scenario::LowVsNotLow);
    let y = spec.relabel(&ds.labels);
    let rf = cross_validate(
        &x3,
        &y,
        &features,
        &spec,
        &model_spec(cfg, ModelKind::Rf),
        cfg.k_folds,
        cfg.seed,
    )?;
    let gb = cross_validate(
        &x3,
        &y,
        &features,
        &spec,
        &model_spec(cfg, ModelKind::Gb),
        cfg.k_folds,
        cfg.seed,
    )?;

    let mut buf = Vec::new();
    outcome
        .union
        .write(&mut buf, &cfg.preamble("fexai"))
        .map_err(io_err(&layout.rules()))?;
    write_file(&layout.rules(), &buf)?;
    let file = FexaiMetricsFile {
        format_version: FORMAT_VERSION,
        config_hash: cfg.hash(),
        seed: cfg.seed,
        features,
        thresholds: cfg.fuzzy.to_vec(),
        k_folds: cfg.k_folds,
        n_rules: outcome.union.len(),
        fexai: outcome.report.clone(),
        rf: rf.report,
        gb: gb.report,
    };
    write_json(&layout.fexai_metrics(), &file)?;
    Ok(format!(
        "fexai: {} rules, accuracy {:.3} (RF {:.3}, GB {:.3} on the same features) -> {}",
        file.n_rules,
        file.fexai.mean.accuracy,
        file.rf.mean.accuracy,
        file.gb.mean.accuracy,
        layout.rules().display()
    ))
}

pub const CLASSIFICATION_HEADER: [&str; 6] = ["Scenario", "Classifier", "Acc", "Pr", "Recall", "F1"];
pub const SEPARABILITY_HEADER: [&str; 5] = [
    "Scenario",
    "Classifier",
    "Mean WD",
    "Top 5 Mean WD",
    "Number of features with WD > 0.5",
];
pub const TOP3_HEADER: [&str; 5] = ["Classifier", "Acc", "Pr", "Recall", "F1"];

fn pct(v: f64) -> String {
    format!("{:.2}", 100.0 * v)
}

fn metric_cells(m: &Metrics) -> [String; 4] {
    [pct(m.accuracy), pct(m.precision), pct(m.recall), pct(m.f1)]
}

fn csv_bytes(pre: &[String], header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    for line in pre {
        buf.extend_from_slice(format!("# {line}\n").as_bytes());
    }
    let mut w = csv::Writer::from_writer(&mut buf);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush().map_err(|e| CliError::Data(e.to_string()))?;
    drop(w);
    Ok(buf)
}

fn read_dependence(path: &Path) -> Result<Vec<(String, f64, f64)>, CliError> {
    require(path, "explain")?;
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64, CliError> {
            rec.get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| CliError::Data(format!("{}: malformed row", path.display())))
        };
        out.push((rec.get(1).unwrap_or_default().to_string(), num(2)?, num(3)?));
    }
    Ok(out)
}

pub fn cmd_report(cfg: &PipelineConfig, layout: &Layout) -> Result<String, CliError> {
    let pre = cfg.preamble("report");
    let comment: Vec<String> = vec![format!("config_hash={} seed={}", cfg.hash(), cfg.seed)];
    let mut written = 0usize;
    let mut put = |name: &str, bytes: &[u8]| -> Result<(), CliError> {
        written += 1;
        write_file(&layout.report(name), bytes)
    };

    let mut class_rows = Vec::new();
    let mut wd_rows = Vec::new();
    for &s in &cfg.scenarios {
        for &m in &cfg.models {
            let path = layout.train_metrics(s, m);
            let tm: TrainMetricsFile = read_json(&path, "train")?;
            check_hash(cfg, &tm.config_hash, &path);
            let mut row = vec![s.title().to_string(), m.title().to_string()];
            row.extend(metric_cells(&tm.mean));
            class_rows.push(row);

            let path = layout.shap_summary(s, m);
            let sum: ShapSummaryFile = read_json(&path, "explain")?;
            check_hash(cfg, &sum.config_hash, &path);
            if let Some(wd) = &sum.wd {
                wd_rows.push(vec![
                    s.title().to_string(),
                    m.title().to_string(),
                    format!("{:.4}", wd.mean),
                    format!("{:.4}", wd.top5_mean),
                    wd.count_above_half.to_string(),
                ]);
            }
            let bars: Vec<(String, f64)> = sum
                .global
                .ranking
                .iter()
                .take(15)
                .map(|&i| (sum.global.feature_names[i].clone(), sum.global.scores[i]))
                .collect();
            let title = format!(
                "Global SHAP importance: {}, {} ({} space)",
                s.title(),
                m.title(),
                sum.space
            );
            put(
                &format!("importance_{}_{}.svg", s.id(), m.id()),
                svg::bar_chart(&title, &bars, &comment).as_bytes(),
            )?;

            if let Some(positive) = &sum.positive_class {
                let dep = read_dependence(&layout.dependence(s, m))?;
                for feat in &sum.top3 {
                    let pts: Vec<(f64, f64)> = dep.iter().filter(|d| &d.0 == feat).map(|d| (d.1, d.2)).collect();
                    let title = format!(
                        "SHAP dependence toward {positive}: {feat} ({}, {})",
                        s.title(),
                        m.title()
                    );
                    let y_label = format!("SHAP value ({})", sum.space);
                    put(
                        &format!("dependence_{}_{}_{}.svg", s.id(), m.id(), feat),
                        svg::scatter(&title, feat, &y_label, &pts, &comment).as_bytes(),
                    )?;
                }
            }
        }
    }
    put(
        "classification_metrics.csv",
        &csv_bytes(&pre, &CLASSIFICATION_HEADER, &class_rows)?,
    )?;
    put(
        "shap_separability.csv",
        &csv_bytes(&pre, &SEPARABILITY_HEADER, &wd_rows)?,
    )?;

    let fx: FexaiMetricsFile = read_json(&layout.fexai_metrics(), "fexai")?;
    check_hash(cfg, &fx.config_hash, &layout.fexai_metrics());
    let top3_rows: Vec<Vec<String>> = [("RF", &fx.rf), ("GB", &fx.gb), ("FEXAI", &fx.fexai)]
        .into_iter()
        .map(|(name, r)| {
            let mut row = vec![name.to_string()];
            row.extend(metric_cells(&r.mean));
            row
        })
        .collect();
    put(
        "top3_feature_classification.csv",
        &csv_bytes(&pre, &TOP3_HEADER, &top3_rows)?,
    )?;

    let rules_path = layout.rules();
    require(&rules_path, "fexai")?;
    let text = fs::read_to_string(&rules_path).map_err(io_err(&rules_path))?;
    let rb = RuleBase::parse(&text)?;
    let mut buf = Vec::new();
    rb.write(&mut buf, &pre).map_err(io_err(&rules_path))?;
    put("fuzzy_rules.txt", &buf)?;

    Ok(format!(
        "report: {written} files, {} rules -> {}",
        rb.len(),
        layout.root.join("report").display()
    ))
}
