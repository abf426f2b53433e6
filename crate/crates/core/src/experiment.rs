//! Learning-curve sweeps: training-size ladder × settings × seeds.
//!
//! ```ini
//! task = topic
//! train = data/train.tsv
//! weak = data/train.weak.tsv      ; or: rules = rules.ini
//! dev = data/dev.tsv
//! test = data/test.tsv
//! embeddings = vectors.txt
//! sizes = 10 20 50 100 full
//! seeds = 10
//! seed = 1
//! settings = clean noisy channel
//! epochs = 50
//! beta = 0.8
//! dev_downsize = on
//! ```
//!
//! Clean subsets for a seed index are nested across sizes and shared by all
//! settings. Training randomness is derived from (master seed, setting index,
//! size index, seed index, attempt).

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ini::Ini;

use crate::annotators::{apply_rules, load_rules};
use crate::classifier::{
    evaluate, init_model, output_labels, selection_score, train_with, EmbeddingTable,
    NoiseHandling, TrainSchedule,
};
use crate::corpus::{
    attach_weak_layer, downsample, downsized_dev_target, read_dataset, Dataset, Task,
};
use crate::error::{Error, Result};
use crate::eval::{aggregate_runs, convergence_filter, AggregateMetrics, RunVerdict};
use crate::noisemodel::{
    estimate_confusion_matrix_filtered, smooth_confusion_matrix, ConfusionMatrix, SmoothingConfig,
};
use crate::seeds;

pub const DEFAULT_MAX_RESEEDS: usize = 3;
pub const RUNS_CSV_HEADER: &str = "setting,size,seed,f1";
pub const SUMMARY_CSV_HEADER: &str = "setting,size,mean_f1,stderr";

const DATA_STREAM: u64 = 0;
const DEV_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Setting {
    /// Clean subset only.
    Clean,
    /// Clean subset plus weakly labeled data used as if clean.
    Noisy,
    /// Clean subset plus weakly labeled data through the estimated channel.
    Channel,
}

impl Setting {
    pub const ALL: [Setting; 3] = [Setting::Clean, Setting::Noisy, Setting::Channel];

    pub fn name(self) -> &'static str {
        match self {
            Setting::Clean => "clean",
            Setting::Noisy => "noisy",
            Setting::Channel => "channel",
        }
    }

    fn uses_noisy(self) -> bool {
        self != Setting::Clean
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Setting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Setting::ALL
            .into_iter()
            .find(|x| x.name() == s.trim())
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown setting {s:?}; expected clean, noisy or channel"
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeSpec {
    Count(usize),
    Full,
}

impl SizeSpec {
    pub fn resolve(self, full: usize) -> usize {
        match self {
            SizeSpec::Count(n) => n,
            SizeSpec::Full => full,
        }
    }
}

impl FromStr for SizeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("full") {
            return Ok(SizeSpec::Full);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(SizeSpec::Count(n)),
            _ => Err(Error::Config(format!("invalid training size {s:?}"))),
        }
    }
}

impl fmt::Display for SizeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeSpec::Count(n) => write!(f, "{n}"),
            SizeSpec::Full => f.write_str("full"),
        }
    }
}

/// Parses a size ladder separated by commas and/or whitespace.
pub fn parse_sizes(s: &str) -> Result<Vec<SizeSpec>> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

pub fn default_sizes() -> Vec<SizeSpec> {
    [10, 20, 50, 100, 200, 400]
        .into_iter()
        .map(SizeSpec::Count)
        .chain([SizeSpec::Full])
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub train: PathBuf,
    /// Weak labels aligned with `train`.
    pub weak: Option<PathBuf>,
    /// Rule file applied to `train` when `weak` is absent.
    pub rules: Option<PathBuf>,
    pub dev: PathBuf,
    pub test: PathBuf,
    pub embeddings: PathBuf,
    pub sizes: Vec<SizeSpec>,
    pub seeds: usize,
    pub master_seed: u64,
    pub settings: Vec<Setting>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub beta: f64,
    /// Leave the `O` row out of NER channel estimates.
    pub exclude_o: bool,
    pub dev_downsize: bool,
    pub convergence_filter: bool,
    pub max_reseeds: usize,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(
        task: Task,
        train: PathBuf,
        dev: PathBuf,
        test: PathBuf,
        embeddings: PathBuf,
    ) -> Self {
        ExperimentConfig {
            task,
            train,
            weak: None,
            rules: None,
            dev,
            test,
            embeddings,
            sizes: default_sizes(),
            seeds: 10,
            master_seed: 0,
            settings: Setting::ALL.to_vec(),
            epochs: TrainSchedule::DEFAULT_EPOCHS,
            learning_rate: TrainSchedule::default_learning_rate(task),
            batch_size: TrainSchedule::DEFAULT_BATCH_SIZE,
            beta: SmoothingConfig::default().beta(),
            exclude_o: false,
            dev_downsize: true,
            convergence_filter: task == Task::Topic,
            max_reseeds: DEFAULT_MAX_RESEEDS,
            out: None,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Keys live in the general section or an `[experiment]` section.
    /// Relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let get = |key: &str| -> Option<String> {
            ini.section(Some("experiment"))
                .and_then(|s| s.get(key))
                .or_else(|| ini.general_section().get(key))
                .map(|v| v.trim().to_string())
        };
        let require =
            |key: &str| get(key).ok_or_else(|| Error::Config(format!("missing key {key}")));
        let path = |v: String| {
            let p = PathBuf::from(v);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        };
        let parse = |key: &str, v: String| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        };
        let count = |key: &str, v: String| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        };
        let switch = |key: &str, v: String| -> Result<bool> {
            match v.to_ascii_lowercase().as_str() {
                "on" | "true" | "yes" | "1" => Ok(true),
                "off" | "false" | "no" | "0" => Ok(false),
                _ => Err(Error::Config(format!(
                    "{key}: expected on or off, got {v:?}"
                ))),
            }
        };

        let task: Task = require("task")?.parse()?;
        let mut cfg = ExperimentConfig::new(
            task,
            path(require("train")?),
            path(require("dev")?),
            path(require("test")?),
            path(require("embeddings")?),
        );
        cfg.weak = get("weak").map(path);
        cfg.rules = get("rules").map(path);
        if let Some(v) = get("sizes") {
            cfg.sizes = parse_sizes(&v)?;
        }
        if let Some(v) = get("seeds") {
            cfg.seeds = count("seeds", v)?;
        }
        if let Some(v) = get("seed") {
            cfg.master_seed = v
                .parse()
                .map_err(|_| Error::Config(format!("seed: cannot parse {v:?}")))?;
        }
        if let Some(v) = get("settings") {
            cfg.settings = v
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_>>()?;
        }
        if let Some(v) = get("epochs") {
            cfg.epochs = count("epochs", v)?;
        }
        if let Some(v) = get("learning_rate") {
            cfg.learning_rate = parse("learning_rate", v)?;
        }
        if let Some(v) = get("batch_size") {
            cfg.batch_size = count("batch_size", v)?;
        }
        if let Some(v) = get("beta") {
            cfg.beta = parse("beta", v)?;
        }
        if let Some(v) = get("exclude_o") {
            cfg.exclude_o = switch("exclude_o", v)?;
        }
        if let Some(v) = get("dev_downsize") {
            cfg.dev_downsize = switch("dev_downsize", v)?;
        }
        if let Some(v) = get("convergence_filter") {
            cfg.convergence_filter = switch("convergence_filter", v)?;
        }
        if let Some(v) = get("max_reseeds") {
            cfg.max_reseeds = count("max_reseeds", v)?;
        }
        cfg.out = get("out").map(path);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.sizes.is_empty() {
            return Err(Error::Config("size ladder is empty".into()));
        }
        if self.settings.is_empty() {
            return Err(Error::Config("no settings to run".into()));
        }
        let counts: Vec<usize> = self
            .sizes
            .iter()
            .filter_map(|s| match s {
                SizeSpec::Count(n) => Some(*n),
                SizeSpec::Full => None,
            })
            .collect();
        let full_positions = self.sizes.iter().filter(|s| **s == SizeSpec::Full).count();
        if counts.windows(2).any(|w| w[0] >= w[1])
            || full_positions > 1
            || (full_positions == 1 && self.sizes.last() != Some(&SizeSpec::Full))
        {
            return Err(Error::Config(
                "size ladder must be strictly increasing".into(),
            ));
        }
        SmoothingConfig::new(self.beta)?;
        self.schedule(0).validate()
    }

    pub fn schedule(&self, seed: u64) -> TrainSchedule {
        TrainSchedule {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            seed,
            subsample_noisy: true,
            loss_weights: (1.0, 1.0),
            batch_size: self.batch_size,
        }
    }
}

/// Datasets and vectors a sweep runs on. `train` carries gold and weak layers.
#[derive(Debug, Clone)]
pub struct CurveData {
    pub train: Dataset,
    pub dev: Dataset,
    pub test: Dataset,
    pub embeddings: EmbeddingTable,
}

impl CurveData {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let mut train = read_dataset(&cfg.train, cfg.task)?;
        if let Some(weak) = &cfg.weak {
            attach_weak_layer(&mut train, &read_dataset(weak, cfg.task)?)?;
        } else if let Some(rules) = &cfg.rules {
            let set = load_rules(rules, cfg.task, &train.label_set)?;
            train = apply_rules(&train, &set)?.0;
        } else if cfg.settings.iter().any(|s| s.uses_noisy()) {
            return Err(Error::Config(
                "noisy settings need either weak or rules".into(),
            ));
        }
        Ok(CurveData {
            train,
            dev: read_dataset(&cfg.dev, cfg.task)?,
            test: read_dataset(&cfg.test, cfg.task)?,
            embeddings: EmbeddingTable::load(&cfg.embeddings)?,
        })
    }

    /// Sorted union of the labels of all three datasets.
    pub fn label_set(&self) -> Vec<String> {
        let mut all: Vec<String> = [&self.train, &self.dev, &self.test]
            .iter()
            .flat_map(|d| d.label_set.iter().cloned())
            .collect();
        all.sort();
        all.dedup();
        all
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub setting: Setting,
    pub size: usize,
    pub seed: usize,
    pub f1: f64,
    /// 1 when the first attempt was kept.
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub setting: Setting,
    pub size: usize,
    pub aggregate: AggregateMetrics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveResult {
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
}

impl CurveResult {
    pub fn runs_csv(&self) -> String {
        let mut out = format!("{RUNS_CSV_HEADER}\n");
        for r in &self.runs {
            let _ = writeln!(out, "{},{},{},{:.6}", r.setting, r.size, r.seed, r.f1);
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = format!("{SUMMARY_CSV_HEADER}\n");
        for r in &self.summary {
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6}",
                r.setting, r.size, r.aggregate.mean, r.aggregate.stderr
            );
        }
        out
    }
}

/// Calls `attempt(0)`, then reseeded attempts `1..=max_reseeds` while the
/// verdict is [`RunVerdict::Flag`]. Returns the first kept value with the
/// number of attempts used, or `None` when every attempt was flagged.
pub fn run_with_reseeds<T>(
    max_reseeds: usize,
    mut attempt: impl FnMut(usize) -> Result<(T, RunVerdict)>,
) -> Result<Option<(T, usize)>> {
    for a in 0..=max_reseeds {
        let (value, verdict) = attempt(a)?;
        match verdict {
            RunVerdict::Keep => return Ok(Some((value, a + 1))),
            RunVerdict::Flag => log::warn!("attempt {} flagged as degenerate; reseeding", a + 1),
        }
    }
    Ok(None)
}

fn channel_for(
    clean: &Dataset,
    labels: &[String],
    beta: f64,
    exclude_o: bool,
) -> Result<ConfusionMatrix> {
    let mut gold: Vec<Vec<String>> = Vec::new();
    let mut weak: Vec<Vec<String>> = Vec::new();
    for s in &clean.sentences {
        match clean.task {
            Task::Ner => {
                if let (Some(g), Some(w)) = (&s.gold_tags, &s.weak_tags) {
                    gold.push(g.iter().map(|t| t.to_string()).collect());
                    weak.push(w.iter().map(|t| t.to_string()).collect());
                }
            }
            Task::Topic => {
                if let (Some(g), Some(w)) = (&s.gold_class, &s.weak_class) {
                    gold.push(vec![g.clone()]);
                    weak.push(vec![w.clone()]);
                }
            }
        }
    }
    let cm = estimate_confusion_matrix_filtered(&gold, &weak, labels, |l| {
        !(exclude_o && l == crate::bio::OUTSIDE)
    })?;
    smooth_confusion_matrix(&cm, SmoothingConfig::new(beta)?)
}

/// Runs the full sweep and aggregates test F1 per (setting, size).
pub fn run_curve(cfg: &ExperimentConfig, data: &CurveData) -> Result<CurveResult> {
    cfg.validate()?;
    let task = cfg.task;
    for (name, d) in [
        ("train", &data.train),
        ("dev", &data.dev),
        ("test", &data.test),
    ] {
        if d.task != task {
            return Err(Error::TaskMismatch {
                expected: task,
                found: d.task,
            });
        }
        if d.is_empty() {
            return Err(Error::Config(format!("{name} set is empty")));
        }
    }
    let full = data.train.len();
    let sizes: Vec<usize> = cfg.sizes.iter().map(|s| s.resolve(full)).collect();
    if let Some(&too_big) = sizes.iter().find(|&&n| n > full) {
        return Err(Error::Config(format!(
            "training size {too_big} exceeds the {full} available sentences"
        )));
    }
    let labels = output_labels(task, &data.label_set());
    let empty = Dataset::new(task);

    let mut runs = Vec::new();
    let mut summary = Vec::new();
    for (si, &setting) in cfg.settings.iter().enumerate() {
        for (zi, &size) in sizes.iter().enumerate() {
            let mut scores = Vec::with_capacity(cfg.seeds);
            for seed_idx in 0..cfg.seeds {
                let clean = downsample(
                    &data.train,
                    size,
                    seeds::derive(cfg.master_seed, &[DATA_STREAM, seed_idx as u64]),
                )?;
                let dev = if cfg.dev_downsize {
                    let target = downsized_dev_target(data.dev.len(), size, full);
                    downsample(
                        &data.dev,
                        target,
                        seeds::derive(cfg.master_seed, &[DEV_STREAM, seed_idx as u64]),
                    )?
                } else {
                    data.dev.clone()
                };
                let handling = match setting {
                    Setting::Clean | Setting::Noisy => NoiseHandling::AsClean,
                    Setting::Channel => NoiseHandling::Channel(channel_for(
                        &clean,
                        &labels,
                        cfg.beta,
                        cfg.exclude_o,
                    )?),
                };
                let noisy = if setting.uses_noisy() {
                    &data.train
                } else {
                    &empty
                };
                let outcome = run_with_reseeds(cfg.max_reseeds, |attempt| {
                    let seed = seeds::derive(
                        cfg.master_seed,
                        &[2 + si as u64, zi as u64, seed_idx as u64, attempt as u64],
                    );
                    let model = init_model(task, labels.clone(), data.embeddings.dim(), seed)?;
                    let (model, _) = train_with(
                        model,
                        &clean,
                        noisy,
                        handling.clone(),
                        &cfg.schedule(seed),
                        &dev,
                        &data.embeddings,
                    )?;
                    let verdict = if cfg.convergence_filter {
                        convergence_filter(&evaluate(&model, &dev, &data.embeddings)?)
                    } else {
                        RunVerdict::Keep
                    };
                    Ok((model, verdict))
                })?;
                let Some((model, attempts)) = outcome else {
                    return Err(Error::FlaggedRuns {
                        setting: setting.to_string(),
                        size,
                        seed: seed_idx,
                        attempts: cfg.max_reseeds + 1,
                    });
                };
                let f1 = selection_score(task, &evaluate(&model, &data.test, &data.embeddings)?);
                log::info!(
                    "{setting} size {size} seed {seed_idx}: test F1 {f1:.4} ({attempts} attempts)"
                );
                scores.push(f1);
                runs.push(RunRecord {
                    setting,
                    size,
                    seed: seed_idx,
                    f1,
                    attempts,
                });
            }
            summary.push(SummaryRow {
                setting,
                size,
                aggregate: aggregate_runs(&scores)?,
            });
        }
    }
    Ok(CurveResult { runs, summary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::{SyntheticConfig, SyntheticTopics};

    fn synthetic_data() -> CurveData {
        let syn = SyntheticTopics::new(SyntheticConfig::default()).unwrap();
        CurveData {
            train: syn.sample(120, 0),
            dev: syn.sample(60, 1),
            test: syn.sample(80, 2),
            embeddings: syn.embeddings.clone(),
        }
    }

    fn config(sizes: &str, seeds: usize) -> ExperimentConfig {
        let p = PathBuf::new;
        ExperimentConfig {
            sizes: parse_sizes(sizes).unwrap(),
            seeds,
            epochs: 5,
            ..ExperimentConfig::new(Task::Topic, p(), p(), p(), p())
        }
    }

    #[test]
    fn sizes_and_settings_parse() {
        assert_eq!(
            parse_sizes("10, 20 full").unwrap(),
            vec![SizeSpec::Count(10), SizeSpec::Count(20), SizeSpec::Full]
        );
        assert!(parse_sizes("10,0").is_err());
        assert!("bogus".parse::<Setting>().is_err());
        assert_eq!("channel".parse::<Setting>().unwrap(), Setting::Channel);
        assert_eq!(default_sizes().len(), 7);
    }

    #[test]
    fn ladder_must_increase() {
        assert!(config("10 20 full", 1).validate().is_ok());
        assert!(config("20 10", 1).validate().is_err());
        assert!(config("10 10", 1).validate().is_err());
        assert!(config("full 10", 1).validate().is_err());
        assert!(config("10", 0).validate().is_err());
    }

    #[test]
    fn config_file_parsing() {
        let text = "task = topic\ntrain = t.tsv\nweak = w.tsv\ndev = d.tsv\ntest = e.tsv\nembeddings = v.txt\n\
                    [experiment]\nsizes = 10,100\nseeds = 2\nseed = 7\nsettings = clean channel\n\
                    epochs = 3\nbeta = 0.5\ndev_downsize = off\nconvergence_filter = off\n";
        let cfg = ExperimentConfig::parse(text, Path::new("/data")).unwrap();
        assert_eq!(cfg.train, PathBuf::from("/data/t.tsv"));
        assert_eq!(cfg.weak, Some(PathBuf::from("/data/w.tsv")));
        assert_eq!(cfg.sizes, vec![SizeSpec::Count(10), SizeSpec::Count(100)]);
        assert_eq!((cfg.seeds, cfg.master_seed, cfg.epochs), (2, 7, 3));
        assert_eq!(cfg.settings, vec![Setting::Clean, Setting::Channel]);
        assert!(!cfg.dev_downsize && !cfg.convergence_filter);
        assert_eq!(cfg.beta, 0.5);
        assert!(ExperimentConfig::parse("task = topic\n", Path::new(".")).is_err());
        assert!(
            ExperimentConfig::parse(&text.replace("beta = 0.5", "beta = 2"), Path::new("."))
                .is_err()
        );
        assert!(
            ExperimentConfig::parse(&text.replace("10,100", "100,10"), Path::new(".")).is_err()
        );
    }

    #[test]
    fn curve_counts_and_reproducibility() {
        let data = synthetic_data();
        let cfg = ExperimentConfig {
            settings: vec![Setting::Clean, Setting::Channel],
            convergence_filter: false,
            ..config("10 100", 2)
        };
        let a = run_curve(&cfg, &data).unwrap();
        assert_eq!(a.runs.len(), 8);
        assert_eq!(a.summary.len(), 4);
        assert_eq!(a.runs_csv().lines().count(), 9);
        assert_eq!(a.summary_csv().lines().next(), Some(SUMMARY_CSV_HEADER));
        let b = run_curve(&cfg, &data).unwrap();
        assert_eq!(a.runs_csv(), b.runs_csv());
        assert_eq!(a.summary_csv(), b.summary_csv());
        let c = run_curve(
            &ExperimentConfig {
                master_seed: 1,
                ..cfg
            },
            &data,
        )
        .unwrap();
        assert_ne!(a.runs_csv(), c.runs_csv());
    }

    #[test]
    fn oversized_ladder_is_rejected() {
        assert!(run_curve(&config("500", 1), &synthetic_data()).is_err());
    }

    #[test]
    fn reseeding() {
        let kept = run_with_reseeds(3, |a| {
            Ok((
                a,
                if a < 2 {
                    RunVerdict::Flag
                } else {
                    RunVerdict::Keep
                },
            ))
        })
        .unwrap();
        assert_eq!(kept, Some((2, 3)));
        let mut calls = 0;
        let none = run_with_reseeds(3, |_| {
            calls += 1;
            Ok(((), RunVerdict::Flag))
        })
        .unwrap();
        assert_eq!((none, calls), (None, 4));
    }

    #[test]
    fn degenerate_embeddings_exhaust_the_reseed_budget() {
        let mut data = synthetic_data();
        data.embeddings = EmbeddingTable::new(data.embeddings.dim());
        let cfg = ExperimentConfig {
            settings: vec![Setting::Clean],
            ..config("10", 1)
        };
        assert!(matches!(
            run_curve(&cfg, &data),
            Err(Error::FlaggedRuns { attempts: 4, .. })
        ));
    }
}
