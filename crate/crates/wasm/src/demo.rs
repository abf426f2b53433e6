use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use weaksup::annotators::{DateRuleConfig, NerRules};
use weaksup::corpus::{Sentence, Task};
use weaksup::experiment::{parse_sizes, run_curve, CurveData, ExperimentConfig, Setting};
use weaksup::lexicon::{default_min_token_length, Gazetteer};
use weaksup::noisemodel::{
    apply_noise_channel, smooth_confusion_matrix, ConfusionMatrix, SmoothingConfig,
};
use weaksup::synthetic::{SyntheticConfig, SyntheticTopics};
use weaksup::text::Normalization;

const MAX_SEEDS: usize = 20;
const MAX_EPOCHS: usize = 200;

fn err(e: impl ToString) -> String {
    e.to_string()
}

pub fn smooth_matrix(tsv: &str, beta: f64) -> Result<String, String> {
    let cm = ConfusionMatrix::from_tsv(tsv).map_err(err)?;
    let cfg = SmoothingConfig::new(beta).map_err(err)?;
    Ok(smooth_confusion_matrix(&cm, cfg).map_err(err)?.to_tsv())
}

pub fn apply_channel(tsv: &str, distribution: &str) -> Result<String, String> {
    let cm = ConfusionMatrix::from_tsv(tsv).map_err(err)?;
    let p: Vec<f64> = distribution
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {v:?}"))
        })
        .collect::<Result<_, _>>()?;
    let total: f64 = p.iter().sum();
    if p.iter().any(|x| *x < 0.0 || !x.is_finite()) || (total - 1.0).abs() > 1e-6 {
        return Err("distribution must be non-negative and sum to 1".into());
    }
    let q = apply_noise_channel(&p, &cm).map_err(err)?;
    Ok(q.iter()
        .map(|x| format!("{x:.6}"))
        .collect::<Vec<_>>()
        .join(","))
}

pub fn annotate_text(text: &str, language: &str, gazetteer: &str) -> Result<String, String> {
    let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (i, line) in gazetteer.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (label, entry) = line
            .split_once('\t')
            .ok_or_else(|| format!("gazetteer line {}: expected LABEL<TAB>entry", i + 1))?;
        entries
            .entry(label.trim().to_string())
            .or_default()
            .push(entry.trim().to_string());
    }
    let rules = NerRules {
        gazetteers: entries
            .into_iter()
            .map(|(label, list)| {
                let min = default_min_token_length(language, &label);
                Gazetteer::from_entries(label, list, min, Normalization::CASED).0
            })
            .collect(),
        dates: Some(DateRuleConfig::preset(language).map_err(err)?),
        ..Default::default()
    };
    let s = Sentence::from_text(text);
    let tags = rules.annotate(&s);
    let mut out = String::new();
    for (tok, tag) in s.surfaces().zip(&tags) {
        let _ = writeln!(out, "{tok}\t{tag}");
    }
    Ok(out)
}

pub fn synthetic_curve(
    flip_mass: f64,
    beta: f64,
    sizes: &str,
    seeds: usize,
    epochs: usize,
) -> Result<String, String> {
    if seeds == 0 || seeds > MAX_SEEDS || epochs == 0 || epochs > MAX_EPOCHS {
        return Err(format!(
            "seeds must be 1..={MAX_SEEDS} and epochs 1..={MAX_EPOCHS}"
        ));
    }
    let syn = SyntheticTopics::new(SyntheticConfig {
        flip_mass,
        ..Default::default()
    })
    .map_err(err)?;
    let data = CurveData {
        train: syn.sample(400, 0),
        dev: syn.sample(100, 1),
        test: syn.sample(200, 2),
        embeddings: syn.embeddings.clone(),
    };
    let p = PathBuf::new;
    let cfg = ExperimentConfig {
        sizes: parse_sizes(sizes).map_err(err)?,
        seeds,
        epochs,
        beta,
        settings: vec![Setting::Clean, Setting::Channel],
        convergence_filter: false,
        ..ExperimentConfig::new(Task::Topic, p(), p(), p(), p())
    };
    Ok(run_curve(&cfg, &data).map_err(err)?.summary_csv())
}
