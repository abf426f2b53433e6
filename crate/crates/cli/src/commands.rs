use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use weaksup::annotators::{apply_rules, load_rules, RuleSet};
use weaksup::classifier::{
    evaluate, init_model, output_labels, train_with, EmbeddingTable, Model, NoiseHandling,
    TrainSchedule,
};
use weaksup::corpus::{
    attach_weak_layer, read_dataset, split_dataset, write_dataset, Dataset, Layer, SplitSpec, Task,
    ABSTAIN,
};
use weaksup::eval::{classification_metrics, span_f1, Metrics, METRICS_CSV_HEADER};
use weaksup::experiment::{parse_sizes, run_curve, CurveData, ExperimentConfig};
use weaksup::noisemodel::{
    estimate_confusion_matrix_filtered, smooth_confusion_matrix, ConfusionMatrix, SmoothingConfig,
};
use weaksup::Error;

use crate::output::{write_atomic, CliError, CliResult};
use crate::{Command, Switch};

pub fn run(cmd: Command) -> CliResult {
    match cmd {
        Command::Split {
            task,
            input,
            ratios,
            unit,
            shuffle,
            seed,
            out,
        } => split(
            task.task.into(),
            &input,
            &ratios,
            unit.into(),
            shuffle,
            seed,
            &out,
        ),
        Command::Annotate {
            task,
            input,
            rules,
            classes,
            seed,
            out,
        } => annotate(task.task.into(), &input, &rules, classes, seed, &out),
        Command::EvalRules {
            task,
            gold,
            weak,
            csv,
        } => eval_rules(task.task.into(), &gold, &weak, csv.as_deref()),
        Command::EstimateCm {
            task,
            clean,
            weak,
            beta,
            exclude_o,
            out,
        } => estimate_cm(task.task.into(), &clean, &weak, beta, exclude_o, &out),
        Command::Train {
            task,
            train,
            dev,
            embeddings,
            noisy,
            cm,
            noisy_as_clean,
            epochs,
            learning_rate,
            batch_size,
            seed,
            history,
            out,
        } => {
            let task: Task = task.task.into();
            let schedule = TrainSchedule {
                epochs,
                learning_rate: learning_rate
                    .unwrap_or_else(|| TrainSchedule::default_learning_rate(task)),
                seed,
                batch_size,
                ..TrainSchedule::for_task(task, seed)
            };
            let noise = match (noisy, cm, noisy_as_clean) {
                (None, None, false) => None,
                (Some(n), Some(c), false) => Some((n, Some(c))),
                (Some(n), None, true) => Some((n, None)),
                _ => {
                    return Err(CliError::Usage(
                        "--noisy needs exactly one of --cm or --noisy-as-clean".into(),
                    ))
                }
            };
            train_model(
                task,
                &train,
                &dev,
                &embeddings,
                noise,
                schedule,
                history.as_deref(),
                &out,
            )
        }
        Command::Evaluate {
            model,
            test,
            embeddings,
            csv,
            setting,
            seed,
        } => evaluate_checkpoint(&model, &test, &embeddings, csv.as_deref(), &setting, seed),
        Command::Curve {
            config,
            seed,
            epochs,
            sizes,
            dev_downsize,
            beta,
            embeddings,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.master_seed = s;
            }
            if let Some(e) = epochs {
                cfg.epochs = e;
            }
            if let Some(s) = sizes {
                cfg.sizes = parse_sizes(&s)?;
            }
            if let Some(d) = dev_downsize {
                cfg.dev_downsize = d == Switch::On;
            }
            if let Some(b) = beta {
                cfg.beta = b;
            }
            if let Some(e) = embeddings {
                cfg.embeddings = e;
            }
            let out = out.or_else(|| cfg.out.clone()).ok_or_else(|| {
                CliError::Usage("curve needs --out or an out key in the config".into())
            })?;
            curve(&cfg, &out)
        }
    }
}

fn extension(task: Task) -> &'static str {
    match task {
        Task::Ner => "conll",
        Task::Topic => "tsv",
    }
}

fn split(
    task: Task,
    input: &Path,
    ratios: &[f64],
    unit: weaksup::corpus::SplitUnit,
    shuffle: bool,
    seed: u64,
    out: &Path,
) -> CliResult {
    let d = read_dataset(input, task)?;
    let spec = SplitSpec {
        seed,
        shuffle,
        ..SplitSpec::new(ratios[0], ratios[1], ratios[2], unit)
    };
    let (train, dev, test) = split_dataset(&d, &spec)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for (name, part) in [("train", &train), ("dev", &dev), ("test", &test)] {
        let path = out.join(format!("{name}.{}", extension(task)));
        write_atomic(&path, &write_dataset(part, Layer::Gold))?;
        println!(
            "{name}\t{} sentences\t{} tokens",
            part.len(),
            part.token_count()
        );
    }
    Ok(())
}

fn annotate(
    task: Task,
    input: &Path,
    rules: &Path,
    classes: Vec<String>,
    seed: Option<u64>,
    out: &Path,
) -> CliResult {
    let d = read_dataset(input, task)?;
    let classes = if classes.is_empty() {
        d.label_set.clone()
    } else {
        classes
    };
    let mut set = load_rules(rules, task, &classes)?;
    if let (RuleSet::Topic(cfg), Some(s)) = (&mut set, seed) {
        cfg.tie_seed = s;
    }
    let (weak, stats) = apply_rules(&d, &set)?;
    write_atomic(out, &write_dataset(&weak, Layer::Weak))?;
    println!(
        "{} sentences: {} labeled, {} abstained",
        stats.sentences, stats.labeled, stats.abstained
    );
    Ok(())
}

fn paired(task: Task, gold: &Path, weak: &Path) -> CliResult<Dataset> {
    let mut d = read_dataset(gold, task)?;
    attach_weak_layer(&mut d, &read_dataset(weak, task)?)?;
    Ok(d)
}

fn layer_metrics(d: &Dataset) -> CliResult<Metrics> {
    let missing = |what| CliError::Data(Error::Empty(what));
    Ok(match d.task {
        Task::Ner => {
            let gold = d
                .sentences
                .iter()
                .map(|s| s.gold_tags.clone().ok_or_else(|| missing("gold tags")))
                .collect::<CliResult<Vec<_>>>()?;
            let weak = d
                .sentences
                .iter()
                .map(|s| s.weak_tags.clone().ok_or_else(|| missing("weak tags")))
                .collect::<CliResult<Vec<_>>>()?;
            span_f1(&gold, &weak)?
        }
        Task::Topic => {
            let gold = d
                .sentences
                .iter()
                .map(|s| s.gold_class.clone().ok_or_else(|| missing("gold class")))
                .collect::<CliResult<Vec<_>>>()?;
            let weak: Vec<String> = d
                .sentences
                .iter()
                .map(|s| s.weak_class.clone().unwrap_or_else(|| ABSTAIN.to_string()))
                .collect();
            classification_metrics(&gold, &weak, &d.label_set)?
        }
    })
}

fn eval_rules(task: Task, gold: &Path, weak: &Path, csv: Option<&Path>) -> CliResult {
    let d = paired(task, gold, weak)?;
    let m = layer_metrics(&d)?;
    print!("{}", m.table());
    if let Some(path) = csv {
        write_atomic(
            path,
            &format!("{METRICS_CSV_HEADER}\n{}", m.csv_rows("rules", 0)),
        )?;
    }
    Ok(())
}

fn estimate_cm(
    task: Task,
    clean: &Path,
    weak: &Path,
    beta: Option<f64>,
    exclude_o: bool,
    out: &Path,
) -> CliResult {
    let d = paired(task, clean, weak)?;
    let labels = output_labels(task, &d.label_set);
    let mut gold: Vec<Vec<String>> = Vec::new();
    let mut noisy: Vec<Vec<String>> = Vec::new();
    for s in &d.sentences {
        match (&s.gold_tags, &s.weak_tags, &s.gold_class, &s.weak_class) {
            (Some(g), Some(w), _, _) => {
                gold.push(g.iter().map(ToString::to_string).collect());
                noisy.push(w.iter().map(ToString::to_string).collect());
            }
            (_, _, Some(g), Some(w)) => {
                gold.push(vec![g.clone()]);
                noisy.push(vec![w.clone()]);
            }
            _ => {}
        }
    }
    let mut cm =
        estimate_confusion_matrix_filtered(&gold, &noisy, &labels, |l| !(exclude_o && l == "O"))?;
    if let Some(b) = beta {
        cm = smooth_confusion_matrix(&cm, SmoothingConfig::new(b)?)?;
    }
    write_atomic(out, &cm.to_tsv())?;
    println!("{} labels, {} aligned sequences", labels.len(), gold.len());
    Ok(())
}

fn read_cm(path: &Path) -> CliResult<ConfusionMatrix> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(ConfusionMatrix::from_tsv(&text)?)
}

/// Weak-label file as a dataset whose labels are the weak ones; abstained
/// headlines carry no label.
fn read_noisy(path: &Path, task: Task) -> CliResult<Dataset> {
    let mut d = read_dataset(path, task)?;
    for s in &mut d.sentences {
        if s.gold_class.as_deref() == Some(ABSTAIN) {
            s.gold_class = None;
        }
    }
    d.label_set.retain(|l| l != ABSTAIN);
    Ok(d)
}

#[allow(clippy::too_many_arguments)]
fn train_model(
    task: Task,
    train_path: &Path,
    dev_path: &Path,
    embeddings: &Path,
    noise: Option<(PathBuf, Option<PathBuf>)>,
    schedule: TrainSchedule,
    history_path: Option<&Path>,
    out: &Path,
) -> CliResult {
    let clean = read_dataset(train_path, task)?;
    let dev = read_dataset(dev_path, task)?;
    let emb = EmbeddingTable::load(embeddings)?;
    let (noisy, handling) = match noise {
        None => (Dataset::new(task), NoiseHandling::AsClean),
        Some((n, None)) => (read_noisy(&n, task)?, NoiseHandling::AsClean),
        Some((n, Some(c))) => (read_noisy(&n, task)?, NoiseHandling::Channel(read_cm(&c)?)),
    };
    let mut data_labels: BTreeSet<String> = BTreeSet::new();
    for d in [&clean, &dev, &noisy] {
        data_labels.extend(d.label_set.iter().cloned());
    }
    let data_labels: Vec<String> = data_labels.into_iter().collect();
    let labels = match &handling {
        NoiseHandling::Channel(cm) => {
            let needed = output_labels(task, &data_labels);
            if let Some(l) = needed.iter().find(|l| !cm.labels().contains(l)) {
                return Err(Error::UnknownLabel(format!(
                    "{l} (missing from the confusion matrix)"
                ))
                .into());
            }
            cm.labels().to_vec()
        }
        NoiseHandling::AsClean => output_labels(task, &data_labels),
    };
    let model = init_model(task, labels, emb.dim(), schedule.seed)?;
    let (model, history) = train_with(model, &clean, &noisy, handling, &schedule, &dev, &emb)?;
    write_atomic(out, &model.to_checkpoint())?;
    let mut csv = String::from("epoch,loss,dev_f1,clean_sentences,noisy_sentences\n");
    for r in &history {
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{},{}",
            r.epoch + 1,
            r.loss,
            r.dev_f1,
            r.clean_sentences,
            r.noisy_sentences
        );
    }
    if let Some(p) = history_path {
        write_atomic(p, &csv)?;
    }
    let best = history
        .iter()
        .map(|r| r.dev_f1)
        .fold(f64::NEG_INFINITY, f64::max);
    println!("trained {} epochs; best dev F1 {best:.4}", history.len());
    Ok(())
}

fn evaluate_checkpoint(
    model: &Path,
    test: &Path,
    embeddings: &Path,
    csv: Option<&Path>,
    setting: &str,
    seed: u64,
) -> CliResult {
    let text = std::fs::read_to_string(model).map_err(|e| Error::io(model, e))?;
    let m = Model::from_checkpoint(&text)?;
    let d = read_dataset(test, m.task())?;
    let emb = EmbeddingTable::load(embeddings)?;
    let metrics = evaluate(&m, &d, &emb)?;
    print!("{}", metrics.table());
    if let Some(path) = csv {
        write_atomic(
            path,
            &format!("{METRICS_CSV_HEADER}\n{}", metrics.csv_rows(setting, seed)),
        )?;
    }
    Ok(())
}

fn curve(cfg: &ExperimentConfig, out: &Path) -> CliResult {
    let data = CurveData::load(cfg)?;
    let result = run_curve(cfg, &data)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_atomic(&out.join("runs.csv"), &result.runs_csv())?;
    write_atomic(&out.join("summary.csv"), &result.summary_csv())?;
    print!("{}", result.summary_csv());
    Ok(())
}
