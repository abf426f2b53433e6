use rand::seq::{index, SliceRandom};

use super::embeddings::EmbeddingTable;
use super::model::{zero_gradients, Decision, Model, Predictions};
use crate::corpus::{Dataset, Layer, Task};
use crate::error::{Error, Result};
use crate::eval::{classification_metrics, span_f1, Metrics};
use crate::noisemodel::ConfusionMatrix;
use crate::seeds;

const SUBSAMPLE_STREAM: u64 = 0;
const SHUFFLE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub subsample_noisy: bool,
    /// (clean, noisy).
    pub loss_weights: (f64, f64),
    /// Sentences per gradient step.
    pub batch_size: usize,
}

impl TrainSchedule {
    pub const DEFAULT_EPOCHS: usize = 50;
    pub const DEFAULT_BATCH_SIZE: usize = 1;

    pub fn default_learning_rate(task: Task) -> f64 {
        match task {
            Task::Topic => 0.1,
            Task::Ner => 0.05,
        }
    }

    pub fn for_task(task: Task, seed: u64) -> Self {
        TrainSchedule {
            epochs: Self::DEFAULT_EPOCHS,
            learning_rate: Self::default_learning_rate(task),
            seed,
            subsample_noisy: true,
            loss_weights: (1.0, 1.0),
            batch_size: Self::DEFAULT_BATCH_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument(
                "batch size must be at least 1".into(),
            ));
        }
        let (c, n) = self.loss_weights;
        if !(c >= 0.0 && n >= 0.0 && c.is_finite() && n.is_finite()) {
            return Err(Error::InvalidArgument(
                "loss weights must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// How noisy sentences enter the objective.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseHandling {
    /// Loss on the model distribution composed with this channel.
    Channel(ConfusionMatrix),
    /// Loss on the model distribution directly.
    AsClean,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Weighted training loss per decision over the epoch.
    pub loss: f64,
    pub dev_f1: f64,
    pub clean_sentences: usize,
    pub noisy_sentences: usize,
}

/// Dev metric used for epoch selection: span micro F1 for NER, macro F1 for
/// topics.
pub fn evaluate(m: &Model, d: &Dataset, embeddings: &EmbeddingTable) -> Result<Metrics> {
    match m.predict(d, embeddings)? {
        Predictions::Tags(pred) => {
            let gold = d
                .sentences
                .iter()
                .map(|s| s.gold_tags.clone().ok_or(Error::Empty("gold tags")))
                .collect::<Result<Vec<_>>>()?;
            span_f1(&gold, &pred)
        }
        Predictions::Classes(pred) => {
            let gold = d
                .sentences
                .iter()
                .map(|s| s.gold_class.clone().ok_or(Error::Empty("gold class")))
                .collect::<Result<Vec<_>>>()?;
            classification_metrics(&gold, &pred, m.labels())
        }
    }
}

pub fn selection_score(task: Task, metrics: &Metrics) -> f64 {
    match task {
        Task::Ner => metrics.micro.f1,
        Task::Topic => metrics.macro_avg.f1,
    }
}

/// Per-sentence decisions. Noisy data reads its weak layer when any sentence
/// carries one and its gold layer otherwise; sentences without labels in the
/// chosen layer are skipped.
fn sentence_decisions(
    m: &Model,
    d: &Dataset,
    embeddings: &EmbeddingTable,
    noisy: bool,
) -> Result<Vec<Vec<Decision>>> {
    let has_weak = d
        .sentences
        .iter()
        .any(|s| s.weak_tags.is_some() || s.weak_class.is_some());
    let layer = if noisy && has_weak {
        Layer::Weak
    } else {
        Layer::Gold
    };
    let mut out = Vec::with_capacity(d.len());
    for s in &d.sentences {
        match m.decisions(s, embeddings, layer)? {
            Some(ds) => out.push(ds),
            None if noisy => {}
            None => return Err(Error::Empty("gold labels on a clean sentence")),
        }
    }
    Ok(out)
}

/// Removes noisy decisions whose label has zero probability under every
/// clean label of the channel; their loss is infinite whatever the model
/// predicts. Sentences left without decisions are dropped.
fn drop_impossible_decisions(noisy: &mut Vec<Vec<Decision>>, cm: &ConfusionMatrix) {
    let k = cm.size();
    let possible: Vec<bool> = (0..k).map(|j| (0..k).any(|i| cm.get(i, j) > 0.0)).collect();
    if possible.iter().all(|&p| p) {
        return;
    }
    let mut dropped = 0usize;
    for ds in noisy.iter_mut() {
        let before = ds.len();
        ds.retain(|d| possible[d.label]);
        dropped += before - ds.len();
    }
    noisy.retain(|ds| !ds.is_empty());
    let unreachable: Vec<&str> = (0..k)
        .filter(|&j| !possible[j])
        .map(|j| cm.labels()[j].as_str())
        .collect();
    log::warn!(
        "channel gives zero probability to noisy labels {unreachable:?}; ignoring {dropped} noisy decisions"
    );
}

/// Epoch-by-epoch gradient descent over clean and noisy sentences.
///
/// Each epoch uses every clean sentence plus a seeded random subset of
/// `min(|clean|, |noisy|)` noisy sentences (all of them when subsampling is
/// off), shuffled together into batches. A batch's loss is
/// `(w_c · Σ clean losses + w_n · Σ noisy losses) / decisions in batch`.
pub struct Trainer {
    model: Model,
    clean: Vec<Vec<Decision>>,
    noisy: Vec<Vec<Decision>>,
    handling: NoiseHandling,
    schedule: TrainSchedule,
    epoch: usize,
}

impl Trainer {
    pub fn new(
        model: Model,
        clean: &Dataset,
        noisy: &Dataset,
        handling: NoiseHandling,
        schedule: TrainSchedule,
        embeddings: &EmbeddingTable,
    ) -> Result<Self> {
        schedule.validate()?;
        if clean.is_empty() {
            return Err(Error::Empty("clean training set"));
        }
        for d in [clean, noisy] {
            if !d.is_empty() && d.task != model.task() {
                return Err(Error::TaskMismatch {
                    expected: model.task(),
                    found: d.task,
                });
            }
        }
        if let NoiseHandling::Channel(cm) = &handling {
            model.check_channel(cm)?;
        }
        let clean = sentence_decisions(&model, clean, embeddings, false)?;
        let mut noisy = sentence_decisions(&model, noisy, embeddings, true)?;
        if let NoiseHandling::Channel(cm) = &handling {
            drop_impossible_decisions(&mut noisy, cm);
        }
        Ok(Trainer {
            model,
            clean,
            noisy,
            handling,
            schedule,
            epoch: 0,
        })
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn into_model(self) -> Model {
        self.model
    }

    pub fn epochs_run(&self) -> usize {
        self.epoch
    }

    /// Noisy sentence indices used in the given epoch, ascending.
    pub fn noisy_subset(&self, epoch: usize) -> Vec<usize> {
        let n = self.noisy.len();
        if !self.schedule.subsample_noisy {
            return (0..n).collect();
        }
        let take = n.min(self.clean.len());
        let mut rng = seeds::rng(self.schedule.seed, &[epoch as u64, SUBSAMPLE_STREAM]);
        let mut picked = index::sample(&mut rng, n, take).into_vec();
        picked.sort_unstable();
        picked
    }

    /// Runs one epoch and returns (weighted loss per decision, clean
    /// sentences, noisy sentences).
    pub fn run_epoch(&mut self) -> (f64, usize, usize) {
        let epoch = self.epoch;
        let subset = self.noisy_subset(epoch);
        let mut units: Vec<(bool, usize)> = (0..self.clean.len()).map(|i| (false, i)).collect();
        units.extend(subset.iter().map(|&i| (true, i)));
        let mut rng = seeds::rng(self.schedule.seed, &[epoch as u64, SHUFFLE_STREAM]);
        units.shuffle(&mut rng);

        let (w_clean, w_noisy) = self.schedule.loss_weights;
        let channel = match &self.handling {
            NoiseHandling::Channel(cm) => Some(cm),
            NoiseHandling::AsClean => None,
        };
        let mut epoch_loss = 0.0;
        let mut epoch_decisions = 0usize;
        for batch in units.chunks(self.schedule.batch_size) {
            let mut grads = zero_gradients(&self.model);
            let mut loss = 0.0;
            let mut decisions = 0usize;
            for &(is_noisy, i) in batch {
                let (ds, ch, w) = if is_noisy {
                    (&self.noisy[i], channel, w_noisy)
                } else {
                    (&self.clean[i], None, w_clean)
                };
                loss += self.model.accumulate(ds, ch, w, &mut grads);
                decisions += ds.len();
            }
            if decisions == 0 {
                continue;
            }
            grads.scale(1.0 / decisions as f64);
            self.model
                .apply_gradients(&grads, self.schedule.learning_rate);
            epoch_loss += loss;
            epoch_decisions += decisions;
        }
        self.epoch += 1;
        let mean = if epoch_decisions == 0 {
            0.0
        } else {
            epoch_loss / epoch_decisions as f64
        };
        (mean, self.clean.len(), subset.len())
    }
}

/// Trains for `schedule.epochs` epochs and returns the parameters of the
/// epoch with the highest dev score (earliest on ties) with the history.
pub fn train(
    model: Model,
    clean: &Dataset,
    noisy: &Dataset,
    cm: Option<&ConfusionMatrix>,
    schedule: &TrainSchedule,
    dev: &Dataset,
    embeddings: &EmbeddingTable,
) -> Result<(Model, Vec<EpochRecord>)> {
    let handling = match cm {
        Some(cm) => NoiseHandling::Channel(cm.clone()),
        None if noisy.is_empty() => NoiseHandling::AsClean,
        None => {
            return Err(Error::InvalidArgument(
                "noisy training data needs a confusion matrix".into(),
            ))
        }
    };
    train_with(model, clean, noisy, handling, schedule, dev, embeddings)
}

pub fn train_with(
    model: Model,
    clean: &Dataset,
    noisy: &Dataset,
    handling: NoiseHandling,
    schedule: &TrainSchedule,
    dev: &Dataset,
    embeddings: &EmbeddingTable,
) -> Result<(Model, Vec<EpochRecord>)> {
    if dev.is_empty() {
        return Err(Error::Empty("development set"));
    }
    let task = model.task();
    let mut trainer = Trainer::new(model, clean, noisy, handling, schedule.clone(), embeddings)?;
    let mut history = Vec::with_capacity(schedule.epochs);
    let mut best: Option<(f64, Model)> = None;
    for epoch in 0..schedule.epochs {
        let (loss, clean_sentences, noisy_sentences) = trainer.run_epoch();
        let dev_f1 = selection_score(task, &evaluate(trainer.model(), dev, embeddings)?);
        log::debug!("epoch {epoch}: loss {loss:.6} dev F1 {dev_f1:.4}");
        history.push(EpochRecord {
            epoch,
            loss,
            dev_f1,
            clean_sentences,
            noisy_sentences,
        });
        if best.as_ref().is_none_or(|(b, _)| dev_f1 > *b) {
            best = Some((dev_f1, trainer.model().clone()));
        }
    }
    let (_, model) = best.expect("at least one epoch");
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{compute_loss_and_gradients, init_model, output_labels};
    use crate::corpus::{parse_conll, parse_topic_tsv, Sentence};
    use proptest::prelude::*;

    fn vocab_table() -> EmbeddingTable {
        let words = [
            "kano", "abuja", "buhari", "atiku", "ya", "je", "zabe", "asibiti", "cuta", "kwallo",
        ];
        EmbeddingTable::from_vectors(
            4,
            words.iter().enumerate().map(|(i, w)| {
                let v = (0..4)
                    .map(|j| (((i + 1) * (j + 2)) % 7) as f64 / 7.0 - 0.4)
                    .collect();
                (w.to_string(), v)
            }),
        )
        .unwrap()
    }

    fn topics(lines: &[(&str, &str)]) -> Dataset {
        let text: String = lines.iter().map(|(c, t)| format!("{c}\t{t}\n")).collect();
        parse_topic_tsv(&text).unwrap()
    }

    fn topic_clean() -> Dataset {
        topics(&[
            ("Health", "asibiti cuta"),
            ("Politics", "zabe buhari"),
            ("Sport", "kwallo kano"),
            ("Politics", "atiku zabe abuja"),
            ("Health", "cuta ya je"),
        ])
    }

    fn schedule(epochs: usize) -> TrainSchedule {
        TrainSchedule {
            epochs,
            batch_size: 2,
            ..TrainSchedule::for_task(Task::Topic, 11)
        }
    }

    fn model_for(d: &Dataset, seed: u64) -> Model {
        init_model(d.task, output_labels(d.task, &d.label_set), 4, seed).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(TrainSchedule::for_task(Task::Ner, 0).validate().is_ok());
        assert!(TrainSchedule {
            epochs: 0,
            ..schedule(1)
        }
        .validate()
        .is_err());
        assert!(TrainSchedule {
            learning_rate: 0.0,
            ..schedule(1)
        }
        .validate()
        .is_err());
        assert!(TrainSchedule {
            learning_rate: f64::NAN,
            ..schedule(1)
        }
        .validate()
        .is_err());
    }

    #[test]
    fn train_errors() {
        let clean = topic_clean();
        let t = vocab_table();
        let empty = Dataset::new(Task::Topic);
        let m = model_for(&clean, 0);
        assert!(train(m.clone(), &empty, &empty, None, &schedule(1), &clean, &t).is_err());
        assert!(train(m.clone(), &clean, &empty, None, &schedule(1), &empty, &t).is_err());
        assert!(train(m.clone(), &clean, &clean, None, &schedule(1), &clean, &t).is_err());
        let ner = parse_conll("kano\tB-LOC\n").unwrap();
        assert!(train(m, &ner, &empty, None, &schedule(1), &clean, &t).is_err());
    }

    #[test]
    fn noisy_empty_matches_clean_only_reference() {
        let clean = topic_clean();
        let t = vocab_table();
        let empty = Dataset::new(Task::Topic);
        let (a, ha) = train(
            model_for(&clean, 2),
            &clean,
            &empty,
            None,
            &schedule(8),
            &clean,
            &t,
        )
        .unwrap();
        let (b, hb) = train_with(
            model_for(&clean, 2),
            &clean,
            &empty,
            NoiseHandling::AsClean,
            &schedule(8),
            &clean,
            &t,
        )
        .unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a, b);
        assert!(ha
            .iter()
            .all(|r| r.noisy_sentences == 0 && r.clean_sentences == 5));
    }

    #[test]
    fn identity_channel_on_copy_equals_doubled_clean_set() {
        let clean = topic_clean();
        let t = vocab_table();
        let id = ConfusionMatrix::identity(clean.label_set.clone());
        let mut doubled = clean.clone();
        doubled.sentences.extend(clean.sentences.clone());
        let empty = Dataset::new(Task::Topic);
        let (_, h_noisy) = train(
            model_for(&clean, 3),
            &clean,
            &clean,
            Some(&id),
            &schedule(6),
            &clean,
            &t,
        )
        .unwrap();
        let (_, h_double) = train(
            model_for(&clean, 3),
            &doubled,
            &empty,
            None,
            &schedule(6),
            &clean,
            &t,
        )
        .unwrap();
        let la: Vec<f64> = h_noisy.iter().map(|r| r.loss).collect();
        let lb: Vec<f64> = h_double.iter().map(|r| r.loss).collect();
        assert_eq!(la, lb);
    }

    #[test]
    fn noisy_subset_size_is_clean_size() {
        let sent = |i: usize| {
            let mut s = Sentence::from_text(if i.is_multiple_of(2) {
                "zabe buhari"
            } else {
                "asibiti cuta"
            });
            s.gold_class = Some(
                if i.is_multiple_of(2) {
                    "Politics"
                } else {
                    "Health"
                }
                .into(),
            );
            s
        };
        let mut clean = Dataset::new(Task::Topic);
        clean.sentences = (0..100).map(sent).collect();
        clean.label_set = vec!["Health".into(), "Politics".into()];
        let noisy = clean.with_sentences((0..5000).map(sent).collect());
        let cm = ConfusionMatrix::identity(clean.label_set.clone());
        let sched = TrainSchedule {
            epochs: 3,
            batch_size: 64,
            ..schedule(3)
        };
        let mut trainer = Trainer::new(
            model_for(&clean, 0),
            &clean,
            &noisy,
            NoiseHandling::Channel(cm),
            sched,
            &vocab_table(),
        )
        .unwrap();
        let s0 = trainer.noisy_subset(0);
        assert_eq!(s0.len(), 100);
        assert_ne!(s0, trainer.noisy_subset(1));
        for _ in 0..3 {
            assert_eq!(trainer.run_epoch().2, 100);
        }
    }

    #[test]
    fn best_dev_epoch_is_returned() {
        let clean = topic_clean();
        let t = vocab_table();
        let empty = Dataset::new(Task::Topic);
        let (best, hist) = train(
            model_for(&clean, 5),
            &clean,
            &empty,
            None,
            &schedule(15),
            &clean,
            &t,
        )
        .unwrap();
        let top = hist
            .iter()
            .map(|r| r.dev_f1)
            .fold(f64::NEG_INFINITY, f64::max);
        let score = selection_score(Task::Topic, &evaluate(&best, &clean, &t).unwrap());
        assert_eq!(score, top);
    }

    #[test]
    fn ner_training_runs_and_is_deterministic() {
        let d =
            parse_conll("buhari\tB-PER\nya\tO\nje\tO\nkano\tB-LOC\n\natiku\tB-PER\nabuja\tB-LOC\n")
                .unwrap();
        let t = vocab_table();
        let empty = Dataset::new(Task::Ner);
        let sched = TrainSchedule {
            epochs: 30,
            learning_rate: 0.5,
            ..TrainSchedule::for_task(Task::Ner, 1)
        };
        let run = || train(model_for(&d, 1), &d, &empty, None, &sched, &d, &t).unwrap();
        let (a, ha) = run();
        let (b, hb) = run();
        assert_eq!(a, b);
        assert_eq!(ha, hb);
        assert!(ha.last().unwrap().loss < ha[0].loss);
    }

    #[test]
    fn loss_decreases_on_a_repeated_batch() {
        let clean = topic_clean();
        let t = vocab_table();
        let mut m = model_for(&clean, 6);
        let batch: Vec<Decision> = clean
            .sentences
            .iter()
            .flat_map(|s| m.decisions(s, &t, Layer::Gold).unwrap().unwrap())
            .collect();
        let mut last = f64::INFINITY;
        for _ in 0..10 {
            let (loss, g) = compute_loss_and_gradients(&m, &batch, None).unwrap();
            assert!(loss <= last);
            last = loss;
            m.apply_gradients(&g, 0.01);
        }
    }

    fn stochastic_row(raw: &[f64]) -> Vec<f64> {
        let total: f64 = raw.iter().sum();
        raw.iter().map(|x| x / total).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn analytic_gradients_match_finite_differences(
            k in 2usize..=5,
            d in 1usize..=8,
            n in 1usize..=4,
            seed in any::<u64>(),
            use_channel in any::<bool>(),
            raw in prop::collection::vec(0.05f64..1.0, 25),
            xs in prop::collection::vec(-1.0f64..1.0, 32),
            ys in prop::collection::vec(0usize..5, 4),
        ) {
            let labels: Vec<String> = (0..k).map(|i| format!("c{i}")).collect();
            let mut m = init_model(Task::Topic, labels.clone(), d, seed).unwrap();
            for (i, b) in m.bias.iter_mut().enumerate() {
                *b = xs[i % xs.len()] * 0.5;
            }
            let batch: Vec<Decision> = (0..n)
                .map(|i| Decision {
                    features: (0..d).map(|j| xs[(i * d + j) % xs.len()]).collect(),
                    label: ys[i] % k,
                })
                .collect();
            let cm = ConfusionMatrix::new(
                labels,
                (0..k).map(|i| stochastic_row(&raw[i * 5..i * 5 + k])).collect(),
            )
            .unwrap();
            let ch = use_channel.then_some(&cm);
            let (_, grads) = compute_loss_and_gradients(&m, &batch, ch).unwrap();
            let analytic: Vec<f64> = grads.weights.iter().chain(&grads.bias).copied().collect();
            let h = 1e-5;
            for (p, a) in analytic.iter().enumerate() {
                let orig = *m.parameter_mut(p);
                *m.parameter_mut(p) = orig + h;
                let up = compute_loss_and_gradients(&m, &batch, ch).unwrap().0;
                *m.parameter_mut(p) = orig - h;
                let down = compute_loss_and_gradients(&m, &batch, ch).unwrap().0;
                *m.parameter_mut(p) = orig;
                let numeric = (up - down) / (2.0 * h);
                let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
                prop_assert!(rel <= 1e-4, "param {p}: analytic {a} numeric {numeric}");
            }
        }

        #[test]
        fn identity_channel_trajectory_equals_treating_noisy_as_clean(seed in 0u64..1000) {
            let clean = topic_clean();
            let noisy = topics(&[
                ("Sport", "asibiti zabe"),
                ("Health", "kwallo"),
                ("Politics", "cuta kano ya"),
            ]);
            let t = vocab_table();
            let id = ConfusionMatrix::identity(clean.label_set.clone());
            let sched = TrainSchedule { seed, ..schedule(5) };
            let mut a = Trainer::new(model_for(&clean, seed), &clean, &noisy, NoiseHandling::Channel(id), sched.clone(), &t).unwrap();
            let mut b = Trainer::new(model_for(&clean, seed), &clean, &noisy, NoiseHandling::AsClean, sched, &t).unwrap();
            for _ in 0..5 {
                prop_assert_eq!(a.run_epoch(), b.run_epoch());
                prop_assert_eq!(a.model(), b.model());
            }
        }
    }
}
