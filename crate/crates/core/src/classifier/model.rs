use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::embeddings::EmbeddingTable;
use crate::bio::{rehead, tag_inventory, Tag};
use crate::corpus::{Dataset, Layer, Sentence, Task};
use crate::error::{Error, Result};
use crate::noisemodel::ConfusionMatrix;

const CHECKPOINT_MAGIC: &str = "weaksup-model";
const CHECKPOINT_VERSION: u32 = 1;
const INIT_RANGE: f64 = 0.1;

/// A single linear layer with softmax output.
///
/// Topic features are the mean of the headline's token vectors (`F = D`);
/// NER features concatenate the vectors of the previous, current and next
/// token (`F = 3D`, zero-padded at sentence edges).
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    task: Task,
    labels: Vec<String>,
    dim: usize,
    /// Row-major K×F.
    pub(crate) weights: Vec<f64>,
    pub(crate) bias: Vec<f64>,
}

/// One classification decision: a feature vector and its target label index.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub features: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Gradients {
    fn zeros(m: &Model) -> Self {
        Gradients {
            weights: vec![0.0; m.weights.len()],
            bias: vec![0.0; m.bias.len()],
        }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for g in self.weights.iter_mut().chain(self.bias.iter_mut()) {
            *g *= factor;
        }
    }
}

/// Model labels for a task: `O`/`B-X`/`I-X` for NER, the classes for topics.
pub fn output_labels(task: Task, label_set: &[String]) -> Vec<String> {
    match task {
        Task::Ner => tag_inventory(label_set),
        Task::Topic => label_set.to_vec(),
    }
}

pub fn init_model(
    task: Task,
    labels: Vec<String>,
    embedding_dim: usize,
    seed: u64,
) -> Result<Model> {
    if labels.is_empty() {
        return Err(Error::Empty("label set"));
    }
    if embedding_dim == 0 {
        return Err(Error::InvalidArgument("embedding dimension is 0".into()));
    }
    let features = match task {
        Task::Topic => embedding_dim,
        Task::Ner => 3 * embedding_dim,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = (0..labels.len() * features)
        .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
        .collect();
    let bias = vec![0.0; labels.len()];
    Ok(Model {
        task,
        labels,
        dim: embedding_dim,
        weights,
        bias,
    })
}

pub(crate) fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for z in logits.iter_mut() {
        *z = (*z - max).exp();
        total += *z;
    }
    for z in logits.iter_mut() {
        *z /= total;
    }
}

impl Model {
    pub fn task(&self) -> Task {
        self.task
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn embedding_dim(&self) -> usize {
        self.dim
    }

    pub fn num_features(&self) -> usize {
        self.weights.len() / self.labels.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    /// Flat view of all parameters, weights first.
    pub fn parameters(&self) -> impl Iterator<Item = f64> + '_ {
        self.weights.iter().chain(&self.bias).copied()
    }

    pub fn parameter_mut(&mut self, index: usize) -> &mut f64 {
        let nw = self.weights.len();
        if index < nw {
            &mut self.weights[index]
        } else {
            &mut self.bias[index - nw]
        }
    }

    pub fn num_parameters(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    pub fn label_index(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    fn check_embeddings(&self, embeddings: &EmbeddingTable) -> Result<()> {
        if embeddings.dim() != self.dim {
            return Err(Error::LengthMismatch(format!(
                "model expects {}-dimensional embeddings, got {}",
                self.dim,
                embeddings.dim()
            )));
        }
        Ok(())
    }

    /// Feature vectors, one per decision (one per token for NER).
    pub fn features(&self, s: &Sentence, embeddings: &EmbeddingTable) -> Result<Vec<Vec<f64>>> {
        self.check_embeddings(embeddings)?;
        let d = self.dim;
        match self.task {
            Task::Topic => {
                if s.is_empty() {
                    return Err(Error::Empty("sentence"));
                }
                let mut f = vec![0.0; d];
                for tok in s.surfaces() {
                    embeddings.add_to(tok, &mut f);
                }
                let n = s.len() as f64;
                f.iter_mut().for_each(|x| *x /= n);
                Ok(vec![f])
            }
            Task::Ner => {
                let words: Vec<&str> = s.surfaces().collect();
                Ok((0..words.len())
                    .map(|i| {
                        let mut f = vec![0.0; 3 * d];
                        if i > 0 {
                            embeddings.add_to(words[i - 1], &mut f[..d]);
                        }
                        embeddings.add_to(words[i], &mut f[d..2 * d]);
                        if i + 1 < words.len() {
                            embeddings.add_to(words[i + 1], &mut f[2 * d..]);
                        }
                        f
                    })
                    .collect())
            }
        }
    }

    /// Decisions for a sentence with targets from the chosen label layer.
    /// Returns `None` when the layer is absent (e.g. an abstained headline).
    pub fn decisions(
        &self,
        s: &Sentence,
        embeddings: &EmbeddingTable,
        layer: Layer,
    ) -> Result<Option<Vec<Decision>>> {
        let targets: Vec<usize> = match (self.task, layer) {
            (Task::Ner, Layer::Gold) | (Task::Ner, Layer::Weak) => {
                let tags = if layer == Layer::Gold {
                    &s.gold_tags
                } else {
                    &s.weak_tags
                };
                let Some(tags) = tags else { return Ok(None) };
                if tags.len() != s.len() {
                    return Err(Error::LengthMismatch(format!(
                        "{} tokens, {} tags",
                        s.len(),
                        tags.len()
                    )));
                }
                tags.iter()
                    .map(|t| self.label_index(&t.to_string()))
                    .collect::<Result<_>>()?
            }
            (Task::Topic, _) => {
                let class = if layer == Layer::Gold {
                    &s.gold_class
                } else {
                    &s.weak_class
                };
                let Some(class) = class else { return Ok(None) };
                vec![self.label_index(class)?]
            }
        };
        let features = self.features(s, embeddings)?;
        Ok(Some(
            features
                .into_iter()
                .zip(targets)
                .map(|(features, label)| Decision { features, label })
                .collect(),
        ))
    }

    pub fn logits(&self, features: &[f64]) -> Vec<f64> {
        let f = self.num_features();
        self.weights
            .chunks(f)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(features).map(|(w, x)| w * x).sum::<f64>())
            .collect()
    }

    pub fn distribution(&self, features: &[f64]) -> Vec<f64> {
        let mut z = self.logits(features);
        softmax_in_place(&mut z);
        z
    }

    /// Softmax output per decision: one vector for a headline, one per token
    /// for NER.
    pub fn predict_distributions(
        &self,
        s: &Sentence,
        embeddings: &EmbeddingTable,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .features(s, embeddings)?
            .iter()
            .map(|f| self.distribution(f))
            .collect())
    }

    fn argmax(p: &[f64]) -> usize {
        let mut best = 0;
        for (i, v) in p.iter().enumerate() {
            if *v > p[best] {
                best = i;
            }
        }
        best
    }

    /// Most probable label per decision. NER output is re-headed to valid BIO2.
    pub fn predict(&self, d: &Dataset, embeddings: &EmbeddingTable) -> Result<Predictions> {
        match self.task {
            Task::Topic => {
                let mut out = Vec::with_capacity(d.len());
                for s in &d.sentences {
                    let p = &self.predict_distributions(s, embeddings)?[0];
                    out.push(self.labels[Self::argmax(p)].clone());
                }
                Ok(Predictions::Classes(out))
            }
            Task::Ner => {
                let mut out = Vec::with_capacity(d.len());
                for s in &d.sentences {
                    let mut tags = self
                        .predict_distributions(s, embeddings)?
                        .iter()
                        .map(|p| self.labels[Self::argmax(p)].parse::<Tag>())
                        .collect::<Result<Vec<Tag>>>()?;
                    rehead(&mut tags);
                    out.push(tags);
                }
                Ok(Predictions::Tags(out))
            }
        }
    }

    /// Adds `weight ×` the summed per-decision loss gradients into `grads`
    /// and returns `weight ×` the summed loss.
    ///
    /// With a channel the loss is `-ln q_y` for `q = pᵀC`, whose gradient with
    /// respect to logit k is `p_k - p_k C[k][y] / q_y`; without one it is
    /// `-ln p_y` with gradient `p_k - [k = y]`.
    pub(crate) fn accumulate(
        &self,
        decisions: &[Decision],
        channel: Option<&ConfusionMatrix>,
        weight: f64,
        grads: &mut Gradients,
    ) -> f64 {
        let f = self.num_features();
        let mut loss = 0.0;
        for d in decisions {
            let p = self.distribution(&d.features);
            let y = d.label;
            let dz: Vec<f64> = match channel {
                None => {
                    loss += -p[y].ln();
                    p.iter()
                        .enumerate()
                        .map(|(k, &pk)| if k == y { pk - 1.0 } else { pk })
                        .collect()
                }
                Some(cm) => {
                    let mut q_y = 0.0;
                    for (i, pi) in p.iter().enumerate() {
                        q_y += pi * cm.get(i, y);
                    }
                    loss += -q_y.ln();
                    p.iter()
                        .enumerate()
                        .map(|(k, &pk)| pk - (pk * cm.get(k, y)) / q_y)
                        .collect()
                }
            };
            for (k, g) in dz.iter().enumerate() {
                let g = weight * g;
                grads.bias[k] += g;
                let row = &mut grads.weights[k * f..(k + 1) * f];
                for (w, x) in row.iter_mut().zip(&d.features) {
                    *w += g * x;
                }
            }
        }
        weight * loss
    }

    pub(crate) fn check_channel(&self, cm: &ConfusionMatrix) -> Result<()> {
        if cm.labels() != self.labels.as_slice() {
            return Err(Error::InvalidArgument(
                "confusion matrix labels differ from the model's labels".into(),
            ));
        }
        Ok(())
    }

    /// One gradient-descent step.
    pub fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grads.weights) {
            *w -= learning_rate * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&grads.bias) {
            *b -= learning_rate * g;
        }
    }

    /// Versioned text checkpoint: labels, dimensions and row-major parameters.
    pub fn to_checkpoint(&self) -> String {
        let mut out = format!("{CHECKPOINT_MAGIC}\t{CHECKPOINT_VERSION}\n");
        let _ = writeln!(out, "task\t{}", self.task);
        let _ = writeln!(
            out,
            "dims\t{}\t{}\t{}",
            self.num_labels(),
            self.num_features(),
            self.dim
        );
        let _ = writeln!(out, "labels\t{}", self.labels.join("\t"));
        out.push_str("weights\n");
        for row in self.weights.chunks(self.num_features()) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join("\t"));
        }
        let cells: Vec<String> = self.bias.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(out, "bias\n{}", cells.join("\t"));
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Model> {
        let mut lines = text.lines().enumerate();
        let mut next = |what: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(0, format!("checkpoint truncated before {what}")))
        };
        let (n, header) = next("header")?;
        match header.split_once('\t') {
            Some((CHECKPOINT_MAGIC, v)) if v.trim() == CHECKPOINT_VERSION.to_string() => {}
            _ => return Err(Error::parse(n + 1, "not a version 1 model checkpoint")),
        }
        let field = |line: (usize, &str), key: &str| -> Result<Vec<String>> {
            let mut parts = line.1.split('\t');
            if parts.next() != Some(key) {
                return Err(Error::parse(line.0 + 1, format!("expected {key}")));
            }
            Ok(parts.map(str::to_string).collect())
        };
        let task: Task = field(next("task")?, "task")?
            .first()
            .ok_or_else(|| Error::parse(2, "missing task"))?
            .parse()?;
        let dims_line = next("dims")?;
        let dims: Vec<usize> = field(dims_line, "dims")?
            .iter()
            .map(|d| {
                d.parse()
                    .map_err(|_| Error::parse(dims_line.0 + 1, "bad dimension"))
            })
            .collect::<Result<_>>()?;
        let [k, f, d] = dims[..] else {
            return Err(Error::parse(dims_line.0 + 1, "expected three dimensions"));
        };
        let labels = field(next("labels")?, "labels")?;
        if labels.len() != k {
            return Err(Error::parse(4, "label count disagrees with dims"));
        }
        let numbers = |line: (usize, &str), len: usize| -> Result<Vec<f64>> {
            let v: Vec<f64> = line
                .1
                .split('\t')
                .map(|c| {
                    c.parse::<f64>()
                        .map_err(|_| Error::parse(line.0 + 1, "bad number"))
                })
                .collect::<Result<_>>()?;
            if v.len() != len || v.iter().any(|x| !x.is_finite()) {
                return Err(Error::parse(
                    line.0 + 1,
                    format!("expected {len} finite numbers"),
                ));
            }
            Ok(v)
        };
        field(next("weights")?, "weights")?;
        let mut weights = Vec::with_capacity(k * f);
        for _ in 0..k {
            weights.extend(numbers(next("weight row")?, f)?);
        }
        field(next("bias")?, "bias")?;
        let bias = numbers(next("bias values")?, k)?;
        let expected_f = match task {
            Task::Topic => d,
            Task::Ner => 3 * d,
        };
        if f != expected_f {
            return Err(Error::parse(3, "feature size does not match task"));
        }
        Ok(Model {
            task,
            labels,
            dim: d,
            weights,
            bias,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Tags(Vec<Vec<Tag>>),
    Classes(Vec<String>),
}

/// Mean loss and gradients over a batch of decisions, optionally through a
/// noise channel.
pub fn compute_loss_and_gradients(
    m: &Model,
    batch: &[Decision],
    channel: Option<&ConfusionMatrix>,
) -> Result<(f64, Gradients)> {
    if let Some(cm) = channel {
        m.check_channel(cm)?;
    }
    let k = m.num_labels();
    let f = m.num_features();
    for d in batch {
        if d.label >= k {
            return Err(Error::UnknownLabel(format!("label index {}", d.label)));
        }
        if d.features.len() != f {
            return Err(Error::LengthMismatch(format!(
                "feature vector of length {}, expected {f}",
                d.features.len()
            )));
        }
    }
    let mut grads = Gradients::zeros(m);
    if batch.is_empty() {
        return Ok((0.0, grads));
    }
    let loss = m.accumulate(batch, channel, 1.0, &mut grads);
    let n = batch.len() as f64;
    grads.scale(1.0 / n);
    Ok((loss / n, grads))
}

pub(crate) fn zero_gradients(m: &Model) -> Gradients {
    Gradients::zeros(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::is_valid_bio2;
    use crate::corpus::{parse_conll, parse_topic_tsv};

    fn table(dim: usize) -> EmbeddingTable {
        EmbeddingTable::from_vectors(
            dim,
            ["kano", "buhari", "ya", "je", "a", "b"]
                .iter()
                .enumerate()
                .map(|(i, w)| {
                    (
                        w.to_string(),
                        (0..dim)
                            .map(|j| ((i * 7 + j * 3) % 5) as f64 - 2.0)
                            .collect(),
                    )
                }),
        )
        .unwrap()
    }

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn init_is_deterministic_with_expected_shapes() {
        let a = init_model(Task::Topic, labels(5), 300, 9).unwrap();
        assert_eq!(a, init_model(Task::Topic, labels(5), 300, 9).unwrap());
        assert_ne!(a, init_model(Task::Topic, labels(5), 300, 10).unwrap());
        assert_eq!((a.num_labels(), a.num_features()), (5, 300));
        assert!(a.weights.iter().all(|w| w.abs() <= 0.1));
        assert!(a.bias.iter().all(|b| *b == 0.0));
        let n = init_model(
            Task::Ner,
            tag_inventory(&["PER", "ORG", "LOC", "DATE"]),
            300,
            1,
        )
        .unwrap();
        assert_eq!((n.num_labels(), n.num_features()), (9, 900));
        assert!(init_model(Task::Topic, vec![], 3, 0).is_err());
    }

    #[test]
    fn zero_weights_give_uniform_output() {
        let mut m = init_model(Task::Topic, labels(4), 3, 0).unwrap();
        m.weights.iter_mut().for_each(|w| *w = 0.0);
        let s = Sentence::from_text("kano buhari");
        let p = &m.predict_distributions(&s, &table(3)).unwrap()[0];
        assert!(p.iter().all(|x| (x - 0.25).abs() < 1e-15));
        assert!(m
            .predict_distributions(&Sentence::default(), &table(3))
            .is_err());
    }

    #[test]
    fn softmax_shift_invariance() {
        let mut a = vec![1.0, -2.0, 0.5];
        let mut b: Vec<f64> = a.iter().map(|x| x + 123.0).collect();
        softmax_in_place(&mut a);
        softmax_in_place(&mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
            assert!(*x > 0.0 && *x < 1.0);
        }
        assert!((a.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ner_features_use_a_window() {
        let m = init_model(Task::Ner, tag_inventory(&["LOC"]), 2, 0).unwrap();
        let s = Sentence::from_text("kano zzz buhari");
        let f = m.features(&s, &table(2)).unwrap();
        assert_eq!(f.len(), 3);
        assert_eq!(&f[0][..2], &[0.0, 0.0]);
        assert_eq!(&f[0][2..4], table(2).get("kano").unwrap());
        assert_eq!(&f[1][2..4], &[0.0, 0.0]);
        assert_eq!(&f[2][4..], &[0.0, 0.0]);
    }

    #[test]
    fn loss_of_uniform_prediction_is_ln_k() {
        let mut m = init_model(Task::Topic, labels(4), 3, 0).unwrap();
        m.weights.iter_mut().for_each(|w| *w = 0.0);
        let batch = vec![Decision {
            features: vec![0.3, -1.0, 2.0],
            label: 2,
        }];
        let (loss, _) = compute_loss_and_gradients(&m, &batch, None).unwrap();
        assert!((loss - 4f64.ln()).abs() < 1e-12);
        assert!((loss - 1.3863).abs() < 1e-4);
    }

    #[test]
    fn identity_channel_matches_clean_path_exactly() {
        let m = init_model(Task::Topic, labels(3), 2, 4).unwrap();
        let batch = vec![
            Decision {
                features: vec![0.3, -1.0],
                label: 2,
            },
            Decision {
                features: vec![1.5, 0.2],
                label: 0,
            },
        ];
        let id = ConfusionMatrix::identity(labels(3));
        let clean = compute_loss_and_gradients(&m, &batch, None).unwrap();
        let chan = compute_loss_and_gradients(&m, &batch, Some(&id)).unwrap();
        assert_eq!(clean, chan);
    }

    #[test]
    fn bad_batches_are_rejected() {
        let m = init_model(Task::Topic, labels(3), 2, 4).unwrap();
        let bad = vec![Decision {
            features: vec![0.0, 0.0],
            label: 3,
        }];
        assert!(compute_loss_and_gradients(&m, &bad, None).is_err());
        let short = vec![Decision {
            features: vec![0.0],
            label: 0,
        }];
        assert!(compute_loss_and_gradients(&m, &short, None).is_err());
        let wrong = ConfusionMatrix::identity(labels(2));
        assert!(compute_loss_and_gradients(&m, &[], Some(&wrong)).is_err());
    }

    #[test]
    fn decisions_reject_foreign_labels() {
        let m = init_model(Task::Topic, vec!["Sport".into()], 2, 0).unwrap();
        let d = parse_topic_tsv("Health\tkano\n").unwrap();
        assert!(matches!(
            m.decisions(&d.sentences[0], &table(2), Layer::Gold),
            Err(Error::UnknownLabel(_))
        ));
        assert_eq!(
            m.decisions(&d.sentences[0], &table(2), Layer::Weak)
                .unwrap(),
            None
        );
    }

    #[test]
    fn predictions_are_valid() {
        let d = parse_conll("kano\tB-LOC\nya\tO\nje\tO\n\nbuhari\tB-PER\na\tO\n").unwrap();
        let m = init_model(Task::Ner, output_labels(Task::Ner, &d.label_set), 4, 3).unwrap();
        let Predictions::Tags(tags) = m.predict(&d, &table(4)).unwrap() else {
            panic!()
        };
        assert_eq!(tags.len(), 2);
        assert!(tags.iter().all(|t| is_valid_bio2(t)));
        assert_eq!(Predictions::Tags(tags), m.predict(&d, &table(4)).unwrap());
    }

    #[test]
    fn checkpoint_round_trip() {
        let m = init_model(Task::Ner, tag_inventory(&["LOC", "PER"]), 3, 8).unwrap();
        let text = m.to_checkpoint();
        assert_eq!(Model::from_checkpoint(&text).unwrap(), m);
        assert!(Model::from_checkpoint("weaksup-model\t2\n").is_err());
        assert!(Model::from_checkpoint(&text.replace("dims\t5", "dims\t4")).is_err());
        let truncated: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(Model::from_checkpoint(&truncated).is_err());
    }
}
