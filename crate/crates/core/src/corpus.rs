//! Datasets, file formats, splitting, downsampling and label projection.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bio::{spans_from_tags, Tag};
use crate::error::{Error, Result};
use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    Ner,
    Topic,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Ner => "ner",
            Task::Topic => "topic",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ner" => Ok(Task::Ner),
            "topic" => Ok(Task::Topic),
            _ => Err(Error::InvalidArgument(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub surface: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    pub gold_tags: Option<Vec<Tag>>,
    pub weak_tags: Option<Vec<Tag>>,
    pub gold_class: Option<String>,
    /// `None` after annotation means the rules abstained.
    pub weak_class: Option<String>,
}

impl Sentence {
    pub fn from_surfaces<S: Into<String>>(surfaces: impl IntoIterator<Item = S>) -> Self {
        let tokens = surfaces
            .into_iter()
            .enumerate()
            .map(|(index, s)| Token {
                surface: s.into(),
                index,
            })
            .collect();
        Sentence {
            tokens,
            ..Default::default()
        }
    }

    pub fn from_text(raw: &str) -> Self {
        Self::from_surfaces(tokenize(raw))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    pub fn text(&self) -> String {
        self.surfaces().collect::<Vec<_>>().join(" ")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub task: Task,
    pub sentences: Vec<Sentence>,
    /// Entity types (NER) or classes (topic), sorted and unique.
    pub label_set: Vec<String>,
    pub language: Option<String>,
}

impl Dataset {
    pub fn new(task: Task) -> Self {
        Dataset {
            task,
            sentences: Vec::new(),
            label_set: Vec::new(),
            language: None,
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    /// Same metadata, different sentences.
    pub fn with_sentences(&self, sentences: Vec<Sentence>) -> Dataset {
        Dataset {
            task: self.task,
            sentences,
            label_set: self.label_set.clone(),
            language: self.language.clone(),
        }
    }

    /// Labels used by the gold layer, sorted.
    pub fn gold_labels(&self) -> Vec<String> {
        let mut set = BTreeSet::new();
        for s in &self.sentences {
            if let Some(tags) = &s.gold_tags {
                set.extend(tags.iter().filter_map(Tag::label).map(str::to_string));
            }
            if let Some(c) = &s.gold_class {
                set.insert(c.clone());
            }
        }
        set.into_iter().collect()
    }

    /// Checks tag-layer lengths and that every label belongs to `label_set`.
    pub fn validate(&self) -> Result<()> {
        let known: BTreeSet<&str> = self.label_set.iter().map(String::as_str).collect();
        let check = |l: &str| {
            if known.contains(l) {
                Ok(())
            } else {
                Err(Error::UnknownLabel(l.to_string()))
            }
        };
        for (i, s) in self.sentences.iter().enumerate() {
            for layer in [&s.gold_tags, &s.weak_tags].into_iter().flatten() {
                if layer.len() != s.len() {
                    return Err(Error::LengthMismatch(format!(
                        "sentence {i}: {} tokens, {} tags",
                        s.len(),
                        layer.len()
                    )));
                }
                for l in layer.iter().filter_map(Tag::label) {
                    check(l)?;
                }
            }
            for c in [&s.gold_class, &s.weak_class].into_iter().flatten() {
                check(c)?;
            }
        }
        Ok(())
    }
}

fn sorted_unique(labels: impl IntoIterator<Item = String>) -> Vec<String> {
    labels
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Parses "token<TAB>tag" lines with blank-line sentence separators.
pub fn parse_conll(text: &str) -> Result<Dataset> {
    let mut dataset = Dataset::new(Task::Ner);
    let mut labels = BTreeSet::new();
    let mut surfaces = Vec::new();
    let mut tags = Vec::new();

    let mut flush = |surfaces: &mut Vec<String>, tags: &mut Vec<Tag>| {
        if !surfaces.is_empty() {
            let mut s = Sentence::from_surfaces(surfaces.drain(..));
            s.gold_tags = Some(std::mem::take(tags));
            dataset.sentences.push(s);
        }
    };

    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            flush(&mut surfaces, &mut tags);
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 2 {
            return Err(Error::parse(
                i + 1,
                format!("expected 2 tab-separated fields, found {}", fields.len()),
            ));
        }
        let surface = fields[0].trim();
        if surface.is_empty() || surface.chars().any(char::is_whitespace) {
            return Err(Error::parse(i + 1, "empty or whitespace-containing token"));
        }
        let tag: Tag = fields[1]
            .trim()
            .parse()
            .map_err(|e: Error| Error::parse(i + 1, e.to_string()))?;
        if let Some(l) = tag.label() {
            labels.insert(l.to_string());
        }
        surfaces.push(surface.to_string());
        tags.push(tag);
    }
    flush(&mut surfaces, &mut tags);
    dataset.label_set = labels.into_iter().collect();
    Ok(dataset)
}

/// Which tag layer to serialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Layer {
    Gold,
    Weak,
}

/// Writes one tag layer in CoNLL format. Sentences without that layer are
/// written with all-`O` tags.
pub fn write_conll(d: &Dataset, layer: Layer) -> String {
    let mut out = String::new();
    for (n, s) in d.sentences.iter().enumerate() {
        if n > 0 {
            out.push('\n');
        }
        let tags = match layer {
            Layer::Gold => s.gold_tags.as_ref(),
            Layer::Weak => s.weak_tags.as_ref(),
        };
        for (i, tok) in s.tokens.iter().enumerate() {
            out.push_str(&tok.surface);
            out.push('\t');
            match tags {
                Some(t) => out.push_str(&t[i].to_string()),
                None => out.push_str(crate::bio::OUTSIDE),
            }
            out.push('\n');
        }
    }
    out
}

/// Parses "class<TAB>headline" lines; headlines are tokenized.
pub fn parse_topic_tsv(text: &str) -> Result<Dataset> {
    let mut dataset = Dataset::new(Task::Topic);
    let mut labels = BTreeSet::new();
    for (i, line) in text.split('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let (class, headline) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(i + 1, "missing tab between class and headline"))?;
        let class = class.trim();
        if class.is_empty() {
            return Err(Error::parse(i + 1, "empty class label"));
        }
        let mut s = Sentence::from_text(headline);
        if s.is_empty() {
            return Err(Error::parse(i + 1, "empty headline"));
        }
        s.gold_class = Some(class.to_string());
        labels.insert(class.to_string());
        dataset.sentences.push(s);
    }
    dataset.label_set = labels.into_iter().collect();
    Ok(dataset)
}

/// Marker written in place of a class when the rules abstained.
pub const ABSTAIN: &str = "ABSTAIN";

/// Writes "class<TAB>headline" lines for the chosen layer. Missing weak
/// classes are written as [`ABSTAIN`].
pub fn write_topic_tsv(d: &Dataset, layer: Layer) -> String {
    let mut out = String::new();
    for s in &d.sentences {
        let class = match layer {
            Layer::Gold => s.gold_class.as_deref(),
            Layer::Weak => s.weak_class.as_deref(),
        };
        out.push_str(class.unwrap_or(ABSTAIN));
        out.push('\t');
        out.push_str(&s.text());
        out.push('\n');
    }
    out
}

/// Copies the gold layer of `weak` onto the weak layer of `base`, sentence by
/// sentence. Used to pair a gold file with a separately written weak file.
pub fn attach_weak_layer(base: &mut Dataset, weak: &Dataset) -> Result<()> {
    if base.task != weak.task {
        return Err(Error::TaskMismatch {
            expected: base.task,
            found: weak.task,
        });
    }
    if base.len() != weak.len() {
        return Err(Error::LengthMismatch(format!(
            "{} gold sentences, {} weak sentences",
            base.len(),
            weak.len()
        )));
    }
    for (i, (b, w)) in base.sentences.iter_mut().zip(&weak.sentences).enumerate() {
        if b.len() != w.len() {
            return Err(Error::LengthMismatch(format!(
                "sentence {i}: {} vs {} tokens",
                b.len(),
                w.len()
            )));
        }
        b.weak_tags = w.gold_tags.clone();
        b.weak_class = w.gold_class.clone().filter(|c| c != ABSTAIN);
    }
    let mut labels: BTreeSet<String> = base.label_set.iter().cloned().collect();
    labels.extend(weak.label_set.iter().filter(|l| *l != ABSTAIN).cloned());
    base.label_set = labels.into_iter().collect();
    Ok(())
}

/// Parses CoNLL (NER) or TSV (topic) text according to `task`.
pub fn parse_dataset(text: &str, task: Task) -> Result<Dataset> {
    match task {
        Task::Ner => parse_conll(text),
        Task::Topic => parse_topic_tsv(text),
    }
}

pub fn read_dataset(path: impl AsRef<std::path::Path>, task: Task) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, task)
}

/// Serializes one label layer in the task's file format.
pub fn write_dataset(d: &Dataset, layer: Layer) -> String {
    match d.task {
        Task::Ner => write_conll(d, layer),
        Task::Topic => write_topic_tsv(d, layer),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitUnit {
    Sentence,
    Token,
}

impl FromStr for SplitUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sentence" => Ok(SplitUnit::Sentence),
            "token" => Ok(SplitUnit::Token),
            _ => Err(Error::InvalidArgument(format!("unknown split unit {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub ratios: [f64; 3],
    pub unit: SplitUnit,
    /// Only consulted when `shuffle` is set.
    pub seed: u64,
    /// Permute sentences before the contiguous split.
    pub shuffle: bool,
}

impl SplitSpec {
    pub fn new(train: f64, dev: f64, test: f64, unit: SplitUnit) -> Self {
        SplitSpec {
            ratios: [train, dev, test],
            unit,
            seed: 0,
            shuffle: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.ratios.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(Error::InvalidArgument(format!(
                "split ratios must lie in [0, 1]: {:?}",
                self.ratios
            )));
        }
        let sum: f64 = self.ratios.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "split ratios must sum to 1, got {sum}"
            )));
        }
        Ok(())
    }
}

/// Contiguous train/dev/test partition in corpus order.
///
/// With [`SplitUnit::Token`] each boundary is placed at the first sentence end
/// where the cumulative token count meets the cumulative quota.
pub fn split_dataset(d: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset, Dataset)> {
    spec.validate()?;
    if d.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut sentences = d.sentences.clone();
    if spec.shuffle {
        sentences.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    }
    let n = sentences.len();
    let first = spec.ratios[0];
    let second = spec.ratios[0] + spec.ratios[1];

    let (b1, b2) = match spec.unit {
        SplitUnit::Sentence => {
            let at = |frac: f64| ((n as f64 * frac).round() as usize).min(n);
            (at(first), at(second))
        }
        SplitUnit::Token => {
            let total: usize = sentences.iter().map(Sentence::len).sum();
            let mut cumulative = Vec::with_capacity(n + 1);
            cumulative.push(0usize);
            for s in &sentences {
                cumulative.push(cumulative.last().unwrap() + s.len());
            }
            let at = |frac: f64| {
                let quota = total as f64 * frac;
                if frac >= 1.0 - 1e-12 {
                    return n;
                }
                cumulative
                    .iter()
                    .position(|&c| c as f64 >= quota - 1e-9)
                    .unwrap_or(n)
            };
            (at(first), at(second))
        }
    };
    let b2 = b2.max(b1);
    let test = sentences.split_off(b2);
    let dev = sentences.split_off(b1);
    Ok((
        d.with_sentences(sentences),
        d.with_sentences(dev),
        d.with_sentences(test),
    ))
}

/// Seeded permutation of sentence indices. Prefixes of this permutation are
/// the nested subsets returned by [`downsample`].
pub fn sample_order(len: usize, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order
}

/// Deterministic subset of exactly `target_size` sentences, corpus order kept.
///
/// Subsets are nested: for a fixed seed the subset at size `n` is contained in
/// the subset at every size `m >= n`.
pub fn downsample(d: &Dataset, target_size: usize, seed: u64) -> Result<Dataset> {
    if target_size == 0 || target_size > d.len() {
        return Err(Error::InvalidArgument(format!(
            "target size {target_size} outside 1..={}",
            d.len()
        )));
    }
    let mut chosen = sample_order(d.len(), seed);
    chosen.truncate(target_size);
    chosen.sort_unstable();
    Ok(d.with_sentences(chosen.into_iter().map(|i| d.sentences[i].clone()).collect()))
}

/// Development-set size matching a reduced training set: shrunk by the same
/// factor, but never below `min(10, dev_len)`.
pub fn downsized_dev_target(dev_len: usize, train_subset: usize, train_full: usize) -> usize {
    if train_full == 0 {
        return dev_len;
    }
    let scaled = (dev_len as f64 * train_subset as f64 / train_full as f64).round() as usize;
    scaled.max(dev_len.min(10)).min(dev_len)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    Intersect,
    Union,
}

/// Aligns a dataset's label set with another label inventory.
///
/// `Intersect` turns NER spans of foreign types into `O` and drops topic
/// sentences whose gold class is foreign. `Union` only widens the label set.
pub fn project_labels(d: &Dataset, target: &[String], mode: ProjectionMode) -> Dataset {
    match mode {
        ProjectionMode::Union => {
            let mut out = d.clone();
            out.label_set = sorted_unique(d.label_set.iter().chain(target).cloned());
            out
        }
        ProjectionMode::Intersect => {
            let keep = |l: &str| target.iter().any(|t| t == l);
            let strip = |tags: &Option<Vec<Tag>>| {
                tags.as_ref().map(|tags| {
                    tags.iter()
                        .map(|t| match t.label() {
                            Some(l) if !keep(l) => Tag::Outside,
                            _ => t.clone(),
                        })
                        .collect::<Vec<_>>()
                })
            };
            let sentences = d
                .sentences
                .iter()
                .filter(|s| d.task == Task::Ner || s.gold_class.as_deref().is_none_or(keep))
                .map(|s| Sentence {
                    tokens: s.tokens.clone(),
                    gold_tags: strip(&s.gold_tags),
                    weak_tags: strip(&s.weak_tags),
                    gold_class: s.gold_class.clone(),
                    weak_class: s.weak_class.clone().filter(|c| keep(c)),
                })
                .collect();
            let mut out = d.with_sentences(sentences);
            out.label_set = d.label_set.iter().filter(|l| keep(l)).cloned().collect();
            out
        }
    }
}

/// Number of gold entity spans per type, handy for corpus statistics.
pub fn span_counts(d: &Dataset) -> Vec<(String, usize)> {
    let mut counts: std::collections::BTreeMap<String, usize> =
        d.label_set.iter().map(|l| (l.clone(), 0)).collect();
    for s in &d.sentences {
        if let Some(tags) = &s.gold_tags {
            for span in spans_from_tags(tags) {
                *counts.entry(span.label).or_default() += 1;
            }
        }
    }
    counts.into_iter().collect()
}
