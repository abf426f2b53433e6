//! Synthetic topic corpora with known label-conditional weak-label noise.
//!
//! Each class owns a block of topical words whose vectors sit around a class
//! centroid; shared filler words carry no class signal. Weak labels are drawn
//! from a fixed corruption matrix that keeps a class with probability
//! `1 - flip_mass` and otherwise moves it to the next class.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::classifier::EmbeddingTable;
use crate::corpus::{Dataset, Sentence, Task};
use crate::error::{Error, Result};
use crate::noisemodel::ConfusionMatrix;
use crate::seeds;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub classes: usize,
    pub dim: usize,
    pub topical_words_per_class: usize,
    pub shared_words: usize,
    pub words_per_headline: usize,
    /// Probability that a headline word is drawn from its class block.
    pub topical_prob: f64,
    /// Norm scale of class centroids relative to unit word noise.
    pub centroid_scale: f64,
    pub flip_mass: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 4,
            dim: 16,
            topical_words_per_class: 40,
            shared_words: 200,
            words_per_headline: 6,
            topical_prob: 0.3,
            centroid_scale: 0.6,
            flip_mass: 0.3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTopics {
    pub config: SyntheticConfig,
    pub labels: Vec<String>,
    pub embeddings: EmbeddingTable,
    /// True clean-to-weak corruption matrix.
    pub corruption: ConfusionMatrix,
}

fn topical_word(class: usize, i: usize) -> String {
    format!("t{class}w{i}")
}

fn shared_word(i: usize) -> String {
    format!("s{i}")
}

impl SyntheticTopics {
    pub fn new(config: SyntheticConfig) -> Result<Self> {
        if config.classes < 2 || config.dim == 0 || config.words_per_headline == 0 {
            return Err(Error::InvalidArgument(
                "synthetic corpus needs ≥ 2 classes, a positive dimension and non-empty headlines"
                    .into(),
            ));
        }
        if config.topical_words_per_class == 0 || config.shared_words == 0 {
            return Err(Error::InvalidArgument(
                "synthetic vocabulary blocks must be non-empty".into(),
            ));
        }
        for (name, p) in [
            ("topical_prob", config.topical_prob),
            ("flip_mass", config.flip_mass),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1]")));
            }
        }
        let k = config.classes;
        let labels: Vec<String> = (0..k).map(|c| format!("C{c}")).collect();
        let mut rng = seeds::rng(config.seed, &[0]);
        let mut normal =
            |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
        let mut embeddings = EmbeddingTable::new(config.dim);
        for c in 0..k {
            let centroid: Vec<f64> = normal(config.dim)
                .into_iter()
                .map(|x| x * config.centroid_scale)
                .collect();
            for i in 0..config.topical_words_per_class {
                let v = normal(config.dim)
                    .into_iter()
                    .zip(&centroid)
                    .map(|(x, m)| m + x * 0.5)
                    .collect();
                embeddings.insert(topical_word(c, i), v)?;
            }
        }
        for i in 0..config.shared_words {
            embeddings.insert(shared_word(i), normal(config.dim))?;
        }
        let rows = (0..k)
            .map(|i| {
                let mut row = vec![0.0; k];
                row[i] += 1.0 - config.flip_mass;
                row[(i + 1) % k] += config.flip_mass;
                row
            })
            .collect();
        let corruption = ConfusionMatrix::new(labels.clone(), rows)?;
        Ok(SyntheticTopics {
            config,
            labels,
            embeddings,
            corruption,
        })
    }

    /// `n` headlines with gold classes and corrupted weak classes. Classes
    /// cycle so every class is represented as evenly as `n` allows.
    pub fn sample(&self, n: usize, seed: u64) -> Dataset {
        let cfg = &self.config;
        let k = cfg.classes;
        let mut rng = seeds::rng(cfg.seed, &[1, seed]);
        let mut classes: Vec<usize> = (0..n).map(|i| i % k).collect();
        classes.shuffle(&mut rng);
        let mut d = Dataset::new(Task::Topic);
        d.label_set = self.labels.clone();
        for class in classes {
            let words: Vec<String> = (0..cfg.words_per_headline)
                .map(|_| {
                    if rng.gen_bool(cfg.topical_prob) {
                        topical_word(class, rng.gen_range(0..cfg.topical_words_per_class))
                    } else {
                        shared_word(rng.gen_range(0..cfg.shared_words))
                    }
                })
                .collect();
            let weak = if rng.gen_bool(cfg.flip_mass) {
                (class + 1) % k
            } else {
                class
            };
            let mut s = Sentence::from_surfaces(words);
            s.gold_class = Some(self.labels[class].clone());
            s.weak_class = Some(self.labels[weak].clone());
            d.sentences.push(s);
        }
        d
    }
}
