use rand::Rng;

use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::lexicon::{headline_ngrams, ClassDictionary, StageOneKeywords};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicRuleConfig {
    pub dictionaries: Vec<ClassDictionary>,
    pub stage_one: Option<StageOneKeywords>,
    pub tie_seed: u64,
    pub abstain_on_empty: bool,
}

impl TopicRuleConfig {
    pub fn new(dictionaries: Vec<ClassDictionary>) -> Result<Self> {
        for (i, d) in dictionaries.iter().enumerate() {
            if dictionaries[..i]
                .iter()
                .any(|o| o.class_label == d.class_label)
            {
                return Err(Error::Config(format!(
                    "duplicate dictionary for class {:?}",
                    d.class_label
                )));
            }
        }
        Ok(TopicRuleConfig {
            dictionaries,
            stage_one: None,
            tie_seed: 0,
            abstain_on_empty: true,
        })
    }

    pub fn with_stage_one(mut self, keywords: StageOneKeywords) -> Self {
        self.stage_one = Some(keywords);
        self
    }

    pub fn classes(&self) -> Vec<&str> {
        self.dictionaries
            .iter()
            .map(|d| d.class_label.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TopicVote {
    Class(String),
    Abstain,
}

impl TopicVote {
    pub fn class(&self) -> Option<&str> {
        match self {
            TopicVote::Class(c) => Some(c),
            TopicVote::Abstain => None,
        }
    }
}

/// Size of the intersection between the headline's 1-/2-grams and each
/// class dictionary, in dictionary order.
pub fn dictionary_counts(sentence: &Sentence, cfg: &TopicRuleConfig) -> Vec<usize> {
    let tokens: Vec<&str> = sentence.surfaces().collect();
    let grams = headline_ngrams(&tokens);
    cfg.dictionaries
        .iter()
        .map(|d| grams.iter().filter(|g| d.terms.contains(*g)).count())
        .collect()
}

/// Majority vote over dictionary intersections, after the stage-one check.
///
/// Ties are broken uniformly at random among the tied classes using `rng`.
pub fn annotate_topic<R: Rng + ?Sized>(
    sentence: &Sentence,
    cfg: &TopicRuleConfig,
    rng: &mut R,
) -> TopicVote {
    if let Some(stage_one) = &cfg.stage_one {
        let tokens: Vec<&str> = sentence.surfaces().collect();
        if let Some(class) = stage_one.lookup(&headline_ngrams(&tokens)) {
            return TopicVote::Class(class.to_string());
        }
    }
    if cfg.dictionaries.is_empty() {
        return TopicVote::Abstain;
    }
    let counts = dictionary_counts(sentence, cfg);
    let best = counts.iter().copied().max().unwrap_or(0);
    let candidates: Vec<usize> = if best == 0 {
        if cfg.abstain_on_empty {
            return TopicVote::Abstain;
        }
        (0..counts.len()).collect()
    } else {
        (0..counts.len()).filter(|&i| counts[i] == best).collect()
    };
    let pick = if candidates.len() == 1 {
        candidates[0]
    } else {
        candidates[rng.gen_range(0..candidates.len())]
    };
    TopicVote::Class(cfg.dictionaries[pick].class_label.clone())
}
