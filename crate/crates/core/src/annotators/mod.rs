//! Distant-supervision annotators producing weak labels.

mod config;
mod dates;
mod gazetteer;
mod merge;
mod topic;

use std::collections::BTreeSet;

use log::warn;

pub use config::load_rules;
pub use dates::{annotate_ner_dates, date_spans, DateRuleConfig, DATE};
pub use gazetteer::{annotate_ner_gazetteer, match_gazetteer};
pub use merge::{merge_tag_layers, LabelPriority};
pub use topic::{annotate_topic, dictionary_counts, TopicRuleConfig, TopicVote};

use crate::bio::{tags_from_spans, Tag};
use crate::corpus::{Dataset, Sentence, Task};
use crate::error::{Error, Result};
use crate::lexicon::Gazetteer;
use crate::seeds;

/// Gazetteers plus optional DATE rules, merged by [`LabelPriority`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NerRules {
    pub gazetteers: Vec<Gazetteer>,
    pub dates: Option<DateRuleConfig>,
    pub priority: LabelPriority,
}

impl NerRules {
    pub fn labels(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = self.gazetteers.iter().map(|g| g.label.clone()).collect();
        if self.dates.is_some() {
            out.insert(DATE.to_string());
        }
        out
    }

    /// Runs every gazetteer and the DATE rules, then merges the layers.
    pub fn annotate(&self, sentence: &Sentence) -> Vec<Tag> {
        let mut layers: Vec<Vec<Tag>> = self
            .gazetteers
            .iter()
            .map(|g| tags_from_spans(&match_gazetteer(sentence, g), sentence.len()))
            .collect();
        if let Some(cfg) = &self.dates {
            layers.push(annotate_ner_dates(sentence, cfg));
        }
        if layers.is_empty() {
            return vec![Tag::Outside; sentence.len()];
        }
        merge_tag_layers(&layers, &self.priority).expect("layers share the sentence length")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleSet {
    Ner(NerRules),
    Topic(TopicRuleConfig),
}

impl RuleSet {
    pub fn task(&self) -> Task {
        match self {
            RuleSet::Ner(_) => Task::Ner,
            RuleSet::Topic(_) => Task::Topic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ApplyStats {
    pub sentences: usize,
    /// Sentences with at least one weak entity (NER) or a weak class (topic).
    pub labeled: usize,
    pub abstained: usize,
}

/// Fills the weak layer of every sentence. Gold layers are left untouched.
///
/// Topic tie-breaking draws from a stream seeded by (tie_seed, sentence index),
/// so results do not depend on processing order.
pub fn apply_rules(d: &Dataset, rules: &RuleSet) -> Result<(Dataset, ApplyStats)> {
    if d.task != rules.task() {
        return Err(Error::TaskMismatch {
            expected: rules.task(),
            found: d.task,
        });
    }
    let mut out = d.clone();
    let mut stats = ApplyStats {
        sentences: d.len(),
        ..Default::default()
    };
    let mut labels: BTreeSet<String> = d.label_set.iter().cloned().collect();
    match rules {
        RuleSet::Ner(ner) => {
            labels.extend(ner.labels());
            for s in &mut out.sentences {
                let tags = ner.annotate(s);
                if tags.iter().any(|t| !t.is_outside()) {
                    stats.labeled += 1;
                }
                s.weak_tags = Some(tags);
            }
        }
        RuleSet::Topic(cfg) => {
            labels.extend(cfg.classes().into_iter().map(str::to_string));
            if let Some(s1) = &cfg.stage_one {
                labels.extend(s1.classes().into_iter().map(str::to_string));
            }
            for (i, s) in out.sentences.iter_mut().enumerate() {
                let mut rng = seeds::rng(cfg.tie_seed, &[i as u64]);
                match annotate_topic(s, cfg, &mut rng) {
                    TopicVote::Class(c) => {
                        stats.labeled += 1;
                        s.weak_class = Some(c);
                    }
                    TopicVote::Abstain => {
                        stats.abstained += 1;
                        s.weak_class = None;
                    }
                }
            }
        }
    }
    if stats.labeled == 0 && stats.sentences > 0 {
        warn!(
            "rules produced no weak labels for {} sentences",
            stats.sentences
        );
    }
    out.label_set = labels.into_iter().collect();
    Ok((out, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bio::{is_valid_bio2, spans_from_tags, Span};
    use crate::corpus::{parse_conll, parse_topic_tsv};
    use crate::lexicon::{ClassDictionary, StageOneKeywords};
    use crate::text::Normalization;

    fn ner_rules() -> RuleSet {
        RuleSet::Ner(NerRules {
            gazetteers: vec![
                Gazetteer::from_entries("LOC", ["Kano", "Abuja"], 4, Normalization::CASED).0,
                Gazetteer::from_entries("PER", ["Muhammadu Buhari"], 4, Normalization::CASED).0,
            ],
            dates: Some(DateRuleConfig::preset("hausa").unwrap()),
            priority: LabelPriority::default(),
        })
    }

    #[test]
    fn ner_composition() {
        let d = parse_conll(
            "Muhammadu\tB-PER\nBuhari\tI-PER\nya\tO\nje\tO\nKano\tB-LOC\nranar\tB-DATE\n18\tI-DATE\n",
        )
        .unwrap();
        let (out, stats) = apply_rules(&d, &ner_rules()).unwrap();
        assert_eq!(stats.labeled, 1);
        let weak = out.sentences[0].weak_tags.as_ref().unwrap();
        assert!(is_valid_bio2(weak));
        assert_eq!(
            spans_from_tags(weak),
            vec![
                Span::new("PER", 0, 1),
                Span::new("LOC", 4, 4),
                Span::new("DATE", 5, 6)
            ]
        );
        assert_eq!(out.sentences[0].gold_tags, d.sentences[0].gold_tags);
        out.validate().unwrap();
    }

    #[test]
    fn task_mismatch() {
        let d = parse_topic_tsv("Sport\tkwallo\n").unwrap();
        assert!(matches!(
            apply_rules(&d, &ner_rules()),
            Err(Error::TaskMismatch { .. })
        ));
    }

    #[test]
    fn topic_all_abstain() {
        let d = parse_topic_tsv("Sport\tbabu\nHealth\tkomai\n").unwrap();
        let rules = RuleSet::Topic(
            TopicRuleConfig::new(vec![ClassDictionary::from_terms("Sport", ["kwallo"])]).unwrap(),
        );
        let (out, stats) = apply_rules(&d, &rules).unwrap();
        assert_eq!(stats.labeled, 0);
        assert_eq!(stats.abstained, 2);
        assert!(out.sentences.iter().all(|s| s.weak_class.is_none()));
    }

    #[test]
    fn topic_rerun_is_identical() {
        let text: String = (0..50)
            .map(|i| format!("Sport\tMusa da Amurka {i}\n"))
            .collect();
        let d = parse_topic_tsv(&text).unwrap();
        let mut cfg = TopicRuleConfig::new(vec![
            ClassDictionary::from_terms("Sport", ["musa"]),
            ClassDictionary::from_terms("World", ["amurka"]),
        ])
        .unwrap()
        .with_stage_one(StageOneKeywords::new([("cutar", "Health")]));
        cfg.tie_seed = 11;
        let rules = RuleSet::Topic(cfg);
        let (a, _) = apply_rules(&d, &rules).unwrap();
        let (b, _) = apply_rules(&d, &rules).unwrap();
        assert_eq!(a, b);
        let classes: BTreeSet<_> = a
            .sentences
            .iter()
            .map(|s| s.weak_class.clone().unwrap())
            .collect();
        assert_eq!(classes.len(), 2, "ties should not all resolve the same way");
        assert!(a.label_set.contains(&"Health".to_string()));
    }
}
