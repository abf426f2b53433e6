use crate::bio::{tags_from_spans, Span, Tag};
use crate::corpus::Sentence;
use crate::lexicon::Gazetteer;

use super::merge::{merge_tag_layers, LabelPriority};

/// Left-to-right, longest-match-first scan against a single gazetteer.
/// Matched tokens are consumed, so spans never overlap.
pub fn match_gazetteer(sentence: &Sentence, gazetteer: &Gazetteer) -> Vec<Span> {
    let normalized: Vec<String> = sentence
        .surfaces()
        .map(|t| gazetteer.normalization.apply(t))
        .collect();
    let n = normalized.len();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        let longest = gazetteer.max_entry_tokens().min(n - i);
        let hit = (1..=longest)
            .rev()
            .find(|&len| gazetteer.contains(&normalized[i..i + len]));
        match hit {
            Some(len) => {
                spans.push(Span::new(gazetteer.label.clone(), i, i + len - 1));
                i += len;
            }
            None => i += 1,
        }
    }
    spans
}

/// Tags a sentence with every gazetteer, one layer each, then merges the
/// layers with the longer-span-wins policy.
pub fn annotate_ner_gazetteer(
    sentence: &Sentence,
    gazetteers: &[Gazetteer],
    priority: &LabelPriority,
) -> Vec<Tag> {
    let layers: Vec<Vec<Tag>> = gazetteers
        .iter()
        .map(|g| tags_from_spans(&match_gazetteer(sentence, g), sentence.len()))
        .collect();
    if layers.is_empty() {
        return vec![Tag::Outside; sentence.len()];
    }
    merge_tag_layers(&layers, priority).expect("layers share the sentence length")
}
