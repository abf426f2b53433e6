use crate::bio::{spans_from_tags, Span, Tag};
use crate::error::{Error, Result};

/// Entity-type order used to break ties between equally long spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelPriority(Vec<String>);

impl LabelPriority {
    pub fn new<S: Into<String>>(order: impl IntoIterator<Item = S>) -> Result<Self> {
        let order: Vec<String> = order.into_iter().map(Into::into).collect();
        for (i, l) in order.iter().enumerate() {
            if order[..i].contains(l) {
                return Err(Error::Config(format!("label {l:?} repeated in priority")));
            }
        }
        Ok(LabelPriority(order))
    }

    /// Position in the order; unlisted types rank after all listed ones.
    pub fn rank(&self, label: &str) -> usize {
        self.0
            .iter()
            .position(|l| l == label)
            .unwrap_or(self.0.len())
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }
}

impl Default for LabelPriority {
    fn default() -> Self {
        LabelPriority(["PER", "LOC", "ORG", "DATE"].map(String::from).to_vec())
    }
}

/// Resolves overlapping annotations from several tag layers.
///
/// Each token goes to the longest span covering it, equal lengths going to
/// the higher-priority type and then the earlier layer. A span that loses
/// only part of its tokens keeps the rest, re-headed with `B-`.
pub fn merge_tag_layers(layers: &[Vec<Tag>], priority: &LabelPriority) -> Result<Vec<Tag>> {
    let Some(first) = layers.first() else {
        return Ok(Vec::new());
    };
    let len = first.len();
    if let Some(bad) = layers.iter().find(|l| l.len() != len) {
        return Err(Error::LengthMismatch(format!(
            "tag layers of length {len} and {}",
            bad.len()
        )));
    }

    let candidates: Vec<(usize, Span)> = layers
        .iter()
        .enumerate()
        .flat_map(|(layer, tags)| spans_from_tags(tags).into_iter().map(move |s| (layer, s)))
        .collect();

    // Winning candidate index per token.
    let mut owner: Vec<Option<usize>> = vec![None; len];
    for (pos, slot) in owner.iter_mut().enumerate() {
        *slot = candidates
            .iter()
            .enumerate()
            .filter(|(_, (_, s))| s.start <= pos && pos <= s.end)
            .min_by_key(|(_, (layer, s))| {
                (std::cmp::Reverse(s.len()), priority.rank(&s.label), *layer)
            })
            .map(|(i, _)| i);
    }

    let mut out = Vec::with_capacity(len);
    for pos in 0..len {
        out.push(match owner[pos] {
            None => Tag::Outside,
            Some(c) => {
                let label = candidates[c].1.label.clone();
                if pos > 0 && owner[pos - 1] == Some(c) {
                    Tag::Inside(label)
                } else {
                    Tag::Begin(label)
                }
            }
        });
    }
    Ok(out)
}
