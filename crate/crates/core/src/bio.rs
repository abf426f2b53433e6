//! BIO2 tags and entity spans.
//!
//! Every entity starts with `B-X` and continues with `I-X`; `O` marks tokens
//! outside any entity. An `I-X` that does not continue an `X` span (an
//! "orphan") is read permissively as the start of a new span.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub const OUTSIDE: &str = "O";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tag {
    Outside,
    Begin(String),
    Inside(String),
}

impl Tag {
    pub fn begin(label: impl Into<String>) -> Self {
        Tag::Begin(label.into())
    }

    pub fn inside(label: impl Into<String>) -> Self {
        Tag::Inside(label.into())
    }

    /// Entity type, `None` for `O`.
    pub fn label(&self) -> Option<&str> {
        match self {
            Tag::Outside => None,
            Tag::Begin(l) | Tag::Inside(l) => Some(l),
        }
    }

    pub fn is_outside(&self) -> bool {
        matches!(self, Tag::Outside)
    }
}

impl FromStr for Tag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == OUTSIDE {
            return Ok(Tag::Outside);
        }
        let (prefix, label) = s
            .split_once('-')
            .ok_or_else(|| Error::InvalidTag(s.to_string()))?;
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(Error::InvalidTag(s.to_string()));
        }
        match prefix {
            "B" => Ok(Tag::Begin(label.to_string())),
            "I" => Ok(Tag::Inside(label.to_string())),
            _ => Err(Error::InvalidTag(s.to_string())),
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => f.write_str(OUTSIDE),
            Tag::Begin(l) => write!(f, "B-{l}"),
            Tag::Inside(l) => write!(f, "I-{l}"),
        }
    }
}

/// A typed entity span over token indices, `end` inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Span {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(label: impl Into<String>, start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span {
            label: label.into(),
            start,
            end,
        }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn overlaps(&self, other: &Span) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({},{})", self.label, self.start, self.end)
    }
}

/// Maximal same-type runs opened by `B-X` or an orphan `I-X`.
pub fn spans_from_tags(tags: &[Tag]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<Span> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::Outside => {
                spans.extend(open.take());
            }
            Tag::Begin(label) => {
                spans.extend(open.take());
                open = Some(Span::new(label.clone(), i, i));
            }
            Tag::Inside(label) => match open.as_mut() {
                Some(span) if &span.label == label => span.end = i,
                _ => {
                    spans.extend(open.take());
                    open = Some(Span::new(label.clone(), i, i));
                }
            },
        }
    }
    spans.extend(open);
    spans
}

/// Parses tag strings and extracts spans.
pub fn extract_spans<S: AsRef<str>>(tags: &[S]) -> Result<Vec<Span>> {
    let parsed = parse_tags(tags)?;
    Ok(spans_from_tags(&parsed))
}

pub fn parse_tags<S: AsRef<str>>(tags: &[S]) -> Result<Vec<Tag>> {
    tags.iter().map(|t| t.as_ref().parse()).collect()
}

/// Renders non-overlapping spans as a BIO2 sequence of length `len`.
///
/// Later spans overwrite earlier ones where they overlap.
pub fn tags_from_spans(spans: &[Span], len: usize) -> Vec<Tag> {
    let mut tags = vec![Tag::Outside; len];
    for span in spans {
        tags[span.start] = Tag::Begin(span.label.clone());
        for tag in &mut tags[span.start + 1..=span.end] {
            *tag = Tag::Inside(span.label.clone());
        }
    }
    tags
}

/// True when no `I-X` appears without a preceding `B-X`/`I-X` of the same type.
pub fn is_valid_bio2(tags: &[Tag]) -> bool {
    let mut prev: Option<&str> = None;
    for tag in tags {
        if let Tag::Inside(label) = tag {
            if prev != Some(label.as_str()) {
                return false;
            }
        }
        prev = tag.label();
    }
    true
}

/// Rewrites orphan `I-X` tags to `B-X`, leaving everything else untouched.
pub fn rehead(tags: &mut [Tag]) {
    let mut prev: Option<String> = None;
    for tag in tags.iter_mut() {
        if let Tag::Inside(label) = tag {
            if prev.as_deref() != Some(label.as_str()) {
                *tag = Tag::Begin(label.clone());
            }
        }
        prev = tag.label().map(str::to_string);
    }
}

/// Full tag inventory for a set of entity types: `O`, then `B-X`, `I-X` per type.
pub fn tag_inventory<S: AsRef<str>>(entity_types: &[S]) -> Vec<String> {
    let mut out = vec![OUTSIDE.to_string()];
    for t in entity_types {
        out.push(format!("B-{}", t.as_ref()));
        out.push(format!("I-{}", t.as_ref()));
    }
    out
}
