//! Keyword-triggered DATE rules.
//!
//! A date keyword ("ranar", "watan", "shekarar"; "ọjọ́", "oṣù", "ọdún") opens a
//! span. The span grows over directly following digits and month names, and
//! across runs of at most `max_gap` connector or conjunction tokens when the
//! run is followed by another digit, month name or keyword. Digits without a
//! keyword in reach stay `O`.

use std::collections::BTreeSet;

use crate::bio::{tags_from_spans, Span, Tag};
use crate::corpus::Sentence;
use crate::error::{Error, Result};
use crate::text::Normalization;

pub const DATE: &str = "DATE";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DateRuleConfig {
    pub keywords: BTreeSet<String>,
    pub month_names: BTreeSet<String>,
    pub connectors: BTreeSet<String>,
    pub conjunctions: BTreeSet<String>,
    pub max_gap: usize,
}

const HAUSA_RULES: &str = include_str!("../../rules/hausa.ini");
const YORUBA_RULES: &str = include_str!("../../rules/yoruba.ini");

fn norm_set<S: AsRef<str>>(items: impl IntoIterator<Item = S>) -> BTreeSet<String> {
    items
        .into_iter()
        .map(|s| Normalization::LOWER.apply(s.as_ref().trim()))
        .filter(|s| !s.is_empty())
        .collect()
}

impl DateRuleConfig {
    pub fn new<S: AsRef<str>>(
        keywords: impl IntoIterator<Item = S>,
        month_names: impl IntoIterator<Item = S>,
        connectors: impl IntoIterator<Item = S>,
        conjunctions: impl IntoIterator<Item = S>,
        max_gap: usize,
    ) -> Result<Self> {
        let cfg = DateRuleConfig {
            keywords: norm_set(keywords),
            month_names: norm_set(month_names),
            connectors: norm_set(connectors),
            conjunctions: norm_set(conjunctions),
            max_gap,
        };
        if cfg.keywords.is_empty() {
            return Err(Error::Config("date rules need at least one keyword".into()));
        }
        Ok(cfg)
    }

    /// Shipped defaults for a language ("hausa" or "yoruba").
    pub fn preset(language: &str) -> Result<Self> {
        let text = match language.to_lowercase().as_str() {
            "hausa" | "hau" | "ha" => HAUSA_RULES,
            "yoruba" | "yor" | "yo" => YORUBA_RULES,
            other => return Err(Error::Config(format!("no date preset for {other:?}"))),
        };
        let ini = ini::Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let section = ini
            .section(Some("date"))
            .ok_or_else(|| Error::Config("preset lacks [date]".into()))?;
        Self::from_section(section, None)
    }

    /// Reads keys from an INI `[date]` section, falling back to `base` (or
    /// empty sets) for missing keys.
    pub fn from_section(section: &ini::Properties, base: Option<&DateRuleConfig>) -> Result<Self> {
        let list = |key: &str, fallback: Option<&BTreeSet<String>>| -> BTreeSet<String> {
            match section.get(key) {
                Some(v) => norm_set(v.split_whitespace()),
                None => fallback.cloned().unwrap_or_default(),
            }
        };
        let max_gap = match section.get("max_gap") {
            Some(v) => v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("max_gap: not a count: {v:?}")))?,
            None => base.map_or(2, |b| b.max_gap),
        };
        let cfg = DateRuleConfig {
            keywords: list("keywords", base.map(|b| &b.keywords)),
            month_names: list("month_names", base.map(|b| &b.month_names)),
            connectors: list("connectors", base.map(|b| &b.connectors)),
            conjunctions: list("conjunctions", base.map(|b| &b.conjunctions)),
            max_gap,
        };
        if cfg.keywords.is_empty() {
            return Err(Error::Config("date rules need at least one keyword".into()));
        }
        Ok(cfg)
    }
}

pub(crate) fn is_digit_token(token: &str) -> bool {
    let mut chars = token.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_digit())
        && token
            .chars()
            .all(|c| c.is_ascii_digit() || matches!(c, '/' | '-' | '.' | ':'))
        && token.chars().last().is_some_and(|c| c.is_ascii_digit())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Keyword,
    Digit,
    Month,
    Bridge,
    Other,
}

/// DATE spans found by the keyword rules.
pub fn date_spans(sentence: &Sentence, cfg: &DateRuleConfig) -> Vec<Span> {
    let kinds: Vec<Kind> = sentence
        .surfaces()
        .map(|t| {
            let n = Normalization::LOWER.apply(t);
            if cfg.keywords.contains(&n) {
                Kind::Keyword
            } else if is_digit_token(&n) {
                Kind::Digit
            } else if cfg.month_names.contains(&n) {
                Kind::Month
            } else if cfg.connectors.contains(&n) || cfg.conjunctions.contains(&n) {
                Kind::Bridge
            } else {
                Kind::Other
            }
        })
        .collect();

    let n = kinds.len();
    let mut spans = Vec::new();
    let mut i = 0;
    while i < n {
        if kinds[i] != Kind::Keyword {
            i += 1;
            continue;
        }
        let start = i;
        let mut end = i;
        loop {
            // Skip up to max_gap bridging tokens, then require a date token.
            let mut j = end + 1;
            while j < n && kinds[j] == Kind::Bridge && j - end - 1 < cfg.max_gap {
                j += 1;
            }
            if j < n && matches!(kinds[j], Kind::Keyword | Kind::Digit | Kind::Month) {
                end = j;
            } else {
                break;
            }
        }
        spans.push(Span::new(DATE, start, end));
        i = end + 1;
    }
    spans
}

pub fn annotate_ner_dates(sentence: &Sentence, cfg: &DateRuleConfig) -> Vec<Tag> {
    tags_from_spans(&date_spans(sentence, cfg), sentence.len())
}
