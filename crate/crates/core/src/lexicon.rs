//! Entity lists and per-class keyword dictionaries.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::text::{tokenize, Normalization};

/// An entity list for one entity type, stored as normalized token sequences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gazetteer {
    pub label: String,
    pub entries: BTreeSet<Vec<String>>,
    pub min_token_length: usize,
    pub normalization: Normalization,
    max_entry_tokens: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadStats {
    pub kept: usize,
    pub dropped: usize,
}

impl Gazetteer {
    /// Builds a gazetteer from raw entry strings. Entries with any token
    /// shorter than `min_token_length` characters are dropped.
    pub fn from_entries<I, S>(
        label: impl Into<String>,
        entries: I,
        min_token_length: usize,
        normalization: Normalization,
    ) -> (Gazetteer, LoadStats)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut kept = BTreeSet::new();
        let mut stats = LoadStats::default();
        for raw in entries {
            let tokens: Vec<String> = tokenize(raw.as_ref().trim())
                .iter()
                .map(|t| normalization.apply(t))
                .collect();
            if tokens.is_empty() {
                continue;
            }
            if tokens.iter().any(|t| t.chars().count() < min_token_length) {
                stats.dropped += 1;
                continue;
            }
            kept.insert(tokens);
        }
        stats.kept = kept.len();
        let max_entry_tokens = kept.iter().map(Vec::len).max().unwrap_or(0);
        let gazetteer = Gazetteer {
            label: label.into(),
            entries: kept,
            min_token_length,
            normalization,
            max_entry_tokens,
        };
        (gazetteer, stats)
    }

    /// Reads one entry per line; lines starting with `#` are comments.
    pub fn load(
        path: impl AsRef<Path>,
        label: impl Into<String>,
        min_token_length: usize,
        normalization: Normalization,
    ) -> Result<(Gazetteer, LoadStats)> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
        let (gazetteer, stats) = Self::from_entries(label, lines, min_token_length, normalization);
        if gazetteer.is_empty() {
            warn!("{}: gazetteer {} is empty", path.display(), gazetteer.label);
        }
        Ok((gazetteer, stats))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn max_entry_tokens(&self) -> usize {
        self.max_entry_tokens
    }

    pub fn contains(&self, normalized_tokens: &[String]) -> bool {
        self.entries.contains(normalized_tokens)
    }
}

/// Default minimum token lengths per (language, entity type).
pub fn default_min_token_length(language: &str, label: &str) -> usize {
    match (language.to_lowercase().as_str(), label) {
        ("yoruba" | "yor" | "yo", "ORG") => 2,
        ("yoruba" | "yor" | "yo", _) => 3,
        ("hausa" | "hau" | "ha", _) => 4,
        _ => 3,
    }
}

/// Lowercased 1- and 2-gram terms for one topic class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDictionary {
    pub class_label: String,
    pub terms: BTreeSet<String>,
}

impl ClassDictionary {
    /// Terms longer than two tokens are rejected with a warning.
    pub fn from_terms<I, S>(class_label: impl Into<String>, terms: I) -> ClassDictionary
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let class_label = class_label.into();
        let mut set = BTreeSet::new();
        for raw in terms {
            let raw = raw.as_ref();
            let tokens = normalized_terms(raw);
            match tokens.len() {
                0 => {}
                1 | 2 => {
                    set.insert(tokens.join(" "));
                }
                n => warn!("{class_label}: skipping {n}-token term {raw:?}"),
            }
        }
        ClassDictionary {
            class_label,
            terms: set,
        }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

fn normalized_terms(raw: &str) -> Vec<String> {
    tokenize(raw)
        .iter()
        .map(|t| Normalization::LOWER.apply(t))
        .collect()
}

/// First-stage keywords that decide a class outright, in priority order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StageOneKeywords {
    pairs: Vec<(String, String)>,
}

impl StageOneKeywords {
    pub fn new<K: AsRef<str>, C: Into<String>>(pairs: impl IntoIterator<Item = (K, C)>) -> Self {
        let mut out: Vec<(String, String)> = Vec::new();
        for (k, c) in pairs {
            let k = normalized_terms(k.as_ref()).join(" ");
            if !k.is_empty() && !out.iter().any(|(seen, _)| *seen == k) {
                out.push((k, c.into()));
            }
        }
        StageOneKeywords { pairs: out }
    }

    /// Parses "keyword<TAB>class" lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, c) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(i + 1, "expected keyword<TAB>class"))?;
            let (k, c) = (k.trim(), c.trim());
            if k.is_empty() || c.is_empty() {
                return Err(Error::parse(i + 1, "empty keyword or class"));
            }
            pairs.push((k.to_string(), c.to_string()));
        }
        Ok(Self::new(pairs))
    }

    pub fn pairs(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Class of the first keyword (in file order) found among `ngrams`.
    pub fn lookup(&self, ngrams: &BTreeSet<String>) -> Option<&str> {
        self.pairs
            .iter()
            .find(|(k, _)| ngrams.contains(k))
            .map(|(_, c)| c.as_str())
    }

    pub fn classes(&self) -> BTreeSet<&str> {
        self.pairs.iter().map(|(_, c)| c.as_str()).collect()
    }
}

/// Loads `<dir>/<class>.txt` for every class and an optional stage-one file.
pub fn load_class_dictionaries(
    dir: impl AsRef<Path>,
    classes: &[String],
    stage_one: Option<&Path>,
) -> Result<(Vec<ClassDictionary>, Option<StageOneKeywords>)> {
    let dir = dir.as_ref();
    let mut dictionaries = Vec::with_capacity(classes.len());
    for class in classes {
        let path = dir.join(format!("{class}.txt"));
        if !path.is_file() {
            return Err(Error::Config(format!(
                "no dictionary for class {class:?} (expected {})",
                path.display()
            )));
        }
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
        dictionaries.push(ClassDictionary::from_terms(class.clone(), lines));
    }
    let stage_one = match stage_one {
        None => None,
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let keywords = StageOneKeywords::parse(&text)?;
            if let Some(bad) = keywords
                .classes()
                .into_iter()
                .find(|c| !classes.iter().any(|k| k == c))
            {
                return Err(Error::UnknownLabel(bad.to_string()));
            }
            Some(keywords)
        }
    };
    Ok((dictionaries, stage_one))
}

/// Union of the 1- and 2-grams of a token sequence, lowercased.
pub fn headline_ngrams<S: AsRef<str>>(tokens: &[S]) -> BTreeSet<String> {
    let norm: Vec<String> = tokens
        .iter()
        .map(|t| Normalization::LOWER.apply(t.as_ref()))
        .collect();
    let mut grams: BTreeSet<String> = norm.iter().cloned().collect();
    grams.extend(norm.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    grams
}

/// Term counts per class, for reporting.
pub fn dictionary_sizes(dicts: &[ClassDictionary]) -> BTreeMap<&str, usize> {
    dicts
        .iter()
        .map(|d| (d.class_label.as_str(), d.len()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::io::Write;

    #[test]
    fn gazetteer_from_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "Kano\nNigeria\n# src: wikidata").unwrap();
        let (g, stats) = Gazetteer::load(f.path(), "LOC", 4, Normalization::CASED).unwrap();
        assert_eq!(g.len(), 2);
        assert_eq!(
            stats,
            LoadStats {
                kept: 2,
                dropped: 0
            }
        );
        assert!(g.contains(&["Kano".to_string()]));
    }

    #[test]
    fn length_filter() {
        let (g, stats) = Gazetteer::from_entries(
            "ORG",
            ["UN", "of", "United Nations", "Bank of Nigeria"],
            2,
            Normalization::CASED,
        );
        assert!(g.contains(&["UN".to_string()]));
        assert_eq!(stats.dropped, 0);
        let (g, stats) = Gazetteer::from_entries(
            "ORG",
            ["UN", "of", "United Nations", "Bank of Nigeria"],
            3,
            Normalization::CASED,
        );
        assert_eq!(g.len(), 1);
        assert_eq!(stats.dropped, 3);
        assert_eq!(g.max_entry_tokens(), 2);
    }

    #[test]
    fn default_lengths() {
        assert_eq!(default_min_token_length("yoruba", "LOC"), 3);
        assert_eq!(default_min_token_length("yoruba", "PER"), 3);
        assert_eq!(default_min_token_length("yoruba", "ORG"), 2);
        for l in ["LOC", "ORG", "PER"] {
            assert_eq!(default_min_token_length("hausa", l), 4);
        }
    }

    #[test]
    fn missing_gazetteer_file() {
        assert!(matches!(
            Gazetteer::load("/nonexistent/loc.txt", "LOC", 3, Normalization::CASED),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn class_dictionaries_from_dir() {
        let dir = tempfile::tempdir().unwrap();
        let names: String = (0..120)
            .map(|i| format!("Dan Wasa{i}\n"))
            .chain(["# comment\n".to_string(), "one two three\n".to_string()])
            .collect();
        fs::write(dir.path().join("Sport.txt"), names).unwrap();
        fs::write(dir.path().join("Health.txt"), "asibiti\nCutar Korona\n").unwrap();
        let stage = dir.path().join("stage_one.tsv");
        fs::write(&stage, "# stage one\ncutar\tHealth\n").unwrap();
        let classes = vec!["Health".to_string(), "Sport".to_string()];
        let (dicts, s1) = load_class_dictionaries(dir.path(), &classes, Some(&stage)).unwrap();
        assert_eq!(dicts[1].class_label, "Sport");
        assert_eq!(dicts[1].len(), 120);
        assert!(dicts[0].terms.contains("cutar korona"));
        let s1 = s1.unwrap();
        assert_eq!(s1.pairs(), &[("cutar".to_string(), "Health".to_string())]);

        let (empty, none) = load_class_dictionaries(dir.path(), &[], None).unwrap();
        assert!(empty.is_empty() && none.is_none());

        let err = load_class_dictionaries(dir.path(), &["Politics".to_string()], None).unwrap_err();
        assert!(err.to_string().contains("Politics"));

        fs::write(&stage, "inec\tPolitics\n").unwrap();
        assert!(load_class_dictionaries(dir.path(), &classes, Some(&stage)).is_err());
    }

    #[test]
    fn ngrams() {
        let g = headline_ngrams(&["Cutar", "Korona", "ta"]);
        let expected: BTreeSet<String> = ["cutar", "korona", "ta", "cutar korona", "korona ta"]
            .map(String::from)
            .into();
        assert_eq!(g, expected);
    }

    proptest! {
        #[test]
        fn loading_is_order_independent(
            mut lines in prop::collection::vec("[A-Za-zẹọ]{1,7}( [A-Za-z]{1,5})?", 0..30),
            min in 1usize..5,
            seed: u64,
        ) {
            let (a, _) = Gazetteer::from_entries("LOC", &lines, min, Normalization::CASED);
            use rand::{seq::SliceRandom, SeedableRng};
            lines.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let (b, _) = Gazetteer::from_entries("LOC", &lines, min, Normalization::CASED);
            prop_assert_eq!(&a, &b);
            for entry in &a.entries {
                for tok in entry {
                    prop_assert!(tok.chars().count() >= min);
                }
            }
        }
    }
}
