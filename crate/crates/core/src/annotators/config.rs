//! INI rule files.
//!
//! ```ini
//! language = hausa
//!
//! [date]
//! preset = hausa            ; optional base list, keys below override it
//! keywords = ranar watan shekarar
//! connectors = ga ,
//! max_gap = 2
//!
//! [gazetteer.LOC]
//! path = lists/loc.txt
//! min_token_length = 4
//!
//! [priority]
//! order = PER LOC ORG DATE
//!
//! [topic]
//! dict_dir = dictionaries
//! stage_one = stage_one.tsv
//! abstain_on_empty = true
//! ```
//!
//! Relative paths are resolved against the rule file's directory.

use std::path::{Path, PathBuf};

use ini::{Ini, Properties};

use super::{DateRuleConfig, LabelPriority, NerRules, RuleSet, TopicRuleConfig};
use crate::corpus::Task;
use crate::error::{Error, Result};
use crate::lexicon::{default_min_token_length, load_class_dictionaries, Gazetteer};
use crate::text::Normalization;

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected a boolean, got {v:?}"
        ))),
    }
}

fn get_bool(section: &Properties, key: &str, default: bool) -> Result<bool> {
    section.get(key).map_or(Ok(default), |v| parse_bool(key, v))
}

fn get_parsed<T: std::str::FromStr>(section: &Properties, key: &str) -> Result<Option<T>> {
    section
        .get(key)
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
        })
        .transpose()
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p.trim());
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads the rules for `task` from an INI file. `classes` names the topic
/// classes whose dictionaries are required when the file gives no
/// `classes` key of its own.
pub fn load_rules(path: impl AsRef<Path>, task: Task, classes: &[String]) -> Result<RuleSet> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_rules(&text, base, task, classes)
}

pub(crate) fn parse_rules(
    text: &str,
    base: &Path,
    task: Task,
    classes: &[String],
) -> Result<RuleSet> {
    let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    let language = ini
        .general_section()
        .get("language")
        .map(|s| s.trim().to_string());

    match task {
        Task::Ner => {
            let mut rules = NerRules::default();
            if let Some(date) = ini.section(Some("date")) {
                let preset = date
                    .get("preset")
                    .map(str::to_string)
                    .or_else(|| language.clone());
                let base_cfg = preset.as_deref().map(DateRuleConfig::preset).transpose()?;
                rules.dates = Some(DateRuleConfig::from_section(date, base_cfg.as_ref())?);
            }
            for (name, section) in ini.iter() {
                let Some(label) = name.and_then(|n| n.strip_prefix("gazetteer.")) else {
                    continue;
                };
                let file = section
                    .get("path")
                    .ok_or_else(|| Error::Config(format!("[gazetteer.{label}] needs path")))?;
                let min = get_parsed(section, "min_token_length")?.unwrap_or_else(|| {
                    default_min_token_length(language.as_deref().unwrap_or(""), label)
                });
                let normalization = Normalization {
                    lowercase: !get_bool(section, "case_sensitive", true)?,
                    fold_diacritics: get_bool(section, "fold_diacritics", false)?,
                };
                let (g, stats) = Gazetteer::load(resolve(base, file), label, min, normalization)?;
                log::info!(
                    "gazetteer {label}: kept {} entries, dropped {}",
                    stats.kept,
                    stats.dropped
                );
                rules.gazetteers.push(g);
            }
            if let Some(order) = ini.section(Some("priority")).and_then(|s| s.get("order")) {
                rules.priority = LabelPriority::new(order.split_whitespace())?;
            }
            Ok(RuleSet::Ner(rules))
        }
        Task::Topic => {
            let section = ini
                .section(Some("topic"))
                .ok_or_else(|| Error::Config("rule file has no [topic] section".into()))?;
            let dir = section
                .get("dict_dir")
                .ok_or_else(|| Error::Config("[topic] needs dict_dir".into()))?;
            let class_list: Vec<String> = match section.get("classes") {
                Some(v) => v.split_whitespace().map(str::to_string).collect(),
                None => classes.to_vec(),
            };
            let stage_one = section.get("stage_one").map(|p| resolve(base, p));
            let (dicts, stage_one) =
                load_class_dictionaries(resolve(base, dir), &class_list, stage_one.as_deref())?;
            let mut cfg = TopicRuleConfig::new(dicts)?;
            cfg.stage_one = stage_one;
            cfg.abstain_on_empty = get_bool(section, "abstain_on_empty", true)?;
            cfg.tie_seed = get_parsed(section, "tie_seed")?.unwrap_or(0);
            Ok(RuleSet::Topic(cfg))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn ner_rule_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("loc.txt"), "Kano\nKatsina\nAbuja\nYa\n").unwrap();
        fs::write(dir.path().join("per.txt"), "Muhammadu Buhari\n").unwrap();
        let ini = "language = hausa\n\n[date]\nmax_gap = 1\n\n[gazetteer.LOC]\npath = loc.txt\n\n\
                   [gazetteer.PER]\npath = per.txt\ncase_sensitive = false\n\n[priority]\norder = LOC PER ORG DATE\n";
        fs::write(dir.path().join("rules.ini"), ini).unwrap();
        let RuleSet::Ner(rules) = load_rules(dir.path().join("rules.ini"), Task::Ner, &[]).unwrap()
        else {
            panic!()
        };
        let dates = rules.dates.as_ref().unwrap();
        assert_eq!(dates.max_gap, 1);
        assert!(dates.keywords.contains("ranar"));
        assert_eq!(rules.gazetteers.len(), 2);
        let loc = rules.gazetteers.iter().find(|g| g.label == "LOC").unwrap();
        assert_eq!(loc.min_token_length, 4);
        assert_eq!(loc.len(), 3);
        let per = rules.gazetteers.iter().find(|g| g.label == "PER").unwrap();
        assert!(per.normalization.lowercase);
        assert_eq!(rules.priority.rank("LOC"), 0);
    }

    #[test]
    fn topic_rule_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("dicts")).unwrap();
        fs::write(dir.path().join("dicts/Health.txt"), "asibiti\n").unwrap();
        fs::write(dir.path().join("dicts/Politics.txt"), "zabe\n").unwrap();
        fs::write(dir.path().join("s1.tsv"), "cutar\tHealth\ninec\tPolitics\n").unwrap();
        fs::write(
            dir.path().join("rules.ini"),
            "[topic]\ndict_dir = dicts\nstage_one = s1.tsv\nabstain_on_empty = no\ntie_seed = 5\n",
        )
        .unwrap();
        let classes = vec!["Health".to_string(), "Politics".to_string()];
        let RuleSet::Topic(cfg) =
            load_rules(dir.path().join("rules.ini"), Task::Topic, &classes).unwrap()
        else {
            panic!()
        };
        assert_eq!(cfg.dictionaries.len(), 2);
        assert_eq!(cfg.stage_one.as_ref().unwrap().pairs().len(), 2);
        assert!(!cfg.abstain_on_empty);
        assert_eq!(cfg.tie_seed, 5);
    }

    #[test]
    fn config_errors() {
        let base = Path::new(".");
        assert!(parse_rules(
            "[gazetteer.LOC]\nmin_token_length = 3\n",
            base,
            Task::Ner,
            &[]
        )
        .is_err());
        assert!(parse_rules("[date]\nmax_gap = many\n", base, Task::Ner, &[]).is_err());
        assert!(parse_rules("[date]\npreset = hausa\n", base, Task::Topic, &[]).is_err());
        assert!(parse_rules(
            "[topic]\ndict_dir = /nonexistent\n",
            base,
            Task::Topic,
            &["A".into()]
        )
        .is_err());
        assert!(parse_rules("[priority]\norder = PER PER\n", base, Task::Ner, &[]).is_err());
    }
}
