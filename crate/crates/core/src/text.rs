//! Tokenization and string normalization.

use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

pub fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// Removes combining marks (tone marks, under-dots) and recomposes.
pub fn fold_diacritics(s: &str) -> String {
    s.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
}

fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c, '\u{2010}'..='\u{2027}' | '\u{2030}'..='\u{205E}')
        || matches!(c, '«' | '»' | '¡' | '¿' | '·' | '§' | '¶')
}

/// Splits on whitespace, then detaches each leading and trailing punctuation
/// character into a token of its own. Input is NFC-normalized first.
pub fn tokenize(raw: &str) -> Vec<String> {
    let normalized = nfc(raw);
    let mut out = Vec::new();
    for word in normalized.split_whitespace() {
        let chars: Vec<char> = word.chars().collect();
        let lead = chars.iter().take_while(|c| is_punctuation(**c)).count();
        if lead == chars.len() {
            out.extend(chars.iter().map(|c| c.to_string()));
            continue;
        }
        let trail = chars
            .iter()
            .rev()
            .take_while(|c| is_punctuation(**c))
            .count();
        out.extend(chars[..lead].iter().map(|c| c.to_string()));
        out.push(chars[lead..chars.len() - trail].iter().collect());
        out.extend(chars[chars.len() - trail..].iter().map(|c| c.to_string()));
    }
    out
}

/// Case and diacritic handling for string matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Normalization {
    pub lowercase: bool,
    pub fold_diacritics: bool,
}

impl Normalization {
    /// NFC, case preserved.
    pub const CASED: Normalization = Normalization {
        lowercase: false,
        fold_diacritics: false,
    };
    /// NFC + lowercase.
    pub const LOWER: Normalization = Normalization {
        lowercase: true,
        fold_diacritics: false,
    };

    pub fn apply(&self, s: &str) -> String {
        let mut out = if self.fold_diacritics {
            fold_diacritics(s)
        } else {
            nfc(s)
        };
        if self.lowercase {
            // Lowercasing can denormalize a handful of code points.
            out = nfc(&out.to_lowercase());
        }
        out
    }
}
