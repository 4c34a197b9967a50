//! Flesch reading ease and character-proportional reading time.

use std::collections::HashMap;
use std::sync::OnceLock;
use std::time::Duration;

use super::TextError;

const SYLLABLE_RULES: &str = include_str!("../../assets/syllable_rules.txt");

/// Default reading time per character, in microseconds (14.69 ms).
pub const DEFAULT_MICROS_PER_CHAR: u64 = 14_690;

const ABBREVIATIONS: &[&str] = &[
    "mr", "mrs", "ms", "dr", "prof", "sr", "jr", "st", "vs", "etc", "inc", "ltd", "co", "corp",
    "e.g", "i.e", "u.s", "approx", "dept", "no", "jan", "feb", "mar", "apr", "jun", "jul", "aug",
    "sep", "sept", "oct", "nov", "dec",
];

fn exceptions() -> &'static HashMap<String, usize> {
    static TABLE: OnceLock<HashMap<String, usize>> = OnceLock::new();
    TABLE.get_or_init(|| {
        SYLLABLE_RULES
            .lines()
            .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
            .filter_map(|l| {
                let (w, n) = l.split_once('\t')?;
                Some((w.trim().to_string(), n.trim().parse().ok()?))
            })
            .collect()
    })
}

fn is_vowel(c: char) -> bool {
    matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y')
}

/// Syllable count of a single word under the shipped rule table.
pub fn syllables(word: &str) -> usize {
    let w: String = word
        .chars()
        .filter(char::is_ascii_alphabetic)
        .map(|c| c.to_ascii_lowercase())
        .collect();
    if w.is_empty() {
        return 1;
    }
    if let Some(&n) = exceptions().get(&w) {
        return n;
    }
    let chars: Vec<char> = w.chars().collect();
    let mut count = 0;
    let mut prev_vowel = false;
    for &c in &chars {
        let v = is_vowel(c);
        if v && !prev_vowel {
            count += 1;
        }
        prev_vowel = v;
    }
    let n = chars.len();
    let before = |k: usize| if n > k { Some(chars[n - 1 - k]) } else { None };
    if count > 1 && w.ends_with('e') {
        let consonant_le = w.ends_with("le") && before(2).is_some_and(|c| !is_vowel(c));
        if !consonant_le {
            count -= 1;
        }
    }
    if count > 1 && w.ends_with("ed") && !matches!(before(2), Some('t' | 'd')) {
        count -= 1;
    }
    if count > 1
        && w.ends_with("es")
        && !matches!(before(2), Some('s' | 'x' | 'z' | 'c' | 'g'))
        && !w.ends_with("ches")
        && !w.ends_with("shes")
    {
        count -= 1;
    }
    count.max(1)
}

/// Whitespace-separated tokens stripped of surrounding punctuation; tokens
/// without any letter or digit are dropped.
pub fn words(text: &str) -> Vec<&str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
        .collect()
}

/// Number of sentences: segments ending in `.`, `!` or `?` followed by
/// whitespace or end of text, skipping known abbreviations. Trailing text
/// without terminal punctuation counts as a sentence.
pub fn sentence_count(text: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let mut count = 0;
    let mut segment_has_word = false;
    let mut token = String::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_alphanumeric() {
            segment_has_word = true;
        }
        if matches!(c, '.' | '!' | '?') {
            let mut j = i;
            while j + 1 < chars.len() && matches!(chars[j + 1], '.' | '!' | '?' | '"' | '\'' | ')' | ']') {
                j += 1;
            }
            let at_boundary = j + 1 == chars.len() || chars[j + 1].is_whitespace();
            let abbreviation = c == '.'
                && j == i
                && j + 1 < chars.len()
                && ABBREVIATIONS.contains(&token.to_lowercase().trim_start_matches(|c: char| !c.is_alphanumeric()));
            if at_boundary && !abbreviation {
                if segment_has_word {
                    count += 1;
                }
                segment_has_word = false;
                token.clear();
                i = j + 1;
                continue;
            }
        }
        if c.is_whitespace() {
            token.clear();
        } else {
            token.push(c);
        }
        i += 1;
    }
    if segment_has_word {
        count += 1;
    }
    count
}

/// Counts behind a reading-ease score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextCounts {
    pub sentences: usize,
    pub words: usize,
    pub syllables: usize,
}

pub fn text_counts(text: &str) -> TextCounts {
    let ws = words(text);
    TextCounts {
        sentences: sentence_count(text),
        words: ws.len(),
        syllables: ws.iter().map(|w| syllables(w)).sum(),
    }
}

/// Flesch reading ease: 206.835 - 1.015 (words/sentences) - 84.6 (syllables/words).
pub fn flesch_reading_ease(text: &str) -> Result<f64, TextError> {
    let c = text_counts(text);
    if c.words == 0 || c.sentences == 0 {
        return Err(TextError::Empty);
    }
    let w = c.words as f64;
    Ok(206.835 - 1.015 * (w / c.sentences as f64) - 84.6 * (c.syllables as f64 / w))
}

/// Reading time at [`DEFAULT_MICROS_PER_CHAR`] per Unicode scalar value.
pub fn reading_time(text: &str) -> Duration {
    reading_time_with(text, DEFAULT_MICROS_PER_CHAR)
}

/// Seconds as a correctly rounded `f64` (exact microseconds divided by 1e6).
pub fn seconds(d: Duration) -> f64 {
    d.as_micros() as f64 / 1e6
}

/// Reading time at a custom per-character cost. Integer microseconds keep
/// the measure exactly additive over concatenation.
pub fn reading_time_with(text: &str, micros_per_char: u64) -> Duration {
    Duration::from_micros(text.chars().count() as u64 * micros_per_char)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syllable_rules() {
        let cases = [
            ("the", 1), ("cat", 1), ("table", 2), ("make", 1), ("worked", 1), ("wanted", 2),
            ("led", 1), ("makes", 1), ("boxes", 2), ("matches", 2), ("places", 2), ("python", 2),
            ("analysis", 4), ("experience", 4), ("2020", 1), ("a", 1), ("rhythm", 1),
        ];
        for (w, n) in cases {
            assert_eq!(syllables(w), n, "{w}");
        }
    }

    #[test]
    fn sentences() {
        assert_eq!(sentence_count("The cat sat."), 1);
        assert_eq!(sentence_count("The cat sat. The cat sat."), 2);
        assert_eq!(sentence_count("Hi! Really? Yes."), 3);
        assert_eq!(sentence_count("Dr. Smith arrived. He left."), 2);
        assert_eq!(sentence_count("Version 2.5 shipped"), 1);
        assert_eq!(sentence_count("Use tools, e.g. SQL. Done."), 2);
        assert_eq!(sentence_count("Wait... what?!"), 2);
        assert_eq!(sentence_count(""), 0);
        assert_eq!(sentence_count(" ... "), 0);
    }

    #[test]
    fn cat_sat() {
        let c = text_counts("The cat sat.");
        assert_eq!(c, TextCounts { sentences: 1, words: 3, syllables: 3 });
        let s = flesch_reading_ease("The cat sat.").unwrap();
        assert!((s - 119.19).abs() < 1e-9, "{s}");
    }

    #[test]
    fn duplicated_sentences_same_score() {
        let a = flesch_reading_ease("The cat sat.").unwrap();
        let b = flesch_reading_ease("The cat sat. The cat sat.").unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn more_syllables_lower_score() {
        let a = flesch_reading_ease("The cat sat.").unwrap();
        let b = flesch_reading_ease("The elephant sat.").unwrap();
        assert!(b < a);
    }

    #[test]
    fn empty_text_errors() {
        assert_eq!(flesch_reading_ease(""), Err(TextError::Empty));
        assert_eq!(flesch_reading_ease("  !! "), Err(TextError::Empty));
    }

    #[test]
    fn reading_time_examples() {
        assert_eq!(reading_time(""), Duration::ZERO);
        let hundred = "x".repeat(100);
        assert_eq!(reading_time(&hundred), Duration::from_micros(1_469_000));
        assert_eq!(seconds(reading_time(&hundred)), 1.469);
        let (a, b) = ("héllo ", "wörld");
        assert_eq!(reading_time(&format!("{a}{b}")), reading_time(a) + reading_time(b));
    }
}
