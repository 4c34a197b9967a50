//! Lexicon-based polarity and subjectivity.
//!
//! Scoring follows the pattern/TextBlob assessment procedure over the
//! shipped word lexicon:
//!
//! * each lexicon word opens an assessment with its polarity, subjectivity
//!   and intensity;
//! * a modifier (a word with an adverb sense) multiplies the next lexicon
//!   word's scores by its intensity and the pair forms one assessment;
//! * a preceding negation (`no`, `not`, `n't`, `never`) inverts the
//!   intensity and multiplies the final polarity by -0.5;
//! * `!` multiplies the previous assessment's polarity by 1.25;
//! * an unknown word longer than one character clears a pending negation,
//!   and one longer than two characters clears a pending modifier.
//!
//! The text score is the mean over assessments, or 0 when there are none.
//! Apostrophes are split into separate tokens before scoring, so contracted
//! negations such as "isn't" do not negate. Emoticons are not scored.

use std::collections::HashMap;
use std::sync::OnceLock;

const LEXICON: &str = include_str!("../../assets/sentiment_lexicon.tsv");

const NEGATIONS: &[&str] = &["no", "not", "n't", "never"];
const PUNCTUATION: &str = ".,;:!?()[]{}`'\"@#$^&*+-|=~_";
const CONTRACTIONS: &[&str] = &["'d", "'m", "'s", "'ll", "'re", "'ve", "n't"];
const PARAGRAPH_BREAK: &str = "<paragraph>";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LexiconEntry {
    pub polarity: f64,
    pub subjectivity: f64,
    pub intensity: f64,
    pub modifier: bool,
}

/// The bundled word lexicon.
pub fn lexicon() -> &'static HashMap<String, LexiconEntry> {
    static TABLE: OnceLock<HashMap<String, LexiconEntry>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut map = HashMap::new();
        for line in LEXICON.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let f: Vec<&str> = line.split('\t').collect();
            let num = |i: usize| f[i].parse::<f64>().expect("bundled lexicon is well-formed");
            map.insert(
                f[0].to_string(),
                LexiconEntry {
                    polarity: num(1),
                    subjectivity: num(2),
                    intensity: num(3),
                    modifier: f[4] == "1",
                },
            );
        }
        map
    })
}

/// Lower-cased tokens with punctuation split off, contractions detached and
/// apostrophes isolated.
pub fn tokenize(text: &str) -> Vec<String> {
    let is_punct = |c: char| PUNCTUATION.contains(c);
    let mut normalized = text.replace("\r\n", "\n");
    for c in CONTRACTIONS {
        normalized = normalized.replace(c, &format!(" {c}"));
    }
    let mut out = Vec::new();
    for (i, paragraph) in split_paragraphs(&normalized).into_iter().enumerate() {
        if i > 0 {
            out.push(PARAGRAPH_BREAK.to_string());
        }
        let spaced: String = paragraph
            .chars()
            .flat_map(|c| match c {
                '\'' | '"' | '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}' => vec![' ', c, ' '],
                _ => vec![c],
            })
            .collect();
        for chunk in spaced.split_whitespace() {
            let mut t = chunk;
            while let Some(c) = t.chars().next().filter(|&c| is_punct(c) && t.len() > c.len_utf8()) {
                out.push(c.to_string());
                t = &t[c.len_utf8()..];
            }
            let mut tail = Vec::new();
            while let Some(c) = t.chars().last().filter(|&c| is_punct(c) && t.len() > c.len_utf8()) {
                tail.push(c.to_string());
                t = &t[..t.len() - c.len_utf8()];
            }
            out.push(t.to_lowercase());
            out.extend(tail.into_iter().rev());
        }
    }
    out
}

fn split_paragraphs(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'\n' && bytes.get(i + 1) == Some(&b'\n') {
            parts.push(&text[start..i]);
            while i < bytes.len() && bytes[i] == b'\n' {
                i += 1;
            }
            start = i;
        } else {
            i += 1;
        }
    }
    parts.push(&text[start..]);
    parts
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub words: Vec<String>,
    pub polarity: f64,
    pub subjectivity: f64,
}

struct Open {
    words: Vec<String>,
    p: f64,
    s: f64,
    i: f64,
    negated: bool,
}

/// Per-chunk assessments of a text.
pub fn assessments(text: &str) -> Vec<Assessment> {
    let lex = lexicon();
    let mut a: Vec<Open> = Vec::new();
    let mut m: Option<String> = None;
    let mut n: Option<String> = None;
    for w in tokenize(text) {
        if let Some(e) = lex.get(&w) {
            if m.is_none() {
                a.push(Open { words: vec![w.clone()], p: e.polarity, s: e.subjectivity, i: e.intensity, negated: false });
            } else if let Some(last) = a.last_mut() {
                last.words.push(w.clone());
                last.p = (e.polarity * last.i).clamp(-1.0, 1.0);
                last.s = (e.subjectivity * last.i).clamp(-1.0, 1.0);
                last.i = e.intensity;
            }
            if let (Some(neg), Some(last)) = (n.take(), a.last_mut()) {
                last.words.insert(0, neg);
                last.i = 1.0 / last.i;
                last.negated = true;
            }
            m = e.modifier.then(|| w.clone());
            if NEGATIONS.contains(&w.as_str()) {
                n = Some(w);
            }
        } else {
            if NEGATIONS.contains(&w.as_str()) {
                n = Some(w.clone());
            } else if n.is_some() && w.trim_matches('\'').chars().count() > 1 {
                n = None;
            }
            let modifier_negated = n.is_some() && m.as_deref().is_some_and(|m| m.ends_with("ly"));
            if modifier_negated {
                if let (Some(neg), Some(last)) = (n.take(), a.last_mut()) {
                    last.words.push(neg);
                    last.negated = true;
                }
            } else if m.is_some() && w.chars().count() > 2 {
                m = None;
            }
            if w == "!" {
                if let Some(last) = a.last_mut() {
                    last.words.push(w);
                    last.p = (last.p * 1.25).clamp(-1.0, 1.0);
                }
            }
        }
    }
    a.into_iter()
        .map(|o| Assessment {
            words: o.words,
            polarity: if o.negated { o.p * -0.5 } else { o.p },
            subjectivity: o.s,
        })
        .collect()
}

/// Mean polarity and subjectivity over assessments; `(0, 0)` without matches.
pub fn sentiment(text: &str) -> (f64, f64) {
    let a = assessments(text);
    if a.is_empty() {
        return (0.0, 0.0);
    }
    let k = a.len() as f64;
    (
        a.iter().map(|x| x.polarity).sum::<f64>() / k,
        a.iter().map(|x| x.subjectivity).sum::<f64>() / k,
    )
}

pub fn polarity(text: &str) -> f64 {
    sentiment(text).0
}

pub fn subjectivity(text: &str) -> f64 {
    sentiment(text).1
}
