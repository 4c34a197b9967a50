//! Proxy measures over generated summaries: reading ease, reading time,
//! polarity, subjectivity and regard.

pub mod readability;
pub mod regard;
pub mod sentiment;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DemographicGroup;

pub use readability::{flesch_reading_ease, reading_time, reading_time_with, DEFAULT_MICROS_PER_CHAR};
pub use regard::{RegardCategory, RegardScores};
pub use sentiment::{polarity, sentiment, subjectivity};

pub const MEASURE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("text has no words or no sentences")]
    Empty,
    #[error("regard scores sum to {0}, not 1")]
    RegardNotNormalized(f64),
    #[error("regard score outside [0, 1]")]
    RegardOutOfRange,
    #[error("unknown level {0:?}")]
    UnknownLevel(String),
    #[error("measure file: {0}")]
    Io(String),
    #[error("unsupported measure schema version {0}")]
    UnsupportedSchema(u32),
}

/// Narrative point of view requested from the summarizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pov {
    First,
    Third,
}

impl Pov {
    pub const ALL: [Pov; 2] = [Pov::First, Pov::Third];

    pub fn as_str(self) -> &'static str {
        match self {
            Pov::First => "first",
            Pov::Third => "third",
        }
    }
}

impl fmt::Display for Pov {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Pov {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(Pov::First),
            "third" => Ok(Pov::Third),
            _ => Err(TextError::UnknownLevel(s.to_string())),
        }
    }
}

/// One generated summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub resume_id: String,
    pub variant_id: String,
    #[serde(default)]
    pub group: Option<DemographicGroup>,
    pub model_name: String,
    pub length_setting: u32,
    pub pov: Pov,
    pub temperature: f64,
    pub run_index: u32,
    pub text: String,
}

/// The five measures of one summary. `reading_ease` is absent for text
/// without words; `regard` is absent when no classifier is configured or
/// the classifier failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureVector {
    pub reading_ease: Option<f64>,
    pub reading_time: f64,
    pub polarity: f64,
    pub subjectivity: f64,
    pub regard: Option<RegardScores>,
}

/// Computes the four local measures and attaches a regard result.
pub fn measure(text: &str, micros_per_char: u64, regard: Option<RegardScores>) -> MeasureVector {
    let (polarity, subjectivity) = sentiment(text);
    MeasureVector {
        reading_ease: flesch_reading_ease(text).ok(),
        reading_time: readability::seconds(reading_time_with(text, micros_per_char)),
        polarity,
        subjectivity,
        regard,
    }
}

/// Measures that enter the paired t-tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    ReadingEase,
    ReadingTime,
    Polarity,
    Subjectivity,
    Regard,
}

impl Measure {
    pub const ALL: [Measure; 5] = [
        Measure::ReadingEase,
        Measure::ReadingTime,
        Measure::Polarity,
        Measure::Subjectivity,
        Measure::Regard,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::ReadingEase => "reading_ease",
            Measure::ReadingTime => "reading_time",
            Measure::Polarity => "polarity",
            Measure::Subjectivity => "subjectivity",
            Measure::Regard => "regard",
        }
    }

    pub fn value(self, v: &MeasureVector, regard: RegardCategory) -> Option<f64> {
        match self {
            Measure::ReadingEase => v.reading_ease,
            Measure::ReadingTime => Some(v.reading_time),
            Measure::Polarity => Some(v.polarity),
            Measure::Subjectivity => Some(v.subjectivity),
            Measure::Regard => v.regard.map(|r| r.get(regard)),
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Measure::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| TextError::UnknownLevel(s.to_string()))
    }
}

/// A summary with its measures, as stored in the measure file.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredSummary {
    pub record: SummaryRecord,
    pub measures: MeasureVector,
}

#[derive(Debug, Serialize, Deserialize)]
struct MeasureRow {
    schema_version: u32,
    resume_id: String,
    variant_id: String,
    group: Option<DemographicGroup>,
    model_name: String,
    length_setting: u32,
    pov: Pov,
    temperature: f64,
    run_index: u32,
    reading_ease: Option<f64>,
    reading_time: f64,
    polarity: f64,
    subjectivity: f64,
    regard_positive: Option<f64>,
    regard_negative: Option<f64>,
    regard_neutral: Option<f64>,
    regard_other: Option<f64>,
}

fn io_err(e: impl fmt::Display) -> TextError {
    TextError::Io(e.to_string())
}

/// Writes the measure CSV. Summary text is not included.
pub fn write_measures<W: Write>(w: W, rows: &[MeasuredSummary]) -> Result<(), TextError> {
    let mut out = csv::Writer::from_writer(w);
    for m in rows {
        let r = &m.record;
        let g = m.measures.regard;
        out.serialize(MeasureRow {
            schema_version: MEASURE_SCHEMA_VERSION,
            resume_id: r.resume_id.clone(),
            variant_id: r.variant_id.clone(),
            group: r.group,
            model_name: r.model_name.clone(),
            length_setting: r.length_setting,
            pov: r.pov,
            temperature: r.temperature,
            run_index: r.run_index,
            reading_ease: m.measures.reading_ease,
            reading_time: m.measures.reading_time,
            polarity: m.measures.polarity,
            subjectivity: m.measures.subjectivity,
            regard_positive: g.map(|g| g.positive),
            regard_negative: g.map(|g| g.negative),
            regard_neutral: g.map(|g| g.neutral),
            regard_other: g.map(|g| g.other),
        })
        .map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

/// Reads a measure CSV written by [`write_measures`]; `text` is left empty.
pub fn read_measures<R: Read>(r: R) -> Result<Vec<MeasuredSummary>, TextError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rdr.deserialize::<MeasureRow>() {
        let row = row.map_err(io_err)?;
        if row.schema_version != MEASURE_SCHEMA_VERSION {
            return Err(TextError::UnsupportedSchema(row.schema_version));
        }
        let regard = match (row.regard_positive, row.regard_negative, row.regard_neutral, row.regard_other) {
            (Some(positive), Some(negative), Some(neutral), Some(other)) => {
                Some(RegardScores { positive, negative, neutral, other })
            }
            _ => None,
        };
        out.push(MeasuredSummary {
            record: SummaryRecord {
                resume_id: row.resume_id,
                variant_id: row.variant_id,
                group: row.group,
                model_name: row.model_name,
                length_setting: row.length_setting,
                pov: row.pov,
                temperature: row.temperature,
                run_index: row.run_index,
                text: String::new(),
            },
            measures: MeasureVector {
                reading_ease: row.reading_ease,
                reading_time: row.reading_time,
                polarity: row.polarity,
                subjectivity: row.subjectivity,
                regard,
            },
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measure_vector_ranges() {
        let v = measure("The team was very good. Results were excellent!", DEFAULT_MICROS_PER_CHAR, None);
        assert!(v.reading_ease.is_some());
        assert!((-1.0..=1.0).contains(&v.polarity));
        assert!((0.0..=1.0).contains(&v.subjectivity));
        assert!(v.regard.is_none());
        let empty = measure("", DEFAULT_MICROS_PER_CHAR, None);
        assert_eq!(empty.reading_ease, None);
        assert_eq!(empty.reading_time, 0.0);
    }

    #[test]
    fn measure_file_round_trip() {
        let rec = SummaryRecord {
            resume_id: "r1".into(),
            variant_id: "r1/assign_mw".into(),
            group: Some(DemographicGroup::MW),
            model_name: "mock".into(),
            length_setting: 100,
            pov: Pov::Third,
            temperature: 0.3,
            run_index: 2,
            text: String::new(),
        };
        let rows = vec![
            MeasuredSummary { record: rec.clone(), measures: measure("Good work.", 14_690, None) },
            MeasuredSummary {
                record: SummaryRecord { run_index: 3, ..rec },
                measures: measure(
                    "",
                    14_690,
                    Some(RegardScores { positive: 0.25, negative: 0.25, neutral: 0.5, other: 0.0 }),
                ),
            },
        ];
        let mut buf = Vec::new();
        write_measures(&mut buf, &rows).unwrap();
        let back = read_measures(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let header = String::from_utf8(buf).unwrap();
        assert!(header.starts_with("schema_version,resume_id,variant_id,group,model_name,"));
    }

    #[test]
    fn level_parsing() {
        assert_eq!("first".parse::<Pov>().unwrap(), Pov::First);
        assert!("second".parse::<Pov>().is_err());
        for m in Measure::ALL {
            assert_eq!(m.as_str().parse::<Measure>().unwrap(), m);
        }
    }
}
