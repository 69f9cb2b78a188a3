use std::collections::BTreeMap;
use std::fs;
use std::io::BufRead;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::DatasetError;
use crate::verbalization::{
    parse_verbalization, serialize_verbalization, Resolution, ValidationMode, Verbalization,
};

/// KPI name → count.
pub type Kpis = BTreeMap<String, u64>;

/// One media asset with its behavior counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediaRecord {
    pub id: String,
    /// Creator or brand handle.
    pub account: String,
    #[serde(with = "timestamp")]
    pub timestamp: NaiveDateTime,
    pub caption: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    /// Text of the post carrying the media, when there is one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub resolution: Resolution,
    pub kpis: Kpis,
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        serialize_with = "ser_verbalization",
        deserialize_with = "de_verbalization"
    )]
    pub verbalization: Option<Verbalization>,
    /// Ties together media of one post. Records without one stand alone.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub media_group: Option<String>,
}

impl MediaRecord {
    pub fn kpi(&self, name: &str) -> Option<u64> {
        self.kpis.get(name).copied()
    }

    pub fn release_date(&self) -> NaiveDate {
        self.timestamp.date()
    }

    /// Key of the credit-sharing unit this record belongs to.
    pub fn group_key(&self) -> &str {
        self.media_group.as_deref().unwrap_or(&self.id)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if !self.resolution.is_positive() {
            return Err(DatasetError::InvalidRecord {
                id: self.id.clone(),
                reason: format!("non-positive resolution {}", self.resolution),
            });
        }
        Ok(())
    }
}

fn ser_verbalization<S: Serializer>(v: &Option<Verbalization>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => {
            let raw = serde_json::value::RawValue::from_string(serialize_verbalization(v))
                .map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        }
        None => s.serialize_none(),
    }
}

fn de_verbalization<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Verbalization>, D::Error> {
    let raw: Option<Box<serde_json::value::RawValue>> = Option::deserialize(d)?;
    raw.map(|r| {
        parse_verbalization(r.get(), ValidationMode::Strict)
            .map(|p| p.verbalization)
            .map_err(serde::de::Error::custom)
    })
    .transpose()
}

pub(crate) mod timestamp {
    use chrono::{NaiveDate, NaiveDateTime};
    use serde::{Deserialize, Deserializer, Serializer};

    const FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

    pub fn parse(s: &str) -> Option<NaiveDateTime> {
        let s = s.trim();
        NaiveDateTime::parse_from_str(s, FORMAT)
            .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
            .ok()
            .or_else(|| {
                NaiveDate::parse_from_str(s, "%Y-%m-%d")
                    .ok()
                    .and_then(|d| d.and_hms_opt(0, 0, 0))
            })
    }

    pub fn serialize<S: Serializer>(t: &NaiveDateTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.format(FORMAT).to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<NaiveDateTime, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).ok_or_else(|| serde::de::Error::custom(format!("bad timestamp `{s}`")))
    }
}

/// Reads newline-delimited JSON media records.
pub fn read_records_jsonl<R: BufRead>(reader: R) -> Result<Vec<MediaRecord>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MediaRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_records_jsonl(records: &[MediaRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Column names of a delimited media table.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnMapping {
    pub id: String,
    pub account: String,
    pub timestamp: String,
    pub caption: String,
    pub width: String,
    pub height: String,
    #[serde(default)]
    pub keywords: Option<String>,
    #[serde(default)]
    pub text: Option<String>,
    #[serde(default)]
    pub media_group: Option<String>,
    /// Column holding a verbalization record, if any.
    #[serde(default)]
    pub verbalization: Option<String>,
    /// KPI name → column.
    pub kpis: BTreeMap<String, String>,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
}

fn default_delimiter() -> char {
    ','
}

impl ColumnMapping {
    pub fn from_toml(text: &str) -> Result<Self, DatasetError> {
        toml::from_str(text).map_err(|e| DatasetError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        Self::from_toml(&fs::read_to_string(path)?)
    }
}

/// Reads a delimited table of media records. Keywords are a comma-separated
/// list inside their cell.
pub fn read_records_csv<R: std::io::Read>(
    reader: R,
    mapping: &ColumnMapping,
) -> Result<Vec<MediaRecord>, DatasetError> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(mapping.delimiter as u8)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize, DatasetError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DatasetError::Config(format!("column `{name}` not found")))
    };
    let opt_col = |name: &Option<String>| name.as_deref().map(&col).transpose();

    let id = col(&mapping.id)?;
    let account = col(&mapping.account)?;
    let ts = col(&mapping.timestamp)?;
    let caption = col(&mapping.caption)?;
    let width = col(&mapping.width)?;
    let height = col(&mapping.height)?;
    let keywords = opt_col(&mapping.keywords)?;
    let text = opt_col(&mapping.text)?;
    let group = opt_col(&mapping.media_group)?;
    let verb = opt_col(&mapping.verbalization)?;
    let kpi_cols = mapping
        .kpis
        .iter()
        .map(|(k, c)| Ok((k.clone(), col(c)?)))
        .collect::<Result<Vec<_>, DatasetError>>()?;

    let mut out = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let bad = |message: String| DatasetError::Parse { line, message };
        let field = |idx: usize| row.get(idx).unwrap_or("").to_string();
        let nonempty = |idx: Option<usize>| idx.map(&field).filter(|s| !s.is_empty());

        let timestamp = timestamp::parse(&field(ts))
            .ok_or_else(|| bad(format!("bad timestamp `{}`", field(ts))))?;
        let dim = |idx: usize| {
            field(idx)
                .trim()
                .parse::<u32>()
                .map_err(|e| bad(format!("bad dimension `{}`: {e}", field(idx))))
        };
        let mut kpis = Kpis::new();
        for (name, c) in &kpi_cols {
            let v = field(*c)
                .trim()
                .parse::<u64>()
                .map_err(|e| bad(format!("bad {name} `{}`: {e}", field(*c))))?;
            kpis.insert(name.clone(), v);
        }
        let verbalization = match nonempty(verb) {
            Some(t) => Some(
                parse_verbalization(&t, ValidationMode::Strict)
                    .map_err(|e| bad(e.to_string()))?
                    .verbalization,
            ),
            None => None,
        };
        let rec = MediaRecord {
            id: field(id),
            account: field(account),
            timestamp,
            caption: field(caption),
            keywords: nonempty(keywords)
                .map(|k| {
                    k.split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(String::from)
                        .collect()
                })
                .unwrap_or_default(),
            text: nonempty(text),
            resolution: Resolution::new(dim(width)?, dim(height)?),
            kpis,
            verbalization,
            media_group: nonempty(group),
        };
        rec.validate()?;
        out.push(rec);
    }
    Ok(out)
}
