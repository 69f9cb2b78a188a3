//! Text form of a verbalization record.
//!
//! The layout is the JSON object emitted by the instruction model:
//!
//! ```text
//! {"color and tones": {"colors": {"Gray": {"coverage": 0.4}}, "tones": {"warm": 0, "neutral": 1.0, "cool": 0}}, "objects": {"jeans": [2076.67, 2542.5, 3023.88, 3827.01]}}
//! ```
//!
//! Object labels are map keys, so a label may legitimately repeat with a
//! different box. The parser keeps duplicates and insertion order, which a
//! generic JSON map would not.

use std::fmt::{self, Write as _};
use std::marker::PhantomData;

use serde::de::{self, Deserializer, IgnoredAny, MapAccess, Visitor};
use serde::Deserialize;

use super::{
    BBox, ColorEntry, ColorName, ObjectEntry, Repair, Resolution, Tone, ToneMix, ValidationMode,
    Verbalization, VerbalizationError,
};

/// Result of a successful parse.
#[derive(Clone, Debug, PartialEq)]
pub struct Parsed {
    pub verbalization: Verbalization,
    /// Empty in strict mode.
    pub repairs: Vec<Repair>,
}

/// A record as stored in a corpus line: the verbalization plus optional
/// identification and ground-truth KPI fields (`"exact downloads": 4`).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VerbalizationRecord {
    pub id: Option<String>,
    pub resolution: Option<Resolution>,
    pub verbalization: Option<Verbalization>,
    /// `(kpi name, value)` pairs, from keys of the form `"exact <kpi>"`.
    pub exact_kpis: Vec<(String, u64)>,
}

/// Renders a number the way the record format expects: `0` for zero,
/// otherwise the shortest representation that round-trips, always with a
/// fractional part or exponent (`1.0`, `0.4`, `2542.5`).
pub fn format_number(x: f64) -> String {
    if x == 0.0 {
        "0".to_string()
    } else {
        format!("{x:?}")
    }
}

pub fn parse_verbalization(text: &str, mode: ValidationMode) -> Result<Parsed, VerbalizationError> {
    parse_verbalization_with(text, mode, None)
}

/// Like [`parse_verbalization`], additionally bounding boxes by `resolution`.
pub fn parse_verbalization_with(
    text: &str,
    mode: ValidationMode,
    resolution: Option<Resolution>,
) -> Result<Parsed, VerbalizationError> {
    let raw = parse_raw(text)?;
    match build(raw.color_and_tones, raw.objects, mode, resolution)? {
        Some((verbalization, repairs)) => Ok(Parsed {
            verbalization,
            repairs,
        }),
        None => Err(VerbalizationError::MissingTones),
    }
}

/// Parses a full corpus record. Boxes are checked against the record's own
/// `resolution` when it carries one.
pub fn parse_record(
    text: &str,
    mode: ValidationMode,
) -> Result<(VerbalizationRecord, Vec<Repair>), VerbalizationError> {
    let raw = parse_raw(text)?;
    let resolution = raw.resolution;
    if let Some(res) = resolution {
        if !res.is_positive() {
            return Err(VerbalizationError::Malformed(format!(
                "non-positive resolution {res}"
            )));
        }
    }
    let built = build(raw.color_and_tones, raw.objects, mode, resolution)?;
    let (verbalization, repairs) = match built {
        Some((v, r)) => (Some(v), r),
        None => (None, Vec::new()),
    };
    Ok((
        VerbalizationRecord {
            id: raw.id,
            resolution,
            verbalization,
            exact_kpis: raw.exact,
        },
        repairs,
    ))
}

pub fn serialize_verbalization(v: &Verbalization) -> String {
    let mut out = String::from("{");
    write_verbalization_body(&mut out, v);
    out.push('}');
    out
}

pub fn serialize_record(record: &VerbalizationRecord) -> String {
    let mut parts: Vec<String> = Vec::new();
    if let Some(v) = &record.verbalization {
        let mut body = String::new();
        write_verbalization_body(&mut body, v);
        parts.push(body);
    }
    for (kpi, value) in &record.exact_kpis {
        parts.push(format!("{}: {value}", json_string(&format!("exact {kpi}"))));
    }
    if let Some(id) = &record.id {
        parts.push(format!("\"id\": {}", json_string(id)));
    }
    if let Some(res) = record.resolution {
        parts.push(format!("\"resolution\": [{}, {}]", res.width, res.height));
    }
    format!("{{{}}}", parts.join(", "))
}

/// One non-blank line of a newline-delimited corpus.
#[derive(Clone, Debug)]
pub struct CorpusLine {
    /// 1-based line number.
    pub line: usize,
    pub result: Result<(VerbalizationRecord, Vec<Repair>), VerbalizationError>,
}

impl CorpusLine {
    /// The record id, falling back to `line-<n>`.
    pub fn id(&self) -> String {
        match &self.result {
            Ok((rec, _)) => rec.id.clone().unwrap_or_else(|| format!("line-{}", self.line)),
            Err(_) => format!("line-{}", self.line),
        }
    }
}

pub fn read_corpus(text: &str, mode: ValidationMode) -> Vec<CorpusLine> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| CorpusLine {
            line: i + 1,
            result: parse_record(l, mode),
        })
        .collect()
}

fn write_verbalization_body(out: &mut String, v: &Verbalization) {
    out.push_str("\"color and tones\": {\"colors\": {");
    for (i, c) in v.canonical_colors().iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(
            out,
            "{}: {{\"coverage\": {}}}",
            json_string(c.color.as_str()),
            format_number(c.coverage)
        );
    }
    let _ = write!(
        out,
        "}}, \"tones\": {{\"warm\": {}, \"neutral\": {}, \"cool\": {}}}}}, \"objects\": {{",
        format_number(v.tones.warm),
        format_number(v.tones.neutral),
        format_number(v.tones.cool)
    );
    for (i, o) in v.objects.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        let _ = write!(out, "{}: {}", json_string(&o.label), o.bbox);
    }
    out.push('}');
}

fn json_string(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn build(
    color_and_tones: Option<RawColorTones>,
    objects: Option<OrderedMap<Vec<f64>>>,
    mode: ValidationMode,
    resolution: Option<Resolution>,
) -> Result<Option<(Verbalization, Vec<Repair>)>, VerbalizationError> {
    let strict = mode == ValidationMode::Strict;
    let (ct, objects) = match (color_and_tones, objects) {
        (None, None) => return Ok(None),
        (Some(ct), Some(o)) => (ct, o),
        (None, Some(_)) => return Err(VerbalizationError::MissingTones),
        (Some(_), None) => {
            return Err(VerbalizationError::Malformed("missing `objects`".into()))
        }
    };
    let mut repairs = Vec::new();

    let raw_colors = ct
        .colors
        .ok_or_else(|| VerbalizationError::Malformed("missing `colors`".into()))?;
    let mut colors = Vec::with_capacity(raw_colors.0.len());
    for (name, cov) in raw_colors.0 {
        match name.parse::<ColorName>() {
            Ok(color) => colors.push(ColorEntry {
                color,
                coverage: cov.coverage,
            }),
            Err(e) if strict => return Err(e.into()),
            Err(_) => repairs.push(Repair::DroppedUnknownColor(name)),
        }
    }

    let raw_tones = ct.tones.ok_or(VerbalizationError::MissingTones)?;
    let mut tones = ToneMix::new(0.0, 0.0, 0.0);
    let mut present = [false; 3];
    for (name, value) in raw_tones.0 {
        match name.parse::<Tone>() {
            Ok(tone) => {
                tones.set(tone, value);
                present[tone as usize] = true;
            }
            Err(name) if strict => return Err(VerbalizationError::UnknownTone(name)),
            Err(name) => repairs.push(Repair::DroppedUnknownTone(name)),
        }
    }
    for tone in Tone::ALL {
        if !present[tone as usize] {
            if strict {
                return Err(VerbalizationError::IncompleteTones(tone.to_string()));
            }
            repairs.push(Repair::FilledMissingTone(tone.to_string()));
        }
    }

    let mut objs = Vec::with_capacity(objects.0.len());
    for (label, coords) in objects.0 {
        let [x1, y1, x2, y2]: [f64; 4] = coords.as_slice().try_into().map_err(|_| {
            VerbalizationError::Malformed(format!(
                "box for `{label}` has {} coordinates, expected 4",
                coords.len()
            ))
        })?;
        objs.push(ObjectEntry::new(label, BBox::new(x1, y1, x2, y2)));
    }

    let v = Verbalization::new(colors, tones, objs);
    if strict {
        v.validate(resolution)?;
        Ok(Some((v, repairs)))
    } else {
        let (v, more) = v.repair(resolution);
        repairs.extend(more);
        Ok(Some((v, repairs)))
    }
}

fn parse_raw(text: &str) -> Result<RawRecord, VerbalizationError> {
    serde_json::from_str(text.trim()).map_err(|e| VerbalizationError::Malformed(e.to_string()))
}

/// Map entries in document order, duplicates kept.
struct OrderedMap<V>(Vec<(String, V)>);

impl<'de, V: Deserialize<'de>> Deserialize<'de> for OrderedMap<V> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct OrderedVisitor<V>(PhantomData<V>);

        impl<'de, V: Deserialize<'de>> Visitor<'de> for OrderedVisitor<V> {
            type Value = OrderedMap<V>;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a JSON object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
                let mut entries = Vec::with_capacity(map.size_hint().unwrap_or(0));
                while let Some(entry) = map.next_entry::<String, V>()? {
                    entries.push(entry);
                }
                Ok(OrderedMap(entries))
            }
        }

        deserializer.deserialize_map(OrderedVisitor(PhantomData))
    }
}

#[derive(Deserialize)]
struct RawCoverage {
    coverage: f64,
}

#[derive(Deserialize)]
struct RawColorTones {
    colors: Option<OrderedMap<RawCoverage>>,
    tones: Option<OrderedMap<f64>>,
}

struct RawRecord {
    color_and_tones: Option<RawColorTones>,
    objects: Option<OrderedMap<Vec<f64>>>,
    id: Option<String>,
    resolution: Option<Resolution>,
    exact: Vec<(String, u64)>,
}

impl<'de> Deserialize<'de> for RawRecord {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RecordVisitor;

        impl<'de> Visitor<'de> for RecordVisitor {
            type Value = RawRecord;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a verbalization record object")
            }

            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<RawRecord, A::Error> {
                let mut rec = RawRecord {
                    color_and_tones: None,
                    objects: None,
                    id: None,
                    resolution: None,
                    exact: Vec::new(),
                };
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "color and tones" => {
                            if rec.color_and_tones.is_some() {
                                return Err(de::Error::duplicate_field("color and tones"));
                            }
                            rec.color_and_tones = Some(map.next_value()?);
                        }
                        "objects" => {
                            if rec.objects.is_some() {
                                return Err(de::Error::duplicate_field("objects"));
                            }
                            rec.objects = Some(map.next_value()?);
                        }
                        "id" => rec.id = Some(map.next_value()?),
                        "resolution" => {
                            let [width, height]: [u32; 2] = map.next_value()?;
                            rec.resolution = Some(Resolution { width, height });
                        }
                        k if k.starts_with("exact ") => {
                            let value: u64 = map.next_value()?;
                            rec.exact.push((k["exact ".len()..].to_string(), value));
                        }
                        _ => {
                            map.next_value::<IgnoredAny>()?;
                        }
                    }
                }
                Ok(rec)
            }
        }

        deserializer.deserialize_map(RecordVisitor)
    }
}
