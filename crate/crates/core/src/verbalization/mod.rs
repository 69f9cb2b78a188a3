//! Image verbalization data model.
//!
//! A verbalization is the text-side description of an image: the dominant
//! colors with their area coverage, the warm/neutral/cool tone mix, and the
//! detected objects with their bounding boxes. Coordinates use a top-left
//! origin with x growing right and y growing down, in pixels of the image's
//! stated resolution.

mod codec;
mod color;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use codec::{
    format_number, parse_record, parse_verbalization, parse_verbalization_with, read_corpus,
    serialize_record, serialize_verbalization, CorpusLine, Parsed, VerbalizationRecord,
};
pub use color::{allowed_colors_literal, ColorName, Tone, UnknownColor};

/// Maximum deviation of the tone proportions from a unit sum in strict mode.
pub const TONE_SUM_TOLERANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationMode {
    /// Reject any violation.
    #[default]
    Strict,
    /// Repair what can be repaired and report each repair.
    Lenient,
}

impl std::str::FromStr for ValidationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "strict" => Ok(ValidationMode::Strict),
            "lenient" => Ok(ValidationMode::Lenient),
            other => Err(format!("unknown validation mode `{other}`")),
        }
    }
}

/// Image size in pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

impl Resolution {
    pub fn new(width: u32, height: u32) -> Self {
        Self { width, height }
    }

    pub fn area(&self) -> f64 {
        f64::from(self.width) * f64::from(self.height)
    }

    pub fn diagonal(&self) -> f64 {
        f64::from(self.width).hypot(f64::from(self.height))
    }

    pub fn is_positive(&self) -> bool {
        self.width > 0 && self.height > 0
    }
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.width, self.height)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColorEntry {
    pub color: ColorName,
    /// Fraction of the image area, in `[0, 1]`.
    pub coverage: f64,
}

/// Proportions of the three tones.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToneMix {
    pub warm: f64,
    pub neutral: f64,
    pub cool: f64,
}

impl ToneMix {
    pub fn new(warm: f64, neutral: f64, cool: f64) -> Self {
        Self {
            warm,
            neutral,
            cool,
        }
    }

    pub fn only(tone: Tone) -> Self {
        let mut mix = Self::new(0.0, 0.0, 0.0);
        mix.set(tone, 1.0);
        mix
    }

    pub fn get(&self, tone: Tone) -> f64 {
        match tone {
            Tone::Warm => self.warm,
            Tone::Neutral => self.neutral,
            Tone::Cool => self.cool,
        }
    }

    pub fn set(&mut self, tone: Tone, value: f64) {
        match tone {
            Tone::Warm => self.warm = value,
            Tone::Neutral => self.neutral = value,
            Tone::Cool => self.cool = value,
        }
    }

    pub fn sum(&self) -> f64 {
        self.warm + self.neutral + self.cool
    }

    /// A tone counts as present when its proportion is strictly positive.
    pub fn is_present(&self, tone: Tone) -> bool {
        self.get(tone) > 0.0
    }
}

impl Default for ToneMix {
    fn default() -> Self {
        Self::only(Tone::Neutral)
    }
}

/// Axis-aligned box given by two diagonal corners `[x1, y1, x2, y2]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BBox {
    pub x1: f64,
    pub y1: f64,
    pub x2: f64,
    pub y2: f64,
}

impl BBox {
    pub fn new(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self { x1, y1, x2, y2 }
    }

    pub fn width(&self) -> f64 {
        self.x2 - self.x1
    }

    pub fn height(&self) -> f64 {
        self.y2 - self.y1
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn centroid(&self) -> (f64, f64) {
        ((self.x1 + self.x2) / 2.0, (self.y1 + self.y2) / 2.0)
    }

    pub fn is_ordered(&self) -> bool {
        self.x1 < self.x2 && self.y1 < self.y2
    }

    pub fn within(&self, res: Resolution) -> bool {
        let (w, h) = (f64::from(res.width), f64::from(res.height));
        [self.x1, self.x2].iter().all(|x| (0.0..=w).contains(x))
            && [self.y1, self.y2].iter().all(|y| (0.0..=h).contains(y))
    }

    fn as_array(&self) -> [f64; 4] {
        [self.x1, self.y1, self.x2, self.y2]
    }
}

impl fmt::Display for BBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.as_array().map(format_number);
        write!(f, "[{a}, {b}, {c}, {d}]")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectEntry {
    /// Free-text tag, stored verbatim.
    pub label: String,
    pub bbox: BBox,
}

impl ObjectEntry {
    pub fn new(label: impl Into<String>, bbox: BBox) -> Self {
        Self {
            label: label.into(),
            bbox,
        }
    }
}

/// Colors, tones and objects of one image.
///
/// Equality treats the color list as a set keyed by name (its order is a
/// rendering concern) while objects compare in insertion order.
#[derive(Clone, Debug, Default)]
pub struct Verbalization {
    pub colors: Vec<ColorEntry>,
    pub tones: ToneMix,
    pub objects: Vec<ObjectEntry>,
}

impl PartialEq for Verbalization {
    fn eq(&self, other: &Self) -> bool {
        self.tones == other.tones
            && self.objects == other.objects
            && self.colors_by_name() == other.colors_by_name()
    }
}

impl Verbalization {
    pub fn new(colors: Vec<ColorEntry>, tones: ToneMix, objects: Vec<ObjectEntry>) -> Self {
        Self {
            colors,
            tones,
            objects,
        }
    }

    fn colors_by_name(&self) -> Vec<(ColorName, f64)> {
        let mut v: Vec<_> = self.colors.iter().map(|c| (c.color, c.coverage)).collect();
        v.sort_by(|a, b| a.0.cmp(&b.0));
        v
    }

    pub fn coverage_of(&self, color: ColorName) -> Option<f64> {
        self.colors
            .iter()
            .find(|c| c.color == color)
            .map(|c| c.coverage)
    }

    /// Colors in canonical order: descending coverage, then name.
    pub fn canonical_colors(&self) -> Vec<ColorEntry> {
        let mut colors = self.colors.clone();
        colors.sort_by(|a, b| {
            b.coverage
                .total_cmp(&a.coverage)
                .then_with(|| a.color.as_str().cmp(b.color.as_str()))
        });
        colors
    }

    /// Checks every strict-mode invariant, returning the first violation.
    pub fn validate(&self, resolution: Option<Resolution>) -> Result<(), VerbalizationError> {
        let mut seen = Vec::with_capacity(self.colors.len());
        for c in &self.colors {
            if !(0.0..=1.0).contains(&c.coverage) {
                return Err(VerbalizationError::CoverageOutOfRange {
                    color: c.color.to_string(),
                    value: c.coverage,
                });
            }
            if seen.contains(&c.color) {
                return Err(VerbalizationError::DuplicateColor(c.color.to_string()));
            }
            seen.push(c.color);
        }
        for tone in Tone::ALL {
            let p = self.tones.get(tone);
            if !(0.0..=1.0).contains(&p) {
                return Err(VerbalizationError::ToneOutOfRange {
                    tone: tone.to_string(),
                    value: p,
                });
            }
        }
        let sum = self.tones.sum();
        if (sum - 1.0).abs() > TONE_SUM_TOLERANCE {
            return Err(VerbalizationError::ToneSum(sum));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.label.trim().is_empty() {
                return Err(VerbalizationError::EmptyLabel);
            }
            if !o.bbox.is_ordered() {
                return Err(VerbalizationError::DegenerateBox {
                    label: o.label.clone(),
                    bbox: o.bbox.to_string(),
                });
            }
            if let Some(res) = resolution {
                if !o.bbox.within(res) {
                    return Err(VerbalizationError::BoxOutOfBounds {
                        label: o.label.clone(),
                        bbox: o.bbox.to_string(),
                        resolution: res,
                    });
                }
            }
            if self.objects[..i].iter().any(|p| p == o) {
                return Err(VerbalizationError::DuplicateObject(o.label.clone()));
            }
        }
        Ok(())
    }

    /// Brings the verbalization into a valid state, reporting every change.
    ///
    /// Boxes get their corners ordered and are clamped to the image when the
    /// resolution is known; boxes that still have zero extent are dropped.
    /// Tone proportions are clamped and renormalized when their sum is
    /// positive.
    pub fn repair(mut self, resolution: Option<Resolution>) -> (Self, Vec<Repair>) {
        let mut repairs = Vec::new();

        let mut kept: Vec<ColorEntry> = Vec::with_capacity(self.colors.len());
        for mut c in std::mem::take(&mut self.colors) {
            if kept.iter().any(|k| k.color == c.color) {
                repairs.push(Repair::DroppedDuplicateColor(c.color.to_string()));
                continue;
            }
            if !(0.0..=1.0).contains(&c.coverage) {
                let clamped = c.coverage.clamp(0.0, 1.0);
                repairs.push(Repair::ClampedCoverage {
                    color: c.color.to_string(),
                    from: c.coverage,
                    to: clamped,
                });
                c.coverage = clamped;
            }
            kept.push(c);
        }
        self.colors = kept;

        for tone in Tone::ALL {
            let p = self.tones.get(tone);
            if !(0.0..=1.0).contains(&p) {
                let clamped = p.clamp(0.0, 1.0);
                repairs.push(Repair::ClampedTone {
                    tone: tone.to_string(),
                    from: p,
                    to: clamped,
                });
                self.tones.set(tone, clamped);
            }
        }
        let sum = self.tones.sum();
        if (sum - 1.0).abs() > TONE_SUM_TOLERANCE {
            if sum > 0.0 {
                for tone in Tone::ALL {
                    self.tones.set(tone, self.tones.get(tone) / sum);
                }
                repairs.push(Repair::RenormalizedTones { sum });
            } else {
                repairs.push(Repair::UnrepairableTones);
            }
        }

        let mut objects: Vec<ObjectEntry> = Vec::with_capacity(self.objects.len());
        for mut o in std::mem::take(&mut self.objects) {
            if o.label.trim().is_empty() {
                repairs.push(Repair::DroppedObject {
                    label: o.label,
                    reason: "empty label",
                });
                continue;
            }
            let b = o.bbox;
            if b.x1 > b.x2 || b.y1 > b.y2 {
                let fixed = BBox::new(b.x1.min(b.x2), b.y1.min(b.y2), b.x1.max(b.x2), b.y1.max(b.y2));
                repairs.push(Repair::SwappedCorners {
                    label: o.label.clone(),
                    from: b,
                    to: fixed,
                });
                o.bbox = fixed;
            }
            if let Some(res) = resolution {
                if !o.bbox.within(res) {
                    let (w, h) = (f64::from(res.width), f64::from(res.height));
                    let b = o.bbox;
                    let fixed = BBox::new(
                        b.x1.clamp(0.0, w),
                        b.y1.clamp(0.0, h),
                        b.x2.clamp(0.0, w),
                        b.y2.clamp(0.0, h),
                    );
                    repairs.push(Repair::ClampedBox {
                        label: o.label.clone(),
                        from: b,
                        to: fixed,
                    });
                    o.bbox = fixed;
                }
            }
            if !o.bbox.is_ordered() {
                repairs.push(Repair::DroppedObject {
                    label: o.label,
                    reason: "zero-area box",
                });
                continue;
            }
            if objects.contains(&o) {
                repairs.push(Repair::DroppedObject {
                    label: o.label,
                    reason: "duplicate",
                });
                continue;
            }
            objects.push(o);
        }
        self.objects = objects;

        (self, repairs)
    }
}

/// A change made by lenient validation.
#[derive(Clone, Debug, PartialEq)]
pub enum Repair {
    DroppedUnknownColor(String),
    DroppedUnknownTone(String),
    FilledMissingTone(String),
    DroppedDuplicateColor(String),
    ClampedCoverage { color: String, from: f64, to: f64 },
    ClampedTone { tone: String, from: f64, to: f64 },
    RenormalizedTones { sum: f64 },
    UnrepairableTones,
    SwappedCorners { label: String, from: BBox, to: BBox },
    ClampedBox { label: String, from: BBox, to: BBox },
    DroppedObject { label: String, reason: &'static str },
}

impl fmt::Display for Repair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Repair::DroppedUnknownColor(c) => write!(f, "dropped unknown color `{c}`"),
            Repair::DroppedUnknownTone(t) => write!(f, "dropped unknown tone `{t}`"),
            Repair::FilledMissingTone(t) => write!(f, "missing tone `{t}` set to 0"),
            Repair::DroppedDuplicateColor(c) => write!(f, "dropped duplicate color `{c}`"),
            Repair::ClampedCoverage { color, from, to } => {
                write!(f, "coverage of `{color}` clamped from {from} to {to}")
            }
            Repair::ClampedTone { tone, from, to } => {
                write!(f, "tone `{tone}` clamped from {from} to {to}")
            }
            Repair::RenormalizedTones { sum } => write!(f, "tones renormalized (sum was {sum})"),
            Repair::UnrepairableTones => write!(f, "tones sum to zero; left as is"),
            Repair::SwappedCorners { label, from, to } => {
                write!(f, "box of `{label}` corners swapped {from} -> {to}")
            }
            Repair::ClampedBox { label, from, to } => {
                write!(f, "box of `{label}` clamped {from} -> {to}")
            }
            Repair::DroppedObject { label, reason } => {
                write!(f, "dropped object `{label}` ({reason})")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum VerbalizationError {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error(transparent)]
    UnknownColor(#[from] UnknownColor),
    #[error("unknown tone `{0}`")]
    UnknownTone(String),
    #[error("record has no `tones` key")]
    MissingTones,
    #[error("tone `{0}` missing from tone mix")]
    IncompleteTones(String),
    #[error("tone proportions sum to {0}, expected 1")]
    ToneSum(f64),
    #[error("tone `{tone}` proportion {value} outside [0, 1]")]
    ToneOutOfRange { tone: String, value: f64 },
    #[error("coverage {value} of `{color}` outside [0, 1]")]
    CoverageOutOfRange { color: String, value: f64 },
    #[error("duplicate color `{0}`")]
    DuplicateColor(String),
    #[error("duplicate object `{0}` with identical box")]
    DuplicateObject(String),
    #[error("object label is empty")]
    EmptyLabel,
    #[error("degenerate box {bbox} for `{label}`")]
    DegenerateBox { label: String, bbox: String },
    #[error("box {bbox} for `{label}` lies outside the {resolution} image")]
    BoxOutOfBounds {
        label: String,
        bbox: String,
        resolution: Resolution,
    },
}
