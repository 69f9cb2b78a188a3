//! Prompt templates for the four behavior-finetuning patterns.
//!
//! | pattern | input shows        | output holds                   |
//! |---------|--------------------|--------------------------------|
//! | P1      | exact KPIs         | verbalization                  |
//! | P2      | noisy target KPIs  | verbalization + exact KPIs     |
//! | P3      | noisy target KPIs  | exact KPIs                     |
//! | P4      | no KPIs            | exact KPIs                     |
//!
//! The stock family reproduces the reference prompts byte for byte, quirks
//! included: P2–P4 inputs are wrapped in CSV-style quotes (inner quotes
//! doubled), P3 keeps a space before its closing quote and P4 has no space
//! after its opening bracket. The twitter family mirrors the stock wording
//! for a single `likes` KPI plus the account and post text.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DatasetError, Kpis, MediaRecord};
use crate::verbalization::{allowed_colors_literal, serialize_record, Verbalization, VerbalizationRecord};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pattern {
    P1,
    P2,
    P3,
    P4,
}

impl Pattern {
    pub const ALL: [Pattern; 4] = [Pattern::P1, Pattern::P2, Pattern::P3, Pattern::P4];

    pub fn needs_verbalization(self) -> bool {
        matches!(self, Pattern::P1 | Pattern::P2)
    }

    pub fn shows_noisy_kpis(self) -> bool {
        matches!(self, Pattern::P2 | Pattern::P3)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for Pattern {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "P1" | "1" => Ok(Pattern::P1),
            "P2" | "2" => Ok(Pattern::P2),
            "P3" | "3" => Ok(Pattern::P3),
            "P4" | "4" => Ok(Pattern::P4),
            _ => Err(DatasetError::UnknownPattern(s.to_string())),
        }
    }
}

/// Which template family (and KPI set) a dataset uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schema {
    /// downloads, forwards, impressions
    #[default]
    Stock,
    /// likes, with account and post text
    Twitter,
}

impl Schema {
    pub fn kpi_names(self) -> &'static [&'static str] {
        match self {
            Schema::Stock => &["downloads", "forwards", "impressions"],
            Schema::Twitter => &["likes"],
        }
    }
}

impl FromStr for Schema {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stock" => Ok(Schema::Stock),
            "twitter" => Ok(Schema::Twitter),
            other => Err(format!("unknown schema `{other}`")),
        }
    }
}

/// Prompt-side fields of a record.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptFields {
    pub caption: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    pub width: u32,
    pub height: u32,
    /// `YYYY-MM-DD`
    pub release_date: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub account: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl PromptFields {
    pub fn of(record: &MediaRecord) -> Self {
        Self {
            caption: record.caption.clone(),
            keywords: record.keywords.clone(),
            width: record.resolution.width,
            height: record.resolution.height,
            release_date: record.release_date().format("%Y-%m-%d").to_string(),
            account: Some(record.account.clone()),
            text: record.text.clone(),
        }
    }

    fn keywords_joined(&self) -> String {
        self.keywords.join(", ")
    }
}

fn csv_quote(body: &str) -> String {
    format!("\"{}\"", body.replace('"', "\"\""))
}

const ANSWER: &str = "Answer properly in JSON format. Do not include any other information in your answer.";

const STOCK_INTRO_EXACT: &str = "You are a smart model. I am giving you some data regarding an image - (1) captions (2) keywords (3) image resolution i.e. (width, height) (4) release date (5) number of downloads i.e. how many times the image was downloaded (6) number of forwards i.e. how many times the image was forwarded to someone else (7) number of impressions i.e. how many times the image was seen by someone. Note that (5), (6) and (7) are Key Performance Indicators (KPIs) of the image, thus they are important signals of its perceived quality and popularity.";

const STOCK_INTRO_BASE: &str = "You are a smart model. I am giving giving you some data regarding an image released by a content creator - (1) captions (2) keywords (3) image resolution i.e. (width, height) (4) release date";

const STOCK_INTRO_NOISY_TAIL: &str = " (5) approximate number of downloads that the creator wants to achieve (6) approximate number of forwards that the creator wants to achieve (7) approximate number of impressions/views that the creator wants to achieve";

const STOCK_EXACT_TASKS: [&str; 3] = [
    "exact number of downloads that the image will get",
    "exact number of forwards that the image will get",
    "exact number of impressions/views that the image will get",
];

const STOCK_APPROX_FIELDS: [&str; 3] = [
    "approximate number of downloads that the creator wants to achieve",
    "approximate number of forwards that the creator wants to achieve",
    "approximate number of impressions/views that the creator wants to achieve",
];

const TWITTER_INTRO_EXACT: &str = "You are a smart model. I am giving you some data regarding an image posted by a brand account - (1) account username (2) tweet text (3) captions (4) keywords (5) image resolution i.e. (width, height) (6) posting date (7) number of likes i.e. how many users liked the tweet. Note that (7) is a Key Performance Indicator (KPI) of the image, thus it is an important signal of its perceived quality and popularity.";

const TWITTER_INTRO_BASE: &str = "You are a smart model. I am giving you some data regarding an image posted by a brand account - (1) account username (2) tweet text (3) captions (4) keywords (5) image resolution i.e. (width, height) (6) posting date";

const TWITTER_INTRO_NOISY_TAIL: &str = " (7) approximate number of likes that the account wants to achieve";

const TWITTER_EXACT_TASK: &str = "exact number of likes that the image will get";
const TWITTER_APPROX_FIELD: &str = "approximate number of likes that the account wants to achieve";

fn attribute_task(colors_sep: &str, tones_sep: &str) -> String {
    format!(
        "(1) colour and tones from the lists given below: - Allowed colours: {}{colors_sep}- Allowed tones: ['warm', 'neutral', 'cool']{tones_sep}(2) main objects present in the image and the diagonal coordinates of their bounding boxes: [x1, y1, x2, y2]",
        allowed_colors_literal()
    )
}

fn kpi_value(kpis: &Kpis, name: &str) -> Result<u64, DatasetError> {
    kpis.get(name).copied().ok_or_else(|| DatasetError::MissingKpi {
        id: String::new(),
        kpi: name.to_string(),
    })
}

/// Renders the input text of `pattern`. `shown_kpis` are the values placed in
/// the prompt: exact for P1, noisy for P2/P3, ignored for P4.
pub fn render_input(
    schema: Schema,
    pattern: Pattern,
    fields: &PromptFields,
    shown_kpis: &Kpis,
) -> Result<String, DatasetError> {
    match schema {
        Schema::Stock => render_stock_input(pattern, fields, shown_kpis),
        Schema::Twitter => render_twitter_input(pattern, fields, shown_kpis),
    }
}

fn base_fields(f: &PromptFields) -> String {
    format!(
        "captions: \"{}\", keywords: \"{}\", image resolution: \"({}, {})\", release date: \"{}\"",
        f.caption,
        f.keywords_joined(),
        f.width,
        f.height,
        f.release_date
    )
}

fn render_stock_input(
    pattern: Pattern,
    f: &PromptFields,
    kpis: &Kpis,
) -> Result<String, DatasetError> {
    let names = Schema::Stock.kpi_names();
    let lead = "Now, predict the attributes for the following image:";
    Ok(match pattern {
        Pattern::P1 => {
            let v = names
                .iter()
                .map(|n| kpi_value(kpis, n))
                .collect::<Result<Vec<_>, _>>()?;
            format!(
                "{STOCK_INTRO_EXACT}\nYou have to predict following attributes of the image: {}\n{lead} [{}, number of downloads: \"{}\", number of forwards: \"{}\", number of impressions: \"{}\"] {ANSWER}",
                attribute_task("  ", " "),
                base_fields(f),
                v[0],
                v[1],
                v[2]
            )
        }
        Pattern::P2 | Pattern::P3 => {
            let mut approx = String::new();
            for (field, name) in STOCK_APPROX_FIELDS.iter().zip(names) {
                approx.push_str(&format!(", {field}: \"{}\"", kpi_value(kpis, name)?));
            }
            let tasks = if pattern == Pattern::P2 {
                format!(
                    "{}  (3) {}  (4) {}  (5) {}",
                    attribute_task(" ", "  "),
                    STOCK_EXACT_TASKS[0],
                    STOCK_EXACT_TASKS[1],
                    STOCK_EXACT_TASKS[2]
                )
            } else {
                format!(
                    "(1) {} (2) {} (3) {}.",
                    STOCK_EXACT_TASKS[0], STOCK_EXACT_TASKS[1], STOCK_EXACT_TASKS[2]
                )
            };
            let tail = if pattern == Pattern::P2 { "" } else { " " };
            csv_quote(&format!(
                "{STOCK_INTRO_BASE}{STOCK_INTRO_NOISY_TAIL}\nYou have to predict following attributes of the image: {tasks}\n{lead} [ {}{approx} ] {ANSWER}{tail}",
                base_fields(f)
            ))
        }
        Pattern::P4 => csv_quote(&format!(
            "{STOCK_INTRO_BASE}\nYou have to predict following attributes of the image: (1) {} (2) {} (3) {}\n{lead} [{} ]. {ANSWER}",
            STOCK_EXACT_TASKS[0],
            STOCK_EXACT_TASKS[1],
            STOCK_EXACT_TASKS[2],
            base_fields(f)
        )),
    })
}

fn twitter_fields(f: &PromptFields) -> String {
    format!(
        "account: \"{}\", tweet text: \"{}\", captions: \"{}\", keywords: \"{}\", image resolution: \"({}, {})\", posting date: \"{}\"",
        f.account.as_deref().unwrap_or(""),
        f.text.as_deref().unwrap_or(""),
        f.caption,
        f.keywords_joined(),
        f.width,
        f.height,
        f.release_date
    )
}

fn render_twitter_input(
    pattern: Pattern,
    f: &PromptFields,
    kpis: &Kpis,
) -> Result<String, DatasetError> {
    let lead = "Now, predict the attributes for the following image:";
    Ok(match pattern {
        Pattern::P1 => format!(
            "{TWITTER_INTRO_EXACT}\nYou have to predict following attributes of the image: {}\n{lead} [{}, number of likes: \"{}\"] {ANSWER}",
            attribute_task("  ", " "),
            twitter_fields(f),
            kpi_value(kpis, "likes")?
        ),
        Pattern::P2 | Pattern::P3 => {
            let tasks = if pattern == Pattern::P2 {
                format!("{}  (3) {TWITTER_EXACT_TASK}", attribute_task(" ", "  "))
            } else {
                format!("(1) {TWITTER_EXACT_TASK}.")
            };
            csv_quote(&format!(
                "{TWITTER_INTRO_BASE}{TWITTER_INTRO_NOISY_TAIL}\nYou have to predict following attributes of the image: {tasks}\n{lead} [ {}, {TWITTER_APPROX_FIELD}: \"{}\" ] {ANSWER}",
                twitter_fields(f),
                kpi_value(kpis, "likes")?
            ))
        }
        Pattern::P4 => csv_quote(&format!(
            "{TWITTER_INTRO_BASE}\nYou have to predict following attributes of the image: (1) {TWITTER_EXACT_TASK}\n{lead} [{} ]. {ANSWER}",
            twitter_fields(f)
        )),
    })
}

/// Renders the output text of `pattern`.
pub fn render_output(
    schema: Schema,
    pattern: Pattern,
    verbalization: Option<&Verbalization>,
    exact_kpis: &Kpis,
) -> Result<String, DatasetError> {
    let verbalization = if pattern.needs_verbalization() {
        Some(verbalization.ok_or(DatasetError::MissingVerbalization(String::new()))?)
    } else {
        None
    };
    let exact = if pattern == Pattern::P1 {
        Vec::new()
    } else {
        schema
            .kpi_names()
            .iter()
            .map(|n| Ok((n.to_string(), kpi_value(exact_kpis, n)?)))
            .collect::<Result<Vec<_>, DatasetError>>()?
    };
    Ok(serialize_record(&VerbalizationRecord {
        id: None,
        resolution: None,
        verbalization: verbalization.cloned(),
        exact_kpis: exact,
    }))
}

/// `Input: ...` / `Output: ...` layout of a rendered pair.
pub fn render_listing(input: &str, output: &str) -> String {
    format!("Input: {input}\n\nOutput: {output}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fields() -> PromptFields {
        PromptFields {
            caption: "say \"hi\"".into(),
            keywords: vec!["a".into(), "b".into()],
            width: 10,
            height: 20,
            release_date: "2020-01-02".into(),
            account: Some("acme".into()),
            text: Some("new drop".into()),
        }
    }

    fn stock_kpis() -> Kpis {
        [("downloads", 1), ("forwards", 2), ("impressions", 3)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    #[test]
    fn quoted_patterns_double_inner_quotes() {
        let s = render_input(Schema::Stock, Pattern::P4, &fields(), &Kpis::new()).unwrap();
        assert!(s.starts_with('"') && s.ends_with('"'));
        assert!(s.contains(r#"captions: ""say ""hi"""""#));
    }

    #[test]
    fn p1_shows_exact_kpis_unquoted() {
        let s = render_input(Schema::Stock, Pattern::P1, &fields(), &stock_kpis()).unwrap();
        assert!(s.contains("number of impressions: \"3\"]"));
        assert!(!s.starts_with('"'));
    }

    #[test]
    fn missing_kpi_is_an_error() {
        let err = render_input(Schema::Twitter, Pattern::P1, &fields(), &stock_kpis()).unwrap_err();
        assert!(matches!(err, DatasetError::MissingKpi { .. }));
    }

    #[test]
    fn twitter_family() {
        let likes: Kpis = [("likes".to_string(), 42)].into();
        let p3 = render_input(Schema::Twitter, Pattern::P3, &fields(), &likes).unwrap();
        assert!(p3.contains("approximate number of likes that the account wants to achieve: \"\"42\"\""));
        assert!(p3.contains("account: \"\"acme\"\""));
        let out = render_output(Schema::Twitter, Pattern::P3, None, &likes).unwrap();
        assert_eq!(out, "{\"exact likes\": 42}");
        let p4 = render_input(Schema::Twitter, Pattern::P4, &fields(), &likes).unwrap();
        assert!(!p4.contains("42"));
    }

    #[test]
    fn output_requires_verbalization_for_p1_p2() {
        for p in [Pattern::P1, Pattern::P2] {
            assert!(matches!(
                render_output(Schema::Stock, p, None, &stock_kpis()),
                Err(DatasetError::MissingVerbalization(_))
            ));
        }
        let out = render_output(Schema::Stock, Pattern::P4, None, &stock_kpis()).unwrap();
        assert_eq!(out, "{\"exact downloads\": 1, \"exact forwards\": 2, \"exact impressions\": 3}");
    }

    #[test]
    fn pattern_parsing() {
        assert_eq!("p3".parse::<Pattern>().unwrap(), Pattern::P3);
        assert!(matches!("P5".parse::<Pattern>(), Err(DatasetError::UnknownPattern(_))));
    }
}
