//! Render instruction pairs for each pattern from a handful of stock records.
//!
//! cargo run --example instruction_corpus

use chrono::NaiveDate;
use verbalign::dataset::{
    bucket, build_corpus, BucketScheme, CorpusConfig, MediaRecord, Pattern, PatternMix,
};
use verbalign::verbalization::{parse_verbalization, Resolution, ValidationMode};

const LOOK: &str = r#"{"color and tones": {"colors": {"Turquoise": {"coverage": 0.55}, "White": {"coverage": 0.45}}, "tones": {"warm": 0, "neutral": 0.4, "cool": 0.6}}, "objects": {"surfboard": [120.0, 300.0, 860.0, 520.0]}}"#;

fn asset(i: u64) -> MediaRecord {
    MediaRecord {
        id: format!("asset-{i}"),
        account: "studio".into(),
        timestamp: NaiveDate::from_ymd_opt(2022, 1 + (i % 12) as u32, 3)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap(),
        caption: format!("Surfer carrying a board along the shore, take {i}"),
        keywords: vec!["surf".into(), "beach".into(), "summer".into()],
        text: None,
        resolution: Resolution::new(1000, 800),
        kpis: [
            ("downloads".to_string(), i * 3),
            ("forwards".to_string(), i * 7 + 1),
            ("impressions".to_string(), i * 120 + 40),
        ]
        .into(),
        verbalization: Some(parse_verbalization(LOOK, ValidationMode::Strict).unwrap().verbalization),
        media_group: None,
    }
}

fn main() {
    let records: Vec<MediaRecord> = (1..=12).map(asset).collect();
    let buckets = bucket(&records, BucketScheme::StockThreeWay, "downloads").unwrap();
    let config = CorpusConfig {
        mix: PatternMix::uniform(),
        seed: 11,
        ..CorpusConfig::default()
    };
    let corpus = build_corpus(&records, &config, |id| buckets.label(id)).unwrap();
    for p in Pattern::ALL {
        println!("{p:?}: {} pairs", corpus.count(p));
    }
    let first = &corpus.pairs[0];
    println!("\n--- {} ({:?}) ---\n{}\n\nOutput: {}", first.source_id, first.pattern, first.input, first.output);
}
