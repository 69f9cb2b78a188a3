//! Compare a predicted verbalization against ground truth on all nine metrics.
//!
//! cargo run --example metrics_report

use verbalign::metrics::{full_report, RgbTable, WordVectors, METRIC_NAMES};
use verbalign::verbalization::{parse_verbalization, Resolution, ValidationMode};

const GT: &str = r#"{"color and tones": {"colors": {"Gray": {"coverage": 0.5}, "Dark_Blue": {"coverage": 0.3}, "White": {"coverage": 0.2}}, "tones": {"warm": 0, "neutral": 0.7, "cool": 0.3}}, "objects": {"dog": [100.0, 100.0, 500.0, 400.0], "red car": [550.0, 300.0, 950.0, 700.0]}}"#;
const PRED: &str = r#"{"color and tones": {"colors": {"Silver": {"coverage": 0.45}, "Blue": {"coverage": 0.35}, "White": {"coverage": 0.2}}, "tones": {"warm": 0, "neutral": 0.6, "cool": 0.4}}, "objects": {"puppy": [120.0, 90.0, 480.0, 420.0], "car": [540.0, 320.0, 960.0, 690.0]}}"#;

fn words() -> WordVectors {
    // tiny hand-made embedding: greys, blues, whites, animals, vehicles
    WordVectors::new(3)
        .with("gray", &[1.0, 0.1, 0.0])
        .with("silver", &[0.95, 0.2, 0.0])
        .with("dark", &[0.1, 1.0, 0.0])
        .with("blue", &[0.2, 0.95, 0.1])
        .with("white", &[0.6, 0.6, 0.5])
        .with("dog", &[0.0, 0.1, 1.0])
        .with("puppy", &[0.1, 0.1, 0.97])
        .with("red", &[0.7, 0.0, 0.3])
        .with("car", &[0.6, 0.1, 0.6])
}

fn main() {
    let gt = parse_verbalization(GT, ValidationMode::Strict).unwrap().verbalization;
    let pred = parse_verbalization(PRED, ValidationMode::Strict).unwrap().verbalization;
    let report = full_report(&gt, &pred, Resolution::new(1000, 800), &words(), &RgbTable::default())
        .expect("metrics compute");
    for (name, value) in METRIC_NAMES.iter().zip(report.values()) {
        match value {
            Some(v) => println!("{name:<30} {v:.4}"),
            None => println!("{name:<30} undefined"),
        }
    }
}
