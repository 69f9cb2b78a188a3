//! Score candidate verbalizations with a mock language model and keep the best.
//!
//! Point the same code at a running logit server with `HttpBackend::new(url, timeout)`.
//!
//! cargo run --example best_of_n

use verbalign::dataset::{PromptFields, Schema};
use verbalign::reward::{
    best_of_n, compose_scoring_text, reward_of, MockBackend, RewardOptions, RewardRequest,
    ScoreTransform,
};
use verbalign::verbalization::{parse_verbalization, ValidationMode};

const CANDIDATES: [&str; 4] = [
    r#"{"color and tones": {"colors": {"Red": {"coverage": 0.7}, "Black": {"coverage": 0.3}}, "tones": {"warm": 0.7, "neutral": 0.3, "cool": 0}}, "objects": {"guitar": [100.0, 50.0, 400.0, 450.0]}}"#,
    r#"{"color and tones": {"colors": {"Blue": {"coverage": 1.0}}, "tones": {"warm": 0, "neutral": 0, "cool": 1.0}}, "objects": {}}"#,
    r#"{"color and tones": {"colors": {"Orange": {"coverage": 0.5}, "Red": {"coverage": 0.5}}, "tones": {"warm": 1.0, "neutral": 0, "cool": 0}}, "objects": {"stage": [0.0, 300.0, 500.0, 500.0]}}"#,
    r#"{"color and tones": {"colors": {"Gray": {"coverage": 1.0}}, "tones": {"warm": 0, "neutral": 1.0, "cool": 0}}, "objects": {"guitar": [10.0, 10.0, 40.0, 40.0]}}"#,
];

fn main() {
    let prompt = PromptFields {
        caption: "Live concert poster with an electric guitar".into(),
        keywords: vec!["music".into(), "concert".into()],
        width: 500,
        height: 500,
        release_date: "2024-06-01".into(),
        account: None,
        text: None,
    };
    let requests: Vec<RewardRequest> = CANDIDATES
        .iter()
        .map(|c| RewardRequest {
            prompt: prompt.clone(),
            target_kpis: [
                ("downloads".to_string(), 50),
                ("forwards".to_string(), 200),
                ("impressions".to_string(), 9000),
            ]
            .into(),
            verbalization: parse_verbalization(c, ValidationMode::Strict).unwrap().verbalization,
            schema: Schema::Stock,
        })
        .collect();

    println!("{}\n", compose_scoring_text(&requests[0]).unwrap().prefix());

    // pretend the model likes warm colors and guitars
    let model = MockBackend::keyword(&["Red", "Orange", "warm", "guitar"], 0.8, 0.2);
    let options = RewardOptions {
        transform: ScoreTransform::SumProb,
        ..RewardOptions::default()
    };
    for (i, r) in requests.iter().enumerate() {
        println!("candidate {i}: {:.3}", reward_of(r, &model, &options).unwrap());
    }
    for ranked in best_of_n(&requests, &model, &options, 2).unwrap() {
        println!("kept candidate {} ({:.3})", ranked.index, ranked.reward);
    }
}
