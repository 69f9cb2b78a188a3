//! Parse a verbalization, repair a sloppy one, and serialize both back.
//!
//! cargo run --example verbalization_round_trip

use verbalign::verbalization::{parse_verbalization, serialize_verbalization, ValidationMode};

const CLEAN: &str = r#"{"color and tones": {"colors": {"Black": {"coverage": 0.6}, "Gray": {"coverage": 0.4}}, "tones": {"warm": 0, "neutral": 1.0, "cool": 0}}, "objects": {"woman": [10.0, 20.0, 300.0, 400.0]}}"#;

// corners swapped on the box, and a lowercase color name
const SLOPPY: &str = r#"{"color and tones": {"colors": {"gray": {"coverage": 0.4}, "Black": {"coverage": 0.6}}, "tones": {"warm": 0, "neutral": 1.0, "cool": 0}}, "objects": {"woman": [300.0, 400.0, 10.0, 20.0]}}"#;

fn main() {
    let parsed = parse_verbalization(CLEAN, ValidationMode::Strict).expect("clean input parses");
    let text = serialize_verbalization(&parsed.verbalization);
    println!("strict   : {text}");
    assert_eq!(text, CLEAN);

    match parse_verbalization(SLOPPY, ValidationMode::Strict) {
        Ok(_) => println!("strict accepted the sloppy input"),
        Err(e) => println!("strict rejects: {e}"),
    }
    let lenient = parse_verbalization(SLOPPY, ValidationMode::Lenient).expect("lenient repairs");
    for r in &lenient.repairs {
        println!("repaired : {r:?}");
    }
    println!("lenient  : {}", serialize_verbalization(&lenient.verbalization));
}
