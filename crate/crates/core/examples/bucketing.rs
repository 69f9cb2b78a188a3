//! Label records by engagement and hold out a balanced test split.
//!
//! cargo run --example bucketing

use chrono::NaiveDate;
use verbalign::dataset::{bucket, split, BucketScheme, KpiBucketLabel, MediaRecord};
use verbalign::verbalization::Resolution;

fn post(i: usize, account: &str, likes: u64, group: Option<&str>) -> MediaRecord {
    MediaRecord {
        id: format!("{account}-{i:02}"),
        account: account.into(),
        timestamp: NaiveDate::from_ymd_opt(2023, 5, 1).unwrap().and_hms_opt(12, 0, 0).unwrap(),
        caption: format!("post {i}"),
        keywords: vec![],
        text: Some(format!("caption text {i}")),
        resolution: Resolution::new(1080, 1080),
        kpis: [("likes".to_string(), likes)].into(),
        verbalization: None,
        media_group: group.map(str::to_string),
    }
}

fn main() {
    let mut records: Vec<MediaRecord> = (0..40)
        .map(|i| post(i, "brand", (i as u64 * 37) % 101, None))
        .collect();
    // a carousel: both images get the better of the two counts
    records.push(post(40, "brand", 3, Some("carousel")));
    records.push(post(41, "brand", 99, Some("carousel")));
    // an account with a single post cannot be ranked
    records.push(post(0, "newcomer", 500, None));

    let twitter = bucket(&records, BucketScheme::twitter(), "likes").unwrap();
    println!(
        "two-way: {} high, {} low, unlabeled {:?}",
        twitter.count(KpiBucketLabel::High),
        twitter.count(KpiBucketLabel::Low),
        twitter.unlabeled
    );
    println!("carousel: {:?} / {:?}", twitter.label("brand-40"), twitter.label("brand-41"));

    let tertiles = bucket(&records, BucketScheme::StockThreeWay, "likes").unwrap();
    let held_out = split(&tertiles, 3, 7).unwrap();
    println!("test ids: {:?}", held_out.test);
    println!("{} records left for training", held_out.train.len());
}
