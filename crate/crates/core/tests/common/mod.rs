//! Records behind the four reference listings, shared by integration tests.
#![allow(dead_code)]

use chrono::NaiveDate;
use verbalign::dataset::{Kpis, MediaRecord};
use verbalign::verbalization::{BBox, ColorEntry, ColorName, ObjectEntry, Resolution, ToneMix, Verbalization};

pub fn golden(name: &str) -> String {
    let path = format!("{}/tests/data/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).unwrap().trim_end_matches('\n').to_string()
}

/// The `Output: ` part of a reference listing.
pub fn golden_output(name: &str) -> String {
    golden(name).split("\n\nOutput: ").nth(1).unwrap().to_string()
}

pub fn kpis(d: u64, f: u64, i: u64) -> Kpis {
    [("downloads", d), ("forwards", f), ("impressions", i)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}

fn keywords(s: &str) -> Vec<String> {
    s.split(", ").map(str::to_string).collect()
}

fn record(
    id: &str,
    caption: &str,
    kw: &str,
    res: (u32, u32),
    date: (i32, u32, u32),
    kpis: Kpis,
    verbalization: Option<Verbalization>,
) -> MediaRecord {
    MediaRecord {
        id: id.into(),
        account: "creator".into(),
        timestamp: NaiveDate::from_ymd_opt(date.0, date.1, date.2)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap(),
        caption: caption.into(),
        keywords: keywords(kw),
        text: None,
        resolution: Resolution::new(res.0, res.1),
        kpis,
        verbalization,
        media_group: None,
    }
}

fn color(c: ColorName, coverage: f64) -> ColorEntry {
    ColorEntry { color: c, coverage }
}

pub fn listing1() -> MediaRecord {
    let v = Verbalization::new(
        vec![
            color(ColorName::Gray, 0.4),
            color(ColorName::DarkGray, 0.22),
            color(ColorName::Black, 0.14),
            color(ColorName::OffWhite, 0.13),
            color(ColorName::Silver, 0.11),
        ],
        ToneMix::new(0.0, 1.0, 0.0),
        vec![
            ObjectEntry::new("jeans", BBox::new(2076.67, 2542.5, 3023.88, 3827.01)),
            ObjectEntry::new("woman", BBox::new(1892.94, 11.18, 4260.09, 3824.34)),
            ObjectEntry::new("safety vest", BBox::new(2160.75, 1410.95, 3668.16, 3826.63)),
            ObjectEntry::new("shirt", BBox::new(2163.59, 1079.3, 4254.59, 3826.1)),
        ],
    );
    record(
        "listing-1",
        "Waist up portrait of mixed-race female worker posing confidently while standing with arms crossed in plant workshop",
        "female, worker, young, woman, mixed-race, african, african-american, modern, contemporary, work, occupation, industry, industrial, plant, factory, workshop, work shop, strong, tough, gritty, masculine, short, hair, latin-american, plump, adult, mechanic, repair, repairman, handywoman, foreman, copy space, portrait, looking at camera, standing, posing, smiling, recruitment, employment, job, opportunity, engineer, production, manufacturing, assembly, assembling, line",
        (5760, 3840),
        (2019, 12, 2),
        kpis(24, 106, 5941),
        Some(v),
    )
}

pub fn listing2() -> MediaRecord {
    let v = Verbalization::new(
        vec![
            color(ColorName::Cyan, 0.69),
            color(ColorName::LightBlue, 0.16),
            color(ColorName::Turquoise, 0.15),
        ],
        ToneMix::new(0.0, 0.0, 1.0),
        vec![
            ObjectEntry::new("man", BBox::new(1068.6, 18.57, 8143.44, 6121.09)),
            ObjectEntry::new("banknote bill", BBox::new(3443.5, 2146.79, 5294.15, 3455.05)),
        ],
    );
    record(
        "listing-2",
        "Hispanic adult man holding 100 brazilian real banknotes smiling happy pointing with hand and finger to the side",
        "pointing, side, face, happy, hopeful, smile, finger, optimistic, hand, point, showing, looking, smiling, one, gesture, confident, up, cheerful, look, mouth, joy, friendly, expression, emotion, presentation, idea, blue, background, hispanic, latin, man, male, guy, beard, bald, shaved, adult, young, money, currency, business, brazilian, cash, brazil, real, investment, banknote, 100",
        (9216, 6144),
        (2021, 2, 27),
        kpis(4, 15, 885),
        Some(v),
    )
}

pub fn listing3() -> MediaRecord {
    record(
        "listing-3",
        "Movie slapstick vector illustration. Behind the scenes inscription on flapper",
        "behind the scenes, slapstick, flapper, movie, cinema, scene, logo, frame, film, duration, behind, act, black, cameraman, clip, date, director, entertainment, flap, footage, gray, hollywood, icon, illustration, inscription, operator, screen, shooting, sign, signal, symbol, television, theater, time, timecode, tv, vector, video, view, white",
        (4096, 4096),
        (2017, 6, 11),
        kpis(5, 32, 864),
        None,
    )
}

pub fn listing4() -> MediaRecord {
    record(
        "listing-4",
        "Company employees working in software development and designer office",
        "business, office, meeting, collaegue, successful, workplace, analysis, architect, coworker, discussion, entrepreneur, marketing, professional, company, employee, occupation, software, work, worker, team, people, brainstorming, cooperation, corporate, project, strategy, teamwork, together, computer, colleagues, young, diverse, collaboration, design, developer, group, ideas, management, smiling, multiethnic, place, plan, research, startup, technology, women, programmer, architects",
        (4035, 2690),
        (2020, 9, 29),
        kpis(1, 1, 186),
        None,
    )
}

/// Words of the object labels the generators draw from. `zyzzyva` is kept
/// out of every vocabulary.
pub const OBJECT_LABELS: [&str; 12] = [
    "cat", "dog", "sofa", "couch", "man", "woman", "banknote bill", "safety vest", "shirt",
    "jeans", "tree", "zyzzyva",
];

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

/// A valid verbalization with up to six colors and six objects, boxes inside
/// a 1000 x 800 image.
pub fn random_verbalization<R: rand::Rng>(rng: &mut R) -> Verbalization {
    use rand::seq::IndexedRandom;
    let n_colors = rng.random_range(0..=6);
    let colors = rand::seq::index::sample(rng, ColorName::ALL.len(), n_colors)
        .into_iter()
        .map(|i| color(ColorName::ALL[i], round2(rng.random::<f64>())))
        .collect();
    let tones = match rng.random_range(0..3) {
        0 => ToneMix::new(0.0, 1.0, 0.0),
        1 => {
            let a = round2(rng.random::<f64>());
            ToneMix::new(a, 0.0, round2(1.0 - a))
        }
        _ => {
            let a = round2(rng.random_range(0.0..0.5));
            let b = round2(rng.random_range(0.0..0.5));
            ToneMix::new(a, b, round2(1.0 - a - b))
        }
    };
    let mut objects: Vec<ObjectEntry> = Vec::new();
    for _ in 0..rng.random_range(0..=6) {
        let label = *OBJECT_LABELS.choose(rng).unwrap();
        let x1 = round2(rng.random_range(0.0..900.0));
        let y1 = round2(rng.random_range(0.0..700.0));
        let x2 = round2(rng.random_range(x1 + 1.0..1000.0));
        let y2 = round2(rng.random_range(y1 + 1.0..800.0));
        let o = ObjectEntry::new(label, BBox::new(x1, y1, x2, y2));
        if !objects.contains(&o) {
            objects.push(o);
        }
    }
    Verbalization::new(colors, tones, objects)
}

/// Random word vectors around three cluster centers, so that some label
/// pairs clear a 0.7 cosine threshold and others do not.
pub fn random_vocabulary<R: rand::Rng>(rng: &mut R) -> std::collections::BTreeMap<String, Vec<f64>> {
    let centers: Vec<[f64; 3]> = (0..3)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let mut words: Vec<String> = ColorName::ALL
        .iter()
        .flat_map(|c| c.as_str().split('_').map(str::to_lowercase).collect::<Vec<_>>())
        .collect();
    words.extend(
        OBJECT_LABELS
            .iter()
            .filter(|l| **l != "zyzzyva")
            .flat_map(|l| l.split(' ').map(str::to_string)),
    );
    words.sort();
    words.dedup();
    words
        .into_iter()
        .map(|w| {
            let c = centers[rng.random_range(0..3)];
            let v = c.iter().map(|x| x + rng.random_range(-0.35..0.35)).collect();
            (w, v)
        })
        .collect()
}
