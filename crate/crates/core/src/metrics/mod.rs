//! Metrics comparing a ground-truth verbalization with a predicted one.
//!
//! Pairwise metrics sum over every ground-truth × predicted pair, gated by an
//! indicator on similarity (or RGB distance). No bipartite matching is done.
//! A metric whose denominator is zero is undefined and reported as `None`.

mod report;
mod rgb;
mod vectors;

use std::collections::BTreeSet;

pub use report::{evaluate_corpus, full_report, CorpusReport, EvalPair, MetricReport, METRIC_NAMES};
pub use rgb::{Rgb, RgbTable};
pub use vectors::{cosine, label_vector, label_words, WordSimilarityProvider, WordVectors};

use crate::verbalization::{Resolution, Tone, Verbalization};

/// Default cosine threshold for the similarity-gated metrics.
pub const SIMILARITY_TAU: f64 = 0.7;
/// Default RGB distance threshold, on the `[0, 1]^3` scale.
pub const RGB_TAU: f64 = 0.5;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("resolution must be positive, got {0}")]
    NonPositiveResolution(Resolution),
    #[error("vector for `{word}` has dimension {found}, expected {expected}")]
    VectorDim {
        word: String,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("rgb value for `{0}` outside [0, 1]")]
    RgbRange(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Outcome of a threshold-gated pairwise metric.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairMetric {
    pub value: Option<f64>,
    /// Pairs that cleared the threshold.
    pub contributing: usize,
    /// Pairs excluded because a label had no vector.
    pub skipped_oov: usize,
}

fn set_iou<T: Ord>(a: &BTreeSet<T>, b: &BTreeSet<T>) -> Option<f64> {
    let union = a.union(b).count();
    if union == 0 {
        return None;
    }
    Some(a.intersection(b).count() as f64 / union as f64)
}

/// Label normalization for set metrics: trimmed and lowercased.
pub fn normalize_label(label: &str) -> String {
    label.trim().to_lowercase()
}

pub fn colors_iou(gt: &Verbalization, pred: &Verbalization) -> Option<f64> {
    let a: BTreeSet<_> = gt.colors.iter().map(|c| c.color).collect();
    let b: BTreeSet<_> = pred.colors.iter().map(|c| c.color).collect();
    set_iou(&a, &b)
}

pub fn objects_iou(gt: &Verbalization, pred: &Verbalization) -> Option<f64> {
    let a: BTreeSet<_> = gt.objects.iter().map(|o| normalize_label(&o.label)).collect();
    let b: BTreeSet<_> = pred.objects.iter().map(|o| normalize_label(&o.label)).collect();
    set_iou(&a, &b)
}

/// Cosine similarity for every gt × pred label pair; `None` marks an
/// out-of-vocabulary pair.
fn cosine_grid(
    gt: &[&str],
    pred: &[&str],
    provider: &dyn WordSimilarityProvider,
) -> Vec<Vec<Option<f64>>> {
    let gv: Vec<_> = gt.iter().map(|l| label_vector(provider, l)).collect();
    let pv: Vec<_> = pred.iter().map(|l| label_vector(provider, l)).collect();
    gv.iter()
        .map(|g| {
            pv.iter()
                .map(|p| match (g, p) {
                    (Some(g), Some(p)) => Some(cosine(g, p)),
                    _ => None,
                })
                .collect()
        })
        .collect()
}

/// Mean of `term(i, j, cos)` over pairs with `cos > tau`.
fn gated_mean(
    grid: &[Vec<Option<f64>>],
    tau: f64,
    mut term: impl FnMut(usize, usize, f64) -> f64,
) -> PairMetric {
    let mut total = 0.0;
    let mut contributing = 0;
    let mut skipped_oov = 0;
    for (i, row) in grid.iter().enumerate() {
        for (j, cos) in row.iter().enumerate() {
            match cos {
                None => skipped_oov += 1,
                Some(c) if *c > tau => {
                    total += term(i, j, *c);
                    contributing += 1;
                }
                Some(_) => {}
            }
        }
    }
    PairMetric {
        value: (contributing > 0).then(|| total / contributing as f64),
        contributing,
        skipped_oov,
    }
}

pub fn colors_similarity(
    gt: &Verbalization,
    pred: &Verbalization,
    provider: &dyn WordSimilarityProvider,
    tau: f64,
) -> PairMetric {
    let g: Vec<&str> = gt.colors.iter().map(|c| c.color.as_str()).collect();
    let p: Vec<&str> = pred.colors.iter().map(|c| c.color.as_str()).collect();
    gated_mean(&cosine_grid(&g, &p, provider), tau, |_, _, cos| cos)
}

pub fn objects_similarity(
    gt: &Verbalization,
    pred: &Verbalization,
    provider: &dyn WordSimilarityProvider,
    tau: f64,
) -> PairMetric {
    let g: Vec<&str> = gt.objects.iter().map(|o| o.label.as_str()).collect();
    let p: Vec<&str> = pred.objects.iter().map(|o| o.label.as_str()).collect();
    gated_mean(&cosine_grid(&g, &p, provider), tau, |_, _, cos| cos)
}

/// Mean RGB distance over color pairs closer than `tau`.
pub fn colors_rgb_distance(
    gt: &Verbalization,
    pred: &Verbalization,
    table: &RgbTable,
    tau: f64,
) -> PairMetric {
    let mut total = 0.0;
    let mut contributing = 0;
    for g in &gt.colors {
        for p in &pred.colors {
            let d = table.distance(g.color, p.color);
            if d < tau {
                total += d;
                contributing += 1;
            }
        }
    }
    PairMetric {
        value: (contributing > 0).then(|| total / contributing as f64),
        contributing,
        skipped_oov: 0,
    }
}

/// RMSE of coverage over colors present in both verbalizations.
pub fn colors_coverage_rmse(gt: &Verbalization, pred: &Verbalization) -> Option<f64> {
    let sq: Vec<f64> = gt
        .colors
        .iter()
        .filter_map(|g| pred.coverage_of(g.color).map(|p| (g.coverage - p).powi(2)))
        .collect();
    rms(&sq)
}

/// RMSE of tone proportions over tones present (> 0) in both.
pub fn tones_coverage_rmse(gt: &Verbalization, pred: &Verbalization) -> Option<f64> {
    let sq: Vec<f64> = Tone::ALL
        .iter()
        .filter(|t| gt.tones.is_present(**t) && pred.tones.is_present(**t))
        .map(|t| (gt.tones.get(*t) - pred.tones.get(*t)).powi(2))
        .collect();
    rms(&sq)
}

fn rms(squares: &[f64]) -> Option<f64> {
    if squares.is_empty() {
        return None;
    }
    Some((squares.iter().sum::<f64>() / squares.len() as f64).sqrt())
}

fn check_resolution(res: Resolution) -> Result<(), MetricsError> {
    if res.is_positive() {
        Ok(())
    } else {
        Err(MetricsError::NonPositiveResolution(res))
    }
}

/// Similarity-weighted box-area error, normalized by the ground-truth image
/// area. Each qualifying pair contributes
/// `(area_g - area_p)^2 * (area_g / A) / cos`; the result is
/// `sqrt(mean) / A` with `A = width * height`.
pub fn objects_area_rmse_norm(
    gt: &Verbalization,
    pred: &Verbalization,
    gt_resolution: Resolution,
    provider: &dyn WordSimilarityProvider,
    tau: f64,
) -> Result<PairMetric, MetricsError> {
    check_resolution(gt_resolution)?;
    let image_area = gt_resolution.area();
    let g: Vec<&str> = gt.objects.iter().map(|o| o.label.as_str()).collect();
    let p: Vec<&str> = pred.objects.iter().map(|o| o.label.as_str()).collect();
    let mut m = gated_mean(&cosine_grid(&g, &p, provider), tau, |i, j, cos| {
        let ag = gt.objects[i].bbox.area();
        let ap = pred.objects[j].bbox.area();
        (ag - ap).powi(2) * (ag / image_area) / cos
    });
    m.value = m.value.map(|mse| mse.sqrt() / image_area);
    Ok(m)
}

/// Similarity-weighted centroid distance, normalized by the ground-truth
/// image diagonal.
pub fn relative_position_error_norm(
    gt: &Verbalization,
    pred: &Verbalization,
    gt_resolution: Resolution,
    provider: &dyn WordSimilarityProvider,
    tau: f64,
) -> Result<PairMetric, MetricsError> {
    check_resolution(gt_resolution)?;
    let g: Vec<&str> = gt.objects.iter().map(|o| o.label.as_str()).collect();
    let p: Vec<&str> = pred.objects.iter().map(|o| o.label.as_str()).collect();
    let mut m = gated_mean(&cosine_grid(&g, &p, provider), tau, |i, j, cos| {
        let (gx, gy) = gt.objects[i].bbox.centroid();
        let (px, py) = pred.objects[j].bbox.centroid();
        (gx - px).hypot(gy - py) / cos
    });
    m.value = m.value.map(|rpe| rpe / gt_resolution.diagonal());
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verbalization::{BBox, ColorEntry, ColorName, ObjectEntry, ToneMix};

    fn colors(list: &[(ColorName, f64)]) -> Verbalization {
        Verbalization::new(
            list.iter()
                .map(|&(color, coverage)| ColorEntry { color, coverage })
                .collect(),
            ToneMix::default(),
            vec![],
        )
    }

    fn objects(list: &[(&str, [f64; 4])]) -> Verbalization {
        Verbalization::new(
            vec![],
            ToneMix::default(),
            list.iter()
                .map(|(l, [a, b, c, d])| ObjectEntry::new(*l, BBox::new(*a, *b, *c, *d)))
                .collect(),
        )
    }

    fn unit_provider() -> WordVectors {
        // one orthogonal axis per word
        let words = ["gray", "black", "white", "cat", "dog", "a", "b"];
        let mut wv = WordVectors::new(words.len());
        for (i, w) in words.iter().enumerate() {
            let mut v = vec![0.0; words.len()];
            v[i] = 1.0;
            wv.insert(*w, v).unwrap();
        }
        wv
    }

    use ColorName::*;

    #[test]
    fn color_iou_examples() {
        let a = colors(&[(Gray, 0.5), (Black, 0.5)]);
        assert_eq!(colors_iou(&a, &a), Some(1.0));
        assert_eq!(colors_iou(&a, &colors(&[(White, 1.0)])), Some(0.0));
        let b = colors(&[(Gray, 0.5), (White, 0.5)]);
        assert!((colors_iou(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(colors_iou(&colors(&[]), &colors(&[])), None);
    }

    #[test]
    fn color_similarity_examples() {
        let wv = unit_provider();
        let g = colors(&[(Gray, 1.0)]);
        let m = colors_similarity(&g, &g, &wv, SIMILARITY_TAU);
        assert!((m.value.unwrap() - 1.0).abs() < 1e-12);
        let m = colors_similarity(&g, &colors(&[(Black, 1.0)]), &wv, SIMILARITY_TAU);
        assert_eq!(m.value, None);
        assert_eq!(m.contributing, 0);

        let wv = WordVectors::new(2).with("red", &[1.0, 0.0]).with("orange", &[0.8, 0.6]);
        let m = colors_similarity(&colors(&[(Red, 1.0)]), &colors(&[(Orange, 1.0)]), &wv, 0.7);
        assert!((m.value.unwrap() - 0.8).abs() < 1e-12);
    }

    #[test]
    fn oov_pairs_are_counted() {
        let wv = unit_provider();
        let m = colors_similarity(
            &colors(&[(Gray, 0.5), (Olive, 0.5)]),
            &colors(&[(Gray, 1.0)]),
            &wv,
            SIMILARITY_TAU,
        );
        assert_eq!(m.skipped_oov, 1);
        assert_eq!(m.contributing, 1);
    }

    #[test]
    fn rgb_distance_examples() {
        let t = RgbTable::default();
        let black = colors(&[(Black, 1.0)]);
        assert_eq!(colors_rgb_distance(&black, &black, &t, RGB_TAU).value, Some(0.0));
        let m = colors_rgb_distance(&black, &colors(&[(DarkGray, 1.0)]), &t, RGB_TAU);
        assert!((m.value.unwrap() - 0.4330127).abs() < 1e-6);
        let mut custom = RgbTable::default();
        custom.set(Red, [0.6, 0.0, 0.0]).unwrap();
        let m = colors_rgb_distance(&black, &colors(&[(Red, 1.0)]), &custom, RGB_TAU);
        assert_eq!(m.value, None);
    }

    #[test]
    fn coverage_rmse_examples() {
        let g = colors(&[(Gray, 0.4), (Black, 0.14)]);
        let p = colors(&[(Gray, 0.5), (Black, 0.14), (White, 0.36)]);
        assert!((colors_coverage_rmse(&g, &p).unwrap() - 0.070711).abs() < 1e-6);
        assert_eq!(colors_coverage_rmse(&g, &g), Some(0.0));
        assert_eq!(colors_coverage_rmse(&g, &colors(&[(Red, 1.0)])), None);
    }

    #[test]
    fn tones_rmse_examples() {
        let mut g = colors(&[]);
        let mut p = colors(&[]);
        g.tones = ToneMix::only(Tone::Neutral);
        p.tones = ToneMix::new(0.5, 0.5, 0.0);
        assert_eq!(tones_coverage_rmse(&g, &p), Some(0.5));
        assert_eq!(tones_coverage_rmse(&g, &g), Some(0.0));
        g.tones = ToneMix::only(Tone::Cool);
        p.tones = ToneMix::only(Tone::Warm);
        assert_eq!(tones_coverage_rmse(&g, &p), None);
    }

    #[test]
    fn objects_iou_normalizes_labels() {
        let a = objects(&[("man", [0.0, 0.0, 1.0, 1.0]), ("banknote bill", [0.0, 0.0, 1.0, 1.0])]);
        let b = objects(&[(" Man ", [0.0, 0.0, 2.0, 2.0])]);
        assert_eq!(objects_iou(&a, &b), Some(0.5));
        assert_eq!(objects_iou(&a, &a), Some(1.0));
        assert_eq!(objects_iou(&a, &objects(&[("cat", [0.0, 0.0, 1.0, 1.0])])), Some(0.0));
    }

    #[test]
    fn objects_similarity_examples() {
        let wv = WordVectors::new(2)
            .with("sofa", &[1.0, 0.0])
            .with("couch", &[0.9, 0.19f64.sqrt()]);
        let m = objects_similarity(
            &objects(&[("sofa", [0.0, 0.0, 1.0, 1.0])]),
            &objects(&[("couch", [0.0, 0.0, 1.0, 1.0])]),
            &wv,
            SIMILARITY_TAU,
        );
        assert!((m.value.unwrap() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn area_rmse_example() {
        let wv = unit_provider();
        let res = Resolution::new(100, 100);
        let g = objects(&[("cat", [0.0, 0.0, 50.0, 40.0])]);
        let p = objects(&[("cat", [0.0, 0.0, 40.0, 40.0])]);
        let m = objects_area_rmse_norm(&g, &p, res, &wv, SIMILARITY_TAU).unwrap();
        assert!((m.value.unwrap() - 0.017889).abs() < 1e-6);
        let m = objects_area_rmse_norm(&g, &g, res, &wv, SIMILARITY_TAU).unwrap();
        assert_eq!(m.value, Some(0.0));
        let d = objects(&[("dog", [0.0, 0.0, 40.0, 40.0])]);
        let m = objects_area_rmse_norm(&g, &d, res, &wv, SIMILARITY_TAU).unwrap();
        assert_eq!(m.value, None);
        assert!(objects_area_rmse_norm(&g, &p, Resolution::new(0, 10), &wv, 0.7).is_err());
    }

    #[test]
    fn rpe_example() {
        let wv = unit_provider();
        let res = Resolution::new(100, 100);
        let g = objects(&[("cat", [0.0, 0.0, 50.0, 40.0])]);
        let p = objects(&[("cat", [0.0, 0.0, 40.0, 40.0])]);
        let m = relative_position_error_norm(&g, &p, res, &wv, SIMILARITY_TAU).unwrap();
        assert!((m.value.unwrap() - 0.035355).abs() < 1e-6);
        let m = relative_position_error_norm(&g, &g, res, &wv, SIMILARITY_TAU).unwrap();
        assert_eq!(m.value, Some(0.0));
        assert!(relative_position_error_norm(&g, &p, Resolution::new(10, 0), &wv, 0.7).is_err());
    }
}
