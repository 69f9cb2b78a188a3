use std::io::Write;

use rayon::prelude::*;

use super::{
    colors_coverage_rmse, colors_iou, colors_rgb_distance, colors_similarity,
    objects_area_rmse_norm, objects_iou, objects_similarity, relative_position_error_norm,
    tones_coverage_rmse, MetricsError, RgbTable, WordSimilarityProvider, RGB_TAU, SIMILARITY_TAU,
};
use crate::verbalization::{Resolution, Verbalization};

/// Column names, in table order.
pub const METRIC_NAMES: [&str; 9] = [
    "colors_iou",
    "colors_similarity",
    "colors_rgb_distance",
    "colors_coverage_rmse",
    "tones_coverage_rmse",
    "objects_iou",
    "objects_similarity",
    "objects_area_rmse_norm",
    "relative_position_error_norm",
];

/// All nine metrics for one pair. `None` is undefined.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MetricReport {
    pub colors_iou: Option<f64>,
    pub colors_similarity: Option<f64>,
    pub colors_rgb_distance: Option<f64>,
    pub colors_coverage_rmse: Option<f64>,
    pub tones_coverage_rmse: Option<f64>,
    pub objects_iou: Option<f64>,
    pub objects_similarity: Option<f64>,
    pub objects_area_rmse_norm: Option<f64>,
    pub relative_position_error_norm: Option<f64>,
}

impl MetricReport {
    pub fn values(&self) -> [Option<f64>; 9] {
        [
            self.colors_iou,
            self.colors_similarity,
            self.colors_rgb_distance,
            self.colors_coverage_rmse,
            self.tones_coverage_rmse,
            self.objects_iou,
            self.objects_similarity,
            self.objects_area_rmse_norm,
            self.relative_position_error_norm,
        ]
    }

    pub fn from_values(v: [Option<f64>; 9]) -> Self {
        Self {
            colors_iou: v[0],
            colors_similarity: v[1],
            colors_rgb_distance: v[2],
            colors_coverage_rmse: v[3],
            tones_coverage_rmse: v[4],
            objects_iou: v[5],
            objects_similarity: v[6],
            objects_area_rmse_norm: v[7],
            relative_position_error_norm: v[8],
        }
    }
}

/// Computes every metric with the default thresholds.
pub fn full_report(
    gt: &Verbalization,
    pred: &Verbalization,
    gt_resolution: Resolution,
    provider: &dyn WordSimilarityProvider,
    table: &RgbTable,
) -> Result<MetricReport, MetricsError> {
    Ok(MetricReport {
        colors_iou: colors_iou(gt, pred),
        colors_similarity: colors_similarity(gt, pred, provider, SIMILARITY_TAU).value,
        colors_rgb_distance: colors_rgb_distance(gt, pred, table, RGB_TAU).value,
        colors_coverage_rmse: colors_coverage_rmse(gt, pred),
        tones_coverage_rmse: tones_coverage_rmse(gt, pred),
        objects_iou: objects_iou(gt, pred),
        objects_similarity: objects_similarity(gt, pred, provider, SIMILARITY_TAU).value,
        objects_area_rmse_norm: objects_area_rmse_norm(
            gt,
            pred,
            gt_resolution,
            provider,
            SIMILARITY_TAU,
        )?
        .value,
        relative_position_error_norm: relative_position_error_norm(
            gt,
            pred,
            gt_resolution,
            provider,
            SIMILARITY_TAU,
        )?
        .value,
    })
}

#[derive(Clone, Debug)]
pub struct EvalPair {
    pub id: String,
    pub gt: Verbalization,
    pub pred: Verbalization,
    pub resolution: Resolution,
}

#[derive(Clone, Debug)]
pub struct CorpusReport {
    pub rows: Vec<(String, MetricReport)>,
    /// Mean of each metric over pairs where it is defined.
    pub mean: MetricReport,
    /// Pairs skipped per metric because the value was undefined.
    pub undefined: [usize; 9],
}

/// Scores a corpus in parallel; row order follows the input.
pub fn evaluate_corpus(
    pairs: &[EvalPair],
    provider: &dyn WordSimilarityProvider,
    table: &RgbTable,
) -> Result<CorpusReport, MetricsError> {
    let rows = pairs
        .par_iter()
        .map(|p| full_report(&p.gt, &p.pred, p.resolution, provider, table).map(|r| (p.id.clone(), r)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut sums = [0.0; 9];
    let mut counts = [0usize; 9];
    let mut undefined = [0usize; 9];
    for (_, r) in &rows {
        for (k, v) in r.values().iter().enumerate() {
            match v {
                Some(x) => {
                    sums[k] += x;
                    counts[k] += 1;
                }
                None => undefined[k] += 1,
            }
        }
    }
    let mut means = [None; 9];
    for k in 0..9 {
        if counts[k] > 0 {
            means[k] = Some(sums[k] / counts[k] as f64);
        }
    }
    Ok(CorpusReport {
        rows,
        mean: MetricReport::from_values(means),
        undefined,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.6}"))
}

impl CorpusReport {
    /// One row per pair, then a `mean` row and an `undefined` row holding
    /// the per-metric skip counts.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["id"];
        header.extend(METRIC_NAMES);
        w.write_record(&header)?;
        for (id, r) in &self.rows {
            let mut rec = vec![id.clone()];
            rec.extend(r.values().iter().map(|v| cell(*v)));
            w.write_record(&rec)?;
        }
        let mut mean = vec!["mean".to_string()];
        mean.extend(self.mean.values().iter().map(|v| cell(*v)));
        w.write_record(&mean)?;
        let mut skipped = vec!["undefined".to_string()];
        skipped.extend(self.undefined.iter().map(|n| n.to_string()));
        w.write_record(&skipped)?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::WordVectors;
    use crate::verbalization::{BBox, ColorEntry, ColorName, ObjectEntry, ToneMix};

    fn provider() -> WordVectors {
        WordVectors::new(3)
            .with("gray", &[1.0, 0.0, 0.0])
            .with("black", &[0.0, 1.0, 0.0])
            .with("cat", &[0.0, 0.0, 1.0])
    }

    fn sample() -> Verbalization {
        Verbalization::new(
            vec![
                ColorEntry { color: ColorName::Gray, coverage: 0.6 },
                ColorEntry { color: ColorName::Black, coverage: 0.4 },
            ],
            ToneMix::new(0.2, 0.8, 0.0),
            vec![ObjectEntry::new("cat", BBox::new(1.0, 2.0, 30.0, 40.0))],
        )
    }

    #[test]
    fn identical_pair_is_perfect() {
        let v = sample();
        let r = full_report(&v, &v, Resolution::new(64, 64), &provider(), &RgbTable::default())
            .unwrap();
        assert_eq!(r.colors_iou, Some(1.0));
        assert_eq!(r.objects_iou, Some(1.0));
        assert!((r.colors_similarity.unwrap() - 1.0).abs() < 1e-12);
        assert!((r.objects_similarity.unwrap() - 1.0).abs() < 1e-12);
        for v in [
            r.colors_rgb_distance,
            r.colors_coverage_rmse,
            r.tones_coverage_rmse,
            r.objects_area_rmse_norm,
            r.relative_position_error_norm,
        ] {
            assert_eq!(v, Some(0.0));
        }
    }

    #[test]
    fn corpus_mean_skips_undefined() {
        let a = sample();
        let mut olive = sample();
        olive.colors = vec![ColorEntry { color: ColorName::Olive, coverage: 1.0 }];
        let pairs = vec![
            EvalPair { id: "p1".into(), gt: a.clone(), pred: a.clone(), resolution: Resolution::new(64, 64) },
            EvalPair { id: "p2".into(), gt: olive.clone(), pred: olive, resolution: Resolution::new(64, 64) },
        ];
        let rep = evaluate_corpus(&pairs, &provider(), &RgbTable::default()).unwrap();
        assert_eq!(rep.undefined[1], 1);
        assert!((rep.mean.colors_similarity.unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(rep.rows[1].0, "p2");

        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert!(lines[0].starts_with("id,colors_iou,"));
        assert!(lines[2].contains("undefined"));
        assert!(lines[4].starts_with("undefined,0,1,"));
    }
}
