//! KPI bucketing.
//!
//! The unit of bucketing is the credit-sharing group: media of one post share
//! the post's KPI and always receive the same label.
//!
//! Percentile cuts use nearest rank on the sorted KPI values of the units:
//! the high cut is the smallest value among the top `ceil(n * (100 - high) / 100)`
//! ranks and the low cut the largest value among the bottom
//! `ceil(n * low / 100)` ranks. Values tied with the high cut go to High.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DatasetError, MediaRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum BucketScheme {
    /// Per-account two-way split on the top and bottom percentiles.
    TwitterTwoWay {
        high_percentile: f64,
        low_percentile: f64,
    },
    /// Global split into three near-equal buckets.
    StockThreeWay,
}

impl BucketScheme {
    /// Top 10 percent vs bottom 60 percent, per account.
    pub fn twitter() -> Self {
        BucketScheme::TwitterTwoWay {
            high_percentile: 90.0,
            low_percentile: 60.0,
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if let BucketScheme::TwitterTwoWay {
            high_percentile: hi,
            low_percentile: lo,
        } = *self
        {
            let open = |p: f64| p > 0.0 && p < 100.0;
            if !open(hi) || !open(lo) || hi <= lo {
                return Err(DatasetError::InvalidScheme(format!(
                    "percentiles must satisfy 0 < low ({lo}) < high ({hi}) < 100"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KpiBucketLabel {
    High,
    Medium,
    Low,
}

impl KpiBucketLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            KpiBucketLabel::High => "high",
            KpiBucketLabel::Medium => "medium",
            KpiBucketLabel::Low => "low",
        }
    }
}

impl fmt::Display for KpiBucketLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KpiBucketLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "high" => Ok(KpiBucketLabel::High),
            "medium" => Ok(KpiBucketLabel::Medium),
            "low" => Ok(KpiBucketLabel::Low),
            other => Err(format!("unknown bucket label `{other}`")),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BucketAssignment {
    /// Labeled record ids.
    pub labels: BTreeMap<String, KpiBucketLabel>,
    /// Records that fell between the cuts or could not be bucketed.
    pub unlabeled: Vec<String>,
    /// Accounts with fewer than two units under the per-account scheme.
    pub small_accounts: Vec<String>,
}

impl BucketAssignment {
    pub fn label(&self, id: &str) -> Option<KpiBucketLabel> {
        self.labels.get(id).copied()
    }

    pub fn ids_with(&self, label: KpiBucketLabel) -> Vec<String> {
        self.labels
            .iter()
            .filter(|(_, l)| **l == label)
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn count(&self, label: KpiBucketLabel) -> usize {
        self.labels.values().filter(|l| **l == label).count()
    }

    /// Writes `id,account,kpi,label` rows in the order of `records`.
    pub fn write_csv<W: Write>(
        &self,
        records: &[MediaRecord],
        kpi_name: &str,
        out: W,
    ) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "account", "kpi", "label"])?;
        for r in records {
            let label = self.label(&r.id).map_or("", KpiBucketLabel::as_str);
            let kpi = r.kpi(kpi_name).map(|v| v.to_string()).unwrap_or_default();
            w.write_record([r.id.as_str(), r.account.as_str(), kpi.as_str(), label])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A credit-sharing unit: member record ids and the unit's KPI.
struct Unit<'a> {
    members: Vec<&'a str>,
    kpi: u64,
}

fn units<'a>(records: &[&'a MediaRecord], kpi_name: &str) -> Result<Vec<Unit<'a>>, DatasetError> {
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut out: Vec<Unit<'a>> = Vec::new();
    for r in records {
        let kpi = r.kpi(kpi_name).ok_or_else(|| DatasetError::MissingKpi {
            id: r.id.clone(),
            kpi: kpi_name.to_string(),
        })?;
        match index.get(r.group_key()) {
            Some(&i) => {
                // members of a post carry the same count; keep the largest if not
                out[i].kpi = out[i].kpi.max(kpi);
                out[i].members.push(&r.id);
            }
            None => {
                index.insert(r.group_key(), out.len());
                out.push(Unit {
                    members: vec![&r.id],
                    kpi,
                });
            }
        }
    }
    Ok(out)
}

fn ceil_fraction(n: usize, percent: f64) -> usize {
    // guard against 0.1 * 100 landing just above an integer
    ((n as f64 * percent / 100.0) - 1e-9).ceil().max(0.0) as usize
}

/// Nearest-rank cut values `(high_cut, low_cut)` for sorted values.
pub fn two_way_cuts(sorted: &[u64], high_percentile: f64, low_percentile: f64) -> (u64, u64) {
    let n = sorted.len();
    let top = ceil_fraction(n, 100.0 - high_percentile).clamp(1, n);
    let bottom = ceil_fraction(n, low_percentile).clamp(1, n);
    (sorted[n - top], sorted[bottom - 1])
}

/// Assigns KPI buckets to `records` by `kpi_name`.
pub fn bucket(
    records: &[MediaRecord],
    scheme: BucketScheme,
    kpi_name: &str,
) -> Result<BucketAssignment, DatasetError> {
    if records.is_empty() {
        return Err(DatasetError::Empty);
    }
    scheme.validate()?;
    let mut out = BucketAssignment::default();
    let assign = |unit: &Unit, label: Option<KpiBucketLabel>, out: &mut BucketAssignment| {
        for id in &unit.members {
            match label {
                Some(l) => {
                    out.labels.insert(id.to_string(), l);
                }
                None => out.unlabeled.push(id.to_string()),
            }
        }
    };

    match scheme {
        BucketScheme::TwitterTwoWay {
            high_percentile,
            low_percentile,
        } => {
            let mut by_account: BTreeMap<&str, Vec<&MediaRecord>> = BTreeMap::new();
            for r in records {
                by_account.entry(&r.account).or_default().push(r);
            }
            for (account, recs) in by_account {
                let units = units(&recs, kpi_name)?;
                if units.len() < 2 {
                    out.small_accounts.push(account.to_string());
                    for u in &units {
                        assign(u, None, &mut out);
                    }
                    continue;
                }
                let mut sorted: Vec<u64> = units.iter().map(|u| u.kpi).collect();
                sorted.sort_unstable();
                let (high_cut, low_cut) = two_way_cuts(&sorted, high_percentile, low_percentile);
                for u in &units {
                    let label = if u.kpi >= high_cut {
                        Some(KpiBucketLabel::High)
                    } else if u.kpi <= low_cut {
                        Some(KpiBucketLabel::Low)
                    } else {
                        None
                    };
                    assign(u, label, &mut out);
                }
            }
        }
        BucketScheme::StockThreeWay => {
            let all: Vec<&MediaRecord> = records.iter().collect();
            let units = units(&all, kpi_name)?;
            let mut sorted: Vec<u64> = units.iter().map(|u| u.kpi).collect();
            sorted.sort_unstable();
            let n = sorted.len();
            let high_cut = sorted[n - n.div_ceil(3)];
            let medium_cut = sorted[n - (2 * n).div_ceil(3)];
            for u in &units {
                let label = if u.kpi >= high_cut {
                    KpiBucketLabel::High
                } else if u.kpi >= medium_cut {
                    KpiBucketLabel::Medium
                } else {
                    KpiBucketLabel::Low
                };
                assign(u, Some(label), &mut out);
            }
        }
    }
    out.unlabeled.sort();
    Ok(out)
}

/// Mean of `kpi_name` over the records carrying `label`.
pub fn bucket_mean(
    records: &[MediaRecord],
    assignment: &BucketAssignment,
    label: KpiBucketLabel,
    kpi_name: &str,
) -> Option<f64> {
    let vals: Vec<u64> = records
        .iter()
        .filter(|r| assignment.label(&r.id) == Some(label))
        .filter_map(|r| r.kpi(kpi_name))
        .collect();
    (!vals.is_empty()).then(|| vals.iter().sum::<u64>() as f64 / vals.len() as f64)
}
