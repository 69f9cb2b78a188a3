use rand::seq::index::sample;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{BucketAssignment, DatasetError, KpiBucketLabel};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Samples `test_per_bucket` ids uniformly without replacement from every
/// non-empty bucket; the rest of the bucket goes to train. Both lists come
/// back sorted.
pub fn split(
    assignment: &BucketAssignment,
    test_per_bucket: usize,
    seed: u64,
) -> Result<Split, DatasetError> {
    let mut out = Split::default();
    for (stream, label) in [KpiBucketLabel::High, KpiBucketLabel::Medium, KpiBucketLabel::Low]
        .into_iter()
        .enumerate()
    {
        let ids = assignment.ids_with(label);
        if ids.is_empty() {
            continue;
        }
        if ids.len() < test_per_bucket {
            return Err(DatasetError::BucketTooSmall {
                label,
                size: ids.len(),
                needed: test_per_bucket,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream as u64);
        let mut chosen = vec![false; ids.len()];
        for i in sample(&mut rng, ids.len(), test_per_bucket) {
            chosen[i] = true;
        }
        for (id, is_test) in ids.into_iter().zip(chosen) {
            if is_test {
                out.test.push(id);
            } else {
                out.train.push(id);
            }
        }
    }
    out.train.sort();
    out.test.sort();
    Ok(out)
}
