use std::collections::HashMap;
use std::io::BufRead;

use super::MetricsError;

/// Source of word vectors for the similarity metrics.
pub trait WordSimilarityProvider: Sync {
    /// Vector for a single word, if in vocabulary.
    fn vector(&self, word: &str) -> Option<&[f64]>;
}

/// Plain in-memory word-vector table.
///
/// Lookup tries the word verbatim and then lowercased.
#[derive(Clone, Debug, Default)]
pub struct WordVectors {
    dim: usize,
    table: HashMap<String, Vec<f64>>,
}

impl WordVectors {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            table: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn insert(&mut self, word: impl Into<String>, vector: Vec<f64>) -> Result<(), MetricsError> {
        let word = word.into();
        if vector.len() != self.dim {
            return Err(MetricsError::VectorDim {
                word,
                expected: self.dim,
                found: vector.len(),
            });
        }
        self.table.insert(word, vector);
        Ok(())
    }

    pub fn with(mut self, word: &str, vector: &[f64]) -> Self {
        self.insert(word, vector.to_vec()).expect("dimension mismatch");
        self
    }

    /// Reads `word v1 v2 ... vd` lines. The first line fixes `d`.
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, MetricsError> {
        let mut vectors: Option<WordVectors> = None;
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(word) = fields.next() else { continue };
            let values = fields
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| MetricsError::Parse {
                    line: i + 1,
                    message: e.to_string(),
                })?;
            if values.is_empty() {
                return Err(MetricsError::Parse {
                    line: i + 1,
                    message: format!("no vector for `{word}`"),
                });
            }
            let table = vectors.get_or_insert_with(|| WordVectors::new(values.len()));
            table.insert(word, values)?;
        }
        Ok(vectors.unwrap_or_default())
    }
}

impl WordSimilarityProvider for WordVectors {
    fn vector(&self, word: &str) -> Option<&[f64]> {
        self.table
            .get(word)
            .or_else(|| self.table.get(&word.to_lowercase()))
            .map(Vec::as_slice)
    }
}

/// Splits a label into words on whitespace and underscores.
pub fn label_words(label: &str) -> impl Iterator<Item = &str> {
    label
        .split(|c: char| c.is_whitespace() || c == '_')
        .filter(|w| !w.is_empty())
}

/// Mean of the in-vocabulary word vectors of a label. `None` when no word is
/// in vocabulary or the mean vanishes.
pub fn label_vector(provider: &dyn WordSimilarityProvider, label: &str) -> Option<Vec<f64>> {
    let mut sum: Option<Vec<f64>> = None;
    let mut n = 0usize;
    for word in label_words(label) {
        if let Some(v) = provider.vector(word) {
            match sum.as_mut() {
                Some(s) if s.len() == v.len() => s.iter_mut().zip(v).for_each(|(a, b)| *a += b),
                Some(_) => continue,
                None => sum = Some(v.to_vec()),
            }
            n += 1;
        }
    }
    let mut mean = sum?;
    mean.iter_mut().for_each(|x| *x /= n as f64);
    (norm(&mean) > 0.0).then_some(mean)
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cosine similarity of two nonzero vectors, clamped to `[-1, 1]`.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    (dot / (norm(a) * norm(b))).clamp(-1.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_vector_file() {
        let text = "sofa 1 0 0\ncouch 0.9 0.43588989 0\n\nred 0 0 1\n";
        let wv = WordVectors::from_reader(text.as_bytes()).unwrap();
        assert_eq!(wv.dim(), 3);
        assert_eq!(wv.len(), 3);
        assert!(wv.vector("Red").is_some());
        assert!(wv.vector("blue").is_none());
    }

    #[test]
    fn ragged_file_is_rejected() {
        let text = "a 1 0\nb 1 0 0\n";
        assert!(matches!(
            WordVectors::from_reader(text.as_bytes()),
            Err(MetricsError::VectorDim { .. })
        ));
        assert!(WordVectors::from_reader("a 1 x\n".as_bytes()).is_err());
    }

    #[test]
    fn multiword_label_is_mean_of_known_words() {
        let wv = WordVectors::new(2).with("safety", &[1.0, 0.0]).with("vest", &[0.0, 1.0]);
        assert_eq!(label_vector(&wv, "safety vest").unwrap(), vec![0.5, 0.5]);
        assert_eq!(label_vector(&wv, "safety zzz").unwrap(), vec![1.0, 0.0]);
        assert!(label_vector(&wv, "zzz").is_none());
        assert_eq!(label_words("Dark_Gray").collect::<Vec<_>>(), ["Dark", "Gray"]);
    }

    #[test]
    fn cosine_properties() {
        let a = [0.3, -1.2, 2.0];
        let b = [1.0, 0.5, -0.1];
        assert!((cosine(&a, &a) - 1.0).abs() < 1e-15);
        assert_eq!(cosine(&a, &b), cosine(&b, &a));
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 2.0]), 0.0);
    }
}
