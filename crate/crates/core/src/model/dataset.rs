use std::collections::HashMap;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Dense features (one row per sample) with labels in `0..classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: DenseMatrix,
    pub y: Vec<usize>,
    classes: usize,
}

impl Dataset {
    pub fn new(x: DenseMatrix, y: Vec<usize>, classes: usize) -> Result<Self> {
        if y.is_empty() || y.len() != x.rows() {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} samples",
                y.len(),
                x.rows()
            )));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= classes) {
            return Err(Error::InvalidArgument(format!(
                "label {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self { x, y, classes })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn features(&self) -> usize {
        self.x.cols()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let n = self.features();
        let mut data = Vec::with_capacity(indices.len() * n);
        for &i in indices {
            data.extend_from_slice(self.x.row(i));
        }
        let x = DenseMatrix::new(indices.len(), n, data)?;
        Self::new(
            x,
            indices.iter().map(|&i| self.y[i]).collect(),
            self.classes,
        )
    }

    /// `count` distinct samples chosen uniformly with `seed`, kept in their
    /// original order. Returns a copy of the whole set if `count >= len`.
    pub fn subsample(&self, count: usize, seed: u64) -> Result<Self> {
        if count >= self.len() {
            return Ok(self.clone());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, self.len(), count).into_vec();
        idx.sort_unstable();
        self.select(&idx)
    }

    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }
}

/// Reads a libsvm file: `label idx:val idx:val …` with 1-based indices.
///
/// Labels are mapped to `0, 1, …` in order of first appearance; the feature
/// dimension is the largest index seen. Blank lines are skipped and `#`
/// starts a comment.
pub fn read_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_libsvm(&text, path)
}

pub(crate) fn parse_libsvm(text: &str, path: &Path) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut labels: HashMap<u64, usize> = HashMap::new();
    let mut rows: Vec<(usize, Vec<(usize, f64)>)> = Vec::new();
    let mut dim = 0;
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(lineno, format!("bad label '{label_tok}'")))?;
        let key = if label == 0.0 { 0 } else { label.to_bits() };
        let next_id = labels.len();
        let class = *labels.entry(key).or_insert(next_id);
        let mut feats = Vec::new();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("expected idx:val, got '{tok}'")))?;
            let i: usize = i
                .parse()
                .map_err(|_| err(lineno, format!("bad feature index '{i}'")))?;
            if i == 0 {
                return Err(err(lineno, "feature indices are 1-based".into()));
            }
            let v: f64 = v
                .parse()
                .map_err(|_| err(lineno, format!("bad feature value '{v}'")))?;
            dim = dim.max(i);
            feats.push((i - 1, v));
        }
        rows.push((class, feats));
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let mut x = DenseMatrix::zeros(rows.len(), dim.max(1));
    let mut y = Vec::with_capacity(rows.len());
    for (s, (class, feats)) in rows.into_iter().enumerate() {
        for (j, v) in feats {
            x[(s, j)] = v;
        }
        y.push(class);
    }
    Dataset::new(x, y, labels.len())
}

/// Gaussian blobs: labels uniform over `classes`, features
/// `x = separation · e_{label mod dim} + N(0, I)`.
pub fn synth_blobs(classes: usize, dim: usize, count: usize, seed: u64) -> Result<Dataset> {
    synth_blobs_with(classes, dim, count, seed, 4.0)
}

pub fn synth_blobs_with(
    classes: usize,
    dim: usize,
    count: usize,
    seed: u64,
    separation: f64,
) -> Result<Dataset> {
    if classes == 0 || dim == 0 || count == 0 {
        return Err(Error::InvalidArgument(
            "synth_blobs needs positive classes, dim and count".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DenseMatrix::zeros(count, dim);
    let mut y = Vec::with_capacity(count);
    for s in 0..count {
        let label = rng.random_range(0..classes);
        for j in 0..dim {
            let noise: f64 = rng.sample(StandardNormal);
            x[(s, j)] = noise + if j == label % dim { separation } else { 0.0 };
        }
        y.push(label);
    }
    Dataset::new(x, y, classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;

    fn parse(text: &str) -> Result<Dataset> {
        parse_libsvm(text, Path::new("inline"))
    }

    #[test]
    fn two_line_hand_case() {
        let ds = parse("1 1:0.5 3:2.0\n2 2:1.0").unwrap();
        assert_eq!(
            ds.x,
            DenseMatrix::from_rows(&[&[0.5, 0.0, 2.0], &[0.0, 1.0, 0.0]])
        );
        assert_eq!(ds.y, vec![0, 1]);
        let padded = parse("\n1 1:0.5 3:2.0   \n\n2 2:1.0  \n\n").unwrap();
        assert_eq!(padded, ds);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse("1 1:0.5\n2 x:1") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("1 0:1.0"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse("\n \n"), Err(Error::EmptyFile(_))));
    }

    #[test]
    fn writer_roundtrip() {
        let ds = synth_blobs(3, 5, 20, 9).unwrap();
        // Independent writer: labels as 10 + class so that the first-seen order
        // is exercised, zero entries omitted.
        let mut text = String::new();
        let mut order: Vec<usize> = Vec::new();
        for s in 0..ds.len() {
            if !order.contains(&ds.y[s]) {
                order.push(ds.y[s]);
            }
            write!(text, "{}", 10 + ds.y[s]).unwrap();
            for j in 0..ds.features() {
                let v = ds.x[(s, j)];
                if v != 0.0 || j == ds.features() - 1 {
                    write!(text, " {}:{:e}", j + 1, v).unwrap();
                }
            }
            text.push('\n');
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("blobs.svm");
        std::fs::write(&path, text).unwrap();
        let back = read_libsvm(&path).unwrap();
        assert_eq!(back.x, ds.x);
        let remapped: Vec<usize> =
            ds.y.iter()
                .map(|c| order.iter().position(|o| o == c).unwrap())
                .collect();
        assert_eq!(back.y, remapped);
        assert!(matches!(
            read_libsvm(dir.path().join("missing")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn blobs_are_deterministic_and_balanced() {
        let a = synth_blobs(4, 6, 400, 3).unwrap();
        assert_eq!(a, synth_blobs(4, 6, 400, 3).unwrap());
        assert_ne!(a, synth_blobs(4, 6, 400, 4).unwrap());
        let slack = 3.0 * 400f64.sqrt();
        for c in a.label_counts() {
            assert!((c as f64 - 100.0).abs() <= slack);
        }
    }

    #[test]
    fn subsample_and_select() {
        let ds = synth_blobs(2, 3, 50, 1).unwrap();
        let sub = ds.subsample(10, 2).unwrap();
        assert_eq!(sub.len(), 10);
        assert_eq!(sub, ds.subsample(10, 2).unwrap());
        assert_eq!(ds.subsample(60, 2).unwrap(), ds);
        assert_eq!(ds.select(&[3]).unwrap().x.row(0), ds.x.row(3));
    }
}
