use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Normalizer;
use crate::error::{Error, Result};
use crate::nn::TrainingData;

/// Supervised `(history, future)` rows cut from a series.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowedDataset {
    p: usize,
    q: usize,
    stride: usize,
    histories: Vec<f64>,
    futures: Vec<f64>,
}

impl WindowedDataset {
    pub fn empty(p: usize, q: usize) -> Self {
        Self {
            p,
            q,
            stride: 1,
            histories: Vec::new(),
            futures: Vec::new(),
        }
    }

    /// Builds a dataset from explicit rows (e.g. generated pairs).
    pub fn from_rows<'a, I>(p: usize, q: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
    {
        let mut ds = Self::empty(p, q);
        for (h, f) in rows {
            ds.push(h, f)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, history: &[f64], future: &[f64]) -> Result<()> {
        if history.len() != self.p || future.len() != self.q {
            return Err(Error::shape(format!(
                "row dims ({}, {}) != dataset dims ({}, {})",
                history.len(),
                future.len(),
                self.p,
                self.q
            )));
        }
        self.histories.extend_from_slice(history);
        self.futures.extend_from_slice(future);
        Ok(())
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn len(&self) -> usize {
        self.histories.len() / self.p
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn history(&self, i: usize) -> &[f64] {
        &self.histories[i * self.p..(i + 1) * self.p]
    }

    pub fn future(&self, i: usize) -> &[f64] {
        &self.futures[i * self.q..(i + 1) * self.q]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.histories
            .chunks_exact(self.p)
            .zip(self.futures.chunks_exact(self.q))
    }

    /// Appends all rows of `other` after this dataset's rows.
    pub fn concat(&self, other: &WindowedDataset) -> Result<WindowedDataset> {
        if other.p != self.p || other.q != self.q {
            return Err(Error::shape("cannot concatenate datasets with different (p, q)"));
        }
        let mut out = self.clone();
        out.histories.extend_from_slice(&other.histories);
        out.futures.extend_from_slice(&other.futures);
        Ok(out)
    }

    /// Column `h` (0-based) of the futures as a one-step dataset.
    pub fn future_column(&self, h: usize) -> Result<WindowedDataset> {
        if h >= self.q {
            return Err(Error::shape(format!("future column {h} out of range for q = {}", self.q)));
        }
        let mut out = WindowedDataset {
            p: self.p,
            q: 1,
            stride: self.stride,
            histories: self.histories.clone(),
            futures: Vec::with_capacity(self.len()),
        };
        out.futures.extend(self.futures.chunks_exact(self.q).map(|f| f[h]));
        Ok(out)
    }
}

impl TrainingData for WindowedDataset {
    fn len(&self) -> usize {
        WindowedDataset::len(self)
    }
    fn input_dim(&self) -> usize {
        self.p
    }
    fn target_dim(&self) -> usize {
        self.q
    }
    fn input(&self, i: usize) -> &[f64] {
        self.history(i)
    }
    fn target(&self, i: usize) -> &[f64] {
        self.future(i)
    }
}

/// Cuts `values` into `(history, future)` windows.
///
/// Sample `i` covers `values[i*stride .. i*stride + p + q]`, the first `p`
/// points being the history.
pub fn make_windows(values: &[f64], p: usize, q: usize, stride: usize) -> Result<WindowedDataset> {
    if p == 0 || q == 0 || stride == 0 {
        return Err(Error::config(format!(
            "window lengths and stride must be positive (p={p}, q={q}, stride={stride})"
        )));
    }
    if values.len() < p + q {
        return Err(Error::config(format!(
            "series of length {} is too short for windows of p + q = {}: empty dataset",
            values.len(),
            p + q
        )));
    }
    let n = (values.len() - p - q) / stride + 1;
    let mut ds = WindowedDataset {
        p,
        q,
        stride,
        histories: Vec::with_capacity(n * p),
        futures: Vec::with_capacity(n * q),
    };
    for i in 0..n {
        let s = i * stride;
        ds.histories.extend_from_slice(&values[s..s + p]);
        ds.futures.extend_from_slice(&values[s + p..s + p + q]);
    }
    Ok(ds)
}

/// JSON sidecar accompanying a windows CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSidecar {
    pub p: usize,
    pub q: usize,
    pub stride: usize,
    pub normalization: Option<Normalizer>,
}

/// Writes `h1..hp,f1..fq` rows to `path` and the sidecar to
/// `path` with a `.json` extension.
pub fn write_windows(
    path: impl AsRef<Path>,
    ds: &WindowedDataset,
    normalization: Option<Normalizer>,
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let header: Vec<String> = (1..=ds.p)
        .map(|i| format!("h{i}"))
        .chain((1..=ds.q).map(|i| format!("f{i}")))
        .collect();
    w.write_record(&header)?;
    for (h, f) in ds.rows() {
        w.write_record(h.iter().chain(f).map(f64::to_string))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    let sidecar = WindowSidecar {
        p: ds.p,
        q: ds.q,
        stride: ds.stride,
        normalization,
    };
    let side = path.with_extension("json");
    std::fs::write(&side, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&side, e))
}

pub fn read_windows(path: impl AsRef<Path>) -> Result<(WindowedDataset, WindowSidecar)> {
    let path = path.as_ref();
    let side = path.with_extension("json");
    let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let sidecar: WindowSidecar = serde_json::from_str(&text)?;
    let mut ds = WindowedDataset::empty(sidecar.p, sidecar.q);
    ds.stride = sidecar.stride;
    let mut rdr = csv::Reader::from_path(path)?;
    for rec in rdr.records() {
        let rec = rec?;
        let vals = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .map_err(|e| Error::Shape(format!("bad window value: {e}")))?;
        let (h, f) = vals.split_at(sidecar.p.min(vals.len()));
        ds.push(h, f)?;
    }
    Ok((ds, sidecar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn enumerated_windows() {
        let ds = make_windows(&[1.0, 2.0, 3.0, 4.0, 5.0], 2, 2, 1).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!((ds.history(0), ds.future(0)), (&[1.0, 2.0][..], &[3.0, 4.0][..]));
        assert_eq!((ds.history(1), ds.future(1)), (&[2.0, 3.0][..], &[4.0, 5.0][..]));
    }

    #[test]
    fn boundary_lengths() {
        let v: Vec<f64> = (0..7).map(f64::from).collect();
        assert_eq!(make_windows(&v, 3, 4, 1).unwrap().len(), 1);
        assert_eq!(make_windows(&v, 2, 2, 7).unwrap().len(), 1);
        assert!(matches!(make_windows(&v, 4, 4, 1), Err(Error::Config(_))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let ds = make_windows(&[0.1, 0.7, 1.0 / 3.0, 0.9, 0.25], 2, 1, 1).unwrap();
        let norm = Normalizer { min: 1.0, max: 9.0 };
        write_windows(&path, &ds, Some(norm)).unwrap();
        let (back, side) = read_windows(&path).unwrap();
        assert_eq!(back, ds);
        assert_eq!(side.normalization, Some(norm));
    }

    proptest! {
        #[test]
        fn windows_reconstruct_series(
            values in prop::collection::vec(0.0f64..100.0, 2..60),
            p in 1usize..6,
            q in 1usize..6,
            stride in 1usize..4,
        ) {
            prop_assume!(values.len() >= p + q);
            let ds = make_windows(&values, p, q, stride).unwrap();
            prop_assert_eq!(ds.len(), (values.len() - p - q) / stride + 1);
            let mut rebuilt = vec![f64::NAN; values.len()];
            for i in 0..ds.len() {
                let s = i * stride;
                for (k, v) in ds.history(i).iter().chain(ds.future(i)).enumerate() {
                    prop_assert_eq!(*v, values[s + k]);
                    rebuilt[s + k] = *v;
                }
            }
            if stride == 1 {
                prop_assert_eq!(rebuilt, values);
            }
        }
    }
}
