//! Observations, standardization and CSV interchange.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ClsmError, Result};
use crate::scalar::Scalar;

/// A single input vector with its scalar target.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation<T> {
    pub x: Vec<T>,
    pub y: T,
}

/// Per-column affine map to zero mean / unit population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScalingParams<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> ScalingParams<T> {
    pub fn identity(n_vars: usize) -> Self {
        Self {
            mean: vec![T::zero(); n_vars],
            std: vec![T::one(); n_vars],
        }
    }

    /// Fits mean and population std per column. Zero-variance columns get std 1.
    pub fn fit(inputs: ArrayView2<'_, T>) -> Self {
        let s = T::from_count(inputs.nrows().max(1));
        let mut mean = Vec::with_capacity(inputs.ncols());
        let mut std = Vec::with_capacity(inputs.ncols());
        for col in inputs.axis_iter(Axis(1)) {
            let m = col.iter().copied().sum::<T>() / s;
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<T>() / s;
            let sd = var.sqrt();
            mean.push(m);
            std.push(if sd > T::zero() && sd.is_finite() { sd } else { T::one() });
        }
        Self { mean, std }
    }

    pub fn n_vars(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_row(&self, x: ArrayView1<'_, T>) -> Array1<T> {
        Array1::from_iter(
            x.iter()
                .zip(self.mean.iter().zip(&self.std))
                .map(|(&v, (&m, &s))| (v - m) / s),
        )
    }

    pub fn apply(&self, inputs: ArrayView2<'_, T>) -> Array2<T> {
        let mut out = inputs.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
        out
    }

    pub fn invert(&self, standardized: ArrayView2<'_, T>) -> Array2<T> {
        let mut out = standardized.to_owned();
        for mut row in out.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * self.std[j] + self.mean[j];
            }
        }
        out
    }
}

/// `S` observations with a uniform input width `n_v`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Dataset<T> {
    inputs: Array2<T>,
    targets: Array1<T>,
    pub scaling: Option<ScalingParams<T>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(inputs: Array2<T>, targets: Array1<T>) -> Result<Self> {
        if inputs.nrows() == 0 {
            return Err(ClsmError::EmptyDataset);
        }
        if inputs.ncols() == 0 {
            return Err(ClsmError::config("dataset needs at least one input column"));
        }
        if targets.len() != inputs.nrows() {
            return Err(ClsmError::Dimension {
                expected: inputs.nrows(),
                found: targets.len(),
            });
        }
        if let Some((i, _)) = inputs
            .rows()
            .into_iter()
            .zip(targets.iter())
            .enumerate()
            .find(|(_, (row, y))| !y.is_finite() || row.iter().any(|v| !v.is_finite()))
        {
            return Err(ClsmError::NonFinite(format!("observation {i}")));
        }
        Ok(Self {
            inputs,
            targets,
            scaling: None,
        })
    }

    pub fn from_observations(obs: &[Observation<T>]) -> Result<Self> {
        let first = obs.first().ok_or(ClsmError::EmptyDataset)?;
        let n_v = first.x.len();
        let mut inputs = Array2::zeros((obs.len(), n_v));
        for (i, o) in obs.iter().enumerate() {
            if o.x.len() != n_v {
                return Err(ClsmError::Dimension {
                    expected: n_v,
                    found: o.x.len(),
                });
            }
            for (j, &v) in o.x.iter().enumerate() {
                inputs[[i, j]] = v;
            }
        }
        let targets = obs.iter().map(|o| o.y).collect();
        Self::new(inputs, targets)
    }

    pub fn n_obs(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn inputs(&self) -> ArrayView2<'_, T> {
        self.inputs.view()
    }

    pub fn targets(&self) -> ArrayView1<'_, T> {
        self.targets.view()
    }

    pub fn observation(&self, i: usize) -> Observation<T> {
        Observation {
            x: self.inputs.row(i).to_vec(),
            y: self.targets[i],
        }
    }

    /// Inputs mapped through the attached scaling, or fitted on the fly when none is attached.
    pub fn standardized_inputs(&self) -> (Array2<T>, ScalingParams<T>) {
        let params = self
            .scaling
            .clone()
            .unwrap_or_else(|| ScalingParams::fit(self.inputs.view()));
        (params.apply(self.inputs.view()), params)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(ClsmError::EmptyDataset);
        }
        let inputs = self.inputs.select(Axis(0), indices);
        let targets = self.targets.select(Axis(0), indices);
        Ok(Self {
            inputs,
            targets,
            scaling: self.scaling.clone(),
        })
    }

    /// Shuffled split into (train, test) with `round(test_fraction * S)` test rows.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(ClsmError::config(format!(
                "test_fraction must lie in [0, 1), got {test_fraction}"
            )));
        }
        let mut order: Vec<usize> = (0..self.n_obs()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_test = (test_fraction * self.n_obs() as f64).round() as usize;
        let (test, train) = order.split_at(n_test);
        let mut train = train.to_vec();
        let mut test = test.to_vec();
        train.sort_unstable();
        test.sort_unstable();
        Ok((self.subset(&train)?, self.subset(&test)?))
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header = rdr
            .headers()
            .map_err(|e| ClsmError::Parse {
                row: 0,
                message: e.to_string(),
            })?
            .clone();
        let width = header.len();
        if width < 2 {
            return Err(ClsmError::Parse {
                row: 0,
                message: format!("header needs at least one input and the target, got {width} columns"),
            });
        }
        let n_v = width - 1;
        let mut flat = Vec::new();
        let mut targets = Vec::new();
        for (r, record) in rdr.records().enumerate() {
            // row numbers count the header as row 1
            let row = r + 2;
            let record = record.map_err(|e| ClsmError::Parse {
                row,
                message: e.to_string(),
            })?;
            if record.len() != width {
                return Err(ClsmError::Parse {
                    row,
                    message: format!("expected {width} columns, found {}", record.len()),
                });
            }
            for (j, cell) in record.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| ClsmError::Parse {
                    row,
                    message: format!("non-numeric cell {cell:?} in column {}", j + 1),
                })?;
                let v = T::from_f64(v).filter(|v| v.is_finite()).ok_or_else(|| ClsmError::Parse {
                    row,
                    message: format!("non-finite cell {cell:?} in column {}", j + 1),
                })?;
                if j < n_v {
                    flat.push(v);
                } else {
                    targets.push(v);
                }
            }
        }
        if targets.is_empty() {
            return Err(ClsmError::EmptyDataset);
        }
        let inputs = Array2::from_shape_vec((targets.len(), n_v), flat)
            .expect("row-major buffer has S * n_v entries");
        Self::new(inputs, Array1::from(targets))
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = std::io::BufWriter::new(writer);
        let header: Vec<String> = (1..=self.n_vars())
            .map(|j| format!("x{j}"))
            .chain(std::iter::once("y".to_string()))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for (row, y) in self.inputs.rows().into_iter().zip(self.targets.iter()) {
            let mut line = String::new();
            for v in row.iter() {
                line.push_str(&format_float(*v));
                line.push(',');
            }
            line.push_str(&format_float(*y));
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path.as_ref())?)
    }
}

/// Shortest round-trip decimal representation.
pub fn format_float<T: Scalar>(v: T) -> String {
    format!("{:?}", v.to_f64_lossy())
}

/// Returns the standardized dataset together with the parameters used.
pub fn standardize<T: Scalar>(d: &Dataset<T>) -> (Dataset<T>, ScalingParams<T>) {
    let params = ScalingParams::fit(d.inputs());
    let out = Dataset {
        inputs: params.apply(d.inputs()),
        targets: d.targets.clone(),
        scaling: Some(params.clone()),
    };
    (out, params)
}

pub fn load_dataset<T: Scalar>(path: impl AsRef<Path>) -> Result<Dataset<T>> {
    Dataset::load_csv(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn parse(text: &str) -> Result<Dataset<f64>> {
        Dataset::read_csv(text.as_bytes())
    }

    #[test]
    fn loads_two_rows() {
        let d = parse("x1,y\n0,0\n1,2\n").unwrap();
        assert_eq!(d.n_obs(), 2);
        assert_eq!(d.n_vars(), 1);
        assert_eq!(d.observation(1), Observation { x: vec![1.0], y: 2.0 });
    }

    #[test]
    fn header_only_is_empty() {
        assert!(matches!(parse("x1,y\n"), Err(ClsmError::EmptyDataset)));
    }

    #[test]
    fn loads_two_inputs() {
        let d = parse("x1,x2,y\n1,2,3\n4,5,6\n7,8,9\n").unwrap();
        assert_eq!((d.n_obs(), d.n_vars()), (3, 2));
        assert_eq!(d.targets().to_vec(), vec![3.0, 6.0, 9.0]);
    }

    #[test]
    fn bad_cells_name_the_row() {
        match parse("x1,y\n1,2\n3,abc\n") {
            Err(ClsmError::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse("x1,x2,y\n1,2,3\n1,2\n") {
            Err(ClsmError::Parse { row, .. }) => assert_eq!(row, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn standardize_two_points() {
        let d = Dataset::new(array![[0.0], [2.0]], array![5.0, 7.0]).unwrap();
        let (s, p) = standardize(&d);
        assert_eq!(s.inputs().column(0).to_vec(), vec![-1.0, 1.0]);
        assert_eq!(p.mean, vec![1.0]);
        assert_eq!(p.std, vec![1.0]);
        assert_eq!(s.targets(), d.targets());
    }

    #[test]
    fn constant_column_gets_unit_std() {
        let d = Dataset::new(array![[5.0], [5.0], [5.0]], array![1.0, 2.0, 3.0]).unwrap();
        let (s, p) = standardize(&d);
        assert_eq!(s.inputs().column(0).to_vec(), vec![0.0; 3]);
        assert_eq!(p.std, vec![1.0]);
    }

    #[test]
    fn standardizing_twice_is_idempotent() {
        let d = Dataset::<f64>::new(array![[1.0, -3.0], [2.0, 0.5], [7.0, 4.0]], array![0.0, 0.0, 0.0]).unwrap();
        let (once, _) = standardize(&d);
        let (twice, _) = standardize(&once);
        for (a, b) in once.inputs().iter().zip(twice.inputs().iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_write_read_preserves_values() {
        let d = Dataset::new(array![[0.1, 1e-17], [-2.5, 3.0]], array![0.3, -1.0 / 3.0]).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("x1,x2,y\n"));
        let back: Dataset<f64> = Dataset::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn split_partitions_rows() {
        let d = Dataset::new(Array2::from_shape_fn((10, 1), |(i, _)| i as f64), Array1::zeros(10)).unwrap();
        let (train, test) = d.split(0.4, 3).unwrap();
        assert_eq!((train.n_obs(), test.n_obs()), (6, 4));
        let mut all: Vec<f64> = train.inputs().iter().chain(test.inputs().iter()).copied().collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Dataset::new(array![[f64::NAN]], array![1.0]).is_err());
    }
}
