//! Datasets: synthetic generators, CSV ingestion, splits, feature scaling and
//! regression metrics.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TmpnnError};

/// Feature matrix `x` (N×n) and target matrix `y` (N×m) with column names.
///
/// `m` may be zero for feature-only files fed to prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub feature_names: Vec<String>,
    pub target_names: Vec<String>,
}

impl Dataset {
    pub fn new(
        x: Array2<f64>,
        y: Array2<f64>,
        feature_names: Vec<String>,
        target_names: Vec<String>,
    ) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(TmpnnError::EmptyDataset);
        }
        if y.nrows() != x.nrows() {
            return Err(TmpnnError::DimensionMismatch {
                what: "target rows",
                expected: x.nrows(),
                found: y.nrows(),
            });
        }
        if feature_names.len() != x.ncols() {
            return Err(TmpnnError::DimensionMismatch {
                what: "feature names",
                expected: x.ncols(),
                found: feature_names.len(),
            });
        }
        if target_names.len() != y.ncols() {
            return Err(TmpnnError::DimensionMismatch {
                what: "target names",
                expected: y.ncols(),
                found: target_names.len(),
            });
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(TmpnnError::NonFinite("dataset"));
        }
        Ok(Self {
            x,
            y,
            feature_names,
            target_names,
        })
    }

    /// Unnamed dataset; columns are called `x1.., y1..`.
    pub fn from_arrays(x: Array2<f64>, y: Array2<f64>) -> Result<Self> {
        let f = (1..=x.ncols()).map(|i| format!("x{i}")).collect();
        let t = (1..=y.ncols()).map(|i| format!("y{i}")).collect();
        Self::new(x, y, f, t)
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.x.ncols()
    }

    pub fn n_targets(&self) -> usize {
        self.y.ncols()
    }

    /// Rows in the given order. Panics on an out-of-range index.
    pub fn select(&self, rows: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            feature_names: self.feature_names.clone(),
            target_names: self.target_names.clone(),
        }
    }

    /// Looks a column up by name among features first, then targets.
    pub fn column(&self, name: &str) -> Result<ArrayView1<'_, f64>> {
        if let Some(i) = self.feature_names.iter().position(|n| n == name) {
            return Ok(self.x.column(i));
        }
        if let Some(i) = self.target_names.iter().position(|n| n == name) {
            return Ok(self.y.column(i));
        }
        Err(TmpnnError::UnknownColumn {
            name: name.to_string(),
            available: self
                .feature_names
                .iter()
                .chain(&self.target_names)
                .cloned()
                .collect(),
        })
    }

    /// Writes the dataset as comma-separated values with a header; features
    /// first, then targets.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.feature_names.iter().chain(&self.target_names))?;
        for (xr, yr) in self.x.rows().into_iter().zip(self.y.rows()) {
            w.write_record(xr.iter().chain(yr.iter()).map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Friedman-1: five informative `U(0,1)` features plus `n_unimportant`
/// extra `U(0,1)` columns, with
/// `y = 10 sin(π x1 x2) + 20 (x3 − 0.5)² + 10 x4 + 5 x5 + noise_std · ε`,
/// `ε ~ N(0,1)`.
pub fn gen_friedman1(
    n_samples: usize,
    n_unimportant: usize,
    noise_std: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_samples == 0 {
        return Err(TmpnnError::EmptyDataset);
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(TmpnnError::invalid("noise_std must be finite and >= 0"));
    }
    let n = 5 + n_unimportant;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n_samples, n));
    let mut y = Array2::zeros((n_samples, 1));
    for i in 0..n_samples {
        for j in 0..n {
            x[[i, j]] = rng.random::<f64>();
        }
        let eps: f64 = rng.sample(StandardNormal);
        y[[i, 0]] = friedman1(x.row(i)) + noise_std * eps;
    }
    let names = (1..=n).map(|i| format!("x{i}")).collect();
    Dataset::new(x, y, names, vec!["y".into()])
}

/// Noise-free Friedman-1 response of the first five entries of `x`.
pub fn friedman1(x: ArrayView1<f64>) -> f64 {
    10.0 * (PI * x[0] * x[1]).sin()
        + 20.0 * (x[2] - 0.5).powi(2)
        + 10.0 * x[3]
        + 5.0 * x[4]
}

/// `y = x + ε`, `x ~ U(lo, hi)`, `ε ~ U(−0.25, 0.25)`.
pub fn gen_noisy_linear(n_samples: usize, x_range: (f64, f64), seed: u64) -> Result<Dataset> {
    let (lo, hi) = x_range;
    if lo >= hi || !lo.is_finite() || !hi.is_finite() {
        return Err(TmpnnError::invalid("x_range must satisfy lo < hi"));
    }
    if n_samples == 0 {
        return Err(TmpnnError::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Array2::zeros((n_samples, 1));
    let mut y = Array2::zeros((n_samples, 1));
    for i in 0..n_samples {
        let xi = rng.random_range(lo..hi);
        x[[i, 0]] = xi;
        y[[i, 0]] = xi + rng.random_range(-0.25..=0.25);
    }
    Dataset::new(x, y, vec!["x".into()], vec!["y".into()])
}

/// Which columns of a CSV file are targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSpec {
    Names(Vec<String>),
    /// The last `n` columns.
    Trailing(usize),
}

impl TargetSpec {
    /// Parses `name[,name...]`, or a bare integer meaning a trailing count.
    pub fn parse(s: &str) -> Self {
        match s.trim().parse::<usize>() {
            Ok(n) => TargetSpec::Trailing(n),
            Err(_) => TargetSpec::Names(s.split(',').map(|p| p.trim().to_string()).collect()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Delimiter {
    Byte(u8),
    Whitespace,
}

fn detect_delimiter(line: &str) -> Delimiter {
    if line.contains(';') {
        Delimiter::Byte(b';')
    } else if line.contains(',') {
        Delimiter::Byte(b',')
    } else if line.contains('\t') {
        Delimiter::Byte(b'\t')
    } else {
        Delimiter::Whitespace
    }
}

fn read_records(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let file = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for (i, line) in file.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((i + 1, line));
        }
    }
    let Some((_, first)) = lines.first() else {
        return Err(TmpnnError::EmptyDataset);
    };
    match detect_delimiter(first) {
        Delimiter::Whitespace => Ok(lines
            .into_iter()
            .map(|(n, l)| (n, l.split_whitespace().map(str::to_string).collect()))
            .collect()),
        Delimiter::Byte(b) => {
            let mut out = Vec::with_capacity(lines.len());
            for (n, l) in lines {
                let mut rdr = csv::ReaderBuilder::new()
                    .has_headers(false)
                    .delimiter(b)
                    .trim(csv::Trim::All)
                    .from_reader(l.as_bytes());
                let rec = rdr.records().next().transpose()?.unwrap_or_default();
                out.push((n, rec.iter().map(str::to_string).collect()));
            }
            Ok(out)
        }
    }
}

/// Reads a numeric table. A first row containing any non-numeric cell is
/// treated as a header; otherwise columns are named `c1, c2, …`. The
/// delimiter (comma, semicolon, tab or whitespace) is detected from the
/// first line. Column order is preserved within features and targets.
pub fn load_csv(path: impl AsRef<Path>, targets: &TargetSpec) -> Result<Dataset> {
    let records = read_records(path.as_ref())?;
    let (_, first) = &records[0];
    let has_header = first.iter().any(|c| c.parse::<f64>().is_err());
    let width = first.len();
    let (names, body): (Vec<String>, &[(usize, Vec<String>)]) = if has_header {
        (first.clone(), &records[1..])
    } else {
        ((1..=width).map(|i| format!("c{i}")).collect(), &records[..])
    };
    if body.is_empty() {
        return Err(TmpnnError::EmptyDataset);
    }

    let target_idx: Vec<usize> = match targets {
        TargetSpec::Trailing(n) => {
            if *n > width {
                return Err(TmpnnError::invalid(format!(
                    "requested {n} trailing targets but the file has {width} columns"
                )));
            }
            (width - n..width).collect()
        }
        TargetSpec::Names(list) => list
            .iter()
            .map(|t| {
                names
                    .iter()
                    .position(|n| n == t)
                    .ok_or_else(|| TmpnnError::UnknownColumn {
                        name: t.clone(),
                        available: names.clone(),
                    })
            })
            .collect::<Result<_>>()?,
    };
    let feature_idx: Vec<usize> = (0..width).filter(|i| !target_idx.contains(i)).collect();

    let mut table = Array2::zeros((body.len(), width));
    for (r, (line_no, rec)) in body.iter().enumerate() {
        if rec.len() != width {
            return Err(TmpnnError::Parse {
                row: *line_no,
                column: rec.len().min(width) + 1,
                message: format!("expected {width} fields, found {}", rec.len()),
            });
        }
        for (c, cell) in rec.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| TmpnnError::Parse {
                row: *line_no,
                column: c + 1,
                message: if cell.is_empty() {
                    "missing value".into()
                } else {
                    format!("`{cell}` is not a number")
                },
            })?;
            if !v.is_finite() {
                return Err(TmpnnError::Parse {
                    row: *line_no,
                    column: c + 1,
                    message: format!("`{cell}` is not finite"),
                });
            }
            table[[r, c]] = v;
        }
    }
    let pick = |idx: &[usize]| idx.iter().map(|&i| names[i].clone()).collect::<Vec<_>>();
    Dataset::new(
        table.select(Axis(1), &feature_idx),
        table.select(Axis(1), &target_idx),
        pick(&feature_idx),
        pick(&target_idx),
    )
}

/// Writes a matrix with a header row as comma-separated values.
pub fn write_matrix_csv(
    mut out: impl Write,
    names: &[String],
    values: ArrayView2<f64>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(names)?;
    for row in values.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Shuffled train/test split. The test part holds `round(N · test_fraction)`
/// rows; both parts keep the original row order.
pub fn split_random(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_random_indices(dataset.len(), test_fraction, seed)?;
    Ok((dataset.select(&train), dataset.select(&test)))
}

pub fn split_random_indices(
    n: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(TmpnnError::invalid("test fraction must lie in (0, 1)"));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (n as f64 * test_fraction).round() as usize;
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(values: ArrayView1<f64>, q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Extrapolation split: rows whose `column` value is strictly above the
/// empirical `q`-quantile of that column form the test set.
pub fn split_quantile(dataset: &Dataset, column: &str, q: f64) -> Result<(Dataset, Dataset)> {
    if !(q > 0.0 && q < 1.0) {
        return Err(TmpnnError::invalid("quantile must lie in (0, 1)"));
    }
    let col = dataset.column(column)?;
    let threshold = quantile(col, q);
    split_threshold_on(dataset, col, threshold)
}

/// Test set = rows with `column > threshold`.
pub fn split_threshold(
    dataset: &Dataset,
    column: &str,
    threshold: f64,
) -> Result<(Dataset, Dataset)> {
    let col = dataset.column(column)?;
    split_threshold_on(dataset, col, threshold)
}

fn split_threshold_on(
    dataset: &Dataset,
    col: ArrayView1<f64>,
    threshold: f64,
) -> Result<(Dataset, Dataset)> {
    let (test, train): (Vec<usize>, Vec<usize>) = (0..dataset.len()).partition(|&i| col[i] > threshold);
    if test.is_empty() || train.is_empty() {
        return Err(TmpnnError::invalid(format!(
            "threshold {threshold} leaves an empty side ({} train, {} test)",
            train.len(),
            test.len()
        )));
    }
    Ok((dataset.select(&train), dataset.select(&test)))
}

/// Per-feature z-score parameters. `scale` entries are strictly positive;
/// a constant column gets scale 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Scaler {
    pub fn fit(x: ArrayView2<f64>) -> Self {
        let n = x.nrows() as f64;
        let mean: Array1<f64> = x.sum_axis(Axis(0)) / n;
        let scale = x
            .columns()
            .into_iter()
            .zip(mean.iter())
            .map(|(c, m)| {
                let var = c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
                let s = var.sqrt();
                if s > 0.0 && s.is_finite() {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self {
            mean: mean.to_vec(),
            scale,
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        if self.mean.len() != n_features || self.scale.len() != n_features {
            return Err(TmpnnError::DimensionMismatch {
                what: "scaler width",
                expected: n_features,
                found: self.mean.len().max(self.scale.len()),
            });
        }
        if self.scale.iter().any(|s| !(*s > 0.0 && s.is_finite()))
            || self.mean.iter().any(|m| !m.is_finite())
        {
            return Err(TmpnnError::invalid("scaler entries must be finite with scale > 0"));
        }
        Ok(())
    }

    pub fn transform_into(&self, x: ArrayView1<f64>, out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x.iter()).zip(&self.mean).zip(&self.scale) {
            *o = (v - m) / s;
        }
    }

    pub fn transform(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = x.to_owned();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.scale) {
                *v = (*v - m) / s;
            }
        }
        out
    }
}

fn check_shapes(y_true: &ArrayView2<f64>, y_pred: &ArrayView2<f64>) -> Result<()> {
    if y_true.dim() != y_pred.dim() {
        return Err(TmpnnError::DimensionMismatch {
            what: "prediction shape (rows*cols)",
            expected: y_true.len(),
            found: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(TmpnnError::EmptyDataset);
    }
    Ok(())
}

/// Mean squared error over all entries.
pub fn metric_mse(y_true: ArrayView2<f64>, y_pred: ArrayView2<f64>) -> Result<f64> {
    check_shapes(&y_true, &y_pred)?;
    let sse: f64 = y_true
        .iter()
        .zip(y_pred.iter())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    Ok(sse / y_true.len() as f64)
}

/// R² for each target column.
pub fn metric_r2_per_target(
    y_true: ArrayView2<f64>,
    y_pred: ArrayView2<f64>,
) -> Result<Vec<f64>> {
    check_shapes(&y_true, &y_pred)?;
    y_true
        .columns()
        .into_iter()
        .zip(y_pred.columns())
        .enumerate()
        .map(|(j, (t, p))| {
            let mean = t.sum() / t.len() as f64;
            let ss_tot: f64 = t.iter().map(|v| (v - mean).powi(2)).sum();
            if ss_tot == 0.0 {
                return Err(TmpnnError::UndefinedR2 { column: j });
            }
            let ss_res: f64 = t.iter().zip(p.iter()).map(|(a, b)| (a - b).powi(2)).sum();
            Ok(1.0 - ss_res / ss_tot)
        })
        .collect()
}

/// Uniform average of per-target R².
pub fn metric_r2(y_true: ArrayView2<f64>, y_pred: ArrayView2<f64>) -> Result<f64> {
    let per = metric_r2_per_target(y_true, y_pred)?;
    Ok(per.iter().sum::<f64>() / per.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array};

    #[test]
    fn friedman_formula_points() {
        let v = friedman1(array![0.5, 0.5, 0.5, 0.5, 0.5].view());
        assert!((v - 14.571067811865476).abs() < 1e-12);
        let v = friedman1(array![0.0, 0.9, 0.5, 0.0, 0.0].view());
        assert_eq!(v, 0.0);
    }

    #[test]
    fn friedman_generator_shape_and_determinism() {
        let a = gen_friedman1(200, 3, 0.0, 42).unwrap();
        let b = gen_friedman1(200, 3, 0.0, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_features(), 8);
        assert_eq!(a.n_targets(), 1);
        assert!(a.x.iter().all(|v| (0.0..1.0).contains(v)));
        for i in 0..a.len() {
            assert_eq!(a.y[[i, 0]], friedman1(a.x.row(i)));
        }
        let c = gen_friedman1(200, 3, 0.0, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn friedman_noise_is_standard_normal_scaled() {
        let d = gen_friedman1(20_000, 0, 2.0, 5).unwrap();
        let res: Vec<f64> = (0..d.len()).map(|i| d.y[[i, 0]] - friedman1(d.x.row(i))).collect();
        let mean = res.iter().sum::<f64>() / res.len() as f64;
        let var = res.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / res.len() as f64;
        assert!(mean.abs() < 0.05);
        assert!((var.sqrt() - 2.0).abs() < 0.05);
    }

    #[test]
    fn noisy_linear_bounds() {
        let d = gen_noisy_linear(100_000, (-1.0, 1.0), 9).unwrap();
        let mut sum = 0.0;
        for i in 0..d.len() {
            let r = d.y[[i, 0]] - d.x[[i, 0]];
            assert!(r.abs() <= 0.25);
            assert!((-1.0..1.0).contains(&d.x[[i, 0]]));
            sum += r;
        }
        assert!((sum / d.len() as f64).abs() < 0.01);
        assert_eq!(d, gen_noisy_linear(100_000, (-1.0, 1.0), 9).unwrap());
        assert!(gen_noisy_linear(10, (1.0, 1.0), 0).is_err());
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn csv_whitespace_without_header() {
        let f = write_tmp("1.5 2\n-3   4e-3\n0.125\t7\n");
        let d = load_csv(f.path(), &TargetSpec::Trailing(1)).unwrap();
        assert_eq!(d.x, array![[1.5], [-3.0], [0.125]]);
        assert_eq!(d.y, array![[2.0], [4e-3], [7.0]]);
        assert_eq!(d.feature_names, vec!["c1"]);
        assert_eq!(d.target_names, vec!["c2"]);
    }

    #[test]
    fn csv_header_and_named_targets() {
        let f = write_tmp("a;b;c\n1;2;3\n4;5;6\n");
        let d = load_csv(f.path(), &TargetSpec::Names(vec!["b".into()])).unwrap();
        assert_eq!(d.feature_names, vec!["a", "c"]);
        assert_eq!(d.x, array![[1.0, 3.0], [4.0, 6.0]]);
        assert_eq!(d.y, array![[2.0], [5.0]]);

        let err = load_csv(f.path(), &TargetSpec::Names(vec!["z".into()])).unwrap_err();
        match err {
            TmpnnError::UnknownColumn { available, .. } => assert_eq!(available, vec!["a", "b", "c"]),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn csv_errors() {
        let f = write_tmp("a,b\n");
        assert!(matches!(
            load_csv(f.path(), &TargetSpec::Trailing(1)),
            Err(TmpnnError::EmptyDataset)
        ));
        let f = write_tmp("a,b\n1,2\n3,oops\n");
        match load_csv(f.path(), &TargetSpec::Trailing(1)).unwrap_err() {
            TmpnnError::Parse { row, column, .. } => assert_eq!((row, column), (3, 2)),
            e => panic!("{e:?}"),
        }
        let f = write_tmp("a,b\n1,2\n3,\n");
        assert!(matches!(
            load_csv(f.path(), &TargetSpec::Trailing(1)),
            Err(TmpnnError::Parse { row: 3, column: 2, .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let d = gen_friedman1(17, 1, 0.3, 1).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        d.write_csv(f.path()).unwrap();
        let back = load_csv(f.path(), &TargetSpec::Names(vec!["y".into()])).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn random_split_sizes_and_determinism() {
        let d = gen_noisy_linear(100, (0.0, 1.0), 2).unwrap();
        let (tr, te) = split_random(&d, 0.25, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (75, 25));
        let (tr2, te2) = split_random(&d, 0.25, 7).unwrap();
        assert_eq!((tr, te), (tr2, te2));

        let (a, b) = split_random_indices(1000, 0.3, 3).unwrap();
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1000).collect::<Vec<_>>());
        assert!(split_random_indices(10, 0.0, 1).is_err());
        assert!(split_random_indices(10, 1.0, 1).is_err());
    }

    #[test]
    fn quantile_split_partitions() {
        let d = gen_friedman1(4000, 0, 0.0, 8).unwrap();
        let (tr, te) = split_quantile(&d, "x3", 0.75).unwrap();
        assert_eq!(tr.len() + te.len(), d.len());
        let frac = te.len() as f64 / d.len() as f64;
        assert!((frac - 0.25).abs() < 0.01);
        let thr = quantile(d.x.column(2), 0.75);
        assert!(te.x.column(2).iter().all(|v| *v > thr));
        assert!(tr.x.column(2).iter().all(|v| *v <= thr));
        // Targets can be split columns too.
        let (_, te_y) = split_quantile(&d, "y", 0.75).unwrap();
        assert!((te_y.len() as f64 / d.len() as f64 - 0.25).abs() < 0.01);
        assert!(matches!(
            split_quantile(&d, "nope", 0.5),
            Err(TmpnnError::UnknownColumn { .. })
        ));
    }

    #[test]
    fn quantile_interpolates() {
        let v = array![4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(v.view(), 0.5), 2.5);
        assert_eq!(quantile(v.view(), 0.75), 3.25);
    }

    #[test]
    fn metrics() {
        let t = array![[0.0], [1.0]];
        let p = array![[0.5], [0.5]];
        assert_eq!(metric_mse(t.view(), p.view()).unwrap(), 0.25);
        assert_eq!(metric_r2(t.view(), p.view()).unwrap(), 0.0);
        assert_eq!(metric_mse(t.view(), t.view()).unwrap(), 0.0);
        assert_eq!(metric_r2(t.view(), t.view()).unwrap(), 1.0);

        let c = array![[2.0], [2.0]];
        assert!(matches!(
            metric_r2(c.view(), p.view()),
            Err(TmpnnError::UndefinedR2 { column: 0 })
        ));
    }

    #[test]
    fn r2_mean_predictor_is_zero_and_averages_targets() {
        let t = Array::from_shape_fn((50, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
        let means = t.mean_axis(Axis(0)).unwrap();
        let p = Array::from_shape_fn((50, 2), |(_, j)| means[j]);
        assert!(metric_r2(t.view(), p.view()).unwrap().abs() < 1e-12);

        let mut p2 = t.clone();
        p2.column_mut(1).assign(&p.column(1));
        let per = metric_r2_per_target(t.view(), p2.view()).unwrap();
        assert_eq!(per[0], 1.0);
        assert!(per[1].abs() < 1e-12);
        assert!((metric_r2(t.view(), p2.view()).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn scaler_standardizes() {
        let x = array![[1.0, 5.0], [3.0, 5.0], [5.0, 5.0]];
        let s = Scaler::fit(x.view());
        assert_eq!(s.mean, vec![3.0, 5.0]);
        assert_eq!(s.scale[1], 1.0);
        let z = s.transform(x.view());
        assert!((z.column(0).sum()).abs() < 1e-12);
        assert!((z.column(0).mapv(|v| v * v).sum() / 3.0 - 1.0).abs() < 1e-12);
        s.validate(2).unwrap();
        assert!(s.validate(3).is_err());
    }
}
