//! Labelled datasets: CSV and LIBSVM-style loading, a synthetic generator
//! and same-class distance statistics.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::OnceLock;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Norm used for point-to-point distances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistNorm {
    L1,
    L2,
    LInf,
}

impl DistNorm {
    fn index(self) -> usize {
        match self {
            DistNorm::L1 => 0,
            DistNorm::L2 => 1,
            DistNorm::LInf => 2,
        }
    }

    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        let diffs = a.iter().zip(b).map(|(p, q)| (p - q).abs());
        match self {
            DistNorm::L1 => diffs.sum(),
            DistNorm::L2 => diffs.map(|v| v * v).sum::<f64>().sqrt(),
            DistNorm::LInf => diffs.fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    /// Feature rows, `x[i][k]`.
    pub x: Vec<Vec<f64>>,
    /// Labels, each exactly -1.0 or +1.0.
    pub y: Vec<f64>,
    pub name: String,
    distances: [OnceLock<Vec<f64>>; 3],
}

impl Dataset {
    /// Build a dataset, checking that labels are +-1, both classes occur,
    /// `n >= 2`, `d >= 1` and all features are finite.
    pub fn new(x: Vec<Vec<f64>>, y: Vec<f64>, name: impl Into<String>) -> Result<Dataset> {
        let ds = Dataset::new_relaxed(x, y, name)?;
        if ds.n() < 2 {
            return Err(Error::InvalidDataset(format!("need n >= 2, got {}", ds.n())));
        }
        if !ds.y.contains(&1.0) || !ds.y.contains(&-1.0) {
            return Err(Error::InvalidDataset("both classes must be nonempty".into()));
        }
        Ok(ds)
    }

    /// Like [`Dataset::new`] but accepts a single point or a single class.
    /// The optimization code handles such degenerate inputs.
    pub fn new_relaxed(x: Vec<Vec<f64>>, y: Vec<f64>, name: impl Into<String>) -> Result<Dataset> {
        if x.is_empty() {
            return Err(Error::NoRows);
        }
        if x.len() != y.len() {
            return Err(Error::Dimension(format!("{} rows but {} labels", x.len(), y.len())));
        }
        let d = x[0].len();
        if d == 0 {
            return Err(Error::InvalidDataset("need d >= 1".into()));
        }
        for (i, row) in x.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Dimension(format!(
                    "row {} has {} features, expected {d}",
                    i + 1,
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("row {} has a non-finite feature", i + 1)));
            }
            if y[i] != 1.0 && y[i] != -1.0 {
                return Err(Error::InvalidLabel {
                    row: i + 1,
                    label: y[i].to_string(),
                });
            }
        }
        Ok(Dataset {
            x,
            y,
            name: name.into(),
            distances: Default::default(),
        })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn d(&self) -> usize {
        self.x[0].len()
    }

    /// Indices of the instances with label `label`.
    pub fn class_indices(&self, label: f64) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.y[i] == label).collect()
    }

    /// Largest distance from `x_i` to a point of the same class (`j = i`
    /// included, so a singleton class gives 0).
    pub fn same_class_max_distance(&self, i: usize, norm: DistNorm) -> f64 {
        self.same_class_max_distances(norm)[i]
    }

    /// [`Dataset::same_class_max_distance`] for every instance, computed once
    /// per norm.
    pub fn same_class_max_distances(&self, norm: DistNorm) -> &[f64] {
        self.distances[norm.index()].get_or_init(|| {
            let n = self.n();
            let mut out = vec![0.0f64; n];
            for i in 0..n {
                for j in (i + 1)..n {
                    if self.y[i] == self.y[j] {
                        let dist = norm.distance(&self.x[i], &self.x[j]);
                        out[i] = out[i].max(dist);
                        out[j] = out[j].max(dist);
                    }
                }
            }
            out
        })
    }

    /// Affinely map every feature onto `[-1, 1]` (constant features become 0).
    pub fn scale_to_unit_box(&self) -> Dataset {
        let d = self.d();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for row in &self.x {
            for k in 0..d {
                lo[k] = lo[k].min(row[k]);
                hi[k] = hi[k].max(row[k]);
            }
        }
        let x = self
            .x
            .iter()
            .map(|row| {
                (0..d)
                    .map(|k| {
                        let span = hi[k] - lo[k];
                        if span > 0.0 {
                            2.0 * (row[k] - lo[k]) / span - 1.0
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();
        Dataset {
            x,
            y: self.y.clone(),
            name: self.name.clone(),
            distances: Default::default(),
        }
    }
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.x == other.x && self.y == other.y && self.name == other.name
    }
}

fn parse_label(field: &str, row: usize) -> Result<f64> {
    match field.trim().parse::<f64>() {
        Ok(v) if v == 1.0 || v == -1.0 => Ok(v),
        _ => Err(Error::InvalidLabel {
            row,
            label: field.trim().to_string(),
        }),
    }
}

fn name_from(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Read a comma-separated file with the label in column `label_column`
/// (0-based). A first line whose fields are all non-numeric is skipped as a
/// header; lines starting with `#` are comments. Rows are reported 1-based
/// by file line.
pub fn load_csv(path: &Path, label_column: usize) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(file);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut width = None;
    for (idx, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row = rec.position().map(|p| p.line() as usize).unwrap_or(idx + 1);
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        if x.is_empty() && width.is_none() && rec.iter().all(|f| f.parse::<f64>().is_err()) {
            width = Some(rec.len());
            continue;
        }
        if label_column >= rec.len() {
            return Err(Error::Parse {
                row,
                column: label_column + 1,
                message: "missing label field".into(),
            });
        }
        if let Some(w) = width {
            if rec.len() != w {
                return Err(Error::Parse {
                    row,
                    column: rec.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", rec.len()),
                });
            }
        }
        width = Some(rec.len());
        let label = parse_label(&rec[label_column], row)?;
        let mut features = Vec::with_capacity(rec.len() - 1);
        for (c, field) in rec.iter().enumerate() {
            if c == label_column {
                continue;
            }
            let v = field.parse::<f64>().map_err(|_| Error::Parse {
                row,
                column: c + 1,
                message: format!("not a number: {field:?}"),
            })?;
            features.push(v);
        }
        x.push(features);
        y.push(label);
    }
    if x.is_empty() {
        return Err(Error::NoRows);
    }
    Dataset::new(x, y, name_from(path))
}

/// Write a headerless CSV with the label first and features in index order.
/// Floats use the shortest representation that round-trips.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for (row, label) in ds.x.iter().zip(&ds.y) {
        let mut fields = Vec::with_capacity(row.len() + 1);
        fields.push(format!("{}", *label as i32));
        fields.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&fields)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Parse LIBSVM-style lines `label idx:val idx:val ...` (1-based, strictly
/// increasing indices). The dimension is the largest index seen.
pub fn parse_sparse(text: &str, name: &str) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut y = Vec::new();
    let mut d = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let label = parse_label(parts.next().unwrap_or(""), line_no)?;
        let mut entries = Vec::new();
        let mut last = 0usize;
        for (c, tok) in parts.enumerate() {
            let bad = |message: String| Error::Parse {
                row: line_no,
                column: c + 2,
                message,
            };
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| bad(format!("expected index:value, found {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| bad(format!("bad index {idx:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| bad(format!("not a number: {val:?}")))?;
            if idx == 0 {
                return Err(bad("indices are 1-based".into()));
            }
            if idx <= last {
                return Err(Error::IndicesNotIncreasing { line: line_no });
            }
            last = idx;
            d = d.max(idx);
            entries.push((idx - 1, val));
        }
        rows.push(entries);
        y.push(label);
    }
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    let d = d.max(1);
    let x = rows
        .into_iter()
        .map(|entries| {
            let mut row = vec![0.0; d];
            for (k, v) in entries {
                row[k] = v;
            }
            row
        })
        .collect();
    Dataset::new_relaxed(x, y, name)
}

/// Read a LIBSVM-style file, see [`parse_sparse`].
pub fn load_sparse(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(|e| Error::io(path, e))?);
        text.push('\n');
    }
    let ds = parse_sparse(&text, &name_from(path))?;
    Dataset::new(ds.x, ds.y, ds.name)
}

/// Parameters of the two-cloud synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n: usize,
    pub d: usize,
    /// Fraction of the points labelled +1 before outliers are applied.
    pub class_balance: f64,
    /// Fraction of labels flipped, `ceil(outlier_rate * n)` points.
    pub outlier_rate: f64,
    /// Distance between the two cloud centres along the first axis.
    pub separation: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.n < 4 {
            return bad("synthetic n must be >= 4");
        }
        if self.d < 1 {
            return bad("synthetic d must be >= 1");
        }
        if !(self.class_balance > 0.0 && self.class_balance < 1.0) {
            return bad("class_balance must be in (0, 1)");
        }
        if !(0.0..=1.0).contains(&self.outlier_rate) {
            return bad("outlier_rate must be in [0, 1]");
        }
        if !(self.separation > 0.0 && self.separation.is_finite()) {
            return bad("separation must be > 0");
        }
        Ok(())
    }
}

/// Two unit-variance Gaussian clouds centred at `+-separation/2` on the
/// first axis. The first coordinate of each clean point is drawn from its
/// cloud conditioned on lying on the class side of `x_1 = 0`, so the data
/// are linearly separable before labels are flipped.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_pos = ((spec.n as f64 * spec.class_balance).floor() as usize).clamp(1, spec.n - 1);
    let mut labels: Vec<f64> = (0..spec.n).map(|i| if i < n_pos { 1.0 } else { -1.0 }).collect();
    // interleave the classes deterministically
    for i in (1..spec.n).rev() {
        let j = rng.random_range(0..=i);
        labels.swap(i, j);
    }
    let half = spec.separation / 2.0;
    let mut x = Vec::with_capacity(spec.n);
    for &label in &labels {
        let mut row = Vec::with_capacity(spec.d);
        let first = loop {
            let v = label * half + rng.sample::<f64, _>(StandardNormal);
            if v * label > 0.0 {
                break v;
            }
        };
        row.push(first);
        for _ in 1..spec.d {
            row.push(rng.sample::<f64, _>(StandardNormal));
        }
        x.push(row);
    }
    let n_flip = (spec.outlier_rate * spec.n as f64 - 1e-9).ceil().max(0.0) as usize;
    for i in sample(&mut rng, spec.n, n_flip.min(spec.n)) {
        labels[i] = -labels[i];
    }
    let name = format!(
        "synthetic_n{}_d{}_s{}",
        spec.n, spec.d, spec.seed
    );
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(Error::InvalidArgument("synthetic spec produced a single class".into()));
    }
    Dataset::new(x, labels, name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn example1_raw() -> Dataset {
        Dataset::new(
            vec![
                vec![-2.0, 1.0],
                vec![-1.0, -1.0],
                vec![-5.0, -3.0],
                vec![1.0, 3.0],
                vec![1.0, 0.0],
            ],
            vec![1.0, 1.0, -1.0, -1.0, -1.0],
            "example1_raw",
        )
        .unwrap()
    }

    fn write_tmp(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn distances_on_raw_points() {
        let ds = example1_raw();
        assert_eq!(ds.same_class_max_distance(2, DistNorm::LInf), 6.0);
        assert_eq!(ds.same_class_max_distance(0, DistNorm::L1), 3.0);
        assert!((ds.same_class_max_distance(2, DistNorm::L2) - 72f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn singleton_class_distance_is_zero() {
        let ds = Dataset::new(
            vec![vec![0.0], vec![1.0], vec![3.0]],
            vec![1.0, -1.0, -1.0],
            "t",
        )
        .unwrap();
        assert_eq!(ds.same_class_max_distance(0, DistNorm::L2), 0.0);
        assert_eq!(ds.same_class_max_distance(1, DistNorm::L1), 2.0);
    }

    #[test]
    fn csv_label_first() {
        let f = write_tmp("1,-2,1\n1,-1,-1\n-1,-5,-3\n-1,1,3\n-1,1,0\n");
        let ds = load_csv(f.path(), 0).unwrap();
        assert_eq!((ds.n(), ds.d()), (5, 2));
        assert_eq!(ds, Dataset { name: ds.name.clone(), ..example1_raw() });
    }

    #[test]
    fn csv_with_header_and_label_last() {
        let f = write_tmp("a,b,label\n0.5,2,+1\n1,1,-1\n");
        let ds = load_csv(f.path(), 2).unwrap();
        assert_eq!(ds.x, vec![vec![0.5, 2.0], vec![1.0, 1.0]]);
        assert_eq!(ds.y, vec![1.0, -1.0]);
    }

    #[test]
    fn csv_errors() {
        let f = write_tmp("");
        assert!(matches!(load_csv(f.path(), 0), Err(Error::NoRows)));
        let f = write_tmp("1,0\n-1,1\n0,2\n");
        match load_csv(f.path(), 0) {
            Err(Error::InvalidLabel { row, .. }) => assert_eq!(row, 3),
            other => panic!("{other:?}"),
        }
        let f = write_tmp("1,0\n-1,x\n");
        match load_csv(f.path(), 0) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column), (2, 2)),
            other => panic!("{other:?}"),
        }
        let err = load_csv(Path::new("/nonexistent/file.csv"), 0).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/file.csv"));
    }

    #[test]
    fn csv_round_trip() {
        let ds = Dataset::new(
            vec![vec![0.1, 1e-17], vec![-3.3333333333333335, 2.0]],
            vec![1.0, -1.0],
            "rt",
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, f.path()).unwrap();
        let back = load_csv(f.path(), 0).unwrap();
        assert_eq!(back.x, ds.x);
        assert_eq!(back.y, ds.y);
    }

    #[test]
    fn sparse_format() {
        let ds = parse_sparse("+1 1:0.5 3:-2\n-1\n", "s").unwrap();
        assert_eq!(ds.x, vec![vec![0.5, 0.0, -2.0], vec![0.0, 0.0, 0.0]]);
        assert_eq!(ds.y, vec![1.0, -1.0]);
        let err = parse_sparse("+1 3:1 2:1\n", "s").unwrap_err();
        assert_eq!(err.to_string(), "line 1: indices not increasing");
        assert!(matches!(parse_sparse("+1 1:abc\n", "s"), Err(Error::Parse { .. })));
    }

    #[test]
    fn synthetic_properties() {
        let spec = SyntheticSpec {
            n: 160,
            d: 2,
            class_balance: 0.5,
            outlier_rate: 0.0,
            separation: 4.0,
            seed: 1,
        };
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_indices(1.0).len(), 80);

        let noisy = generate_synthetic(&SyntheticSpec { outlier_rate: 0.1, ..spec.clone() }).unwrap();
        let flipped = (0..160).filter(|&i| noisy.y[i] != a.y[i]).count();
        assert_eq!(flipped, 16);
        assert_eq!(noisy.x, a.x);
    }

    #[test]
    fn unit_box_scaling() {
        let s = example1_raw().scale_to_unit_box();
        assert!((s.x[0][0] - 0.0).abs() < 1e-15);
        assert!((s.x[2][0] + 1.0).abs() < 1e-15 && (s.x[3][1] - 1.0).abs() < 1e-15);
        assert!((s.x[1][1] + 1.0 / 3.0).abs() < 1e-15);
    }
}
