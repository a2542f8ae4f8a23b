//! Datasets, synthetic generators, CSV I/O, and the PCA ingestion recipe.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Labeled points with labels in {-1, +1}. Construction validates shape, so
/// a `Dataset` is never empty and every point has the same finite dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<Vec<f64>>,
    labels: Vec<f64>,
    pub name: String,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>, name: impl Into<String>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Data(
                "dataset must contain at least one point".into(),
            ));
        }
        if points.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} points but {} labels",
                points.len(),
                labels.len()
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Data(
                "points must have at least one coordinate".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Data(format!(
                    "point {i} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            for &v in p {
                if !v.is_finite() {
                    return Err(Error::Data(format!(
                        "point {i} has non-finite coordinate {v}"
                    )));
                }
            }
        }
        for (i, &y) in labels.iter().enumerate() {
            if !(y == 1.0 || y == -1.0) {
                return Err(Error::Data(format!("label {i} must be +1 or -1, got {y}")));
            }
        }
        Ok(Dataset {
            points,
            labels,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one point
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Applies a fitted projection to every point.
    pub fn project(&self, pca: &Pca) -> Result<Dataset> {
        let projected = self
            .points
            .iter()
            .map(|p| pca.transform(p))
            .collect::<Result<Vec<_>>>()?;
        Dataset::new(projected, self.labels.clone(), self.name.clone())
    }
}

/// Two overlapping axis-aligned squares: +1 points uniform on [0.4, 1]^2,
/// -1 points uniform on [0, 0.6]^2, so the band [0.4, 0.6]^2 carries both
/// classes. Each split is balanced, which is why the counts must be even.
/// Train and test are drawn from one seeded stream, train first.
pub fn generate_overlapping_squares(
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    for (what, n) in [("train", n_train), ("test", n_test)] {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Config(format!(
                "{what} count must be even and at least 2, got {n}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw_split = |n: usize, tag: &str| -> Result<Dataset> {
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n / 2 {
            points.push(vec![rng.random_range(0.4..1.0), rng.random_range(0.4..1.0)]);
            labels.push(1.0);
        }
        for _ in 0..n / 2 {
            points.push(vec![rng.random_range(0.0..0.6), rng.random_range(0.0..0.6)]);
            labels.push(-1.0);
        }
        Dataset::new(points, labels, format!("squares-{tag}-{seed}"))
    };
    let train = draw_split(n_train, "train")?;
    let test = draw_split(n_test, "test")?;
    Ok((train, test))
}

/// Regular evaluation grid: `resolution` points per axis, endpoints
/// included, labeled by the caller's rule. The first axis varies slowest.
pub fn generate_grid_testset<F>(
    bounds: &[(f64, f64)],
    resolution: usize,
    labeler: F,
) -> Result<Dataset>
where
    F: Fn(&[f64]) -> f64,
{
    if bounds.is_empty() {
        return Err(Error::Config("grid needs at least one axis".into()));
    }
    if resolution < 2 {
        return Err(Error::Config("grid resolution must be at least 2".into()));
    }
    for &(lo, hi) in bounds {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!(
                "grid axis [{lo}, {hi}] must satisfy lo < hi"
            )));
        }
    }
    let d = bounds.len();
    let total = resolution.pow(d as u32);
    let mut points = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let p: Vec<f64> = (0..d)
            .map(|j| {
                let (lo, hi) = bounds[j];
                lo + (hi - lo) * idx[j] as f64 / (resolution - 1) as f64
            })
            .collect();
        let y = labeler(&p);
        if !(y == 1.0 || y == -1.0) {
            return Err(Error::Data(format!(
                "labeler returned {y}, expected +1 or -1"
            )));
        }
        labels.push(y);
        points.push(p);
        for k in (0..d).rev() {
            idx[k] += 1;
            if idx[k] < resolution {
                break;
            }
            idx[k] = 0;
        }
    }
    Dataset::new(points, labels, "grid")
}

/// Checkerboard rule: +1 where the coordinate product is nonnegative.
pub fn checkerboard_label(x: &[f64]) -> f64 {
    let prod: f64 = x.iter().product();
    if prod >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Loads a dataset from CSV. `label_column` names the label field; every
/// other column must be numeric and becomes a feature in header order.
/// Raw labels may be any two distinct numbers; the larger maps to +1.
pub fn load_csv(path: &std::path::Path, label_column: &str) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?
        .clone();
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| {
            Error::Data(format!(
                "{}: no column named {label_column:?} in header [{}]",
                path.display(),
                headers.iter().collect::<Vec<_>>().join(", ")
            ))
        })?;
    let mut points = Vec::new();
    let mut raw_labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Error::Data(format!("{} row {row}: {e}", path.display())))?;
        if record.len() != headers.len() {
            return Err(Error::Data(format!(
                "{} row {row}: {} fields, header has {}",
                path.display(),
                record.len(),
                headers.len()
            )));
        }
        let mut point = Vec::with_capacity(headers.len() - 1);
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                Error::Data(format!(
                    "{} row {row}, column {:?}: cannot parse {field:?} as a number",
                    path.display(),
                    &headers[col]
                ))
            })?;
            if col == label_idx {
                raw_labels.push(value);
            } else {
                point.push(value);
            }
        }
        points.push(point);
    }
    let labels = map_labels(&raw_labels)?;
    Dataset::new(
        points,
        labels,
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "csv".into()),
    )
}

/// Maps raw label values onto {-1, +1}: with two distinct values the larger
/// becomes +1; a single value must already be +1 or -1.
fn map_labels(raw: &[f64]) -> Result<Vec<f64>> {
    let mut distinct: Vec<f64> = Vec::new();
    for &v in raw {
        if !v.is_finite() {
            return Err(Error::Data(format!("non-finite label {v}")));
        }
        if !distinct.contains(&v) {
            distinct.push(v);
        }
        if distinct.len() > 2 {
            return Err(Error::Data(format!(
                "labels must take at most two distinct values, found {distinct:?} and more"
            )));
        }
    }
    match distinct.len() {
        1 => {
            let v = distinct[0];
            if v == 1.0 || v == -1.0 {
                Ok(raw.to_vec())
            } else {
                Err(Error::Data(format!(
                    "single label value {v} is ambiguous; use +1 or -1"
                )))
            }
        }
        _ => {
            let hi = distinct[0].max(distinct[1]);
            Ok(raw
                .iter()
                .map(|&v| if v == hi { 1.0 } else { -1.0 })
                .collect())
        }
    }
}

/// Writes a dataset as CSV with header `label,x0,x1,...`. Floats print as
/// shortest round-trip decimals, so write-then-load is lossless.
pub fn write_csv<W: std::io::Write>(dataset: &Dataset, out: &mut W) -> std::io::Result<()> {
    write!(out, "label")?;
    for j in 0..dataset.dim() {
        write!(out, ",x{j}")?;
    }
    writeln!(out)?;
    for (p, y) in dataset.points().iter().zip(dataset.labels()) {
        write!(out, "{y}")?;
        for v in p {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Principal component projection fitted on training points: center, then
/// project onto the top eigenvectors of the sample covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    mean: Vec<f64>,
    /// d x k, columns are components ordered by descending eigenvalue.
    components: DMatrix<f64>,
}

impl Pca {
    /// Fits a `k`-component projection. Component order is by descending
    /// eigenvalue; each column's sign is fixed so its largest-magnitude
    /// entry is positive, making the fit deterministic.
    pub fn fit(points: &[Vec<f64>], k: usize) -> Result<Pca> {
        if points.is_empty() {
            return Err(Error::Data("PCA needs at least one point".into()));
        }
        let d = points[0].len();
        if k == 0 || k > d {
            return Err(Error::Config(format!(
                "component count {k} must be in 1..={d}"
            )));
        }
        let n = points.len() as f64;
        let mut mean = vec![0.0; d];
        for p in points {
            if p.len() != d {
                return Err(Error::Data("PCA points must share a dimension".into()));
            }
            for (m, &v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut cov = DMatrix::zeros(d, d);
        for p in points {
            let centered = DVector::from_fn(d, |j, _| p[j] - mean[j]);
            cov.ger(1.0 / n, &centered, &centered, 1.0);
        }
        let eigen = cov.symmetric_eigen();
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            eigen.eigenvalues[b]
                .partial_cmp(&eigen.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut components = DMatrix::zeros(d, k);
        for (col, &src) in order.iter().take(k).enumerate() {
            let mut v = eigen.eigenvectors.column(src).clone_owned();
            let lead = v
                .iter()
                .cloned()
                .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
                .unwrap_or(1.0);
            if lead < 0.0 {
                v.neg_mut();
            }
            components.set_column(col, &v);
        }
        Ok(Pca { mean, components })
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.mean.len() {
            return Err(Error::Data(format!(
                "point has dimension {}, PCA expects {}",
                x.len(),
                self.mean.len()
            )));
        }
        let centered = DVector::from_fn(self.mean.len(), |j, _| x[j] - self.mean[j]);
        let projected = self.components.tr_mul(&centered);
        Ok(projected.iter().cloned().collect())
    }

    pub fn output_dim(&self) -> usize {
        self.components.ncols()
    }
}
