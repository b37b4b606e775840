//! Datasets, seeded randomness and CSV ingestion.

use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::CovarianceModel;

/// Identifies one independent random stream.
///
/// The base seed keys a ChaCha generator and the stream index selects one of
/// its 2^64 non-overlapping streams, so replicates can be drawn in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub base_seed: u64,
    pub stream_index: u64,
}

impl RngSeed {
    pub fn new(base_seed: u64, stream_index: u64) -> Self {
        Self {
            base_seed,
            stream_index,
        }
    }

    pub fn rng(&self) -> ChaCha12Rng {
        let mut rng = ChaCha12Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_index);
        rng
    }

    /// An independent seed for a named sub-task of the same replicate.
    pub fn derive(&self, tag: &str) -> RngSeed {
        let mut h = self.base_seed ^ 0x9e37_79b9_7f4a_7c15;
        for b in tag.bytes() {
            h = splitmix64(h ^ u64::from(b));
        }
        RngSeed {
            base_seed: splitmix64(h),
            stream_index: self.stream_index,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truth {
    pub theta0: Array1<f64>,
    pub sigma: f64,
}

/// A regression sample `y = X θ₀ + w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Array1<f64>,
    pub truth: Option<Truth>,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Array1<f64>) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::dims(format!(
                "X has {} rows but y has {} entries",
                x.nrows(),
                y.len()
            )));
        }
        if x.nrows() < 2 {
            return Err(Error::domain("a dataset needs at least 2 samples"));
        }
        if x.ncols() == 0 {
            return Err(Error::domain("a dataset needs at least 1 column"));
        }
        Ok(Self { x, y, truth: None })
    }

    pub fn with_truth(mut self, theta0: Array1<f64>, sigma: f64) -> Result<Self> {
        if theta0.len() != self.p() {
            return Err(Error::dims(format!(
                "theta0 has length {} but X has {} columns",
                theta0.len(),
                self.p()
            )));
        }
        self.truth = Some(Truth { theta0, sigma });
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    /// Sample Gram matrix `XᵀX / n`.
    pub fn gram(&self) -> Array2<f64> {
        let mut s = self.x.t().dot(&self.x);
        s /= self.n() as f64;
        s
    }

    /// Rows `idx`, in the given order, carrying the truth along.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            x: self.x.select(Axis(0), idx),
            y: self.y.select(Axis(0), idx),
            truth: self.truth.clone(),
        }
    }
}

/// Draws design rows `x_i ~ N(0, Σ)` as `L z` with `z` standard normal.
///
/// Holds the Cholesky factor so repeated draws from one covariance factor it
/// only once.
#[derive(Debug, Clone)]
pub struct DesignSampler {
    p: usize,
    factor_t: Option<Array2<f64>>,
}

impl DesignSampler {
    pub fn new(cov: &CovarianceModel) -> Result<Self> {
        let factor_t = cov.factor()?.map(|l| l.t().to_owned());
        Ok(Self {
            p: cov.dim(),
            factor_t,
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn design(&self, n: usize, seed: RngSeed) -> Array2<f64> {
        let mut rng = seed.derive("design").rng();
        let z = Array2::from_shape_simple_fn((n, self.p), || StandardNormal.sample(&mut rng));
        match &self.factor_t {
            None => z,
            Some(lt) => z.dot(lt),
        }
    }

    /// `sigma = 0` gives noiseless responses.
    pub fn sample(
        &self,
        n: usize,
        theta0: &Array1<f64>,
        sigma: f64,
        seed: RngSeed,
    ) -> Result<Dataset> {
        if theta0.len() != self.p {
            return Err(Error::dims(format!(
                "theta0 has length {} but the covariance has dimension {}",
                theta0.len(),
                self.p
            )));
        }
        if !(sigma >= 0.0) {
            return Err(Error::domain(format!("sigma must be >= 0, got {sigma}")));
        }
        let x = self.design(n, seed);
        let y = responses(&x, theta0, sigma, seed);
        Dataset::new(x, y)?.with_truth(theta0.clone(), sigma)
    }
}

/// `X θ₀ + σ w` with fresh noise drawn from `seed`.
pub fn responses(x: &Array2<f64>, theta0: &Array1<f64>, sigma: f64, seed: RngSeed) -> Array1<f64> {
    let mut rng = seed.derive("noise").rng();
    let mut y = x.dot(theta0);
    if sigma > 0.0 {
        for v in y.iter_mut() {
            let w: f64 = StandardNormal.sample(&mut rng);
            *v += sigma * w;
        }
    }
    y
}

pub fn sample_dataset(
    n: usize,
    cov: &CovarianceModel,
    theta0: &Array1<f64>,
    sigma: f64,
    seed: RngSeed,
) -> Result<Dataset> {
    DesignSampler::new(cov)?.sample(n, theta0, sigma, seed)
}

/// `s0` entries equal to `b` on a uniformly random support, zero elsewhere.
pub fn make_signal(p: usize, s0: usize, b: f64, seed: RngSeed) -> Result<Array1<f64>> {
    if s0 > p {
        return Err(Error::domain(format!(
            "sparsity {s0} exceeds dimension {p}"
        )));
    }
    let mut rng = seed.derive("signal").rng();
    let mut theta = Array1::zeros(p);
    for i in index::sample(&mut rng, p, s0) {
        theta[i] = b;
    }
    Ok(theta)
}

/// Reads a numeric design matrix and response vector from comma-separated
/// files. A header row is skipped when its first token is not a number.
pub fn load_csv(x_path: impl AsRef<Path>, y_path: impl AsRef<Path>) -> Result<Dataset> {
    let x_rows = read_numeric_csv(x_path.as_ref())?;
    let y_rows = read_numeric_csv(y_path.as_ref())?;
    let n = x_rows.len();
    if n == 0 {
        return Err(Error::Empty(format!(
            "{} has no rows",
            x_path.as_ref().display()
        )));
    }
    let p = x_rows[0].len();
    let x = Array2::from_shape_vec((n, p), x_rows.into_iter().flatten().collect())
        .expect("rows were checked to be rectangular");
    let mut y = Vec::with_capacity(y_rows.len());
    for (i, row) in y_rows.iter().enumerate() {
        match row.as_slice() {
            [v] => y.push(*v),
            _ => {
                return Err(Error::Parse {
                    path: y_path.as_ref().to_path_buf(),
                    row: i + 1,
                    column: 2,
                    message: format!("expected a single value, found {}", row.len()),
                })
            }
        }
    }
    if y.len() != n {
        return Err(Error::dims(format!(
            "{} has {} rows but {} has {}",
            x_path.as_ref().display(),
            n,
            y_path.as_ref().display(),
            y.len()
        )));
    }
    Dataset::new(x, Array1::from(y))
}

fn read_numeric_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(i + 1, |p| p.line() as usize);
        if i == 0 {
            let first = record.get(0).unwrap_or("");
            if first.parse::<f64>().is_err() {
                continue;
            }
        }
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let v = field.parse::<f64>().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: line,
                column: j + 1,
                message: format!("not a number: {field:?}"),
            })?;
            row.push(v);
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: row.len().min(w) + 1,
                    message: format!("expected {w} fields, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.to_path_buf(),
            source,
        },
        other => Error::Parse {
            path: path.to_path_buf(),
            row: 0,
            column: 0,
            message: format!("{other:?}"),
        },
    }
}
