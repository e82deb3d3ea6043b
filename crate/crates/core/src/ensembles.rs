//! Seeded generation of sensing matrices, sparse signals, and noise.
//!
//! Everything here is deterministic given an [`RngStream`]: the same
//! (master seed, stream id) pair reproduces the same draws bit for bit
//! within one build. Distinct stream ids give statistically independent
//! sequences, so trials can be generated concurrently.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// A reproducible random stream: a master seed plus a stream id.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    pub master_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        Self {
            master_seed,
            stream_id,
        }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// A derived stream with the same master seed.
    pub fn substream(&self, stream_id: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_id,
        }
    }
}

/// Measurement-matrix ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ensemble {
    /// Entries i.i.d. N(0, 1/m).
    Gaussian,
    /// Entries ±1/√m with equal probability.
    Bernoulli,
    /// Caller-supplied entries.
    Explicit,
}

impl Ensemble {
    pub fn label(&self) -> &'static str {
        match self {
            Ensemble::Gaussian => "gaussian",
            Ensemble::Bernoulli => "bernoulli",
            Ensemble::Explicit => "explicit",
        }
    }
}

/// Dense m×n measurement operator with its ensemble provenance.
#[derive(Debug, Clone)]
pub struct SensingMatrix {
    m: usize,
    n: usize,
    entries: DMatrix<f64>,
    ensemble: Ensemble,
}

impl SensingMatrix {
    /// Wrap an explicit matrix.
    pub fn from_matrix(entries: DMatrix<f64>) -> Self {
        Self {
            m: entries.nrows(),
            n: entries.ncols(),
            entries,
            ensemble: Ensemble::Explicit,
        }
    }

    pub fn rows(&self) -> usize {
        self.m
    }

    pub fn cols(&self) -> usize {
        self.n
    }

    pub fn ensemble(&self) -> Ensemble {
        self.ensemble
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn column(&self, j: usize) -> nalgebra::DVectorView<'_, f64> {
        self.entries.column(j)
    }

    /// Split the rows into a leading block of `rows` and the remainder.
    pub fn split_rows(&self, rows: usize) -> (SensingMatrix, SensingMatrix) {
        let top = self.entries.rows(0, rows).into_owned();
        let bottom = self.entries.rows(rows, self.m - rows).into_owned();
        (
            SensingMatrix {
                m: rows,
                n: self.n,
                entries: top,
                ensemble: self.ensemble,
            },
            SensingMatrix {
                m: self.m - rows,
                n: self.n,
                entries: bottom,
                ensemble: self.ensemble,
            },
        )
    }

    /// Submatrix formed by the given columns, in the given order.
    pub fn select_columns(&self, cols: &[usize]) -> DMatrix<f64> {
        let mut sub = DMatrix::zeros(self.m, cols.len());
        for (jj, &j) in cols.iter().enumerate() {
            sub.set_column(jj, &self.entries.column(j));
        }
        sub
    }
}

/// Ground-truth sparse signal: sorted support, values on the support,
/// and the minimum absolute support value.
///
/// Off-support entries are exactly zero. An empty signal (k = 0) uses
/// the sentinel `x_min = 0`.
#[derive(Debug, Clone)]
pub struct SparseSignal {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
    x_min: f64,
}

impl SparseSignal {
    /// Build from explicit parts; validates the representation invariants.
    pub fn from_parts(n: usize, support: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "support has {} indices but {} values",
                support.len(),
                values.len()
            )));
        }
        for w in support.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidArgument(
                    "support indices must be strictly increasing".into(),
                ));
            }
        }
        if let Some(&last) = support.last() {
            if last >= n {
                return Err(Error::InvalidArgument(format!(
                    "support index {} out of range for n = {}",
                    last, n
                )));
            }
        }
        if values.iter().any(|v| *v == 0.0 || !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "support values must be nonzero and finite".into(),
            ));
        }
        let x_min = values.iter().fold(f64::INFINITY, |a, v| a.min(v.abs()));
        let x_min = if values.is_empty() { 0.0 } else { x_min };
        Ok(Self {
            n,
            support,
            values,
            x_min,
        })
    }

    /// The all-zero signal of dimension n.
    pub fn zero(n: usize) -> Self {
        Self {
            n,
            support: Vec::new(),
            values: Vec::new(),
            x_min: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Minimum absolute support value; 0 for the empty signal.
    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    /// Materialize as a dense vector.
    pub fn to_dense(&self) -> DVector<f64> {
        let mut x = DVector::zeros(self.n);
        for (&j, &v) in self.support.iter().zip(self.values.iter()) {
            x[j] = v;
        }
        x
    }

    /// The signal scaled by c, with x_min scaled accordingly.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            support: self.support.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            x_min: self.x_min * c.abs(),
        }
    }
}

/// Noise model for the measurement step.
#[derive(Debug, Clone)]
pub enum NoiseSpec {
    /// y = Gx + e with e_j i.i.d. N(0, sigma²).
    OutputGaussian { sigma: f64 },
    /// y = G(x + w) with a fixed perturbation, ‖w‖∞ ≤ eps_inf.
    InputDeterministic { w: DVector<f64>, eps_inf: f64 },
    /// y = G(x + w) with w_j i.i.d. N(0, sigma²).
    InputGaussian { sigma: f64 },
}

impl NoiseSpec {
    fn validate(&self, n: usize) -> Result<()> {
        match self {
            NoiseSpec::OutputGaussian { sigma } | NoiseSpec::InputGaussian { sigma } => {
                if *sigma < 0.0 || !sigma.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "sigma must be nonnegative, got {}",
                        sigma
                    )));
                }
            }
            NoiseSpec::InputDeterministic { w, eps_inf } => {
                if w.len() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "deterministic noise has length {} but n = {}",
                        w.len(),
                        n
                    )));
                }
                if w.amax() > *eps_inf {
                    return Err(Error::InvalidArgument(format!(
                        "‖w‖∞ = {} exceeds declared bound {}",
                        w.amax(),
                        eps_inf
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Sign pattern for generated signals.
#[derive(Debug, Clone)]
pub enum SignMode {
    /// Each support entry ±1 with equal probability.
    RandomSigns,
    /// Caller-supplied signs, one per support entry in support order.
    Given(Vec<f64>),
}

/// Amplitude law for generated signals.
#[derive(Debug, Clone)]
pub enum AmplitudeMode {
    /// All support magnitudes exactly 1, so x_min = 1.
    Unit,
    /// Caller-supplied positive magnitudes in support order.
    Given(Vec<f64>),
}

/// Draw an m×n sensing matrix from the requested ensemble.
///
/// Entries are drawn in row-major order, so the sample sequence matches
/// the logical layout regardless of internal storage.
pub fn gen_matrix(m: usize, n: usize, ensemble: Ensemble, rng: RngStream) -> Result<SensingMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!(
            "matrix dimensions must be positive, got {}x{}",
            m, n
        )));
    }
    let mut r = rng.rng();
    let mut entries = DMatrix::zeros(m, n);
    match ensemble {
        Ensemble::Gaussian => {
            let std = (1.0 / m as f64).sqrt();
            for i in 0..m {
                for j in 0..n {
                    let z: f64 = r.sample(StandardNormal);
                    entries[(i, j)] = std * z;
                }
            }
        }
        Ensemble::Bernoulli => {
            let mag = 1.0 / (m as f64).sqrt();
            for i in 0..m {
                for j in 0..n {
                    entries[(i, j)] = if r.random::<bool>() { mag } else { -mag };
                }
            }
        }
        Ensemble::Explicit => {
            return Err(Error::InvalidArgument(
                "Explicit matrices are constructed with SensingMatrix::from_matrix".into(),
            ));
        }
    }
    Ok(SensingMatrix {
        m,
        n,
        entries,
        ensemble,
    })
}

/// Draw a k-sparse signal of dimension n with a uniformly random support.
pub fn gen_signal(
    n: usize,
    k: usize,
    sign_mode: SignMode,
    amplitude_mode: AmplitudeMode,
    rng: RngStream,
) -> Result<SparseSignal> {
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "sparsity k = {} exceeds dimension n = {}",
            k, n
        )));
    }
    if k == 0 {
        return Ok(SparseSignal::zero(n));
    }
    let mut r = rng.rng();
    // Partial Fisher-Yates: draw k distinct indices, then sort.
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = r.random_range(i..n);
        pool.swap(i, j);
    }
    let mut support: Vec<usize> = pool[..k].to_vec();
    support.sort_unstable();

    let signs: Vec<f64> = match sign_mode {
        SignMode::RandomSigns => (0..k)
            .map(|_| if r.random::<bool>() { 1.0 } else { -1.0 })
            .collect(),
        SignMode::Given(s) => {
            if s.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "{} signs given for k = {}",
                    s.len(),
                    k
                )));
            }
            if s.iter().any(|v| *v != 1.0 && *v != -1.0) {
                return Err(Error::InvalidArgument("signs must be ±1".into()));
            }
            s
        }
    };
    let amplitudes: Vec<f64> = match amplitude_mode {
        AmplitudeMode::Unit => vec![1.0; k],
        AmplitudeMode::Given(a) => {
            if a.len() != k {
                return Err(Error::DimensionMismatch(format!(
                    "{} amplitudes given for k = {}",
                    a.len(),
                    k
                )));
            }
            if a.iter().any(|v| *v <= 0.0 || !v.is_finite()) {
                return Err(Error::InvalidArgument(
                    "amplitudes must be positive and finite".into(),
                ));
            }
            a
        }
    };
    let values: Vec<f64> = signs
        .iter()
        .zip(amplitudes.iter())
        .map(|(s, a)| s * a)
        .collect();
    SparseSignal::from_parts(n, support, values)
}

/// Apply the measurement model. Returns the observation y and the
/// realized noise vector (length m for output noise, n for input noise),
/// so oracle checks can reconstruct the exact instance.
pub fn gen_measurement(
    g: &SensingMatrix,
    x: &SparseSignal,
    noise: &NoiseSpec,
    rng: RngStream,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if x.dim() != g.cols() {
        return Err(Error::DimensionMismatch(format!(
            "signal has dimension {} but matrix has {} columns",
            x.dim(),
            g.cols()
        )));
    }
    noise.validate(g.cols())?;
    let xd = x.to_dense();
    let mut r = rng.rng();
    match noise {
        NoiseSpec::OutputGaussian { sigma } => {
            let mut e = DVector::zeros(g.rows());
            if *sigma > 0.0 {
                for i in 0..g.rows() {
                    let z: f64 = r.sample(StandardNormal);
                    e[i] = sigma * z;
                }
            }
            let y = g.matrix() * &xd + &e;
            Ok((y, e))
        }
        NoiseSpec::InputDeterministic { w, .. } => {
            let y = g.matrix() * (&xd + w);
            Ok((y, w.clone()))
        }
        NoiseSpec::InputGaussian { sigma } => {
            let mut w = DVector::zeros(g.cols());
            if *sigma > 0.0 {
                for j in 0..g.cols() {
                    let z: f64 = r.sample(StandardNormal);
                    w[j] = sigma * z;
                }
            }
            let y = g.matrix() * (&xd + &w);
            Ok((y, w))
        }
    }
}

/// i.i.d. uniform noise on [−eps, +eps], clipped so that ‖w‖∞ ≤ eps
/// holds exactly. The default deterministic input perturbation for
/// experiments.
pub fn uniform_linf_noise(n: usize, eps: f64, rng: RngStream) -> DVector<f64> {
    let mut r = rng.rng();
    DVector::from_fn(n, |_, _| {
        let u: f64 = r.random::<f64>() * 2.0 - 1.0;
        (u * eps).clamp(-eps, eps)
    })
}
