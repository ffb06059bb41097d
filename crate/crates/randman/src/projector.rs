//! Haar-random orthogonal projections and distortion measurements.

use nalgebra::{DMatrix, DMatrixView, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::gp_sampler::TangentFrames;
use crate::harness::seed::rng_from;
use crate::{Error, Result};

const ORTHO_TOL: f64 = 1e-10;

/// Pairs above this count switch the default policy to subsampling.
pub const DEFAULT_FULL_PAIR_POINTS: usize = 4096;
pub const DEFAULT_SUBSAMPLE_PAIRS: usize = 10_000_000;

/// An M×N matrix with orthonormal rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    rows: DMatrix<f64>,
    seed: Option<u64>,
}

fn gaussian_matrix(nrows: usize, ncols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng_from(seed);
    DMatrix::from_fn(nrows, ncols, |_, _| rng.sample(StandardNormal))
}

// Thin Q of an n×m (m ≤ n) matrix with diag(R) ≥ 0.
fn sign_fixed_q(g: DMatrix<f64>) -> (DMatrix<f64>, DVector<f64>) {
    let qr = g.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for (j, d) in r_diag.iter().enumerate() {
        if *d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    (q, r_diag.map(f64::abs))
}

fn orthonormality_error(gram: &DMatrix<f64>) -> f64 {
    let k = gram.nrows();
    (gram - DMatrix::<f64>::identity(k, k)).norm()
}

impl Projector {
    /// Wraps rows after checking AAᵀ = I within 1e-10 (Frobenius).
    pub fn from_rows(rows: DMatrix<f64>) -> Result<Self> {
        let (m, n) = rows.shape();
        if m == 0 || m > n {
            return Err(Error::Domain(format!("need 1 ≤ M ≤ N, got M={m}, N={n}")));
        }
        let err = orthonormality_error(&(&rows * rows.transpose()));
        if !(err <= ORTHO_TOL) {
            return Err(Error::NonOrthogonal(err));
        }
        Ok(Projector { rows, seed: None })
    }

    pub fn m(&self) -> usize {
        self.rows.nrows()
    }

    pub fn n(&self) -> usize {
        self.rows.ncols()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// √(N/M).
    pub fn scale(&self) -> f64 {
        (self.n() as f64 / self.m() as f64).sqrt()
    }

    /// ‖AAᵀ − I‖_F.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&(&self.rows * self.rows.transpose()))
    }

    pub fn apply(&self, u: &[f64]) -> DVector<f64> {
        &self.rows * DVector::from_column_slice(u)
    }

    /// A·X for an N×P matrix of column points.
    pub fn project(&self, cols: &DMatrixView<'_, f64>) -> DMatrix<f64> {
        &self.rows * cols
    }
}

/// Rows are the sign-fixed QR orthonormalization of an M×N standard Gaussian matrix.
pub fn sample_projector(n: usize, m: usize, seed: u64) -> Result<Projector> {
    if m == 0 || m > n {
        return Err(Error::Domain(format!("need 1 ≤ M ≤ N, got M={m}, N={n}")));
    }
    let (q, _) = sign_fixed_q(gaussian_matrix(n, m, seed));
    Ok(Projector { rows: q.transpose(), seed: Some(seed) })
}

/// An N×K matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct SubspaceBasis {
    cols: DMatrix<f64>,
}

impl SubspaceBasis {
    /// Wraps columns after checking UᵀU = I within 1e-10.
    pub fn new(cols: DMatrix<f64>) -> Result<Self> {
        let (n, k) = cols.shape();
        if k == 0 || k > n {
            return Err(Error::Domain(format!("need 1 ≤ K ≤ N, got K={k}, N={n}")));
        }
        let err = orthonormality_error(&(cols.transpose() * &cols));
        if !(err <= ORTHO_TOL) {
            return Err(Error::NonOrthogonal(err));
        }
        Ok(SubspaceBasis { cols })
    }

    /// Orthonormal basis for the column span of `m`.
    pub fn orthonormalize(m: DMatrix<f64>) -> Result<Self> {
        let (n, k) = m.shape();
        if k == 0 || k > n {
            return Err(Error::Domain(format!("need 1 ≤ K ≤ N, got K={k}, N={n}")));
        }
        let scale = m.norm();
        let (q, r) = sign_fixed_q(m);
        if r.iter().any(|d| !(*d > 1e-12 * scale)) {
            return Err(Error::RankDeficient);
        }
        Ok(SubspaceBasis { cols: q })
    }

    /// Haar-random K-dimensional subspace of N-space.
    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Domain(format!("need 1 ≤ K ≤ N, got K={k}, N={n}")));
        }
        let (q, _) = sign_fixed_q(gaussian_matrix(n, k, seed));
        Ok(SubspaceBasis { cols: q })
    }

    pub fn cols(&self) -> &DMatrix<f64> {
        &self.cols
    }

    pub fn into_cols(self) -> DMatrix<f64> {
        self.cols
    }

    pub fn n(&self) -> usize {
        self.cols.nrows()
    }

    pub fn k(&self) -> usize {
        self.cols.ncols()
    }
}

/// Principal angles between two subspaces.
#[derive(Clone, Debug)]
pub struct PrincipalAngles {
    /// Descending, in [0, 1].
    pub cosines: Vec<f64>,
    pub w: Option<DMatrix<f64>>,
    pub v: Option<DMatrix<f64>>,
}

impl PrincipalAngles {
    pub fn angles(&self) -> Vec<f64> {
        self.cosines.iter().map(|c| c.acos()).collect()
    }

    /// sin θ_max = √(1 − cos²θ_min-cosine).
    pub fn sin_max(&self) -> f64 {
        let c = self.cosines.last().copied().unwrap_or(1.0);
        (1.0 - c * c).max(0.0).sqrt()
    }
}

/// Where the worst distortion in a summary came from.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    None,
    Pair { i: usize, j: usize },
    TangentPlane { point: usize },
    Sample { index: usize },
    Projector { index: usize, worst: Box<Provenance> },
}

/// Which unordered pairs a point-set scan visits.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum PairPolicy {
    All,
    Subsample { count: usize, seed: u64 },
}

impl PairPolicy {
    /// All pairs up to 4096 points, otherwise 10⁷ seeded pairs.
    pub fn auto(n_points: usize, seed: u64) -> Self {
        if n_points <= DEFAULT_FULL_PAIR_POINTS {
            PairPolicy::All
        } else {
            PairPolicy::Subsample { count: DEFAULT_SUBSAMPLE_PAIRS, seed }
        }
    }
}

/// Empirical distortions and their worst element.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DistortionSummary {
    pub samples: Vec<f64>,
    pub max: f64,
    pub argmax: Provenance,
    pub policy: Option<PairPolicy>,
}

impl DistortionSummary {
    pub fn from_samples(samples: Vec<f64>) -> Self {
        let (idx, max) = argmax(&samples);
        DistortionSummary {
            max,
            argmax: idx.map_or(Provenance::None, |index| Provenance::Sample { index }),
            samples,
            policy: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn argmax(v: &[f64]) -> (Option<usize>, f64) {
    let mut best = (None, f64::NEG_INFINITY);
    for (i, &x) in v.iter().enumerate() {
        if x > best.1 {
            best = (Some(i), x);
        }
    }
    best
}

pub(crate) fn sorted_singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Extreme singular values of a tall matrix via its K×K Gram matrix.
pub(crate) fn extreme_singular_values(b: &DMatrix<f64>) -> (f64, f64) {
    let gram = b.transpose() * b;
    let eig = SymmetricEigen::new(gram);
    let hi = eig.eigenvalues.max().max(0.0).sqrt();
    let lo = eig.eigenvalues.min().max(0.0).sqrt();
    (hi, lo)
}

pub(crate) fn distortion_from_extremes(smax: f64, smin: f64, scale: f64) -> f64 {
    (scale * smax - 1.0).max(1.0 - scale * smin)
}

/// |√(N/M)‖Au‖/‖u‖ − 1|.
pub fn vector_distortion(a: &Projector, u: &[f64]) -> Result<f64> {
    if u.len() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: u.len() });
    }
    let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((a.scale() * a.apply(u).norm() / norm - 1.0).abs())
}

/// Squared norms of all chords x_i − x_j, i < j, in row-major pair order.
#[derive(Clone, Debug)]
pub struct ChordCache {
    p: usize,
    sq: Vec<f64>,
}

impl ChordCache {
    pub fn new(points: &DMatrixView<'_, f64>) -> Self {
        let p = points.ncols();
        let rows: Vec<Vec<f64>> = (0..p)
            .into_par_iter()
            .map(|i| {
                let xi = points.column(i);
                (i + 1..p)
                    .map(|j| {
                        let xj = points.column(j);
                        xi.iter().zip(xj.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
                    })
                    .collect()
            })
            .collect();
        ChordCache { p, sq: rows.concat() }
    }

    fn offset(&self, i: usize) -> usize {
        i * self.p - i * (i + 1) / 2
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        self.sq[self.offset(i) + j - i - 1]
    }

    pub fn n_points(&self) -> usize {
        self.p
    }
}

fn col_dist_sq(m: &DMatrix<f64>, i: usize, j: usize) -> f64 {
    let (a, b) = (m.column(i), m.column(j));
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn view_dist_sq(m: &DMatrixView<'_, f64>, i: usize, j: usize) -> f64 {
    let (a, b) = (m.column(i), m.column(j));
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[derive(Clone, Copy)]
struct Worst {
    d: f64,
    i: usize,
    j: usize,
}

impl Worst {
    const NONE: Worst = Worst { d: f64::NEG_INFINITY, i: usize::MAX, j: usize::MAX };

    fn better(self, o: Worst) -> Worst {
        if o.d > self.d || (o.d == self.d && (o.i, o.j) < (self.i, self.j)) {
            o
        } else {
            self
        }
    }
}

fn pair_list(p: usize, policy: &PairPolicy) -> Option<Vec<(usize, usize)>> {
    match policy {
        PairPolicy::All => None,
        PairPolicy::Subsample { count, seed } => {
            let mut rng = rng_from(*seed);
            let mut out = Vec::with_capacity(*count);
            while out.len() < *count {
                let i = rng.random_range(0..p);
                let j = rng.random_range(0..p);
                if i != j {
                    out.push((i.min(j), i.max(j)));
                }
            }
            Some(out)
        }
    }
}

fn scan(
    a: &Projector,
    points: &DMatrixView<'_, f64>,
    policy: &PairPolicy,
    cache: Option<&ChordCache>,
    retain: bool,
) -> Result<(Vec<f64>, Worst)> {
    let p = points.ncols();
    if p < 2 {
        return Err(Error::TooFewSamples { need: 2, have: p });
    }
    if points.nrows() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: points.nrows() });
    }
    if let Some(c) = cache {
        if c.n_points() != p {
            return Err(Error::DimensionMismatch { expected: p, got: c.n_points() });
        }
    }
    let y = a.project(points);
    let s = a.scale();
    let chord = |i: usize, j: usize| cache.map_or_else(|| view_dist_sq(points, i, j), |c| c.get(i, j));
    let eval = |i: usize, j: usize| -> Result<f64> {
        let c2 = chord(i, j);
        if c2 == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok((s * (col_dist_sq(&y, i, j) / c2).sqrt() - 1.0).abs())
    };
    let chunks: Vec<Result<(Vec<f64>, Worst)>> = match pair_list(p, policy) {
        None => (0..p - 1)
            .into_par_iter()
            .map(|i| {
                let mut w = Worst::NONE;
                let mut v = Vec::new();
                for j in i + 1..p {
                    let d = eval(i, j)?;
                    w = w.better(Worst { d, i, j });
                    if retain {
                        v.push(d);
                    }
                }
                Ok((v, w))
            })
            .collect(),
        Some(pairs) => pairs
            .par_chunks(4096)
            .map(|chunk| {
                let mut w = Worst::NONE;
                let mut v = Vec::new();
                for &(i, j) in chunk {
                    let d = eval(i, j)?;
                    w = w.better(Worst { d, i, j });
                    if retain {
                        v.push(d);
                    }
                }
                Ok((v, w))
            })
            .collect(),
    };
    let mut all = Vec::new();
    let mut worst = Worst::NONE;
    for c in chunks {
        let (v, w) = c?;
        all.extend(v);
        worst = worst.better(w);
    }
    Ok((all, worst))
}

/// Distortion of every selected chord between the columns of `points` (N×P).
pub fn pointset_distortion(
    a: &Projector,
    points: &DMatrixView<'_, f64>,
    policy: &PairPolicy,
) -> Result<DistortionSummary> {
    let (samples, w) = scan(a, points, policy, None, true)?;
    Ok(DistortionSummary {
        samples,
        max: w.d,
        argmax: Provenance::Pair { i: w.i, j: w.j },
        policy: Some(policy.clone()),
    })
}

/// Worst chord distortion only, optionally reusing precomputed chord norms.
pub fn pointset_max_distortion(
    a: &Projector,
    points: &DMatrixView<'_, f64>,
    policy: &PairPolicy,
    cache: Option<&ChordCache>,
) -> Result<(f64, Provenance)> {
    let (_, w) = scan(a, points, policy, cache, false)?;
    Ok((w.d, Provenance::Pair { i: w.i, j: w.j }))
}

/// Distortion of each tangent plane in `frames`.
pub fn tangent_plane_distortions(a: &Projector, frames: &TangentFrames) -> Result<Vec<f64>> {
    if frames.dim() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: frames.dim() });
    }
    if frames.k() > a.m() {
        return Err(Error::Domain(format!("K = {} exceeds M = {}", frames.k(), a.m())));
    }
    let s = a.scale();
    Ok((0..frames.n_points())
        .into_par_iter()
        .map(|i| {
            let au = a.rows() * frames.basis(i);
            let (hi, lo) = extreme_singular_values(&au);
            distortion_from_extremes(hi, lo, s)
        })
        .collect())
}

/// max{√(N/M)s_max − 1, 1 − √(N/M)s_min} over the singular values of AU.
pub fn subspace_distortion(a: &Projector, u: &SubspaceBasis) -> Result<f64> {
    if u.n() != a.n() {
        return Err(Error::DimensionMismatch { expected: a.n(), got: u.n() });
    }
    if u.k() > a.m() {
        return Err(Error::Domain(format!("K = {} exceeds M = {}", u.k(), a.m())));
    }
    let s = sorted_singular_values(&(a.rows() * u.cols()));
    Ok(distortion_from_extremes(s[0], s[s.len() - 1], a.scale()))
}

/// Principal angles from the SVD of UᵀU₂, cosines clipped to [0, 1].
pub fn principal_angles(u: &SubspaceBasis, u2: &SubspaceBasis) -> Result<PrincipalAngles> {
    if u.n() != u2.n() {
        return Err(Error::DimensionMismatch { expected: u.n(), got: u2.n() });
    }
    if u.k() != u2.k() {
        return Err(Error::DimensionMismatch { expected: u.k(), got: u2.k() });
    }
    let c = u.cols().transpose() * u2.cols();
    let svd = c.svd(true, true);
    let k = u.k();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let su = svd.u.as_ref().expect("left factor requested");
    let sv = svd.v_t.as_ref().expect("right factor requested").transpose();
    let w = DMatrix::from_fn(k, k, |r, c| su[(r, order[c])]);
    let v = DMatrix::from_fn(k, k, |r, c| sv[(r, order[c])]);
    Ok(PrincipalAngles {
        cosines: order
            .iter()
            .map(|&i| svd.singular_values[i].clamp(0.0, 1.0))
            .collect(),
        w: Some(w),
        v: Some(v),
    })
}

/// Per-index gaps |sin φ_a − sin φ′_a| against the bound sin θ_max(U, U₂).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WeylGap {
    pub gaps: Vec<f64>,
    pub bound: f64,
    pub violations: usize,
}

fn sines_to_projector(a: &Projector, u: &SubspaceBasis) -> Vec<f64> {
    let mut s: Vec<f64> = sorted_singular_values(&(a.rows() * u.cols()))
        .into_iter()
        .map(|c| (1.0 - c.min(1.0).powi(2)).max(0.0).sqrt())
        .collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Weyl's inequality for the sines of the angles between each subspace and the projector's row space.
pub fn weyl_gap(a: &Projector, u: &SubspaceBasis, u2: &SubspaceBasis) -> Result<WeylGap> {
    if u.k() != u2.k() {
        return Err(Error::DimensionMismatch { expected: u.k(), got: u2.k() });
    }
    for b in [u, u2] {
        if b.n() != a.n() {
            return Err(Error::DimensionMismatch { expected: a.n(), got: b.n() });
        }
    }
    if u.k() > a.m() {
        return Err(Error::Domain(format!("K = {} exceeds M = {}", u.k(), a.m())));
    }
    let bound = principal_angles(u, u2)?.sin_max();
    let gaps: Vec<f64> = sines_to_projector(a, u)
        .iter()
        .zip(sines_to_projector(a, u2))
        .map(|(x, y)| (x - y).abs())
        .collect();
    let violations = gaps.iter().filter(|g| **g > bound + 1e-10).count();
    Ok(WeylGap { gaps, bound, violations })
}
