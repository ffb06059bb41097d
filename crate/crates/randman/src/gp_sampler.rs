//! Grid realizations of the Gaussian-process embedding and their empirical geometry.
//!
//! Each ambient coordinate φ^i is an independent draw with covariance
//! (ℓ²/N)∏_α exp(−Δσ_α²/(2λ_α²)). The kernel is separable, so the grid
//! covariance is a Kronecker product of per-axis correlation matrices and
//! a draw is (ℓ/√N)(L_1 ⊗ … ⊗ L_K)z with L_α the per-axis Cholesky factors.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DMatrixView, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::harness::seed::{stream, Label};
use crate::manifold_model::ManifoldSpec;
use crate::projector::sorted_singular_values;
use crate::{Error, Result};

const JITTER_START: f64 = 1e-10;
const JITTER_MAX: f64 = 1e-6;
const DUMP_MAGIC: &[u8; 4] = b"RMAN";
const DUMP_VERSION: u32 = 1;

/// A realized embedding on the spec's grid.
#[derive(Clone, Debug)]
pub struct ManifoldSample {
    pub spec: ManifoldSpec,
    pub sigma_axes: Vec<Vec<f64>>,
    /// Row-major P×N: point p occupies `points[p*N..(p+1)*N]`.
    pub points: Vec<f64>,
    pub seed: u64,
    /// Relative diagonal jitter used per axis (empty when loaded from a dump).
    pub jitter: Vec<f64>,
}

impl ManifoldSample {
    pub fn n_points(&self) -> usize {
        self.spec.n_points()
    }

    pub fn dim(&self) -> usize {
        self.spec.n()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.points[i * n..(i + 1) * n]
    }

    /// N×P view whose columns are the points.
    pub fn columns(&self) -> DMatrixView<'_, f64> {
        DMatrixView::from_slice(&self.points, self.dim(), self.n_points())
    }

    /// Keeps every `strides[α]`-th grid point along each axis. The realization is unchanged.
    pub fn subsample(&self, strides: &[usize]) -> Result<ManifoldSample> {
        let spec = &self.spec;
        if strides.len() != spec.k() {
            return Err(Error::DimensionMismatch { expected: spec.k(), got: strides.len() });
        }
        let mut grid = Vec::with_capacity(spec.k());
        for (&n, &s) in spec.grid().iter().zip(strides) {
            if s == 0 || (n - 1) % s != 0 || (n - 1) / s < 1 {
                return Err(Error::Domain(format!("stride {s} does not divide grid of {n} points")));
            }
            grid.push((n - 1) / s + 1);
        }
        let sub = ManifoldSpec::new(
            spec.n(),
            spec.ell(),
            spec.lambda().to_vec(),
            spec.extent().to_vec(),
            grid,
        )?;
        let n = spec.n();
        let mut points = Vec::with_capacity(sub.n_points() * n);
        for q in 0..sub.n_points() {
            let m: Vec<usize> = sub
                .multi_index(q)
                .iter()
                .zip(strides)
                .map(|(j, s)| j * s)
                .collect();
            points.extend_from_slice(self.point(spec.flat_index(&m)));
        }
        Ok(ManifoldSample {
            sigma_axes: sub.sigma_axes(),
            spec: sub,
            points,
            seed: self.seed,
            jitter: self.jitter.clone(),
        })
    }
}

fn axis_factor(sigma: &[f64], lambda: f64) -> Result<(DMatrix<f64>, f64)> {
    let n = sigma.len();
    let corr = DMatrix::from_fn(n, n, |i, j| {
        let d = (sigma[i] - sigma[j]) / lambda;
        (-0.5 * d * d).exp()
    });
    let mut jitter = JITTER_START;
    while jitter <= JITTER_MAX * (1.0 + 1e-9) {
        let mut c = corr.clone();
        for i in 0..n {
            c[(i, i)] += jitter;
        }
        if let Some(ch) = c.cholesky() {
            return Ok((ch.unpack(), jitter));
        }
        jitter *= 10.0;
    }
    Err(Error::NumericalBreakdown(format!(
        "axis correlation of {n} points not positive definite with jitter {JITTER_MAX:e}"
    )))
}

/// Draws φ on the spec's grid. Identical `(spec, seed)` give identical points.
pub fn sample_manifold(spec: &ManifoldSpec, seed: u64) -> Result<ManifoldSample> {
    let sigma_axes = spec.sigma_axes();
    let mut factors = Vec::with_capacity(spec.k());
    let mut jitter = Vec::with_capacity(spec.k());
    for (axis, lam) in sigma_axes.iter().zip(spec.lambda()) {
        let (l, j) = axis_factor(axis, *lam)?;
        factors.push(l);
        jitter.push(j);
    }
    let p = spec.n_points();
    let n = spec.n();

    // coordinate-major draws: each ambient coordinate owns one stream
    let mut z = vec![0.0; n * p];
    z.par_chunks_mut(p).enumerate().for_each(|(i, col)| {
        let mut rng = stream(seed, &[Label::Name("coord"), Label::Index(i as u64)]);
        for v in col.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
    });
    let scale = spec.ell() / (n as f64).sqrt();
    let mut points = vec![0.0; p * n];
    const B: usize = 64;
    for i0 in (0..n).step_by(B) {
        for q0 in (0..p).step_by(B) {
            for i in i0..(i0 + B).min(n) {
                for q in q0..(q0 + B).min(p) {
                    points[q * n + i] = scale * z[i * p + q];
                }
            }
        }
    }
    drop(z);

    let grid = spec.grid();
    let mut tmp = Vec::new();
    for (a, l) in factors.iter().enumerate() {
        let na = grid[a];
        let post: usize = grid[a + 1..].iter().product::<usize>() * n;
        let lt = l.transpose();
        for block in points.chunks_mut(na * post) {
            let view = DMatrixView::from_slice(block, post, na);
            tmp.clear();
            tmp.resize(na * post, 0.0);
            let mut out = nalgebra::DMatrixViewMut::from_slice(&mut tmp, post, na);
            out.gemm(1.0, &view, &lt, 0.0);
            block.copy_from_slice(&tmp);
        }
    }
    if let Some(bad) = points.iter().find(|v| !v.is_finite()) {
        return Err(Error::NumericalBreakdown(format!("non-finite sample value {bad}")));
    }
    Ok(ManifoldSample {
        spec: spec.clone(),
        sigma_axes,
        points,
        seed,
        jitter,
    })
}

/// Concentration of ‖φ(σ)‖² across grid points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormAudit {
    pub n_points: usize,
    pub mean: f64,
    pub rel_sd: f64,
    pub expected_mean: f64,
    pub expected_rel_sd: f64,
}

pub fn self_averaging_audit(sample: &ManifoldSample) -> NormAudit {
    let p = sample.n_points();
    let norms: Vec<f64> = (0..p)
        .map(|i| sample.point(i).iter().map(|x| x * x).sum())
        .collect();
    let mean = norms.iter().sum::<f64>() / p as f64;
    let var = norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (p.max(2) - 1) as f64;
    NormAudit {
        n_points: p,
        mean,
        rel_sd: var.sqrt() / mean,
        expected_mean: sample.spec.ell().powi(2),
        expected_rel_sd: (2.0 / sample.dim() as f64).sqrt(),
    }
}

fn check_index(i: usize, len: usize) -> Result<()> {
    if i >= len {
        Err(Error::IndexOutOfRange { index: i, len })
    } else {
        Ok(())
    }
}

/// Σ_k (φ^k(σ_i) − φ^k(σ_j))².
pub fn empirical_chord_sq(sample: &ManifoldSample, i: usize, j: usize) -> Result<f64> {
    check_index(i, sample.n_points())?;
    check_index(j, sample.n_points())?;
    Ok(sample
        .point(i)
        .iter()
        .zip(sample.point(j))
        .map(|(a, b)| (a - b) * (a - b))
        .sum())
}

/// Finite-difference stencil for tangent vectors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FdOrder {
    #[default]
    Second,
    Fourth,
}

impl FdOrder {
    fn half_width(self) -> usize {
        match self {
            FdOrder::Second => 1,
            FdOrder::Fourth => 2,
        }
    }
}

/// Per-point derivatives, orthonormal tangent bases and induced metric.
#[derive(Clone, Debug)]
pub struct TangentFrames {
    k: usize,
    n: usize,
    derivs: Vec<f64>,
    bases: Vec<f64>,
    metric: Vec<f64>,
    interior: Vec<bool>,
}

impl TangentFrames {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn n_points(&self) -> usize {
        self.interior.len()
    }

    /// N×K raw derivatives ∂φ/∂σ^α at point `i`.
    pub fn derivs(&self, i: usize) -> DMatrixView<'_, f64> {
        let s = self.k * self.n;
        DMatrixView::from_slice(&self.derivs[i * s..(i + 1) * s], self.n, self.k)
    }

    /// N×K orthonormal basis U = ∂φ·h^{−1/2} at point `i`.
    pub fn basis(&self, i: usize) -> DMatrixView<'_, f64> {
        let s = self.k * self.n;
        DMatrixView::from_slice(&self.bases[i * s..(i + 1) * s], self.n, self.k)
    }

    /// K×K empirical metric h_αβ at point `i`.
    pub fn metric(&self, i: usize) -> DMatrixView<'_, f64> {
        let s = self.k * self.k;
        DMatrixView::from_slice(&self.metric[i * s..(i + 1) * s], self.k, self.k)
    }

    /// False for points whose stencil touches a grid boundary.
    pub fn is_interior(&self, i: usize) -> bool {
        self.interior[i]
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.n_points()).filter(|&i| self.interior[i]).collect()
    }
}

fn derivative_along(
    sample: &ManifoldSample,
    idx: usize,
    j: usize,
    na: usize,
    stride: usize,
    h: f64,
    order: FdOrder,
    out: &mut [f64],
) {
    let at = |off: isize| sample.point((idx as isize + off * stride as isize) as usize);
    let fourth = order == FdOrder::Fourth && j >= 2 && j + 2 < na;
    if fourth {
        let (m2, m1, p1, p2) = (at(-2), at(-1), at(1), at(2));
        for c in 0..out.len() {
            out[c] = (m2[c] - 8.0 * m1[c] + 8.0 * p1[c] - p2[c]) / (12.0 * h);
        }
    } else if j == 0 {
        let (a, b, c2) = (at(0), at(1), at(2));
        for c in 0..out.len() {
            out[c] = (-3.0 * a[c] + 4.0 * b[c] - c2[c]) / (2.0 * h);
        }
    } else if j + 1 == na {
        let (a, b, c2) = (at(0), at(-1), at(-2));
        for c in 0..out.len() {
            out[c] = (3.0 * a[c] - 4.0 * b[c] + c2[c]) / (2.0 * h);
        }
    } else {
        let (m1, p1) = (at(-1), at(1));
        for c in 0..out.len() {
            out[c] = (p1[c] - m1[c]) / (2.0 * h);
        }
    }
}

/// Tangent vectors by finite differences and their vielbein orthonormalization.
pub fn tangent_frames(sample: &ManifoldSample, order: FdOrder) -> Result<TangentFrames> {
    let spec = &sample.spec;
    let (k, n, p) = (spec.k(), spec.n(), spec.n_points());
    let need = match order {
        FdOrder::Second => 3,
        FdOrder::Fourth => 5,
    };
    if let Some(g) = spec.grid().iter().find(|g| **g < need) {
        return Err(Error::Domain(format!(
            "{order:?}-order differences need at least {need} points per axis, got {g}"
        )));
    }
    let strides: Vec<usize> = (0..k).map(|a| spec.grid()[a + 1..].iter().product()).collect();
    let hw = order.half_width();
    let per: Vec<Result<(Vec<f64>, Vec<f64>, Vec<f64>, bool)>> = (0..p)
        .into_par_iter()
        .map(|idx| {
            let m = spec.multi_index(idx);
            let mut d = vec![0.0; k * n];
            for a in 0..k {
                derivative_along(
                    sample,
                    idx,
                    m[a],
                    spec.grid()[a],
                    strides[a],
                    spec.spacing(a),
                    order,
                    &mut d[a * n..(a + 1) * n],
                );
            }
            let dm = DMatrixView::from_slice(&d, n, k);
            let h = dm.transpose() * dm;
            let eig = SymmetricEigen::new(h.clone());
            let lmax = eig.eigenvalues.max();
            let lmin = eig.eigenvalues.min();
            if !(lmin > 1e-12 * lmax) || !lmin.is_finite() {
                return Err(Error::NumericalBreakdown(format!(
                    "singular empirical metric at point {idx} (eigenvalues {lmin:e}, {lmax:e})"
                )));
            }
            let inv_sqrt = &eig.eigenvectors
                * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
                * eig.eigenvectors.transpose();
            let u = dm * inv_sqrt;
            let interior = m
                .iter()
                .zip(spec.grid())
                .all(|(&j, &na)| j >= hw && j + hw < na);
            Ok((d, u.as_slice().to_vec(), h.as_slice().to_vec(), interior))
        })
        .collect();
    let mut frames = TangentFrames {
        k,
        n,
        derivs: Vec::with_capacity(p * k * n),
        bases: Vec::with_capacity(p * k * n),
        metric: Vec::with_capacity(p * k * k),
        interior: Vec::with_capacity(p),
    };
    for r in per {
        let (d, u, h, int) = r?;
        frames.derivs.extend(d);
        frames.bases.extend(u);
        frames.metric.extend(h);
        frames.interior.push(int);
    }
    Ok(frames)
}

/// Cosines of the principal angles between the tangent planes at `i` and `j`, descending.
pub fn empirical_principal_angles(frames: &TangentFrames, i: usize, j: usize) -> Result<Vec<f64>> {
    check_index(i, frames.n_points())?;
    check_index(j, frames.n_points())?;
    let c = frames.basis(i).transpose() * frames.basis(j);
    Ok(sorted_singular_values(&c)
        .into_iter()
        .map(|s| s.clamp(0.0, 1.0))
        .collect())
}

/// Signed cosine between the unit tangent vectors of a curve (K = 1).
pub fn signed_tangent_cosine(frames: &TangentFrames, i: usize, j: usize) -> Result<f64> {
    if frames.k() != 1 {
        return Err(Error::Domain(format!("signed tangent cosine needs K = 1, got {}", frames.k())));
    }
    check_index(i, frames.n_points())?;
    check_index(j, frames.n_points())?;
    Ok(frames.basis(i).dot(&frames.basis(j)))
}

/// Writes the binary dump: header then row-major little-endian points.
pub fn write_dump<W: Write>(sample: &ManifoldSample, mut w: W) -> Result<()> {
    let spec = &sample.spec;
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&DUMP_VERSION.to_le_bytes())?;
    w.write_all(&(spec.k() as u32).to_le_bytes())?;
    w.write_all(&(spec.n() as u32).to_le_bytes())?;
    for &g in spec.grid() {
        w.write_all(&(g as u32).to_le_bytes())?;
    }
    w.write_all(&spec.ell().to_le_bytes())?;
    for v in spec.lambda().iter().chain(spec.extent()) {
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&sample.seed.to_le_bytes())?;
    let mut buf = Vec::with_capacity(sample.points.len() * 8);
    for v in &sample.points {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

pub fn read_dump<R: Read>(mut r: R) -> Result<ManifoldSample> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Io("not a manifold dump (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != DUMP_VERSION {
        return Err(Error::Io(format!("unsupported dump version {version}")));
    }
    let k = read_u32(&mut r)? as usize;
    let n = read_u32(&mut r)? as usize;
    let grid = (0..k).map(|_| read_u32(&mut r).map(|g| g as usize)).collect::<Result<Vec<_>>>()?;
    let ell = read_f64(&mut r)?;
    let lambda = (0..k).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let extent = (0..k).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    let seed = u64::from_le_bytes(b);
    let spec = ManifoldSpec::new(n, ell, lambda, extent, grid)?;
    let mut raw = vec![0u8; spec.n_points() * n * 8];
    r.read_exact(&mut raw)?;
    let points = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(ManifoldSample {
        sigma_axes: spec.sigma_axes(),
        spec,
        points,
        seed,
        jitter: Vec::new(),
    })
}
