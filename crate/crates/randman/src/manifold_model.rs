//! Ensemble parameters and the closed-form expected geometry of the
//! Gaussian random manifold: chord lengths, principal angles between
//! tangent planes, cone angles for a cell partition, and the cells themselves.

use serde::Serialize;

use crate::{Error, Result};

/// Which of two closed forms to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    Exact,
    #[default]
    Approx,
}

/// Parameters of the manifold ensemble and its sampling grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ManifoldSpec {
    n: usize,
    ell: f64,
    lambda: Vec<f64>,
    extent: Vec<f64>,
    grid: Vec<usize>,
}

impl ManifoldSpec {
    /// `lambda`, `extent` and `grid` each carry one entry per intrinsic axis.
    pub fn new(
        n: usize,
        ell: f64,
        lambda: Vec<f64>,
        extent: Vec<f64>,
        grid: Vec<usize>,
    ) -> Result<Self> {
        let k = lambda.len();
        if k == 0 {
            return Err(Error::InvalidSpec("K must be at least 1".into()));
        }
        if extent.len() != k || grid.len() != k {
            return Err(Error::InvalidSpec(format!(
                "per-axis lengths differ: lambda {}, extent {}, grid {}",
                k,
                extent.len(),
                grid.len()
            )));
        }
        if n == 0 {
            return Err(Error::InvalidSpec("N must be at least 1".into()));
        }
        if !(ell > 0.0 && ell.is_finite()) {
            return Err(Error::InvalidSpec(format!("ell must be positive, got {ell}")));
        }
        if let Some(l) = lambda.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidSpec(format!("lambda must be positive, got {l}")));
        }
        if let Some(l) = extent.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::InvalidSpec(format!("extent must be positive, got {l}")));
        }
        if let Some(g) = grid.iter().find(|g| **g < 2) {
            return Err(Error::InvalidSpec(format!("grid counts must be at least 2, got {g}")));
        }
        let spec = ManifoldSpec { n, ell, lambda, extent, grid };
        let v = spec.ln_volume();
        if !v.is_finite() {
            return Err(Error::InvalidSpec("volume ratio is not finite".into()));
        }
        Ok(spec)
    }

    /// K axes with λ = 1 and L = V^{1/K}, `per_lambda` grid intervals per correlation length.
    pub fn isotropic(k: usize, n: usize, ell: f64, ln_v: f64, per_lambda: f64) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidSpec("K must be at least 1".into()));
        }
        let side = (ln_v / k as f64).exp();
        let count = ((side * per_lambda).ceil() as usize + 1).max(2);
        ManifoldSpec::new(n, ell, vec![1.0; k], vec![side; k], vec![count; k])
    }

    pub fn k(&self) -> usize {
        self.lambda.len()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn extent(&self) -> &[f64] {
        &self.extent
    }

    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    /// Total number of grid points P.
    pub fn n_points(&self) -> usize {
        self.grid.iter().product()
    }

    /// ln V with V = ∏ L_α/λ_α.
    pub fn ln_volume(&self) -> f64 {
        self.extent
            .iter()
            .zip(&self.lambda)
            .map(|(l, lam)| (l / lam).ln())
            .sum()
    }

    pub fn volume(&self) -> f64 {
        self.ln_volume().exp()
    }

    /// Grid spacing along `axis`; points run from 0 to L inclusive.
    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / (self.grid[axis] - 1) as f64
    }

    pub fn sigma_axes(&self) -> Vec<Vec<f64>> {
        (0..self.k())
            .map(|a| {
                let h = self.spacing(a);
                (0..self.grid[a]).map(|j| j as f64 * h).collect()
            })
            .collect()
    }

    /// Per-axis indices of flat point `idx` (last axis fastest).
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.k()];
        for a in (0..self.k()).rev() {
            out[a] = idx % self.grid[a];
            idx /= self.grid[a];
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.grid)
            .fold(0, |acc, (&j, &n)| acc * n + j)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(a, &j)| j as f64 * self.spacing(a))
            .collect()
    }

    /// Expected induced metric diagonal (ℓ/λ_α)².
    pub fn metric_diag(&self) -> Vec<f64> {
        self.lambda.iter().map(|l| (self.ell / l).powi(2)).collect()
    }
}

/// Cells of side γλ_α with centers (m + ½)γλ_α.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellPartition {
    pub gamma: f64,
    pub counts: Vec<usize>,
    pub axis_centers: Vec<Vec<f64>>,
    lambda: Vec<f64>,
}

impl CellPartition {
    pub fn total(&self) -> usize {
        self.counts.iter().product()
    }

    /// Center of the cell with per-axis index `m`.
    pub fn center(&self, m: &[usize]) -> Vec<f64> {
        m.iter()
            .enumerate()
            .map(|(a, &i)| self.axis_centers[a][i])
            .collect()
    }

    /// Every cell center, last axis fastest.
    pub fn centers(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.total());
        let mut m = vec![0usize; self.counts.len()];
        for _ in 0..self.total() {
            out.push(self.center(&m));
            for a in (0..m.len()).rev() {
                m[a] += 1;
                if m[a] < self.counts[a] {
                    break;
                }
                m[a] = 0;
            }
        }
        out
    }

    /// Recovers the integer cell index from a center.
    pub fn index_of(&self, center: &[f64]) -> Vec<i64> {
        center
            .iter()
            .zip(&self.lambda)
            .map(|(s, l)| (s / (self.gamma * l) - 0.5).round() as i64)
            .collect()
    }
}

/// Expected geometry at squared intrinsic separation ρ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExpectedGeometry {
    pub rho: f64,
    pub chord_sq: f64,
    pub principal_cosines: Vec<f64>,
    pub metric_diag: Vec<f64>,
}

fn check_rho(rho: f64) -> Result<()> {
    if rho < 0.0 || rho.is_nan() {
        Err(Error::NegativeRho(rho))
    } else {
        Ok(())
    }
}

/// ρ = Σ_α (Δσ^α/λ_α)².
pub fn intrinsic_separation(spec: &ManifoldSpec, s1: &[f64], s2: &[f64]) -> Result<f64> {
    let k = spec.k();
    for s in [s1, s2] {
        if s.len() != k {
            return Err(Error::DimensionMismatch { expected: k, got: s.len() });
        }
    }
    Ok(s1
        .iter()
        .zip(s2)
        .zip(spec.lambda())
        .map(|((a, b), l)| ((a - b) / l).powi(2))
        .sum())
}

/// 2ℓ²(1 − e^{−ρ/2}).
pub fn expected_chord_sq(rho: f64, ell: f64) -> Result<f64> {
    check_rho(rho)?;
    if !(ell > 0.0) {
        return Err(Error::Domain(format!("ell must be positive, got {ell}")));
    }
    Ok(-2.0 * ell * ell * (-rho / 2.0).exp_m1())
}

/// K−1 cosines e^{−ρ/2} followed by |1−ρ|e^{−ρ/2}.
pub fn expected_principal_cosines(rho: f64, k: usize) -> Result<Vec<f64>> {
    check_rho(rho)?;
    if k == 0 {
        return Err(Error::Domain("K must be at least 1".into()));
    }
    let g = (-rho / 2.0).exp();
    let mut out = vec![g; k];
    out[k - 1] = (1.0 - rho).abs() * g;
    Ok(out)
}

/// Signed cosine (1−ρ)e^{−ρ/2} between tangent vectors of a curve.
pub fn expected_tangent_cosine(rho: f64) -> Result<f64> {
    check_rho(rho)?;
    Ok((1.0 - rho) * (-rho / 2.0).exp())
}

pub fn expected_geometry(spec: &ManifoldSpec, rho: f64) -> Result<ExpectedGeometry> {
    Ok(ExpectedGeometry {
        rho,
        chord_sq: expected_chord_sq(rho, spec.ell())?,
        principal_cosines: expected_principal_cosines(rho, spec.k())?,
        metric_diag: spec.metric_diag(),
    })
}

/// sin θ_C = γ√((K/2)/(1 − e^{−γ²‖m−n‖²/2})). An infinite offset gives the limit γ√(K/2).
pub fn chordal_cone_angle(gamma: f64, k: usize, cell_offset_norm: f64) -> Result<f64> {
    if !(gamma > 0.0) || k == 0 || !(cell_offset_norm > 0.0) {
        return Err(Error::Domain(format!(
            "need γ > 0, K ≥ 1, ‖m−n‖ > 0; got γ={gamma}, K={k}, ‖m−n‖={cell_offset_norm}"
        )));
    }
    let denom = -(-(gamma * cell_offset_norm).powi(2) / 2.0).exp_m1();
    let s = gamma * (k as f64 / 2.0 / denom).sqrt();
    if s > 1.0 {
        Err(Error::ConeUndefined(s))
    } else {
        Ok(s)
    }
}

/// Largest principal angle between the central tangent plane and any
/// tangent plane in a cell of size γ (corner of the cell).
pub fn tangential_cone_angle(gamma: f64, k: usize, form: Form) -> Result<f64> {
    if gamma < 0.0 || gamma.is_nan() || k == 0 {
        return Err(Error::Domain(format!("need γ ≥ 0, K ≥ 1; got γ={gamma}, K={k}")));
    }
    let kf = k as f64;
    let s = match form {
        Form::Approx => gamma / 2.0 * (3.0 * kf).sqrt(),
        Form::Exact => {
            let x = gamma * gamma * kf / 4.0;
            let common = -(-x).exp_m1();
            // 1 − (1−x)²e^{−x} = (1 − e^{−x}) + x(2 − x)e^{−x}
            let corner = common + x * (2.0 - x) * (-x).exp();
            common.max(corner).sqrt()
        }
    };
    if s > 1.0 {
        Err(Error::ConeUndefined(s))
    } else {
        Ok(s)
    }
}

/// Largest angle ψ between a short intracellular chord and the tangent
/// vector it approximates: γ²K/(4√6), or exactly tan ψ = √((sinh x − x)/x), x = γ²K/4.
pub fn short_chord_tangent_angle(gamma: f64, k: usize, form: Form) -> f64 {
    let rho = gamma * gamma * k as f64;
    match form {
        Form::Approx => rho / (4.0 * 6f64.sqrt()),
        Form::Exact => {
            let x = rho / 4.0;
            if x == 0.0 {
                return 0.0;
            }
            let excess = if x < 1e-2 {
                let x2 = x * x;
                x * x2 / 6.0 * (1.0 + x2 / 20.0 + x2 * x2 / 840.0)
            } else {
                x.sinh() - x
            };
            (excess / x).sqrt().atan()
        }
    }
}

/// Partition of the grid extent into cells of side γλ_α.
pub fn make_cells(spec: &ManifoldSpec, gamma: f64) -> Result<CellPartition> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::Domain(format!("γ must be positive, got {gamma}")));
    }
    let mut counts = Vec::with_capacity(spec.k());
    let mut axis_centers = Vec::with_capacity(spec.k());
    for (l, lam) in spec.extent().iter().zip(spec.lambda()) {
        let side = gamma * lam;
        let c = ((l / side) - 1e-12).ceil().max(1.0) as usize;
        counts.push(c);
        axis_centers.push((0..c).map(|m| (m as f64 + 0.5) * side).collect());
    }
    Ok(CellPartition {
        gamma,
        counts,
        axis_centers,
        lambda: spec.lambda().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multi_index_round_trip() {
        let spec = ManifoldSpec::new(3, 1.0, vec![1.0, 2.0], vec![1.0, 1.0], vec![3, 5]).unwrap();
        for i in 0..spec.n_points() {
            assert_eq!(spec.flat_index(&spec.multi_index(i)), i);
        }
        assert_eq!(spec.multi_index(7), vec![1, 2]);
    }

    #[test]
    fn exact_tangential_small_gamma_matches_leading_order() {
        let e = tangential_cone_angle(1e-4, 2, Form::Exact).unwrap();
        let a = tangential_cone_angle(1e-4, 2, Form::Approx).unwrap();
        assert!((e - a).abs() / a < 1e-7);
    }
}
