//! Dense hermitian and unitary linear algebra.
//!
//! Everything here is a pure function of its inputs. Eigenvectors are put in a
//! canonical gauge (ascending eigenvalues, degenerate clusters re-orthonormalized
//! in index order, largest component real and positive) so repeated calls are
//! bit-identical.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::{Complex, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Relative hermiticity tolerance: `tol_herm = HERM_TOL * (1 + |M|)`.
pub const HERM_TOL: f64 = 1e-10;
/// Relative reconstruction tolerance.
pub const RECON_TOL: f64 = 1e-9;
/// Relative zero-eigenvalue tolerance.
pub const ZERO_TOL: f64 = 1e-8;
/// Absolute tolerance for `|U*U - 1|`.
pub const UNITARY_TOL: f64 = 1e-8;

const CLUSTER_TOL: f64 = 1e-12;

/// `1 + |M|_F`, the scale all relative tolerances are measured against.
pub fn scale_of(m: &CMatrix) -> f64 {
    1.0 + m.norm()
}

pub fn check_finite(m: &CMatrix) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "expected a nonempty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// `|M - M*|_F`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn check_hermitian(m: &CMatrix) -> Result<()> {
    check_square(m)?;
    check_finite(m)?;
    let tol = HERM_TOL * scale_of(m);
    let defect = hermiticity_defect(m);
    if defect > tol {
        return Err(Error::NotHermitian { defect, tol });
    }
    Ok(())
}

/// `|U*U - 1|_F`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

pub fn check_unitary(u: &CMatrix) -> Result<()> {
    check_square(u)?;
    check_finite(u)?;
    let defect = unitarity_defect(u);
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary { defect });
    }
    Ok(())
}

/// Spectral decomposition `M = V diag(values) V*` of a hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    /// Eigenvalues, ascending.
    pub values: Vec<f64>,
    /// Column eigenvectors, unitary.
    pub vectors: CMatrix,
}

impl EigDecomp {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| C64::new(x, 0.0))
    }

    /// `V diag(f(values)) V*`.
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &x) in self.values.iter().enumerate() {
            let fx = f(x);
            scaled.column_mut(j).scale_mut(1.0);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fx;
            }
        }
        scaled * self.vectors.adjoint()
    }

    /// Projection onto the span of the eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projection_where(&self, keep: impl Fn(f64) -> bool) -> CMatrix {
        self.map(|x| if keep(x) { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// Columns of the eigenvectors whose eigenvalue satisfies `keep`, in order.
    pub fn frame_where(&self, keep: impl Fn(f64) -> bool) -> CMatrix {
        let cols: Vec<usize> = (0..self.dim()).filter(|&j| keep(self.values[j])).collect();
        self.vectors.select_columns(cols.iter())
    }
}

/// Hermitian eigendecomposition with a deterministic eigenvector gauge.
pub fn eig_hermitian(m: &CMatrix) -> Result<EigDecomp> {
    check_hermitian(m)?;
    let n = m.nrows();
    let scale = scale_of(m);
    let sym = (m + m.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&j| eig.eigenvalues[j]).collect();
    let mut vectors = eig.eigenvectors.select_columns(order.iter());

    // degenerate clusters: modified Gram-Schmidt in ascending column order
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= CLUSTER_TOL * scale {
            end += 1;
        }
        if end - start > 1 {
            for j in start..end {
                for i in start..j {
                    let proj = vectors.column(i).dotc(&vectors.column(j));
                    let ci = vectors.column(i).clone_owned();
                    vectors.column_mut(j).axpy(-proj, &ci, C64::new(1.0, 0.0));
                }
                let nrm = vectors.column(j).norm();
                vectors.column_mut(j).unscale_mut(nrm);
            }
        }
        start = end;
    }
    fix_column_phases(&mut vectors);
    Ok(EigDecomp { values, vectors })
}

/// Rotates each column so that its first largest-magnitude entry is real positive.
pub fn fix_column_phases(v: &mut CMatrix) {
    for j in 0..v.ncols() {
        let col = v.column(j);
        let max = col.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if max == 0.0 {
            continue;
        }
        let pivot = col
            .iter()
            .position(|z| z.norm() >= max * (1.0 - 1e-9))
            .unwrap_or(0);
        let z = col[pivot];
        let phase = z.conj() / z.norm();
        for e in v.column_mut(j).iter_mut() {
            *e *= phase;
        }
    }
}

/// `f(M)` for a real function `f`; the result is hermitian.
pub fn functional_calculus(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let eig = eig_hermitian(m)?;
    let out = eig.map(|x| C64::new(f(x), 0.0));
    Ok((&out + out.adjoint()).scale(0.5))
}

/// `f(M)` for a complex-valued function `f`.
pub fn functional_calculus_complex(m: &CMatrix, f: impl Fn(f64) -> C64) -> Result<CMatrix> {
    Ok(eig_hermitian(m)?.map(f))
}

/// Default absolute zero tolerance for `m`.
pub fn zero_tol(m: &CMatrix) -> f64 {
    ZERO_TOL * scale_of(m)
}

/// Spectral projection `1_{(a,b)}(M)`; `b` may be infinite. The boundaries must
/// stay at least `tol` (default [`zero_tol`]) away from the spectrum.
pub fn spectral_projection(m: &CMatrix, a: f64, b: f64, tol: Option<f64>) -> Result<CMatrix> {
    let eig = eig_hermitian(m)?;
    spectral_projection_of(&eig, a, b, tol.unwrap_or_else(|| zero_tol(m)))
}

pub fn spectral_projection_of(eig: &EigDecomp, a: f64, b: f64, tol: f64) -> Result<CMatrix> {
    for &x in &eig.values {
        for boundary in [a, b] {
            if boundary.is_finite() && (x - boundary).abs() <= tol {
                return Err(Error::BoundaryHitsSpectrum { boundary, eigenvalue: x });
            }
        }
    }
    Ok(eig.projection_where(|x| x > a && x < b))
}

/// Eigenvalue counts above, below and within `tol_zero` of zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
    pub zero: usize,
}

impl Signature {
    pub fn of_values(values: &[f64], tol_zero: f64) -> Self {
        let plus = values.iter().filter(|&&x| x > tol_zero).count();
        let minus = values.iter().filter(|&&x| x < -tol_zero).count();
        Signature { plus, minus, zero: values.len() - plus - minus }
    }

    pub fn index(&self) -> i64 {
        self.plus as i64 - self.minus as i64
    }
}

pub fn signature(m: &CMatrix, tol_zero: Option<f64>) -> Result<Signature> {
    let eig = eig_hermitian(m)?;
    Ok(Signature::of_values(&eig.values, tol_zero.unwrap_or_else(|| zero_tol(m))))
}

pub fn determinant(m: &CMatrix) -> C64 {
    m.clone().lu().determinant()
}

pub fn min_singular_value(m: &CMatrix) -> f64 {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Principal-branch phase of `b / a`.
pub fn phase_step(a: C64, b: C64) -> f64 {
    (b * a.conj()).arg()
}

fn sample_determinants(samples: &[CMatrix], gap_min: f64) -> Result<Vec<C64>> {
    samples
        .iter()
        .enumerate()
        .map(|(index, m)| {
            check_square(m)?;
            let min_singular = min_singular_value(m);
            if min_singular < gap_min {
                return Err(Error::SingularSample { index, min_singular });
            }
            Ok(determinant(m))
        })
        .collect()
}

fn checked_step(step: usize, a: C64, b: C64) -> Result<f64> {
    let d = phase_step(a, b);
    if d.abs() >= FRAC_PI_2 {
        return Err(Error::SamplingTooCoarse { step, phase_step: d });
    }
    Ok(d)
}

/// Winding number of `det` around a closed loop of invertible matrices. The
/// last sample is joined back to the first; every step must turn the phase by
/// less than pi/2.
pub fn det_phase_winding(samples: &[CMatrix], gap_min: f64) -> Result<i64> {
    if samples.is_empty() {
        return Ok(0);
    }
    let dets = sample_determinants(samples, gap_min)?;
    let n = dets.len();
    let mut total = 0.0;
    for k in 0..n {
        total += checked_step(k, dets[k], dets[(k + 1) % n])?;
    }
    Ok((total / TAU).round() as i64)
}

/// Accumulated determinant phase (radians) along an open path.
pub fn det_phase_accumulation(samples: &[CMatrix], gap_min: f64) -> Result<f64> {
    let dets = sample_determinants(samples, gap_min)?;
    let mut total = 0.0;
    for k in 1..dets.len() {
        total += checked_step(k - 1, dets[k - 1], dets[k])?;
    }
    Ok(total)
}

/// Phase accumulated by a nonvanishing scalar function along a grid. Steps
/// turning by pi/2 or more are bisected (evaluating `f` at midpoints) up to
/// `refine_max` times before giving up.
pub fn phase_along<F>(f: &F, grid: &[f64], values: &[C64], refine_max: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<C64>,
{
    let mut total = 0.0;
    for k in 1..grid.len() {
        total += refine_step(f, k - 1, grid[k - 1], grid[k], values[k - 1], values[k], refine_max)?;
    }
    Ok(total)
}

fn refine_step<F>(f: &F, step: usize, t0: f64, t1: f64, z0: C64, z1: C64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<C64>,
{
    let d = phase_step(z0, z1);
    if d.abs() < FRAC_PI_2 {
        return Ok(d);
    }
    if depth == 0 {
        return Err(Error::SamplingTooCoarse { step, phase_step: d });
    }
    let tm = 0.5 * (t0 + t1);
    let zm = f(tm)?;
    Ok(refine_step(f, step, t0, tm, z0, zm, depth - 1)? + refine_step(f, step, tm, t1, zm, z1, depth - 1)?)
}

/// Eigendecomposition `U = V diag(exp(i phases)) V*` of a unitary matrix.
#[derive(Debug, Clone)]
pub struct UnitaryEig {
    /// Eigenphases in (-pi, pi], ascending.
    pub phases: Vec<f64>,
    pub vectors: CMatrix,
}

impl UnitaryEig {
    pub fn map(&self, f: impl Fn(f64) -> C64) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, &p) in self.phases.iter().enumerate() {
            let fp = f(p);
            for z in scaled.column_mut(j).iter_mut() {
                *z *= fp;
            }
        }
        scaled * self.vectors.adjoint()
    }
}

/// Eigenphases and eigenvectors of a unitary matrix, using only hermitian
/// solvers: diagonalize the real part, then split each near-degenerate cluster
/// with the imaginary part rotated to the cluster's mean phase.
pub fn eig_unitary(u: &CMatrix) -> Result<UnitaryEig> {
    check_unitary(u)?;
    let n = u.nrows();
    let re = (u + u.adjoint()).scale(0.5);
    let eig = eig_hermitian(&re)?;
    let mut vectors = eig.vectors.clone();

    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && eig.values[end] - eig.values[end - 1] <= 1e-6 {
            end += 1;
        }
        if end - start > 1 {
            let basis = vectors.columns(start, end - start).clone_owned();
            let restricted = basis.adjoint() * u * &basis;
            let mean = restricted.trace();
            let rot = if mean.norm() > 1e-12 { mean.conj() / mean.norm() } else { C64::new(1.0, 0.0) };
            let rotated = restricted.scale(1.0).map(|z| z * rot);
            let im = (&rotated - rotated.adjoint()).map(|z| z * C64::new(0.0, -0.5));
            let inner = eig_hermitian(&im)?;
            let mixed = &basis * &inner.vectors;
            vectors.columns_mut(start, end - start).copy_from(&mixed);
        }
        start = end;
    }

    let mut pairs: Vec<(f64, usize)> = (0..n)
        .map(|j| {
            let v = vectors.column(j);
            let z = v.dotc(&(u * v));
            (z.arg(), j)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let phases = pairs.iter().map(|p| if p.0 <= -PI { PI } else { p.0 }).collect();
    let mut vectors = vectors.select_columns(pairs.iter().map(|p| &p.1));
    fix_column_phases(&mut vectors);
    Ok(UnitaryEig { phases, vectors })
}

/// `U^s` along the principal logarithm.
pub fn unitary_power(u: &CMatrix, s: f64) -> Result<CMatrix> {
    let eig = eig_unitary(u)?;
    Ok(eig.map(|p| C64::from_polar(1.0, s * p)))
}

/// Geodesic interpolation `a (a* b)^s` between two unitaries.
pub fn unitary_geodesic(a: &CMatrix, b: &CMatrix, s: f64) -> Result<CMatrix> {
    Ok(a * unitary_power(&(a.adjoint() * b), s)?)
}

/// Optimal assignment of the columns of `prev` to the columns of `next`
/// maximizing the total squared overlap `|<prev_i, next_j>|^2`. Entry `i` of the
/// result is the column of `next` continuing column `i` of `prev`.
pub fn match_by_overlap(prev: &CMatrix, next: &CMatrix) -> Vec<usize> {
    let n = prev.ncols();
    let overlaps = prev.adjoint() * next;
    let cost: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| -overlaps[(i, j)].norm_sqr()).collect())
        .collect();
    min_cost_assignment(&cost)
}

/// Hungarian algorithm on a square cost table; ties resolve toward lower indices.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; n];
    for j in 1..=n {
        assignment[p[j] - 1] = j - 1;
    }
    assignment
}

/// Orthonormal frame spanning the column space of a full-rank `a` (polar factor `a (a*a)^{-1/2}`).
pub fn polar_frame(a: &CMatrix) -> Result<CMatrix> {
    let gram = a.adjoint() * a;
    let eig = eig_hermitian(&gram)?;
    if eig.values.first().copied().unwrap_or(0.0) <= 1e-14 * scale_of(&gram) {
        return Err(Error::DimensionMismatch("frame is rank deficient".into()));
    }
    Ok(a * eig.map(|x| C64::new(1.0 / x.sqrt(), 0.0)))
}

/// Block diagonal `diag(a, b)`.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMatrix::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

/// Real scalar times identity.
pub fn scalar_identity(n: usize, x: f64) -> CMatrix {
    CMatrix::from_diagonal_element(n, n, C64::new(x, 0.0))
}

/// Diagonal matrix with the given real entries.
pub fn real_diagonal(values: &[f64]) -> CMatrix {
    let n = values.len();
    let mut m = CMatrix::zeros(n, n);
    for (i, &x) in values.iter().enumerate() {
        m[(i, i)] = C64::new(x, 0.0);
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        crate::fixtures::random_hermitian(&mut ChaCha8Rng::seed_from_u64(seed), n, 1.0)
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let eig = eig_hermitian(&CMatrix::identity(3, 3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let eig = eig_hermitian(&real_diagonal(&[2.0, -1.0])).unwrap();
        assert_eq!(eig.values, vec![-1.0, 2.0]);
    }

    #[test]
    fn random_reconstruction_residual() {
        let m = random_hermitian(6, 11);
        let eig = eig_hermitian(&m).unwrap();
        let residual = (eig.reconstruct() - &m).norm();
        assert!(residual < 1e-10, "residual {residual}");
        assert!(unitarity_defect(&eig.vectors) < 1e-10);
        assert!(residual <= RECON_TOL * scale_of(&m));
    }

    #[test]
    fn eig_is_deterministic() {
        let m = random_hermitian(5, 3);
        let a = eig_hermitian(&m).unwrap();
        let b = eig_hermitian(&m).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn bounded_transform_of_diagonal() {
        let m = real_diagonal(&[0.0, 3.0]);
        let out = functional_calculus(&m, |x| x / (1.0 + x * x).sqrt()).unwrap();
        assert!((out[(0, 0)].re).abs() < 1e-15);
        assert!((out[(1, 1)].re - 3.0 / 10f64.sqrt()).abs() < 1e-14);
        assert!(out[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn identity_function_reproduces_matrix() {
        let m = random_hermitian(4, 5);
        let out = functional_calculus(&m, |x| x).unwrap();
        assert!((out - m).norm() < 1e-12);
    }

    #[test]
    fn step_function_gives_projection() {
        let m = real_diagonal(&[-2.0, 5.0]);
        let p = functional_calculus(&m, |x| if x >= 0.0 { 1.0 } else { 0.0 }).unwrap();
        assert!((p - real_diagonal(&[0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn composition_of_monotone_functions() {
        let m = random_hermitian(5, 8);
        let g = |x: f64| x.atan();
        let f = |x: f64| x * x * x + x;
        let direct = functional_calculus(&m, |x| f(g(x))).unwrap();
        let nested = functional_calculus(&functional_calculus(&m, g).unwrap(), f).unwrap();
        assert!((direct - nested).norm() < 1e-11);
    }

    #[test]
    fn projection_examples() {
        let p = spectral_projection(&real_diagonal(&[-1.0, 1.0]), 0.0, 2.0, None).unwrap();
        assert!((p - real_diagonal(&[0.0, 1.0])).norm() < 1e-15);
        let all = spectral_projection(&real_diagonal(&[-1.0, 1.0]), -5.0, 5.0, None).unwrap();
        assert!((all - CMatrix::identity(2, 2)).norm() < 1e-15);
        let hit = spectral_projection(&real_diagonal(&[-1.0, 1.0]), 1.0, 2.0, None);
        assert!(matches!(hit, Err(Error::BoundaryHitsSpectrum { .. })));
    }

    #[test]
    fn projection_rank_matches_count_in_gap() {
        let m = random_hermitian(6, 21);
        let eig = eig_hermitian(&m).unwrap();
        // put [a, b] in gaps of the spectrum
        let a = 0.5 * (eig.values[1] + eig.values[2]);
        let b = 0.5 * (eig.values[4] + eig.values[5]);
        let p = spectral_projection(&m, a, b, None).unwrap();
        let rank = p.trace().re.round() as usize;
        assert_eq!(rank, 3);
        assert!((&p * &p - &p).norm() < 1e-12);
        assert!((&p * &m - &m * &p).norm() < 1e-10);
    }

    #[test]
    fn signature_examples() {
        let s = signature(&real_diagonal(&[1.0, -1.0, -1.0]), None).unwrap();
        assert_eq!((s.plus, s.minus, s.zero), (1, 2, 0));
        let z = signature(&CMatrix::zeros(2, 2), None).unwrap();
        assert_eq!((z.plus, z.minus, z.zero), (0, 0, 2));
        let r = random_hermitian(5, 2);
        let values = eig_hermitian(&r).unwrap().values;
        let s = signature(&r, None).unwrap();
        assert_eq!(s.zero, 0);
        assert_eq!(s.minus, values.iter().filter(|&&x| x < 0.0).count());
    }

    fn scalar_loop(n: usize, f: impl Fn(f64) -> CMatrix) -> Vec<CMatrix> {
        (0..n).map(|k| f(TAU * k as f64 / n as f64)).collect()
    }

    #[test]
    fn winding_examples() {
        let constant = scalar_loop(16, |_| CMatrix::identity(2, 2));
        assert_eq!(det_phase_winding(&constant, 1e-6).unwrap(), 0);
        let circle = scalar_loop(16, |th| CMatrix::from_element(1, 1, C64::from_polar(1.0, th)));
        assert_eq!(det_phase_winding(&circle, 1e-6).unwrap(), 1);
        let mixed = scalar_loop(64, |th| {
            let mut m = CMatrix::zeros(2, 2);
            m[(0, 0)] = C64::from_polar(1.0, th);
            m[(1, 1)] = C64::from_polar(1.0, -2.0 * th);
            m
        });
        assert_eq!(det_phase_winding(&mixed, 1e-6).unwrap(), -1);
    }

    #[test]
    fn winding_refuses_coarse_and_singular_loops() {
        let coarse = scalar_loop(3, |th| CMatrix::from_element(1, 1, C64::from_polar(1.0, th)));
        assert!(matches!(det_phase_winding(&coarse, 1e-6), Err(Error::SamplingTooCoarse { .. })));
        let singular = scalar_loop(8, |th| CMatrix::from_element(1, 1, C64::new(th.cos(), 0.0)));
        assert!(matches!(det_phase_winding(&singular, 1e-3), Err(Error::SingularSample { .. })));
    }

    #[test]
    fn winding_reversal_and_direct_sum() {
        let a = scalar_loop(40, |th| CMatrix::from_element(1, 1, C64::from_polar(1.0, 2.0 * th)));
        let b = scalar_loop(40, |th| CMatrix::from_element(1, 1, C64::from_polar(1.0, -th)));
        let mut rev = a.clone();
        rev.reverse();
        assert_eq!(det_phase_winding(&rev, 1e-6).unwrap(), -2);
        let sum: Vec<CMatrix> = a.iter().zip(&b).map(|(x, y)| block_diag(x, y)).collect();
        assert_eq!(det_phase_winding(&sum, 1e-6).unwrap(), 1);
    }

    #[test]
    fn open_accumulation() {
        let half: Vec<CMatrix> = (0..=8)
            .map(|k| CMatrix::from_element(1, 1, C64::from_polar(1.0, PI * k as f64 / 8.0)))
            .collect();
        assert!((det_phase_accumulation(&half, 1e-6).unwrap() - PI).abs() < 1e-12);
    }

    #[test]
    fn adaptive_phase_refines_coarse_steps() {
        let f = |t: f64| Ok(C64::from_polar(1.0, TAU * 2.75 * t));
        let grid = [0.0, 1.0];
        let values = [f(0.0).unwrap(), f(1.0).unwrap()];
        let phase = phase_along(&f, &grid, &values, 6).unwrap();
        assert!((phase - 2.75 * TAU).abs() < 1e-9);
        assert!(phase_along(&f, &grid, &values, 1).is_err());
    }

    #[test]
    fn unitary_eigenphases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = crate::fixtures::random_unitary(&mut rng, 4);
        let phases = [-2.0, 0.3, 0.3, 2.9];
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            4,
            phases.iter().map(|&p| C64::from_polar(1.0, p)),
        ));
        let u = &v * d * v.adjoint();
        let eig = eig_unitary(&u).unwrap();
        for (a, b) in eig.phases.iter().zip(phases) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!((eig.map(|p| C64::from_polar(1.0, p)) - &u).norm() < 1e-10);
        // cos-degenerate pair +-theta
        let d2 = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from_polar(1.0, 1.0),
            C64::from_polar(1.0, -1.0),
        ]));
        let w = crate::fixtures::random_unitary(&mut rng, 2);
        let u2 = &w * d2 * w.adjoint();
        let eig2 = eig_unitary(&u2).unwrap();
        assert!((eig2.phases[0] + 1.0).abs() < 1e-10 && (eig2.phases[1] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn geodesic_endpoints() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = crate::fixtures::random_unitary(&mut rng, 3);
        let b = crate::fixtures::random_unitary(&mut rng, 3);
        assert!((unitary_geodesic(&a, &b, 0.0).unwrap() - &a).norm() < 1e-10);
        assert!((unitary_geodesic(&a, &b, 1.0).unwrap() - &b).norm() < 1e-9);
        assert!(unitarity_defect(&unitary_geodesic(&a, &b, 0.37).unwrap()) < 1e-10);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        use rand::Rng;
        for _ in 0..50 {
            let n = rng.gen_range(1..6);
            let cost: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
            let got = min_cost_assignment(&cost);
            let got_cost: f64 = got.iter().enumerate().map(|(i, &j)| cost[i][j]).sum();
            let best = permutations(n)
                .into_iter()
                .map(|p| p.iter().enumerate().map(|(i, &j)| cost[i][j]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            assert!((got_cost - best).abs() < 1e-12);
        }
    }

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in permutations(n - 1) {
            for pos in 0..n {
                let mut q = p.clone();
                q.insert(pos, n - 1);
                out.push(q);
            }
        }
        out
    }
}
