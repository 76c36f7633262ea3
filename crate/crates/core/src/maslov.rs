//! Lagrangian submodules `L(u) = {(a, u a)}` of `A^{2n}` for the form
//! `omega(x, y) = <x, I y>`, `I = diag(i, -i)`; the interval operator
//! `D(u) = I d/dx` with boundary conditions in `L(u_0)` and `L(u_1)`; the pair
//! Maslov index and the triple index.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AElement, AlgebraShape, Homomorphism, KOneClass, KZeroClass};
use crate::error::{Error, Result};
use crate::matfun::{self, CMatrix, C64};
use crate::signs::SIGNS;
use crate::specflow::{Crossing, DEFAULT_REFINE_MAX};

pub const TOL_CROSS: f64 = 1e-8;
pub const TOL_FORM_HERM: f64 = 1e-9;

/// The Lagrangian `L(u)`, one unitary per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct Lagrangian {
    pub u: AElement,
}

impl Lagrangian {
    pub fn new(u: AElement) -> Result<Self> {
        u.check_unitary()?;
        Ok(Lagrangian { u })
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.u.shape
    }

    /// Orthogonal projection `1/2 [[1, u*], [u, 1]]` onto `L(u)` for one channel.
    pub fn projection(u: &CMatrix) -> CMatrix {
        let b = frame(u);
        &b * b.adjoint()
    }
}

/// Orthonormal frame `(1/sqrt 2) [1; u]` of `L(u)`.
pub fn frame(u: &CMatrix) -> CMatrix {
    let n = u.nrows();
    let mut b = CMatrix::zeros(2 * n, n);
    b.view_mut((0, 0), (n, n)).copy_from(&CMatrix::identity(n, n));
    b.view_mut((n, 0), (n, n)).copy_from(u);
    b.scale(std::f64::consts::FRAC_1_SQRT_2)
}

/// Orthonormal frame `(1/sqrt 2) [-u*; 1]` of the orthogonal complement of `L(u)`.
pub fn complement_frame(u: &CMatrix) -> CMatrix {
    let n = u.nrows();
    let mut b = CMatrix::zeros(2 * n, n);
    b.view_mut((0, 0), (n, n)).copy_from(&(-u.adjoint()));
    b.view_mut((n, 0), (n, n)).copy_from(&CMatrix::identity(n, n));
    b.scale(std::f64::consts::FRAC_1_SQRT_2)
}

/// `I = diag(i, -i)` on `C^{2n}`.
pub fn symplectic_i(n: usize) -> CMatrix {
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        m[(k, k)] = C64::new(0.0, 1.0);
        m[(n + k, n + k)] = C64::new(0.0, -1.0);
    }
    m
}

/// A pair of sampled Lagrangian paths `(L(u_0(t)), L(u_1(t)))`.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianPath {
    pub shape: AlgebraShape,
    pub rank: usize,
    pub t_grid: Vec<f64>,
    pub u0: Vec<AElement>,
    pub u1: Vec<AElement>,
}

impl LagrangianPath {
    pub fn new(t_grid: Vec<f64>, u0: Vec<AElement>, u1: Vec<AElement>) -> Result<Self> {
        if t_grid.len() < 2 || u0.len() != t_grid.len() || u1.len() != t_grid.len() {
            return Err(Error::InvalidPath("grid and sample counts differ".into()));
        }
        if t_grid[0] != 0.0 || *t_grid.last().unwrap() != 1.0 || t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath("grid must increase strictly from 0 to 1".into()));
        }
        let shape = u0[0].shape.clone();
        let rank = u0[0].rank;
        for u in u0.iter().chain(&u1) {
            u.check_compatible(&u0[0])?;
            u.check_unitary()?;
        }
        Ok(LagrangianPath { shape, rank, t_grid, u0, u1 })
    }

    pub fn from_fn(t_grid: Vec<f64>, f: impl Fn(f64) -> (AElement, AElement)) -> Result<Self> {
        let (u0, u1): (Vec<_>, Vec<_>) = t_grid.iter().map(|&t| f(t)).unzip();
        Self::new(t_grid, u0, u1)
    }

    /// The pair with roles exchanged.
    pub fn swapped(&self) -> LagrangianPath {
        LagrangianPath { u0: self.u1.clone(), u1: self.u0.clone(), ..self.clone() }
    }

    pub fn apply(&self, hom: &Homomorphism) -> Result<LagrangianPath> {
        let map = |v: &[AElement]| v.iter().map(|x| hom.apply(x)).collect::<Result<Vec<_>>>();
        LagrangianPath::new(self.t_grid.clone(), map(&self.u0)?, map(&self.u1)?)
    }

    pub fn is_closed(&self) -> bool {
        let last = self.t_grid.len() - 1;
        self.u0[0].distance(&self.u0[last]) <= 1e-12 && self.u1[0].distance(&self.u1[last]) <= 1e-12
    }
}

/// True iff `u_0 - u_1` has smallest singular value at least `margin` on every channel.
pub fn transverse(l0: &Lagrangian, l1: &Lagrangian, margin: f64) -> Result<bool> {
    Ok(transversality_margin(&l0.u, &l1.u)? >= margin)
}

pub fn transversality_margin(u0: &AElement, u1: &AElement) -> Result<f64> {
    u0.check_compatible(u1)?;
    Ok(u0
        .blocks
        .iter()
        .zip(&u1.blocks)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| matfun::min_singular_value(&(x - y))))
        .fold(f64::INFINITY, f64::min))
}

fn require_transverse(u0: &AElement, u1: &AElement, margin: f64) -> Result<()> {
    let m = transversality_margin(u0, u1)?;
    if m < margin {
        return Err(Error::NotTransverse { min_singular: m });
    }
    Ok(())
}

/// `u_0 u_1*` and its theta winding per loop block.
pub fn pair_unitary(l0: &Lagrangian, l1: &Lagrangian) -> Result<(AElement, KOneClass)> {
    l0.u.check_compatible(&l1.u)?;
    let w = l0.u.zip_map(&l1.u, |a, b| a * b.adjoint());
    let class = theta_winding(&w)?;
    Ok((w, class))
}

/// Determinant winding over theta of a unitary element, per loop block.
pub fn theta_winding(w: &AElement) -> Result<KOneClass> {
    let components = w
        .shape
        .blocks
        .iter()
        .zip(&w.blocks)
        .map(|(spec, samples)| if spec.is_loop() { matfun::det_phase_winding(samples, 1e-12) } else { Ok(0) })
        .collect::<Result<Vec<_>>>()?;
    KOneClass::new(&w.shape, components)
}

/// Eigenvalues of the interval operator with boundary data whose relative
/// unitary is `u = u_0* u_1`: all `lambda = sigma_d theta_j / 2 + k pi` in the window.
pub fn interval_spectrum(u: &CMatrix, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let eig = matfun::eig_unitary(u)?;
    let mut out = Vec::new();
    for &th in &eig.phases {
        let base = SIGNS.sigma_d as f64 * th / 2.0;
        let kmin = ((lo - base) / PI).ceil() as i64;
        let kmax = ((hi - base) / PI).floor() as i64;
        for k in kmin..=kmax {
            out.push(base + k as f64 * PI);
        }
    }
    out.sort_by(f64::total_cmp);
    Ok(out)
}

/// Interval spectrum for the pair `(u_0, u_1)`.
pub fn pair_interval_spectrum(u0: &CMatrix, u1: &CMatrix, lo: f64, hi: f64) -> Result<Vec<f64>> {
    interval_spectrum(&(u0.adjoint() * u1), lo, hi)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaslovResult {
    pub value: KZeroClass,
    /// Eigenphase passes through 1, with direction before the sign constant.
    pub crossings: Vec<Crossing>,
    /// For paths that close up in t: `wind_t det(u_1 u_0*)` per block.
    pub loop_winding: Option<Vec<i64>>,
}

struct Tracker {
    phases: Vec<f64>,
    vectors: CMatrix,
    crossings: Vec<(f64, i64)>,
}

fn principal(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y > PI { y - TAU } else { y }
}

fn turns(phi: f64) -> i64 {
    (phi / TAU).floor() as i64
}

#[allow(clippy::too_many_arguments)]
fn advance(
    tr: &mut Tracker,
    t: (f64, f64),
    a: (&CMatrix, &CMatrix),
    b: (&CMatrix, &CMatrix),
    step: usize,
    depth: u32,
) -> Result<()> {
    let w = b.0.adjoint() * b.1;
    let eig = matfun::eig_unitary(&w)?;
    let sigma = matfun::match_by_overlap(&tr.vectors, &eig.vectors);
    let deltas: Vec<f64> = sigma.iter().enumerate().map(|(c, &j)| principal(eig.phases[j] - tr.phases[c])).collect();
    let worst = deltas.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if worst >= 0.5 * PI {
        if depth == 0 {
            return Err(Error::SamplingTooCoarse { step, phase_step: worst });
        }
        let mid = (
            matfun::unitary_geodesic(a.0, b.0, 0.5)?,
            matfun::unitary_geodesic(a.1, b.1, 0.5)?,
        );
        let tm = 0.5 * (t.0 + t.1);
        advance(tr, (t.0, tm), a, (&mid.0, &mid.1), step, depth - 1)?;
        return advance(tr, (tm, t.1), (&mid.0, &mid.1), b, step, depth - 1);
    }
    for (c, d) in deltas.iter().enumerate() {
        let before = turns(tr.phases[c]);
        tr.phases[c] += d;
        let after = turns(tr.phases[c]);
        if after != before {
            // linear estimate of the passing parameter
            let target = after.max(before) as f64 * TAU;
            let frac = ((target - (tr.phases[c] - d)) / d).clamp(0.0, 1.0);
            tr.crossings.push((t.0 + frac * (t.1 - t.0), after - before));
        }
    }
    tr.vectors = eig.vectors.select_columns(sigma.iter());
    Ok(())
}

/// Net counterclockwise passes through 1 of the eigenphases of `u_0* u_1` along one channel.
fn channel_passes(grid: &[f64], u0: &[&CMatrix], u1: &[&CMatrix], refine_max: u32) -> Result<(i64, Vec<(f64, i64)>)> {
    let eig = matfun::eig_unitary(&(u0[0].adjoint() * u1[0]))?;
    let start: Vec<i64> = eig.phases.iter().map(|&p| turns(p)).collect();
    let mut tr = Tracker { phases: eig.phases, vectors: eig.vectors, crossings: Vec::new() };
    for k in 0..grid.len() - 1 {
        advance(&mut tr, (grid[k], grid[k + 1]), (u0[k], u1[k]), (u0[k + 1], u1[k + 1]), k, refine_max)?;
    }
    let net = tr.phases.iter().zip(&start).map(|(&p, &s)| turns(p) - s).sum();
    Ok((net, tr.crossings))
}

fn channel_refs(samples: &[AElement], block: usize, j: usize) -> Vec<&CMatrix> {
    samples.iter().map(|s| &s.blocks[block][j]).collect()
}

/// `wind_t det(u_1 u_0*)` for a closed path, one channel.
fn loop_det_winding(grid: &[f64], u0: &[&CMatrix], u1: &[&CMatrix], refine_max: u32) -> Result<i64> {
    let at = |t: f64| -> Result<C64> {
        let k = grid.partition_point(|&s| s < t).clamp(1, grid.len() - 1);
        let w = ((t - grid[k - 1]) / (grid[k] - grid[k - 1])).clamp(0.0, 1.0);
        let a = matfun::unitary_geodesic(u0[k - 1], u0[k], w)?;
        let b = matfun::unitary_geodesic(u1[k - 1], u1[k], w)?;
        Ok(matfun::determinant(&(b * a.adjoint())))
    };
    let values: Vec<C64> = u0.iter().zip(u1).map(|(a, b)| matfun::determinant(&(*b * a.adjoint()))).collect();
    let phase = matfun::phase_along(&at, grid, &values, refine_max)?;
    Ok((phase / TAU).round() as i64)
}

pub fn maslov_pair(lp: &LagrangianPath, gap_min: f64) -> Result<MaslovResult> {
    maslov_pair_with(lp, gap_min, DEFAULT_REFINE_MAX)
}

/// `mu(L_0, L_1)`: signed passes of the eigenphases of `u_0* u_1` through 1.
/// Closed paths are cross-checked against `beta * wind_t det(u_1 u_0*)`.
pub fn maslov_pair_with(lp: &LagrangianPath, gap_min: f64, refine_max: u32) -> Result<MaslovResult> {
    let last = lp.t_grid.len() - 1;
    require_transverse(&lp.u0[0], &lp.u1[0], gap_min)?;
    require_transverse(&lp.u0[last], &lp.u1[last], gap_min)?;
    let closed = lp.is_closed();
    let mut components = Vec::new();
    let mut crossings = Vec::new();
    let mut windings = Vec::new();
    for (block, spec) in lp.shape.blocks.iter().enumerate() {
        let per_theta = (0..spec.channels())
            .into_par_iter()
            .map(|j| {
                let a = channel_refs(&lp.u0, block, j);
                let b = channel_refs(&lp.u1, block, j);
                channel_passes(&lp.t_grid, &a, &b, refine_max)
            })
            .collect::<Result<Vec<_>>>()?;
        let nets: Vec<i64> = per_theta.iter().map(|r| r.0).collect();
        if nets.iter().any(|&v| v != nets[0]) {
            return Err(Error::ThetaInconsistent { block, values: nets });
        }
        let mu = SIGNS.sigma_m * nets[0];
        if closed {
            let a = channel_refs(&lp.u0, block, 0);
            let b = channel_refs(&lp.u1, block, 0);
            let wind = loop_det_winding(&lp.t_grid, &a, &b, refine_max)?;
            if mu != SIGNS.beta * wind {
                return Err(Error::CrossCheckFailed(format!(
                    "block {block}: Maslov index {mu} but loop winding {wind}"
                )));
            }
            windings.push(wind);
        }
        components.push(mu);
        for (theta_index, (_, list)) in per_theta.into_iter().enumerate() {
            crossings.extend(list.into_iter().map(|(t, direction)| Crossing { t, direction, block, theta_index }));
        }
    }
    crossings.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.block.cmp(&b.block)).then(a.theta_index.cmp(&b.theta_index)));
    Ok(MaslovResult {
        value: KZeroClass::new(&lp.shape, components)?,
        crossings,
        loop_winding: closed.then_some(windings),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleResult {
    pub value: KZeroClass,
    /// Largest `|H_a - H_b|` over channels.
    pub cross_defect: f64,
    /// Largest `|H - H*|` over channels.
    pub herm_defect: f64,
}

/// Gram matrix of `h(v, w) = <v_2, I w_1>` on `L(u_0)` by decomposing a frame
/// of `L(u_0)` along `L(u_1) + L(u_2)`.
pub fn triple_form_decomposition(u0: &CMatrix, u1: &CMatrix, u2: &CMatrix) -> Result<CMatrix> {
    let n = u0.nrows();
    let (b0, b1, b2) = (frame(u0), frame(u1), frame(u2));
    let mut s = CMatrix::zeros(2 * n, 2 * n);
    s.view_mut((0, 0), (2 * n, n)).copy_from(&b1);
    s.view_mut((0, n), (2 * n, n)).copy_from(&b2);
    let coeffs = s
        .lu()
        .solve(&b0)
        .ok_or(Error::NotTransverse { min_singular: 0.0 })?;
    let v1 = &b1 * coeffs.rows(0, n);
    let v2 = &b2 * coeffs.rows(n, n);
    Ok(v2.adjoint() * symplectic_i(n) * v1)
}

/// The same Gram matrix from `B_0* (P_1+P_2)^{-1} P_2 I P_1 (P_1+P_2)^{-1} B_0`.
pub fn triple_form_closed(u0: &CMatrix, u1: &CMatrix, u2: &CMatrix) -> Result<CMatrix> {
    let n = u0.nrows();
    let b0 = frame(u0);
    let p1 = Lagrangian::projection(u1);
    let p2 = Lagrangian::projection(u2);
    let inv = (&p1 + &p2)
        .try_inverse()
        .ok_or(Error::NotTransverse { min_singular: 0.0 })?;
    Ok(b0.adjoint() * &inv * &p2 * symplectic_i(n) * &p1 * &inv * &b0)
}

fn triple_channel(u0: &CMatrix, u1: &CMatrix, u2: &CMatrix) -> Result<(i64, f64, f64)> {
    let ha = triple_form_decomposition(u0, u1, u2)?;
    let hb = triple_form_closed(u0, u1, u2)?;
    let cross = (&ha - &hb).norm();
    let herm = matfun::hermiticity_defect(&ha);
    if cross > TOL_CROSS {
        return Err(Error::CrossCheckFailed(format!("triple form routes differ by {cross:.3e}")));
    }
    if herm > TOL_FORM_HERM {
        return Err(Error::CrossCheckFailed(format!("triple form hermiticity defect {herm:.3e}")));
    }
    let sym = (&ha + ha.adjoint()).scale(0.5);
    let sig = matfun::signature(&sym, Some(matfun::ZERO_TOL * (1.0 + sym.norm())))?;
    if sig.zero > 0 {
        return Err(Error::DegenerateForm { zero_count: sig.zero });
    }
    Ok((sig.index(), cross, herm))
}

/// `tau(L_0, L_1, L_2)`: signature of the form `h` on `L_0`, per block.
pub fn maslov_triple(l0: &Lagrangian, l1: &Lagrangian, l2: &Lagrangian, margin: f64) -> Result<TripleResult> {
    require_transverse(&l0.u, &l1.u, margin)?;
    require_transverse(&l1.u, &l2.u, margin)?;
    require_transverse(&l2.u, &l0.u, margin)?;
    let mut components = Vec::new();
    let (mut cross_defect, mut herm_defect) = (0.0f64, 0.0f64);
    for block in 0..l0.shape().len() {
        let per_theta = (0..l0.u.blocks[block].len())
            .map(|j| triple_channel(&l0.u.blocks[block][j], &l1.u.blocks[block][j], &l2.u.blocks[block][j]))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<i64> = per_theta.iter().map(|r| r.0).collect();
        if values.iter().any(|&v| v != values[0]) {
            return Err(Error::ThetaInconsistent { block, values });
        }
        for r in &per_theta {
            cross_defect = cross_defect.max(r.1);
            herm_defect = herm_defect.max(r.2);
        }
        components.push(values[0]);
    }
    Ok(TripleResult { value: KZeroClass::new(l0.shape(), components)?, cross_defect, herm_defect })
}

/// Three sampled Lagrangian paths on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianTriplePath {
    pub t_grid: Vec<f64>,
    pub u: [Vec<AElement>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripleIdentityReport {
    pub tau0: Vec<i64>,
    pub tau1: Vec<i64>,
    pub mu01: Vec<i64>,
    pub mu12: Vec<i64>,
    pub mu20: Vec<i64>,
    pub lhs: Vec<i64>,
    pub rhs: Vec<i64>,
    pub holds: bool,
}

/// Evaluates `tau(1) - tau(0)` and `2 (mu_01 + mu_12 + mu_20)` independently.
pub fn triple_pair_identity(paths: &LagrangianTriplePath, margin: f64) -> Result<TripleIdentityReport> {
    let last = paths.t_grid.len() - 1;
    let lag = |i: usize, k: usize| Lagrangian::new(paths.u[i][k].clone());
    let tau0 = maslov_triple(&lag(0, 0)?, &lag(1, 0)?, &lag(2, 0)?, margin)?.value.components;
    let tau1 = maslov_triple(&lag(0, last)?, &lag(1, last)?, &lag(2, last)?, margin)?.value.components;
    let mu = |i: usize, j: usize| -> Result<Vec<i64>> {
        let lp = LagrangianPath::new(paths.t_grid.clone(), paths.u[i].clone(), paths.u[j].clone())?;
        Ok(maslov_pair(&lp, margin)?.value.components)
    };
    let (mu01, mu12, mu20) = (mu(0, 1)?, mu(1, 2)?, mu(2, 0)?);
    let lhs: Vec<i64> = tau1.iter().zip(&tau0).map(|(a, b)| a - b).collect();
    let rhs: Vec<i64> = (0..lhs.len()).map(|b| 2 * (mu01[b] + mu12[b] + mu20[b])).collect();
    let holds = lhs == rhs;
    Ok(TripleIdentityReport { tau0, tau1, mu01, mu12, mu20, lhs, rhs, holds })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockSpec;
    use crate::fixtures;

    fn scalar_shape() -> AlgebraShape {
        AlgebraShape::scalars(&[1]).unwrap()
    }

    fn scalar_u(z: C64) -> AElement {
        AElement::new(scalar_shape(), 1, vec![vec![CMatrix::from_element(1, 1, z)]]).unwrap()
    }

    fn one() -> C64 {
        C64::new(1.0, 0.0)
    }

    #[test]
    fn transversality_examples() {
        let a = Lagrangian::new(scalar_u(one())).unwrap();
        let b = Lagrangian::new(scalar_u(-one())).unwrap();
        assert!(transverse(&a, &b, 1e-6).unwrap());
        assert!(!transverse(&a, &a, 1e-6).unwrap());
        let eps = 1e-3;
        let c = Lagrangian::new(scalar_u(C64::from_polar(1.0, eps))).unwrap();
        let gap = (C64::from_polar(1.0, eps) - one()).norm();
        assert!(!transverse(&a, &c, gap * 1.01).unwrap());
        assert!(transverse(&a, &c, gap * 0.99).unwrap());
    }

    #[test]
    fn lagrangian_is_isotropic() {
        let mut r = fixtures::rng(1);
        let u = fixtures::random_unitary(&mut r, 3);
        let b = frame(&u);
        assert!((b.adjoint() * symplectic_i(3) * &b).norm() < 1e-14);
        assert!((b.adjoint() * complement_frame(&u)).norm() < 1e-14);
    }

    #[test]
    fn pair_unitary_examples() {
        let shape = AlgebraShape::new(vec![BlockSpec::looped(1, 16)]).unwrap();
        let u0 = AElement::scalar(&shape, 1, 1.0);
        let u1 = AElement::from_fn(&shape, 1, |_, th| CMatrix::from_element(1, 1, C64::from_polar(1.0, -th))).unwrap();
        let (_, class) = pair_unitary(&Lagrangian::new(u0.clone()).unwrap(), &Lagrangian::new(u1).unwrap()).unwrap();
        assert_eq!(class.components, vec![1]);
        let l = Lagrangian::new(u0).unwrap();
        let (w, c) = pair_unitary(&l, &l).unwrap();
        assert!(c.is_zero());
        assert!((&w.blocks[0][0] - CMatrix::identity(1, 1)).norm() < 1e-15);
    }

    #[test]
    fn interval_spectrum_examples() {
        let one_m = CMatrix::identity(1, 1);
        let s = interval_spectrum(&one_m, -4.0, 4.0).unwrap();
        assert_eq!(s.len(), 3);
        assert!((s[0] + PI).abs() < 1e-12 && s[1].abs() < 1e-12 && (s[2] - PI).abs() < 1e-12);
        let s = interval_spectrum(&(-one_m), -2.0, 2.0).unwrap();
        assert_eq!(s.len(), 2);
        assert!((s[0] + PI / 2.0).abs() < 1e-12 && (s[1] - PI / 2.0).abs() < 1e-12);
        let d = matfun::real_diagonal(&[1.0, -1.0]);
        assert_eq!(interval_spectrum(&d, -4.0, 4.0).unwrap().len(), 5);
    }

    #[test]
    fn branches_differ_by_pi() {
        let mut r = fixtures::rng(2);
        let u = fixtures::random_unitary(&mut r, 1);
        let s = interval_spectrum(&u, -10.0, 10.0).unwrap();
        for w in s.windows(2) {
            assert!((w[1] - w[0] - PI).abs() < 1e-12);
        }
    }

    fn scalar_path(f: impl Fn(f64) -> (C64, C64)) -> LagrangianPath {
        LagrangianPath::from_fn(fixtures::uniform_grid(64), |t| {
            let (a, b) = f(t);
            (scalar_u(a), scalar_u(b))
        })
        .unwrap()
    }

    #[test]
    fn single_pass_fixture() {
        let lp = scalar_path(|t| (one(), C64::from_polar(1.0, PI + TAU * t)));
        let res = maslov_pair(&lp, 1e-6).unwrap();
        assert_eq!(res.value.components, vec![SIGNS.sigma_m]);
        assert_eq!(res.crossings.len(), 1);
        assert!((res.crossings[0].t - 0.5).abs() < 1e-9);
        assert_eq!(maslov_pair(&lp.swapped(), 1e-6).unwrap().value.components, vec![-SIGNS.sigma_m]);
    }

    #[test]
    fn constant_pair_is_zero() {
        let lp = scalar_path(|_| (one(), -one()));
        assert!(maslov_pair(&lp, 1e-6).unwrap().value.is_zero());
    }

    #[test]
    fn closed_path_matches_det_winding() {
        let lp = scalar_path(|t| (one(), C64::from_polar(1.0, PI + 2.0 * TAU * t)));
        let res = maslov_pair(&lp, 1e-6).unwrap();
        assert_eq!(res.value.components, vec![2]);
        assert_eq!(res.loop_winding, Some(vec![2]));
    }

    #[test]
    fn refuses_non_transverse_endpoint() {
        let lp = scalar_path(|t| (one(), C64::from_polar(1.0, TAU * t)));
        assert!(matches!(maslov_pair(&lp, 1e-6), Err(Error::NotTransverse { .. })));
    }

    #[test]
    fn triple_example() {
        let l = |z: C64| Lagrangian::new(scalar_u(z)).unwrap();
        let res = maslov_triple(&l(one()), &l(-one()), &l(C64::new(0.0, 1.0)), 1e-6).unwrap();
        assert_eq!(res.value.components.len(), 1);
        assert_eq!(res.value.components[0].abs(), 1);
        assert!(res.cross_defect < TOL_CROSS && res.herm_defect < TOL_FORM_HERM);
    }

    #[test]
    fn triple_routes_agree_on_random_input() {
        let mut r = fixtures::rng(5);
        for _ in 0..10 {
            let u: Vec<CMatrix> = (0..3).map(|_| fixtures::random_unitary(&mut r, 3)).collect();
            let a = triple_form_decomposition(&u[0], &u[1], &u[2]).unwrap();
            let b = triple_form_closed(&u[0], &u[1], &u[2]).unwrap();
            assert!((&a - &b).norm() < 1e-9);
            assert!(matfun::hermiticity_defect(&a) < 1e-9);
        }
    }
}
