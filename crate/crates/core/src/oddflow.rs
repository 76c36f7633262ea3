//! Graded paths, Lagrangian projections, the odd relative index and odd
//! spectral flow in `K_1(A)`, and the suspension identities relating even and
//! odd flows. The Bott map on a cylinder is realized by a lattice Chern number.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AElement, AlgebraShape, BlockKind, KOneClass};
use crate::error::{Error, Result};
use crate::matfun::{self, CMatrix, C64};
use crate::oppath::HermPath;
use crate::signs::SIGNS;
use crate::specflow::{self, FlowConfig, DEFAULT_REFINE_MAX};

pub const TOL_ODD: f64 = 1e-9;
pub const TOL_PROJ: f64 = 1e-8;
pub const CHERN_START: usize = 64;
pub const CHERN_MAX: usize = 512;

fn half(m: &CMatrix) -> Result<usize> {
    if !m.nrows().is_multiple_of(2) {
        return Err(Error::DimensionMismatch(format!("graded block needs even size, got {}", m.nrows())));
    }
    Ok(m.nrows() / 2)
}

/// `sigma = diag(1_k, -1_k)`.
pub fn grading(k: usize) -> CMatrix {
    let mut s = CMatrix::identity(2 * k, 2 * k);
    for i in k..2 * k {
        s[(i, i)] = C64::new(-1.0, 0.0);
    }
    s
}

/// `[[0, W*], [W, 0]]`.
pub fn odd_from_w(w: &CMatrix) -> CMatrix {
    let k = w.nrows();
    let mut d = CMatrix::zeros(2 * k, 2 * k);
    d.view_mut((k, 0), (k, k)).copy_from(w);
    d.view_mut((0, k), (k, k)).copy_from(&w.adjoint());
    d
}

/// Lower-left block.
pub fn lower_left(m: &CMatrix) -> CMatrix {
    let k = m.nrows() / 2;
    m.view((k, 0), (k, k)).clone_owned()
}

/// `|sigma D + D sigma|`.
pub fn odd_defect(d: &CMatrix) -> Result<f64> {
    let s = grading(half(d)?);
    Ok((&s * d + d * &s).norm())
}

/// A path of odd hermitian elements for the grading `sigma` on every block.
#[derive(Debug, Clone, PartialEq)]
pub struct GradedHermPath {
    pub path: HermPath,
}

impl GradedHermPath {
    pub fn new(path: HermPath) -> Result<Self> {
        for s in &path.samples {
            for (_, _, m) in s.channels() {
                let defect = odd_defect(m)?;
                if defect > TOL_ODD * (1.0 + m.norm()) {
                    return Err(Error::NotOdd { defect });
                }
            }
        }
        Ok(GradedHermPath { path })
    }

    /// Builds the path from its lower-left blocks `W(t)` given per `(block, theta)`.
    pub fn from_w(
        shape: AlgebraShape,
        rank: usize,
        t_grid: Vec<f64>,
        w: impl Fn(f64, usize, f64) -> CMatrix,
    ) -> Result<Self> {
        let path = HermPath::from_fn(shape.clone(), rank, t_grid, |t| {
            AElement::from_fn(&shape, rank, |b, th| odd_from_w(&w(t, b, th))).expect("sizes")
        })?;
        Self::new(path)
    }

    pub fn w(&self, sample: usize, block: usize, theta: usize) -> CMatrix {
        lower_left(&self.path.samples[sample].blocks[block][theta])
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.path.shape
    }

    /// Blockwise direct sum of the `W` parts, keeping the grading layout.
    pub fn direct_sum(&self, other: &GradedHermPath) -> Result<GradedHermPath> {
        let sum = specflow::direct_sum(&self.path, &other.path)?;
        let (p, q) = (&self.path, &other.path);
        let samples = sum
            .t_grid
            .iter()
            .map(|&t| {
                let (a, b) = (p.sample_at(t), q.sample_at(t));
                let blocks = a
                    .blocks
                    .iter()
                    .zip(&b.blocks)
                    .map(|(x, y)| {
                        x.iter()
                            .zip(y)
                            .map(|(mx, my)| odd_from_w(&matfun::block_diag(&lower_left(mx), &lower_left(my))))
                            .collect()
                    })
                    .collect();
                AElement::new(p.shape.clone(), p.rank + q.rank, blocks)
            })
            .collect::<Result<Vec<_>>>()?;
        GradedHermPath::new(HermPath::new(p.shape.clone(), p.rank + q.rank, sum.t_grid, samples)?)
    }

    pub fn concatenate(&self, other: &GradedHermPath) -> Result<GradedHermPath> {
        GradedHermPath::new(specflow::concatenate(&self.path, &other.path)?)
    }

    pub fn reverse(&self) -> GradedHermPath {
        GradedHermPath { path: specflow::reverse(&self.path) }
    }
}

/// A projection `P = 1/2 [[1, u*], [u, 1]]`, i.e. with `2P - 1` odd.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianProjection {
    pub p: AElement,
}

impl LagrangianProjection {
    pub fn new(p: AElement) -> Result<Self> {
        for (_, _, m) in p.channels() {
            let k = half(m)?;
            let idem = (m * m - m).norm();
            if idem > TOL_PROJ || matfun::hermiticity_defect(m) > TOL_PROJ {
                return Err(Error::NotLagrangian(format!("not an orthogonal projection (defect {idem:.3e})")));
            }
            let id = CMatrix::identity(2 * k, 2 * k);
            let defect = odd_defect(&(m.scale(2.0) - id))?;
            if defect > TOL_PROJ {
                return Err(Error::NotLagrangian(format!("2P - 1 is not odd (defect {defect:.3e})")));
            }
            let u = lower_left(m).scale(2.0);
            let ud = matfun::unitarity_defect(&u);
            if ud > TOL_PROJ {
                return Err(Error::NotLagrangian(format!("off-diagonal block is not unitary (defect {ud:.3e})")));
            }
        }
        Ok(LagrangianProjection { p })
    }

    pub fn from_unitary(u: &AElement) -> Result<Self> {
        u.check_unitary()?;
        let blocks = u
            .blocks
            .iter()
            .map(|s| s.iter().map(crate::maslov::Lagrangian::projection).collect())
            .collect();
        let shape = u.shape.clone();
        Self::new(AElement::new(shape, 2 * u.rank, blocks).map_err(|e| match e {
            Error::DimensionMismatch(m) => Error::NotLagrangian(m),
            other => other,
        })?)
    }

    /// `u_P = 2 P_21`, per channel.
    pub fn unitary(&self) -> Vec<Vec<CMatrix>> {
        self.p
            .blocks
            .iter()
            .map(|s| s.iter().map(|m| lower_left(m).scale(2.0)).collect())
            .collect()
    }
}

fn theta_windings(shape: &AlgebraShape, mats: &[Vec<CMatrix>], gap_min: f64) -> Result<Vec<i64>> {
    shape
        .blocks
        .iter()
        .zip(mats)
        .map(|(spec, samples)| if spec.is_loop() { matfun::det_phase_winding(samples, gap_min) } else { Ok(0) })
        .collect()
}

/// `ind(P, Q) = [u_P u_Q*]`: theta winding of `det(u_P u_Q*)` per loop block.
pub fn odd_rel_index(p: &LagrangianProjection, q: &LagrangianProjection) -> Result<KOneClass> {
    p.p.check_compatible(&q.p)?;
    let prod: Vec<Vec<CMatrix>> = p
        .unitary()
        .iter()
        .zip(q.unitary())
        .map(|(a, b)| a.iter().zip(&b).map(|(x, y)| x * y.adjoint()).collect())
        .collect();
    let w = theta_windings(&p.p.shape, &prod, 1e-12)?;
    KOneClass::new(&p.p.shape, w)
}

/// Odd spectral flow: `wind det W(1) - wind det W(0)` per loop block.
pub fn odd_spectral_flow(g: &GradedHermPath, gap_min: f64) -> Result<KOneClass> {
    let last = g.path.len() - 1;
    let mut ends = Vec::new();
    for (which, k) in [(0usize, 0usize), (1, last)] {
        let ws: Vec<Vec<CMatrix>> = g
            .shape()
            .blocks
            .iter()
            .enumerate()
            .map(|(b, spec)| (0..spec.channels()).map(|j| g.w(k, b, j)).collect())
            .collect();
        for samples in &ws {
            for w in samples {
                let min_singular = matfun::min_singular_value(w);
                if min_singular < gap_min {
                    return Err(Error::SingularEndpoint { which, min_singular });
                }
            }
        }
        ends.push(theta_windings(g.shape(), &ws, gap_min)?);
    }
    KOneClass::new(g.shape(), ends[1].iter().zip(&ends[0]).map(|(a, b)| a - b).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuspensionReport {
    /// Raw suspended invariant per block, before the sign constant.
    pub suspended: Vec<i64>,
    /// The flow it must reproduce.
    pub flow: Vec<i64>,
    pub holds: bool,
}

/// Boundary winding of `det(D_t - i cos(pi x))` around `[0,1]^2`, counterclockwise
/// in `(t, x)`, compared with the even flow.
pub fn suspend_even_to_odd(p: &HermPath, x_samples: usize, cfg: &FlowConfig) -> Result<SuspensionReport> {
    if p.shape.has_loops() {
        return Err(Error::InvalidShape("even-to-odd suspension takes scalar blocks only".into()));
    }
    let flow = specflow::spectral_flow_winding(p, cfg)?.value.components;
    let grid = &p.t_grid;
    let xs: Vec<f64> = (0..=x_samples).map(|i| i as f64 / x_samples as f64).collect();
    let mut suspended = Vec::new();
    for b in 0..p.shape.len() {
        let mats: Vec<&CMatrix> = p.samples.iter().map(|s| &s.blocks[b][0]).collect();
        let n = mats[0].nrows();
        let d_at = |t: f64| -> CMatrix {
            let k = grid.partition_point(|&s| s < t).clamp(1, grid.len() - 1);
            let w = ((t - grid[k - 1]) / (grid[k] - grid[k - 1])).clamp(0.0, 1.0);
            mats[k - 1].scale(1.0 - w) + mats[k].scale(w)
        };
        let f = |t: f64, x: f64| -> C64 {
            let shift = CMatrix::identity(n, n) * C64::new(0.0, -(PI * x).cos());
            matfun::determinant(&(d_at(t) + shift))
        };
        let edge = |pts: &[f64], g: &dyn Fn(f64) -> C64| -> Result<f64> {
            let vals: Vec<C64> = pts.iter().map(|&s| g(s)).collect();
            matfun::phase_along(&|s| Ok(g(s)), pts, &vals, cfg.refine_max)
        };
        let rev = |v: &[f64]| v.iter().rev().copied().collect::<Vec<_>>();
        let total = edge(grid, &|t| f(t, 0.0))?
            + edge(&xs, &|x| f(1.0, x))?
            + edge(&rev(grid), &|t| f(t, 1.0))?
            + edge(&rev(&xs), &|x| f(0.0, x))?;
        suspended.push((total / TAU).round() as i64);
    }
    let holds = suspended.iter().zip(&flow).all(|(s, f)| SIGNS.sigma_s * s == *f);
    Ok(SuspensionReport { suspended, flow, holds })
}

/// Projections on a `(theta, x)` lattice of the cylinder with fixed boundary frames.
#[derive(Debug, Clone)]
pub struct CylinderFamily {
    /// `[theta][x]`, `x` running from the bottom (0) to the top edge.
    pub projections: Vec<Vec<CMatrix>>,
    pub bottom: Vec<CMatrix>,
    pub top: Vec<CMatrix>,
}

/// Relative first Chern number of a projection family on the cylinder, from
/// lattice link variables `det(F* F')` and principal plaquette phases, plus the
/// boundary holonomies of the supplied gauge. Every plaquette phase must stay
/// below pi/2.
pub fn bott_beta_cylinder(fam: &CylinderFamily) -> Result<i64> {
    let nt = fam.projections.len();
    let nx = fam.projections[0].len();
    let rank = fam.bottom[0].ncols();
    let frames: Vec<Vec<CMatrix>> = (0..nt)
        .into_par_iter()
        .map(|a| {
            (0..nx)
                .map(|b| {
                    if b == 0 {
                        return Ok(fam.bottom[a].clone());
                    }
                    if b == nx - 1 {
                        return Ok(fam.top[a].clone());
                    }
                    let eig = matfun::eig_hermitian(&fam.projections[a][b])?;
                    let f = eig.frame_where(|x| x > 0.5);
                    if f.ncols() != rank || eig.values.iter().any(|&x| x > 0.1 && x < 0.9) {
                        return Err(Error::RankJump { expected: rank, found: f.ncols() });
                    }
                    Ok(f)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let link = |f: &CMatrix, g: &CMatrix| matfun::determinant(&(f.adjoint() * g));
    let mut flux = 0.0;
    for a in 0..nt {
        let a1 = (a + 1) % nt;
        for b in 0..nx - 1 {
            let z = link(&frames[a][b], &frames[a1][b])
                * link(&frames[a1][b], &frames[a1][b + 1])
                * link(&frames[a1][b + 1], &frames[a][b + 1])
                * link(&frames[a][b + 1], &frames[a][b]);
            if z.norm() < 1e-12 {
                return Err(Error::SamplingTooCoarse { step: a * nx + b, phase_step: PI });
            }
            let phase = z.arg();
            if phase.abs() >= FRAC_PI_2 {
                return Err(Error::SamplingTooCoarse { step: a * nx + b, phase_step: phase });
            }
            flux += phase;
        }
    }
    let holonomy = |row: usize| -> f64 {
        (0..nt)
            .map(|a| link(&frames[a][row], &frames[(a + 1) % nt][row]).arg())
            .sum()
    };
    let c = (flux + holonomy(nx - 1) - holonomy(0)) / TAU;
    Ok(c.round() as i64)
}

/// Polar frame of `P E` for a fixed frame `E`.
fn projected_frame(p: &CMatrix, e: &CMatrix) -> Result<CMatrix> {
    matfun::polar_frame(&(p * e))
}

/// Coordinate frame on rows `start..start+k` of `C^{2k}`.
fn coordinate_frame(k: usize, start: usize) -> CMatrix {
    let mut e = CMatrix::zeros(2 * k, k);
    for i in 0..k {
        e[(start + i, i)] = C64::new(1.0, 0.0);
    }
    e
}

/// Linear interpolation of a theta loop of matrices at fractional index `s in [0, n)`.
fn loop_interp(samples: &[CMatrix], s: f64) -> CMatrix {
    let n = samples.len();
    let j = s.floor() as usize % n;
    let w = s - s.floor();
    samples[j].scale(1.0 - w) + samples[(j + 1) % n].scale(w)
}

fn negative_projection(m: &CMatrix) -> Result<(CMatrix, f64)> {
    let eig = matfun::eig_hermitian(m)?;
    let gap = eig.values.iter().fold(f64::INFINITY, |g, x| g.min(x.abs()));
    Ok((eig.projection_where(|x| x < 0.0), gap))
}

/// Chern number of the negative spectral projection of `D(theta) + sigma cos(pi x)`
/// with boundary frames induced from the coordinate frames of `-+sigma`.
pub fn suspended_chern(d_loop: &[CMatrix], n_theta: usize, n_x: usize) -> Result<i64> {
    let k = half(&d_loop[0])?;
    let sigma = grading(k);
    let n = d_loop.len();
    let bottom_e = coordinate_frame(k, k);
    let top_e = coordinate_frame(k, 0);
    let rows: Vec<(Vec<CMatrix>, CMatrix, CMatrix)> = (0..n_theta)
        .into_par_iter()
        .map(|a| {
            let d = loop_interp(d_loop, a as f64 * n as f64 / n_theta as f64);
            let mut col = Vec::with_capacity(n_x + 1);
            for b in 0..=n_x {
                let x = b as f64 / n_x as f64;
                let (p, gap) = negative_projection(&(&d + sigma.scale((PI * x).cos())))?;
                if gap < 1e-10 {
                    return Err(Error::GaplessSuspension { theta: a, x });
                }
                col.push(p);
            }
            let bottom = projected_frame(&col[0], &bottom_e)?;
            let top = projected_frame(&col[n_x], &top_e)?;
            Ok((col, bottom, top))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut fam = CylinderFamily { projections: Vec::new(), bottom: Vec::new(), top: Vec::new() };
    for (col, b, t) in rows {
        fam.projections.push(col);
        fam.bottom.push(b);
        fam.top.push(t);
    }
    bott_beta_cylinder(&fam)
}

/// [`suspended_chern`] on a 64x64 lattice, doubling up to 512 while plaquettes are too coarse.
pub fn suspended_chern_adaptive(d_loop: &[CMatrix]) -> Result<i64> {
    let mut n = CHERN_START;
    loop {
        match suspended_chern(d_loop, n, n) {
            Err(Error::SamplingTooCoarse { .. }) if n < CHERN_MAX => n *= 2,
            other => return other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OddSuspensionReport {
    pub c0: Vec<i64>,
    pub c1: Vec<i64>,
    pub odd_flow: Vec<i64>,
    pub holds: bool,
}

/// Chern numbers `C_i` of the suspended endpoints; checks `sigma_c (C_0 - C_1)`
/// against the odd spectral flow.
pub fn suspend_odd_to_even(g: &GradedHermPath, gap_min: f64) -> Result<OddSuspensionReport> {
    let odd = odd_spectral_flow(g, gap_min)?.components;
    let last = g.path.len() - 1;
    let mut c = [Vec::new(), Vec::new()];
    for (i, k) in [0, last].into_iter().enumerate() {
        for (b, spec) in g.shape().blocks.iter().enumerate() {
            c[i].push(match spec.kind {
                BlockKind::Loop { .. } => suspended_chern_adaptive(&g.path.samples[k].blocks[b])?,
                BlockKind::Scalar => 0,
            });
        }
    }
    let holds = (0..odd.len()).all(|b| SIGNS.sigma_c * (c[0][b] - c[1][b]) == odd[b]);
    let [c0, c1] = c;
    Ok(OddSuspensionReport { c0, c1, odd_flow: odd, holds })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundedSuspensionReport {
    /// Chern number of the suspended family per block.
    pub chern: Vec<i64>,
    /// Theta winding of `det exp(i pi (F + 1))` per block.
    pub exp_winding: Vec<i64>,
    pub holds: bool,
}

/// Lower-left block `cos(pi t) + i sin(pi t) F` of the suspension of `F`.
pub fn suspension_w(f: &CMatrix, t: f64) -> CMatrix {
    let n = f.nrows();
    CMatrix::identity(n, n).scale((PI * t).cos()) + f * C64::new(0.0, (PI * t).sin())
}

/// Graded path `[[0, c - i s F], [c + i s F, 0]]`, `c = cos(pi t)`, `s = sin(pi t)`.
pub fn suspend_bounded_path(f: &AElement, t_samples: usize) -> Result<GradedHermPath> {
    check_almost_involution(f)?;
    GradedHermPath::from_w(
        f.shape.clone(),
        2 * f.rank,
        crate::fixtures::uniform_grid(t_samples),
        |t, b, th| {
            let spec = &f.shape.blocks[b];
            let j = ((th / TAU) * spec.channels() as f64).round() as usize % spec.channels();
            suspension_w(&f.blocks[b][j], t)
        },
    )
}

fn check_almost_involution(f: &AElement) -> Result<()> {
    f.check_hermitian()?;
    for (_, _, m) in f.channels() {
        let defect = (m * m - CMatrix::identity(m.nrows(), m.ncols())).norm();
        if defect > 0.1 {
            return Err(Error::NotAlmostInvolution { defect });
        }
    }
    Ok(())
}

/// Chern number over `(theta, t)` of the negative projection of the suspension
/// of `F`, with the constant boundary frames of `F_0` and `F_1`, compared with
/// the winding of `det exp(i pi (F + 1))`.
pub fn suspend_bounded(f: &AElement, t_samples: usize) -> Result<BoundedSuspensionReport> {
    check_almost_involution(f)?;
    let mut chern = Vec::new();
    let mut exp_winding = Vec::new();
    for (spec, samples) in f.shape.blocks.iter().zip(&f.blocks) {
        if !spec.is_loop() {
            chern.push(0);
            exp_winding.push(0);
            continue;
        }
        let n = samples[0].nrows();
        // negative eigenvectors of [[0, +-1], [+-1, 0]]: (e, -+e) / sqrt 2
        let mut bottom = CMatrix::zeros(2 * n, n);
        let mut top = CMatrix::zeros(2 * n, n);
        for i in 0..n {
            bottom[(i, i)] = C64::new(FRAC_1_SQRT_2, 0.0);
            bottom[(n + i, i)] = C64::new(-FRAC_1_SQRT_2, 0.0);
            top[(i, i)] = C64::new(FRAC_1_SQRT_2, 0.0);
            top[(n + i, i)] = C64::new(FRAC_1_SQRT_2, 0.0);
        }
        let mut size = t_samples.max(CHERN_START);
        let c = loop {
            let n_theta = size;
            let projections = (0..n_theta)
                .into_par_iter()
                .map(|a| {
                    let fa = loop_interp(samples, a as f64 * samples.len() as f64 / n_theta as f64);
                    (0..=size)
                        .map(|b| {
                            let w = suspension_w(&fa, b as f64 / size as f64);
                            Ok(negative_projection(&odd_from_w(&w))?.0)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let fam = CylinderFamily {
                projections,
                bottom: vec![bottom.clone(); n_theta],
                top: vec![top.clone(); n_theta],
            };
            match bott_beta_cylinder(&fam) {
                Err(Error::SamplingTooCoarse { .. }) if size < CHERN_MAX => size *= 2,
                other => break other?,
            }
        };
        chern.push(c);
        let exps = samples
            .iter()
            .map(|m| matfun::functional_calculus_complex(m, |x| C64::from_polar(1.0, PI * (x + 1.0))))
            .collect::<Result<Vec<_>>>()?;
        exp_winding.push(matfun::det_phase_winding(&exps, 1e-12)?);
    }
    let holds = chern.iter().zip(&exp_winding).all(|(c, w)| SIGNS.sigma_c * c == *w);
    Ok(BoundedSuspensionReport { chern, exp_winding, holds })
}

/// Kernel data for the splitting check on one loop block: graded kernel
/// frames `K_+ (theta)` (upper) and `K_- (theta)` (lower) of `D_N`, and two
/// Lagrangians `u_0, u_1: ker_+ -> ker_-` in those frames.
#[derive(Debug, Clone)]
pub struct KernelLagrangians {
    pub k_plus: Vec<CMatrix>,
    pub k_minus: Vec<CMatrix>,
    pub u0: Vec<CMatrix>,
    pub u1: Vec<CMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingReport {
    pub odd_index: Vec<i64>,
    pub maslov_class: Vec<i64>,
    pub holds: bool,
}

/// Builds `P_i = 1_{>0}(D_N) + P_{L_i}` and checks `ind(P_0, P_1)` against the
/// loop Maslov class `[u_0 u_1*]` of the kernel Lagrangians.
pub fn splitting_correction_check(d_n: &AElement, kernels: &[KernelLagrangians]) -> Result<SplittingReport> {
    if kernels.len() != d_n.shape.len() {
        return Err(Error::ShapeMismatch("one kernel record per block is required".into()));
    }
    let mut p0 = Vec::new();
    let mut p1 = Vec::new();
    for (samples, ker) in d_n.blocks.iter().zip(kernels) {
        let m = ker.u0[0].nrows();
        let (mut b0, mut b1) = (Vec::new(), Vec::new());
        for (theta, d) in samples.iter().enumerate() {
            let eig = matfun::eig_hermitian(d)?;
            let tol = 1e-8 * (1.0 + d.norm());
            let found = eig.values.iter().filter(|x| x.abs() <= tol).count();
            if found != 2 * m {
                return Err(Error::KernelRankJump { expected: 2 * m, found, theta });
            }
            let positive = eig.projection_where(|x| x > tol);
            let frame = {
                let (kp, km) = (&ker.k_plus[theta], &ker.k_minus[theta]);
                let mut f = CMatrix::zeros(kp.nrows(), 2 * m);
                f.view_mut((0, 0), (kp.nrows(), m)).copy_from(kp);
                f.view_mut((0, m), (kp.nrows(), m)).copy_from(km);
                f
            };
            let residual = (d * &frame).norm();
            if residual > 1e-6 {
                return Err(Error::KernelRankJump { expected: 2 * m, found: 0, theta });
            }
            let lag = |u: &CMatrix| &frame * crate::maslov::Lagrangian::projection(u) * frame.adjoint();
            b0.push(&positive + lag(&ker.u0[theta]));
            b1.push(&positive + lag(&ker.u1[theta]));
        }
        p0.push(b0);
        p1.push(b1);
    }
    let lp0 = LagrangianProjection::new(AElement::new(d_n.shape.clone(), d_n.rank, p0)?)?;
    let lp1 = LagrangianProjection::new(AElement::new(d_n.shape.clone(), d_n.rank, p1)?)?;
    let odd_index = odd_rel_index(&lp0, &lp1)?.components;
    let prods: Vec<Vec<CMatrix>> = kernels
        .iter()
        .map(|k| k.u0.iter().zip(&k.u1).map(|(a, b)| a * b.adjoint()).collect())
        .collect();
    let maslov_class = theta_windings(&d_n.shape, &prods, 1e-12)?;
    let holds = odd_index == maslov_class;
    Ok(SplittingReport { odd_index, maslov_class, holds })
}

/// Default flow configuration for suspension checks.
pub fn default_config() -> FlowConfig {
    FlowConfig { refine_max: DEFAULT_REFINE_MAX, ..Default::default() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockSpec;
    use crate::fixtures;

    fn loop_shape(n: usize) -> AlgebraShape {
        AlgebraShape::new(vec![BlockSpec::looped(1, n)]).unwrap()
    }

    fn scalar_w(z: C64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    fn fixture_path() -> GradedHermPath {
        GradedHermPath::from_w(loop_shape(16), 2, fixtures::uniform_grid(8), |t, _, th| {
            scalar_w(C64::new(1.0 - t, 0.0) + C64::from_polar(t, th))
        })
        .unwrap()
    }

    #[test]
    fn odd_flow_fixture() {
        assert_eq!(odd_spectral_flow(&fixture_path(), 1e-6).unwrap().components, vec![1]);
    }

    #[test]
    fn constant_odd_path_is_zero() {
        let g = GradedHermPath::from_w(loop_shape(16), 2, fixtures::uniform_grid(4), |_, _, th| {
            scalar_w(C64::from_polar(2.0, th))
        })
        .unwrap();
        assert!(odd_spectral_flow(&g, 1e-6).unwrap().is_zero());
    }

    #[test]
    fn rejects_even_path() {
        let shape = loop_shape(8);
        let x = AElement::scalar(&shape, 2, 1.0);
        let p = HermPath::constant(&x, 2).unwrap();
        assert!(matches!(GradedHermPath::new(p), Err(Error::NotOdd { .. })));
    }

    #[test]
    fn odd_rel_index_examples() {
        let shape = loop_shape(16);
        let u = AElement::from_fn(&shape, 1, |_, th| scalar_w(C64::from_polar(1.0, th))).unwrap();
        let one = AElement::scalar(&shape, 1, 1.0);
        let p = LagrangianProjection::from_unitary(&u).unwrap();
        let q = LagrangianProjection::from_unitary(&one).unwrap();
        assert_eq!(odd_rel_index(&p, &q).unwrap().components, vec![1]);
        assert!(odd_rel_index(&p, &p).unwrap().is_zero());
    }

    #[test]
    fn unit_flux_fixture() {
        let n = 32;
        let v = coordinate_frame(1, 0);
        let proj = &v * v.adjoint();
        let top: Vec<CMatrix> = (0..n).map(|a| &v * C64::from_polar(1.0, TAU * a as f64 / n as f64)).collect();
        let fam = CylinderFamily { projections: vec![vec![proj; 9]; n], bottom: vec![v.clone(); n], top };
        assert_eq!(bott_beta_cylinder(&fam).unwrap(), 1);
    }

    #[test]
    fn constant_family_has_no_flux() {
        let n = 16;
        let v = coordinate_frame(1, 0);
        let proj = &v * v.adjoint();
        let fam = CylinderFamily { projections: vec![vec![proj; 5]; n], bottom: vec![v.clone(); n], top: vec![v; n] };
        assert_eq!(bott_beta_cylinder(&fam).unwrap(), 0);
    }

    #[test]
    fn rotating_family_has_unit_flux() {
        // s = (cos(pi x / 2), e^{i theta} sin(pi x / 2)) with coordinate frames at both ends
        let (nt, nx) = (48, 48);
        let proj = |th: f64, x: f64| {
            let s = nalgebra::DVector::from_vec(vec![
                C64::new((PI * x / 2.0).cos(), 0.0),
                C64::from_polar((PI * x / 2.0).sin(), th),
            ]);
            &s * s.adjoint()
        };
        let projections = (0..nt)
            .map(|a| (0..=nx).map(|b| proj(TAU * a as f64 / nt as f64, b as f64 / nx as f64)).collect())
            .collect();
        let fam = CylinderFamily {
            projections,
            bottom: vec![coordinate_frame(1, 0); nt],
            top: vec![coordinate_frame(1, 1); nt],
        };
        assert_eq!(bott_beta_cylinder(&fam).unwrap(), -1);
    }

    #[test]
    fn even_to_odd_scalar_fixture() {
        let shape = AlgebraShape::scalars(&[1]).unwrap();
        let p = HermPath::from_fn(shape.clone(), 1, fixtures::uniform_grid(32), |t| {
            AElement::new(shape.clone(), 1, vec![vec![matfun::real_diagonal(&[2.0 * t - 1.0])]]).unwrap()
        })
        .unwrap();
        let r = suspend_even_to_odd(&p, 32, &FlowConfig::default()).unwrap();
        assert_eq!(r.suspended, vec![1]);
        assert!(r.holds);
    }

    #[test]
    fn odd_to_even_fixture() {
        let r = suspend_odd_to_even(&fixture_path(), 1e-6).unwrap();
        assert_eq!(r.odd_flow, vec![1]);
        assert_eq!(r.c0[0] - r.c1[0], SIGNS.sigma_c);
        assert!(r.holds);
    }

    #[test]
    fn bounded_suspension_of_involution() {
        let shape = loop_shape(16);
        let mut r = fixtures::rng(3);
        let p = fixtures::projection_element(&mut r, &shape, 2, &[1]);
        let f = p.map(|m| m.scale(2.0) - CMatrix::identity(2, 2));
        let rep = suspend_bounded(&f, 16).unwrap();
        assert!(rep.holds);
        assert_eq!(rep.exp_winding, vec![0]);
    }

    #[test]
    fn splitting_fixture() {
        // D_N = diag(sigma-odd block with W = diag(2, 0)); kernel spanned by e_2 (upper) and e_4 (lower)
        let shape = loop_shape(16);
        let d = AElement::from_fn(&shape, 4, |_, _| odd_from_w(&matfun::real_diagonal(&[2.0, 0.0]))).unwrap();
        let mut kp = CMatrix::zeros(4, 1);
        kp[(1, 0)] = C64::new(1.0, 0.0);
        let mut km = CMatrix::zeros(4, 1);
        km[(3, 0)] = C64::new(1.0, 0.0);
        let n = 16;
        let ker = KernelLagrangians {
            k_plus: vec![kp; n],
            k_minus: vec![km; n],
            u0: vec![CMatrix::identity(1, 1); n],
            u1: (0..n).map(|j| scalar_w(C64::from_polar(1.0, -TAU * j as f64 / n as f64))).collect(),
        };
        let rep = splitting_correction_check(&d, &[ker]).unwrap();
        assert_eq!(rep.maslov_class, vec![1]);
        assert!(rep.holds);
    }
}
