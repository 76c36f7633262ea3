//! Brute-force oracles used to validate closed forms and pin orientation
//! constants.
//!
//! * [`shooting_spectrum`] scans the smallest singular value of the shooting
//!   matrix `M(lambda) = B_perp(u1)* exp(-lambda I) B(u0)` of the interval
//!   operator. It never diagonalizes `u0` or `u1`.
//! * [`dense_crossing_oracle`] counts sign changes of sorted eigenvalues on an
//!   oversampled grid, with its own cyclic Jacobi eigensolver.
//! * [`pin_sign_constants`] measures every orientation constant on canonical
//!   fixtures and checks the measurements against [`crate::signs::SIGNS`].

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

use rayon::prelude::*;

use crate::algebra::{AElement, AlgebraShape, KZeroClass};
use crate::error::{Error, Result};
use crate::maslov::{self, LagrangianPath};
use crate::matfun::{self, CMatrix, C64};
use crate::oddflow;
use crate::oppath::{self, HermPath};
use crate::signs::{SignConstants, SIGNS};
use crate::specflow::{self, FlowConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub lo: f64,
    pub hi: f64,
    /// Scan step in lambda.
    pub step: f64,
    /// A refined minimum of `sigma_min(M)` below this is an eigenvalue.
    pub dip_tol: f64,
    /// Golden-section termination width.
    pub bisect_tol: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig { lo: -PI, hi: PI, step: 0.01, dip_tol: 1e-6, bisect_tol: 1e-10 }
    }
}

impl ShootingConfig {
    pub fn window(lo: f64, hi: f64) -> Self {
        ShootingConfig { lo, hi, ..Default::default() }
    }

    fn check(&self, n: usize) -> Result<()> {
        if !(self.hi > self.lo) || !(self.step > 0.0) || !(self.dip_tol > 0.0) || !(self.bisect_tol > 0.0) {
            return Err(Error::ScanTooCoarse("window and tolerances must be positive".into()));
        }
        if self.step >= PI / (4.0 * n as f64) {
            return Err(Error::ScanTooCoarse(format!("step {} exceeds pi/(4n) for n = {n}", self.step)));
        }
        Ok(())
    }
}

/// `B_perp(u1)* exp(-lambda I) B(u0)`.
pub fn shooting_matrix(u0: &CMatrix, u1: &CMatrix, lambda: f64) -> CMatrix {
    let n = u0.nrows();
    let mut prop = CMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        prop[(k, k)] = C64::from_polar(1.0, -lambda);
        prop[(n + k, n + k)] = C64::from_polar(1.0, lambda);
    }
    maslov::complement_frame(u1).adjoint() * prop * maslov::frame(u0)
}

fn singular_values(m: &CMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(f64::total_cmp);
    s
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Eigenvalues of the interval operator with boundary conditions `L(u0)` at 0
/// and `L(u1)` at 1 in `[lo, hi]`, listed with multiplicity.
pub fn shooting_spectrum(u0: &CMatrix, u1: &CMatrix, cfg: &ShootingConfig) -> Result<Vec<f64>> {
    let n = u0.nrows();
    cfg.check(n)?;
    let steps = ((cfg.hi - cfg.lo) / cfg.step).ceil() as usize;
    let h = (cfg.hi - cfg.lo) / steps as f64;
    let sigma_min = |l: f64| singular_values(&shooting_matrix(u0, u1, l))[0];
    let grid: Vec<f64> = (0..=steps + 2).map(|i| cfg.lo + (i as f64 - 1.0) * h).collect();
    let scan: Vec<f64> = grid.par_iter().map(|&l| sigma_min(l)).collect();
    let mut out = Vec::new();
    for i in 1..scan.len() - 1 {
        if !(scan[i] <= scan[i - 1] && scan[i] < scan[i + 1]) {
            continue;
        }
        let l = golden_min(sigma_min, grid[i - 1], grid[i + 1], cfg.bisect_tol);
        if l < cfg.lo || l > cfg.hi {
            continue;
        }
        let s = singular_values(&shooting_matrix(u0, u1, l));
        if s[0] >= cfg.dip_tol {
            continue;
        }
        let mult = s.iter().take_while(|&&x| x < cfg.dip_tol).count();
        if let Some(&next) = s.get(mult) {
            // sigma_min is 1-Lipschitz in lambda, so a second branch this close was not separated
            if next < 2.0 * h {
                return Err(Error::ScanTooCoarse(format!("unresolved dips near lambda = {l:.6}")));
            }
        }
        out.extend(std::iter::repeat_n(l, mult));
    }
    Ok(out)
}

/// Signed crossings of lambda = 0 by shooting eigenvalues, one channel.
/// Each step counts eigenvalues in `(-a, 0)` with `-a` placed in a gap of both
/// endpoint spectra, and is subdivided along polar interpolants while the
/// spectra move too far relative to that gap.
fn shooting_flow_channel(grid: &[f64], u0: &[&CMatrix], u1: &[&CMatrix], cfg: &ShootingConfig, depth: u32) -> Result<i64> {
    let spectra: Vec<Vec<f64>> = u0
        .par_iter()
        .zip(u1.par_iter())
        .map(|(a, b)| shooting_spectrum(a, b, cfg))
        .collect::<Result<Vec<_>>>()?;
    let mut total = 0;
    for k in 0..grid.len() - 1 {
        total += shooting_step(u0[k], u1[k], u0[k + 1], u1[k + 1], &spectra[k], &spectra[k + 1], cfg, depth)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn shooting_step(
    a0: &CMatrix,
    a1: &CMatrix,
    b0: &CMatrix,
    b1: &CMatrix,
    sa: &[f64],
    sb: &[f64],
    cfg: &ShootingConfig,
    depth: u32,
) -> Result<i64> {
    let motion = hausdorff(sa, sb);
    let mut levels: Vec<f64> = sa.iter().chain(sb).copied().filter(|x| (-3.0 * FRAC_PI_4..=-FRAC_PI_4).contains(x)).collect();
    levels.push(-3.0 * FRAC_PI_4);
    levels.push(-FRAC_PI_4);
    levels.sort_by(f64::total_cmp);
    let (gap, level) = levels
        .windows(2)
        .map(|w| (w[1] - w[0], 0.5 * (w[0] + w[1])))
        .fold((0.0, -FRAC_PI_2), |acc, g| if g.0 > acc.0 { g } else { acc });
    if motion < 0.25 * gap && motion < FRAC_PI_4 {
        let count = |s: &[f64]| s.iter().filter(|&&x| x > level && x < 0.0).count() as i64;
        return Ok(count(sa) - count(sb));
    }
    if depth == 0 {
        return Err(Error::ScanTooCoarse(format!("shooting spectra move {motion:.3} in one step")));
    }
    let mid = |x: &CMatrix, y: &CMatrix| matfun::polar_frame(&(x + y).scale(0.5));
    let (m0, m1) = (mid(a0, b0)?, mid(a1, b1)?);
    let sm = shooting_spectrum(&m0, &m1, cfg)?;
    Ok(shooting_step(a0, a1, &m0, &m1, sa, &sm, cfg, depth - 1)? + shooting_step(&m0, &m1, b0, b1, &sm, sb, cfg, depth - 1)?)
}

/// Largest distance from a dip in the inner band `[-0.9 pi, 0.6 pi]` of either
/// spectrum to the nearest dip of the other.
fn hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let one = |x: &[f64], y: &[f64]| {
        x.iter()
            .filter(|p| (-0.9 * PI..=0.6 * PI).contains(*p))
            .map(|p| y.iter().map(|q| (p - q).abs()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one(a, b).max(one(b, a))
}

/// Maslov index from the spectral flow of the shooting eigenvalues through 0,
/// per block; loop blocks must give the same count on every theta channel.
pub fn shooting_maslov(lp: &LagrangianPath, cfg: &ShootingConfig) -> Result<KZeroClass> {
    let cfg = ShootingConfig { lo: -PI, hi: PI, ..*cfg };
    let mut components = Vec::new();
    for (block, spec) in lp.shape.blocks.iter().enumerate() {
        let values = (0..spec.channels())
            .map(|j| {
                let a: Vec<&CMatrix> = lp.u0.iter().map(|s| &s.blocks[block][j]).collect();
                let b: Vec<&CMatrix> = lp.u1.iter().map(|s| &s.blocks[block][j]).collect();
                shooting_flow_channel(&lp.t_grid, &a, &b, &cfg, 8)
            })
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|&v| v != values[0]) {
            return Err(Error::ThetaInconsistent { block, values });
        }
        components.push(values[0]);
    }
    KZeroClass::new(&lp.shape, components)
}

/// Eigenvalues of a hermitian matrix by cyclic complex Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    let mut a = m.clone();
    let scale = a.norm().max(1e-300);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let c = a[(p, q)];
                let r = c.norm();
                if r <= 1e-300 {
                    continue;
                }
                let phase = c / r;
                let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // G = diag(1, conj(phase)) * [[cs, sn], [-sn, cs]]
                let g = [
                    [C64::new(cs, 0.0), C64::new(sn, 0.0)],
                    [phase.conj() * -sn, phase.conj() * cs],
                ];
                for k in 0..n {
                    let (x, y) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = x * g[0][0] + y * g[1][0];
                    a[(k, q)] = x * g[0][1] + y * g[1][1];
                }
                for k in 0..n {
                    let (x, y) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = g[0][0].conj() * x + g[1][0].conj() * y;
                    a[(q, k)] = g[0][1].conj() * x + g[1][1].conj() * y;
                }
            }
        }
    }
    let mut v: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn sorted_crossings(curves: &[Vec<f64>]) -> i64 {
    let mut net = 0;
    for w in curves.windows(2) {
        for (a, b) in w[0].iter().zip(&w[1]) {
            if *a < 0.0 && *b > 0.0 {
                net += 1;
            } else if *a > 0.0 && *b < 0.0 {
                net -= 1;
            }
        }
    }
    net
}

/// Eigenvalues at `t`, moved off `t` by `delta = h/4, h/8, ...` (towards the
/// interior) while some eigenvalue is numerically zero.
fn resolved_sample(p: &HermPath, block: usize, j: usize, t: f64, h: f64, forward: bool, tol: f64) -> Result<Vec<f64>> {
    let mut delta = 0.25 * h;
    let mut s = t;
    for _ in 0..=specflow::DEFAULT_REFINE_MAX {
        let vals = jacobi_eigenvalues(&p.sample_at(s).blocks[block][j]);
        if vals.iter().all(|x| x.abs() > tol) {
            return Ok(vals);
        }
        s = if forward { t + delta } else { t - delta };
        delta *= 0.5;
    }
    Err(Error::UnresolvedCrossing { t })
}

/// Net upward zero crossings of the sorted eigenvalue curves on the grid refined
/// `oversample` times by linear interpolation, per block.
pub fn dense_crossing_oracle(p: &HermPath, oversample: usize) -> Result<KZeroClass> {
    let oversample = oversample.max(1);
    let mut fine = Vec::new();
    for w in p.t_grid.windows(2) {
        for s in 0..oversample {
            fine.push(w[0] + (w[1] - w[0]) * s as f64 / oversample as f64);
        }
    }
    fine.push(1.0);
    let tol = 1e-13 * (1.0 + p.norm());
    let h = 1.0 / (fine.len() - 1) as f64;
    let last = fine.len() - 1;
    let mut components = Vec::new();
    for (block, spec) in p.shape.blocks.iter().enumerate() {
        let values = (0..spec.channels())
            .map(|j| {
                // a zero at an interior sample is split into a sample on each side
                let curves = (0..=last)
                    .into_par_iter()
                    .map(|k| {
                        let t = fine[k];
                        let vals = jacobi_eigenvalues(&p.sample_at(t).blocks[block][j]);
                        if k == 0 || k == last || vals.iter().all(|x| x.abs() > tol) {
                            return Ok(vec![vals]);
                        }
                        Ok(vec![
                            resolved_sample(p, block, j, t, h, false, tol)?,
                            resolved_sample(p, block, j, t, h, true, tol)?,
                        ])
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(sorted_crossings(&curves.into_iter().flatten().collect::<Vec<_>>()))
            })
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|&v| v != values[0]) {
            return Err(Error::ThetaInconsistent { block, values });
        }
        components.push(values[0]);
    }
    KZeroClass::new(&p.shape, components)
}

/// Net sign changes of the sorted eigenvalues on the given samples only,
/// summed over blocks (channel 0). No validity check: this is the count a
/// naive reader of the samples would report.
pub fn naive_crossing_count(p: &HermPath) -> i64 {
    (0..p.shape.len())
        .map(|block| {
            let curves: Vec<Vec<f64>> = p.samples.iter().map(|s| jacobi_eigenvalues(&s.blocks[block][0])).collect();
            let mut net = 0;
            for w in curves.windows(2) {
                for (a, b) in w[0].iter().zip(&w[1]) {
                    net += (*a < 0.0 && *b >= 0.0) as i64 - (*a >= 0.0 && *b < 0.0) as i64;
                }
            }
            net
        })
        .sum()
}

/// The family `diag(f_n)_{n=4..d+3}`, `f_n` piecewise linear: `-1` on
/// `[0, 1/2 - 2/n]`, `0` at `1/2 - 1/n`, `1` on `[1/2, 1]`.
pub fn divergence_family(d: usize, intervals: usize) -> Result<HermPath> {
    let f = |n: f64, t: f64| {
        let (a, b) = (0.5 - 2.0 / n, 0.5);
        if t <= a {
            -1.0
        } else if t >= b {
            1.0
        } else {
            -1.0 + 2.0 * (t - a) / (b - a)
        }
    };
    let shape = AlgebraShape::scalars(&[d])?;
    HermPath::from_fn(shape.clone(), 1, crate::fixtures::uniform_grid(intervals), |t| {
        let diag: Vec<f64> = (4..d + 4).map(|n| f(n as f64, t)).collect();
        AElement::new(shape.clone(), 1, vec![vec![matfun::real_diagonal(&diag)]]).expect("shape")
    })
}

fn scalar_shape() -> AlgebraShape {
    AlgebraShape::scalars(&[1]).expect("shape")
}

fn scalar(z: C64) -> AElement {
    AElement::new(scalar_shape(), 1, vec![vec![CMatrix::from_element(1, 1, z)]]).expect("shape")
}

fn ratio(measured: i64, raw: i64, what: &str) -> Result<i64> {
    match (measured, raw) {
        (m, r) if m.abs() == 1 && r.abs() == 1 => Ok(m * r),
        _ => Err(Error::InconsistentConventions(format!("{what}: measured {measured}, raw {raw}"))),
    }
}

/// Measures every orientation constant on its canonical fixture and checks
/// that the frozen record reproduces all of them simultaneously.
pub fn pin_sign_constants() -> Result<SignConstants> {
    let cfg = FlowConfig::default();
    let shape = scalar_shape();

    // (2tP - 1) with rank-one P: the flow must be +1.
    let line = oppath::projection_line(&AElement::scalar(&shape, 1, 1.0), 32)?;
    let raw_e = specflow::spectral_flow_winding(&line, &cfg)?.value.components[0] * SIGNS.sigma_e;
    let sigma_e = ratio(1, raw_e, "winding route")?;

    // u0 = 1, u1 = e^{i phi}: shooting dips sit at phi/2 + k pi for sigma_d = +1.
    let phi = 1.0;
    let dips = shooting_spectrum(
        &CMatrix::identity(1, 1),
        &CMatrix::from_element(1, 1, C64::from_polar(1.0, phi)),
        &ShootingConfig::window(-FRAC_PI_2, FRAC_PI_2),
    )?;
    let sigma_d = match dips.as_slice() {
        [x] if (x - phi / 2.0).abs() < 1e-8 => 1,
        [x] if (x + phi / 2.0).abs() < 1e-8 => -1,
        _ => return Err(Error::InconsistentConventions(format!("interval fixture dips {dips:?}"))),
    };

    // u0 = 1, u1(t) = e^{i(pi + 2 pi t)}: Maslov index equals the shooting flow.
    let lp = LagrangianPath::from_fn(crate::fixtures::uniform_grid(64), |t| {
        (scalar(C64::new(1.0, 0.0)), scalar(C64::from_polar(1.0, PI + TAU * t)))
    })?;
    let shot = shooting_maslov(&lp, &ShootingConfig::default())?.components[0];
    let mres = maslov::maslov_pair(&lp, 1e-6)?;
    let raw_m = mres.value.components[0] * SIGNS.sigma_m;
    let sigma_m = ratio(shot, raw_m, "Maslov fixture")?;
    let wind = mres
        .loop_winding
        .as_ref()
        .map(|w| w[0])
        .ok_or_else(|| Error::InconsistentConventions("Maslov fixture is not closed".into()))?;
    let beta = ratio(sigma_m * raw_m, wind, "loop identity")?;

    // D_t = 2t - 1: boundary winding against the even flow.
    let d = HermPath::from_fn(shape.clone(), 1, crate::fixtures::uniform_grid(32), |t| {
        AElement::new(shape.clone(), 1, vec![vec![matfun::real_diagonal(&[2.0 * t - 1.0])]]).expect("shape")
    })?;
    let flow = specflow::spectral_flow_sections(&d, &cfg)?.value.components[0];
    let susp = oddflow::suspend_even_to_odd(&d, 32, &cfg)?.suspended[0];
    let sigma_s = ratio(flow, susp, "even-to-odd suspension")?;

    // W_t = (1 - t) + t e^{i theta}: Chern difference against the odd flow, and
    // the odd flow of the straight line against the odd relative index.
    let loop_shape = AlgebraShape::new(vec![crate::algebra::BlockSpec::looped(1, 16)])?;
    let g = oddflow::GradedHermPath::from_w(loop_shape.clone(), 2, crate::fixtures::uniform_grid(8), |t, _, th| {
        CMatrix::from_element(1, 1, C64::new(1.0 - t, 0.0) + C64::from_polar(t, th))
    })?;
    let rep = oddflow::suspend_odd_to_even(&g, 1e-6)?;
    let sigma_c = ratio(rep.odd_flow[0], rep.c0[0] - rep.c1[0], "odd-to-even suspension")?;
    let u1 = AElement::scalar(&loop_shape, 1, 1.0);
    let u2 = AElement::from_fn(&loop_shape, 1, |_, th| CMatrix::from_element(1, 1, C64::from_polar(1.0, th)))?;
    let p1 = oddflow::LagrangianProjection::from_unitary(&u1)?;
    let p2 = oddflow::LagrangianProjection::from_unitary(&u2)?;
    let ind = oddflow::odd_rel_index(&p2, &p1)?.components[0];
    if ind != rep.odd_flow[0] {
        return Err(Error::InconsistentConventions(format!(
            "odd flow of the straight line is {} but the odd relative index is {ind}",
            rep.odd_flow[0]
        )));
    }

    let pinned = SignConstants { sigma_e, sigma_d, sigma_m, sigma_s, sigma_c, beta };
    if pinned != SIGNS {
        return Err(Error::InconsistentConventions(format!("measured {pinned:?}, frozen {SIGNS:?}")));
    }
    Ok(pinned)
}
