//! Even spectral flow `spfl(D_t) in K_0(A)` by three independent routes:
//!
//! * [`spectral_flow_sections`]: relative indices between generalized spectral
//!   sections `1_{>= -a}(D_t)` at the junctions of a gap segmentation;
//! * [`spectral_flow_winding`]: determinant winding of the loop
//!   `t -> U(chi(D_t))`, `U(x) = exp(i pi (x + 1))`;
//! * [`spectral_flow_crossings`]: signed zero crossings of matched eigenvalue curves.
//!
//! [`spectral_flow_winding`] is the default route.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AElement, AlgebraShape, KZeroClass};
use crate::error::{Error, Result};
use crate::matfun::{self, CMatrix, EigDecomp, C64};
use crate::oppath::{self, HermPath, PathEigs, PathValidity, Segment, SegmentMode, Verdict};
use crate::relindex::{self, ProjectionPair};
use crate::signs::SIGNS;

pub const DEFAULT_REFINE_MAX: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub gap_min: f64,
    /// Defaults to half the endpoint gap.
    pub motion_cap: Option<f64>,
    pub refine_max: u32,
    /// Defaults to the path's scale-relative zero tolerance.
    pub tol_zero: Option<f64>,
    pub segments: SegmentMode,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            gap_min: oppath::DEFAULT_GAP_MIN,
            motion_cap: None,
            refine_max: DEFAULT_REFINE_MAX,
            tol_zero: None,
            segments: SegmentMode::Greedy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Route {
    Sections,
    Winding,
    Crossings,
}

impl Route {
    pub const ALL: [Route; 3] = [Route::Sections, Route::Winding, Route::Crossings];

    pub fn parse(s: &str) -> Option<Route> {
        match s {
            "sections" => Some(Route::Sections),
            "winding" => Some(Route::Winding),
            "crossings" => Some(Route::Crossings),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JunctionTerm {
    pub t: f64,
    pub block: usize,
    pub value: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    /// Linear estimate of the crossing parameter.
    pub t: f64,
    /// +1 upward, -1 downward.
    pub direction: i64,
    pub block: usize,
    pub theta_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockWinding {
    pub block: usize,
    /// Winding per theta sample (one entry for scalar blocks), before the sign constant.
    pub per_theta: Vec<i64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FlowDiagnostics {
    pub segments: Vec<Segment>,
    pub junction_terms: Vec<JunctionTerm>,
    pub crossings: Vec<Crossing>,
    pub windings: Vec<BlockWinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowResult {
    pub route: Route,
    pub value: KZeroClass,
    pub diagnostics: FlowDiagnostics,
}

impl FlowResult {
    /// Recomputes the value from the diagnostics.
    pub fn recompute(&self) -> Vec<i64> {
        let n = self.value.components.len();
        let mut out = vec![0; n];
        match self.route {
            Route::Sections => {
                for j in &self.diagnostics.junction_terms {
                    out[j.block] += j.value;
                }
            }
            Route::Crossings => {
                for c in self.diagnostics.crossings.iter().filter(|c| c.theta_index == 0) {
                    out[c.block] += c.direction;
                }
            }
            Route::Winding => {
                for w in &self.diagnostics.windings {
                    out[w.block] = SIGNS.sigma_e * w.per_theta[0];
                }
            }
        }
        out
    }
}

/// Eigendecompositions and validity, refusing unless the verdict is valid.
fn checked_eigs(p: &HermPath, cfg: &FlowConfig) -> Result<(PathEigs, PathValidity)> {
    let eigs = oppath::path_eigs(p)?;
    let validity = oppath::validity_from_eigs(&eigs, cfg.gap_min, cfg.motion_cap);
    if validity.verdict != Verdict::Valid {
        return Err(Error::InvalidPath(format!(
            "verdict {:?}: endpoint gap {:.3e}, worst step motion {:.3e} at step {} (cap {:.3e})",
            validity.verdict, validity.endpoint_gap, validity.worst_step_motion, validity.worst_step, validity.motion_cap
        )));
    }
    Ok((eigs, validity))
}

fn tol_zero(p: &HermPath, cfg: &FlowConfig) -> f64 {
    cfg.tol_zero.unwrap_or_else(|| p.tol_zero())
}

fn element_from_eigs(p: &HermPath, eigs: &[Vec<EigDecomp>], keep: impl Fn(f64) -> bool + Copy) -> Result<AElement> {
    let blocks = eigs.iter().map(|b| b.iter().map(|e| e.projection_where(keep)).collect()).collect();
    AElement::new(p.shape.clone(), p.rank, blocks)
}

fn push_terms(out: &mut Vec<JunctionTerm>, t: f64, class: &KZeroClass) {
    for (block, &value) in class.components.iter().enumerate() {
        out.push(JunctionTerm { t, block, value });
    }
}

/// Junction algorithm with zero trivializing operators at the endpoints and
/// sections `1_{>= -a_i}(D_t)` on the segments of [`oppath::find_segments`].
pub fn spectral_flow_sections(p: &HermPath, cfg: &FlowConfig) -> Result<FlowResult> {
    let (eigs, _) = checked_eigs(p, cfg)?;
    let values = oppath::channel_values(&eigs);
    let segments = oppath::segments_from_values(&values, &p.t_grid, cfg.segments, tol_zero(p, cfg))?;
    let last = p.len() - 1;
    let section = |k: usize, a: f64| element_from_eigs(p, &eigs[k], move |x| x >= -a);
    let rel = |x: AElement, y: AElement| relindex::rel_index_fredholm(&ProjectionPair::new(x, y)?);

    let mut terms = Vec::new();
    let mut total = KZeroClass::zero(&p.shape);
    let mut add = |t: f64, c: KZeroClass, terms: &mut Vec<JunctionTerm>| -> Result<()> {
        push_terms(terms, t, &c);
        total = total.checked_add(&c)?;
        Ok(())
    };
    add(0.0, rel(section(0, segments[0].level)?, section(0, 0.0)?)?, &mut terms)?;
    for w in segments.windows(2) {
        let k = w[1].start;
        add(p.t_grid[k], rel(section(k, w[1].level)?, section(k, w[0].level)?)?, &mut terms)?;
    }
    let a_last = segments.last().unwrap().level;
    add(1.0, rel(section(last, 0.0)?, section(last, a_last)?)?, &mut terms)?;
    Ok(FlowResult {
        route: Route::Sections,
        value: total,
        diagnostics: FlowDiagnostics { segments, junction_terms: terms, ..Default::default() },
    })
}

/// Normalizing function: the bounded transform rescaled to reach +-1 at `g` and clamped.
pub fn chi(x: f64, g: f64) -> f64 {
    let b = |y: f64| y / (1.0 + y * y).sqrt();
    (b(x) / b(g)).clamp(-1.0, 1.0)
}

/// `U(x) = exp(i pi (x + 1))` on [-1, 1].
pub fn u_wind(x: f64) -> C64 {
    C64::from_polar(1.0, PI * (x.clamp(-1.0, 1.0) + 1.0))
}

fn interpolate(a: &CMatrix, b: &CMatrix, w: f64) -> CMatrix {
    a.scale(1.0 - w) + b.scale(w)
}

/// Channel samples `[k]` of one channel.
fn channel(p: &HermPath, block: usize, j: usize) -> Vec<&CMatrix> {
    p.samples.iter().map(|s| &s.blocks[block][j]).collect()
}

/// Linear interpolation of a sampled channel at `t`.
fn channel_at(grid: &[f64], samples: &[&CMatrix], t: f64) -> CMatrix {
    let k = grid.partition_point(|&s| s < t).clamp(1, grid.len() - 1);
    let w = ((t - grid[k - 1]) / (grid[k] - grid[k - 1])).clamp(0.0, 1.0);
    interpolate(samples[k - 1], samples[k], w)
}

struct WindSample {
    det: C64,
    chis: Vec<f64>,
}

fn wind_sample(m: &CMatrix, g: f64) -> Result<WindSample> {
    let eig = matfun::eig_hermitian(m)?;
    let mut chis: Vec<f64> = eig.values.iter().map(|&x| chi(x, g)).collect();
    let det = matfun::determinant(&eig.map(|x| u_wind(chi(x, g))));
    chis.sort_by(f64::total_cmp);
    Ok(WindSample { det, chis })
}

/// Phase of `det U` across one step. A step is accepted only when the summed
/// eigenvalue motion `pi sum |d chi|` stays below pi/2, so that several
/// eigenvalues moving together cannot alias by a multiple of 2 pi.
fn wind_step(
    f: &impl Fn(f64) -> Result<WindSample>,
    step: usize,
    (t0, a): (f64, &WindSample),
    (t1, b): (f64, &WindSample),
    depth: u32,
) -> Result<f64> {
    let d = matfun::phase_step(a.det, b.det);
    let motion: f64 = PI * a.chis.iter().zip(&b.chis).map(|(x, y)| (x - y).abs()).sum::<f64>();
    if motion < FRAC_PI_2 && d.abs() < FRAC_PI_2 {
        return Ok(d);
    }
    if depth == 0 {
        return Err(Error::SamplingTooCoarse { step, phase_step: d });
    }
    let tm = 0.5 * (t0 + t1);
    let m = f(tm)?;
    Ok(wind_step(f, step, (t0, a), (tm, &m), depth - 1)? + wind_step(f, step, (tm, &m), (t1, b), depth - 1)?)
}

fn winding_channel(grid: &[f64], samples: &[&CMatrix], g: f64, refine_max: u32) -> Result<i64> {
    let values = samples.iter().map(|m| wind_sample(m, g)).collect::<Result<Vec<_>>>()?;
    let f = |t: f64| wind_sample(&channel_at(grid, samples, t), g);
    let mut phase = 0.0;
    for k in 1..grid.len() {
        phase += wind_step(&f, k - 1, (grid[k - 1], &values[k - 1]), (grid[k], &values[k]), refine_max)?;
    }
    // close the loop: both endpoint values are 1 up to rounding
    phase += matfun::phase_step(values.last().unwrap().det, values[0].det);
    Ok((phase / TAU).round() as i64)
}

fn require_theta_constant(block: usize, values: &[i64]) -> Result<i64> {
    if values.iter().any(|&v| v != values[0]) {
        return Err(Error::ThetaInconsistent { block, values: values.to_vec() });
    }
    Ok(values[0])
}

/// Winding of `det U(chi(D_t))` around the closed loop `t in [0, 1]`, per block.
pub fn spectral_flow_winding(p: &HermPath, cfg: &FlowConfig) -> Result<FlowResult> {
    let (_, validity) = checked_eigs(p, cfg)?;
    let g = 0.5 * validity.endpoint_gap;
    let mut windings = Vec::new();
    let mut components = Vec::new();
    for (block, spec) in p.shape.blocks.iter().enumerate() {
        let per_theta = (0..spec.channels())
            .into_par_iter()
            .map(|j| winding_channel(&p.t_grid, &channel(p, block, j), g, cfg.refine_max))
            .collect::<Result<Vec<_>>>()?;
        let w = require_theta_constant(block, &per_theta)?;
        components.push(SIGNS.sigma_e * w);
        windings.push(BlockWinding { block, per_theta });
    }
    Ok(FlowResult {
        route: Route::Winding,
        value: KZeroClass::new(&p.shape, components)?,
        diagnostics: FlowDiagnostics { windings, ..Default::default() },
    })
}

fn has_near_zero(e: &EigDecomp, tol: f64) -> bool {
    e.values.iter().any(|x| x.abs() <= tol)
}

/// Samples of one channel with interior near-zero samples replaced by nearby
/// interpolated parameters.
fn resolved_channel(
    grid: &[f64],
    samples: &[&CMatrix],
    eigs: Vec<EigDecomp>,
    tol: f64,
    refine_max: u32,
) -> Result<Vec<(f64, EigDecomp)>> {
    let last = grid.len() - 1;
    let mut out = Vec::with_capacity(grid.len());
    for (k, e) in eigs.into_iter().enumerate() {
        if k == 0 || k == last || !has_near_zero(&e, tol) {
            out.push((grid[k], e));
            continue;
        }
        let h = (grid[k] - grid[k - 1]).min(grid[k + 1] - grid[k]);
        let mut found = None;
        let mut delta = 0.25 * h;
        'search: for _ in 0..refine_max {
            for t in [grid[k] + delta, grid[k] - delta] {
                let cand = matfun::eig_hermitian(&channel_at(grid, samples, t))?;
                if !has_near_zero(&cand, tol) {
                    found = Some((t, cand));
                    break 'search;
                }
            }
            delta *= 0.5;
        }
        match found {
            Some(x) => out.push(x),
            None => return Err(Error::UnresolvedCrossing { t: grid[k] }),
        }
    }
    Ok(out)
}

fn count_crossings(points: &[(f64, EigDecomp)], block: usize, theta_index: usize, out: &mut Vec<Crossing>) -> i64 {
    let mut net = 0;
    for w in points.windows(2) {
        let ((t0, a), (t1, b)) = (&w[0], &w[1]);
        let sigma = matfun::match_by_overlap(&a.vectors, &b.vectors);
        for (i, &j) in sigma.iter().enumerate() {
            let (x, y) = (a.values[i], b.values[j]);
            let direction = if x < 0.0 && y > 0.0 {
                1
            } else if x > 0.0 && y < 0.0 {
                -1
            } else {
                continue;
            };
            let t = t0 + (t1 - t0) * (x / (x - y));
            out.push(Crossing { t, direction, block, theta_index });
            net += direction;
        }
    }
    net
}

/// Net signed zero crossings of eigenvalue curves matched by maximal overlap.
pub fn spectral_flow_crossings(p: &HermPath, cfg: &FlowConfig) -> Result<FlowResult> {
    let (eigs, _) = checked_eigs(p, cfg)?;
    crossings_from_eigs(p, eigs, tol_zero(p, cfg), cfg.refine_max)
}

pub(crate) fn crossings_from_eigs(p: &HermPath, eigs: PathEigs, tol: f64, refine_max: u32) -> Result<FlowResult> {
    // regroup [sample][block][theta] -> [block][theta][sample]
    let mut by_channel: Vec<Vec<Vec<EigDecomp>>> =
        p.shape.blocks.iter().map(|b| (0..b.channels()).map(|_| Vec::new()).collect()).collect();
    for sample in eigs {
        for (b, block) in sample.into_iter().enumerate() {
            for (j, e) in block.into_iter().enumerate() {
                by_channel[b][j].push(e);
            }
        }
    }
    let mut crossings = Vec::new();
    let mut components = Vec::new();
    for (block, chans) in by_channel.into_iter().enumerate() {
        let results = chans
            .into_par_iter()
            .enumerate()
            .map(|(j, e)| {
                let points = resolved_channel(&p.t_grid, &channel(p, block, j), e, tol, refine_max)?;
                let mut local = Vec::new();
                let net = count_crossings(&points, block, j, &mut local);
                Ok((net, local))
            })
            .collect::<Result<Vec<_>>>()?;
        let nets: Vec<i64> = results.iter().map(|r| r.0).collect();
        components.push(require_theta_constant(block, &nets)?);
        crossings.extend(results.into_iter().flat_map(|r| r.1));
    }
    crossings.sort_by(|a, b| {
        a.t.total_cmp(&b.t)
            .then(a.block.cmp(&b.block))
            .then(a.theta_index.cmp(&b.theta_index))
    });
    Ok(FlowResult {
        route: Route::Crossings,
        value: KZeroClass::new(&p.shape, components)?,
        diagnostics: FlowDiagnostics { crossings, ..Default::default() },
    })
}

pub fn spectral_flow(p: &HermPath, route: Route, cfg: &FlowConfig) -> Result<FlowResult> {
    match route {
        Route::Sections => spectral_flow_sections(p, cfg),
        Route::Winding => spectral_flow_winding(p, cfg),
        Route::Crossings => spectral_flow_crossings(p, cfg),
    }
}

/// Default route, cross-checked against the other two.
pub fn spectral_flow_checked(p: &HermPath, cfg: &FlowConfig) -> Result<Vec<FlowResult>> {
    let results = Route::ALL
        .iter()
        .map(|&r| spectral_flow(p, r, cfg))
        .collect::<Result<Vec<_>>>()?;
    let values: Vec<&Vec<i64>> = results.iter().map(|r| &r.value.components).collect();
    if values.iter().any(|v| *v != values[0]) {
        return Err(Error::CrossCheckFailed(format!("flow routes disagree: {values:?}")));
    }
    Ok(results)
}

/// Finite-truncation endpoint law `n_-(D_0) - n_-(D_1)` per block (theta sample 0).
pub fn endpoint_law(p: &HermPath) -> Result<KZeroClass> {
    let tol = p.tol_zero();
    let n0 = oppath::negative_counts(p.start(), tol)?;
    let n1 = oppath::negative_counts(p.end(), tol)?;
    let components = n0.iter().zip(&n1).map(|(a, b)| a[0] as i64 - b[0] as i64).collect();
    KZeroClass::new(&p.shape, components)
}

/// Flow of the loop `D_t + A` with `A = 2a 1_{[-a,a]}(D_0)` at both ends.
pub fn loop_spectral_flow(p: &HermPath, a: f64, route: Route, cfg: &FlowConfig) -> Result<FlowResult> {
    let defect = p.start().distance(p.end());
    if defect != 0.0 {
        return Err(Error::EndpointMismatch { defect });
    }
    let shift = oppath::trivializing_operator(p.start(), a, cfg.tol_zero)?;
    let shifted = HermPath::new(
        p.shape.clone(),
        p.rank,
        p.t_grid.clone(),
        p.samples.iter().map(|s| s.zip_map(&shift, |x, y| x + y)).collect(),
    )?;
    spectral_flow(&shifted, route, cfg)
}

/// `p` followed by `q`, each traversed at double speed.
pub fn concatenate(p: &HermPath, q: &HermPath) -> Result<HermPath> {
    p.start().check_compatible(q.start())?;
    let defect = p.end().distance(q.start());
    if defect > 1e-12 * (1.0 + p.norm()) {
        return Err(Error::EndpointMismatch { defect });
    }
    let mut grid: Vec<f64> = p.t_grid.iter().map(|t| 0.5 * t).collect();
    grid.extend(q.t_grid.iter().skip(1).map(|t| 0.5 + 0.5 * t));
    let mut samples = p.samples.clone();
    samples.extend(q.samples.iter().skip(1).cloned());
    HermPath::new(p.shape.clone(), p.rank, grid, samples)
}

pub fn reverse(p: &HermPath) -> HermPath {
    let grid: Vec<f64> = p.t_grid.iter().rev().map(|t| 1.0 - t).collect();
    let samples: Vec<AElement> = p.samples.iter().rev().cloned().collect();
    HermPath { shape: p.shape.clone(), rank: p.rank, t_grid: grid, samples }
}

/// Pointwise direct sum in `M_{n+m}(A)` on the union of both grids.
pub fn direct_sum(p: &HermPath, q: &HermPath) -> Result<HermPath> {
    if p.shape != q.shape {
        return Err(Error::ShapeMismatch("direct sum of paths over different shapes".into()));
    }
    let mut grid: Vec<f64> = p.t_grid.iter().chain(&q.t_grid).copied().collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let samples = grid
        .iter()
        .map(|&t| p.sample_at(t).direct_sum(&q.sample_at(t)))
        .collect::<Result<Vec<_>>>()?;
    HermPath::new(p.shape.clone(), p.rank + q.rank, grid, samples)
}

/// The path and its reversal, concatenated.
pub fn symmetric_path(p: &HermPath) -> Result<HermPath> {
    concatenate(p, &reverse(p))
}

/// Shape-level zero class helper for callers.
pub fn zero(shape: &AlgebraShape) -> KZeroClass {
    KZeroClass::zero(shape)
}
