//! Sampled paths `t -> D_t` of hermitian elements over an algebra shape,
//! validity verdicts, normalizing transforms, trivializing operators and gap
//! segmentations.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AElement, AlgebraShape, Homomorphism};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::matfun::{self, CMatrix, EigDecomp, C64};

pub const DEFAULT_GAP_MIN: f64 = 1e-6;

/// Smallest slope at 0 accepted as positive by the normalizing spot-check.
pub const MIN_SLOPE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct HermPath {
    pub shape: AlgebraShape,
    pub rank: usize,
    pub t_grid: Vec<f64>,
    pub samples: Vec<AElement>,
}

impl HermPath {
    pub fn new(shape: AlgebraShape, rank: usize, t_grid: Vec<f64>, samples: Vec<AElement>) -> Result<Self> {
        if t_grid.len() < 2 {
            return Err(Error::InvalidPath("at least two grid points are required".into()));
        }
        if t_grid.len() != samples.len() {
            return Err(Error::InvalidPath(format!(
                "{} grid points but {} samples",
                t_grid.len(),
                samples.len()
            )));
        }
        if t_grid[0] != 0.0 || *t_grid.last().unwrap() != 1.0 {
            return Err(Error::InvalidPath("grid must start at 0 and end at 1".into()));
        }
        if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidPath("grid must be strictly increasing".into()));
        }
        for s in &samples {
            if s.shape != shape || s.rank != rank {
                return Err(Error::ShapeMismatch("sample shape differs from path shape".into()));
            }
            s.check_hermitian()?;
        }
        Ok(HermPath { shape, rank, t_grid, samples })
    }

    pub fn from_fn(shape: AlgebraShape, rank: usize, t_grid: Vec<f64>, f: impl Fn(f64) -> AElement) -> Result<Self> {
        let samples = t_grid.iter().map(|&t| f(t)).collect();
        Self::new(shape, rank, t_grid, samples)
    }

    /// Constant path on a uniform grid.
    pub fn constant(x: &AElement, intervals: usize) -> Result<Self> {
        Self::from_fn(x.shape.clone(), x.rank, fixtures::uniform_grid(intervals), |_| x.clone())
    }

    /// Straight line from `a` to `b` on a uniform grid.
    pub fn straight(a: &AElement, b: &AElement, intervals: usize) -> Result<Self> {
        a.check_compatible(b)?;
        Self::from_fn(a.shape.clone(), a.rank, fixtures::uniform_grid(intervals), |t| {
            a.zip_map(b, |x, y| x.scale(1.0 - t) + y.scale(t))
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start(&self) -> &AElement {
        &self.samples[0]
    }

    pub fn end(&self) -> &AElement {
        self.samples.last().unwrap()
    }

    /// Linear interpolation between the bracketing samples.
    pub fn sample_at(&self, t: f64) -> AElement {
        let t = t.clamp(0.0, 1.0);
        let k = match self.t_grid.iter().position(|&s| s >= t) {
            Some(0) => return self.samples[0].clone(),
            Some(k) => k,
            None => return self.end().clone(),
        };
        let (t0, t1) = (self.t_grid[k - 1], self.t_grid[k]);
        let w = (t - t0) / (t1 - t0);
        self.samples[k - 1].zip_map(&self.samples[k], |a, b| a.scale(1.0 - w) + b.scale(w))
    }

    /// Channelwise map of every sample.
    pub fn try_map(&self, f: impl Fn(&CMatrix) -> Result<CMatrix> + Sync) -> Result<HermPath> {
        let samples = self
            .samples
            .par_iter()
            .map(|s| s.try_map(&f))
            .collect::<Result<Vec<_>>>()?;
        HermPath::new(self.shape.clone(), self.rank, self.t_grid.clone(), samples)
    }

    pub fn apply(&self, hom: &Homomorphism) -> Result<HermPath> {
        let samples = self.samples.iter().map(|s| hom.apply(s)).collect::<Result<Vec<_>>>()?;
        let shape = hom.target_shape(&self.shape)?;
        HermPath::new(shape, self.rank, self.t_grid.clone(), samples)
    }

    /// Largest Frobenius norm over all samples and channels.
    pub fn norm(&self) -> f64 {
        self.samples.iter().map(AElement::norm).fold(0.0, f64::max)
    }

    /// Default zero tolerance for this path.
    pub fn tol_zero(&self) -> f64 {
        matfun::ZERO_TOL * (1.0 + self.norm())
    }
}

/// Eigendecompositions indexed `[sample][block][theta]`.
pub type PathEigs = Vec<Vec<Vec<EigDecomp>>>;

pub fn element_eigs(x: &AElement) -> Result<Vec<Vec<EigDecomp>>> {
    x.blocks
        .iter()
        .map(|s| s.iter().map(matfun::eig_hermitian).collect())
        .collect()
}

pub fn path_eigs(p: &HermPath) -> Result<PathEigs> {
    p.samples.par_iter().map(element_eigs).collect()
}

fn min_abs(eigs: &[Vec<EigDecomp>]) -> f64 {
    eigs.iter()
        .flatten()
        .flat_map(|e| e.values.iter().map(|x| x.abs()))
        .fold(f64::INFINITY, f64::min)
}

/// Largest eigenvalue displacement between two decompositions after overlap matching.
pub fn matched_motion(prev: &EigDecomp, next: &EigDecomp) -> f64 {
    let sigma = matfun::match_by_overlap(&prev.vectors, &next.vectors);
    sigma
        .iter()
        .enumerate()
        .map(|(i, &j)| (next.values[j] - prev.values[i]).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Valid,
    Refine,
    Invalid,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathValidity {
    pub endpoint_gap: f64,
    pub worst_step_motion: f64,
    /// Index `k` of the worst step `t_k -> t_{k+1}`.
    pub worst_step: usize,
    pub gap_min: f64,
    pub motion_cap: f64,
    /// Smallest `|eigenvalue|` over all channels, per sample.
    pub min_interior_gap_profile: Vec<f64>,
    pub verdict: Verdict,
}

/// Validity verdict. `motion_cap` defaults to half the endpoint gap. Errors only
/// on malformed samples; all spectral outcomes are encoded in the verdict.
pub fn validate_path(p: &HermPath, gap_min: f64, motion_cap: Option<f64>) -> Result<PathValidity> {
    let eigs = path_eigs(p)?;
    Ok(validity_from_eigs(&eigs, gap_min, motion_cap))
}

pub fn validity_from_eigs(eigs: &PathEigs, gap_min: f64, motion_cap: Option<f64>) -> PathValidity {
    let profile: Vec<f64> = eigs.iter().map(|e| min_abs(e)).collect();
    let endpoint_gap = profile[0].min(*profile.last().unwrap());
    let motion_cap = motion_cap.unwrap_or(0.5 * endpoint_gap);
    let motions: Vec<f64> = eigs
        .par_windows(2)
        .map(|w| {
            w[0].iter()
                .flatten()
                .zip(w[1].iter().flatten())
                .map(|(a, b)| matched_motion(a, b))
                .fold(0.0, f64::max)
        })
        .collect();
    let (worst_step, worst_step_motion) = motions
        .iter()
        .copied()
        .enumerate()
        .fold((0, 0.0), |acc, (k, m)| if m > acc.1 { (k, m) } else { acc });
    let verdict = if endpoint_gap < gap_min {
        Verdict::Invalid
    } else if worst_step_motion > motion_cap {
        Verdict::Refine
    } else {
        Verdict::Valid
    };
    PathValidity {
        endpoint_gap,
        worst_step_motion,
        worst_step,
        gap_min,
        motion_cap,
        min_interior_gap_profile: profile,
        verdict,
    }
}

/// Applies `f` to every sample by functional calculus after spot-checking that
/// `f` is odd, non-decreasing on the sampled spectra, vanishes at 0 and has
/// positive slope there.
pub fn normalizing_transform(p: &HermPath, f: impl Fn(f64) -> f64 + Sync) -> Result<HermPath> {
    let eigs = path_eigs(p)?;
    let mut xs: Vec<f64> = eigs.iter().flatten().flatten().flat_map(|e| e.values.iter().copied()).collect();
    xs.sort_by(f64::total_cmp);
    check_normalizing(&f, &xs)?;
    p.try_map(|m| matfun::functional_calculus(m, &f))
}

pub fn check_normalizing(f: &impl Fn(f64) -> f64, xs: &[f64]) -> Result<()> {
    if f(0.0).abs() > 1e-12 {
        return Err(Error::NotNormalizing(format!("f(0) = {}", f(0.0))));
    }
    let h = 1e-6;
    if !((f(h) - f(-h)) / (2.0 * h) >= MIN_SLOPE) {
        return Err(Error::NotNormalizing("f'(0) is not positive".into()));
    }
    for &x in xs {
        let (a, b) = (f(x), f(-x));
        if (a + b).abs() > 1e-9 * (1.0 + a.abs()) {
            return Err(Error::NotNormalizing(format!("f is not odd at {x}")));
        }
    }
    for w in xs.windows(2) {
        if f(w[1]) < f(w[0]) - 1e-12 {
            return Err(Error::NotNormalizing(format!("f decreases between {} and {}", w[0], w[1])));
        }
    }
    Ok(())
}

/// `2a 1_{[-a,a]}(D)` channelwise; `+-a` must stay `tol` away from the spectrum.
pub fn trivializing_operator(d: &AElement, a: f64, tol: Option<f64>) -> Result<AElement> {
    d.try_map(|m| {
        let eig = matfun::eig_hermitian(m)?;
        let tol = tol.unwrap_or_else(|| matfun::zero_tol(m));
        check_level(&eig.values, a, tol)?;
        Ok(eig.projection_where(|x| x.abs() <= a).scale(2.0 * a))
    })
}

fn check_level(values: &[f64], a: f64, tol: f64) -> Result<()> {
    for &x in values {
        if (x - a).abs() <= tol || (x + a).abs() <= tol {
            return Err(Error::GapHitsSpectrum { level: a, eigenvalue: x });
        }
    }
    Ok(())
}

/// A run of samples `start..=end` on which `+-level` avoids the spectrum and
/// the counts below `-level` and above `level` stay constant on every channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub level: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMode {
    /// Each segment reaches as far as possible; ties go to the smallest level.
    Greedy,
    /// Random admissible levels and random segment lengths.
    Randomized { seed: u64 },
}

/// Eigenvalue lists per sample, flattened over channels: `[sample][channel]`.
pub fn channel_values(eigs: &PathEigs) -> Vec<Vec<Vec<f64>>> {
    eigs.iter()
        .map(|s| s.iter().flatten().map(|e| e.values.clone()).collect())
        .collect()
}

pub fn find_segments(p: &HermPath, mode: SegmentMode) -> Result<Vec<Segment>> {
    let eigs = path_eigs(p)?;
    segments_from_values(&channel_values(&eigs), &p.t_grid, mode, p.tol_zero())
}

fn counts(values: &[f64], a: f64) -> (usize, usize) {
    (
        values.iter().filter(|&&x| x < -a).count(),
        values.iter().filter(|&&x| x > a).count(),
    )
}

fn level_reach(values: &[Vec<Vec<f64>>], s: usize, a: f64, tol: f64) -> Option<usize> {
    let valid_at = |k: usize| values[k].iter().all(|ch| check_level(ch, a, tol).is_ok());
    if !valid_at(s) {
        return None;
    }
    let base: Vec<(usize, usize)> = values[s].iter().map(|ch| counts(ch, a)).collect();
    let mut reach = s;
    for (k, sample) in values.iter().enumerate().skip(s + 1) {
        let same = sample.iter().zip(&base).all(|(ch, &c)| counts(ch, a) == c);
        if !valid_at(k) || !same {
            break;
        }
        reach = k;
    }
    Some(reach)
}

fn candidate_levels(values: &[Vec<f64>], tol: f64) -> Vec<f64> {
    let mut abs: Vec<f64> = values.iter().flatten().map(|x| x.abs()).collect();
    abs.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    if abs[0] > 4.0 * tol {
        out.push(0.5 * abs[0]);
    }
    for w in abs.windows(2) {
        if w[1] - w[0] > 4.0 * tol {
            out.push(0.5 * (w[0] + w[1]));
        }
    }
    out.push(abs.last().unwrap() + 1.0);
    out
}

pub fn segments_from_values(values: &[Vec<Vec<f64>>], t_grid: &[f64], mode: SegmentMode, tol: f64) -> Result<Vec<Segment>> {
    let last = values.len() - 1;
    for k in [0, last] {
        if values[k].iter().flatten().any(|x| x.abs() <= tol) {
            return Err(Error::NoGapFound { sample: k, t: t_grid[k] });
        }
    }
    let mut rng = match mode {
        SegmentMode::Randomized { seed } => Some(fixtures::rng(seed)),
        SegmentMode::Greedy => None,
    };
    let mut segments = Vec::new();
    let mut s = 0;
    while s < last {
        let options: Vec<(f64, usize)> = candidate_levels(&values[s], tol)
            .into_iter()
            .filter_map(|a| level_reach(values, s, a, tol).map(|r| (a, r)))
            .filter(|&(_, r)| r > s)
            .collect();
        if options.is_empty() {
            return Err(Error::NoGapFound { sample: s, t: t_grid[s] });
        }
        let (level, end) = match rng.as_mut() {
            None => {
                let best = options.iter().map(|o| o.1).max().unwrap();
                *options.iter().find(|o| o.1 == best).unwrap()
            }
            Some(r) => {
                let &(a, reach) = options.choose(r).unwrap();
                (a, r.gen_range(s + 1..=reach))
            }
        };
        segments.push(Segment { start: s, end, level });
        s = end;
    }
    Ok(segments)
}

/// One row of eigenvalue-curve output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: f64,
    pub block: usize,
    /// `theta_index * m + j` for loop blocks, `j` for scalar blocks.
    pub curve_index: usize,
    pub eigenvalue: f64,
}

/// Eigenvalue curves continued by overlap matching, ordered by `(t, block, curve)`.
pub fn eigen_curves(p: &HermPath) -> Result<Vec<CurvePoint>> {
    let eigs = path_eigs(p)?;
    let mut out = Vec::new();
    let mut perms: Vec<Vec<Vec<usize>>> = eigs[0]
        .iter()
        .map(|b| b.iter().map(|e| (0..e.dim()).collect()).collect())
        .collect();
    for (k, sample) in eigs.iter().enumerate() {
        if k > 0 {
            for (b, block) in sample.iter().enumerate() {
                for (j, e) in block.iter().enumerate() {
                    let sigma = matfun::match_by_overlap(&eigs[k - 1][b][j].vectors, &e.vectors);
                    let perm = &mut perms[b][j];
                    for c in perm.iter_mut() {
                        *c = sigma[*c];
                    }
                }
            }
        }
        for (b, block) in sample.iter().enumerate() {
            for (j, e) in block.iter().enumerate() {
                let m = e.dim();
                for (c, &idx) in perms[b][j].iter().enumerate() {
                    out.push(CurvePoint { t: p.t_grid[k], block: b, curve_index: j * m + c, eigenvalue: e.values[idx] });
                }
            }
        }
    }
    Ok(out)
}

/// `n_-(x)` per channel, `[block][theta]`.
pub fn negative_counts(x: &AElement, tol: f64) -> Result<Vec<Vec<usize>>> {
    x.blocks
        .iter()
        .map(|s| {
            s.iter()
                .map(|m| {
                    let eig = matfun::eig_hermitian(m)?;
                    if eig.values.iter().any(|v| v.abs() <= tol) {
                        return Err(Error::InvalidPath("singular endpoint".into()));
                    }
                    Ok(eig.values.iter().filter(|&&v| v < 0.0).count())
                })
                .collect()
        })
        .collect()
}

/// `2tP - 1` on a uniform grid.
pub fn projection_line(p: &AElement, intervals: usize) -> Result<HermPath> {
    HermPath::from_fn(p.shape.clone(), p.rank, fixtures::uniform_grid(intervals), |t| {
        p.map(|m| m.scale(2.0 * t) - CMatrix::identity(m.nrows(), m.ncols()))
    })
}

/// Applies a complex scalar function to every channel; used for unitary loops.
pub fn complex_calculus(x: &AElement, f: impl Fn(f64) -> C64 + Copy) -> Result<AElement> {
    x.try_map(|m| matfun::functional_calculus_complex(m, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockSpec;

    fn diag_path(intervals: usize, f: impl Fn(f64) -> Vec<f64>) -> HermPath {
        let n = f(0.0).len();
        let shape = AlgebraShape::scalars(&[n]).unwrap();
        HermPath::from_fn(shape.clone(), 1, fixtures::uniform_grid(intervals), |t| {
            AElement::new(shape.clone(), 1, vec![vec![matfun::real_diagonal(&f(t))]]).unwrap()
        })
        .unwrap()
    }

    #[test]
    fn constant_path_is_valid() {
        let p = diag_path(8, |_| vec![1.0, -1.0]);
        let v = validate_path(&p, DEFAULT_GAP_MIN, None).unwrap();
        assert_eq!(v.verdict, Verdict::Valid);
        assert_eq!(v.endpoint_gap, 1.0);
    }

    #[test]
    fn projection_line_is_valid() {
        let mut r = fixtures::rng(1);
        let shape = AlgebraShape::scalars(&[3]).unwrap();
        let p = AElement::new(shape, 1, vec![vec![fixtures::random_projection(&mut r, 3, 1)]]).unwrap();
        let path = projection_line(&p, 64).unwrap();
        assert_eq!(validate_path(&path, DEFAULT_GAP_MIN, None).unwrap().verdict, Verdict::Valid);
    }

    #[test]
    fn singular_endpoint_is_invalid() {
        let p = diag_path(8, |_| vec![0.0, 1.0]);
        assert_eq!(validate_path(&p, DEFAULT_GAP_MIN, None).unwrap().verdict, Verdict::Invalid);
        assert!(matches!(find_segments(&p, SegmentMode::Greedy), Err(Error::NoGapFound { sample: 0, .. })));
    }

    #[test]
    fn fast_motion_needs_refinement() {
        let p = diag_path(4, |t| vec![if t < 0.5 { -1.0 } else { 1.0 }]);
        assert_eq!(validate_path(&p, DEFAULT_GAP_MIN, None).unwrap().verdict, Verdict::Refine);
    }

    #[test]
    fn identity_transform_keeps_path() {
        let p = diag_path(4, |t| vec![2.0 * t - 1.0, 0.5]);
        let q = normalizing_transform(&p, |x| x).unwrap();
        assert!(q.samples.iter().zip(&p.samples).all(|(a, b)| a.distance(b) < 1e-12));
    }

    #[test]
    fn bounded_transform_maps_pointwise() {
        let p = diag_path(4, |t| vec![1.0 + t, -2.0]);
        let q = normalizing_transform(&p, |x| x / (1.0 + x * x).sqrt()).unwrap();
        let m = &q.samples[4].blocks[0][0];
        assert!((m[(0, 0)].re - 2.0 / 5f64.sqrt()).abs() < 1e-12);
        assert!((m[(1, 1)].re + 2.0 / 5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_normalizing() {
        let p = diag_path(4, |t| vec![1.0 + t, -2.0]);
        assert!(normalizing_transform(&p, |x| x + 0.1).is_err());
        assert!(normalizing_transform(&p, |x| -x).is_err());
        assert!(normalizing_transform(&p, |x| x * x * x.signum()).is_err());
        assert!(normalizing_transform(&p, |x| (3.0 * x).sin()).is_err());
    }

    #[test]
    fn trivializing_examples() {
        let shape = AlgebraShape::scalars(&[2]).unwrap();
        let d = AElement::new(shape.clone(), 1, vec![vec![matfun::real_diagonal(&[-0.1, 3.0])]]).unwrap();
        let a = trivializing_operator(&d, 1.0, None).unwrap();
        assert!((&a.blocks[0][0] - matfun::real_diagonal(&[2.0, 0.0])).norm() < 1e-14);
        let sum = &d.blocks[0][0] + &a.blocks[0][0];
        assert!((sum - matfun::real_diagonal(&[1.9, 3.0])).norm() < 1e-14);
        let none = trivializing_operator(&d, 0.05, None).unwrap();
        assert!(none.blocks[0][0].norm() < 1e-15);
        assert!(matches!(trivializing_operator(&d, 3.0, None), Err(Error::GapHitsSpectrum { .. })));
    }

    #[test]
    fn trivializing_spectrum_shift() {
        let mut r = fixtures::rng(5);
        for _ in 0..20 {
            let values: Vec<f64> = (0..5).map(|_| r.gen_range(-2.0..2.0)).collect();
            let shape = AlgebraShape::scalars(&[5]).unwrap();
            let d = AElement::new(shape, 1, vec![vec![fixtures::hermitian_with_spectrum(&mut r, &values)]]).unwrap();
            let a = 0.7;
            if values.iter().any(|x| (x.abs() - a).abs() < 1e-6) {
                continue;
            }
            let t = trivializing_operator(&d, a, None).unwrap();
            let sum = &d.blocks[0][0] + &t.blocks[0][0];
            let got = matfun::eig_hermitian(&sum).unwrap().values;
            let mut expected: Vec<f64> = values.iter().map(|&x| if x.abs() <= a { x + 2.0 * a } else { x }).collect();
            expected.sort_by(f64::total_cmp);
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).abs() < 1e-10);
            }
            let min_dist = values.iter().map(|x| (x + a).abs()).fold(f64::INFINITY, f64::min);
            assert!(got.iter().all(|x| x.abs() >= a.min(min_dist) - 1e-10));
        }
    }

    #[test]
    fn uniform_gap_single_segment() {
        let p = diag_path(16, |t| vec![1.0 + t, -0.6]);
        let segs = find_segments(&p, SegmentMode::Greedy).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!((segs[0].start, segs[0].end), (0, 16));
    }

    #[test]
    fn randomized_segments_cover_path() {
        let p = diag_path(32, |t| vec![2.0 * t - 1.0, -1.0]);
        for seed in 0..10 {
            let segs = find_segments(&p, SegmentMode::Randomized { seed }).unwrap();
            assert_eq!(segs[0].start, 0);
            assert_eq!(segs.last().unwrap().end, 32);
            assert!(segs.windows(2).all(|w| w[0].end == w[1].start));
        }
    }

    #[test]
    fn curves_follow_crossing() {
        let p = diag_path(8, |t| vec![2.0 * t - 1.0, 0.5 - t]);
        let curves = eigen_curves(&p).unwrap();
        let first: Vec<f64> = curves.iter().filter(|c| c.curve_index == 0).map(|c| c.eigenvalue).collect();
        assert!((first[0] + 1.0).abs() < 1e-14);
        assert!((first[8] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn loop_block_sampling() {
        let shape = AlgebraShape::new(vec![BlockSpec::looped(1, 8)]).unwrap();
        let x = AElement::from_fn(&shape, 1, |_, th| matfun::scalar_identity(1, 1.0 + th.cos() * 0.5)).unwrap();
        let p = HermPath::constant(&x, 4).unwrap();
        let v = validate_path(&p, DEFAULT_GAP_MIN, None).unwrap();
        assert_eq!(v.verdict, Verdict::Valid);
        assert!((v.endpoint_gap - 0.5).abs() < 1e-12);
    }
}
