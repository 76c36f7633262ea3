//! Seeded random generators for matrices, paths and Lagrangians.
//!
//! Used by the property suites, the oracle and the CLI axiom suite. All
//! generators draw from a caller-supplied RNG so any failure reproduces from a
//! single seed.

use std::f64::consts::{PI, TAU};

use nalgebra::DVector;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{AElement, AlgebraShape, BlockKind};
use crate::matfun::{self, CMatrix, C64};
use crate::oppath::HermPath;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_normal(rng))
}

/// `scale * (G + G*) / 2` for a complex Gaussian `G`.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> CMatrix {
    let g = ginibre(rng, n, n);
    (&g + g.adjoint()).scale(0.5 * scale)
}

/// Haar-distributed unitary (QR of a Gaussian matrix with the phases of `R` removed).
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let qr = ginibre(rng, n, n).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for z in q.column_mut(j).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// `V diag(values) V*` with `V` Haar random.
pub fn hermitian_with_spectrum<R: Rng + ?Sized>(rng: &mut R, values: &[f64]) -> CMatrix {
    let v = random_unitary(rng, values.len());
    &v * matfun::real_diagonal(values) * v.adjoint()
}

/// Orthogonal projection of the given rank onto a random subspace.
pub fn random_projection<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize) -> CMatrix {
    let v = random_unitary(rng, n);
    let frame = v.columns(0, rank);
    frame * frame.adjoint()
}

/// Values with `min_abs <= |x| <= min_abs + spread` and random signs.
pub fn gapped_values<R: Rng + ?Sized>(rng: &mut R, n: usize, min_abs: f64, spread: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let x = min_abs + spread * rng.gen::<f64>();
            if rng.gen::<bool>() { x } else { -x }
        })
        .collect()
}

/// Unitary with prescribed eigenphases.
pub fn unitary_with_phases<R: Rng + ?Sized>(rng: &mut R, phases: &[f64]) -> CMatrix {
    let v = random_unitary(rng, phases.len());
    let d = CMatrix::from_diagonal(&DVector::from_iterator(
        phases.len(),
        phases.iter().map(|&p| C64::from_polar(1.0, p)),
    ));
    &v * d * v.adjoint()
}

/// `exp(i H)` for hermitian `H`.
pub fn exp_i(h: &CMatrix) -> CMatrix {
    matfun::functional_calculus_complex(h, |x| C64::from_polar(1.0, x)).expect("hermitian generator")
}

/// A smooth loop of unitaries `U0 exp(i (cos(th) X + sin(th) Y))` over `samples` theta values.
pub fn random_unitary_loop<R: Rng + ?Sized>(rng: &mut R, n: usize, samples: usize, amplitude: f64) -> Vec<CMatrix> {
    let u0 = random_unitary(rng, n);
    let x = random_hermitian(rng, n, amplitude);
    let y = random_hermitian(rng, n, amplitude);
    (0..samples)
        .map(|j| {
            let th = TAU * j as f64 / samples as f64;
            &u0 * exp_i(&(x.scale(th.cos()) + y.scale(th.sin())))
        })
        .collect()
}

/// Scalar winding factor `diag(e^{i w th}, 1, ..., 1)`.
pub fn winding_factor(n: usize, winding: i64, theta: f64) -> CMatrix {
    let mut m = CMatrix::identity(n, n);
    m[(0, 0)] = C64::from_polar(1.0, winding as f64 * theta);
    m
}

/// Random hermitian element, invertible with `|spectrum| >= min_abs` on every
/// channel. Loop blocks are smooth in theta with theta-independent spectrum.
pub fn gapped_element<R: Rng + ?Sized>(rng: &mut R, shape: &AlgebraShape, rank: usize, min_abs: f64) -> AElement {
    let blocks = shape
        .blocks
        .iter()
        .map(|b| {
            let m = b.dim * rank;
            let values = gapped_values(rng, m, min_abs, 1.5);
            match b.kind {
                BlockKind::Scalar => vec![hermitian_with_spectrum(rng, &values)],
                BlockKind::Loop { theta_samples } => {
                    let frames = random_unitary_loop(rng, m, theta_samples, 0.6);
                    let d = matfun::real_diagonal(&values);
                    frames.iter().map(|v| v * &d * v.adjoint()).collect()
                }
            }
        })
        .collect();
    AElement::new(shape.clone(), rank, blocks).expect("consistent sizes")
}

/// Random hermitian element without spectral constraints, smooth in theta.
pub fn smooth_hermitian_element<R: Rng + ?Sized>(rng: &mut R, shape: &AlgebraShape, rank: usize, scale: f64) -> AElement {
    let blocks = shape
        .blocks
        .iter()
        .map(|b| {
            let m = b.dim * rank;
            match b.kind {
                BlockKind::Scalar => vec![random_hermitian(rng, m, scale)],
                BlockKind::Loop { theta_samples } => {
                    let a = random_hermitian(rng, m, scale);
                    let c = random_hermitian(rng, m, scale * 0.5);
                    let s = random_hermitian(rng, m, scale * 0.5);
                    (0..theta_samples)
                        .map(|j| {
                            let th = TAU * j as f64 / theta_samples as f64;
                            &a + c.scale(th.cos()) + s.scale(th.sin())
                        })
                        .collect()
                }
            }
        })
        .collect();
    AElement::new(shape.clone(), rank, blocks).expect("consistent sizes")
}

/// Uniform grid with `intervals + 1` points on [0, 1].
pub fn uniform_grid(intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|k| k as f64 / intervals as f64).collect()
}

/// Random path `(1-t) E0 + t E1 + sin(pi t) K` with gapped invertible endpoints.
/// The grid is fine enough for the default validity verdict on desk-scale inputs.
pub fn random_path<R: Rng + ?Sized>(rng: &mut R, shape: &AlgebraShape, rank: usize, intervals: usize) -> HermPath {
    let e0 = gapped_element(rng, shape, rank, 0.4);
    let e1 = gapped_element(rng, shape, rank, 0.4);
    let k = smooth_hermitian_element(rng, shape, rank, 0.7);
    HermPath::from_fn(shape.clone(), rank, uniform_grid(intervals), |t| {
        let s = (PI * t).sin();
        e0.zip_map(&e1, |a, b| a.scale(1.0 - t) + b.scale(t))
            .zip_map(&k, |a, kk| a + kk.scale(s))
    })
    .expect("valid construction")
}

/// Random unitary element; loop blocks are smooth loops with winding `windings[b]`
/// (ignored on scalar blocks).
pub fn unitary_element<R: Rng + ?Sized>(rng: &mut R, shape: &AlgebraShape, rank: usize, windings: &[i64]) -> AElement {
    let blocks = shape
        .blocks
        .iter()
        .enumerate()
        .map(|(b, spec)| {
            let m = spec.dim * rank;
            match spec.kind {
                BlockKind::Scalar => vec![random_unitary(rng, m)],
                BlockKind::Loop { theta_samples } => {
                    let frames = random_unitary_loop(rng, m, theta_samples, 0.5);
                    let w = windings.get(b).copied().unwrap_or(0);
                    frames
                        .into_iter()
                        .enumerate()
                        .map(|(j, f)| f * winding_factor(m, w, spec.theta(j)))
                        .collect()
                }
            }
        })
        .collect();
    AElement::new(shape.clone(), rank, blocks).expect("consistent sizes")
}

/// Projection element whose block `b` has rank `ranks[b]`, rotated smoothly over theta.
pub fn projection_element<R: Rng + ?Sized>(rng: &mut R, shape: &AlgebraShape, rank: usize, ranks: &[usize]) -> AElement {
    let u = unitary_element(rng, shape, rank, &[]);
    let blocks = u
        .blocks
        .iter()
        .zip(&shape.blocks)
        .zip(ranks)
        .map(|((samples, spec), &r)| {
            let m = spec.dim * rank;
            let d = matfun::real_diagonal(&(0..m).map(|i| if i < r { 1.0 } else { 0.0 }).collect::<Vec<_>>());
            samples.iter().map(|v| v * &d * v.adjoint()).collect()
        })
        .collect();
    AElement::new(shape.clone(), rank, blocks).expect("consistent sizes")
}

/// Projection element with uniformly random ranks per block.
pub fn random_projection_element<R: Rng + ?Sized>(rng: &mut R, shape: &AlgebraShape, rank: usize) -> AElement {
    let ranks: Vec<usize> = shape.blocks.iter().map(|b| rng.gen_range(0..=b.dim * rank)).collect();
    projection_element(rng, shape, rank, &ranks)
}

/// Random shape with `blocks` blocks of dimension at most `max_dim`; loop blocks
/// appear only if `allow_loops`.
pub fn random_shape<R: Rng + ?Sized>(rng: &mut R, blocks: usize, max_dim: usize, allow_loops: bool) -> AlgebraShape {
    let specs = (0..blocks)
        .map(|_| {
            let dim = rng.gen_range(1..=max_dim);
            if allow_loops && rng.gen::<bool>() {
                crate::algebra::BlockSpec::looped(dim, 16)
            } else {
                crate::algebra::BlockSpec::scalar(dim)
            }
        })
        .collect();
    AlgebraShape::new(specs).expect("nonempty")
}
