//! Random instance generators shared by the integration suites.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use spflow::fixtures::{self, exp_i, random_hermitian, random_unitary, random_unitary_loop, winding_factor};
use spflow::maslov::{self, LagrangianPath, LagrangianTriplePath};
use spflow::matfun::{self, CMatrix};
use spflow::oddflow::{self, GradedHermPath, KernelLagrangians};
use spflow::{AElement, AlgebraShape, BlockKind, BlockSpec, HermPath};

pub fn rng(seed: u64) -> ChaCha8Rng {
    fixtures::rng(seed)
}

/// 1-3 blocks of dimension at most 3, loops optional.
pub fn shape(r: &mut ChaCha8Rng, allow_loops: bool) -> AlgebraShape {
    let blocks = r.gen_range(1..=3);
    fixtures::random_shape(r, blocks, 3, allow_loops)
}

pub fn rank(r: &mut ChaCha8Rng) -> usize {
    r.gen_range(1..=2)
}

/// Random path that passes validation, retrying with fresh draws.
pub fn valid_path(r: &mut ChaCha8Rng, shape: &AlgebraShape, rank: usize, intervals: usize) -> HermPath {
    loop {
        let p = fixtures::random_path(r, shape, rank, intervals);
        let v = spflow::oppath::validate_path(&p, 1e-6, None).expect("well formed");
        if v.verdict == spflow::oppath::Verdict::Valid {
            return p;
        }
    }
}

/// Path from `start` to a fresh gapped endpoint with a smooth bump.
pub fn path_from(r: &mut ChaCha8Rng, start: &AElement, intervals: usize) -> HermPath {
    let e1 = fixtures::gapped_element(r, &start.shape, start.rank, 0.4);
    let k = fixtures::smooth_hermitian_element(r, &start.shape, start.rank, 0.7);
    HermPath::from_fn(start.shape.clone(), start.rank, fixtures::uniform_grid(intervals), |t| {
        let s = (std::f64::consts::PI * t).sin();
        start.zip_map(&e1, |a, b| a.scale(1.0 - t) + b.scale(t)).zip_map(&k, |a, kk| a + kk.scale(s))
    })
    .unwrap()
}

/// Frames `V(theta)` per block: identity on scalar blocks, a smooth loop otherwise.
fn frames(r: &mut ChaCha8Rng, shape: &AlgebraShape, rank: usize) -> Vec<Vec<CMatrix>> {
    shape
        .blocks
        .iter()
        .map(|b| {
            let m = b.dim * rank;
            match b.kind {
                BlockKind::Scalar => vec![CMatrix::identity(m, m)],
                BlockKind::Loop { theta_samples } => random_unitary_loop(r, m, theta_samples, 0.5),
            }
        })
        .collect()
}

/// Unitary path `V(theta) A exp(i t H) V(theta)*` per block.
fn unitary_path(
    shape: &AlgebraShape,
    rank: usize,
    v: &[Vec<CMatrix>],
    a: &[CMatrix],
    h: &[CMatrix],
    grid: &[f64],
) -> Vec<AElement> {
    grid.iter()
        .map(|&t| {
            AElement::from_fn(shape, rank, |b, th| {
                let spec = &shape.blocks[b];
                let j = ((th / std::f64::consts::TAU) * spec.channels() as f64).round() as usize % spec.channels();
                let f = &v[b][j];
                f * &a[b] * exp_i(&h[b].scale(t)) * f.adjoint()
            })
            .unwrap()
        })
        .collect()
}

fn generators(r: &mut ChaCha8Rng, shape: &AlgebraShape, rank: usize, scale: f64) -> (Vec<CMatrix>, Vec<CMatrix>) {
    shape
        .blocks
        .iter()
        .map(|b| {
            let m = b.dim * rank;
            (random_unitary(r, m), random_hermitian(r, m, scale))
        })
        .unzip()
}

/// Lagrangian pair path with transverse endpoints (margin >= 1e-2).
pub fn lagrangian_path(r: &mut ChaCha8Rng, shape: &AlgebraShape, rank: usize, intervals: usize) -> LagrangianPath {
    let grid = fixtures::uniform_grid(intervals);
    loop {
        let v = frames(r, shape, rank);
        let (a0, h0) = generators(r, shape, rank, 1.5);
        let (a1, h1) = generators(r, shape, rank, 1.5);
        let u0 = unitary_path(shape, rank, &v, &a0, &h0, &grid);
        let u1 = unitary_path(shape, rank, &v, &a1, &h1, &grid);
        let last = grid.len() - 1;
        let ok = maslov::transversality_margin(&u0[0], &u1[0]).unwrap() >= 1e-2
            && maslov::transversality_margin(&u0[last], &u1[last]).unwrap() >= 1e-2;
        if ok {
            return LagrangianPath::new(grid, u0, u1).unwrap();
        }
    }
}

/// Replaces `u1(t)` by `u1(t) exp(i sin(pi t) G)`: a homotopy fixing both endpoints.
pub fn deform(r: &mut ChaCha8Rng, lp: &LagrangianPath) -> LagrangianPath {
    let g: Vec<CMatrix> = lp.shape.blocks.iter().map(|b| random_hermitian(r, b.dim * lp.rank, 1.0)).collect();
    let u1 = lp
        .t_grid
        .iter()
        .zip(&lp.u1)
        .map(|(&t, u)| {
            let s = (std::f64::consts::PI * t).sin();
            let mut out = u.clone();
            for (b, samples) in out.blocks.iter_mut().enumerate() {
                for m in samples.iter_mut() {
                    *m = &*m * exp_i(&g[b].scale(s));
                }
            }
            out
        })
        .collect();
    LagrangianPath::new(lp.t_grid.clone(), lp.u0.clone(), u1).unwrap()
}

/// Three unitary paths with pairwise transverse endpoints.
pub fn triple_path(r: &mut ChaCha8Rng, shape: &AlgebraShape, rank: usize, intervals: usize) -> LagrangianTriplePath {
    let grid = fixtures::uniform_grid(intervals);
    loop {
        let v = frames(r, shape, rank);
        let u: Vec<Vec<AElement>> = (0..3)
            .map(|_| {
                let (a, h) = generators(r, shape, rank, 1.5);
                unitary_path(shape, rank, &v, &a, &h, &grid)
            })
            .collect();
        let last = grid.len() - 1;
        let ok = [0, last].iter().all(|&k| {
            (0..3).all(|i| maslov::transversality_margin(&u[i][k], &u[(i + 1) % 3][k]).unwrap() >= 1e-2)
        });
        if ok {
            let [a, b, c]: [Vec<AElement>; 3] = u.try_into().unwrap();
            return LagrangianTriplePath { t_grid: grid, u: [a, b, c] };
        }
    }
}

/// Three pairwise transverse unitaries `V(theta) A_i V(theta)*`.
pub fn transverse_triple(r: &mut ChaCha8Rng, shape: &AlgebraShape, rank: usize) -> [AElement; 3] {
    loop {
        let v = frames(r, shape, rank);
        let u: Vec<AElement> = (0..3)
            .map(|_| {
                let (a, h) = generators(r, shape, rank, 0.0);
                unitary_path(shape, rank, &v, &a, &h, &[0.0]).remove(0)
            })
            .collect();
        if (0..3).all(|i| maslov::transversality_margin(&u[i], &u[(i + 1) % 3]).unwrap() >= 1e-2) {
            return u.try_into().unwrap();
        }
    }
}

pub fn loop_shape(dims: &[usize], theta: usize) -> AlgebraShape {
    AlgebraShape::new(dims.iter().map(|&d| BlockSpec::looped(d, theta)).collect()).unwrap()
}

/// Unitary loop with the given determinant winding, one per block.
pub fn unitary_loops(r: &mut ChaCha8Rng, shape: &AlgebraShape, windings: &[i64]) -> Vec<Vec<CMatrix>> {
    shape
        .blocks
        .iter()
        .zip(windings)
        .map(|(b, &w)| {
            random_unitary_loop(r, b.dim, b.channels(), 0.5)
                .into_iter()
                .enumerate()
                .map(|(j, f)| f * winding_factor(b.dim, w, b.theta(j)))
                .collect()
        })
        .collect()
}

/// Graded path with lower-left block `(1 - t) W_0 + t W_1`, `W_i` unitary loops
/// with windings `w0`, `w1`.
pub fn graded_path(r: &mut ChaCha8Rng, shape: &AlgebraShape, w0: &[i64], w1: &[i64]) -> GradedHermPath {
    let a = unitary_loops(r, shape, w0);
    let b = unitary_loops(r, shape, w1);
    GradedHermPath::from_w(shape.clone(), 2, fixtures::uniform_grid(4), |t, blk, th| {
        let spec = &shape.blocks[blk];
        let j = ((th / std::f64::consts::TAU) * spec.channels() as f64).round() as usize % spec.channels();
        a[blk][j].scale(1.0 - t) + b[blk][j].scale(t)
    })
    .unwrap()
}

/// Hermitian almost-involution `V(theta) diag(+-(1 + eps)) V(theta)*`.
pub fn almost_involution(r: &mut ChaCha8Rng, shape: &AlgebraShape) -> AElement {
    let blocks = shape
        .blocks
        .iter()
        .map(|b| {
            let values: Vec<f64> = (0..b.dim)
                .map(|_| {
                    let s = if r.gen::<bool>() { 1.0 } else { -1.0 };
                    s * (1.0 + r.gen_range(-0.02..0.02))
                })
                .collect();
            let d = matfun::real_diagonal(&values);
            random_unitary_loop(r, b.dim, b.channels(), 0.6).iter().map(|v| v * &d * v.adjoint()).collect()
        })
        .collect();
    AElement::new(shape.clone(), 1, blocks).unwrap()
}

/// A single-loop-block odd `D_N = [[0, W*], [W, 0]]` with `W = A diag(s, 0_m) B*`,
/// its graded kernel frames and two kernel Lagrangians with given windings.
pub fn kernel_instance(r: &mut ChaCha8Rng, k: usize, m: usize, theta: usize, w0: i64, w1: i64) -> (AElement, KernelLagrangians) {
    let shape = loop_shape(&[k], theta);
    let a = random_unitary_loop(r, k, theta, 0.4);
    let b = random_unitary_loop(r, k, theta, 0.4);
    let s: Vec<f64> = (0..k).map(|i| if i < k - m { r.gen_range(0.5..2.0) } else { 0.0 }).collect();
    let sd = matfun::real_diagonal(&s);
    let d = AElement::from_fn(&shape, 2, |_, th| {
        let j = ((th / std::f64::consts::TAU) * theta as f64).round() as usize % theta;
        oddflow::odd_from_w(&(&a[j] * &sd * b[j].adjoint()))
    })
    .unwrap();
    let pad = |v: &CMatrix, upper: bool| {
        let mut f = CMatrix::zeros(2 * k, m);
        let row = if upper { 0 } else { k };
        f.view_mut((row, 0), (k, m)).copy_from(&v.columns(k - m, m));
        f
    };
    let small = loop_shape(&[m], theta);
    let u0 = unitary_loops(r, &small, &[w0]).remove(0);
    let u1 = unitary_loops(r, &small, &[w1]).remove(0);
    let ker = KernelLagrangians {
        k_plus: b.iter().map(|v| pad(v, true)).collect(),
        k_minus: a.iter().map(|v| pad(v, false)).collect(),
        u0,
        u1,
    };
    (d, ker)
}
