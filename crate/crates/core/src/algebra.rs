//! Coefficient algebras `A = (+)_b A_b`, with each `A_b` either a matrix
//! algebra `M_k` or a sampled loop algebra `C(S^1) (x) M_k`, together with
//! their K-groups and the homomorphisms used for functoriality checks.
//!
//! `K_0(M_k) = K_0(C(S^1) (x) M_k) = Z` (rank), `K_1(M_k) = 0` and
//! `K_1(C(S^1) (x) M_k) = Z` (determinant winding).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matfun::{self, CMatrix};

pub const MIN_THETA_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BlockKind {
    Scalar,
    Loop { theta_samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    #[serde(flatten)]
    pub kind: BlockKind,
    pub dim: usize,
}

impl BlockSpec {
    pub fn scalar(dim: usize) -> Self {
        BlockSpec { kind: BlockKind::Scalar, dim }
    }

    pub fn looped(dim: usize, theta_samples: usize) -> Self {
        BlockSpec { kind: BlockKind::Loop { theta_samples }, dim }
    }

    pub fn is_loop(&self) -> bool {
        matches!(self.kind, BlockKind::Loop { .. })
    }

    /// Number of sampled channels: 1 for scalar blocks, the theta count for loops.
    pub fn channels(&self) -> usize {
        match self.kind {
            BlockKind::Scalar => 1,
            BlockKind::Loop { theta_samples } => theta_samples,
        }
    }

    /// Angle of theta sample `j` (0 for scalar blocks).
    pub fn theta(&self, j: usize) -> f64 {
        TAU * j as f64 / self.channels() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlgebraShape {
    pub blocks: Vec<BlockSpec>,
}

impl AlgebraShape {
    pub fn new(blocks: Vec<BlockSpec>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidShape("at least one block is required".into()));
        }
        for (i, b) in blocks.iter().enumerate() {
            if b.dim == 0 {
                return Err(Error::InvalidShape(format!("block {i} has dimension 0")));
            }
            if let BlockKind::Loop { theta_samples } = b.kind {
                if theta_samples < MIN_THETA_SAMPLES {
                    return Err(Error::InvalidShape(format!(
                        "loop block {i} has {theta_samples} theta samples, need at least {MIN_THETA_SAMPLES}"
                    )));
                }
            }
        }
        Ok(AlgebraShape { blocks })
    }

    /// Shape with scalar blocks of the given dimensions.
    pub fn scalars(dims: &[usize]) -> Result<Self> {
        Self::new(dims.iter().map(|&d| BlockSpec::scalar(d)).collect())
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn has_loops(&self) -> bool {
        self.blocks.iter().any(BlockSpec::is_loop)
    }

    fn check_same(&self, other: &AlgebraShape) -> Result<()> {
        if self != other {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.blocks, other.blocks)));
        }
        Ok(())
    }
}

/// An element of `M_n(A)`: per block a `(dim * n)`-square matrix, sampled over
/// theta for loop blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct AElement {
    pub shape: AlgebraShape,
    pub rank: usize,
    pub blocks: Vec<Vec<CMatrix>>,
}

impl AElement {
    pub fn new(shape: AlgebraShape, rank: usize, blocks: Vec<Vec<CMatrix>>) -> Result<Self> {
        if rank == 0 {
            return Err(Error::InvalidShape("module rank must be positive".into()));
        }
        if blocks.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} block entries for {} blocks",
                blocks.len(),
                shape.len()
            )));
        }
        for (b, (spec, samples)) in shape.blocks.iter().zip(&blocks).enumerate() {
            if samples.len() != spec.channels() {
                return Err(Error::ShapeMismatch(format!(
                    "block {b}: {} samples, expected {}",
                    samples.len(),
                    spec.channels()
                )));
            }
            let m = spec.dim * rank;
            for s in samples {
                if s.nrows() != m || s.ncols() != m {
                    return Err(Error::DimensionMismatch(format!(
                        "block {b}: expected {m}x{m}, got {}x{}",
                        s.nrows(),
                        s.ncols()
                    )));
                }
                matfun::check_finite(s)?;
            }
        }
        Ok(AElement { shape, rank, blocks })
    }

    /// Builds an element from `f(block, theta)`.
    pub fn from_fn(shape: &AlgebraShape, rank: usize, f: impl Fn(usize, f64) -> CMatrix) -> Result<Self> {
        let blocks = shape
            .blocks
            .iter()
            .enumerate()
            .map(|(b, spec)| (0..spec.channels()).map(|j| f(b, spec.theta(j))).collect())
            .collect();
        Self::new(shape.clone(), rank, blocks)
    }

    /// Scalar multiple of the identity on every channel.
    pub fn scalar(shape: &AlgebraShape, rank: usize, x: f64) -> Self {
        Self::from_fn(shape, rank, |b, _| matfun::scalar_identity(shape.blocks[b].dim * rank, x))
            .expect("identity has consistent sizes")
    }

    pub fn block_size(&self, block: usize) -> usize {
        self.shape.blocks[block].dim * self.rank
    }

    /// `(block, theta index, matrix)` for every sampled channel.
    pub fn channels(&self) -> impl Iterator<Item = (usize, usize, &CMatrix)> {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, s)| s.iter().enumerate().map(move |(j, m)| (b, j, m)))
    }

    pub fn map(&self, f: impl Fn(&CMatrix) -> CMatrix) -> AElement {
        self.try_map(|m| Ok(f(m))).expect("infallible map")
    }

    pub fn try_map(&self, f: impl Fn(&CMatrix) -> Result<CMatrix>) -> Result<AElement> {
        let blocks = self
            .blocks
            .iter()
            .map(|s| s.iter().map(&f).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(AElement { shape: self.shape.clone(), rank: self.rank, blocks })
    }

    pub fn zip_map(&self, other: &AElement, f: impl Fn(&CMatrix, &CMatrix) -> CMatrix) -> AElement {
        assert_eq!(self.shape, other.shape, "zip_map over different shapes");
        assert_eq!(self.rank, other.rank, "zip_map over different ranks");
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(x, y)).collect())
            .collect();
        AElement { shape: self.shape.clone(), rank: self.rank, blocks }
    }

    pub fn check_compatible(&self, other: &AElement) -> Result<()> {
        self.shape.check_same(&other.shape)?;
        if self.rank != other.rank {
            return Err(Error::ShapeMismatch(format!("rank {} vs {}", self.rank, other.rank)));
        }
        Ok(())
    }

    pub fn check_hermitian(&self) -> Result<()> {
        self.channels().try_for_each(|(_, _, m)| matfun::check_hermitian(m))
    }

    pub fn check_unitary(&self) -> Result<()> {
        self.channels().try_for_each(|(_, _, m)| matfun::check_unitary(m))
    }

    /// Largest Frobenius distance between channels of two compatible elements.
    pub fn distance(&self, other: &AElement) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
            .fold(0.0, f64::max)
    }

    /// Largest Frobenius norm over channels.
    pub fn norm(&self) -> f64 {
        self.channels().map(|(_, _, m)| m.norm()).fold(0.0, f64::max)
    }

    /// Largest step between consecutive theta samples (wrapping) over loop blocks.
    pub fn loop_step(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (spec, samples) in self.shape.blocks.iter().zip(&self.blocks) {
            if spec.is_loop() {
                let n = samples.len();
                for j in 0..n {
                    worst = worst.max((&samples[(j + 1) % n] - &samples[j]).norm());
                }
            }
        }
        worst
    }

    /// Blockwise direct sum in `M_{n+m}(A)`.
    pub fn direct_sum(&self, other: &AElement) -> Result<AElement> {
        self.shape.check_same(&other.shape)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| matfun::block_diag(x, y)).collect())
            .collect();
        Ok(AElement { shape: self.shape.clone(), rank: self.rank + other.rank, blocks })
    }

    /// Conjugation `U X U*` channelwise.
    pub fn conjugate(&self, u: &AElement) -> AElement {
        self.zip_map(u, |x, v| v * x * v.adjoint())
    }
}

/// An element of `K_0(A)`: one integer per block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KZeroClass {
    #[serde(skip)]
    pub shape: AlgebraShape,
    pub components: Vec<i64>,
}

impl KZeroClass {
    pub fn new(shape: &AlgebraShape, components: Vec<i64>) -> Result<Self> {
        if components.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} components for {} blocks",
                components.len(),
                shape.len()
            )));
        }
        Ok(KZeroClass { shape: shape.clone(), components })
    }

    pub fn zero(shape: &AlgebraShape) -> Self {
        KZeroClass { shape: shape.clone(), components: vec![0; shape.len()] }
    }

    pub fn checked_add(&self, other: &KZeroClass) -> Result<Self> {
        self.shape.check_same(&other.shape)?;
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect();
        Ok(KZeroClass { shape: self.shape.clone(), components })
    }

    pub fn neg(&self) -> Self {
        KZeroClass { shape: self.shape.clone(), components: self.components.iter().map(|a| -a).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&c| c == 0)
    }
}

/// An element of `K_1(A)`: one winding number per loop block, zero on scalar blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KOneClass {
    #[serde(skip)]
    pub shape: AlgebraShape,
    pub components: Vec<i64>,
}

impl KOneClass {
    pub fn new(shape: &AlgebraShape, components: Vec<i64>) -> Result<Self> {
        if components.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} components for {} blocks",
                components.len(),
                shape.len()
            )));
        }
        for (block, (spec, &value)) in shape.blocks.iter().zip(&components).enumerate() {
            if !spec.is_loop() && value != 0 {
                return Err(Error::NonzeroScalarK1 { block, value });
            }
        }
        Ok(KOneClass { shape: shape.clone(), components })
    }

    pub fn zero(shape: &AlgebraShape) -> Self {
        KOneClass { shape: shape.clone(), components: vec![0; shape.len()] }
    }

    pub fn checked_add(&self, other: &KOneClass) -> Result<Self> {
        self.shape.check_same(&other.shape)?;
        let components = self.components.iter().zip(&other.components).map(|(a, b)| a + b).collect();
        Ok(KOneClass { shape: self.shape.clone(), components })
    }

    pub fn neg(&self) -> Self {
        KOneClass { shape: self.shape.clone(), components: self.components.iter().map(|a| -a).collect() }
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|&c| c == 0)
    }
}

/// Unital homomorphisms between shapes, applied samplewise.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Homomorphism {
    /// Evaluate a loop block at theta sample `theta_index`; the block becomes scalar.
    Evaluate { block: usize, theta_index: usize },
    /// Rotate a loop block by `shift` theta samples.
    Rotate { block: usize, shift: usize },
    /// Target block `i` is source block `perm[i]`.
    Permute(Vec<usize>),
    /// `a -> (a, a_block)`: append a copy of one block.
    DiagonalInclusion { block: usize },
}

impl Homomorphism {
    fn loop_block(shape: &AlgebraShape, block: usize) -> Result<usize> {
        match shape.blocks.get(block).map(|b| b.kind) {
            Some(BlockKind::Loop { theta_samples }) => Ok(theta_samples),
            Some(BlockKind::Scalar) => {
                Err(Error::UnsupportedHomomorphism(format!("block {block} is not a loop block")))
            }
            None => Err(Error::UnsupportedHomomorphism(format!("block {block} does not exist"))),
        }
    }

    pub fn target_shape(&self, shape: &AlgebraShape) -> Result<AlgebraShape> {
        match self {
            Homomorphism::Evaluate { block, theta_index } => {
                let n = Self::loop_block(shape, *block)?;
                if *theta_index >= n {
                    return Err(Error::UnsupportedHomomorphism(format!(
                        "theta index {theta_index} out of range for {n} samples"
                    )));
                }
                let mut blocks = shape.blocks.clone();
                blocks[*block] = BlockSpec::scalar(blocks[*block].dim);
                AlgebraShape::new(blocks)
            }
            Homomorphism::Rotate { block, .. } => {
                Self::loop_block(shape, *block)?;
                Ok(shape.clone())
            }
            Homomorphism::Permute(perm) => {
                let mut seen = vec![false; shape.len()];
                if perm.len() != shape.len() {
                    return Err(Error::UnsupportedHomomorphism("permutation length differs from block count".into()));
                }
                for &p in perm {
                    if p >= shape.len() || seen[p] {
                        return Err(Error::UnsupportedHomomorphism(format!("{perm:?} is not a permutation")));
                    }
                    seen[p] = true;
                }
                AlgebraShape::new(perm.iter().map(|&p| shape.blocks[p]).collect())
            }
            Homomorphism::DiagonalInclusion { block } => {
                let spec = *shape
                    .blocks
                    .get(*block)
                    .ok_or_else(|| Error::UnsupportedHomomorphism(format!("block {block} does not exist")))?;
                let mut blocks = shape.blocks.clone();
                blocks.push(spec);
                AlgebraShape::new(blocks)
            }
        }
    }

    /// Applies the homomorphism channelwise.
    pub fn apply(&self, x: &AElement) -> Result<AElement> {
        let shape = self.target_shape(&x.shape)?;
        let mut blocks = x.blocks.clone();
        match self {
            Homomorphism::Evaluate { block, theta_index } => {
                blocks[*block] = vec![x.blocks[*block][*theta_index].clone()];
            }
            Homomorphism::Rotate { block, shift } => {
                let n = blocks[*block].len();
                blocks[*block] = (0..n).map(|j| x.blocks[*block][(j + shift) % n].clone()).collect();
            }
            Homomorphism::Permute(perm) => {
                blocks = perm.iter().map(|&p| x.blocks[p].clone()).collect();
            }
            Homomorphism::DiagonalInclusion { block } => {
                blocks.push(x.blocks[*block].clone());
            }
        }
        AElement::new(shape, x.rank, blocks)
    }

    pub fn push_k0(&self, c: &KZeroClass) -> Result<KZeroClass> {
        let shape = self.target_shape(&c.shape)?;
        let components = self.push_components(&c.components);
        KZeroClass::new(&shape, components)
    }

    pub fn push_k1(&self, c: &KOneClass) -> Result<KOneClass> {
        let shape = self.target_shape(&c.shape)?;
        let mut components = self.push_components(&c.components);
        if let Homomorphism::Evaluate { block, .. } = self {
            components[*block] = 0;
        }
        KOneClass::new(&shape, components)
    }

    fn push_components(&self, c: &[i64]) -> Vec<i64> {
        match self {
            Homomorphism::Evaluate { .. } | Homomorphism::Rotate { .. } => c.to_vec(),
            Homomorphism::Permute(perm) => perm.iter().map(|&p| c[p]).collect(),
            Homomorphism::DiagonalInclusion { block } => {
                let mut out = c.to_vec();
                out.push(c[*block]);
                out
            }
        }
    }
}

/// Pushforward along a composition `homs[last] o ... o homs[0]`.
pub fn push_k0_chain(c: &KZeroClass, homs: &[Homomorphism]) -> Result<KZeroClass> {
    homs.iter().try_fold(c.clone(), |acc, h| h.push_k0(&acc))
}

pub fn push_k1_chain(c: &KOneClass, homs: &[Homomorphism]) -> Result<KOneClass> {
    homs.iter().try_fold(c.clone(), |acc, h| h.push_k1(&acc))
}

pub fn apply_chain(x: &AElement, homs: &[Homomorphism]) -> Result<AElement> {
    homs.iter().try_fold(x.clone(), |acc, h| h.apply(&acc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_scalars() -> AlgebraShape {
        AlgebraShape::scalars(&[1, 2]).unwrap()
    }

    fn mixed() -> AlgebraShape {
        AlgebraShape::new(vec![BlockSpec::scalar(1), BlockSpec::looped(2, 8)]).unwrap()
    }

    #[test]
    fn k0_addition() {
        let s = two_scalars();
        let x = KZeroClass::new(&s, vec![1, 2]).unwrap();
        let y = KZeroClass::new(&s, vec![0, -2]).unwrap();
        assert_eq!(x.checked_add(&y).unwrap().components, vec![1, 0]);
        assert_eq!(x.checked_add(&KZeroClass::zero(&s)).unwrap(), x);
        assert!(x.checked_add(&x.neg()).unwrap().is_zero());
        let other = AlgebraShape::scalars(&[1]).unwrap();
        assert!(matches!(x.checked_add(&KZeroClass::zero(&other)), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn k1_rejects_scalar_component() {
        let s = mixed();
        assert!(matches!(KOneClass::new(&s, vec![1, 0]), Err(Error::NonzeroScalarK1 { block: 0, value: 1 })));
        assert!(KOneClass::new(&s, vec![0, 3]).is_ok());
    }

    #[test]
    fn shape_validation() {
        assert!(AlgebraShape::new(vec![]).is_err());
        assert!(AlgebraShape::new(vec![BlockSpec::looped(1, 4)]).is_err());
        assert!(AlgebraShape::new(vec![BlockSpec::scalar(0)]).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let s = mixed();
        let c0 = KZeroClass::new(&s, vec![3, 5]).unwrap();
        let c1 = KOneClass::new(&s, vec![0, 4]).unwrap();
        let rot = Homomorphism::Rotate { block: 1, shift: 3 };
        assert_eq!(rot.push_k0(&c0).unwrap(), c0);
        assert_eq!(rot.push_k1(&c1).unwrap(), c1);
        let ev = Homomorphism::Evaluate { block: 1, theta_index: 2 };
        assert!(ev.push_k1(&c1).unwrap().is_zero());
        assert_eq!(ev.push_k0(&c0).unwrap().components, vec![3, 5]);
        let swap = Homomorphism::Permute(vec![1, 0]);
        assert_eq!(swap.push_k0(&c0).unwrap().components, vec![5, 3]);
        assert!(Homomorphism::Evaluate { block: 0, theta_index: 0 }.push_k0(&c0).is_err());
        assert!(Homomorphism::Permute(vec![0, 0]).push_k0(&c0).is_err());
    }

    #[test]
    fn pushforward_is_functorial() {
        let s = mixed();
        let c = KOneClass::new(&s, vec![0, -2]).unwrap();
        let chain = vec![
            Homomorphism::DiagonalInclusion { block: 1 },
            Homomorphism::Permute(vec![2, 0, 1]),
            Homomorphism::Rotate { block: 0, shift: 1 },
            Homomorphism::Evaluate { block: 2, theta_index: 5 },
        ];
        let composed = push_k1_chain(&c, &chain).unwrap();
        assert_eq!(composed.components, vec![-2, 0, 0]);
        let stepwise = push_k1_chain(&push_k1_chain(&c, &chain[..2]).unwrap(), &chain[2..]).unwrap();
        assert_eq!(composed, stepwise);
    }

    #[test]
    fn element_homomorphisms() {
        let s = mixed();
        let x = AElement::from_fn(&s, 1, |b, th| matfun::scalar_identity(s.blocks[b].dim, th + b as f64)).unwrap();
        let ev = Homomorphism::Evaluate { block: 1, theta_index: 2 }.apply(&x).unwrap();
        assert_eq!(ev.blocks[1].len(), 1);
        assert_eq!(ev.blocks[1][0], x.blocks[1][2]);
        let rot = Homomorphism::Rotate { block: 1, shift: 7 }.apply(&x).unwrap();
        assert_eq!(rot.blocks[1][0], x.blocks[1][7]);
        assert_eq!(rot.blocks[1][1], x.blocks[1][0]);
        let inc = Homomorphism::DiagonalInclusion { block: 0 }.apply(&x).unwrap();
        assert_eq!(inc.blocks.len(), 3);
    }

    #[test]
    fn element_size_checks() {
        let s = two_scalars();
        let bad = AElement::new(s.clone(), 1, vec![vec![CMatrix::zeros(1, 1)], vec![CMatrix::zeros(1, 1)]]);
        assert!(matches!(bad, Err(Error::DimensionMismatch(_))));
        let ok = AElement::scalar(&s, 2, 1.0);
        assert_eq!(ok.block_size(1), 4);
    }
}
