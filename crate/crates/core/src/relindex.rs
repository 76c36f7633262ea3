//! Relative index `ind(P, Q) in K_0(A)` of a pair of projections, by two
//! independent constructions: the Fredholm index of `QP: Ran P -> Ran Q`, and
//! minus the spectral flow of the straight line from `2P - 1` to `2Q - 1`.

use rand::Rng;
use serde::Serialize;

use crate::algebra::{AElement, AlgebraShape, Homomorphism, KZeroClass};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::matfun::{self, CMatrix};
use crate::oppath::HermPath;
use crate::specflow::{self, FlowConfig};

/// Eigenvalues closer than this to 0 or 1 are snapped; anything else refuses.
pub const SNAP_TOL: f64 = 0.1;

/// Grid used by the crossing construction.
pub const CROSSING_INTERVALS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    pub p: AElement,
    pub q: AElement,
    /// Ranks `[block]` of `P` and `Q` (constant over theta).
    pub ranks_p: Vec<usize>,
    pub ranks_q: Vec<usize>,
}

/// Rank of a projection channel, snapping eigenvalues to {0, 1}.
pub fn projection_rank(m: &CMatrix) -> Result<usize> {
    let eig = matfun::eig_hermitian(m)?;
    let mut rank = 0;
    for &x in &eig.values {
        if (x - 1.0).abs() <= SNAP_TOL {
            rank += 1;
        } else if x.abs() > SNAP_TOL {
            return Err(Error::NotProjection { eigenvalue: x });
        }
    }
    Ok(rank)
}

/// Per-block ranks of a projection element; loop-block ranks must not vary with theta.
pub fn element_ranks(x: &AElement) -> Result<Vec<usize>> {
    x.blocks
        .iter()
        .enumerate()
        .map(|(block, samples)| {
            let ranks = samples.iter().map(projection_rank).collect::<Result<Vec<_>>>()?;
            if ranks.iter().any(|&r| r != ranks[0]) {
                return Err(Error::NonConstantRank { block, ranks });
            }
            Ok(ranks[0])
        })
        .collect()
}

impl ProjectionPair {
    pub fn new(p: AElement, q: AElement) -> Result<Self> {
        p.check_compatible(&q)?;
        p.check_hermitian()?;
        q.check_hermitian()?;
        let ranks_p = element_ranks(&p)?;
        let ranks_q = element_ranks(&q)?;
        Ok(ProjectionPair { p, q, ranks_p, ranks_q })
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.p.shape
    }

    pub fn swap(&self) -> ProjectionPair {
        ProjectionPair {
            p: self.q.clone(),
            q: self.p.clone(),
            ranks_p: self.ranks_q.clone(),
            ranks_q: self.ranks_p.clone(),
        }
    }
}

fn range_frame(m: &CMatrix) -> Result<CMatrix> {
    Ok(matfun::eig_hermitian(m)?.frame_where(|x| x > 0.5))
}

/// Index of `V_Q* V_P: Ran P -> Ran Q` from kernel and cokernel dimensions.
fn fredholm_index(p: &CMatrix, q: &CMatrix) -> Result<i64> {
    let vp = range_frame(p)?;
    let vq = range_frame(q)?;
    let (rp, rq) = (vp.ncols(), vq.ncols());
    if rp == 0 || rq == 0 {
        return Ok(rp as i64 - rq as i64);
    }
    let map = vq.adjoint() * vp;
    let sv = map.svd(false, false).singular_values;
    let nonzero = sv.iter().filter(|&&s| s > 1e-8).count();
    let kernel = rp - nonzero;
    let cokernel = rq - nonzero;
    Ok(kernel as i64 - cokernel as i64)
}

/// `ind(P, Q)` as the Fredholm index of `QP: Ran P -> Ran Q`, per block.
pub fn rel_index_fredholm(pp: &ProjectionPair) -> Result<KZeroClass> {
    let mut components = Vec::with_capacity(pp.shape().len());
    for (block, (ps, qs)) in pp.p.blocks.iter().zip(&pp.q.blocks).enumerate() {
        let values = ps
            .iter()
            .zip(qs)
            .map(|(p, q)| fredholm_index(p, q))
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|&v| v != values[0]) {
            return Err(Error::ThetaInconsistent { block, values });
        }
        components.push(values[0]);
    }
    KZeroClass::new(pp.shape(), components)
}

/// `(1 - t)(2P - 1) + t(2Q - 1)` on a uniform grid.
pub fn straight_line(pp: &ProjectionPair, intervals: usize) -> Result<HermPath> {
    let inv = |x: &AElement| x.map(|m| m.scale(2.0) - CMatrix::identity(m.nrows(), m.ncols()));
    HermPath::straight(&inv(&pp.p), &inv(&pp.q), intervals)
}

/// `ind(P, Q)` as minus the crossing-count spectral flow of the straight line
/// from `2P - 1` to `2Q - 1`.
pub fn rel_index_crossing(pp: &ProjectionPair) -> Result<KZeroClass> {
    let path = straight_line(pp, CROSSING_INTERVALS)?;
    let flow = specflow::spectral_flow_crossings(&path, &FlowConfig::default())?;
    Ok(flow.value.neg())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub name: String,
    pub passed: usize,
    /// Seeds of failing trials.
    pub failures: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub trials: usize,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.failures.is_empty())
    }
}

type Check = (&'static str, Result<bool>);

fn trial(shape: &AlgebraShape, rank: usize, seed: u64) -> Vec<Check> {
    let mut rng = fixtures::rng(seed);
    let rng = &mut rng;
    let p = fixtures::random_projection_element(rng, shape, rank);
    let q = fixtures::random_projection_element(rng, shape, rank);
    let r = fixtures::random_projection_element(rng, shape, rank);
    let ind = |a: &AElement, b: &AElement| -> Result<KZeroClass> {
        rel_index_fredholm(&ProjectionPair::new(a.clone(), b.clone())?)
    };
    let mut out: Vec<Check> = vec![(
        "uniqueness",
        ProjectionPair::new(p.clone(), q.clone())
            .and_then(|pp| Ok(rel_index_fredholm(&pp)? == rel_index_crossing(&pp)?)),
    )];
    out.push(("antisymmetry", (|| Ok(ind(&p, &q)? == ind(&q, &p)?.neg()))()));
    out.push(("identity", (|| Ok(ind(&p, &p)?.is_zero()))()));
    out.push((
        "additivity",
        (|| Ok(ind(&p, &r)? == ind(&p, &q)?.checked_add(&ind(&q, &r)?)?))(),
    ));
    let r2 = fixtures::random_projection_element(rng, shape, rank);
    out.push((
        "stabilization",
        (|| {
            let ps = p.direct_sum(&r2)?;
            let qs = q.direct_sum(&r2)?;
            let lhs = rel_index_crossing(&ProjectionPair::new(ps, qs)?)?;
            Ok(lhs == ind(&p, &q)?)
        })(),
    ));
    out.push((
        "normalization",
        (|| {
            let m_ranks: Vec<usize> = shape.blocks.iter().map(|b| b.dim * rank).collect();
            let a_ranks: Vec<usize> = m_ranks.iter().map(|&m| rng_rank(seed, m)).collect();
            let b_ranks: Vec<usize> = m_ranks.iter().zip(&a_ranks).map(|(&m, &a)| (m - a) / 2).collect();
            let both: Vec<usize> = a_ranks.iter().zip(&b_ranks).map(|(a, b)| a + b).collect();
            let mut local = fixtures::rng(seed ^ 0x5eed);
            let u = fixtures::unitary_element(&mut local, shape, rank, &[]);
            let lower = |ranks: &[usize], skip: &[usize]| {
                AElement::from_fn(shape, rank, |b, _| {
                    let m = shape.blocks[b].dim * rank;
                    let d: Vec<f64> = (0..m)
                        .map(|i| if i >= skip[b] && i < skip[b] + ranks[b] { 1.0 } else { 0.0 })
                        .collect();
                    matfun::real_diagonal(&d)
                })
                .map(|x| x.conjugate(&u))
            };
            // P occupies the first a coordinates, Q the next b; P + Q is their union
            let zero = vec![0; shape.len()];
            let qc = lower(&b_ranks, &a_ranks)?;
            let sum = lower(&both, &zero)?;
            let got = rel_index_crossing(&ProjectionPair::new(sum, qc)?)?;
            Ok(got.components == a_ranks.iter().map(|&a| a as i64).collect::<Vec<_>>())
        })(),
    ));
    let u = fixtures::unitary_element(rng, shape, rank, &[]);
    out.push((
        "conjugation",
        (|| Ok(ind(&p.conjugate(&u), &q.conjugate(&u))? == ind(&p, &q)?))(),
    ));
    out.push((
        "functoriality",
        (|| {
            let base = ind(&p, &q)?;
            for hom in supported_homs(shape) {
                let pushed = hom.push_k0(&base)?;
                let direct = ind(&hom.apply(&p)?, &hom.apply(&q)?)?;
                if pushed != direct {
                    return Ok(false);
                }
            }
            Ok(true)
        })(),
    ));
    out.push((
        "homotopy",
        (|| {
            let h = fixtures::smooth_hermitian_element(rng, shape, rank, 1.0);
            let w = h.try_map(|m| Ok(fixtures::exp_i(m)))?;
            let moved = ind(&p.conjugate(&w), &q.conjugate(&w))?;
            let steps = 16;
            for k in 0..=steps {
                let s = k as f64 / steps as f64;
                let ws = h.try_map(|m| Ok(fixtures::exp_i(&m.scale(s))))?;
                let pair = ProjectionPair::new(p.conjugate(&ws), q.conjugate(&ws))?;
                if rel_index_fredholm(&pair)? != moved {
                    return Ok(false);
                }
            }
            Ok(moved == ind(&p, &q)?)
        })(),
    ));
    out
}

fn rng_rank(seed: u64, m: usize) -> usize {
    fixtures::rng(seed.wrapping_mul(31).wrapping_add(m as u64)).gen_range(0..=m)
}

/// Homomorphisms applicable to `shape`, one of each supported kind where possible.
pub fn supported_homs(shape: &AlgebraShape) -> Vec<Homomorphism> {
    let mut homs = Vec::new();
    let n = shape.len();
    homs.push(Homomorphism::Permute((0..n).rev().collect()));
    homs.push(Homomorphism::DiagonalInclusion { block: 0 });
    if let Some(b) = shape.blocks.iter().position(|b| b.is_loop()) {
        let nt = shape.blocks[b].channels();
        homs.push(Homomorphism::Rotate { block: b, shift: nt / 3 });
        homs.push(Homomorphism::Evaluate { block: b, theta_index: nt / 2 });
    }
    homs
}

/// Randomized check of additivity, antisymmetry, stabilization, normalization,
/// conjugation invariance, functoriality, homotopy invariance and agreement of
/// the two constructions. Trial `i` uses seed `seed + i`.
pub fn rel_index_axiom_suite(shape: &AlgebraShape, rank: usize, trials: usize, seed: u64) -> AxiomReport {
    use rayon::prelude::*;
    let results: Vec<(u64, Vec<Check>)> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i);
            (s, trial(shape, rank, s))
        })
        .collect();
    let mut checks: Vec<AxiomCheck> = Vec::new();
    for (s, res) in results {
        for (name, ok) in res {
            let entry = match checks.iter_mut().find(|c| c.name == name) {
                Some(e) => e,
                None => {
                    checks.push(AxiomCheck { name: name.to_string(), passed: 0, failures: Vec::new() });
                    checks.last_mut().unwrap()
                }
            };
            if matches!(ok, Ok(true)) {
                entry.passed += 1;
            } else {
                entry.failures.push(s);
            }
        }
    }
    AxiomReport { trials, checks }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::BlockSpec;

    fn scalar(n: usize) -> AlgebraShape {
        AlgebraShape::scalars(&[n]).unwrap()
    }

    fn elem(shape: &AlgebraShape, m: CMatrix) -> AElement {
        AElement::new(shape.clone(), 1, vec![vec![m]]).unwrap()
    }

    #[test]
    fn pair_with_itself_is_zero() {
        let s = scalar(3);
        let mut r = fixtures::rng(1);
        let p = elem(&s, fixtures::random_projection(&mut r, 3, 2));
        let pp = ProjectionPair::new(p.clone(), p).unwrap();
        assert!(rel_index_fredholm(&pp).unwrap().is_zero());
        assert!(rel_index_crossing(&pp).unwrap().is_zero());
    }

    #[test]
    fn normalization_example() {
        let s = scalar(4);
        let p = elem(&s, matfun::real_diagonal(&[1.0, 1.0, 0.0, 0.0]));
        let q = elem(&s, matfun::real_diagonal(&[0.0, 0.0, 1.0, 0.0]));
        let sum = p.zip_map(&q, |a, b| a + b);
        let pp = ProjectionPair::new(sum, q).unwrap();
        assert_eq!(rel_index_fredholm(&pp).unwrap().components, vec![2]);
        assert_eq!(rel_index_crossing(&pp).unwrap().components, vec![2]);
    }

    #[test]
    fn full_against_zero() {
        let s = scalar(3);
        let pp = ProjectionPair::new(elem(&s, CMatrix::identity(3, 3)), elem(&s, CMatrix::zeros(3, 3))).unwrap();
        assert_eq!(rel_index_crossing(&pp).unwrap().components, vec![3]);
        assert_eq!(rel_index_fredholm(&pp).unwrap().components, vec![3]);
    }

    #[test]
    fn rejects_non_projection() {
        let s = scalar(2);
        let half = elem(&s, matfun::real_diagonal(&[0.5, 1.0]));
        let one = elem(&s, CMatrix::identity(2, 2));
        assert!(matches!(ProjectionPair::new(half, one), Err(Error::NotProjection { .. })));
    }

    #[test]
    fn rejects_theta_dependent_rank() {
        let s = AlgebraShape::new(vec![BlockSpec::looped(1, 8)]).unwrap();
        let p = AElement::from_fn(&s, 1, |_, th| matfun::real_diagonal(&[if th < 3.0 { 1.0 } else { 0.0 }])).unwrap();
        let q = AElement::scalar(&s, 1, 0.0);
        assert!(matches!(ProjectionPair::new(p, q), Err(Error::NonConstantRank { .. })));
    }

    #[test]
    fn constructions_agree_on_random_pairs() {
        let shape = AlgebraShape::new(vec![BlockSpec::scalar(2), BlockSpec::looped(1, 8)]).unwrap();
        let mut r = fixtures::rng(7);
        for _ in 0..20 {
            let p = fixtures::random_projection_element(&mut r, &shape, 2);
            let q = fixtures::random_projection_element(&mut r, &shape, 2);
            let pp = ProjectionPair::new(p, q).unwrap();
            assert_eq!(rel_index_fredholm(&pp).unwrap(), rel_index_crossing(&pp).unwrap());
        }
    }

    #[test]
    fn axiom_suite_passes() {
        let shape = AlgebraShape::new(vec![BlockSpec::scalar(2), BlockSpec::looped(1, 8)]).unwrap();
        let report = rel_index_axiom_suite(&shape, 2, 6, 100);
        assert!(report.all_passed(), "{report:?}");
        assert_eq!(report.checks.len(), 9);
    }
}
