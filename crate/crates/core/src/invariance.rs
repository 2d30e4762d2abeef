//! Finite groups of coordinate reflections on the unit cube, the
//! permutations they induce on a set of alternatives, and invariance checks
//! for statistics and rejection regions.

use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::rng::Substream;

const PROBE_TOL: f64 = 1e-12;

/// A finite group acting on `(0,1)^n` by reflecting subsets of coordinates
/// (`x_i -> 1 - x_i`). Each element is measure preserving.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupAction {
    name: String,
    n: usize,
    masks: Vec<Vec<bool>>,
    table: Vec<Vec<usize>>,
    identity: usize,
    inverses: Vec<usize>,
}

impl GroupAction {
    /// Builds the group from its reflection masks and verifies closure,
    /// identity and inverses.
    pub fn from_reflections(name: &str, masks: Vec<Vec<bool>>) -> Result<Self> {
        let n = masks.first().map(|m| m.len()).ok_or_else(|| Error::GroupAxioms("no elements".into()))?;
        if n == 0 || masks.iter().any(|m| m.len() != n) {
            return Err(Error::GroupAxioms("masks must share a positive dimension".into()));
        }
        let index_of = |m: &[bool]| masks.iter().position(|e| e.as_slice() == m);
        let identity = index_of(&vec![false; n]).ok_or_else(|| Error::GroupAxioms("identity missing".into()))?;
        let mut table = vec![vec![0; masks.len()]; masks.len()];
        for (a, ma) in masks.iter().enumerate() {
            for (b, mb) in masks.iter().enumerate() {
                let prod: Vec<bool> = ma.iter().zip(mb).map(|(x, y)| x ^ y).collect();
                table[a][b] = index_of(&prod)
                    .ok_or_else(|| Error::GroupAxioms(format!("composition of elements {a} and {b} is not in the set")))?;
            }
        }
        let mut inverses = Vec::with_capacity(masks.len());
        for a in 0..masks.len() {
            let inv = (0..masks.len())
                .find(|&b| table[a][b] == identity && table[b][a] == identity)
                .ok_or_else(|| Error::GroupAxioms(format!("element {a} has no inverse")))?;
            inverses.push(inv);
        }
        Ok(Self { name: name.to_owned(), n, masks, table, identity, inverses })
    }

    /// `{identity, x -> 1 - x}` acting on all `n` coordinates at once.
    pub fn reflect_1d(n: usize) -> Result<Self> {
        Self::from_reflections("reflect-1d", vec![vec![false; n], vec![true; n]])
    }

    /// The four maps `(x,y)`, `(1-x,y)`, `(x,1-y)`, `(1-x,1-y)` in that order.
    pub fn reflect_2d_quad() -> Self {
        Self::from_reflections(
            "reflect-2d-quad",
            vec![vec![false, false], vec![true, false], vec![false, true], vec![true, true]],
        )
        .expect("Klein four-group")
    }

    pub fn identity_only(n: usize) -> Result<Self> {
        Self::from_reflections("identity", vec![vec![false; n]])
    }

    pub fn by_id(id: &str, n: usize) -> Result<Self> {
        match id {
            "reflect-1d" => Self::reflect_1d(n),
            "reflect-2d-quad" if n == 2 => Ok(Self::reflect_2d_quad()),
            "reflect-2d-quad" => Err(Error::InvalidArgument(format!("reflect-2d-quad acts on dimension 2, not {n}"))),
            other => Err(Error::UnknownId(other.to_owned())),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.masks.len()
    }

    pub fn identity_index(&self) -> usize {
        self.identity
    }

    /// Index of `a ∘ b`.
    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.inverses[a]
    }

    pub fn apply(&self, element: usize, x: &[f64]) -> Result<Vec<f64>> {
        let mask = self
            .masks
            .get(element)
            .ok_or_else(|| Error::InvalidArgument(format!("group element {element} out of range (order {})", self.order())))?;
        if x.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: x.len() });
        }
        Ok(x.iter().zip(mask).map(|(&v, &r)| if r { 1.0 - v } else { v }).collect())
    }
}

/// Permutation `π` of alternative indices induced by a group element `g`:
/// `p_{π(i)}(x) = p_i(g^{-1}(x))`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InducedPermutation {
    pub group_element_index: usize,
    pub permutation: Vec<usize>,
}

impl InducedPermutation {
    pub fn is_identity(&self) -> bool {
        self.permutation.iter().enumerate().all(|(i, &j)| i == j)
    }
}

/// Deterministic probe points in the open unit cube.
pub fn probe_points(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = Substream::derive(seed, "invariance-probes").rng();
    (0..count)
        .map(|_| (0..n).map(|_| 0.001 + 0.998 * rng.random::<f64>()).collect())
        .collect()
}

pub const PROBE_COUNT: usize = 100;
const PROBE_SEED: u64 = 0x0b5e_55ed;

fn log_close(a: f64, b: f64) -> bool {
    (a == b) || (a - b).abs() <= PROBE_TOL
}

/// Finds, for every group element, the permutation of `alts` it induces,
/// checked on a fixed set of 100 probe points.
pub fn induced_permutations(group: &GroupAction, alts: &[Arc<dyn Density>]) -> Result<Vec<InducedPermutation>> {
    if let Some(a) = alts.iter().find(|a| a.space().dim() != group.dim()) {
        return Err(Error::InvalidArgument(format!("alternative {} has the wrong dimension", a.label())));
    }
    let probes = probe_points(group.dim(), PROBE_COUNT, PROBE_SEED);
    let table: Vec<Vec<f64>> = alts.iter().map(|a| probes.iter().map(|x| a.log_pdf(x)).collect()).collect();
    let mut out = Vec::with_capacity(group.order());
    for g in 0..group.order() {
        let ginv = group.inverse(g);
        let moved: Vec<Vec<f64>> = probes.iter().map(|x| group.apply(ginv, x)).collect::<Result<_>>()?;
        let mut perm = Vec::with_capacity(alts.len());
        for a in alts {
            let pulled: Vec<f64> = moved.iter().map(|y| a.log_pdf(y)).collect();
            let j = (0..alts.len())
                .find(|&j| !perm.contains(&j) && table[j].iter().zip(&pulled).all(|(&u, &v)| log_close(u, v)))
                .ok_or(Error::NoInducedPermutation(g))?;
            perm.push(j);
        }
        out.push(InducedPermutation { group_element_index: g, permutation: perm });
    }
    Ok(out)
}

/// True iff for every pair `(i, j)` some stored permutation maps `i` to `j`.
pub fn is_transitive(perms: &[InducedPermutation], s: usize) -> bool {
    (0..s).all(|i| (0..s).all(|j| perms.iter().any(|p| p.permutation.get(i) == Some(&j))))
}

/// Checks that `perms[compose(a, b)] = perms[a] ∘ perms[b]` for all pairs.
pub fn permutations_compose(group: &GroupAction, perms: &[InducedPermutation]) -> bool {
    let by_element = |g: usize| perms.iter().find(|p| p.group_element_index == g).map(|p| &p.permutation);
    (0..group.order()).all(|a| {
        (0..group.order()).all(|b| match (by_element(a), by_element(b), by_element(group.compose(a, b))) {
            (Some(pa), Some(pb), Some(pab)) => pb.iter().enumerate().all(|(i, &j)| pab[i] == pa[j]),
            _ => false,
        })
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionViolation {
    pub probe_index: usize,
    pub element: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegionReport {
    pub probes_checked: usize,
    pub violations: Vec<RegionViolation>,
}

impl RegionReport {
    pub fn invariant(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every probe `x` and element `g` with `decision(x) != decision(g(x))`.
pub fn symmetrize_region_check<D>(decision: D, group: &GroupAction, probe: &[Vec<f64>]) -> Result<RegionReport>
where
    D: Fn(&[f64]) -> bool,
{
    let mut violations = Vec::new();
    for (i, x) in probe.iter().enumerate() {
        let here = decision(x);
        for g in 0..group.order() {
            if decision(&group.apply(g, x)?) != here {
                violations.push(RegionViolation { probe_index: i, element: g });
            }
        }
    }
    Ok(RegionReport { probes_checked: probe.len(), violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{make_symmetric_pair, quad_9x2y2, Shape1D};

    #[test]
    fn apply_examples() {
        let g = GroupAction::reflect_1d(1).unwrap();
        assert_eq!(g.apply(1, &[0.3]).unwrap(), vec![0.7]);
        assert_eq!(g.apply(0, &[0.3]).unwrap(), vec![0.3]);
        let q = GroupAction::reflect_2d_quad();
        let y = q.apply(3, &[0.2, 0.9]).unwrap();
        assert!((y[0] - 0.8).abs() < 1e-15 && (y[1] - 0.1).abs() < 1e-15);
        assert!(q.apply(4, &[0.2, 0.9]).is_err());
    }

    #[test]
    fn apply_then_inverse_is_exact_for_dyadic_points() {
        let q = GroupAction::reflect_2d_quad();
        for g in 0..4 {
            let x = [0.25, 0.625];
            let back = q.apply(q.inverse(g), &q.apply(g, &x).unwrap()).unwrap();
            assert_eq!(back, x.to_vec());
        }
    }

    #[test]
    fn axioms_are_enforced() {
        assert!(GroupAction::from_reflections("bad", vec![vec![false, false], vec![true, false], vec![false, true]]).is_err());
        assert!(GroupAction::from_reflections("noid", vec![vec![true]]).is_err());
    }

    #[test]
    fn pair_swap_and_quad_table() {
        let pair = make_symmetric_pair(&Shape1D::convex_3x2(), 3).unwrap();
        let perms = induced_permutations(&GroupAction::reflect_1d(3).unwrap(), &pair.alternatives()).unwrap();
        assert!(perms[0].is_identity());
        assert_eq!(perms[1].permutation, vec![1, 0]);

        let quad = quad_9x2y2();
        let perms = induced_permutations(&GroupAction::reflect_2d_quad(), &quad.alternatives()).unwrap();
        let table: Vec<Vec<usize>> = perms.iter().map(|p| p.permutation.clone()).collect();
        assert_eq!(table, vec![vec![0, 1, 2, 3], vec![1, 0, 3, 2], vec![2, 3, 0, 1], vec![3, 2, 1, 0]]);
        assert!(is_transitive(&perms, 4));
        assert!(permutations_compose(&GroupAction::reflect_2d_quad(), &perms));
    }

    #[test]
    fn transitivity_examples() {
        let id = vec![InducedPermutation { group_element_index: 0, permutation: vec![0, 1] }];
        assert!(!is_transitive(&id, 2));
        let swap = vec![id[0].clone(), InducedPermutation { group_element_index: 1, permutation: vec![1, 0] }];
        assert!(is_transitive(&swap, 2));
    }

    #[test]
    fn inconsistent_alternatives_have_no_permutation() {
        let pair = make_symmetric_pair(&Shape1D::convex_3x2(), 1).unwrap();
        let lopsided: Vec<Arc<dyn Density>> = vec![pair.p1.clone()];
        assert_eq!(
            induced_permutations(&GroupAction::reflect_1d(1).unwrap(), &lopsided),
            Err(Error::NoInducedPermutation(1))
        );
    }

    #[test]
    fn region_checks() {
        let g = GroupAction::reflect_1d(1).unwrap();
        let probes: Vec<Vec<f64>> = vec![vec![0.1], vec![0.5], vec![0.8]];
        let r = symmetrize_region_check(|x| x[0] > 0.5, &g, &probes).unwrap();
        let idx: Vec<usize> = r.violations.iter().map(|v| v.probe_index).collect();
        assert_eq!(idx, vec![0, 2]);
        let id = GroupAction::identity_only(1).unwrap();
        assert!(symmetrize_region_check(|x| x[0] > 0.5, &id, &probes).unwrap().invariant());
    }
}
