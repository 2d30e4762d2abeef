//! Discretized testing problems used as exact oracles: exhaustive search
//! over invariant cell unions and the non-randomized Neyman-Pearson region.
//!
//! Cells are indexed from 0.

use serde::Serialize;

use crate::density::{QuadAlternatives, Shape1D, SymmetricPair};
use crate::error::{Error, Result};

const MASS_TOL: f64 = 1e-12;
/// Largest number of orbit blocks searched exhaustively.
pub const MAX_EXHAUSTIVE_BLOCKS: usize = 24;

/// Cell probabilities under the null and each alternative, plus the cell
/// permutations induced by the symmetry group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteProblem {
    pub null: Vec<f64>,
    pub alternatives: Vec<Vec<f64>>,
    /// One cell permutation per group element (identity first).
    pub cell_maps: Vec<Vec<usize>>,
    /// Orbits of the cells under the group, each sorted, ordered by first cell.
    pub blocks: Vec<Vec<usize>>,
}

pub enum ProblemRef<'a> {
    Pair(&'a SymmetricPair),
    Quad(&'a QuadAlternatives),
}

fn cell_probs(shape: &Shape1D, m: usize) -> Vec<f64> {
    (0..m).map(|i| shape.cdf((i + 1) as f64 / m as f64) - shape.cdf(i as f64 / m as f64)).collect()
}

fn orbits(m_cells: usize, maps: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; m_cells];
    let mut out = Vec::new();
    for c in 0..m_cells {
        if seen[c] {
            continue;
        }
        let mut orbit: Vec<usize> = maps.iter().map(|g| g[c]).collect();
        orbit.sort_unstable();
        orbit.dedup();
        for &o in &orbit {
            seen[o] = true;
        }
        out.push(orbit);
    }
    out
}

impl DiscreteProblem {
    pub fn new(null: Vec<f64>, alternatives: Vec<Vec<f64>>, cell_maps: Vec<Vec<usize>>) -> Result<Self> {
        let m = null.len();
        for v in std::iter::once(&null).chain(&alternatives) {
            if v.len() != m {
                return Err(Error::InvalidArgument("cell vectors differ in length".into()));
            }
            if v.iter().any(|&p| !(p >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > MASS_TOL {
                return Err(Error::InvalidArgument("cell probabilities must be nonnegative and sum to 1".into()));
            }
        }
        for g in &cell_maps {
            let mut sorted = g.clone();
            sorted.sort_unstable();
            if sorted != (0..m).collect::<Vec<_>>() {
                return Err(Error::InvalidArgument("cell map is not a permutation".into()));
            }
            if g.iter().enumerate().any(|(c, &d)| (null[c] - null[d]).abs() > MASS_TOL) {
                return Err(Error::InvalidArgument("cell map does not preserve the null".into()));
            }
        }
        let blocks = orbits(m, &cell_maps);
        Ok(Self { null, alternatives, cell_maps, blocks })
    }

    pub fn cells(&self) -> usize {
        self.null.len()
    }

    /// `Σ_i p_i / s` cell by cell.
    pub fn uniform_mixture(&self) -> Vec<f64> {
        let s = self.alternatives.len() as f64;
        (0..self.cells()).map(|c| self.alternatives.iter().map(|a| a[c]).sum::<f64>() / s).collect()
    }

    /// `max_i p_i` cell by cell (unnormalized score).
    pub fn max_score(&self) -> Vec<f64> {
        (0..self.cells()).map(|c| self.alternatives.iter().map(|a| a[c]).fold(0.0, f64::max)).collect()
    }
}

/// Splits `(0,1)` into `m` equal cells (`m` even, at most 64) or the unit
/// square into `m × m` cells (`m` even), with exact CDF differences.
pub fn discretize(problem: ProblemRef<'_>, m: usize) -> Result<DiscreteProblem> {
    if m == 0 || m % 2 == 1 {
        return Err(Error::InvalidArgument(format!("cell count must be even, got {m}")));
    }
    match problem {
        ProblemRef::Pair(pair) => {
            if pair.n != 1 {
                return Err(Error::Precondition("pair discretization is one-dimensional".into()));
            }
            if m > 64 {
                return Err(Error::InvalidArgument(format!("at most 64 cells in one dimension, got {m}")));
            }
            let p1 = cell_probs(&pair.shape, m);
            let p2: Vec<f64> = p1.iter().rev().copied().collect();
            let identity: Vec<usize> = (0..m).collect();
            let reflect: Vec<usize> = (0..m).rev().collect();
            DiscreteProblem::new(vec![1.0 / m as f64; m], vec![p1, p2], vec![identity, reflect])
        }
        ProblemRef::Quad(quad) => {
            let axis = cell_probs(&quad.shape, m);
            let flip = |i: usize, r: bool| if r { m - 1 - i } else { i };
            let masks = [(false, false), (true, false), (false, true), (true, true)];
            let alternatives = masks
                .iter()
                .map(|&(rx, ry)| {
                    (0..m * m).map(|c| axis[flip(c / m, rx)] * axis[flip(c % m, ry)]).collect::<Vec<f64>>()
                })
                .collect();
            let maps = masks
                .iter()
                .map(|&(rx, ry)| (0..m * m).map(|c| flip(c / m, rx) * m + flip(c % m, ry)).collect())
                .collect();
            DiscreteProblem::new(vec![1.0 / (m * m) as f64; m * m], alternatives, maps)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteRegion {
    pub cells: Vec<usize>,
    pub null_mass: f64,
    pub power: f64,
}

/// Cells ordered by `score/p0` descending; ratios equal to 1e-12 (relative)
/// count as ties and are broken by cell index.
fn ratio_order(p0: &[f64], score: &[f64]) -> Vec<usize> {
    let ratio = |c: usize| match (score[c] > 0.0, p0[c] > 0.0) {
        (_, true) => score[c] / p0[c],
        (true, false) => f64::INFINITY,
        (false, false) => 0.0,
    };
    let mut idx: Vec<usize> = (0..p0.len()).collect();
    idx.sort_by(|&a, &b| ratio(b).total_cmp(&ratio(a)).then(a.cmp(&b)));
    let mut out = Vec::with_capacity(idx.len());
    let mut group: Vec<usize> = Vec::new();
    for c in idx {
        if let Some(&head) = group.first() {
            let (rh, rc) = (ratio(head), ratio(c));
            if !(rh == rc || (rh - rc).abs() <= 1e-12 * rh.abs().max(rc.abs())) {
                group.sort_unstable();
                out.append(&mut group);
            }
        }
        group.push(c);
    }
    group.sort_unstable();
    out.append(&mut group);
    out
}

/// Greedy likelihood-ratio region: include cells in decreasing `score/p0`
/// order while the null mass stays within `α`; `power` is measured
/// against `power_against`.
pub fn ordered_region(p0: &[f64], score: &[f64], power_against: &[f64], alpha: f64) -> DiscreteRegion {
    let mut cells = Vec::new();
    let mut mass = 0.0;
    for c in ratio_order(p0, score) {
        if mass + p0[c] > alpha + MASS_TOL {
            break;
        }
        mass += p0[c];
        cells.push(c);
    }
    cells.sort_unstable();
    let power = cells.iter().map(|&c| power_against[c]).sum();
    DiscreteRegion { cells, null_mass: mass, power }
}

/// Non-randomized Neyman-Pearson region for `p0` against `p1`.
pub fn np_region_discrete(p0: &[f64], p1: &[f64], alpha: f64) -> Result<DiscreteRegion> {
    if p0.len() != p1.len() {
        return Err(Error::InvalidArgument("probability vectors differ in length".into()));
    }
    for v in [p0, p1] {
        if v.iter().any(|&p| !(p >= 0.0)) || (v.iter().sum::<f64>() - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument("cell probabilities must be nonnegative and sum to 1".into()));
        }
    }
    Ok(ordered_region(p0, p1, p1, alpha))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMethod {
    Exhaustive,
    GreedyByRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantSearch {
    pub method: SearchMethod,
    pub region: DiscreteRegion,
    /// Power of `region` against every alternative.
    pub powers: Vec<f64>,
    pub regions_enumerated: usize,
    /// Region ordered by the average likelihood ratio.
    pub avg_lr_region: DiscreteRegion,
    pub avg_lr_is_optimal: bool,
    /// Least powerful invariant region with null mass exactly `α`, if any.
    pub least_powerful_full_size: Option<DiscreteRegion>,
}

/// Most powerful invariant (union-of-orbits) region with null mass at most
/// `α`, power measured against the first alternative.
///
/// Up to [`MAX_EXHAUSTIVE_BLOCKS`] orbits every union is enumerated; beyond
/// that the greedy ratio ordering is used when `allow_greedy` is set.
pub fn best_invariant_region(dp: &DiscreteProblem, alpha: f64, allow_greedy: bool) -> Result<InvariantSearch> {
    if dp.alternatives.is_empty() {
        return Err(Error::InvalidArgument("no alternatives".into()));
    }
    let mixture = dp.uniform_mixture();
    let target = &dp.alternatives[0];
    let avg_lr_region = ordered_region(&dp.null, &mixture, target, alpha);
    let powers_of = |cells: &[usize]| dp.alternatives.iter().map(|a| cells.iter().map(|&c| a[c]).sum()).collect();

    let b = dp.blocks.len();
    if b > MAX_EXHAUSTIVE_BLOCKS {
        if !allow_greedy {
            return Err(Error::InvalidArgument(format!(
                "{b} orbit blocks exceed the exhaustive limit of {MAX_EXHAUSTIVE_BLOCKS}"
            )));
        }
        return Ok(InvariantSearch {
            method: SearchMethod::GreedyByRatio,
            powers: powers_of(&avg_lr_region.cells),
            region: avg_lr_region.clone(),
            regions_enumerated: 0,
            avg_lr_is_optimal: true,
            avg_lr_region,
            least_powerful_full_size: None,
        });
    }

    let block_null: Vec<f64> = dp.blocks.iter().map(|bl| bl.iter().map(|&c| dp.null[c]).sum()).collect();
    let block_power: Vec<f64> = dp.blocks.iter().map(|bl| bl.iter().map(|&c| target[c]).sum()).collect();
    let mut best: Option<(u32, f64, f64)> = None;
    let mut worst_full: Option<(u32, f64, f64)> = None;
    let mut enumerated = 0;
    for subset in 0u32..(1u32 << b) {
        let (mut mass, mut power) = (0.0, 0.0);
        for k in 0..b {
            if subset >> k & 1 == 1 {
                mass += block_null[k];
                power += block_power[k];
            }
        }
        if mass > alpha + MASS_TOL {
            continue;
        }
        enumerated += 1;
        if best.is_none_or(|(_, _, p)| power > p + 1e-15) {
            best = Some((subset, mass, power));
        }
        if (mass - alpha).abs() <= MASS_TOL && worst_full.is_none_or(|(_, _, p)| power < p - 1e-15) {
            worst_full = Some((subset, mass, power));
        }
    }
    let to_region = |(subset, mass, power): (u32, f64, f64)| {
        let mut cells: Vec<usize> =
            (0..b).filter(|k| subset >> k & 1 == 1).flat_map(|k| dp.blocks[k].iter().copied()).collect();
        cells.sort_unstable();
        DiscreteRegion { cells, null_mass: mass, power }
    };
    let region = to_region(best.expect("the empty region is always feasible"));
    let avg_lr_is_optimal = avg_lr_region.power >= region.power - 1e-12;
    Ok(InvariantSearch {
        method: SearchMethod::Exhaustive,
        powers: powers_of(&region.cells),
        region,
        regions_enumerated: enumerated,
        avg_lr_region,
        avg_lr_is_optimal,
        least_powerful_full_size: worst_full.map(to_region),
    })
}

/// Region ordered by `max_i p_i / p0` (the discretized max-LR test).
pub fn max_lr_region(dp: &DiscreteProblem, alpha: f64) -> DiscreteRegion {
    ordered_region(&dp.null, &dp.max_score(), &dp.alternatives[0], alpha)
}
