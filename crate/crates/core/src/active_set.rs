//! Inactive index sets, their coarsening across grid levels, and the
//! geometry of the inactive domain.
//!
//! For an inactive index set `I` on level `j` the *inactive domain* is
//! `Omega_j^in = union of supp(phi_i), i in I`. The coarse inactive set
//! contains a coarse node exactly when its coincident fine node and all fine
//! nodes sharing an element with it are inactive; equivalently, when the
//! coarse hat function expressed in the fine basis touches inactive fine
//! nodes only (so the coarse inactive space is a subspace of the fine one).
//!
//! The *numerical interior* of `Omega_j^in` is the union of coarse elements
//! contained in `Omega_j^in` all of whose vertices are coarse-inactive or lie
//! on the boundary of `Omega`; the measure `mu` of the remaining strip (the
//! numerical boundary) drives the quality of the two-grid preconditioner.

use crate::mesh::{Element, LevelMesh, MeshHierarchy};
use crate::{Error, Result};
use std::collections::BTreeSet;

/// Sorted set of inactive interior-node indices on one level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InactiveSet {
    level: usize,
    indices: Vec<usize>,
}

impl InactiveSet {
    /// Builds a set from arbitrary indices (sorted and deduplicated).
    pub fn new(level: usize, mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        InactiveSet { level, indices }
    }

    pub fn from_mask(level: usize, mask: &[bool]) -> Self {
        InactiveSet {
            level,
            indices: mask
                .iter()
                .enumerate()
                .filter_map(|(i, &b)| b.then_some(i))
                .collect(),
        }
    }

    pub fn all(mesh: &LevelMesh) -> Self {
        InactiveSet {
            level: mesh.level(),
            indices: (0..mesh.num_interior()).collect(),
        }
    }

    pub fn empty(level: usize) -> Self {
        InactiveSet {
            level,
            indices: Vec::new(),
        }
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Dense membership mask over the interior nodes of `mesh`.
    pub fn mask(&self, mesh: &LevelMesh) -> Vec<bool> {
        let mut m = vec![false; mesh.num_interior()];
        for &i in &self.indices {
            m[i] = true;
        }
        m
    }

    /// Fraction of interior nodes that are inactive.
    pub fn fraction(&self, mesh: &LevelMesh) -> f64 {
        self.len() as f64 / mesh.num_interior() as f64
    }

    /// One-line text form for experiment logs: sorted indices separated by
    /// spaces.
    pub fn to_log_line(&self) -> String {
        self.indices
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// All interior nodes of `mesh` whose coordinates lie in the closed box
/// `[lo, hi]^d` (an interval in 1D). An empty region yields the empty set.
pub fn inactive_from_interval(mesh: &LevelMesh, lo: f64, hi: f64) -> InactiveSet {
    let mut indices = Vec::new();
    for k in 0..mesh.num_interior() {
        let (i, j) = mesh.grid_coords(k);
        let c = mesh.coords(i, j);
        let inside = match mesh.dim() {
            1 => lo <= c[0] && c[0] <= hi,
            _ => lo <= c[0] && c[0] <= hi && lo <= c[1] && c[1] <= hi,
        };
        if inside {
            indices.push(k);
        }
    }
    InactiveSet {
        level: mesh.level(),
        indices,
    }
}

/// Coarse inactive set from a fine one: a coarse node is inactive exactly
/// when its coincident fine node and all its fine element-neighbors are
/// inactive (boundary nodes of `Omega` carry no constraint and never
/// disqualify).
pub fn coarsen_inactive(fine: &InactiveSet, hierarchy: &MeshHierarchy) -> Result<InactiveSet> {
    if fine.level == 0 {
        return Err(Error::LevelMismatch {
            expected: 1,
            got: 0,
        });
    }
    let fm = hierarchy.level(fine.level);
    let cm = hierarchy.level(fine.level - 1);
    let mask = fine.mask(fm);
    let admissible = |i: usize, j: usize| -> bool {
        if fm.on_boundary(i, j) {
            return true;
        }
        mask[fm.interior_index(i, j).expect("non-boundary node is interior")]
    };
    let mut indices = Vec::new();
    for kc in 0..cm.num_interior() {
        let (ic, jc) = cm.grid_coords(kc);
        let (i, j) = (2 * ic, 2 * jc);
        let mut good = admissible(i, j);
        if good {
            for (a, b) in fm.neighbors(i, j) {
                if !admissible(a, b) {
                    good = false;
                    break;
                }
            }
        }
        if good {
            indices.push(kc);
        }
    }
    Ok(InactiveSet {
        level: fine.level - 1,
        indices,
    })
}

/// Reference implementation of [`coarsen_inactive`] through the
/// interpolation matrix: a coarse node is inactive exactly when its hat
/// function, written in the fine nodal basis, has all its nonzero
/// coefficients on inactive fine nodes (support containment in the fine
/// inactive space). Kept as an independent oracle for tests.
pub fn coarsen_inactive_support_oracle(
    fine: &InactiveSet,
    hierarchy: &MeshHierarchy,
) -> Result<InactiveSet> {
    if fine.level == 0 {
        return Err(Error::LevelMismatch {
            expected: 1,
            got: 0,
        });
    }
    let fm = hierarchy.level(fine.level);
    let cm = hierarchy.level(fine.level - 1);
    let mask = fine.mask(fm);
    let jmat = hierarchy.interpolation(fine.level);
    // column supports of J, gathered row-wise
    let mut bad = vec![false; cm.num_interior()];
    for kf in 0..fm.num_interior() {
        if mask[kf] {
            continue;
        }
        for (kc, v) in jmat.row_entries(kf) {
            if v != 0.0 {
                bad[kc] = true;
            }
        }
    }
    Ok(InactiveSet {
        level: fine.level - 1,
        indices: (0..cm.num_interior()).filter(|&k| !bad[k]).collect(),
    })
}

/// Element decomposition of an inactive domain and its numerical boundary
/// measure.
#[derive(Debug, Clone)]
pub struct InactiveGeometry {
    /// Fine level `j`.
    pub fine_level: usize,
    /// Fine elements making up `Omega_j^in`.
    pub inactive_domain_elements: Vec<Element>,
    /// Coarse elements making up the numerical interior of `Omega_j^in`.
    pub numerical_interior_elements: Vec<Element>,
    /// `vol(Omega_j^in)`.
    pub inactive_domain_volume: f64,
    /// `mu = vol(Omega_j^in) - vol(numerical interior) >= 0`.
    pub numerical_boundary_measure: f64,
}

/// Fine elements of `Omega^in`: those with at least one inactive vertex.
fn inactive_elements(set: &InactiveSet, mesh: &LevelMesh) -> Vec<Element> {
    let mut out = BTreeSet::new();
    for &k in set.indices() {
        let (i, j) = mesh.grid_coords(k);
        out.extend(mesh.elements_touching(i, j));
    }
    out.into_iter().collect()
}

/// Computes the inactive-domain geometry for a fine inactive set and its
/// coarsening (`coarse` must live one level below `fine`).
pub fn geometry(
    fine: &InactiveSet,
    coarse: &InactiveSet,
    hierarchy: &MeshHierarchy,
) -> Result<InactiveGeometry> {
    if fine.level == 0 || coarse.level != fine.level - 1 {
        return Err(Error::LevelMismatch {
            expected: fine.level.saturating_sub(1),
            got: coarse.level,
        });
    }
    let fm = hierarchy.level(fine.level);
    let cm = hierarchy.level(coarse.level);

    let fine_elements = inactive_elements(fine, fm);
    let fine_set: BTreeSet<Element> = fine_elements.iter().copied().collect();
    let vol_in: f64 = fine_elements.iter().map(|e| e.volume(fm.h())).sum();

    // numerical interior: coarse elements contained in Omega^in whose
    // vertices are coarse-inactive or boundary vertices of Omega
    let cmask = coarse.mask(cm);
    let mut interior = Vec::new();
    let mut vol_int = 0.0;
    'elem: for t in cm.elements() {
        for (i, j) in t.vertices() {
            if !cm.on_boundary(i, j) && !cmask[cm.interior_index(i, j).unwrap()] {
                continue 'elem;
            }
        }
        // containment: every fine child element lies in Omega^in
        if !children(&t).iter().all(|c| fine_set.contains(c)) {
            continue;
        }
        vol_int += t.volume(cm.h());
        interior.push(t);
    }

    Ok(InactiveGeometry {
        fine_level: fine.level,
        inactive_domain_elements: fine_elements,
        numerical_interior_elements: interior,
        inactive_domain_volume: vol_in,
        numerical_boundary_measure: vol_in - vol_int,
    })
}

/// Fine child elements of a coarse element under one refinement.
fn children(t: &Element) -> Vec<Element> {
    match *t {
        Element::Interval { left } => vec![
            Element::Interval { left: 2 * left },
            Element::Interval { left: 2 * left + 1 },
        ],
        Element::Triangle { a, b, .. } => {
            let mut out = Vec::with_capacity(4);
            for ca in [2 * a, 2 * a + 1] {
                for cb in [2 * b, 2 * b + 1] {
                    for cu in [false, true] {
                        let c = Element::Triangle {
                            a: ca,
                            b: cb,
                            upper: cu,
                        };
                        if c.parent() == *t {
                            out.push(c);
                        }
                    }
                }
            }
            out
        }
    }
}

/// Grid-sequencing initial guess: fine nodes whose basis support lies inside
/// the coarse inactive domain `Omega_{j-1}^in` (the union of coarse elements
/// touching an inactive coarse node).
pub fn grid_sequencing_guess(
    coarse: &InactiveSet,
    hierarchy: &MeshHierarchy,
) -> Result<InactiveSet> {
    let fine_level = coarse.level + 1;
    if fine_level >= hierarchy.num_levels() {
        return Err(Error::LevelMismatch {
            expected: hierarchy.num_levels().saturating_sub(2),
            got: coarse.level,
        });
    }
    let cm = hierarchy.level(coarse.level);
    let fm = hierarchy.level(fine_level);
    let marked: BTreeSet<Element> = inactive_elements(coarse, cm).into_iter().collect();
    let mut indices = Vec::new();
    for kf in 0..fm.num_interior() {
        let (i, j) = fm.grid_coords(kf);
        let inside = fm
            .elements_touching(i, j)
            .iter()
            .all(|e| marked.contains(&e.parent()));
        if inside {
            indices.push(kf);
        }
    }
    Ok(InactiveSet {
        level: fine_level,
        indices,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshHierarchy;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Interior indices for the given 1-based node numbers (1D helper).
    fn nodes_1d(level: usize, nodes: &[usize]) -> InactiveSet {
        InactiveSet::new(level, nodes.iter().map(|&n| n - 1).collect())
    }

    #[test]
    fn interval_selection_1d() {
        let h = MeshHierarchy::build(1, 16, 1).unwrap();
        let m = h.level(0);
        // nodes i with i/16 in [1/8, 3/4] are i = 2..=12
        let s = inactive_from_interval(m, 0.125, 0.75);
        assert_eq!(s, nodes_1d(0, &(2..=12).collect::<Vec<_>>()));
        // full domain -> everything
        assert_eq!(inactive_from_interval(m, 0.0, 1.0).len(), 15);
        // 5/16 = 0.3125 just misses [0.3, 0.31]
        assert!(inactive_from_interval(m, 0.3, 0.31).is_empty());
    }

    #[test]
    fn coarsen_examples_1d() {
        let h = MeshHierarchy::build(1, 4, 2).unwrap();
        // fine n=8, inactive nodes {2..6}: only coarse node 2 keeps its whole
        // fine neighborhood inactive
        let fine = nodes_1d(1, &[2, 3, 4, 5, 6]);
        let coarse = coarsen_inactive(&fine, &h).unwrap();
        assert_eq!(coarse, nodes_1d(0, &[2]));
        // all inactive -> all coarse inactive; empty -> empty
        let all = InactiveSet::all(h.level(1));
        assert_eq!(coarsen_inactive(&all, &h).unwrap().len(), 3);
        let none = InactiveSet::empty(1);
        assert!(coarsen_inactive(&none, &h).unwrap().is_empty());
        // level-0 input rejected
        assert!(coarsen_inactive(&InactiveSet::empty(0), &h).is_err());
    }

    #[test]
    fn neighborhood_rule_matches_support_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for (dim, n0) in [(1usize, 8usize), (2, 4)] {
            let h = MeshHierarchy::build(dim, n0, 3).unwrap();
            for fine_level in 1..3 {
                let n_int = h.level(fine_level).num_interior();
                for _ in 0..100 {
                    let mask: Vec<bool> = (0..n_int).map(|_| rng.gen_bool(0.6)).collect();
                    let fine = InactiveSet::from_mask(fine_level, &mask);
                    let a = coarsen_inactive(&fine, &h).unwrap();
                    let b = coarsen_inactive_support_oracle(&fine, &h).unwrap();
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn coarsening_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let h = MeshHierarchy::build(2, 4, 2).unwrap();
        let n_int = h.level(1).num_interior();
        for _ in 0..50 {
            let m1: Vec<bool> = (0..n_int).map(|_| rng.gen_bool(0.5)).collect();
            let m2: Vec<bool> = m1.iter().map(|&b| b || rng.gen_bool(0.3)).collect();
            let c1 = coarsen_inactive(&InactiveSet::from_mask(1, &m1), &h).unwrap();
            let c2 = coarsen_inactive(&InactiveSet::from_mask(1, &m2), &h).unwrap();
            for &i in c1.indices() {
                assert!(c2.contains(i));
            }
        }
    }

    #[test]
    fn coarse_inactive_space_is_nested_in_fine() {
        // interpolating a coarse inactive hat touches only fine inactive nodes
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let h = MeshHierarchy::build(2, 4, 2).unwrap();
        let n_int = h.level(1).num_interior();
        for _ in 0..50 {
            let mask: Vec<bool> = (0..n_int).map(|_| rng.gen_bool(0.7)).collect();
            let fine = InactiveSet::from_mask(1, &mask);
            let coarse = coarsen_inactive(&fine, &h).unwrap();
            for &kc in coarse.indices() {
                let mut e = crate::mesh::FeVector::zeros(0, h.level(0).num_interior());
                e.values[kc] = 1.0;
                let f = h.interpolate(&e).unwrap();
                for k in 0..f.len() {
                    if f.values[k] != 0.0 {
                        assert!(mask[k], "coarse hat {kc} leaks onto active fine node {k}");
                    }
                }
            }
        }
    }

    #[test]
    fn geometry_examples_1d() {
        let h = MeshHierarchy::build(1, 4, 2).unwrap();
        // all inactive on n=8: coarse elements all qualify, mu = 0
        let all = InactiveSet::all(h.level(1));
        let coarse = coarsen_inactive(&all, &h).unwrap();
        let g = geometry(&all, &coarse, &h).unwrap();
        assert_relative_eq!(g.inactive_domain_volume, 1.0, epsilon = 1e-14);
        assert_relative_eq!(g.numerical_boundary_measure, 0.0, epsilon = 1e-14);
        // empty set: everything empty
        let none = InactiveSet::empty(1);
        let g = geometry(&none, &coarsen_inactive(&none, &h).unwrap(), &h).unwrap();
        assert_eq!(g.inactive_domain_elements.len(), 0);
        assert_eq!(g.numerical_boundary_measure, 0.0);
    }

    #[test]
    fn boundary_measure_for_the_fixed_interval_family() {
        // fine n=16, inactive nodes {2..12} ([1/8, 3/4]):
        // vol(Omega^in) = 12/16, numerical interior = 3 coarse elements = 6/16
        let h = MeshHierarchy::build(1, 8, 2).unwrap();
        let fine = inactive_from_interval(h.level(1), 0.125, 0.75);
        let coarse = coarsen_inactive(&fine, &h).unwrap();
        let g = geometry(&fine, &coarse, &h).unwrap();
        assert_relative_eq!(g.inactive_domain_volume, 0.75, epsilon = 1e-14);
        assert_relative_eq!(g.numerical_boundary_measure, 0.375, epsilon = 1e-14);

        // Monte-Carlo cross-check of both areas (1% of the domain size)
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let fm = h.level(1);
        let cm = h.level(0);
        let in_fine: std::collections::BTreeSet<usize> = g
            .inactive_domain_elements
            .iter()
            .map(|e| match e {
                Element::Interval { left } => *left,
                _ => unreachable!(),
            })
            .collect();
        let in_coarse: std::collections::BTreeSet<usize> = g
            .numerical_interior_elements
            .iter()
            .map(|e| match e {
                Element::Interval { left } => *left,
                _ => unreachable!(),
            })
            .collect();
        let (mut hits_f, mut hits_c) = (0u64, 0u64);
        let samples = 1_000_000u64;
        for _ in 0..samples {
            let x: f64 = rng.gen();
            if in_fine.contains(&((x / fm.h()) as usize)) {
                hits_f += 1;
            }
            if in_coarse.contains(&((x / cm.h()) as usize)) {
                hits_c += 1;
            }
        }
        let vol_f = hits_f as f64 / samples as f64;
        let vol_c = hits_c as f64 / samples as f64;
        assert!((vol_f - g.inactive_domain_volume).abs() < 0.01);
        assert!(((vol_f - vol_c) - g.numerical_boundary_measure).abs() < 0.01);
    }

    #[test]
    fn boundary_measure_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let h = MeshHierarchy::build(2, 4, 2).unwrap();
        let n_int = h.level(1).num_interior();
        for _ in 0..50 {
            let mask: Vec<bool> = (0..n_int).map(|_| rng.gen_bool(0.5)).collect();
            let fine = InactiveSet::from_mask(1, &mask);
            let coarse = coarsen_inactive(&fine, &h).unwrap();
            let g = geometry(&fine, &coarse, &h).unwrap();
            assert!(g.numerical_boundary_measure >= -1e-14);
            assert!(g.numerical_boundary_measure <= 1.0 + 1e-14);
        }
    }

    #[test]
    fn sequencing_guess_examples() {
        let h = MeshHierarchy::build(1, 4, 2).unwrap();
        // coarse n=4 inactive {2}: fine guess = nodes {3,4,5} on n=8
        let coarse = nodes_1d(0, &[2]);
        let guess = grid_sequencing_guess(&coarse, &h).unwrap();
        assert_eq!(guess, nodes_1d(1, &[3, 4, 5]));
        // all -> all, empty -> empty
        let all = InactiveSet::all(h.level(0));
        assert_eq!(grid_sequencing_guess(&all, &h).unwrap().len(), 7);
        let none = InactiveSet::empty(0);
        assert!(grid_sequencing_guess(&none, &h).unwrap().is_empty());
    }

    #[test]
    fn log_line_is_sorted_indices() {
        let s = InactiveSet::new(0, vec![5, 1, 3, 1]);
        assert_eq!(s.to_log_line(), "1 3 5");
    }
}
