//! Nested uniform mesh hierarchies on the unit interval / unit square.
//!
//! Level `j` subdivides each side of `Omega = [0,1]^d` into `n_j = n0 * 2^j`
//! intervals; the unknowns are the `(n_j - 1)^d` interior nodes, ordered
//! lexicographically. In 2D each grid square is split into two right
//! triangles along the diagonal of slope -1, so every coarse element is the
//! union of four fine elements and every coarse node coincides with a fine
//! node (fine grid index = 2 * coarse grid index per axis).
//!
//! The mesh-dependent inner product is the vertex quadrature
//! `<u,v>_j = sum_i w_i u(P_i) v(P_i)` with `w_i = nu^{-1} sum_{T ∋ P_i} vol(T)`.
//! On these uniform grids all interior weights are equal: `w = h` in 1D and
//! `w = h^2` in 2D.

use crate::sparse::CsrMatrix;
use crate::{Error, Result};
use nalgebra::DVector;

/// Coefficient vector of a piecewise-linear function on level `level`:
/// nodal values at interior nodes, boundary values implicitly zero.
#[derive(Debug, Clone)]
pub struct FeVector {
    pub level: usize,
    pub values: DVector<f64>,
}

impl FeVector {
    pub fn new(level: usize, values: DVector<f64>) -> Self {
        FeVector { level, values }
    }

    pub fn zeros(level: usize, len: usize) -> Self {
        FeVector {
            level,
            values: DVector::zeros(len),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.len() == 0
    }
}

/// Element of a level mesh: an interval in 1D, a right triangle in 2D.
///
/// A triangle is addressed by its grid square `(a, b)` (cell coordinates,
/// `0 <= a,b < n`) and whether it is the upper-right half of the square.
/// The lower-left half has vertices `(a,b), (a+1,b), (a,b+1)`, the
/// upper-right half `(a+1,b), (a+1,b+1), (a,b+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    Interval { left: usize },
    Triangle { a: usize, b: usize, upper: bool },
}

impl Element {
    /// Vertex grid coordinates (including boundary vertices).
    pub fn vertices(&self) -> Vec<(usize, usize)> {
        match *self {
            Element::Interval { left } => vec![(left, 0), (left + 1, 0)],
            Element::Triangle { a, b, upper: false } => vec![(a, b), (a + 1, b), (a, b + 1)],
            Element::Triangle { a, b, upper: true } => {
                vec![(a + 1, b), (a + 1, b + 1), (a, b + 1)]
            }
        }
    }

    /// Element volume on a grid with mesh size `h`.
    pub fn volume(&self, h: f64) -> f64 {
        match self {
            Element::Interval { .. } => h,
            Element::Triangle { .. } => 0.5 * h * h,
        }
    }

    /// The coarse element containing this fine element (nested refinement).
    pub fn parent(&self) -> Element {
        match *self {
            Element::Interval { left } => Element::Interval { left: left / 2 },
            Element::Triangle { a, b, upper } => {
                let (pa, pb) = (a % 2, b % 2);
                // Children of a lower triangle are the three corner lower
                // triangles plus the middle upper triangle of cell (0,0);
                // children of an upper triangle mirror this.
                let parent_upper = if pa == 0 && pb == 0 {
                    false
                } else if pa == 1 && pb == 1 {
                    true
                } else {
                    upper
                };
                Element::Triangle {
                    a: a / 2,
                    b: b / 2,
                    upper: parent_upper,
                }
            }
        }
    }
}

/// One level of the hierarchy.
#[derive(Debug, Clone)]
pub struct LevelMesh {
    level: usize,
    dim: usize,
    n: usize,
}

impl LevelMesh {
    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Subdivisions per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Number of interior nodes `N_j = (n-1)^d`.
    pub fn num_interior(&self) -> usize {
        (self.n - 1).pow(self.dim as u32)
    }

    /// Quadrature weight `w_i = nu^{-1} sum_{T ∋ P_i} vol(T)`; uniform on
    /// these grids (`h` in 1D, `h^2` in 2D).
    pub fn weight(&self) -> f64 {
        self.h().powi(self.dim as i32)
    }

    pub fn num_elements(&self) -> usize {
        match self.dim {
            1 => self.n,
            _ => 2 * self.n * self.n,
        }
    }

    /// Lexicographic interior index of grid node `(i, j)`, or `None` for
    /// boundary or out-of-range nodes. In 1D pass `j = 0`.
    pub fn interior_index(&self, i: usize, j: usize) -> Option<usize> {
        let n = self.n;
        match self.dim {
            1 => {
                if (1..n).contains(&i) && j == 0 {
                    Some(i - 1)
                } else {
                    None
                }
            }
            _ => {
                if (1..n).contains(&i) && (1..n).contains(&j) {
                    Some((j - 1) * (n - 1) + (i - 1))
                } else {
                    None
                }
            }
        }
    }

    /// Grid coordinates of interior index `k` (inverse of `interior_index`).
    pub fn grid_coords(&self, k: usize) -> (usize, usize) {
        match self.dim {
            1 => (k + 1, 0),
            _ => {
                let m = self.n - 1;
                (k % m + 1, k / m + 1)
            }
        }
    }

    /// Whether grid node `(i, j)` lies on the boundary of `Omega`.
    pub fn on_boundary(&self, i: usize, j: usize) -> bool {
        match self.dim {
            1 => i == 0 || i == self.n,
            _ => i == 0 || i == self.n || j == 0 || j == self.n,
        }
    }

    /// Spatial coordinates of grid node `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> [f64; 2] {
        [i as f64 * self.h(), j as f64 * self.h()]
    }

    /// Grid coordinates of the nodes sharing an element with `(i, j)`
    /// (the node itself excluded; boundary nodes included).
    pub fn neighbors(&self, i: usize, j: usize) -> Vec<(usize, usize)> {
        let n = self.n as isize;
        let (i, j) = (i as isize, j as isize);
        let deltas: &[(isize, isize)] = match self.dim {
            1 => &[(-1, 0), (1, 0)],
            _ => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, -1), (-1, 1)],
        };
        deltas
            .iter()
            .map(|&(di, dj)| (i + di, j + dj))
            .filter(|&(a, b)| (0..=n).contains(&a) && (0..=n).contains(&b))
            .map(|(a, b)| (a as usize, b as usize))
            .collect()
    }

    /// Elements containing grid node `(i, j)` (the support of its nodal
    /// basis function).
    pub fn elements_touching(&self, i: usize, j: usize) -> Vec<Element> {
        let n = self.n;
        match self.dim {
            1 => {
                let mut out = Vec::new();
                if i > 0 {
                    out.push(Element::Interval { left: i - 1 });
                }
                if i < n {
                    out.push(Element::Interval { left: i });
                }
                out
            }
            _ => {
                let mut out = Vec::new();
                for a in i.saturating_sub(1)..=i.min(n - 1) {
                    for b in j.saturating_sub(1)..=j.min(n - 1) {
                        for upper in [false, true] {
                            let e = Element::Triangle { a, b, upper };
                            if e.vertices().contains(&(i, j)) {
                                out.push(e);
                            }
                        }
                    }
                }
                out
            }
        }
    }

    /// Iterates over every element of the level.
    pub fn elements(&self) -> Box<dyn Iterator<Item = Element> + '_> {
        let n = self.n;
        match self.dim {
            1 => Box::new((0..n).map(|left| Element::Interval { left })),
            _ => Box::new((0..n).flat_map(move |b| {
                (0..n).flat_map(move |a| {
                    [false, true]
                        .into_iter()
                        .map(move |upper| Element::Triangle { a, b, upper })
                })
            })),
        }
    }

    fn check(&self, u: &FeVector) -> Result<()> {
        if u.level != self.level {
            return Err(Error::LevelMismatch {
                expected: self.level,
                got: u.level,
            });
        }
        if u.len() != self.num_interior() {
            return Err(Error::LengthMismatch {
                expected: self.num_interior(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Mesh-dependent inner product `<u,v>_j = sum_i w_i u_i v_i`.
    pub fn discrete_inner(&self, u: &FeVector, v: &FeVector) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(self.weight() * u.values.dot(&v.values))
    }

    /// Discrete norm `|u|_j`.
    pub fn discrete_norm(&self, u: &FeVector) -> Result<f64> {
        Ok(self.discrete_inner(u, u)?.sqrt())
    }

    /// Consistent mass matrix applied to interior coefficients (exact `L2`
    /// products of piecewise-linear basis functions; boundary values zero).
    ///
    /// 1D stencil: `2h/3` diagonal, `h/6` for the two interval neighbors.
    /// 2D stencil: `h^2/2` diagonal, `h^2/12` for the six mesh neighbors.
    pub fn mass_apply(&self, u: &DVector<f64>) -> DVector<f64> {
        assert_eq!(u.len(), self.num_interior());
        let n = self.n;
        let h = self.h();
        let mut out = DVector::zeros(u.len());
        match self.dim {
            1 => {
                let (d, o) = (2.0 * h / 3.0, h / 6.0);
                for k in 0..u.len() {
                    let mut acc = d * u[k];
                    if k > 0 {
                        acc += o * u[k - 1];
                    }
                    if k + 1 < u.len() {
                        acc += o * u[k + 1];
                    }
                    out[k] = acc;
                }
            }
            _ => {
                let m = n - 1;
                let (d, o) = (h * h / 2.0, h * h / 12.0);
                for jj in 0..m {
                    for ii in 0..m {
                        let k = jj * m + ii;
                        let mut acc = d * u[k];
                        if ii > 0 {
                            acc += o * u[k - 1];
                        }
                        if ii + 1 < m {
                            acc += o * u[k + 1];
                        }
                        if jj > 0 {
                            acc += o * u[k - m];
                            if ii + 1 < m {
                                acc += o * u[k - m + 1];
                            }
                        }
                        if jj + 1 < m {
                            acc += o * u[k + m];
                            if ii > 0 {
                                acc += o * u[k + m - 1];
                            }
                        }
                        out[k] = acc;
                    }
                }
            }
        }
        out
    }

    /// Exact `L2` inner product of the piecewise-linear functions with
    /// coefficients `u`, `v` (via the consistent mass matrix).
    pub fn l2_inner(&self, u: &FeVector, v: &FeVector) -> Result<f64> {
        self.check(u)?;
        self.check(v)?;
        Ok(u.values.dot(&self.mass_apply(&v.values)))
    }

    pub fn l2_norm(&self, u: &FeVector) -> Result<f64> {
        Ok(self.l2_inner(u, u)?.sqrt())
    }
}

/// Nested hierarchy of uniform meshes, coarse to fine, with the
/// interpolation matrices `J_j : V_{j-1} -> V_j` stored per level pair.
#[derive(Debug)]
pub struct MeshHierarchy {
    dim: usize,
    levels: Vec<LevelMesh>,
    interpolations: Vec<CsrMatrix>,
}

impl MeshHierarchy {
    /// Builds `num_levels` nested grids with `n_j = n0 * 2^j` subdivisions
    /// per side.
    pub fn build(dim: usize, n0: usize, num_levels: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if n0 < 2 {
            return Err(Error::InvalidParameter(format!(
                "n0 must be at least 2, got {n0}"
            )));
        }
        if num_levels < 1 {
            return Err(Error::InvalidParameter(
                "num_levels must be positive".into(),
            ));
        }
        let levels: Vec<LevelMesh> = (0..num_levels)
            .map(|j| LevelMesh {
                level: j,
                dim,
                n: n0 << j,
            })
            .collect();
        let interpolations = (1..num_levels)
            .map(|j| build_interpolation(&levels[j - 1], &levels[j]))
            .collect();
        Ok(MeshHierarchy {
            dim,
            levels,
            interpolations,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, j: usize) -> &LevelMesh {
        &self.levels[j]
    }

    pub fn levels(&self) -> &[LevelMesh] {
        &self.levels
    }

    /// Interpolation matrix `J_j` mapping level `j-1` coefficients to level
    /// `j` coefficients (`j >= 1`).
    pub fn interpolation(&self, fine_level: usize) -> &CsrMatrix {
        &self.interpolations[fine_level - 1]
    }

    /// Fine interior index coinciding with coarse interior index `k_c` of
    /// level `fine_level - 1` (exact index arithmetic, never coordinates).
    pub fn fine_of_coarse(&self, fine_level: usize, k_c: usize) -> usize {
        let coarse = self.level(fine_level - 1);
        let fine = self.level(fine_level);
        let (i, j) = coarse.grid_coords(k_c);
        fine.interior_index(2 * i, 2 * j)
            .expect("coincident node of an interior coarse node is interior")
    }

    /// Coarse interior index coinciding with fine interior index `k_f`, if
    /// the fine node lies on the coarse grid.
    pub fn coarse_of_fine(&self, fine_level: usize, k_f: usize) -> Option<usize> {
        let fine = self.level(fine_level);
        let coarse = self.level(fine_level - 1);
        let (i, j) = fine.grid_coords(k_f);
        if i % 2 == 0 && j % 2 == 0 {
            coarse.interior_index(i / 2, j / 2)
        } else {
            None
        }
    }

    /// Interpolates `u` from its level to the next finer level. The result
    /// equals `u` pointwise as a function (`V_{j-1}` is a subspace of `V_j`).
    pub fn interpolate(&self, u: &FeVector) -> Result<FeVector> {
        if u.level + 1 >= self.num_levels() {
            return Err(Error::LevelMismatch {
                expected: self.num_levels().saturating_sub(2),
                got: u.level,
            });
        }
        self.level(u.level).check(u)?;
        let fine = u.level + 1;
        Ok(FeVector::new(fine, self.interpolation(fine).apply(&u.values)))
    }

    /// Restriction `R_{j-1} = 2^{-d} J_j^T`, the adjoint of the embedding
    /// with respect to the mesh-dependent inner products:
    /// `<u, v>_j = <R u, v>_{j-1}` for every coarse `v`.
    pub fn restrict(&self, u: &FeVector) -> Result<FeVector> {
        if u.level == 0 {
            return Err(Error::LevelMismatch {
                expected: 1,
                got: 0,
            });
        }
        self.level(u.level).check(u)?;
        let scale = 0.5f64.powi(self.dim as i32);
        let mut v = self.interpolation(u.level).apply_transpose(&u.values);
        v *= scale;
        Ok(FeVector::new(u.level - 1, v))
    }
}

fn build_interpolation(coarse: &LevelMesh, fine: &LevelMesh) -> CsrMatrix {
    let mut triplets = Vec::new();
    let mut push = |fi: usize, ci: Option<usize>, v: f64| {
        if let Some(c) = ci {
            triplets.push((fi, c, v));
        }
    };
    match fine.dim() {
        1 => {
            for k in 0..fine.num_interior() {
                let (i, _) = fine.grid_coords(k);
                if i % 2 == 0 {
                    push(k, coarse.interior_index(i / 2, 0), 1.0);
                } else {
                    push(k, coarse.interior_index((i - 1) / 2, 0), 0.5);
                    push(k, coarse.interior_index((i + 1) / 2, 0), 0.5);
                }
            }
        }
        _ => {
            for k in 0..fine.num_interior() {
                let (i, j) = fine.grid_coords(k);
                match (i % 2, j % 2) {
                    (0, 0) => push(k, coarse.interior_index(i / 2, j / 2), 1.0),
                    (1, 0) => {
                        push(k, coarse.interior_index((i - 1) / 2, j / 2), 0.5);
                        push(k, coarse.interior_index((i + 1) / 2, j / 2), 0.5);
                    }
                    (0, 1) => {
                        push(k, coarse.interior_index(i / 2, (j - 1) / 2), 0.5);
                        push(k, coarse.interior_index(i / 2, (j + 1) / 2), 0.5);
                    }
                    _ => {
                        // Midpoint of a slope -1 diagonal edge between coarse
                        // nodes ((i+1)/2, (j-1)/2) and ((i-1)/2, (j+1)/2).
                        push(k, coarse.interior_index((i + 1) / 2, (j - 1) / 2), 0.5);
                        push(k, coarse.interior_index((i - 1) / 2, (j + 1) / 2), 0.5);
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(fine.num_interior(), coarse.num_interior(), &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_fe(level: usize, len: usize, rng: &mut impl Rng) -> FeVector {
        FeVector::new(
            level,
            DVector::from_fn(len, |_, _| rng.gen_range(-1.0..1.0)),
        )
    }

    #[test]
    fn hierarchy_sizes_1d() {
        let h = MeshHierarchy::build(1, 16, 6).unwrap();
        let ns: Vec<usize> = h.levels().iter().map(|l| l.n()).collect();
        assert_eq!(ns, vec![16, 32, 64, 128, 256, 512]);
    }

    #[test]
    fn smallest_grid() {
        let h = MeshHierarchy::build(1, 2, 1).unwrap();
        let l = h.level(0);
        assert_eq!(l.num_interior(), 1);
        assert_eq!(l.coords(1, 0), [0.5, 0.0]);
    }

    #[test]
    fn counts_2d() {
        // (n-1)^2 interior nodes and 2 n^2 triangles, by enumeration.
        let h = MeshHierarchy::build(2, 4, 2).unwrap();
        assert_eq!(h.level(0).num_interior(), 9);
        assert_eq!(h.level(0).elements().count(), 32);
        assert_eq!(h.level(0).num_elements(), 32);
        assert_eq!(h.level(1).num_interior(), 49);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MeshHierarchy::build(1, 1, 3).is_err());
        assert!(MeshHierarchy::build(1, 4, 0).is_err());
        assert!(MeshHierarchy::build(3, 4, 1).is_err());
    }

    #[test]
    fn weights_sum_to_covered_volume() {
        for (dim, n0) in [(1, 4), (2, 4)] {
            let h = MeshHierarchy::build(dim, n0, 2).unwrap();
            for l in h.levels() {
                let total = l.weight() * l.num_interior() as f64;
                // union of elements touching interior nodes = all of Omega
                let vol: f64 = l.elements().map(|e| e.volume(l.h())).sum();
                assert_relative_eq!(vol, 1.0, epsilon = 1e-12);
                assert!(l.weight() > 0.0);
                // interior weights cover Omega minus the boundary ring of
                // element fractions owned by boundary vertices
                assert!(total < 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn discrete_inner_examples() {
        let h = MeshHierarchy::build(1, 4, 1).unwrap();
        let l = h.level(0);
        // u = v = basis function at node 2 of n=4: <u,v> = w = h = 1/4
        let mut phi = FeVector::zeros(0, 3);
        phi.values[1] = 1.0;
        assert_relative_eq!(l.discrete_inner(&phi, &phi).unwrap(), 0.25);
        // interpolant of 1 against itself: sum of weights = 3h
        let ones = FeVector::new(0, DVector::from_element(3, 1.0));
        assert_relative_eq!(l.discrete_inner(&ones, &ones).unwrap(), 0.75);
        // bilinearity with zero
        let z = FeVector::zeros(0, 3);
        assert_eq!(l.discrete_inner(&z, &ones).unwrap(), 0.0);
    }

    #[test]
    fn discrete_inner_level_mismatch() {
        let h = MeshHierarchy::build(1, 4, 2).unwrap();
        let a = FeVector::zeros(0, 3);
        let b = FeVector::zeros(1, 7);
        assert!(h.level(0).discrete_inner(&a, &b).is_err());
    }

    #[test]
    fn interpolate_hat_1d() {
        let h = MeshHierarchy::build(1, 2, 2).unwrap();
        let coarse = FeVector::new(0, DVector::from_vec(vec![1.0]));
        let fine = h.interpolate(&coarse).unwrap();
        assert_eq!(fine.values.as_slice(), &[0.5, 1.0, 0.5]);
        // zero maps to zero
        let z = h.interpolate(&FeVector::zeros(0, 1)).unwrap();
        assert!(z.values.iter().all(|&v| v == 0.0));
        // finest level rejected
        assert!(h.interpolate(&fine).is_err());
    }

    #[test]
    fn interpolate_reproduces_linears_2d() {
        let h = MeshHierarchy::build(2, 4, 2).unwrap();
        let (lc, lf) = (h.level(0), h.level(1));
        let f = |x: f64, y: f64| x + y;
        let coarse = FeVector::new(
            0,
            DVector::from_fn(lc.num_interior(), |k, _| {
                let (i, j) = lc.grid_coords(k);
                let c = lc.coords(i, j);
                f(c[0], c[1])
            }),
        );
        let fine = h.interpolate(&coarse).unwrap();
        for k in 0..lf.num_interior() {
            let (i, j) = lf.grid_coords(k);
            let c = lf.coords(i, j);
            // piecewise-linear interpolation reproduces x + y except where
            // the coarse function is cut off by the zero boundary values
            if i >= 2 && i <= lf.n() - 2 && j >= 2 && j <= lf.n() - 2 {
                assert_relative_eq!(fine.values[k], f(c[0], c[1]), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn restrict_unit_vector() {
        let h = MeshHierarchy::build(1, 4, 2).unwrap();
        // fine unit vector at the node coinciding with coarse node 2
        let mut u = FeVector::zeros(1, 7);
        let kf = h.fine_of_coarse(1, 1); // coarse interior index 1 = node 2
        u.values[kf] = 1.0;
        let r = h.restrict(&u).unwrap();
        assert_eq!(r.values.as_slice(), &[0.0, 0.5, 0.0]);
        assert!(h.restrict(&FeVector::zeros(0, 3)).is_err());
    }

    #[test]
    fn restriction_is_adjoint_of_embedding() {
        for (dim, n0) in [(1, 4), (2, 4)] {
            let h = MeshHierarchy::build(dim, n0, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            for j in 1..h.num_levels() {
                for _ in 0..20 {
                    let u = random_fe(j, h.level(j).num_interior(), &mut rng);
                    let v = random_fe(j - 1, h.level(j - 1).num_interior(), &mut rng);
                    let lhs = h.level(j).discrete_inner(&u, &h.interpolate(&v).unwrap()).unwrap();
                    let rhs = h
                        .level(j - 1)
                        .discrete_inner(&h.restrict(&u).unwrap(), &v)
                        .unwrap();
                    assert_relative_eq!(lhs, rhs, epsilon = 1e-13);
                }
            }
        }
    }

    #[test]
    fn interpolation_is_injective() {
        for (dim, n0) in [(1, 4), (2, 4)] {
            let h = MeshHierarchy::build(dim, n0, 2).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            for _ in 0..20 {
                let v = random_fe(0, h.level(0).num_interior(), &mut rng);
                let fine = h.interpolate(&v).unwrap();
                // coincident nodes carry the coarse values, so nonzero input
                // cannot interpolate to zero
                let mut max = 0.0f64;
                for k in 0..v.len() {
                    max = max.max((fine.values[h.fine_of_coarse(1, k)] - v.values[k]).abs());
                }
                assert!(max < 1e-15);
            }
        }
    }

    #[test]
    fn norm_equivalence_discrete_vs_l2() {
        // C1 ||u||_L2 <= |u|_j <= C2 ||u||_L2 with level-independent bounds;
        // for P1 on these meshes the ratio lies in [1, sqrt(3)].
        for (dim, n0, levels) in [(1, 4, 5), (2, 4, 4)] {
            let h = MeshHierarchy::build(dim, n0, levels).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            for l in h.levels() {
                for _ in 0..200 {
                    let u = random_fe(l.level(), l.num_interior(), &mut rng);
                    let dn = l.discrete_norm(&u).unwrap();
                    let l2 = l.l2_norm(&u).unwrap();
                    let ratio = dn / l2;
                    assert!(
                        (0.999..=1.7321).contains(&ratio),
                        "ratio {ratio} out of the P1 equivalence band at level {}",
                        l.level()
                    );
                }
            }
        }
    }

    #[test]
    fn parent_elements_tile_coarse_elements() {
        let h = MeshHierarchy::build(2, 4, 2).unwrap();
        let (lc, lf) = (h.level(0), h.level(1));
        use std::collections::HashMap;
        let mut child_volume: HashMap<Element, f64> = HashMap::new();
        for e in lf.elements() {
            *child_volume.entry(e.parent()).or_insert(0.0) += e.volume(lf.h());
        }
        for e in lc.elements() {
            assert_relative_eq!(child_volume[&e], e.volume(lc.h()), epsilon = 1e-14);
        }
    }

    #[test]
    fn mass_matrix_rows_sum_to_weight_in_the_interior() {
        // Away from the boundary the consistent mass row sums equal the
        // lumped weight (partition of unity).
        let h = MeshHierarchy::build(2, 8, 1).unwrap();
        let l = h.level(0);
        let ones = DVector::from_element(l.num_interior(), 1.0);
        let m = l.mass_apply(&ones);
        let (i, j) = (4, 4);
        let k = l.interior_index(i, j).unwrap();
        assert_relative_eq!(m[k], l.weight(), epsilon = 1e-14);
    }
}
