//! Matrix-free operators for the reduced inner systems.
//!
//! On the inactive index set `I` of level `j`, the reduced Hessian minor is
//! `G = P_I (K^* K + beta I) E_I` (`E_I` extends by zero, `P_I` restricts).
//! The two-grid pair is
//!
//! `M = J^I G_c Pi + beta (I - J^I Pi)`,  `S = M^{-1} = J^I G_c^{-1} Pi +
//! beta^{-1} (I - J^I Pi)`,
//!
//! where `Pi = (L_c^I)^{-1} (J^I)^T L_f^I` is the coefficient form of the
//! `L2`-orthogonal projection onto the coarse inactive space (`L^I` are
//! minors of the consistent mass matrices, `J^I` the interpolation restricted
//! to inactive indices on both levels). The multigrid operator `Z` lifts the
//! two-grid construction down a hierarchy of coarsened inactive sets,
//! optionally sharpening each level with the operator Newton step
//! `N(X) = 2X - X G X`.

use crate::active_set::{coarsen_inactive, InactiveSet};
use crate::krylov::{cg, LinearMap};
use crate::mesh::{FeVector, LevelMesh, MeshHierarchy};
use crate::poisson::PoissonOperator;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Extends an inactive-indexed vector by zero to all interior nodes.
pub fn extend_by_zero(set: &InactiveSet, v: &DVector<f64>, full_len: usize) -> DVector<f64> {
    assert_eq!(v.len(), set.len());
    let mut out = DVector::zeros(full_len);
    for (p, &i) in set.indices().iter().enumerate() {
        out[i] = v[p];
    }
    out
}

/// Restricts a full interior vector to the inactive indices.
pub fn restrict_to_set(set: &InactiveSet, full: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(set.len(), |p, _| full[set.indices()[p]])
}

/// Minor of the consistent mass matrix applied to an inactive-indexed vector.
fn mass_minor_apply(mesh: &LevelMesh, set: &InactiveSet, v: &DVector<f64>) -> DVector<f64> {
    let full = extend_by_zero(set, v, mesh.num_interior());
    restrict_to_set(set, &mesh.mass_apply(&full))
}

/// Reduced Hessian minor `G` on an inactive set.
#[derive(Debug)]
pub struct GOperator {
    poisson: Arc<PoissonOperator>,
    level: usize,
    inactive: InactiveSet,
    beta: f64,
}

impl GOperator {
    pub fn new(poisson: Arc<PoissonOperator>, inactive: InactiveSet, beta: f64) -> Result<Self> {
        if beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "regularization weight must be positive, got {beta}"
            )));
        }
        Ok(GOperator {
            level: inactive.level(),
            poisson,
            inactive,
            beta,
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn inactive(&self) -> &InactiveSet {
        &self.inactive
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mesh(&self) -> &LevelMesh {
        self.poisson.hierarchy().level(self.level)
    }

    /// Unreduced Hessian `K^* K u + beta u` on all interior nodes.
    pub fn hessian_full(&self, u: &FeVector) -> Result<FeVector> {
        let y = self.poisson.apply_k(u)?;
        let z = self.poisson.apply_k_adjoint(&y)?;
        Ok(FeVector::new(self.level, z.values + self.beta * &u.values))
    }
}

impl LinearMap for GOperator {
    fn dim(&self) -> usize {
        self.inactive.len()
    }

    fn apply(&self, u: &DVector<f64>) -> DVector<f64> {
        let full = extend_by_zero(&self.inactive, u, self.mesh().num_interior());
        let gu = self
            .hessian_full(&FeVector::new(self.level, full))
            .expect("inner Poisson solve failed while applying the reduced Hessian");
        restrict_to_set(&self.inactive, &gu.values)
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Tolerances for the solves hidden inside the preconditioners.
#[derive(Debug, Clone)]
pub struct PreconditionerConfig {
    /// Relative tolerance of the coarse `G` solve inside `S`.
    pub coarse_tol: f64,
    /// Relative tolerance of the coarse mass solve inside the projector.
    pub mass_tol: f64,
    /// Replace the iterative coarse solves by dense factorizations (used
    /// during spectral analysis so that solver noise stays out of the
    /// eigenvalues). Requires a coarse inactive dimension small enough to
    /// assemble densely.
    pub exact_coarse_solve: bool,
}

impl Default for PreconditionerConfig {
    fn default() -> Self {
        PreconditionerConfig {
            coarse_tol: 1e-10,
            mass_tol: 1e-12,
            exact_coarse_solve: false,
        }
    }
}

/// Assembles a linear map densely by applying it to unit vectors.
fn assemble(map: &dyn LinearMap) -> DMatrix<f64> {
    let n = map.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for k in 0..n {
        e[k] = 1.0;
        m.set_column(k, &map.apply(&e));
        e[k] = 0.0;
    }
    m
}

/// Transfer machinery between the inactive sets of two consecutive levels:
/// `J^I`, its transpose, and the projector `Pi`.
#[derive(Debug)]
struct InactiveTransfer {
    fine_level: usize,
    fine: InactiveSet,
    coarse: InactiveSet,
    mass_tol: f64,
    /// Dense Cholesky of the coarse inactive mass minor (exact mode only).
    lc_dense: Option<nalgebra::Cholesky<f64, nalgebra::Dyn>>,
}

impl InactiveTransfer {
    fn new(
        hierarchy: &MeshHierarchy,
        fine: InactiveSet,
        coarse: InactiveSet,
        mass_tol: f64,
        exact: bool,
    ) -> Self {
        let lc_dense = if exact && !coarse.is_empty() {
            let cm = hierarchy.level(coarse.level());
            let coarse_ref = &coarse;
            let map = crate::krylov::FnLinearMap::new(coarse.len(), true, |v: &DVector<f64>| {
                mass_minor_apply(cm, coarse_ref, v)
            });
            Some(
                assemble(&map)
                    .cholesky()
                    .expect("coarse inactive mass minor must be SPD"),
            )
        } else {
            None
        };
        InactiveTransfer {
            fine_level: fine.level(),
            fine,
            coarse,
            mass_tol,
            lc_dense,
        }
    }

    /// `J^I x`: interpolate a coarse-inactive vector to the fine inactive
    /// indices.
    fn embed(&self, hierarchy: &MeshHierarchy, x: &DVector<f64>) -> DVector<f64> {
        let full_c = extend_by_zero(
            &self.coarse,
            x,
            hierarchy.level(self.fine_level - 1).num_interior(),
        );
        let full_f = hierarchy.interpolation(self.fine_level).apply(&full_c);
        restrict_to_set(&self.fine, &full_f)
    }

    /// `Pi r = (L_c^I)^{-1} (J^I)^T L_f^I r`.
    fn project(&self, hierarchy: &MeshHierarchy, r: &DVector<f64>) -> Result<DVector<f64>> {
        if self.coarse.is_empty() {
            return Ok(DVector::zeros(0));
        }
        let fm = hierarchy.level(self.fine_level);
        let cm = hierarchy.level(self.fine_level - 1);
        let lr = mass_minor_apply(fm, &self.fine, r);
        let full_f = extend_by_zero(&self.fine, &lr, fm.num_interior());
        let jt = hierarchy
            .interpolation(self.fine_level)
            .apply_transpose(&full_f);
        let rhs = restrict_to_set(&self.coarse, &jt);
        if let Some(chol) = &self.lc_dense {
            return Ok(chol.solve(&rhs));
        }
        let map = crate::krylov::FnLinearMap::new(self.coarse.len(), true, |v: &DVector<f64>| {
            mass_minor_apply(cm, &self.coarse, v)
        });
        let res = cg(&map, &rhs, self.mass_tol, 10 * self.coarse.len() + 50)?;
        if !res.converged {
            return Err(Error::NoConvergence {
                what: "coarse mass solve in the inactive projector",
                iterations: res.iterations,
                residual: res.final_residual,
            });
        }
        Ok(res.x)
    }
}

/// The two-grid preconditioner pair `M` (for spectral analysis) and
/// `S = M^{-1}` (what Krylov iterations apply).
#[derive(Debug)]
pub struct TwoGridPreconditioner {
    poisson: Arc<PoissonOperator>,
    transfer: InactiveTransfer,
    coarse_g: GOperator,
    beta: f64,
    config: PreconditionerConfig,
    /// Dense LU of the coarse `G` minor (exact mode only).
    gc_dense: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
}

impl TwoGridPreconditioner {
    /// Builds the preconditioner for a fine inactive set; the coarse set is
    /// derived by the neighborhood coarsening rule.
    pub fn new(
        poisson: Arc<PoissonOperator>,
        fine: InactiveSet,
        beta: f64,
        config: PreconditionerConfig,
    ) -> Result<Self> {
        let hierarchy = poisson.hierarchy().clone();
        let coarse = coarsen_inactive(&fine, &hierarchy)?;
        let coarse_g = GOperator::new(poisson.clone(), coarse.clone(), beta)?;
        let gc_dense = if config.exact_coarse_solve && !coarse.is_empty() {
            Some(assemble(&coarse_g).lu())
        } else {
            None
        };
        let transfer = InactiveTransfer::new(
            &hierarchy,
            fine,
            coarse,
            config.mass_tol,
            config.exact_coarse_solve,
        );
        Ok(TwoGridPreconditioner {
            poisson,
            transfer,
            coarse_g,
            beta,
            config,
            gc_dense,
        })
    }

    pub fn fine_inactive(&self) -> &InactiveSet {
        &self.transfer.fine
    }

    pub fn coarse_inactive(&self) -> &InactiveSet {
        &self.transfer.coarse
    }

    pub fn dim(&self) -> usize {
        self.transfer.fine.len()
    }

    fn hierarchy(&self) -> &MeshHierarchy {
        self.poisson.hierarchy()
    }

    /// `Pi r`: coefficients of the `L2` projection onto the coarse inactive
    /// space.
    pub fn project_inactive(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        self.transfer.project(self.hierarchy(), r)
    }

    fn coarse_solve(&self, c: &DVector<f64>) -> Result<DVector<f64>> {
        if let Some(lu) = &self.gc_dense {
            return lu.solve(c).ok_or(Error::InvalidParameter(
                "dense coarse factorization is singular".into(),
            ));
        }
        let res = cg(
            &self.coarse_g,
            c,
            self.config.coarse_tol,
            10 * c.len() + 100,
        )?;
        if !res.converged {
            return Err(Error::NoConvergence {
                what: "coarse reduced-Hessian solve inside the two-grid preconditioner",
                iterations: res.iterations,
                residual: res.final_residual,
            });
        }
        Ok(res.x)
    }

    /// `S r = J^I G_c^{-1} Pi r + beta^{-1} (r - J^I Pi r)`.
    pub fn apply_s(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        if self.transfer.coarse.is_empty() {
            // no coarse inactive nodes: the preconditioner degenerates to
            // beta^{-1} I exactly
            return Ok(r / self.beta);
        }
        let c = self.project_inactive(r)?;
        let x = self.coarse_solve(&c)?;
        let h = self.hierarchy();
        let jc = self.transfer.embed(h, &c);
        let jx = self.transfer.embed(h, &x);
        Ok(jx + (r - jc) / self.beta)
    }

    /// `M u = J^I G_c Pi u + beta (u - J^I Pi u)`.
    pub fn apply_m(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if self.transfer.coarse.is_empty() {
            return Ok(self.beta * u);
        }
        let c = self.project_inactive(u)?;
        let gc = self.coarse_g.apply(&c);
        let h = self.hierarchy();
        let jgc = self.transfer.embed(h, &gc);
        let jc = self.transfer.embed(h, &c);
        Ok(jgc + self.beta * (u - jc))
    }

    /// `S` as a [`LinearMap`] (panics on inner-solve failure).
    pub fn s_map(&self) -> impl LinearMap + '_ {
        crate::krylov::FnLinearMap::new(self.dim(), false, move |r: &DVector<f64>| {
            self.apply_s(r)
                .expect("two-grid preconditioner apply failed")
        })
    }

    /// `M` as a [`LinearMap`] (panics on inner-solve failure).
    pub fn m_map(&self) -> impl LinearMap + '_ {
        crate::krylov::FnLinearMap::new(self.dim(), false, move |u: &DVector<f64>| {
            self.apply_m(u).expect("two-grid operator apply failed")
        })
    }
}

/// Recursion variant of the multigrid preconditioner.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MultigridVariant {
    /// Each level sharpens the coarser preconditioner with the operator
    /// Newton step `N(X) = 2X - X G X` before lifting it.
    Newton,
    /// Plain V-cycle lifting without the Newton step; its preconditioning
    /// quality stagnates at the base level's.
    Naive,
}

/// Multigrid preconditioner `Z` over the coarsened inactive hierarchy from
/// the fine level down to `j0`.
#[derive(Debug)]
pub struct MultigridPreconditioner {
    poisson: Arc<PoissonOperator>,
    fine_level: usize,
    j0: usize,
    beta: f64,
    variant: MultigridVariant,
    /// `transfers[k]` connects level `j0 + 1 + k` to the level below.
    transfers: Vec<InactiveTransfer>,
    /// `g_ops[k]` is the reduced Hessian on level `j0 + k` (the base entry
    /// is used for the exact solve, the others by the Newton step).
    g_ops: Vec<GOperator>,
    base_tol: f64,
}

impl MultigridPreconditioner {
    pub fn new(
        poisson: Arc<PoissonOperator>,
        fine: InactiveSet,
        beta: f64,
        j0: usize,
        variant: MultigridVariant,
        config: PreconditionerConfig,
    ) -> Result<Self> {
        let fine_level = fine.level();
        if j0 >= fine_level {
            return Err(Error::InvalidParameter(format!(
                "base level {j0} must lie below the fine level {fine_level}"
            )));
        }
        let hierarchy = poisson.hierarchy().clone();
        let mut sets = vec![fine];
        for _ in j0..fine_level {
            let next = coarsen_inactive(sets.last().unwrap(), &hierarchy)?;
            sets.push(next);
        }
        sets.reverse(); // sets[k] now lives on level j0 + k
        let transfers = (1..sets.len())
            .map(|k| {
                InactiveTransfer::new(
                    &hierarchy,
                    sets[k].clone(),
                    sets[k - 1].clone(),
                    config.mass_tol,
                    false,
                )
            })
            .collect();
        let g_ops = sets
            .iter()
            .map(|s| GOperator::new(poisson.clone(), s.clone(), beta))
            .collect::<Result<Vec<_>>>()?;
        Ok(MultigridPreconditioner {
            poisson,
            fine_level,
            j0,
            beta,
            variant,
            transfers,
            g_ops,
            base_tol: 1e-12,
        })
    }

    pub fn dim(&self) -> usize {
        self.g_ops.last().map(|g| g.inactive().len()).unwrap_or(0)
    }

    pub fn variant(&self) -> MultigridVariant {
        self.variant
    }

    fn base_solve(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        if r.is_empty() {
            return Ok(DVector::zeros(0));
        }
        let res = cg(&self.g_ops[0], r, self.base_tol, 10 * r.len() + 100)?;
        if !res.converged {
            return Err(Error::NoConvergence {
                what: "base-level reduced-Hessian solve in the multigrid preconditioner",
                iterations: res.iterations,
                residual: res.final_residual,
            });
        }
        Ok(res.x)
    }

    /// Applies the sub-preconditioner living on level `j0 + k`.
    fn apply_level(&self, k: usize, r: &DVector<f64>) -> Result<DVector<f64>> {
        if k == 0 {
            return self.base_solve(r);
        }
        let transfer = &self.transfers[k - 1];
        if transfer.coarse.is_empty() {
            return Ok(r / self.beta);
        }
        let h = self.poisson.hierarchy();
        let c = transfer.project(h, r)?;
        // the coarse-level action: Z_{k-1}, sharpened by the Newton step for
        // the newton variant (the step is the identity on the exact base
        // inverse, so it is skipped at k = 1)
        let y = match self.variant {
            MultigridVariant::Naive => self.apply_level(k - 1, &c)?,
            MultigridVariant::Newton => {
                if k == 1 {
                    self.apply_level(0, &c)?
                } else {
                    let z1 = self.apply_level(k - 1, &c)?;
                    let gz1 = self.g_ops[k - 1].apply(&z1);
                    let z2 = self.apply_level(k - 1, &gz1)?;
                    2.0 * z1 - z2
                }
            }
        };
        let jy = transfer.embed(h, &y);
        let jc = transfer.embed(h, &c);
        Ok(jy + (r - jc) / self.beta)
    }

    /// `Z r`.
    pub fn apply_z(&self, r: &DVector<f64>) -> Result<DVector<f64>> {
        self.apply_level(self.fine_level - self.j0, r)
    }

    /// `Z` as a [`LinearMap`] (panics on inner-solve failure).
    pub fn z_map(&self) -> impl LinearMap + '_ {
        crate::krylov::FnLinearMap::new(self.dim(), false, move |r: &DVector<f64>| {
            self.apply_z(r)
                .expect("multigrid preconditioner apply failed")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::active_set::inactive_from_interval;
    use crate::mesh::MeshHierarchy;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn poisson(dim: usize, n0: usize, levels: usize) -> Arc<PoissonOperator> {
        Arc::new(PoissonOperator::new(Arc::new(
            MeshHierarchy::build(dim, n0, levels).unwrap(),
        )))
    }

    /// Dense (K^2 + beta I) for 1D level meshes, with K = A^{-1} W.
    fn dense_hessian_1d(n: usize, beta: f64) -> DMatrix<f64> {
        let m = n - 1;
        let h = 1.0 / n as f64;
        let mut a = DMatrix::zeros(m, m);
        for i in 0..m {
            a[(i, i)] = 2.0 / h;
            if i > 0 {
                a[(i, i - 1)] = -1.0 / h;
                a[(i - 1, i)] = -1.0 / h;
            }
        }
        let k = a.lu().solve(&(h * DMatrix::identity(m, m))).unwrap();
        &k * &k + beta * DMatrix::identity(m, m)
    }

    fn random_vec(n: usize, rng: &mut impl Rng) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn g_matches_dense_minor() {
        let p = poisson(1, 4, 1);
        let dense = dense_hessian_1d(4, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        // all-inactive: full matrix
        let g = GOperator::new(p.clone(), InactiveSet::all(p.hierarchy().level(0)), 1.0).unwrap();
        for _ in 0..20 {
            let u = random_vec(3, &mut rng);
            let want = &dense * &u;
            let got = g.apply(&u);
            assert!((want - got).norm() < 1e-10);
        }
        // single inactive node 2 (interior index 1): the (1,1) minor
        let g1 = GOperator::new(p, InactiveSet::new(0, vec![1]), 1.0).unwrap();
        let got = g1.apply(&DVector::from_vec(vec![1.0]));
        assert_relative_eq!(got[0], dense[(1, 1)], epsilon = 1e-12);
        // zero in, zero out
        assert_eq!(g1.apply(&DVector::zeros(1))[0], 0.0);
    }

    #[test]
    fn g_is_symmetric_and_coercive() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        for (dim, n0) in [(1usize, 16usize), (2, 8)] {
            let p = poisson(dim, n0, 1);
            let mesh = p.hierarchy().level(0);
            let n_int = mesh.num_interior();
            let mask: Vec<bool> = (0..n_int).map(|_| rng.gen_bool(0.6)).collect();
            let set = InactiveSet::from_mask(0, &mask);
            let beta = 1e-3;
            let g = GOperator::new(p, set, beta).unwrap();
            for _ in 0..20 {
                let u = random_vec(g.dim(), &mut rng);
                let v = random_vec(g.dim(), &mut rng);
                let gu = g.apply(&u);
                let gv = g.apply(&v);
                let asym = (gu.dot(&v) - u.dot(&gv)).abs();
                assert!(asym <= 1e-10 * u.norm() * v.norm());
                assert!(gu.dot(&u) >= beta * u.dot(&u) * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn g_rejects_nonpositive_beta() {
        let p = poisson(1, 4, 1);
        let set = InactiveSet::all(p.hierarchy().level(0));
        assert!(GOperator::new(p, set, 0.0).is_err());
    }

    fn fixed_interval_tg(n0: usize, beta: f64) -> (Arc<PoissonOperator>, TwoGridPreconditioner) {
        let p = poisson(1, n0, 2);
        let fine = inactive_from_interval(p.hierarchy().level(1), 0.125, 0.75);
        let tg =
            TwoGridPreconditioner::new(p.clone(), fine, beta, PreconditionerConfig::default())
                .unwrap();
        (p, tg)
    }

    #[test]
    fn projector_is_idempotent_and_l2_contractive() {
        let (p, tg) = fixed_interval_tg(16, 1.0);
        let h = p.hierarchy();
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        for _ in 0..20 {
            let u = random_vec(tg.dim(), &mut rng);
            let c = tg.project_inactive(&u).unwrap();
            // idempotence: projecting the embedded projection returns it
            let jc = tg.transfer.embed(h, &c);
            let c2 = tg.project_inactive(&jc).unwrap();
            assert!((&c2 - &c).norm() < 1e-9 * (1.0 + c.norm()));
            // L2 contraction of the projected function
            let full_u = extend_by_zero(tg.fine_inactive(), &u, h.level(1).num_interior());
            let full_jc = extend_by_zero(tg.fine_inactive(), &jc, h.level(1).num_interior());
            let nu = h.level(1).l2_norm(&FeVector::new(1, full_u)).unwrap();
            let np = h.level(1).l2_norm(&FeVector::new(1, full_jc)).unwrap();
            assert!(np <= nu * (1.0 + 1e-10));
        }
    }

    #[test]
    fn projector_residual_is_l2_orthogonal_to_coarse_space() {
        let (p, tg) = fixed_interval_tg(16, 1.0);
        let h = p.hierarchy();
        let fm = h.level(1);
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let u = random_vec(tg.dim(), &mut rng);
        let c = tg.project_inactive(&u).unwrap();
        let jc = tg.transfer.embed(h, &c);
        let resid = extend_by_zero(tg.fine_inactive(), &(&u - &jc), fm.num_interior());
        for &kc in tg.coarse_inactive().indices() {
            let mut e = FeVector::zeros(0, h.level(0).num_interior());
            e.values[kc] = 1.0;
            let phi = h.interpolate(&e).unwrap();
            let ip = fm
                .l2_inner(&FeVector::new(1, resid.clone()), &phi)
                .unwrap();
            assert!(ip.abs() < 1e-10, "residual not orthogonal to hat {kc}");
        }
    }

    #[test]
    fn single_coarse_node_projection_formula() {
        // fine n=8 with inactive nodes {2..6} coarsens to the single coarse
        // node 2; the projection coefficient is <u, phi>_{L2} / ||phi||^2
        let p = poisson(1, 4, 2);
        let h = p.hierarchy();
        let fine = InactiveSet::new(1, vec![1, 2, 3, 4, 5]);
        let tg = TwoGridPreconditioner::new(
            p.clone(),
            fine.clone(),
            1.0,
            PreconditionerConfig::default(),
        )
        .unwrap();
        assert_eq!(tg.coarse_inactive().indices(), &[1]);
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let u = random_vec(5, &mut rng);
        let c = tg.project_inactive(&u).unwrap();
        let fm = h.level(1);
        let mut hat = FeVector::zeros(0, 3);
        hat.values[1] = 1.0;
        let phi = h.interpolate(&hat).unwrap();
        let full_u = FeVector::new(1, extend_by_zero(&fine, &u, fm.num_interior()));
        let want = fm.l2_inner(&full_u, &phi).unwrap() / fm.l2_inner(&phi, &phi).unwrap();
        assert_relative_eq!(c[0], want, epsilon = 1e-11);
    }

    #[test]
    fn s_and_m_are_inverses() {
        let (_p, tg) = fixed_interval_tg(16, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(127);
        for _ in 0..20 {
            let r = random_vec(tg.dim(), &mut rng);
            let sm = tg.apply_s(&tg.apply_m(&r).unwrap()).unwrap();
            let ms = tg.apply_m(&tg.apply_s(&r).unwrap()).unwrap();
            assert!((&sm - &r).norm() <= 1e-8 * r.norm());
            assert!((&ms - &r).norm() <= 1e-8 * r.norm());
        }
        // zero maps to zero
        let z = DVector::zeros(tg.dim());
        assert_eq!(tg.apply_s(&z).unwrap().norm(), 0.0);
        assert_eq!(tg.apply_m(&z).unwrap().norm(), 0.0);
    }

    #[test]
    fn empty_coarse_set_degenerates_to_scaled_identity() {
        // a lone fine inactive node coarsens to the empty set
        let p = poisson(1, 4, 2);
        let fine = InactiveSet::new(1, vec![3]);
        let beta = 0.25;
        let tg =
            TwoGridPreconditioner::new(p, fine, beta, PreconditionerConfig::default()).unwrap();
        assert!(tg.coarse_inactive().is_empty());
        let r = DVector::from_vec(vec![2.0]);
        assert_relative_eq!(tg.apply_s(&r).unwrap()[0], 8.0);
        assert_relative_eq!(tg.apply_m(&r).unwrap()[0], 0.5);
    }

    #[test]
    fn exact_mode_agrees_with_iterative_mode() {
        let p = poisson(1, 16, 2);
        let fine = inactive_from_interval(p.hierarchy().level(1), 0.125, 0.75);
        let it = TwoGridPreconditioner::new(
            p.clone(),
            fine.clone(),
            1.0,
            PreconditionerConfig::default(),
        )
        .unwrap();
        let mut cfg = PreconditionerConfig::default();
        cfg.exact_coarse_solve = true;
        let ex = TwoGridPreconditioner::new(p, fine, 1.0, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(131);
        for _ in 0..10 {
            let r = random_vec(it.dim(), &mut rng);
            let a = it.apply_s(&r).unwrap();
            let b = ex.apply_s(&r).unwrap();
            assert!((a - b).norm() < 1e-8 * r.norm());
        }
    }

    #[test]
    fn multigrid_with_one_level_equals_two_grid() {
        let p = poisson(1, 16, 3);
        let fine = inactive_from_interval(p.hierarchy().level(2), 0.125, 0.75);
        let tg = TwoGridPreconditioner::new(
            p.clone(),
            fine.clone(),
            1.0,
            PreconditionerConfig::default(),
        )
        .unwrap();
        for variant in [MultigridVariant::Newton, MultigridVariant::Naive] {
            let z = MultigridPreconditioner::new(
                p.clone(),
                fine.clone(),
                1.0,
                1,
                variant,
                PreconditionerConfig::default(),
            )
            .unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(137);
            for _ in 0..20 {
                let r = random_vec(tg.dim(), &mut rng);
                let a = tg.apply_s(&r).unwrap();
                let b = z.apply_z(&r).unwrap();
                assert!(
                    (a - b).norm() <= 1e-8 * r.norm(),
                    "Z(j0 = j-1) deviates from S for {variant:?}"
                );
            }
            assert_eq!(z.apply_z(&DVector::zeros(z.dim())).unwrap().norm(), 0.0);
        }
    }

    #[test]
    fn multigrid_rejects_bad_base_level() {
        let p = poisson(1, 16, 2);
        let fine = inactive_from_interval(p.hierarchy().level(1), 0.125, 0.75);
        assert!(MultigridPreconditioner::new(
            p,
            fine,
            1.0,
            1,
            MultigridVariant::Newton,
            PreconditionerConfig::default(),
        )
        .is_err());
    }

    #[test]
    fn unconstrained_reduction_matches_unrestricted_formula() {
        // with every index inactive on both levels, M equals the plain
        // unconstrained two-grid preconditioner J G_c Pi + beta (I - J Pi)
        let p = poisson(1, 8, 2);
        let h = p.hierarchy();
        let beta = 0.5;
        let fine = InactiveSet::all(h.level(1));
        let tg = TwoGridPreconditioner::new(p.clone(), fine, beta, PreconditionerConfig::default())
            .unwrap();
        assert_eq!(tg.coarse_inactive().len(), h.level(0).num_interior());
        let m = assemble(&tg.m_map());
        // unrestricted dense formula
        let (nf, nc) = (h.level(1).num_interior(), h.level(0).num_interior());
        let mut jd = DMatrix::zeros(nf, nc);
        for k in 0..nc {
            let mut e = FeVector::zeros(0, nc);
            e.values[k] = 1.0;
            jd.set_column(k, &h.interpolate(&e).unwrap().values);
        }
        let lf = {
            let mut m = DMatrix::zeros(nf, nf);
            for k in 0..nf {
                let mut e = DVector::zeros(nf);
                e[k] = 1.0;
                m.set_column(k, &h.level(1).mass_apply(&e));
            }
            m
        };
        let lc = {
            let mut m = DMatrix::zeros(nc, nc);
            for k in 0..nc {
                let mut e = DVector::zeros(nc);
                e[k] = 1.0;
                m.set_column(k, &h.level(0).mass_apply(&e));
            }
            m
        };
        let gc = {
            let gop = GOperator::new(p.clone(), InactiveSet::all(h.level(0)), beta).unwrap();
            assemble(&gop)
        };
        let pi = lc.lu().solve(&(jd.transpose() * lf)).unwrap();
        let want = &jd * gc * &pi + beta * (DMatrix::identity(nf, nf) - &jd * &pi);
        assert!((m - want).norm() < 1e-9);
    }
}
