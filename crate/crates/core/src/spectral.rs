//! Dense spectral diagnostics for preconditioner quality.
//!
//! For the operator pair `(G, M)` the quality measure is
//! `d = max |ln lambda|` over the generalized eigenvalues `lambda` of
//! `(G, M)` (the spectrum of `M^{-1} G`), using the principal branch of the
//! logarithm. Eigenvalues on the branch cut `(-inf, 0]` are an error: both
//! operators must have positive definite symmetric part.

use crate::krylov::LinearMap;
use crate::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector};

/// Dimension cap for dense assembly and eigensolves.
pub const DENSE_THRESHOLD: usize = 4096;

/// Assembles a linear map into a dense matrix column by column.
pub fn assemble_dense(op: &dyn LinearMap) -> Result<DMatrix<f64>> {
    let n = op.dim();
    if n > DENSE_THRESHOLD {
        return Err(Error::DenseTooLarge {
            dim: n,
            cap: DENSE_THRESHOLD,
        });
    }
    let mut m = DMatrix::zeros(n, n);
    let mut e = DVector::zeros(n);
    for k in 0..n {
        e[k] = 1.0;
        m.set_column(k, &op.apply(&e));
        e[k] = 0.0;
    }
    Ok(m)
}

/// Eigenvalue diagnostics of a preconditioned operator pair.
#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// Generalized eigenvalues of `(G, M)`, i.e. the spectrum of `M^{-1}G`.
    pub eigenvalues: Vec<Complex<f64>>,
    /// `max |ln lambda|` (principal branch).
    pub d: f64,
    /// `|lambda_i - 1|`, sorted descending.
    pub sorted_distances: Vec<f64>,
    /// Eigenvector (unit Euclidean norm, real part) for the eigenvalue
    /// attaining `d`; empty when the pair is trivial.
    pub extremal_vector: DVector<f64>,
    /// Relative asymmetry `||M - M^T|| / ||M||` of the preconditioner.
    pub asymmetry: f64,
}

/// Computes the generalized spectrum of `(g, m)` via the formed product
/// `M^{-1} G` and a dense nonsymmetric eigensolver.
pub fn generalized_spectrum(g: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<SpectralReport> {
    let n = g.nrows();
    assert_eq!(g.ncols(), n);
    assert_eq!((m.nrows(), m.ncols()), (n, n));
    if n == 0 {
        return Ok(SpectralReport {
            eigenvalues: Vec::new(),
            d: 0.0,
            sorted_distances: Vec::new(),
            extremal_vector: DVector::zeros(0),
            asymmetry: 0.0,
        });
    }
    let asymmetry = (m - m.transpose()).norm() / m.norm();
    let lu = m.clone().lu();
    let t = lu.solve(g).ok_or(Error::InvalidParameter(
        "preconditioner matrix is singular".into(),
    ))?;
    let mut eigenvalues = dense_eigenvalues(&t)?;
    // de-noise tiny imaginary parts produced by the nonsymmetric solver
    for l in &mut eigenvalues {
        if l.im.abs() < 1e-10 * l.norm().max(1e-300) {
            l.im = 0.0;
        }
    }
    let mut d = 0.0f64;
    let mut extremal = eigenvalues[0];
    for &l in &eigenvalues {
        if l.im == 0.0 && l.re <= 0.0 {
            return Err(Error::BranchCut { re: l.re, im: l.im });
        }
        let dist = l.ln().norm();
        if dist > d {
            d = dist;
            extremal = l;
        }
    }
    let mut sorted_distances: Vec<f64> = eigenvalues.iter().map(|l| (l - 1.0).norm()).collect();
    sorted_distances.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let extremal_vector = extremal_eigenvector(&t, extremal);
    Ok(SpectralReport {
        eigenvalues,
        d,
        sorted_distances,
        extremal_vector,
        asymmetry,
    })
}

extern "C" {
    // LAPACK: eigenvalues of a general real matrix
    fn dgeev_(
        jobvl: *const u8,
        jobvr: *const u8,
        n: *const i32,
        a: *mut f64,
        lda: *const i32,
        wr: *mut f64,
        wi: *mut f64,
        vl: *mut f64,
        ldvl: *const i32,
        vr: *mut f64,
        ldvr: *const i32,
        work: *mut f64,
        lwork: *const i32,
        info: *mut i32,
    );
}

/// Eigenvalues of a general dense matrix (LAPACK `dgeev`).
fn dense_eigenvalues(t: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    let n = t.nrows() as i32;
    let mut a = t.clone(); // column-major, consumed by the factorization
    let mut wr = vec![0.0f64; t.nrows()];
    let mut wi = vec![0.0f64; t.nrows()];
    let mut info = 0i32;
    let jobv = b'N';
    let one = 1i32;
    let mut vdummy = 0.0f64;
    // workspace query, then the actual solve
    let mut work = vec![0.0f64; 1];
    let mut lwork = -1i32;
    unsafe {
        dgeev_(
            &jobv, &jobv, &n, a.as_mut_slice().as_mut_ptr(), &n,
            wr.as_mut_ptr(), wi.as_mut_ptr(),
            &mut vdummy, &one, &mut vdummy, &one,
            work.as_mut_ptr(), &lwork, &mut info,
        );
        lwork = work[0] as i32;
        work = vec![0.0f64; lwork.max(1) as usize];
        dgeev_(
            &jobv, &jobv, &n, a.as_mut_slice().as_mut_ptr(), &n,
            wr.as_mut_ptr(), wi.as_mut_ptr(),
            &mut vdummy, &one, &mut vdummy, &one,
            work.as_mut_ptr(), &lwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::InvalidParameter(format!(
            "eigensolver failed with status {info}"
        )));
    }
    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| Complex::new(re, im))
        .collect())
}

/// Shifted inverse iteration for the eigenvector of `t` at `lambda` (uses
/// the real part of the shift; the extremal eigenvalues of these pairs are
/// real).
fn extremal_eigenvector(t: &DMatrix<f64>, lambda: Complex<f64>) -> DVector<f64> {
    let n = t.nrows();
    let shift = lambda.re * (1.0 + 1e-10) + 1e-300;
    let shifted = t - shift * DMatrix::identity(n, n);
    let lu = shifted.lu();
    // deterministic start
    let mut v = DVector::from_fn(n, |k, _| 1.0 + (k as f64) * 1e-3);
    v /= v.norm();
    for _ in 0..50 {
        let mut w = match lu.solve(&v) {
            Some(w) => w,
            None => break,
        };
        let nw = w.norm();
        if !nw.is_finite() || nw == 0.0 {
            break;
        }
        w /= nw;
        if (&w - &v).norm() < 1e-13 || (&w + &v).norm() < 1e-13 {
            v = w;
            break;
        }
        v = w;
    }
    v
}

/// One row of a spectral-distance decay table.
#[derive(Debug, Clone)]
pub struct DistanceRow {
    /// Coarse subdivisions per side (the fine grid has `2n`).
    pub n: usize,
    pub d: f64,
    /// `d_{previous} / d` (absent on the first row).
    pub ratio: Option<f64>,
}

/// Spectral-distance decay for the fixed inactive region `[lo, hi]^d`:
/// for each coarse size `n` the pair is `(G, M)` on the fine grid `2n`, the
/// fine inactive set being the nodes inside the region and the coarse set its
/// neighborhood coarsening. Coarse solves inside `M` are dense so the
/// eigenvalues carry no iterative noise.
pub fn spectral_distance_table(
    dim: usize,
    coarse_ns: &[usize],
    lo: f64,
    hi: f64,
    beta: f64,
) -> Result<Vec<DistanceRow>> {
    let mut rows: Vec<DistanceRow> = Vec::new();
    for &n in coarse_ns {
        let report = fixed_region_spectrum(dim, n, lo, hi, beta)?;
        let ratio = rows.last().map(|prev| prev.d / report.d);
        rows.push(DistanceRow {
            n,
            d: report.d,
            ratio,
        });
    }
    Ok(rows)
}

/// Spectral report for one `(coarse n, fine 2n)` pair of the fixed-region
/// family.
pub fn fixed_region_spectrum(
    dim: usize,
    coarse_n: usize,
    lo: f64,
    hi: f64,
    beta: f64,
) -> Result<SpectralReport> {
    let (g, m) = fixed_region_pair(dim, coarse_n, lo, hi, beta)?;
    generalized_spectrum(&g, &m)
}

/// Dense `(G, M)` pair for the fixed-region family.
pub fn fixed_region_pair(
    dim: usize,
    coarse_n: usize,
    lo: f64,
    hi: f64,
    beta: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    use crate::active_set::inactive_from_interval;
    use crate::mesh::MeshHierarchy;
    use crate::operators::{GOperator, PreconditionerConfig, TwoGridPreconditioner};
    use crate::poisson::PoissonOperator;
    use std::sync::Arc;

    let hierarchy = Arc::new(MeshHierarchy::build(dim, coarse_n, 2)?);
    let poisson = Arc::new(PoissonOperator::new(hierarchy.clone()));
    let fine = inactive_from_interval(hierarchy.level(1), lo, hi);
    let g_op = GOperator::new(poisson.clone(), fine.clone(), beta)?;
    let mut cfg = PreconditionerConfig::default();
    cfg.exact_coarse_solve = true;
    let tg = TwoGridPreconditioner::new(poisson, fine, beta, cfg)?;
    let g = assemble_dense(&g_op)?;
    let m = assemble_dense(&tg.m_map())?;
    Ok((g, m))
}
