//! Matrix-free Krylov solvers over an abstract linear-map interface.
//!
//! `cg` handles the symmetric positive definite systems (reduced Hessian
//! minors, coarse mass systems); `cgs` (conjugate gradient squared) handles
//! the two-grid/multigrid preconditioned iteration, since the preconditioner
//! is slightly nonsymmetric. The preconditioner is applied on the left and
//! convergence is always tested on the true unpreconditioned relative
//! residual in the Euclidean norm on nodal coefficients.

use crate::Result;
use nalgebra::DVector;

/// Abstract `vector -> vector` linear operator.
pub trait LinearMap {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    /// Whether the operator is symmetric (in the Euclidean sense on nodal
    /// coefficients, which coincides with the mesh inner product because the
    /// weights are uniform).
    fn is_symmetric(&self) -> bool {
        false
    }
}

/// Linear map defined by a closure.
pub struct FnLinearMap<F: Fn(&DVector<f64>) -> DVector<f64>> {
    dim: usize,
    symmetric: bool,
    f: F,
}

impl<F: Fn(&DVector<f64>) -> DVector<f64>> FnLinearMap<F> {
    pub fn new(dim: usize, symmetric: bool, f: F) -> Self {
        FnLinearMap { dim, symmetric, f }
    }
}

impl<F: Fn(&DVector<f64>) -> DVector<f64>> LinearMap for FnLinearMap<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        (self.f)(x)
    }

    fn is_symmetric(&self) -> bool {
        self.symmetric
    }
}

/// Outcome of a Krylov solve.
#[derive(Debug, Clone)]
pub struct KrylovResult {
    pub x: DVector<f64>,
    pub iterations: usize,
    /// Recorded (recurrence) relative residuals, one per iteration.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// Number of applications of the system operator (excluding the final
    /// verification residual).
    pub matvec_count: usize,
    /// True relative residual `||b - A x|| / ||b||` of the returned iterate.
    pub final_residual: f64,
}

/// Conjugate gradients for an SPD operator. Stops when the recurrence
/// relative residual drops below `tol`; exceeding `maxit` is flagged via
/// `converged`, not an error. A non-positive curvature `p^T A p` is an error
/// (the operator is not SPD).
pub fn cg(a: &dyn LinearMap, b: &DVector<f64>, tol: f64, maxit: usize) -> Result<KrylovResult> {
    let nb = b.norm();
    let mut x = DVector::zeros(a.dim());
    if nb == 0.0 {
        return Ok(KrylovResult {
            x,
            iterations: 0,
            residual_history: Vec::new(),
            converged: true,
            matvec_count: 0,
            final_residual: 0.0,
        });
    }
    let mut r = b.clone();
    let mut p = r.clone();
    let mut rr = r.dot(&r);
    let mut history = Vec::new();
    let mut matvecs = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    for it in 0..maxit {
        let ap = a.apply(&p);
        matvecs += 1;
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(crate::Error::InvalidParameter(format!(
                "cg: non-positive curvature p^T A p = {pap:.3e}; operator is not SPD"
            )));
        }
        let alpha = rr / pap;
        x.axpy(alpha, &p, 1.0);
        r.axpy(-alpha, &ap, 1.0);
        let rel = r.norm() / nb;
        history.push(rel);
        iterations = it + 1;
        if rel <= tol {
            converged = true;
            break;
        }
        let rr_new = r.dot(&r);
        p = &r + (rr_new / rr) * p;
        rr = rr_new;
    }
    let final_residual = (b - a.apply(&x)).norm() / nb;
    Ok(KrylovResult {
        x,
        iterations,
        residual_history: history,
        converged,
        matvec_count: matvecs,
        final_residual,
    })
}

/// Conjugate gradient squared with a left preconditioner `minv ~ A^{-1}`.
///
/// Each iteration applies `A` twice and `minv` twice; the recorded residual
/// is the true unpreconditioned one (the recurrence keeps `r = b - A x`
/// explicitly). A near-zero `rho` triggers one restart with a fresh shadow
/// residual; a second breakdown returns `converged = false`.
pub fn cgs(
    a: &dyn LinearMap,
    minv: &dyn LinearMap,
    b: &DVector<f64>,
    tol: f64,
    maxit: usize,
) -> Result<KrylovResult> {
    let n = a.dim();
    let nb = b.norm();
    let mut x = DVector::zeros(n);
    if nb == 0.0 {
        return Ok(KrylovResult {
            x,
            iterations: 0,
            residual_history: Vec::new(),
            converged: true,
            matvec_count: 0,
            final_residual: 0.0,
        });
    }
    let mut r = b.clone();
    let mut rt = r.clone();
    let mut p = DVector::zeros(n);
    let mut q = DVector::zeros(n);
    let mut u;
    let mut rho_prev = 1.0;
    let mut first = true;
    let mut restarted = false;
    let mut history = Vec::new();
    let mut matvecs = 0usize;
    let mut converged = false;
    let mut iterations = 0usize;
    for it in 0..maxit {
        let mut rho = rt.dot(&r);
        if rho.abs() < 1e-300 * nb * nb {
            if restarted {
                iterations = it;
                break;
            }
            restarted = true;
            rt = r.clone();
            first = true;
            rho = rt.dot(&r);
            if rho.abs() < 1e-300 * nb * nb {
                iterations = it;
                break;
            }
        }
        if first {
            u = r.clone();
            p = u.clone();
            first = false;
        } else {
            let beta = rho / rho_prev;
            u = &r + beta * &q;
            p = &u + beta * (&q + beta * &p);
        }
        let phat = minv.apply(&p);
        let v = a.apply(&phat);
        matvecs += 1;
        let alpha = rho / rt.dot(&v);
        q = &u - alpha * &v;
        let uhat = minv.apply(&(&u + &q));
        x.axpy(alpha, &uhat, 1.0);
        r -= alpha * a.apply(&uhat);
        matvecs += 1;
        rho_prev = rho;
        let rel = r.norm() / nb;
        history.push(rel);
        iterations = it + 1;
        if rel <= tol {
            converged = true;
            break;
        }
    }
    let final_residual = (b - a.apply(&x)).norm() / nb;
    Ok(KrylovResult {
        x,
        iterations,
        residual_history: history,
        converged,
        matvec_count: matvecs,
        final_residual,
    })
}
