//! Primal-dual active-set semismooth Newton method for the discrete
//! box-constrained problem, with grid sequencing across levels.
//!
//! In the weight-scaled (function-valued) convention the KKT system reads
//! `(K^2 + beta I) u - K y_d - lambda = 0`, `u >= 0`, `lambda >= 0`,
//! `u . lambda = 0`. Given a guess of the inactive set `I`, one outer
//! iteration solves the reduced system `G u_I = (K y_d)_I`, sets `u = 0` on
//! the active indices and `lambda = (K^2 + beta I) u - K y_d` there
//! (`lambda = 0` on `I`), then reclassifies: active where `lambda - beta u >
//! 0`. The iteration terminates in finitely many steps when the active set
//! repeats; complementarity is exact at every iterate by construction.

use crate::active_set::{grid_sequencing_guess, InactiveSet};
use crate::krylov::{cg, cgs, KrylovResult};
use crate::mesh::FeVector;
use crate::operators::{
    extend_by_zero, restrict_to_set, GOperator, MultigridPreconditioner, MultigridVariant,
    PreconditionerConfig, TwoGridPreconditioner,
};
use crate::poisson::PoissonOperator;
use crate::{Error, Result};
use nalgebra::DVector;
use std::sync::Arc;

/// One discrete box-constrained problem instance.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub poisson: Arc<PoissonOperator>,
    pub level: usize,
    pub beta: f64,
    /// Target state (interior nodal values).
    pub y_d: FeVector,
}

impl ControlProblem {
    pub fn new(poisson: Arc<PoissonOperator>, beta: f64, y_d: FeVector) -> Result<Self> {
        if beta <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "regularization weight must be positive, got {beta}"
            )));
        }
        let level = y_d.level;
        if y_d.len() != poisson.hierarchy().level(level).num_interior() {
            return Err(Error::LengthMismatch {
                expected: poisson.hierarchy().level(level).num_interior(),
                got: y_d.len(),
            });
        }
        Ok(ControlProblem {
            poisson,
            level,
            beta,
            y_d,
        })
    }
}

/// Inner-solver selection for the reduced systems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    /// Unpreconditioned conjugate gradients.
    Cg,
    /// CGS preconditioned by the explicit two-grid inverse `S`.
    CgsTwoGrid,
    /// CGS preconditioned by the multigrid operator `Z` with base level `j0`.
    CgsMultigrid {
        j0: usize,
        variant: MultigridVariant,
    },
}

/// Options of the outer iteration.
#[derive(Debug, Clone)]
pub struct SsnmOptions {
    pub inner_tol: f64,
    pub inner_maxit: usize,
    pub max_outer: usize,
    pub preconditioner: PreconditionerConfig,
    /// Additionally solve every reduced system by unpreconditioned CG and
    /// record its iteration count (for efficiency comparisons).
    pub compare_cg: bool,
}

impl Default for SsnmOptions {
    fn default() -> Self {
        SsnmOptions {
            inner_tol: 1e-8,
            inner_maxit: 1000,
            max_outer: 50,
            preconditioner: PreconditionerConfig::default(),
            compare_cg: false,
        }
    }
}

/// Converged primal-dual state.
#[derive(Debug, Clone)]
pub struct SsnmState {
    pub u: FeVector,
    pub lambda: FeVector,
    pub inactive: InactiveSet,
    pub iterations: usize,
}

impl SsnmState {
    /// Active indices (complement of the inactive set).
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.u.len())
            .filter(|i| !self.inactive.contains(*i))
            .collect()
    }
}

/// Instrumentation of one outer iteration.
#[derive(Debug, Clone)]
pub struct OuterRecord {
    pub inactive_count: usize,
    pub inner_iterations: usize,
    pub inner_matvecs: usize,
    pub inner_residual: f64,
    /// Unpreconditioned CG iterations on the same system, when requested.
    pub cg_iterations: Option<usize>,
}

/// Full run report.
#[derive(Debug, Clone)]
pub struct SsnmReport {
    pub outer_iterations: usize,
    pub records: Vec<OuterRecord>,
    pub final_inactive_fraction: f64,
    /// `||(K^2 + beta I) u - K y_d - lambda|| / ||K y_d||` at the fixed point.
    pub stationarity_residual: f64,
}

fn inner_solve(
    problem: &ControlProblem,
    g: &GOperator,
    b: &DVector<f64>,
    solver: InnerSolver,
    options: &SsnmOptions,
) -> Result<KrylovResult> {
    match solver {
        InnerSolver::Cg => cg(g, b, options.inner_tol, options.inner_maxit),
        InnerSolver::CgsTwoGrid => {
            let tg = TwoGridPreconditioner::new(
                problem.poisson.clone(),
                g.inactive().clone(),
                problem.beta,
                options.preconditioner.clone(),
            )?;
            let result = cgs(g, &tg.s_map(), b, options.inner_tol, options.inner_maxit);
            result
        }
        InnerSolver::CgsMultigrid { j0, variant } => {
            let z = MultigridPreconditioner::new(
                problem.poisson.clone(),
                g.inactive().clone(),
                problem.beta,
                j0,
                variant,
                options.preconditioner.clone(),
            )?;
            let result = cgs(g, &z.z_map(), b, options.inner_tol, options.inner_maxit);
            result
        }
    }
}

/// Runs the primal-dual active-set iteration from an initial inactive guess.
pub fn ssnm_solve(
    problem: &ControlProblem,
    initial_inactive: &InactiveSet,
    solver: InnerSolver,
    options: &SsnmOptions,
) -> Result<(SsnmState, SsnmReport)> {
    if initial_inactive.level() != problem.level {
        return Err(Error::LevelMismatch {
            expected: problem.level,
            got: initial_inactive.level(),
        });
    }
    let mesh = problem.poisson.hierarchy().level(problem.level);
    let n_int = mesh.num_interior();
    let k_yd = problem.poisson.apply_k(&problem.y_d)?;
    let mut inactive = initial_inactive.clone();
    let mut records = Vec::new();

    for outer in 1..=options.max_outer {
        let g = GOperator::new(problem.poisson.clone(), inactive.clone(), problem.beta)?;
        let b = restrict_to_set(&inactive, &k_yd.values);
        let inner = inner_solve(problem, &g, &b, solver, options)?;
        if !inner.converged {
            return Err(Error::NoConvergence {
                what: "reduced inner solve in the semismooth Newton iteration",
                iterations: inner.iterations,
                residual: inner.final_residual,
            });
        }
        let cg_iterations = if options.compare_cg && solver != InnerSolver::Cg {
            Some(cg(&g, &b, options.inner_tol, options.inner_maxit)?.iterations)
        } else {
            None
        };
        records.push(OuterRecord {
            inactive_count: inactive.len(),
            inner_iterations: inner.iterations,
            inner_matvecs: inner.matvec_count,
            inner_residual: inner.final_residual,
            cg_iterations,
        });

        let u_full = extend_by_zero(&inactive, &inner.x, n_int);
        let u = FeVector::new(problem.level, u_full);
        // multiplier on the active indices; zero on the inactive ones
        let gu = g.hessian_full(&u)?;
        let mut lambda = &gu.values - &k_yd.values;
        for &i in inactive.indices() {
            lambda[i] = 0.0;
        }
        // reclassify: active where lambda - beta u > 0 (ties inactive)
        let mask: Vec<bool> = (0..n_int)
            .map(|i| !(lambda[i] - problem.beta * u.values[i] > 0.0))
            .collect();
        let next = InactiveSet::from_mask(problem.level, &mask);
        if next == inactive {
            let stat = (&gu.values - &k_yd.values - &lambda).norm()
                / k_yd.values.norm().max(f64::MIN_POSITIVE);
            let fraction = inactive.fraction(mesh);
            return Ok((
                SsnmState {
                    u,
                    lambda: FeVector::new(problem.level, lambda),
                    inactive,
                    iterations: outer,
                },
                SsnmReport {
                    outer_iterations: outer,
                    records,
                    final_inactive_fraction: fraction,
                    stationarity_residual: stat,
                },
            ));
        }
        inactive = next;
    }
    Err(Error::NoConvergence {
        what: "semismooth Newton outer iteration (active set kept changing)",
        iterations: options.max_outer,
        residual: f64::NAN,
    })
}

/// Grid-sequenced solve over consecutive levels: the first problem starts
/// from the all-inactive guess, each later one from the sequencing guess of
/// the previous converged inactive set. Problems must live on consecutive
/// ascending levels of one hierarchy.
pub fn grid_sequenced_solve(
    problems: &[ControlProblem],
    solver: InnerSolver,
    options: &SsnmOptions,
) -> Result<Vec<(SsnmState, SsnmReport)>> {
    let mut out = Vec::new();
    let mut guess: Option<InactiveSet> = None;
    for (k, problem) in problems.iter().enumerate() {
        if k > 0 && problem.level != problems[k - 1].level + 1 {
            return Err(Error::LevelMismatch {
                expected: problems[k - 1].level + 1,
                got: problem.level,
            });
        }
        let hierarchy = problem.poisson.hierarchy();
        let initial = match &guess {
            None => InactiveSet::all(hierarchy.level(problem.level)),
            Some(prev) => grid_sequencing_guess(prev, hierarchy)?,
        };
        let (state, report) = ssnm_solve(problem, &initial, solver, options)?;
        guess = Some(state.inactive.clone());
        out.push((state, report));
    }
    Ok(out)
}
