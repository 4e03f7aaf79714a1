//! Experiment configurations, target-data construction, table emission and
//! the acceptance checks backing the CLI `--check` mode.

use crate::mesh::FeVector;
use crate::operators::MultigridVariant;
use crate::poisson::PoissonOperator;
use crate::spectral::{self, DistanceRow};
use crate::ssnm::{grid_sequenced_solve, ControlProblem, InnerSolver, SsnmOptions};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

/// Reference spectral-distance decay for the default 1D fixed-region
/// configuration (regression targets, 5% relative).
pub const REFERENCE_D: [f64; 6] = [0.0023, 0.0016, 0.0011, 7.4617e-4, 5.1996e-4, 3.6372e-4];

/// Reference consecutive ratios for the same run (targets, 0.02 absolute).
pub const REFERENCE_RATIOS: [f64; 5] = [1.4610, 1.4506, 1.4421, 1.4351, 1.4295];

/// Reference preconditioned-CGS iteration counts per outer iteration for the
/// 2D problem at `beta = 1e-4`, one column per grid `n = 64, 128, 256, 512`.
pub const REFERENCE_CGS: [&[usize]; 4] = [&[2, 7, 6, 6, 6], &[4, 6, 6, 6], &[4, 5, 5, 5], &[4, 4, 4, 4]];

/// Reference outer iteration counts for the same columns.
pub const REFERENCE_OUTER: [usize; 4] = [5, 3, 4, 4];

/// Plain CSV-backed result table with a config echo header.
#[derive(Debug, Clone)]
pub struct TableArtifact {
    pub title: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub config_echo: String,
    pub config_hash: String,
}

impl TableArtifact {
    pub fn new<T: Serialize>(title: &str, columns: &[&str], config: &T) -> Self {
        let echo = toml::to_string(config).unwrap_or_default();
        let hash = fnv1a(echo.as_bytes());
        TableArtifact {
            title: title.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            config_echo: echo,
            config_hash: format!("{hash:016x}"),
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.title));
        for line in self.config_echo.lines() {
            out.push_str(&format!("# {line}\n"));
        }
        out.push_str(&format!("# config-hash = {}\n", self.config_hash));
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Outcome of one acceptance check.
#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckOutcome {
            name: name.to_string(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "[{}] {} — {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

// ---------------------------------------------------------------------------
// spectral-distance decay (1D fixed region)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct FixedRegionConfig {
    /// Coarse subdivisions of the first table row (the fine grid has `2 n0`).
    pub n0: usize,
    /// Number of table rows (grids `n0, 2 n0, ...`).
    pub levels: usize,
    pub beta: f64,
    pub region_lo: f64,
    pub region_hi: f64,
}

impl Default for FixedRegionConfig {
    fn default() -> Self {
        FixedRegionConfig {
            n0: 16,
            levels: 6,
            beta: 1.0,
            region_lo: 0.125,
            region_hi: 0.75,
        }
    }
}

impl FixedRegionConfig {
    pub fn coarse_ns(&self) -> Vec<usize> {
        (0..self.levels).map(|j| self.n0 << j).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.beta <= 0.0 {
            return Err(Error::InvalidParameter("beta must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.region_lo)
            || !(0.0..=1.0).contains(&self.region_hi)
            || self.region_lo > self.region_hi
        {
            return Err(Error::InvalidParameter(
                "inactive region must be a sub-interval of [0, 1]".into(),
            ));
        }
        Ok(())
    }
}

pub struct FixedRegionOutput {
    pub rows: Vec<DistanceRow>,
    pub artifact: TableArtifact,
}

/// Spectral-distance decay table for the fixed 1D inactive region.
pub fn run_fixed_region_decay(config: &FixedRegionConfig) -> Result<FixedRegionOutput> {
    config.validate()?;
    let rows = spectral::spectral_distance_table(
        1,
        &config.coarse_ns(),
        config.region_lo,
        config.region_hi,
        config.beta,
    )?;
    let mut artifact = TableArtifact::new(
        "spectral distance decay, fixed 1D inactive region",
        &["n", "d", "ratio"],
        config,
    );
    for r in &rows {
        artifact.push_row(vec![
            r.n.to_string(),
            format!("{:.6e}", r.d),
            r.ratio.map(|x| format!("{x:.4}")).unwrap_or_default(),
        ]);
    }
    Ok(FixedRegionOutput { rows, artifact })
}

/// Checks the decay values, ratios and the square-root-of-two trend against
/// the reference table (defaults only).
pub fn check_fixed_region_decay(rows: &[DistanceRow]) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let ds: Vec<f64> = rows.iter().map(|r| r.d).collect();
    let ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    let d_ok = ds.len() == REFERENCE_D.len()
        && ds
            .iter()
            .zip(REFERENCE_D)
            .all(|(&d, t)| (d - t).abs() <= 0.05 * t);
    out.push(CheckOutcome::new(
        "spectral distances within 5% of the reference values",
        d_ok,
        format!("d = {:?}", ds.iter().map(|d| format!("{d:.5e}")).collect::<Vec<_>>()),
    ));
    let r_ok = ratios.len() == REFERENCE_RATIOS.len()
        && ratios
            .iter()
            .zip(REFERENCE_RATIOS)
            .all(|(&r, t)| (r - t).abs() <= 0.02);
    out.push(CheckOutcome::new(
        "consecutive ratios within 0.02 of the reference values",
        r_ok,
        format!("ratios = {:?}", ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>()),
    ));
    let last_ok = ratios
        .last()
        .map(|&r| (1.40..=1.45).contains(&r))
        .unwrap_or(false);
    let monotone = ratios.windows(2).all(|w| w[1] <= w[0] + 1e-12)
        && ratios.iter().all(|&r| r >= std::f64::consts::SQRT_2 - 0.02);
    out.push(CheckOutcome::new(
        "ratio sequence decreases monotonically toward sqrt(2)",
        last_ok && monotone,
        format!(
            "final ratio = {:.4}",
            ratios.last().copied().unwrap_or(f64::NAN)
        ),
    ));
    out
}

// ---------------------------------------------------------------------------
// eigenvalue dump for a single pair
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumConfig {
    pub dim: usize,
    /// Coarse subdivisions per side (the fine grid has `2n`).
    pub coarse_n: usize,
    pub beta: f64,
    pub region_lo: f64,
    pub region_hi: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            dim: 1,
            coarse_n: 16,
            beta: 1.0,
            region_lo: 0.125,
            region_hi: 0.75,
        }
    }
}

pub struct SpectrumOutput {
    pub report: spectral::SpectralReport,
    pub artifact: TableArtifact,
}

/// Full eigenvalue dump of one preconditioned pair.
pub fn run_spectrum(config: &SpectrumConfig) -> Result<SpectrumOutput> {
    if config.beta <= 0.0 {
        return Err(Error::InvalidParameter("beta must be positive".into()));
    }
    let report = spectral::fixed_region_spectrum(
        config.dim,
        config.coarse_n,
        config.region_lo,
        config.region_hi,
        config.beta,
    )?;
    let mut artifact = TableArtifact::new(
        "eigenvalues of the preconditioned operator",
        &["re", "im", "dist_to_one"],
        config,
    );
    let mut sorted = report.eigenvalues.clone();
    sorted.sort_by(|a, b| {
        ((b - 1.0).norm())
            .partial_cmp(&(a - 1.0).norm())
            .unwrap()
    });
    for l in &sorted {
        artifact.push_row(vec![
            format!("{:.12e}", l.re),
            format!("{:.12e}", l.im),
            format!("{:.6e}", (l - 1.0).norm()),
        ]);
    }
    artifact.push_row(vec!["d".into(), format!("{:.6e}", report.d), String::new()]);
    Ok(SpectrumOutput { report, artifact })
}

/// Average geometric decay factor of the ten largest `|lambda - 1|`.
pub fn eigenvalue_decay_factor(report: &spectral::SpectralReport) -> f64 {
    let d = &report.sorted_distances;
    let take = d.len().min(10);
    if take < 2 || d[take - 1] <= 0.0 {
        return f64::INFINITY;
    }
    (d[0] / d[take - 1]).powf(1.0 / (take as f64 - 1.0))
}

pub fn check_spectrum(report: &spectral::SpectralReport) -> Vec<CheckOutcome> {
    let factor = eigenvalue_decay_factor(report);
    vec![
        CheckOutcome::new(
            "eigenvalues cluster at 1 (average decay factor >= 1.5 over the top ten)",
            factor >= 1.5,
            format!("factor = {factor:.3}"),
        ),
        CheckOutcome::new(
            "preconditioner close to symmetric (relative asymmetry < 0.05)",
            report.asymmetry < 0.05,
            format!("asymmetry = {:.3e}", report.asymmetry),
        ),
    ]
}

// ---------------------------------------------------------------------------
// norm gap ||G - M|| scaling
// ---------------------------------------------------------------------------

pub struct NormGapOutput {
    /// `(coarse n, ||G - M||_2)` per table row.
    pub gaps: Vec<(usize, f64)>,
    /// Log-log slope of the gap against the fine mesh size.
    pub slope: f64,
    pub artifact: TableArtifact,
}

/// Spectral norm by power iteration on `D^T D`.
fn two_norm(m: &DMatrix<f64>) -> f64 {
    let n = m.ncols();
    if n == 0 {
        return 0.0;
    }
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut s = 0.0;
    for _ in 0..200 {
        let w = m.transpose() * (m * &v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let v_new = w / nw;
        let s_new = nw.sqrt();
        if (s_new - s).abs() <= 1e-12 * s_new {
            return s_new;
        }
        s = s_new;
        v = v_new;
    }
    s
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (sx, sy) = points
        .iter()
        .fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let num: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// Measures the dense operator gap `||G - M||_2` over the fixed-region
/// family and its scaling with the mesh size.
pub fn run_norm_gap(config: &FixedRegionConfig) -> Result<NormGapOutput> {
    config.validate()?;
    let mut gaps = Vec::new();
    let mut points = Vec::new();
    for n in config.coarse_ns() {
        let (g, m) = spectral::fixed_region_pair(
            1,
            n,
            config.region_lo,
            config.region_hi,
            config.beta,
        )?;
        let gap = two_norm(&(g - m));
        gaps.push((n, gap));
        let h_fine = 1.0 / (2 * n) as f64;
        points.push((h_fine.ln(), gap.ln()));
    }
    let slope = fit_slope(&points);
    let mut artifact = TableArtifact::new(
        "operator gap ||G - M|| over the fixed 1D inactive region",
        &["n", "gap"],
        config,
    );
    for (n, gap) in &gaps {
        artifact.push_row(vec![n.to_string(), format!("{gap:.6e}")]);
    }
    artifact.push_row(vec!["slope".into(), format!("{slope:.4}")]);
    Ok(NormGapOutput {
        gaps,
        slope,
        artifact,
    })
}

pub fn check_norm_gap(output: &NormGapOutput) -> Vec<CheckOutcome> {
    vec![CheckOutcome::new(
        "operator-gap log-log slope in [0.4, 0.6]",
        (0.4..=0.6).contains(&output.slope),
        format!("slope = {:.4}", output.slope),
    )]
}

// ---------------------------------------------------------------------------
// 2D constrained problem with grid sequencing
// ---------------------------------------------------------------------------

/// Bump-shaped target control and the noise applied to the induced state.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TargetParams {
    pub x0: [f64; 2],
    pub r: f64,
    pub alpha: f64,
    /// Noise amplitude relative to the max-norm of the noise-free state.
    pub noise: f64,
}

impl Default for TargetParams {
    fn default() -> Self {
        TargetParams {
            x0: [0.54, 0.62],
            r: 0.06,
            alpha: -0.1,
            noise: 0.05,
        }
    }
}

impl TargetParams {
    fn validate(&self) -> Result<()> {
        if self.r <= 0.0 {
            return Err(Error::InvalidParameter("r must be positive".into()));
        }
        if self.x0.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
            return Err(Error::InvalidParameter(
                "x0 must lie in the unit domain".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::InvalidParameter("noise must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Builds the target data `y_d` on one level: the target control
/// `u_d(x) = r^{-4}(r^2 - |x - x0|^2) + alpha` inside the ball of radius `r`
/// (and `alpha` outside) is interpolated at the nodes, the induced state is
/// `K u_d`, and per-node uniform noise bounded by `noise * max|state|` is
/// added (seeded, fresh per level).
pub fn build_target_data(
    poisson: &PoissonOperator,
    level: usize,
    params: &TargetParams,
    seed: u64,
) -> Result<FeVector> {
    params.validate()?;
    let mesh = poisson.hierarchy().level(level);
    let u_d = DVector::from_fn(mesh.num_interior(), |k, _| {
        let (i, j) = mesh.grid_coords(k);
        let c = mesh.coords(i, j);
        let d2 = match mesh.dim() {
            1 => (c[0] - params.x0[0]).powi(2),
            _ => (c[0] - params.x0[0]).powi(2) + (c[1] - params.x0[1]).powi(2),
        };
        if d2 < params.r * params.r {
            (params.r * params.r - d2) / params.r.powi(4) + params.alpha
        } else {
            params.alpha
        }
    });
    let state = poisson.apply_k(&FeVector::new(level, u_d))?;
    if params.noise == 0.0 {
        return Ok(state);
    }
    let amp = params.noise * state.values.amax();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (mesh.n() as u64));
    let noisy = DVector::from_fn(state.len(), |k, _| {
        state.values[k] + amp * rng.gen_range(-1.0..1.0)
    });
    Ok(FeVector::new(level, noisy))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstrainedRunConfig {
    /// Coarsest solved grid (its two-grid coarse space uses `n0 / 2`).
    pub n0: usize,
    /// Number of solved grids (`n0, 2 n0, ...`).
    pub levels: usize,
    pub beta: f64,
    pub target: TargetParams,
    pub seed: u64,
    pub inner_tol: f64,
    /// Allow grids beyond 512 subdivisions (off by default: the large
    /// columns are opt-in, not part of the acceptance gate).
    pub extended: bool,
}

impl Default for ConstrainedRunConfig {
    fn default() -> Self {
        ConstrainedRunConfig {
            n0: 64,
            levels: 4,
            beta: 1e-4,
            target: TargetParams::default(),
            seed: 13,
            inner_tol: 1e-8,
            extended: false,
        }
    }
}

/// Per-grid outcome of the sequenced constrained solve.
#[derive(Debug, Clone)]
pub struct LevelOutcome {
    pub n: usize,
    pub outer_iterations: usize,
    pub cgs_counts: Vec<usize>,
    pub cg_counts: Vec<usize>,
    pub cgs_matvecs: Vec<usize>,
    pub inactive_fraction: f64,
}

pub struct ConstrainedRunOutput {
    pub levels: Vec<LevelOutcome>,
    pub artifact: TableArtifact,
}

/// Grid-sequenced semismooth Newton solve of the 2D problem, recording
/// preconditioned CGS and unpreconditioned CG iteration counts per outer
/// iteration.
pub fn run_constrained_2d(config: &ConstrainedRunConfig) -> Result<ConstrainedRunOutput> {
    config.target.validate()?;
    if config.beta <= 0.0 {
        return Err(Error::InvalidParameter("beta must be positive".into()));
    }
    if config.n0 < 4 || config.n0 % 2 != 0 {
        return Err(Error::InvalidParameter(
            "coarsest grid must be an even number of subdivisions >= 4".into(),
        ));
    }
    let finest = config.n0 << (config.levels - 1);
    if finest > 512 && !config.extended {
        return Err(Error::InvalidParameter(format!(
            "grid {finest} exceeds the default ceiling of 512; set extended = true to opt in"
        )));
    }
    let hierarchy = Arc::new(crate::mesh::MeshHierarchy::build(
        2,
        config.n0 / 2,
        config.levels + 1,
    )?);
    let poisson = Arc::new(PoissonOperator::new(hierarchy));
    let problems = (1..=config.levels)
        .map(|level| {
            let y_d = build_target_data(&poisson, level, &config.target, config.seed)?;
            ControlProblem::new(poisson.clone(), config.beta, y_d)
        })
        .collect::<Result<Vec<_>>>()?;
    let options = SsnmOptions {
        inner_tol: config.inner_tol,
        compare_cg: true,
        ..SsnmOptions::default()
    };
    let results = grid_sequenced_solve(&problems, InnerSolver::CgsTwoGrid, &options)?;

    let mut artifact = TableArtifact::new(
        "preconditioned CGS vs CG iteration counts, constrained 2D problem",
        &["n", "outer", "cgs", "cg", "cgs_matvecs", "inactive_fraction"],
        config,
    );
    let mut levels = Vec::new();
    for (k, (state, report)) in results.iter().enumerate() {
        let n = config.n0 << k;
        let outcome = LevelOutcome {
            n,
            outer_iterations: report.outer_iterations,
            cgs_counts: report.records.iter().map(|r| r.inner_iterations).collect(),
            cg_counts: report
                .records
                .iter()
                .filter_map(|r| r.cg_iterations)
                .collect(),
            cgs_matvecs: report.records.iter().map(|r| r.inner_matvecs).collect(),
            inactive_fraction: state.inactive.fraction(
                poisson.hierarchy().level(state.inactive.level()),
            ),
        };
        for (row, rec) in report.records.iter().enumerate() {
            artifact.push_row(vec![
                n.to_string(),
                format!("{}", row + 1),
                rec.inner_iterations.to_string(),
                rec.cg_iterations.map(|c| c.to_string()).unwrap_or_default(),
                rec.inner_matvecs.to_string(),
                if row + 1 == report.outer_iterations {
                    format!("{:.4}", outcome.inactive_fraction)
                } else {
                    String::new()
                },
            ]);
        }
        levels.push(outcome);
    }
    Ok(ConstrainedRunOutput { levels, artifact })
}

/// Iteration-count band checks for the default `beta = 1e-4` configuration.
pub fn check_constrained_counts(levels: &[LevelOutcome]) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let outer_ok = levels.len() == REFERENCE_OUTER.len()
        && levels
            .iter()
            .zip(REFERENCE_OUTER)
            .all(|(l, t)| l.outer_iterations.abs_diff(t) <= 1);
    out.push(CheckOutcome::new(
        "outer iteration counts within 1 of the reference pattern",
        outer_ok,
        format!(
            "outer = {:?}",
            levels.iter().map(|l| l.outer_iterations).collect::<Vec<_>>()
        ),
    ));
    let mut cgs_ok = levels.len() == REFERENCE_CGS.len();
    for (l, reference) in levels.iter().zip(REFERENCE_CGS) {
        // compare the outer iterations present in both runs
        for (got, want) in l.cgs_counts.iter().zip(reference.iter()) {
            if got.abs_diff(*want) > 2 {
                cgs_ok = false;
            }
        }
    }
    out.push(CheckOutcome::new(
        "preconditioned CGS counts within 2 of the reference table",
        cgs_ok,
        format!(
            "cgs = {:?}",
            levels.iter().map(|l| l.cgs_counts.clone()).collect::<Vec<_>>()
        ),
    ));
    let cg_ok = levels
        .iter()
        .flat_map(|l| l.cg_counts.iter())
        .all(|&c| (10..=15).contains(&c));
    out.push(CheckOutcome::new(
        "unpreconditioned CG counts within 2 of 12-13",
        cg_ok,
        format!(
            "cg = {:?}",
            levels.iter().map(|l| l.cg_counts.clone()).collect::<Vec<_>>()
        ),
    ));
    // per-row monotonicity from the second grid on
    let tail: Vec<&LevelOutcome> = levels.iter().skip(1).collect();
    let rows = tail.iter().map(|l| l.cgs_counts.len()).min().unwrap_or(0);
    let mono = (0..rows).all(|r| {
        tail.windows(2)
            .all(|w| w[1].cgs_counts[r] <= w[0].cgs_counts[r])
    });
    out.push(CheckOutcome::new(
        "CGS counts non-increasing across grids in every outer-iteration row",
        mono,
        format!("checked {rows} rows"),
    ));
    out
}

/// Inactive-fraction checks on the coarsest solved grid.
pub fn check_inactive_fraction(beta: f64, fraction: f64) -> CheckOutcome {
    let (target, tol) = if beta == 1e-4 {
        (0.51, 0.03)
    } else {
        (0.115, 0.015)
    };
    CheckOutcome::new(
        &format!("inactive fraction near {target} at beta = {beta:e}"),
        (fraction - target).abs() <= tol,
        format!("fraction = {fraction:.4}"),
    )
}

// ---------------------------------------------------------------------------
// multigrid variant comparison
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CompareMgConfig {
    /// Base grid of the multigrid recursion.
    pub n_base: usize,
    /// Fine grids measured: `2 n_base, 4 n_base, ...` (`levels` of them).
    pub levels: usize,
    pub beta: f64,
    pub region_lo: f64,
    pub region_hi: f64,
}

impl Default for CompareMgConfig {
    fn default() -> Self {
        CompareMgConfig {
            n_base: 16,
            levels: 3,
            beta: 1.0,
            region_lo: 0.125,
            region_hi: 0.75,
        }
    }
}

/// `d` per fine grid for the two-grid, Newton-multigrid and naive-V-cycle
/// preconditioners (base level fixed at `n_base`).
#[derive(Debug, Clone)]
pub struct CompareMgRow {
    pub n: usize,
    pub d_two_grid: f64,
    pub d_newton: f64,
    pub d_naive: f64,
}

pub struct CompareMgOutput {
    pub rows: Vec<CompareMgRow>,
    pub artifact: TableArtifact,
}

pub fn run_compare_mg(config: &CompareMgConfig) -> Result<CompareMgOutput> {
    use crate::active_set::inactive_from_interval;
    use crate::krylov::{FnLinearMap, LinearMap};
    use crate::mesh::MeshHierarchy;
    use crate::operators::{
        GOperator, MultigridPreconditioner, PreconditionerConfig, TwoGridPreconditioner,
    };

    if config.beta <= 0.0 {
        return Err(Error::InvalidParameter("beta must be positive".into()));
    }
    let mut rows = Vec::new();
    for depth in 1..=config.levels {
        let hierarchy = Arc::new(MeshHierarchy::build(1, config.n_base, depth + 1)?);
        let poisson = Arc::new(PoissonOperator::new(hierarchy.clone()));
        let fine = inactive_from_interval(
            hierarchy.level(depth),
            config.region_lo,
            config.region_hi,
        );
        let n = hierarchy.level(depth).n();
        let g_op = GOperator::new(poisson.clone(), fine.clone(), config.beta)?;
        let g = spectral::assemble_dense(&g_op)?;

        let mut cfg = PreconditionerConfig::default();
        cfg.exact_coarse_solve = true;
        let tg = TwoGridPreconditioner::new(poisson.clone(), fine.clone(), config.beta, cfg)?;
        let m_tg = spectral::assemble_dense(&tg.m_map())?;
        let d_two_grid = spectral::generalized_spectrum(&g, &m_tg)?.d;

        let d_variant = |variant: MultigridVariant| -> Result<f64> {
            let z = MultigridPreconditioner::new(
                poisson.clone(),
                fine.clone(),
                config.beta,
                0,
                variant,
                PreconditionerConfig::default(),
            )?;
            // measure Z as an approximate inverse: eigenvalues of Z G
            let zg = FnLinearMap::new(z.dim(), false, |x: &DVector<f64>| {
                z.apply_z(&g_op.apply(x)).expect("multigrid apply failed")
            });
            let zg_dense = spectral::assemble_dense(&zg)?;
            let id = DMatrix::identity(z.dim(), z.dim());
            Ok(spectral::generalized_spectrum(&zg_dense, &id)?.d)
        };
        let d_newton = d_variant(MultigridVariant::Newton)?;
        let d_naive = d_variant(MultigridVariant::Naive)?;
        rows.push(CompareMgRow {
            n,
            d_two_grid,
            d_newton,
            d_naive,
        });
    }
    let mut artifact = TableArtifact::new(
        "preconditioner quality d per fine grid and multigrid variant",
        &["n", "d_two_grid", "d_newton", "d_naive"],
        config,
    );
    for r in &rows {
        artifact.push_row(vec![
            r.n.to_string(),
            format!("{:.6e}", r.d_two_grid),
            format!("{:.6e}", r.d_newton),
            format!("{:.6e}", r.d_naive),
        ]);
    }
    Ok(CompareMgOutput { rows, artifact })
}

pub fn check_compare_mg(output: &CompareMgOutput) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let newton_ok = output
        .rows
        .iter()
        .all(|r| r.d_newton <= 2.0 * r.d_two_grid && r.d_two_grid <= 2.0 * r.d_newton + 1e-12);
    out.push(CheckOutcome::new(
        "Newton multigrid d within a factor 2 of the two-grid d",
        newton_ok,
        format!(
            "d pairs = {:?}",
            output
                .rows
                .iter()
                .map(|r| format!("({:.3e}, {:.3e})", r.d_two_grid, r.d_newton))
                .collect::<Vec<_>>()
        ),
    ));
    let naive: Vec<f64> = output.rows.iter().map(|r| r.d_naive).collect();
    let (lo, hi) = naive
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &d| (l.min(d), h.max(d)));
    out.push(CheckOutcome::new(
        "naive V-cycle d stays flat across grids (max/min <= 1.3)",
        hi / lo <= 1.3,
        format!("d_naive = {naive:?}, max/min = {:.3}", hi / lo),
    ));
    out
}
