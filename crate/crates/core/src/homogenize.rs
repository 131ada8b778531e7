//! Effective-operator construction through the obstacle problem.
//!
//! For a shift level α, the obstacle problem for F(· + M) − α on a large
//! box has a contact set whose volume fraction concentrates, as the box
//! grows, at a deterministic density. The density is nonincreasing in α
//! and drops to zero as α crosses the effective value F̄(M); bisection over
//! α between the pointwise bounds of F(M, ·) therefore brackets F̄(M).
//! The remaining routines check the structural properties this
//! construction inherits (degenerate ellipticity, homogeneity, oddness,
//! monotonicity in the operator, effective uniform ellipticity), measure
//! corrector sublinearity, and run the two-scale convergence experiment
//! against a tabulated effective operator.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::grid::{FrameSet, GridDomain, GridFunction, Shape};
use crate::operators::{pucci, OperatorSpec, PucciSign};
use crate::parallel;
use crate::scheme::{CompiledOperator, EffectiveMode};
use crate::solver::{
    solve_dirichlet, solve_dirichlet_compiled, solve_obstacle_compiled, ObstacleSolution,
    SolveConfig,
};
use crate::sym::{Dim, SymMatrix};

/// Grid and solver parameters for homogenization runs.
#[derive(Debug, Clone)]
pub struct ObstacleGrid {
    /// Target lattice spacing; the actual spacing divides the box evenly.
    pub h: f64,
    /// Frame resolution K.
    pub k_res: usize,
    /// Hard cap on (t/h)^d.
    pub budget_points: usize,
    pub solve: SolveConfig,
}

impl Default for ObstacleGrid {
    fn default() -> Self {
        ObstacleGrid {
            h: 0.25,
            k_res: 4,
            budget_points: 1 << 23,
            solve: SolveConfig { tol: 1e-7, ..Default::default() },
        }
    }
}

impl ObstacleGrid {
    /// Centered box [−t/2, t/2]^d with an even number of cells per side.
    pub fn box_domain(&self, dim: Dim, t: f64) -> Result<Arc<GridDomain>> {
        let mut n = (t / self.h).round() as usize;
        if n % 2 == 1 {
            n += 1;
        }
        let n = n.max(4);
        if n.pow(dim.n() as u32) > self.budget_points {
            return Err(CoreError::Budget(format!(
                "box of size {t} at h={} needs {} points (cap {})",
                self.h,
                n.pow(dim.n() as u32),
                self.budget_points
            )));
        }
        let h_eff = t / n as f64;
        let half = t / 2.0;
        let shape = match dim {
            Dim::One => Shape::Box2 { lo: [-half, 0.0], hi: [half, 0.0] },
            Dim::Two => Shape::Box2 { lo: [-half, -half], hi: [half, half] },
        };
        GridDomain::new(dim, shape, h_eff, FrameSet::standard(dim, self.k_res)?)
    }
}

/// One contact-density observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensitySample {
    pub seed: u64,
    pub t: f64,
    pub alpha: f64,
    /// Contact fraction over the whole box.
    pub density: f64,
    /// Contact fraction excluding a margin of width √t at the boundary.
    pub density_interior: f64,
}

/// Contact density of the obstacle problem for F(· + M) − α on the box of
/// size t with the given environment seed.
pub fn contact_density(
    spec: &OperatorSpec,
    m: SymMatrix,
    alpha: f64,
    t: f64,
    seed: u64,
    grid: &ObstacleGrid,
) -> Result<DensitySample> {
    let sol = obstacle_solution(spec, m, alpha, t, seed, grid, None)?;
    Ok(density_of(&sol, t, alpha, seed))
}

fn density_of(sol: &ObstacleSolution, t: f64, alpha: f64, seed: u64) -> DensitySample {
    let dom = &sol.w.domain;
    let vol = dom.shape.volume(dom.dim);
    let margin = t.sqrt().min(t / 4.0);
    let (mi, vi) = sol.contact_measure_inset(margin);
    DensitySample {
        seed,
        t,
        alpha,
        density: sol.contact_measure / vol,
        density_interior: if vi > 0.0 { mi / vi } else { 0.0 },
    }
}

fn obstacle_solution(
    spec: &OperatorSpec,
    m: SymMatrix,
    alpha: f64,
    t: f64,
    seed: u64,
    grid: &ObstacleGrid,
    warm: Option<&GridFunction>,
) -> Result<ObstacleSolution> {
    let shifted = spec.reseeded(seed)?.shifted(m, alpha);
    let dom = match warm {
        Some(w) => w.domain.clone(),
        None => grid.box_domain(spec.dim(), t)?,
    };
    let op = CompiledOperator::compile(&shifted, &dom)?;
    solve_obstacle_compiled(&op, warm, &grid.solve)
}

/// Densities at each probed α, per seed.
#[derive(Debug, Clone, Default)]
pub struct DensityCurve {
    pub samples: Vec<DensitySample>,
}

impl DensityCurve {
    /// Per-seed monotonicity audit: densities must be nonincreasing in α.
    /// Returns the worst increase observed between consecutive α levels.
    pub fn monotonicity_violation(&self, use_interior: bool) -> f64 {
        let mut worst: f64 = 0.0;
        let mut keys: Vec<(u64, u64)> = self
            .samples
            .iter()
            .map(|s| (s.seed, s.t.to_bits()))
            .collect();
        keys.sort_unstable();
        keys.dedup();
        for (sd, tb) in keys {
            let mut pts: Vec<(f64, f64)> = self
                .samples
                .iter()
                .filter(|s| s.seed == sd && s.t.to_bits() == tb)
                .map(|s| (s.alpha, if use_interior { s.density_interior } else { s.density }))
                .collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            for w in pts.windows(2) {
                worst = worst.max(w[1].1 - w[0].1);
            }
        }
        worst
    }
}

/// Bisection bracket for F̄(M) with its diagnostics.
#[derive(Debug, Clone)]
pub struct EffectiveEstimate {
    pub m: SymMatrix,
    pub fbar_lo: f64,
    pub fbar_hi: f64,
    pub eta: f64,
    pub n_seeds: usize,
    pub t: f64,
    pub curve: DensityCurve,
    /// |midpoint(t) − midpoint(2t)| when the budget allowed a repeat.
    pub drift: Option<f64>,
}

impl EffectiveEstimate {
    pub fn mid(&self) -> f64 {
        0.5 * (self.fbar_lo + self.fbar_hi)
    }

    pub fn width(&self) -> f64 {
        self.fbar_hi - self.fbar_lo
    }
}

/// Knobs for the bisection.
#[derive(Debug, Clone)]
pub struct FbarArgs {
    pub t: f64,
    pub n_seeds: usize,
    /// Density threshold η ∈ (0, 0.5) declaring "positive density".
    pub eta: f64,
    pub bisect_tol: f64,
    /// Decide on the interior density (the boundary layer biases the full
    /// density upward).
    pub use_interior: bool,
    /// Re-run at 2t and report the drift.
    pub richardson: bool,
}

impl FbarArgs {
    pub fn new(t: f64, n_seeds: usize, bisect_tol: f64) -> Self {
        FbarArgs { t, n_seeds, eta: 0.02, bisect_tol, use_interior: true, richardson: false }
    }
}

/// Estimate F̄(M) by bisection over the shift level α.
pub fn estimate_fbar(
    spec: &OperatorSpec,
    m: SymMatrix,
    args: &FbarArgs,
    grid: &ObstacleGrid,
) -> Result<EffectiveEstimate> {
    if !(args.eta > 0.0 && args.eta < 0.5) {
        return Err(CoreError::InvalidParameter("eta must lie in (0, 0.5)".into()));
    }
    let (lo, hi, mut curve) = single_t_bisection(spec, m, args, grid, args.t)?;
    let mut drift = None;
    if args.richardson {
        let n2 = (2.0 * args.t / grid.h).round() as usize;
        if n2.pow(spec.dim().n() as u32) <= grid.budget_points {
            let (lo2, hi2, curve2) = single_t_bisection(spec, m, args, grid, 2.0 * args.t)?;
            drift = Some((0.5 * (lo + hi) - 0.5 * (lo2 + hi2)).abs());
            curve.samples.extend(curve2.samples);
        }
    }
    let viol = curve.monotonicity_violation(args.use_interior);
    let n_pts = (args.t / grid.h).powi(spec.dim().n() as i32);
    let noise = 3.0 * (0.25 / (n_pts * args.n_seeds as f64)).sqrt() + 0.02;
    if viol > noise {
        return Err(CoreError::Diagnostic(format!(
            "density curve increases in alpha by {viol:.3e} (allowed {noise:.3e})"
        )));
    }
    Ok(EffectiveEstimate {
        m,
        fbar_lo: lo,
        fbar_hi: hi,
        eta: args.eta,
        n_seeds: args.n_seeds,
        t: args.t,
        curve,
        drift,
    })
}

/// One bisection sweep at a fixed box size.
fn single_t_bisection(
    spec: &OperatorSpec,
    m: SymMatrix,
    args: &FbarArgs,
    grid: &ObstacleGrid,
    t: f64,
) -> Result<(f64, f64, DensityCurve)> {
    let (mut lo, mut hi) = spec.value_range(m);
    // widen so the endpoints are strictly decided
    let pad = 1e-6 * (1.0 + hi.abs().max(lo.abs()));
    lo -= pad;
    hi += pad;
    let mut curve = DensityCurve::default();
    // per-seed warm starts across bisection steps
    let mut warm: Vec<Option<GridFunction>> = vec![None; args.n_seeds];
    while hi - lo > args.bisect_tol {
        let alpha = 0.5 * (lo + hi);
        let sols: Vec<Result<ObstacleSolution>> = parallel::map_collect(args.n_seeds, |si| {
            obstacle_solution(spec, m, alpha, t, si as u64 + 1, grid, warm[si].as_ref())
        });
        let mut mean = 0.0;
        for (si, sres) in sols.into_iter().enumerate() {
            let sol = sres?;
            let d = density_of(&sol, t, alpha, si as u64 + 1);
            mean += if args.use_interior { d.density_interior } else { d.density };
            curve.samples.push(d);
            warm[si] = Some(sol.w);
        }
        mean /= args.n_seeds as f64;
        if mean > args.eta {
            lo = alpha;
        } else {
            hi = alpha;
        }
    }
    Ok((lo, hi, curve))
}

/// Tabulated effective operator: anchor matrices with estimated values,
/// extended to all of S^d by Pucci-type hulls with constants (mu0, cap).
#[derive(Debug, Clone)]
pub struct EffectiveTable {
    pub entries: Vec<(SymMatrix, f64)>,
    pub mu0: f64,
    pub cap: f64,
}

impl EffectiveTable {
    /// Lower hull max_k [f̄_k + P⁻(M − M_k)]: the largest function through
    /// the table satisfying the ellipticity sandwich from below.
    pub fn eval_lower(&self, m: SymMatrix) -> f64 {
        self.entries
            .iter()
            .map(|(mk, fk)| fk + pucci(PucciSign::Minus, self.mu0, self.cap, m - *mk).unwrap())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn eval_upper(&self, m: SymMatrix) -> f64 {
        self.entries
            .iter()
            .map(|(mk, fk)| fk + pucci(PucciSign::Plus, self.mu0, self.cap, m - *mk).unwrap())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eval(&self, m: SymMatrix) -> f64 {
        0.5 * (self.eval_lower(m) + self.eval_upper(m))
    }
}

/// Estimate F̄ on a list of anchor matrices and package the table.
pub fn build_fbar_table(
    spec: &OperatorSpec,
    anchors: &[SymMatrix],
    mu0: f64,
    args: &FbarArgs,
    grid: &ObstacleGrid,
) -> Result<EffectiveTable> {
    let mut entries = Vec::with_capacity(anchors.len());
    for &m in anchors {
        let est = estimate_fbar(spec, m, args, grid)?;
        entries.push((m, est.mid()));
    }
    Ok(EffectiveTable { entries, mu0, cap: spec.cap })
}

/// Outcome of one structural property check.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub label: String,
    /// Allowed interval for the tested quantity.
    pub bound_lo: f64,
    pub bound_hi: f64,
    /// Measured interval (from bracket endpoints).
    pub meas_lo: f64,
    pub meas_hi: f64,
    pub pass: bool,
}

fn interval_check(label: String, bound: (f64, f64), meas: (f64, f64)) -> PropertyCheck {
    // pass when the measured interval intersects the allowed interval
    let pass = meas.1 >= bound.0 && meas.0 <= bound.1;
    PropertyCheck {
        label,
        bound_lo: bound.0,
        bound_hi: bound.1,
        meas_lo: meas.0,
        meas_hi: meas.1,
        pass,
    }
}

#[derive(Debug, Clone, Default)]
pub struct FbarPropertyReport {
    pub checks: Vec<PropertyCheck>,
}

impl FbarPropertyReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }
}

/// Checks inherited structure of F̄ within bracket widths: degenerate
/// ellipticity on ordered pairs, positive homogeneity on scalings,
/// oddness, and monotonicity under pointwise-ordered operators.
pub fn fbar_property_suite(
    spec: &OperatorSpec,
    ordered_pairs: &[(SymMatrix, SymMatrix)],
    scalings: &[(SymMatrix, f64)],
    odd_ms: &[SymMatrix],
    ordered_specs: Option<(&OperatorSpec, &OperatorSpec, &[SymMatrix])>,
    args: &FbarArgs,
    grid: &ObstacleGrid,
) -> Result<FbarPropertyReport> {
    let mut report = FbarPropertyReport::default();
    let est = |sp: &OperatorSpec, m: SymMatrix| -> Result<(f64, f64)> {
        let e = estimate_fbar(sp, m, args, grid)?;
        Ok((e.fbar_lo, e.fbar_hi))
    };
    for (i, &(m, n)) in ordered_pairs.iter().enumerate() {
        // requires m <= n; then 0 <= F̄(m) − F̄(n) <= Λ·tr(n − m)
        let (mlo, mhi) = est(spec, m)?;
        let (nlo, nhi) = est(spec, n)?;
        let diff = (mlo - nhi, mhi - nlo);
        report.checks.push(interval_check(
            format!("degenerate_ellipticity[{i}]"),
            (0.0, spec.cap * (n - m).trace()),
            diff,
        ));
    }
    for (i, &(m, s)) in scalings.iter().enumerate() {
        let (lo1, hi1) = est(spec, m)?;
        let (los, his) = est(spec, m * s)?;
        report.checks.push(interval_check(
            format!("homogeneity[{i}] s={s}"),
            (s * lo1, s * hi1),
            (los, his),
        ));
    }
    for (i, &m) in odd_ms.iter().enumerate() {
        let (lo1, hi1) = est(spec, m)?;
        let (lon, hin) = est(spec, -m)?;
        report
            .checks
            .push(interval_check(format!("oddness[{i}]"), (-hi1, -lo1), (lon, hin)));
    }
    if let Some((f_small, f_big, ms)) = ordered_specs {
        for (i, &m) in ms.iter().enumerate() {
            // F_small <= F_big pointwise implies F̄_small <= F̄_big
            let (slo, _shi) = est(f_small, m)?;
            let (_blo, bhi) = est(f_big, m)?;
            report.checks.push(interval_check(
                format!("operator_monotonicity[{i}]"),
                (0.0, f64::INFINITY),
                (bhi - slo, f64::INFINITY),
            ));
        }
    }
    Ok(report)
}

/// Effective lower ellipticity from rank-one perturbation pairs.
#[derive(Debug, Clone)]
pub struct EllipticityEstimate {
    /// min over pairs of (F̄(N) − F̄(N + s·ξξᵀ))/s, from bracket midpoints.
    pub lambda0: f64,
    /// Pessimistic value from bracket endpoints.
    pub lambda0_lo: f64,
    pub per_pair: Vec<(SymMatrix, [f64; 2], f64)>,
    /// λ0_est · E[λ^{-d}] when the inverse moment was supplied.
    pub product_with_moment: Option<f64>,
}

pub fn effective_ellipticity(
    spec: &OperatorSpec,
    base_matrices: &[SymMatrix],
    xis: &[[f64; 2]],
    s: f64,
    inv_moment: Option<f64>,
    args: &FbarArgs,
    grid: &ObstacleGrid,
) -> Result<EllipticityEstimate> {
    let mut lambda0 = f64::INFINITY;
    let mut lambda0_lo = f64::INFINITY;
    let mut per_pair = Vec::new();
    for &n in base_matrices {
        for &xi in xis {
            let e0 = estimate_fbar(spec, n, args, grid)?;
            let e1 = estimate_fbar(spec, n + SymMatrix::rank_one(spec.dim(), s, xi), args, grid)?;
            let mid = (e0.mid() - e1.mid()) / s;
            let pess = (e0.fbar_lo - e1.fbar_hi) / s;
            lambda0 = lambda0.min(mid);
            lambda0_lo = lambda0_lo.min(pess);
            per_pair.push((n, xi, mid));
        }
    }
    Ok(EllipticityEstimate {
        lambda0,
        lambda0_lo,
        per_pair,
        product_with_moment: inv_moment.map(|em| lambda0 * em),
    })
}

/// Contact-density spread across sub-windows of one large solve.
#[derive(Debug, Clone)]
pub struct UniformityReport {
    pub global_density: f64,
    /// (window center in fractions of t, density in that window)
    pub window_densities: Vec<([f64; 2], f64)>,
    pub max_deviation: f64,
}

/// Solve once on the box of size t and measure contact densities in
/// sub-windows centered at `window_centers` (fractions of t) with
/// half-width `frac`·t.
pub fn density_uniformity(
    spec: &OperatorSpec,
    m: SymMatrix,
    alpha: f64,
    t: f64,
    window_centers: &[[f64; 2]],
    frac: f64,
    seed: u64,
    grid: &ObstacleGrid,
) -> Result<UniformityReport> {
    let sol = obstacle_solution(spec, m, alpha, t, seed, grid, None)?;
    let dom = &sol.w.domain;
    let hd = dom.h.powi(dom.dim.n() as i32);
    let global_density = sol.contact_measure / dom.shape.volume(dom.dim);
    let mut window_densities = Vec::new();
    for &wc in window_centers {
        let lo = [t * (wc[0] - frac), t * (wc[1] - frac)];
        let hi = [t * (wc[0] + frac), t * (wc[1] + frac)];
        let mut measure = 0.0;
        let mut vol = 0.0;
        for (pi, &p) in dom.coords.iter().enumerate() {
            let inside = p[0] >= lo[0]
                && p[0] <= hi[0]
                && (dom.dim == Dim::One || (p[1] >= lo[1] && p[1] <= hi[1]));
            if inside {
                vol += hd;
                if sol.contact[pi] {
                    measure += hd;
                }
            }
        }
        window_densities.push((wc, if vol > 0.0 { measure / vol } else { 0.0 }));
    }
    let max_deviation = window_densities
        .iter()
        .map(|&(_, d)| (d - global_density).abs())
        .fold(0.0, f64::max);
    Ok(UniformityReport { global_density, window_densities, max_deviation })
}

/// sup|v|/t² along a list of box sizes for the zero-boundary problem
/// F(· + M) − α = 0.
#[derive(Debug, Clone)]
pub struct CorrectorReport {
    pub m: SymMatrix,
    pub alpha: f64,
    /// (t, sup|v|, sup|v|/t²)
    pub rows: Vec<(f64, f64, f64)>,
}

impl CorrectorReport {
    /// True when the normalized sups decrease along the list, allowing a
    /// fractional noise slack between consecutive entries.
    pub fn decreasing(&self, slack: f64) -> bool {
        self.rows.windows(2).all(|w| w[1].2 <= w[0].2 * (1.0 + slack))
            && self.rows.last().map_or(false, |l| l.2 < self.rows[0].2)
    }
}

pub fn corrector_sublinearity(
    spec: &OperatorSpec,
    m: SymMatrix,
    alpha: f64,
    t_list: &[f64],
    seed: u64,
    grid: &ObstacleGrid,
) -> Result<CorrectorReport> {
    let mut rows = Vec::new();
    for &t in t_list {
        let shifted = spec.reseeded(seed)?.shifted(m, alpha);
        let dom = grid.box_domain(spec.dim(), t)?;
        let op = CompiledOperator::compile(&shifted, &dom)?;
        let rhs = vec![0.0; dom.n_interior()];
        let bdry = vec![0.0; dom.n_boundary()];
        let (v, _) = solve_dirichlet_compiled(&op, &rhs, &bdry, None, &grid.solve)?;
        let sup = v.sup_norm();
        rows.push((t, sup, sup / (t * t)));
    }
    Ok(CorrectorReport { m, alpha, rows })
}

/// Two-scale convergence data.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    /// (ε, h, sup|u^ε − ū| on the ε-grid)
    pub vs_effective: Vec<(f64, f64, f64)>,
    /// (ε, sup|u^ε − u^{ε/2}| on the coarser common lattice)
    pub cauchy: Vec<(f64, f64)>,
}

/// Solve the oscillatory Dirichlet problem at each ε (environment read at
/// x/ε, lattice spacing ε/8), solve the tabulated effective problem on the
/// same grids, and report sup differences. The ε list should halve so the
/// lattices nest.
pub fn two_scale_convergence(
    spec: &OperatorSpec,
    table: &EffectiveTable,
    shape: Shape,
    g: impl Fn([f64; 2]) -> f64 + Sync + Copy,
    eps_list: &[f64],
    seed: u64,
    grid: &ObstacleGrid,
) -> Result<ConvergenceReport> {
    let dim = spec.dim();
    let spec = spec.reseeded(seed)?;
    let mut solutions: Vec<(f64, GridFunction)> = Vec::new();
    let mut vs_effective = Vec::new();
    for &eps in eps_list {
        let h = eps / 8.0;
        let extent = match shape {
            Shape::Box2 { lo, hi } => (hi[0] - lo[0]).max(hi[1] - lo[1]),
            Shape::Ball { radius, .. } => 2.0 * radius,
            Shape::Annulus { r_outer, .. } => 2.0 * r_outer,
        };
        let n = (extent / h).ceil() as usize;
        if n.pow(dim.n() as u32) > grid.budget_points {
            return Err(CoreError::Budget(format!(
                "eps={eps} needs about {n}^{} grid points",
                dim.n()
            )));
        }
        let dom = GridDomain::new(dim, shape, h, FrameSet::standard(dim, grid.k_res)?)?;
        let micro = spec.at_microscale(eps);
        let (u_eps, _) = solve_dirichlet(&micro, &dom, |_| 0.0, g, &grid.solve)?;
        // effective problem on the same lattice
        let eff_op = CompiledOperator::compile_effective(
            &table.entries,
            table.mu0,
            table.cap,
            EffectiveMode::Centered,
            &dom,
        )?;
        let rhs = vec![0.0; dom.n_interior()];
        let bdry: Vec<f64> = dom.boundary_coords.iter().map(|&p| g(p)).collect();
        let (u_bar, _) = solve_dirichlet_compiled(&eff_op, &rhs, &bdry, None, &grid.solve)?;
        let diff = u_eps
            .interior
            .iter()
            .zip(&u_bar.interior)
            .fold(0.0f64, |ma, (a, b)| ma.max((a - b).abs()));
        vs_effective.push((eps, h, diff));
        solutions.push((eps, u_eps));
    }
    let mut cauchy = Vec::new();
    for w in solutions.windows(2) {
        let (e0, ref u0) = w[0];
        let (_e1, ref u1) = w[1];
        // compare on the coarser lattice (spacings halve along the list)
        let ratio = (u0.domain.h / u1.domain.h).round() as i64;
        let mut d = 0.0f64;
        for (pi, &ij) in u0.domain.points.iter().enumerate() {
            if let Some(v1) = u1.value_at_lattice([ij[0] * ratio, ij[1] * ratio]) {
                d = d.max((u0.interior[pi] - v1).abs());
            }
        }
        cauchy.push((e0, d));
    }
    Ok(ConvergenceReport { vs_effective, cauchy })
}

/// Subadditivity audit: contact measure of the whole box vs the sum over
/// its 2^d congruent sub-boxes; returns (whole, sub-sum, interface slack).
pub fn split_subadditivity(
    spec: &OperatorSpec,
    m: SymMatrix,
    alpha: f64,
    t: f64,
    seed: u64,
    grid: &ObstacleGrid,
) -> Result<(f64, f64, f64)> {
    let whole = obstacle_solution(spec, m, alpha, t, seed, grid, None)?;
    let dim = spec.dim();
    let half = t / 2.0;
    let sub_shapes: Vec<Shape> = match dim {
        Dim::One => vec![
            Shape::Box2 { lo: [-half, 0.0], hi: [0.0, 0.0] },
            Shape::Box2 { lo: [0.0, 0.0], hi: [half, 0.0] },
        ],
        Dim::Two => {
            let mut v = Vec::new();
            for sx in [-1.0f64, 1.0] {
                for sy in [-1.0f64, 1.0] {
                    let lo =
                        [if sx < 0.0 { -half } else { 0.0 }, if sy < 0.0 { -half } else { 0.0 }];
                    let hi = [if sx < 0.0 { 0.0 } else { half }, if sy < 0.0 { 0.0 } else { half }];
                    v.push(Shape::Box2 { lo, hi });
                }
            }
            v
        }
    };
    let shifted = spec.reseeded(seed)?.shifted(m, alpha);
    let mut sub_sum = 0.0;
    for shape in sub_shapes {
        let dom =
            GridDomain::new(dim, shape, whole.w.domain.h, FrameSet::standard(dim, grid.k_res)?)?;
        let op = CompiledOperator::compile(&shifted, &dom)?;
        let sol = solve_obstacle_compiled(&op, None, &grid.solve)?;
        sub_sum += sol.contact_measure;
    }
    let slack = whole.w.domain.h * t.powi(dim.n() as i32 - 1) * 8.0;
    Ok((whole.contact_measure, sub_sum, slack))
}
