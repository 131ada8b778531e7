//! Fixed-point solvers for the discrete Dirichlet problem, the
//! zero-obstacle problem and discrete convex envelopes.
//!
//! Two methods are offered. `DampedJacobi` is the pseudo-time marching
//! iteration u ← u − step·residual with a per-point step chosen below the
//! monotone contraction bound, so it is trivially correct if slow.
//! `NonlinearGaussSeidel` sweeps the multi-color partition of the domain,
//! solving the local scalar equation exactly at each point (safeguarded
//! Newton on the piecewise-linear monotone residual) with optional
//! over-relaxation; when the sup-residual stalls the relaxation factor is
//! walked back toward plain Gauss–Seidel, which restores the provably
//! convergent regime.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::grid::{second_difference_parts, GridDomain, GridFunction};
use crate::operators::{LinearRule, OperatorSpec, OperatorVariant};
use crate::parallel;
use crate::scheme::CompiledOperator;
use crate::sym::Dim;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    DampedJacobi,
    NonlinearGaussSeidel,
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Residual sup-norm tolerance, relative to the data scale.
    pub tol: f64,
    /// Sweep budget.
    pub max_iters: usize,
    /// Damping factor ρ ∈ (0, 1]; the Jacobi step at a point is
    /// ρ / (local slope bound), which keeps the update a contraction.
    pub rho: f64,
    pub method: Method,
    /// Over-relaxation factor for Gauss–Seidel; `None` picks
    /// 2/(1 + sin(π/n)) from the lattice extent n.
    pub sor: Option<f64>,
    /// Residual is measured every this many sweeps.
    pub check_every: usize,
    /// Contact threshold for obstacle solutions (value units).
    pub contact_tol: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol: 1e-8,
            max_iters: 400_000,
            rho: 0.9,
            method: Method::NonlinearGaussSeidel,
            sor: None,
            check_every: 16,
            contact_tol: 1e-7,
        }
    }
}

impl SolveConfig {
    pub fn validated(self) -> Result<Self> {
        if !(self.tol > 0.0) {
            return Err(CoreError::InvalidParameter("tol must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(CoreError::InvalidParameter("rho must lie in (0, 1]".into()));
        }
        if let Some(w) = self.sor {
            if !(w >= 1.0 && w < 2.0) {
                return Err(CoreError::InvalidParameter("sor factor must lie in [1, 2)".into()));
            }
        }
        Ok(self)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_method(mut self, m: Method) -> Self {
        self.method = m;
        self
    }
}

#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub iters: usize,
    pub residual: f64,
    pub tol_abs: f64,
    /// (sweep, sup-residual) at each convergence check.
    pub history: Vec<(usize, f64)>,
}

/// Solution of the zero-obstacle problem min{F_h(w), w} = 0.
#[derive(Clone)]
pub struct ObstacleSolution {
    pub w: GridFunction,
    /// w ≤ contact_tol mask over interior points.
    pub contact: Vec<bool>,
    /// h^d · #contact.
    pub contact_measure: f64,
    pub contact_tol: f64,
    pub report: ResidualReport,
}

impl ObstacleSolution {
    /// Contact measure restricted to points with distance ≥ `margin` from
    /// the domain boundary (reduces boundary-layer bias).
    pub fn contact_measure_inset(&self, margin: f64) -> (f64, f64) {
        let dom = &self.w.domain;
        let hd = dom.h.powi(dom.dim.n() as i32);
        let mut m = 0.0;
        let mut vol = 0.0;
        for (pi, &p) in dom.coords.iter().enumerate() {
            if boundary_distance(dom, p) >= margin {
                vol += hd;
                if self.contact[pi] {
                    m += hd;
                }
            }
        }
        (m, vol)
    }
}

fn boundary_distance(dom: &GridDomain, p: [f64; 2]) -> f64 {
    match dom.shape {
        crate::grid::Shape::Box2 { lo, hi } => {
            let mut d = (p[0] - lo[0]).min(hi[0] - p[0]);
            if dom.dim == Dim::Two {
                d = d.min(p[1] - lo[1]).min(hi[1] - p[1]);
            }
            d
        }
        crate::grid::Shape::Ball { center, radius } => {
            let dx = p[0] - center[0];
            let dy = if dom.dim == Dim::Two { p[1] - center[1] } else { 0.0 };
            radius - (dx * dx + dy * dy).sqrt()
        }
        crate::grid::Shape::Annulus { center, r_inner, r_outer } => {
            let dx = p[0] - center[0];
            let dy = if dom.dim == Dim::Two { p[1] - center[1] } else { 0.0 };
            let r = (dx * dx + dy * dy).sqrt();
            (r_outer - r).min(r - r_inner)
        }
    }
}

/// Local problem abstraction shared by the three solve kinds.
trait PointProblem: Sync {
    /// Signed residual whose zero set characterizes the solution.
    fn residual(&self, u: &GridFunction, pi: usize) -> f64;
    /// New center value for one damped-Jacobi visit.
    fn jacobi_update(&self, u: &GridFunction, pi: usize, rho: f64) -> f64;
    /// Unconstrained Gauss–Seidel target (local exact solve).
    fn gs_target(&self, u: &GridFunction, pi: usize) -> f64;
    /// Constraint projection applied after relaxation.
    fn project(&self, pi: usize, c: f64) -> f64;
}

struct DirichletProblem<'a> {
    op: &'a CompiledOperator,
    rhs: &'a [f64],
}

/// Safeguarded Newton for the scalar equation value(c) = target; the value
/// is piecewise linear and strictly increasing in c.
fn newton_local(op: &CompiledOperator, u: &GridFunction, pi: usize, target: f64) -> f64 {
    let st = op.local_stencil(u, pi);
    let lam = op.lambda[pi];
    let mut c = u.interior[pi];
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for _ in 0..80 {
        let (v, sl) = op.value_slope(&st, lam, c);
        let r = v - target;
        if r > 0.0 {
            hi = c;
        } else {
            lo = c;
        }
        let mut next = c - r / sl;
        if next <= lo || next >= hi {
            next = if lo.is_finite() && hi.is_finite() {
                0.5 * (lo + hi)
            } else if lo.is_finite() {
                lo + 2.0 * (c - lo).abs().max(1.0)
            } else if hi.is_finite() {
                hi - 2.0 * (hi - c).abs().max(1.0)
            } else {
                c - r / sl
            };
        }
        if next == c {
            return c;
        }
        c = next;
    }
    c
}

impl PointProblem for DirichletProblem<'_> {
    fn residual(&self, u: &GridFunction, pi: usize) -> f64 {
        self.op.residual_at(u, pi) - self.rhs[pi]
    }

    fn jacobi_update(&self, u: &GridFunction, pi: usize, rho: f64) -> f64 {
        let st = self.op.local_stencil(u, pi);
        let c = u.interior[pi];
        let (v, sl) = self.op.value_slope(&st, self.op.lambda[pi], c);
        c - rho * (v - self.rhs[pi]) / sl
    }

    fn gs_target(&self, u: &GridFunction, pi: usize) -> f64 {
        newton_local(self.op, u, pi, self.rhs[pi])
    }

    fn project(&self, _pi: usize, c: f64) -> f64 {
        c
    }
}

struct ObstacleProblem<'a> {
    op: &'a CompiledOperator,
}

impl PointProblem for ObstacleProblem<'_> {
    fn residual(&self, u: &GridFunction, pi: usize) -> f64 {
        self.op.residual_at(u, pi).min(u.interior[pi])
    }

    fn jacobi_update(&self, u: &GridFunction, pi: usize, rho: f64) -> f64 {
        let st = self.op.local_stencil(u, pi);
        let c = u.interior[pi];
        let (v, sl) = self.op.value_slope(&st, self.op.lambda[pi], c);
        let r = v.min(c);
        (c - rho * r / sl.max(1.0)).max(0.0)
    }

    fn gs_target(&self, u: &GridFunction, pi: usize) -> f64 {
        newton_local(self.op, u, pi, 0.0)
    }

    fn project(&self, _pi: usize, c: f64) -> f64 {
        c.max(0.0)
    }
}

/// Envelope residual min{u − Γ, ê₁(D²Γ)}; ê₁ is the smallest directional
/// second difference.
struct EnvelopeProblem<'a> {
    obstacle: &'a [f64],
}

fn min_eig_parts(u: &GridFunction, pi: usize) -> (f64, f64, f64) {
    // returns (ê₁ at current center, midpoint target of the minimizing
    // direction, max center coefficient)
    let nd = u.domain.n_dirs();
    let c = u.interior[pi];
    let mut eig = f64::INFINITY;
    let mut target = f64::INFINITY;
    let mut max_coef = 0.0f64;
    for dir in 0..nd {
        let (b, k) = second_difference_parts(u, pi, dir);
        eig = eig.min(b - k * c);
        target = target.min(b / k);
        max_coef = max_coef.max(k);
    }
    (eig, target, max_coef)
}

impl PointProblem for EnvelopeProblem<'_> {
    fn residual(&self, u: &GridFunction, pi: usize) -> f64 {
        let (eig, _, _) = min_eig_parts(u, pi);
        (self.obstacle[pi] - u.interior[pi]).min(eig)
    }

    fn jacobi_update(&self, u: &GridFunction, pi: usize, rho: f64) -> f64 {
        let c = u.interior[pi];
        let (eig, _, coef) = min_eig_parts(u, pi);
        let r = (self.obstacle[pi] - c).min(eig);
        (c + rho * r / coef.max(1.0)).min(self.obstacle[pi])
    }

    fn gs_target(&self, u: &GridFunction, pi: usize) -> f64 {
        let (_, target, _) = min_eig_parts(u, pi);
        target.min(self.obstacle[pi])
    }

    fn project(&self, pi: usize, c: f64) -> f64 {
        c.min(self.obstacle[pi])
    }
}

fn lattice_extent(dom: &GridDomain) -> usize {
    ((dom.i1[0] - dom.i0[0]).max(dom.i1[1] - dom.i0[1]).max(2)) as usize
}

fn iterate<P: PointProblem>(
    problem: &P,
    dom: &Arc<GridDomain>,
    mut u: GridFunction,
    scale: f64,
    cfg: &SolveConfig,
) -> Result<(GridFunction, ResidualReport)> {
    let n = dom.n_interior();
    let tol_abs = cfg.tol * scale.max(1e-300);
    let mut omega = cfg.sor.unwrap_or_else(|| {
        let ext = lattice_extent(dom) as f64;
        2.0 / (1.0 + (std::f64::consts::PI / ext).sin())
    });
    let mut history = Vec::new();
    let mut last_res = f64::INFINITY;
    let mut iters = 0usize;
    let mut stalls = 0usize;
    loop {
        for _ in 0..cfg.check_every {
            match cfg.method {
                Method::DampedJacobi => {
                    let new =
                        parallel::map_collect(n, |pi| problem.jacobi_update(&u, pi, cfg.rho));
                    u.interior = new;
                }
                Method::NonlinearGaussSeidel => {
                    for color in &dom.colors {
                        let updates: Vec<f64> = parallel::map_collect(color.len(), |ci| {
                            let pi = color[ci] as usize;
                            let c = u.interior[pi];
                            let t = problem.gs_target(&u, pi);
                            problem.project(pi, c + omega * (t - c))
                        });
                        for (ci, &pi) in color.iter().enumerate() {
                            u.interior[pi as usize] = updates[ci];
                        }
                    }
                }
            }
            iters += 1;
        }
        let res = parallel::max_over(n, |pi| problem.residual(&u, pi).abs());
        history.push((iters, res));
        // rounding floor: residuals are differences of O(slope·|u|) terms
        let floor = 64.0 * f64::EPSILON * sup_scale(&u);
        if res <= tol_abs.max(floor) {
            return Ok((
                u,
                ResidualReport { iters, residual: res, tol_abs: tol_abs.max(floor), history },
            ));
        }
        if iters >= cfg.max_iters {
            if history.len() > 4096 {
                let keep: Vec<_> =
                    history.iter().step_by(history.len() / 2048).cloned().collect();
                history = keep;
            }
            return Err(CoreError::IterationFailure {
                iters,
                residual: res,
                tol: tol_abs,
                history: history.iter().map(|&(_, r)| r).collect(),
            });
        }
        // walk the over-relaxation back toward plain Gauss–Seidel only on
        // sustained non-improvement (cycling at the free boundary)
        if cfg.method == Method::NonlinearGaussSeidel && omega > 1.0 {
            if res > 0.999 * last_res {
                stalls += 1;
                if stalls >= 4 {
                    omega = (1.0 + 0.8 * (omega - 1.0)).max(1.0);
                    stalls = 0;
                }
            } else {
                stalls = 0;
            }
        }
        last_res = res;
    }
}

fn sup_scale(u: &GridFunction) -> f64 {
    let a = u.interior.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let b = u.boundary.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h2 = u.domain.h * u.domain.h;
    (a.max(b) / h2).max(1.0)
}

/// Solve F_h(u) = f with Dirichlet data g. Starts from a cheap
/// Laplacian-type extension of the boundary data unless a warm start is
/// given.
pub fn solve_dirichlet(
    spec: &OperatorSpec,
    domain: &Arc<GridDomain>,
    f: impl Fn([f64; 2]) -> f64 + Sync,
    g: impl Fn([f64; 2]) -> f64 + Sync,
    cfg: &SolveConfig,
) -> Result<(GridFunction, ResidualReport)> {
    let op = CompiledOperator::compile(spec, domain)?;
    let rhs: Vec<f64> = domain.coords.iter().map(|&p| f(p)).collect();
    let bdry: Vec<f64> = domain.boundary_coords.iter().map(|&p| g(p)).collect();
    let warm = harmonic_init(spec, domain, &rhs, &bdry, cfg)?;
    solve_dirichlet_compiled(&op, &rhs, &bdry, warm.as_ref(), cfg)
}

/// Dirichlet solve on a pre-compiled operator with explicit data vectors.
pub fn solve_dirichlet_compiled(
    op: &CompiledOperator,
    rhs: &[f64],
    boundary: &[f64],
    init: Option<&GridFunction>,
    cfg: &SolveConfig,
) -> Result<(GridFunction, ResidualReport)> {
    let dom = &op.domain;
    let mut u0 = match init {
        Some(w) => {
            assert!(Arc::ptr_eq(&w.domain, dom), "warm start on a different domain");
            w.clone()
        }
        None => GridFunction::zeros(dom),
    };
    u0.boundary = boundary.to_vec();
    let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let problem = DirichletProblem { op, rhs };
    iterate(&problem, dom, u0, scale, cfg)
}

/// Cheap initialization: solve −tr(D²u) = f at loose tolerance. Skipped
/// when the operator is already a constant-coefficient linear one.
fn harmonic_init(
    spec: &OperatorSpec,
    domain: &Arc<GridDomain>,
    rhs: &[f64],
    boundary: &[f64],
    cfg: &SolveConfig,
) -> Result<Option<GridFunction>> {
    let is_plain_linear = matches!(spec.variant, OperatorVariant::Linear(_))
        && {
            let (lo, hi) = spec.field.value_range();
            lo == hi
        };
    if is_plain_linear {
        return Ok(None);
    }
    let lap = OperatorSpec::new(
        OperatorVariant::Linear(LinearRule::constant(crate::sym::SymMatrix::identity(
            domain.dim,
        ))),
        spec.cap.max(1.0),
        spec.field.clone(),
    )?;
    let op = CompiledOperator::compile(&lap, domain)?;
    let loose = SolveConfig { tol: 1e-3, max_iters: cfg.max_iters, ..cfg.clone() };
    let (u, _) = solve_dirichlet_compiled(&op, rhs, boundary, None, &loose)?;
    Ok(Some(u))
}

/// Solve the zero-obstacle problem min{F_h(w), w} = 0 with zero boundary
/// data; w starts from the natural subsolution w ≡ 0.
pub fn solve_obstacle(
    spec: &OperatorSpec,
    domain: &Arc<GridDomain>,
    cfg: &SolveConfig,
) -> Result<ObstacleSolution> {
    let op = CompiledOperator::compile(spec, domain)?;
    solve_obstacle_compiled(&op, None, cfg)
}

/// Obstacle solve on a pre-compiled operator, optionally warm-started.
pub fn solve_obstacle_compiled(
    op: &CompiledOperator,
    init: Option<&GridFunction>,
    cfg: &SolveConfig,
) -> Result<ObstacleSolution> {
    let dom = &op.domain;
    let u0 = match init {
        Some(w) => {
            assert!(Arc::ptr_eq(&w.domain, dom), "warm start on a different domain");
            let mut w = w.clone();
            for v in &mut w.interior {
                *v = v.max(0.0);
            }
            w.boundary.iter_mut().for_each(|b| *b = 0.0);
            w
        }
        None => GridFunction::zeros(dom),
    };
    let zero = GridFunction::zeros(dom);
    let scale = (0..dom.n_interior())
        .map(|pi| op.residual_at(&zero, pi).abs())
        .fold(1.0f64, f64::max);
    let problem = ObstacleProblem { op };
    let (w, report) = iterate(&problem, dom, u0, scale, cfg)?;
    let contact: Vec<bool> = w.interior.iter().map(|&v| v <= cfg.contact_tol).collect();
    let hd = dom.h.powi(dom.dim.n() as i32);
    let contact_measure = hd * contact.iter().filter(|&&c| c).count() as f64;
    Ok(ObstacleSolution { w, contact, contact_measure, contact_tol: cfg.contact_tol, report })
}

/// Largest discretely convex function below `u` with the same boundary
/// values: the fixed point of min{u − Γ, ê₁(D²Γ)} = 0.
pub fn convex_envelope(
    u: &GridFunction,
    cfg: &SolveConfig,
) -> Result<(GridFunction, ResidualReport)> {
    let dom = &u.domain;
    let floor = u
        .interior
        .iter()
        .chain(u.boundary.iter())
        .fold(f64::INFINITY, |m, &v| m.min(v));
    let mut g0 = u.clone();
    for v in &mut g0.interior {
        *v = floor;
    }
    let scale = u.interior.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    let problem = EnvelopeProblem { obstacle: &u.interior };
    iterate(&problem, dom, g0, scale, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ConstantParams, EllipticityField, FieldParams};
    use crate::grid::{FrameSet, Shape};
    use approx::assert_abs_diff_eq;

    fn const_field(dim: Dim, v: f64) -> EllipticityField {
        EllipticityField::sample(&FieldParams::Constant(ConstantParams::new(dim, v)), 0).unwrap()
    }

    fn laplace_spec(dim: Dim) -> OperatorSpec {
        OperatorSpec::new(
            OperatorVariant::Linear(LinearRule::isotropic(dim)),
            1.0,
            const_field(dim, 1.0),
        )
        .unwrap()
    }

    #[test]
    fn dirichlet_ball_torsion() {
        // -tr(D²u) = 4 on B_1, u = 0: exact solution 1 - |x|²
        let dom = GridDomain::new(
            Dim::Two,
            Shape::Ball { center: [0.0, 0.0], radius: 1.0 },
            1.0 / 24.0,
            FrameSet::standard(Dim::Two, 4).unwrap(),
        )
        .unwrap();
        let cfg = SolveConfig::default().with_tol(1e-10);
        let (u, rep) = solve_dirichlet(&laplace_spec(Dim::Two), &dom, |_| 4.0, |_| 0.0, &cfg)
            .unwrap();
        let mut err = 0.0f64;
        for (pi, &p) in dom.coords.iter().enumerate() {
            let exact = 1.0 - p[0] * p[0] - p[1] * p[1];
            err = err.max((u.interior[pi] - exact).abs());
        }
        assert!(err < 5e-3, "torsion error {err} too large, iters {}", rep.iters);
    }

    #[test]
    fn jacobi_and_gs_agree() {
        let dom = GridDomain::new(
            Dim::Two,
            Shape::Ball { center: [0.0, 0.0], radius: 1.0 },
            1.0 / 12.0,
            FrameSet::standard(Dim::Two, 4).unwrap(),
        )
        .unwrap();
        let spec = OperatorSpec::pucci_minus(1.0, const_field(Dim::Two, 0.5)).unwrap();
        let cfg_gs = SolveConfig::default().with_tol(1e-10);
        let cfg_j = SolveConfig {
            tol: 1e-10,
            method: Method::DampedJacobi,
            max_iters: 2_000_000,
            ..Default::default()
        };
        let (u1, _) = solve_dirichlet(&spec, &dom, |_| 1.0, |p| p[0] * 0.2, &cfg_gs).unwrap();
        let (u2, _) = solve_dirichlet(&spec, &dom, |_| 1.0, |p| p[0] * 0.2, &cfg_j).unwrap();
        let mut d = 0.0f64;
        for (a, b) in u1.interior.iter().zip(&u2.interior) {
            d = d.max((a - b).abs());
        }
        assert!(d < 1e-7, "methods disagree by {d}");
    }

    #[test]
    fn obstacle_sign_dichotomy() {
        let dom = GridDomain::new(
            Dim::Two,
            Shape::Box2 { lo: [0.0, 0.0], hi: [1.0, 1.0] },
            1.0 / 16.0,
            FrameSet::standard(Dim::Two, 4).unwrap(),
        )
        .unwrap();
        // F(0,y) = 1 >= 0: w = 0 everywhere, full contact
        let spec_pos = laplace_spec(Dim::Two).with_zero_offset(1.0);
        let sol = solve_obstacle(&spec_pos, &dom, &SolveConfig::default()).unwrap();
        assert!(sol.contact.iter().all(|&c| c));
        assert_abs_diff_eq!(sol.w.sup_norm(), 0.0);
        // F(0,y) = -1 < 0: no contact, w > 0 inside
        let spec_neg = laplace_spec(Dim::Two).with_zero_offset(-1.0);
        let sol = solve_obstacle(&spec_neg, &dom, &SolveConfig::default()).unwrap();
        assert!(sol.contact.iter().all(|&c| !c));
        assert!(sol.w.interior.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn envelope_of_convex_is_itself() {
        let dom = GridDomain::new(
            Dim::One,
            Shape::Box2 { lo: [-1.0, 0.0], hi: [1.0, 0.0] },
            1.0 / 64.0,
            FrameSet::standard(Dim::One, 1).unwrap(),
        )
        .unwrap();
        let u = GridFunction::from_fn(&dom, |p| p[0] * p[0]);
        let (env, _) = convex_envelope(&u, &SolveConfig::default()).unwrap();
        for (a, b) in env.interior.iter().zip(&u.interior) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
        let vabs = GridFunction::from_fn(&dom, |p| p[0].abs());
        let (env, _) = convex_envelope(&vabs, &SolveConfig::default()).unwrap();
        for (a, b) in env.interior.iter().zip(&vabs.interior) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-6);
        }
    }

    #[test]
    fn envelope_of_concave_is_chord() {
        let dom = GridDomain::new(
            Dim::One,
            Shape::Box2 { lo: [-1.0, 0.0], hi: [1.0, 0.0] },
            1.0 / 64.0,
            FrameSet::standard(Dim::One, 1).unwrap(),
        )
        .unwrap();
        let u = GridFunction::from_fn(&dom, |p| -p[0] * p[0]);
        let (env, _) = convex_envelope(&u, &SolveConfig::default()).unwrap();
        for &v in &env.interior {
            assert_abs_diff_eq!(v, -1.0, epsilon = 1e-6);
        }
    }
}
