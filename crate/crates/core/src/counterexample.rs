//! Breakdown of homogenization on the trap field: the rescaled Dirichlet
//! problem P⁻_{λ(x/ε),1}(D²u^ε) = 1 on B₁ exhibits u^ε(0) growing as
//! ε shrinks, and the growth is certified locally by an explicit discrete
//! subsolution anchored at deep traps.
//!
//! Solves are performed in microscopic coordinates: with w solving
//! P⁻_{λ(y),1}(D²w) = 1 on B_{1/ε} and zero boundary data,
//! u^ε(0) = ε²·w(0).

use crate::env::{EllipticityField, FieldParams, Rect, Trap, TrapFieldParams};
use crate::error::{CoreError, Result};
use crate::grid::{FrameSet, GridDomain, GridFunction, Shape};
use crate::operators::OperatorSpec;
use crate::scheme::CompiledOperator;
use crate::solver::{solve_dirichlet_compiled, SolveConfig};

/// One ε-level of the blow-up experiment.
#[derive(Debug, Clone, Copy)]
pub struct CeRow {
    pub eps: f64,
    /// Macroscopic lattice spacing ε/8 (microscopic spacing 1/8).
    pub h: f64,
    pub u_eps_at_0: f64,
    /// Number of traps of index k ≥ 3 found in the solve window.
    pub traps_found: usize,
}

#[derive(Debug, Clone)]
pub struct CounterexampleRun {
    pub alpha: f64,
    pub lambda_star: f64,
    /// β = 1 − 2dλ_*.
    pub beta_ce: f64,
    /// q = 3 − (1+α)/2.
    pub q: f64,
    pub seed: u64,
    pub rows: Vec<CeRow>,
    /// Least-squares slope of log u^ε(0) against log log(1/ε).
    pub fitted_exponent: f64,
}

/// Derived constants of the construction.
pub fn ce_constants(params: &TrapFieldParams) -> (f64, f64) {
    let d = params.dim.n() as f64;
    let beta = 1.0 - 2.0 * d * params.lambda_star;
    let q = 3.0 - (1.0 + params.alpha) / 2.0;
    (beta, q)
}

/// Runs the blow-up experiment over a decreasing ε list.
pub fn run_counterexample(
    params: &TrapFieldParams,
    eps_list: &[f64],
    budget_points: usize,
    seed: u64,
    solve: &SolveConfig,
) -> Result<CounterexampleRun> {
    let (beta_ce, q) = ce_constants(params);
    if !(beta_ce > 0.0 && beta_ce < 1.0) {
        return Err(CoreError::InvalidParameter(
            "need lambda_star < 1/(2d) so that beta lies in (0,1)".into(),
        ));
    }
    for w in eps_list.windows(2) {
        if w[1] >= w[0] {
            return Err(CoreError::Precondition("eps list must decrease".into()));
        }
    }
    let dim = params.dim;
    let field = EllipticityField::sample(&FieldParams::Trap(params.clone()), seed)?;
    let spec = OperatorSpec::pucci_minus(1.0, field.clone())?;
    let h_micro = 1.0 / 8.0;
    let mut rows = Vec::new();
    let mut prev: Option<GridFunction> = None;
    for &eps in eps_list {
        let radius = 1.0 / eps;
        let n = (2.0 * radius / h_micro).ceil() as usize;
        if n.pow(dim.n() as u32) > budget_points {
            return Err(CoreError::Budget(format!(
                "eps={eps} needs {n}^{} microscopic grid points",
                dim.n()
            )));
        }
        let dom = GridDomain::new(
            dim,
            Shape::Ball { center: [0.0, 0.0], radius },
            h_micro,
            FrameSet::standard(dim, 4)?,
        )?;
        let op = CompiledOperator::compile(&spec, &dom)?;
        let rhs = vec![1.0; dom.n_interior()];
        let bdry = vec![0.0; dom.n_boundary()];
        // warm start: the previous (smaller) ball solution extended by zero
        let init = prev.as_ref().map(|w_prev| {
            let mut w0 = GridFunction::zeros(&dom);
            for (pi, &ij) in dom.points.iter().enumerate() {
                if let Some(v) = w_prev.value_at_lattice(ij) {
                    w0.interior[pi] = v;
                }
            }
            w0
        });
        let (w, _) = solve_dirichlet_compiled(&op, &rhs, &bdry, init.as_ref(), solve)?;
        let w0 = w.interior[dom.nearest_interior([0.0, 0.0]).unwrap()];
        let traps_found = field
            .traps_in(Rect::centered(dim, radius))
            .iter()
            .filter(|t| t.k >= 3)
            .count();
        rows.push(CeRow { eps, h: eps * h_micro, u_eps_at_0: eps * eps * w0, traps_found });
        prev = Some(w);
    }
    // slope of log u vs log log(1/eps)
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.u_eps_at_0 > 0.0)
        .map(|r| ((1.0 / r.eps).ln().ln(), r.u_eps_at_0.ln()))
        .collect();
    let fitted_exponent = least_squares_slope(&pts);
    Ok(CounterexampleRun {
        alpha: params.alpha,
        lambda_star: params.lambda_star,
        beta_ce,
        q,
        seed,
        rows,
        fitted_exponent,
    })
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Discrete certificate that the scaled trap profile is a subsolution.
#[derive(Debug, Clone)]
pub struct TrapSubsolutionCert {
    pub trap: Trap,
    pub t: f64,
    /// Radius of the certificate ball R(t) = 10·t·(log t)^{1/d}.
    pub radius: f64,
    pub h: f64,
    /// Amplitude constant, self-calibrated so the residual stays ≤ 1.
    pub c_used: f64,
    /// max over the lattice of P⁺_{λ(x),1}(D²_h ψ).
    pub max_residual: f64,
    /// ψ(0) − max_{∂B_R} ψ, the certified dip at the center.
    pub bound_lhs: f64,
    /// R(t)²·(log t)^q, the rate the dip is compared against.
    pub rate: f64,
}

impl TrapSubsolutionCert {
    /// Measured constant c in the dip bound lhs ≥ c·R²(log t)^q.
    pub fn measured_c(&self) -> f64 {
        self.bound_lhs / self.rate
    }
}

/// Evaluates ψ(x) = c·t^{1+α}(log t)³·λ_*^{2−β/2}·φ(x−x₀) with
/// φ(x) = −(a + |x|²)^{β/2} on the lattice over B_{R(t)} and verifies the
/// discrete subsolution inequality P⁺_{λ(x),1}(D²_h ψ) ≤ 1 + O(h).
/// When `c_small` is `None` the amplitude is chosen as the largest c
/// keeping the residual at or below 1.
pub fn certify_trap_subsolution(
    field: &EllipticityField,
    trap: Trap,
    t: f64,
    c_small: Option<f64>,
    grid_n: usize,
) -> Result<TrapSubsolutionCert> {
    let params = match field.params() {
        FieldParams::Trap(p) => p.clone(),
        _ => {
            return Err(CoreError::Precondition(
                "trap certificates require a trap field".into(),
            ))
        }
    };
    let dim = params.dim;
    let d = dim.n() as f64;
    if (trap.k as f64) < t {
        return Err(CoreError::Precondition(format!(
            "trap index {} below the scale t = {t}",
            trap.k
        )));
    }
    let t_spread = t * t.ln().powf(1.0 / d);
    let x0 = trap.center;
    if (x0[0] * x0[0] + x0[1] * x0[1]).sqrt() >= t_spread {
        return Err(CoreError::Precondition(
            "trap center outside the t(log t)^{1/d} ball".into(),
        ));
    }
    let (beta, q) = ce_constants(&params);
    let a_ce = (1.0 - beta) / 2.0;
    let radius = 10.0 * t_spread;
    let h = 2.0 * radius / grid_n as f64;
    let dom = GridDomain::new(
        dim,
        Shape::Ball { center: [0.0, 0.0], radius },
        h,
        FrameSet::standard(dim, 4)?,
    )?;
    let amp = t.powf(1.0 + params.alpha)
        * t.ln().powi(3)
        * params.lambda_star.powf(2.0 - beta / 2.0);
    let phi = move |p: [f64; 2]| {
        let dx = [p[0] - x0[0], p[1] - x0[1]];
        -(a_ce + dx[0] * dx[0] + dx[1] * dx[1]).powf(beta / 2.0)
    };
    // residual is positively homogeneous in the amplitude, so the unit
    // profile determines the self-calibrated c
    let psi1 = GridFunction::from_fn(&dom, |p| amp * phi(p));
    let spec_plus = OperatorSpec::pucci_plus(1.0, field.clone())?;
    let op = CompiledOperator::compile(&spec_plus, &dom)?;
    let res1 = op.residual_field(&psi1);
    let max_res1 = res1.interior.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let c_used = match c_small {
        Some(c) => c,
        None => {
            if max_res1 <= 0.0 {
                1.0
            } else {
                (1.0 / max_res1).min(1.0)
            }
        }
    };
    let max_residual = c_used * max_res1;
    // dip of the calibrated profile
    let psi_at = |p: [f64; 2]| c_used * amp * phi(p);
    let dip_center = psi_at([0.0, 0.0]);
    let mut max_bdry = f64::NEG_INFINITY;
    for &p in &dom.boundary_coords {
        max_bdry = max_bdry.max(psi_at(p));
    }
    let rate = radius * radius * t.ln().powf(q);
    Ok(TrapSubsolutionCert {
        trap,
        t,
        radius,
        h,
        c_used,
        max_residual,
        bound_lhs: dip_center - max_bdry,
        rate,
    })
}

/// Qualifying traps for certificates: index k ≥ t, center within
/// t(log t)^{1/d}; enumerated over fresh field realizations.
pub fn enumerate_qualifying_traps(
    params: &TrapFieldParams,
    t: f64,
    n_seeds: usize,
    seed0: u64,
) -> Result<Vec<(u64, Trap)>> {
    let d = params.dim.n() as f64;
    let t_spread = t * t.ln().powf(1.0 / d);
    let mut found = Vec::new();
    for i in 0..n_seeds {
        let sd = seed0.wrapping_add(i as u64);
        let field = EllipticityField::sample(&FieldParams::Trap(params.clone()), sd)?;
        for trap in field.traps_in(Rect::centered(params.dim, t_spread)) {
            let r = (trap.center[0] * trap.center[0] + trap.center[1] * trap.center[1]).sqrt();
            if (trap.k as f64) >= t && r < t_spread {
                found.push((sd, trap));
            }
        }
    }
    // deterministic order regardless of enumeration details
    found.sort_by(|a, b| {
        a.0.cmp(&b.0)
            .then(a.1.k.cmp(&b.1.k))
            .then(a.1.center[0].total_cmp(&b.1.center[0]))
    });
    Ok(found)
}
