//! Monotone discrete evaluation of F on grid functions.
//!
//! Pucci variants are realized as the extremum over direction frames of
//! the per-frame signed-trace formula applied to directional second
//! differences. Each frame value is nonincreasing in every neighbor value,
//! and an extremum of monotone maps is monotone, so the scheme is
//! degenerate elliptic by construction; on quadratics whose axes lie in
//! the frame set all per-frame traces agree and the extremum reduces to
//! the exact Pucci formula on the discrete eigenvalues.

use std::sync::Arc;

use crate::env::EllipticityField;
use crate::error::{CoreError, Result};
use crate::grid::{second_difference_parts, Arm, GridDomain, GridFunction};
use crate::operators::{LinearRule, OperatorSpec, OperatorVariant};
use crate::parallel;
use crate::sym::SymMatrix;

pub(crate) const MAX_DIRS: usize = 8;

/// Directional curvature data m_i(c) = base_i − coef_i·c at one point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LocalStencil {
    pub base: [f64; MAX_DIRS],
    pub coef: [f64; MAX_DIRS],
}

/// Per-direction affine weight w(λ) = wl·λ + wc on a chosen frame.
#[derive(Debug, Clone)]
pub(crate) struct LinearCompiled {
    pub frame: usize,
    pub wl: Vec<f64>,
    pub wc: Vec<f64>,
}

/// One entry of a tabulated effective operator: value plus the directional
/// quadratic forms of its anchor matrix.
#[derive(Debug, Clone)]
pub(crate) struct EffEntry {
    pub fbar: f64,
    pub qk: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) enum CompiledVariant {
    PucciMinus,
    PucciPlus,
    Linear(LinearCompiled),
    Bellman(Vec<LinearCompiled>),
    /// Envelope of tabulated values: lower hull by P⁻ extensions,
    /// upper hull by P⁺ extensions, or their average. `mu0` is the
    /// effective lower ellipticity constant of the extensions.
    Effective { entries: Vec<EffEntry>, mu0: f64, mode: EffectiveMode },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectiveMode {
    Lower,
    Upper,
    Centered,
}

/// An operator bound to a domain: field values cached per interior point,
/// shift matrix reduced to per-direction quadratic forms.
pub struct CompiledOperator {
    pub domain: Arc<GridDomain>,
    pub(crate) variant: CompiledVariant,
    pub cap: f64,
    pub lambda: Vec<f64>,
    /// v̂ᵀ·N_shift·v̂ per direction.
    pub(crate) dir_shift: Vec<f64>,
    pub(crate) offset: f64,
}

fn align_rule(rule: &LinearRule, domain: &GridDomain) -> LinearCompiled {
    // Pick the frame minimizing the off-diagonal of the coefficient in the
    // frame basis; the eigenvectors of a(λ) do not depend on λ.
    let probe = rule.coefficient(0.5);
    let mut best = 0usize;
    let mut best_off = f64::INFINITY;
    for (j, fd) in domain.frame_dirs.iter().enumerate() {
        let off = if fd.len() == 1 {
            0.0
        } else {
            let u = domain.dir_unit[fd[0]];
            let v = domain.dir_unit[fd[1]];
            (probe.xx * u[0] * v[0]
                + probe.xy * (u[0] * v[1] + u[1] * v[0])
                + probe.yy * u[1] * v[1])
                .abs()
        };
        if off < best_off - 1e-15 {
            best_off = off;
            best = j;
        }
    }
    let a_at = |lam: f64, di: usize| rule.coefficient(lam).quad_form(domain.dir_unit[di]);
    let fd = &domain.frame_dirs[best];
    let w0: Vec<f64> = fd.iter().map(|&di| a_at(0.0, di)).collect();
    let w1: Vec<f64> = fd.iter().map(|&di| a_at(1.0, di)).collect();
    LinearCompiled {
        frame: best,
        wl: w0.iter().zip(&w1).map(|(a, b)| b - a).collect(),
        wc: w0,
    }
}

impl CompiledOperator {
    pub fn compile(spec: &OperatorSpec, domain: &Arc<GridDomain>) -> Result<Self> {
        if spec.dim() != domain.dim {
            return Err(CoreError::InvalidParameter("operator/domain dimension mismatch".into()));
        }
        let lambda = sample_field(&spec.field, domain)?;
        let dir_shift: Vec<f64> =
            domain.dir_unit.iter().map(|&u| spec.shift_matrix.quad_form(u)).collect();
        let variant = match &spec.variant {
            OperatorVariant::PucciMinus => CompiledVariant::PucciMinus,
            OperatorVariant::PucciPlus => CompiledVariant::PucciPlus,
            OperatorVariant::Linear(rule) => CompiledVariant::Linear(align_rule(rule, domain)),
            OperatorVariant::BellmanMin(rules) => {
                CompiledVariant::Bellman(rules.iter().map(|r| align_rule(r, domain)).collect())
            }
        };
        Ok(CompiledOperator {
            domain: domain.clone(),
            variant,
            cap: spec.cap,
            lambda,
            dir_shift,
            offset: spec.zero_offset - spec.shift_alpha,
        })
    }

    /// Compile a tabulated effective operator F̂(M) built from anchor pairs
    /// (M_k, f̄_k) with ellipticity constants (mu0, cap).
    pub fn compile_effective(
        entries: &[(SymMatrix, f64)],
        mu0: f64,
        cap: f64,
        mode: EffectiveMode,
        domain: &Arc<GridDomain>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(CoreError::InvalidParameter("effective table is empty".into()));
        }
        if !(mu0 > 0.0 && mu0 <= cap) {
            return Err(CoreError::InvalidParameter("need 0 < mu0 <= Lambda".into()));
        }
        let ee: Vec<EffEntry> = entries
            .iter()
            .map(|(m, f)| EffEntry {
                fbar: *f,
                qk: domain.dir_unit.iter().map(|&u| m.quad_form(u)).collect(),
            })
            .collect();
        Ok(CompiledOperator {
            domain: domain.clone(),
            variant: CompiledVariant::Effective { entries: ee, mu0, mode },
            cap,
            lambda: vec![mu0; domain.n_interior()],
            dir_shift: vec![0.0; domain.n_dirs()],
            offset: 0.0,
        })
    }

    /// Residual of the operator at interior point `pi`.
    #[inline]
    pub fn residual_at(&self, u: &GridFunction, pi: usize) -> f64 {
        let st = self.local_stencil(u, pi);
        self.value_slope(&st, self.lambda[pi], u.interior[pi]).0
    }

    /// Directional curvature data at `pi` split as m_i(c) = base_i − coef_i·c
    /// (shift already folded into base).
    #[inline]
    pub(crate) fn local_stencil(&self, u: &GridFunction, pi: usize) -> LocalStencil {
        let nd = self.domain.n_dirs();
        let mut st = LocalStencil { base: [0.0; MAX_DIRS], coef: [0.0; MAX_DIRS] };
        for dir in 0..nd {
            let (b, c) = second_difference_parts(u, pi, dir);
            st.base[dir] = b + self.dir_shift[dir];
            st.coef[dir] = c;
        }
        st
    }

    /// Value of the compiled formula at center value `c`, together with its
    /// one-sided derivative in `c` (always positive).
    pub(crate) fn value_slope(&self, st: &LocalStencil, lam: f64, c: f64) -> (f64, f64) {
        let dom = &self.domain;
        let m = |di: usize| st.base[di] - st.coef[di] * c;
        let (base, slope) = match &self.variant {
            CompiledVariant::PucciPlus => {
                let mut best = f64::NEG_INFINITY;
                let mut best_sl = 0.0;
                for fd in &dom.frame_dirs {
                    let mut s = 0.0;
                    let mut sl = 0.0;
                    for &di in fd {
                        let v = m(di);
                        let w = if v > 0.0 { lam } else { self.cap };
                        s -= w * v;
                        sl += w * st.coef[di];
                    }
                    if s > best {
                        best = s;
                        best_sl = sl;
                    }
                }
                (best, best_sl)
            }
            CompiledVariant::PucciMinus => {
                let mut best = f64::INFINITY;
                let mut best_sl = 0.0;
                for fd in &dom.frame_dirs {
                    let mut s = 0.0;
                    let mut sl = 0.0;
                    for &di in fd {
                        let v = m(di);
                        let w = if v > 0.0 { self.cap } else { lam };
                        s -= w * v;
                        sl += w * st.coef[di];
                    }
                    if s < best {
                        best = s;
                        best_sl = sl;
                    }
                }
                (best, best_sl)
            }
            CompiledVariant::Linear(lc) => linear_value_slope(dom, lc, st, lam, c),
            CompiledVariant::Bellman(rules) => {
                let mut best = (f64::INFINITY, 0.0);
                for lc in rules {
                    let v = linear_value_slope(dom, lc, st, lam, c);
                    if v.0 < best.0 {
                        best = v;
                    }
                }
                best
            }
            CompiledVariant::Effective { entries, mu0, mode } => {
                let pucci_ext = |e: &EffEntry, minus: bool| -> (f64, f64) {
                    let mut best = if minus { f64::INFINITY } else { f64::NEG_INFINITY };
                    let mut best_sl = 0.0;
                    for fd in &dom.frame_dirs {
                        let mut s = 0.0;
                        let mut sl = 0.0;
                        for &di in fd {
                            let v = m(di) - e.qk[di];
                            let w = if (v > 0.0) == minus { self.cap } else { *mu0 };
                            s -= w * v;
                            sl += w * st.coef[di];
                        }
                        if (minus && s < best) || (!minus && s > best) {
                            best = s;
                            best_sl = sl;
                        }
                    }
                    (e.fbar + best, best_sl)
                };
                match mode {
                    EffectiveMode::Lower => {
                        let mut out = (f64::NEG_INFINITY, 0.0);
                        for e in entries {
                            let v = pucci_ext(e, true);
                            if v.0 > out.0 {
                                out = v;
                            }
                        }
                        out
                    }
                    EffectiveMode::Upper => {
                        let mut out = (f64::INFINITY, 0.0);
                        for e in entries {
                            let v = pucci_ext(e, false);
                            if v.0 < out.0 {
                                out = v;
                            }
                        }
                        out
                    }
                    EffectiveMode::Centered => {
                        let mut lo = (f64::NEG_INFINITY, 0.0);
                        let mut hi = (f64::INFINITY, 0.0);
                        for e in entries {
                            let a = pucci_ext(e, true);
                            if a.0 > lo.0 {
                                lo = a;
                            }
                            let b = pucci_ext(e, false);
                            if b.0 < hi.0 {
                                hi = b;
                            }
                        }
                        (0.5 * (lo.0 + hi.0), 0.5 * (lo.1 + hi.1))
                    }
                }
            }
        };
        (base + self.offset, slope.max(1e-300))
    }

    /// Upper bound on ∂(residual)/∂(center value) at `pi`; positive.
    pub fn center_slope_bound(&self, pi: usize) -> f64 {
        let dom = &self.domain;
        let h = dom.h;
        let mut worst_frame = 0.0f64;
        let mut all = 0.0f64;
        for fd in &dom.frame_dirs {
            let mut s = 0.0;
            for &di in fd {
                let l = dom.dir_len2[di].sqrt() * h;
                let (ap, am) = dom.arm_pair(pi, di);
                let sp = arm_fraction(ap);
                let sm = arm_fraction(am);
                s += 2.0 / (sp * l * sm * l);
            }
            worst_frame = worst_frame.max(s);
            all += s;
        }
        match &self.variant {
            // linear weights are bounded by cap on the chosen frame
            CompiledVariant::Linear(_) | CompiledVariant::Bellman(_) => self.cap * all,
            _ => self.cap * worst_frame,
        }
    }

    /// Residual field over all interior points.
    pub fn residual_field(&self, u: &GridFunction) -> GridFunction {
        let vals = parallel::map_collect(self.domain.n_interior(), |pi| self.residual_at(u, pi));
        GridFunction {
            domain: self.domain.clone(),
            interior: vals,
            boundary: vec![0.0; self.domain.n_boundary()],
        }
    }
}

#[inline]
fn arm_fraction(a: Arm) -> f64 {
    match a {
        Arm::Interior(_) => 1.0,
        Arm::Boundary { s, .. } => s,
    }
}

#[inline]
fn linear_value_slope(
    dom: &GridDomain,
    lc: &LinearCompiled,
    st: &LocalStencil,
    lam: f64,
    c: f64,
) -> (f64, f64) {
    let fd = &dom.frame_dirs[lc.frame];
    let mut s = 0.0;
    let mut sl = 0.0;
    for (slot, &di) in fd.iter().enumerate() {
        let w = lc.wl[slot] * lam + lc.wc[slot];
        s -= w * (st.base[di] - st.coef[di] * c);
        sl += w * st.coef[di];
    }
    (s, sl)
}

fn sample_field(field: &EllipticityField, domain: &GridDomain) -> Result<Vec<f64>> {
    let win = field.window();
    // cheap coverage check on the lattice bounding box
    let corners = [
        [domain.i0[0] as f64 * domain.h, domain.i0[1] as f64 * domain.h],
        [domain.i1[0] as f64 * domain.h, domain.i1[1] as f64 * domain.h],
    ];
    for c in corners {
        let p = match domain.dim {
            crate::sym::Dim::One => [c[0], 0.0],
            crate::sym::Dim::Two => c,
        };
        if !win.contains(p) {
            return Err(CoreError::OutsideWindow(p[0], p[1]));
        }
    }
    Ok(parallel::map_collect(domain.n_interior(), |pi| {
        field.eval_unchecked(domain.coords[pi])
    }))
}

/// The monotone discrete evaluation of `spec` applied to `u`: a residual
/// field over interior points (boundary slots zero).
pub fn discrete_f(spec: &OperatorSpec, u: &GridFunction) -> Result<GridFunction> {
    let op = CompiledOperator::compile(spec, &u.domain)?;
    Ok(op.residual_field(u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ConstantParams, FieldParams};
    use crate::grid::{quadratic, FrameSet, GridDomain, Shape};
    use crate::operators::OperatorSpec;
    use crate::sym::Dim;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ball(h: f64) -> Arc<GridDomain> {
        GridDomain::new(
            Dim::Two,
            Shape::Ball { center: [0.0, 0.0], radius: 1.0 },
            h,
            FrameSet::standard(Dim::Two, 4).unwrap(),
        )
        .unwrap()
    }

    fn const_field(v: f64) -> EllipticityField {
        EllipticityField::sample(&FieldParams::Constant(ConstantParams::new(Dim::Two, v)), 0)
            .unwrap()
    }

    #[test]
    fn linear_identity_on_paraboloid() {
        let dom = ball(1.0 / 16.0);
        let u = GridFunction::from_fn(&dom, |p| 1.0 - p[0] * p[0] - p[1] * p[1]);
        let spec = OperatorSpec::new(
            crate::operators::OperatorVariant::Linear(LinearRule::isotropic(Dim::Two)),
            1.0,
            const_field(1.0),
        )
        .unwrap();
        let r = discrete_f(&spec, &u).unwrap();
        for &v in &r.interior {
            assert_abs_diff_eq!(v, 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn pucci_plus_exact_on_axis_quadratic() {
        let dom = ball(1.0 / 16.0);
        let m = SymMatrix::diag(Dim::Two, 2.0, -3.0);
        let u = quadratic(&dom, m);
        let spec = OperatorSpec::pucci_plus(1.0, const_field(0.5)).unwrap();
        let r = discrete_f(&spec, &u).unwrap();
        let expect = crate::operators::pucci(crate::operators::PucciSign::Plus, 0.5, 1.0, m)
            .unwrap();
        for &v in &r.interior {
            assert_abs_diff_eq!(v, expect, epsilon = 1e-9);
        }
    }

    #[test]
    fn monotone_in_neighbors() {
        // the structural hypothesis: increasing any neighbor value cannot
        // increase the residual at the center
        let dom = ball(1.0 / 12.0);
        let spec = OperatorSpec::pucci_minus(1.0, const_field(0.5)).unwrap();
        let op = CompiledOperator::compile(&spec, &dom).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut u = GridFunction::from_fn(&dom, |p| (3.0 * p[0]).sin() + (2.0 * p[1]).cos());
        for _ in 0..2000 {
            let pi = rng.gen_range(0..dom.n_interior());
            let dir = rng.gen_range(0..dom.n_dirs());
            let (ap, _) = dom.arm_pair(pi, dir);
            if let Arm::Interior(j) = ap {
                let before = op.residual_at(&u, pi);
                let delta = rng.gen_range(0.0..0.5);
                u.interior[j as usize] += delta;
                let after = op.residual_at(&u, pi);
                u.interior[j as usize] -= delta;
                assert!(after <= before + 1e-12, "residual increased with a neighbor");
            }
        }
    }
}
