//! The nonlinearity F(M, y): Pucci extremal operators, linear trace
//! operators, Bellman minima over finite linear families, and the shift
//! transforms F(· + N) − α used by the effective-operator construction.
//!
//! Sign convention: F is nonincreasing in M (degenerate ellipticity), so
//! the model linear operator is F(M) = −tr(aM).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::env::EllipticityField;
use crate::error::{CoreError, Result};
use crate::sym::{Dim, SymMatrix};

/// Sign selector for the Pucci extremal operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PucciSign {
    Plus,
    Minus,
}

/// P⁺_{μ,Λ}(M) = −μ·tr(M₊) + Λ·tr(M₋), P⁻_{μ,Λ}(M) = −Λ·tr(M₊) + μ·tr(M₋).
pub fn pucci(sign: PucciSign, mu: f64, cap: f64, m: SymMatrix) -> Result<f64> {
    if !(mu > 0.0) || mu > cap {
        return Err(CoreError::InvalidParameter(format!(
            "pucci constants need 0 < mu <= Lambda, got mu={mu}, Lambda={cap}"
        )));
    }
    let (tp, tn) = m.part_traces();
    Ok(match sign {
        PucciSign::Plus => -mu * tp + cap * tn,
        PucciSign::Minus => -cap * tp + mu * tn,
    })
}

/// Spatial coefficient rule for linear operators F(M, y) = −tr(a(y)·M).
#[derive(Debug, Clone, PartialEq)]
pub enum LinearRule {
    /// a(y) = λ(y)·A₀ + (1 − λ(y))·a₀·I.
    FieldBlend { a0: SymMatrix, iso: f64 },
    /// a(y) ≡ A, independent of the field.
    Constant(SymMatrix),
}

impl LinearRule {
    /// a(y) = λ(y)·I, the isotropic rule.
    pub fn isotropic(dim: Dim) -> Self {
        LinearRule::FieldBlend { a0: SymMatrix::identity(dim), iso: 0.0 }
    }

    pub fn constant(a: SymMatrix) -> Self {
        LinearRule::Constant(a)
    }

    pub fn coefficient(&self, lambda: f64) -> SymMatrix {
        match self {
            LinearRule::FieldBlend { a0, iso } => {
                *a0 * lambda + SymMatrix::identity(a0.dim) * (iso * (1.0 - lambda))
            }
            LinearRule::Constant(a) => *a,
        }
    }

    fn dim(&self) -> Dim {
        match self {
            LinearRule::FieldBlend { a0, .. } => a0.dim,
            LinearRule::Constant(a) => a.dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OperatorVariant {
    PucciMinus,
    PucciPlus,
    Linear(LinearRule),
    BellmanMin(Vec<LinearRule>),
}

/// A nonlinearity F(M, y) = base(M + N_shift, λ(y)) + c₀ − α_shift.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub variant: OperatorVariant,
    /// Upper ellipticity constant Λ.
    pub cap: f64,
    pub field: EllipticityField,
    pub shift_matrix: SymMatrix,
    pub shift_alpha: f64,
    /// Configured constant F(0, y) of the unshifted operator.
    pub zero_offset: f64,
}

impl OperatorSpec {
    pub fn new(variant: OperatorVariant, cap: f64, field: EllipticityField) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(CoreError::InvalidParameter("Lambda must be positive".into()));
        }
        if let OperatorVariant::BellmanMin(rules) = &variant {
            if rules.is_empty() {
                return Err(CoreError::InvalidParameter("bellman family is empty".into()));
            }
        }
        let dim = field.dim();
        match &variant {
            OperatorVariant::Linear(r) if r.dim() != dim => {
                return Err(CoreError::InvalidParameter("rule dimension mismatch".into()))
            }
            OperatorVariant::BellmanMin(rs) if rs.iter().any(|r| r.dim() != dim) => {
                return Err(CoreError::InvalidParameter("rule dimension mismatch".into()))
            }
            _ => {}
        }
        Ok(OperatorSpec {
            variant,
            cap,
            field,
            shift_matrix: SymMatrix::zero(dim),
            shift_alpha: 0.0,
            zero_offset: 0.0,
        })
    }

    /// Convenience: Pucci minus with the given field.
    pub fn pucci_minus(cap: f64, field: EllipticityField) -> Result<Self> {
        Self::new(OperatorVariant::PucciMinus, cap, field)
    }

    pub fn pucci_plus(cap: f64, field: EllipticityField) -> Result<Self> {
        Self::new(OperatorVariant::PucciPlus, cap, field)
    }

    pub fn dim(&self) -> Dim {
        self.field.dim()
    }

    pub fn with_zero_offset(mut self, c0: f64) -> Self {
        self.zero_offset = c0;
        self
    }

    /// The transform F ↦ F(· + N) − α; composes with existing shifts.
    pub fn shifted(&self, n: SymMatrix, alpha: f64) -> Self {
        let mut s = self.clone();
        s.shift_matrix = s.shift_matrix + n;
        s.shift_alpha += alpha;
        s
    }

    /// The same operator over a fresh environment realization.
    pub fn reseeded(&self, seed: u64) -> Result<Self> {
        let mut s = self.clone();
        let zoom = self.field.zoom();
        s.field = EllipticityField::sample(self.field.params(), seed)?;
        if zoom != 1.0 {
            s.field = s.field.microscale(zoom);
        }
        Ok(s)
    }

    /// The operator with its environment viewed at microscopic scale ε.
    pub fn at_microscale(&self, eps: f64) -> Self {
        let mut s = self.clone();
        s.field = s.field.microscale(eps);
        s
    }

    /// Evaluate at an explicit ellipticity value (no field lookup).
    pub fn eval_with_lambda(&self, m: SymMatrix, lambda: f64) -> f64 {
        let mm = m + self.shift_matrix;
        let base = match &self.variant {
            OperatorVariant::PucciMinus => {
                let (tp, tn) = mm.part_traces();
                -self.cap * tp + lambda * tn
            }
            OperatorVariant::PucciPlus => {
                let (tp, tn) = mm.part_traces();
                -lambda * tp + self.cap * tn
            }
            OperatorVariant::Linear(rule) => {
                let a = rule.coefficient(lambda);
                -trace_product(&a, &mm)
            }
            OperatorVariant::BellmanMin(rules) => rules
                .iter()
                .map(|r| -trace_product(&r.coefficient(lambda), &mm))
                .fold(f64::INFINITY, f64::min),
        };
        base + self.zero_offset - self.shift_alpha
    }

    /// F(M, y); errors when y is outside the field window.
    pub fn eval(&self, m: SymMatrix, y: [f64; 2]) -> Result<f64> {
        Ok(self.eval_with_lambda(m, self.field.evaluate(y)?))
    }

    /// Conservative bracket [essinf_y F(M, y), esssup_y F(M, y)] derived
    /// from the field's distributional range; F is affine in λ for every
    /// variant, so endpoints suffice (Bellman minima get an outer hull).
    pub fn value_range(&self, m: SymMatrix) -> (f64, f64) {
        let (llo, lhi) = self.field.value_range();
        match &self.variant {
            OperatorVariant::BellmanMin(rules) => {
                let mut lo = f64::INFINITY;
                let mut hi = f64::INFINITY;
                let mm = m + self.shift_matrix;
                for r in rules {
                    let f_lo = -trace_product(&r.coefficient(llo), &mm);
                    let f_hi = -trace_product(&r.coefficient(lhi), &mm);
                    lo = lo.min(f_lo.min(f_hi));
                    hi = hi.min(f_lo.max(f_hi));
                }
                let off = self.zero_offset - self.shift_alpha;
                (lo + off, hi + off)
            }
            _ => {
                let a = self.eval_with_lambda(m, llo);
                let b = self.eval_with_lambda(m, lhi);
                (a.min(b), a.max(b))
            }
        }
    }
}

fn trace_product(a: &SymMatrix, m: &SymMatrix) -> f64 {
    match a.dim {
        Dim::One => a.xx * m.xx,
        Dim::Two => a.xx * m.xx + 2.0 * a.xy * m.xy + a.yy * m.yy,
    }
}

/// Outcome of the random ellipticity-sandwich audit.
#[derive(Debug, Clone)]
pub struct SandwichReport {
    pub n_trials: usize,
    pub violations: usize,
    /// Largest observed excursion outside the sandwich (0 when clean).
    pub max_violation: f64,
}

/// Samples random ordered pairs M ≥ N and points y, and checks
/// P⁻_{λ(y),Λ}(M−N) ≤ F(M,y) − F(N,y) ≤ P⁺_{λ(y),Λ}(M−N) with 1e-12
/// absolute slack. Violations are reported, not thrown.
pub fn ellipticity_sandwich_check(
    spec: &OperatorSpec,
    n_trials: usize,
    seed: u64,
) -> SandwichReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = spec.dim();
    let win = spec.field.window();
    let mut violations = 0usize;
    let mut max_violation = 0.0f64;
    for _ in 0..n_trials {
        let n = random_sym(&mut rng, dim, 2.0);
        let m = n + random_psd(&mut rng, dim, 2.0);
        let y = win.sample_uniform(&mut rng);
        let lam = spec.field.eval_unchecked(y);
        let diff = spec.eval_with_lambda(m, lam) - spec.eval_with_lambda(n, lam);
        let d = m - n;
        let mu = lam.min(spec.cap);
        let lo = pucci(PucciSign::Minus, mu, spec.cap, d).unwrap();
        let hi = pucci(PucciSign::Plus, mu, spec.cap, d).unwrap();
        let excess = (lo - diff).max(diff - hi);
        if excess > 1e-12 {
            violations += 1;
            max_violation = max_violation.max(excess);
        }
    }
    SandwichReport { n_trials, violations, max_violation }
}

pub(crate) fn random_sym<R: Rng>(rng: &mut R, dim: Dim, scale: f64) -> SymMatrix {
    match dim {
        Dim::One => SymMatrix::new_1d(rng.gen_range(-scale..scale)),
        Dim::Two => SymMatrix::new_2d(
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
            rng.gen_range(-scale..scale),
        ),
    }
}

pub(crate) fn random_psd<R: Rng>(rng: &mut R, dim: Dim, scale: f64) -> SymMatrix {
    match dim {
        Dim::One => SymMatrix::new_1d(rng.gen_range(0.0..scale)),
        Dim::Two => {
            // RᵀR for a random 2×2 R, rescaled.
            let r = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            let s = scale * rng.gen::<f64>();
            SymMatrix::new_2d(
                s * (r[0] * r[0] + r[2] * r[2]),
                s * (r[0] * r[1] + r[2] * r[3]),
                s * (r[1] * r[1] + r[3] * r[3]),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ConstantParams, FieldParams};
    use approx::assert_abs_diff_eq;

    fn const_field(dim: Dim, v: f64) -> EllipticityField {
        EllipticityField::sample(&FieldParams::Constant(ConstantParams::new(dim, v)), 0).unwrap()
    }

    #[test]
    fn pucci_known_values() {
        let i2 = SymMatrix::identity(Dim::Two);
        assert_abs_diff_eq!(pucci(PucciSign::Plus, 0.5, 1.0, i2).unwrap(), -1.0);
        let m = SymMatrix::diag(Dim::Two, 2.0, -3.0);
        assert_abs_diff_eq!(pucci(PucciSign::Minus, 0.5, 1.0, m).unwrap(), -0.5);
        assert_abs_diff_eq!(
            pucci(PucciSign::Plus, 0.3, 2.0, SymMatrix::zero(Dim::Two)).unwrap(),
            0.0
        );
        assert!(pucci(PucciSign::Plus, 0.0, 1.0, i2).is_err());
        assert!(pucci(PucciSign::Plus, 2.0, 1.0, i2).is_err());
    }

    #[test]
    fn linear_spec_trace() {
        let field = const_field(Dim::Two, 1.0);
        let spec =
            OperatorSpec::new(OperatorVariant::Linear(LinearRule::isotropic(Dim::Two)), 1.0, field)
                .unwrap();
        let m = SymMatrix::diag(Dim::Two, 1.0, 1.0);
        assert_abs_diff_eq!(spec.eval(m, [0.0, 0.0]).unwrap(), -2.0);
    }

    #[test]
    fn pucci_minus_spec_matches_op() {
        let field = const_field(Dim::Two, 0.5);
        let spec = OperatorSpec::pucci_minus(1.0, field).unwrap();
        let m = SymMatrix::diag(Dim::Two, 2.0, -3.0);
        assert_abs_diff_eq!(spec.eval(m, [0.1, 0.2]).unwrap(), -0.5);
    }

    #[test]
    fn shift_is_definitional() {
        let field = const_field(Dim::Two, 0.7);
        let spec = OperatorSpec::pucci_plus(1.5, field).unwrap();
        let m0 = SymMatrix::new_2d(0.4, -0.3, 1.1);
        let a0 = 0.37;
        let shifted = spec.shifted(m0, a0);
        let lhs = shifted.eval(SymMatrix::zero(Dim::Two), [0.0, 0.0]).unwrap();
        let rhs = spec.eval(m0, [0.0, 0.0]).unwrap() - a0;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-15);
    }

    #[test]
    fn sandwich_clean_and_corrupted() {
        let field = const_field(Dim::Two, 0.5);
        let clean = OperatorSpec::pucci_minus(1.0, field.clone()).unwrap();
        let rep = ellipticity_sandwich_check(&clean, 500, 3);
        assert_eq!(rep.violations, 0, "pucci sandwich is tight by definition");

        // a(y) with an eigenvalue above the claimed Lambda
        let bad_rule = LinearRule::constant(SymMatrix::diag(Dim::Two, 3.0, 0.5));
        let bad = OperatorSpec::new(OperatorVariant::Linear(bad_rule), 1.0, field).unwrap();
        let rep = ellipticity_sandwich_check(&bad, 500, 3);
        assert!(rep.violations > 0 && rep.max_violation > 0.0);
    }

    #[test]
    fn degenerate_ellipticity_random_trials() {
        let field = const_field(Dim::Two, 0.5);
        let specs = [
            OperatorSpec::pucci_minus(1.0, field.clone()).unwrap(),
            OperatorSpec::pucci_plus(1.0, field.clone()).unwrap(),
            OperatorSpec::new(
                OperatorVariant::BellmanMin(vec![
                    LinearRule::isotropic(Dim::Two),
                    LinearRule::FieldBlend { a0: SymMatrix::diag(Dim::Two, 1.0, 0.8), iso: 0.1 },
                ]),
                1.0,
                field,
            )
            .unwrap(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for spec in &specs {
            for _ in 0..300 {
                let m = random_sym(&mut rng, Dim::Two, 2.0);
                let n = m + random_psd(&mut rng, Dim::Two, 1.5);
                // m <= n implies F(m) >= F(n)
                let fm = spec.eval_with_lambda(m, 0.5);
                let fn_ = spec.eval_with_lambda(n, 0.5);
                assert!(fm >= fn_ - 1e-12);
            }
        }
    }
}
