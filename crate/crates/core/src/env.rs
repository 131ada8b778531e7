//! Seeded samplers of stationary ellipticity fields λ(y, ω) ∈ (0, λ_max].
//!
//! Three families are provided: a constant field, a mollified random
//! checkerboard, and a "trap" field built from superposed Poisson point
//! processes whose trap depths λ_k decay polynomially in the trap index k.
//! All sampling is counter-based: the value at a point depends only on
//! (params, seed, point), never on evaluation order, so fields are
//! immutable and safe to query from many workers at once.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{CoreError, Result};
use crate::parallel;
use crate::sym::Dim;

/// Axis-aligned box in R^d. For d = 1 the second axis is ignored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub dim: Dim,
    pub lo: [f64; 2],
    pub hi: [f64; 2],
}

impl Rect {
    pub fn new_1d(lo: f64, hi: f64) -> Self {
        Rect { dim: Dim::One, lo: [lo, 0.0], hi: [hi, 0.0] }
    }

    pub fn new_2d(lo: [f64; 2], hi: [f64; 2]) -> Self {
        Rect { dim: Dim::Two, lo, hi }
    }

    /// Cube [-half, half]^d.
    pub fn centered(dim: Dim, half: f64) -> Self {
        match dim {
            Dim::One => Rect::new_1d(-half, half),
            Dim::Two => Rect::new_2d([-half, -half], [half, half]),
        }
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let mut ok = p[0] >= self.lo[0] && p[0] <= self.hi[0];
        if self.dim == Dim::Two {
            ok = ok && p[1] >= self.lo[1] && p[1] <= self.hi[1];
        }
        ok
    }

    pub fn volume(&self) -> f64 {
        match self.dim {
            Dim::One => self.hi[0] - self.lo[0],
            Dim::Two => (self.hi[0] - self.lo[0]) * (self.hi[1] - self.lo[1]),
        }
    }

    pub fn sample_uniform<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        let x = rng.gen_range(self.lo[0]..self.hi[0]);
        let y = match self.dim {
            Dim::One => 0.0,
            Dim::Two => rng.gen_range(self.lo[1]..self.hi[1]),
        };
        [x, y]
    }
}

/// SplitMix64-style mixing of a seed with stream tags and lattice indices.
/// This is the only source of randomness derivation in the crate.
pub(crate) fn mix(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        let mut z = h ^ p.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

const TAG_OFFSET: u64 = 1;
const TAG_CELL: u64 = 2;
const TAG_BLOCK: u64 = 3;
const TAG_MC: u64 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ConstantParams {
    pub dim: Dim,
    pub value: f64,
    pub window: Rect,
}

impl ConstantParams {
    pub fn new(dim: Dim, value: f64) -> Self {
        ConstantParams { dim, value, window: Rect::centered(dim, 1024.0) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckerboardParams {
    pub dim: Dim,
    pub cell_size: f64,
    /// Cell values, drawn i.i.d. per integer cell.
    pub values: Vec<f64>,
    /// Probabilities matching `values`; must sum to 1.
    pub probs: Vec<f64>,
    /// Half-width of the linear blend across cell boundaries.
    /// Zero gives the discontinuous checkerboard.
    pub mollify_width: f64,
    pub window: Rect,
}

impl CheckerboardParams {
    /// Two values with equal weights. Mollification defaults to
    /// cell_size/8 so the field is Lipschitz.
    pub fn two_valued(dim: Dim, cell_size: f64, v1: f64, v2: f64) -> Self {
        CheckerboardParams {
            dim,
            cell_size,
            values: vec![v1, v2],
            probs: vec![0.5, 0.5],
            mollify_width: cell_size / 8.0,
            window: Rect::centered(dim, 1024.0),
        }
    }

    pub fn sharp(mut self) -> Self {
        self.mollify_width = 0.0;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapFieldParams {
    pub dim: Dim,
    /// Trap exponent in (0, 1); controls the depth decay λ_k ~ k^{-(1+α)}.
    pub alpha: f64,
    /// Poisson intensity prefactor: E#(P_k ∩ V) = a·|V|·k^{-1-d}.
    pub a: f64,
    /// Background level λ_*.
    pub lambda_star: f64,
    /// Truncation of the trap index.
    pub k_max: usize,
    pub window: Rect,
}

impl TrapFieldParams {
    /// Defaults λ_* = α/(2d).
    pub fn new(dim: Dim, alpha: f64, a: f64, k_max: usize) -> Self {
        let lambda_star = alpha / (2.0 * dim.n() as f64);
        TrapFieldParams { dim, alpha, a, lambda_star, k_max, window: Rect::centered(dim, 1024.0) }
    }

    /// Nominal trap depth λ_k = 1 / (k^{1+α} · log³(2+k)).
    pub fn lambda_k(&self, k: usize) -> f64 {
        let kf = k as f64;
        1.0 / (kf.powf(1.0 + self.alpha) * (2.0 + kf).ln().powi(3))
    }

    /// Effective depth used by the profiles: deep traps keep λ_k, but a
    /// profile can never exceed the background, so shallow indices are
    /// capped at λ_*.
    pub fn depth(&self, k: usize) -> f64 {
        self.lambda_k(k).min(self.lambda_star)
    }

    /// Exact E[λ^{-p}] (optionally restricted to {λ < μ}) by integrating
    /// the void-probability law of the deepest covering trap. Uses
    /// log-spaced quadrature; resolves arbitrarily deep traps, unlike
    /// point-sampling Monte Carlo.
    pub fn inverse_moment_exact(&self, p: f64, sublevel: Option<f64>) -> f64 {
        let d = self.dim.n() as f64;
        let omega_d = match self.dim {
            Dim::One => 2.0, // |B_1| in R^1
            Dim::Two => std::f64::consts::PI,
        };
        let ls = self.lambda_star;
        let depths: Vec<(f64, f64)> = (1..=self.k_max)
            .map(|k| (self.depth(k), self.a * (k as f64).powf(-1.0 - d)))
            .collect();
        // P[λ(0) < v] = 1 - exp(-Σ_k ν_k ω_d s_k(v)^d), where s_k(v) is the
        // radius below which the k-profile stays under v.
        let cdf = |v: f64| -> f64 {
            let mut rate = 0.0;
            for &(dep, nu) in &depths {
                if v > dep && ls > dep {
                    let s = (1.0 + (v - dep) / (ls - dep)).min(2.0);
                    rate += nu * omega_d * s.powf(d);
                }
            }
            1.0 - (-rate).exp()
        };
        let v_min = depths.iter().map(|&(dep, _)| dep).fold(ls, f64::min);
        let v_cap = sublevel.map_or(ls, |mu| mu.min(ls));
        // E[X^{-p} 1_{X < cap}] = cap^{-p} F(cap) + p ∫_{v_min}^{cap} v^{-p-1} F(v) dv
        // (integration by parts against the CDF; the boundary term vanishes
        // at v_min where F = 0).
        if v_cap <= v_min {
            return if sublevel.is_none() { v_cap.powf(-p) } else { 0.0 };
        }
        let (a_log, b_log) = (v_min.ln(), v_cap.ln());
        let n = 4000;
        let hq = (b_log - a_log) / n as f64;
        let mut integral = 0.0;
        for i in 0..=n {
            let u = a_log + i as f64 * hq;
            let v = u.exp();
            // integrand of ∫ v^{-p-1} F(v) dv with dv = v du
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            integral += w * v.powf(-p) * cdf(v) * hq;
        }
        let tail = if sublevel.is_none() {
            // mass at λ = λ_*: P[λ ≥ cap] · cap^{-p}
            v_cap.powf(-p)
        } else {
            v_cap.powf(-p) * cdf(v_cap)
        };
        tail + p * integral
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FieldParams {
    Constant(ConstantParams),
    Checkerboard(CheckerboardParams),
    Trap(TrapFieldParams),
}

impl FieldParams {
    pub fn dim(&self) -> Dim {
        match self {
            FieldParams::Constant(p) => p.dim,
            FieldParams::Checkerboard(p) => p.dim,
            FieldParams::Trap(p) => p.dim,
        }
    }

    pub fn window(&self) -> Rect {
        match self {
            FieldParams::Constant(p) => p.window,
            FieldParams::Checkerboard(p) => p.window,
            FieldParams::Trap(p) => p.window,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CoreError::InvalidParameter(m.to_string()));
        match self {
            FieldParams::Constant(p) => {
                if !(p.value > 0.0) {
                    return bad("constant field value must be positive");
                }
            }
            FieldParams::Checkerboard(p) => {
                if !(p.cell_size > 0.0) {
                    return bad("cell_size must be positive");
                }
                if p.values.is_empty() {
                    return bad("checkerboard value list is empty");
                }
                if p.values.len() != p.probs.len() {
                    return bad("values and probs have different lengths");
                }
                if p.values.iter().any(|&v| !(v > 0.0)) {
                    return bad("checkerboard values must be positive");
                }
                if p.probs.iter().any(|&w| !(w >= 0.0)) {
                    return bad("probabilities must be nonnegative");
                }
                let s: f64 = p.probs.iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return bad("probabilities must sum to 1");
                }
                if p.mollify_width < 0.0 || p.mollify_width > p.cell_size / 2.0 {
                    return bad("mollify_width must lie in [0, cell_size/2]");
                }
            }
            FieldParams::Trap(p) => {
                if !(p.alpha > 0.0 && p.alpha < 1.0) {
                    return bad("trap exponent alpha must lie in (0, 1)");
                }
                if !(p.a >= 0.0) {
                    return bad("intensity prefactor a must be nonnegative");
                }
                if !(p.lambda_star > 0.0) {
                    return bad("lambda_star must be positive");
                }
                if p.k_max < 1 {
                    return bad("k_max must be at least 1");
                }
            }
        }
        Ok(())
    }
}

/// A trap: a point of the k-th Poisson process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trap {
    pub center: [f64; 2],
    pub k: usize,
    /// Effective depth of the profile at the center.
    pub depth: f64,
}

/// Spatial block size for lazy Poisson sampling. Traps reach distance 2,
/// so a query touches the 3^d blocks around its own.
const BLOCK: f64 = 4.0;

struct TrapState {
    params: TrapFieldParams,
    seed: u64,
    blocks: RwLock<HashMap<(i64, i64), Arc<Vec<Trap>>>>,
}

impl TrapState {
    fn block(&self, bx: i64, by: i64) -> Arc<Vec<Trap>> {
        if let Some(b) = self.blocks.read().unwrap().get(&(bx, by)) {
            return b.clone();
        }
        let built = Arc::new(self.build_block(bx, by));
        let mut w = self.blocks.write().unwrap();
        w.entry((bx, by)).or_insert(built).clone()
    }

    fn build_block(&self, bx: i64, by: i64) -> Vec<Trap> {
        let p = &self.params;
        let d = p.dim.n() as f64;
        let vol = match p.dim {
            Dim::One => BLOCK,
            Dim::Two => BLOCK * BLOCK,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[
            self.seed,
            TAG_BLOCK,
            bx as u64,
            by as u64,
        ]));
        let mut traps = Vec::new();
        if p.a == 0.0 {
            return traps;
        }
        for k in 1..=p.k_max {
            let mean = p.a * vol * (k as f64).powf(-1.0 - d);
            let n = if mean > 0.0 {
                Poisson::new(mean).unwrap().sample(&mut rng) as usize
            } else {
                0
            };
            for _ in 0..n {
                let x = (bx as f64 + rng.gen::<f64>()) * BLOCK;
                let y = match p.dim {
                    Dim::One => 0.0,
                    Dim::Two => (by as f64 + rng.gen::<f64>()) * BLOCK,
                };
                traps.push(Trap { center: [x, y], k, depth: p.depth(k) });
            }
        }
        traps
    }

    /// All traps whose block intersects the axis-aligned rectangle
    /// [lo, hi] padded by `pad`.
    fn traps_near(&self, lo: [f64; 2], hi: [f64; 2], pad: f64) -> Vec<Trap> {
        let bx0 = ((lo[0] - pad) / BLOCK).floor() as i64;
        let bx1 = ((hi[0] + pad) / BLOCK).floor() as i64;
        let (by0, by1) = match self.params.dim {
            Dim::One => (0, 0),
            Dim::Two => (
                ((lo[1] - pad) / BLOCK).floor() as i64,
                ((hi[1] + pad) / BLOCK).floor() as i64,
            ),
        };
        let mut out = Vec::new();
        for bx in bx0..=bx1 {
            for by in by0..=by1 {
                out.extend(self.block(bx, by).iter().copied());
            }
        }
        out
    }

    fn eval(&self, y: [f64; 2]) -> f64 {
        let p = &self.params;
        let mut lam = p.lambda_star;
        for t in self.traps_near(y, y, 2.0 + BLOCK * 1e-9) {
            let dx = y[0] - t.center[0];
            let dy = y[1] - t.center[1];
            let s = (dx * dx + dy * dy).sqrt();
            if s < 2.0 {
                lam = lam.min(profile(t.depth, p.lambda_star, s));
            }
        }
        lam
    }
}

/// Radial trap profile: depth on B_1, background outside B_2, linear in
/// the radius between. Lipschitz constant λ_* − depth ≤ λ_*.
fn profile(depth: f64, background: f64, s: f64) -> f64 {
    if s <= 1.0 {
        depth
    } else if s >= 2.0 {
        background
    } else {
        depth + (s - 1.0) * (background - depth)
    }
}

enum FieldImpl {
    Constant(f64),
    Checkerboard {
        params: CheckerboardParams,
        /// Uniform random offset in [0, cell)^d, realizing continuum
        /// stationarity.
        offset: [f64; 2],
        /// Cumulative probabilities for the value pick.
        cum: Vec<f64>,
    },
    Trap(TrapState),
}

/// A sampled ellipticity field: an evaluatable realization λ(·, ω).
/// `zoom` < 1 compresses the microstructure: the field reads λ(y/zoom).
#[derive(Clone)]
pub struct EllipticityField {
    inner: Arc<Inner>,
    zoom: f64,
}

struct Inner {
    params: FieldParams,
    seed: u64,
    imp: FieldImpl,
}

impl std::fmt::Debug for EllipticityField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EllipticityField")
            .field("params", &self.inner.params)
            .field("seed", &self.inner.seed)
            .field("zoom", &self.zoom)
            .finish()
    }
}

impl EllipticityField {
    /// Samples a field realization. Deterministic: identical arguments
    /// give pointwise identical fields.
    pub fn sample(params: &FieldParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let imp = match params {
            FieldParams::Constant(p) => FieldImpl::Constant(p.value),
            FieldParams::Checkerboard(p) => {
                let ox = unit_f64(mix(&[seed, TAG_OFFSET, 0])) * p.cell_size;
                let oy = unit_f64(mix(&[seed, TAG_OFFSET, 1])) * p.cell_size;
                let mut cum = Vec::with_capacity(p.probs.len());
                let mut acc = 0.0;
                for &w in &p.probs {
                    acc += w;
                    cum.push(acc);
                }
                FieldImpl::Checkerboard {
                    params: p.clone(),
                    offset: [ox, if p.dim == Dim::Two { oy } else { 0.0 }],
                    cum,
                }
            }
            FieldParams::Trap(p) => FieldImpl::Trap(TrapState {
                params: p.clone(),
                seed,
                blocks: RwLock::new(HashMap::new()),
            }),
        };
        Ok(EllipticityField { inner: Arc::new(Inner { params: params.clone(), seed, imp }), zoom: 1.0 })
    }

    /// The same realization viewed at microscopic scale ε: evaluates
    /// λ(y/ε). Trap enumeration is only available at zoom 1.
    pub fn microscale(&self, eps: f64) -> Self {
        assert!(eps > 0.0, "microscale factor must be positive");
        EllipticityField { inner: self.inner.clone(), zoom: self.zoom * eps }
    }

    pub fn params(&self) -> &FieldParams {
        &self.inner.params
    }

    pub fn seed(&self) -> u64 {
        self.inner.seed
    }

    pub fn zoom(&self) -> f64 {
        self.zoom
    }

    pub fn dim(&self) -> Dim {
        self.inner.params.dim()
    }

    pub fn window(&self) -> Rect {
        let w = self.inner.params.window();
        Rect {
            dim: w.dim,
            lo: [w.lo[0] * self.zoom, w.lo[1] * self.zoom],
            hi: [w.hi[0] * self.zoom, w.hi[1] * self.zoom],
        }
    }

    /// Largest value the field can attain.
    pub fn lambda_max(&self) -> f64 {
        self.value_range().1
    }

    /// Distributional range (min over realizations, max over realizations).
    pub fn value_range(&self) -> (f64, f64) {
        match &self.inner.imp {
            FieldImpl::Constant(v) => (*v, *v),
            FieldImpl::Checkerboard { params, .. } => {
                let lo = params.values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = params.values.iter().cloned().fold(0.0, f64::max);
                (lo, hi)
            }
            FieldImpl::Trap(state) => {
                let p = &state.params;
                let deepest = (1..=p.k_max).map(|k| p.depth(k)).fold(p.lambda_star, f64::min);
                (deepest, p.lambda_star)
            }
        }
    }

    /// λ(y); errors when y is outside the guaranteed window.
    pub fn evaluate(&self, y: [f64; 2]) -> Result<f64> {
        if !self.window().contains(y) {
            return Err(CoreError::OutsideWindow(y[0], y[1]));
        }
        Ok(self.eval_unchecked(y))
    }

    /// λ(y) without the window check; inner loops pre-verify coverage.
    pub fn eval_unchecked(&self, y: [f64; 2]) -> f64 {
        let y = if self.zoom == 1.0 { y } else { [y[0] / self.zoom, y[1] / self.zoom] };
        match &self.inner.imp {
            FieldImpl::Constant(v) => *v,
            FieldImpl::Checkerboard { params, offset, cum } => {
                checkerboard_eval(params, *offset, cum, self.inner.seed, y)
            }
            FieldImpl::Trap(state) => state.eval(y),
        }
    }

    /// Traps of the realization whose centers lie in `region`
    /// (trap fields only; empty otherwise).
    pub fn traps_in(&self, region: Rect) -> Vec<Trap> {
        assert!(self.zoom == 1.0, "trap enumeration requires zoom 1");
        match &self.inner.imp {
            FieldImpl::Trap(state) => {
                let mut out: Vec<Trap> = state
                    .traps_near(region.lo, region.hi, 0.0)
                    .into_iter()
                    .filter(|t| region.contains(t.center))
                    .collect();
                out.sort_by(|a, b| {
                    a.k.cmp(&b.k)
                        .then(a.center[0].total_cmp(&b.center[0]))
                        .then(a.center[1].total_cmp(&b.center[1]))
                });
                out
            }
            _ => Vec::new(),
        }
    }
}

fn checkerboard_eval(
    p: &CheckerboardParams,
    offset: [f64; 2],
    cum: &[f64],
    seed: u64,
    y: [f64; 2],
) -> f64 {
    let cell_value = |i: i64, j: i64| -> f64 {
        let r = unit_f64(mix(&[seed, TAG_CELL, i as u64, j as u64]));
        let idx = cum.iter().position(|&c| r < c).unwrap_or(cum.len() - 1);
        p.values[idx]
    };
    // Per-axis partition of unity: plateau of the cell plus a linear ramp
    // of half-width w across each boundary.
    let w = p.mollify_width / p.cell_size; // normalized half-width
    let blend = |frac: f64| -> f64 {
        // weight of the *next* cell as a function of the in-cell fraction
        if w == 0.0 {
            return 0.0;
        }
        if frac >= 1.0 - w {
            0.5 * (frac - (1.0 - w)) / w
        } else {
            0.0
        }
    };
    let blend_prev = |frac: f64| -> f64 {
        if w == 0.0 {
            return 0.0;
        }
        if frac <= w {
            0.5 * (w - frac) / w
        } else {
            0.0
        }
    };
    let xs = (y[0] - offset[0]) / p.cell_size;
    let ix = xs.floor() as i64;
    let fx = xs - xs.floor();
    let (wx_next, wx_prev) = (blend(fx), blend_prev(fx));
    let wx = [wx_prev, 1.0 - wx_prev - wx_next, wx_next];
    match p.dim {
        Dim::One => {
            wx[0] * cell_value(ix - 1, 0) + wx[1] * cell_value(ix, 0) + wx[2] * cell_value(ix + 1, 0)
        }
        Dim::Two => {
            let ys = (y[1] - offset[1]) / p.cell_size;
            let iy = ys.floor() as i64;
            let fy = ys - ys.floor();
            let (wy_next, wy_prev) = (blend(fy), blend_prev(fy));
            let wy = [wy_prev, 1.0 - wy_prev - wy_next, wy_next];
            let mut acc = 0.0;
            for (a, &wxa) in wx.iter().enumerate() {
                if wxa == 0.0 {
                    continue;
                }
                for (b, &wyb) in wy.iter().enumerate() {
                    if wyb == 0.0 {
                        continue;
                    }
                    acc += wxa * wyb * cell_value(ix + a as i64 - 1, iy + b as i64 - 1);
                }
            }
            acc
        }
    }
}

/// Monte Carlo estimate of E[λ^{-p}] with standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub p: f64,
    pub value: f64,
    pub stderr: f64,
    pub n_samples: usize,
    /// Optional (μ, E[λ^{-p}·1_{λ<μ}]) restriction.
    pub sublevel: Option<(f64, f64)>,
}

/// Spatial Monte Carlo average of λ(Y_i)^{-p} over uniform points of the
/// field window (one realization; the ergodic average).
pub fn estimate_moment(
    params: &FieldParams,
    p: f64,
    n_samples: usize,
    seed: u64,
    sublevel_mu: Option<f64>,
) -> Result<MomentEstimate> {
    if !(p > 0.0) {
        return Err(CoreError::InvalidParameter("moment exponent p must be positive".into()));
    }
    if n_samples < 1 {
        return Err(CoreError::InvalidParameter("n_samples must be at least 1".into()));
    }
    let field = EllipticityField::sample(params, seed)?;
    let window = params.window();
    let vals = parallel::map_collect(n_samples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(&[seed, TAG_MC, i as u64]));
        let y = window.sample_uniform(&mut rng);
        field.eval_unchecked(y).powf(-p)
    });
    let n = n_samples as f64;
    let mean: f64 = vals.iter().sum::<f64>() / n;
    let var: f64 = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n.max(2.0);
    let stderr = (var / n).sqrt();
    let sublevel = sublevel_mu.map(|mu| {
        let mut acc = 0.0;
        for (i, v) in vals.iter().enumerate() {
            // v = λ^{-p}; λ < μ ⟺ v > μ^{-p}
            let _ = i;
            if *v > mu.powf(-p) {
                acc += v;
            }
        }
        (mu, acc / n)
    });
    Ok(MomentEstimate { p, value: mean, stderr, n_samples, sublevel })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn constant_field_is_constant() {
        let params = FieldParams::Constant(ConstantParams::new(Dim::Two, 1.0));
        let f = EllipticityField::sample(&params, 7).unwrap();
        assert_eq!(f.evaluate([0.3, -2.0]).unwrap(), 1.0);
        assert_eq!(f.evaluate([100.0, 5.0]).unwrap(), 1.0);
    }

    #[test]
    fn invalid_params_rejected() {
        let mut cb = CheckerboardParams::two_valued(Dim::One, 1.0, 1.0, 0.25);
        cb.values.clear();
        cb.probs.clear();
        assert!(EllipticityField::sample(&FieldParams::Checkerboard(cb), 0).is_err());
        let mut tp = TrapFieldParams::new(Dim::Two, 0.5, 3.0, 10);
        tp.k_max = 0;
        assert!(EllipticityField::sample(&FieldParams::Trap(tp), 0).is_err());
        let c = ConstantParams { dim: Dim::One, value: -1.0, window: Rect::new_1d(-1.0, 1.0) };
        assert!(EllipticityField::sample(&FieldParams::Constant(c), 0).is_err());
    }

    #[test]
    fn outside_window_is_a_domain_error() {
        let mut p = ConstantParams::new(Dim::Two, 1.0);
        p.window = Rect::new_2d([-1.0, -1.0], [1.0, 1.0]);
        let f = EllipticityField::sample(&FieldParams::Constant(p), 0).unwrap();
        assert!(matches!(f.evaluate([2.0, 0.0]), Err(CoreError::OutsideWindow(..))));
    }

    #[test]
    fn trap_field_without_traps_is_background() {
        let params = FieldParams::Trap(TrapFieldParams::new(Dim::Two, 0.5, 0.0, 100));
        let f = EllipticityField::sample(&params, 3).unwrap();
        assert_abs_diff_eq!(f.evaluate([0.0, 0.0]).unwrap(), 0.125);
        assert_abs_diff_eq!(f.evaluate([17.3, -40.0]).unwrap(), 0.125);
    }

    #[test]
    fn checkerboard_range_and_continuity() {
        let cb = CheckerboardParams::two_valued(Dim::Two, 1.0, 1.0, 0.25);
        let f = EllipticityField::sample(&FieldParams::Checkerboard(cb), 11).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..2000 {
            let y = [rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0)];
            let v = f.evaluate(y).unwrap();
            assert!(v >= 0.25 - 1e-12 && v <= 1.0 + 1e-12);
            // finite-difference continuity: Lipschitz bound from the ramp
            let dv = f.evaluate([y[0] + 1e-4, y[1]]).unwrap() - v;
            assert!(dv.abs() <= 0.75 / (2.0 * 0.125) * 1e-4 + 1e-12);
        }
    }

    #[test]
    fn determinism_at_random_points() {
        let params = FieldParams::Trap(TrapFieldParams::new(Dim::Two, 0.5, 3.0, 50));
        let f1 = EllipticityField::sample(&params, 42).unwrap();
        let f2 = EllipticityField::sample(&params, 42).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10_000 {
            let y = [rng.gen_range(-30.0..30.0), rng.gen_range(-30.0..30.0)];
            assert_eq!(f1.eval_unchecked(y), f2.eval_unchecked(y));
        }
    }

    #[test]
    fn constant_moment_is_exact() {
        let params = FieldParams::Constant(ConstantParams::new(Dim::One, 0.5));
        let est = estimate_moment(&params, 2.0, 100, 1, None).unwrap();
        assert_abs_diff_eq!(est.value, 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(est.stderr, 0.0, epsilon = 1e-12);
    }
}
