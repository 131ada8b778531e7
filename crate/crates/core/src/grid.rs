//! Masked lattice domains, grid functions and wide-stencil frames.
//!
//! A domain is a set of lattice points of spacing h inside a box, ball or
//! annulus. Directional second differences reach neighbors along integer
//! offset vectors; where an arm would cross the boundary it is clipped at
//! the exact intersection with the continuum boundary and reads a stored
//! Dirichlet value there (unequal-arm three-point formula). This keeps the
//! scheme monotone and exact on quadratics up to the boundary.

use std::sync::Arc;

use crate::error::{CoreError, Result};
use crate::sym::{Dim, SymMatrix};

/// Continuum shape carved out of the lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Axis-aligned box [lo, hi]; prefer lattice-aligned bounds.
    Box2 { lo: [f64; 2], hi: [f64; 2] },
    Ball { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], r_inner: f64, r_outer: f64 },
}

impl Shape {
    pub fn contains(&self, p: [f64; 2], dim: Dim) -> bool {
        match *self {
            Shape::Box2 { lo, hi } => {
                let mut ok = p[0] > lo[0] && p[0] < hi[0];
                if dim == Dim::Two {
                    ok = ok && p[1] > lo[1] && p[1] < hi[1];
                }
                ok
            }
            Shape::Ball { center, radius } => dist2(p, center, dim) < radius * radius,
            Shape::Annulus { center, r_inner, r_outer } => {
                let d2 = dist2(p, center, dim);
                d2 < r_outer * r_outer && d2 > r_inner * r_inner
            }
        }
    }

    pub fn volume(&self, dim: Dim) -> f64 {
        match *self {
            Shape::Box2 { lo, hi } => match dim {
                Dim::One => hi[0] - lo[0],
                Dim::Two => (hi[0] - lo[0]) * (hi[1] - lo[1]),
            },
            Shape::Ball { radius, .. } => match dim {
                Dim::One => 2.0 * radius,
                Dim::Two => std::f64::consts::PI * radius * radius,
            },
            Shape::Annulus { r_inner, r_outer, .. } => match dim {
                Dim::One => 2.0 * (r_outer - r_inner),
                Dim::Two => std::f64::consts::PI * (r_outer * r_outer - r_inner * r_inner),
            },
        }
    }

    fn bounding(&self, dim: Dim) -> ([f64; 2], [f64; 2]) {
        match *self {
            Shape::Box2 { lo, hi } => (lo, hi),
            Shape::Ball { center, radius } => match dim {
                Dim::One => ([center[0] - radius, 0.0], [center[0] + radius, 0.0]),
                Dim::Two => (
                    [center[0] - radius, center[1] - radius],
                    [center[0] + radius, center[1] + radius],
                ),
            },
            Shape::Annulus { center, r_outer, .. } => match dim {
                Dim::One => ([center[0] - r_outer, 0.0], [center[0] + r_outer, 0.0]),
                Dim::Two => (
                    [center[0] - r_outer, center[1] - r_outer],
                    [center[0] + r_outer, center[1] + r_outer],
                ),
            },
        }
    }

    /// Smallest s in (0, 1] with p + s·v on the boundary; `p` is inside and
    /// `p + v` outside.
    fn clip(&self, p: [f64; 2], v: [f64; 2], dim: Dim) -> f64 {
        match *self {
            Shape::Box2 { lo, hi } => {
                let mut s = 1.0f64;
                for ax in 0..dim.n() {
                    if v[ax] > 0.0 {
                        s = s.min((hi[ax] - p[ax]) / v[ax]);
                    } else if v[ax] < 0.0 {
                        s = s.min((lo[ax] - p[ax]) / v[ax]);
                    }
                }
                s
            }
            Shape::Ball { center, radius } => {
                sphere_crossing(p, v, center, radius, dim).unwrap_or(1.0)
            }
            Shape::Annulus { center, r_inner, r_outer } => {
                let s_out = sphere_crossing(p, v, center, r_outer, dim);
                let s_in = sphere_crossing(p, v, center, r_inner, dim);
                match (s_out, s_in) {
                    (Some(a), Some(b)) => a.min(b),
                    (Some(a), None) => a,
                    (None, Some(b)) => b,
                    (None, None) => 1.0,
                }
            }
        }
    }
}

fn dist2(p: [f64; 2], c: [f64; 2], dim: Dim) -> f64 {
    let dx = p[0] - c[0];
    match dim {
        Dim::One => dx * dx,
        Dim::Two => {
            let dy = p[1] - c[1];
            dx * dx + dy * dy
        }
    }
}

/// Smallest positive root of |p + s v − c|² = r²; `None` if the segment
/// never crosses.
fn sphere_crossing(p: [f64; 2], v: [f64; 2], c: [f64; 2], r: f64, dim: Dim) -> Option<f64> {
    let d = [p[0] - c[0], if dim == Dim::Two { p[1] - c[1] } else { 0.0 }];
    let vv = [v[0], if dim == Dim::Two { v[1] } else { 0.0 }];
    let a = vv[0] * vv[0] + vv[1] * vv[1];
    let b = 2.0 * (d[0] * vv[0] + d[1] * vv[1]);
    let cq = d[0] * d[0] + d[1] * d[1] - r * r;
    let disc = b * b - 4.0 * a * cq;
    if disc <= 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let s1 = (-b - sq) / (2.0 * a);
    let s2 = (-b + sq) / (2.0 * a);
    for s in [s1, s2] {
        if s > 1e-12 && s <= 1.0 {
            return Some(s);
        }
    }
    None
}

/// An orthogonal frame of integer directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub dirs: Vec<[i64; 2]>,
}

/// The set of direction frames used by the wide stencil. The axis frame is
/// always first.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSet {
    pub dim: Dim,
    /// Angular resolution; frames sit at angles ≈ kπ/(2K).
    pub k_res: usize,
    pub frames: Vec<Frame>,
}

impl FrameSet {
    /// Frames through integer offsets of squared length ≤ 5, chosen
    /// closest in angle to kπ/(2K) for k = 0..K.
    pub fn standard(dim: Dim, k_res: usize) -> Result<Self> {
        if k_res == 0 {
            return Err(CoreError::InvalidParameter("frame resolution K must be >= 1".into()));
        }
        match dim {
            Dim::One => Ok(FrameSet { dim, k_res, frames: vec![Frame { dirs: vec![[1, 0]] }] }),
            Dim::Two => {
                let candidates: [[i64; 2]; 4] = [[1, 0], [2, 1], [1, 1], [1, 2]];
                let mut chosen: Vec<[i64; 2]> = Vec::new();
                for k in 0..k_res {
                    let target = k as f64 * std::f64::consts::FRAC_PI_2 / k_res as f64;
                    let best = candidates
                        .iter()
                        .min_by(|a, b| {
                            let aa = ((a[1] as f64).atan2(a[0] as f64) - target).abs();
                            let bb = ((b[1] as f64).atan2(b[0] as f64) - target).abs();
                            aa.total_cmp(&bb)
                        })
                        .unwrap();
                    if !chosen.contains(best) {
                        chosen.push(*best);
                    }
                }
                if !chosen.contains(&[1, 0]) {
                    chosen.insert(0, [1, 0]);
                }
                let frames = chosen
                    .into_iter()
                    .map(|v| Frame { dirs: vec![v, [-v[1], v[0]]] })
                    .collect();
                Ok(FrameSet { dim, k_res, frames })
            }
        }
    }

    /// All directions across frames, frame by frame.
    pub fn directions(&self) -> Vec<[i64; 2]> {
        let mut out = Vec::new();
        for f in &self.frames {
            for &d in &f.dirs {
                out.push(d);
            }
        }
        out
    }

    /// Largest Chebyshev reach of any direction.
    pub fn reach(&self) -> i64 {
        self.directions()
            .iter()
            .map(|d| d[0].abs().max(d[1].abs()))
            .max()
            .unwrap_or(1)
    }
}

/// One arm of a directional stencil: either a full step to another lattice
/// point or a clipped step onto the boundary.
#[derive(Debug, Clone, Copy)]
pub enum Arm {
    /// Index into the interior value vector.
    Interior(u32),
    /// Index into the boundary value vector; `s` is the arm fraction.
    Boundary { slot: u32, s: f64 },
}

/// A lattice domain: interior indexing plus per-point clipped stencil arms
/// for every frame direction.
pub struct GridDomain {
    pub dim: Dim,
    pub h: f64,
    pub shape: Shape,
    pub frames: FrameSet,
    /// Lattice bounding box (inclusive), padded by the stencil reach.
    pub i0: [i64; 2],
    pub i1: [i64; 2],
    nx: usize,
    /// Flat lattice -> interior index + 1, 0 when not interior.
    interior_of_flat: Vec<u32>,
    /// Interior lattice coordinates.
    pub points: Vec<[i64; 2]>,
    /// points[i] in physical coordinates.
    pub coords: Vec<[f64; 2]>,
    /// Per interior point, per direction: the two arms (+dir, −dir).
    arms: Vec<Arm>,
    n_dirs: usize,
    /// Physical coordinates of each clipped boundary endpoint.
    pub boundary_coords: Vec<[f64; 2]>,
    /// Directions mirrored from the frame set.
    pub dirs: Vec<[i64; 2]>,
    /// |v|² per direction (lattice units).
    pub dir_len2: Vec<f64>,
    /// |v|·h per direction (physical length of a full arm).
    pub dir_len_phys: Vec<f64>,
    /// 1/(|v|·h)² per direction.
    pub dir_inv_l2: Vec<f64>,
    /// Unit vectors per direction.
    pub dir_unit: Vec<[f64; 2]>,
    /// frame_dirs[j] = direction indices of frame j.
    pub frame_dirs: Vec<Vec<usize>>,
    /// Per interior point: true when any arm is clipped.
    pub clipped: Vec<bool>,
    /// Multi-color partition of interior indices; within one color no two
    /// points are stencil-coupled, so sweeps may update a color in
    /// parallel.
    pub colors: Vec<Vec<u32>>,
}

impl GridDomain {
    pub fn new(dim: Dim, shape: Shape, h: f64, frames: FrameSet) -> Result<Arc<Self>> {
        if !(h > 0.0) {
            return Err(CoreError::InvalidParameter("spacing h must be positive".into()));
        }
        if frames.dim != dim {
            return Err(CoreError::InvalidParameter("frame set dimension mismatch".into()));
        }
        let (blo, bhi) = shape.bounding(dim);
        let reach = frames.reach();
        let i0 = [
            (blo[0] / h).floor() as i64 - reach,
            if dim == Dim::Two { (blo[1] / h).floor() as i64 - reach } else { 0 },
        ];
        let i1 = [
            (bhi[0] / h).ceil() as i64 + reach,
            if dim == Dim::Two { (bhi[1] / h).ceil() as i64 + reach } else { 0 },
        ];
        let nx = (i1[0] - i0[0] + 1) as usize;
        let ny = (i1[1] - i0[1] + 1) as usize;

        let to_phys = |ij: [i64; 2]| -> [f64; 2] {
            [ij[0] as f64 * h, if dim == Dim::Two { ij[1] as f64 * h } else { 0.0 }]
        };

        let mut interior_of_flat = vec![0u32; nx * ny];
        let mut points = Vec::new();
        let mut coords = Vec::new();
        for j in i0[1]..=i1[1] {
            for i in i0[0]..=i1[0] {
                let p = to_phys([i, j]);
                if shape.contains(p, dim) {
                    let flat = (j - i0[1]) as usize * nx + (i - i0[0]) as usize;
                    interior_of_flat[flat] = points.len() as u32 + 1;
                    points.push([i, j]);
                    coords.push(p);
                }
            }
        }
        if points.is_empty() {
            return Err(CoreError::InvalidParameter("domain contains no lattice points".into()));
        }

        let dirs = frames.directions();
        let n_dirs = dirs.len();
        let dir_len2: Vec<f64> = dirs.iter().map(|d| (d[0] * d[0] + d[1] * d[1]) as f64).collect();
        let dir_len_phys: Vec<f64> = dir_len2.iter().map(|l2| l2.sqrt() * h).collect();
        let dir_inv_l2: Vec<f64> = dir_len_phys.iter().map(|l| 1.0 / (l * l)).collect();
        let dir_unit: Vec<[f64; 2]> = dirs
            .iter()
            .zip(&dir_len2)
            .map(|(d, l2)| {
                let l = l2.sqrt();
                [d[0] as f64 / l, d[1] as f64 / l]
            })
            .collect();
        let mut frame_dirs = Vec::new();
        let mut cursor = 0usize;
        for f in &frames.frames {
            let idxs: Vec<usize> = (cursor..cursor + f.dirs.len()).collect();
            cursor += f.dirs.len();
            frame_dirs.push(idxs);
        }

        let flat_of =
            |ij: [i64; 2]| -> usize { (ij[1] - i0[1]) as usize * nx + (ij[0] - i0[0]) as usize };

        let mut arms = Vec::with_capacity(points.len() * n_dirs * 2);
        let mut boundary_coords = Vec::new();
        let mut clipped = vec![false; points.len()];
        for (pi, &ij) in points.iter().enumerate() {
            let p = to_phys(ij);
            for &d in dirs.iter() {
                for sgn in [1i64, -1i64] {
                    let nb = [ij[0] + sgn * d[0], ij[1] + sgn * d[1]];
                    let nb_phys = to_phys(nb);
                    let idx = interior_of_flat[flat_of(nb)];
                    if idx > 0 {
                        arms.push(Arm::Interior(idx - 1));
                    } else {
                        let v = [nb_phys[0] - p[0], nb_phys[1] - p[1]];
                        let s = shape.clip(p, v, dim).clamp(1e-6, 1.0);
                        let bp = [p[0] + s * v[0], p[1] + s * v[1]];
                        boundary_coords.push(bp);
                        arms.push(Arm::Boundary { slot: (boundary_coords.len() - 1) as u32, s });
                        clipped[pi] = true;
                    }
                }
            }
        }

        // mod-(reach+1) block coloring decouples all offsets of Chebyshev
        // length <= reach
        let m = reach + 1;
        let ncolors = match dim {
            Dim::One => m as usize,
            Dim::Two => (m * m) as usize,
        };
        let mut colors = vec![Vec::new(); ncolors];
        for (pi, &ij) in points.iter().enumerate() {
            let cx = ij[0].rem_euclid(m);
            let cy = ij[1].rem_euclid(m);
            let c = match dim {
                Dim::One => cx as usize,
                Dim::Two => (cy * m + cx) as usize,
            };
            colors[c].push(pi as u32);
        }
        colors.retain(|c| !c.is_empty());

        Ok(Arc::new(GridDomain {
            dim,
            h,
            shape,
            frames,
            i0,
            i1,
            nx,
            interior_of_flat,
            points,
            coords,
            arms,
            n_dirs,
            boundary_coords,
            dirs,
            dir_unit,
            dir_len2,
            dir_len_phys,
            dir_inv_l2,
            frame_dirs,
            clipped,
            colors,
        }))
    }

    pub fn n_interior(&self) -> usize {
        self.points.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_coords.len()
    }

    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }

    /// Arms (+v, −v) of direction `dir` at interior point `pi`.
    #[inline]
    pub fn arm_pair(&self, pi: usize, dir: usize) -> (Arm, Arm) {
        let base = (pi * self.n_dirs + dir) * 2;
        (self.arms[base], self.arms[base + 1])
    }

    /// Interior index of the lattice point, if it is interior.
    pub fn interior_index(&self, ij: [i64; 2]) -> Option<usize> {
        if ij[0] < self.i0[0] || ij[0] > self.i1[0] || ij[1] < self.i0[1] || ij[1] > self.i1[1] {
            return None;
        }
        let flat = (ij[1] - self.i0[1]) as usize * self.nx + (ij[0] - self.i0[0]) as usize;
        let v = self.interior_of_flat[flat];
        if v > 0 {
            Some((v - 1) as usize)
        } else {
            None
        }
    }

    /// Interior index of the lattice point nearest to physical `p`.
    pub fn nearest_interior(&self, p: [f64; 2]) -> Option<usize> {
        let ij = [
            (p[0] / self.h).round() as i64,
            if self.dim == Dim::Two { (p[1] / self.h).round() as i64 } else { 0 },
        ];
        self.interior_index(ij)
    }
}

impl std::fmt::Debug for GridDomain {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridDomain")
            .field("dim", &self.dim)
            .field("h", &self.h)
            .field("shape", &self.shape)
            .field("n_interior", &self.n_interior())
            .finish()
    }
}

/// Real values on a domain: interior values plus Dirichlet values at every
/// clipped boundary endpoint.
#[derive(Clone)]
pub struct GridFunction {
    pub domain: Arc<GridDomain>,
    pub interior: Vec<f64>,
    pub boundary: Vec<f64>,
}

impl GridFunction {
    /// Constant zero with zero boundary data.
    pub fn zeros(domain: &Arc<GridDomain>) -> Self {
        GridFunction {
            domain: domain.clone(),
            interior: vec![0.0; domain.n_interior()],
            boundary: vec![0.0; domain.n_boundary()],
        }
    }

    /// Fill from one continuum function, evaluated at interior points and
    /// at boundary endpoints alike.
    pub fn from_fn(domain: &Arc<GridDomain>, g: impl Fn([f64; 2]) -> f64) -> Self {
        GridFunction {
            domain: domain.clone(),
            interior: domain.coords.iter().map(|&p| g(p)).collect(),
            boundary: domain.boundary_coords.iter().map(|&p| g(p)).collect(),
        }
    }

    /// Interior values from `g`, boundary values from `bdry`.
    pub fn from_fns(
        domain: &Arc<GridDomain>,
        g: impl Fn([f64; 2]) -> f64,
        bdry: impl Fn([f64; 2]) -> f64,
    ) -> Self {
        GridFunction {
            domain: domain.clone(),
            interior: domain.coords.iter().map(|&p| g(p)).collect(),
            boundary: domain.boundary_coords.iter().map(|&p| bdry(p)).collect(),
        }
    }

    #[inline]
    pub fn arm_value(&self, arm: Arm) -> f64 {
        match arm {
            Arm::Interior(i) => self.interior[i as usize],
            Arm::Boundary { slot, .. } => self.boundary[slot as usize],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.interior.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Pointwise a·self + b·other (identical domains required).
    pub fn linear_comb(&self, a: f64, other: &GridFunction, b: f64) -> GridFunction {
        assert!(
            Arc::ptr_eq(&self.domain, &other.domain),
            "grid functions live on different domains"
        );
        GridFunction {
            domain: self.domain.clone(),
            interior: self
                .interior
                .iter()
                .zip(&other.interior)
                .map(|(x, y)| a * x + b * y)
                .collect(),
            boundary: self
                .boundary
                .iter()
                .zip(&other.boundary)
                .map(|(x, y)| a * x + b * y)
                .collect(),
        }
    }

    pub fn value_at_lattice(&self, ij: [i64; 2]) -> Option<f64> {
        self.domain.interior_index(ij).map(|i| self.interior[i])
    }
}

/// Second difference along direction `e` at interior lattice point `x`:
/// (u(x+e) − 2u(x) + u(x−e)) / |e·h|²; clipped arms use the unequal-arm
/// three-point formula (exact on quadratics).
pub fn second_difference(u: &GridFunction, x: [i64; 2], e: [i64; 2]) -> Result<f64> {
    let dom = &u.domain;
    let pi = dom.interior_index(x).ok_or(CoreError::Stencil(x[0], x[1]))?;
    let dir = dom
        .dirs
        .iter()
        .position(|&d| d == e || d == [-e[0], -e[1]])
        .ok_or(CoreError::Stencil(e[0], e[1]))?;
    Ok(second_difference_dir(u, pi, dir))
}

/// Second difference by direction index.
#[inline]
pub fn second_difference_dir(u: &GridFunction, pi: usize, dir: usize) -> f64 {
    let (base, coef) = second_difference_parts(u, pi, dir);
    base - coef * u.interior[pi]
}

/// Splits the second difference into `base − coef·center`; `coef > 0` is
/// the (negated) center sensitivity, used by local scalar solves.
#[inline]
pub fn second_difference_parts(u: &GridFunction, pi: usize, dir: usize) -> (f64, f64) {
    let dom = &u.domain;
    let (ap, am) = dom.arm_pair(pi, dir);
    let (vp, sp) = match ap {
        Arm::Interior(i) => (u.interior[i as usize], 1.0),
        Arm::Boundary { slot, s } => (u.boundary[slot as usize], s),
    };
    let (vm, sm) = match am {
        Arm::Interior(i) => (u.interior[i as usize], 1.0),
        Arm::Boundary { slot, s } => (u.boundary[slot as usize], s),
    };
    if sp == 1.0 && sm == 1.0 {
        let inv = dom.dir_inv_l2[dir];
        ((vp + vm) * inv, 2.0 * inv)
    } else {
        let l = dom.dir_len_phys[dir];
        let a = sp * l;
        let b = sm * l;
        (2.0 * (vp / (a * (a + b)) + vm / (b * (a + b))), 2.0 / (a * b))
    }
}

/// Discrete Hessian eigenvalue estimates at an interior point: the smallest
/// second difference over all frames and directions, then the remaining
/// directions of the minimizing frame, sorted.
pub fn discrete_eigenvalues(u: &GridFunction, x: [i64; 2]) -> Result<Vec<f64>> {
    let dom = &u.domain;
    let pi = dom.interior_index(x).ok_or(CoreError::Stencil(x[0], x[1]))?;
    let mut best_frame = 0usize;
    let mut best_val = f64::INFINITY;
    for (j, fd) in dom.frame_dirs.iter().enumerate() {
        for &di in fd {
            let v = second_difference_dir(u, pi, di);
            if v < best_val {
                best_val = v;
                best_frame = j;
            }
        }
    }
    let mut vals: Vec<f64> = dom.frame_dirs[best_frame]
        .iter()
        .map(|&di| second_difference_dir(u, pi, di))
        .collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Quadratic ½ xᵀMx as a grid function (useful test datum).
pub fn quadratic(domain: &Arc<GridDomain>, m: SymMatrix) -> GridFunction {
    GridFunction::from_fn(domain, |p| 0.5 * m.quad_form(p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ball_domain(h: f64) -> Arc<GridDomain> {
        GridDomain::new(
            Dim::Two,
            Shape::Ball { center: [0.0, 0.0], radius: 1.0 },
            h,
            FrameSet::standard(Dim::Two, 4).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn standard_frames_2d() {
        let fs = FrameSet::standard(Dim::Two, 4).unwrap();
        assert_eq!(fs.frames.len(), 4);
        assert_eq!(fs.frames[0].dirs[0], [1, 0]);
        for f in &fs.frames {
            let a = f.dirs[0];
            let b = f.dirs[1];
            assert_eq!(a[0] * b[0] + a[1] * b[1], 0, "frame not orthogonal");
        }
    }

    #[test]
    fn second_difference_exact_on_quadratics() {
        let dom = ball_domain(1.0 / 16.0);
        let m = SymMatrix::new_2d(1.3, -0.4, 0.7);
        let u = quadratic(&dom, m);
        for &e in &[[1i64, 0i64], [1, 1], [2, 1], [1, 2]] {
            let v = second_difference(&u, [0, 0], e).unwrap();
            let l = ((e[0] * e[0] + e[1] * e[1]) as f64).sqrt();
            let unit = [e[0] as f64 / l, e[1] as f64 / l];
            assert_abs_diff_eq!(v, m.quad_form(unit), epsilon = 1e-9);
        }
    }

    #[test]
    fn second_difference_affine_is_zero_and_norm_two() {
        let dom = ball_domain(1.0 / 8.0);
        let aff = GridFunction::from_fn(&dom, |p| 3.0 - 2.0 * p[0] + 0.5 * p[1]);
        assert_abs_diff_eq!(second_difference(&aff, [1, 1], [1, 0]).unwrap(), 0.0, epsilon = 1e-9);
        let sq = GridFunction::from_fn(&dom, |p| p[0] * p[0] + p[1] * p[1]);
        for &e in &[[1i64, 0i64], [1, 1], [2, 1]] {
            assert_abs_diff_eq!(second_difference(&sq, [0, 0], e).unwrap(), 2.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn discrete_eigenvalues_axis_aligned() {
        let dom = ball_domain(1.0 / 16.0);
        let m = SymMatrix::diag(Dim::Two, -1.0, 2.0);
        let u = quadratic(&dom, m);
        let e = discrete_eigenvalues(&u, [0, 0]).unwrap();
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e[1], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn discrete_eigenvalues_diagonal_frame() {
        let dom = ball_domain(1.0 / 16.0);
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let m = SymMatrix::rank_one(Dim::Two, 2.0, [c, c])
            + SymMatrix::rank_one(Dim::Two, -1.0, [-c, c]);
        let u = quadratic(&dom, m);
        let e = discrete_eigenvalues(&u, [0, 0]).unwrap();
        assert_abs_diff_eq!(e[0], -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e[1], 2.0, epsilon = 1e-9);
    }

    #[test]
    fn stencil_error_outside() {
        let dom = ball_domain(1.0 / 8.0);
        let u = GridFunction::zeros(&dom);
        assert!(second_difference(&u, [100, 0], [1, 0]).is_err());
    }

    #[test]
    fn colors_decouple_stencils() {
        let dom = ball_domain(1.0 / 12.0);
        for color in &dom.colors {
            for &pi in color {
                for dir in 0..dom.n_dirs() {
                    let (ap, am) = dom.arm_pair(pi as usize, dir);
                    for arm in [ap, am] {
                        if let Arm::Interior(j) = arm {
                            assert!(
                                !color.contains(&j),
                                "stencil couples two points of one color"
                            );
                        }
                    }
                }
            }
        }
    }
}
