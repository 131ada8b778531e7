//! Shared independent oracles for the integration tests. Everything here
//! is deliberately naive and stays off the implementation paths it
//! checks: quadrature instead of grid solves, dense policy iteration
//! instead of projected sweeps, hull construction instead of envelope
//! iteration.

#![allow(dead_code)]

/// Solves −a(x)·u'' = f on (x0, x1) with u(x0) = u(x1) = 0 by double
/// integration on a fine mesh (composite trapezoid on n sub-intervals).
/// Returns a sampler of the solution.
pub fn ode_double_integration(
    a: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> f64,
    x0: f64,
    x1: f64,
    n: usize,
) -> impl Fn(f64) -> f64 {
    // u'' = −f/a ⇒ u'(x) = c1 − A(x), A(x) = ∫_{x0}^{x} f/a
    // u(x) = c1·(x − x0) − ∫_{x0}^{x} A;  c1 from u(x1) = 0.
    let h = (x1 - x0) / n as f64;
    let mut a_cum = vec![0.0f64; n + 1];
    for i in 0..n {
        let xl = x0 + i as f64 * h;
        let xr = xl + h;
        // midpoint rule keeps piecewise-constant coefficients exact away
        // from the (measure-zero) jump points
        let xm = 0.5 * (xl + xr);
        a_cum[i + 1] = a_cum[i] + h * f(xm) / a(xm);
    }
    let mut ia = vec![0.0f64; n + 1];
    for i in 0..n {
        ia[i + 1] = ia[i] + 0.5 * h * (a_cum[i] + a_cum[i + 1]);
    }
    let c1 = ia[n] / (x1 - x0);
    move |x: f64| {
        let s = ((x - x0) / h).clamp(0.0, n as f64);
        let i = (s.floor() as usize).min(n - 1);
        let frac = s - i as f64;
        let a_here = a_cum[i] * (1.0 - frac) + a_cum[i + 1] * frac;
        let ia_here = ia[i] + 0.5 * h * frac * (a_cum[i] + a_here);
        c1 * (x - x0) - ia_here
    }
}

/// Dense 1D linear complementarity solve by policy iteration over the
/// active set: min{ B w + c, w } = 0 with B the tridiagonal operator
/// w ↦ −a_i (w_{i+1} − 2 w_i + w_{i-1})/h² (zero boundary).
/// Entries of `a` and `c` are per interior node.
pub fn lcp_policy_iteration(a: &[f64], c: &[f64], h: f64) -> Vec<f64> {
    let n = a.len();
    let mut active = vec![false; n]; // active ⟺ w pinned to 0
    let mut w = vec![0.0f64; n];
    for _iter in 0..(2 * n + 20) {
        // solve B w + c = 0 on inactive nodes, w = 0 on active ones
        let mut diag = vec![0.0f64; n];
        let mut rhs = vec![0.0f64; n];
        let mut sub = vec![0.0f64; n];
        let mut sup = vec![0.0f64; n];
        for i in 0..n {
            if active[i] {
                diag[i] = 1.0;
                rhs[i] = 0.0;
            } else {
                let k = a[i] / (h * h);
                diag[i] = 2.0 * k;
                sub[i] = -k;
                sup[i] = -k;
                rhs[i] = -c[i];
            }
        }
        // Thomas algorithm, skipping couplings into active nodes
        let mut dd = diag.clone();
        let mut rr = rhs.clone();
        for i in 1..n {
            if active[i] || active[i - 1] {
                continue;
            }
            let m = sub[i] / dd[i - 1];
            dd[i] -= m * sup[i - 1];
            rr[i] -= m * rr[i - 1];
        }
        let mut w_new = vec![0.0f64; n];
        for i in (0..n).rev() {
            if active[i] {
                w_new[i] = 0.0;
            } else {
                let coupled = if i + 1 < n && !active[i + 1] { sup[i] * w_new[i + 1] } else { 0.0 };
                w_new[i] = (rr[i] - coupled) / dd[i];
            }
        }
        // complementarity audit
        let residual = |w: &[f64], i: usize| -> f64 {
            let k = a[i] / (h * h);
            let wm = if i > 0 { w[i - 1] } else { 0.0 };
            let wp = if i + 1 < n { w[i + 1] } else { 0.0 };
            k * (2.0 * w[i] - wm - wp) + c[i]
        };
        let mut changed = false;
        for i in 0..n {
            if active[i] {
                // leave the active set when the equation side is negative
                if residual(&w_new, i) < -1e-13 {
                    active[i] = false;
                    changed = true;
                }
            } else if w_new[i] < -1e-13 {
                active[i] = true;
                changed = true;
            }
        }
        w = w_new;
        if !changed {
            break;
        }
    }
    for v in &mut w {
        *v = v.max(0.0);
    }
    w
}

/// Lower convex envelope of the graph {(x_i, u_i)} by the monotone-chain
/// hull, evaluated back at the nodes.
pub fn lower_hull_1d(xs: &[f64], us: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut hull: Vec<usize> = Vec::new();
    for i in 0..n {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (xs[b] - xs[a]) * (us[i] - us[a]) - (xs[i] - xs[a]) * (us[b] - us[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = vec![0.0f64; n];
    let mut seg = 0usize;
    for i in 0..n {
        while seg + 1 < hull.len() && xs[hull[seg + 1]] < xs[i] {
            seg += 1;
        }
        let (a, b) = (hull[seg], hull[(seg + 1).min(hull.len() - 1)]);
        if a == b {
            out[i] = us[a];
        } else {
            let t = (xs[i] - xs[a]) / (xs[b] - xs[a]);
            out[i] = us[a] * (1.0 - t) + us[b] * t;
        }
    }
    out
}

/// Least-squares slope of y against x.
pub fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for &(x, y) in pts {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}
