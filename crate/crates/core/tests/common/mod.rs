//! Brute-force reference implementations used by the integration tests.
//! Nothing here calls into the crate under test.

#![allow(dead_code)]

pub type P = (f64, f64);

/// Normalised anisotropic Gaussian components `(weight, σx, σy, mean)`.
pub fn density(baseline: f64, comps: &[(f64, f64, f64, P)], q: P) -> f64 {
    let mut v = baseline;
    for &(w, sx, sy, (mx, my)) in comps {
        let ex = (q.0 - mx) / sx;
        let ey = (q.1 - my) / sy;
        v += w / (2.0 * std::f64::consts::PI * sx * sy) * (-0.5 * (ex * ex + ey * ey)).exp();
    }
    v
}

/// Point in a convex polygon of either orientation, boundary included.
pub fn inside_convex(poly: &[P], q: P) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut pos = false;
    let mut neg = false;
    for k in 0..n {
        let a = poly[k];
        let b = poly[(k + 1) % n];
        let c = (b.0 - a.0) * (q.1 - a.1) - (b.1 - a.1) * (q.0 - a.0);
        pos |= c > 1e-12;
        neg |= c < -1e-12;
    }
    !(pos && neg)
}

#[derive(Debug, Clone, Copy)]
pub struct GridIntegrals {
    pub mass: f64,
    pub centroid: P,
    pub cost: f64,
}

/// Midpoint rule on `res × res` squares over the polygon's bounding box,
/// keeping samples inside the polygon. `cost` is ∫‖q − site‖² φ.
pub fn fine_grid(poly: &[P], phi: impl Fn(P) -> f64, res: usize, site: P) -> GridIntegrals {
    let x0 = poly.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let x1 = poly.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let y0 = poly.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let y1 = poly.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let hx = (x1 - x0) / res as f64;
    let hy = (y1 - y0) / res as f64;
    let (mut m, mut mx, mut my, mut cost) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..res {
        let y = y0 + (i as f64 + 0.5) * hy;
        for j in 0..res {
            let x = x0 + (j as f64 + 0.5) * hx;
            if inside_convex(poly, (x, y)) {
                let w = phi((x, y)) * hx * hy;
                m += w;
                mx += w * x;
                my += w * y;
                cost += w * ((x - site.0).powi(2) + (y - site.1).powi(2));
            }
        }
    }
    GridIntegrals { mass: m, centroid: (mx / m, my / m), cost }
}

/// Index of the nearest site; ties go to the lower index.
pub fn nearest_site(sites: &[P], q: P) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (k, s) in sites.iter().enumerate() {
        let d = (s.0 - q.0).powi(2) + (s.1 - q.1).powi(2);
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

/// Squared distance from `q` to site `k` minus the smallest squared
/// distance to any site. Zero when `k` is a nearest site.
pub fn nearest_gap(sites: &[P], k: usize, q: P) -> f64 {
    let d = |s: P| (s.0 - q.0).powi(2) + (s.1 - q.1).powi(2);
    d(sites[k]) - sites.iter().map(|&s| d(s)).fold(f64::INFINITY, f64::min)
}

/// Gaussian elimination with partial pivoting. `None` if singular.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in (col + 1)..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = ((row + 1)..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solution of min ½‖x − x0‖² s.t. a_k·x ≥ b_k by enumerating candidate
/// active sets in order of size. A candidate is accepted once its equality
/// projection has non-negative multipliers and satisfies every row.
pub fn qp_by_enumeration(x0: &[f64], a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let m = a.len();
    let dim = x0.len();
    let tol = 1e-9;
    for size in 0..=m.min(dim) {
        let mut subset: Vec<usize> = (0..size).collect();
        loop {
            let gram: Vec<Vec<f64>> = subset.iter().map(|&i| subset.iter().map(|&j| dot(&a[i], &a[j])).collect()).collect();
            let rhs: Vec<f64> = subset.iter().map(|&i| b[i] - dot(&a[i], x0)).collect();
            if let Some(lambda) = solve_linear(gram, rhs) {
                if lambda.iter().all(|&l| l >= -tol) {
                    let mut x = x0.to_vec();
                    for (&i, &l) in subset.iter().zip(&lambda) {
                        for (xk, ak) in x.iter_mut().zip(&a[i]) {
                            *xk += l * ak;
                        }
                    }
                    if (0..m).all(|k| dot(&a[k], &x) - b[k] >= -tol * (1.0 + b[k].abs())) {
                        return Some(x);
                    }
                }
            }
            if !next_combination(&mut subset, m) {
                break;
            }
        }
    }
    None
}

fn next_combination(c: &mut [usize], m: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < m - k + i {
            c[i] += 1;
            for j in (i + 1)..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Rows of the pairwise barrier QP over the stacked input
/// `[u0x, u0y, u1x, …]`, in lexicographic pair order, followed by box rows
/// when `u_max` is set.
pub fn barrier_rows(pos: &[P], d_min: f64, gamma: f64, u_max: Option<f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let n = pos.len();
    let mut a = Vec::new();
    let mut b = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = pos[i].0 - pos[j].0;
            let dy = pos[i].1 - pos[j].1;
            let mut row = vec![0.0; 2 * n];
            row[2 * i] = 2.0 * dx;
            row[2 * i + 1] = 2.0 * dy;
            row[2 * j] = -2.0 * dx;
            row[2 * j + 1] = -2.0 * dy;
            a.push(row);
            b.push(-gamma * (dx * dx + dy * dy - d_min * d_min));
        }
    }
    if let Some(u) = u_max {
        for k in 0..2 * n {
            for s in [1.0, -1.0] {
                let mut row = vec![0.0; 2 * n];
                row[k] = s;
                a.push(row);
                b.push(-u);
            }
        }
    }
    (a, b)
}
