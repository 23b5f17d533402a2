//! Reference computations that share no code with the library: a Taylor
//! matrix exponential with scaling and squaring, adaptive Simpson quadrature
//! and a direct Lyapunov solve.
#![allow(dead_code)]

pub type M2 = [[f64; 2]; 2];

pub fn drift(theta: f64, rho: f64) -> M2 {
    [[theta, rho], [0.0, rho]]
}

fn mul(a: &M2, b: &M2) -> M2 {
    let mut c = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

pub fn expm(a: &M2, t: f64) -> M2 {
    let norm = a.iter().flatten().map(|v| (v * t).abs()).sum::<f64>();
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as i32 } else { 0 };
    let s = t / 2f64.powi(squarings);
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    let mut acc = term;
    for k in 1..30 {
        term = mul(&term, a);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v *= s / k as f64;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                acc[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        acc = mul(&acc, &acc);
    }
    acc
}

fn simpson_rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// `int_0^h e^{As} b b' e^{A's} ds` with `b = (1, 1)'`, entry by entry.
pub fn innovation_covariance(theta: f64, rho: f64, h: f64) -> M2 {
    let a = drift(theta, rho);
    let column = |s: f64| {
        let e = expm(&a, s);
        [e[0][0] + e[0][1], e[1][0] + e[1][1]]
    };
    let entry = |i: usize, j: usize| simpson(&|s| { let c = column(s); c[i] * c[j] }, 0.0, h, 1e-14);
    let q01 = entry(0, 1);
    [[entry(0, 0), q01], [q01, entry(1, 1)]]
}

/// Solves `A P + P A' + b b' = 0` for symmetric `P` as a 3x3 linear system.
pub fn lyapunov(theta: f64, rho: f64) -> M2 {
    let a = drift(theta, rho);
    // Unknowns (p11, p12, p22).
    let m = [
        [2.0 * a[0][0], 2.0 * a[0][1], 0.0],
        [a[1][0], a[0][0] + a[1][1], a[0][1]],
        [0.0, 2.0 * a[1][0], 2.0 * a[1][1]],
    ];
    let p = gauss3(m, [-1.0, -1.0, -1.0]);
    [[p[0], p[1]], [p[1], p[2]]]
}

fn gauss3(mut m: [[f64; 3]; 3], mut r: [f64; 3]) -> [f64; 3] {
    for c in 0..3 {
        let piv = (c..3).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
        m.swap(c, piv);
        r.swap(c, piv);
        for i in c + 1..3 {
            let f = m[i][c] / m[c][c];
            for k in c..3 {
                m[i][k] -= f * m[c][k];
            }
            r[i] -= f * r[c];
        }
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        let s: f64 = (i + 1..3).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    x
}

/// Second moments of the Euler chain `Y_{k+1} = (I + hA) Y_k + sqrt(h) b Z`.
pub fn euler_second_moments(theta: f64, rho: f64, h: f64, steps: usize) -> M2 {
    let a = drift(theta, rho);
    let g = [[1.0 + h * a[0][0], h * a[0][1]], [h * a[1][0], 1.0 + h * a[1][1]]];
    let gt = [[g[0][0], g[1][0]], [g[0][1], g[1][1]]];
    let mut p = [[0.0; 2]; 2];
    for _ in 0..steps {
        p = mul(&mul(&g, &p), &gt);
        for row in p.iter_mut() {
            for v in row.iter_mut() {
                *v += h;
            }
        }
    }
    p
}

pub fn max_abs_diff(a: &M2, b: &M2) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &M2) -> f64 {
    a.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
}
