//! Test-only reference computations. Nothing here calls into the crate's
//! numerical code; the crate's results are checked against these.
#![allow(dead_code)]

/// Mean negative log-likelihood computed as a direct product of softmax
/// probabilities over all K logits (reference logit 0).
pub fn softmax_nll(theta: &[f64], rows: &[Vec<f64>], labels: &[usize], k: usize) -> f64 {
    let d = rows[0].len();
    let mut log_lik = 0.0;
    for (x, &y) in rows.iter().zip(labels) {
        let logits: Vec<f64> = (0..k)
            .map(|c| if c == 0 { 0.0 } else { (0..d).map(|j| theta[(c - 1) * d + j] * x[j]).sum() })
            .collect();
        let denom: f64 = logits.iter().map(|z| z.exp()).sum();
        log_lik += (logits[y].exp() / denom).ln();
    }
    -log_lik / rows.len() as f64
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// Central finite-difference Jacobian of a vector function (row i = d f / d x_i).
pub fn fd_jacobian(f: &dyn Fn(&[f64]) -> Vec<f64>, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(x.len());
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let orig = xp[i];
        xp[i] = orig + h;
        let fp = f(&xp);
        xp[i] = orig - h;
        let fm = f(&xp);
        xp[i] = orig;
        out.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    out
}

/// Binary logistic regression by textbook IRLS:
/// beta <- beta + (X^T W X)^{-1} X^T (y - p), with W = diag(p(1-p)).
pub fn binary_irls(rows: &[Vec<f64>], y: &[usize]) -> Vec<f64> {
    let d = rows[0].len();
    let mut beta = vec![0.0; d];
    for _ in 0..200 {
        let mut xtwx = vec![vec![0.0; d]; d];
        let mut score = vec![0.0; d];
        for (x, &yi) in rows.iter().zip(y) {
            let eta: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
            let p = 1.0 / (1.0 + (-eta).exp());
            let w = p * (1.0 - p);
            for i in 0..d {
                score[i] += x[i] * (yi as f64 - p);
                for j in 0..d {
                    xtwx[i][j] += w * x[i] * x[j];
                }
            }
        }
        let step = gauss_solve(xtwx, score);
        let size: f64 = step.iter().map(|s| s.abs()).fold(0.0, f64::max);
        for (b, s) in beta.iter_mut().zip(&step) {
            *b += s;
        }
        if size < 1e-14 {
            break;
        }
    }
    beta
}

/// Gaussian elimination with partial pivoting.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

/// BFGS with finite-difference gradients and backtracking line search. A
/// generic minimizer for smooth convex functions.
pub fn bfgs_minimize(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], grad_tol: f64) -> Vec<f64> {
    let n = x0.len();
    let h = 1e-6;
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut g = fd_gradient(f, &x, h);
    let mut inv = vec![vec![0.0; n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _ in 0..2000 {
        let gmax = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if gmax < grad_tol {
            break;
        }
        let dir: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| inv[i][j] * g[j]).sum::<f64>()).collect();
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        let dir = if slope >= 0.0 { g.iter().map(|v| -v).collect::<Vec<_>>() } else { dir };
        let slope: f64 = dir.iter().zip(&g).map(|(a, b)| a * b).sum();
        let mut t = 1.0;
        let mut xn;
        let mut fxn;
        loop {
            xn = x.iter().zip(&dir).map(|(a, b)| a + t * b).collect::<Vec<_>>();
            fxn = f(&xn);
            if fxn <= fx + 1e-4 * t * slope || t < 1e-16 {
                break;
            }
            t *= 0.5;
        }
        let gn = fd_gradient(f, &xn, h);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&yv).map(|(a, b)| a * b).sum();
        if sy > 1e-300 {
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| inv[i][j] * yv[j]).sum()).collect();
            let yhy: f64 = yv.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    inv[i][j] += (sy + yhy) * s[i] * s[j] / (sy * sy) - (hy[i] * s[j] + s[i] * hy[j]) / sy;
                }
            }
        }
        let done = (fx - fxn).abs() < 1e-300 && t < 1e-15;
        x = xn;
        fx = fxn;
        g = gn;
        if done {
            break;
        }
    }
    x
}

/// Inverse of a dense matrix, column by column.
pub fn invert(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            gauss_solve(a.to_vec(), e)
        })
        .collect();
    (0..n).map(|i| (0..n).map(|j| cols[j][i]).collect()).collect()
}
