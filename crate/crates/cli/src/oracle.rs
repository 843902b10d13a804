//! Independent reference solutions used by `verify` and the acceptance run.

/// Trace `(1/2) int w(u, t) du` of the 1-D problem `w_t = 4 w_uu`, `w(0, t) = 0`,
/// by Crank-Nicolson on `[0, u_max]` with a few backward Euler start-up steps
/// to damp the corner mismatch of the initial data.
pub fn crank_nicolson_trace(w0: impl Fn(f64) -> f64, t: f64, du: f64, u_max: f64, dt: f64) -> f64 {
    let n = (u_max / du).round() as usize;
    let mut w: Vec<f64> = (1..n).map(|i| w0(i as f64 * du)).collect();
    let steps = (t / dt).round() as usize;
    let euler = 4.min(steps);
    let r = 4.0 * dt / (du * du);
    for s in 0..steps {
        let theta = if s < euler { 1.0 } else { 0.5 };
        let m = w.len();
        let rhs: Vec<f64> = (0..m)
            .map(|i| {
                let left = if i > 0 { w[i - 1] } else { 0.0 };
                let right = if i + 1 < m { w[i + 1] } else { 0.0 };
                w[i] + (1.0 - theta) * r * (left - 2.0 * w[i] + right)
            })
            .collect();
        w = thomas(-theta * r, 1.0 + 2.0 * theta * r, -theta * r, &rhs);
    }
    0.5 * du * w.iter().sum::<f64>()
}

/// Constant-coefficient tridiagonal solve.
fn thomas(sub: f64, diag: f64, sup: f64, d: &[f64]) -> Vec<f64> {
    let m = d.len();
    let mut cp = vec![0.0; m];
    let mut dp = vec![0.0; m];
    cp[0] = sup / diag;
    dp[0] = d[0] / diag;
    for i in 1..m {
        let den = diag - sub * cp[i - 1];
        cp[i] = sup / den;
        dp[i] = (d[i] - sub * dp[i - 1]) / den;
    }
    let mut x = vec![0.0; m];
    x[m - 1] = dp[m - 1];
    for i in (0..m - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Least-squares slope of `log e` against `log h`.
pub fn convergence_order(hs: &[f64], errors: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = hs.iter().zip(errors).map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
