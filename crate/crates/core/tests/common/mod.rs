//! Independent matrix-game oracles shared by the integration tests.
#![allow(dead_code)]

/// Value and optimal strategies of a 2×2 game from the textbook formulas.
pub fn solve_2x2(a: [[f64; 2]; 2]) -> (f64, [f64; 2], [f64; 2]) {
    let maximin = (0..2)
        .map(|i| a[i][0].min(a[i][1]))
        .fold(f64::NEG_INFINITY, f64::max);
    let minimax = (0..2).map(|j| a[0][j].max(a[1][j])).fold(f64::INFINITY, f64::min);
    if maximin == minimax {
        let i = if a[0][0].min(a[0][1]) == maximin { 0 } else { 1 };
        let j = if a[0][0].max(a[1][0]) == minimax { 0 } else { 1 };
        let mut x = [0.0; 2];
        let mut y = [0.0; 2];
        x[i] = 1.0;
        y[j] = 1.0;
        return (maximin, x, y);
    }
    let [[p, q], [r, s]] = a;
    let d = p + s - q - r;
    let x0 = (s - r) / d;
    let y0 = (s - q) / d;
    ((p * s - q * r) / d, [x0, 1.0 - x0], [y0, 1.0 - y0])
}

/// Solves `m·z = rhs` by Gaussian elimination with partial pivoting.
fn linear_solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))?;
        if m[p][c].abs() < 1e-12 {
            return None;
        }
        m.swap(c, p);
        rhs.swap(c, p);
        let pivot = m[c].clone();
        for r in c + 1..n {
            let f = m[r][c] / pivot[c];
            for (x, p) in m[r][c..].iter_mut().zip(&pivot[c..]) {
                *x -= f * p;
            }
            rhs[r] -= f * rhs[c];
        }
    }
    let mut z = vec![0.0; n];
    for r in (0..n).rev() {
        let tail: f64 = (r + 1..n).map(|k| m[r][k] * z[k]).sum();
        z[r] = (rhs[r] - tail) / m[r][r];
    }
    Some(z)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|i| m & (1 << i) != 0).collect())
        .collect()
}

/// Equal-size support enumeration. Sufficient for nondegenerate games.
pub fn support_enumeration(a: &[Vec<f64>]) -> Option<(f64, Vec<f64>, Vec<f64>)> {
    let m = a.len();
    let n = a[0].len();
    for k in 1..=m.min(n) {
        for rows in subsets(m, k) {
            for cols in subsets(n, k) {
                // Unknowns (y_T, v): A[S,T] y − v = 0, Σ y = 1.
                let mut sys = Vec::new();
                let mut rhs = Vec::new();
                for &i in &rows {
                    let mut line: Vec<f64> = cols.iter().map(|&j| a[i][j]).collect();
                    line.push(-1.0);
                    sys.push(line);
                    rhs.push(0.0);
                }
                let mut ones = vec![1.0; k];
                ones.push(0.0);
                sys.push(ones.clone());
                rhs.push(1.0);
                let Some(ys) = linear_solve(sys, rhs.clone()) else {
                    continue;
                };

                let mut sys = Vec::new();
                for &j in &cols {
                    let mut line: Vec<f64> = rows.iter().map(|&i| a[i][j]).collect();
                    line.push(-1.0);
                    sys.push(line);
                }
                sys.push(ones);
                let Some(xs) = linear_solve(sys, rhs) else {
                    continue;
                };

                let v = ys[k];
                if ys[..k].iter().chain(&xs[..k]).any(|&p| p < -1e-12) {
                    continue;
                }
                let mut x = vec![0.0; m];
                let mut y = vec![0.0; n];
                for (t, &i) in rows.iter().enumerate() {
                    x[i] = xs[t].max(0.0);
                }
                for (t, &j) in cols.iter().enumerate() {
                    y[j] = ys[t].max(0.0);
                }
                let row_ok = (0..m).all(|i| (0..n).map(|j| a[i][j] * y[j]).sum::<f64>() <= v + 1e-9);
                let col_ok = (0..n).all(|j| (0..m).map(|i| a[i][j] * x[i]).sum::<f64>() >= v - 1e-9);
                if row_ok && col_ok {
                    return Some((v, x, y));
                }
            }
        }
    }
    None
}
