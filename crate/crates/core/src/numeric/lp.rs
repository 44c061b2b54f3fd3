/// A linear program `min c·x  s.t.  A x ≤ b` over a bounded polytope.
///
/// Intended for the tiny subproblems of a trust-region step (a handful of
/// variables and a few dozen rows), where enumerating vertices is exact and
/// cheaper than a general simplex implementation.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub cost: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
}

impl LinearProgram {
    pub fn new(cost: Vec<f64>) -> Self {
        Self { cost, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.cost.len()
    }

    /// Adds `a·x ≤ b`.
    pub fn push_le(&mut self, a: Vec<f64>, b: f64) {
        debug_assert_eq!(a.len(), self.dim());
        self.rows.push(a);
        self.rhs.push(b);
    }

    /// Adds `lo ≤ x_i ≤ hi`.
    pub fn push_bounds(&mut self, i: usize, lo: f64, hi: f64) {
        let mut up = vec![0.0; self.dim()];
        up[i] = 1.0;
        let mut down = vec![0.0; self.dim()];
        down[i] = -1.0;
        self.push_le(up, hi);
        self.push_le(down, -lo);
    }

    fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(a, &b)| {
            let ax: f64 = a.iter().zip(x).map(|(ai, xi)| ai * xi).sum();
            let scale = 1.0 + b.abs() + a.iter().map(|v| v.abs()).sum::<f64>();
            ax <= b + tol * scale
        })
    }
}

/// Minimizes the program by enumerating every basic solution.
///
/// Returns `None` when the polytope is empty. Among vertices with equal cost
/// the one closest to the origin wins, which keeps trust-region steps short
/// when the objective is flat.
pub fn minimize_linear(lp: &LinearProgram) -> Option<Vec<f64>> {
    let n = lp.dim();
    let m = lp.rows.len();
    if m < n {
        return None;
    }
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(lp, &subset) {
            if lp.is_feasible(&x, 1e-10) {
                let cost: f64 = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                let norm: f64 = x.iter().map(|v| v * v).sum();
                let better = match &best {
                    None => true,
                    Some((bc, bn, _)) => {
                        let tie = 1e-12 * (1.0 + bc.abs());
                        cost < bc - tie || (cost <= bc + tie && norm < *bn)
                    }
                };
                if better {
                    best = Some((cost, norm, x));
                }
            }
        }
        if !next_combination(&mut subset, m) {
            break;
        }
    }
    best.map(|(_, _, x)| x)
}

fn next_combination(subset: &mut [usize], m: usize) -> bool {
    let k = subset.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < m - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Gaussian elimination with partial pivoting on the selected rows.
fn solve_square(lp: &LinearProgram, subset: &[usize]) -> Option<Vec<f64>> {
    let n = subset.len();
    let mut a: Vec<Vec<f64>> = subset.iter().map(|&r| lp.rows[r].clone()).collect();
    let mut b: Vec<f64> = subset.iter().map(|&r| lp.rhs[r]).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        let row_scale = a[pivot].iter().map(|v| v.abs()).fold(0.0, f64::max);
        if a[pivot][col].abs() <= 1e-12 * row_scale.max(1e-300) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
