/// Natural cubic spline through `(xs[i], ys[i])` with strictly increasing `xs`.
#[derive(Debug, Clone)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots; zero at both ends.
    m: Vec<f64>,
}

impl NaturalSpline {
    /// `None` with fewer than two knots or non-increasing abscissae.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Option<Self> {
        let n = xs.len();
        if n < 2 || ys.len() != n || xs.windows(2).any(|w| !(w[1] > w[0])) {
            return None;
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for m[1..n-1], solved by forward elimination
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            let mut upper = vec![0.0; k];
            for j in 0..k {
                let i = j + 1;
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                diag[j] = 2.0 * (h0 + h1);
                upper[j] = h1;
                rhs[j] = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
                if j > 0 {
                    let lower = h0;
                    let f = lower / diag[j - 1];
                    diag[j] -= f * upper[j - 1];
                    rhs[j] -= f * rhs[j - 1];
                }
            }
            for j in (0..k).rev() {
                let next = if j + 1 < k { m[j + 2] } else { 0.0 };
                m[j + 1] = (rhs[j] - upper[j] * next) / diag[j];
            }
        }
        Some(NaturalSpline { xs, ys, m })
    }

    fn eval_segment(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    /// Values at increasing abscissae `at`; outside the knot range the end
    /// values are held.
    pub fn eval_sorted(&self, at: impl IntoIterator<Item = f64>) -> Vec<f64> {
        let last = self.xs.len() - 1;
        let mut seg = 0;
        at.into_iter()
            .map(|x| {
                if x <= self.xs[0] {
                    return self.ys[0];
                }
                if x >= self.xs[last] {
                    return self.ys[last];
                }
                while self.xs[seg + 1] < x {
                    seg += 1;
                }
                self.eval_segment(seg, x)
            })
            .collect()
    }
}
