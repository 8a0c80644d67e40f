//! L2-regularised hinge-loss linear SVM, solved by dual coordinate descent.
//!
//! Primal: `min_w ½‖w‖² + Σᵢ Cᵢ·max(0, 1 − yᵢ·w·x̃ᵢ)` where `x̃ = [x, 1]`, so
//! the bias is the last weight and is regularised like the others.
//! Dual: `max_α Σαᵢ − ½‖Σ αᵢ yᵢ x̃ᵢ‖²` with `0 ≤ αᵢ ≤ Cᵢ`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense training problem.
#[derive(Debug, Clone)]
pub struct SvmProblem {
    /// Row-major `n × d`, without the bias column.
    pub x: Vec<f64>,
    pub d: usize,
    /// `+1` or `−1`.
    pub y: Vec<f64>,
    /// Per-instance penalty `Cᵢ > 0`.
    pub cost: Vec<f64>,
}

impl SvmProblem {
    pub fn new(x: Vec<f64>, d: usize, labels: &[bool], cost: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if d == 0 || x.len() != n * d || cost.len() != n {
            return Err(Error::validation("SVM problem dimensions are inconsistent"));
        }
        if cost.iter().any(|c| !(*c > 0.0 && c.is_finite())) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("SVM inputs must be finite with positive costs"));
        }
        let y = labels.iter().map(|&l| if l { 1.0 } else { -1.0 }).collect();
        Ok(SvmProblem { x, d, y, cost })
    }

    /// Penalty `C·n / (2·n_class)` per instance, so both classes carry equal total weight.
    pub fn balanced(x: Vec<f64>, d: usize, labels: &[bool], c: f64) -> Result<Self> {
        let n = labels.len();
        let n_pos = labels.iter().filter(|&&l| l).count();
        if n_pos == 0 || n_pos == n {
            return Err(Error::validation("SVM training needs both classes"));
        }
        let w_pos = c * n as f64 / (2.0 * n_pos as f64);
        let w_neg = c * n as f64 / (2.0 * (n - n_pos) as f64);
        let cost = labels.iter().map(|&l| if l { w_pos } else { w_neg }).collect();
        Self::new(x, d, labels, cost)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    /// `w·x̃ᵢ` with `w` of length `d + 1`.
    pub fn margin(&self, w: &[f64], i: usize) -> f64 {
        dot(&w[..self.d], self.row(i)) + w[self.d]
    }

    pub fn primal_objective(&self, w: &[f64]) -> f64 {
        let reg = 0.5 * dot(w, w);
        let loss: f64 = (0..self.n())
            .map(|i| self.cost[i] * (1.0 - self.y[i] * self.margin(w, i)).max(0.0))
            .sum();
        reg + loss
    }

    pub fn dual_objective(&self, alpha: &[f64]) -> f64 {
        let w = self.weights_from_dual(alpha);
        alpha.iter().sum::<f64>() - 0.5 * dot(&w, &w)
    }

    pub fn weights_from_dual(&self, alpha: &[f64]) -> Vec<f64> {
        let mut w = vec![0.0; self.d + 1];
        for (i, &a) in alpha.iter().enumerate() {
            if a != 0.0 {
                axpy(a * self.y[i], self.row(i), &mut w[..self.d]);
                w[self.d] += a * self.y[i];
            }
        }
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Stop once the spread of projected gradients falls below this.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-6,
            max_iterations: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SvmSolution {
    /// Length `d + 1`; the last entry is the bias.
    pub w: Vec<f64>,
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub primal: f64,
    pub dual: f64,
}

impl SvmSolution {
    /// `(P − D) / |P|`, an upper bound on the relative suboptimality of `w`.
    pub fn relative_gap(&self) -> f64 {
        (self.primal - self.dual) / self.primal.abs().max(f64::MIN_POSITIVE)
    }
}

/// Dual coordinate descent with shrinking over a seeded random visiting order.
pub fn solve(problem: &SvmProblem, cfg: &SolverConfig) -> SvmSolution {
    let n = problem.n();
    let d = problem.d;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; d + 1];
    let qii: Vec<f64> = (0..n).map(|i| dot(problem.row(i), problem.row(i)) + 1.0).collect();

    let mut active: Vec<usize> = (0..n).collect();
    let mut pg_max_old = f64::INFINITY;
    let mut pg_min_old = f64::NEG_INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        iterations += 1;
        active.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        let mut k = 0;
        while k < active.len() {
            let i = active[k];
            let yi = problem.y[i];
            let g = yi * problem.margin(&w, i) - 1.0;
            let u = problem.cost[i];
            let pg = if alpha[i] == 0.0 {
                if g > pg_max_old {
                    active.swap_remove(k);
                    continue;
                }
                g.min(0.0)
            } else if alpha[i] == u {
                if g < pg_min_old {
                    active.swap_remove(k);
                    continue;
                }
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-14 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).clamp(0.0, u);
                let step = (alpha[i] - old) * yi;
                axpy(step, problem.row(i), &mut w[..d]);
                w[d] += step;
            }
            k += 1;
        }

        if pg_max - pg_min <= cfg.tolerance {
            if active.len() == n {
                converged = true;
                break;
            }
            // re-check the shrunk variables before declaring convergence
            active = (0..n).collect();
            pg_max_old = f64::INFINITY;
            pg_min_old = f64::NEG_INFINITY;
            continue;
        }
        pg_max_old = if pg_max > 0.0 { pg_max } else { f64::INFINITY };
        pg_min_old = if pg_min < 0.0 { pg_min } else { f64::NEG_INFINITY };
    }

    // recompute w from α to shed accumulated rounding from incremental updates
    let w = problem.weights_from_dual(&alpha);
    let primal = problem.primal_objective(&w);
    let dual = alpha.iter().sum::<f64>() - 0.5 * dot(&w, &w);
    if !converged {
        log::warn!(
            "SVM solver stopped at the iteration budget ({iterations}); relative duality gap {:.3e}",
            (primal - dual) / primal.abs().max(f64::MIN_POSITIVE)
        );
    }
    SvmSolution {
        w,
        alpha,
        iterations,
        converged,
        primal,
        dual,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
