//! Box-constrained limited-memory quasi-Newton minimiser.
//!
//! Search directions come from the usual two-loop recursion restricted to the
//! variables that are free (not held at a bound by the gradient); steps are
//! projected onto the box and accepted by a backtracking Armijo test along the
//! projected path.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    pub max_iter: usize,
    /// Stop when the projected gradient infinity norm drops below this.
    pub gtol: f64,
    /// Stop when a step improves f by less than this fraction of |f|.
    pub ftol: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        Self {
            memory: 10,
            max_iter: 500,
            gtol: 1e-6,
            ftol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    GradientTolerance,
    FunctionTolerance,
    MaxIterations,
    LineSearchFailed,
}

impl Status {
    pub fn converged(self) -> bool {
        matches!(self, Status::GradientTolerance | Status::FunctionTolerance)
    }
}

#[derive(Debug, Clone)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub projected_gradient: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: Status,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn projected_gradient(x: &[f64], g: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            if (x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0) {
                0.0
            } else {
                g[i]
            }
        })
        .collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Minimise `f` over `lo ≤ x ≤ hi`. `f` returns the value and the gradient.
pub fn minimize<F>(f: F, x0: &[f64], lo: &[f64], hi: &[f64], opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    minimize_with(f, |_: &mut [f64]| {}, x0, lo, hi, opts)
}

/// As [`minimize`], with `shift` applied to every accepted iterate. `shift`
/// must move only along directions that leave `f` and its gradient unchanged.
pub fn minimize_with<F, S>(mut f: F, mut shift: S, x0: &[f64], lo: &[f64], hi: &[f64], opts: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
    S: FnMut(&mut [f64]),
{
    let n = x0.len();
    let clamp = |x: &mut [f64]| {
        for i in 0..n {
            x[i] = x[i].clamp(lo[i], hi[i]);
        }
    };
    let mut x = x0.to_vec();
    clamp(&mut x);
    shift(&mut x);
    let (mut fx, mut g) = f(&x);
    let mut evaluations = 1;
    let mut mem: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(opts.memory);
    let mut status = Status::MaxIterations;
    let mut iterations = 0;
    let mut pg = projected_gradient(&x, &g, lo, hi);

    while iterations < opts.max_iter {
        if inf_norm(&pg) < opts.gtol {
            status = Status::GradientTolerance;
            break;
        }
        iterations += 1;
        let free: Vec<bool> = pg.iter().zip(&g).map(|(p, g)| *p != 0.0 || *g == 0.0).collect();
        let mask = |v: &mut Vec<f64>| {
            for (v, &f) in v.iter_mut().zip(&free) {
                if !f {
                    *v = 0.0;
                }
            }
        };

        let mut d = {
            let mut q = pg.clone();
            let mut alphas = Vec::with_capacity(mem.len());
            for (s, y, rho) in mem.iter().rev() {
                let a = rho * dot(s, &q);
                for i in 0..n {
                    q[i] -= a * y[i];
                }
                alphas.push(a);
            }
            if let Some((s, y, _)) = mem.back() {
                let gamma = dot(s, y) / dot(y, y);
                for v in q.iter_mut() {
                    *v *= gamma;
                }
            }
            for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
                let b = rho * dot(y, &q);
                for i in 0..n {
                    q[i] += (a - b) * s[i];
                }
            }
            for v in q.iter_mut() {
                *v = -*v;
            }
            q
        };
        mask(&mut d);
        if mem.is_empty() || dot(&d, &g) >= 0.0 {
            mem.clear();
            let scale = 1.0 / inf_norm(&pg).max(1.0);
            d = pg.iter().map(|v| -v * scale).collect();
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut xn: Vec<f64> = x.iter().zip(&d).map(|(x, d)| x + t * d).collect();
            clamp(&mut xn);
            let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
            if s.iter().all(|v| *v == 0.0) {
                break;
            }
            let (fn_, gn) = f(&xn);
            evaluations += 1;
            if fn_.is_finite() && fn_ <= fx + 1e-4 * dot(&g, &s) {
                accepted = Some((xn, s, fn_, gn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, s, fn_, gn)) = accepted else {
            if mem.is_empty() {
                status = Status::LineSearchFailed;
                break;
            }
            mem.clear();
            continue;
        };

        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        let fresh = mem.is_empty();
        let decrease = fx - fn_;
        x = xn;
        shift(&mut x);
        fx = fn_;
        g = gn;
        pg = projected_gradient(&x, &g, lo, hi);
        if decrease <= opts.ftol * fx.abs().max(1.0) {
            if inf_norm(&pg) < opts.gtol {
                status = Status::GradientTolerance;
                break;
            }
            if fresh {
                status = Status::FunctionTolerance;
                break;
            }
            // stale curvature can shrink steps along poorly scaled variables
            mem.clear();
            continue;
        }
        if sy > 1e-12 * dot(&y, &y).max(f64::MIN_POSITIVE) {
            if mem.len() == opts.memory {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
    }

    LbfgsResult {
        projected_gradient: inf_norm(&pg),
        x,
        f: fx,
        iterations,
        evaluations,
        status,
    }
}
