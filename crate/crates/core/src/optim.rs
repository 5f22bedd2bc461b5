//! Small unconstrained minimizers: BFGS with backtracking line search and
//! Nelder-Mead as a derivative-free fallback.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimOptions {
    pub max_iter: usize,
    /// Stop once the relative objective change between accepted iterates falls below this.
    pub rel_tol: f64,
    pub grad_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions {
            max_iter: 1000,
            rel_tol: 1e-8,
            grad_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Bfgs,
    NelderMead,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    pub method: Method,
    /// Objective at every accepted iterate, starting with the initial point.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn relative_change(old: f64, new: f64) -> f64 {
    (old - new).abs() / old.abs().max(new.abs()).max(1e-300)
}

/// Minimizes a smooth objective given as `f(x) -> (value, gradient)`.
///
/// Returns `None` when the gradient is unusable at the start point.
pub fn bfgs<F>(mut f: F, x0: &[f64], opts: &OptimOptions) -> Option<OptimResult>
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let (mut fx, mut g) = f(&x);
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let identity = |scale: f64| -> Vec<Vec<f64>> {
        (0..n)
            .map(|i| (0..n).map(|j| if i == j { scale } else { 0.0 }).collect())
            .collect()
    };
    let mut h = identity(1.0);
    let mut history = vec![fx];
    let mut converged = false;
    let mut iterations = 0;
    let mut first_update = true;

    while iterations < opts.max_iter {
        if norm(&g) < opts.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut d: Vec<f64> = h.iter().map(|row| -dot(row, &g)).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            h = identity(1.0);
            d = g.iter().map(|v| -v).collect();
            slope = dot(&g, &d);
        }

        // backtracking Armijo search
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| xi + step * di).collect();
            let (ft, gt) = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * step * slope && gt.iter().all(|v| v.is_finite()) {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            // no descent possible along the search direction
            converged = norm(&g) < opts.grad_tol.max(1e-6);
            break;
        };

        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            if first_update {
                h = identity(sy / dot(&y, &y));
                first_update = false;
            }
            let hy: Vec<f64> = h.iter().map(|row| dot(row, &y)).collect();
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            for i in 0..n {
                for j in 0..n {
                    h[i][j] += rho * ((1.0 + rho * yhy) * s[i] * s[j] - hy[i] * s[j] - s[i] * hy[j]);
                }
            }
        }

        let change = relative_change(fx, f_new);
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        if change < opts.rel_tol {
            converged = true;
            break;
        }
    }

    Some(OptimResult {
        x,
        value: fx,
        iterations,
        converged,
        method: Method::Bfgs,
        history,
    })
}

/// Derivative-free simplex search.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &OptimOptions) -> OptimResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |f: &mut F, x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(&mut f, x0)));
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += if v[i].abs() > 1e-8 { 0.05 * v[i] } else { 0.1 };
        let fv = eval(&mut f, &v);
        simplex.push((v, fv));
    }
    let mut history = vec![simplex[0].1];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if relative_change(best, worst) < opts.rel_tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|p| p.0[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (w - c))
                .collect()
        };
        let xr = along(-1.0);
        let fr = eval(&mut f, &xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&mut f, &xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = along(-0.5);
                let fc = eval(&mut f, &xc);
                (xc, fc)
            } else {
                let xc = along(0.5);
                let fc = eval(&mut f, &xc);
                (xc, fc)
            };
            if fc < worst.min(fr) {
                simplex[n] = (xc, fc);
            } else {
                let x_best = simplex[0].0.clone();
                for p in simplex.iter_mut().skip(1) {
                    let shrunk: Vec<f64> = x_best.iter().zip(&p.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                    let fs = eval(&mut f, &shrunk);
                    *p = (shrunk, fs);
                }
            }
        }
        let current = simplex.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        if current < *history.last().unwrap() {
            history.push(current);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    OptimResult {
        x,
        value,
        iterations,
        converged,
        method: Method::NelderMead,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        (v, g)
    }

    #[test]
    fn bfgs_solves_rosenbrock() {
        let opts = OptimOptions {
            rel_tol: 1e-14,
            ..Default::default()
        };
        let r = bfgs(rosenbrock, &[-1.2, 1.0], &opts).unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn nelder_mead_solves_quadratic() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2) + 1.0;
        let opts = OptimOptions {
            rel_tol: 1e-14,
            max_iter: 5000,
            ..Default::default()
        };
        let r = nelder_mead(f, &[0.0, 0.0], &opts);
        assert!((r.x[0] - 3.0).abs() < 1e-5 && (r.x[1] + 1.0).abs() < 1e-5, "{:?}", r.x);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn bfgs_rejects_non_finite_start() {
        let f = |_: &[f64]| (f64::NAN, vec![0.0]);
        assert!(bfgs(f, &[0.0], &OptimOptions::default()).is_none());
    }
}
