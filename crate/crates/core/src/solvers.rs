//! Derivative-free simplex search and a small Levenberg–Marquardt polish.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub initial_step: f64,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
    pub max_evaluations: usize,
    /// Number of times the simplex is rebuilt around the best point after it collapses.
    pub restarts: usize,
    /// Stop as soon as a value at or below this is found.
    pub target: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            initial_step: 0.3,
            f_tol: 1e-16,
            x_tol: 1e-10,
            max_evaluations: 20_000,
            restarts: 3,
            target: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub restarts_used: usize,
}

pub fn nelder_mead(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> NelderMeadResult {
    let dim = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let build = |center: &[f64], evaluations: &mut usize, eval: &mut dyn FnMut(&[f64], &mut usize) -> f64| {
        let mut simplex = vec![(center.to_vec(), eval(center, evaluations))];
        for i in 0..dim {
            let mut x = center.to_vec();
            x[i] += opts.initial_step;
            let v = eval(&x, evaluations);
            simplex.push((x, v));
        }
        simplex
    };

    let mut simplex = build(x0, &mut evaluations, &mut eval);
    let mut restarts_used = 0;

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        if best <= opts.target || evaluations >= opts.max_evaluations {
            break;
        }
        let spread = simplex[dim].1 - best;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= opts.f_tol || diameter <= opts.x_tol {
            if restarts_used >= opts.restarts {
                break;
            }
            restarts_used += 1;
            let center = simplex[0].0.clone();
            simplex = build(&center, &mut evaluations, &mut eval);
            continue;
        }

        let centroid: Vec<f64> =
            (0..dim).map(|j| simplex[..dim].iter().map(|(x, _)| x[j]).sum::<f64>() / dim as f64).collect();
        let worst = simplex[dim].clone();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect() };

        let xr = along(1.0);
        let fr = eval(&xr, &mut evaluations);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe, &mut evaluations);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        } else {
            let x = along(-0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        };
        if fc < worst.1.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best_x = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x: Vec<f64> = vertex.0.iter().zip(&best_x).map(|(v, b)| b + 0.5 * (v - b)).collect();
            let v = eval(&x, &mut evaluations);
            *vertex = (x, v);
        }
    }

    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    NelderMeadResult { x, value, evaluations, restarts_used }
}

/// Minimizes `Σ r_i(x)²` with a forward-difference Jacobian. Returns the best point seen.
pub fn levenberg_marquardt(r: impl Fn(&[f64]) -> Vec<f64>, x0: &[f64], max_iterations: usize) -> Vec<f64> {
    let n = x0.len();
    let cost = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
    let mut x = x0.to_vec();
    let mut res = r(&x);
    let mut c = cost(&res);
    let mut lambda = 1e-6;

    for _ in 0..max_iterations {
        if c == 0.0 {
            break;
        }
        let m = res.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h = 1e-7 * x[j].abs().max(1.0);
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (rp, rm) = (r(&xp), r(&xm));
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_vec(res.clone());
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * rv;

        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&(-&jtr)) else {
                lambda *= 10.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let tr = r(&trial);
            let tc = cost(&tr);
            if tc < c {
                x = trial;
                res = tr;
                c = tc;
                lambda = (lambda * 0.1).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> f64 {
        (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
    }

    #[test]
    fn nelder_mead_rosenbrock() {
        let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &NelderMeadOptions::default());
        assert!(r.value < 1e-14, "{r:?}");
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn nelder_mead_quadratic_4d() {
        let f = |x: &[f64]| x.iter().enumerate().map(|(i, v)| (i as f64 + 1.0) * (v - 0.5).powi(2)).sum();
        let r = nelder_mead(f, &[0.0; 4], &NelderMeadOptions::default());
        assert!(r.value < 1e-16);
    }

    #[test]
    fn lm_solves_nonlinear_system() {
        // x² + y² = 4, x·y = 1
        let r = |v: &[f64]| vec![v[0] * v[0] + v[1] * v[1] - 4.0, v[0] * v[1] - 1.0];
        let x = levenberg_marquardt(r, &[2.0, 0.3], 100);
        let res = r(&x);
        assert!(res.iter().all(|v| v.abs() < 1e-14), "{res:?}");
    }
}
