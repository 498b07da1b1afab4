//! Derivative-free simplex minimization (Nelder–Mead).

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMead {
    /// Stop when `f(worst) − f(best)` drops below this.
    pub f_tol: f64,
    /// Stop when every vertex lies within this distance of the best one.
    pub x_tol: f64,
    pub max_evals: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self { f_tol: 1e-10, x_tol: 1e-8, max_evals: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimizes `f` from `x0`, building the initial simplex by displacing each
    /// coordinate by `step[i]`.
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64], step: &[f64]) -> Minimum {
        let n = x0.len();
        assert_eq!(step.len(), n);
        let mut evals = 0;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let v0 = eval(x0, &mut evals);
        simplex.push((x0.to_vec(), v0));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += step[i];
            let v = eval(&x, &mut evals);
            simplex.push((x, v));
        }

        let mut converged = false;
        while evals < self.max_evals {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = simplex[0].1;
            let worst = simplex[n].1;
            let spread = simplex
                .iter()
                .skip(1)
                .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max);
            if (worst - best).abs() <= self.f_tol || spread <= self.x_tol {
                converged = true;
                break;
            }

            let centroid: Vec<f64> =
                (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                centroid.iter().zip(&simplex[n].0).map(|(c, w)| c + t * (w - c)).collect()
            };

            let xr = along(-1.0);
            let fr = eval(&xr, &mut evals);
            if fr < best {
                let xe = along(-2.0);
                let fe = eval(&xe, &mut evals);
                simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            } else if fr < simplex[n - 1].1 {
                simplex[n] = (xr, fr);
            } else {
                let (xc, fc) = if fr < worst {
                    let xc = along(-0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                } else {
                    let xc = along(0.5);
                    let fc = eval(&xc, &mut evals);
                    (xc, fc)
                };
                if fc < worst.min(fr) {
                    simplex[n] = (xc, fc);
                } else {
                    // Shrink towards the best vertex.
                    let x_best = simplex[0].0.clone();
                    for vertex in simplex.iter_mut().skip(1) {
                        let x: Vec<f64> = x_best.iter().zip(&vertex.0).map(|(b, v)| b + 0.5 * (v - b)).collect();
                        let v = eval(&x, &mut evals);
                        *vertex = (x, v);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum { x, value, evals, converged }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let nm = NelderMead { max_evals: 5000, ..Default::default() };
        let m = nm.minimize(|x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2), &[-1.2, 1.0], &[0.5, 0.5]);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-3 && (m.x[1] - 1.0).abs() < 1e-3, "{m:?}");
    }

    #[test]
    fn respects_eval_budget() {
        let nm = NelderMead { max_evals: 30, f_tol: 0.0, x_tol: 0.0 };
        let m = nm.minimize(|x| x.iter().map(|v| v * v).sum(), &[3.0, -2.0, 1.0], &[1.0; 3]);
        assert!(!m.converged);
        assert!(m.evals <= 30 + 3);
    }

    #[test]
    fn nan_is_treated_as_worst() {
        let nm = NelderMead::default();
        let m = nm.minimize(|x| if x[0] < 0.0 { f64::NAN } else { (x[0] - 2.0).powi(2) }, &[1.0], &[0.5]);
        assert!((m.x[0] - 2.0).abs() < 1e-3);
    }
}
