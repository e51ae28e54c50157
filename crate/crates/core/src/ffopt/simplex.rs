/// Outcome of a Nelder–Mead run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Nelder–Mead with dimension-adapted coefficients (Gao & Han). `steps`
/// gives the initial simplex edge per coordinate. Non-finite objective values
/// are treated as +∞, so infeasible regions are simply never accepted.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    x0: &[f64],
    steps: &[f64],
    max_evaluations: usize,
    f_tolerance: f64,
) -> SimplexResult {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&x);
        simplex.push((x, v));
    }
    let mut evaluations = n + 1;

    while evaluations < max_evaluations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let spread = if best.is_finite() && worst.is_finite() { worst - best } else { f64::INFINITY };
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= f_tolerance * (1.0 + best.abs()) && size < 1e-9 {
            break;
        }
        if size == 0.0 {
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|k| simplex[..n].iter().map(|(x, _)| x[k]).sum::<f64>() / nf).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|k| centroid[k] + t * (simplex[n].0[k] - centroid[k])).collect() };

        let xr = along(-alpha);
        let fr = eval(&xr);
        evaluations += 1;
        if fr < simplex[0].1 {
            let xe = along(-alpha * gamma);
            let fe = eval(&xe);
            evaluations += 1;
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[n].1 {
                let x = along(-alpha * rho);
                let v = eval(&x);
                (x, v)
            } else {
                let x = along(rho);
                let v = eval(&x);
                (x, v)
            };
            evaluations += 1;
            if fc < fr.min(simplex[n].1) {
                simplex[n] = (xc, fc);
            } else {
                let x0 = simplex[0].0.clone();
                for (x, v) in simplex[1..].iter_mut() {
                    for k in 0..n {
                        x[k] = x0[k] + sigma * (x[k] - x0[k]);
                    }
                    *v = eval(x);
                }
                evaluations += n;
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, value) = simplex.swap_remove(0);
    SimplexResult { x, value, evaluations }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(f, &[-1.2, 1.0], &[0.5, 0.5], 10_000, 1e-14);
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
        assert_eq!(r.value, f(&r.x));
    }

    #[test]
    fn ten_dimensional_quadratic() {
        let target: Vec<f64> = (0..10).map(|i| i as f64 * 0.1 - 0.3).collect();
        let f = |x: &[f64]| x.iter().zip(&target).enumerate().map(|(i, (a, b))| (1.0 + i as f64) * (a - b).powi(2)).sum();
        let r = nelder_mead(f, &[0.0; 10], &[0.3; 10], 50_000, 1e-16);
        assert!(r.value < 1e-8, "{}", r.value);
    }

    #[test]
    fn walls_are_respected() {
        // Minimum of (x-2)² restricted to x ≤ 1 sits on the wall.
        let f = |x: &[f64]| if x[0] > 1.0 { f64::INFINITY } else { (x[0] - 2.0).powi(2) };
        let r = nelder_mead(f, &[0.0], &[0.1], 2000, 1e-14);
        assert!(r.x[0] <= 1.0 && r.x[0] > 0.999, "{:?}", r.x);
        let nan = nelder_mead(|_| f64::NAN, &[0.0], &[0.1], 100, 1e-14);
        assert_eq!(nan.value, f64::INFINITY);
    }
}
