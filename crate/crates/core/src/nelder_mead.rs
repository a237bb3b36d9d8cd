//! Minimal derivative-free simplex minimizer used by the saddle solver.

pub(crate) struct NmOptions {
    /// Initial simplex edge length (per coordinate, absolute).
    pub init_step: f64,
    /// Terminate when the simplex diameter falls below this.
    pub xtol: f64,
    /// Terminate when the objective spread over the simplex falls below this.
    pub ftol: f64,
    /// Evaluation budget.
    pub max_evals: usize,
}

pub(crate) struct NmResult {
    /// Best simplex vertex. The saddle solver tracks its own best-ever
    /// snapshot across restarts and ignores this field.
    #[cfg_attr(not(test), allow(dead_code))]
    pub x: Vec<f64>,
    pub converged: bool,
}

/// Nelder-Mead minimization with standard coefficients. NaN objective values
/// are treated as +infinity so domain holes are simply avoided.
pub(crate) fn minimize(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x0: &[f64],
    opts: &NmOptions,
) -> NmResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.init_step;
        simplex.push(p);
    }
    let mut fvals: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;

    while evals < opts.max_evals {
        // order by objective
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| fvals[a].partial_cmp(&fvals[b]).unwrap());
        let reordered: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let fre: Vec<f64> = idx.iter().map(|&i| fvals[i]).collect();
        simplex = reordered;
        fvals = fre;

        let fspread = fvals[n] - fvals[0];
        let xspread = (0..n)
            .map(|j| {
                (1..=n)
                    .map(|i| (simplex[i][j] - simplex[0][j]).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if fspread.abs() < opts.ftol && xspread < opts.xtol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| simplex[i][j]).sum::<f64>() / n as f64)
            .collect();

        let mix = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };

        // reflection
        let xr = mix(&centroid, &simplex[n], -alpha);
        let fr = eval(&xr, &mut evals);
        if fr < fvals[0] {
            // expansion
            let xe = mix(&centroid, &simplex[n], -gamma);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[n] = xe;
                fvals[n] = fe;
            } else {
                simplex[n] = xr;
                fvals[n] = fr;
            }
            continue;
        }
        if fr < fvals[n - 1] {
            simplex[n] = xr;
            fvals[n] = fr;
            continue;
        }
        // contraction (outside if the reflected point improved on the worst)
        let xc = if fr < fvals[n] {
            mix(&centroid, &xr, rho)
        } else {
            mix(&centroid, &simplex[n], rho)
        };
        let fc = eval(&xc, &mut evals);
        if fc < fvals[n].min(fr) {
            simplex[n] = xc;
            fvals[n] = fc;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=n {
            simplex[i] = mix(&simplex[0], &simplex[i], sigma);
            fvals[i] = eval(&simplex[i], &mut evals);
        }
    }

    let mut best = 0;
    for i in 1..=n {
        if fvals[i] < fvals[best] {
            best = i;
        }
    }
    NmResult {
        x: simplex[best].clone(),
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_rosenbrock() {
        let mut f = |x: &[f64]| {
            (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
        };
        let res = minimize(
            &mut f,
            &[-1.2, 1.0],
            &NmOptions {
                init_step: 0.5,
                xtol: 1e-10,
                ftol: 1e-14,
                max_evals: 5000,
            },
        );
        assert!(res.converged);
        assert!((res.x[0] - 1.0).abs() < 1e-5 && (res.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn avoids_nan_regions() {
        let mut f = |x: &[f64]| {
            if x[0] < -2.0 {
                f64::NAN
            } else {
                (x[0] - 1.0).powi(2)
            }
        };
        let res = minimize(
            &mut f,
            &[-1.5],
            &NmOptions {
                init_step: 0.5,
                xtol: 1e-10,
                ftol: 1e-14,
                max_evals: 2000,
            },
        );
        assert!((res.x[0] - 1.0).abs() < 1e-6);
    }
}
