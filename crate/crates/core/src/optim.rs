//! Derivative-free minimisers: a Nelder–Mead simplex for the correction
//! channel search and golden-section search for one-dimensional pieces.

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
    /// Stop when the spread of simplex values drops below this.
    pub f_tolerance: f64,
    /// Stop when the best value improved by less than `f_tolerance` over this
    /// many iterations. Zero disables the check.
    pub stall_iterations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            initial_step: 0.1,
            f_tolerance: 1e-12,
            stall_iterations: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// False when the iteration cap stopped the search.
    pub converged: bool,
}

/// Minimises `f` from `x0` with dimension-adaptive coefficients (reflection 1,
/// expansion `1 + 2/n`, contraction `3/4 - 1/(2n)`, shrink `1 - 1/n`), which
/// behave far better than the textbook values once `n` exceeds a handful.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    if n == 0 {
        let value = f(x0);
        return Minimum {
            x: Vec::new(),
            value,
            iterations: 0,
            converged: true,
        };
    }
    let nf = n as f64;
    let (rho, chi) = (1.0, 1.0 + 2.0 / nf);
    let gamma = (0.75 - 1.0 / (2.0 * nf)).max(0.25);
    let sigma = (1.0 - 1.0 / nf).max(0.5);

    let eval = |f: &mut F, x: &[f64]| {
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
        p[i] += if p[i].abs() > 1e-3 {
            opts.initial_step * p[i].abs().max(1.0)
        } else {
            opts.initial_step
        };
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| eval(&mut f, p)).collect();
    let mut order: Vec<usize> = (0..=n).collect();

    // running sum of all vertices; the centroid excludes the worst one
    let mut total = vec![0.0; n];
    let resum = |total: &mut Vec<f64>, simplex: &[Vec<f64>]| {
        total.iter_mut().for_each(|t| *t = 0.0);
        for p in simplex {
            for (t, v) in total.iter_mut().zip(p) {
                *t += v;
            }
        }
    };
    resum(&mut total, &simplex);
    let mut centroid = vec![0.0; n];
    let mut xr = vec![0.0; n];
    let mut xe = vec![0.0; n];
    let mut xc = vec![0.0; n];

    let mut best_seen = f64::INFINITY;
    let mut last_improvement = 0;
    let mut iterations = 0;
    let mut converged = false;

    let replace = |simplex: &mut [Vec<f64>], total: &mut [f64], i: usize, x: &[f64]| {
        for k in 0..x.len() {
            total[k] += x[k] - simplex[i][k];
        }
        simplex[i].copy_from_slice(x);
    };

    while iterations < opts.max_iterations {
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let (best, worst, second) = (order[0], order[n], order[n - 1]);
        if values[worst] - values[best] <= opts.f_tolerance {
            converged = true;
            break;
        }
        if values[best] < best_seen - opts.f_tolerance {
            best_seen = values[best];
            last_improvement = iterations;
        } else if opts.stall_iterations > 0
            && iterations - last_improvement >= opts.stall_iterations
        {
            converged = true;
            break;
        }
        iterations += 1;
        if iterations % 256 == 0 {
            // limit drift of the running sum
            resum(&mut total, &simplex);
        }

        let w = &simplex[worst];
        for k in 0..n {
            centroid[k] = (total[k] - w[k]) / nf;
            xr[k] = centroid[k] + rho * (centroid[k] - w[k]);
        }
        let fr = eval(&mut f, &xr);

        if fr < values[best] {
            for k in 0..n {
                xe[k] = centroid[k] + chi * (xr[k] - centroid[k]);
            }
            let fe = eval(&mut f, &xe);
            if fe < fr {
                replace(&mut simplex, &mut total, worst, &xe);
                values[worst] = fe;
            } else {
                replace(&mut simplex, &mut total, worst, &xr);
                values[worst] = fr;
            }
            continue;
        }
        if fr < values[second] {
            replace(&mut simplex, &mut total, worst, &xr);
            values[worst] = fr;
            continue;
        }
        // contraction: outside if the reflection beat the worst point
        let outside = fr < values[worst];
        let w = &simplex[worst];
        for k in 0..n {
            xc[k] = if outside {
                centroid[k] + gamma * (xr[k] - centroid[k])
            } else {
                centroid[k] + gamma * (w[k] - centroid[k])
            };
        }
        let fc = eval(&mut f, &xc);
        if (outside && fc <= fr) || (!outside && fc < values[worst]) {
            replace(&mut simplex, &mut total, worst, &xc);
            values[worst] = fc;
            continue;
        }
        let anchor = simplex[best].clone();
        for &i in &order[1..] {
            for k in 0..n {
                simplex[i][k] = anchor[k] + sigma * (simplex[i][k] - anchor[k]);
            }
            values[i] = eval(&mut f, &simplex[i]);
        }
        resum(&mut total, &simplex);
    }

    let best = (0..=n)
        .min_by(|&a, &b| values[a].total_cmp(&values[b]))
        .unwrap();
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Golden-section search for a minimum of `f` on `[lo, hi]`. The returned
/// point is the best of the interior iterates and both endpoints.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let fa_end = f(a);
    let fb_end = f(b);
    let mut best = if fa_end <= fb_end {
        (a, fa_end)
    } else {
        (b, fb_end)
    };
    if b - a <= tol {
        return best;
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if b - a <= tol {
            break;
        }
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
        for (x, v) in [(c, fc), (d, fd)] {
            if v < best.1 {
                best = (x, v);
            }
        }
    }
    best
}
