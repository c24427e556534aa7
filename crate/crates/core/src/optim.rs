//! Derivative-free minimization.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when the spread of simplex values is below `f_tol * (1 + |f_best|)`.
    pub f_tol: f64,
    /// ... and every vertex lies within `x_tol` (max-norm) of the best one.
    pub x_tol: f64,
    /// Edge length of the initial simplex along each coordinate.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 5_000,
            f_tol: 1e-12,
            x_tol: 1e-8,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

/// Nelder–Mead simplex search with the standard coefficients
/// (reflection 1, expansion 2, contraction 1/2, shrink 1/2).
///
/// Non-finite objective values are treated as `+inf`, so the objective may
/// signal infeasible points by returning NaN or infinity.
pub fn nelder_mead<T, F>(mut f: F, x0: &[T], opts: &NelderMeadOptions) -> Minimum<T>
where
    T: Scalar,
    F: FnMut(&[T]) -> T,
{
    let n = x0.len();
    let mut evaluations = 0usize;
    let mut eval = |x: &[T]| {
        evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            T::infinity()
        }
    };

    let step = T::lit(opts.initial_step);
    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        let v = eval(&x);
        simplex.push((x, v));
    }

    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));
    let f_tol = T::lit(opts.f_tol);
    let x_tol = T::lit(opts.x_tol);
    let mut iterations = 0;
    let mut converged = false;

    let lerp = |from: &[T], to: &[T], t: T| -> Vec<T> { from.iter().zip(to).map(|(&a, &b)| a + t * (b - a)).collect() };

    while iterations < opts.max_iter {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        let spread_ok = (worst - best).abs() <= f_tol * (T::one() + best.abs());
        let size_ok = simplex[1..]
            .iter()
            .all(|(x, _)| x.iter().zip(&simplex[0].0).all(|(&a, &b)| (a - b).abs() <= x_tol));
        if best.is_finite() && spread_ok && size_ok {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![T::zero(); n];
        for (x, _) in &simplex[..n] {
            for (c, &v) in centroid.iter_mut().zip(x) {
                *c += v;
            }
        }
        let nf = T::from_usize_lossy(n);
        centroid.iter_mut().for_each(|c| *c /= nf);

        let reflected = lerp(&centroid, &simplex[n].0, -alpha);
        let fr = eval(&reflected);
        if fr < best {
            let expanded = lerp(&centroid, &simplex[n].0, -gamma);
            let fe = eval(&expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
            continue;
        }
        let (contracted, fc) = if fr < worst {
            let c = lerp(&centroid, &reflected, rho);
            let v = eval(&c);
            (c, v)
        } else {
            let c = lerp(&centroid, &simplex[n].0, rho);
            let v = eval(&c);
            (c, v)
        };
        if fc < fr.min(worst) {
            simplex[n] = (contracted, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let x = lerp(&anchor, &vertex.0, sigma);
            let v = eval(&x);
            *vertex = (x, v);
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        evaluations,
        converged,
    }
}
