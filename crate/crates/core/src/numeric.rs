//! Small numerical kernels: Gauss-Legendre quadrature, golden-section
//! minimization, bisection and a Nelder-Mead simplex.

const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// ∫ f over `[a, b]` with the 8-point Gauss-Legendre rule on `pieces` equal panels.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, pieces: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let pieces = pieces.max(1);
    let h = (b - a) / pieces as f64;
    let mut total = 0.0;
    for k in 0..pieces {
        let lo = a + k as f64 * h;
        let mid = lo + h / 2.0;
        let half = h / 2.0;
        let mut s = 0.0;
        for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS) {
            s += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += s * half;
    }
    total
}

/// Minimizer of a unimodal `f` on `[a, b]`, to within `tol`.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = (a + b) / 2.0;
    let fx = f(x);
    (x, fx)
}

/// Root of `f` in `[a, b]` where `f(a)` and `f(b)` have opposite signs. Returns
/// the end of the final bracket on the side of `b`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let fa_negative = f(a) < 0.0;
    while b - a > tol {
        let m = 0.5 * (a + b);
        if (f(m) < 0.0) == fa_negative {
            a = m;
        } else {
            b = m;
        }
    }
    b
}

/// Nelder-Mead simplex minimization. Infinite values are allowed and treated
/// as rejected points.
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    start: &[f64],
    scale: &[f64],
    max_evals: usize,
    ftol: f64,
) -> (Vec<f64>, f64) {
    let n = start.len();
    let mut simplex: Vec<Vec<f64>> = vec![start.to_vec()];
    for i in 0..n {
        let mut p = start.to_vec();
        p[i] += scale[i];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;

    let order = |values: &[f64]| {
        let mut idx: Vec<usize> = (0..values.len()).collect();
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        idx
    };

    while evals < max_evals {
        let idx = order(&values);
        let (best, worst, second) = (idx[0], idx[n], idx[n - 1]);
        if values[best].is_finite() && (values[worst] - values[best]).abs() <= ftol * (1.0 + values[best].abs()) {
            break;
        }
        let mut centroid = vec![0.0; n];
        for &i in &idx[..n] {
            for (c, x) in centroid.iter_mut().zip(&simplex[i]) {
                *c += x / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let reflected = along(1.0);
        let fr = f(&reflected);
        evals += 1;
        if fr < values[best] {
            let expanded = along(2.0);
            let fe = f(&expanded);
            evals += 1;
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contracted = if fr < values[worst] { along(0.5) } else { along(-0.5) };
            let fc = f(&contracted);
            evals += 1;
            if fc < values[worst].min(fr) {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                let anchor = simplex[best].clone();
                for &i in &idx[1..] {
                    simplex[i] = anchor
                        .iter()
                        .zip(&simplex[i])
                        .map(|(a, x)| a + 0.5 * (x - a))
                        .collect();
                    values[i] = f(&simplex[i]);
                    evals += 1;
                }
            }
        }
    }
    let idx = order(&values);
    (simplex[idx[0]].clone(), values[idx[0]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_is_exact_for_polynomials() {
        let f = |x: f64| 3.0 * x.powi(7) - x.powi(4) + 2.0;
        let exact = |x: f64| 3.0 / 8.0 * x.powi(8) - x.powi(5) / 5.0 + 2.0 * x;
        let got = gauss_legendre(f, -0.5, 1.5, 1);
        assert!((got - (exact(1.5) - exact(-0.5))).abs() < 1e-12);
    }

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) = golden_section(|x| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bisection_brackets_the_root() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }

    #[test]
    fn nelder_mead_on_rosenbrock() {
        let rosen = |p: &[f64]| (1.0 - p[0]).powi(2) + 100.0 * (p[1] - p[0] * p[0]).powi(2);
        let (x, fx) = nelder_mead(rosen, &[-1.2, 1.0], &[0.5, 0.5], 5000, 1e-14);
        assert!(fx < 1e-8, "{fx}");
        assert!((x[0] - 1.0).abs() < 1e-3 && (x[1] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn nelder_mead_respects_rejected_region() {
        let f = |p: &[f64]| if p[0] < 0.5 { f64::INFINITY } else { p[0] * p[0] };
        let (x, _) = nelder_mead(f, &[2.0], &[0.5], 500, 1e-12);
        assert!(x[0] >= 0.5 && x[0] < 0.51);
    }
}
