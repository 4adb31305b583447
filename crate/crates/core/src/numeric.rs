//! Small numeric utilities: order-independent summation, Gauss-Legendre
//! nodes, and modified Bessel functions for circular statistics.

/// Pairwise (cascade) summation. Associativity-stable: the result depends
/// only on the slice order, never on thread scheduling, and rounding error
/// grows as O(log n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    match values.len() {
        0 => 0.0,
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}

/// Gauss-Legendre nodes and weights on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for i in 0..n {
        // Newton iteration from the Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_and_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_and_derivative(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((mid - half * x, half * w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Modified Bessel function of the first kind, integer order, by power
/// series. Adequate for the argument range used here (|x| <= ~30).
pub fn bessel_i(order: u32, x: f64) -> f64 {
    let half = x / 2.0;
    let mut term = half.powi(order as i32);
    for k in 1..=order {
        term /= k as f64;
    }
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= half * half / (k * (k + order as f64));
        sum += term;
        if term.abs() < sum.abs() * 1e-16 {
            break;
        }
        k += 1.0;
        if k > 500.0 {
            break;
        }
    }
    sum
}

/// Mean resultant length I1(kappa)/I0(kappa) of a Von Mises distribution.
pub fn von_mises_resultant(kappa: f64) -> f64 {
    if kappa == 0.0 {
        0.0
    } else {
        bessel_i(1, kappa) / bessel_i(0, kappa)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_small_input() {
        let v = [0.1, 0.2, 0.3, 0.4, 0.5];
        assert!((pairwise_sum(&v) - 1.5).abs() < 1e-15);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        // degree-7 polynomial is exact with 4 nodes
        let nodes = gauss_legendre(4, 0.0, 2.0);
        let integral: f64 = nodes.iter().map(|(x, w)| w * x.powi(7)).sum();
        assert!((integral - 2.0f64.powi(8) / 8.0).abs() < 1e-12);
    }

    #[test]
    fn bessel_known_values() {
        // I0(1) = 1.2660658..., I1(1) = 0.5651591...
        assert!((bessel_i(0, 1.0) - 1.2660658777520082).abs() < 1e-12);
        assert!((bessel_i(1, 1.0) - 0.565159103992485).abs() < 1e-12);
        // resultant at kappa = 10 is about 0.9486
        assert!((von_mises_resultant(10.0) - 0.9486).abs() < 5e-4);
    }
}
