//! Quadrature on the reference simplex by collapsed tensor Gauss-Legendre
//! rules (Duffy transform). Not minimal in point count, but exact to any
//! requested degree, with positive weights and interior points.

/// Points in reference coordinates `xi` (the simplex `xi_k >= 0`,
/// `sum xi_k <= 1`) with weights summing to the reference volume `1/d!`.
#[derive(Debug, Clone)]
pub struct QuadRule {
    pub dim: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on `[0, 1]` by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = 0.5 * (1.0 - z);
        w[i] = 1.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = n as f64 * (z * p - p0) / (z * z - 1.0);
    (p, dp)
}

/// Rule integrating every polynomial of total degree `<= degree` exactly on
/// the reference triangle (`dim = 2`) or tetrahedron (`dim = 3`).
pub fn simplex_rule(dim: usize, degree: usize) -> QuadRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match dim {
        2 => {
            let n = (degree + 3) / 2;
            let (x, w) = gauss_legendre_unit(n);
            for (&v, &wv) in x.iter().zip(&w) {
                for (&u, &wu) in x.iter().zip(&w) {
                    points.push([u * (1.0 - v), v, 0.0]);
                    weights.push(wu * wv * (1.0 - v));
                }
            }
        }
        3 => {
            let n = (degree + 4) / 2;
            let (x, wt) = gauss_legendre_unit(n);
            for (&w, &ww) in x.iter().zip(&wt) {
                for (&v, &wv) in x.iter().zip(&wt) {
                    for (&u, &wu) in x.iter().zip(&wt) {
                        points.push([u * (1.0 - v) * (1.0 - w), v * (1.0 - w), w]);
                        weights.push(wu * wv * ww * (1.0 - v) * (1.0 - w) * (1.0 - w));
                    }
                }
            }
        }
        _ => panic!("simplex_rule: dimension {dim}"),
    }
    QuadRule { dim, points, weights }
}
