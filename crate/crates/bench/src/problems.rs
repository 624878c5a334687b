//! Problem data for the experiments.

/// Time-independent quartic source on the unit square,
/// `1e4 (x - 0.1)(y - 0.2)(x - 0.3)(y - 0.4)`. Ignores `z` in 3D.
pub fn polynomial_source(x: &[f64]) -> f64 {
    1e4 * (x[0] - 0.1) * (x[1] - 0.2) * (x[0] - 0.3) * (x[1] - 0.4)
}

/// Smooth solution vanishing on the boundary and at `t = 0`:
///
/// ```text
/// u = sin(t) cos(t x) x sin(x - 1) * prod_{d >= 1} sin(x_d)(x_d - 1)
/// ```
///
/// with the matching source `f = u_t - Laplace(u)`.
#[derive(Debug, Clone, Copy)]
pub struct Manufactured {
    pub dim: usize,
}

// p(x) = x sin(x - 1) and derivatives
fn p(x: f64) -> [f64; 3] {
    let (s, c) = (x - 1.0).sin_cos();
    [x * s, s + x * c, 2.0 * c - x * s]
}

// s(y) = sin(y)(y - 1) and derivatives
fn s(y: f64) -> [f64; 3] {
    let (sn, cs) = y.sin_cos();
    [sn * (y - 1.0), cs * (y - 1.0) + sn, 2.0 * cs - sn * (y - 1.0)]
}

impl Manufactured {
    /// g(t, x) = cos(t x) p(x): value, d/dx, d2/dx2, d/dt.
    fn g(t: f64, x: f64) -> [f64; 4] {
        let (sn, cs) = (t * x).sin_cos();
        let [p0, p1, p2] = p(x);
        [cs * p0, -t * sn * p0 + cs * p1, -t * t * cs * p0 - 2.0 * t * sn * p1 + cs * p2, -x * sn * p0]
    }

    fn factors(&self, x: &[f64]) -> Vec<[f64; 3]> {
        (1..self.dim).map(|d| s(x[d])).collect()
    }

    pub fn u(&self, t: f64, x: &[f64]) -> f64 {
        let g = Self::g(t, x[0]);
        t.sin() * g[0] * self.factors(x).iter().map(|f| f[0]).product::<f64>()
    }

    pub fn grad(&self, t: f64, x: &[f64]) -> [f64; 3] {
        let g = Self::g(t, x[0]);
        let fs = self.factors(x);
        let st = t.sin();
        let mut out = [0.0; 3];
        out[0] = st * g[1] * fs.iter().map(|f| f[0]).product::<f64>();
        for d in 1..self.dim {
            let others: f64 = fs.iter().enumerate().filter(|(e, _)| e + 1 != d).map(|(_, f)| f[0]).product();
            out[d] = st * g[0] * fs[d - 1][1] * others;
        }
        out
    }

    pub fn source(&self, t: f64, x: &[f64]) -> f64 {
        let g = Self::g(t, x[0]);
        let fs = self.factors(x);
        let prod: f64 = fs.iter().map(|f| f[0]).product();
        let (st, ct) = t.sin_cos();
        let u_t = (ct * g[0] + st * g[3]) * prod;
        let mut lap = g[2] * prod;
        for d in 0..fs.len() {
            let others: f64 = fs.iter().enumerate().filter(|(e, _)| *e != d).map(|(_, f)| f[0]).product();
            lap += g[0] * fs[d][2] * others;
        }
        u_t - st * lap
    }
}
