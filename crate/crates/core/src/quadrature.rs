//! Reference quadrature rules on [-1, 1].

use std::f64::consts::PI;

/// Gauss–Legendre rule with its spectral integration and differentiation matrices.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// `integration[q][j] = ∫_{-1}^{s_q} ℓ_j(s) ds` for the Lagrange basis on the nodes.
    pub integration: Vec<Vec<f64>>,
    /// `differentiation[q][j] = ℓ_j'(s_q)`.
    pub differentiation: Vec<Vec<f64>>,
}

/// Legendre polynomials P_0..=P_n evaluated at `x`.
fn legendre_all(n: usize, x: f64) -> Vec<f64> {
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    if n >= 1 {
        p[1] = x;
    }
    for k in 1..n {
        let kf = k as f64;
        p[k + 1] = ((2.0 * kf + 1.0) * x * p[k] - kf * p[k - 1]) / (kf + 1.0);
    }
    p
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            let mut x = -(PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let p = legendre_all(n, x);
                let dp = n as f64 * (x * p[n] - p[n - 1]) / (x * x - 1.0);
                let dx = p[n] / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let p = legendre_all(n, x);
            let dp = if n == 1 {
                1.0
            } else {
                n as f64 * (x * p[n] - p[n - 1]) / (x * x - 1.0)
            };
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }

        let poly: Vec<Vec<f64>> = nodes.iter().map(|&x| legendre_all(n, x)).collect();
        // ℓ_j(s) = w_j Σ_k (2k+1)/2 P_k(s_j) P_k(s), exact for k ≤ n-1.
        let mut integration = vec![vec![0.0; n]; n];
        for q in 0..n {
            let pq = &poly[q];
            for j in 0..n {
                let mut acc = (nodes[q] + 1.0) / 2.0;
                for k in 1..n {
                    let pkm1 = pq[k - 1];
                    let pkp1 = if k < n { pq[k + 1] } else { 0.0 };
                    acc += poly[j][k] * (pkp1 - pkm1) / 2.0;
                }
                integration[q][j] = weights[j] * acc;
            }
        }

        let mut bary = vec![1.0; n];
        for j in 0..n {
            for k in 0..n {
                if k != j {
                    bary[j] /= nodes[j] - nodes[k];
                }
            }
        }
        let mut differentiation = vec![vec![0.0; n]; n];
        for q in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if j != q {
                    let d = bary[j] / bary[q] / (nodes[q] - nodes[j]);
                    differentiation[q][j] = d;
                    diag -= d;
                }
            }
            differentiation[q][q] = diag;
        }

        GaussLegendre {
            nodes,
            weights,
            integration,
            differentiation,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// A node of the double-exponential rule, carrying its distance to either endpoint
/// so that nodes next to a singular endpoint keep full relative precision.
#[derive(Debug, Clone, Copy)]
pub struct TanhSinhNode {
    /// 1 + s, distance to the left endpoint of [-1, 1].
    pub from_left: f64,
    /// 1 - s, distance to the right endpoint.
    pub from_right: f64,
    pub weight: f64,
}

/// Tanh–sinh rule on [-1, 1] with step `h`, truncated where weights underflow.
pub fn tanh_sinh(h: f64) -> Vec<TanhSinhNode> {
    let mut out = Vec::new();
    let kmax = (6.0 / h).ceil() as i64;
    for k in -kmax..=kmax {
        let t = k as f64 * h;
        let u = 0.5 * PI * t.sinh();
        let w = 0.5 * PI * t.cosh() / u.cosh().powi(2) * h;
        if !(w > 1e-300) || !w.is_finite() {
            continue;
        }
        // 1 ± tanh(u) = 2 / (1 + e^{∓2u})
        let from_left = 2.0 / (1.0 + (-2.0 * u).exp());
        let from_right = 2.0 / (1.0 + (2.0 * u).exp());
        if from_left <= 0.0 || from_right <= 0.0 {
            continue;
        }
        out.push(TanhSinhNode {
            from_left,
            from_right,
            weight: w,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        for deg in 0..16u32 {
            let num: f64 = gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(x, w)| w * x.powi(deg as i32))
                .sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((num - exact).abs() < 1e-14, "degree {deg}: {num} vs {exact}");
        }
    }

    #[test]
    fn integration_matrix_gives_antiderivative() {
        let gl = GaussLegendre::new(10);
        for (q, &s) in gl.nodes.iter().enumerate() {
            let num: f64 = (0..gl.len())
                .map(|j| gl.integration[q][j] * gl.nodes[j].powi(3))
                .sum();
            let exact = (s.powi(4) - 1.0) / 4.0;
            assert!((num - exact).abs() < 1e-14);
        }
        let last: f64 = (0..gl.len())
            .map(|j| gl.integration[gl.len() - 1][j])
            .sum();
        assert!(last < 2.0 && last > 1.9);
    }

    #[test]
    fn differentiation_matrix_is_exact_on_polynomials() {
        let gl = GaussLegendre::new(9);
        for (q, &s) in gl.nodes.iter().enumerate() {
            let num: f64 = (0..gl.len())
                .map(|j| gl.differentiation[q][j] * gl.nodes[j].powi(5))
                .sum();
            assert!((num - 5.0 * s.powi(4)).abs() < 1e-12);
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        // ∫_{-1}^{1} (1+s)^{-0.9} ds = 2^{0.1}/0.1
        let rule = tanh_sinh(1.0 / 16.0);
        let num: f64 = rule
            .iter()
            .map(|n| n.weight * n.from_left.powf(-0.9))
            .sum();
        let exact = 2f64.powf(0.1) / 0.1;
        assert!((num - exact).abs() / exact < 1e-9, "{num} vs {exact}");
    }
}
