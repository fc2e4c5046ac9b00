//! Two-component functions sampled at mesh quadrature nodes, with L_α norms.

use std::sync::Arc;

use crate::error::{DiracError, Result};
use crate::functions::ScalarFunction;
use crate::mat2::{Vec2, C64, ZERO};
use crate::mesh::{Mesh, PanelRule};

#[derive(Debug, Clone)]
pub struct GridFunction2 {
    mesh: Arc<Mesh>,
    values: Vec<Vec2>,
    /// Declared L_μ class of the sampled function, if known.
    pub mu: Option<f64>,
}

fn check_exponent(alpha: f64) -> Result<()> {
    if alpha.is_nan() || alpha < 1.0 {
        Err(DiracError::InvalidExponent(alpha))
    } else {
        Ok(())
    }
}

impl GridFunction2 {
    pub fn new(mesh: Arc<Mesh>, values: Vec<Vec2>) -> Self {
        assert_eq!(mesh.len(), values.len(), "one value per mesh node");
        GridFunction2 {
            mesh,
            values,
            mu: None,
        }
    }

    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.len();
        GridFunction2::new(mesh, vec![[ZERO, ZERO]; n])
    }

    pub fn from_fns(mesh: Arc<Mesh>, f1: &ScalarFunction, f2: &ScalarFunction) -> Self {
        let values = mesh
            .nodes()
            .iter()
            .map(|&x| [f1.eval(x), f2.eval(x)])
            .collect();
        GridFunction2::new(mesh, values)
    }

    pub fn from_closure(mesh: Arc<Mesh>, f: impl Fn(f64) -> Vec2) -> Self {
        let values = mesh.nodes().iter().map(|&x| f(x)).collect();
        GridFunction2::new(mesh, values)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = Some(mu);
        self
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn values(&self) -> &[Vec2] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Vec2] {
        &mut self.values
    }

    pub fn same_mesh(&self, other: &GridFunction2) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh) || *self.mesh == *other.mesh
    }

    fn check_mesh(&self, other: &GridFunction2) -> Result<()> {
        if self.same_mesh(other) {
            Ok(())
        } else {
            Err(DiracError::MeshMismatch)
        }
    }

    pub fn scale(&self, s: C64) -> GridFunction2 {
        let values = self.values.iter().map(|v| [v[0] * s, v[1] * s]).collect();
        GridFunction2 {
            mesh: self.mesh.clone(),
            values,
            mu: self.mu,
        }
    }

    /// self + s · other
    pub fn axpy(&self, s: C64, other: &GridFunction2) -> Result<GridFunction2> {
        self.check_mesh(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| [a[0] + s * b[0], a[1] + s * b[1]])
            .collect();
        Ok(GridFunction2 {
            mesh: self.mesh.clone(),
            values,
            mu: self.mu,
        })
    }

    pub fn add_scaled_in_place(&mut self, s: C64, other: &GridFunction2) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a[0] += s * b[0];
            a[1] += s * b[1];
        }
    }

    pub fn sub(&self, other: &GridFunction2) -> Result<GridFunction2> {
        self.axpy(C64::new(-1.0, 0.0), other)
    }

    /// (∫₀^π Σ|f_i|^α)^{1/α}; α = ∞ gives the maximum over nodes.
    pub fn lp_norm(&self, alpha: f64) -> Result<f64> {
        check_exponent(alpha)?;
        if alpha.is_infinite() {
            return Ok(self
                .values
                .iter()
                .flat_map(|v| [v[0].norm(), v[1].norm()])
                .fold(0.0, f64::max));
        }
        let s: f64 = self
            .values
            .iter()
            .zip(self.mesh.weights())
            .map(|(v, w)| w * (v[0].norm().powf(alpha) + v[1].norm().powf(alpha)))
            .sum();
        Ok(s.powf(1.0 / alpha))
    }

    pub fn l2_norm(&self) -> f64 {
        self.lp_norm(2.0).expect("valid exponent")
    }

    /// ∫₀^π (f₁ ḡ₁ + f₂ ḡ₂) dx.
    /// f(0) and f(π), extrapolated from the end panels' nodes (nearest node on
    /// double-exponential panels).
    pub fn endpoint_values(&self) -> (Vec2, Vec2) {
        let panels = self.mesh.panels();
        let first = &panels[0];
        let last = &panels[panels.len() - 1];
        (self.extrapolate(first, first.a), self.extrapolate(last, last.b))
    }

    fn extrapolate(&self, panel: &crate::mesh::Panel, x: f64) -> Vec2 {
        let xs = &self.mesh.nodes()[panel.nodes.clone()];
        let vs = &self.values[panel.nodes.clone()];
        if panel.rule == PanelRule::TanhSinh {
            let j = if (xs[0] - x).abs() < (xs[xs.len() - 1] - x).abs() { 0 } else { xs.len() - 1 };
            return vs[j];
        }
        let mut out = [ZERO, ZERO];
        for (j, (xj, vj)) in xs.iter().zip(vs).enumerate() {
            let l: f64 = xs
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != j)
                .map(|(_, xk)| (x - xk) / (xj - xk))
                .product();
            out[0] += vj[0] * l;
            out[1] += vj[1] * l;
        }
        out
    }

    pub fn inner(&self, other: &GridFunction2) -> Result<C64> {
        self.check_mesh(other)?;
        Ok(self.inner_unchecked(other))
    }

    pub(crate) fn inner_unchecked(&self, other: &GridFunction2) -> C64 {
        self.values
            .iter()
            .zip(&other.values)
            .zip(self.mesh.weights())
            .map(|((a, b), w)| (a[0] * b[0].conj() + a[1] * b[1].conj()) * *w)
            .sum()
    }
}

pub fn lp_norm(f: &GridFunction2, alpha: f64) -> Result<f64> {
    f.lp_norm(alpha)
}

pub fn inner_product(f: &GridFunction2, g: &GridFunction2) -> Result<C64> {
    f.inner(g)
}

/// L_α norm of a scalar function on a mesh; α = ∞ uses nodes and midpoints
/// (a lower bound for the essential supremum).
pub fn scalar_lp_norm(f: &ScalarFunction, mesh: &Mesh, alpha: f64) -> Result<f64> {
    check_exponent(alpha)?;
    if alpha.is_infinite() {
        return Ok(mesh
            .nodes()
            .iter()
            .copied()
            .chain(mesh.midpoints())
            .map(|x| f.eval(x).norm())
            .fold(0.0, f64::max));
    }
    let s: f64 = mesh
        .nodes()
        .iter()
        .zip(mesh.weights())
        .map(|(&x, w)| w * f.eval(x).norm().powf(alpha))
        .sum();
    Ok(s.powf(1.0 / alpha))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::{I, ONE};
    use crate::mesh::{MeshBuilder, MeshParams};
    use std::f64::consts::PI;

    fn mesh() -> Arc<Mesh> {
        Mesh::uniform(MeshParams {
            panels: 64,
            ..Default::default()
        })
    }

    #[test]
    fn constant_l2_norm() {
        let f = GridFunction2::from_closure(mesh(), |_| [ONE, ZERO]);
        assert!((f.lp_norm(2.0).unwrap() - PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn inverse_sqrt_l1_norm() {
        let p = ScalarFunction::power(ONE, 0.0, 0.5).unwrap();
        let m = MeshBuilder::new(MeshParams::default()).with_function(&p).build();
        let f = GridFunction2::from_fns(m, &p, &ScalarFunction::Zero);
        let exact = 2.0 * PI.sqrt();
        assert!((f.lp_norm(1.0).unwrap() - exact).abs() < 1e-9);
    }

    #[test]
    fn sine_sup_norm() {
        let m = mesh();
        let f = GridFunction2::from_fns(m.clone(), &ScalarFunction::sin(1), &ScalarFunction::Zero);
        assert!((f.lp_norm(f64::INFINITY).unwrap() - 1.0).abs() < 1e-4);
        assert!((scalar_lp_norm(&ScalarFunction::sin(1), &m, f64::INFINITY).unwrap() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn exponent_below_one_is_rejected() {
        let f = GridFunction2::zeros(mesh());
        assert!(matches!(f.lp_norm(0.5), Err(DiracError::InvalidExponent(_))));
    }

    #[test]
    fn inner_products() {
        let m = mesh();
        let one = GridFunction2::from_closure(m.clone(), |_| [ONE, ZERO]);
        assert!((one.inner(&one).unwrap() - C64::new(PI, 0.0)).norm() < 1e-13);
        let e = GridFunction2::from_closure(m, |x| [(I * x).exp(), ZERO]);
        assert!((e.inner(&one).unwrap() - C64::new(0.0, 2.0)).norm() < 1e-13);
    }

    #[test]
    fn mesh_mismatch_is_an_error() {
        let a = GridFunction2::zeros(mesh());
        let b = GridFunction2::zeros(Mesh::uniform(MeshParams {
            panels: 32,
            ..Default::default()
        }));
        assert!(matches!(a.inner(&b), Err(DiracError::MeshMismatch)));
    }

    #[test]
    fn endpoint_extrapolation() {
        let f = GridFunction2::from_closure(mesh(), |x| [C64::new(x.cos(), 0.0), C64::new(0.0, x * x)]);
        let (a, b) = f.endpoint_values();
        assert!((a[0] - ONE).norm() < 1e-12 && a[1].norm() < 1e-12);
        assert!((b[0] + ONE).norm() < 1e-12 && (b[1] - C64::new(0.0, PI * PI)).norm() < 1e-11);
    }
}
