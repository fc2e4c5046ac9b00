//! Green kernels of L − λ and resolvent application by quadrature.
//!
//! Both kernels share the representation
//! G(t, x) = M(x) [χ_{t<x} A_< + χ_{t>x} A_>] M(t)⁻¹ B⁻¹ with A_< − A_> = I,
//! so that R(λ) f (x) = ∫ G(t, x) f(t) dt.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryMatrixPair;
use crate::error::{DiracError, Result};
use crate::functions::ScalarFunction;
use crate::grid::GridFunction2;
use crate::mat2::{singular_values, Mat2, Vec2, C64, I, ZERO};
use crate::mesh::{Mesh, MeshBuilder, MeshParams};
use crate::ode::{b_inv, DiracOperator, FundamentalSolution};
use crate::spectrum::{newton, Contour};

/// Distance to the spectrum below which λ is treated as a pole.
pub const POLE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelSource {
    Explicit,
    Constructed,
}

#[derive(Debug, Clone)]
enum Basis {
    Free,
    Fundamental {
        op: Box<DiracOperator>,
        at_nodes: FundamentalSolution,
    },
}

#[derive(Debug, Clone)]
pub struct GreenKernel {
    lambda: C64,
    source: KernelSource,
    a_lt: Mat2,
    a_gt: Mat2,
    basis: Basis,
}

/// Closed-form A_< for the free operator, free of the e^{±iλπ} cancellation in W⁻¹C.
fn free_coefficients(form: &BoundaryMatrixPair, lambda: C64) -> (Mat2, Mat2) {
    let j = form.minors();
    let ap = (I * lambda * PI).exp();
    let am = (-I * lambda * PI).exp();
    let d0 = form.delta0(lambda);
    let k12 = am * j.j24 / d0;
    let k21 = -ap * j.j13 / d0;
    let a_lt = Mat2::new((j.j12 + am * j.j14) / d0, k12, k21, (j.j12 - ap * j.j23) / d0);
    let a_gt = Mat2::new((ap * j.j23 - j.j34) / d0, k12, k21, (-j.j34 - am * j.j14) / d0);
    (a_lt, a_gt)
}

/// Nearest λ_n⁰ to `lambda`.
fn nearest_free_eigenvalue(form: &BoundaryMatrixPair, lambda: C64) -> Result<C64> {
    let spec = form.unperturbed_spectrum()?;
    let mut best = spec.eigenvalue(0);
    for parity in 0..2i64 {
        let base = if parity == 0 { spec.zeta0 } else { spec.zeta1 };
        let k = ((lambda.re - base.re - parity as f64) / 2.0).round() as i64;
        for n in [2 * k + parity - 2, 2 * k + parity, 2 * k + parity + 2] {
            let z = spec.eigenvalue(n);
            if (z - lambda).norm() < (best - lambda).norm() {
                best = z;
            }
        }
    }
    Ok(best)
}

/// The Green kernel of L_{0,U} − λ.
pub fn green0_kernel(form: &BoundaryMatrixPair, lambda: C64) -> Result<GreenKernel> {
    let nearest = nearest_free_eigenvalue(form, lambda)?;
    if (nearest - lambda).norm() < POLE_TOL {
        return Err(DiracError::Pole { lambda, nearest });
    }
    let (a_lt, a_gt) = free_coefficients(form, lambda);
    Ok(GreenKernel {
        lambda,
        source: KernelSource::Explicit,
        a_lt,
        a_gt,
        basis: Basis::Free,
    })
}

/// The Green kernel of L_{P,U} − λ built from the fundamental matrix.
pub fn green_kernel(op: &DiracOperator, lambda: C64) -> Result<GreenKernel> {
    let fs = op.fundamental(lambda)?;
    let m_pi = fs.at_pi();
    let (c, d) = (*op.form().c(), *op.form().d());
    let w = c + d * m_pi;
    let (smax, smin) = singular_values(&w);
    let scale = op.form().max_abs() * m_pi.max_abs().max(1.0);
    let inv = w.inverse();
    if smin < POLE_TOL * scale || smax == 0.0 || inv.is_none() {
        let nearest = newton(op, lambda, 30).map(|r| r.0).unwrap_or(lambda);
        return Err(DiracError::Pole { lambda, nearest });
    }
    let inv = inv.expect("checked above");
    let a_lt = inv * c;
    let a_gt = -(inv * d * m_pi);
    Ok(GreenKernel {
        lambda,
        source: KernelSource::Constructed,
        a_lt,
        a_gt,
        basis: Basis::Fundamental {
            op: Box::new(op.clone()),
            at_nodes: fs,
        },
    })
}

/// G₀(t, x) written out term by term, with χ_{t>x} and the matrix of minors.
pub fn green0_verbatim(form: &BoundaryMatrixPair, lambda: C64, t: f64, x: f64) -> Mat2 {
    let j = form.minors();
    let d0 = form.delta0(lambda);
    let e = |s: f64| (I * lambda * s).exp();
    let chi = if t > x { 1.0 } else { 0.0 };
    let first = Mat2::diag(e(x - t), -e(t - x)).scale(I * (j.j12 / d0 - chi));
    let left = Mat2::diag(e(x - PI), -e(PI - x));
    let mid = Mat2::new(j.j14, j.j24, j.j13, j.j23);
    let right = Mat2::diag(e(-t), -e(t));
    first + (left * mid * right).scale(I / d0)
}

impl GreenKernel {
    pub fn lambda(&self) -> C64 {
        self.lambda
    }

    pub fn source(&self) -> KernelSource {
        self.source
    }

    pub fn coefficients(&self) -> (Mat2, Mat2) {
        (self.a_lt, self.a_gt)
    }

    fn basis_at(&self, xs: &[f64]) -> Result<Vec<Mat2>> {
        match &self.basis {
            Basis::Free => Ok(xs
                .iter()
                .map(|&x| Mat2::diag((I * self.lambda * x).exp(), (-I * self.lambda * x).exp()))
                .collect()),
            Basis::Fundamental { op, .. } => op.fundamental_at(self.lambda, xs),
        }
    }

    /// M(x) a M(t)⁻¹ B⁻¹; the free case combines exponents before exponentiating.
    fn assemble(&self, a: &Mat2, t: f64, x: f64, mt: &Mat2, mx: &Mat2) -> Mat2 {
        match self.basis {
            Basis::Free => {
                let s = [1.0, -1.0];
                let b = [I, -I];
                let mut g = Mat2::zero();
                for r in 0..2 {
                    for c in 0..2 {
                        g.0[r][c] = a.0[r][c] * (I * self.lambda * (s[r] * x - s[c] * t)).exp() * b[c];
                    }
                }
                g
            }
            Basis::Fundamental { .. } => {
                let inv = mt.inverse().unwrap_or_else(Mat2::zero);
                *mx * *a * inv * b_inv()
            }
        }
    }

    /// G(t, x) for t ≠ x.
    pub fn eval(&self, t: f64, x: f64) -> Result<Mat2> {
        if t == x {
            return Err(DiracError::InvalidRange(format!("kernel is undefined on the diagonal t = x = {x}")));
        }
        let m = self.basis_at(&[t, x])?;
        let a = if t < x { &self.a_lt } else { &self.a_gt };
        Ok(self.assemble(a, t, x, &m[0], &m[1]))
    }

    /// lim_{t→x⁺} G − lim_{t→x⁻} G.
    pub fn jump(&self, x: f64) -> Result<Mat2> {
        let m = self.basis_at(&[x])?;
        let diff = self.a_gt - self.a_lt;
        Ok(self.assemble(&diff, x, x, &m[0], &m[0]))
    }

    /// G on the grid ts × xs (row per t); diagonal points get the mean of the one-sided limits.
    pub fn sample(&self, ts: &[f64], xs: &[f64]) -> Result<Vec<Vec<Mat2>>> {
        let mt = self.basis_at(ts)?;
        let mx = self.basis_at(xs)?;
        let mean = (self.a_lt + self.a_gt).scale(C64::new(0.5, 0.0));
        Ok(ts
            .iter()
            .zip(&mt)
            .map(|(&t, mti)| {
                xs.iter()
                    .zip(&mx)
                    .map(|(&x, mxj)| {
                        let a = match t.partial_cmp(&x) {
                            Some(std::cmp::Ordering::Less) => &self.a_lt,
                            Some(std::cmp::Ordering::Greater) => &self.a_gt,
                            _ => &mean,
                        };
                        self.assemble(a, t, x, mti, mxj)
                    })
                    .collect()
            })
            .collect())
    }

    /// R(λ) f = ∫ G(t, ·) f(t) dt at the nodes of f's mesh.
    pub fn apply(&self, f: &GridFunction2) -> Result<GridFunction2> {
        let mesh = f.mesh().clone();
        let fv = f.values();
        let (h, left_factor): (Vec<Vec2>, Vec<Mat2>) = match &self.basis {
            Basis::Free => {
                let l = self.lambda;
                let h = mesh
                    .nodes()
                    .iter()
                    .zip(fv)
                    .map(|(&t, v)| [I * (-I * l * t).exp() * v[0], -I * (I * l * t).exp() * v[1]])
                    .collect();
                let m = self.basis_at(mesh.nodes())?;
                (h, m)
            }
            Basis::Fundamental { op, at_nodes } => {
                if !Arc::ptr_eq(op.mesh(), &mesh) && **op.mesh() != *mesh {
                    return Err(DiracError::MeshMismatch);
                }
                let bi = b_inv();
                let h = at_nodes
                    .at_nodes
                    .iter()
                    .zip(fv)
                    .map(|(m, v)| (m.inverse().unwrap_or_else(Mat2::zero) * bi).mul_vec(v))
                    .collect();
                (h, at_nodes.at_nodes.clone())
            }
        };
        let left = mesh.cumulative(&h);
        let right = mesh.cumulative_right(&h);
        let values = left_factor
            .iter()
            .zip(left.iter().zip(&right))
            .map(|(m, (l, r))| {
                let a = self.a_lt.mul_vec(l);
                let b = self.a_gt.mul_vec(r);
                m.mul_vec(&[a[0] + b[0], a[1] + b[1]])
            })
            .collect();
        Ok(GridFunction2::new(mesh, values))
    }
}

/// max |G(t, x)| over a staggered `grid` × `grid` sample and `points` values of λ
/// on each contour, reported per contour label.
pub fn kernel_bound(
    op: &DiracOperator,
    contours: &[(i64, Contour)],
    points: usize,
    grid: usize,
) -> Result<Vec<(i64, f64)>> {
    let ts: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.25) * PI / grid as f64).collect();
    let xs: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.75) * PI / grid as f64).collect();
    contours
        .iter()
        .map(|(n, contour)| {
            let sup = contour
                .nodes(points)
                .par_iter()
                .map(|&lambda| -> Result<f64> {
                    let k = green_kernel(op, lambda)?;
                    Ok(k.sample(&ts, &xs)?
                        .iter()
                        .flatten()
                        .map(|g| g.max_abs())
                        .fold(0.0, f64::max))
                })
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .fold(0.0, f64::max);
            Ok((*n, sup))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpNormEstimate {
    pub mu: f64,
    pub nu: f64,
    pub ys: Vec<f64>,
    /// Lower bounds for ‖R₀(iy)‖_{L_μ→L_ν}.
    pub estimates: Vec<f64>,
    pub slope: f64,
    /// exp of the fitted intercept.
    pub prefactor: f64,
    /// Half-width of a strip around the real axis containing the free spectrum, plus one.
    pub a_est: f64,
}

/// Widths of the indicator bumps in the test battery.
pub const BATTERY_WIDTHS: [f64; 7] = [
    PI,
    PI / 4.0,
    PI / 16.0,
    PI / 64.0,
    PI / 256.0,
    PI / 1024.0,
    PI / 4096.0,
];
pub const BATTERY_CENTERS: [f64; 3] = [PI / 8.0, PI / 2.0, 7.0 * PI / 8.0];

/// Test battery: unit-L_μ indicator bumps in either component, each on a mesh
/// with breakpoints at the bump edges.
pub fn test_battery(mu: f64, params: &MeshParams) -> Result<Vec<GridFunction2>> {
    let mut out = Vec::new();
    for &w in &BATTERY_WIDTHS {
        for &c in &BATTERY_CENTERS {
            let a = (c - 0.5 * w).max(0.0);
            let b = (c + 0.5 * w).min(PI);
            let mesh: Arc<Mesh> = MeshBuilder::new(*params)
                .with_breakpoint(a)
                .with_breakpoint(b)
                .build();
            let bump = ScalarFunction::indicator(a, b, C64::new(1.0, 0.0));
            let zero = ScalarFunction::constant(ZERO);
            for comp in 0..2 {
                let f = if comp == 0 {
                    GridFunction2::from_fns(mesh.clone(), &bump, &zero)
                } else {
                    GridFunction2::from_fns(mesh.clone(), &zero, &bump)
                };
                let norm = f.lp_norm(mu)?;
                out.push(f.scale(C64::new(1.0 / norm, 0.0)));
            }
        }
    }
    Ok(out)
}

/// Least-squares line through (x, y); returns (slope, intercept).
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Lower-bound estimates of ‖R₀(iy)‖_{L_μ→L_ν} and their log-log slope.
pub fn opnorm_scaling(
    form: &BoundaryMatrixPair,
    mu: f64,
    nu: f64,
    ys: &[f64],
    params: &MeshParams,
) -> Result<OpNormEstimate> {
    for p in [mu, nu] {
        if p.is_nan() || p < 1.0 {
            return Err(DiracError::InvalidExponent(p));
        }
    }
    if nu < mu {
        return Err(DiracError::InvalidRange(format!("nu = {nu} < mu = {mu}")));
    }
    if ys.len() < 2 {
        return Err(DiracError::InvalidRange("need at least two sample points".into()));
    }
    let spec = form.unperturbed_spectrum()?;
    let a_est = (spec.zeta0.im.abs().max(spec.zeta1.im.abs()) + 1.0).max(1.0);
    if let Some(y) = ys.iter().find(|&&y| !(y > a_est)) {
        return Err(DiracError::InvalidRange(format!("y = {y} lies inside the strip |Im λ| <= {a_est}")));
    }
    let battery = test_battery(mu, params)?;
    let estimates = ys
        .iter()
        .map(|&y| -> Result<f64> {
            let k = green0_kernel(form, C64::new(0.0, y))?;
            let norms = battery
                .par_iter()
                .map(|f| k.apply(f)?.lp_norm(nu))
                .collect::<Result<Vec<f64>>>()?;
            Ok(norms.into_iter().fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let lx: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let ly: Vec<f64> = estimates.iter().map(|e| e.ln()).collect();
    let (slope, intercept) = fit_line(&lx, &ly);
    Ok(OpNormEstimate {
        mu,
        nu,
        ys: ys.to_vec(),
        estimates,
        slope,
        prefactor: intercept.exp(),
        a_est,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::PotentialMatrix;

    fn params(panels: usize) -> MeshParams {
        MeshParams {
            panels,
            ..MeshParams::default()
        }
    }

    fn smooth(mesh: Arc<Mesh>) -> GridFunction2 {
        GridFunction2::from_closure(mesh, |x| [C64::new(x.sin(), 0.0), C64::new(x.cos(), 0.0)])
    }

    #[test]
    fn explicit_kernel_matches_verbatim_formula() {
        let form = BoundaryMatrixPair::from_rows([
            [C64::new(1.0, 0.0), C64::new(0.3, 0.1), C64::new(0.2, 0.0), C64::new(0.0, 0.0)],
            [C64::new(0.0, 0.0), C64::new(0.5, 0.0), C64::new(-0.4, 0.2), C64::new(1.0, 0.0)],
        ])
        .unwrap();
        for lambda in [C64::new(0.0, 1.0), C64::new(2.3, -0.7), C64::new(0.4, 6.0)] {
            let k = green0_kernel(&form, lambda).unwrap();
            for (t, x) in [(0.3, 1.7), (2.9, 0.1), (1.0, 1.2), (3.0, 2.5)] {
                let g = k.eval(t, x).unwrap();
                let v = green0_verbatim(&form, lambda, t, x);
                // the verbatim terms individually reach e^{|Im λ| π}
                let tol = 1e-13 * (lambda.im.abs() * PI).exp();
                assert!((g - v).max_abs() < tol, "{lambda} {t} {x}");
            }
        }
    }

    #[test]
    fn constructed_kernel_reduces_to_explicit() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        let op = DiracOperator::with_params(PotentialMatrix::zero(), form, params(64));
        let lambda = C64::new(0.7, 0.4);
        let k0 = green0_kernel(&form, lambda).unwrap();
        let k = green_kernel(&op, lambda).unwrap();
        assert_eq!(k.source(), KernelSource::Constructed);
        let ts: Vec<f64> = (0..40).map(|i| (i as f64 + 0.3) * PI / 40.0).collect();
        let xs: Vec<f64> = (0..40).map(|i| (i as f64 + 0.7) * PI / 40.0).collect();
        let a = k0.sample(&ts, &xs).unwrap();
        let b = k.sample(&ts, &xs).unwrap();
        let diff = a
            .iter()
            .flatten()
            .zip(b.iter().flatten())
            .map(|(p, q)| (*p - *q).max_abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-8, "{diff}");
    }

    #[test]
    fn jump_across_the_diagonal() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        let k0 = green0_kernel(&form, C64::new(0.0, 1.0)).unwrap();
        let op = DiracOperator::with_params(
            PotentialMatrix::constant_offdiag(C64::new(0.3, 0.0)),
            form,
            params(32),
        );
        let k = green_kernel(&op, C64::new(0.5, 1.0)).unwrap();
        let expected = Mat2::diag(-I, I);
        for kern in [&k0, &k] {
            assert!((kern.jump(1.3).unwrap() - expected).max_abs() < 1e-12);
            let eps = 1e-9;
            let one_sided = kern.eval(1.3 + eps, 1.3).unwrap() - kern.eval(1.3 - eps, 1.3).unwrap();
            assert!((one_sided - expected).max_abs() < 1e-7);
        }
    }

    #[test]
    fn pole_is_reported() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        match green0_kernel(&form, C64::new(3.0, 0.0)) {
            Err(DiracError::Pole { nearest, .. }) => assert!((nearest - C64::new(3.0, 0.0)).norm() < 1e-12),
            other => panic!("{other:?}"),
        }
        let op = DiracOperator::with_params(PotentialMatrix::zero(), form, params(32));
        assert!(matches!(green_kernel(&op, C64::new(-2.0, 0.0)), Err(DiracError::Pole { .. })));
    }

    #[test]
    fn resolvent_inverts_shifted_operator() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        let lambda = C64::new(0.0, 1.0);
        for pot in [PotentialMatrix::zero(), PotentialMatrix::constant_offdiag(C64::new(0.3, 0.0))] {
            let op = DiracOperator::with_params(pot.clone(), form, params(64));
            let f = smooth(op.mesh().clone());
            let k = green_kernel(&op, lambda).unwrap();
            let u = k.apply(&f).unwrap();
            assert!(op.shifted_residual_l2(lambda, &u, &f) < 1e-6);
            if pot.is_zero() {
                let u0 = green0_kernel(&form, lambda).unwrap().apply(&f).unwrap();
                assert!(op.shifted_residual_l2(lambda, &u0, &f) < 1e-6);
            }
        }
    }

    #[test]
    fn resolvent_on_free_eigenfunction() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        let mesh = Mesh::uniform(params(64));
        let c = 1.0 / (2.0 * PI).sqrt();
        let y0 = GridFunction2::from_closure(mesh.clone(), |_| [C64::new(c, 0.0), C64::new(c, 0.0)]);
        let u = green0_kernel(&form, C64::new(0.0, 1.0)).unwrap().apply(&y0).unwrap();
        let err = u.sub(&y0.scale(I)).unwrap().l2_norm();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn first_resolvent_identity() {
        let form = BoundaryMatrixPair::periodic();
        let op = DiracOperator::with_params(
            PotentialMatrix::constant_offdiag(C64::new(0.2, 0.1)),
            form,
            params(64),
        );
        let f = smooth(op.mesh().clone());
        let (l1, l2) = (C64::new(0.0, 1.0), C64::new(0.0, 2.0));
        let r1 = green_kernel(&op, l1).unwrap();
        let r2 = green_kernel(&op, l2).unwrap();
        let lhs = r1.apply(&f).unwrap().sub(&r2.apply(&f).unwrap()).unwrap();
        let rhs = r1.apply(&r2.apply(&f).unwrap()).unwrap().scale(l1 - l2);
        assert!(lhs.sub(&rhs).unwrap().l2_norm() < 1e-8);
    }

    #[test]
    fn apply_is_linear() {
        let form = BoundaryMatrixPair::antiperiodic();
        let k = green0_kernel(&form, C64::new(0.3, 0.8)).unwrap();
        let mesh = Mesh::uniform(params(16));
        let f = smooth(mesh.clone());
        let g = GridFunction2::from_closure(mesh, |x| [C64::new(0.0, x), C64::new(1.0, -x * x)]);
        let (a, b) = (C64::new(0.4, -1.2), C64::new(2.0, 0.5));
        let lhs = k.apply(&f.scale(a).axpy(b, &g).unwrap()).unwrap();
        let rhs = k.apply(&f).unwrap().scale(a).axpy(b, &k.apply(&g).unwrap()).unwrap();
        let scale = lhs.l2_norm();
        assert!(lhs.sub(&rhs).unwrap().l2_norm() < 1e-12 * scale.max(1.0));
    }

    #[test]
    fn line_fit_recovers_exact_power() {
        let xs: Vec<f64> = [1.0f64, 2.0, 4.0].iter().map(|x| x.ln()).collect();
        let ys: Vec<f64> = [3.0f64, 1.5, 0.75].iter().map(|y| y.ln()).collect();
        let (s, c) = fit_line(&xs, &ys);
        assert!((s + 1.0).abs() < 1e-12 && (c.exp() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn opnorm_rejects_bad_exponents() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        let p = params(16);
        assert!(opnorm_scaling(&form, 2.0, 1.0, &[4.0, 8.0], &p).is_err());
        assert!(opnorm_scaling(&form, 0.5, 1.0, &[4.0, 8.0], &p).is_err());
        assert!(opnorm_scaling(&form, 2.0, 2.0, &[0.5, 8.0], &p).is_err());
    }

    #[test]
    fn two_two_norm_decays_like_inverse_y() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        let ys = [4.0, 8.0, 16.0, 32.0, 64.0];
        let est = opnorm_scaling(&form, 2.0, 2.0, &ys, &params(64)).unwrap();
        assert!((est.slope + 1.0).abs() < 0.15, "{est:?}");
        assert!(est.estimates.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(est.a_est, 1.0);
    }

    #[test]
    fn l1_sources_follow_the_predicted_exponents() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        let ys = [4.0, 8.0, 16.0, 32.0, 64.0];
        let p = params(64);
        let e12 = opnorm_scaling(&form, 1.0, 2.0, &ys, &p).unwrap();
        assert!((e12.slope + 0.5).abs() < 0.15, "{e12:?}");
        let e1i = opnorm_scaling(&form, 1.0, f64::INFINITY, &ys, &p).unwrap();
        assert!(e1i.slope.abs() < 0.15, "{e1i:?}");
    }

    #[test]
    fn kernel_bound_is_uniform_along_the_spectrum() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        let op = DiracOperator::with_params(
            PotentialMatrix::constant_offdiag(C64::new(0.3, 0.0)),
            form,
            params(64),
        );
        let eigs = crate::spectrum::localize(&op, 10, &Default::default()).unwrap();
        let circles: Vec<(i64, Contour)> = (-10..=10)
            .filter(|n| *n != 0)
            .map(|n| (n, Contour::circle(eigs.get(n), 0.25)))
            .collect();
        let bounds = kernel_bound(&op, &circles, 8, 16).unwrap();
        let max_in = |lo: i64, hi: i64| {
            bounds
                .iter()
                .filter(|(n, _)| (lo..=hi).contains(&n.abs()))
                .map(|b| b.1)
                .fold(0.0, f64::max)
        };
        assert!(max_in(6, 10) <= 1.2 * max_in(1, 5), "{bounds:?}");
    }
}
