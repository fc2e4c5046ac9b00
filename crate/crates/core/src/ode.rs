//! Fundamental matrices, characteristic determinant and eigenfunctions of
//! `B y' + P y = λ y` with `B = diag(−i, i)`.
//!
//! The equation is written as `y' = (λ B⁻¹ − B⁻¹ P) y` and propagated with a
//! fourth-order Magnus step between consecutive mesh nodes. On panels that touch
//! a singular point of the potential the step uses the exact mean of `P` over the
//! sub-interval instead of point values.

use std::sync::Arc;

use crate::boundary::BoundaryMatrixPair;
use crate::error::{DiracError, Result};
use crate::grid::GridFunction2;
use crate::mat2::{null_vector, pinv_solve, singular_values, Mat2, Vec2, C64, I, ONE, ZERO};
use crate::mesh::{Mesh, MeshBuilder, MeshParams, PanelRule};
use crate::potentials::PotentialMatrix;

pub const DEFAULT_LAMBDA_CAP: f64 = 50.0;
pub const DEFAULT_EIGEN_TOL: f64 = 1e-7;

/// B⁻¹ = diag(i, −i).
pub fn b_inv() -> Mat2 {
    Mat2::diag(I, -I)
}

/// λ-independent data of one Magnus step: Ω = h(λB⁻¹ − S) + c h²(λ K₁ + K₀).
#[derive(Debug, Clone, Copy)]
struct Step {
    h: f64,
    s: Mat2,
    k1: Mat2,
    k0: Mat2,
}

const MAGNUS_C: f64 = 0.144_337_567_297_406_43; // √3 / 12

impl Step {
    fn from_samples(h: f64, p1: Mat2, p2: Mat2) -> Step {
        let bi = b_inv();
        let q1 = bi * p1;
        let q2 = bi * p2;
        Step {
            h,
            s: (q1 + q2).scale(C64::new(0.5, 0.0)),
            k1: bi.commutator(&(q2 - q1)),
            k0: q2.commutator(&q1),
        }
    }

    fn from_mean(h: f64, mean: Mat2) -> Step {
        Step::from_samples(h, mean, mean)
    }

    fn propagator(&self, lambda: C64) -> Mat2 {
        let h = C64::new(self.h, 0.0);
        let omega = (b_inv().scale(lambda) - self.s).scale(h)
            + (self.k1.scale(lambda) + self.k0).scale(h * h * MAGNUS_C);
        omega.expm()
    }

    fn magnus4(p: &PotentialMatrix, a: f64, b: f64) -> Step {
        let h = b - a;
        let mid = 0.5 * (a + b);
        let off = 0.5 * h / 3f64.sqrt();
        Step::from_samples(h, p.eval(mid - off), p.eval(mid + off))
    }
}

/// Sixth-order Magnus step over a whole panel from three Gauss–Legendre samples.
#[derive(Debug, Clone, Copy)]
struct PanelStep {
    h: f64,
    q: [Mat2; 3],
}

impl PanelStep {
    fn new(p: &PotentialMatrix, a: f64, b: f64) -> PanelStep {
        let h = b - a;
        let mid = 0.5 * (a + b);
        let off = h * 15f64.sqrt() / 10.0;
        let bi = b_inv();
        PanelStep {
            h,
            q: [bi * p.eval(mid - off), bi * p.eval(mid), bi * p.eval(mid + off)],
        }
    }

    fn propagator(&self, lambda: C64) -> Mat2 {
        let h = self.h;
        let r = |x: f64| C64::new(x, 0.0);
        let [q1, q2, q3] = self.q;
        // A_k = λB⁻¹ − Q_k
        let a1 = (b_inv().scale(lambda) - q2).scale(r(h));
        let a2 = (q1 - q3).scale(r(15f64.sqrt() * h / 3.0));
        let a3 = (q2.scale(r(2.0)) - q1 - q3).scale(r(10.0 * h / 3.0));
        let c1 = a1.commutator(&a2);
        let c2 = a1.commutator(&(a3.scale(r(2.0)) + c1)).scale(r(-1.0 / 60.0));
        let left = a1.scale(r(-20.0)) - a3 + c1;
        let omega = a1 + a3.scale(r(1.0 / 12.0)) + left.commutator(&(a2 + c2)).scale(r(1.0 / 240.0));
        omega.expm()
    }
}

/// Largest |λ|·h allowed for one sixth-order step.
const PANEL_STEP_RESOLUTION: f64 = 0.2;

#[derive(Debug, Clone)]
enum PanelPropagator {
    /// The panel split into 1, 2 and 4 equal sixth-order steps.
    Whole([Vec<PanelStep>; 3]),
    /// Product of the node-to-node steps with these indices.
    Steps(std::ops::Range<usize>),
}

/// Builds a mesh that resolves the singular and break points of a potential and
/// of any additional functions that will be sampled on it.
pub fn operator_mesh<'a>(
    params: MeshParams,
    p: &PotentialMatrix,
    extra: impl IntoIterator<Item = &'a crate::functions::ScalarFunction>,
) -> Arc<Mesh> {
    MeshBuilder::new(params)
        .with_functions(p.entries().iter())
        .with_functions(extra)
        .build()
}

/// A Dirac operator L_{P,U} discretized on a mesh.
#[derive(Debug, Clone)]
pub struct DiracOperator {
    potential: PotentialMatrix,
    form: BoundaryMatrixPair,
    mesh: Arc<Mesh>,
    steps: Vec<Step>,
    panel_steps: Vec<PanelPropagator>,
    /// Indices into `steps` covering each panel.
    panel_ranges: Vec<std::ops::Range<usize>>,
    /// For each step, the node it ends on (`None` for the step closing a panel).
    ends_at: Vec<Option<usize>>,
    lambda_cap: f64,
    /// ∫₀^π (p₄ − p₁), fixing det M(π) = exp(i·trace_integral).
    trace_integral: C64,
}

impl DiracOperator {
    pub fn new(potential: PotentialMatrix, form: BoundaryMatrixPair, mesh: Arc<Mesh>) -> Self {
        let mut steps = Vec::with_capacity(mesh.len() + mesh.panels().len());
        let mut ends_at = Vec::with_capacity(steps.capacity());
        let mut panel_steps = Vec::with_capacity(mesh.panels().len());
        let mut panel_ranges = Vec::with_capacity(mesh.panels().len());
        for panel in mesh.panels() {
            let first_step = steps.len();
            let nodes = &mesh.nodes()[panel.nodes.clone()];
            match panel.rule {
                PanelRule::Gauss => {
                    let mut left = panel.a;
                    for (k, &x) in nodes.iter().enumerate() {
                        steps.push(Step::magnus4(&potential, left, x));
                        ends_at.push(Some(panel.nodes.start + k));
                        left = x;
                    }
                    steps.push(Step::magnus4(&potential, left, panel.b));
                    ends_at.push(None);
                }
                PanelRule::TanhSinh => {
                    let w = &mesh.weights()[panel.nodes.clone()];
                    let samples: Vec<Mat2> = nodes.iter().map(|&x| potential.eval(x)).collect();
                    let total = samples
                        .iter()
                        .zip(w)
                        .fold(Mat2::zero(), |acc, (pv, wj)| acc + pv.scale(C64::new(*wj, 0.0)));
                    let mut run = Mat2::zero();
                    let mut prev_int = Mat2::zero();
                    let mut left = panel.a;
                    for (k, (&x, (pv, wj))) in nodes.iter().zip(samples.iter().zip(w)).enumerate() {
                        let at_x = run + pv.scale(C64::new(0.5 * wj, 0.0));
                        run = run + pv.scale(C64::new(*wj, 0.0));
                        steps.push(mean_step(x - left, at_x - prev_int));
                        ends_at.push(Some(panel.nodes.start + k));
                        prev_int = at_x;
                        left = x;
                    }
                    steps.push(mean_step(panel.b - left, total - prev_int));
                    ends_at.push(None);
                }
            }
            let far = mesh.singular_points().iter().all(|&x0| {
                let dist = if x0 < panel.a { panel.a - x0 } else { x0 - panel.b };
                dist >= 2.0 * panel.len()
            });
            panel_ranges.push(first_step..steps.len());
            panel_steps.push(if panel.rule == PanelRule::Gauss && far {
                let split = |k: usize| {
                    let h = panel.len() / k as f64;
                    (0..k)
                        .map(|j| PanelStep::new(&potential, panel.a + j as f64 * h, panel.a + (j + 1) as f64 * h))
                        .collect()
                };
                PanelPropagator::Whole([split(1), split(2), split(4)])
            } else {
                PanelPropagator::Steps(first_step..steps.len())
            });
        }
        let trace_integral = mesh.integrate_fn(potential.p4()) - mesh.integrate_fn(potential.p1());
        DiracOperator {
            potential,
            form,
            mesh,
            steps,
            panel_steps,
            panel_ranges,
            ends_at,
            lambda_cap: DEFAULT_LAMBDA_CAP,
            trace_integral,
        }
    }

    /// Builds the operator on a mesh adapted to the potential.
    pub fn with_params(potential: PotentialMatrix, form: BoundaryMatrixPair, params: MeshParams) -> Self {
        let mesh = operator_mesh(params, &potential, []);
        DiracOperator::new(potential, form, mesh)
    }

    pub fn with_lambda_cap(mut self, cap: f64) -> Self {
        self.lambda_cap = cap;
        self
    }

    pub fn potential(&self) -> &PotentialMatrix {
        &self.potential
    }

    pub fn form(&self) -> &BoundaryMatrixPair {
        &self.form
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn lambda_cap(&self) -> f64 {
        self.lambda_cap
    }

    /// The same potential with a different boundary form, sharing the discretization.
    pub fn with_form(&self, form: BoundaryMatrixPair) -> Self {
        DiracOperator {
            form,
            ..self.clone()
        }
    }

    /// Operator with potential Pᴴ and the adjoint boundary form U*; its
    /// eigenvalues are the conjugates of those of `self`.
    pub fn adjoint(&self) -> Result<Self> {
        Ok(DiracOperator::new(
            self.potential.adjoint(),
            self.form.adjoint_pair()?,
            self.mesh.clone(),
        ))
    }

    fn check_lambda(&self, lambda: C64) -> Result<()> {
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(DiracError::InvalidRange(format!("non-finite spectral parameter {lambda}")));
        }
        if lambda.im.abs() > self.lambda_cap {
            return Err(DiracError::LambdaCap {
                im: lambda.im,
                cap: self.lambda_cap,
            });
        }
        Ok(())
    }

    /// M(π, λ) only, with one sixth-order step per regular panel.
    pub fn monodromy(&self, lambda: C64) -> Result<Mat2> {
        self.check_lambda(lambda)?;
        let mut m = Mat2::identity();
        for (k, ps) in self.panel_steps.iter().enumerate() {
            let range = match ps {
                PanelPropagator::Whole(levels) => {
                    let kh = lambda.norm() * levels[0][0].h;
                    let level = (0..3).find(|&l| kh <= PANEL_STEP_RESOLUTION * (1 << l) as f64);
                    if let Some(l) = level {
                        for step in &levels[l] {
                            m = step.propagator(lambda) * m;
                        }
                        continue;
                    }
                    self.panel_ranges[k].clone()
                }
                PanelPropagator::Steps(range) => range.clone(),
            };
            for step in &self.steps[range] {
                m = step.propagator(lambda) * m;
            }
        }
        Ok(m)
    }

    /// M(x, λ) at every mesh node, plus M(π, λ).
    pub fn fundamental(&self, lambda: C64) -> Result<FundamentalSolution> {
        self.check_lambda(lambda)?;
        let mut at_nodes = Vec::with_capacity(self.mesh.len());
        let mut at_panel_ends = Vec::with_capacity(self.mesh.panels().len());
        let mut m = Mat2::identity();
        for (step, end) in self.steps.iter().zip(&self.ends_at) {
            m = step.propagator(lambda) * m;
            match end {
                Some(_) => at_nodes.push(m),
                None => at_panel_ends.push(m),
            }
        }
        Ok(FundamentalSolution {
            lambda,
            mesh: self.mesh.clone(),
            at_nodes,
            at_panel_ends,
        })
    }

    /// M(x, λ) at arbitrary points of [0, π].
    pub fn fundamental_at(&self, lambda: C64, xs: &[f64]) -> Result<Vec<Mat2>> {
        let fs = self.fundamental(lambda)?;
        xs.iter()
            .map(|&x| {
                if !(0.0..=std::f64::consts::PI).contains(&x) {
                    return Err(DiracError::InvalidRange(format!("x = {x} outside [0, π]")));
                }
                let k = self.mesh.locate(x);
                let panel = &self.mesh.panels()[k];
                let start = if k == 0 {
                    Mat2::identity()
                } else {
                    fs.at_panel_ends[k - 1]
                };
                if x <= panel.a {
                    return Ok(start);
                }
                let step = match panel.rule {
                    PanelRule::Gauss => Step::magnus4(&self.potential, panel.a, x),
                    PanelRule::TanhSinh => {
                        let e = self.potential.entries();
                        let mean = |j: usize| {
                            self.mesh.integrate_over(&e[j], panel.a, x, true) / (x - panel.a)
                        };
                        Step::from_mean(x - panel.a, Mat2::new(mean(0), mean(1), mean(2), mean(3)))
                    }
                };
                Ok(step.propagator(lambda) * start)
            })
            .collect()
    }

    /// Δ(λ) = det(C + D M(π, λ)).
    pub fn char_det(&self, lambda: C64) -> Result<C64> {
        Ok(self.boundary_matrix(lambda)?.det())
    }

    /// W(λ) = C + D M(π, λ).
    pub fn boundary_matrix(&self, lambda: C64) -> Result<Mat2> {
        let m = self.monodromy(lambda)?;
        Ok(*self.form.c() + *self.form.d() * m)
    }

    /// Expected det M(π, λ) from the Liouville formula.
    pub fn liouville_det(&self) -> C64 {
        (I * self.trace_integral).exp()
    }

    /// Eigenfunctions for an eigenvalue λ: one, or two when the boundary matrix
    /// vanishes to tolerance (geometric multiplicity two).
    pub fn eigen_solution(&self, lambda: C64, tol: f64) -> Result<EigenSolution> {
        let fs = self.fundamental(lambda)?;
        let m_pi = fs.at_pi();
        let w = *self.form.c() + *self.form.d() * m_pi;
        let scale = self.form.max_abs() * m_pi.max_abs().max(1.0);
        let (smax, smin) = singular_values(&w);
        let residual = smin / scale;
        let tolerance = tol;
        if residual > tolerance {
            return Err(DiracError::NotAnEigenvalue {
                lambda,
                residual,
                tolerance,
            });
        }
        let initial: Vec<Vec2> = if smax / scale <= tolerance {
            vec![[ONE, ZERO], [ZERO, ONE]]
        } else {
            vec![null_vector(&w)]
        };
        let functions = initial
            .iter()
            .map(|y0| normalize_with_initial(fs.apply(y0), Some(*y0)))
            .collect();
        Ok(EigenSolution {
            lambda,
            functions,
            residual,
        })
    }

    /// Solves (ℓ − λ) u = g with U(u) = 0 in the least-squares sense; when λ is
    /// an eigenvalue this yields the minimal-norm associated function of a chain.
    pub fn solve_shifted(&self, lambda: C64, g: &GridFunction2) -> Result<GridFunction2> {
        let fs = self.fundamental(lambda)?;
        let bi = b_inv();
        // u = M(x)[c + ∫₀ˣ M(t)⁻¹ B⁻¹ g(t) dt]
        let integrand: Vec<Vec2> = fs
            .at_nodes
            .iter()
            .zip(g.values())
            .map(|(m, gv)| {
                let inv = m.inverse().unwrap_or_else(Mat2::zero);
                (inv * bi).mul_vec(gv)
            })
            .collect();
        let cum = self.mesh.cumulative(&integrand);
        let m_pi = fs.at_pi();
        let w = *self.form.c() + *self.form.d() * m_pi;
        let v_pi = cum[self.mesh.len()];
        let rhs = (*self.form.d() * m_pi).mul_vec(&v_pi);
        let c = pinv_solve(&w, &[-rhs[0], -rhs[1]], 1e-9);
        let values = fs
            .at_nodes
            .iter()
            .zip(&cum)
            .map(|(m, v)| m.mul_vec(&[c[0] + v[0], c[1] + v[1]]))
            .collect();
        Ok(GridFunction2::new(self.mesh.clone(), values))
    }

    /// (ℓ − λ)u at the nodes of Gauss panels, with u′ from the panel
    /// differentiation matrices; `None` on double-exponential panels.
    pub fn apply_shifted(&self, lambda: C64, u: &GridFunction2) -> Vec<Option<Vec2>> {
        let gl = self.mesh.gauss();
        let b = Mat2::diag(-I, I);
        let mut out = vec![None; u.values().len()];
        for panel in self.mesh.panels().iter().filter(|p| p.rule == PanelRule::Gauss) {
            let vals = &u.values()[panel.nodes.clone()];
            let xs = &self.mesh.nodes()[panel.nodes.clone()];
            let scale = 2.0 / panel.len();
            for (q, row) in gl.differentiation.iter().enumerate() {
                let mut d = [ZERO, ZERO];
                for (dqj, v) in row.iter().zip(vals) {
                    d[0] += v[0] * (dqj * scale);
                    d[1] += v[1] * (dqj * scale);
                }
                let bd = b.mul_vec(&d);
                let pu = self.potential.eval(xs[q]).mul_vec(&vals[q]);
                out[panel.nodes.start + q] = Some([
                    bd[0] + pu[0] - lambda * vals[q][0],
                    bd[1] + pu[1] - lambda * vals[q][1],
                ]);
            }
        }
        out
    }

    /// L₂ norm of (ℓ − λ)u − f over the Gauss panels.
    pub fn shifted_residual_l2(&self, lambda: C64, u: &GridFunction2, f: &GridFunction2) -> f64 {
        self.apply_shifted(lambda, u)
            .iter()
            .zip(f.values())
            .zip(self.mesh.weights())
            .filter_map(|((r, fv), w)| r.map(|r| w * ((r[0] - fv[0]).norm_sqr() + (r[1] - fv[1]).norm_sqr())))
            .sum::<f64>()
            .sqrt()
    }

    /// max over Gauss panels of |B y' + P y − λ y| relative to max |y|.
    pub fn ode_residual(&self, lambda: C64, y: &GridFunction2) -> f64 {
        let ymax = y
            .values()
            .iter()
            .flat_map(|v| [v[0].norm(), v[1].norm()])
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        self.apply_shifted(lambda, y)
            .iter()
            .flatten()
            .map(|r| r[0].norm().max(r[1].norm()))
            .fold(0.0, f64::max)
            / ymax
    }
}

fn mean_step(h: f64, integral: Mat2) -> Step {
    if h <= 0.0 {
        return Step::from_mean(0.0, Mat2::zero());
    }
    Step::from_mean(h, integral.scale(C64::new(1.0 / h, 0.0)))
}

/// Unit L₂ norm; the first component of y(0) that is not negligible is made
/// real and positive. Without `y0` the value at the first node stands in for y(0).
pub fn normalize_with_initial(y: GridFunction2, y0: Option<Vec2>) -> GridFunction2 {
    let n = y.l2_norm();
    let first = y0.unwrap_or_else(|| y.values()[0]);
    let big = first[0].norm().max(first[1].norm());
    let pivot = if first[0].norm() > 1e-8 * big {
        first[0]
    } else {
        first[1]
    };
    let phase = if pivot.norm() > 0.0 {
        pivot.conj() / pivot.norm()
    } else {
        ONE
    };
    y.scale(phase / n)
}

#[derive(Debug, Clone)]
pub struct FundamentalSolution {
    pub lambda: C64,
    mesh: Arc<Mesh>,
    /// M(x_j, λ) at mesh nodes.
    pub at_nodes: Vec<Mat2>,
    /// M(b_k, λ) at the right end of each panel; the last entry is M(π, λ).
    pub at_panel_ends: Vec<Mat2>,
}

impl FundamentalSolution {
    pub fn at_pi(&self) -> Mat2 {
        *self.at_panel_ends.last().expect("mesh has panels")
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// The solution with initial value y(0) = y0.
    pub fn apply(&self, y0: &Vec2) -> GridFunction2 {
        GridFunction2::new(
            self.mesh.clone(),
            self.at_nodes.iter().map(|m| m.mul_vec(y0)).collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub lambda: C64,
    /// Normalized eigenfunctions; two for a semisimple double eigenvalue.
    pub functions: Vec<GridFunction2>,
    /// Relative smallest singular value of C + D M(π, λ).
    pub residual: f64,
}

/// Convenience wrapper: M(x, λ) on a grid for a potential.
pub fn fundamental_matrix(p: &PotentialMatrix, lambda: C64, xs: &[f64], params: MeshParams) -> Result<Vec<Mat2>> {
    let op = DiracOperator::with_params(p.clone(), BoundaryMatrixPair::periodic(), params);
    op.fundamental_at(lambda, xs)
}

pub fn char_det(p: &PotentialMatrix, u: &BoundaryMatrixPair, lambda: C64, params: MeshParams) -> Result<C64> {
    DiracOperator::with_params(p.clone(), *u, params).char_det(lambda)
}

pub fn bvp_eigenfunction(
    p: &PotentialMatrix,
    u: &BoundaryMatrixPair,
    lambda: C64,
    params: MeshParams,
) -> Result<EigenSolution> {
    DiracOperator::with_params(p.clone(), *u, params).eigen_solution(lambda, DEFAULT_EIGEN_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::ScalarFunction;
    use std::f64::consts::PI;

    fn params(panels: usize) -> MeshParams {
        MeshParams {
            panels,
            ..Default::default()
        }
    }

    fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
        (*a - *b).max_abs() <= tol * b.max_abs().max(1.0)
    }

    #[test]
    fn free_fundamental_matrix_is_diagonal_exponential() {
        let op = DiracOperator::with_params(PotentialMatrix::zero(), BoundaryMatrixPair::periodic(), params(32));
        for lambda in [C64::new(3.7, 0.0), C64::new(-12.2, 1.5), C64::new(40.0, -2.0)] {
            let fs = op.fundamental(lambda).unwrap();
            for (m, &x) in fs.at_nodes.iter().zip(op.mesh().nodes()) {
                let exact = Mat2::diag((I * lambda * x).exp(), (-I * lambda * x).exp());
                assert!(close(m, &exact, 1e-12));
            }
        }
    }

    #[test]
    fn free_char_det_matches_closed_form() {
        for u in [
            BoundaryMatrixPair::dirichlet_analog(),
            BoundaryMatrixPair::periodic(),
            BoundaryMatrixPair::antiperiodic(),
        ] {
            let op = DiracOperator::with_params(PotentialMatrix::zero(), u, params(16));
            for lambda in [C64::new(0.3, 0.2), C64::new(7.1, -1.0), C64::new(-25.5, 0.7)] {
                let d = op.char_det(lambda).unwrap();
                let d0 = u.delta0(lambda);
                assert!((d - d0).norm() < 1e-11 * d0.norm().max(1.0));
            }
        }
    }

    #[test]
    fn constant_offdiagonal_matches_matrix_exponential() {
        let c = C64::new(0.8, 0.3);
        let op = DiracOperator::with_params(
            PotentialMatrix::constant_offdiag(c),
            BoundaryMatrixPair::periodic(),
            params(64),
        );
        let lambda = C64::new(5.5, 0.4);
        let a = b_inv() * (Mat2::identity().scale(lambda) - Mat2::new(ZERO, c, c, ZERO));
        let xs = [0.0, 0.4, 1.7, PI];
        let ms = op.fundamental_at(lambda, &xs).unwrap();
        for (m, &x) in ms.iter().zip(&xs) {
            let exact = a.scale(C64::new(x, 0.0)).expm();
            assert!(close(m, &exact, 1e-12));
        }
    }

    #[test]
    fn step_potential_is_a_product_of_exponentials() {
        let pot = PotentialMatrix::off_diagonal(
            ScalarFunction::indicator(0.0, 1.0, C64::new(0.5, 0.0)),
            ScalarFunction::indicator(1.0, PI, C64::new(-0.3, 0.2)),
        );
        let op = DiracOperator::new(pot.clone(), BoundaryMatrixPair::periodic(), operator_mesh(params(40), &pot, []));
        let lambda = C64::new(9.0, 0.3);
        let piece = |p2: C64, p3: C64, len: f64| {
            (b_inv() * (Mat2::identity().scale(lambda) - Mat2::new(ZERO, p2, p3, ZERO)))
                .scale(C64::new(len, 0.0))
                .expm()
        };
        let exact = piece(ZERO, C64::new(-0.3, 0.2), PI - 1.0) * piece(C64::new(0.5, 0.0), ZERO, 1.0);
        assert!(close(&op.monodromy(lambda).unwrap(), &exact, 1e-12));
    }

    #[test]
    fn panel_steps_agree_with_node_steps() {
        let pot = PotentialMatrix::off_diagonal(
            ScalarFunction::cos(3).plus(ScalarFunction::x()),
            ScalarFunction::power(C64::new(0.3, 0.1), 1.0, 0.3).unwrap(),
        );
        let op = DiracOperator::with_params(pot, BoundaryMatrixPair::periodic(), MeshParams::default());
        for lambda in [C64::new(0.5, 0.0), C64::new(17.2, -0.6), C64::new(48.0, 1.0), C64::new(-90.0, 0.3)] {
            let a = op.monodromy(lambda).unwrap();
            let b = op.fundamental(lambda).unwrap().at_pi();
            assert!(close(&a, &b, 1e-9), "{lambda}");
        }
    }

    #[test]
    fn liouville_determinant() {
        let pot = PotentialMatrix::new(
            ScalarFunction::cos(2).scaled(C64::new(0.4, 0.1)),
            ScalarFunction::sin(1),
            ScalarFunction::real(0.7),
            ScalarFunction::x().scaled(C64::new(0.0, 0.2)),
        );
        let op = DiracOperator::with_params(pot, BoundaryMatrixPair::periodic(), params(64));
        let m = op.monodromy(C64::new(3.3, 0.5)).unwrap();
        let expect = (I * C64::new(0.0, 0.2) * (PI * PI / 2.0)).exp();
        assert!((m.det() - expect).norm() < 1e-11);
        assert!((op.liouville_det() - expect).norm() < 1e-13);
    }

    #[test]
    fn singular_potential_converges_under_refinement() {
        let pot = PotentialMatrix::off_diagonal(
            ScalarFunction::power(C64::new(0.5, 0.0), PI / 2.0, 0.4).unwrap(),
            ScalarFunction::power(C64::new(0.5, 0.0), 0.0, 0.4).unwrap(),
        );
        let lambda = C64::new(20.3, 0.2);
        let m = |n| {
            DiracOperator::with_params(pot.clone(), BoundaryMatrixPair::periodic(), params(n))
                .monodromy(lambda)
                .unwrap()
        };
        let reference = m(1024);
        let errs: Vec<f64> = [64, 128, 256].iter().map(|&n| (m(n) - reference).max_abs()).collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2]);
        assert!(errs[2] < 3e-8);
        assert!((m(256).det() - ONE).norm() < 1e-12);
    }

    #[test]
    fn dirichlet_eigenfunctions_of_free_operator() {
        let op = DiracOperator::with_params(
            PotentialMatrix::zero(),
            BoundaryMatrixPair::dirichlet_analog(),
            params(64),
        );
        for n in [-3, 0, 1, 17] {
            let lambda = C64::new(n as f64, 0.0);
            let sol = op.eigen_solution(lambda, DEFAULT_EIGEN_TOL).unwrap();
            assert_eq!(sol.functions.len(), 1);
            let y = &sol.functions[0];
            assert!((y.l2_norm() - 1.0).abs() < 1e-12);
            let s = 1.0 / (2.0 * PI).sqrt();
            for (v, &x) in y.values().iter().zip(op.mesh().nodes()) {
                assert!((v[0] - (I * lambda * x).exp() * s).norm() < 1e-10);
                assert!((v[1] - (-I * lambda * x).exp() * s).norm() < 1e-10);
            }
            assert!(op.ode_residual(lambda, y) < 1e-8);
        }
        let err = op.eigen_solution(C64::new(0.5, 0.0), DEFAULT_EIGEN_TOL);
        assert!(matches!(err, Err(DiracError::NotAnEigenvalue { .. })));
    }

    #[test]
    fn periodic_free_eigenvalues_are_double() {
        let op = DiracOperator::with_params(PotentialMatrix::zero(), BoundaryMatrixPair::periodic(), params(32));
        let sol = op.eigen_solution(C64::new(4.0, 0.0), DEFAULT_EIGEN_TOL).unwrap();
        assert_eq!(sol.functions.len(), 2);
    }

    #[test]
    fn lambda_cap_is_enforced() {
        let op = DiracOperator::with_params(PotentialMatrix::zero(), BoundaryMatrixPair::periodic(), params(8));
        assert!(matches!(op.char_det(C64::new(0.0, 60.0)), Err(DiracError::LambdaCap { .. })));
        assert!(op.clone().with_lambda_cap(80.0).char_det(C64::new(0.0, 60.0)).is_ok());
    }

    #[test]
    fn shifted_solve_inverts_the_operator() {
        let pot = PotentialMatrix::constant_offdiag(C64::new(0.6, 0.0));
        let op = DiracOperator::with_params(pot, BoundaryMatrixPair::dirichlet_analog(), params(32));
        let lambda = C64::new(2.4, 0.7);
        let g = GridFunction2::from_closure(op.mesh().clone(), |x| [C64::new(x.sin(), 0.0), C64::new(1.0, x)]);
        let u = op.solve_shifted(lambda, &g).unwrap();
        assert!(op.shifted_residual_l2(lambda, &u, &g) < 1e-8);
    }
}
