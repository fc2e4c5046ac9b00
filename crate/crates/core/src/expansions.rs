//! Root systems, spectral projectors and the partial sums S_m, S_m⁰.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryMatrixPair;
use crate::error::{DiracError, Result};
use crate::grid::GridFunction2;
use crate::green::green_kernel;
use crate::mat2::{null_vector, pinv_solve, Mat2, Vec2, C64, I, ONE, ZERO};
use crate::mesh::Mesh;
use crate::ode::{normalize_with_initial, DiracOperator, DEFAULT_EIGEN_TOL};
use crate::quadrature::GaussLegendre;
use crate::spectrum::{Contour, EigenvalueList};

/// Consecutive eigenvalues closer than this are treated as one cluster.
pub const NEAR_DEGENERATE: f64 = 1e-4;
/// Smallest admissible |⟨y, z⟩| before normalization.
pub const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainRole {
    Eigen,
    Associated,
}

#[derive(Debug, Clone)]
pub struct RootFunction {
    pub index: i64,
    pub lambda: C64,
    pub y: GridFunction2,
    /// Biorthogonal partner: ⟨y_j, z_k⟩ = δ_jk.
    pub z: GridFunction2,
    pub role: ChainRole,
    pub cluster: usize,
}

#[derive(Debug, Clone)]
pub struct RootSystem {
    mesh: Arc<Mesh>,
    m_max: usize,
    entries: Vec<RootFunction>,
    pub diagnostics: Vec<String>,
}

/// z_k = Σ_j w_j c_jk with ⟨y_i, z_k⟩ = δ_ik.
fn biorthogonalize(ys: &[GridFunction2], ws: &[GridFunction2]) -> Result<Vec<GridFunction2>> {
    let g = |i: usize, j: usize| ys[i].inner(&ws[j]);
    match ys.len() {
        1 => {
            let p = g(0, 0)?;
            if p.norm() < PIVOT_TOL {
                return Err(DiracError::ContourValidation(format!(
                    "near-Jordan pivot |<y, z>| = {:.3e}",
                    p.norm()
                )));
            }
            Ok(vec![ws[0].scale(ONE / p.conj())])
        }
        2 => {
            let gm = Mat2::new(g(0, 0)?, g(0, 1)?, g(1, 0)?, g(1, 1)?);
            let scale = gm.max_abs();
            let inv = gm
                .inverse()
                .filter(|_| gm.det().norm() > PIVOT_TOL * scale * scale)
                .ok_or_else(|| DiracError::ContourValidation("singular Gram matrix in a cluster".into()))?;
            (0..2)
                .map(|k| ws[0].scale(inv.at(0, k).conj()).axpy(inv.at(1, k).conj(), &ws[1]))
                .collect()
        }
        n => Err(DiracError::InvalidRange(format!("clusters of size {n} are not supported"))),
    }
}

/// Nodes and weights with ∮ g dλ ≈ Σ w g(λ): the trapezoid rule on circles,
/// 8-point Gauss–Legendre segments on rectangles. `count` is the total node count.
pub fn contour_quadrature(contour: &Contour, count: usize) -> Vec<(C64, C64)> {
    match *contour {
        Contour::Circle { center, radius } => (0..count)
            .map(|j| {
                let e = (I * (2.0 * PI * j as f64 / count as f64)).exp();
                (center + e * radius, I * e * radius * (2.0 * PI / count as f64))
            })
            .collect(),
        Contour::Rectangle {
            re_min,
            re_max,
            im_min,
            im_max,
        } => {
            let gl = GaussLegendre::new(8);
            let corners = [
                C64::new(re_min, im_min),
                C64::new(re_max, im_min),
                C64::new(re_max, im_max),
                C64::new(re_min, im_max),
            ];
            let perimeter = contour.length();
            let mut out = Vec::with_capacity(count + 32);
            for s in 0..4 {
                let (a, b) = (corners[s], corners[(s + 1) % 4]);
                let segments = ((count as f64 / 8.0) * (b - a).norm() / perimeter).ceil().max(1.0) as usize;
                for q in 0..segments {
                    let sa = a + (b - a) * (q as f64 / segments as f64);
                    let sb = a + (b - a) * ((q + 1) as f64 / segments as f64);
                    let half = (sb - sa) * 0.5;
                    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
                        out.push((sa + half * (x + 1.0), half * *w));
                    }
                }
            }
            out
        }
    }
}

/// −(1/2πi)∮ R(λ) f dλ with a fixed node count.
fn riesz_integral(op: &DiracOperator, contour: &Contour, f: &GridFunction2, count: usize) -> Result<GridFunction2> {
    let nodes = contour_quadrature(contour, count);
    let terms = nodes
        .par_iter()
        .map(|(lambda, w)| Ok((green_kernel(op, *lambda)?.apply(f)?, *w)))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = GridFunction2::zeros(f.mesh().clone());
    let factor = -ONE / (2.0 * PI * I);
    for (u, w) in &terms {
        acc.add_scaled_in_place(*w * factor, u);
    }
    Ok(acc)
}

/// Riesz projector −(1/2πi)∮_γ R(λ) f dλ = Σ_{λ_n inside γ} ⟨f, z_n⟩ y_n.
/// The node count starts at `quad_order` and doubles until two successive
/// results agree to 1e-10 relative, at most four times.
pub fn projector_contour(op: &DiracOperator, contour: &Contour, f: &GridFunction2, quad_order: usize) -> Result<GridFunction2> {
    if !Arc::ptr_eq(f.mesh(), op.mesh()) && **f.mesh() != **op.mesh() {
        return Err(DiracError::MeshMismatch);
    }
    let mut count = quad_order.max(8);
    let mut prev = riesz_integral(op, contour, f, count)?;
    for _ in 0..4 {
        count *= 2;
        let next = riesz_integral(op, contour, f, count)?;
        let diff = next.sub(&prev)?.l2_norm();
        if diff <= 1e-10 * next.l2_norm().max(f.l2_norm()) {
            return Ok(next);
        }
        prev = next;
    }
    Err(DiracError::Quadrature(format!(
        "contour integral over {contour:?} did not settle with {count} nodes"
    )))
}

fn free_solution(mesh: &Arc<Mesh>, lambda: C64, ab: Vec2) -> GridFunction2 {
    GridFunction2::from_closure(mesh.clone(), |x| [ab[0] * (I * lambda * x).exp(), ab[1] * (-I * lambda * x).exp()])
}

/// C + D diag(e^{iλπ}, e^{−iλπ}).
fn free_boundary_matrix(form: &BoundaryMatrixPair, lambda: C64) -> Mat2 {
    *form.c() + *form.d() * Mat2::diag((I * lambda * PI).exp(), (-I * lambda * PI).exp())
}

/// Initial vector rescaled so that the free solution has unit norm and the
/// deterministic phase of `normalize_with_initial`.
fn normalized_coefficients(mesh: &Arc<Mesh>, lambda: C64, ab: Vec2) -> Vec2 {
    let y = normalize_with_initial(free_solution(mesh, lambda, ab), Some(ab));
    let raw = free_solution(mesh, lambda, ab);
    let k = if ab[0].norm() >= ab[1].norm() { 0 } else { 1 };
    let j = (0..y.values().len()).find(|&j| raw.values()[j][k].norm() > 0.0).unwrap_or(0);
    let s = y.values()[j][k] / raw.values()[j][k];
    [ab[0] * s, ab[1] * s]
}

/// Root functions of L_{0,U} for an eigenvalue of algebraic multiplicity `size`:
/// one eigenfunction, two eigenfunctions, or an eigenfunction with its associated function.
fn free_chain(form: &BoundaryMatrixPair, mesh: &Arc<Mesh>, lambda: C64, size: usize) -> Vec<(GridFunction2, ChainRole)> {
    let w = free_boundary_matrix(form, lambda);
    if size == 2 && w.max_abs() <= 1e-10 * form.max_abs() {
        return [[ONE, ZERO], [ZERO, ONE]]
            .into_iter()
            .map(|ab| (free_solution(mesh, lambda, normalized_coefficients(mesh, lambda, ab)), ChainRole::Eigen))
            .collect();
    }
    let ab = normalized_coefficients(mesh, lambda, null_vector(&w));
    let y = free_solution(mesh, lambda, ab);
    if size == 1 {
        return vec![(y, ChainRole::Eigen)];
    }
    // (ℓ₀ − λ)u = y: u = (e^{iλx}(c₁ + i a x), e^{−iλx}(c₂ − i b x)) with U(u) = 0.
    let tail = form.d().mul_vec(&[I * ab[0] * PI * (I * lambda * PI).exp(), -I * ab[1] * PI * (-I * lambda * PI).exp()]);
    let c = pinv_solve(&w, &[-tail[0], -tail[1]], 1e-9);
    let u = GridFunction2::from_closure(mesh.clone(), |x| {
        [
            (I * lambda * x).exp() * (c[0] + I * ab[0] * x),
            (-I * lambda * x).exp() * (c[1] - I * ab[1] * x),
        ]
    });
    vec![(y, ChainRole::Eigen), (u, ChainRole::Associated)]
}

/// Groups consecutive indices whose eigenvalues are closer than NEAR_DEGENERATE.
fn clusters(indices: std::ops::RangeInclusive<i64>, lambda: impl Fn(i64) -> C64) -> Vec<Vec<i64>> {
    let mut out: Vec<Vec<i64>> = Vec::new();
    let (lo, hi) = (*indices.start(), *indices.end());
    let mut n = lo;
    while n <= hi {
        if n < hi && (lambda(n) - lambda(n + 1)).norm() < NEAR_DEGENERATE {
            out.push(vec![n, n + 1]);
            n += 2;
        } else {
            out.push(vec![n]);
            n += 1;
        }
    }
    out
}

fn assemble(
    cluster: usize,
    indices: &[i64],
    lambdas: &[C64],
    ys: Vec<(GridFunction2, ChainRole)>,
    ws: &[GridFunction2],
) -> Result<Vec<RootFunction>> {
    let only: Vec<GridFunction2> = ys.iter().map(|(y, _)| y.clone()).collect();
    let zs = biorthogonalize(&only, ws)?;
    Ok(indices
        .iter()
        .zip(lambdas)
        .zip(ys.into_iter().zip(zs))
        .map(|((&index, &lambda), ((y, role), z))| RootFunction {
            index,
            lambda,
            y,
            z,
            role,
            cluster,
        })
        .collect())
}

/// Closed-form root system of L_{0,U} for n ∈ [−2m_max, 2m_max+1] on `mesh`.
pub fn unperturbed_root_system(form: &BoundaryMatrixPair, m_max: usize, mesh: Arc<Mesh>) -> Result<RootSystem> {
    let spec = form.unperturbed_spectrum()?;
    let adj = form.adjoint_pair()?;
    let m = m_max as i64;
    let groups = clusters(-2 * m..=2 * m + 1, |n| spec.eigenvalue(n));
    let built = groups
        .par_iter()
        .enumerate()
        .map(|(id, idx)| {
            let lambdas: Vec<C64> = idx.iter().map(|&n| spec.eigenvalue(n)).collect();
            let mean = lambdas.iter().sum::<C64>() / lambdas.len() as f64;
            let ys = free_chain(form, &mesh, mean, idx.len());
            let ws: Vec<GridFunction2> = free_chain(&adj, &mesh, mean.conj(), idx.len())
                .into_iter()
                .map(|(w, _)| w)
                .collect();
            assemble(id, idx, &lambdas, ys, &ws)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RootSystem {
        mesh,
        m_max,
        entries: built.into_iter().flatten().collect(),
        diagnostics: Vec::new(),
    })
}

/// Orthonormal basis of the range of the Riesz projector around `contour`.
fn projector_basis(op: &DiracOperator, contour: &Contour) -> Result<Vec<GridFunction2>> {
    let mesh = op.mesh().clone();
    let probes = [
        GridFunction2::from_closure(mesh.clone(), |_| [ONE, ZERO]),
        GridFunction2::from_closure(mesh.clone(), |_| [ZERO, ONE]),
        GridFunction2::from_closure(mesh, |x| [C64::new(x, 0.0), (I * x).exp()]),
    ];
    let mut basis: Vec<GridFunction2> = Vec::new();
    for g in &probes {
        let mut v = projector_contour(op, contour, g, 32)?;
        let scale = v.l2_norm();
        for b in &basis {
            let c = v.inner(b)?;
            v = v.axpy(-c, b)?;
        }
        let n = v.l2_norm();
        if n > 1e-6 * scale.max(1e-300) {
            basis.push(v.scale(C64::new(1.0 / n, 0.0)));
        }
        if basis.len() == 2 {
            return Ok(basis);
        }
    }
    Err(DiracError::ContourValidation(format!(
        "projector around {contour:?} does not have rank 2"
    )))
}

/// Root functions with their roles, adjoint functions, and an optional diagnostic.
type ClusterBasis = (Vec<(GridFunction2, ChainRole)>, Vec<GridFunction2>, Option<String>);

/// How the root functions of one cluster are obtained.
fn perturbed_cluster(
    op: &DiracOperator,
    adj: &DiracOperator,
    idx: &[i64],
    lambdas: &[C64],
    isolation: f64,
    force_projector: bool,
) -> Result<ClusterBasis> {
    let mean = lambdas.iter().sum::<C64>() / lambdas.len() as f64;
    if idx.len() == 1 && !force_projector {
        let y = op.eigen_solution(mean, DEFAULT_EIGEN_TOL)?.functions.swap_remove(0);
        let w = adj.eigen_solution(mean.conj(), DEFAULT_EIGEN_TOL)?.functions.swap_remove(0);
        return Ok((vec![(y, ChainRole::Eigen)], vec![w], None));
    }
    let gap = (lambdas[0] - lambdas[lambdas.len() - 1]).norm();
    if !force_projector && gap <= crate::spectrum::MULTIPLICITY_TOL {
        if let (Ok(es), Ok(ea)) = (
            op.eigen_solution(mean, DEFAULT_EIGEN_TOL),
            adj.eigen_solution(mean.conj(), DEFAULT_EIGEN_TOL),
        ) {
            if es.functions.len() == 2 && ea.functions.len() == 2 {
                let ys = es.functions.into_iter().map(|y| (y, ChainRole::Eigen)).collect();
                return Ok((ys, ea.functions, None));
            }
            if es.functions.len() == 1 && ea.functions.len() == 1 {
                let y = es.functions[0].clone();
                let u = op.solve_shifted(mean, &y)?;
                let w = ea.functions[0].clone();
                let v = adj.solve_shifted(mean.conj(), &w)?;
                return Ok((vec![(y, ChainRole::Eigen), (u, ChainRole::Associated)], vec![w, v], None));
            }
        }
    }
    let radius = (0.5 * isolation).min(0.25).max(2.0 * gap);
    let ys = projector_basis(op, &Contour::circle(mean, radius))?;
    let ws = projector_basis(adj, &Contour::circle(mean.conj(), radius))?;
    let note = format!("indices {idx:?}: basis of the rank-2 spectral projector (gap {gap:.2e})");
    Ok((ys.into_iter().map(|y| (y, ChainRole::Eigen)).collect(), ws, Some(note)))
}

/// Root system of L_{P,U} for n ∈ [−2m, 2m+1]: eigenfunctions from the boundary
/// value problem, partners from the adjoint problem at conjugate eigenvalues.
pub fn perturbed_root_system(op: &DiracOperator, eigs: &EigenvalueList, m: usize) -> Result<RootSystem> {
    if m > eigs.m_max {
        return Err(DiracError::WindowTooSmall {
            requested: m,
            available: eigs.m_max,
        });
    }
    let adj = op.adjoint()?;
    let mm = m as i64;
    let mut groups = clusters(-2 * mm..=2 * mm + 1, |n| eigs.get(n));
    let isolation = |idx: &[i64]| {
        eigs.indices()
            .filter(|n| !idx.contains(n))
            .map(|n| idx.iter().map(|&k| (eigs.get(n) - eigs.get(k)).norm()).fold(f64::INFINITY, f64::min))
            .fold(f64::INFINITY, f64::min)
    };
    let build = |idx: &Vec<i64>, force: bool| {
        let lambdas: Vec<C64> = idx.iter().map(|&n| eigs.get(n)).collect();
        perturbed_cluster(op, &adj, idx, &lambdas, isolation(idx), force).and_then(|(ys, ws, note)| {
            let entries = assemble(0, idx, &lambdas, ys, &ws)?;
            Ok((entries, note))
        })
    };
    let mut results: Vec<Result<(Vec<RootFunction>, Option<String>)>> =
        groups.par_iter().map(|idx| build(idx, false)).collect();
    let mut diagnostics = Vec::new();
    // a vanishing pivot on a simple index means a near-Jordan pair: redo it with its partner
    let mut k = 0;
    while k < groups.len() {
        let pivot_failure = groups[k].len() == 1
            && matches!(&results[k], Err(DiracError::ContourValidation(msg)) if msg.starts_with("near-Jordan"));
        if pivot_failure {
            let n = groups[k][0];
            let partner = if n.rem_euclid(2) == 0 { n + 1 } else { n - 1 };
            let j = groups.iter().position(|g| g.contains(&partner));
            if let Some(j) = j.filter(|&j| groups[j].len() == 1) {
                let (lo, hi) = (k.min(j), k.max(j));
                let pair = vec![n.min(partner), n.max(partner)];
                diagnostics.push(format!("near-Jordan pivot at index {n}; switched to chain mode"));
                let rebuilt = build(&pair, true);
                groups.remove(hi);
                let _ = results.remove(hi);
                groups[lo] = pair;
                results[lo] = rebuilt;
                k = lo;
            }
        }
        k += 1;
    }
    let mut entries = Vec::new();
    for (id, r) in results.into_iter().enumerate() {
        let (mut es, note) = r?;
        for e in &mut es {
            e.cluster = id;
        }
        entries.extend(es);
        diagnostics.extend(note);
    }
    Ok(RootSystem {
        mesh: op.mesh().clone(),
        m_max: m,
        entries,
        diagnostics,
    })
}

impl RootSystem {
    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn m_max(&self) -> usize {
        self.m_max
    }

    pub fn entries(&self) -> &[RootFunction] {
        &self.entries
    }

    pub fn first_index(&self) -> i64 {
        -2 * self.m_max as i64
    }

    pub fn entry(&self, n: i64) -> &RootFunction {
        &self.entries[(n - self.first_index()) as usize]
    }

    /// Largest |⟨y_j, z_k⟩ − δ_jk| over j, k in the window |n| ≤ 2m+1, split
    /// into (off-diagonal, diagonal).
    pub fn biorthogonality_defect(&self, m: usize) -> Result<(f64, f64)> {
        let m = m.min(self.m_max) as i64;
        let window: Vec<&RootFunction> = (-2 * m..=2 * m + 1).map(|n| self.entry(n)).collect();
        let rows = window
            .par_iter()
            .map(|a| {
                let mut off: f64 = 0.0;
                let mut diag: f64 = 0.0;
                for b in &window {
                    let g = a.y.inner(&b.z)?;
                    if a.index == b.index {
                        diag = diag.max((g - ONE).norm());
                    } else {
                        off = off.max(g.norm());
                    }
                }
                Ok((off, diag))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(rows.into_iter().fold((0.0, 0.0), |acc, r| (acc.0.max(r.0), acc.1.max(r.1))))
    }

    fn check(&self, f: &GridFunction2, m: usize) -> Result<()> {
        if m > self.m_max {
            return Err(DiracError::WindowTooSmall {
                requested: m,
                available: self.m_max,
            });
        }
        if !Arc::ptr_eq(f.mesh(), &self.mesh) && **f.mesh() != *self.mesh {
            return Err(DiracError::MeshMismatch);
        }
        Ok(())
    }

    fn sum_over(&self, f: &GridFunction2, indices: std::ops::RangeInclusive<i64>) -> GridFunction2 {
        let terms: Vec<(C64, &GridFunction2)> = indices
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&n| {
                let e = self.entry(n);
                (f.inner_unchecked(&e.z), &e.y)
            })
            .collect();
        let mut acc = GridFunction2::zeros(self.mesh.clone());
        for (c, y) in terms {
            acc.add_scaled_in_place(c, y);
        }
        acc
    }

    /// S_m f = Σ_{n=−2m}^{2m+1} ⟨f, z_n⟩ y_n.
    pub fn partial_sum(&self, f: &GridFunction2, m: usize) -> Result<GridFunction2> {
        self.check(f, m)?;
        let m = m as i64;
        Ok(self.sum_over(f, -2 * m..=2 * m + 1))
    }

    /// ⟨f, z_{2k}⟩ y_{2k} + ⟨f, z_{2k+1}⟩ y_{2k+1}.
    pub fn pair_term(&self, f: &GridFunction2, k: i64) -> Result<GridFunction2> {
        self.check(f, k.unsigned_abs() as usize)?;
        Ok(self.sum_over(f, 2 * k..=2 * k + 1))
    }

    /// ‖f − S_m f‖₂.
    pub fn completeness_residual(&self, f: &GridFunction2, m: usize) -> Result<f64> {
        Ok(f.sub(&self.partial_sum(f, m)?)?.l2_norm())
    }
}

impl RootSystem {
    /// Image under the similarity y ↦ T(x) y with diagonal T, shifting eigenvalues
    /// by `shift`; partners map by T(x)^{−H} so biorthogonality is preserved.
    pub fn gauge_transformed(&self, shift: C64, t: impl Fn(f64) -> Mat2 + Sync) -> RootSystem {
        let nodes = self.mesh.nodes();
        let ts: Vec<Mat2> = nodes.par_iter().map(|&x| t(x)).collect();
        let map = |g: &GridFunction2, adjoint: bool| {
            let values = g
                .values()
                .iter()
                .zip(&ts)
                .map(|(v, m)| {
                    let (a, d) = (m.at(0, 0), m.at(1, 1));
                    if adjoint {
                        [v[0] / a.conj(), v[1] / d.conj()]
                    } else {
                        [v[0] * a, v[1] * d]
                    }
                })
                .collect();
            GridFunction2::new(self.mesh.clone(), values)
        };
        RootSystem {
            mesh: self.mesh.clone(),
            m_max: self.m_max,
            entries: self
                .entries
                .iter()
                .map(|e| RootFunction {
                    lambda: e.lambda + shift,
                    y: map(&e.y, false),
                    z: map(&e.z, true),
                    ..e.clone()
                })
                .collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }
}

pub fn partial_sum(system: &RootSystem, f: &GridFunction2, m: usize) -> Result<GridFunction2> {
    system.partial_sum(f, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumMethod {
    Biorthogonal,
    Contour,
}

/// S_m evaluated from the root system, or as −(1/2πi)∮_{Γ_m} R(λ) dλ.
#[derive(Debug, Clone, Copy)]
pub struct PartialSumOperator<'a> {
    pub system: &'a RootSystem,
    pub m: usize,
    pub method: SumMethod,
}

impl PartialSumOperator<'_> {
    pub fn apply(&self, op: &DiracOperator, gamma_m: &Contour, f: &GridFunction2) -> Result<GridFunction2> {
        match self.method {
            SumMethod::Biorthogonal => self.system.partial_sum(f, self.m),
            SumMethod::Contour => projector_contour(op, gamma_m, f, 256),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::MeshParams;
    use crate::potentials::PotentialMatrix;
    use crate::spectrum::{contour_family, localize, LocalizeOptions};

    fn params(panels: usize) -> MeshParams {
        MeshParams {
            panels,
            ..MeshParams::default()
        }
    }

    fn smooth(mesh: Arc<Mesh>) -> GridFunction2 {
        GridFunction2::from_closure(mesh, |x| [C64::new(x.sin(), 0.0), C64::new(x * (PI - x), 0.0)])
    }

    fn jordan_form() -> BoundaryMatrixPair {
        let r = |v: [f64; 4]| v.map(|x| C64::new(x, 0.0));
        BoundaryMatrixPair::from_rows([r([1.0, 0.0, 1.0, 1.0]), r([0.0, 1.0, 0.0, 1.0])]).unwrap()
    }

    fn constant_operator(panels: usize) -> DiracOperator {
        DiracOperator::with_params(
            PotentialMatrix::constant_offdiag(C64::new(0.3, 0.0)),
            BoundaryMatrixPair::dirichlet_analog(),
            params(panels),
        )
    }

    #[test]
    fn dirichlet_free_system_is_the_exponential_basis() {
        let mesh = Mesh::uniform(params(64));
        let sys = unperturbed_root_system(&BoundaryMatrixPair::dirichlet_analog(), 6, mesh.clone()).unwrap();
        let c = 1.0 / (2.0 * PI).sqrt();
        for n in -12..=13 {
            let e = sys.entry(n);
            assert!((e.lambda - C64::new(n as f64, 0.0)).norm() < 1e-12);
            let exact = GridFunction2::from_closure(mesh.clone(), |x| {
                [(I * n as f64 * x).exp() * c, (-I * n as f64 * x).exp() * c]
            });
            assert!(e.y.sub(&exact).unwrap().l2_norm() < 1e-12, "n = {n}");
            assert!(e.z.sub(&exact).unwrap().l2_norm() < 1e-12);
        }
        let (off, diag) = sys.biorthogonality_defect(6).unwrap();
        assert!(off < 1e-12 && diag < 1e-12);
        let y5 = sys.entry(5).y.clone();
        assert!(sys.partial_sum(&y5, 2).unwrap().sub(&y5).unwrap().l2_norm() < 1e-12);
        assert!(matches!(sys.partial_sum(&y5, 7), Err(DiracError::WindowTooSmall { .. })));
    }

    #[test]
    fn periodic_double_eigenvalues_have_two_eigenfunctions() {
        let mesh = Mesh::uniform(params(32));
        let sys = unperturbed_root_system(&BoundaryMatrixPair::periodic(), 3, mesh.clone()).unwrap();
        for k in -3..=3i64 {
            let (a, b) = (sys.entry(2 * k), sys.entry(2 * k + 1));
            assert_eq!(a.cluster, b.cluster);
            assert!((a.lambda - C64::new(2.0 * k as f64, 0.0)).norm() < 1e-12);
            assert_eq!((a.role, b.role), (ChainRole::Eigen, ChainRole::Eigen));
            let lam = 2.0 * k as f64;
            let c = 1.0 / PI.sqrt();
            let e1 = GridFunction2::from_closure(mesh.clone(), |x| [(I * lam * x).exp() * c, ZERO]);
            let e2 = GridFunction2::from_closure(mesh.clone(), |x| [ZERO, (-I * lam * x).exp() * c]);
            assert!(a.y.sub(&e1).unwrap().l2_norm() < 1e-12);
            assert!(b.y.sub(&e2).unwrap().l2_norm() < 1e-12);
        }
        let (off, diag) = sys.biorthogonality_defect(3).unwrap();
        assert!(off < 1e-12 && diag < 1e-12);
    }

    #[test]
    fn jordan_chain_of_the_free_operator() {
        let form = jordan_form();
        let op = DiracOperator::with_params(PotentialMatrix::zero(), form, params(64));
        let sys = unperturbed_root_system(&form, 3, op.mesh().clone()).unwrap();
        let mut chains = 0;
        for e in sys.entries() {
            let (y0, ypi) = e.y.endpoint_values();
            assert!(form.apply(&y0, &ypi).iter().all(|v| v.norm() < 1e-9));
            if e.role == ChainRole::Associated {
                chains += 1;
                let eigen = sys.entry(e.index - 1);
                assert!(op.shifted_residual_l2(e.lambda, &e.y, &eigen.y) < 1e-8);
            }
        }
        assert_eq!(chains, 7);
        let (off, diag) = sys.biorthogonality_defect(3).unwrap();
        assert!(off < 1e-9 && diag < 1e-12, "{off} {diag}");
        let f = smooth(op.mesh().clone());
        let direct = sys.pair_term(&f, 1).unwrap();
        let eigs = localize(&op, 4, &LocalizeOptions::default()).unwrap();
        let fam = contour_family(&eigs, &[], 0.25).unwrap();
        let circle = fam.circles.iter().find(|(k, _)| *k == 1).unwrap().1;
        let proj = projector_contour(&op, &circle, &f, 32).unwrap();
        assert!(direct.sub(&proj).unwrap().l2_norm() < 1e-8);
        let pert = perturbed_root_system(&op, &eigs, 3).unwrap();
        let roles = pert.entries().iter().filter(|e| e.role == ChainRole::Associated).count();
        assert_eq!(roles, 7, "{:?}", pert.diagnostics);
        let s_free = sys.partial_sum(&f, 3).unwrap();
        let s_pert = pert.partial_sum(&f, 3).unwrap();
        assert!(s_free.sub(&s_pert).unwrap().l2_norm() < 1e-6);
    }

    #[test]
    fn zero_potential_reproduces_the_free_system() {
        let form = BoundaryMatrixPair::dirichlet_analog();
        let op = DiracOperator::with_params(PotentialMatrix::zero(), form, params(64));
        let eigs = localize(&op, 6, &LocalizeOptions::default()).unwrap();
        let pert = perturbed_root_system(&op, &eigs, 5).unwrap();
        let free = unperturbed_root_system(&form, 5, op.mesh().clone()).unwrap();
        for (a, b) in pert.entries().iter().zip(free.entries()) {
            assert_eq!(a.index, b.index);
            assert!(a.y.sub(&b.y).unwrap().l2_norm() < 1e-8, "{}", a.index);
            assert!(a.z.sub(&b.z).unwrap().l2_norm() < 1e-8);
        }
    }

    #[test]
    fn constant_potential_system_is_biorthogonal() {
        let op = constant_operator(64);
        let eigs = localize(&op, 11, &LocalizeOptions::default()).unwrap();
        let sys = perturbed_root_system(&op, &eigs, 10).unwrap();
        let (off, diag) = sys.biorthogonality_defect(10).unwrap();
        assert!(off < 1e-6 && diag < 1e-12, "{off} {diag}");
        for e in sys.entries() {
            let (y0, ypi) = e.y.endpoint_values();
            let u = op.form().apply(&y0, &ypi);
            assert!(u[0].norm().max(u[1].norm()) < 1e-7, "{}", e.index);
        }
        // S_m telescopes into pair terms
        let f = smooth(op.mesh().clone());
        let s4 = sys.partial_sum(&f, 4).unwrap();
        let s3 = sys.partial_sum(&f, 3).unwrap();
        let blocks = sys.pair_term(&f, 4).unwrap().axpy(ONE, &sys.pair_term(&f, -4).unwrap()).unwrap();
        assert!(s4.sub(&s3).unwrap().sub(&blocks).unwrap().l2_norm() < 1e-13);
        // an input annihilated by every z_n in the window
        let g = f.sub(&s4).unwrap();
        assert!(sys.partial_sum(&g, 4).unwrap().l2_norm() < 1e-8);
    }

    #[test]
    fn projectors_of_the_constant_potential() {
        let op = constant_operator(64);
        let eigs = localize(&op, 6, &LocalizeOptions::default()).unwrap();
        let sys = perturbed_root_system(&op, &eigs, 5).unwrap();
        let fam = contour_family(&eigs, &[], 0.25).unwrap();
        let circle = |k: i64| fam.circles.iter().find(|(j, _)| *j == k).unwrap().1;
        let f = smooth(op.mesh().clone());
        let p3 = projector_contour(&op, &circle(3), &f, 32).unwrap();
        let p3p3 = projector_contour(&op, &circle(3), &p3, 32).unwrap();
        assert!(p3p3.sub(&p3).unwrap().l2_norm() < 1e-6);
        let direct = sys.pair_term(&f, 3).unwrap();
        assert!(p3.sub(&direct).unwrap().l2_norm() < 1e-6);
        let p2p3 = projector_contour(&op, &circle(2), &p3, 32).unwrap();
        assert!(p2p3.l2_norm() < 1e-6);
    }

    #[test]
    fn contour_partial_sum_matches_biorthogonal_sum() {
        let op = constant_operator(64);
        let eigs = localize(&op, 6, &LocalizeOptions::default()).unwrap();
        let sys = perturbed_root_system(&op, &eigs, 5).unwrap();
        let fam = contour_family(&eigs, &[4], 0.25).unwrap();
        let f = smooth(op.mesh().clone());
        let gamma = fam.rectangles[0].1;
        let by_sum = PartialSumOperator {
            system: &sys,
            m: 4,
            method: SumMethod::Biorthogonal,
        };
        let by_contour = PartialSumOperator {
            method: SumMethod::Contour,
            ..by_sum
        };
        let a = by_sum.apply(&op, &gamma, &f).unwrap();
        let b = by_contour.apply(&op, &gamma, &f).unwrap();
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-6);
    }

    #[test]
    fn completeness_residual_decreases() {
        let op = constant_operator(128);
        let eigs = localize(&op, 17, &LocalizeOptions::default()).unwrap();
        let sys = perturbed_root_system(&op, &eigs, 16).unwrap();
        let f = smooth(op.mesh().clone());
        let r: Vec<f64> = [4, 8, 16].iter().map(|&m| sys.completeness_residual(&f, m).unwrap()).collect();
        assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
    }
}
