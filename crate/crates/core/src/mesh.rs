//! Composite quadrature meshes on [0, π] with geometric grading toward singular points.

use std::f64::consts::PI;
use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::functions::ScalarFunction;
use crate::mat2::{Vec2, C64, ZERO};
use crate::quadrature::{tanh_sinh, GaussLegendre, TanhSinhNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MeshParams {
    /// Uniform base panels before grading.
    pub panels: usize,
    /// Gauss–Legendre points per regular panel.
    pub order: usize,
    /// Number of geometric refinement levels toward each singular point.
    pub grading_depth: usize,
    pub grading_ratio: f64,
    /// Close each singular point with a double-exponential panel.
    pub endcap: bool,
    pub tanh_sinh_step: f64,
}

impl Default for MeshParams {
    fn default() -> Self {
        MeshParams {
            panels: 512,
            order: 10,
            grading_depth: 20,
            grading_ratio: 0.5,
            endcap: true,
            tanh_sinh_step: 0.125,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelRule {
    Gauss,
    TanhSinh,
}

#[derive(Debug, Clone)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub rule: PanelRule,
    pub nodes: Range<usize>,
    /// Inside the graded zone of a singular point: the potential is replaced by
    /// its panel average when propagating solutions.
    pub singular: bool,
}

impl Panel {
    pub fn len(&self) -> f64 {
        self.b - self.a
    }

    pub fn is_empty(&self) -> bool {
        self.b <= self.a
    }
}

#[derive(Debug)]
pub struct Mesh {
    params: MeshParams,
    panels: Vec<Panel>,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    gl: GaussLegendre,
    ts: Vec<TanhSinhNode>,
    singular_points: Vec<f64>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.weights == other.weights
    }
}

/// Collects feature points from functions and builds a shared mesh.
#[derive(Debug, Clone, Default)]
pub struct MeshBuilder {
    params: MeshParams,
    singular: Vec<f64>,
    breaks: Vec<f64>,
}

impl MeshBuilder {
    pub fn new(params: MeshParams) -> Self {
        MeshBuilder {
            params,
            ..Default::default()
        }
    }

    pub fn with_function(mut self, f: &ScalarFunction) -> Self {
        self.singular
            .extend(f.singularities().into_iter().map(|s| s.point));
        self.breaks.extend(f.breakpoints());
        self
    }

    pub fn with_functions<'a>(mut self, fs: impl IntoIterator<Item = &'a ScalarFunction>) -> Self {
        for f in fs {
            self = self.with_function(f);
        }
        self
    }

    pub fn with_singular_point(mut self, x: f64) -> Self {
        self.singular.push(x);
        self
    }

    pub fn with_breakpoint(mut self, x: f64) -> Self {
        self.breaks.push(x);
        self
    }

    pub fn build(self) -> Arc<Mesh> {
        Arc::new(Mesh::build(self.params, self.singular, self.breaks))
    }
}

fn dedup_sorted(v: &mut Vec<f64>, tol: f64) {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite mesh points"));
    v.dedup_by(|b, a| (*b - *a).abs() <= tol);
}

impl Mesh {
    pub fn uniform(params: MeshParams) -> Arc<Mesh> {
        MeshBuilder::new(params).build()
    }

    fn build(params: MeshParams, mut singular: Vec<f64>, breaks: Vec<f64>) -> Mesh {
        assert!(params.panels >= 1 && params.order >= 1);
        let tol = 1e-13;
        singular.retain(|x| (0.0..=PI).contains(x));
        dedup_sorted(&mut singular, tol);

        let h = PI / params.panels as f64;
        let mut points: Vec<f64> = (0..=params.panels).map(|k| k as f64 * h).collect();
        points[params.panels] = PI;
        points.extend(breaks.iter().copied().filter(|x| *x > 0.0 && *x < PI));
        let mut graded_extent = Vec::new();
        for &x0 in &singular {
            points.push(x0);
            let mut d = h;
            for _ in 0..params.grading_depth {
                d *= params.grading_ratio;
                for p in [x0 - d, x0 + d] {
                    if p > 0.0 && p < PI {
                        points.push(p);
                    }
                }
            }
            graded_extent.push((x0, h));
        }
        dedup_sorted(&mut points, tol);
        // Singular points must remain exact panel boundaries.
        for &x0 in &singular {
            if let Some(p) = points.iter_mut().find(|p| (**p - x0).abs() <= tol) {
                *p = x0;
            }
        }
        points[0] = 0.0;
        *points.last_mut().expect("non-empty") = PI;

        let gl = GaussLegendre::new(params.order);
        let ts = tanh_sinh(params.tanh_sinh_step);
        let mut panels = Vec::with_capacity(points.len());
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for w in points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let touches = |x0: &f64| *x0 == a || *x0 == b;
            let adjacent = singular.iter().any(touches);
            let in_zone = graded_extent
                .iter()
                .any(|(x0, ext)| a >= x0 - ext - tol && b <= x0 + ext + tol);
            let rule = if adjacent && params.endcap {
                PanelRule::TanhSinh
            } else {
                PanelRule::Gauss
            };
            let start = nodes.len();
            let half = 0.5 * (b - a);
            match rule {
                PanelRule::Gauss => {
                    for (s, wt) in gl.nodes.iter().zip(&gl.weights) {
                        nodes.push(a + half * (s + 1.0));
                        weights.push(half * wt);
                    }
                }
                PanelRule::TanhSinh => {
                    let left_singular = singular.contains(&a);
                    for n in &ts {
                        let x = if left_singular {
                            a + half * n.from_left
                        } else {
                            b - half * n.from_right
                        };
                        if x > a && x < b && nodes.last().is_none_or(|&last| x > last) {
                            nodes.push(x);
                            weights.push(half * n.weight);
                        }
                    }
                }
            }
            panels.push(Panel {
                a,
                b,
                rule,
                nodes: start..nodes.len(),
                singular: adjacent || in_zone,
            });
        }

        Mesh {
            params,
            panels,
            nodes,
            weights,
            gl,
            ts,
            singular_points: singular,
        }
    }

    pub fn params(&self) -> &MeshParams {
        &self.params
    }

    pub fn panels(&self) -> &[Panel] {
        &self.panels
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn gauss(&self) -> &GaussLegendre {
        &self.gl
    }

    pub fn singular_points(&self) -> &[f64] {
        &self.singular_points
    }

    /// Index of the panel containing `x` (the last panel owns π).
    pub fn locate(&self, x: f64) -> usize {
        let p = self.panels.partition_point(|panel| panel.b <= x);
        p.min(self.panels.len() - 1)
    }

    pub fn sample(&self, f: &ScalarFunction) -> Vec<C64> {
        self.nodes.iter().map(|&x| f.eval(x)).collect()
    }

    pub fn integrate(&self, values: &[C64]) -> C64 {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * *w)
            .sum()
    }

    pub fn integrate_fn(&self, f: &ScalarFunction) -> C64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| f.eval(x) * w)
            .sum()
    }

    /// ∫ₐᵇ f over a subinterval of one panel, by the reference rule mapped onto [a, b].
    pub fn integrate_over(&self, f: &ScalarFunction, a: f64, b: f64, singular: bool) -> C64 {
        if b <= a {
            return ZERO;
        }
        let half = 0.5 * (b - a);
        if singular {
            let left_singular = self.singular_points.contains(&a);
            self.ts
                .iter()
                .filter_map(|n| {
                    let x = if left_singular {
                        a + half * n.from_left
                    } else {
                        b - half * n.from_right
                    };
                    (x > a && x < b).then(|| f.eval(x) * (half * n.weight))
                })
                .sum()
        } else {
            self.gl
                .nodes
                .iter()
                .zip(&self.gl.weights)
                .map(|(s, w)| f.eval(a + half * (s + 1.0)) * (half * w))
                .sum()
        }
    }

    /// Running integrals ∫₀^{x_j} v at every node, followed by the total over [0, π].
    ///
    /// Gauss panels use the spectral integration matrix; double-exponential panels
    /// accumulate weights, counting the current node with half weight.
    pub fn cumulative(&self, values: &[Vec2]) -> Vec<Vec2> {
        assert_eq!(values.len(), self.len());
        let mut out = Vec::with_capacity(values.len() + 1);
        let mut base = [ZERO, ZERO];
        for panel in &self.panels {
            let v = &values[panel.nodes.clone()];
            let w = &self.weights[panel.nodes.clone()];
            let mut total = [ZERO, ZERO];
            for (vj, wj) in v.iter().zip(w) {
                total[0] += vj[0] * *wj;
                total[1] += vj[1] * *wj;
            }
            match panel.rule {
                PanelRule::Gauss => {
                    let half = 0.5 * panel.len();
                    for row in self.gl.integration.iter() {
                        let mut acc = base;
                        for (s, vj) in row.iter().zip(v) {
                            acc[0] += vj[0] * (half * s);
                            acc[1] += vj[1] * (half * s);
                        }
                        out.push(acc);
                    }
                }
                PanelRule::TanhSinh => {
                    let mut run = base;
                    for (vj, wj) in v.iter().zip(w) {
                        out.push([run[0] + vj[0] * (0.5 * wj), run[1] + vj[1] * (0.5 * wj)]);
                        run[0] += vj[0] * *wj;
                        run[1] += vj[1] * *wj;
                    }
                }
            }
            base[0] += total[0];
            base[1] += total[1];
        }
        out.push(base);
        out
    }

    /// Running integrals ∫_{x_j}^π v at every node, accumulated from the right so
    /// that mass concentrated near π does not cancel.
    pub fn cumulative_right(&self, values: &[Vec2]) -> Vec<Vec2> {
        assert_eq!(values.len(), self.len());
        let mut out = vec![[ZERO, ZERO]; values.len()];
        let mut base = [ZERO, ZERO];
        for panel in self.panels.iter().rev() {
            let v = &values[panel.nodes.clone()];
            let w = &self.weights[panel.nodes.clone()];
            let o = &mut out[panel.nodes.clone()];
            let mut total = [ZERO, ZERO];
            for (vj, wj) in v.iter().zip(w) {
                total[0] += vj[0] * *wj;
                total[1] += vj[1] * *wj;
            }
            match panel.rule {
                PanelRule::Gauss => {
                    let half = 0.5 * panel.len();
                    let n = v.len();
                    for (q, oq) in o.iter_mut().enumerate() {
                        // ∫_{x_q}^b = ∫_{-1}^{1} − ∫_{-1}^{s_q}, using the mirrored row.
                        let row = &self.gl.integration[n - 1 - q];
                        let mut acc = base;
                        for (j, s) in row.iter().enumerate() {
                            let vj = v[n - 1 - j];
                            acc[0] += vj[0] * (half * s);
                            acc[1] += vj[1] * (half * s);
                        }
                        *oq = acc;
                    }
                }
                PanelRule::TanhSinh => {
                    let mut run = base;
                    for ((vj, wj), oq) in v.iter().zip(w).zip(o.iter_mut()).rev() {
                        *oq = [run[0] + vj[0] * (0.5 * wj), run[1] + vj[1] * (0.5 * wj)];
                        run[0] += vj[0] * *wj;
                        run[1] += vj[1] * *wj;
                    }
                }
            }
            base[0] += total[0];
            base[1] += total[1];
        }
        out
    }

    /// Midpoints between consecutive nodes, used for sup-norm proxies.
    pub fn midpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.windows(2).map(|w| 0.5 * (w[0] + w[1]))
    }
}
