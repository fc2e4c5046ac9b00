//! Scalar functions on [0, π] with singularity metadata.

use std::sync::Arc;

use crate::error::{DiracError, Result};
use crate::mat2::{C64, I, ONE, ZERO};
use crate::mesh::Mesh;

/// A declared power singularity |x − point|^{−exponent}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Singularity {
    pub point: f64,
    pub exponent: f64,
}

/// Membership class in the L_κ scale: the function lies in L_κ for every κ with
/// `exponent · κ < 1` (all κ ≤ ∞ when the function is bounded).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaClass {
    pub max_exponent: f64,
}

impl KappaClass {
    pub const BOUNDED: KappaClass = KappaClass { max_exponent: 0.0 };

    pub fn admits(&self, kappa: f64) -> bool {
        if self.max_exponent <= 0.0 {
            return true;
        }
        kappa.is_finite() && self.max_exponent * kappa < 1.0
    }

    /// Supremum of admissible κ (not itself admissible unless infinite).
    pub fn sup(&self) -> f64 {
        if self.max_exponent <= 0.0 {
            f64::INFINITY
        } else {
            1.0 / self.max_exponent
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.max_exponent <= 0.0
    }

    pub fn min(self, other: KappaClass) -> KappaClass {
        KappaClass {
            max_exponent: self.max_exponent.max(other.max_exponent),
        }
    }
}

/// Cumulative integral x ↦ ∫₀ˣ g(t) dt tabulated at panel starts of a mesh.
#[derive(Debug)]
pub struct Antiderivative {
    integrand: ScalarFunction,
    mesh: Arc<Mesh>,
    at_panel_start: Vec<C64>,
}

impl Antiderivative {
    pub fn new(integrand: ScalarFunction, mesh: Arc<Mesh>) -> Self {
        let mut at_panel_start = Vec::with_capacity(mesh.panels().len() + 1);
        let mut acc = ZERO;
        for panel in mesh.panels() {
            at_panel_start.push(acc);
            acc += panel
                .nodes
                .clone()
                .map(|k| integrand.eval(mesh.nodes()[k]) * mesh.weights()[k])
                .sum::<C64>();
        }
        at_panel_start.push(acc);
        Antiderivative {
            integrand,
            mesh,
            at_panel_start,
        }
    }

    pub fn total(&self) -> C64 {
        *self.at_panel_start.last().expect("non-empty mesh")
    }

    pub fn eval(&self, x: f64) -> C64 {
        let x = x.clamp(0.0, std::f64::consts::PI);
        let p = self.mesh.locate(x);
        let panel = &self.mesh.panels()[p];
        self.at_panel_start[p] + self.mesh.integrate_over(&self.integrand, panel.a, x, panel.singular)
    }
}

#[derive(Debug, Clone)]
pub enum ScalarFunction {
    Zero,
    Constant(C64),
    /// Σ c_k x^k.
    Polynomial(Vec<C64>),
    /// Σ_k a_k cos(kx) + b_k sin(kx), k = 0, 1, ...
    Trig { cos: Vec<C64>, sin: Vec<C64> },
    /// amplitude · |x − center|^{−alpha}.
    Power { amplitude: C64, center: f64, alpha: f64 },
    /// Piecewise constant: `values[j]` on the j-th interval cut by the sorted `breaks`.
    Step { breaks: Vec<f64>, values: Vec<C64> },
    Sum(Vec<ScalarFunction>),
    Product(Box<ScalarFunction>, Box<ScalarFunction>),
    Scaled(C64, Box<ScalarFunction>),
    /// e^{i g(x)}.
    ExpI(Box<ScalarFunction>),
    Conj(Box<ScalarFunction>),
    Antiderivative(Arc<Antiderivative>),
}

impl ScalarFunction {
    pub fn constant(c: C64) -> Self {
        ScalarFunction::Constant(c)
    }

    pub fn real(c: f64) -> Self {
        ScalarFunction::Constant(C64::new(c, 0.0))
    }

    /// The identity x ↦ x.
    pub fn x() -> Self {
        ScalarFunction::Polynomial(vec![ZERO, ONE])
    }

    pub fn sin(k: usize) -> Self {
        let mut sin = vec![ZERO; k + 1];
        sin[k] = ONE;
        ScalarFunction::Trig { cos: vec![], sin }
    }

    pub fn cos(k: usize) -> Self {
        let mut cos = vec![ZERO; k + 1];
        cos[k] = ONE;
        ScalarFunction::Trig { cos, sin: vec![] }
    }

    pub fn power(amplitude: C64, center: f64, alpha: f64) -> Result<Self> {
        if !(alpha < 1.0) {
            return Err(DiracError::NotIntegrable { alpha });
        }
        if !(0.0..=std::f64::consts::PI).contains(&center) {
            return Err(DiracError::Config(format!(
                "singular point {center} outside [0, pi]"
            )));
        }
        Ok(ScalarFunction::Power {
            amplitude,
            center,
            alpha,
        })
    }

    /// `height` on [a, b], zero elsewhere.
    pub fn indicator(a: f64, b: f64, height: C64) -> Self {
        ScalarFunction::Step {
            breaks: vec![a, b],
            values: vec![ZERO, height, ZERO],
        }
    }

    pub fn times(self, other: ScalarFunction) -> Self {
        ScalarFunction::Product(Box::new(self), Box::new(other))
    }

    pub fn scaled(self, s: C64) -> Self {
        ScalarFunction::Scaled(s, Box::new(self))
    }

    pub fn exp_i(self) -> Self {
        ScalarFunction::ExpI(Box::new(self))
    }

    pub fn conj(self) -> Self {
        match self {
            ScalarFunction::Zero => ScalarFunction::Zero,
            ScalarFunction::Constant(c) => ScalarFunction::Constant(c.conj()),
            other => ScalarFunction::Conj(Box::new(other)),
        }
    }

    pub fn plus(self, other: ScalarFunction) -> Self {
        match (self, other) {
            (ScalarFunction::Zero, b) => b,
            (a, ScalarFunction::Zero) => a,
            (ScalarFunction::Sum(mut v), b) => {
                v.push(b);
                ScalarFunction::Sum(v)
            }
            (a, b) => ScalarFunction::Sum(vec![a, b]),
        }
    }

    pub fn antiderivative(self, mesh: Arc<Mesh>) -> Self {
        ScalarFunction::Antiderivative(Arc::new(Antiderivative::new(self, mesh)))
    }

    /// Structural zero test; numerical zeros are not detected.
    pub fn is_zero(&self) -> bool {
        match self {
            ScalarFunction::Zero => true,
            ScalarFunction::Constant(c) => *c == ZERO,
            ScalarFunction::Polynomial(c) => c.iter().all(|z| *z == ZERO),
            ScalarFunction::Trig { cos, sin } => cos.iter().chain(sin).all(|z| *z == ZERO),
            ScalarFunction::Power { amplitude, .. } => *amplitude == ZERO,
            ScalarFunction::Step { values, .. } => values.iter().all(|z| *z == ZERO),
            ScalarFunction::Sum(v) => v.iter().all(|f| f.is_zero()),
            ScalarFunction::Product(a, b) => a.is_zero() || b.is_zero(),
            ScalarFunction::Scaled(s, f) => *s == ZERO || f.is_zero(),
            ScalarFunction::ExpI(_) => false,
            ScalarFunction::Conj(f) => f.is_zero(),
            ScalarFunction::Antiderivative(a) => a.integrand.is_zero(),
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        match self {
            ScalarFunction::Zero => ZERO,
            ScalarFunction::Constant(c) => *c,
            ScalarFunction::Polynomial(c) => c.iter().rev().fold(ZERO, |acc, &ck| acc * x + ck),
            ScalarFunction::Trig { cos, sin } => {
                let mut acc = ZERO;
                for (k, a) in cos.iter().enumerate() {
                    if *a != ZERO {
                        acc += a * (k as f64 * x).cos();
                    }
                }
                for (k, b) in sin.iter().enumerate() {
                    if *b != ZERO {
                        acc += b * (k as f64 * x).sin();
                    }
                }
                acc
            }
            ScalarFunction::Power {
                amplitude,
                center,
                alpha,
            } => amplitude * (x - center).abs().powf(-alpha),
            ScalarFunction::Step { breaks, values } => {
                let j = breaks.partition_point(|&b| b <= x);
                values[j]
            }
            ScalarFunction::Sum(v) => v.iter().map(|f| f.eval(x)).sum(),
            ScalarFunction::Product(a, b) => a.eval(x) * b.eval(x),
            ScalarFunction::Scaled(s, f) => s * f.eval(x),
            ScalarFunction::ExpI(g) => (I * g.eval(x)).exp(),
            ScalarFunction::Conj(f) => f.eval(x).conj(),
            ScalarFunction::Antiderivative(a) => a.eval(x),
        }
    }

    /// Declared power singularities, merged per point (products add exponents).
    pub fn singularities(&self) -> Vec<Singularity> {
        fn merge_max(into: &mut Vec<Singularity>, s: Singularity) {
            match into.iter_mut().find(|t| t.point == s.point) {
                Some(t) => t.exponent = t.exponent.max(s.exponent),
                None => into.push(s),
            }
        }
        match self {
            ScalarFunction::Power {
                amplitude,
                center,
                alpha,
            } if *amplitude != ZERO && *alpha > 0.0 => vec![Singularity {
                point: *center,
                exponent: *alpha,
            }],
            ScalarFunction::Sum(v) => {
                let mut out = Vec::new();
                for s in v.iter().flat_map(|f| f.singularities()) {
                    merge_max(&mut out, s);
                }
                out
            }
            ScalarFunction::Product(a, b) => {
                let mut out = a.singularities();
                for s in b.singularities() {
                    match out.iter_mut().find(|t| t.point == s.point) {
                        Some(t) => t.exponent += s.exponent,
                        None => out.push(s),
                    }
                }
                out
            }
            ScalarFunction::Scaled(_, f) | ScalarFunction::Conj(f) => f.singularities(),
            _ => Vec::new(),
        }
    }

    /// Points of discontinuity that the mesh should respect as panel boundaries.
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ScalarFunction::Step { breaks, .. } => breaks.clone(),
            ScalarFunction::Sum(v) => v.iter().flat_map(|f| f.breakpoints()).collect(),
            ScalarFunction::Product(a, b) => {
                let mut out = a.breakpoints();
                out.extend(b.breakpoints());
                out
            }
            ScalarFunction::Scaled(_, f) | ScalarFunction::Conj(f) | ScalarFunction::ExpI(f) => {
                f.breakpoints()
            }
            _ => Vec::new(),
        }
    }

    pub fn kappa_class(&self) -> KappaClass {
        let max_exponent = self
            .singularities()
            .iter()
            .map(|s| s.exponent)
            .fold(0.0, f64::max);
        KappaClass { max_exponent }
    }
}
