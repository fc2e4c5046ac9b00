//! 2×2 potentials P(x), their L_κ classes, the gauge reduction that removes the
//! diagonal part, and the diagonal comparison operator.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryMatrixPair;
use crate::error::{DiracError, Result};
use crate::functions::{KappaClass, ScalarFunction};
use crate::mat2::{Mat2, C64, I};
use crate::mesh::Mesh;

#[derive(Debug, Clone)]
pub struct PotentialMatrix {
    entries: [ScalarFunction; 4],
}

impl PotentialMatrix {
    pub fn new(p1: ScalarFunction, p2: ScalarFunction, p3: ScalarFunction, p4: ScalarFunction) -> Self {
        PotentialMatrix {
            entries: [p1, p2, p3, p4],
        }
    }

    pub fn zero() -> Self {
        Self::new(
            ScalarFunction::Zero,
            ScalarFunction::Zero,
            ScalarFunction::Zero,
            ScalarFunction::Zero,
        )
    }

    pub fn off_diagonal(p2: ScalarFunction, p3: ScalarFunction) -> Self {
        Self::new(ScalarFunction::Zero, p2, p3, ScalarFunction::Zero)
    }

    pub fn diagonal(p1: ScalarFunction, p4: ScalarFunction) -> Self {
        Self::new(p1, ScalarFunction::Zero, ScalarFunction::Zero, p4)
    }

    pub fn constant_offdiag(c: C64) -> Self {
        Self::off_diagonal(ScalarFunction::Constant(c), ScalarFunction::Constant(c))
    }

    pub fn p1(&self) -> &ScalarFunction {
        &self.entries[0]
    }
    pub fn p2(&self) -> &ScalarFunction {
        &self.entries[1]
    }
    pub fn p3(&self) -> &ScalarFunction {
        &self.entries[2]
    }
    pub fn p4(&self) -> &ScalarFunction {
        &self.entries[3]
    }

    pub fn entries(&self) -> &[ScalarFunction; 4] {
        &self.entries
    }

    pub fn entry_mut(&mut self, e: Entry) -> &mut ScalarFunction {
        &mut self.entries[e as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|p| p.is_zero())
    }

    /// p1 ≡ 0 and p4 ≡ 0.
    pub fn is_off_diagonal(&self) -> bool {
        self.entries[0].is_zero() && self.entries[3].is_zero()
    }

    pub fn kappa_class(&self) -> KappaClass {
        self.entries
            .iter()
            .map(|p| p.kappa_class())
            .fold(KappaClass::BOUNDED, KappaClass::min)
    }

    pub fn eval(&self, x: f64) -> Mat2 {
        Mat2::new(
            self.entries[0].eval(x),
            self.entries[1].eval(x),
            self.entries[2].eval(x),
            self.entries[3].eval(x),
        )
    }

    /// Pointwise conjugate transpose P(x)ᴴ, the potential of the formal adjoint.
    pub fn adjoint(&self) -> Self {
        let [p1, p2, p3, p4] = self.entries.clone();
        Self::new(p1.conj(), p3.conj(), p2.conj(), p4.conj())
    }

    pub fn plus(&self, other: &PotentialMatrix) -> Self {
        let e = |k: usize| self.entries[k].clone().plus(other.entries[k].clone());
        Self::new(e(0), e(1), e(2), e(3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entry {
    P1 = 0,
    P2 = 1,
    P3 = 2,
    P4 = 3,
}

pub(crate) fn cx(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

/// Test-family description of a potential, as read from configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    ConstantOffdiag {
        c: [f64; 2],
    },
    /// Σ a_k cos(kx) + b_k sin(kx) in one entry.
    Trig {
        entry: Entry,
        #[serde(default)]
        cos: Vec<[f64; 2]>,
        #[serde(default)]
        sin: Vec<[f64; 2]>,
    },
    /// amplitude · |x − center|^{−alpha} in one entry.
    Power {
        entry: Entry,
        amplitude: [f64; 2],
        center: f64,
        alpha: f64,
    },
    Step {
        entry: Entry,
        breaks: Vec<f64>,
        values: Vec<[f64; 2]>,
    },
    Sum {
        terms: Vec<PotentialSpec>,
    },
}

pub fn make_potential(spec: &PotentialSpec) -> Result<PotentialMatrix> {
    let single = |entry: Entry, f: ScalarFunction| {
        let mut p = PotentialMatrix::zero();
        *p.entry_mut(entry) = f;
        p
    };
    Ok(match spec {
        PotentialSpec::Zero => PotentialMatrix::zero(),
        PotentialSpec::ConstantOffdiag { c } => PotentialMatrix::constant_offdiag(cx(*c)),
        PotentialSpec::Trig { entry, cos, sin } => single(
            *entry,
            ScalarFunction::Trig {
                cos: cos.iter().copied().map(cx).collect(),
                sin: sin.iter().copied().map(cx).collect(),
            },
        ),
        PotentialSpec::Power {
            entry,
            amplitude,
            center,
            alpha,
        } => single(*entry, ScalarFunction::power(cx(*amplitude), *center, *alpha)?),
        PotentialSpec::Step {
            entry,
            breaks,
            values,
        } => {
            if values.len() != breaks.len() + 1 || breaks.windows(2).any(|w| w[0] >= w[1]) {
                return Err(DiracError::Config(
                    "step potential needs sorted breaks and one more value than breaks".into(),
                ));
            }
            single(
                *entry,
                ScalarFunction::Step {
                    breaks: breaks.clone(),
                    values: values.iter().copied().map(cx).collect(),
                },
            )
        }
        PotentialSpec::Sum { terms } => {
            let mut p = PotentialMatrix::zero();
            for t in terms {
                p = p.plus(&make_potential(t)?);
            }
            p
        }
    })
}

/// Similarity data turning L_{P,U} into L_{P̃,Ũ} + γI with off-diagonal P̃.
#[derive(Debug, Clone)]
pub struct GaugeReduction {
    pub gamma: C64,
    /// φ(x) = γx − ∫₀ˣ p₁.
    pub phi: ScalarFunction,
    /// ψ(x) = ∫₀ˣ p₄ − γx.
    pub psi: ScalarFunction,
    pub reduced: PotentialMatrix,
    pub reduced_form: BoundaryMatrixPair,
}

impl GaugeReduction {
    /// Multiplier diag(e^{iφ(x)}, e^{iψ(x)}) mapping solutions of the reduced problem
    /// back to solutions of the original one.
    pub fn transform_at(&self, x: f64) -> Mat2 {
        Mat2::diag((I * self.phi.eval(x)).exp(), (I * self.psi.eval(x)).exp())
    }
}

/// e^{(i/2)∫₀^π (p₄ − p₁)}, the factor multiplying D after removing the diagonal.
pub fn boundary_twist(p: &PotentialMatrix, mesh: &Mesh) -> C64 {
    let diff = mesh.integrate_fn(p.p4()) - mesh.integrate_fn(p.p1());
    (I * 0.5 * diff).exp()
}

pub fn gauge_reduce(p: &PotentialMatrix, u: &BoundaryMatrixPair, mesh: &Arc<Mesh>) -> GaugeReduction {
    let int_p1 = mesh.integrate_fn(p.p1());
    let int_p4 = mesh.integrate_fn(p.p4());
    let gamma = (int_p1 + int_p4) / (2.0 * PI);
    let linear = ScalarFunction::x().scaled(gamma);
    let a1 = p.p1().clone().antiderivative(mesh.clone());
    let a4 = p.p4().clone().antiderivative(mesh.clone());
    let phi = linear.clone().plus(a1.scaled(C64::new(-1.0, 0.0)));
    let psi = a4.plus(linear.scaled(C64::new(-1.0, 0.0)));

    // With y = diag(e^{iφ}, e^{iψ}) z the off-diagonal entries pick up e^{±i(ψ−φ)}.
    let psi_minus_phi = psi.clone().plus(phi.clone().scaled(C64::new(-1.0, 0.0)));
    let p2 = if p.p2().is_zero() {
        ScalarFunction::Zero
    } else {
        p.p2().clone().times(psi_minus_phi.clone().exp_i())
    };
    let p3 = if p.p3().is_zero() {
        ScalarFunction::Zero
    } else {
        p.p3()
            .clone()
            .times(psi_minus_phi.scaled(C64::new(-1.0, 0.0)).exp_i())
    };
    let twist = (I * 0.5 * (int_p4 - int_p1)).exp();
    GaugeReduction {
        gamma,
        phi,
        psi,
        reduced: PotentialMatrix::off_diagonal(p2, p3),
        reduced_form: u.with_scaled_d(twist),
    }
}

/// Diagonal comparison operator P₀ = diag(p₁, p₄) for potentials of general form.
///
/// The boundary form returned is U itself: the gauge transformation carries
/// L_{P₀,U} onto L_{0,Ũ} + γI, the free operator that the reduced problem is
/// compared against.
pub fn comparison_operator(p: &PotentialMatrix, u: &BoundaryMatrixPair) -> (PotentialMatrix, BoundaryMatrixPair) {
    (
        PotentialMatrix::diagonal(p.p1().clone(), p.p4().clone()),
        *u,
    )
}

impl Default for PotentialMatrix {
    fn default() -> Self {
        Self::zero()
    }
}
