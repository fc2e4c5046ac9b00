//! JSON experiment configuration. Complex scalars are written as `[re, im]`.

use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::boundary::BoundaryMatrixPair;
use crate::error::{DiracError, Result};
use crate::functions::ScalarFunction;
use crate::mat2::{Mat2, C64};
use crate::mesh::MeshParams;
use crate::potentials::{cx, PotentialSpec};
use crate::spectrum::LocalizeOptions;

/// A Lebesgue exponent in [1, ∞]; written as a number or the string "inf".
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Exponent(pub f64);

impl Exponent {
    pub const INF: Exponent = Exponent(f64::INFINITY);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_infinite() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(x) => Ok(Exponent(x)),
            Raw::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => Ok(Exponent::INF),
                other => other
                    .parse::<f64>()
                    .map(Exponent)
                    .map_err(|_| serde::de::Error::custom(format!("not an exponent: {t}"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    /// "dirichlet_analog", "periodic" or "antiperiodic".
    Preset(String),
    Matrices {
        c: [[[f64; 2]; 2]; 2],
        d: [[[f64; 2]; 2]; 2],
    },
}

impl BoundarySpec {
    pub fn build(&self) -> Result<BoundaryMatrixPair> {
        match self {
            BoundarySpec::Preset(name) => BoundaryMatrixPair::preset(name),
            BoundarySpec::Matrices { c, d } => {
                let m = |a: &[[[f64; 2]; 2]; 2]| Mat2::new(cx(a[0][0]), cx(a[0][1]), cx(a[1][0]), cx(a[1][1]));
                BoundaryMatrixPair::new(m(c), m(d))
            }
        }
    }
}

/// One component of a test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarSpec {
    Zero,
    Constant {
        value: [f64; 2],
    },
    /// Σ c_k x^k.
    Polynomial {
        coeffs: Vec<[f64; 2]>,
    },
    /// Σ a_k cos(kx) + b_k sin(kx).
    Trig {
        #[serde(default)]
        cos: Vec<[f64; 2]>,
        #[serde(default)]
        sin: Vec<[f64; 2]>,
    },
    Power {
        amplitude: [f64; 2],
        center: f64,
        alpha: f64,
    },
    Indicator {
        a: f64,
        b: f64,
        #[serde(default = "unit")]
        height: [f64; 2],
    },
    Sum {
        terms: Vec<ScalarSpec>,
    },
}

fn unit() -> [f64; 2] {
    [1.0, 0.0]
}

impl ScalarSpec {
    pub fn build(&self) -> Result<ScalarFunction> {
        Ok(match self {
            ScalarSpec::Zero => ScalarFunction::Zero,
            ScalarSpec::Constant { value } => ScalarFunction::constant(cx(*value)),
            ScalarSpec::Polynomial { coeffs } => ScalarFunction::Polynomial(coeffs.iter().copied().map(cx).collect()),
            ScalarSpec::Trig { cos, sin } => ScalarFunction::Trig {
                cos: cos.iter().copied().map(cx).collect(),
                sin: sin.iter().copied().map(cx).collect(),
            },
            ScalarSpec::Power {
                amplitude,
                center,
                alpha,
            } => ScalarFunction::power(cx(*amplitude), *center, *alpha)?,
            ScalarSpec::Indicator { a, b, height } => {
                if !(0.0 <= *a && a < b && *b <= std::f64::consts::PI) {
                    return Err(DiracError::Config(format!("indicator support [{a}, {b}] is not inside [0, pi]")));
                }
                ScalarFunction::indicator(*a, *b, cx(*height))
            }
            ScalarSpec::Sum { terms } => {
                ScalarFunction::Sum(terms.iter().map(|t| t.build()).collect::<Result<Vec<_>>>()?)
            }
        })
    }
}

/// The expanded function f = (f₁, f₂).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FunctionSpec {
    Components {
        first: ScalarSpec,
        second: ScalarSpec,
    },
    /// Random trigonometric pair with coefficients ~ k^{−decay}, drawn from the config seed.
    RandomTrig {
        terms: usize,
        #[serde(default = "default_decay")]
        decay: f64,
    },
    /// |x − center|^{−(1/μ − eps)} in one component: barely in L_μ.
    PowerProfile {
        #[serde(default)]
        component: usize,
        #[serde(default)]
        center: f64,
        #[serde(default = "default_eps")]
        eps: f64,
    },
}

fn default_decay() -> f64 {
    2.0
}

fn default_eps() -> f64 {
    0.05
}

impl FunctionSpec {
    pub fn build(&self, mu: Exponent, seed: u64) -> Result<[ScalarFunction; 2]> {
        match self {
            FunctionSpec::Components { first, second } => Ok([first.build()?, second.build()?]),
            FunctionSpec::RandomTrig { terms, decay } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut draw = || {
                    let mut coef = |k: usize| {
                        let s = (k.max(1) as f64).powf(-decay);
                        C64::new(rng.random_range(-1.0..1.0) * s, rng.random_range(-1.0..1.0) * s)
                    };
                    let cos: Vec<C64> = (0..=*terms).map(&mut coef).collect();
                    let sin: Vec<C64> = (0..=*terms).map(&mut coef).collect();
                    ScalarFunction::Trig { cos, sin }
                };
                Ok([draw(), draw()])
            }
            FunctionSpec::PowerProfile { component, center, eps } => {
                if *component > 1 {
                    return Err(DiracError::Config(format!("component must be 0 or 1, got {component}")));
                }
                let alpha = (1.0 / mu.value() - eps).max(0.0);
                let f = ScalarFunction::power(C64::new(1.0, 0.0), *center, alpha)?;
                Ok(if *component == 0 {
                    [f, ScalarFunction::Zero]
                } else {
                    [ScalarFunction::Zero, f]
                })
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ComparisonMode {
    /// S_m⁰ from the free operator L_{0,U}.
    #[default]
    Free,
    /// S_m⁰ from L_{P₀,U}, P₀ = diag(p₁, p₄), built through the gauge transformation.
    CorollaryDiagonal,
}

fn default_name() -> String {
    "experiment".into()
}

fn default_schedule() -> Vec<usize> {
    vec![2, 4, 8, 16, 32, 64]
}

fn default_nu() -> Vec<Exponent> {
    vec![Exponent(2.0), Exponent::INF]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub boundary: BoundarySpec,
    pub potential: PotentialSpec,
    /// Integrability class of the potential; inferred from it when absent.
    #[serde(default)]
    pub kappa: Option<Exponent>,
    pub f: FunctionSpec,
    pub mu: Exponent,
    #[serde(default = "default_nu")]
    pub nu: Vec<Exponent>,
    #[serde(default = "default_schedule")]
    pub m_schedule: Vec<usize>,
    #[serde(default)]
    pub mesh: MeshParams,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub comparison: ComparisonMode,
    #[serde(default)]
    pub localize: LocalizeOptions,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_schedule.is_empty() || self.m_schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DiracError::Config("m_schedule must be non-empty and strictly increasing".into()));
        }
        if self.nu.is_empty() {
            return Err(DiracError::Config("nu list is empty".into()));
        }
        for e in self.nu.iter().chain([&self.mu]) {
            if e.0.is_nan() || e.0 < 1.0 {
                return Err(DiracError::InvalidExponent(e.0));
            }
        }
        if let Some(k) = self.kappa {
            if k.0.is_nan() || k.0 < 1.0 {
                return Err(DiracError::Config(format!("kappa = {} must be at least 1", k.0)));
            }
        }
        Ok(())
    }
}

fn default_boundary() -> BoundarySpec {
    BoundarySpec::Preset("dirichlet_analog".into())
}

fn zero_potential() -> PotentialSpec {
    PotentialSpec::Zero
}

/// Operator-only configuration; an experiment file is also accepted, its other fields ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorConfig {
    #[serde(default = "default_boundary")]
    pub boundary: BoundarySpec,
    #[serde(default = "zero_potential")]
    pub potential: PotentialSpec,
    #[serde(default)]
    pub mesh: MeshParams,
    #[serde(default)]
    pub localize: LocalizeOptions,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            boundary: default_boundary(),
            potential: zero_potential(),
            mesh: MeshParams::default(),
            localize: LocalizeOptions::default(),
        }
    }
}

impl OperatorConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
