//! Two-point boundary forms U(y) = C y(0) + D y(π), Birkhoff regularity and the
//! closed-form spectrum of the free operator.

use std::f64::consts::PI;

use crate::error::{DiracError, Result};
use crate::mat2::{Mat2, Vec2, C64, I, ONE, ZERO};

/// The 2×4 matrix (C, D) of a boundary form. Rows are linearly independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryMatrixPair {
    c: Mat2,
    d: Mat2,
}

/// The six column-pair minors J_ij of (C, D).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinorSet {
    pub j12: C64,
    pub j13: C64,
    pub j14: C64,
    pub j23: C64,
    pub j24: C64,
    pub j34: C64,
}

impl MinorSet {
    /// J_ij for 1-based column indices i < j.
    pub fn get(&self, i: usize, j: usize) -> C64 {
        match (i, j) {
            (1, 2) => self.j12,
            (1, 3) => self.j13,
            (1, 4) => self.j14,
            (2, 3) => self.j23,
            (2, 4) => self.j24,
            (3, 4) => self.j34,
            (a, b) if a > b => -self.get(b, a),
            _ => ZERO,
        }
    }

    /// J12·J34 − J13·J24 + J14·J23, identically zero for 2×4 minors.
    pub fn plucker_residual(&self) -> C64 {
        self.j12 * self.j34 - self.j13 * self.j24 + self.j14 * self.j23
    }

    fn max_abs(&self) -> f64 {
        [self.j12, self.j13, self.j14, self.j23, self.j24, self.j34]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularity {
    pub regular: bool,
    /// |J14 · J23|.
    pub margin: f64,
}

/// Roots z0, z1 of J23 z² − (J12 + J34) z − J14 = 0 and the eigenvalue series they generate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnperturbedSpectrum {
    pub z0: C64,
    pub z1: C64,
    pub zeta0: C64,
    pub zeta1: C64,
    /// z0 = z1.
    pub double_root: bool,
}

impl UnperturbedSpectrum {
    /// λ_n⁰ = ζ₀ + n for even n, ζ₁ + n for odd n.
    pub fn eigenvalue(&self, n: i64) -> C64 {
        let base = if n.rem_euclid(2) == 0 {
            self.zeta0
        } else {
            self.zeta1
        };
        base + n as f64
    }

    pub fn eigenvalues(&self, range: std::ops::RangeInclusive<i64>) -> Vec<C64> {
        range.map(|n| self.eigenvalue(n)).collect()
    }
}

/// Logarithm with Im fixed to (−π, π]; points on the negative real axis get Im = π.
pub fn log_branch(z: C64) -> C64 {
    let r = z.norm();
    let mut arg = z.im.atan2(z.re);
    if z.re < 0.0 && z.im.abs() <= 1e-14 * r {
        arg = PI;
    }
    C64::new(r.ln(), arg)
}

const RANK_TOL: f64 = 1e-12;
const REGULARITY_TOL: f64 = 1e-10;
const RREF_TOL: f64 = 1e-10;

impl BoundaryMatrixPair {
    pub fn new(c: Mat2, d: Mat2) -> Result<Self> {
        let bf = BoundaryMatrixPair { c, d };
        let scale = bf.max_abs();
        let m = bf.minors_unchecked();
        if scale == 0.0 || m.max_abs() <= RANK_TOL * scale * scale {
            return Err(DiracError::InvalidForm(
                "rows of (C, D) are linearly dependent".into(),
            ));
        }
        Ok(bf)
    }

    /// From the rows of the 2×4 matrix (C, D).
    pub fn from_rows(rows: [[C64; 4]; 2]) -> Result<Self> {
        let c = Mat2::new(rows[0][0], rows[0][1], rows[1][0], rows[1][1]);
        let d = Mat2::new(rows[0][2], rows[0][3], rows[1][2], rows[1][3]);
        Self::new(c, d)
    }

    /// y₁(0) = y₂(0), y₁(π) = y₂(π).
    pub fn dirichlet_analog() -> Self {
        Self::new(
            Mat2::from_real([[1.0, -1.0], [0.0, 0.0]]),
            Mat2::from_real([[0.0, 0.0], [1.0, -1.0]]),
        )
        .expect("preset is valid")
    }

    pub fn periodic() -> Self {
        Self::new(Mat2::identity(), -Mat2::identity()).expect("preset is valid")
    }

    pub fn antiperiodic() -> Self {
        Self::new(Mat2::identity(), Mat2::identity()).expect("preset is valid")
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "dirichlet_analog" => Ok(Self::dirichlet_analog()),
            "periodic" => Ok(Self::periodic()),
            "antiperiodic" => Ok(Self::antiperiodic()),
            other => Err(DiracError::Config(format!("unknown boundary preset '{other}'"))),
        }
    }

    pub fn c(&self) -> &Mat2 {
        &self.c
    }

    pub fn d(&self) -> &Mat2 {
        &self.d
    }

    pub fn rows(&self) -> [[C64; 4]; 2] {
        let (c, d) = (&self.c.0, &self.d.0);
        [
            [c[0][0], c[0][1], d[0][0], d[0][1]],
            [c[1][0], c[1][1], d[1][0], d[1][1]],
        ]
    }

    fn column(&self, k: usize) -> Vec2 {
        let r = self.rows();
        [r[0][k], r[1][k]]
    }

    pub fn max_abs(&self) -> f64 {
        self.c.max_abs().max(self.d.max_abs())
    }

    /// Same form with D replaced by s·D.
    pub fn with_scaled_d(&self, s: C64) -> Self {
        BoundaryMatrixPair {
            c: self.c,
            d: self.d.scale(s),
        }
    }

    /// U(y) for boundary values y(0), y(π).
    pub fn apply(&self, y0: &Vec2, y_pi: &Vec2) -> Vec2 {
        let a = self.c.mul_vec(y0);
        let b = self.d.mul_vec(y_pi);
        [a[0] + b[0], a[1] + b[1]]
    }

    fn minors_unchecked(&self) -> MinorSet {
        let col: Vec<Vec2> = (0..4).map(|k| self.column(k)).collect();
        let j = |a: usize, b: usize| col[a][0] * col[b][1] - col[b][0] * col[a][1];
        MinorSet {
            j12: j(0, 1),
            j13: j(0, 2),
            j14: j(0, 3),
            j23: j(1, 2),
            j24: j(1, 3),
            j34: j(2, 3),
        }
    }

    pub fn minors(&self) -> MinorSet {
        self.minors_unchecked()
    }

    pub fn regularity(&self) -> Regularity {
        let m = self.minors();
        let margin = (m.j14 * m.j23).norm();
        let scale = self.max_abs();
        Regularity {
            regular: margin > REGULARITY_TOL * scale.powi(4),
            margin,
        }
    }

    pub fn is_regular(&self) -> bool {
        self.regularity().regular
    }

    pub fn unperturbed_spectrum(&self) -> Result<UnperturbedSpectrum> {
        let reg = self.regularity();
        if !reg.regular {
            return Err(DiracError::NotRegular { margin: reg.margin });
        }
        let m = self.minors();
        let a = m.j23;
        let b = -(m.j12 + m.j34);
        let c = -m.j14;
        let disc = b * b - a * c * 4.0;
        let (mut z0, mut z1, double_root);
        if disc.norm() <= 1e-12 * (b.norm_sqr() + (a * c * 4.0).norm()) {
            z0 = -b / (a * 2.0);
            z1 = z0;
            double_root = true;
        } else {
            let sq = disc.sqrt();
            let q = if (b + sq).norm() >= (b - sq).norm() {
                -(b + sq) / 2.0
            } else {
                -(b - sq) / 2.0
            };
            z0 = q / a;
            z1 = c / q;
            double_root = false;
            let (l0, l1) = (log_branch(z0), log_branch(z1));
            if (l1.im, l1.re) < (l0.im, l0.re) {
                std::mem::swap(&mut z0, &mut z1);
            }
        }
        let zeta0 = -I / PI * log_branch(z0);
        let zeta1 = -I / PI * log_branch(z1) - 1.0;
        Ok(UnperturbedSpectrum {
            z0,
            z1,
            zeta0,
            zeta1,
            double_root,
        })
    }

    /// Δ₀(λ) = J12 + J34 + e^{−iλπ} J14 − e^{iλπ} J23.
    pub fn delta0(&self, lambda: C64) -> C64 {
        let m = self.minors();
        m.j12 + m.j34 + (-I * lambda * PI).exp() * m.j14 - (I * lambda * PI).exp() * m.j23
    }

    /// Basis (4×2, stored as two columns) of {Y ∈ C⁴ : (C, D) Y = 0}.
    pub fn kernel_basis(&self) -> [[C64; 4]; 2] {
        let m = self.minors();
        let mut best = (0, 1);
        let mut best_val = -1.0;
        for i in 0..4 {
            for j in i + 1..4 {
                let v = m.get(i + 1, j + 1).norm();
                if v > best_val {
                    best_val = v;
                    best = (i, j);
                }
            }
        }
        let (p, q) = best;
        let pivot = Mat2::new(
            self.column(p)[0],
            self.column(q)[0],
            self.column(p)[1],
            self.column(q)[1],
        );
        let inv = pivot.inverse().expect("largest minor is nonzero");
        let free: Vec<usize> = (0..4).filter(|k| *k != p && *k != q).collect();
        let mut basis = [[ZERO; 4]; 2];
        for (b, &f) in free.iter().enumerate() {
            let col = self.column(f);
            let sol = inv.mul_vec(&[-col[0], -col[1]]);
            basis[b][f] = ONE;
            basis[b][p] = sol[0];
            basis[b][q] = sol[1];
        }
        basis
    }

    /// Form U* with ⟨B y(π), z(π)⟩ − ⟨B y(0), z(0)⟩ = 0 whenever U(y) = 0 and U*(z) = 0.
    pub fn adjoint_pair(&self) -> Result<Self> {
        // z must annihilate diag(−B, B)·ker U; rows of U* are Kᴴ diag(B, −B).
        let k = self.kernel_basis();
        let weights = [-I, I, I, -I];
        let mut rows = [[ZERO; 4]; 2];
        for r in 0..2 {
            for c in 0..4 {
                rows[r][c] = k[r][c].conj() * weights[c];
            }
        }
        Self::from_rows(rows)
    }

    /// Reduced row echelon form with partial pivoting; rows normalized so that
    /// each pivot equals one.
    pub fn canonical(&self) -> [[C64; 4]; 2] {
        let mut a = self.rows();
        let scale = self.max_abs();
        let mut row = 0;
        for col in 0..4 {
            if row == 2 {
                break;
            }
            let (pr, pv) = (row..2)
                .map(|r| (r, a[r][col].norm()))
                .fold((row, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if pv <= RREF_TOL * scale {
                continue;
            }
            a.swap(row, pr);
            let piv = a[row][col];
            for x in a[row].iter_mut() {
                *x /= piv;
            }
            for r in 0..2 {
                if r != row {
                    let f = a[r][col];
                    let pivot_row = a[row];
                    for (x, v) in a[r].iter_mut().zip(pivot_row) {
                        *x -= f * v;
                    }
                }
            }
            row += 1;
        }
        a
    }

    pub fn row_equivalent(&self, other: &BoundaryMatrixPair) -> bool {
        let (a, b) = (self.canonical(), other.canonical());
        a.iter()
            .flatten()
            .zip(b.iter().flatten())
            .all(|(x, y)| (x - y).norm() < 1e-9)
    }

    /// Boundary bilinear term ⟨B y(π), z(π)⟩ − ⟨B y(0), z(0)⟩.
    pub fn boundary_bilinear(y0: &Vec2, y_pi: &Vec2, z0: &Vec2, z_pi: &Vec2) -> C64 {
        let b = [-I, I];
        let at = |y: &Vec2, z: &Vec2| b[0] * y[0] * z[0].conj() + b[1] * y[1] * z[1].conj();
        at(y_pi, z_pi) - at(y0, z0)
    }
}

pub fn minors(bf: &BoundaryMatrixPair) -> MinorSet {
    bf.minors()
}

pub fn is_regular(bf: &BoundaryMatrixPair) -> Regularity {
    bf.regularity()
}

pub fn unperturbed_spectrum(bf: &BoundaryMatrixPair) -> Result<UnperturbedSpectrum> {
    bf.unperturbed_spectrum()
}

pub fn delta0(bf: &BoundaryMatrixPair, lambda: C64) -> C64 {
    bf.delta0(lambda)
}

pub fn adjoint_pair(bf: &BoundaryMatrixPair) -> Result<BoundaryMatrixPair> {
    bf.adjoint_pair()
}
