//! Small fixed-size complex linear algebra for the 2×2 Dirac system.

use num_complex::Complex64;
use std::ops::{Add, Mul, Neg, Sub};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Column vector with two complex components.
pub type Vec2 = [C64; 2];

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub const fn diag(a: C64, d: C64) -> Self {
        Mat2([[a, ZERO], [ZERO, d]])
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Mat2([
            [C64::new(m[0][0], 0.0), C64::new(m[0][1], 0.0)],
            [C64::new(m[1][0], 0.0), C64::new(m[1][1], 0.0)],
        ])
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.0[r][c]
    }

    #[inline]
    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    #[inline]
    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn adjugate(&self) -> Self {
        let [[a, b], [c, d]] = self.0;
        Mat2::new(d, -b, -c, a)
    }

    /// Inverse, or `None` when the determinant vanishes relative to the entries.
    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        let scale = self.max_abs();
        if det.norm() <= 1e-300 || det.norm() <= f64::EPSILON * 1e-4 * scale * scale {
            return None;
        }
        Some(self.adjugate().scale(det.inv()))
    }

    pub fn scale(&self, s: C64) -> Self {
        let [[a, b], [c, d]] = self.0;
        Mat2::new(a * s, b * s, c * s, d * s)
    }

    pub fn conj_transpose(&self) -> Self {
        let [[a, b], [c, d]] = self.0;
        Mat2::new(a.conj(), c.conj(), b.conj(), d.conj())
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    #[inline]
    pub fn mul_vec(&self, v: &Vec2) -> Vec2 {
        [
            self.0[0][0] * v[0] + self.0[0][1] * v[1],
            self.0[1][0] * v[0] + self.0[1][1] * v[1],
        ]
    }

    pub fn commutator(&self, other: &Mat2) -> Mat2 {
        *self * *other - *other * *self
    }

    /// Matrix exponential via the Cayley–Hamilton closed form for 2×2 matrices.
    pub fn expm(&self) -> Mat2 {
        let half_tr = self.trace() * 0.5;
        let n = *self - Mat2::identity().scale(half_tr);
        let s2 = -n.det();
        let (ch, sh_over_s) = if s2.norm() < 1e-2 {
            // Taylor series of cosh(s) and sinh(s)/s in s².
            let mut ch = ONE;
            let mut sh = ONE;
            let mut term_c = ONE;
            let mut term_s = ONE;
            for k in 1..=7 {
                let k = k as f64;
                term_c = term_c * s2 / ((2.0 * k - 1.0) * (2.0 * k));
                term_s = term_s * s2 / ((2.0 * k) * (2.0 * k + 1.0));
                ch += term_c;
                sh += term_s;
            }
            (ch, sh)
        } else {
            let s = s2.sqrt();
            let e = s.exp();
            let ei = e.inv();
            ((e + ei) * 0.5, (e - ei) * 0.5 / s)
        };
        let e = half_tr.exp();
        let a = ch * e;
        let b = sh_over_s * e;
        Mat2([
            [a + b * n.0[0][0], b * n.0[0][1]],
            [b * n.0[1][0], a + b * n.0[1][1]],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut r = self.0;
        for (i, row) in r.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x += o.0[i][j];
            }
        }
        Mat2(r)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-ONE)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, o: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

/// Null vector of a (numerically) rank-one 2×2 matrix, taken from its dominant row.
pub fn null_vector(m: &Mat2) -> Vec2 {
    let r0 = m.0[0][0].norm_sqr() + m.0[0][1].norm_sqr();
    let r1 = m.0[1][0].norm_sqr() + m.0[1][1].norm_sqr();
    let row = if r0 >= r1 { m.0[0] } else { m.0[1] };
    let v = [-row[1], row[0]];
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    if n == 0.0 {
        [ONE, ZERO]
    } else {
        [v[0] / n, v[1] / n]
    }
}

/// Singular values of a 2×2 complex matrix, largest first.
pub fn singular_values(m: &Mat2) -> (f64, f64) {
    let f2 = m.frobenius().powi(2);
    let d = m.det().norm();
    let disc = (f2 * f2 - 4.0 * d * d).max(0.0).sqrt();
    let s_max = ((f2 + disc) / 2.0).sqrt();
    let s_min = if s_max > 0.0 { d / s_max } else { 0.0 };
    (s_max, s_min)
}

/// Minimum-norm least-squares solution of `m x = b` (Moore–Penrose pseudo-inverse).
pub fn pinv_solve(m: &Mat2, b: &Vec2, rel_tol: f64) -> Vec2 {
    let (s_max, s_min) = singular_values(m);
    if s_max == 0.0 {
        return [ZERO, ZERO];
    }
    if s_min > rel_tol * s_max {
        let inv = m.inverse().expect("well-conditioned matrix");
        return inv.mul_vec(b);
    }
    // rank one: m = σ u vᴴ, pinv = mᴴ / ‖m‖_F²
    let mh = m.conj_transpose();
    let f2 = m.frobenius().powi(2);
    let x = mh.mul_vec(b);
    [x[0] / f2, x[1] / f2]
}
