//! Quaternions, the right H-module H², quaternionic 2x2 matrices and the
//! complex picture (H², I) = C⁴.
//!
//! Complex coordinates: every quaternion is written `q = α + jβ` with
//! `α, β ∈ C = span{1, i}`, and a vector `ψ = (ψ₁, ψ₂)` maps to
//! `(α₁, β₁, α₂, β₂)`. Right multiplication by `i` becomes complex scalar
//! multiplication, and left multiplication by `q = a + jb` acts on `(α, β)`
//! as the block `[[a, -b̄], [b, ā]]`.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WforgeError};
pub use crate::tolerances::{COMPLEX_STRUCTURE_TOL, SINGULAR_REL};

pub type ComplexVec4 = Vector4<Complex64>;
pub type ComplexMat4 = Matrix4<Complex64>;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    #[inline]
    pub const fn real(w: f64) -> Self {
        Self::new(w, 0.0, 0.0, 0.0)
    }

    #[inline]
    pub const fn imag(x: f64, y: f64, z: f64) -> Self {
        Self::new(0.0, x, y, z)
    }

    /// The quaternion `c` for a complex number `c = re + im·i`.
    #[inline]
    pub fn from_complex(c: Complex64) -> Self {
        Self::new(c.re, c.im, 0.0, 0.0)
    }

    /// Builds `α + jβ`.
    #[inline]
    pub fn from_pair(alpha: Complex64, beta: Complex64) -> Self {
        // jβ = j(br + bi·i) = br·j - bi·k
        Self::new(alpha.re, alpha.im, beta.re, -beta.im)
    }

    /// Splits `q = α + jβ`.
    #[inline]
    pub fn to_pair(self) -> (Complex64, Complex64) {
        (
            Complex64::new(self.w, self.x),
            Complex64::new(self.y, -self.z),
        )
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Multiplicative inverse. Returns non-finite components for `q = 0`.
    #[inline]
    pub fn inv(self) -> Self {
        self.conj() * (1.0 / self.norm_sqr())
    }

    #[inline]
    pub fn re(self) -> f64 {
        self.w
    }

    #[inline]
    pub fn im(self) -> Self {
        Self::new(0.0, self.x, self.y, self.z)
    }

    /// Imaginary part rescaled to unit length, so the result squares to -1.
    pub fn unit_imag(self) -> Self {
        let im = self.im();
        im * (1.0 / im.norm())
    }

    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.w.is_finite() && self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Complex 2x2 block of left multiplication on `(α, β)`.
    pub fn left_block(self) -> [[Complex64; 2]; 2] {
        let (a, b) = self.to_pair();
        [[a, -b.conj()], [b, a.conj()]]
    }
}

impl Add for Quaternion {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Quaternion {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Quaternion {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

impl Mul for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }
}

/// An element of H². Scalars act from the right.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuatVec2(pub [Quaternion; 2]);

impl QuatVec2 {
    pub const ZERO: QuatVec2 = QuatVec2([Quaternion::ZERO; 2]);

    #[inline]
    pub fn new(a: Quaternion, b: Quaternion) -> Self {
        Self([a, b])
    }

    #[inline]
    pub fn mul_right(self, q: Quaternion) -> Self {
        Self([self.0[0] * q, self.0[1] * q])
    }

    #[inline]
    pub fn norm_sqr(self) -> f64 {
        self.0[0].norm_sqr() + self.0[1].norm_sqr()
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Quaternionic hermitian product `ā₁b₁ + ā₂b₂`.
    pub fn hdot(self, other: Self) -> Quaternion {
        self.0[0].conj() * other.0[0] + self.0[1].conj() * other.0[1]
    }

    pub fn normalized(self) -> Self {
        self * (1.0 / self.norm())
    }

    pub fn is_finite(self) -> bool {
        self.0[0].is_finite() && self.0[1].is_finite()
    }
}

impl Add for QuatVec2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self([self.0[0] + o.0[0], self.0[1] + o.0[1]])
    }
}

impl Sub for QuatVec2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self([self.0[0] - o.0[0], self.0[1] - o.0[1]])
    }
}

impl Neg for QuatVec2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self([-self.0[0], -self.0[1]])
    }
}

impl Mul<f64> for QuatVec2 {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        Self([self.0[0] * s, self.0[1] * s])
    }
}

/// Quaternionic 2x2 matrix acting on `QuatVec2` from the left.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuatMat2(pub [[Quaternion; 2]; 2]);

impl QuatMat2 {
    pub const ZERO: QuatMat2 = QuatMat2([[Quaternion::ZERO; 2]; 2]);
    pub const IDENTITY: QuatMat2 = QuatMat2([
        [Quaternion::ONE, Quaternion::ZERO],
        [Quaternion::ZERO, Quaternion::ONE],
    ]);

    #[inline]
    pub fn new(m11: Quaternion, m12: Quaternion, m21: Quaternion, m22: Quaternion) -> Self {
        Self([[m11, m12], [m21, m22]])
    }

    pub fn diag(a: Quaternion, b: Quaternion) -> Self {
        Self::new(a, Quaternion::ZERO, Quaternion::ZERO, b)
    }

    /// Left multiplication by a quaternion scalar on both coordinates.
    pub fn scalar(q: Quaternion) -> Self {
        Self::diag(q, q)
    }

    pub fn from_cols(c1: QuatVec2, c2: QuatVec2) -> Self {
        Self::new(c1.0[0], c2.0[0], c1.0[1], c2.0[1])
    }

    pub fn col(&self, k: usize) -> QuatVec2 {
        QuatVec2([self.0[0][k], self.0[1][k]])
    }

    #[inline]
    pub fn apply(&self, v: QuatVec2) -> QuatVec2 {
        let m = &self.0;
        QuatVec2([
            m[0][0] * v.0[0] + m[0][1] * v.0[1],
            m[1][0] * v.0[0] + m[1][1] * v.0[1],
        ])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().flatten().map(|q| q.norm_sqr()).sum()
    }

    /// Frobenius norm over the sixteen real entries.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|q| q.is_finite())
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Quaternionic hermitian adjoint.
    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(
            m[0][0].conj(),
            m[1][0].conj(),
            m[0][1].conj(),
            m[1][1].conj(),
        )
    }

    /// Orthogonal projector onto the quaternionic line `vH`.
    pub fn line_projector(v: QuatVec2) -> Self {
        let u = v.normalized();
        let mut out = Self::ZERO;
        for k in 0..2 {
            for l in 0..2 {
                out.0[k][l] = u.0[k] * u.0[l].conj();
            }
        }
        out
    }

    /// Inverse through the complex 4x4 representation.
    pub fn inverse(&self) -> Result<Self> {
        mat2_inverse(self)
    }
}

impl Add for QuatMat2 {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        let mut out = self;
        for k in 0..2 {
            for l in 0..2 {
                out.0[k][l] += o.0[k][l];
            }
        }
        out
    }
}

impl Sub for QuatMat2 {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for QuatMat2 {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul for QuatMat2 {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let a = &self.0;
        let b = &o.0;
        let entry = |k: usize, l: usize| a[k][0] * b[0][l] + a[k][1] * b[1][l];
        QuatMat2([[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]])
    }
}

impl Mul<f64> for QuatMat2 {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        let mut out = self;
        for q in out.0.iter_mut().flatten() {
            *q = *q * s;
        }
        out
    }
}

/// `m⁻¹`, computed in the complex 4x4 picture.
pub fn mat2_inverse(m: &QuatMat2) -> Result<QuatMat2> {
    let c = complexify_mat(m);
    let det = c.determinant().norm();
    let scale = m.norm_sqr() * m.norm_sqr();
    // Negated so that a NaN determinant counts as singular.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(det >= SINGULAR_REL * scale) || scale == 0.0 {
        return Err(WforgeError::SingularMatrix { det, scale });
    }
    let inv = c
        .try_inverse()
        .ok_or(WforgeError::SingularMatrix { det, scale })?;
    Ok(decomplexify_mat(&inv))
}

/// `Re(m₁₁) + Re(m₂₂)`.
pub fn real_trace(m: &QuatMat2) -> f64 {
    m.0[0][0].w + m.0[1][1].w
}

pub fn complexify(v: QuatVec2) -> ComplexVec4 {
    let (a1, b1) = v.0[0].to_pair();
    let (a2, b2) = v.0[1].to_pair();
    ComplexVec4::new(a1, b1, a2, b2)
}

pub fn decomplexify(c: &ComplexVec4) -> QuatVec2 {
    QuatVec2([
        Quaternion::from_pair(c[0], c[1]),
        Quaternion::from_pair(c[2], c[3]),
    ])
}

pub fn complexify_mat(m: &QuatMat2) -> ComplexMat4 {
    let mut out = ComplexMat4::zeros();
    for k in 0..2 {
        for l in 0..2 {
            let blk = m.0[k][l].left_block();
            for r in 0..2 {
                for s in 0..2 {
                    out[(2 * k + r, 2 * l + s)] = blk[r][s];
                }
            }
        }
    }
    out
}

/// Reads back a quaternionic matrix from its complex representation.
///
/// Only the first column of every 2x2 block is consulted; the input is
/// assumed to commute with right multiplication by `j`.
pub fn decomplexify_mat(c: &ComplexMat4) -> QuatMat2 {
    let mut out = QuatMat2::ZERO;
    for k in 0..2 {
        for l in 0..2 {
            out.0[k][l] = Quaternion::from_pair(c[(2 * k, 2 * l)], c[(2 * k + 1, 2 * l)]);
        }
    }
    out
}

/// Complex matrix of right multiplication by `j` composed with conjugation is
/// antilinear, so quaternionic linearity is checked through this residual:
/// `|J c̄ J⁻¹ − c|` with `J` the block matrix of `v ↦ v·j`.
pub fn quaternionic_defect(c: &ComplexMat4) -> f64 {
    // v·j in coordinates: (α + jβ)j = -β̄ + jᾱ, i.e. (α, β) ↦ (-β̄, ᾱ).
    let mut jm = ComplexMat4::zeros();
    for k in 0..2 {
        jm[(2 * k, 2 * k + 1)] = Complex64::new(-1.0, 0.0);
        jm[(2 * k + 1, 2 * k)] = Complex64::new(1.0, 0.0);
    }
    let conj = c.map(|z| z.conj());
    let lhs = jm * conj;
    let rhs = c * jm;
    (lhs - rhs).norm()
}

fn complex_structure_residual(s: &QuatMat2) -> f64 {
    (*s * *s + QuatMat2::IDENTITY).norm()
}

pub fn check_complex_structure(s: &QuatMat2) -> Result<()> {
    let residual = complex_structure_residual(s);
    if residual < COMPLEX_STRUCTURE_TOL {
        Ok(())
    } else {
        Err(WforgeError::NotComplexStructure { residual })
    }
}

/// `(π_E, π_E⊥) = (½(1 − I∘S), ½(1 + I∘S))` for a complex structure `S`,
/// where `I` is right multiplication by `i`.
pub fn eigenprojections(s: &QuatMat2) -> Result<(ComplexMat4, ComplexMat4)> {
    check_complex_structure(s)?;
    let is = complexify_mat(s) * Complex64::i();
    let one = ComplexMat4::identity();
    let half = Complex64::new(0.5, 0.0);
    Ok(((one - is) * half, (one + is) * half))
}

/// Complex matrix of right multiplication by `j`, which is antilinear and
/// therefore acts as `v ↦ J·v̄`.
pub fn right_j(v: &ComplexVec4) -> ComplexVec4 {
    ComplexVec4::new(-v[1].conj(), v[0].conj(), -v[3].conj(), v[2].conj())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(w: f64, x: f64, y: f64, z: f64) -> Quaternion {
        Quaternion::new(w, x, y, z)
    }

    #[test]
    fn hamilton_rules() {
        let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
        assert_eq!(i * j, k);
        assert_eq!(j * k, i);
        assert_eq!(k * i, j);
        for u in [i, j, k] {
            assert_eq!(u * u, -Quaternion::ONE);
        }
        assert_eq!(j * i, -k);
    }

    #[test]
    fn pair_roundtrip_and_convention() {
        let jq = Quaternion::J * Quaternion::I;
        let (a, b) = (Quaternion::ONE + jq).to_pair();
        assert_eq!(a, Complex64::new(1.0, 0.0));
        assert_eq!(b, Complex64::new(0.0, 1.0));
        let p = q(0.3, -1.2, 2.0, 0.7);
        let (a, b) = p.to_pair();
        assert_eq!(Quaternion::from_pair(a, b), p);
    }

    #[test]
    fn complexify_examples() {
        let v = QuatVec2::new(Quaternion::ONE, Quaternion::J);
        let c = complexify(v);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        assert_eq!(c, ComplexVec4::new(one, zero, zero, one));
        let v = QuatVec2::new(
            Quaternion::ONE + Quaternion::J * Quaternion::I,
            Quaternion::ZERO,
        );
        assert_eq!(
            complexify(v),
            ComplexVec4::new(one, Complex64::i(), zero, zero)
        );
    }

    #[test]
    fn right_i_is_complex_scalar() {
        let v = QuatVec2::new(q(0.1, 0.2, -0.3, 0.4), q(-1.0, 0.5, 0.25, 2.0));
        let lhs = complexify(v.mul_right(Quaternion::I));
        let rhs = complexify(v) * Complex64::i();
        assert!((lhs - rhs).norm() < 1e-15);
        let lhs = complexify(v.mul_right(Quaternion::J));
        assert!((lhs - right_j(&complexify(v))).norm() < 1e-15);
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(
            mat2_inverse(&QuatMat2::IDENTITY).unwrap(),
            QuatMat2::IDENTITY
        );
        let m = QuatMat2::diag(Quaternion::J, Quaternion::K);
        let inv = mat2_inverse(&m).unwrap();
        let want = QuatMat2::diag(-Quaternion::J, -Quaternion::K);
        assert!((inv - want).norm() < 1e-15);
    }

    #[test]
    fn singular_matrix_rejected() {
        let v = QuatVec2::new(q(1.0, 2.0, 0.0, -1.0), q(0.5, 0.0, 1.0, 1.0));
        let m = QuatMat2::from_cols(v, v.mul_right(q(0.2, 0.0, 3.0, 0.0)));
        assert!(matches!(
            mat2_inverse(&m),
            Err(WforgeError::SingularMatrix { .. })
        ));
        assert!(mat2_inverse(&QuatMat2::ZERO).is_err());
    }

    #[test]
    fn real_trace_examples() {
        assert_eq!(real_trace(&QuatMat2::IDENTITY), 2.0);
        assert_eq!(
            real_trace(&QuatMat2::diag(Quaternion::I, -Quaternion::I)),
            0.0
        );
        let m = QuatMat2::diag(Quaternion::ONE + Quaternion::J, Quaternion::real(3.0));
        assert_eq!(real_trace(&m), 4.0);
    }

    #[test]
    fn eigenprojections_of_diag_i() {
        let s = QuatMat2::scalar(Quaternion::I);
        let (pe, pf) = eigenprojections(&s).unwrap();
        let e1 = complexify(QuatVec2::new(Quaternion::ONE, Quaternion::ZERO));
        assert!((pe * e1 - e1).norm() < 1e-15);
        let ej = complexify(QuatVec2::new(Quaternion::J, Quaternion::ZERO));
        assert!((pf * ej - ej).norm() < 1e-15);
        assert!((pe * pf).norm() < 1e-15);
    }

    #[test]
    fn eigenprojections_reject_non_structure() {
        let s = QuatMat2::scalar(Quaternion::I * 1.1);
        assert!(matches!(
            eigenprojections(&s),
            Err(WforgeError::NotComplexStructure { .. })
        ));
    }

    #[test]
    fn line_projector_is_idempotent() {
        let v = QuatVec2::new(q(0.3, 1.0, 0.0, -2.0), q(1.0, 0.5, -0.5, 0.0));
        let p = QuatMat2::line_projector(v);
        assert!((p * p - p).norm() < 1e-14);
        assert!((p.apply(v) - v).norm() < 1e-14);
        assert!((real_trace(&p) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn quaternionic_matrices_have_zero_defect() {
        let m = QuatMat2::new(
            q(1.0, 2.0, 3.0, 4.0),
            q(0.0, -1.0, 0.5, 0.0),
            q(2.0, 0.0, 0.0, 1.0),
            q(-1.0, 1.0, -1.0, 1.0),
        );
        assert!(quaternionic_defect(&complexify_mat(&m)) < 1e-14);
        let mut c = complexify_mat(&m);
        c[(0, 0)] += Complex64::i();
        assert!(quaternionic_defect(&c) > 0.5);
    }
}
