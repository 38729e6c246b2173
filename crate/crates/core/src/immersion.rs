//! Conformal immersions into S⁴ = HP¹: analytic test surfaces sampled in
//! conformal charts, their left/right normals, and the passage between the
//! affine chart `f: M → H` and line bundles `L = ψH ⊂ H²`.

use std::f64::consts::{PI, SQRT_2};
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calc::{d_field, Field, Grid, OneForm, StencilOrder};
use crate::error::{Result, WforgeError};
use crate::quat::{QuatMat2, QuatVec2, Quaternion};
pub use crate::tolerances::{DEGENERATE_DF, INFINITY_TOL, POLE_CLAMP};

/// Which holomorphic-to-quaternionic identification the twistor projection uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TwistorConvention {
    /// `[z₁:z₂:z₃:z₄] ↦ (z₁ + j z₂, z₃ + j z₄)H`.
    #[default]
    LeftJ,
    /// `[z₁:z₂:z₃:z₄] ↦ (z₁ + z₂ j, z₃ + z₄ j)H`.
    RightJ,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceSpec {
    /// Unit sphere in Im H in Mercator coordinates on `[-e, e]²`.
    MercatorSphere {
        extent: f64,
    },
    /// `(cos x + i sin x + j cos y + k sin y)/√2`; a torus grid or one
    /// closed fundamental square sampled as a patch.
    CliffordTorus {
        patch: bool,
    },
    /// Torus of revolution in Im H with radii `major > minor > 0`.
    RevolutionTorus {
        major: f64,
        minor: f64,
    },
    CatenoidPatch,
    EnneperPatch,
    /// Twistor projection of a polynomial curve `w ↦ [z₁(w):…:z₄(w)]`;
    /// `coeffs[k]` lists the coefficients of `z_k` in increasing degree.
    TwistorCurve {
        coeffs: [Vec<(f64, f64)>; 4],
        extent: f64,
        convention: TwistorConvention,
    },
    /// Twistor projection of an elliptic curve of degree four in CP³,
    /// built from Jacobi theta products on the square lattice.
    TwistorTorus {
        zeros: [[(f64, f64); 4]; 4],
    },
}

impl SurfaceSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SurfaceSpec::MercatorSphere { .. } => "mercator",
            SurfaceSpec::CliffordTorus { .. } => "clifford",
            SurfaceSpec::RevolutionTorus { .. } => "revolution",
            SurfaceSpec::CatenoidPatch => "catenoid",
            SurfaceSpec::EnneperPatch => "enneper",
            SurfaceSpec::TwistorCurve { .. } => "twistor",
            SurfaceSpec::TwistorTorus { .. } => "twistor_torus",
        }
    }

    pub fn mercator() -> Self {
        SurfaceSpec::MercatorSphere { extent: 1.2 }
    }

    pub fn clifford() -> Self {
        SurfaceSpec::CliffordTorus { patch: false }
    }

    pub fn clifford_patch() -> Self {
        SurfaceSpec::CliffordTorus { patch: true }
    }

    pub fn revolution(major: f64, minor: f64) -> Self {
        SurfaceSpec::RevolutionTorus { major, minor }
    }

    /// `w ↦ [w : w² : 1 : w³]` on `[-½, ½]²`.
    pub fn twistor_default() -> Self {
        SurfaceSpec::TwistorCurve {
            coeffs: [
                vec![(0.0, 0.0), (1.0, 0.0)],
                vec![(0.0, 0.0), (0.0, 0.0), (1.0, 0.0)],
                vec![(1.0, 0.0)],
                vec![(0.0, 0.0), (0.0, 0.0), (0.0, 0.0), (1.0, 0.0)],
            ],
            extent: 0.5,
            convention: TwistorConvention::LeftJ,
        }
    }

    /// A generic elliptic normal quartic; zero sets of all four sections add
    /// up to the same lattice point.
    pub fn twistor_torus_default() -> Self {
        SurfaceSpec::TwistorTorus {
            zeros: [
                [(0.1, 0.2), (0.35, 0.7), (0.6, 0.15), (0.85, 0.45)],
                [(0.2, 0.1), (0.45, 0.6), (0.7, 0.35), (0.55, 0.45)],
                [(0.05, 0.5), (0.3, 0.3), (0.8, 0.8), (0.75, -0.1)],
                [(0.15, 0.85), (0.5, 0.05), (0.65, 0.55), (0.6, 0.05)],
            ],
        }
    }

    /// Parses the short names used in configs.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "mercator" | "sphere" => Self::mercator(),
            "clifford" => Self::clifford(),
            "clifford_patch" => Self::clifford_patch(),
            "revolution" => Self::revolution(3.0, 1.0),
            "catenoid" => SurfaceSpec::CatenoidPatch,
            "enneper" => SurfaceSpec::EnneperPatch,
            "twistor" => Self::twistor_default(),
            "twistor_torus" => Self::twistor_torus_default(),
            _ => return None,
        })
    }

    pub fn is_closed(&self) -> bool {
        matches!(
            self,
            SurfaceSpec::CliffordTorus { patch: false }
                | SurfaceSpec::RevolutionTorus { .. }
                | SurfaceSpec::TwistorTorus { .. }
        )
    }

    /// Genus when closed.
    pub fn genus(&self) -> Option<u32> {
        self.is_closed().then_some(1)
    }

    fn validate(&self) -> Result<()> {
        match self {
            SurfaceSpec::MercatorSphere { extent } if !(*extent > 0.0 && extent.is_finite()) => {
                Err(WforgeError::BadSpec(format!(
                    "mercator extent {extent} must be positive"
                )))
            }
            SurfaceSpec::RevolutionTorus { major, minor }
                if !(*minor > 0.0 && *major > *minor && major.is_finite()) =>
            {
                Err(WforgeError::BadSpec(format!(
                    "revolution torus needs major > minor > 0 (got {major}, {minor})"
                )))
            }
            SurfaceSpec::TwistorCurve { coeffs, extent, .. } => {
                // Negated so that NaN is rejected too.
                #[allow(clippy::neg_cmp_op_on_partial_ord)]
                if !(*extent > 0.0) {
                    return Err(WforgeError::BadSpec(
                        "twistor extent must be positive".into(),
                    ));
                }
                let zero = |c: &Vec<(f64, f64)>| c.iter().all(|&(a, b)| a == 0.0 && b == 0.0);
                if zero(&coeffs[0]) && zero(&coeffs[1]) || zero(&coeffs[2]) && zero(&coeffs[3]) {
                    return Err(WforgeError::BadSpec(
                        "twistor curve has a zero polynomial pair".into(),
                    ));
                }
                Ok(())
            }
            SurfaceSpec::TwistorTorus { zeros } => {
                let sum =
                    |z: &[(f64, f64); 4]| z.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
                let s0 = sum(&zeros[0]);
                for z in &zeros[1..] {
                    let s = sum(z);
                    let d = (s.0 - s0.0, s.1 - s0.1);
                    // Sums may differ by a real period only; an imaginary shift changes
                    // the automorphy factor of the theta product.
                    if (d.0 - d.0.round()).abs() > 1e-12 || d.1.abs() > 1e-12 {
                        return Err(WforgeError::BadSpec(
                            "theta zero sets must have equal sums (up to real periods)".into(),
                        ));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Grid on which the surface is sampled.
    pub fn grid(&self, nx: usize, ny: usize, stencil: StencilOrder) -> Result<Grid> {
        self.validate()?;
        let g = match self {
            SurfaceSpec::MercatorSphere { extent } => {
                Grid::patch(nx, ny, (-extent, *extent), (-extent, *extent))?
            }
            SurfaceSpec::CliffordTorus { patch: false } | SurfaceSpec::TwistorTorus { .. } => {
                Grid::torus(nx, ny, 2.0 * PI, 2.0 * PI)?
            }
            SurfaceSpec::CliffordTorus { patch: true } => {
                Grid::patch(nx, ny, (0.0, 2.0 * PI), (0.0, 2.0 * PI))?
            }
            SurfaceSpec::RevolutionTorus { major, minor } => {
                Grid::torus(nx, ny, 2.0 * PI, revolution_period(*major, *minor))?
            }
            SurfaceSpec::CatenoidPatch => Grid::patch(nx, ny, (-1.2, 1.2), (-1.0, 1.0))?,
            SurfaceSpec::EnneperPatch => Grid::patch(nx, ny, (-1.0, 1.0), (-1.0, 1.0))?,
            SurfaceSpec::TwistorCurve { extent, .. } => {
                Grid::patch(nx, ny, (-extent, *extent), (-extent, *extent))?
            }
        };
        Ok(g.with_stencil(stencil))
    }
}

/// Period of the conformal latitude `t(v) = ∫ r/(R + r cos v) dv`.
pub fn revolution_period(major: f64, minor: f64) -> f64 {
    2.0 * PI * minor / (major * major - minor * minor).sqrt()
}

/// Meridian angle `v` for the conformal latitude `t`.
pub fn revolution_angle(major: f64, minor: f64, t: f64) -> f64 {
    let root = (major * major - minor * minor).sqrt();
    let phi = t * root / minor;
    let k = ((major + minor) / (major - minor)).sqrt();
    2.0 * (k * (phi / 2.0).sin()).atan2((phi / 2.0).cos())
}

/// A map `f: M → H`, the affine chart of `M → HP¹`.
#[derive(Debug, Clone)]
pub struct AffineImmersion {
    pub grid: Grid,
    pub f: Field<Quaternion>,
}

/// The immersion as a line subbundle `L = ψH`, with `|ψ| = 1`.
#[derive(Debug, Clone)]
pub struct LineBundle {
    pub psi: Field<QuatVec2>,
}

/// Left and right normals: `*df = N df = −df R`.
#[derive(Debug, Clone)]
pub struct NormalPair {
    pub n: Field<Quaternion>,
    pub r: Field<Quaternion>,
    pub df: OneForm<Quaternion>,
    pub conformality_residual: f64,
}

fn poly(coeffs: &[(f64, f64)], w: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &(a, b)| {
            acc * w + Complex64::new(a, b)
        })
}

/// Jacobi theta function for the lattice `Z + iZ`:
/// `θ(w) = Σ exp(−π n² + 2πi n w)`.
pub fn theta(w: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for n in -12i32..=12 {
        let nf = n as f64;
        acc += (Complex64::new(-PI * nf * nf, 0.0) + Complex64::new(0.0, 2.0 * PI * nf) * w).exp();
    }
    acc
}

fn theta_with_zero(w: Complex64, a: Complex64) -> Complex64 {
    // θ vanishes at ½ + i/2.
    theta(w - a + Complex64::new(0.5, 0.5))
}

fn twistor_point(z: [Complex64; 4], convention: TwistorConvention) -> QuatVec2 {
    match convention {
        TwistorConvention::LeftJ => QuatVec2::new(
            Quaternion::from_pair(z[0], z[1]),
            Quaternion::from_pair(z[2], z[3]),
        ),
        TwistorConvention::RightJ => QuatVec2::new(
            Quaternion::from_pair(z[0], z[1].conj()),
            Quaternion::from_pair(z[2], z[3].conj()),
        ),
    }
}

/// Line-bundle sampling of the twistor surfaces (unnormalized).
fn twistor_section(spec: &SurfaceSpec, grid: Grid) -> Option<Field<QuatVec2>> {
    match spec {
        SurfaceSpec::TwistorCurve {
            coeffs, convention, ..
        } => Some(Field::from_fn(grid, |x, y| {
            let w = Complex64::new(x, y);
            twistor_point(
                [
                    poly(&coeffs[0], w),
                    poly(&coeffs[1], w),
                    poly(&coeffs[2], w),
                    poly(&coeffs[3], w),
                ],
                *convention,
            )
        })),
        SurfaceSpec::TwistorTorus { zeros } => Some(Field::from_fn(grid, |x, y| {
            let w = Complex64::new(x, y) / (2.0 * PI);
            let mut z = [Complex64::new(1.0, 0.0); 4];
            for (zk, zs) in z.iter_mut().zip(zeros) {
                for &(a, b) in zs {
                    *zk *= theta_with_zero(w, Complex64::new(a, b));
                }
            }
            let v = twistor_point(z, TwistorConvention::LeftJ);
            v.normalized()
        })),
        _ => None,
    }
}

/// Candidate Möbius charts for moving a line bundle away from `∞ = (1,0)H`.
pub fn chart_candidates() -> Vec<QuatMat2> {
    let one = Quaternion::ONE;
    let r = |q: Quaternion| QuatMat2::new(one, -q, q.conj(), one) * std::f64::consts::FRAC_1_SQRT_2;
    vec![
        QuatMat2::IDENTITY,
        QuatMat2::new(Quaternion::ZERO, one, one, Quaternion::ZERO),
        r(one),
        r(Quaternion::I),
        r(Quaternion::J),
        r(Quaternion::K),
        r(Quaternion::new(0.5, 0.5, 0.5, 0.5)),
        r(Quaternion::new(0.5, -0.5, 0.5, -0.5)),
    ]
}

/// Picks the chart matrix `g` maximizing `min |(gψ)₂| / |ψ|`.
pub fn best_chart(psi: &Field<QuatVec2>) -> (QuatMat2, f64) {
    chart_candidates()
        .into_iter()
        .map(|g| {
            let m = psi
                .data
                .iter()
                .map(|v| g.apply(*v).0[1].norm() / v.norm())
                .fold(f64::INFINITY, f64::min);
            (g, m)
        })
        .fold((QuatMat2::IDENTITY, -1.0), |best, c| {
            if c.1 > best.1 {
                c
            } else {
                best
            }
        })
}

/// Samples a test surface on its grid.
pub fn generate(
    spec: &SurfaceSpec,
    nx: usize,
    ny: usize,
    stencil: StencilOrder,
) -> Result<AffineImmersion> {
    let grid = spec.grid(nx, ny, stencil)?;
    let f = match spec {
        SurfaceSpec::MercatorSphere { .. } => Field::from_fn(grid, |x, y| {
            let s = 1.0 / y.cosh();
            Quaternion::imag(s * x.cos(), s * x.sin(), y.tanh())
        }),
        SurfaceSpec::CliffordTorus { .. } => Field::from_fn(grid, |x, y| {
            Quaternion::new(x.cos(), x.sin(), y.cos(), y.sin()) * (1.0 / SQRT_2)
        }),
        SurfaceSpec::RevolutionTorus { major, minor } => {
            let (big, small) = (*major, *minor);
            Field::from_fn(grid, move |x, y| {
                let v = revolution_angle(big, small, y);
                let rho = big + small * v.cos();
                Quaternion::imag(rho * x.cos(), rho * x.sin(), small * v.sin())
            })
        }
        SurfaceSpec::CatenoidPatch => Field::from_fn(grid, |x, y| {
            Quaternion::imag(y.cosh() * x.cos(), y.cosh() * x.sin(), y)
        }),
        SurfaceSpec::EnneperPatch => Field::from_fn(grid, |u, v| {
            Quaternion::imag(
                u - u * u * u / 3.0 + u * v * v,
                -v + v * v * v / 3.0 - u * u * v,
                u * u - v * v,
            )
        }),
        SurfaceSpec::TwistorCurve { .. } | SurfaceSpec::TwistorTorus { .. } => {
            let psi = twistor_section(spec, grid).expect("twistor spec");
            let (g, margin) = match spec {
                SurfaceSpec::TwistorTorus { .. } => best_chart(&psi),
                _ => (QuatMat2::IDENTITY, 1.0),
            };
            if margin <= INFINITY_TOL {
                return Err(WforgeError::BadSpec(
                    "twistor surface passes through every chart's infinity".into(),
                ));
            }
            let moved = psi.map(|v| g.apply(*v));
            return project(&LineBundle { psi: moved });
        }
    };
    Ok(AffineImmersion { grid, f })
}

/// Left and right normals with the conformality residual
/// `sup (|*df − N df| + |*df + df R|) / |df|`.
pub fn normals(f: &AffineImmersion) -> Result<NormalPair> {
    let df = d_field(&f.f)?;
    let g = f.grid;
    let mut n = Vec::with_capacity(g.len());
    let mut r = Vec::with_capacity(g.len());
    let mut residual: f64 = 0.0;
    for k in 0..g.len() {
        let (fx, fy) = (df.x[k], df.y[k]);
        let scale = fx.norm().max(fy.norm());
        if fx.norm() < DEGENERATE_DF || fy.norm() < DEGENERATE_DF {
            return Err(WforgeError::DegenerateDifferential {
                vertex: g.ij(k),
                norm: fx.norm().min(fy.norm()),
            });
        }
        let nk = (fy * fx.inv()).unit_imag();
        let rk = (-(fx.inv() * fy)).unit_imag();
        // *df(∂x) = f_y, *df(∂y) = −f_x
        let res_x = (fy - nk * fx).norm() + (fy + fx * rk).norm();
        let res_y = (-fx - nk * fy).norm() + (-fx + fy * rk).norm();
        residual = residual.max(res_x.max(res_y) / scale);
        n.push(nk);
        r.push(rk);
    }
    Ok(NormalPair {
        n: Field { grid: g, data: n },
        r: Field { grid: g, data: r },
        df,
        conformality_residual: residual,
    })
}

/// `ψ = (f, 1)/|(f, 1)|`.
pub fn lift(f: &AffineImmersion) -> LineBundle {
    LineBundle {
        psi: f.f.map(|q| QuatVec2::new(*q, Quaternion::ONE).normalized()),
    }
}

/// `f = ψ₁ψ₂⁻¹`.
pub fn project(l: &LineBundle) -> Result<AffineImmersion> {
    let g = l.psi.grid;
    let mut data = Vec::with_capacity(g.len());
    for (k, v) in l.psi.data.iter().enumerate() {
        if v.0[1].norm() <= INFINITY_TOL * v.norm() {
            return Err(WforgeError::PointAtInfinity { vertex: g.ij(k) });
        }
        data.push(v.0[0] * v.0[1].inv());
    }
    Ok(AffineImmersion {
        grid: g,
        f: Field { grid: g, data },
    })
}

/// How OBJ export drops the R⁴ surface to R³.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ObjProjection {
    #[default]
    /// Keep the `i, j, k` components.
    Imaginary,
    /// Stereographic projection from the unit pole `p ∈ S³ ⊂ R⁴`:
    /// `x ↦ (x − ⟨x,p⟩p)/(1 − ⟨x,p⟩)` in an orthonormal basis of `p⊥`.
    Stereographic { pole: [f64; 4] },
}

fn pole_basis(p: Quaternion) -> [Quaternion; 3] {
    let mut basis: Vec<Quaternion> = Vec::new();
    for e in [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K] {
        let mut v = e - p * e.dot(p);
        for b in &basis {
            v = v - *b * v.dot(*b);
        }
        if v.norm() > 1e-6 && basis.len() < 3 {
            basis.push(v * (1.0 / v.norm()));
        }
    }
    [basis[0], basis[1], basis[2]]
}

/// Projects vertices to R³; returns the points and indices of clamped vertices.
pub fn project_r3(f: &Field<Quaternion>, proj: ObjProjection) -> (Vec<[f64; 3]>, Vec<usize>) {
    let mut clamped = Vec::new();
    let pts = match proj {
        ObjProjection::Imaginary => f.data.iter().map(|q| [q.x, q.y, q.z]).collect(),
        ObjProjection::Stereographic { pole } => {
            let p = Quaternion::new(pole[0], pole[1], pole[2], pole[3]);
            let p = p * (1.0 / p.norm());
            let basis = pole_basis(p);
            f.data
                .iter()
                .enumerate()
                .map(|(k, x)| {
                    let t = x.dot(p);
                    let mut denom = 1.0 - t;
                    if denom.abs() < POLE_CLAMP {
                        clamped.push(k);
                        denom = POLE_CLAMP.copysign(if denom == 0.0 { 1.0 } else { denom });
                    }
                    let v = *x - p * t;
                    [
                        v.dot(basis[0]) / denom,
                        v.dot(basis[1]) / denom,
                        v.dot(basis[2]) / denom,
                    ]
                })
                .collect()
        }
    };
    (pts, clamped)
}

/// Triangulated OBJ of the sampled surface. Periodic directions are closed up.
pub fn write_obj<W: Write>(
    f: &Field<Quaternion>,
    proj: ObjProjection,
    mut out: W,
) -> Result<Vec<usize>> {
    let g = f.grid;
    let (pts, clamped) = project_r3(f, proj);
    for p in &pts {
        writeln!(out, "v {:.10} {:.10} {:.10}", p[0], p[1], p[2])?;
    }
    let cx = if g.periodic_x { g.nx } else { g.nx - 1 };
    let cy = if g.periodic_y { g.ny } else { g.ny - 1 };
    for j in 0..cy {
        for i in 0..cx {
            let a = g.idx(i, j) + 1;
            let b = g.idx((i + 1) % g.nx, j) + 1;
            let c = g.idx((i + 1) % g.nx, (j + 1) % g.ny) + 1;
            let d = g.idx(i, (j + 1) % g.ny) + 1;
            writeln!(out, "f {a} {b} {c}")?;
            writeln!(out, "f {a} {c} {d}")?;
        }
    }
    Ok(clamped)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clifford_origin() {
        let f = generate(&SurfaceSpec::clifford(), 16, 16, StencilOrder::Sixth).unwrap();
        let want = (Quaternion::ONE + Quaternion::J) * (1.0 / SQRT_2);
        assert!((f.f.at(0, 0) - want).norm() < 1e-15);
    }

    #[test]
    fn mercator_on_unit_sphere() {
        let f = generate(&SurfaceSpec::mercator(), 32, 32, StencilOrder::Sixth).unwrap();
        assert!(f
            .f
            .data
            .iter()
            .all(|q| (q.norm() - 1.0).abs() < 1e-14 && q.w == 0.0));
    }

    #[test]
    fn bad_specs() {
        let err = generate(
            &SurfaceSpec::revolution(1.0, 2.0),
            16,
            16,
            StencilOrder::Sixth,
        );
        assert!(matches!(err, Err(WforgeError::BadSpec(_))));
        let spec = SurfaceSpec::TwistorCurve {
            coeffs: [vec![(0.0, 0.0)], vec![], vec![(1.0, 0.0)], vec![]],
            extent: 1.0,
            convention: TwistorConvention::LeftJ,
        };
        assert!(matches!(
            generate(&spec, 16, 16, StencilOrder::Sixth),
            Err(WforgeError::BadSpec(_))
        ));
    }

    #[test]
    fn lift_of_zero_and_roundtrip() {
        let g = Grid::patch(8, 8, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let zero = AffineImmersion {
            grid: g,
            f: Field::constant(g, Quaternion::ZERO),
        };
        let l = lift(&zero);
        assert!(l
            .psi
            .data
            .iter()
            .all(|v| *v == QuatVec2::new(Quaternion::ZERO, Quaternion::ONE)));

        let f = generate(&SurfaceSpec::clifford(), 16, 16, StencilOrder::Sixth).unwrap();
        let back = project(&lift(&f)).unwrap();
        for (a, b) in back.f.data.iter().zip(&f.f.data) {
            assert!((*a - *b).norm() < 1e-14);
        }
    }

    #[test]
    fn projective_rescaling_is_invisible() {
        let f = generate(&SurfaceSpec::clifford(), 16, 16, StencilOrder::Sixth).unwrap();
        let l = lift(&f);
        let scaled = LineBundle {
            psi: l.psi.zip_map(&f.f, |v, q| {
                let u = Quaternion::new(q.x, 0.3, q.w, -q.z);
                v.mul_right(u * (1.0 / u.norm()))
            }),
        };
        let back = project(&scaled).unwrap();
        for (a, b) in back.f.data.iter().zip(&f.f.data) {
            assert!((*a - *b).norm() < 1e-14);
        }
    }

    #[test]
    fn point_at_infinity_is_reported() {
        let g = Grid::patch(8, 8, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let mut psi = Field::constant(g, QuatVec2::new(Quaternion::ZERO, Quaternion::ONE));
        psi.data[g.idx(3, 5)] = QuatVec2::new(Quaternion::ONE, Quaternion::ZERO);
        match project(&LineBundle { psi }) {
            Err(WforgeError::PointAtInfinity { vertex }) => assert_eq!(vertex, (3, 5)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn revolution_chart_closes_up() {
        let (a, b) = (3.0, 1.0);
        let t = revolution_period(a, b);
        assert!((revolution_angle(a, b, 0.0)).abs() < 1e-15);
        let end = revolution_angle(a, b, t - 1e-9);
        assert!((end - 2.0 * PI).abs() < 1e-6 || end.abs() < 1e-6);
    }

    #[test]
    fn theta_quasi_periodicity() {
        let w = Complex64::new(0.13, -0.27);
        assert!((theta(w + 1.0) - theta(w)).norm() < 1e-13);
        let factor = (Complex64::new(PI, 0.0) - Complex64::new(0.0, 2.0 * PI) * w).exp();
        assert!((theta(w + Complex64::i()) - factor * theta(w)).norm() < 1e-12 * factor.norm());
        assert!(theta(Complex64::new(0.5, 0.5)).norm() < 1e-13);
    }

    #[test]
    fn stereographic_pole_clamped() {
        let g = Grid::patch(8, 8, (0.0, 1.0), (0.0, 1.0)).unwrap();
        let mut f = Field::constant(g, Quaternion::I);
        f.data[0] = Quaternion::ONE;
        let (pts, clamped) = project_r3(
            &f,
            ObjProjection::Stereographic {
                pole: [1.0, 0.0, 0.0, 0.0],
            },
        );
        assert_eq!(clamped, vec![0]);
        assert!((pts[1][0].powi(2) + pts[1][1].powi(2) + pts[1][2].powi(2) - 1.0).abs() < 1e-14);
    }
}
