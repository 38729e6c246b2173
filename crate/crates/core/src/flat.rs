//! The associated family of connections `d^λ = d + (λ−1)A^(1,0) + (λ⁻¹−1)A^(0,1)`
//! on `(H², I) ≅ C⁴`, its curvature, parallel sections and torus monodromy.
//!
//! All connection forms live in the complex picture: `I` (right
//! multiplication by `i`) is the complex scalar `i` on `C⁴`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calc::{
    complexify_form, d_oneform, fornberg_weights, star, type_split_i, wedge, Field, Grid, OneForm,
    TwoForm,
};
use crate::error::{Result, WforgeError};
use crate::meancurv::{HopfFieldPair, SField};
use crate::quat::{
    complexify, complexify_mat, decomplexify, eigenprojections, right_j, ComplexMat4, ComplexVec4,
    QuatVec2,
};
pub use crate::tolerances::{BLOWUP_NORM, SPANNING_MIN};

/// `A` split into its `I`-types, ready to assemble `ω^λ`.
#[derive(Debug, Clone)]
pub struct ConnectionFamily {
    pub s: SField,
    pub a: OneForm<crate::quat::QuatMat2>,
    pub a10: OneForm<ComplexMat4>,
    pub a01: OneForm<ComplexMat4>,
    /// `sup |dS|`, the scale of scale-free curvature residuals.
    pub ds_scale: f64,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn check_lambda(lambda: Complex64) -> Result<()> {
    if lambda.norm() < 1e-300 || !lambda.is_finite() {
        Err(WforgeError::LambdaZero)
    } else {
        Ok(())
    }
}

impl ConnectionFamily {
    pub fn new(s: &SField, hp: &HopfFieldPair) -> Self {
        let (a10, a01) = type_split_i(&complexify_form(&hp.a));
        Self {
            s: s.clone(),
            a: hp.a.clone(),
            a10,
            a01,
            ds_scale: hp.ds.sup_norm(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.s.grid()
    }

    /// `ω^λ = (λ−1)A^(1,0) + (λ⁻¹−1)A^(0,1)`.
    pub fn omega(&self, lambda: Complex64) -> Result<OneForm<ComplexMat4>> {
        check_lambda(lambda)?;
        let (p, q) = (lambda - 1.0, lambda.inv() - 1.0);
        Ok(self.a10.zip_map(&self.a01, |u, v| u * p + v * q))
    }

    /// `d^λφ = dφ + ω^λφ`, returned through the vector identification
    /// `C⁴ ≅ H²`.
    pub fn dlambda_apply(
        &self,
        lambda: Complex64,
        phi: &Field<QuatVec2>,
    ) -> Result<OneForm<QuatVec2>> {
        let w = self.omega(lambda)?;
        let dphi = crate::calc::d_field(phi)?;
        let apply = |m: &ComplexMat4, k: usize, d: &QuatVec2| {
            decomplexify(&(complexify(*d) + m * complexify(phi.data[k])))
        };
        Ok(OneForm {
            grid: dphi.grid,
            x: (0..dphi.grid.len())
                .map(|k| apply(&w.x[k], k, &dphi.x[k]))
                .collect(),
            y: (0..dphi.grid.len())
                .map(|k| apply(&w.y[k], k, &dphi.y[k]))
                .collect(),
        })
    }

    /// `R^λ = dω^λ + ω^λ ∧ ω^λ`, evaluated on `(∂x, ∂y)`.
    pub fn curvature(&self, lambda: Complex64) -> Result<TwoForm<ComplexMat4>> {
        let w = self.omega(lambda)?;
        let dw = d_oneform(&w);
        let ww = wedge(&w, &w, |a, b| a * b);
        Ok(TwoForm {
            grid: w.grid,
            data: dw.data.iter().zip(&ww.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// `(d*A) S ((λ−1)π₁ + (λ⁻¹−1)π₂)` with `(π₁, π₂) = (π_E⊥, π_E)` when
    /// `alt_order` is false and `(π_E, π_E⊥)` otherwise, where
    /// `π_E = ½(1 − IS)`.
    fn curvature_formula(
        &self,
        lambda: Complex64,
        alt_order: bool,
    ) -> Result<TwoForm<ComplexMat4>> {
        let dsa = d_oneform(&star(&self.a));
        let (p, q) = (lambda - 1.0, lambda.inv() - 1.0);
        let data = (0..self.grid().len())
            .map(|k| {
                let s = &self.s.s.data[k];
                let (pe, pep) = eigenprojections(s)?;
                let (first, second) = if alt_order { (pe, pep) } else { (pep, pe) };
                Ok(complexify_mat(&dsa.data[k]) * complexify_mat(s) * (first * p + second * q))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TwoForm {
            grid: self.grid(),
            data,
        })
    }

    /// Compares the discrete curvature with its closed form.
    ///
    /// With `π_E = ½(1 − IS)` the curvature of `d^λ` is
    /// `(d*A) S ((λ−1)π_E⊥ + (λ⁻¹−1)π_E)`; the variant with the two
    /// projections exchanged is reported alongside as `residual_alt_projection_order`.
    pub fn curvature_identity(&self, lambda: Complex64) -> Result<CurvatureReport> {
        let r = self.curvature(lambda)?;
        let formula = self.curvature_formula(lambda, false)?;
        let alt = self.curvature_formula(lambda, true)?;
        let g = self.grid();
        let band = crate::calc::boundary_band(&g, crate::meancurv::HARMONICITY_LAYERS);
        let sup = r.sup_norm();
        let rel = |x: f64| if sup > 0.0 { x / sup } else { x };
        let diff = r.sub(&formula);
        let scaled = if self.ds_scale > 0.0 {
            g.chart_scale() * crate::calc::interior_sup(&g, &diff.data, band) / self.ds_scale
        } else {
            0.0
        };
        Ok(CurvatureReport {
            lambda: (lambda.re, lambda.im),
            sup_curvature: sup,
            sup_curvature_interior: crate::calc::interior_sup(&g, &r.data, band),
            sup_formula: formula.sup_norm(),
            residual: rel(diff.sup_norm()),
            residual_scaled: scaled,
            residual_alt_projection_order: rel(r.sub(&alt).sup_norm()),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct CurvatureReport {
    pub lambda: (f64, f64),
    /// `sup |R^λ(∂x, ∂y)|` of the discrete curvature.
    pub sup_curvature: f64,
    /// Same, over vertices outside the boundary band.
    pub sup_curvature_interior: f64,
    pub sup_formula: f64,
    /// `sup |R^λ − (d*A)S((λ−1)π_E⊥ + (λ⁻¹−1)π_E)| / sup |R^λ|`.
    pub residual: f64,
    /// `ℓ sup |R^λ − formula| / sup |dS|` over the interior, normalized like
    /// the harmonicity residual; meaningful also when `R^λ ≈ 0`.
    pub residual_scaled: f64,
    /// Same with the projections in the order `(π_E, π_E⊥)`.
    pub residual_alt_projection_order: f64,
}

/// Where the propagator is anchored and whether a torus grid may be cut open.
#[derive(Debug, Clone, Copy, Default)]
pub struct TransportOptions {
    /// Defaults to the grid center.
    pub basepoint: Option<(usize, usize)>,
    /// Solve on the cut fundamental square of a torus grid; the sections are
    /// then discontinuous across the cut unless the monodromy is trivial.
    pub allow_torus: bool,
}

/// Two `d^μ`-parallel sections spanning `W_μ`.
#[derive(Debug, Clone)]
pub struct ParallelFrame {
    pub psi1: Field<QuatVec2>,
    pub psi2: Field<QuatVec2>,
    pub mu: Complex64,
    pub basepoint: (usize, usize),
    /// `sup |Φ_rows − Φ_cols| / sup |Φ_rows|` for the propagators of the two
    /// sweep orders.
    pub path_independence_residual: f64,
    /// Propagator from the basepoint, `ψ_l = Φ·init_l` in `C⁴`.
    pub propagator: Field<ComplexMat4>,
}

/// Values of `ω` at edge midpoints along one axis, by Lagrange interpolation
/// on a window as wide as the derivative stencil (at least four points).
fn midpoints(grid: &Grid, w: &[ComplexMat4], along_x: bool) -> Vec<ComplexMat4> {
    let (n, periodic) = if along_x {
        (grid.nx, grid.periodic_x)
    } else {
        (grid.ny, grid.periodic_y)
    };
    let m = grid.stencil.order().max(4);
    let weights: Vec<(Vec<usize>, Vec<f64>)> = (0..n)
        .map(|i| {
            let (idx, xs): (Vec<usize>, Vec<f64>) = if periodic {
                (0..m)
                    .map(|s| {
                        let off = s as isize - (m as isize / 2 - 1);
                        (
                            (i as isize + off).rem_euclid(n as isize) as usize,
                            off as f64,
                        )
                    })
                    .unzip()
            } else {
                let start = (i + 1).saturating_sub(m / 2).min(n.saturating_sub(m));
                (start..start + m.min(n))
                    .map(|s| (s, s as f64 - i as f64))
                    .unzip()
            };
            (idx, fornberg_weights(0.5, &xs, 0))
        })
        .collect();
    (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = grid.ij(k);
            let (pos, wt) = if along_x { &weights[i] } else { &weights[j] };
            pos.iter()
                .zip(wt)
                .fold(ComplexMat4::zeros(), |acc, (&p, &c)| {
                    let kk = if along_x {
                        grid.idx(p, j)
                    } else {
                        grid.idx(i, p)
                    };
                    acc + w[kk] * Complex64::new(c, 0.0)
                })
        })
        .collect()
}

/// RK4 propagator of `dΦ/ds = −ω(s)Φ` across one edge of signed length `h`.
fn edge_propagator(w0: &ComplexMat4, wm: &ComplexMat4, w1: &ComplexMat4, h: f64) -> ComplexMat4 {
    let id = ComplexMat4::identity();
    let hc = Complex64::new(h, 0.0);
    let half = Complex64::new(h / 2.0, 0.0);
    let k1 = -w0;
    let k2 = -(wm * (id + k1 * half));
    let k3 = -(wm * (id + k2 * half));
    let k4 = -(w1 * (id + k3 * hc));
    id + (k1 + k2 * c(2.0) + k3 * c(2.0) + k4) * (hc / 6.0)
}

/// Precomputed edge propagators of `d^μ`.
struct EdgeTable {
    grid: Grid,
    /// `fwd_x[k]` carries `Φ` from vertex `(i, j)` to `(i+1, j)` (wrapping on
    /// periodic axes); the reverse edge uses its inverse-direction RK4 step.
    fwd_x: Vec<ComplexMat4>,
    bwd_x: Vec<ComplexMat4>,
    fwd_y: Vec<ComplexMat4>,
    bwd_y: Vec<ComplexMat4>,
}

impl EdgeTable {
    fn new(w: &OneForm<ComplexMat4>) -> Self {
        let g = w.grid;
        let mx = midpoints(&g, &w.x, true);
        let my = midpoints(&g, &w.y, false);
        let build = |along_x: bool, forward: bool| -> Vec<ComplexMat4> {
            (0..g.len())
                .into_par_iter()
                .map(|k| {
                    let (i, j) = g.ij(k);
                    let next = if along_x {
                        g.idx((i + 1) % g.nx, j)
                    } else {
                        g.idx(i, (j + 1) % g.ny)
                    };
                    let (form, mid, h) = if along_x {
                        (&w.x, &mx, g.hx)
                    } else {
                        (&w.y, &my, g.hy)
                    };
                    if forward {
                        edge_propagator(&form[k], &mid[k], &form[next], h)
                    } else {
                        edge_propagator(&form[next], &mid[k], &form[k], -h)
                    }
                })
                .collect()
        };
        Self {
            grid: g,
            fwd_x: build(true, true),
            bwd_x: build(true, false),
            fwd_y: build(false, true),
            bwd_y: build(false, false),
        }
    }

    /// Propagator along the x-edge from `(i, j)` to `(i ± 1, j)`.
    fn step_x(&self, i: usize, j: usize, forward: bool) -> &ComplexMat4 {
        let g = &self.grid;
        if forward {
            &self.fwd_x[g.idx(i, j)]
        } else {
            &self.bwd_x[g.idx((i + g.nx - 1) % g.nx, j)]
        }
    }

    fn step_y(&self, i: usize, j: usize, forward: bool) -> &ComplexMat4 {
        let g = &self.grid;
        if forward {
            &self.fwd_y[g.idx(i, j)]
        } else {
            &self.bwd_y[g.idx(i, (j + g.ny - 1) % g.ny)]
        }
    }
}

fn check_blowup(grid: &Grid, k: usize, m: &ComplexMat4) -> Result<()> {
    let norm = m.norm();
    if !norm.is_finite() || norm > BLOWUP_NORM {
        return Err(WforgeError::BlowUp {
            vertex: grid.ij(k),
            norm,
        });
    }
    Ok(())
}

/// Transport along one line of vertices starting from `start` in both
/// directions. `step(p, forward)` is the propagator leaving position `p`.
fn sweep_line<'a, F>(n: usize, start: usize, phi0: ComplexMat4, step: F) -> Vec<ComplexMat4>
where
    F: Fn(usize, bool) -> &'a ComplexMat4,
{
    let mut out = vec![ComplexMat4::zeros(); n];
    out[start] = phi0;
    for p in start..n - 1 {
        out[p + 1] = step(p, true) * out[p];
    }
    for p in (1..=start).rev() {
        out[p - 1] = step(p, false) * out[p];
    }
    out
}

/// Propagator field: spine along `first` axis through the basepoint, then
/// lines along the other axis.
fn sweep(table: &EdgeTable, base: (usize, usize), rows_first: bool) -> Result<Vec<ComplexMat4>> {
    let g = table.grid;
    let id = ComplexMat4::identity();
    let mut field = vec![ComplexMat4::zeros(); g.len()];
    if rows_first {
        let spine = sweep_line(g.nx, base.0, id, |p, f| table.step_x(p, base.1, f));
        let cols: Vec<Vec<ComplexMat4>> = (0..g.nx)
            .into_par_iter()
            .map(|i| sweep_line(g.ny, base.1, spine[i], |p, f| table.step_y(i, p, f)))
            .collect();
        for (i, col) in cols.into_iter().enumerate() {
            for (j, m) in col.into_iter().enumerate() {
                field[g.idx(i, j)] = m;
            }
        }
    } else {
        let spine = sweep_line(g.ny, base.1, id, |p, f| table.step_y(base.0, p, f));
        let rows: Vec<Vec<ComplexMat4>> = (0..g.ny)
            .into_par_iter()
            .map(|j| sweep_line(g.nx, base.0, spine[j], |p, f| table.step_x(p, j, f)))
            .collect();
        for (j, row) in rows.into_iter().enumerate() {
            for (i, m) in row.into_iter().enumerate() {
                field[g.idx(i, j)] = m;
            }
        }
    }
    for (k, m) in field.iter().enumerate() {
        check_blowup(&g, k, m)?;
    }
    Ok(field)
}

/// Integrates `d^μψ = 0` from `init` at the basepoint.
pub fn parallel_sections(
    fam: &ConnectionFamily,
    mu: Complex64,
    init: [QuatVec2; 2],
    opts: TransportOptions,
) -> Result<ParallelFrame> {
    let g = fam.grid();
    if (g.periodic_x || g.periodic_y) && !opts.allow_torus {
        return Err(WforgeError::NotSimplyConnected);
    }
    let base = opts.basepoint.unwrap_or_else(|| g.center());
    if base.0 >= g.nx || base.1 >= g.ny {
        return Err(WforgeError::BadSpec(format!(
            "basepoint {base:?} outside the {}x{} grid",
            g.nx, g.ny
        )));
    }
    let table = EdgeTable::new(&fam.omega(mu)?);
    let rows = sweep(&table, base, true)?;
    let cols = sweep(&table, base, false)?;
    let scale = rows.iter().map(|m| m.norm()).fold(0.0, f64::max);
    let diff = rows
        .iter()
        .zip(&cols)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let (c1, c2) = (complexify(init[0]), complexify(init[1]));
    let section = |v: &ComplexVec4| Field {
        grid: g,
        data: rows.iter().map(|m| decomplexify(&(m * v))).collect(),
    };
    Ok(ParallelFrame {
        psi1: section(&c1),
        psi2: section(&c2),
        mu,
        basepoint: base,
        path_independence_residual: diff / scale,
        propagator: Field {
            grid: g,
            data: rows,
        },
    })
}

/// Smallest normalized `|det[ψ₁, ψ₂, ψ₁j, ψ₂j]|` over the grid, with the
/// vertex where it is attained. A margin of 1 means orthonormal columns.
pub fn spanning_margin(frame: &ParallelFrame) -> (f64, (usize, usize)) {
    let g = frame.psi1.grid;
    (0..g.len())
        .map(|k| {
            (
                vertex_margin(frame.psi1.data[k], frame.psi2.data[k]),
                g.ij(k),
            )
        })
        .fold(
            (f64::INFINITY, (0, 0)),
            |best, c| if c.0 < best.0 { c } else { best },
        )
}

pub fn vertex_margin(p1: QuatVec2, p2: QuatVec2) -> f64 {
    let (a, b) = (complexify(p1), complexify(p2));
    let cols = [a, b, right_j(&a), right_j(&b)];
    let m = ComplexMat4::from_columns(&cols);
    let prod: f64 = cols.iter().map(|v| v.norm()).product();
    if prod == 0.0 {
        0.0
    } else {
        m.determinant().norm() / prod
    }
}

/// Passes when `W_μ ∩ W_μ j = {0}` at every vertex (margin above
/// [`SPANNING_MIN`]).
pub fn spanning_check(frame: &ParallelFrame) -> Result<f64> {
    let (margin, vertex) = spanning_margin(frame);
    if margin > SPANNING_MIN {
        Ok(margin)
    } else {
        Err(WforgeError::SpanningFailed { vertex, margin })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cycle {
    X,
    Y,
}

/// Path-ordered propagator of `d^λ` once around a torus cycle through
/// `basepoint` (the grid center by default).
pub fn monodromy(
    fam: &ConnectionFamily,
    lambda: Complex64,
    cycle: Cycle,
    basepoint: Option<(usize, usize)>,
) -> Result<ComplexMat4> {
    let g = fam.grid();
    let periodic = match cycle {
        Cycle::X => g.periodic_x,
        Cycle::Y => g.periodic_y,
    };
    if !periodic {
        return Err(WforgeError::BadSpec(
            "monodromy needs a periodic direction".into(),
        ));
    }
    let (i0, j0) = basepoint.unwrap_or_else(|| g.center());
    let table = EdgeTable::new(&fam.omega(lambda)?);
    let mut m = ComplexMat4::identity();
    match cycle {
        Cycle::X => {
            for s in 0..g.nx {
                m = table.step_x((i0 + s) % g.nx, j0, true) * m;
            }
        }
        Cycle::Y => {
            for s in 0..g.ny {
                m = table.step_y(i0, (j0 + s) % g.ny, true) * m;
            }
        }
    }
    Ok(m)
}

/// Row-major `[[re, im]; 16]` view of a complex 4×4, for reports.
pub fn matrix_entries(m: &ComplexMat4) -> Vec<[f64; 2]> {
    (0..4)
        .flat_map(|r| (0..4).map(move |c| (r, c)))
        .map(|(r, c)| [m[(r, c)].re, m[(r, c)].im])
        .collect()
}

/// Summary written by the `flatness` command.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct FlatnessReport {
    pub mu: (f64, f64),
    pub path_independence_residual: Option<f64>,
    pub spanning_margin: Option<f64>,
    pub monodromy_x: Option<Vec<[f64; 2]>>,
    pub monodromy_y: Option<Vec<[f64; 2]>>,
    /// `|M_x M_y − M_y M_x| / (|M_x| |M_y|)` on tori.
    pub monodromy_commutator: Option<f64>,
    pub curvature: Vec<CurvatureReport>,
}

/// Inputs of the `flatness` command.
#[derive(Debug, Clone)]
pub struct FlatnessOptions {
    /// Spectral parameters whose curvature is reported.
    pub lambdas: Vec<Complex64>,
    /// Parameter of the parallel frame (patches) or monodromy (tori).
    pub mu: Complex64,
    pub basepoint: Option<(usize, usize)>,
}

/// Curvature of `d^λ` for every requested `λ`; on patches a `d^μ`-parallel
/// frame from the standard basis, on tori the two cycle monodromies of `d^μ`.
pub fn flatness(s: &SField, hp: &HopfFieldPair, opts: &FlatnessOptions) -> Result<FlatnessReport> {
    let fam = ConnectionFamily::new(s, hp);
    let curvature = opts
        .lambdas
        .iter()
        .map(|&l| fam.curvature_identity(l))
        .collect::<Result<Vec<_>>>()?;
    let g = fam.grid();
    let mut report = FlatnessReport {
        mu: (opts.mu.re, opts.mu.im),
        path_independence_residual: None,
        spanning_margin: None,
        monodromy_x: None,
        monodromy_y: None,
        monodromy_commutator: None,
        curvature,
    };
    if g.periodic_x && g.periodic_y {
        let mx = monodromy(&fam, opts.mu, Cycle::X, opts.basepoint)?;
        let my = monodromy(&fam, opts.mu, Cycle::Y, opts.basepoint)?;
        report.monodromy_commutator = Some((mx * my - my * mx).norm() / (mx.norm() * my.norm()));
        report.monodromy_x = Some(matrix_entries(&mx));
        report.monodromy_y = Some(matrix_entries(&my));
    } else if !g.periodic_x && !g.periodic_y {
        use crate::quat::Quaternion;
        let init = [
            QuatVec2::new(Quaternion::ONE, Quaternion::ZERO),
            QuatVec2::new(Quaternion::ZERO, Quaternion::ONE),
        ];
        let frame = parallel_sections(
            &fam,
            opts.mu,
            init,
            TransportOptions {
                basepoint: opts.basepoint,
                allow_torus: false,
            },
        )?;
        report.path_independence_residual = Some(frame.path_independence_residual);
        report.spanning_margin = Some(spanning_margin(&frame).0);
    }
    Ok(report)
}
