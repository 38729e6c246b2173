//! Discrete calculus on a conformally parametrized grid.
//!
//! The chart complex structure is fixed: `J ∂x = ∂y`, `J ∂y = −∂x`. One-forms
//! are stored collocated at the vertices as `(ω(∂x), ω(∂y))` and two-forms as
//! `σ(∂x, ∂y)`. Derivatives use centered finite differences of a configurable
//! order; non-periodic directions switch to one-sided stencils of the same
//! order near the boundary.

use std::ops::{Add, Sub};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, WforgeError};
use crate::quat::{
    check_complex_structure, complexify_mat, real_trace, ComplexMat4, ComplexVec4, QuatMat2,
    QuatVec2, Quaternion,
};

pub const MIN_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Torus,
    Patch,
}

/// Accuracy order of the difference stencils.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StencilOrder {
    Second,
    Fourth,
    Sixth,
    #[default]
    Eighth,
}

impl StencilOrder {
    pub fn order(self) -> usize {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
            StencilOrder::Sixth => 6,
            StencilOrder::Eighth => 8,
        }
    }

    pub fn from_order(p: usize) -> Option<Self> {
        match p {
            2 => Some(StencilOrder::Second),
            4 => Some(StencilOrder::Fourth),
            6 => Some(StencilOrder::Sixth),
            8 => Some(StencilOrder::Eighth),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x0: f64,
    pub y0: f64,
    pub periodic_x: bool,
    pub periodic_y: bool,
    pub topology: Topology,
    pub stencil: StencilOrder,
}

impl Grid {
    /// Doubly periodic grid on `[x0, x0 + lx) × [y0, y0 + ly)`.
    pub fn torus(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::check(nx, ny)?;
        Ok(Self {
            nx,
            ny,
            hx: lx / nx as f64,
            hy: ly / ny as f64,
            x0: 0.0,
            y0: 0.0,
            periodic_x: true,
            periodic_y: true,
            topology: Topology::Torus,
            stencil: StencilOrder::default(),
        })
    }

    /// Simply connected grid on the closed rectangle `[x0, x1] × [y0, y1]`.
    pub fn patch(nx: usize, ny: usize, xr: (f64, f64), yr: (f64, f64)) -> Result<Self> {
        Self::check(nx, ny)?;
        Ok(Self {
            nx,
            ny,
            hx: (xr.1 - xr.0) / (nx - 1) as f64,
            hy: (yr.1 - yr.0) / (ny - 1) as f64,
            x0: xr.0,
            y0: yr.0,
            periodic_x: false,
            periodic_y: false,
            topology: Topology::Patch,
            stencil: StencilOrder::default(),
        })
    }

    pub fn with_stencil(mut self, stencil: StencilOrder) -> Self {
        self.stencil = stencil;
        self
    }

    fn check(nx: usize, ny: usize) -> Result<()> {
        if nx < MIN_SAMPLES || ny < MIN_SAMPLES {
            return Err(WforgeError::GridTooSmall {
                nx,
                ny,
                min: MIN_SAMPLES,
            });
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        Self::check(self.nx, self.ny)?;
        let min = self.stencil.order() + BOUNDARY_EXTRA + 1;
        if self.nx < min || self.ny < min {
            return Err(WforgeError::GridTooSmall {
                nx: self.nx,
                ny: self.ny,
                min,
            });
        }
        if self.topology == Topology::Torus && !(self.periodic_x && self.periodic_y) {
            return Err(WforgeError::BadSpec(
                "torus grid must be periodic in both directions".into(),
            ));
        }
        if self.topology == Topology::Patch && (self.periodic_x || self.periodic_y) {
            return Err(WforgeError::BadSpec(
                "patch grid must not be periodic".into(),
            ));
        }
        Ok(())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.hx
    }

    #[inline]
    pub fn y(&self, j: usize) -> f64 {
        self.y0 + j as f64 * self.hy
    }

    pub fn extent(&self) -> (f64, f64) {
        let lx = if self.periodic_x {
            self.nx as f64
        } else {
            (self.nx - 1) as f64
        } * self.hx;
        let ly = if self.periodic_y {
            self.ny as f64
        } else {
            (self.ny - 1) as f64
        } * self.hy;
        (lx, ly)
    }

    /// Length scale of the chart used to make residuals dimensionless.
    pub fn chart_scale(&self) -> f64 {
        let (lx, ly) = self.extent();
        lx.min(ly) / (2.0 * std::f64::consts::PI)
    }

    /// Largest grid spacing.
    pub fn h(&self) -> f64 {
        self.hx.max(self.hy)
    }

    pub fn center(&self) -> (usize, usize) {
        (self.nx / 2, self.ny / 2)
    }

    /// Same domain with different sample counts.
    pub fn resampled(&self, nx: usize, ny: usize) -> Result<Self> {
        let (lx, ly) = self.extent();
        let mut g = match self.topology {
            Topology::Torus => Self::torus(nx, ny, lx, ly)?,
            Topology::Patch => {
                Self::patch(nx, ny, (self.x0, self.x0 + lx), (self.y0, self.y0 + ly))?
            }
        };
        g.x0 = self.x0;
        g.y0 = self.y0;
        g.stencil = self.stencil;
        Ok(g)
    }
}

/// Values that can live on grid vertices.
pub trait Sample: Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> {
    fn zero() -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm(&self) -> f64;
    fn components(&self, out: &mut Vec<f64>);
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn components(&self, out: &mut Vec<f64>) {
        out.push(*self);
    }
}

impl Sample for Quaternion {
    fn zero() -> Self {
        Quaternion::ZERO
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(&self) -> f64 {
        Quaternion::norm(*self)
    }
    fn components(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.to_array());
    }
}

impl Sample for QuatVec2 {
    fn zero() -> Self {
        QuatVec2::ZERO
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(&self) -> f64 {
        QuatVec2::norm(*self)
    }
    fn components(&self, out: &mut Vec<f64>) {
        for q in self.0 {
            out.extend_from_slice(&q.to_array());
        }
    }
}

impl Sample for QuatMat2 {
    fn zero() -> Self {
        QuatMat2::ZERO
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(&self) -> f64 {
        QuatMat2::norm(self)
    }
    fn components(&self, out: &mut Vec<f64>) {
        for q in self.0.iter().flatten() {
            out.extend_from_slice(&q.to_array());
        }
    }
}

impl Sample for ComplexMat4 {
    fn zero() -> Self {
        ComplexMat4::zeros()
    }
    fn scale(self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
    fn norm(&self) -> f64 {
        nalgebra::Matrix::norm(self)
    }
    fn components(&self, out: &mut Vec<f64>) {
        for z in self.iter() {
            out.push(z.re);
            out.push(z.im);
        }
    }
}

impl Sample for ComplexVec4 {
    fn zero() -> Self {
        ComplexVec4::zeros()
    }
    fn scale(self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }
    fn norm(&self) -> f64 {
        nalgebra::Matrix::norm(self)
    }
    fn components(&self, out: &mut Vec<f64>) {
        for z in self.iter() {
            out.push(z.re);
            out.push(z.im);
        }
    }
}

/// Multiplication by the complex unit of the `(H², I) = C⁴` picture.
pub trait TimesI: Sample {
    fn times_i(self) -> Self;
}

impl TimesI for ComplexMat4 {
    fn times_i(self) -> Self {
        self * Complex64::i()
    }
}

impl TimesI for ComplexVec4 {
    fn times_i(self) -> Self {
        self * Complex64::i()
    }
}

/// One value per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Field<T> {
    pub grid: Grid,
    pub data: Vec<T>,
}

/// `(ω(∂x), ω(∂y))` per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct OneForm<T> {
    pub grid: Grid,
    pub x: Vec<T>,
    pub y: Vec<T>,
}

/// `σ(∂x, ∂y)` per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoForm<T> {
    pub grid: Grid,
    pub data: Vec<T>,
}

fn par_build<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, f: F) -> Vec<T> {
    (0..n).into_par_iter().map(f).collect()
}

fn sup<T: Sample>(v: &[T]) -> f64 {
    v.iter().map(|t| t.norm()).fold(0.0, f64::max)
}

impl<T: Sample> Field<T> {
    pub fn from_fn<F: Fn(f64, f64) -> T + Sync + Send>(grid: Grid, f: F) -> Self {
        let data = par_build(grid.len(), |k| {
            let (i, j) = grid.ij(k);
            f(grid.x(i), grid.y(j))
        });
        Self { grid, data }
    }

    pub fn constant(grid: Grid, value: T) -> Self {
        Self {
            grid,
            data: vec![value; grid.len()],
        }
    }

    pub fn map<U: Sample, F: Fn(&T) -> U + Sync + Send>(&self, f: F) -> Field<U> {
        Field {
            grid: self.grid,
            data: self.data.par_iter().map(f).collect(),
        }
    }

    pub fn zip_map<U: Sample, V: Sample, F: Fn(&T, &U) -> V + Sync + Send>(
        &self,
        other: &Field<U>,
        f: F,
    ) -> Field<V> {
        Field {
            grid: self.grid,
            data: self
                .data
                .par_iter()
                .zip(other.data.par_iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[self.grid.idx(i, j)]
    }

    pub fn sup_norm(&self) -> f64 {
        sup(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        let mut buf = Vec::new();
        self.data.iter().all(|v| {
            buf.clear();
            v.components(&mut buf);
            buf.iter().all(|c| c.is_finite())
        })
    }
}

impl<T: Sample> OneForm<T> {
    pub fn zero(grid: Grid) -> Self {
        Self {
            grid,
            x: vec![T::zero(); grid.len()],
            y: vec![T::zero(); grid.len()],
        }
    }

    pub fn map<U: Sample, F: Fn(&T) -> U + Sync + Send>(&self, f: F) -> OneForm<U> {
        OneForm {
            grid: self.grid,
            x: self.x.par_iter().map(&f).collect(),
            y: self.y.par_iter().map(&f).collect(),
        }
    }

    /// Applies a pointwise operator that may depend on the vertex index.
    pub fn map_indexed<U: Sample, F: Fn(usize, &T) -> U + Sync + Send>(&self, f: F) -> OneForm<U> {
        OneForm {
            grid: self.grid,
            x: self
                .x
                .par_iter()
                .enumerate()
                .map(|(k, v)| f(k, v))
                .collect(),
            y: self
                .y
                .par_iter()
                .enumerate()
                .map(|(k, v)| f(k, v))
                .collect(),
        }
    }

    pub fn zip_map<U: Sample, V: Sample, F: Fn(&T, &U) -> V + Sync + Send>(
        &self,
        other: &OneForm<U>,
        f: F,
    ) -> OneForm<V> {
        OneForm {
            grid: self.grid,
            x: self
                .x
                .par_iter()
                .zip(other.x.par_iter())
                .map(|(a, b)| f(a, b))
                .collect(),
            y: self
                .y
                .par_iter()
                .zip(other.y.par_iter())
                .map(|(a, b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| *a + *b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| *a - *b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|a| a.scale(s))
    }

    /// Pointwise `max(|ω(∂x)|, |ω(∂y)|)`.
    pub fn sup_norm(&self) -> f64 {
        sup(&self.x).max(sup(&self.y))
    }

    pub fn pointwise_norm(&self, k: usize) -> f64 {
        self.x[k].norm().max(self.y[k].norm())
    }
}

impl<T: Sample> TwoForm<T> {
    pub fn sup_norm(&self) -> f64 {
        sup(&self.data)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            grid: self.grid,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| *a - *b)
                .collect(),
        }
    }
}

/// Finite-difference weights for the `m`-th derivative at `z` on the nodes
/// `xs` (Fornberg's recursion).
pub fn fornberg_weights(z: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Extra points in one-sided boundary windows (beyond the interior width).
pub const BOUNDARY_EXTRA: usize = 1;

/// Sparse first-derivative operator along one axis.
#[derive(Debug, Clone)]
pub(crate) struct AxisStencil {
    rows: Vec<Vec<(usize, f64)>>,
}

impl AxisStencil {
    pub(crate) fn new(n: usize, h: f64, periodic: bool, order: StencilOrder) -> Self {
        let p = order.order();
        let half = p / 2;
        let rows = (0..n)
            .map(|i| {
                if periodic {
                    let xs: Vec<f64> = (0..=p).map(|s| s as f64 - half as f64).collect();
                    let w = fornberg_weights(0.0, &xs, 1);
                    (0..=p)
                        .filter(|&s| s != half)
                        .map(|s| ((i + n + s - half) % n, w[s] / h))
                        .collect()
                } else {
                    // Rows near the boundary use a wider one-sided window so
                    // repeated differentiation does not lose accuracy there.
                    let (start, width) = if i >= half && i + half < n {
                        (i - half, p)
                    } else if i < half {
                        (0, p + BOUNDARY_EXTRA)
                    } else {
                        (n - 1 - p - BOUNDARY_EXTRA, p + BOUNDARY_EXTRA)
                    };
                    let xs: Vec<f64> = (start..=start + width).map(|s| s as f64).collect();
                    let w = fornberg_weights(i as f64, &xs, 1);
                    (0..=width)
                        .filter(|&s| w[s] != 0.0)
                        .map(|s| (start + s, w[s] / h))
                        .collect()
                }
            })
            .collect();
        Self { rows }
    }

    #[inline]
    pub(crate) fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }
}

pub(crate) fn stencils(grid: &Grid) -> (AxisStencil, AxisStencil) {
    (
        AxisStencil::new(grid.nx, grid.hx, grid.periodic_x, grid.stencil),
        AxisStencil::new(grid.ny, grid.hy, grid.periodic_y, grid.stencil),
    )
}

fn partial_x<T: Sample>(grid: &Grid, sx: &AxisStencil, data: &[T]) -> Vec<T> {
    par_build(grid.len(), |k| {
        let (i, j) = grid.ij(k);
        sx.row(i).iter().fold(T::zero(), |acc, &(ii, w)| {
            acc + data[grid.idx(ii, j)].scale(w)
        })
    })
}

fn partial_y<T: Sample>(grid: &Grid, sy: &AxisStencil, data: &[T]) -> Vec<T> {
    par_build(grid.len(), |k| {
        let (i, j) = grid.ij(k);
        sy.row(j).iter().fold(T::zero(), |acc, &(jj, w)| {
            acc + data[grid.idx(i, jj)].scale(w)
        })
    })
}

/// Exterior derivative of a function.
pub fn d_field<T: Sample>(f: &Field<T>) -> Result<OneForm<T>> {
    let g = f.grid;
    g.validate()?;
    let (sx, sy) = stencils(&g);
    Ok(OneForm {
        grid: g,
        x: partial_x(&g, &sx, &f.data),
        y: partial_y(&g, &sy, &f.data),
    })
}

/// `(*ω)(X) = ω(J X)`, i.e. `(*ω)_x = ω_y`, `(*ω)_y = −ω_x`.
pub fn star<T: Sample>(w: &OneForm<T>) -> OneForm<T> {
    OneForm {
        grid: w.grid,
        x: w.y.clone(),
        y: w.x.iter().map(|v| v.scale(-1.0)).collect(),
    }
}

/// `dω(∂x, ∂y) = ∂x ω_y − ∂y ω_x`.
pub fn d_oneform<T: Sample>(w: &OneForm<T>) -> TwoForm<T> {
    let g = w.grid;
    let (sx, sy) = stencils(&g);
    let a = partial_x(&g, &sx, &w.y);
    let b = partial_y(&g, &sy, &w.x);
    TwoForm {
        grid: g,
        data: a.into_iter().zip(b).map(|(p, q)| p - q).collect(),
    }
}

/// `(ω′, ω″) = (½(ω − S*ω), ½(ω + S*ω))`: the parts with `*ω′ = Sω′` and
/// `*ω″ = −Sω″`.
pub fn type_split_s(
    w: &OneForm<QuatMat2>,
    s: &Field<QuatMat2>,
) -> Result<(OneForm<QuatMat2>, OneForm<QuatMat2>)> {
    for m in &s.data {
        check_complex_structure(m)?;
    }
    let sw = star(w).map_indexed(|k, v| s.data[k] * *v);
    Ok((w.sub(&sw).scale(0.5), w.add(&sw).scale(0.5)))
}

/// `(ω^(1,0), ω^(0,1)) = (½(ω − I*ω), ½(ω + I*ω))` in the complex picture.
pub fn type_split_i<T: TimesI>(w: &OneForm<T>) -> (OneForm<T>, OneForm<T>) {
    let iw = star(w).map(|v| v.times_i());
    (w.sub(&iw).scale(0.5), w.add(&iw).scale(0.5))
}

/// Complexifies an endomorphism-valued one-form.
pub fn complexify_form(w: &OneForm<QuatMat2>) -> OneForm<ComplexMat4> {
    w.map(complexify_mat)
}

/// `⟨α ∧ β⟩(∂x, ∂y) = tr(α_x β_y − α_y β_x)` with the real trace.
pub fn wedge_trace(a: &OneForm<QuatMat2>, b: &OneForm<QuatMat2>) -> TwoForm<f64> {
    let data = par_build(a.grid.len(), |k| {
        real_trace(&(a.x[k] * b.y[k] - a.y[k] * b.x[k]))
    });
    TwoForm { grid: a.grid, data }
}

/// Pointwise `α ∧ β` for matrix-valued forms.
pub fn wedge<T, F>(a: &OneForm<T>, b: &OneForm<T>, mul: F) -> TwoForm<T>
where
    T: Sample,
    F: Fn(&T, &T) -> T + Sync + Send,
{
    let data = par_build(a.grid.len(), |k| {
        mul(&a.x[k], &b.y[k]) - mul(&a.y[k], &b.x[k])
    });
    TwoForm { grid: a.grid, data }
}

/// Width (in vertices) of the boundary band excluded from interior residuals
/// of quantities built from `layers` stacked derivatives: each one-sided
/// boundary row pollutes `p/2` further rows per differentiation. The band is
/// capped at a quarter of the shorter side so at least half of each
/// direction remains interior on coarse grids.
pub fn boundary_band(grid: &Grid, layers: usize) -> usize {
    let cap = |periodic: bool, n: usize| if periodic { usize::MAX } else { (n - 1) / 4 };
    (layers * grid.stencil.order() / 2)
        .min(cap(grid.periodic_x, grid.nx))
        .min(cap(grid.periodic_y, grid.ny))
}

/// Whether vertex `k` is at least `band` rows away from every patch edge.
pub fn is_interior(grid: &Grid, k: usize, band: usize) -> bool {
    let (i, j) = grid.ij(k);
    let inside = |p: bool, i: usize, n: usize| p || (i >= band && i + band < n);
    inside(grid.periodic_x, i, grid.nx) && inside(grid.periodic_y, j, grid.ny)
}

/// Sup norm over vertices at least `band` rows from the boundary.
pub fn interior_sup<T: Sample>(grid: &Grid, data: &[T], band: usize) -> f64 {
    data.iter()
        .enumerate()
        .filter(|(k, _)| is_interior(grid, *k, band))
        .map(|(_, v)| v.norm())
        .fold(0.0, f64::max)
}

/// Quadrature weight of a vertex (trapezoid on non-periodic boundaries).
pub fn quadrature_weight(grid: &Grid, i: usize, j: usize) -> f64 {
    let wx = if !grid.periodic_x && (i == 0 || i == grid.nx - 1) {
        0.5
    } else {
        1.0
    };
    let wy = if !grid.periodic_y && (j == 0 || j == grid.ny - 1) {
        0.5
    } else {
        1.0
    };
    wx * wy * grid.hx * grid.hy
}

/// `∫ σ` over the chart domain. Summation order is fixed (row by row).
pub fn integrate(s: &TwoForm<f64>) -> f64 {
    let g = s.grid;
    let rows: Vec<f64> = (0..g.ny)
        .into_par_iter()
        .map(|j| {
            (0..g.nx)
                .map(|i| s.data[g.idx(i, j)] * quadrature_weight(&g, i, j))
                .sum()
        })
        .collect();
    rows.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fornberg_central_weights() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 1);
        assert!((w[0] + 0.5).abs() < 1e-15 && w[1].abs() < 1e-15 && (w[2] - 0.5).abs() < 1e-15);
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let want = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn grid_too_small() {
        assert!(matches!(
            Grid::torus(4, 16, 1.0, 1.0),
            Err(WforgeError::GridTooSmall { .. })
        ));
    }

    #[test]
    fn constant_has_zero_derivative() {
        for stencil in [StencilOrder::Second, StencilOrder::Sixth] {
            let g = Grid::patch(12, 10, (0.0, 1.0), (-1.0, 2.0))
                .unwrap()
                .with_stencil(stencil);
            let f = Field::constant(g, 3.5);
            let df = d_field(&f).unwrap();
            assert!(df.sup_norm() < 1e-12);
        }
    }

    #[test]
    fn bilinear_is_exact() {
        let g = Grid::patch(16, 16, (-1.0, 1.0), (-1.0, 1.0))
            .unwrap()
            .with_stencil(StencilOrder::Second);
        let f = Field::from_fn(g, |x, y| x * y);
        let df = d_field(&f).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.ij(k);
            assert!((df.x[k] - g.y(j)).abs() < 1e-12);
            assert!((df.y[k] - g.x(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn star_squares_to_minus_one() {
        let g = Grid::torus(8, 8, 1.0, 1.0).unwrap();
        let w = OneForm {
            grid: g,
            x: vec![1.0; 64],
            y: vec![0.0; 64],
        };
        let sw = star(&w);
        assert!(sw.x.iter().all(|&v| v == 0.0) && sw.y.iter().all(|&v| v == -1.0));
        let w = OneForm {
            grid: g,
            x: (0..64).map(|k| k as f64).collect(),
            y: (0..64).map(|k| (k * k) as f64).collect(),
        };
        assert_eq!(star(&star(&w)), w.scale(-1.0));
    }

    #[test]
    fn area_form() {
        let g = Grid::patch(10, 10, (-1.0, 1.0), (0.0, 3.0)).unwrap();
        let w = OneForm {
            grid: g,
            x: (0..g.len()).map(|k| -g.y(g.ij(k).1) / 2.0).collect(),
            y: (0..g.len()).map(|k| g.x(g.ij(k).0) / 2.0).collect(),
        };
        let dw = d_oneform(&w);
        assert!(dw.data.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn integrate_constant_on_torus() {
        let g = Grid::torus(32, 24, 2.0 * PI, 2.0 * PI).unwrap();
        let one = TwoForm {
            grid: g,
            data: vec![1.0; g.len()],
        };
        assert!((integrate(&one) - 4.0 * PI * PI).abs() < 1e-12);
    }

    #[test]
    fn integrate_patch_uses_trapezoid() {
        let g = Grid::patch(11, 21, (0.0, 1.0), (0.0, 2.0)).unwrap();
        let lin = TwoForm {
            grid: g,
            data: (0..g.len()).map(|k| g.x(g.ij(k).0)).collect(),
        };
        assert!((integrate(&lin) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn type_split_i_idempotent() {
        let g = Grid::torus(8, 8, 1.0, 1.0).unwrap();
        let m = |s: f64| {
            ComplexMat4::from_fn(|r, c| Complex64::new(s * (r as f64 + 1.0), (c as f64) - s))
        };
        let w = OneForm {
            grid: g,
            x: vec![m(1.0); 64],
            y: vec![m(-0.5); 64],
        };
        let (w10, w01) = type_split_i(&w);
        assert!(w10.add(&w01).sub(&w).sup_norm() < 1e-14);
        let (a, b) = type_split_i(&w10);
        assert!(a.sub(&w10).sup_norm() < 1e-14);
        assert!(b.sup_norm() < 1e-14);
        let zero = OneForm::<ComplexMat4>::zero(g);
        let (a, b) = type_split_i(&zero);
        assert_eq!(a.sup_norm() + b.sup_norm(), 0.0);
    }
}
