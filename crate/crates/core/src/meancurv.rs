//! The conformal Gauss map (mean curvature sphere congruence) `S` of a
//! conformal immersion, its Hopf fields `A, Q`, the Willmore energy in both
//! the Hopf-field and the classical curvature form, and the residuals of the
//! defining identities.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::calc::{
    d_field, d_oneform, integrate, interior_sup, star, type_split_s, wedge_trace, Field, Grid,
    OneForm, Sample, TwoForm,
};
use crate::error::{Result, WforgeError};
use crate::immersion::{lift, normals, AffineImmersion, LineBundle, NormalPair};
use crate::quat::{check_complex_structure, QuatMat2, QuatVec2, Quaternion};
pub use crate::tolerances::{CONFORMALITY_LIMIT, CONSTANT_CONGRUENCE, HARMONICITY_LAYERS};

/// A complex structure `S` on the trivial H² bundle (`S² = −1` pointwise).
#[derive(Debug, Clone)]
pub struct SField {
    pub s: Field<QuatMat2>,
}

/// Hopf fields together with the tangent-projected differential `dS` they
/// were built from.
#[derive(Debug, Clone)]
pub struct HopfFieldPair {
    pub a: OneForm<QuatMat2>,
    pub q: OneForm<QuatMat2>,
    pub ds: OneForm<QuatMat2>,
}

impl SField {
    pub fn grid(&self) -> Grid {
        self.s.grid
    }

    pub fn validate(&self) -> Result<()> {
        self.s.data.iter().try_for_each(check_complex_structure)
    }
}

fn rel(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

/// Builds `S = G [[N, 0], [w, −R]] G⁻¹` with `G = [[1, f], [0, 1]]`.
///
/// The entry `w` is fixed pointwise by `L ⊂ ker Q`, which in the `G`-frame
/// reads `*(dR + w df) = −R(dR + w df)`, together with `wN = Rw` (needed for
/// `S² = −1`). Writing `v = w f_x`, the two conditions say that `v`
/// anticommutes with `R` and `2Rv = −(R_y + R R_x)`, a real-linear 4x4
/// system with the unique solution `w = ½ R c⊥ f_x⁻¹`, where `c⊥` is the part
/// of `R_y + R R_x` anticommuting with `R`.
pub fn conformal_gauss_map(f: &AffineImmersion, nr: &NormalPair) -> Result<SField> {
    if nr.conformality_residual > CONFORMALITY_LIMIT {
        return Err(WforgeError::ConformalityTooPoor {
            residual: nr.conformality_residual,
            limit: CONFORMALITY_LIMIT,
        });
    }
    let g = f.grid;
    let dr = d_field(&nr.r)?;
    let mut data = Vec::with_capacity(g.len());
    for k in 0..g.len() {
        let (fk, n, r) = (f.f.data[k], nr.n.data[k], nr.r.data[k]);
        let fx = nr.df.x[k];
        if fx.norm() < crate::immersion::DEGENERATE_DF {
            return Err(WforgeError::WSolveSingular { vertex: g.ij(k) });
        }
        let c = dr.y[k] + r * dr.x[k];
        let c_perp = (c + r * c * r) * 0.5;
        let w = r * c_perp * fx.inv() * 0.5;
        // G S̃ G⁻¹ expanded.
        let top = n + fk * w;
        let s = QuatMat2::new(top, -(top * fk) - fk * r, w, -(w * fk) - r);
        data.push(s);
    }
    let s = SField {
        s: Field { grid: g, data },
    };
    s.validate()?;
    Ok(s)
}

/// `A = ½(*dS)′`, `Q = −½(*dS)″`, types taken with respect to `S`.
///
/// The finite-difference `dS` is first projected onto the tangent space of
/// the complex structures at `S` (the part anticommuting with `S`), so the
/// type relations of the Hopf fields hold to rounding.
pub fn hopf_fields(s: &SField) -> Result<HopfFieldPair> {
    let raw = d_field(&s.s)?;
    let ds = raw.map_indexed(|k, x| {
        let sk = s.s.data[k];
        (*x + sk * *x * sk) * 0.5
    });
    let (p, pp) = type_split_s(&star(&ds), &s.s)?;
    Ok(HopfFieldPair {
        a: p.scale(0.5),
        q: pp.scale(-0.5),
        ds,
    })
}

/// Largest relative violation of `*A = SA = −AS` and `*Q = −SQ = QS`.
pub fn type_relation_residual(s: &SField, hp: &HopfFieldPair) -> f64 {
    let (sa, sq) = (star(&hp.a), star(&hp.q));
    let scale = hp.ds.sup_norm();
    let mut worst: f64 = 0.0;
    for k in 0..s.grid().len() {
        let sk = s.s.data[k];
        for (a, stara, q, starq) in [
            (hp.a.x[k], sa.x[k], hp.q.x[k], sq.x[k]),
            (hp.a.y[k], sa.y[k], hp.q.y[k], sq.y[k]),
        ] {
            worst = worst
                .max((stara - sk * a).norm())
                .max((sk * a + a * sk).norm())
                .max((starq + sk * q).norm())
                .max((starq - q * sk).norm());
        }
    }
    rel(worst, scale)
}

/// Relative residual of `dS = 2(*Q − *A)`.
pub fn ds_identity_residual(hp: &HopfFieldPair) -> f64 {
    let rebuilt = star(&hp.q).sub(&star(&hp.a)).scale(2.0);
    rel(rebuilt.sub(&hp.ds).sup_norm(), hp.ds.sup_norm())
}

/// Incidence residuals of `im A ⊂ L` and `L ⊂ ker Q`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Incidence {
    /// `sup |(1 − P_L) A| / sup |A|`.
    pub im_a_in_l: f64,
    /// `sup |Q ψ| / sup |Q|` for unit `ψ ∈ L`.
    pub l_in_ker_q: f64,
}

pub fn incidence(l: &LineBundle, hp: &HopfFieldPair) -> Incidence {
    let g = l.psi.grid;
    let mut im_a: f64 = 0.0;
    let mut ker_q: f64 = 0.0;
    for k in 0..g.len() {
        let psi = l.psi.data[k];
        let perp = QuatMat2::IDENTITY - QuatMat2::line_projector(psi);
        let u = psi.normalized();
        for (a, q) in [(hp.a.x[k], hp.q.x[k]), (hp.a.y[k], hp.q.y[k])] {
            im_a = im_a.max((perp * a).norm());
            ker_q = ker_q.max(q.apply(u).norm());
        }
    }
    Incidence {
        im_a_in_l: rel(im_a, hp.a.sup_norm()),
        l_in_ker_q: rel(ker_q, hp.q.sup_norm()),
    }
}

/// `sup |(1 − P_L) S ψ|` for unit `ψ`: how far `S` is from stabilizing `L`.
pub fn stability_residual(s: &SField, l: &LineBundle) -> f64 {
    s.s.data
        .iter()
        .zip(&l.psi.data)
        .map(|(sk, psi)| {
            let u = psi.normalized();
            let su = sk.apply(u);
            (su - u.mul_right(u.hdot(su))).norm()
        })
        .fold(0.0, f64::max)
}

/// Residual of `*δ = Sδ = δS` with `δψ = π dψ`; the quotient `H²/L` is
/// realized as `L⊥` through the orthogonal projection.
pub fn envelope_residual(s: &SField, l: &LineBundle) -> Result<f64> {
    let dpsi = d_field(&l.psi)?;
    let spsi = s.s.zip_map(&l.psi, |m, v| m.apply(*v));
    let dspsi = d_field(&spsi)?;
    let sdpsi = star(&dpsi);
    let g = l.psi.grid;
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for k in 0..g.len() {
        let perp = QuatMat2::IDENTITY - QuatMat2::line_projector(l.psi.data[k]);
        let sk = s.s.data[k];
        for (dp, sdp, dsp) in [
            (dpsi.x[k], sdpsi.x[k], dspsi.x[k]),
            (dpsi.y[k], sdpsi.y[k], dspsi.y[k]),
        ] {
            scale = scale.max(perp.apply(dp).norm());
            let a = perp.apply(sdp - sk.apply(dp)).norm();
            let b = perp.apply(sdp - dsp).norm();
            worst = worst.max(a + b);
        }
    }
    Ok(rel(worst, scale))
}

/// Pointwise Willmore density `2⟨A ∧ *A⟩(∂x, ∂y)`.
pub fn willmore_density(hp: &HopfFieldPair) -> TwoForm<f64> {
    let mut w = wedge_trace(&hp.a, &star(&hp.a));
    w.data.iter_mut().for_each(|v| *v *= 2.0);
    w
}

/// `W = 2∫⟨A ∧ *A⟩`.
pub fn willmore_energy(hp: &HopfFieldPair) -> f64 {
    integrate(&willmore_density(hp))
}

/// Extrinsic curvature data of `f: M → R⁴ = H` per vertex, all with respect
/// to the induced metric `e^{2u}(dx² + dy²)`.
#[derive(Debug, Clone)]
pub struct ClassicalCurvature {
    pub mean_sq: TwoForm<f64>,
    pub gauss: TwoForm<f64>,
    pub normal: TwoForm<f64>,
    /// `e^{2u}`, the area density with respect to `dx dy`.
    pub conformal_factor: TwoForm<f64>,
}

fn orthonormal_frame(fx: Quaternion, fy: Quaternion) -> [Quaternion; 4] {
    let e1 = fx * (1.0 / fx.norm());
    let t = fy - e1 * fy.dot(e1);
    let e2 = t * (1.0 / t.norm());
    let mut frame = vec![e1, e2];
    while frame.len() < 4 {
        let best = [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K]
            .into_iter()
            .map(|c| frame.iter().fold(c, |v, b| v - *b * v.dot(*b)))
            .fold(Quaternion::ZERO, |acc, v| {
                if v.norm() > acc.norm() {
                    v
                } else {
                    acc
                }
            });
        frame.push(best * (1.0 / best.norm()));
    }
    let m = Matrix4::from_fn(|r, c| frame[c].to_array()[r]);
    if m.determinant() < 0.0 {
        frame[3] = -frame[3];
    }
    [frame[0], frame[1], frame[2], frame[3]]
}

/// Second fundamental form data from finite differences of `f`. The normal
/// frame `(n₁, n₂)` completes `(e₁, e₂)` to a positive frame of `R⁴`.
pub fn classical_curvature(f: &AffineImmersion) -> Result<ClassicalCurvature> {
    let g = f.grid;
    let df = d_field(&f.f)?;
    let dfx = d_field(&Field {
        grid: g,
        data: df.x.clone(),
    })?;
    let dfy = d_field(&Field {
        grid: g,
        data: df.y.clone(),
    })?;
    let n = g.len();
    let (mut h2, mut kg, mut kn, mut e2u) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let (fx, fy) = (df.x[k], df.y[k]);
        let fxx = dfx.x[k];
        let fyy = dfy.y[k];
        let fxy = (dfx.y[k] + dfy.x[k]) * 0.5;
        let lam = 0.5 * (fx.norm_sqr() + fy.norm_sqr());
        let frame = orthonormal_frame(fx, fy);
        let h = |v: Quaternion, a: usize| v.dot(frame[2 + a]) / lam;
        let (h1, h2_) = (
            [h(fxx, 0), h(fxy, 0), h(fyy, 0)],
            [h(fxx, 1), h(fxy, 1), h(fyy, 1)],
        );
        let mean = [(h1[0] + h1[2]) / 2.0, (h2_[0] + h2_[2]) / 2.0];
        h2[k] = mean[0] * mean[0] + mean[1] * mean[1];
        kg[k] = h1[0] * h1[2] - h1[1] * h1[1] + h2_[0] * h2_[2] - h2_[1] * h2_[1];
        // Normal-connection curvature ⟨R⊥(e₁, e₂)n₂, n₁⟩ = ⟨[h_{n₁}, h_{n₂}] e₁, e₂⟩;
        // oriented so that twistor projections (A = 0) have zero Willmore density.
        kn[k] = h2_[0] * h1[1] + h2_[1] * h1[2] - h1[0] * h2_[1] - h1[1] * h2_[2];
        e2u[k] = lam;
    }
    let tf = |data| TwoForm { grid: g, data };
    Ok(ClassicalCurvature {
        mean_sq: tf(h2),
        gauss: tf(kg),
        normal: tf(kn),
        conformal_factor: tf(e2u),
    })
}

/// Pointwise `(|H|² − K − K⊥) e^{2u}`.
pub fn classical_density(c: &ClassicalCurvature) -> TwoForm<f64> {
    let data = (0..c.mean_sq.data.len())
        .map(|k| {
            (c.mean_sq.data[k] - c.gauss.data[k] - c.normal.data[k]) * c.conformal_factor.data[k]
        })
        .collect();
    TwoForm {
        grid: c.mean_sq.grid,
        data,
    }
}

/// `W = ∫(|H|² − K − K⊥) dA` from the flat R⁴ chart.
pub fn willmore_energy_classical(f: &AffineImmersion) -> Result<f64> {
    Ok(integrate(&classical_density(&classical_curvature(f)?)))
}

/// `(1/2π) ∫ K⊥ dA`.
pub fn normal_curvature_integral(f: &AffineImmersion) -> Result<f64> {
    let c = classical_curvature(f)?;
    let data = c
        .normal
        .data
        .iter()
        .zip(&c.conformal_factor.data)
        .map(|(a, b)| a * b)
        .collect();
    Ok(integrate(&TwoForm { grid: f.grid, data }) / (2.0 * std::f64::consts::PI))
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Harmonicity {
    /// `ℓ sup |d*A| / sup |dS|` over the interior, `ℓ` the chart scale.
    pub a: f64,
    /// Same for `d*Q`.
    pub q: f64,
    /// `ℓ sup |d*A| / sup |dS|` over every vertex, boundary rows included.
    pub a_full: f64,
}

pub fn is_constant_congruence(hp: &HopfFieldPair) -> bool {
    hp.a.grid.chart_scale() * hp.ds.sup_norm() < CONSTANT_CONGRUENCE
}

/// Scale-free sup-norm residual of `d*A = 0` and `d*Q = 0`.
///
/// `d*A` stacks four derivatives of `f`. One-sided boundary rows carry a
/// non-smooth `O(hᵖ)` error that each further derivative amplifies by `1/h`,
/// so the primary residual is taken over vertices outside that reach. A
/// congruence that is constant to `1e−6` in chart units counts as harmonic.
pub fn harmonicity_residual(hp: &HopfFieldPair) -> Harmonicity {
    let g = hp.a.grid;
    let ell = g.chart_scale();
    let scale = hp.ds.sup_norm();
    if is_constant_congruence(hp) {
        return Harmonicity {
            a: 0.0,
            q: 0.0,
            a_full: 0.0,
        };
    }
    let band = crate::calc::boundary_band(&g, HARMONICITY_LAYERS);
    let da = d_oneform(&star(&hp.a));
    let dq = d_oneform(&star(&hp.q));
    Harmonicity {
        a: ell * interior_sup(&g, &da.data, band) / scale,
        q: ell * interior_sup(&g, &dq.data, band) / scale,
        a_full: ell * da.sup_norm() / scale,
    }
}

/// Checks of the splitting `d = d₊ + d₋` into parts commuting and
/// anticommuting with `S`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ConnectionSplit {
    /// `sup |d₋φ − (A + Q)φ| / (sup |dS| sup |φ|)`.
    pub d_minus: f64,
    /// `sup |d₋φ|` itself.
    pub d_minus_sup: f64,
    /// `sup |d*A(∂x,∂y)φ + 2(∂̄_{∂x}A)(∂x)φ|`, relative to `sup |dA| sup |φ|`.
    pub holomorphicity: f64,
    /// `sup |d*A(∂x,∂y)φ|` relative to the same scale.
    pub d_star_a: f64,
}

fn d_plus(s: &SField, phi: &Field<QuatVec2>) -> Result<OneForm<QuatVec2>> {
    let dphi = d_field(phi)?;
    let sphi = s.s.zip_map(phi, |m, v| m.apply(*v));
    let dsphi = d_field(&sphi)?;
    let s_dsphi = dsphi.map_indexed(|k, v| s.s.data[k].apply(*v));
    Ok(dphi.zip_map(&s_dsphi, |a, sb| (*a - *sb) * 0.5))
}

/// `d₋φ = ½(dφ + S d(Sφ))` against `(A + Q)φ`, plus the holomorphicity
/// identity `d*A(X, JX) = −2(∂̄_X A)(X)` at `X = ∂x` applied to `φ`.
pub fn connection_split(
    s: &SField,
    hp: &HopfFieldPair,
    phi: &Field<QuatVec2>,
) -> Result<ConnectionSplit> {
    let g = s.grid();
    let dphi = d_field(phi)?;
    let sphi = s.s.zip_map(phi, |m, v| m.apply(*v));
    let dsphi = d_field(&sphi)?;
    let phi_sup = phi.sup_norm().max(1e-300);
    let mut worst: f64 = 0.0;
    let mut dm_sup: f64 = 0.0;
    for k in 0..g.len() {
        let sk = s.s.data[k];
        for (dp, dsp, a, q) in [
            (dphi.x[k], dsphi.x[k], hp.a.x[k], hp.q.x[k]),
            (dphi.y[k], dsphi.y[k], hp.a.y[k], hp.q.y[k]),
        ] {
            let dm = (dp + sk.apply(dsp)) * 0.5;
            dm_sup = dm_sup.max(dm.norm());
            worst = worst.max((dm - (a + q).apply(phi.data[k])).norm());
        }
    }

    // ∂̄_{∂x}ψ = ½(d₊ψ(∂x) + S d₊ψ(∂y)), ∂_{∂x}ψ = ½(d₊ψ(∂x) − S d₊ψ(∂y)).
    let dp_phi = d_plus(s, phi)?;
    let chi = Field {
        grid: g,
        data: (0..g.len()).map(|k| hp.a.x[k].apply(phi.data[k])).collect(),
    };
    let dp_chi = d_plus(s, &chi)?;
    let dstar_a = d_oneform(&star(&hp.a));
    let mut holo: f64 = 0.0;
    let mut lhs_sup: f64 = 0.0;
    for k in 0..g.len() {
        let sk = s.s.data[k];
        let dbar_chi = (dp_chi.x[k] + sk.apply(dp_chi.y[k])) * 0.5;
        let del_phi = (dp_phi.x[k] - sk.apply(dp_phi.y[k])) * 0.5;
        let rhs = (dbar_chi - hp.a.x[k].apply(del_phi)) * -2.0;
        let lhs = dstar_a.data[k].apply(phi.data[k]);
        lhs_sup = lhs_sup.max(lhs.norm());
        holo = holo.max((lhs - rhs).norm());
    }
    let da_scale = d_field(&Field {
        grid: g,
        data: hp.a.x.clone(),
    })?
    .sup_norm()
    .max(1e-300)
        * phi_sup;
    Ok(ConnectionSplit {
        d_minus: rel(worst, hp.ds.sup_norm() * phi_sup),
        d_minus_sup: dm_sup,
        holomorphicity: holo / da_scale,
        d_star_a: lhs_sup / da_scale,
    })
}

/// Everything computed for one immersion.
#[derive(Debug, Clone)]
pub struct Analysis {
    pub f: AffineImmersion,
    pub normals: NormalPair,
    pub lift: LineBundle,
    pub s: SField,
    pub hopf: HopfFieldPair,
}

impl Analysis {
    pub fn new(f: AffineImmersion) -> Result<Self> {
        let nr = normals(&f)?;
        let s = conformal_gauss_map(&f, &nr)?;
        let hopf = hopf_fields(&s)?;
        let l = lift(&f);
        Ok(Self {
            f,
            normals: nr,
            lift: l,
            s,
            hopf,
        })
    }

    pub fn report(&self, surface: &str) -> Result<AnalysisReport> {
        let inc = incidence(&self.lift, &self.hopf);
        let harm = harmonicity_residual(&self.hopf);
        Ok(AnalysisReport {
            surface: surface.to_string(),
            grid: GridSummary::from(&self.f.grid),
            willmore_energy: willmore_energy(&self.hopf),
            willmore_energy_classical: willmore_energy_classical(&self.f)?,
            harmonicity_residual: harm.a,
            harmonicity_residual_q: harm.q,
            harmonicity_residual_full: harm.a_full,
            type_relation_residual: type_relation_residual(&self.s, &self.hopf),
            l_in_ker_q_residual: inc.l_in_ker_q,
            im_a_in_l_residual: inc.im_a_in_l,
            envelope_residual: envelope_residual(&self.s, &self.lift)?,
            ds_identity_residual: ds_identity_residual(&self.hopf),
            conformality_residual: self.normals.conformality_residual,
            stability_residual: stability_residual(&self.s, &self.lift),
            sup_ds: self.hopf.ds.sup_norm(),
            sup_a: self.hopf.a.sup_norm(),
            sup_q: self.hopf.q.sup_norm(),
        })
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GridSummary {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub topology: crate::calc::Topology,
    pub stencil_order: usize,
}

impl From<&Grid> for GridSummary {
    fn from(g: &Grid) -> Self {
        Self {
            nx: g.nx,
            ny: g.ny,
            hx: g.hx,
            hy: g.hy,
            topology: g.topology,
            stencil_order: g.stencil.order(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnalysisReport {
    pub surface: String,
    pub grid: GridSummary,
    /// `2∫⟨A∧*A⟩` from the Hopf field; `willmore_energy_classical` is the
    /// curvature-integral cross-check.
    pub willmore_energy: f64,
    pub willmore_energy_classical: f64,
    pub harmonicity_residual: f64,
    pub harmonicity_residual_q: f64,
    pub harmonicity_residual_full: f64,
    pub type_relation_residual: f64,
    pub l_in_ker_q_residual: f64,
    pub im_a_in_l_residual: f64,
    pub envelope_residual: f64,
    pub ds_identity_residual: f64,
    pub conformality_residual: f64,
    pub stability_residual: f64,
    pub sup_ds: f64,
    pub sup_a: f64,
    pub sup_q: f64,
}

/// Convenience: sup over a field of a pointwise quantity.
pub fn sup_of<T: Sample>(v: &[T]) -> f64 {
    v.iter().map(|t| t.norm()).fold(0.0, f64::max)
}
