//! The μ-Darboux transform of a harmonic complex structure: `a, b, T` from a
//! `d^μ`-parallel frame, `Ŝ = T⁻¹ST`, `L̂ = T(a−1)⁻¹L`, and residuals of the
//! identities that make `Ŝ` harmonic and `L̂` Willmore.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::calc::{boundary_band, d_field, interior_sup, star, Field, Grid, OneForm};
use crate::error::{Result, WforgeError};
use crate::flat::{
    parallel_sections, spanning_check, ConnectionFamily, ParallelFrame, TransportOptions,
};
use crate::immersion::{project, LineBundle, INFINITY_TOL};
use crate::meancurv::{
    harmonicity_residual, hopf_fields, incidence, stability_residual, Analysis, HopfFieldPair,
    SField, HARMONICITY_LAYERS,
};
use crate::quat::{
    check_complex_structure, complexify, decomplexify, mat2_inverse, QuatMat2, QuatVec2, Quaternion,
};
pub use crate::tolerances::{AB_TOL, CHART_MASK};

/// `a`, `b` and `T = S(a−1) + b` on the grid.
#[derive(Debug, Clone)]
pub struct TField {
    pub a: Field<QuatMat2>,
    pub b: Field<QuatMat2>,
    pub t: Field<QuatMat2>,
    pub t_inv: Field<QuatMat2>,
    pub mu: Complex64,
    /// `sup |a² + b² − E₂|`.
    pub ab_square_residual: f64,
    /// `sup |[a, b]|`.
    pub ab_commutator: f64,
}

fn cq(z: Complex64) -> Quaternion {
    Quaternion::from_complex(z)
}

/// Builds `a = G(c)G⁻¹`, `b = G(i d)G⁻¹` with `c = (μ+μ⁻¹)/2`,
/// `d = (μ⁻¹−μ)/2`, `G = (ψ₁, ψ₂)`; the complex scalars act on the `G`-frame
/// coordinates by left multiplication, which realizes multiplication by `c`
/// (via `I`) on `W_μ` while keeping `a, b` quaternionic.
pub fn build_abt(s: &SField, frame: &ParallelFrame) -> Result<TField> {
    let mu = frame.mu;
    if (mu - 1.0).norm() < 1e-14 {
        return Err(WforgeError::AminusOneSingular);
    }
    spanning_check(frame)?;
    let g = s.grid();
    let c = (mu + mu.inv()) * 0.5;
    let d = (mu.inv() - mu) * 0.5;
    let (cm, dm) = (
        QuatMat2::scalar(cq(c)),
        QuatMat2::scalar(cq(d * Complex64::i())),
    );
    let n = g.len();
    let (mut a, mut b, mut t, mut ti) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    let (mut sq, mut comm): (f64, f64) = (0.0, 0.0);
    for k in 0..n {
        let gm = QuatMat2::from_cols(frame.psi1.data[k], frame.psi2.data[k]);
        let gi = mat2_inverse(&gm)?;
        let (ak, bk) = (gm * cm * gi, gm * dm * gi);
        sq = sq.max((ak * ak + bk * bk - QuatMat2::IDENTITY).norm());
        comm = comm.max(ak.commutator(&bk).norm());
        let tk = s.s.data[k] * (ak - QuatMat2::IDENTITY) + bk;
        let tik = mat2_inverse(&tk).map_err(|_| WforgeError::TSingular { vertex: g.ij(k) })?;
        a.push(ak);
        b.push(bk);
        t.push(tk);
        ti.push(tik);
    }
    let f = |data| Field { grid: g, data };
    Ok(TField {
        a: f(a),
        b: f(b),
        t: f(t),
        t_inv: f(ti),
        mu,
        ab_square_residual: sq,
        ab_commutator: comm,
    })
}

/// Which conjugation defines the transformed complex structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Conjugation {
    /// `Ŝ = T⁻¹ S T`.
    TInvST,
    /// `Ŝ = T S T⁻¹`.
    TSTInv,
}

/// Residuals of the transform identities; differential residuals are sup
/// norms over the interior (see [`HARMONICITY_LAYERS`]) relative to the
/// sup of the reference side.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TransformReport {
    pub mu: (f64, f64),
    pub conjugation: Conjugation,
    /// `*Â = ½T(1−a)⁻¹*AT`.
    pub hat_a_residual: f64,
    /// `*Q̂ = −2T⁻¹*Q(a−1)T⁻¹`, the sign that follows from substituting
    /// `Ŝ = 2T⁻¹ + b(a−1)⁻¹` into `*Q̂ = T⁻¹*Q(−(a−1)Ŝ − S(a−1) + T)`.
    pub hat_q_residual: f64,
    /// `*Q̂ = +2T⁻¹*Q(a−1)T⁻¹`, kept for comparison.
    pub hat_q_residual_opposite_sign: f64,
    /// `dT = 2*Q(a−1) + T*AT`, the form equivalent to the closedness identity
    /// below via `dT = −T dT⁻¹ T`.
    pub riccati_residual: f64,
    /// `dT = *Q(a−1) + 2T*AT`, kept for comparison.
    pub riccati_residual_alt_form: f64,
    /// `Ŝ = 2T⁻¹ + b(a−1)⁻¹` (pointwise, whole grid).
    pub hat_s_closed_form: f64,
    /// `dT⁻¹ = −2T⁻¹*Q(a−1)T⁻¹ − *A`.
    pub closedness: f64,
    /// Harmonicity residual of `Ŝ`.
    pub hat_s_harmonicity: f64,
    /// `sup |Ŝ² + 1|`.
    pub hat_s_square: f64,
    /// `sup |Ŝ − S|`.
    pub hat_s_minus_s: f64,
    pub ab_square_residual: f64,
    pub ab_commutator: f64,
}

/// The transformed complex structure with its Hopf fields.
#[derive(Debug, Clone)]
pub struct Transformed {
    pub s_hat: SField,
    pub hopf_hat: HopfFieldPair,
    pub report: TransformReport,
}

fn interior_rel(grid: &Grid, diff: &[QuatMat2], reference: &[QuatMat2]) -> f64 {
    let band = boundary_band(grid, HARMONICITY_LAYERS);
    let num = interior_sup(grid, diff, band);
    let den = interior_sup(grid, reference, band);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn form_rel(grid: &Grid, lhs: &OneForm<QuatMat2>, rhs: &OneForm<QuatMat2>) -> f64 {
    let d = lhs.sub(rhs);
    interior_rel(grid, &d.x, &lhs.x).max(interior_rel(grid, &d.y, &lhs.y))
}

/// `Ŝ` by the chosen conjugation, with every identity of the transform
/// evaluated as a residual.
pub fn transform_s(
    tf: &TField,
    s: &SField,
    hp: &HopfFieldPair,
    conj: Conjugation,
) -> Result<Transformed> {
    let g = s.grid();
    let one = QuatMat2::IDENTITY;
    let data: Vec<QuatMat2> = (0..g.len())
        .map(|k| {
            let (t, ti, sk) = (tf.t.data[k], tf.t_inv.data[k], s.s.data[k]);
            match conj {
                Conjugation::TInvST => ti * sk * t,
                Conjugation::TSTInv => t * sk * ti,
            }
        })
        .collect();
    let mut square: f64 = 0.0;
    for m in &data {
        square = square.max((*m * *m + one).norm());
    }
    let s_hat = SField {
        s: Field { grid: g, data },
    };
    // Conjugation preserves S² = −1 up to rounding; anything else means the
    // transform is numerically broken, which `hopf_fields` reports.
    s_hat.s.data.iter().try_for_each(check_complex_structure)?;
    let hopf_hat = hopf_fields(&s_hat)?;

    let (sa, sq) = (star(&hp.a), star(&hp.q));
    let (sah, sqh) = (star(&hopf_hat.a), star(&hopf_hat.q));
    let mut am1_inv = Vec::with_capacity(g.len());
    let mut closed_form: f64 = 0.0;
    let mut shat_minus_s: f64 = 0.0;
    for k in 0..g.len() {
        let am1 = tf.a.data[k] - one;
        let inv = mat2_inverse(&am1).map_err(|_| WforgeError::AminusOneSingular)?;
        let rhs = tf.t_inv.data[k] * 2.0 + tf.b.data[k] * inv;
        closed_form = closed_form.max((s_hat.s.data[k] - rhs).norm() / s_hat.s.data[k].norm());
        shat_minus_s = shat_minus_s.max((s_hat.s.data[k] - s.s.data[k]).norm());
        am1_inv.push(inv);
    }
    let (t, ti, a) = (&tf.t.data, &tf.t_inv.data, &tf.a.data);

    // Hopf fields of Ŝ.
    let a_rhs = sa.map_indexed(|k, v| t[k] * (-am1_inv[k]) * *v * t[k] * 0.5);
    let q_rhs = sq.map_indexed(|k, v| ti[k] * *v * (a[k] - one) * ti[k] * -2.0);
    let q_rhs_opposite = q_rhs.map_indexed(|_, v| -*v);
    // Riccati equation for T.
    let dt = d_field(&tf.t)?;
    let riccati_rhs = sq
        .map_indexed(|k, q| *q * (a[k] - one) * 2.0)
        .add(&sa.map_indexed(|k, v| t[k] * *v * t[k]));
    let riccati_alt = sq
        .map_indexed(|k, q| *q * (a[k] - one))
        .add(&sa.map_indexed(|k, v| t[k] * *v * t[k] * 2.0));
    // Closedness
    let dti = d_field(&tf.t_inv)?;
    let close_rhs = sq
        .map_indexed(|k, v| ti[k] * *v * (a[k] - one) * ti[k] * -2.0)
        .sub(&sa);

    let report = TransformReport {
        mu: (tf.mu.re, tf.mu.im),
        conjugation: conj,
        hat_a_residual: form_rel(&g, &sah, &a_rhs),
        hat_q_residual: form_rel(&g, &sqh, &q_rhs),
        hat_q_residual_opposite_sign: form_rel(&g, &sqh, &q_rhs_opposite),
        riccati_residual: form_rel(&g, &dt, &riccati_rhs),
        riccati_residual_alt_form: form_rel(&g, &dt, &riccati_alt),
        hat_s_closed_form: closed_form,
        closedness: form_rel(&g, &dti, &close_rhs),
        hat_s_harmonicity: harmonicity_residual(&hopf_hat).a,
        hat_s_square: square,
        hat_s_minus_s: shat_minus_s,
        ab_square_residual: tf.ab_square_residual,
        ab_commutator: tf.ab_commutator,
    };
    Ok(Transformed {
        s_hat,
        hopf_hat,
        report,
    })
}

/// Incidence data of `L̂ = T(a−1)⁻¹L`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LineReport {
    /// `sup |(1 − P_L̂) Ŝψ̂|`.
    pub stability: f64,
    /// `im Â ⊂ L̂`.
    pub im_a_hat_in_l_hat: f64,
    /// `L̂ ⊂ ker Q̂`.
    pub l_hat_in_ker_q_hat: f64,
    /// Conformality residual of `f̂` over vertices away from `∞`.
    pub conformality: Option<f64>,
    /// Vertices within [`CHART_MASK`] of the point at infinity.
    pub masked_vertices: usize,
}

/// `ψ̂ = T(a−1)⁻¹ψ`, normalized.
pub fn transform_l(tf: &TField, l: &LineBundle) -> Result<LineBundle> {
    let one = QuatMat2::IDENTITY;
    let data = (0..l.psi.data.len())
        .map(|k| {
            let inv =
                mat2_inverse(&(tf.a.data[k] - one)).map_err(|_| WforgeError::AminusOneSingular)?;
            Ok((tf.t.data[k] * inv).apply(l.psi.data[k]).normalized())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LineBundle {
        psi: Field {
            grid: l.psi.grid,
            data,
        },
    })
}

pub fn line_report(tr: &Transformed, l_hat: &LineBundle) -> Result<LineReport> {
    let inc = incidence(l_hat, &tr.hopf_hat);
    let masked = l_hat
        .psi
        .data
        .iter()
        .filter(|v| v.0[1].norm() < CHART_MASK * v.norm())
        .count();
    let conformality = if masked == 0 {
        let far = l_hat.psi.data.iter().all(|v| v.0[1].norm() > INFINITY_TOL);
        if far {
            let f = project(l_hat)?;
            crate::immersion::normals(&f)
                .ok()
                .map(|nr| nr.conformality_residual)
        } else {
            None
        }
    } else {
        None
    };
    Ok(LineReport {
        stability: stability_residual(&tr.s_hat, l_hat),
        im_a_hat_in_l_hat: inc.im_a_in_l,
        l_hat_in_ker_q_hat: inc.l_in_ker_q,
        conformality,
        masked_vertices: masked,
    })
}

/// `dψ_l = −*ATψ_l` and `dψ_l ∈ Ω¹(L)`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct PointwiseCheck {
    /// `sup |dψ_l + *ATψ_l| / sup |ψ_l|`, worst of `l = 1, 2`.
    pub derivative: f64,
    /// `sup |(1 − P_L)dψ_l| / sup |dψ_l|`, worst of `l = 1, 2`.
    pub in_l: f64,
}

pub fn pointwise_darboux_check(
    frame: &ParallelFrame,
    l: &LineBundle,
    hp: &HopfFieldPair,
    tf: &TField,
) -> Result<PointwiseCheck> {
    let g = frame.psi1.grid;
    let band = boundary_band(&g, HARMONICITY_LAYERS);
    let sa = star(&hp.a);
    let mut worst_d: f64 = 0.0;
    let mut worst_l: f64 = 0.0;
    for psi in [&frame.psi1, &frame.psi2] {
        let dpsi = d_field(psi)?;
        let mut diff = Vec::with_capacity(2 * g.len());
        let mut off = Vec::with_capacity(2 * g.len());
        for k in 0..g.len() {
            let perp = QuatMat2::IDENTITY - QuatMat2::line_projector(l.psi.data[k]);
            for (dp, a) in [(dpsi.x[k], sa.x[k]), (dpsi.y[k], sa.y[k])] {
                diff.push(dp + (a * tf.t.data[k]).apply(psi.data[k]));
                off.push(perp.apply(dp));
            }
        }
        let interior = |v: &[QuatVec2]| {
            v.chunks(2)
                .enumerate()
                .filter(|(k, _)| crate::calc::is_interior(&g, *k, band))
                .flat_map(|(_, c)| c.iter().map(|q| q.norm()))
                .fold(0.0, f64::max)
        };
        let dnorm = dpsi.sup_norm();
        worst_d = worst_d.max(interior(&diff) / psi.sup_norm());
        worst_l = worst_l.max(if dnorm > 0.0 {
            interior(&off) / dnorm
        } else {
            0.0
        });
    }
    Ok(PointwiseCheck {
        derivative: worst_d,
        in_l: worst_l,
    })
}

/// Re-expresses the frame in the basis `init·C` for a complex 2×2 `C`
/// (acting by right multiplication through `I`); exact because transport is
/// linear: `ψ′_l = Σ_k ψ_k C_kl`.
pub fn change_basis(frame: &ParallelFrame, cmat: [[Complex64; 2]; 2]) -> ParallelFrame {
    let mix = |l: usize| {
        let data = (0..frame.psi1.data.len())
            .map(|k| {
                let v = complexify(frame.psi1.data[k]) * cmat[0][l]
                    + complexify(frame.psi2.data[k]) * cmat[1][l];
                decomplexify(&v)
            })
            .collect();
        Field {
            grid: frame.psi1.grid,
            data,
        }
    };
    ParallelFrame {
        psi1: mix(0),
        psi2: mix(1),
        ..frame.clone()
    }
}

/// JSON summary of a `darboux` run.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DarbouxReport {
    pub mu: (f64, f64),
    pub hat_a_residual: f64,
    pub hat_q_residual: f64,
    pub riccati_residual: f64,
    pub hat_s_closed_form: f64,
    pub hat_incidence: f64,
    pub hat_s_harmonicity: f64,
    pub basis_independence: f64,
    pub transform: TransformReport,
    /// Same identities evaluated for the other conjugation.
    pub alternative: TransformReport,
    pub line: LineReport,
    pub pointwise: PointwiseCheck,
    pub path_independence_residual: f64,
    pub spanning_margin: f64,
}

/// Inputs of a full μ-Darboux run.
#[derive(Debug, Clone)]
pub struct DarbouxOptions {
    pub mu: Complex64,
    /// Initial values of `ψ₁, ψ₂` at the basepoint.
    pub init: [QuatVec2; 2],
    pub transport: TransportOptions,
    pub conjugation: Conjugation,
    /// Constant basis change used for the basis-independence check.
    pub basis_change: [[Complex64; 2]; 2],
}

impl DarbouxOptions {
    pub fn new(mu: Complex64) -> Self {
        DarbouxOptions {
            mu,
            init: [
                QuatVec2::new(Quaternion::ONE, Quaternion::ZERO),
                QuatVec2::new(Quaternion::ZERO, Quaternion::ONE),
            ],
            transport: TransportOptions::default(),
            conjugation: Conjugation::TInvST,
            basis_change: [
                [Complex64::new(1.0, 0.5), Complex64::new(0.2, -1.0)],
                [Complex64::new(0.3, 0.0), Complex64::new(2.0, 0.1)],
            ],
        }
    }
}

/// Everything a `darboux` run produces.
#[derive(Debug, Clone)]
pub struct DarbouxRun {
    pub frame: ParallelFrame,
    pub tfield: TField,
    pub transformed: Transformed,
    pub l_hat: LineBundle,
    pub report: DarbouxReport,
}

fn other(c: Conjugation) -> Conjugation {
    match c {
        Conjugation::TInvST => Conjugation::TSTInv,
        Conjugation::TSTInv => Conjugation::TInvST,
    }
}

/// Parallel frame of `d^μ`, `T`, `Ŝ`, `L̂` and every residual of the
/// transform, for both conjugations.
pub fn darboux(analysis: &Analysis, opts: &DarbouxOptions) -> Result<DarbouxRun> {
    let fam = ConnectionFamily::new(&analysis.s, &analysis.hopf);
    let frame = parallel_sections(&fam, opts.mu, opts.init, opts.transport)?;
    let margin = spanning_check(&frame)?;
    let tfield = build_abt(&analysis.s, &frame)?;
    let transformed = transform_s(&tfield, &analysis.s, &analysis.hopf, opts.conjugation)?;
    let alternative = transform_s(
        &tfield,
        &analysis.s,
        &analysis.hopf,
        other(opts.conjugation),
    )?
    .report;
    let l_hat = transform_l(&tfield, &analysis.lift)?;
    let line = line_report(&transformed, &l_hat)?;
    let pointwise = pointwise_darboux_check(&frame, &analysis.lift, &analysis.hopf, &tfield)?;

    let frame2 = change_basis(&frame, opts.basis_change);
    let tf2 = build_abt(&analysis.s, &frame2)?;
    let t2 = transform_s(&tf2, &analysis.s, &analysis.hopf, opts.conjugation)?;
    let basis_independence = transformed
        .s_hat
        .s
        .data
        .iter()
        .zip(&t2.s_hat.s.data)
        .map(|(x, y)| (*x - *y).norm())
        .fold(0.0, f64::max);

    let r = &transformed.report;
    let report = DarbouxReport {
        mu: (opts.mu.re, opts.mu.im),
        hat_a_residual: r.hat_a_residual,
        hat_q_residual: r.hat_q_residual,
        riccati_residual: r.riccati_residual,
        hat_s_closed_form: r.hat_s_closed_form,
        hat_incidence: line.im_a_hat_in_l_hat.max(line.l_hat_in_ker_q_hat),
        hat_s_harmonicity: r.hat_s_harmonicity,
        basis_independence,
        transform: r.clone(),
        alternative,
        line,
        pointwise,
        path_independence_residual: frame.path_independence_residual,
        spanning_margin: margin,
    };
    Ok(DarbouxRun {
        frame,
        tfield,
        transformed,
        l_hat,
        report,
    })
}
