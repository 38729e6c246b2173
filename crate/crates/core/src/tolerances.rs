//! Every numerical threshold of the toolkit, with the reason for its value.
//!
//! Two kinds live here:
//!
//! | Kind | Used by | Basis |
//! |------|---------|-------|
//! | Runtime thresholds | library decisions (errors, zero tests, masking) | f64 precision, stencil error, calibration on the analytic surfaces |
//! | Acceptance thresholds | the acceptance suite and CLI verdicts | the stated acceptance criteria, unchanged |
//!
//! Modules re-export the runtime thresholds they own, so
//! `meancurv::CONFORMALITY_LIMIT` and `tolerances::CONFORMALITY_LIMIT` name
//! the same value.

// ═══════════════════════════════════════════════════════════════════
// Pointwise algebra (f64 precision)
// ═══════════════════════════════════════════════════════════════════

/// `|det| / scale²` below which a 2×2 quaternionic matrix counts as singular.
///
/// Four orders of magnitude above f64 epsilon: an inverse computed beyond
/// this has lost more than 12 digits and is not worth returning.
pub const SINGULAR_REL: f64 = 1e-12;

/// `|S² + 1|` accepted for a complex structure.
///
/// `S` is built from a handful of products and one inverse; observed
/// residuals are 1e-15..1e-14. 1e-10 leaves five digits for
/// ill-conditioned frames (e.g. Darboux conjugation by `T`).
pub const COMPLEX_STRUCTURE_TOL: f64 = 1e-10;

/// `a² + b² = E₂` and `[a, b] = 0` for the Darboux data, relative.
///
/// Exact identities of `G·scalar·G⁻¹`; observed 1e-15..5e-15.
pub const AB_TOL: f64 = 1e-10;

// ═══════════════════════════════════════════════════════════════════
// Immersion and chart handling
// ═══════════════════════════════════════════════════════════════════

/// `|f_x|` or `|f_y|` below this is a degenerate differential.
///
/// Branch points of Bäcklund transforms sampled at a vertex give
/// `|df| ≈ 1e-14`; genuine immersions on the test grids have
/// `|df| ≥ 1e-3`.
pub const DEGENERATE_DF: f64 = 1e-10;

/// `|ψ₂| / |ψ|` below this means the point is `∞` in the affine chart.
pub const INFINITY_TOL: f64 = 1e-12;

/// Immersions whose conformality residual exceeds this are rejected.
///
/// The residual is O(hᵖ). The analytic test surfaces reach 1e-9..1e-14 at
/// 64²; the slowest case (the twistor torus, whose theta functions
/// concentrate curvature) is 1.3e-3 at 64². 1e-2 admits every
/// well-resolved input and rejects under-resolved ones (the twistor torus
/// at 32²: 4.9e-2).
pub const CONFORMALITY_LIMIT: f64 = 1e-2;

/// Stereographic projection: `|1 − ⟨f, pole⟩|` below this is clamped (and
/// reported) instead of dividing by ~0.
pub const POLE_CLAMP: f64 = 1e-9;

/// Darboux: vertices with `|ψ̂₂| / |ψ̂|` below this are excluded from the
/// conformality statistics of `f̂` (a chart artifact, not geometry).
pub const CHART_MASK: f64 = 1e-6;

// ═══════════════════════════════════════════════════════════════════
// Conformal Gauss map
// ═══════════════════════════════════════════════════════════════════

/// `ℓ sup |dS|` below this (`ℓ` the chart scale) means `S` is constant.
///
/// The Mercator sphere gives 5e-7..1e-6 at 64²..128² from stencil error
/// alone; every non-spherical test surface is above 1e-1.
pub const CONSTANT_CONGRUENCE: f64 = 1e-6;

/// Incidence residuals (`L ⊂ ker Q`, `im A ⊂ L`) are relative to the Hopf
/// field itself; they are only checked when `ℓ sup |dS|` exceeds this.
///
/// Below it `S` is constant up to discretization error (the Mercator sphere:
/// 8.5e-5 at 32², 2.4e-3 at 24²), `A` and `Q` are noise, and their
/// incidence is meaningless. Non-spherical test surfaces are above 1e-1.
pub const INCIDENCE_MIN_DS: f64 = 1e-2;

/// Number of stacked derivatives between `f` and `d*A`. Interior residuals
/// skip `HARMONICITY_LAYERS · p/2` rows next to a patch edge (capped at a
/// quarter of the side), where one-sided stencils dominate.
pub const HARMONICITY_LAYERS: usize = 4;

// ═══════════════════════════════════════════════════════════════════
// Parallel transport
// ═══════════════════════════════════════════════════════════════════

/// `|ψ|` above this during transport is a blow-up.
///
/// `d^μ` is a bounded perturbation of `d`; growth is at most
/// `exp(|μ|·sup|A|·L)`, about 1e2 for the test patches and `μ ≤ 2`.
pub const BLOWUP_NORM: f64 = 1e6;

/// Smallest accepted `|det (ψ₁, ψ₂)|`-type margin of the parallel frame.
pub const SPANNING_MIN: f64 = 1e-8;

// ═══════════════════════════════════════════════════════════════════
// Willmore sequences
// ═══════════════════════════════════════════════════════════════════

/// A Hopf field is identically zero when its interior sup is below this
/// fraction of the interior sup of `dS`.
///
/// Twistor surfaces: `A/dS` = 3.3e-10 (patch, 64²), 3.1e-8 (torus, 512²).
/// Surfaces with both fields non-zero are at 0.3..0.5.
pub const HOPF_ZERO_REL: f64 = 1e-6;

/// Projective variance below this makes a Bäcklund transform a constant
/// point. Catenoid and Enneper give 1e-19..1e-18; genuine surfaces are
/// above 1e-1.
pub const CONSTANT_POINT_VARIANCE: f64 = 1e-6;

/// Minimum ratio between the non-zero and the zero singular value of a
/// Hopf field at a vertex where it does not vanish. Observed gaps are
/// 1e4..1e7; below 10 the kernel line is not determined to one digit.
pub const RANK_GAP: f64 = 10.0;

/// Vertices whose largest Hopf-field singular value is below this fraction
/// of its sup are zeros of the field; their Bäcklund line is filled from
/// the neighbours (zeros are isolated, so this touches a measure-zero set).
pub const ZERO_VERTEX_REL: f64 = 1e-3;

/// Largest harmonicity residual accepted as "Willmore", both for sequence
/// input and for recomputed steps.
///
/// Willmore test surfaces are at 1e-13..1e-3 on the acceptance grids; the
/// non-Willmore revolution torus stays at 0.46.
pub const WILLMORE_ACCEPT: f64 = 1e-2;

/// Re-charted Bäcklund transforms must keep `|ψ₂| / |ψ|` above this, i.e.
/// `|f| ≤ 1e3` in the chart used for recomputation.
pub const CHART_MARGIN_MIN: f64 = 1e-3;

/// Thresholds of the acceptance criteria, as stated; never tuned to
/// results.
pub mod acceptance {
    /// 1: `W(Clifford) = 2π²` within 1%.
    pub const CLIFFORD_ENERGY_REL: f64 = 0.01;
    /// 1: `|W_hopf − W_classical| / W` below 2%.
    pub const ENERGY_CROSS_REL: f64 = 0.02;
    /// 1: runtime budget at 96², single-threaded, seconds.
    pub const CLIFFORD_RUNTIME_S: f64 = 10.0;
    /// 2: Mercator sphere `sup |dS|`.
    pub const SPHERE_SUP_DS: f64 = 1e-6;
    /// 2: Mercator sphere Willmore energy.
    pub const SPHERE_ENERGY: f64 = 1e-5;
    /// 3: observed convergence order of the harmonicity residual.
    pub const HARMONICITY_ORDER: f64 = 1.8;
    /// 3: non-Willmore residual floor.
    pub const NON_WILLMORE_FLOOR: f64 = 0.05;
    /// 4: closed-form curvature of `d^λ` on a non-Willmore torus, relative.
    pub const CURVATURE_IDENTITY_REL: f64 = 0.05;
    /// 5: algebraic identities, relative.
    pub const ALGEBRAIC_REL: f64 = 1e-10;
    /// 6: observed order of the Darboux identity residuals.
    pub const DARBOUX_ORDER: f64 = 1.5;
    /// 7: `‖Ŝ − S‖` for `μ ∈ S¹`.
    pub const UNIT_CIRCLE_SUP: f64 = 1e-10;
    /// 9: basis independence of `Ŝ`.
    pub const BASIS_INDEPENDENCE: f64 = 1e-8;
    /// 10: projective variance of a constant point.
    pub const CONSTANT_POINT: f64 = 1e-6;
    /// 12: distance of a closed-surface degree from an integer.
    pub const DEGREE_INTEGRALITY: f64 = 0.05;
    /// 12: Clifford torus degree.
    pub const CLIFFORD_DEGREE: f64 = 1e-3;

    /// A residual that is already at the f64 floor cannot show an order.
    /// Below this on every grid, the convergence check passes as
    /// "converged to roundoff" (reported as such).
    pub const ROUNDOFF_FLOOR: f64 = 1e-9;
}
