//! Acceptance criteria 1–12.
//!
//! Runs without the libtest harness so that every criterion prints a
//! `PASS`/`FAIL` line with its numbers whether or not it passes. The process
//! exits non-zero if any criterion fails. Thresholds come from
//! `tolerances::acceptance`; convergence-order checks use fourth-order
//! stencils, because at the default order the residuals reach the roundoff
//! floor before an order can be observed.

mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::{analyze, analyze_spec, converges, fmt};
use num_complex::Complex64;
use wforge_core::calc::StencilOrder;
use wforge_core::calc::Topology;
use wforge_core::darboux::{
    build_abt, darboux, Conjugation, DarbouxOptions, DarbouxReport, TField,
};
use wforge_core::flat::{parallel_sections, ConnectionFamily, TransportOptions};
use wforge_core::immersion::{generate, SurfaceSpec};
use wforge_core::meancurv::{
    ds_identity_residual, harmonicity_residual, type_relation_residual, willmore_energy,
    willmore_energy_classical, Analysis,
};
use wforge_core::quat::{eigenprojections, ComplexMat4};
use wforge_core::sequence::{normal_bundle_degree, willmore_sequence, End, Shape, StepStatus};
use wforge_core::tolerances::acceptance as tol;

/// Stencil used wherever a convergence order is measured.
const ORDER_STENCIL: StencilOrder = StencilOrder::Fourth;
const GRIDS: [usize; 3] = [32, 64, 128];
const WILLMORE_SET: [&str; 4] = ["clifford", "catenoid", "enneper", "twistor"];
const DARBOUX_SURFACES: [&str; 3] = ["clifford_patch", "catenoid", "enneper"];

fn mus() -> [Complex64; 3] {
    [
        Complex64::new(2.0, 0.0),
        Complex64::new(1.0, 1.0),
        Complex64::new(0.3, 0.0),
    ]
}

fn lambdas() -> [Complex64; 3] {
    [
        Complex64::new(2.0, 0.0),
        Complex64::new(0.5, 0.0),
        Complex64::new(1.0, 1.0),
    ]
}

/// `fmt` plus a marker when the series passes only because it sits at the
/// roundoff floor, where no order is observable.
fn series(r: &[f64]) -> String {
    if r.iter().all(|v| *v < tol::ROUNDOFF_FLOOR) {
        format!(
            "{} — at roundoff floor (< {:.0e}), no order observable",
            fmt(r),
            tol::ROUNDOFF_FLOOR
        )
    } else {
        fmt(r)
    }
}

fn spec(name: &str) -> SurfaceSpec {
    SurfaceSpec::from_name(name).unwrap()
}

/// Outcome of one criterion: individual checks with their numbers.
#[derive(Default)]
struct Crit {
    lines: Vec<(bool, String)>,
}

impl Crit {
    fn check(&mut self, ok: bool, msg: impl Into<String>) {
        self.lines.push((ok, msg.into()));
    }
    fn note(&mut self, msg: impl Into<String>) {
        self.lines.push((true, format!("note: {}", msg.into())));
    }
    fn passed(&self) -> bool {
        !self.lines.is_empty() && self.lines.iter().all(|(ok, _)| *ok)
    }
}

// 1 ─ Energy cross-check.
fn c1() -> Crit {
    let mut c = Crit::default();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let t0 = Instant::now();
    let (w, wc) = pool.install(|| {
        let f = generate(&SurfaceSpec::clifford(), 96, 96, StencilOrder::default()).unwrap();
        let an = Analysis::new(f).unwrap();
        (
            willmore_energy(&an.hopf),
            willmore_energy_classical(&an.f).unwrap(),
        )
    });
    let secs = t0.elapsed().as_secs_f64();
    let rel = (w / (2.0 * PI * PI) - 1.0).abs();
    c.check(
        rel < tol::CLIFFORD_ENERGY_REL,
        format!(
            "W_hopf = {w:.8} vs 2π² = {:.8}: rel {rel:.2e} (< {:.0e})",
            2.0 * PI * PI,
            tol::CLIFFORD_ENERGY_REL
        ),
    );
    let cross = (w - wc).abs() / w;
    c.check(
        cross < tol::ENERGY_CROSS_REL,
        format!(
            "W_classical = {wc:.8}: |ΔW|/W = {cross:.2e} (< {:.0e})",
            tol::ENERGY_CROSS_REL
        ),
    );
    c.check(
        secs < tol::CLIFFORD_RUNTIME_S,
        format!(
            "runtime single-threaded {secs:.3} s (< {} s)",
            tol::CLIFFORD_RUNTIME_S
        ),
    );
    c
}

// 2 ─ Sphere degeneration.
fn c2() -> Crit {
    let mut c = Crit::default();
    let an = analyze("mercator", 128);
    let ds = an.hopf.ds.sup_norm();
    let w = willmore_energy(&an.hopf);
    c.check(
        ds < tol::SPHERE_SUP_DS,
        format!(
            "Mercator 128²: sup|dS| = {ds:.2e} (< {:.0e})",
            tol::SPHERE_SUP_DS
        ),
    );
    c.check(
        w.abs() < tol::SPHERE_ENERGY,
        format!("W = {w:.2e} (< {:.0e})", tol::SPHERE_ENERGY),
    );
    c
}

// 3 ─ Harmonicity separation.
fn c3() -> Crit {
    let mut c = Crit::default();
    for name in WILLMORE_SET {
        let r: Vec<f64> = GRIDS
            .iter()
            .map(|&n| harmonicity_residual(&analyze_spec(&spec(name), n, ORDER_STENCIL).hopf).a)
            .collect();
        c.check(
            converges(&r, tol::HARMONICITY_ORDER),
            format!(
                "{name}: d*A residual {} (order ≥ {})",
                series(&r),
                tol::HARMONICITY_ORDER
            ),
        );
    }
    let rev = SurfaceSpec::revolution(3.0, 1.0);
    let r: Vec<f64> = GRIDS
        .iter()
        .map(|&n| harmonicity_residual(&analyze_spec(&rev, n, ORDER_STENCIL).hopf).a)
        .collect();
    let min = r.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = r.iter().cloned().fold(0.0, f64::max);
    c.check(
        min > tol::NON_WILLMORE_FLOOR,
        format!(
            "revolution(3,1): {} (all > {})",
            fmt(&r),
            tol::NON_WILLMORE_FLOOR
        ),
    );
    // Stable under refinement: the residual neither decays nor grows.
    c.check(
        max / min < 2.0,
        format!(
            "revolution(3,1): max/min over grids = {:.3} (< 2)",
            max / min
        ),
    );
    c
}

// 4 ─ Flat family at desk scale.
fn c4() -> Crit {
    let mut c = Crit::default();
    for name in WILLMORE_SET {
        let ans: Vec<Analysis> = GRIDS
            .iter()
            .map(|&n| analyze_spec(&spec(name), n, ORDER_STENCIL))
            .collect();
        for lam in lambdas() {
            // Curvature of d^λ in the scale-free normalization of the
            // harmonicity residual: ℓ·sup|R^λ| / sup|dS| over the interior.
            let r: Vec<f64> = ans
                .iter()
                .map(|an| {
                    let fam = ConnectionFamily::new(&an.s, &an.hopf);
                    let rep = fam.curvature_identity(lam).unwrap();
                    an.f.grid.chart_scale() * rep.sup_curvature_interior / fam.ds_scale
                })
                .collect();
            c.check(
                converges(&r, tol::HARMONICITY_ORDER),
                format!("{name}, λ = {lam}: curvature {}", series(&r)),
            );
        }
    }
    let an = analyze("revolution", 128);
    let fam = ConnectionFamily::new(&an.s, &an.hopf);
    for lam in lambdas() {
        let rep = fam.curvature_identity(lam).unwrap();
        c.check(
            rep.residual < tol::CURVATURE_IDENTITY_REL,
            format!(
                "revolution(3,1) 128², λ = {lam}: sup|R^λ| = {:.3}, closed-form residual {:.2e} (< {}); projections exchanged: {:.3}",
                rep.sup_curvature, rep.residual, tol::CURVATURE_IDENTITY_REL, rep.residual_alt_projection_order
            ),
        );
    }
    c.note("closed form R^λ = (d*A)S((λ−1)π_E⊥ + (λ⁻¹−1)π_E), π_E = ½(1 − IS); the exchanged order does not hold");
    c
}

/// `a, b, T` from the standard frame of `d^μ`; on a torus the transport runs
/// on the cut fundamental square, which leaves the pointwise algebra intact.
fn abt(an: &Analysis, mu: Complex64) -> TField {
    let fam = ConnectionFamily::new(&an.s, &an.hopf);
    let opts = TransportOptions {
        allow_torus: an.f.grid.topology == Topology::Torus,
        ..Default::default()
    };
    let frame = parallel_sections(&fam, mu, DarbouxOptions::new(mu).init, opts).unwrap();
    build_abt(&an.s, &frame).unwrap()
}

// 5 ─ Algebraic identity suite.
fn c5() -> Crit {
    let mut c = Crit::default();
    let cases: [(&str, usize); 8] = [
        ("clifford", 64),
        ("clifford_patch", 64),
        ("mercator", 64),
        ("catenoid", 64),
        ("enneper", 64),
        ("revolution", 64),
        ("twistor", 64),
        ("twistor_torus", 128),
    ];
    for (name, n) in cases {
        let an = analyze(name, n);
        let e3 = type_relation_residual(&an.s, &an.hopf);
        let eds = ds_identity_residual(&an.hopf);
        let one = ComplexMat4::identity();
        let proj =
            an.s.s
                .data
                .iter()
                .map(|s| {
                    let (pe, pp) = eigenprojections(s).unwrap();
                    (pe + pp - one).norm() / one.norm()
                })
                .fold(0.0, f64::max);
        let mut ab = 0.0f64;
        let mut comm = 0.0f64;
        for mu in mus() {
            let tf = abt(&an, mu);
            ab = ab.max(tf.ab_square_residual);
            comm = comm.max(tf.ab_commutator);
        }
        let worst = e3.max(eds).max(proj).max(ab).max(comm);
        c.check(
            worst < tol::ALGEBRAIC_REL,
            format!("{name} {n}²: *A=SA=−AS, *Q=−SQ=QS {e3:.1e}, dS=2(*Q−*A) {eds:.1e}, a²+b²=E₂ {ab:.1e}, [a,b] {comm:.1e}, π_E+π_E⊥=1 {proj:.1e}"),
        );
    }
    c
}

/// Darboux reports for each grid of [`GRIDS`], for one surface, μ and
/// conjugation.
fn darboux_series(name: &str, mu: Complex64, conj: Conjugation) -> Vec<DarbouxReport> {
    GRIDS
        .iter()
        .map(|&n| {
            let an = analyze_spec(&spec(name), n, ORDER_STENCIL);
            let opts = DarbouxOptions {
                conjugation: conj,
                ..DarbouxOptions::new(mu)
            };
            darboux(&an, &opts).unwrap().report
        })
        .collect()
}

/// Residual series of the criterion-6 suite: `(label, values)`.
fn darboux_suite(reps: &[DarbouxReport]) -> Vec<(&'static str, Vec<f64>)> {
    let col = |f: &dyn Fn(&DarbouxReport) -> f64| reps.iter().map(f).collect::<Vec<f64>>();
    vec![
        ("Riccati dT", col(&|r| r.transform.riccati_residual)),
        (
            "Ŝ = 2T⁻¹ + b(a−1)⁻¹",
            col(&|r| r.transform.hat_s_closed_form),
        ),
        ("*Â", col(&|r| r.transform.hat_a_residual)),
        ("*Q̂", col(&|r| r.transform.hat_q_residual)),
        ("im Â ⊂ L̂", col(&|r| r.line.im_a_hat_in_l_hat)),
        ("L̂ ⊂ ker Q̂", col(&|r| r.line.l_hat_in_ker_q_hat)),
        ("d*Â", col(&|r| r.transform.hat_s_harmonicity)),
    ]
}

fn suite_passes(reps: &[DarbouxReport]) -> bool {
    darboux_suite(reps)
        .iter()
        .all(|(_, r)| converges(r, tol::DARBOUX_ORDER))
}

// 6 ─ μ-Darboux identity suite on the Clifford patch.
fn c6() -> Crit {
    let mut c = Crit::default();
    for mu in mus() {
        let reps = darboux_series("clifford_patch", mu, Conjugation::TInvST);
        for (label, r) in darboux_suite(&reps) {
            c.check(
                converges(&r, tol::DARBOUX_ORDER),
                format!("μ = {mu}, {label}: {}", series(&r)),
            );
        }
        let alt: Vec<String> = reps
            .iter()
            .map(|r| {
                format!(
                    "Riccati {:.2}, Q̂ {:.2}",
                    r.transform.riccati_residual_alt_form, r.transform.hat_q_residual_opposite_sign
                )
            })
            .collect();
        c.note(format!(
            "μ = {mu}, alternative forms dT = *Q(a−1) + 2T*AT and *Q̂ = +2T⁻¹*Q(a−1)T⁻¹: {}",
            alt.join("; ")
        ));
    }
    c
}

// 7 ─ Unit-circle triviality.
fn c7() -> Crit {
    let mut c = Crit::default();
    let an = analyze("clifford_patch", 64);
    for theta in [PI / 3.0, PI / 2.0, PI] {
        let rep = darboux(&an, &DarbouxOptions::new(Complex64::from_polar(1.0, theta)))
            .unwrap()
            .report;
        let d = rep.transform.hat_s_minus_s;
        c.check(
            d < tol::UNIT_CIRCLE_SUP,
            format!(
                "θ = {theta:.4}: sup|Ŝ − S| = {d:.2e} (< {:.0e})",
                tol::UNIT_CIRCLE_SUP
            ),
        );
    }
    c
}

// 8 ─ Convention resolution.
fn c8() -> Crit {
    let mut c = Crit::default();
    for name in DARBOUX_SURFACES {
        let mut pass = [true, true];
        for mu in mus() {
            for (k, conj) in [Conjugation::TInvST, Conjugation::TSTInv]
                .into_iter()
                .enumerate()
            {
                pass[k] &= suite_passes(&darboux_series(name, mu, conj));
            }
        }
        c.check(
            pass[0] != pass[1],
            format!(
                "{name}: T⁻¹ST {}, TST⁻¹ {}",
                if pass[0] { "passes" } else { "fails" },
                if pass[1] { "passes" } else { "fails" }
            ),
        );
    }
    c
}

// 9 ─ Basis independence.
fn c9() -> Crit {
    let mut c = Crit::default();
    for name in DARBOUX_SURFACES {
        let an = analyze(name, 64);
        for mu in mus() {
            let b = darboux(&an, &DarbouxOptions::new(mu))
                .unwrap()
                .report
                .basis_independence;
            c.check(
                b < tol::BASIS_INDEPENDENCE,
                format!(
                    "{name} 64², μ = {mu}: sup|Ŝ − Ŝ'| = {b:.2e} (< {:.0e})",
                    tol::BASIS_INDEPENDENCE
                ),
            );
        }
    }
    c
}

// 10 ─ Sequence classification.
fn c10() -> Crit {
    let mut c = Crit::default();
    let cat = willmore_sequence(&analyze("catenoid", 64), None, 4).unwrap();
    let var = cat
        .steps
        .iter()
        .filter(|s| s.status == StepStatus::ConstantPoint)
        .map(|s| s.projective_variance)
        .fold(f64::NAN, f64::max);
    c.check(
        var < tol::CONSTANT_POINT && matches!(cat.shape, Shape::Finite { .. }),
        format!(
            "catenoid 64²: {} shape {}, constant-point variance {var:.2e} (< {:.0e})",
            cat.pattern,
            cat.shape.label(),
            tol::CONSTANT_POINT
        ),
    );
    let tw = willmore_sequence(&analyze("twistor", 128), None, 4).unwrap();
    let f0 = tw.steps.iter().find(|s| s.index == 0).unwrap();
    c.check(
        f0.status == StepStatus::AZero && tw.forward_end == End::HopfZero,
        format!(
            "twistor 128²: {} shape {}, input status {:?} (A ≡ 0), A/dS = {:.1e}",
            tw.pattern,
            tw.shape.label(),
            f0.status,
            f0.a_relative.unwrap_or(f64::NAN)
        ),
    );
    let cl = willmore_sequence(&analyze("clifford", 32), Some(1), 4).unwrap();
    c.check(
        cl.shape == Shape::Undetermined { n_max: 4 },
        format!(
            "clifford 32²: {} shape {} (no termination within n_max = 4)",
            cl.pattern,
            cl.shape.label()
        ),
    );
    c
}

// 11 ─ Energy bound.
fn c11() -> Crit {
    let mut c = Crit::default();
    for (name, n) in [("clifford", 32), ("twistor_torus", 512)] {
        let sp = spec(name);
        let rep = willmore_sequence(&analyze(name, n), sp.genus(), 4).unwrap();
        c.check(
            !rep.energy_bounds.is_empty(),
            format!(
                "{name} {n}²: sequence {} (backward {:?}, forward {:?}); {} bound(s) evaluated",
                rep.pattern,
                rep.backward_end,
                rep.forward_end,
                rep.energy_bounds.len()
            ),
        );
        for b in &rep.energy_bounds {
            c.check(
                b.holds,
                format!(
                    "{name} {n}²: n = {}, g = {}, deg⊥ = {}: W/4π = {:.4e} ≥ {} (slack {:.3e})",
                    b.n, b.genus, b.normal_degree, b.lhs, b.rhs, b.slack
                ),
            );
        }
    }
    c.note("twistor torus: W ≈ 0 makes n = 0 an equality; W is a sum of pointwise ⟨A∧*A⟩ ≥ 0, so the slack cannot be negative beyond rounding");
    c.note(
        "revolution(3,1) is closed but not Willmore; it has no Willmore sequence and is excluded",
    );
    c
}

// 12 ─ Normal bundle degree.
fn c12() -> Crit {
    let mut c = Crit::default();
    for (name, n) in [
        ("clifford", 64),
        ("revolution", 128),
        ("twistor_torus", 128),
    ] {
        let d = normal_bundle_degree(&analyze(name, n).f).unwrap();
        c.check(
            d.distance < tol::DEGREE_INTEGRALITY,
            format!(
                "{name} {n}²: deg⊥ = {:.6} (nearest {}, distance {:.1e} < {})",
                d.value,
                d.nearest,
                d.distance,
                tol::DEGREE_INTEGRALITY
            ),
        );
        if name == "clifford" {
            c.check(
                d.value.abs() < tol::CLIFFORD_DEGREE,
                format!(
                    "clifford: |deg⊥| = {:.1e} (< {:.0e})",
                    d.value.abs(),
                    tol::CLIFFORD_DEGREE
                ),
            );
        }
        if name == "twistor_torus" {
            c.check(
                d.nearest == 8,
                format!("twistor torus: nearest integer {} (expected 8)", d.nearest),
            );
        }
    }
    c
}

type Criterion = (&'static str, fn() -> Crit);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("energy cross-check", c1),
        ("sphere degeneration", c2),
        ("harmonicity separation", c3),
        ("flat family", c4),
        ("algebraic identities", c5),
        ("μ-Darboux identities", c6),
        ("unit-circle triviality", c7),
        ("convention resolution", c8),
        ("basis independence", c9),
        ("sequence classification", c10),
        ("energy bound", c11),
        ("normal degree integrality", c12),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for (k, (title, f)) in criteria.iter().enumerate() {
        let id = format!("criterion {:>2}", k + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|p| id.ends_with(&format!(" {p}")) || title.contains(p.as_str()))
        {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        let crit = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            let mut c = Crit::default();
            c.check(false, format!("panicked: {}", msg.unwrap_or_default()));
            c
        });
        let ok = crit.passed();
        println!(
            "{id} {}: {title} ({:.1} s)",
            if ok { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64()
        );
        for (good, line) in &crit.lines {
            println!("    {} {line}", if *good { " " } else { "✗" });
        }
        if !ok {
            failed.push(k + 1);
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
