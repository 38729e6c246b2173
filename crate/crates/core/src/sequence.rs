//! Bäcklund transforms `L₁ = ker A`, `L₋₁ = im Q`, the Willmore sequence
//! obtained by iterating them, its classification into the five possible
//! shapes, the normal bundle degree and the energy bound for surfaces with
//! `n` Bäcklund transforms.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::calc::{boundary_band, interior_sup, Field, Grid, OneForm, Topology};
use crate::error::{Result, WforgeError};
use crate::immersion::{best_chart, project, AffineImmersion, LineBundle};
use crate::meancurv::{
    harmonicity_residual, is_constant_congruence, normal_curvature_integral, stability_residual,
    willmore_energy, Analysis, HopfFieldPair, HARMONICITY_LAYERS,
};
use crate::quat::{complexify_mat, decomplexify, ComplexMat4, QuatMat2, QuatVec2};
pub use crate::tolerances::{
    CHART_MARGIN_MIN, CONSTANT_POINT_VARIANCE, HOPF_ZERO_REL, RANK_GAP, WILLMORE_ACCEPT,
    ZERO_VERTEX_REL,
};

/// Which Hopf field a Bäcklund transform is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `L₁ = ker A`.
    Forward,
    /// `L₋₁ = im Q`.
    Backward,
}

/// A Bäcklund transform with the diagnostics of its extraction.
#[derive(Debug, Clone)]
pub struct Backlund {
    pub line: LineBundle,
    /// Vertices at zeros of the Hopf field whose line came from neighbours.
    pub filled_vertices: usize,
    /// Smallest singular-value gap over the non-zero vertices.
    pub min_gap: f64,
}

fn hopf_field(hp: &HopfFieldPair, dir: Direction) -> &OneForm<QuatMat2> {
    match dir {
        Direction::Forward => &hp.a,
        Direction::Backward => &hp.q,
    }
}

/// `sup |A| / sup |dS|` (forward) or `sup |Q| / sup |dS|` (backward), both
/// sups over the interior band used by the harmonicity residual: transforms
/// stack several derivatives, and one-sided boundary rows would otherwise
/// dominate. Zero for a constant congruence, where the ratio would compare
/// noise with noise.
pub fn hopf_relative_size(hp: &HopfFieldPair, dir: Direction) -> f64 {
    if is_constant_congruence(hp) {
        return 0.0;
    }
    let g = hp.ds.grid;
    let band = boundary_band(&g, HARMONICITY_LAYERS);
    let sup =
        |w: &OneForm<QuatMat2>| interior_sup(&g, &w.x, band).max(interior_sup(&g, &w.y, band));
    let ds = sup(&hp.ds);
    let h = sup(hopf_field(hp, dir));
    if ds > 0.0 {
        h / ds
    } else {
        h
    }
}

/// Ascending eigenvalues and matching eigenvectors of a Hermitian 4×4.
fn sorted_eigen(m: ComplexMat4) -> ([f64; 4], [crate::quat::ComplexVec4; 4]) {
    let eig = SymmetricEigen::new(m);
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.map(|i| eig.eigenvalues[i].max(0.0));
    let vecs = idx.map(|i| eig.eigenvectors.column(i).into_owned());
    (vals, vecs)
}

fn neighbours(g: &Grid, k: usize) -> impl Iterator<Item = usize> + '_ {
    let (i, j) = g.ij(k);
    let step = |v: usize, n: usize, periodic: bool, fwd: bool| -> Option<usize> {
        match (fwd, periodic) {
            (true, _) if v + 1 < n => Some(v + 1),
            (true, true) => Some(0),
            (false, _) if v > 0 => Some(v - 1),
            (false, true) => Some(n - 1),
            _ => None,
        }
    };
    [
        step(i, g.nx, g.periodic_x, true).map(|a| g.idx(a, j)),
        step(i, g.nx, g.periodic_x, false).map(|a| g.idx(a, j)),
        step(j, g.ny, g.periodic_y, true).map(|b| g.idx(i, b)),
        step(j, g.ny, g.periodic_y, false).map(|b| g.idx(i, b)),
    ]
    .into_iter()
    .flatten()
}

/// Line spanned by the dominant quaternionic direction of a sum of complexified
/// line projectors.
fn dominant_line(p: ComplexMat4) -> QuatVec2 {
    let (_, vecs) = sorted_eigen(p);
    decomplexify(&vecs[3]).normalized()
}

fn complex_projector(v: QuatVec2) -> ComplexMat4 {
    complexify_mat(&QuatMat2::line_projector(v))
}

/// The forward (`ker A`) or backward (`im Q`) Bäcklund transform.
///
/// At each vertex the complexified `A(∂x)`, `A(∂y)` are stacked into the
/// Hermitian `A_x†A_x + A_y†A_y`; its two smallest eigenvalues span the
/// kernel (a quaternionic line, so they come as a pair). For `Q` the image
/// is the top eigenspace of `Q_xQ_x† + Q_yQ_y†`. Zeros of the field are
/// isolated, so vertices where it nearly vanishes take the averaged line of
/// their resolved neighbours.
pub fn backlund(hp: &HopfFieldPair, dir: Direction) -> Result<Backlund> {
    let field = hopf_field(hp, dir);
    let g = field.grid;
    let rel = hopf_relative_size(hp, dir);
    if rel < HOPF_ZERO_REL {
        let which = if dir == Direction::Forward { 'A' } else { 'Q' };
        return Err(WforgeError::HopfFieldZero { which, sup: rel });
    }
    let n = g.len();
    let mut lines: Vec<Option<QuatVec2>> = vec![None; n];
    let mut top = vec![0.0; n];
    let mut gaps = vec![f64::INFINITY; n];
    for k in 0..n {
        let (x, y) = (complexify_mat(&field.x[k]), complexify_mat(&field.y[k]));
        let m = match dir {
            Direction::Forward => x.adjoint() * x + y.adjoint() * y,
            Direction::Backward => x * x.adjoint() + y * y.adjoint(),
        };
        let (vals, vecs) = sorted_eigen(m);
        let sv = vals.map(f64::sqrt);
        top[k] = sv[3];
        gaps[k] = sv[2] / sv[1].max(f64::MIN_POSITIVE);
        let v = match dir {
            Direction::Forward => vecs[0],
            Direction::Backward => vecs[3],
        };
        lines[k] = Some(decomplexify(&v).normalized());
    }
    let sup = top.iter().cloned().fold(0.0, f64::max);
    let mut min_gap = f64::INFINITY;
    let mut filled = 0;
    for k in 0..n {
        if top[k] < ZERO_VERTEX_REL * sup {
            lines[k] = None;
            filled += 1;
        } else {
            if gaps[k] < RANK_GAP {
                return Err(WforgeError::RankAmbiguous {
                    vertex: g.ij(k),
                    gap: gaps[k],
                });
            }
            min_gap = min_gap.min(gaps[k]);
        }
    }
    // Fill zeros layer by layer from resolved neighbours (Jacobi sweeps keep
    // the result independent of traversal order).
    while lines.iter().any(Option::is_none) {
        let updates: Vec<(usize, QuatVec2)> = (0..n)
            .filter(|&k| lines[k].is_none())
            .filter_map(|k| {
                let mut acc = ComplexMat4::zeros();
                let mut count = 0;
                for nb in neighbours(&g, k) {
                    if let Some(v) = lines[nb] {
                        acc += complex_projector(v);
                        count += 1;
                    }
                }
                (count > 0).then(|| (k, dominant_line(acc)))
            })
            .collect();
        if updates.is_empty() {
            return Err(WforgeError::StepDegenerate {
                step: if dir == Direction::Forward { 1 } else { -1 },
                reason: "Hopf field has no vertex with a resolvable line".into(),
            });
        }
        for (k, v) in updates {
            lines[k] = Some(v);
        }
    }
    let data = lines.into_iter().map(|v| v.expect("filled")).collect();
    Ok(Backlund {
        line: LineBundle {
            psi: Field { grid: g, data },
        },
        filled_vertices: filled,
        min_gap,
    })
}

/// Mean squared distance of the pointwise projectors `ψψ†/|ψ|²` from their
/// average; zero exactly for a constant point of HP¹.
pub fn projective_variance(l: &LineBundle) -> f64 {
    let n = l.psi.data.len() as f64;
    let projs: Vec<QuatMat2> = l
        .psi
        .data
        .iter()
        .map(|v| QuatMat2::line_projector(*v))
        .collect();
    let mean = projs.iter().fold(QuatMat2::ZERO, |acc, p| acc + *p) * (1.0 / n);
    projs.iter().map(|p| (*p - mean).norm_sqr()).sum::<f64>() / n
}

/// What a position in the Willmore sequence holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepStatus {
    /// Non-constant Willmore surface with `A ≠ 0` and `Q ≠ 0`.
    Surface,
    /// Constant point of S⁴.
    ConstantPoint,
    /// Surface with `A ≡ 0`: the sequence stops going forward.
    AZero,
    /// Surface with `Q ≡ 0`: the sequence stops going backward.
    QZero,
    /// Surface with `A ≡ 0` and `Q ≡ 0` (constant conformal Gauss map).
    BothZero,
}

/// One position `f_i` of the sequence.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SequenceStep {
    pub index: i32,
    pub status: StepStatus,
    pub projective_variance: f64,
    /// `sup |A| / sup |dS|`, for surfaces.
    pub a_relative: Option<f64>,
    /// `sup |Q| / sup |dS|`, for surfaces.
    pub q_relative: Option<f64>,
    /// Harmonicity residual of the recomputed conformal Gauss map.
    pub harmonicity: Option<f64>,
    pub willmore_energy: Option<f64>,
    pub conformality: Option<f64>,
    /// `S_{i∓1} L_i = L_i` against the neighbouring step it came from.
    pub parent_stability: Option<f64>,
    /// Zeros of the parent's Hopf field filled from neighbours.
    pub filled_vertices: usize,
    pub min_rank_gap: Option<f64>,
    /// `min |ψ₂| / |ψ|` in the chart used for the recomputation.
    pub chart_margin: Option<f64>,
}

/// How the sequence ends on one side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum End {
    /// A constant point `∘`.
    Point,
    /// The last surface has `A ≡ 0`, drawn `)`, or `Q ≡ 0`, drawn `(`.
    HopfZero,
    /// No termination within `n_max` steps.
    Open,
    /// Step `step` could not be resolved numerically (branch points, rank
    /// ambiguity, loss of harmonicity); drawn `?`.
    Degenerate { step: i32, reason: String },
}

/// Shape of the sequence, numbered by the classification of finite
/// Willmore sequences:
/// 1 `∘ — f — ∘`, 2 `∘ — f — )` or `( — f — ∘`, 3 `( — f — )`,
/// 4 `( — f — • — )` or `( — • — f — )`, 5 infinite in both directions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Finite {
        code: u8,
    },
    /// Neither side terminated within `n_max` steps (shape 5 candidate).
    Undetermined {
        n_max: usize,
    },
    /// One side is still open after `n_max` steps.
    OneSided {
        n_max: usize,
    },
    /// A step could not be resolved; the shape is unknown.
    Incomplete,
    /// Terminated on both sides but in a pattern the classification excludes; points
    /// at a numerical failure.
    Inconsistent,
}

impl Shape {
    pub fn label(&self) -> String {
        match self {
            Shape::Finite { code } => format!("({code})"),
            Shape::Undetermined { n_max } => format!("undetermined({n_max})"),
            Shape::OneSided { n_max } => format!("one_sided({n_max})"),
            Shape::Incomplete => "incomplete".into(),
            Shape::Inconsistent => "inconsistent".into(),
        }
    }
}

/// `(1/4π)W ≥ −4n(n+1)(g−1) − n·deg⊥`, with `slack = LHS − RHS`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct EnergyBound {
    pub n: usize,
    pub genus: u32,
    pub normal_degree: i64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    pub holds: bool,
}

pub fn energy_bound_check(w: f64, n: usize, genus: u32, normal_degree: i64) -> EnergyBound {
    let (nf, gf) = (n as f64, genus as f64);
    let lhs = w / (4.0 * std::f64::consts::PI);
    // `+ 0.0` folds a negative zero into `0.0` for stable reports.
    let rhs = -4.0 * nf * (nf + 1.0) * (gf - 1.0) - nf * normal_degree as f64 + 0.0;
    EnergyBound {
        n,
        genus,
        normal_degree,
        lhs,
        rhs,
        slack: lhs - rhs,
        holds: lhs >= rhs,
    }
}

/// `(1/2π)∫K⊥ dA` with its nearest integer.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct NormalDegree {
    pub value: f64,
    pub nearest: i64,
    pub distance: f64,
}

/// Normal bundle degree of a closed surface; patches give
/// [`WforgeError::NotClosed`] carrying the bare integral.
pub fn normal_bundle_degree(f: &AffineImmersion) -> Result<NormalDegree> {
    let value = normal_curvature_integral(f)?;
    if f.grid.topology != Topology::Torus {
        return Err(WforgeError::NotClosed { integral: value });
    }
    let nearest = value.round();
    Ok(NormalDegree {
        value,
        nearest: nearest as i64,
        distance: (value - nearest).abs(),
    })
}

/// The classified Willmore sequence.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SequenceReport {
    pub n_max: usize,
    /// Steps ordered from the most backward to the most forward; `f` has
    /// index 0.
    pub steps: Vec<SequenceStep>,
    pub backward_end: End,
    pub forward_end: End,
    /// Pictogram with `∘` points, `•` surfaces, `f` the input, `(`/`)` for
    /// `Q ≡ 0`/`A ≡ 0`.
    pub pattern: String,
    pub shape: Shape,
    /// Patch input: genus and degree are meaningless, the shape is local.
    pub local_only: bool,
    /// Zeros of a Hopf field were bridged by neighbour smoothing somewhere.
    pub smoothing_used: bool,
    pub normal_degree: Option<NormalDegree>,
    /// Bound for `n = 0 ..=` the number of verified transforms in either
    /// direction (closed surfaces only).
    pub energy_bounds: Vec<EnergyBound>,
}

struct Walk {
    steps: Vec<SequenceStep>,
    end: End,
}

fn surface_status(hp: &HopfFieldPair) -> StepStatus {
    let az = hopf_relative_size(hp, Direction::Forward) < HOPF_ZERO_REL;
    let qz = hopf_relative_size(hp, Direction::Backward) < HOPF_ZERO_REL;
    match (az, qz) {
        (true, true) => StepStatus::BothZero,
        (true, false) => StepStatus::AZero,
        (false, true) => StepStatus::QZero,
        (false, false) => StepStatus::Surface,
    }
}

fn surface_step(index: i32, an: &Analysis, l: &LineBundle) -> SequenceStep {
    SequenceStep {
        index,
        status: surface_status(&an.hopf),
        projective_variance: projective_variance(l),
        a_relative: Some(hopf_relative_size(&an.hopf, Direction::Forward)),
        q_relative: Some(hopf_relative_size(&an.hopf, Direction::Backward)),
        harmonicity: Some(harmonicity_residual(&an.hopf).a),
        willmore_energy: Some(willmore_energy(&an.hopf)),
        conformality: Some(an.normals.conformality_residual),
        parent_stability: None,
        filled_vertices: 0,
        min_rank_gap: None,
        chart_margin: None,
    }
}

fn stops(status: StepStatus, dir: Direction) -> bool {
    match dir {
        Direction::Forward => matches!(status, StepStatus::AZero | StepStatus::BothZero),
        Direction::Backward => matches!(status, StepStatus::QZero | StepStatus::BothZero),
    }
}

enum Outcome {
    Point(SequenceStep),
    Surface(Box<Analysis>, SequenceStep),
}

/// One Bäcklund step from `parent`: the transform, and for a non-constant
/// line the recomputed conformal Gauss map in a chart away from `∞`.
fn advance(parent: &Analysis, dir: Direction, index: i32) -> Result<Outcome> {
    let bt = backlund(&parent.hopf, dir)?;
    let var = projective_variance(&bt.line);
    let parent_stability = stability_residual(&parent.s, &bt.line);
    let gap = bt.min_gap.is_finite().then_some(bt.min_gap);
    if var < CONSTANT_POINT_VARIANCE {
        return Ok(Outcome::Point(SequenceStep {
            index,
            status: StepStatus::ConstantPoint,
            projective_variance: var,
            a_relative: None,
            q_relative: None,
            harmonicity: None,
            willmore_energy: None,
            conformality: None,
            parent_stability: Some(parent_stability),
            filled_vertices: bt.filled_vertices,
            min_rank_gap: gap,
            chart_margin: None,
        }));
    }
    let (g, margin) = best_chart(&bt.line.psi);
    if margin < CHART_MARGIN_MIN {
        return Err(WforgeError::StepDegenerate {
            step: index,
            reason: format!(
                "no chart keeps the transform away from infinity (margin {margin:.2e})"
            ),
        });
    }
    let moved = LineBundle {
        psi: bt.line.psi.map(|v| g.apply(*v)),
    };
    let an = Analysis::new(project(&moved)?)?;
    let mut step = surface_step(index, &an, &moved);
    if let Some(h) = step.harmonicity.filter(|h| *h > WILLMORE_ACCEPT) {
        return Err(WforgeError::StepDegenerate {
            step: index,
            reason: format!("recomputed conformal Gauss map has harmonicity residual {h:.2e}"),
        });
    }
    step.parent_stability = Some(parent_stability);
    step.filled_vertices = bt.filled_vertices;
    step.min_rank_gap = gap;
    step.chart_margin = Some(margin);
    Ok(Outcome::Surface(Box::new(an), step))
}

fn walk(start: &Analysis, start_status: StepStatus, dir: Direction, n_max: usize) -> Walk {
    let sign = if dir == Direction::Forward { 1 } else { -1 };
    let mut steps = Vec::new();
    let mut current: Option<Box<Analysis>> = None;
    let mut status = start_status;
    for i in 1..=n_max {
        if stops(status, dir) {
            return Walk {
                steps,
                end: End::HopfZero,
            };
        }
        let index = sign * i as i32;
        let parent = current.as_deref().unwrap_or(start);
        match advance(parent, dir, index) {
            Ok(Outcome::Point(step)) => {
                steps.push(step);
                return Walk {
                    steps,
                    end: End::Point,
                };
            }
            Ok(Outcome::Surface(an, step)) => {
                status = step.status;
                steps.push(step);
                current = Some(an);
            }
            Err(e) => {
                let reason = match e {
                    WforgeError::StepDegenerate { reason, .. } => reason,
                    other => other.to_string(),
                };
                return Walk {
                    steps,
                    end: End::Degenerate {
                        step: index,
                        reason,
                    },
                };
            }
        }
    }
    let end = if stops(status, dir) {
        End::HopfZero
    } else {
        End::Open
    };
    Walk { steps, end }
}

fn glyph(s: &SequenceStep) -> char {
    if s.status == StepStatus::ConstantPoint {
        '∘'
    } else {
        '•'
    }
}

fn classify(back: &Walk, fwd: &Walk, n_max: usize) -> (String, Shape) {
    let mut parts: Vec<String> = Vec::new();
    parts.push(
        match back.end {
            End::HopfZero => "(",
            End::Open => "…",
            End::Point => "",
            End::Degenerate { .. } => "?",
        }
        .to_string(),
    );
    for s in back.steps.iter().rev() {
        parts.push(glyph(s).to_string());
    }
    parts.push("f".into());
    for s in &fwd.steps {
        parts.push(glyph(s).to_string());
    }
    parts.push(
        match fwd.end {
            End::HopfZero => ")",
            End::Open => "…",
            End::Point => "",
            End::Degenerate { .. } => "?",
        }
        .to_string(),
    );
    let pattern = parts
        .into_iter()
        .filter(|p| !p.is_empty())
        .collect::<Vec<_>>()
        .join(" — ");
    let shape = match (&back.end, &fwd.end) {
        (End::Degenerate { .. }, _) | (_, End::Degenerate { .. }) => Shape::Incomplete,
        (End::Open, End::Open) => Shape::Undetermined { n_max },
        (End::Open, _) | (_, End::Open) => Shape::OneSided { n_max },
        _ => {
            let code = match pattern.as_str() {
                "∘ — f — ∘" => Some(1),
                "∘ — f — )" | "( — f — ∘" => Some(2),
                "( — f — )" => Some(3),
                "( — f — • — )" | "( — • — f — )" => Some(4),
                _ => None,
            };
            code.map_or(Shape::Inconsistent, |code| Shape::Finite { code })
        }
    };
    (pattern, shape)
}

/// Iterates Bäcklund transforms up to `n_max` steps in each direction,
/// recomputing the conformal Gauss map at every surface step, and
/// classifies the result.
pub fn willmore_sequence(
    analysis: &Analysis,
    genus: Option<u32>,
    n_max: usize,
) -> Result<SequenceReport> {
    let harm = harmonicity_residual(&analysis.hopf).a;
    if harm > WILLMORE_ACCEPT {
        return Err(WforgeError::NotWillmore {
            residual: harm,
            limit: WILLMORE_ACCEPT,
        });
    }
    let f0 = surface_step(0, analysis, &analysis.lift);
    let fwd = walk(analysis, f0.status, Direction::Forward, n_max);
    let back = walk(analysis, f0.status, Direction::Backward, n_max);
    let (pattern, shape) = classify(&back, &fwd, n_max);
    let smoothing_used = fwd
        .steps
        .iter()
        .chain(&back.steps)
        .any(|s| s.filled_vertices > 0);
    let closed = analysis.f.grid.topology == Topology::Torus;

    let (normal_degree, energy_bounds) = match (closed, genus) {
        (true, Some(g)) => {
            let deg = normal_bundle_degree(&analysis.f)?;
            let w = willmore_energy(&analysis.hopf);
            let count = |w: &Walk| {
                w.steps
                    .iter()
                    .filter(|s| s.status != StepStatus::ConstantPoint)
                    .count()
            };
            let n_verified = count(&fwd).max(count(&back));
            let bounds = (0..=n_verified)
                .map(|n| energy_bound_check(w, n, g, deg.nearest))
                .collect();
            (Some(deg), bounds)
        }
        _ => (None, Vec::new()),
    };

    let mut steps: Vec<SequenceStep> = back.steps.into_iter().rev().collect();
    steps.push(f0);
    steps.extend(fwd.steps);
    Ok(SequenceReport {
        n_max,
        steps,
        backward_end: back.end,
        forward_end: fwd.end,
        pattern,
        shape,
        local_only: !closed,
        smoothing_used,
        normal_degree,
        energy_bounds,
    })
}
