//! Run configuration: a plain-text `key = value` file with `[section]`
//! headers, overridable by `--set section.key=value`.
//!
//! ```text
//! # comment
//! [surface]
//! name = clifford
//! patch = true
//!
//! [grid]
//! n = 96
//! ```
//!
//! Every key is declared in [`KEYS`]; anything else is rejected with the
//! line it appeared on. Keys before the first section header must be one of
//! the short aliases (`surface`, `grid`, `mu`, `patch`, ...).

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use num_complex::Complex64;
use serde::Serialize;

use crate::calc::StencilOrder;
use crate::darboux::Conjugation;
use crate::immersion::{ObjProjection, SurfaceSpec, TwistorConvention};
use crate::tolerances::{self, acceptance};

/// Where a value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Default,
    File { path: String, line: usize },
    Set { arg: String },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Default => write!(f, "default"),
            Origin::File { path, line } => write!(f, "{path}:{line}"),
            Origin::Set { arg } => write!(f, "--set {arg}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("config error at {origin}: {message}")]
pub struct ConfigError {
    pub origin: Origin,
    pub message: String,
}

impl ConfigError {
    fn new(origin: &Origin, message: impl Into<String>) -> Self {
        ConfigError {
            origin: origin.clone(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Conformal Gauss map, Hopf fields, Willmore energy.
    Analyze,
    /// Curvature of the associated family, parallel frames, monodromy.
    Flatness,
    /// μ-Darboux transform and its identities.
    Darboux,
    /// Bäcklund (Willmore) sequence.
    Sequence,
    /// Meshes and sampled fields only.
    Export,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Flatness => "flatness",
            Command::Darboux => "darboux",
            Command::Sequence => "sequence",
            Command::Export => "export",
        }
    }
}

/// Declared key: `section.key`, default (if any) and a one-line meaning.
pub struct KeySpec {
    pub key: &'static str,
    pub default: Option<&'static str>,
    pub help: &'static str,
}

const fn k(key: &'static str, default: Option<&'static str>, help: &'static str) -> KeySpec {
    KeySpec { key, default, help }
}

pub const KEYS: &[KeySpec] = &[
    k(
        "surface.name",
        Some("clifford"),
        "mercator|sphere|clifford|clifford_patch|revolution|catenoid|enneper|twistor|twistor_torus",
    ),
    k(
        "surface.patch",
        None,
        "clifford only: sample one fundamental square as a patch",
    ),
    k(
        "surface.major",
        None,
        "revolution only: major radius (default 3)",
    ),
    k(
        "surface.minor",
        None,
        "revolution only: minor radius (default 1)",
    ),
    k(
        "surface.extent",
        None,
        "mercator/twistor: half-width of the parameter square",
    ),
    k("surface.convention", None, "twistor: left_j | right_j"),
    k("grid.n", Some("64"), "samples per direction"),
    k("grid.nx", None, "samples in x (overrides n)"),
    k("grid.ny", None, "samples in y (overrides n)"),
    k(
        "grid.stencil_order",
        Some("8"),
        "finite difference order: 2, 4, 6 or 8",
    ),
    k(
        "flatness.lambda",
        Some("2, 0.5, 1+i"),
        "comma-separated spectral parameters",
    ),
    k(
        "flatness.mu",
        Some("2"),
        "parameter of the parallel frame / monodromy",
    ),
    k(
        "flatness.basepoint",
        None,
        "i,j grid index (default: grid center)",
    ),
    k(
        "darboux.mu",
        Some("2"),
        "Darboux parameter (complex, not 0 or 1)",
    ),
    k(
        "darboux.conjugation",
        Some("t_inv_s_t"),
        "t_inv_s_t | t_s_t_inv",
    ),
    k(
        "darboux.basepoint",
        None,
        "i,j grid index (default: grid center)",
    ),
    k("sequence.n_max", Some("4"), "steps in each direction"),
    k("output.dir", Some("wforge-out"), "output directory"),
    k("output.fields", Some("false"), "write fields.csv"),
    k(
        "output.obj",
        Some("true"),
        "write surface.obj (and surface_hat.obj)",
    ),
    k(
        "output.projection",
        Some("stereographic"),
        "stereographic | imaginary",
    ),
    k(
        "output.pole",
        Some("1, 0, 0, 0"),
        "stereographic pole in R^4",
    ),
    k(
        "output.timestamp",
        Some("false"),
        "add a timestamp_unix header to report.json",
    ),
    k(
        "tolerances.identity",
        Some("1e-10"),
        "algebraic identities, relative",
    ),
    k(
        "tolerances.discretization",
        Some("1e-3"),
        "identities that hold up to discretization error",
    ),
    k(
        "tolerances.conformality",
        Some("1e-2"),
        "conformality residual of the input",
    ),
    k(
        "tolerances.basis_independence",
        Some("1e-8"),
        "Darboux basis independence",
    ),
    k(
        "tolerances.degree_integrality",
        Some("0.05"),
        "normal bundle degree distance from an integer",
    ),
];

/// Keys accepted without a section (and in `--set`).
pub const ALIASES: &[(&str, &str)] = &[
    ("surface", "surface.name"),
    ("patch", "surface.patch"),
    ("grid", "grid.n"),
    ("n", "grid.n"),
    ("mu", "darboux.mu"),
    ("lambda", "flatness.lambda"),
    ("n_max", "sequence.n_max"),
    ("out", "output.dir"),
];

fn spec_of(key: &str) -> Option<&'static KeySpec> {
    KEYS.iter().find(|s| s.key == key)
}

fn canonical(
    key: &str,
    section: Option<&str>,
    origin: &Origin,
) -> Result<&'static str, ConfigError> {
    let full = match section {
        Some(s) => format!("{s}.{key}"),
        None if key.contains('.') => key.to_string(),
        None => match ALIASES.iter().find(|(a, _)| *a == key) {
            Some((_, target)) => target.to_string(),
            None => {
                return Err(ConfigError::new(
                    origin,
                    format!("unknown key `{key}` outside a section"),
                ));
            }
        },
    };
    match spec_of(&full) {
        Some(s) => Ok(s.key),
        None => {
            let sec = full.split('.').next().unwrap_or("");
            if KEYS.iter().any(|s| s.key.starts_with(&format!("{sec}."))) {
                Err(ConfigError::new(origin, format!("unknown key `{full}`")))
            } else {
                Err(ConfigError::new(
                    origin,
                    format!("unknown section `[{sec}]`"),
                ))
            }
        }
    }
}

/// Raw `key → (value, origin)` after merging file and overrides.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub values: BTreeMap<&'static str, (String, Origin)>,
}

impl RawConfig {
    /// Parses config text; `path` only labels error messages.
    pub fn parse(text: &str, path: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (n, line) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_string(),
                line: n + 1,
            };
            let line = strip_comment(line).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::new(&origin, "section header without closing `]`"))?
                    .trim();
                if !KEYS.iter().any(|s| s.key.starts_with(&format!("{name}."))) {
                    return Err(ConfigError::new(
                        &origin,
                        format!("unknown section `[{name}]`"),
                    ));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError::new(&origin, format!("expected `key = value`, got `{line}`"))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::new(&origin, "empty key"));
            }
            let full = canonical(key, section.as_deref(), &origin)?;
            if let Some((_, prev)) = raw.values.get(full) {
                return Err(ConfigError::new(
                    &origin,
                    format!("`{full}` already set at {prev}"),
                ));
            }
            raw.values.insert(full, (value.to_string(), origin));
        }
        Ok(raw)
    }

    /// Applies one `key=value` override (later overrides win).
    pub fn apply_set(&mut self, arg: &str) -> Result<(), ConfigError> {
        let origin = Origin::Set {
            arg: arg.to_string(),
        };
        let (key, value) = arg
            .split_once('=')
            .ok_or_else(|| ConfigError::new(&origin, "expected `key=value`"))?;
        let full = canonical(key.trim(), None, &origin)?;
        self.values.insert(full, (value.trim().to_string(), origin));
        Ok(())
    }

    fn get(&self, key: &'static str) -> Option<(&str, &Origin)> {
        debug_assert!(spec_of(key).is_some(), "undeclared key {key}");
        self.values.get(key).map(|(v, o)| (v.as_str(), o))
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(['#', ';']) {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Typed lookups with defaults from [`KEYS`].
struct Reader<'a> {
    raw: &'a RawConfig,
    echo: BTreeMap<String, String>,
}

impl<'a> Reader<'a> {
    fn raw(&mut self, key: &'static str) -> Option<(String, Origin)> {
        let found = self.raw.get(key).map(|(v, o)| (v.to_string(), o.clone()));
        let found = found.or_else(|| {
            spec_of(key)
                .and_then(|s| s.default)
                .map(|d| (d.to_string(), Origin::Default))
        });
        if let Some((v, _)) = &found {
            self.echo.insert(key.to_string(), v.clone());
        }
        found
    }

    fn parse<T>(
        &mut self,
        key: &'static str,
        what: &str,
        f: impl Fn(&str) -> Option<T>,
    ) -> Result<Option<T>, ConfigError> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, origin)) => f(&v).map(Some).ok_or_else(|| {
                ConfigError::new(&origin, format!("`{key}`: expected {what}, got `{v}`"))
            }),
        }
    }

    fn required<T>(
        &mut self,
        key: &'static str,
        what: &str,
        f: impl Fn(&str) -> Option<T>,
    ) -> Result<T, ConfigError> {
        Ok(self.parse(key, what, f)?.expect("key with a default"))
    }

    fn origin(&self, key: &'static str) -> Origin {
        self.raw
            .get(key)
            .map(|(_, o)| o.clone())
            .unwrap_or(Origin::Default)
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "on" | "1" => Some(true),
        "false" | "no" | "off" | "0" => Some(false),
        _ => None,
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_positive(s: &str) -> Option<f64> {
    parse_f64(s).filter(|x| *x > 0.0)
}

fn parse_complex(s: &str) -> Option<Complex64> {
    s.trim()
        .parse::<Complex64>()
        .ok()
        .filter(|z| z.re.is_finite() && z.im.is_finite())
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> Option<T>) -> Option<Vec<T>> {
    let v: Option<Vec<T>> = s.split(',').map(|x| f(x.trim())).collect();
    v.filter(|v| !v.is_empty())
}

fn parse_index_pair(s: &str) -> Option<(usize, usize)> {
    match parse_list(s, |x| x.parse::<usize>().ok())?.as_slice() {
        [i, j] => Some((*i, *j)),
        _ => None,
    }
}

/// Thresholds used for the `validation` block of the report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub identity: f64,
    pub discretization: f64,
    pub conformality: f64,
    pub basis_independence: f64,
    pub degree_integrality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: acceptance::ALGEBRAIC_REL,
            discretization: 1e-3,
            conformality: tolerances::CONFORMALITY_LIMIT,
            basis_independence: acceptance::BASIS_INDEPENDENCE,
            degree_integrality: acceptance::DEGREE_INTEGRALITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub fields: bool,
    pub obj: bool,
    pub projection: ObjProjection,
    pub timestamp: bool,
}

/// Fully resolved and validated configuration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub surface_name: String,
    pub surface: SurfaceSpec,
    pub nx: usize,
    pub ny: usize,
    pub stencil: StencilOrder,
    pub lambdas: Vec<Complex64>,
    pub flatness_mu: Complex64,
    pub flatness_basepoint: Option<(usize, usize)>,
    pub darboux_mu: Complex64,
    pub conjugation: Conjugation,
    pub darboux_basepoint: Option<(usize, usize)>,
    pub n_max: usize,
    pub output: OutputConfig,
    pub tolerances: Tolerances,
    /// Every resolved key with its value as text (defaults included).
    pub echo: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn from_raw(command: Command, raw: &RawConfig) -> Result<Self, ConfigError> {
        let mut r = Reader {
            raw,
            echo: BTreeMap::new(),
        };

        let name: String = r.required("surface.name", "a surface name", |s| Some(s.to_string()))?;
        let name_origin = r.origin("surface.name");
        let mut surface = SurfaceSpec::from_name(&name)
            .ok_or_else(|| ConfigError::new(&name_origin, format!("unknown surface `{name}`")))?;
        let only =
            |r: &Reader, key: &'static str, ok: bool, which: &str| -> Result<(), ConfigError> {
                match r.raw.get(key) {
                    Some((_, o)) if !ok => Err(ConfigError::new(
                        o,
                        format!("`{key}` applies only to {which}"),
                    )),
                    _ => Ok(()),
                }
            };
        let is = |kind: &str| surface.name() == kind;
        only(&r, "surface.patch", is("clifford"), "clifford")?;
        only(&r, "surface.major", is("revolution"), "revolution")?;
        only(&r, "surface.minor", is("revolution"), "revolution")?;
        only(
            &r,
            "surface.extent",
            is("mercator") || is("twistor"),
            "mercator and twistor",
        )?;
        only(&r, "surface.convention", is("twistor"), "twistor")?;
        match &mut surface {
            SurfaceSpec::CliffordTorus { patch } => {
                if let Some(p) = r.parse("surface.patch", "true or false", parse_bool)? {
                    *patch |= p;
                }
            }
            SurfaceSpec::RevolutionTorus { major, minor } => {
                if let Some(v) = r.parse("surface.major", "a positive number", parse_positive)? {
                    *major = v;
                }
                if let Some(v) = r.parse("surface.minor", "a positive number", parse_positive)? {
                    *minor = v;
                }
                if *major <= *minor {
                    return Err(ConfigError::new(
                        &r.origin("surface.major"),
                        format!("revolution torus needs major > minor (got {major}, {minor})"),
                    ));
                }
            }
            SurfaceSpec::MercatorSphere { extent } | SurfaceSpec::TwistorCurve { extent, .. } => {
                if let Some(v) = r.parse("surface.extent", "a positive number", parse_positive)? {
                    *extent = v;
                }
            }
            _ => {}
        }
        if let SurfaceSpec::TwistorCurve { convention, .. } = &mut surface {
            let conv = r.parse("surface.convention", "left_j or right_j", |s| match s {
                "left_j" => Some(TwistorConvention::LeftJ),
                "right_j" => Some(TwistorConvention::RightJ),
                _ => None,
            })?;
            if let Some(c) = conv {
                *convention = c;
            }
        }

        let n = r.required("grid.n", "an integer ≥ 8", parse_grid)?;
        let nx = r
            .parse("grid.nx", "an integer ≥ 8", parse_grid)?
            .unwrap_or(n);
        let ny = r
            .parse("grid.ny", "an integer ≥ 8", parse_grid)?
            .unwrap_or(n);
        let stencil = r.required("grid.stencil_order", "2, 4, 6 or 8", |s| match s {
            "2" => Some(StencilOrder::Second),
            "4" => Some(StencilOrder::Fourth),
            "6" => Some(StencilOrder::Sixth),
            "8" => Some(StencilOrder::Eighth),
            _ => None,
        })?;

        let nonzero = |s: &str| parse_complex(s).filter(|z| z.norm() > 0.0);
        let lambdas = r.required(
            "flatness.lambda",
            "a list of nonzero complex numbers",
            |s| parse_list(s, nonzero),
        )?;
        let flatness_mu = r.required("flatness.mu", "a nonzero complex number", nonzero)?;
        let flatness_basepoint = r.parse("flatness.basepoint", "`i, j`", parse_index_pair)?;
        let darboux_mu = r.required("darboux.mu", "a complex number other than 0 and 1", |s| {
            nonzero(s).filter(|z| (z - Complex64::new(1.0, 0.0)).norm() > 0.0)
        })?;
        let conjugation = r.required(
            "darboux.conjugation",
            "t_inv_s_t or t_s_t_inv",
            |s| match s {
                "t_inv_s_t" => Some(Conjugation::TInvST),
                "t_s_t_inv" => Some(Conjugation::TSTInv),
                _ => None,
            },
        )?;
        let darboux_basepoint = r.parse("darboux.basepoint", "`i, j`", parse_index_pair)?;
        for (key, bp) in [
            ("flatness.basepoint", flatness_basepoint),
            ("darboux.basepoint", darboux_basepoint),
        ] {
            if let Some((i, j)) = bp {
                if i >= nx || j >= ny {
                    return Err(ConfigError::new(
                        &r.origin(key),
                        format!("`{key}` ({i}, {j}) lies outside the {nx}x{ny} grid"),
                    ));
                }
            }
        }
        let n_max = r.required("sequence.n_max", "a non-negative integer", |s| {
            s.parse::<usize>().ok()
        })?;

        let dir = r.required("output.dir", "a path", |s| {
            (!s.is_empty()).then(|| PathBuf::from(s))
        })?;
        let fields = r.required("output.fields", "true or false", parse_bool)?;
        let obj = r.required("output.obj", "true or false", parse_bool)?;
        let stereo = r.required(
            "output.projection",
            "stereographic or imaginary",
            |s| match s {
                "stereographic" => Some(true),
                "imaginary" => Some(false),
                _ => None,
            },
        )?;
        let pole = r.required("output.pole", "four numbers, not all zero", |s| {
            let v = parse_list(s, parse_f64)?;
            let p: [f64; 4] = v.try_into().ok()?;
            (p.iter().map(|x| x * x).sum::<f64>() > 0.0).then_some(p)
        })?;
        let projection = if stereo {
            ObjProjection::Stereographic { pole }
        } else {
            ObjProjection::Imaginary
        };
        let timestamp = r.required("output.timestamp", "true or false", parse_bool)?;

        let tol = |r: &mut Reader, key| r.required(key, "a positive number", parse_positive);
        let tolerances = Tolerances {
            identity: tol(&mut r, "tolerances.identity")?,
            discretization: tol(&mut r, "tolerances.discretization")?,
            conformality: tol(&mut r, "tolerances.conformality")?,
            basis_independence: tol(&mut r, "tolerances.basis_independence")?,
            degree_integrality: tol(&mut r, "tolerances.degree_integrality")?,
        };

        Ok(RunConfig {
            command,
            surface_name: name,
            surface,
            nx,
            ny,
            stencil,
            lambdas,
            flatness_mu,
            flatness_basepoint,
            darboux_mu,
            conjugation,
            darboux_basepoint,
            n_max,
            output: OutputConfig {
                dir,
                fields,
                obj,
                projection,
                timestamp,
            },
            tolerances,
            echo: r.echo,
        })
    }

    /// Parses `text` (labelled `path` in errors), then applies `sets` in order.
    pub fn load(
        command: Command,
        text: &str,
        path: &str,
        sets: &[String],
    ) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::parse(text, path)?;
        for s in sets {
            raw.apply_set(s)?;
        }
        Self::from_raw(command, &raw)
    }
}

fn parse_grid(s: &str) -> Option<usize> {
    s.parse::<usize>().ok().filter(|n| *n >= 8)
}
