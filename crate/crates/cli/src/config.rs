//! Run configuration: JSON schema, defaults and validation.
//!
//! ```json
//! {
//!   "series": {"projective": 1} | {"vertices": [[0, 0], [2, 0], [0, 1]]},
//!   "arch": {"kind": "fubini_study"}
//!         | {"kind": "radial", "knots": [[0, 0], [1, 0]], "tail_slope": 1},
//!           optional "shift" (number) and "measure"
//!           ("fubini_study" | "product_fubini_study"),
//!   "weights": [{"prime": 2, "pieces": [{"slope": [1], "offset": 0}, ...]}],
//!   "max_level": 200, "grid_level": 20, "schedule": [1, 2, ...],
//!   "checks": ["fundamental_identity", ...], "out": "reports", "seed": 0,
//!   "tolerances": {"identity": 1e-8, ...},
//!   "gromov": {"max_level": 10, "samples": 1000},
//!   "nonarch": {"max_level": 50, "cases": 100},
//!   "product_formula": {"q": ["2", "3", "1/6"]},
//!   "brunn_minkowski": {"other": {"series": ..., "arch": ..., "weights": ...}},
//!   "khovanskii": {"generators": [{"exponent": [0], "level": 1}, ...],
//!                  "body": [["1/4"], ["3/4"]], "bound": 48}
//! }
//! ```
//! Everything except `series` is optional.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use okounkov_core::invariants::AdelicBundle;
use okounkov_core::linear_series::{default_max_level, ToricSeries};
use okounkov_core::metrics_arch::{ArchMetric, MeasureSpec};
use okounkov_core::metrics_nonarch::NonArchWeight;
use okounkov_core::rational::{self, Q};
use serde::Serialize;
use serde_json::{Map, Value};

/// Checks in dependency order.
pub const CHECKS: [&str; 13] = [
    "volume_identity",
    "khovanskii",
    "fundamental_identity",
    "riemann_roch",
    "nonarch_exactness",
    "gromov_sandwich",
    "product_formula",
    "uniform_bound",
    "chebyshev",
    "summation_theorem",
    "vol_chi_homogeneity",
    "main_theorem",
    "brunn_minkowski",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesSpec {
    Projective(usize),
    Vertices(Vec<Vec<i64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    FubiniStudy,
    ProductFubiniStudy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArchSpec {
    FubiniStudy {
        shift: f64,
        measure: Measure,
    },
    Radial {
        knots: Vec<(f64, f64)>,
        tail_slope: f64,
        shift: f64,
        measure: Measure,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightSpec {
    pub prime: u64,
    pub pieces: Vec<(Vec<i64>, i64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleSpec {
    pub series: SeriesSpec,
    pub arch: ArchSpec,
    pub weights: Vec<WeightSpec>,
}

impl BundleSpec {
    pub fn build(&self, max_level: u32) -> okounkov_core::Result<AdelicBundle> {
        let series = match &self.series {
            SeriesSpec::Projective(d) => ToricSeries::projective(*d)?,
            SeriesSpec::Vertices(v) => ToricSeries::from_vertices(v.clone())?,
        }
        .with_max_level(max_level);
        let (arch, shift, measure) = match &self.arch {
            ArchSpec::FubiniStudy { shift, measure } => {
                (ArchMetric::fubini_study(&series), *shift, *measure)
            }
            ArchSpec::Radial {
                knots,
                tail_slope,
                shift,
                measure,
            } => (
                ArchMetric::custom_radial(series.dim(), knots.clone(), *tail_slope)?,
                *shift,
                *measure,
            ),
        };
        let measure = match measure {
            Measure::FubiniStudy => MeasureSpec::FubiniStudy,
            Measure::ProductFubiniStudy => MeasureSpec::ProductFubiniStudy,
        };
        let weights = self
            .weights
            .iter()
            .map(|w| NonArchWeight::new(w.prime, w.pieces.clone()))
            .collect::<okounkov_core::Result<_>>()?;
        AdelicBundle::new(
            series,
            arch.with_measure(measure).with_shift(shift),
            weights,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub identity: f64,
    pub riemann_roch: f64,
    pub main_theorem: f64,
    pub homogeneity: f64,
    pub brunn_minkowski: f64,
    pub product_formula: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity: 1e-8,
            riemann_roch: 1e-9,
            main_theorem: 0.02,
            homogeneity: 0.05,
            brunn_minkowski: 0.05,
            product_formula: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KhovanskiiSpec {
    pub generators: Vec<(Vec<u32>, u32)>,
    /// Vertices of `D` as exact rationals.
    pub body: Vec<Vec<String>>,
    pub bound: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub bundle: BundleSpec,
    pub dim: usize,
    pub max_level: u32,
    pub grid_level: u32,
    pub schedule: Vec<u32>,
    pub checks: Vec<String>,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub gromov_max_level: u32,
    pub gromov_samples: usize,
    pub nonarch_max_level: u32,
    pub nonarch_cases: usize,
    pub product_q: Vec<String>,
    pub bm_other: Option<BundleSpec>,
    pub khovanskii: Option<KhovanskiiSpec>,
    #[serde(skip)]
    pub out: PathBuf,
}

/// Command-line overrides, applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub max_level: Option<u32>,
    pub out: Option<PathBuf>,
    pub checks: Option<Vec<String>>,
}

struct Ctx {
    errors: Vec<ConfigError>,
}

impl Ctx {
    fn err(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(ConfigError {
            path: path.to_string(),
            message: message.into(),
        });
    }

    fn object<'a>(
        &mut self,
        v: &'a Value,
        path: &str,
        allowed: &[&str],
    ) -> Option<&'a Map<String, Value>> {
        let Some(obj) = v.as_object() else {
            self.err(path, "expected an object");
            return None;
        };
        for k in obj.keys() {
            if !allowed.contains(&k.as_str()) {
                self.err(&join(path, k), "unknown key");
            }
        }
        Some(obj)
    }

    fn uint(&mut self, v: &Value, path: &str) -> Option<u64> {
        let r = v.as_u64();
        if r.is_none() {
            self.err(path, "expected a nonnegative integer");
        }
        r
    }

    fn int(&mut self, v: &Value, path: &str) -> Option<i64> {
        let r = v.as_i64();
        if r.is_none() {
            self.err(path, "expected an integer");
        }
        r
    }

    fn num(&mut self, v: &Value, path: &str) -> Option<f64> {
        let r = v.as_f64();
        if r.is_none() {
            self.err(path, "expected a number");
        }
        r
    }

    fn array<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Vec<Value>> {
        let r = v.as_array();
        if r.is_none() {
            self.err(path, "expected an array");
        }
        r
    }

    fn u32(&mut self, v: &Value, path: &str) -> Option<u32> {
        let x = self.uint(v, path)?;
        match u32::try_from(x) {
            Ok(x) => Some(x),
            Err(_) => {
                self.err(path, "too large");
                None
            }
        }
    }

    fn int_vec(&mut self, v: &Value, path: &str) -> Option<Vec<i64>> {
        let arr = self.array(v, path)?;
        let out: Vec<Option<i64>> = arr
            .iter()
            .enumerate()
            .map(|(i, x)| self.int(x, &index(path, i)))
            .collect();
        out.into_iter().collect()
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn index(path: &str, i: usize) -> String {
    format!("{path}[{i}]")
}

fn parse_series(ctx: &mut Ctx, v: &Value, path: &str) -> Option<(SeriesSpec, usize)> {
    let obj = ctx.object(v, path, &["projective", "vertices"])?;
    match (obj.get("projective"), obj.get("vertices")) {
        (Some(d), None) => {
            let p = join(path, "projective");
            let d = ctx.uint(d, &p)? as usize;
            if d == 0 || d > 6 {
                ctx.err(&p, "dimension must be between 1 and 6");
                return None;
            }
            Some((SeriesSpec::Projective(d), d))
        }
        (None, Some(vs)) => {
            let p = join(path, "vertices");
            let arr = ctx.array(vs, &p)?;
            let rows: Vec<Option<Vec<i64>>> = arr
                .iter()
                .enumerate()
                .map(|(i, x)| ctx.int_vec(x, &index(&p, i)))
                .collect();
            let rows: Vec<Vec<i64>> = rows.into_iter().collect::<Option<_>>()?;
            match ToricSeries::from_vertices(rows.clone()) {
                Ok(s) => Some((SeriesSpec::Vertices(rows), s.dim())),
                Err(e) => {
                    ctx.err(&p, e.to_string());
                    None
                }
            }
        }
        _ => {
            ctx.err(
                path,
                "exactly one of \"projective\" or \"vertices\" is required",
            );
            None
        }
    }
}

fn parse_arch(
    ctx: &mut Ctx,
    v: Option<&Value>,
    path: &str,
    dim: Option<usize>,
) -> Option<ArchSpec> {
    let default = ArchSpec::FubiniStudy {
        shift: 0.0,
        measure: Measure::FubiniStudy,
    };
    let Some(v) = v else { return Some(default) };
    let obj = ctx.object(
        v,
        path,
        &["kind", "knots", "tail_slope", "shift", "measure"],
    )?;
    let shift = match obj.get("shift") {
        Some(s) => ctx.num(s, &join(path, "shift"))?,
        None => 0.0,
    };
    let measure = match obj.get("measure").map(|m| m.as_str()) {
        None | Some(Some("fubini_study")) => Measure::FubiniStudy,
        Some(Some("product_fubini_study")) => Measure::ProductFubiniStudy,
        Some(_) => {
            ctx.err(
                &join(path, "measure"),
                "expected \"fubini_study\" or \"product_fubini_study\"",
            );
            return None;
        }
    };
    match obj.get("kind").and_then(Value::as_str) {
        Some("fubini_study") => {
            for k in ["knots", "tail_slope"] {
                if obj.contains_key(k) {
                    ctx.err(&join(path, k), "only allowed for kind \"radial\"");
                }
            }
            Some(ArchSpec::FubiniStudy { shift, measure })
        }
        Some("radial") => {
            let kp = join(path, "knots");
            let Some(knots_v) = obj.get("knots") else {
                ctx.err(&kp, "required for kind \"radial\"");
                return None;
            };
            let arr = ctx.array(knots_v, &kp)?;
            let mut knots = Vec::new();
            for (i, k) in arr.iter().enumerate() {
                let p = index(&kp, i);
                match k.as_array().map(|a| a.as_slice()) {
                    Some([r, y]) => knots.push((ctx.num(r, &p)?, ctx.num(y, &p)?)),
                    _ => {
                        ctx.err(&p, "expected [rho, value]");
                        return None;
                    }
                }
            }
            let tail_slope = match obj.get("tail_slope") {
                Some(t) => ctx.num(t, &join(path, "tail_slope"))?,
                None => {
                    ctx.err(&join(path, "tail_slope"), "required for kind \"radial\"");
                    return None;
                }
            };
            if let Some(d) = dim {
                if let Err(e) = ArchMetric::custom_radial(d, knots.clone(), tail_slope) {
                    ctx.err(&kp, e.to_string());
                    return None;
                }
            }
            Some(ArchSpec::Radial {
                knots,
                tail_slope,
                shift,
                measure,
            })
        }
        _ => {
            ctx.err(
                &join(path, "kind"),
                "expected \"fubini_study\" or \"radial\"",
            );
            None
        }
    }
}

fn parse_weights(
    ctx: &mut Ctx,
    v: Option<&Value>,
    path: &str,
    dim: Option<usize>,
) -> Option<Vec<WeightSpec>> {
    let Some(v) = v else { return Some(Vec::new()) };
    let arr = ctx.array(v, path)?;
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    let mut ok = true;
    for (i, w) in arr.iter().enumerate() {
        let wp = index(path, i);
        let Some(obj) = ctx.object(w, &wp, &["prime", "pieces"]) else {
            ok = false;
            continue;
        };
        let prime = match obj.get("prime") {
            Some(p) => ctx.uint(p, &join(&wp, "prime")),
            None => {
                ctx.err(&join(&wp, "prime"), "required");
                None
            }
        };
        if let Some(p) = prime {
            if !rational::is_prime(p) {
                ctx.err(&join(&wp, "prime"), format!("{p} is not prime"));
                ok = false;
            } else if !seen.insert(p) {
                ctx.err(
                    &join(&wp, "prime"),
                    format!("duplicate weight for prime {p}"),
                );
                ok = false;
            }
        }
        let pp = join(&wp, "pieces");
        let mut pieces = Vec::new();
        match obj.get("pieces").map(|x| ctx.array(x, &pp)) {
            None => {
                ctx.err(&pp, "required");
                ok = false;
            }
            Some(None) => ok = false,
            Some(Some(list)) => {
                if list.is_empty() {
                    ctx.err(&pp, "at least one piece is required");
                    ok = false;
                }
                for (j, piece) in list.iter().enumerate() {
                    let p = index(&pp, j);
                    let Some(po) = ctx.object(piece, &p, &["slope", "offset"]) else {
                        ok = false;
                        continue;
                    };
                    let slope = po
                        .get("slope")
                        .and_then(|s| ctx.int_vec(s, &join(&p, "slope")));
                    let offset = po
                        .get("offset")
                        .and_then(|s| ctx.int(s, &join(&p, "offset")));
                    match (slope, offset) {
                        (Some(s), Some(o)) => {
                            if let Some(d) = dim {
                                if s.len() != d {
                                    ctx.err(
                                        &join(&p, "slope"),
                                        format!("expected {d} entries, found {}", s.len()),
                                    );
                                    ok = false;
                                }
                            }
                            pieces.push((s, o));
                        }
                        _ => {
                            if !po.contains_key("slope") || !po.contains_key("offset") {
                                ctx.err(&p, "both \"slope\" and \"offset\" are required");
                            }
                            ok = false;
                        }
                    }
                }
            }
        }
        if let Some(p) = prime {
            out.push(WeightSpec { prime: p, pieces });
        } else {
            ok = false;
        }
    }
    ok.then_some(out)
}

fn parse_bundle(
    ctx: &mut Ctx,
    obj: &Map<String, Value>,
    path: &str,
) -> Option<(BundleSpec, usize)> {
    let series = match obj.get("series") {
        Some(s) => parse_series(ctx, s, &join(path, "series")),
        None => {
            ctx.err(&join(path, "series"), "required");
            None
        }
    };
    let dim = series.as_ref().map(|s| s.1);
    let arch = parse_arch(ctx, obj.get("arch"), &join(path, "arch"), dim);
    let weights = parse_weights(ctx, obj.get("weights"), &join(path, "weights"), dim);
    let ((series, dim), arch, weights) = (series?, arch?, weights?);
    Some((
        BundleSpec {
            series,
            arch,
            weights,
        },
        dim,
    ))
}

fn parse_khovanskii(ctx: &mut Ctx, v: &Value, path: &str) -> Option<KhovanskiiSpec> {
    let obj = ctx.object(v, path, &["generators", "body", "bound"])?;
    let gp = join(path, "generators");
    let mut generators = Vec::new();
    let mut ok = true;
    match obj.get("generators").map(|g| ctx.array(g, &gp)) {
        Some(Some(list)) => {
            for (i, g) in list.iter().enumerate() {
                let p = index(&gp, i);
                let Some(go) = ctx.object(g, &p, &["exponent", "level"]) else {
                    ok = false;
                    continue;
                };
                let e = go
                    .get("exponent")
                    .and_then(|e| ctx.int_vec(e, &join(&p, "exponent")));
                let l = go.get("level").and_then(|l| ctx.u32(l, &join(&p, "level")));
                match (e, l) {
                    (Some(e), Some(l)) if e.iter().all(|&x| x >= 0) && l >= 1 => {
                        generators.push((e.iter().map(|&x| x as u32).collect(), l))
                    }
                    _ => {
                        ctx.err(
                            &p,
                            "expected a nonnegative \"exponent\" and a \"level\" >= 1",
                        );
                        ok = false;
                    }
                }
            }
        }
        Some(None) => ok = false,
        None => {
            ctx.err(&gp, "required");
            ok = false;
        }
    }
    let bp = join(path, "body");
    let mut body = Vec::new();
    match obj.get("body").map(|b| ctx.array(b, &bp)) {
        Some(Some(list)) => {
            for (i, vtx) in list.iter().enumerate() {
                let p = index(&bp, i);
                let Some(coords) = ctx.array(vtx, &p) else {
                    ok = false;
                    continue;
                };
                let mut row = Vec::new();
                for (j, c) in coords.iter().enumerate() {
                    let s = match c {
                        Value::String(s) => s.clone(),
                        Value::Number(n) if n.is_i64() => n.to_string(),
                        _ => String::new(),
                    };
                    if s.parse::<Q>().is_err() {
                        ctx.err(
                            &index(&p, j),
                            "expected a rational such as \"3/4\" or an integer",
                        );
                        ok = false;
                    }
                    row.push(s);
                }
                body.push(row);
            }
        }
        Some(None) => ok = false,
        None => {
            ctx.err(&bp, "required");
            ok = false;
        }
    }
    let bound = match obj.get("bound") {
        Some(b) => ctx.u32(b, &join(path, "bound")),
        None => Some(48),
    };
    if bound == Some(0) {
        ctx.err(&join(path, "bound"), "must be positive");
        ok = false;
    }
    let bound = bound?;
    ok.then_some(KhovanskiiSpec {
        generators,
        body,
        bound,
    })
}

fn default_grid_level(dim: usize, max_level: u32) -> u32 {
    let g = match dim {
        1 => 20,
        2 => 5,
        _ => 2,
    };
    g.min((max_level / 3).max(1))
}

/// Parses and validates a configuration; on failure returns every problem
/// found, each with the path of the offending field.
pub fn parse_config(text: &str) -> Result<RunConfig, Vec<ConfigError>> {
    parse_config_with(text, &Overrides::default())
}

pub fn parse_config_with(text: &str, overrides: &Overrides) -> Result<RunConfig, Vec<ConfigError>> {
    let mut value: Value = serde_json::from_str(text).map_err(|e| {
        vec![ConfigError {
            path: String::new(),
            message: format!("invalid JSON: {e}"),
        }]
    })?;
    if let Some(obj) = value.as_object_mut() {
        if let Some(m) = overrides.max_level {
            obj.insert("max_level".into(), m.into());
        }
        if let Some(o) = &overrides.out {
            obj.insert("out".into(), o.to_string_lossy().into_owned().into());
        }
        if let Some(c) = &overrides.checks {
            obj.insert("checks".into(), c.clone().into());
        }
    }
    let mut ctx = Ctx { errors: Vec::new() };
    let allowed = [
        "series",
        "arch",
        "weights",
        "max_level",
        "grid_level",
        "schedule",
        "checks",
        "out",
        "seed",
        "tolerances",
        "gromov",
        "nonarch",
        "product_formula",
        "brunn_minkowski",
        "khovanskii",
    ];
    let Some(obj) = ctx.object(&value, "", &allowed) else {
        return Err(ctx.errors);
    };
    let bundle = parse_bundle(&mut ctx, obj, "");
    let dim = bundle.as_ref().map(|b| b.1).unwrap_or(1);

    let max_level = match obj.get("max_level") {
        Some(m) => ctx.u32(m, "max_level"),
        None => Some(default_max_level(dim)),
    };
    if max_level == Some(0) {
        ctx.err("max_level", "must be at least 1");
    }
    let max_level = max_level.unwrap_or(1).max(1);
    let grid_level = match obj.get("grid_level") {
        Some(g) => ctx.u32(g, "grid_level").unwrap_or(1),
        None => default_grid_level(dim, max_level),
    };
    if grid_level == 0 {
        ctx.err("grid_level", "must be at least 1");
    } else if grid_level > max_level {
        ctx.err(
            "grid_level",
            format!("grid level {grid_level} exceeds max level {max_level}"),
        );
    }
    let schedule = match obj.get("schedule") {
        Some(s) => {
            let v = ctx.int_vec(s, "schedule").unwrap_or_default();
            if v.iter().any(|&k| k <= 0) {
                ctx.err("schedule", "multipliers must be positive");
            }
            v.into_iter().map(|k| k.max(1) as u32).collect()
        }
        None => (1..=(max_level / grid_level.max(1)).min(10)).collect::<Vec<u32>>(),
    };
    let wants_tables = |checks: &[String]| {
        checks
            .iter()
            .any(|c| ["chebyshev", "main_theorem", "brunn_minkowski"].contains(&c.as_str()))
    };

    let checks: Vec<String> = match obj.get("checks") {
        Some(c) => {
            let mut out = Vec::new();
            if let Some(arr) = ctx.array(c, "checks") {
                for (i, x) in arr.iter().enumerate() {
                    match x.as_str() {
                        Some(name) if CHECKS.contains(&name) => out.push(name.to_string()),
                        _ => ctx.err(
                            &index("checks", i),
                            format!("unknown check; expected one of {}", CHECKS.join(", ")),
                        ),
                    }
                }
            }
            // dependency order, no duplicates
            CHECKS
                .iter()
                .filter(|c| out.iter().any(|o| o == *c))
                .map(|c| c.to_string())
                .collect()
        }
        None => CHECKS.iter().map(|c| c.to_string()).collect(),
    };
    if wants_tables(&checks) {
        if schedule.len() < 3 {
            ctx.err(
                "schedule",
                "at least 3 multipliers are needed for Chebyshev limits",
            );
        } else if schedule.windows(2).any(|w| w[1] <= w[0]) {
            ctx.err("schedule", "multipliers must be strictly increasing");
        } else if grid_level * schedule[schedule.len() - 1] > max_level {
            ctx.err(
                "schedule",
                format!("grid level times the largest multiplier exceeds max level {max_level}"),
            );
        }
    }

    let out = match obj.get("out") {
        Some(Value::String(s)) => PathBuf::from(s),
        Some(_) => {
            ctx.err("out", "expected a path string");
            PathBuf::new()
        }
        None => PathBuf::from("reports"),
    };
    let seed = match obj.get("seed") {
        Some(s) => ctx.uint(s, "seed").unwrap_or(0),
        None => 0,
    };

    let mut tolerances = Tolerances::default();
    if let Some(t) = obj.get("tolerances") {
        let names = [
            "identity",
            "riemann_roch",
            "main_theorem",
            "homogeneity",
            "brunn_minkowski",
            "product_formula",
        ];
        if let Some(tobj) = ctx.object(t, "tolerances", &names) {
            for (k, v) in tobj {
                let p = join("tolerances", k);
                let Some(x) = ctx.num(v, &p) else { continue };
                if !(x > 0.0 && x.is_finite()) {
                    ctx.err(&p, "tolerances must be positive");
                    continue;
                }
                match k.as_str() {
                    "identity" => tolerances.identity = x,
                    "riemann_roch" => tolerances.riemann_roch = x,
                    "main_theorem" => tolerances.main_theorem = x,
                    "homogeneity" => tolerances.homogeneity = x,
                    "brunn_minkowski" => tolerances.brunn_minkowski = x,
                    "product_formula" => tolerances.product_formula = x,
                    _ => {}
                }
            }
        }
    }

    let (mut gromov_max_level, mut gromov_samples) =
        (max_level.min(if dim == 1 { 10 } else { 4 }), 1000usize);
    if let Some(g) = obj.get("gromov") {
        if let Some(go) = ctx.object(g, "gromov", &["max_level", "samples"]) {
            if let Some(m) = go
                .get("max_level")
                .and_then(|m| ctx.u32(m, "gromov.max_level"))
            {
                if m == 0 || m > max_level {
                    ctx.err("gromov.max_level", format!("must lie in 1..={max_level}"));
                }
                gromov_max_level = m;
            }
            if let Some(s) = go
                .get("samples")
                .and_then(|s| ctx.uint(s, "gromov.samples"))
            {
                gromov_samples = s as usize;
            }
        }
    }
    let (mut nonarch_max_level, mut nonarch_cases) = (max_level.min(50), 100usize);
    if let Some(g) = obj.get("nonarch") {
        if let Some(go) = ctx.object(g, "nonarch", &["max_level", "cases"]) {
            if let Some(m) = go
                .get("max_level")
                .and_then(|m| ctx.u32(m, "nonarch.max_level"))
            {
                if m == 0 || m > max_level {
                    ctx.err("nonarch.max_level", format!("must lie in 1..={max_level}"));
                }
                nonarch_max_level = m;
            }
            if let Some(s) = go.get("cases").and_then(|s| ctx.uint(s, "nonarch.cases")) {
                nonarch_cases = s as usize;
            }
        }
    }
    let mut product_q: Vec<String> = ["2", "3", "1/6"].iter().map(|s| s.to_string()).collect();
    if let Some(p) = obj.get("product_formula") {
        if let Some(po) = ctx.object(p, "product_formula", &["q"]) {
            if let Some(list) = po.get("q").and_then(|q| ctx.array(q, "product_formula.q")) {
                product_q.clear();
                for (i, x) in list.iter().enumerate() {
                    let s = match x {
                        Value::String(s) => s.clone(),
                        Value::Number(n) if n.is_i64() => n.to_string(),
                        _ => String::new(),
                    };
                    match s.parse::<Q>() {
                        Ok(q) if q != rational::q(0) => product_q.push(s),
                        _ => ctx.err(
                            &index("product_formula.q", i),
                            "expected a nonzero rational such as \"1/6\"",
                        ),
                    }
                }
            }
        }
    }
    let mut bm_other = None;
    if let Some(b) = obj.get("brunn_minkowski") {
        if let Some(bo) = ctx.object(b, "brunn_minkowski", &["other"]) {
            if let Some(other) = bo.get("other") {
                if let Some(oo) = ctx.object(
                    other,
                    "brunn_minkowski.other",
                    &["series", "arch", "weights"],
                ) {
                    if let Some((spec, d)) = parse_bundle(&mut ctx, oo, "brunn_minkowski.other") {
                        if d != dim {
                            ctx.err(
                                "brunn_minkowski.other.series",
                                format!("dimension {d} differs from {dim}"),
                            );
                        }
                        bm_other = Some(spec);
                    }
                }
            }
        }
    }
    let khovanskii = obj
        .get("khovanskii")
        .and_then(|k| parse_khovanskii(&mut ctx, k, "khovanskii"));

    if !ctx.errors.is_empty() {
        return Err(ctx.errors);
    }
    let (bundle, dim) = bundle.expect("no errors implies a bundle");
    let config = RunConfig {
        bundle,
        dim,
        max_level,
        grid_level,
        schedule,
        checks,
        tolerances,
        seed,
        gromov_max_level,
        gromov_samples,
        nonarch_max_level,
        nonarch_cases,
        product_q,
        bm_other,
        khovanskii,
        out,
    };
    // finally the bundle itself, which runs the growth condition
    if let Err(e) = config.bundle.build(max_level) {
        return Err(vec![ConfigError {
            path: "arch".into(),
            message: e.to_string(),
        }]);
    }
    if let Some(o) = &config.bm_other {
        if let Err(e) = o.build(max_level) {
            return Err(vec![ConfigError {
                path: "brunn_minkowski.other".into(),
                message: e.to_string(),
            }]);
        }
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = parse_config(r#"{"series": {"projective": 1}}"#).unwrap();
        assert_eq!(c.max_level, 200);
        assert_eq!(c.grid_level, 20);
        assert_eq!(c.schedule, (1..=10).collect::<Vec<_>>());
        assert_eq!(c.checks.len(), CHECKS.len());
    }

    #[test]
    fn duplicate_prime() {
        let text = r#"{"series": {"projective": 1}, "weights": [
            {"prime": 2, "pieces": [{"slope": [1], "offset": 0}]},
            {"prime": 2, "pieces": [{"slope": [0], "offset": 0}]}]}"#;
        let errs = parse_config(text).unwrap_err();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].path, "weights[1].prime");
    }

    #[test]
    fn grid_above_max() {
        let errs =
            parse_config(r#"{"series": {"projective": 1}, "max_level": 10, "grid_level": 12}"#)
                .unwrap_err();
        assert!(errs.iter().any(|e| e.path == "grid_level"), "{errs:?}");
    }

    #[test]
    fn all_errors_collected() {
        let text = r#"{"series": {"projective": 1}, "bogus": 1, "tolerances": {"identity": -1},
            "weights": [{"prime": 4, "pieces": [{"slope": [1, 2], "offset": 0}]}]}"#;
        let errs = parse_config(text).unwrap_err();
        let paths: Vec<&str> = errs.iter().map(|e| e.path.as_str()).collect();
        for p in [
            "bogus",
            "tolerances.identity",
            "weights[0].prime",
            "weights[0].pieces[0].slope",
        ] {
            assert!(paths.contains(&p), "{paths:?}");
        }
    }

    #[test]
    fn overrides_apply_before_validation() {
        let o = Overrides {
            max_level: Some(40),
            checks: Some(vec!["riemann_roch".into()]),
            out: None,
        };
        let c = parse_config_with(r#"{"series": {"projective": 1}}"#, &o).unwrap();
        assert_eq!(c.max_level, 40);
        assert_eq!(c.grid_level, 13);
        assert_eq!(c.checks, vec!["riemann_roch"]);
    }
}
