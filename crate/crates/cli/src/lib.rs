//! Configuration ingestion, check orchestration and report emission.

pub mod config;
pub mod report;

use std::fmt;
use std::path::PathBuf;

use okounkov_core::convex_geom::{
    self, khovanskii_saturation, verify_gamma_brute_force, Polytope, Saturation, Semigroup,
};
use okounkov_core::invariants::{
    self, AdelicBundle, BmSide, ChebyshevTable, CheckReport, Evaluator, NamedTable, Verdict,
};
use okounkov_core::linear_series::Exponent;
use okounkov_core::rational::{self, Q};
use okounkov_core::Error;
use serde::Serialize;
use serde_json::{json, Value};

pub use config::{parse_config, parse_config_with, ConfigError, Overrides, RunConfig, CHECKS};
use report::{to_value, Report, Summary, SummaryEntry};

/// Environment variable holding the worker-thread count.
pub const THREADS_ENV: &str = "OKOUNKOV_THREADS";

#[derive(Debug)]
pub enum RunError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Component {
        check: String,
        source: Error,
    },
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            RunError::Component { check, source } => write!(f, "{check}: {source}"),
        }
    }
}

impl std::error::Error for RunError {}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub config_hash: String,
    pub results: Vec<(String, Verdict)>,
    pub warnings: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn verdict(&self) -> Verdict {
        Verdict::combine(self.results.iter().map(|r| r.1))
    }

    /// Nonzero only when some check failed.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.verdict() == Verdict::Fail)
    }
}

/// Errors that mean "the check does not apply here" rather than "the data
/// contradicts it".
fn is_refusal(e: &Error) -> bool {
    matches!(
        e,
        Error::Precondition(_) | Error::PositiveCeiling { .. } | Error::Unsupported(_)
    )
}

struct Runner<'a> {
    config: &'a RunConfig,
    hash: String,
    outcome: Outcome,
}

impl Runner<'_> {
    fn component(&self, check: &str) -> impl Fn(Error) -> RunError + '_ {
        let check = check.to_string();
        move |source| RunError::Component {
            check: check.clone(),
            source,
        }
    }

    fn emit(&mut self, mut r: Report) -> Result<(), RunError> {
        r.config_hash = self.hash.clone();
        for w in &r.warnings {
            self.outcome.warnings.push(format!("{}: {w}", r.check));
        }
        self.outcome.results.push((r.check.clone(), r.verdict));
        let files = report::write_report(&self.config.out, &r)?;
        self.outcome.files.extend(files);
        Ok(())
    }

    fn report<P: Serialize, F: Serialize>(&self, inputs: Value, r: CheckReport<P, F>) -> Report {
        Report {
            schema: report::SCHEMA,
            check: r.check.to_string(),
            config_hash: String::new(),
            tolerances: self.config.tolerances.clone(),
            inputs,
            per_level: to_value(&r.per_level),
            fitted: to_value(&r.fitted),
            verdict: r.verdict,
            warnings: Vec::new(),
            tables: r.tables,
        }
    }

    fn custom(
        &self,
        check: &str,
        inputs: Value,
        per_level: Value,
        fitted: Value,
        verdict: Verdict,
    ) -> Report {
        Report {
            schema: report::SCHEMA,
            check: check.to_string(),
            config_hash: String::new(),
            tolerances: self.config.tolerances.clone(),
            inputs,
            per_level,
            fitted,
            verdict,
            warnings: Vec::new(),
            tables: Vec::new(),
        }
    }

    /// Records a refused check as INCONCLUSIVE; other errors abort the run.
    fn emit_result<P: Serialize, F: Serialize>(
        &mut self,
        check: &str,
        inputs: Value,
        r: okounkov_core::Result<CheckReport<P, F>>,
    ) -> Result<(), RunError> {
        match r {
            Ok(r) => {
                let rep = self.report(inputs, r);
                self.emit(rep)
            }
            Err(e) if is_refusal(&e) => {
                let mut rep = self.custom(
                    check,
                    inputs,
                    json!([]),
                    json!({ "refused": e.to_string() }),
                    Verdict::Inconclusive,
                );
                rep.warnings.push(format!("refused: {e}"));
                self.emit(rep)
            }
            Err(e) => Err(self.component(check)(e)),
        }
    }
}

/// Levels at which `χ` is fitted: about 19 evenly spaced levels ending at the
/// max level.
pub fn chi_levels(max_level: u32) -> Vec<u32> {
    let start = (max_level / 10).max(2);
    let step = ((max_level.saturating_sub(start)) / 18).max(1);
    (start..=max_level).step_by(step as usize).collect()
}

fn identity_levels(config: &RunConfig) -> Vec<u32> {
    (1..=config.max_level.min(20)).collect()
}

/// Generators with their levels, the body `D` and the search bound.
type KhovanskiiInputs = (Vec<(Exponent, u32)>, Polytope, u32);

fn khovanskii_inputs(
    config: &RunConfig,
    bundle: &AdelicBundle,
) -> okounkov_core::Result<KhovanskiiInputs> {
    if let Some(k) = &config.khovanskii {
        let gens = k
            .generators
            .iter()
            .map(|(e, l)| (Exponent::new(e.clone()), *l))
            .collect();
        let pts: Vec<Vec<Q>> = k
            .body
            .iter()
            .map(|v| v.iter().map(|s| s.parse().expect("validated")).collect())
            .collect();
        return Ok((gens, Polytope::hull(pts)?, k.bound));
    }
    // default: the series' own generators, and D the body shrunk by half
    // towards its vertex average
    let series = bundle.series();
    let sg = Semigroup::from_series(series, 3)?;
    let body = series.polytope();
    let n = rational::q(body.vertices().len() as i64);
    let d = series.dim();
    let center: Vec<Q> = (0..d)
        .map(|i| {
            body.vertices()
                .iter()
                .map(|v| v[i].clone())
                .fold(rational::q(0), |a, b| a + b)
                / n.clone()
        })
        .collect();
    let half = rational::q_frac(1, 2);
    let pts: Vec<Vec<Q>> = body
        .vertices()
        .iter()
        .map(|v| {
            v.iter()
                .zip(&center)
                .map(|(x, c)| (x + c) * half.clone())
                .collect()
        })
        .collect();
    let bound = match d {
        1 => 48,
        2 => 16,
        _ => 8,
    };
    Ok((sg.generators().to_vec(), Polytope::hull(pts)?, bound))
}

fn product_samples(
    config: &RunConfig,
    eval: &Evaluator,
) -> okounkov_core::Result<Vec<(u32, Exponent)>> {
    let mut out = Vec::new();
    for m in [1u32, 3, 8, 12] {
        if m > config.max_level {
            continue;
        }
        let basis = eval.level_basis(m)?;
        for i in [0, basis.len() / 2, basis.len() - 1] {
            if !out
                .iter()
                .any(|(mm, b): &(u32, Exponent)| *mm == m && *b == basis[i])
            {
                out.push((m, basis[i].clone()));
            }
        }
    }
    Ok(out)
}

/// Runs the configured checks in dependency order and writes one report per
/// check plus `summary.json`.
pub fn run(config: &RunConfig) -> Result<Outcome, RunError> {
    let hash = report::config_hash(config);
    let mut r = Runner {
        config,
        hash: hash.clone(),
        outcome: Outcome {
            config_hash: hash,
            results: Vec::new(),
            warnings: Vec::new(),
            files: Vec::new(),
        },
    };
    let bundle = config
        .bundle
        .build(config.max_level)
        .map_err(r.component("config"))?;
    let eval = Evaluator::new(bundle.clone());
    let wants = |c: &str| config.checks.iter().any(|x| x == c);
    let chi = chi_levels(config.max_level);
    let grid = config.grid_level;
    let schedule = &config.schedule;

    if wants("volume_identity") {
        volume_identity(&mut r, &bundle)?;
    }
    if wants("khovanskii") {
        khovanskii(&mut r, &bundle)?;
    }
    if wants("fundamental_identity") {
        let lv = identity_levels(config);
        let res = invariants::fundamental_identity_check(&eval, &lv, config.tolerances.identity);
        r.emit_result("fundamental_identity", json!({ "levels": lv }), res)?;
    }
    if wants("riemann_roch") {
        let lv: Vec<u32> = (1..=config.max_level.min(50)).collect();
        let fit_max = (lv.len() as u32 / 2).max(1);
        let res =
            invariants::riemann_roch_check(&eval, &lv, fit_max, config.tolerances.riemann_roch);
        r.emit_result(
            "riemann_roch",
            json!({ "levels": lv, "fit_max_level": fit_max, "field": eval.field() }),
            res,
        )?;
    }
    if wants("nonarch_exactness") {
        let res = invariants::nonarch_exactness_check(
            &eval,
            config.nonarch_max_level,
            config.nonarch_cases,
            config.seed,
        );
        let inputs = json!({ "max_level": config.nonarch_max_level, "cases": config.nonarch_cases, "seed": config.seed });
        r.emit_result("nonarch_exactness", inputs, res)?;
    }
    if wants("gromov_sandwich") {
        let res = invariants::gromov_sandwich_check(
            &eval,
            config.gromov_max_level,
            config.gromov_samples,
            config.seed,
        );
        let inputs = json!({ "max_level": config.gromov_max_level, "samples": config.gromov_samples, "seed": config.seed });
        r.emit_result("gromov_sandwich", inputs, res)?;
    }
    if wants("product_formula") {
        let samples = product_samples(config, &eval).map_err(r.component("product_formula"))?;
        let qs: Vec<Q> = config
            .product_q
            .iter()
            .map(|s| s.parse().expect("validated"))
            .collect();
        let res = invariants::product_formula_check(
            &eval,
            &qs,
            &samples,
            config.tolerances.product_formula,
        );
        r.emit_result(
            "product_formula",
            json!({ "q": config.product_q, "samples": samples }),
            res,
        )?;
    }
    if wants("uniform_bound") {
        let lv = identity_levels(config);
        let res = invariants::uniform_bound_check(&eval, &lv);
        r.emit_result("uniform_bound", json!({ "levels": lv }), res)?;
    }
    let needs_table = wants("chebyshev") || wants("main_theorem") || wants("brunn_minkowski");
    let table = if needs_table {
        Some(ChebyshevTable::build(&eval, grid, schedule).map_err(r.component("chebyshev"))?)
    } else {
        None
    };
    if wants("chebyshev") {
        let t = table.as_ref().expect("built above");
        chebyshev(&mut r, &bundle, t)?;
    }
    if wants("summation_theorem") {
        let res = invariants::summation_theorem_check(&eval, &chi);
        r.emit_result("summation_theorem", json!({ "levels": chi }), res)?;
    }
    if wants("vol_chi_homogeneity") {
        let half: Vec<u32> = chi
            .iter()
            .copied()
            .filter(|&m| m <= config.max_level / 2)
            .collect();
        let res = bundle.multiple(2).and_then(|two| {
            let two = Evaluator::new(two.with_max_level(config.max_level));
            invariants::vol_chi_homogeneity_check(
                &eval,
                &two,
                2,
                &chi,
                &half,
                config.tolerances.homogeneity,
            )
        });
        r.emit_result(
            "vol_chi_homogeneity",
            json!({ "k": 2, "levels": chi, "multiple_levels": half }),
            res,
        )?;
    }
    if wants("main_theorem") {
        let t = table.as_ref().expect("built above");
        let res = invariants::main_theorem_check(&eval, &chi, t, config.tolerances.main_theorem);
        let inputs = json!({ "levels": chi, "grid_level": grid, "schedule": schedule });
        r.emit_result("main_theorem", inputs, res)?;
    }
    if wants("brunn_minkowski") {
        let t = table.as_ref().expect("built above");
        brunn_minkowski(&mut r, &bundle, &eval, t, &chi)?;
    }

    let summary = Summary {
        schema: report::SCHEMA,
        config_hash: r.hash.clone(),
        tolerances: config.tolerances.clone(),
        checks: r
            .outcome
            .results
            .iter()
            .map(|(c, v)| SummaryEntry {
                check: c.clone(),
                verdict: *v,
            })
            .collect(),
        verdict: r.outcome.verdict(),
    };
    let path = report::write_summary(&config.out, &summary)?;
    r.outcome.files.push(path);
    Ok(r.outcome)
}

fn volume_identity(r: &mut Runner<'_>, bundle: &AdelicBundle) -> Result<(), RunError> {
    let m = r.config.max_level;
    let res = convex_geom::check_volume_identity(bundle.series(), m)
        .map_err(r.component("volume_identity"))?;
    let verdict = Verdict::from_bool(res.relative_gap < 1e-2);
    let mut rep = r.custom(
        "volume_identity",
        json!({ "max_level": m }),
        json!([]),
        to_value(&res),
        verdict,
    );
    rep.tables.push(NamedTable {
        name: "scaled_basis_size".into(),
        rows: res.fit.table.clone(),
    });
    r.emit(rep)
}

fn khovanskii(r: &mut Runner<'_>, bundle: &AdelicBundle) -> Result<(), RunError> {
    let (gens, body, bound) =
        khovanskii_inputs(r.config, bundle).map_err(r.component("khovanskii"))?;
    let inputs = json!({
        "generators": gens,
        "body": body.to_json(),
        "bound": bound,
    });
    let res = match khovanskii_saturation(gens.clone(), &body, bound) {
        Ok(res) => res,
        Err(e) if is_refusal(&e) => {
            let mut rep = r.custom(
                "khovanskii",
                inputs,
                json!([]),
                json!({ "refused": e.to_string() }),
                Verdict::Inconclusive,
            );
            rep.warnings.push(format!("refused: {e}"));
            return r.emit(rep);
        }
        Err(e) => return Err(r.component("khovanskii")(e)),
    };
    let mut warnings = Vec::new();
    let verdict = match res.status {
        Saturation::Found => match &res.gamma {
            Some(g) => {
                let sg = Semigroup::enumerate(gens, bound).map_err(r.component("khovanskii"))?;
                let ok =
                    verify_gamma_brute_force(&sg, g, bound).map_err(r.component("khovanskii"))?;
                Verdict::from_bool(ok)
            }
            None => {
                warnings.push(format!("m0 found but no gamma within bound {bound}"));
                Verdict::Inconclusive
            }
        },
        Saturation::NotFoundWithinBound => {
            warnings.push(format!("no stable m0 within bound {bound}"));
            Verdict::Inconclusive
        }
        Saturation::PreconditionViolated => {
            warnings.push("generators do not span the full lattice".into());
            Verdict::Inconclusive
        }
    };
    let per_level = json!(res.failing_levels);
    let mut rep = r.custom("khovanskii", inputs, per_level, to_value(&res), verdict);
    rep.warnings = warnings;
    r.emit(rep)
}

fn chebyshev(
    r: &mut Runner<'_>,
    bundle: &AdelicBundle,
    t: &ChebyshevTable,
) -> Result<(), RunError> {
    let integral = invariants::integrate_c(t, bundle.series().polytope());
    let max_mono = t
        .entries
        .values()
        .map(|e| e.monotonicity_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_ceiling = t
        .entries
        .values()
        .map(|e| e.ceiling_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut warnings = Vec::new();
    let verdict = if max_mono <= 0.0 && max_ceiling <= 0.0 {
        Verdict::Pass
    } else {
        warnings.push("some sequence is not monotone within the slack 2·log(n)/n".into());
        Verdict::Inconclusive
    };
    let fitted = json!({
        "max_c": t.max_c(),
        "integral": integral,
        "max_monotonicity_excess": max_mono,
        "max_ceiling_excess": max_ceiling,
        "model": "c + b·log(n)/n + e/n",
    });
    let per_level: Vec<Value> = t.entries.values().map(to_value).collect();
    let mut rep = r.custom(
        "chebyshev",
        json!({ "grid_level": t.grid_level, "schedule": t.schedule }),
        Value::Array(per_level),
        fitted,
        verdict,
    );
    rep.warnings = warnings;
    for (i, e) in t.entries.values().enumerate() {
        rep.tables.push(NamedTable {
            name: format!("alpha_{i:03}"),
            rows: e.fit.table.clone(),
        });
    }
    r.emit(rep)
}

fn brunn_minkowski(
    r: &mut Runner<'_>,
    bundle: &AdelicBundle,
    eval: &Evaluator,
    t: &ChebyshevTable,
    chi: &[u32],
) -> Result<(), RunError> {
    let config = r.config;
    let grid = config.grid_level;
    // L + M has twice the degree, so its levels stop at half the max level
    let half = config.max_level / 2;
    let sum_levels: Vec<u32> = chi.iter().copied().filter(|&m| m <= half).collect();
    let sum_schedule: Vec<u32> = config
        .schedule
        .iter()
        .copied()
        .filter(|&k| grid * k <= half)
        .collect();
    let inputs = json!({
        "levels": chi,
        "sum_levels": sum_levels,
        "grid_level": grid,
        "schedule": config.schedule,
        "sum_schedule": sum_schedule,
        "other": config.bm_other.as_ref().map(to_value).unwrap_or(json!("self")),
    });
    let res = (|| {
        let other = match &config.bm_other {
            Some(spec) => Some(spec.build(config.max_level)?),
            None => None,
        };
        let other_eval = other.as_ref().map(|b| Evaluator::new(b.clone()));
        let other_table = match &other_eval {
            Some(e) => Some(ChebyshevTable::build(e, grid, &config.schedule)?),
            None => None,
        };
        let m_bundle = other.as_ref().unwrap_or(bundle);
        let sum = Evaluator::new(bundle.tensor(m_bundle)?.with_max_level(config.max_level));
        let sum_table = ChebyshevTable::build(&sum, grid, &sum_schedule)?;
        let (me, mt) = match (&other_eval, &other_table) {
            (Some(e), Some(t)) => (e, t),
            _ => (eval, t),
        };
        invariants::brunn_minkowski_check(
            BmSide {
                eval,
                levels: chi,
                table: t,
            },
            BmSide {
                eval: me,
                levels: chi,
                table: mt,
            },
            BmSide {
                eval: &sum,
                levels: &sum_levels,
                table: &sum_table,
            },
            config.tolerances.brunn_minkowski,
        )
    })();
    r.emit_result("brunn_minkowski", inputs, res)
}

/// Body and volume only: the Okounkov body, its exact volume, the volume
/// identity and, when configured, the Khovanskii saturation.
pub fn okounkov(config: &RunConfig) -> Result<Outcome, RunError> {
    let hash = report::config_hash(config);
    let mut r = Runner {
        config,
        hash: hash.clone(),
        outcome: Outcome {
            config_hash: hash,
            results: Vec::new(),
            warnings: Vec::new(),
            files: Vec::new(),
        },
    };
    let bundle = config
        .bundle
        .build(config.max_level)
        .map_err(r.component("config"))?;
    let body = convex_geom::okounkov_body(bundle.series(), config.max_level.min(4))
        .map_err(r.component("okounkov_body"))?;
    let vol = body.volume();
    let fitted = json!({
        "body": body.to_json(),
        "volume": vol.value.to_string(),
        "volume_f64": rational::to_f64(&vol.value),
        "degenerate": vol.degenerate,
    });
    let rep = r.custom(
        "okounkov_body",
        json!({ "series": config.bundle.series }),
        json!([]),
        fitted,
        Verdict::Pass,
    );
    r.emit(rep)?;
    volume_identity(&mut r, &bundle)?;
    if config.khovanskii.is_some() {
        khovanskii(&mut r, &bundle)?;
    }
    Ok(r.outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_levels_default_p1() {
        assert_eq!(chi_levels(200), (20..=200).step_by(10).collect::<Vec<_>>());
        assert_eq!(chi_levels(30), (3..=30).collect::<Vec<_>>());
    }

    #[test]
    fn refusals_are_not_failures() {
        assert!(is_refusal(&Error::Precondition("x".into())));
        assert!(!is_refusal(&Error::ZeroLevel));
    }
}
