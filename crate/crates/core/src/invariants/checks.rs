//! Numeric verification of the identities and limit theorems.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{ChebyshevTable, ChiRow, Evaluator, Place};
use crate::convex_geom::Semigroup;
use crate::error::{Error, Result};
use crate::fit::{self, Fit, Model, TableRow};
use crate::linear_series::{Exponent, Section};
use crate::metrics_arch::{self, GramMatrix};
use crate::metrics_nonarch::{self, GaussNorm, NonArchWeight, PrimeLogs};
use crate::rational::{self, Q};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Pass,
    Inconclusive,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// The worst of several verdicts.
    pub fn combine(vs: impl IntoIterator<Item = Verdict>) -> Self {
        vs.into_iter().max().unwrap_or(Verdict::Pass)
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Fail => "FAIL",
        }
    }
}

/// A convergence table destined for CSV output.
#[derive(Debug, Clone, Serialize)]
pub struct NamedTable {
    pub name: String,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport<P, F> {
    pub check: &'static str,
    pub per_level: Vec<P>,
    pub fitted: F,
    pub verdict: Verdict,
    #[serde(skip)]
    pub tables: Vec<NamedTable>,
}

fn table(name: &str, fit: &Fit) -> NamedTable {
    NamedTable {
        name: name.into(),
        rows: fit.table.clone(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub m: u32,
    pub deg: f64,
    pub minus_sum_f_prime: f64,
    pub arch_gap: f64,
    pub finite_deg: PrimeLogs,
    pub finite_minus_sum_f: PrimeLogs,
    pub finite_exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityFitted {
    pub max_gap: f64,
    pub tolerance: f64,
    pub finite_exact: bool,
}

/// `deg H⁰(mL̄) = −Σ_v Σ_α F′_v(m, α)` level by level.
pub fn fundamental_identity_check(
    eval: &Evaluator,
    levels: &[u32],
    tolerance: f64,
) -> Result<CheckReport<IdentityRow, IdentityFitted>> {
    eval.prefetch(levels)?;
    let mut rows = Vec::with_capacity(levels.len());
    for &m in levels {
        let deg = eval.deg_h0(m)?;
        let g = eval.gram(m)?;
        let mat = g.matrix();
        let mut arch = Vec::with_capacity(g.basis.len());
        let mut finite = PrimeLogs::zero();
        for b in &g.basis {
            arch.push(metrics_arch::minimizer_from_gram(&g, &mat, b)?.f_prime);
            finite = finite.add(&eval.f_finite(m, b));
        }
        let sum_arch = fit::pairwise_sum(&arch);
        let finite_minus_sum_f = finite.neg();
        rows.push(IdentityRow {
            m,
            deg: deg.total,
            minus_sum_f_prime: -sum_arch - finite.to_f64(),
            arch_gap: (deg.arch + sum_arch).abs(),
            finite_exact: finite_minus_sum_f == deg.finite,
            finite_deg: deg.finite,
            finite_minus_sum_f,
        });
    }
    let max_gap = rows.iter().map(|r| r.arch_gap).fold(0.0, f64::max);
    let finite_exact = rows.iter().all(|r| r.finite_exact);
    Ok(CheckReport {
        check: "fundamental_identity",
        verdict: Verdict::from_bool(max_gap < tolerance && finite_exact),
        fitted: IdentityFitted {
            max_gap,
            tolerance,
            finite_exact,
        },
        per_level: rows,
        tables: Vec::new(),
    })
}

/// `|−½·log det G + Σ_i F′_i|` for an arbitrary positive-definite Gram
/// matrix, with `F′_i` from coset projection and `det G` by LU.
pub fn fundamental_identity_dense(g: &DMatrix<f64>) -> Result<f64> {
    let gm = GramMatrix::from_dense(g)?;
    let mut sum = 0.0;
    for i in 0..g.nrows() {
        sum += 0.5 * metrics_arch::project_coset(&gm, i)?.log_norm2;
    }
    let det = g.clone().lu().determinant();
    if !(det > 0.0) {
        return Err(Error::SingularGram { pivot: 0 });
    }
    Ok((-0.5 * det.ln() + sum).abs())
}

#[derive(Debug, Clone, Serialize)]
pub struct RiemannRochRow {
    pub m: u32,
    pub n_m: usize,
    pub deg: f64,
    pub chi_l2: f64,
    /// `χ_{L²} − deg`.
    pub difference: f64,
    /// `|χ_{L²} − deg − r₁·log V(N) − r₂·log V(2N) + (N/2)·log d_K|`.
    pub identity_gap: f64,
    /// `|χ_{L²} − deg| / (N·log N)`.
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RiemannRochFitted {
    pub riemann_roch_constant: f64,
    pub fit_max_level: u32,
    pub max_identity_gap: f64,
    pub validation_max_ratio: f64,
}

/// `χ_{L²} − deg H⁰` against the ball-volume formula, and `a_K` fitted on
/// levels `≤ fit_max_level` then validated on the rest.
pub fn riemann_roch_check(
    eval: &Evaluator,
    levels: &[u32],
    fit_max_level: u32,
    tolerance: f64,
) -> Result<CheckReport<RiemannRochRow, RiemannRochFitted>> {
    eval.prefetch(levels)?;
    let f = eval.field();
    let mut rows = Vec::new();
    for &m in levels {
        let n = eval.bundle().series().basis_size(m);
        let deg = eval.deg_h0(m)?.total;
        let chi = eval.chi_l2(m)?;
        let nf = n as f64;
        let expected = f.real_places as f64 * super::log_ball_volume(n)
            + f.complex_places as f64 * super::log_ball_volume(2 * n)
            - 0.5 * nf * (f.discriminant as f64).ln();
        let diff = chi - deg;
        let ratio = if n >= 2 {
            diff.abs() / (nf * nf.ln())
        } else {
            0.0
        };
        rows.push(RiemannRochRow {
            m,
            n_m: n,
            deg,
            chi_l2: chi,
            difference: diff,
            identity_gap: (diff - expected).abs(),
            ratio,
        });
    }
    let a_k = rows
        .iter()
        .filter(|r| r.m <= fit_max_level)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    let validation = rows
        .iter()
        .filter(|r| r.m > fit_max_level)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    let max_gap = rows.iter().map(|r| r.identity_gap).fold(0.0, f64::max);
    let ok = max_gap < tolerance && validation <= a_k && a_k > 0.0;
    Ok(CheckReport {
        check: "riemann_roch",
        verdict: Verdict::from_bool(ok),
        fitted: RiemannRochFitted {
            riemann_roch_constant: a_k,
            fit_max_level,
            max_identity_gap: max_gap,
            validation_max_ratio: validation,
        },
        per_level: rows,
        tables: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SummationRow {
    pub m: u32,
    pub chi_l2: f64,
    pub sum_f: f64,
    pub remainder: f64,
    /// `|r(m)| / (m^d·log m)`.
    pub scaled: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummationFitted {
    pub constant: f64,
    pub fit_levels: Vec<u32>,
    pub validation_max_scaled: f64,
    pub limit_fit: Option<Fit>,
}

/// `r(m) = χ_{L²}(m) + Σ_α F′(m, α)` is `O(m^d log m)`: a constant `C` is
/// fitted on the first half of the levels (with 25% headroom over the larger
/// of the observed maximum and the extrapolated limit) and must bound the
/// second half.
pub fn summation_theorem_check(
    eval: &Evaluator,
    levels: &[u32],
) -> Result<CheckReport<SummationRow, SummationFitted>> {
    let levels: Vec<u32> = levels.iter().copied().filter(|&m| m >= 2).collect();
    if levels.len() < 6 {
        return Err(Error::Precondition(
            "summation check needs at least 6 levels >= 2".into(),
        ));
    }
    let chi = eval.chi_series(&levels)?;
    let d = eval.bundle().dim() as i32;
    let rows: Vec<SummationRow> = chi
        .iter()
        .map(|r| {
            let remainder = r.chi_l2 - r.minus_sum_f;
            let mf = r.m as f64;
            SummationRow {
                m: r.m,
                chi_l2: r.chi_l2,
                sum_f: -r.minus_sum_f,
                remainder,
                scaled: remainder.abs() / (mf.powi(d) * mf.ln()),
            }
        })
        .collect();
    let half = rows.len() / 2;
    let (first, second) = rows.split_at(half);
    let ms: Vec<f64> = first.iter().map(|r| r.m as f64).collect();
    let vals: Vec<f64> = first.iter().map(|r| r.scaled).collect();
    let limit_fit = fit::fit(Model::LogOverLevel, &ms, &vals).ok();
    let observed = vals.iter().copied().fold(0.0, f64::max);
    let constant = 1.25 * observed.max(limit_fit.as_ref().map_or(0.0, |f| f.leading().abs()));
    let validation = second.iter().map(|r| r.scaled).fold(0.0, f64::max);
    let tables = limit_fit
        .iter()
        .map(|f| table("summation_scaled_remainder", f))
        .collect();
    Ok(CheckReport {
        check: "summation_theorem",
        verdict: Verdict::from_bool(validation <= constant),
        fitted: SummationFitted {
            constant,
            fit_levels: first.iter().map(|r| r.m).collect(),
            validation_max_scaled: validation,
            limit_fit,
        },
        per_level: rows,
        tables,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct VolChi {
    pub v: f64,
    pub fit: Fit,
    /// `(m, χ_{L²}(m)·(d+1)!/m^{d+1})`.
    pub raw: Vec<(u32, f64)>,
    #[serde(skip)]
    pub chi: Vec<ChiRow>,
}

/// Fits `χ_{L²}(m) = v·m^{d+1}/(d+1)! + b·m^d·log m + c·m^d`.
pub fn vol_chi(eval: &Evaluator, levels: &[u32]) -> Result<VolChi> {
    if levels.len() < 5 {
        return Err(Error::Precondition(
            "vol_chi needs at least 5 levels".into(),
        ));
    }
    let d = eval.bundle().dim();
    let chi = eval.chi_series(levels)?;
    let ms: Vec<f64> = chi.iter().map(|r| r.m as f64).collect();
    let ys: Vec<f64> = chi.iter().map(|r| r.chi_l2).collect();
    let fit = fit::fit(Model::EulerCharacteristic { dim: d }, &ms, &ys)?;
    let fact: f64 = (1..=d + 1).map(|i| i as f64).product();
    let raw = chi
        .iter()
        .map(|r| (r.m, r.chi_l2 * fact / (r.m as f64).powi(d as i32 + 1)))
        .collect();
    Ok(VolChi {
        v: fit.leading(),
        fit,
        raw,
        chi,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HomogeneityFitted {
    pub k: u32,
    pub vol_base: f64,
    pub vol_multiple: f64,
    pub expected_factor: f64,
    pub relative_error: f64,
    pub tolerance: f64,
}

/// `vol_χ(kL̄) = k^{d+1}·vol_χ(L̄)`.
pub fn vol_chi_homogeneity_check(
    base: &Evaluator,
    multiple: &Evaluator,
    k: u32,
    base_levels: &[u32],
    multiple_levels: &[u32],
    tolerance: f64,
) -> Result<CheckReport<(u32, f64), HomogeneityFitted>> {
    let d = base.bundle().dim() as i32;
    let vb = vol_chi(base, base_levels)?;
    let vm = vol_chi(multiple, multiple_levels)?;
    let factor = (k as f64).powi(d + 1);
    let rel = (vm.v - factor * vb.v).abs() / (factor * vb.v).abs();
    Ok(CheckReport {
        check: "vol_chi_homogeneity",
        verdict: Verdict::from_bool(rel < tolerance),
        fitted: HomogeneityFitted {
            k,
            vol_base: vb.v,
            vol_multiple: vm.v,
            expected_factor: factor,
            relative_error: rel,
            tolerance,
        },
        tables: vec![
            table("vol_chi_base", &vb.fit),
            table("vol_chi_multiple", &vm.fit),
        ],
        per_level: vm.raw,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformBoundRow {
    pub m: u32,
    pub max_f_over_m: f64,
    pub min_f_over_m: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniformBoundFitted {
    pub bound: f64,
    pub bound_source: &'static str,
    pub max_observed: f64,
    pub min_observed: f64,
    /// Largest `C` with `(1/m)F(m, α) ≥ C·(|α| + 1)` on the sweep.
    pub lower_bound_constant: f64,
}

/// `Σ_v log ‖t^β‖_{v,sup}` at level `n`, sup estimate plus its gap.
fn log_sup_all_places(eval: &Evaluator, n: u32, beta: &Exponent) -> Result<f64> {
    let s = Section::monomial(n, beta.clone());
    let arch = metrics_arch::sup_norm(eval.bundle().arch(), &s)?.log_upper();
    let fin: f64 = eval
        .bundle()
        .finite()
        .iter()
        .map(|w| {
            let g = crate::metrics_nonarch::gauss_norm(w, &s)?;
            Ok(GaussNorm::log_value(&g, w.prime()))
        })
        .sum::<Result<f64>>()?;
    Ok(arch + fin)
}

/// Boundedness of `(1/m)·F` with the explicit bound from coordinate sections
/// on `ℙ^d` or from semigroup generators otherwise.
pub fn uniform_bound_check(
    eval: &Evaluator,
    levels: &[u32],
) -> Result<CheckReport<UniformBoundRow, UniformBoundFitted>> {
    eval.prefetch(levels)?;
    let series = eval.bundle().series();
    let d = series.dim();
    let (bound, source) = if series.is_projective() {
        let mut gens = vec![Exponent::zero(d)];
        for i in 0..d {
            let mut e = vec![0; d];
            e[i] = 1;
            gens.push(Exponent::new(e));
        }
        let vals: Vec<f64> = gens
            .iter()
            .map(|g| log_sup_all_places(eval, 1, g))
            .collect::<Result<_>>()?;
        (
            vals.into_iter().fold(f64::NEG_INFINITY, f64::max),
            "coordinate sections",
        )
    } else {
        let sg = Semigroup::from_series(series, 3)?;
        let vals: Vec<f64> = sg
            .generators()
            .iter()
            .map(|(g, n)| Ok(log_sup_all_places(eval, *n, g)? / *n as f64))
            .collect::<Result<_>>()?;
        (
            vals.into_iter().fold(f64::NEG_INFINITY, f64::max),
            "semigroup generators",
        )
    };
    let mut rows = Vec::new();
    let mut lower = f64::INFINITY;
    for &m in levels {
        let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
        for b in eval.level_basis(m)? {
            let v = eval.f_total(m, &b)?.total / m as f64;
            hi = hi.max(v);
            lo = lo.min(v);
            let norm1 = b.total_degree() as f64 / m as f64;
            lower = lower.min(v / (norm1 + 1.0));
        }
        rows.push(UniformBoundRow {
            m,
            max_f_over_m: hi,
            min_f_over_m: lo,
        });
    }
    let max_observed = rows
        .iter()
        .map(|r| r.max_f_over_m)
        .fold(f64::NEG_INFINITY, f64::max);
    let min_observed = rows
        .iter()
        .map(|r| r.min_f_over_m)
        .fold(f64::INFINITY, f64::min);
    Ok(CheckReport {
        check: "uniform_bound",
        verdict: Verdict::from_bool(max_observed <= bound + 1e-9 && min_observed.is_finite()),
        fitted: UniformBoundFitted {
            bound,
            bound_source: source,
            max_observed,
            min_observed,
            lower_bound_constant: lower,
        },
        per_level: rows,
        tables: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstantCandidate {
    pub constant: &'static str,
    /// `−vol_χ·constant`.
    pub predicted_integral: f64,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MainTheoremFitted {
    /// `lim χ_{L²}(m)/m^{d+1}` from the `vol_χ` fit.
    pub limit_chi: f64,
    pub integral_c: f64,
    pub integral_c_step_sum: f64,
    pub boundary_correction: f64,
    pub gap: f64,
    pub tolerance: f64,
    pub vol_chi: f64,
    pub candidates: Vec<ConstantCandidate>,
    pub supported_constant: &'static str,
    pub max_monotonicity_excess: f64,
}

/// `lim χ_{L²}(m)/m^{d+1} = −∫_Δ c`, plus which normalization of `vol_χ`
/// the data supports.
pub fn main_theorem_check(
    eval: &Evaluator,
    levels: &[u32],
    table: &ChebyshevTable,
    tolerance: f64,
) -> Result<CheckReport<(u32, f64), MainTheoremFitted>> {
    let bound = uniform_bound_check(eval, &levels[..levels.len().min(8)])?;
    if bound.verdict != Verdict::Pass {
        return Err(Error::Precondition(format!(
            "uniform boundedness failed: max (1/m)F = {} exceeds bound {}",
            bound.fitted.max_observed, bound.fitted.bound
        )));
    }
    let d = eval.bundle().dim();
    let vc = vol_chi(eval, levels)?;
    let fact_d: f64 = (1..=d).map(|i| i as f64).product();
    let fact_d1 = fact_d * (d + 1) as f64;
    let limit = vc.v / fact_d1;
    let integral = super::integrate_c(table, eval.bundle().series().polytope());
    let gap = (limit + integral.value).abs();
    let candidates = vec![
        ConstantCandidate {
            constant: "1/d!",
            predicted_integral: -vc.v / fact_d,
            distance: (integral.value + vc.v / fact_d).abs(),
        },
        ConstantCandidate {
            constant: "1/(d+1)!",
            predicted_integral: -vc.v / fact_d1,
            distance: (integral.value + vc.v / fact_d1).abs(),
        },
    ];
    let supported = if candidates[1].distance < candidates[0].distance {
        "1/(d+1)!"
    } else {
        "1/d!"
    };
    let max_mono = table
        .entries
        .values()
        .map(|e| e.monotonicity_excess)
        .fold(f64::NEG_INFINITY, f64::max);
    let per_level = vc.raw.iter().map(|&(m, r)| (m, r / fact_d1)).collect();
    Ok(CheckReport {
        check: "main_theorem",
        verdict: Verdict::from_bool(gap < tolerance),
        fitted: MainTheoremFitted {
            limit_chi: limit,
            integral_c: integral.value,
            integral_c_step_sum: integral.step_sum,
            boundary_correction: integral.boundary_correction,
            gap,
            tolerance,
            vol_chi: vc.v,
            candidates,
            supported_constant: supported,
            max_monotonicity_excess: max_mono,
        },
        per_level,
        tables: vec![table_named("chi_l2_fit", &vc.fit)],
    })
}

fn table_named(name: &str, f: &Fit) -> NamedTable {
    table(name, f)
}

#[derive(Debug, Clone, Serialize)]
pub struct BrunnMinkowskiFitted {
    pub vol_l: f64,
    pub vol_m: f64,
    pub vol_sum: f64,
    /// `vol_χ(L̄+M̄)^{1/(d+1)}`.
    pub lhs: f64,
    /// `vol_χ(L̄)^{1/(d+1)} + vol_χ(M̄)^{1/(d+1)}`.
    pub rhs: f64,
    pub ratio: f64,
    pub tolerance: f64,
    pub max_c_l: f64,
    pub max_c_m: f64,
    pub inclusion_checked: usize,
    pub inclusion_violations: usize,
}

/// Inputs for one side of a Brunn–Minkowski comparison.
pub struct BmSide<'a> {
    pub eval: &'a Evaluator,
    pub levels: &'a [u32],
    pub table: &'a ChebyshevTable,
}

/// `vol_χ(L̄+M̄)^{1/(d+1)} ≥ vol_χ(L̄)^{1/(d+1)} + vol_χ(M̄)^{1/(d+1)}` and
/// `Δ̃(L̄) + Δ̃(M̄) ⊂ Δ̃(L̄+M̄)` on grid points. All three tables must share
/// a grid level.
pub fn brunn_minkowski_check(
    l: BmSide<'_>,
    m: BmSide<'_>,
    sum: BmSide<'_>,
    tolerance: f64,
) -> Result<CheckReport<(String, f64), BrunnMinkowskiFitted>> {
    let g = l.table.grid_level;
    if m.table.grid_level != g || sum.table.grid_level != g {
        return Err(Error::Precondition(
            "Chebyshev tables must share a grid level".into(),
        ));
    }
    let c_tol = 1e-2;
    let (max_c_l, max_c_m) = (l.table.max_c(), m.table.max_c());
    if max_c_l > c_tol || max_c_m > c_tol {
        return Err(Error::PositiveCeiling {
            at: "grid".into(),
            value: max_c_l.max(max_c_m),
            tolerance: c_tol,
        });
    }
    let vl = vol_chi(l.eval, l.levels)?;
    let vm = vol_chi(m.eval, m.levels)?;
    let vs = vol_chi(sum.eval, sum.levels)?;
    if vl.v < -tolerance || vm.v < -tolerance {
        return Err(Error::Precondition(format!(
            "negative vol_chi estimates {} and {}",
            vl.v, vm.v
        )));
    }
    let e = 1.0 / (l.eval.bundle().dim() + 1) as f64;
    let root = |v: f64| v.max(0.0).powf(e);
    let lhs = root(vs.v);
    let rhs = root(vl.v) + root(vm.v);
    let (mut checked, mut violations) = (0, 0);
    for (a, ea) in &l.table.entries {
        for (b, eb) in &m.table.entries {
            let Some(es) = sum.table.get(&a.add(b)) else {
                return Err(Error::NotInGrid {
                    level: g,
                    detail: format!("{} missing from the sum table", a.add(b)),
                });
            };
            checked += 1;
            if es.c_value > ea.c_value + eb.c_value + c_tol {
                violations += 1;
            }
        }
    }
    let ok = lhs >= rhs * (1.0 - tolerance) && violations == 0;
    Ok(CheckReport {
        check: "brunn_minkowski",
        verdict: Verdict::from_bool(ok),
        fitted: BrunnMinkowskiFitted {
            vol_l: vl.v,
            vol_m: vm.v,
            vol_sum: vs.v,
            lhs,
            rhs,
            ratio: lhs / rhs,
            tolerance,
            max_c_l,
            max_c_m,
            inclusion_checked: checked,
            inclusion_violations: violations,
        },
        per_level: vec![("L".into(), vl.v), ("M".into(), vm.v), ("L+M".into(), vs.v)],
        tables: vec![
            table("vol_chi_l", &vl.fit),
            table("vol_chi_m", &vm.fit),
            table("vol_chi_sum", &vs.fit),
        ],
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductFormulaRow {
    pub q: String,
    pub m: u32,
    pub leading: Exponent,
    pub f_before: f64,
    pub f_after: f64,
    pub difference: f64,
    pub shifts: Vec<(Place, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProductFormulaFitted {
    pub max_difference: f64,
    pub tolerance: f64,
    pub all_places_shift: bool,
}

/// Rescaling `s₀` by `q` moves each `F_v` by `m·log|q|_v` and leaves the sum
/// unchanged.
pub fn product_formula_check(
    eval: &Evaluator,
    qs: &[Q],
    samples: &[(u32, Exponent)],
    tolerance: f64,
) -> Result<CheckReport<ProductFormulaRow, ProductFormulaFitted>> {
    let mut rows = Vec::new();
    let mut all_shift = true;
    for q in qs {
        let moved = Evaluator::new(eval.bundle().rescale_base_section(q)?)
            .with_field(*eval.field())
            .with_quadrature(*eval.quadrature());
        let levels: Vec<u32> = samples.iter().map(|(m, _)| *m).collect();
        moved.prefetch(&levels)?;
        for (m, b) in samples {
            let before = eval.f_total(*m, b)?;
            let after = moved.f_total(*m, b)?;
            let mut shifts = vec![(Place::Archimedean, after.arch - before.arch)];
            let delta = after.finite.add(&before.finite.neg());
            shifts.extend(
                delta
                    .terms()
                    .map(|(p, k)| (Place::Prime(p), k as f64 * (p as f64).ln())),
            );
            let trivial = rational::log_abs(q) == 0.0;
            if !trivial && shifts.iter().all(|(_, s)| s.abs() < 1e-12) {
                all_shift = false;
            }
            rows.push(ProductFormulaRow {
                q: q.to_string(),
                m: *m,
                leading: b.clone(),
                f_before: before.total,
                f_after: after.total,
                difference: after.total - before.total,
                shifts,
            });
        }
    }
    let max_difference = rows.iter().map(|r| r.difference.abs()).fold(0.0, f64::max);
    Ok(CheckReport {
        check: "product_formula",
        verdict: Verdict::from_bool(max_difference < tolerance && all_shift),
        fitted: ProductFormulaFitted {
            max_difference,
            tolerance,
            all_places_shift: all_shift,
        },
        per_level: rows,
        tables: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct NonArchRow {
    pub prime: u64,
    pub m: u32,
    /// `Σ_α F_p(m, α)`.
    pub sum_f: PrimeLogs,
    pub covolume: PrimeLogs,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NonArchFitted {
    pub rows_exact: bool,
    pub trivial_place_zero: bool,
    pub trivial_prime: u64,
    pub brute_force_cases: usize,
    pub brute_force_exhaustive: usize,
    pub brute_force_failures: usize,
}

/// Exactness of the finite places: `Σ_α F_p = covolume` at every level up to
/// `max_level`, `F_p = 0` at a trivial place, and `cases` certificates
/// checked against the brute-force coset grid.
pub fn nonarch_exactness_check(
    eval: &Evaluator,
    max_level: u32,
    cases: usize,
    seed: u64,
) -> Result<CheckReport<NonArchRow, NonArchFitted>> {
    let series = eval.bundle().series();
    let weights = eval.bundle().finite();
    let mut rows = Vec::new();
    for w in weights {
        for m in 1..=max_level {
            let mut sum = PrimeLogs::zero();
            for b in series.level_basis(m)? {
                sum = sum.add(&metrics_nonarch::f_p_value(w, m, &b));
            }
            let covolume = metrics_nonarch::unit_ball_covolume(w, series, m)?;
            let exact = sum == covolume
                && sum
                    .add(&metrics_nonarch::degree_contribution(w, series, m)?)
                    .is_zero();
            rows.push(NonArchRow {
                prime: w.prime(),
                m,
                sum_f: sum,
                covolume,
                exact,
            });
        }
    }
    let trivial_prime = (2u64..)
        .find(|&p| rational::is_prime(p) && weights.iter().all(|w| w.prime() != p))
        .expect("infinitely many primes");
    let trivial = NonArchWeight::trivial(trivial_prime, series.dim())?;
    let mut trivial_zero = true;
    for m in [1, max_level / 2, max_level]
        .into_iter()
        .filter(|&m| m >= 1)
    {
        for b in series.level_basis(m)? {
            trivial_zero &= metrics_nonarch::f_p_value(&trivial, m, &b).is_zero();
        }
    }
    let mut all: Vec<&NonArchWeight> = weights.iter().collect();
    all.push(&trivial);
    let top = max_level.min(if series.dim() == 1 { 12 } else { 5 }).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut exhaustive, mut failures) = (0, 0);
    for case in 0..cases {
        let w = all[case % all.len()];
        let m = rng.gen_range(1..=top);
        let basis = series.level_basis(m)?;
        let b = &basis[rng.gen_range(0..basis.len())];
        let v = metrics_nonarch::f_p_at(w, series, m, b, seed.wrapping_add(case as u64))?;
        exhaustive += v.certificate.brute_force_exhaustive as usize;
        if !v.certificate.holds(w.level_weight(m, b)) {
            failures += 1;
        }
    }
    let rows_exact = rows.iter().all(|r| r.exact);
    Ok(CheckReport {
        check: "nonarch_exactness",
        verdict: Verdict::from_bool(rows_exact && trivial_zero && failures == 0),
        fitted: NonArchFitted {
            rows_exact,
            trivial_place_zero: trivial_zero,
            trivial_prime,
            brute_force_cases: cases,
            brute_force_exhaustive: exhaustive,
            brute_force_failures: failures,
        },
        per_level: rows,
        tables: Vec::new(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GromovFitted {
    pub samples: usize,
    pub violations: usize,
    /// Largest `a` with `a·m^{−d}·‖s‖_sup ≤ ‖s‖_{L²}` on the sample.
    pub fitted_a: f64,
}

/// `a·m^{−d}·‖s‖_sup ≤ ‖s‖_{L²} ≤ ‖s‖_sup` on random sections at levels up
/// to `max_level`. Per level: the smallest observed `L²/sup` ratio.
pub fn gromov_sandwich_check(
    eval: &Evaluator,
    max_level: u32,
    samples: usize,
    seed: u64,
) -> Result<CheckReport<(u32, f64), GromovFitted>> {
    let b = eval.bundle();
    let gram = |m: u32| eval.gram(m).map(|g| (*g).clone());
    let r = metrics_arch::gromov_check(b.arch(), b.series(), max_level, samples, seed, &gram)?;
    let d = b.dim() as f64;
    let lower_ok = r
        .records
        .iter()
        .all(|s| r.fitted_a.ln() - d * (s.level as f64).ln() + s.log_sup <= s.log_l2 + 1e-12);
    Ok(CheckReport {
        check: "gromov_sandwich",
        verdict: Verdict::from_bool(r.violations == 0 && r.fitted_a > 0.0 && lower_ok),
        fitted: GromovFitted {
            samples: r.samples,
            violations: r.violations,
            fitted_a: r.fitted_a,
        },
        per_level: r.per_level,
        tables: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::AdelicBundle;

    #[test]
    fn dense_identity_holds() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.6, -0.3, 0.6, 1.5, 0.4, -0.3, 0.4, 1.0]);
        assert!(fundamental_identity_dense(&g).unwrap() < 1e-12);
    }

    #[test]
    fn identity_with_weights() {
        let b = AdelicBundle::fubini_study(1).unwrap();
        let w = NonArchWeight::new(5, vec![(vec![1], 0), (vec![-1], 1)]).unwrap();
        let e = Evaluator::new(b.with_weight(w).unwrap());
        let r = fundamental_identity_check(&e, &[1, 2, 5, 9], 1e-8).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.per_level.iter().any(|row| !row.finite_deg.is_zero()));
    }

    #[test]
    fn nonarch_exactness_small() {
        let b = AdelicBundle::fubini_study(2).unwrap();
        let w = NonArchWeight::new(3, vec![(vec![1, 0], 0), (vec![0, 1], 0), (vec![-1, -1], 1)])
            .unwrap();
        let e = Evaluator::new(b.with_weight(w).unwrap());
        let r = nonarch_exactness_check(&e, 8, 10, 1).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.fitted.trivial_prime, 2);
        assert_eq!(r.per_level.len(), 8);
    }

    #[test]
    fn gromov_small() {
        let e = Evaluator::new(AdelicBundle::fubini_study(1).unwrap());
        let r = gromov_sandwich_check(&e, 4, 40, 3).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.fitted.fitted_a > 0.0 && r.fitted.fitted_a <= 1.0);
    }

    #[test]
    fn verdict_order() {
        assert_eq!(
            Verdict::combine([Verdict::Pass, Verdict::Inconclusive]),
            Verdict::Inconclusive
        );
        assert_eq!(
            Verdict::combine([Verdict::Fail, Verdict::Inconclusive]),
            Verdict::Fail
        );
        assert_eq!(Verdict::combine([]), Verdict::Pass);
    }

    #[test]
    fn uniform_bound_on_p1() {
        let e = Evaluator::new(AdelicBundle::fubini_study(1).unwrap());
        let r = uniform_bound_check(&e, &[1, 2, 5, 10, 20]).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.fitted.bound.abs() < 1e-7);
        for row in &r.per_level {
            let eps = 2.0 * (row.m as f64 + 1.0).ln() / row.m as f64;
            assert!(row.min_f_over_m >= -0.5 * 2f64.ln() - eps);
            assert!(row.max_f_over_m <= 0.0);
        }
    }

    #[test]
    fn uniform_bound_from_generators() {
        let s = crate::linear_series::ToricSeries::from_vertices(vec![
            vec![0, 0],
            vec![2, 0],
            vec![0, 1],
        ])
        .unwrap();
        let arch = crate::metrics_arch::ArchMetric::fubini_study(&s);
        let e = Evaluator::new(AdelicBundle::new(s, arch, vec![]).unwrap());
        let r = uniform_bound_check(&e, &[1, 2, 3]).unwrap();
        assert_eq!(r.fitted.bound_source, "semigroup generators");
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn product_formula_small() {
        let b = AdelicBundle::fubini_study(1).unwrap();
        let w = NonArchWeight::new(2, vec![(vec![1], 0)]).unwrap();
        let e = Evaluator::new(b.with_weight(w).unwrap());
        let samples = vec![(3, Exponent::new(vec![1])), (4, Exponent::new(vec![4]))];
        let r = product_formula_check(
            &e,
            &[rational::q(2), rational::q_frac(1, 6)],
            &samples,
            1e-10,
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:?}", r.fitted);
    }
}
