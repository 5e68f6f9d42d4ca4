//! Global assembly: `F`, `c`, `deg H⁰`, `χ_{L²}`, `vol_χ` and the checks of
//! the identities and limit theorems relating them.

mod chebyshev;
mod checks;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linear_series::{Exponent, ToricSeries};
use crate::metrics_arch::{self, ArchMetric, GramData, GramMatrix, SupInterval};
use crate::metrics_nonarch::{self, NonArchWeight, PrimeLogs};
use crate::quadrature::QuadratureConfig;
use crate::rational::{self, Q};

pub use chebyshev::{chebyshev, integrate_c, ChebyshevEntry, ChebyshevTable};
pub use checks::{
    brunn_minkowski_check, fundamental_identity_check, fundamental_identity_dense,
    gromov_sandwich_check, main_theorem_check, nonarch_exactness_check, product_formula_check,
    riemann_roch_check, summation_theorem_check, uniform_bound_check, vol_chi,
    vol_chi_homogeneity_check, BmSide, BrunnMinkowskiFitted, CheckReport, ConstantCandidate,
    GromovFitted, HomogeneityFitted, IdentityFitted, IdentityRow, MainTheoremFitted, NamedTable,
    NonArchFitted, NonArchRow, ProductFormulaFitted, ProductFormulaRow, RiemannRochFitted,
    RiemannRochRow, SummationFitted, SummationRow, UniformBoundFitted, UniformBoundRow, Verdict,
    VolChi,
};

/// Number-field data entering the Riemann–Roch comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldParams {
    pub discriminant: u64,
    pub real_places: u32,
    pub complex_places: u32,
    /// Riemann–Roch constant; fitted, `None` until known.
    pub riemann_roch_constant: Option<f64>,
}

impl FieldParams {
    pub fn rationals() -> Self {
        Self {
            discriminant: 1,
            real_places: 1,
            complex_places: 0,
            riemann_roch_constant: None,
        }
    }

    /// `χ_{L²} − deg H⁰` for a rank-`n` lattice:
    /// `−(n/2)·log d_K + r₁·log V(n) + r₂·log V(2n)`.
    pub fn euler_correction(&self, n: usize) -> f64 {
        -0.5 * n as f64 * (self.discriminant as f64).ln()
            + self.real_places as f64 * log_ball_volume(n)
            + self.complex_places as f64 * log_ball_volume(2 * n)
    }
}

/// `log V(n)`, `V(n) = π^{n/2}/Γ(n/2 + 1)` the volume of the unit ball in `ℝ^n`.
pub fn log_ball_volume(n: usize) -> f64 {
    0.5 * n as f64 * std::f64::consts::PI.ln() - ln_gamma(0.5 * n as f64 + 1.0)
}

/// A place of `ℚ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Place {
    Archimedean,
    Prime(u64),
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Archimedean => write!(f, "inf"),
            Place::Prime(p) => write!(f, "{p}"),
        }
    }
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// `L̄`: a toric series with an archimedean metric and finitely many
/// non-trivial finite places.
#[derive(Debug, Clone)]
pub struct AdelicBundle {
    series: ToricSeries,
    arch: ArchMetric,
    finite: Vec<NonArchWeight>,
}

impl AdelicBundle {
    pub fn new(
        series: ToricSeries,
        arch: ArchMetric,
        mut finite: Vec<NonArchWeight>,
    ) -> Result<Self> {
        let d = series.dim();
        if arch.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: arch.dim(),
            });
        }
        finite.sort_by_key(NonArchWeight::prime);
        for w in &finite {
            if w.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: w.dim(),
                });
            }
        }
        if let Some(pair) = finite.windows(2).find(|p| p[0].prime() == p[1].prime()) {
            return Err(Error::Precondition(format!(
                "two weights at the prime {}",
                pair[0].prime()
            )));
        }
        arch.growth_check(&series)?;
        Ok(Self {
            series,
            arch,
            finite,
        })
    }

    /// `ℙ^d` with the Fubini–Study metric and standard models everywhere.
    pub fn fubini_study(d: usize) -> Result<Self> {
        let series = ToricSeries::projective(d)?;
        let arch = ArchMetric::fubini_study(&series);
        Self::new(series, arch, Vec::new())
    }

    pub fn series(&self) -> &ToricSeries {
        &self.series
    }

    pub fn arch(&self) -> &ArchMetric {
        &self.arch
    }

    pub fn finite(&self) -> &[NonArchWeight] {
        &self.finite
    }

    pub fn dim(&self) -> usize {
        self.series.dim()
    }

    pub fn with_weight(&self, w: NonArchWeight) -> Result<Self> {
        let mut finite = self.finite.clone();
        finite.push(w);
        Self::new(self.series.clone(), self.arch.clone(), finite)
    }

    pub fn with_arch(&self, arch: ArchMetric) -> Result<Self> {
        Self::new(self.series.clone(), arch, self.finite.clone())
    }

    pub fn with_max_level(mut self, max_level: u32) -> Self {
        self.series = self.series.with_max_level(max_level);
        self
    }

    fn weight_or_trivial(&self, p: u64) -> Result<NonArchWeight> {
        match self.finite.iter().find(|w| w.prime() == p) {
            Some(w) => Ok(w.clone()),
            None => NonArchWeight::trivial(p, self.dim()),
        }
    }

    /// `L̄ + M̄`: Minkowski sum of polytopes, added archimedean weights and
    /// sup-convolved finite weights.
    pub fn tensor(&self, other: &AdelicBundle) -> Result<Self> {
        let sum = self
            .series
            .polytope()
            .minkowski_sum(other.series.polytope())?;
        let vertices = integer_vertices(sum.vertices())?;
        let series = ToricSeries::from_vertices(vertices)?.with_max_level(self.series.max_level());
        let arch = self.arch.tensor(&other.arch)?;
        let mut primes: Vec<u64> = self
            .finite
            .iter()
            .chain(&other.finite)
            .map(NonArchWeight::prime)
            .collect();
        primes.sort_unstable();
        primes.dedup();
        let mut finite = Vec::new();
        for p in primes {
            let (wl, wm) = (self.weight_or_trivial(p)?, other.weight_or_trivial(p)?);
            if self.dim() != 1 {
                return Err(Error::Unsupported(
                    "sums of bundles with finite weights are implemented for d = 1".into(),
                ));
            }
            let len = |s: &ToricSeries| s.vertices().iter().map(|v| v[0]).max().unwrap_or(0);
            let w = metrics_nonarch::sup_convolution_1d(
                &wl,
                len(&self.series),
                &wm,
                len(&other.series),
            )?;
            if !w.is_trivial() {
                finite.push(w);
            }
        }
        Self::new(series, arch, finite)
    }

    /// `kL̄`.
    pub fn multiple(&self, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::ZeroLevel);
        }
        let vertices: Vec<Vec<i64>> = self
            .series
            .vertices()
            .iter()
            .map(|v| v.iter().map(|&a| a * k as i64).collect())
            .collect();
        let series = ToricSeries::from_vertices(vertices)?.with_max_level(self.series.max_level());
        let mut arch = self.arch.clone();
        for _ in 1..k {
            arch = arch.tensor(&self.arch)?;
        }
        let finite = self
            .finite
            .iter()
            .map(|w| {
                NonArchWeight::new(
                    w.prime(),
                    w.pieces()
                        .iter()
                        .map(|(a, b)| (a.clone(), b * k as i64))
                        .collect(),
                )
            })
            .collect::<Result<_>>()?;
        Self::new(series, arch, finite)
    }

    /// Replaces the trivializing section `s₀` by `q·s₀`: the archimedean
    /// weight drops by `log|q|` and each finite weight rises by `v_p(q)`.
    pub fn rescale_base_section(&self, q: &Q) -> Result<Self> {
        if num_traits::Zero::is_zero(q) {
            return Err(Error::Precondition("cannot rescale by zero".into()));
        }
        let arch = self.arch.clone().with_shift(-rational::log_abs(q));
        let mut finite = self.finite.clone();
        for p in rational::prime_support(q) {
            let v = rational::valuation(q, p);
            match finite.iter_mut().find(|w| w.prime() == p) {
                Some(w) => *w = w.shifted(v),
                None => finite.push(NonArchWeight::trivial(p, self.dim())?.shifted(v)),
            }
        }
        Self::new(self.series.clone(), arch, finite)
    }
}

fn integer_vertices(vs: &[Vec<Q>]) -> Result<Vec<Vec<i64>>> {
    vs.iter()
        .map(|v| {
            v.iter()
                .map(|x| {
                    if rational::is_integer(x) {
                        Ok(x.to_integer().try_into().expect("small vertex"))
                    } else {
                        Err(Error::InvalidPolytope(format!(
                            "non-lattice vertex coordinate {x}"
                        )))
                    }
                })
                .collect()
        })
        .collect()
}

/// `F[mL̄](mα)`: archimedean `F′` plus the exact finite part.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FTotal {
    pub level: u32,
    pub leading: Exponent,
    pub arch: f64,
    pub finite: PrimeLogs,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegH0 {
    pub level: u32,
    pub arch: f64,
    pub finite: PrimeLogs,
    pub total: f64,
}

/// One level of the `χ` series.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiRow {
    pub m: u32,
    pub n_m: usize,
    pub deg: f64,
    pub chi_l2: f64,
    /// Window for the sup-norm `χ` implied by the Gromov sandwich.
    pub chi_sup_interval: Option<(f64, f64)>,
    pub minus_sum_f: f64,
}

pub type ChiSeries = Vec<ChiRow>;

/// Evaluates the invariants of one bundle, caching Gram data per level.
pub struct Evaluator {
    bundle: AdelicBundle,
    field: FieldParams,
    quadrature: QuadratureConfig,
    gromov_a: Option<f64>,
    cache: Mutex<BTreeMap<u32, Arc<GramData>>>,
}

impl Evaluator {
    pub fn new(bundle: AdelicBundle) -> Self {
        Self {
            bundle,
            field: FieldParams::rationals(),
            quadrature: QuadratureConfig::default(),
            gromov_a: None,
            cache: Mutex::new(BTreeMap::new()),
        }
    }

    pub fn with_field(mut self, field: FieldParams) -> Self {
        self.field = field;
        self
    }

    pub fn with_quadrature(mut self, cfg: QuadratureConfig) -> Self {
        self.quadrature = cfg;
        self
    }

    /// Gromov constant used for sup-norm windows.
    pub fn with_gromov_constant(mut self, a: f64) -> Self {
        self.gromov_a = Some(a);
        self
    }

    pub fn bundle(&self) -> &AdelicBundle {
        &self.bundle
    }

    pub fn field(&self) -> &FieldParams {
        &self.field
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quadrature
    }

    pub fn gram(&self, m: u32) -> Result<Arc<GramData>> {
        if let Some(g) = self.cache.lock().expect("cache lock").get(&m) {
            return Ok(g.clone());
        }
        let g = Arc::new(metrics_arch::gram_diagonal(
            &self.bundle.arch,
            &self.bundle.series,
            m,
            &self.quadrature,
        )?);
        self.cache.lock().expect("cache lock").insert(m, g.clone());
        Ok(g)
    }

    /// Computes Gram data for several levels in parallel.
    pub fn prefetch(&self, levels: &[u32]) -> Result<()> {
        levels
            .par_iter()
            .map(|&m| self.gram(m).map(|_| ()))
            .collect()
    }

    pub fn level_basis(&self, m: u32) -> Result<Vec<Exponent>> {
        self.bundle.series.level_basis(m)
    }

    /// `F′_∞(m, β/m)` by coset projection.
    pub fn f_arch(&self, m: u32, leading: &Exponent) -> Result<f64> {
        let g = self.gram(m)?;
        Ok(metrics_arch::minimizer_from_gram(&g, &g.matrix(), leading)?.f_prime)
    }

    /// `Σ_p F_p(m, β/m)`.
    pub fn f_finite(&self, m: u32, leading: &Exponent) -> PrimeLogs {
        self.bundle.finite.iter().fold(PrimeLogs::zero(), |acc, w| {
            acc.add(&metrics_nonarch::f_p_value(w, m, leading))
        })
    }

    pub fn f_total(&self, m: u32, leading: &Exponent) -> Result<FTotal> {
        if !self.bundle.series.contains_exponent(m, leading) {
            return Err(Error::NotInGrid {
                level: m,
                detail: format!("{leading} is not in mP"),
            });
        }
        let arch = self.f_arch(m, leading)?;
        let finite = self.f_finite(m, leading);
        let total = arch + finite.to_f64();
        Ok(FTotal {
            level: m,
            leading: leading.clone(),
            arch,
            finite,
            total,
        })
    }

    pub fn f_total_at(&self, m: u32, alpha: &[Q]) -> Result<FTotal> {
        let coset = self.bundle.series.coset(m, alpha)?;
        self.f_total(m, &coset.leading)
    }

    /// Sup-norm interval for the archimedean part, with the finite part added.
    pub fn f_total_sup(&self, m: u32, leading: &Exponent) -> Result<SupInterval> {
        let g = self.gram(m)?;
        let iv = metrics_arch::f_arch_sup(&self.bundle.arch, &g, leading, self.gromov_a)?;
        let fin = self.f_finite(m, leading).to_f64();
        Ok(SupInterval {
            low: iv.low + fin,
            high: iv.high + fin,
            f_prime: iv.f_prime + fin,
        })
    }

    /// Places where `F_v(m, β/m)` may be nonzero: the archimedean place and
    /// the configured primes with `w_m(β) ≠ 0`.
    pub fn support(&self, m: u32, leading: &Exponent) -> Vec<Place> {
        let mut out = vec![Place::Archimedean];
        out.extend(
            self.bundle
                .finite
                .iter()
                .filter(|w| metrics_nonarch::is_exceptional(w, m, leading))
                .map(|w| Place::Prime(w.prime())),
        );
        out
    }

    /// `deg H⁰(mL̄) = −½·log det G + Σ_p Σ_β w_m(β)·log p`.
    pub fn deg_h0(&self, m: u32) -> Result<DegH0> {
        let g = self.gram(m)?;
        let arch = -0.5 * g.matrix().log_det()?;
        let mut finite = PrimeLogs::zero();
        for w in &self.bundle.finite {
            finite = finite.add(&metrics_nonarch::degree_contribution(
                w,
                &self.bundle.series,
                m,
            )?);
        }
        let total = arch + finite.to_f64();
        Ok(DegH0 {
            level: m,
            arch,
            finite,
            total,
        })
    }

    /// Archimedean `deg H⁰` recomputed in a random unit upper-triangular
    /// re-basis of the level-`m` monomials.
    pub fn deg_h0_rebased(&self, m: u32, seed: u64) -> Result<f64> {
        let g = self.gram(m)?;
        let n = g.basis.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut u = DMatrix::<f64>::identity(n, n);
        for i in 0..n {
            for j in i + 1..n {
                u[(i, j)] = rng.gen_range(-1.0..1.0);
            }
        }
        let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            n,
            g.log_diagonal.iter().map(|l| l.exp()),
        ));
        let rebased = &u * diag * u.transpose();
        Ok(-0.5 * GramMatrix::from_dense(&rebased)?.log_det()?)
    }

    pub fn chi_l2(&self, m: u32) -> Result<f64> {
        let n = self.bundle.series.basis_size(m);
        Ok(self.deg_h0(m)?.total + self.field.euler_correction(n))
    }

    pub fn chi_row(&self, m: u32) -> Result<ChiRow> {
        let n_m = self.bundle.series.basis_size(m);
        let deg = self.deg_h0(m)?.total;
        let chi_l2 = deg + self.field.euler_correction(n_m);
        let basis = self.level_basis(m)?;
        let fs: Vec<f64> = basis
            .iter()
            .map(|b| self.f_total(m, b).map(|f| f.total))
            .collect::<Result<_>>()?;
        let minus_sum_f = -crate::fit::pairwise_sum(&fs);
        let chi_sup_interval = self.gromov_a.map(|a| {
            let window = n_m as f64 * (self.bundle.dim() as f64 * (m as f64).ln() + a.ln().abs());
            (chi_l2 - window, chi_l2)
        });
        Ok(ChiRow {
            m,
            n_m,
            deg,
            chi_l2,
            chi_sup_interval,
            minus_sum_f,
        })
    }

    pub fn chi_series(&self, levels: &[u32]) -> Result<ChiSeries> {
        self.prefetch(levels)?;
        levels.iter().map(|&m| self.chi_row(m)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, q_frac};

    fn p1() -> Evaluator {
        Evaluator::new(AdelicBundle::fubini_study(1).unwrap())
    }

    #[test]
    fn ball_volumes() {
        assert!((log_ball_volume(1) - 2f64.ln()).abs() < 1e-14);
        assert!((log_ball_volume(2) - std::f64::consts::PI.ln()).abs() < 1e-14);
        assert!((log_ball_volume(3) - (4.0 * std::f64::consts::PI / 3.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn f_total_examples() {
        let e = p1();
        let f = e.f_total_at(2, &[q_frac(1, 2)]).unwrap();
        assert!((f.total - 0.5 * (1.0f64 / 6.0).ln()).abs() < 1e-12);
        let w = NonArchWeight::new(2, vec![(vec![1], 0)]).unwrap();
        let ew = Evaluator::new(e.bundle().with_weight(w).unwrap());
        let f1 = ew.f_total_at(1, &[q(1)]).unwrap();
        let arch = e.f_total_at(1, &[q(1)]).unwrap().arch;
        assert!((f1.total - (arch - 2f64.ln())).abs() < 1e-12);
        assert_eq!(
            ew.support(1, &Exponent::new(vec![1])),
            vec![Place::Archimedean, Place::Prime(2)]
        );
        assert_eq!(
            ew.support(1, &Exponent::new(vec![0])),
            vec![Place::Archimedean]
        );
        // metric scaling
        let c = 0.3;
        let scaled = Evaluator::new(
            e.bundle()
                .with_arch(e.bundle().arch().clone().with_shift(c / 3.0))
                .unwrap(),
        );
        let a = e.f_total_at(3, &[q_frac(2, 3)]).unwrap().total;
        let b = scaled.f_total_at(3, &[q_frac(2, 3)]).unwrap().total;
        assert!((b - a + c).abs() < 1e-10);
    }

    #[test]
    fn degree_examples() {
        let e = p1();
        assert!((e.deg_h0(1).unwrap().total - 2f64.ln()).abs() < 1e-12);
        let w = NonArchWeight::new(2, vec![(vec![1], 0)]).unwrap();
        let ew = Evaluator::new(e.bundle().with_weight(w).unwrap());
        assert!((ew.deg_h0(1).unwrap().total - 2.0 * 2f64.ln()).abs() < 1e-12);
        let c = 0.25;
        let scaled = Evaluator::new(
            e.bundle()
                .with_arch(e.bundle().arch().clone().with_shift(c / 4.0))
                .unwrap(),
        );
        let n = e.bundle().series().basis_size(4) as f64;
        assert!(
            (scaled.deg_h0(4).unwrap().total - e.deg_h0(4).unwrap().total - n * c).abs() < 1e-9
        );
        for m in [3, 6] {
            assert!((e.deg_h0_rebased(m, 17).unwrap() - e.deg_h0(m).unwrap().arch).abs() < 1e-9);
        }
    }

    #[test]
    fn chi_examples() {
        let e = p1();
        assert!((e.chi_l2(1).unwrap() - (2.0 * std::f64::consts::PI).ln()).abs() < 1e-12);
        let row = e.chi_row(5).unwrap();
        assert!((row.minus_sum_f - row.deg).abs() < 1e-10);
    }

    #[test]
    fn bundle_validation() {
        let s = ToricSeries::projective(1).unwrap();
        let fs = ArchMetric::fubini_study(&s);
        let w = NonArchWeight::trivial(3, 1).unwrap();
        assert!(AdelicBundle::new(s.clone(), fs.clone(), vec![w.clone(), w]).is_err());
        let flat = ArchMetric::custom_radial(1, vec![(0.0, 0.0)], 0.0).unwrap();
        assert!(AdelicBundle::new(s, flat, vec![]).is_err());
    }

    #[test]
    fn rescaling_moves_places() {
        let b = AdelicBundle::fubini_study(1).unwrap();
        let r = b.rescale_base_section(&q_frac(4, 3)).unwrap();
        assert_eq!(r.finite().len(), 2);
        assert_eq!(r.finite()[0].level_weight(1, &Exponent::new(vec![0])), 2);
        assert_eq!(r.finite()[1].level_weight(1, &Exponent::new(vec![0])), -1);
        assert!((r.arch().shift() + (4.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn multiples_and_sums() {
        let b = AdelicBundle::fubini_study(1).unwrap();
        let two = b.multiple(2).unwrap();
        let sum = b.tensor(&b).unwrap();
        assert_eq!(two.series().vertices(), sum.series().vertices());
        let (e2, es) = (Evaluator::new(two), Evaluator::new(sum));
        let e1 = Evaluator::new(b);
        for k in 0..=6 {
            let x = Exponent::new(vec![k]);
            assert!(
                (e2.f_total(3, &x).unwrap().total - es.f_total(3, &x).unwrap().total).abs() < 1e-12
            );
        }
        // F[m·2L] at level m equals F[L] at level 2m
        assert!(
            (e2.f_total(3, &Exponent::new(vec![2])).unwrap().total
                - e1.f_total(6, &Exponent::new(vec![2])).unwrap().total)
                .abs()
                < 1e-10
        );
    }
}
