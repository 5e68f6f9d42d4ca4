//! The archimedean place: torus-invariant metrics, `L²` Gram data, sup norms,
//! orthogonal minimizers and the discrete Chebyshev transforms `F_∞`, `F′_∞`.
//!
//! A metric is a weight `ψ(r_1, …, r_d)` of the coordinate moduli; a level-`m`
//! section has pointwise norm `|s(t)|·e^{−m(ψ(|t|)+shift)}`. All integrals are
//! taken in log-radius coordinates `x_i = ln r_i` after the phase integral.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear_series::{Exponent, Section, ToricSeries};
use crate::quadrature::{self, QuadratureConfig};
use crate::rational::{self, Q};

/// One summand of the weight `ψ`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightTerm {
    /// `½ log Σ_v r^{2v}` over the vertices `v` of a polytope. For the
    /// standard simplex this is the Fubini–Study weight `½ log(1 + Σ r_i²)`.
    ToricFubiniStudy { vertices: Vec<Vec<f64>> },
    /// A function of `ρ = |t|`, linear between knots `(ρ, ψ)` and equal to
    /// `ψ_last + tail_slope·log(ρ/ρ_last)` beyond the last knot.
    Radial {
        knots: Vec<(f64, f64)>,
        tail_slope: f64,
    },
}

impl WeightTerm {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            WeightTerm::ToricFubiniStudy { vertices } => {
                let exps: Vec<f64> = vertices
                    .iter()
                    .map(|v| 2.0 * v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                    .collect();
                0.5 * log_sum_exp(&exps)
            }
            WeightTerm::Radial { knots, tail_slope } => {
                let two_x: Vec<f64> = x.iter().map(|xi| 2.0 * xi).collect();
                let log_rho = 0.5 * log_sum_exp(&two_x);
                let (rho_last, psi_last) = *knots.last().expect("validated nonempty");
                if log_rho >= rho_last.ln() {
                    return psi_last + tail_slope * (log_rho - rho_last.ln());
                }
                let rho = log_rho.exp();
                let i = knots.partition_point(|&(r, _)| r <= rho);
                if i == 0 {
                    return knots[0].1;
                }
                let (r0, p0) = knots[i - 1];
                let (r1, p1) = knots[i];
                p0 + (p1 - p0) * (rho - r0) / (r1 - r0)
            }
        }
    }
}

/// Torus-invariant probability measures on the compactified torus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureSpec {
    /// `(d!/π^d)(1 + Σ r_i²)^{−(d+1)}` times Lebesgue measure on `ℂ^d`.
    FubiniStudy,
    /// `Π_i (1/π)(1 + r_i²)^{−2}`.
    ProductFubiniStudy,
}

impl MeasureSpec {
    /// Log density with respect to Lebesgue measure at `r = e^x`.
    fn log_density(&self, x: &[f64]) -> f64 {
        let d = x.len();
        match self {
            MeasureSpec::FubiniStudy => {
                let mut e: Vec<f64> = x.iter().map(|xi| 2.0 * xi).collect();
                e.push(0.0);
                let log_fact: f64 = (1..=d).map(|i| (i as f64).ln()).sum();
                log_fact - d as f64 * PI.ln() - (d + 1) as f64 * log_sum_exp(&e)
            }
            MeasureSpec::ProductFubiniStudy => {
                x.iter().map(|xi| -PI.ln() - 2.0 * softplus(2.0 * xi)).sum()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArchMetric {
    dim: usize,
    terms: Vec<WeightTerm>,
    shift: f64,
    measure: MeasureSpec,
}

impl ArchMetric {
    /// The toric Fubini–Study metric of the series polytope; on `ℙ^d` this is
    /// the Fubini–Study metric with the Fubini–Study measure.
    pub fn fubini_study(series: &ToricSeries) -> Self {
        let vertices = series
            .vertices()
            .iter()
            .map(|v| v.iter().map(|&a| a as f64).collect())
            .collect();
        Self {
            dim: series.dim(),
            terms: vec![WeightTerm::ToricFubiniStudy { vertices }],
            shift: 0.0,
            measure: MeasureSpec::FubiniStudy,
        }
    }

    pub fn custom_radial(dim: usize, knots: Vec<(f64, f64)>, tail_slope: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Precondition(
                "metric dimension must be positive".into(),
            ));
        }
        if knots.is_empty() {
            return Err(Error::Precondition(
                "radial weight needs at least one knot".into(),
            ));
        }
        if knots[0].0 != 0.0 {
            return Err(Error::Precondition(
                "first radial knot must be at radius 0".into(),
            ));
        }
        if knots.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::Precondition(
                "radial knots must be strictly increasing".into(),
            ));
        }
        if knots.iter().any(|(r, p)| !r.is_finite() || !p.is_finite()) || !tail_slope.is_finite() {
            return Err(Error::Precondition("radial knots must be finite".into()));
        }
        let knots = if knots.len() == 1 {
            vec![knots[0], (1.0, knots[0].1)]
        } else {
            knots
        };
        Ok(Self {
            dim,
            terms: vec![WeightTerm::Radial { knots, tail_slope }],
            shift: 0.0,
            measure: MeasureSpec::FubiniStudy,
        })
    }

    pub fn with_measure(mut self, measure: MeasureSpec) -> Self {
        self.measure = measure;
        self
    }

    /// Replaces `φ` by `φ + c`: every level-`m` norm is multiplied by `e^{−mc}`.
    pub fn with_shift(mut self, c: f64) -> Self {
        self.shift += c;
        self
    }

    /// Metric on `L ⊗ M`: weights add, the measure of `self` is kept.
    pub fn tensor(&self, other: &ArchMetric) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(Self {
            dim: self.dim,
            terms,
            shift: self.shift + other.shift,
            measure: self.measure,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    pub fn terms(&self) -> &[WeightTerm] {
        &self.terms
    }

    pub fn measure(&self) -> MeasureSpec {
        self.measure
    }

    /// `φ` at `r = e^x`, including the shift.
    pub fn psi(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum::<f64>() + self.shift
    }

    /// Numeric check that `ψ` dominates the support function of the polytope,
    /// i.e. that `|t^β|·e^{−mψ}` stays bounded for `β ∈ mP`. Returns the
    /// minimum of `ψ − h_P` found on the grid.
    pub fn growth_check(&self, series: &ToricSeries) -> Result<f64> {
        if series.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: series.dim(),
            });
        }
        let verts: Vec<Vec<f64>> = series
            .vertices()
            .iter()
            .map(|v| v.iter().map(|&a| a as f64).collect())
            .collect();
        let gap = |x: &[f64]| {
            let h = verts
                .iter()
                .map(|v| v.iter().zip(x).map(|(a, b)| a * b).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            self.psi(x) - h
        };
        let shell_min = |radius: f64| {
            let n = if self.dim == 1 { 64 } else { 16 };
            let mut lo = vec![-n; self.dim];
            let hi = vec![n; self.dim];
            let mut best = f64::INFINITY;
            loop {
                let x: Vec<f64> = lo.iter().map(|&i| radius * i as f64 / n as f64).collect();
                best = best.min(gap(&x));
                if !crate::convex_geom::advance(&mut lo, &vec![-n; self.dim], &hi) {
                    break;
                }
            }
            best
        };
        let inner = shell_min(20.0);
        let outer = shell_min(40.0);
        if !outer.is_finite() || outer < inner - 1e-6 * 20.0 - 1e-9 {
            return Err(Error::Precondition(format!(
                "weight does not dominate the support function: inf over |x|<=20 is {inner:.6}, over |x|<=40 is {outer:.6}"
            )));
        }
        Ok(outer)
    }

    /// Log of the radial integrand for `⟨t^β, t^γ⟩` in log-radius coordinates,
    /// with `pair = β + γ`.
    fn log_integrand(&self, pair: &[f64], m: u32, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        let mono: f64 = pair.iter().zip(x).map(|(p, xi)| (p + 2.0) * xi).sum();
        mono - 2.0 * m as f64 * self.psi(x) + self.measure.log_density(x) + d * (2.0 * PI).ln()
    }

    /// `log ⟨t^β, t^γ⟩` ignoring the phase factor, i.e. the radial integral
    /// with exponent sum `β + γ`.
    fn log_radial(
        &self,
        pair: &[f64],
        m: u32,
        cfg: &QuadratureConfig,
    ) -> Result<quadrature::LogIntegral> {
        let h = |x: &[f64]| self.log_integrand(pair, m, x);
        quadrature::log_integrate(&h, self.dim, cfg)
    }

    /// Log of the pointwise norm of the monomial `t^β` at level `m`.
    fn log_monomial_norm(&self, beta: &[f64], m: u32, x: &[f64]) -> f64 {
        beta.iter().zip(x).map(|(b, xi)| b * xi).sum::<f64>() - m as f64 * self.psi(x)
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Diagonal Gram data of the level-`m` monomial basis.
#[derive(Debug, Clone, Serialize)]
pub struct GramData {
    pub level: u32,
    /// Basis exponents in lex order.
    pub basis: Vec<Exponent>,
    /// `log ⟨t^β, t^β⟩` in basis order.
    pub log_diagonal: Vec<f64>,
    /// Largest `|⟨t^β, t^γ⟩|`, `β ≠ γ`, on the audited pairs.
    pub offdiag_max: f64,
    /// Largest relative quadrature error estimate.
    pub max_rel_error: f64,
}

impl GramData {
    pub fn diagonal(&self) -> BTreeMap<Exponent, f64> {
        self.basis
            .iter()
            .cloned()
            .zip(self.log_diagonal.iter().map(|l| l.exp()))
            .collect()
    }

    pub fn index(&self, e: &Exponent) -> Option<usize> {
        self.basis.binary_search(e).ok()
    }

    pub fn log_entry(&self, e: &Exponent) -> Option<f64> {
        self.index(e).map(|i| self.log_diagonal[i])
    }

    pub fn matrix(&self) -> GramMatrix {
        GramMatrix::Diagonal {
            log_diag: self.log_diagonal.clone(),
        }
    }
}

/// `⟨t^β, t^β⟩` for the level-`m` basis by adaptive radial quadrature, with an
/// off-diagonal audit on a deterministic sample of pairs.
pub fn gram_diagonal(
    metric: &ArchMetric,
    series: &ToricSeries,
    m: u32,
    cfg: &QuadratureConfig,
) -> Result<GramData> {
    if metric.dim != series.dim() {
        return Err(Error::DimensionMismatch {
            expected: series.dim(),
            found: metric.dim,
        });
    }
    let basis = series.level_basis(m)?;
    let entries: Vec<quadrature::LogIntegral> = basis
        .par_iter()
        .map(|b| {
            let pair: Vec<f64> = b.entries().iter().map(|&a| 2.0 * a as f64).collect();
            metric.log_radial(&pair, m, cfg)
        })
        .collect::<Result<_>>()?;
    let pairs = audit_pairs(basis.len());
    let offdiag: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| offdiag_entry(metric, &basis[i], &basis[j], m, cfg))
        .collect::<Result<_>>()?;
    Ok(GramData {
        level: m,
        log_diagonal: entries.iter().map(|e| e.log_value).collect(),
        max_rel_error: entries.iter().map(|e| e.rel_error).fold(0.0, f64::max),
        offdiag_max: offdiag.into_iter().fold(0.0, f64::max),
        basis,
    })
}

fn audit_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (1..n).take(4).map(|i| (i - 1, i)).collect();
    if n > 2 {
        pairs.push((0, n - 1));
        pairs.push((n / 3, 2 * n / 3 + 1).min((n / 3, n - 1)));
    }
    pairs.retain(|(i, j)| i != j);
    pairs
}

/// `|⟨t^β, t^γ⟩|`: radial quadrature times the phase integral evaluated by
/// an equispaced trapezoid rule fine enough for the frequencies involved.
pub fn offdiag_entry(
    metric: &ArchMetric,
    beta: &Exponent,
    gamma: &Exponent,
    m: u32,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let pair: Vec<f64> = beta
        .entries()
        .iter()
        .zip(gamma.entries())
        .map(|(&a, &b)| (a + b) as f64)
        .collect();
    let radial = metric.log_radial(&pair, m, cfg)?.log_value.exp();
    let mut phase = 1.0;
    for (&a, &b) in beta.entries().iter().zip(gamma.entries()) {
        let k = a as f64 - b as f64;
        let n = 2 * (a.max(b) as usize) + 3;
        let (mut re, mut im) = (0.0, 0.0);
        for j in 0..n {
            let th = 2.0 * PI * j as f64 / n as f64;
            re += (k * th).cos();
            im += (k * th).sin();
        }
        phase *= (re * re + im * im).sqrt() / n as f64;
    }
    Ok(radial * phase)
}

/// The full level-`m` Gram matrix, off-diagonal entries from the phase audit.
/// Intended for small levels.
pub fn gram_full(
    metric: &ArchMetric,
    series: &ToricSeries,
    m: u32,
    cfg: &QuadratureConfig,
) -> Result<DMatrix<f64>> {
    let g = gram_diagonal(metric, series, m, cfg)?;
    let n = g.basis.len();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        out[(i, i)] = g.log_diagonal[i].exp();
        for j in i + 1..n {
            let v = offdiag_entry(metric, &g.basis[i], &g.basis[j], m, cfg)?;
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    Ok(out)
}

/// A Gram matrix in lex order, stored as `log` of its diagonal plus the
/// correlation matrix `Δ^{−1/2} G Δ^{−1/2}` when not diagonal.
#[derive(Debug, Clone)]
pub enum GramMatrix {
    Diagonal {
        log_diag: Vec<f64>,
    },
    Dense {
        log_diag: Vec<f64>,
        correlation: DMatrix<f64>,
    },
}

impl GramMatrix {
    pub fn from_dense(g: &DMatrix<f64>) -> Result<Self> {
        if !g.is_square() {
            return Err(Error::DimensionMismatch {
                expected: g.nrows(),
                found: g.ncols(),
            });
        }
        let n = g.nrows();
        if let Some(i) = (0..n).find(|&i| !(g[(i, i)] > 0.0)) {
            return Err(Error::SingularGram { pivot: i });
        }
        let s: Vec<f64> = (0..n).map(|i| g[(i, i)].sqrt()).collect();
        let correlation = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else {
                g[(i, j)] / (s[i] * s[j])
            }
        });
        Ok(GramMatrix::Dense {
            log_diag: (0..n).map(|i| g[(i, i)].ln()).collect(),
            correlation,
        })
    }

    pub fn len(&self) -> usize {
        self.log_diag().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn log_diag(&self) -> &[f64] {
        match self {
            GramMatrix::Diagonal { log_diag } | GramMatrix::Dense { log_diag, .. } => log_diag,
        }
    }

    fn corr(&self, i: usize, j: usize) -> f64 {
        match self {
            GramMatrix::Diagonal { .. } => f64::from(u8::from(i == j)),
            GramMatrix::Dense { correlation, .. } => correlation[(i, j)],
        }
    }

    fn corr_support(&self, i: usize) -> Box<dyn Iterator<Item = usize> + '_> {
        match self {
            GramMatrix::Diagonal { .. } => Box::new(std::iter::once(i)),
            GramMatrix::Dense { correlation, .. } => {
                Box::new((0..correlation.nrows()).filter(move |&j| correlation[(i, j)] != 0.0))
            }
        }
    }

    /// Log-determinant via forward Cholesky.
    pub fn log_det(&self) -> Result<f64> {
        let base: f64 = self.log_diag().iter().sum();
        match self {
            GramMatrix::Diagonal { .. } => Ok(base),
            GramMatrix::Dense { correlation, .. } => {
                let chol = correlation
                    .clone()
                    .cholesky()
                    .ok_or(Error::SingularGram { pivot: 0 })?;
                let l = chol.l();
                Ok(base + 2.0 * (0..l.nrows()).map(|i| l[(i, i)].ln()).sum::<f64>())
            }
        }
    }
}

/// Minimal-norm element of the coset of basis index `i`: `t^{b_i}` minus its
/// projection onto the span of the lex-larger basis elements.
#[derive(Debug, Clone, Serialize)]
pub struct CosetMinimum {
    pub index: usize,
    /// `(j, c_j)` with `e = b_i + Σ c_j b_j`, `j > i`, unnormalized basis.
    pub coefficients: Vec<(usize, f64)>,
    /// `log ‖e‖²`.
    pub log_norm2: f64,
}

/// Solves `G_JJ c = −G_Ji` for `J = {j > i}`.
pub fn project_coset(g: &GramMatrix, i: usize) -> Result<CosetMinimum> {
    let n = g.len();
    if i >= n {
        return Err(Error::NotInGrid {
            level: 0,
            detail: format!("basis index {i} out of range {n}"),
        });
    }
    let free: Vec<usize> = (i + 1..n).collect();
    let coupled: Vec<usize> = free
        .iter()
        .copied()
        .filter(|&j| g.corr(i, j) != 0.0)
        .collect();
    let ld = g.log_diag();
    if coupled.is_empty() {
        return Ok(CosetMinimum {
            index: i,
            coefficients: Vec::new(),
            log_norm2: ld[i],
        });
    }
    let k = free.len();
    let a = DMatrix::from_fn(k, k, |r, c| g.corr(free[r], free[c]));
    let rhs = nalgebra::DVector::from_fn(k, |r, _| -g.corr(free[r], i));
    let chol = a.cholesky().ok_or(Error::SingularGram { pivot: i + 1 })?;
    let c = chol.solve(&rhs);
    // ‖e‖² / G_ii = 1 + Σ c_r corr(i, r)
    let rel: f64 = 1.0
        + free
            .iter()
            .enumerate()
            .map(|(r, &j)| c[r] * g.corr(i, j))
            .sum::<f64>();
    if !(rel > 0.0) {
        return Err(Error::SingularGram { pivot: i });
    }
    let coefficients = free
        .iter()
        .enumerate()
        .map(|(r, &j)| (j, c[r] * (0.5 * (ld[i] - ld[j])).exp()))
        .collect();
    Ok(CosetMinimum {
        index: i,
        coefficients,
        log_norm2: ld[i] + rel.ln(),
    })
}

/// Reverse-order Gram–Schmidt: the `i`-th output is the minimizer of the coset
/// of `b_i` for every `i` at once. `log_norm2[i]` are the pivots of the
/// `L D Lᵀ` factorization taken from the lex-largest element down.
pub fn reverse_orthogonalize(g: &GramMatrix) -> Result<Vec<CosetMinimum>> {
    let n = g.len();
    let ld = g.log_diag();
    // e_i = Σ_{j≥i} t[i][j] b'_j in the normalized basis b'_j = b_j/√G_jj
    let mut t: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    let mut d = vec![0.0; n];
    for i in (0..n).rev() {
        let mut row = BTreeMap::from([(i, 1.0)]);
        for j in i + 1..n {
            // ⟨b'_i, e_j⟩ = Σ_k t[j][k] corr(i, k)
            let ip: f64 = g
                .corr_support(i)
                .filter_map(|k| t[j].get(&k).map(|tk| tk * g.corr(i, k)))
                .sum();
            if ip != 0.0 {
                let c = ip / d[j];
                for (&k, &tk) in &t[j] {
                    *row.entry(k).or_insert(0.0) -= c * tk;
                }
            }
        }
        let norm: f64 = row
            .iter()
            .flat_map(|(&a, &ta)| row.iter().map(move |(&b, &tb)| ta * tb * g.corr(a, b)))
            .sum();
        if !(norm > 0.0) {
            return Err(Error::SingularGram { pivot: i });
        }
        d[i] = norm;
        t[i] = row;
    }
    Ok((0..n)
        .map(|i| CosetMinimum {
            index: i,
            coefficients: t[i]
                .iter()
                .filter(|(&j, &c)| j != i && c != 0.0)
                .map(|(&j, &c)| (j, c * (0.5 * (ld[i] - ld[j])).exp()))
                .collect(),
            log_norm2: ld[i] + d[i].ln(),
        })
        .collect())
}

/// The coset minimizer `e_{∞,mα}` and `F′_∞(m, α) = log ‖e‖_{L²}`.
#[derive(Debug, Clone, Serialize)]
pub struct Minimizer {
    pub level: u32,
    pub leading: Exponent,
    pub coefficients: Vec<(Exponent, f64)>,
    pub f_prime: f64,
}

impl Minimizer {
    /// The minimizer as an exact section (float coefficients converted
    /// exactly).
    pub fn section(&self) -> Section {
        let dim = self.leading.dim();
        let mut terms = vec![(self.leading.clone(), rational::q(1))];
        for (e, c) in &self.coefficients {
            if let Some(x) = Q::from_float(*c) {
                terms.push((e.clone(), x));
            }
        }
        Section::new(self.level, dim, terms).expect("dimensions agree")
    }
}

pub fn minimizer_from_gram(
    gram: &GramData,
    matrix: &GramMatrix,
    leading: &Exponent,
) -> Result<Minimizer> {
    let i = gram.index(leading).ok_or_else(|| Error::NotInGrid {
        level: gram.level,
        detail: format!("{leading} is not a basis exponent"),
    })?;
    let cm = project_coset(matrix, i)?;
    Ok(Minimizer {
        level: gram.level,
        leading: leading.clone(),
        coefficients: cm
            .coefficients
            .iter()
            .map(|&(j, c)| (gram.basis[j].clone(), c))
            .collect(),
        f_prime: 0.5 * cm.log_norm2,
    })
}

/// `e_{∞,mα}` and `F′_∞(m, α)` for `α ∈ Λ_m`.
pub fn minimizer(
    metric: &ArchMetric,
    series: &ToricSeries,
    m: u32,
    alpha: &[Q],
    cfg: &QuadratureConfig,
) -> Result<Minimizer> {
    let coset = series.coset(m, alpha)?;
    let gram = gram_diagonal(metric, series, m, cfg)?;
    minimizer_from_gram(&gram, &gram.matrix(), &coset.leading)
}

/// `log ‖s‖_{L²}` from diagonal Gram data.
pub fn log_l2_norm(gram: &GramData, s: &Section) -> Result<f64> {
    if s.level() != gram.level {
        return Err(Error::NotInGrid {
            level: s.level(),
            detail: format!("gram data is for level {}", gram.level),
        });
    }
    let mut logs = Vec::with_capacity(s.len());
    for (e, a) in s.terms() {
        let lg = gram.log_entry(e).ok_or_else(|| Error::NotInGrid {
            level: gram.level,
            detail: format!("{e} is not a basis exponent"),
        })?;
        logs.push(2.0 * rational::log_abs(a) + lg);
    }
    Ok(0.5 * log_sum_exp(&logs))
}

/// `‖s‖_{L²} = sqrt(Σ a_β² ⟨t^β,t^β⟩)`.
pub fn l2_norm(gram: &GramData, s: &Section) -> Result<f64> {
    if s.is_zero() {
        return Ok(0.0);
    }
    Ok(log_l2_norm(gram, s)?.exp())
}

/// Sup-norm estimate: `log_value` is attained (a lower bound for the true
/// supremum); `log_gap` is a heuristic bound on the shortfall.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupEstimate {
    pub log_value: f64,
    pub log_gap: f64,
}

impl SupEstimate {
    pub fn value(&self) -> f64 {
        self.log_value.exp()
    }

    pub fn log_upper(&self) -> f64 {
        self.log_value + self.log_gap
    }
}

const SUP_RADIUS: f64 = 40.0;

fn log_abs_section(terms: &[(Vec<f64>, f64, f64)], x: &[f64], th: &[f64]) -> f64 {
    // terms: (β, log|a|, sign)
    let logs: Vec<f64> = terms
        .iter()
        .map(|(b, la, _)| la + b.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
        .collect();
    let mx = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut re, mut im) = (0.0, 0.0);
    for ((b, _, sg), l) in terms.iter().zip(&logs) {
        let ph: f64 = b.iter().zip(th).map(|(p, q)| p * q).sum();
        let w = sg * (l - mx).exp();
        re += w * ph.cos();
        im += w * ph.sin();
    }
    mx + 0.5 * (re * re + im * im).ln()
}

/// Estimates `sup_t |s(t)|·e^{−m(ψ+shift)}` on a radius × phase grid followed
/// by local refinement. Monomials reduce to a radial problem.
pub fn sup_norm(metric: &ArchMetric, s: &Section) -> Result<SupEstimate> {
    if s.is_zero() {
        return Err(Error::ZeroSection);
    }
    let d = metric.dim;
    if s.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: s.dim(),
        });
    }
    let m = s.level();
    let terms: Vec<(Vec<f64>, f64, f64)> = s
        .terms()
        .map(|(e, a)| {
            let b: Vec<f64> = e.entries().iter().map(|&v| v as f64).collect();
            let sg = if *a < Q::zero() { -1.0 } else { 1.0 };
            (b, rational::log_abs(a), sg)
        })
        .collect();
    if terms.len() == 1 {
        let (b, la, _) = &terms[0];
        let f = |x: &[f64]| la + metric.log_monomial_norm(b, m, x);
        let (val, _) = maximize(&f, d, 0, SUP_RADIUS);
        return Ok(SupEstimate {
            log_value: val,
            log_gap: 1e-8,
        });
    }
    let max_deg: Vec<u32> = (0..d)
        .map(|i| s.terms().map(|(e, _)| e.entries()[i]).max().unwrap_or(0))
        .collect();
    let n_phase: Vec<usize> = max_deg
        .iter()
        .map(|&k| {
            if d == 1 {
                (4 * k as usize + 8).min(64)
            } else {
                (2 * k as usize + 4).min(12)
            }
        })
        .collect();
    let f = |z: &[f64]| {
        let (x, th) = z.split_at(d);
        log_abs_section(&terms, x, th) - m as f64 * metric.psi(x)
    };
    let (val, gap) = maximize_with_phase(&f, d, &n_phase);
    Ok(SupEstimate {
        log_value: val,
        log_gap: gap,
    })
}

/// Grid search over `x ∈ [−R, R]^d` followed by golden-section (d = 1) or
/// Nelder–Mead refinement. `extra` phase coordinates are held at zero.
fn maximize(f: &impl Fn(&[f64]) -> f64, d: usize, extra: usize, radius: f64) -> (f64, Vec<f64>) {
    let n: i64 = if d == 1 { 320 } else { 80 };
    let step = 2.0 * radius / n as f64;
    let lo = vec![0i64; d];
    let hi = vec![n; d];
    let mut cur = lo.clone();
    let mut best = (f64::NEG_INFINITY, vec![0.0; d + extra]);
    loop {
        let mut z: Vec<f64> = cur.iter().map(|&i| -radius + i as f64 * step).collect();
        z.resize(d + extra, 0.0);
        let v = f(&z);
        if v > best.0 {
            best = (v, z);
        }
        if !crate::convex_geom::advance(&mut cur, &lo, &hi) {
            break;
        }
    }
    let clamp = |z: &[f64]| -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, &v)| if i < d { v.clamp(-radius, radius) } else { v })
            .collect()
    };
    if d == 1 && extra == 0 {
        let g = |x: f64| f(&[x]);
        let a = (best.1[0] - step).max(-radius);
        let b = (best.1[0] + step).min(radius);
        let (x, v) = golden(&g, a, b);
        if v > best.0 {
            best = (v, vec![x]);
        }
        return best;
    }
    let refined = nelder_mead(&|z: &[f64]| f(&clamp(z)), &best.1, step, 2000);
    if refined.0 > best.0 {
        (refined.0, clamp(&refined.1))
    } else {
        best
    }
}

fn maximize_with_phase(f: &impl Fn(&[f64]) -> f64, d: usize, n_phase: &[usize]) -> (f64, f64) {
    let n: i64 = if d == 1 { 160 } else { 40 };
    let radius = if d == 1 { SUP_RADIUS } else { 20.0 };
    let step = 2.0 * radius / n as f64;
    let mut lo = vec![0i64; 2 * d];
    let mut hi = vec![n; d];
    hi.extend(n_phase.iter().map(|&k| k as i64 - 1));
    let start = lo.clone();
    let mut scored: Vec<(f64, Vec<f64>)> = Vec::new();
    loop {
        let z: Vec<f64> = lo
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                if i < d {
                    -radius + k as f64 * step
                } else {
                    2.0 * PI * k as f64 / n_phase[i - d] as f64
                }
            })
            .collect();
        scored.push((f(&z), z));
        if !crate::convex_geom::advance(&mut lo, &start, &hi) {
            break;
        }
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0));
    let grid_best = scored[0].0;
    let clamp = |z: &[f64]| -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(i, &v)| if i < d { v.clamp(-radius, radius) } else { v })
            .collect()
    };
    let mut best = grid_best;
    for (_, z) in scored.iter().take(4) {
        let (v, _) = nelder_mead(&|w: &[f64]| f(&clamp(w)), z, step.min(0.5), 3000);
        best = best.max(v);
    }
    // The refinement gain bounds the grid error; twice it is used as the gap.
    (best, (2.0 * (best - grid_best)).max(1e-8))
}

fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-10 {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Nelder–Mead maximization.
fn nelder_mead(f: &impl Fn(&[f64]) -> f64, x0: &[f64], step: f64, iters: usize) -> (f64, Vec<f64>) {
    let n = x0.len();
    let mut simplex: Vec<(f64, Vec<f64>)> = vec![(f(x0), x0.to_vec())];
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += step;
        simplex.push((f(&x), x));
    }
    for _ in 0..iters {
        simplex.sort_by(|a, b| b.0.total_cmp(&a.0));
        if (simplex[0].0 - simplex[n].0).abs() < 1e-13 {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(_, x)| x[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].1)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = toward(1.0);
        let fr = f(&xr);
        if fr > simplex[0].0 {
            let xe = toward(2.0);
            let fe = f(&xe);
            simplex[n] = if fe > fr { (fe, xe) } else { (fr, xr) };
        } else if fr > simplex[n - 1].0 {
            simplex[n] = (fr, xr);
        } else {
            let xc = toward(-0.5);
            let fc = f(&xc);
            if fc > simplex[n].0 {
                simplex[n] = (fc, xc);
            } else {
                let best = simplex[0].1.clone();
                for v in simplex.iter_mut().skip(1) {
                    v.1 = best
                        .iter()
                        .zip(&v.1)
                        .map(|(b, x)| b + 0.5 * (x - b))
                        .collect();
                    v.0 = f(&v.1);
                }
            }
        }
    }
    simplex.sort_by(|a, b| b.0.total_cmp(&a.0));
    simplex.swap_remove(0)
}

/// Interval for `F_∞(m, α)` (sup version).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupInterval {
    pub low: f64,
    pub high: f64,
    pub f_prime: f64,
}

/// `F′ ≤ F_∞ ≤ min(log‖e‖_sup + gap, F′ + d·log m + |log a|)`, the second
/// upper bound used only when a Gromov constant is supplied.
pub fn f_arch_sup(
    metric: &ArchMetric,
    gram: &GramData,
    leading: &Exponent,
    gromov_a: Option<f64>,
) -> Result<SupInterval> {
    let e = minimizer_from_gram(gram, &gram.matrix(), leading)?;
    let sup = sup_norm(metric, &e.section())?;
    let mut high = sup.log_upper();
    if let Some(a) = gromov_a {
        high = high.min(e.f_prime + metric.dim as f64 * (gram.level as f64).ln() + a.ln().abs());
    }
    Ok(SupInterval {
        low: e.f_prime,
        high: high.max(e.f_prime),
        f_prime: e.f_prime,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GromovSample {
    pub level: u32,
    pub terms: usize,
    pub log_l2: f64,
    pub log_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GromovReport {
    pub samples: usize,
    /// Samples with `‖s‖_{L²} > ‖s‖_sup`.
    pub violations: usize,
    /// Largest `a` with `a·m^{−d}·‖s‖_sup ≤ ‖s‖_{L²}` on the sample.
    pub fitted_a: f64,
    /// Per level: smallest `‖s‖_{L²}/‖s‖_sup` observed.
    pub per_level: Vec<(u32, f64)>,
    #[serde(skip)]
    pub records: Vec<GromovSample>,
}

/// Random sections with integer coefficients in `[−9, 9]` at levels `1..=m`;
/// gram data is taken from `gram(level)`.
pub fn gromov_check(
    metric: &ArchMetric,
    series: &ToricSeries,
    m: u32,
    samples: usize,
    seed: u64,
    gram: &(dyn Fn(u32) -> Result<GramData> + Sync),
) -> Result<GromovReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut specs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let level = rng.gen_range(1..=m);
        let basis = series.level_basis(level)?;
        let density: f64 = rng.gen_range(0.2..=1.0);
        let mut terms: Vec<(Exponent, Q)> = Vec::new();
        for e in &basis {
            if rng.gen_bool(density) {
                terms.push((e.clone(), rational::q(rng.gen_range(-9..=9))));
            }
        }
        if terms.iter().all(|(_, a)| a.is_zero()) {
            let k = rng.gen_range(0..basis.len());
            terms = vec![(basis[k].clone(), rational::q(rng.gen_range(1..=9)))];
        }
        specs.push(Section::new(level, series.dim(), terms)?);
    }
    let grams: BTreeMap<u32, GramData> = (1..=m)
        .into_par_iter()
        .map(|l| Ok((l, gram(l)?)))
        .collect::<Result<_>>()?;
    let records: Vec<GromovSample> = specs
        .par_iter()
        .map(|s| {
            let g = &grams[&s.level()];
            Ok(GromovSample {
                level: s.level(),
                terms: s.len(),
                log_l2: log_l2_norm(g, s)?,
                log_sup: sup_norm(metric, s)?.log_value,
            })
        })
        .collect::<Result<_>>()?;
    let d = series.dim() as f64;
    let violations = records
        .iter()
        .filter(|r| r.log_l2 > r.log_sup + 1e-12)
        .count();
    let fitted_a = records
        .iter()
        .map(|r| (r.log_l2 - r.log_sup + d * (r.level as f64).ln()).exp())
        .fold(f64::INFINITY, f64::min);
    let mut per_level: BTreeMap<u32, f64> = BTreeMap::new();
    for r in &records {
        let ratio = (r.log_l2 - r.log_sup).exp();
        let e = per_level.entry(r.level).or_insert(f64::INFINITY);
        *e = e.min(ratio);
    }
    Ok(GromovReport {
        samples,
        violations,
        fitted_a,
        per_level: per_level.into_iter().collect(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, q_frac};

    fn p1() -> (ToricSeries, ArchMetric) {
        let s = ToricSeries::projective(1).unwrap();
        let m = ArchMetric::fubini_study(&s);
        (s, m)
    }

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    /// Independent oracle: composite trapezoid rule in `u = ln r` on a wide
    /// window, with the Fubini–Study integrand written out by hand.
    fn trapezoid_fs_p1(k: u32, m: u32) -> f64 {
        let (a, b, n) = (-40.0f64, 40.0f64, 400_000);
        let h = (b - a) / n as f64;
        let f = |u: f64| {
            let r2 = (2.0 * u).exp();
            (2.0 * k as f64 * u).exp() * (1.0 + r2).powf(-(m as f64) - 2.0) * r2 * 2.0
        };
        let mut s = 0.5 * (f(a) + f(b));
        for i in 1..n {
            s += f(a + i as f64 * h);
        }
        s * h
    }

    fn binom(n: u32, k: u32) -> f64 {
        (0..k).map(|i| (n - i) as f64 / (i + 1) as f64).product()
    }

    #[test]
    fn closed_form_confirmed_by_trapezoid() {
        for (m, k) in [(1, 0), (1, 1), (2, 1), (5, 2), (9, 0), (9, 7)] {
            let t = trapezoid_fs_p1(k, m);
            let closed = 1.0 / ((m + 1) as f64 * binom(m, k));
            assert!(
                (t / closed - 1.0).abs() < 1e-9,
                "m={m} k={k}: {t} vs {closed}"
            );
        }
    }

    #[test]
    fn gram_matches_closed_form() {
        let (s, metric) = p1();
        assert!(
            (gram_diagonal(&metric, &s, 2, &cfg()).unwrap().log_diagonal[1].exp() - 1.0 / 6.0)
                .abs()
                < 1e-12
        );
        let g1 = gram_diagonal(&metric, &s, 1, &cfg()).unwrap();
        assert!(g1
            .log_diagonal
            .iter()
            .all(|l| (l.exp() - 0.5).abs() < 1e-12));
        for m in [7u32, 40, 200] {
            let g = gram_diagonal(&metric, &s, m, &cfg()).unwrap();
            for (k, l) in g.log_diagonal.iter().enumerate() {
                let closed = -((m + 1) as f64).ln() - binom(m, k as u32).ln();
                assert!((l - closed).abs() < 1e-9, "m={m} k={k}");
            }
            assert!(
                g.offdiag_max < 1e-12 * g.log_diagonal.iter().map(|l| l.exp()).fold(0.0, f64::max)
            );
        }
    }

    #[test]
    fn gram_p2_matches_closed_form() {
        let s = ToricSeries::projective(2).unwrap();
        let metric = ArchMetric::fubini_study(&s);
        let fact = |n: u32| (1..=n).map(|i| i as f64).product::<f64>();
        let g = gram_diagonal(&metric, &s, 3, &cfg()).unwrap();
        for (b, l) in g.basis.iter().zip(&g.log_diagonal) {
            let (i, j) = (b.entries()[0], b.entries()[1]);
            let closed = 2.0 * fact(i) * fact(j) * fact(3 - i - j) / fact(5);
            assert!((l.exp() / closed - 1.0).abs() < 1e-9, "{b}");
        }
    }

    #[test]
    fn full_gram_determinant_is_diagonal_product() {
        let (s, metric) = p1();
        let g = gram_full(&metric, &s, 3, &cfg()).unwrap();
        let prod: f64 = (0..4).map(|i| g[(i, i)]).product();
        assert!((g.determinant() / prod - 1.0).abs() < 1e-10);
    }

    #[test]
    fn norms() {
        let (s, metric) = p1();
        let g1 = gram_diagonal(&metric, &s, 1, &cfg()).unwrap();
        let one = Section::from_ints(1, &[(vec![0], 1)]).unwrap();
        assert!((l2_norm(&g1, &one).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(l2_norm(&g1, &Section::zero(1, 1)).unwrap(), 0.0);
        let g2 = gram_diagonal(&metric, &s, 2, &cfg()).unwrap();
        let s2 = Section::from_ints(2, &[(vec![0], 1), (vec![1], 1)]).unwrap();
        assert!((l2_norm(&g2, &s2).unwrap() - (0.5f64).sqrt()).abs() < 1e-12);

        let t = Section::from_ints(1, &[(vec![1], 1)]).unwrap();
        assert!(sup_norm(&metric, &t).unwrap().log_value.abs() < 1e-8);
        assert!(sup_norm(&metric, &one).unwrap().log_value.abs() < 1e-8);
    }

    #[test]
    fn monomial_sup_matches_calculus() {
        // sup r^k (1+r^2)^{-m/2} = (k/m)^{k/2} (1-k/m)^{(m-k)/2}
        let (_, metric) = p1();
        for (m, k) in [(2u32, 1u32), (10, 3), (50, 25)] {
            let s = Section::monomial(m, Exponent::new(vec![k]));
            let a = k as f64 / m as f64;
            let exact = 0.5 * (k as f64 * a.ln() + (m - k) as f64 * (1.0 - a).ln());
            assert!((sup_norm(&metric, &s).unwrap().log_value - exact).abs() < 1e-8);
        }
    }

    #[test]
    fn minimizer_examples() {
        let (s, metric) = p1();
        let e = minimizer(&metric, &s, 2, &[q_frac(1, 2)], &cfg()).unwrap();
        assert_eq!(e.leading, Exponent::new(vec![1]));
        assert!(e.coefficients.iter().all(|(_, c)| *c == 0.0));
        assert!((e.f_prime - 0.5 * (1.0f64 / 6.0).ln()).abs() < 1e-12);
        let top = minimizer(&metric, &s, 2, &[q(1)], &cfg()).unwrap();
        assert!(top.coefficients.is_empty());
    }

    fn hand_gram() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[2.0, 0.6, -0.3, 0.6, 1.5, 0.4, -0.3, 0.4, 1.0])
    }

    #[test]
    fn dense_minimizer_matches_grid_search() {
        let g = hand_gram();
        let gm = GramMatrix::from_dense(&g).unwrap();
        let cm = project_coset(&gm, 0).unwrap();
        // brute force over c ∈ [−5,5]², then a finer local pass
        let q = |c1: f64, c2: f64| {
            let v = [1.0, c1, c2];
            (0..3)
                .flat_map(|i| (0..3).map(move |j| (i, j)))
                .map(|(i, j)| v[i] * v[j] * g[(i, j)])
                .sum::<f64>()
        };
        let mut best = (f64::INFINITY, 0.0, 0.0);
        for i in 0..=1000 {
            for j in 0..=1000 {
                let (c1, c2) = (-5.0 + 0.01 * i as f64, -5.0 + 0.01 * j as f64);
                let v = q(c1, c2);
                if v < best.0 {
                    best = (v, c1, c2);
                }
            }
        }
        assert!((cm.log_norm2.exp() - best.0).abs() < 1e-3);
        assert!((cm.coefficients[0].1 - best.1).abs() < 0.02);
        assert!((cm.coefficients[1].1 - best.2).abs() < 0.02);
        // first-order condition: ⟨e, b_j⟩ = 0 for j > 0
        let e = [1.0, cm.coefficients[0].1, cm.coefficients[1].1];
        for j in 1..3 {
            let ip: f64 = (0..3).map(|i| e[i] * g[(i, j)]).sum();
            assert!(ip.abs() < 1e-12);
        }
    }

    #[test]
    fn reverse_orthogonalization_agrees_with_projection() {
        let gm = GramMatrix::from_dense(&hand_gram()).unwrap();
        let all = reverse_orthogonalize(&gm).unwrap();
        for i in 0..3 {
            let single = project_coset(&gm, i).unwrap();
            assert!((all[i].log_norm2 - single.log_norm2).abs() < 1e-12);
            for ((j1, c1), (j2, c2)) in all[i].coefficients.iter().zip(&single.coefficients) {
                assert_eq!(j1, j2);
                assert!((c1 - c2).abs() < 1e-12);
            }
        }
        // product of pivots is the determinant
        let sum: f64 = all.iter().map(|c| c.log_norm2).sum();
        assert!((sum - hand_gram().determinant().ln()).abs() < 1e-12);
        assert!((gm.log_det().unwrap() - sum).abs() < 1e-12);
    }

    #[test]
    fn singular_gram_is_reported() {
        let g = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let gm = GramMatrix::from_dense(&g).unwrap();
        assert!(matches!(
            project_coset(&gm, 0),
            Err(Error::SingularGram { .. })
        ));
    }

    #[test]
    fn scaling_covariance() {
        let (s, metric) = p1();
        let m = 6;
        let c = 0.37;
        let shifted = metric.clone().with_shift(c / m as f64);
        let g0 = gram_diagonal(&metric, &s, m, &cfg()).unwrap();
        let g1 = gram_diagonal(&shifted, &s, m, &cfg()).unwrap();
        for (a, b) in g0.log_diagonal.iter().zip(&g1.log_diagonal) {
            assert!((b - a + 2.0 * c).abs() < 1e-10);
        }
        let sec = Section::from_ints(m, &[(vec![0], 3), (vec![4], -2)]).unwrap();
        let d0 = sup_norm(&metric, &sec).unwrap().log_value;
        let d1 = sup_norm(&shifted, &sec).unwrap().log_value;
        assert!((d1 - d0 + c).abs() < 1e-7);
    }

    #[test]
    fn f_arch_sup_examples() {
        let (s, metric) = p1();
        let g1 = gram_diagonal(&metric, &s, 1, &cfg()).unwrap();
        let top = f_arch_sup(&metric, &g1, &Exponent::new(vec![1]), None).unwrap();
        assert!(top.high.abs() < 1e-7);
        assert!(top.low <= top.high);
        // coset {1 + a t}: grid search over a puts the minimum at a = 0
        let bottom = f_arch_sup(&metric, &g1, &Exponent::new(vec![0]), Some(0.5)).unwrap();
        let mut best = (f64::INFINITY, 0.0);
        for i in -20..=20 {
            let a = i as f64 / 10.0;
            let sec = Section::new(
                1,
                1,
                [
                    (Exponent::new(vec![0]), q(1)),
                    (Exponent::new(vec![1]), Q::from_float(a).unwrap()),
                ],
            )
            .unwrap();
            let v = sup_norm(&metric, &sec).unwrap().log_value;
            if v < best.0 - 1e-12 {
                best = (v, a);
            }
        }
        assert_eq!(best.1, 0.0);
        assert!((bottom.high - best.0).abs() < 1e-7);
        assert!(bottom.high <= bottom.low + 1.0f64.ln() + 0.5f64.ln().abs() + 1e-12);
    }

    #[test]
    fn gromov_on_small_sample() {
        let (s, metric) = p1();
        let g = |l: u32| gram_diagonal(&metric, &s, l, &QuadratureConfig::default());
        let r = gromov_check(&metric, &s, 5, 60, 11, &g).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.fitted_a > 0.0);
        // a constant section: both norms scale identically under a shift
        let one = Section::from_ints(1, &[(vec![0], 1)]).unwrap();
        let shifted = metric.clone().with_shift(0.8);
        let g0 = gram_diagonal(&metric, &s, 1, &cfg()).unwrap();
        let g1 = gram_diagonal(&shifted, &s, 1, &cfg()).unwrap();
        let r0 = log_l2_norm(&g0, &one).unwrap() - sup_norm(&metric, &one).unwrap().log_value;
        let r1 = log_l2_norm(&g1, &one).unwrap() - sup_norm(&shifted, &one).unwrap().log_value;
        assert!((r0 - r1).abs() < 1e-8);
    }

    #[test]
    fn monomial_ratio_decays_like_inverse_level() {
        let (s, metric) = p1();
        let mut a = f64::INFINITY;
        for m in (1..=50).step_by(7) {
            let g = gram_diagonal(&metric, &s, m, &cfg()).unwrap();
            for k in [0, m / 2, m] {
                let sec = Section::monomial(m, Exponent::new(vec![k]));
                let ratio = (log_l2_norm(&g, &sec).unwrap()
                    - sup_norm(&metric, &sec).unwrap().log_value)
                    .exp();
                assert!(ratio <= 1.0);
                a = a.min(ratio * m as f64);
            }
        }
        assert!(a > 0.1);
    }

    #[test]
    fn growth_condition() {
        let (s, metric) = p1();
        assert!(metric.growth_check(&s).is_ok());
        let flat = ArchMetric::custom_radial(1, vec![(0.0, 0.0), (1.0, 0.0)], 0.5).unwrap();
        assert!(flat.growth_check(&s).is_err());
        let ok = ArchMetric::custom_radial(1, vec![(0.0, 0.0), (1.0, 0.0)], 1.0).unwrap();
        assert!(ok.growth_check(&s).is_ok());
    }

    #[test]
    fn radial_weight_interpolates() {
        let m = ArchMetric::custom_radial(1, vec![(0.0, 1.0), (2.0, 3.0)], 1.0).unwrap();
        assert!((m.psi(&[0.0]) - 2.0).abs() < 1e-12);
        assert!((m.psi(&[(4.0f64).ln()]) - (3.0 + 2f64.ln())).abs() < 1e-12);
        assert!((m.psi(&[-50.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sup_submultiplicative_on_samples() {
        let (s, metric) = p1();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let mk = |rng: &mut ChaCha8Rng, m: u32| {
                let terms: Vec<(Vec<u32>, i64)> =
                    (0..=m).map(|k| (vec![k], rng.gen_range(-4..=4))).collect();
                Section::from_ints(m, &terms).unwrap()
            };
            let a = mk(&mut rng, 2);
            let b = mk(&mut rng, 3);
            if a.is_zero() || b.is_zero() {
                continue;
            }
            let ab = a.multiply(&b, s.max_level()).unwrap();
            let lhs = sup_norm(&metric, &ab).unwrap().log_value;
            let rhs = sup_norm(&metric, &a).unwrap().log_upper()
                + sup_norm(&metric, &b).unwrap().log_upper();
            assert!(lhs <= rhs + 1e-9);
        }
    }
}
