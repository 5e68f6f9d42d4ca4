//! Chebyshev transforms `c(α) = lim (1/mk)·F(mk, kβ)` along multiples.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{Evaluator, Place};
use crate::convex_geom::{self, Polytope, RiemannIntegral};
use crate::error::{Error, Result};
use crate::fit::{self, Fit, Model};
use crate::linear_series::{Exponent, GridPoint};
use crate::rational;

#[derive(Debug, Clone, Serialize)]
pub struct ChebyshevEntry {
    pub alpha: Vec<f64>,
    pub leading: Exponent,
    /// `(k, (1/mk)·F(mk, kβ))`, total over places.
    pub f_levels: Vec<(u32, f64)>,
    /// Archimedean part of `f_levels`.
    pub arch_levels: Vec<(u32, f64)>,
    pub c_value: f64,
    /// Nonzero per-place limits; finite places are exact.
    pub c_components: Vec<(Place, f64)>,
    pub fit: Fit,
    /// Largest `v_{k'} − v_k − slack(mk)` over consecutive schedule entries;
    /// nonpositive when the sequence decreases up to slack.
    pub monotonicity_excess: f64,
    /// Largest `c − v_k − slack(mk)`; nonpositive when `c` lies below the
    /// sequence up to slack.
    pub ceiling_excess: f64,
}

impl ChebyshevEntry {
    pub fn monotone(&self) -> bool {
        self.monotonicity_excess <= 0.0
    }
}

/// Slack allowed in the monotone decrease of the `L²` sequence at level `n`.
pub fn monotonicity_slack(n: u32) -> f64 {
    2.0 * (n as f64).ln().max(1.0) / n as f64
}

/// Evaluates `(1/mk)·F(mk, kβ)` along `schedule`, extrapolates the
/// archimedean limit with `c + b·ln(mk)/(mk) + e/(mk)` and adds the exact
/// finite limits `−w(α)·log p`.
pub fn chebyshev(
    eval: &Evaluator,
    m: u32,
    leading: &Exponent,
    schedule: &[u32],
) -> Result<ChebyshevEntry> {
    if schedule.len() < 3 {
        return Err(Error::Precondition(
            "a Chebyshev schedule needs at least 3 multipliers".into(),
        ));
    }
    if schedule.windows(2).any(|w| w[1] <= w[0]) || schedule[0] == 0 {
        return Err(Error::Precondition(
            "schedule must be positive and strictly increasing".into(),
        ));
    }
    let series = eval.bundle().series();
    let top = m * schedule[schedule.len() - 1];
    if top > series.max_level() {
        return Err(Error::LevelTooLarge {
            level: top,
            max: series.max_level(),
        });
    }
    let point = GridPoint::new(m, leading.clone());
    let alpha_q = point.coords();
    let mut f_levels = Vec::with_capacity(schedule.len());
    let mut arch_levels = Vec::with_capacity(schedule.len());
    for &k in schedule {
        let f = eval.f_total(m * k, &leading.scale(k))?;
        let n = (m * k) as f64;
        f_levels.push((k, f.total / n));
        arch_levels.push((k, f.arch / n));
    }
    let ms: Vec<f64> = schedule.iter().map(|&k| (m * k) as f64).collect();
    let arch_vals: Vec<f64> = arch_levels.iter().map(|(_, v)| *v).collect();
    let fit = fit::fit(Model::LogOverLevel, &ms, &arch_vals)?;
    let mut c_components = vec![(Place::Archimedean, fit.leading())];
    let mut finite_sum = 0.0;
    for w in eval.bundle().finite() {
        let c = -rational::to_f64(&w.weight_at(&alpha_q)) * (w.prime() as f64).ln();
        if c != 0.0 {
            c_components.push((Place::Prime(w.prime()), c));
        }
        finite_sum += c;
    }
    let c_value = fit.leading() + finite_sum;
    let monotonicity_excess = f_levels
        .windows(2)
        .map(|w| w[1].1 - w[0].1 - monotonicity_slack(m * w[0].0))
        .fold(f64::NEG_INFINITY, f64::max);
    let ceiling_excess = f_levels
        .iter()
        .map(|&(k, v)| c_value - v - monotonicity_slack(m * k))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(ChebyshevEntry {
        alpha: point.coords_f64(),
        leading: leading.clone(),
        f_levels,
        arch_levels,
        c_value,
        c_components,
        fit,
        monotonicity_excess,
        ceiling_excess,
    })
}

/// `c` on every point of `Λ_{m_grid}`.
#[derive(Debug, Clone, Serialize)]
pub struct ChebyshevTable {
    pub grid_level: u32,
    pub schedule: Vec<u32>,
    pub entries: BTreeMap<Exponent, ChebyshevEntry>,
}

impl ChebyshevTable {
    pub fn build(eval: &Evaluator, grid_level: u32, schedule: &[u32]) -> Result<Self> {
        let levels: Vec<u32> = schedule.iter().map(|k| grid_level * k).collect();
        eval.prefetch(&levels)?;
        let entries = eval
            .level_basis(grid_level)?
            .into_iter()
            .map(|b| Ok((b.clone(), chebyshev(eval, grid_level, &b, schedule)?)))
            .collect::<Result<_>>()?;
        Ok(Self {
            grid_level,
            schedule: schedule.to_vec(),
            entries,
        })
    }

    pub fn samples(&self) -> Vec<(Vec<f64>, f64)> {
        self.entries
            .values()
            .map(|e| (e.alpha.clone(), e.c_value))
            .collect()
    }

    pub fn max_c(&self) -> f64 {
        self.entries
            .values()
            .map(|e| e.c_value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn get(&self, leading: &Exponent) -> Option<&ChebyshevEntry> {
        self.entries.get(leading)
    }
}

/// `∫_Δ c` as a cell-weighted Riemann sum over the table grid.
pub fn integrate_c(table: &ChebyshevTable, body: &Polytope) -> RiemannIntegral {
    convex_geom::riemann_integral(body, table.grid_level, &table.samples())
}
