//! Okounkov bodies, exact volumes, Minkowski sums, value semigroups and the
//! lifted body over an Okounkov body.

mod polytope;
mod semigroup;

pub use polytope::{Halfspace, Polytope, PolytopeJson, Volume};
pub(crate) use semigroup::advance;
pub use semigroup::{
    khovanskii_saturation, verify_gamma_brute_force, Saturation, SaturationReport, Semigroup,
};

use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fit::{self, Fit, Model};
use crate::linear_series::ToricSeries;
use crate::rational::{to_f64, Q};

/// Closed convex hull of `Λ_1 ∪ ... ∪ Λ_{m_max}`.
pub fn okounkov_body(series: &ToricSeries, m_max: u32) -> Result<Polytope> {
    let m_max = m_max.max(1);
    let mut body: Option<Polytope> = None;
    for m in 1..=m_max {
        let pts: Vec<Vec<Q>> = series
            .lambda_m(m)?
            .into_iter()
            .map(|g| g.coords())
            .collect();
        body = Some(match body {
            None => Polytope::hull(pts)?,
            Some(current) => {
                // a point of the closed hull cannot change it
                let outside: Vec<Vec<Q>> =
                    pts.into_iter().filter(|p| !current.contains(p)).collect();
                if outside.is_empty() {
                    current
                } else {
                    let mut all = current.vertices().to_vec();
                    all.extend(outside);
                    Polytope::hull(all)?
                }
            }
        });
    }
    Ok(body.expect("m_max >= 1"))
}

pub fn volume(p: &Polytope) -> Volume {
    p.volume()
}

pub fn minkowski_sum(p: &Polytope, q: &Polytope) -> Result<Polytope> {
    p.minkowski_sum(q)
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeIdentityReport {
    pub dim: usize,
    pub body_volume: String,
    /// `d! · vol(Δ)`
    pub scaled_body_volume: f64,
    /// Extrapolated `lim d!·N_m/m^d`.
    pub limit_estimate: f64,
    pub raw_at_max: f64,
    pub relative_gap: f64,
    pub relative_gap_raw: f64,
    pub fit: Fit,
}

/// Compares `d!·vol(Δ)` with the growth rate of `N_m`.
pub fn check_volume_identity(series: &ToricSeries, m_max: u32) -> Result<VolumeIdentityReport> {
    let d = series.dim();
    let body = okounkov_body(series, 1)?;
    let vol = body.volume();
    let fact: f64 = (1..=d).map(|i| i as f64).product();
    let scaled = to_f64(&vol.value) * fact;
    let needed = d as u32 + 2;
    if m_max < needed {
        return Err(Error::Precondition(format!(
            "need m_max >= {needed} to extrapolate"
        )));
    }
    let step = (m_max / 24).max(1);
    let mut levels: Vec<u32> = (1..=m_max).rev().step_by(step as usize).collect();
    levels.reverse();
    let ms: Vec<f64> = levels.iter().map(|&m| m as f64).collect();
    let values: Vec<f64> = levels
        .iter()
        .map(|&m| fact * series.basis_size(m) as f64 / (m as f64).powi(d as i32))
        .collect();
    let f = fit::fit(Model::InversePowers(d), &ms, &values)?;
    let raw = *values.last().unwrap();
    Ok(VolumeIdentityReport {
        dim: d,
        body_volume: vol.value.to_string(),
        scaled_body_volume: scaled,
        limit_estimate: f.leading(),
        raw_at_max: raw,
        relative_gap: (f.leading() - scaled).abs() / scaled,
        relative_gap_raw: (raw - scaled).abs() / scaled,
        fit: f,
    })
}

/// Fraction of the cube of side `1/m` centred at `alpha` that lies in `base`.
/// Interior cells get weight one; cut cells are measured on a sub-grid.
pub fn cell_fraction(base: &Polytope, grid_level: u32, alpha: &[f64]) -> f64 {
    let d = alpha.len();
    let h = 0.5 / grid_level as f64;
    let corners_inside = (0..1usize << d).all(|mask| {
        let corner: Vec<f64> = (0..d)
            .map(|i| alpha[i] + if (mask >> i) & 1 == 1 { h } else { -h })
            .collect();
        base.contains_f64(&corner, 1e-12)
    });
    if corners_inside {
        return 1.0;
    }
    let sub = match d {
        1 => 64,
        2 => 32,
        _ => 8,
    };
    let total = (sub as usize).pow(d as u32);
    let mut inside = 0usize;
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let p: Vec<f64> = (0..d)
            .map(|i| alpha[i] - h + (idx[i] as f64 + 0.5) * 2.0 * h / sub as f64)
            .collect();
        if base.contains_f64(&p, 0.0) {
            inside += 1;
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < sub {
                break;
            }
            *slot = 0;
        }
    }
    inside as f64 / total as f64
}

/// Region under `−c` over an Okounkov body, known through grid samples.
#[derive(Debug, Clone, Serialize)]
pub struct LiftedBody {
    pub grid_level: u32,
    /// `(α, −c(α))` pairs.
    pub ceiling: Vec<(Vec<f64>, f64)>,
    pub volume_estimate: f64,
    /// Step-function sum minus the cell-weighted sum.
    pub boundary_correction: f64,
    #[serde(skip)]
    pub base: Polytope,
}

impl LiftedBody {
    /// Whether `(α, y)` lies under the sampled ceiling at the grid point `α`.
    pub fn contains_sample(&self, alpha: &[f64], y: f64, tol: f64) -> Option<bool> {
        self.ceiling
            .iter()
            .find(|(a, _)| a.iter().zip(alpha).all(|(x, z)| (x - z).abs() < 1e-12))
            .map(|(_, top)| y >= -tol && y <= top + tol)
    }
}

/// Builds the lifted body from samples of `c` on the grid of level `grid_level`.
pub fn lifted_body(
    base: &Polytope,
    grid_level: u32,
    c_samples: &[(Vec<f64>, f64)],
    tolerance: f64,
) -> Result<LiftedBody> {
    if grid_level == 0 {
        return Err(Error::ZeroLevel);
    }
    if let Some((a, c)) = c_samples.iter().find(|(_, c)| *c > tolerance) {
        return Err(Error::PositiveCeiling {
            at: format!("{a:?}"),
            value: *c,
            tolerance,
        });
    }
    let integral = riemann_integral(base, grid_level, c_samples);
    Ok(LiftedBody {
        grid_level,
        ceiling: c_samples
            .iter()
            .map(|(a, c)| (a.clone(), (-c).max(0.0)))
            .collect(),
        volume_estimate: -integral.value,
        boundary_correction: -integral.boundary_correction,
        base: base.clone(),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RiemannIntegral {
    /// Cell-weighted sum.
    pub value: f64,
    /// Plain step-function sum `(1/m^d) Σ f(α)`.
    pub step_sum: f64,
    pub boundary_correction: f64,
}

/// Midpoint Riemann sum of grid samples over `base`, with cut cells weighted
/// by the fraction inside.
pub fn riemann_integral(
    base: &Polytope,
    grid_level: u32,
    samples: &[(Vec<f64>, f64)],
) -> RiemannIntegral {
    let d = base.dim() as i32;
    let cell = (grid_level as f64).powi(-d);
    let weighted: Vec<f64> = samples
        .iter()
        .map(|(a, f)| f * cell_fraction(base, grid_level, a))
        .collect();
    let plain: Vec<f64> = samples.iter().map(|(_, f)| *f).collect();
    let value = fit::pairwise_sum(&weighted) * cell;
    let step_sum = fit::pairwise_sum(&plain) * cell;
    RiemannIntegral {
        value,
        step_sum,
        boundary_correction: step_sum - value,
    }
}

pub(crate) fn q_to_i128(x: &Q) -> i128 {
    x.to_integer().to_i128().expect("integer fits in i128")
}

pub(crate) fn lcm_denominators(xs: &[Q]) -> Q {
    use num_integer::Integer;
    let l = xs
        .iter()
        .fold(num_bigint::BigInt::from(1), |acc, x| acc.lcm(x.denom()));
    Q::from_integer(l)
}

/// Integer form `(n, b)` of a halfspace `n·x <= b`.
pub(crate) fn integer_halfspace(h: &Halfspace) -> (Vec<i128>, i128) {
    let mut all = h.normal.clone();
    all.push(h.offset.clone());
    let l = lcm_denominators(&all);
    (
        h.normal.iter().map(|x| q_to_i128(&(x * &l))).collect(),
        q_to_i128(&(&h.offset * &l)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, q_frac};
    use proptest::prelude::*;

    #[test]
    fn okounkov_body_examples() {
        let p1 = ToricSeries::projective(1).unwrap();
        assert_eq!(
            okounkov_body(&p1, 5).unwrap(),
            Polytope::standard_simplex(1)
        );
        let p2 = ToricSeries::projective(2).unwrap();
        assert_eq!(
            okounkov_body(&p2, 4).unwrap(),
            Polytope::standard_simplex(2)
        );
        let sq = ToricSeries::from_vertices(vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]])
            .unwrap();
        let body = okounkov_body(&sq, 3).unwrap();
        assert_eq!(body, Polytope::unit_cube(2));
        assert_eq!(body.volume().value, q(1));
    }

    #[test]
    fn volume_identity_reports() {
        let p1 = ToricSeries::projective(1).unwrap();
        let r = check_volume_identity(&p1, 200).unwrap();
        assert!(r.relative_gap < 1e-9);
        assert!(r.relative_gap_raw < 1e-2);

        // oracle: N_m = (m+1)(m+2)/2 counted directly
        let p2 = ToricSeries::projective(2).unwrap();
        for m in 1..10u32 {
            let direct = (0..=m)
                .flat_map(|a| (0..=m).map(move |b| (a, b)))
                .filter(|(a, b)| a + b <= m)
                .count();
            assert_eq!(p2.basis_size(m), direct);
        }
        let r = check_volume_identity(&p2, 40).unwrap();
        assert_eq!(r.body_volume, "1/2");
        assert!(r.relative_gap < 1e-9, "{r:?}");

        let sq = ToricSeries::from_vertices(vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]])
            .unwrap();
        let r = check_volume_identity(&sq, 30).unwrap();
        assert!((r.scaled_body_volume - 2.0).abs() < 1e-12);
        assert!(r.relative_gap < 1e-9);
    }

    #[test]
    fn lifted_body_examples() {
        let base = Polytope::standard_simplex(1);
        let m = 200;
        let grid = |f: &dyn Fn(f64) -> f64| -> Vec<(Vec<f64>, f64)> {
            (0..=m)
                .map(|k| {
                    let a = k as f64 / m as f64;
                    (vec![a], f(a))
                })
                .collect()
        };
        let zero = lifted_body(&base, m, &grid(&|_| 0.0), 1e-9).unwrap();
        assert_eq!(zero.volume_estimate, 0.0);
        let one = lifted_body(&base, m, &grid(&|_| -1.0), 1e-9).unwrap();
        assert!((one.volume_estimate - 1.0).abs() < 1e-12);
        let entropy = |a: f64| {
            let xlx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
            -(xlx(a) + xlx(1.0 - a))
        };
        // analytic: ∫₀¹ ½H(α) dα = 2·½·∫₀¹ −α ln α dα = 1/4
        let h = lifted_body(&base, m, &grid(&|a| -0.5 * entropy(a)), 1e-9).unwrap();
        assert!(
            (h.volume_estimate - 0.25).abs() < 1e-4,
            "{}",
            h.volume_estimate
        );
        assert!(lifted_body(&base, m, &grid(&|_| 0.1), 1e-3).is_err());
        assert_eq!(h.contains_sample(&[0.5], 0.1, 1e-9), Some(true));
        assert_eq!(h.contains_sample(&[0.5], 1.0, 1e-9), Some(false));
    }

    #[test]
    fn cell_fractions_on_simplex() {
        let s = Polytope::standard_simplex(2);
        assert_eq!(cell_fraction(&s, 10, &[0.3, 0.3]), 1.0);
        assert!((cell_fraction(&s, 10, &[0.0, 0.0]) - 0.25).abs() < 1e-12);
        assert!((cell_fraction(&s, 10, &[0.5, 0.0]) - 0.5).abs() < 0.02);
        // constant integrand recovers the area 1/2
        let m = 20u32;
        let pts: Vec<(Vec<f64>, f64)> = (0..=m)
            .flat_map(|a| {
                (0..=m - a).map(move |b| (vec![a as f64 / m as f64, b as f64 / m as f64], 1.0))
            })
            .collect();
        let r = riemann_integral(&s, m, &pts);
        assert!((r.value - 0.5).abs() < 2e-3, "{r:?}");
        assert!(r.boundary_correction > 0.0);
    }

    fn arb_polygon() -> impl Strategy<Value = Polytope> {
        prop::collection::vec((-6i64..6, -6i64..6, 1i64..4), 3..7).prop_filter_map(
            "full-dimensional",
            |pts| {
                let pts: Vec<Vec<Q>> = pts
                    .into_iter()
                    .map(|(x, y, d)| vec![q_frac(x, d), q_frac(y, d)])
                    .collect();
                Polytope::hull(pts).ok().filter(|p| !p.is_degenerate())
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn brunn_minkowski_for_polygons(p in arb_polygon(), r in arb_polygon()) {
            let s = p.minkowski_sum(&r).unwrap();
            let v = |x: &Polytope| to_f64(&x.volume().value).sqrt();
            prop_assert!(v(&s) + 1e-12 >= v(&p) + v(&r));
        }

        #[test]
        fn volume_invariances(p in arb_polygon(), tx in -5i64..5, ty in -5i64..5) {
            let vol = p.volume().value;
            prop_assert_eq!(p.translate(&[q(tx), q(ty)]).volume().value, vol.clone());
            prop_assert_eq!(p.permute_coordinates(&[1, 0]).volume().value, vol);
        }

        #[test]
        fn body_is_independent_of_m_max(m in 1u32..6) {
            let p2 = ToricSeries::projective(2).unwrap();
            prop_assert_eq!(okounkov_body(&p2, m).unwrap(), Polytope::standard_simplex(2));
        }
    }
}
