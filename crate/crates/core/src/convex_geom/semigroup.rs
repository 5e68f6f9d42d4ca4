//! Finitely generated value semigroups in `ℕ^{d+1}` and the saturation
//! search of Khovanskii's approximation theorem.

use std::collections::BTreeSet;

use serde::Serialize;

use super::{integer_halfspace, Polytope};
use crate::error::{Error, Result};
use crate::linear_series::{Exponent, ToricSeries};
use crate::rational::{self, Q};

/// `Γ ⊂ ℕ^d × ℕ` generated by `(β_j, n_j)`, enumerated up to a level bound.
#[derive(Debug, Clone)]
pub struct Semigroup {
    dim: usize,
    generators: Vec<(Exponent, u32)>,
    levels: Vec<BTreeSet<Exponent>>,
}

impl Semigroup {
    pub fn enumerate(generators: Vec<(Exponent, u32)>, bound: u32) -> Result<Self> {
        let dim = generators
            .first()
            .map(|(e, _)| e.dim())
            .ok_or_else(|| Error::Precondition("no generators".into()))?;
        for (e, n) in &generators {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
            if *n == 0 {
                return Err(Error::Precondition(
                    "generators must have positive level".into(),
                ));
            }
        }
        let mut levels: Vec<BTreeSet<Exponent>> = vec![BTreeSet::new(); bound as usize + 1];
        levels[0].insert(Exponent::zero(dim));
        for m in 1..=bound as usize {
            let mut cur = BTreeSet::new();
            for (g, n) in &generators {
                let n = *n as usize;
                if n <= m {
                    for prev in &levels[m - n] {
                        cur.insert(prev.add(g));
                    }
                }
            }
            levels[m] = cur;
        }
        Ok(Self {
            dim,
            generators,
            levels,
        })
    }

    /// The value semigroup of a toric series, with a generating set found by
    /// sweeping levels `1..=sweep` and keeping elements not already generated.
    pub fn from_series(series: &ToricSeries, sweep: u32) -> Result<Self> {
        let d = series.dim();
        let mut generators: Vec<(Exponent, u32)> = Vec::new();
        let mut levels: Vec<BTreeSet<Exponent>> = vec![BTreeSet::new(); sweep as usize + 1];
        levels[0].insert(Exponent::zero(d));
        for m in 1..=sweep as usize {
            let mut generated = BTreeSet::new();
            for (g, n) in &generators {
                let n = *n as usize;
                for prev in &levels[m - n] {
                    generated.insert(prev.add(g));
                }
            }
            for beta in series.lattice_points(m as u32) {
                if !generated.contains(&beta) {
                    generators.push((beta.clone(), m as u32));
                    generated.insert(beta);
                }
            }
            levels[m] = generated;
        }
        Ok(Self {
            dim: d,
            generators,
            levels,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[(Exponent, u32)] {
        &self.generators
    }

    pub fn bound(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    /// `Γ_m` as exponents.
    pub fn level(&self, m: u32) -> &BTreeSet<Exponent> {
        &self.levels[m as usize]
    }

    pub fn contains(&self, e: &Exponent, m: u32) -> bool {
        (m as usize) < self.levels.len() && self.levels[m as usize].contains(e)
    }

    /// `Δ(Γ) = conv{β_j / n_j}`.
    pub fn body(&self) -> Result<Polytope> {
        Polytope::hull(
            self.generators
                .iter()
                .map(|(e, n)| {
                    e.entries()
                        .iter()
                        .map(|&b| rational::q_frac(b as i64, *n as i64))
                        .collect()
                })
                .collect(),
        )
    }

    /// Whether the generators span `ℤ^{d+1}` as a group: the gcd of all
    /// maximal minors is one.
    pub fn generates_full_lattice(&self) -> bool {
        let k = self.dim + 1;
        let vecs: Vec<Vec<i128>> = self
            .generators
            .iter()
            .map(|(e, n)| {
                let mut v: Vec<i128> = e.entries().iter().map(|&x| x as i128).collect();
                v.push(*n as i128);
                v
            })
            .collect();
        if vecs.len() < k {
            return false;
        }
        let mut g: i128 = 0;
        let mut idx: Vec<usize> = (0..k).collect();
        let n = vecs.len();
        loop {
            let rows: Vec<Vec<i128>> = idx.iter().map(|&i| vecs[i].clone()).collect();
            g = gcd(g, rational::det_i128(&rows).abs());
            if g == 1 {
                return true;
            }
            let mut i = k;
            loop {
                if i == 0 {
                    return g == 1;
                }
                i -= 1;
                if idx[i] < n - k + i {
                    idx[i] += 1;
                    for j in i + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
            }
        }
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Lattice points `β ∈ ℕ^d` with `β/m ∈ body`, in lex order.
fn scaled_lattice_points(
    body: &Polytope,
    m: u32,
    offset: &[i64],
    shift_level: u32,
) -> Vec<Vec<i64>> {
    // points x with x - offset ∈ (m - shift_level)·body
    let k = m - shift_level;
    let (lo, hi) = body.bounding_box();
    let kq = rational::q(k as i64);
    let lo: Vec<i64> = lo
        .iter()
        .zip(offset)
        .map(|(x, o)| (x * &kq).ceil().to_integer().try_into().unwrap_or(0i64) + o)
        .collect();
    let hi: Vec<i64> = hi
        .iter()
        .zip(offset)
        .map(|(x, o)| (x * &kq).floor().to_integer().try_into().unwrap_or(0i64) + o)
        .collect();
    let hs: Vec<(Vec<i128>, i128)> = body.facets().iter().map(integer_halfspace).collect();
    let mut out = Vec::new();
    if lo.iter().zip(&hi).any(|(l, h)| l > h) {
        return out;
    }
    let mut cur = lo.clone();
    loop {
        let inside = hs.iter().all(|(n, b)| {
            let lhs: i128 = n
                .iter()
                .zip(&cur)
                .zip(offset)
                .map(|((a, x), o)| a * (x - o) as i128)
                .sum();
            lhs <= b * k as i128
        });
        if inside && cur.iter().all(|&x| x >= 0) {
            out.push(cur.clone());
        }
        if !advance(&mut cur, &lo, &hi) {
            return out;
        }
    }
}

/// Lexicographic odometer over the box `[lo, hi]`; false once exhausted.
pub(crate) fn advance(cur: &mut [i64], lo: &[i64], hi: &[i64]) -> bool {
    for i in (0..cur.len()).rev() {
        if cur[i] < hi[i] {
            cur[i] += 1;
            for j in i + 1..cur.len() {
                cur[j] = lo[j];
            }
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Saturation {
    Found,
    NotFoundWithinBound,
    /// Γ does not generate `ℤ^{d+1}`, so the theorem does not apply.
    PreconditionViolated,
}

#[derive(Debug, Clone, Serialize)]
pub struct SaturationReport {
    pub status: Saturation,
    pub m0: Option<u32>,
    pub bound: u32,
    pub failing_levels: Vec<u32>,
    pub generates_lattice: bool,
    /// `γ` with `(γ + Σ(Γ)) ∩ ℕ^{d+1} ⊂ Γ` up to the bound, if one was found.
    pub gamma: Option<(Exponent, u32)>,
    pub gamma_checked_points: usize,
}

/// Levels at or below the bound that must be failure-free before `m₀` counts
/// as found.
fn stability_window(bound: u32) -> u32 {
    (bound / 4).max(4)
}

/// Smallest `m₀` with `D ∩ Λ_m(Γ) = D ∩ (1/m)ℕ^d` for all `m₀ < m <= bound`.
pub fn khovanskii_saturation(
    generators: Vec<(Exponent, u32)>,
    body: &Polytope,
    bound: u32,
) -> Result<SaturationReport> {
    let gamma_sg = Semigroup::enumerate(generators, bound)?;
    let delta = gamma_sg.body()?;
    if delta.is_degenerate() {
        return Err(Error::Precondition("Δ(Γ) is not full-dimensional".into()));
    }
    if body.dim() != delta.dim() {
        return Err(Error::DimensionMismatch {
            expected: delta.dim(),
            found: body.dim(),
        });
    }
    if let Some(v) = body
        .vertices()
        .iter()
        .find(|v| !delta.contains_in_interior(v))
    {
        return Err(Error::Precondition(format!(
            "D is not inside the interior of Δ(Γ): vertex {v:?}"
        )));
    }
    let d = delta.dim();
    let zero = vec![0i64; d];
    let mut failing = Vec::new();
    for m in 1..=bound {
        let missing = scaled_lattice_points(body, m, &zero, 0)
            .into_iter()
            .any(|x| !gamma_sg.contains(&to_exponent(&x), m));
        if missing {
            failing.push(m);
        }
    }
    let generates = gamma_sg.generates_full_lattice();
    let last_fail = failing.last().copied().unwrap_or(0);
    let found = bound - last_fail >= stability_window(bound);
    let (gamma, checked) = find_gamma(&gamma_sg, &delta, bound);
    let status = if !generates {
        Saturation::PreconditionViolated
    } else if found {
        Saturation::Found
    } else {
        Saturation::NotFoundWithinBound
    };
    Ok(SaturationReport {
        status,
        m0: (status == Saturation::Found).then_some(last_fail.max(1)),
        bound,
        failing_levels: failing,
        generates_lattice: generates,
        gamma,
        gamma_checked_points: checked,
    })
}

fn to_exponent(x: &[i64]) -> Exponent {
    Exponent::new(x.iter().map(|&v| v as u32).collect())
}

/// Searches `γ ∈ Γ` of lowest level such that every lattice point of
/// `γ + Σ(Γ)` up to the bound lies in `Γ`.
fn find_gamma(sg: &Semigroup, delta: &Polytope, bound: u32) -> (Option<(Exponent, u32)>, usize) {
    for level in 1..=bound / 2 {
        for g in sg.level(level) {
            let offset = g.as_i64();
            let mut ok = true;
            let mut checked = 0;
            'levels: for m in level..=bound {
                for x in scaled_lattice_points(delta, m, &offset, level) {
                    checked += 1;
                    if !sg.contains(&to_exponent(&x), m) {
                        ok = false;
                        break 'levels;
                    }
                }
            }
            if ok {
                return (Some((g.clone(), level)), checked);
            }
        }
    }
    (None, 0)
}

/// Brute-force confirmation that `(γ + Σ(Γ)) ∩ ℕ^{d+1} ⊂ Γ` up to `bound`,
/// testing cone membership of every lattice point of a bounding box.
pub fn verify_gamma_brute_force(
    sg: &Semigroup,
    gamma: &(Exponent, u32),
    bound: u32,
) -> Result<bool> {
    let delta = sg.body()?;
    let (_, hi) = delta.bounding_box();
    let d = sg.dim();
    for m in gamma.1..=bound {
        let k = m - gamma.1;
        let extent: Vec<i64> = hi
            .iter()
            .zip(gamma.0.entries())
            .map(|(h, &g)| {
                (h * rational::q(m as i64))
                    .ceil()
                    .to_integer()
                    .try_into()
                    .unwrap_or(0i64)
                    + g as i64
            })
            .collect();
        let lo = vec![0i64; d];
        let mut cur = lo.clone();
        loop {
            let rel: Vec<i64> = cur
                .iter()
                .zip(gamma.0.entries())
                .map(|(x, &g)| x - g as i64)
                .collect();
            let in_cone = if k == 0 {
                rel.iter().all(|&r| r == 0)
            } else {
                let pt: Vec<Q> = rel.iter().map(|&r| rational::q_frac(r, k as i64)).collect();
                delta.contains(&pt)
            };
            if in_cone && !sg.contains(&to_exponent(&cur), m) {
                return Ok(false);
            }
            if !advance(&mut cur, &lo, &extent) {
                break;
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::q_frac;

    fn gens(list: &[(&[u32], u32)]) -> Vec<(Exponent, u32)> {
        list.iter()
            .map(|(e, n)| (Exponent::new(e.to_vec()), *n))
            .collect()
    }

    fn interval(a: (i64, i64), b: (i64, i64)) -> Polytope {
        Polytope::hull(vec![vec![q_frac(a.0, a.1)], vec![q_frac(b.0, b.1)]]).unwrap()
    }

    #[test]
    fn projective_line_is_saturated() {
        let r = khovanskii_saturation(gens(&[(&[0], 1), (&[1], 1)]), &interval((1, 4), (3, 4)), 64)
            .unwrap();
        assert_eq!(r.status, Saturation::Found);
        assert_eq!(r.m0, Some(1));
        assert!(r.failing_levels.is_empty());
    }

    #[test]
    fn even_exponents_violate_precondition() {
        let r = khovanskii_saturation(gens(&[(&[0], 1), (&[2], 1)]), &interval((1, 4), (3, 4)), 32)
            .unwrap();
        assert_eq!(r.status, Saturation::PreconditionViolated);
        assert!(!r.generates_lattice);
        // brute force: odd numerators never appear, so every level fails
        let sg = Semigroup::enumerate(gens(&[(&[0], 1), (&[2], 1)]), 32).unwrap();
        for m in 1..=32u32 {
            assert!(sg.level(m).iter().all(|e| e.entries()[0] % 2 == 0));
        }
        // level 1 has no lattice point in D
        assert_eq!(r.failing_levels, (2..=32).collect::<Vec<_>>());
    }

    #[test]
    fn gaps_close_after_a_few_levels() {
        let g = gens(&[(&[0], 1), (&[2], 1), (&[3], 1)]);
        let r = khovanskii_saturation(g.clone(), &interval((1, 4), (11, 4)), 64).unwrap();
        assert_eq!(r.status, Saturation::Found);
        assert_eq!(r.m0, Some(4));
        let sg = Semigroup::enumerate(g, 64).unwrap();
        let gamma = r.gamma.unwrap();
        assert!(verify_gamma_brute_force(&sg, &gamma, 64).unwrap());
    }

    #[test]
    fn half_slope_generators() {
        let g = gens(&[(&[0], 1), (&[1], 2)]);
        let r = khovanskii_saturation(g.clone(), &interval((1, 8), (3, 8)), 64).unwrap();
        assert_eq!(r.status, Saturation::Found);
        let sg = Semigroup::enumerate(g, 64).unwrap();
        assert!(verify_gamma_brute_force(&sg, &r.gamma.unwrap(), 64).unwrap());
    }

    #[test]
    fn body_outside_interior_is_rejected() {
        let r = khovanskii_saturation(gens(&[(&[0], 1), (&[1], 1)]), &interval((0, 1), (1, 2)), 16);
        assert!(matches!(r, Err(Error::Precondition(_))));
    }

    #[test]
    fn series_generators_are_level_one_for_simplex() {
        let p2 = ToricSeries::projective(2).unwrap();
        let sg = Semigroup::from_series(&p2, 6).unwrap();
        assert_eq!(sg.generators().len(), 3);
        assert!(sg.generators().iter().all(|(_, n)| *n == 1));
        assert!(sg.generates_full_lattice());
        for m in 1..=6 {
            assert_eq!(sg.level(m).len(), p2.basis_size(m));
        }
    }
}
