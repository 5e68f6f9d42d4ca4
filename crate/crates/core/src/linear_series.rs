//! Monomial models of the graded linear series `H⁰(X, mL)` of a toric pair,
//! the lexicographic valuation and normalized section cosets.
//!
//! The base point is the torus-fixed point at the origin vertex of the
//! polytope, the local coordinates are the torus coordinates and the
//! trivializing section is the monomial with exponent zero. With these
//! choices every lattice point of `mP` is the valuation of its own monomial,
//! so the value set at level `m` is exactly the level basis.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};
use serde::{Serialize, Serializer};

use crate::convex_geom::Polytope;
use crate::error::{Error, Result};
use crate::rational::{self, Q};

/// A point of `ℕ^d`, ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Exponent(Vec<u32>);

impl Exponent {
    pub fn new(entries: Vec<u32>) -> Self {
        Self(entries)
    }

    pub fn zero(d: usize) -> Self {
        Self(vec![0; d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn add(&self, other: &Exponent) -> Exponent {
        Exponent(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, k: u32) -> Exponent {
        Exponent(self.0.iter().map(|a| a * k).collect())
    }

    pub fn as_i64(&self) -> Vec<i64> {
        self.0.iter().map(|&a| a as i64).collect()
    }
}

impl From<Vec<u32>> for Exponent {
    fn from(v: Vec<u32>) -> Self {
        Exponent(v)
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Lexicographic comparison: the first differing coordinate decides.
pub fn lex_compare(a: &Exponent, b: &Exponent) -> Result<Ordering> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(a.0.cmp(&b.0))
}

/// A level-`m` section in the local expansion `Σ a_β t^β` (exact rationals).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Section {
    level: u32,
    dim: usize,
    coeffs: BTreeMap<Exponent, Q>,
}

impl Section {
    pub fn new(
        level: u32,
        dim: usize,
        terms: impl IntoIterator<Item = (Exponent, Q)>,
    ) -> Result<Self> {
        let mut coeffs = BTreeMap::new();
        for (e, a) in terms {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.dim(),
                });
            }
            let slot = coeffs.entry(e).or_insert_with(Q::zero);
            *slot += a;
        }
        coeffs.retain(|_, a: &mut Q| !a.is_zero());
        Ok(Self { level, dim, coeffs })
    }

    pub fn zero(level: u32, dim: usize) -> Self {
        Self {
            level,
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn monomial(level: u32, e: Exponent) -> Self {
        let dim = e.dim();
        Self {
            level,
            dim,
            coeffs: BTreeMap::from([(e, Q::one())]),
        }
    }

    /// Convenience constructor from integer coefficients.
    pub fn from_ints(level: u32, terms: &[(Vec<u32>, i64)]) -> Result<Self> {
        let dim = terms.first().map_or(0, |(e, _)| e.len());
        Self::new(
            level,
            dim,
            terms
                .iter()
                .map(|(e, a)| (Exponent::new(e.clone()), rational::q(*a))),
        )
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficient(&self, e: &Exponent) -> Q {
        self.coeffs.get(e).cloned().unwrap_or_else(Q::zero)
    }

    /// Nonzero terms in increasing lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Exponent, &Q)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lexicographically smallest exponent with a nonzero coefficient.
    pub fn valuation(&self) -> Result<Exponent> {
        self.coeffs.keys().next().cloned().ok_or(Error::ZeroSection)
    }

    pub fn leading_coefficient(&self) -> Result<Q> {
        self.coeffs
            .values()
            .next()
            .cloned()
            .ok_or(Error::ZeroSection)
    }

    pub fn add(&self, other: &Section) -> Result<Section> {
        if self.level != other.level {
            return Err(Error::Precondition(format!(
                "cannot add sections of levels {} and {}",
                self.level, other.level
            )));
        }
        Section::new(
            self.level,
            self.dim,
            self.coeffs
                .iter()
                .chain(other.coeffs.iter())
                .map(|(e, a)| (e.clone(), a.clone())),
        )
    }

    pub fn scale(&self, c: &Q) -> Section {
        Section::new(
            self.level,
            self.dim,
            self.coeffs.iter().map(|(e, a)| (e.clone(), a * c)),
        )
        .expect("same dimension")
    }

    /// Product in the graded ring; the level adds.
    pub fn multiply(&self, other: &Section, max_level: u32) -> Result<Section> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let level = self.level + other.level;
        if level > max_level {
            return Err(Error::LevelTooLarge {
                level,
                max: max_level,
            });
        }
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for (e1, a1) in &self.coeffs {
            for (e2, a2) in &other.coeffs {
                terms.push((e1.add(e2), a1 * a2));
            }
        }
        Section::new(level, self.dim, terms)
    }
}

/// How a toric pair was described.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesKind {
    ProjectiveSpace(usize),
    Polytope(Vec<Vec<i64>>),
}

/// A point `α = β / m` of the grid `Λ_m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GridPoint {
    pub level: u32,
    pub numerator: Exponent,
}

impl GridPoint {
    pub fn new(level: u32, numerator: Exponent) -> Self {
        Self { level, numerator }
    }

    pub fn coords(&self) -> Vec<Q> {
        self.numerator
            .entries()
            .iter()
            .map(|&b| rational::q_frac(b as i64, self.level as i64))
            .collect()
    }

    pub fn coords_f64(&self) -> Vec<f64> {
        self.numerator
            .entries()
            .iter()
            .map(|&b| b as f64 / self.level as f64)
            .collect()
    }

    /// The same point seen on the grid of level `k·m`.
    pub fn refine(&self, k: u32) -> GridPoint {
        GridPoint {
            level: self.level * k,
            numerator: self.numerator.scale(k),
        }
    }
}

/// `H⁰(X, mL)(mα)`: the coset `t^{mα} + span{t^β : β > mα}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetSpec {
    pub level: u32,
    pub leading: Exponent,
    pub free: Vec<Exponent>,
}

/// The graded series of a polytope-defined toric pair with the origin as a
/// vertex of its polytope.
#[derive(Debug, Clone)]
pub struct ToricSeries {
    kind: SeriesKind,
    polytope: Polytope,
    vertices: Vec<Vec<i64>>,
    max_level: u32,
}

pub fn default_max_level(d: usize) -> u32 {
    match d {
        1 => 200,
        2 => 40,
        _ => 20,
    }
}

impl ToricSeries {
    pub fn projective(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidPolytope(
                "projective space of dimension 0".into(),
            ));
        }
        let mut vertices = vec![vec![0i64; d]];
        for i in 0..d {
            let mut e = vec![0; d];
            e[i] = 1;
            vertices.push(e);
        }
        Ok(Self {
            kind: SeriesKind::ProjectiveSpace(d),
            polytope: Polytope::standard_simplex(d),
            vertices,
            max_level: default_max_level(d),
        })
    }

    /// Series of the lattice polytope with the given vertices. The origin must
    /// be a vertex and the polytope must lie in the nonnegative orthant.
    pub fn from_vertices(vertices: Vec<Vec<i64>>) -> Result<Self> {
        let polytope = Polytope::from_integer_points(&vertices)?;
        let d = polytope.dim();
        if d == 0 {
            return Err(Error::InvalidPolytope("zero-dimensional polytope".into()));
        }
        if polytope.is_degenerate() {
            return Err(Error::InvalidPolytope(
                "polytope is not full-dimensional".into(),
            ));
        }
        if vertices.iter().flatten().any(|&x| x < 0) {
            return Err(Error::InvalidPolytope(
                "vertices must lie in the nonnegative orthant".into(),
            ));
        }
        let origin = vec![rational::q(0); d];
        if !polytope.vertices().contains(&origin) {
            return Err(Error::InvalidPolytope("the origin must be a vertex".into()));
        }
        let canonical: Vec<Vec<i64>> = polytope
            .vertices()
            .iter()
            .map(|v| {
                v.iter()
                    .map(|x| x.to_integer().try_into().expect("small"))
                    .collect()
            })
            .collect();
        Ok(Self {
            kind: SeriesKind::Polytope(canonical.clone()),
            polytope,
            vertices: canonical,
            max_level: default_max_level(d),
        })
    }

    pub fn with_max_level(mut self, max_level: u32) -> Self {
        self.max_level = max_level;
        self
    }

    pub fn kind(&self) -> &SeriesKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.polytope.dim()
    }

    pub fn polytope(&self) -> &Polytope {
        &self.polytope
    }

    /// Integer vertices of the polytope.
    pub fn vertices(&self) -> &[Vec<i64>] {
        &self.vertices
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn is_projective(&self) -> bool {
        matches!(self.kind, SeriesKind::ProjectiveSpace(_))
    }

    fn check_level(&self, m: u32) -> Result<()> {
        if m == 0 {
            return Err(Error::ZeroLevel);
        }
        if m > self.max_level {
            return Err(Error::LevelTooLarge {
                level: m,
                max: self.max_level,
            });
        }
        Ok(())
    }

    /// Lattice points of `mP` in increasing lexicographic order.
    pub fn level_basis(&self, m: u32) -> Result<Vec<Exponent>> {
        self.check_level(m)?;
        Ok(self.lattice_points(m))
    }

    /// Same as [`level_basis`](Self::level_basis) without the max-level guard.
    pub(crate) fn lattice_points(&self, m: u32) -> Vec<Exponent> {
        let d = self.dim();
        let mut out = Vec::new();
        match self.kind {
            SeriesKind::ProjectiveSpace(_) => {
                let mut cur = vec![0u32; d];
                simplex_points(&mut cur, 0, m, &mut out);
            }
            SeriesKind::Polytope(_) => {
                let (_, hi) = self.polytope.bounding_box();
                let bounds: Vec<i64> = hi
                    .iter()
                    .map(|x| {
                        (x * rational::q(m as i64))
                            .floor()
                            .to_integer()
                            .try_into()
                            .unwrap()
                    })
                    .collect();
                let mut cur = vec![0i64; d];
                loop {
                    if self.polytope.contains_scaled(&cur, m) {
                        out.push(Exponent::new(cur.iter().map(|&x| x as u32).collect()));
                    }
                    // odometer in lex order: last coordinate fastest
                    let mut i = d;
                    loop {
                        if i == 0 {
                            return out;
                        }
                        i -= 1;
                        if cur[i] < bounds[i] {
                            cur[i] += 1;
                            for c in cur.iter_mut().skip(i + 1) {
                                *c = 0;
                            }
                            break;
                        }
                    }
                }
            }
        }
        out
    }

    /// `N_m = dim H⁰(X, mL)`, the number of lattice points of `mP`.
    pub fn basis_size(&self, m: u32) -> usize {
        match self.kind {
            SeriesKind::ProjectiveSpace(d) => binomial(m as u64 + d as u64, d as u64) as usize,
            SeriesKind::Polytope(_) => self.lattice_points(m).len(),
        }
    }

    /// `Λ_m = (1/m) ν(H⁰(X, mL))`.
    pub fn lambda_m(&self, m: u32) -> Result<Vec<GridPoint>> {
        Ok(self
            .level_basis(m)?
            .into_iter()
            .map(|b| GridPoint::new(m, b))
            .collect())
    }

    pub fn contains_exponent(&self, m: u32, beta: &Exponent) -> bool {
        beta.dim() == self.dim() && self.polytope.contains_scaled(&beta.as_i64(), m)
    }

    /// Normalized coset for `α ∈ Λ_m` given in rational coordinates.
    pub fn coset(&self, m: u32, alpha: &[Q]) -> Result<CosetSpec> {
        self.check_level(m)?;
        if alpha.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: alpha.len(),
            });
        }
        let mq = rational::q(m as i64);
        let mut entries = Vec::with_capacity(alpha.len());
        for a in alpha {
            let scaled = a * &mq;
            if !rational::is_integer(&scaled) || scaled < rational::q(0) {
                return Err(Error::NotInGrid {
                    level: m,
                    detail: format!("m·α has non-integral coordinate {scaled}"),
                });
            }
            entries.push(scaled.to_integer().try_into().expect("small exponent"));
        }
        self.coset_at(m, &Exponent::new(entries))
    }

    pub fn coset_at(&self, m: u32, leading: &Exponent) -> Result<CosetSpec> {
        let basis = self.level_basis(m)?;
        let Ok(pos) = basis.binary_search(leading) else {
            return Err(Error::NotInGrid {
                level: m,
                detail: format!("{leading} is not in mP"),
            });
        };
        Ok(CosetSpec {
            level: m,
            leading: leading.clone(),
            free: basis[pos + 1..].to_vec(),
        })
    }

    /// Checks that a section's support lies in its level basis.
    pub fn validate_section(&self, s: &Section) -> Result<()> {
        if s.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: s.dim(),
            });
        }
        for (e, _) in s.terms() {
            if !self.contains_exponent(s.level(), e) {
                return Err(Error::NotInGrid {
                    level: s.level(),
                    detail: format!("{e} not in mP"),
                });
            }
        }
        Ok(())
    }
}

fn simplex_points(cur: &mut Vec<u32>, i: usize, budget: u32, out: &mut Vec<Exponent>) {
    if i == cur.len() {
        out.push(Exponent::new(cur.clone()));
        return;
    }
    for b in 0..=budget {
        cur[i] = b;
        simplex_points(cur, i + 1, budget - b, out);
    }
    cur[i] = 0;
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, q_frac};
    use proptest::prelude::*;

    fn e(v: &[u32]) -> Exponent {
        Exponent::new(v.to_vec())
    }

    #[test]
    fn lex_examples() {
        assert_eq!(
            lex_compare(&e(&[0, 1]), &e(&[1, 0])).unwrap(),
            Ordering::Less
        );
        assert_eq!(
            lex_compare(&e(&[2, 3]), &e(&[2, 3])).unwrap(),
            Ordering::Equal
        );
        assert_eq!(
            lex_compare(&e(&[1, 0, 5]), &e(&[1, 1, 0])).unwrap(),
            Ordering::Less
        );
        assert!(lex_compare(&e(&[1]), &e(&[1, 0])).is_err());
    }

    #[test]
    fn valuation_examples() {
        let s = Section::from_ints(2, &[(vec![1], 1), (vec![2], -1)]).unwrap();
        assert_eq!(s.valuation().unwrap(), e(&[1]));
        let s = Section::from_ints(1, &[(vec![0, 0], 3), (vec![0, 1], 1)]).unwrap();
        assert_eq!(s.valuation().unwrap(), e(&[0, 0]));
        let s = Section::from_ints(3, &[(vec![1, 2], 1), (vec![2, 1], 1)]).unwrap();
        assert_eq!(s.valuation().unwrap(), e(&[1, 2]));
        assert_eq!(Section::zero(1, 2).valuation(), Err(Error::ZeroSection));
        // cancelling terms leave the zero section
        let s = Section::from_ints(1, &[(vec![1], 2), (vec![1], -2)]).unwrap();
        assert!(s.is_zero());
    }

    #[test]
    fn level_basis_examples() {
        let p1 = ToricSeries::projective(1).unwrap();
        assert_eq!(p1.level_basis(2).unwrap(), vec![e(&[0]), e(&[1]), e(&[2])]);
        let p2 = ToricSeries::projective(2).unwrap();
        assert_eq!(
            p2.level_basis(1).unwrap(),
            vec![e(&[0, 0]), e(&[0, 1]), e(&[1, 0])]
        );
        let sq = ToricSeries::from_vertices(vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]])
            .unwrap();
        let b = sq.level_basis(2).unwrap();
        assert_eq!(b.len(), 9);
        assert_eq!(b.first().unwrap(), &e(&[0, 0]));
        assert_eq!(b.last().unwrap(), &e(&[2, 2]));
        assert!(p1.level_basis(0).is_err());
        assert!(p1.level_basis(201).is_err());
    }

    #[test]
    fn polytope_basis_matches_projective_formula() {
        let simplex = ToricSeries::from_vertices(vec![vec![0, 0], vec![1, 0], vec![0, 1]]).unwrap();
        let p2 = ToricSeries::projective(2).unwrap();
        for m in 1..8 {
            assert_eq!(simplex.level_basis(m).unwrap(), p2.level_basis(m).unwrap());
            assert_eq!(p2.basis_size(m), ((m + 1) * (m + 2) / 2) as usize);
        }
    }

    #[test]
    fn rejects_bad_polytopes() {
        assert!(ToricSeries::from_vertices(vec![vec![1, 0], vec![2, 0], vec![1, 1]]).is_err());
        assert!(ToricSeries::from_vertices(vec![vec![0, 0], vec![1, 1], vec![2, 2]]).is_err());
        assert!(ToricSeries::from_vertices(vec![vec![0, 0], vec![-1, 0], vec![0, 1]]).is_err());
    }

    #[test]
    fn lambda_examples() {
        let p1 = ToricSeries::projective(1).unwrap();
        let l2: Vec<Vec<Q>> = p1
            .lambda_m(2)
            .unwrap()
            .iter()
            .map(GridPoint::coords)
            .collect();
        assert_eq!(l2, vec![vec![q(0)], vec![q_frac(1, 2)], vec![q(1)]]);
        assert_eq!(p1.lambda_m(1).unwrap().len(), 2);
        let p2 = ToricSeries::projective(2).unwrap();
        assert_eq!(p2.lambda_m(2).unwrap().len(), 6);
    }

    #[test]
    fn coset_examples() {
        let p1 = ToricSeries::projective(1).unwrap();
        let c = p1.coset(2, &[q_frac(1, 2)]).unwrap();
        assert_eq!(c.leading, e(&[1]));
        assert_eq!(c.free, vec![e(&[2])]);
        let c = p1.coset(2, &[q(1)]).unwrap();
        assert!(c.free.is_empty());
        let p2 = ToricSeries::projective(2).unwrap();
        let c = p2.coset(1, &[q(0), q(0)]).unwrap();
        assert_eq!(c.free, vec![e(&[0, 1]), e(&[1, 0])]);
        assert!(p1.coset(2, &[q_frac(1, 3)]).is_err());
        assert!(p1.coset(2, &[q(2)]).is_err());
    }

    #[test]
    fn multiply_examples() {
        let one_plus_t = Section::from_ints(1, &[(vec![0], 1), (vec![1], 1)]).unwrap();
        let sq = one_plus_t.multiply(&one_plus_t, 200).unwrap();
        assert_eq!(
            sq,
            Section::from_ints(2, &[(vec![0], 1), (vec![1], 2), (vec![2], 1)]).unwrap()
        );
        let a = Section::monomial(1, e(&[1, 0]));
        let b = Section::monomial(1, e(&[0, 1]));
        assert_eq!(
            a.multiply(&b, 40).unwrap(),
            Section::monomial(2, e(&[1, 1]))
        );
        assert!(sq.multiply(&sq, 3).is_err());
    }

    fn arb_exponent(d: usize) -> impl Strategy<Value = Exponent> {
        prop::collection::vec(0u32..6, d).prop_map(Exponent::new)
    }

    fn arb_section(d: usize) -> impl Strategy<Value = Section> {
        prop::collection::vec((arb_exponent(d), -5i64..=5), 1..6).prop_filter_map(
            "nonzero",
            move |terms| {
                let s = Section::new(3, d, terms.into_iter().map(|(e, a)| (e, q(a)))).unwrap();
                (!s.is_zero()).then_some(s)
            },
        )
    }

    /// Brute-force product: expand every pair of terms and pick the smallest
    /// surviving exponent by scanning all of them.
    fn brute_force_product_valuation(s: &Section, t: &Section) -> Exponent {
        let mut acc: Vec<(Exponent, Q)> = Vec::new();
        for (e1, a1) in s.terms() {
            for (e2, a2) in t.terms() {
                let e = e1.add(e2);
                match acc.iter_mut().find(|(x, _)| *x == e) {
                    Some((_, c)) => *c += a1 * a2,
                    None => acc.push((e, a1 * a2)),
                }
            }
        }
        acc.into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(e, _)| e)
            .min()
            .unwrap()
    }

    proptest! {
        #[test]
        fn lex_is_total_and_additive(a in arb_exponent(3), b in arb_exponent(3), c in arb_exponent(3)) {
            let ab = lex_compare(&a, &b).unwrap();
            prop_assert_eq!(ab.reverse(), lex_compare(&b, &a).unwrap());
            if a <= b && b <= c {
                prop_assert!(a <= c);
            }
            if a <= b {
                prop_assert!(a.add(&c) <= b.add(&c));
            }
        }

        #[test]
        fn valuation_is_additive(s in arb_section(2), t in arb_section(2)) {
            let p = s.multiply(&t, 40).unwrap();
            let expected = s.valuation().unwrap().add(&t.valuation().unwrap());
            prop_assert_eq!(p.valuation().unwrap(), expected.clone());
            prop_assert_eq!(brute_force_product_valuation(&s, &t), expected);
        }

        #[test]
        fn valuation_of_sum(s in arb_section(2), t in arb_section(2)) {
            let sum = s.add(&t).unwrap();
            let (vs, vt) = (s.valuation().unwrap(), t.valuation().unwrap());
            if !sum.is_zero() {
                let v = sum.valuation().unwrap();
                prop_assert!(v >= vs.clone().min(vt.clone()));
                if vs != vt {
                    prop_assert_eq!(v, vs.min(vt));
                }
            }
        }

        #[test]
        fn grids_refine_along_multiples(m in 1u32..8, k in 1u32..4) {
            let p2 = ToricSeries::projective(2).unwrap();
            let coarse = p2.lambda_m(m).unwrap();
            prop_assert_eq!(coarse.len(), p2.basis_size(m));
            let fine = p2.lambda_m(m * k).unwrap();
            for g in coarse {
                let r = g.refine(k);
                prop_assert!(fine.contains(&r));
            }
        }
    }
}
