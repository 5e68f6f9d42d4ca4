//! Exact rational polytopes: hulls, facets, fan triangulation and volume.

use std::cmp::Ordering;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::rational::{self, to_f64, Q};

/// Closed halfspace `normal · x <= offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Halfspace {
    pub normal: Vec<Q>,
    pub offset: Q,
}

impl Halfspace {
    fn slack(&self, x: &[Q]) -> Q {
        &self.offset - dot(&self.normal, x)
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        !self.slack(x).is_negative()
    }

    pub fn contains_f64(&self, x: &[f64], tol: f64) -> bool {
        let lhs: f64 = self.normal.iter().zip(x).map(|(a, b)| to_f64(a) * b).sum();
        lhs <= to_f64(&self.offset) + tol
    }
}

/// A convex polytope stored by its (irredundant, sorted) vertex list and, when
/// full-dimensional, its facet inequalities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<Q>>,
    facets: Vec<Halfspace>,
    affine_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Volume {
    pub value: Q,
    /// Set when the hull is lower-dimensional; `value` is then zero.
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PolytopeJson {
    pub dim: usize,
    pub vertices: Vec<Vec<String>>,
}

impl Polytope {
    /// Convex hull of a finite point set.
    pub fn hull(points: Vec<Vec<Q>>) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::InvalidPolytope("empty point set".into()))?;
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: p.len(),
            });
        }
        let mut pts = points;
        pts.sort();
        pts.dedup();
        let affine_dim = affine_rank(&pts);
        if affine_dim < dim {
            let vertices = degenerate_vertices(&pts, affine_dim);
            return Ok(Self {
                dim,
                vertices,
                facets: Vec::new(),
                affine_dim,
            });
        }
        let facets = facets_full_dim(&pts);
        let mut vertices: Vec<Vec<Q>> = pts
            .iter()
            .filter(|p| is_vertex(p, &facets, dim))
            .cloned()
            .collect();
        vertices.sort();
        Ok(Self {
            dim,
            vertices,
            facets,
            affine_dim,
        })
    }

    pub fn from_integer_points(points: &[Vec<i64>]) -> Result<Self> {
        Self::hull(
            points
                .iter()
                .map(|p| p.iter().map(|&x| rational::q(x)).collect())
                .collect(),
        )
    }

    /// The standard simplex `conv(0, e_1, ..., e_d)`.
    pub fn standard_simplex(d: usize) -> Self {
        let mut pts = vec![vec![0i64; d]];
        for i in 0..d {
            let mut e = vec![0; d];
            e[i] = 1;
            pts.push(e);
        }
        Self::from_integer_points(&pts).expect("simplex is valid")
    }

    pub fn unit_cube(d: usize) -> Self {
        let pts: Vec<Vec<i64>> = (0..1usize << d)
            .map(|mask| (0..d).map(|i| ((mask >> i) & 1) as i64).collect())
            .collect();
        Self::from_integer_points(&pts).expect("cube is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<Q>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Halfspace] {
        &self.facets
    }

    pub fn is_degenerate(&self) -> bool {
        self.affine_dim < self.dim
    }

    pub fn affine_dim(&self) -> usize {
        self.affine_dim
    }

    pub fn contains(&self, x: &[Q]) -> bool {
        if self.is_degenerate() {
            return false;
        }
        self.facets.iter().all(|h| h.contains(x))
    }

    /// Membership of the scaled lattice point: `beta ∈ m·P`.
    pub fn contains_scaled(&self, beta: &[i64], m: u32) -> bool {
        let mq = rational::q(m as i64);
        let x: Vec<Q> = beta.iter().map(|&b| rational::q(b)).collect();
        self.facets
            .iter()
            .all(|h| dot(&h.normal, &x) <= &h.offset * &mq)
    }

    pub fn contains_in_interior(&self, x: &[Q]) -> bool {
        !self.is_degenerate() && self.facets.iter().all(|h| h.slack(x).is_positive())
    }

    pub fn contains_f64(&self, x: &[f64], tol: f64) -> bool {
        !self.is_degenerate() && self.facets.iter().all(|h| h.contains_f64(x, tol))
    }

    /// Coordinatewise bounding box of the vertices.
    pub fn bounding_box(&self) -> (Vec<Q>, Vec<Q>) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices {
            for i in 0..self.dim {
                if v[i] < lo[i] {
                    lo[i] = v[i].clone();
                }
                if v[i] > hi[i] {
                    hi[i] = v[i].clone();
                }
            }
        }
        (lo, hi)
    }

    /// Exact Lebesgue volume via a fan triangulation from the first vertex.
    pub fn volume(&self) -> Volume {
        if self.is_degenerate() {
            return Volume {
                value: Q::zero(),
                degenerate: true,
            };
        }
        let simplices = triangulate(&self.vertices);
        let mut total = Q::zero();
        for s in &simplices {
            total += simplex_volume(&self.vertices, s);
        }
        Volume {
            value: total,
            degenerate: false,
        }
    }

    pub fn minkowski_sum(&self, other: &Polytope) -> Result<Polytope> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut pts = Vec::with_capacity(self.vertices.len() * other.vertices.len());
        for a in &self.vertices {
            for b in &other.vertices {
                pts.push(a.iter().zip(b).map(|(x, y)| x + y).collect());
            }
        }
        Polytope::hull(pts)
    }

    pub fn scale(&self, k: &Q) -> Polytope {
        Polytope::hull(
            self.vertices
                .iter()
                .map(|v| v.iter().map(|x| x * k).collect())
                .collect(),
        )
        .expect("scaling preserves validity")
    }

    pub fn translate(&self, t: &[Q]) -> Polytope {
        Polytope::hull(
            self.vertices
                .iter()
                .map(|v| v.iter().zip(t).map(|(x, y)| x + y).collect())
                .collect(),
        )
        .expect("translation preserves validity")
    }

    pub fn permute_coordinates(&self, perm: &[usize]) -> Polytope {
        Polytope::hull(
            self.vertices
                .iter()
                .map(|v| perm.iter().map(|&i| v[i].clone()).collect())
                .collect(),
        )
        .expect("permutation preserves validity")
    }

    pub fn vertices_f64(&self) -> Vec<Vec<f64>> {
        self.vertices
            .iter()
            .map(|v| v.iter().map(to_f64).collect())
            .collect()
    }

    pub fn to_json(&self) -> PolytopeJson {
        PolytopeJson {
            dim: self.dim,
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().map(|x| x.to_string()).collect())
                .collect(),
        }
    }
}

pub(crate) fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

fn sub(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Row-reduces in place and returns the rank.
fn rank_of(rows: &mut [Vec<Q>]) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&r| !rows[r][col].is_zero()) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank][col].clone();
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let f = &rows[r][col] / &pivot;
                for c in col..ncols {
                    let delta = &f * &rows[rank][c];
                    rows[r][c] -= delta;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn affine_rank(pts: &[Vec<Q>]) -> usize {
    if pts.len() <= 1 {
        return 0;
    }
    let mut diffs: Vec<Vec<Q>> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
    rank_of(&mut diffs)
}

/// Null vector of a (d-1) x d matrix of full row rank.
fn null_vector(rows: &[Vec<Q>], d: usize) -> Option<Vec<Q>> {
    let mut a = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..d {
        let Some(p) = (r..a.len()).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let pivot = a[r][col].clone();
        for c in 0..d {
            a[r][c] = &a[r][c] / &pivot;
        }
        for i in 0..a.len() {
            if i != r && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for c in 0..d {
                    let delta = &f * &a[r][c];
                    a[i][c] -= delta;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    if r != d - 1 {
        return None;
    }
    let free = (0..d).find(|c| !pivots.contains(c))?;
    let mut v = vec![Q::zero(); d];
    v[free] = Q::one();
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -a[row][free].clone();
    }
    Some(v)
}

fn normalize(h: Halfspace) -> Halfspace {
    let scale = h
        .normal
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| x.abs())
        .expect("nonzero normal");
    Halfspace {
        normal: h.normal.iter().map(|x| x / &scale).collect(),
        offset: &h.offset / &scale,
    }
}

fn cross(o: &[Q], a: &[Q], b: &[Q]) -> Q {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Facets of a full-dimensional point set (points sorted and deduplicated).
fn facets_full_dim(pts: &[Vec<Q>]) -> Vec<Halfspace> {
    let d = pts[0].len();
    match d {
        1 => {
            let lo = pts.iter().map(|p| p[0].clone()).min().unwrap();
            let hi = pts.iter().map(|p| p[0].clone()).max().unwrap();
            vec![
                Halfspace {
                    normal: vec![-Q::one()],
                    offset: -lo,
                },
                Halfspace {
                    normal: vec![Q::one()],
                    offset: hi,
                },
            ]
        }
        2 => {
            // Andrew's monotone chain, counter-clockwise, collinear points dropped.
            let mut sorted: Vec<&Vec<Q>> = pts.iter().collect();
            sorted.sort();
            let pts = sorted;
            let mut lower: Vec<&Vec<Q>> = Vec::new();
            for &p in &pts {
                while lower.len() >= 2
                    && !cross(lower[lower.len() - 2], lower[lower.len() - 1], p).is_positive()
                {
                    lower.pop();
                }
                lower.push(p);
            }
            let mut upper: Vec<&Vec<Q>> = Vec::new();
            for &p in pts.iter().rev() {
                while upper.len() >= 2
                    && !cross(upper[upper.len() - 2], upper[upper.len() - 1], p).is_positive()
                {
                    upper.pop();
                }
                upper.push(p);
            }
            lower.pop();
            upper.pop();
            let ring: Vec<&Vec<Q>> = lower.into_iter().chain(upper).collect();
            (0..ring.len())
                .map(|i| {
                    let a = ring[i];
                    let b = ring[(i + 1) % ring.len()];
                    // outward normal of a counter-clockwise edge a -> b
                    let normal = vec![&b[1] - &a[1], &a[0] - &b[0]];
                    let offset = dot(&normal, a);
                    normalize(Halfspace { normal, offset })
                })
                .collect()
        }
        _ => brute_force_facets(pts),
    }
}

fn brute_force_facets(pts: &[Vec<Q>]) -> Vec<Halfspace> {
    let d = pts[0].len();
    let n = pts.len();
    let mut out: Vec<Halfspace> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        let base = &pts[idx[0]];
        let rows: Vec<Vec<Q>> = idx[1..].iter().map(|&i| sub(&pts[i], base)).collect();
        if let Some(normal) = null_vector(&rows, d) {
            let offset = dot(&normal, base);
            let mut pos = false;
            let mut neg = false;
            for p in pts {
                match dot(&normal, p).cmp(&offset) {
                    Ordering::Greater => pos = true,
                    Ordering::Less => neg = true,
                    Ordering::Equal => {}
                }
            }
            let candidate = match (pos, neg) {
                (false, true) => Some(Halfspace { normal, offset }),
                (true, false) => Some(Halfspace {
                    normal: normal.iter().map(|x| -x).collect(),
                    offset: -offset,
                }),
                _ => None,
            };
            if let Some(h) = candidate.map(normalize) {
                if !out.contains(&h) {
                    out.push(h);
                }
            }
        }
        // next combination
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < n - d + i {
                idx[i] += 1;
                for j in i + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn is_vertex(p: &[Q], facets: &[Halfspace], d: usize) -> bool {
    let mut tight: Vec<Vec<Q>> = facets
        .iter()
        .filter(|h| h.slack(p).is_zero())
        .map(|h| h.normal.clone())
        .collect();
    tight.len() >= d && rank_of(&mut tight) == d
}

/// Coordinates whose projection is injective on the affine hull of `pts`.
fn independent_coordinates(pts: &[Vec<Q>], k: usize) -> Vec<usize> {
    let d = pts[0].len();
    let diffs: Vec<Vec<Q>> = pts[1..].iter().map(|p| sub(p, &pts[0])).collect();
    let mut chosen: Vec<usize> = Vec::new();
    for c in 0..d {
        let mut trial = chosen.clone();
        trial.push(c);
        let mut cols: Vec<Vec<Q>> = diffs
            .iter()
            .map(|r| trial.iter().map(|&j| r[j].clone()).collect())
            .collect();
        if rank_of(&mut cols) == trial.len() {
            chosen = trial;
            if chosen.len() == k {
                break;
            }
        }
    }
    chosen
}

fn project(pts: &[Vec<Q>], coords: &[usize]) -> Vec<Vec<Q>> {
    pts.iter()
        .map(|p| coords.iter().map(|&c| p[c].clone()).collect())
        .collect()
}

fn degenerate_vertices(pts: &[Vec<Q>], k: usize) -> Vec<Vec<Q>> {
    if k == 0 {
        return vec![pts[0].clone()];
    }
    let coords = independent_coordinates(pts, k);
    let proj = project(pts, &coords);
    let facets = facets_full_dim(&proj);
    let mut out: Vec<Vec<Q>> = pts
        .iter()
        .zip(&proj)
        .filter(|(_, pp)| is_vertex(pp, &facets, k))
        .map(|(p, _)| p.clone())
        .collect();
    out.sort();
    out
}

/// Fan triangulation of a full-dimensional point set; each simplex is a list
/// of `d + 1` indices into `pts`.
pub(crate) fn triangulate(pts: &[Vec<Q>]) -> Vec<Vec<usize>> {
    let k = pts[0].len();
    if k == 0 || pts.len() == 1 {
        return vec![vec![0]];
    }
    let facets = facets_full_dim(pts);
    let apex = 0;
    let mut out = Vec::new();
    for h in &facets {
        if h.slack(&pts[apex]).is_zero() {
            continue;
        }
        let on: Vec<usize> = (0..pts.len())
            .filter(|&i| h.slack(&pts[i]).is_zero())
            .collect();
        let face: Vec<Vec<Q>> = on.iter().map(|&i| pts[i].clone()).collect();
        // drop one coordinate along which the facet is a graph
        let drop = h
            .normal
            .iter()
            .position(|x| !x.is_zero())
            .expect("nonzero normal");
        let keep: Vec<usize> = (0..k).filter(|&c| c != drop).collect();
        let face_proj = project(&face, &keep);
        for s in triangulate(&face_proj) {
            let mut simplex = vec![apex];
            simplex.extend(s.iter().map(|&j| on[j]));
            out.push(simplex);
        }
    }
    out
}

pub(crate) fn simplex_volume(pts: &[Vec<Q>], simplex: &[usize]) -> Q {
    let base = &pts[simplex[0]];
    let rows: Vec<Vec<Q>> = simplex[1..].iter().map(|&i| sub(&pts[i], base)).collect();
    let k = rows.len();
    let fact: Q = (1..=k as i64).fold(Q::one(), |acc, i| acc * rational::q(i));
    rational::det(&rows).abs() / fact
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, q_frac};

    #[test]
    fn simplex_and_cube_volumes() {
        assert_eq!(Polytope::standard_simplex(2).volume().value, q_frac(1, 2));
        assert_eq!(Polytope::standard_simplex(3).volume().value, q_frac(1, 6));
        assert_eq!(Polytope::unit_cube(2).volume().value, q(1));
        assert_eq!(Polytope::unit_cube(3).volume().value, q(1));
        assert_eq!(Polytope::standard_simplex(1).volume().value, q(1));
    }

    #[test]
    fn redundant_points_are_dropped() {
        let p = Polytope::from_integer_points(&[
            vec![0, 0],
            vec![2, 0],
            vec![1, 0],
            vec![0, 2],
            vec![1, 1],
            vec![0, 1],
        ])
        .unwrap();
        assert_eq!(p.vertices().len(), 3);
        assert_eq!(p.facets().len(), 3);
        assert_eq!(p.volume().value, q(2));
    }

    #[test]
    fn degenerate_hull_is_flagged() {
        let seg = Polytope::from_integer_points(&[vec![0, 0], vec![1, 1], vec![2, 2]]).unwrap();
        assert!(seg.is_degenerate());
        assert_eq!(seg.vertices().len(), 2);
        let v = seg.volume();
        assert!(v.degenerate);
        assert!(v.value.is_zero());
    }

    #[test]
    fn minkowski_examples() {
        let i = Polytope::standard_simplex(1);
        assert_eq!(i.minkowski_sum(&i).unwrap().volume().value, q(2));
        let s = Polytope::standard_simplex(2);
        let ss = s.minkowski_sum(&s).unwrap();
        assert_eq!(ss, s.scale(&q(2)));
        let sq = Polytope::unit_cube(2);
        let seg = Polytope::from_integer_points(&[vec![0, 0], vec![1, 0]]).unwrap();
        let rect = sq.minkowski_sum(&seg).unwrap();
        assert_eq!(
            rect,
            Polytope::from_integer_points(&[vec![0, 0], vec![2, 0], vec![0, 1], vec![2, 1]])
                .unwrap()
        );
        assert!(i.minkowski_sum(&s).is_err());
    }

    #[test]
    fn octahedron_volume_via_brute_force_facets() {
        let p = Polytope::from_integer_points(&[
            vec![1, 0, 0],
            vec![-1, 0, 0],
            vec![0, 1, 0],
            vec![0, -1, 0],
            vec![0, 0, 1],
            vec![0, 0, -1],
        ])
        .unwrap();
        assert_eq!(p.facets().len(), 8);
        assert_eq!(p.volume().value, q_frac(4, 3));
    }

    #[test]
    fn membership() {
        let s = Polytope::standard_simplex(2);
        assert!(s.contains(&[q_frac(1, 3), q_frac(1, 3)]));
        assert!(s.contains(&[q(1), q(0)]));
        assert!(!s.contains_in_interior(&[q(1), q(0)]));
        assert!(!s.contains(&[q(1), q(1)]));
        assert!(s.contains_scaled(&[2, 1], 3));
        assert!(!s.contains_scaled(&[2, 2], 3));
    }
}
