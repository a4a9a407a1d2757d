//! Translation-invariant local interactions and cluster coefficients.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{Coord, DimerConfig, EdgeRef, EdgeType, Face, Parity};

/// Faces whose parallel pairs a spec counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sublattice {
    All,
    EvenFacesOnly,
    OddFacesOnly,
}

/// One term `c_s 1_{P_s}`; pattern edges are relative to the base black vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    pub pattern: Vec<EdgeRef>,
}

impl Term {
    fn normalized(&self) -> Vec<EdgeRef> {
        normalize(&self.pattern)
    }
}

fn normalize(edges: &[EdgeRef]) -> Vec<EdgeRef> {
    let base = edges.iter().map(|e| e.black).min().expect("nonempty");
    let mut v: Vec<EdgeRef> = edges.iter().map(|e| e.translate((-base.x1, -base.x2))).collect();
    v.sort();
    v
}

fn planar_touch(e: &EdgeRef, f: &EdgeRef) -> bool {
    e.black == f.black || e.white() == f.white()
}

/// `f(M) = sum_s c_s 1_{P_s}(M)`, summed over all translations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, try_from = "RawSpec")]
pub struct InteractionSpec {
    pub terms: Vec<Term>,
    pub sublattice: Sublattice,
    #[serde(skip)]
    by_type: [Vec<(usize, (i64, i64))>; 4],
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    terms: Vec<Term>,
    sublattice: Sublattice,
}

impl TryFrom<RawSpec> for InteractionSpec {
    type Error = Error;
    fn try_from(r: RawSpec) -> Result<Self> {
        InteractionSpec::new(r.terms, r.sublattice)
    }
}

impl InteractionSpec {
    pub fn new(terms: Vec<Term>, sublattice: Sublattice) -> Result<Self> {
        for (i, t) in terms.iter().enumerate() {
            if t.pattern.len() < 2 {
                return Err(Error::Invalid(format!("term {i}: patterns need at least two edges")));
            }
            if !t.coeff.is_finite() {
                return Err(Error::Invalid(format!("term {i}: coefficient is not finite")));
            }
            for (a, e) in t.pattern.iter().enumerate() {
                if t.pattern[..a].iter().any(|f| planar_touch(e, f)) {
                    return Err(Error::Invalid(format!("term {i}: pattern edges must be disjoint")));
                }
            }
            if terms[..i].iter().any(|s| s.normalized() == t.normalized()) {
                return Err(Error::Invalid(format!("term {i}: pattern is a translate of an earlier one")));
            }
        }
        let mut by_type: [Vec<(usize, (i64, i64))>; 4] = Default::default();
        for (s, t) in terms.iter().enumerate() {
            for e in &t.pattern {
                by_type[e.r.idx()].push((s, (e.black.x1, e.black.x2)));
            }
        }
        Ok(InteractionSpec { terms, sublattice, by_type })
    }

    fn face_terms(parities: &[Parity], sublattice: Sublattice) -> Self {
        let mut terms = Vec::new();
        for &p in parities {
            let (h, v) = Face { anchor: Coord::new(0, 0), parity: p }.pairs();
            terms.push(Term { coeff: 1.0, pattern: h.to_vec() });
            terms.push(Term { coeff: 1.0, pattern: v.to_vec() });
        }
        Self::new(terms, sublattice).expect("face patterns are valid")
    }

    /// True when `(term s, translation x)` holds in `m`.
    fn term_holds(&self, m: &DimerConfig, s: usize, x: Coord) -> bool {
        self.terms[s].pattern.iter().all(|e| m.occupied(e.translate((x.x1, x.x2))))
    }

    /// `(term, translation)` pairs whose pattern contains an edge `(b, r)`.
    fn touching(&self, b: Coord, r: EdgeType, out: &mut Vec<(usize, Coord)>) {
        for &(s, o) in &self.by_type[r.idx()] {
            let x = b.shift(-o.0, -o.1);
            if !out.contains(&(s, x)) {
                out.push((s, x));
            }
        }
    }

    /// Pattern translates, as `(term, translation)`, that contain edge `e`.
    pub fn translates_containing(&self, e: EdgeRef) -> Vec<(usize, Coord)> {
        let mut v = Vec::new();
        self.touching(e.black, e.r, &mut v);
        v
    }
}

/// Faces bordered by two parallel dimers, over both face classes.
pub fn plaquette_spec() -> InteractionSpec {
    InteractionSpec::face_terms(&[Parity::Odd, Parity::Even], Sublattice::All)
}

/// The six-vertex interaction: parallel pairs on even faces only.
pub fn sixv_spec() -> InteractionSpec {
    InteractionSpec::face_terms(&[Parity::Even], Sublattice::EvenFacesOnly)
}

/// Parallel pairs on odd faces only.
pub fn sixv_odd_spec() -> InteractionSpec {
    InteractionSpec::face_terms(&[Parity::Odd], Sublattice::OddFacesOnly)
}

pub fn energy(m: &DimerConfig, spec: &InteractionSpec) -> f64 {
    let l = m.l();
    let mut e = 0.0;
    for i in 0..l * l {
        let x = Coord::from_index(i, l);
        for (s, t) in spec.terms.iter().enumerate() {
            if spec.term_holds(m, s, x) {
                e += t.coeff;
            }
        }
    }
    e
}

/// The edge changes of flipping `face`: `(black, old type, new type)` twice.
pub fn flip_changes(m: &DimerConfig, face: Face) -> Result<[(Coord, EdgeType, EdgeType); 2]> {
    let (h, v) = face.pairs();
    let (from, to) = if h.iter().all(|e| m.occupied(*e)) {
        (h, v)
    } else if v.iter().all(|e| m.occupied(*e)) {
        (v, h)
    } else {
        return Err(Error::NotFlippable);
    };
    // both pairs use the same two black vertices, in the same order
    Ok([(from[0].black, from[0].r, to[0].r), (from[1].black, from[1].r, to[1].r)])
}

/// Rotates the two parallel dimers around `face`.
pub fn flip(m: &mut DimerConfig, face: Face) -> Result<()> {
    for (b, _, new) in flip_changes(m, face)? {
        m.set_type(b, new);
    }
    Ok(())
}

pub(crate) fn local_energy(m: &DimerConfig, spec: &InteractionSpec, affected: &[(usize, Coord)]) -> f64 {
    affected.iter().filter(|(s, x)| spec.term_holds(m, *s, *x)).map(|(s, _)| spec.terms[*s].coeff).sum()
}

pub(crate) fn affected_terms(
    spec: &InteractionSpec,
    changes: &[(Coord, EdgeType, EdgeType)],
    out: &mut Vec<(usize, Coord)>,
) {
    out.clear();
    for &(b, old, new) in changes {
        spec.touching(b, old, out);
        spec.touching(b, new, out);
    }
}

/// `energy(flip(M)) - energy(M)` from the neighbourhood of the face.
pub fn delta_energy(m: &DimerConfig, face: Face, spec: &InteractionSpec) -> Result<f64> {
    let changes = flip_changes(m, face)?;
    let mut affected = Vec::new();
    affected_terms(spec, &changes, &mut affected);
    let before = local_energy(m, spec, &affected);
    let mut n = m.clone();
    for (b, _, new) in changes {
        n.set_type(b, new);
    }
    Ok(local_energy(&n, spec, &affected) - before)
}

/// A set of pairwise disjoint edges in the plane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterGamma {
    edges: Vec<EdgeRef>,
}

/// Position of a vertex in the plane embedding.
fn embed(c: Coord, white: bool) -> (i64, i64) {
    (c.x1 + c.x2 + white as i64, c.x2 - c.x1)
}

fn edge_distance(e: &EdgeRef, f: &EdgeRef) -> i64 {
    let pe = [embed(e.black, false), embed(e.white(), true)];
    let pf = [embed(f.black, false), embed(f.white(), true)];
    pe.iter().flat_map(|a| pf.iter().map(move |b| (a.0 - b.0).abs() + (a.1 - b.1).abs())).min().unwrap()
}

impl ClusterGamma {
    pub fn new(edges: Vec<EdgeRef>) -> Result<Self> {
        if edges.len() < 2 {
            return Err(Error::Invalid("a cluster needs at least two edges".into()));
        }
        for (i, e) in edges.iter().enumerate() {
            if edges[..i].iter().any(|f| planar_touch(e, f)) {
                return Err(Error::Invalid("cluster edges must be pairwise disjoint".into()));
            }
        }
        Ok(ClusterGamma { edges: normalize(&edges) })
    }

    pub fn edges(&self) -> &[EdgeRef] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Tree distance: minimum spanning tree length over the edges, with the
    /// lattice distance between nearest endpoints as the link length.
    pub fn tree_distance(&self) -> i64 {
        let n = self.edges.len();
        let mut in_tree = vec![false; n];
        let mut best = vec![i64::MAX; n];
        best[0] = 0;
        let mut total = 0;
        for _ in 0..n {
            let i = (0..n).filter(|&i| !in_tree[i]).min_by_key(|&i| best[i]).unwrap();
            in_tree[i] = true;
            total += best[i];
            for j in 0..n {
                if !in_tree[j] {
                    best[j] = best[j].min(edge_distance(&self.edges[i], &self.edges[j]));
                }
            }
        }
        total
    }
}

/// `c(gamma) = (-1)^{|gamma|} sum_Y prod_{B in Y} (exp(lambda c_B) - 1)` over
/// connected collections Y of pattern translates whose union is gamma.
pub fn cluster_coefficient(gamma: &ClusterGamma, spec: &InteractionSpec, lambda: f64) -> Result<f64> {
    let n = gamma.len();
    if n > 4 {
        return Err(Error::TooLarge(n));
    }
    let g: BTreeSet<EdgeRef> = gamma.edges.iter().copied().collect();
    let mut cands: Vec<(usize, Vec<EdgeRef>)> = Vec::new();
    for e in &gamma.edges {
        for (s, x) in spec.translates_containing(*e) {
            let b: Vec<EdgeRef> = spec.terms[s].pattern.iter().map(|p| p.translate((x.x1, x.x2))).collect();
            if b.iter().all(|f| g.contains(f)) && !cands.iter().any(|(t, c)| *t == s && *c == b) {
                cands.push((s, b));
            }
        }
    }
    let m = cands.len();
    let mut total = 0.0;
    for mask in 1u32..(1u32 << m) {
        let chosen: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
        let union: BTreeSet<EdgeRef> = chosen.iter().flat_map(|&i| cands[i].1.iter().copied()).collect();
        if union != g || !connected(&chosen, &cands) {
            continue;
        }
        total += chosen.iter().map(|&i| (lambda * spec.terms[cands[i].0].coeff).exp_m1()).product::<f64>();
    }
    Ok(if n % 2 == 0 { total } else { -total })
}

fn connected(chosen: &[usize], cands: &[(usize, Vec<EdgeRef>)]) -> bool {
    let k = chosen.len();
    let mut seen = vec![false; k];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(i) = stack.pop() {
        for j in 0..k {
            if !seen[j] && cands[chosen[i]].1.iter().any(|e| cands[chosen[j]].1.contains(e)) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Fitted constants of `|c(gamma)| <= (a |lambda|)^{max(1, b delta(gamma))}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterBound {
    pub a: f64,
    pub b: f64,
    pub ok: bool,
}

/// Finds the largest `b` on a grid in `(0, 1]` for which the smallest
/// admissible `a` still gives `a |lambda| < 1`.
pub fn verify_cluster_bound(spec: &InteractionSpec, lambda: f64, family: &[ClusterGamma]) -> Result<ClusterBound> {
    let data: Vec<(f64, f64)> = family
        .iter()
        .map(|g| Ok((cluster_coefficient(g, spec, lambda)?.abs(), g.tree_distance() as f64)))
        .collect::<Result<_>>()?;
    if data.iter().all(|(c, _)| *c == 0.0) || lambda == 0.0 {
        return Ok(ClusterBound { a: 0.0, b: 1.0, ok: true });
    }
    let lam = lambda.abs();
    let mut last = ClusterBound { a: f64::INFINITY, b: 0.0, ok: false };
    for step in (1..=20).rev() {
        let b = step as f64 / 20.0;
        let a = data
            .iter()
            .filter(|(c, _)| *c > 0.0)
            .map(|(c, d)| c.powf(1.0 / (b * d).max(1.0)) / lam)
            .fold(0.0, f64::max);
        last = ClusterBound { a, b, ok: a * lam < 1.0 };
        if last.ok {
            return Ok(last);
        }
    }
    Ok(last)
}

/// All clusters of at most `max_size` edges that are unions of connected
/// collections of pattern translates, up to translation.
pub fn connected_clusters(spec: &InteractionSpec, max_size: usize) -> Vec<ClusterGamma> {
    let mut found: BTreeSet<Vec<EdgeRef>> = BTreeSet::new();
    let mut frontier: Vec<Vec<EdgeRef>> = spec.terms.iter().map(|t| normalize(&t.pattern)).collect();
    while let Some(g) = frontier.pop() {
        if g.len() > max_size || !found.insert(g.clone()) {
            continue;
        }
        for e in &g {
            for (s, x) in spec.translates_containing(*e) {
                let mut h = g.clone();
                for p in &spec.terms[s].pattern {
                    let q = p.translate((x.x1, x.x2));
                    if !h.contains(&q) {
                        h.push(q);
                    }
                }
                let disjoint = h.iter().enumerate().all(|(i, a)| h[..i].iter().all(|b| !planar_touch(a, b)));
                if disjoint && h.len() <= max_size {
                    frontier.push(normalize(&h));
                }
            }
        }
    }
    found.into_iter().map(|edges| ClusterGamma { edges }).collect()
}
