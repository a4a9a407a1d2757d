//! Geometry of the bipartite L x L torus.
//!
//! Black vertex `x` sits at `x1*(1,-1) + x2*(1,1)` in the plane and white
//! vertex `x` one unit to its right. The dimer at black `x` has type `r` and
//! ends on white `x + v_r`. Coordinates are 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{check_even, Error, Result};

/// Lattice coordinate. Torus operations reduce mod L; the raw value is kept
/// so paths and planar computations can use unwrapped positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Coord {
    pub x1: i64,
    pub x2: i64,
}

impl Coord {
    pub const fn new(x1: i64, x2: i64) -> Self {
        Coord { x1, x2 }
    }

    pub fn reduce(self, l: usize) -> Coord {
        let l = l as i64;
        Coord::new(self.x1.rem_euclid(l), self.x2.rem_euclid(l))
    }

    /// Row-major site index on the torus, `x1 + L*x2`.
    pub fn index(self, l: usize) -> usize {
        let c = self.reduce(l);
        c.x1 as usize + l * c.x2 as usize
    }

    pub fn from_index(i: usize, l: usize) -> Coord {
        Coord::new((i % l) as i64, (i / l) as i64)
    }

    pub fn shift(self, d1: i64, d2: i64) -> Coord {
        Coord::new(self.x1 + d1, self.x2 + d2)
    }

    pub fn offset(self, d: (i64, i64)) -> Coord {
        self.shift(d.0, d.1)
    }
}

impl std::ops::Add for Coord {
    type Output = Coord;
    fn add(self, o: Coord) -> Coord {
        Coord::new(self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl std::ops::Sub for Coord {
    type Output = Coord;
    fn sub(self, o: Coord) -> Coord {
        Coord::new(self.x1 - o.x1, self.x2 - o.x2)
    }
}

/// Shortest representative of `d` modulo `l`, in `(-l/2, l/2]`.
pub fn wrap_signed(d: i64, l: usize) -> i64 {
    let l = l as i64;
    let mut r = d.rem_euclid(l);
    if r > l / 2 {
        r -= l;
    }
    r
}

/// Edge type of a dimer, numbered 1..4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum EdgeType {
    T1,
    T2,
    T3,
    T4,
}

impl EdgeType {
    pub const ALL: [EdgeType; 4] = [EdgeType::T1, EdgeType::T2, EdgeType::T3, EdgeType::T4];

    /// 0-based index.
    pub fn idx(self) -> usize {
        self as usize
    }

    /// The paper's label 1..4.
    pub fn label(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_label(r: u8) -> Option<EdgeType> {
        match r {
            1 => Some(EdgeType::T1),
            2 => Some(EdgeType::T2),
            3 => Some(EdgeType::T3),
            4 => Some(EdgeType::T4),
            _ => None,
        }
    }

    /// Offset `v_r` from the black to the white endpoint.
    pub fn v(self) -> (i64, i64) {
        match self {
            EdgeType::T1 => (0, 0),
            EdgeType::T2 => (-1, 0),
            EdgeType::T3 => (-1, -1),
            EdgeType::T4 => (0, -1),
        }
    }

    /// Horizontal in the plane (types 1 and 3) or vertical (2 and 4).
    pub fn is_horizontal(self) -> bool {
        matches!(self, EdgeType::T1 | EdgeType::T3)
    }
}

impl TryFrom<u8> for EdgeType {
    type Error = String;
    fn try_from(r: u8) -> std::result::Result<Self, String> {
        EdgeType::from_label(r).ok_or_else(|| format!("edge type must be 1..4, got {r}"))
    }
}

impl From<EdgeType> for u8 {
    fn from(r: EdgeType) -> u8 {
        r.label()
    }
}

/// An edge, identified by its black endpoint and type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeRef {
    pub black: Coord,
    pub r: EdgeType,
}

impl EdgeRef {
    pub const fn new(black: Coord, r: EdgeType) -> Self {
        EdgeRef { black, r }
    }

    /// Unreduced white endpoint.
    pub fn white(self) -> Coord {
        self.black.offset(self.r.v())
    }

    pub fn reduce(self, l: usize) -> EdgeRef {
        EdgeRef::new(self.black.reduce(l), self.r)
    }

    pub fn translate(self, d: (i64, i64)) -> EdgeRef {
        EdgeRef::new(self.black.offset(d), self.r)
    }

    /// True when the two edges share an endpoint on the L-torus.
    pub fn touches(self, other: EdgeRef, l: usize) -> bool {
        self.black.reduce(l) == other.black.reduce(l) || self.white().reduce(l) == other.white().reduce(l)
    }
}

pub fn white_of(e: EdgeRef, l: usize) -> Coord {
    e.white().reduce(l)
}

/// A perfect matching, stored as the dimer type at each black vertex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DimerConfig {
    l: usize,
    types: Vec<EdgeType>,
}

impl DimerConfig {
    /// Builds a configuration without checking the matching property.
    pub fn from_types(l: usize, types: Vec<EdgeType>) -> Result<Self> {
        check_even(l)?;
        if types.len() != l * l {
            return Err(Error::Invalid(format!("expected {} types, got {}", l * l, types.len())));
        }
        Ok(DimerConfig { l, types })
    }

    pub fn uniform(l: usize, r: EdgeType) -> Result<Self> {
        Self::from_types(l, vec![r; l * l])
    }

    pub fn from_fn(l: usize, f: impl Fn(Coord) -> EdgeType) -> Result<Self> {
        Self::from_types(l, (0..l * l).map(|i| f(Coord::from_index(i, l))).collect())
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn types(&self) -> &[EdgeType] {
        &self.types
    }

    pub fn type_at(&self, x: Coord) -> EdgeType {
        self.types[x.index(self.l)]
    }

    pub fn set_type(&mut self, x: Coord, r: EdgeType) {
        let i = x.index(self.l);
        self.types[i] = r;
    }

    pub fn occupied(&self, e: EdgeRef) -> bool {
        self.type_at(e.black) == e.r
    }

    pub fn counts(&self) -> [usize; 4] {
        let mut n = [0; 4];
        for r in &self.types {
            n[r.idx()] += 1;
        }
        n
    }

    pub fn edges(&self) -> impl Iterator<Item = EdgeRef> + '_ {
        self.types.iter().enumerate().map(move |(i, &r)| EdgeRef::new(Coord::from_index(i, self.l), r))
    }

    /// Shifts the whole configuration by `u`.
    pub fn translate(&self, u: (i64, i64)) -> DimerConfig {
        let l = self.l;
        DimerConfig::from_fn(l, |x| self.type_at(x.shift(-u.0, -u.1))).expect("same size")
    }

    /// Product of edge weights `prod_r t_r^{N_r}`.
    pub fn weight(&self, t: &crate::spectral::EdgeWeights) -> f64 {
        let n = self.counts();
        t.as_array().iter().zip(n).map(|(w, k)| w.powi(k as i32)).product()
    }
}

pub fn validate_config(m: &DimerConfig) -> bool {
    let l = m.l;
    let mut seen = vec![false; l * l];
    for e in m.edges() {
        let w = e.white().index(l);
        if seen[w] {
            return false;
        }
        seen[w] = true;
    }
    true
}

/// All perfect matchings of the L-torus, for L in {2, 4}.
pub fn enumerate_matchings(l: usize) -> Result<impl Iterator<Item = DimerConfig>> {
    check_even(l)?;
    if l > 4 {
        return Err(Error::SizeTooLarge { l, max: 4 });
    }
    let n = l * l;
    let mut out = Vec::new();
    let mut types = vec![EdgeType::T1; n];
    fn rec(i: usize, n: usize, l: usize, used: u32, types: &mut [EdgeType], out: &mut Vec<DimerConfig>) {
        if i == n {
            out.push(DimerConfig { l, types: types.to_vec() });
            return;
        }
        let b = Coord::from_index(i, l);
        for r in EdgeType::ALL {
            let w = b.offset(r.v()).index(l);
            if used & (1 << w) == 0 {
                types[i] = r;
                rec(i + 1, n, l, used | (1 << w), types, out);
            }
        }
    }
    rec(0, n, l, 0, &mut types, &mut out);
    Ok(out.into_iter())
}

/// The two face classes. Odd faces are joined by the elementary steps; even
/// faces are those with a black vertex at the top-right corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

/// A face, indexed by a black vertex on its boundary plus a parity bit.
///
/// `Odd(x)` has boundary edges `(x,2), (x,3), (x-e1,1), (x-e1,4)`;
/// `Even(x)` has `(x,1), (x,2), (x+e2,4), (x+e2,3)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face {
    pub anchor: Coord,
    pub parity: Parity,
}

impl Face {
    pub const fn odd(x1: i64, x2: i64) -> Face {
        Face { anchor: Coord::new(x1, x2), parity: Parity::Odd }
    }

    pub const fn even(x1: i64, x2: i64) -> Face {
        Face { anchor: Coord::new(x1, x2), parity: Parity::Even }
    }

    pub fn reduce(self, l: usize) -> Face {
        Face { anchor: self.anchor.reduce(l), parity: self.parity }
    }

    pub fn translate(self, d: (i64, i64)) -> Face {
        Face { anchor: self.anchor.offset(d), parity: self.parity }
    }

    /// Midpoint in lattice coordinates.
    pub fn midpoint(self) -> [f64; 2] {
        let (a1, a2) = (self.anchor.x1 as f64, self.anchor.x2 as f64);
        match self.parity {
            Parity::Odd => [a1 - 0.5, a2],
            Parity::Even => [a1, a2 + 0.5],
        }
    }

    /// Horizontal and vertical parallel pairs on the boundary.
    pub fn pairs(self) -> ([EdgeRef; 2], [EdgeRef; 2]) {
        let x = self.anchor;
        use EdgeType::*;
        match self.parity {
            Parity::Odd => {
                let y = x.shift(-1, 0);
                ([EdgeRef::new(x, T3), EdgeRef::new(y, T1)], [EdgeRef::new(x, T2), EdgeRef::new(y, T4)])
            }
            Parity::Even => {
                let y = x.shift(0, 1);
                ([EdgeRef::new(x, T1), EdgeRef::new(y, T3)], [EdgeRef::new(x, T2), EdgeRef::new(y, T4)])
            }
        }
    }

    pub fn boundary(self) -> [EdgeRef; 4] {
        let (h, v) = self.pairs();
        [h[0], h[1], v[0], v[1]]
    }
}

/// Orientation of a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Orientation {
    Plus,
    Minus,
}

impl Orientation {
    pub fn sign(self) -> i8 {
        match self {
            Orientation::Plus => 1,
            Orientation::Minus => -1,
        }
    }

    pub fn flip(self) -> Orientation {
        match self {
            Orientation::Plus => Orientation::Minus,
            Orientation::Minus => Orientation::Plus,
        }
    }
}

/// One elementary step of a dual path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub center: Coord,
    pub dir: u8,
    pub orientation: Orientation,
    pub parity: Parity,
}

impl Step {
    pub fn crossings(&self) -> [(EdgeRef, i8); 2] {
        let (edges, signs) = match self.parity {
            Parity::Odd => elementary_step(self.center, self.dir, self.orientation),
            Parity::Even => even_step(self.center, self.dir, self.orientation),
        };
        [(edges[0], signs[0]), (edges[1], signs[1])]
    }

    pub fn reversed(self) -> Step {
        Step { orientation: self.orientation.flip(), ..self }
    }
}

/// Step between odd faces. `(x,1,+)` goes from `Odd(x)` to `Odd(x+e1)`;
/// `(x,2,+)` from `Odd(x+e1)` to `Odd(x+e1+e2)`.
pub fn elementary_step(x: Coord, j: u8, o: Orientation) -> ([EdgeRef; 2], [i8; 2]) {
    let s = o.sign();
    let edges = match j {
        1 => [EdgeRef::new(x, EdgeType::T3), EdgeRef::new(x, EdgeType::T4)],
        2 => [EdgeRef::new(x, EdgeType::T1), EdgeRef::new(x.shift(0, 1), EdgeType::T4)],
        _ => panic!("step direction must be 1 or 2"),
    };
    (edges, [s, s])
}

/// Step between even faces: `(x,j,+)` goes from `Even(x)` to `Even(x+e_j)`.
pub fn even_step(x: Coord, j: u8, o: Orientation) -> ([EdgeRef; 2], [i8; 2]) {
    let s = o.sign();
    match j {
        1 => ([EdgeRef::new(x, EdgeType::T1), EdgeRef::new(x.shift(1, 0), EdgeType::T2)], [-s, -s]),
        2 => ([EdgeRef::new(x.shift(0, 1), EdgeType::T4), EdgeRef::new(x.shift(0, 1), EdgeType::T1)], [s, s]),
        _ => panic!("step direction must be 1 or 2"),
    }
}

/// Step leaving face `f` in direction `±e_j`.
pub fn step_from(f: Face, j: u8, o: Orientation) -> Step {
    let x = f.anchor;
    let center = match (f.parity, j, o) {
        (Parity::Odd, 1, Orientation::Plus) => x,
        (Parity::Odd, 1, Orientation::Minus) => x.shift(-1, 0),
        (Parity::Odd, 2, Orientation::Plus) => x.shift(-1, 0),
        (Parity::Odd, 2, Orientation::Minus) => x.shift(-1, -1),
        (Parity::Even, 1, Orientation::Plus) => x,
        (Parity::Even, 1, Orientation::Minus) => x.shift(-1, 0),
        (Parity::Even, 2, Orientation::Plus) => x,
        (Parity::Even, 2, Orientation::Minus) => x.shift(0, -1),
        _ => panic!("step direction must be 1 or 2"),
    };
    Step { center, dir: j, orientation: o, parity: f.parity }
}

/// A dual path made of elementary steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticePath {
    pub start: Face,
    pub end: Face,
    pub steps: Vec<Step>,
}

impl LatticePath {
    /// Walks `d1` steps along e1 and then `d2` along e2 from `start`.
    pub fn staircase(start: Face, d1: i64, d2: i64) -> LatticePath {
        Self::walk(start, &[(1, d1), (2, d2)])
    }

    /// Same displacement with the e2 moves first.
    pub fn staircase_e2_first(start: Face, d1: i64, d2: i64) -> LatticePath {
        Self::walk(start, &[(2, d2), (1, d1)])
    }

    /// Concatenated straight moves `(direction, signed count)`.
    pub fn walk(start: Face, moves: &[(u8, i64)]) -> LatticePath {
        let mut f = start;
        let mut steps = Vec::new();
        for &(j, n) in moves {
            let o = if n >= 0 { Orientation::Plus } else { Orientation::Minus };
            let d = if j == 1 { (n.signum(), 0) } else { (0, n.signum()) };
            for _ in 0..n.abs() {
                steps.push(step_from(f, j, o));
                f = f.translate(d);
            }
        }
        LatticePath { start, end: f, steps }
    }

    pub fn reversed(&self) -> LatticePath {
        LatticePath { start: self.end, end: self.start, steps: self.steps.iter().rev().map(|s| s.reversed()).collect() }
    }

    /// Crossed edges with their signs, in path order.
    pub fn crossings(&self) -> Vec<(EdgeRef, i8)> {
        self.steps.iter().flat_map(|s| s.crossings()).collect()
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Staircase path on the L-torus along the shortest displacement, e1 moves first.
pub fn path_between(a: Face, b: Face, l: usize) -> Result<LatticePath> {
    check_even(l)?;
    if a.parity != b.parity {
        return Err(Error::ParityMismatch);
    }
    let d1 = wrap_signed(b.anchor.x1 - a.anchor.x1, l);
    let d2 = wrap_signed(b.anchor.x2 - a.anchor.x2, l);
    Ok(LatticePath::staircase(a, d1, d2))
}

/// Height winding `(w1, w2)`: height change along the e1 and e2 cycles.
pub fn winding(m: &DimerConfig) -> (i64, i64) {
    let l = m.l as i64;
    let (mut a, mut b) = (0i64, 0i64);
    for k in 0..l {
        if matches!(m.type_at(Coord::new(k, 0)), EdgeType::T3 | EdgeType::T4) {
            a += 1;
        }
        if matches!(m.type_at(Coord::new(0, k)), EdgeType::T1 | EdgeType::T4) {
            b += 1;
        }
    }
    (a - l / 2, b - l / 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn white_examples() {
        // 1-based (2,2),r=1,L=8 -> (2,2); (1,1),r=3,L=4 -> (4,4); (2,2),r=4,L=8 -> (2,1)
        assert_eq!(white_of(EdgeRef::new(Coord::new(1, 1), EdgeType::T1), 8), Coord::new(1, 1));
        assert_eq!(white_of(EdgeRef::new(Coord::new(0, 0), EdgeType::T3), 4), Coord::new(3, 3));
        assert_eq!(white_of(EdgeRef::new(Coord::new(1, 1), EdgeType::T4), 8), Coord::new(1, 0));
    }

    #[test]
    fn validate_examples() {
        assert!(validate_config(&DimerConfig::uniform(4, EdgeType::T1).unwrap()));
        let mut m = DimerConfig::uniform(4, EdgeType::T1).unwrap();
        // black (1,0) type 2 also hits white (0,0)
        m.set_type(Coord::new(1, 0), EdgeType::T2);
        assert!(!validate_config(&m));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_matchings(2).unwrap().count(), 24);
        assert_eq!(enumerate_matchings(4).unwrap().count(), 26752);
        assert!(matches!(enumerate_matchings(6), Err(Error::SizeTooLarge { .. })));
        assert!(enumerate_matchings(4).unwrap().all(|m| validate_config(&m)));
    }

    #[test]
    fn step_examples() {
        let x = Coord::new(3, 5);
        let (e, s) = elementary_step(x, 1, Orientation::Plus);
        assert_eq!(e, [EdgeRef::new(x, EdgeType::T3), EdgeRef::new(x, EdgeType::T4)]);
        assert_eq!(s, [1, 1]);
        let (e, s) = elementary_step(x, 2, Orientation::Plus);
        assert_eq!(e, [EdgeRef::new(x, EdgeType::T1), EdgeRef::new(Coord::new(3, 6), EdgeType::T4)]);
        assert_eq!(s, [1, 1]);
        let (_, s) = elementary_step(x, 1, Orientation::Minus);
        assert_eq!(s, [-1, -1]);
    }

    #[test]
    fn path_examples() {
        let a = Face::odd(2, 2);
        assert!(path_between(a, a, 8).unwrap().is_empty());
        let p = path_between(a, a.translate((1, 0)), 8).unwrap();
        assert_eq!(p.steps.len(), 1);
        assert_eq!((p.steps[0].center, p.steps[0].dir, p.steps[0].orientation), (a.anchor, 1, Orientation::Plus));
        let p = path_between(a, a.translate((2, 3)), 8).unwrap();
        assert_eq!(p.steps.len(), 5);
        assert!(p.steps[..2].iter().all(|s| s.dir == 1));
        assert_eq!(p.end, a.translate((2, 3)));
        assert_eq!(path_between(a, Face::even(2, 2), 8), Err(Error::ParityMismatch));
    }

    #[test]
    fn uniform_windings_are_corners() {
        assert_eq!(winding(&DimerConfig::uniform(4, EdgeType::T1).unwrap()), (-2, 2));
        assert_eq!(winding(&DimerConfig::uniform(4, EdgeType::T3).unwrap()), (2, -2));
    }
}
