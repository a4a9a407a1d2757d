//! Height differences and exact height covariances.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kasteleyn::{Correlator, FiniteTorus};
use crate::lattice::{DimerConfig, EdgeRef, EdgeType, Face, LatticePath};
use crate::spectral::{phi, FermiData, Omega};

/// `sum sigma_e (1_e - 1/4)` along the path.
pub fn height_diff(m: &DimerConfig, path: &LatticePath) -> f64 {
    let mut q = 0i64;
    for (e, s) in path.crossings() {
        let occ = if m.occupied(e) { 4 } else { 0 };
        q += s as i64 * (occ - 1);
    }
    q as f64 / 4.0
}

/// Staircase path between two faces using their raw displacement.
pub fn planar_path(a: Face, b: Face) -> Result<LatticePath> {
    if a.parity != b.parity {
        return Err(Error::ParityMismatch);
    }
    Ok(LatticePath::staircase(a, b.anchor.x1 - a.anchor.x1, b.anchor.x2 - a.anchor.x2))
}

type PairKey = (EdgeType, EdgeType, i64, i64);

fn key(e: EdgeRef, f: EdgeRef) -> PairKey {
    (e.r, f.r, f.black.x1 - e.black.x1, f.black.x2 - e.black.x2)
}

/// `sum_{e in P, f in Q} sigma_e sigma_f E(1_e; 1_f)`, with translation
/// invariance used to evaluate each distinct pair geometry once.
pub fn path_covariance<C: Correlator>(corr: &C, p: &LatticePath, q: &LatticePath) -> f64 {
    let a = p.crossings();
    let b = q.crossings();
    let mut weights: HashMap<PairKey, (EdgeRef, EdgeRef, i64)> = HashMap::new();
    for &(e, se) in &a {
        for &(f, sf) in &b {
            let entry = weights.entry(key(e, f)).or_insert((e, f, 0));
            entry.2 += (se * sf) as i64;
        }
    }
    let mut items: Vec<_> = weights.into_iter().filter(|(_, v)| v.2 != 0).collect();
    items.sort_by_key(|(k, _)| *k);
    items.par_iter().map(|(_, (e, f, w))| *w as f64 * corr.connected(*e, *f)).sum()
}

/// `Cov(h(e1) - h(e2), h(e3) - h(e4))` from exact dimer correlations.
/// Faces are used with their raw coordinates; on a torus the caller picks
/// nearby representatives.
pub fn exact_height_covariance<C: Correlator>(corr: &C, eta: [Face; 4]) -> Result<f64> {
    let p = planar_path(eta[1], eta[0])?;
    let q = planar_path(eta[3], eta[2])?;
    Ok(path_covariance(corr, &p, &q))
}

/// Lattice directions for variance profiles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    E1,
    E2,
    Diagonal,
}

impl Direction {
    pub fn vector(self) -> (i64, i64) {
        match self {
            Direction::E1 => (1, 0),
            Direction::E2 => (0, 1),
            Direction::Diagonal => (1, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub d: usize,
    pub phi_abs: f64,
    pub var: f64,
    pub stderr: f64,
}

/// Height-difference variance as a function of distance.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VarianceProfile {
    pub entries: Vec<ProfileEntry>,
}

impl VarianceProfile {
    pub fn scaled(&self, s: f64) -> VarianceProfile {
        VarianceProfile {
            entries: self
                .entries
                .iter()
                .map(|e| ProfileEntry { var: e.var * s, stderr: e.stderr * s.abs(), ..*e })
                .collect(),
        }
    }
}

/// Exact variances `Var(h(eta + d u) - h(eta))` for `d = 1..=dmax`.
pub fn variance_profile<C: Correlator>(corr: &C, f: &FermiData, direction: Direction, dmax: usize) -> VarianceProfile {
    let u = direction.vector();
    let start = Face::odd(0, 0);
    let entries = (1..=dmax)
        .map(|d| {
            let di = d as i64;
            let p = LatticePath::staircase(start, u.0 * di, u.1 * di);
            let var = path_covariance(corr, &p, &p);
            let phi_abs = phi([(u.0 * di) as f64, (u.1 * di) as f64], Omega::Plus, f).norm();
            ProfileEntry { d, phi_abs, var, stderr: 0.0 }
        })
        .collect();
    VarianceProfile { entries }
}

/// Exact variance profile on the L-torus, with `dmax <= L/4`.
pub fn variance_profile_exact(
    torus: &FiniteTorus,
    f: &FermiData,
    direction: Direction,
    dmax: usize,
) -> Result<VarianceProfile> {
    let limit = torus.l() / 4;
    if dmax > limit {
        return Err(Error::WrapGuard { d: dmax, limit });
    }
    Ok(variance_profile(torus, f, direction, dmax))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{EdgeType, Orientation, Step};

    #[test]
    fn empty_path_is_zero() {
        let m = DimerConfig::uniform(4, EdgeType::T1).unwrap();
        let p = LatticePath::staircase(Face::odd(1, 1), 0, 0);
        assert_eq!(height_diff(&m, &p), 0.0);
    }

    #[test]
    fn loop_around_a_vertex_vanishes() {
        // four steps around black (1,1): the closed loop through the odd faces
        // Odd(1,1) -> Odd(2,1) -> Odd(2,2) -> Odd(1,2) -> Odd(1,1)
        let p = LatticePath::walk(Face::odd(1, 1), &[(1, 1), (2, 1), (1, -1), (2, -1)]);
        assert_eq!(p.end, p.start);
        for m in crate::lattice::enumerate_matchings(4).unwrap().step_by(97) {
            assert_eq!(height_diff(&m, &p), 0.0);
        }
        let s = Step {
            center: crate::lattice::Coord::new(0, 0),
            dir: 1,
            orientation: Orientation::Plus,
            parity: crate::lattice::Parity::Odd,
        };
        assert_eq!(s.reversed().reversed(), s);
    }
}
