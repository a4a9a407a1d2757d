//! The six-vertex model as an interacting dimer model.
//!
//! Six-vertex sites sit on even faces; the six-vertex edge through a dimer
//! vertex joins the two even faces at that vertex. A dimer vertex is owned
//! by the even face whose boundary carries its dimer. The arrow points into
//! the owner for black vertices and out of it for white ones, so the ice
//! rule at a face is "as many owned blacks as owned whites".

use serde::{Deserialize, Serialize};

use crate::error::{check_even, Error, Result};
use crate::interaction::{energy, sixv_spec};
use crate::lattice::{enumerate_matchings, Coord};
use crate::spectral::EdgeWeights;

/// Six-vertex weights with `a3 = a5 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SixVWeights {
    pub a1: f64,
    pub a2: f64,
    pub a4: f64,
    pub a6: f64,
}

impl SixVWeights {
    pub fn new(a1: f64, a2: f64, a4: f64, a6: f64) -> Result<Self> {
        if [a1, a2, a4, a6].iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::Invalid("six-vertex weights must be positive".into()));
        }
        Ok(SixVWeights { a1, a2, a4, a6 })
    }
}

/// `t = (a1, a4, a2)` and `lambda = log(a6 / (t1 t3 + t2))`.
pub fn weights_to_dimer(a: &SixVWeights) -> Result<(EdgeWeights, f64)> {
    let t = EdgeWeights::new(a.a1, a.a4, a.a2)?;
    let lambda = (a.a6 / (a.a1 * a.a2 + a.a4)).ln();
    Ok((t, lambda))
}

pub fn dimer_to_weights(t: &EdgeWeights, lambda: f64) -> SixVWeights {
    SixVWeights { a1: t.t1(), a2: t.t3(), a4: t.t2(), a6: (t.t1() * t.t3() + t.t2()) * lambda.exp() }
}

/// `(a1 a2 + a4 - a6) / (2 sqrt(a1 a2 a4))`.
pub fn delta(a: &SixVWeights) -> f64 {
    (a.a1 * a.a2 + a.a4 - a.a6) / (2.0 * (a.a1 * a.a2 * a.a4).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionCheck {
    pub z_dimer: f64,
    pub z_6v: f64,
    pub rel_err: f64,
}

/// Weight of an even face from which of its corners it owns:
/// blacks `x`, `x+e2` and whites `x`, `x-e1`.
fn vertex_weight(a: &SixVWeights, bx: bool, bx2: bool, wx: bool, wxm: bool) -> f64 {
    match (bx, bx2, wx, wxm) {
        (false, false, false, false) => 1.0,
        (true, true, true, true) => a.a6,
        (true, false, true, false) => a.a1,
        (true, false, false, true) => a.a4,
        (false, true, true, false) => 1.0,
        (false, true, false, true) => a.a2,
        _ => 0.0,
    }
}

struct Torus6v {
    l: usize,
    /// For every even face: indices of its four edge variables and whether
    /// "variable true" means the face owns that corner.
    corners: Vec<[(usize, bool); 4]>,
}

impl Torus6v {
    fn new(l: usize) -> Self {
        let n = l * l;
        // variable i < n: black i, true = owned by Even(i).
        // variable n + i: white i, true = owned by Even(i).
        let corners = (0..n)
            .map(|i| {
                let x = Coord::from_index(i, l);
                let bx2 = x.shift(0, 1).index(l);
                let wxm = x.shift(-1, 0).index(l);
                // black x+e2 is the top corner of Even(x) and the bottom corner
                // of Even(x+e2); white x-e1 likewise for Even(x-e1) and Even(x)
                [(i, true), (bx2, false), (n + i, true), (n + wxm, false)]
            })
            .collect();
        Torus6v { l, corners }
    }

    fn owned(&self, f: usize, vars: &[bool]) -> [bool; 4] {
        let c = &self.corners[f];
        [vars[c[0].0] == c[0].1, vars[c[1].0] == c[1].1, vars[c[2].0] == c[2].1, vars[c[3].0] == c[3].1]
    }
}

fn arrow_partition(l: usize, a: &SixVWeights) -> f64 {
    let g = Torus6v::new(l);
    let n = l * l;
    let nv = 2 * n;
    // each variable's last use, to check faces as soon as they are complete
    let mut complete_at: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for f in 0..n {
        let last = g.corners[f].iter().map(|c| c.0).max().unwrap();
        complete_at[last].push(f);
    }
    let mut vars = vec![false; nv];
    fn rec(i: usize, g: &Torus6v, a: &SixVWeights, vars: &mut [bool], complete_at: &[Vec<usize>], acc: f64) -> f64 {
        if i == vars.len() {
            return acc;
        }
        let mut total = 0.0;
        for v in [false, true] {
            vars[i] = v;
            let mut w = acc;
            for &f in &complete_at[i] {
                let o = g.owned(f, vars);
                // ice rule: two arrows in, i.e. owned blacks == owned whites
                if (o[0] as u8 + o[1] as u8) != (o[2] as u8 + o[3] as u8) {
                    w = 0.0;
                    break;
                }
                w *= vertex_weight(a, o[0], o[1], o[2], o[3]);
            }
            if w != 0.0 {
                total += rec(i + 1, g, a, vars, complete_at, w);
            }
        }
        total
    }
    let _ = g.l;
    rec(0, &g, a, &mut vars, &complete_at, 1.0)
}

/// Compares the dimer partition function with six-vertex interaction against
/// a direct sum over ice-rule arrow configurations.
pub fn partition_equality_check(l: usize, a: &SixVWeights) -> Result<PartitionCheck> {
    check_even(l)?;
    if l > 4 {
        return Err(Error::SizeTooLarge { l, max: 4 });
    }
    let (t, lambda) = weights_to_dimer(a)?;
    let spec = sixv_spec();
    let z_dimer: f64 = enumerate_matchings(l)?.map(|m| m.weight(&t) * (lambda * energy(&m, &spec)).exp()).sum();
    let z_6v = arrow_partition(l, a);
    Ok(PartitionCheck { z_dimer, z_6v, rel_err: ((z_dimer - z_6v) / z_6v).abs() })
}
