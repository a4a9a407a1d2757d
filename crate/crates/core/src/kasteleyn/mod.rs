//! Exact solution on the L-torus: sector determinants, partition function,
//! inverse Kasteleyn propagators and multi-edge probabilities.

mod infinite;
mod sectors;

pub use infinite::{densities, infinite_volume_g, slope, InfinitePlane};
pub use sectors::{sector_densities, SectorTable};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{check_even, Error, Result};
use crate::lattice::{Coord, EdgeRef, EdgeType};
use crate::spectral::{mu, EdgeWeights};

/// Boundary twist: `theta_i = 1` makes direction i antiperiodic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ThetaSector(pub [u8; 2]);

impl ThetaSector {
    pub const ALL: [ThetaSector; 4] =
        [ThetaSector([0, 0]), ThetaSector([0, 1]), ThetaSector([1, 0]), ThetaSector([1, 1])];

    pub fn new(t1: u8, t2: u8) -> Self {
        assert!(t1 < 2 && t2 < 2, "theta components are 0 or 1");
        ThetaSector([t1, t2])
    }
}

/// Momenta `k_i = (2 pi / L)(n_i + theta_i / 2)`, row-major in `(n1, n2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentumGrid {
    pub l: usize,
    pub theta: ThetaSector,
}

impl MomentumGrid {
    pub fn point(&self, n1: usize, n2: usize) -> [f64; 2] {
        let h = 2.0 * PI / self.l as f64;
        [h * (n1 as f64 + 0.5 * self.theta.0[0] as f64), h * (n2 as f64 + 0.5 * self.theta.0[1] as f64)]
    }

    pub fn points(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        (0..self.l * self.l).map(move |i| self.point(i % self.l, i / self.l))
    }
}

/// `phase * exp(log_modulus)`; a zero determinant has `log_modulus = -inf`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDet {
    pub log_modulus: f64,
    pub phase: C64,
}

impl LogDet {
    pub const ONE: LogDet = LogDet { log_modulus: 0.0, phase: C64::new(1.0, 0.0) };

    pub fn from_product<I: IntoIterator<Item = C64>>(factors: I) -> LogDet {
        let mut lm = 0.0;
        let mut ph = C64::new(1.0, 0.0);
        for (i, z) in factors.into_iter().enumerate() {
            let r = z.norm();
            if r == 0.0 {
                return LogDet { log_modulus: f64::NEG_INFINITY, phase: C64::new(1.0, 0.0) };
            }
            lm += r.ln();
            ph *= z / r;
            if i % 64 == 63 {
                ph /= ph.norm();
            }
        }
        LogDet { log_modulus: lm, phase: ph / ph.norm() }
    }

    pub fn times(self, o: LogDet) -> LogDet {
        LogDet { log_modulus: self.log_modulus + o.log_modulus, phase: self.phase * o.phase }
    }

    pub fn value(self) -> C64 {
        self.phase * self.log_modulus.exp()
    }
}

/// Kasteleyn matrix element of `e`, including the boundary twist.
pub fn kasteleyn_entry(e: EdgeRef, theta: ThetaSector, l: usize, t: &EdgeWeights) -> C64 {
    let b = e.black.reduce(l);
    let w = b.offset(e.r.v());
    let mut k = t.kasteleyn()[e.r.idx()];
    if w.x1 < 0 && theta.0[0] == 1 {
        k = -k;
    }
    if w.x2 < 0 && theta.0[1] == 1 {
        k = -k;
    }
    k
}

/// `det K_theta` as the Fourier product of `mu(k)`.
pub fn det_k(l: usize, theta: ThetaSector, t: &EdgeWeights) -> LogDet {
    let g = MomentumGrid { l, theta };
    LogDet::from_product(g.points().map(|k| mu(k, t)))
}

/// Sector signs `c_theta` for even L.
pub fn c_theta(l: usize, theta: ThetaSector) -> Result<i8> {
    check_even(l)?;
    Ok(match theta.0 {
        [0, 0] if l % 4 == 0 => -1,
        [1, 1] if l % 4 == 2 => -1,
        _ => 1,
    })
}

/// Sums `c * phase * exp(lm)` in log space; returns `(reference, scaled sum)`.
fn log_sum(terms: &[(f64, LogDet)]) -> (f64, C64) {
    let r = terms.iter().map(|(_, d)| d.log_modulus).fold(f64::NEG_INFINITY, f64::max);
    if r == f64::NEG_INFINITY {
        return (0.0, C64::new(0.0, 0.0));
    }
    let s = terms.iter().map(|(c, d)| *c * d.phase * (d.log_modulus - r).exp()).sum();
    (r, s)
}

/// `log Z` with `Z = 1/2 sum_theta c_theta det K_theta`.
pub fn partition_function(l: usize, t: &EdgeWeights) -> Result<f64> {
    check_even(l)?;
    let terms: Vec<_> =
        ThetaSector::ALL.iter().map(|&th| Ok((c_theta(l, th)? as f64, det_k(l, th, t)))).collect::<Result<_>>()?;
    let (r, s) = log_sum(&terms);
    Ok(r + (0.5 * s.re).ln())
}

/// `K_theta^{-1}(w_x, b_y)` by direct momentum sum.
pub fn inverse_k(l: usize, theta: ThetaSector, x: Coord, y: Coord, t: &EdgeWeights) -> Result<C64> {
    check_even(l)?;
    let g = MomentumGrid { l, theta };
    let d = x - y;
    let mut s = C64::new(0.0, 0.0);
    for k in g.points() {
        let m = mu(k, t);
        if m.norm() <= 1e-10 {
            return Err(Error::SingularSector(theta.0));
        }
        s += C64::from_polar(1.0, -(k[0] * d.x1 as f64 + k[1] * d.x2 as f64)) / m;
    }
    Ok(s / (l * l) as f64)
}

/// `c_theta det K_theta >= 0` for every sector.
pub fn sector_sign_check(l: usize, t: &EdgeWeights) -> Result<bool> {
    let mut ok = true;
    for th in ThetaSector::ALL {
        let d = det_k(l, th, t);
        if d.log_modulus == f64::NEG_INFINITY {
            continue;
        }
        let v = c_theta(l, th)? as f64 * d.phase;
        ok &= v.re >= -1e-9 && v.im.abs() <= 1e-6;
    }
    Ok(ok)
}

/// Probabilities of dimer events. Coordinates of edges passed to a torus
/// correlator are reduced mod L; the planar one uses them as given.
pub trait Correlator: Sync {
    /// Probability that a given edge of type r is occupied.
    fn density(&self, r: EdgeType) -> f64;
    /// `P(e and f)` for distinct, non-touching edges.
    fn joint(&self, e: EdgeRef, f: EdgeRef) -> f64;
    fn same_edge(&self, e: EdgeRef, f: EdgeRef) -> bool;
    fn touching(&self, e: EdgeRef, f: EdgeRef) -> bool;

    /// `E(1_e; 1_f) = P(e, f) - P(e) P(f)`.
    fn connected(&self, e: EdgeRef, f: EdgeRef) -> f64 {
        let (pe, pf) = (self.density(e.r), self.density(f.r));
        if self.same_edge(e, f) {
            pe - pe * pe
        } else if self.touching(e, f) {
            -pe * pf
        } else {
            self.joint(e, f) - pe * pf
        }
    }
}

struct Sector {
    theta: ThetaSector,
    c: f64,
    /// Product of mu over the non-separated momenta.
    regular: LogDet,
    /// Separated momenta and their mu values.
    sep: Vec<([f64; 2], C64)>,
    /// Regular part of the propagator, `table[d1 + L d2]`.
    table: Vec<C64>,
}

const SEPARATED: usize = 2;

/// Exact correlations on the L-torus.
///
/// In every sector the two momenta with smallest `|mu|` are kept out of the
/// Fourier inverse and reinstated through a bordered determinant, so sectors
/// containing a Fermi point are handled exactly.
pub struct FiniteTorus {
    l: usize,
    t: EdgeWeights,
    sectors: Vec<Sector>,
    denom: (f64, C64),
    dens: [f64; 4],
}

fn fft2(data: &mut [C64], l: usize) {
    let fft = FftPlanner::new().plan_fft_forward(l);
    for row in data.chunks_mut(l) {
        fft.process(row);
    }
    let mut col = vec![C64::new(0.0, 0.0); l];
    for j in 0..l {
        for i in 0..l {
            col[i] = data[j + l * i];
        }
        fft.process(&mut col);
        for i in 0..l {
            data[j + l * i] = col[i];
        }
    }
}

impl Sector {
    fn build(l: usize, theta: ThetaSector, t: &EdgeWeights) -> Result<Sector> {
        let grid = MomentumGrid { l, theta };
        let mus: Vec<C64> = grid.points().map(|k| mu(k, t)).collect();
        let mut order: Vec<usize> = (0..mus.len()).collect();
        order.sort_by(|&a, &b| mus[a].norm().total_cmp(&mus[b].norm()));
        let sep_idx = &order[..SEPARATED.min(mus.len())];
        let sep = sep_idx.iter().map(|&i| (grid.point(i % l, i / l), mus[i])).collect();
        let mut inv: Vec<C64> = mus.iter().map(|m| 1.0 / m).collect();
        for &i in sep_idx {
            inv[i] = C64::new(0.0, 0.0);
        }
        let regular =
            LogDet::from_product(mus.iter().enumerate().filter(|(i, _)| !sep_idx.contains(i)).map(|(_, m)| *m));
        fft2(&mut inv, l);
        let n2 = (l * l) as f64;
        let th = [theta.0[0] as f64, theta.0[1] as f64];
        for (i, v) in inv.iter_mut().enumerate() {
            let (d1, d2) = ((i % l) as f64, (i / l) as f64);
            *v *= C64::from_polar(1.0 / n2, -PI * (th[0] * d1 + th[1] * d2) / l as f64);
        }
        Ok(Sector { theta, c: c_theta(l, theta)? as f64, regular, sep, table: inv })
    }

    /// Regular propagator at an arbitrary integer displacement.
    fn g_reg(&self, d: Coord, l: usize) -> C64 {
        let li = l as i64;
        let (q1, q2) = (d.x1.div_euclid(li), d.x2.div_euclid(li));
        let v = self.table[d.reduce(l).index(l)];
        let odd = (self.theta.0[0] as i64 * q1 + self.theta.0[1] as i64 * q2).rem_euclid(2) == 1;
        if odd {
            -v
        } else {
            v
        }
    }

    /// `c_theta det K_theta det[K^-1(w_i, b_j)]` without the edge weights.
    fn numerator(&self, whites: &[Coord], blacks: &[Coord], l: usize) -> (f64, LogDet) {
        let n = whites.len();
        let s = self.sep.len();
        let n2 = (l * l) as f64;
        let mut m = DMatrix::<C64>::zeros(n + s, n + s);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.g_reg(whites[i] - blacks[j], l);
            }
            for (a, (k, _)) in self.sep.iter().enumerate() {
                let kw = k[0] * whites[i].x1 as f64 + k[1] * whites[i].x2 as f64;
                m[(i, n + a)] = C64::from_polar(1.0 / n2, -kw);
            }
        }
        for (a, (k, muk)) in self.sep.iter().enumerate() {
            for j in 0..n {
                let kb = k[0] * blacks[j].x1 as f64 + k[1] * blacks[j].x2 as f64;
                m[(n + a, j)] = -C64::from_polar(1.0, kb);
            }
            m[(n + a, n + a)] = *muk;
        }
        let det = m.determinant();
        (self.c, self.regular.times(LogDet::from_product([det])))
    }
}

impl FiniteTorus {
    pub fn new(l: usize, t: &EdgeWeights) -> Result<FiniteTorus> {
        check_even(l)?;
        let sectors: Vec<Sector> =
            ThetaSector::ALL.par_iter().map(|&th| Sector::build(l, th, t)).collect::<Result<_>>()?;
        let terms: Vec<(f64, LogDet)> =
            sectors.iter().map(|s| (s.c, s.regular.times(LogDet::from_product(s.sep.iter().map(|p| p.1))))).collect();
        let denom = log_sum(&terms);
        let mut ft = FiniteTorus { l, t: *t, sectors, denom, dens: [0.0; 4] };
        for r in EdgeType::ALL {
            ft.dens[r.idx()] = ft.probability(&[EdgeRef::new(Coord::new(0, 0), r)])?;
        }
        Ok(ft)
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn weights(&self) -> &EdgeWeights {
        &self.t
    }

    /// `log Z`.
    pub fn log_partition(&self) -> f64 {
        self.denom.0 + (0.5 * self.denom.1.re).ln()
    }

    /// Probability that all `edges` are occupied.
    pub fn probability(&self, edges: &[EdgeRef]) -> Result<f64> {
        let l = self.l;
        let edges: Vec<EdgeRef> = edges.iter().map(|e| e.reduce(l)).collect();
        for (i, e) in edges.iter().enumerate() {
            for f in &edges[..i] {
                if e == f {
                    return Err(Error::Invalid("edges must be distinct".into()));
                }
                if e.touches(*f, l) {
                    return Ok(0.0);
                }
            }
        }
        if edges.is_empty() {
            return Ok(1.0);
        }
        let blacks: Vec<Coord> = edges.iter().map(|e| e.black).collect();
        let whites: Vec<Coord> = edges.iter().map(|e| e.white()).collect();
        let k = self.t.kasteleyn();
        let weight = LogDet::from_product(edges.iter().map(|e| k[e.r.idx()]));
        let terms: Vec<(f64, LogDet)> = self.sectors.iter().map(|s| s.numerator(&whites, &blacks, l)).collect();
        let (r, s) = log_sum(&terms);
        let val = weight.phase * s / self.denom.1 * (r + weight.log_modulus - self.denom.0).exp();
        Ok(val.re)
    }
}

impl Correlator for FiniteTorus {
    fn density(&self, r: EdgeType) -> f64 {
        self.dens[r.idx()]
    }

    fn joint(&self, e: EdgeRef, f: EdgeRef) -> f64 {
        self.probability(&[e, f]).expect("distinct edges")
    }

    fn same_edge(&self, e: EdgeRef, f: EdgeRef) -> bool {
        e.reduce(self.l) == f.reduce(self.l)
    }

    fn touching(&self, e: EdgeRef, f: EdgeRef) -> bool {
        e.touches(f, self.l)
    }
}

/// `P(all edges occupied)` on the L-torus.
pub fn correlation(l: usize, t: &EdgeWeights, edges: &[EdgeRef]) -> Result<f64> {
    FiniteTorus::new(l, t)?.probability(edges)
}
