//! Infinite-volume propagator and the quantities derived from it.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::Correlator;
use crate::error::Result;
use crate::lattice::{EdgeRef, EdgeType};
use crate::quadrature::gauss_legendre;
use crate::spectral::{fermi_points, wrap_angle, EdgeWeights, FermiData, I};

/// `g(d) = (2 pi)^-2 int e^{-i k.d} / mu(k) dk`.
///
/// Writing `mu = A(z1) - B(z1) z2`, the k2 integral is a geometric series
/// whose form depends on whether `|A| > |B|`; the remaining k1 integral is
/// smooth on each of the two arcs cut by the Fermi momenta and is done by
/// Gauss-Legendre.
pub fn infinite_volume_g(d: [i64; 2], t: &EdgeWeights) -> Result<C64> {
    let f = fermi_points(t)?;
    Ok(g_with(d, t, &f))
}

fn g_with(d: [i64; 2], t: &EdgeWeights, f: &FermiData) -> C64 {
    let mut a = wrap_angle(f.p_plus[0]);
    let mut b = wrap_angle(f.p_minus[0]);
    if a > b {
        std::mem::swap(&mut a, &mut b);
    }
    let n = 64 + 3 * (d[0].unsigned_abs() + d[1].unsigned_abs()) as usize;
    let (x, w) = gauss_legendre(n);
    let mut total = C64::new(0.0, 0.0);
    for (lo, hi) in [(a, b), (b, a + 2.0 * PI)] {
        let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        let zm = C64::from_polar(1.0, mid);
        let outside = (t.t1() + I * t.t2() * zm).norm() > (t.t3() * zm + I).norm();
        let mut s = C64::new(0.0, 0.0);
        for (xi, wi) in x.iter().zip(&w) {
            let k1 = mid + half * xi;
            let z1 = C64::from_polar(1.0, k1);
            let aa = t.t1() + I * t.t2() * z1;
            let bb = t.t3() * z1 + I;
            let inner = if outside {
                if d[1] >= 0 {
                    (bb / aa).powi(d[1] as i32) / aa
                } else {
                    C64::new(0.0, 0.0)
                }
            } else if d[1] <= -1 {
                -(aa / bb).powi((-d[1] - 1) as i32) / bb
            } else {
                C64::new(0.0, 0.0)
            };
            s += *wi * C64::from_polar(1.0, -k1 * d[0] as f64) * inner;
        }
        total += s * half;
    }
    total / (2.0 * PI)
}

/// Densities of the four edge types, `Re[K_r g(v_r)]`.
pub fn densities(t: &EdgeWeights) -> Result<[f64; 4]> {
    Ok(InfinitePlane::new(t)?.dens)
}

/// Average height slope `(rho1, rho2)` along the two step directions.
pub fn slope(t: &EdgeWeights) -> Result<(f64, f64)> {
    let d = densities(t)?;
    Ok((d[2] + d[3] - 0.5, d[0] + d[3] - 0.5))
}

/// Exact infinite-volume correlations.
pub struct InfinitePlane {
    t: EdgeWeights,
    fermi: FermiData,
    dens: [f64; 4],
}

impl InfinitePlane {
    pub fn new(t: &EdgeWeights) -> Result<InfinitePlane> {
        let fermi = fermi_points(t)?;
        let k = t.kasteleyn();
        let mut dens = [0.0; 4];
        for r in EdgeType::ALL {
            let v = r.v();
            dens[r.idx()] = (k[r.idx()] * g_with([v.0, v.1], t, &fermi)).re;
        }
        Ok(InfinitePlane { t: *t, fermi, dens })
    }

    pub fn fermi(&self) -> &FermiData {
        &self.fermi
    }

    pub fn g(&self, d: [i64; 2]) -> C64 {
        g_with(d, &self.t, &self.fermi)
    }
}

impl Correlator for InfinitePlane {
    fn density(&self, r: EdgeType) -> f64 {
        self.dens[r.idx()]
    }

    fn joint(&self, e: EdgeRef, f: EdgeRef) -> f64 {
        let k = self.t.kasteleyn();
        let (we, wf) = (e.white(), f.white());
        let gee = self.g([we.x1 - e.black.x1, we.x2 - e.black.x2]);
        let gff = self.g([wf.x1 - f.black.x1, wf.x2 - f.black.x2]);
        let gef = self.g([we.x1 - f.black.x1, we.x2 - f.black.x2]);
        let gfe = self.g([wf.x1 - e.black.x1, wf.x2 - e.black.x2]);
        (k[e.r.idx()] * k[f.r.idx()] * (gee * gff - gef * gfe)).re
    }

    fn same_edge(&self, e: EdgeRef, f: EdgeRef) -> bool {
        e == f
    }

    fn touching(&self, e: EdgeRef, f: EdgeRef) -> bool {
        e.black == f.black || e.white() == f.white()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_densities_are_quarter() {
        let d = densities(&EdgeWeights::uniform()).unwrap();
        for v in d {
            assert!((v - 0.25).abs() < 1e-12, "{d:?}");
        }
    }

    #[test]
    fn dominant_t1_densities() {
        let d = densities(&EdgeWeights::new(2.0, 1.0, 1.0).unwrap()).unwrap();
        let want = [0.5, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{d:?}");
        }
        let (r1, r2) = slope(&EdgeWeights::new(2.0, 1.0, 1.0).unwrap()).unwrap();
        assert!((r1 + 1.0 / 6.0).abs() < 1e-12 && (r2 - 1.0 / 6.0).abs() < 1e-12);
    }
}
