//! Partition function resolved by winding sector.
//!
//! With boundary phases `e^{i phi_j}` on the seam edges, `det K(phi)` is a
//! trigonometric polynomial in `phi` whose coefficients are the weighted
//! numbers of matchings with given seam-crossing counts, up to a sign that
//! depends only on the parities of those counts. A discrete Fourier transform
//! over `(L+1)^2` twists recovers every coefficient.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::{c_theta, LogDet, ThetaSector};
use crate::error::{check_even, Result};
use crate::spectral::{mu, EdgeWeights};

/// `det K(phi)`, a product over `k_i = (2 pi n_i + phi_i) / L`.
fn det_twisted(l: usize, phi: [f64; 2], t: &EdgeWeights) -> LogDet {
    let lf = l as f64;
    LogDet::from_product((0..l * l).map(|i| {
        let k = [(2.0 * PI * (i % l) as f64 + phi[0]) / lf, (2.0 * PI * (i / l) as f64 + phi[1]) / lf];
        mu(k, t)
    }))
}

/// Log-weights of the winding sectors of the L-torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorTable {
    pub l: usize,
    /// `log_z[n1 + (L+1) n2]`, indexed by seam-crossing counts.
    log_z: Vec<f64>,
}

impl SectorTable {
    /// Exact weights for every sector.
    pub fn new(l: usize, t: &EdgeWeights) -> Result<SectorTable> {
        check_even(l)?;
        let m = l + 1;
        let dets: Vec<LogDet> = (0..m * m)
            .map(|j| {
                let phi = [2.0 * PI * (j % m) as f64 / m as f64, 2.0 * PI * (j / m) as f64 / m as f64];
                det_twisted(l, phi, t)
            })
            .collect();
        let r = dets.iter().map(|d| d.log_modulus).fold(f64::NEG_INFINITY, f64::max);
        let vals: Vec<C64> = dets.iter().map(|d| d.phase * (d.log_modulus - r).exp()).collect();
        // sign of each crossing-parity class
        let mut eps = [[0.0; 2]; 2];
        for (p1, row) in eps.iter_mut().enumerate() {
            for (p2, e) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for th in ThetaSector::ALL {
                    let par = (th.0[0] as usize * p1 + th.0[1] as usize * p2) % 2;
                    s += c_theta(l, th)? as f64 * if par == 0 { 1.0 } else { -1.0 };
                }
                *e = 2.0 / s;
            }
        }
        let mut log_z = vec![f64::NEG_INFINITY; m * m];
        for n2 in 0..m {
            for n1 in 0..m {
                let mut acc = C64::new(0.0, 0.0);
                for (j, v) in vals.iter().enumerate() {
                    let ph = 2.0 * PI * ((j % m) * n1 + (j / m) * n2) as f64 / m as f64;
                    acc += v * C64::from_polar(1.0, -ph);
                }
                let z = eps[n1 % 2][n2 % 2] * acc.re / (m * m) as f64;
                if z > 0.0 {
                    log_z[n1 + m * n2] = r + z.ln();
                }
            }
        }
        Ok(SectorTable { l, log_z })
    }

    /// `log Z` restricted to height winding `(w1, w2)`; `-inf` when empty
    /// or below the resolution of the transform.
    pub fn log_z(&self, w: (i64, i64)) -> f64 {
        let h = self.l as i64 / 2;
        let (n1, n2) = (h - w.1, w.0 + h);
        if !(0..=self.l as i64).contains(&n1) || !(0..=self.l as i64).contains(&n2) {
            return f64::NEG_INFINITY;
        }
        self.log_z[n1 as usize + (self.l + 1) * n2 as usize]
    }

    /// Probability of each winding sector, largest first.
    pub fn distribution(&self) -> Vec<((i64, i64), f64)> {
        let h = self.l as i64 / 2;
        let total = self.log_total();
        let mut v: Vec<((i64, i64), f64)> = (-h..=h)
            .flat_map(|w1| (-h..=h).map(move |w2| (w1, w2)))
            .map(|w| (w, (self.log_z(w) - total).exp()))
            .filter(|(_, p)| *p > 0.0)
            .collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1));
        v
    }

    pub fn log_total(&self) -> f64 {
        let r = self.log_z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        r + self.log_z.iter().map(|z| (z - r).exp()).sum::<f64>().ln()
    }
}

/// Edge-type densities within winding sector `w`, from
/// `d log Z_w / d log t_r = E_w[N_r]`.
pub fn sector_densities(l: usize, t: &EdgeWeights, w: (i64, i64)) -> Result<[f64; 4]> {
    let h: f64 = 1e-4;
    let base = t.as_array();
    let mut d = [0.0; 4];
    for r in 0..3 {
        let mut up = base;
        let mut dn = base;
        up[r] *= h.exp();
        dn[r] *= (-h).exp();
        let zu = SectorTable::new(l, &EdgeWeights::new(up[0], up[1], up[2])?)?.log_z(w);
        let zd = SectorTable::new(l, &EdgeWeights::new(dn[0], dn[1], dn[2])?)?.log_z(w);
        d[r] = (zu - zd) / (2.0 * h) / (l * l) as f64;
    }
    d[3] = 1.0 - d[0] - d[1] - d[2];
    Ok(d)
}
