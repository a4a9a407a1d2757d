//! Large-distance predictions at the free-fermion point.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::{EdgeType, Face};
use crate::spectral::{phi, EdgeWeights, FermiData, Omega};

/// `K_{w,r} = K_r exp(-i p^w . v_r)`.
pub fn k_omega_r(w: Omega, r: EdgeType, t: &EdgeWeights, f: &FermiData) -> C64 {
    let p = f.p(w);
    let v = r.v();
    t.kasteleyn()[r.idx()] * C64::from_polar(1.0, -(p[0] * v.0 as f64 + p[1] * v.1 as f64))
}

/// `sum sigma_e K_{w,r(e)}` over the edges of an elementary step in
/// direction `j`; the sum does not depend on the step position.
pub fn step_sum(j: u8, w: Omega, t: &EdgeWeights, f: &FermiData) -> C64 {
    let k = |r| k_omega_r(w, r, t, f);
    match j {
        1 => k(EdgeType::T3) + k(EdgeType::T4),
        2 => k(EdgeType::T1) + k(EdgeType::T4),
        _ => panic!("step direction must be 1 or 2"),
    }
}

/// `-i w Delta_j phi_w`, the value `step_sum` should take.
pub fn step_target(j: u8, w: Omega, f: &FermiData) -> C64 {
    let e = if j == 1 { [1.0, 0.0] } else { [0.0, 1.0] };
    -C64::i() * w.sign() * phi(e, w, f)
}

/// Step sums for both directions and both Fermi points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSumTable {
    /// `values[j-1][w.idx()]`.
    pub values: [[C64; 2]; 2],
}

impl StepSumTable {
    pub fn new(t: &EdgeWeights, f: &FermiData) -> Self {
        let mut values = [[C64::new(0.0, 0.0); 2]; 2];
        for j in 1..=2u8 {
            for w in Omega::BOTH {
                values[j as usize - 1][w.idx()] = step_sum(j, w, t, f);
            }
        }
        StepSumTable { values }
    }

    /// Largest `|step_sum - (-i w Delta_j phi_w)|`.
    pub fn max_residual(&self, f: &FermiData) -> f64 {
        let mut m: f64 = 0.0;
        for j in 1..=2u8 {
            for w in Omega::BOTH {
                m = m.max((self.values[j as usize - 1][w.idx()] - step_target(j, w, f)).norm());
            }
        }
        m
    }
}

/// The two Fermi-point sums of the leading dimer-dimer asymptotics, as
/// complex numbers `(A, B)`, before taking the real part.
pub fn dimer_dimer_terms(d: [i64; 2], r: EdgeType, rp: EdgeType, t: &EdgeWeights, f: &FermiData) -> Result<(C64, C64)> {
    if d == [0, 0] {
        return Err(Error::ZeroDistance);
    }
    let x = [d[0] as f64, d[1] as f64];
    let c = 1.0 / (4.0 * PI * PI);
    let (mut a, mut b) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
    for w in Omega::BOTH {
        let ph = phi(x, w, f);
        a += k_omega_r(w, r, t, f) * k_omega_r(w, rp, t, f) / (ph * ph);
        let (pw, pm) = (f.p(w), f.p(w.opposite()));
        let osc = C64::from_polar(1.0, (pw[0] - pm[0]) * x[0] + (pw[1] - pm[1]) * x[1]);
        b += k_omega_r(w.opposite(), r, t, f) * k_omega_r(w, rp, t, f) * osc / ph.norm_sqr();
    }
    Ok((a * c, b * c))
}

/// Leading asymptotics `A + B` of the connected correlation between an
/// `r`-edge at black `x` and an `r'`-edge at black `x'`, `d = x - x'`.
/// Evaluated as twice the real part of the `w = +` terms.
pub fn dimer_dimer_asymptotic(d: [i64; 2], r: EdgeType, rp: EdgeType, t: &EdgeWeights, f: &FermiData) -> Result<f64> {
    if d == [0, 0] {
        return Err(Error::ZeroDistance);
    }
    let x = [d[0] as f64, d[1] as f64];
    let w = Omega::Plus;
    let ph = phi(x, w, f);
    let a = k_omega_r(w, r, t, f) * k_omega_r(w, rp, t, f) / (ph * ph);
    let (pp, pm) = (f.p_plus, f.p_minus);
    let osc = C64::from_polar(1.0, (pp[0] - pm[0]) * x[0] + (pp[1] - pm[1]) * x[1]);
    let b = k_omega_r(Omega::Minus, r, t, f) * k_omega_r(w, rp, t, f) * osc / ph.norm_sqr();
    Ok(2.0 * (a + b).re / (4.0 * PI * PI))
}

/// `phi_+` of the midpoint displacement `a - b`, or `None` when `a == b`.
fn phi_between(a: Face, b: Face, f: &FermiData) -> Option<C64> {
    if a == b {
        return None;
    }
    let (ma, mb) = (a.midpoint(), b.midpoint());
    Some(phi([ma[0] - mb[0], ma[1] - mb[1]], Omega::Plus, f))
}

/// `Cov(h(e1) - h(e2), h(e3) - h(e4))` predicted by the log-correlated
/// field with prefactor `nu`. Coincident faces contribute a factor 1.
pub fn predicted_height_covariance(eta: [Face; 4], nu: f64, f: &FermiData) -> f64 {
    let lg = |a: Face, b: Face| phi_between(a, b, f).map_or(0.0, |z| z.norm().ln());
    let s = lg(eta[0], eta[3]) + lg(eta[1], eta[2]) - lg(eta[0], eta[2]) - lg(eta[1], eta[3]);
    nu / (2.0 * PI * PI) * s
}
