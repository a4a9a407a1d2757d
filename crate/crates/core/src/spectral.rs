//! The characteristic function mu(k), Fermi points and velocities, and the
//! infinite-volume free energy.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const I: C64 = C64::new(0.0, 1.0);

/// Dimer weights `(t1, t2, t3)`, with `t4 = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 3]", into = "[f64; 3]")]
pub struct EdgeWeights {
    t: [f64; 3],
}

impl EdgeWeights {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Result<Self> {
        for (i, v) in [t1, t2, t3].into_iter().enumerate() {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Invalid(format!("weight t{} = {v} must be positive and finite", i + 1)));
            }
        }
        Ok(EdgeWeights { t: [t1, t2, t3] })
    }

    pub fn uniform() -> Self {
        EdgeWeights { t: [1.0; 3] }
    }

    pub fn t1(&self) -> f64 {
        self.t[0]
    }
    pub fn t2(&self) -> f64 {
        self.t[1]
    }
    pub fn t3(&self) -> f64 {
        self.t[2]
    }

    /// `[t1, t2, t3, 1]`.
    pub fn as_array(&self) -> [f64; 4] {
        [self.t[0], self.t[1], self.t[2], 1.0]
    }

    /// Kasteleyn weights `K_r = (t1, i t2, -t3, -i)`.
    pub fn kasteleyn(&self) -> [C64; 4] {
        [C64::new(self.t[0], 0.0), I * self.t[1], C64::new(-self.t[2], 0.0), -I]
    }

    /// Divides all four weights by `t4 = c` after scaling them by `c`;
    /// the result describes the same measure.
    pub fn rescaled(&self, c: [f64; 4]) -> Result<Self> {
        let a = self.as_array();
        let s = a[3] * c[3];
        EdgeWeights::new(a[0] * c[0] / s, a[1] * c[1] / s, a[2] * c[2] / s)
    }
}

impl TryFrom<[f64; 3]> for EdgeWeights {
    type Error = Error;
    fn try_from(t: [f64; 3]) -> Result<Self> {
        EdgeWeights::new(t[0], t[1], t[2])
    }
}

impl From<EdgeWeights> for [f64; 3] {
    fn from(w: EdgeWeights) -> [f64; 3] {
        w.t
    }
}

pub fn mu(k: [f64; 2], t: &EdgeWeights) -> C64 {
    characteristic_polynomial(C64::from_polar(1.0, k[0]), C64::from_polar(1.0, k[1]), t)
}

/// `t1 + i t2 z - t3 z w - i w`.
pub fn characteristic_polynomial(z: C64, w: C64, t: &EdgeWeights) -> C64 {
    t.t1() + I * t.t2() * z - t.t3() * z * w - I * w
}

/// Which of the two Fermi points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Omega {
    Plus,
    Minus,
}

impl Omega {
    pub const BOTH: [Omega; 2] = [Omega::Plus, Omega::Minus];

    pub fn sign(self) -> f64 {
        match self {
            Omega::Plus => 1.0,
            Omega::Minus => -1.0,
        }
    }

    pub fn idx(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Omega {
        match self {
            Omega::Plus => Omega::Minus,
            Omega::Minus => Omega::Plus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermiData {
    pub p_plus: [f64; 2],
    pub p_minus: [f64; 2],
    /// Indexed by `Omega::idx`.
    pub alpha: [C64; 2],
    pub beta: [C64; 2],
    pub liquid: bool,
    /// Largest disagreement between the two closed forms of the velocities.
    pub form_discrepancy: f64,
}

impl FermiData {
    pub fn p(&self, w: Omega) -> [f64; 2] {
        match w {
            Omega::Plus => self.p_plus,
            Omega::Minus => self.p_minus,
        }
    }

    pub fn alpha(&self, w: Omega) -> C64 {
        self.alpha[w.idx()]
    }

    pub fn beta(&self, w: Omega) -> C64 {
        self.beta[w.idx()]
    }
}

const SCAN: usize = 1024;
const SCAN_OFFSET: f64 = 0.012_345_678_9;

fn defect(k1: f64, t: &EdgeWeights) -> f64 {
    let z = C64::from_polar(1.0, k1);
    (t.t1() + I * t.t2() * z).norm_sqr() - (I + t.t3() * z).norm_sqr()
}

fn bisect(mut a: f64, mut b: f64, t: &EdgeWeights) -> f64 {
    let mut fa = defect(a, t);
    for _ in 0..80 {
        let m = 0.5 * (a + b);
        let fm = defect(m, t);
        if fm == 0.0 {
            return m;
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if b - a < 1e-15 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Reduces an angle to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(2.0 * PI) - PI;
    if r <= -PI {
        r + 2.0 * PI
    } else {
        r
    }
}

/// Zeros of mu on the momentum torus, with velocities.
///
/// `p+` is the zero at which `Im(beta/alpha) > 0`.
pub fn fermi_points(t: &EdgeWeights) -> Result<FermiData> {
    let h = 2.0 * PI / SCAN as f64;
    let k = |j: usize| -PI + SCAN_OFFSET + h * j as f64;
    let mut roots = Vec::new();
    let mut prev = defect(k(0), t);
    for j in 1..=SCAN {
        let cur = defect(k(j), t);
        if (cur > 0.0) != (prev > 0.0) {
            roots.push(wrap_angle(bisect(k(j - 1), k(j), t)));
        }
        prev = cur;
    }
    if roots.len() != 2 {
        return Err(Error::NotLiquid(format!("{} zeros of the defect function for t = {:?}", roots.len(), t.t)));
    }
    let mut pts = roots.iter().map(|&k1| {
        let z = C64::from_polar(1.0, k1);
        let k2 = ((t.t1() + I * t.t2() * z) / (I + t.t3() * z)).arg();
        [k1, k2]
    });
    let (pa, pb) = (pts.next().unwrap(), pts.next().unwrap());
    if (wrap_angle(pa[0] - pb[0]).abs() + wrap_angle(pa[1] - pb[1]).abs()) < 1e-9 {
        return Err(Error::NotLiquid("the two zeros coincide".into()));
    }
    let (aa, ba, da) = fermi_velocities(pa, t)?;
    let (ab, bb, db) = fermi_velocities(pb, t)?;
    for (a, b) in [(aa, ba), (ab, bb)] {
        if (a * b.conj()).im.abs() < 1e-8 * a.norm() * b.norm() {
            return Err(Error::NotLiquid("zero is not transversal".into()));
        }
    }
    let f = if (ba / aa).im > 0.0 {
        FermiData {
            p_plus: pa,
            p_minus: pb,
            alpha: [aa, ab],
            beta: [ba, bb],
            liquid: true,
            form_discrepancy: da.max(db),
        }
    } else {
        FermiData {
            p_plus: pb,
            p_minus: pa,
            alpha: [ab, aa],
            beta: [bb, ba],
            liquid: true,
            form_discrepancy: da.max(db),
        }
    };
    Ok(f)
}

/// `alpha = d mu / d k1`, `beta = d mu / d k2` at a zero `p`, averaged over
/// the two closed forms; the third value is their discrepancy.
pub fn fermi_velocities(p: [f64; 2], t: &EdgeWeights) -> Result<(C64, C64, f64)> {
    let m = mu(p, t).norm();
    if m > 1e-8 {
        return Err(Error::NotOnSpectralCurve(m));
    }
    let z1 = C64::from_polar(1.0, p[0]);
    let z2 = C64::from_polar(1.0, p[1]);
    let a1 = -t.t2() * z1 - I * t.t3() * z1 * z2;
    let a2 = -I * t.t1() - z2;
    let b1 = -I * t.t3() * z1 * z2 + z2;
    let b2 = -I * t.t1() + t.t2() * z1;
    let d = (a1 - a2).norm().max((b1 - b2).norm());
    if d > 1e-8 {
        return Err(Error::InconsistentForms(d));
    }
    Ok((0.5 * (a1 + a2), 0.5 * (b1 + b2), d))
}

/// `phi_w(x) = w (beta_w x1 - alpha_w x2)`.
pub fn phi(x: [f64; 2], w: Omega, f: &FermiData) -> C64 {
    w.sign() * (f.beta(w) * x[0] - f.alpha(w) * x[1])
}

fn midpoint_sum(t: &EdgeWeights, n: usize) -> f64 {
    let h = 2.0 * PI / n as f64;
    let zs: Vec<C64> = (0..n).map(|j| C64::from_polar(1.0, h * (j as f64 + 0.5))).collect();
    let mut total = 0.0;
    for &z1 in &zs {
        let a = t.t1() + I * t.t2() * z1;
        let b = t.t3() * z1 + I;
        let mut row = 0.0;
        for &z2 in &zs {
            row += (a - b * z2).norm().ln();
        }
        total += row;
    }
    total / (n * n) as f64
}

/// `(2 pi)^-2 int log|mu(k)| dk` by the half-offset midpoint rule at `grid`
/// and `2*grid`, Richardson-combined.
pub fn free_energy(t: &EdgeWeights, grid: usize) -> Result<f64> {
    fermi_points(t)?;
    if grid < 64 {
        return Err(Error::Invalid(format!("grid {grid} must be at least 64")));
    }
    let coarse = midpoint_sum(t, grid);
    let fine = midpoint_sum(t, 2 * grid);
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn mu_examples() {
        let t = EdgeWeights::uniform();
        assert_eq!(mu([0.0, 0.0], &t), C64::new(0.0, 0.0));
        assert!(close(mu([PI, 0.0], &t), C64::new(2.0, -2.0), 1e-14));
        assert_eq!(characteristic_polynomial(C64::new(0.0, 0.0), C64::new(0.0, 0.0), &t).re, 1.0);
    }

    #[test]
    fn uniform_fermi_data() {
        let f = fermi_points(&EdgeWeights::uniform()).unwrap();
        assert!(f.p_plus[0].abs() < 1e-10 && f.p_plus[1].abs() < 1e-10);
        assert!((f.p_minus[0].abs() - PI).abs() < 1e-10 && (f.p_minus[1].abs() - PI).abs() < 1e-10);
        assert!(close(f.alpha[0], C64::new(-1.0, -1.0), 1e-10));
        assert!(close(f.beta[0], C64::new(1.0, -1.0), 1e-10));
        assert!(close(f.alpha[1], C64::new(1.0, -1.0), 1e-10));
        assert!(close(f.beta[1], C64::new(-1.0, -1.0), 1e-10));
        assert!(close(phi([1.0, 0.0], Omega::Plus, &f), C64::new(1.0, -1.0), 1e-10));
    }

    #[test]
    fn dominant_weight_is_not_liquid() {
        let t = EdgeWeights::new(3.5, 1.0, 1.0).unwrap();
        assert!(matches!(fermi_points(&t), Err(Error::NotLiquid(_))));
    }

    #[test]
    fn velocities_require_zero() {
        let t = EdgeWeights::uniform();
        assert!(matches!(fermi_velocities([0.3, 0.1], &t), Err(Error::NotOnSpectralCurve(_))));
    }

    #[test]
    fn weights_validated() {
        assert!(EdgeWeights::new(0.0, 1.0, 1.0).is_err());
        assert!(EdgeWeights::new(1.0, f64::NAN, 1.0).is_err());
    }
}
