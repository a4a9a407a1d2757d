//! `dimerlab exact`: closed-form and determinant computations at lambda = 0.

use std::path::Path;
use std::time::Instant;

use dimerlab::asymptotics::{dimer_dimer_asymptotic, StepSumTable};
use dimerlab::height::{variance_profile, variance_profile_exact, Direction, VarianceProfile};
use dimerlab::kasteleyn::{
    densities, partition_function, sector_sign_check, slope, Correlator, FiniteTorus, InfinitePlane, SectorTable,
};
use dimerlab::lattice::{Coord, EdgeRef};
use dimerlab::spectral::{fermi_points, free_energy, EdgeWeights, FermiData, Omega};
use dimerlab::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{edge_type, weights};
use crate::output::{load_config, num, CliError, CliResult, ManifestInfo, OutDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Fermi,
    FreeEnergy,
    Densities,
    Slope,
    Partition,
    Sectors,
    Stepcheck,
    Correlations,
    VarianceProfile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationTask {
    /// Edge types `[r, r']`.
    #[serde(default = "default_pair")]
    pub pair: [u8; 2],
    pub dmin: i64,
    pub dmax: i64,
}

fn default_pair() -> [u8; 2] {
    [1, 1]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileTask {
    #[serde(default = "default_direction")]
    pub direction: Direction,
    pub dmax: usize,
}

fn default_direction() -> Direction {
    Direction::E1
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExactConfig {
    pub version: u32,
    pub weights: [f64; 3],
    /// Torus size; without it correlations and profiles use the infinite plane.
    #[serde(rename = "L", default)]
    pub l: Option<usize>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub correlations: Option<CorrelationTask>,
    #[serde(default)]
    pub profile: Option<ProfileTask>,
    /// Grid size of the free-energy quadrature.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_grid() -> usize {
    512
}

fn need_l(cfg: &ExactConfig, task: &str) -> CliResult<usize> {
    cfg.l.ok_or_else(|| CliError::Config(format!("task \"{task}\" needs \"L\"")))
}

/// Fermi data, surfacing the weights when they are not liquid.
fn fermi(t: &EdgeWeights) -> CliResult<FermiData> {
    fermi_points(t).map_err(|e| match e {
        Error::NotLiquid(msg) => Error::NotLiquid(format!("t = {:?}: {msg}", <[f64; 3]>::from(*t))).into(),
        e => e.into(),
    })
}

pub fn run(config: &Path, out: &Path) -> CliResult<()> {
    let start = Instant::now();
    let (cfg, echo): (ExactConfig, _) = load_config(config)?;
    let t = weights(cfg.weights)?;
    if let Some(l) = cfg.l {
        if l == 0 || l % 2 != 0 {
            return Err(Error::OddL(l).into());
        }
    }
    let mut dir = OutDir::create(out)?;
    let mut torus: Option<FiniteTorus> = None;

    for task in &cfg.tasks {
        match task {
            Task::Fermi => {
                let f = fermi(&t)?;
                let ratio = f.beta(Omega::Plus) / f.alpha(Omega::Plus);
                dir.write_json(
                    "fermi.json",
                    &json!({
                        "weights": cfg.weights,
                        "p_plus": f.p_plus,
                        "p_minus": f.p_minus,
                        "alpha_plus": [f.alpha(Omega::Plus).re, f.alpha(Omega::Plus).im],
                        "beta_plus": [f.beta(Omega::Plus).re, f.beta(Omega::Plus).im],
                        "alpha_minus": [f.alpha(Omega::Minus).re, f.alpha(Omega::Minus).im],
                        "beta_minus": [f.beta(Omega::Minus).re, f.beta(Omega::Minus).im],
                        "im_beta_over_alpha": ratio.im,
                        "form_discrepancy": f.form_discrepancy,
                    }),
                )?;
            }
            Task::FreeEnergy => {
                let fe = free_energy(&t, cfg.grid)?;
                dir.write_json(
                    "free_energy.json",
                    &json!({ "weights": cfg.weights, "grid": cfg.grid, "free_energy": fe }),
                )?;
            }
            Task::Densities => {
                let d = densities(&t)?;
                dir.write_json("densities.json", &json!({ "weights": cfg.weights, "densities": d }))?;
            }
            Task::Slope => {
                let (s, u) = slope(&t)?;
                dir.write_json("slope.json", &json!({ "weights": cfg.weights, "slope": [s, u] }))?;
            }
            Task::Partition => {
                let l = need_l(&cfg, "partition")?;
                let log_z = partition_function(l, &t)?;
                dir.write_json("partition.json", &json!({ "L": l, "weights": cfg.weights, "log_z": log_z }))?;
            }
            Task::Sectors => {
                let l = need_l(&cfg, "sectors")?;
                let table = SectorTable::new(l, &t)?;
                let rows =
                    table.distribution().into_iter().map(|((w1, w2), p)| vec![w1.to_string(), w2.to_string(), num(p)]);
                dir.write_csv("sectors.csv", &["w1", "w2", "probability"], rows)?;
                let signs_ok = sector_sign_check(l, &t)?;
                dir.write_json("sector_signs.json", &json!({ "L": l, "nonnegative": signs_ok }))?;
            }
            Task::Stepcheck => {
                let f = fermi(&t)?;
                let table = StepSumTable::new(&t, &f);
                dir.write_json(
                    "stepcheck.json",
                    &json!({ "weights": cfg.weights, "max_residual": table.max_residual(&f) }),
                )?;
            }
            Task::Correlations => {
                let c = cfg
                    .correlations
                    .as_ref()
                    .ok_or_else(|| CliError::Config("task \"correlations\" needs a \"correlations\" block".into()))?;
                if c.dmin < 1 || c.dmax < c.dmin {
                    return Err(CliError::Config(format!("bad correlation window {}..{}", c.dmin, c.dmax)));
                }
                let f = fermi(&t)?;
                let (r, rp) = (edge_type(c.pair[0])?, edge_type(c.pair[1])?);
                let ds = correlation_window(c.dmin, c.dmax);
                let value = |corr: &dyn Fn(EdgeRef, EdgeRef) -> f64, d: (i64, i64)| {
                    corr(EdgeRef::new(Coord::new(d.0, d.1), r), EdgeRef::new(Coord::new(0, 0), rp))
                };
                let vals: Vec<f64> = match cfg.l {
                    Some(l) => {
                        let limit = l / 4;
                        if c.dmax as usize > limit {
                            return Err(Error::WrapGuard { d: c.dmax as usize, limit }.into());
                        }
                        let tor = ensure_torus(&mut torus, l, &t)?;
                        ds.iter().map(|d| value(&|e, g| tor.connected(e, g), *d)).collect()
                    }
                    None => {
                        let plane = InfinitePlane::new(&t)?;
                        ds.iter().map(|d| value(&|e, g| plane.connected(e, g), *d)).collect()
                    }
                };
                let mut rows = Vec::with_capacity(ds.len());
                for (d, v) in ds.iter().zip(vals) {
                    let asym = dimer_dimer_asymptotic([d.0, d.1], r, rp, &t, &f)?;
                    rows.push(vec![d.0.to_string(), d.1.to_string(), num(v), num(asym), num(0.0)]);
                }
                dir.write_csv("correlations.csv", &["d1", "d2", "estimate", "asymptotic", "stderr"], rows)?;
            }
            Task::VarianceProfile => {
                let p = cfg
                    .profile
                    .as_ref()
                    .ok_or_else(|| CliError::Config("task \"variance_profile\" needs a \"profile\" block".into()))?;
                let f = fermi(&t)?;
                let prof: VarianceProfile = match cfg.l {
                    Some(l) => variance_profile_exact(ensure_torus(&mut torus, l, &t)?, &f, p.direction, p.dmax)?,
                    None => variance_profile(&InfinitePlane::new(&t)?, &f, p.direction, p.dmax),
                };
                write_profile(&mut dir, "variance_profile.csv", &prof)?;
            }
        }
    }
    dir.write_manifest(ManifestInfo { command: "exact", config: echo, seeds: vec![], chains: 0, complete: true, start })
}

fn ensure_torus<'a>(slot: &'a mut Option<FiniteTorus>, l: usize, t: &EdgeWeights) -> CliResult<&'a FiniteTorus> {
    if slot.is_none() {
        *slot = Some(FiniteTorus::new(l, t)?);
    }
    Ok(slot.as_ref().expect("just built"))
}

/// Displacements along the four lattice and diagonal directions with
/// `dmin <= |d|_inf <= dmax`.
pub fn correlation_window(dmin: i64, dmax: i64) -> Vec<(i64, i64)> {
    (dmin..=dmax).flat_map(|k| [(k, 0), (0, k), (k, k), (k, -k)]).collect()
}

pub fn write_profile(dir: &mut OutDir, name: &str, p: &VarianceProfile) -> CliResult<()> {
    let rows = p.entries.iter().map(|e| vec![e.d.to_string(), num(e.phi_abs), num(e.var), num(e.stderr)]);
    dir.write_csv(name, &["d", "phi_abs", "var", "stderr"], rows)
}
