//! `dimerlab analyze`: exponent and amplitude fits plus the Haldane check.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dimerlab::estimators::{
    connected_corr, extract_a, extract_nu, haldane_report, jackknife, CorrRow, CorrSpec, FitResult, NuFitOptions,
    Provenance,
};
use dimerlab::height::{ProfileEntry, VarianceProfile};
use dimerlab::sampler::MeasurementStream;
use dimerlab::spectral::{fermi_points, phi, Omega};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::weights;
use crate::exact::write_profile;
use crate::output::{
    io_err, load_config, num, relative_to, sha256_file, CliError, CliResult, ManifestInfo, OutDir, RunManifest,
};
use crate::sample::{measurements_file, SampleConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tables {
    /// CSV with columns d1, d2, estimate, stderr (stderr 0 marks exact rows).
    pub correlations: PathBuf,
    /// CSV with columns d, phi_abs, var, stderr.
    pub profile: PathBuf,
    pub weights: [f64; 3],
    #[serde(rename = "L", default)]
    pub l: usize,
    #[serde(default)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub version: u32,
    /// Output directory of a `sample` run.
    #[serde(default)]
    pub run: Option<PathBuf>,
    #[serde(default)]
    pub tables: Option<Tables>,
    /// Edge types of the correlator used for the exponent fit.
    #[serde(default = "default_pair")]
    pub pair: [u8; 2],
    /// Range of `|d|_inf` used in the exponent fit.
    #[serde(default)]
    pub window: Option<[i64; 2]>,
    /// Smallest distance used in the amplitude fit.
    #[serde(default = "default_profile_dmin")]
    pub profile_dmin: usize,
    #[serde(default)]
    pub fixed_q: Option<[f64; 2]>,
    #[serde(default = "default_perturbation")]
    pub phi_perturbation: f64,
}

fn default_pair() -> [u8; 2] {
    [1, 1]
}

fn default_profile_dmin() -> usize {
    4
}

fn default_perturbation() -> f64 {
    0.1
}

pub fn run(config: &Path, out: &Path) -> CliResult<()> {
    let start = Instant::now();
    let (cfg, echo): (AnalyzeConfig, _) = load_config(config)?;
    let (rows, profile, prov) = match (&cfg.run, &cfg.tables) {
        (Some(run), None) => from_run(&cfg, &relative_to(config, run))?,
        (None, Some(t)) => from_tables(config, t)?,
        _ => return Err(CliError::Config("exactly one of \"run\" and \"tables\" must be given".into())),
    };
    let rows: Vec<CorrRow> = match cfg.window {
        Some([lo, hi]) => rows.into_iter().filter(|r| (lo..=hi).contains(&r.d.0.abs().max(r.d.1.abs()))).collect(),
        None => rows,
    };
    let profile =
        VarianceProfile { entries: profile.entries.into_iter().filter(|e| e.d >= cfg.profile_dmin).collect() };

    let t = weights(prov.weights)?;
    let f = fermi_points(&t)?;
    let opts = NuFitOptions { fixed_q: cfg.fixed_q, phi_perturbation: cfg.phi_perturbation };
    let nu = extract_nu(&rows, &f, &opts)?;
    let amp = extract_a(&profile)?;
    let fit = FitResult::new(nu, amp);
    let report = haldane_report((amp.a, amp.a_err), (nu.nu, nu.total_err()), prov);

    let mut dir = OutDir::create(out)?;
    dir.write_json("fit.json", &json!({ "fit": fit, "haldane": report }))?;
    let mut text = format!("{report}\n");
    text.push_str(&format!(
        "nu fit: chi2 = {:.3} on {} dof, q = ({:.4}, {:.4}){}, nu_sys = {:.4}\n",
        nu.chi2,
        nu.dof,
        nu.q[0],
        nu.q[1],
        if nu.q_fitted { "" } else { " (not fitted)" },
        nu.nu_sys
    ));
    text.push_str(&format!("A fit: chi2 = {:.3} on {} dof\n", amp.chi2, amp.dof));
    for n in &fit.notes {
        text.push_str(&format!("note: {n}\n"));
    }
    dir.write_text("report.txt", &text)?;
    let corr_rows = rows.iter().map(|r| vec![r.d.0.to_string(), r.d.1.to_string(), num(r.estimate), num(r.stderr)]);
    dir.write_csv("corr_table.csv", &["d1", "d2", "estimate", "stderr"], corr_rows)?;
    write_profile(&mut dir, "profile_table.csv", &profile)?;
    print!("{text}");
    dir.write_manifest(ManifestInfo {
        command: "analyze",
        config: echo,
        seeds: vec![],
        chains: 0,
        complete: true,
        start,
    })
}

type Inputs = (Vec<CorrRow>, VarianceProfile, Provenance);

fn read_csv(path: &Path) -> CliResult<(csv::StringRecord, Vec<csv::StringRecord>)> {
    let err = |e: csv::Error| CliError::Other(format!("{}: {e}", path.display()));
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    let header = r.headers().map_err(err)?.clone();
    let rows = r.records().collect::<Result<Vec<_>, _>>().map_err(err)?;
    Ok((header, rows))
}

fn column(header: &csv::StringRecord, name: &str, path: &Path) -> CliResult<usize> {
    header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Config(format!("{}: missing column \"{name}\"", path.display())))
}

fn parse<T: std::str::FromStr>(s: &str, path: &Path) -> CliResult<T> {
    s.trim().parse().map_err(|_| CliError::Config(format!("{}: cannot parse {s:?}", path.display())))
}

fn from_tables(config: &Path, t: &Tables) -> CliResult<Inputs> {
    let cpath = relative_to(config, &t.correlations);
    let (h, recs) = read_csv(&cpath)?;
    let (i1, i2, ie, is) = (
        column(&h, "d1", &cpath)?,
        column(&h, "d2", &cpath)?,
        column(&h, "estimate", &cpath)?,
        column(&h, "stderr", &cpath)?,
    );
    let rows = recs
        .iter()
        .map(|r| {
            Ok(CorrRow {
                d: (parse(&r[i1], &cpath)?, parse(&r[i2], &cpath)?),
                estimate: parse(&r[ie], &cpath)?,
                stderr: parse(&r[is], &cpath)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;

    let ppath = relative_to(config, &t.profile);
    let (h, recs) = read_csv(&ppath)?;
    let (jd, jp, jv, js) = (
        column(&h, "d", &ppath)?,
        column(&h, "phi_abs", &ppath)?,
        column(&h, "var", &ppath)?,
        column(&h, "stderr", &ppath)?,
    );
    let entries = recs
        .iter()
        .map(|r| {
            Ok(ProfileEntry {
                d: parse(&r[jd], &ppath)?,
                phi_abs: parse(&r[jp], &ppath)?,
                var: parse(&r[jv], &ppath)?,
                stderr: parse(&r[js], &ppath)?,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let prov = Provenance { l: t.l, lambda: t.lambda, weights: t.weights, seeds: vec![], chains: 0, sweeps: 0 };
    Ok((rows, VarianceProfile { entries }, prov))
}

fn load_stream(path: &Path) -> CliResult<MeasurementStream> {
    let (h, recs) = read_csv(path)?;
    if h.get(0) != Some("sweep") {
        return Err(CliError::Config(format!("{}: first column must be \"sweep\"", path.display())));
    }
    let names: Vec<String> = h.iter().skip(1).map(String::from).collect();
    let mut s = MeasurementStream {
        names: names.clone(),
        sweeps: Vec::with_capacity(recs.len()),
        series: vec![Vec::with_capacity(recs.len()); names.len()],
    };
    for r in &recs {
        if r.len() != names.len() + 1 {
            return Err(CliError::Config(format!("{}: ragged row at sweep {:?}", path.display(), r.get(0))));
        }
        s.sweeps.push(parse(&r[0], path)?);
        for (col, v) in s.series.iter_mut().zip(r.iter().skip(1)) {
            col.push(parse(v, path)?);
        }
    }
    Ok(s)
}

/// Parses `prefix{a}_{b}` into `(a, b)`.
fn displacement(name: &str, prefix: &str) -> Option<(i64, i64)> {
    let rest = name.strip_prefix(prefix)?;
    let (a, b) = rest.split_once('_')?;
    Some((a.parse().ok()?, b.parse().ok()?))
}

fn from_run(cfg: &AnalyzeConfig, run: &Path) -> CliResult<Inputs> {
    let mpath = run.join("manifest.json");
    let text = fs::read_to_string(&mpath).map_err(io_err(&mpath))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", mpath.display())))?;
    if manifest.command != "sample" {
        return Err(CliError::Config(format!("{}: not a sample run", mpath.display())));
    }
    let sc: SampleConfig = serde_json::from_value(manifest.config.clone())
        .map_err(|e| CliError::Config(format!("{}: config echo: {e}", mpath.display())))?;
    if !manifest.complete {
        eprintln!("warning: {} is an incomplete run", run.display());
    }

    let mut streams = Vec::with_capacity(manifest.chains);
    for c in 0..manifest.chains as u64 {
        let name = measurements_file(c);
        let path = run.join(&name);
        if let Some(digest) = manifest.outputs.get(&name) {
            if sha256_file(&path)? != *digest {
                eprintln!("warning: {name} does not match the manifest digest");
            }
        }
        streams.push(load_stream(&path)?);
    }
    let names = &streams.first().ok_or_else(|| CliError::Config("run has no chains".into()))?.names;

    let [r, rp] = cfg.pair;
    let prefix = format!("pair_t{r}_t{rp}_");
    let (x, y) = (format!("density_t{r}"), format!("density_t{rp}"));
    let specs: Vec<CorrSpec> = names
        .iter()
        .filter_map(|n| {
            displacement(n, &prefix).map(|d| CorrSpec { d, x: x.clone(), y: y.clone(), pair: Some(n.clone()) })
        })
        .collect();
    if specs.is_empty() {
        return Err(CliError::Config(format!("run has no \"{prefix}*\" observables")));
    }
    for needed in [&x, &y] {
        if !names.contains(needed) {
            return Err(CliError::Config(format!("run has no \"{needed}\" observable")));
        }
    }
    let rows = connected_corr(&streams, &specs)?;

    let t = weights(sc.weights)?;
    let f = fermi_points(&t)?;
    let chains_of = |name: &str| -> CliResult<Vec<&[f64]>> {
        streams
            .iter()
            .map(|s| s.series(name).ok_or_else(|| CliError::Config(format!("chain is missing \"{name}\""))))
            .collect()
    };
    let mut entries = Vec::new();
    for n in names {
        let Some(d) = displacement(n, "hmom1_") else { continue };
        let m2 = format!("hmom2_{}_{}", d.0, d.1);
        if !names.contains(&m2) {
            continue;
        }
        let v = jackknife(&[chains_of(&m2)?, chains_of(n)?], |m| m[0] - m[1] * m[1])?;
        entries.push(ProfileEntry {
            d: d.0.unsigned_abs().max(d.1.unsigned_abs()) as usize,
            phi_abs: phi([d.0 as f64, d.1 as f64], Omega::Plus, &f).norm(),
            var: v.value,
            stderr: v.stderr,
        });
    }
    entries.sort_by(|a, b| a.d.cmp(&b.d).then(a.phi_abs.total_cmp(&b.phi_abs)));

    let sweeps = streams.iter().map(|s| s.sweeps.last().copied().unwrap_or(0)).max().unwrap_or(0);
    let prov = Provenance {
        l: sc.l,
        lambda: sc.lambda,
        weights: sc.weights,
        seeds: manifest.seeds.clone(),
        chains: manifest.chains,
        sweeps,
    };
    Ok((rows, VarianceProfile { entries }, prov))
}
