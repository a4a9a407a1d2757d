//! `dimerlab enumerate`: brute-force oracles on the 2- and 4-torus.

use std::path::Path;
use std::time::Instant;

use dimerlab::interaction::{cluster_coefficient, connected_clusters, verify_cluster_bound};
use dimerlab::kasteleyn::partition_function;
use dimerlab::lattice::enumerate_matchings;
use dimerlab::sixvertex::{delta, partition_equality_check, SixVWeights};
use dimerlab::Error;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::{weights, InteractionChoice, NamedInteraction};
use crate::output::{load_config, num, CliResult, ManifestInfo, OutDir};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterTask {
    #[serde(default = "default_interaction")]
    pub interaction: InteractionChoice,
    pub lambda: f64,
    pub max_size: usize,
}

fn default_interaction() -> InteractionChoice {
    InteractionChoice::Named(NamedInteraction::Plaquette)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnumerateConfig {
    pub version: u32,
    #[serde(default = "default_weights")]
    pub weights: [f64; 3],
    #[serde(rename = "L", default)]
    pub l: Option<usize>,
    /// Six-vertex weights `(a1, a2, a4, a6)` for the partition comparison.
    #[serde(default)]
    pub sixv: Option<[f64; 4]>,
    #[serde(default)]
    pub clusters: Option<ClusterTask>,
}

fn default_weights() -> [f64; 3] {
    [1.0, 1.0, 1.0]
}

pub fn run(config: &Path, out: &Path, l_flag: Option<usize>) -> CliResult<()> {
    let start = Instant::now();
    let (cfg, echo): (EnumerateConfig, _) = load_config(config)?;
    let l = l_flag.or(cfg.l).unwrap_or(4);
    let t = weights(cfg.weights)?;
    // fail before touching the output directory
    let matchings = enumerate_matchings(l)?;
    let mut dir = OutDir::create(out)?;

    let mut count = 0u64;
    let mut sum = 0.0;
    for m in matchings {
        count += 1;
        sum += m.weight(&t);
    }
    let kast = partition_function(l, &t)?.exp();
    dir.write_json(
        "counts.json",
        &json!({
            "L": l,
            "weights": cfg.weights,
            "matchings": count,
            "weighted_sum": sum,
            "kasteleyn": kast,
            "rel_err": (sum - kast).abs() / sum,
        }),
    )?;

    if let Some(a) = cfg.sixv {
        let w = SixVWeights::new(a[0], a[1], a[2], a[3])?;
        let check = partition_equality_check(l, &w)?;
        dir.write_json(
            "sixv.json",
            &json!({
                "L": l,
                "a": a,
                "delta": delta(&w),
                "z_dimer": check.z_dimer,
                "z_6v": check.z_6v,
                "rel_err": check.rel_err,
            }),
        )?;
    }

    if let Some(c) = &cfg.clusters {
        if c.max_size > 4 {
            return Err(Error::TooLarge(c.max_size).into());
        }
        let spec = c.interaction.spec();
        let plaquette = matches!(c.interaction, InteractionChoice::Named(NamedInteraction::Plaquette));
        let family = connected_clusters(&spec, c.max_size);
        let mut rows = Vec::with_capacity(family.len());
        for g in &family {
            let coeff = cluster_coefficient(g, &spec, c.lambda)?;
            let n = g.len() as i32;
            let closed =
                if plaquette { num((-1f64).powi(n) * (c.lambda.exp() - 1.0).powi(n - 1)) } else { String::new() };
            let edges: Vec<String> =
                g.edges().iter().map(|e| format!("{}:{}:{}", e.black.x1 + 1, e.black.x2 + 1, e.r.label())).collect();
            rows.push(vec![n.to_string(), g.tree_distance().to_string(), edges.join(" "), num(coeff), closed]);
        }
        dir.write_csv("clusters.csv", &["size", "tree_distance", "edges", "coefficient", "closed_form"], rows)?;
        let bound = verify_cluster_bound(&spec, c.lambda, &family)?;
        dir.write_json(
            "cluster_bound.json",
            &json!({ "lambda": c.lambda, "clusters": family.len(), "a": bound.a, "b": bound.b, "ok": bound.ok }),
        )?;
    }

    dir.write_manifest(ManifestInfo {
        command: "enumerate",
        config: echo,
        seeds: vec![],
        chains: 0,
        complete: true,
        start,
    })
}
