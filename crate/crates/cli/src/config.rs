//! Config fragments shared by several commands. Lattice coordinates are
//! 1-based here and converted at the boundary.

use dimerlab::interaction::{plaquette_spec, sixv_odd_spec, sixv_spec, InteractionSpec};
use dimerlab::lattice::{Coord, EdgeRef, EdgeType, Face};
use dimerlab::sampler::Observable;
use dimerlab::spectral::EdgeWeights;
use serde::{Deserialize, Serialize};

use crate::output::{CliError, CliResult};

pub fn weights(t: [f64; 3]) -> CliResult<EdgeWeights> {
    Ok(EdgeWeights::new(t[0], t[1], t[2])?)
}

pub fn edge_type(r: u8) -> CliResult<EdgeType> {
    EdgeType::from_label(r).ok_or_else(|| CliError::Config(format!("edge type must be 1..4, got {r}")))
}

/// 1-based black vertex to internal coordinates.
pub fn coord(x1: i64, x2: i64) -> Coord {
    Coord::new(x1 - 1, x2 - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedInteraction {
    Plaquette,
    Sixv,
    SixvOdd,
}

/// A named interaction or an explicit list of patterns (offsets relative to
/// a base black vertex).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InteractionChoice {
    Named(NamedInteraction),
    Custom(InteractionSpec),
}

impl InteractionChoice {
    pub fn spec(&self) -> InteractionSpec {
        match self {
            InteractionChoice::Named(NamedInteraction::Plaquette) => plaquette_spec(),
            InteractionChoice::Named(NamedInteraction::Sixv) => sixv_spec(),
            InteractionChoice::Named(NamedInteraction::SixvOdd) => sixv_odd_spec(),
            InteractionChoice::Custom(s) => s.clone(),
        }
    }
}

/// Observable as written in a sample config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObsSpec {
    Energy,
    Density {
        r: u8,
    },
    Edge {
        x1: i64,
        x2: i64,
        r: u8,
    },
    /// Height difference between two odd faces given by their anchors.
    HeightDiff {
        from: [i64; 2],
        to: [i64; 2],
    },
    /// Spatial mean of `1(x, r) 1(x + d, rp)`.
    Pair {
        r: u8,
        rp: u8,
        d: [i64; 2],
    },
    /// Spatial mean of `(h(y + d) - h(y))^power`.
    HeightMoment {
        d: [i64; 2],
        power: u32,
    },
}

impl ObsSpec {
    pub fn observable(&self) -> CliResult<Observable> {
        Ok(match *self {
            ObsSpec::Energy => Observable::Energy,
            ObsSpec::Density { r } => Observable::TypeDensity { r: edge_type(r)? },
            ObsSpec::Edge { x1, x2, r } => Observable::Edge { edge: EdgeRef::new(coord(x1, x2), edge_type(r)?) },
            ObsSpec::HeightDiff { from, to } => {
                let a = coord(from[0], from[1]);
                let b = coord(to[0], to[1]);
                Observable::HeightDiff { from: Face::odd(a.x1, a.x2), to: Face::odd(b.x1, b.x2) }
            }
            ObsSpec::Pair { r, rp, d } => {
                Observable::PairProduct { r: edge_type(r)?, rp: edge_type(rp)?, d: (d[0], d[1]) }
            }
            ObsSpec::HeightMoment { d, power } => {
                if !(1..=8).contains(&power) {
                    return Err(CliError::Config(format!("height moment power must be 1..8, got {power}")));
                }
                Observable::HeightMoment { d: (d[0], d[1]), power }
            }
        })
    }

    /// Column id in measurement files.
    pub fn id(&self) -> String {
        match self {
            ObsSpec::Energy => "energy".into(),
            ObsSpec::Density { r } => format!("density_t{r}"),
            ObsSpec::Edge { x1, x2, r } => format!("edge_{x1}_{x2}_t{r}"),
            ObsSpec::HeightDiff { from, to } => format!("hdiff_{}_{}_{}_{}", from[0], from[1], to[0], to[1]),
            ObsSpec::Pair { r, rp, d } => format!("pair_t{r}_t{rp}_{}_{}", d[0], d[1]),
            ObsSpec::HeightMoment { d, power } => format!("hmom{power}_{}_{}", d[0], d[1]),
        }
    }
}
