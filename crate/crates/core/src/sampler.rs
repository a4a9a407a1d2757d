//! Metropolis plaquette-flip sampler in a fixed winding sector.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_even, Error, Result};
use crate::interaction::{affected_terms, energy, flip_changes, local_energy, InteractionSpec};
use crate::lattice::{validate_config, winding, Coord, DimerConfig, EdgeRef, EdgeType, Face, LatticePath, Parity};
use crate::spectral::EdgeWeights;

/// Initial configuration, which fixes the winding sector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Columnar,
    Staircase { w1: i64, w2: i64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MCConfig {
    pub l: usize,
    pub t: EdgeWeights,
    pub lambda: f64,
    pub spec: InteractionSpec,
    pub sweeps: u64,
    pub thermalization: u64,
    pub measure_every: u64,
    pub seed: u64,
    pub init: Init,
}

impl MCConfig {
    pub fn validate(&self) -> Result<()> {
        check_even(self.l)?;
        if self.sweeps <= self.thermalization {
            return Err(Error::Invalid("sweeps must exceed thermalization".into()));
        }
        if self.measure_every == 0 {
            return Err(Error::Invalid("measure_every must be positive".into()));
        }
        if !self.lambda.is_finite() {
            return Err(Error::Invalid("lambda must be finite".into()));
        }
        Ok(())
    }
}

/// Evenly spread `n` ones over `l` slots.
fn spread(n: usize, l: usize) -> Vec<bool> {
    (0..l).map(|j| (j + 1) * n / l > j * n / l).collect()
}

/// Zero-tilt columnar state or a staircase state with winding `(w1, w2)`.
pub fn init_config(l: usize, init: Init) -> Result<DimerConfig> {
    check_even(l)?;
    let h = l as i64 / 2;
    let (w1, w2) = match init {
        Init::Columnar => {
            return DimerConfig::from_fn(l, |x| if (x.x1 + x.x2) % 2 == 0 { EdgeType::T1 } else { EdgeType::T3 });
        }
        Init::Staircase { w1, w2 } => (w1, w2),
    };
    if w1.abs() > h || w2.abs() > h {
        return Err(Error::UnrealizableWinding(w1, w2));
    }
    // the dimer at x has v = -(a, b) with a = alpha(x2), b = beta(x1 - alpha(x2))
    let alpha = spread((h - w2) as usize, l);
    let beta = spread((w1 + h) as usize, l);
    let li = l as i64;
    let m = DimerConfig::from_fn(l, |x| {
        let a = alpha[x.x2 as usize] as i64;
        let b = beta[(x.x1 - a).rem_euclid(li) as usize] as i64;
        match (a, b) {
            (0, 0) => EdgeType::T1,
            (1, 0) => EdgeType::T2,
            (1, 1) => EdgeType::T3,
            _ => EdgeType::T4,
        }
    })?;
    debug_assert!(validate_config(&m) && winding(&m) == (w1, w2));
    Ok(m)
}

/// Chain state: configuration, caches and generator.
#[derive(Debug, Clone)]
pub struct MCState {
    pub config: DimerConfig,
    pub energy: f64,
    pub counts: [usize; 4],
    pub rng: ChaCha8Rng,
    pub sweep: u64,
    pub chain: u64,
}

impl MCState {
    pub fn new(cfg: &MCConfig, chain: u64) -> Result<MCState> {
        cfg.validate()?;
        let config = init_config(cfg.l, cfg.init)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(chain);
        Ok(MCState { energy: energy(&config, &cfg.spec), counts: config.counts(), config, rng, sweep: 0, chain })
    }

    const MAGIC: &'static [u8; 8] = b"DLABCKPT";
    const VERSION: u32 = 1;

    /// Little-endian checkpoint: magic, version, L, seed, chain, RNG word
    /// position (u128), sweep, energy, four counts, then one type byte per
    /// black vertex in row-major order.
    pub fn write_checkpoint<W: Write>(&self, seed: u64, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Checkpoint(e.to_string());
        w.write_all(Self::MAGIC).map_err(io)?;
        w.write_u32::<LittleEndian>(Self::VERSION).map_err(io)?;
        w.write_u32::<LittleEndian>(self.config.l() as u32).map_err(io)?;
        w.write_u64::<LittleEndian>(seed).map_err(io)?;
        w.write_u64::<LittleEndian>(self.chain).map_err(io)?;
        w.write_u128::<LittleEndian>(self.rng.get_word_pos()).map_err(io)?;
        w.write_u64::<LittleEndian>(self.sweep).map_err(io)?;
        w.write_f64::<LittleEndian>(self.energy).map_err(io)?;
        for c in self.counts {
            w.write_u64::<LittleEndian>(c as u64).map_err(io)?;
        }
        let bytes: Vec<u8> = self.config.types().iter().map(|r| r.label()).collect();
        w.write_all(&bytes).map_err(io)
    }

    /// Restores a checkpoint written for the same seed.
    pub fn read_checkpoint<R: Read>(cfg: &MCConfig, mut r: R) -> Result<MCState> {
        let io = |e: std::io::Error| Error::Checkpoint(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != Self::MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = r.read_u32::<LittleEndian>().map_err(io)?;
        if version != Self::VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let l = r.read_u32::<LittleEndian>().map_err(io)? as usize;
        let seed = r.read_u64::<LittleEndian>().map_err(io)?;
        if l != cfg.l || seed != cfg.seed {
            return Err(Error::Checkpoint("checkpoint does not match the configuration".into()));
        }
        let chain = r.read_u64::<LittleEndian>().map_err(io)?;
        let pos = r.read_u128::<LittleEndian>().map_err(io)?;
        let sweep = r.read_u64::<LittleEndian>().map_err(io)?;
        let energy = r.read_f64::<LittleEndian>().map_err(io)?;
        let mut counts = [0usize; 4];
        for c in &mut counts {
            *c = r.read_u64::<LittleEndian>().map_err(io)? as usize;
        }
        let mut bytes = vec![0u8; l * l];
        r.read_exact(&mut bytes).map_err(io)?;
        let types = bytes
            .iter()
            .map(|&b| EdgeType::from_label(b).ok_or_else(|| Error::Checkpoint(format!("bad edge type {b}"))))
            .collect::<Result<Vec<_>>>()?;
        let config = DimerConfig::from_types(l, types)?;
        if !validate_config(&config) || config.counts() != counts {
            return Err(Error::Checkpoint("corrupt configuration".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(chain);
        rng.set_word_pos(pos);
        Ok(MCState { config, energy, counts, rng, sweep, chain })
    }
}

/// Outcome of proposing a flip at one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub changes: [(Coord, EdgeType, EdgeType); 2],
    pub delta_energy: f64,
    /// `min(1, weight ratio)`.
    pub acceptance: f64,
}

/// Metropolis sampler bound to one configuration.
pub struct Sampler<'a> {
    cfg: &'a MCConfig,
    ln_t: [f64; 4],
    scratch: Vec<(usize, Coord)>,
}

impl<'a> Sampler<'a> {
    pub fn new(cfg: &'a MCConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Sampler { cfg, ln_t: cfg.t.as_array().map(f64::ln), scratch: Vec::with_capacity(32) })
    }

    /// Acceptance of flipping `face`, or `None` if it is not flippable.
    pub fn propose(&mut self, m: &mut DimerConfig, face: Face) -> Option<Proposal> {
        let changes = flip_changes(m, face).ok()?;
        let spec = &self.cfg.spec;
        affected_terms(spec, &changes, &mut self.scratch);
        let before = local_energy(m, spec, &self.scratch);
        for (b, _, new) in changes {
            m.set_type(b, new);
        }
        let after = local_energy(m, spec, &self.scratch);
        for (b, old, _) in changes {
            m.set_type(b, old);
        }
        let de = after - before;
        let log_t: f64 = changes.iter().map(|(_, o, n)| self.ln_t[n.idx()] - self.ln_t[o.idx()]).sum();
        let acceptance = (log_t + self.cfg.lambda * de).exp().min(1.0);
        Some(Proposal { changes, delta_energy: de, acceptance })
    }

    fn face_at(&self, idx: usize) -> Face {
        let l = self.cfg.l;
        let n = l * l;
        let parity = if idx < n { Parity::Odd } else { Parity::Even };
        Face { anchor: Coord::from_index(idx % n, l), parity }
    }

    /// `L^2` proposals at uniformly random faces.
    pub fn sweep(&mut self, s: &mut MCState) -> u64 {
        let l = self.cfg.l;
        let nf = 2 * l * l;
        let mut accepted = 0;
        for _ in 0..l * l {
            let face = self.face_at(s.rng.random_range(0..nf));
            let Some(p) = self.propose(&mut s.config, face) else { continue };
            if p.acceptance < 1.0 && s.rng.random::<f64>() >= p.acceptance {
                continue;
            }
            for (b, old, new) in p.changes {
                s.config.set_type(b, new);
                s.counts[old.idx()] -= 1;
                s.counts[new.idx()] += 1;
            }
            s.energy += p.delta_energy;
            accepted += 1;
        }
        s.sweep += 1;
        accepted
    }

    /// Transition probabilities out of `m`: `(next state, probability)` for
    /// every flippable face, each face chosen with probability `1/(2L^2)`.
    pub fn transitions(&mut self, m: &DimerConfig) -> Vec<(DimerConfig, f64)> {
        let nf = 2 * self.cfg.l * self.cfg.l;
        let mut work = m.clone();
        (0..nf)
            .filter_map(|i| {
                let p = self.propose(&mut work, self.face_at(i))?;
                let mut next = m.clone();
                for (b, _, new) in p.changes {
                    next.set_type(b, new);
                }
                Some((next, p.acceptance / nf as f64))
            })
            .collect()
    }
}

/// Quantities recorded at each measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Observable {
    Energy,
    /// Fraction of black vertices with a dimer of type r.
    TypeDensity {
        r: EdgeType,
    },
    Edge {
        edge: EdgeRef,
    },
    /// `h(to) - h(from)` along the staircase path.
    HeightDiff {
        from: Face,
        to: Face,
    },
    /// Spatial mean of `1(x, r) 1(x + d, r')`.
    PairProduct {
        r: EdgeType,
        rp: EdgeType,
        d: (i64, i64),
    },
    /// Spatial mean of `(h(y + d) - h(y))^power` over odd faces.
    HeightMoment {
        d: (i64, i64),
        power: u32,
    },
}

impl Observable {
    pub fn name(&self) -> String {
        match self {
            Observable::Energy => "energy".into(),
            Observable::TypeDensity { r } => format!("density_t{}", r.label()),
            Observable::Edge { edge } => format!("edge_{}_{}_t{}", edge.black.x1, edge.black.x2, edge.r.label()),
            Observable::HeightDiff { from, to } => format!(
                "hdiff_{:?}_{}_{}_{}_{}",
                from.parity, from.anchor.x1, from.anchor.x2, to.anchor.x1, to.anchor.x2
            )
            .to_lowercase(),
            Observable::PairProduct { r, rp, d } => format!("pair_t{}_t{}_{}_{}", r.label(), rp.label(), d.0, d.1),
            Observable::HeightMoment { d, power } => format!("hmom{}_{}_{}", power, d.0, d.1),
        }
    }

    fn needs_height(&self) -> bool {
        matches!(self, Observable::HeightMoment { .. })
    }
}

/// Height on odd faces in units of 1/4, with `h(Odd(0,0)) = 0`, plus the
/// winding used to continue it across the seams.
pub struct HeightField {
    l: usize,
    q: Vec<i64>,
    wind: (i64, i64),
}

impl HeightField {
    pub fn new(m: &DimerConfig) -> HeightField {
        let l = m.l();
        let li = l as i64;
        let step = |e: EdgeRef, s: i64| if m.occupied(e) { 3 * s } else { -s };
        let mut q = vec![0i64; l * l];
        for x2 in 0..li {
            if x2 > 0 {
                // Odd(0, x2-1) -> Odd(0, x2) through step (-1, x2-1, 2, +)
                let c = Coord::new(-1, x2 - 1);
                q[(x2 * li) as usize] = q[((x2 - 1) * li) as usize]
                    + step(EdgeRef::new(c, EdgeType::T1), 1)
                    + step(EdgeRef::new(c.shift(0, 1), EdgeType::T4), 1);
            }
            for x1 in 1..li {
                let c = Coord::new(x1 - 1, x2);
                q[(x1 + x2 * li) as usize] = q[(x1 - 1 + x2 * li) as usize]
                    + step(EdgeRef::new(c, EdgeType::T3), 1)
                    + step(EdgeRef::new(c, EdgeType::T4), 1);
            }
        }
        let (w1, w2) = winding(m);
        HeightField { l, q, wind: (4 * w1, 4 * w2) }
    }

    /// Height of `Odd(x)` at an unwrapped position, in units of 1/4.
    pub fn quarter(&self, x: Coord) -> i64 {
        let li = self.l as i64;
        let (k1, k2) = (x.x1.div_euclid(li), x.x2.div_euclid(li));
        self.q[x.index(self.l)] + k1 * self.wind.0 + k2 * self.wind.1
    }
}

/// One value per observable at each recorded sweep.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MeasurementStream {
    pub names: Vec<String>,
    pub sweeps: Vec<u64>,
    /// `series[k][j]`: observable k at measurement j.
    pub series: Vec<Vec<f64>>,
}

impl MeasurementStream {
    pub fn new(observables: &[Observable]) -> Self {
        MeasurementStream {
            names: observables.iter().map(|o| o.name()).collect(),
            sweeps: Vec::new(),
            series: vec![Vec::new(); observables.len()],
        }
    }

    pub fn len(&self) -> usize {
        self.sweeps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sweeps.is_empty()
    }

    pub fn series(&self, name: &str) -> Option<&[f64]> {
        self.names.iter().position(|n| n == name).map(|k| self.series[k].as_slice())
    }
}

/// Evaluates the observables on the current state.
pub fn measure(s: &MCState, observables: &[Observable], out: &mut Vec<f64>) {
    let m = &s.config;
    let l = m.l();
    let n = (l * l) as f64;
    let hf = observables.iter().any(|o| o.needs_height()).then(|| HeightField::new(m));
    out.clear();
    for o in observables {
        let v = match *o {
            Observable::Energy => s.energy,
            Observable::TypeDensity { r } => s.counts[r.idx()] as f64 / n,
            Observable::Edge { edge } => m.occupied(edge) as u8 as f64,
            Observable::HeightDiff { from, to } => {
                let p = LatticePath::staircase(from, to.anchor.x1 - from.anchor.x1, to.anchor.x2 - from.anchor.x2);
                crate::height::height_diff(m, &p)
            }
            Observable::PairProduct { r, rp, d } => {
                let mut c = 0usize;
                for (i, &ty) in m.types().iter().enumerate() {
                    if ty == r && m.type_at(Coord::from_index(i, l).shift(d.0, d.1)) == rp {
                        c += 1;
                    }
                }
                c as f64 / n
            }
            Observable::HeightMoment { d, power } => {
                let hf = hf.as_ref().expect("height field");
                let mut acc = 0.0;
                for i in 0..l * l {
                    let y = Coord::from_index(i, l);
                    let dh = (hf.quarter(y.shift(d.0, d.1)) - hf.quarter(y)) as f64 / 4.0;
                    acc += dh.powi(power as i32);
                }
                acc / n
            }
        };
        out.push(v);
    }
}

/// Runs the chain from `state` up to `cfg.sweeps`, recording after
/// thermalization every `measure_every` sweeps. `on_measure` sees each row.
pub fn run_from(
    cfg: &MCConfig,
    state: &mut MCState,
    observables: &[Observable],
    mut on_measure: impl FnMut(u64, &[f64]),
) -> Result<()> {
    let mut sampler = Sampler::new(cfg)?;
    let mut row = Vec::with_capacity(observables.len());
    while state.sweep < cfg.sweeps {
        sampler.sweep(state);
        if state.sweep > cfg.thermalization && (state.sweep - cfg.thermalization) % cfg.measure_every == 0 {
            measure(state, observables, &mut row);
            on_measure(state.sweep, &row);
        }
    }
    Ok(())
}

/// Runs chain `chain` from its initial state and collects the stream.
pub fn run(cfg: &MCConfig, observables: &[Observable], chain: u64) -> Result<MeasurementStream> {
    let mut state = MCState::new(cfg, chain)?;
    let mut out = MeasurementStream::new(observables);
    run_from(cfg, &mut state, observables, |sweep, row| {
        out.sweeps.push(sweep);
        for (s, v) in out.series.iter_mut().zip(row) {
            s.push(*v);
        }
    })?;
    Ok(out)
}
