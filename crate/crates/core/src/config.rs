//! JSON descriptions of models and gate schedules, shared with the CLI.
//!
//! A model config names one of the three built-in families and one coupling
//! source: explicit arrays, a uniform value, or a seeded random draw. The
//! graph field replaces the default chain topology for the colored-graph
//! family. Gate schedules are JSON arrays of timed gate entries.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{
    build_kitaev, build_xy, build_xyzz, random_nonzero_in, Boundary, Color, Edge, Hamiltonian,
    InteractionGraph, XYCouplings, XYZZCouplings,
};
use crate::quench::{QuenchGate, TimedGate};

/// Which Hamiltonian family to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Xy,
    Kitaev,
    Xyzz,
}

impl ModelKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "xy" => Ok(ModelKind::Xy),
            "kitaev" => Ok(ModelKind::Kitaev),
            "xyzz" => Ok(ModelKind::Xyzz),
            other => Err(Error::Config(format!(
                "unknown model '{other}' (expected xy, kitaev, or xyzz)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    #[default]
    Open,
    Periodic,
}

impl From<BoundaryKind> for Boundary {
    fn from(b: BoundaryKind) -> Boundary {
        match b {
            BoundaryKind::Open => Boundary::Open,
            BoundaryKind::Periodic => Boundary::Periodic,
        }
    }
}

/// Explicit coupling arrays; the shape picks the family it applies to.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CouplingArrays {
    /// Four bond arrays and the field array of the XY chain.
    Xy {
        jxx: Vec<f64>,
        jyy: Vec<f64>,
        jxy: Vec<f64>,
        jyx: Vec<f64>,
        hz: Vec<f64>,
    },
    /// Odd-bond XX/YY and even-bond ZZ couplings of the alternating chain.
    Xyzz {
        jx: Vec<f64>,
        jy: Vec<f64>,
        jz: Vec<f64>,
    },
    /// Per-edge couplings along the default colored chain.
    PerBond(Vec<f64>),
}

/// Uniform coupling value; the split form sets chain fields separately.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum UniformSpec {
    Scalar(f64),
    Split { j: f64, hz: f64 },
}

/// Seeded uniform draw from [lo, hi] for every coupling (and field).
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSpec {
    pub lo: f64,
    pub hi: f64,
    pub seed: u64,
}

/// Edge entry [i, j, "x"|"y"|"z", J].
#[derive(Debug, Clone, Deserialize)]
pub struct EdgeSpec(pub usize, pub usize, pub String, pub f64);

impl EdgeSpec {
    fn to_edge(&self) -> Result<Edge> {
        Ok(Edge {
            i: self.0,
            j: self.1,
            color: Color::parse(&self.2)?,
            coupling: self.3,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub edges: Vec<EdgeSpec>,
}

/// Parsed model description. Exactly one coupling source must be present:
/// `couplings`, `uniform`, `random`, or (colored-graph family only) `graph`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub model: ModelKind,
    #[serde(rename = "L", alias = "n")]
    pub num_sites: u32,
    #[serde(default)]
    pub boundary: BoundaryKind,
    #[serde(default)]
    pub couplings: Option<CouplingArrays>,
    #[serde(default)]
    pub uniform: Option<UniformSpec>,
    #[serde(default)]
    pub random: Option<RandomSpec>,
    #[serde(default)]
    pub graph: Option<GraphSpec>,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model config: {e}")))
    }

    fn coupling_sources(&self) -> usize {
        self.couplings.is_some() as usize
            + self.uniform.is_some() as usize
            + self.random.is_some() as usize
            + self.graph.is_some() as usize
    }

    /// Build the configured interaction graph (colored-graph family only).
    pub fn build_graph(&self) -> Result<InteractionGraph> {
        if self.model != ModelKind::Kitaev {
            return Err(Error::Config(
                "interaction graphs apply to the kitaev family only".into(),
            ));
        }
        if self.boundary != BoundaryKind::Open {
            return Err(Error::Config(
                "boundary selection applies to the xy chain; use explicit graph edges".into(),
            ));
        }
        if self.coupling_sources() != 1 {
            return Err(Error::Config(
                "specify exactly one of couplings, uniform, random, or graph".into(),
            ));
        }
        let l = self.num_sites;
        if let Some(g) = &self.graph {
            let edges = g
                .edges
                .iter()
                .map(EdgeSpec::to_edge)
                .collect::<Result<Vec<_>>>()?;
            return InteractionGraph::new(l, edges);
        }
        let nb = l.saturating_sub(1) as usize;
        let couplings: Vec<f64> = if let Some(u) = self.uniform {
            match u {
                UniformSpec::Scalar(v) => vec![v; nb],
                UniformSpec::Split { .. } => {
                    return Err(Error::Config(
                        "split uniform {j, hz} applies to the xy chain".into(),
                    ))
                }
            }
        } else if let Some(r) = self.random {
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            (0..nb)
                .map(|_| random_nonzero_in(&mut rng, r.lo, r.hi))
                .collect()
        } else {
            match self.couplings.as_ref().expect("one source present") {
                CouplingArrays::PerBond(v) => v.clone(),
                _ => {
                    return Err(Error::Config(
                        "kitaev couplings must be a per-edge array".into(),
                    ))
                }
            }
        };
        InteractionGraph::kitaev_chain(l, &couplings)
    }

    /// Build the configured Hamiltonian.
    pub fn build(&self) -> Result<Hamiltonian> {
        if self.coupling_sources() != 1 {
            return Err(Error::Config(
                "specify exactly one of couplings, uniform, random, or graph".into(),
            ));
        }
        let l = self.num_sites;
        match self.model {
            ModelKind::Xy => {
                if self.graph.is_some() {
                    return Err(Error::Config(
                        "graph edges apply to the kitaev family".into(),
                    ));
                }
                let b: Boundary = self.boundary.into();
                let c = if let Some(u) = self.uniform {
                    match u {
                        UniformSpec::Scalar(v) => XYCouplings::uniform(l, v, v, b)?,
                        UniformSpec::Split { j, hz } => XYCouplings::uniform(l, j, hz, b)?,
                    }
                } else if let Some(r) = self.random {
                    XYCouplings::random(l, r.lo, r.hi, r.seed, b)?
                } else {
                    match self.couplings.clone().expect("one source present") {
                        CouplingArrays::Xy {
                            jxx,
                            jyy,
                            jxy,
                            jyx,
                            hz,
                        } => XYCouplings {
                            num_sites: l,
                            jxx,
                            jyy,
                            jxy,
                            jyx,
                            hz,
                            boundary: b,
                        },
                        _ => {
                            return Err(Error::Config(
                                "xy couplings need jxx, jyy, jxy, jyx, hz arrays".into(),
                            ))
                        }
                    }
                };
                build_xy(&c)
            }
            ModelKind::Kitaev => build_kitaev(&self.build_graph()?),
            ModelKind::Xyzz => {
                if self.graph.is_some() {
                    return Err(Error::Config(
                        "graph edges apply to the kitaev family".into(),
                    ));
                }
                if self.boundary != BoundaryKind::Open {
                    return Err(Error::Config(
                        "boundary selection applies to the xy chain".into(),
                    ));
                }
                let c = if let Some(u) = self.uniform {
                    match u {
                        UniformSpec::Scalar(v) => XYZZCouplings::uniform(l, v)?,
                        UniformSpec::Split { .. } => {
                            return Err(Error::Config(
                                "split uniform {j, hz} applies to the xy chain".into(),
                            ))
                        }
                    }
                } else if let Some(r) = self.random {
                    XYZZCouplings::random(l, r.lo, r.hi, r.seed)?
                } else {
                    match self.couplings.clone().expect("one source present") {
                        CouplingArrays::Xyzz { jx, jy, jz } => XYZZCouplings {
                            num_sites: l,
                            jx,
                            jy,
                            jz,
                        },
                        _ => {
                            return Err(Error::Config(
                                "xyzz couplings need jx, jy, jz arrays".into(),
                            ))
                        }
                    }
                };
                build_xyzz(&c)
            }
        }
    }
}

/// Graph edge list in CSV form: one `i,j,color,J` row per edge. Blank lines
/// and lines starting with `#` are skipped.
pub fn parse_graph_csv(text: &str) -> Result<Vec<Edge>> {
    let mut edges = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(Error::Config(format!(
                "graph csv line {}: expected i,j,color,J, got '{line}'",
                ln + 1
            )));
        }
        let parse_idx = |s: &str| -> Result<usize> {
            s.parse()
                .map_err(|_| Error::Config(format!("graph csv line {}: bad index '{s}'", ln + 1)))
        };
        let coupling: f64 = cols[3].parse().map_err(|_| {
            Error::Config(format!("graph csv line {}: bad coupling '{}'", ln + 1, cols[3]))
        })?;
        edges.push(Edge {
            i: parse_idx(cols[0])?,
            j: parse_idx(cols[1])?,
            color: Color::parse(cols[2])?,
            coupling,
        });
    }
    if edges.is_empty() {
        return Err(Error::Config("graph csv contains no edges".into()));
    }
    Ok(edges)
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateEntry {
    t: f64,
    gate: String,
    #[serde(default)]
    sites: Option<Vec<usize>>,
    #[serde(default)]
    site: Option<usize>,
    #[serde(default)]
    alpha: Option<f64>,
}

impl GateEntry {
    fn to_timed(&self) -> Result<TimedGate> {
        let one_site = |entry: &GateEntry| -> Result<usize> {
            if entry.sites.is_some() {
                return Err(Error::Config(format!(
                    "gate '{}' takes a single 'site', not 'sites'",
                    entry.gate
                )));
            }
            entry
                .site
                .ok_or_else(|| Error::Config(format!("gate '{}' needs 'site'", entry.gate)))
        };
        let gate = match self.gate.to_ascii_lowercase().as_str() {
            "swap" => {
                if self.site.is_some() {
                    return Err(Error::Config("swap takes 'sites': [a, b]".into()));
                }
                match self.sites.as_deref() {
                    Some([a, b]) => QuenchGate::Swap { a: *a, b: *b },
                    _ => return Err(Error::Config("swap takes 'sites': [a, b]".into())),
                }
            }
            "x" | "paulix" => QuenchGate::PauliX {
                site: one_site(self)?,
            },
            "y" | "pauliy" => QuenchGate::PauliY {
                site: one_site(self)?,
            },
            "z" | "pauliz" => QuenchGate::PauliZ {
                site: one_site(self)?,
            },
            "s" | "phases" => QuenchGate::PhaseS {
                site: one_site(self)?,
            },
            "axisw" => QuenchGate::AxisW {
                site: one_site(self)?,
                alpha: self.alpha.ok_or_else(|| {
                    Error::Config("axisw needs 'alpha' (radians)".into())
                })?,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown gate '{other}' (expected swap, x, y, z, s, or axisw)"
                )))
            }
        };
        if !matches!(gate, QuenchGate::AxisW { .. }) && self.alpha.is_some() {
            return Err(Error::Config(format!(
                "gate '{}' takes no 'alpha'",
                self.gate
            )));
        }
        Ok(TimedGate { time: self.t, gate })
    }
}

/// Gate schedule from JSON: an array of
/// `{"t": 1.0, "gate": "swap", "sites": [2, 3]}` style entries; single-site
/// gates use `"site"`, the axis reflection adds `"alpha"`.
pub fn parse_schedule_json(text: &str) -> Result<Vec<TimedGate>> {
    let entries: Vec<GateEntry> =
        serde_json::from_str(text).map_err(|e| Error::Config(format!("gate schedule: {e}")))?;
    entries.iter().map(GateEntry::to_timed).collect()
}
