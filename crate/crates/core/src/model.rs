//! Hamiltonian builders: disordered XY chains, 3-edge-colored interaction
//! graphs (Kitaev-type), and alternating XY-ZZ chains.
//!
//! Every builder produces a [`Hamiltonian`]: a weighted list of Pauli strings
//! with real nonzero coefficients, no duplicates, and no identity term.
//! Class structure downstream depends only on which strings appear, not on
//! the coefficient values, so "disordered" couplings are any generic nonzero
//! reals; [`XYCouplings::random`] draws them reproducibly from a seeded RNG.

use std::collections::HashSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, SiteOp};

/// Weighted Pauli-string decomposition H = sum_n h_n H_n.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    num_sites: u32,
    terms: Vec<(f64, PauliString)>,
}

impl Hamiltonian {
    /// Validate and build from explicit terms. Zero-coefficient terms are
    /// dropped; duplicate strings, identity strings, non-finite coefficients,
    /// and site-count mismatches are rejected.
    pub fn new(num_sites: u32, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut kept = Vec::with_capacity(terms.len());
        let mut seen = HashSet::new();
        for (h, p) in terms {
            if !h.is_finite() {
                return Err(Error::Model(format!("non-finite coefficient {h}")));
            }
            if h == 0.0 {
                continue;
            }
            if p.num_sites() != num_sites {
                return Err(Error::size_mismatch(num_sites, p.num_sites()));
            }
            if p.is_identity() {
                return Err(Error::Model("identity string in Hamiltonian".into()));
            }
            if !seen.insert(p.clone()) {
                return Err(Error::Model(format!("duplicate Hamiltonian string {p}")));
            }
            kept.push((h, p));
        }
        Ok(Hamiltonian {
            num_sites,
            terms: kept,
        })
    }

    pub fn num_sites(&self) -> u32 {
        self.num_sites
    }

    /// The weighted Hamiltonian strings (h_n, H_n).
    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    /// Number of Hamiltonian strings M.
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Sum of absolute coefficients, used for integrator step heuristics.
    pub fn coeff_l1_norm(&self) -> f64 {
        self.terms.iter().map(|(h, _)| h.abs()).sum()
    }

    /// Same strings, coefficients replaced by fresh random nonzero values.
    /// Class structure must be invariant under this (a tested property).
    pub fn with_random_coefficients(&self, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms = self
            .terms
            .iter()
            .map(|(_, p)| (random_nonzero(&mut rng, 0.25, 1.75), p.clone()))
            .collect();
        Hamiltonian {
            num_sites: self.num_sites,
            terms,
        }
    }
}

/// Boundary condition of a chain model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Open,
    Periodic,
}

/// Per-bond couplings of the disordered XY chain
/// H = sum_i (J^xx_i X_iX_{i+1} + J^yy_i Y_iY_{i+1} + J^xy_i X_iY_{i+1}
///          + J^yx_i Y_iX_{i+1}) + sum_i h^z_i Z_i.
#[derive(Debug, Clone)]
pub struct XYCouplings {
    pub num_sites: u32,
    pub jxx: Vec<f64>,
    pub jyy: Vec<f64>,
    pub jxy: Vec<f64>,
    pub jyx: Vec<f64>,
    pub hz: Vec<f64>,
    pub boundary: Boundary,
}

impl XYCouplings {
    fn num_bonds(num_sites: u32, boundary: Boundary) -> usize {
        match boundary {
            Boundary::Open => num_sites as usize - 1,
            Boundary::Periodic => num_sites as usize,
        }
    }

    /// All four bond couplings equal to `j`, all fields equal to `hz`.
    pub fn uniform(num_sites: u32, j: f64, hz: f64, boundary: Boundary) -> Result<Self> {
        check_chain_size(num_sites, boundary)?;
        let nb = Self::num_bonds(num_sites, boundary);
        Ok(XYCouplings {
            num_sites,
            jxx: vec![j; nb],
            jyy: vec![j; nb],
            jxy: vec![j; nb],
            jyx: vec![j; nb],
            hz: vec![hz; num_sites as usize],
            boundary,
        })
    }

    /// Disordered instance: every coupling and field drawn uniformly from
    /// [lo, hi] (values of magnitude below 1e-6 are resampled so that no
    /// term accidentally vanishes). Reproducible for a fixed `seed`.
    pub fn random(num_sites: u32, lo: f64, hi: f64, seed: u64, boundary: Boundary) -> Result<Self> {
        check_chain_size(num_sites, boundary)?;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Model(format!("bad coupling interval [{lo}, {hi}]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nb = Self::num_bonds(num_sites, boundary);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| random_nonzero_in(&mut rng, lo, hi)).collect()
        };
        Ok(XYCouplings {
            num_sites,
            jxx: draw(nb),
            jyy: draw(nb),
            jxy: draw(nb),
            jyx: draw(nb),
            hz: draw(num_sites as usize),
            boundary,
        })
    }

    fn validate(&self) -> Result<()> {
        check_chain_size(self.num_sites, self.boundary)?;
        let nb = Self::num_bonds(self.num_sites, self.boundary);
        for (name, v) in [
            ("jxx", &self.jxx),
            ("jyy", &self.jyy),
            ("jxy", &self.jxy),
            ("jyx", &self.jyx),
        ] {
            if v.len() != nb {
                return Err(Error::Model(format!(
                    "{name} has {} entries, expected {nb} bonds",
                    v.len()
                )));
            }
        }
        if self.hz.len() != self.num_sites as usize {
            return Err(Error::Model(format!(
                "hz has {} entries, expected {}",
                self.hz.len(),
                self.num_sites
            )));
        }
        Ok(())
    }
}

fn check_chain_size(num_sites: u32, boundary: Boundary) -> Result<()> {
    let min = match boundary {
        Boundary::Open => 2,
        // A 2-site ring would duplicate the single bond.
        Boundary::Periodic => 3,
    };
    if num_sites < min {
        return Err(Error::Model(format!(
            "chain needs at least {min} sites for {boundary:?} boundary, got {num_sites}"
        )));
    }
    Ok(())
}

fn random_nonzero(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    random_nonzero_in(rng, lo, hi)
}

pub(crate) fn random_nonzero_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    loop {
        let v: f64 = rng.random_range(lo..hi);
        if v.abs() > 1e-6 {
            return v;
        }
    }
}

/// Build the XY-chain Hamiltonian of the couplings `c`.
pub fn build_xy(c: &XYCouplings) -> Result<Hamiltonian> {
    c.validate()?;
    let l = c.num_sites;
    let nb = XYCouplings::num_bonds(l, c.boundary);
    let mut terms = Vec::new();
    for b in 0..nb {
        let i = b + 1;
        let i2 = if i == l as usize { 1 } else { i + 1 };
        for (coef, (oi, oj)) in [
            (c.jxx[b], (SiteOp::X, SiteOp::X)),
            (c.jyy[b], (SiteOp::Y, SiteOp::Y)),
            (c.jxy[b], (SiteOp::X, SiteOp::Y)),
            (c.jyx[b], (SiteOp::Y, SiteOp::X)),
        ] {
            let s = PauliString::from_ops(l, &[(i, oi), (i2, oj)])?;
            terms.push((coef, s));
        }
    }
    for i in 1..=l as usize {
        terms.push((c.hz[i - 1], PauliString::single(l, i, SiteOp::Z)?));
    }
    Hamiltonian::new(l, terms)
}

/// Edge color of an interaction graph, selecting the coupled Pauli axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Color {
    X,
    Y,
    Z,
}

impl Color {
    pub fn site_op(self) -> SiteOp {
        match self {
            Color::X => SiteOp::X,
            Color::Y => SiteOp::Y,
            Color::Z => SiteOp::Z,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "x" | "X" => Ok(Color::X),
            "y" | "Y" => Ok(Color::Y),
            "z" | "Z" => Ok(Color::Z),
            other => Err(Error::Config(format!("bad edge color '{other}'"))),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Color::X => 'x',
            Color::Y => 'y',
            Color::Z => 'z',
        }
    }
}

/// One colored graph edge with its coupling constant.
#[derive(Debug, Clone, Copy)]
pub struct Edge {
    /// 1-based vertex indices, i != j.
    pub i: usize,
    pub j: usize,
    pub color: Color,
    pub coupling: f64,
}

/// Properly 3-edge-colored interaction graph: at most three edges per vertex,
/// no two of the same color at one vertex.
#[derive(Debug, Clone)]
pub struct InteractionGraph {
    num_vertices: u32,
    edges: Vec<Edge>,
}

impl InteractionGraph {
    pub fn new(num_vertices: u32, edges: Vec<Edge>) -> Result<Self> {
        let g = InteractionGraph {
            num_vertices,
            edges,
        };
        g.validate()?;
        Ok(g)
    }

    /// The 1D Kitaev chain: a path with the repeating color pattern
    /// x, y, z, x, ... and the given per-edge couplings.
    pub fn kitaev_chain(num_vertices: u32, couplings: &[f64]) -> Result<Self> {
        if num_vertices < 2 {
            return Err(Error::Model("chain needs at least 2 vertices".into()));
        }
        if couplings.len() != num_vertices as usize - 1 {
            return Err(Error::Model(format!(
                "expected {} couplings, got {}",
                num_vertices - 1,
                couplings.len()
            )));
        }
        let cyc = [Color::X, Color::Y, Color::Z];
        let edges = couplings
            .iter()
            .enumerate()
            .map(|(b, &cpl)| Edge {
                i: b + 1,
                j: b + 2,
                color: cyc[b % 3],
                coupling: cpl,
            })
            .collect();
        InteractionGraph::new(num_vertices, edges)
    }

    pub fn num_vertices(&self) -> u32 {
        self.num_vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of independent cycles (circuit rank) of the graph.
    pub fn num_loops(&self) -> usize {
        // circuit rank = E - V + number of connected components
        let n = self.num_vertices as usize;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut v: usize) -> usize {
            while parent[v] != v {
                parent[v] = parent[parent[v]];
                v = parent[v];
            }
            v
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i - 1), find(&mut parent, e.j - 1));
            if a != b {
                parent[a] = b;
            }
        }
        let components = (0..n).filter(|&v| find(&mut parent, v) == v).count();
        self.edges.len() + components - n
    }

    /// Add chord edges; the result must still be a valid graph. Returns the
    /// augmented graph together with the number of independent cycles added.
    pub fn add_loops(&self, extra: &[Edge]) -> Result<(InteractionGraph, usize)> {
        let before = self.num_loops();
        let mut edges = self.edges.clone();
        edges.extend_from_slice(extra);
        let g = InteractionGraph::new(self.num_vertices, edges)?;
        let added = g.num_loops() - before;
        Ok((g, added))
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vertices as usize;
        let mut seen_pairs = HashSet::new();
        let mut colors_at: Vec<Vec<Color>> = vec![Vec::new(); n];
        for e in &self.edges {
            if e.i == e.j {
                return Err(Error::Model(format!("self-loop at vertex {}", e.i)));
            }
            for v in [e.i, e.j] {
                if v == 0 || v > n {
                    return Err(Error::SiteOutOfRange {
                        site: v,
                        num_sites: self.num_vertices,
                    });
                }
            }
            if !e.coupling.is_finite() {
                return Err(Error::Model(format!(
                    "non-finite coupling on edge ({}, {})",
                    e.i, e.j
                )));
            }
            let key = (e.i.min(e.j), e.i.max(e.j));
            if !seen_pairs.insert(key) {
                return Err(Error::Model(format!(
                    "multi-edge between vertices {} and {}",
                    key.0, key.1
                )));
            }
            for v in [e.i, e.j] {
                if colors_at[v - 1].contains(&e.color) {
                    return Err(Error::ImproperColoring { vertex: v });
                }
                colors_at[v - 1].push(e.color);
                if colors_at[v - 1].len() > 3 {
                    return Err(Error::DegreeExceeded { vertex: v });
                }
            }
        }
        Ok(())
    }
}

/// Build the graph Hamiltonian: one term coupling * S_i S_j per edge, with S
/// matching the edge color.
pub fn build_kitaev(g: &InteractionGraph) -> Result<Hamiltonian> {
    let l = g.num_vertices();
    let terms = g
        .edges()
        .iter()
        .map(|e| {
            let op = e.color.site_op();
            PauliString::from_ops(l, &[(e.i, op), (e.j, op)]).map(|s| (e.coupling, s))
        })
        .collect::<Result<Vec<_>>>()?;
    Hamiltonian::new(l, terms)
}

/// Couplings of the alternating XY-ZZ chain on `num_sites` qubits:
/// XY bonds (X X + Y Y) on odd bonds (2i-1, 2i), ZZ bonds on even bonds
/// (2i, 2i+1), truncated at the chain end.
#[derive(Debug, Clone)]
pub struct XYZZCouplings {
    pub num_sites: u32,
    /// J^x_i and J^y_i on odd bonds (2i-1, 2i), i = 1..floor(n/2).
    pub jx: Vec<f64>,
    pub jy: Vec<f64>,
    /// J^z_i on even bonds (2i, 2i+1), i = 1..floor((n-1)/2).
    pub jz: Vec<f64>,
}

impl XYZZCouplings {
    pub fn odd_bond_count(num_sites: u32) -> usize {
        num_sites as usize / 2
    }

    pub fn even_bond_count(num_sites: u32) -> usize {
        (num_sites as usize).saturating_sub(1) / 2
    }

    pub fn uniform(num_sites: u32, j: f64) -> Result<Self> {
        if num_sites < 2 {
            return Err(Error::Model("XY-ZZ chain needs at least 2 sites".into()));
        }
        Ok(XYZZCouplings {
            num_sites,
            jx: vec![j; Self::odd_bond_count(num_sites)],
            jy: vec![j; Self::odd_bond_count(num_sites)],
            jz: vec![j; Self::even_bond_count(num_sites)],
        })
    }

    pub fn random(num_sites: u32, lo: f64, hi: f64, seed: u64) -> Result<Self> {
        if num_sites < 2 {
            return Err(Error::Model("XY-ZZ chain needs at least 2 sites".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n).map(|_| random_nonzero_in(&mut rng, lo, hi)).collect()
        };
        Ok(XYZZCouplings {
            num_sites,
            jx: draw(Self::odd_bond_count(num_sites)),
            jy: draw(Self::odd_bond_count(num_sites)),
            jz: draw(Self::even_bond_count(num_sites)),
        })
    }
}

/// Build the XY-ZZ Hamiltonian of the couplings `c`.
pub fn build_xyzz(c: &XYZZCouplings) -> Result<Hamiltonian> {
    let n = c.num_sites;
    let odd = XYZZCouplings::odd_bond_count(n);
    let even = XYZZCouplings::even_bond_count(n);
    if c.jx.len() != odd || c.jy.len() != odd {
        return Err(Error::Model(format!(
            "expected {odd} XY-bond couplings, got jx={} jy={}",
            c.jx.len(),
            c.jy.len()
        )));
    }
    if c.jz.len() != even {
        return Err(Error::Model(format!(
            "expected {even} ZZ-bond couplings, got {}",
            c.jz.len()
        )));
    }
    let mut terms = Vec::new();
    for b in 0..odd {
        let (i, j) = (2 * b + 1, 2 * b + 2);
        terms.push((
            c.jx[b],
            PauliString::from_ops(n, &[(i, SiteOp::X), (j, SiteOp::X)])?,
        ));
        terms.push((
            c.jy[b],
            PauliString::from_ops(n, &[(i, SiteOp::Y), (j, SiteOp::Y)])?,
        ));
    }
    for b in 0..even {
        let (i, j) = (2 * b + 2, 2 * b + 3);
        terms.push((
            c.jz[b],
            PauliString::from_ops(n, &[(i, SiteOp::Z), (j, SiteOp::Z)])?,
        ));
    }
    Hamiltonian::new(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xy_term_count_and_weight() {
        // 4 bond terms per bond plus one field term per site
        let c = XYCouplings::uniform(3, 1.0, 1.0, Boundary::Open).unwrap();
        let h = build_xy(&c).unwrap();
        assert_eq!(h.num_terms(), 4 * 2 + 3);
        assert!(h.terms().iter().all(|(_, p)| p.weight() <= 2));

        let c = XYCouplings::uniform(5, 1.0, 0.5, Boundary::Periodic).unwrap();
        assert_eq!(build_xy(&c).unwrap().num_terms(), 4 * 5 + 5);
    }

    #[test]
    fn xy_single_bond() {
        let mut c = XYCouplings::uniform(2, 0.0, 0.0, Boundary::Open).unwrap();
        c.jxx[0] = 1.0;
        let h = build_xy(&c).unwrap();
        assert_eq!(h.num_terms(), 1);
        assert_eq!(h.terms()[0].1, PauliString::parse("X1 X2", 2).unwrap());
    }

    #[test]
    fn xy_zero_couplings_dropped() {
        let mut c = XYCouplings::uniform(3, 1.0, 1.0, Boundary::Open).unwrap();
        c.hz = vec![0.0; 3];
        assert_eq!(build_xy(&c).unwrap().num_terms(), 8);
    }

    #[test]
    fn xy_random_is_reproducible_and_nonzero() {
        let a = XYCouplings::random(6, -1.0, 1.0, 42, Boundary::Open).unwrap();
        let b = XYCouplings::random(6, -1.0, 1.0, 42, Boundary::Open).unwrap();
        assert_eq!(a.jxy, b.jxy);
        assert!(a.jxx.iter().all(|v| v.abs() > 1e-6));
        let c = XYCouplings::random(6, -1.0, 1.0, 43, Boundary::Open).unwrap();
        assert_ne!(a.jxx, c.jxx);
    }

    #[test]
    fn kitaev_coloring_enforced() {
        let bad = InteractionGraph::new(
            3,
            vec![
                Edge { i: 1, j: 2, color: Color::X, coupling: 1.0 },
                Edge { i: 2, j: 3, color: Color::X, coupling: 1.0 },
            ],
        );
        assert!(matches!(bad, Err(Error::ImproperColoring { vertex: 2 })));

        let good = InteractionGraph::new(
            3,
            vec![
                Edge { i: 1, j: 2, color: Color::X, coupling: 1.0 },
                Edge { i: 2, j: 3, color: Color::Y, coupling: 1.0 },
            ],
        )
        .unwrap();
        let h = build_kitaev(&good).unwrap();
        assert_eq!(h.num_terms(), 2);
        assert_eq!(h.terms()[0].1, PauliString::parse("X1 X2", 3).unwrap());
        assert_eq!(h.terms()[1].1, PauliString::parse("Y2 Y3", 3).unwrap());
    }

    #[test]
    fn kitaev_chain_pattern() {
        let g = InteractionGraph::kitaev_chain(30, &[1.0; 29]).unwrap();
        let h = build_kitaev(&g).unwrap();
        assert_eq!(h.num_terms(), 29);
        assert_eq!(g.edges()[0].color, Color::X);
        assert_eq!(g.edges()[1].color, Color::Y);
        assert_eq!(g.edges()[2].color, Color::Z);
        assert_eq!(g.edges()[3].color, Color::X);
        assert_eq!(g.num_loops(), 0);
    }

    #[test]
    fn add_loops_counts_cycles() {
        let g = InteractionGraph::kitaev_chain(12, &[1.0; 11]).unwrap();
        // vertex 5 touches colors x (edge 4-5) and y (edge 5-6), vertex 8
        // likewise x and y, so a chord 5-8 must be colored z.
        let chord = |i: usize, j: usize, color: Color| Edge { i, j, color, coupling: 1.0 };
        let (g1, m1) = g.add_loops(&[chord(5, 8, Color::Z)]).unwrap();
        assert_eq!(m1, 1);
        assert_eq!(g1.num_loops(), 1);
        let (_, m2) = g.add_loops(&[chord(5, 8, Color::Z), chord(2, 11, Color::Z)]).unwrap();
        assert_eq!(m2, 2);
        assert!(g.add_loops(&[chord(5, 8, Color::X)]).is_err());
    }

    #[test]
    fn degree_cap() {
        let mut edges = vec![
            Edge { i: 1, j: 2, color: Color::X, coupling: 1.0 },
            Edge { i: 1, j: 3, color: Color::Y, coupling: 1.0 },
            Edge { i: 1, j: 4, color: Color::Z, coupling: 1.0 },
        ];
        assert!(InteractionGraph::new(5, edges.clone()).is_ok());
        // a fourth edge at vertex 1 must repeat a color, so coloring trips first
        edges.push(Edge { i: 1, j: 5, color: Color::X, coupling: 1.0 });
        assert!(InteractionGraph::new(5, edges).is_err());
    }

    #[test]
    fn xyzz_expansion() {
        let h = build_xyzz(&XYZZCouplings::uniform(4, 1.0).unwrap()).unwrap();
        let strings: Vec<String> = h.terms().iter().map(|(_, p)| p.format()).collect();
        assert_eq!(strings, vec!["X1 X2", "Y1 Y2", "X3 X4", "Y3 Y4", "Z2 Z3"]);

        let h2 = build_xyzz(&XYZZCouplings::uniform(2, 1.0).unwrap()).unwrap();
        let s2: Vec<String> = h2.terms().iter().map(|(_, p)| p.format()).collect();
        assert_eq!(s2, vec!["X1 X2", "Y1 Y2"]);

        let h5 = build_xyzz(&XYZZCouplings::uniform(5, 1.0).unwrap()).unwrap();
        let s5: Vec<String> = h5.terms().iter().map(|(_, p)| p.format()).collect();
        assert_eq!(s5, vec!["X1 X2", "Y1 Y2", "X3 X4", "Y3 Y4", "Z2 Z3", "Z4 Z5"]);
    }

    #[test]
    fn hamiltonian_invariants() {
        let p = PauliString::parse("X1", 2).unwrap();
        assert!(Hamiltonian::new(2, vec![(1.0, p.clone()), (2.0, p.clone())]).is_err());
        assert!(Hamiltonian::new(2, vec![(1.0, PauliString::identity(2))]).is_err());
        assert!(Hamiltonian::new(2, vec![(f64::NAN, p.clone())]).is_err());
        let h = Hamiltonian::new(2, vec![(0.0, p)]).unwrap();
        assert_eq!(h.num_terms(), 0);
    }

    #[test]
    fn pbc_needs_three_sites() {
        assert!(XYCouplings::uniform(2, 1.0, 0.0, Boundary::Periodic).is_err());
    }
}
