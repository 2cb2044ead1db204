//! Instantaneous gate quenches interleaved with Hamiltonian evolution.
//!
//! A gate W acts on operators by conjugation A -> W'AW (W' the adjoint).
//! Every gate here maps a Pauli string to one signed string (SWAP, single
//! Pauli, phase gate) or to a two-string rotation (the in-plane axis
//! reflection), so gate circuits act within a finite, computable extension
//! of the seed's equivalence class. The extension is staged: gates fire in
//! circuit order, each widening the reachable set once, which is what keeps
//! the SWAP-extended class polynomially sized instead of engulfing the
//! operator space.

use nalgebra::DVector;

use crate::closure::{close_over, EquivalenceClass};
use crate::dimpoly::{detect_degree, DimensionPolynomial};
use crate::dynamics::{EvolveOptions, ProductState, Stepper, Trajectory};
use crate::error::{Error, Result};
use crate::model::Hamiltonian;
use crate::pauli::{PauliString, SiteOp};

/// One quench gate. Site indices are 1-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuenchGate {
    /// Exchange the factors at two distinct sites (adjacency not required).
    Swap { a: usize, b: usize },
    PauliX { site: usize },
    PauliY { site: usize },
    PauliZ { site: usize },
    /// The phase gate diag(1, i).
    PhaseS { site: usize },
    /// Reflection about the in-plane axis W = X cos(alpha) + Y sin(alpha).
    AxisW { site: usize, alpha: f64 },
}

impl QuenchGate {
    pub fn validate(&self, num_sites: u32) -> Result<()> {
        let check = |site: usize| -> Result<()> {
            if site == 0 || site > num_sites as usize {
                Err(Error::SiteOutOfRange { site, num_sites })
            } else {
                Ok(())
            }
        };
        match *self {
            QuenchGate::Swap { a, b } => {
                check(a)?;
                check(b)?;
                if a == b {
                    return Err(Error::Config(format!("SWAP needs distinct sites, got {a}")));
                }
                Ok(())
            }
            QuenchGate::PauliX { site }
            | QuenchGate::PauliY { site }
            | QuenchGate::PauliZ { site }
            | QuenchGate::PhaseS { site } => check(site),
            QuenchGate::AxisW { site, alpha } => {
                if !alpha.is_finite() {
                    return Err(Error::Config(format!("bad rotation angle {alpha}")));
                }
                check(site)
            }
        }
    }

    /// True when conjugation sends one string to one signed string.
    pub fn is_clifford(&self) -> bool {
        !matches!(self, QuenchGate::AxisW { .. })
    }
}

/// Expansion of a conjugated string in the Pauli basis: real coefficients
/// with squares summing to one.
#[derive(Debug, Clone)]
pub struct ConjugationImage {
    pub terms: Vec<(f64, PauliString)>,
}

impl ConjugationImage {
    fn single(coeff: f64, string: PauliString) -> Self {
        ConjugationImage {
            terms: vec![(coeff, string)],
        }
    }

    /// Sum of squared coefficients; 1 up to rounding for any unitary.
    pub fn weight(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c * c).sum()
    }

    pub fn verify_isometry(&self) -> Result<()> {
        if (self.weight() - 1.0).abs() > 1e-12 {
            return Err(Error::Consistency(format!(
                "conjugation image weight {} differs from 1",
                self.weight()
            )));
        }
        Ok(())
    }
}

fn pauli_sign(gate_string: &PauliString, p: &PauliString) -> f64 {
    if p.anticommutes_unchecked(gate_string) {
        -1.0
    } else {
        1.0
    }
}

/// The image W'PW of `p` under the gate, expanded in Pauli strings.
pub fn conjugate(gate: &QuenchGate, p: &PauliString) -> Result<ConjugationImage> {
    let l = p.num_sites();
    gate.validate(l)?;
    Ok(match *gate {
        QuenchGate::Swap { a, b } => {
            let (oa, ob) = (p.site_op(a), p.site_op(b));
            let mut q = p.clone();
            q.set_site(a, ob)?;
            q.set_site(b, oa)?;
            ConjugationImage::single(1.0, q)
        }
        QuenchGate::PauliX { site } => {
            let w = PauliString::single(l, site, SiteOp::X)?;
            ConjugationImage::single(pauli_sign(&w, p), p.clone())
        }
        QuenchGate::PauliY { site } => {
            let w = PauliString::single(l, site, SiteOp::Y)?;
            ConjugationImage::single(pauli_sign(&w, p), p.clone())
        }
        QuenchGate::PauliZ { site } => {
            let w = PauliString::single(l, site, SiteOp::Z)?;
            ConjugationImage::single(pauli_sign(&w, p), p.clone())
        }
        QuenchGate::PhaseS { site } => match p.site_op(site) {
            SiteOp::I | SiteOp::Z => ConjugationImage::single(1.0, p.clone()),
            SiteOp::X => {
                let mut q = p.clone();
                q.set_site(site, SiteOp::Y)?;
                ConjugationImage::single(-1.0, q)
            }
            SiteOp::Y => {
                let mut q = p.clone();
                q.set_site(site, SiteOp::X)?;
                ConjugationImage::single(1.0, q)
            }
        },
        QuenchGate::AxisW { site, alpha } => {
            let (s2, c2) = (2.0 * alpha).sin_cos();
            match p.site_op(site) {
                SiteOp::I => ConjugationImage::single(1.0, p.clone()),
                SiteOp::Z => ConjugationImage::single(-1.0, p.clone()),
                SiteOp::X => {
                    let mut q = p.clone();
                    q.set_site(site, SiteOp::Y)?;
                    ConjugationImage {
                        terms: vec![(c2, p.clone()), (s2, q)],
                    }
                }
                SiteOp::Y => {
                    let mut q = p.clone();
                    q.set_site(site, SiteOp::X)?;
                    ConjugationImage {
                        terms: vec![(s2, q), (-c2, p.clone())],
                    }
                }
            }
        }
    })
}

/// The image W P W' (conjugation by the inverse gate), used when moving the
/// state forward instead of the observable backward. All gates here except
/// the phase gate are their own inverse.
fn conjugate_by_inverse(gate: &QuenchGate, p: &PauliString) -> Result<ConjugationImage> {
    match *gate {
        QuenchGate::PhaseS { site } => {
            gate.validate(p.num_sites())?;
            Ok(match p.site_op(site) {
                SiteOp::I | SiteOp::Z => ConjugationImage::single(1.0, p.clone()),
                SiteOp::X => {
                    let mut q = p.clone();
                    q.set_site(site, SiteOp::Y)?;
                    ConjugationImage::single(1.0, q)
                }
                SiteOp::Y => {
                    let mut q = p.clone();
                    q.set_site(site, SiteOp::X)?;
                    ConjugationImage::single(-1.0, q)
                }
            })
        }
        _ => conjugate(gate, p),
    }
}

/// Staged closure: the commutation class of the seed, widened once per gate
/// in circuit order (image strings added, then re-closed under commutation).
/// This is the operator span reachable when each gate fires once between
/// stretches of Hamiltonian evolution.
pub fn extended_class(
    h: &Hamiltonian,
    gates: &[QuenchGate],
    seed: &PauliString,
    budget: usize,
) -> Result<EquivalenceClass> {
    let stages = staged_members(h, gates, seed, budget)?;
    let (members, complete) = stages.into_final();
    Ok(EquivalenceClass::from_sorted(h.num_sites(), members, complete))
}

/// Fixed point of alternating commutation closure and whole-gate-set images:
/// the span reachable when gates may fire arbitrarily often. A single SWAP
/// already drives this to nearly half the operator space, which is why the
/// staged variant above is the physically meaningful extension for one
/// circuit pass.
pub fn saturated_extended_class(
    h: &Hamiltonian,
    gates: &[QuenchGate],
    seed: &PauliString,
    budget: usize,
) -> Result<EquivalenceClass> {
    for g in gates {
        g.validate(h.num_sites())?;
    }
    let terms: Vec<PauliString> = h.terms().iter().map(|(_, p)| p.clone()).collect();
    let (mut members, mut complete) =
        close_over(h.num_sites(), &terms, std::slice::from_ref(seed), budget)?;
    loop {
        if !complete {
            break;
        }
        let mut fresh: Vec<PauliString> = Vec::new();
        for p in &members {
            for g in gates {
                for (_, s) in conjugate(g, p)?.terms {
                    if members.binary_search(&s).is_err() {
                        fresh.push(s);
                    }
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        let mut seeds = members;
        seeds.extend(fresh);
        let (next, c) = close_over(h.num_sites(), &terms, &seeds, budget)?;
        complete = c;
        members = next;
    }
    Ok(EquivalenceClass::from_sorted(h.num_sites(), members, complete))
}

/// Member sets after each stage of the staged closure; stage 0 is the plain
/// class of the seeds, stage k adds gate k's images and re-closes.
struct StagedMembers {
    stages: Vec<Vec<PauliString>>,
    complete: bool,
}

impl StagedMembers {
    fn into_final(mut self) -> (Vec<PauliString>, bool) {
        (self.stages.pop().expect("at least one stage"), self.complete)
    }
}

fn staged_members(
    h: &Hamiltonian,
    gates: &[QuenchGate],
    seed: &PauliString,
    budget: usize,
) -> Result<StagedMembers> {
    staged_members_multi(h, gates, std::slice::from_ref(seed), budget)
}

fn staged_members_multi(
    h: &Hamiltonian,
    gates: &[QuenchGate],
    seeds: &[PauliString],
    budget: usize,
) -> Result<StagedMembers> {
    for g in gates {
        g.validate(h.num_sites())?;
    }
    let terms: Vec<PauliString> = h.terms().iter().map(|(_, p)| p.clone()).collect();
    let (members, mut complete) = close_over(h.num_sites(), &terms, seeds, budget)?;
    let mut stages = vec![members];
    for g in gates {
        let prev = stages.last().expect("stage exists");
        if !complete {
            stages.push(prev.clone());
            continue;
        }
        let mut next_seeds = prev.clone();
        for p in prev {
            for (_, s) in conjugate(g, p)?.terms {
                if prev.binary_search(&s).is_err() {
                    next_seeds.push(s);
                }
            }
        }
        let (next, c) = close_over(h.num_sites(), &terms, &next_seeds, budget)?;
        complete = c;
        stages.push(next);
    }
    Ok(StagedMembers { stages, complete })
}

/// A gate scheduled at an absolute time.
#[derive(Debug, Clone, Copy)]
pub struct TimedGate {
    pub time: f64,
    pub gate: QuenchGate,
}

/// Expectation of `observable` under piecewise dynamics: Hamiltonian
/// evolution interrupted by the scheduled gates (non-decreasing times; equal
/// times fire in list order). A sample at a gate time sees the post-gate
/// state.
///
/// Works on the state side: the density-matrix coefficients evolve with -G
/// over the staged closure seeded by the initial state's strings, and each
/// gate is the exact orthogonal map on coefficients. The reported value is
/// the observable's coefficient, which equals tr(rho(t) observable).
pub fn quenched_evolution(
    h: &Hamiltonian,
    schedule: &[TimedGate],
    observable: &PauliString,
    state: &ProductState,
    grid: &[f64],
    opts: &EvolveOptions,
    budget: usize,
) -> Result<Trajectory> {
    let l = h.num_sites();
    if observable.num_sites() != l || state.num_sites() != l {
        return Err(Error::size_mismatch(l, observable.num_sites()));
    }
    if observable.is_identity() {
        return Err(Error::Config(
            "identity observable is constant; pick a non-identity string".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::Config("time grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("time grid must be strictly ascending".into()));
    }
    let (t_start, t_end) = (grid[0], *grid.last().expect("nonempty"));
    if schedule.windows(2).any(|w| w[1].time < w[0].time) {
        return Err(Error::Config("gate times must be non-decreasing".into()));
    }
    if schedule
        .iter()
        .any(|g| !g.time.is_finite() || g.time < t_start || g.time > t_end)
    {
        return Err(Error::Config(format!(
            "gate times must lie within the sampled window [{t_start}, {t_end}]"
        )));
    }

    // seed strings of the initial state and their coefficients
    let state_strings = product_state_strings(state)?;
    if state_strings.is_empty() {
        // infinite-temperature state: every non-identity expectation is 0
        return Ok(flat_zero(grid));
    }
    let seeds: Vec<PauliString> = state_strings.iter().map(|(_, p)| p.clone()).collect();
    let gates: Vec<QuenchGate> = schedule.iter().map(|g| g.gate).collect();
    let staged = staged_members_multi(h, &gates, &seeds, budget)?;
    if !staged.complete {
        return Err(Error::IncompleteClass {
            found: staged.stages.last().map_or(0, Vec::len),
        });
    }
    let basis = EquivalenceClass::from_sorted(
        l,
        staged.stages.last().expect("final stage").clone(),
        true,
    );
    let obs_idx = match basis.index_of(observable) {
        Some(i) => i,
        // the observable never couples to the reachable span
        None => return Ok(flat_zero(grid)),
    };

    let gen = crate::dynamics::AdjointGenerator::build(h, &basis)?.negated();
    let mut c = DVector::zeros(gen.dim());
    for (w, p) in &state_strings {
        let idx = basis
            .index_of(p)
            .expect("state strings seed the staged closure");
        c[idx] = *w;
    }
    let norm0 = c.norm();
    let mut stepper = Stepper::new(&gen, opts)?;

    let mut times = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    let mut drift = Vec::with_capacity(grid.len());
    let mut t_cur = t_start;
    let mut next_gate = 0usize;
    for &t_sample in grid {
        while next_gate < schedule.len() && schedule[next_gate].time <= t_sample {
            let tg = &schedule[next_gate];
            stepper.advance(&mut c, tg.time - t_cur);
            t_cur = tg.time;
            apply_gate_in_basis(
                &tg.gate,
                &staged.stages[next_gate],
                &basis,
                &mut c,
            )?;
            next_gate += 1;
        }
        stepper.advance(&mut c, t_sample - t_cur);
        t_cur = t_sample;
        times.push(t_sample);
        values.push(c[obs_idx]);
        drift.push((c.norm() - norm0).abs());
    }
    Ok(Trajectory {
        times,
        values,
        norm_drift: drift,
    })
}

/// Scatter the gate's orthogonal action through the coefficient vector. Only
/// members of the pre-gate stage can carry amplitude; their images live in
/// the post-gate stage by construction.
fn apply_gate_in_basis(
    gate: &QuenchGate,
    pre_stage: &[PauliString],
    basis: &EquivalenceClass,
    c: &mut DVector<f64>,
) -> Result<()> {
    let mut out = DVector::zeros(c.len());
    for p in pre_stage {
        let mi = basis.index_of(p).expect("stages nest inside the basis");
        let amp = c[mi];
        if amp == 0.0 {
            continue;
        }
        for (q, r) in conjugate_by_inverse(gate, p)?.terms {
            let ri = basis.index_of(&r).ok_or_else(|| {
                Error::Consistency(format!("gate image {r} missing from the staged basis"))
            })?;
            out[ri] += q * amp;
        }
    }
    *c = out;
    Ok(())
}

/// Non-identity Pauli strings with nonzero weight in the product state
/// rho = prod (I + b.sigma)/2, paired with those weights.
fn product_state_strings(state: &ProductState) -> Result<Vec<(f64, PauliString)>> {
    const MAX_STRINGS: usize = 100_000;
    let l = state.num_sites();
    let polarized: Vec<(usize, [f64; 3])> = state
        .bloch()
        .iter()
        .enumerate()
        .filter(|(_, b)| b.iter().any(|&v| v != 0.0))
        .map(|(i, b)| (i + 1, *b))
        .collect();
    let mut out: Vec<(f64, PauliString)> = vec![(1.0, PauliString::identity(l))];
    for (site, b) in polarized {
        let mut next = Vec::with_capacity(out.len() * 2);
        for (w, p) in &out {
            next.push((*w, p.clone()));
            for (axis, op) in [(0, SiteOp::X), (1, SiteOp::Y), (2, SiteOp::Z)] {
                if b[axis] != 0.0 {
                    let mut q = p.clone();
                    q.set_site(site, op)?;
                    next.push((w * b[axis], q));
                }
            }
        }
        if next.len() > MAX_STRINGS {
            return Err(Error::CapExceeded {
                requested: next.len(),
                cap: MAX_STRINGS,
            });
        }
        out = next;
    }
    out.retain(|(_, p)| !p.is_identity());
    Ok(out)
}

fn flat_zero(grid: &[f64]) -> Trajectory {
    Trajectory {
        times: grid.to_vec(),
        values: vec![0.0; grid.len()],
        norm_drift: vec![0.0; grid.len()],
    }
}

/// Exact extended-class sizes of the Z-seed class across a length range with
/// m SWAP gates, plus the detected polynomial degree (held-out validated).
#[derive(Debug, Clone)]
pub struct SwapGrowthStudy {
    pub num_swaps: usize,
    /// (L, class size) pairs in ascending L.
    pub sizes: Vec<(u32, usize)>,
    pub degree: usize,
    pub polynomial: DimensionPolynomial,
}

/// Default SWAP placements for the growth study: disjoint nearest-neighbour
/// bonds away from the chain edge. Class sizes are placement-independent for
/// interior bonds (the uniform chain is translation invariant), so fixed
/// defaults keep the study reproducible.
pub fn default_swap_gates(m: usize) -> Vec<QuenchGate> {
    (0..m)
        .map(|k| QuenchGate::Swap {
            a: 2 * k + 2,
            b: 2 * k + 3,
        })
        .collect()
}

/// Measure extended-class growth of the Onsager-seeded class under m SWAP
/// gates over `l_values` (ascending) and detect the polynomial degree.
pub fn swap_growth_study(
    l_values: &[u32],
    num_swaps: usize,
    budget: usize,
) -> Result<SwapGrowthStudy> {
    if l_values.len() < 2 {
        return Err(Error::Config(
            "growth study needs at least two chain lengths".into(),
        ));
    }
    let gates = default_swap_gates(num_swaps);
    let min_l = gates
        .iter()
        .map(|g| match g {
            QuenchGate::Swap { b, .. } => *b as u32,
            _ => 0,
        })
        .max()
        .unwrap_or(2)
        .max(2);
    let mut sizes = Vec::with_capacity(l_values.len());
    for &l in l_values {
        if l < min_l {
            return Err(Error::Config(format!(
                "chain length {l} too short for {num_swaps} default SWAP bonds"
            )));
        }
        let c = crate::model::XYCouplings::random(l, 0.3, 1.5, 17, crate::model::Boundary::Open)?;
        let h = crate::model::build_xy(&c)?;
        let seed = PauliString::single(l, 1, SiteOp::Z)?;
        let class = extended_class(&h, &gates, &seed, budget)?;
        if !class.complete() {
            return Err(Error::IncompleteClass {
                found: class.dimension(),
            });
        }
        sizes.push((l, class.dimension()));
    }
    let points: Vec<(i64, num_bigint::BigInt)> = sizes
        .iter()
        .map(|&(l, d)| (l as i64, num_bigint::BigInt::from(d)))
        .collect();
    let (degree, polynomial) = detect_degree(&points)?;
    Ok(SwapGrowthStudy {
        num_swaps,
        sizes,
        degree,
        polynomial,
    })
}
