//! Equivalence classes of Pauli strings under the Hamiltonian adjoint action.
//!
//! Two strings are equivalent when one is reachable from the other, up to a
//! scalar, by repeatedly commuting with Hamiltonian strings. Because the
//! commutator of two Pauli strings is either zero or a phase times their
//! phase-free product, reachability reduces to a breadth-first closure over
//! mask XOR with anticommuting Hamiltonian strings. The class spans an
//! invariant subspace of Heisenberg evolution and its cardinality (the OED)
//! bounds the number of coupled equations needed to evolve the seed.

use std::collections::HashSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::Hamiltonian;
use crate::pauli::PauliString;

/// Default cap on class size before giving up and flagging the result
/// incomplete.
pub const DEFAULT_BUDGET: usize = 10_000_000;

/// Largest L for which the full 4^L partition is enumerated. The partition
/// stores every one of the 4^L strings, so this is a memory guard.
pub const PARTITION_MAX_SITES: u32 = 10;

/// Frontier size above which children are generated in parallel.
const PAR_FRONTIER: usize = 4096;

/// A closed (or budget-truncated) set of Pauli strings, sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EquivalenceClass {
    num_sites: u32,
    members: Vec<PauliString>,
    complete: bool,
}

impl EquivalenceClass {
    pub(crate) fn from_sorted(num_sites: u32, members: Vec<PauliString>, complete: bool) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        EquivalenceClass {
            num_sites,
            members,
            complete,
        }
    }

    pub fn num_sites(&self) -> u32 {
        self.num_sites
    }

    /// Class cardinality, the operator evolution dimension when complete.
    pub fn dimension(&self) -> usize {
        self.members.len()
    }

    /// False when the breadth-first closure hit its budget before closing.
    pub fn complete(&self) -> bool {
        self.complete
    }

    /// Members in ascending mask order.
    pub fn members(&self) -> &[PauliString] {
        &self.members
    }

    /// Position of `p` in the sorted member list.
    pub fn index_of(&self, p: &PauliString) -> Option<usize> {
        self.members.binary_search(p).ok()
    }

    pub fn contains(&self, p: &PauliString) -> bool {
        self.index_of(p).is_some()
    }

    /// True when no string appears in both classes (linear merge walk).
    pub fn is_disjoint_from(&self, other: &EquivalenceClass) -> bool {
        if self.num_sites != other.num_sites {
            return true;
        }
        let (mut i, mut j) = (0, 0);
        while i < self.members.len() && j < other.members.len() {
            match self.members[i].cmp(&other.members[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    /// Check that every commutator of a member with a Hamiltonian string
    /// stays inside the class. Budget-truncated classes fail this by
    /// construction, so it requires `complete`.
    pub fn verify_closed(&self, h: &Hamiltonian) -> Result<()> {
        if h.num_sites() != self.num_sites {
            return Err(Error::size_mismatch(self.num_sites, h.num_sites()));
        }
        if !self.complete {
            return Err(Error::IncompleteClass {
                found: self.members.len(),
            });
        }
        self.members.par_iter().try_for_each(|m| {
            for (_, t) in h.terms() {
                if m.anticommutes_unchecked(t) {
                    let child = m.xor_unchecked(t);
                    if !self.contains(&child) {
                        return Err(Error::Consistency(format!(
                            "commutator of member {m} with term {t} escapes the class"
                        )));
                    }
                }
            }
            Ok(())
        })
    }
}

/// Class size plus the completeness flag, for scans that never need members.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OedResult {
    pub dimension: usize,
    pub complete: bool,
}

/// Breadth-first closure of `seeds` under XOR with anticommuting `terms`.
///
/// Level-synchronous and deterministic: children are generated frontier-first
/// in member order (in parallel for large frontiers) and inserted in that
/// order, so a budget-truncated result is reproducible. Returns sorted
/// members and the completeness flag.
pub(crate) fn close_over(
    num_sites: u32,
    terms: &[PauliString],
    seeds: &[PauliString],
    budget: usize,
) -> Result<(Vec<PauliString>, bool)> {
    if budget == 0 {
        return Err(Error::Config("closure budget must be positive".into()));
    }
    for p in terms.iter().chain(seeds) {
        if p.num_sites() != num_sites {
            return Err(Error::size_mismatch(num_sites, p.num_sites()));
        }
    }
    if num_sites <= 64 {
        let t64: Vec<(u64, u64)> = terms.iter().map(|p| p.masks64()).collect();
        let s64: Vec<(u64, u64)> = seeds.iter().map(|p| p.masks64()).collect();
        let (mut members, complete) = close_compact(&t64, &s64, budget);
        members.sort_unstable();
        let out = members
            .into_iter()
            .map(|(x, z)| PauliString::from_masks64(num_sites, x, z))
            .collect();
        Ok((out, complete))
    } else {
        let (mut members, complete) = close_generic(terms, seeds, budget);
        members.sort_unstable();
        Ok((members, complete))
    }
}

fn anticommutes64(p: (u64, u64), t: (u64, u64)) -> bool {
    ((p.0 & t.1).count_ones() + (p.1 & t.0).count_ones()) & 1 == 1
}

fn close_compact(
    terms: &[(u64, u64)],
    seeds: &[(u64, u64)],
    budget: usize,
) -> (Vec<(u64, u64)>, bool) {
    let mut visited: HashSet<(u64, u64)> = HashSet::new();
    let mut frontier: Vec<(u64, u64)> = Vec::new();
    for &s in seeds {
        if visited.len() >= budget && !visited.contains(&s) {
            return (visited.into_iter().collect(), false);
        }
        if visited.insert(s) {
            frontier.push(s);
        }
    }
    let children = |p: &(u64, u64)| -> Vec<(u64, u64)> {
        terms
            .iter()
            .filter(|&&t| anticommutes64(*p, t))
            .map(|&t| (p.0 ^ t.0, p.1 ^ t.1))
            .collect()
    };
    let mut complete = true;
    'outer: while !frontier.is_empty() {
        let batches: Vec<Vec<(u64, u64)>> = if frontier.len() >= PAR_FRONTIER {
            frontier.par_iter().map(children).collect()
        } else {
            frontier.iter().map(children).collect()
        };
        let mut next = Vec::new();
        for c in batches.into_iter().flatten() {
            if visited.contains(&c) {
                continue;
            }
            if visited.len() >= budget {
                complete = false;
                break 'outer;
            }
            visited.insert(c);
            next.push(c);
        }
        frontier = next;
    }
    (visited.into_iter().collect(), complete)
}

fn close_generic(
    terms: &[PauliString],
    seeds: &[PauliString],
    budget: usize,
) -> (Vec<PauliString>, bool) {
    let mut visited: HashSet<PauliString> = HashSet::new();
    let mut frontier: Vec<PauliString> = Vec::new();
    for s in seeds {
        if visited.len() >= budget && !visited.contains(s) {
            return (visited.into_iter().collect(), false);
        }
        if visited.insert(s.clone()) {
            frontier.push(s.clone());
        }
    }
    let children = |p: &PauliString| -> Vec<PauliString> {
        terms
            .iter()
            .filter(|t| p.anticommutes_unchecked(t))
            .map(|t| p.xor_unchecked(t))
            .collect()
    };
    let mut complete = true;
    'outer: while !frontier.is_empty() {
        let batches: Vec<Vec<PauliString>> = if frontier.len() >= PAR_FRONTIER {
            frontier.par_iter().map(children).collect()
        } else {
            frontier.iter().map(children).collect()
        };
        let mut next = Vec::new();
        for c in batches.into_iter().flatten() {
            if visited.contains(&c) {
                continue;
            }
            if visited.len() >= budget {
                complete = false;
                break 'outer;
            }
            visited.insert(c.clone());
            next.push(c);
        }
        frontier = next;
    }
    (visited.into_iter().collect(), complete)
}

fn term_strings(h: &Hamiltonian) -> Vec<PauliString> {
    h.terms().iter().map(|(_, p)| p.clone()).collect()
}

/// Equivalence class of `seed` under `h`, capped at `budget` members.
pub fn generate_class(
    h: &Hamiltonian,
    seed: &PauliString,
    budget: usize,
) -> Result<EquivalenceClass> {
    generate_class_multi(h, std::slice::from_ref(seed), budget)
}

/// Joint closure of several seeds (the union of their classes, closed).
pub fn generate_class_multi(
    h: &Hamiltonian,
    seeds: &[PauliString],
    budget: usize,
) -> Result<EquivalenceClass> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed string is required".into()));
    }
    let terms = term_strings(h);
    let (members, complete) = close_over(h.num_sites(), &terms, seeds, budget)?;
    Ok(EquivalenceClass::from_sorted(
        h.num_sites(),
        members,
        complete,
    ))
}

/// Class size of `seed` without materializing member strings.
pub fn oed(h: &Hamiltonian, seed: &PauliString, budget: usize) -> Result<OedResult> {
    if budget == 0 {
        return Err(Error::Config("closure budget must be positive".into()));
    }
    if seed.num_sites() != h.num_sites() {
        return Err(Error::size_mismatch(h.num_sites(), seed.num_sites()));
    }
    if h.num_sites() <= 64 {
        let t64: Vec<(u64, u64)> = h.terms().iter().map(|(_, p)| p.masks64()).collect();
        let (members, complete) = close_compact(&t64, &[seed.masks64()], budget);
        Ok(OedResult {
            dimension: members.len(),
            complete,
        })
    } else {
        let terms = term_strings(h);
        let (members, complete) = close_generic(&terms, std::slice::from_ref(seed), budget);
        Ok(OedResult {
            dimension: members.len(),
            complete,
        })
    }
}

/// The full partition of all 4^L strings into equivalence classes, identity
/// included as its own singleton, in order of each class's smallest string.
#[derive(Debug, Clone)]
pub struct Partition {
    num_sites: u32,
    classes: Vec<EquivalenceClass>,
}

impl Partition {
    pub fn num_sites(&self) -> u32 {
        self.num_sites
    }

    pub fn classes(&self) -> &[EquivalenceClass] {
        &self.classes
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    /// Class sizes in class order.
    pub fn sizes(&self) -> Vec<usize> {
        self.classes.iter().map(|c| c.dimension()).collect()
    }

    /// Sum of all class sizes; 4^L when the partition is consistent.
    pub fn total_dimension(&self) -> usize {
        self.classes.iter().map(|c| c.dimension()).sum()
    }

    /// Which class `p` belongs to.
    pub fn class_index_of(&self, p: &PauliString) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(p))
    }

    /// Every pair of classes shares no string.
    pub fn verify_disjoint(&self) -> Result<()> {
        for (i, a) in self.classes.iter().enumerate() {
            for b in &self.classes[i + 1..] {
                if !a.is_disjoint_from(b) {
                    return Err(Error::Consistency(format!(
                        "classes {i} and {} overlap",
                        self.classes.iter().position(|c| c == b).unwrap_or(0)
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Partition all 4^L strings on up to [`PARTITION_MAX_SITES`] sites.
///
/// Walks string indices in ascending (x, z) mask order and closes each
/// unvisited one, so the class list is deterministic; the identity string
/// comes first as a singleton class.
pub fn partition_all(h: &Hamiltonian) -> Result<Partition> {
    let l = h.num_sites();
    if l > PARTITION_MAX_SITES {
        return Err(Error::CapExceeded {
            requested: l as usize,
            cap: PARTITION_MAX_SITES as usize,
        });
    }
    let n_strings = 1usize << (2 * l);
    let t64: Vec<(u64, u64)> = h.terms().iter().map(|(_, p)| p.masks64()).collect();
    let mut seen = vec![false; n_strings];
    let mut classes = Vec::new();
    for idx in 0..n_strings {
        if seen[idx] {
            continue;
        }
        let x = (idx >> l) as u64;
        let z = (idx & ((1 << l) - 1)) as u64;
        let (mut members, complete) = close_compact(&t64, &[(x, z)], n_strings);
        debug_assert!(complete);
        for &(mx, mz) in &members {
            seen[((mx as usize) << l) | mz as usize] = true;
        }
        members.sort_unstable();
        let strings = members
            .into_iter()
            .map(|(mx, mz)| PauliString::from_masks64(l, mx, mz))
            .collect();
        classes.push(EquivalenceClass::from_sorted(l, strings, complete));
    }
    Ok(Partition {
        num_sites: l,
        classes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_xy, Boundary, XYCouplings};
    use crate::pauli::SiteOp;

    fn xy(l: u32) -> Hamiltonian {
        build_xy(&XYCouplings::random(l, 0.3, 1.4, 7, Boundary::Open).unwrap()).unwrap()
    }

    #[test]
    fn x1_class_size_is_2l() {
        for l in 2..=9u32 {
            let h = xy(l);
            let seed = PauliString::single(l, 1, SiteOp::X).unwrap();
            let c = generate_class(&h, &seed, DEFAULT_BUDGET).unwrap();
            assert!(c.complete());
            assert_eq!(c.dimension(), 2 * l as usize);
            c.verify_closed(&h).unwrap();
        }
    }

    #[test]
    fn z_class_size_is_onsager() {
        for l in 2..=8u32 {
            let h = xy(l);
            let seed = PauliString::single(l, 2.min(l as usize), SiteOp::Z).unwrap();
            let r = oed(&h, &seed, DEFAULT_BUDGET).unwrap();
            assert!(r.complete);
            assert_eq!(r.dimension, (2 * l * l - l) as usize);
        }
    }

    #[test]
    fn class_independent_of_coupling_values() {
        let l = 6;
        let h1 = xy(l);
        let h2 = h1.with_random_coefficients(99);
        let seed = PauliString::single(l, 1, SiteOp::X).unwrap();
        let c1 = generate_class(&h1, &seed, DEFAULT_BUDGET).unwrap();
        let c2 = generate_class(&h2, &seed, DEFAULT_BUDGET).unwrap();
        assert_eq!(c1.members(), c2.members());
    }

    #[test]
    fn budget_truncates_deterministically() {
        let h = xy(8);
        let seed = PauliString::single(8, 4, SiteOp::Z).unwrap();
        let full = generate_class(&h, &seed, DEFAULT_BUDGET).unwrap();
        assert!(full.complete());
        let cut1 = generate_class(&h, &seed, 40).unwrap();
        let cut2 = generate_class(&h, &seed, 40).unwrap();
        assert!(!cut1.complete());
        assert_eq!(cut1.dimension(), 40);
        assert_eq!(cut1.members(), cut2.members());
        assert!(cut1.verify_closed(&h).is_err());
        assert!(cut1.members().iter().all(|m| full.contains(m)));
    }

    #[test]
    fn partition_covers_everything_once() {
        for l in 2..=4u32 {
            let h = xy(l);
            let p = partition_all(&h).unwrap();
            assert_eq!(p.num_classes(), (2 * l + 1) as usize);
            assert_eq!(p.total_dimension(), 1 << (2 * l));
            assert!(p.classes()[0].members()[0].is_identity());
            p.verify_disjoint().unwrap();
            for c in p.classes() {
                c.verify_closed(&h).unwrap();
            }
        }
    }

    #[test]
    fn partition_size_cap() {
        let h = xy(16);
        assert!(matches!(partition_all(&h), Err(Error::CapExceeded { .. })));
    }

    #[test]
    fn multiword_closure_matches_compact() {
        // same model, L = 70 forces the generic path; compare against L = 20
        // compact run of the same translation-invariant structure
        let h20 = build_xy(&XYCouplings::uniform(20, 1.0, 0.7, Boundary::Open).unwrap()).unwrap();
        let h70 = build_xy(&XYCouplings::uniform(70, 1.0, 0.7, Boundary::Open).unwrap()).unwrap();
        let s20 = PauliString::single(20, 1, SiteOp::X).unwrap();
        let s70 = PauliString::single(70, 1, SiteOp::X).unwrap();
        let c20 = generate_class(&h20, &s20, DEFAULT_BUDGET).unwrap();
        let c70 = generate_class(&h70, &s70, DEFAULT_BUDGET).unwrap();
        assert_eq!(c20.dimension(), 40);
        assert_eq!(c70.dimension(), 140);
        c70.verify_closed(&h70).unwrap();
        // Majorana form: Z-prefix then X or Y
        for m in c70.members() {
            let w = m.weight() as usize;
            let ops: Vec<SiteOp> = (1..=w).map(|s| m.site_op(s)).collect();
            assert!(ops[..w - 1].iter().all(|&o| o == SiteOp::Z));
            assert!(matches!(ops[w - 1], SiteOp::X | SiteOp::Y));
        }
    }

    #[test]
    fn identity_seed_is_fixed_point() {
        let h = xy(4);
        let c = generate_class(&h, &PauliString::identity(4), DEFAULT_BUDGET).unwrap();
        assert_eq!(c.dimension(), 1);
        assert!(c.complete());
    }

    #[test]
    fn multi_seed_closes_union() {
        let h = xy(5);
        let a = PauliString::single(5, 1, SiteOp::X).unwrap();
        let b = PauliString::single(5, 2, SiteOp::Z).unwrap();
        let joint = generate_class_multi(&h, &[a.clone(), b.clone()], DEFAULT_BUDGET).unwrap();
        let ca = generate_class(&h, &a, DEFAULT_BUDGET).unwrap();
        let cb = generate_class(&h, &b, DEFAULT_BUDGET).unwrap();
        assert_eq!(joint.dimension(), ca.dimension() + cb.dimension());
        assert!(ca.is_disjoint_from(&cb));
        for m in ca.members().iter().chain(cb.members()) {
            assert!(joint.contains(m));
        }
    }
}
