//! Dense exact-diagonalization ground truth for small systems.
//!
//! Everything here works on explicit 2^L x 2^L complex matrices: operators
//! are Kronecker products, Heisenberg evolution comes from one Hermitian
//! eigendecomposition per Hamiltonian (piecewise across gate insertions),
//! and class membership is recovered by projecting dense commutators onto
//! every Pauli string. Deliberately simple so the sparse engine has an
//! independent reference to disagree with.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::dynamics::{ProductState, Trajectory};
use crate::error::{Error, Result};
use crate::model::Hamiltonian;
use crate::pauli::{PauliString, SiteOp};
use crate::quench::{QuenchGate, TimedGate};

/// Largest L for dense construction and exact evolution (2^10 = 1024 rows).
pub const ORACLE_MAX_SITES: u32 = 10;
/// Largest L for the all-strings commutator projection (4^6 overlaps per
/// frontier commutator).
pub const PROJECTION_MAX_SITES: u32 = 6;

fn check_cap(num_sites: u32, cap: u32) -> Result<()> {
    if num_sites > cap {
        return Err(Error::CapExceeded {
            requested: num_sites as usize,
            cap: cap as usize,
        });
    }
    Ok(())
}

/// Bit masks over basis-state indices for the string's X and Z parts.
/// Site 1 is the first Kronecker factor, so it owns the most significant
/// bit of the state index.
fn state_masks(p: &PauliString) -> (u64, u64) {
    let l = p.num_sites();
    let (x, z) = p.masks64();
    let mut xs = 0u64;
    let mut zs = 0u64;
    for s in 0..l {
        if x >> s & 1 == 1 {
            xs |= 1 << (l - 1 - s);
        }
        if z >> s & 1 == 1 {
            zs |= 1 << (l - 1 - s);
        }
    }
    (xs, zs)
}

/// A 2^L x 2^L complex matrix tagged with its site count.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    num_sites: u32,
    matrix: DMatrix<Complex64>,
}

impl DenseOperator {
    pub fn num_sites(&self) -> u32 {
        self.num_sites
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Largest |A - A'| entry must vanish for observables and Hamiltonians.
    pub fn verify_hermitian(&self) -> Result<()> {
        let dev = (&self.matrix - self.matrix.adjoint())
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if dev > 1e-12 {
            return Err(Error::Numerical(format!(
                "matrix deviates from Hermitian by {dev:.3e}"
            )));
        }
        Ok(())
    }

    /// Largest |U'U - I| entry must vanish for gates and eigenvector frames.
    pub fn verify_unitary(&self) -> Result<()> {
        let dim = self.dim();
        let dev = (self.matrix.adjoint() * &self.matrix - DMatrix::identity(dim, dim))
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        if dev > 1e-10 {
            return Err(Error::Numerical(format!(
                "matrix deviates from unitary by {dev:.3e}"
            )));
        }
        Ok(())
    }

    /// Hilbert-Schmidt overlap tr(P'M) / 2^L. Pauli strings are orthonormal
    /// under this pairing. Uses the string's signed-permutation structure:
    /// column j holds a single entry at row j xor x.
    pub fn hs_overlap(&self, p: &PauliString) -> Result<Complex64> {
        if p.num_sites() != self.num_sites {
            return Err(Error::size_mismatch(self.num_sites, p.num_sites()));
        }
        let (xs, zs) = state_masks(p);
        let y_quarter = ((xs & zs).count_ones() % 4) as usize;
        let i_pow = [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(-1.0, 0.0),
            Complex64::new(0.0, -1.0),
        ];
        let dim = self.dim() as u64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..dim {
            let sign = if (zs & j).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            let entry = i_pow[y_quarter] * sign;
            acc += entry.conj() * self.matrix[((j ^ xs) as usize, j as usize)];
        }
        Ok(acc / Complex64::new(dim as f64, 0.0))
    }
}

/// Dense matrix of one Pauli string (tensor product of site factors).
pub fn dense_string(p: &PauliString) -> Result<DenseOperator> {
    check_cap(p.num_sites(), ORACLE_MAX_SITES)?;
    let l = p.num_sites();
    let dim = 1usize << l;
    let (xs, zs) = state_masks(p);
    let y_quarter = ((xs & zs).count_ones() % 4) as usize;
    let i_pow = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, -1.0),
    ];
    let mut m = DMatrix::zeros(dim, dim);
    for j in 0..dim as u64 {
        let sign = if (zs & j).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        };
        m[((j ^ xs) as usize, j as usize)] = i_pow[y_quarter] * sign;
    }
    Ok(DenseOperator {
        num_sites: l,
        matrix: m,
    })
}

/// Dense matrix of the full Hamiltonian, sum of weighted string matrices.
pub fn dense_hamiltonian(h: &Hamiltonian) -> Result<DenseOperator> {
    check_cap(h.num_sites(), ORACLE_MAX_SITES)?;
    let dim = 1usize << h.num_sites();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (c, p) in h.terms() {
        m += dense_string(p)?.matrix * Complex64::new(*c, 0.0);
    }
    let out = DenseOperator {
        num_sites: h.num_sites(),
        matrix: m,
    };
    out.verify_hermitian()?;
    Ok(out)
}

/// Dense density matrix of a product state, trace one.
pub fn dense_state(state: &ProductState) -> Result<DenseOperator> {
    let l = state.num_sites();
    check_cap(l, ORACLE_MAX_SITES)?;
    let mut m = DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
    for b in state.bloch() {
        let site = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.5 * (1.0 + b[2]), 0.0),
                Complex64::new(0.5 * b[0], -0.5 * b[1]),
                Complex64::new(0.5 * b[0], 0.5 * b[1]),
                Complex64::new(0.5 * (1.0 - b[2]), 0.0),
            ],
        );
        m = m.kronecker(&site);
    }
    Ok(DenseOperator {
        num_sites: l,
        matrix: m,
    })
}

/// Dense unitary of one quench gate.
pub fn dense_gate(gate: &QuenchGate, num_sites: u32) -> Result<DenseOperator> {
    check_cap(num_sites, ORACLE_MAX_SITES)?;
    gate.validate(num_sites)?;
    let dim = 1usize << num_sites;
    let bit = |site: usize| num_sites as usize - site;
    let m = match *gate {
        QuenchGate::Swap { a, b } => {
            let (ba, bb) = (bit(a), bit(b));
            let mut m = DMatrix::zeros(dim, dim);
            for j in 0..dim {
                let va = j >> ba & 1;
                let vb = j >> bb & 1;
                let r = (j & !(1 << ba) & !(1 << bb)) | (vb << ba) | (va << bb);
                m[(r, j)] = Complex64::new(1.0, 0.0);
            }
            m
        }
        QuenchGate::PauliX { site } => {
            dense_string(&PauliString::single(num_sites, site, SiteOp::X)?)?.matrix
        }
        QuenchGate::PauliY { site } => {
            dense_string(&PauliString::single(num_sites, site, SiteOp::Y)?)?.matrix
        }
        QuenchGate::PauliZ { site } => {
            dense_string(&PauliString::single(num_sites, site, SiteOp::Z)?)?.matrix
        }
        QuenchGate::PhaseS { site } => {
            let b = bit(site);
            let mut m = DMatrix::zeros(dim, dim);
            for j in 0..dim {
                m[(j, j)] = if j >> b & 1 == 1 {
                    Complex64::new(0.0, 1.0)
                } else {
                    Complex64::new(1.0, 0.0)
                };
            }
            m
        }
        QuenchGate::AxisW { site, alpha } => {
            let x = dense_string(&PauliString::single(num_sites, site, SiteOp::X)?)?.matrix;
            let y = dense_string(&PauliString::single(num_sites, site, SiteOp::Y)?)?.matrix;
            x * Complex64::new(alpha.cos(), 0.0) + y * Complex64::new(alpha.sin(), 0.0)
        }
    };
    let out = DenseOperator {
        num_sites,
        matrix: m,
    };
    out.verify_unitary()?;
    Ok(out)
}

/// Exact expectation series tr(rho(t) A) from full diagonalization, no time
/// stepping. `schedule` inserts gates (state conjugated by the unitary) at
/// the listed times under the same conventions as the sparse engine: times
/// non-decreasing within the grid window, a sample at a gate time sees the
/// post-gate state.
pub fn exact_quenched(
    h: &Hamiltonian,
    schedule: &[TimedGate],
    observable: &PauliString,
    state: &ProductState,
    grid: &[f64],
) -> Result<Trajectory> {
    let l = h.num_sites();
    check_cap(l, ORACLE_MAX_SITES)?;
    if observable.num_sites() != l || state.num_sites() != l {
        return Err(Error::size_mismatch(l, observable.num_sites()));
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

    let hd = dense_hamiltonian(h)?;
    let eig = SymmetricEigen::new(hd.matrix().clone());
    let frame = DenseOperator {
        num_sites: l,
        matrix: eig.eigenvectors.clone(),
    };
    frame.verify_unitary()?;
    let energies: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let v = &eig.eigenvectors;
    let vh = v.adjoint();

    // everything below lives in the eigenbasis: advancing time multiplies
    // entry (j,k) by exp(-i (E_j - E_k) dt), exactly
    let mut r = &vh * dense_state(state)?.matrix * v;
    let b = &vh * dense_string(observable)?.matrix * v;
    let norm0 = r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();

    let dim = r.nrows();
    let advance = |r: &mut DMatrix<Complex64>, dt: f64| {
        if dt == 0.0 {
            return;
        }
        for k in 0..dim {
            for j in 0..dim {
                let phase = Complex64::from_polar(1.0, -(energies[j] - energies[k]) * dt);
                r[(j, k)] *= phase;
            }
        }
    };
    let value = |r: &DMatrix<Complex64>| -> Result<f64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..dim {
            for j in 0..dim {
                acc += r[(j, k)] * b[(k, j)];
            }
        }
        if acc.im.abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "expectation of a Hermitian observable has imaginary part {:.3e}",
                acc.im
            )));
        }
        Ok(acc.re)
    };

    let mut times = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    let mut drift = Vec::with_capacity(grid.len());
    let mut t_cur = t_start;
    let mut next_gate = 0usize;
    for &t_sample in grid {
        while next_gate < schedule.len() && schedule[next_gate].time <= t_sample {
            let tg = &schedule[next_gate];
            advance(&mut r, tg.time - t_cur);
            t_cur = tg.time;
            let w = &vh * dense_gate(&tg.gate, l)?.matrix * v;
            r = &w * r * w.adjoint();
            next_gate += 1;
        }
        advance(&mut r, t_sample - t_cur);
        t_cur = t_sample;
        times.push(t_sample);
        values.push(value(&r)?);
        let norm = r.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        drift.push((norm - norm0).abs());
    }
    Ok(Trajectory {
        times,
        values,
        norm_drift: drift,
    })
}

/// Gate-free exact evolution: tr(rho(t) A) on the grid.
pub fn exact_heisenberg(
    h: &Hamiltonian,
    observable: &PauliString,
    state: &ProductState,
    grid: &[f64],
) -> Result<Trajectory> {
    exact_quenched(h, &[], observable, state, grid)
}

/// Recover a commutation class by brute force: repeatedly commute dense
/// member matrices with each Hamiltonian term and project the results onto
/// all 4^L Pauli strings (overlap threshold 1e-10). Must reproduce the
/// bit-level closure engine exactly.
pub fn exact_class_projection(h: &Hamiltonian, seed: &PauliString) -> Result<Vec<PauliString>> {
    let l = h.num_sites();
    check_cap(l, PROJECTION_MAX_SITES)?;
    if seed.num_sites() != l {
        return Err(Error::size_mismatch(l, seed.num_sites()));
    }
    let term_mats: Vec<DMatrix<Complex64>> = h
        .terms()
        .iter()
        .map(|(_, p)| dense_string(p).map(|d| d.matrix))
        .collect::<Result<_>>()?;
    let all_strings: Vec<PauliString> = (0..1u64 << (2 * l))
        .map(|idx| PauliString::from_masks64(l, idx >> l, idx & ((1 << l) - 1)))
        .collect();

    let mut members = vec![seed.clone()];
    members.sort();
    let mut frontier = members.clone();
    while !frontier.is_empty() {
        let mut fresh: Vec<PauliString> = Vec::new();
        for p in &frontier {
            let pd = dense_string(p)?.matrix;
            for td in &term_mats {
                let comm = DenseOperator {
                    num_sites: l,
                    matrix: td * &pd - &pd * td,
                };
                for q in &all_strings {
                    if members.binary_search(q).is_ok() {
                        continue;
                    }
                    if fresh.binary_search(q).is_ok() {
                        continue;
                    }
                    if comm.hs_overlap(q)?.norm() > 1e-10 {
                        let at = fresh.binary_search(q).unwrap_err();
                        fresh.insert(at, q.clone());
                    }
                }
            }
        }
        if fresh.is_empty() {
            break;
        }
        members.extend(fresh.iter().cloned());
        members.sort();
        frontier = fresh;
    }
    Ok(members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closure::{generate_class, DEFAULT_BUDGET};
    use crate::dynamics::{heisenberg_expectation, uniform_grid, EvolveOptions};
    use crate::model::{build_kitaev, build_xy, build_xyzz, Boundary, InteractionGraph,
        XYCouplings, XYZZCouplings};
    use crate::quench::quenched_evolution;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_site_matrices() {
        let x = dense_string(&PauliString::parse("X1", 1).unwrap()).unwrap();
        assert_eq!(x.matrix()[(0, 1)], c(1.0, 0.0));
        assert_eq!(x.matrix()[(1, 0)], c(1.0, 0.0));
        assert_eq!(x.matrix()[(0, 0)], c(0.0, 0.0));
        let y = dense_string(&PauliString::parse("Y1", 1).unwrap()).unwrap();
        assert_eq!(y.matrix()[(0, 1)], c(0.0, -1.0));
        assert_eq!(y.matrix()[(1, 0)], c(0.0, 1.0));
        let z = dense_string(&PauliString::parse("Z1", 1).unwrap()).unwrap();
        assert_eq!(z.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(z.matrix()[(1, 1)], c(-1.0, 0.0));
        let id = dense_string(&PauliString::identity(2)).unwrap();
        assert_eq!(id.matrix(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn strings_match_explicit_kronecker_products() {
        let l = 3;
        let single = |op: SiteOp| {
            dense_string(&PauliString::single(1, 1, op).unwrap())
                .unwrap()
                .matrix
        };
        for idx in 0..64u64 {
            let p = PauliString::from_masks64(l, idx >> l, idx & 0b111);
            let mut expect = DMatrix::from_element(1, 1, c(1.0, 0.0));
            for s in 1..=l as usize {
                expect = expect.kronecker(&single(p.site_op(s)));
            }
            let got = dense_string(&p).unwrap();
            assert_eq!(got.matrix(), &expect, "string {p}");
        }
    }

    #[test]
    fn strings_are_hermitian_and_orthonormal() {
        let l = 2;
        let strings: Vec<PauliString> = (0..16u64)
            .map(|i| PauliString::from_masks64(l, i >> l, i & 0b11))
            .collect();
        for p in &strings {
            let pd = dense_string(p).unwrap();
            pd.verify_hermitian().unwrap();
            pd.verify_unitary().unwrap();
            for q in &strings {
                let ov = pd.hs_overlap(q).unwrap();
                let want = if p == q { 1.0 } else { 0.0 };
                assert!((ov - c(want, 0.0)).norm() < 1e-14, "{p} vs {q}: {ov}");
            }
        }
    }

    #[test]
    fn product_phases_match_dense_products() {
        let l = 2;
        for ia in 0..16u64 {
            for ib in 0..16u64 {
                let a = PauliString::from_masks64(l, ia >> l, ia & 0b11);
                let b = PauliString::from_masks64(l, ib >> l, ib & 0b11);
                let prod = a.multiply(&b).unwrap();
                let dense_prod = dense_string(&a).unwrap().matrix * dense_string(&b).unwrap().matrix;
                let got = DenseOperator {
                    num_sites: l,
                    matrix: dense_prod,
                }
                .hs_overlap(&prod.string)
                .unwrap();
                let want = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
                    [(prod.phase_power & 3) as usize];
                assert!((got - want).norm() < 1e-14, "{a} * {b}");
            }
        }
    }

    #[test]
    fn hamiltonian_is_hermitian_sum() {
        let h = build_xy(&XYCouplings::uniform(2, 1.0, 1.0, Boundary::Open).unwrap())
            .unwrap();
        let hd = dense_hamiltonian(&h).unwrap();
        hd.verify_hermitian().unwrap();
        // six terms at L=2: four bond strings and two fields
        assert_eq!(h.num_terms(), 6);
        let trace: Complex64 = (0..4).map(|i| hd.matrix()[(i, i)]).sum();
        assert!((trace - c(0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn state_matrix_has_unit_trace_and_right_expectations() {
        let s = ProductState::infinite_temperature(2)
            .with_bloch(1, [0.6, 0.0, 0.8])
            .unwrap();
        let rho = dense_state(&s).unwrap();
        rho.verify_hermitian().unwrap();
        let trace: Complex64 = (0..4).map(|i| rho.matrix()[(i, i)]).sum();
        assert!((trace - c(1.0, 0.0)).norm() < 1e-14);
        for (txt, want) in [("X1", 0.6), ("Z1", 0.8), ("Y1", 0.0), ("X2", 0.0)] {
            let p = PauliString::parse(txt, 2).unwrap();
            let a = dense_string(&p).unwrap().matrix * rho.matrix();
            let got: Complex64 = (0..4).map(|i| a[(i, i)]).sum();
            assert!((got - c(want, 0.0)).norm() < 1e-14, "{txt}");
            // same number via the product-state shortcut
            assert!((s.expectation(&p) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn single_qubit_field_gives_cosine() {
        let h = Hamiltonian::new(1, vec![(1.0, PauliString::parse("Z1", 1).unwrap())]).unwrap();
        let obs = PauliString::parse("X1", 1).unwrap();
        let state = ProductState::plus_x(1, 1).unwrap();
        let grid = uniform_grid(0.0, 3.0, 61).unwrap();
        let traj = exact_heisenberg(&h, &obs, &state, &grid).unwrap();
        for (t, v) in traj.times.iter().zip(&traj.values) {
            assert!((v - (2.0 * t).cos()).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn time_zero_is_plain_expectation_and_commuting_case_constant() {
        let h = Hamiltonian::new(
            2,
            vec![
                (0.7, PauliString::parse("Z1", 2).unwrap()),
                (1.3, PauliString::parse("Z1 Z2", 2).unwrap()),
            ],
        )
        .unwrap();
        let state = ProductState::infinite_temperature(2)
            .with_bloch(1, [0.6, 0.0, 0.8])
            .unwrap();
        let z1 = PauliString::parse("Z1", 2).unwrap();
        let grid = uniform_grid(0.0, 2.0, 21).unwrap();
        let traj = exact_heisenberg(&h, &z1, &state, &grid).unwrap();
        for v in &traj.values {
            assert!((v - 0.8).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_sparse_engine_on_xy_chain() {
        let l = 5;
        let h = build_xy(&XYCouplings::random(l, 0.4, 1.2, 11, Boundary::Open).unwrap()).unwrap();
        let obs = PauliString::single(l, 3, SiteOp::Z).unwrap();
        let state = ProductState::infinite_temperature(l)
            .with_bloch(3, [0.0, 0.0, 1.0])
            .unwrap()
            .with_bloch(1, [0.5, 0.5, std::f64::consts::FRAC_1_SQRT_2])
            .unwrap();
        let grid = uniform_grid(0.0, 6.0, 61).unwrap();
        let exact = exact_heisenberg(&h, &obs, &state, &grid).unwrap();
        let engine =
            heisenberg_expectation(&h, &obs, &state, &grid, &EvolveOptions::default(), DEFAULT_BUDGET)
                .unwrap();
        for ((t, a), b) in grid.iter().zip(&exact.values).zip(&engine.values) {
            assert!((a - b).abs() < 1e-9, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn quenched_evolution_matches_dense_gate_insertion() {
        let l = 4;
        let h = build_xy(&XYCouplings::random(l, 0.4, 1.2, 23, Boundary::Open).unwrap()).unwrap();
        let obs = PauliString::single(l, 1, SiteOp::X).unwrap();
        let state = ProductState::plus_x(l, 1).unwrap();
        let grid = uniform_grid(0.0, 2.5, 26).unwrap();
        let schedule = [
            TimedGate {
                time: 0.8,
                gate: QuenchGate::Swap { a: 2, b: 3 },
            },
            TimedGate {
                time: 1.6,
                gate: QuenchGate::AxisW {
                    site: 1,
                    alpha: 0.3,
                },
            },
        ];
        let exact = exact_quenched(&h, &schedule, &obs, &state, &grid).unwrap();
        let engine = quenched_evolution(
            &h,
            &schedule,
            &obs,
            &state,
            &grid,
            &EvolveOptions::default(),
            DEFAULT_BUDGET,
        )
        .unwrap();
        for ((t, a), b) in grid.iter().zip(&exact.values).zip(&engine.values) {
            assert!((a - b).abs() < 1e-8, "t={t}: {a} vs {b}");
        }
    }

    #[test]
    fn gate_matrices_are_unitary_and_act_correctly() {
        for g in [
            QuenchGate::Swap { a: 1, b: 3 },
            QuenchGate::PauliX { site: 2 },
            QuenchGate::PauliY { site: 1 },
            QuenchGate::PauliZ { site: 3 },
            QuenchGate::PhaseS { site: 2 },
            QuenchGate::AxisW {
                site: 1,
                alpha: 0.77,
            },
        ] {
            let w = dense_gate(&g, 3).unwrap();
            w.verify_unitary().unwrap();
            // conjugation image in the engine matches dense W' P W
            for txt in ["X1", "Y2 Z3", "X1 Y2 Z3", "Z1 X3"] {
                let p = PauliString::parse(txt, 3).unwrap();
                let pd = dense_string(&p).unwrap();
                let conj = w.matrix().adjoint() * pd.matrix() * w.matrix();
                let conj = DenseOperator {
                    num_sites: 3,
                    matrix: conj,
                };
                let img = crate::quench::conjugate(&g, &p).unwrap();
                let mut total = 0.0;
                for (coeff, s) in &img.terms {
                    let ov = conj.hs_overlap(s).unwrap();
                    assert!((ov - c(*coeff, 0.0)).norm() < 1e-12, "{g:?} on {txt}");
                    total += coeff * coeff;
                }
                assert!((total - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projection_recovers_engine_classes() {
        let l = 3;
        let models = [
            build_xy(&XYCouplings::random(l, 0.4, 1.3, 3, Boundary::Open).unwrap()).unwrap(),
            build_kitaev(&InteractionGraph::kitaev_chain(l, &[0.9, 1.1]).unwrap()).unwrap(),
            build_xyzz(&XYZZCouplings::uniform(l, 1.0).unwrap()).unwrap(),
        ];
        for h in &models {
            for seed_txt in ["X1", "Z1", "Y2"] {
                let seed = PauliString::parse(seed_txt, l).unwrap();
                let dense = exact_class_projection(h, &seed).unwrap();
                let engine = generate_class(h, &seed, DEFAULT_BUDGET).unwrap();
                assert_eq!(dense, engine.members(), "{seed_txt}");
            }
        }
    }

    #[test]
    fn projection_known_small_classes() {
        let h = build_xy(&XYCouplings::random(3, 0.4, 1.3, 9, Boundary::Open).unwrap()).unwrap();
        let maj = exact_class_projection(&h, &PauliString::parse("X1", 3).unwrap()).unwrap();
        assert_eq!(maj.len(), 6);
        let ons = exact_class_projection(&h, &PauliString::parse("Z1", 3).unwrap()).unwrap();
        assert_eq!(ons.len(), 15);
        let empty = Hamiltonian::new(3, vec![]).unwrap();
        let single = exact_class_projection(&empty, &PauliString::parse("Y2", 3).unwrap()).unwrap();
        assert_eq!(single, vec![PauliString::parse("Y2", 3).unwrap()]);
    }

    #[test]
    fn caps_are_enforced() {
        let p = PauliString::identity(11);
        assert!(matches!(
            dense_string(&p),
            Err(Error::CapExceeded { cap: 10, .. })
        ));
        let h = build_xy(&XYCouplings::uniform(7, 1.0, 0.5, Boundary::Open).unwrap())
            .unwrap();
        assert!(matches!(
            exact_class_projection(&h, &PauliString::parse("X1", 7).unwrap()),
            Err(Error::CapExceeded { cap: 6, .. })
        ));
    }
}
