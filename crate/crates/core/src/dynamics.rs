//! Heisenberg dynamics restricted to one equivalence class.
//!
//! Writing A(t) = sum_m c_m(t) P_m over the class members, dA/dt = i[H, A]
//! becomes the linear system dc/dt = G c with G real and antisymmetric, so
//! the evolution is orthogonal and the coefficient norm is conserved. The
//! class cardinality, not 4^L, sets the system size.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::closure::EquivalenceClass;
use crate::error::{Error, Result};
use crate::model::Hamiltonian;
use crate::pauli::PauliString;

/// Largest class dimension for which the dense matrix-exponential route is
/// allowed; beyond this the memory for exp(G dt) becomes the obstacle.
pub const MATRIX_EXP_MAX_DIM: usize = 2000;

/// Rows at or above this size run the sparse matvec in parallel.
const PAR_MATVEC_DIM: usize = 4096;

/// Sparse CSR form of the restricted adjoint map c -> G c, with
/// G[r, m] = coefficient of P_r in i[H, P_m].
#[derive(Debug, Clone)]
pub struct AdjointGenerator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
    /// l1 norm of the Hamiltonian coefficients, kept for step defaults.
    coeff_l1: f64,
}

impl AdjointGenerator {
    /// Assemble the generator over `class`, which must be complete: a
    /// truncated member list cannot represent the adjoint action faithfully.
    pub fn build(h: &Hamiltonian, class: &EquivalenceClass) -> Result<Self> {
        if h.num_sites() != class.num_sites() {
            return Err(Error::size_mismatch(class.num_sites(), h.num_sites()));
        }
        if !class.complete() {
            return Err(Error::IncompleteClass {
                found: class.dimension(),
            });
        }
        let members = class.members();
        let dim = members.len();
        if dim > u32::MAX as usize {
            return Err(Error::CapExceeded {
                requested: dim,
                cap: u32::MAX as usize,
            });
        }
        // Row m holds dc_m/dt contributions: for each term t anticommuting
        // with P_m the column is r with P_r the phase-free product, and the
        // weight carries the product phase of (H_t, P_r).
        let rows: Vec<Vec<(u32, f64)>> = members
            .par_iter()
            .map(|pm| {
                let mut row: Vec<(u32, f64)> = Vec::new();
                for (hk, t) in h.terms() {
                    if !pm.anticommutes_unchecked(t) {
                        continue;
                    }
                    let pr = pm.xor_unchecked(t);
                    let ri = class.index_of(&pr).ok_or_else(|| {
                        Error::Consistency(format!(
                            "product of {pm} with term {t} escapes the class"
                        ))
                    })?;
                    let prod = t.multiply(&pr)?;
                    debug_assert_eq!(prod.phase_power & 1, 1);
                    let sign = if prod.phase_power & 3 == 3 { 1.0 } else { -1.0 };
                    row.push((ri as u32, 2.0 * hk * sign));
                }
                row.sort_unstable_by_key(|e| e.0);
                Ok(row)
            })
            .collect::<Result<_>>()?;
        let mut row_ptr = Vec::with_capacity(dim + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for (c, v) in row {
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(AdjointGenerator {
            dim,
            row_ptr,
            cols,
            vals,
            coeff_l1: h.coeff_l1_norm(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// y = G x.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let row = |r: usize| -> f64 {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.vals[k] * x[self.cols[k] as usize];
            }
            acc
        };
        if self.dim >= PAR_MATVEC_DIM {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(r, out)| *out = row(r));
        } else {
            for (r, out) in y.iter_mut().enumerate() {
                *out = row(r);
            }
        }
    }

    /// Entry G[r, c], zero when absent.
    fn entry(&self, r: usize, c: usize) -> f64 {
        let span = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        match span.binary_search(&(c as u32)) {
            Ok(k) => self.vals[self.row_ptr[r] + k],
            Err(_) => 0.0,
        }
    }

    /// G must satisfy G = -G^T exactly: entries come from the same term in
    /// mirrored pairs, so this holds to the bit, not merely to rounding.
    pub fn verify_antisymmetric(&self) -> Result<()> {
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.cols[k] as usize;
                if self.entry(c, r) != -self.vals[k] {
                    return Err(Error::Consistency(format!(
                        "generator not antisymmetric at ({r}, {c})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Gershgorin bound on the spectral radius (max absolute row sum).
    pub fn spectral_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| {
                self.vals[self.row_ptr[r]..self.row_ptr[r + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum()
            })
            .fold(0.0, f64::max)
    }

    /// Default integrator substep: fine enough that fixed-step fourth-order
    /// error stays far below observable scales for t = O(10).
    pub fn default_step(&self) -> f64 {
        if self.coeff_l1 > 0.0 {
            (0.1 / self.coeff_l1).min(0.01)
        } else {
            0.01
        }
    }

    /// The generator of the reversed flow (all entries negated); state-side
    /// coefficient dynamics use -G where operator-side dynamics use G.
    pub fn negated(&self) -> AdjointGenerator {
        let mut g = self.clone();
        for v in &mut g.vals {
            *v = -*v;
        }
        g
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k] as usize)] = self.vals[k];
            }
        }
        m
    }
}

/// Integration scheme for the restricted system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Dense exp(G dt) applied per grid step; exact up to Pade accuracy,
    /// capped at [`MATRIX_EXP_MAX_DIM`].
    MatrixExp,
    /// Fixed-substep classical fourth-order integrator on the sparse matvec.
    RungeKutta,
    /// MatrixExp when the class fits the cap, RungeKutta otherwise.
    #[default]
    Auto,
}

/// Evolution controls.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvolveOptions {
    pub method: Method,
    /// Substep for the fixed-step integrator; defaults to
    /// [`AdjointGenerator::default_step`].
    pub step: Option<f64>,
}

/// Sampled scalar observable along the evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// |norm(c(t)) - norm(c(0))| per sample; antisymmetry makes the exact
    /// flow norm-preserving, so this measures integrator error.
    pub norm_drift: Vec<f64>,
}

impl Trajectory {
    pub fn max_norm_drift(&self) -> f64 {
        self.norm_drift.iter().fold(0.0, |a, &b| a.max(b))
    }
}

/// Linear functional of the coefficient vector, as sparse (index, weight)
/// pairs; evaluates trajectory samples without storing full states.
#[derive(Debug, Clone)]
pub struct Probe {
    weights: Vec<(usize, f64)>,
}

impl Probe {
    pub fn new(weights: Vec<(usize, f64)>) -> Self {
        Probe { weights }
    }

    /// Probe returning the coefficient of one member.
    pub fn coefficient(index: usize) -> Self {
        Probe {
            weights: vec![(index, 1.0)],
        }
    }

    /// Expectation tr(rho A(t)) for a product state: weight each member by
    /// its state expectation, skipping zeros.
    pub fn expectation(state: &ProductState, class: &EquivalenceClass) -> Result<Self> {
        if state.num_sites() != class.num_sites() {
            return Err(Error::size_mismatch(class.num_sites(), state.num_sites()));
        }
        let weights = class
            .members()
            .iter()
            .enumerate()
            .filter_map(|(i, p)| {
                let w = state.expectation(p);
                (w != 0.0).then_some((i, w))
            })
            .collect();
        Ok(Probe { weights })
    }

    pub fn apply(&self, c: &DVector<f64>) -> f64 {
        self.weights.iter().map(|&(i, w)| w * c[i]).sum()
    }
}

/// Reusable integrator state: owns the dense exponential cache (one Pade
/// call per distinct step size) or the fixed-step work buffers, so piecewise
/// evolutions with many segments pay setup once.
pub(crate) struct Stepper<'a> {
    gen: &'a AdjointGenerator,
    method: Method,
    step: f64,
    dense: Option<DMatrix<f64>>,
    cache: Vec<(u64, DMatrix<f64>)>,
    work: Vec<Vec<f64>>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(gen: &'a AdjointGenerator, opts: &EvolveOptions) -> Result<Self> {
        let method = match opts.method {
            Method::Auto => {
                if gen.dim() <= MATRIX_EXP_MAX_DIM {
                    Method::MatrixExp
                } else {
                    Method::RungeKutta
                }
            }
            Method::MatrixExp if gen.dim() > MATRIX_EXP_MAX_DIM => {
                return Err(Error::CapExceeded {
                    requested: gen.dim(),
                    cap: MATRIX_EXP_MAX_DIM,
                });
            }
            m => m,
        };
        let step = match opts.step {
            Some(s) if s > 0.0 && s.is_finite() => s,
            Some(s) => return Err(Error::Config(format!("bad integrator step {s}"))),
            None => gen.default_step(),
        };
        let (dense, work) = match method {
            Method::MatrixExp => (Some(gen.to_dense()), Vec::new()),
            _ => (None, vec![vec![0.0; gen.dim()]; 5]),
        };
        Ok(Stepper {
            gen,
            method,
            step,
            dense,
            cache: Vec::new(),
            work,
        })
    }

    /// Advance `c` by `dt >= 0` in place.
    pub(crate) fn advance(&mut self, c: &mut DVector<f64>, dt: f64) {
        if dt == 0.0 {
            return;
        }
        debug_assert!(dt > 0.0);
        match self.method {
            Method::MatrixExp => {
                let key = dt.to_bits();
                let idx = match self.cache.iter().position(|(k, _)| *k == key) {
                    Some(i) => i,
                    None => {
                        let dense = self.dense.as_ref().expect("dense matrix present");
                        self.cache.push((key, (dense * dt).exp()));
                        self.cache.len() - 1
                    }
                };
                let next = &self.cache[idx].1 * &*c;
                *c = next;
            }
            _ => {
                let dim = self.gen.dim();
                let n_sub = (dt / self.step).ceil().max(1.0) as usize;
                let h = dt / n_sub as f64;
                let (k1, rest) = self.work.split_at_mut(1);
                let (k2, rest) = rest.split_at_mut(1);
                let (k3, rest) = rest.split_at_mut(1);
                let (k4, tmp) = rest.split_at_mut(1);
                let (k1, k2, k3, k4, tmp) =
                    (&mut k1[0], &mut k2[0], &mut k3[0], &mut k4[0], &mut tmp[0]);
                for _ in 0..n_sub {
                    let x = c.as_mut_slice();
                    self.gen.matvec(x, k1);
                    for i in 0..dim {
                        tmp[i] = x[i] + 0.5 * h * k1[i];
                    }
                    self.gen.matvec(tmp, k2);
                    for i in 0..dim {
                        tmp[i] = x[i] + 0.5 * h * k2[i];
                    }
                    self.gen.matvec(tmp, k3);
                    for i in 0..dim {
                        tmp[i] = x[i] + h * k3[i];
                    }
                    self.gen.matvec(tmp, k4);
                    for i in 0..dim {
                        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                    }
                }
            }
        }
    }
}

/// Evolve `c0` (the state at `grid[0]`) across an ascending time grid,
/// recording the probe at every sample. Returns the trajectory and the final
/// coefficient vector.
pub fn evolve(
    gen: &AdjointGenerator,
    c0: DVector<f64>,
    grid: &[f64],
    probe: &Probe,
    opts: &EvolveOptions,
) -> Result<(Trajectory, DVector<f64>)> {
    if c0.len() != gen.dim() {
        return Err(Error::size_mismatch(gen.dim() as u32, c0.len() as u32));
    }
    if grid.is_empty() {
        return Err(Error::Config("time grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("time grid must be strictly ascending".into()));
    }
    let mut stepper = Stepper::new(gen, opts)?;
    let mut c = c0;
    let norm0 = c.norm();
    let mut times = Vec::with_capacity(grid.len());
    let mut values = Vec::with_capacity(grid.len());
    let mut drift = Vec::with_capacity(grid.len());
    times.push(grid[0]);
    values.push(probe.apply(&c));
    drift.push(0.0);
    for w in grid.windows(2) {
        stepper.advance(&mut c, w[1] - w[0]);
        times.push(w[1]);
        values.push(probe.apply(&c));
        drift.push((c.norm() - norm0).abs());
    }
    Ok((
        Trajectory {
            times,
            values,
            norm_drift: drift,
        },
        c,
    ))
}

/// Product state rho = prod_i (I + b_i . sigma_i) / 2 given by per-site Bloch
/// vectors; the all-zero vector is the infinite-temperature state.
#[derive(Debug, Clone)]
pub struct ProductState {
    bloch: Vec<[f64; 3]>,
}

impl ProductState {
    pub fn infinite_temperature(num_sites: u32) -> Self {
        ProductState {
            bloch: vec![[0.0; 3]; num_sites as usize],
        }
    }

    /// Set the Bloch vector at a 1-based site; |b| <= 1 for a valid state.
    pub fn with_bloch(mut self, site: usize, b: [f64; 3]) -> Result<Self> {
        if site == 0 || site > self.bloch.len() {
            return Err(Error::SiteOutOfRange {
                site,
                num_sites: self.bloch.len() as u32,
            });
        }
        let norm2: f64 = b.iter().map(|v| v * v).sum();
        if norm2 > 1.0 + 1e-12 {
            return Err(Error::Config(format!(
                "Bloch vector at site {site} has norm {} > 1",
                norm2.sqrt()
            )));
        }
        self.bloch[site - 1] = b;
        Ok(self)
    }

    /// Qubit at `site` in the +1 eigenstate of X, everything else maximally
    /// mixed.
    pub fn plus_x(num_sites: u32, site: usize) -> Result<Self> {
        ProductState::infinite_temperature(num_sites).with_bloch(site, [1.0, 0.0, 0.0])
    }

    pub fn num_sites(&self) -> u32 {
        self.bloch.len() as u32
    }

    pub fn bloch(&self) -> &[[f64; 3]] {
        &self.bloch
    }

    /// tr(rho P): product over the string's support of the matching Bloch
    /// component.
    pub fn expectation(&self, p: &PauliString) -> f64 {
        let mut acc = 1.0;
        for site in 1..=self.bloch.len() {
            let op = p.site_op(site);
            let axis = match op {
                crate::pauli::SiteOp::I => continue,
                crate::pauli::SiteOp::X => 0,
                crate::pauli::SiteOp::Y => 1,
                crate::pauli::SiteOp::Z => 2,
            };
            acc *= self.bloch[site - 1][axis];
            if acc == 0.0 {
                return 0.0;
            }
        }
        acc
    }
}

/// Full pipeline: close the class of `observable`, build the generator, and
/// evolve tr(rho observable(t)) across the grid.
pub fn heisenberg_expectation(
    h: &Hamiltonian,
    observable: &PauliString,
    state: &ProductState,
    grid: &[f64],
    opts: &EvolveOptions,
    budget: usize,
) -> Result<Trajectory> {
    let class = crate::closure::generate_class(h, observable, budget)?;
    if !class.complete() {
        return Err(Error::IncompleteClass {
            found: class.dimension(),
        });
    }
    let gen = AdjointGenerator::build(h, &class)?;
    let seed_idx = class.index_of(observable).expect("seed is a member");
    let mut c0 = DVector::zeros(gen.dim());
    c0[seed_idx] = 1.0;
    let probe = Probe::expectation(state, &class)?;
    let (traj, _) = evolve(&gen, c0, grid, &probe, opts)?;
    Ok(traj)
}

/// Uniform grid of `samples` points covering [t0, t1].
pub fn uniform_grid(t0: f64, t1: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(t1 > t0) {
        return Err(Error::Config(format!(
            "bad grid: [{t0}, {t1}] with {samples} samples"
        )));
    }
    let dt = (t1 - t0) / (samples - 1) as f64;
    Ok((0..samples).map(|k| t0 + k as f64 * dt).collect())
}
