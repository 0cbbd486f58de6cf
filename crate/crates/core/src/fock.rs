//! Repeated-interaction ("toy Fock") model used as an independent oracle for
//! the analytic semigroups.
//!
//! The state space is `C^n ⊗ (C^{d+1})^{⊗N}` with the initial space most
//! significant and slot 1 the earliest time step. Each slot carries the
//! discrete integrators `Λ^{μν}` scaled by `h^{1 − (δ_{μ0} + δ_{ν0})/2}`.
//!
//! Processes are applied to vectors rather than stored: a simulation at
//! `n = 2, d = 1, N = 16` lives on `C^{131072}`, where a dense operator
//! would not fit. [`DiscreteProcess::dense`] materialises small cases and
//! checks the memory cap first.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coeff::BlockCoefficient;
use crate::error::{dim_err, Error, Result};
use crate::numerics::{expm, random, CMatrix, ONE, ZERO};

/// Default memory cap for dense operators and state buffers: 2 GiB.
pub const DEFAULT_MEMORY_CAP: u64 = 2 << 30;

const BYTES_PER_ENTRY: u128 = 16;

pub type State = Vec<Complex64>;

/// Per-slot integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// `I + Σ G^μ_ν ⊗ Λ^{μν}` per slot, as the QSDE reads.
    #[default]
    Euler,
    /// `exp(Σ G^μ_ν ⊗ Λ^{μν})` per slot.
    Exponential,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ToyFockModel {
    n: usize,
    d: usize,
    slots: usize,
    horizon: f64,
    memory_cap: u64,
    scheme: Scheme,
    dim: usize,
}

impl ToyFockModel {
    pub fn new(n: usize, d: usize, slots: usize, horizon: f64) -> Result<Self> {
        if n == 0 || d == 0 || slots == 0 {
            return Err(dim_err("toy Fock model needs n, d, N >= 1"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
        }
        let dim = u32::try_from(slots)
            .ok()
            .and_then(|s| (d + 1).checked_pow(s))
            .and_then(|p| p.checked_mul(n))
            .ok_or(Error::MemoryCap {
                required: u128::MAX,
                cap: DEFAULT_MEMORY_CAP,
            })?;
        Ok(Self {
            n,
            d,
            slots,
            horizon,
            memory_cap: DEFAULT_MEMORY_CAP,
            scheme: Scheme::Euler,
            dim,
        })
    }

    pub fn with_memory_cap(mut self, cap: u64) -> Self {
        self.memory_cap = cap;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn slots(&self) -> usize {
        self.slots
    }
    pub fn horizon(&self) -> f64 {
        self.horizon
    }
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }
    pub fn memory_cap(&self) -> u64 {
        self.memory_cap
    }

    /// `h = T / N`.
    pub fn step(&self) -> f64 {
        self.horizon / self.slots as f64
    }

    /// `D = n (d+1)^N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn slot_stride(&self, slot: usize) -> usize {
        (self.d + 1).pow((self.slots - slot) as u32)
    }

    fn fock_dim(&self) -> usize {
        self.dim / self.n
    }

    /// Fails if `count` buffers of `entries` complex numbers exceed the cap.
    pub fn check_memory(&self, entries: u128, count: u128) -> Result<()> {
        let required = entries * count * BYTES_PER_ENTRY;
        if required > self.memory_cap as u128 {
            return Err(Error::MemoryCap {
                required,
                cap: self.memory_cap,
            });
        }
        Ok(())
    }

    fn check_state_memory(&self, count: usize) -> Result<()> {
        self.check_memory(self.dim as u128, count as u128)
    }

    /// `h^{1 − (δ_{μ0} + δ_{ν0})/2} |e_μ⟩⟨e_ν|` on `C^{d+1}`.
    pub fn discrete_increment(&self, mu: usize, nu: usize) -> Result<CMatrix> {
        if mu > self.d || nu > self.d {
            return Err(Error::Domain(format!(
                "increment index ({mu}, {nu}) out of range for d = {}",
                self.d
            )));
        }
        let h = self.step();
        let scale = match (mu, nu) {
            (0, 0) => h,
            (0, _) | (_, 0) => h.sqrt(),
            _ => 1.0,
        };
        Ok(CMatrix::unit(self.d + 1, mu, nu).scale_real(scale))
    }

    /// `Σ_{μν} F^μ_ν ⊗ Λ^{μν}` on `C^n ⊗ C^{d+1}`.
    pub fn coefficient_gate(&self, f: &BlockCoefficient) -> Result<CMatrix> {
        if (f.n(), f.d()) != (self.n, self.d) {
            return Err(dim_err(format!(
                "coefficient has (n, d) = ({}, {}), model has ({}, {})",
                f.n(),
                f.d(),
                self.n,
                self.d
            )));
        }
        let s = self.d + 1;
        let mut gate = CMatrix::zeros(self.n * s, self.n * s);
        for mu in 0..s {
            for nu in 0..s {
                gate += &f.component(mu, nu).kron(&self.discrete_increment(mu, nu)?);
            }
        }
        Ok(gate)
    }

    /// One time step of an HP cocycle with coefficient gate `gate`.
    fn step_operator(&self, gate: &CMatrix) -> Result<CMatrix> {
        match self.scheme {
            Scheme::Euler => Ok(&CMatrix::identity(gate.rows()) + gate),
            Scheme::Exponential => expm(gate),
        }
    }

    /// Increment `B` with `Y_{i+1} = (I + V_i* B_{i+1} V_i) Y_i`.
    fn increment_operator(&self, gate: &CMatrix) -> Result<CMatrix> {
        Ok(&self.step_operator(gate)? - &CMatrix::identity(gate.rows()))
    }

    /// Applies a `n(d+1)`-square gate on `C^n ⊗ slot` in place.
    pub fn apply_local(&self, gate: &CMatrix, slot: usize, v: &mut [Complex64]) {
        assert!(slot >= 1 && slot <= self.slots, "slot {slot} out of range");
        let s = self.d + 1;
        let m = self.n * s;
        assert_eq!(gate.shape(), (m, m), "local gate has the wrong shape");
        assert_eq!(v.len(), self.dim, "state has the wrong length");
        let stride = self.slot_stride(slot);
        let block = stride * s;
        let init_stride = self.fock_dim();
        let g = gate.as_slice();
        let mut buf = vec![ZERO; m];
        let mut idx = vec![0usize; m];
        for outer in 0..init_stride / block {
            for inner in 0..stride {
                let base = outer * block + inner;
                for u in 0..self.n {
                    for a in 0..s {
                        let k = u * s + a;
                        idx[k] = u * init_stride + base + a * stride;
                        buf[k] = v[idx[k]];
                    }
                }
                for (r, &target) in idx.iter().enumerate() {
                    let row = &g[r * m..(r + 1) * m];
                    v[target] = row.iter().zip(&buf).map(|(x, y)| x * y).sum();
                }
            }
        }
    }

    /// `(a ⊗ I) v` in place.
    pub fn apply_initial(&self, a: &CMatrix, v: &mut [Complex64]) {
        assert_eq!(a.shape(), (self.n, self.n), "initial-space operator has the wrong shape");
        let fd = self.fock_dim();
        let mut buf = vec![ZERO; self.n];
        for r in 0..fd {
            for u in 0..self.n {
                buf[u] = v[u * fd + r];
            }
            for u in 0..self.n {
                v[u * fd + r] = (0..self.n).map(|w| a[(u, w)] * buf[w]).sum();
            }
        }
    }

    /// `u ⊗ ω^{⊗N}`.
    pub fn vacuum_state(&self, u: &[Complex64]) -> Result<State> {
        if u.len() != self.n {
            return Err(dim_err("vacuum_state: initial vector has the wrong length"));
        }
        self.check_state_memory(1)?;
        let mut v = vec![ZERO; self.dim];
        let fd = self.fock_dim();
        for (k, &z) in u.iter().enumerate() {
            v[k * fd] = z;
        }
        Ok(v)
    }

    /// `e_k ⊗ ω^{⊗N}` for `k = 0..n`.
    pub fn vacuum_basis(&self) -> Result<Vec<State>> {
        (0..self.n)
            .map(|k| {
                let mut u = vec![ZERO; self.n];
                u[k] = ONE;
                self.vacuum_state(&u)
            })
            .collect()
    }

    /// `⟨u ⊗ Ω, X (v ⊗ Ω)⟩` for a dense `X` on `C^D`.
    pub fn vacuum_expect(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.dim, self.dim) {
            return Err(dim_err(format!("vacuum_expect: operator must be {0}x{0}", self.dim)));
        }
        let fd = self.fock_dim();
        Ok(CMatrix::from_fn(self.n, self.n, |u, v| x[(u * fd, v * fd)]))
    }

    /// Gram-type matrix `[⟨left_i, right_j⟩]`.
    pub fn corner(left: &[State], right: &[State]) -> CMatrix {
        CMatrix::from_fn(left.len(), right.len(), |i, j| inner(&left[i], &right[j]))
    }
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn axpy(y: &mut [Complex64], x: &[Complex64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += b;
    }
}

/// Adapted operator process `X_0 … X_K` on the model's state space, acting
/// on slots `offset + 1 ..= offset + K` with `K = N − offset`.
pub trait DiscreteProcess {
    fn model(&self) -> &ToyFockModel;

    fn offset(&self) -> usize;

    fn len(&self) -> usize {
        self.model().slots - self.offset()
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `X_i v`.
    fn apply_in_place(&self, i: usize, v: &mut State);

    /// `X_i* v`.
    fn apply_adjoint_in_place(&self, i: usize, v: &mut State);

    fn apply(&self, i: usize, v: &[Complex64]) -> State {
        let mut w = v.to_vec();
        self.apply_in_place(i, &mut w);
        w
    }

    fn apply_adjoint(&self, i: usize, v: &[Complex64]) -> State {
        let mut w = v.to_vec();
        self.apply_adjoint_in_place(i, &mut w);
        w
    }

    /// `X_i` as a dense matrix, subject to the memory cap.
    fn dense(&self, i: usize) -> Result<CMatrix> {
        let model = self.model();
        let dim = model.dim();
        model.check_memory((dim as u128) * (dim as u128), 1)?;
        let mut out = CMatrix::zeros(dim, dim);
        for j in 0..dim {
            let mut e = vec![ZERO; dim];
            e[j] = ONE;
            self.apply_in_place(i, &mut e);
            for (r, z) in e.into_iter().enumerate() {
                out[(r, j)] = z;
            }
        }
        Ok(out)
    }

    /// `⟨u ⊗ Ω, X_i (v ⊗ Ω)⟩`.
    fn vacuum_compress(&self, i: usize) -> Result<CMatrix> {
        let model = self.model();
        let basis = model.vacuum_basis()?;
        let images: Vec<State> = basis.iter().map(|v| self.apply(i, v)).collect();
        Ok(ToyFockModel::corner(&basis, &images))
    }
}

fn check_index(i: usize, len: usize) {
    assert!(i <= len, "process index {i} exceeds {len} steps");
}

/// Discrete HP cocycle `V_i = S_{o+i} ⋯ S_{o+1}`.
#[derive(Clone, Debug)]
pub struct HpProcess {
    model: ToyFockModel,
    offset: usize,
    step: CMatrix,
    step_adjoint: CMatrix,
}

impl HpProcess {
    pub fn step_operator(&self) -> &CMatrix {
        &self.step
    }

    /// The same cocycle restarted at slot `offset + 1` (the shift `σ_s`).
    pub fn shifted(&self, offset: usize) -> Result<Self> {
        if offset > self.model.slots {
            return Err(Error::Domain(format!("shift {offset} beyond {} slots", self.model.slots)));
        }
        Ok(Self {
            offset,
            ..self.clone()
        })
    }
}

impl DiscreteProcess for HpProcess {
    fn model(&self) -> &ToyFockModel {
        &self.model
    }
    fn offset(&self) -> usize {
        self.offset
    }
    fn apply_in_place(&self, i: usize, v: &mut State) {
        check_index(i, self.len());
        for k in 1..=i {
            self.model.apply_local(&self.step, self.offset + k, v);
        }
    }
    fn apply_adjoint_in_place(&self, i: usize, v: &mut State) {
        check_index(i, self.len());
        for k in (1..=i).rev() {
            self.model.apply_local(&self.step_adjoint, self.offset + k, v);
        }
    }
}

/// `V_0 = I`, `V_{i+1} = (I + Σ G^μ_ν ⊗ Λ^{μν}_{i+1}) V_i`.
pub fn simulate_hp_unitary(model: &ToyFockModel, g: &BlockCoefficient) -> Result<HpProcess> {
    let step = model.step_operator(&model.coefficient_gate(g)?)?;
    Ok(HpProcess {
        model: *model,
        offset: 0,
        step_adjoint: step.adjoint(),
        step,
    })
}

/// `j_i(a) = V_i* (a ⊗ I) V_i`.
#[derive(Clone, Debug)]
pub struct FlowProcess {
    v: HpProcess,
    a: CMatrix,
    a_adjoint: CMatrix,
}

impl DiscreteProcess for FlowProcess {
    fn model(&self) -> &ToyFockModel {
        &self.v.model
    }
    fn offset(&self) -> usize {
        self.v.offset
    }
    fn apply_in_place(&self, i: usize, x: &mut State) {
        self.v.apply_in_place(i, x);
        self.v.model.apply_initial(&self.a, x);
        self.v.apply_adjoint_in_place(i, x);
    }
    fn apply_adjoint_in_place(&self, i: usize, x: &mut State) {
        self.v.apply_in_place(i, x);
        self.v.model.apply_initial(&self.a_adjoint, x);
        self.v.apply_adjoint_in_place(i, x);
    }
}

pub fn simulate_flow(v: &HpProcess, a: &CMatrix) -> Result<FlowProcess> {
    if a.shape() != (v.model.n, v.model.n) {
        return Err(dim_err("simulate_flow: argument must be n x n"));
    }
    Ok(FlowProcess {
        v: v.clone(),
        a: a.clone(),
        a_adjoint: a.adjoint(),
    })
}

/// `Y_0 = I`, `Y_{i+1} = (I + V_i* B_{i+1} V_i) Y_i` with
/// `B = Σ F^μ_ν ⊗ Λ^{μν}`, so that `V_i* B V_i = Σ j_i(F^μ_ν) Λ^{μν}_{i+1}`.
#[derive(Clone, Debug)]
pub struct PerturbationProcess {
    v: HpProcess,
    increment: CMatrix,
    increment_adjoint: CMatrix,
}

impl PerturbationProcess {
    fn step(&self, k: usize, x: &mut State, adjoint: bool) {
        // x += V_k* B_{k+1} V_k x
        let mut w = x.clone();
        self.v.apply_in_place(k, &mut w);
        let b = if adjoint { &self.increment_adjoint } else { &self.increment };
        self.v.model.apply_local(b, self.v.offset + k + 1, &mut w);
        self.v.apply_adjoint_in_place(k, &mut w);
        axpy(x, &w);
    }
}

impl DiscreteProcess for PerturbationProcess {
    fn model(&self) -> &ToyFockModel {
        &self.v.model
    }
    fn offset(&self) -> usize {
        self.v.offset
    }
    fn apply_in_place(&self, i: usize, x: &mut State) {
        check_index(i, self.len());
        for k in 0..i {
            self.step(k, x, false);
        }
    }
    fn apply_adjoint_in_place(&self, i: usize, x: &mut State) {
        check_index(i, self.len());
        for k in (0..i).rev() {
            self.step(k, x, true);
        }
    }
}

pub fn simulate_perturbation(v: &HpProcess, f: &BlockCoefficient) -> Result<PerturbationProcess> {
    let increment = v.model.increment_operator(&v.model.coefficient_gate(f)?)?;
    Ok(PerturbationProcess {
        v: v.clone(),
        increment_adjoint: increment.adjoint(),
        increment,
    })
}

/// `E[(Y¹_N)* j_N(a) Y²_N]`, the discrete Feynman-Kac expectation.
pub fn fk_expectation_estimate(
    v: &HpProcess,
    f1: &BlockCoefficient,
    f2: &BlockCoefficient,
    a: &CMatrix,
) -> Result<CMatrix> {
    let model = &v.model;
    model.check_state_memory(3 * model.n)?;
    let y1 = simulate_perturbation(v, f1)?;
    let y2 = simulate_perturbation(v, f2)?;
    let j = simulate_flow(v, a)?;
    let last = y1.len();
    let basis = model.vacuum_basis()?;
    let left: Vec<State> = basis.iter().map(|u| y1.apply(last, u)).collect();
    let right: Vec<State> = basis
        .iter()
        .map(|u| {
            let mut w = y2.apply(last, u);
            j.apply_in_place(last, &mut w);
            w
        })
        .collect();
    Ok(ToyFockModel::corner(&left, &right))
}

/// `E[Y_N* Y_N]`; equals `I` in the limit when `q(F) = 0`.
pub fn isometry_defect(v: &HpProcess, f: &BlockCoefficient) -> Result<f64> {
    let y = simulate_perturbation(v, f)?;
    let cols: Vec<State> = v.model.vacuum_basis()?.iter().map(|u| y.apply(y.len(), u)).collect();
    Ok((&ToyFockModel::corner(&cols, &cols) - &CMatrix::identity(v.model.n)).norm())
}

/// Vacuum-corner residual of `Y_N = J_s(Y'_{N−s}) Y_s`, where `Y'` is a
/// fresh simulation on slots `s+1..N` driven by the shifted cocycle and
/// `J_s(X) = V_s* X V_s`.
pub fn multiplier_cocycle_check(v: &HpProcess, f: &BlockCoefficient, split: usize) -> Result<f64> {
    let model = &v.model;
    if v.offset != 0 {
        return Err(Error::Domain("multiplier_cocycle_check expects an unshifted cocycle".into()));
    }
    if split == 0 || split >= model.slots {
        return Err(Error::Domain(format!("split must lie in 1..{}, got {split}", model.slots)));
    }
    model.check_state_memory(3 * model.n)?;
    let y = simulate_perturbation(v, f)?;
    let y_shift = simulate_perturbation(&v.shifted(split)?, f)?;
    let basis = model.vacuum_basis()?;
    let mut diffs = Vec::with_capacity(model.n);
    for u in &basis {
        let mut w = y.apply(split, u);
        v.apply_in_place(split, &mut w);
        y_shift.apply_in_place(model.slots - split, &mut w);
        v.apply_adjoint_in_place(split, &mut w);
        let whole = y.apply(model.slots, u);
        for (a, b) in w.iter_mut().zip(&whole) {
            *a -= b;
        }
        diffs.push(w);
    }
    Ok(ToyFockModel::corner(&basis, &diffs).norm())
}

/// `V_t (c ⊗ u) = Σ_k √(h/t) u ⊗ e_c` at slot `k` of the process's window.
fn one_particle_state(model: &ToyFockModel, offset: usize, c: usize, u: usize) -> Result<State> {
    model.check_state_memory(1)?;
    let mut v = vec![ZERO; model.dim];
    let count = model.slots - offset;
    let amp = Complex64::from((1.0 / count as f64).sqrt());
    let fd = model.fock_dim();
    for k in offset + 1..=model.slots {
        v[u * fd + c * model.slot_stride(k)] = amp;
    }
    Ok(v)
}

/// Compression `[[t^{-1/2}⟨vac|], [V_t*]] (Y_K − I) [[t^{-1/2}|vac⟩, V_t]]`
/// with `t` the process's time window; approximates the stochastic
/// derivative of `Y` as `t → 0`.
pub fn stochastic_derivative_estimate<P: DiscreteProcess + ?Sized>(y: &P) -> Result<CMatrix> {
    let model = *y.model();
    let (n, d) = (model.n, model.d);
    let len = y.len();
    if len == 0 {
        return Err(Error::Domain("process window is empty".into()));
    }
    let t = model.step() * len as f64;
    model.check_state_memory(2 * (d + 1) * n)?;
    let mut probes = Vec::with_capacity((d + 1) * n);
    for u in 0..n {
        let mut e = vec![ZERO; n];
        e[u] = Complex64::from(t.powf(-0.5));
        probes.push(model.vacuum_state(&e)?);
    }
    for c in 1..=d {
        for u in 0..n {
            probes.push(one_particle_state(&model, y.offset(), c, u)?);
        }
    }
    let images: Vec<State> = probes
        .iter()
        .map(|p| {
            let mut w = y.apply(len, p);
            for (a, b) in w.iter_mut().zip(p) {
                *a -= b;
            }
            w
        })
        .collect();
    Ok(ToyFockModel::corner(&probes, &images))
}

/// Largest commutator residual of `X_i` against random operators placed on
/// slots after `i`, probed with random states.
pub fn adaptedness_residual<P: DiscreteProcess + ?Sized, R: Rng + ?Sized>(
    x: &P,
    i: usize,
    probes: usize,
    rng: &mut R,
) -> f64 {
    let model = *x.model();
    let s = model.d + 1;
    let mut worst: f64 = 0.0;
    for slot in x.offset() + i + 1..=model.slots {
        let local = CMatrix::identity(model.n).kron(&random::gaussian(s, s, rng));
        for _ in 0..probes {
            let v = random::vector(model.dim, rng);
            let mut a = x.apply(i, &v);
            model.apply_local(&local, slot, &mut a);
            let mut b = v.clone();
            model.apply_local(&local, slot, &mut b);
            x.apply_in_place(i, &mut b);
            let r: f64 = a.iter().zip(&b).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt();
            let scale: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            worst = worst.max(r / scale);
        }
    }
    worst
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderPoint {
    pub slots: usize,
    pub step: f64,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LadderVerdict {
    pub monotone: bool,
    pub final_error: f64,
    pub initial_error: f64,
    pub passed: bool,
}

/// Strictly decreasing errors, and a final error below `0.1·initial` or
/// `0.05`, whichever is larger.
pub fn ladder_verdict(points: &[LadderPoint]) -> LadderVerdict {
    let monotone = points.windows(2).all(|w| w[1].error < w[0].error);
    let initial_error = points.first().map_or(f64::NAN, |p| p.error);
    let final_error = points.last().map_or(f64::NAN, |p| p.error);
    let cap = (0.1 * initial_error).max(0.05);
    LadderVerdict {
        monotone,
        final_error,
        initial_error,
        passed: !points.is_empty() && monotone && final_error <= cap,
    }
}

/// Evaluates `error(N)` for each slot count in parallel, in ladder order.
pub fn run_ladder<F>(slot_counts: &[usize], horizon: f64, error: F) -> Result<Vec<LadderPoint>>
where
    F: Fn(usize) -> Result<f64> + Sync,
{
    slot_counts
        .par_iter()
        .map(|&slots| {
            Ok(LadderPoint {
                slots,
                step: horizon / slots as f64,
                error: error(slots)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{minus_delta, right_vacuum_part, transform_prime, weyl_scalar};
    use crate::flow::from_hp_coefficient;
    use crate::numerics::{c, I};
    use crate::perturb::{fk_coefficients, fk_generator, semigroup_at, vacuum_generator};
    use crate::flow::TrivialFlow;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hamiltonian_coefficient(h: &CMatrix, d: usize) -> BlockCoefficient {
        let n = h.rows();
        BlockCoefficient::new(
            n,
            d,
            h.scale(I),
            CMatrix::zeros(d * n, n),
            CMatrix::zeros(n, d * n),
            CMatrix::identity(d * n),
        )
        .unwrap()
    }

    /// Random HP generator `[[ih − ½l*l, −l*W], [l, W − I]]`.
    fn random_hp(n: usize, d: usize, scale: f64, rng: &mut ChaCha8Rng) -> BlockCoefficient {
        let h = random::hermitian(n, rng).scale_real(scale);
        let l = random::gaussian(d * n, n, rng).scale_real(scale);
        let w = random::unitary(d * n, rng);
        let k = &h.scale(I) - &(&l.adjoint() * &l).scale_real(0.5);
        BlockCoefficient::new(n, d, k, l.clone(), -&(&l.adjoint() * &w), w).unwrap()
    }

    #[test]
    fn increments() {
        let m = ToyFockModel::new(1, 2, 4, 1.0).unwrap();
        assert_eq!(m.discrete_increment(0, 0).unwrap(), CMatrix::unit(3, 0, 0).scale_real(0.25));
        assert_eq!(m.discrete_increment(1, 0).unwrap(), CMatrix::unit(3, 1, 0).scale_real(0.5));
        assert_eq!(m.discrete_increment(1, 1).unwrap(), CMatrix::unit(3, 1, 1));
        for mu in 0..3 {
            for nu in 0..3 {
                assert_eq!(
                    m.discrete_increment(mu, nu).unwrap().adjoint(),
                    m.discrete_increment(nu, mu).unwrap()
                );
            }
        }
        assert!(matches!(m.discrete_increment(3, 0), Err(Error::Domain(_))));
        assert_eq!(m.dim(), 81);
    }

    #[test]
    fn local_gate_matches_kronecker_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = ToyFockModel::new(2, 1, 3, 1.0).unwrap();
        let gate = random::gaussian(4, 4, &mut rng);
        let v = random::vector(m.dim(), &mut rng);
        for slot in 1..=3 {
            // gate acts on (init, slot); reorder to init ⊗ slots by a permutation
            let mut got = v.clone();
            m.apply_local(&gate, slot, &mut got);
            let want: Vec<Complex64> = (0..m.dim())
                .map(|row| {
                    let (u, rest) = (row / 8, row % 8);
                    let a = (rest >> (3 - slot)) & 1;
                    (0..2)
                        .flat_map(|u2| (0..2).map(move |a2| (u2, a2)))
                        .map(|(u2, a2)| {
                            let rest2 = (rest & !(1 << (3 - slot))) | (a2 << (3 - slot));
                            gate[(u * 2 + a, u2 * 2 + a2)] * v[u2 * 8 + rest2]
                        })
                        .sum()
                })
                .collect();
            let err: f64 = got.iter().zip(&want).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            assert!(err < 1e-13);
        }
    }

    #[test]
    fn vacuum_expect_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let m = ToyFockModel::new(2, 1, 2, 1.0).unwrap();
        assert_eq!(m.vacuum_expect(&CMatrix::identity(8)).unwrap(), CMatrix::identity(2));
        let a = random::gaussian(2, 2, &mut rng);
        assert_eq!(m.vacuum_expect(&a.kron(&CMatrix::identity(4))).unwrap(), a);
        let gauge = CMatrix::identity(2).kron(&CMatrix::unit(2, 1, 1)).kron(&CMatrix::identity(2));
        assert_eq!(m.vacuum_expect(&gauge).unwrap(), CMatrix::zeros(2, 2));
    }

    #[test]
    fn zero_coefficients_give_identity_processes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = ToyFockModel::new(2, 1, 3, 1.0).unwrap();
        let zero = BlockCoefficient::from_full(&CMatrix::zeros(4, 4), 2, 1).unwrap();
        let v = simulate_hp_unitary(&m, &zero).unwrap();
        assert_eq!(v.dense(3).unwrap(), CMatrix::identity(16));
        let y = simulate_perturbation(&v, &zero).unwrap();
        assert_eq!(y.dense(3).unwrap(), CMatrix::identity(16));
        let a = random::gaussian(2, 2, &mut rng);
        let j = simulate_flow(&v, &a).unwrap();
        assert!(j.dense(3).unwrap().dist(&a.kron(&CMatrix::identity(8))) < 1e-15);
        assert_eq!(multiplier_cocycle_check(&v, &zero, 1).unwrap(), 0.0);
        assert_eq!(stochastic_derivative_estimate(&y).unwrap(), CMatrix::zeros(4, 4));
    }

    // The discrete time integrator is h|ω⟩⟨ω|, so convergence holds on
    // low-particle states rather than in operator norm.
    #[test]
    fn hamiltonian_cocycle_converges_on_low_particle_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = random::hermitian(2, &mut rng);
        let g = hamiltonian_coefficient(&h, 1);
        let a = random::gaussian(2, 2, &mut rng);
        let u = expm(&h.scale(I)).unwrap();
        let want = &(&u.adjoint() * &a) * &u;
        let (mut last_v, mut last_j) = (f64::INFINITY, f64::INFINITY);
        for slots in [2, 4, 8, 16] {
            let m = ToyFockModel::new(2, 1, slots, 1.0).unwrap();
            let v = simulate_hp_unitary(&m, &g).unwrap();
            let j = simulate_flow(&v, &a).unwrap();
            let mut states = m.vacuum_basis().unwrap();
            states.push(one_particle_state(&m, 0, 1, 0).unwrap());
            states.push(one_particle_state(&m, 0, 1, 1).unwrap());
            let dist = |x: &State, y: &State| -> f64 {
                x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
            };
            let (mut err_v, mut err_j) = (0.0f64, 0.0f64);
            for x in &states {
                let mut ux = x.clone();
                m.apply_initial(&u, &mut ux);
                err_v = err_v.max(dist(&v.apply(slots, x), &ux));
                let mut wx = x.clone();
                m.apply_initial(&want, &mut wx);
                err_j = err_j.max(dist(&j.apply(slots, x), &wx));
            }
            assert!(
                err_v < 0.75 * last_v && err_j < 0.75 * last_j,
                "N = {slots}: {err_v}, {err_j}"
            );
            last_v = err_v;
            last_j = err_j;
        }
    }

    #[test]
    fn hp_vacuum_expectation() {
        let g = BlockCoefficient::new(
            1,
            1,
            CMatrix::scalar(c(-0.5, 0.0)),
            CMatrix::scalar(c(1.0, 0.0)),
            CMatrix::scalar(c(-1.0, 0.0)),
            CMatrix::identity(1),
        )
        .unwrap();
        let m = ToyFockModel::new(1, 1, 12, 1.0).unwrap();
        let v = simulate_hp_unitary(&m, &g).unwrap();
        let e = v.vacuum_compress(12).unwrap()[(0, 0)];
        assert!((e - c((-0.5f64).exp(), 0.0)).norm() < 0.05);
    }

    #[test]
    fn vacuum_projection_cocycle_is_exact() {
        let m = ToyFockModel::new(1, 2, 3, 0.7).unwrap();
        let v = simulate_hp_unitary(&m, &BlockCoefficient::from_full(&CMatrix::zeros(3, 3), 1, 2).unwrap()).unwrap();
        let y = simulate_perturbation(&v, &minus_delta(1, 2).unwrap()).unwrap();
        let omega = CMatrix::unit(3, 0, 0);
        for i in 0..=3 {
            let id3 = CMatrix::identity(3);
            let mut want = CMatrix::identity(1);
            for k in 1..=3 {
                want = want.kron(if k <= i { &omega } else { &id3 });
            }
            assert!(y.dense(i).unwrap().dist(&want) < 1e-14);
        }
        let est = stochastic_derivative_estimate(&y).unwrap();
        let want = CMatrix::block_diag(&CMatrix::zeros(1, 1), &-&CMatrix::identity(2));
        assert!(est.dist(&want) < 1e-14);
    }

    #[test]
    fn processes_are_adapted() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = ToyFockModel::new(2, 1, 4, 1.0).unwrap();
        let g = random_hp(2, 1, 0.5, &mut rng);
        let f = BlockCoefficient::from_full(&random::gaussian(4, 4, &mut rng).scale_real(0.5), 2, 1).unwrap();
        let v = simulate_hp_unitary(&m, &g).unwrap();
        let y = simulate_perturbation(&v, &f).unwrap();
        let j = simulate_flow(&v, &random::gaussian(2, 2, &mut rng)).unwrap();
        for i in 0..4 {
            assert!(adaptedness_residual(&v, i, 2, &mut rng) < 1e-12);
            assert!(adaptedness_residual(&y, i, 2, &mut rng) < 1e-12);
            assert!(adaptedness_residual(&j, i, 2, &mut rng) < 1e-12);
        }
        // the full product is not adapted to anything shorter
        let dense = y.dense(4).unwrap();
        assert_eq!(dense.rows(), 32);
    }

    #[test]
    fn apply_adjoint_matches_dense_adjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let m = ToyFockModel::new(1, 1, 3, 1.0).unwrap();
        let v = simulate_hp_unitary(&m, &random_hp(1, 1, 0.7, &mut rng)).unwrap();
        let f = BlockCoefficient::from_full(&random::gaussian(2, 2, &mut rng), 1, 1).unwrap();
        let y = simulate_perturbation(&v, &f).unwrap();
        let dense = y.dense(3).unwrap().adjoint();
        let x = random::vector(8, &mut rng);
        let got = y.apply_adjoint(3, &x);
        let want = dense.mul_vec(&x);
        assert!(got.iter().zip(&want).all(|(a, b)| (a - b).norm() < 1e-13));
    }

    #[test]
    fn trivial_flow_multiplier_cocycle_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = ToyFockModel::new(2, 1, 6, 1.0).unwrap();
        let v = simulate_hp_unitary(&m, &BlockCoefficient::from_full(&CMatrix::zeros(4, 4), 2, 1).unwrap()).unwrap();
        let f = BlockCoefficient::from_full(&random::gaussian(4, 4, &mut rng), 2, 1).unwrap();
        for split in 1..6 {
            assert!(multiplier_cocycle_check(&v, &f, split).unwrap() < 1e-13);
        }
    }

    #[test]
    fn vacuum_columns_depend_on_first_column_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = ToyFockModel::new(2, 1, 5, 1.0).unwrap();
        let v = simulate_hp_unitary(&m, &random_hp(2, 1, 0.5, &mut rng)).unwrap();
        let f = BlockCoefficient::from_full(&random::gaussian(4, 4, &mut rng), 2, 1).unwrap();
        let y = simulate_perturbation(&v, &f).unwrap();
        let yr = simulate_perturbation(&v, &right_vacuum_part(&f)).unwrap();
        let yp = simulate_perturbation(&v, &transform_prime(&f)).unwrap();
        for u in m.vacuum_basis().unwrap() {
            let a = y.apply(5, &u);
            for other in [yr.apply(5, &u), yp.apply(5, &u)] {
                assert!(a.iter().zip(&other).all(|(p, q)| (p - q).norm() < 1e-13));
            }
        }
    }

    #[test]
    fn damping_estimate_approaches_closed_form() {
        let l = CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let k = (&l.adjoint() * &l).scale_real(-0.5);
        let (f1, f2) = fk_coefficients(2, 1, &l, &l, &k, &k).unwrap();
        let p1 = CMatrix::unit(2, 1, 1);
        let want = p1.scale_real((-0.5f64).exp());
        let zero = BlockCoefficient::from_full(&CMatrix::zeros(4, 4), 2, 1).unwrap();
        let pts = run_ladder(&[2, 4, 8], 0.5, |slots| {
            let m = ToyFockModel::new(2, 1, slots, 0.5)?;
            let v = simulate_hp_unitary(&m, &zero)?;
            Ok(fk_expectation_estimate(&v, &f1, &f2, &p1)?.dist(&want))
        })
        .unwrap();
        let verdict = ladder_verdict(&pts);
        assert!(verdict.monotone, "{pts:?}");

        // sanity: the analytic side agrees with the closed form
        let g = fk_generator(&TrivialFlow { n: 2, d: 1 }, &l, &l, &k, &k).unwrap();
        assert!(semigroup_at(&g, 0.5).unwrap().apply(&p1).unwrap().dist(&want) < 1e-12);
    }

    #[test]
    fn free_flow_expectation_approaches_markov_semigroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_hp(2, 1, 0.5, &mut rng);
        let theta = from_hp_coefficient(&g).unwrap();
        let a = random::gaussian(2, 2, &mut rng);
        let want = semigroup_at(&vacuum_generator(&theta).unwrap(), 1.0).unwrap().apply(&a).unwrap();
        let zero = BlockCoefficient::from_full(&CMatrix::zeros(4, 4), 2, 1).unwrap();
        let mut last = f64::INFINITY;
        for slots in [2, 4, 8] {
            let m = ToyFockModel::new(2, 1, slots, 1.0).unwrap();
            let v = simulate_hp_unitary(&m, &g).unwrap();
            let err = fk_expectation_estimate(&v, &zero, &zero, &a).unwrap().dist(&want);
            assert!(err < last, "{err} vs {last}");
            last = err;
        }
    }

    #[test]
    fn weyl_vacuum_and_derivative_trend() {
        let f = weyl_scalar(c(0.8, 0.3), 0.2);
        let zero = BlockCoefficient::from_full(&CMatrix::zeros(2, 2), 1, 1).unwrap();
        let mut last = f64::INFINITY;
        for t in [0.4, 0.2, 0.1] {
            let m = ToyFockModel::new(1, 1, 8, t).unwrap();
            let v = simulate_hp_unitary(&m, &zero).unwrap();
            let y = simulate_perturbation(&v, &f).unwrap();
            let err = stochastic_derivative_estimate(&y).unwrap().dist(&f.as_full());
            assert!(err < last);
            last = err;
        }
    }

    #[test]
    fn memory_cap_is_enforced() {
        let m = ToyFockModel::new(2, 1, 10, 1.0).unwrap().with_memory_cap(1 << 20);
        let zero = BlockCoefficient::from_full(&CMatrix::zeros(4, 4), 2, 1).unwrap();
        let v = simulate_hp_unitary(&m, &zero).unwrap();
        assert!(matches!(v.dense(1), Err(Error::MemoryCap { .. })));
        assert!(ToyFockModel::new(2, 1, 200, 1.0).is_err());
    }

    #[test]
    fn exponential_scheme_is_exact_for_hamiltonians() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = random::hermitian(2, &mut rng);
        let g = hamiltonian_coefficient(&h, 1);
        let m = ToyFockModel::new(2, 1, 3, 0.9).unwrap().with_scheme(Scheme::Exponential);
        let vn = simulate_hp_unitary(&m, &g).unwrap().dense(3).unwrap();
        assert!((&vn.adjoint() * &vn).dist(&CMatrix::identity(16)) < 1e-12);
        let u = expm(&h.scale(I * 0.9)).unwrap();
        let e = simulate_hp_unitary(&m, &g).unwrap().vacuum_compress(3).unwrap();
        assert!(e.dist(&u) < 1e-12);
    }

    #[test]
    fn verdict_rules() {
        let mk = |e: &[f64]| -> Vec<LadderPoint> {
            e.iter().enumerate().map(|(i, &error)| LadderPoint { slots: 4 << i, step: 0.0, error }).collect()
        };
        assert!(ladder_verdict(&mk(&[0.3, 0.1, 0.04])).passed);
        assert!(ladder_verdict(&mk(&[1.0, 0.5, 0.09])).passed);
        assert!(!ladder_verdict(&mk(&[1.0, 0.5, 0.2])).passed);
        assert!(!ladder_verdict(&mk(&[0.3, 0.31, 0.01])).passed);
    }
}
