//! Matrix elements of Markov-regular cocycles between normalised exponential
//! vectors of step functions.
//!
//! On an interval where the test functions are constant, `f ≡ c` and
//! `g ≡ d`, the compressed cocycle is the semigroup generated by
//! `τ_{c,d}(x) = (ĉ* ⊗ I) φ(x) (d̂ ⊗ I) − χ(c, d) x` with `ĉ = (1, c)`.
//! Over a partition the semigroups compose with the earliest interval
//! outermost.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::flow::GeneratorMap;
use crate::numerics::{random, CMatrix, ZERO};
use crate::perturb::{semigroup_at, Superoperator};

/// Number of ticks per unit of time. All times are integer multiples of
/// `1 / TICKS_PER_UNIT`.
pub const TICKS_PER_UNIT: u64 = 1 << 20;

/// Residual bound used by [`verify_cocycle_identity`].
pub const COCYCLE_TOL: f64 = 1e-9;

/// Converts a time to ticks, rejecting values off the tick grid.
pub fn to_ticks(t: f64) -> Result<u64> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    let x = t * TICKS_PER_UNIT as f64;
    let r = x.round();
    if (x - r).abs() > 1e-6 || r > u64::MAX as f64 / 2.0 {
        return Err(Error::Domain(format!("time {t} is not a multiple of 2^-20")));
    }
    Ok(r as u64)
}

pub fn from_ticks(ticks: u64) -> f64 {
    ticks as f64 / TICKS_PER_UNIT as f64
}

/// Right-continuous step function `R₊ → C^d`, zero after its last
/// breakpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StepFunctionJson", into = "StepFunctionJson")]
pub struct StepFunction {
    d: usize,
    /// `0 = t₀ < t₁ < … < t_m`, in ticks.
    breakpoints: Vec<u64>,
    /// `values[i]` holds on `[t_i, t_{i+1})`.
    values: Vec<Vec<Complex64>>,
}

#[derive(Serialize, Deserialize)]
struct StepFunctionJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    d: Option<usize>,
    breakpoints: Vec<f64>,
    values: Vec<Vec<Complex64>>,
}

impl TryFrom<StepFunctionJson> for StepFunction {
    type Error = Error;
    fn try_from(j: StepFunctionJson) -> Result<Self> {
        let d = match (j.d, j.values.first()) {
            (Some(d), _) => d,
            (None, Some(v)) => v.len(),
            (None, None) => {
                return Err(Error::InvalidStepFunction(
                    "a step function without values needs an explicit \"d\"".into(),
                ))
            }
        };
        StepFunction::new(d, &j.breakpoints, j.values)
    }
}

impl From<StepFunction> for StepFunctionJson {
    fn from(f: StepFunction) -> Self {
        StepFunctionJson {
            d: Some(f.d),
            breakpoints: f.breakpoints.iter().map(|&b| from_ticks(b)).collect(),
            values: f.values,
        }
    }
}

impl StepFunction {
    /// `breakpoints` in time units, starting at 0, with one value per
    /// interval.
    pub fn new(d: usize, breakpoints: &[f64], values: Vec<Vec<Complex64>>) -> Result<Self> {
        let ticks = breakpoints
            .iter()
            .map(|&b| to_ticks(b).map_err(|e| Error::InvalidStepFunction(e.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::from_ticks(d, ticks, values)
    }

    pub fn from_ticks(d: usize, breakpoints: Vec<u64>, values: Vec<Vec<Complex64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidStepFunction("noise dimension must be >= 1".into()));
        }
        if breakpoints.first() != Some(&0) {
            return Err(Error::InvalidStepFunction("breakpoints must start at 0".into()));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidStepFunction("breakpoints must be strictly increasing".into()));
        }
        if values.len() + 1 != breakpoints.len() {
            return Err(Error::InvalidStepFunction(format!(
                "{} breakpoints need {} values, got {}",
                breakpoints.len(),
                breakpoints.len() - 1,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| v.len() != d) {
            return Err(Error::InvalidStepFunction(format!(
                "value of length {} in a C^{d}-valued step function",
                v.len()
            )));
        }
        if values.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidStepFunction("values must be finite".into()));
        }
        Ok(Self { d, breakpoints, values })
    }

    pub fn zero(d: usize) -> Self {
        Self {
            d,
            breakpoints: vec![0],
            values: vec![],
        }
    }

    /// `c` on `[0, end)`, zero afterwards.
    pub fn constant(c: Vec<Complex64>, end: f64) -> Result<Self> {
        let d = c.len();
        let end = to_ticks(end)?;
        if end == 0 {
            return Ok(Self::zero(d));
        }
        Self::from_ticks(d, vec![0, end], vec![c])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn breakpoints(&self) -> &[u64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[Vec<Complex64>] {
        &self.values
    }

    /// Last breakpoint; the function vanishes from here on.
    pub fn support_end(&self) -> u64 {
        *self.breakpoints.last().unwrap()
    }

    /// Value on the tick interval `[tick, tick + 1)`.
    pub fn value_at_tick(&self, tick: u64) -> Vec<Complex64> {
        // index of the last breakpoint <= tick
        let i = self.breakpoints.partition_point(|&b| b <= tick);
        if i == 0 || i > self.values.len() {
            vec![ZERO; self.d]
        } else {
            self.values[i - 1].clone()
        }
    }

    pub fn value_at(&self, t: f64) -> Result<Vec<Complex64>> {
        Ok(self.value_at_tick(to_ticks(t)?))
    }

    /// `S_r* f = f(· + r)`.
    pub fn shift_ticks(&self, r: u64) -> Self {
        if r >= self.support_end() {
            return Self::zero(self.d);
        }
        let mut breakpoints = vec![0];
        let mut values = vec![self.value_at_tick(r)];
        for (i, &b) in self.breakpoints.iter().enumerate() {
            if b > r {
                breakpoints.push(b - r);
                if i < self.values.len() {
                    values.push(self.values[i].clone());
                }
            }
        }
        Self {
            d: self.d,
            breakpoints,
            values,
        }
    }

    pub fn shift(&self, r: f64) -> Result<Self> {
        Ok(self.shift_ticks(to_ticks(r)?))
    }

    /// Inserts a breakpoint at `t` without changing the function.
    pub fn with_breakpoint(&self, t: f64) -> Result<Self> {
        let t = to_ticks(t)?;
        if t == 0 || self.breakpoints.contains(&t) {
            return Ok(self.clone());
        }
        let mut breakpoints = self.breakpoints.clone();
        let mut values = self.values.clone();
        if t > self.support_end() {
            breakpoints.push(t);
            values.push(vec![ZERO; self.d]);
        } else {
            let i = breakpoints.partition_point(|&b| b < t);
            breakpoints.insert(i, t);
            values.insert(i, values[i - 1].clone());
        }
        Self::from_ticks(self.d, breakpoints, values)
    }
}

/// Maximal subintervals of `[start, end)` on which both `f` and `g` are
/// constant, as `(start, end, f-value, g-value)` in ticks.
pub fn common_partition(
    f: &StepFunction,
    g: &StepFunction,
    start: u64,
    end: u64,
) -> Vec<(u64, u64, Vec<Complex64>, Vec<Complex64>)> {
    let mut cuts: Vec<u64> = f
        .breakpoints
        .iter()
        .chain(&g.breakpoints)
        .copied()
        .filter(|&b| b > start && b < end)
        .collect();
    cuts.push(start);
    cuts.push(end);
    cuts.sort_unstable();
    cuts.dedup();
    cuts.windows(2)
        .map(|w| (w[0], w[1], f.value_at_tick(w[0]), g.value_at_tick(w[0])))
        .collect()
}

fn inner(c: &[Complex64], d: &[Complex64]) -> Complex64 {
    c.iter().zip(d).map(|(a, b)| a.conj() * b).sum()
}

fn norm_sqr(c: &[Complex64]) -> f64 {
    c.iter().map(|z| z.norm_sqr()).sum()
}

/// `χ(c, d) = ½(‖c‖² + ‖d‖²) − ⟨c, d⟩`, inner product conjugate-linear on
/// the left.
pub fn chi(c: &[Complex64], d: &[Complex64]) -> Result<Complex64> {
    if c.len() != d.len() {
        return Err(dim_err(format!("chi: vectors of length {} and {}", c.len(), d.len())));
    }
    Ok(Complex64::from(0.5 * (norm_sqr(c) + norm_sqr(d))) - inner(c, d))
}

/// `τ_{c,d}` as a superoperator.
pub fn tau_generator<M: GeneratorMap + ?Sized>(map: &M, c: &[Complex64], d: &[Complex64]) -> Result<Superoperator> {
    let (n, dd) = (map.n(), map.d());
    if c.len() != dd || d.len() != dd {
        return Err(dim_err(format!(
            "tau_generator: noise dimension is {dd}, got vectors of length {} and {}",
            c.len(),
            d.len()
        )));
    }
    let chi_cd = chi(c, d)?;
    let mut c_hat = vec![Complex64::from(1.0)];
    c_hat.extend_from_slice(c);
    let mut d_hat = vec![Complex64::from(1.0)];
    d_hat.extend_from_slice(d);
    Superoperator::from_map(n, |x| {
        let phi = map.apply(x)?;
        let mut out = x.scale(-chi_cd);
        for (mu, cm) in c_hat.iter().enumerate() {
            for (nu, dn) in d_hat.iter().enumerate() {
                let w = cm.conj() * dn;
                if w != ZERO {
                    out += &phi.block(mu * n, nu * n, n, n).scale(w);
                }
            }
        }
        Ok(out)
    })
}

/// `κ_t^{f,g}` as a superoperator: the ordered product of interval
/// semigroups.
pub fn cocycle_superoperator<M: GeneratorMap + Sync + ?Sized>(
    map: &M,
    f: &StepFunction,
    g: &StepFunction,
    t: f64,
) -> Result<Superoperator> {
    let t = to_ticks(t)?;
    cocycle_superoperator_ticks(map, f, g, t)
}

fn check_step_dims<M: GeneratorMap + ?Sized>(map: &M, f: &StepFunction, g: &StepFunction) -> Result<()> {
    if f.d != map.d() || g.d != map.d() {
        return Err(dim_err(format!(
            "step functions take values in C^{} and C^{}, generator has d = {}",
            f.d,
            g.d,
            map.d()
        )));
    }
    Ok(())
}

fn cocycle_superoperator_ticks<M: GeneratorMap + Sync + ?Sized>(
    map: &M,
    f: &StepFunction,
    g: &StepFunction,
    t: u64,
) -> Result<Superoperator> {
    check_step_dims(map, f, g)?;
    let parts = common_partition(f, g, 0, t);
    let factors = parts
        .par_iter()
        .map(|(a, b, c, d)| semigroup_at(&tau_generator(map, c, d)?, from_ticks(b - a)))
        .collect::<Result<Vec<_>>>()?;
    let mut acc = Superoperator::identity(map.n());
    for s in &factors {
        acc = acc.compose(s)?;
    }
    Ok(acc)
}

/// `κ_t^{f,g}(a)`: the matrix element `⟨u, k_t(a) v⟩` between `u ⊗ ϖ(f_{[0,t)})`
/// and `v ⊗ ϖ(g_{[0,t)})`.
pub fn cocycle_matrix_element<M: GeneratorMap + Sync + ?Sized>(
    map: &M,
    f: &StepFunction,
    g: &StepFunction,
    t: f64,
    a: &CMatrix,
) -> Result<CMatrix> {
    cocycle_superoperator(map, f, g, t)?.apply(a)
}

/// Matrix element between unnormalised exponential vectors, returned as
/// `value · exp(log_scale)`.
#[derive(Clone, Debug)]
pub struct UnnormalizedElement {
    pub value: CMatrix,
    pub log_scale: f64,
}

impl UnnormalizedElement {
    /// Multiplies out the scale factor; may overflow.
    pub fn to_matrix(&self) -> CMatrix {
        self.value.scale_real(self.log_scale.exp())
    }
}

pub fn cocycle_matrix_element_unnormalized<M: GeneratorMap + Sync + ?Sized>(
    map: &M,
    f: &StepFunction,
    g: &StepFunction,
    t: f64,
    a: &CMatrix,
) -> Result<UnnormalizedElement> {
    let tt = to_ticks(t)?;
    let value = cocycle_superoperator_ticks(map, f, g, tt)?.apply(a)?;
    let log_scale = common_partition(f, g, 0, tt)
        .iter()
        .map(|(s, e, c, d)| 0.5 * from_ticks(e - s) * (norm_sqr(c) + norm_sqr(d)))
        .sum();
    Ok(UnnormalizedElement { value, log_scale })
}

/// `⟨ϖ(f_{[t,∞)}), ϖ(g_{[t,∞)})⟩ = exp(−∫_t^∞ χ(f, g))`.
pub fn tail_overlap(f: &StepFunction, g: &StepFunction, t: f64) -> Result<Complex64> {
    if f.d != g.d {
        return Err(dim_err("tail_overlap: step functions of different dimension"));
    }
    let start = to_ticks(t)?;
    let end = f.support_end().max(g.support_end());
    if start >= end {
        return Ok(Complex64::from(1.0));
    }
    let mut exponent = ZERO;
    for (s, e, c, d) in common_partition(f, g, start, end) {
        exponent -= chi(&c, &d)? * from_ticks(e - s);
    }
    Ok(exponent.exp())
}

#[derive(Clone, Debug, Serialize)]
pub struct CocycleReport {
    pub r: f64,
    pub t: f64,
    pub trials: usize,
    pub seed: u64,
    pub max_residual: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Compares `κ_{r+t}^{f,g}` with `κ_r^{f,g} ∘ κ_t^{S_r* f, S_r* g}` on
/// `trials` random arguments.
pub fn verify_cocycle_identity<M: GeneratorMap + Sync + ?Sized>(
    map: &M,
    f: &StepFunction,
    g: &StepFunction,
    r: f64,
    t: f64,
    trials: usize,
    seed: u64,
) -> Result<CocycleReport> {
    let (rt, tt) = (to_ticks(r)?, to_ticks(t)?);
    let whole = cocycle_superoperator_ticks(map, f, g, rt + tt)?;
    let first = cocycle_superoperator_ticks(map, f, g, rt)?;
    let rest = cocycle_superoperator_ticks(map, &f.shift_ticks(rt), &g.shift_ticks(rt), tt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_residual: f64 = 0.0;
    for _ in 0..trials {
        let a = random::gaussian(map.n(), map.n(), &mut rng);
        let lhs = whole.apply(&a)?;
        let rhs = first.apply(&rest.apply(&a)?)?;
        max_residual = max_residual.max(lhs.dist(&rhs));
    }
    Ok(CocycleReport {
        r,
        t,
        trials,
        seed,
        max_residual,
        tol: COCYCLE_TOL,
        passed: max_residual <= COCYCLE_TOL,
    })
}
