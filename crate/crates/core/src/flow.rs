//! Free-flow generators `θ = [[L, δ†], [δ, π - ι]]` and the structure
//! relations they satisfy.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coeff::{classify, BlockCoefficient, DeltaProjection};
use crate::error::{dim_err, Error, Result};
use crate::numerics::{random, CMatrix, DEFAULT_TOL, I};

/// A linear map `x ↦ Φ(x)` from `M_n` into `(d+1)n × (d+1)n` matrices, in the
/// block ordering of [`BlockCoefficient`]. Flow generators, the `ψ` map and
/// perturbed generators all implement this.
pub trait GeneratorMap {
    fn n(&self) -> usize;
    fn d(&self) -> usize;
    fn apply(&self, x: &CMatrix) -> Result<CMatrix>;

    fn size(&self) -> usize {
        (self.d() + 1) * self.n()
    }
}

impl<T: GeneratorMap + ?Sized> GeneratorMap for &T {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn d(&self) -> usize {
        (**self).d()
    }
    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        (**self).apply(x)
    }
}

impl<T: GeneratorMap + ?Sized> GeneratorMap for Box<T> {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn d(&self) -> usize {
        (**self).d()
    }
    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        (**self).apply(x)
    }
}

/// Wraps a closure as a [`GeneratorMap`].
pub struct MapFn<F> {
    n: usize,
    d: usize,
    f: F,
}

impl<F: Fn(&CMatrix) -> Result<CMatrix>> MapFn<F> {
    pub fn new(n: usize, d: usize, f: F) -> Self {
        Self { n, d, f }
    }
}

impl<F: Fn(&CMatrix) -> Result<CMatrix>> GeneratorMap for MapFn<F> {
    fn n(&self) -> usize {
        self.n
    }
    fn d(&self) -> usize {
        self.d
    }
    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        check_argument(x, self.n)?;
        (self.f)(x)
    }
}

pub(crate) fn check_argument(x: &CMatrix, n: usize) -> Result<()> {
    if x.shape() != (n, n) {
        return Err(dim_err(format!("argument is {}x{}, expected {n}x{n}", x.rows(), x.cols())));
    }
    Ok(())
}

/// `ι(x) = I_{k̂} ⊗ x = diag(x, I_d ⊗ x)`.
pub fn iota(x: &CMatrix, d: usize) -> CMatrix {
    x.ampliate(d + 1)
}

/// Blocks `(L(x), δ†(x), δ(x), π(x))` read off a generator value `θ(x)`.
pub fn split_theta(theta_x: &CMatrix, x: &CMatrix, d: usize) -> (CMatrix, CMatrix, CMatrix, CMatrix) {
    let n = x.rows();
    let dn = d * n;
    let lind = theta_x.block(0, 0, n, n);
    let dagger = theta_x.block(0, n, n, dn);
    let delta = theta_x.block(n, 0, dn, n);
    let pi = &theta_x.block(n, n, dn, dn) + &x.ampliate(d);
    (lind, dagger, delta, pi)
}

/// The trivial flow `j_t(x) = x ⊗ I`, whose generator is identically zero.
#[derive(Clone, Copy, Debug)]
pub struct TrivialFlow {
    pub n: usize,
    pub d: usize,
}

impl GeneratorMap for TrivialFlow {
    fn n(&self) -> usize {
        self.n
    }
    fn d(&self) -> usize {
        self.d
    }
    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        check_argument(x, self.n)?;
        let s = self.size();
        Ok(CMatrix::zeros(s, s))
    }
}

/// Flow generator parametrised by a Hamiltonian `h`, a column `l` and a
/// unitary `W` with `π(x) = W*(I_d ⊗ x)W`.
#[derive(Clone, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(try_from = "crate::io::FlowJson", into = "crate::io::FlowJson")]
pub struct FlowGenerator {
    n: usize,
    d: usize,
    h: CMatrix,
    l: CMatrix,
    w: CMatrix,
}

impl FlowGenerator {
    pub fn new(h: CMatrix, l: CMatrix, w: CMatrix) -> Result<Self> {
        let g = Self::new_unchecked(h, l, w)?;
        let herm = g.h.dist(&g.h.adjoint());
        if herm > 1e-12 * (1.0 + g.h.norm()) {
            return Err(Error::InvalidFlow(format!("h is not Hermitian (residual {herm:e})")));
        }
        let dn = g.d * g.n;
        let unit = (&g.w.adjoint() * &g.w).dist(&CMatrix::identity(dn));
        if unit > 1e-10 {
            return Err(Error::InvalidFlow(format!("W is not unitary (residual {unit:e})")));
        }
        Ok(g)
    }

    /// Shape checks only. Used for deliberately broken generators in negative
    /// controls.
    pub fn new_unchecked(h: CMatrix, l: CMatrix, w: CMatrix) -> Result<Self> {
        let n = h.rows();
        if n == 0 || !h.is_square() {
            return Err(dim_err("h must be square and non-empty"));
        }
        if l.cols() != n || !l.rows().is_multiple_of(n) || l.rows() == 0 {
            return Err(dim_err(format!("l is {}x{}, expected (d*{n})x{n}", l.rows(), l.cols())));
        }
        let d = l.rows() / n;
        if w.shape() != (d * n, d * n) {
            return Err(dim_err(format!("W is {}x{}, expected {}x{}", w.rows(), w.cols(), d * n, d * n)));
        }
        Ok(Self { n, d, h, l, w })
    }

    /// Random generator with Gaussian `h`, `l` (scaled by `scale`) and Haar `W`.
    pub fn random<R: rand::Rng + ?Sized>(n: usize, d: usize, scale: f64, rng: &mut R) -> Self {
        let h = random::hermitian(n, rng).scale_real(scale);
        let l = random::gaussian(d * n, n, rng).scale_real(scale);
        let w = random::unitary(d * n, rng);
        Self::new(h, l, w).expect("random generator is valid")
    }

    pub fn h(&self) -> &CMatrix {
        &self.h
    }
    pub fn l(&self) -> &CMatrix {
        &self.l
    }
    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    /// `π(x) = W*(I_d ⊗ x)W`.
    pub fn pi_apply(&self, x: &CMatrix) -> Result<CMatrix> {
        check_argument(x, self.n)?;
        Ok(&(&self.w.adjoint() * &x.ampliate(self.d)) * &self.w)
    }

    /// `δ(x) = π(x)l - lx`.
    pub fn delta_apply(&self, x: &CMatrix) -> Result<CMatrix> {
        Ok(&(&self.pi_apply(x)? * &self.l) - &(&self.l * x))
    }

    /// `L(x) = l*π(x)l - (l*lx + xl*l)/2 + i(xh - hx)`.
    pub fn lindblad_apply(&self, x: &CMatrix) -> Result<CMatrix> {
        let pi = self.pi_apply(x)?;
        let ll = &self.l.adjoint() * &self.l;
        let jump = &(&self.l.adjoint() * &pi) * &self.l;
        let anti = (&(&ll * x) + &(x * &ll)).scale_real(0.5);
        let comm = (&(x * &self.h) - &(&self.h * x)).scale(I);
        Ok(&(&jump - &anti) + &comm)
    }

    /// `θ(x) = [[L(x), δ(x*)*], [δ(x), π(x) - I_d ⊗ x]]`.
    pub fn theta_apply(&self, x: &CMatrix) -> Result<CMatrix> {
        let lind = self.lindblad_apply(x)?;
        let dagger = self.delta_apply(&x.adjoint())?.adjoint();
        let delta = self.delta_apply(x)?;
        let gauge = &self.pi_apply(x)? - &x.ampliate(self.d);
        CMatrix::from_blocks(&lind, &dagger, &delta, &gauge)
    }

    /// A unitary-cocycle coefficient whose induced generator is exactly this
    /// `θ`: `[[ih - l*l/2, -l*], [Wl, W - I]]`.
    pub fn implementing_coefficient(&self) -> BlockCoefficient {
        let k = &self.h.scale(I) - &(&self.l.adjoint() * &self.l).scale_real(0.5);
        BlockCoefficient::new(self.n, self.d, k, &self.w * &self.l, -&self.l.adjoint(), self.w.clone())
            .expect("consistent shapes")
    }
}

impl GeneratorMap for FlowGenerator {
    fn n(&self) -> usize {
        self.n
    }
    fn d(&self) -> usize {
        self.d
    }
    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        self.theta_apply(x)
    }
}

/// Generator of the inner flow `x ↦ U_t*(x ⊗ I)U_t` implemented by the
/// unitary cocycle with coefficient `G`, obtained from the quantum Itô
/// product formula: `x ↦ ι(x)G + G*ι(x) + G*Δι(x)ΔG`.
#[derive(Clone, Debug)]
pub struct HpFlowMap {
    g: BlockCoefficient,
    full: CMatrix,
    delta: CMatrix,
}

impl HpFlowMap {
    pub fn coefficient(&self) -> &BlockCoefficient {
        &self.g
    }
}

/// Requires `q(G) = 0 = q(G*)` to `tol`.
pub fn from_hp_coefficient_with_tol(g: &BlockCoefficient, tol: f64) -> Result<HpFlowMap> {
    let flags = classify(g, tol);
    if !(flags.isometric_gen && flags.coisometric_nec) {
        return Err(Error::NotUnitaryGenerator(format!(
            "isometric_gen = {}, coisometric_nec = {}",
            flags.isometric_gen, flags.coisometric_nec
        )));
    }
    Ok(HpFlowMap {
        g: g.clone(),
        full: g.as_full(),
        delta: DeltaProjection::new(g.n(), g.d()).matrix(),
    })
}

pub fn from_hp_coefficient(g: &BlockCoefficient) -> Result<HpFlowMap> {
    from_hp_coefficient_with_tol(g, DEFAULT_TOL)
}

impl GeneratorMap for HpFlowMap {
    fn n(&self) -> usize {
        self.g.n()
    }
    fn d(&self) -> usize {
        self.g.d()
    }
    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        check_argument(x, self.n())?;
        let io = iota(x, self.d());
        let g = &self.full;
        let ga = g.adjoint();
        let hat = &(&self.delta * &io) * &self.delta;
        Ok(&(&(&io * g) + &(&ga * &io)) + &(&(&ga * &hat) * g))
    }
}

/// Largest residual seen for each structure identity.
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub seed: u64,
    pub trials: usize,
    pub tol: f64,
    /// `θ(x*y) = θ(x)*ι(y) + ι(x)*θ(y) + θ(x)*Δθ(y)`.
    pub theta_structure: f64,
    /// `π(x*y) = π(x)*π(y)`.
    pub pi_multiplicative: f64,
    /// `δ(x*y) = δ(x*)y + π(x)*δ(y)`.
    pub delta_derivation: f64,
    /// `L(x*y) = L(x)*y + x*L(y) + δ(x)*δ(y)`.
    pub lindblad_cocycle: f64,
    /// `‖θ(1)‖`.
    pub unitality: f64,
    /// `θ(x*) = θ(x)*`.
    pub realness: f64,
    pub passed: bool,
}

impl StructureReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.theta_structure,
            self.pi_multiplicative,
            self.delta_derivation,
            self.lindblad_cocycle,
            self.unitality,
            self.realness,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Checks the structure relations on `trials` random pairs `(x, y)`.
pub fn validate_structure<M: GeneratorMap + ?Sized>(
    theta: &M,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<StructureReport> {
    let (n, d) = (theta.n(), theta.d());
    let delta = DeltaProjection::new(n, d).matrix();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = StructureReport {
        seed,
        trials,
        tol,
        theta_structure: 0.0,
        pi_multiplicative: 0.0,
        delta_derivation: 0.0,
        lindblad_cocycle: 0.0,
        unitality: theta.apply(&CMatrix::identity(n))?.frobenius(),
        realness: 0.0,
        passed: false,
    };
    for _ in 0..trials {
        let x = random::gaussian(n, n, &mut rng);
        let y = random::gaussian(n, n, &mut rng);
        let xs = x.adjoint();
        let xsy = &xs * &y;
        let tx = theta.apply(&x)?;
        let ty = theta.apply(&y)?;
        let txy = theta.apply(&xsy)?;
        let txs = theta.apply(&xs)?;

        let rhs = &(&(&tx.adjoint() * &iota(&y, d)) + &(&iota(&x, d).adjoint() * &ty))
            + &(&(&tx.adjoint() * &delta) * &ty);
        report.theta_structure = report.theta_structure.max(txy.dist(&rhs));
        report.realness = report.realness.max(txs.dist(&tx.adjoint()));

        let (lx, _, dx, px) = split_theta(&tx, &x, d);
        let (ly, _, dy, py) = split_theta(&ty, &y, d);
        let (lxy, _, dxy, pxy) = split_theta(&txy, &xsy, d);
        let (_, _, dxs, _) = split_theta(&txs, &xs, d);

        report.pi_multiplicative = report.pi_multiplicative.max(pxy.dist(&(&px.adjoint() * &py)));
        let drhs = &(&dxs * &y) + &(&px.adjoint() * &dy);
        report.delta_derivation = report.delta_derivation.max(dxy.dist(&drhs));
        let lrhs = &(&(&lx.adjoint() * &y) + &(&xs * &ly)) + &(&dx.adjoint() * &dy);
        report.lindblad_cocycle = report.lindblad_cocycle.max(lxy.dist(&lrhs));
    }
    report.passed = report.max_residual() <= tol;
    Ok(report)
}
