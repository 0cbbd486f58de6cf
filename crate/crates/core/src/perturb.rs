//! Perturbed stochastic generators and the Feynman-Kac semigroups they
//! produce.
//!
//! Given a free-flow generator `θ` and two coefficients `F1`, `F2`, the map
//!
//! ```text
//! φ(x) = θ(x) + F1*(Δθ(x) + ι(x)) + F1*Δ(θ(x) + ι(x))ΔF2 + (θ(x)Δ + ι(x))F2
//! ```
//!
//! generates the perturbed cocycle `(Y¹)* j(·) Y²`; its `(1,1)` block is the
//! generator of the Feynman-Kac semigroup `P_t`.

use serde::Serialize;

use crate::coeff::{transform_doubleprime, BlockCoefficient, DeltaProjection};
use crate::error::{dim_err, Error, Result};
use crate::flow::{check_argument, iota, split_theta, GeneratorMap};
use crate::numerics::{expm, min_eig_hermitian, CMatrix};

/// A linear map on `M_n` stored as an `n² × n²` matrix acting on
/// column-stacked arguments.
#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    n: usize,
    mat: CMatrix,
}

impl Superoperator {
    pub fn new(n: usize, mat: CMatrix) -> Result<Self> {
        if mat.shape() != (n * n, n * n) {
            return Err(dim_err(format!("superoperator matrix must be {0}x{0}", n * n)));
        }
        Ok(Self { n, mat })
    }

    /// Builds the matrix column by column from the images of `E_ij`.
    pub fn from_map(n: usize, f: impl Fn(&CMatrix) -> Result<CMatrix>) -> Result<Self> {
        let nn = n * n;
        let mut mat = CMatrix::zeros(nn, nn);
        for j in 0..n {
            for i in 0..n {
                let image = f(&CMatrix::unit(n, i, j))?;
                if image.shape() != (n, n) {
                    return Err(dim_err("superoperator image has the wrong shape"));
                }
                let col = i + j * n;
                for (row, z) in image.vec().into_iter().enumerate() {
                    mat[(row, col)] = z;
                }
            }
        }
        Ok(Self { n, mat })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n,
            mat: CMatrix::identity(n * n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        check_argument(x, self.n)?;
        CMatrix::unvec(&self.mat.mul_vec(&x.vec()), self.n, self.n)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        Ok(Self {
            n: self.n,
            mat: self.mat.matmul(&other.mat)?,
        })
    }

    pub fn scale(&self, s: f64) -> Superoperator {
        Self {
            n: self.n,
            mat: self.mat.scale_real(s),
        }
    }

    pub fn dist(&self, other: &Superoperator) -> f64 {
        self.mat.dist(&other.mat)
    }
}

fn check_dims(theta: &dyn GeneratorMap, f: &BlockCoefficient, what: &str) -> Result<()> {
    if (theta.n(), theta.d()) != (f.n(), f.d()) {
        return Err(dim_err(format!(
            "{what}: generator has (n, d) = ({}, {}), coefficient has ({}, {})",
            theta.n(),
            theta.d(),
            f.n(),
            f.d()
        )));
    }
    Ok(())
}

/// `ψ(x) = θ(x) + ι(x)F + θ(x)ΔF`: generator of the mapping cocycle
/// `x ↦ j_t(x) Y_t` with `Y = Y^{j,F}`.
pub struct PsiMap<M> {
    theta: M,
    f: CMatrix,
    delta: CMatrix,
}

pub fn psi_map<M: GeneratorMap>(theta: M, f: &BlockCoefficient) -> Result<PsiMap<M>> {
    check_dims(&theta, f, "psi_map")?;
    let delta = DeltaProjection::new(f.n(), f.d()).matrix();
    Ok(PsiMap {
        theta,
        f: f.as_full(),
        delta,
    })
}

impl<M: GeneratorMap> GeneratorMap for PsiMap<M> {
    fn n(&self) -> usize {
        self.theta.n()
    }
    fn d(&self) -> usize {
        self.theta.d()
    }
    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        let tx = self.theta.apply(x)?;
        let io = iota(x, self.d());
        Ok(&(&tx + &(&io * &self.f)) + &(&(&tx * &self.delta) * &self.f))
    }
}

/// Free-flow generator together with two perturbation coefficients.
#[derive(Clone, Debug)]
pub struct PerturbationSpec<M> {
    pub theta: M,
    pub f1: BlockCoefficient,
    pub f2: BlockCoefficient,
}

impl<M: GeneratorMap> PerturbationSpec<M> {
    pub fn new(theta: M, f1: BlockCoefficient, f2: BlockCoefficient) -> Result<Self> {
        check_dims(&theta, &f1, "PerturbationSpec F1")?;
        check_dims(&theta, &f2, "PerturbationSpec F2")?;
        Ok(Self { theta, f1, f2 })
    }

    /// Same flow, coefficients replaced by `(g1, g2)`.
    pub fn with_coefficients(&self, g1: BlockCoefficient, g2: BlockCoefficient) -> Result<PerturbationSpec<&M>> {
        PerturbationSpec::new(&self.theta, g1, g2)
    }
}

/// `φ(x)` evaluated directly on full matrices.
pub fn phi_perturbed<M: GeneratorMap>(spec: &PerturbationSpec<M>, x: &CMatrix) -> Result<CMatrix> {
    let d = spec.theta.d();
    let tx = spec.theta.apply(x)?;
    let io = iota(x, d);
    let delta = DeltaProjection::new(spec.theta.n(), d).matrix();
    let f1a = spec.f1.as_full().adjoint();
    let f2 = spec.f2.as_full();
    let t1 = &(&delta * &tx) + &io;
    let t2 = &(&(&(&f1a * &delta) * &(&tx + &io)) * &delta) * &f2;
    let t3 = &(&(&tx * &delta) + &io) * &f2;
    Ok(&(&(&tx + &(&f1a * &t1)) + &t2) + &t3)
}

/// `φ(x)` assembled block by block from the components of `θ`:
///
/// ```text
/// [[L + l1*δ + l1*π l2 + δ† l2 + k1* x + x k2,  (δ† + l1*π) w2 + x m2],
///  [w1*(δ + π l2) + m1* x,                      w1* π w2 - I ⊗ x     ]]
/// ```
pub fn phi_perturbed_blockform<M: GeneratorMap>(spec: &PerturbationSpec<M>, x: &CMatrix) -> Result<CMatrix> {
    let d = spec.theta.d();
    let tx = spec.theta.apply(x)?;
    let (lind, dagger, delta, pi) = split_theta(&tx, x, d);
    let (f1, f2) = (&spec.f1, &spec.f2);
    let (k1, l1, m1, w1) = (f1.k(), f1.l(), f1.m(), f1.w());
    let (k2, l2, m2, w2) = (f2.k(), f2.l(), f2.m(), f2.w());
    let l1a = l1.adjoint();

    let top_left = &(&(&(&(&lind + &(&l1a * &delta)) + &(&(&l1a * &pi) * l2)) + &(&dagger * l2))
        + &(&k1.adjoint() * x))
        + &(x * k2);
    let top_right = &(&(&dagger + &(&l1a * &pi)) * w2) + &(x * m2);
    let bottom_left = &(&w1.adjoint() * &(&delta + &(&pi * l2))) + &(&m1.adjoint() * x);
    let bottom_right = &(&(&w1.adjoint() * &pi) * w2) - &x.ampliate(d);
    CMatrix::from_blocks(&top_left, &top_right, &bottom_left, &bottom_right)
}

impl<M: GeneratorMap> GeneratorMap for PerturbationSpec<M> {
    fn n(&self) -> usize {
        self.theta.n()
    }
    fn d(&self) -> usize {
        self.theta.d()
    }
    fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        phi_perturbed(self, x)
    }
}

/// Generator of the Feynman-Kac semigroup,
/// `x ↦ L(x) + l1*δ(x) + l1*π(x)l2 + δ†(x)l2 + k1*x + xk2`.
pub fn fk_generator<M: GeneratorMap + ?Sized>(
    theta: &M,
    l1: &CMatrix,
    l2: &CMatrix,
    k1: &CMatrix,
    k2: &CMatrix,
) -> Result<Superoperator> {
    let (n, d) = (theta.n(), theta.d());
    for (name, m, shape) in [
        ("l1", l1, (d * n, n)),
        ("l2", l2, (d * n, n)),
        ("k1", k1, (n, n)),
        ("k2", k2, (n, n)),
    ] {
        if m.shape() != shape {
            return Err(dim_err(format!(
                "{name} is {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                shape.0,
                shape.1
            )));
        }
    }
    let l1a = l1.adjoint();
    let k1a = k1.adjoint();
    Superoperator::from_map(n, |x| {
        let tx = theta.apply(x)?;
        let (lind, dagger, delta, pi) = split_theta(&tx, x, d);
        Ok(&(&(&(&(&lind + &(&l1a * &delta)) + &(&(&l1a * &pi) * l2)) + &(&dagger * l2)) + &(&k1a * x))
            + &(x * k2))
    })
}

/// The `F''` pair `[[k_i, -l_i*], [l_i, 0]]` used to realise [`fk_generator`]
/// as the vacuum block of a perturbed generator.
pub fn fk_coefficients(
    n: usize,
    d: usize,
    l1: &CMatrix,
    l2: &CMatrix,
    k1: &CMatrix,
    k2: &CMatrix,
) -> Result<(BlockCoefficient, BlockCoefficient)> {
    let mk = |k: &CMatrix, l: &CMatrix| -> Result<BlockCoefficient> {
        let base = BlockCoefficient::new(n, d, k.clone(), l.clone(), CMatrix::zeros(n, d * n), CMatrix::identity(d * n))?;
        Ok(transform_doubleprime(&base))
    };
    Ok((mk(k1, l1)?, mk(k2, l2)?))
}

/// `x ↦ E^{0̂} Φ(x) E_{0̂}`, the `(1,1)` block.
pub fn vacuum_generator<M: GeneratorMap + ?Sized>(map: &M) -> Result<Superoperator> {
    let n = map.n();
    Superoperator::from_map(n, |x| Ok(map.apply(x)?.block(0, 0, n, n)))
}

/// `P_t = exp(tG)`.
pub fn semigroup_at(g: &Superoperator, t: f64) -> Result<Superoperator> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("semigroup time must be finite and >= 0, got {t}")));
    }
    Ok(Superoperator {
        n: g.n,
        mat: expm(&g.mat.scale_real(t))?,
    })
}

/// `Σ_ij E_ij ⊗ P(E_ij)`.
pub fn choi_matrix(p: &Superoperator) -> Result<CMatrix> {
    let n = p.n;
    let mut choi = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let image = p.apply(&CMatrix::unit(n, i, j))?;
            choi.set_block(i * n, j * n, &image);
        }
    }
    Ok(choi)
}

pub fn is_cp(p: &Superoperator, tol: f64) -> Result<bool> {
    Ok(min_eig_hermitian(&choi_matrix(p)?)? >= -tol)
}

pub fn is_unital(p: &Superoperator, tol: f64) -> Result<bool> {
    let n = p.n;
    let id = CMatrix::identity(n);
    Ok(p.apply(&id)?.dist(&id) <= tol)
}

/// Semigroup property flags at a single time.
#[derive(Clone, Debug, Serialize)]
pub struct SemigroupFlags {
    pub t: f64,
    pub unital: bool,
    pub cp: bool,
    /// `‖P_t(1)‖ ≤ 1 + tol`; only meaningful as contractivity when `cp` holds.
    pub contractive: bool,
    pub unital_residual: f64,
    pub choi_min_eig: f64,
    pub norm_at_identity: f64,
}

pub fn semigroup_flags(g: &Superoperator, t: f64, unital_tol: f64, cp_tol: f64) -> Result<SemigroupFlags> {
    let p = semigroup_at(g, t)?;
    let id = CMatrix::identity(g.n);
    let p1 = p.apply(&id)?;
    let choi_min_eig = min_eig_hermitian(&choi_matrix(&p)?)?;
    let norm_at_identity = p1.norm();
    Ok(SemigroupFlags {
        t,
        unital: p1.dist(&id) <= unital_tol,
        cp: choi_min_eig >= -cp_tol,
        contractive: norm_at_identity <= 1.0 + unital_tol,
        unital_residual: p1.dist(&id),
        choi_min_eig,
        norm_at_identity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{transform_prime, weyl_scalar};
    use crate::flow::{FlowGenerator, TrivialFlow};
    use crate::numerics::{c, random, I};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lowering() -> CMatrix {
        CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]])
    }

    fn random_coeff(n: usize, d: usize, scale: f64, rng: &mut ChaCha8Rng) -> BlockCoefficient {
        BlockCoefficient::from_full(&random::gaussian((d + 1) * n, (d + 1) * n, rng).scale_real(scale), n, d).unwrap()
    }

    #[test]
    fn superoperator_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = FlowGenerator::random(2, 1, 1.0, &mut rng);
        let s = vacuum_generator(&g).unwrap();
        let x = random::gaussian(2, 2, &mut rng);
        let y = random::gaussian(2, 2, &mut rng);
        let (a, b) = (c(0.3, -1.2), c(2.0, 0.5));
        let lhs = s.apply(&(&x.scale(a) + &y.scale(b))).unwrap();
        let rhs = &s.apply(&x).unwrap().scale(a) + &s.apply(&y).unwrap().scale(b);
        assert!(lhs.dist(&rhs) < 1e-12);
        // and it agrees with the map it was built from
        assert!(s.apply(&x).unwrap().dist(&g.lindblad_apply(&x).unwrap()) < 1e-12);
    }

    #[test]
    fn psi_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = FlowGenerator::random(2, 1, 1.0, &mut rng);
        let x = random::gaussian(2, 2, &mut rng);
        let zero = BlockCoefficient::from_full(&CMatrix::zeros(4, 4), 2, 1).unwrap();
        let psi0 = psi_map(&g, &zero).unwrap();
        assert!(psi0.apply(&x).unwrap().dist(&g.theta_apply(&x).unwrap()) < 1e-14);

        let f = random_coeff(2, 1, 1.0, &mut rng);
        let psi_triv = psi_map(TrivialFlow { n: 2, d: 1 }, &f).unwrap();
        assert!(psi_triv.apply(&x).unwrap().dist(&(&iota(&x, 1) * &f.as_full())) < 1e-14);

        let psi = psi_map(&g, &f).unwrap();
        assert!(psi.apply(&CMatrix::identity(2)).unwrap().dist(&f.as_full()) < 1e-12);
    }

    #[test]
    fn phi_reduces_to_theta_without_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = FlowGenerator::random(2, 2, 1.0, &mut rng);
        let zero = BlockCoefficient::from_full(&CMatrix::zeros(6, 6), 2, 2).unwrap();
        let spec = PerturbationSpec::new(&g, zero.clone(), zero).unwrap();
        let x = random::gaussian(2, 2, &mut rng);
        assert!(phi_perturbed(&spec, &x).unwrap().dist(&g.theta_apply(&x).unwrap()) < 1e-13);
        assert!(phi_perturbed_blockform(&spec, &x).unwrap().dist(&g.theta_apply(&x).unwrap()) < 1e-13);
    }

    #[test]
    fn phi_at_identity_for_doubleprime_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = FlowGenerator::random(2, 1, 1.0, &mut rng);
        let (l1, l2) = (random::gaussian(2, 2, &mut rng), random::gaussian(2, 2, &mut rng));
        let (k1, k2) = (random::gaussian(2, 2, &mut rng), random::gaussian(2, 2, &mut rng));
        let (f1, f2) = fk_coefficients(2, 1, &l1, &l2, &k1, &k2).unwrap();
        let spec = PerturbationSpec::new(&g, f1, f2).unwrap();
        let phi1 = phi_perturbed(&spec, &CMatrix::identity(2)).unwrap();
        let corner = &(&k1.adjoint() + &(&l1.adjoint() * &l2)) + &k2;
        let want = CMatrix::from_blocks(
            &corner,
            &(&l1.adjoint() - &l2.adjoint()),
            &(&l2 - &l1),
            &CMatrix::zeros(2, 2),
        )
        .unwrap();
        assert!(phi1.dist(&want) < 1e-12);
    }

    #[test]
    fn blockform_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let g = FlowGenerator::random(2, 1, 1.0, &mut rng);
            let f1 = random_coeff(2, 1, 1.0, &mut rng);
            let f2 = random_coeff(2, 1, 1.0, &mut rng);
            let spec = PerturbationSpec::new(&g, f1, f2).unwrap();
            for _ in 0..20 {
                let x = random::gaussian(2, 2, &mut rng);
                let a = phi_perturbed(&spec, &x).unwrap();
                let b = phi_perturbed_blockform(&spec, &x).unwrap();
                assert!(a.dist(&b) < 1e-11, "{}", a.dist(&b));
            }
        }
    }

    #[test]
    fn blockform_gauge_with_unit_w() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = FlowGenerator::random(2, 1, 1.0, &mut rng);
        let (f1, f2) = fk_coefficients(
            2,
            1,
            &random::gaussian(2, 2, &mut rng),
            &random::gaussian(2, 2, &mut rng),
            &random::gaussian(2, 2, &mut rng),
            &random::gaussian(2, 2, &mut rng),
        )
        .unwrap();
        let spec = PerturbationSpec::new(&g, f1, f2).unwrap();
        let x = random::gaussian(2, 2, &mut rng);
        let phi = phi_perturbed_blockform(&spec, &x).unwrap();
        let want = &g.pi_apply(&x).unwrap() - &x.ampliate(1);
        assert!(phi.block(2, 2, 2, 2).dist(&want) < 1e-13);
    }

    #[test]
    fn fk_generator_amplitude_damping() {
        let l = lowering();
        let k = (&l.adjoint() * &l).scale_real(-0.5);
        let g = fk_generator(&TrivialFlow { n: 2, d: 1 }, &l, &l, &k, &k).unwrap();
        let p1 = CMatrix::unit(2, 1, 1);
        assert!(g.apply(&p1).unwrap().dist(&-&p1) < 1e-15);
    }

    #[test]
    fn fk_generator_without_perturbation_is_free_lindbladian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = FlowGenerator::random(2, 2, 1.0, &mut rng);
        let z = CMatrix::zeros(4, 2);
        let zk = CMatrix::zeros(2, 2);
        let s = fk_generator(&g, &z, &z, &zk, &zk).unwrap();
        let l = Superoperator::from_map(2, |x| g.lindblad_apply(x)).unwrap();
        assert!(s.dist(&l) < 1e-13);
    }

    #[test]
    fn fk_generator_matches_vacuum_block_and_unitality() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let g = FlowGenerator::random(2, 1, 1.0, &mut rng);
        let l1 = random::gaussian(2, 2, &mut rng);
        let l2 = random::gaussian(2, 2, &mut rng);
        let k1 = random::gaussian(2, 2, &mut rng);
        let k2 = -&(&k1.adjoint() + &(&l1.adjoint() * &l2));
        let s = fk_generator(&g, &l1, &l2, &k1, &k2).unwrap();
        let (f1, f2) = fk_coefficients(2, 1, &l1, &l2, &k1, &k2).unwrap();
        let spec = PerturbationSpec::new(&g, f1, f2).unwrap();
        assert!(vacuum_generator(&spec).unwrap().dist(&s) < 1e-11);
        assert!(s.apply(&CMatrix::identity(2)).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn vacuum_generator_ignores_gauge_and_annihilation_parts() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = FlowGenerator::random(2, 1, 1.0, &mut rng);
        let f1 = random_coeff(2, 1, 1.0, &mut rng);
        let f2 = random_coeff(2, 1, 1.0, &mut rng);
        let spec = PerturbationSpec::new(&g, f1.clone(), f2.clone()).unwrap();
        let base = vacuum_generator(&spec).unwrap();
        assert_eq!(vacuum_generator(&g).unwrap(), Superoperator::from_map(2, |x| g.lindblad_apply(x)).unwrap());
        let p = spec.with_coefficients(transform_prime(&f1), transform_prime(&f2)).unwrap();
        assert!(vacuum_generator(&p).unwrap().dist(&base) < 1e-12);
        let pp = spec
            .with_coefficients(transform_doubleprime(&f1), transform_doubleprime(&f2))
            .unwrap();
        assert!(vacuum_generator(&pp).unwrap().dist(&base) < 1e-12);
    }

    #[test]
    fn semigroup_examples() {
        let l = lowering();
        let k = (&l.adjoint() * &l).scale_real(-0.5);
        let g = fk_generator(&TrivialFlow { n: 2, d: 1 }, &l, &l, &k, &k).unwrap();
        assert!(semigroup_at(&g, 0.0).unwrap().dist(&Superoperator::identity(2)) < 1e-15);
        let p1 = CMatrix::unit(2, 1, 1);
        for t in [0.5, 1.0, 2.0] {
            let got = semigroup_at(&g, t).unwrap().apply(&p1).unwrap();
            assert!(got.dist(&p1.scale_real((-t).exp())) < 1e-12);
        }
        assert!(matches!(semigroup_at(&g, -1.0), Err(Error::Domain(_))));

        // Hamiltonian-only flow: P_t(x) = e^{-ith} x e^{ith}... with L(x) = i(xh - hx)
        // the solution is e^{-ith} x e^{ith}.
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let h = random::hermitian(2, &mut rng);
        let flow = FlowGenerator::new(h.clone(), CMatrix::zeros(2, 2), CMatrix::identity(2)).unwrap();
        let gen = vacuum_generator(&flow).unwrap();
        let x = random::gaussian(2, 2, &mut rng);
        let t = 0.7;
        let u = expm(&h.scale(I * t)).unwrap();
        let want = &(&u.adjoint() * &x) * &u;
        assert!(semigroup_at(&gen, t).unwrap().apply(&x).unwrap().dist(&want) < 1e-12);

        let s = semigroup_at(&gen, 0.3).unwrap().compose(&semigroup_at(&gen, 0.4).unwrap()).unwrap();
        assert!(s.dist(&semigroup_at(&gen, 0.7).unwrap()) < 1e-10);
    }

    #[test]
    fn choi_examples() {
        let id = Superoperator::identity(2);
        let choi = choi_matrix(&id).unwrap();
        let (vals, _) = crate::numerics::eigh(&choi).unwrap();
        assert!((vals[3] - 2.0).abs() < 1e-12 && vals[..3].iter().all(|v| v.abs() < 1e-12));
        assert!(is_cp(&id, 1e-10).unwrap());
        assert!(is_unital(&id, 1e-12).unwrap());

        let transpose = Superoperator::from_map(2, |x| Ok(x.transpose())).unwrap();
        assert!((min_eig_hermitian(&choi_matrix(&transpose).unwrap()).unwrap() + 1.0).abs() < 1e-12);
        assert!(!is_cp(&transpose, 1e-8).unwrap());
    }

    #[test]
    fn cp_instances_give_cp_semigroups() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = FlowGenerator::random(2, 1, 0.5, &mut rng);
        let l = random::gaussian(2, 2, &mut rng).scale_real(0.5);
        let k = random::gaussian(2, 2, &mut rng).scale_real(0.5);
        let s = fk_generator(&g, &l, &l, &k, &k).unwrap();
        for t in [0.1, 1.0, 5.0] {
            assert!(is_cp(&semigroup_at(&s, t).unwrap(), 1e-8).unwrap());
        }
    }

    #[test]
    fn weyl_psi_vacuum_block_is_k() {
        let f = weyl_scalar(c(1.0, 0.0), 0.0);
        let psi = psi_map(TrivialFlow { n: 1, d: 1 }, &f).unwrap();
        let g = vacuum_generator(&psi).unwrap();
        assert!((g.matrix()[(0, 0)] - c(-0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = FlowGenerator::random(2, 1, 1.0, &mut rng);
        let f = random_coeff(1, 1, 1.0, &mut rng);
        assert!(PerturbationSpec::new(&g, f.clone(), f.clone()).is_err());
        assert!(psi_map(&g, &f).is_err());
        let bad = CMatrix::zeros(3, 2);
        assert!(fk_generator(&g, &bad, &bad, &CMatrix::zeros(2, 2), &CMatrix::zeros(2, 2)).is_err());
    }
}
