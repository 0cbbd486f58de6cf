//! QSDE coefficients `F ∈ B(k̂) ⊗ M_n` in block form.
//!
//! The space `k̂ ⊗ C^n` is ordered as `C^n ⊕ (C^d ⊗ C^n)`: the scalar (time)
//! component comes first, then `d` noise copies of the initial space with the
//! noise index major. A coefficient is stored as the four blocks
//!
//! ```text
//! F = [[K, M],
//!      [L, W - I]]
//! ```
//!
//! keeping `W` rather than `W - I` so contraction and unitarity tests are
//! direct.

use num_complex::Complex64;

use crate::error::{dim_err, Error, Result};
use crate::numerics::{min_eig_hermitian, pinv, sqrtm_psd, CMatrix, ONE};

/// Tolerance used by the bisection for the quasicontractivity exponent and
/// by the range-membership test.
pub const BETA_TOL: f64 = 1e-8;

/// Singular values below this are treated as zero in pseudo-inverse solves.
pub const PINV_CUTOFF: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(try_from = "crate::io::CoefficientJson", into = "crate::io::CoefficientJson")]
pub struct BlockCoefficient {
    n: usize,
    d: usize,
    k: CMatrix,
    l: CMatrix,
    m: CMatrix,
    w: CMatrix,
}

impl BlockCoefficient {
    /// Validates block shapes: `K: n×n`, `L: dn×n`, `M: n×dn`, `W: dn×dn`.
    pub fn new(n: usize, d: usize, k: CMatrix, l: CMatrix, m: CMatrix, w: CMatrix) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(dim_err(format!("need n >= 1 and d >= 1, got n={n}, d={d}")));
        }
        let dn = d * n;
        let want = [(n, n), (dn, n), (n, dn), (dn, dn)];
        for ((name, blk), shape) in ["K", "L", "M", "W"].iter().zip([&k, &l, &m, &w]).zip(want) {
            if blk.shape() != shape {
                return Err(dim_err(format!(
                    "block {name} is {}x{}, expected {}x{}",
                    blk.rows(),
                    blk.cols(),
                    shape.0,
                    shape.1
                )));
            }
        }
        Ok(Self { n, d, k, l, m, w })
    }

    /// The zero coefficient (`K = L = M = 0`, `W = I`).
    pub fn zero(n: usize, d: usize) -> Result<Self> {
        Self::new(
            n,
            d,
            CMatrix::zeros(n, n),
            CMatrix::zeros(d * n, n),
            CMatrix::zeros(n, d * n),
            CMatrix::identity(d * n),
        )
    }

    /// Splits a full `(d+1)n` square matrix into blocks.
    pub fn from_full(full: &CMatrix, n: usize, d: usize) -> Result<Self> {
        let size = (d + 1) * n;
        if full.shape() != (size, size) {
            return Err(dim_err(format!(
                "full coefficient is {}x{}, expected {size}x{size}",
                full.rows(),
                full.cols()
            )));
        }
        let dn = d * n;
        let w = &full.block(n, n, dn, dn) + &CMatrix::identity(dn);
        Self::new(
            n,
            d,
            full.block(0, 0, n, n),
            full.block(n, 0, dn, n),
            full.block(0, n, n, dn),
            w,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn size(&self) -> usize {
        (self.d + 1) * self.n
    }
    pub fn k(&self) -> &CMatrix {
        &self.k
    }
    pub fn l(&self) -> &CMatrix {
        &self.l
    }
    pub fn m(&self) -> &CMatrix {
        &self.m
    }
    pub fn w(&self) -> &CMatrix {
        &self.w
    }

    /// The stored gauge block `W - I`.
    pub fn gauge(&self) -> CMatrix {
        &self.w - &CMatrix::identity(self.d * self.n)
    }

    /// `[[K, M], [L, W - I]]` as a `(d+1)n` square matrix.
    pub fn as_full(&self) -> CMatrix {
        CMatrix::from_blocks(&self.k, &self.m, &self.l, &self.gauge()).expect("validated blocks")
    }

    /// `F*`, i.e. blocks `(K*, M*, L*, W*)`.
    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            d: self.d,
            k: self.k.adjoint(),
            l: self.m.adjoint(),
            m: self.l.adjoint(),
            w: self.w.adjoint(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_full(&self.as_full().scale_real(s), self.n, self.d).expect("same shape")
    }

    /// The `(μ, ν)` block of the full matrix, `0 ≤ μ, ν ≤ d`, each `n × n`.
    pub fn component(&self, mu: usize, nu: usize) -> CMatrix {
        let n = self.n;
        self.as_full().block(mu * n, nu * n, n, n)
    }

    fn check_same_dims(&self, other: &Self) -> Result<()> {
        if (self.n, self.d) != (other.n, other.d) {
            return Err(dim_err(format!(
                "coefficients have (n, d) = ({}, {}) and ({}, {})",
                self.n, self.d, other.n, other.d
            )));
        }
        Ok(())
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same_dims(other)?;
        Self::from_full(&(&self.as_full() - &other.as_full()), self.n, self.d)
    }
}

/// The quantum Itô projection `Δ = diag(0_n, I_{dn})` and its complement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeltaProjection {
    pub n: usize,
    pub d: usize,
}

impl DeltaProjection {
    pub fn new(n: usize, d: usize) -> Self {
        Self { n, d }
    }

    pub fn matrix(&self) -> CMatrix {
        CMatrix::block_diag(&CMatrix::zeros(self.n, self.n), &CMatrix::identity(self.d * self.n))
    }

    pub fn complement(&self) -> CMatrix {
        CMatrix::block_diag(&CMatrix::identity(self.n), &CMatrix::zeros(self.d * self.n, self.d * self.n))
    }
}

/// `q(F) = F* + F + F*ΔF`, assembled from the block formula
/// `[[K* + K + L*L, L*W + M], [M* + W*L, W*W - I]]`.
pub fn q_of(f: &BlockCoefficient) -> CMatrix {
    let dn = f.d * f.n;
    let (k, l, m, w) = (&f.k, &f.l, &f.m, &f.w);
    let a = &(&k.adjoint() + k) + &(&l.adjoint() * l);
    let b = &(&l.adjoint() * w) + m;
    let cc = b.adjoint();
    let dd = &(&w.adjoint() * w) - &CMatrix::identity(dn);
    CMatrix::from_blocks(&a, &b, &cc, &dd).expect("validated blocks")
}

/// `q(F*) = F + F* + FΔF*`, from `[[K + K* + MM*, MW* + L*], [L + WM*, WW* - I]]`.
pub fn q_adjoint_of(f: &BlockCoefficient) -> CMatrix {
    let dn = f.d * f.n;
    let (k, l, m, w) = (&f.k, &f.l, &f.m, &f.w);
    let a = &(k + &k.adjoint()) + &(m * &m.adjoint());
    let b = &(m * &w.adjoint()) + &l.adjoint();
    let cc = b.adjoint();
    let dd = &(w * &w.adjoint()) - &CMatrix::identity(dn);
    CMatrix::from_blocks(&a, &b, &cc, &dd).expect("validated blocks")
}

/// Outcome of the quasicontractivity search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Quasicontractivity {
    /// Smallest `β` (to the bisection tolerance) with `q(F) ≤ βΔ⊥`.
    Beta(f64),
    Infeasible,
}

impl Quasicontractivity {
    pub fn beta(self) -> Option<f64> {
        match self {
            Self::Beta(b) => Some(b),
            Self::Infeasible => None,
        }
    }
}

/// `(I - W*W)^{1/2}`, clipping eigenvalues down to `-clip`.
fn contraction_defect_root(w: &CMatrix, clip: f64) -> Result<CMatrix> {
    let dn = w.rows();
    let defect = &CMatrix::identity(dn) - &(&w.adjoint() * w);
    sqrtm_psd(&defect, clip)
}

/// Smallest `β` with `βΔ⊥ - q(F)` positive semidefinite (min eigenvalue ≥ -tol).
///
/// Feasibility is decided first: `W` must be a contraction and `M + L*W` must
/// factor through `(I - W*W)^{1/2}` on the right. The bisection bracket is
/// `[-2‖F‖ - 1, 2‖F‖(2 + ‖F‖) + 1]`.
pub fn min_quasicontractivity_beta(f: &BlockCoefficient, tol: f64) -> Quasicontractivity {
    let w_norm = f.w.norm();
    if w_norm > 1.0 + tol {
        return Quasicontractivity::Infeasible;
    }
    let Ok(root) = contraction_defect_root(&f.w, 3.0 * tol.max(1e-10)) else {
        return Quasicontractivity::Infeasible;
    };
    let r = &f.m + &(&f.l.adjoint() * &f.w);
    let projected = &(&r * &pinv(&root, PINV_CUTOFF)) * &root;
    if r.dist(&projected) > BETA_TOL * (1.0 + f.m.norm()) {
        return Quasicontractivity::Infeasible;
    }

    let q = q_of(f);
    let perp = DeltaProjection::new(f.n, f.d).complement();
    let psd_at = |beta: f64| {
        let gap = &perp.scale_real(beta) - &q;
        min_eig_hermitian(&gap).map(|e| e >= -tol).unwrap_or(false)
    };
    let fnorm = f.as_full().norm();
    let mut lo = -2.0 * fnorm - 1.0;
    let mut hi = 2.0 * fnorm * (2.0 + fnorm) + 1.0;
    if !psd_at(hi) {
        return Quasicontractivity::Infeasible;
    }
    if psd_at(lo) {
        return Quasicontractivity::Beta(lo);
    }
    let step = tol.max(BETA_TOL * 1e-3);
    while hi - lo > step {
        let mid = 0.5 * (lo + hi);
        if psd_at(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Quasicontractivity::Beta(hi)
}

/// Generator classification flags.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Classification {
    /// `q(F) = 0`: the generated cocycle is isometric.
    pub isometric_gen: bool,
    /// `q(F*) = 0`: necessary for a coisometric cocycle.
    pub coisometric_nec: bool,
    /// `q(F) ≤ 0`: the generated cocycle is contractive.
    pub contractive_gen: bool,
    /// `q(F) ≤ βΔ⊥` for some real `β`.
    pub quasicontractive: bool,
}

pub fn classify(f: &BlockCoefficient, tol: f64) -> Classification {
    let q = q_of(f);
    Classification {
        isometric_gen: q.norm() <= tol,
        coisometric_nec: q_adjoint_of(f).norm() <= tol,
        contractive_gen: min_eig_hermitian(&-&q).map(|e| e >= -tol).unwrap_or(false),
        quasicontractive: min_quasicontractivity_beta(f, tol) != Quasicontractivity::Infeasible,
    }
}

/// Factors of the contraction decomposition `M = -L*W + b1^{1/2} v1 (I - W*W)^{1/2}`.
#[derive(Clone, Debug)]
pub struct ContractionDecomposition {
    /// `b1 = βI - (K* + K + L*L)`, positive semidefinite.
    pub b1: CMatrix,
    /// An `n × dn` contraction.
    pub v1: CMatrix,
}

/// Why a contraction decomposition could not be produced.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DecompositionFailure {
    #[error("q(F) <= beta Δ⊥ does not hold (min eigenvalue {0:e})")]
    NotBounded(f64),
    #[error("W is not a contraction (norm {0})")]
    NotContraction(f64),
    #[error("factorisation residual {0:e} exceeds tolerance")]
    Residual(f64),
    #[error("solved v1 has norm {0} > 1 (tolerance inconsistency)")]
    NotContractive(f64),
}

pub fn contraction_decomposition(
    f: &BlockCoefficient,
    beta: f64,
) -> Result<ContractionDecomposition, DecompositionFailure> {
    let q = q_of(f);
    let perp = DeltaProjection::new(f.n, f.d).complement();
    let gap_min = min_eig_hermitian(&(&perp.scale_real(beta) - &q)).unwrap_or(f64::NEG_INFINITY);
    if gap_min < -BETA_TOL {
        return Err(DecompositionFailure::NotBounded(gap_min));
    }
    let w_norm = f.w.norm();
    if w_norm > 1.0 + BETA_TOL {
        return Err(DecompositionFailure::NotContraction(w_norm));
    }
    let n = f.n;
    let b1 = &CMatrix::identity(n).scale_real(beta)
        - &(&(&f.k.adjoint() + &f.k) + &(&f.l.adjoint() * &f.l));
    let b1_root = sqrtm_psd(&b1, BETA_TOL).map_err(|_| DecompositionFailure::NotBounded(gap_min))?;
    let w_root = contraction_defect_root(&f.w, 3.0 * BETA_TOL).map_err(|_| DecompositionFailure::NotContraction(w_norm))?;
    let r = &f.m + &(&f.l.adjoint() * &f.w);
    let v1 = &(&pinv(&b1_root, PINV_CUTOFF) * &r) * &pinv(&w_root, PINV_CUTOFF);
    let residual = r.dist(&(&(&b1_root * &v1) * &w_root));
    if residual > BETA_TOL * (1.0 + f.m.norm()) {
        return Err(DecompositionFailure::Residual(residual));
    }
    let v_norm = v1.norm();
    if v_norm > 1.0 + BETA_TOL {
        return Err(DecompositionFailure::NotContractive(v_norm));
    }
    Ok(ContractionDecomposition { b1, v1 })
}

/// `F' = FΔ⊥ - Δ = [[K, 0], [L, -I]]`.
pub fn transform_prime(f: &BlockCoefficient) -> BlockCoefficient {
    let (n, d) = (f.n, f.d);
    BlockCoefficient::new(
        n,
        d,
        f.k.clone(),
        f.l.clone(),
        CMatrix::zeros(n, d * n),
        CMatrix::zeros(d * n, d * n),
    )
    .expect("shapes preserved")
}

/// `F'' = [[K, -L*], [L, 0]]`.
pub fn transform_doubleprime(f: &BlockCoefficient) -> BlockCoefficient {
    let (n, d) = (f.n, f.d);
    BlockCoefficient::new(n, d, f.k.clone(), f.l.clone(), -&f.l.adjoint(), CMatrix::identity(d * n))
        .expect("shapes preserved")
}

/// `FΔ⊥ = [[K, 0], [L, 0]]`, i.e. `W = I` and `M = 0`.
pub fn right_vacuum_part(f: &BlockCoefficient) -> BlockCoefficient {
    let (n, d) = (f.n, f.d);
    BlockCoefficient::new(n, d, f.k.clone(), f.l.clone(), CMatrix::zeros(n, d * n), CMatrix::identity(d * n))
        .expect("shapes preserved")
}

/// Scalar (`n = d = 1`) Weyl-type generator
/// `K = iη - |λ|²/2, L = λ, M = -conj(λ), W = 1`.
pub fn weyl_scalar(lambda: Complex64, eta: f64) -> BlockCoefficient {
    let k = Complex64::new(-0.5 * lambda.norm_sqr(), eta);
    BlockCoefficient::new(
        1,
        1,
        CMatrix::scalar(k),
        CMatrix::scalar(lambda),
        CMatrix::scalar(-lambda.conj()),
        CMatrix::scalar(ONE),
    )
    .expect("scalar blocks")
}

/// `F = -Δ`: generator of the vacuum-projection cocycle.
pub fn minus_delta(n: usize, d: usize) -> Result<BlockCoefficient> {
    if n == 0 || d == 0 {
        return Err(Error::Dimension("need n, d >= 1".into()));
    }
    BlockCoefficient::new(
        n,
        d,
        CMatrix::zeros(n, n),
        CMatrix::zeros(d * n, n),
        CMatrix::zeros(n, d * n),
        CMatrix::zeros(d * n, d * n),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{c, random};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn direct_q(f: &BlockCoefficient) -> CMatrix {
        let full = f.as_full();
        let delta = DeltaProjection::new(f.n(), f.d()).matrix();
        &(&full.adjoint() + &full) + &(&(&full.adjoint() * &delta) * &full)
    }

    fn random_coefficient(rng: &mut ChaCha8Rng) -> BlockCoefficient {
        let n = rng.random_range(1..=3);
        let d = rng.random_range(1..=3);
        let full = random::gaussian((d + 1) * n, (d + 1) * n, rng);
        BlockCoefficient::from_full(&full, n, d).unwrap()
    }

    fn scalar(z: Complex64) -> CMatrix {
        CMatrix::scalar(z)
    }

    fn f_k1() -> BlockCoefficient {
        BlockCoefficient::new(1, 1, scalar(c(1.0, 0.0)), scalar(c(0.0, 0.0)), scalar(c(0.0, 0.0)), scalar(c(0.0, 0.0)))
            .unwrap()
    }

    #[test]
    fn zero_coefficient_has_zero_q() {
        let f = BlockCoefficient::zero(2, 2).unwrap();
        assert_eq!(q_of(&f).max_abs(), 0.0);
        assert_eq!(q_adjoint_of(&f).max_abs(), 0.0);
        assert_eq!(f.as_full().max_abs(), 0.0);
    }

    #[test]
    fn weyl_generator_is_isometric() {
        let f = weyl_scalar(c(0.7, -0.3), 0.4);
        assert!(q_of(&f).max_abs() < 1e-15);
        assert!(q_adjoint_of(&f).max_abs() < 1e-15);
    }

    #[test]
    fn q_for_unit_k() {
        let want = CMatrix::from_real(&[&[2.0, 0.0], &[0.0, -1.0]]);
        assert!(q_of(&f_k1()).dist(&want) < 1e-15);
    }

    #[test]
    fn q_adjoint_of_minus_delta() {
        let f = minus_delta(1, 1).unwrap();
        let want = -DeltaProjection::new(1, 1).matrix();
        assert!(q_adjoint_of(&f).dist(&want) < 1e-15);
    }

    #[test]
    fn block_formulas_match_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let f = random_coefficient(&mut rng);
            assert!(q_of(&f).dist(&direct_q(&f)) < 1e-12);
            assert!(q_adjoint_of(&f).dist(&direct_q(&f.adjoint())) < 1e-12);
        }
    }

    #[test]
    fn from_full_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let f = random_coefficient(&mut rng);
        assert_eq!(BlockCoefficient::from_full(&f.as_full(), f.n(), f.d()).unwrap().as_full(), f.as_full());
    }

    #[test]
    fn rejects_bad_shapes_and_zero_noise() {
        let z = CMatrix::zeros(1, 1);
        assert!(BlockCoefficient::new(1, 0, z.clone(), z.clone(), z.clone(), z.clone()).is_err());
        assert!(BlockCoefficient::new(1, 2, z.clone(), z.clone(), z.clone(), z).is_err());
    }

    #[test]
    fn beta_examples() {
        let zero = BlockCoefficient::zero(1, 1).unwrap();
        assert!(min_quasicontractivity_beta(&zero, BETA_TOL).beta().unwrap().abs() < 1e-6);
        let b = min_quasicontractivity_beta(&f_k1(), BETA_TOL).beta().unwrap();
        assert!((b - 2.0).abs() < 1e-6, "{b}");
        let big_w = BlockCoefficient::new(1, 1, scalar(c(0.0, 0.0)), scalar(c(0.0, 0.0)), scalar(c(0.0, 0.0)), scalar(c(2.0, 0.0)))
            .unwrap();
        assert_eq!(min_quasicontractivity_beta(&big_w, BETA_TOL), Quasicontractivity::Infeasible);
    }

    #[test]
    fn unitary_w_with_bad_m_is_infeasible() {
        // W = 1 leaves no room for M + L*W ≠ 0.
        let f = BlockCoefficient::new(1, 1, scalar(c(0.0, 0.0)), scalar(c(1.0, 0.0)), scalar(c(0.5, 0.0)), scalar(c(1.0, 0.0)))
            .unwrap();
        assert_eq!(min_quasicontractivity_beta(&f, BETA_TOL), Quasicontractivity::Infeasible);
    }

    #[test]
    fn classify_examples() {
        let all = Classification {
            isometric_gen: true,
            coisometric_nec: true,
            contractive_gen: true,
            quasicontractive: true,
        };
        assert_eq!(classify(&BlockCoefficient::zero(2, 1).unwrap(), 1e-10), all);
        let weyl = classify(&weyl_scalar(c(1.0, 0.5), 0.2), 1e-10);
        assert!(weyl.isometric_gen && weyl.coisometric_nec);
        let k1 = classify(&f_k1(), 1e-10);
        assert_eq!(
            k1,
            Classification {
                isometric_gen: false,
                coisometric_nec: false,
                contractive_gen: false,
                quasicontractive: true
            }
        );
    }

    #[test]
    fn decomposition_examples() {
        let zero = BlockCoefficient::zero(1, 1).unwrap();
        let dec = contraction_decomposition(&zero, 0.0).unwrap();
        assert!(dec.b1.max_abs() < 1e-15 && dec.v1.max_abs() < 1e-15);

        let f = BlockCoefficient::new(1, 1, scalar(c(-0.5, 0.0)), scalar(c(1.0, 0.0)), scalar(c(0.0, 0.0)), scalar(c(0.0, 0.0)))
            .unwrap();
        let dec = contraction_decomposition(&f, 0.0).unwrap();
        assert!(dec.b1.max_abs() < 1e-15 && dec.v1.max_abs() < 1e-15);

        let dec = contraction_decomposition(&f_k1(), 2.0).unwrap();
        assert!(dec.b1.max_abs() < 1e-15 && dec.v1.max_abs() < 1e-15);

        assert!(matches!(contraction_decomposition(&f_k1(), 1.0), Err(DecompositionFailure::NotBounded(_))));
    }

    #[test]
    fn decomposition_reconstructs_m() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let n = rng.random_range(1..=3);
            let d = rng.random_range(1..=2);
            let w = random::unitary(d * n, &mut rng).scale_real(0.6);
            let f = BlockCoefficient::new(
                n,
                d,
                random::gaussian(n, n, &mut rng).scale_real(0.3),
                random::gaussian(d * n, n, &mut rng).scale_real(0.3),
                random::gaussian(n, d * n, &mut rng).scale_real(0.3),
                w,
            )
            .unwrap();
            let beta = min_quasicontractivity_beta(&f, BETA_TOL).beta().unwrap() + 1e-6;
            let dec = contraction_decomposition(&f, beta).unwrap();
            let root_b = sqrtm_psd(&dec.b1, 1e-8).unwrap();
            let root_w = contraction_defect_root(f.w(), 1e-10).unwrap();
            let rebuilt = &(-&(&f.l().adjoint() * f.w())) + &(&(&root_b * &dec.v1) * &root_w);
            assert!(rebuilt.dist(f.m()) < 1e-8 * (1.0 + f.m().norm()));
            assert!(dec.v1.norm() <= 1.0 + 1e-8);
        }
    }

    #[test]
    fn transforms() {
        let zero = BlockCoefficient::zero(2, 1).unwrap();
        let minus = minus_delta(2, 1).unwrap();
        assert_eq!(transform_prime(&zero).as_full(), minus.as_full());

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let full = random::gaussian(4, 4, &mut rng);
        let f = BlockCoefficient::from_full(&full, 2, 1).unwrap();
        let delta = DeltaProjection::new(2, 1);
        let want = &(&full * &delta.complement()) - &delta.matrix();
        assert!(transform_prime(&f).as_full().dist(&want) <= 1e-14);

        let fpp = transform_doubleprime(&f);
        assert_eq!(fpp.m(), &-&f.l().adjoint());
        assert_eq!(fpp.gauge().max_abs(), 0.0);
    }

    #[test]
    fn amplitude_damping_doubleprime_is_quasicontractive() {
        let lower = CMatrix::from_real(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let k = (&lower.adjoint() * &lower).scale_real(-0.5);
        let f = BlockCoefficient::new(2, 1, k, lower, CMatrix::zeros(2, 2), CMatrix::zeros(2, 2)).unwrap();
        let flags = classify(&transform_doubleprime(&f), 1e-10);
        assert!(flags.quasicontractive);
        // q(F'') = Δ⊥ ⊗ (K* + K + L*L) = 0 here.
        assert!(flags.isometric_gen);
    }
}
