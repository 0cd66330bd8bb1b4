//! Circuit parameter space and the charge-basis Hamiltonian of the
//! split-junction (SQUID) transmon.
//!
//! The qubit Hamiltonian in the Cooper-pair number basis is
//!
//! ```text
//! H = 4 Ec (n̂ − ng)² − EJΣ [ cos(π φext) cos φ̂ + d sin(π φext) sin φ̂ ]
//! ```
//!
//! with all energies as linear frequencies E/h in GHz. The junction term is
//! the pole-free rewrite of the flux-tuned SQUID element: it agrees with the
//! cos(π φext)[cos φ̂ + d tan(π φext) sin φ̂] form wherever the tangent is
//! defined and stays finite at φext = 1/2. With cos φ̂ = (S⁺ + S⁻)/2 and
//! sin φ̂ = (S⁺ − S⁻)/(2i), S⁺|n⟩ = |n+1⟩, the matrix is tridiagonal:
//!
//! ```text
//! ⟨n|H|n⟩     = 4 Ec (n − ng)²
//! ⟨n|H|n+1⟩   = −(EJΣ/2) cos(π φext) + i (EJΣ/2) d sin(π φext)
//! ⟨n+1|H|n⟩   = conjugate of the above
//! ```

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{fp, Scalar};

/// Physical knobs of the two-junction transmon.
///
/// `ej_sum` is the sum of the two Josephson energies (proportional to the
/// total critical current), `ec` the charging energy, both as E/h in GHz.
/// `d` is the dimensionless junction asymmetry, `ng` the offset charge in
/// Cooper-pair units and `phi_ext` the external flux in units of Φ0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams<F> {
    pub ej_sum: F,
    pub ec: F,
    pub d: F,
    pub ng: F,
    pub phi_ext: F,
}

impl<F: Scalar> CircuitParams<F> {
    pub fn new(ej_sum: F, ec: F, d: F, ng: F, phi_ext: F) -> Result<Self> {
        let params = CircuitParams {
            ej_sum,
            ec,
            d,
            ng,
            phi_ext,
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks finiteness and the bounds ej_sum ≥ 0, ec > 0, 0 ≤ d < 1.
    pub fn validate(&self) -> Result<()> {
        for (field, value) in [
            ("ej_sum", self.ej_sum),
            ("ec", self.ec),
            ("d", self.d),
            ("ng", self.ng),
            ("phi_ext", self.phi_ext),
        ] {
            if !value.is_finite() {
                return Err(Error::NonFiniteParameter {
                    field,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        if self.ej_sum < F::zero() {
            return Err(Error::validation("ej_sum", "must satisfy ej_sum >= 0"));
        }
        if self.ec <= F::zero() {
            return Err(Error::validation("ec", "must satisfy ec > 0"));
        }
        if self.d < F::zero() || self.d >= F::one() {
            return Err(Error::validation("d", "must satisfy 0 <= d < 1"));
        }
        Ok(())
    }

    /// EJΣ/Ec, the ratio everything in this crate is swept over.
    pub fn ratio(&self) -> F {
        self.ej_sum / self.ec
    }
}

/// Charge-basis truncation: the basis spans n ∈ {−ncut, …, +ncut}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationConfig<F> {
    /// Half-width of the charge window; matrix dimension is 2·ncut + 1.
    pub ncut: usize,
    /// Acceptable |ΔE01| in GHz when ncut grows by one escalation step.
    pub convergence_tol_ghz: F,
}

impl<F: Scalar> TruncationConfig<F> {
    pub fn new(ncut: usize, convergence_tol_ghz: F) -> Result<Self> {
        let trunc = TruncationConfig {
            ncut,
            convergence_tol_ghz,
        };
        trunc.validate()?;
        Ok(trunc)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ncut < 2 {
            return Err(Error::validation("ncut", "must satisfy ncut >= 2"));
        }
        if !self.convergence_tol_ghz.is_finite() || self.convergence_tol_ghz < F::zero() {
            return Err(Error::validation(
                "convergence_tol_ghz",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }

    /// Matrix dimension 2·ncut + 1 for this window.
    pub fn dimension(&self) -> usize {
        2 * self.ncut + 1
    }

    /// Same tolerance, different window.
    pub fn with_ncut(&self, ncut: usize) -> Self {
        TruncationConfig {
            ncut,
            convergence_tol_ghz: self.convergence_tol_ghz,
        }
    }
}

impl<F: Scalar> Default for TruncationConfig<F> {
    /// ncut = 30 (dimension 61) with a 1e−10 GHz E01 tolerance. For
    /// EJΣ/Ec ≤ 200 the low transmon states occupy |n| of a few times
    /// (EJΣ/8Ec)^(1/4), so 30 is generous and cheap.
    fn default() -> Self {
        TruncationConfig {
            ncut: 30,
            convergence_tol_ghz: fp(1e-10),
        }
    }
}

/// Dense Hermitian matrix, row-major. Eigenvalues are real.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<F> {
    dim: usize,
    entries: Vec<Complex<F>>,
}

impl<F: Scalar> HermitianMatrix<F> {
    /// Builds from row-major entries, checking the Hermitian symmetry
    /// entries[i][j] = conj(entries[j][i]) to within 1e−12 relative
    /// (or the scalar's epsilon, whichever is larger).
    pub fn new(dim: usize, entries: Vec<Complex<F>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("dimension", "must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(Error::validation(
                "entries",
                format!("expected {} entries, got {}", dim * dim, entries.len()),
            ));
        }
        for v in &entries {
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::validation("entries", "must all be finite"));
            }
        }
        let m = HermitianMatrix { dim, entries };
        let tol_rel = fp::<F>(1e-12).max(F::epsilon());
        for i in 0..dim {
            for j in i..dim {
                let a = m.at(i, j);
                let b = m.at(j, i).conj();
                let diff = (a - b).norm();
                let scale = a.norm().max(b.norm());
                if diff > tol_rel * scale {
                    return Err(Error::validation(
                        "entries",
                        format!("not Hermitian at ({i}, {j}): {a} vs conj {b}"),
                    ));
                }
            }
        }
        Ok(m)
    }

    /// Internal constructor for matrices that are Hermitian by construction.
    pub(crate) fn from_raw(dim: usize, entries: Vec<Complex<F>>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        HermitianMatrix { dim, entries }
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> Complex<F> {
        self.entries[row * self.dim + col]
    }

    #[inline]
    pub(crate) fn set(&mut self, row: usize, col: usize, value: Complex<F>) {
        self.entries[row * self.dim + col] = value;
    }

    /// True when every entry beyond the first off-diagonal is zero.
    pub(crate) fn is_tridiagonal(&self) -> bool {
        for i in 0..self.dim {
            for j in 0..self.dim {
                if j > i + 1 || i > j + 1 {
                    let v = self.at(i, j);
                    if v.re != F::zero() || v.im != F::zero() {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Builds the truncated charge-basis Hamiltonian. See the module docs for
/// the element convention. Entries and eigenvalues are E/h in GHz.
///
/// φext = 1/2 is a legal input: the rewritten junction term has no tangent
/// pole there.
pub fn build_hamiltonian<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
) -> Result<HermitianMatrix<F>> {
    params.validate()?;
    trunc.validate()?;

    let dim = trunc.dimension();
    let ncut = trunc.ncut as i64;
    let four = fp::<F>(4.0);
    let half = fp::<F>(0.5);
    let angle = F::PI() * params.phi_ext;
    let upper = Complex::new(
        -params.ej_sum * half * angle.cos(),
        params.ej_sum * half * params.d * angle.sin(),
    );

    let mut m = HermitianMatrix::from_raw(dim, vec![Complex::new(F::zero(), F::zero()); dim * dim]);
    for i in 0..dim {
        let n = fp::<F>((i as i64 - ncut) as f64);
        let shifted = n - params.ng;
        m.set(
            i,
            i,
            Complex::new(four * params.ec * shifted * shifted, F::zero()),
        );
    }
    for i in 0..dim - 1 {
        m.set(i, i + 1, upper);
        m.set(i + 1, i, upper.conj());
    }
    Ok(m)
}

/// ∂H/∂ng: the diagonal matrix −8 Ec (n̂ − ng).
pub(crate) fn charge_derivative_matrix<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
) -> HermitianMatrix<F> {
    let dim = trunc.dimension();
    let ncut = trunc.ncut as i64;
    let eight = fp::<F>(8.0);
    let mut m = HermitianMatrix::from_raw(dim, vec![Complex::new(F::zero(), F::zero()); dim * dim]);
    for i in 0..dim {
        let n = fp::<F>((i as i64 - ncut) as f64);
        m.set(
            i,
            i,
            Complex::new(-eight * params.ec * (n - params.ng), F::zero()),
        );
    }
    m
}

/// ∂H/∂φext: −EJΣ π [ −sin(π φext) cos φ̂ + d cos(π φext) sin φ̂ ].
pub(crate) fn flux_derivative_matrix<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
) -> HermitianMatrix<F> {
    let dim = trunc.dimension();
    let half = fp::<F>(0.5);
    let angle = F::PI() * params.phi_ext;
    // Entry-wise derivative of the builder's upper off-diagonal
    // −(EJΣ/2) cos(π φext) + i (EJΣ/2) d sin(π φext).
    let upper = Complex::new(
        params.ej_sum * F::PI() * angle.sin() * half,
        params.ej_sum * F::PI() * params.d * angle.cos() * half,
    );
    let mut m = HermitianMatrix::from_raw(dim, vec![Complex::new(F::zero(), F::zero()); dim * dim]);
    for i in 0..dim - 1 {
        m.set(i, i + 1, upper);
        m.set(i + 1, i, upper.conj());
    }
    m
}

/// ∂H/∂δ at δ = 0 for a common-mode critical-current deviation
/// EJΣ → EJΣ (1 + δ): the full junction term of H.
pub(crate) fn junction_matrix<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
) -> HermitianMatrix<F> {
    let dim = trunc.dimension();
    let half = fp::<F>(0.5);
    let angle = F::PI() * params.phi_ext;
    let upper = Complex::new(
        -params.ej_sum * half * angle.cos(),
        params.ej_sum * half * params.d * angle.sin(),
    );
    let mut m = HermitianMatrix::from_raw(dim, vec![Complex::new(F::zero(), F::zero()); dim * dim]);
    for i in 0..dim - 1 {
        m.set(i, i + 1, upper);
        m.set(i + 1, i, upper.conj());
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params64(ej_sum: f64, ec: f64, d: f64, ng: f64, phi_ext: f64) -> CircuitParams<f64> {
        CircuitParams::new(ej_sum, ec, d, ng, phi_ext).unwrap()
    }

    #[test]
    fn symmetric_point_elements() {
        // Smallest legal window (ncut = 2). The central 3x3 block carries the
        // textbook values diag [1.4, 0, 1.4] GHz with −10 GHz couplings.
        let p = params64(20.0, 0.35, 0.0, 0.0, 0.0);
        let t = TruncationConfig::new(2, 1e-10).unwrap();
        let h = build_hamiltonian(&p, &t).unwrap();
        assert_eq!(h.dimension(), 5);
        assert_eq!(h.at(1, 1).re, 1.4);
        assert_eq!(h.at(2, 2).re, 0.0);
        assert_eq!(h.at(3, 3).re, 1.4);
        assert_eq!(h.at(0, 0).re, 5.6);
        assert_eq!(h.at(4, 4).re, 5.6);
        for i in 0..4 {
            assert_eq!(h.at(i, i + 1), Complex::new(-10.0, 0.0));
            assert_eq!(h.at(i + 1, i), Complex::new(-10.0, 0.0));
        }
        assert_eq!(h.at(0, 2), Complex::new(0.0, 0.0));
    }

    #[test]
    fn real_when_flux_or_asymmetry_vanishes() {
        let t = TruncationConfig::new(4, 1e-10).unwrap();
        for p in [
            params64(17.0, 0.4, 0.15, 0.3, 0.0),
            params64(17.0, 0.4, 0.0, 0.3, 0.37),
        ] {
            let h = build_hamiltonian(&p, &t).unwrap();
            for i in 0..h.dimension() {
                for j in 0..h.dimension() {
                    assert_eq!(h.at(i, j).im, 0.0, "entry ({i}, {j}) has imaginary part");
                }
            }
        }
    }

    #[test]
    fn asymmetric_flux_biased_off_diagonal() {
        // Hand evaluation: −10 cos(π/4) + i·1·sin(π/4).
        let p = params64(20.0, 0.35, 0.1, 0.0, 0.25);
        let t = TruncationConfig::new(2, 1e-10).unwrap();
        let h = build_hamiltonian(&p, &t).unwrap();
        let expected = Complex::new(
            -10.0 * std::f64::consts::FRAC_1_SQRT_2,
            std::f64::consts::FRAC_1_SQRT_2,
        );
        let got = h.at(0, 1);
        assert!((got - expected).norm() < 1e-12, "{got} vs {expected}");
        assert_eq!(h.at(1, 0), got.conj());
    }

    #[test]
    fn rejects_non_finite_and_out_of_range() {
        assert!(matches!(
            CircuitParams::new(f64::NAN, 0.35, 0.0, 0.0, 0.0),
            Err(Error::NonFiniteParameter {
                field: "ej_sum",
                ..
            })
        ));
        assert!(matches!(
            CircuitParams::new(20.0, 0.35, 1.0, 0.0, 0.0),
            Err(Error::Validation { .. })
        ));
        assert!(matches!(
            CircuitParams::new(20.0, 0.0, 0.0, 0.0, 0.0),
            Err(Error::Validation { .. })
        ));
        assert!(TruncationConfig::new(1, 1e-10).is_err());
        assert!(TruncationConfig::new(2, -1.0).is_err());
    }

    #[test]
    fn half_flux_is_legal() {
        let p = params64(20.0, 0.35, 0.1, 0.5, 0.5);
        let h = build_hamiltonian(&p, &TruncationConfig::default()).unwrap();
        // cos(π/2) kills the real part; the residual junction is d-scaled.
        let off = h.at(0, 1);
        assert!(off.re.abs() < 1e-12);
        assert!((off.im - 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_matrices_match_finite_differences_of_the_builder() {
        let t = TruncationConfig::new(3, 1e-10).unwrap();
        let p = params64(13.0, 0.4, 0.12, 0.21, 0.37);
        let h = 1e-6;

        let dng = charge_derivative_matrix(&p, &t);
        let hp = build_hamiltonian(&params64(13.0, 0.4, 0.12, 0.21 + h, 0.37), &t).unwrap();
        let hm = build_hamiltonian(&params64(13.0, 0.4, 0.12, 0.21 - h, 0.37), &t).unwrap();
        for i in 0..t.dimension() {
            for j in 0..t.dimension() {
                let fd = (hp.at(i, j) - hm.at(i, j)) / Complex::new(2.0 * h, 0.0);
                assert!((fd - dng.at(i, j)).norm() < 1e-6);
            }
        }

        let dphi = flux_derivative_matrix(&p, &t);
        let hp = build_hamiltonian(&params64(13.0, 0.4, 0.12, 0.21, 0.37 + h), &t).unwrap();
        let hm = build_hamiltonian(&params64(13.0, 0.4, 0.12, 0.21, 0.37 - h), &t).unwrap();
        for i in 0..t.dimension() {
            for j in 0..t.dimension() {
                let fd = (hp.at(i, j) - hm.at(i, j)) / Complex::new(2.0 * h, 0.0);
                assert!((fd - dphi.at(i, j)).norm() < 1e-6);
            }
        }

        let djunction = junction_matrix(&p, &t);
        let hp = build_hamiltonian(&params64(13.0 * (1.0 + h), 0.4, 0.12, 0.21, 0.37), &t).unwrap();
        let hm = build_hamiltonian(&params64(13.0 * (1.0 - h), 0.4, 0.12, 0.21, 0.37), &t).unwrap();
        for i in 0..t.dimension() {
            for j in 0..t.dimension() {
                let fd = (hp.at(i, j) - hm.at(i, j)) / Complex::new(2.0 * h, 0.0);
                assert!((fd - djunction.at(i, j)).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn hermitian_check_rejects_asymmetry() {
        let entries = vec![
            Complex::new(1.0, 0.0),
            Complex::new(0.5, 0.1),
            Complex::new(0.5, 0.1), // should be the conjugate
            Complex::new(2.0, 0.0),
        ];
        assert!(HermitianMatrix::new(2, entries).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hamiltonian_is_hermitian(
            ej in 0.0..60.0f64,
            ec in 0.05..2.0f64,
            d in 0.0..0.5f64,
            ng in -2.0..2.0f64,
            phi in -1.5..1.5f64,
            ncut in 2usize..12,
        ) {
            let p = params64(ej, ec, d, ng, phi);
            let t = TruncationConfig::new(ncut, 1e-10).unwrap();
            let h = build_hamiltonian(&p, &t).unwrap();
            // Round-trips the public constructor, which enforces Hermiticity.
            let dim = h.dimension();
            let entries: Vec<_> = (0..dim * dim)
                .map(|k| h.at(k / dim, k % dim))
                .collect();
            prop_assert!(HermitianMatrix::new(dim, entries).is_ok());
            prop_assert!(h.is_tridiagonal());
        }
    }
}
