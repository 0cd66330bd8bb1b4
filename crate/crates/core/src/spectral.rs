//! Diagonalization wrappers: transition energies, anharmonicity, basis
//! convergence, and charge dispersion.

use crate::circuit::{build_hamiltonian, CircuitParams, HermitianMatrix, TruncationConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::scalar::{fp, Scalar};

/// Low-lying spectrum of one Hamiltonian.
///
/// `energies` holds the requested number of levels in ascending order;
/// higher levels are computed internally but not exposed.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult<F> {
    /// Ascending eigenvalues, GHz.
    pub energies: Vec<F>,
    /// energies[1] − energies[0], GHz.
    pub e01: F,
    /// energies[2] − energies[1], GHz.
    pub e12: F,
    /// e12 − e01, GHz (negative in the transmon regime).
    pub anharmonicity: F,
}

/// Peak-to-peak charge dispersion of the 0→1 transition over half an ng
/// period, with the refined maximum slope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionResult<F> {
    /// max over ng of E01 minus min over ng of E01, GHz.
    pub epsilon01: F,
    /// max over ng of |∂E01/∂ng|, GHz per unit ng.
    pub max_slope: F,
    /// The ng achieving `max_slope`, in [0, 0.5].
    pub argmax_ng: F,
}

/// Relative width target of the golden-section refinements, scaled by the
/// half-period being searched.
const REFINE_REL_TOL: f64 = 1e-4;

/// Eigen-decomposes a Hermitian matrix and reports the lowest `n_levels`
/// levels plus the derived transition energies. Deterministic: identical
/// input bits give identical output bits.
pub fn eigen_spectrum<F: Scalar>(
    h: &HermitianMatrix<F>,
    n_levels: usize,
) -> Result<SpectrumResult<F>> {
    if n_levels < 3 {
        return Err(Error::validation("n_levels", "must be at least 3"));
    }
    if n_levels > h.dimension() {
        return Err(Error::validation(
            "n_levels",
            format!("must not exceed the matrix dimension {}", h.dimension()),
        ));
    }
    let mut energies = linalg::eigen_all(h, n_levels)?;
    energies.truncate(n_levels);
    for w in energies.windows(2) {
        match w[1].partial_cmp(&w[0]) {
            Some(std::cmp::Ordering::Less) | None => {
                return Err(Error::SolverFailure {
                    level: 0,
                    iterations: 0,
                })
            }
            _ => {}
        }
    }
    let e01 = energies[1] - energies[0];
    let e12 = energies[2] - energies[1];
    Ok(SpectrumResult {
        e01,
        e12,
        anharmonicity: e12 - e01,
        energies,
    })
}

/// E01 at a fixed, already-validated truncation. The finite-difference and
/// scan paths call this so every sample shares one basis size.
pub(crate) fn e01_fixed<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
) -> Result<F> {
    let h = build_hamiltonian(params, trunc)?;
    Ok(eigen_spectrum(&h, 3)?.e01)
}

/// Escalates ncut in steps of 5 until E01 moves by less than the configured
/// tolerance, returning the first converged window. Gives up after 10
/// escalations.
pub fn converge_ncut<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
) -> Result<usize> {
    params.validate()?;
    trunc.validate()?;
    let tol = trunc.convergence_tol_ghz;
    let mut current = e01_fixed(params, &trunc.with_ncut(trunc.ncut))?;
    let mut last_pair = (current, current);
    for step in 0..10usize {
        let ncut = trunc.ncut + 5 * step;
        let next = e01_fixed(params, &trunc.with_ncut(ncut + 5))?;
        last_pair = (current, next);
        if (next - current).abs() < tol {
            return Ok(ncut);
        }
        current = next;
    }
    Err(Error::NoConvergence {
        e01_prev: last_pair.0.to_f64().unwrap_or(f64::NAN),
        e01_last: last_pair.1.to_f64().unwrap_or(f64::NAN),
        tol: tol.to_f64().unwrap_or(f64::NAN),
    })
}

/// Transition energy E_ij = energies[j] − energies[i] at a converged window.
pub fn transition_energy<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
    i: usize,
    j: usize,
) -> Result<F> {
    if i >= j {
        return Err(Error::validation("levels", "must satisfy i < j"));
    }
    if j > 2 {
        return Err(Error::validation("levels", "must satisfy j <= 2"));
    }
    let ncut = converge_ncut(params, trunc)?;
    let h = build_hamiltonian(params, &trunc.with_ncut(ncut))?;
    let spectrum = eigen_spectrum(&h, 3)?;
    Ok(spectrum.energies[j] - spectrum.energies[i])
}

/// Maximizes `f` on [a, b] by golden-section search, seeded with the best of
/// the bracket edges. Returns (argmax, max).
pub(crate) fn golden_max<F: Scalar>(
    mut f: impl FnMut(F) -> Result<F>,
    a: F,
    b: F,
    width_tol: F,
) -> Result<(F, F)> {
    let inv_phi = fp::<F>(0.618_033_988_749_894_8);
    let mut lo = a;
    let mut hi = b;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = (x1, f1);
    if f2 > best.1 {
        best = (x2, f2);
    }
    while hi - lo > width_tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2)?;
            if f2 > best.1 {
                best = (x2, f2);
            }
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1)?;
            if f1 > best.1 {
                best = (x1, f1);
            }
        }
    }
    Ok(best)
}

/// Scans E01 over ng ∈ [0, 0.5] (E01 is 1-periodic and even in ng, so the
/// half-interval suffices), recording the peak-to-peak dispersion and the
/// refined maximum |∂E01/∂ng|.
///
/// The slope objective is a central difference with step equal to half the
/// grid spacing: its relative bias (2πh)²/6 stays below the 1e−4 refinement
/// tolerance at the default 101 points, and its noise floor ~eps·|E|/h is
/// orders below the smallest dispersions swept here. The grid maximum seeds
/// a golden-section refinement.
pub fn charge_dispersion<F: Scalar>(
    params: &CircuitParams<F>,
    trunc: &TruncationConfig<F>,
    grid_points: usize,
) -> Result<DispersionResult<F>> {
    if grid_points < 21 {
        return Err(Error::validation("grid_points", "must be at least 21"));
    }
    params.validate()?;
    trunc.validate()?;
    let ncut = converge_ncut(params, trunc)?;
    let fixed = trunc.with_ncut(ncut);
    let half = fp::<F>(0.5);
    let step = half / fp::<F>((grid_points - 1) as f64);
    let h_scan = step * half;

    let e01_at = |ng: F| -> Result<F> {
        let mut p = *params;
        p.ng = ng;
        e01_fixed(&p, &fixed)
    };
    let slope_at = |ng: F| -> Result<F> {
        let mut p_plus = *params;
        p_plus.ng = ng + h_scan;
        let mut p_minus = *params;
        p_minus.ng = ng - h_scan;
        let plus = e01_fixed(&p_plus, &fixed)?;
        let minus = e01_fixed(&p_minus, &fixed)?;
        Ok(((plus - minus) / (h_scan + h_scan)).abs())
    };

    let mut energies = Vec::with_capacity(grid_points);
    for i in 0..grid_points {
        let ng = step * fp::<F>(i as f64);
        energies.push(e01_at(ng)?);
    }
    let mut e_min = energies[0];
    let mut e_max = energies[0];
    for &e in &energies[1..] {
        e_min = e_min.min(e);
        e_max = e_max.max(e);
    }

    // Grid maximum of central differences, then golden-section refinement.
    let mut grid_best = (F::zero(), F::zero());
    for i in 1..grid_points - 1 {
        let slope = ((energies[i + 1] - energies[i - 1]) / (step + step)).abs();
        if slope > grid_best.1 {
            grid_best = (step * fp::<F>(i as f64), slope);
        }
    }
    let lo = (grid_best.0 - step).max(F::zero());
    let hi = (grid_best.0 + step).min(half);
    let width_tol = fp::<F>(REFINE_REL_TOL) * half;
    let (mut argmax, mut max_slope) = golden_max(slope_at, lo, hi, width_tol)?;
    if grid_best.1 > max_slope {
        argmax = grid_best.0;
        max_slope = grid_best.1;
    }

    Ok(DispersionResult {
        epsilon01: e_max - e_min,
        max_slope,
        argmax_ng: argmax.max(F::zero()).min(half),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params64(ej_sum: f64, ec: f64, d: f64, ng: f64, phi_ext: f64) -> CircuitParams<f64> {
        CircuitParams::new(ej_sum, ec, d, ng, phi_ext).unwrap()
    }

    fn trunc64() -> TruncationConfig<f64> {
        TruncationConfig::default()
    }

    #[test]
    fn charge_limit_is_analytic() {
        // EJ = 0: diagonal matrix, E01 = 4·Ec·(1 − 2·ng).
        let p = params64(0.0, 0.35, 0.0, 0.25, 0.0);
        let h = build_hamiltonian(&p, &TruncationConfig::new(4, 1e-10).unwrap()).unwrap();
        let s = eigen_spectrum(&h, 3).unwrap();
        assert!((s.e01 - 0.7).abs() < 1e-14);
    }

    #[test]
    fn charge_limit_degenerate_first_level() {
        // EJ = 0, ng = 0: n = ±1 are degenerate at 4·Ec.
        let p = params64(0.0, 0.35, 0.0, 0.0, 0.0);
        let e = transition_energy(&p, &trunc64(), 0, 1).unwrap();
        assert!((e - 1.4).abs() < 1e-14);
    }

    #[test]
    fn working_point_matches_transmon_asymptotics() {
        let p = params64(20.0, 0.35, 0.0, 0.5, 0.0);
        let h = build_hamiltonian(&p, &trunc64()).unwrap();
        let s = eigen_spectrum(&h, 3).unwrap();
        let asym = (8.0f64 * 20.0 * 0.35).sqrt() - 0.35;
        assert!((s.e01 - asym).abs() / asym < 0.015, "e01 = {}", s.e01);
        assert!(
            (s.anharmonicity + 0.35).abs() / 0.35 < 0.15,
            "alpha = {}",
            s.anharmonicity
        );
        // Frozen from the independent diagonalization.
        assert!((s.e01 - 7.114501147995).abs() < 1e-8);
        assert!((s.e12 - 6.717014951453).abs() < 1e-8);
    }

    #[test]
    fn transition_energy_equals_spectrum_difference() {
        let p = params64(20.0, 0.35, 0.0, 0.5, 0.0);
        let e01 = transition_energy(&p, &trunc64(), 0, 1).unwrap();
        let h = build_hamiltonian(&p, &trunc64()).unwrap();
        let s = eigen_spectrum(&h, 3).unwrap();
        assert_eq!(e01, s.e01);
        let e12 = transition_energy(&p, &trunc64(), 1, 2).unwrap();
        assert_eq!(e12, s.e12);
    }

    #[test]
    fn flux_maps_onto_effective_josephson_energy() {
        // cos(π/3) = 1/2: spectrum at (20 GHz, φ = 1/3) matches (10 GHz, φ = 0).
        let a = transition_energy(&params64(20.0, 0.35, 0.0, 0.5, 1.0 / 3.0), &trunc64(), 0, 1)
            .unwrap();
        let b = transition_energy(&params64(10.0, 0.35, 0.0, 0.5, 0.0), &trunc64(), 0, 1).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn converge_ncut_defaults() {
        let p = params64(20.0, 0.35, 0.0, 0.5, 0.0);
        assert_eq!(converge_ncut(&p, &trunc64()).unwrap(), 30);
        // Diagonal matrix is exact at any window.
        let p0 = params64(0.0, 0.35, 0.0, 0.25, 0.0);
        assert_eq!(converge_ncut(&p0, &trunc64()).unwrap(), 30);
    }

    #[test]
    fn converge_ncut_zero_tolerance_fails() {
        let p = params64(20.0, 0.35, 0.0, 0.5, 0.0);
        let t = TruncationConfig::new(30, 0.0).unwrap();
        match converge_ncut(&p, &t) {
            Err(Error::NoConvergence {
                e01_prev, e01_last, ..
            }) => {
                assert!(e01_prev.is_finite() && e01_last.is_finite());
            }
            other => panic!("expected NoConvergence, got {other:?}"),
        }
    }

    #[test]
    fn truncation_stability_after_convergence() {
        let p = params64(20.0, 0.35, 0.0, 0.5, 0.0);
        let ncut = converge_ncut(&p, &trunc64()).unwrap();
        let a = e01_fixed(&p, &trunc64().with_ncut(ncut)).unwrap();
        let b = e01_fixed(&p, &trunc64().with_ncut(ncut + 5)).unwrap();
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn dispersion_in_the_charge_limit() {
        // EJ = 0: E01(ng) = 4·Ec·(1 − 2·ng) spans 0 → 1.4 GHz over the scan.
        let p = params64(0.0, 0.35, 0.0, 0.5, 0.0);
        let d = charge_dispersion(&p, &trunc64(), 101).unwrap();
        assert!((d.epsilon01 - 1.4).abs() < 1e-12, "eps01 = {}", d.epsilon01);
        // Constant interior slope 8·Ec; location is immaterial.
        assert!((d.max_slope - 2.8).abs() < 1e-9, "slope = {}", d.max_slope);
    }

    #[test]
    fn dispersion_at_the_working_point() {
        // Frozen from the independent scan: eps01 ≈ 4.1705e−6 GHz with the
        // refined maximum slope ≈ 1.3103e−5 GHz near ng = 1/4.
        let p = params64(20.0, 0.35, 0.1, 0.5, 0.0);
        let d = charge_dispersion(&p, &trunc64(), 101).unwrap();
        assert!(
            (d.epsilon01 - 4.17047849e-6).abs() / 4.17047849e-6 < 1e-3,
            "eps01 = {}",
            d.epsilon01
        );
        assert!(
            (d.max_slope - 1.310306e-5).abs() / 1.310306e-5 < 1e-2,
            "slope = {}",
            d.max_slope
        );
        assert!(d.argmax_ng > 0.0 && d.argmax_ng < 0.5);
        assert!(
            (d.argmax_ng - 0.25).abs() < 0.02,
            "argmax = {}",
            d.argmax_ng
        );
    }

    #[test]
    fn dispersion_shrinks_with_ratio() {
        let ec = 0.35;
        let d20 =
            charge_dispersion(&params64(20.0 * ec, ec, 0.0, 0.5, 0.0), &trunc64(), 41).unwrap();
        let d60 =
            charge_dispersion(&params64(60.0 * ec, ec, 0.0, 0.5, 0.0), &trunc64(), 41).unwrap();
        assert!(d60.epsilon01 < d20.epsilon01);
    }

    #[test]
    fn dispersion_regression_is_log_linear() {
        // log(eps01) against sqrt(EJΣ/Ec) over ratios 20..100: affine with
        // R² > 0.99 and a negative slope.
        let ec = 0.35;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for k in 0..9 {
            let ratio = 20.0 + 10.0 * k as f64;
            let d = charge_dispersion(&params64(ratio * ec, ec, 0.0, 0.5, 0.0), &trunc64(), 41)
                .unwrap();
            xs.push(ratio.sqrt());
            ys.push(d.epsilon01.ln());
        }
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let slope = sxy / sxx;
        let ss_res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let fit = my + slope * (x - mx);
                (y - fit) * (y - fit)
            })
            .sum();
        let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let r2 = 1.0 - ss_res / ss_tot;
        assert!(slope < 0.0, "slope = {slope}");
        assert!(r2 > 0.99, "R² = {r2}");
    }

    #[test]
    fn rejects_bad_level_requests() {
        let p = params64(20.0, 0.35, 0.0, 0.5, 0.0);
        assert!(transition_energy(&p, &trunc64(), 1, 1).is_err());
        assert!(transition_energy(&p, &trunc64(), 0, 3).is_err());
        let h = build_hamiltonian(&p, &trunc64()).unwrap();
        assert!(eigen_spectrum(&h, 2).is_err());
        assert!(eigen_spectrum(&h, 62).is_err());
    }

    #[test]
    fn anharmonicity_negative_in_transmon_regime() {
        for ratio in [10.0, 30.0, 60.0, 100.0] {
            let p = params64(ratio * 0.35, 0.35, 0.0, 0.5, 0.0);
            let h = build_hamiltonian(&p, &trunc64()).unwrap();
            let s = eigen_spectrum(&h, 3).unwrap();
            assert!(
                s.anharmonicity < 0.0,
                "ratio {ratio}: alpha = {}",
                s.anharmonicity
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn energies_sorted_and_finite(
            ej in 0.0..60.0f64,
            ec in 0.1..1.0f64,
            d in 0.0..0.3f64,
            ng in -1.0..1.0f64,
            phi in -1.0..1.0f64,
        ) {
            let p = params64(ej, ec, d, ng, phi);
            let h = build_hamiltonian(&p, &TruncationConfig::new(12, 1e-10).unwrap()).unwrap();
            let s = eigen_spectrum(&h, 3).unwrap();
            prop_assert!(s.energies.iter().all(|x| x.is_finite()));
            prop_assert!(s.energies[1] >= s.energies[0]);
            prop_assert!(s.energies[2] >= s.energies[1]);
            prop_assert!(s.e01 >= 0.0);
            prop_assert!(s.anharmonicity == s.e12 - s.e01);
        }

        #[test]
        fn gauge_periodic_in_flux(
            ej in 1.0..40.0f64,
            ec in 0.1..1.0f64,
            d in 0.0..0.2f64,
            ng in -0.5..0.5f64,
            phi in -0.5..0.5f64,
        ) {
            // Full eigenvalue multiset at φ and φ+1 agrees to 1e−9: the
            // diag((−1)^n) gauge absorbs the junction sign flip.
            let t = TruncationConfig::new(8, 1e-10).unwrap();
            let h0 = build_hamiltonian(&params64(ej, ec, d, ng, phi), &t).unwrap();
            let h1 = build_hamiltonian(&params64(ej, ec, d, ng, phi + 1.0), &t).unwrap();
            let a = eigen_spectrum(&h0, t.dimension()).unwrap().energies;
            let b = eigen_spectrum(&h1, t.dimension()).unwrap().energies;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }

        #[test]
        fn spectrum_reflects_in_ng(
            ej in 1.0..40.0f64,
            ec in 0.1..1.0f64,
            d in 0.0..0.3f64,
            ng in 0.01..0.99f64,
            phi in -0.5..0.5f64,
        ) {
            // Complex-conjugation symmetry: bitwise equal thanks to the
            // reflection-canonical tridiagonal orientation.
            let t = TruncationConfig::new(8, 1e-10).unwrap();
            let hp = build_hamiltonian(&params64(ej, ec, d, ng, phi), &t).unwrap();
            let hm = build_hamiltonian(&params64(ej, ec, d, -ng, phi), &t).unwrap();
            let a = eigen_spectrum(&hp, 3).unwrap().energies;
            let b = eigen_spectrum(&hm, 3).unwrap().energies;
            for (x, y) in a.iter().zip(&b) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }

        #[test]
        fn flux_equivalent_to_scaled_josephson_energy(
            ej in 1.0..40.0f64,
            ec in 0.1..1.0f64,
            ng in -0.5..0.5f64,
            phi in -0.45..0.45f64,
        ) {
            // d = 0: spectrum at (EJΣ, φ) equals spectrum at (EJΣ·|cos πφ|, 0).
            let t = TruncationConfig::new(10, 1e-10).unwrap();
            let scaled = ej * (std::f64::consts::PI * phi).cos().abs();
            let ha = build_hamiltonian(&params64(ej, ec, 0.0, ng, phi), &t).unwrap();
            let hb = build_hamiltonian(&params64(scaled, ec, 0.0, ng, 0.0), &t).unwrap();
            let a = eigen_spectrum(&ha, 3).unwrap().energies;
            let b = eigen_spectrum(&hb, 3).unwrap().energies;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-9, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn ng_periodic_at_converged_window() {
        // Interior levels at ng and ng+1 agree within the convergence
        // tolerance once the window is converged.
        let t = trunc64();
        let pa = params64(20.0, 0.35, 0.1, 0.3, 0.2);
        let pb = params64(20.0, 0.35, 0.1, 1.3, 0.2);
        let ha = build_hamiltonian(&pa, &t).unwrap();
        let hb = build_hamiltonian(&pb, &t).unwrap();
        let a = eigen_spectrum(&ha, 3).unwrap().energies;
        let b = eigen_spectrum(&hb, 3).unwrap().energies;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn f32_smoke() {
        let p = CircuitParams::<f32>::new(20.0, 0.35, 0.0, 0.5, 0.0).unwrap();
        let t = TruncationConfig::<f32>::new(30, 1e-4).unwrap();
        let h = build_hamiltonian(&p, &t).unwrap();
        let s = eigen_spectrum(&h, 3).unwrap();
        assert!((s.e01 - 7.1145).abs() < 0.05, "f32 e01 = {}", s.e01);
    }
}
