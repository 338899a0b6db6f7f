//! The trace formula, term by term: identity, hyperbolic, and elliptic
//! contributions of the geometric side, and the spectral side as a partial
//! sum over supplied spectral parameters.

use std::f64::consts::PI;

use crate::enumeration::EnumerationOptions;
use crate::error::{Error, Result};
use crate::orbifold::HyperbolicStructure;
use crate::quad::{integrate, integrate_line, QuadSpec};
use crate::spectrum::{length_spectrum, LengthSpectrum};
use crate::testfn::{SpectralParameters, TestFunctionPair};

/// Compensated (Kahan) sum in the given order.
pub fn kahan_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for term in terms {
        let y = term - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// (area / 4 pi) * int r h(r) tanh(pi r) dr.
pub fn identity_term(area: f64, pair: &TestFunctionPair, quad: &QuadSpec) -> Result<f64> {
    if area == 0.0 {
        return Ok(0.0);
    }
    let result = integrate_line(|r| r * pair.h(r) * (PI * r).tanh(), quad)?;
    Ok(area / (4.0 * PI) * result.value)
}

/// Sum over oriented primitive classes and iterates k = 1..k_max of
/// multiplicity * l_c * g(k l_c) / (2 sinh(k l_c / 2)), together with a bound
/// on the dropped k > k_max terms.
pub fn hyperbolic_term(
    spectrum: &LengthSpectrum,
    k_max: u32,
    pair: &TestFunctionPair,
) -> (f64, f64) {
    assert!(k_max >= 1);
    let terms = spectrum.entries.iter().flat_map(|entry| {
        (1..=k_max).map(move |k| {
            let kl = f64::from(k) * entry.length;
            f64::from(entry.multiplicity) * entry.length * pair.g(kl) / (2.0 * (0.5 * kl).sinh())
        })
    });
    let value = kahan_sum(terms);

    // Terms decay at least geometrically in k through sinh(k l / 2), so twice
    // the first dropped term per class bounds each dropped train.
    let k_tail = 2.0
        * kahan_sum(spectrum.entries.iter().map(|entry| {
            let kl = f64::from(k_max + 1) * entry.length;
            (f64::from(entry.multiplicity) * entry.length * pair.g(kl) / (2.0 * (0.5 * kl).sinh()))
                .abs()
        }));
    (value, k_tail)
}

/// Elliptic kernel e^{-2 theta r} / (1 + e^{-2 pi r}), rewritten for r < 0 so
/// every exponent stays nonpositive.
fn elliptic_kernel(theta: f64, r: f64) -> f64 {
    if r >= 0.0 {
        (-2.0 * theta * r).exp() / (1.0 + (-2.0 * PI * r).exp())
    } else {
        ((2.0 * PI - 2.0 * theta) * r).exp() / (1.0 + (2.0 * PI * r).exp())
    }
}

/// Sum over cone points of order m and l = 1..m-1 of
/// [1 / (2 m sin(pi l / m))] * int e^{-2 theta r} / (1 + e^{-2 pi r}) h(r) dr
/// with theta = pi l / m.
pub fn elliptic_term(cone_orders: &[u32], pair: &TestFunctionPair, quad: &QuadSpec) -> Result<f64> {
    let mut terms = Vec::new();
    for &m in cone_orders {
        for l in 1..m {
            let theta = PI * f64::from(l) / f64::from(m);
            let integral = integrate_line(|r| elliptic_kernel(theta, r) * pair.h(r), quad)?;
            terms.push(integral.value / (2.0 * f64::from(m) * theta.sin()));
        }
    }
    Ok(kahan_sum(terms))
}

/// Truncation and quadrature error accounting for one geometric-side
/// evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ErrorBudget {
    pub quadrature: f64,
    /// Bound on the dropped iterates k > k_max.
    pub k_tail: f64,
    /// Estimate of the primitives beyond the certified completeness bound,
    /// from the e^L / L growth of the length census.
    pub length_tail: f64,
}

impl ErrorBudget {
    pub fn total(&self) -> f64 {
        self.quadrature + self.k_tail + self.length_tail
    }
}

/// All three geometric terms of one trace-formula evaluation.
#[derive(Debug, Clone, Copy)]
pub struct GeometricSideReport {
    pub identity: f64,
    pub hyperbolic: f64,
    pub elliptic: f64,
    pub total: f64,
    pub error_budget: ErrorBudget,
}

/// Geometric data a trace-formula evaluation consumes: area, an enumerated
/// length spectrum, and the cone orders.
#[derive(Debug, Clone)]
pub struct GeometricInputs {
    pub area: f64,
    pub spectrum: LengthSpectrum,
    pub cone_orders: Vec<u32>,
}

impl GeometricInputs {
    /// Enumerates the structure's group to fill the spectrum. The cone orders
    /// come from the signature.
    pub fn from_structure(
        structure: &HyperbolicStructure,
        l_max: f64,
        depth: usize,
        options: &EnumerationOptions,
    ) -> Result<Self> {
        let generators = structure.generators.as_ref().ok_or_else(|| {
            Error::InvalidInput("structure carries no generators to enumerate".into())
        })?;
        let presentation = crate::enumeration::GroupPresentation::new(generators)?;
        let spectrum = length_spectrum(&presentation, l_max, depth, options)?;
        Ok(GeometricInputs {
            area: structure.area,
            spectrum,
            cone_orders: structure.signature.cone_orders.clone(),
        })
    }
}

/// identity + hyperbolic + elliptic, with the combined error budget.
pub fn geometric_side(
    inputs: &GeometricInputs,
    pair: &TestFunctionPair,
    k_max: u32,
    quad: &QuadSpec,
) -> Result<GeometricSideReport> {
    let identity = identity_term(inputs.area, pair, quad)?;
    let (hyperbolic, k_tail) = hyperbolic_term(&inputs.spectrum, k_max, pair);
    let elliptic = elliptic_term(&inputs.cone_orders, pair, quad)?;

    // Primitives beyond the certified bound: the length census grows like
    // e^L / L and each primitive contributes ~ L g(L) e^{-L/2}, so the
    // integrand below over-counts by design.
    let bound = if inputs.spectrum.entries.is_empty() {
        0.0f64.max(inputs.spectrum.completeness_bound)
    } else {
        inputs.spectrum.completeness_bound
    };
    let length_tail = if bound > 0.0 {
        2.0 * integrate(|s| (0.5 * s).exp() * pair.g(s).abs(), bound, bound + 80.0, quad)?
            .value
    } else {
        f64::INFINITY
    };

    let total = kahan_sum([identity, hyperbolic, elliptic]);
    Ok(GeometricSideReport {
        identity,
        hyperbolic,
        elliptic,
        total,
        error_budget: ErrorBudget {
            quadrature: 3.0 * quad.tol,
            k_tail,
            length_tail,
        },
    })
}

/// Partial sum of h over the supplied spectral parameters.
pub fn spectral_side(params: &SpectralParameters, pair: &TestFunctionPair) -> Result<f64> {
    let mut terms = Vec::with_capacity(params.values().len());
    for r in params.values() {
        terms.push(pair.h_complex(*r)?);
    }
    Ok(kahan_sum(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::SpectrumEntry;
    use crate::testfn::gaussian_heat_pair;
    use num_complex::Complex64;

    fn single_length_spectrum(length: f64, multiplicity: u32) -> LengthSpectrum {
        LengthSpectrum {
            entries: vec![SpectrumEntry {
                length,
                multiplicity,
                word: None,
            }],
            completeness_bound: length + 1.0,
        }
    }

    #[test]
    fn identity_term_vanishes_without_area() {
        let pair = gaussian_heat_pair(1.0);
        let value = identity_term(0.0, &pair, &QuadSpec::default()).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn identity_term_matches_small_time_weyl_law() {
        // For t -> 0, tanh(pi r) -> sign(r) and the integral tends to
        // area / (4 pi t); at t = 1e-3 the ratio is within 2 percent.
        let pair = gaussian_heat_pair(1e-3);
        for area in [PI / 21.0, 4.0 * PI] {
            let term = identity_term(area, &pair, &QuadSpec::default()).unwrap();
            let ratio = term * 4.0 * PI * 1e-3 / area;
            assert!((ratio - 1.0).abs() < 0.02, "area {area}: ratio {ratio}");
        }
    }

    #[test]
    fn identity_term_is_symmetric_in_h() {
        // Recomputing with h(-.) relabeled changes nothing.
        let pair = gaussian_heat_pair(0.7);
        let quad = QuadSpec::default();
        let direct = identity_term(1.0, &pair, &quad).unwrap();
        let reflected = integrate_line(|r| {
            let s = -r;
            s * pair.h(s) * (PI * s).tanh()
        }, &quad)
        .unwrap()
        .value
            / (4.0 * PI);
        assert!((direct - reflected).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_single_term_closed_form() {
        let pair = gaussian_heat_pair(1.0);
        let spectrum = single_length_spectrum(1.0, 1);
        let (value, _) = hyperbolic_term(&spectrum, 1, &pair);
        let expected = pair.g(1.0) / (2.0 * 0.5f64.sinh());
        assert!((value - expected).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_term_is_linear_in_multiplicity() {
        let pair = gaussian_heat_pair(0.5);
        let single = single_length_spectrum(1.3, 1);
        let double = single_length_spectrum(1.3, 2);
        let (v1, _) = hyperbolic_term(&single, 8, &pair);
        let (v2, _) = hyperbolic_term(&double, 8, &pair);
        assert!((v2 - 2.0 * v1).abs() < 1e-15);
    }

    #[test]
    fn hyperbolic_term_empty_spectrum_is_zero() {
        let pair = gaussian_heat_pair(1.0);
        let empty = LengthSpectrum {
            entries: vec![],
            completeness_bound: 2.0,
        };
        assert_eq!(hyperbolic_term(&empty, 5, &pair).0, 0.0);
    }

    #[test]
    fn elliptic_term_empty_and_additive() {
        let pair = gaussian_heat_pair(1.0);
        let quad = QuadSpec::default();
        assert_eq!(elliptic_term(&[], &pair, &quad).unwrap(), 0.0);
        let parts: f64 = [2u32, 3, 7]
            .iter()
            .map(|&m| elliptic_term(&[m], &pair, &quad).unwrap())
            .sum();
        let together = elliptic_term(&[2, 3, 7], &pair, &quad).unwrap();
        assert!((together - parts).abs() < 1e-12);
    }

    #[test]
    fn elliptic_term_agrees_across_resolutions() {
        let pair = gaussian_heat_pair(1.0);
        let coarse = elliptic_term(&[2], &pair, &QuadSpec::with_tol(1e-8)).unwrap();
        let fine = elliptic_term(&[2], &pair, &QuadSpec::with_tol(1e-12)).unwrap();
        assert!((coarse - fine).abs() < 1e-10);
    }

    #[test]
    fn elliptic_term_equals_psi_pairing() {
        // Since h is even, summing the kernel over l and its mirror folds
        // the elliptic term into int h(r) psi_m(r) dr: an independent route
        // through the cone-point basis.
        let pair = gaussian_heat_pair(0.7);
        let quad = QuadSpec::with_tol(1e-12);
        for m in [2u32, 3, 7] {
            let direct = elliptic_term(&[m], &pair, &quad).unwrap();
            let paired = integrate_line(|r| pair.h(r) * crate::psi::psi_value(m, r), &quad)
                .unwrap()
                .value;
            assert!((direct - paired).abs() < 1e-11, "m = {m}: {direct} vs {paired}");
        }
    }

    #[test]
    fn spectral_side_examples() {
        let pair = gaussian_heat_pair(0.8);
        let empty = SpectralParameters::new(vec![]).unwrap();
        assert_eq!(spectral_side(&empty, &pair).unwrap(), 0.0);

        let zero_mode = SpectralParameters::new(vec![Complex64::new(0.0, 0.5)]).unwrap();
        let value = spectral_side(&zero_mode, &pair).unwrap();
        assert!((value - 0.2f64.exp()).abs() < 1e-12);

        let three = SpectralParameters::new(vec![
            Complex64::new(0.0, 0.5),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        let value = spectral_side(&three, &pair).unwrap();
        let expected = 0.2f64.exp() + 2.0 * (-0.8f64).exp();
        assert!((value - expected).abs() < 1e-12);
    }

    #[test]
    fn torsion_free_geometric_side_has_zero_elliptic_part() {
        let pair = gaussian_heat_pair(1.0);
        let inputs = GeometricInputs {
            area: 4.0 * PI,
            spectrum: single_length_spectrum(3.0, 2),
            cone_orders: vec![],
        };
        let report = geometric_side(&inputs, &pair, 5, &QuadSpec::default()).unwrap();
        assert_eq!(report.elliptic, 0.0);
        assert!((report.total - report.identity - report.hyperbolic).abs() < 1e-15);
    }

    #[test]
    fn geometric_side_dominates_zero_mode_for_237() {
        // The spectral side contains h(i/2) = e^{t/4} from lambda_0 = 0, and
        // every further term is positive for the Gaussian pair.
        let structure = HyperbolicStructure::triangle(2, 3, 7).unwrap();
        for t in [0.5, 1.0] {
            let pair = gaussian_heat_pair(t);
            let inputs = GeometricInputs::from_structure(
                &structure,
                4.0,
                12,
                &EnumerationOptions::default(),
            )
            .unwrap();
            let report = geometric_side(&inputs, &pair, 12, &QuadSpec::default()).unwrap();
            let zero_mode = (t / 4.0).exp();
            assert!(
                report.total >= zero_mode - report.error_budget.total(),
                "t = {t}: total {} vs zero mode {zero_mode} - budget {}",
                report.total,
                report.error_budget.total()
            );
        }
    }

    #[test]
    fn longer_spectrum_changes_value_within_tail_bound() {
        let structure = HyperbolicStructure::triangle(2, 3, 7).unwrap();
        let pair = gaussian_heat_pair(1.0);
        let quad = QuadSpec::default();
        let short =
            GeometricInputs::from_structure(&structure, 4.0, 14, &EnumerationOptions::default())
                .unwrap();
        let long =
            GeometricInputs::from_structure(&structure, 5.0, 14, &EnumerationOptions::default())
                .unwrap();
        let report_short = geometric_side(&short, &pair, 12, &quad).unwrap();
        let report_long = geometric_side(&long, &pair, 12, &quad).unwrap();
        assert!(
            (report_long.total - report_short.total).abs()
                <= report_short.error_budget.total(),
            "difference {} vs budget {}",
            (report_long.total - report_short.total).abs(),
            report_short.error_budget.total()
        );
    }
}
