//! Admissible test-function pairs (h, g) for the trace formula, and the
//! spectral parameters they are evaluated at.
//!
//! Convention, fixed crate-wide: h(r) = int g(u) e^{iru} du, so
//! g(u) = (1/2pi) int h(r) e^{-iru} dr. The Gaussian heat pair under this
//! convention reproduces the small-time heat-trace asymptotics; the wrong
//! convention misses by a factor of 2 pi.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate_line, QuadSpec};

/// Exact text of the Fourier convention, also emitted in CLI reports.
pub const FOURIER_CONVENTION: &str = "h(r)=\u{222b}g(u)e^{iru}du";

/// Whether the time-side function has compact support or merely rapid decay.
/// The distributional wave-trace reading wants compact support; the heat
/// family is admissible for the trace formula itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeSupport {
    Compact,
    RapidDecay,
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An even spectral test function h, its time-side transform g, and the
/// admissibility metadata needed to evaluate trace-formula terms.
#[derive(Clone)]
pub struct TestFunctionPair {
    h: RealFn,
    /// h on the imaginary axis: h_imag(s) = h(i s).
    h_imag: RealFn,
    g: RealFn,
    pub strip_half_width: f64,
    pub time_support: TimeSupport,
    pub description: String,
}

impl std::fmt::Debug for TestFunctionPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunctionPair")
            .field("strip_half_width", &self.strip_half_width)
            .field("time_support", &self.time_support)
            .field("description", &self.description)
            .finish()
    }
}

impl TestFunctionPair {
    pub fn new(
        h: RealFn,
        h_imag: RealFn,
        g: RealFn,
        strip_half_width: f64,
        time_support: TimeSupport,
        description: impl Into<String>,
    ) -> Self {
        TestFunctionPair {
            h,
            h_imag,
            g,
            strip_half_width,
            time_support,
            description: description.into(),
        }
    }

    pub fn h(&self, r: f64) -> f64 {
        (self.h)(r)
    }

    pub fn g(&self, u: f64) -> f64 {
        (self.g)(u)
    }

    /// h at a spectral parameter that may sit on the imaginary axis.
    pub fn h_complex(&self, r: Complex64) -> Result<f64> {
        if r.im.abs() > self.strip_half_width {
            return Err(Error::OutOfStrip {
                value: format!("{r}"),
                strip: self.strip_half_width,
            });
        }
        if r.im == 0.0 {
            Ok(self.h(r.re))
        } else if r.re == 0.0 {
            Ok((self.h_imag)(r.im))
        } else {
            Err(Error::InvalidSpectralParameter(format!("{r}")))
        }
    }

    /// Checks h(r) = h(-r) on a symmetric sample grid.
    pub fn verify_even(&self, tol: f64) -> bool {
        (0..=40).all(|i| {
            let r = 0.25 * f64::from(i);
            (self.h(r) - self.h(-r)).abs() <= tol
        })
    }

    /// Checks h(r) = int g(u) e^{iru} du by quadrature at r in {0, 1, 2}.
    pub fn verify_fourier_consistency(&self, tol: f64) -> Result<bool> {
        let spec = QuadSpec::with_tol(tol / 10.0);
        for r in [0.0, 1.0, 2.0] {
            let transform = integrate_line(|u| self.g(u) * (r * u).cos(), &spec)?;
            if (transform.value - self.h(r)).abs() > tol {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Heat family: h(r) = e^{-t r^2}, g(u) = (4 pi t)^{-1/2} e^{-u^2 / 4t}.
/// Entire in r, so any strip half-width is admissible; 1 covers every small
/// eigenvalue parameter.
pub fn gaussian_heat_pair(t: f64) -> TestFunctionPair {
    assert!(t > 0.0, "heat time must be positive");
    let norm = 1.0 / (4.0 * std::f64::consts::PI * t).sqrt();
    TestFunctionPair::new(
        Arc::new(move |r| (-t * r * r).exp()),
        Arc::new(move |s| (t * s * s).exp()),
        Arc::new(move |u| norm * (-u * u / (4.0 * t)).exp()),
        1.0,
        TimeSupport::RapidDecay,
        format!("gaussian heat pair, t = {t}"),
    )
}

/// Spectral parameters r_n with lambda_n^2 = r_n^2 + 1/4: real and
/// nonnegative, or purely imaginary with |Im| <= 1/2 for the small
/// eigenvalues (r_0 = i/2 encodes the constant eigenfunction).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralParameters {
    values: Vec<Complex64>,
}

impl SpectralParameters {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        for r in &values {
            let real_ok = r.im == 0.0 && r.re >= 0.0;
            let imag_ok = r.re == 0.0 && r.im.abs() <= 0.5;
            if !(real_ok || imag_ok) {
                return Err(Error::InvalidSpectralParameter(format!("{r}")));
            }
        }
        Ok(SpectralParameters { values })
    }

    /// Parameters including the constant eigenfunction (lambda_0 = 0).
    pub fn with_zero_mode(mut real_values: Vec<f64>) -> Result<Self> {
        let mut values = vec![Complex64::new(0.0, 0.5)];
        real_values.drain(..).for_each(|r| {
            values.push(Complex64::new(r, 0.0));
        });
        SpectralParameters::new(values)
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }
}
