//! Adaptive Gauss-Kronrod quadrature for smooth integrands with exponential
//! decay, plus window-doubling helpers for integrals over the whole line.

use crate::error::{Error, Result};

/// Tolerance and subdivision budget for one integral evaluation.
#[derive(Debug, Clone, Copy)]
pub struct QuadSpec {
    pub tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            tol: 1e-10,
            max_subdivisions: 2000,
        }
    }
}

impl QuadSpec {
    pub fn with_tol(tol: f64) -> Self {
        QuadSpec {
            tol,
            ..QuadSpec::default()
        }
    }
}

/// Value and error estimate of one evaluated integral.
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
}

// 15-point Kronrod nodes and weights with the embedded 7-point Gauss rule.
#[allow(clippy::excessive_precision)]
const XGK15: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];
#[allow(clippy::excessive_precision)]
const WG7: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
#[allow(clippy::excessive_precision)]
const WGK15: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// One 15-point Kronrod panel; returns (kronrod, |kronrod - gauss|).
fn panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut kronrod = f_center * WGK15[7];
    let mut gauss = f_center * WG7[3];
    for j in 0..7 {
        let x = half * XGK15[j];
        let pair = f(center - x) + f(center + x);
        kronrod += WGK15[j] * pair;
        if j % 2 == 1 {
            gauss += WG7[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive integral of `f` over the finite interval [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadSpec) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
        });
    }
    let (value, err) = panel(&f, a, b);
    let mut intervals = vec![(a, b, value, err)];

    for _ in 0..spec.max_subdivisions {
        let total_err: f64 = intervals.iter().map(|i| i.3).sum();
        if total_err <= spec.tol {
            break;
        }
        // Split the interval with the largest error estimate.
        let worst = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("nonempty interval list");
        let (ia, ib, _, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (ia + ib);
        let (lv, le) = panel(&f, ia, mid);
        let (rv, re) = panel(&f, mid, ib);
        intervals.push((ia, mid, lv, le));
        intervals.push((mid, ib, rv, re));
    }

    let value: f64 = intervals.iter().map(|i| i.2).sum();
    let error_estimate: f64 = intervals.iter().map(|i| i.3).sum();
    if error_estimate > spec.tol {
        return Err(Error::QuadratureFailure {
            estimate: error_estimate,
            tol: spec.tol,
        });
    }
    Ok(QuadResult {
        value,
        error_estimate,
    })
}

/// Integral over the whole line of an integrand with exponential decay:
/// integrates on [-R, R] and doubles R until the value stabilizes to the
/// requested tolerance.
pub fn integrate_line<F: Fn(f64) -> f64>(f: F, spec: &QuadSpec) -> Result<QuadResult> {
    let mut radius = 8.0;
    let mut current = integrate(&f, -radius, radius, spec)?;
    for _ in 0..16 {
        let doubled = integrate(&f, -2.0 * radius, 2.0 * radius, spec)?;
        if (doubled.value - current.value).abs() <= spec.tol.max(1e-15 * doubled.value.abs()) {
            return Ok(QuadResult {
                value: doubled.value,
                error_estimate: doubled
                    .error_estimate
                    .max((doubled.value - current.value).abs()),
            });
        }
        radius *= 2.0;
        current = doubled;
    }
    Err(Error::QuadratureFailure {
        estimate: f64::INFINITY,
        tol: spec.tol,
    })
}
