//! The mollified wave trace: synthesis from geometric data, singularity
//! detection, the iterative peel-off recovering lengths and multiplicities,
//! and the full inversion down to cone orders and genus.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbifold::genus_from;
use crate::psi::{
    decompose_cone_sum, psi_time, DecomposeMode, SampleVariable, SampledFunction,
    DECOMPOSE_GRID_END, DECOMPOSE_GRID_STEP,
};
use crate::quad::{integrate, QuadSpec};
use crate::spectrum::{LengthSpectrum, SpectrumEntry};

/// Geometric data the wave trace is synthesized from: the area (identity
/// part), delta positions k l_c with their coefficients (hyperbolic part),
/// and cone orders (smooth part).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveTraceModel {
    pub area: f64,
    /// (position, coefficient) per delta on the positive time axis,
    /// ascending positions, coefficients aggregated over classes.
    pub singular_part: Vec<(f64, f64)>,
    pub smooth_orders: Vec<u32>,
}

impl WaveTraceModel {
    /// Expands a primitive length spectrum into the delta train
    /// k l_c <= t_max with coefficients multiplicity * l_c / (4 sinh(k l_c / 2)).
    pub fn from_spectrum(
        spectrum: &LengthSpectrum,
        cone_orders: &[u32],
        area: f64,
        t_max: f64,
    ) -> Self {
        let mut singular_part: Vec<(f64, f64)> = Vec::new();
        for entry in &spectrum.entries {
            let mut k = 1u32;
            loop {
                let position = f64::from(k) * entry.length;
                if position > t_max {
                    break;
                }
                let coefficient = f64::from(entry.multiplicity) * entry.length
                    / (4.0 * (0.5 * position).sinh());
                singular_part.push((position, coefficient));
                k += 1;
            }
        }
        singular_part.sort_by(|x, y| x.0.total_cmp(&y.0));
        // Aggregate coincident positions.
        let mut merged: Vec<(f64, f64)> = Vec::new();
        for (position, coefficient) in singular_part {
            match merged.last_mut() {
                Some((last, total)) if position - *last <= 1e-9 => *total += coefficient,
                _ => merged.push((position, coefficient)),
            }
        }
        WaveTraceModel {
            area,
            singular_part: merged,
            smooth_orders: cone_orders.to_vec(),
        }
    }
}

/// Which of the three wave-trace parts a sampled trace contains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceParts {
    pub identity: bool,
    pub singular: bool,
    pub smooth: bool,
}

impl TraceParts {
    pub const ALL: TraceParts = TraceParts {
        identity: true,
        singular: true,
        smooth: true,
    };
}

/// Uniform time grid for synthesis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub step: f64,
    pub samples: usize,
}

impl TimeGrid {
    /// Grid t = step, 2 step, ..., covering [step, end].
    pub fn from_step(step: f64, end: f64) -> Self {
        TimeGrid {
            start: step,
            step,
            samples: (end / step).floor() as usize,
        }
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.point(self.samples.saturating_sub(1))
    }
}

/// The wave trace convolved with a unit-mass Gaussian of width sigma,
/// tabulated on a uniform time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MollifiedTrace {
    pub sigma: f64,
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub parts: TraceParts,
}

impl MollifiedTrace {
    pub fn grid_point(&self, i: usize) -> f64 {
        self.grid.point(i)
    }
}

fn rho(sigma: f64, x: f64) -> f64 {
    (-(x * x) / (2.0 * sigma * sigma)).exp() / (sigma * (2.0 * PI).sqrt())
}

fn rho_prime(sigma: f64, x: f64) -> f64 {
    -x / (sigma * sigma) * rho(sigma, x)
}

fn rho_second(sigma: f64, x: f64) -> f64 {
    ((x * x) / (sigma * sigma) - 1.0) / (sigma * sigma) * rho(sigma, x)
}

/// Mollifier peak value (2 pi sigma^2)^{-1/2}; detection thresholds are
/// quoted relative to it.
pub fn mollifier_peak(sigma: f64) -> f64 {
    1.0 / (sigma * (2.0 * PI).sqrt())
}

/// 1/sinh(s/2) - 2/s: the smooth odd remainder of the identity kernel after
/// its pole is removed.
fn sinh_remainder(s: f64) -> f64 {
    if s.abs() < 1e-4 {
        -s / 12.0 + 7.0 * s * s * s / 2880.0
    } else {
        1.0 / (0.5 * s).sinh() - 2.0 / s
    }
}

/// The identity part of the mollified wave trace at time t: the mollifier
/// paired with the distributional derivative of (area / 4 pi) / sinh(s/2),
/// the principal value split at s = 0 with the odd cancellation explicit:
///
///   (area / 4 pi) [ int rho'(t - s) (1/sinh(s/2) - 2/s) ds
///                 + 2 int_0^B (rho'(t - s) - rho'(t + s)) / s ds ].
pub fn identity_part(area: f64, sigma: f64, t: f64) -> Result<f64> {
    if area == 0.0 {
        return Ok(0.0);
    }
    let window = t.abs() + 12.0 * sigma + 1.0;
    let spec = QuadSpec {
        tol: 1e-9 * (1.0 + 1.0 / (sigma * sigma)),
        max_subdivisions: 2000,
    };
    // rho' concentrates in a width-sigma spike at s = +-t; hand the
    // quadrature explicit breakpoints so no panel can straddle it unsampled.
    let spike = 10.0 * sigma;
    let remainder = integrate_broken(
        |s| rho_prime(sigma, t - s) * sinh_remainder(s),
        &[
            -window,
            -t.abs() - spike,
            -t.abs() + spike,
            t.abs() - spike,
            t.abs() + spike,
            window,
        ],
        &spec,
    )?;
    let folded = integrate_broken(
        |s| {
            if s.abs() < 1e-7 * sigma {
                -2.0 * rho_second(sigma, t)
            } else {
                (rho_prime(sigma, t - s) - rho_prime(sigma, t + s)) / s
            }
        },
        &[0.0, t.abs() - spike, t.abs() + spike, window],
        &spec,
    )?;
    Ok(area / (4.0 * PI) * (remainder + 2.0 * folded))
}

/// Integral over the span of `points`, split at each interior point
/// (clamped to the span and deduplicated).
fn integrate_broken(
    f: impl Fn(f64) -> f64,
    points: &[f64],
    spec: &QuadSpec,
) -> Result<f64> {
    let (lo, hi) = (points[0], *points.last().expect("nonempty breakpoints"));
    let mut cuts: Vec<f64> = points.iter().map(|p| p.clamp(lo, hi)).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-300);
    let mut total = 0.0;
    for pair in cuts.windows(2) {
        total += integrate(&f, pair[0], pair[1], spec)?.value;
    }
    Ok(total)
}

/// Raw (unmollified) identity term -area/(8 pi) cosh(t/2)/sinh^2(t/2),
/// the t != 0 pointwise value the mollified part approaches.
pub fn identity_part_raw(area: f64, t: f64) -> f64 {
    -area / (8.0 * PI) * (0.5 * t).cosh() / (0.5 * t).sinh().powi(2)
}

/// Synthesizes the mollified wave trace of a model on the given grid: the
/// principal-value identity part, Gaussian-mollified deltas at +-(k l_c),
/// and the smooth cone-point part sum of Psi_m (already analytic, evaluated
/// directly; its own mollification differs by O(sigma^2) and is omitted).
pub fn synthesize_mollified(
    model: &WaveTraceModel,
    sigma: f64,
    grid: &TimeGrid,
) -> Result<MollifiedTrace> {
    synthesize_parts(model, sigma, grid, TraceParts::ALL)
}

/// Synthesis restricted to selected parts (used by tests and by the
/// inversion, which works on the singular-free remainder).
pub fn synthesize_parts(
    model: &WaveTraceModel,
    sigma: f64,
    grid: &TimeGrid,
    parts: TraceParts,
) -> Result<MollifiedTrace> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(Error::InvalidInput(format!("sigma {sigma} must be positive")));
    }
    if grid.step > sigma / 4.0 {
        return Err(Error::GridTooCoarse {
            step: grid.step,
            sigma,
        });
    }
    let quad = QuadSpec::with_tol(1e-10);
    let values: Result<Vec<f64>> = (0..grid.samples)
        .into_par_iter()
        .map(|i| {
            let t = grid.point(i);
            let mut value = 0.0;
            if parts.identity {
                value += identity_part(model.area, sigma, t)?;
            }
            if parts.singular {
                for &(position, coefficient) in &model.singular_part {
                    value += coefficient * (rho(sigma, t - position) + rho(sigma, t + position));
                }
            }
            if parts.smooth {
                for &m in &model.smooth_orders {
                    value += psi_time(m, t, &quad)?;
                }
            }
            Ok(value)
        })
        .collect();
    Ok(MollifiedTrace {
        sigma,
        grid: *grid,
        values: values?,
        parts,
    })
}

/// One detected singularity: sub-grid position and the delta coefficient
/// inferred from the fitted peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub position: f64,
    pub coefficient: f64,
}

/// Finds mollified-delta peaks in a trace: subtracts the identity part
/// (area is known from the Weyl volume), then fits each local maximum with a
/// Gaussian over a linear running baseline that absorbs the smooth part.
/// Detections below `threshold` (in delta-coefficient units, i.e. relative
/// to the mollifier peak) are dropped.
pub fn detect_singularities(
    trace: &MollifiedTrace,
    area: f64,
    threshold: f64,
) -> Result<Vec<Detection>> {
    let residual = remove_identity(trace, area)?;
    Ok(detect_peaks(&residual, &trace.grid, trace.sigma, threshold).detections)
}

fn remove_identity(trace: &MollifiedTrace, area: f64) -> Result<Vec<f64>> {
    if !trace.parts.identity || area == 0.0 {
        return Ok(trace.values.clone());
    }
    (0..trace.grid.samples)
        .into_par_iter()
        .map(|i| Ok(trace.values[i] - identity_part(area, trace.sigma, trace.grid.point(i))?))
        .collect()
}

/// Stable fits plus prominent local maxima whose Gaussian fit would not
/// stabilize (overlapping structures the mollifier cannot separate).
struct DetectOutcome {
    detections: Vec<Detection>,
    unstable: Vec<f64>,
}

/// Peak detection core on an identity-free residual.
fn detect_peaks(residual: &[f64], grid: &TimeGrid, sigma: f64, threshold: f64) -> DetectOutcome {
    let n = residual.len();
    let mut detections = Vec::new();
    let mut unstable = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(residual[i] > residual[i - 1] && residual[i] >= residual[i + 1]) {
            continue;
        }
        // Quadratic vertex through the three samples.
        let (left, mid, right) = (residual[i - 1], residual[i], residual[i + 1]);
        let curvature = left - 2.0 * mid + right;
        if curvature >= 0.0 {
            continue;
        }
        let offset = 0.5 * (left - right) / curvature;
        let mut position = grid.point(i) + offset * grid.step;

        // Local fit of c rho_sigma(dt) + d rho'_sigma(dt) + a + b dt over
        // |dt| <= 3 sigma. The linear baseline stands in for the running
        // smooth estimate; the rho' column measures the residual position
        // error (a shift delta contributes -c delta rho'), which one
        // correction pass removes.
        let half_width = (3.0 * sigma / grid.step).ceil() as usize;
        let lo = i.saturating_sub(half_width);
        let hi = (i + half_width + 1).min(n);

        // Prominence over the window-edge chord, in coefficient units;
        // decides whether a failed fit is noise or unresolved structure.
        let edge_chord = 0.5 * (residual[lo] + residual[hi - 1]);
        let prominence = (residual[i] - edge_chord) * sigma * (2.0 * PI).sqrt();

        let mut coefficient = 0.0;
        for _pass in 0..2 {
            let mut normal = [[0.0f64; 4]; 4];
            let mut rhs = [0.0f64; 4];
            for (j, &value) in residual.iter().enumerate().take(hi).skip(lo) {
                let dt = grid.point(j) - position;
                let row = [rho(sigma, dt), rho_prime(sigma, dt), 1.0, dt];
                for (r, rv) in row.iter().enumerate() {
                    rhs[r] += rv * value;
                    for (c, cv) in row.iter().enumerate() {
                        normal[r][c] += rv * cv;
                    }
                }
            }
            let Some(solution) = solve_small::<4>(&mut normal, &mut rhs) else {
                coefficient = f64::NEG_INFINITY;
                break;
            };
            coefficient = solution[0];
            if coefficient <= 0.0 {
                break;
            }
            let correction = -solution[1] / coefficient;
            // A genuine peak sits within half a grid step of its sample
            // maximum; a correction wandering beyond that is a fit chasing
            // noise, not a delta.
            if !correction.is_finite() || correction.abs() > grid.step {
                coefficient = f64::NEG_INFINITY;
                break;
            }
            position += correction;
        }
        if (position - grid.point(i)).abs() <= 1.5 * grid.step && coefficient >= threshold {
            detections.push(Detection {
                position,
                coefficient,
            });
        } else if coefficient == f64::NEG_INFINITY && prominence >= threshold {
            unstable.push(grid.point(i));
        }
    }
    DetectOutcome {
        detections,
        unstable,
    }
}

#[allow(clippy::needless_range_loop)]
fn solve_small<const N: usize>(a: &mut [[f64; N]; N], b: &mut [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..N {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for c in col..N {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut solution = [0.0; N];
    for i in 0..N {
        solution[i] = b[i] / a[i][i];
    }
    Some(solution)
}

/// Adds `sign` times the full mollified iterate train of a primitive of the
/// given length and multiplicity to a residual buffer.
fn add_train(
    residual: &mut [f64],
    grid: &TimeGrid,
    sigma: f64,
    length: f64,
    multiplicity: f64,
    sign: f64,
) {
    let mut k = 1u32;
    loop {
        let position = f64::from(k) * length;
        if position > grid.end() + 6.0 * sigma {
            break;
        }
        let coefficient = sign * multiplicity * length / (4.0 * (0.5 * position).sinh());
        for (i, value) in residual.iter_mut().enumerate() {
            let t = grid.point(i);
            *value += coefficient * (rho(sigma, t - position) + rho(sigma, t + position));
        }
        k += 1;
    }
}

/// Options of the peel-off loop.
#[derive(Debug, Clone, Copy)]
pub struct PeelOptions {
    /// Detection floor in delta-coefficient units.
    pub threshold: f64,
}

impl Default for PeelOptions {
    fn default() -> Self {
        PeelOptions { threshold: 0.02 }
    }
}

/// Iteratively recovers the primitive length spectrum from a mollified
/// trace: the smallest remaining singularity is a primitive length; its
/// multiplicity is the ratio of the detected coefficient to
/// l / (4 sinh(l/2)), rounded (and rejected beyond 0.2 from an integer); the
/// primitive's whole iterate train is subtracted before the next search.
/// Returns the spectrum and the singular-free residual (the smooth part).
pub fn peel_off(
    trace: &MollifiedTrace,
    area: f64,
    l_max: f64,
) -> Result<(LengthSpectrum, MollifiedTrace)> {
    peel_off_with(trace, area, l_max, &PeelOptions::default())
}

pub fn peel_off_with(
    trace: &MollifiedTrace,
    area: f64,
    l_max: f64,
    options: &PeelOptions,
) -> Result<(LengthSpectrum, MollifiedTrace)> {
    let sigma = trace.sigma;
    if trace.grid.end() < l_max + 6.0 * sigma - 1e-12 {
        return Err(Error::InvalidInput(format!(
            "grid ends at {} but peeling to {l_max} needs coverage of {}",
            trace.grid.end(),
            l_max + 6.0 * sigma
        )));
    }
    let mut residual = remove_identity(trace, area)?;
    let mut entries: Vec<SpectrumEntry> = Vec::new();

    loop {
        let outcome = detect_peaks(&residual, &trace.grid, sigma, options.threshold);
        let mut detections: Vec<Detection> = outcome
            .detections
            .into_iter()
            .filter(|d| d.position <= l_max)
            .collect();
        detections.sort_by(|x, y| x.position.total_cmp(&y.position));

        // A prominent maximum whose fit would not stabilize, sitting ahead
        // of every clean detection, is an entangled pair of singularities.
        if let Some(&entangled) = outcome
            .unstable
            .iter()
            .filter(|&&u| u <= l_max)
            .find(|&&u| detections.first().is_none_or(|d| u < d.position))
        {
            let neighbor = detections
                .first()
                .map(|d| d.position)
                .unwrap_or(entangled + 4.0 * sigma);
            return Err(Error::OverlapUnresolved {
                first: entangled,
                second: neighbor,
            });
        }

        let Some(first) = detections.first().copied() else {
            break;
        };
        if let Some(second) = detections.get(1) {
            if second.position - first.position < 4.0 * sigma {
                return Err(Error::OverlapUnresolved {
                    first: first.position,
                    second: second.position,
                });
            }
        }
        let length = first.position;
        let unit_coefficient = length / (4.0 * (0.5 * length).sinh());
        let ratio = first.coefficient / unit_coefficient;
        let multiplicity = ratio.round();
        let deviation = (ratio - multiplicity).abs();
        if deviation > 0.2 || multiplicity < 1.0 {
            return Err(Error::NonIntegerMultiplicity {
                position: length,
                ratio,
                deviation,
            });
        }

        // Subtract the whole iterate train across the grid.
        add_train(&mut residual, &trace.grid, sigma, length, multiplicity, -1.0);
        entries.push(SpectrumEntry {
            length,
            multiplicity: multiplicity as u32,
            word: None,
        });
    }

    // Refinement pass: with every train subtracted, each primitive can be
    // re-measured on a residual free of its neighbors' tails, removing the
    // bias a 6-sigma neighbor leaves in the first fit.
    for entry in entries.iter_mut() {
        add_train(
            &mut residual,
            &trace.grid,
            sigma,
            entry.length,
            f64::from(entry.multiplicity),
            1.0,
        );
        let detections = detect_peaks(&residual, &trace.grid, sigma, options.threshold).detections;
        if let Some(best) = detections
            .iter()
            .filter(|d| (d.position - entry.length).abs() <= 4.0 * sigma)
            .min_by(|x, y| {
                (x.position - entry.length)
                    .abs()
                    .total_cmp(&(y.position - entry.length).abs())
            })
        {
            let unit = best.position / (4.0 * (0.5 * best.position).sinh());
            let ratio = best.coefficient / unit;
            let multiplicity = ratio.round();
            if (ratio - multiplicity).abs() <= 0.2 && multiplicity >= 1.0 {
                entry.length = best.position;
                entry.multiplicity = multiplicity as u32;
            }
        }
        add_train(
            &mut residual,
            &trace.grid,
            sigma,
            entry.length,
            f64::from(entry.multiplicity),
            -1.0,
        );
    }

    entries.sort_by(|x, y| x.length.total_cmp(&y.length));
    let spectrum = LengthSpectrum {
        entries,
        completeness_bound: l_max,
    };
    let residual_trace = MollifiedTrace {
        sigma,
        grid: trace.grid,
        values: residual,
        parts: TraceParts {
            identity: false,
            singular: false,
            smooth: true,
        },
    };
    Ok((spectrum, residual_trace))
}

/// Everything the wave trace determines: the length spectrum, the cone
/// orders, and the genus.
#[derive(Debug, Clone)]
pub struct InverseResult {
    pub spectrum: LengthSpectrum,
    pub cone_orders: Vec<u32>,
    pub genus: u32,
}

/// Full inversion: peel off the singular part, carry the smooth remainder
/// back to the spectral variable, decompose it into cone orders, and solve
/// the area constraint for the genus. The grid must start at its own step
/// (t = step, 2 step, ...) so the cosine transform can close the gap at 0.
pub fn full_inverse(trace: &MollifiedTrace, area: f64, max_order: u32) -> Result<InverseResult> {
    let l_max = trace.grid.end() - 6.0 * trace.sigma;
    if l_max <= 0.0 {
        return Err(Error::InvalidInput("grid too short for inversion".into()));
    }
    if (trace.grid.start - trace.grid.step).abs() > 1e-9 * trace.grid.step.max(1.0) {
        return Err(Error::InvalidInput(
            "inversion expects a grid starting at t = step".into(),
        ));
    }
    let (spectrum, residual) = peel_off(trace, area, l_max)?;

    // Spectral side of the residual: S(r) = (1/pi) int_0^T R(t) cos(rt) dt
    // under the crate's transform convention, R extended evenly through 0.
    let n = (DECOMPOSE_GRID_END / DECOMPOSE_GRID_STEP).round() as usize + 1;
    let step = trace.grid.step;
    let values = &residual.values;
    let at_zero = (4.0 * values[0] - values[1]) / 3.0;
    let samples = SampledFunction::tabulate(
        SampleVariable::R,
        0.0,
        DECOMPOSE_GRID_STEP,
        n,
        |r| {
            let mut sum = 0.5 * at_zero;
            for (i, &value) in values.iter().enumerate() {
                let t = residual.grid.point(i);
                let weight = if i + 1 == values.len() { 0.5 } else { 1.0 };
                sum += weight * value * (r * t).cos();
            }
            sum * step / PI
        },
    )?;
    let cone_orders = decompose_cone_sum(&samples, max_order, DecomposeMode::Noisy)?;
    let genus = genus_from(area, &cone_orders)?;
    Ok(InverseResult {
        spectrum,
        cone_orders,
        genus,
    })
}
