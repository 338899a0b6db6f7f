//! The elliptic contributions to the wave trace: the spectral-side basis
//! functions psi_m, their asymptotics, their time-side transforms Psi_m, and
//! the integer decomposition of a sampled sum of psi's into cone orders.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{integrate_line, QuadSpec};

/// psi_m(r) = sum_{l=1}^{m-1} [1 / (4 m sin(pi l / m))]
///            * (e^{-2 pi r l / m} / (1 + e^{-2 pi r})
///             + e^{2 pi r l / m} / (1 + e^{2 pi r})).
///
/// Evaluated in the paired form with every exponent nonpositive: for r >= 0
/// the two fractions combine to
/// [e^{-2 pi r l / m} + e^{-2 pi r (1 - l/m)}] / (1 + e^{-2 pi r}),
/// which never overflows; the l <-> m - l swap shows evenness, so negative r
/// reduces to |r|.
pub fn psi_value(m: u32, r: f64) -> f64 {
    assert!(m >= 2, "cone order must be at least 2");
    let x = r.abs();
    let denominator = 1.0 + (-2.0 * PI * x).exp();
    let mut sum = 0.0;
    for l in 1..m {
        let ratio = f64::from(l) / f64::from(m);
        let numerator = (-2.0 * PI * x * ratio).exp() + (-2.0 * PI * x * (1.0 - ratio)).exp();
        sum += numerator / (4.0 * f64::from(m) * (PI * ratio).sin() * denominator);
    }
    sum
}

/// Leading behavior (2 m sin(pi/m))^{-1} e^{-2 pi r / m} of psi_m as r grows.
pub fn psi_asymptotic(m: u32, r: f64) -> f64 {
    assert!(m >= 2);
    (-2.0 * PI * r / f64::from(m)).exp() / (2.0 * f64::from(m) * (PI / f64::from(m)).sin())
}

/// Psi_m(t) = int psi_m(r) e^{irt} dr = 2 int_0^inf psi_m(r) cos(tr) dr,
/// real and even in t.
pub fn psi_time(m: u32, t: f64, quad: &QuadSpec) -> Result<f64> {
    let result = integrate_line(|r| psi_value(m, r) * (t * r).cos(), quad)?;
    Ok(result.value)
}

/// Which variable a sampled function is tabulated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleVariable {
    /// Spectral variable.
    R,
    /// Time variable.
    T,
}

impl SampleVariable {
    pub fn label(&self) -> &'static str {
        match self {
            SampleVariable::R => "r",
            SampleVariable::T => "t",
        }
    }
}

/// Uniform samples of a function of r or t.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledFunction {
    pub variable: SampleVariable,
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(variable: SampleVariable, start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !step.is_finite() || step <= 0.0 || !start.is_finite() {
            return Err(Error::InvalidSamples(format!(
                "grid start {start}, step {step} must be finite with positive step"
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSamples("non-finite sample value".into()));
        }
        Ok(SampledFunction {
            variable,
            start,
            step,
            values,
        })
    }

    /// Tabulates `f` on `n` uniform samples from `start`.
    pub fn tabulate(
        variable: SampleVariable,
        start: f64,
        step: f64,
        n: usize,
        f: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let values = (0..n).map(|i| f(start + step * i as f64)).collect();
        SampledFunction::new(variable, start, step, values)
    }

    pub fn grid_point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn end(&self) -> f64 {
        self.grid_point(self.values.len().saturating_sub(1))
    }
}

/// Exact synthetic input versus noisy data; sets the acceptance threshold of
/// the integer fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecomposeMode {
    Exact,
    Noisy,
}

/// Default sampling grid of the decomposition: r in [0, 15], step 0.05.
pub const DECOMPOSE_GRID_END: f64 = 15.0;
pub const DECOMPOSE_GRID_STEP: f64 = 0.05;

/// Nonnegative integer coefficients (c_2, ..., c_max) minimizing
/// || S - sum c_m psi_m ||_2 on the sample grid, returned as the multiset
/// {m with multiplicity c_m}.
///
/// The search seeds from a greedy peel (largest order first, fitted on the
/// tail where its slower decay dominates) and from rounded unconstrained
/// least squares, then scans the +-1 integer neighborhood of both seeds.
pub fn decompose_cone_sum(
    samples: &SampledFunction,
    max_order: u32,
    mode: DecomposeMode,
) -> Result<Vec<u32>> {
    if samples.variable != SampleVariable::R {
        return Err(Error::InvalidSamples(
            "decomposition expects samples in the spectral variable r".into(),
        ));
    }
    if samples.start != 0.0 || samples.end() < 15.0 - 1e-9 || samples.step > 0.1 + 1e-12 {
        return Err(Error::InvalidSamples(format!(
            "need r in [0, R] with R >= 15 and step <= 0.1; got start {}, end {}, step {}",
            samples.start,
            samples.end(),
            samples.step
        )));
    }
    if max_order < 2 {
        return Err(Error::InvalidInput("max_order must be at least 2".into()));
    }

    let orders: Vec<u32> = (2..=max_order).collect();
    let n = samples.values.len();
    let basis: Vec<Vec<f64>> = orders
        .iter()
        .map(|&m| (0..n).map(|i| psi_value(m, samples.grid_point(i))).collect())
        .collect();
    let target = &samples.values;

    let scale = l2_norm(target);
    let seeds = vec![
        greedy_tail_peel(&orders, &basis, target),
        rounded_nonnegative_least_squares(&basis, target),
    ];

    // Residual^2 via || S ||^2 - 2 c . b + c^T G c.
    let gram: Vec<Vec<f64>> = basis
        .iter()
        .map(|col_i| basis.iter().map(|col_j| dot(col_i, col_j)).collect())
        .collect();
    let correlation: Vec<f64> = basis.iter().map(|col| dot(col, target)).collect();
    let target_sq = dot(target, target);
    let residual_of = |c: &[u32]| -> f64 {
        let mut value = target_sq;
        for i in 0..c.len() {
            let ci = f64::from(c[i]);
            if ci == 0.0 {
                continue;
            }
            value -= 2.0 * ci * correlation[i];
            for j in 0..c.len() {
                value += ci * gram[i][j] * f64::from(c[j]);
            }
        }
        value.max(0.0).sqrt()
    };

    // Hill climbing over the integer lattice: scan the clamped +-1
    // neighborhood of each seed, re-center on any improvement, repeat to a
    // fixpoint. Best and best-with-a-different-multiset feed the ambiguity
    // check.
    let mut best: Option<(Vec<u32>, f64)> = None;
    let mut runner_up: Option<(Vec<u32>, f64)> = None;
    let mut visited = std::collections::HashSet::new();
    for seed in seeds {
        let mut center = seed;
        loop {
            let mut improved: Option<Vec<u32>> = None;
            scan_neighborhood(&center, &mut |candidate| {
                let residual = match visited.insert(candidate.to_vec()) {
                    true => residual_of(candidate),
                    false => return,
                };
                match &best {
                    Some((best_c, best_r)) => {
                        if residual < *best_r {
                            if best_c != candidate {
                                runner_up = best.clone();
                            }
                            best = Some((candidate.to_vec(), residual));
                            improved = Some(candidate.to_vec());
                        } else if best_c != candidate
                            && runner_up.as_ref().is_none_or(|(_, r)| residual < *r)
                        {
                            runner_up = Some((candidate.to_vec(), residual));
                        }
                    }
                    None => {
                        best = Some((candidate.to_vec(), residual));
                        improved = Some(candidate.to_vec());
                    }
                }
            });
            match improved {
                Some(next) => center = next,
                None => break,
            }
        }
    }

    let (coefficients, best_residual) = best.expect("nonempty candidate scan");
    // Residuals below half the integer-lattice separation of the basis can
    // never be closer to a different multiset, so the noisy mode accepts up
    // to just under that even when the data is mostly contamination (the
    // all-zero fit of a coneless input has residual equal to the noise).
    let threshold = match mode {
        DecomposeMode::Exact => (1e-7 * scale).max(1e-12),
        DecomposeMode::Noisy => (1e-3 * scale).max(0.45 * lattice_separation(&gram)),
    };
    if best_residual > threshold {
        return Err(Error::NonIntegerFit {
            best: best_residual,
            threshold,
        });
    }
    if let Some((_, runner_residual)) = runner_up {
        if runner_residual <= 2.0 * best_residual && best_residual > 0.0 {
            return Err(Error::AmbiguousFit {
                best: best_residual,
                runner_up: runner_residual,
            });
        }
    }

    let mut multiset = Vec::new();
    for (i, &m) in orders.iter().enumerate() {
        for _ in 0..coefficients[i] {
            multiset.push(m);
        }
    }
    Ok(multiset)
}

/// Minimal || A delta ||_2 over nonzero integer perturbations delta in
/// {-1, 0, 1}^k, from the Gram matrix: the tightest distance at which two
/// adjacent integer fits can compete.
fn lattice_separation(gram: &[Vec<f64>]) -> f64 {
    let k = gram.len();
    let mut digits = vec![0i8; k];
    let mut best = f64::INFINITY;
    loop {
        if digits.iter().any(|&d| d != 0) {
            let mut quadratic = 0.0;
            for i in 0..k {
                if digits[i] == 0 {
                    continue;
                }
                let di = f64::from(digits[i]);
                for j in 0..k {
                    quadratic += di * gram[i][j] * f64::from(digits[j]);
                }
            }
            best = best.min(quadratic.max(0.0));
        }
        let mut pos = 0;
        loop {
            if pos == k {
                return best.sqrt();
            }
            if digits[pos] < 1 {
                digits[pos] += 1;
                break;
            }
            digits[pos] = -1;
            pos += 1;
        }
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn l2_norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

/// Greedy integer estimate: orders descending, each coefficient read off the
/// last few samples, where the slowest-decaying remaining order dominates
/// (the asymptotic regime), then peeled from the whole grid.
fn greedy_tail_peel(orders: &[u32], basis: &[Vec<f64>], target: &[f64]) -> Vec<u32> {
    let n = target.len();
    let tail = n.saturating_sub((n / 30).max(10))..n;
    let mut residual = target.to_vec();
    let mut coefficients = vec![0u32; orders.len()];
    for i in (0..orders.len()).rev() {
        let column = &basis[i];
        let num: f64 = tail.clone().map(|j| residual[j] * column[j]).sum();
        let den: f64 = tail.clone().map(|j| column[j] * column[j]).sum();
        let estimate = (num / den).round().max(0.0);
        coefficients[i] = estimate as u32;
        if estimate > 0.0 {
            for j in 0..n {
                residual[j] -= estimate * column[j];
            }
        }
    }
    coefficients
}

/// Nonnegative least squares (Lawson-Hanson active set), rounded to
/// integers. The unconstrained problem is numerically degenerate here
/// (adjacent large orders decay almost identically), while the nonnegativity
/// constraint pins the solution down.
fn rounded_nonnegative_least_squares(basis: &[Vec<f64>], target: &[f64]) -> Vec<u32> {
    let k = basis.len();
    let n = target.len();
    let mut passive = vec![false; k];
    let mut solution = vec![0.0f64; k];
    let mut residual = target.to_vec();

    for _ in 0..3 * k {
        // Most positive gradient among constrained coordinates.
        let mut best: Option<(usize, f64)> = None;
        for j in 0..k {
            if passive[j] {
                continue;
            }
            let w = dot(&basis[j], &residual);
            if w > 1e-12 && best.is_none_or(|(_, bw)| w > bw) {
                best = Some((j, w));
            }
        }
        let Some((enter, _)) = best else { break };
        passive[enter] = true;

        // Re-solve on the passive set, pushing any coordinate that went
        // negative back onto its bound.
        loop {
            let candidate = solve_subset(basis, target, &passive);
            let negative: Vec<usize> = (0..k)
                .filter(|&j| passive[j] && candidate[j] <= 1e-12)
                .collect();
            if negative.is_empty() {
                solution = candidate;
                break;
            }
            for j in negative {
                passive[j] = false;
            }
            if !passive.iter().any(|&p| p) {
                solution = vec![0.0; k];
                break;
            }
        }
        for i in 0..n {
            residual[i] = target[i]
                - (0..k)
                    .filter(|&j| solution[j] != 0.0)
                    .map(|j| solution[j] * basis[j][i])
                    .sum::<f64>();
        }
    }
    solution.iter().map(|&x| x.round().max(0.0) as u32).collect()
}

/// Least squares restricted to the passive columns, by modified
/// Gram-Schmidt QR; constrained coordinates return zero.
fn solve_subset(basis: &[Vec<f64>], target: &[f64], passive: &[bool]) -> Vec<f64> {
    let columns: Vec<usize> = (0..basis.len()).filter(|&j| passive[j]).collect();
    let k = columns.len();
    let mut q: Vec<Vec<f64>> = columns.iter().map(|&j| basis[j].clone()).collect();
    let mut r = vec![vec![0.0f64; k]; k];
    for i in 0..k {
        for j in 0..i {
            let proj = dot(&q[j], &q[i]);
            r[j][i] = proj;
            let qj = q[j].clone();
            for (qi, qjv) in q[i].iter_mut().zip(&qj) {
                *qi -= proj * qjv;
            }
        }
        let norm = l2_norm(&q[i]);
        r[i][i] = norm;
        if norm > 1e-14 {
            q[i].iter_mut().for_each(|v| *v /= norm);
        }
    }
    let rhs: Vec<f64> = (0..k).map(|i| dot(&q[i], target)).collect();
    let mut reduced = vec![0.0f64; k];
    for i in (0..k).rev() {
        let mut value = rhs[i];
        for j in i + 1..k {
            value -= r[i][j] * reduced[j];
        }
        reduced[i] = if r[i][i] > 1e-14 { value / r[i][i] } else { 0.0 };
    }
    let mut solution = vec![0.0f64; basis.len()];
    for (slot, &j) in columns.iter().enumerate() {
        solution[j] = reduced[slot];
    }
    solution
}

/// Visits every clamped +-1 perturbation of `center` (3^k candidates).
fn scan_neighborhood(center: &[u32], visit: &mut impl FnMut(&[u32])) {
    let k = center.len();
    let mut candidate = vec![0u32; k];
    // Iterative odometer over {-1, 0, +1}^k.
    let mut digits = vec![0i8; k];
    loop {
        for i in 0..k {
            let value = center[i] as i64 + i64::from(digits[i]);
            candidate[i] = value.max(0) as u32;
        }
        visit(&candidate);
        // Increment odometer.
        let mut pos = 0;
        loop {
            if pos == k {
                return;
            }
            if digits[pos] < 1 {
                digits[pos] += 1;
                break;
            }
            digits[pos] = -1;
            pos += 1;
        }
    }
}
