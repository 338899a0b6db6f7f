//! Acceptance suite: one test per criterion, each printing a PASS line once
//! its assertions hold (run with `--nocapture` to see them). Tolerances are
//! pinned in the assertions themselves.

use std::f64::consts::PI;

use num_complex::Complex64;

use orbispec::enumeration::{enumerate_elements, EnumerationOptions, GroupPresentation};
use orbispec::moebius::{IsometryKind, MoebiusElement};
use orbispec::orbifold::{genus_from, triangle_group_generators, OrbifoldSignature, Rational};
use orbispec::psi::{
    decompose_cone_sum, psi_asymptotic, psi_value, DecomposeMode, SampleVariable, SampledFunction,
};
use orbispec::quad::QuadSpec;
use orbispec::spectrum::{cone_orders, conjugacy_classes, length_spectrum, LengthSpectrum};
use orbispec::testfn::gaussian_heat_pair;
use orbispec::trace::{geometric_side, identity_term, GeometricInputs};
use orbispec::wave::{full_inverse, synthesize_mollified, TimeGrid, WaveTraceModel};

fn pass(number: u32, what: &str) {
    println!("ACCEPTANCE {number} PASS - {what}");
}

/// Regular-octagon genus-2 surface group (the torsion-free "user-supplied
/// generators" example): translations of length 2 arccosh(1 + sqrt 2) along
/// axes through i at angles k pi / 4.
fn octagon_generators() -> Vec<MoebiusElement> {
    let length = 2.0 * (1.0 + 2.0f64.sqrt()).acosh();
    (0..4)
        .map(|k| {
            let rot = MoebiusElement::rotation_about_i(f64::from(k) * PI / 4.0);
            rot.compose(&MoebiusElement::translation(length))
                .compose(&rot.inverse())
        })
        .collect()
}

#[test]
fn criterion_1_gauss_bonnet_exactness() {
    let cases: [(u32, &[u32], Rational); 5] = [
        (0, &[2, 3, 7], Rational::new(-1, 42)),
        (0, &[2, 3, 8], Rational::new(-1, 24)),
        (0, &[2, 4, 5], Rational::new(-1, 20)),
        (2, &[], Rational::new(-2, 1)),
        (1, &[2], Rational::new(-1, 2)),
    ];
    for (genus, orders, expected_chi) in cases {
        let signature = OrbifoldSignature::new(genus, orders.to_vec()).unwrap();
        let chi = signature.euler_characteristic();
        assert_eq!(chi, expected_chi, "chi of ({genus}; {orders:?})");
        let area = signature.area_gauss_bonnet().unwrap();
        assert!(
            (area + 2.0 * PI * chi.to_f64()).abs() <= 1e-12,
            "area of ({genus}; {orders:?})"
        );
        assert_eq!(genus_from(area, orders).unwrap(), genus);
    }
    pass(1, "Euler characteristics exact, areas to 1e-12, genus roundtrips");
}

#[test]
fn criterion_2_triangle_group_validity() {
    for (p, q, r) in [(2u32, 3u32, 7u32), (2, 3, 8), (2, 4, 5), (3, 3, 4)] {
        let generators = triangle_group_generators(p, q, r).unwrap();
        for (generator, order) in generators.iter().zip([p, q, r]) {
            match generator.classify() {
                IsometryKind::Elliptic { .. } => {}
                other => panic!("({p},{q},{r}): generator classifies {other:?}"),
            }
            let expected_trace = 2.0 * (PI / f64::from(order)).cos();
            assert!(
                (generator.trace().abs() - expected_trace).abs() <= 1e-9,
                "({p},{q},{r}) order {order}: trace"
            );
            assert!(
                generator.power(order).is_identity_within(1e-9),
                "({p},{q},{r}) order {order}: R^m"
            );
        }
        let product = generators[0].compose(&generators[1]).compose(&generators[2]);
        assert!(
            product.is_identity_within(1e-9),
            "({p},{q},{r}): defining relation"
        );
    }
    pass(2, "triangle generators elliptic with exact traces, orders, and relation");
}

#[test]
fn criterion_3_elliptic_class_census() {
    let presentation = GroupPresentation::triangle(2, 3, 7).unwrap();
    for depth in [6usize, 8] {
        let set = enumerate_elements(&presentation, depth, &EnumerationOptions::default()).unwrap();
        let partition = conjugacy_classes(&set, depth).unwrap();
        let elliptic = partition
            .records
            .iter()
            .filter(|r| r.kind.is_elliptic())
            .count();
        assert_eq!(elliptic, 9, "elliptic classes at depth {depth}");
        assert_eq!(
            cone_orders(&partition),
            vec![2, 3, 7],
            "cone points at depth {depth}"
        );
    }
    pass(3, "nine elliptic classes at depths 6 and 8, grouping into cones {2,3,7}");
}

/// Independent systole oracle: minimal hyperbolic |trace| over all freely
/// reduced words of length <= 12, by direct tree search without any
/// deduplication or conjugacy machinery.
fn brute_force_systole_237() -> f64 {
    let [r1, r2, r3] = triangle_group_generators(2, 3, 7).unwrap();
    let letters = [r1, r1.inverse(), r2, r2.inverse(), r3, r3.inverse()];
    let inverse_of = [1usize, 0, 3, 2, 5, 4];
    let mut min_trace = f64::INFINITY;
    let mut stack: Vec<(MoebiusElement, usize, u8)> =
        (0..6).map(|i| (letters[i], i, 1)).collect();
    while let Some((matrix, last, length)) = stack.pop() {
        let trace = matrix.trace().abs();
        if trace > 2.0 + 1e-9 && trace < min_trace {
            min_trace = trace;
        }
        if length < 12 {
            for (i, letter) in letters.iter().enumerate() {
                if i != inverse_of[last] {
                    stack.push((matrix.compose(letter), i, length + 1));
                }
            }
        }
    }
    2.0 * (0.5 * min_trace).acosh()
}

#[test]
fn criterion_4_length_spectrum_stability() {
    let presentation = GroupPresentation::triangle(2, 3, 7).unwrap();
    let options = EnumerationOptions::default();
    let l_max = 4.0;
    let shallow = length_spectrum(&presentation, l_max, 12, &options).unwrap();
    let deep = length_spectrum(&presentation, l_max, 14, &options).unwrap();

    // Entries below the bound reported at the shallower depth must agree.
    let bound = shallow.completeness_bound;
    assert!(bound > 1.0, "useful bound, got {bound}");
    let below = |s: &LengthSpectrum| {
        s.entries
            .iter()
            .filter(|e| e.length < bound)
            .cloned()
            .collect::<Vec<_>>()
    };
    let (first, second) = (below(&shallow), below(&deep));
    assert_eq!(first.len(), second.len(), "entry counts below {bound}");
    for (a, b) in first.iter().zip(&second) {
        assert!((a.length - b.length).abs() <= 1e-6, "{} vs {}", a.length, b.length);
        assert_eq!(a.multiplicity, b.multiplicity, "multiplicity at {}", a.length);
    }

    let oracle = brute_force_systole_237();
    let systole = deep.systole().expect("systole enumerated");
    assert!(
        (systole - oracle).abs() <= 1e-9,
        "systole {systole} vs brute force {oracle}"
    );
    pass(4, "spectra at depths 12 and 14 agree below the bound; systole matches brute force");
}

#[test]
fn criterion_5_weyl_fourier_convention() {
    let pair = gaussian_heat_pair(1e-3);
    let quad = QuadSpec::default();
    for area in [PI / 21.0, 4.0 * PI] {
        let term = identity_term(area, &pair, &quad).unwrap();
        let ratio = 4.0 * PI * 1e-3 * term / area;
        assert!(
            (ratio - 1.0).abs() <= 0.03,
            "area {area}: Weyl ratio {ratio}"
        );
    }
    pass(5, "identity term reproduces area/(4 pi t) at t = 1e-3 within 3 percent");
}

#[test]
fn criterion_6_trace_formula_positivity() {
    let structure = orbispec::orbifold::HyperbolicStructure::triangle(2, 3, 7).unwrap();
    let options = EnumerationOptions::default();
    let quad = QuadSpec::default();
    for t in [0.5, 1.0] {
        let pair = gaussian_heat_pair(t);
        let zero_mode = (t / 4.0).exp();

        let mut previous: Option<(f64, f64)> = None;
        for l_max in [3.0, 4.0, 5.0] {
            let inputs =
                GeometricInputs::from_structure(&structure, l_max, 14, &options).unwrap();
            let report = geometric_side(&inputs, &pair, 12, &quad).unwrap();
            let budget = report.error_budget.total();
            assert!(
                report.total >= zero_mode - budget,
                "t = {t}, l_max = {l_max}: {} < {zero_mode} - {budget}",
                report.total
            );
            if let Some((previous_total, previous_budget)) = previous {
                // Extending the spectrum adds positive hyperbolic terms; the
                // growth is covered by the tail bound reported at the
                // smaller cutoff.
                assert!(report.total >= previous_total - 1e-12);
                assert!(
                    (report.total - previous_total).abs() <= previous_budget,
                    "t = {t}, l_max = {l_max}: increment {} vs budget {previous_budget}",
                    report.total - previous_total
                );
            }
            previous = Some((report.total, budget));
        }
    }
    pass(6, "geometric side dominates the zero mode and is monotone within tail bounds");
}

/// Smallest eigenvalue of a symmetric matrix by cyclic Jacobi rotations
/// (test-side oracle, independent of the library's linear algebra).
#[allow(clippy::needless_range_loop)]
fn jacobi_smallest_eigenvalue(mut a: Vec<Vec<f64>>) -> f64 {
    let n = a.len();
    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p][q] * a[p][q];
            }
        }
        if off < 1e-300 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = 0.5 * (a[q][q] - a[p][p]) / a[p][q];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).fold(f64::INFINITY, f64::min)
}

#[test]
fn criterion_7_psi_asymptotics_and_independence() {
    for m in 2u32..=10 {
        let ratio = psi_value(m, 10.0) / psi_asymptotic(m, 10.0);
        assert!((ratio - 1.0).abs() <= 1e-3, "m = {m}: ratio {ratio}");
    }

    // Gram matrix of psi_2..psi_12 sampled on [0, 20] with step 0.05.
    let n = (20.0f64 / 0.05).round() as usize + 1;
    let basis: Vec<Vec<f64>> = (2u32..=12)
        .map(|m| (0..n).map(|i| psi_value(m, 0.05 * i as f64)).collect())
        .collect();
    let gram: Vec<Vec<f64>> = basis
        .iter()
        .map(|x| {
            basis
                .iter()
                .map(|y| x.iter().zip(y).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let smallest = jacobi_smallest_eigenvalue(gram).max(0.0).sqrt();
    assert!(smallest > 1e-8, "smallest singular value {smallest:e}");
    pass(7, "psi asymptotics within 1e-3 at r = 10; Gram smallest singular value > 1e-8");
}

struct SplitMix(u64);

impl SplitMix {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    fn uniform(&mut self) -> f64 {
        (self.next() >> 11) as f64 / (1u64 << 53) as f64
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }
}

#[test]
fn criterion_8_decomposition_oracle_equivalence() {
    let orders: Vec<u32> = (2..=12).collect();
    let grid_n = (15.0f64 / 0.05).round() as usize + 1;
    let basis: Vec<Vec<f64>> = orders
        .iter()
        .map(|&m| (0..grid_n).map(|i| psi_value(m, 0.05 * i as f64)).collect())
        .collect();
    let gram: Vec<Vec<f64>> = basis
        .iter()
        .map(|x| {
            basis
                .iter()
                .map(|y| x.iter().zip(y).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();

    // Exhaustive residual minimization over all multisets with per-order
    // counts <= 3: || S - A c ||^2 = ||S||^2 - 2 c.b + c^T G c.
    let brute_force = |target: &[f64]| -> Vec<u32> {
        let correlation: Vec<f64> = basis
            .iter()
            .map(|col| col.iter().zip(target).map(|(a, b)| a * b).sum())
            .collect();
        let target_sq: f64 = target.iter().map(|v| v * v).sum();
        let k = orders.len();
        let mut counts = vec![0u32; k];
        let mut best = (f64::INFINITY, vec![0u32; k]);
        loop {
            let mut residual_sq = target_sq;
            for i in 0..k {
                let ci = f64::from(counts[i]);
                if ci == 0.0 {
                    continue;
                }
                residual_sq -= 2.0 * ci * correlation[i];
                for j in 0..k {
                    residual_sq += ci * gram[i][j] * f64::from(counts[j]);
                }
            }
            if residual_sq < best.0 {
                best = (residual_sq, counts.clone());
            }
            let mut pos = 0;
            loop {
                if pos == k {
                    let mut multiset = Vec::new();
                    for (i, &m) in orders.iter().enumerate() {
                        multiset.extend(std::iter::repeat_n(m, best.1[i] as usize));
                    }
                    return multiset;
                }
                if counts[pos] < 3 {
                    counts[pos] += 1;
                    break;
                }
                counts[pos] = 0;
                pos += 1;
            }
        }
    };

    let mut rng = SplitMix(20260808);
    for trial in 0..50u64 {
        let mut counts = [0u32; 13];
        for _ in 0..(1 + rng.below(5)) {
            let m = 2 + rng.below(11) as usize;
            if counts[m] < 3 {
                counts[m] += 1;
            }
        }
        let truth: Vec<u32> = (2u32..=12)
            .flat_map(|m| std::iter::repeat_n(m, counts[m as usize] as usize))
            .collect();

        for noisy in [false, true] {
            let mut noise = SplitMix(7000 + trial);
            let values: Vec<f64> = (0..grid_n)
                .map(|i| {
                    let r = 0.05 * i as f64;
                    let clean: f64 = truth.iter().map(|&m| psi_value(m, r)).sum();
                    if noisy {
                        clean * (1.0 + 1e-6 * (2.0 * noise.uniform() - 1.0))
                    } else {
                        clean
                    }
                })
                .collect();
            let samples =
                SampledFunction::new(SampleVariable::R, 0.0, 0.05, values.clone()).unwrap();
            let mode = if noisy {
                DecomposeMode::Noisy
            } else {
                DecomposeMode::Exact
            };
            let recovered = decompose_cone_sum(&samples, 12, mode).unwrap();
            assert_eq!(recovered, truth, "trial {trial}, noisy {noisy}");
            assert_eq!(
                recovered,
                brute_force(&values),
                "trial {trial}, noisy {noisy}: brute force disagrees"
            );
        }
    }
    pass(8, "50 random multisets recovered exactly (clean and 1e-6 noise), matching brute force");
}

/// Minimal distance between singular-support points, over the pairs whose
/// smaller member is below the peeling cutoff (those get fitted; gaps among
/// subtraction-only iterates beyond the cutoff never enter a fit window).
fn min_gap(model: &WaveTraceModel, l_max: f64) -> f64 {
    let mut positions: Vec<f64> = model.singular_part.iter().map(|&(p, _)| p).collect();
    positions.sort_by(f64::total_cmp);
    positions
        .windows(2)
        .filter(|w| w[0] <= l_max)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

fn roundtrip(
    label: &str,
    spectrum: &LengthSpectrum,
    orders: &[u32],
    area: f64,
    l_max: f64,
) {
    let grid_end = 20.0;
    let model = WaveTraceModel::from_spectrum(spectrum, orders, area, grid_end);
    let sigma = min_gap(&model, l_max) / 6.0;
    let grid = TimeGrid::from_step(sigma / 4.0, grid_end);
    let trace = synthesize_mollified(&model, sigma, &grid).unwrap();
    let result = full_inverse(&trace, area, 12).unwrap();

    assert_eq!(
        result.spectrum.entries.len(),
        spectrum.entries.len(),
        "{label}: primitive count"
    );
    for (recovered, truth) in result.spectrum.entries.iter().zip(&spectrum.entries) {
        assert!(
            (recovered.length - truth.length).abs() <= 1e-3,
            "{label}: length {} vs {}",
            recovered.length,
            truth.length
        );
        assert_eq!(
            recovered.multiplicity, truth.multiplicity,
            "{label}: multiplicity at {}",
            truth.length
        );
    }
    let mut expected_orders = orders.to_vec();
    expected_orders.sort_unstable();
    assert_eq!(result.cone_orders, expected_orders, "{label}: cone orders");
    let genus = genus_from(area, orders).unwrap();
    assert_eq!(result.genus, genus, "{label}: genus");
}

#[test]
fn criterion_9_theorem_roundtrip_237() {
    let presentation = GroupPresentation::triangle(2, 3, 7).unwrap();
    let spectrum =
        length_spectrum(&presentation, 6.0, 20, &EnumerationOptions::default()).unwrap();
    assert!(spectrum.entries.len() >= 30, "rich spectrum below 6");
    let area = OrbifoldSignature::new(0, vec![2, 3, 7])
        .unwrap()
        .area_gauss_bonnet()
        .unwrap();
    roundtrip("(2,3,7)", &spectrum, &[2, 3, 7], area, 6.0);
    pass(9, "(2,3,7): lengths < 6, multiplicities, cone orders, and genus recovered");
}

#[test]
fn criterion_9_theorem_roundtrip_genus_two() {
    let presentation = GroupPresentation::new(&octagon_generators()).unwrap();
    let spectrum =
        length_spectrum(&presentation, 5.0, 6, &EnumerationOptions::default()).unwrap();
    assert_eq!(spectrum.entries.len(), 2, "two primitive lengths below 5");
    let area = OrbifoldSignature::new(2, vec![])
        .unwrap()
        .area_gauss_bonnet()
        .unwrap();
    roundtrip("genus 2", &spectrum, &[], area, 5.0);

    // Constant eigenfunction sanity: the zero mode r_0 = i/2 is in-strip.
    let pair = gaussian_heat_pair(1.0);
    assert!(pair.h_complex(Complex64::new(0.0, 0.5)).is_ok());
    pass(9, "genus 2 octagon: no cones, genus 2, lengths and multiplicities recovered");
}
