//! Conjugacy classes of enumerated elements, their primitive decomposition,
//! the oriented primitive length spectrum, and cone-point recovery.

use serde::{Deserialize, Serialize};

use crate::enumeration::{enumerate_elements, ElementSet, EnumerationOptions, GroupPresentation};
use crate::error::{Error, Result};
use crate::moebius::{IsometryKind, MoebiusElement};

/// Lengths closer than this merge into one spectrum entry.
pub const LENGTH_MERGE_TOL: f64 = 1e-6;

/// One conjugacy class of the enumerated ball.
#[derive(Debug, Clone)]
pub struct ConjugacyClassRecord {
    pub id: usize,
    pub representative_word: String,
    pub matrix: MoebiusElement,
    pub kind: IsometryKind,
    /// Number of ball elements assigned to this class.
    pub size_in_ball: usize,
    /// Class id of the primitive root (self for primitive classes).
    pub primitive_root: usize,
    /// k with this class equal to the k-th power of its root (elliptic
    /// classes store their exponent here as well).
    pub power: u32,
    /// Hyperbolic only: translation length k * l_c and norm e^length.
    pub length: Option<f64>,
    pub norm: Option<f64>,
    /// Elliptic only: order m of the primitive root, exponent l in [1, m-1],
    /// and the full rotation angle 2 pi l / m in (0, 2 pi).
    pub cone_order: Option<u32>,
    pub exponent: Option<u32>,
    pub rotation_angle: Option<f64>,
    /// Class of the inverse representative, when enumerated.
    pub inverse_class: Option<usize>,
    /// True when the class is conjugate to its own inverse (legal, but makes
    /// odd oriented multiplicities possible).
    pub self_inverse: bool,
}

impl ConjugacyClassRecord {
    pub fn is_primitive(&self) -> bool {
        self.primitive_root == self.id && self.power == 1
    }
}

/// A partition of the enumerated ball into conjugacy classes.
#[derive(Debug, Clone)]
pub struct ClassPartition {
    pub records: Vec<ConjugacyClassRecord>,
    /// Element index -> class id (identity and filtered elements are None).
    pub assignment: Vec<Option<usize>>,
    pub conjugator_depth: usize,
}

/// Partitions all non-identity elements of `set` into conjugacy classes,
/// using every enumerated element of word length at most `conjugator_depth`
/// as a candidate conjugator. Matrix matching uses the entrywise tolerance
/// the element set was deduplicated with.
///
/// Deterministic: elements are scanned in (word length, lexicographic) order;
/// the first unassigned element opens a class and its whole conjugation orbit
/// is marked before the scan proceeds.
pub fn conjugacy_classes(set: &ElementSet, conjugator_depth: usize) -> Result<ClassPartition> {
    conjugacy_classes_filtered(set, conjugator_depth, None)
}

/// Same as [`conjugacy_classes`], restricted to hyperbolic elements of length
/// at most `max_length` (elliptic elements are always kept). Conjugation
/// preserves the trace, so the restriction never cuts an orbit.
pub fn conjugacy_classes_filtered(
    set: &ElementSet,
    conjugator_depth: usize,
    max_length: Option<f64>,
) -> Result<ClassPartition> {
    if conjugator_depth > set.max_word_length() {
        return Err(Error::InvalidInput(format!(
            "conjugator depth {conjugator_depth} exceeds enumerated word length {}",
            set.max_word_length()
        )));
    }
    let conjugators: Vec<MoebiusElement> = set
        .up_to_length(conjugator_depth)
        .iter()
        .map(|e| e.matrix)
        .collect();

    let keep = |kind: &IsometryKind| -> bool {
        match kind {
            IsometryKind::Elliptic { .. } => true,
            IsometryKind::Hyperbolic { length, .. } => {
                max_length.is_none_or(|cap| *length <= cap)
            }
            _ => false,
        }
    };

    let mut assignment: Vec<Option<usize>> = vec![None; set.len()];
    let mut records: Vec<ConjugacyClassRecord> = Vec::new();

    for (idx, element) in set.elements.iter().enumerate() {
        if assignment[idx].is_some() {
            continue;
        }
        let kind = element.matrix.classify();
        if !keep(&kind) {
            continue;
        }
        let id = records.len();
        assignment[idx] = Some(id);
        let mut size_in_ball = 1usize;
        for w in &conjugators {
            let conjugate = w.compose(&element.matrix).compose(&w.inverse());
            if let Some(j) = set.find(&conjugate) {
                if assignment[j].is_none() {
                    assignment[j] = Some(id);
                    size_in_ball += 1;
                }
            }
        }
        let (length, norm) = match kind {
            IsometryKind::Hyperbolic { length, norm } => (Some(length), Some(norm)),
            _ => (None, None),
        };
        records.push(ConjugacyClassRecord {
            id,
            representative_word: element.word.clone(),
            matrix: element.matrix,
            kind,
            size_in_ball,
            primitive_root: id,
            power: 1,
            length,
            norm,
            cone_order: None,
            exponent: None,
            rotation_angle: None,
            inverse_class: None,
            self_inverse: false,
        });
    }

    // Link inverse classes.
    for (id, record) in records.iter_mut().enumerate() {
        let inverse = record.matrix.inverse();
        let inverse_class = set.find(&inverse).and_then(|j| assignment[j]);
        record.inverse_class = inverse_class;
        record.self_inverse = inverse_class == Some(id);
    }

    let mut partition = ClassPartition {
        records,
        assignment,
        conjugator_depth,
    };
    primitive_decomposition(&mut partition, set)?;
    Ok(partition)
}

/// Fills `primitive_root` and `power` for every class: hyperbolic classes
/// point at the class of their k-th root matrix, elliptic classes at the
/// rotation by 2 pi / m about the same cone point.
fn primitive_decomposition(partition: &mut ClassPartition, set: &ElementSet) -> Result<()> {
    decompose_hyperbolic(partition, set)?;
    decompose_elliptic(partition, set)
}

fn decompose_hyperbolic(partition: &mut ClassPartition, set: &ElementSet) -> Result<()> {
    let min_length = partition
        .records
        .iter()
        .filter_map(|r| r.length)
        .fold(f64::INFINITY, f64::min);
    if !min_length.is_finite() {
        return Ok(());
    }
    for id in 0..partition.records.len() {
        let Some(length) = partition.records[id].length else {
            continue;
        };
        let matrix = partition.records[id].matrix;
        let max_power = (length / min_length * (1.0 + 1e-9) + 1e-6).floor() as u32;
        for k in (2..=max_power).rev() {
            let root = hyperbolic_root(&matrix, length, k);
            let Some(j) = set.find(&root) else {
                continue;
            };
            match partition.assignment[j] {
                Some(root_class) => {
                    let root_length = partition.records[root_class]
                        .length
                        .expect("root of a hyperbolic class is hyperbolic");
                    debug_assert!((f64::from(k) * root_length - length).abs() < 1e-6 * length.max(1.0));
                    partition.records[id].primitive_root = root_class;
                    partition.records[id].power = k;
                }
                None => {
                    return Err(Error::MissingRoot {
                        class: partition.records[id].representative_word.clone(),
                    });
                }
            }
            break;
        }
    }
    Ok(())
}

/// Unique hyperbolic k-th root in PSL(2, R): g = cosh(l/2) I + sinh(l/2) A
/// with A^2 = I, so the root replaces l by l/k on the same axis.
fn hyperbolic_root(matrix: &MoebiusElement, length: f64, k: u32) -> MoebiusElement {
    let half = 0.5 * length;
    let (ch, sh) = (half.cosh(), half.sinh());
    let axis = [
        (matrix.a - ch) / sh,
        matrix.b / sh,
        matrix.c / sh,
        (matrix.d - ch) / sh,
    ];
    let half_root = half / f64::from(k);
    let (rch, rsh) = (half_root.cosh(), half_root.sinh());
    MoebiusElement::new(
        rch + rsh * axis[0],
        rsh * axis[1],
        rsh * axis[2],
        rch + rsh * axis[3],
    )
    .expect("hyperbolic root stays in the group")
}

fn decompose_elliptic(partition: &mut ClassPartition, set: &ElementSet) -> Result<()> {
    // Full rotation angles first.
    for record in partition.records.iter_mut() {
        if record.kind.is_elliptic() {
            record.rotation_angle = Some(rotation_angle(&record.matrix));
        }
    }

    // Candidate primitives: classes whose rotation angle is 2 pi / m. Sorted
    // by descending order so nested powers (for example the square of an
    // order-4 rotation, which looks like an order-2 primitive) resolve to the
    // largest-order root.
    let mut candidates: Vec<(usize, u32)> = partition
        .records
        .iter()
        .filter_map(|r| {
            let angle = r.rotation_angle?;
            let m = (2.0 * std::f64::consts::PI / angle).round();
            if m >= 2.0 && (angle * m / (2.0 * std::f64::consts::PI) - 1.0).abs() <= 1e-6 {
                Some((r.id, m as u32))
            } else {
                None
            }
        })
        .collect();
    candidates.sort_by_key(|&(id, m)| (std::cmp::Reverse(m), id));

    for id in 0..partition.records.len() {
        if !partition.records[id].kind.is_elliptic() {
            continue;
        }
        let mut resolved = false;
        'search: for &(candidate, order) in &candidates {
            let base = partition.records[candidate].matrix;
            for exponent in 1..order {
                let power = base.power(exponent);
                let class_of_power = set.find(&power).and_then(|j| partition.assignment[j]);
                if class_of_power == Some(id) {
                    partition.records[id].primitive_root = candidate;
                    partition.records[id].power = exponent;
                    partition.records[id].exponent = Some(exponent);
                    partition.records[id].cone_order = Some(order);
                    resolved = true;
                    break 'search;
                }
            }
        }
        if !resolved {
            return Err(Error::MissingRoot {
                class: partition.records[id].representative_word.clone(),
            });
        }
    }
    Ok(())
}

/// Full rotation angle in (0, 2 pi) of an elliptic element: the argument of
/// the derivative at the fixed point, which conjugation preserves.
fn rotation_angle(matrix: &MoebiusElement) -> f64 {
    let trace = matrix.trace();
    debug_assert!(matrix.c != 0.0, "elliptic elements have c != 0");
    let x = (matrix.a - matrix.d) / (2.0 * matrix.c);
    let y = (4.0 - trace * trace).max(0.0).sqrt() / (2.0 * matrix.c.abs());
    // arg of (c z0 + d)^{-2}
    let re = matrix.c * x + matrix.d;
    let im = matrix.c * y;
    let mut angle = -2.0 * im.atan2(re);
    if angle <= 0.0 {
        angle += 2.0 * std::f64::consts::PI;
    }
    angle
}

/// Multiset of cone-point orders: one entry per primitive elliptic class.
pub fn cone_orders(partition: &ClassPartition) -> Vec<u32> {
    let mut orders: Vec<u32> = partition
        .records
        .iter()
        .filter(|r| r.kind.is_elliptic() && r.is_primitive())
        .filter_map(|r| r.cone_order)
        .collect();
    orders.sort_unstable();
    orders
}

/// Enumerates the group to `depth` and returns the cone-point orders.
pub fn cone_points(
    presentation: &GroupPresentation,
    depth: usize,
    options: &EnumerationOptions,
) -> Result<Vec<u32>> {
    let set = enumerate_elements(presentation, depth, options)?;
    let partition = conjugacy_classes(&set, depth)?;
    Ok(cone_orders(&partition))
}

/// One length of the oriented primitive length spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub length: f64,
    pub multiplicity: u32,
    /// Representative word of one class at this length, when known.
    pub word: Option<String>,
}

/// Ascending primitive lengths with oriented multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthSpectrum {
    pub entries: Vec<SpectrumEntry>,
    /// Length below which the list is certified stable: spectra computed two
    /// word lengths apart agree below this bound.
    pub completeness_bound: f64,
}

impl LengthSpectrum {
    pub fn systole(&self) -> Option<f64> {
        self.entries.first().map(|e| e.length)
    }
}

/// Spectrum of one enumerated ball, without a stability certificate.
fn raw_spectrum(
    presentation: &GroupPresentation,
    l_max: f64,
    depth: usize,
    options: &EnumerationOptions,
) -> Result<Vec<SpectrumEntry>> {
    let set = enumerate_elements(presentation, depth, options)?;
    let partition =
        conjugacy_classes_filtered(&set, depth, Some(l_max + LENGTH_MERGE_TOL))?;
    let mut primitives: Vec<&ConjugacyClassRecord> = partition
        .records
        .iter()
        .filter(|r| r.kind.is_hyperbolic() && r.is_primitive())
        .filter(|r| r.length.expect("hyperbolic") <= l_max)
        .collect();
    primitives.sort_by(|x, y| x.length.unwrap().total_cmp(&y.length.unwrap()));

    let mut entries: Vec<SpectrumEntry> = Vec::new();
    for record in primitives {
        let length = record.length.unwrap();
        match entries.last_mut() {
            Some(entry) if length - entry.length <= LENGTH_MERGE_TOL => entry.multiplicity += 1,
            _ => entries.push(SpectrumEntry {
                length,
                multiplicity: 1,
                word: Some(record.representative_word.clone()),
            }),
        }
    }
    Ok(entries)
}

/// Oriented primitive length spectrum up to `l_max` at the given enumeration
/// depth. The completeness bound is operational: the largest length below
/// which the spectra at `depth - 2` and `depth` agree.
pub fn length_spectrum(
    presentation: &GroupPresentation,
    l_max: f64,
    depth: usize,
    options: &EnumerationOptions,
) -> Result<LengthSpectrum> {
    if !l_max.is_finite() || l_max <= 0.0 {
        return Err(Error::InvalidInput(format!("l_max {l_max} must be positive")));
    }
    let entries = raw_spectrum(presentation, l_max, depth, options)?;
    let completeness_bound = if depth >= 2 {
        let shallow = raw_spectrum(presentation, l_max, depth - 2, options)?;
        agreement_bound(&shallow, &entries, l_max)
    } else {
        0.0
    };
    Ok(LengthSpectrum {
        entries,
        completeness_bound,
    })
}

/// Largest L <= l_max such that two spectra agree on all entries below L.
pub fn agreement_bound(first: &[SpectrumEntry], second: &[SpectrumEntry], l_max: f64) -> f64 {
    let n = first.len().min(second.len());
    for i in 0..n {
        let (a, b) = (&first[i], &second[i]);
        if (a.length - b.length).abs() > LENGTH_MERGE_TOL || a.multiplicity != b.multiplicity {
            return a.length.min(b.length);
        }
    }
    match (first.get(n), second.get(n)) {
        (Some(extra), _) | (_, Some(extra)) => extra.length,
        _ => l_max,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumeration::EnumerationOptions;

    fn ball_237(depth: usize) -> (GroupPresentation, ElementSet) {
        let presentation = GroupPresentation::triangle(2, 3, 7).unwrap();
        let set = enumerate_elements(&presentation, depth, &EnumerationOptions::default()).unwrap();
        (presentation, set)
    }

    #[test]
    fn elliptic_census_of_237_is_nine() {
        for depth in [6usize, 8] {
            let (_, set) = ball_237(depth);
            let partition = conjugacy_classes(&set, depth).unwrap();
            let elliptic: Vec<_> = partition
                .records
                .iter()
                .filter(|r| r.kind.is_elliptic())
                .collect();
            assert_eq!(elliptic.len(), 9, "depth {depth}");
            assert_eq!(cone_orders(&partition), vec![2, 3, 7], "depth {depth}");
        }
    }

    #[test]
    fn elliptic_exponent_counts_match_orders() {
        let (_, set) = ball_237(8);
        let partition = conjugacy_classes(&set, 8).unwrap();
        // One class per exponent 1..m-1 per cone point.
        for m in [2u32, 3, 7] {
            let classes: Vec<_> = partition
                .records
                .iter()
                .filter(|r| r.cone_order == Some(m))
                .collect();
            assert_eq!(classes.len(), (m - 1) as usize, "order {m}");
            let mut exponents: Vec<u32> = classes.iter().map(|r| r.exponent.unwrap()).collect();
            exponents.sort_unstable();
            assert_eq!(exponents, (1..m).collect::<Vec<_>>());
        }
    }

    #[test]
    fn powers_of_generators_fold_into_roots() {
        let (_, set) = ball_237(8);
        let partition = conjugacy_classes(&set, 8).unwrap();
        // The square of the order-3 generator is non-primitive with exponent 2.
        let square = partition
            .records
            .iter()
            .find(|r| r.representative_word == "B")
            .expect("b^2 = B enumerated");
        assert!(!square.is_primitive());
        assert_eq!(square.exponent, Some(2));
        assert_eq!(square.cone_order, Some(3));
        let root = &partition.records[square.primitive_root];
        assert_eq!(root.representative_word, "b");
    }

    #[test]
    fn conjugates_land_in_one_class() {
        let (_, set) = ball_237(8);
        let partition = conjugacy_classes(&set, 8).unwrap();
        // Pick a hyperbolic element and any conjugate present in the ball.
        let (idx, element) = set
            .elements
            .iter()
            .enumerate()
            .find(|(_, e)| e.matrix.classify().is_hyperbolic())
            .unwrap();
        let w = &set.elements[3].matrix;
        let conjugate = w.compose(&element.matrix).compose(&w.inverse());
        if let Some(j) = set.find(&conjugate) {
            assert_eq!(partition.assignment[idx], partition.assignment[j]);
        }
    }

    #[test]
    fn trace_is_a_class_invariant() {
        let (_, set) = ball_237(10);
        let partition = conjugacy_classes(&set, 10).unwrap();
        for (idx, element) in set.elements.iter().enumerate() {
            if let Some(class) = partition.assignment[idx] {
                let rep_trace = partition.records[class].matrix.trace().abs();
                assert!((element.matrix.trace().abs() - rep_trace).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn square_of_shortest_class_has_power_two() {
        let (_, set) = ball_237(10);
        let partition = conjugacy_classes(&set, 10).unwrap();
        let shortest = partition
            .records
            .iter()
            .filter(|r| r.kind.is_hyperbolic())
            .min_by(|x, y| x.length.unwrap().total_cmp(&y.length.unwrap()))
            .unwrap();
        let squared = shortest.matrix.power(2);
        let class = partition.assignment[set.find(&squared).expect("square enumerated")]
            .expect("square classified");
        let record = &partition.records[class];
        assert_eq!(record.power, 2);
        assert_eq!(record.primitive_root, shortest.id);
        assert!(
            (record.length.unwrap() - 2.0 * shortest.length.unwrap()).abs() < 1e-9,
            "length ratio"
        );
    }

    #[test]
    fn spectrum_below_systole_is_empty() {
        let presentation = GroupPresentation::triangle(2, 3, 7).unwrap();
        let spectrum =
            length_spectrum(&presentation, 0.9, 8, &EnumerationOptions::default()).unwrap();
        assert!(spectrum.entries.is_empty());
    }

    #[test]
    fn systole_of_237_matches_frozen_value() {
        // Minimal |trace| over all words of length <= 12, computed by the
        // independent brute-force oracle in the acceptance suite; the value
        // is frozen here as a fast regression anchor.
        let presentation = GroupPresentation::triangle(2, 3, 7).unwrap();
        let spectrum =
            length_spectrum(&presentation, 2.0, 10, &EnumerationOptions::default()).unwrap();
        let systole = spectrum.systole().expect("systole below 2");
        assert!((systole - 0.9839865622075772).abs() < 1e-9, "{systole}");
    }

    #[test]
    fn doubled_lengths_appear_as_power_two_classes() {
        let presentation = GroupPresentation::triangle(2, 3, 7).unwrap();
        let set = enumerate_elements(&presentation, 12, &EnumerationOptions::default()).unwrap();
        let partition = conjugacy_classes_filtered(&set, 12, Some(2.5)).unwrap();
        let spectrum = length_spectrum(&presentation, 1.2, 12, &EnumerationOptions::default())
            .unwrap();
        for entry in &spectrum.entries {
            let doubled = partition
                .records
                .iter()
                .filter(|r| r.kind.is_hyperbolic() && r.power == 2)
                .any(|r| (r.length.unwrap() - 2.0 * entry.length).abs() < 1e-6);
            assert!(doubled, "no power-2 class at 2 x {}", entry.length);
        }
    }

    #[test]
    fn inverse_classes_share_length_and_even_multiplicity() {
        let presentation = GroupPresentation::triangle(2, 3, 7).unwrap();
        let set = enumerate_elements(&presentation, 12, &EnumerationOptions::default()).unwrap();
        let partition = conjugacy_classes_filtered(&set, 12, Some(2.2)).unwrap();
        for record in partition.records.iter().filter(|r| r.kind.is_hyperbolic()) {
            let inverse = partition.records[record.inverse_class.expect("inverse enumerated")]
                .length
                .unwrap();
            assert!((inverse - record.length.unwrap()).abs() < 1e-9);
        }
        let spectrum = length_spectrum(&presentation, 2.2, 12, &EnumerationOptions::default())
            .unwrap();
        for entry in &spectrum.entries {
            let self_inverse_present = partition
                .records
                .iter()
                .filter(|r| r.is_primitive() && r.kind.is_hyperbolic())
                .filter(|r| (r.length.unwrap() - entry.length).abs() < LENGTH_MERGE_TOL)
                .any(|r| r.self_inverse);
            assert!(
                entry.multiplicity % 2 == 0 || self_inverse_present,
                "odd multiplicity at {} without a self-inverse class",
                entry.length
            );
        }
    }

    #[test]
    fn budget_overflow_propagates_to_the_spectrum() {
        let presentation = GroupPresentation::triangle(2, 3, 7).unwrap();
        let options = EnumerationOptions {
            budget: 20,
            ..EnumerationOptions::default()
        };
        assert!(matches!(
            length_spectrum(&presentation, 2.0, 8, &options),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn missing_elliptic_root_is_reported_until_reachable() {
        // A single generator rotating by 4 pi / 5 is the square of the
        // order-5 primitive; at depth 1 the primitive is absent and the
        // decomposition must say so, while depth 3 reaches it as the cube.
        let generator =
            MoebiusElement::rotation_about_i(4.0 * std::f64::consts::PI / 5.0);
        let presentation = GroupPresentation::new(&[generator]).unwrap();
        let shallow = enumerate_elements(&presentation, 1, &EnumerationOptions::default()).unwrap();
        assert!(matches!(
            conjugacy_classes(&shallow, 1),
            Err(Error::MissingRoot { .. })
        ));

        let deeper = enumerate_elements(&presentation, 3, &EnumerationOptions::default()).unwrap();
        let partition = conjugacy_classes(&deeper, 3).unwrap();
        assert_eq!(cone_orders(&partition), vec![5]);
        let elliptic = partition
            .records
            .iter()
            .filter(|r| r.kind.is_elliptic())
            .count();
        assert_eq!(elliptic, 4);
    }

    /// Regular-octagon genus-2 surface group: four translations of length
    /// 2 arccosh(1 + sqrt(2)) along axes through i at angles k pi / 4,
    /// satisfying g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3 = 1.
    fn octagon_generators() -> Vec<MoebiusElement> {
        let length = 2.0 * (1.0 + 2.0f64.sqrt()).acosh();
        (0..4)
            .map(|k| {
                let rot =
                    MoebiusElement::rotation_about_i(f64::from(k) * std::f64::consts::PI / 4.0);
                rot.compose(&MoebiusElement::translation(length))
                    .compose(&rot.inverse())
            })
            .collect()
    }

    #[test]
    fn genus_two_octagon_group_has_no_cone_points() {
        let presentation = GroupPresentation::new(&octagon_generators()).unwrap();
        let orders = cone_points(&presentation, 3, &EnumerationOptions::default()).unwrap();
        assert!(orders.is_empty());
    }
}
