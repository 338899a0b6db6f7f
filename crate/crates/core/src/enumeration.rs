//! Breadth-first enumeration of group elements by word length, with
//! tolerance-based deduplication of the underlying matrices.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::moebius::{IsometryKind, MoebiusElement};

/// Default entrywise tolerance identifying two matrices as the same element.
pub const DEFAULT_DEDUP_TOL: f64 = 1e-8;

/// Default cap on the number of enumerated elements.
pub const DEFAULT_BUDGET: usize = 5_000_000;

/// Generators of a Fuchsian group, closed under inverses, with one label
/// symbol per generator and inverse.
#[derive(Debug, Clone)]
pub struct GroupPresentation {
    alphabet: Vec<(char, MoebiusElement)>,
}

impl GroupPresentation {
    /// Builds a presentation from generator matrices. Inverses are appended
    /// unless they coincide with a listed generator (involutions). Labels are
    /// `a, b, c, ...` for generators and `A, B, C, ...` for their inverses.
    pub fn new(generators: &[MoebiusElement]) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidPresentation("no generators given".into()));
        }
        if generators.len() > 26 {
            return Err(Error::InvalidPresentation(format!(
                "{} generators exceed the 26 labels available",
                generators.len()
            )));
        }
        let mut alphabet = Vec::new();
        for (i, gen) in generators.iter().enumerate() {
            match gen.classify() {
                IsometryKind::Parabolic | IsometryKind::Identity => {
                    return Err(Error::InvalidPresentation(format!(
                        "generator {i} is within the parabolic trace band"
                    )));
                }
                _ => {}
            }
            let label = (b'a' + i as u8) as char;
            alphabet.push((label, *gen));
            let inverse = gen.inverse();
            if inverse.max_abs_diff(gen) > DEFAULT_DEDUP_TOL {
                alphabet.push((label.to_ascii_uppercase(), inverse));
            }
        }
        Ok(GroupPresentation { alphabet })
    }

    pub fn triangle(p: u32, q: u32, r: u32) -> Result<Self> {
        let generators = crate::orbifold::triangle_group_generators(p, q, r)?;
        GroupPresentation::new(&generators)
    }

    /// Generator/inverse symbols with their matrices, in label order.
    pub fn alphabet(&self) -> &[(char, MoebiusElement)] {
        &self.alphabet
    }

    fn matrix_of(&self, symbol: char) -> Option<&MoebiusElement> {
        self.alphabet
            .iter()
            .find(|(label, _)| *label == symbol)
            .map(|(_, m)| m)
    }

    /// Symbol for the inverse of `symbol`, when the inverse is listed
    /// separately (involutions are their own inverse).
    fn inverse_symbol(&self, symbol: char) -> char {
        let flipped = if symbol.is_ascii_lowercase() {
            symbol.to_ascii_uppercase()
        } else {
            symbol.to_ascii_lowercase()
        };
        if self.matrix_of(flipped).is_some() {
            flipped
        } else {
            symbol
        }
    }
}

/// One enumerated element: its canonical (shortest, lexicographically first)
/// word and its matrix.
#[derive(Debug, Clone)]
pub struct EnumeratedElement {
    pub word: String,
    pub matrix: MoebiusElement,
}

/// Grid-bucketed index for entrywise-tolerance matrix lookup.
#[derive(Debug, Clone)]
pub struct MatrixIndex {
    cell: f64,
    tol: f64,
    buckets: HashMap<[i64; 4], Vec<u32>>,
}

impl MatrixIndex {
    pub fn new(tol: f64) -> Self {
        MatrixIndex {
            cell: 2.0 * tol,
            tol,
            buckets: HashMap::new(),
        }
    }

    fn key_at(&self, m: &MoebiusElement, shift: f64) -> [i64; 4] {
        [
            ((m.a + shift) / self.cell).floor() as i64,
            ((m.b + shift) / self.cell).floor() as i64,
            ((m.c + shift) / self.cell).floor() as i64,
            ((m.d + shift) / self.cell).floor() as i64,
        ]
    }

    /// Index of a stored element within tolerance, if any.
    pub fn find(&self, m: &MoebiusElement, elements: &[EnumeratedElement]) -> Option<u32> {
        let lo = self.key_at(m, -self.tol);
        let hi = self.key_at(m, self.tol);
        let mut probe = [0i64; 4];
        for da in lo[0]..=hi[0] {
            probe[0] = da;
            for db in lo[1]..=hi[1] {
                probe[1] = db;
                for dc in lo[2]..=hi[2] {
                    probe[2] = dc;
                    for dd in lo[3]..=hi[3] {
                        probe[3] = dd;
                        if let Some(bucket) = self.buckets.get(&probe) {
                            for &idx in bucket {
                                if elements[idx as usize].matrix.max_abs_diff(m) <= self.tol {
                                    return Some(idx);
                                }
                            }
                        }
                    }
                }
            }
        }
        None
    }

    fn insert(&mut self, m: &MoebiusElement, idx: u32) {
        self.buckets.entry(self.key_at(m, 0.0)).or_default().push(idx);
    }
}

/// All elements reachable by words of length at most `max_word_length`,
/// deduplicated, in (word length, lexicographic) order.
#[derive(Debug, Clone)]
pub struct ElementSet {
    pub elements: Vec<EnumeratedElement>,
    index: MatrixIndex,
    /// `level_start[k]` is the index of the first element of word length k;
    /// a final entry holds `elements.len()`.
    level_start: Vec<usize>,
}

/// Knobs for enumeration.
#[derive(Debug, Clone, Copy)]
pub struct EnumerationOptions {
    pub dedup_tol: f64,
    pub budget: usize,
}

impl Default for EnumerationOptions {
    fn default() -> Self {
        EnumerationOptions {
            dedup_tol: DEFAULT_DEDUP_TOL,
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Enumerates all reduced words up to the given length, deduplicated by
/// matrix (keeping the shortest word per element, lexicographically first
/// among equals). Deterministic: output order is (word length, word).
pub fn enumerate_elements(
    presentation: &GroupPresentation,
    max_word_length: usize,
    options: &EnumerationOptions,
) -> Result<ElementSet> {
    let mut elements = vec![EnumeratedElement {
        word: String::new(),
        matrix: MoebiusElement::IDENTITY,
    }];
    let mut index = MatrixIndex::new(options.dedup_tol);
    index.insert(&MoebiusElement::IDENTITY, 0);
    let mut level_start = vec![0usize, 1];

    let mut alphabet = presentation.alphabet().to_vec();
    alphabet.sort_by_key(|(label, _)| *label);

    for depth in 1..=max_word_length {
        let (parents_from, parents_to) = (level_start[depth - 1], level_start[depth]);
        for parent in parents_from..parents_to {
            let parent_word = elements[parent].word.clone();
            let parent_matrix = elements[parent].matrix;
            let last = parent_word.chars().last();
            for &(symbol, generator) in &alphabet {
                // Free reduction: never append a symbol cancelling the last.
                if let Some(last) = last {
                    if presentation.inverse_symbol(last) == symbol {
                        continue;
                    }
                }
                let matrix = parent_matrix.compose(&generator);
                if index.find(&matrix, &elements).is_some() {
                    continue;
                }
                if elements.len() >= options.budget {
                    return Err(Error::BudgetExceeded {
                        cap: options.budget,
                        depth,
                    });
                }
                let mut word = parent_word.clone();
                word.push(symbol);
                index.insert(&matrix, elements.len() as u32);
                elements.push(EnumeratedElement { word, matrix });
            }
        }
        level_start.push(elements.len());
    }

    Ok(ElementSet {
        elements,
        index,
        level_start,
    })
}

impl ElementSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn max_word_length(&self) -> usize {
        self.level_start.len() - 2
    }

    /// Index of the enumerated element matching `m` within the dedup
    /// tolerance, if present.
    pub fn find(&self, m: &MoebiusElement) -> Option<usize> {
        self.index.find(m, &self.elements).map(|i| i as usize)
    }

    /// Elements of word length at most `depth` (a prefix of `elements`).
    pub fn up_to_length(&self, depth: usize) -> &[EnumeratedElement] {
        let end = self.level_start[(depth + 1).min(self.level_start.len() - 1)];
        &self.elements[..end]
    }
}
