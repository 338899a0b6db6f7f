//! Orbifold signatures, Euler characteristics, Gauss-Bonnet areas, and the
//! explicit triangle-group generator construction.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moebius::MoebiusElement;

/// Reduced fraction over i64. Covers every Euler characteristic that desk
/// scale signatures can produce; arithmetic panics on overflow in debug.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    numerator: i64,
    denominator: i64,
}

impl Rational {
    pub fn new(numerator: i64, denominator: i64) -> Self {
        assert!(denominator != 0, "zero denominator");
        let sign = if denominator < 0 { -1 } else { 1 };
        let g = gcd(numerator.unsigned_abs(), denominator.unsigned_abs()) as i64;
        Rational {
            numerator: sign * numerator / g,
            denominator: sign * denominator / g,
        }
    }

    pub fn from_integer(n: i64) -> Self {
        Rational {
            numerator: n,
            denominator: 1,
        }
    }

    pub fn numerator(&self) -> i64 {
        self.numerator
    }

    pub fn denominator(&self) -> i64 {
        self.denominator
    }

    pub fn is_negative(&self) -> bool {
        self.numerator < 0
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / self.denominator as f64
    }
}

impl std::ops::Add for Rational {
    type Output = Rational;

    fn add(self, other: Rational) -> Rational {
        Rational::new(
            self.numerator * other.denominator + other.numerator * self.denominator,
            self.denominator * other.denominator,
        )
    }
}

impl std::ops::Sub for Rational {
    type Output = Rational;

    fn sub(self, other: Rational) -> Rational {
        self + Rational::new(-other.numerator, other.denominator)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.denominator == 1 {
            write!(f, "{}", self.numerator)
        } else {
            write!(f, "{}/{}", self.numerator, self.denominator)
        }
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a.max(1)
}

/// Genus plus the multiset of cone orders (kept sorted).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbifoldSignature {
    pub genus: u32,
    pub cone_orders: Vec<u32>,
}

impl OrbifoldSignature {
    pub fn new(genus: u32, mut cone_orders: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = cone_orders.iter().find(|&&m| m < 2) {
            return Err(Error::InvalidSignature(format!(
                "cone order {bad} must be at least 2"
            )));
        }
        cone_orders.sort_unstable();
        Ok(OrbifoldSignature { genus, cone_orders })
    }

    /// chi(O) = (2 - 2 genus) - sum_j (1 - 1/m_j), as an exact fraction.
    pub fn euler_characteristic(&self) -> Rational {
        let mut chi = Rational::from_integer(2 - 2 * i64::from(self.genus));
        for &m in &self.cone_orders {
            chi = chi - Rational::new(i64::from(m) - 1, i64::from(m));
        }
        chi
    }

    /// Hyperbolic area -2 pi chi(O), defined only when chi < 0.
    pub fn area_gauss_bonnet(&self) -> Result<f64> {
        let chi = self.euler_characteristic();
        if !chi.is_negative() {
            return Err(Error::NotHyperbolic {
                chi: chi.to_string(),
            });
        }
        Ok(-2.0 * PI * chi.to_f64())
    }

    pub fn is_hyperbolic(&self) -> bool {
        self.euler_characteristic().is_negative()
    }
}

/// The unique nonnegative integer genus with
/// area = -2 pi [(2 - 2g) - sum (1 - 1/m_j)], accepted when the solved value
/// is within 1e-6 of an integer.
pub fn genus_from(area: f64, cone_orders: &[u32]) -> Result<u32> {
    if !area.is_finite() || area <= 0.0 {
        return Err(Error::InvalidInput(format!("area {area} must be positive")));
    }
    let cone_defect: f64 = cone_orders
        .iter()
        .map(|&m| 1.0 - 1.0 / f64::from(m))
        .sum();
    let genus_real = 0.5 * (2.0 + area / (2.0 * PI) - cone_defect);
    let rounded = genus_real.round();
    if rounded < 0.0 || (genus_real - rounded).abs() > 1e-6 {
        return Err(Error::Inconsistent { value: genus_real });
    }
    Ok(rounded as u32)
}

/// A signature together with its area and (optionally) explicit generators
/// of a uniformizing group.
#[derive(Debug, Clone)]
pub struct HyperbolicStructure {
    pub signature: OrbifoldSignature,
    pub area: f64,
    pub generators: Option<Vec<MoebiusElement>>,
}

impl HyperbolicStructure {
    pub fn new(signature: OrbifoldSignature, generators: Option<Vec<MoebiusElement>>) -> Result<Self> {
        let area = signature.area_gauss_bonnet()?;
        Ok(HyperbolicStructure {
            signature,
            area,
            generators,
        })
    }

    /// Triangle-group structure for the genus-0 signature with cone orders
    /// {p, q, r}.
    pub fn triangle(p: u32, q: u32, r: u32) -> Result<Self> {
        let generators = triangle_group_generators(p, q, r)?;
        let signature = OrbifoldSignature::new(0, vec![p, q, r])?;
        HyperbolicStructure::new(signature, Some(generators.to_vec()))
    }
}

/// Rotations R1, R2, R3 by 2 pi / p, 2 pi / q, 2 pi / r about the vertices of
/// a hyperbolic triangle with angles pi/p, pi/q, pi/r, satisfying
/// R1 R2 R3 = identity. They generate the orientation-preserving (p, q, r)
/// triangle group uniformizing the genus-0 orbifold with cone orders {p,q,r}.
pub fn triangle_group_generators(p: u32, q: u32, r: u32) -> Result<[MoebiusElement; 3]> {
    if p < 2 || q < 2 || r < 2 {
        return Err(Error::InvalidSignature(format!(
            "triangle orders ({p},{q},{r}) must all be at least 2"
        )));
    }
    let (alpha, beta, gamma) = (
        PI / f64::from(p),
        PI / f64::from(q),
        PI / f64::from(r),
    );
    // 1/p + 1/q + 1/r < 1, tested exactly in integers.
    let (pl, ql, rl) = (u64::from(p), u64::from(q), u64::from(r));
    if ql * rl + pl * rl + pl * ql >= pl * ql * rl {
        let chi = OrbifoldSignature::new(0, vec![p, q, r])
            .expect("orders checked")
            .euler_characteristic();
        return Err(Error::NotHyperbolic {
            chi: chi.to_string(),
        });
    }

    // Side lengths from the dual hyperbolic law of cosines: the side joining
    // two vertices is determined by the three angles.
    let side_12 = side_from_angles(alpha, beta, gamma);
    let side_13 = side_from_angles(alpha, gamma, beta);

    // Vertex 1 at i, vertex 2 straight above it, vertex 3 counterclockwise by
    // alpha off the same ray, so the triangle 1 -> 2 -> 3 is counterclockwise.
    let vertex1 = Complex64::new(0.0, 1.0);
    let vertex2 = Complex64::new(0.0, side_12.exp());
    let vertex3 = MoebiusElement::rotation_about_i(alpha).act(Complex64::new(0.0, side_13.exp()));

    let r1 = MoebiusElement::rotation_about(vertex1, 2.0 * alpha)?;
    let r2 = MoebiusElement::rotation_about(vertex2, 2.0 * beta)?;
    let r3 = MoebiusElement::rotation_about(vertex3, 2.0 * gamma)?;

    debug_assert!(
        r1.compose(&r2).compose(&r3).is_identity_within(1e-9),
        "triangle rotations must satisfy the defining relation"
    );
    Ok([r1, r2, r3])
}

/// cosh of the side opposite the angle `gamma` in a hyperbolic triangle with
/// angles (alpha, beta, gamma); returns the side length.
fn side_from_angles(alpha: f64, beta: f64, gamma: f64) -> f64 {
    let cosh_side = (alpha.cos() * beta.cos() + gamma.cos()) / (alpha.sin() * beta.sin());
    cosh_side.acosh()
}
