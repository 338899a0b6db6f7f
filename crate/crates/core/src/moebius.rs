//! Isometries of the upper half-plane as unit-determinant 2x2 matrices modulo sign.
//!
//! Every value is kept renormalized (determinant 1 within [`DET_TOL`]) and
//! sign-canonicalized, so entrywise comparison is meaningful for deduplication
//! and conjugacy testing.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Determinant drift allowed after renormalization.
pub const DET_TOL: f64 = 1e-12;

/// Default half-width of the parabolic trace band used by classification.
pub const DEFAULT_CLASS_TOL: f64 = 1e-9;

/// Trace magnitude below which the sign representative is chosen by entry
/// inspection instead of the trace sign. Only order-2 elliptic elements live
/// here for cocompact groups.
const SIGN_TRACE_BAND: f64 = 1e-8;

/// An entry of magnitude above this is a safe sign reference: a determinant-1
/// matrix always has some entry of magnitude >= 1/sqrt(2).
const SIGN_ENTRY_FLOOR: f64 = 0.6;

/// Largest elliptic order the angle-based detector reports.
const MAX_DETECTED_ORDER: u32 = 64;
const ORDER_DETECT_TOL: f64 = 1e-7;

/// Element of PSL(2, R): a real matrix [[a, b], [c, d]] with ad - bc = 1,
/// taken modulo overall sign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoebiusElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Classification of an isometry by its trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IsometryKind {
    Identity,
    /// Rotation. `angle` is the folded half-angle acos(|tr|/2) in (0, pi/2];
    /// the full rotation angle is recovered at the conjugacy-class level.
    Elliptic { angle: f64, order: Option<u32> },
    Parabolic,
    /// Translation along an axis with the given length and norm e^length.
    Hyperbolic { length: f64, norm: f64 },
}

impl IsometryKind {
    pub fn is_elliptic(&self) -> bool {
        matches!(self, IsometryKind::Elliptic { .. })
    }

    pub fn is_hyperbolic(&self) -> bool {
        matches!(self, IsometryKind::Hyperbolic { .. })
    }

    /// Translation length for hyperbolic elements, zero otherwise.
    pub fn length(&self) -> f64 {
        match self {
            IsometryKind::Hyperbolic { length, .. } => *length,
            _ => 0.0,
        }
    }
}

impl MoebiusElement {
    pub const IDENTITY: MoebiusElement = MoebiusElement {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    /// Builds an element from raw entries, renormalizing the determinant to 1
    /// and picking the canonical sign representative.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if !det.is_finite() || det <= f64::MIN_POSITIVE {
            return Err(Error::InvalidMatrix(format!(
                "determinant {det} must be positive and finite"
            )));
        }
        Ok(MoebiusElement { a, b, c, d }.canonicalized())
    }

    /// Translation by `t` along the imaginary axis: diag(e^{t/2}, e^{-t/2}).
    pub fn translation(t: f64) -> Self {
        MoebiusElement {
            a: (0.5 * t).exp(),
            b: 0.0,
            c: 0.0,
            d: (-0.5 * t).exp(),
        }
        .canonicalized()
    }

    /// Rotation about the point i by `angle` (counterclockwise on tangent
    /// vectors). Trace is 2 cos(angle/2).
    pub fn rotation_about_i(angle: f64) -> Self {
        let (s, c) = (0.5 * angle).sin_cos();
        MoebiusElement {
            a: c,
            b: s,
            c: -s,
            d: c,
        }
        .canonicalized()
    }

    /// Rotation by `angle` about an arbitrary point of the upper half-plane.
    pub fn rotation_about(center: Complex64, angle: f64) -> Result<Self> {
        if !center.im.is_finite() || center.im <= 0.0 {
            return Err(Error::InvalidMatrix(format!(
                "rotation center {center} must have positive imaginary part"
            )));
        }
        let to_center = Self::point_mover(center);
        Ok(to_center
            .compose(&Self::rotation_about_i(angle))
            .compose(&to_center.inverse()))
    }

    /// Some isometry mapping i to the given point (unique up to rotation
    /// about i, which is all conjugation by it ever needs).
    fn point_mover(target: Complex64) -> Self {
        let root_y = target.im.sqrt();
        MoebiusElement {
            a: root_y,
            b: target.re / root_y,
            c: 0.0,
            d: 1.0 / root_y,
        }
        .canonicalized()
    }

    /// Determinant, computed with a compensated product difference so that
    /// cancellation between a*d and b*c (entries grow like e^{length/2}) does
    /// not poison the renormalization.
    pub fn det(&self) -> f64 {
        let bc = self.b * self.c;
        let bc_residue = f64::mul_add(self.b, self.c, -bc);
        f64::mul_add(self.a, self.d, -bc) - bc_residue
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    fn canonicalized(self) -> Self {
        let det = self.det();
        // Entry rounding alone makes det drift by O(entries^2 eps); rescaling
        // below that floor would only launder determinant noise into the
        // trace, so renormalize only above it.
        let max_entry = self
            .a
            .abs()
            .max(self.b.abs())
            .max(self.c.abs())
            .max(self.d.abs());
        let noise_floor = 32.0 * f64::EPSILON * (max_entry * max_entry).max(1.0);
        let scale = if (det - 1.0).abs() > noise_floor {
            det.sqrt()
        } else {
            1.0
        };
        let (a, b, c, d) = (
            self.a / scale,
            self.b / scale,
            self.c / scale,
            self.d / scale,
        );
        let trace = a + d;
        let sign = if trace.abs() > SIGN_TRACE_BAND {
            trace.signum()
        } else {
            // Trace ~ 0: use the first entry large enough to be stable.
            [a, b, c, d]
                .iter()
                .find(|e| e.abs() >= SIGN_ENTRY_FLOOR)
                .map(|e| e.signum())
                .unwrap_or(1.0)
        };
        MoebiusElement {
            a: sign * a,
            b: sign * b,
            c: sign * c,
            d: sign * d,
        }
    }

    /// Group inverse (uses det = 1).
    pub fn inverse(&self) -> Self {
        MoebiusElement {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
        .canonicalized()
    }

    /// Matrix product, renormalized and sign-canonicalized.
    pub fn compose(&self, other: &Self) -> Self {
        MoebiusElement {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        }
        .canonicalized()
    }

    /// k-fold composition by repeated squaring, k >= 1.
    pub fn power(&self, k: u32) -> Self {
        assert!(k >= 1, "power requires k >= 1");
        let mut base = *self;
        let mut exp = k;
        let mut acc: Option<MoebiusElement> = None;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = Some(match acc {
                    Some(m) => m.compose(&base),
                    None => base,
                });
            }
            exp >>= 1;
            if exp > 0 {
                base = base.compose(&base);
            }
        }
        acc.unwrap()
    }

    /// Moebius action (az + b) / (cz + d) on a point with Im z > 0.
    pub fn act(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.c * z + self.d)
    }

    /// Largest entrywise absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs())
    }

    pub fn is_identity_within(&self, tol: f64) -> bool {
        self.max_abs_diff(&Self::IDENTITY) <= tol
    }

    /// Classification with the default parabolic band.
    pub fn classify(&self) -> IsometryKind {
        self.classify_with_tol(DEFAULT_CLASS_TOL)
    }

    /// Classification with an explicit parabolic band `class_tol`.
    pub fn classify_with_tol(&self, class_tol: f64) -> IsometryKind {
        if self.is_identity_within(class_tol) {
            return IsometryKind::Identity;
        }
        let t = self.trace().abs();
        if t < 2.0 - class_tol {
            let angle = (0.5 * t).clamp(-1.0, 1.0).acos();
            IsometryKind::Elliptic {
                angle,
                order: detect_order(angle),
            }
        } else if t > 2.0 + class_tol {
            let length = 2.0 * (0.5 * t).acosh();
            IsometryKind::Hyperbolic {
                length,
                norm: length.exp(),
            }
        } else {
            IsometryKind::Parabolic
        }
    }

    /// Classification for elements of a group asserted cocompact, where a hit
    /// in the parabolic band indicates numerical trouble rather than a
    /// legitimate parabolic.
    pub fn classify_cocompact(&self) -> Result<IsometryKind> {
        self.classify_cocompact_with_tol(DEFAULT_CLASS_TOL)
    }

    pub fn classify_cocompact_with_tol(&self, class_tol: f64) -> Result<IsometryKind> {
        match self.classify_with_tol(class_tol) {
            IsometryKind::Parabolic => Err(Error::ParabolicInCocompact { tol: class_tol }),
            kind => Ok(kind),
        }
    }
}

/// Smallest order m such that the folded angle is pi l / m with gcd(l, m) = 1,
/// if one exists below [`MAX_DETECTED_ORDER`].
fn detect_order(folded_angle: f64) -> Option<u32> {
    for m in 2..=MAX_DETECTED_ORDER {
        let scaled = folded_angle * f64::from(m) / std::f64::consts::PI;
        let l = scaled.round();
        if l >= 1.0 && (scaled - l).abs() <= ORDER_DETECT_TOL {
            return Some(m);
        }
    }
    None
}

/// True iff some w among `conjugators` satisfies w g w^{-1} = h within `tol`
/// entrywise (after canonicalization). Trace agreement is checked first as a
/// fast reject; the conjugator list is expected to contain the identity.
pub fn approx_conjugate(
    g: &MoebiusElement,
    h: &MoebiusElement,
    conjugators: &[MoebiusElement],
    tol: f64,
) -> bool {
    debug_assert!(!conjugators.is_empty());
    if (g.trace().abs() - h.trace().abs()).abs() > tol {
        return false;
    }
    conjugators
        .iter()
        .any(|w| w.compose(g).compose(&w.inverse()).max_abs_diff(h) <= tol)
}
