//! Polarized Heisenberg group arithmetic.
//!
//! Points are triples `(x, y, z)` with product
//! `(x, y, z) * (x', y', z') = (x + x', y + y', z + z' + x y')`, i.e. the
//! upper triangular unipotent matrices with `x`, `y` on the superdiagonal and
//! `z` in the corner. Every operation is generic over [`Coord`], so the same
//! code runs exactly on [`BigRational`] and approximately on `f64`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

/// Scalar field for group coordinates.
pub trait Coord:
    Clone
    + fmt::Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_int(v: i128) -> Self;
    fn from_bigint(v: &BigInt) -> Self;
    /// `num / den`; `den` must be nonzero.
    fn ratio(num: i128, den: i128) -> Self;
    fn half(&self) -> Self;
    fn floor_int(&self) -> i128;
    fn to_f64(&self) -> f64;

    /// Fractional part in `[0, 1)`.
    fn frac(&self) -> Self {
        self.clone() - Self::from_int(self.floor_int())
    }
}

impl Coord for f64 {
    fn zero() -> Self {
        0.0
    }
    fn from_int(v: i128) -> Self {
        v as f64
    }
    fn from_bigint(v: &BigInt) -> Self {
        v.to_f64().unwrap_or(f64::NAN)
    }
    fn ratio(num: i128, den: i128) -> Self {
        num as f64 / den as f64
    }
    fn half(&self) -> Self {
        0.5 * self
    }
    fn floor_int(&self) -> i128 {
        self.floor() as i128
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn frac(&self) -> Self {
        let f = self - self.floor();
        // x - floor(x) rounds up to 1.0 for tiny negative x
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    }
}

impl Coord for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn from_int(v: i128) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_bigint(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }
    fn ratio(num: i128, den: i128) -> Self {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }
    fn half(&self) -> Self {
        self / BigInt::from(2)
    }
    fn floor_int(&self) -> i128 {
        self.floor()
            .to_integer()
            .to_i128()
            .expect("coordinate out of i128 range")
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn frac(&self) -> Self {
        self - self.floor()
    }
}

/// Exact rational from an `f64` (every finite double is a dyadic rational).
pub fn rational_from_f64(v: f64) -> BigRational {
    BigRational::from_f64(v).expect("finite value")
}

/// A point of the Heisenberg group in polarized coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

pub type Point = GroupElement<f64>;
pub type ExactPoint = GroupElement<BigRational>;

impl<S: Coord> GroupElement<S> {
    pub fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    pub fn identity() -> Self {
        Self::new(S::zero(), S::zero(), S::zero())
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            x: self.x.clone() + other.x.clone(),
            y: self.y.clone() + other.y.clone(),
            z: self.z.clone() + other.z.clone() + self.x.clone() * other.y.clone(),
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            x: -self.x.clone(),
            y: -self.y.clone(),
            z: -self.z.clone() + self.x.clone() * self.y.clone(),
        }
    }

    /// `g h g⁻¹ h⁻¹`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).mul(&self.inverse()).mul(&other.inverse())
    }

    /// Right translation along the one-parameter subgroup `exp(t v)`.
    pub fn flow(&self, v: &LieVector<S>, t: S) -> Self {
        self.mul(&exp(&v.scale(t)))
    }

    /// Projection to the torus `H^ab / Γ^ab`.
    pub fn project_to_torus(&self) -> (S, S) {
        (self.x.frac(), self.y.frac())
    }

    pub fn to_f64(&self) -> Point {
        Point::new(self.x.to_f64(), self.y.to_f64(), self.z.to_f64())
    }

    pub fn in_fundamental_domain(&self, k: u32) -> bool {
        let zero = S::zero();
        let one = S::from_int(1);
        let top = S::ratio(1, i128::from(k));
        self.x >= zero
            && self.x < one
            && self.y >= zero
            && self.y < one
            && self.z >= zero
            && self.z < top
    }
}

impl ExactPoint {
    pub fn from_ratios(x: (i64, i64), y: (i64, i64), z: (i64, i64)) -> Self {
        let r = |(n, d): (i64, i64)| BigRational::new(BigInt::from(n), BigInt::from(d));
        Self::new(r(x), r(y), r(z))
    }

    pub fn from_f64(p: &Point) -> Self {
        Self::new(
            rational_from_f64(p.x),
            rational_from_f64(p.y),
            rational_from_f64(p.z),
        )
    }
}

fn ratio_string(v: &BigRational) -> String {
    format!("{}/{}", v.numer(), v.denom())
}

impl Serialize for GroupElement<BigRational> {
    fn serialize<Se: Serializer>(&self, serializer: Se) -> Result<Se::Ok, Se::Error> {
        let mut st = serializer.serialize_struct("GroupElement", 3)?;
        st.serialize_field("x", &ratio_string(&self.x))?;
        st.serialize_field("y", &ratio_string(&self.y))?;
        st.serialize_field("z", &ratio_string(&self.z))?;
        st.end()
    }
}

/// Element `(p, q, r / K)` of the lattice `Γ_K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LatticeElement {
    pub p: i128,
    pub q: i128,
    pub r: i128,
}

impl LatticeElement {
    pub fn new(p: i128, q: i128, r: i128) -> Self {
        Self { p, q, r }
    }

    pub fn identity() -> Self {
        Self::new(0, 0, 0)
    }

    pub fn embed<S: Coord>(&self, k: u32) -> GroupElement<S> {
        GroupElement::new(
            S::from_int(self.p),
            S::from_int(self.q),
            S::ratio(self.r, i128::from(k)),
        )
    }

    /// Group product inside `Γ_K`; `r` picks up `K p q'`.
    pub fn mul(&self, other: &Self, k: u32) -> Self {
        Self {
            p: self.p + other.p,
            q: self.q + other.q,
            r: self.r + other.r + i128::from(k) * self.p * other.q,
        }
    }

    pub fn inverse(&self, k: u32) -> Self {
        Self {
            p: -self.p,
            q: -self.q,
            r: -self.r + i128::from(k) * self.p * self.q,
        }
    }

    /// Recovers the lattice coordinates of a group element, if it lies in `Γ_K`.
    pub fn from_element(g: &ExactPoint, k: u32) -> Option<Self> {
        let kz = &g.z * BigInt::from(k);
        if !g.x.is_integer() || !g.y.is_integer() || !kz.is_integer() {
            return None;
        }
        Some(Self {
            p: g.x.to_integer().to_i128()?,
            q: g.y.to_integer().to_i128()?,
            r: kz.to_integer().to_i128()?,
        })
    }
}

/// Representative in `[0,1) × [0,1) × [0,1/K)` together with the lattice
/// element that carries the original point there.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedPoint<S> {
    pub point: GroupElement<S>,
    pub lattice: LatticeElement,
}

/// Left `Γ_K`-reduction to the fundamental domain.
///
/// `p = -⌊x⌋` is fixed first, then `q = -⌊y⌋`, then `r` so that the new `z`
/// lands in `[0, 1/K)`; the result satisfies `γ · m = reduced` with
/// `γ = (p, q, r/K)`, exactly for rational input.
pub fn reduce<S: Coord>(m: &GroupElement<S>, k: u32) -> ReducedPoint<S> {
    assert!(k >= 1, "lattice parameter K must be positive");
    let p = -m.x.floor_int();
    let q = -m.y.floor_int();
    let x = m.x.clone() + S::from_int(p);
    let y = m.y.clone() + S::from_int(q);
    let z1 = m.z.clone() + S::from_int(p) * m.y.clone();
    let kk = S::from_int(i128::from(k));
    let r = -(kk * z1.clone()).floor_int();
    let z = z1 + S::ratio(r, i128::from(k));
    let mut point = GroupElement::new(x, y, z);
    clamp_rounding(&mut point, k);
    ReducedPoint {
        point,
        lattice: LatticeElement::new(p, q, r),
    }
}

// Floating point sums like `-1e-17 + 1` can round onto the excluded upper
// face; fold them back. Exact arithmetic never triggers this.
fn clamp_rounding<S: Coord>(point: &mut GroupElement<S>, k: u32) {
    let one = S::from_int(1);
    if point.x >= one {
        point.x = S::zero();
    }
    if point.y >= one {
        point.y = S::zero();
    }
    if point.z >= S::ratio(1, i128::from(k)) {
        point.z = S::zero();
    }
}

/// Coefficients with respect to the left-invariant basis `X, Y, Z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LieVector<S> {
    pub x: S,
    pub y: S,
    pub z: S,
}

impl<S: Coord> LieVector<S> {
    pub fn new(x: S, y: S, z: S) -> Self {
        Self { x, y, z }
    }

    pub fn basis_x() -> Self {
        Self::new(S::from_int(1), S::zero(), S::zero())
    }

    pub fn basis_y() -> Self {
        Self::new(S::zero(), S::from_int(1), S::zero())
    }

    pub fn basis_z() -> Self {
        Self::new(S::zero(), S::zero(), S::from_int(1))
    }

    pub fn scale(&self, t: S) -> Self {
        Self::new(
            self.x.clone() * t.clone(),
            self.y.clone() * t.clone(),
            self.z.clone() * t,
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(
            self.x.clone() + other.x.clone(),
            self.y.clone() + other.y.clone(),
            self.z.clone() + other.z.clone(),
        )
    }

    /// `[u, v] = (u_x v_y - u_y v_x) Z`.
    pub fn bracket(&self, other: &Self) -> Self {
        Self::new(
            S::zero(),
            S::zero(),
            self.x.clone() * other.y.clone() - self.y.clone() * other.x.clone(),
        )
    }
}

/// Exponential map: `v ↦ (v_x, v_y, v_z + v_x v_y / 2)`.
pub fn exp<S: Coord>(v: &LieVector<S>) -> GroupElement<S> {
    GroupElement::new(
        v.x.clone(),
        v.y.clone(),
        v.z.clone() + (v.x.clone() * v.y.clone()).half(),
    )
}
