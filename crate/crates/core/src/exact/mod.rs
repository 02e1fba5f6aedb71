//! Exact arithmetic substrate: rational helpers, dense matrices, an exact
//! simplex solver and double-description conversion for centrally symmetric
//! polytopes.
//!
//! Everything in this module is generic over [`Field`], an exact ordered
//! field. The rest of the crate instantiates it with [`crate::Rational`]
//! (arbitrary precision); `Ratio<i64>` also satisfies the bound and is handy
//! for small hand-checked cases.

mod caps;
pub mod dd;
pub mod lp;
mod matrix;
pub mod polytope;
mod q;
pub mod rational;

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{FromPrimitive, Num, Signed};

pub use caps::Caps;
pub use matrix::Matrix;
pub use q::Rational;

/// An exact ordered field.
///
/// Floating point types do not implement `Ord` and are rejected at compile
/// time, which is the point: every algorithm here relies on exact zero tests.
pub trait Field:
    Clone + Debug + Display + Ord + Hash + Num + Signed + FromPrimitive + Send + Sync + 'static
{
    /// Positive multiple of `v` with coprime integer entries (`v` itself if
    /// zero). Keeps entry sizes down where only the direction matters.
    fn primitive(v: &[Self]) -> Vec<Self>;
}

impl<I> Field for Ratio<I>
where
    I: Integer + Signed + Clone,
    Ratio<I>:
        Clone + Debug + Display + Ord + Hash + Num + Signed + FromPrimitive + Send + Sync + 'static,
{
    fn primitive(v: &[Self]) -> Vec<Self> {
        let l = v.iter().fold(I::one(), |acc, x| acc.lcm(x.denom()));
        let ints: Vec<I> = v
            .iter()
            .map(|x| (x.clone() * Ratio::from_integer(l.clone())).to_integer())
            .collect();
        let g = ints.iter().fold(I::zero(), |acc, n| acc.gcd(n));
        if g.is_zero() {
            return v.to_vec();
        }
        ints.into_iter()
            .map(|n| Ratio::from_integer(n / g.clone()))
            .collect()
    }
}

impl Field for Rational {
    fn primitive(v: &[Self]) -> Vec<Self> {
        let big: Vec<num_rational::BigRational> = v.iter().map(Rational::to_big).collect();
        num_rational::BigRational::primitive(&big)
            .into_iter()
            .map(Rational::from)
            .collect()
    }
}

/// Dot product of two equal-length slices.
pub fn dot<T: Field>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Flip the sign of `v` so that its first nonzero entry is positive.
/// Returns `None` for the zero vector.
pub fn sign_normalized<T: Field>(v: &[T]) -> Option<Vec<T>> {
    let lead = v.iter().find(|x| !x.is_zero())?;
    if lead.is_positive() {
        Some(v.to_vec())
    } else {
        Some(v.iter().map(|x| -x.clone()).collect())
    }
}

pub(crate) fn negated<T: Field>(v: &[T]) -> Vec<T> {
    v.iter().map(|x| -x.clone()).collect()
}

pub(crate) fn scaled<T: Field>(v: &[T], c: &T) -> Vec<T> {
    v.iter().map(|x| x.clone() * c.clone()).collect()
}
