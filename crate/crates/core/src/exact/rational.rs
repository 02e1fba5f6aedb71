//! Helpers around [`Rational`]: the `"p/q"` string form used in every file
//! format, and bit-size measures.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::Rational;

pub fn int(n: i64) -> Rational {
    Rational::from_i64(n)
}

pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// `"p/q"`, or `"p"` when the denominator is one.
pub fn to_string(x: &Rational) -> String {
    x.to_string()
}

pub fn parse(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Input(format!("malformed rational {s:?}"));
    match s.split_once('/') {
        None => s
            .parse::<BigInt>()
            .map(Rational::from_integer)
            .map_err(|_| bad()),
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(Error::Input(format!("zero denominator in {s:?}")));
            }
            Ok(Rational::new(p, q))
        }
    }
}

pub fn vec_to_strings(v: &[Rational]) -> Vec<String> {
    v.iter().map(to_string).collect()
}

pub fn parse_vec(v: &[String]) -> Result<Vec<Rational>> {
    v.iter().map(|s| parse(s)).collect()
}

fn bitlen(n: &BigInt) -> u64 {
    n.abs().bits()
}

/// Bit lengths of numerator and denominator.
pub fn bit_sizes(x: &Rational) -> (u64, u64) {
    (bitlen(&x.numer()), bitlen(&x.denom()))
}

/// Encoding weight of a rational: `bitlen|p| + bitlen(q) - 1`, so that
/// `0 -> 0`, `±1 -> 1`, `±2, ±3, ±1/2, ±1/3 -> 2`.
pub fn weight(x: &Rational) -> u64 {
    let (p, q) = bit_sizes(x);
    p + q - 1
}

pub fn total_weight<'a>(xs: impl IntoIterator<Item = &'a Rational>) -> u64 {
    xs.into_iter().map(weight).sum()
}

/// All rationals of weight exactly `w`, sorted ascending.
pub fn of_weight(w: u64) -> Vec<Rational> {
    if w == 0 {
        return vec![Rational::zero()];
    }
    let mut out = Vec::new();
    // bitlen(p) = a >= 1, bitlen(q) = w + 1 - a >= 1
    for a in 1..=w {
        let b = w + 1 - a;
        let (plo, phi) = (1i64 << (a - 1), (1i64 << a) - 1);
        let (qlo, qhi) = (1i64 << (b - 1), (1i64 << b) - 1);
        for p in plo..=phi {
            for q in qlo..=qhi {
                if num_integer::gcd(p, q) == 1 {
                    out.push(ratio(p, q));
                    out.push(ratio(-p, q));
                }
            }
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn string_forms() {
        assert_eq!(to_string(&ratio(6, -4)), "-3/2");
        assert_eq!(to_string(&int(7)), "7");
        assert_eq!(parse("-3/2").unwrap(), ratio(-3, 2));
        assert_eq!(parse(" 4 ").unwrap(), int(4));
        assert_eq!(parse("10/4").unwrap(), ratio(5, 2));
        assert!(parse("1/0").is_err());
        assert!(parse("x").is_err());
        assert!(parse("1.5").is_err());
    }

    #[test]
    fn weights() {
        assert_eq!(weight(&int(0)), 0);
        assert_eq!(weight(&int(-1)), 1);
        assert_eq!(weight(&ratio(1, 3)), 2);
        assert_eq!(weight(&ratio(3, 2)), 3);
        let w2 = of_weight(2);
        assert_eq!(w2.len(), 8);
        assert!(w2.iter().all(|x| weight(x) == 2));
        assert_eq!(of_weight(1), vec![int(-1), int(1)]);
        for w in 0..6 {
            assert!(of_weight(w).iter().all(|x| weight(x) == w));
        }
    }
}
