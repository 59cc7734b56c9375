use std::fmt;

/// A numeric literal. Integers and ratios stay exact until an operation
/// overflows `i64`, at which point the value degrades to a float.
#[derive(Debug, Clone, Copy)]
pub enum Number {
    Rat(i64, i64),
    Float(f64),
}

fn gcd(mut a: i128, mut b: i128) -> i128 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

impl Number {
    pub const ZERO: Number = Number::Rat(0, 1);
    pub const ONE: Number = Number::Rat(1, 1);

    pub fn int(n: i64) -> Number {
        Number::Rat(n, 1)
    }

    /// Builds a reduced ratio. Returns `None` for a zero denominator.
    pub fn ratio(n: i64, d: i64) -> Option<Number> {
        Self::from_i128(n as i128, d as i128)
    }

    fn from_i128(n: i128, d: i128) -> Option<Number> {
        if d == 0 {
            return None;
        }
        let g = gcd(n, d).max(1);
        let (mut n, mut d) = (n / g, d / g);
        if d < 0 {
            n = -n;
            d = -d;
        }
        match (i64::try_from(n), i64::try_from(d)) {
            (Ok(n), Ok(d)) => Some(Number::Rat(n, d)),
            _ => Some(Number::Float(n as f64 / d as f64)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Number::Rat(n, d) => n as f64 / d as f64,
            Number::Float(x) => x,
        }
    }

    pub fn is_zero(self) -> bool {
        self.value() == 0.0
    }

    pub fn is_one(self) -> bool {
        self.value() == 1.0
    }

    pub fn is_negative(self) -> bool {
        self.value() < 0.0
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Number::Rat(..))
    }

    /// The value as an `i64` when it is an exact integer.
    pub fn as_integer(self) -> Option<i64> {
        match self {
            Number::Rat(n, 1) => Some(n),
            _ => None,
        }
    }

    pub fn neg(self) -> Number {
        match self {
            Number::Rat(n, d) => Self::from_i128(-(n as i128), d as i128).unwrap(),
            Number::Float(x) => Number::Float(-x),
        }
    }

    pub fn add(self, o: Number) -> Number {
        match (self, o) {
            (Number::Rat(a, b), Number::Rat(c, d)) => {
                let (a, b, c, d) = (a as i128, b as i128, c as i128, d as i128);
                Self::from_i128(a * d + c * b, b * d).unwrap()
            }
            _ => Number::Float(self.value() + o.value()),
        }
    }

    pub fn mul(self, o: Number) -> Number {
        match (self, o) {
            (Number::Rat(a, b), Number::Rat(c, d)) => {
                Self::from_i128(a as i128 * c as i128, b as i128 * d as i128).unwrap()
            }
            _ => Number::Float(self.value() * o.value()),
        }
    }

    /// `None` on division by an exact or floating zero.
    pub fn div(self, o: Number) -> Option<Number> {
        if o.is_zero() {
            return None;
        }
        match (self, o) {
            (Number::Rat(a, b), Number::Rat(c, d)) => {
                Self::from_i128(a as i128 * d as i128, b as i128 * c as i128)
            }
            _ => Some(Number::Float(self.value() / o.value())),
        }
    }

    /// Exact integer power when both sides are exact and small, a float
    /// power for positive bases otherwise. `None` when the result would be
    /// undefined or non-finite.
    pub fn pow(self, e: Number) -> Option<Number> {
        if let (Number::Rat(..), Some(k)) = (self, e.as_integer()) {
            if k.unsigned_abs() <= 64 {
                let mut acc = Number::ONE;
                for _ in 0..k.unsigned_abs() {
                    acc = acc.mul(self);
                }
                let out = if k < 0 { Number::ONE.div(acc)? } else { acc };
                return out.value().is_finite().then_some(out);
            }
        }
        let (b, x) = (self.value(), e.value());
        let r = if x.fract() == 0.0 && x.abs() <= i32::MAX as f64 {
            if b == 0.0 && x < 0.0 {
                return None;
            }
            b.powi(x as i32)
        } else if b > 0.0 {
            b.powf(x)
        } else if b == 0.0 && x > 0.0 {
            0.0
        } else {
            return None;
        };
        r.is_finite().then_some(Number::Float(r))
    }

    /// Exact square root of a perfect-square ratio.
    pub fn exact_sqrt(self) -> Option<Number> {
        let Number::Rat(n, d) = self else { return None };
        if n < 0 {
            return None;
        }
        let rn = isqrt(n)?;
        let rd = isqrt(d)?;
        Number::ratio(rn, rd)
    }
}

fn isqrt(n: i64) -> Option<i64> {
    let r = (n as f64).sqrt().round() as i64;
    (r.checked_mul(r) == Some(n)).then_some(r)
}

impl PartialEq for Number {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Number::Rat(a, b), Number::Rat(c, d)) => a == c && b == d,
            (Number::Float(x), Number::Float(y)) => x.to_bits() == y.to_bits() || x == y,
            _ => false,
        }
    }
}

impl fmt::Display for Number {
    /// Integers print bare, ratios as `n/d`, floats with round-trip
    /// precision and always with a decimal point or exponent so they
    /// re-parse as floats.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Number::Rat(n, 1) => write!(f, "{n}"),
            Number::Rat(n, d) => write!(f, "{n}/{d}"),
            Number::Float(x) => write!(f, "{x:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratios_reduce_and_normalise_sign() {
        assert_eq!(Number::ratio(4, -6), Some(Number::Rat(-2, 3)));
        assert_eq!(Number::ratio(1, 0), None);
        assert_eq!(Number::Rat(1, 2).add(Number::Rat(1, 3)), Number::Rat(5, 6));
    }

    #[test]
    fn overflow_degrades_to_float() {
        let big = Number::int(i64::MAX);
        assert!(matches!(big.mul(big), Number::Float(_)));
    }

    #[test]
    fn powers() {
        assert_eq!(Number::Rat(2, 3).pow(Number::int(-2)), Some(Number::Rat(9, 4)));
        assert_eq!(Number::int(0).pow(Number::int(-1)), None);
        assert_eq!(Number::int(-8).pow(Number::Rat(1, 3)), None);
        assert_eq!(Number::Rat(9, 4).exact_sqrt(), Some(Number::Rat(3, 2)));
        assert_eq!(Number::int(2).exact_sqrt(), None);
    }

    #[test]
    fn display_round_trips_floats() {
        assert_eq!(Number::Float(1.0).to_string(), "1.0");
        assert_eq!(Number::Float(1e-20).to_string(), "1e-20");
        assert_eq!(Number::Rat(-1, 2).to_string(), "-1/2");
    }
}
