//! Rational labels: keys from a dense order, so "insert between" is exact.

use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

/// The fraction `num/den`. `den == 0` encodes an infinite bound
/// (`1/0` above every key, `-1/0` below); such values are never stream
/// keys.
#[derive(Clone, Copy, Debug)]
pub struct Label {
    pub num: i64,
    pub den: u64,
}

impl Label {
    pub const TOP: Label = Label { num: 1, den: 0 };
    pub const BOTTOM: Label = Label { num: -1, den: 0 };

    pub fn new(num: i64, den: u64) -> Option<Self> {
        (den > 0).then_some(Self { num, den })
    }

    pub fn int(v: i64) -> Self {
        Self { num: v, den: 1 }
    }

    pub fn is_finite(&self) -> bool {
        self.den > 0
    }

    /// The mediant `(a+c)/(b+d)`, strictly between `self` and `other` when
    /// `self < other`. Returns `None` on overflow.
    pub fn mediant(&self, other: &Label) -> Option<Label> {
        let num = self.num.checked_add(other.num)?;
        let den = self.den.checked_add(other.den)?;
        let (num, den) = reduce(num, den);
        Some(Label { num, den })
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn reduce(num: i64, den: u64) -> (i64, u64) {
    let g = gcd(num.unsigned_abs(), den);
    if g <= 1 {
        (num, den)
    } else {
        (num / g as i64, den / g)
    }
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        let l = i128::from(self.num) * i128::from(other.den);
        let r = i128::from(other.num) * i128::from(self.den);
        l.cmp(&r)
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Label {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Label {}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParseLabelError;

impl fmt::Display for ParseLabelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected p/q with q > 0")
    }
}

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, q) = s.split_once('/').ok_or(ParseLabelError)?;
        let num = p.trim().parse().map_err(|_| ParseLabelError)?;
        let den = q.trim().parse().map_err(|_| ParseLabelError)?;
        Label::new(num, den).ok_or(ParseLabelError)
    }
}

#[cfg(feature = "serde")]
impl serde::Serialize for Label {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[cfg(feature = "serde")]
impl<'de> serde::Deserialize<'de> for Label {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl serde::de::Visitor<'_> for V {
            type Value = Label;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a p/q string")
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Label, E> {
                v.parse().map_err(E::custom)
            }
        }
        d.deserialize_str(V)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_and_mediant() {
        let a = Label::new(1, 3).unwrap();
        let b = Label::new(1, 2).unwrap();
        assert!(a < b);
        assert_eq!(Label::new(2, 4).unwrap(), b);
        let m = a.mediant(&b).unwrap();
        assert!(a < m && m < b);
        assert_eq!((m.num, m.den), (2, 5));
        assert!(Label::BOTTOM < Label::int(-1_000_000));
        assert!(Label::TOP > Label::int(i64::MAX));
        let first = Label::int(0).mediant(&Label::TOP).unwrap();
        assert_eq!(first, Label::int(1));
    }

    #[test]
    fn parse_round_trip() {
        let l: Label = "-3/7".parse().unwrap();
        assert_eq!((l.num, l.den), (-3, 7));
        assert_eq!(alloc::format!("{l}").parse::<Label>().unwrap(), l);
        assert!("1/0".parse::<Label>().is_err());
        assert!("3".parse::<Label>().is_err());
    }
}
