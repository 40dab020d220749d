//! Grid syntax: a single value `a` or an inclusive range `a..b`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloatRange {
    pub start: f64,
    pub end: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntRange {
    pub start: usize,
    pub end: usize,
}

fn split(s: &str) -> (&str, Option<&str>) {
    match s.split_once("..") {
        Some((a, b)) => (a.trim(), Some(b.trim())),
        None => (s.trim(), None),
    }
}

impl FromStr for FloatRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |v: &str| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("`{v}` is not a finite number"))
        };
        let (a, b) = split(s);
        let start = parse(a)?;
        let end = b.map(parse).transpose()?.unwrap_or(start);
        if end < start {
            return Err(format!("range `{s}` is empty: end is below start"));
        }
        Ok(Self { start, end })
    }
}

impl FromStr for IntRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |v: &str| {
            v.parse::<usize>()
                .map_err(|_| format!("`{v}` is not a nonnegative integer"))
        };
        let (a, b) = split(s);
        let start = parse(a)?;
        let end = b.map(parse).transpose()?.unwrap_or(start);
        if end < start {
            return Err(format!("range `{s}` is empty: end is below start"));
        }
        Ok(Self { start, end })
    }
}

impl fmt::Display for FloatRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}..{}", self.start, self.end)
        }
    }
}

impl fmt::Display for IntRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.start == self.end {
            write!(f, "{}", self.start)
        } else {
            write!(f, "{}..{}", self.start, self.end)
        }
    }
}

impl Serialize for FloatRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for IntRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FloatRange {
    /// `start, start + step, ...` up to and including `end` (with a relative
    /// slack so that `0..1` with step `0.1` ends at 1).
    pub fn grid(&self, step: f64) -> Result<Vec<f64>, String> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(format!("step must be positive, got {step}"));
        }
        let count = ((self.end - self.start) / step + 1e-9).floor() as usize;
        if count > 10_000_000 {
            return Err(format!("grid {self} with step {step} has too many points"));
        }
        Ok((0..=count).map(|i| self.start + i as f64 * step).collect())
    }
}

impl IntRange {
    pub fn values(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_ranges() {
        let r: FloatRange = "1..5".parse().unwrap();
        assert_eq!(r.grid(1.0).unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        let r: FloatRange = "0..1".parse().unwrap();
        let g = r.grid(0.1).unwrap();
        assert_eq!(g.len(), 11);
        assert!((g[10] - 1.0).abs() < 1e-12);
        let single: FloatRange = "2.5".parse().unwrap();
        assert_eq!(single.grid(0.3).unwrap(), vec![2.5]);
        assert!("3..1".parse::<FloatRange>().is_err());
        assert!("x".parse::<FloatRange>().is_err());
        assert!("inf".parse::<FloatRange>().is_err());
        assert!(r.grid(0.0).is_err());
        let k: IntRange = "1..4".parse().unwrap();
        assert_eq!(k.values().collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert!("-1".parse::<IntRange>().is_err());
        assert_eq!(k.to_string(), "1..4");
    }
}
