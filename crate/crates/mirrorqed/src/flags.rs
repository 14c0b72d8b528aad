//! Flag grammar: ranges as `start:stop:count`, lists comma-separated.

use std::fmt;

use mirrorqed_core::grid::linspace;

/// A usage error naming the offending flag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlagError {
    pub flag: &'static str,
    pub message: String,
}

impl FlagError {
    pub fn new(flag: &'static str, message: impl Into<String>) -> Self {
        Self {
            flag,
            message: message.into(),
        }
    }
}

impl fmt::Display for FlagError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid value for --{}: {}", self.flag, self.message)
    }
}

impl std::error::Error for FlagError {}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Range {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.count)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

fn number(flag: &'static str, s: &str) -> Result<f64, FlagError> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| FlagError::new(flag, format!("`{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(FlagError::new(flag, format!("`{s}` is not finite")));
    }
    Ok(v)
}

/// Parses `start:stop:count` with 0 < start < stop and count ≥ 2.
pub fn parse_range(flag: &'static str, s: &str) -> Result<Range, FlagError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(FlagError::new(
            flag,
            format!("`{s}` is not of the form start:stop:count"),
        ));
    }
    let start = number(flag, parts[0])?;
    let stop = number(flag, parts[1])?;
    let count: usize = parts[2].trim().parse().map_err(|_| {
        FlagError::new(
            flag,
            format!("count `{}` is not a positive integer", parts[2]),
        )
    })?;
    if count < 2 {
        return Err(FlagError::new(flag, "count must be at least 2"));
    }
    if !(start > 0.0 && stop > start) {
        return Err(FlagError::new(flag, "need 0 < start < stop"));
    }
    Ok(Range { start, stop, count })
}

/// Parses a non-empty comma-separated list of strictly positive numbers.
pub fn parse_positive_list(flag: &'static str, s: &str) -> Result<Vec<f64>, FlagError> {
    let items: Vec<&str> = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .collect();
    if items.is_empty() {
        return Err(FlagError::new(flag, "list is empty"));
    }
    items
        .into_iter()
        .map(|t| {
            let v = number(flag, t)?;
            if v <= 0.0 {
                return Err(FlagError::new(flag, format!("`{t}` must be positive")));
            }
            Ok(v)
        })
        .collect()
}

/// Parses `re_lo:re_hi:im_lo:im_hi`.
pub fn parse_window(flag: &'static str, s: &str) -> Result<[f64; 4], FlagError> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(FlagError::new(
            flag,
            format!("`{s}` is not of the form re_lo:re_hi:im_lo:im_hi"),
        ));
    }
    let mut v = [0.0; 4];
    for (k, p) in parts.iter().enumerate() {
        v[k] = number(flag, p)?;
    }
    if !(v[1] > v[0] && v[3] > v[2]) {
        return Err(FlagError::new(flag, "window edges must be increasing"));
    }
    Ok(v)
}

pub fn positive(flag: &'static str, v: f64) -> Result<f64, FlagError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(FlagError::new(flag, format!("{v} must be positive")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r = parse_range("grid", "0.8:1.2:2001").unwrap();
        assert_eq!(r.points().len(), 2001);
        assert_eq!(parse_range("grid", "0.8:1.2").unwrap_err().flag, "grid");
        assert!(parse_range("grid", "1.2:0.8:10").is_err());
        assert!(parse_range("grid", "0.8:1.2:1").is_err());
        assert!(parse_range("grid", "a:1.2:10").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(
            parse_positive_list("z0-ratios", "0.1,1, 10").unwrap(),
            vec![0.1, 1.0, 10.0]
        );
        let e = parse_positive_list("z0-ratios", "").unwrap_err();
        assert_eq!(e.flag, "z0-ratios");
        assert!(parse_positive_list("z0-ratios", "1,-2").is_err());
        assert!(parse_positive_list("z0-ratios", " , ").is_err());
    }

    #[test]
    fn windows() {
        assert_eq!(
            parse_window("window", "0.5:3.5:-0.01:0").unwrap(),
            [0.5, 3.5, -0.01, 0.0]
        );
        assert!(parse_window("window", "0.5:3.5:0:-0.01").is_err());
    }
}
