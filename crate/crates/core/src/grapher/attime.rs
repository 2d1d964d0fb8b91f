//! At-style time specifications: an absolute epoch (`1018016032`), an
//! offset from now (`-3h`, `-10800`, `now-1w`), or `now`.

use std::fmt;
use std::str::FromStr;

use super::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtTime {
    Absolute(i64),
    /// Signed offset in seconds from the moment of resolution.
    Relative(i64),
}

impl AtTime {
    pub fn resolve(self, now: i64) -> i64 {
        match self {
            AtTime::Absolute(t) => t,
            AtTime::Relative(off) => now.saturating_add(off),
        }
    }
}

impl fmt::Display for AtTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AtTime::Absolute(t) => write!(f, "{t}"),
            AtTime::Relative(0) => f.write_str("now"),
            AtTime::Relative(off) => write!(f, "{off:+}s"),
        }
    }
}

fn unit_seconds(unit: &str) -> Option<i64> {
    Some(match unit {
        "" | "s" | "sec" | "secs" | "second" | "seconds" => 1,
        "m" | "min" | "mins" | "minute" | "minutes" => 60,
        "h" | "hour" | "hours" => 3600,
        "d" | "day" | "days" => 86_400,
        "w" | "week" | "weeks" => 7 * 86_400,
        "y" | "year" | "years" => 365 * 86_400,
        _ => return None,
    })
}

/// `<N><unit>` with at least one digit.
fn parse_offset(body: &str, whole: &str) -> Result<i64, GraphError> {
    let split = body
        .find(|c: char| !c.is_ascii_digit())
        .unwrap_or(body.len());
    let (digits, unit) = body.split_at(split);
    if digits.is_empty() {
        return Err(GraphError::BadTimeSpec(whole.to_string()));
    }
    let n: i64 = digits
        .parse()
        .map_err(|_| GraphError::BadTimeSpec(whole.to_string()))?;
    let mult = unit_seconds(unit).ok_or_else(|| GraphError::BadTimeSpec(whole.to_string()))?;
    n.checked_mul(mult)
        .ok_or_else(|| GraphError::BadTimeSpec(whole.to_string()))
}

impl FromStr for AtTime {
    type Err = GraphError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let t = text.trim();
        let rest = t.strip_prefix("now").unwrap_or(t);
        let had_now = rest.len() != t.len();
        if had_now && rest.is_empty() {
            return Ok(AtTime::Relative(0));
        }
        if let Some(body) = rest.strip_prefix('-') {
            return Ok(AtTime::Relative(-parse_offset(body, text)?));
        }
        if let Some(body) = rest.strip_prefix('+') {
            return Ok(AtTime::Relative(parse_offset(body, text)?));
        }
        if !had_now && !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit()) {
            return t
                .parse()
                .map(AtTime::Absolute)
                .map_err(|_| GraphError::BadTimeSpec(text.to_string()));
        }
        Err(GraphError::BadTimeSpec(text.to_string()))
    }
}

/// Resolves `text` against `now` (epoch seconds).
pub fn parse_at_time(text: &str, now: i64) -> Result<i64, GraphError> {
    Ok(text.parse::<AtTime>()?.resolve(now))
}
