//! Exact comparison and canonical rendering of decimal lexical forms.
//!
//! Decimal literals are compared digit by digit rather than through
//! floating point so that ordering and equality stay exact.

use std::cmp::Ordering;

pub fn is_integer(s: &str) -> bool {
    let digits = s.strip_prefix(['+', '-']).unwrap_or(s);
    !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
}

/// `[+-]? (digits ('.' digits?)? | '.' digits)`
pub fn is_decimal(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    match frac {
        None => !int.is_empty() && digits(int),
        Some(f) => (!int.is_empty() || !f.is_empty()) && digits(int) && digits(f),
    }
}

struct Parts<'a> {
    negative: bool,
    int: &'a str,
    frac: &'a str,
}

fn split(s: &str) -> Parts<'_> {
    let (negative, body) = match s.as_bytes().first() {
        Some(b'-') => (true, &s[1..]),
        Some(b'+') => (false, &s[1..]),
        _ => (false, s),
    };
    let (int, frac) = body.split_once('.').unwrap_or((body, ""));
    let int = int.trim_start_matches('0');
    let frac = frac.trim_end_matches('0');
    let zero = int.is_empty() && frac.is_empty();
    Parts {
        negative: negative && !zero,
        int,
        frac,
    }
}

/// Minimal lexical form: no leading or trailing zeros, no `+`, no `-0`.
pub fn canonical(s: &str) -> String {
    let p = split(s);
    let mut out = String::new();
    if p.negative {
        out.push('-');
    }
    out.push_str(if p.int.is_empty() { "0" } else { p.int });
    if !p.frac.is_empty() {
        out.push('.');
        out.push_str(p.frac);
    }
    out
}

fn compare_magnitude(a: &Parts<'_>, b: &Parts<'_>) -> Ordering {
    a.int
        .len()
        .cmp(&b.int.len())
        .then_with(|| a.int.cmp(b.int))
        .then_with(|| a.frac.cmp(b.frac))
}

/// Numeric comparison of two valid decimal or integer lexical forms.
pub fn compare(a: &str, b: &str) -> Ordering {
    let (pa, pb) = (split(a), split(b));
    match (pa.negative, pb.negative) {
        (false, true) => Ordering::Greater,
        (true, false) => Ordering::Less,
        (false, false) => compare_magnitude(&pa, &pb),
        (true, true) => compare_magnitude(&pb, &pa),
    }
}
