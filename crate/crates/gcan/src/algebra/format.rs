//! Textual multivector format: `3.0 + 2.0*e1 - 0.5*e12`.
//!
//! The parser is whitespace-insensitive, the `*` is optional, and blade
//! indices may appear in any order: `e21` parses as -e12. Repeated indices
//! are rejected.

use std::sync::Arc;

use super::multivector::Multivector;
use super::{Algebra, AlgebraExt};
use crate::error::{Error, Result};

pub fn parse_multivector(algebra: &Arc<Algebra>, input: &str) -> Result<Multivector> {
    let compact: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(Error::Parse("empty multivector expression".into()));
    }
    let mut out = algebra.zero();
    let mut rest = compact.as_str();
    let mut sign = 1.0f64;
    let mut pending_sign = false;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix('+') {
            rest = r;
            sign = 1.0;
            pending_sign = true;
            continue;
        }
        if let Some(r) = rest.strip_prefix('-') {
            rest = r;
            sign = -1.0;
            pending_sign = true;
            continue;
        }
        let (term, r) = take_term(rest)?;
        rest = r;
        let (coeff, blade) = split_term(term)?;
        let (index, blade_sign) = resolve_blade(algebra, blade)?;
        let c = out.coeff(index);
        out.set_coeff(index, c + sign * blade_sign * coeff);
        sign = 1.0;
        pending_sign = false;
    }
    if pending_sign {
        return Err(Error::Parse("dangling sign".into()));
    }
    Ok(out)
}

/// Consumes characters up to the next top-level '+' or '-'. A sign directly
/// after 'e' (exponent, as in 1e-3) stays inside the term.
fn take_term(s: &str) -> Result<(&str, &str)> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if (c == '+' || c == '-') && i > 0 {
            let prev = bytes[i - 1] as char;
            let exponent = (prev == 'e' || prev == 'E')
                && i >= 2
                && (bytes[i - 2] as char).is_ascii_digit()
                && i + 1 < bytes.len()
                && (bytes[i + 1] as char).is_ascii_digit();
            if !exponent {
                break;
            }
        }
        i += 1;
    }
    if i == 0 {
        return Err(Error::Parse(format!("unexpected character in {s:?}")));
    }
    Ok((&s[..i], &s[i..]))
}

/// Splits one term into (coefficient, blade-label digits or None).
fn split_term(term: &str) -> Result<(f64, Option<&str>)> {
    // A blade reference is a trailing `e<digits>` whose 'e' is not part of a
    // float exponent (exponents are followed by digits too, so the split is:
    // find the last 'e' such that everything after it is digits and what
    // precedes parses as a float or is empty / ends with '*').
    if let Some(epos) = term.rfind(['e', 'E']) {
        let tail = &term[epos + 1..];
        if !tail.is_empty() && tail.bytes().all(|b| b.is_ascii_digit()) {
            let head = &term[..epos];
            let head = head.strip_suffix('*').unwrap_or(head);
            if head.is_empty() {
                return Ok((1.0, Some(tail)));
            }
            if let Ok(c) = head.parse::<f64>() {
                return Ok((c, Some(tail)));
            }
            // fall through: the 'e' belonged to a scientific-notation number
        }
    }
    let c: f64 = term
        .parse()
        .map_err(|_| Error::Parse(format!("bad term {term:?}")))?;
    Ok((c, None))
}

/// Maps blade-label digits to a canonical blade index and the permutation
/// sign needed to sort them.
fn resolve_blade(algebra: &Arc<Algebra>, blade: Option<&str>) -> Result<(usize, f64)> {
    let Some(digits) = blade else {
        return Ok((0, 1.0));
    };
    let sig = algebra.signature();
    let mut positions = Vec::with_capacity(digits.len());
    for ch in digits.chars() {
        let label = ch.to_digit(10).unwrap() as usize;
        let pos = sig
            .position_of_label(label)
            .ok_or_else(|| Error::Parse(format!("no basis vector e{label} in {sig}")))?;
        if positions.contains(&pos) {
            return Err(Error::Parse(format!("repeated index in e{digits}")));
        }
        positions.push(pos);
    }
    // bubble sort, counting transpositions
    let mut sign = 1.0;
    let m = positions.len();
    for i in 0..m {
        for j in 0..m.saturating_sub(i + 1) {
            if positions[j] > positions[j + 1] {
                positions.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    Ok((algebra.blade_index(&positions), sign))
}

impl std::fmt::Display for Multivector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let alg = self.algebra();
        let sig = alg.signature();
        let mut wrote = false;
        for (i, &c) in self.coeffs().iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let mag = c.abs();
            if wrote {
                write!(f, " {} ", if c < 0.0 { "-" } else { "+" })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            if i == 0 {
                write!(f, "{mag}")?;
            } else {
                let name = alg.blades()[i].name(&sig);
                if mag == 1.0 {
                    write!(f, "{name}")?;
                } else {
                    write!(f, "{mag}*{name}")?;
                }
            }
            wrote = true;
        }
        if !wrote {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Algebra;

    #[test]
    fn parses_the_documented_example() {
        let alg = Algebra::from_pqr(3, 0, 0).unwrap();
        let m = parse_multivector(&alg, "3.0 + 2.0*e1 - 0.5*e12").unwrap();
        assert_eq!(m.coeff(0), 3.0);
        assert_eq!(m.coeff(1), 2.0);
        assert_eq!(m.coeff(4), -0.5);
    }

    #[test]
    fn whitespace_and_star_are_optional() {
        let alg = Algebra::from_pqr(3, 0, 0).unwrap();
        let a = parse_multivector(&alg, "3+2e1-0.5e12").unwrap();
        let b = parse_multivector(&alg, "  3.0 + 2.0 * e1 - 0.5 * e12 ").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn canonicalizes_unsorted_indices_with_sign_flip() {
        let alg = Algebra::from_pqr(3, 0, 0).unwrap();
        let m = parse_multivector(&alg, "e21").unwrap();
        assert_eq!(m.coeff(4), -1.0);
        let m = parse_multivector(&alg, "2*e321").unwrap();
        // 321 -> 123 takes 3 transpositions
        assert_eq!(m.coeff(7), -2.0);
    }

    #[test]
    fn scientific_notation_coefficients() {
        let alg = Algebra::from_pqr(2, 0, 0).unwrap();
        let m = parse_multivector(&alg, "1e-3 + 2.5e2*e12 - 1e+1*e1").unwrap();
        assert_eq!(m.coeff(0), 1e-3);
        assert_eq!(m.coeff(3), 250.0);
        assert_eq!(m.coeff(1), -10.0);
    }

    #[test]
    fn rejects_bad_input() {
        let alg = Algebra::from_pqr(2, 0, 0).unwrap();
        assert!(parse_multivector(&alg, "").is_err());
        assert!(parse_multivector(&alg, "e11").is_err());
        assert!(parse_multivector(&alg, "e3").is_err());
        assert!(parse_multivector(&alg, "1 + ").is_err());
        assert!(parse_multivector(&alg, "abc").is_err());
    }

    #[test]
    fn display_round_trips_through_the_parser() {
        let alg = Algebra::from_pqr(3, 0, 1).unwrap();
        let m = alg
            .from_coeffs((0..16).map(|i| (i as f64) * 0.5 - 3.75).collect())
            .unwrap();
        let text = m.to_string();
        let back = parse_multivector(&alg, &text).unwrap();
        assert!(m.max_abs_diff(&back) == 0.0, "{text}");
    }

    #[test]
    fn zero_displays_as_zero() {
        let alg = Algebra::from_pqr(2, 0, 0).unwrap();
        assert_eq!(alg.zero().to_string(), "0");
    }
}
