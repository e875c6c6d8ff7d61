//! Canonical number formatting for exports: 12 significant digits.

/// Rounds to 12 significant digits; `-0` becomes `0`.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    if rounded == 0.0 {
        0.0
    } else {
        rounded
    }
}

/// Plain decimal rendering of [`round12`]; never uses exponent notation.
pub fn fmt12(x: f64) -> String {
    format!("{}", round12(x))
}

pub fn fmt12_opt(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting() {
        assert_eq!(fmt12(-18.0), "-18");
        assert_eq!(fmt12(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt12(2.0 / 3.0 * 1e6), "666666.666667");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(fmt12(-1e-20), "-0.00000000000000000001");
        assert_eq!(fmt12(0.1 + 0.2), "0.3");
        assert_eq!(fmt12_opt(None), "");
    }

    #[test]
    fn idempotent() {
        for x in [0.123456789012345, 98765.4321987654, -3.3e-7] {
            assert_eq!(round12(round12(x)), round12(x));
        }
    }
}
