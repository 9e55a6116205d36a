//! Number formatting shared by the text writers.

/// `x` with 12 significant digits; fixed notation for moderate magnitudes,
/// exponent notation otherwise.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.11e}")
    }
}

#[cfg(test)]
mod tests {
    use super::sig12;

    #[test]
    fn formats() {
        assert_eq!(sig12(0.0), "0");
        assert_eq!(sig12(1.0), "1");
        assert_eq!(sig12(0.75), "0.75");
        assert_eq!(sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(sig12(-123.456), "-123.456");
        assert_eq!(sig12(1.5e-9), "1.50000000000e-9");
        let back: f64 = sig12(std::f64::consts::PI).parse().unwrap();
        assert!((back - std::f64::consts::PI).abs() < 1e-11);
    }
}
