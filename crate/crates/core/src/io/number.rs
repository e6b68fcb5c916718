/// Formats `v` like C's `%.{digits}g`: `digits` significant digits, trailing
/// zeros removed, scientific notation for very large or small magnitudes.
///
/// Seventeen digits round-trip any `f64` exactly. Negative zero prints as `0`.
pub fn format_significant(v: f64, digits: usize) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_fraction(mantissa), sign, exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp) as usize;
        trim_fraction(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(format_significant(0.0, 17), "0");
        assert_eq!(format_significant(-0.0, 17), "0");
        assert_eq!(format_significant(1.0, 17), "1");
        assert_eq!(format_significant(1.5, 17), "1.5");
        assert_eq!(format_significant(0.1, 17), "0.10000000000000001");
        assert_eq!(format_significant(-9999.0, 17), "-9999");
        assert_eq!(format_significant(1e-5, 17), "1.0000000000000001e-05");
        assert_eq!(format_significant(123456.0, 3), "1.23e+05");
        assert_eq!(format_significant(0.0001, 10), "0.0001");
        assert_eq!(format_significant(2.0f64.sqrt(), 10), "1.414213562");
        assert_eq!(format_significant(1e22, 17), "1e+22");
        assert_eq!(format_significant(99999.5, 5), "1e+05");
    }

    proptest! {
        #[test]
        fn seventeen_digits_round_trip(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(v.is_finite());
            let back: f64 = format_significant(v, 17).parse().unwrap();
            prop_assert!(back == v);
        }
    }
}
