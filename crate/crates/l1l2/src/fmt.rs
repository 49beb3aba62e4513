//! Locale-independent number rendering.

/// Renders `v` with at most `digits` significant digits, trailing zeros
/// trimmed. Plain notation for exponents in `[-4, digits)`, scientific
/// otherwise.
pub fn sig(v: f64, digits: usize) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format has an exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim(mantissa.to_string()), exp)
    }
}

/// Nine significant digits, the precision of every CSV float.
pub fn num(v: f64) -> String {
    sig(v, 9)
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(0.01), "0.01");
        assert_eq!(num(-2.5e-7), "-2.5e-7");
        assert_eq!(num(1.0 / 3.0), "0.333333333");
        assert_eq!(num(123456789012.0), "1.23456789e11");
        assert_eq!(num(f64::NAN), "nan");
        assert_eq!(num(0.30000000000000004), "0.3");
        assert_eq!(sig(9.9999999999, 9), "10");
    }
}
