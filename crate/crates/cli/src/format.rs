/// Six significant digits, trailing zeros removed; scientific notation
/// outside `[1e-4, 1e6)`.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..6).contains(&mag) {
        let s = format!("{v:.5e}");
        let (mantissa, exp) = s.split_once('e').unwrap_or((&s, "0"));
        return format!("{}e{exp}", trim(mantissa));
    }
    let decimals = (5 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    // Rounding may carry into a new digit (e.g. 9.999995 -> 10.00000).
    let s = trim(&s).to_string();
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::num;

    #[test]
    fn significant_digits() {
        assert_eq!(num(0.0), "0");
        assert_eq!(num(1.0), "1");
        assert_eq!(num(26.123456789), "26.1235");
        assert_eq!(num(0.0887), "0.0887");
        assert_eq!(num(-0.012048), "-0.012048");
        assert_eq!(num(153.71234), "153.712");
        assert_eq!(num(1.23456789e-7), "1.23457e-7");
        assert_eq!(num(2.5e8), "2.5e8");
        assert_eq!(num(-1e-12), "-1e-12");
    }
}
