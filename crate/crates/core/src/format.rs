//! Locale-free numeric formatting for CSV and JSONL outputs.

/// Decimal rendering with 17 significant digits, which round-trips any f64.
pub fn sig17(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (16 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for &x in &[0.1, 1.0 / 3.0, 123456.789, 1e-7, 0.999_999_999_999_999_9, 2.5e20] {
            let s = sig17(x);
            assert!(!s.contains('e'));
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(sig17(0.0), "0");
        assert_eq!(sig17(0.5), "0.50000000000000000");
    }
}
