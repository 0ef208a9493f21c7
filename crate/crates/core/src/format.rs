/// Formats `x` with 12 significant digits: fixed notation for moderate
/// magnitudes, scientific otherwise.
pub fn sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        // rounding may bump the exponent (9.9999999999995 -> 10.0000000000)
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
        let leading_zeros = s
            .trim_start_matches('-')
            .chars()
            .take_while(|&c| c == '0' || c == '.')
            .filter(|&c| c == '0')
            .count();
        if digits - leading_zeros > 12 && decimals > 0 {
            let decimals = decimals - 1;
            return format!("{x:.decimals$}");
        }
        s
    } else {
        format!("{x:.11e}")
    }
}
