//! Value parsers for comma- and x-separated flags.

use std::str::FromStr;

fn split_n<T: FromStr>(s: &str, sep: char, n: usize, what: &str) -> Result<Vec<T>, String> {
    let parts: Vec<&str> = s.split(sep).map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {what}, got {s:?}"));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>()
                .map_err(|_| format!("bad number {p:?} in {s:?}"))
        })
        .collect()
}

/// `LO,HI`
pub fn f32_pair(s: &str) -> Result<(f32, f32), String> {
    let v = split_n::<f32>(s, ',', 2, "LO,HI")?;
    Ok((v[0], v[1]))
}

/// `A,B`
pub fn usize_pair(s: &str) -> Result<(usize, usize), String> {
    let v = split_n::<usize>(s, ',', 2, "two comma-separated integers")?;
    Ok((v[0], v[1]))
}

/// `WxH`
pub fn resolution(s: &str) -> Result<(usize, usize), String> {
    let v = split_n::<usize>(&s.to_ascii_lowercase(), 'x', 2, "WxH")?;
    if v.contains(&0) {
        return Err(format!("resolution must be positive, got {s:?}"));
    }
    Ok((v[0], v[1]))
}

/// `C,T,H,W`
pub fn shape4(s: &str) -> Result<[usize; 4], String> {
    let v = split_n::<usize>(s, ',', 4, "C,T,H,W")?;
    if v.contains(&0) {
        return Err(format!("shape dims must be positive, got {s:?}"));
    }
    Ok([v[0], v[1], v[2], v[3]])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses() {
        assert_eq!(f32_pair("0.3,0.8").unwrap(), (0.3, 0.8));
        assert_eq!(resolution("1280x720").unwrap(), (1280, 720));
        assert_eq!(resolution("64X32").unwrap(), (64, 32));
        assert!(resolution("0x5").is_err());
        assert!(resolution("12").is_err());
        assert_eq!(shape4("4,5,6,8").unwrap(), [4, 5, 6, 8]);
        assert!(shape4("4,5,6").is_err());
        assert!(usize_pair("4,a").is_err());
    }
}
