//! Value parsers for the flag grammar: triples as `r,g,b`, ranges as `lo:hi`,
//! sizes as `WxH`.

pub fn triple(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected r,g,b but got `{s}`"));
    }
    let mut out = [0.0; 3];
    for (slot, part) in out.iter_mut().zip(parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|e| format!("`{part}`: {e}"))?;
    }
    Ok(out)
}

fn split_range(s: &str) -> Result<(&str, &str), String> {
    s.split_once(':').ok_or_else(|| format!("expected lo:hi but got `{s}`"))
}

pub fn u8_range(s: &str) -> Result<(u8, u8), String> {
    let (lo, hi) = split_range(s)?;
    let lo: u8 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
    let hi: u8 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
    if lo >= hi {
        return Err(format!("range {lo}:{hi} needs lo < hi"));
    }
    Ok((lo, hi))
}

pub fn f64_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = split_range(s)?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("`{lo}`: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("`{hi}`: {e}"))?;
    if !(lo < hi) {
        return Err(format!("range {lo}:{hi} needs lo < hi"));
    }
    Ok((lo, hi))
}

pub fn dims(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH but got `{s}`"))?;
    let w = w.trim().parse().map_err(|e| format!("`{w}`: {e}"))?;
    let h = h.trim().parse().map_err(|e| format!("`{h}`: {e}"))?;
    Ok((w, h))
}

/// Feature layer shapes as `(locations, channels)`.
pub type Shapes = Vec<(usize, usize)>;

/// `s,c` pairs separated by `;`, e.g. `8,16;6,12`.
pub fn shapes(s: &str) -> Result<Shapes, String> {
    s.split(';')
        .map(|pair| {
            let (a, b) = pair
                .split_once(',')
                .ok_or_else(|| format!("expected s,c but got `{pair}`"))?;
            let a = a.trim().parse().map_err(|e| format!("`{a}`: {e}"))?;
            let b = b.trim().parse().map_err(|e| format!("`{b}`: {e}"))?;
            Ok((a, b))
        })
        .collect()
}
