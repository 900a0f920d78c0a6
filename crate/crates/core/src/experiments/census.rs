use num_rational::Ratio;
use serde::Serialize;

use crate::geometry::{FractalConfig, GeometryError, Location, Vertex};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CensusResult {
    pub event: String,
    pub favorable: u128,
    pub domain: u128,
    #[serde(serialize_with = "ratio_string")]
    pub probability: Ratio<i128>,
}

fn ratio_string<S: serde::Serializer>(r: &Ratio<i128>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl CensusResult {
    fn new(event: String, favorable: u128, domain: u128) -> Self {
        CensusResult {
            event,
            favorable,
            domain,
            probability: Ratio::new(favorable as i128, domain as i128),
        }
    }
}

/// Largest `n` enumerated by `census_horizontal` unless explicitly allowed.
pub const DEFAULT_MAX_CENSUS_ORDER: u32 = 5;

/// Fraction of vertical shifts in one period `3 * 2^k` that put the origin
/// at the tip of an order-`k` branch.
pub fn census_vertical(cfg: &FractalConfig, k: u32) -> Result<CensusResult, GeometryError> {
    if k == 0 || k > cfg.max_order() {
        return Err(GeometryError::InvalidParameter(format!("order {k} outside 1..={}", cfg.max_order())));
    }
    let period = 3i128 << k;
    let mut hits = 0u128;
    for y in 0..period {
        let v = Vertex::new(0, y);
        if let Location::MainPart(br) = cfg.locate(v)? {
            if br.order == k && br.tip == v {
                hits += 1;
            }
        }
    }
    Ok(CensusResult::new(format!("origin is the tip of an order-{k} branch"), hits, period as u128))
}

/// Fraction of horizontal shifts `0..b(n)` that put the origin on the main
/// part of an order-`k` branch, given the origin lies on an order-`k` line.
pub fn census_horizontal(
    cfg: &FractalConfig,
    k: u32,
    n: u32,
    max_n: u32,
) -> Result<CensusResult, GeometryError> {
    if !(1 <= k && k < n && n <= cfg.max_order()) {
        return Err(GeometryError::InvalidParameter(format!(
            "need 1 <= k < n <= {}, got k={k}, n={n}",
            cfg.max_order()
        )));
    }
    if n > max_n {
        return Err(GeometryError::InvalidParameter(format!(
            "n={n} needs {} shifts; raise the enumeration limit to allow it",
            cfg.b(n)
        )));
    }
    let line = 3i128 << (k - 1);
    let mut hits = 0u128;
    for sx in 0..cfg.b(n) {
        if let Location::MainPart(br) = cfg.locate(Vertex::new(sx, line))? {
            if br.order == k {
                hits += 1;
            }
        }
    }
    Ok(CensusResult::new(
        format!("origin on an order-{k} main part, shifts 0..b({n})"),
        hits,
        cfg.b(n) as u128,
    ))
}

/// `prod_{i=k}^{n-1} (1 - 3^-i)`.
pub fn horizontal_product(k: u32, n: u32) -> Ratio<i128> {
    (k..n).fold(Ratio::from_integer(1), |acc, i| {
        let p = 3i128.pow(i);
        acc * Ratio::new(p - 1, p)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_examples() {
        let cfg = FractalConfig::new(2.0, 8).unwrap();
        for k in 1..=3 {
            let r = census_vertical(&cfg, k).unwrap();
            assert_eq!(r.probability, Ratio::new(1, 3 * (1 << k)));
        }
    }

    #[test]
    fn horizontal_examples() {
        let cfg = FractalConfig::new(2.0, 8).unwrap();
        let r = census_horizontal(&cfg, 1, 2, 5).unwrap();
        assert_eq!((r.favorable, r.domain), (8, 12));
        assert_eq!(r.probability, Ratio::new(2, 3));
        assert_eq!(census_horizontal(&cfg, 1, 3, 5).unwrap().probability, Ratio::new(16, 27));
        assert_eq!(census_horizontal(&cfg, 2, 3, 5).unwrap().probability, Ratio::new(8, 9));
        assert_eq!(horizontal_product(1, 4), Ratio::new(2 * 8 * 26, 3 * 9 * 27));
        assert!(census_horizontal(&cfg, 1, 6, 5).is_err());
        assert!(census_horizontal(&cfg, 3, 3, 5).is_err());
    }
}
