use rand::Rng;

use super::{Claim, Configuration, EscapeRoute, FractalConfig, GeometryError, Neighbors, TrapSpec, Vertex};

/// A base configuration translated by `(-shift_x, +shift_y)`: the shifted
/// configuration at `w` looks like the base at `(w.x + shift_x, w.y - shift_y)`.
#[derive(Clone, Debug)]
pub struct ShiftedConfig<C = FractalConfig> {
    base: C,
    shift_x: i128,
    shift_y: i128,
}

impl<C: Configuration> ShiftedConfig<C> {
    pub fn new(base: C, shift_x: i128, shift_y: i128) -> Result<Self, GeometryError> {
        if shift_x < 0 {
            return Err(GeometryError::InvalidParameter(format!("shift_x must be non-negative, got {shift_x}")));
        }
        Ok(ShiftedConfig { base, shift_x, shift_y })
    }

    pub fn base(&self) -> &C {
        &self.base
    }

    pub fn shift_x(&self) -> i128 {
        self.shift_x
    }

    pub fn shift_y(&self) -> i128 {
        self.shift_y
    }

    fn to_base(&self, w: Vertex) -> Result<Vertex, GeometryError> {
        w.offset(self.shift_x, -self.shift_y)
    }

    fn to_shifted(&self, v: Vertex) -> Result<Vertex, GeometryError> {
        v.offset(-self.shift_x, self.shift_y)
    }
}

impl<C: Configuration> Configuration for ShiftedConfig<C> {
    fn neighbors(&self, w: Vertex) -> Result<Neighbors, GeometryError> {
        let inner = self.base.neighbors(self.to_base(w)?)?;
        let mut out = Neighbors::new();
        for u in inner.iter() {
            out.insert(w, self.to_shifted(*u)?);
        }
        Ok(out)
    }

    fn trap_anchored_at(&self, w: Vertex) -> Result<Option<TrapSpec>, GeometryError> {
        match self.base.trap_anchored_at(self.to_base(w)?)? {
            Some(t) => Ok(Some(TrapSpec { anchor: self.to_shifted(t.anchor)?, ..t })),
            None => Ok(None),
        }
    }

    // Structure ids keep base coordinates; they only need to be distinct.
    fn claims(&self, w: Vertex) -> Result<Vec<Claim>, GeometryError> {
        self.base.claims(self.to_base(w)?)
    }

    fn escape_route(&self, w: Vertex) -> Result<EscapeRoute, GeometryError> {
        self.base.escape_route(self.to_base(w)?)?.translated(-self.shift_x, self.shift_y)
    }

    fn truncation_x(&self) -> Option<i128> {
        self.base.truncation_x().map(|x| x - self.shift_x)
    }
}

/// Draws `S_y` uniformly from `-m..=m` and `S_x` uniformly from `0..b(n)`.
pub fn sample_shifts<R: Rng + ?Sized>(
    cfg: FractalConfig,
    m: u64,
    n: u32,
    rng: &mut R,
) -> Result<ShiftedConfig<FractalConfig>, GeometryError> {
    if n == 0 || n > cfg.max_order() {
        return Err(GeometryError::InvalidParameter(format!(
            "shift order must be in 1..={}, got {n}",
            cfg.max_order()
        )));
    }
    let m = m as i128;
    let shift_y = rng.gen_range(-m..=m);
    let shift_x = rng.gen_range(0..cfg.b(n));
    ShiftedConfig::new(cfg, shift_x, shift_y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_shift_matches_base() {
        let base = FractalConfig::new(2.0, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = sample_shifts(base.clone(), 0, 1, &mut rng).unwrap();
        assert_eq!(s.shift_y(), 0);
        assert!((0..4).contains(&s.shift_x()));
        let s = ShiftedConfig::new(base.clone(), 0, 0).unwrap();
        for y in 0..20 {
            for x in 0..40 {
                let v = Vertex::new(x, y);
                assert_eq!(s.neighbors(v).unwrap(), base.neighbors(v).unwrap());
            }
        }
    }

    #[test]
    fn shift_ranges() {
        let base = FractalConfig::new(2.0, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut ys = std::collections::BTreeSet::new();
        let mut xs = std::collections::BTreeSet::new();
        for _ in 0..2000 {
            let s = sample_shifts(base.clone(), 3, 2, &mut rng).unwrap();
            ys.insert(s.shift_y());
            xs.insert(s.shift_x());
        }
        assert_eq!(ys.into_iter().collect::<Vec<_>>(), (-3..=3).collect::<Vec<_>>());
        assert_eq!(xs.into_iter().collect::<Vec<_>>(), (0..12).collect::<Vec<_>>());
    }

    #[test]
    fn shifted_corner() {
        let base = FractalConfig::new(2.0, 6).unwrap();
        let s = ShiftedConfig::new(base, 2, 5).unwrap();
        // Base corner (3,3) appears at (1,8).
        let n = s.neighbors(Vertex::new(1, 8)).unwrap();
        assert_eq!(n.as_slice(), &[Vertex::new(0, 8), Vertex::new(1, 9)]);
        assert!(ShiftedConfig::new(FractalConfig::new(2.0, 6).unwrap(), -1, 0).is_err());
    }
}
