//! Two-sided enclosures for probabilities and Green values.
//!
//! Plain `f64` endpoints without directed rounding: the truncation gap of the
//! solver dominates floating-point error by many orders of magnitude.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi + 1e-12, "inverted bracket [{lo}, {hi}]");
        Bracket { lo, hi }
    }

    pub fn exact(v: f64) -> Self {
        Bracket { lo: v, hi: v }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Product of non-negative brackets.
    pub fn mul(&self, other: &Bracket) -> Bracket {
        Bracket::new(self.lo * other.lo, self.hi * other.hi)
    }

    /// Quotient by a positive bracket.
    pub fn div(&self, other: &Bracket) -> Bracket {
        Bracket::new(self.lo / other.hi, self.hi / other.lo)
    }

    pub fn scale(&self, s: f64) -> Bracket {
        debug_assert!(s >= 0.0);
        Bracket::new(self.lo * s, self.hi * s)
    }

    /// `1 / (1 - self)` for `self` inside `[0, 1)`; increasing in `self`.
    pub fn geometric_sum(&self) -> Bracket {
        Bracket::new(1.0 / (1.0 - self.lo), 1.0 / (1.0 - self.hi).max(f64::MIN_POSITIVE))
    }
}
