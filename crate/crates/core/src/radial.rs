//! Sums of real powers `sum_e c_e r^e` on `r >= 0`.
//!
//! A scalar function restricted to one sign branch `s = sign * r` becomes such
//! a sum. Inequality margins are formed by merging like exponents before any
//! evaluation, so identical leading terms cancel exactly.

#[derive(Clone, Debug, Default, PartialEq)]
pub(crate) struct RadialPoly {
    /// `(exponent, coefficient)`, merged and sorted by decreasing exponent.
    terms: Vec<(f64, f64)>,
}

impl RadialPoly {
    pub(crate) fn new(mut raw: Vec<(f64, f64)>) -> Self {
        raw.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut terms: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (e, c) in raw {
            match terms.last_mut() {
                Some(last) if last.0 == e => last.1 += c,
                _ => terms.push((e, c)),
            }
        }
        terms.retain(|&(_, c)| c != 0.0);
        Self { terms }
    }

    pub(crate) fn term(exponent: f64, coefficient: f64) -> Self {
        Self::new(vec![(exponent, coefficient)])
    }

    pub(crate) fn constant(c: f64) -> Self {
        Self::term(0.0, c)
    }

    pub(crate) fn plus(&self, other: &RadialPoly) -> Self {
        let mut raw = self.terms.clone();
        raw.extend_from_slice(&other.terms);
        Self::new(raw)
    }

    pub(crate) fn minus(&self, other: &RadialPoly) -> Self {
        let mut raw = self.terms.clone();
        raw.extend(other.terms.iter().map(|&(e, c)| (e, -c)));
        Self::new(raw)
    }

    pub(crate) fn scaled(&self, factor: f64) -> Self {
        Self::new(self.terms.iter().map(|&(e, c)| (e, c * factor)).collect())
    }

    /// Multiplies by `r^shift`.
    pub(crate) fn shifted(&self, shift: f64) -> Self {
        Self::new(self.terms.iter().map(|&(e, c)| (e + shift, c)).collect())
    }

    /// Replaces every coefficient by its absolute value.
    pub(crate) fn abs_coefficients(&self) -> Self {
        Self::new(self.terms.iter().map(|&(e, c)| (e, c.abs())).collect())
    }

    pub(crate) fn eval(&self, r: f64) -> f64 {
        self.terms.iter().map(|&(e, c)| c * pow(r, e)).sum()
    }

    pub(crate) fn leading(&self) -> Option<(f64, f64)> {
        self.terms.first().copied()
    }

    pub(crate) fn coefficient_sum_abs(&self) -> f64 {
        self.terms.iter().map(|t| t.1.abs()).sum()
    }

    /// Certifies `self(r) >= 0` for every `r >= start` (`start > 0`).
    ///
    /// For `r >= start` and `e < E` one has `r^e <= r^E start^(e - E)`, so the
    /// sum is bounded below by `r^E (A - sum_{c_e < 0} |c_e| start^(e - E))`.
    pub(crate) fn nonnegative_beyond(&self, start: f64) -> bool {
        let Some((top, lead)) = self.leading() else {
            return true;
        };
        if lead < 0.0 {
            return false;
        }
        let negative: f64 = self.terms[1..]
            .iter()
            .filter(|t| t.1 < 0.0)
            .map(|&(e, c)| c.abs() * pow(start, e - top))
            .sum();
        lead >= negative
    }
}

fn pow(r: f64, e: f64) -> f64 {
    if e == 0.0 {
        1.0
    } else if e.fract() == 0.0 && e.abs() <= 64.0 {
        r.powi(e as i32)
    } else {
        r.powf(e)
    }
}
