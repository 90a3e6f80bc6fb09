//! Quasi-periodic substrates: point sets `q_k = k + (ρ−1)·⌊kα⌋` with their
//! two-letter coding, cell lookup and pattern recurrence.
//!
//! The coding word `a_k = ⌊kα⌋ − ⌊k(α−1)... ⌋` — concretely
//! `a_k = ⌊kα⌋ − ⌊(k−1)α⌋ ∈ {0, 1}` — decides whether the cell ending at
//! `q_k` has length 1 (letter 0) or ρ (letter 1). For α < ½ the word never
//! contains two consecutive 1s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a quasi-periodic substrate.
///
/// `alpha` is the coding slope (in `(0, ½)`, irrational in the intended use),
/// `rho` the length of the stretched cells (`> 0`; `rho = 1` degenerates to
/// the integer lattice).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubstrateSpec {
    pub alpha: f64,
    pub rho: f64,
}

impl SubstrateSpec {
    pub fn new(alpha: f64, rho: f64) -> Result<Self> {
        let spec = SubstrateSpec { alpha, rho };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha.is_finite() || self.alpha <= 0.0 || self.alpha >= 0.5 {
            return Err(Error::parameter(format!(
                "substrate alpha must lie in (0, 0.5), got {}",
                self.alpha
            )));
        }
        if !self.rho.is_finite() || self.rho <= 0.0 {
            return Err(Error::parameter(format!(
                "substrate rho must be positive and finite, got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

/// `⌊k·alpha⌋` computed exactly in integer arithmetic.
///
/// Treats `alpha` as the exact dyadic rational `m·2^e` its bit pattern
/// represents and evaluates `⌊k·m / 2^(−e)⌋` in `i128` with euclidean
/// (floor) division, staged so arbitrarily large shifts (subnormal `alpha`)
/// stay in range. A plain `(k as f64 * alpha).floor()` rounds the product
/// first and misclassifies letters when `k·alpha` lands within an ulp of an
/// integer.
pub fn floor_mul(k: i64, alpha: f64) -> i64 {
    debug_assert!(alpha.is_finite() && alpha > 0.0 && alpha < 1.0);
    if k == 0 {
        return 0;
    }
    let bits = alpha.to_bits();
    let exp_field = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, exp) = if exp_field == 0 {
        (frac as i128, -1074i64) // subnormal
    } else {
        ((frac | (1u64 << 52)) as i128, exp_field - 1075)
    };
    let mut value = (k as i128) * mantissa;
    let mut shift = -exp; // alpha < 1 ⟹ exp < 0
    debug_assert!(shift > 0);
    while shift > 63 {
        value = value.div_euclid(1i128 << 63);
        shift -= 63;
    }
    value.div_euclid(1i128 << shift) as i64
}

/// Coding letter `a_k = ⌊kα⌋ − ⌊(k−1)α⌋`.
pub fn letter(k: i64, alpha: f64) -> u8 {
    (floor_mul(k, alpha) - floor_mul(k - 1, alpha)) as u8
}

/// Substrate point `q_k = k + (ρ−1)·⌊kα⌋`.
pub fn point(k: i64, spec: &SubstrateSpec) -> f64 {
    k as f64 + (spec.rho - 1.0) * floor_mul(k, spec.alpha) as f64
}

/// Whether a cell has unit length or length ρ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellKind {
    Unit,
    Scaled,
}

/// The cell containing a query point: index of its left endpoint, kind,
/// and the offset of the query inside the cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellRef {
    pub k: i64,
    pub kind: CellKind,
    pub start: f64,
    pub len: f64,
    pub offset: f64,
}

/// A generated window of a substrate: points `q_k` and coding letters `a_k`
/// for `k ∈ [k_min, k_max]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Substrate {
    pub spec: SubstrateSpec,
    pub k_min: i64,
    pub k_max: i64,
    /// `points[i] = q_(k_min + i)`, strictly increasing.
    pub points: Vec<f64>,
    /// `word[i] = a_(k_min + i)`.
    pub word: Vec<u8>,
}

/// Generate the substrate window for `k ∈ [k_min, k_max]`.
pub fn generate(spec: &SubstrateSpec, k_min: i64, k_max: i64) -> Result<Substrate> {
    spec.validate()?;
    if k_min >= k_max {
        return Err(Error::parameter(format!(
            "substrate index window must satisfy k_min < k_max, got [{k_min}, {k_max}]"
        )));
    }
    let n = (k_max - k_min + 1) as usize;
    let mut points = Vec::with_capacity(n);
    let mut word = Vec::with_capacity(n);
    let mut prev_floor = floor_mul(k_min - 1, spec.alpha);
    for k in k_min..=k_max {
        let f = floor_mul(k, spec.alpha);
        points.push(k as f64 + (spec.rho - 1.0) * f as f64);
        word.push((f - prev_floor) as u8);
        prev_floor = f;
    }
    debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
    Ok(Substrate { spec: *spec, k_min, k_max, points, word })
}

impl Substrate {
    /// Covered interval `[q_k_min, q_k_max]`.
    pub fn window(&self) -> (f64, f64) {
        (self.points[0], *self.points.last().unwrap())
    }

    pub fn point(&self, k: i64) -> Option<f64> {
        if k < self.k_min || k > self.k_max {
            return None;
        }
        Some(self.points[(k - self.k_min) as usize])
    }

    /// Locate the cell `[q_k, q_(k+1))` containing `x`.
    ///
    /// Errors with a range error when `x` lies outside `[q_k_min, q_k_max)`.
    pub fn cell_at(&self, x: f64) -> Result<CellRef> {
        let (lo, hi) = self.window();
        if !x.is_finite() || x < lo || x >= hi {
            return Err(Error::range(format!(
                "point {x} outside generated substrate range [{lo}, {hi})"
            )));
        }
        // First index with points[i] > x, minus one: the cell's left endpoint.
        let i = self.points.partition_point(|&q| q <= x) - 1;
        let start = self.points[i];
        let end = self.points[i + 1];
        // Cell [q_k, q_{k+1}) is scaled iff the letter a_{k+1} is 1.
        let kind = if self.word[i + 1] == 1 { CellKind::Scaled } else { CellKind::Unit };
        Ok(CellRef {
            k: self.k_min + i as i64,
            kind,
            start,
            len: end - start,
            offset: x - start,
        })
    }

    /// Frequency of a two-letter-alphabet pattern in the generated word:
    /// overlapping occurrence count divided by the window length.
    ///
    /// Requires a nonempty `{0,1}` pattern and a window at least 10 times
    /// longer than the pattern.
    pub fn subword_frequency(&self, pattern: &[u8]) -> Result<f64> {
        if pattern.is_empty() || pattern.iter().any(|&b| b > 1) {
            return Err(Error::parameter(
                "subword pattern must be a nonempty word over {0, 1}".to_string(),
            ));
        }
        if self.word.len() < 10 * pattern.len() {
            return Err(Error::parameter(format!(
                "substrate window ({} letters) shorter than 10x pattern length ({})",
                self.word.len(),
                pattern.len()
            )));
        }
        let count = self.word.windows(pattern.len()).filter(|w| *w == pattern).count();
        Ok(count as f64 / self.word.len() as f64)
    }

    fn has_point_near(&self, x: f64, tol: f64) -> bool {
        let i = self.points.partition_point(|&q| q < x);
        let mut best = f64::INFINITY;
        if i < self.points.len() {
            best = best.min((self.points[i] - x).abs());
        }
        if i > 0 {
            best = best.min((self.points[i - 1] - x).abs());
        }
        best <= tol
    }

    fn points_in(&self, lo: f64, hi: f64) -> &[f64] {
        let a = self.points.partition_point(|&q| q < lo);
        let b = self.points.partition_point(|&q| q <= hi);
        &self.points[a..b]
    }

    /// Translations `t` in `[search_lo, search_hi]` under which the point
    /// pattern inside `[center − radius, center + radius]` recurs exactly
    /// (within `tol`): every pattern point maps onto a substrate point and the
    /// translated window contains no extra points. Always contains `t = 0`
    /// when the search window does. Candidate translations whose window
    /// leaves the generated range are skipped (they cannot be verified).
    pub fn return_vectors(
        &self,
        center: f64,
        radius: f64,
        search_lo: f64,
        search_hi: f64,
        tol: f64,
    ) -> Result<Vec<f64>> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::parameter(format!("pattern radius must be positive, got {radius}")));
        }
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(Error::parameter(format!("pattern tolerance must be positive, got {tol}")));
        }
        if search_lo > search_hi {
            return Err(Error::parameter(format!(
                "search window [{search_lo}, {search_hi}] is empty"
            )));
        }
        let (w_lo, w_hi) = self.window();
        if center - radius < w_lo || center + radius > w_hi {
            return Err(Error::range(format!(
                "pattern window [{}, {}] exceeds generated substrate range [{w_lo}, {w_hi}]",
                center - radius,
                center + radius
            )));
        }
        let pattern = self.points_in(center - radius - tol, center + radius + tol).to_vec();
        if pattern.is_empty() {
            return Err(Error::parameter(format!(
                "pattern window [{}, {}] contains no substrate points",
                center - radius,
                center + radius
            )));
        }
        let p0 = pattern[0];
        let mut out: Vec<f64> = Vec::new();
        for &q in &self.points {
            let t = q - p0;
            if t < search_lo - tol || t > search_hi + tol {
                continue;
            }
            if center + t - radius < w_lo - tol || center + t + radius > w_hi + tol {
                continue;
            }
            let forward_ok = pattern.iter().all(|&p| self.has_point_near(p + t, tol));
            if !forward_ok {
                continue;
            }
            let got = self.points_in(center + t - radius - tol, center + t + radius + tol);
            if got.len() != pattern.len() {
                continue;
            }
            if out.last().map_or(true, |&last| t - last > tol) {
                out.push(t);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALPHA: f64 = 0.447_213_595_499_957_94; // 1/sqrt(5)
    const RHO: f64 = 1.732_050_807_568_877_2; // sqrt(3)

    fn spec() -> SubstrateSpec {
        SubstrateSpec::new(ALPHA, RHO).unwrap()
    }

    #[test]
    fn floor_mul_matches_known_values() {
        // ⌊k/√5⌋ for k = 1..10: 0,0,1,1,2,2,3,3,4,4
        let expect = [0, 0, 1, 1, 2, 2, 3, 3, 4, 4];
        for (i, &e) in expect.iter().enumerate() {
            assert_eq!(floor_mul((i + 1) as i64, ALPHA), e, "k = {}", i + 1);
        }
        assert_eq!(floor_mul(0, ALPHA), 0);
        assert_eq!(floor_mul(-1, ALPHA), -1);
        assert_eq!(floor_mul(-2, ALPHA), -1);
        assert_eq!(floor_mul(-3, ALPHA), -2);
    }

    #[test]
    fn floor_mul_is_exact_for_dyadic_slopes() {
        // alpha = 3/8: k*alpha floors are computable by hand in integers.
        let alpha = 0.375;
        for k in -1000i64..=1000 {
            assert_eq!(floor_mul(k, alpha), (3 * k).div_euclid(8), "k = {k}");
        }
    }

    #[test]
    fn floor_mul_handles_subnormal_slope() {
        let tiny = f64::from_bits(1); // smallest positive subnormal
        assert_eq!(floor_mul(1, tiny), 0);
        assert_eq!(floor_mul(i64::MAX / 2, tiny), 0);
        assert_eq!(floor_mul(-1, tiny), -1);
    }

    #[test]
    fn floor_mul_agrees_with_wide_integer_reference() {
        // Independent reference: same decomposition but a single u128 shift,
        // valid while the shift fits. Exercises the staged-division path only
        // through agreement on normal slopes.
        fn reference(k: i64, alpha: f64) -> i64 {
            let bits = alpha.to_bits();
            let exp_field = ((bits >> 52) & 0x7ff) as i64;
            let m = ((bits & ((1u64 << 52) - 1)) | (1u64 << 52)) as i128;
            let shift = 1075 - exp_field;
            assert!(shift < 127);
            ((k as i128 * m).div_euclid(1i128 << shift)) as i64
        }
        for &alpha in &[ALPHA, 0.123456789, 0.499999999999, 1e-6] {
            for k in [-987654321, -12345, -7, -1, 0, 1, 7, 12345, 987654321] {
                assert_eq!(floor_mul(k, alpha), reference(k, alpha), "alpha={alpha} k={k}");
            }
        }
    }

    #[test]
    fn known_points() {
        let s = spec();
        assert_eq!(point(1, &s), 1.0);
        assert_eq!(point(2, &s), 2.0);
        // q_3 = 3 + (√3 − 1)·1 = 2 + √3
        let q3 = point(3, &s);
        assert!((q3 - (2.0 + RHO)).abs() < 1e-15, "q3 = {q3}");
    }

    #[test]
    fn rho_one_gives_integer_lattice() {
        let s = SubstrateSpec::new(ALPHA, 1.0).unwrap();
        let sub = generate(&s, -50, 50).unwrap();
        for (i, &q) in sub.points.iter().enumerate() {
            assert_eq!(q, (sub.k_min + i as i64) as f64);
        }
    }

    #[test]
    fn word_letters_binary_no_adjacent_ones() {
        let sub = generate(&spec(), -2000, 2000).unwrap();
        assert!(sub.word.iter().all(|&a| a <= 1));
        assert!(!sub.word.windows(2).any(|w| w == [1, 1]));
    }

    #[test]
    fn gaps_are_one_or_rho() {
        let sub = generate(&spec(), -500, 500).unwrap();
        for w in sub.points.windows(2) {
            let gap = w[1] - w[0];
            assert!((gap - 1.0).abs() < 1e-12 || (gap - RHO).abs() < 1e-12, "gap {gap}");
        }
    }

    #[test]
    fn one_frequency_approaches_alpha() {
        let sub = generate(&spec(), -4000, 4000).unwrap();
        let f = sub.subword_frequency(&[1]).unwrap();
        assert!((f - ALPHA).abs() < 2.0 / sub.word.len() as f64 + 1e-12, "freq {f}");
        // two adjacent stretched cells never occur
        assert_eq!(sub.subword_frequency(&[1, 1]).unwrap(), 0.0);
        // complementary frequencies
        let f0 = sub.subword_frequency(&[0]).unwrap();
        assert!((f + f0 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn subword_frequency_rejects_bad_input() {
        let sub = generate(&spec(), 0, 100).unwrap();
        assert!(sub.subword_frequency(&[]).is_err());
        assert!(sub.subword_frequency(&[2]).is_err());
        assert!(sub.subword_frequency(&[0; 11]).is_err()); // window 101 < 110
    }

    #[test]
    fn cell_lookup_matches_points() {
        let sub = generate(&spec(), -100, 100).unwrap();
        // q_2 = 2, next point q_3 = 2 + √3 ⟹ x = 2.5 sits in a scaled cell.
        let c = sub.cell_at(2.5).unwrap();
        assert_eq!(c.k, 2);
        assert_eq!(c.kind, CellKind::Scaled);
        assert!((c.offset - 0.5).abs() < 1e-12);
        assert!((c.len - RHO).abs() < 1e-12);
        // x = 1.5 sits in the unit cell [q_1, q_2) = [1, 2).
        let c = sub.cell_at(1.5).unwrap();
        assert_eq!(c.k, 1);
        assert_eq!(c.kind, CellKind::Unit);
        assert!((c.offset - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cell_lookup_rejects_out_of_range() {
        let sub = generate(&spec(), -10, 10).unwrap();
        let (lo, hi) = sub.window();
        assert!(sub.cell_at(lo - 1.0).is_err());
        assert!(sub.cell_at(hi).is_err()); // right endpoint exclusive
        assert!(sub.cell_at(lo).is_ok());
    }

    #[test]
    fn return_vectors_integer_lattice() {
        let s = SubstrateSpec::new(ALPHA, 1.0).unwrap();
        let sub = generate(&s, -40, 40).unwrap();
        let t = sub.return_vectors(0.0, 2.2, -10.0, 10.0, 1e-9).unwrap();
        let expect: Vec<f64> = (-10..=10).map(f64::from).collect();
        assert_eq!(t.len(), expect.len());
        for (a, b) in t.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn return_vectors_contain_zero_and_translate_pattern() {
        let sub = generate(&spec(), -600, 600).unwrap();
        let (center, radius) = (0.0, 5.0);
        let t = sub.return_vectors(center, radius, -200.0, 200.0, 1e-9).unwrap();
        assert!(t.iter().any(|&v| v.abs() < 1e-12), "t = 0 missing");
        assert!(t.len() > 3, "expected several recurrences, got {}", t.len());
        let pattern = sub.points_in(center - radius, center + radius).to_vec();
        for &v in &t {
            for &p in &pattern {
                assert!(sub.has_point_near(p + v, 1e-9), "pattern point {p} fails under t={v}");
            }
        }
    }

    #[test]
    fn return_vectors_relatively_dense() {
        let sub = generate(&spec(), -2000, 2000).unwrap();
        let t = sub.return_vectors(0.0, 4.0, -800.0, 800.0, 1e-9).unwrap();
        assert!(t.len() >= 10);
        let max_gap = t.windows(2).map(|w| w[1] - w[0]).fold(0.0f64, f64::max);
        // Relative density: recurrence gaps stay bounded (loose empirical bound).
        assert!(max_gap < 40.0, "max recurrence gap {max_gap}");
    }

    #[test]
    fn return_vectors_rejects_uncovered_pattern() {
        let sub = generate(&spec(), -10, 10).unwrap();
        let err = sub.return_vectors(0.0, 100.0, -5.0, 5.0, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Range(_)));
    }

    #[test]
    fn spec_validation() {
        assert!(SubstrateSpec::new(0.0, 1.0).is_err());
        assert!(SubstrateSpec::new(0.5, 1.0).is_err());
        assert!(SubstrateSpec::new(0.3, 0.0).is_err());
        assert!(SubstrateSpec::new(0.3, -1.0).is_err());
        assert!(SubstrateSpec::new(f64::NAN, 1.0).is_err());
        assert!(SubstrateSpec::new(0.3, 1.5).is_ok());
        assert!(generate(&spec(), 5, 5).is_err());
    }

    #[cfg(test)]
    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn floor_mul_is_monotone_and_bounded(
                k in -1_000_000i64..1_000_000,
                alpha in 1e-9f64..0.499_999,
            ) {
                let f = floor_mul(k, alpha);
                let fp = floor_mul(k + 1, alpha);
                prop_assert!(f <= fp && fp <= f + 1);
                // ⌊kα⌋ ≤ kα < ⌊kα⌋ + 1 up to the rounding of kα itself
                let approx = k as f64 * alpha;
                prop_assert!((f as f64) <= approx + 1e-6);
                prop_assert!(approx - 1.0 - 1e-6 <= f as f64);
            }

            #[test]
            fn cells_partition_window(
                x in -80.0f64..80.0,
                rho in 0.3f64..2.5,
            ) {
                let s = SubstrateSpec::new(0.447_213_595_499_957_94, rho).unwrap();
                let sub = generate(&s, -200, 200).unwrap();
                let c = sub.cell_at(x).unwrap();
                prop_assert!(c.start <= x && x < c.start + c.len);
                prop_assert!(c.offset >= 0.0 && c.offset < c.len);
                let expect_len = match c.kind {
                    CellKind::Unit => 1.0,
                    CellKind::Scaled => rho,
                };
                prop_assert!((c.len - expect_len).abs() < 1e-9);
            }
        }
    }
}
