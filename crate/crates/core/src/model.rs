//! Nearest-neighbour interaction energies
//! `E(x, y) = ½·(y − x − λ)² + K·V(x)` where the on-site potential `V` is
//! adapted to a substrate: cosine wells of unit shape on unit cells and
//! ρ-scaled shape on stretched cells, or the plain 1-periodic well.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_action::Grid;
use crate::substrate::{self, CellKind, Substrate, SubstrateSpec};

/// Which on-site potential family the model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `V(x) = 1 − cos(2πx)`, exactly 1-periodic.
    Periodic,
    /// Pattern-equivariant potential built from a quasi-periodic substrate.
    QuasiPeriodic,
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        match s {
            "periodic" => Ok(Family::Periodic),
            "quasiperiodic" | "quasi_periodic" | "quasi-periodic" => Ok(Family::QuasiPeriodic),
            other => Err(Error::config(format!(
                "unknown model family '{other}' (expected 'periodic' or 'quasiperiodic')"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Periodic => "periodic",
            Family::QuasiPeriodic => "quasiperiodic",
        }
    }
}

/// Parameters of an interaction model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Preferred bond length (drift).
    pub lambda: f64,
    /// On-site coupling `K ≥ 0`.
    pub coupling: f64,
    pub family: Family,
    /// Required for the quasi-periodic family, ignored otherwise.
    pub substrate: Option<SubstrateSpec>,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::parameter(format!("lambda must be finite, got {}", self.lambda)));
        }
        if !self.coupling.is_finite() || self.coupling < 0.0 {
            return Err(Error::parameter(format!(
                "coupling must be finite and >= 0, got {}",
                self.coupling
            )));
        }
        match self.family {
            Family::QuasiPeriodic => match &self.substrate {
                Some(s) => s.validate(),
                None => Err(Error::parameter(
                    "quasiperiodic family requires a substrate spec".to_string(),
                )),
            },
            Family::Periodic => Ok(()),
        }
    }

    /// Truncation radius that provably contains all jumps of chains whose
    /// energy per bond stays below `level`: `|λ| + √(2·level)`.
    ///
    /// Any bond with `|y − x| ≥ jump_radius(level)` alone costs
    /// `½(|y−x| − |λ|)² ≥ level`.
    pub fn jump_radius(&self, level: f64) -> Result<f64> {
        if !level.is_finite() || level < 0.0 {
            return Err(Error::parameter(format!(
                "jump radius level must be finite and >= 0, got {level}"
            )));
        }
        Ok(self.lambda.abs() + (2.0 * level).sqrt())
    }
}

/// Finite-difference twist samples of `∂²E/∂x∂y` (exactly −1 for this family).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistReport {
    pub samples: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Per-sample cross differences, in draw order.
    pub values: Vec<f64>,
}

/// A model instantiated over a concrete coordinate window: for the
/// quasi-periodic family the substrate is generated eagerly to cover the
/// window (plus jump slack), so energy evaluation inside it never fails.
#[derive(Debug, Clone)]
pub struct InteractionModel {
    spec: ModelSpec,
    substrate: Option<Substrate>,
    coverage: (f64, f64),
}

/// Largest `k` with `q_k ≤ x` (binary search over the closed form).
fn index_below(x: f64, spec: &SubstrateSpec) -> i64 {
    let gap_min = spec.rho.min(1.0);
    let m = (x.abs() / gap_min).ceil() as i64 + 4;
    let (mut lo, mut hi) = (-m, m);
    debug_assert!(substrate::point(lo, spec) <= x && substrate::point(hi, spec) > x);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if substrate::point(mid, spec) <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

impl InteractionModel {
    /// Instantiate the model so every point of `[lo − slack, hi + slack]` is
    /// covered by the generated substrate.
    pub fn for_window(spec: ModelSpec, lo: f64, hi: f64) -> Result<InteractionModel> {
        spec.validate()?;
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(Error::parameter(format!("invalid model window [{lo}, {hi}]")));
        }
        let slack = 2.0 + spec.lambda.abs();
        let coverage = (lo - slack, hi + slack);
        let substrate = match spec.family {
            Family::Periodic => None,
            Family::QuasiPeriodic => {
                let s = spec.substrate.as_ref().unwrap();
                let k_min = index_below(coverage.0, s) - 1;
                let k_max = index_below(coverage.1, s) + 2;
                Some(substrate::generate(s, k_min, k_max)?)
            }
        };
        Ok(InteractionModel { spec, substrate, coverage })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn substrate(&self) -> Option<&Substrate> {
        self.substrate.as_ref()
    }

    /// Window on which `potential`/`energy` are guaranteed to evaluate.
    pub fn coverage(&self) -> (f64, f64) {
        self.coverage
    }

    /// On-site potential `V(x)` (without the coupling factor).
    pub fn potential(&self, x: f64) -> Result<f64> {
        match &self.substrate {
            None => {
                if !x.is_finite() {
                    return Err(Error::range(format!("potential query at non-finite {x}")));
                }
                Ok(periodic_well(x))
            }
            Some(sub) => {
                let cell = sub.cell_at(x)?;
                Ok(match cell.kind {
                    CellKind::Unit => 1.0 - (2.0 * std::f64::consts::PI * cell.offset).cos(),
                    CellKind::Scaled => {
                        let rho = sub.spec.rho;
                        rho * rho
                            * (1.0 - (2.0 * std::f64::consts::PI * cell.offset / rho).cos())
                    }
                })
            }
        }
    }

    /// Bond energy `E(x, y) = ½(y − x − λ)² + K·V(x)`.
    pub fn energy(&self, x: f64, y: f64) -> Result<f64> {
        if !y.is_finite() {
            return Err(Error::range(format!("energy query at non-finite y = {y}")));
        }
        let d = y - x - self.spec.lambda;
        Ok(0.5 * d * d + self.spec.coupling * self.potential(x)?)
    }

    /// Total energy of a finite chain (sum of bond energies). Chains have at
    /// least two points.
    pub fn chain_energy(&self, points: &[f64]) -> Result<f64> {
        if points.len() < 2 {
            return Err(Error::parameter(format!(
                "chain needs at least 2 points, got {}",
                points.len()
            )));
        }
        let mut total = 0.0;
        for w in points.windows(2) {
            total += self.energy(w[0], w[1])?;
        }
        Ok(total)
    }

    /// `V` evaluated on a slice of ordered coordinates (DP hot-path cache).
    pub(crate) fn potential_table(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.potential(x)).collect()
    }

    /// `inf_x E(x, x) = λ²/2 + K·min V` over the grid nodes.
    pub fn self_interaction_inf(&self, grid: &Grid) -> Result<f64> {
        let v = self.potential_table(&grid.nodes())?;
        let vmin = v.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(0.5 * self.spec.lambda * self.spec.lambda + self.spec.coupling * vmin)
    }

    /// Sample the mixed second difference of `E` at seeded random pairs.
    pub fn twist_sample(
        &self,
        window: (f64, f64),
        samples: usize,
        seed: u64,
    ) -> Result<TwistReport> {
        use rand::{Rng, SeedableRng};
        if samples < 4 {
            return Err(Error::parameter(format!(
                "twist sampling needs at least 4 samples, got {samples}"
            )));
        }
        let (lo, hi) = window;
        if !(lo < hi) {
            return Err(Error::parameter(format!("invalid twist window [{lo}, {hi}]")));
        }
        let (c_lo, c_hi) = self.coverage;
        if lo < c_lo || hi > c_hi {
            return Err(Error::range(format!(
                "twist window [{lo}, {hi}] exceeds model coverage [{c_lo}, {c_hi}]"
            )));
        }
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // E is quadratic in (x, y) and V(x) cancels exactly between the
        // terms, so the cross difference has no truncation error; a larger
        // step only suppresses rounding noise.
        let h = 1e-2;
        let (mut min, mut max, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        let mut values = Vec::with_capacity(samples);
        for _ in 0..samples {
            let x = rng.gen_range(lo..hi - h);
            let y = rng.gen_range(lo..hi - h);
            let cross = (self.energy(x + h, y + h)? - self.energy(x + h, y)?
                - (self.energy(x, y + h)? - self.energy(x, y)?))
                / (h * h);
            min = min.min(cross);
            max = max.max(cross);
            sum += cross;
            values.push(cross);
        }
        Ok(TwistReport { samples, min, max, mean: sum / samples as f64, values })
    }
}

/// `1 − cos(2π·frac(x))`: reducing to the fractional part makes integer
/// translation equivariance exact in floating point.
fn periodic_well(x: f64) -> f64 {
    let frac = x - x.floor();
    1.0 - (2.0 * std::f64::consts::PI * frac).cos()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn periodic_spec(lambda: f64, coupling: f64) -> ModelSpec {
        ModelSpec { lambda, coupling, family: Family::Periodic, substrate: None }
    }

    fn qp_spec(lambda: f64, coupling: f64) -> ModelSpec {
        ModelSpec {
            lambda,
            coupling,
            family: Family::QuasiPeriodic,
            substrate: Some(SubstrateSpec { alpha: 0.447_213_595_499_957_94, rho: 1.732_050_807_568_877_2 }),
        }
    }

    #[test]
    fn energy_known_values() {
        let m = InteractionModel::for_window(periodic_spec(1.0, 0.1), -5.0, 5.0).unwrap();
        // ½(0 − 1)² + 0.1·(1 − cos(π/2)) = 0.5 + 0.1
        assert!((m.energy(0.25, 0.25).unwrap() - 0.6).abs() < 1e-15);

        let m = InteractionModel::for_window(periodic_spec(0.02, 0.5), -5.0, 5.0).unwrap();
        // V(0) = 0 ⟹ ½(1 − 0.02)² = 0.4802
        assert!((m.energy(0.0, 1.0).unwrap() - 0.4802).abs() < 1e-15);
    }

    #[test]
    fn chain_energy_known_values() {
        let m = InteractionModel::for_window(periodic_spec(1.0, 0.1), -5.0, 5.0).unwrap();
        // unit steps from integer wells: every bond is free
        assert_eq!(m.chain_energy(&[0.0, 1.0, 2.0]).unwrap(), 0.0);

        let m = InteractionModel::for_window(periodic_spec(0.0, 1.0), -5.0, 5.0).unwrap();
        // ½·(0.5)² + 1·V(0) = 0.125
        assert!((m.chain_energy(&[0.0, 0.5]).unwrap() - 0.125).abs() < 1e-15);

        assert!(m.chain_energy(&[0.0]).is_err());
    }

    #[test]
    fn scaled_cell_midpoint_potential() {
        let m = InteractionModel::for_window(qp_spec(0.0, 1.0), -10.0, 10.0).unwrap();
        // q_2 = 2 starts a scaled cell; at offset √3/2 the well's phase is π:
        // V = ρ²·(1 − cos π) = 3·2 = 6.
        let x = 2.0 + 1.732_050_807_568_877_2 / 2.0;
        assert!((m.potential(x).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn potential_vanishes_at_substrate_points() {
        let m = InteractionModel::for_window(qp_spec(0.5, 1.0), -20.0, 20.0).unwrap();
        let sub = m.substrate().unwrap();
        for &q in sub.points.iter().filter(|q| q.abs() < 15.0) {
            assert!(m.potential(q).unwrap().abs() < 1e-9, "V({q}) != 0");
        }
    }

    #[test]
    fn periodic_translation_equivariance_is_bitwise_on_dyadic_nodes() {
        // On dyadic coordinates x = k/256 every sum below is exact, so the
        // fractional-part reduction makes V(x+1) and E(x+1, y+1) reproduce
        // V(x), E(x, y) bit for bit.
        let m = InteractionModel::for_window(periodic_spec(0.3, 0.7), -3.0, 3.0).unwrap();
        for k in -256i32..=256 {
            let x = k as f64 / 256.0;
            let v = m.potential(x).unwrap();
            assert_eq!(v.to_bits(), m.potential(x + 1.0).unwrap().to_bits(), "x = {x}");
            let y = x + 0.375;
            let e = m.energy(x, y).unwrap();
            assert_eq!(
                e.to_bits(),
                m.energy(x + 1.0, y + 1.0).unwrap().to_bits(),
                "x = {x}"
            );
        }
    }

    #[test]
    fn self_interaction_inf_examples() {
        let grid = Grid::new(-4.0, 4.0, 1.0 / 256.0).unwrap();
        let m = InteractionModel::for_window(periodic_spec(1.0, 0.1), -5.0, 5.0).unwrap();
        assert!((m.self_interaction_inf(&grid).unwrap() - 0.5).abs() < 1e-12);
        let m = InteractionModel::for_window(periodic_spec(0.02, 0.5), -5.0, 5.0).unwrap();
        assert!((m.self_interaction_inf(&grid).unwrap() - 0.0002).abs() < 1e-12);
    }

    #[test]
    fn self_interaction_inf_tracks_grid_resolution() {
        // Offset grid so no node hits a well bottom exactly: the node minimum
        // must still be within one curvature-controlled step of λ²/2.
        let h = 1.0 / 128.0;
        let grid = Grid::new(-4.0 + h / 3.0, 4.0 + h / 3.0, h).unwrap();
        for (lambda, coupling) in [(0.3, 0.7), (-0.9, 1.5), (0.0, 2.0)] {
            let m = InteractionModel::for_window(periodic_spec(lambda, coupling), -6.0, 6.0).unwrap();
            let got = m.self_interaction_inf(&grid).unwrap();
            let expect = 0.5 * lambda * lambda;
            let tol = coupling * (2.0 * std::f64::consts::PI * h).powi(2) / 2.0;
            assert!(got >= expect - 1e-15, "inf below exact value");
            assert!(got - expect <= tol, "gap {} > tol {tol}", got - expect);
        }
    }

    #[test]
    fn jump_radius_examples() {
        assert_eq!(periodic_spec(1.0, 0.0).jump_radius(0.5).unwrap(), 2.0);
        assert_eq!(periodic_spec(0.0, 0.0).jump_radius(2.0).unwrap(), 2.0);
        assert_eq!(periodic_spec(0.02, 0.0).jump_radius(0.0).unwrap(), 0.02);
        assert!(periodic_spec(1.0, 0.0).jump_radius(-1.0).is_err());
    }

    #[test]
    fn twist_is_minus_one() {
        for spec in [periodic_spec(0.7, 0.9), qp_spec(1.0, 0.3)] {
            let m = InteractionModel::for_window(spec, -8.0, 8.0).unwrap();
            let t = m.twist_sample((-6.0, 6.0), 200, 42).unwrap();
            assert!((t.min + 1.0).abs() < 1e-6 && (t.max + 1.0).abs() < 1e-6, "{:?}", (t.min, t.max));
            assert_eq!(t.values.len(), 200);
            assert!((t.values.iter().sum::<f64>() / 200.0 - t.mean).abs() < 1e-12);
        }
        let m = InteractionModel::for_window(periodic_spec(0.7, 0.9), -8.0, 8.0).unwrap();
        assert!(m.twist_sample((-6.0, 6.0), 3, 42).is_err());
        assert!(m.twist_sample((1.0, 1.0), 50, 42).is_err());
    }

    #[test]
    fn validation_errors() {
        assert!(periodic_spec(f64::NAN, 0.0).validate().is_err());
        assert!(periodic_spec(1.0, -0.1).validate().is_err());
        let mut s = qp_spec(1.0, 0.1);
        s.substrate = None;
        assert!(s.validate().is_err());
        let m = InteractionModel::for_window(qp_spec(0.0, 1.0), -5.0, 5.0).unwrap();
        assert!(m.potential(100.0).is_err()); // outside coverage
    }

    #[cfg(test)]
    mod proptests {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn energy_superlinear_in_jump(
                x in -5.0f64..5.0,
                jump in -20.0f64..20.0,
                lambda in -1.5f64..1.5,
                coupling in 0.0f64..2.0,
            ) {
                let m = InteractionModel::for_window(
                    periodic_spec(lambda, coupling), -30.0, 30.0).unwrap();
                let e = m.energy(x, x + jump).unwrap();
                // reverse triangle: |d − λ| ≥ ||d| − |λ||, so the quadratic
                // part alone dominates ½(|d| − |λ|)²
                let excess = jump.abs() - lambda.abs();
                prop_assert!(e + 1e-12 >= 0.5 * excess * excess);
                prop_assert!(e >= 0.0);
            }

            #[test]
            fn qp_potential_nonnegative_bounded(x in -40.0f64..40.0) {
                let m = InteractionModel::for_window(
                    ModelSpec {
                        lambda: 0.0,
                        coupling: 1.0,
                        family: Family::QuasiPeriodic,
                        substrate: Some(SubstrateSpec {
                            alpha: 0.447_213_595_499_957_94,
                            rho: 1.732_050_807_568_877_2,
                        }),
                    },
                    -50.0,
                    50.0,
                ).unwrap();
                let v = m.potential(x).unwrap();
                let rho: f64 = 1.732_050_807_568_877_2;
                prop_assert!(v >= 0.0);
                prop_assert!(v <= 2.0 * rho * rho + 1e-12);
            }
        }
    }
}
