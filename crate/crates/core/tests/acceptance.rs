//! Acceptance gate: every numbered check recipe plus an invariant suite on
//! randomized inputs. Tolerances live inside the recipe bodies; each recipe
//! emits one pass/fail line per check and a final verdict line.

use fklab::ground_action::Grid;
use fklab::kam::{build_solution, lax_oleinik, SolutionKind};
use fklab::mane::{fundamental_configuration, mane_table};
use fklab::model::{Family, InteractionModel, ModelSpec};
use fklab::recipes::run_recipe;
use fklab::substrate::{generate, SubstrateSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gate(name: &str) {
    let outcome =
        run_recipe(name, None).unwrap_or_else(|e| panic!("recipe {name} failed to run: {e}"));
    for line in &outcome.lines {
        println!("{line}");
    }
    assert!(outcome.pass, "recipe {name} reported failure:\n{}", outcome.lines.join("\n"));
}

#[test]
fn ac00_smoke() {
    gate("AC0-smoke");
}

#[test]
fn ac01_degenerate_bracket_pins_ground_action() {
    gate("AC1");
}

#[test]
fn ac02_antisymmetric_potential_grows_linearly() {
    gate("AC2");
}

#[test]
fn ac03_potential_is_additive_along_the_drift() {
    gate("AC3");
}

#[test]
fn ac04_zero_drift_chains_stay_in_one_cell() {
    gate("AC4");
}

#[test]
fn ac05_strong_drift_is_nondegenerate() {
    gate("AC5");
}

#[test]
fn ac06_quasiperiodic_ladder_beats_self_interaction() {
    gate("AC6");
}

#[test]
fn ac07_preferred_ordering_follows_the_drift_sign() {
    gate("AC7");
}

#[test]
fn ac08_growth_dichotomy_is_one_sided() {
    gate("AC8");
}

#[test]
fn ac09_table_agrees_with_brute_force() {
    gate("AC9");
}

#[test]
fn ac10_solutions_verify_and_classify() {
    gate("AC10");
}

#[test]
fn ac11_calibration_constant_matches_level() {
    gate("AC11");
}

#[test]
fn ac12_window_monotonicity_and_sweep() {
    gate("AC12");
}

// ---------------------------------------------------------------------------
// Invariant suite: randomized, seed-pinned checks of the structural
// properties every build relies on.
// ---------------------------------------------------------------------------

fn periodic_model(lambda: f64, coupling: f64, g: &Grid) -> InteractionModel {
    let spec =
        ModelSpec { lambda, coupling, family: Family::Periodic, substrate: None };
    InteractionModel::for_window(spec, g.lo - 2.0 - lambda.abs(), g.hi + 2.0 + lambda.abs())
        .unwrap()
}

/// Chains concatenate, so the reduced potential must satisfy the triangle
/// inequality at every triple of sites, for any calibration level.
#[test]
fn reduced_potential_triangle_inequality() {
    let g = Grid::new(-6.0, 6.0, 1.0 / 64.0).unwrap();
    let m = periodic_model(0.3, 0.4, &g);
    let e_bar = 1e-4;
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let pick = |rng: &mut ChaCha8Rng| {
        // keep refs a couple of search radii from the window ends
        g.index_nearest(rng.gen_range(-4.0..4.0))
    };
    for _ in 0..50 {
        let (ix, iy, iz) = (pick(&mut rng), pick(&mut rng), pick(&mut rng));
        let tx = mane_table(&m, &g, g.node(ix), e_bar).unwrap();
        let ty = mane_table(&m, &g, g.node(iy), e_bar).unwrap();
        let direct = tx.values[iz];
        let via = tx.values[iy] + ty.values[iz];
        assert!(
            direct <= via + 1e-9,
            "S({}, {}) = {direct} exceeds S({0}, {}) + S({2}, {1}) = {via}",
            g.node(ix),
            g.node(iz),
            g.node(iy),
        );
    }
}

/// A single bond is an admissible chain, so `S(x, y) ≤ E(x, y) − ē`; and a
/// calibrated table's increments never exceed the reduced potential.
#[test]
fn reduced_potential_bounds_calibrated_increments() {
    let g = Grid::new(-16.0, 16.0, 1.0 / 64.0).unwrap();
    let m = periodic_model(1.0, 0.1, &g);
    let e_bar = 0.0;
    let u = build_solution(&m, &g, SolutionKind::TypeI, 1, e_bar, 500, 1e-8).unwrap();
    let (ilo, ihi) = u.interior;
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..8 {
        let ix = rng.gen_range(ilo..=ihi);
        let table = mane_table(&m, &g, g.node(ix), e_bar).unwrap();
        for _ in 0..25 {
            let iy = rng.gen_range(ilo..=ihi);
            let s = table.values[iy];
            let du = u.values[iy] - u.values[ix];
            assert!(
                du <= s + 1e-9,
                "u({}) − u({}) = {du} exceeds S = {s}",
                g.node(iy),
                g.node(ix),
            );
            let gap = g.node(iy) - g.node(ix);
            if gap.abs() <= 3.0 {
                let edge = m.energy(g.node(ix), g.node(iy)).unwrap() - e_bar;
                assert!(
                    s <= edge + 1e-12,
                    "S({}, {}) = {s} exceeds the direct bond {edge}",
                    g.node(ix),
                    g.node(iy),
                );
            }
        }
    }
}

/// The smoothing operator is monotone (exactly, rounding is order
/// preserving) and non-expansive (up to accumulation noise).
#[test]
fn operator_monotone_and_nonexpansive_on_random_tables() {
    let g = Grid::new(-2.0, 2.0, 1.0 / 32.0).unwrap();
    let m = periodic_model(0.5, 0.3, &g);
    let n = g.len();
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    let dyadic =
        |rng: &mut ChaCha8Rng| (0..n).map(|_| rng.gen_range(-64i32..=64) as f64 / 32.0).collect::<Vec<_>>();
    for _ in 0..200 {
        let u = dyadic(&mut rng);
        let v = dyadic(&mut rng);
        let tu = lax_oleinik(&m, &g, &u, 0.0).unwrap();
        let tv = lax_oleinik(&m, &g, &v, 0.0).unwrap();
        let gap = u.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        let tgap = tu.iter().zip(&tv).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        assert!(tgap <= gap + 1e-12, "operator expanded {gap} to {tgap}");

        let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a.min(*b)).collect();
        let tw = lax_oleinik(&m, &g, &w, 0.0).unwrap();
        for j in 0..n {
            assert!(tw[j] <= tu[j] && tw[j] <= tv[j], "monotonicity failed at node {j}");
        }

        let c = rng.gen_range(-8i32..=8) as f64 / 4.0;
        let shifted: Vec<f64> = u.iter().map(|a| a + c).collect();
        let ts = lax_oleinik(&m, &g, &shifted, 0.0).unwrap();
        for j in 0..n {
            assert!(
                (ts[j] - (tu[j] + c)).abs() <= 1e-12,
                "shift equivariance failed at node {j}: {} vs {}",
                ts[j],
                tu[j] + c
            );
        }
    }
}

/// Away from the degenerate region, minimizing free chains advance strictly
/// monotonically in the drift direction.
#[test]
fn fundamental_chains_strictly_monotone() {
    let g = Grid::new(-18.0, 18.0, 1.0 / 64.0).unwrap();
    for &lambda in &[0.8, 1.2] {
        for &coupling in &[0.05, 0.15] {
            let m = periodic_model(lambda, coupling, &g);
            for &n in &[4usize, 6] {
                let chain = fundamental_configuration(&m, &g, n).unwrap();
                assert_eq!(chain.points.len(), n + 1);
                assert!(
                    chain.strictly_monotone(),
                    "chain not strictly monotone at λ = {lambda}, K = {coupling}, n = {n}: {:?}",
                    chain.points
                );
                assert!(chain.displacement() > 0.0);
                assert!(
                    chain.rotation() > 0.3,
                    "rotation {} too small at λ = {lambda}, K = {coupling}",
                    chain.rotation()
                );
            }
        }
    }
}

/// Translating by a pattern return vector reproduces the bond energies up to
/// the recurrence tolerance: the model inherits the substrate's repetitivity.
#[test]
fn energy_repeats_under_substrate_return_vectors() {
    let alpha = 0.447_213_595_499_957_94; // 1/√5
    let rho = 1.732_050_807_568_877_2; // √3
    let spec = SubstrateSpec::new(alpha, rho).unwrap();
    let sub = generate(&spec, -2000, 2000).unwrap();
    let translations = sub.return_vectors(0.0, 8.0, -45.0, 45.0, 1e-9).unwrap();
    let ms = ModelSpec {
        lambda: 1.0,
        coupling: 0.04,
        family: Family::QuasiPeriodic,
        substrate: Some(spec),
    };
    let m = InteractionModel::for_window(ms, -60.0, 60.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let picked: Vec<f64> = translations.iter().copied().filter(|t| t.abs() > 1e-9).take(12).collect();
    assert!(picked.len() >= 4, "too few return vectors: {:?}", translations);
    for &t in &picked {
        for _ in 0..25 {
            let x = rng.gen_range(-7.0..7.0);
            let y = x + rng.gen_range(-3.0..3.0);
            let base = m.energy(x, y).unwrap();
            let moved = m.energy(x + t, y + t).unwrap();
            assert!(
                (moved - base).abs() <= 1e-7 * (1.0 + base.abs()),
                "energy changed under t = {t}: E({x}, {y}) = {base} vs {moved}"
            );
        }
    }
}

/// For the unit-periodic family on a unit-compatible grid, shifting the
/// reference by one period reproduces the table values on nodes far enough
/// from the window ends.
#[test]
fn periodic_table_shifts_by_integer_translations() {
    let g = Grid::new(-10.0, 10.0, 1.0 / 64.0).unwrap();
    let m = periodic_model(0.4, 0.3, &g);
    let e_bar = 1e-4;
    let t0 = mane_table(&m, &g, 0.0, e_bar).unwrap();
    let t1 = mane_table(&m, &g, 1.0, e_bar).unwrap();
    let per = (1.0 / g.step).round() as usize;
    let mut worst = 0.0f64;
    for ix in g.index_nearest(-4.0)..=g.index_nearest(4.0) {
        let d = (t1.values[ix + per] - t0.values[ix]).abs();
        worst = worst.max(d);
    }
    assert!(worst <= 1e-12, "translated tables differ by {worst}");
}
