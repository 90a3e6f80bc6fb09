//! Named acceptance recipes: scaled experiments with pinned parameters and
//! tolerances, one pass/fail line per check.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::ground_action::{bracket, ladder_upper, nondegeneracy_check, Grid, Verdict};
use crate::kam::{build_solution, classify, lambda_sweep, localized_fixed_point,
    solution_distance, verify_weak_kam, SolutionKind};
use crate::mane::{brute_mane_potential, fundamental_configuration, growth_dichotomy,
    mane_potential, mane_table, preferred_ordering};
use crate::model::{Family, InteractionModel, ModelSpec};
use crate::report::{fmt_sig, write_json};
use crate::substrate::SubstrateSpec;

#[derive(Debug, Clone)]
pub struct RecipeOutcome {
    pub name: String,
    pub pass: bool,
    pub lines: Vec<String>,
}

const NAMES: [&str; 14] = [
    "AC0-smoke", "AC1", "AC2", "AC3", "AC4", "AC5", "AC6", "AC7", "AC8", "AC9", "AC10",
    "AC11", "AC12", "all",
];

pub fn is_known(name: &str) -> bool {
    NAMES.contains(&name)
}

pub fn run_recipe(name: &str, out_dir: Option<&Path>) -> Result<RecipeOutcome> {
    let outcome = match name {
        "AC0-smoke" => ac0_smoke()?,
        "AC1" => ac1()?,
        "AC2" => ac2()?,
        "AC3" => ac3()?,
        "AC4" => ac4()?,
        "AC5" => ac5()?,
        "AC6" => ac6()?,
        "AC7" => ac7()?,
        "AC8" => ac8()?,
        "AC9" => ac9()?,
        "AC10" => ac10()?,
        "AC11" => ac11()?,
        "AC12" => ac12()?,
        "all" => {
            let mut lines = Vec::new();
            let mut pass = true;
            for n in NAMES.iter().filter(|&&n| n != "all") {
                let o = run_recipe(n, None)?;
                pass &= o.pass;
                lines.extend(o.lines);
            }
            RecipeOutcome { name: "all".to_string(), pass, lines }
        }
        other => {
            return Err(crate::error::Error::parameter(format!("unknown recipe '{other}'")))
        }
    };
    if let Some(dir) = out_dir {
        let report = serde_json::json!({
            "name": outcome.name,
            "pass": outcome.pass,
            "checks": outcome.lines,
        });
        write_json(&dir.join(format!("recipe_{}.json", outcome.name)), &report)?;
    }
    Ok(outcome)
}

struct Checks {
    name: &'static str,
    lines: Vec<String>,
    pass: bool,
}

impl Checks {
    fn new(name: &'static str) -> Checks {
        Checks { name, lines: Vec::new(), pass: true }
    }

    fn check(&mut self, label: &str, ok: bool, detail: String) {
        self.pass &= ok;
        let tag = if ok { "pass" } else { "FAIL" };
        self.lines.push(format!("{} {label}: {tag} ({detail})", self.name));
    }

    fn outcome(mut self) -> RecipeOutcome {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        self.lines.push(format!("{}: {tag}", self.name));
        RecipeOutcome { name: self.name.to_string(), pass: self.pass, lines: self.lines }
    }
}

fn pmodel(lambda: f64, coupling: f64, g: &Grid) -> Result<InteractionModel> {
    let spec = ModelSpec { lambda, coupling, family: Family::Periodic, substrate: None };
    let pad = 1.0 + lambda.abs();
    InteractionModel::for_window(spec, g.lo - pad, g.hi + pad)
}

fn qpmodel(alpha: f64, rho: f64, lambda: f64, coupling: f64, g: &Grid) -> Result<InteractionModel> {
    let spec = ModelSpec {
        lambda,
        coupling,
        family: Family::QuasiPeriodic,
        substrate: Some(SubstrateSpec::new(alpha, rho)?),
    };
    let pad = 1.0 + lambda.abs();
    InteractionModel::for_window(spec, g.lo - pad, g.hi + pad)
}

/// Trivial model: every output is exactly zero.
fn ac0_smoke() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC0-smoke");
    let g = Grid::new(-2.0, 2.0, 1.0 / 64.0)?;
    let m = pmodel(0.0, 0.0, &g)?;
    let br = bracket(&m, &g, 8)?;
    c.check("bracket upper exactly zero", br.upper == 0.0, format!("upper = {}", fmt_sig(br.upper)));
    c.check(
        "bracket estimate exactly zero",
        br.estimate == 0.0,
        format!("estimate = {}", fmt_sig(br.estimate)),
    );
    let rep = nondegeneracy_check(&m, &g, 8)?;
    c.check(
        "verdict degenerate",
        rep.verdict == Verdict::Degenerate,
        format!("verdict = {}", rep.verdict.name()),
    );
    let (s00, _) = mane_potential(&m, &g, 0.0, 0.0, 0.0)?;
    c.check("self potential exactly zero", s00 == 0.0, format!("S(0,0) = {}", fmt_sig(s00)));
    // Free chains get a jump radius of 2 even with no coupling, so six free
    // bonds need a wider scan window than the bracket checks above.
    let gw = Grid::new(-9.0, 9.0, 1.0 / 64.0)?;
    let mw = pmodel(0.0, 0.0, &gw)?;
    let chain = fundamental_configuration(&mw, &gw, 6)?;
    c.check(
        "fundamental energy exactly zero",
        chain.energy == 0.0,
        format!("energy = {}", fmt_sig(chain.energy)),
    );
    c.check(
        "fundamental displacement exactly zero",
        chain.displacement() == 0.0,
        format!("displacement = {}", fmt_sig(chain.displacement())),
    );
    Ok(c.outcome())
}

/// Degenerate periodic model: the bracket pins the exact ground action λ²/2.
fn ac1() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC1");
    let g = Grid::new(-4.0, 4.0, 1.0 / 256.0)?;
    let m = pmodel(0.02, 0.5, &g)?;
    let br = bracket(&m, &g, 32)?;
    let target = 2e-4;
    c.check(
        "bracket contains the exact level",
        br.lower <= target && target <= br.upper,
        format!("[{}, {}] vs {}", fmt_sig(br.lower), fmt_sig(br.upper), fmt_sig(target)),
    );
    c.check(
        "bracket width below 5e-3",
        br.upper - br.lower <= 5e-3,
        format!("width = {}", fmt_sig(br.upper - br.lower)),
    );
    Ok(c.outcome())
}

/// Drift-free potential recovered from the tilted table satisfies the
/// announced linear lower bound at every node.
fn ac2() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC2");
    let lambda = 0.02;
    let g = Grid::new(-6.0, 6.0, 1.0 / 256.0)?;
    let m = pmodel(lambda, 0.5, &g)?;
    let br = bracket(&m, &g, 32)?;
    let t = mane_table(&m, &g, 0.0, br.estimate)?;
    let mut worst = f64::INFINITY;
    let mut worst_y = 0.0;
    for j in 0..t.values.len() {
        let y = g.node(j);
        let s0 = t.values[j] + lambda * y;
        let margin = s0 - 0.025 * (y.abs() - 0.5);
        if margin < worst {
            worst = margin;
            worst_y = y;
        }
    }
    c.check(
        "linear lower bound at every node",
        worst >= -1e-3,
        format!("worst margin {} at y = {}", fmt_sig(worst), fmt_sig(worst_y)),
    );
    Ok(c.outcome())
}

/// Integer additivity of the degenerate Mañé potential.
fn ac3() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC3");
    let g = Grid::new(-4.0, 4.0, 1.0 / 256.0)?;
    let m = pmodel(0.02, 0.5, &g)?;
    let br = bracket(&m, &g, 32)?;
    let (s1, _) = mane_potential(&m, &g, 0.0, 1.0, br.estimate)?;
    let (s2, _) = mane_potential(&m, &g, 0.0, 2.0, br.estimate)?;
    c.check(
        "S(0,2) doubles S(0,1)",
        (s2 - 2.0 * s1).abs() <= 2e-3,
        format!("S(0,1) = {}, S(0,2) = {}", fmt_sig(s1), fmt_sig(s2)),
    );
    Ok(c.outcome())
}

/// The drift-free minimizing chain from 0 to 1 never leaves the unit cell.
fn ac4() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC4");
    let g = Grid::new(-4.0, 4.0, 1.0 / 256.0)?;
    let m = pmodel(0.0, 0.5, &g)?;
    // exact level: E(x,x) = K·V(x) vanishes at integers, so Ē = 0
    let (_, chain) = mane_potential(&m, &g, 0.0, 1.0, 0.0)?;
    let lo = chain.points.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = chain.points.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    c.check(
        "chain confined to the cell",
        lo >= -g.step && hi <= 1.0 + g.step,
        format!("range [{}, {}], cell [-h, 1+h], h = {}", fmt_sig(lo), fmt_sig(hi), fmt_sig(g.step)),
    );
    Ok(c.outcome())
}

/// Non-degeneracy of the periodic model below the pinning threshold.
fn ac5() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC5");
    let g = Grid::new(-4.0, 4.0, 1.0 / 256.0)?;
    let m = pmodel(1.0, 0.1, &g)?;
    let rep = nondegeneracy_check(&m, &g, 16)?;
    c.check(
        "verdict nondegenerate",
        rep.verdict == Verdict::Nondegenerate,
        format!("verdict = {}", rep.verdict.name()),
    );
    c.check(
        "upper bound separated from the floor",
        rep.bracket.upper < 0.5 - 1e-2,
        format!("upper = {} vs 0.5", fmt_sig(rep.bracket.upper)),
    );
    Ok(c.outcome())
}

/// Non-degeneracy of the quasi-periodic model under the coupling threshold.
fn ac6() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC6");
    let alpha = 1.0 / 5.0f64.sqrt();
    let rho = 3.0f64.sqrt();
    let g = Grid::new(-4.0, 4.0, 1.0 / 256.0)?;
    let m = qpmodel(alpha, rho, 1.0, 0.04, &g)?;
    let ladder = (1..=8)
        .map(|ell| ladder_upper(m.spec(), ell).expect("valid spec"))
        .fold(f64::INFINITY, f64::min);
    c.check("ladder bound below the floor", ladder < 0.5, format!("ladder = {}", fmt_sig(ladder)));
    let rep = nondegeneracy_check(&m, &g, 16)?;
    c.check(
        "verdict nondegenerate",
        rep.verdict == Verdict::Nondegenerate,
        format!("verdict = {}, upper = {}", rep.verdict.name(), fmt_sig(rep.bracket.upper)),
    );
    Ok(c.outcome())
}

/// Preferred ordering follows the drift sign at every probed size.
fn ac7() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC7");
    let sizes = [8usize, 12, 16];
    for (lambda, expected) in [(1.0f64, 1i8), (-1.0, -1)] {
        let gv = Grid::new(-4.0, 4.0, 1.0 / 256.0)?;
        let mv = pmodel(lambda, 0.1, &gv)?;
        let verdict = nondegeneracy_check(&mv, &gv, 16)?.verdict;
        c.check(
            &format!("drift {lambda:+.0} certified nondegenerate"),
            verdict == Verdict::Nondegenerate,
            format!("verdict = {}", verdict.name()),
        );
        let r0 = mv.spec().jump_radius(0.5 * lambda * lambda + 0.2 + 2.0)?;
        let half = 0.5 * (16.0 * r0 + 4.0) + 1.0;
        let g = Grid::new(-half, half, 1.0 / 128.0)?;
        let m = pmodel(lambda, 0.1, &g)?;
        let ord = preferred_ordering(&m, &g, &sizes, verdict)?;
        c.check(
            &format!("drift {lambda:+.0} ordering decided"),
            ord.decided && ord.epsilon == expected,
            format!("epsilon = {} (sizes {:?})", ord.epsilon, sizes),
        );
        c.check(
            &format!("drift {lambda:+.0} probed chains monotone"),
            ord.monotone.iter().all(|&b| b),
            format!("monotone = {:?}", ord.monotone),
        );
    }
    Ok(c.outcome())
}

/// Growth dichotomy: linear against the ordering, sublinear along it.
fn ac8() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC8");
    let g = Grid::new(-30.0, 30.0, 1.0 / 64.0)?;
    let m = pmodel(1.0, 0.1, &g)?;
    let gv = Grid::new(-4.0, 4.0, 1.0 / 256.0)?;
    let mv = pmodel(1.0, 0.1, &gv)?;
    let br = bracket(&mv, &gv, 16)?;
    let t = mane_table(&m, &g, 0.0, br.estimate)?;
    let rep = growth_dichotomy(&t, 1.0 / 3.0, 1)?;
    c.check(
        "anti-ordered slope dominates",
        rep.slope_anti >= 5.0 * rep.slope_ordered.max(0.0),
        format!("anti = {}, ordered = {}", fmt_sig(rep.slope_anti), fmt_sig(rep.slope_ordered)),
    );
    c.check(
        "ordered slope below 0.05",
        rep.slope_ordered <= 0.05,
        format!("ordered = {}", fmt_sig(rep.slope_ordered)),
    );
    Ok(c.outcome())
}

/// Bitwise oracle equivalence of the dynamic program on a coarse grid.
fn ac9() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC9");
    let g = Grid::new(-1.5, 1.5, 0.25)?;
    let m = pmodel(0.7, 0.3, &g)?;
    let n = g.len();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut mismatches = 0usize;
    let mut chain_mismatches = 0usize;
    for _ in 0..50 {
        let ix = rng.gen_range(0..n);
        let lo = ix.saturating_sub(4);
        let hi = (ix + 4).min(n - 1);
        let iy = rng.gen_range(lo..=hi);
        let (x, y) = (g.node(ix), g.node(iy));
        let (dp_v, dp_chain) = mane_potential(&m, &g, x, y, 0.0)?;
        let (or_v, or_chain) = brute_mane_potential(&m, &g, x, y, 0.0, 4)?;
        if dp_v.to_bits() != or_v.to_bits() {
            mismatches += 1;
        }
        if dp_chain.points != or_chain.points {
            chain_mismatches += 1;
        }
    }
    c.check("values bitwise equal on 50 seeded pairs", mismatches == 0, format!("{mismatches} mismatches"));
    c.check(
        "chains identical on 50 seeded pairs",
        chain_mismatches == 0,
        format!("{chain_mismatches} mismatches"),
    );
    Ok(c.outcome())
}

fn built_solutions(
    g: &Grid,
) -> Result<(InteractionModel, f64, Vec<(SolutionKind, crate::kam::KamSolution)>)> {
    let m = pmodel(1.0, 0.1, g)?;
    // The critical level per bond is a model constant; bracket it on the
    // standard reference window rather than the (much wider) solution window.
    let gb = Grid::new(-4.0, 4.0, 1.0 / 256.0)?;
    let mb = pmodel(1.0, 0.1, &gb)?;
    let br = bracket(&mb, &gb, 16)?;
    let e_bar = br.estimate;
    let mut sols = Vec::new();
    for kind in [SolutionKind::TypeI, SolutionKind::TypeII, SolutionKind::TypeIII] {
        let sol = build_solution(&m, g, kind, 1, e_bar, 500, 1e-8)?;
        sols.push((kind, sol));
    }
    Ok((m, e_bar, sols))
}

/// Weak KAM construction and classification of the three canonical types.
fn ac10() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC10");
    let g = Grid::new(-24.0, 24.0, 1.0 / 256.0)?;
    let (m, _e_bar, sols) = built_solutions(&g)?;
    for (kind, sol) in &sols {
        let rep = verify_weak_kam(&m, &g, sol, 1e-5)?;
        c.check(
            &format!("type {} verification", kind.name()),
            rep.passed && rep.calibration_residual <= 1e-5,
            format!(
                "sub-action {}, calibration {}",
                fmt_sig(rep.sub_action_max_violation),
                fmt_sig(rep.calibration_residual)
            ),
        );
        let cls = classify(&m, &g, sol, 1)?;
        c.check(
            &format!("type {} classified", kind.name()),
            cls.label == kind.name(),
            format!("label = {} (growth {}, direction {})", cls.label, cls.growth_label, cls.direction_label),
        );
        if *kind == SolutionKind::TypeIII {
            c.check(
                "type III argmin flip on a single narrow interval",
                cls.direction_label == "III" && cls.flip_width <= cls.l_emp,
                format!("flip width = {} vs L = {}", fmt_sig(cls.flip_width), fmt_sig(cls.l_emp)),
            );
        }
    }
    Ok(c.outcome())
}

/// The recovered calibration constant matches the level used.
fn ac11() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC11");
    let g = Grid::new(-24.0, 24.0, 1.0 / 256.0)?;
    let (m, e_bar, sols) = built_solutions(&g)?;
    for (kind, sol) in &sols {
        let rep = verify_weak_kam(&m, &g, sol, 1e-5)?;
        c.check(
            &format!("type {} calibration constant", kind.name()),
            (rep.c_star_median - e_bar).abs() <= 1e-4,
            format!("c* = {}, e_bar = {}", fmt_sig(rep.c_star_median), fmt_sig(e_bar)),
        );
    }
    Ok(c.outcome())
}

/// Same-type solutions stay at bounded distance as the window doubles, and
/// the drift sweep localizes the degenerate interval symmetrically.
fn ac12() -> Result<RecipeOutcome> {
    let mut c = Checks::new("AC12");
    let mut distances = Vec::new();
    for half in [12.0f64, 24.0] {
        let g = Grid::new(-half, half, 1.0 / 256.0)?;
        let m = pmodel(1.0, 0.1, &g)?;
        let br = bracket(&m, &g, 16)?;
        let a = localized_fixed_point(&m, &g, g.lo, br.estimate, 500, 1e-8)?;
        let b = localized_fixed_point(&m, &g, g.lo + 0.5, br.estimate, 500, 1e-8)?;
        distances.push(solution_distance(&a, &b)?);
    }
    c.check(
        "distance bounded as the window doubles",
        distances[1] <= 1.2 * distances[0] + 1e-9,
        format!("d = {} then {}", fmt_sig(distances[0]), fmt_sig(distances[1])),
    );

    let template =
        ModelSpec { lambda: 0.0, coupling: 0.5, family: Family::Periodic, substrate: None };
    let g = Grid::new(-4.0, 4.0, 1.0 / 256.0)?;
    let lambdas = [-1.0, -0.5, -0.02, 0.0, 0.02, 0.5, 1.0];
    let rep = lambda_sweep(&template, &lambdas, &g, 16, &[])?;
    let degenerate_set: Vec<f64> = rep
        .rows
        .iter()
        .filter(|r| r.verdict == Verdict::Degenerate)
        .map(|r| r.lambda)
        .collect();
    c.check(
        "degenerate exactly on the pinned interval",
        degenerate_set == vec![-0.02, 0.0, 0.02]
            && rep.rows.iter().all(|r| {
                r.lambda.abs() < 0.5 || r.verdict == Verdict::Nondegenerate
            }),
        format!("degenerate at {degenerate_set:?}"),
    );
    let symmetric = match (rep.lambda_plus_est, rep.lambda_minus_est) {
        (Some(p), Some(m)) => (p + m).abs() < 1e-12,
        _ => false,
    };
    c.check(
        "drift thresholds symmetric",
        symmetric,
        format!("lambda+ = {:?}, lambda- = {:?}", rep.lambda_plus_est, rep.lambda_minus_est),
    );
    Ok(c.outcome())
}
