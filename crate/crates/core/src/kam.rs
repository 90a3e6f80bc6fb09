//! Weak KAM solutions on finite windows: the smoothing operator, localized
//! fixed points with Mañé boundary data, canonical solution types, posterior
//! verification, classification, and drift sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dp::{self, EnergyTable};
use crate::error::{Error, Result};
use crate::ground_action::{nondegeneracy_check, Grid, Verdict};
use crate::mane::{self, preferred_ordering};
use crate::model::{Family, InteractionModel, ModelSpec};

/// A table `u` on a grid together with the evidence that makes it usable as
/// a localized weak KAM solution: which nodes are trusted (interior), which
/// energy level it is calibrated against, and where its argmins point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KamSolution {
    pub grid: Grid,
    /// `u` at every grid node, normalized to vanish at the node nearest 0.
    pub values: Vec<f64>,
    pub e_bar_used: f64,
    /// Reference point of the boundary data (`None` for pointwise-min builds
    /// and tables adopted from elsewhere).
    pub boundary_ref: Option<f64>,
    /// Inclusive index range at least two search radii from the window ends.
    pub interior: (usize, usize),
    /// Argmin of `u(x) + E(x, y)` per interior node; −1 outside.
    pub argmin_map: Vec<i64>,
    /// "I", "II", "III", or "unknown".
    pub type_label: String,
    /// Preferred ordering the build assumed (0 when not applicable).
    pub epsilon_used: i8,
    /// Max forward difference quotient over the interior.
    pub lip_estimate: f64,
    /// Affine slopes over the outer thirds of the (left, right) interior
    /// halves around the zero node.
    pub slopes: (f64, f64),
    pub r_search: f64,
    pub iterations: usize,
    /// Final `sup |T[u] − u|` over the interior.
    pub residual: f64,
}

/// One full application of the smoothing operator
/// `T[u](y) = min_x (u(x) + E(x, y)) − e_bar` over all grid nodes.
///
/// The minimum scans every node (no truncation), so the algebraic properties
/// of `T` — monotonicity, non-expansiveness, shift equivariance — hold with
/// no radius caveats. Quadratic in the node count; fine for working grids.
pub fn lax_oleinik(m: &InteractionModel, g: &Grid, u: &[f64], e_bar: f64) -> Result<Vec<f64>> {
    let (values, _args) = lax_oleinik_full(m, g, u, e_bar)?;
    Ok(values)
}

fn lax_oleinik_full(
    m: &InteractionModel,
    g: &Grid,
    u: &[f64],
    e_bar: f64,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let et = EnergyTable::build(m, g)?;
    let n = et.len();
    if u.len() != n {
        return Err(Error::parameter(format!(
            "table has {} entries but the grid has {n} nodes",
            u.len()
        )));
    }
    if !e_bar.is_finite() {
        return Err(Error::parameter(format!("e_bar must be finite, got {e_bar}")));
    }
    let mut out = vec![0.0; n];
    let mut arg = vec![0usize; n];
    dp::relax(&et, u, n, e_bar, &mut out, &mut arg);
    Ok((out, arg))
}

fn initial_span(et: &EnergyTable, spec: &ModelSpec, e_bar: f64) -> usize {
    let level = 0.5 * spec.lambda * spec.lambda + et.kv_max() + e_bar.abs() + 2.0;
    let r = spec.jump_radius(level).expect("finite nonnegative level");
    et.span_of(r)
}

/// Argmin sitting on an unclipped scan edge inside `[lo, hi]`?
fn range_radius_binding(arg: &[usize], span: usize, lo: usize, hi: usize) -> bool {
    let n = arg.len();
    (lo..=hi).any(|j| {
        let a = arg[j];
        (j >= span && a == j - span) || (j + span <= n - 1 && a == j + span)
    })
}

fn affine_fit_points(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 0.0;
    }
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return 0.0;
    }
    (n * sxy - sx * sy) / denom
}

/// Affine slopes of `u` over the outer thirds of the interior halves around
/// `x0`.
fn side_slopes(values: &[f64], g: &Grid, x0: usize, ilo: usize, ihi: usize) -> (f64, f64) {
    let x0 = x0.clamp(ilo, ihi);
    let left: Vec<(f64, f64)> = (ilo..=x0)
        .filter(|&j| j <= ilo + (x0 - ilo) / 3)
        .map(|j| (g.node(j), values[j]))
        .collect();
    let right: Vec<(f64, f64)> = (x0..=ihi)
        .filter(|&j| j >= ihi - (ihi - x0) / 3)
        .map(|j| (g.node(j), values[j]))
        .collect();
    (affine_fit_points(&left), affine_fit_points(&right))
}

fn lip_over(values: &[f64], g: &Grid, ilo: usize, ihi: usize) -> f64 {
    (ilo..ihi)
        .map(|j| (values[j + 1] - values[j]).abs() / g.step)
        .fold(0.0f64, f64::max)
}

impl KamSolution {
    /// Wrap an existing table (e.g. loaded from disk) with freshly computed
    /// diagnostics. Values are taken as-is; no re-normalization.
    pub fn from_values(
        m: &InteractionModel,
        g: &Grid,
        values: Vec<f64>,
        e_bar: f64,
    ) -> Result<KamSolution> {
        let et = EnergyTable::build(m, g)?;
        let n = et.len();
        if values.len() != n {
            return Err(Error::parameter(format!(
                "table has {} entries but the grid has {n} nodes",
                values.len()
            )));
        }
        let span = initial_span(&et, m.spec(), e_bar);
        let (ilo, ihi) = interior_bounds(n, span)?;
        let (tu, args) = lax_oleinik_full(m, g, &values, e_bar)?;
        let residual = (ilo..=ihi)
            .map(|j| (tu[j] - values[j]).abs())
            .fold(0.0f64, f64::max);
        let mut argmin_map = vec![-1i64; n];
        for j in ilo..=ihi {
            argmin_map[j] = args[j] as i64;
        }
        let x0 = g.index_nearest(0.0);
        let lip_estimate = lip_over(&values, g, ilo, ihi);
        let slopes = side_slopes(&values, g, x0, ilo, ihi);
        Ok(KamSolution {
            grid: *g,
            values,
            e_bar_used: e_bar,
            boundary_ref: None,
            interior: (ilo, ihi),
            argmin_map,
            type_label: "unknown".to_string(),
            epsilon_used: 0,
            lip_estimate,
            slopes,
            r_search: span as f64 * g.step,
            iterations: 0,
            residual,
        })
    }
}

fn interior_bounds(n: usize, span: usize) -> Result<(usize, usize)> {
    // trusted nodes sit at least two search radii from each window end
    let margin = 2 * span;
    if 2 * margin >= n {
        return Err(Error::config(format!(
            "window margin below two search radii per side: {n} nodes, radius {span} nodes"
        )));
    }
    Ok((margin, n - 1 - margin))
}

/// Localized fixed point of the averaged smoothing iteration
/// `u ← ½(u + T[u])` with Mañé boundary data `S(boundary_ref, ·)` frozen
/// outside the interior.
///
/// The iterate starts from the boundary data itself, interior values relax
/// until `sup |T[u] − u| ≤ tol`, and the result is normalized to vanish at
/// the node nearest 0.
pub fn localized_fixed_point(
    m: &InteractionModel,
    g: &Grid,
    boundary_ref: f64,
    e_bar: f64,
    max_iter: usize,
    tol: f64,
) -> Result<KamSolution> {
    if max_iter == 0 {
        return Err(Error::parameter("fixed point needs max_iter >= 1".to_string()));
    }
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::parameter(format!("tolerance must be positive, got {tol}")));
    }
    let table = mane::mane_table(m, g, boundary_ref, e_bar)?;
    let et = EnergyTable::build(m, g)?;
    let n = et.len();
    let mut span = initial_span(&et, m.spec(), e_bar);
    'attempt: for _ in 0..4 {
        let (ilo, ihi) = interior_bounds(n, span)?;
        let mut u = table.values.clone();
        let mut tu = u.clone();
        let mut arg = vec![0usize; n];
        let mut residual = f64::INFINITY;
        let mut iterations = 0;
        for it in 1..=max_iter {
            // full targets so interior nodes see the frozen boundary data
            dp::relax(&et, &u, span, e_bar, &mut tu, &mut arg);
            if range_radius_binding(&arg, span, ilo, ihi) && span < n {
                span = (span * 2).min(n);
                continue 'attempt;
            }
            residual = (ilo..=ihi).map(|j| (tu[j] - u[j]).abs()).fold(0.0f64, f64::max);
            iterations = it;
            if residual <= tol {
                break;
            }
            for j in ilo..=ihi {
                u[j] = 0.5 * (u[j] + tu[j]);
            }
        }
        if residual > tol {
            return Err(Error::NonConvergence {
                message: format!(
                    "averaged iteration still above tolerance {tol} after {max_iter} steps"
                ),
                residual,
            });
        }
        // diagnostics against the full (untruncated) operator
        let (tu_full, args_full) = lax_oleinik_full(m, g, &u, e_bar)?;
        let residual = (ilo..=ihi)
            .map(|j| (tu_full[j] - u[j]).abs())
            .fold(0.0f64, f64::max);
        let mut argmin_map = vec![-1i64; n];
        for j in ilo..=ihi {
            argmin_map[j] = args_full[j] as i64;
        }
        let x0 = g.index_nearest(0.0);
        let shift = u[x0];
        u.iter_mut().for_each(|v| *v -= shift);
        let lip_estimate = lip_over(&u, g, ilo, ihi);
        let slopes = side_slopes(&u, g, x0, ilo, ihi);
        return Ok(KamSolution {
            grid: *g,
            values: u,
            e_bar_used: e_bar,
            boundary_ref: Some(table.ref_point),
            interior: (ilo, ihi),
            argmin_map,
            type_label: "unknown".to_string(),
            epsilon_used: 0,
            lip_estimate,
            slopes,
            r_search: span as f64 * g.step,
            iterations,
            residual,
        });
    }
    Err(Error::inconsistency(
        "fixed-point argmins kept touching the truncation radius after doublings".to_string(),
    ))
}

/// The three canonical localized solution types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionKind {
    TypeI,
    TypeII,
    TypeIII,
}

impl SolutionKind {
    pub fn parse(s: &str) -> Result<SolutionKind> {
        match s {
            "I" | "i" | "1" | "type1" | "type_i" => Ok(SolutionKind::TypeI),
            "II" | "ii" | "2" | "type2" | "type_ii" => Ok(SolutionKind::TypeII),
            "III" | "iii" | "3" | "type3" | "type_iii" => Ok(SolutionKind::TypeIII),
            other => Err(Error::config(format!(
                "unknown solution kind '{other}' (expected I, II, or III)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SolutionKind::TypeI => "I",
            SolutionKind::TypeII => "II",
            SolutionKind::TypeIII => "III",
        }
    }
}

/// Build a canonical solution of the given kind for preferred ordering ε.
///
/// Type I references the window end the ordered direction flows *from*
/// (bounded solutions), type II the end it flows *to* (linear solutions),
/// and type III is the pointwise minimum of the two, which flips character
/// at the zero node.
pub fn build_solution(
    m: &InteractionModel,
    g: &Grid,
    kind: SolutionKind,
    epsilon: i8,
    e_bar: f64,
    max_iter: usize,
    tol: f64,
) -> Result<KamSolution> {
    if epsilon != 1 && epsilon != -1 {
        return Err(Error::parameter(format!("epsilon must be +1 or -1, got {epsilon}")));
    }
    match kind {
        SolutionKind::TypeI => {
            let reference = if epsilon == 1 { g.lo } else { g.hi };
            let mut s = localized_fixed_point(m, g, reference, e_bar, max_iter, tol)?;
            s.type_label = "I".to_string();
            s.epsilon_used = epsilon;
            Ok(s)
        }
        SolutionKind::TypeII => {
            let reference = if epsilon == 1 { g.hi } else { g.lo };
            let mut s = localized_fixed_point(m, g, reference, e_bar, max_iter, tol)?;
            s.type_label = "II".to_string();
            s.epsilon_used = epsilon;
            Ok(s)
        }
        SolutionKind::TypeIII => {
            let a = build_solution(m, g, SolutionKind::TypeI, epsilon, e_bar, max_iter, tol)?;
            let b = build_solution(m, g, SolutionKind::TypeII, epsilon, e_bar, max_iter, tol)?;
            // both vanish at the zero node, so the min flips there
            let values: Vec<f64> =
                a.values.iter().zip(&b.values).map(|(&x, &y)| x.min(y)).collect();
            let mut s = KamSolution::from_values(m, g, values, e_bar)?;
            s.type_label = "III".to_string();
            s.epsilon_used = epsilon;
            s.iterations = a.iterations + b.iterations;
            Ok(s)
        }
    }
}

/// Posterior verification of a solution table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    /// `max over interior y, all x of u(y) − u(x) − (E(x, y) − e_bar)`.
    pub sub_action_max_violation: f64,
    /// `sup |T[u] − u|` over the interior.
    pub calibration_residual: f64,
    /// Median over interior nodes of `min_x (u(x) + E(x, y)) − u(y)`.
    pub c_star_median: f64,
    pub e_bar_used: f64,
    /// Max forward difference quotient over the interior.
    pub lip_estimate: f64,
    /// Calibration-based a-priori slope bound `R + |λ| + h`.
    pub lip_apriori: f64,
    /// `sup |u(x+1) − u(x)|` when the unit cell fits the grid (periodic
    /// family only).
    pub periodicity_defect: Option<f64>,
    pub interior: (usize, usize),
    pub tolerance: f64,
    pub passed: bool,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Check the two weak KAM properties (sub-action bound and calibration), the
/// critical-value consistency `c* = e_bar`, and the Lipschitz bound.
pub fn verify_weak_kam(
    m: &InteractionModel,
    g: &Grid,
    u: &KamSolution,
    tol: f64,
) -> Result<VerifyReport> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::parameter(format!("tolerance must be positive, got {tol}")));
    }
    let et = EnergyTable::build(m, g)?;
    let n = et.len();
    if u.values.len() != n {
        return Err(Error::parameter(format!(
            "solution has {} entries but the grid has {n} nodes",
            u.values.len()
        )));
    }
    let e_bar = u.e_bar_used;
    let (ilo, ihi) = u.interior;
    if ihi >= n || ilo > ihi {
        return Err(Error::parameter(format!(
            "solution interior [{ilo}, {ihi}] does not fit the grid of {n} nodes"
        )));
    }
    let values = &u.values;

    // Sub-action bound, scanned against every source node.
    let sub_action_max_violation = (ilo..=ihi)
        .into_par_iter()
        .map(|j| {
            let uy = values[j];
            let mut worst = f64::NEG_INFINITY;
            for i in 0..n {
                let v = uy - values[i] - (et.edge(i, j) - e_bar);
                if v > worst {
                    worst = v;
                }
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);

    // Calibration and critical value from one full operator application.
    let (tu, _args) = lax_oleinik_full(m, g, values, e_bar)?;
    let calibration_residual =
        (ilo..=ihi).map(|j| (tu[j] - values[j]).abs()).fold(0.0f64, f64::max);
    let c_stars: Vec<f64> = (ilo..=ihi).map(|j| tu[j] + e_bar - values[j]).collect();
    let c_star_median = median(c_stars);

    let lip_estimate = lip_over(values, g, ilo, ihi);
    let lip_apriori = u.r_search + m.spec().lambda.abs() + g.step;

    // Defect over trusted pairs only; boundary data (e.g. the self-loop
    // value at the reference node) is not part of the solution proper.
    let periodicity_defect = if m.spec().family == Family::Periodic {
        let per = (1.0 / g.step).round();
        if per.is_finite() && per >= 1.0 && (per * g.step - 1.0).abs() <= 1e-9 {
            let per = per as usize;
            if ilo + per <= ihi {
                Some(
                    (ilo..=ihi - per)
                        .map(|j| (values[j + per] - values[j]).abs())
                        .fold(0.0f64, f64::max),
                )
            } else {
                None
            }
        } else {
            None
        }
    } else {
        None
    };

    let passed = sub_action_max_violation <= tol
        && calibration_residual <= tol
        && (c_star_median - e_bar).abs() <= tol
        && lip_estimate <= lip_apriori + 1e-9;

    Ok(VerifyReport {
        sub_action_max_violation,
        calibration_residual,
        c_star_median,
        e_bar_used: e_bar,
        lip_estimate,
        lip_apriori,
        periodicity_defect,
        interior: (ilo, ihi),
        tolerance: tol,
        passed,
    })
}

/// Classification evidence from the two independent channels.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifyReport {
    /// Final label: channel agreement or "unknown".
    pub label: String,
    pub growth_label: String,
    pub direction_label: String,
    pub epsilon: i8,
    pub slope_left: f64,
    pub slope_right: f64,
    pub theta_sub: f64,
    pub theta_lin: f64,
    pub gamma_est: f64,
    /// Fractions of interior nodes whose argmin precedes/succeeds the node
    /// in the ε-order.
    pub precede_fraction: f64,
    pub succeed_fraction: f64,
    /// Sign changes of the argmin side scanned in ε-order.
    pub flip_count: usize,
    /// Coordinate width of the prec/succ mixing zone (NaN when one-sided).
    pub flip_width: f64,
    /// Monotonicity length scale the flip is compared against.
    pub l_emp: f64,
}

/// Classify a solution as type I, II, or III using the growth channel
/// (side slopes vs thresholds derived from the growth dichotomy) and the
/// direction channel (argmin side in ε-order). Channels must agree;
/// otherwise the label is "unknown".
pub fn classify(
    m: &InteractionModel,
    g: &Grid,
    u: &KamSolution,
    epsilon: i8,
) -> Result<ClassifyReport> {
    if epsilon != 1 && epsilon != -1 {
        return Err(Error::parameter(format!("epsilon must be +1 or -1, got {epsilon}")));
    }
    let jump_scale = m.spec().lambda.abs().max(1.0);
    let x0 = g.index_nearest(0.0);
    let side_l = g.node(x0) - g.lo;
    let side_r = g.hi - g.node(x0);
    if side_l < 20.0 * jump_scale || side_r < 20.0 * jump_scale {
        return Err(Error::config(format!(
            "classification window sides ({side_l:.1}, {side_r:.1}) span fewer than 20 expected jumps"
        )));
    }

    // Growth channel: thresholds from the anti-ordered growth rate.
    let table = mane::mane_table(m, g, g.node(x0), u.e_bar_used)?;
    let growth = mane::growth_dichotomy(&table, 1.0 / 3.0, epsilon)?;
    let gamma_est = growth.gamma_est;
    let theta_lin = 0.5 * gamma_est;
    let theta_sub = 0.2 * theta_lin;
    let (slope_left, slope_right) = u.slopes;
    let eps_f = epsilon as f64;
    let growth_label = if gamma_est <= 0.0 {
        "unknown".to_string()
    } else {
        let sub_l = slope_left.abs() < theta_sub;
        let sub_r = slope_right.abs() < theta_sub;
        // "linear" means decreasing along the ε-order on that side
        let lin_l = slope_left * eps_f <= -theta_lin;
        let lin_r = slope_right * eps_f <= -theta_lin;
        // the ε-preceding side is the left one for ε = +1
        let (sub_pre, lin_suc) = if epsilon == 1 { (sub_l, lin_r) } else { (sub_r, lin_l) };
        if sub_l && sub_r {
            "I".to_string()
        } else if lin_l && lin_r {
            "II".to_string()
        } else if sub_pre && lin_suc {
            "III".to_string()
        } else {
            "unknown".to_string()
        }
    };

    // Direction channel: argmin side per node, positions taken in ε-order
    // (ε-coordinate = ε · node coordinate).
    let (ilo, ihi) = u.interior;
    let mut prec = 0usize;
    let mut succ = 0usize;
    let mut total = 0usize;
    let mut seq: Vec<(f64, i8)> = Vec::new();
    for j in ilo..=ihi {
        let a = u.argmin_map[j];
        if a < 0 {
            continue;
        }
        total += 1;
        let d = (a as isize - j as isize) as f64 * eps_f;
        if d < 0.0 {
            prec += 1;
            seq.push((eps_f * g.node(j), -1));
        } else if d > 0.0 {
            succ += 1;
            seq.push((eps_f * g.node(j), 1));
        }
    }
    seq.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut flip_count = 0usize;
    let mut last_sign = 0i8;
    for &(_, s) in &seq {
        if last_sign != 0 && s != last_sign {
            flip_count += 1;
        }
        last_sign = s;
    }
    // A clean prec→succ handover keeps the last preceding node and the first
    // succeeding node within one mixing zone; its coordinate width is what
    // the monotonicity scale bounds.
    let prec_last = seq.iter().filter(|&&(_, s)| s == -1).map(|&(p, _)| p).fold(f64::NEG_INFINITY, f64::max);
    let succ_first = seq.iter().filter(|&&(_, s)| s == 1).map(|&(p, _)| p).fold(f64::INFINITY, f64::min);
    let flip_width = if prec > 0 && succ > 0 { (prec_last - succ_first).abs() } else { f64::NAN };
    let l_emp = 2.0 * u.r_search;
    let direction_label = if total == 0 {
        "unknown".to_string()
    } else if succ == 0 && prec > 0 {
        "I".to_string()
    } else if prec == 0 && succ > 0 {
        "II".to_string()
    } else if prec > 0 && succ > 0 && flip_width <= l_emp {
        "III".to_string()
    } else {
        "unknown".to_string()
    };

    let label = if growth_label == direction_label && growth_label != "unknown" {
        growth_label.clone()
    } else {
        "unknown".to_string()
    };
    Ok(ClassifyReport {
        label,
        growth_label,
        direction_label,
        epsilon,
        slope_left,
        slope_right,
        theta_sub,
        theta_lin,
        gamma_est,
        precede_fraction: prec as f64 / total.max(1) as f64,
        succeed_fraction: succ as f64 / total.max(1) as f64,
        flip_count,
        flip_width,
        l_emp,
    })
}

/// Sup-norm distance between two solutions after renormalizing both at the
/// zero node, over the intersection of their interiors.
pub fn solution_distance(a: &KamSolution, b: &KamSolution) -> Result<f64> {
    if a.grid != b.grid {
        return Err(Error::parameter(format!(
            "grid mismatch: [{}, {}] step {} vs [{}, {}] step {}",
            a.grid.lo, a.grid.hi, a.grid.step, b.grid.lo, b.grid.hi, b.grid.step
        )));
    }
    if a.e_bar_used.to_bits() != b.e_bar_used.to_bits() {
        return Err(Error::parameter(format!(
            "mixing energy estimates: {} vs {}",
            a.e_bar_used, b.e_bar_used
        )));
    }
    let x0 = a.grid.index_nearest(0.0);
    let (sa, sb) = (a.values[x0], b.values[x0]);
    let lo = a.interior.0.max(b.interior.0);
    let hi = a.interior.1.min(b.interior.1);
    if lo > hi {
        return Err(Error::parameter("solutions have disjoint interiors".to_string()));
    }
    Ok((lo..=hi)
        .map(|j| ((a.values[j] - sa) - (b.values[j] - sb)).abs())
        .fold(0.0f64, f64::max))
}

/// One drift value of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    pub estimate: f64,
    pub self_interaction: f64,
    pub verdict: Verdict,
    /// Preferred ordering, when certified nondegenerate and decided.
    pub epsilon: Option<i8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Innermost positive drift certified nondegenerate, if any.
    pub lambda_plus_est: Option<f64>,
    /// Innermost negative drift certified nondegenerate, if any.
    pub lambda_minus_est: Option<f64>,
    pub sizes: Vec<usize>,
}

/// Sweep the drift over sorted values: per-λ ground-action bracket, pinning
/// verdict, and (when certified) the preferred ordering probed on an
/// internally sized window.
pub fn lambda_sweep(
    template: &ModelSpec,
    lambdas: &[f64],
    g: &Grid,
    n_max: usize,
    sizes: &[usize],
) -> Result<SweepReport> {
    if lambdas.is_empty() {
        return Err(Error::parameter("sweep needs at least one drift value".to_string()));
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::parameter("sweep drifts must be strictly ascending".to_string()));
    }
    let vmax = match template.family {
        Family::Periodic => 2.0,
        Family::QuasiPeriodic => {
            let rho = template.substrate.as_ref().map(|s| s.rho).unwrap_or(1.0);
            2.0 * rho * rho
        }
    };
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let spec = ModelSpec { lambda, ..*template };
        spec.validate()?;
        let m = InteractionModel::for_window(spec, g.lo, g.hi)?;
        let rep = nondegeneracy_check(&m, g, n_max)?;
        let epsilon = if rep.verdict == Verdict::Nondegenerate && !sizes.is_empty() {
            let n_big = *sizes.iter().max().unwrap();
            let level = 0.5 * lambda * lambda + spec.coupling * vmax + 2.0;
            let r0 = spec.jump_radius(level)?;
            let half = 0.5 * (n_big as f64 * r0 + 4.0) + 1.0;
            let og = Grid::new(-half, half, g.step)?;
            let om = InteractionModel::for_window(spec, -half, half)?;
            let ord = preferred_ordering(&om, &og, sizes, Verdict::Nondegenerate)?;
            if ord.decided {
                Some(ord.epsilon)
            } else {
                None
            }
        } else {
            None
        };
        rows.push(SweepRow {
            lambda,
            lower: rep.bracket.lower,
            upper: rep.bracket.upper,
            estimate: rep.bracket.estimate,
            self_interaction: rep.self_interaction,
            verdict: rep.verdict,
            epsilon,
        });
    }
    let lambda_plus_est = rows
        .iter()
        .filter(|r| r.lambda > 0.0 && r.verdict == Verdict::Nondegenerate)
        .map(|r| r.lambda)
        .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.min(l))));
    let lambda_minus_est = rows
        .iter()
        .filter(|r| r.lambda < 0.0 && r.verdict == Verdict::Nondegenerate)
        .map(|r| r.lambda)
        .fold(None, |acc: Option<f64>, l| Some(acc.map_or(l, |a| a.max(l))));
    Ok(SweepReport { rows, lambda_plus_est, lambda_minus_est, sizes: sizes.to_vec() })
}
