//! Mañé potentials `S(x, y)` (minimal reduced action over monotone chains),
//! calibrated and fundamental configurations, preferred ordering and the
//! growth dichotomy between the ordered and anti-ordered directions.

use serde::{Deserialize, Serialize};

use crate::dp::{self, EnergyTable};
use crate::error::{Error, Result};
use crate::ground_action::{Grid, Verdict};
use crate::model::{InteractionModel, ModelSpec};

/// A finite configuration with its total and reduced action.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Chain {
    pub points: Vec<f64>,
    /// Total energy, recomputable via `chain_energy`.
    pub energy: f64,
    /// `energy − (#bonds)·e_bar` (with `e_bar = 0` for free-endpoint chains).
    pub reduced_action: f64,
}

impl Chain {
    fn from_points(m: &InteractionModel, points: Vec<f64>, e_bar: f64) -> Result<Chain> {
        let energy = m.chain_energy(&points)?;
        let bonds = (points.len() - 1) as f64;
        Ok(Chain { points, energy, reduced_action: energy - bonds * e_bar })
    }

    pub fn displacement(&self) -> f64 {
        self.points.last().unwrap() - self.points.first().unwrap()
    }

    pub fn rotation(&self) -> f64 {
        self.displacement() / (self.points.len() - 1) as f64
    }

    /// Strictly monotone in the displacement direction?
    pub fn strictly_monotone(&self) -> bool {
        let up = self.points.windows(2).all(|w| w[1] > w[0]);
        let down = self.points.windows(2).all(|w| w[1] < w[0]);
        up || down
    }
}

/// Single-source table of `S(ref, ·)` over a grid, with backtracking data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManeTable {
    pub ref_point: f64,
    pub ref_index: usize,
    pub grid: Grid,
    /// `S(ref_point, node_j)` for every grid node (both directions).
    pub values: Vec<f64>,
    /// Backtracking indices; −1 at the reference and at unreached nodes.
    pub predecessor: Vec<i64>,
    pub e_bar_used: f64,
    pub r_search: f64,
}

impl ManeTable {
    /// `S(ref, x)` for `x ≥ ref` (first entry is the reference itself).
    pub fn values_forward(&self) -> &[f64] {
        &self.values[self.ref_index..]
    }

    /// `S(ref, x)` for `x ≤ ref` (last entry is the reference itself).
    pub fn values_backward(&self) -> &[f64] {
        &self.values[..=self.ref_index]
    }

    pub fn value_at(&self, y: f64) -> Result<f64> {
        if !self.grid.contains(y) {
            return Err(Error::range(format!(
                "query {y} outside table grid [{}, {}]",
                self.grid.lo, self.grid.hi
            )));
        }
        Ok(self.values[self.grid.index_nearest(y)])
    }

    /// Backtrack the minimizing chain from the reference to `y`.
    pub fn chain_to(&self, m: &InteractionModel, y: f64) -> Result<Chain> {
        if !self.grid.contains(y) {
            return Err(Error::range(format!(
                "query {y} outside table grid [{}, {}]",
                self.grid.lo, self.grid.hi
            )));
        }
        let j = self.grid.index_nearest(y);
        if j == self.ref_index {
            let x = self.ref_point;
            return Chain::from_points(m, vec![x, x], self.e_bar_used);
        }
        let mut idx = vec![j];
        let mut cur = j;
        while cur != self.ref_index {
            let p = self.predecessor[cur];
            if p < 0 {
                return Err(Error::inconsistency(format!(
                    "no backtracking path from node {cur} to the reference"
                )));
            }
            cur = p as usize;
            idx.push(cur);
        }
        idx.reverse();
        let points: Vec<f64> = idx.iter().map(|&i| self.grid.node(i)).collect();
        Chain::from_points(m, points, self.e_bar_used)
    }
}

/// Shared radius policy: start from the local-cost level, never trust a
/// result whose optimal jumps touch the truncation radius.
fn initial_span(et: &EnergyTable, spec: &ModelSpec, e_bar: f64) -> usize {
    let level = 0.5 * spec.lambda * spec.lambda + et.kv_max() + e_bar.abs() + 2.0;
    let r = spec.jump_radius(level).expect("finite nonnegative level");
    let span = et.span_of(r);
    // On coarse grids searching everything is cheap and makes the DP agree
    // with exhaustive enumeration regardless of jump lengths.
    if et.len() <= 64 {
        et.len()
    } else {
        span
    }
}

fn snap_checked(g: &Grid, x: f64, what: &str) -> Result<usize> {
    if !x.is_finite() || !g.contains(x) {
        return Err(Error::range(format!(
            "{what} = {x} outside grid [{}, {}]",
            g.lo, g.hi
        )));
    }
    Ok(g.index_nearest(x))
}

/// Mañé potential between two (snapped) grid points, with the minimizing
/// chain.
///
/// The value is the shortest path in the monotone DAG on the grid nodes
/// between `x` and `y` inclusive (edge weight `E(a, b) − e_bar`), also
/// compared against the direct single edge. `S(x, x)` is `E(x, x) − e_bar`
/// directly: the DAG is loop-free.
pub fn mane_potential(
    m: &InteractionModel,
    g: &Grid,
    x: f64,
    y: f64,
    e_bar: f64,
) -> Result<(f64, Chain)> {
    let ix = snap_checked(g, x, "x")?;
    let iy = snap_checked(g, y, "y")?;
    let xs = g.node(ix);
    if ix == iy {
        let value = m.energy(xs, xs)? - e_bar;
        return Ok((value, Chain::from_points(m, vec![xs, xs], e_bar)?));
    }
    let et = EnergyTable::build(m, g)?;
    let mut span = initial_span(&et, m.spec(), e_bar);
    for _attempt in 0..4 {
        let (acc, pred) = dp::sweep_monotone(&et, ix, iy, span, e_bar);
        let direct = et.edge(ix, iy) - e_bar;
        let (value, idx) = if direct < acc[iy] {
            (direct, vec![ix, iy])
        } else {
            (acc[iy], dp::backtrack(&pred, ix, iy))
        };
        if dp::path_radius_binding(&idx, span, ix) && span < et.len() {
            span = (span * 2).min(et.len());
            continue;
        }
        let points: Vec<f64> = idx.iter().map(|&i| g.node(i)).collect();
        return Ok((value, Chain::from_points(m, points, e_bar)?));
    }
    Err(Error::inconsistency(
        "minimal chain kept using jumps at the truncation radius after doublings".to_string(),
    ))
}

/// Single-source `S(ref, ·)` table over the whole grid (monotone sweeps in
/// both directions).
pub fn mane_table(m: &InteractionModel, g: &Grid, ref_point: f64, e_bar: f64) -> Result<ManeTable> {
    let ir = snap_checked(g, ref_point, "ref")?;
    let rx = g.node(ir);
    let et = EnergyTable::build(m, g)?;
    let n = et.len();
    let mut span = initial_span(&et, m.spec(), e_bar);
    for _attempt in 0..4 {
        let (acc_f, pred_f) = dp::sweep_monotone(&et, ir, n - 1, span, e_bar);
        let (acc_b, pred_b) = dp::sweep_monotone(&et, ir, 0, span, e_bar);
        if (dp::table_radius_binding(&pred_f, span, ir)
            || dp::table_radius_binding(&pred_b, span, ir))
            && span < n
        {
            span = (span * 2).min(n);
            continue;
        }
        let mut values = vec![0.0; n];
        let mut predecessor = vec![-1i64; n];
        for j in 0..n {
            let (acc, pred) = if j >= ir { (&acc_f, &pred_f) } else { (&acc_b, &pred_b) };
            if j == ir {
                values[j] = et.edge(ir, ir) - e_bar;
                predecessor[j] = -1;
                continue;
            }
            // also compare against the direct single edge (it may lie beyond
            // the truncation radius)
            let direct = et.edge(ir, j) - e_bar;
            if direct < acc[j] {
                values[j] = direct;
                predecessor[j] = ir as i64;
            } else {
                values[j] = acc[j];
                predecessor[j] = if pred[j] == usize::MAX { -1 } else { pred[j] as i64 };
            }
        }
        return Ok(ManeTable {
            ref_point: rx,
            ref_index: ir,
            grid: *g,
            values,
            predecessor,
            e_bar_used: e_bar,
            r_search: span as f64 * g.step,
        });
    }
    Err(Error::inconsistency(
        "table chains kept using jumps at the truncation radius after doublings".to_string(),
    ))
}

/// Exhaustive-enumeration reference for [`mane_potential`]: minimum over all
/// monotone chains between `x` and `y` with at most `max_edges` bonds,
/// accumulating `E − e_bar` left-to-right exactly like the DP. Ties resolve
/// to the chain whose predecessor indices, read from the target backwards,
/// are lexicographically smallest — the same chain the DP backtracks.
///
/// Exponential in the node count; intended for coarse grids (≤ 15 nodes
/// between the endpoints).
pub fn brute_mane_potential(
    m: &InteractionModel,
    g: &Grid,
    x: f64,
    y: f64,
    e_bar: f64,
    max_edges: usize,
) -> Result<(f64, Chain)> {
    let ix = snap_checked(g, x, "x")?;
    let iy = snap_checked(g, y, "y")?;
    if max_edges == 0 {
        return Err(Error::parameter("enumeration needs max_edges >= 1".to_string()));
    }
    let (xs, _ys) = (g.node(ix), g.node(iy));
    if ix == iy {
        let value = m.energy(xs, xs)? - e_bar;
        return Ok((value, Chain::from_points(m, vec![xs, xs], e_bar)?));
    }
    if ix.abs_diff(iy) > 24 {
        return Err(Error::parameter(
            "enumeration oracle limited to 24 nodes between endpoints".to_string(),
        ));
    }
    let et = EnergyTable::build(m, g)?;
    let fwd = iy > ix;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut path = vec![ix];
    fn rec(
        et: &EnergyTable,
        path: &mut Vec<usize>,
        acc: f64,
        target: usize,
        fwd: bool,
        edges_left: usize,
        e_bar: f64,
        best: &mut Option<(f64, Vec<usize>)>,
    ) {
        let cur = *path.last().unwrap();
        if cur == target {
            let better = match best {
                None => true,
                Some((bv, bp)) => {
                    acc < *bv
                        || (acc == *bv && {
                            // compare index sequences from the target backwards
                            let a = path.iter().rev();
                            let b = bp.iter().rev();
                            a.cmp(b) == std::cmp::Ordering::Less
                        })
                }
            };
            if better {
                *best = Some((acc, path.clone()));
            }
            return;
        }
        if edges_left == 0 {
            return;
        }
        let range: Box<dyn Iterator<Item = usize>> = if fwd {
            Box::new(cur + 1..=target)
        } else {
            Box::new((target..cur).rev())
        };
        for next in range {
            let w = et.edge(cur, next) - e_bar;
            path.push(next);
            rec(et, path, acc + w, target, fwd, edges_left - 1, e_bar, best);
            path.pop();
        }
    }
    rec(&et, &mut path, 0.0, iy, fwd, max_edges, e_bar, &mut best);
    let (value, idx) = best.expect("direct edge always reachable with max_edges >= 1");
    let points: Vec<f64> = idx.iter().map(|&i| g.node(i)).collect();
    Ok((value, Chain::from_points(m, points, e_bar)?))
}

/// Direction tag for calibrated configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Increasing,
    Decreasing,
}

impl Direction {
    pub fn parse(s: &str) -> Result<Direction> {
        match s {
            "increasing" | "inc" | "up" => Ok(Direction::Increasing),
            "decreasing" | "dec" | "down" => Ok(Direction::Decreasing),
            other => Err(Error::config(format!(
                "unknown direction '{other}' (expected 'increasing' or 'decreasing')"
            ))),
        }
    }
}

/// Minimizing chain realizing `S(a, b)` for `a`, `b` near the window ends,
/// ordered according to `direction`.
pub fn calibrated_configuration(
    m: &InteractionModel,
    g: &Grid,
    direction: Direction,
    window: (f64, f64),
    e_bar: f64,
) -> Result<Chain> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::parameter(format!("invalid calibration window [{lo}, {hi}]")));
    }
    let jump_scale = m.spec().lambda.abs().max(1.0);
    if hi - lo < 10.0 * jump_scale {
        return Err(Error::config(format!(
            "calibration window [{lo}, {hi}] spans fewer than 10 expected jumps ({jump_scale})"
        )));
    }
    let (a, b) = match direction {
        Direction::Increasing => (lo, hi),
        Direction::Decreasing => (hi, lo),
    };
    let (_value, chain) = mane_potential(m, g, a, b, e_bar)?;
    Ok(chain)
}

/// Free-endpoint minimizer over chains of `n` bonds: forward DP from the
/// zero table, global argmin at the last step (ties resolved toward the
/// window center, then to the smaller index), backtracking through the
/// per-step argmins.
pub fn fundamental_configuration(m: &InteractionModel, g: &Grid, n: usize) -> Result<Chain> {
    if n == 0 {
        return Err(Error::parameter("fundamental configuration needs n >= 1".to_string()));
    }
    let et = EnergyTable::build(m, g)?;
    let nn = et.len();
    let mut span = initial_span(&et, m.spec(), 0.0);
    let r0 = span as f64 * g.step;
    if g.span() < n as f64 * r0 + 4.0 {
        return Err(Error::config(format!(
            "window [{}, {}] narrower than n·R + 4 = {:.3} required for {n} free bonds",
            g.lo,
            g.hi,
            n as f64 * r0 + 4.0
        )));
    }
    'attempt: for _ in 0..4 {
        let mut u = vec![0.0; nn];
        let mut out = vec![0.0; nn];
        let mut arg = vec![0usize; nn];
        let mut args: Vec<Vec<usize>> = Vec::with_capacity(n);
        for _step in 0..n {
            dp::relax(&et, &u, span, 0.0, &mut out, &mut arg);
            if dp::relax_radius_binding(&arg, span) && span < nn {
                span = (span * 2).min(nn);
                continue 'attempt;
            }
            std::mem::swap(&mut u, &mut out);
            args.push(arg.clone());
        }
        // Global argmin; exact ties resolve toward the window center so
        // translation-degenerate models return an interior representative.
        let center = 0.5 * (g.lo + g.hi);
        let mut bi = 0usize;
        for j in 1..nn {
            let better = u[j] < u[bi]
                || (u[j] == u[bi]
                    && (g.node(j) - center).abs() < (g.node(bi) - center).abs());
            if better {
                bi = j;
            }
        }
        let mut idx = vec![bi];
        let mut cur = bi;
        for step in (0..n).rev() {
            cur = args[step][cur];
            idx.push(cur);
        }
        idx.reverse();
        if idx.iter().any(|&i| i == 0 || i == nn - 1) {
            return Err(Error::config(format!(
                "fundamental configuration of size {n} touches the window boundary"
            )));
        }
        let points: Vec<f64> = idx.iter().map(|&i| g.node(i)).collect();
        return Chain::from_points(m, points, 0.0);
    }
    Err(Error::inconsistency(
        "fundamental chain kept using jumps at the truncation radius after doublings".to_string(),
    ))
}

/// Outcome of the preferred-ordering probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrderingReport {
    /// +1, −1, or 0 when undecided.
    pub epsilon: i8,
    pub decided: bool,
    pub sizes: Vec<usize>,
    pub displacements: Vec<f64>,
    pub rotations: Vec<f64>,
    pub monotone: Vec<bool>,
}

/// Probe the preferred ordering with fundamental configurations of the given
/// sizes. Models not certified nondegenerate report undecided immediately.
pub fn preferred_ordering(
    m: &InteractionModel,
    g: &Grid,
    sizes: &[usize],
    verdict: Verdict,
) -> Result<OrderingReport> {
    if sizes.is_empty() {
        return Err(Error::parameter("preferred ordering needs at least one size".to_string()));
    }
    if verdict != Verdict::Nondegenerate {
        return Ok(OrderingReport {
            epsilon: 0,
            decided: false,
            sizes: sizes.to_vec(),
            displacements: Vec::new(),
            rotations: Vec::new(),
            monotone: Vec::new(),
        });
    }
    let mut displacements = Vec::with_capacity(sizes.len());
    let mut rotations = Vec::with_capacity(sizes.len());
    let mut monotone = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let chain = fundamental_configuration(m, g, n)?;
        displacements.push(chain.displacement());
        rotations.push(chain.rotation());
        monotone.push(chain.strictly_monotone());
    }
    let all_pos = displacements.iter().all(|&d| d > 0.0);
    let all_neg = displacements.iter().all(|&d| d < 0.0);
    let (epsilon, decided) = if all_pos {
        (1i8, true)
    } else if all_neg {
        (-1i8, true)
    } else {
        (0i8, false)
    };
    Ok(OrderingReport {
        epsilon,
        decided,
        sizes: sizes.to_vec(),
        displacements,
        rotations,
        monotone,
    })
}

/// Affine fits of `S(ref, ·)` against distance from the reference, one per
/// side, over the outer `fit_window_fraction` of each side.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GrowthReport {
    /// Fitted slope on the ε-ordered side.
    pub slope_ordered: f64,
    /// Fitted slope on the anti-ordered side.
    pub slope_anti: f64,
    /// Linear growth rate estimate (= anti-side slope).
    pub gamma_est: f64,
    /// Affine minorant offset: `S ≥ gamma_est·d − delta_est` on the anti side.
    pub delta_est: f64,
    pub epsilon: i8,
}

fn affine_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (0.0, sy / n.max(1.0));
    }
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}

/// Growth dichotomy of a Mañé table relative to the preferred ordering ε.
pub fn growth_dichotomy(
    table: &ManeTable,
    fit_window_fraction: f64,
    epsilon: i8,
) -> Result<GrowthReport> {
    if epsilon != 1 && epsilon != -1 {
        return Err(Error::parameter(format!("epsilon must be +1 or -1, got {epsilon}")));
    }
    if !(fit_window_fraction > 0.0 && fit_window_fraction <= 1.0) {
        return Err(Error::parameter(format!(
            "fit window fraction must lie in (0, 1], got {fit_window_fraction}"
        )));
    }
    let g = &table.grid;
    let side_fwd = g.node(g.len() - 1) - table.ref_point;
    let side_bwd = table.ref_point - g.node(0);
    let need = 20.0;
    if side_fwd < need || side_bwd < need {
        return Err(Error::config(format!(
            "table sides ({side_bwd:.2}, {side_fwd:.2}) span fewer than {need} units"
        )));
    }
    let fit_side = |forward: bool| -> (f64, f64, Vec<(f64, f64)>) {
        let side = if forward { side_fwd } else { side_bwd };
        let cut = (1.0 - fit_window_fraction) * side;
        let mut pts = Vec::new();
        for j in 0..g.len() {
            let d = if forward { g.node(j) - table.ref_point } else { table.ref_point - g.node(j) };
            if d >= cut && d > 0.0 {
                pts.push((d, table.values[j]));
            }
        }
        let (slope, intercept) = affine_fit(&pts);
        (slope, intercept, pts)
    };
    let (slope_fwd, _, pts_fwd) = fit_side(true);
    let (slope_bwd, _, pts_bwd) = fit_side(false);
    let (slope_ordered, slope_anti, anti_pts) = if epsilon == 1 {
        (slope_fwd, slope_bwd, &pts_bwd)
    } else {
        (slope_bwd, slope_fwd, &pts_fwd)
    };
    let gamma_est = slope_anti;
    let delta_est = anti_pts
        .iter()
        .map(|&(d, s)| gamma_est * d - s)
        .fold(0.0f64, f64::max);
    Ok(GrowthReport { slope_ordered, slope_anti, gamma_est, delta_est, epsilon })
}

/// Empirical model constants measured from computed minimizers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundsRecord {
    /// Largest sampled η with `inf over |y−x| ≤ η of (E − e_bar) > η`.
    pub eta0: f64,
    /// Min/max jump over calibrated chains.
    pub r: f64,
    pub big_r: f64,
    /// Chain-count coefficients: backtracked chains satisfy `n ≤ A·|y−x| + B`.
    pub a_chain: f64,
    pub b_chain: f64,
    /// Monotonicity length scale.
    pub l_mono: f64,
    /// Smallest tested fundamental size from which chains stay strictly
    /// monotone with a consistent sign.
    pub n_mono: usize,
    /// Smallest observed fundamental rotation magnitude (resolution-floored).
    pub phi: f64,
}

/// Estimate the empirical constants on the working grid. Meaningful for
/// nondegenerate models; degenerate ones get resolution floors.
pub fn estimate_bounds(m: &InteractionModel, g: &Grid, e_bar: f64) -> Result<BoundsRecord> {
    let et = EnergyTable::build(m, g)?;
    let n = et.len();
    // η₀ scan: incremental band minima of E over |i−j| ≤ s.
    let span_max = et.span_of(m.spec().lambda.abs() + 1.5).min(n - 1);
    let mut band_min = vec![f64::INFINITY; span_max + 1];
    for s in 0..=span_max {
        let mut best = if s == 0 { f64::INFINITY } else { band_min[s - 1] };
        for j in 0..n {
            if j + s < n {
                best = best.min(et.edge(j, j + s)).min(et.edge(j + s, j));
            }
        }
        band_min[s] = best;
    }
    let mut eta0 = g.step;
    for s in (1..=span_max).rev() {
        let eta = s as f64 * g.step;
        if band_min[s] - e_bar > eta {
            eta0 = eta;
            break;
        }
    }

    // Jump statistics from calibrated chains across the window.
    let pad = 2.0 * (m.spec().lambda.abs() + 1.0);
    let (w_lo, w_hi) = (g.lo + pad.min(g.span() / 4.0), g.hi - pad.min(g.span() / 4.0));
    let mut r_min = f64::INFINITY;
    let mut r_max: f64 = 0.0;
    let mut ab_samples: Vec<(f64, usize)> = Vec::new();
    let quarters = [w_lo, 0.75 * w_lo + 0.25 * w_hi, 0.5 * (w_lo + w_hi), 0.25 * w_lo + 0.75 * w_hi];
    for &a in &quarters {
        for &b in &[w_hi, 0.5 * (w_lo + w_hi) + 1.0] {
            if b - a < 1.0 {
                continue;
            }
            let (_v, chain) = mane_potential(m, g, a, b, e_bar)?;
            for w in chain.points.windows(2) {
                let jump = (w[1] - w[0]).abs();
                if jump > 0.0 {
                    r_min = r_min.min(jump);
                    r_max = r_max.max(jump);
                }
            }
            ab_samples.push(((b - a).abs(), chain.points.len() - 1));
        }
    }
    if !r_min.is_finite() {
        r_min = g.step;
    }
    if r_max <= 0.0 {
        r_max = g.step;
    }
    let b_chain = ab_samples
        .iter()
        .filter(|&&(d, _)| d <= 2.0)
        .map(|&(_, c)| c as f64)
        .fold(1.0f64, f64::max);
    let a_chain = ab_samples
        .iter()
        .map(|&(d, c)| ((c as f64 - b_chain) / d).max(0.0))
        .fold(0.0f64, f64::max)
        .max(1.0 / r_max);

    // Fundamental monotonicity threshold and rotation floor.
    let sizes = [2usize, 3, 4, 6, 8];
    let mut mono: Vec<(usize, bool, f64)> = Vec::new();
    for &s in &sizes {
        if g.span() >= s as f64 * (m.spec().lambda.abs() + 1.0) + 4.0 {
            if let Ok(chain) = fundamental_configuration(m, g, s) {
                mono.push((s, chain.strictly_monotone(), chain.rotation()));
            }
        }
    }
    let n_mono = mono
        .iter()
        .enumerate()
        .find(|(i, _)| mono[*i..].iter().all(|&(_, ok, _)| ok))
        .map(|(_, &(s, _, _))| s)
        .unwrap_or(*sizes.last().unwrap());
    let phi = mono
        .iter()
        .filter(|&&(s, _, _)| s >= n_mono)
        .map(|&(_, _, rot)| rot.abs())
        .fold(f64::INFINITY, f64::min)
        .max(g.step / g.span());
    let phi = if phi.is_finite() { phi } else { g.step / g.span() };
    let l_mono = n_mono as f64 * r_max;

    Ok(BoundsRecord { eta0, r: r_min, big_r: r_max, a_chain, b_chain, l_mono, n_mono, phi })
}
