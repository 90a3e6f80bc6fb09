//! Banded dynamic-programming kernels shared by the ground-action,
//! Mañé-potential and fixed-point computations.
//!
//! All kernels scan candidate predecessors in ascending index order and keep
//! the first strict minimum, so ties resolve to the smallest index and the
//! result is bit-for-bit independent of the rayon thread count (each target's
//! reduction is sequential).

use rayon::prelude::*;

use crate::error::Result;
use crate::ground_action::Grid;
use crate::model::InteractionModel;

/// Grid-sampled bond energies: `edge(i, j) = ½(x_j − x_i − λ)² + K·V(x_i)`
/// with the potential cached per node.
pub(crate) struct EnergyTable {
    pub xs: Vec<f64>,
    pub kv: Vec<f64>,
    pub lambda: f64,
    pub step: f64,
}

impl EnergyTable {
    pub fn build(m: &InteractionModel, g: &Grid) -> Result<EnergyTable> {
        let xs = g.nodes();
        let k = m.spec().coupling;
        let kv = m.potential_table(&xs)?.into_iter().map(|v| k * v).collect();
        Ok(EnergyTable { xs, kv, lambda: m.spec().lambda, step: g.step })
    }

    #[inline(always)]
    pub fn edge(&self, i: usize, j: usize) -> f64 {
        let d = self.xs[j] - self.xs[i] - self.lambda;
        0.5 * d * d + self.kv[i]
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    /// Number of grid steps covering radius `r` (at least 1).
    pub fn span_of(&self, r: f64) -> usize {
        let s = (r / self.step).ceil();
        if s.is_finite() && s >= 1.0 {
            (s as usize).min(self.len())
        } else {
            1
        }
    }

    /// Max potential term over the table (used for search-level heuristics).
    pub fn kv_max(&self) -> f64 {
        self.kv.iter().copied().fold(0.0f64, f64::max)
    }
}

/// One sweep of `u ↦ min_x (u(x) + E(x, y)) − e_bar` over every target node,
/// restricted to `|index(x) − index(y)| ≤ span`. Fills values and argmins.
pub(crate) fn relax(
    et: &EnergyTable,
    u: &[f64],
    span: usize,
    e_bar: f64,
    out: &mut [f64],
    arg: &mut [usize],
) {
    relax_range(et, u, span, e_bar, 0, et.len() - 1, out, arg);
}

/// [`relax`] with both targets and predecessors confined to the index range
/// `[lo_idx, hi_idx]`. Entries outside the range are left untouched.
#[allow(clippy::too_many_arguments)]
pub(crate) fn relax_range(
    et: &EnergyTable,
    u: &[f64],
    span: usize,
    e_bar: f64,
    lo_idx: usize,
    hi_idx: usize,
    out: &mut [f64],
    arg: &mut [usize],
) {
    let n = et.len();
    debug_assert_eq!(u.len(), n);
    debug_assert_eq!(out.len(), n);
    debug_assert_eq!(arg.len(), n);
    debug_assert!(lo_idx <= hi_idx && hi_idx < n);
    const CHUNK: usize = 256;
    out[lo_idx..=hi_idx]
        .par_chunks_mut(CHUNK)
        .zip(arg[lo_idx..=hi_idx].par_chunks_mut(CHUNK))
        .enumerate()
        .for_each(|(ci, (oc, ac))| {
            let j0 = lo_idx + ci * CHUNK;
            for (dj, (o, a)) in oc.iter_mut().zip(ac.iter_mut()).enumerate() {
                let j = j0 + dj;
                let lo = lo_idx.max(j.saturating_sub(span));
                let hi = (j + span).min(hi_idx);
                let mut best = f64::INFINITY;
                let mut bi = lo;
                for i in lo..=hi {
                    let v = u[i] + et.edge(i, j);
                    if v < best {
                        best = v;
                        bi = i;
                    }
                }
                *o = best - e_bar;
                *a = bi;
            }
        });
}

/// Did some argmin land exactly on an unclipped edge of its scan range?
/// (Signal that the truncation radius may be binding.)
pub(crate) fn relax_radius_binding(arg: &[usize], span: usize) -> bool {
    let n = arg.len();
    arg.iter().enumerate().any(|(j, &a)| {
        (j >= span && a == j - span) || (j + span <= n - 1 && a == j + span)
    })
}

/// Monotone DAG sweep from `src` toward `last` (either direction).
///
/// `acc[src] = 0` (empty chain); for each node `j` strictly between `src` and
/// `last` inclusive, `acc[j] = min over predecessors i` (nodes on the `src`
/// side of `j`, within `span`) of `acc[i] + edge(i, j) − e_bar`; `pred[j]`
/// records the minimizer (smallest index on ties). Nodes outside the swept
/// range keep `acc = +∞`, `pred = usize::MAX`.
pub(crate) fn sweep_monotone(
    et: &EnergyTable,
    src: usize,
    last: usize,
    span: usize,
    e_bar: f64,
) -> (Vec<f64>, Vec<usize>) {
    let n = et.len();
    let mut acc = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    acc[src] = 0.0;
    if last >= src {
        for j in src + 1..=last {
            let lo = src.max(j.saturating_sub(span));
            let mut best = f64::INFINITY;
            let mut bi = usize::MAX;
            for i in lo..j {
                if acc[i].is_finite() {
                    let v = acc[i] + (et.edge(i, j) - e_bar);
                    if v < best {
                        best = v;
                        bi = i;
                    }
                }
            }
            acc[j] = best;
            pred[j] = bi;
        }
    } else {
        for j in (last..src).rev() {
            let hi = (j + span).min(src);
            let mut best = f64::INFINITY;
            let mut bi = usize::MAX;
            for i in j + 1..=hi {
                if acc[i].is_finite() {
                    let v = acc[i] + (et.edge(i, j) - e_bar);
                    if v < best {
                        best = v;
                        bi = i;
                    }
                }
            }
            acc[j] = best;
            pred[j] = bi;
        }
    }
    (acc, pred)
}

/// Follow predecessors from `target` back to the sweep source.
/// Returns grid indices in chain order (source first).
pub(crate) fn backtrack(pred: &[usize], src: usize, target: usize) -> Vec<usize> {
    let mut idx = vec![target];
    let mut cur = target;
    while cur != src {
        let p = pred[cur];
        debug_assert!(p != usize::MAX, "backtrack through unreached node");
        idx.push(p);
        cur = p;
    }
    idx.reverse();
    idx
}

/// Does a backtracked monotone path use a jump at the truncation radius while
/// closer predecessors were still available (i.e. the span clipped the true
/// search window, not the source)?
pub(crate) fn path_radius_binding(path: &[usize], span: usize, src: usize) -> bool {
    path.windows(2).any(|w| {
        let (a, b) = (w[0], w[1]);
        let jump = a.abs_diff(b);
        // An edge at the radius counts only when the span (not the source
        // boundary) clipped the predecessor range: ascending targets scan
        // [max(src, b−span), b), descending ones (b, min(src, b+span)].
        jump >= span && if b > a { b >= span && b - span > src } else { b + span < src }
    })
}

/// Does the predecessor table contain a radius-binding jump anywhere?
pub(crate) fn table_radius_binding(pred: &[usize], span: usize, src: usize) -> bool {
    pred.iter().enumerate().any(|(j, &p)| {
        p != usize::MAX && {
            let jump = j.abs_diff(p);
            jump >= span && if j > src { j - span > src } else { j + span < src }
        }
    })
}
