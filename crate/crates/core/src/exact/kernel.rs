use super::enumerate::StateSpaceIndex;
use crate::chains::{BirthDeath2d, Ladder};
use crate::error::{Error, Result};
use crate::graph::PlantedGraph;
use crate::hamiltonian::GibbsContext;
use serde::Serialize;

/// Row-stochastic matrix: off-diagonal entries in CSR (columns sorted) plus
/// an explicit diagonal.
#[derive(Clone, Debug)]
pub struct SparseKernel {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

/// Result of a power iteration.
#[derive(Clone, Debug, Serialize)]
pub struct Stationary {
    pub pi: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// L1 change in the last iteration.
    pub last_change: f64,
}

impl SparseKernel {
    /// `row(i)` lists off-diagonal `(j, P(i,j))`; the diagonal is the
    /// remaining mass.
    pub fn from_rows(states: usize, mut row: impl FnMut(usize) -> Vec<(usize, f64)>) -> Self {
        let mut offsets = Vec::with_capacity(states + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = Vec::with_capacity(states);
        offsets.push(0);
        for i in 0..states {
            let mut r = row(i);
            r.retain(|&(j, p)| j != i && p > 0.0);
            r.sort_unstable_by_key(|&(j, _)| j);
            let mut off = 0.0;
            for (j, p) in r {
                if cols.len() > offsets[i] && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += p;
                } else {
                    cols.push(j);
                    vals.push(p);
                }
                off += p;
            }
            diag.push((1.0 - off).max(0.0));
            offsets.push(cols.len());
        }
        Self {
            offsets,
            cols,
            vals,
            diag,
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    #[inline]
    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn prob(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let (c, v) = self.row(i);
        c.binary_search(&j).map_or(0.0, |k| v[k])
    }

    /// Stationary law by power iteration on the lazy chain `(P + I) / 2`
    /// (same stationary law, aperiodic), from the uniform vector. Stops when
    /// the L1 change is below `tol`, or when it has stalled under `1e-12`
    /// for a few thousand sweeps (rounding noise); both count as converged.
    pub fn stationary(&self, tol: f64, max_iters: usize) -> Stationary {
        let n = self.len();
        let mut x = vec![1.0 / n as f64; n];
        let mut y = vec![0.0; n];
        let mut change = f64::INFINITY;
        let mut best = f64::INFINITY;
        let mut best_at = 0;
        let mut floor = false;
        let mut it = 0;
        while it < max_iters {
            it += 1;
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = 0.5 * x[i] * (1.0 + self.diag[i]);
            }
            for i in 0..n {
                let xi = 0.5 * x[i];
                if xi == 0.0 {
                    continue;
                }
                let (c, v) = self.row(i);
                for (&j, &p) in c.iter().zip(v) {
                    y[j] += xi * p;
                }
            }
            let s: f64 = y.iter().sum();
            change = 0.0;
            for (xi, yi) in x.iter_mut().zip(&y) {
                let v = yi / s;
                change += (v - *xi).abs();
                *xi = v;
            }
            if change < tol {
                break;
            }
            if change < 0.999 * best {
                best = change;
                best_at = it;
            } else if it - best_at > STAGNATION_ITERS && best < ROUNDING_FLOOR {
                // No progress left above rounding noise.
                floor = true;
                break;
            }
        }
        Stationary {
            pi: x,
            iterations: it,
            converged: change < tol || floor,
            last_change: change,
        }
    }

    /// `max |pi(x) P(x,y) - pi(y) P(y,x)|` over all pairs with `P(x,y) > 0`.
    pub fn balance_residual(&self, pi: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            let (c, v) = self.row(i);
            for (&j, &p) in c.iter().zip(v) {
                worst = worst.max((pi[i] * p - pi[j] * self.prob(j, i)).abs());
            }
        }
        worst
    }

    /// States from which some target is reachable.
    pub fn can_reach(&self, targets: &[bool]) -> Vec<bool> {
        let n = self.len();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            for &j in self.row(i).0 {
                rev[j].push(i);
            }
        }
        let mut seen = targets.to_vec();
        let mut stack: Vec<usize> = (0..n).filter(|&i| targets[i]).collect();
        while let Some(j) = stack.pop() {
            for &i in &rev[j] {
                if !seen[i] {
                    seen[i] = true;
                    stack.push(i);
                }
            }
        }
        seen
    }

    /// Expected hitting times of `targets` by Gauss-Seidel on
    /// `h(x) (1 - P(x,x)) = 1 + sum_{y != x} P(x,y) h(y)`, stopping when the
    /// largest relative update falls below `tol`. States that cannot reach
    /// the target get `+inf`.
    pub fn hitting_times(&self, targets: &[bool], tol: f64, max_sweeps: usize) -> Result<Vec<f64>> {
        if !targets.iter().any(|&t| t) {
            return Err(Error::Unreachable);
        }
        let reach = self.can_reach(targets);
        let n = self.len();
        let mut h: Vec<f64> = (0..n)
            .map(|i| {
                if targets[i] || reach[i] {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        for _ in 0..max_sweeps {
            let mut worst = 0.0f64;
            for i in 0..n {
                if targets[i] || !reach[i] {
                    continue;
                }
                let (c, v) = self.row(i);
                let mut acc = 1.0;
                let mut out = 0.0;
                for (&j, &p) in c.iter().zip(v) {
                    if reach[j] {
                        acc += p * h[j];
                        out += p;
                    }
                }
                // Mass towards states that cannot reach the target would make
                // h(i) infinite; such states never lead here for reversible
                // kernels but guard anyway.
                if out + self.diag[i] < 1.0 - 1e-12 {
                    h[i] = f64::INFINITY;
                    continue;
                }
                let new = acc / out;
                let rel = (new - h[i]).abs() / new.max(1.0);
                worst = worst.max(rel);
                h[i] = new;
            }
            if worst < tol {
                return Ok(h);
            }
        }
        Err(Error::InvalidState(format!(
            "hitting-time solve did not converge in {max_sweeps} sweeps"
        )))
    }

    /// Probability of leaving `inside` within `t` steps, from each state.
    pub fn escape_probabilities(&self, inside: &[bool], t: usize) -> Vec<f64> {
        let n = self.len();
        let mut e: Vec<f64> = (0..n).map(|i| if inside[i] { 0.0 } else { 1.0 }).collect();
        let mut next = e.clone();
        for _ in 0..t {
            for i in 0..n {
                if !inside[i] {
                    continue;
                }
                let (c, v) = self.row(i);
                next[i] =
                    self.diag[i] * e[i] + c.iter().zip(v).map(|(&j, &p)| p * e[j]).sum::<f64>();
            }
            std::mem::swap(&mut e, &mut next);
        }
        e
    }
}

/// Exact Metropolis matrix over an index: each flip has probability `1/n`
/// times its acceptance; rejected and blocked flips stay.
pub fn metropolis_kernel(
    idx: &StateSpaceIndex,
    g: &PlantedGraph,
    ctx: &GibbsContext,
) -> SparseKernel {
    let n = g.n() as f64;
    SparseKernel::from_rows(idx.len(), |i| {
        let s = idx.size(i);
        idx.neighbors(g, i)
            .into_iter()
            .map(|j| (j, ctx.log_acceptance_unchecked(s, idx.size(j)).exp() / n))
            .collect()
    })
}

/// Exact tempering matrix on `(clique, level)`, state `c * (m + 1) + i`.
pub fn st_kernel(idx: &StateSpaceIndex, g: &PlantedGraph, ladder: &Ladder) -> SparseKernel {
    let levels = ladder.m() + 1;
    let n = g.n() as f64;
    let a = ladder.level_move_prob();
    let nbrs: Vec<Vec<usize>> = (0..idx.len()).map(|c| idx.neighbors(g, c)).collect();
    SparseKernel::from_rows(idx.len() * levels, |state| {
        let (c, i) = (state / levels, state % levels);
        let s = idx.size(c);
        let ctx = ladder.level(i);
        let mut row: Vec<(usize, f64)> = nbrs[c]
            .iter()
            .map(|&d| {
                let p = a / n * ctx.log_acceptance_unchecked(s, idx.size(d)).exp();
                (d * levels + i, p)
            })
            .collect();
        for j in [i.wrapping_sub(1), i + 1] {
            if j < levels {
                let p = (1.0 - a) / 2.0 * ladder.log_temperature_acceptance(i, j, s).exp();
                row.push((c * levels + j, p));
            }
        }
        row
    })
}

/// Exact 2D proxy-walk matrix on sizes `0..=ceiling`, state `s * (m+1) + j`.
pub fn birth_death_2d_kernel(bd: &BirthDeath2d) -> SparseKernel {
    let levels = bd.m() + 1;
    let top = bd.ceiling();
    SparseKernel::from_rows((top + 1) * levels, |state| {
        let (s, j) = (state / levels, state % levels);
        let mv = bd.moves(s, j);
        let mut row = Vec::with_capacity(4);
        if s > 0 {
            row.push(((s - 1) * levels + j, mv.size_down));
        }
        if s < top {
            row.push(((s + 1) * levels + j, mv.size_up));
        }
        if j > 0 {
            row.push((s * levels + j - 1, mv.temp_down));
        }
        if j + 1 < levels {
            row.push((s * levels + j + 1, mv.temp_up));
        }
        row
    })
}

/// Stationary vector and detailed-balance residual of the exact
/// Metropolis matrix.
#[derive(Clone, Debug, Serialize)]
pub struct StationaryReport {
    pub pi: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `beta = 0` on a complete graph: the plain chain is periodic (sizes
    /// alternate parity), so only the lazy iteration converges.
    pub degenerate: bool,
}

const STAGNATION_ITERS: usize = 2_000;
const ROUNDING_FLOOR: f64 = 1e-12;

pub const DEFAULT_STATE_LIMIT: usize = 200_000;

pub fn exact_stationary_and_balance(
    idx: &StateSpaceIndex,
    g: &PlantedGraph,
    ctx: &GibbsContext,
    state_limit: usize,
) -> Result<StationaryReport> {
    if idx.len() > state_limit {
        return Err(Error::BudgetExceeded {
            budget: state_limit,
        });
    }
    if !idx.is_complete() {
        return Err(Error::InvalidState(
            "stationary law needs the full clique space".into(),
        ));
    }
    let p = metropolis_kernel(idx, g, ctx);
    let st = p.stationary(1e-15, 5_000_000);
    let residual = p.balance_residual(&st.pi);
    let complete = g.edge_count() == g.n() * (g.n() - 1) / 2;
    Ok(StationaryReport {
        residual,
        iterations: st.iterations,
        converged: st.converged,
        degenerate: ctx.beta == 0.0 && complete,
        pi: st.pi,
    })
}

/// Exact expected steps for the Metropolis chain to hit `target` from
/// `start`, to relative accuracy about `1e-8`.
pub fn expected_hitting_time(
    idx: &StateSpaceIndex,
    g: &PlantedGraph,
    ctx: &GibbsContext,
    start: usize,
    target: impl Fn(usize) -> bool,
) -> Result<f64> {
    let targets: Vec<bool> = (0..idx.len()).map(&target).collect();
    if targets[start] {
        return Ok(0.0);
    }
    let p = metropolis_kernel(idx, g, ctx);
    let h = p.hitting_times(&targets, 1e-11, 10_000_000)?;
    if h[start].is_finite() {
        Ok(h[start])
    } else {
        Err(Error::Unreachable)
    }
}
