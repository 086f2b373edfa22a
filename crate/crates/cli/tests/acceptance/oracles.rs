//! Independent reference computations: exhaustive enumeration, vertex
//! enumeration and adaptive quadrature. Nothing here calls the solvers.

use csrp::lp::{LpProblem, ObjectiveSense, RowSense};
use csrp::model::{CsrpInstance, ModelVariant};
use csrp::scenario::ScenarioSet;

/// Calls `visit` with every vector in `0..=bound[k]` componentwise.
fn odometer(bounds: &[u64], mut visit: impl FnMut(&[u64])) {
    let mut v = vec![0u64; bounds.len()];
    loop {
        visit(&v);
        let mut k = 0;
        loop {
            if k == v.len() {
                return;
            }
            if v[k] < bounds[k] {
                v[k] += 1;
                break;
            }
            v[k] = 0;
            k += 1;
        }
    }
}

const MAX_LOCATIONS: usize = 8;

fn arcs(r: usize) -> Vec<(usize, usize)> {
    (0..r).flat_map(|i| (0..r).filter(move |&j| j != i).map(move |j| (i, j))).collect()
}

/// Best second-stage value for allocation `x` and demand `d`, by trying every
/// integer move matrix.
pub fn recourse(inst: &CsrpInstance<f64>, x: &[u64], d: &[u64], variant: ModelVariant) -> f64 {
    let r = x.len();
    assert!(r <= MAX_LOCATIONS);
    let arcs = arcs(r);
    let total: u64 = x.iter().sum();
    let surplus: Vec<u64> = (0..r).map(|i| x[i].saturating_sub(d[i])).collect();
    let bounds: Vec<u64> = arcs
        .iter()
        .map(|&(i, _)| match variant {
            ModelVariant::FlowBalance => total,
            ModelVariant::PaperLiteral => surplus[i],
        })
        .collect();
    let mut best = f64::NEG_INFINITY;
    odometer(&bounds, |y| {
        let mut inflow = [0u64; MAX_LOCATIONS];
        let mut outflow = [0u64; MAX_LOCATIONS];
        let mut cost = 0.0;
        for (k, &(i, j)) in arcs.iter().enumerate() {
            outflow[i] += y[k];
            inflow[j] += y[k];
            cost += inst.transfer[i][j] * y[k] as f64;
        }
        let mut value = -cost;
        for i in 0..r {
            let available = match variant {
                ModelVariant::FlowBalance => {
                    if outflow[i] > x[i] + inflow[i] {
                        return;
                    }
                    x[i] + inflow[i] - outflow[i]
                }
                ModelVariant::PaperLiteral => {
                    if outflow[i] > surplus[i] {
                        return;
                    }
                    x[i] + inflow[i]
                }
            };
            value += inst.revenue[i] * available.min(d[i]) as f64;
        }
        best = best.max(value);
    });
    best
}

/// Optimal expected profit over every allocation with `sum x <= C`.
pub fn extensive(inst: &CsrpInstance<f64>, set: &ScenarioSet, variant: ModelVariant) -> f64 {
    let r = inst.num_locations();
    let probs: Vec<f64> = (0..set.len()).map(|s| set.probability(s)).collect();
    let mut best = f64::NEG_INFINITY;
    odometer(&vec![inst.capacity; r], |x| {
        if x.iter().sum::<u64>() > inst.capacity {
            return;
        }
        let holding: f64 = (0..r).map(|i| inst.holding[i] * x[i] as f64).sum();
        let expected: f64 = set.demands().iter().zip(&probs).map(|(d, p)| p * recourse(inst, x, d, variant)).sum();
        best = best.max(expected - holding);
    });
    best
}

/// Outcome of enumerating every basic solution of an LP whose variables are
/// all bounded below by zero and unbounded above.
#[derive(Debug)]
pub enum Vertices {
    Infeasible,
    Best(f64),
}

fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

fn combinations(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Best objective over all vertices of `{rows, x >= 0}`. Equality rows are
/// always active; the remaining active set is chosen among inequality rows and
/// nonnegativity bounds.
pub fn vertex_enumeration(p: &LpProblem<f64>) -> Vertices {
    let n = p.num_vars();
    // Every hyperplane as (coefficients, rhs).
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut fixed = Vec::new();
    for (i, row) in p.rows.iter().enumerate() {
        // An all-zero row bounds nothing; the feasibility test still checks it.
        if row.iter().all(|&a| a == 0.0) {
            continue;
        }
        if p.row_senses[i] == RowSense::Eq {
            fixed.push(planes.len());
        }
        planes.push((row.clone(), p.rhs[i]));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }
    let free: Vec<usize> = (0..planes.len()).filter(|k| !fixed.contains(k)).collect();
    let feasible = |x: &[f64]| {
        let scale = 1.0 + x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let tol = 1e-9 * scale;
        x.iter().all(|&v| v >= -tol)
            && p.rows.iter().enumerate().all(|(i, row)| {
                let act: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
                let t = tol * (1.0 + p.rhs[i].abs() + row.iter().map(|a| a.abs()).sum::<f64>());
                match p.row_senses[i] {
                    RowSense::Le => act <= p.rhs[i] + t,
                    RowSense::Ge => act >= p.rhs[i] - t,
                    RowSense::Eq => (act - p.rhs[i]).abs() <= t,
                }
            })
    };
    let sign = match p.sense {
        ObjectiveSense::Maximize => 1.0,
        ObjectiveSense::Minimize => -1.0,
    };
    let mut best: Option<f64> = None;
    let mut try_set = |active: &[usize]| {
        let a: Vec<Vec<f64>> = active.iter().map(|&k| planes[k].0.clone()).collect();
        let b: Vec<f64> = active.iter().map(|&k| planes[k].1).collect();
        if let Some(x) = solve_square(a, b) {
            if feasible(&x) {
                let v = sign * p.objective_value(&x);
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
    };
    if fixed.len() >= n {
        combinations(fixed.len(), n, |c| {
            let active: Vec<usize> = c.iter().map(|&k| fixed[k]).collect();
            try_set(&active);
        });
    } else {
        combinations(free.len(), n - fixed.len(), |c| {
            let mut active = fixed.clone();
            active.extend(c.iter().map(|&k| free[k]));
            try_set(&active);
        });
    }
    match best {
        None => Vertices::Infeasible,
        Some(v) => Vertices::Best(sign * v),
    }
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// Integral of `f` over `[a, b]`, split into `pieces` panels that are each
/// refined adaptively.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let w = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (lo, hi) = (a + w * k as f64, a + w * (k + 1) as f64);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            adaptive(&f, lo, hi, fa, fm, fb, simpson(lo, hi, fa, fm, fb), tol / pieces as f64, 40)
        })
        .sum()
}
