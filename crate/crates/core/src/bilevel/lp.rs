//! Exact follower reaction for small blocks by vertex enumeration.

use nalgebra::{DMatrix, DVector};

use super::{BilevelProblem, DecisionVector, FEAS_TOL};
use crate::math::dot;

/// Half-space `a . x <= b`.
struct HalfSpace {
    a: Vec<f64>,
    b: f64,
}

fn combinations(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Follower `v`'s exact optimum over its box given the other blocks in `x`.
///
/// Enumerates every vertex of `{A_v x_v <= slack, lo <= x_v <= hi, x_v >= 0}`
/// and keeps the follower's best; ties go to the leader's best, then to the
/// lexicographically smallest vertex. Intended for blocks of a handful of
/// variables. Returns `None` when the region is empty.
pub fn exact_response(p: &BilevelProblem, v: usize, x: &DecisionVector) -> Option<Vec<f64>> {
    let slack = p.slack_excluding(v, x);
    let a = &p.constraint_blocks[v];
    let n = a.cols;
    let mut cons: Vec<HalfSpace> = Vec::new();
    for (r, &s) in slack.iter().enumerate() {
        let row = a.row(r);
        if row.iter().all(|&c| c == 0.0) {
            if s < -FEAS_TOL {
                return None;
            }
            continue;
        }
        cons.push(HalfSpace { a: row.to_vec(), b: s });
    }
    for (c, bound) in p.bounds[v].iter().enumerate() {
        let mut e = vec![0.0; n];
        e[c] = 1.0;
        cons.push(HalfSpace { a: e.clone(), b: bound[1] });
        e[c] = -1.0;
        cons.push(HalfSpace { a: e, b: -bound[0].max(0.0) });
    }

    let own = &p.follower_coeffs[v - 1][v];
    let lead = &p.leader_coeffs[v];
    let mut best: Option<(f64, f64, Vec<f64>)> = None;
    let mut sys = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    combinations(cons.len(), n, |pick| {
        for (row, &ci) in pick.iter().enumerate() {
            for c in 0..n {
                sys[(row, c)] = cons[ci].a[c];
            }
            rhs[row] = cons[ci].b;
        }
        let Some(sol) = sys.clone().lu().solve(&rhs) else {
            return;
        };
        let point: Vec<f64> = sol.iter().copied().collect();
        if point.iter().any(|v| !v.is_finite()) {
            return;
        }
        if !cons.iter().all(|h| dot(&h.a, &point) <= h.b + FEAS_TOL) {
            return;
        }
        let f = dot(own, &point);
        let l = dot(lead, &point);
        let better = match &best {
            None => true,
            Some((bf, bl, bp)) => {
                if f > bf + FEAS_TOL {
                    true
                } else if f < bf - FEAS_TOL {
                    false
                } else if l > bl + FEAS_TOL {
                    true
                } else if l < bl - FEAS_TOL {
                    false
                } else {
                    point < *bp
                }
            }
        };
        if better {
            best = Some((f, l, point));
        }
    });
    best.map(|(_, _, mut point)| {
        // Snap tiny excursions produced by the linear solve back into the box.
        for (v, b) in point.iter_mut().zip(&p.bounds[v]) {
            *v = v.clamp(b[0].max(0.0), b[1]);
        }
        point
    })
}
