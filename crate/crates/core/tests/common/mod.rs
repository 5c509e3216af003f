//! Independent brute-force fixed-point scan used as an oracle for the
//! cylinder enumeration.

#![allow(dead_code)]

use randcycles::symbolic::RandomSystem;

/// `T_ω^n(x) - x` through ordinary branch dispatch.
fn g(sys: &RandomSystem, omega: &[usize], x: f64) -> f64 {
    sys.compose(omega, x).expect("grid point inside X") - x
}

/// Roots of `T_ω^n(x) = x` from a uniform grid of `points` samples.
///
/// Every branch of `T_ω^n` is increasing with slope above one, so `g` rises
/// on each continuity piece and only jumps downwards. A cell with
/// `g(b) < g(a)` therefore contains a jump, which is located by bisection
/// before each piece is checked for a crossing. Crossings are accepted only
/// where the bracket's right end has `|g|` below `accept`, which discards
/// jumps and keeps roots at the closed left end of a piece. Grid points
/// with `|g|` below `accept` count as roots as well.
pub fn brute_force_cycles(sys: &RandomSystem, omega: &[usize], points: usize, accept: f64) -> Vec<f64> {
    let x = sys.ambient();
    let h = x.length() / points as f64;
    let grid: Vec<f64> = (0..=points)
        .map(|k| if k == points { x.hi() } else { x.lo() + h * k as f64 })
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&t| g(sys, omega, t)).collect();
    let mut roots = Vec::new();
    for k in 0..points {
        let (a, b) = (grid[k], grid[k + 1]);
        let (ga, gb) = (vals[k], vals[k + 1]);
        if ga.abs() <= accept {
            roots.push(a);
        }
        if gb >= ga {
            crossing(sys, omega, a, b, ga, gb, accept, &mut roots);
        } else {
            // locate the jump: points with g >= g(a) lie on the left piece
            let (mut l, mut r) = (a, b);
            while r - l > 1e-15 * r.abs().max(1.0) {
                let m = 0.5 * (l + r);
                if m <= l || m >= r {
                    break;
                }
                if g(sys, omega, m) >= ga {
                    l = m;
                } else {
                    r = m;
                }
            }
            let (gl, gr) = (g(sys, omega, l), g(sys, omega, r));
            crossing(sys, omega, a, l, ga, gl, accept, &mut roots);
            if gr.abs() <= accept {
                roots.push(r);
            } else {
                crossing(sys, omega, r, b, gr, gb, accept, &mut roots);
            }
        }
    }
    if vals[points].abs() <= accept {
        roots.push(x.hi());
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|p, q| (*p - *q).abs() <= 1e-9);
    roots
}

#[allow(clippy::too_many_arguments)]
fn crossing(sys: &RandomSystem, omega: &[usize], a: f64, b: f64, ga: f64, gb: f64, accept: f64, roots: &mut Vec<f64>) {
    if !(ga < 0.0 && gb > 0.0) {
        return;
    }
    let (mut l, mut r) = (a, b);
    for _ in 0..200 {
        let m = 0.5 * (l + r);
        if m <= l || m >= r {
            break;
        }
        if g(sys, omega, m) < 0.0 {
            l = m;
        } else {
            r = m;
        }
    }
    if g(sys, omega, r).abs() <= accept {
        roots.push(r);
    }
}

/// Pairs sorted point lists one to one; returns the largest gap, or `None`
/// when the counts differ.
pub fn match_bijectively(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return None;
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    Some(a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}
