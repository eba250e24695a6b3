//! h-adaptive cubature on a box with the degree-7/5 Genz–Malik embedded rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::IntegrationResult;

const LAMBDA2: f64 = 0.358_568_582_800_318_1; // sqrt(9/70)
const LAMBDA4: f64 = 0.948_683_298_050_513_8; // sqrt(9/10)
const LAMBDA5: f64 = 0.688_247_201_611_685_3; // sqrt(9/19)

struct Rule {
    w: [f64; 5],
    w5: [f64; 4],
}

impl Rule {
    fn new(d: usize) -> Rule {
        let n = d as f64;
        Rule {
            w: [
                (12824.0 - 9120.0 * n + 400.0 * n * n) / 19683.0,
                980.0 / 6561.0,
                (1820.0 - 400.0 * n) / 19683.0,
                200.0 / 19683.0,
                6859.0 / 19683.0 / 2f64.powi(d as i32),
            ],
            w5: [
                (729.0 - 950.0 * n + 50.0 * n * n) / 729.0,
                245.0 / 486.0,
                (265.0 - 100.0 * n) / 1458.0,
                25.0 / 729.0,
            ],
        }
    }

    fn points(d: usize) -> usize {
        1 + 4 * d + 2 * d * (d - 1) + (1 << d)
    }
}

struct Cell {
    center: Vec<f64>,
    half: Vec<f64>,
    value: f64,
    error: f64,
    split_axis: usize,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn apply<F: FnMut(&[f64]) -> f64>(f: &mut F, rule: &Rule, center: Vec<f64>, half: Vec<f64>) -> Cell {
    let d = center.len();
    let mut x = center.clone();
    let f1 = f(&x);
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let mut best_axis = 0;
    let mut best_diff = -1.0;
    for i in 0..d {
        x[i] = center[i] - LAMBDA2 * half[i];
        let a = f(&x);
        x[i] = center[i] + LAMBDA2 * half[i];
        let b = f(&x);
        x[i] = center[i] - LAMBDA4 * half[i];
        let c = f(&x);
        x[i] = center[i] + LAMBDA4 * half[i];
        let e = f(&x);
        x[i] = center[i];
        s2 += a + b;
        s3 += c + e;
        let diff = (a + b - 2.0 * f1 - (c + e - 2.0 * f1) / 7.0).abs();
        // ties go to the wider axis
        if diff > best_diff * (1.0 + 1e-10) || (diff >= best_diff * (1.0 - 1e-10) && half[i] > half[best_axis]) {
            best_diff = diff;
            best_axis = i;
        }
    }
    let mut s4 = 0.0;
    for i in 0..d {
        for j in i + 1..d {
            for (si, sj) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)] {
                x[i] = center[i] + si * LAMBDA4 * half[i];
                x[j] = center[j] + sj * LAMBDA4 * half[j];
                s4 += f(&x);
            }
            x[i] = center[i];
            x[j] = center[j];
        }
    }
    let mut s5 = 0.0;
    for mask in 0..(1usize << d) {
        for i in 0..d {
            let sign = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            x[i] = center[i] + sign * LAMBDA5 * half[i];
        }
        s5 += f(&x);
    }
    let volume: f64 = half.iter().map(|h| 2.0 * h).product();
    let deg7 = rule.w[0] * f1 + rule.w[1] * s2 + rule.w[2] * s3 + rule.w[3] * s4 + rule.w[4] * s5;
    let deg5 = rule.w5[0] * f1 + rule.w5[1] * s2 + rule.w5[2] * s3 + rule.w5[3] * s4;
    Cell {
        center,
        half,
        value: volume * deg7,
        error: (volume * (deg7 - deg5)).abs(),
        split_axis: best_axis,
    }
}

/// Integrates `f` over the box `[lo, hi]` (dimension >= 2).
pub(crate) fn adaptive_genz_malik<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    lo: &[f64],
    hi: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_evals: usize,
) -> IntegrationResult {
    let d = lo.len();
    debug_assert!(d >= 2);
    let rule = Rule::new(d);
    let per_cell = Rule::points(d);
    let center: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
    let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();

    let mut heap = BinaryHeap::new();
    let first = apply(&mut f, &rule, center, half);
    let mut value = first.value;
    let mut error = first.error;
    let mut evaluations = per_cell;
    heap.push(first);

    loop {
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return IntegrationResult { value, error_estimate: error, converged: true, evaluations };
        }
        if evaluations + 2 * per_cell > max_evals {
            break;
        }
        let Some(cell) = heap.pop() else { break };
        let axis = cell.split_axis;
        let h = 0.5 * cell.half[axis];
        if h == 0.0 {
            heap.push(cell);
            break;
        }
        let mut half = cell.half.clone();
        half[axis] = h;
        let mut left_c = cell.center.clone();
        left_c[axis] -= h;
        let mut right_c = cell.center.clone();
        right_c[axis] += h;
        let left = apply(&mut f, &rule, left_c, half.clone());
        let right = apply(&mut f, &rule, right_c, half);
        evaluations += 2 * per_cell;
        value += left.value + right.value - cell.value;
        error += left.error + right.error - cell.error;
        heap.push(left);
        heap.push(right);
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|c| c.value).sum();
            error = heap.iter().map(|c| c.error).sum();
        }
    }
    value = heap.iter().map(|c| c.value).sum();
    error = heap.iter().map(|c| c.error).sum();
    let converged = error <= abs_tol.max(rel_tol * value.abs());
    IntegrationResult { value, error_estimate: error, converged, evaluations }
}
