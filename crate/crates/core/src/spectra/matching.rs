//! Min-cost perfect matching on a dense square cost matrix (Hungarian method
//! with potentials, `O(n³)`).

use alloc::vec::Vec;

use nalgebra::DMatrix;

/// `assign[i]` is the column matched to row `i`; minimizes the total cost.
pub fn min_cost_assignment(cost: &DMatrix<f64>) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "square cost matrix");
    // 1-based arrays with a virtual column 0.
    let mut u = alloc::vec![0.0f64; n + 1];
    let mut v = alloc::vec![0.0f64; n + 1];
    let mut p = alloc::vec![0usize; n + 1];
    let mut way = alloc::vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = alloc::vec![f64::INFINITY; n + 1];
        let mut used = alloc::vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = alloc::vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    assign
}
