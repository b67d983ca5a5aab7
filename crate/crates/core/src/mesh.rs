//! Staggered periodic Lagrangian mesh on the unit torus.
//!
//! Cell `j` spans `[x[j-1], x[j]]` where `x[j]` is its right edge; the edge
//! to the left of cell 0 is `x[J-1] - 1`. Positions are stored unwrapped so
//! that they stay strictly increasing while the mesh drifts around the torus.
//! Edge `j` sits between cells `j` and `j+1` and carries velocity `u[j]`.

use crate::error::{Error, Result};

/// Length of the periodic domain.
pub const TORUS_LENGTH: f64 = 1.0;

/// Cell volumes `Δx_j` from unwrapped edge positions.
pub fn volumes(edges: &[f64]) -> Vec<f64> {
    cell_bounds(edges).into_iter().map(|(l, r)| r - l).collect()
}

/// Cell volumes, failing on the first non-positive one.
pub fn checked_volumes(edges: &[f64]) -> Result<Vec<f64>> {
    let vols = volumes(edges);
    if let Some((cell, &volume)) = vols.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::DegenerateMesh { cell, volume });
    }
    Ok(vols)
}

/// Left and right edge positions of every cell.
pub fn cell_bounds(edges: &[f64]) -> Vec<(f64, f64)> {
    let n = edges.len();
    (0..n)
        .map(|j| {
            let left = if j == 0 { edges[n - 1] - TORUS_LENGTH } else { edges[j - 1] };
            (left, edges[j])
        })
        .collect()
}

/// Velocity difference across every cell, `u[j] - u[j-1]`.
pub fn velocity_jumps(u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n).map(|j| u[j] - u[(j + n - 1) % n]).collect()
}

/// Mass attached to each edge: the mean of the two adjacent cell masses.
pub fn edge_masses(cell_masses: &[f64]) -> Vec<f64> {
    let n = cell_masses.len();
    (0..n).map(|j| 0.5 * (cell_masses[j] + cell_masses[(j + 1) % n])).collect()
}

/// Distance between the centers of the two cells adjacent to each edge.
pub fn dual_volumes(vols: &[f64]) -> Vec<f64> {
    let n = vols.len();
    (0..n).map(|j| 0.5 * (vols[j] + vols[(j + 1) % n])).collect()
}

/// Reduce `x` into the period `[origin, origin + 1)`.
pub fn wrap_into(x: f64, origin: f64) -> f64 {
    let shifted = (x - origin).rem_euclid(TORUS_LENGTH);
    origin + shifted
}

/// Uniform mesh with `cells` equal cells and edge `j` at `(j + 1) / cells`.
pub fn uniform_edges(cells: usize) -> Vec<f64> {
    (0..cells).map(|j| (j + 1) as f64 / cells as f64).collect()
}

/// Piecewise-linear periodic interpolation of edge values at position `x`.
pub fn interpolate_edges(edges: &[f64], values: &[f64], x: f64) -> f64 {
    let n = edges.len();
    // Edge n-1 shifted back by one period is the first node of the period.
    let origin = edges[n - 1] - TORUS_LENGTH;
    let x = wrap_into(x, origin);
    // First edge with position >= x.
    let k = edges.partition_point(|&e| e < x);
    let (x0, v0, x1, v1) = if k == 0 {
        (origin, values[n - 1], edges[0], values[0])
    } else if k == n {
        (edges[n - 1], values[n - 1], edges[n - 1], values[n - 1])
    } else {
        (edges[k - 1], values[k - 1], edges[k], values[k])
    };
    if x1 <= x0 {
        return v0;
    }
    let w = (x - x0) / (x1 - x0);
    v0 + w * (v1 - v0)
}

/// Index of the cell containing `x` (cells are closed on the left).
pub fn locate_cell(edges: &[f64], x: f64) -> usize {
    let n = edges.len();
    let origin = edges[n - 1] - TORUS_LENGTH;
    let x = wrap_into(x, origin);
    edges.partition_point(|&e| e <= x).min(n - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_volumes_sum_to_one() {
        let e = uniform_edges(7);
        let v = volumes(&e);
        assert!(v.iter().all(|&d| (d - 1.0 / 7.0).abs() < 1e-15));
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn drifted_mesh_keeps_volumes() {
        let e: Vec<f64> = uniform_edges(4).iter().map(|x| x + 3.3).collect();
        let v = volumes(&e);
        assert!(v.iter().all(|&d| (d - 0.25).abs() < 1e-14));
    }

    #[test]
    fn checked_volumes_flags_inverted_cells() {
        let e = vec![0.3, 0.2, 1.0];
        assert!(matches!(checked_volumes(&e), Err(Error::DegenerateMesh { cell: 1, .. })));
    }

    #[test]
    fn interpolation_wraps_periodically() {
        let e = vec![0.25, 0.5, 0.75, 1.0];
        let u = vec![1.0, 2.0, 3.0, 4.0];
        assert!((interpolate_edges(&e, &u, 0.375) - 1.5).abs() < 1e-15);
        assert!((interpolate_edges(&e, &u, 1.375) - 1.5).abs() < 1e-15);
        // Between edge 3 (at 0 ≡ 1) and edge 0.
        assert!((interpolate_edges(&e, &u, 0.125) - 2.5).abs() < 1e-15);
        assert!((interpolate_edges(&e, &u, 0.5) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn locate_cell_respects_left_closed_cells() {
        let e = vec![0.25, 0.5, 0.75, 1.0];
        assert_eq!(locate_cell(&e, 0.1), 0);
        assert_eq!(locate_cell(&e, 0.25), 1);
        assert_eq!(locate_cell(&e, 0.99), 3);
        assert_eq!(locate_cell(&e, 1.1), 0);
    }
}
