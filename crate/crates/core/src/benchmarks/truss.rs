//! Linear-elastic plane truss solved by the direct stiffness method.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bar {
    pub start: usize,
    pub end: usize,
    /// Index into the per-group section and modulus arrays.
    pub group: usize,
}

#[derive(Debug, Clone)]
pub struct TrussModel {
    pub nodes: Vec<[f64; 2]>,
    pub bars: Vec<Bar>,
    /// Constrained degrees of freedom, `2·node + {0: x, 1: y}`.
    pub fixed_dofs: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct TrussSolution {
    /// Nodal displacements, `2·node + {0, 1}`.
    pub displacements: DVector<f64>,
    /// Support reactions at every dof (zero on free dofs).
    pub reactions: DVector<f64>,
    /// Axial force per bar, tension positive.
    pub axial_forces: Vec<f64>,
    /// Assembled, unconstrained global stiffness.
    pub stiffness: DMatrix<f64>,
}

impl TrussModel {
    pub fn n_dofs(&self) -> usize {
        2 * self.nodes.len()
    }

    fn geometry(&self, bar: &Bar) -> (f64, f64, f64) {
        let [x0, y0] = self.nodes[bar.start];
        let [x1, y1] = self.nodes[bar.end];
        let length = (x1 - x0).hypot(y1 - y0);
        (length, (x1 - x0) / length, (y1 - y0) / length)
    }

    pub fn assemble(&self, areas: &[f64], moduli: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n_dofs();
        let mut k = DMatrix::zeros(n, n);
        for bar in &self.bars {
            let (a, e) = match (areas.get(bar.group), moduli.get(bar.group)) {
                (Some(&a), Some(&e)) => (a, e),
                _ => return Err(Error::InvalidParameter(format!("no section for bar group {}", bar.group))),
            };
            if !(a > 0.0 && e > 0.0 && a.is_finite() && e.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "bar group {} needs A > 0 and E > 0, got A = {a}, E = {e}",
                    bar.group
                )));
            }
            let (length, c, s) = self.geometry(bar);
            let ke = e * a / length;
            let dir = [c, s];
            let dofs = [2 * bar.start, 2 * bar.start + 1, 2 * bar.end, 2 * bar.end + 1];
            for (p, &dp) in dofs.iter().enumerate() {
                for (q, &dq) in dofs.iter().enumerate() {
                    let sign = if (p < 2) == (q < 2) { 1.0 } else { -1.0 };
                    k[(dp, dq)] += sign * ke * dir[p % 2] * dir[q % 2];
                }
            }
        }
        Ok(k)
    }

    /// Static response to nodal `loads` (one entry per dof).
    pub fn solve(&self, areas: &[f64], moduli: &[f64], loads: &DVector<f64>) -> Result<TrussSolution> {
        let n = self.n_dofs();
        if loads.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: loads.len() });
        }
        let k = self.assemble(areas, moduli)?;
        let free: Vec<usize> = (0..n).filter(|d| !self.fixed_dofs.contains(d)).collect();
        let k_ff = k.select_rows(&free).select_columns(&free);
        let f_f = loads.select_rows(&free);
        let chol = k_ff
            .cholesky()
            .ok_or_else(|| Error::SingularStiffness("constrained stiffness is not positive definite".into()))?;
        let d_f = chol.solve(&f_f);
        let mut displacements = DVector::zeros(n);
        for (value, &d) in d_f.iter().zip(&free) {
            displacements[d] = *value;
        }
        let mut reactions = &k * &displacements - loads;
        for &d in &free {
            reactions[d] = 0.0;
        }
        let axial_forces = self
            .bars
            .iter()
            .map(|bar| {
                let (length, c, s) = self.geometry(bar);
                let du = displacements[2 * bar.end] - displacements[2 * bar.start];
                let dv = displacements[2 * bar.end + 1] - displacements[2 * bar.start + 1];
                moduli[bar.group] * areas[bar.group] / length * (c * du + s * dv)
            })
            .collect();
        Ok(TrussSolution { displacements, reactions, axial_forces, stiffness: k })
    }
}

pub const SPAN_BAYS: usize = 6;
pub const BAY_WIDTH: f64 = 4.0;
pub const HEIGHT: f64 = 2.0;
/// Bottom-chord node at midspan.
pub const MIDSPAN_NODE: usize = 3;
pub const HORIZONTAL: usize = 0;
pub const DIAGONAL: usize = 1;

/// 23-bar Warren truss: 7 bottom nodes at 4 m spacing, 6 top nodes 2 m
/// above the bay centres, pin at the left support and roller at the right.
/// Horizontal chords form group 0, diagonals group 1.
pub fn warren_truss() -> TrussModel {
    let mut nodes = Vec::with_capacity(13);
    for i in 0..=SPAN_BAYS {
        nodes.push([BAY_WIDTH * i as f64, 0.0]);
    }
    for j in 0..SPAN_BAYS {
        nodes.push([BAY_WIDTH * j as f64 + BAY_WIDTH / 2.0, HEIGHT]);
    }
    let top = |j: usize| SPAN_BAYS + 1 + j;
    let mut bars = Vec::with_capacity(23);
    for i in 0..SPAN_BAYS {
        bars.push(Bar { start: i, end: i + 1, group: HORIZONTAL });
    }
    for j in 0..SPAN_BAYS - 1 {
        bars.push(Bar { start: top(j), end: top(j + 1), group: HORIZONTAL });
    }
    for j in 0..SPAN_BAYS {
        bars.push(Bar { start: j, end: top(j), group: DIAGONAL });
        bars.push(Bar { start: j + 1, end: top(j), group: DIAGONAL });
    }
    TrussModel { nodes, bars, fixed_dofs: vec![0, 1, 2 * SPAN_BAYS + 1] }
}

/// Midspan deflection (m, positive downwards) for
/// `x = [A₁, A₂, E₁, E₂, P₁..P₆]`, with loads in N acting downwards on the
/// top-chord nodes.
pub fn truss_displacement(x: &[f64]) -> Result<f64> {
    if x.len() != 10 {
        return Err(Error::DimensionMismatch { expected: 10, got: x.len() });
    }
    let truss = warren_truss();
    let mut loads = DVector::zeros(truss.n_dofs());
    for (j, &p) in x[4..].iter().enumerate() {
        loads[2 * (SPAN_BAYS + 1 + j) + 1] = -p;
    }
    let sol = truss.solve(&[x[0], x[1]], &[x[2], x[3]], &loads)?;
    Ok(-sol.displacements[2 * MIDSPAN_NODE + 1])
}
