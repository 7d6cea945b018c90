//! Space-time domains and their finite-difference grids.
//!
//! A grid is a uniform spatial lattice (spacing `h`, coordinates `i·h`)
//! crossed with uniform time levels (step `tau`, final level at `t = 0`).
//! Each node at each level is classified as interior, boundary, or exterior:
//!
//! * interior — the node and its full centered spatial stencil (axis
//!   neighbors plus the diagonal pairs used by mixed second differences) lie
//!   strictly inside the domain's time slice; the PDE is enforced here;
//! * boundary — the discrete parabolic boundary: the initial-slice closure,
//!   every stencil neighbor of an interior node that is not itself interior,
//!   and nodes whose value the next level needs for its time difference.
//!   Boundary nodes carry Dirichlet data evaluated at their exact
//!   coordinates, with no cut-cell interpolation;
//! * exterior — everything else; no value is stored.

use crate::error::GridError;

/// Geometric description of the space-time domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpaceTimeDomain {
    /// `B_radius × (t_start, 0]`.
    Cylinder { radius: f64, t_start: f64 },
    /// `{(x, t) : |x|² − r² < t, t ≤ 0}`; slices are balls of radius
    /// `sqrt(r² + t)` and the domain starts at `t = −r²`.
    Paraboloid { r: f64 },
}

impl SpaceTimeDomain {
    pub fn t_start(&self) -> f64 {
        match self {
            SpaceTimeDomain::Cylinder { t_start, .. } => *t_start,
            SpaceTimeDomain::Paraboloid { r } => -r * r,
        }
    }

    /// Largest spatial radius over all time slices.
    pub fn spatial_extent(&self) -> f64 {
        match self {
            SpaceTimeDomain::Cylinder { radius, .. } => *radius,
            SpaceTimeDomain::Paraboloid { r } => *r,
        }
    }

    /// Strict interior of the time slice at `t`.
    pub fn slice_contains(&self, x: &[f64], t: f64) -> bool {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            SpaceTimeDomain::Cylinder { radius, t_start } => {
                r2 < radius * radius && t > *t_start && t <= 0.0
            }
            SpaceTimeDomain::Paraboloid { r } => r2 - r * r < t && t <= 0.0,
        }
    }

    /// Closure of the time slice at `t` (used for the initial slice).
    pub fn closure_slice_contains(&self, x: &[f64], t: f64) -> bool {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        match self {
            SpaceTimeDomain::Cylinder { radius, .. } => r2 <= radius * radius,
            SpaceTimeDomain::Paraboloid { r } => r2 - r * r <= t + 1e-14,
        }
    }

    fn validate(&self) -> Result<(), GridError> {
        match self {
            SpaceTimeDomain::Cylinder { radius, t_start } => {
                if !(*radius > 0.0) || !radius.is_finite() {
                    return Err(GridError::BadParameters(format!(
                        "cylinder radius {radius} must be positive"
                    )));
                }
                if !(*t_start < 0.0) || !t_start.is_finite() {
                    return Err(GridError::BadParameters(format!(
                        "cylinder t_start {t_start} must be negative"
                    )));
                }
            }
            SpaceTimeDomain::Paraboloid { r } => {
                if !(*r > 0.0) || !r.is_finite() {
                    return Err(GridError::BadParameters(format!(
                        "paraboloid r {r} must be positive"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Classification of a node at a time level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Exterior,
    Boundary,
    Interior,
}

/// Discretization of a space-time domain.
#[derive(Debug)]
pub struct Grid {
    pub domain: SpaceTimeDomain,
    pub n: usize,
    pub h: f64,
    pub tau: f64,
    imax: i64,
    side: usize,
    num_nodes: usize,
    num_levels: usize,
    class: Vec<Vec<NodeClass>>,
    interior: Vec<Vec<usize>>,
    slot: Vec<Vec<i32>>,
    stencil: Vec<[i64; 3]>,
}

/// Offsets of the full centered spatial stencil: axis neighbors and the
/// diagonal pairs required by the 4-point mixed-derivative stencil.
pub fn stencil_offsets(n: usize) -> Vec<[i64; 3]> {
    let mut offs = Vec::new();
    for a in 0..n {
        for s in [-1i64, 1] {
            let mut o = [0i64; 3];
            o[a] = s;
            offs.push(o);
        }
    }
    for a in 0..n {
        for b in (a + 1)..n {
            for sa in [-1i64, 1] {
                for sb in [-1i64, 1] {
                    let mut o = [0i64; 3];
                    o[a] = sa;
                    o[b] = sb;
                    offs.push(o);
                }
            }
        }
    }
    offs
}

/// Builds the grid: node lattice, time levels and interior/boundary masks.
pub fn build_grid(
    domain: SpaceTimeDomain,
    n: usize,
    h: f64,
    tau: f64,
) -> Result<Grid, GridError> {
    if !(n == 2 || n == 3) {
        return Err(GridError::BadDimension(n));
    }
    domain.validate()?;
    if !(h > 0.0) || !(tau > 0.0) || !h.is_finite() || !tau.is_finite() {
        return Err(GridError::BadParameters(format!(
            "h = {h} and tau = {tau} must be positive"
        )));
    }
    let depth = -domain.t_start();
    let m_levels = (depth / tau).round() as usize;
    if m_levels == 0 || ((m_levels as f64) * tau - depth).abs() > 1e-9 * tau.max(1.0) {
        return Err(GridError::BadParameters(format!(
            "time depth {depth} is not an integer multiple of tau = {tau}"
        )));
    }

    let imax = (domain.spatial_extent() / h).ceil() as i64 + 2;
    let side = (2 * imax + 1) as usize;
    let num_nodes = side.pow(n as u32);
    let num_levels = m_levels + 1;
    let stencil = stencil_offsets(n);

    let mut grid = Grid {
        domain,
        n,
        h,
        tau,
        imax,
        side,
        num_nodes,
        num_levels,
        class: vec![vec![NodeClass::Exterior; num_nodes]; num_levels],
        interior: vec![Vec::new(); num_levels],
        slot: vec![vec![-1; num_nodes]; num_levels],
        stencil,
    };

    let offsets = grid.stencil.clone();

    // interior first: node and full stencil strictly inside the slice
    for m in 1..num_levels {
        let t = grid.t(m);
        for id in 0..num_nodes {
            let iv = grid.index_vec(id);
            if !grid.slice_contains_iv(&iv, t) {
                continue;
            }
            let all_in = offsets.iter().all(|o| grid.slice_contains_iv(&add_iv(&iv, o), t));
            if all_in {
                grid.class[m][id] = NodeClass::Interior;
            }
        }
    }

    // boundary: stencil neighbors of interior nodes + next level's interior
    for m in 1..num_levels {
        for id in 0..num_nodes {
            if grid.class[m][id] != NodeClass::Interior {
                continue;
            }
            let iv = grid.index_vec(id);
            for o in &offsets {
                let nid = grid.id_of(&add_iv(&iv, o)).expect("stencil inside lattice");
                if grid.class[m][nid] == NodeClass::Exterior {
                    grid.class[m][nid] = NodeClass::Boundary;
                }
            }
        }
    }
    for m in 0..num_levels - 1 {
        for id in 0..num_nodes {
            if grid.class[m + 1][id] == NodeClass::Interior
                && grid.class[m][id] == NodeClass::Exterior
            {
                grid.class[m][id] = NodeClass::Boundary;
            }
        }
    }
    // initial slice closure
    let t0 = grid.t(0);
    for id in 0..num_nodes {
        let x = grid.coords(id);
        if grid.domain.closure_slice_contains(&x[..n], t0)
            && grid.class[0][id] == NodeClass::Exterior
        {
            grid.class[0][id] = NodeClass::Boundary;
        }
    }

    let mut total_interior = 0;
    for m in 0..num_levels {
        for id in 0..num_nodes {
            if grid.class[m][id] == NodeClass::Interior {
                grid.slot[m][id] = grid.interior[m].len() as i32;
                grid.interior[m].push(id);
                total_interior += 1;
            }
        }
    }
    if total_interior == 0 {
        return Err(GridError::Degenerate(
            "grid has no interior nodes at any level".to_string(),
        ));
    }
    Ok(grid)
}

fn add_iv(a: &[i64; 3], b: &[i64; 3]) -> [i64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

impl Grid {
    /// Time of level `m`; the final level lands exactly on `t = 0`.
    pub fn t(&self, m: usize) -> f64 {
        (m as i64 - (self.num_levels as i64 - 1)) as f64 * self.tau
    }

    pub fn levels(&self) -> usize {
        self.num_levels
    }

    pub fn node_count(&self) -> usize {
        self.num_nodes
    }

    pub fn lattice_max_index(&self) -> i64 {
        self.imax
    }

    /// Lattice index vector of a node id.
    pub fn index_vec(&self, id: usize) -> [i64; 3] {
        let mut iv = [0i64; 3];
        let mut rem = id;
        for item in iv.iter_mut().take(self.n) {
            *item = (rem % self.side) as i64 - self.imax;
            rem /= self.side;
        }
        iv
    }

    /// Node id of a lattice index vector, if inside the lattice box.
    pub fn id_of(&self, iv: &[i64; 3]) -> Option<usize> {
        let mut id = 0usize;
        let mut stride = 1usize;
        for a in 0..self.n {
            if iv[a].abs() > self.imax {
                return None;
            }
            id += (iv[a] + self.imax) as usize * stride;
            stride *= self.side;
        }
        Some(id)
    }

    /// Spatial coordinates of a node (entries past `n` are zero).
    pub fn coords(&self, id: usize) -> [f64; 3] {
        let iv = self.index_vec(id);
        let mut x = [0.0; 3];
        for a in 0..self.n {
            x[a] = iv[a] as f64 * self.h;
        }
        x
    }

    fn slice_contains_iv(&self, iv: &[i64; 3], t: f64) -> bool {
        if iv[..self.n].iter().any(|&i| i.abs() > self.imax) {
            return false;
        }
        let mut x = [0.0; 3];
        for a in 0..self.n {
            x[a] = iv[a] as f64 * self.h;
        }
        self.domain.slice_contains(&x[..self.n], t)
    }

    pub fn class(&self, m: usize, id: usize) -> NodeClass {
        self.class[m][id]
    }

    pub fn is_valued(&self, m: usize, id: usize) -> bool {
        self.class[m][id] != NodeClass::Exterior
    }

    pub fn interior_ids(&self, m: usize) -> &[usize] {
        &self.interior[m]
    }

    /// Unknown slot of an interior node at a level, `None` otherwise.
    pub fn slot(&self, m: usize, id: usize) -> Option<usize> {
        let s = self.slot[m][id];
        (s >= 0).then_some(s as usize)
    }

    pub fn stencil(&self) -> &[[i64; 3]] {
        &self.stencil
    }

    /// Id of the node shifted by a lattice offset.
    pub fn shift(&self, id: usize, offset: &[i64; 3]) -> Option<usize> {
        self.id_of(&add_iv(&self.index_vec(id), offset))
    }

    /// Ids of all nodes with a value at level `m` (interior or boundary).
    pub fn valued_ids(&self, m: usize) -> Vec<usize> {
        (0..self.num_nodes)
            .filter(|&id| self.class[m][id] != NodeClass::Exterior)
            .collect()
    }
}
