//! Mapped structured meshes on moving domains.
//!
//! A [`MeshReference`] fixes a logical lattice and its node positions on the
//! reference domain. [`mesh_at`] maps the nodes through the flow map (plus an
//! optional interior "jiggle" that moves nodes without moving the boundary)
//! and recomputes volumes, centroids, face normals and face velocities.

use std::sync::Arc;

use super::FlowMap;
use crate::expr::ScalarField;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Neighbor {
    Cell(usize),
    /// Face on the physical boundary `Gamma_t`.
    Boundary,
    /// Face across the periodic seam of axis 0.
    Periodic(usize),
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Cell on the side the normal points away from.
    pub left: usize,
    pub right: Neighbor,
    /// Nodes spanning the face; 1D faces use `nodes[0]` only.
    pub nodes: [usize; 2],
    /// Lattice axis the face is orthogonal to.
    pub axis: usize,
    /// Orientation of a 1D face normal (+1 or -1).
    orient: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        matches!(self.right, Neighbor::Boundary)
    }

    pub fn right_cell(&self) -> Option<usize> {
        match self.right {
            Neighbor::Cell(c) | Neighbor::Periodic(c) => Some(c),
            Neighbor::Boundary => None,
        }
    }
}

/// Connectivity of a structured `n1 x n2` lattice (`n2 = 1` in 1D).
#[derive(Debug, Clone)]
pub struct Topology {
    pub dim: usize,
    pub shape: [usize; 2],
    pub periodic: bool,
    pub faces: Vec<Face>,
    /// `(face, sign)` per cell, sign `+1` when the face normal points out of the cell.
    pub cell_faces: Vec<Vec<(usize, f64)>>,
    n_nodes: usize,
}

impl Topology {
    pub fn line(n: usize, periodic: bool) -> Result<Self> {
        if n < 2 {
            return Err(Error::Precondition(format!("need at least 2 cells, got {n}")));
        }
        let mut faces = Vec::with_capacity(n + 1);
        if !periodic {
            faces.push(Face { left: 0, right: Neighbor::Boundary, nodes: [0, 0], axis: 0, orient: -1.0 });
        }
        for k in 1..n {
            faces.push(Face { left: k - 1, right: Neighbor::Cell(k), nodes: [k, k], axis: 0, orient: 1.0 });
        }
        let right = if periodic { Neighbor::Periodic(0) } else { Neighbor::Boundary };
        faces.push(Face { left: n - 1, right, nodes: [n, n], axis: 0, orient: 1.0 });
        Ok(Self::assemble(1, [n, 1], periodic, faces, n + 1))
    }

    pub fn grid(n1: usize, n2: usize, periodic: bool) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(Error::Precondition(format!("need at least 2x2 cells, got {n1}x{n2}")));
        }
        let node = |i: usize, j: usize| i + (n1 + 1) * j;
        let cell = |i: usize, j: usize| i + n1 * j;
        let mut faces = Vec::new();
        // faces orthogonal to axis 0, nodes ordered so rot(b - a) points +x
        for j in 0..n2 {
            if !periodic {
                faces.push(Face {
                    left: cell(0, j),
                    right: Neighbor::Boundary,
                    nodes: [node(0, j + 1), node(0, j)],
                    axis: 0,
                    orient: 0.0,
                });
            }
            for i in 1..n1 {
                faces.push(Face {
                    left: cell(i - 1, j),
                    right: Neighbor::Cell(cell(i, j)),
                    nodes: [node(i, j), node(i, j + 1)],
                    axis: 0,
                    orient: 0.0,
                });
            }
            let right = if periodic { Neighbor::Periodic(cell(0, j)) } else { Neighbor::Boundary };
            faces.push(Face { left: cell(n1 - 1, j), right, nodes: [node(n1, j), node(n1, j + 1)], axis: 0, orient: 0.0 });
        }
        // faces orthogonal to axis 1
        for i in 0..n1 {
            faces.push(Face {
                left: cell(i, 0),
                right: Neighbor::Boundary,
                nodes: [node(i, 0), node(i + 1, 0)],
                axis: 1,
                orient: 0.0,
            });
            for j in 1..n2 {
                faces.push(Face {
                    left: cell(i, j - 1),
                    right: Neighbor::Cell(cell(i, j)),
                    nodes: [node(i + 1, j), node(i, j)],
                    axis: 1,
                    orient: 0.0,
                });
            }
            faces.push(Face {
                left: cell(i, n2 - 1),
                right: Neighbor::Boundary,
                nodes: [node(i + 1, n2), node(i, n2)],
                axis: 1,
                orient: 0.0,
            });
        }
        Ok(Self::assemble(2, [n1, n2], periodic, faces, (n1 + 1) * (n2 + 1)))
    }

    fn assemble(dim: usize, shape: [usize; 2], periodic: bool, faces: Vec<Face>, n_nodes: usize) -> Self {
        let mut cell_faces = vec![Vec::new(); shape[0] * shape[1]];
        for (f, face) in faces.iter().enumerate() {
            cell_faces[face.left].push((f, 1.0));
            if let Some(r) = face.right_cell() {
                cell_faces[r].push((f, -1.0));
            }
        }
        Self { dim, shape, periodic, faces, cell_faces, n_nodes }
    }

    pub fn n_cells(&self) -> usize {
        self.shape[0] * self.shape[1]
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        i + self.shape[0] * j
    }

    pub fn cell_coords(&self, c: usize) -> (usize, usize) {
        (c % self.shape[0], c / self.shape[0])
    }

    /// Lattice neighbour of `cell` along `axis` in direction `dir` (+1/-1), and
    /// whether the step crosses the periodic seam.
    pub fn lattice_neighbor(&self, cell: usize, axis: usize, dir: isize) -> Option<(usize, bool)> {
        let (i, j) = self.cell_coords(cell);
        let n = self.shape[axis] as isize;
        let k = if axis == 0 { i } else { j } as isize + dir;
        let (k, wrapped) = if k < 0 || k >= n {
            if axis == 0 && self.periodic {
                (k.rem_euclid(n), true)
            } else {
                return None;
            }
        } else {
            (k, false)
        };
        let k = k as usize;
        Some((if axis == 0 { self.cell_index(k, j) } else { self.cell_index(i, k) }, wrapped))
    }

    /// Cell nodes in counter-clockwise order (two nodes in 1D).
    pub fn cell_nodes(&self, c: usize) -> Vec<usize> {
        let (i, j) = self.cell_coords(c);
        if self.dim == 1 {
            vec![i, i + 1]
        } else {
            let n1 = self.shape[0] + 1;
            vec![i + n1 * j, i + 1 + n1 * j, i + 1 + n1 * (j + 1), i + n1 * (j + 1)]
        }
    }
}

/// Interior node oscillation that leaves boundary nodes fixed: a node with
/// logical coordinates `xi` is displaced by `amplitude * b(xi) * (sin(2 pi f t), sin(4 pi f t))`
/// with `b(xi) = prod_k sin(pi xi_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jiggle {
    pub amplitude: f64,
    pub frequency: f64,
}

impl Jiggle {
    fn bump(&self, logical: &[f64; 2], dim: usize) -> f64 {
        (0..dim)
            .map(|k| {
                let xi = logical[k];
                if xi <= 0.0 || xi >= 1.0 {
                    0.0
                } else {
                    (std::f64::consts::PI * xi).sin()
                }
            })
            .product()
    }

    fn displacement(&self, t: f64, logical: &[f64; 2], dim: usize) -> Vec3 {
        let w = 2.0 * std::f64::consts::PI * self.frequency;
        let b = self.amplitude * self.bump(logical, dim);
        let mut d = Vec3::new(b * (w * t).sin(), b * (2.0 * w * t).sin(), 0.0);
        if dim == 1 {
            d[1] = 0.0;
        }
        d
    }

    fn velocity(&self, t: f64, logical: &[f64; 2], dim: usize) -> Vec3 {
        let w = 2.0 * std::f64::consts::PI * self.frequency;
        let b = self.amplitude * self.bump(logical, dim);
        let mut v = Vec3::new(b * w * (w * t).cos(), b * 2.0 * w * (2.0 * w * t).cos(), 0.0);
        if dim == 1 {
            v[1] = 0.0;
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ReferenceShape {
    Interval { x0: f64, x1: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Polygon inscribed in a disk via the square-to-disk elliptical map.
    Disk { cx: f64, cy: f64, radius: f64 },
}

/// Reference lattice on `Omega_0`.
#[derive(Debug, Clone)]
pub struct MeshReference {
    pub topology: Arc<Topology>,
    pub shape: ReferenceShape,
    pub nodes: Vec<Vec3>,
    pub logical: Vec<[f64; 2]>,
    pub jiggle: Option<Jiggle>,
}

impl MeshReference {
    pub fn interval(x0: f64, x1: f64, n: usize, periodic: bool) -> Result<Self> {
        if !(x1 > x0) {
            return Err(Error::Precondition(format!("empty interval ({x0}, {x1})")));
        }
        let topology = Arc::new(Topology::line(n, periodic)?);
        let logical: Vec<[f64; 2]> = (0..=n).map(|k| [k as f64 / n as f64, 0.0]).collect();
        let nodes = logical.iter().map(|l| Vec3::new(x0 + (x1 - x0) * l[0], 0.0, 0.0)).collect();
        Ok(Self { topology, shape: ReferenceShape::Interval { x0, x1 }, nodes, logical, jiggle: None })
    }

    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(x1 > x0 && y1 > y0) {
            return Err(Error::Precondition("empty rectangle".into()));
        }
        let topology = Arc::new(Topology::grid(nx, ny, false)?);
        let logical = grid_logical(nx, ny);
        let nodes = logical
            .iter()
            .map(|l| Vec3::new(x0 + (x1 - x0) * l[0], y0 + (y1 - y0) * l[1], 0.0))
            .collect();
        Ok(Self { topology, shape: ReferenceShape::Rectangle { x0, x1, y0, y1 }, nodes, logical, jiggle: None })
    }

    pub fn disk(cx: f64, cy: f64, radius: f64, n: usize) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Precondition(format!("disk radius must be positive, got {radius}")));
        }
        let topology = Arc::new(Topology::grid(n, n, false)?);
        let logical = grid_logical(n, n);
        let nodes = logical
            .iter()
            .map(|l| {
                let (u, v) = (2.0 * l[0] - 1.0, 2.0 * l[1] - 1.0);
                Vec3::new(
                    cx + radius * u * (1.0 - 0.5 * v * v).sqrt(),
                    cy + radius * v * (1.0 - 0.5 * u * u).sqrt(),
                    0.0,
                )
            })
            .collect();
        Ok(Self { topology, shape: ReferenceShape::Disk { cx, cy, radius }, nodes, logical, jiggle: None })
    }

    pub fn with_jiggle(mut self, jiggle: Jiggle) -> Self {
        self.jiggle = Some(jiggle);
        self
    }

    pub fn dim(&self) -> usize {
        self.topology.dim
    }

    /// Logical spacing `1/n1`, the refinement parameter of studies.
    pub fn spacing(&self) -> f64 {
        1.0 / self.topology.shape[0] as f64
    }
}

fn grid_logical(nx: usize, ny: usize) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            out.push([i as f64 / nx as f64, j as f64 / ny as f64]);
        }
    }
    out
}

/// Immutable geometry of `Omega_t` at one time.
#[derive(Debug, Clone)]
pub struct MovingMesh {
    pub topology: Arc<Topology>,
    pub time: f64,
    pub nodes: Vec<Vec3>,
    pub node_velocities: Vec<Vec3>,
    pub cell_volumes: Vec<f64>,
    pub cell_centroids: Vec<Vec3>,
    /// Unit normals, pointing from `left` to `right` (outward on the boundary).
    pub face_normals: Vec<Vec3>,
    pub face_areas: Vec<f64>,
    pub face_midpoints: Vec<Vec3>,
    pub face_velocities: Vec<Vec3>,
}

impl MovingMesh {
    pub fn from_nodes(topology: Arc<Topology>, nodes: Vec<Vec3>, node_velocities: Vec<Vec3>, time: f64) -> Result<Self> {
        let n_cells = topology.n_cells();
        let mut cell_volumes = Vec::with_capacity(n_cells);
        let mut cell_centroids = Vec::with_capacity(n_cells);
        for c in 0..n_cells {
            let ids = topology.cell_nodes(c);
            let (vol, centroid) = if topology.dim == 1 {
                let (a, b) = (nodes[ids[0]], nodes[ids[1]]);
                (b[0] - a[0], 0.5 * (a + b))
            } else {
                polygon_area_centroid(ids.iter().map(|&k| nodes[k]))
            };
            if !(vol > 0.0) {
                return Err(Error::Geometry { cell: c, time, volume: vol });
            }
            cell_volumes.push(vol);
            cell_centroids.push(centroid);
        }
        let nf = topology.faces.len();
        let mut face_normals = Vec::with_capacity(nf);
        let mut face_areas = Vec::with_capacity(nf);
        let mut face_midpoints = Vec::with_capacity(nf);
        let mut face_velocities = Vec::with_capacity(nf);
        for face in &topology.faces {
            let (an, mid, vel) = face_geometry(&topology, face, &nodes, &node_velocities);
            let area = an.norm();
            face_normals.push(an / area);
            face_areas.push(area);
            face_midpoints.push(mid);
            face_velocities.push(vel);
        }
        Ok(Self {
            topology,
            time,
            nodes,
            node_velocities,
            cell_volumes,
            cell_centroids,
            face_normals,
            face_areas,
            face_midpoints,
            face_velocities,
        })
    }

    pub fn dim(&self) -> usize {
        self.topology.dim
    }

    pub fn n_cells(&self) -> usize {
        self.cell_volumes.len()
    }

    pub fn total_volume(&self) -> f64 {
        self.cell_volumes.iter().sum()
    }

    pub fn area_normal(&self, f: usize) -> Vec3 {
        self.face_normals[f] * self.face_areas[f]
    }

    /// Largest `|sum_f sign n_f A_f|` over cells; zero for closed cells.
    pub fn closed_cell_defect(&self) -> f64 {
        self.topology
            .cell_faces
            .iter()
            .map(|faces| faces.iter().map(|&(f, s)| s * self.area_normal(f)).sum::<Vec3>().norm())
            .fold(0.0, f64::max)
    }

    /// Boundary faces, in face order.
    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        self.topology.faces.iter().enumerate().filter(|(_, f)| f.is_boundary()).map(|(k, _)| k)
    }

    /// Displacement that maps the centroid of a periodic neighbour reached by
    /// wrapping to its unwrapped position.
    pub fn periodic_shift(&self, from: usize, to: usize) -> Vec3 {
        let n1 = self.topology.shape[0];
        let (_, j) = self.topology.cell_coords(from);
        let row = if self.dim() == 1 { 0 } else { (n1 + 1) * j };
        let period = self.nodes[row + n1] - self.nodes[row];
        let (i_from, _) = self.topology.cell_coords(from);
        let (i_to, _) = self.topology.cell_coords(to);
        if i_to < i_from {
            period
        } else {
            -period
        }
    }
}

fn polygon_area_centroid(points: impl Iterator<Item = Vec3>) -> (f64, Vec3) {
    let pts: Vec<Vec3> = points.collect();
    let mut a2 = 0.0;
    let mut c = Vec3::zeros();
    for k in 0..pts.len() {
        let (p, q) = (pts[k], pts[(k + 1) % pts.len()]);
        let cross = p[0] * q[1] - q[0] * p[1];
        a2 += cross;
        c += (p + q) * cross;
    }
    let area = 0.5 * a2;
    (area, c / (6.0 * area))
}

/// Area-weighted normal, midpoint and midpoint velocity of a face.
fn face_geometry(topology: &Topology, face: &Face, nodes: &[Vec3], vel: &[Vec3]) -> (Vec3, Vec3, Vec3) {
    if topology.dim == 1 {
        let k = face.nodes[0];
        (Vec3::new(face.orient, 0.0, 0.0), nodes[k], vel[k])
    } else {
        let (a, b) = (nodes[face.nodes[0]], nodes[face.nodes[1]]);
        let e = b - a;
        (Vec3::new(e[1], -e[0], 0.0), 0.5 * (a + b), 0.5 * (vel[face.nodes[0]] + vel[face.nodes[1]]))
    }
}

/// Signed volume swept by each face between two meshes of the same lattice,
/// positive when the face moves along its normal. The swept volumes of a
/// cell's faces add up exactly to its volume change.
pub fn swept_volumes(from: &MovingMesh, to: &MovingMesh) -> Vec<f64> {
    let topo = &from.topology;
    topo.faces
        .iter()
        .map(|face| {
            if topo.dim == 1 {
                let k = face.nodes[0];
                face.orient * (to.nodes[k][0] - from.nodes[k][0])
            } else {
                let (a, b) = (face.nodes[0], face.nodes[1]);
                let mid_a = 0.5 * (from.nodes[a] + to.nodes[a]);
                let mid_b = 0.5 * (from.nodes[b] + to.nodes[b]);
                let e = mid_b - mid_a;
                let an = Vec3::new(e[1], -e[0], 0.0);
                let disp = 0.5 * ((to.nodes[a] - from.nodes[a]) + (to.nodes[b] - from.nodes[b]));
                an.dot(&disp)
            }
        })
        .collect()
}

/// Mesh of `Omega_t`: reference nodes carried by the flow map, plus jiggle.
pub fn mesh_at(flow: &FlowMap, reference: &MeshReference, t: f64) -> Result<MovingMesh> {
    if t < 0.0 {
        return Err(Error::Precondition(format!("mesh requested at negative time {t}")));
    }
    let dim = reference.dim();
    let mut nodes = Vec::with_capacity(reference.nodes.len());
    let mut velocities = Vec::with_capacity(reference.nodes.len());
    for (x0, logical) in reference.nodes.iter().zip(&reference.logical) {
        let x = flow.evolve_point(0.0, t, x0)?;
        let mut v = flow.motion.velocity(t, &x);
        let mut x = x;
        if let Some(j) = &reference.jiggle {
            x += j.displacement(t, logical, dim);
            v += j.velocity(t, logical, dim);
        }
        nodes.push(x);
        velocities.push(v);
    }
    MovingMesh::from_nodes(reference.topology.clone(), nodes, velocities, t)
}

/// Midpoint-rule integral `sum_i field_i |K_i|`.
pub fn integrate_over_domain(mesh: &MovingMesh, field: &[f64]) -> f64 {
    debug_assert_eq!(field.len(), mesh.n_cells());
    field.iter().zip(&mesh.cell_volumes).map(|(f, v)| f * v).sum()
}

/// Defect of the transport theorem
/// `d/dt int_{Omega_t} f = int_{Omega_t} (df/dt + div(V f))`:
/// the left side by a centered difference of moving midpoint-rule integrals,
/// the right side by the midpoint rule at `t`.
pub fn transport_theorem_defect(flow: &FlowMap, reference: &MeshReference, f: &ScalarField, t: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) || t - dt < 0.0 {
        return Err(Error::Precondition(format!("need 0 < dt <= t, got t = {t}, dt = {dt}")));
    }
    let moving_integral = |s: f64| -> Result<f64> {
        let mesh = mesh_at(flow, reference, s)?;
        let vals: Vec<f64> = mesh.cell_centroids.iter().map(|c| f.eval(s, c)).collect();
        Ok(integrate_over_domain(&mesh, &vals))
    };
    let lhs = (moving_integral(t + dt)? - moving_integral(t - dt)?) / (2.0 * dt);
    let mesh = mesh_at(flow, reference, t)?;
    let dim = mesh.dim();
    let vals: Vec<f64> = mesh
        .cell_centroids
        .iter()
        .map(|c| {
            let v = flow.motion.velocity(t, c);
            f.eval_dt(t, c) + v.dot(&f.eval_grad(t, c)) + f.eval(t, c) * flow.motion.divergence(t, c, dim)
        })
        .collect();
    Ok(lhs - integrate_over_domain(&mesh, &vals))
}
