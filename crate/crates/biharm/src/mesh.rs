//! Conforming triangle meshes with longest-edge bisection refinement.
//!
//! Meshes are immutable snapshots: [`refine`] returns a new mesh and keeps
//! the input vertex coordinates as a prefix of the output vertex list. The
//! edge table is a derived structure rebuilt after construction rather than
//! patched incrementally.

use crate::scalar::{lit, Real};
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {tri} references vertex {vertex} out of range ({nv} vertices)")]
    VertexOutOfRange { tri: usize, vertex: usize, nv: usize },
    #[error("triangle {0} has non-positive signed area")]
    DegenerateTriangle(usize),
    #[error("marked triangle index {0} out of range")]
    MarkOutOfRange(usize),
    #[error("refinement requires a conforming mesh")]
    NonConforming,
    #[error("mesh file parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Undirected mesh edge together with its incident triangles.
#[derive(Debug, Clone)]
pub struct Edge {
    /// Endpoint vertex indices, smaller first.
    pub vertices: [usize; 2],
    /// Incident triangle indices: 1 entry on the boundary, 2 in the interior
    /// of a conforming mesh.
    pub tris: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.tris.len() == 1
    }
}

/// Conforming triangle mesh of a 2-D polygon.
#[derive(Debug, Clone)]
pub struct TriMesh<T> {
    /// Vertex coordinates.
    pub vertices: Vec<[T; 2]>,
    /// Vertex index triples, counterclockwise.
    pub triangles: Vec<[usize; 3]>,
    /// Refinement depth per triangle (0 on an initial mesh).
    pub generation: Vec<u32>,
    /// Derived edge table.
    pub edges: Vec<Edge>,
    /// Edge indices per triangle; entry `k` is the edge opposite vertex `k`.
    pub tri_edges: Vec<[usize; 3]>,
    /// True for vertices lying on a boundary edge.
    pub boundary_vertex: Vec<bool>,
}

/// Report produced by [`topology_check`].
#[derive(Debug, Clone)]
pub struct QualityReport<T> {
    pub conforming: bool,
    /// Smallest interior angle over all triangles, in degrees.
    pub min_angle_deg: T,
    /// Smallest and largest triangle diameter.
    pub h_min: T,
    pub h_max: T,
    /// Shape-regularity constant: max over T of max(h_T^2/|T|, |T|/h_T^2).
    pub c0: T,
    /// Edges with more than two incident triangles.
    pub overfull_edges: usize,
    /// Vertices lying strictly inside another triangle's edge.
    pub hanging_vertices: usize,
}

impl<T: Real> TriMesh<T> {
    /// Builds a mesh from raw vertices and triangles, deriving the edge
    /// table and boundary flags. Rejects degenerate or out-of-range
    /// triangles but tolerates non-conforming input so that
    /// [`topology_check`] can audit it.
    pub fn from_parts(vertices: Vec<[T; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        Self::from_parts_with_generation(vertices, triangles, None)
    }

    fn from_parts_with_generation(
        vertices: Vec<[T; 2]>,
        triangles: Vec<[usize; 3]>,
        generation: Option<Vec<u32>>,
    ) -> Result<Self, MeshError> {
        let nv = vertices.len();
        for (i, t) in triangles.iter().enumerate() {
            for &v in t {
                if v >= nv {
                    return Err(MeshError::VertexOutOfRange { tri: i, vertex: v, nv });
                }
            }
            if signed_area(&vertices, *t) <= T::zero() {
                return Err(MeshError::DegenerateTriangle(i));
            }
        }
        let generation = generation.unwrap_or_else(|| vec![0; triangles.len()]);
        debug_assert_eq!(generation.len(), triangles.len());

        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut tri_edges = vec![[usize::MAX; 3]; triangles.len()];
        for (i, t) in triangles.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (t[(k + 1) % 3], t[(k + 2) % 3]);
                let key = if a < b { (a, b) } else { (b, a) };
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push(Edge { vertices: [key.0, key.1], tris: Vec::new() });
                    edges.len() - 1
                });
                edges[e].tris.push(i);
                tri_edges[i][k] = e;
            }
        }
        let mut boundary_vertex = vec![false; nv];
        for e in &edges {
            if e.is_boundary() {
                boundary_vertex[e.vertices[0]] = true;
                boundary_vertex[e.vertices[1]] = true;
            }
        }
        Ok(TriMesh { vertices, triangles, generation, edges, tri_edges, boundary_vertex })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_coords(&self, t: usize) -> [[T; 2]; 3] {
        let tri = self.triangles[t];
        [self.vertices[tri[0]], self.vertices[tri[1]], self.vertices[tri[2]]]
    }

    pub fn area(&self, t: usize) -> T {
        signed_area(&self.vertices, self.triangles[t])
    }

    /// Triangle diameter `h_T` (longest edge).
    pub fn h_t(&self, t: usize) -> T {
        crate::quadrature::tri_diameter(self.triangle_coords(t))
    }

    pub fn edge_length(&self, e: usize) -> T {
        let [a, b] = self.edges[e].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    /// Smallest edge length in the mesh.
    pub fn min_edge_length(&self) -> T {
        (0..self.edges.len())
            .map(|e| self.edge_length(e))
            .fold(T::infinity(), T::min)
    }

    /// Refinement edge of a triangle: the longest edge, ties broken by the
    /// smallest opposite-vertex index.
    pub fn refinement_edge(&self, t: usize) -> usize {
        let tri = self.triangles[t];
        let mut best_slot = 0usize;
        let mut best_len = T::neg_infinity();
        for k in 0..3 {
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let l = dist2(self.vertices[a], self.vertices[b]);
            // exact length ties broken by the smaller opposite-vertex index
            if l > best_len || (l == best_len && tri[k] < tri[best_slot]) {
                best_len = l;
                best_slot = k;
            }
        }
        self.tri_edges[t][best_slot]
    }
}

fn signed_area<T: Real>(v: &[[T; 2]], t: [usize; 3]) -> T {
    let (p0, p1, p2) = (v[t[0]], v[t[1]], v[t[2]]);
    ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p1[1] - p0[1]) * (p2[0] - p0[0])) * lit(0.5)
}

fn dist2<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

fn dist<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    dist2(a, b).sqrt()
}

/// The unit square meshed as a 2x2 grid of squares, each split along the
/// diagonal through the center vertex: 9 vertices, 8 isosceles right
/// triangles, invariant under the symmetry group of the square.
pub fn unit_square_initial<T: Real>() -> TriMesh<T> {
    let h = lit::<T>(0.5);
    let o = T::zero();
    let i = T::one();
    let vertices = vec![
        [o, o], [h, o], [i, o],
        [o, h], [h, h], [i, h],
        [o, i], [h, i], [i, i],
    ];
    let triangles = vec![
        [0, 1, 4], [0, 4, 3],
        [1, 2, 4], [2, 5, 4],
        [3, 4, 6], [4, 7, 6],
        [4, 5, 8], [4, 8, 7],
    ];
    TriMesh::from_parts(vertices, triangles).expect("initial mesh is valid")
}

/// Bisects every marked triangle through the midpoint of its longest edge
/// and restores conformity by recursive neighbor bisection along
/// longest-edge propagation paths.
pub fn refine<T: Real>(mesh: &TriMesh<T>, marked: &[usize]) -> Result<TriMesh<T>, MeshError> {
    for &m in marked {
        if m >= mesh.n_triangles() {
            return Err(MeshError::MarkOutOfRange(m));
        }
    }
    let report = topology_check(mesh);
    if !report.conforming {
        return Err(MeshError::NonConforming);
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }

    let mut work = Working::from_mesh(mesh);
    for &m in marked {
        work.ensure_bisected(m);
    }
    work.into_mesh()
}

/// Marks every triangle twice so that each element of the input is split
/// into four similar children; one call halves the mesh size.
pub fn uniform_refine<T: Real>(mesh: &TriMesh<T>) -> Result<TriMesh<T>, MeshError> {
    let once = refine(mesh, &(0..mesh.n_triangles()).collect::<Vec<_>>())?;
    refine(&once, &(0..once.n_triangles()).collect::<Vec<_>>())
}

/// Mutable triangle soup used while a refinement pass is in flight.
struct Working<T> {
    vertices: Vec<[T; 2]>,
    tris: Vec<[usize; 3]>,
    gen: Vec<u32>,
    alive: Vec<bool>,
    edge_tris: HashMap<(usize, usize), Vec<usize>>,
    midpoint: HashMap<(usize, usize), usize>,
}

impl<T: Real> Working<T> {
    fn from_mesh(mesh: &TriMesh<T>) -> Self {
        let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, t) in mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                edge_tris.entry(ekey(t[(k + 1) % 3], t[(k + 2) % 3])).or_default().push(i);
            }
        }
        Working {
            vertices: mesh.vertices.clone(),
            tris: mesh.triangles.clone(),
            gen: mesh.generation.clone(),
            alive: vec![true; mesh.triangles.len()],
            edge_tris,
            midpoint: HashMap::new(),
        }
    }

    fn refinement_edge(&self, t: usize) -> (usize, usize) {
        let tri = self.tris[t];
        let mut best = (usize::MAX, usize::MAX);
        let mut best_len = T::neg_infinity();
        let mut best_opp = usize::MAX;
        for k in 0..3 {
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let l = dist2(self.vertices[a], self.vertices[b]);
            if l > best_len || (l == best_len && tri[k] < best_opp) {
                best_len = l;
                best = ekey(a, b);
                best_opp = tri[k];
            }
        }
        best
    }

    fn midpoint_of(&mut self, e: (usize, usize)) -> usize {
        if let Some(&m) = self.midpoint.get(&e) {
            return m;
        }
        let half = lit::<T>(0.5);
        let (a, b) = (self.vertices[e.0], self.vertices[e.1]);
        self.vertices.push([(a[0] + b[0]) * half, (a[1] + b[1]) * half]);
        let m = self.vertices.len() - 1;
        self.midpoint.insert(e, m);
        m
    }

    /// Splits `t` at edge `e`; the caller guarantees that either `e` is a
    /// boundary edge or the neighbor across `e` is split in the same step.
    fn bisect(&mut self, t: usize, e: (usize, usize)) {
        let tri = self.tris[t];
        let c_slot = (0..3)
            .find(|&k| ekey(tri[(k + 1) % 3], tri[(k + 2) % 3]) == e)
            .expect("refinement edge belongs to triangle");
        let c = tri[c_slot];
        let a = tri[(c_slot + 1) % 3];
        let b = tri[(c_slot + 2) % 3]; // (a, b) is edge e in CCW order
        let m = self.midpoint_of(e);

        self.alive[t] = false;
        for k in 0..3 {
            let key = ekey(tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let list = self.edge_tris.get_mut(&key).expect("edge registered");
            list.retain(|&x| x != t);
        }
        let g = self.gen[t] + 1;
        for child in [[a, m, c], [m, b, c]] {
            self.tris.push(child);
            self.gen.push(g);
            self.alive.push(true);
            let id = self.tris.len() - 1;
            for k in 0..3 {
                self.edge_tris.entry(ekey(child[(k + 1) % 3], child[(k + 2) % 3])).or_default().push(id);
            }
        }
    }

    fn neighbor_across(&self, t: usize, e: (usize, usize)) -> Option<usize> {
        self.edge_tris.get(&e).and_then(|l| l.iter().copied().find(|&x| x != t))
    }

    /// Walks the longest-edge propagation path from `t` and bisects
    /// compatible terminal pairs until `t` itself has been split.
    fn ensure_bisected(&mut self, t: usize) {
        while self.alive[t] {
            let mut cur = t;
            loop {
                let e = self.refinement_edge(cur);
                match self.neighbor_across(cur, e) {
                    None => {
                        // boundary edge: split alone
                        self.bisect(cur, e);
                        break;
                    }
                    Some(n) if self.refinement_edge(n) == e => {
                        self.bisect(cur, e);
                        self.bisect(n, e);
                        break;
                    }
                    Some(n) => cur = n,
                }
            }
        }
    }

    fn into_mesh(self) -> Result<TriMesh<T>, MeshError> {
        let mut triangles = Vec::new();
        let mut generation = Vec::new();
        for (i, t) in self.tris.into_iter().enumerate() {
            if self.alive[i] {
                triangles.push(t);
                generation.push(self.gen[i]);
            }
        }
        TriMesh::from_parts_with_generation(self.vertices, triangles, Some(generation))
    }
}

fn ekey(a: usize, b: usize) -> (usize, usize) {
    if a < b { (a, b) } else { (b, a) }
}

/// Audits adjacency and element quality.
///
/// The mesh is non-conforming iff some edge has more than two incident
/// triangles or some vertex lies strictly inside another triangle's edge.
pub fn topology_check<T: Real>(mesh: &TriMesh<T>) -> QualityReport<T> {
    let mut overfull = 0usize;
    for e in &mesh.edges {
        if e.tris.len() > 2 {
            overfull += 1;
        }
    }
    let hanging = count_hanging_vertices(mesh);

    let mut min_angle = T::infinity();
    let mut h_min = T::infinity();
    let mut h_max = T::zero();
    let mut c0 = T::zero();
    for t in 0..mesh.n_triangles() {
        let p = mesh.triangle_coords(t);
        let h = crate::quadrature::tri_diameter(p);
        h_min = h_min.min(h);
        h_max = h_max.max(h);
        let area = mesh.area(t);
        c0 = c0.max((h * h / area).max(area / (h * h)));
        for k in 0..3 {
            min_angle = min_angle.min(corner_angle(p[k], p[(k + 1) % 3], p[(k + 2) % 3]));
        }
    }
    QualityReport {
        conforming: overfull == 0 && hanging == 0,
        min_angle_deg: min_angle * lit::<T>(180.0 / std::f64::consts::PI),
        h_min,
        h_max,
        c0,
        overfull_edges: overfull,
        hanging_vertices: hanging,
    }
}

/// A hanging vertex lies strictly inside an edge held by only one triangle.
/// Candidate edges are the single-incidence ones; vertices are pre-sorted by
/// x so each edge only scans its own x-range.
fn count_hanging_vertices<T: Real>(mesh: &TriMesh<T>) -> usize {
    let mut by_x: Vec<usize> = (0..mesh.n_vertices()).collect();
    by_x.sort_by(|&i, &j| {
        mesh.vertices[i][0].partial_cmp(&mesh.vertices[j][0]).unwrap().then(i.cmp(&j))
    });
    let xs: Vec<T> = by_x.iter().map(|&i| mesh.vertices[i][0]).collect();

    let tol = lit::<T>(1e-12);
    let mut hanging = std::collections::HashSet::new();
    for e in &mesh.edges {
        if e.tris.len() != 1 {
            continue;
        }
        let (pa, pb) = (mesh.vertices[e.vertices[0]], mesh.vertices[e.vertices[1]]);
        let (lo, hi) = (pa[0].min(pb[0]) - tol, pa[0].max(pb[0]) + tol);
        let start = xs.partition_point(|&x| x < lo);
        for idx in start..xs.len() {
            if xs[idx] > hi {
                break;
            }
            let v = by_x[idx];
            if v == e.vertices[0] || v == e.vertices[1] {
                continue;
            }
            let pv = mesh.vertices[v];
            let ab = [pb[0] - pa[0], pb[1] - pa[1]];
            let av = [pv[0] - pa[0], pv[1] - pa[1]];
            let cross = ab[0] * av[1] - ab[1] * av[0];
            let len2 = ab[0] * ab[0] + ab[1] * ab[1];
            if cross.abs() > tol * len2.sqrt().max(T::one()) {
                continue;
            }
            let dot = av[0] * ab[0] + av[1] * ab[1];
            if dot > tol && dot < len2 - tol {
                hanging.insert(v);
            }
        }
    }
    hanging.len()
}

fn corner_angle<T: Real>(at: [T; 2], p: [T; 2], q: [T; 2]) -> T {
    let u = [p[0] - at[0], p[1] - at[1]];
    let v = [q[0] - at[0], q[1] - at[1]];
    let dot = u[0] * v[0] + u[1] * v[1];
    let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
    let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
    (dot / (nu * nv)).min(T::one()).max(-T::one()).acos()
}

/// Writes the plain-text mesh format: vertex count, one `x y` line per
/// vertex, triangle count, one `i j k` line per triangle (0-based).
pub fn write_mesh_text<T: Real>(mesh: &TriMesh<T>, path: &Path) -> Result<(), MeshError> {
    let mut out = String::new();
    writeln!(out, "{}", mesh.n_vertices()).unwrap();
    for v in &mesh.vertices {
        writeln!(out, "{:.17e} {:.17e}", v[0], v[1]).unwrap();
    }
    writeln!(out, "{}", mesh.n_triangles()).unwrap();
    for t in &mesh.triangles {
        writeln!(out, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Reads the plain-text mesh format written by [`write_mesh_text`].
pub fn read_mesh_text<T: Real>(path: &Path) -> Result<TriMesh<T>, MeshError> {
    let body = std::fs::read_to_string(path)?;
    let mut tokens = body.split_whitespace();
    let mut next = |what: &str| -> Result<String, MeshError> {
        tokens.next().map(str::to_owned).ok_or_else(|| MeshError::Parse(format!("missing {what}")))
    };
    let nv: usize = next("vertex count")?
        .parse()
        .map_err(|e| MeshError::Parse(format!("vertex count: {e}")))?;
    let mut vertices = Vec::with_capacity(nv);
    for i in 0..nv {
        let x: f64 = next("x")?.parse().map_err(|e| MeshError::Parse(format!("vertex {i} x: {e}")))?;
        let y: f64 = next("y")?.parse().map_err(|e| MeshError::Parse(format!("vertex {i} y: {e}")))?;
        vertices.push([lit::<T>(x), lit::<T>(y)]);
    }
    let nt: usize = next("triangle count")?
        .parse()
        .map_err(|e| MeshError::Parse(format!("triangle count: {e}")))?;
    let mut triangles = Vec::with_capacity(nt);
    for i in 0..nt {
        let mut t = [0usize; 3];
        for slot in &mut t {
            *slot = next("index")?
                .parse()
                .map_err(|e| MeshError::Parse(format!("triangle {i}: {e}")))?;
        }
        triangles.push(t);
    }
    TriMesh::from_parts(vertices, triangles)
}
