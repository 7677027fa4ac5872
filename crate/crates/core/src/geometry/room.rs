use thiserror::Error;

use crate::geometry::Vec3;
use crate::num::Sample;

/// Absorption of one surface: frequency-independent or per-band.
///
/// Banded coefficients are positional; they line up with the band layout of
/// whichever model consumes them (octave bands by default).
#[derive(Clone, Debug, PartialEq)]
pub enum Absorption<T> {
    Scalar(T),
    Banded(Vec<T>),
}

impl<T: Sample> Absorption<T> {
    fn validate(&self) -> Result<(), GeometryError> {
        let check = |a: T| {
            if !a.is_finite() || a < T::zero() || a > T::one() {
                Err(GeometryError::AbsorptionOutOfRange { value: a.as_f64() })
            } else {
                Ok(())
            }
        };
        match self {
            Absorption::Scalar(a) => check(*a),
            Absorption::Banded(bands) => {
                if bands.is_empty() {
                    return Err(GeometryError::EmptyBandList);
                }
                bands.iter().try_for_each(|&a| check(a))
            }
        }
    }
}

/// How a room's surfaces absorb: specified directly, or left to be derived
/// from the scenario's RT60 target at simulation time.
#[derive(Clone, Debug, PartialEq)]
pub enum AbsorptionSpec<T> {
    /// Derive a uniform coefficient from the scenario's RT60 target.
    FromRt60,
    /// The same absorption on every surface.
    Uniform(Absorption<T>),
    /// One entry per surface, in surface index order.
    PerSurface(Vec<Absorption<T>>),
}

impl<T: Sample> AbsorptionSpec<T> {
    fn validate(&self, n_surfaces: usize) -> Result<(), GeometryError> {
        match self {
            AbsorptionSpec::FromRt60 => Ok(()),
            AbsorptionSpec::Uniform(a) => a.validate(),
            AbsorptionSpec::PerSurface(list) => {
                if list.len() != n_surfaces {
                    return Err(GeometryError::AbsorptionArity {
                        expected: n_surfaces,
                        got: list.len(),
                    });
                }
                let mut band_count = None;
                for a in list {
                    a.validate()?;
                    if let Absorption::Banded(b) = a {
                        match band_count {
                            None => band_count = Some(b.len()),
                            Some(n) if n != b.len() => {
                                return Err(GeometryError::BandCountMismatch {
                                    expected: n,
                                    got: b.len(),
                                })
                            }
                            _ => {}
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

/// One planar wall of a room: an outward-oriented plane plus its polygon.
///
/// Interior points satisfy `normal · p < offset`.
#[derive(Clone, Debug)]
pub struct Surface<T> {
    pub normal: Vec3<T>,
    pub offset: T,
    pub area: T,
    pub vertices: Vec<Vec3<T>>,
}

impl<T: Sample> Surface<T> {
    /// Signed distance of `p` from the plane (negative inside the room).
    pub fn signed_distance(&self, p: Vec3<T>) -> T {
        self.normal.dot(p) - self.offset
    }

    /// Mirror image of `p` across the plane.
    pub fn reflect(&self, p: Vec3<T>) -> Vec3<T> {
        p - self.normal * (T::of(2.0) * self.signed_distance(p))
    }

    /// Whether `p`, assumed on the plane, lies within the face polygon.
    ///
    /// Convex faces only: checks `p` against every edge's inward half-plane,
    /// with a small tolerance so rays crossing near an edge still count.
    pub fn polygon_contains(&self, p: Vec3<T>, tol: T) -> bool {
        let n = self.vertices.len();
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            // Edge direction × outward normal points out of the polygon.
            let edge_out = (b - a).cross(self.normal);
            let len = edge_out.norm();
            if len <= T::epsilon() {
                continue;
            }
            if edge_out.dot(p - a) / len > tol {
                return false;
            }
        }
        true
    }
}

/// A room: an axis-aligned shoebox or a closed convex polyhedron, with its
/// surface absorption. Geometric invariants are checked at construction, so
/// a `Room` value is always a valid, watertight, convex volume.
#[derive(Clone, Debug)]
pub struct Room<T> {
    /// `Some(extents)` iff the room is an axis-aligned shoebox at the origin.
    dims: Option<Vec3<T>>,
    surfaces: Vec<Surface<T>>,
    absorption: AbsorptionSpec<T>,
    surface_area: T,
    volume: T,
}

/// Shoebox surface indexing: `x=0, x=Lx, y=0, y=Ly, z=0, z=Lz`.
pub const SHOEBOX_SURFACES: usize = 6;

impl<T: Sample> Room<T> {
    /// Axis-aligned shoebox with one corner at the origin.
    pub fn shoebox(dims: Vec3<T>, absorption: AbsorptionSpec<T>) -> Result<Self, GeometryError> {
        if !dims.is_finite() || dims.x <= T::zero() || dims.y <= T::zero() || dims.z <= T::zero()
        {
            return Err(GeometryError::InvalidDimensions {
                dims: dims.to_f64(),
            });
        }
        let (vertices, faces) = shoebox_mesh(dims);
        let mut room = Self::polyhedron_internal(vertices, &faces, absorption)?;
        room.dims = Some(dims);
        Ok(room)
    }

    /// Closed convex polyhedron. Faces are vertex-index loops; they must tile
    /// the boundary exactly once (watertight) with a consistent winding.
    /// A consistently inward winding is accepted and flipped.
    pub fn polyhedron(
        vertices: Vec<Vec3<T>>,
        faces: &[Vec<usize>],
        absorption: AbsorptionSpec<T>,
    ) -> Result<Self, GeometryError> {
        Self::polyhedron_internal(vertices, faces, absorption)
    }

    fn polyhedron_internal(
        vertices: Vec<Vec3<T>>,
        faces: &[Vec<usize>],
        absorption: AbsorptionSpec<T>,
    ) -> Result<Self, GeometryError> {
        if vertices.len() < 4 || faces.len() < 4 {
            return Err(GeometryError::TooFewElements {
                vertices: vertices.len(),
                faces: faces.len(),
            });
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFiniteVertex);
        }

        let scale = mesh_scale(&vertices);
        let tol = T::epsilon().sqrt() * scale;

        check_watertight(vertices.len(), faces)?;

        let mut signed_volume = T::zero();
        let mut surfaces = Vec::with_capacity(faces.len());
        for (face_idx, face) in faces.iter().enumerate() {
            let poly: Vec<Vec3<T>> = face.iter().map(|&i| vertices[i]).collect();
            let (normal, area) = newell_normal(&poly)
                .ok_or(GeometryError::DegenerateFace { face: face_idx })?;
            let offset = normal.dot(poly[0]);
            for v in &poly {
                if (normal.dot(*v) - offset).abs() > tol {
                    return Err(GeometryError::NonPlanarFace { face: face_idx });
                }
            }
            signed_volume += face_fan_volume(&poly);
            surfaces.push(Surface {
                normal,
                offset,
                area,
                vertices: poly,
            });
        }

        if signed_volume.abs() <= tol * scale * scale {
            return Err(GeometryError::ZeroVolume);
        }
        if signed_volume < T::zero() {
            // Whole mesh is wound inward; watertightness already guaranteed
            // the winding is consistent, so flipping every face fixes it.
            signed_volume = -signed_volume;
            for s in &mut surfaces {
                s.normal = -s.normal;
                s.offset = -s.offset;
                s.vertices.reverse();
            }
        }

        for (face_idx, s) in surfaces.iter().enumerate() {
            for (vert_idx, v) in vertices.iter().enumerate() {
                if s.signed_distance(*v) > tol {
                    return Err(GeometryError::NotConvex {
                        face: face_idx,
                        vertex: vert_idx,
                    });
                }
            }
        }

        absorption.validate(surfaces.len())?;
        let surface_area = surfaces.iter().map(|s| s.area).sum();
        Ok(Room {
            dims: None,
            surfaces,
            absorption,
            surface_area,
            volume: signed_volume,
        })
    }

    /// Shoebox extents, or `None` for a general polyhedron.
    pub fn shoebox_dims(&self) -> Option<Vec3<T>> {
        self.dims
    }

    pub fn surfaces(&self) -> &[Surface<T>] {
        &self.surfaces
    }

    pub fn absorption(&self) -> &AbsorptionSpec<T> {
        &self.absorption
    }

    pub fn set_absorption(&mut self, spec: AbsorptionSpec<T>) -> Result<(), GeometryError> {
        spec.validate(self.surfaces.len())?;
        self.absorption = spec;
        Ok(())
    }

    /// Total interior surface area and volume.
    pub fn surface_and_volume(&self) -> (T, T) {
        (self.surface_area, self.volume)
    }

    /// Whether `p` lies inside the room with at least `margin` clearance
    /// from every surface.
    pub fn contains(&self, p: Vec3<T>, margin: T) -> bool {
        self.surfaces
            .iter()
            .all(|s| s.signed_distance(p) <= -margin)
    }

    /// Axis-aligned bounding box (min corner, max corner).
    pub fn bounding_box(&self) -> (Vec3<T>, Vec3<T>) {
        let mut lo = Vec3::new(T::infinity(), T::infinity(), T::infinity());
        let mut hi = -lo;
        for s in &self.surfaces {
            for v in &s.vertices {
                lo = Vec3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
                hi = Vec3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
            }
        }
        (lo, hi)
    }

    /// A point strictly inside the room (vertex centroid; valid because the
    /// room is convex).
    pub fn interior_point(&self) -> Vec3<T> {
        let mut sum = Vec3::zero();
        let mut count = 0usize;
        for s in &self.surfaces {
            for v in &s.vertices {
                sum = sum + *v;
                count += 1;
            }
        }
        sum / T::of(count as f64)
    }

    /// First surface a ray from `origin` along unit `dir` exits through:
    /// `(distance, surface index)`. `None` only if the ray starts outside or
    /// the direction is degenerate.
    pub fn first_hit(&self, origin: Vec3<T>, dir: Vec3<T>) -> Option<(T, usize)> {
        let eps = T::of(1e-9);
        let mut best: Option<(T, usize)> = None;
        for (idx, s) in self.surfaces.iter().enumerate() {
            let denom = s.normal.dot(dir);
            if denom <= eps {
                continue;
            }
            let t = -s.signed_distance(origin) / denom;
            if t > eps && best.map_or(true, |(bt, _)| t < bt) {
                best = Some((t, idx));
            }
        }
        best
    }
}

/// Vertices and faces of an axis-aligned shoebox, faces ordered
/// `x=0, x=Lx, y=0, y=Ly, z=0, z=Lz` with outward winding.
pub fn shoebox_mesh<T: Sample>(dims: Vec3<T>) -> (Vec<Vec3<T>>, Vec<Vec<usize>>) {
    let (l, w, h) = (dims.x, dims.y, dims.z);
    let z = T::zero();
    let vertices = vec![
        Vec3::new(z, z, z),
        Vec3::new(l, z, z),
        Vec3::new(l, w, z),
        Vec3::new(z, w, z),
        Vec3::new(z, z, h),
        Vec3::new(l, z, h),
        Vec3::new(l, w, h),
        Vec3::new(z, w, h),
    ];
    let faces = vec![
        vec![0, 4, 7, 3],
        vec![1, 2, 6, 5],
        vec![0, 1, 5, 4],
        vec![3, 7, 6, 2],
        vec![0, 3, 2, 1],
        vec![4, 5, 6, 7],
    ];
    (vertices, faces)
}

fn mesh_scale<T: Sample>(vertices: &[Vec3<T>]) -> T {
    vertices
        .iter()
        .map(|v| v.x.abs().max(v.y.abs()).max(v.z.abs()))
        .fold(T::one(), T::max)
}

/// Each directed edge must appear exactly once, and so must its reverse:
/// that is watertightness plus consistent winding in one check.
fn check_watertight(n_vertices: usize, faces: &[Vec<usize>]) -> Result<(), GeometryError> {
    use std::collections::HashMap;
    let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
    for (face_idx, face) in faces.iter().enumerate() {
        if face.len() < 3 {
            return Err(GeometryError::DegenerateFace { face: face_idx });
        }
        for i in 0..face.len() {
            let a = face[i];
            let b = face[(i + 1) % face.len()];
            if a >= n_vertices || b >= n_vertices {
                return Err(GeometryError::FaceIndexOutOfRange { face: face_idx });
            }
            if a == b {
                return Err(GeometryError::DegenerateFace { face: face_idx });
            }
            if edges.insert((a, b), face_idx).is_some() {
                return Err(GeometryError::NotWatertight { edge: (a, b) });
            }
        }
    }
    for &(a, b) in edges.keys() {
        if !edges.contains_key(&(b, a)) {
            return Err(GeometryError::NotWatertight { edge: (a, b) });
        }
    }
    Ok(())
}

/// Unit normal (right-hand rule of the winding) and area of a planar polygon.
fn newell_normal<T: Sample>(poly: &[Vec3<T>]) -> Option<(Vec3<T>, T)> {
    let mut n = Vec3::zero();
    for i in 0..poly.len() {
        n = n + poly[i].cross(poly[(i + 1) % poly.len()]);
    }
    let two_area = n.norm();
    let half = T::of(0.5);
    n.normalized().map(|unit| (unit, two_area * half))
}

/// Signed volume contribution of one face, by fan triangulation from the
/// origin (divergence theorem; positive for outward winding).
fn face_fan_volume<T: Sample>(poly: &[Vec3<T>]) -> T {
    let sixth = T::of(1.0 / 6.0);
    let mut v = T::zero();
    for i in 1..poly.len() - 1 {
        v += poly[0].dot(poly[i].cross(poly[i + 1]));
    }
    v * sixth
}

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("shoebox dimensions must be finite and positive, got {dims:?}")]
    InvalidDimensions { dims: [f64; 3] },
    #[error("polyhedron needs at least 4 vertices and 4 faces, got {vertices} and {faces}")]
    TooFewElements { vertices: usize, faces: usize },
    #[error("polyhedron has a non-finite vertex")]
    NonFiniteVertex,
    #[error("face {face} references a vertex index out of range")]
    FaceIndexOutOfRange { face: usize },
    #[error("face {face} is degenerate (fewer than 3 distinct vertices or repeated edge endpoints)")]
    DegenerateFace { face: usize },
    #[error("mesh is not watertight with consistent winding at edge {edge:?}")]
    NotWatertight { edge: (usize, usize) },
    #[error("face {face} is not planar")]
    NonPlanarFace { face: usize },
    #[error("mesh encloses no volume")]
    ZeroVolume,
    #[error("polyhedron is not convex: vertex {vertex} lies outside the plane of face {face}")]
    NotConvex { face: usize, vertex: usize },
    #[error("absorption coefficient {value} is outside [0, 1]")]
    AbsorptionOutOfRange { value: f64 },
    #[error("per-surface absorption needs {expected} entries, got {got}")]
    AbsorptionArity { expected: usize, got: usize },
    #[error("banded absorption lists must agree in length (expected {expected}, got {got})")]
    BandCountMismatch { expected: usize, got: usize },
    #[error("banded absorption list is empty")]
    EmptyBandList,
    #[error(
        "no valid placement after {attempts} attempts in room {room_index} \
         (dims {dims:?}); constraints too tight"
    )]
    PlacementExhausted {
        room_index: usize,
        attempts: usize,
        dims: [f64; 3],
    },
    #[error("placement height range [{lo}, {hi}] does not fit inside the room")]
    HeightRangeInfeasible { lo: f64, hi: f64 },
    #[error("invalid sampling range [{lo}, {hi}] for {what}")]
    BadRange { what: &'static str, lo: f64, hi: f64 },
    #[error("sampler config: {0}")]
    BadConfig(String),
    #[error("room file: {0}")]
    BadSpec(String),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(a: f64) -> AbsorptionSpec<f64> {
        AbsorptionSpec::Uniform(Absorption::Scalar(a))
    }

    #[test]
    fn shoebox_surface_and_volume() {
        let room = Room::shoebox(Vec3::new(5.0, 4.0, 3.0), uniform(0.3)).unwrap();
        let (s, v) = room.surface_and_volume();
        assert!((s - 94.0).abs() < 1e-12);
        assert!((v - 60.0).abs() < 1e-12);
    }

    #[test]
    fn unit_cube_as_polyhedron() {
        let (vertices, faces) = shoebox_mesh(Vec3::new(1.0f64, 1.0, 1.0));
        let room = Room::polyhedron(vertices, &faces, uniform(0.5)).unwrap();
        let (s, v) = room.surface_and_volume();
        assert!((s - 6.0).abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
        assert!(room.shoebox_dims().is_none());
    }

    #[test]
    fn regular_tetrahedron_area_and_volume() {
        let s3 = 3.0f64.sqrt();
        let s6 = 6.0f64.sqrt();
        let vertices = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.5, s3 / 2.0, 0.0),
            Vec3::new(0.5, s3 / 6.0, s6 / 3.0),
        ];
        let faces = vec![vec![0, 2, 1], vec![0, 1, 3], vec![1, 2, 3], vec![2, 0, 3]];
        let room = Room::polyhedron(vertices, &faces, uniform(0.2)).unwrap();
        let (s, v) = room.surface_and_volume();
        assert!((s - s3).abs() < 1e-12, "area {s}");
        assert!((v - 1.0 / (6.0 * 2.0f64.sqrt())).abs() < 1e-12, "volume {v}");
    }

    #[test]
    fn inward_winding_is_fixed_up() {
        let (vertices, faces) = shoebox_mesh(Vec3::new(2.0f64, 3.0, 4.0));
        let flipped: Vec<Vec<usize>> = faces
            .iter()
            .map(|f| f.iter().rev().copied().collect())
            .collect();
        let room = Room::polyhedron(vertices, &flipped, uniform(0.1)).unwrap();
        let (_, v) = room.surface_and_volume();
        assert!((v - 24.0).abs() < 1e-9);
        assert!(room.contains(Vec3::new(1.0, 1.5, 2.0), 0.5));
    }

    #[test]
    fn open_mesh_is_rejected() {
        let (vertices, mut faces) = shoebox_mesh(Vec3::new(1.0f64, 1.0, 1.0));
        faces.pop();
        let err = Room::polyhedron(vertices, &faces, uniform(0.1)).unwrap_err();
        assert!(matches!(err, GeometryError::NotWatertight { .. }));
    }

    #[test]
    fn non_convex_mesh_is_rejected() {
        // An L-shaped prism: valid closed mesh, but not convex.
        let vertices = vec![
            Vec3::new(0.0f64, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(2.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(1.0, 2.0, 0.0),
            Vec3::new(0.0, 2.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(2.0, 0.0, 1.0),
            Vec3::new(2.0, 1.0, 1.0),
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(1.0, 2.0, 1.0),
            Vec3::new(0.0, 2.0, 1.0),
        ];
        let faces = vec![
            vec![0, 5, 4, 3, 2, 1],
            vec![6, 7, 8, 9, 10, 11],
            vec![0, 1, 7, 6],
            vec![1, 2, 8, 7],
            vec![2, 3, 9, 8],
            vec![3, 4, 10, 9],
            vec![4, 5, 11, 10],
            vec![5, 0, 6, 11],
        ];
        let err = Room::polyhedron(vertices, &faces, uniform(0.1)).unwrap_err();
        assert!(matches!(err, GeometryError::NotConvex { .. }));
    }

    #[test]
    fn absorption_validation() {
        let dims = Vec3::new(5.0f64, 4.0, 3.0);
        assert!(Room::shoebox(dims, uniform(1.5)).is_err());
        assert!(Room::shoebox(dims, uniform(-0.1)).is_err());
        let wrong_arity =
            AbsorptionSpec::PerSurface(vec![Absorption::Scalar(0.1); 5]);
        assert!(Room::shoebox(dims, wrong_arity).is_err());
        let six = AbsorptionSpec::PerSurface(vec![Absorption::Scalar(0.1); 6]);
        assert!(Room::shoebox(dims, six).is_ok());
    }

    #[test]
    fn contains_respects_margin() {
        let room = Room::shoebox(Vec3::new(5.0f64, 4.0, 3.0), uniform(0.3)).unwrap();
        assert!(room.contains(Vec3::new(1.0, 1.0, 1.0), 0.05));
        assert!(!room.contains(Vec3::new(0.0, 1.0, 1.0), 0.05));
        assert!(!room.contains(Vec3::new(4.97, 1.0, 1.0), 0.05));
        assert!(!room.contains(Vec3::new(-1.0, 1.0, 1.0), 0.05));
    }

    #[test]
    fn first_hit_finds_the_exit_wall() {
        let room = Room::shoebox(Vec3::new(5.0f64, 4.0, 3.0), uniform(0.3)).unwrap();
        let (t, idx) = room
            .first_hit(Vec3::new(1.0, 2.0, 1.5), Vec3::new(1.0, 0.0, 0.0))
            .unwrap();
        assert!((t - 4.0).abs() < 1e-12);
        assert_eq!(idx, 1); // x = Lx wall
        let (t, idx) = room
            .first_hit(Vec3::new(1.0, 2.0, 1.5), Vec3::new(0.0, 0.0, -1.0))
            .unwrap();
        assert!((t - 1.5).abs() < 1e-12);
        assert_eq!(idx, 4); // floor
    }

    #[test]
    fn reflect_mirrors_across_surface() {
        let room = Room::shoebox(Vec3::new(5.0f64, 4.0, 3.0), uniform(0.3)).unwrap();
        let img = room.surfaces()[0].reflect(Vec3::new(1.0, 2.0, 1.5));
        assert_eq!(img, Vec3::new(-1.0, 2.0, 1.5));
        let img = room.surfaces()[1].reflect(Vec3::new(1.0, 2.0, 1.5));
        assert_eq!(img, Vec3::new(9.0, 2.0, 1.5));
    }
}
