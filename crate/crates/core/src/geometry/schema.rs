//! On-disk schemas for rooms and scenario manifests.
//!
//! File types are concrete (`f64`) so the JSON layout is independent of the
//! scalar type the math runs on; conversion to and from the generic in-memory
//! types happens at the boundary.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::room::{Absorption, AbsorptionSpec, GeometryError, Room};
use crate::geometry::scenario::Scenario;
use crate::geometry::Vec3;
use crate::num::Sample;

/// JSON form of a room.
///
/// ```json
/// {"kind": "shoebox", "dimensions": [5.0, 4.0, 3.0], "absorption": 0.3}
/// {"kind": "polyhedron", "vertices": [...], "faces": [[0,1,2], ...],
///  "absorption": {"surfaces": [0.1, {"bands": [0.2, 0.3]}, ...]}}
/// ```
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RoomFile {
    Shoebox {
        dimensions: [f64; 3],
        absorption: AbsorptionFile,
    },
    Polyhedron {
        vertices: Vec<[f64; 3]>,
        faces: Vec<Vec<usize>>,
        absorption: AbsorptionFile,
    },
}

/// JSON form of [`AbsorptionSpec`]: the string `"from_rt60"`, a bare
/// coefficient, `{"bands": [...]}`, or `{"surfaces": [...]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AbsorptionFile {
    Mode(String),
    Scalar(f64),
    Banded { bands: Vec<f64> },
    PerSurface { surfaces: Vec<SurfaceAbsorptionFile> },
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum SurfaceAbsorptionFile {
    Scalar(f64),
    Banded { bands: Vec<f64> },
}

impl AbsorptionFile {
    fn to_spec<T: Sample>(&self) -> Result<AbsorptionSpec<T>, GeometryError> {
        match self {
            AbsorptionFile::Mode(mode) if mode == "from_rt60" => Ok(AbsorptionSpec::FromRt60),
            AbsorptionFile::Mode(mode) => Err(GeometryError::BadSpec(format!(
                "unknown absorption mode {mode:?}; expected \"from_rt60\""
            ))),
            AbsorptionFile::Scalar(a) => {
                Ok(AbsorptionSpec::Uniform(Absorption::Scalar(T::of(*a))))
            }
            AbsorptionFile::Banded { bands } => Ok(AbsorptionSpec::Uniform(Absorption::Banded(
                bands.iter().map(|&a| T::of(a)).collect(),
            ))),
            AbsorptionFile::PerSurface { surfaces } => Ok(AbsorptionSpec::PerSurface(
                surfaces
                    .iter()
                    .map(|s| match s {
                        SurfaceAbsorptionFile::Scalar(a) => Absorption::Scalar(T::of(*a)),
                        SurfaceAbsorptionFile::Banded { bands } => {
                            Absorption::Banded(bands.iter().map(|&a| T::of(a)).collect())
                        }
                    })
                    .collect(),
            )),
        }
    }

    fn from_spec<T: Sample>(spec: &AbsorptionSpec<T>) -> Self {
        match spec {
            AbsorptionSpec::FromRt60 => AbsorptionFile::Mode("from_rt60".into()),
            AbsorptionSpec::Uniform(Absorption::Scalar(a)) => AbsorptionFile::Scalar(a.as_f64()),
            AbsorptionSpec::Uniform(Absorption::Banded(b)) => AbsorptionFile::Banded {
                bands: b.iter().map(|a| a.as_f64()).collect(),
            },
            AbsorptionSpec::PerSurface(list) => AbsorptionFile::PerSurface {
                surfaces: list
                    .iter()
                    .map(|a| match a {
                        Absorption::Scalar(a) => SurfaceAbsorptionFile::Scalar(a.as_f64()),
                        Absorption::Banded(b) => SurfaceAbsorptionFile::Banded {
                            bands: b.iter().map(|a| a.as_f64()).collect(),
                        },
                    })
                    .collect(),
            },
        }
    }
}

impl RoomFile {
    pub fn to_room<T: Sample>(&self) -> Result<Room<T>, GeometryError> {
        match self {
            RoomFile::Shoebox {
                dimensions,
                absorption,
            } => Room::shoebox(Vec3::from_f64(*dimensions), absorption.to_spec()?),
            RoomFile::Polyhedron {
                vertices,
                faces,
                absorption,
            } => Room::polyhedron(
                vertices.iter().map(|&v| Vec3::from_f64(v)).collect(),
                faces,
                absorption.to_spec()?,
            ),
        }
    }

    pub fn from_room<T: Sample>(room: &Room<T>) -> Self {
        let absorption = AbsorptionFile::from_spec(room.absorption());
        match room.shoebox_dims() {
            Some(dims) => RoomFile::Shoebox {
                dimensions: dims.to_f64(),
                absorption,
            },
            None => {
                // Re-emit the validated surface polygons as the mesh.
                let mut vertices: Vec<[f64; 3]> = Vec::new();
                let mut faces = Vec::new();
                for s in room.surfaces() {
                    let mut face = Vec::with_capacity(s.vertices.len());
                    for v in &s.vertices {
                        let v = v.to_f64();
                        let idx = vertices
                            .iter()
                            .position(|&u| u == v)
                            .unwrap_or_else(|| {
                                vertices.push(v);
                                vertices.len() - 1
                            });
                        face.push(idx);
                    }
                    faces.push(face);
                }
                RoomFile::Polyhedron {
                    vertices,
                    faces,
                    absorption,
                }
            }
        }
    }
}

/// One line of a scenario manifest (JSONL).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioRecord {
    pub scenario_id: String,
    pub room: RoomFile,
    pub source_pos: [f64; 3],
    pub receiver_pos: [f64; 3],
    pub rt60_target: f64,
    pub seed: u64,
}

impl ScenarioRecord {
    pub fn from_scenario<T: Sample>(sc: &Scenario<T>) -> Self {
        ScenarioRecord {
            scenario_id: sc.id.clone(),
            room: RoomFile::from_room(&sc.room),
            source_pos: sc.source.to_f64(),
            receiver_pos: sc.receiver.to_f64(),
            rt60_target: sc.rt60_target.as_f64(),
            seed: sc.seed,
        }
    }

    pub fn to_scenario<T: Sample>(&self) -> Result<Scenario<T>, GeometryError> {
        Ok(Scenario {
            id: self.scenario_id.clone(),
            room: self.room.to_room()?,
            source: Vec3::from_f64(self.source_pos),
            receiver: Vec3::from_f64(self.receiver_pos),
            rt60_target: T::of(self.rt60_target),
            seed: self.seed,
        })
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("manifest line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Writes scenarios as JSONL, one record per line, in input order.
pub fn write_scenario_manifest<T: Sample, W: Write>(
    scenarios: &[Scenario<T>],
    mut out: W,
) -> Result<(), ManifestError> {
    for sc in scenarios {
        let record = ScenarioRecord::from_scenario(sc);
        serde_json::to_writer(&mut out, &record).map_err(|e| ManifestError::Parse {
            line: 0,
            source: e,
        })?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a JSONL scenario manifest; blank lines are skipped.
pub fn read_scenario_manifest<T: Sample, R: BufRead>(
    input: R,
) -> Result<Vec<Scenario<T>>, ManifestError> {
    let mut scenarios = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ScenarioRecord =
            serde_json::from_str(&line).map_err(|e| ManifestError::Parse {
                line: idx + 1,
                source: e,
            })?;
        scenarios.push(record.to_scenario()?);
    }
    Ok(scenarios)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::room::shoebox_mesh;
    use crate::geometry::scenario::{sample_scenarios, SamplerConfig};

    #[test]
    fn room_file_round_trip_shoebox() {
        let json = r#"{"kind": "shoebox", "dimensions": [5.0, 4.0, 3.0], "absorption": 0.3}"#;
        let file: RoomFile = serde_json::from_str(json).unwrap();
        let room: Room<f64> = file.to_room().unwrap();
        let (s, v) = room.surface_and_volume();
        assert_eq!((s, v), (94.0, 60.0));
        assert_eq!(RoomFile::from_room(&room), file);
    }

    #[test]
    fn room_file_round_trip_polyhedron() {
        let (vertices, faces) = shoebox_mesh(Vec3::new(2.0f64, 2.0, 2.0));
        let file = RoomFile::Polyhedron {
            vertices: vertices.iter().map(|v| v.to_f64()).collect(),
            faces,
            absorption: AbsorptionFile::Banded {
                bands: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6],
            },
        };
        let room: Room<f64> = file.to_room().unwrap();
        let rewritten = RoomFile::from_room(&room);
        let again: Room<f64> = rewritten.to_room().unwrap();
        let (s, v) = again.surface_and_volume();
        assert!((s - 24.0).abs() < 1e-12);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn from_rt60_mode_round_trips() {
        let json = r#"{"kind":"shoebox","dimensions":[4,4,4],"absorption":"from_rt60"}"#;
        let file: RoomFile = serde_json::from_str(json).unwrap();
        let room: Room<f64> = file.to_room().unwrap();
        assert_eq!(room.absorption(), &AbsorptionSpec::FromRt60);
        assert!(matches!(
            serde_json::from_str::<RoomFile>(
                r#"{"kind":"shoebox","dimensions":[4,4,4],"absorption":"mystery"}"#
            )
            .unwrap()
            .to_room::<f64>(),
            Err(GeometryError::BadSpec(_))
        ));
    }

    #[test]
    fn scenario_manifest_round_trips_bit_exactly() {
        let config = SamplerConfig {
            n_rooms: 2,
            placements_per_room: 3,
            seed: 11,
            ..SamplerConfig::default()
        };
        let scenarios: Vec<Scenario<f64>> = sample_scenarios(&config).unwrap();
        let mut buf = Vec::new();
        write_scenario_manifest(&scenarios, &mut buf).unwrap();
        let reread: Vec<Scenario<f64>> = read_scenario_manifest(buf.as_slice()).unwrap();
        assert_eq!(reread.len(), scenarios.len());
        for (a, b) in scenarios.iter().zip(&reread) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.source, b.source);
            assert_eq!(a.receiver, b.receiver);
            assert_eq!(a.rt60_target, b.rt60_target);
            assert_eq!(a.seed, b.seed);
            assert_eq!(
                a.room.shoebox_dims().unwrap(),
                b.room.shoebox_dims().unwrap()
            );
        }
        // Serialization itself is deterministic.
        let mut buf2 = Vec::new();
        write_scenario_manifest(&reread, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }
}
