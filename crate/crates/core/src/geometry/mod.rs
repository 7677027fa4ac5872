//! Room geometry, source/receiver placement, and scenario sampling.

mod room;
mod scenario;
mod schema;
mod vec3;

pub use room::{
    shoebox_mesh, Absorption, AbsorptionSpec, GeometryError, Room, Surface, SHOEBOX_SURFACES,
};
pub use scenario::{
    sample_scenarios, validate_placement, PlacementCheck, PlacementViolation, SamplerConfig,
    Scenario, MIN_SEPARATION, WALL_MARGIN,
};
pub use schema::{
    read_scenario_manifest, write_scenario_manifest, AbsorptionFile, ManifestError, RoomFile,
    ScenarioRecord, SurfaceAbsorptionFile,
};
pub use vec3::Vec3;
