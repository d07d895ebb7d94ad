//! File hand-off to an out-of-process pose service.
//!
//! For each object a directory `<root>/<id>/` receives:
//!
//! * `mesh.obj`: the mesh after the initial scale and translation (camera space)
//! * `target_normals.nrm`, `target_depth.dpt`: the observation
//! * `camera.json`: intrinsics
//!
//! The service answers with `rotation.json`, `{"rotation": [[r00, r01, r02], ...]}`,
//! a row-major rotation about the mesh means. If a command is configured it
//! is run with the object directory as its last argument first; otherwise
//! the answer must already be on disk.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use super::estimate::{PoseRequest, RotationEstimator};
use crate::error::{Error, Result};
use crate::obj::write_obj;
use crate::raster::io::{write_depth, write_normals};
use crate::transform::{apply_transform, rotation_from_rows, validate_rotation};

#[derive(Debug, Serialize, Deserialize)]
struct RotationFile {
    rotation: [[f64; 3]; 3],
}

#[derive(Debug, Clone)]
pub struct ExternalPoseAdapter {
    pub root: PathBuf,
    pub command: Option<Vec<String>>,
}

impl ExternalPoseAdapter {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            command: None,
        }
    }

    pub fn with_command(mut self, command: Vec<String>) -> Self {
        self.command = Some(command);
        self
    }
}

impl RotationEstimator for ExternalPoseAdapter {
    fn estimate(&self, r: &PoseRequest<'_>) -> Result<Matrix3<f64>> {
        let dir = self.root.join(r.id);
        fs::create_dir_all(&dir)?;
        write_obj(&dir.join("mesh.obj"), &apply_transform(r.mesh, r.initial))?;
        write_normals(&dir.join("target_normals.nrm"), r.target_normals)?;
        write_depth(&dir.join("target_depth.dpt"), r.target_depth)?;
        fs::write(dir.join("camera.json"), serde_json::to_vec_pretty(r.camera)?)?;

        if let Some(cmd) = self.command.as_ref().filter(|c| !c.is_empty()) {
            let status = Command::new(&cmd[0]).args(&cmd[1..]).arg(&dir).status()?;
            if !status.success() {
                return Err(Error::External(format!("{} exited with {status}", cmd[0])));
            }
        }
        let path = dir.join("rotation.json");
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::External(format!("{}: {e}", path.display())))?;
        let answer: RotationFile = serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
        let rotation = rotation_from_rows(&answer.rotation);
        validate_rotation(&rotation).map_err(|e| Error::External(e.to_string()))?;
        Ok(rotation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::shapes;
    use crate::pose::axis_angle;
    use crate::raster::render;
    use crate::raster::tests::centered;
    use crate::transform::{rotation_rows, AnchoredSimilarityTransform};
    use nalgebra::Vector3;

    #[test]
    fn round_trip_through_files() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = shapes::cube();
        let cam = centered(100.0, 32);
        let initial = AnchoredSimilarityTransform::new(mesh.means(), Vector3::new(0.0, 0.0, 4.0), 1.0, Matrix3::identity()).unwrap();
        let (d, n) = render(&apply_transform(&mesh, &initial), &cam);
        let req = PoseRequest {
            id: "chair_1",
            mesh: &mesh,
            camera: &cam,
            target_normals: &n,
            target_depth: &d,
            initial: &initial,
        };
        let adapter = ExternalPoseAdapter::new(dir.path());
        // No answer on disk yet.
        assert!(matches!(adapter.estimate(&req), Err(Error::External(_))));
        let obj_dir = dir.path().join("chair_1");
        for f in ["mesh.obj", "target_normals.nrm", "target_depth.dpt", "camera.json"] {
            assert!(obj_dir.join(f).is_file(), "{f}");
        }

        let r = axis_angle(&Vector3::new(0.0, 1.0, 0.0), 0.5);
        let body = serde_json::to_string(&RotationFile { rotation: rotation_rows(&r) }).unwrap();
        fs::write(obj_dir.join("rotation.json"), body).unwrap();
        assert!((adapter.estimate(&req).unwrap() - r).norm() < 1e-12);

        fs::write(obj_dir.join("rotation.json"), r#"{"rotation": [[2,0,0],[0,1,0],[0,0,1]]}"#).unwrap();
        assert!(matches!(adapter.estimate(&req), Err(Error::External(_))));
    }

    #[cfg(unix)]
    #[test]
    fn runs_the_configured_command() {
        let dir = tempfile::tempdir().unwrap();
        let mesh = shapes::cube();
        let cam = centered(100.0, 32);
        let initial = AnchoredSimilarityTransform::new(mesh.means(), Vector3::new(0.0, 0.0, 4.0), 1.0, Matrix3::identity()).unwrap();
        let (d, n) = render(&apply_transform(&mesh, &initial), &cam);
        let req = PoseRequest { id: "a", mesh: &mesh, camera: &cam, target_normals: &n, target_depth: &d, initial: &initial };
        let script = r#"echo '{"rotation": [[1,0,0],[0,1,0],[0,0,1]]}' > "$0/rotation.json""#;
        let adapter = ExternalPoseAdapter::new(dir.path()).with_command(vec!["sh".into(), "-c".into(), script.into()]);
        assert_eq!(adapter.estimate(&req).unwrap(), Matrix3::identity());
    }
}
