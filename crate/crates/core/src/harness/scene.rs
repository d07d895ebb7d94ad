use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bbox::BBox2D;
use crate::camera::PinholeCamera;
use crate::error::{Error, Result};
use crate::mesh::TriangleMesh;
use crate::obj::{read_obj, write_obj};
use crate::raster::io::{read_depth, read_mask, read_normals, write_depth, write_mask, write_normals};
use crate::raster::{render_scene, DepthMap, NormalMap, SceneRender};
use crate::solver::InstanceObservation;
use crate::transform::{apply_transform, AnchoredSimilarityTransform};

pub const SCENE_DEPTH_FILE: &str = "depth.dpt";
pub const SCENE_NORMALS_FILE: &str = "normals.nrm";

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    pub label: String,
    /// Relative to the scene file.
    pub mesh_path: String,
    pub mask_path: Option<String>,
    pub mesh: TriangleMesh,
    pub observation: InstanceObservation,
    pub gt_transform: Option<AnchoredSimilarityTransform>,
}

/// A camera, its objects and optionally the scene-wide depth and normal
/// maps used for rotation search.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub camera: PinholeCamera,
    pub objects: Vec<SceneObject>,
    pub depth: Option<DepthMap>,
    pub normals: Option<NormalMap>,
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    camera: PinholeCamera,
    objects: Vec<ObjectEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    normals: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct ObjectEntry {
    id: String,
    label: String,
    mesh: String,
    bbox: [f64; 4],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<String>,
    mean_depth: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gt: Option<AnchoredSimilarityTransform>,
}

impl SceneSpec {
    pub fn object(&self, id: &str) -> Option<&SceneObject> {
        self.objects.iter().find(|o| o.id == id)
    }

    fn to_file(&self) -> SceneFile {
        SceneFile {
            camera: self.camera,
            objects: self
                .objects
                .iter()
                .map(|o| {
                    let b = &o.observation.bbox;
                    ObjectEntry {
                        id: o.id.clone(),
                        label: o.label.clone(),
                        mesh: o.mesh_path.clone(),
                        bbox: [b.x_left, b.y_upper, b.x_right, b.y_lower],
                        mask: o.mask_path.clone(),
                        mean_depth: o.observation.mean_depth,
                        gt: o.gt_transform,
                    }
                })
                .collect(),
            depth: self.depth.as_ref().map(|_| SCENE_DEPTH_FILE.to_string()),
            normals: self.normals.as_ref().map(|_| SCENE_NORMALS_FILE.to_string()),
        }
    }

    /// Composite render of every object under its ground-truth transform.
    pub fn render_ground_truth(&self) -> Result<SceneRender> {
        let placed = self
            .objects
            .iter()
            .map(|o| {
                o.gt_transform
                    .map(|t| apply_transform(&o.mesh, &t))
                    .ok_or_else(|| Error::InvalidConfig(format!("object {} has no ground truth", o.id)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(render_scene(&placed.iter().collect::<Vec<_>>(), &self.camera))
    }

    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())? + "\n")
    }

    /// Writes `scene.json` and every referenced file under `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        for o in &self.objects {
            let mesh_path = dir.join(&o.mesh_path);
            if let Some(parent) = mesh_path.parent() {
                fs::create_dir_all(parent)?;
            }
            write_obj(&mesh_path, &o.mesh)?;
            if let (Some(rel), Some(mask)) = (&o.mask_path, &o.observation.mask) {
                let p = dir.join(rel);
                if let Some(parent) = p.parent() {
                    fs::create_dir_all(parent)?;
                }
                write_mask(&p, mask)?;
            }
        }
        if let Some(d) = &self.depth {
            write_depth(&dir.join(SCENE_DEPTH_FILE), d)?;
        }
        if let Some(n) = &self.normals {
            write_normals(&dir.join(SCENE_NORMALS_FILE), n)?;
        }
        let path = dir.join("scene.json");
        fs::write(&path, self.to_json_string()?)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let file: SceneFile = serde_json::from_str(&text).map_err(|e| Error::Format {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let camera = file.camera;
        let mut seen = BTreeSet::new();
        let mut objects = Vec::with_capacity(file.objects.len());
        for e in file.objects {
            if !seen.insert(e.id.clone()) {
                return Err(Error::InvalidConfig(format!("duplicate object id {:?}", e.id)));
            }
            let [x_left, y_upper, x_right, y_lower] = e.bbox;
            let bbox = BBox2D::new(x_left, x_right, y_upper, y_lower)?;
            let mask = match &e.mask {
                Some(rel) => {
                    let m = read_mask(&base.join(rel))?;
                    crate::raster::check_dims(camera.width, camera.height, m.width(), m.height())?;
                    Some(m)
                }
                None => None,
            };
            objects.push(SceneObject {
                mesh: read_obj(&base.join(&e.mesh))?,
                observation: InstanceObservation::new(bbox, e.mean_depth, mask)?,
                id: e.id,
                label: e.label,
                mesh_path: e.mesh,
                mask_path: e.mask,
                gt_transform: e.gt,
            });
        }
        let depth = file.depth.map(|rel| read_depth(&base.join(rel))).transpose()?;
        let normals = file.normals.map(|rel| read_normals(&base.join(rel))).transpose()?;
        for (w, h) in depth.iter().map(|d| (d.width(), d.height())).chain(normals.iter().map(|n| (n.width(), n.height()))) {
            crate::raster::check_dims(camera.width, camera.height, w, h)?;
        }
        Ok(Self {
            camera,
            objects,
            depth,
            normals,
        })
    }
}
