use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pose keypoints in scope: ids 0..=24 (face, shoulders, arms, hands, hips).
pub const NUM_LANDMARKS: usize = 25;

/// One keypoint in normalized image coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Landmark {
    pub id: u8,
    pub x: f64,
    pub y: f64,
    pub visibility: f64,
}

/// Up to 25 keypoints with unique ids; coordinates clamped to [0, 1].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LandmarkSet {
    points: Vec<Landmark>,
}

fn clamp01(v: f64) -> f64 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

impl LandmarkSet {
    pub fn new(points: impl IntoIterator<Item = Landmark>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for p in points {
            if p.id as usize >= NUM_LANDMARKS {
                return Err(Error::contract(format!("landmark id {} outside 0..=24", p.id)));
            }
            if !seen.insert(p.id) {
                return Err(Error::contract(format!("duplicate landmark id {}", p.id)));
            }
            out.push(Landmark {
                id: p.id,
                x: clamp01(p.x),
                y: clamp01(p.y),
                visibility: clamp01(p.visibility),
            });
        }
        Ok(LandmarkSet { points: out })
    }

    /// Fully visible points from `(x, y)` pairs indexed by landmark id.
    pub fn from_coords(coords: &[(f64, f64)]) -> Result<Self> {
        LandmarkSet::new(coords.iter().enumerate().map(|(i, &(x, y))| Landmark {
            id: i as u8,
            x,
            y,
            visibility: 1.0,
        }))
    }

    pub fn points(&self) -> &[Landmark] {
        &self.points
    }

    pub fn get(&self, id: u8) -> Option<&Landmark> {
        self.points.iter().find(|p| p.id == id)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LandmarkRecord {
    id: i64,
    x: f64,
    y: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    visibility: Option<f64>,
}

/// On-disk landmark document. Unknown keys (including `z`) are ignored.
#[derive(Debug, Serialize, Deserialize)]
pub struct LandmarkDocument {
    pub width: u32,
    pub height: u32,
    landmarks: Vec<LandmarkRecord>,
}

impl LandmarkDocument {
    pub fn new(width: u32, height: u32, set: &LandmarkSet) -> Self {
        LandmarkDocument {
            width,
            height,
            landmarks: set
                .points()
                .iter()
                .map(|p| LandmarkRecord {
                    id: p.id as i64,
                    x: p.x,
                    y: p.y,
                    visibility: Some(p.visibility),
                })
                .collect(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("landmark document serializes")
    }

    pub fn landmark_set(&self) -> Result<LandmarkSet> {
        if self.landmarks.len() > NUM_LANDMARKS {
            return Err(Error::contract(format!(
                "{} landmarks given, at most {NUM_LANDMARKS} allowed",
                self.landmarks.len()
            )));
        }
        let mut points = Vec::with_capacity(self.landmarks.len());
        for r in &self.landmarks {
            if !(0..NUM_LANDMARKS as i64).contains(&r.id) {
                return Err(Error::contract(format!("landmark id {} outside 0..=24", r.id)));
            }
            points.push(Landmark {
                id: r.id as u8,
                x: r.x,
                y: r.y,
                visibility: r.visibility.unwrap_or(1.0),
            });
        }
        LandmarkSet::new(points)
    }
}

/// Undirected bone list over landmark ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoneTopology {
    edges: Vec<(u8, u8)>,
}

const UPPER_BODY_EDGES: [(u8, u8); 23] = [
    // face
    (0, 1),
    (1, 2),
    (2, 3),
    (3, 7),
    (0, 4),
    (4, 5),
    (5, 6),
    (6, 8),
    (9, 10),
    // shoulders and arms
    (11, 12),
    (11, 13),
    (13, 15),
    (12, 14),
    (14, 16),
    // hands
    (15, 17),
    (15, 19),
    (15, 21),
    (16, 18),
    (16, 20),
    (16, 22),
    // torso and hips
    (11, 23),
    (12, 24),
    (23, 24),
];

impl BoneTopology {
    pub fn new(edges: impl IntoIterator<Item = (u8, u8)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (a, b) in edges {
            if a as usize >= NUM_LANDMARKS || b as usize >= NUM_LANDMARKS {
                return Err(Error::contract(format!("bone ({a}, {b}) references id > 24")));
            }
            if a == b {
                return Err(Error::contract(format!("self-edge on landmark {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::contract(format!("duplicate bone ({a}, {b})")));
            }
            out.push((a, b));
        }
        Ok(BoneTopology { edges: out })
    }

    pub fn edges(&self) -> &[(u8, u8)] {
        &self.edges
    }
}

impl Default for BoneTopology {
    fn default() -> Self {
        BoneTopology::new(UPPER_BODY_EDGES).expect("built-in topology is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn document_parses_clamps_and_ignores_extra_keys() {
        let doc = LandmarkDocument::parse(
            r#"{"width": 640, "height": 480, "source": "x",
                "landmarks": [{"id": 0, "x": 1.5, "y": -0.2, "z": 0.3},
                              {"id": 11, "x": 0.25, "y": 0.5, "visibility": 0.9}]}"#,
        )
        .unwrap();
        let set = doc.landmark_set().unwrap();
        assert_eq!(set.len(), 2);
        let nose = set.get(0).unwrap();
        assert_eq!((nose.x, nose.y, nose.visibility), (1.0, 0.0, 1.0));
        assert_eq!(set.get(11).unwrap().visibility, 0.9);
    }

    #[test]
    fn invalid_ids_rejected() {
        for bad in [
            r#"{"width":1,"height":1,"landmarks":[{"id":25,"x":0,"y":0}]}"#,
            r#"{"width":1,"height":1,"landmarks":[{"id":-1,"x":0,"y":0}]}"#,
            r#"{"width":1,"height":1,"landmarks":[{"id":3,"x":0,"y":0},{"id":3,"x":1,"y":1}]}"#,
        ] {
            let doc = LandmarkDocument::parse(bad).unwrap();
            assert!(doc.landmark_set().is_err(), "{bad}");
        }
    }

    #[test]
    fn default_topology_is_valid() {
        let topo = BoneTopology::default();
        assert!(topo.edges().iter().all(|&(a, b)| a != b && a < 25 && b < 25));
        assert!(BoneTopology::new([(1, 1)]).is_err());
        assert!(BoneTopology::new([(1, 2), (2, 1)]).is_err());
        assert!(BoneTopology::new([(1, 30)]).is_err());
    }

    #[test]
    fn document_round_trip() {
        let set = LandmarkSet::from_coords(&[(0.1, 0.2), (0.3, 0.4)]).unwrap();
        let json = LandmarkDocument::new(10, 20, &set).to_json();
        let back = LandmarkDocument::parse(&json).unwrap();
        assert_eq!((back.width, back.height), (10, 20));
        assert_eq!(back.landmark_set().unwrap(), set);
    }
}
