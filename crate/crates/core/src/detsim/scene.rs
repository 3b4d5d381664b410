use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::{Error, Result};

/// A person on the ground plane, present for frames `enter_frame..=exit_frame`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldObject {
    pub object_id: u32,
    pub enter_frame: usize,
    pub exit_frame: usize,
    /// `positions[k]` is the position at frame `enter_frame + k`.
    pub positions: Vec<Point2<f64>>,
}

impl WorldObject {
    pub fn stationary(object_id: u32, p: Point2<f64>, enter_frame: usize, exit_frame: usize) -> Self {
        WorldObject {
            object_id,
            enter_frame,
            exit_frame,
            positions: vec![p; exit_frame - enter_frame + 1],
        }
    }

    pub fn position_at(&self, frame: usize) -> Option<Point2<f64>> {
        if frame < self.enter_frame || frame > self.exit_frame {
            return None;
        }
        self.positions.get(frame - self.enter_frame).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldScene {
    pub objects: Vec<WorldObject>,
    pub n_frames: usize,
    pub fps: f64,
    pub person_height_m: f64,
}

impl WorldScene {
    /// Checks frame ranges and that no object moves faster than `v_max` metres per frame.
    pub fn validate(&self, v_max: f64) -> Result<()> {
        if self.n_frames == 0 || !(self.fps > 0.0) {
            return Err(Error::Scenario("scene needs n_frames > 0 and fps > 0".into()));
        }
        for o in &self.objects {
            if o.exit_frame < o.enter_frame || o.exit_frame >= self.n_frames {
                return Err(Error::Scenario(format!("object {} frame range outside scene", o.object_id)));
            }
            if o.positions.len() != o.exit_frame - o.enter_frame + 1 {
                return Err(Error::Scenario(format!("object {} trajectory has gaps", o.object_id)));
            }
            if o.positions.windows(2).any(|w| w[0].distance(&w[1]) > v_max + 1e-12) {
                return Err(Error::Scenario(format!("object {} exceeds {v_max} m/frame", o.object_id)));
            }
        }
        Ok(())
    }
}

/// Parameters of the wandering-crowd generator.
///
/// People are placed at anchor points at least `anchor_spacing_m` apart and
/// then wander between random waypoints within `wander_radius_m` of their
/// anchor, so any two people stay at least
/// `anchor_spacing_m - 2 * wander_radius_m` apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub count: usize,
    pub room_w_m: f64,
    pub room_h_m: f64,
    /// Anchors keep this distance from the walls.
    pub margin_m: f64,
    pub anchor_spacing_m: f64,
    pub wander_radius_m: f64,
    pub max_speed_mps: f64,
}

impl SceneSpec {
    pub fn max_step(&self, fps: f64) -> f64 {
        self.max_speed_mps / fps
    }
}

pub fn generate_scene(spec: &SceneSpec, n_frames: usize, fps: f64, person_height_m: f64, seed: u64) -> Result<WorldScene> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5ce9_e000_0000);
    let anchors = place_anchors(spec, &mut rng)?;
    let v_max = spec.max_step(fps);
    let objects = anchors
        .iter()
        .enumerate()
        .map(|(k, a)| {
            let mut pos = disk_point(a, spec.wander_radius_m, &mut rng);
            let mut waypoint = disk_point(a, spec.wander_radius_m, &mut rng);
            let mut speed = v_max * rng.random_range(0.5..=1.0);
            let mut positions = Vec::with_capacity(n_frames);
            for _ in 0..n_frames {
                positions.push(pos);
                let d = pos.distance(&waypoint);
                if d <= speed {
                    pos = waypoint;
                    waypoint = disk_point(a, spec.wander_radius_m, &mut rng);
                    speed = v_max * rng.random_range(0.5..=1.0);
                } else {
                    pos = Point2::new(pos.x + (waypoint.x - pos.x) * speed / d, pos.y + (waypoint.y - pos.y) * speed / d);
                }
            }
            WorldObject {
                object_id: k as u32,
                enter_frame: 0,
                exit_frame: n_frames.saturating_sub(1),
                positions,
            }
        })
        .collect();
    let scene = WorldScene {
        objects,
        n_frames,
        fps,
        person_height_m,
    };
    scene.validate(v_max)?;
    Ok(scene)
}

fn disk_point(c: &Point2<f64>, r: f64, rng: &mut ChaCha8Rng) -> Point2<f64> {
    if r <= 0.0 {
        return *c;
    }
    let rho = r * rng.random::<f64>().sqrt();
    let theta = rng.random_range(0.0..std::f64::consts::TAU);
    Point2::new(c.x + rho * theta.cos(), c.y + rho * theta.sin())
}

// Random sequential placement with restarts.
fn place_anchors(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Point2<f64>>> {
    let (x0, x1) = (spec.margin_m, spec.room_w_m - spec.margin_m);
    let (y0, y1) = (spec.margin_m, spec.room_h_m - spec.margin_m);
    if spec.count > 0 && !(x1 >= x0 && y1 >= y0) {
        return Err(Error::Scenario("room smaller than its margins".into()));
    }
    for _ in 0..50 {
        let mut anchors: Vec<Point2<f64>> = Vec::with_capacity(spec.count);
        let mut tries = 0;
        while anchors.len() < spec.count && tries < 5_000 {
            tries += 1;
            let p = Point2::new(rng.random_range(x0..=x1), rng.random_range(y0..=y1));
            if anchors.iter().all(|a| a.distance(&p) >= spec.anchor_spacing_m) {
                anchors.push(p);
            }
        }
        if anchors.len() == spec.count {
            return Ok(anchors);
        }
    }
    Err(Error::Scenario(format!("cannot place {} people {} m apart", spec.count, spec.anchor_spacing_m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SceneSpec {
        SceneSpec {
            count: 18,
            room_w_m: 10.0,
            room_h_m: 8.0,
            margin_m: 0.5,
            anchor_spacing_m: 1.3,
            wander_radius_m: 0.3,
            max_speed_mps: 0.3,
        }
    }

    #[test]
    fn generated_scene_respects_bounds() {
        let s = spec();
        let scene = generate_scene(&s, 200, 15.0, 1.7, 9).unwrap();
        assert_eq!(scene.objects.len(), 18);
        scene.validate(s.max_step(15.0)).unwrap();
        let min_sep = s.anchor_spacing_m - 2.0 * s.wander_radius_m;
        for f in (0..200).step_by(7) {
            for (i, a) in scene.objects.iter().enumerate() {
                let pa = a.position_at(f).unwrap();
                assert!(pa.x > 0.0 && pa.x < 10.0 && pa.y > 0.0 && pa.y < 8.0);
                for b in &scene.objects[i + 1..] {
                    assert!(pa.distance(&b.position_at(f).unwrap()) >= min_sep - 1e-9);
                }
            }
        }
    }

    #[test]
    fn generation_is_seeded() {
        let s = spec();
        assert_eq!(generate_scene(&s, 50, 15.0, 1.7, 1).unwrap(), generate_scene(&s, 50, 15.0, 1.7, 1).unwrap());
        assert_ne!(generate_scene(&s, 50, 15.0, 1.7, 1).unwrap(), generate_scene(&s, 50, 15.0, 1.7, 2).unwrap());
    }

    #[test]
    fn impossible_packing_fails() {
        let s = SceneSpec {
            count: 100,
            anchor_spacing_m: 3.0,
            ..spec()
        };
        assert!(generate_scene(&s, 10, 15.0, 1.7, 1).is_err());
    }

    #[test]
    fn validate_catches_speeding() {
        let scene = WorldScene {
            objects: vec![WorldObject {
                object_id: 0,
                enter_frame: 0,
                exit_frame: 1,
                positions: vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)],
            }],
            n_frames: 2,
            fps: 10.0,
            person_height_m: 1.7,
        };
        assert!(scene.validate(0.5).is_err());
        assert!(scene.validate(1.0).is_ok());
    }
}
