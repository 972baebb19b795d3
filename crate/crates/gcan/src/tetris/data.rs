//! Synthetic rigid-body trajectory generation: each of the eight tetromino
//! shapes gets a per-object screw motion (rotation about its center plus a
//! translation drift), with motions sampled conditionally across objects so
//! they are correlated within a trajectory.

use std::path::Path;

use rand::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::shapes::centered_shape;
use crate::checkpoint::{read_blob, write_blob};
use crate::error::{Error, Result};
use crate::train::seeded_rng;

pub const N_OBJECTS: usize = 8;
pub const N_POINTS: usize = 4;
pub const N_STEPS: usize = 8;
pub const N_COORDS: usize = 3;
/// Point locations per time step (objects x points).
pub const N_LOCATIONS: usize = N_OBJECTS * N_POINTS;
/// Input/target split: the first 4 steps are inputs, the rest targets.
pub const N_IN_STEPS: usize = 4;
pub const N_OUT_STEPS: usize = N_STEPS - N_IN_STEPS;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    /// Std-dev of the one-time Gaussian deformation of each shape.
    pub noise_scale: f64,
    pub with_velocities: bool,
    /// Sample per-object motions as perturbations of a shared base motion.
    pub correlated: bool,
    /// Maximum rotation angle per step (radians).
    pub max_angle: f64,
    /// Maximum translation offset per step.
    pub max_offset: f64,
}

impl GeneratorConfig {
    pub fn new(n_trajectories: usize, seed: u64) -> Self {
        Self {
            n_trajectories,
            seed,
            noise_scale: 0.01,
            with_velocities: false,
            correlated: true,
            max_angle: 0.05 * std::f64::consts::TAU,
            max_offset: 0.5,
        }
    }
}

/// Generated trajectories, positions (and optionally velocities) laid out
/// as [trajectory][object][point][step][coord].
#[derive(Clone, Debug)]
pub struct Dataset {
    pub config: GeneratorConfig,
    pub positions: Vec<f64>,
    pub velocities: Option<Vec<f64>>,
}

pub const TRAJ_STRIDE: usize = N_OBJECTS * N_POINTS * N_STEPS * N_COORDS;

fn unit_vector(rng: &mut impl Rng) -> [f64; 3] {
    loop {
        let v = [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-3 && n <= 1.0 {
            return [v[0] / n, v[1] / n, v[2] / n];
        }
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

/// Rodrigues rotation matrix for `axis` (unit) and `angle`.
fn rotation_matrix(axis: [f64; 3], angle: f64) -> [[f64; 3]; 3] {
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    let [x, y, z] = axis;
    [
        [t * x * x + c, t * x * y - s * z, t * x * z + s * y],
        [t * x * y + s * z, t * y * y + c, t * y * z - s * x],
        [t * x * z - s * y, t * y * z + s * x, t * z * z + c],
    ]
}

fn apply(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn transpose(m: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            t[i][j] = m[j][i];
        }
    }
    t
}

/// Per-object motion parameters for one trajectory.
struct Motion {
    rot: [[f64; 3]; 3],
    rot_inv: [[f64; 3]; 3],
    t_vec: [f64; 3],
}

fn sample_motions(rng: &mut impl Rng, cfg: &GeneratorConfig) -> Vec<Motion> {
    let base_axis = unit_vector(rng);
    let base_angle = rng.random_range(0.0..1.0) * cfg.max_angle;
    let base_dir = unit_vector(rng);
    let base_offset = rng.random_range(0.0..1.0) * cfg.max_offset;
    let base_t = [
        base_dir[0] * base_offset,
        base_dir[1] * base_offset,
        base_dir[2] * base_offset,
    ];
    (0..N_OBJECTS)
        .map(|_| {
            let (axis, angle, t_vec) = if cfg.correlated {
                // Gaussian perturbations around the shared base motion with
                // sigma = 20% of the base magnitudes.
                let mut axis = [
                    base_axis[0] + 0.2 * gaussian(rng),
                    base_axis[1] + 0.2 * gaussian(rng),
                    base_axis[2] + 0.2 * gaussian(rng),
                ];
                let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
                for a in axis.iter_mut() {
                    *a /= n.max(1e-9);
                }
                let angle = base_angle + 0.2 * base_angle * gaussian(rng);
                let sigma_t = 0.2 * base_offset;
                let t_vec = [
                    base_t[0] + sigma_t * gaussian(rng),
                    base_t[1] + sigma_t * gaussian(rng),
                    base_t[2] + sigma_t * gaussian(rng),
                ];
                (axis, angle, t_vec)
            } else {
                let axis = unit_vector(rng);
                let angle = rng.random_range(0.0..1.0) * cfg.max_angle;
                let dir = unit_vector(rng);
                let offset = rng.random_range(0.0..1.0) * cfg.max_offset;
                (axis, angle, [dir[0] * offset, dir[1] * offset, dir[2] * offset])
            };
            let rot = rotation_matrix(axis, angle);
            Motion {
                rot_inv: transpose(&rot),
                rot,
                t_vec,
            }
        })
        .collect()
}

pub fn generate_dataset(cfg: &GeneratorConfig) -> Result<Dataset> {
    if cfg.n_trajectories == 0 {
        return Err(Error::InvalidConfig("need at least one trajectory".into()));
    }
    let mut positions = vec![0.0; cfg.n_trajectories * TRAJ_STRIDE];
    let mut velocities = cfg
        .with_velocities
        .then(|| vec![0.0; cfg.n_trajectories * TRAJ_STRIDE]);

    for traj in 0..cfg.n_trajectories {
        // one RNG stream per trajectory: datasets are reproducible and
        // indifferent to generation order
        let mut rng = seeded_rng(cfg.seed, traj as u64 + 1);
        let motions = sample_motions(&mut rng, cfg);
        for (obj, motion) in motions.iter().enumerate() {
            let mut initial = centered_shape(obj);
            for p in initial.iter_mut() {
                for v in p.iter_mut() {
                    *v += cfg.noise_scale * gaussian(&mut rng);
                }
            }
            for (pt, &start) in initial.iter().enumerate() {
                // pos_t = P^t x0 + t * t_vec; the virtual step -1
                // (P^-1 x0 - t_vec) backs the t=0 velocity
                let mut prev = apply(&motion.rot_inv, start);
                for (pv, tv) in prev.iter_mut().zip(&motion.t_vec) {
                    *pv -= tv;
                }
                let mut rotated = start;
                for step in 0..N_STEPS {
                    if step > 0 {
                        rotated = apply(&motion.rot, rotated);
                    }
                    let mut current = rotated;
                    for (cv, tv) in current.iter_mut().zip(&motion.t_vec) {
                        *cv += step as f64 * tv;
                    }
                    let base = (((traj * N_OBJECTS + obj) * N_POINTS + pt) * N_STEPS + step)
                        * N_COORDS;
                    positions[base..base + 3].copy_from_slice(&current);
                    if let Some(vel) = velocities.as_mut() {
                        let prev_pos = if step == 0 {
                            prev
                        } else {
                            let b = base - N_COORDS;
                            [positions[b], positions[b + 1], positions[b + 2]]
                        };
                        for k in 0..3 {
                            vel[base + k] = current[k] - prev_pos[k];
                        }
                    }
                }
            }
        }
    }
    Ok(Dataset {
        config: *cfg,
        positions,
        velocities,
    })
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.config.n_trajectories
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of (trajectory, object, point, step).
    pub fn position(&self, traj: usize, obj: usize, pt: usize, step: usize) -> [f64; 3] {
        let base = (((traj * N_OBJECTS + obj) * N_POINTS + pt) * N_STEPS + step) * N_COORDS;
        [
            self.positions[base],
            self.positions[base + 1],
            self.positions[base + 2],
        ]
    }

    pub fn velocity(&self, traj: usize, obj: usize, pt: usize, step: usize) -> Option<[f64; 3]> {
        self.velocities.as_ref().map(|vel| {
            let base = (((traj * N_OBJECTS + obj) * N_POINTS + pt) * N_STEPS + step) * N_COORDS;
            [vel[base], vel[base + 1], vel[base + 2]]
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = json!({
            "version": 1,
            "kind": "tetris-dataset",
            "n_traj": self.config.n_trajectories,
            "objects": N_OBJECTS,
            "points": N_POINTS,
            "steps": N_STEPS,
            "coords": N_COORDS,
            "has_velocities": self.velocities.is_some(),
            "seed": self.config.seed,
            "noise_scale": self.config.noise_scale,
            "correlated": self.config.correlated,
            "max_angle": self.config.max_angle,
            "max_offset": self.config.max_offset,
        });
        let mut data = self.positions.clone();
        if let Some(vel) = &self.velocities {
            data.extend_from_slice(vel);
        }
        write_blob(path, &header, &data)
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let (header, data) = read_blob(path)?;
        if header["kind"] != "tetris-dataset" {
            return Err(Error::Format(format!(
                "expected a tetris dataset, got kind {}",
                header["kind"]
            )));
        }
        let n_traj = header["n_traj"].as_u64().unwrap_or(0) as usize;
        let has_vel = header["has_velocities"].as_bool().unwrap_or(false);
        let expected = n_traj * TRAJ_STRIDE * if has_vel { 2 } else { 1 };
        if data.len() != expected {
            return Err(Error::Format(format!(
                "dataset payload has {} values, expected {expected}",
                data.len()
            )));
        }
        let config = GeneratorConfig {
            n_trajectories: n_traj,
            seed: header["seed"].as_u64().unwrap_or(0),
            noise_scale: header["noise_scale"].as_f64().unwrap_or(0.0),
            with_velocities: has_vel,
            correlated: header["correlated"].as_bool().unwrap_or(true),
            max_angle: header["max_angle"].as_f64().unwrap_or(0.0),
            max_offset: header["max_offset"].as_f64().unwrap_or(0.0),
        };
        let positions = data[..n_traj * TRAJ_STRIDE].to_vec();
        let velocities = has_vel.then(|| data[n_traj * TRAJ_STRIDE..].to_vec());
        Ok(Dataset {
            config,
            positions,
            velocities,
        })
    }
}
