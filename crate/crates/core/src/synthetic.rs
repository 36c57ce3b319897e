//! Seeded synthetic multi-view datasets.
//!
//! `regions` builds data where every view is informative on its own slice
//! of the instances and uninformative on the rest, which is the situation
//! per-instance view selection is meant for. `blobs` builds ordinary
//! Gaussian class blobs repeated across views with different overlap.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::data::{assemble_dataset, Labels, MultiViewDataset, ViewMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegionParams {
    pub instances: usize,
    pub classes: usize,
    pub views: usize,
    /// Radius of the circle carrying the class centres.
    pub separation: f64,
    pub sigma: f64,
    /// Share of each view's own instances moved into a pocket sitting next
    /// to the centre of the following class.
    pub pocket_fraction: f64,
    /// Offset of the pockets along their own axis.
    pub pocket_shift: f64,
    /// Offset of the uninformative copy along its own axis.
    pub noise_offset: f64,
    /// Extra pure-noise columns appended to every view.
    pub nuisance_dims: usize,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            instances: 480,
            classes: 3,
            views: 4,
            separation: 4.0,
            sigma: 0.8,
            pocket_fraction: 0.1,
            pocket_shift: 3.0,
            noise_offset: 8.0,
            nuisance_dims: 0,
        }
    }
}

fn centre(class: usize, classes: usize, radius: f64) -> (f64, f64) {
    let angle = std::f64::consts::TAU * class as f64 / classes as f64;
    (radius * angle.cos(), radius * angle.sin())
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample::<f64, _>(StandardNormal)
}

/// Region dataset plus the view each instance is informative in.
pub fn regions_with_owner(params: &RegionParams, seed: u64) -> Result<(MultiViewDataset, Vec<usize>)> {
    if params.classes < 2 || params.views < 1 || params.instances < params.classes * params.views {
        return Err(Error::config("synthetic regions need >=2 classes, >=1 view and enough instances"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = 4 + params.nuisance_dims;
    let mut rows = vec![Vec::with_capacity(params.instances); params.views];
    let mut labels = Vec::with_capacity(params.instances);
    let mut owners = Vec::with_capacity(params.instances);
    for i in 0..params.instances {
        // Balanced labels and owners, interleaved so every class appears in
        // every region.
        let y = i % params.classes;
        let owner = (i / params.classes) % params.views;
        let pocket = rng.random::<f64>() < params.pocket_fraction;
        for (v, view_rows) in rows.iter_mut().enumerate() {
            let mut x = vec![0.0; dim];
            if v == owner {
                let anchor = if pocket { (y + 1) % params.classes } else { y };
                let (cx, cy) = centre(anchor, params.classes, params.separation);
                x[0] = cx + params.sigma * gauss(&mut rng);
                x[1] = cy + params.sigma * gauss(&mut rng);
                x[2] = if pocket { params.pocket_shift } else { 0.0 } + params.sigma * gauss(&mut rng);
                x[3] = params.sigma * gauss(&mut rng);
            } else {
                let anchor = rng.random_range(0..params.classes);
                let (cx, cy) = centre(anchor, params.classes, params.separation);
                x[0] = cx + params.sigma * gauss(&mut rng);
                x[1] = cy + params.sigma * gauss(&mut rng);
                x[2] = params.sigma * gauss(&mut rng);
                x[3] = params.noise_offset + params.sigma * gauss(&mut rng);
            }
            for slot in x.iter_mut().skip(4) {
                *slot = gauss(&mut rng);
            }
            view_rows.push(x);
        }
        labels.push(y);
        owners.push(owner);
    }
    let views = rows
        .iter()
        .enumerate()
        .map(|(v, r)| ViewMatrix::from_rows(format!("view{v}"), r))
        .collect::<Result<Vec<_>>>()?;
    let dataset = assemble_dataset(views, Labels::with_classes(labels, params.classes)?, None)?;
    Ok((dataset, owners))
}

pub fn regions(params: &RegionParams, seed: u64) -> Result<MultiViewDataset> {
    regions_with_owner(params, seed).map(|(d, _)| d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlobParams {
    pub instances: usize,
    pub classes: usize,
    pub dim: usize,
    /// Distance between class means, one entry per view.
    pub separations: Vec<f64>,
}

impl Default for BlobParams {
    fn default() -> Self {
        Self {
            instances: 300,
            classes: 3,
            dim: 4,
            separations: vec![5.0, 3.0, 2.0],
        }
    }
}

/// Gaussian class blobs, unit variance. Class means sit on a scaled
/// simplex-like pattern (class `c` is shifted along axis `c mod dim`).
pub fn blobs(params: &BlobParams, seed: u64) -> Result<MultiViewDataset> {
    if params.classes < 2 || params.dim == 0 || params.separations.is_empty() || params.instances < params.classes {
        return Err(Error::config(
            "synthetic blobs need >=2 classes, >=1 dim, >=1 view and enough instances",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..params.instances).map(|i| i % params.classes).collect();
    let views = params
        .separations
        .iter()
        .enumerate()
        .map(|(v, &sep)| {
            let rows: Vec<Vec<f64>> = labels
                .iter()
                .map(|&y| {
                    (0..params.dim)
                        .map(|d| {
                            let mean = if d == y % params.dim {
                                sep * (1 + y / params.dim) as f64
                            } else {
                                0.0
                            };
                            mean + gauss(&mut rng)
                        })
                        .collect()
                })
                .collect();
            ViewMatrix::from_rows(format!("view{v}"), &rows)
        })
        .collect::<Result<Vec<_>>>()?;
    assemble_dataset(views, Labels::with_classes(labels, params.classes)?, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let p = RegionParams::default();
        let (a, owners) = regions_with_owner(&p, 3).unwrap();
        assert_eq!(a.len(), 480);
        assert_eq!(a.num_views(), 4);
        assert_eq!(a.view(0).dim(), 4);
        assert_eq!(owners.iter().filter(|&&o| o == 0).count(), 120);
        assert_eq!(a.labels().class_counts(), vec![160, 160, 160]);
        let b = regions(&p, 3).unwrap();
        assert_eq!(a.view(1).data(), b.view(1).data());
        let c = regions(&p, 4).unwrap();
        assert_ne!(a.view(1).data(), c.view(1).data());

        let blob = blobs(&BlobParams::default(), 1).unwrap();
        assert_eq!(blob.num_views(), 3);
        assert_eq!(blob.view(2).dim(), 4);
    }

    #[test]
    fn rejects_bad_params() {
        let p = RegionParams {
            classes: 1,
            ..RegionParams::default()
        };
        assert!(regions(&p, 0).is_err());
        assert!(blobs(
            &BlobParams {
                separations: vec![],
                ..BlobParams::default()
            },
            0
        )
        .is_err());
    }
}
