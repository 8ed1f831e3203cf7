//! Monte Carlo scenario generation: BS/MS geometry and nominal channels
//! with path loss, log-normal shadowing, antenna gain and Rayleigh fading.

use crate::error::{invalid, Error, Result};
use crate::linalg::CVector;
use crate::model::{ChannelSet, ErrorEllipsoid, Link};
use crate::{rng, Stream};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    /// Meters.
    pub inter_bs_distance: f64,
    /// Meters.
    pub min_bs_ms_distance: f64,
    pub shadowing_std_db: f64,
    pub antenna_gain_dbi: f64,
    /// CSI error radius relative to the small-scale channel.
    pub error_radius: f64,
    pub noise_power_dbm: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            inter_bs_distance: 500.0,
            min_bs_ms_distance: 35.0,
            shadowing_std_db: 8.0,
            antenna_gain_dbi: 5.0,
            error_radius: 0.1,
            noise_power_dbm: -106.27,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.inter_bs_distance,
            self.min_bs_ms_distance,
            self.shadowing_std_db,
            self.antenna_gain_dbi,
            self.error_radius,
            self.noise_power_dbm,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid("scenario parameters must be finite"));
        }
        if !(self.inter_bs_distance > self.min_bs_ms_distance && self.min_bs_ms_distance > 0.0) {
            return Err(invalid("need inter_bs_distance > min_bs_ms_distance > 0"));
        }
        if self.shadowing_std_db < 0.0 || self.error_radius < 0.0 {
            return Err(invalid("shadowing_std_db and error_radius must be >= 0"));
        }
        Ok(())
    }

    pub fn noise_power_watts(&self) -> f64 {
        dbm_to_watts(self.noise_power_dbm)
    }

    /// Radius of the disk users are dropped in.
    pub fn cell_radius(&self) -> f64 {
        self.inter_bs_distance / 3f64.sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    /// Meters, one per BS.
    pub bs_positions: Vec<[f64; 2]>,
    /// Meters, indexed `cell * K + user`.
    pub ms_positions: Vec<[f64; 2]>,
    pub users_per_cell: usize,
}

impl Layout {
    pub fn num_cells(&self) -> usize {
        self.bs_positions.len()
    }

    /// Distance from BS `bs` to user `(cell, user)`.
    pub fn distance(&self, bs: usize, cell: usize, user: usize) -> f64 {
        let b = self.bs_positions[bs];
        let m = self.ms_positions[cell * self.users_per_cell + user];
        (b[0] - m[0]).hypot(b[1] - m[1])
    }
}

/// Drops `users_per_cell` users uniformly in a disk around each BS.
/// Supported layouts: a single cell, or three BSs on an equilateral triangle.
pub fn generate_layout(cfg: &ScenarioConfig, num_cells: usize, users_per_cell: usize, seed: u64) -> Result<Layout> {
    cfg.validate()?;
    let d = cfg.inter_bs_distance;
    let bs_positions = match num_cells {
        1 => vec![[0.0, 0.0]],
        3 => vec![[0.0, 0.0], [d, 0.0], [d / 2.0, d * 3f64.sqrt() / 2.0]],
        n => return Err(Error::Unsupported(format!("{n}-cell layouts (only 1 or 3 cells)"))),
    };
    if users_per_cell == 0 {
        return Err(invalid("users_per_cell must be at least 1"));
    }
    let radius = cfg.cell_radius();
    if cfg.min_bs_ms_distance >= radius {
        return Err(invalid(format!(
            "min_bs_ms_distance {} m does not fit in the {radius:.3} m cell disk",
            cfg.min_bs_ms_distance
        )));
    }
    let mut rng = rng(seed, Stream::Layout);
    let mut ms_positions = Vec::with_capacity(num_cells * users_per_cell);
    for bs in &bs_positions {
        for _ in 0..users_per_cell {
            let (r, theta) = loop {
                let r = radius * rng.random::<f64>().sqrt();
                let theta = 2.0 * PI * rng.random::<f64>();
                if r >= cfg.min_bs_ms_distance {
                    break (r, theta);
                }
            };
            ms_positions.push([bs[0] + r * theta.cos(), bs[1] + r * theta.sin()]);
        }
    }
    Ok(Layout { bs_positions, ms_positions, users_per_cell })
}

/// Amplitude factor `10^{-(34.6 + 35 log10 d)/20} · 10^{ψ/20} · 10^{φ/20}`.
pub fn large_scale_gain(distance_m: f64, shadow_db: f64, gain_dbi: f64) -> Result<f64> {
    if !(distance_m.is_finite() && distance_m > 0.0) {
        return Err(invalid(format!("distance must be positive, got {distance_m}")));
    }
    let path_loss_db = 34.6 + 35.0 * distance_m.log10();
    Ok(10f64.powf(-path_loss_db / 20.0) * 10f64.powf(shadow_db / 20.0) * 10f64.powf(gain_dbi / 20.0))
}

pub fn dbm_to_watts(p_dbm: f64) -> f64 {
    10f64.powf((p_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(p_watts: f64) -> f64 {
    10.0 * p_watts.log10() + 30.0
}

/// Nominal channels for every link of `layout`. The large-scale factor
/// multiplies both the estimate and its error, so each link stores the
/// scaled estimate together with a ball of radius `ε · gain`.
pub fn generate_channels(layout: &Layout, cfg: &ScenarioConfig, num_antennas: usize, seed: u64) -> Result<ChannelSet> {
    cfg.validate()?;
    if num_antennas == 0 {
        return Err(invalid("num_antennas must be at least 1"));
    }
    let nc = layout.num_cells();
    let k = layout.users_per_cell;
    if nc == 0 || k == 0 || layout.ms_positions.len() != nc * k {
        return Err(invalid("layout must place users_per_cell users in every cell"));
    }
    let mut rng = rng(seed, Stream::Channels);
    let links = nc * nc * k;
    let mut nominal = Vec::with_capacity(links);
    let mut ellipsoids = Vec::with_capacity(links);
    let mut gains = Vec::with_capacity(links);
    // Link order of ChannelSet: user-major, BS innermost.
    for cell in 0..nc {
        for user in 0..k {
            for bs in 0..nc {
                let link = Link::new(bs, cell, user);
                let shadow = cfg.shadowing_std_db * rng.sample::<f64, _>(StandardNormal);
                let gain =
                    large_scale_gain(layout.distance(link.bs, link.cell, link.user), shadow, cfg.antenna_gain_dbi)?;
                let h = CVector::from_fn(num_antennas, |_, _| {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    Complex64::new(re * FRAC_1_SQRT_2 * gain, im * FRAC_1_SQRT_2 * gain)
                });
                nominal.push(h);
                ellipsoids.push(ErrorEllipsoid::spherical(cfg.error_radius * gain)?);
                gains.push(gain);
            }
        }
    }
    ChannelSet::new(nc, k, num_antennas, nominal, ellipsoids, gains)
}
