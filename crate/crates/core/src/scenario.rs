//! Random scenario generation.
//!
//! Draws come from a ChaCha20 stream seeded with `seed_from_u64(seed)`, in
//! this fixed order:
//!
//! 1. device positions, for each device a radius draw then an angle draw;
//! 2. the MBS knowledge base, then each SBS knowledge base;
//! 3. for each device: its required classes, `eps_th`, `t_max`, then for each
//!    required class in ascending id order `d_T`, `d_K`, `I`, `c`;
//! 4. access fading `[md][bs][subchannel]`;
//! 5. backhaul fading `[md][sbs][subchannel]`.
//!
//! Every ranged parameter consumes exactly one uniform draw even when its
//! range is a single value, so changing a parameter value never shifts the
//! rest of the stream. Experiment run `r` uses seed `base_seed + r`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::model::{
    units, AccuracyModel, BaseStation, ChannelGains, ClassDemand, ClassId, MobileDevice, RadioParams, Scenario,
};

/// Path-loss constant in `g = G0 * rho^2 * d^-2`.
pub const PATH_LOSS_CONSTANT: f64 = 1e-3;
/// Distances are clamped to at least this many meters.
pub const MIN_DISTANCE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("invalid generation config: {0}")]
    Invalid(String),
    #[error("cannot parse generation config: {0}")]
    Parse(String),
}

/// A `[lo, hi]` uniform range, written as a scalar when `lo == hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        ParamRange { lo, hi }
    }

    pub fn fixed(v: f64) -> Self {
        ParamRange { lo: v, hi: v }
    }

    fn is_valid(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        if self.lo == self.hi {
            self.lo
        } else {
            self.lo + u * (self.hi - self.lo)
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    Scalar(f64),
    Pair([f64; 2]),
}

impl Serialize for ParamRange {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.lo == self.hi {
            RangeRepr::Scalar(self.lo).serialize(s)
        } else {
            RangeRepr::Pair([self.lo, self.hi]).serialize(s)
        }
    }
}

impl<'de> Deserialize<'de> for ParamRange {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(match RangeRepr::deserialize(d)? {
            RangeRepr::Scalar(v) => ParamRange::fixed(v),
            RangeRepr::Pair([lo, hi]) => ParamRange::new(lo, hi),
        })
    }
}

fn default_sbs_radius() -> f64 {
    150.0
}

fn default_mbs_position() -> [f64; 2] {
    [-150.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerationConfig {
    #[serde(default)]
    pub seed: u64,
    pub num_mds: usize,
    pub num_sbs: usize,
    #[serde(rename = "K")]
    pub num_subchannels: usize,
    pub num_classes: usize,
    pub mbs_kb_size: usize,
    pub sbs_kb_size: usize,
    pub md_required_size: usize,

    /// Semantic information per class, suts.
    #[serde(rename = "I")]
    pub semantic_info: ParamRange,
    /// Knowledge data per class, bits.
    #[serde(rename = "d_K")]
    pub knowledge_bits: ParamRange,
    /// Source data per class, bits.
    #[serde(rename = "d_T")]
    pub source_bits: ParamRange,
    /// Computing load per class, CPU cycles.
    #[serde(rename = "c")]
    pub compute_load: ParamRange,
    pub eps_th: ParamRange,
    /// Seconds.
    pub t_max: ParamRange,

    #[serde(rename = "f_C_mbs")]
    pub mbs_compute_speed: f64,
    #[serde(rename = "f_C_sbs")]
    pub sbs_compute_speed: f64,
    #[serde(rename = "p_T", with = "units::power")]
    pub md_tx_power: f64,
    #[serde(rename = "p_T_0j", with = "units::power")]
    pub backhaul_tx_power: f64,
    #[serde(rename = "W")]
    pub bandwidth: f64,
    #[serde(with = "units::power")]
    pub sigma2: f64,
    pub rho: f64,
    #[serde(default)]
    pub accuracy: AccuracyModel,

    /// Radius of the service disk around the first SBS, meters.
    #[serde(default = "default_sbs_radius")]
    pub sbs_radius: f64,
    #[serde(default = "default_mbs_position")]
    pub mbs_position: [f64; 2],
    /// SBS positions; when absent the first SBS sits at the origin and any
    /// others are spread evenly on a circle of half the service radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sbs_positions: Option<Vec<[f64; 2]>>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            seed: 0,
            num_mds: 3,
            num_sbs: 1,
            num_subchannels: 5,
            num_classes: 10,
            mbs_kb_size: 6,
            sbs_kb_size: 5,
            md_required_size: 6,
            semantic_info: ParamRange::new(2e6, 2e7),
            knowledge_bits: ParamRange::new(5e6, 5e7),
            source_bits: ParamRange::new(2e7, 1e8),
            compute_load: ParamRange::new(1e6, 1e8),
            eps_th: ParamRange::new(0.7, 0.85),
            t_max: ParamRange::new(2.5, 3.5),
            mbs_compute_speed: 4e9,
            sbs_compute_speed: 2e9,
            md_tx_power: 0.1,
            backhaul_tx_power: 20.0,
            bandwidth: 6e6,
            sigma2: units::dbm_to_watts(-120.0),
            rho: 1.0,
            accuracy: AccuracyModel::default(),
            sbs_radius: default_sbs_radius(),
            mbs_position: default_mbs_position(),
            sbs_positions: None,
        }
    }
}

impl GenerationConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: GenerationConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.num_subchannels == 0 {
            return bad("K must be at least 1".into());
        }
        for (name, size) in [
            ("mbs_kb_size", self.mbs_kb_size),
            ("sbs_kb_size", self.sbs_kb_size),
            ("md_required_size", self.md_required_size),
        ] {
            if size > self.num_classes {
                return bad(format!("{name} = {size} exceeds num_classes = {}", self.num_classes));
            }
        }
        let ranges = [
            ("I", self.semantic_info),
            ("d_K", self.knowledge_bits),
            ("d_T", self.source_bits),
            ("c", self.compute_load),
            ("eps_th", self.eps_th),
            ("t_max", self.t_max),
        ];
        for (name, r) in ranges {
            if !r.is_valid() {
                return bad(format!("{name}: range [{}, {}] is not ordered", r.lo, r.hi));
            }
            if !(r.lo > 0.0) {
                return bad(format!("{name} must be positive"));
            }
        }
        if !(self.eps_th.hi < 1.0) {
            return bad("eps_th must stay below 1".into());
        }
        let positive = [
            ("f_C_mbs", self.mbs_compute_speed),
            ("f_C_sbs", self.sbs_compute_speed),
            ("p_T", self.md_tx_power),
            ("p_T_0j", self.backhaul_tx_power),
            ("W", self.bandwidth),
            ("sigma2", self.sigma2),
            ("rho", self.rho),
            ("sbs_radius", self.sbs_radius),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        if let Some(p) = &self.sbs_positions {
            if p.len() != self.num_sbs {
                return bad(format!("sbs_positions has {} entries, num_sbs is {}", p.len(), self.num_sbs));
            }
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        GenerationConfig { seed, ..self.clone() }
    }

    fn sbs_position(&self, j: usize) -> [f64; 2] {
        if let Some(p) = &self.sbs_positions {
            return p[j];
        }
        if j == 0 {
            return [0.0, 0.0];
        }
        let angle = 2.0 * PI * (j - 1) as f64 / (self.num_sbs - 1) as f64;
        let r = self.sbs_radius / 2.0;
        [r * angle.cos(), r * angle.sin()]
    }
}

pub fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// `G0 * fading * d^-2` with the distance floor applied.
pub fn link_gain(fading: f64, d: f64) -> f64 {
    PATH_LOSS_CONSTANT * fading / d.max(MIN_DISTANCE).powi(2)
}

/// Area-uniform point in a disk from two unit draws.
pub fn disk_point(center: [f64; 2], radius: f64, u_r: f64, u_theta: f64) -> [f64; 2] {
    let r = radius * u_r.sqrt();
    let t = 2.0 * PI * u_theta;
    [center[0] + r * t.cos(), center[1] + r * t.sin()]
}

fn draw_classes<R: Rng>(rng: &mut R, num_classes: usize, amount: usize) -> BTreeSet<ClassId> {
    index::sample(rng, num_classes, amount).into_iter().map(|c| c as ClassId).collect()
}

pub fn generate(config: &GenerationConfig) -> Result<Scenario, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let (ni, nj, nk) = (config.num_mds, config.num_sbs, config.num_subchannels);
    let service_center = if nj > 0 { config.sbs_position(0) } else { [0.0, 0.0] };

    let positions: Vec<[f64; 2]> = (0..ni)
        .map(|_| {
            let u_r: f64 = rng.random();
            let u_t: f64 = rng.random();
            disk_point(service_center, config.sbs_radius, u_r, u_t)
        })
        .collect();

    let mut base_stations = vec![BaseStation {
        id: 0,
        position: config.mbs_position,
        compute_speed: config.mbs_compute_speed,
        backhaul_tx_power: Some(vec![config.backhaul_tx_power; nj]),
        kb_classes: draw_classes(&mut rng, config.num_classes, config.mbs_kb_size),
    }];
    for j in 0..nj {
        base_stations.push(BaseStation {
            id: j + 1,
            position: config.sbs_position(j),
            compute_speed: config.sbs_compute_speed,
            backhaul_tx_power: None,
            kb_classes: draw_classes(&mut rng, config.num_classes, config.sbs_kb_size),
        });
    }

    let mut mobile_devices = Vec::with_capacity(ni);
    for (i, &position) in positions.iter().enumerate() {
        let required = draw_classes(&mut rng, config.num_classes, config.md_required_size);
        let eps_th = config.eps_th.draw(&mut rng);
        let t_max = config.t_max.draw(&mut rng);
        let classes = required
            .into_iter()
            .map(|class| ClassDemand {
                class,
                source_bits: config.source_bits.draw(&mut rng),
                knowledge_bits: config.knowledge_bits.draw(&mut rng),
                semantic_info: config.semantic_info.draw(&mut rng),
                compute_load: config.compute_load.draw(&mut rng),
            })
            .collect();
        mobile_devices.push(MobileDevice { id: i, position, tx_power: config.md_tx_power, eps_th, t_max, classes });
    }

    let access = positions
        .iter()
        .map(|&p| {
            base_stations
                .iter()
                .map(|bs| {
                    let d = distance(p, bs.position);
                    (0..nk).map(|_| link_gain(rng.sample(Exp1), d)).collect()
                })
                .collect()
        })
        .collect();
    // the backhaul serving device i on subchannel k runs from the MBS to SBS j
    let backhaul = (0..ni)
        .map(|_| {
            (1..=nj)
                .map(|j| {
                    let d = distance(config.mbs_position, base_stations[j].position);
                    (0..nk).map(|_| link_gain(rng.sample(Exp1), d)).collect()
                })
                .collect()
        })
        .collect();

    let scenario = Scenario {
        radio: RadioParams { bandwidth: config.bandwidth, sigma2: config.sigma2, num_subchannels: nk },
        accuracy: config.accuracy,
        rho: config.rho,
        base_stations,
        mobile_devices,
        gains: ChannelGains { access, backhaul },
    };
    scenario.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    Ok(scenario)
}

/// Hex SHA-256 of the scenario's TOML form.
pub fn scenario_hash(scenario: &Scenario) -> String {
    hex::encode(Sha256::digest(scenario.to_toml().as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gain_at_150m_with_unit_fading() {
        let g = link_gain(1.0, 150.0);
        assert!((g - 4.4444444444444e-8).abs() < 1e-20);
    }

    #[test]
    fn distance_floor() {
        assert_eq!(link_gain(1.0, 0.0), 1e-3);
        assert_eq!(link_gain(2.0, 0.5), 2e-3);
    }

    #[test]
    fn same_seed_same_scenario() {
        let c = GenerationConfig::default().with_seed(42);
        let a = generate(&c).unwrap();
        let b = generate(&c).unwrap();
        assert_eq!(a.to_toml(), b.to_toml());
        assert_eq!(scenario_hash(&a), scenario_hash(&b));
        let other = generate(&c.with_seed(43)).unwrap();
        assert_ne!(scenario_hash(&a), scenario_hash(&other));
    }

    #[test]
    fn default_shape() {
        let s = generate(&GenerationConfig::default().with_seed(7)).unwrap();
        assert_eq!(s.num_mds(), 3);
        assert_eq!(s.num_sbs(), 1);
        assert_eq!(s.num_subchannels(), 5);
        assert_eq!(s.base_stations[0].kb_classes.len(), 6);
        assert_eq!(s.base_stations[1].kb_classes.len(), 5);
        assert_eq!(s.base_stations[1].position, [0.0, 0.0]);
        for md in &s.mobile_devices {
            assert_eq!(md.classes.len(), 6);
            assert!(distance(md.position, [0.0, 0.0]) <= 150.0);
            assert!((0.7..=0.85).contains(&md.eps_th));
            assert!((2.5..=3.5).contains(&md.t_max));
        }
    }

    #[test]
    fn full_mbs_kb_leaves_nothing_mismatched_at_mbs() {
        let c = GenerationConfig { mbs_kb_size: 10, ..GenerationConfig::default() };
        let s = generate(&c.with_seed(1)).unwrap();
        for i in 0..s.num_mds() {
            assert_eq!(s.knowledge_split(i, 0).unwrap().num_mismatched(), 0);
        }
    }

    #[test]
    fn fixed_values_do_not_shift_the_stream() {
        let base = GenerationConfig::default().with_seed(5);
        let pinned = GenerationConfig { t_max: ParamRange::fixed(3.0), ..base.clone() };
        let a = generate(&base).unwrap();
        let b = generate(&pinned).unwrap();
        assert_eq!(a.gains, b.gains);
        assert_eq!(a.mobile_devices[2].classes, b.mobile_devices[2].classes);
    }

    #[test]
    fn disk_sampling_is_area_uniform() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let n = 100_000;
        let mean_r2 = (0..n)
            .map(|_| {
                let p = disk_point([0.0, 0.0], 150.0, rng.random(), rng.random());
                p[0] * p[0] + p[1] * p[1]
            })
            .sum::<f64>()
            / n as f64;
        let expected = 150.0f64.powi(2) / 2.0;
        assert!((mean_r2 / expected - 1.0).abs() < 0.02, "{mean_r2}");
    }

    #[test]
    fn fading_has_unit_mean() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        let n = 100_000;
        let mean = (0..n).map(|_| rng.sample::<f64, _>(Exp1)).sum::<f64>() / n as f64;
        assert!((0.98..=1.02).contains(&mean), "{mean}");
    }

    #[test]
    fn oversized_kb_is_rejected() {
        let c = GenerationConfig { sbs_kb_size: 11, ..GenerationConfig::default() };
        assert!(matches!(generate(&c), Err(ConfigError::Invalid(_))));
    }

    #[test]
    fn config_toml_round_trip() {
        let c = GenerationConfig::default().with_seed(9);
        let text = c.to_toml();
        assert!(text.contains("p_T = \"1e-1 W\""));
        assert_eq!(GenerationConfig::from_toml(&text).unwrap(), c);
    }

    #[test]
    fn range_accepts_scalar_or_pair() {
        let text = GenerationConfig::default().to_toml().replace("t_max = [2.5, 3.5]", "t_max = 3.0");
        let c = GenerationConfig::from_toml(&text).unwrap();
        assert_eq!(c.t_max, ParamRange::fixed(3.0));
    }
}
