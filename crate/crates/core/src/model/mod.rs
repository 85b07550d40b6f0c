//! Network model: base stations, mobile devices, knowledge classes, channel
//! gains, and the closed-form rate, timing and GESTR expressions.
//!
//! Indexing conventions used throughout the crate:
//! - mobile devices and subchannels are 0-based;
//! - base station `0` is the MBS, `1..=J` are the SBSs;
//! - per-link decision vectors (`a`, `b`) are ordered by ascending class id
//!   over the link's mismatched classes, see [`KnowledgeSplit::mismatched`].

mod accuracy;
mod physics;
pub mod units;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use accuracy::{curve, AccuracyModel, SignConvention, INVERSION_TOLERANCE, MONOTONICITY_GRID};
pub use physics::{
    access_rate, backhaul_rate, extraction_grid, gestr, meets_delay, shannon_rate, timing, LinkContext,
    MismatchedClass, TimingBreakdown, DELAY_SLACK,
};

pub type ClassId = u32;

pub const MBS: usize = 0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("accuracy parameters must be finite and non-negative, got {0:?}")]
    InvalidAccuracyParams([f64; 4]),
    #[error("accuracy curve {theta:?} is not strictly increasing near xi = {at}")]
    AccuracyNotIncreasing { theta: [f64; 4], at: f64 },
    #[error("extraction ratio {0} is outside [0, 1]")]
    ExtractionRatioOutOfRange(f64),
    #[error("accuracy threshold {threshold} exceeds the best attainable accuracy {max}")]
    AccuracyUnattainable { threshold: f64, max: f64 },
    #[error("index out of range: {what} {index} (have {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },
    #[error("backhaul rate is only defined towards an SBS (got bs {0})")]
    BackhaulToMbs(usize),
    #[error("decision vectors have length {got}, link has {expected} mismatched classes")]
    DecisionLength { expected: usize, got: usize },
    #[error("class {class} must be uploaded by the device (b = 1)")]
    UploadRequired { class: ClassId },
    #[error("no payload is transmitted on this link, GESTR is undefined")]
    Degenerate,
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Subchannel bandwidth in Hz.
    #[serde(rename = "W")]
    pub bandwidth: f64,
    /// Receiver noise power in Watts.
    #[serde(with = "units::power")]
    pub sigma2: f64,
    #[serde(rename = "K")]
    pub num_subchannels: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub position: [f64; 2],
    /// Cloudlet computing speed in CPU cycles per second.
    #[serde(rename = "f_C")]
    pub compute_speed: f64,
    /// MBS transmit power towards each SBS (indexed by `j - 1`). Present only on the MBS.
    #[serde(rename = "p_T_0j", default, skip_serializing_if = "Option::is_none", with = "units::power_list")]
    pub backhaul_tx_power: Option<Vec<f64>>,
    pub kb_classes: BTreeSet<ClassId>,
}

/// Per-class task data of one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDemand {
    pub class: ClassId,
    /// Requested source data, bits.
    #[serde(rename = "d_T")]
    pub source_bits: f64,
    /// Knowledge data, bits.
    #[serde(rename = "d_K")]
    pub knowledge_bits: f64,
    /// Amount of semantic information, suts.
    #[serde(rename = "I")]
    pub semantic_info: f64,
    /// Computing load, CPU cycles.
    #[serde(rename = "c")]
    pub compute_load: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MobileDevice {
    pub id: usize,
    pub position: [f64; 2],
    #[serde(rename = "p_T", with = "units::power")]
    pub tx_power: f64,
    pub eps_th: f64,
    /// Maximum delay tolerance, seconds.
    pub t_max: f64,
    /// Required classes, sorted by class id.
    pub classes: Vec<ClassDemand>,
}

impl MobileDevice {
    pub fn required_classes(&self) -> impl Iterator<Item = ClassId> + '_ {
        self.classes.iter().map(|c| c.class)
    }

    pub fn demand(&self, class: ClassId) -> Option<&ClassDemand> {
        self.classes.binary_search_by_key(&class, |c| c.class).ok().map(|n| &self.classes[n])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGains {
    /// Access gains `[md][bs][subchannel]`.
    #[serde(rename = "g")]
    pub access: Vec<Vec<Vec<f64>>>,
    /// Backhaul gains `[md][sbs - 1][subchannel]` from the MBS to the SBS
    /// serving the device.
    #[serde(rename = "g0j")]
    pub backhaul: Vec<Vec<Vec<f64>>>,
}

/// Classes required by device `i`, split by where their knowledge lives
/// relative to BS `j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct KnowledgeSplit {
    pub matched: Vec<ClassId>,
    /// Mismatched at `j` but stored at the MBS; only non-empty for `j != 0`.
    pub shared_at_mbs: Vec<ClassId>,
    pub upload_only: Vec<ClassId>,
}

impl KnowledgeSplit {
    /// Mismatched classes in decision-vector order (ascending class id).
    pub fn mismatched(&self) -> Vec<MismatchedClass> {
        let mut out: Vec<MismatchedClass> = self
            .shared_at_mbs
            .iter()
            .map(|&class| MismatchedClass { class, via_mbs: true })
            .chain(self.upload_only.iter().map(|&class| MismatchedClass { class, via_mbs: false }))
            .collect();
        out.sort_by_key(|m| m.class);
        out
    }

    pub fn num_mismatched(&self) -> usize {
        self.shared_at_mbs.len() + self.upload_only.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub radio: RadioParams,
    pub accuracy: AccuracyModel,
    /// Exponent of the semantic computing-load ratio `xi^-rho`.
    pub rho: f64,
    pub base_stations: Vec<BaseStation>,
    pub mobile_devices: Vec<MobileDevice>,
    pub gains: ChannelGains,
}

/// One (device, base station, subchannel) triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Link {
    pub md: usize,
    pub bs: usize,
    pub subchannel: usize,
}

impl Link {
    pub fn new(md: usize, bs: usize, subchannel: usize) -> Self {
        Link { md, bs, subchannel }
    }
}

fn check_index(what: &'static str, index: usize, len: usize) -> Result<(), ModelError> {
    if index < len {
        Ok(())
    } else {
        Err(ModelError::IndexOutOfRange { what, index, len })
    }
}

impl Scenario {
    pub fn num_mds(&self) -> usize {
        self.mobile_devices.len()
    }

    /// Number of SBSs (`J`).
    pub fn num_sbs(&self) -> usize {
        self.base_stations.len().saturating_sub(1)
    }

    pub fn num_subchannels(&self) -> usize {
        self.radio.num_subchannels
    }

    pub fn links(&self) -> impl Iterator<Item = Link> + '_ {
        let (mds, bss, ks) = (self.num_mds(), self.base_stations.len(), self.num_subchannels());
        (0..mds).flat_map(move |i| (0..bss).flat_map(move |j| (0..ks).map(move |k| Link::new(i, j, k))))
    }

    pub fn check_link(&self, link: Link) -> Result<(), ModelError> {
        check_index("md", link.md, self.num_mds())?;
        check_index("bs", link.bs, self.base_stations.len())?;
        check_index("subchannel", link.subchannel, self.num_subchannels())
    }

    pub fn knowledge_split(&self, md: usize, bs: usize) -> Result<KnowledgeSplit, ModelError> {
        check_index("md", md, self.num_mds())?;
        check_index("bs", bs, self.base_stations.len())?;
        let at_bs = &self.base_stations[bs].kb_classes;
        let at_mbs = &self.base_stations[MBS].kb_classes;
        let mut split = KnowledgeSplit::default();
        for class in self.mobile_devices[md].required_classes() {
            if at_bs.contains(&class) {
                split.matched.push(class);
            } else if bs != MBS && at_mbs.contains(&class) {
                split.shared_at_mbs.push(class);
            } else {
                split.upload_only.push(class);
            }
        }
        Ok(split)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidScenario(msg));
        let r = &self.radio;
        if !(r.bandwidth > 0.0 && r.bandwidth.is_finite()) {
            return bad(format!("bandwidth W must be positive, got {}", r.bandwidth));
        }
        if !(r.sigma2 > 0.0 && r.sigma2.is_finite()) {
            return bad(format!("noise power must be positive, got {}", r.sigma2));
        }
        if r.num_subchannels == 0 {
            return bad("need at least one subchannel".into());
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad(format!("rho must be positive, got {}", self.rho));
        }
        if self.base_stations.is_empty() {
            return bad("no base stations".into());
        }
        let num_sbs = self.num_sbs();
        for (n, bs) in self.base_stations.iter().enumerate() {
            if bs.id != n {
                return bad(format!("base station at position {n} has id {}", bs.id));
            }
            if !(bs.compute_speed > 0.0 && bs.compute_speed.is_finite()) {
                return bad(format!("bs {n}: f_C must be positive"));
            }
            match (&bs.backhaul_tx_power, n == MBS) {
                (Some(p), true) => {
                    if p.len() != num_sbs || p.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                        return bad(format!("MBS needs {num_sbs} positive backhaul powers"));
                    }
                }
                (None, true) if num_sbs > 0 => return bad("MBS is missing backhaul powers".into()),
                (Some(_), false) => return bad(format!("bs {n}: only the MBS has backhaul power")),
                _ => {}
            }
        }
        for (n, md) in self.mobile_devices.iter().enumerate() {
            if md.id != n {
                return bad(format!("device at position {n} has id {}", md.id));
            }
            if !(md.tx_power > 0.0 && md.tx_power.is_finite()) {
                return bad(format!("md {n}: p_T must be positive"));
            }
            if !(md.eps_th > 0.0 && md.eps_th < 1.0) {
                return bad(format!("md {n}: eps_th must lie in (0, 1), got {}", md.eps_th));
            }
            if !(md.t_max > 0.0) {
                return bad(format!("md {n}: t_max must be positive, got {}", md.t_max));
            }
            if md.classes.windows(2).any(|w| w[0].class >= w[1].class) {
                return bad(format!("md {n}: classes must be strictly increasing by id"));
            }
            for c in &md.classes {
                let vals = [c.source_bits, c.knowledge_bits, c.semantic_info, c.compute_load];
                if vals.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return bad(format!("md {n} class {}: per-class data must be positive", c.class));
                }
            }
        }
        let (mds, bss, ks) = (self.num_mds(), self.base_stations.len(), r.num_subchannels);
        let positive = |v: &f64| *v > 0.0 && v.is_finite();
        let g = &self.gains;
        if g.access.len() != mds
            || g.access.iter().any(|per_bs| {
                per_bs.len() != bss || per_bs.iter().any(|row| row.len() != ks || !row.iter().all(positive))
            })
        {
            return bad(format!("access gains must be a positive {mds}x{bss}x{ks} array"));
        }
        if g.backhaul.len() != mds
            || g.backhaul.iter().any(|per_sbs| {
                per_sbs.len() != num_sbs || per_sbs.iter().any(|row| row.len() != ks || !row.iter().all(positive))
            })
        {
            return bad(format!("backhaul gains must be a positive {mds}x{num_sbs}x{ks} array"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes to TOML")
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioParseError> {
        let scenario: Scenario = toml::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioParseError {
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
    #[error(transparent)]
    Model(#[from] ModelError),
}
