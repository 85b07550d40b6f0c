use serde::{Deserialize, Serialize};

use super::{AccuracyModel, ClassDemand, KnowledgeSplit, Link, ModelError, Scenario, MBS};

/// Absolute slack (seconds) applied when checking `t_total <= t_max`.
pub const DELAY_SLACK: f64 = 1e-9;

pub fn meets_delay(t_total: f64, t_max: f64) -> bool {
    t_total <= t_max + DELAY_SLACK
}

/// `W * log2(1 + p * g / sigma2)`.
pub fn shannon_rate(bandwidth: f64, power: f64, gain: f64, noise: f64) -> f64 {
    bandwidth * (power * gain / noise).ln_1p() / std::f64::consts::LN_2
}

/// Uplink rate from device `i` to BS `j` on subchannel `k`, bits/s.
pub fn access_rate(scenario: &Scenario, link: Link) -> Result<f64, ModelError> {
    scenario.check_link(link)?;
    let r = &scenario.radio;
    let gain = scenario.gains.access[link.md][link.bs][link.subchannel];
    Ok(shannon_rate(r.bandwidth, scenario.mobile_devices[link.md].tx_power, gain, r.sigma2))
}

/// Backhaul rate from the MBS to SBS `j` on the subchannel used by device `i`.
pub fn backhaul_rate(scenario: &Scenario, link: Link) -> Result<f64, ModelError> {
    scenario.check_link(link)?;
    if link.bs == MBS {
        return Err(ModelError::BackhaulToMbs(link.bs));
    }
    let r = &scenario.radio;
    let sbs = link.bs - 1;
    let power = scenario.base_stations[MBS]
        .backhaul_tx_power
        .as_ref()
        .and_then(|p| p.get(sbs).copied())
        .ok_or_else(|| ModelError::InvalidScenario("MBS is missing backhaul powers".into()))?;
    let gain = scenario.gains.backhaul[link.md][sbs][link.subchannel];
    Ok(shannon_rate(r.bandwidth, power, gain, r.sigma2))
}

/// Extraction ratios searched for a link: `M + 1` evenly spaced points from
/// `xi_th` to 1 inclusive.
pub fn extraction_grid(xi_th: f64, segments: usize) -> Vec<f64> {
    if segments == 0 {
        return vec![xi_th];
    }
    (0..=segments)
        .map(|m| if m == segments { 1.0 } else { xi_th + (1.0 - xi_th) * m as f64 / segments as f64 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MismatchedClass {
    pub class: super::ClassId,
    /// Knowledge can be downloaded from the MBS over backhaul.
    pub via_mbs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TimingBreakdown {
    pub t_up: f64,
    pub t_down: f64,
    pub t_k: f64,
    pub t_s: f64,
    pub t_b: f64,
    pub t_r: f64,
    pub t_e: f64,
    pub t_total: f64,
}

impl TimingBreakdown {
    /// Air time counted in the GESTR denominator.
    pub fn transmission(&self) -> f64 {
        self.t_k + self.t_s + self.t_b
    }
}

/// Everything about one (i, j, k) triple that the timing and rate
/// expressions need, resolved once.
#[derive(Debug, Clone)]
pub struct LinkContext {
    pub link: Link,
    pub access_rate: f64,
    pub backhaul_rate: Option<f64>,
    pub compute_speed: f64,
    pub rho: f64,
    pub accuracy: AccuracyModel,
    pub eps_th: f64,
    pub t_max: f64,
    pub split: KnowledgeSplit,
    pub mismatched: Vec<MismatchedClass>,
    /// Parallel to `mismatched`.
    pub mismatched_demand: Vec<ClassDemand>,
    pub matched_source_bits: f64,
    pub matched_compute: f64,
    pub matched_info: f64,
}

impl LinkContext {
    pub fn new(scenario: &Scenario, link: Link) -> Result<Self, ModelError> {
        scenario.check_link(link)?;
        let md = &scenario.mobile_devices[link.md];
        let split = scenario.knowledge_split(link.md, link.bs)?;
        let mismatched = split.mismatched();
        let demand = |class| {
            md.demand(class)
                .cloned()
                .ok_or_else(|| ModelError::InvalidScenario(format!("md {} lacks class {class}", link.md)))
        };
        let mismatched_demand = mismatched.iter().map(|m| demand(m.class)).collect::<Result<Vec<_>, _>>()?;
        let (mut matched_source_bits, mut matched_compute, mut matched_info) = (0.0, 0.0, 0.0);
        for &class in &split.matched {
            let d = demand(class)?;
            matched_source_bits += d.source_bits;
            matched_compute += d.compute_load;
            matched_info += d.semantic_info;
        }
        let backhaul_rate = if link.bs == MBS { None } else { Some(backhaul_rate(scenario, link)?) };
        Ok(LinkContext {
            link,
            access_rate: access_rate(scenario, link)?,
            backhaul_rate,
            compute_speed: scenario.base_stations[link.bs].compute_speed,
            rho: scenario.rho,
            accuracy: scenario.accuracy,
            eps_th: md.eps_th,
            t_max: md.t_max,
            split,
            mismatched,
            mismatched_demand,
            matched_source_bits,
            matched_compute,
            matched_info,
        })
    }

    pub fn num_mismatched(&self) -> usize {
        self.mismatched.len()
    }

    /// Semantic computing-load ratio `xi^-rho`; infinite at `xi = 0`.
    pub fn compute_ratio(&self, xi: f64) -> f64 {
        if xi == 0.0 {
            f64::INFINITY
        } else {
            xi.powf(-self.rho)
        }
    }

    fn check_decision(&self, a: &[bool], b: &[bool]) -> Result<(), ModelError> {
        let n = self.mismatched.len();
        if a.len() != n || b.len() != n {
            return Err(ModelError::DecisionLength { expected: n, got: a.len().max(b.len()) });
        }
        for (m, &upload) in self.mismatched.iter().zip(b) {
            if !m.via_mbs && !upload {
                return Err(ModelError::UploadRequired { class: m.class });
            }
        }
        Ok(())
    }

    pub fn timing(&self, a: &[bool], b: &[bool], xi: f64) -> Result<TimingBreakdown, ModelError> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(ModelError::ExtractionRatioOutOfRange(xi));
        }
        self.check_decision(a, b)?;
        let rate = self.access_rate;
        let (mut up_bits, mut down_bits) = (0.0, 0.0);
        let (mut semantic_bits, mut raw_bits) = (self.matched_source_bits, 0.0);
        let (mut semantic_cycles, mut raw_cycles) = (self.matched_compute, 0.0);
        for (n, d) in self.mismatched_demand.iter().enumerate() {
            if a[n] {
                if b[n] {
                    up_bits += d.knowledge_bits;
                } else {
                    down_bits += d.knowledge_bits;
                }
                semantic_bits += d.source_bits;
                semantic_cycles += d.compute_load;
            } else {
                raw_bits += d.source_bits;
                raw_cycles += d.compute_load;
            }
        }
        let t_up = up_bits / rate;
        let t_down = match self.backhaul_rate {
            Some(r0) => down_bits / r0,
            None => 0.0,
        };
        let t_k = t_up + t_down;
        let t_s = xi * semantic_bits / rate;
        let t_b = raw_bits / rate;
        let t_r =
            if semantic_cycles == 0.0 { 0.0 } else { self.compute_ratio(xi) * semantic_cycles / self.compute_speed };
        let t_e = raw_cycles / self.compute_speed;
        Ok(TimingBreakdown { t_up, t_down, t_k, t_s, t_b, t_r, t_e, t_total: t_k + t_s + t_b + t_r + t_e })
    }

    /// Accuracy-weighted information delivered by decision `a` at ratio `xi`.
    pub fn delivered_info(&self, a: &[bool], xi: f64) -> Result<f64, ModelError> {
        let eps = self.accuracy.accuracy(xi)?;
        let (mut semantic, mut raw) = (self.matched_info, 0.0);
        for (d, &sem) in self.mismatched_demand.iter().zip(a) {
            if sem {
                semantic += d.semantic_info;
            } else {
                raw += d.semantic_info;
            }
        }
        Ok(eps * semantic + raw)
    }

    pub fn gestr(&self, a: &[bool], b: &[bool], xi: f64) -> Result<(f64, TimingBreakdown), ModelError> {
        let timing = self.timing(a, b, xi)?;
        let air = timing.transmission();
        if !(air > 0.0) {
            return Err(ModelError::Degenerate);
        }
        Ok((self.delivered_info(a, xi)? / air, timing))
    }
}

pub fn timing(scenario: &Scenario, link: Link, a: &[bool], b: &[bool], xi: f64) -> Result<TimingBreakdown, ModelError> {
    LinkContext::new(scenario, link)?.timing(a, b, xi)
}

/// Generalized effective semantic transmission rate, suts/s.
pub fn gestr(scenario: &Scenario, link: Link, a: &[bool], b: &[bool], xi: f64) -> Result<f64, ModelError> {
    Ok(LinkContext::new(scenario, link)?.gestr(a, b, xi)?.0)
}
