//! Power quantities in configuration files.
//!
//! Powers are written as strings carrying an explicit unit suffix, either
//! `"0.1 W"` or `"-120 dBm"`. Internally everything is stored in Watts.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum UnitError {
    #[error("power value `{0}` is missing a unit suffix (expected `W` or `dBm`)")]
    MissingUnit(String),
    #[error("unknown power unit `{unit}` in `{raw}`")]
    UnknownUnit { raw: String, unit: String },
    #[error("cannot parse number in power value `{0}`")]
    BadNumber(String),
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn parse_power(raw: &str) -> Result<f64, UnitError> {
    let trimmed = raw.trim();
    let split = trimmed
        .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
        .ok_or_else(|| UnitError::MissingUnit(raw.to_string()))?;
    let (number, unit) = trimmed.split_at(split);
    let value: f64 = number.trim().parse().map_err(|_| UnitError::BadNumber(raw.to_string()))?;
    match unit.trim() {
        "W" => Ok(value),
        "mW" => Ok(value * 1e-3),
        "dBm" => Ok(dbm_to_watts(value)),
        other => Err(UnitError::UnknownUnit { raw: raw.to_string(), unit: other.to_string() }),
    }
}

/// Formats Watts with the shortest representation that round-trips.
pub fn format_watts(watts: f64) -> String {
    format!("{watts:e} W")
}

/// `#[serde(with = "power")]` adapter for a single power value.
pub mod power {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(watts: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_watts(*watts))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let raw = String::deserialize(d)?;
        super::parse_power(&raw).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "power_list")]` adapter for an optional list of powers.
pub mod power_list {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<f64>>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|list| list.iter().map(|w| super::format_watts(*w)).collect::<Vec<_>>()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vec<f64>>, D::Error> {
        let raw: Option<Vec<String>> = Option::deserialize(d)?;
        raw.map(|list| list.iter().map(|r| super::parse_power(r).map_err(serde::de::Error::custom)).collect())
            .transpose()
    }
}
