//! One-hot feature space and streaming variance-threshold selection.
//!
//! Feature names are part of the public contract: `<topic-slug>__<option>`
//! for the 48 topic indicators and `age__<bucket>` for the 5 age indicators,
//! e.g. `feeling_sad_or_tearful__sometimes` or `age__30_35`.

mod selection;
mod variance;

pub use selection::{
    compute_threshold, percentile, select_features, FeatureSelector, SelectionError, SelectorConfig,
};
pub use variance::VarianceState;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::record::{AgeBucket, ResponseOption, ScreeningRecord, Topic};

pub const TOPIC_FEATURE_COUNT: usize = 48;
pub const FEATURE_COUNT: usize = TOPIC_FEATURE_COUNT + 5;

/// One Boolean indicator of the encoded space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Topic(Topic, ResponseOption),
    Age(AgeBucket),
}

impl Feature {
    /// Dense index in `0..FEATURE_COUNT`, consistent with `Ord`.
    pub const fn index(self) -> usize {
        match self {
            Feature::Topic(t, o) => t.index() * 6 + o.index(),
            Feature::Age(b) => TOPIC_FEATURE_COUNT + b.index(),
        }
    }

    pub fn from_index(i: usize) -> Option<Feature> {
        if i < TOPIC_FEATURE_COUNT {
            Some(Feature::Topic(Topic::ALL[i / 6], ResponseOption::ALL[i % 6]))
        } else {
            AgeBucket::ALL
                .get(i - TOPIC_FEATURE_COUNT)
                .map(|&b| Feature::Age(b))
        }
    }

    pub fn all() -> impl Iterator<Item = Feature> {
        (0..FEATURE_COUNT).filter_map(Feature::from_index)
    }

    pub fn name(self) -> String {
        match self {
            Feature::Topic(t, o) => format!("{}__{}", t.slug(), o.slug()),
            Feature::Age(b) => format!("age__{}", b.slug()),
        }
    }
}

/// The full registry of feature names, in index order.
pub fn feature_names() -> Vec<String> {
    Feature::all().map(Feature::name).collect()
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown feature name `{0}`")]
pub struct UnknownFeature(pub String);

impl FromStr for Feature {
    type Err = UnknownFeature;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || UnknownFeature(s.into());
        let (group, value) = s.split_once("__").ok_or_else(err)?;
        if group == "age" {
            return AgeBucket::ALL
                .into_iter()
                .find(|b| b.slug() == value)
                .map(Feature::Age)
                .ok_or_else(err);
        }
        let topic = Topic::ALL
            .into_iter()
            .find(|t| t.slug() == group)
            .ok_or_else(err)?;
        let option = ResponseOption::ALL
            .into_iter()
            .find(|o| o.slug() == value)
            .ok_or_else(err)?;
        Ok(Feature::Topic(topic, option))
    }
}

impl Serialize for Feature {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Feature {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Sparse feature map. A feature missing from the map reads as 0.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EncodedSample(BTreeMap<Feature, f64>);

impl EncodedSample {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, feature: Feature) -> f64 {
        self.0.get(&feature).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, feature: Feature) -> bool {
        self.0.contains_key(&feature)
    }

    pub fn insert(&mut self, feature: Feature, value: f64) {
        self.0.insert(feature, value);
    }

    pub fn remove(&mut self, feature: Feature) -> Option<f64> {
        self.0.remove(&feature)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Feature, f64)> + '_ {
        self.0.iter().map(|(&f, &v)| (f, v))
    }

    pub fn features(&self) -> impl Iterator<Item = Feature> + '_ {
        self.0.keys().copied()
    }

    /// Features with a non-zero value.
    pub fn active(&self) -> impl Iterator<Item = Feature> + '_ {
        self.0.iter().filter(|(_, &v)| v != 0.0).map(|(&f, _)| f)
    }

    pub fn retain(&mut self, mut keep: impl FnMut(Feature, f64) -> bool) {
        self.0.retain(|&f, v| keep(f, *v));
    }
}

impl FromIterator<(Feature, f64)> for EncodedSample {
    fn from_iter<I: IntoIterator<Item = (Feature, f64)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// One-hot expansion of a record over the whole 53-feature space: every
/// option indicator of every topic and every age indicator is present, with
/// exactly one 1 per group.
pub fn encode_record(record: &ScreeningRecord) -> EncodedSample {
    let mut out = BTreeMap::new();
    for (topic, answer) in record.responses() {
        for option in ResponseOption::ALL {
            let v = if option == answer { 1.0 } else { 0.0 };
            out.insert(Feature::Topic(topic, option), v);
        }
    }
    for bucket in AgeBucket::ALL {
        let v = if bucket == record.age_bucket { 1.0 } else { 0.0 };
        out.insert(Feature::Age(bucket), v);
    }
    EncodedSample(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> ScreeningRecord {
        let mut r = ScreeningRecord::new(AgeBucket::From30To35, [ResponseOption::No; 8], None);
        r.set_response(Topic::FeelingSadOrTearful, ResponseOption::Sometimes);
        r
    }

    #[test]
    fn names_are_unique_and_round_trip() {
        let names = feature_names();
        assert_eq!(names.len(), FEATURE_COUNT);
        assert_eq!(FEATURE_COUNT, 53);
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 53);
        for (i, f) in Feature::all().enumerate() {
            assert_eq!(f.index(), i);
            assert_eq!(f.name().parse::<Feature>(), Ok(f));
        }
        assert_eq!(
            Feature::Topic(Topic::FeelingSadOrTearful, ResponseOption::Sometimes).name(),
            "feeling_sad_or_tearful__sometimes"
        );
        assert_eq!(Feature::Age(AgeBucket::From45To50).name(), "age__45_50");
        assert!("age__50_55".parse::<Feature>().is_err());
        assert!("sleep__yes".parse::<Feature>().is_err());
    }

    #[test]
    fn one_hot_for_sad_sometimes() {
        let s = encode_record(&record());
        let t = Topic::FeelingSadOrTearful;
        assert_eq!(s.get(Feature::Topic(t, ResponseOption::Sometimes)), 1.0);
        for o in ResponseOption::ALL {
            if o != ResponseOption::Sometimes {
                assert_eq!(s.get(Feature::Topic(t, o)), 0.0);
            }
        }
    }

    #[test]
    fn group_sums() {
        let s = encode_record(&record());
        let topic_sum: f64 = s
            .iter()
            .filter(|(f, _)| matches!(f, Feature::Topic(..)))
            .map(|(_, v)| v)
            .sum();
        let age_sum: f64 = s
            .iter()
            .filter(|(f, _)| matches!(f, Feature::Age(_)))
            .map(|(_, v)| v)
            .sum();
        assert_eq!(topic_sum, 8.0);
        assert_eq!(age_sum, 1.0);
        assert_eq!(s.len(), FEATURE_COUNT);
    }

    #[test]
    fn single_topic_change_differs_in_two_features() {
        let a = record();
        let mut b = a.clone();
        b.set_response(Topic::TroubleSleeping, ResponseOption::Often);
        let (ea, eb) = (encode_record(&a), encode_record(&b));
        let diff = Feature::all().filter(|&f| ea.get(f) != eb.get(f)).count();
        assert_eq!(diff, 2);
        assert_eq!(encode_record(&a), ea);
    }
}
