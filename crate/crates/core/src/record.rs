//! Domain vocabulary: response options, symptom topics, age buckets and the
//! screening record built from them.

use alloc::collections::BTreeMap;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Interpretation of a user's answer to one symptom topic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseOption {
    Na,
    Yes,
    Sometimes,
    Often,
    No,
    UnwillingToDisclose,
}

impl ResponseOption {
    pub const ALL: [ResponseOption; 6] = [
        ResponseOption::Na,
        ResponseOption::Yes,
        ResponseOption::Sometimes,
        ResponseOption::Often,
        ResponseOption::No,
        ResponseOption::UnwillingToDisclose,
    ];

    /// Canonical slug, used in feature names and config files.
    pub const fn slug(self) -> &'static str {
        match self {
            ResponseOption::Na => "na",
            ResponseOption::Yes => "yes",
            ResponseOption::Sometimes => "sometimes",
            ResponseOption::Often => "often",
            ResponseOption::No => "no",
            ResponseOption::UnwillingToDisclose => "unwilling_to_disclose",
        }
    }

    /// Human-facing label used in rendered explanations.
    pub const fn label(self) -> &'static str {
        match self {
            ResponseOption::Na => "NA",
            ResponseOption::Yes => "Yes",
            ResponseOption::Sometimes => "Sometimes",
            ResponseOption::Often => "Often",
            ResponseOption::No => "No",
            ResponseOption::UnwillingToDisclose => "Unwilling to disclose",
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ResponseOption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown response option `{0}`")]
pub struct UnknownOption(pub alloc::string::String);

impl FromStr for ResponseOption {
    type Err = UnknownOption;

    /// Accepts the slug or the display label, ignoring case and treating
    /// spaces and underscores alike.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: alloc::string::String = s
            .trim()
            .chars()
            .map(|c| if c == ' ' || c == '-' { '_' } else { c.to_ascii_lowercase() })
            .collect();
        ResponseOption::ALL
            .into_iter()
            .find(|o| o.slug() == norm)
            .ok_or_else(|| UnknownOption(s.into()))
    }
}

/// The eight symptom topics, in the order the dialogue asks about them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topic {
    BabyBondingIssues,
    ConcentrationAndDecisionMakingProblems,
    FeelingSadOrTearful,
    FeelingGuilty,
    IrritabilityTowardsTheBabyOrThePartner,
    OverreactingOrLossOfAppetite,
    SuicideBehavior,
    TroubleSleeping,
}

impl Topic {
    pub const ALL: [Topic; 8] = [
        Topic::BabyBondingIssues,
        Topic::ConcentrationAndDecisionMakingProblems,
        Topic::FeelingSadOrTearful,
        Topic::FeelingGuilty,
        Topic::IrritabilityTowardsTheBabyOrThePartner,
        Topic::OverreactingOrLossOfAppetite,
        Topic::SuicideBehavior,
        Topic::TroubleSleeping,
    ];

    pub const fn slug(self) -> &'static str {
        match self {
            Topic::BabyBondingIssues => "baby_bonding_issues",
            Topic::ConcentrationAndDecisionMakingProblems => {
                "concentration_and_decision_making_problems"
            }
            Topic::FeelingSadOrTearful => "feeling_sad_or_tearful",
            Topic::FeelingGuilty => "feeling_guilty",
            Topic::IrritabilityTowardsTheBabyOrThePartner => {
                "irritability_towards_the_baby_or_the_partner"
            }
            Topic::OverreactingOrLossOfAppetite => "overreacting_or_loss_of_appetite",
            Topic::SuicideBehavior => "suicide_behavior",
            Topic::TroubleSleeping => "trouble_sleeping",
        }
    }

    /// Lower-case phrase used inside prompts ("topic 3: feeling sad or tearful").
    pub const fn phrase(self) -> &'static str {
        match self {
            Topic::BabyBondingIssues => "baby bonding issues",
            Topic::ConcentrationAndDecisionMakingProblems => {
                "concentration and decision-making problems"
            }
            Topic::FeelingSadOrTearful => "feeling sad or tearful",
            Topic::FeelingGuilty => "feeling guilty",
            Topic::IrritabilityTowardsTheBabyOrThePartner => {
                "irritability towards the baby or the partner"
            }
            Topic::OverreactingOrLossOfAppetite => "overreacting or loss of appetite",
            Topic::SuicideBehavior => "suicide behavior",
            Topic::TroubleSleeping => "trouble sleeping",
        }
    }

    /// Title used in rendered explanations.
    pub const fn title(self) -> &'static str {
        match self {
            Topic::BabyBondingIssues => "Baby bonding issues",
            Topic::ConcentrationAndDecisionMakingProblems => {
                "Concentration and decision-making problems"
            }
            Topic::FeelingSadOrTearful => "Feeling sad or tearful",
            Topic::FeelingGuilty => "Feeling guilty",
            Topic::IrritabilityTowardsTheBabyOrThePartner => {
                "Irritable towards the baby or the partner"
            }
            Topic::OverreactingOrLossOfAppetite => "Overeating or loss of appetite",
            Topic::SuicideBehavior => "Suicide behavior",
            Topic::TroubleSleeping => "Trouble sleeping",
        }
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    /// 1-based position used by the prompt wire format.
    pub const fn number(self) -> usize {
        self as usize + 1
    }

    pub fn from_number(n: usize) -> Option<Topic> {
        n.checked_sub(1).and_then(|i| Topic::ALL.get(i).copied())
    }
}

impl fmt::Display for Topic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown topic `{0}`")]
pub struct UnknownTopic(pub alloc::string::String);

impl FromStr for Topic {
    type Err = UnknownTopic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Topic::ALL
            .into_iter()
            .find(|topic| topic.slug() == t || topic.phrase().eq_ignore_ascii_case(t))
            .ok_or_else(|| UnknownTopic(s.into()))
    }
}

/// Five-year age interval. Lower bounds are inclusive; the last bucket also
/// includes 50.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AgeBucket {
    #[serde(rename = "25_30")]
    From25To30,
    #[serde(rename = "30_35")]
    From30To35,
    #[serde(rename = "35_40")]
    From35To40,
    #[serde(rename = "40_45")]
    From40To45,
    #[serde(rename = "45_50")]
    From45To50,
}

pub const MIN_AGE: u32 = 25;
pub const MAX_AGE: u32 = 50;

impl AgeBucket {
    pub const ALL: [AgeBucket; 5] = [
        AgeBucket::From25To30,
        AgeBucket::From30To35,
        AgeBucket::From35To40,
        AgeBucket::From40To45,
        AgeBucket::From45To50,
    ];

    pub const fn slug(self) -> &'static str {
        match self {
            AgeBucket::From25To30 => "25_30",
            AgeBucket::From30To35 => "30_35",
            AgeBucket::From35To40 => "35_40",
            AgeBucket::From40To45 => "40_45",
            AgeBucket::From45To50 => "45_50",
        }
    }

    pub const fn label(self) -> &'static str {
        match self {
            AgeBucket::From25To30 => "25-30",
            AgeBucket::From30To35 => "30-35",
            AgeBucket::From35To40 => "35-40",
            AgeBucket::From40To45 => "40-45",
            AgeBucket::From45To50 => "45-50",
        }
    }

    pub const fn lower(self) -> u32 {
        MIN_AGE + 5 * self as u32
    }

    pub const fn index(self) -> usize {
        self as usize
    }

    pub fn previous(self) -> Option<AgeBucket> {
        self.index().checked_sub(1).map(|i| AgeBucket::ALL[i])
    }

    pub fn next(self) -> Option<AgeBucket> {
        AgeBucket::ALL.get(self.index() + 1).copied()
    }
}

impl fmt::Display for AgeBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AgeBucket {
    type Err = RecordError;

    /// Parses `30-35`, `30_35` or a plain integer age (which must lie in range).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if let Some(b) = AgeBucket::ALL
            .into_iter()
            .find(|b| b.label() == t || b.slug() == t)
        {
            return Ok(b);
        }
        let years: u32 = t
            .parse()
            .map_err(|_| RecordError::UnparseableAge(t.into()))?;
        bucket_age(years)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RecordError {
    #[error("missing response for topic `{0}`")]
    MissingTopic(Topic),
    #[error("age {0} is outside [25, 50]")]
    AgeOutOfRange(u32),
    #[error("cannot parse age from `{0}`")]
    UnparseableAge(alloc::string::String),
}

/// Maps an age in `[25, 50]` to its bucket.
pub fn bucket_age(years: u32) -> Result<AgeBucket, RecordError> {
    if !(MIN_AGE..=MAX_AGE).contains(&years) {
        return Err(RecordError::AgeOutOfRange(years));
    }
    let idx = ((years - MIN_AGE) / 5).min(4) as usize;
    Ok(AgeBucket::ALL[idx])
}

/// Clamps to the nearest bucket. The flag is set when clamping happened.
pub fn clamp_age(years: u32) -> (AgeBucket, bool) {
    let clamped = years.clamp(MIN_AGE, MAX_AGE);
    // clamped is always in range
    let bucket = bucket_age(clamped).unwrap_or(AgeBucket::From25To30);
    (bucket, clamped != years)
}

/// One respondent: age bucket, a response for every topic, and the label
/// when known (`true` = PPD present).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ScreeningRecord {
    pub age_bucket: AgeBucket,
    responses: [ResponseOption; 8],
    pub label: Option<bool>,
}

impl ScreeningRecord {
    pub fn new(age_bucket: AgeBucket, responses: [ResponseOption; 8], label: Option<bool>) -> Self {
        Self {
            age_bucket,
            responses,
            label,
        }
    }

    pub fn response(&self, topic: Topic) -> ResponseOption {
        self.responses[topic.index()]
    }

    pub fn set_response(&mut self, topic: Topic, option: ResponseOption) {
        self.responses[topic.index()] = option;
    }

    pub fn responses(&self) -> impl Iterator<Item = (Topic, ResponseOption)> + '_ {
        Topic::ALL.into_iter().map(|t| (t, self.responses[t.index()]))
    }

    pub fn has_na(&self) -> bool {
        self.responses.contains(&ResponseOption::Na)
    }
}

/// Raw age as it arrives from a table cell or a conversation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AgeInput {
    Years(u32),
    Bucket(AgeBucket),
}

/// Unvalidated record: responses may be missing topics and the age may be
/// out of range.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordDraft {
    pub age: AgeInput,
    pub responses: BTreeMap<Topic, ResponseOption>,
    pub label: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidatedRecord {
    pub record: ScreeningRecord,
    pub age_clamped: bool,
}

/// Checks topic totality and buckets the age, clamping out-of-range ages.
pub fn validate_record(draft: &RecordDraft) -> Result<ValidatedRecord, RecordError> {
    let mut responses = [ResponseOption::Na; 8];
    for topic in Topic::ALL {
        responses[topic.index()] = *draft
            .responses
            .get(&topic)
            .ok_or(RecordError::MissingTopic(topic))?;
    }
    let (age_bucket, age_clamped) = match draft.age {
        AgeInput::Years(y) => clamp_age(y),
        AgeInput::Bucket(b) => (b, false),
    };
    Ok(ValidatedRecord {
        record: ScreeningRecord::new(age_bucket, responses, draft.label),
        age_clamped,
    })
}
