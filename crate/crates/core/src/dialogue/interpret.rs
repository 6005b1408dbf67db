use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::record::{ResponseOption, Topic};

/// Parsed interpretation reply: one option per topic, NA where nothing
/// usable was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interpretation {
    pub options: BTreeMap<Topic, ResponseOption>,
    /// Some topic had no parseable line.
    pub malformed: bool,
}

impl Interpretation {
    pub fn all_na() -> Self {
        Self {
            options: Topic::ALL.into_iter().map(|t| (t, ResponseOption::Na)).collect(),
            malformed: true,
        }
    }

    pub fn get(&self, topic: Topic) -> ResponseOption {
        self.options.get(&topic).copied().unwrap_or(ResponseOption::Na)
    }
}

/// Option phrase that `text` starts with, ignoring case, spacing,
/// underscores and hyphens.
fn leading_option(text: &str) -> Option<ResponseOption> {
    let norm: String = text
        .chars()
        .map(|c| match c {
            '_' | '-' => ' ',
            c => c.to_ascii_lowercase(),
        })
        .collect();
    let words: Vec<&str> = norm
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty())
        .collect();
    let phrases: [(&[&str], ResponseOption); 7] = [
        (&["unwilling", "to", "disclose"], ResponseOption::UnwillingToDisclose),
        (&["unwilling"], ResponseOption::UnwillingToDisclose),
        (&["na"], ResponseOption::Na),
        (&["yes"], ResponseOption::Yes),
        (&["sometimes"], ResponseOption::Sometimes),
        (&["often"], ResponseOption::Often),
        (&["no"], ResponseOption::No),
    ];
    phrases
        .iter()
        .find(|(p, _)| words.len() >= p.len() && words[..p.len()] == **p)
        .map(|(_, o)| *o)
}

/// Reads `topic <n>: <option>` lines anywhere in `reply`. Case-insensitive;
/// prose around the lines is ignored. A repeated topic keeps its last value.
pub fn parse_interpretation(reply: &str) -> Interpretation {
    let mut found: BTreeMap<Topic, ResponseOption> = BTreeMap::new();
    for line in reply.lines() {
        let lower = line.to_ascii_lowercase();
        let mut rest = lower.as_str();
        while let Some(pos) = rest.find("topic") {
            rest = &rest[pos + "topic".len()..];
            let after = rest.trim_start();
            let digits: String = after.chars().take_while(char::is_ascii_digit).collect();
            let Some(topic) = digits.parse().ok().and_then(Topic::from_number) else {
                continue;
            };
            let tail = after[digits.len()..].trim_start();
            let Some(tail) = tail.strip_prefix(':').or_else(|| tail.strip_prefix('=')).or_else(|| tail.strip_prefix('-')) else {
                continue;
            };
            if let Some(option) = leading_option(tail) {
                found.insert(topic, option);
            }
        }
    }
    let malformed = Topic::ALL.iter().any(|t| !found.contains_key(t));
    let options = Topic::ALL
        .into_iter()
        .map(|t| (t, found.get(&t).copied().unwrap_or(ResponseOption::Na)))
        .collect();
    Interpretation { options, malformed }
}

/// Renders the wire format; [`parse_interpretation`] reads it back.
pub fn format_interpretation(options: &BTreeMap<Topic, ResponseOption>) -> String {
    let mut out = String::new();
    for t in Topic::ALL {
        let o = options.get(&t).copied().unwrap_or(ResponseOption::Na);
        out.push_str(&format!("topic {}: {}\n", t.number(), o.slug().replace('_', " ")));
    }
    out
}

/// Items of a numbered list (`1.`, `2)` ...), in order.
pub fn parse_numbered_list(reply: &str) -> Vec<String> {
    reply
        .lines()
        .filter_map(|line| {
            let l = line.trim_start();
            let digits = l.chars().take_while(char::is_ascii_digit).count();
            if digits == 0 {
                return None;
            }
            let rest = &l[digits..];
            let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
            let item = rest.trim();
            (!item.is_empty()).then(|| String::from(item))
        })
        .collect()
}
