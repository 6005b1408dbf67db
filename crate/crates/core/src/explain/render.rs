use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use super::{CounterfactualResult, Field};
use crate::record::ScreeningRecord;

/// One displayed line of an explanation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplanationRow {
    pub field: Field,
    pub title: String,
    pub old: String,
    /// Set only when the field changed.
    pub new: Option<String>,
    pub relevant: bool,
}

/// Rows for age and the eight topics. Without a result every row is plain.
pub fn explanation_rows(x: &ScreeningRecord, result: Option<&CounterfactualResult>) -> Vec<ExplanationRow> {
    Field::all()
        .map(|field| {
            let old = field.value_label(x);
            let new = result
                .filter(|r| r.relevant.contains(&field))
                .map(|r| field.value_label(&r.x_final));
            ExplanationRow {
                field,
                title: field.title().into(),
                old: old.into(),
                relevant: new.is_some(),
                new: new.map(Into::into),
            }
        })
        .collect()
}

fn header(predicted: bool, probability: f64) -> String {
    let class = if predicted { "Presence" } else { "Absence" };
    format!("{class} of PPD ({:.2}%)", probability * 100.0)
}

/// Header with the predicted class and its probability, a blank line, then
/// one line per field. Changed fields are bold and show `old -> new`.
pub fn render_explanation(
    x: &ScreeningRecord,
    result: Option<&CounterfactualResult>,
    predicted: bool,
    probability: f64,
) -> String {
    let mut out = header(predicted, probability);
    out.push_str("\n\n");
    for row in explanation_rows(x, result) {
        match &row.new {
            Some(new) => {
                let _ = writeln!(out, "**{}**: {} -> {}", row.title, row.old, new);
            }
            None => {
                let _ = writeln!(out, "{}: {}", row.title, row.old);
            }
        }
    }
    out
}

/// Shown when the search could not flip the prediction.
pub fn render_not_found(predicted: bool, probability: f64) -> String {
    format!(
        "{}\n\nNo small change to these answers alters the assessment, so no single factor stands out.\n",
        header(predicted, probability)
    )
}
