//! Prompt construction for the two language models.
//!
//! The system messages are fixed texts; the user messages are templates
//! filled per active feature. Features absent from the scenario are omitted
//! from the rendered lists.

use crate::world::Feature;

use super::{LanguageContext, LanguageError, PromptPair};

/// System message for the attention model.
pub const ATT_SYSTEM: &str = "You are an expert in autonomous vehicle control analyzing driver interventions. In this task, a human driver has intervened to correct the behavior of a robot car and has provided an explanation of the intervention. Your task is to determine which features are relevant to a given intervention explanation, given the change in feature values of the human trajectory compared to the robot trajectory. Positive values mean that the human increased the feature value.

Note that a feature may be irrelevant even if it has a large change in value. Only output features that are relevant to the intervention explanation.

Output STRICT JSON with the single key 'gate': a list of attention gates scores (one per feature, 0.0 or 1.0). NO other keys.";

/// System message for the preference model.
pub const PREF_SYSTEM: &str = "You are an expert in autonomous vehicle control analyzing driver interventions. In this task, a human driver has intervened to correct the behavior of a robot car and has provided an explanation of the intervention. Your reward function is the sum of the features. You want to maximize the reward function.

Feature values are between 0 and 1. Look at the feature descriptions to understand the scale of the features. Your task is to determine for EACH feature how much in magnitude should the weight of the feature be changed to support the intervention and human preference (mu between 0 and 6), and how confident you are in your decision (confidence between 0 and 1, be conservative), given the change in feature values of the human trajectory compared to the robot trajectory. Positive values mean that the human increased the feature value.

FOR EVERY FEATURE, return ONLY the values in this exact format.

OUTPUT (strict JSON, single line):
{
    'mu': [u1, u2, ... , uN],
    'confidence': [c1, c2, ... , cN]
}";

fn direction_word(change: f64) -> &'static str {
    if change < 0.0 {
        "decreased"
    } else {
        "increased"
    }
}

fn feature_lines(features: &[Feature], dphi: &[f64]) -> String {
    let mut out = String::new();
    for (f, change) in features.iter().zip(dphi) {
        out.push_str(&format!(
            "- {} ({}): feature change after intervention: {:+.3}, the human {} this feature\n",
            f.name(),
            f.description(),
            change,
            direction_word(*change)
        ));
    }
    out
}

fn check_context(ctx: &LanguageContext) -> Result<(), LanguageError> {
    if ctx.utterance.trim().is_empty() {
        return Err(LanguageError::InvalidContext(
            "utterance must be non-empty".into(),
        ));
    }
    let d = ctx.features.len();
    if ctx.dphi.len() != d || ctx.theta_t.len() != d {
        return Err(LanguageError::InvalidContext(format!(
            "context vectors must have length {d} (dphi {}, theta_t {})",
            ctx.dphi.len(),
            ctx.theta_t.len()
        )));
    }
    Ok(())
}

/// Render the attention prompt for a context.
pub fn build_att_prompt(ctx: &LanguageContext) -> Result<PromptPair, LanguageError> {
    check_context(ctx)?;
    let user = format!(
        "Human Driver Intervention Explanation:\n{}\n\nCurrent Feature Values:\n{}\nFor absolutely EVERY feature above, determine:\n1. How relevant is this feature to the intervention? (gate score 0.0 or 1.0)",
        ctx.utterance,
        feature_lines(&ctx.features, &ctx.dphi),
    );
    Ok(PromptPair {
        system: ATT_SYSTEM.to_string(),
        user,
    })
}

/// Render the preference prompt. The gate from the attention step is
/// validated against the context (the template itself lists features and
/// current weights).
pub fn build_pref_prompt(ctx: &LanguageContext, gate: &[f64]) -> Result<PromptPair, LanguageError> {
    check_context(ctx)?;
    if gate.len() != ctx.features.len() {
        return Err(LanguageError::InvalidContext(format!(
            "gate length {} does not match feature count {}",
            gate.len(),
            ctx.features.len()
        )));
    }
    let mut weights = String::new();
    for (f, w) in ctx.features.iter().zip(&ctx.theta_t) {
        weights.push_str(&format!("- {}: {:.3}\n", f.name(), w));
    }
    let user = format!(
        "Human Driver Intervention Explanation:\n{}\n\nCurrent Feature Values:\n{}\nCurrent Reward Weights after a Physical Intervention Update:\n{}\nNow, for absolutely EVERY feature (considering the explanation, feature changes, and current weights):\n1. What absolute change with direction (this will be your 'mu') would support this intervention? Consider the scale of the features, and the current weights.\n2. How confident are you in your decision? (confidence score 0.0-1.0)",
        ctx.utterance,
        feature_lines(&ctx.features, &ctx.dphi),
        weights,
    );
    Ok(PromptPair {
        system: PREF_SYSTEM.to_string(),
        user,
    })
}
