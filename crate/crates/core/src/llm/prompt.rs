//! Canonical per-feature prompt and response-score extraction.

use crate::stats::FeatureDescriptor;
use crate::util::format_significant;

pub const DEFAULT_TASK: &str = "classify whether a given file is malware (1) or benign (0)";

/// Score assigned when a response is missing, unparseable or out of range.
pub const FALLBACK_SCORE: f64 = 0.5;

/// The classification objective stated at the top of every prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskContext {
    text: String,
}

impl TaskContext {
    /// `None` for blank text.
    pub fn new(text: impl Into<String>) -> Option<Self> {
        let text = text.into();
        let trimmed = text.trim().trim_end_matches('.').trim();
        (!trimmed.is_empty()).then(|| Self {
            text: trimmed.to_string(),
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

impl Default for TaskContext {
    fn default() -> Self {
        Self {
            text: DEFAULT_TASK.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    pub feature_index: usize,
}

fn num(v: f64) -> String {
    format_significant(v, 6, true)
}

fn list(values: &[f64]) -> String {
    let items: Vec<String> = values.iter().map(|&v| num(v)).collect();
    format!("[{}]", items.join(", "))
}

/// Renders the fixed-order template. Numbers carry six significant digits,
/// so identical descriptors always give byte-identical prompts.
pub fn build_prompt(desc: &FeatureDescriptor, ctx: &TaskContext, feature_index: usize) -> Prompt {
    let text = format!(
        "You are assisting with a binary malware-detection task: {task}.\n\
         Feature name: {name}\n\
         Global statistics: mean={mu}, std={sigma}, median={median}, min={min}, max={max}, IQR={iqr}\n\
         Class-conditional: malware_mean={mu_pos}, benign_mean={mu_neg}, malware_std={sigma_pos}, benign_std={sigma_neg}, mean_difference={delta_mu}\n\
         Representative samples: malware={samples_pos}, benign={samples_neg}\n\
         Respond with a single number between 0 and 1 indicating the importance of this feature for the classification task. Output only the number.",
        task = ctx.text(),
        name = desc.name,
        mu = num(desc.mu),
        sigma = num(desc.sigma),
        median = num(desc.median),
        min = num(desc.min),
        max = num(desc.max),
        iqr = num(desc.iqr),
        mu_pos = num(desc.mu_pos),
        mu_neg = num(desc.mu_neg),
        sigma_pos = num(desc.sigma_pos),
        sigma_neg = num(desc.sigma_neg),
        delta_mu = num(desc.delta_mu),
        samples_pos = list(&desc.samples_pos),
        samples_neg = list(&desc.samples_neg),
    );
    Prompt { text, feature_index }
}

/// First decimal-number token in `text` (optional sign, digits, optional
/// fraction and exponent).
pub fn first_number(text: &str) -> Option<f64> {
    let b = text.as_bytes();
    let digits = |mut i: usize| {
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        i
    };
    let mut i = 0;
    while i < b.len() {
        let starts_here = b[i].is_ascii_digit() || (b[i] == b'.' && i + 1 < b.len() && b[i + 1].is_ascii_digit());
        if !starts_here {
            i += 1;
            continue;
        }
        let start = if i > 0 && (b[i - 1] == b'-' || b[i - 1] == b'+') { i - 1 } else { i };
        let mut end = digits(i);
        if end < b.len() && b[end] == b'.' {
            end = digits(end + 1);
        }
        if end < b.len() && (b[end] == b'e' || b[end] == b'E') {
            let mut e = end + 1;
            if e < b.len() && (b[e] == b'-' || b[e] == b'+') {
                e += 1;
            }
            let after = digits(e);
            if after > e {
                end = after;
            }
        }
        // all bytes in start..end are ASCII, so this slice is on char boundaries
        return text[start..end].parse().ok();
    }
    None
}

/// The accepted score, or `None` when the text holds no number in `[0, 1]`.
pub fn parse_score_checked(text: &str) -> Option<f64> {
    first_number(text).filter(|v| (0.0..=1.0).contains(v))
}

/// Total: any response text maps to a score in `[0, 1]`.
pub fn parse_score(text: &str) -> f64 {
    parse_score_checked(text).unwrap_or(FALLBACK_SCORE)
}

/// Value of `key=` in a rendered prompt, up to the next comma or newline.
pub(crate) fn prompt_field(text: &str, key: &str) -> Option<f64> {
    let pattern = format!("{key}=");
    let start = text.find(&pattern)? + pattern.len();
    let rest = &text[start..];
    let end = rest.find([',', '\n']).unwrap_or(rest.len());
    rest[..end].trim().parse().ok()
}
