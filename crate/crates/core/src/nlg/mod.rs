//! Sentences from data facts.
//!
//! Each fact becomes one templated sentence along with its key messages:
//! variable names, values and pattern words. Spans locate those messages in
//! the text by exact match and are recomputed whenever the text changes.

mod refine;

use serde::{Deserialize, Serialize};

use crate::dataset::format_number;
use crate::facts::{DataFact, Direction, ExtremeKind, FactParams, Side, Step};
use crate::intent::{ExpansionMode, FactType};

pub use refine::{
    build_prompt, refine_card, HttpRefiner, PromptKind, RefineError, Refiner, RefinerConfig, StubRefiner, MERGE_PROMPT,
    POLISH_PROMPT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum MessageKind {
    Variable,
    Value,
    Pattern,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyMessage {
    pub text: String,
    pub kind: MessageKind,
}

/// Character range `[start, end)` of a key message in a text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub kind: MessageKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Sentence {
    pub fact_type: FactType,
    pub text: String,
    pub key_messages: Vec<KeyMessage>,
    pub spans: Vec<Span>,
}

/// Text of one documentation card with its highlighted key messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CardText {
    pub text: String,
    pub key_messages: Vec<KeyMessage>,
    pub spans: Vec<Span>,
}

impl CardText {
    /// Replaces the text and relocates the key messages in it.
    pub fn with_text(&self, text: String) -> CardText {
        let (spans, _) = highlight_key_messages(&text, &self.key_messages);
        CardText {
            text,
            key_messages: self.key_messages.clone(),
            spans,
        }
    }
}

fn is_word_char(c: Option<char>) -> bool {
    c.is_some_and(char::is_alphanumeric)
}

/// Locates each key message in `text`.
///
/// Longer messages are placed first. Each message takes its first occurrence
/// that sits on word boundaries and does not overlap an earlier span.
/// Returns the spans sorted by position and the messages that could not be
/// placed.
pub fn highlight_key_messages(text: &str, messages: &[KeyMessage]) -> (Vec<Span>, Vec<KeyMessage>) {
    let chars: Vec<char> = text.chars().collect();
    let mut order: Vec<&KeyMessage> = Vec::new();
    for m in messages {
        if !m.text.is_empty() && !order.iter().any(|o| o.text == m.text) {
            order.push(m);
        }
    }
    order.sort_by_key(|m| std::cmp::Reverse(m.text.chars().count()));
    let mut spans: Vec<Span> = Vec::new();
    let mut missing = Vec::new();
    for m in order {
        let needle: Vec<char> = m.text.chars().collect();
        let found = (0..=chars.len().saturating_sub(needle.len()))
            .filter(|&i| chars.len() >= needle.len() && chars[i..i + needle.len()] == needle[..])
            .filter(|&i| {
                let before = if i == 0 { None } else { Some(chars[i - 1]) };
                let after = chars.get(i + needle.len()).copied();
                let starts_word = is_word_char(needle.first().copied());
                let ends_word = is_word_char(needle.last().copied());
                !(starts_word && is_word_char(before)) && !(ends_word && is_word_char(after))
            })
            .find(|&i| {
                let end = i + needle.len();
                spans.iter().all(|s| end <= s.start || i >= s.end)
            });
        match found {
            Some(start) => spans.push(Span {
                start,
                end: start + needle.len(),
                kind: m.kind,
            }),
            None => {
                log::debug!("key message {:?} not found in text", m.text);
                missing.push(m.clone());
            }
        }
    }
    spans.sort_by_key(|s| s.start);
    (spans, missing)
}

fn num(v: f64) -> String {
    format_number(v)
}

fn percent(share: f64) -> String {
    format!("{:.1}%", share * 100.0)
}

fn ordinal(n: usize) -> String {
    let suffix = match (n % 10, n % 100) {
        (_, 11..=13) => "th",
        (1, _) => "st",
        (2, _) => "nd",
        (3, _) => "rd",
        _ => "th",
    };
    format!("{n}{suffix}")
}

/// "a", "a and b", "a, b and c".
fn join_list(parts: &[String]) -> String {
    match parts {
        [] => String::new(),
        [only] => only.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

struct Builder {
    text: String,
    messages: Vec<KeyMessage>,
}

impl Builder {
    fn new() -> Builder {
        Builder {
            text: String::new(),
            messages: Vec::new(),
        }
    }

    fn plain(&mut self, s: &str) -> &mut Builder {
        self.text.push_str(s);
        self
    }

    fn key(&mut self, s: &str, kind: MessageKind) -> &mut Builder {
        self.text.push_str(s);
        self.messages.push(KeyMessage {
            text: s.to_string(),
            kind,
        });
        self
    }

    fn var(&mut self, s: &str) -> &mut Builder {
        self.key(s, MessageKind::Variable)
    }

    fn val(&mut self, s: &str) -> &mut Builder {
        self.key(s, MessageKind::Value)
    }

    fn pat(&mut self, s: &str) -> &mut Builder {
        self.key(s, MessageKind::Pattern)
    }
}

fn step_verb(step: Step) -> &'static str {
    match step {
        Step::Up => "rising",
        Step::Down => "falling",
        Step::Flat => "holding steady",
    }
}

fn difference_object(b: &Side, out: &mut Builder) {
    if b.row.is_some() {
        out.plain("that of ").var(&b.label);
    } else {
        out.plain(&b.label);
    }
    out.plain(" (").val(&num(b.value)).plain(")");
}

fn realize_into(fact: &DataFact, out: &mut Builder) {
    let measure = fact.measure.as_str();
    match &fact.params {
        FactParams::Trend {
            series,
            direction,
            slope,
            start,
            end,
            segments,
        } => {
            out.plain("The ").var(measure);
            if let Some(s) = series {
                out.plain(" of ").var(s);
            }
            let all_flat = segments.iter().all(|s| s.step == Step::Flat);
            match direction {
                Direction::Increasing | Direction::Decreasing => {
                    let word = if *direction == Direction::Increasing {
                        "increased"
                    } else {
                        "decreased"
                    };
                    out.plain(" ").pat(word).plain(" from ").val(&num(start.value));
                    out.plain(" to ").val(&num(end.value));
                    out.plain(" between ")
                        .val(&start.label)
                        .plain(" and ")
                        .val(&end.label)
                        .plain(".");
                }
                Direction::Wavering if all_flat => {
                    out.plain(" ").pat("stayed").plain(" at ").val(&num(start.value));
                    out.plain(" between ")
                        .val(&start.label)
                        .plain(" and ")
                        .val(&end.label)
                        .plain(".");
                }
                Direction::Wavering => {
                    let overall = if *slope > 0.0 {
                        "increasing"
                    } else if *slope < 0.0 {
                        "decreasing"
                    } else {
                        "level overall"
                    };
                    out.plain(" was ").pat("wavering").plain(" and ").pat(overall);
                    out.plain(" between ").val(&start.label).plain(" and ").val(&end.label);
                    if segments.len() > 1 {
                        let parts: Vec<String> = segments
                            .iter()
                            .map(|s| format!("{} from {} to {}", step_verb(s.step), s.from, s.to))
                            .collect();
                        out.plain(", ").plain(&join_list(&parts));
                    }
                    out.plain(".");
                }
            }
        }
        FactParams::Extreme {
            item,
            kind,
            context_label,
        } => {
            if let Some(ctx) = context_label {
                out.plain("Among ").var(ctx).plain(", ");
            }
            let word = match kind {
                ExtremeKind::Max => "largest",
                ExtremeKind::Min => "smallest",
            };
            out.var(&item.label)
                .plain(" has the ")
                .pat(word)
                .plain(" ")
                .var(measure);
            out.plain(" (").val(&num(item.value)).plain(").");
        }
        FactParams::Outlier { items, fences } => {
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.plain(if i + 1 == items.len() { " and " } else { ", " });
                }
                out.var(&item.label).plain(" (").val(&num(item.value)).plain(")");
            }
            if items.len() == 1 {
                out.plain(" is an ").pat("outlier");
            } else {
                out.plain(" are ").pat("outliers");
            }
            out.plain(" in ").var(measure).plain(", outside the range of ");
            out.val(&num(fences.lower))
                .plain(" to ")
                .val(&num(fences.upper))
                .plain(".");
        }
        FactParams::Difference {
            a,
            b,
            delta,
            whole_ratio,
            percent: pct,
            ..
        } => {
            out.plain("The ").var(measure).plain(" of ").var(&a.label);
            out.plain(" (").val(&num(a.value)).plain(") is ");
            if let Some(k) = whole_ratio {
                out.pat(&format!("{} times", crate::facts::ratio_word(*k))).plain(" ");
                difference_object(b, out);
            } else if *delta == 0.0 {
                out.pat("equal").plain(" to ");
                difference_object(b, out);
            } else {
                let word = if *delta > 0.0 { "more" } else { "less" };
                out.val(&num(delta.abs())).plain(" ").pat(word).plain(" than ");
                difference_object(b, out);
                if let Some(p) = pct {
                    let dir = if *delta > 0.0 { "higher" } else { "lower" };
                    out.plain(", ").val(&format!("{:.1}%", p.abs())).plain(" ").pat(dir);
                }
            }
            out.plain(".");
        }
        FactParams::Rank { top, last, of } => {
            out.var(&top.label).plain(" ranks ").val(&ordinal(top.position));
            if let Some(l) = last {
                out.plain(" and ")
                    .var(&l.label)
                    .plain(" ranks ")
                    .val(&ordinal(l.position));
            }
            out.plain(" of ")
                .val(&of.to_string())
                .plain(" items by ")
                .var(measure)
                .plain(".");
        }
        FactParams::Proportion { shares, .. } => {
            for (i, share) in shares.iter().enumerate() {
                if i > 0 {
                    out.plain(if i + 1 == shares.len() { " and " } else { ", " });
                }
                out.var(&share.label);
                out.plain(if i == 0 { " accounts for " } else { " for " });
                out.val(&percent(share.share));
            }
            out.plain(" of the total ").var(measure).plain(".");
        }
        FactParams::Distribution {
            min,
            q1,
            median,
            q3,
            max,
            mean,
            correlation,
            ..
        } => {
            out.plain("The ").var(measure).plain(" ranges from ").val(&num(*min));
            out.plain(" to ")
                .val(&num(*max))
                .plain(" with a median of ")
                .val(&num(*median));
            out.plain(", the middle half lying between ")
                .val(&num(*q1))
                .plain(" and ")
                .val(&num(*q3));
            out.plain(" and an average of ").val(&num(*mean)).plain(".");
            if let Some(r) = correlation {
                let word = if *r > 0.0 {
                    "positively correlated"
                } else if *r < 0.0 {
                    "negatively correlated"
                } else {
                    "uncorrelated"
                };
                out.plain(" It is ").pat(word).plain(" with ").var(&fact.breakdown);
                out.plain(" (r = ").val(&format!("{r:.2}")).plain(").");
            }
        }
        FactParams::Value { items } => {
            for (i, item) in items.iter().enumerate() {
                if i == 0 {
                    out.var(&item.label).plain(" has a ").var(measure).plain(" of ");
                } else {
                    out.plain(if i + 1 == items.len() { " and " } else { ", " });
                    out.var(&item.label).plain(" of ");
                }
                out.val(&num(item.value));
            }
            out.plain(".");
        }
    }
}

/// One sentence for one fact, with spans for its key messages.
pub fn realize_fact(fact: &DataFact) -> Sentence {
    let mut b = Builder::new();
    realize_into(fact, &mut b);
    let (spans, _) = highlight_key_messages(&b.text, &b.messages);
    Sentence {
        fact_type: fact.fact_type(),
        text: b.text,
        key_messages: b.messages,
        spans,
    }
}

/// Lead-in for cards that describe several selected items.
pub fn selection_prefix(count: usize) -> String {
    format!("Among the selected {count} items, ")
}

/// Joins sentences into card text in fact-priority order.
///
/// Selections of several items read as their own dataset get a lead-in
/// naming the item count.
pub fn compose_card(sentences: &[Sentence], selected: usize, mode: &ExpansionMode) -> CardText {
    let mut ordered: Vec<&Sentence> = sentences.iter().collect();
    ordered.sort_by_key(|s| s.fact_type);
    let mut parts: Vec<String> = ordered.iter().map(|s| s.text.clone()).collect();
    if selected > 1 && mode.counts_items() {
        if let Some(first) = parts.first_mut() {
            let body = match first.strip_prefix("The ") {
                Some(rest) => format!("the {rest}"),
                None => first.clone(),
            };
            *first = format!("{}{body}", selection_prefix(selected));
        }
    }
    let text = parts.join(" ");
    let mut key_messages: Vec<KeyMessage> = Vec::new();
    for m in ordered.iter().flat_map(|s| &s.key_messages) {
        if !key_messages.contains(m) {
            key_messages.push(m.clone());
        }
    }
    let (spans, _) = highlight_key_messages(&text, &key_messages);
    CardText {
        text,
        key_messages,
        spans,
    }
}
