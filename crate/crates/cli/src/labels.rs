//! Labels TSV: `show_channel, show_norm_title, show_duration, page_id, label`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use fanlink_core::evaluation::GoldLabel;
use fanlink_core::{Error, ShowKey};

use crate::error::CliError;

pub const HEADER: &str = "show_channel\tshow_norm_title\tshow_duration\tpage_id\tlabel";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledPair {
    pub show_key: ShowKey,
    pub page_id: String,
    pub label: GoldLabel,
}

pub fn label_name(label: GoldLabel) -> &'static str {
    match label {
        GoldLabel::Unrelated => "unrelated",
        GoldLabel::Related => "related",
        GoldLabel::Best => "best",
    }
}

fn parse_label(s: &str) -> Option<GoldLabel> {
    match s {
        "unrelated" => Some(GoldLabel::Unrelated),
        "related" => Some(GoldLabel::Related),
        "best" => Some(GoldLabel::Best),
        _ => None,
    }
}

/// Parses the TSV. The header line is optional; blank lines are skipped.
/// A pair listed twice keeps its last label, and a second `best` for a
/// show is an error.
pub fn parse(text: &str) -> Result<Vec<LabeledPair>, CliError> {
    let mut pairs: Vec<LabeledPair> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (n == 0 && line.starts_with("show_channel\t")) {
            continue;
        }
        let bad = |msg: &str| {
            CliError::Core(Error::MalformedInput {
                position: format!("labels line {}", n + 1),
                message: msg.to_string(),
            })
        };
        let cols: Vec<&str> = line.split('\t').collect();
        let [channel, title, duration, page, label] = cols[..] else {
            return Err(bad("expected 5 tab-separated columns"));
        };
        let pair = LabeledPair {
            show_key: ShowKey {
                channel: channel.to_string(),
                norm_title: title.to_string(),
                duration_min: duration.parse().map_err(|_| bad("bad duration"))?,
            },
            page_id: page.to_string(),
            label: parse_label(label.trim()).ok_or_else(|| bad("unknown label"))?,
        };
        match pairs
            .iter_mut()
            .find(|p| p.show_key == pair.show_key && p.page_id == pair.page_id)
        {
            Some(existing) => existing.label = pair.label,
            None => pairs.push(pair),
        }
    }
    let mut bests: BTreeMap<&ShowKey, &str> = BTreeMap::new();
    for p in pairs.iter().filter(|p| p.label == GoldLabel::Best) {
        if let Some(prev) = bests.insert(&p.show_key, &p.page_id) {
            return Err(CliError::Core(Error::MalformedInput {
                position: "labels".into(),
                message: format!(
                    "show {} has two best pages ({prev}, {})",
                    p.show_key, p.page_id
                ),
            }));
        }
    }
    Ok(pairs)
}

pub fn read(path: &Path) -> Result<Vec<LabeledPair>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading labels {}", path.display()), e))?;
    parse(&text)
}

pub fn render(pairs: &[LabeledPair]) -> String {
    let mut out = String::from(HEADER);
    out.push('\n');
    for p in pairs {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}",
            p.show_key.channel,
            p.show_key.norm_title,
            p.show_key.duration_min,
            p.page_id,
            label_name(p.label)
        );
    }
    out
}

pub fn gold_map(pairs: &[LabeledPair]) -> BTreeMap<(ShowKey, String), GoldLabel> {
    pairs
        .iter()
        .map(|p| ((p.show_key.clone(), p.page_id.clone()), p.label))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_render() {
        let text = format!("{HEADER}\nBBC HD\tbritain from above\t60\tp01\tbest\n\nBBC HD\tbritain from above\t60\tp02\trelated\n");
        let pairs = parse(&text).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].label, GoldLabel::Best);
        assert_eq!(pairs[0].show_key.duration_min, 60);
        assert_eq!(render(&pairs), text.replace("\n\n", "\n"));
    }

    #[test]
    fn rejects_two_bests() {
        let text = "C\tt\t30\ta\tbest\nC\tt\t30\tb\tbest\n";
        assert!(parse(text).is_err());
    }

    #[test]
    fn later_label_wins() {
        let text = "C\tt\t30\ta\tbest\nC\tt\t30\ta\trelated\n";
        let pairs = parse(text).unwrap();
        assert_eq!(pairs.len(), 1);
        assert_eq!(pairs[0].label, GoldLabel::Related);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(parse("C\tt\t30\ta\n").is_err());
        assert!(parse("C\tt\tx\ta\tbest\n").is_err());
        assert!(parse("C\tt\t30\ta\tmaybe\n").is_err());
    }
}
