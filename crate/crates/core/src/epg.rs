//! XMLTV ingestion and aggregation of programme records into unique shows.
//!
//! Listings repeat heavily on a daily and weekly basis, so records are
//! grouped on the `(channel, normalized title, duration)` tuple before any
//! page lookup happens.

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;

use chrono::NaiveDate;
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MINUTES_PER_DAY: u32 = 1440;

/// One `<programme>` entry of an XMLTV listing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpgRecord {
    pub id: String,
    pub day: NaiveDate,
    pub title: String,
    pub category: String,
    /// Minutes after midnight.
    pub start: u32,
    /// Minutes after midnight.
    pub stop: u32,
    pub channel: String,
    pub subtitle: Option<String>,
    pub description: Option<String>,
}

impl EpgRecord {
    pub fn duration(&self) -> u32 {
        duration(self.start, self.stop)
    }

    pub fn key(&self) -> ShowKey {
        ShowKey {
            channel: self.channel.trim().to_string(),
            norm_title: normalize_title(&self.title),
            duration_min: self.duration(),
        }
    }
}

/// Unique identifier of a show.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ShowKey {
    pub channel: String,
    pub norm_title: String,
    pub duration_min: u32,
}

impl fmt::Display for ShowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}|{}", self.channel, self.norm_title, self.duration_min)
    }
}

/// A group of EPG records sharing one [`ShowKey`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Show {
    pub key: ShowKey,
    /// Raw title of the first record seen for this key.
    pub display_title: String,
    pub record_ids: Vec<String>,
    /// Longest description among the member records.
    pub description: Option<String>,
    /// Most frequent category among the member records.
    pub category: String,
}

/// Casefolds, trims, and collapses internal whitespace runs to one space.
pub fn normalize_title(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Programme length in minutes. A stop time at or before the start time
/// wraps past midnight, so equal times mean a full day.
pub fn duration(start: u32, stop: u32) -> u32 {
    if stop > start {
        stop - start
    } else {
        stop + MINUTES_PER_DAY - start
    }
}

/// Groups records by [`ShowKey`], keeping first-appearance order.
pub fn aggregate(records: &[EpgRecord]) -> Vec<Show> {
    struct Group<'a> {
        show: Show,
        categories: Vec<&'a str>,
    }

    let mut slots: HashMap<ShowKey, usize> = HashMap::new();
    let mut groups: Vec<Group<'_>> = Vec::new();

    for rec in records {
        let key = rec.key();
        let idx = *slots.entry(key.clone()).or_insert_with(|| {
            groups.push(Group {
                show: Show {
                    key,
                    display_title: rec.title.clone(),
                    record_ids: Vec::new(),
                    description: None,
                    category: String::new(),
                },
                categories: Vec::new(),
            });
            groups.len() - 1
        });
        let group = &mut groups[idx];
        group.show.record_ids.push(rec.id.clone());
        if let Some(desc) = &rec.description {
            let longer = group
                .show
                .description
                .as_ref()
                .is_none_or(|cur| desc.chars().count() > cur.chars().count());
            if longer {
                group.show.description = Some(desc.clone());
            }
        }
        if !rec.category.trim().is_empty() {
            group.categories.push(rec.category.trim());
        }
    }

    groups
        .into_iter()
        .map(|mut g| {
            g.show.category = mode_category(&g.categories);
            g.show
        })
        .collect()
}

/// Most frequent value; ties go to the lexicographically smallest.
fn mode_category(categories: &[&str]) -> String {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for c in categories {
        *counts.entry(c).or_default() += 1;
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then_with(|| b.0.cmp(a.0)))
        .map(|(c, _)| c.to_string())
        .unwrap_or_default()
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Field {
    Title,
    Category,
    SubTitle,
    Desc,
}

impl Field {
    fn from_tag(tag: &[u8]) -> Option<Self> {
        match tag {
            b"title" => Some(Field::Title),
            b"category" => Some(Field::Category),
            b"sub-title" => Some(Field::SubTitle),
            b"desc" => Some(Field::Desc),
            _ => None,
        }
    }
}

#[derive(Default)]
struct Pending {
    ordinal: usize,
    position: String,
    id: Option<String>,
    channel: Option<String>,
    start: Option<(NaiveDate, u32)>,
    stop: Option<(NaiveDate, u32)>,
    title: Option<String>,
    category: Option<String>,
    subtitle: Option<String>,
    description: Option<String>,
}

impl Pending {
    fn slot(&mut self, field: Field) -> &mut Option<String> {
        match field {
            Field::Title => &mut self.title,
            Field::Category => &mut self.category,
            Field::SubTitle => &mut self.subtitle,
            Field::Desc => &mut self.description,
        }
    }

    fn finish(self) -> Result<EpgRecord> {
        let missing = |field| Error::MissingField {
            field,
            position: self.position.clone(),
        };
        let title = self
            .title
            .clone()
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| missing("title"))?;
        let channel = self
            .channel
            .clone()
            .filter(|c| !c.trim().is_empty())
            .ok_or_else(|| missing("channel"))?;
        let (day, start) = self.start.ok_or_else(|| missing("start"))?;
        let (_, stop) = self.stop.ok_or_else(|| missing("stop"))?;
        Ok(EpgRecord {
            id: self.id.unwrap_or_else(|| self.ordinal.to_string()),
            day,
            title,
            category: self.category.unwrap_or_default(),
            start,
            stop,
            channel,
            subtitle: self.subtitle,
            description: self.description,
        })
    }
}

/// Parses the programme subset of an XMLTV document.
///
/// Each `<programme>` yields one record in document order. Only `title`,
/// `category`, `sub-title` and `desc` children are read (the first of each
/// wins); anything else is skipped. Timestamps are `YYYYMMDDHHMM[SS]` with
/// an optional timezone suffix, which is ignored.
pub fn parse_xmltv<R: BufRead>(input: R) -> Result<Vec<EpgRecord>> {
    let mut reader = Reader::from_reader(input);
    let mut buf = Vec::new();
    let mut records = Vec::new();
    let mut current: Option<Pending> = None;
    let mut field: Option<(Field, String)> = None;
    let mut ordinal = 0usize;

    loop {
        let pos = reader.buffer_position();
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| Error::malformed(format!("byte {pos}"), e))?;
        match event {
            Event::Start(e) if e.local_name().as_ref() == b"programme" => {
                ordinal += 1;
                current = Some(open_programme(&reader, &e, ordinal, pos)?);
            }
            Event::Empty(e) if e.local_name().as_ref() == b"programme" => {
                ordinal += 1;
                records.push(open_programme(&reader, &e, ordinal, pos)?.finish()?);
            }
            Event::Start(e) if current.is_some() && field.is_none() => {
                if let Some(f) = Field::from_tag(e.local_name().as_ref()) {
                    field = Some((f, String::new()));
                }
            }
            Event::Text(t) => {
                if let Some((_, text)) = field.as_mut() {
                    let s = t
                        .unescape()
                        .map_err(|e| Error::malformed(format!("byte {pos}"), e))?;
                    text.push_str(&s);
                }
            }
            Event::CData(t) => {
                if let Some((_, text)) = field.as_mut() {
                    text.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::End(e) => {
                let name = e.local_name();
                if name.as_ref() == b"programme" {
                    if let Some(p) = current.take() {
                        records.push(p.finish()?);
                    }
                } else if let Some((f, text)) = field.take() {
                    if Field::from_tag(name.as_ref()) == Some(f) {
                        if let Some(p) = current.as_mut() {
                            let slot = p.slot(f);
                            if slot.is_none() {
                                *slot = Some(text.trim().to_string());
                            }
                        }
                    } else {
                        field = Some((f, text));
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if let Some(p) = current {
        return Err(Error::malformed(p.position, "unterminated <programme>"));
    }
    Ok(records)
}

fn open_programme<R>(
    reader: &Reader<R>,
    e: &BytesStart<'_>,
    ordinal: usize,
    pos: u64,
) -> Result<Pending> {
    let position = format!("programme #{ordinal} (byte {pos})");
    let mut p = Pending {
        ordinal,
        position: position.clone(),
        ..Default::default()
    };
    for attr in e.attributes() {
        let attr = attr.map_err(|err| Error::malformed(position.clone(), err))?;
        let value = attr
            .decode_and_unescape_value(reader.decoder())
            .map_err(|err| Error::malformed(position.clone(), err))?
            .into_owned();
        match attr.key.local_name().as_ref() {
            b"channel" => p.channel = Some(value.trim().to_string()),
            b"start" => p.start = Some(parse_timestamp(&value, &position)?),
            b"stop" => p.stop = Some(parse_timestamp(&value, &position)?),
            b"id" => p.id = Some(value),
            _ => {}
        }
    }
    Ok(p)
}

/// `YYYYMMDDHHMM[SS][ +ZZZZ]` into a date and minutes after midnight.
fn parse_timestamp(raw: &str, position: &str) -> Result<(NaiveDate, u32)> {
    let bad = || Error::malformed(position, format!("bad timestamp `{raw}`"));
    let digits: String = raw
        .trim()
        .chars()
        .take_while(|c| c.is_ascii_digit())
        .collect();
    if digits.len() < 12 {
        return Err(bad());
    }
    let num = |r: std::ops::Range<usize>| digits[r].parse::<u32>().map_err(|_| bad());
    let day = NaiveDate::from_ymd_opt(num(0..4)? as i32, num(4..6)?, num(6..8)?).ok_or_else(bad)?;
    let (hour, minute) = (num(8..10)?, num(10..12)?);
    if hour > 23 || minute > 59 {
        return Err(bad());
    }
    Ok((day, hour * 60 + minute))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, title: &str, start: u32, stop: u32) -> EpgRecord {
        EpgRecord {
            id: id.into(),
            day: NaiveDate::from_ymd_opt(2013, 10, 21).unwrap(),
            title: title.into(),
            category: "Nature".into(),
            start,
            stop,
            channel: "BBC HD".into(),
            subtitle: None,
            description: None,
        }
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_title("  Britain  from Above "), "britain from above");
        assert_eq!(normalize_title(""), "");
        assert_eq!(normalize_title("BBC News"), "bbc news");
        assert_eq!(normalize_title("Too\tCute!\n"), "too cute!");
    }

    #[test]
    fn duration_examples() {
        assert_eq!(duration(13 * 60, 14 * 60), 60);
        assert_eq!(duration(23 * 60 + 30, 30), 60);
        assert_eq!(duration(0, 0), 1440);
    }

    #[test]
    fn parse_empty_listing() {
        let recs = parse_xmltv(&b"<?xml version=\"1.0\"?><tv></tv>"[..]).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn parse_table_record() {
        let xml = r#"<tv>
  <programme start="20131021130000 +0100" stop="20131021140000 +0100" channel="BBC HD" id="605">
    <title lang="en">Britain from Above</title>
    <category>Nature</category>
    <desc>Documentary series in which broadcaster Andrew Marr...</desc>
    <credits><presenter>Andrew Marr</presenter></credits>
  </programme>
</tv>"#;
        let recs = parse_xmltv(xml.as_bytes()).unwrap();
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(r.id, "605");
        assert_eq!(r.title, "Britain from Above");
        assert_eq!(r.channel, "BBC HD");
        assert_eq!(r.category, "Nature");
        assert_eq!((r.start, r.stop), (13 * 60, 14 * 60));
        assert_eq!(r.day, NaiveDate::from_ymd_opt(2013, 10, 21).unwrap());
        assert_eq!(r.subtitle, None);
        assert_eq!(r.duration(), 60);
    }

    #[test]
    fn parse_missing_title_reports_position() {
        let xml = r#"<tv><programme start="201310211300" stop="201310211400" channel="X"></programme></tv>"#;
        match parse_xmltv(xml.as_bytes()) {
            Err(Error::MissingField { field, position }) => {
                assert_eq!(field, "title");
                assert!(position.contains("programme #1"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn parse_missing_stop() {
        let xml = r#"<tv><programme start="201310211300" channel="X"><title>T</title></programme></tv>"#;
        assert!(matches!(
            parse_xmltv(xml.as_bytes()),
            Err(Error::MissingField { field: "stop", .. })
        ));
    }

    #[test]
    fn parse_malformed_xml() {
        let xml = "<tv><programme start=\"201310211300\" stop=\"201310211400\" channel=\"X\"><title>T</desc></programme></tv>";
        assert!(matches!(
            parse_xmltv(xml.as_bytes()),
            Err(Error::MalformedInput { .. })
        ));
    }

    #[test]
    fn parse_bad_timestamp() {
        let xml = r#"<tv><programme start="2013" stop="201310211400" channel="X"><title>T</title></programme></tv>"#;
        assert!(matches!(
            parse_xmltv(xml.as_bytes()),
            Err(Error::MalformedInput { .. })
        ));
    }

    #[test]
    fn aggregate_same_key_different_day() {
        let mut b = rec("2", "Britain from Above", 780, 840);
        b.day = NaiveDate::from_ymd_opt(2013, 10, 28).unwrap();
        let shows = aggregate(&[rec("1", "Britain from Above", 780, 840), b]);
        assert_eq!(shows.len(), 1);
        assert_eq!(shows[0].record_ids, vec!["1", "2"]);
    }

    #[test]
    fn aggregate_duration_splits() {
        let shows = aggregate(&[rec("1", "T", 600, 660), rec("2", "T", 600, 690)]);
        assert_eq!(shows.len(), 2);
        assert_eq!(shows[0].key.duration_min, 60);
        assert_eq!(shows[1].key.duration_min, 90);
    }

    #[test]
    fn aggregate_representatives() {
        let mut a = rec("1", "Show", 0, 60);
        a.description = Some("short".into());
        a.category = "Nature".into();
        let mut b = rec("2", "  show ", 0, 60);
        b.description = Some("much longer text".into());
        b.category = "Documentary".into();
        let shows = aggregate(&[a, b]);
        assert_eq!(shows.len(), 1);
        assert_eq!(shows[0].display_title, "Show");
        assert_eq!(shows[0].description.as_deref(), Some("much longer text"));
        // one vote each: lexicographic tie-break
        assert_eq!(shows[0].category, "Documentary");
    }
}
