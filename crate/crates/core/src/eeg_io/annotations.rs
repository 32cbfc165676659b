use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fsio;

use super::segment::TrialLabel;

const HEADER: &str = "onset_s,offset_s,label";

/// Performance annotation codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventLabel {
    /// Correct performance.
    Ok,
    /// Note changed with respect to the score.
    Nch,
    /// Out of tone.
    Oot,
    /// Silence not indicated in the score.
    Sil,
    /// Missing note.
    Mis,
}

impl EventLabel {
    pub const ALL: [EventLabel; 5] = [
        EventLabel::Ok,
        EventLabel::Nch,
        EventLabel::Oot,
        EventLabel::Sil,
        EventLabel::Mis,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventLabel::Ok => "OK",
            EventLabel::Nch => "NCH",
            EventLabel::Oot => "OOT",
            EventLabel::Sil => "SIL",
            EventLabel::Mis => "MIS",
        }
    }

    /// Binary class of trials cut from this event; `None` for SIL, which is
    /// excluded from the task.
    pub fn trial_label(self) -> Option<TrialLabel> {
        match self {
            EventLabel::Ok => Some(TrialLabel::Ok),
            EventLabel::Nch | EventLabel::Oot | EventLabel::Mis => Some(TrialLabel::Err),
            EventLabel::Sil => None,
        }
    }
}

impl fmt::Display for EventLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EventLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::UnknownLabel(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnotationEvent {
    pub onset_s: f64,
    pub offset_s: f64,
    pub label: EventLabel,
}

impl AnnotationEvent {
    pub fn new(onset_s: f64, offset_s: f64, label: EventLabel) -> Self {
        Self {
            onset_s,
            offset_s,
            label,
        }
    }

    pub fn duration_s(&self) -> f64 {
        self.offset_s - self.onset_s
    }
}

/// Events sorted by onset and pairwise non-overlapping.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnnotationTrack {
    events: Vec<AnnotationEvent>,
}

impl AnnotationTrack {
    /// Validates and sorts. Touching events (`a.offset == b.onset`) are allowed.
    pub fn new(events: Vec<AnnotationEvent>) -> Result<Self> {
        let numbered = events
            .into_iter()
            .enumerate()
            .map(|(i, e)| (i + 1, e))
            .collect();
        Self::from_numbered(numbered)
    }

    fn from_numbered(mut events: Vec<(usize, AnnotationEvent)>) -> Result<Self> {
        for (line, e) in &events {
            if !(e.onset_s.is_finite() && e.offset_s.is_finite()) || e.onset_s < 0.0 {
                return Err(Error::Parse {
                    line: *line,
                    msg: format!("invalid onset {} / offset {}", e.onset_s, e.offset_s),
                });
            }
            if e.offset_s <= e.onset_s {
                return Err(Error::OffsetBeforeOnset {
                    line: *line,
                    onset_s: e.onset_s,
                    offset_s: e.offset_s,
                });
            }
        }
        events.sort_by(|a, b| a.1.onset_s.total_cmp(&b.1.onset_s));
        for w in events.windows(2) {
            let (a, b) = (w[0].1, w[1].1);
            if b.onset_s < a.offset_s {
                return Err(Error::OverlappingEvents {
                    a_onset: a.onset_s,
                    a_offset: a.offset_s,
                    b_onset: b.onset_s,
                    b_offset: b.offset_s,
                });
            }
        }
        Ok(Self {
            events: events.into_iter().map(|(_, e)| e).collect(),
        })
    }

    pub fn events(&self) -> &[AnnotationEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// The event fully containing `[start_s, end_s]`, if any.
    pub fn containing(&self, start_s: f64, end_s: f64) -> Option<&AnnotationEvent> {
        const TOL: f64 = 1e-9;
        // Last event whose onset is not after start.
        let idx = self.events.partition_point(|e| e.onset_s <= start_s + TOL);
        let e = self.events.get(idx.checked_sub(1)?)?;
        (end_s <= e.offset_s + TOL).then_some(e)
    }

    /// Total annotated duration per label.
    pub fn total_duration(&self, label: EventLabel) -> f64 {
        self.events
            .iter()
            .filter(|e| e.label == label)
            .map(AnnotationEvent::duration_s)
            .sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for e in &self.events {
            out.push_str(&format!("{},{},{}\n", e.onset_s, e.offset_s, e.label));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            other => {
                return Err(Error::MalformedHeader(format!(
                    "expected {HEADER:?}, got {:?}",
                    other.map(|(_, l)| l).unwrap_or("")
                )))
            }
        }
        let mut events = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::RaggedRows {
                    line: line_no,
                    found: fields.len(),
                    expected: 3,
                });
            }
            let num = |s: &str| {
                s.parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("not a number: {s:?}"),
                })
            };
            let event = AnnotationEvent::new(num(fields[0])?, num(fields[1])?, fields[2].parse()?);
            events.push((line_no, event));
        }
        Self::from_numbered(events)
    }
}

pub fn load_annotations(path: &Path) -> Result<AnnotationTrack> {
    AnnotationTrack::from_csv(&fsio::read_to_string(path)?)
}

pub fn save_annotations(track: &AnnotationTrack, path: &Path) -> Result<()> {
    fsio::write_atomic(path, track.to_csv().as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_event_track() {
        let t =
            AnnotationTrack::from_csv("onset_s,offset_s,label\n0.0,2.5,OK\n2.5,3.2,NCH\n").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(
            t.events()[1],
            AnnotationEvent::new(2.5, 3.2, EventLabel::Nch)
        );
    }

    #[test]
    fn offset_before_onset() {
        let err = AnnotationTrack::from_csv("onset_s,offset_s,label\n1.0,0.5,OK\n").unwrap_err();
        assert!(err.to_string().contains("offset before onset"), "{err}");
    }

    #[test]
    fn sorted_on_load() {
        let t = AnnotationTrack::from_csv("onset_s,offset_s,label\n5,6,MIS\n0,1,OK\n2,3,OOT\n")
            .unwrap();
        let onsets: Vec<f64> = t.events().iter().map(|e| e.onset_s).collect();
        assert_eq!(onsets, vec![0.0, 2.0, 5.0]);
    }

    #[test]
    fn unknown_label_and_overlap() {
        assert!(matches!(
            AnnotationTrack::from_csv("onset_s,offset_s,label\n0,1,ok\n"),
            Err(Error::UnknownLabel(_))
        ));
        assert!(matches!(
            AnnotationTrack::from_csv("onset_s,offset_s,label\n0,2,OK\n1.5,3,NCH\n"),
            Err(Error::OverlappingEvents { .. })
        ));
        assert!(matches!(
            AnnotationTrack::from_csv("begin,end,label\n"),
            Err(Error::MalformedHeader(_))
        ));
    }

    #[test]
    fn csv_round_trip() {
        let t = AnnotationTrack::new(vec![
            AnnotationEvent::new(0.1, 2.333333333333333, EventLabel::Ok),
            AnnotationEvent::new(3.0, 7.25, EventLabel::Sil),
        ])
        .unwrap();
        assert_eq!(AnnotationTrack::from_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn containment_lookup() {
        let t = AnnotationTrack::new(vec![
            AnnotationEvent::new(0.0, 2.5, EventLabel::Ok),
            AnnotationEvent::new(2.5, 3.2, EventLabel::Nch),
        ])
        .unwrap();
        assert_eq!(t.containing(1.0, 2.0).unwrap().label, EventLabel::Ok);
        assert!(t.containing(2.0, 3.0).is_none());
        assert!(t.containing(3.0, 4.0).is_none());
        assert_eq!(t.containing(2.5, 3.2).unwrap().label, EventLabel::Nch);
    }
}
