//! Expected notes from a structured score file.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Six-level dynamic marking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dynamic {
    Pp,
    P,
    Mp,
    Mf,
    F,
    Ff,
}

impl Dynamic {
    pub const ALL: [Dynamic; 6] = [Dynamic::Pp, Dynamic::P, Dynamic::Mp, Dynamic::Mf, Dynamic::F, Dynamic::Ff];

    pub fn as_str(self) -> &'static str {
        match self {
            Dynamic::Pp => "pp",
            Dynamic::P => "p",
            Dynamic::Mp => "mp",
            Dynamic::Mf => "mf",
            Dynamic::F => "f",
            Dynamic::Ff => "ff",
        }
    }
}

impl fmt::Display for Dynamic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dynamic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dynamic::ALL
            .into_iter()
            .find(|d| d.as_str() == s)
            .ok_or_else(|| Error::UnknownDynamic(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreNote {
    pub onset_s: f64,
    pub duration_s: f64,
    pub midi: u8,
    pub dynamic: Dynamic,
}

impl ScoreNote {
    pub fn end_s(&self) -> f64 {
        self.onset_s + self.duration_s
    }

    pub fn contains(&self, t_s: f64) -> bool {
        self.onset_s <= t_s && t_s < self.end_s()
    }
}

/// Notes sorted by onset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub notes: Vec<ScoreNote>,
}

#[derive(Deserialize)]
struct RawScore {
    notes: Vec<RawNote>,
}

#[derive(Deserialize)]
struct RawNote {
    onset_s: f64,
    duration_s: f64,
    midi: i64,
    dynamic: String,
}

impl Score {
    /// Builds a score, sorting notes by onset (stable for equal onsets).
    pub fn new(mut notes: Vec<ScoreNote>) -> Result<Self> {
        for n in &notes {
            check_note(n.onset_s, n.duration_s, n.midi as i64)?;
        }
        notes.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
        Ok(Self { notes })
    }

    /// Note sounding at `t_s`; the earliest onset wins among overlapping notes.
    pub fn expected_at(&self, t_s: f64) -> Option<&ScoreNote> {
        // notes are sorted, so the first containing note has the earliest onset
        let end = self.notes.partition_point(|n| n.onset_s <= t_s);
        self.notes[..end].iter().find(|n| n.contains(t_s))
    }
}

fn check_note(onset: f64, duration: f64, midi: i64) -> Result<()> {
    if !onset.is_finite() || onset < 0.0 {
        return Err(Error::Range(format!("note onset {onset} s")));
    }
    if !duration.is_finite() || duration <= 0.0 {
        return Err(Error::Range(format!("note duration {duration} s")));
    }
    if !(0..=127).contains(&midi) {
        return Err(Error::Range(format!("MIDI note {midi}")));
    }
    Ok(())
}

pub fn parse_score(bytes: &[u8]) -> Result<Score> {
    let raw: RawScore = serde_json::from_slice(bytes)?;
    let notes = raw
        .notes
        .into_iter()
        .map(|n| {
            check_note(n.onset_s, n.duration_s, n.midi)?;
            Ok(ScoreNote {
                onset_s: n.onset_s,
                duration_s: n.duration_s,
                midi: n.midi as u8,
                dynamic: n.dynamic.parse()?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Score::new(notes)
}

pub fn write_score(score: &Score) -> String {
    serde_json::to_string_pretty(score).expect("score serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_entry() {
        let s = parse_score(br#"{"notes":[{"onset_s":1.0,"duration_s":0.5,"midi":57,"dynamic":"mf"}]}"#)
            .unwrap();
        assert_eq!(
            s.notes,
            vec![ScoreNote { onset_s: 1.0, duration_s: 0.5, midi: 57, dynamic: Dynamic::Mf }]
        );
    }

    #[test]
    fn entries_are_sorted() {
        let s = parse_score(
            br#"{"notes":[
                {"onset_s":2.0,"duration_s":0.5,"midi":50,"dynamic":"p"},
                {"onset_s":0.5,"duration_s":0.5,"midi":52,"dynamic":"ff"}]}"#,
        )
        .unwrap();
        assert_eq!(s.notes[0].midi, 52);
        assert_eq!(s.notes[1].midi, 50);
    }

    #[test]
    fn rejects_bad_values() {
        let fff = br#"{"notes":[{"onset_s":1.0,"duration_s":0.5,"midi":57,"dynamic":"fff"}]}"#;
        assert!(matches!(parse_score(fff), Err(Error::UnknownDynamic(d)) if d == "fff"));
        let neg = br#"{"notes":[{"onset_s":-1.0,"duration_s":0.5,"midi":57,"dynamic":"f"}]}"#;
        assert!(matches!(parse_score(neg), Err(Error::Range(_))));
        let zero = br#"{"notes":[{"onset_s":1.0,"duration_s":0,"midi":57,"dynamic":"f"}]}"#;
        assert!(matches!(parse_score(zero), Err(Error::Range(_))));
        let high = br#"{"notes":[{"onset_s":1.0,"duration_s":1,"midi":128,"dynamic":"f"}]}"#;
        assert!(matches!(parse_score(high), Err(Error::Range(_))));
        assert!(matches!(parse_score(b"{"), Err(Error::Json(_))));
    }

    #[test]
    fn expected_at_rules() {
        let note = |onset, dur, midi| ScoreNote { onset_s: onset, duration_s: dur, midi, dynamic: Dynamic::Mf };
        let s = Score::new(vec![note(1.0, 0.5, 57)]).unwrap();
        assert_eq!(s.expected_at(1.25).map(|n| n.midi), Some(57));
        assert_eq!(s.expected_at(1.5), None);
        assert_eq!(s.expected_at(0.99), None);

        let s = Score::new(vec![note(1.2, 1.0, 62), note(1.0, 1.0, 57)]).unwrap();
        assert_eq!(s.expected_at(1.3).map(|n| n.midi), Some(57));
        assert_eq!(s.expected_at(2.1).map(|n| n.midi), Some(62));
    }
}
