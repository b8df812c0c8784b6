//! Newline-delimited JSON messages exchanged with trackers and viewers.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{UnitQuat, Vec3};

use super::session::SceneDelta;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Tracker,
    Viewer,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum WireMessage {
    Hello {
        session: String,
        role: Role,
        /// A reconnecting viewer resumes after this epoch.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        since_epoch: Option<u64>,
    },
    Sample {
        t_ms: f64,
        p: Vec3<f64>,
        q: UnitQuat<f64>,
    },
    SceneDelta(SceneDelta),
    Error {
        reason: String,
    },
    Bye,
}

impl WireMessage {
    pub fn error(reason: impl Into<String>) -> Self {
        WireMessage::Error { reason: reason.into() }
    }

    /// One JSON object terminated by `\n`.
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("wire message serializes");
        s.push('\n');
        s
    }

    pub fn parse(line: &str) -> Result<Self> {
        serde_json::from_str(line.trim_end_matches(['\r', '\n'])).map_err(Error::from)
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        w.write_all(self.to_line().as_bytes())
    }
}

/// Reads one message; `Ok(None)` at end of stream. Blank lines are skipped.
pub fn read_message(r: &mut impl BufRead) -> std::io::Result<Option<Result<WireMessage>>> {
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        if !line.trim().is_empty() {
            return Ok(Some(WireMessage::parse(&line)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes() {
        let hello = WireMessage::parse(r#"{"type":"hello","session":"s1","role":"tracker"}"#).unwrap();
        assert_eq!(hello, WireMessage::Hello { session: "s1".into(), role: Role::Tracker, since_epoch: None });
        let sample = WireMessage::parse(r#"{"type":"sample","t_ms":12.5,"p":[0.1,0.2,0.3],"q":[1,0,0,0]}"#).unwrap();
        assert_eq!(
            sample,
            WireMessage::Sample { t_ms: 12.5, p: Vec3::new(0.1, 0.2, 0.3), q: UnitQuat::identity() }
        );
        assert_eq!(WireMessage::Bye.to_line(), "{\"type\":\"bye\"}\n");
        assert_eq!(WireMessage::error("parse").to_line(), "{\"type\":\"error\",\"reason\":\"parse\"}\n");
    }

    #[test]
    fn delta_keys() {
        let line = WireMessage::SceneDelta(SceneDelta { epoch: 3, evict_before_ms: Some(5.0), ..Default::default() }).to_line();
        let v: serde_json::Value = serde_json::from_str(&line).unwrap();
        assert_eq!(v["type"], "scene_delta");
        assert_eq!(v["epoch"], 3);
        assert_eq!(v["vertices"], serde_json::json!([]));
        assert_eq!(v["connectors"], serde_json::json!([]));
        assert_eq!(v["evict_before_ms"], 5.0);
        assert_eq!(WireMessage::parse(&line).unwrap(), WireMessage::parse(line.trim()).unwrap());
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(WireMessage::parse(r#"{"type":"teleport"}"#).is_err());
        assert!(WireMessage::parse(r#"{"type":"sample","t_ms":"x","p":[0,0,0],"q":[1,0,0,0]}"#).is_err());
        assert!(WireMessage::parse(r#"{"type":"sample","t_ms":1,"p":[0,0],"q":[1,0,0,0]}"#).is_err());
        assert!(WireMessage::parse("not json").is_err());
        assert!(WireMessage::parse(r#"{"type":"hello","session":"s","role":"admin"}"#).is_err());
    }

    #[test]
    fn values_are_exact() {
        let t = 0.1 + 0.2;
        let p = Vec3::new(1.0 / 3.0, -2.0f64.sqrt(), 1e-300);
        let m = WireMessage::Sample { t_ms: t, p, q: UnitQuat::identity() };
        assert_eq!(WireMessage::parse(&m.to_line()).unwrap(), m);
    }

    #[test]
    fn reads_lines() {
        let data = b"{\"type\":\"bye\"}\n\n{\"type\":\"oops\"}\n";
        let mut r = &data[..];
        assert_eq!(read_message(&mut r).unwrap().unwrap().unwrap(), WireMessage::Bye);
        assert!(read_message(&mut r).unwrap().unwrap().is_err());
        assert!(read_message(&mut r).unwrap().is_none());
    }
}
