//! Streaming a recorded bundle as if it came from a tracker.

use std::io::{BufRead, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::ingest::load_bundle;
use crate::motion::MotionTrack;

use super::wire::{read_message, WireMessage};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayItem {
    /// Offset from the start of the replay at which the message is due.
    pub due: Duration,
    pub message: WireMessage,
}

/// Sample messages paced at `(t − t₀) / multiplier`, carrying the track's
/// values unchanged.
pub fn replay_schedule(track: &MotionTrack<f64>, multiplier: f64) -> Result<Vec<ReplayItem>> {
    if !(multiplier > 0.0 && multiplier.is_finite()) {
        return Err(Error::InvalidArgument(format!("replay speed multiplier must be > 0, got {multiplier}")));
    }
    let Some(t0) = track.first_t() else {
        return Ok(Vec::new());
    };
    Ok(track
        .samples
        .iter()
        .map(|s| ReplayItem {
            due: Duration::from_secs_f64((s.t - t0) / 1000.0 / multiplier),
            message: WireMessage::Sample { t_ms: s.t, p: s.pos, q: s.orient },
        })
        .collect())
}

pub fn replay_bundle(path: impl AsRef<Path>, multiplier: f64) -> Result<Vec<ReplayItem>> {
    let rec = load_bundle(path)?;
    replay_schedule(&rec.motion, multiplier)
}

/// Writes each item when it falls due and returns the elapsed time.
pub fn play(items: &[ReplayItem], out: &mut impl Write) -> std::io::Result<Duration> {
    let start = Instant::now();
    for item in items {
        let now = start.elapsed();
        if item.due > now {
            std::thread::sleep(item.due - now);
        }
        item.message.write_to(out)?;
        out.flush()?;
    }
    Ok(start.elapsed())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ReplayOutcome {
    pub elapsed: Duration,
    /// Rejections reported by the server.
    pub errors: Vec<String>,
}

/// Plays `items` to a stream server as tracker of `session`, then says bye
/// and collects the server's replies.
pub fn replay_to_server(addr: &str, session: &str, items: &[ReplayItem]) -> Result<ReplayOutcome> {
    let (mut reader, mut writer) = super::server::connect(addr, session, super::wire::Role::Tracker, None)?;
    let net = |e| Error::net(addr, e);
    match read_message(&mut reader).map_err(net)? {
        Some(Ok(WireMessage::Hello { .. })) => {}
        Some(Ok(WireMessage::Error { reason })) => return Err(Error::InvalidArgument(format!("server refused: {reason}"))),
        other => return Err(Error::InvalidArgument(format!("unexpected server greeting: {other:?}"))),
    }
    let elapsed = play(items, &mut writer).map_err(net)?;
    WireMessage::Bye.write_to(&mut writer).map_err(net)?;
    writer.flush().map_err(net)?;
    let mut errors = Vec::new();
    collect_until_bye(&mut reader, &mut errors).map_err(net)?;
    Ok(ReplayOutcome { elapsed, errors })
}

fn collect_until_bye(reader: &mut impl BufRead, errors: &mut Vec<String>) -> std::io::Result<()> {
    while let Some(m) = read_message(reader)? {
        match m {
            Ok(WireMessage::Bye) => break,
            Ok(WireMessage::Error { reason }) => errors.push(reason),
            Ok(_) => {}
            Err(e) => errors.push(e.to_string()),
        }
    }
    Ok(())
}
