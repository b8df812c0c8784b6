//! RIFF/WAVE reading and writing for PCM16 and float32 audio.

use crate::error::{Error, Result};

pub const SUPPORTED_RATES: [u32; 3] = [22050, 44100, 48000];

const FORMAT_PCM: u16 = 1;
const FORMAT_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

/// Mono audio with amplitudes in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub sample_rate_hz: u32,
    pub samples: Vec<f32>,
}

impl AudioClip {
    pub fn new(sample_rate_hz: u32, samples: Vec<f32>) -> Result<Self> {
        if !SUPPORTED_RATES.contains(&sample_rate_hz) {
            return Err(Error::UnsupportedFormat(format!("sample rate {sample_rate_hz} Hz")));
        }
        if let Some(i) = samples.iter().position(|s| !(s.is_finite() && s.abs() <= 1.0)) {
            return Err(Error::Range(format!("sample {i} = {} outside [-1, 1]", samples[i])));
        }
        Ok(Self { sample_rate_hz, samples })
    }

    pub fn duration_ms(&self) -> f64 {
        self.samples.len() as f64 * 1000.0 / self.sample_rate_hz as f64
    }
}

struct Format {
    code: u16,
    channels: u16,
    rate: u32,
    bits: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn decode_wav(bytes: &[u8]) -> Result<AudioClip> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(Error::CorruptFile("missing RIFF/WAVE header".into()));
    }

    let mut fmt: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    let mut at = 12;
    while at + 8 <= bytes.len() {
        let id = &bytes[at..at + 4];
        let size = u32_at(bytes, at + 4) as usize;
        let body_start = at + 8;
        let body_end = body_start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                Error::CorruptFile(format!(
                    "chunk {:?} declares {size} bytes but only {} remain",
                    String::from_utf8_lossy(id),
                    bytes.len() - body_start
                ))
            })?;
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(Error::CorruptFile("fmt chunk shorter than 16 bytes".into()));
                }
                let mut code = u16_at(body, 0);
                if code == FORMAT_EXTENSIBLE {
                    if body.len() < 26 {
                        return Err(Error::CorruptFile("truncated extensible fmt chunk".into()));
                    }
                    code = u16_at(body, 24);
                }
                fmt = Some(Format {
                    code,
                    channels: u16_at(body, 2),
                    rate: u32_at(body, 4),
                    bits: u16_at(body, 14),
                });
            }
            b"data" => data = Some(body),
            _ => {}
        }
        // chunks are word aligned
        at = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| Error::CorruptFile("no fmt chunk".into()))?;
    let bytes_per_sample = match (fmt.code, fmt.bits) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_FLOAT, 32) => 4,
        (code, bits) => {
            return Err(Error::UnsupportedFormat(format!("format code {code} with {bits} bits per sample")))
        }
    };
    if !(fmt.channels == 1 || fmt.channels == 2) {
        return Err(Error::UnsupportedFormat(format!("{} channels", fmt.channels)));
    }
    if !SUPPORTED_RATES.contains(&fmt.rate) {
        return Err(Error::UnsupportedFormat(format!("sample rate {} Hz", fmt.rate)));
    }
    let data = data.ok_or_else(|| Error::CorruptFile("no data chunk".into()))?;
    let frame_len = bytes_per_sample * fmt.channels as usize;
    if data.len() % frame_len != 0 {
        return Err(Error::CorruptFile(format!(
            "data chunk of {} bytes is not a whole number of {frame_len}-byte frames",
            data.len()
        )));
    }

    let read = |chunk: &[u8]| -> Result<f32> {
        if bytes_per_sample == 2 {
            Ok(i16::from_le_bytes([chunk[0], chunk[1]]) as f32 / 32768.0)
        } else {
            let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
            if !v.is_finite() {
                return Err(Error::CorruptFile("non-finite float sample".into()));
            }
            Ok(v.clamp(-1.0, 1.0))
        }
    };

    let mut samples = Vec::with_capacity(data.len() / frame_len);
    for frame in data.chunks_exact(frame_len) {
        let v = if fmt.channels == 1 {
            read(frame)?
        } else {
            let l = read(&frame[..bytes_per_sample])?;
            let r = read(&frame[bytes_per_sample..])?;
            (l + r) * 0.5
        };
        samples.push(v);
    }
    Ok(AudioClip { sample_rate_hz: fmt.rate, samples })
}

fn header(channels: u16, rate: u32, code: u16, bits: u16, data_len: usize) -> Vec<u8> {
    let block_align = channels * bits / 8;
    let mut buf = Vec::with_capacity(44 + data_len);
    buf.extend_from_slice(b"RIFF");
    buf.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    buf.extend_from_slice(b"WAVE");
    buf.extend_from_slice(b"fmt ");
    buf.extend_from_slice(&16u32.to_le_bytes());
    buf.extend_from_slice(&code.to_le_bytes());
    buf.extend_from_slice(&channels.to_le_bytes());
    buf.extend_from_slice(&rate.to_le_bytes());
    buf.extend_from_slice(&(rate * block_align as u32).to_le_bytes());
    buf.extend_from_slice(&block_align.to_le_bytes());
    buf.extend_from_slice(&bits.to_le_bytes());
    buf.extend_from_slice(b"data");
    buf.extend_from_slice(&(data_len as u32).to_le_bytes());
    buf
}

/// Writes a mono float32 file; decoding it reproduces `clip` bit for bit.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let mut buf = header(1, clip.sample_rate_hz, FORMAT_FLOAT, 32, clip.samples.len() * 4);
    for s in &clip.samples {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    buf
}

/// Writes interleaved 16-bit PCM.
pub fn encode_pcm16(samples: &[i16], channels: u16, rate: u32) -> Vec<u8> {
    let mut buf = header(channels, rate, FORMAT_PCM, 16, samples.len() * 2);
    for s in samples {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    buf
}
