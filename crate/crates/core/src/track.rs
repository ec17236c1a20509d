//! Per-frame pitch tracks and their CSV representation.
//!
//! The core schema is `frame,time_s,voiced,f0_hz`. `voiced` is `0` or `1`
//! (silent frames are written as `0`) and `f0_hz` is empty on unvoiced
//! frames. Debug writers append diagnostic columns after the core four;
//! readers ignore anything past `f0_hz`.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};

/// Intermediate values retained for inspection of a tracked frame.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FrameDiagnostics {
    /// Discriminant score `w^T v(k)` from the voicing classifier.
    pub score: f64,
    /// Integer lag picked by the spectro-temporal ACF.
    pub observed_lag: Option<usize>,
    pub forward_lag: Option<f64>,
    pub forward_var: Option<f64>,
    pub backward_lag: Option<f64>,
    pub backward_var: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PitchFrame {
    pub index: usize,
    /// Start time of the frame in seconds.
    pub time_s: f64,
    pub voiced: bool,
    /// Fused lag-domain period in samples; `None` on unvoiced frames.
    pub lag: Option<f64>,
    /// `None` on unvoiced frames.
    pub f0_hz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<FrameDiagnostics>,
}

impl PitchFrame {
    pub fn unvoiced(index: usize, time_s: f64) -> Self {
        Self {
            index,
            time_s,
            voiced: false,
            lag: None,
            f0_hz: None,
            diagnostics: None,
        }
    }

    pub fn voiced(index: usize, time_s: f64, f0_hz: f64) -> Self {
        Self {
            index,
            time_s,
            voiced: true,
            lag: None,
            f0_hz: Some(f0_hz),
            diagnostics: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PitchTrack {
    pub frames: Vec<PitchFrame>,
}

const HEADER: [&str; 4] = ["frame", "time_s", "voiced", "f0_hz"];
const DEBUG_HEADER: [&str; 7] = [
    "score",
    "observed_lag",
    "fused_lag",
    "forward_lag",
    "forward_var",
    "backward_lag",
    "backward_var",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl PitchTrack {
    pub fn new(frames: Vec<PitchFrame>) -> Self {
        Self { frames }
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.frames.iter().filter(|f| f.voiced).count()
    }

    /// Writes the track as CSV. With `debug` set, diagnostic columns follow
    /// the core schema.
    pub fn write_csv<W: Write>(&self, writer: W, debug: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        if debug {
            w.write_record(HEADER.iter().chain(DEBUG_HEADER.iter()))?;
        } else {
            w.write_record(HEADER)?;
        }
        for f in &self.frames {
            let mut row = vec![
                f.index.to_string(),
                f.time_s.to_string(),
                u8::from(f.voiced).to_string(),
                if f.voiced { opt(f.f0_hz) } else { String::new() },
            ];
            if debug {
                let d = f.diagnostics.clone().unwrap_or_default();
                row.extend([
                    d.score.to_string(),
                    opt(d.observed_lag),
                    opt(f.lag),
                    opt(d.forward_lag),
                    opt(d.forward_var),
                    opt(d.backward_lag),
                    opt(d.backward_var),
                ]);
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, debug: bool) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, debug)?;
        String::from_utf8(buf).map_err(|e| Error::MalformedTrack(e.to_string()))
    }

    pub fn write_json<W: Write>(&self, mut writer: W) -> Result<()> {
        let rows: Vec<JsonRow> = self
            .frames
            .iter()
            .map(|f| JsonRow {
                frame: f.index,
                time_s: f.time_s,
                voiced: f.voiced,
                f0_hz: if f.voiced { f.f0_hz } else { None },
            })
            .collect();
        serde_json::to_writer_pretty(&mut writer, &rows).map_err(std::io::Error::from)?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    /// Reads a track in the core schema. Extra trailing columns are ignored.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = r.headers()?.clone();
        let cols: Vec<&str> = headers.iter().take(4).collect();
        if cols != HEADER {
            return Err(Error::MalformedTrack(format!(
                "expected header starting with {}, found {}",
                HEADER.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut frames = Vec::new();
        for (line, record) in r.records().enumerate() {
            let record = record?;
            let field = |i: usize| record.get(i).unwrap_or("");
            let bad = |what: &str| Error::MalformedTrack(format!("row {}: bad {what}", line + 1));
            let index = field(0).parse().map_err(|_| bad("frame"))?;
            let time_s = field(1).parse().map_err(|_| bad("time_s"))?;
            let voiced = match field(2) {
                "0" => false,
                "1" => true,
                _ => return Err(bad("voiced")),
            };
            let f0_hz = match field(3) {
                "" => None,
                s => Some(s.parse::<f64>().map_err(|_| bad("f0_hz"))?),
            };
            if voiced && !f0_hz.is_some_and(|f| f.is_finite() && f > 0.0) {
                return Err(bad("f0_hz on voiced frame"));
            }
            frames.push(PitchFrame {
                index,
                time_s,
                voiced,
                lag: None,
                f0_hz: if voiced { f0_hz } else { None },
                diagnostics: None,
            });
        }
        Ok(Self { frames })
    }
}

#[derive(Serialize)]
struct JsonRow {
    frame: usize,
    time_s: f64,
    voiced: bool,
    f0_hz: Option<f64>,
}
