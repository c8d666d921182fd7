//! EEG data model and on-disk CSV formats.
//!
//! A recording is stored as plain CSV with a metadata comment header:
//!
//! ```text
//! # subject=<id> fs=<hz> channels=<name1;name2;...>
//! <v ch1>,<v ch2>,...          one row per time sample, microvolts
//! ```
//!
//! Annotations are 1 Hz binary labels, per channel plus the fused OR column:
//!
//! ```text
//! # subject=<id> channels=<name1;name2;...>
//! t,<ch1 0/1>,...,<chN 0/1>,<fused 0/1>
//! ```

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Multi-channel EEG sample matrix with its sampling rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub subject_id: String,
    pub sample_rate_hz: f64,
    pub channel_names: Vec<String>,
    /// `samples[channel][sample]`, microvolts.
    pub samples: Vec<Vec<f64>>,
}

impl Recording {
    pub fn n_channels(&self) -> usize {
        self.samples.len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.first().map_or(0, |c| c.len())
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }

    /// Checks the structural invariants: positive rate, at least one channel,
    /// equal channel lengths, finite values.
    pub fn validate(&self) -> Result<()> {
        if !(self.sample_rate_hz > 0.0) {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if self.samples.is_empty() {
            return Err(Error::invalid("recording has no channels"));
        }
        if self.samples.len() != self.channel_names.len() {
            return Err(Error::invalid(format!(
                "{} channels but {} channel names",
                self.samples.len(),
                self.channel_names.len()
            )));
        }
        let n = self.samples[0].len();
        for (c, ch) in self.samples.iter().enumerate() {
            if ch.len() != n {
                return Err(Error::invalid(format!(
                    "channel {c} has {} samples, expected {n}",
                    ch.len()
                )));
            }
            if ch.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite sample in channel {c}")));
            }
        }
        Ok(())
    }
}

/// Per-channel and fused binary seizure labels at 1 Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotationSet {
    pub subject_id: String,
    pub channel_names: Vec<String>,
    /// `per_channel[channel][second]`, 0 or 1.
    pub per_channel: Vec<Vec<u8>>,
    /// Logical OR over channels, per second.
    pub fused: Vec<u8>,
}

impl AnnotationSet {
    /// Builds the set from per-channel labels; the fused vector is derived.
    pub fn new(subject_id: String, channel_names: Vec<String>, per_channel: Vec<Vec<u8>>) -> Self {
        let fused = fuse(&per_channel);
        AnnotationSet {
            subject_id,
            channel_names,
            per_channel,
            fused,
        }
    }

    pub fn n_seconds(&self) -> usize {
        self.fused.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_channel.len() != self.channel_names.len() {
            return Err(Error::invalid("channel count mismatch in annotations"));
        }
        let n = self.fused.len();
        for ch in &self.per_channel {
            if ch.len() != n {
                return Err(Error::invalid("ragged annotation channels"));
            }
        }
        if self.fused != fuse(&self.per_channel) {
            return Err(Error::invalid("fused column is not the OR of channels"));
        }
        Ok(())
    }
}

fn fuse(per_channel: &[Vec<u8>]) -> Vec<u8> {
    let n = per_channel.first().map_or(0, |c| c.len());
    (0..n)
        .map(|t| u8::from(per_channel.iter().any(|ch| ch[t] != 0)))
        .collect()
}

/// Parses the `# key=value ...` header line common to both formats.
fn parse_header<'a>(path: &Path, line: &'a str, keys: &[&str]) -> Result<Vec<&'a str>> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::format(path, 1, "missing '#' metadata header"))?
        .trim();
    let mut fields: Vec<Option<&str>> = vec![None; keys.len()];
    for tok in body.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::format(path, 1, format!("bad header token '{tok}'")))?;
        match keys.iter().position(|kk| *kk == k) {
            Some(pos) => fields[pos] = Some(v),
            None => return Err(Error::format(path, 1, format!("unknown header key '{k}'"))),
        }
    }
    fields
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            f.ok_or_else(|| Error::format(path, 1, format!("missing header key '{}'", keys[i])))
        })
        .collect()
}

/// Reads a recording CSV. Dies with line numbers on malformed content.
pub fn read_recording(path: impl AsRef<Path>) -> Result<Recording> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);

    let mut header = String::new();
    reader
        .read_line(&mut header)
        .map_err(|e| Error::io(path, e))?;
    let fields = parse_header(path, header.trim_end(), &["subject", "fs", "channels"])?;
    let subject_id = fields[0].to_string();
    let sample_rate_hz: f64 = fields[1]
        .parse()
        .map_err(|_| Error::format(path, 1, format!("bad fs value '{}'", fields[1])))?;
    if !(sample_rate_hz > 0.0) {
        return Err(Error::format(path, 1, "fs must be positive"));
    }
    let channel_names: Vec<String> = fields[2].split(';').map(str::to_string).collect();
    let n_ch = channel_names.len();

    let mut samples: Vec<Vec<f64>> = vec![Vec::new(); n_ch];
    let mut line = String::new();
    let mut lineno = 1usize;
    loop {
        line.clear();
        let n = reader
            .read_line(&mut line)
            .map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        lineno += 1;
        let row = line.trim_end();
        if row.is_empty() {
            continue;
        }
        let mut count = 0;
        for (c, cell) in row.split(',').enumerate() {
            count += 1;
            if c >= n_ch {
                return Err(Error::format(
                    path,
                    lineno,
                    format!("row has more than {n_ch} cells"),
                ));
            }
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| Error::format(path, lineno, format!("non-numeric cell '{cell}'")))?;
            if !v.is_finite() {
                return Err(Error::format(path, lineno, "non-finite sample value"));
            }
            samples[c].push(v);
        }
        if count != n_ch {
            return Err(Error::format(
                path,
                lineno,
                format!("row has {count} cells, expected {n_ch}"),
            ));
        }
    }
    if samples[0].is_empty() {
        return Err(Error::format(path, lineno, "no samples"));
    }

    let rec = Recording {
        subject_id,
        sample_rate_hz,
        channel_names,
        samples,
    };
    rec.validate()?;
    Ok(rec)
}

/// Writes a recording CSV readable by [`read_recording`]. Values are written
/// with 6 decimal places, so the round trip is exact to 5e-7 microvolts.
pub fn write_recording(rec: &Recording, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    rec.validate()?;
    if rec.n_samples() == 0 {
        return Err(Error::invalid("refusing to write a 0-sample recording"));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "# subject={} fs={} channels={}",
        rec.subject_id,
        rec.sample_rate_hz,
        rec.channel_names.join(";")
    )
    .map_err(|e| Error::io(path, e))?;

    let n = rec.n_samples();
    let n_ch = rec.n_channels();
    let mut line = String::with_capacity(n_ch * 14);
    for t in 0..n {
        line.clear();
        for c in 0..n_ch {
            if c > 0 {
                line.push(',');
            }
            let _ = write!(line, "{:.6}", rec.samples[c][t]);
        }
        line.push('\n');
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads an annotation CSV. The stored fused column must equal the OR of the
/// per-channel columns.
pub fn read_annotations(path: impl AsRef<Path>) -> Result<AnnotationSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(path, 1, "empty file"))?;
    let header = header.map_err(|e| Error::io(path, e))?;
    let fields = parse_header(path, &header, &["subject", "channels"])?;
    let subject_id = fields[0].to_string();
    let channel_names: Vec<String> = fields[1].split(';').map(str::to_string).collect();
    let n_ch = channel_names.len();

    let mut per_channel: Vec<Vec<u8>> = vec![Vec::new(); n_ch];
    let mut stored_fused: Vec<u8> = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let row = line.trim_end();
        if row.is_empty() {
            continue;
        }
        let cells: Vec<&str> = row.split(',').collect();
        if cells.len() != n_ch + 2 {
            return Err(Error::format(
                path,
                lineno,
                format!("expected {} cells, found {}", n_ch + 2, cells.len()),
            ));
        }
        let t: usize = cells[0]
            .parse()
            .map_err(|_| Error::format(path, lineno, format!("bad time index '{}'", cells[0])))?;
        if t != stored_fused.len() {
            return Err(Error::format(
                path,
                lineno,
                format!(
                    "time index {t} out of order (expected {})",
                    stored_fused.len()
                ),
            ));
        }
        let parse_bit = |cell: &str| -> Result<u8> {
            match cell.trim() {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::format(
                    path,
                    lineno,
                    format!("bad binary cell '{other}'"),
                )),
            }
        };
        for c in 0..n_ch {
            per_channel[c].push(parse_bit(cells[c + 1])?);
        }
        stored_fused.push(parse_bit(cells[n_ch + 1])?);
    }

    let ann = AnnotationSet::new(subject_id, channel_names, per_channel);
    if ann.fused != stored_fused {
        return Err(Error::invalid(format!(
            "{}: stored fused column differs from OR of channels",
            path.display()
        )));
    }
    Ok(ann)
}

pub fn write_annotations(ann: &AnnotationSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    ann.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    writeln!(
        w,
        "# subject={} channels={}",
        ann.subject_id,
        ann.channel_names.join(";")
    )
    .map_err(|e| Error::io(path, e))?;
    for t in 0..ann.n_seconds() {
        let mut line = String::with_capacity(ann.per_channel.len() * 2 + 8);
        let _ = write!(line, "{t}");
        for ch in &ann.per_channel {
            let _ = write!(line, ",{}", ch[t]);
        }
        let _ = writeln!(line, ",{}", ann.fused[t]);
        w.write_all(line.as_bytes())
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_channel_recording() -> Recording {
        Recording {
            subject_id: "s1".into(),
            sample_rate_hz: 256.0,
            channel_names: vec!["F4-C4".into(), "C4-O2".into()],
            samples: vec![
                (0..512).map(|i| (i as f64) * 0.25 - 31.0).collect(),
                (0..512).map(|i| ((i as f64) * 0.1).sin() * 40.0).collect(),
            ],
        }
    }

    #[test]
    fn recording_header_echo() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rec = two_channel_recording();
        write_recording(&rec, &path).unwrap();
        let back = read_recording(&path).unwrap();
        assert_eq!(back.sample_rate_hz, 256.0);
        assert_eq!(back.n_channels(), 2);
        assert_eq!(back.n_samples(), 512);
        assert_eq!(back.channel_names, rec.channel_names);
    }

    #[test]
    fn recording_round_trip_within_1e6_uv() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let rec = two_channel_recording();
        write_recording(&rec, &path).unwrap();
        let back = read_recording(&path).unwrap();
        for c in 0..2 {
            for t in 0..512 {
                assert!((back.samples[c][t] - rec.samples[c][t]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn recording_empty_data_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, "# subject=s1 fs=256 channels=F4-C4\n").unwrap();
        let err = read_recording(&path).unwrap_err();
        assert!(err.to_string().contains("no samples"), "{err}");
    }

    #[test]
    fn recording_ragged_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ragged.csv");
        std::fs::write(&path, "# subject=s1 fs=256 channels=A;B\n1.0,2.0\n3.0\n").unwrap();
        let err = read_recording(&path).unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }), "{err}");
    }

    #[test]
    fn recording_non_numeric_cell_is_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "# subject=s1 fs=256 channels=A\n1.0\nxyz\n").unwrap();
        let err = read_recording(&path).unwrap_err();
        assert!(matches!(err, Error::Format { line: 3, .. }), "{err}");
    }

    #[test]
    fn refuse_zero_sample_write() {
        let dir = tempfile::tempdir().unwrap();
        let rec = Recording {
            subject_id: "s".into(),
            sample_rate_hz: 256.0,
            channel_names: vec!["A".into()],
            samples: vec![vec![]],
        };
        assert!(write_recording(&rec, dir.path().join("x.csv")).is_err());
    }

    #[test]
    fn annotations_or_semantics() {
        let ann = AnnotationSet::new(
            "s1".into(),
            vec!["A".into(), "B".into()],
            vec![vec![0, 0, 0, 0, 0, 1], vec![0, 0, 0, 0, 0, 0]],
        );
        assert_eq!(ann.fused, vec![0, 0, 0, 0, 0, 1]);
    }

    #[test]
    fn annotations_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let ann = AnnotationSet::new(
            "s1".into(),
            vec!["A".into(), "B".into()],
            vec![vec![0, 1, 1, 0], vec![1, 0, 1, 0]],
        );
        write_annotations(&ann, &path).unwrap();
        let back = read_annotations(&path).unwrap();
        assert_eq!(back, ann);
    }

    #[test]
    fn annotations_all_zero_fused_zero() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        let ann = AnnotationSet::new("s".into(), vec!["A".into()], vec![vec![0; 10]]);
        write_annotations(&ann, &path).unwrap();
        let back = read_annotations(&path).unwrap();
        assert!(back.fused.iter().all(|&b| b == 0));
    }

    #[test]
    fn annotations_inconsistent_fused_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "# subject=s channels=A\n0,1,0\n").unwrap();
        let err = read_annotations(&path).unwrap_err();
        assert!(err.to_string().contains("fused"), "{err}");
    }
}
