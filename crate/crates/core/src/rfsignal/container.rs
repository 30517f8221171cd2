//! Binary dataset container.
//!
//! A file is a plain concatenation of records, all little-endian:
//!
//! ```text
//! label: u16 | len: u32 | params: 9 × f64 | len × (I: f32, Q: f32)
//! ```
//!
//! `params` are the floating-point fields of [`ChannelParams`] in declaration
//! order (`snr_db`, `freq_offset`, `srm`, `g_tx`, `g_rx`, `phi_tx`, `phi_rx`,
//! `gain`, `phase`). The integer delay and augmentation provenance are not
//! stored.

use std::io::{self, Read, Write};

use super::{ChannelParams, Complex64, Observation};
use crate::error::{Error, Result};

pub const HEADER_PARAMS: usize = 9;
pub const RECORD_HEADER_BYTES: usize = 2 + 4 + 8 * HEADER_PARAMS;

pub fn write_dataset<W: Write>(mut out: W, observations: &[Observation]) -> Result<()> {
    for obs in observations {
        let len = u32::try_from(obs.samples.len())
            .map_err(|_| Error::invalid("observation longer than u32::MAX samples"))?;
        let mut record = Vec::with_capacity(RECORD_HEADER_BYTES + 8 * obs.samples.len());
        record.extend_from_slice(&obs.label.to_le_bytes());
        record.extend_from_slice(&len.to_le_bytes());
        for p in obs.meta.to_header() {
            record.extend_from_slice(&p.to_le_bytes());
        }
        for s in &obs.samples {
            record.extend_from_slice(&(s.re as f32).to_le_bytes());
            record.extend_from_slice(&(s.im as f32).to_le_bytes());
        }
        out.write_all(&record)?;
    }
    out.flush()?;
    Ok(())
}

fn read_exact_or_eof<R: Read>(input: &mut R, buf: &mut [u8]) -> io::Result<bool> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) if filled == 0 => return Ok(false),
            Ok(0) => return Err(io::Error::new(io::ErrorKind::UnexpectedEof, "truncated record header")),
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(true)
}

pub fn read_dataset<R: Read>(mut input: R) -> Result<Vec<Observation>> {
    let mut observations = Vec::new();
    let mut header = [0u8; RECORD_HEADER_BYTES];
    while read_exact_or_eof(&mut input, &mut header)? {
        let label = u16::from_le_bytes([header[0], header[1]]);
        let len = u32::from_le_bytes(header[2..6].try_into().unwrap()) as usize;
        let mut params = [0.0; HEADER_PARAMS];
        for (k, p) in params.iter_mut().enumerate() {
            let at = 6 + 8 * k;
            *p = f64::from_le_bytes(header[at..at + 8].try_into().unwrap());
        }
        let mut body = vec![0u8; 8 * len];
        input.read_exact(&mut body).map_err(|e| {
            Error::invalid(format!("record {} truncated: {e}", observations.len()))
        })?;
        let samples = body
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes(c[0..4].try_into().unwrap());
                let im = f32::from_le_bytes(c[4..8].try_into().unwrap());
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        observations.push(Observation {
            samples,
            label,
            meta: ChannelParams::from_header(params),
            source_index: None,
        });
    }
    Ok(observations)
}
