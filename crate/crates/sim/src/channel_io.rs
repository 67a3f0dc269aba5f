//! Snapshot export as CSV with one row per (UE, RB): `n,k,sigma,g_r2m`.
//! `g_r2m` depends on the RB only and repeats down each column.

use std::io::{Read, Write};

use hcran_core::channel::ChannelState;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ChannelIoError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {row}: {reason}")]
    Layout { row: usize, reason: String },
    #[error(transparent)]
    Core(#[from] hcran_core::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    n: usize,
    k: usize,
    sigma: f64,
    g_r2m: f64,
}

pub fn write_channel<W: Write>(ch: &ChannelState, out: W) -> Result<(), ChannelIoError> {
    let mut w = csv::Writer::from_writer(out);
    for n in 0..ch.ues() {
        for k in 0..ch.rbs() {
            w.serialize(Entry {
                n,
                k,
                sigma: ch.sigma(n, k),
                g_r2m: ch.g_r2m(k),
            })?;
        }
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Reads a dump back into the solver's view of the snapshot. Rows must
/// be in the order [`write_channel`] emits them.
pub fn read_channel<R: Read>(input: R, rb_bandwidth_hz: f64) -> Result<ChannelState, ChannelIoError> {
    let mut entries = Vec::new();
    for e in csv::Reader::from_reader(input).deserialize() {
        let e: Entry = e?;
        entries.push(e);
    }
    let rbs = entries.iter().take_while(|e| e.n == 0).count();
    if rbs == 0 || entries.len() % rbs != 0 {
        return Err(ChannelIoError::Layout {
            row: entries.len(),
            reason: "rows do not form a full UE x RB grid".into(),
        });
    }
    let ues = entries.len() / rbs;
    let mut g_r2m = vec![0.0; rbs];
    for (i, e) in entries.iter().enumerate() {
        if (e.n, e.k) != (i / rbs, i % rbs) {
            return Err(ChannelIoError::Layout {
                row: i + 1,
                reason: format!("expected n={} k={}, found n={} k={}", i / rbs, i % rbs, e.n, e.k),
            });
        }
        if e.n == 0 {
            g_r2m[e.k] = e.g_r2m;
        } else if e.g_r2m != g_r2m[e.k] {
            return Err(ChannelIoError::Layout {
                row: i + 1,
                reason: format!("g_r2m differs from the first row of RB {}", e.k),
            });
        }
    }
    let sigma = entries.iter().map(|e| e.sigma).collect();
    Ok(ChannelState::from_parts(ues, rbs, rb_bandwidth_hz, sigma, g_r2m)?)
}
