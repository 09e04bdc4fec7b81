//! Message bus with delayed delivery and per-edge bandwidth accounting.
//!
//! Every payload is a byte string with one documented big-endian layout:
//!
//! | field        | type          | bits            |
//! |--------------|---------------|-----------------|
//! | sender id    | `u16`         | 16              |
//! | item count   | `u16`         | 16              |
//! | items        | `count × (f64 x, f64 y)` | 128 each |
//!
//! A rendezvous point and a robot state report are one item (160 bits); a
//! plan carries one item per waypoint. The message kind travels on the
//! channel and is not part of the charged payload.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{vec2, Vec2};

pub const FLOAT_BITS: u64 = 64;
pub const HEADER_BITS: u64 = 32;
/// Bits per 2D item (two 64-bit floats).
pub const ITEM_BITS: u64 = 2 * FLOAT_BITS;
/// Size of a single-item message (point or state report).
pub const POINT_MESSAGE_BITS: u64 = HEADER_BITS + ITEM_BITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    Plan,
    Point,
    State,
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MessageKind::Plan => "plan",
            MessageKind::Point => "point",
            MessageKind::State => "state",
        })
    }
}

/// Payload size in bits for a message carrying `items` 2D items.
pub fn payload_bits(items: usize) -> u64 {
    HEADER_BITS + items as u64 * ITEM_BITS
}

pub fn encode_items(sender: usize, items: &[Vec2]) -> Result<Vec<u8>> {
    let id = u16::try_from(sender).map_err(|_| Error::Protocol(format!("sender id {sender} exceeds 16 bits")))?;
    let count = u16::try_from(items.len())
        .map_err(|_| Error::Protocol(format!("{} items exceed the 16-bit count", items.len())))?;
    let mut out = Vec::with_capacity(4 + 16 * items.len());
    out.extend_from_slice(&id.to_be_bytes());
    out.extend_from_slice(&count.to_be_bytes());
    for p in items {
        out.extend_from_slice(&p.x.to_be_bytes());
        out.extend_from_slice(&p.y.to_be_bytes());
    }
    Ok(out)
}

pub fn decode_items(bytes: &[u8]) -> Result<(usize, Vec<Vec2>)> {
    if bytes.len() < 4 {
        return Err(Error::Protocol("truncated header".into()));
    }
    let id = u16::from_be_bytes([bytes[0], bytes[1]]) as usize;
    let count = u16::from_be_bytes([bytes[2], bytes[3]]) as usize;
    if bytes.len() != 4 + 16 * count {
        return Err(Error::Protocol(format!("payload length {} does not match count {count}", bytes.len())));
    }
    let f = |k: usize| f64::from_be_bytes(bytes[k..k + 8].try_into().unwrap());
    let items = (0..count).map(|i| vec2(f(4 + 16 * i), f(12 + 16 * i))).collect();
    Ok((id, items))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub sender: usize,
    pub recipients: Vec<usize>,
    pub kind: MessageKind,
    pub bytes: Vec<u8>,
    pub send_tick: u64,
}

impl Message {
    pub fn new(sender: usize, recipients: Vec<usize>, kind: MessageKind, items: &[Vec2], send_tick: u64) -> Result<Self> {
        Ok(Self {
            sender,
            recipients,
            kind,
            bytes: encode_items(sender, items)?,
            send_tick,
        })
    }

    pub fn payload_bits(&self) -> u64 {
        8 * self.bytes.len() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub tick: u64,
    pub sender: usize,
    pub recipient: usize,
    pub kind: MessageKind,
    /// Bits charged on the edge; zero for dropped deliveries.
    pub bits: u64,
    pub dropped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Delivery {
    pub sender: usize,
    pub recipient: usize,
    pub kind: MessageKind,
    pub bytes: Vec<u8>,
    pub send_tick: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BroadcastDelta {
    pub delivered: Vec<usize>,
    pub dropped: Vec<usize>,
    pub bits_charged: u64,
}

/// Delivery restriction for a broadcast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reach<'a> {
    All,
    /// Only recipients within `radius` of the sender at send time.
    Proximity { positions: &'a [Vec2], radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommLedger {
    tick_dt: f64,
    ticks_per_window: u64,
    latency_ticks: u64,
    edge_bits: BTreeMap<(usize, usize), u64>,
    window_bits: BTreeMap<(usize, usize), BTreeMap<u64, u64>>,
    log: Vec<LogRecord>,
    pending: Vec<(u64, u64, Delivery)>,
    seq: u64,
}

impl CommLedger {
    pub fn new(tick_dt: f64, latency_ticks: u64) -> Self {
        assert!(tick_dt > 0.0, "tick duration must be positive");
        Self {
            tick_dt,
            ticks_per_window: ((1.0 / tick_dt) - 1e-9).ceil().max(1.0) as u64,
            latency_ticks,
            edge_bits: BTreeMap::new(),
            window_bits: BTreeMap::new(),
            log: Vec::new(),
            pending: Vec::new(),
            seq: 0,
        }
    }

    pub fn latency_ticks(&self) -> u64 {
        self.latency_ticks
    }

    pub fn tick_dt(&self) -> f64 {
        self.tick_dt
    }

    fn charge(&mut self, tick: u64, from: usize, to: usize, bits: u64) {
        *self.edge_bits.entry((from, to)).or_default() += bits;
        *self
            .window_bits
            .entry((from, to))
            .or_default()
            .entry(tick / self.ticks_per_window)
            .or_default() += bits;
    }

    /// Queues `msg` for every recipient (minus the sender), charging the
    /// payload on each delivered edge. Delivery happens `latency_ticks` later.
    pub fn broadcast(&mut self, msg: Message, reach: Reach<'_>) -> BroadcastDelta {
        let bits = msg.payload_bits();
        let mut delta = BroadcastDelta::default();
        for &to in &msg.recipients {
            if to == msg.sender {
                continue;
            }
            let in_range = match reach {
                Reach::All => true,
                Reach::Proximity { positions, radius } => {
                    (positions[to] - positions[msg.sender]).norm() <= radius
                }
            };
            self.log.push(LogRecord {
                tick: msg.send_tick,
                sender: msg.sender,
                recipient: to,
                kind: msg.kind,
                bits: if in_range { bits } else { 0 },
                dropped: !in_range,
            });
            if !in_range {
                delta.dropped.push(to);
                continue;
            }
            self.charge(msg.send_tick, msg.sender, to, bits);
            self.seq += 1;
            self.pending.push((
                msg.send_tick + self.latency_ticks,
                self.seq,
                Delivery {
                    sender: msg.sender,
                    recipient: to,
                    kind: msg.kind,
                    bytes: msg.bytes.clone(),
                    send_tick: msg.send_tick,
                },
            ));
            delta.delivered.push(to);
            delta.bits_charged += bits;
        }
        delta
    }

    /// Records sensing treated as communication: a state report on edge `from -> to`.
    pub fn charge_sensing(&mut self, tick: u64, from: usize, to: usize) {
        self.log.push(LogRecord {
            tick,
            sender: from,
            recipient: to,
            kind: MessageKind::State,
            bits: POINT_MESSAGE_BITS,
            dropped: false,
        });
        self.charge(tick, from, to, POINT_MESSAGE_BITS);
    }

    /// Removes and returns every delivery due at or before `tick`, in send order.
    pub fn deliver(&mut self, tick: u64) -> Vec<Delivery> {
        if self.pending.is_empty() {
            return Vec::new();
        }
        let mut due = Vec::new();
        let mut keep = Vec::with_capacity(self.pending.len());
        for item in self.pending.drain(..) {
            if item.0 <= tick {
                due.push(item);
            } else {
                keep.push(item);
            }
        }
        self.pending = keep;
        due.sort_by_key(|(t, s, _)| (*t, *s));
        due.into_iter().map(|(_, _, d)| d).collect()
    }

    pub fn log(&self) -> &[LogRecord] {
        &self.log
    }

    pub fn edge_totals(&self) -> &BTreeMap<(usize, usize), u64> {
        &self.edge_bits
    }

    pub fn total_bits(&self) -> u64 {
        self.edge_bits.values().sum()
    }

    pub fn message_count(&self, kind: MessageKind) -> usize {
        self.log.iter().filter(|r| r.kind == kind && !r.dropped).count()
    }

    pub fn is_silent(&self) -> bool {
        self.log.is_empty() && self.total_bits() == 0
    }

    /// Line-delimited export: `tick,sender,recipient,kind,bits,status`.
    pub fn export_log(&self) -> String {
        let mut s = String::from("tick,sender,recipient,kind,bits,status\n");
        for r in &self.log {
            s.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.tick,
                r.sender,
                r.recipient,
                r.kind,
                r.bits,
                if r.dropped { "dropped" } else { "delivered" }
            ));
        }
        s
    }

    /// Peak bits charged on any edge within one whole-second window.
    pub fn peak_edge_window_bits(&self) -> u64 {
        self.window_bits
            .values()
            .flat_map(|w| w.values().copied())
            .max()
            .unwrap_or(0)
    }
}

/// Rebuilds per-edge totals from a message log alone.
pub fn replay_edge_totals(log: &[LogRecord]) -> BTreeMap<(usize, usize), u64> {
    let mut out = BTreeMap::new();
    for r in log.iter().filter(|r| !r.dropped) {
        *out.entry((r.sender, r.recipient)).or_default() += r.bits;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeBandwidth {
    pub from: usize,
    pub to: usize,
    pub total_bits: u64,
    pub average_bps: f64,
    pub peak_bps: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSummary {
    pub edges: Vec<EdgeBandwidth>,
    pub total_bits: u64,
    pub messages: usize,
    pub duration_s: f64,
    /// Largest average rate over all edges.
    pub max_edge_average_bps: f64,
    /// Largest one-second window over all edges.
    pub max_edge_peak_bps: f64,
}

/// Per-edge average and peak rates over a completed trial.
pub fn bandwidth_summary(ledger: &CommLedger, duration_s: f64) -> BandwidthSummary {
    let window_s = ledger.ticks_per_window as f64 * ledger.tick_dt;
    let edges: Vec<EdgeBandwidth> = ledger
        .edge_bits
        .iter()
        .map(|(&(from, to), &total)| {
            let peak = ledger.window_bits[&(from, to)].values().copied().max().unwrap_or(0);
            EdgeBandwidth {
                from,
                to,
                total_bits: total,
                average_bps: if duration_s > 0.0 { total as f64 / duration_s } else { 0.0 },
                peak_bps: peak as f64 / window_s,
            }
        })
        .collect();
    BandwidthSummary {
        total_bits: ledger.total_bits(),
        messages: ledger.log.iter().filter(|r| !r.dropped).count(),
        duration_s,
        max_edge_average_bps: edges.iter().map(|e| e.average_bps).fold(0.0, f64::max),
        max_edge_peak_bps: edges.iter().map(|e| e.peak_bps).fold(0.0, f64::max),
        edges,
    }
}
