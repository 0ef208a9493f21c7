//! Single-replication event loop.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SimConfig, SimPolicy};

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Completion { server: usize, packet: u64 },
    FreezeEnd,
}

impl EventKind {
    // completions win ties against freeze expiry
    fn priority(&self) -> u8 {
        match self {
            EventKind::Completion { .. } => 0,
            EventKind::FreezeEnd => 1,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    order: u64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.kind.priority().cmp(&self.kind.priority()))
            .then_with(|| other.order.cmp(&self.order))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Packet {
    pub seq: u64,
    pub generated: f64,
}

/// Entry point of a freshly generated packet, labelled by the tagged-chain
/// state it starts in: (1,1), (10,1) or (6,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entry {
    AloneOnFast = 0,
    OnSlowFastBusy = 1,
    OnFastSlowBusy = 2,
}

/// Per-event log kept only when tracing is requested.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    /// `(generation time, reception time, sequence)` of accepted packets.
    pub accepted: Vec<(f64, f64, u64)>,
    /// `(sequence of discarded packet, sequence of freshest accepted)`.
    pub discarded: Vec<(u64, u64)>,
}

/// Raw output of one replication.
#[derive(Debug, Clone, Default)]
pub struct RawReplication {
    /// Age right after the reception opening each recorded cycle.
    pub starts: Vec<f64>,
    /// Length of each recorded cycle.
    pub lengths: Vec<f64>,
    /// `sum(u L + L^2 / 2)` over recorded cycles, in order.
    pub area: f64,
    pub duration: f64,
    pub peak_sum: f64,
    pub generated: u64,
    pub discarded: u64,
    pub preempted: u64,
    pub entries: [u64; 3],
    pub trace: Option<Trace>,
}

struct Engine {
    policy: SimPolicy,
    rates: [f64; 2],
    rng: ChaCha8Rng,
    now: f64,
    queue: BinaryHeap<Event>,
    order: u64,
    servers: [Option<Packet>; 2],
    frozen: bool,
    next_seq: u64,
    last_accepted: Option<Packet>,
    last_reception: f64,
    cycles: u64,
    warmup: u64,
    out: RawReplication,
}

impl Engine {
    fn exp(&mut self, rate: f64) -> f64 {
        // inversion; 1 - U lies in (0, 1]
        -(1.0 - self.rng.random::<f64>()).ln() / rate
    }

    fn schedule(&mut self, delay: f64, kind: EventKind) {
        self.order += 1;
        self.queue.push(Event {
            time: self.now + delay,
            order: self.order,
            kind,
        });
    }

    fn recording(&self) -> bool {
        self.cycles >= self.warmup
    }

    fn start(&mut self, server: usize) {
        debug_assert!(self.servers[server].is_none());
        let packet = Packet {
            seq: self.next_seq,
            generated: self.now,
        };
        self.next_seq += 1;
        if self.recording() {
            self.out.generated += 1;
            if !matches!(self.policy, SimPolicy::Zw(_)) {
                let entry = match (server, self.servers[1 - server].is_some()) {
                    (0, false) => Entry::AloneOnFast,
                    (0, true) => Entry::OnFastSlowBusy,
                    _ => Entry::OnSlowFastBusy,
                };
                self.out.entries[entry as usize] += 1;
            }
        }
        self.servers[server] = Some(packet);
        let service = self.exp(self.rates[server]);
        self.schedule(service, EventKind::Completion { server, packet: packet.seq });
        if let SimPolicy::Fp(p) = self.policy {
            self.frozen = true;
            let rate = p.k as f64 * p.lambda;
            let freeze: f64 = (0..p.k).map(|_| self.exp(rate)).sum();
            self.schedule(freeze, EventKind::FreezeEnd);
        }
    }

    /// Starts transmissions allowed by the policy at the current instant.
    fn dispatch(&mut self) {
        match self.policy {
            SimPolicy::Zw(_) => {}
            SimPolicy::Fp(_) => {
                if !self.frozen {
                    if let Some(s) = self.servers.iter().position(Option::is_none) {
                        self.start(s);
                    }
                }
            }
            SimPolicy::FpPreemptOnly(_) => {
                while let Some(s) = self.servers.iter().position(Option::is_none) {
                    self.start(s);
                }
            }
        }
    }

    fn accept(&mut self, packet: Packet) {
        let t = self.now;
        if let Some(prev) = self.last_accepted {
            let length = t - self.last_reception;
            let start = self.last_reception - prev.generated;
            if self.recording() {
                self.out.starts.push(start);
                self.out.lengths.push(length);
                self.out.area += start * length + 0.5 * length * length;
                self.out.duration += length;
                self.out.peak_sum += start + length;
            }
            self.cycles += 1;
        }
        if let Some(trace) = self.out.trace.as_mut() {
            trace.accepted.push((packet.generated, t, packet.seq));
        }
        self.last_accepted = Some(packet);
        self.last_reception = t;
    }

    fn complete(&mut self, server: usize, seq: u64) {
        let packet = match self.servers[server] {
            Some(p) if p.seq == seq => p,
            // preempted earlier; its completion is void
            _ => return,
        };
        self.servers[server] = None;
        let fresh = !matches!(self.last_accepted, Some(p) if p.seq >= packet.seq);
        if fresh {
            self.accept(packet);
        } else {
            if self.recording() {
                self.out.discarded += 1;
            }
            if let Some(trace) = self.out.trace.as_mut() {
                let newest = self.last_accepted.map_or(0, |p| p.seq);
                trace.discarded.push((packet.seq, newest));
            }
        }
        match self.policy {
            SimPolicy::Zw(_) => self.start(server),
            SimPolicy::Fp(_) | SimPolicy::FpPreemptOnly(_) => {
                let other = 1 - server;
                if matches!(self.servers[other], Some(o) if o.seq < packet.seq) {
                    self.servers[other] = None;
                    if self.recording() {
                        self.out.preempted += 1;
                    }
                }
                self.dispatch();
            }
        }
    }

    fn run(mut self, horizon: u64) -> RawReplication {
        match self.policy {
            SimPolicy::Zw(_) => {
                self.start(0);
                self.start(1);
            }
            _ => self.dispatch(),
        }
        while self.cycles < horizon {
            let event = self.queue.pop().expect("event queue never drains");
            self.now = event.time;
            match event.kind {
                EventKind::Completion { server, packet } => self.complete(server, packet),
                EventKind::FreezeEnd => {
                    self.frozen = false;
                    self.dispatch();
                }
            }
        }
        self.out
    }
}

/// Runs replication `rep` of `cfg` on its own random stream.
pub fn run_replication(cfg: &SimConfig, rep: u32, trace: bool) -> RawReplication {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(rep as u64);
    let (mu1, mu2) = cfg.policy.rates();
    let engine = Engine {
        policy: cfg.policy,
        rates: [mu1, mu2],
        rng,
        now: 0.0,
        queue: BinaryHeap::new(),
        order: 0,
        servers: [None, None],
        frozen: false,
        next_seq: 0,
        last_accepted: None,
        last_reception: 0.0,
        cycles: 0,
        warmup: cfg.effective_warmup(),
        out: RawReplication {
            trace: trace.then(Trace::default),
            ..RawReplication::default()
        },
    };
    engine.run(cfg.horizon)
}
