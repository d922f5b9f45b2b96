//! Event loop shared by the full pipeline, the GB-only benchmark and the
//! single-witness queue.

use std::collections::VecDeque;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::Exp1;

use super::event::{EventKind, EventQueue, Payload};
use super::rng::Substreams;
use super::stats::{is_growing, LevelTracker, SampleTracker, NUM_CHECKPOINTS};
use crate::radio::{Deployment, LinkSuccessMatrix};
use crate::selection::sample_delivery;

pub const WARMUP_FRACTION: f64 = 0.1;
pub const WARMUP_CONFIRMATIONS: u64 = 1000;

pub(crate) enum Routing<'a> {
    /// Retry-based delivery to witnesses, classified by registration.
    Wiblock {
        dep: &'a Deployment,
        ps: &'a LinkSuccessMatrix,
        retry_limit: usize,
    },
    /// Every transaction straight to the GB.
    Naive { num_devices: usize },
    /// One witness; the phase is drawn at service start.
    WitnessOnly { global_prob: f64 },
}

pub(crate) struct EngineSpec<'a> {
    pub routing: Routing<'a>,
    pub arrival_rate: f64,
    pub mu_global: f64,
    pub mu_local: f64,
    /// `(block_size, block_rate)`; `None` removes the GB tier.
    pub gb: Option<(usize, f64)>,
    pub horizon: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
struct Job {
    tx: u64,
    device: usize,
    arrived: f64,
    global: Option<bool>,
}

struct WitnessServer {
    queue: VecDeque<Job>,
    level: LevelTracker,
    sojourn: SampleTracker,
    window_arrivals: u64,
    local_ledger: u64,
    services: u64,
    global_services: u64,
}

struct GbServer {
    pending: VecDeque<Job>,
    mining: bool,
    next_block: u64,
    block_size: usize,
    block_rate: f64,
    level: LevelTracker,
    beyond_block: LevelTracker,
    sojourn: SampleTracker,
    window_arrivals: u64,
    ledger: u64,
    blocks: u64,
}

pub(crate) struct Outcome {
    pub warmup_s: f64,
    pub warmup_complete: bool,
    pub generated: u64,
    pub dropped: u64,
    pub delivered_global: u64,
    pub delivered_local: u64,
    pub confirmed_global: u64,
    pub confirmed_local: u64,
    pub witness_departures: u64,
    pub witness_queue: Vec<(f64, f64)>,
    pub witness_sojourn: Vec<(f64, f64)>,
    pub witness_sojourn_all: (f64, f64),
    pub witness_arrival_rate: Vec<f64>,
    pub witness_services: u64,
    pub witness_global_services: u64,
    pub local_ledgers: Vec<u64>,
    pub in_witnesses: u64,
    pub gb_queue: (f64, f64),
    pub gb_beyond_block: (f64, f64),
    pub gb_sojourn: (f64, f64),
    pub gb_sojourn_samples: u64,
    pub gb_arrival_rate: f64,
    pub gb_ledger: u64,
    pub blocks: u64,
    pub in_gb: u64,
    pub unstable: bool,
}

pub(crate) struct Engine<'a, 't> {
    spec: EngineSpec<'a>,
    rng: Substreams,
    events: EventQueue,
    witnesses: Vec<WitnessServer>,
    gb: Option<GbServer>,
    order: Vec<usize>,
    generated: u64,
    dropped: u64,
    delivered_global: u64,
    delivered_local: u64,
    confirmed_global: u64,
    completions: u64,
    witness_departures: u64,
    thousandth_at: Option<f64>,
    window_start: Option<f64>,
    next_checkpoint: usize,
    checkpoints: Vec<(f64, Vec<f64>)>,
    trace: Option<&'t mut dyn Write>,
    trace_error: Option<io::Error>,
}

impl<'a, 't> Engine<'a, 't> {
    pub fn new(spec: EngineSpec<'a>, trace: Option<&'t mut dyn Write>) -> Self {
        let horizon = spec.horizon;
        let num_witnesses = match &spec.routing {
            Routing::Wiblock { dep, .. } => dep.num_witnesses(),
            Routing::Naive { .. } => 0,
            Routing::WitnessOnly { .. } => 1,
        };
        let witnesses = (0..num_witnesses)
            .map(|_| WitnessServer {
                queue: VecDeque::new(),
                level: LevelTracker::new(0.0, horizon),
                sojourn: SampleTracker::new(0.0, horizon),
                window_arrivals: 0,
                local_ledger: 0,
                services: 0,
                global_services: 0,
            })
            .collect();
        let gb = spec.gb.map(|(block_size, block_rate)| GbServer {
            pending: VecDeque::new(),
            mining: false,
            next_block: 0,
            block_size,
            block_rate,
            level: LevelTracker::new(0.0, horizon),
            beyond_block: LevelTracker::new(0.0, horizon),
            sojourn: SampleTracker::new(0.0, horizon),
            window_arrivals: 0,
            ledger: 0,
            blocks: 0,
        });
        let rng = Substreams::new(spec.seed);
        Engine {
            spec,
            rng,
            events: EventQueue::new(),
            witnesses,
            gb,
            order: (0..num_witnesses).collect(),
            generated: 0,
            dropped: 0,
            delivered_global: 0,
            delivered_local: 0,
            confirmed_global: 0,
            completions: 0,
            witness_departures: 0,
            thousandth_at: None,
            window_start: None,
            next_checkpoint: 1,
            checkpoints: Vec::with_capacity(NUM_CHECKPOINTS),
            trace,
            trace_error: None,
        }
    }

    fn exp(rng: &mut impl Rng, rate: f64) -> f64 {
        let e: f64 = rng.sample(Exp1);
        e / rate
    }

    fn trace_row(
        &mut self,
        t: f64,
        kind: &str,
        tx: Option<u64>,
        device: Option<usize>,
        witness: Option<usize>,
        detail: &str,
    ) {
        let Some(out) = self.trace.as_mut() else {
            return;
        };
        if self.trace_error.is_some() {
            return;
        }
        let opt = |x: Option<String>| x.unwrap_or_default();
        let res = writeln!(
            out,
            "{t},{kind},{},{},{},{detail}",
            opt(tx.map(|x| x.to_string())),
            opt(device.map(|x| x.to_string())),
            opt(witness.map(|x| x.to_string())),
        );
        if let Err(e) = res {
            self.trace_error = Some(e);
        }
    }

    fn window(&self) -> f64 {
        self.window_start.unwrap_or(0.0)
    }

    fn schedule_arrival(&mut self, now: f64) {
        if self.spec.arrival_rate > 0.0 {
            let t = now + Self::exp(&mut self.rng.generation, self.spec.arrival_rate);
            self.events
                .schedule(t, EventKind::Arrival, Payload::Transaction(self.generated));
        }
    }

    fn note_completions(&mut self, t: f64, n: u64) {
        let before = self.completions;
        self.completions += n;
        if before < WARMUP_CONFIRMATIONS && self.completions >= WARMUP_CONFIRMATIONS {
            self.thousandth_at = Some(t);
        }
    }

    fn levels(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.witnesses.iter().map(|w| w.level.level()).collect();
        if let Some(gb) = &self.gb {
            out.push(gb.level.level());
        }
        out
    }

    fn checkpoint_time(&self, idx: usize) -> f64 {
        self.spec.horizon * idx as f64 / NUM_CHECKPOINTS as f64
    }

    /// Bookkeeping that must see the state left by all events before `now`.
    fn before_event(&mut self, now: f64) {
        while self.next_checkpoint <= NUM_CHECKPOINTS
            && self.checkpoint_time(self.next_checkpoint) <= now
        {
            let snapshot = (self.checkpoint_time(self.next_checkpoint), self.levels());
            self.checkpoints.push(snapshot);
            self.next_checkpoint += 1;
        }
        let min_warmup = WARMUP_FRACTION * self.spec.horizon;
        if self.window_start.is_none() && now >= min_warmup {
            if let Some(t) = self.thousandth_at {
                let start = t.max(min_warmup);
                self.window_start = Some(start);
                for w in &mut self.witnesses {
                    w.level.restart(start);
                    w.sojourn.restart(start);
                    w.window_arrivals = 0;
                }
                if let Some(gb) = &mut self.gb {
                    gb.level.restart(start);
                    gb.beyond_block.restart(start);
                    gb.sojourn.restart(start);
                    gb.window_arrivals = 0;
                }
            }
        }
    }

    pub fn run(mut self) -> io::Result<Outcome> {
        if self.trace.is_some() {
            self.trace_row_header();
        }
        self.schedule_arrival(0.0);
        while let Some(t) = self.events.peek_time() {
            if t > self.spec.horizon {
                break;
            }
            self.before_event(t);
            let ev = self.events.pop().expect("peeked event");
            match (ev.kind, ev.payload) {
                (EventKind::Arrival, Payload::Transaction(tx)) => self.on_arrival(t, tx),
                (EventKind::WitnessServiceEnd, Payload::Witness(w)) => self.on_service_end(t, w),
                (EventKind::BlockComplete, Payload::Block(id)) => self.on_block_complete(t, id),
                (kind, payload) => unreachable!("{kind:?} with {payload:?}"),
            }
        }
        self.before_event(self.spec.horizon);
        if let Some(e) = self.trace_error.take() {
            return Err(e);
        }
        if let Some(out) = self.trace.as_mut() {
            out.flush()?;
        }
        Ok(self.finish())
    }

    fn trace_row_header(&mut self) {
        if let Some(out) = self.trace.as_mut() {
            if let Err(e) = writeln!(out, "time_s,kind,tx_id,device_id,witness_id,detail") {
                self.trace_error = Some(e);
            }
        }
    }

    fn on_arrival(&mut self, t: f64, tx: u64) {
        self.generated += 1;
        self.schedule_arrival(t);
        match self.spec.routing {
            Routing::Wiblock {
                dep,
                ps,
                retry_limit,
            } => {
                let device = self.rng.generation.random_range(0..dep.num_devices());
                let delivered = sample_delivery(
                    &mut self.rng.channel,
                    ps.row(device),
                    retry_limit,
                    &mut self.order,
                    |_| {},
                );
                match delivered {
                    None => {
                        self.dropped += 1;
                        self.trace_row(t, "arrival", Some(tx), Some(device), None, "dropped");
                    }
                    Some(w) => {
                        let global = !dep.is_local(device, w);
                        if global {
                            self.delivered_global += 1;
                        } else {
                            self.delivered_local += 1;
                        }
                        let detail = if global {
                            "delivered_global"
                        } else {
                            "delivered_local"
                        };
                        self.trace_row(t, "arrival", Some(tx), Some(device), Some(w), detail);
                        let job = Job {
                            tx,
                            device,
                            arrived: t,
                            global: Some(global),
                        };
                        self.witness_join(t, w, job);
                    }
                }
            }
            Routing::Naive { num_devices } => {
                let device = self.rng.generation.random_range(0..num_devices);
                self.trace_row(t, "arrival", Some(tx), Some(device), None, "to_gb");
                let job = Job {
                    tx,
                    device,
                    arrived: t,
                    global: Some(true),
                };
                self.gb_join(t, job);
            }
            Routing::WitnessOnly { .. } => {
                self.trace_row(t, "arrival", Some(tx), None, Some(0), "");
                let job = Job {
                    tx,
                    device: 0,
                    arrived: t,
                    global: None,
                };
                self.witness_join(t, 0, job);
            }
        }
    }

    fn witness_join(&mut self, t: f64, w: usize, job: Job) {
        let server = &mut self.witnesses[w];
        server.queue.push_back(job);
        server.level.add(t, 1.0);
        server.window_arrivals += 1;
        if server.queue.len() == 1 {
            self.start_service(t, w);
        }
    }

    fn start_service(&mut self, t: f64, w: usize) {
        let global = match self.witnesses[w].queue.front().and_then(|j| j.global) {
            Some(g) => g,
            None => {
                let p = match self.spec.routing {
                    Routing::WitnessOnly { global_prob } => global_prob,
                    _ => 0.0,
                };
                let g = self.rng.phase.random::<f64>() < p;
                self.witnesses[w]
                    .queue
                    .front_mut()
                    .expect("job in service")
                    .global = Some(g);
                g
            }
        };
        let rate = if global {
            self.spec.mu_global
        } else {
            self.spec.mu_local
        };
        let server = &mut self.witnesses[w];
        server.services += 1;
        server.global_services += global as u64;
        let done = t + Self::exp(&mut self.rng.service, rate);
        self.events
            .schedule(done, EventKind::WitnessServiceEnd, Payload::Witness(w));
    }

    fn on_service_end(&mut self, t: f64, w: usize) {
        let window = self.window();
        let server = &mut self.witnesses[w];
        let job = server.queue.pop_front().expect("witness was busy");
        server.level.add(t, -1.0);
        if job.arrived >= window {
            server.sojourn.record(t, t - job.arrived);
        }
        self.witness_departures += 1;
        let global = job.global.expect("phase fixed at service start");
        let wiblock = matches!(self.spec.routing, Routing::Wiblock { .. });
        match (wiblock, global) {
            (true, true) if self.gb.is_some() => {
                self.trace_row(
                    t,
                    "witness_service_end",
                    Some(job.tx),
                    Some(job.device),
                    Some(w),
                    "to_gb",
                );
                self.gb_join(t, Job { arrived: t, ..job });
            }
            (true, false) => {
                self.witnesses[w].local_ledger += 1;
                self.trace_row(
                    t,
                    "witness_service_end",
                    Some(job.tx),
                    Some(job.device),
                    Some(w),
                    "confirmed_local",
                );
                self.note_completions(t, 1);
            }
            _ => {
                self.trace_row(
                    t,
                    "witness_service_end",
                    Some(job.tx),
                    None,
                    Some(w),
                    if global { "global" } else { "local" },
                );
                self.note_completions(t, 1);
            }
        }
        if !self.witnesses[w].queue.is_empty() {
            self.start_service(t, w);
        }
    }

    fn gb_join(&mut self, t: f64, job: Job) {
        let gb = self.gb.as_mut().expect("GB tier enabled");
        gb.pending.push_back(job);
        gb.window_arrivals += 1;
        gb.level.add(t, 1.0);
        if gb.pending.len() > gb.block_size {
            gb.beyond_block.add(t, 1.0);
        }
        if !gb.mining {
            self.start_block(t);
        }
    }

    fn start_block(&mut self, t: f64) {
        let gb = self.gb.as_mut().expect("GB tier enabled");
        gb.mining = true;
        let id = gb.next_block;
        gb.next_block += 1;
        let done = t + Self::exp(&mut self.rng.block, gb.block_rate);
        self.events
            .schedule(done, EventKind::BlockComplete, Payload::Block(id));
    }

    fn on_block_complete(&mut self, t: f64, id: u64) {
        let window = self.window();
        let gb = self.gb.as_mut().expect("GB tier enabled");
        let before = gb.pending.len();
        let n = before.min(gb.block_size);
        for job in gb.pending.drain(..n) {
            if job.arrived >= window {
                gb.sojourn.record(t, t - job.arrived);
            }
        }
        gb.level.add(t, -(n as f64));
        let beyond_before = before.saturating_sub(gb.block_size);
        let beyond_after = gb.pending.len().saturating_sub(gb.block_size);
        gb.beyond_block
            .add(t, beyond_after as f64 - beyond_before as f64);
        gb.ledger += n as u64;
        gb.mining = false;
        if n > 0 {
            gb.blocks += 1;
        }
        let more = !gb.pending.is_empty();
        self.confirmed_global += n as u64;
        self.note_completions(t, n as u64);
        self.trace_row(
            t,
            "block_complete",
            None,
            None,
            None,
            &format!("block={id} confirmed={n}"),
        );
        if more {
            self.start_block(t);
        }
    }

    fn finish(mut self) -> Outcome {
        let horizon = self.spec.horizon;
        let window = self.window();
        let span = horizon - window;
        let rate = |n: u64| {
            if span > 0.0 {
                n as f64 / span
            } else {
                f64::NAN
            }
        };

        let window_checkpoints: Vec<&(f64, Vec<f64>)> =
            self.checkpoints.iter().filter(|c| c.0 >= window).collect();
        let xs: Vec<f64> = window_checkpoints.iter().map(|c| c.0).collect();
        let series = window_checkpoints.first().map_or(0, |c| c.1.len());
        let unstable = (0..series).any(|s| {
            let ys: Vec<f64> = window_checkpoints.iter().map(|c| c.1[s]).collect();
            is_growing(&xs, &ys)
        });

        let mut all_sum = 0.0;
        let mut all_count = 0u64;
        let mut witness_queue = Vec::new();
        let mut witness_sojourn = Vec::new();
        let mut witness_arrival_rate = Vec::new();
        let mut witness_services = 0;
        let mut witness_global_services = 0;
        let mut local_ledgers = Vec::new();
        let mut in_witnesses = 0;
        for w in &mut self.witnesses {
            witness_queue.push(w.level.summary());
            let s = w.sojourn.summary();
            if w.sojourn.count() > 0 {
                all_sum += s.0 * w.sojourn.count() as f64;
                all_count += w.sojourn.count();
            }
            witness_sojourn.push(s);
            witness_arrival_rate.push(rate(w.window_arrivals));
            witness_services += w.services;
            witness_global_services += w.global_services;
            local_ledgers.push(w.local_ledger);
            in_witnesses += w.queue.len() as u64;
        }
        // Pooled half-width, treating witnesses as independent.
        let pooled_hw = if all_count > 0 {
            let mut acc = 0.0;
            for (w, s) in self.witnesses.iter().zip(&witness_sojourn) {
                let share = w.sojourn.count() as f64 / all_count as f64;
                if s.1.is_finite() {
                    acc += (share * s.1).powi(2);
                }
            }
            acc.sqrt()
        } else {
            f64::NAN
        };
        let witness_sojourn_all = (
            if all_count > 0 {
                all_sum / all_count as f64
            } else {
                f64::NAN
            },
            pooled_hw,
        );

        let nan = (f64::NAN, f64::NAN);
        let (gb_queue, gb_beyond_block, gb_sojourn, gb_samples, gb_rate, gb_ledger, blocks, in_gb) =
            match &mut self.gb {
                Some(gb) => (
                    gb.level.summary(),
                    gb.beyond_block.summary(),
                    gb.sojourn.summary(),
                    gb.sojourn.count(),
                    rate(gb.window_arrivals),
                    gb.ledger,
                    gb.blocks,
                    gb.pending.len() as u64,
                ),
                None => (nan, nan, nan, 0, f64::NAN, 0, 0, 0),
            };

        Outcome {
            warmup_s: window,
            warmup_complete: self.window_start.is_some(),
            generated: self.generated,
            dropped: self.dropped,
            delivered_global: self.delivered_global,
            delivered_local: self.delivered_local,
            confirmed_global: self.confirmed_global,
            confirmed_local: local_ledgers.iter().sum(),
            witness_departures: self.witness_departures,
            witness_queue,
            witness_sojourn,
            witness_sojourn_all,
            witness_arrival_rate,
            witness_services,
            witness_global_services,
            local_ledgers,
            in_witnesses,
            gb_queue,
            gb_beyond_block,
            gb_sojourn,
            gb_sojourn_samples: gb_samples,
            gb_arrival_rate: gb_rate,
            gb_ledger,
            blocks,
            in_gb,
            unstable,
        }
    }
}
