//! Timestep-synchronous simulator of a mapped network.
//!
//! Within each timestep the layers run in order. For layer `l`:
//!
//! 1. spikes feeding `l` travel to its mPEs: from SRAM over the shared bus for the first
//!    layer and for producers in another NeuroCell, otherwise through the switches;
//! 2. every tile whose rows received a packet is read once, yielding integer partial sums
//!    in conductance-step units;
//! 3. each neuron's home mPE adds its partial sums (remote ones arrive over `C_ext`) and
//!    applies [`if_step`].
//!
//! The last layer's spikes are written back to SRAM. With `event_driven` set, all-zero
//! packets are dropped at the sender and all-zero SRAM reads are not broadcast.

mod packet;
mod switch;

pub use packet::{bit, pack, payload_words, zero_check, SpikePacket};
pub use switch::{switch_transfer, HopEvent, SwitchState, LOCAL_PORTS};

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mapper::{Endpoint, MappingPlan, Port, RoutingTable};
use crate::snn::{if_step, NeuronState, SpikeTrain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimOptions {
    pub event_driven: bool,
    /// Record one [`TraceEvent`] per packet event.
    pub trace: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { event_driven: true, trace: false }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    pub crossbar_reads: u64,
    pub neuron_integrations: u64,
    pub spikes_emitted: u64,
    pub packets_generated: u64,
    pub packets_sent: u64,
    pub packets_suppressed: u64,
    pub hop_count: u64,
    pub cext_transfers: u64,
    pub bus_broadcasts: u64,
    pub bus_suppressed: u64,
    pub sram_reads: u64,
    pub sram_writes: u64,
    pub buffer_accesses: u64,
    pub cycles_elapsed: u64,
}

impl Counters {
    pub fn named(&self) -> [(&'static str, u64); 14] {
        [
            ("crossbar_reads", self.crossbar_reads),
            ("neuron_integrations", self.neuron_integrations),
            ("spikes_emitted", self.spikes_emitted),
            ("packets_generated", self.packets_generated),
            ("packets_sent", self.packets_sent),
            ("packets_suppressed", self.packets_suppressed),
            ("hop_count", self.hop_count),
            ("cext_transfers", self.cext_transfers),
            ("bus_broadcasts", self.bus_broadcasts),
            ("bus_suppressed", self.bus_suppressed),
            ("sram_reads", self.sram_reads),
            ("sram_writes", self.sram_writes),
            ("buffer_accesses", self.buffer_accesses),
            ("cycles_elapsed", self.cycles_elapsed),
        ]
    }
}

/// Cycle tally of one layer in one timestep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTally {
    pub timestep: usize,
    pub layer: usize,
    /// Serialized SRAM reads/writes on the shared bus, including output write-back.
    pub bus_cycles: u64,
    /// Longest time-multiplexed integration (one cycle per partial sum read) on any mPE.
    pub mpe_compute_cycles: u64,
    /// Most remote partial sums gathered by any mPE.
    pub cext_cycles: u64,
    /// Longest switch drain in any NeuroCell.
    pub switch_cycles: u64,
    /// Slowest NeuroCell: switch drain + integration + `C_ext` gathering.
    pub critical_nc_cycles: u64,
    /// `bus + critical + 1` fire cycle.
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub cycle: u64,
    pub timestep: usize,
    /// `"switch N"` or `"bus"`.
    pub location: String,
    pub in_port: String,
    pub out_port: String,
    pub src: String,
    pub dst: String,
    pub suppressed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub layer_spikes: Vec<SpikeTrain>,
    pub counters: Counters,
    pub stages: Vec<StageTally>,
    pub trace: Vec<TraceEvent>,
    pub timesteps: usize,
}

impl SimResult {
    pub fn output(&self) -> &SpikeTrain {
        self.layer_spikes.last().expect("at least one layer")
    }

    /// `counter,value`
    pub fn write_counters_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["counter", "value"])?;
        for (name, v) in self.counters.named() {
            w.write_record([name, &v.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["cycle", "timestep", "location", "in_port", "out_port", "src", "dst", "suppressed"])?;
        for e in &self.trace {
            w.write_record([
                e.cycle.to_string(),
                e.timestep.to_string(),
                e.location.clone(),
                e.in_port.clone(),
                e.out_port.clone(),
                e.src.clone(),
                e.dst.clone(),
                e.suppressed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Tile contents in row-major event form.
struct TileRt {
    mpe: usize,
    rows: Vec<usize>,
    /// `by_row[r]` = `(local column, signed level)`.
    by_row: Vec<Vec<(u32, i32)>>,
    n_cols: usize,
}

struct LayerRt {
    tiles: std::ops::Range<usize>,
    /// `(tile, local col, remote distance)` per neuron.
    sources: Vec<Vec<(usize, usize, u64)>>,
    home: Vec<usize>,
    mpes: Vec<usize>,
}

/// Per mPE: packet window base → (spike bits, bits covered by delivered packets).
type InputBuffers = HashMap<usize, BTreeMap<usize, (Vec<u64>, Vec<u64>)>>;

struct Engine<'a> {
    plan: &'a MappingPlan,
    opts: SimOptions,
    tiles: Vec<TileRt>,
    layers: Vec<LayerRt>,
    tables: HashMap<usize, RoutingTable>,
    /// `(src, dst)` → source switch.
    route_switch: HashMap<(usize, usize), usize>,
    words: usize,
    /// Member bitmask of every packet group, per boundary.
    masks: Vec<Vec<Vec<u64>>>,
    /// `(source mPE, base)` → group index, per boundary.
    group_index: Vec<HashMap<(usize, usize), usize>>,
    c: Counters,
    log: Log,
    cycle: u64,
}

impl<'a> Engine<'a> {
    fn new(plan: &'a MappingPlan, opts: SimOptions) -> Self {
        let tiles = plan
            .tiles
            .iter()
            .map(|t| {
                let mut by_row = vec![Vec::new(); t.row_map.len()];
                for cell in &t.cells {
                    by_row[cell.row as usize].push((cell.col, cell.entry.signed_level()));
                }
                TileRt { mpe: plan.tile_mpe[t.id], rows: t.row_map.clone(), by_row, n_cols: t.col_map.len() }
            })
            .collect::<Vec<_>>();
        let layers = plan
            .layers
            .iter()
            .enumerate()
            .map(|(l, lp)| {
                let home = plan.neuron_home[l].clone();
                let sources = lp
                    .schedule
                    .sources
                    .iter()
                    .enumerate()
                    .map(|(j, srcs)| {
                        srcs.iter()
                            .map(|&(t, c)| (t, c, tiles[t].mpe.abs_diff(home[j]) as u64))
                            .collect()
                    })
                    .collect();
                let mpes = plan.mpes.iter().filter(|m| m.layer == l).map(|m| m.id).collect();
                LayerRt { tiles: lp.tiles.clone(), sources, home, mpes }
            })
            .collect();
        let mut route_switch = HashMap::new();
        for t in &plan.routing_tables {
            for r in &t.routes {
                route_switch.insert((r.src_mpe, r.dst_mpe), t.switch);
            }
        }
        let width = plan.arch.packet_width;
        let masks = plan
            .boundaries
            .iter()
            .map(|b| {
                b.groups
                    .iter()
                    .map(|g| {
                        let all = vec![true; g.base + width];
                        pack(&all, &g.members, g.base, width)
                    })
                    .collect()
            })
            .collect();
        let group_index = plan
            .boundaries
            .iter()
            .map(|b| {
                b.groups
                    .iter()
                    .enumerate()
                    .filter_map(|(i, g)| match g.src {
                        Endpoint::Mpe(m) => Some(((m, g.base), i)),
                        Endpoint::Sram => None,
                    })
                    .collect()
            })
            .collect();
        Engine {
            plan,
            masks,
            group_index,
            opts,
            tiles,
            layers,
            tables: plan.routing_tables.iter().map(|t| (t.switch, t.clone())).collect(),
            route_switch,
            words: payload_words(plan.arch.packet_width),
            c: Counters::default(),
            log: Log { enabled: opts.trace, events: Vec::new() },
            cycle: 0,
        }
    }

}

struct Log {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl Log {
    #[allow(clippy::too_many_arguments)]
    fn event(
        &mut self,
        cycle: u64,
        t: usize,
        location: String,
        ports: (String, String),
        src: Endpoint,
        dst: String,
        suppressed: bool,
    ) {
        if self.enabled {
            self.events.push(TraceEvent {
                cycle,
                timestep: t,
                location,
                in_port: ports.0,
                out_port: ports.1,
                src: src.to_string(),
                dst,
                suppressed,
            });
        }
    }
}

impl Engine<'_> {
    /// OR a packet into `dst`'s input buffer, remembering which neurons it covered.
    fn deliver(ibuf: &mut InputBuffers, dst: usize, base: usize, payload: &[u64], mask: &[u64]) {
        let (spikes, covered) =
            ibuf.entry(dst).or_default().entry(base).or_insert_with(|| (vec![0; payload.len()], vec![0; payload.len()]));
        for k in 0..payload.len() {
            spikes[k] |= payload[k];
            covered[k] |= mask[k];
        }
    }

    /// Move the spikes feeding layer `l` into the consumer mPEs' input buffers.
    /// Returns `(bus cycles, switch drain cycles per NeuroCell)`.
    fn transfer(
        &mut self,
        t: usize,
        l: usize,
        spikes: &[bool],
        ibuf: &mut InputBuffers,
    ) -> Result<(u64, BTreeMap<usize, u64>)> {
        let plan = self.plan;
        let width = plan.arch.packet_width;
        let ed = self.opts.event_driven;
        let mut bus = 0u64;
        let mut queued: BTreeMap<usize, Vec<(usize, SpikePacket)>> = BTreeMap::new();
        for (gi, g) in plan.boundaries[l].groups.iter().enumerate() {
            let mask = &self.masks[l][gi];
            let payload = pack(spikes, &g.members, g.base, width);
            debug_assert_eq!(payload.len(), self.words);
            let zero = zero_check(&payload);
            if let Endpoint::Mpe(src) = g.src {
                // Packed into the sender's output buffer.
                self.c.buffer_accesses += 1;
                for &dst in &g.switch_dests {
                    self.c.packets_generated += 1;
                    let sw = *self.route_switch.get(&(src, dst)).ok_or_else(|| Error::RouteMiss {
                        src: format!("mPE {src}"),
                        dst,
                        timestep: t,
                    })?;
                    let port = match plan.mpes[src].switch_port() {
                        Port::Local(p) => p as usize,
                        Port::Link(_) => unreachable!("mPEs attach to local ports"),
                    };
                    if ed && zero {
                        self.c.packets_suppressed += 1;
                        let ports = (Port::Local(port as u8).to_string(), String::new());
                        self.log.event(self.cycle + bus, t, format!("switch {sw}"), ports, g.src, format!("mPE {dst}"), true);
                        continue;
                    }
                    self.c.packets_sent += 1;
                    self.c.buffer_accesses += 1;
                    queued.entry(sw).or_default().push((
                        port,
                        SpikePacket { src_mpe: src, dst_mpe: dst, base: g.base, payload: payload.clone() },
                    ));
                }
            }
            if g.bus_dests.is_empty() {
                continue;
            }
            if matches!(g.src, Endpoint::Mpe(_)) {
                self.c.sram_writes += 1;
                bus += 1;
            }
            self.c.sram_reads += 1;
            bus += 1;
            let tags = g.bus_tags.iter().map(|nc| format!("{:?}", plan.nc_tags[*nc])).collect::<Vec<_>>().join(" ");
            if ed && zero {
                self.c.bus_suppressed += 1;
                self.log.event(self.cycle + bus, t, "bus".into(), ("sram".into(), String::new()), g.src, tags, true);
                continue;
            }
            self.c.bus_broadcasts += 1;
            self.log.event(self.cycle + bus, t, "bus".into(), ("sram".into(), "broadcast".into()), g.src, tags, false);
            for &dst in &g.bus_dests {
                self.c.buffer_accesses += 1;
                Self::deliver(ibuf, dst, g.base, &payload, mask);
            }
        }

        let mut drain: BTreeMap<usize, u64> = BTreeMap::new();
        let per_nc = plan.arch.switches_per_nc();
        for (sw, incoming) in queued {
            let table = &self.tables[&sw];
            let mut state = SwitchState::new(sw, plan.arch.buffer_depth);
            // Each mPE's output buffer injects one packet per cycle into its local port.
            let mut pending: BTreeMap<usize, VecDeque<SpikePacket>> = BTreeMap::new();
            for (port, p) in incoming {
                pending.entry(port).or_default().push_back(p);
            }
            let mut cycles = 0u64;
            while cycles == 0 || !state.is_empty() || pending.values().any(|q| !q.is_empty()) {
                let inject = pending.iter_mut().filter_map(|(&port, q)| Some((port, q.pop_front()?))).collect();
                let out = switch_transfer(&mut state, inject, table, t)?;
                cycles += 1;
                for (p, ev) in out {
                    self.c.buffer_accesses += 2;
                    self.c.hop_count += ev.hops();
                    self.log.event(
                        self.cycle + bus + cycles,
                        t,
                        format!("switch {sw}"),
                        (Port::Local(ev.in_port as u8).to_string(), ev.out_port.to_string()),
                        Endpoint::Mpe(p.src_mpe),
                        format!("mPE {}", p.dst_mpe),
                        false,
                    );
                    let gi = self.group_index[l][&(p.src_mpe, p.base)];
                    Self::deliver(ibuf, p.dst_mpe, p.base, &p.payload, &self.masks[l][gi]);
                }
            }
            let d = drain.entry(sw / per_nc).or_default();
            *d = (*d).max(cycles);
        }
        Ok((bus, drain))
    }
}

struct LayerStep {
    fired: Vec<bool>,
    /// `(time-mux steps, remote partials)` per mPE of the layer.
    per_mpe: BTreeMap<usize, (u64, u64)>,
}

impl Engine<'_> {
    fn compute(&mut self, l: usize, ibuf: &InputBuffers, states: &mut [NeuronState]) -> LayerStep {
        let width = self.plan.arch.packet_width;
        let lr = &self.layers[l];
        let mut partials: Vec<Option<Vec<i64>>> = Vec::with_capacity(lr.tiles.len());
        for tile in &self.tiles[lr.tiles.clone()] {
            let Some(buf) = ibuf.get(&tile.mpe) else {
                partials.push(None);
                continue;
            };
            let mut read = false;
            let mut sums = vec![0i64; tile.n_cols];
            for (r, &i) in tile.rows.iter().enumerate() {
                let base = i / width * width;
                if let Some((spikes, covered)) = buf.get(&base) {
                    if bit(covered, i - base) {
                        read = true;
                        if bit(spikes, i - base) {
                            for &(c, level) in &tile.by_row[r] {
                                sums[c as usize] += level as i64;
                            }
                        }
                    }
                }
            }
            if read {
                self.c.crossbar_reads += 1;
                self.c.buffer_accesses += 1;
                partials.push(Some(sums));
            } else {
                partials.push(None);
            }
        }

        let mut per_mpe: BTreeMap<usize, (u64, u64)> = lr.mpes.iter().map(|&m| (m, (0, 0))).collect();
        let mut fired = vec![false; states.len()];
        for (j, state) in states.iter_mut().enumerate() {
            let (mut current, mut steps, mut remote) = (0i64, 0u64, 0u64);
            for &(t, c, dist) in &lr.sources[j] {
                if let Some(sums) = &partials[t - lr.tiles.start] {
                    current += sums[c];
                    steps += 1;
                    if dist > 0 {
                        remote += 1;
                        self.c.cext_transfers += dist;
                    }
                }
            }
            let (next, spike) = if_step(*state, current as f64);
            *state = next;
            fired[j] = spike;
            if steps > 0 || spike {
                self.c.neuron_integrations += 1;
            }
            if spike {
                self.c.spikes_emitted += 1;
            }
            let e = per_mpe.entry(lr.home[j]).or_default();
            e.0 = e.0.max(steps);
            e.1 = e.1.max(remote);
        }
        LayerStep { fired, per_mpe }
    }

    /// Output spikes leave through the SRAM, one write per group starting at `cycle`.
    fn write_back(&mut self, t: usize, cycle: u64) -> u64 {
        let out = &self.plan.boundaries[self.plan.layers.len()];
        for (k, g) in out.groups.iter().enumerate() {
            self.c.buffer_accesses += 1;
            self.c.sram_writes += 1;
            self.log.event(cycle + k as u64, t, "bus".into(), ("obuf".into(), "sram".into()), g.src, "SRAM".into(), false);
        }
        out.groups.len() as u64
    }
}

/// Run `input` through the mapped network.
pub fn simulate(plan: &MappingPlan, input: &SpikeTrain, opts: SimOptions) -> Result<SimResult> {
    let n_in = plan.layers.first().map_or(0, |l| l.n_in);
    if input.width() != n_in {
        return Err(Error::shape(format!("input train has {} neurons, the plan expects {n_in}", input.width())));
    }
    let mut eng = Engine::new(plan, opts);
    let timesteps = input.timesteps();
    let mut states: Vec<Vec<NeuronState>> =
        plan.layers.iter().map(|l| vec![NeuronState::new(l.threshold); l.n_out]).collect();
    let mut trains: Vec<SpikeTrain> = plan.layers.iter().map(|l| SpikeTrain::zeros(l.n_out, timesteps)).collect();
    let mut stages = Vec::with_capacity(timesteps * plan.layers.len());
    let last = plan.layers.len() - 1;

    for t in 0..timesteps {
        for l in 0..plan.layers.len() {
            let spikes: Vec<bool> = if l == 0 { input.step(t).to_vec() } else { trains[l - 1].step(t).to_vec() };
            let mut ibuf = InputBuffers::new();
            let (mut bus, drain) = eng.transfer(t, l, &spikes, &mut ibuf)?;
            let step = eng.compute(l, &ibuf, &mut states[l]);

            let mut nc_cycles: BTreeMap<usize, u64> = drain.clone();
            let (mut compute, mut cext) = (0, 0);
            for (&m, &(steps, remote)) in &step.per_mpe {
                compute = compute.max(steps);
                cext = cext.max(remote);
                let nc = plan.mpes[m].nc;
                let base = drain.get(&nc).copied().unwrap_or(0);
                let e = nc_cycles.entry(nc).or_default();
                *e = (*e).max(base + steps + remote);
            }
            for (i, &s) in step.fired.iter().enumerate() {
                trains[l].set(t, i, s);
            }
            let critical = nc_cycles.values().copied().max().unwrap_or(0);
            if l == last {
                bus += eng.write_back(t, eng.cycle + bus + critical + 1);
            }
            let tally = StageTally {
                timestep: t,
                layer: l,
                bus_cycles: bus,
                mpe_compute_cycles: compute,
                cext_cycles: cext,
                switch_cycles: drain.values().copied().max().unwrap_or(0),
                critical_nc_cycles: critical,
                total: bus + critical + 1,
            };
            eng.cycle += tally.total;
            stages.push(tally);
        }
    }
    let mut counters = eng.c;
    counters.cycles_elapsed = eng.cycle;
    let mut trace = eng.log.events;
    trace.sort_by_key(|e| e.cycle);
    Ok(SimResult { layer_spikes: trains, counters, stages, trace, timesteps })
}
