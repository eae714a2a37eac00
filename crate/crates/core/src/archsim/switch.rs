//! Programmable switch between neighbouring mPEs.
//!
//! Each switch has one bounded input FIFO per attached mPE. Every cycle the head packet of
//! each FIFO requests its output port; each output port grants one requester, chosen
//! round-robin starting from the port after the previous winner.

use std::collections::{BTreeMap, VecDeque};

use super::packet::SpikePacket;
use crate::error::{Error, Result};
use crate::mapper::{Port, Route, RouteKind, RoutingTable};

pub const LOCAL_PORTS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchState {
    pub id: usize,
    depth: usize,
    inputs: [VecDeque<SpikePacket>; LOCAL_PORTS],
    /// Input port favoured next by each output port.
    cursors: BTreeMap<Port, usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HopEvent {
    pub switch: usize,
    pub in_port: usize,
    pub out_port: Port,
    pub kind: RouteKind,
    pub src_mpe: usize,
    pub dst_mpe: usize,
}

impl HopEvent {
    pub fn hops(&self) -> u64 {
        self.kind.hops()
    }
}

impl SwitchState {
    pub fn new(id: usize, depth: usize) -> Self {
        SwitchState { id, depth, inputs: Default::default(), cursors: BTreeMap::new() }
    }

    pub fn occupancy(&self, port: usize) -> usize {
        self.inputs[port].len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.iter().all(VecDeque::is_empty)
    }

    pub fn cursor(&self, out: Port) -> usize {
        self.cursors.get(&out).copied().unwrap_or(0)
    }

    pub fn enqueue(&mut self, port: usize, packet: SpikePacket, timestep: usize) -> Result<()> {
        if self.inputs[port].len() == self.depth {
            return Err(Error::BufferOverflow {
                switch: self.id,
                port: Port::Local(port as u8).to_string(),
                timestep,
                depth: self.depth,
            });
        }
        self.inputs[port].push_back(packet);
        Ok(())
    }
}

fn lookup<'a>(table: &'a RoutingTable, p: &SpikePacket) -> Option<&'a Route> {
    table.routes.iter().find(|r| r.src_mpe == p.src_mpe && r.dst_mpe == p.dst_mpe)
}

/// Enqueue `incoming` (input port, packet) and run one arbitration cycle.
///
/// Returns the packets delivered this cycle with their hop events; the rest stay buffered.
pub fn switch_transfer(
    state: &mut SwitchState,
    incoming: Vec<(usize, SpikePacket)>,
    table: &RoutingTable,
    timestep: usize,
) -> Result<Vec<(SpikePacket, HopEvent)>> {
    for (port, p) in incoming {
        state.enqueue(port, p, timestep)?;
    }
    let mut requests: BTreeMap<Port, Vec<(usize, &Route)>> = BTreeMap::new();
    for (port, q) in state.inputs.iter().enumerate() {
        if let Some(head) = q.front() {
            let route = lookup(table, head).ok_or_else(|| Error::RouteMiss {
                src: format!("mPE {} at switch {}", head.src_mpe, state.id),
                dst: head.dst_mpe,
                timestep,
            })?;
            requests.entry(route.out_port).or_default().push((port, route));
        }
    }
    let mut grants = Vec::new();
    for (out, reqs) in requests {
        let c = state.cursor(out);
        let &(port, route) = reqs
            .iter()
            .min_by_key(|(p, _)| (p + LOCAL_PORTS - c) % LOCAL_PORTS)
            .expect("at least one request");
        grants.push((port, out, route.kind));
    }
    let mut delivered = Vec::with_capacity(grants.len());
    for (port, out, kind) in grants {
        state.cursors.insert(out, (port + 1) % LOCAL_PORTS);
        let p = state.inputs[port].pop_front().expect("granted head");
        let ev = HopEvent {
            switch: state.id,
            in_port: port,
            out_port: out,
            kind,
            src_mpe: p.src_mpe,
            dst_mpe: p.dst_mpe,
        };
        delivered.push((p, ev));
    }
    Ok(delivered)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pkt(src: usize, dst: usize) -> SpikePacket {
        SpikePacket { src_mpe: src, dst_mpe: dst, base: 0, payload: vec![1] }
    }

    fn route(src: usize, dst: usize, in_port: u8, out: Port) -> Route {
        Route { src_mpe: src, dst_mpe: dst, kind: RouteKind::Shared, in_port: Port::Local(in_port), out_port: out }
    }

    /// mPEs 0..4 on ports 0..4; mPEs 0 and 1 both send to mPE 3, mPE 2 sends to mPE 0.
    fn table() -> RoutingTable {
        RoutingTable {
            switch: 0,
            routes: vec![
                route(0, 3, 0, Port::Local(3)),
                route(1, 3, 1, Port::Local(3)),
                route(2, 0, 2, Port::Local(0)),
            ],
        }
    }

    #[test]
    fn single_packet_delivered_same_cycle() {
        let mut s = SwitchState::new(0, 4);
        let out = switch_transfer(&mut s, vec![(0, pkt(0, 3))], &table(), 0).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].1.hops(), 1);
        assert!(s.is_empty());
    }

    #[test]
    fn distinct_ports_all_delivered() {
        let mut s = SwitchState::new(0, 4);
        let out = switch_transfer(&mut s, vec![(0, pkt(0, 3)), (2, pkt(2, 0))], &table(), 0).unwrap();
        assert_eq!(out.len(), 2);
    }

    #[test]
    fn contention_alternates() {
        let mut s = SwitchState::new(0, 4);
        let t = table();
        let burst = vec![(0, pkt(0, 3)), (0, pkt(0, 3)), (1, pkt(1, 3)), (1, pkt(1, 3))];
        let mut winners = Vec::new();
        let mut incoming = burst;
        for _ in 0..4 {
            let out = switch_transfer(&mut s, std::mem::take(&mut incoming), &t, 0).unwrap();
            assert_eq!(out.len(), 1);
            winners.push(out[0].0.src_mpe);
        }
        assert_eq!(winners, vec![0, 1, 0, 1]);
        assert!(s.is_empty());
    }

    #[test]
    fn cursor_moves_only_on_grant() {
        let mut s = SwitchState::new(0, 4);
        let t = table();
        switch_transfer(&mut s, vec![], &t, 0).unwrap();
        assert_eq!(s.cursor(Port::Local(3)), 0);
        switch_transfer(&mut s, vec![(1, pkt(1, 3))], &t, 0).unwrap();
        assert_eq!(s.cursor(Port::Local(3)), 2);
    }

    #[test]
    fn overflow_names_switch_and_port() {
        let mut s = SwitchState::new(7, 1);
        let err = switch_transfer(&mut s, vec![(2, pkt(2, 0)), (2, pkt(2, 0))], &table(), 5).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let msg = err.to_string();
        assert!(msg.contains("switch 7") && msg.contains("local2") && msg.contains("timestep 5"), "{msg}");
    }

    #[test]
    fn missing_route_is_reported() {
        let mut s = SwitchState::new(0, 4);
        let err = switch_transfer(&mut s, vec![(3, pkt(3, 1))], &table(), 2).unwrap_err();
        assert!(matches!(err, Error::RouteMiss { dst: 1, timestep: 2, .. }));
    }
}
