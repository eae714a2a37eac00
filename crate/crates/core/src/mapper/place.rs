//! Tile-to-mPE assignment, NeuroCell placement and route generation.

use std::collections::{BTreeMap, BTreeSet};

use super::{
    ArchConfig, Boundary, BusSegment, CextLink, CrossbarTile, Endpoint, LayerPlan, MappingPlan, MpeSite,
    PacketGroup, Route, RouteKind, RoutingTable,
};
use crate::error::{Error, Result};
use crate::quant::QuantConfig;

/// Where every tile and neuron ended up.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub tile_mpe: Vec<usize>,
    pub mpes: Vec<MpeSite>,
    pub neuron_home: Vec<Vec<usize>>,
    pub cext_links: Vec<CextLink>,
    pub num_ncs: usize,
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Tiles of one layer grouped by shared output neurons, each group in ascending tile order
/// and the groups ordered by their first tile.
fn components(layer: &LayerPlan) -> Vec<Vec<usize>> {
    let base = layer.tiles.start;
    let mut parent: Vec<usize> = (0..layer.tiles.len()).collect();
    for srcs in &layer.schedule.sources {
        if let Some(&(first, _)) = srcs.first() {
            for &(t, _) in &srcs[1..] {
                let (a, b) = (find(&mut parent, first - base), find(&mut parent, t - base));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for t in layer.tiles.clone() {
        let root = find(&mut parent, t - base);
        groups.entry(root).or_default().push(t);
    }
    groups.into_values().collect()
}

/// Hands out mPE slots in serpentine order inside each NeuroCell, so consecutive
/// slots are always grid neighbours.
struct Cursor<'a> {
    arch: &'a ArchConfig,
    mpes: Vec<MpeSite>,
    nc: usize,
    slot: usize,
}

impl Cursor<'_> {
    fn open(&mut self, layer: usize) -> usize {
        if self.slot == self.arch.mpes_per_nc() {
            self.nc += 1;
            self.slot = 0;
        }
        let w = self.arch.nc_grid_w;
        let y = self.slot / w;
        let x = if y.is_multiple_of(2) { self.slot % w } else { w - 1 - self.slot % w };
        let id = self.mpes.len();
        self.mpes.push(MpeSite { id, nc: self.nc, x, y, layer });
        self.slot += 1;
        id
    }

    fn free_in_nc(&self) -> usize {
        self.arch.mpes_per_nc() - self.slot
    }

    fn next_nc(&mut self) {
        self.nc += 1;
        self.slot = 0;
    }
}

/// Assign tiles to mPEs and mPEs to NeuroCells.
///
/// Layers never share an mPE. A group of tiles that shares output neurons and fits
/// one mPE stays together (joining the current mPE when it has room); a larger group gets
/// a run of consecutive, adjacent mPEs in one NeuroCell joined by `C_ext` links. A neuron
/// is integrated on the mPE holding its first partial-sum source.
pub fn assign_and_place(tiles: &[CrossbarTile], layers: &[LayerPlan], arch: &ArchConfig) -> Result<Placement> {
    let m = arch.mcas_per_mpe;
    let per_nc = arch.mpes_per_nc();
    let mut cur = Cursor { arch, mpes: Vec::new(), nc: 0, slot: 0 };
    let mut tile_mpe = vec![usize::MAX; tiles.len()];
    let mut cext_links = Vec::new();
    let mut neuron_home = Vec::with_capacity(layers.len());

    for (l, layer) in layers.iter().enumerate() {
        // `(mPE, tiles on it)` of the mPE accepting small groups.
        let mut open: Option<(usize, usize)> = None;
        for group in components(layer) {
            if group.len() <= m {
                let mpe = match open {
                    Some((mpe, load)) if load + group.len() <= m => mpe,
                    _ => cur.open(l),
                };
                for &t in &group {
                    tile_mpe[t] = mpe;
                }
                let load = open.filter(|&(o, _)| o == mpe).map_or(0, |(_, load)| load);
                open = Some((mpe, load + group.len()));
                continue;
            }
            let need = group.len().div_ceil(m);
            if need > per_nc {
                return Err(Error::ChainTooLong { layer: l, tiles: group.len(), mpes: need, per_nc });
            }
            if cur.free_in_nc() < need {
                cur.next_nc();
            }
            let chain: Vec<usize> = (0..need).map(|_| cur.open(l)).collect();
            for (k, &t) in group.iter().enumerate() {
                tile_mpe[t] = chain[k / m];
            }
            cext_links.extend(chain.windows(2).map(|p| CextLink { from: p[0], to: p[1] }));
            open = Some((chain[need - 1], group.len() - (need - 1) * m));
        }
        let fallback = layer.tiles.clone().next().map_or(0, |t| tile_mpe[t]);
        neuron_home.push(
            layer
                .schedule
                .sources
                .iter()
                .map(|srcs| srcs.first().map_or(fallback, |&(t, _)| tile_mpe[t]))
                .collect(),
        );
    }

    let num_ncs = cur.mpes.last().map_or(0, |s| s.nc + 1);
    if num_ncs > arch.num_neurocells {
        return Err(Error::Capacity {
            required_mpes: cur.mpes.len(),
            required_ncs: num_ncs,
            available_mpes: arch.num_neurocells * per_nc,
            available_ncs: arch.num_neurocells,
        });
    }
    Ok(Placement { tile_mpe, mpes: cur.mpes, neuron_home, cext_links, num_ncs })
}

fn route_between(src: &MpeSite, dst: &MpeSite, arch: &ArchConfig) -> Route {
    let (sw, _) = arch.switch_grid();
    let (a, b) = (src.switch(arch), dst.switch(arch));
    let local = |s: usize| s % arch.switches_per_nc();
    let (ax, ay) = (local(a) % sw, local(a) / sw);
    let (bx, by) = (local(b) % sw, local(b) / sw);
    let (kind, out_port) = if a == b {
        (RouteKind::Shared, dst.switch_port())
    } else if ay == by {
        (RouteKind::Row, super::Port::Link(b))
    } else if ax == bx {
        (RouteKind::Column, super::Port::Link(b))
    } else {
        (RouteKind::Relay, super::Port::Link(b))
    };
    Route { src_mpe: src.id, dst_mpe: dst.id, kind, in_port: src.switch_port(), out_port }
}

/// Packet groups for spikes of neurons produced at `sources`, grouped by packet window.
fn groups_from(
    sources: impl Iterator<Item = (usize, Endpoint)>,
    width: usize,
    consumers: Option<&[BTreeSet<usize>]>,
    mpes: &[MpeSite],
) -> Vec<PacketGroup> {
    let mut by_key: BTreeMap<(Endpoint, usize), Vec<usize>> = BTreeMap::new();
    for (n, src) in sources {
        by_key.entry((src, n / width * width)).or_default().push(n);
    }
    by_key
        .into_iter()
        .map(|((src, base), members)| {
            let dests: BTreeSet<usize> = consumers
                .map(|c| members.iter().flat_map(|&n| c[n].iter().copied()).collect())
                .unwrap_or_default();
            let (switch_dests, bus_dests): (Vec<usize>, Vec<usize>) = match src {
                Endpoint::Mpe(s) => dests.into_iter().partition(|&d| mpes[d].nc == mpes[s].nc),
                Endpoint::Sram => (Vec::new(), dests.into_iter().collect()),
            };
            let tags: BTreeSet<usize> = bus_dests.iter().map(|&d| mpes[d].nc).collect();
            PacketGroup { src, base, members, switch_dests, bus_dests, bus_tags: tags.into_iter().collect() }
        })
        .collect()
}

/// Build the full plan: packet groups per layer boundary, switch routing tables and the
/// SRAM bus segments.
pub(super) fn route(
    layers: Vec<LayerPlan>,
    tiles: Vec<CrossbarTile>,
    placement: Placement,
    arch: &ArchConfig,
    quant: &QuantConfig,
) -> MappingPlan {
    let Placement { tile_mpe, mpes, neuron_home, cext_links, num_ncs } = placement;
    let w = arch.packet_width;
    let mut boundaries = Vec::with_capacity(layers.len() + 1);
    for (l, layer) in layers.iter().enumerate() {
        let mut consumers = vec![BTreeSet::new(); layer.n_in];
        for tile in &tiles[layer.tiles.clone()] {
            for &i in &tile.row_map {
                consumers[i].insert(tile_mpe[tile.id]);
            }
        }
        let groups = if l == 0 {
            groups_from((0..layer.n_in).map(|n| (n, Endpoint::Sram)), w, Some(&consumers), &mpes)
        } else {
            let homes = &neuron_home[l - 1];
            groups_from(homes.iter().enumerate().map(|(n, &h)| (n, Endpoint::Mpe(h))), w, Some(&consumers), &mpes)
        };
        boundaries.push(Boundary { producer: l.checked_sub(1), consumer: Some(l), groups });
    }
    if let Some(homes) = neuron_home.last() {
        let groups = groups_from(homes.iter().enumerate().map(|(n, &h)| (n, Endpoint::Mpe(h))), w, None, &mpes);
        boundaries.push(Boundary { producer: Some(layers.len() - 1), consumer: None, groups });
    }

    let mut bus_segments = Vec::new();
    let mut pairs = BTreeSet::new();
    for b in &boundaries {
        if let (Some(p), Some(c)) = (b.producer, b.consumer) {
            if b.groups.iter().any(|g| !g.bus_dests.is_empty()) {
                bus_segments.push(BusSegment { producer: p, consumer: c });
            }
        }
        for g in &b.groups {
            if let Endpoint::Mpe(s) = g.src {
                pairs.extend(g.switch_dests.iter().map(|&d| (s, d)));
            }
        }
    }
    let mut tables: BTreeMap<usize, Vec<Route>> = BTreeMap::new();
    for (s, d) in pairs {
        let r = route_between(&mpes[s], &mpes[d], arch);
        tables.entry(mpes[s].switch(arch)).or_default().push(r);
    }
    let routing_tables = tables.into_iter().map(|(switch, routes)| RoutingTable { switch, routes }).collect();

    let aw = arch.nc_array_width();
    MappingPlan {
        arch: *arch,
        quant: *quant,
        layers,
        tiles,
        tile_mpe,
        mpes,
        neuron_home,
        cext_links,
        routing_tables,
        boundaries,
        bus_segments,
        nc_tags: (0..num_ncs).map(|nc| (nc % aw, nc / aw)).collect(),
    }
}
