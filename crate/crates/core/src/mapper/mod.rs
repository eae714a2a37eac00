//! The mapping compiler: connectivity matrices → crossbar tiles → mPEs → NeuroCells,
//! plus the spike routes between them.

mod place;
mod tiling;

pub use place::{assign_and_place, Placement};
pub use tiling::{pack_sparse, tile_dense, CrossbarTile, TileCell, TiledLayer, TimeMuxSchedule};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quant::{self, QuantConfig};
use crate::snn::{SnnTopology, Structure};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchConfig {
    pub mca_rows: usize,
    pub mca_cols: usize,
    pub mcas_per_mpe: usize,
    /// mPE columns in one NeuroCell.
    pub nc_grid_w: usize,
    /// mPE rows in one NeuroCell.
    pub nc_grid_h: usize,
    pub num_neurocells: usize,
    /// Spike bits carried by one packet.
    pub packet_width: usize,
    /// Packets each switch input port can hold.
    pub buffer_depth: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            mca_rows: 64,
            mca_cols: 64,
            mcas_per_mpe: 4,
            nc_grid_w: 8,
            nc_grid_h: 2,
            num_neurocells: 64,
            packet_width: 32,
            buffer_depth: 16,
        }
    }
}

impl ArchConfig {
    /// Square crossbars of `size` with packets as wide as a crossbar's row block.
    pub fn with_crossbar(self, size: usize) -> Self {
        ArchConfig { mca_rows: size, mca_cols: size, packet_width: size, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("mca_rows", self.mca_rows),
            ("mca_cols", self.mca_cols),
            ("mcas_per_mpe", self.mcas_per_mpe),
            ("nc_grid_w", self.nc_grid_w),
            ("nc_grid_h", self.nc_grid_h),
            ("num_neurocells", self.num_neurocells),
            ("packet_width", self.packet_width),
            ("buffer_depth", self.buffer_depth),
        ];
        match fields.iter().find(|(_, v)| *v == 0) {
            Some((name, _)) => Err(Error::Config(format!("arch.{name} must be positive"))),
            None => Ok(()),
        }
    }

    pub fn mpes_per_nc(&self) -> usize {
        self.nc_grid_w * self.nc_grid_h
    }

    /// Switch grid of one NeuroCell; each switch serves a 2×2 block of mPEs.
    pub fn switch_grid(&self) -> (usize, usize) {
        (self.nc_grid_w.div_ceil(2), self.nc_grid_h.div_ceil(2))
    }

    pub fn switches_per_nc(&self) -> usize {
        let (w, h) = self.switch_grid();
        w * h
    }

    /// Width of the NeuroCell array used for `(x, y)` tags.
    pub fn nc_array_width(&self) -> usize {
        (1..).find(|w| w * w >= self.num_neurocells).unwrap_or(1)
    }
}

/// Per-layer compilation products.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPlan {
    pub n_in: usize,
    pub n_out: usize,
    pub w_max: f64,
    /// Firing threshold in conductance-step units.
    pub threshold: f64,
    /// Tile ids of this layer (contiguous).
    pub tiles: std::ops::Range<usize>,
    pub schedule: TimeMuxSchedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Endpoint {
    /// The core's input/output SRAM on the shared IO bus.
    Sram,
    Mpe(usize),
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Sram => write!(f, "SRAM"),
            Endpoint::Mpe(m) => write!(f, "mPE {m}"),
        }
    }
}

/// Spikes of `members` (all within `[base, base + packet_width)`) leaving `src` each
/// timestep, and where they go.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketGroup {
    pub src: Endpoint,
    pub base: usize,
    pub members: Vec<usize>,
    /// Consumer mPEs in the source's NeuroCell, reached through the switch network.
    pub switch_dests: Vec<usize>,
    /// Consumer mPEs reached by an SRAM broadcast over the IO bus.
    pub bus_dests: Vec<usize>,
    /// NeuroCells addressed by the broadcast.
    pub bus_tags: Vec<usize>,
}

/// Traffic into layer `consumer` (or out of the core when `consumer` is `None`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Boundary {
    pub producer: Option<usize>,
    pub consumer: Option<usize>,
    pub groups: Vec<PacketGroup>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Port {
    /// One of the four mPEs around the switch, numbered `(y % 2) * 2 + x % 2`.
    Local(u8),
    /// Dedicated link to another switch in the same row or column.
    Link(usize),
}

impl std::fmt::Display for Port {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Port::Local(p) => write!(f, "local{p}"),
            Port::Link(s) => write!(f, "link{s}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RouteKind {
    /// Both mPEs hang off the same switch.
    Shared,
    /// Row link between the two switches.
    Row,
    /// Column link between the two switches.
    Column,
    /// Row link then column link; only arises in NeuroCells with more than one switch
    /// row and column.
    Relay,
}

impl RouteKind {
    pub fn hops(self) -> u64 {
        match self {
            RouteKind::Relay => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Route {
    pub src_mpe: usize,
    pub dst_mpe: usize,
    pub kind: RouteKind,
    pub in_port: Port,
    pub out_port: Port,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoutingTable {
    pub switch: usize,
    pub routes: Vec<Route>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MpeSite {
    pub id: usize,
    pub nc: usize,
    /// Grid position inside the NeuroCell.
    pub x: usize,
    pub y: usize,
    pub layer: usize,
}

impl MpeSite {
    pub fn switch(&self, arch: &ArchConfig) -> usize {
        let (sw, _) = arch.switch_grid();
        self.nc * arch.switches_per_nc() + (self.y / 2) * sw + self.x / 2
    }

    pub fn switch_port(&self) -> Port {
        Port::Local(((self.y % 2) * 2 + self.x % 2) as u8)
    }

    pub fn is_adjacent(&self, other: &MpeSite) -> bool {
        self.nc == other.nc && self.x.abs_diff(other.x) + self.y.abs_diff(other.y) == 1
    }
}

/// Gated analog wire carrying crossbar partial currents between neighbouring mPEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CextLink {
    pub from: usize,
    pub to: usize,
}

/// A layer boundary whose spikes leave a NeuroCell through the SRAM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BusSegment {
    pub producer: usize,
    pub consumer: usize,
}

/// Complete placement and routing of a topology on the core.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MappingPlan {
    pub arch: ArchConfig,
    pub quant: QuantConfig,
    pub layers: Vec<LayerPlan>,
    pub tiles: Vec<CrossbarTile>,
    pub tile_mpe: Vec<usize>,
    pub mpes: Vec<MpeSite>,
    /// `neuron_home[layer][neuron]` = mPE integrating that neuron.
    pub neuron_home: Vec<Vec<usize>>,
    pub cext_links: Vec<CextLink>,
    pub routing_tables: Vec<RoutingTable>,
    /// `boundaries[l]` feeds layer `l`; the final entry drains the last layer to SRAM.
    pub boundaries: Vec<Boundary>,
    pub bus_segments: Vec<BusSegment>,
    /// `(x, y)` tag of every NeuroCell in use, indexed by NeuroCell.
    pub nc_tags: Vec<(usize, usize)>,
}

impl MappingPlan {
    pub fn num_ncs(&self) -> usize {
        self.nc_tags.len()
    }

    /// Switches serving at least one placed mPE.
    pub fn used_switches(&self) -> usize {
        let mut s: Vec<usize> = self.mpes.iter().map(|m| m.switch(&self.arch)).collect();
        s.sort_unstable();
        s.dedup();
        s.len()
    }

    /// Number of mPEs a neuron's partial currents cross on their way home.
    pub fn cext_distance(&self, tile: usize, layer: usize, neuron: usize) -> usize {
        self.tile_mpe[tile].abs_diff(self.neuron_home[layer][neuron])
    }

    /// Rebuild layer `l`'s quantized matrix from its tiles: `(input, output) → entry`.
    /// Fails if any synapse is covered twice.
    pub fn reconstruct_layer(
        &self,
        l: usize,
    ) -> Result<std::collections::BTreeMap<(usize, usize), quant::QuantizedEntry>> {
        let mut out = std::collections::BTreeMap::new();
        for tile in &self.tiles[self.layers[l].tiles.clone()] {
            for cell in &tile.cells {
                let key = (tile.row_map[cell.row as usize], tile.col_map[cell.col as usize]);
                if out.insert(key, cell.entry).is_some() {
                    return Err(Error::shape(format!("synapse {key:?} mapped twice")));
                }
            }
        }
        Ok(out)
    }
}

/// Compile a topology: tile every layer, place tiles on mPEs and NeuroCells, and route.
pub fn compile(topology: &SnnTopology, arch: &ArchConfig, quant: &QuantConfig) -> Result<MappingPlan> {
    arch.validate()?;
    quant.validate()?;
    let mut layers = Vec::new();
    let mut tiles: Vec<CrossbarTile> = Vec::new();
    for (l, spec) in topology.layers().iter().enumerate() {
        let conn = topology.connectivity(l)?;
        let w_max = topology.w_max(l);
        let tiled = match conn.structure() {
            Structure::Dense => tile_dense(&conn, w_max, arch, quant),
            Structure::Sparse => pack_sparse(&conn, w_max, arch, quant),
        }
        .map_err(|e| match e {
            Error::InvalidValue(m) => Error::invalid(format!("layer {l}: {m}")),
            other => other,
        })?;
        let offset = tiles.len();
        let mut schedule = tiled.schedule;
        for srcs in &mut schedule.sources {
            for (t, _) in srcs.iter_mut() {
                *t += offset;
            }
        }
        for mut t in tiled.tiles {
            t.id += offset;
            t.layer = l;
            tiles.push(t);
        }
        layers.push(LayerPlan {
            n_in: conn.n_in(),
            n_out: conn.n_out(),
            w_max,
            threshold: quant::threshold_in_level_units(spec.threshold, w_max, quant),
            tiles: offset..tiles.len(),
            schedule,
        });
    }
    let placement = assign_and_place(&tiles, &layers, arch)?;
    Ok(place::route(layers, tiles, placement, arch, quant))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TileFill {
    pub tile_id: usize,
    pub layer: usize,
    pub rows_used: usize,
    pub cols_used: usize,
    pub fill: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationReport {
    pub tiles: Vec<TileFill>,
    pub layer_mean_fill: Vec<f64>,
    pub mean_fill: f64,
    pub total_tiles: usize,
    pub total_mpes: usize,
    pub total_neurocells: usize,
}

impl UtilizationReport {
    /// `tile_id,layer,rows_used,cols_used,fill`
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["tile_id", "layer", "rows_used", "cols_used", "fill"])?;
        for t in &self.tiles {
            w.write_record([
                t.tile_id.to_string(),
                t.layer.to_string(),
                t.rows_used.to_string(),
                t.cols_used.to_string(),
                t.fill.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn utilization(plan: &MappingPlan) -> UtilizationReport {
    let area = (plan.arch.mca_rows * plan.arch.mca_cols) as f64;
    let tiles: Vec<TileFill> = plan
        .tiles
        .iter()
        .map(|t| TileFill {
            tile_id: t.id,
            layer: t.layer,
            rows_used: t.row_map.len(),
            cols_used: t.physical_cols(&plan.quant),
            fill: t.used_crosspoints(&plan.quant) as f64 / area,
        })
        .collect();
    let mean = |fills: &[&TileFill]| {
        if fills.is_empty() {
            0.0
        } else {
            fills.iter().map(|f| f.fill).sum::<f64>() / fills.len() as f64
        }
    };
    let layer_mean_fill = (0..plan.layers.len())
        .map(|l| mean(&tiles.iter().filter(|t| t.layer == l).collect::<Vec<_>>()))
        .collect();
    let mean_fill = mean(&tiles.iter().collect::<Vec<_>>());
    UtilizationReport {
        total_tiles: tiles.len(),
        tiles,
        layer_mean_fill,
        mean_fill,
        total_mpes: plan.mpes.len(),
        total_neurocells: plan.num_ncs(),
    }
}
