//! Partitioning a layer's connectivity matrix into crossbar tiles.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ArchConfig;
use crate::error::{Error, Result};
use crate::quant::{quantize_weight, QuantConfig, QuantizedEntry};
use crate::snn::ConnectivityMatrix;

/// One programmed cross-point (or differential pair of cross-points).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileCell {
    /// Local row, index into `row_map`.
    pub row: u32,
    /// Local logical column, index into `col_map`.
    pub col: u32,
    pub entry: QuantizedEntry,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossbarTile {
    pub id: usize,
    pub layer: usize,
    /// Global input-neuron index driven onto each local row, ascending.
    pub row_map: Vec<usize>,
    /// Output neuron fed by each logical column. In differential mode each logical column
    /// occupies two physical columns.
    pub col_map: Vec<usize>,
    /// Programmed cells sorted by `(col, row)`.
    pub cells: Vec<TileCell>,
}

impl CrossbarTile {
    /// Cross-points holding a synapse, counting both cells of a differential pair.
    pub fn used_crosspoints(&self, quant: &QuantConfig) -> usize {
        self.cells.len() * quant.columns_per_output()
    }

    pub fn physical_cols(&self, quant: &QuantConfig) -> usize {
        self.col_map.len() * quant.columns_per_output()
    }
}

/// Partial-sum sources of every output neuron of one layer, in integration order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeMuxSchedule {
    /// `sources[j]` = `(tile id, local column)` pairs for output neuron `j`.
    pub sources: Vec<Vec<(usize, usize)>>,
}

impl TimeMuxSchedule {
    pub fn degree(&self, neuron: usize) -> usize {
        self.sources[neuron].len()
    }

    pub fn max_degree(&self) -> usize {
        self.sources.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// Tiles of one layer, numbered from zero, plus the schedule over those local ids.
#[derive(Debug, Clone)]
pub struct TiledLayer {
    pub tiles: Vec<CrossbarTile>,
    pub schedule: TimeMuxSchedule,
}

fn logical_cols(arch: &ArchConfig, quant: &QuantConfig) -> Result<usize> {
    let c = arch.mca_cols / quant.columns_per_output();
    if c == 0 {
        return Err(Error::Config(format!(
            "crossbar with {} columns cannot hold a differential pair",
            arch.mca_cols
        )));
    }
    Ok(c)
}

/// Accumulates cells for one tile while it is open.
struct TileBuilder {
    rows: BTreeSet<usize>,
    /// `(output neuron, [(input, weight)])`
    columns: Vec<(usize, Vec<(usize, f64)>)>,
}

impl TileBuilder {
    fn new() -> Self {
        TileBuilder { rows: BTreeSet::new(), columns: Vec::new() }
    }

    fn union_size(&self, frag: &[(usize, f64)]) -> usize {
        self.rows.len() + frag.iter().filter(|(i, _)| !self.rows.contains(i)).count()
    }

    fn push(&mut self, j: usize, frag: &[(usize, f64)]) -> usize {
        self.rows.extend(frag.iter().map(|&(i, _)| i));
        self.columns.push((j, frag.to_vec()));
        self.columns.len() - 1
    }

    fn finish(self, id: usize, w_max: f64, quant: &QuantConfig) -> Result<CrossbarTile> {
        let row_map: Vec<usize> = self.rows.into_iter().collect();
        let mut col_map = Vec::with_capacity(self.columns.len());
        let mut cells = Vec::new();
        for (c, (j, frag)) in self.columns.into_iter().enumerate() {
            col_map.push(j);
            for (i, w) in frag {
                let row = row_map.binary_search(&i).expect("row registered") as u32;
                cells.push(TileCell { row, col: c as u32, entry: quantize_weight(w, w_max, quant)? });
            }
        }
        Ok(CrossbarTile { id, layer: 0, row_map, col_map, cells })
    }
}

/// Grid tiling of a dense matrix: `ceil(n_in / R)` row blocks by `ceil(n_out / C_eff)`
/// column blocks. Tiles of one column block are numbered consecutively by row block.
pub fn tile_dense(
    matrix: &ConnectivityMatrix,
    w_max: f64,
    arch: &ArchConfig,
    quant: &QuantConfig,
) -> Result<TiledLayer> {
    let r = arch.mca_rows;
    let c = logical_cols(arch, quant)?;
    let row_blocks = matrix.n_in().div_ceil(r);
    let col_blocks = matrix.n_out().div_ceil(c);
    let mut tiles = Vec::with_capacity(row_blocks * col_blocks);
    let mut schedule = TimeMuxSchedule { sources: vec![Vec::new(); matrix.n_out()] };
    for cb in 0..col_blocks {
        let outs = cb * c..((cb + 1) * c).min(matrix.n_out());
        for rb in 0..row_blocks {
            let ins = rb * r..((rb + 1) * r).min(matrix.n_in());
            let mut b = TileBuilder::new();
            b.rows.extend(ins.clone());
            for j in outs.clone() {
                let frag: Vec<(usize, f64)> =
                    matrix.column(j).iter().copied().filter(|(i, _)| ins.contains(i)).collect();
                let local = b.push(j, &frag);
                if !frag.is_empty() {
                    schedule.sources[j].push((tiles.len(), local));
                }
            }
            tiles.push(b.finish(tiles.len(), w_max, quant)?);
        }
    }
    Ok(TiledLayer { tiles, schedule })
}

/// Greedy input-sharing packing for sparse layers.
///
/// Output columns are visited in ascending order and collected into an open group of
/// tiles. A column joins the group when a logical column is free and the union of its
/// input rows with the group's rows fits in `R`; otherwise the group is closed and a new
/// one opened. Columns needing more than `R` rows are cut into `R`-row fragments
/// (ascending inputs); fragment `k` lands in the group's `k`-th tile and the fragments
/// are time-multiplexed into the neuron. With a dense matrix this reproduces the
/// [`tile_dense`] grid exactly.
pub fn pack_sparse(
    matrix: &ConnectivityMatrix,
    w_max: f64,
    arch: &ArchConfig,
    quant: &QuantConfig,
) -> Result<TiledLayer> {
    let r = arch.mca_rows;
    let c = logical_cols(arch, quant)?;
    let mut tiles = Vec::new();
    let mut schedule = TimeMuxSchedule { sources: vec![Vec::new(); matrix.n_out()] };
    let mut group = OpenGroup::default();
    for j in 0..matrix.n_out() {
        let frags: Vec<&[(usize, f64)]> = matrix.column(j).chunks(r).collect();
        let fits = group.columns < c
            && frags.iter().enumerate().all(|(k, f)| group.lanes.get(k).is_none_or(|lane| lane.union_size(f) <= r));
        if !fits && group.columns > 0 {
            group.close(&mut tiles, &mut schedule, w_max, quant)?;
        }
        group.push(j, &frags);
    }
    if group.columns > 0 {
        group.close(&mut tiles, &mut schedule, w_max, quant)?;
    }
    Ok(TiledLayer { tiles, schedule })
}

#[derive(Default)]
struct OpenGroup {
    lanes: Vec<TileBuilder>,
    columns: usize,
    /// `(output, lane, local column)` in push order.
    pending: Vec<(usize, usize, usize)>,
}

impl OpenGroup {
    fn push(&mut self, j: usize, frags: &[&[(usize, f64)]]) {
        for (k, frag) in frags.iter().enumerate() {
            if k == self.lanes.len() {
                self.lanes.push(TileBuilder::new());
            }
            let local = self.lanes[k].push(j, frag);
            self.pending.push((j, k, local));
        }
        self.columns += 1;
    }

    fn close(
        &mut self,
        tiles: &mut Vec<CrossbarTile>,
        schedule: &mut TimeMuxSchedule,
        w_max: f64,
        quant: &QuantConfig,
    ) -> Result<()> {
        let base = tiles.len();
        for (j, lane, local) in self.pending.drain(..) {
            schedule.sources[j].push((base + lane, local));
        }
        for lane in self.lanes.drain(..) {
            tiles.push(lane.finish(tiles.len(), w_max, quant)?);
        }
        self.columns = 0;
        Ok(())
    }
}
