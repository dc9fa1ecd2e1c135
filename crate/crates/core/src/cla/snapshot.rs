//! Versioned binary snapshots of one or more [`Region`]s.
//!
//! All integers are little-endian. Layout, version 1:
//!
//! ```text
//! file    := "CLAS" version:u32 count:u32 region*count
//! region  := params epoch:u64 ncols:u32 column*ncols
//!            nwords:u32 prev_active:u64*nwords
//!            nwin:u32 prev_winner:u32*nwin
//!            npred:u32 predicted_column:u32*npred
//! params  := num_columns:u32 cells_per_column:u32 density:f64 input_bits:u32
//!            receptive_field:u32 proximal_capacity:u32 perm_levels:u32
//!            connected_fraction:f64 sp_increment:f64 sp_decrement:f64
//!            tm_increment:f64 tm_decrement:f64 activation_threshold:u32
//!            matching_threshold:u32 max_segments_per_cell:u32
//!            max_synapses_per_segment:u32 learning:u8 seed:u64
//! column  := id:u32 nprox:u32 (bit:u32 perm:u8)*nprox
//!            cell*cells_per_column prediction
//! cell    := nseg:u32 segment*nseg
//! segment := last_used:u64 nsyn:u32 (presynaptic:u32 perm:u8)*nsyn
//! prediction := nactive:u32 (cell:u16 segment:u16)*nactive
//!               has_match:u8 [cell:u16 segment:u16 count:u32]
//! ```
//!
//! The reference model writes a single region; the accelerator writes one
//! region per scale-out zone.

use std::io::{Read, Write};
use std::path::Path;

use super::column::{PredictionState, SegmentRef};
use super::{
    Cell, CellRef, CellSet, Column, Cortex, CortexParams, DistalSegment, DistalSynapse, Permanence,
    ProximalSegment, Region,
};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CLAS";
pub const VERSION: u32 = 1;

struct Writer<W: Write>(W);

impl<W: Write> Writer<W> {
    fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.0.write_all(&[v])?)
    }
    fn u16(&mut self, v: u16) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u32(&mut self, v: u32) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.0.write_all(&v.to_le_bytes())?)
    }
    fn len(&mut self, n: usize) -> Result<()> {
        self.u32(u32::try_from(n).map_err(|_| Error::Snapshot("length overflow".into()))?)
    }
}

struct Reader<R: Read>(R);

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.0
            .read_exact(&mut b)
            .map_err(|e| Error::Snapshot(format!("truncated snapshot: {e}")))?;
        Ok(b)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.bytes()?))
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }
    fn len(&mut self, limit: usize, what: &str) -> Result<usize> {
        let n = self.u32()? as usize;
        if n > limit {
            return Err(Error::Snapshot(format!("{what} count {n} exceeds {limit}")));
        }
        Ok(n)
    }
}

fn write_params<W: Write>(w: &mut Writer<W>, p: &CortexParams) -> Result<()> {
    w.u32(p.num_columns)?;
    w.u32(p.cells_per_column)?;
    w.f64(p.density)?;
    w.u32(p.input_bits)?;
    w.u32(p.receptive_field)?;
    w.u32(p.proximal_capacity)?;
    w.u32(p.perm_levels)?;
    w.f64(p.connected_fraction)?;
    w.f64(p.sp_increment)?;
    w.f64(p.sp_decrement)?;
    w.f64(p.tm_increment)?;
    w.f64(p.tm_decrement)?;
    w.u32(p.activation_threshold)?;
    w.u32(p.matching_threshold)?;
    w.u32(p.max_segments_per_cell)?;
    w.u32(p.max_synapses_per_segment)?;
    w.u8(p.learning as u8)?;
    w.u64(p.seed)
}

fn read_params<R: Read>(r: &mut Reader<R>) -> Result<CortexParams> {
    let p = CortexParams {
        num_columns: r.u32()?,
        cells_per_column: r.u32()?,
        density: r.f64()?,
        input_bits: r.u32()?,
        receptive_field: r.u32()?,
        proximal_capacity: r.u32()?,
        perm_levels: r.u32()?,
        connected_fraction: r.f64()?,
        sp_increment: r.f64()?,
        sp_decrement: r.f64()?,
        tm_increment: r.f64()?,
        tm_decrement: r.f64()?,
        activation_threshold: r.u32()?,
        matching_threshold: r.u32()?,
        max_segments_per_cell: r.u32()?,
        max_synapses_per_segment: r.u32()?,
        learning: r.u8()? != 0,
        seed: r.u64()?,
    };
    p.validate().map_err(|e| Error::Snapshot(e.to_string()))?;
    Ok(p)
}

fn write_region<W: Write>(w: &mut Writer<W>, region: &Region) -> Result<()> {
    let cortex = &region.cortex;
    write_params(w, cortex.params())?;
    w.u64(region.epoch)?;
    w.len(cortex.columns().len())?;
    for col in cortex.columns() {
        w.u32(col.id)?;
        w.len(col.proximal.synapses.len())?;
        for &(bit, perm) in &col.proximal.synapses {
            w.u32(bit)?;
            w.u8(perm.0)?;
        }
        for cell in &col.cells {
            w.len(cell.segments.len())?;
            for seg in &cell.segments {
                w.u64(seg.last_used)?;
                w.len(seg.synapses.len())?;
                for syn in &seg.synapses {
                    w.u32(syn.presynaptic.0)?;
                    w.u8(syn.permanence.0)?;
                }
            }
        }
        w.len(col.prediction.active_segments.len())?;
        for s in &col.prediction.active_segments {
            w.u16(s.cell)?;
            w.u16(s.segment)?;
        }
        match col.prediction.best_match {
            Some((s, n)) => {
                w.u8(1)?;
                w.u16(s.cell)?;
                w.u16(s.segment)?;
                w.u32(n)?;
            }
            None => w.u8(0)?,
        }
    }
    let words = region.prev_active.words();
    w.len(words.len())?;
    for &word in words {
        w.u64(word)?;
    }
    w.len(region.prev_winners.len())?;
    for c in &region.prev_winners {
        w.u32(c.0)?;
    }
    w.len(region.predicted_columns.len())?;
    for &c in &region.predicted_columns {
        w.u32(c)?;
    }
    Ok(())
}

fn read_region<R: Read>(r: &mut Reader<R>) -> Result<Region> {
    let params = read_params(r)?;
    let epoch = r.u64()?;
    let ncols = r.len(params.num_columns as usize, "column")?;
    let t = params.cells_per_column as usize;
    let mut columns = Vec::with_capacity(ncols);
    for _ in 0..ncols {
        let id = r.u32()?;
        let nprox = r.len(params.proximal_capacity as usize, "proximal synapse")?;
        let mut synapses = Vec::with_capacity(nprox);
        for _ in 0..nprox {
            synapses.push((r.u32()?, Permanence(r.u8()?)));
        }
        let mut cells = Vec::with_capacity(t);
        for _ in 0..t {
            let nseg = r.len(params.max_segments_per_cell as usize, "segment")?;
            let mut segments = Vec::with_capacity(nseg);
            for _ in 0..nseg {
                let last_used = r.u64()?;
                let nsyn = r.len(params.max_synapses_per_segment as usize, "distal synapse")?;
                let mut syns = Vec::with_capacity(nsyn);
                for _ in 0..nsyn {
                    syns.push(DistalSynapse {
                        presynaptic: CellRef(r.u32()?),
                        permanence: Permanence(r.u8()?),
                    });
                }
                segments.push(DistalSegment { synapses: syns, last_used });
            }
            cells.push(Cell { segments });
        }
        let nact = r.len(t * params.max_segments_per_cell as usize, "active segment")?;
        let mut active_segments = Vec::with_capacity(nact);
        for _ in 0..nact {
            active_segments.push(SegmentRef { cell: r.u16()?, segment: r.u16()? });
        }
        let best_match = match r.u8()? {
            0 => None,
            _ => Some((SegmentRef { cell: r.u16()?, segment: r.u16()? }, r.u32()?)),
        };
        columns.push(Column {
            id,
            proximal: ProximalSegment { synapses },
            cells,
            prediction: PredictionState { active_segments, best_match },
        });
    }
    let cortex = Cortex::from_parts(params.clone(), columns).map_err(|e| Error::Snapshot(e.to_string()))?;
    let nwords = r.len(params.total_cells().div_ceil(64), "cell word")?;
    let words = (0..nwords).map(|_| r.u64()).collect::<Result<Vec<_>>>()?;
    let nwin = r.len(params.total_cells(), "winner")?;
    let prev_winners = (0..nwin).map(|_| r.u32().map(CellRef)).collect::<Result<Vec<_>>>()?;
    let npred = r.len(params.num_columns as usize, "predicted column")?;
    let predicted_columns = (0..npred).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    Ok(Region {
        cortex,
        prev_active: CellSet::from_words(words),
        prev_winners,
        predicted_columns,
        epoch,
    })
}

pub fn write_regions<W: Write>(out: W, regions: &[Region]) -> Result<()> {
    let mut w = Writer(out);
    w.0.write_all(MAGIC)?;
    w.u32(VERSION)?;
    w.len(regions.len())?;
    for region in regions {
        write_region(&mut w, region)?;
    }
    Ok(())
}

pub fn read_regions<R: Read>(input: R) -> Result<Vec<Region>> {
    let mut r = Reader(input);
    if &r.bytes::<4>()? != MAGIC {
        return Err(Error::Snapshot("bad magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Snapshot(format!("unsupported version {version}")));
    }
    let n = r.len(4096, "region")?;
    (0..n).map(|_| read_region(&mut r)).collect()
}

pub fn save(path: &Path, regions: &[Region]) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_regions(file, regions)
}

pub fn load(path: &Path) -> Result<Vec<Region>> {
    read_regions(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdr::{encode, SdrParams};

    #[test]
    fn round_trip_after_learning() {
        let p = CortexParams {
            num_columns: 64,
            cells_per_column: 4,
            density: 0.1,
            input_bits: 256,
            activation_threshold: 3,
            matching_threshold: 2,
            ..CortexParams::desk()
        };
        let enc = SdrParams { k: 256, w: 10, master_seed: 2 };
        let mut region = Region::new(Cortex::full(p).unwrap());
        for v in [1u64, 40, 80, 1, 40, 80] {
            region.epoch(&encode(v, &enc).unwrap()).unwrap();
        }
        let mut buf = Vec::new();
        write_regions(&mut buf, std::slice::from_ref(&region)).unwrap();
        let back = read_regions(buf.as_slice()).unwrap();
        assert_eq!(back, vec![region.clone()]);

        // a resumed run continues identically
        let mut resumed = back.into_iter().next().unwrap();
        let x = region.epoch(&encode(40, &enc).unwrap()).unwrap();
        let y = resumed.epoch(&encode(40, &enc).unwrap()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn rejects_garbage() {
        assert!(matches!(read_regions(&b"NOPE"[..]), Err(Error::Snapshot(_))));
        let mut buf = Vec::new();
        write_regions(&mut buf, &[]).unwrap();
        buf[4] = 9;
        assert!(matches!(read_regions(buf.as_slice()), Err(Error::Snapshot(_))));
        assert!(matches!(read_regions(&buf[..6]), Err(Error::Snapshot(_))));
    }
}
