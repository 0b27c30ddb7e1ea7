//! Brute-force causal reachability on a regular chart grid.
//!
//! Nodes are linked to nodes `k = 1..K` time steps later whenever the chord
//! between them can be covered at light speed (trapezoid rule over the two
//! endpoint metrics, optionally relaxed by a speed slack). `J⁺` is then
//! approximated by graph reachability.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{GeoError, Result};
use crate::geometry::{Metric, Vector};

const MAGIC: &[u8; 4] = b"NGRD";
const VERSION: u32 = 1;
pub const MAX_RESOLUTION: usize = 128;

#[derive(Clone, Debug)]
pub struct GridSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub resolution: usize,
    /// Largest number of time steps bridged by a single edge.
    pub time_steps: usize,
    /// Relative speed allowance on every edge.
    pub speed_slack: f64,
    pub memory_budget: usize,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: usize) -> Self {
        Self { lower, upper, resolution, time_steps: 1, speed_slack: 0.0, memory_budget: 1 << 30 }
    }

    pub fn with_time_steps(mut self, k: usize) -> Self {
        self.time_steps = k.max(1);
        self
    }

    pub fn with_speed_slack(mut self, s: f64) -> Self {
        self.speed_slack = s;
        self
    }

    pub fn with_memory_budget(mut self, bytes: usize) -> Self {
        self.memory_budget = bytes;
        self
    }
}

#[derive(Clone, Debug)]
pub struct GridOracle {
    metric_name: String,
    dim: usize,
    resolution: usize,
    time_axis: usize,
    time_steps: usize,
    speed_slack: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cell: Vec<f64>,
    period: Vec<Option<f64>>,
    /// Axis order for linear indexing, time axis first (slowest).
    order: Vec<usize>,
    stencil: Vec<Vec<i32>>,
    words: usize,
    active: Vec<u64>,
    adjacency: Vec<u64>,
}

fn bit(v: &[u64], i: usize) -> bool {
    v[i / 64] >> (i % 64) & 1 == 1
}

fn set_bit(v: &mut [u64], i: usize) {
    v[i / 64] |= 1 << (i % 64);
}

impl GridOracle {
    pub fn build<M: Metric + ?Sized>(metric: &M, spec: &GridSpec) -> Result<Self> {
        let dim = metric.dim();
        if !(dim == 2 || dim == 3) {
            return Err(GeoError::Resolution(format!("grid oracle supports 2D and 3D charts, got {dim}")));
        }
        let res = spec.resolution;
        if res == 0 || res > MAX_RESOLUTION {
            return Err(GeoError::Resolution(format!("resolution {res} outside 1..={MAX_RESOLUTION}")));
        }
        if spec.lower.len() != dim || spec.upper.len() != dim {
            return Err(GeoError::Shape("grid box dimension mismatch".into()));
        }
        let ta = metric.time_axis().ok_or_else(|| GeoError::DegenerateInput("grid oracle needs a time axis".into()))?;
        let domain = metric.domain();
        if domain.periodic[ta].is_some() {
            return Err(GeoError::DegenerateInput("periodic time axis".into()));
        }
        let period: Vec<Option<f64>> = domain.periodic.clone();
        let cell: Vec<f64> = (0..dim)
            .map(|i| match period[i] {
                Some(p) => p / res as f64,
                None if res > 1 => (spec.upper[i] - spec.lower[i]) / (res - 1) as f64,
                None => 0.0,
            })
            .collect();
        let n_nodes = res.pow(dim as u32);
        let mut order = vec![ta];
        order.extend((0..dim).filter(|i| *i != ta));

        let mut oracle = Self {
            metric_name: metric.name().to_string(),
            dim,
            resolution: res,
            time_axis: ta,
            time_steps: spec.time_steps.max(1),
            speed_slack: spec.speed_slack,
            lower: spec.lower.clone(),
            upper: spec.upper.clone(),
            cell,
            period,
            order,
            stencil: Vec::new(),
            words: 0,
            active: vec![0; n_nodes.div_ceil(64)],
            adjacency: Vec::new(),
        };

        // Metric cache and per-axis coordinate speed bounds.
        let d2 = dim * dim;
        let cache_bytes = n_nodes * d2 * 8;
        if cache_bytes > spec.memory_budget {
            return Err(GeoError::Resolution(format!("metric cache needs {cache_bytes} bytes, budget {}", spec.memory_budget)));
        }
        let mut gcache = vec![0.0; n_nodes * d2];
        let mut vmax = vec![0.0f64; dim];
        for idx in 0..n_nodes {
            let p = oracle.node_position(idx);
            if !domain.contains(&p) {
                continue;
            }
            let g = metric.components(&p);
            if g[(ta, ta)] >= 0.0 {
                return Err(GeoError::DegenerateInput(format!("time axis not timelike at {:?}", p.as_slice())));
            }
            set_bit(&mut oracle.active, idx);
            gcache[idx * d2..(idx + 1) * d2].copy_from_slice(g.as_slice());
            for i in (0..dim).filter(|i| *i != ta) {
                // g(e_t + λ e_i, same) = 0
                let (a, b, c) = (g[(i, i)], 2.0 * g[(i, ta)], g[(ta, ta)]);
                let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
                vmax[i] = vmax[i].max(((-b + disc) / (2.0 * a)).abs()).max(((-b - disc) / (2.0 * a)).abs());
            }
        }

        // Stencil of (time step, spatial offsets).
        let spatial: Vec<usize> = (0..dim).filter(|i| *i != ta).collect();
        let ht = oracle.cell[ta];
        let mut stencil = Vec::new();
        if res > 1 {
            for k in 1..=oracle.time_steps.min(res - 1) {
                let bounds: Vec<i32> = spatial
                    .iter()
                    .map(|&i| {
                        let cap = match oracle.period[i] {
                            Some(_) => (res / 2) as i32,
                            None => (res - 1) as i32,
                        };
                        let b = (k as f64 * ht * vmax[i] * (1.0 + spec.speed_slack) / oracle.cell[i]).floor() as i64 + 1;
                        (b.min(cap as i64)) as i32
                    })
                    .collect();
                let mut offs = vec![vec![0i32; dim]];
                for (j, &i) in spatial.iter().enumerate() {
                    let lo = -bounds[j];
                    let hi = match oracle.period[i] {
                        // Avoid duplicating the antipodal offset on even periodic grids.
                        Some(_) if 2 * bounds[j] as usize >= res => res as i32 - 1 - bounds[j],
                        _ => bounds[j],
                    };
                    let mut next = Vec::new();
                    for o in &offs {
                        for d in lo..=hi {
                            let mut o2 = o.clone();
                            o2[i] = d;
                            next.push(o2);
                        }
                    }
                    offs = next;
                }
                for mut o in offs {
                    o[ta] = k as i32;
                    stencil.push(o);
                }
            }
        }
        let words = stencil.len().div_ceil(64).max(1);
        let adj_bytes = n_nodes * words * 8;
        if adj_bytes + cache_bytes > spec.memory_budget {
            return Err(GeoError::Resolution(format!(
                "adjacency needs {} bytes, budget {}",
                adj_bytes + cache_bytes,
                spec.memory_budget
            )));
        }
        oracle.stencil = stencil;
        oracle.words = words;
        oracle.adjacency = vec![0; n_nodes * words];

        let null_time = |g: &[f64], d: &[f64]| -> f64 {
            // Larger root of g_tt τ² + 2 g(e_t, d) τ + g(d, d) = 0.
            let gt = |i: usize, j: usize| g[i + j * dim];
            let a = gt(ta, ta);
            let mut b = 0.0;
            let mut c = 0.0;
            for i in 0..dim {
                b += 2.0 * gt(ta, i) * d[i];
                for j in 0..dim {
                    c += gt(i, j) * d[i] * d[j];
                }
            }
            let disc = (b * b - 4.0 * a * c).max(0.0).sqrt();
            ((-b + disc) / (2.0 * a)).max((-b - disc) / (2.0 * a))
        };

        let mut d = vec![0.0; dim];
        for u in 0..n_nodes {
            if !bit(&oracle.active, u) {
                continue;
            }
            let iu = oracle.unravel(u);
            for (s, o) in oracle.stencil.iter().enumerate() {
                let Some(v) = oracle.offset_node(&iu, o) else { continue };
                if !bit(&oracle.active, v) {
                    continue;
                }
                for i in 0..dim {
                    d[i] = if i == ta { 0.0 } else { o[i] as f64 * oracle.cell[i] };
                }
                let tu = null_time(&gcache[u * d2..(u + 1) * d2], &d);
                let tv = null_time(&gcache[v * d2..(v + 1) * d2], &d);
                let need = 0.5 * (tu + tv);
                let have = o[ta] as f64 * ht * (1.0 + spec.speed_slack);
                if have >= need - 1e-12 * (1.0 + need.abs()) {
                    set_bit(&mut oracle.adjacency[u * words..(u + 1) * words], s);
                }
            }
        }
        Ok(oracle)
    }

    /// Loads `cache` when it matches `metric` and `spec`, otherwise builds
    /// and writes it.
    pub fn build_cached<M: Metric + ?Sized>(metric: &M, spec: &GridSpec, cache: Option<&Path>) -> Result<Self> {
        if let Some(path) = cache {
            if path.exists() {
                if let Ok(g) = Self::load(path) {
                    if g.matches(metric, spec) {
                        return Ok(g);
                    }
                }
            }
            let g = Self::build(metric, spec)?;
            g.save(path)?;
            return Ok(g);
        }
        Self::build(metric, spec)
    }

    fn matches<M: Metric + ?Sized>(&self, metric: &M, spec: &GridSpec) -> bool {
        self.metric_name == metric.name()
            && self.dim == metric.dim()
            && self.resolution == spec.resolution
            && self.time_steps == spec.time_steps.max(1)
            && self.speed_slack == spec.speed_slack
            && self.lower == spec.lower
            && self.upper == spec.upper
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn node_count(&self) -> usize {
        self.resolution.pow(self.dim as u32)
    }

    pub fn cell_size(&self) -> &[f64] {
        &self.cell
    }

    pub fn stencil_len(&self) -> usize {
        self.stencil.len()
    }

    pub fn is_active(&self, idx: usize) -> bool {
        bit(&self.active, idx)
    }

    fn unravel(&self, mut idx: usize) -> [i64; 3] {
        let mut out = [0i64; 3];
        for &ax in self.order.iter().rev() {
            out[ax] = (idx % self.resolution) as i64;
            idx /= self.resolution;
        }
        out
    }

    fn ravel(&self, ix: &[i64; 3]) -> usize {
        self.order.iter().fold(0usize, |acc, &ax| acc * self.resolution + ix[ax] as usize)
    }

    fn offset_node(&self, iu: &[i64; 3], o: &[i32]) -> Option<usize> {
        let res = self.resolution as i64;
        let mut ix = [0i64; 3];
        for i in 0..self.dim {
            let mut k = iu[i] + o[i] as i64;
            if self.period[i].is_some() {
                k = k.rem_euclid(res);
            } else if k < 0 || k >= res {
                return None;
            }
            ix[i] = k;
        }
        Some(self.ravel(&ix))
    }

    pub fn node_position(&self, idx: usize) -> Vector {
        let ix = self.unravel(idx);
        Vector::from_iterator(self.dim, (0..self.dim).map(|i| self.lower[i] + ix[i] as f64 * self.cell[i]))
    }

    /// Nearest node to `p`, if `p` lies in the grid box.
    pub fn node_of(&self, p: &Vector) -> Option<usize> {
        let res = self.resolution as i64;
        let mut ix = [0i64; 3];
        for i in 0..self.dim {
            let k = if self.cell[i] > 0.0 { ((p[i] - self.lower[i]) / self.cell[i]).round() as i64 } else { 0 };
            ix[i] = match self.period[i] {
                Some(_) => k.rem_euclid(res),
                None if (0..res).contains(&k) => k,
                None => return None,
            };
        }
        Some(self.ravel(&ix))
    }

    /// Bitset of nodes reachable from `src` (including `src`).
    pub fn reach_set(&self, src: usize) -> Vec<u64> {
        let n = self.node_count();
        let mut seen = vec![0u64; n.div_ceil(64)];
        if !self.is_active(src) {
            return seen;
        }
        set_bit(&mut seen, src);
        // Edges strictly increase the (slowest) time index, so one ordered sweep suffices.
        for u in src..n {
            if !bit(&seen, u) {
                continue;
            }
            let iu = self.unravel(u);
            let row = &self.adjacency[u * self.words..(u + 1) * self.words];
            for (w, &word) in row.iter().enumerate() {
                let mut bits = word;
                while bits != 0 {
                    let s = w * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if let Some(v) = self.offset_node(&iu, &self.stencil[s]) {
                        set_bit(&mut seen, v);
                    }
                }
            }
        }
        seen
    }

    pub fn reachable(&self, src: usize, dst: usize) -> bool {
        bit(&self.reach_set(src), dst)
    }

    /// Membership test on a bitset returned by [`GridOracle::reach_set`].
    pub fn contains(set: &[u64], idx: usize) -> bool {
        bit(set, idx)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        for v in [VERSION, self.dim as u32, self.resolution as u32, self.time_axis as u32, self.time_steps as u32] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.speed_slack.to_le_bytes())?;
        w.write_all(&(self.metric_name.len() as u32).to_le_bytes())?;
        w.write_all(self.metric_name.as_bytes())?;
        for i in 0..self.dim {
            for v in [self.lower[i], self.upper[i], self.cell[i], self.period[i].unwrap_or(f64::NAN)] {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.write_all(&(self.stencil.len() as u32).to_le_bytes())?;
        for o in &self.stencil {
            for v in o {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.write_all(&(self.words as u32).to_le_bytes())?;
        for v in self.active.iter().chain(self.adjacency.iter()) {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let bad = |m: &str| GeoError::Resolution(format!("grid cache {}: {m}", path.display()));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(bad("bad magic"));
        }
        let u32s = |r: &mut BufReader<File>| -> Result<u32> {
            let mut b = [0u8; 4];
            r.read_exact(&mut b)?;
            Ok(u32::from_le_bytes(b))
        };
        let f64s = |r: &mut BufReader<File>| -> Result<f64> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(f64::from_le_bytes(b))
        };
        if u32s(&mut r)? != VERSION {
            return Err(bad("version mismatch"));
        }
        let dim = u32s(&mut r)? as usize;
        let resolution = u32s(&mut r)? as usize;
        let time_axis = u32s(&mut r)? as usize;
        let time_steps = u32s(&mut r)? as usize;
        if !(dim == 2 || dim == 3) || resolution == 0 || resolution > MAX_RESOLUTION || time_axis >= dim {
            return Err(bad("corrupt header"));
        }
        let speed_slack = f64s(&mut r)?;
        let name_len = u32s(&mut r)? as usize;
        let mut name = vec![0u8; name_len.min(4096)];
        r.read_exact(&mut name)?;
        let metric_name = String::from_utf8(name).map_err(|_| bad("metric name"))?;
        let (mut lower, mut upper, mut cell, mut period) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for _ in 0..dim {
            lower.push(f64s(&mut r)?);
            upper.push(f64s(&mut r)?);
            cell.push(f64s(&mut r)?);
            let p = f64s(&mut r)?;
            period.push(if p.is_nan() { None } else { Some(p) });
        }
        let n_stencil = u32s(&mut r)? as usize;
        let mut stencil = Vec::with_capacity(n_stencil);
        for _ in 0..n_stencil {
            let mut o = Vec::with_capacity(dim);
            for _ in 0..dim {
                o.push(u32s(&mut r)? as i32);
            }
            stencil.push(o);
        }
        let words = u32s(&mut r)? as usize;
        let n_nodes = resolution.pow(dim as u32);
        let mut read_words = |count: usize| -> Result<Vec<u64>> {
            let mut out = Vec::with_capacity(count);
            let mut b = [0u8; 8];
            for _ in 0..count {
                r.read_exact(&mut b)?;
                out.push(u64::from_le_bytes(b));
            }
            Ok(out)
        };
        let active = read_words(n_nodes.div_ceil(64))?;
        let adjacency = read_words(n_nodes * words)?;
        let mut order = vec![time_axis];
        order.extend((0..dim).filter(|i| *i != time_axis));
        Ok(Self {
            metric_name,
            dim,
            resolution,
            time_axis,
            time_steps,
            speed_slack,
            lower,
            upper,
            cell,
            period,
            order,
            stencil,
            words,
            active,
            adjacency,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::Minkowski;

    #[test]
    fn single_node_reaches_itself() {
        let g = GridOracle::build(&Minkowski::new(2), &GridSpec::new(vec![0.0, 0.0], vec![1.0, 1.0], 1)).unwrap();
        assert_eq!(g.node_count(), 1);
        assert!(g.reachable(0, 0));
    }

    #[test]
    fn minkowski_cone_on_small_grid() {
        let g = GridOracle::build(&Minkowski::new(2), &GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 17)).unwrap();
        let src = g.node_of(&Vector::from_vec(vec![0.0, -1.0])).unwrap();
        let set = g.reach_set(src);
        for idx in 0..g.node_count() {
            let p = g.node_position(idx);
            let inside = p[0].abs() <= p[1] + 1.0 + 1e-12;
            assert_eq!(GridOracle::contains(&set, idx), inside, "{:?}", p.as_slice());
        }
    }

    #[test]
    fn rejects_oversized_grids() {
        let m = Minkowski::new(3);
        let spec = GridSpec::new(vec![0.0; 3], vec![1.0; 3], 129);
        assert!(matches!(GridOracle::build(&m, &spec), Err(GeoError::Resolution(_))));
        let spec = GridSpec::new(vec![0.0; 3], vec![1.0; 3], 64).with_memory_budget(1 << 10);
        assert!(matches!(GridOracle::build(&m, &spec), Err(GeoError::Resolution(_))));
    }

    #[test]
    fn cache_round_trip() {
        let m = Minkowski::new(2);
        let spec = GridSpec::new(vec![-1.0, -1.0], vec![1.0, 1.0], 9).with_time_steps(2);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.bin");
        let a = GridOracle::build_cached(&m, &spec, Some(&path)).unwrap();
        let b = GridOracle::build_cached(&m, &spec, Some(&path)).unwrap();
        assert_eq!(a.adjacency, b.adjacency);
        assert_eq!(a.stencil, b.stencil);
        let mut bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"NGRD");
        bytes[0] = b'X';
        std::fs::write(&path, bytes).unwrap();
        assert!(GridOracle::load(&path).is_err());
    }
}
