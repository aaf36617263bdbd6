//! Patch-feature grids: file ingestion, synthetic slides and 4-connectivity.
//!
//! A slide is reduced to the tissue patches of a sliding-window lattice. Each
//! patch carries a feature vector, its `(row, col)` lattice position and the
//! fraction of its area covered by tumor. Background cells are not stored, so
//! the patch count `m_s` counts tissue only.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::binio::{read_file, write_file, Reader, Writer};
use crate::config::KeyValues;
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: &[u8; 4] = b"PGF1";
pub const MANIFEST_NAME: &str = "manifest.txt";
/// Connectivity convention written into every manifest.
pub const CONNECTIVITY_NOTE: &str = "connectivity=window-lattice-4";

#[derive(Debug, Clone, PartialEq)]
pub struct PatchGrid {
    pub wsi_id: String,
    pub rows: usize,
    pub cols: usize,
    /// `m_s × d_f`, one row per tissue patch.
    pub features: Array2<f64>,
    pub grid_pos: Vec<(usize, usize)>,
    pub tumor_ratio: Vec<f64>,
}

impl PatchGrid {
    pub fn new(
        wsi_id: impl Into<String>,
        rows: usize,
        cols: usize,
        features: Array2<f64>,
        grid_pos: Vec<(usize, usize)>,
        tumor_ratio: Vec<f64>,
    ) -> Result<Self> {
        let grid = PatchGrid {
            wsi_id: wsi_id.into(),
            rows,
            cols,
            features,
            grid_pos,
            tumor_ratio,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidGrid("zero grid area".into()));
        }
        let m = self.features.nrows();
        if self.grid_pos.len() != m || self.tumor_ratio.len() != m {
            return Err(Error::InvalidGrid(format!(
                "{} feature rows but {} positions and {} tumor ratios",
                m,
                self.grid_pos.len(),
                self.tumor_ratio.len()
            )));
        }
        let mut seen = vec![false; self.rows * self.cols];
        for (i, &(r, c)) in self.grid_pos.iter().enumerate() {
            if r >= self.rows || c >= self.cols {
                return Err(Error::InvalidGrid(format!(
                    "patch {i} at ({r},{c}) outside {}x{} grid",
                    self.rows, self.cols
                )));
            }
            let cell = &mut seen[r * self.cols + c];
            if *cell {
                return Err(Error::InvalidGrid(format!("duplicate position ({r},{c})")));
            }
            *cell = true;
        }
        for (row, &value) in self.tumor_ratio.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::TumorRatio { row, value });
            }
        }
        for ((row, col), v) in self.features.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row, col });
            }
        }
        Ok(())
    }

    pub fn num_patches(&self) -> usize {
        self.features.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

/// Undirected patch adjacency stored as sorted `(i, j)` pairs with `i < j`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PatchAdjacency {
    pub n: usize,
    pub pairs: Vec<(usize, usize)>,
}

impl PatchAdjacency {
    pub fn new(n: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out = Vec::new();
        for (a, b) in pairs {
            if a == b {
                return Err(Error::InvalidArgument(format!("self pair ({a},{a})")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!(
                    "pair ({a},{b}) out of range for {n} nodes"
                )));
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort_unstable();
        out.dedup();
        Ok(PatchAdjacency { n, pairs: out })
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.n];
        for &(i, j) in &self.pairs {
            nb[i].push(j);
            nb[j].push(i);
        }
        for list in &mut nb {
            list.sort_unstable();
        }
        nb
    }

    /// Dense 0/1 matrix.
    pub fn to_dense(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for &(i, j) in &self.pairs {
            a[[i, j]] = 1.0;
            a[[j, i]] = 1.0;
        }
        a
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.pairs.binary_search(&(i.min(j), i.max(j))).is_ok()
    }
}

/// Pairs of tissue patches whose lattice positions are 4-neighbors.
pub fn patch_adjacency(grid: &PatchGrid) -> PatchAdjacency {
    let mut slot = vec![usize::MAX; grid.rows * grid.cols];
    for (i, &(r, c)) in grid.grid_pos.iter().enumerate() {
        slot[r * grid.cols + c] = i;
    }
    let mut pairs = Vec::new();
    for (i, &(r, c)) in grid.grid_pos.iter().enumerate() {
        if c + 1 < grid.cols {
            let j = slot[r * grid.cols + c + 1];
            if j != usize::MAX {
                pairs.push((i.min(j), i.max(j)));
            }
        }
        if r + 1 < grid.rows {
            let j = slot[(r + 1) * grid.cols + c];
            if j != usize::MAX {
                pairs.push((i.min(j), i.max(j)));
            }
        }
    }
    pairs.sort_unstable();
    PatchAdjacency {
        n: grid.num_patches(),
        pairs,
    }
}

// ---------------------------------------------------------------------------
// Feature files

/// Serialize a grid as a `PGF1` feature file (features stored as f32).
pub fn encode_patch_grid(grid: &PatchGrid) -> Vec<u8> {
    let mut w = Writer::new();
    w.bytes(FEATURE_MAGIC);
    w.u32(grid.rows as u32);
    w.u32(grid.cols as u32);
    w.u32(grid.num_patches() as u32);
    w.u32(grid.feature_dim() as u32);
    for (i, &(r, c)) in grid.grid_pos.iter().enumerate() {
        w.u32(r as u32);
        w.u32(c as u32);
        w.f32(grid.tumor_ratio[i] as f32);
        for &v in grid.features.row(i) {
            w.f32(v as f32);
        }
    }
    w.buf
}

pub fn decode_patch_grid(data: &[u8], wsi_id: &str) -> Result<PatchGrid> {
    let mut r = Reader::new(data, "feature file");
    let header = |what: &str| Error::MalformedHeader(what.to_string());
    let magic = r.take(4).map_err(|_| header("missing magic"))?;
    if magic != FEATURE_MAGIC {
        return Err(header("bad magic, expected PGF1"));
    }
    let mut field = |name: &str| {
        r.u32()
            .map(|v| v as usize)
            .map_err(|_| header(&format!("truncated before `{name}`")))
    };
    let rows = field("rows")?;
    let cols = field("cols")?;
    let m_s = field("m_s")?;
    let d_f = field("d_f")?;
    if rows == 0 || cols == 0 {
        return Err(header("rows and cols must be positive"));
    }
    if d_f == 0 {
        return Err(header("d_f must be positive"));
    }
    if m_s > rows * cols {
        return Err(header(&format!("m_s={m_s} exceeds {rows}x{cols} cells")));
    }
    let record = 12 + 4 * d_f;
    let body = r.remaining();
    if body != m_s * record {
        return Err(Error::RowCount {
            declared: m_s,
            found: body / record,
        });
    }
    let mut features = Array2::zeros((m_s, d_f));
    let mut grid_pos = Vec::with_capacity(m_s);
    let mut tumor_ratio = Vec::with_capacity(m_s);
    for row in 0..m_s {
        let pr = r.u32()? as usize;
        let pc = r.u32()? as usize;
        let t = r.f32()? as f64;
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::TumorRatio { row, value: t });
        }
        for col in 0..d_f {
            let v = r.f32()?;
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row, col });
            }
            features[[row, col]] = v as f64;
        }
        grid_pos.push((pr, pc));
        tumor_ratio.push(t);
    }
    PatchGrid::new(wsi_id, rows, cols, features, grid_pos, tumor_ratio)
}

pub fn save_patch_grid(grid: &PatchGrid, path: &Path) -> Result<()> {
    write_file(path, &encode_patch_grid(grid))
}

/// Load a feature file; the slide id comes from the sibling manifest when it
/// lists the file, otherwise from the file stem.
pub fn load_patch_grid(path: &Path) -> Result<PatchGrid> {
    let data = read_file(path)?;
    let wsi_id = path
        .parent()
        .and_then(|dir| read_manifest(dir).ok())
        .and_then(|m| {
            let name = path.file_name()?.to_str()?.to_string();
            m.into_iter().find(|(f, _)| *f == name).map(|(_, id)| id)
        })
        .unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        });
    decode_patch_grid(&data, &wsi_id)
}

/// Manifest lines are `<file name>\t<wsi_id>`; `#` lines are comments.
pub fn write_manifest(dir: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut text = format!("# {CONNECTIVITY_NOTE}\n");
    for (file, id) in entries {
        text.push_str(&format!("{file}\t{id}\n"));
    }
    write_file(&dir.join(MANIFEST_NAME), text.as_bytes())
}

pub fn read_manifest(dir: &Path) -> Result<Vec<(String, String)>> {
    let path = dir.join(MANIFEST_NAME);
    let text = String::from_utf8(read_file(&path)?)
        .map_err(|_| Error::Format(format!("{}: not utf-8", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (file, id) = line.split_once('\t').ok_or_else(|| {
            Error::Format(format!(
                "{}:{}: expected `file<TAB>wsi_id`",
                path.display(),
                lineno + 1
            ))
        })?;
        out.push((file.to_string(), id.to_string()));
    }
    Ok(out)
}

/// Every grid listed in a directory's manifest, in manifest order.
pub fn load_feature_dir(dir: &Path) -> Result<Vec<PatchGrid>> {
    read_manifest(dir)?
        .into_iter()
        .map(|(file, _)| load_patch_grid(&dir.join(file)))
        .collect()
}

pub fn feature_file_name(wsi_id: &str) -> PathBuf {
    PathBuf::from(format!("{wsi_id}.pgf"))
}

// ---------------------------------------------------------------------------
// Synthetic slides

/// Parameters of a synthetic slide.
///
/// Tumor blobs are axis-aligned rectangles (ratio 1.0) surrounded by a
/// one-patch ring at ratio 0.5. A patch's feature mean is its tumor ratio
/// times the tumor class mean, which sits `separation` away from the origin
/// along feature 0. Noise is isotropic with standard deviation `noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub cols: usize,
    pub d_f: usize,
    pub blobs: usize,
    pub blob_min: usize,
    pub blob_max: usize,
    pub separation: f64,
    pub noise: f64,
    /// Keep only an inscribed ellipse of tissue; cells outside are background.
    pub elliptical_tissue: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            rows: 16,
            cols: 16,
            d_f: 16,
            blobs: 1,
            blob_min: 2,
            blob_max: 5,
            separation: 6.0,
            noise: 1.0,
            elliptical_tissue: true,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidArgument("zero grid area".into()));
        }
        if self.d_f == 0 {
            return Err(Error::InvalidArgument("d_f must be positive".into()));
        }
        if !self.separation.is_finite() || self.separation < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "separation must be >= 0, got {}",
                self.separation
            )));
        }
        if !self.noise.is_finite() || self.noise <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "noise must be > 0, got {}",
                self.noise
            )));
        }
        if self.blob_min == 0 || self.blob_min > self.blob_max {
            return Err(Error::InvalidArgument(format!(
                "blob size range {}..={} is empty",
                self.blob_min, self.blob_max
            )));
        }
        Ok(())
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut spec = SyntheticSpec::default();
        kv.read_into("rows", &mut spec.rows)?;
        kv.read_into("cols", &mut spec.cols)?;
        kv.read_into("d_f", &mut spec.d_f)?;
        kv.read_into("blobs", &mut spec.blobs)?;
        kv.read_into("blob_min", &mut spec.blob_min)?;
        kv.read_into("blob_max", &mut spec.blob_max)?;
        kv.read_into("separation", &mut spec.separation)?;
        kv.read_into("noise", &mut spec.noise)?;
        kv.read_into("elliptical_tissue", &mut spec.elliptical_tissue)?;
        kv.reject_unknown(&[
            "rows",
            "cols",
            "d_f",
            "blobs",
            "blob_min",
            "blob_max",
            "separation",
            "noise",
            "elliptical_tissue",
        ])?;
        Ok(spec)
    }

    fn is_tissue(&self, r: usize, c: usize) -> bool {
        if !self.elliptical_tissue {
            return true;
        }
        let cr = (self.rows as f64 - 1.0) / 2.0;
        let cc = (self.cols as f64 - 1.0) / 2.0;
        let ar = self.rows as f64 / 2.0;
        let ac = self.cols as f64 / 2.0;
        let dr = (r as f64 - cr) / ar;
        let dc = (c as f64 - cc) / ac;
        dr * dr + dc * dc <= 1.0
    }
}

impl FromStr for SyntheticSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SyntheticSpec::from_key_values(&s.parse()?)
    }
}

impl fmt::Display for SyntheticSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows={}", self.rows)?;
        writeln!(f, "cols={}", self.cols)?;
        writeln!(f, "d_f={}", self.d_f)?;
        writeln!(f, "blobs={}", self.blobs)?;
        writeln!(f, "blob_min={}", self.blob_min)?;
        writeln!(f, "blob_max={}", self.blob_max)?;
        writeln!(f, "separation={}", self.separation)?;
        writeln!(f, "noise={}", self.noise)?;
        writeln!(f, "elliptical_tissue={}", self.elliptical_tissue)
    }
}

/// Tumor ratio per lattice cell for the blobs of one slide.
fn tumor_map(spec: &SyntheticSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut ratio = vec![0.0f64; spec.rows * spec.cols];
    for _ in 0..spec.blobs {
        let h = rng
            .random_range(spec.blob_min..=spec.blob_max)
            .min(spec.rows);
        let w = rng
            .random_range(spec.blob_min..=spec.blob_max)
            .min(spec.cols);
        let top = rng.random_range(0..=spec.rows - h);
        let left = rng.random_range(0..=spec.cols - w);
        let r0 = top.saturating_sub(1);
        let r1 = (top + h + 1).min(spec.rows);
        let c0 = left.saturating_sub(1);
        let c1 = (left + w + 1).min(spec.cols);
        for r in r0..r1 {
            for c in c0..c1 {
                let inside = (top..top + h).contains(&r) && (left..left + w).contains(&c);
                let v = if inside { 1.0 } else { 0.5 };
                let cell = &mut ratio[r * spec.cols + c];
                *cell = cell.max(v);
            }
        }
    }
    ratio
}

/// Deterministic synthetic slide: same `(spec, seed)` gives the same grid.
pub fn generate_synthetic_wsi(spec: &SyntheticSpec, seed: u64) -> Result<PatchGrid> {
    generate_synthetic_wsi_named(spec, seed, &format!("synthetic-{seed}"))
}

pub fn generate_synthetic_wsi_named(
    spec: &SyntheticSpec,
    seed: u64,
    wsi_id: &str,
) -> Result<PatchGrid> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ratio_map = tumor_map(spec, &mut rng);
    let cells: Vec<(usize, usize)> = (0..spec.rows)
        .flat_map(|r| (0..spec.cols).map(move |c| (r, c)))
        .filter(|&(r, c)| spec.is_tissue(r, c))
        .collect();
    if cells.is_empty() {
        return Err(Error::InvalidArgument("no tissue cells in grid".into()));
    }
    let mut features = Array2::zeros((cells.len(), spec.d_f));
    let mut tumor_ratio = Vec::with_capacity(cells.len());
    for (i, &(r, c)) in cells.iter().enumerate() {
        let t = ratio_map[r * spec.cols + c];
        tumor_ratio.push(t);
        for j in 0..spec.d_f {
            let z: f64 = rng.sample(StandardNormal);
            let mean = if j == 0 { t * spec.separation } else { 0.0 };
            // Rounded to what a feature file can hold.
            features[[i, j]] = (mean + spec.noise * z) as f32 as f64;
        }
    }
    PatchGrid::new(wsi_id, spec.rows, spec.cols, features, cells, tumor_ratio)
}

/// Sorted listing of `(file, wsi_id)` for a set of grids, as written to a manifest.
pub fn manifest_entries(grids: &[PatchGrid]) -> Vec<(String, String)> {
    let map: BTreeMap<String, String> = grids
        .iter()
        .map(|g| {
            (
                feature_file_name(&g.wsi_id).to_string_lossy().into_owned(),
                g.wsi_id.clone(),
            )
        })
        .collect();
    map.into_iter().collect()
}
