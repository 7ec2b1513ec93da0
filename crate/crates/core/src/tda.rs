//! Topological features for time series: sliding-window delay embedding,
//! Vietoris–Rips persistent homology in dimensions 0 and 1, and fixed-length
//! barcode summaries.
//!
//! Persistence is computed by column reduction of the Z/2 boundary matrix
//! with simplices ordered by (filtration value, dimension, vertex order).
//! Coincident points are collapsed before building the filtration; each
//! collapsed duplicate contributes its mandatory zero-length bar in
//! dimension 0, so the bar-count-equals-point-count property is preserved
//! while the simplex count stays proportional to the number of distinct
//! points.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::math::squared_distance;
use crate::{Error, Result};

/// A finite set of w-dimensional points.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<PointCloud> {
        if dim == 0 {
            return Err(Error::Shape("point dimension must be >= 1".into()));
        }
        if coords.len() % dim != 0 {
            return Err(Error::Shape("coordinate count not a multiple of dim".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Data("non-finite coordinate".into()));
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }
}

/// Sliding-window delay embedding: points (x_t, ..., x_{t+w-1}) for
/// t = 0, s, 2s, ... while t + w <= T.
pub fn delay_embed(series: &[f64], window: usize, stride: usize) -> Result<PointCloud> {
    if window == 0 {
        return Err(Error::Window("window must be >= 1".into()));
    }
    if stride == 0 {
        return Err(Error::Window("stride must be >= 1".into()));
    }
    if window > series.len() {
        return Err(Error::Window(format!(
            "window {window} exceeds series length {}",
            series.len()
        )));
    }
    let mut coords = Vec::new();
    let mut t = 0;
    while t + window <= series.len() {
        coords.extend_from_slice(&series[t..t + window]);
        t += stride;
    }
    PointCloud::new(window, coords)
}

/// One birth/death interval; `death` is `f64::INFINITY` for essential classes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PersistencePair {
    pub dim: u8,
    pub birth: f64,
    pub death: f64,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }
}

/// Multiset of persistence pairs.
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
}

impl PersistenceDiagram {
    pub fn pairs_in_dim(&self, dim: u8) -> impl Iterator<Item = &PersistencePair> {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }
}

/// Interval view of a diagram, sorted by (dim, birth, death).
#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Barcode {
    pub bars: Vec<PersistencePair>,
}

/// Lossless re-view of a diagram as sorted bars.
pub fn barcode(diagram: &PersistenceDiagram) -> Barcode {
    let mut bars = diagram.pairs.clone();
    bars.sort_by(|a, b| {
        a.dim
            .cmp(&b.dim)
            .then(a.birth.total_cmp(&b.birth))
            .then(a.death.total_cmp(&b.death))
    });
    Barcode { bars }
}

/// Largest filtration scale worth computing: the smallest over points of the
/// maximum distance to any other point. Beyond it the complex is a cone and
/// dimension-1 homology is trivial.
pub fn enclosing_radius(cloud: &PointCloud) -> f64 {
    let n = cloud.len();
    if n <= 1 {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        let mut far = 0.0f64;
        for j in 0..n {
            if i != j {
                far = far.max(squared_distance(cloud.point(i), cloud.point(j)));
            }
        }
        best = best.min(far);
    }
    best.sqrt()
}

#[derive(Clone, Copy)]
struct Simplex {
    filtration: f64,
    dim: u8,
    verts: [u32; 3],
}

/// Vietoris–Rips persistent homology under Euclidean distance.
///
/// Simplices up to dimension `max_dim + 1` enter at their largest pairwise
/// distance, capped at `max_scale`; ties are ordered by dimension then
/// lexicographic vertex order. Unpaired classes yield `death = INFINITY`.
pub fn rips_persistence(
    cloud: &PointCloud,
    max_scale: f64,
    max_dim: usize,
) -> Result<PersistenceDiagram> {
    if cloud.is_empty() {
        return Err(Error::Data("empty point cloud".into()));
    }
    if !(max_scale > 0.0) || !max_scale.is_finite() {
        return Err(Error::Data("max_scale must be positive and finite".into()));
    }
    if max_dim > 1 {
        return Err(Error::Data("homology dimension above 1 is unsupported".into()));
    }

    // Collapse exact duplicates; each collapsed point is one [0, 0) bar in H0.
    let n_total = cloud.len();
    let mut seen: BTreeMap<Vec<u64>, u32> = BTreeMap::new();
    let mut unique: Vec<u32> = Vec::new();
    let mut duplicates = 0usize;
    for i in 0..n_total {
        let key: Vec<u64> = cloud.point(i).iter().map(|c| c.to_bits()).collect();
        if seen.contains_key(&key) {
            duplicates += 1;
        } else {
            seen.insert(key, unique.len() as u32);
            unique.push(i as u32);
        }
    }
    let n = unique.len();

    let dist = |a: usize, b: usize| -> f64 {
        squared_distance(
            cloud.point(unique[a] as usize),
            cloud.point(unique[b] as usize),
        )
        .sqrt()
    };

    let mut simplices: Vec<Simplex> = Vec::new();
    for v in 0..n as u32 {
        simplices.push(Simplex {
            filtration: 0.0,
            dim: 0,
            verts: [v, 0, 0],
        });
    }
    let mut edge_filt = BTreeMap::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let d = dist(a, b);
            if d <= max_scale {
                edge_filt.insert((a as u32, b as u32), d);
                simplices.push(Simplex {
                    filtration: d,
                    dim: 1,
                    verts: [a as u32, b as u32, 0],
                });
            }
        }
    }
    if max_dim >= 1 {
        for a in 0..n as u32 {
            for b in (a + 1)..n as u32 {
                let Some(&dab) = edge_filt.get(&(a, b)) else {
                    continue;
                };
                for c in (b + 1)..n as u32 {
                    let (Some(&dac), Some(&dbc)) =
                        (edge_filt.get(&(a, c)), edge_filt.get(&(b, c)))
                    else {
                        continue;
                    };
                    simplices.push(Simplex {
                        filtration: dab.max(dac).max(dbc),
                        dim: 2,
                        verts: [a, b, c],
                    });
                }
            }
        }
    }

    simplices.sort_by(|x, y| {
        x.filtration
            .total_cmp(&y.filtration)
            .then(x.dim.cmp(&y.dim))
            .then(x.verts.cmp(&y.verts))
    });

    // Position of every vertex and edge in the sorted order, for boundaries.
    let mut vertex_pos = vec![0u32; n];
    let mut edge_pos: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for (idx, s) in simplices.iter().enumerate() {
        match s.dim {
            0 => vertex_pos[s.verts[0] as usize] = idx as u32,
            1 => {
                edge_pos.insert((s.verts[0], s.verts[1]), idx as u32);
            }
            _ => {}
        }
    }

    // Z/2 column reduction with a pivot-to-column lookup.
    let m = simplices.len();
    let mut pivot_owner: Vec<Option<u32>> = vec![None; m];
    let mut columns: Vec<Vec<u32>> = Vec::with_capacity(m);
    let mut killed = vec![false; m];
    let mut pairs: Vec<PersistencePair> = Vec::new();

    for (j, s) in simplices.iter().enumerate() {
        let mut col: Vec<u32> = match s.dim {
            0 => Vec::new(),
            1 => {
                let mut b = vec![
                    vertex_pos[s.verts[0] as usize],
                    vertex_pos[s.verts[1] as usize],
                ];
                b.sort_unstable();
                b
            }
            _ => {
                let mut b = vec![
                    edge_pos[&(s.verts[0], s.verts[1])],
                    edge_pos[&(s.verts[0], s.verts[2])],
                    edge_pos[&(s.verts[1], s.verts[2])],
                ];
                b.sort_unstable();
                b
            }
        };
        while let Some(&low) = col.last() {
            match pivot_owner[low as usize] {
                Some(owner) => add_column(&mut col, &columns[owner as usize]),
                None => break,
            }
        }
        if let Some(&low) = col.last() {
            pivot_owner[low as usize] = Some(j as u32);
            killed[low as usize] = true;
            let birth_dim = simplices[low as usize].dim;
            if usize::from(birth_dim) <= max_dim {
                pairs.push(PersistencePair {
                    dim: birth_dim,
                    birth: simplices[low as usize].filtration,
                    death: s.filtration,
                });
            }
        }
        columns.push(col);
    }

    // Positive, never-killed simplices are essential classes.
    for (j, s) in simplices.iter().enumerate() {
        if columns[j].is_empty() && !killed[j] && usize::from(s.dim) <= max_dim {
            pairs.push(PersistencePair {
                dim: s.dim,
                birth: s.filtration,
                death: f64::INFINITY,
            });
        }
    }
    for _ in 0..duplicates {
        pairs.push(PersistencePair {
            dim: 0,
            birth: 0.0,
            death: 0.0,
        });
    }
    Ok(PersistenceDiagram { pairs })
}

/// Symmetric difference of two sorted index columns (Z/2 addition).
fn add_column(target: &mut Vec<u32>, other: &[u32]) {
    let mut out = Vec::with_capacity(target.len() + other.len());
    let (mut i, mut j) = (0, 0);
    while i < target.len() && j < other.len() {
        match target[i].cmp(&other[j]) {
            core::cmp::Ordering::Less => {
                out.push(target[i]);
                i += 1;
            }
            core::cmp::Ordering::Greater => {
                out.push(other[j]);
                j += 1;
            }
            core::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&target[i..]);
    out.extend_from_slice(&other[j..]);
    *target = out;
}

/// Fixed-length barcode summary: per dimension k in {0, 1} the count, max,
/// mean, sum and entropy of bar persistences, infinite bars capped at
/// `cap_scale`. Zero-persistence bars carry no information and are skipped.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DimSummary {
    pub bar_count: f64,
    pub max_persistence: f64,
    pub mean_persistence: f64,
    pub sum_persistence: f64,
    pub persistence_entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TopoFeatures {
    pub dims: [DimSummary; 2],
}

impl TopoFeatures {
    pub const LEN: usize = 10;

    pub fn to_array(&self) -> [f64; Self::LEN] {
        let mut out = [0.0; Self::LEN];
        for (k, d) in self.dims.iter().enumerate() {
            out[k * 5] = d.bar_count;
            out[k * 5 + 1] = d.max_persistence;
            out[k * 5 + 2] = d.mean_persistence;
            out[k * 5 + 3] = d.sum_persistence;
            out[k * 5 + 4] = d.persistence_entropy;
        }
        out
    }
}

/// Summarizes a barcode into [`TopoFeatures`]. Infinite deaths are replaced
/// by `cap_scale` before persistences are computed; persistences are clamped
/// at zero if a finite death exceeds the cap.
pub fn barcode_features(bc: &Barcode, cap_scale: f64) -> TopoFeatures {
    let mut dims = [DimSummary::default(); 2];
    for (k, summary) in dims.iter_mut().enumerate() {
        let persistences: Vec<f64> = bc
            .bars
            .iter()
            .filter(|b| usize::from(b.dim) == k)
            .map(|b| {
                let death = if b.death.is_finite() { b.death } else { cap_scale };
                (death - b.birth).max(0.0)
            })
            .filter(|&p| p > 0.0)
            .collect();
        if persistences.is_empty() {
            continue;
        }
        let sum: f64 = persistences.iter().sum();
        let max = persistences.iter().cloned().fold(0.0, f64::max);
        let entropy = if persistences.len() > 1 && sum > 0.0 {
            -persistences
                .iter()
                .map(|&p| {
                    let q = p / sum;
                    q * q.ln()
                })
                .sum::<f64>()
        } else {
            0.0
        };
        *summary = DimSummary {
            bar_count: persistences.len() as f64,
            max_persistence: max,
            mean_persistence: sum / persistences.len() as f64,
            sum_persistence: sum,
            persistence_entropy: entropy.max(0.0),
        };
    }
    TopoFeatures { dims }
}
