//! Broken-geodesic cell complex `B_k` on a triangulated space.
//!
//! A point `p` of the triangulation has a carrier `T(p)`, the smallest closed
//! face containing it, and an open star `O(p)`, the union of the maximal
//! simplices containing `p`. Both depend only on the face whose relative
//! interior holds `p`, so everything below works on faces.
//!
//! A cell of `B_k` is a cyclic sequence of `2^k` faces `(F_1, …, F_{2^k})`
//! with `O(F_{j-1}) ∪ O(F_j)` inside a single cover set for every `j`
//! (indices mod `2^k`). Its dimension is `Σ dim F_j`.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GromovError {
    #[error("mesh line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("simplex {simplex} references vertex {vertex}, but there are {count} vertices")]
    VertexOutOfRange { simplex: usize, vertex: usize, count: usize },
    #[error("simplex {0} repeats a vertex")]
    RepeatedVertex(usize),
    #[error("simplex {0} is empty")]
    EmptySimplex(usize),
    #[error("simplex {inner} is a face of simplex {outer}, only maximal simplices are allowed")]
    NotMaximal { inner: usize, outer: usize },
    #[error("vertex {0} lies in no simplex")]
    IsolatedVertex(usize),
    #[error("vertex {index} has {found} coordinates, expected {expected}")]
    Dimension { index: usize, expected: usize, found: usize },
    #[error("maximal simplex {0} lies in no single cover set, refine the triangulation")]
    Uncovered(usize),
    #[error("cover is empty")]
    EmptyCover,
    #[error("subdivision level must be at least 1")]
    LevelZero,
    #[error("2^k = {0} exceeds the limit of {MAX_LEGS} legs")]
    LevelTooLarge(u64),
    #[error("face id {0} out of range")]
    UnknownFace(usize),
    #[error("leg {leg} ({from} -> {to}) is not inside a single cover set")]
    NotAdmissible { leg: usize, from: usize, to: usize },
    #[error("Lipschitz constant must be non-negative and finite, got {0}")]
    BadLipschitz(f64),
}

pub type Result<T> = std::result::Result<T, GromovError>;

/// Largest number of legs `2^k` the enumerator accepts.
pub const MAX_LEGS: usize = 8;
/// Default cap on the number of enumerated cells.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    /// Sorted vertex indices.
    pub vertices: Vec<usize>,
}

impl Face {
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn label(&self) -> String {
        let parts: Vec<String> = self.vertices.iter().map(|v| v.to_string()).collect();
        parts.join("-")
    }
}

#[derive(Debug, Clone)]
pub struct Triangulation {
    coords: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    faces: Vec<Face>,
    /// For each face, the maximal simplices containing it (sorted).
    open_star: Vec<Vec<usize>>,
}

impl Triangulation {
    pub fn new(coords: Vec<Vec<f64>>, simplices: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(first) = coords.first() {
            for (index, c) in coords.iter().enumerate() {
                if c.len() != first.len() {
                    return Err(GromovError::Dimension { index, expected: first.len(), found: c.len() });
                }
            }
        }
        let mut simplices = simplices;
        let mut used = vec![false; coords.len()];
        for (i, s) in simplices.iter_mut().enumerate() {
            if s.is_empty() {
                return Err(GromovError::EmptySimplex(i));
            }
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(GromovError::RepeatedVertex(i));
            }
            for &v in s.iter() {
                if v >= coords.len() {
                    return Err(GromovError::VertexOutOfRange { simplex: i, vertex: v, count: coords.len() });
                }
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(GromovError::IsolatedVertex(v));
        }
        for (i, a) in simplices.iter().enumerate() {
            for (j, b) in simplices.iter().enumerate() {
                if i != j && a.len() <= b.len() && is_subset(a, b) {
                    return Err(GromovError::NotMaximal { inner: i, outer: j });
                }
            }
        }

        let mut lattice: BTreeMap<Face, Vec<usize>> = BTreeMap::new();
        for (si, s) in simplices.iter().enumerate() {
            let n = s.len();
            for mask in 1u64..(1u64 << n) {
                let vertices = (0..n).filter(|b| mask >> b & 1 == 1).map(|b| s[b]).collect();
                lattice.entry(Face { vertices }).or_default().push(si);
            }
        }
        let mut entries: Vec<(Face, Vec<usize>)> = lattice.into_iter().collect();
        entries.sort_by(|a, b| (a.0.dim(), &a.0.vertices).cmp(&(b.0.dim(), &b.0.vertices)));
        let (faces, open_star) = entries.into_iter().unzip();
        Ok(Triangulation { coords, simplices, faces, open_star })
    }

    /// Parse an OFF-like mesh: optional `OFF` line, a line `nv ns [ne]`, then
    /// `nv` coordinate lines and `ns` simplex lines `c i_0 … i_{c-1}`.
    /// `#` starts a comment.
    pub fn parse_off(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let err = |line: usize, msg: &str| GromovError::Parse { line, msg: msg.to_string() };

        let (mut line, mut head) = lines.next().ok_or_else(|| err(0, "empty mesh"))?;
        if head.eq_ignore_ascii_case("off") {
            (line, head) = lines.next().ok_or_else(|| err(line, "missing counts line"))?;
        }
        let counts: Vec<usize> = head
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(line, "counts must be non-negative integers"))?;
        if counts.len() < 2 {
            return Err(err(line, "expected vertex and simplex counts"));
        }
        let (nv, ns) = (counts[0], counts[1]);

        let mut coords = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (line, l) = lines.next().ok_or_else(|| err(line, "missing vertex line"))?;
            let c: Vec<f64> = l
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(line, "bad coordinate"))?;
            if c.iter().any(|x| !x.is_finite()) {
                return Err(err(line, "non-finite coordinate"));
            }
            coords.push(c);
        }
        let mut simplices = Vec::with_capacity(ns);
        for _ in 0..ns {
            let (line, l) = lines.next().ok_or_else(|| err(line, "missing simplex line"))?;
            let t: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| err(line, "bad vertex index"))?;
            match t.split_first() {
                Some((&c, rest)) if c == rest.len() => simplices.push(rest.to_vec()),
                _ => return Err(err(line, "simplex line must be `count i_0 ... i_{count-1}`")),
            }
        }
        if let Some((line, _)) = lines.next() {
            return Err(err(line, "trailing data"));
        }
        Self::new(coords, simplices)
    }

    pub fn vertex_count(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Vec<f64>] {
        &self.coords
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    /// All faces, ordered by dimension then vertices. Face ids index this slice.
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn face(&self, id: usize) -> Result<&Face> {
        self.faces.get(id).ok_or(GromovError::UnknownFace(id))
    }

    pub fn face_id(&self, vertices: &[usize]) -> Option<usize> {
        let mut v = vertices.to_vec();
        v.sort_unstable();
        self.faces.iter().position(|f| f.vertices == v)
    }

    /// `O(F)`: maximal simplices containing the face.
    pub fn open_star(&self, face: usize) -> &[usize] {
        &self.open_star[face]
    }

    /// `T(p)` for the point with barycentric `weights` in maximal simplex
    /// `simplex`: the face spanned by the vertices with positive weight.
    pub fn carrier(&self, simplex: usize, weights: &[f64]) -> Option<usize> {
        let s = self.simplices.get(simplex)?;
        if weights.len() != s.len() || weights.iter().any(|w| *w < 0.0 || !w.is_finite()) {
            return None;
        }
        let support: Vec<usize> = s.iter().zip(weights).filter(|(_, w)| **w > 0.0).map(|(v, _)| *v).collect();
        if support.is_empty() {
            return None;
        }
        self.face_id(&support)
    }
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|x| b.binary_search(x).is_ok())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverSet {
    pub id: usize,
    /// Maximal simplices making up `V_α` (sorted).
    pub simplices: Vec<usize>,
}

impl CoverSet {
    pub fn contains_all(&self, simplices: &[usize]) -> bool {
        is_subset(simplices, &self.simplices)
    }
}

/// One cover set per vertex: its closed star.
pub fn star_cover(tri: &Triangulation) -> Result<Vec<CoverSet>> {
    let mut stars = vec![Vec::new(); tri.vertex_count()];
    for (si, s) in tri.simplices.iter().enumerate() {
        for &v in s {
            stars[v].push(si);
        }
    }
    let cover: Vec<CoverSet> = stars.into_iter().enumerate().map(|(id, simplices)| CoverSet { id, simplices }).collect();
    check_cover(tri, &cover)?;
    Ok(cover)
}

/// Every maximal simplex must lie in some cover set.
pub fn check_cover(tri: &Triangulation, cover: &[CoverSet]) -> Result<()> {
    if cover.is_empty() {
        return Err(GromovError::EmptyCover);
    }
    for si in 0..tri.simplices.len() {
        if !cover.iter().any(|c| c.simplices.binary_search(&si).is_ok()) {
            return Err(GromovError::Uncovered(si));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BrokenLoopCell {
    /// Face ids `F_1, …, F_{2^k}`; `F_0` is `F_{2^k}`.
    pub faces: Vec<usize>,
    pub dim: usize,
}

impl BrokenLoopCell {
    pub fn new(tri: &Triangulation, faces: Vec<usize>) -> Result<Self> {
        let mut dim = 0;
        for &f in &faces {
            dim += tri.face(f)?.dim();
        }
        Ok(BrokenLoopCell { faces, dim })
    }

    pub fn legs(&self) -> usize {
        self.faces.len()
    }

    /// Duplicate every point, `p_j ↦ p_j, p_j`: the same loop at level `k + 1`.
    pub fn refine(&self) -> BrokenLoopCell {
        let faces = self.faces.iter().flat_map(|&f| [f, f]).collect();
        BrokenLoopCell { faces, dim: 2 * self.dim }
    }

    pub fn label(&self, tri: &Triangulation) -> String {
        let parts: Vec<String> = self.faces.iter().map(|&f| tri.faces[f].label()).collect();
        parts.join("|")
    }
}

/// Pairwise admissibility of faces with respect to a cover.
#[derive(Debug, Clone)]
pub struct Admissibility {
    /// For each face, the cover sets containing `O(F)` (sorted).
    homes: Vec<Vec<usize>>,
    /// For each face, the faces `G` with `O(F) ∪ O(G)` in one cover set (sorted).
    neighbours: Vec<Vec<usize>>,
}

impl Admissibility {
    pub fn new(tri: &Triangulation, cover: &[CoverSet]) -> Result<Self> {
        check_cover(tri, cover)?;
        let mut by_simplex = vec![Vec::new(); tri.simplices.len()];
        for (a, c) in cover.iter().enumerate() {
            for &s in &c.simplices {
                if let Some(slot) = by_simplex.get_mut(s) {
                    slot.push(a);
                }
            }
        }
        let homes: Vec<Vec<usize>> = tri
            .open_star
            .iter()
            .map(|o| by_simplex[o[0]].iter().copied().filter(|&a| cover[a].contains_all(o)).collect())
            .collect();
        let mut residents = vec![Vec::new(); cover.len()];
        for (f, h) in homes.iter().enumerate() {
            for &a in h {
                residents[a].push(f);
            }
        }
        let neighbours = homes
            .par_iter()
            .map(|h| {
                let mut n: Vec<usize> = h.iter().flat_map(|&a| residents[a].iter().copied()).collect();
                n.sort_unstable();
                n.dedup();
                n
            })
            .collect();
        Ok(Admissibility { homes, neighbours })
    }

    pub fn pair(&self, f: usize, g: usize) -> bool {
        self.neighbours[f].binary_search(&g).is_ok()
    }

    pub fn homes(&self, face: usize) -> &[usize] {
        &self.homes[face]
    }

    /// Check invariants (i) and (ii) for a cyclic face sequence.
    pub fn check(&self, faces: &[usize]) -> Result<()> {
        let m = faces.len();
        for &f in faces {
            if f >= self.homes.len() {
                return Err(GromovError::UnknownFace(f));
            }
        }
        for j in 0..m {
            let (from, to) = (faces[(j + m - 1) % m], faces[j]);
            if !self.pair(from, to) {
                return Err(GromovError::NotAdmissible { leg: j + 1, from, to });
            }
        }
        Ok(())
    }

    /// Number of admissible cyclic sequences of length `m` starting at each face.
    fn closed_walks(&self, m: usize) -> Vec<u128> {
        let n = self.neighbours.len();
        (0..n)
            .into_par_iter()
            .map(|start| {
                let mut count = vec![0u128; n];
                count[start] = 1;
                for _ in 0..m {
                    let mut next = vec![0u128; n];
                    for (f, &c) in count.iter().enumerate() {
                        if c > 0 {
                            for &g in &self.neighbours[f] {
                                next[g] = next[g].saturating_add(c);
                            }
                        }
                    }
                    count = next;
                }
                count[start]
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub k: u32,
    pub cells: Vec<BrokenLoopCell>,
    /// Number of admissible sequences, including any not returned.
    pub total: u128,
    /// True when the cap cut the enumeration short.
    pub partial: bool,
}

pub fn enumerate_bk(tri: &Triangulation, cover: &[CoverSet], k: u32) -> Result<Enumeration> {
    enumerate_bk_capped(tri, cover, k, DEFAULT_CAP)
}

/// All admissible cyclic face sequences of length `2^k`, in lexicographic order
/// of face ids. At most `cap` cells are returned; the prefix is deterministic.
pub fn enumerate_bk_capped(tri: &Triangulation, cover: &[CoverSet], k: u32, cap: usize) -> Result<Enumeration> {
    if k == 0 {
        return Err(GromovError::LevelZero);
    }
    let m = 1u64.checked_shl(k).filter(|&m| m <= MAX_LEGS as u64).ok_or(GromovError::LevelTooLarge(1u64 << k.min(63)))?
        as usize;
    let adm = Admissibility::new(tri, cover)?;
    let walks = adm.closed_walks(m);
    let total = walks.iter().fold(0u128, |a, &b| a.saturating_add(b));

    let mut quotas = Vec::with_capacity(walks.len());
    let mut left = cap as u128;
    for &w in &walks {
        let q = w.min(left);
        quotas.push(q as usize);
        left -= q;
    }
    let chunks: Vec<Vec<BrokenLoopCell>> = quotas
        .par_iter()
        .enumerate()
        .map(|(start, &quota)| {
            let mut out = Vec::with_capacity(quota);
            if quota > 0 {
                let mut seq = vec![start];
                extend(&adm, tri, m, &mut seq, quota, &mut out);
            }
            out
        })
        .collect();
    let cells: Vec<BrokenLoopCell> = chunks.into_iter().flatten().collect();
    let partial = (cells.len() as u128) < total;
    Ok(Enumeration { k, cells, total, partial })
}

fn extend(adm: &Admissibility, tri: &Triangulation, m: usize, seq: &mut Vec<usize>, quota: usize, out: &mut Vec<BrokenLoopCell>) {
    if out.len() >= quota {
        return;
    }
    let last = *seq.last().unwrap();
    if seq.len() == m {
        if adm.pair(last, seq[0]) {
            let dim = seq.iter().map(|&f| tri.faces[f].dim()).sum();
            out.push(BrokenLoopCell { faces: seq.clone(), dim });
        }
        return;
    }
    for &g in &adm.neighbours[last] {
        seq.push(g);
        extend(adm, tri, m, seq, quota, out);
        seq.pop();
        if out.len() >= quota {
            return;
        }
    }
}

/// Cells not contained in another admissible cell (`F_j ⊆ F'_j` for all `j`).
pub fn maximal_cells(tri: &Triangulation, cells: &[BrokenLoopCell]) -> Vec<BrokenLoopCell> {
    let face_of = |c: &BrokenLoopCell, j: usize| &tri.faces[c.faces[j]].vertices;
    cells
        .par_iter()
        .filter(|c| {
            !cells.iter().any(|d| {
                d.dim > c.dim && (0..c.legs()).all(|j| is_subset(face_of(c, j), face_of(d, j)))
            })
        })
        .cloned()
        .collect()
}

/// Legs `p_{j-1} → p_j` that begin or end in a face of nonzero dimension.
pub fn legs_outside_skeleton(tri: &Triangulation, cell: &BrokenLoopCell) -> usize {
    let m = cell.legs();
    (0..m)
        .filter(|&j| {
            let (a, b) = (cell.faces[(j + m - 1) % m], cell.faces[j]);
            tri.faces[a].dim() > 0 || tri.faces[b].dim() > 0
        })
        .count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegBoundRow {
    pub dim: usize,
    pub cells: usize,
    pub max_legs: usize,
    pub bound: usize,
    pub pass: bool,
}

/// Per cell dimension `i`: the largest leg count off the 1-skeleton against `2i`.
pub fn leg_bound_report(tri: &Triangulation, cells: &[BrokenLoopCell]) -> Vec<LegBoundRow> {
    let mut rows: BTreeMap<usize, (usize, usize, bool)> = BTreeMap::new();
    for c in cells {
        let n = legs_outside_skeleton(tri, c);
        let e = rows.entry(c.dim).or_insert((0, 0, true));
        e.0 += 1;
        e.1 = e.1.max(n);
        e.2 &= n <= 2 * c.dim;
    }
    rows.into_iter()
        .map(|(dim, (cells, max_legs, pass))| LegBoundRow { dim, cells, max_legs, bound: 2 * dim, pass })
        .collect()
}

/// Tab-separated listing: one row per cell with its faces and leg count.
pub fn cells_tsv(tri: &Triangulation, cells: &[BrokenLoopCell]) -> String {
    let mut s = String::from("cell\tdim\tfaces\tlegs_outside\tbound\tpass\n");
    for (i, c) in cells.iter().enumerate() {
        let n = legs_outside_skeleton(tri, c);
        let _ = writeln!(s, "{i}\t{}\t{}\t{n}\t{}\t{}", c.dim, c.label(tri), 2 * c.dim, n <= 2 * c.dim);
    }
    s
}

/// Sequences at level `k` whose refinement is missing from level `k + 1`.
pub fn inclusion_failures(level_k: &[BrokenLoopCell], level_k1: &[BrokenLoopCell]) -> Vec<BrokenLoopCell> {
    let next: HashSet<&Vec<usize>> = level_k1.iter().map(|c| &c.faces).collect();
    level_k.iter().filter(|c| !next.contains(&c.refine().faces)).cloned().collect()
}

/// `κ = 2·K·d` with `d` the largest Euclidean diameter of a cover set.
pub fn kappa_estimate(tri: &Triangulation, cover: &[CoverSet], lipschitz: f64) -> Result<f64> {
    if cover.is_empty() {
        return Err(GromovError::EmptyCover);
    }
    if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
        return Err(GromovError::BadLipschitz(lipschitz));
    }
    let d = cover.iter().map(|c| cover_diameter(tri, c)).fold(0.0, f64::max);
    Ok(2.0 * lipschitz * d)
}

/// Diameter of the union of the simplices, attained at vertices.
pub fn cover_diameter(tri: &Triangulation, c: &CoverSet) -> f64 {
    let mut verts: Vec<usize> = c.simplices.iter().flat_map(|&s| tri.simplices[s].iter().copied()).collect();
    verts.sort_unstable();
    verts.dedup();
    let mut d: f64 = 0.0;
    for (i, &a) in verts.iter().enumerate() {
        for &b in &verts[i + 1..] {
            let dist = tri.coords[a].iter().zip(&tri.coords[b]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            d = d.max(dist);
        }
    }
    d
}

/// Boundary of the octahedron with vertices `±e_i`.
pub fn octahedron() -> Triangulation {
    let coords = vec![
        vec![1.0, 0.0, 0.0],
        vec![-1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, -1.0, 0.0],
        vec![0.0, 0.0, 1.0],
        vec![0.0, 0.0, -1.0],
    ];
    let mut simplices = Vec::new();
    for x in [0, 1] {
        for y in [2, 3] {
            for z in [4, 5] {
                simplices.push(vec![x, y, z]);
            }
        }
    }
    Triangulation::new(coords, simplices).expect("octahedron is a valid triangulation")
}
