//! Lattice discretisation of planar domains: rasterisation, the exact
//! Euclidean distance to the complement, the 5-point Dirichlet Laplacian and
//! boundary strips.
//!
//! Lattice points sit at `origin + (i h, j h)`. A point belongs to the mask when
//! it lies strictly inside the domain, so the unit square at `h = 1/64` has
//! `63 × 63` unknowns. Points outside the raster count as outside.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::spectra::{DomainSpec, Shape};

#[derive(Debug, Clone, PartialEq)]
pub struct GridMask {
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
    /// Coordinates of lattice point `(0, 0)`.
    pub origin: [f64; 2],
    /// Row-major, `j * nx + i`.
    pub inside: Vec<bool>,
    /// Distance to the nearest outside lattice point; zero outside.
    pub distance: Vec<f64>,
    /// Raster index of each unknown, in raster order.
    pub cells: Vec<usize>,
}

impl GridMask {
    /// Builds a mask from a raster and computes its distance field.
    pub fn from_raster(nx: usize, ny: usize, h: f64, origin: [f64; 2], inside: Vec<bool>) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        if inside.len() != nx * ny {
            return Err(Error::InvalidInput(format!(
                "raster has {} entries, expected {}",
                inside.len(),
                nx * ny
            )));
        }
        let cells: Vec<usize> = (0..nx * ny).filter(|&k| inside[k]).collect();
        if cells.is_empty() {
            return Err(Error::DegenerateDomain("mask has no inside points".into()));
        }
        let distance = distance_field(nx, ny, h, &inside);
        Ok(Self {
            h,
            nx,
            ny,
            origin,
            inside,
            distance,
            cells,
        })
    }

    pub fn count(&self) -> usize {
        self.cells.len()
    }

    /// Lattice measure `count · h²`.
    pub fn measure(&self) -> f64 {
        self.cells.len() as f64 * self.h * self.h
    }

    /// Total length of lattice edges joining an inside point to an outside one.
    pub fn lattice_perimeter(&self) -> f64 {
        let mut edges = 0usize;
        for &k in &self.cells {
            let (i, j) = (k % self.nx, k / self.nx);
            for (di, dj) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                if !self.is_inside(i as i64 + di, j as i64 + dj) {
                    edges += 1;
                }
            }
        }
        edges as f64 * self.h
    }

    pub fn inradius(&self) -> f64 {
        self.distance.iter().cloned().fold(0.0, f64::max)
    }

    pub fn is_inside(&self, i: i64, j: i64) -> bool {
        i >= 0
            && j >= 0
            && (i as usize) < self.nx
            && (j as usize) < self.ny
            && self.inside[j as usize * self.nx + i as usize]
    }

    /// Physical coordinates of raster point `k`.
    pub fn point(&self, k: usize) -> [f64; 2] {
        [
            self.origin[0] + (k % self.nx) as f64 * self.h,
            self.origin[1] + (k / self.nx) as f64 * self.h,
        ]
    }

    /// Distance to the complement of each unknown.
    pub fn unknown_distances(&self) -> Vec<f64> {
        self.cells.iter().map(|&k| self.distance[k]).collect()
    }

    /// Plain-text form: `nx ny h`, then `ny` rows of `0`/`1`, row `j = 0` first.
    pub fn to_text(&self) -> String {
        let mut s = format!("{} {} {}\n", self.nx, self.ny, self.h);
        for j in 0..self.ny {
            for i in 0..self.nx {
                s.push(if self.inside[j * self.nx + i] { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty mask file".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!("bad mask header '{header}'")));
        }
        let bad = |what: &str| Error::InvalidInput(format!("bad mask header field {what}"));
        let nx: usize = parts[0].parse().map_err(|_| bad("nx"))?;
        let ny: usize = parts[1].parse().map_err(|_| bad("ny"))?;
        let h: f64 = parts[2].parse().map_err(|_| bad("h"))?;
        let mut inside = Vec::with_capacity(nx * ny);
        for row in 0..ny {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidInput(format!("mask file ends at row {row}")))?
                .trim();
            if line.len() != nx {
                return Err(Error::InvalidInput(format!(
                    "mask row {row} has {} characters, expected {nx}",
                    line.len()
                )));
            }
            for c in line.chars() {
                match c {
                    '1' => inside.push(true),
                    '0' => inside.push(false),
                    _ => return Err(Error::InvalidInput(format!("bad mask character '{c}'"))),
                }
            }
        }
        GridMask::from_raster(nx, ny, h, [0.0, 0.0], inside)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Exact Euclidean distance transform (two 1D lower-envelope passes), scaled by `h`.
fn distance_field(nx: usize, ny: usize, h: f64, inside: &[bool]) -> Vec<f64> {
    // pad by one so the raster border sees the outside
    let (px, py) = (nx + 2, ny + 2);
    let big = 1e20;
    let mut f = vec![0.0; px * py];
    for j in 0..ny {
        for i in 0..nx {
            if inside[j * nx + i] {
                f[(j + 1) * px + i + 1] = big;
            }
        }
    }
    let mut buf_in = vec![0.0; px.max(py)];
    let mut buf_out = vec![0.0; px.max(py)];
    for i in 0..px {
        for j in 0..py {
            buf_in[j] = f[j * px + i];
        }
        edt_1d(&buf_in[..py], &mut buf_out[..py]);
        for j in 0..py {
            f[j * px + i] = buf_out[j];
        }
    }
    for j in 0..py {
        buf_in[..px].copy_from_slice(&f[j * px..(j + 1) * px]);
        edt_1d(&buf_in[..px], &mut buf_out[..px]);
        f[j * px..(j + 1) * px].copy_from_slice(&buf_out[..px]);
    }
    let mut out = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            if inside[j * nx + i] {
                out[j * nx + i] = f[(j + 1) * px + i + 1].sqrt() * h;
            }
        }
    }
    out
}

fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates everywhere
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
            }
            break;
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *out = dq * dq + f[p];
    }
}

/// Rasterises a planar domain at spacing `h`.
pub fn rasterize(domain: &DomainSpec, h: f64) -> Result<GridMask> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
    }
    match &domain.shape {
        Shape::Box { lengths } if lengths.len() == 2 => {
            let (nx, ny) = (steps(lengths[0], h) + 1, steps(lengths[1], h) + 1);
            let tol = 1e-9 * h;
            raster_by(nx, ny, h, [0.0, 0.0], |x, y| {
                x > tol && x < lengths[0] - tol && y > tol && y < lengths[1] - tol
            })
        }
        Shape::Disk { radius } => {
            let n = steps(2.0 * radius, h) + 1;
            let r2 = radius * radius * (1.0 - 1e-12);
            raster_by(n, n, h, [-radius, -radius], |x, y| x * x + y * y < r2)
        }
        Shape::Polygon { vertices } => rasterize_polygon(vertices, h),
        Shape::Mask { mask, .. } => Ok((**mask).clone()),
        _ => Err(Error::InvalidInput(
            "only 2D boxes, disks, polygons and masks can be rasterised".into(),
        )),
    }
}

fn steps(extent: f64, h: f64) -> usize {
    let r = extent / h;
    let n = r.round();
    if (r - n).abs() < 1e-9 * r.max(1.0) {
        n as usize
    } else {
        r.ceil() as usize
    }
}

fn raster_by(
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    member: impl Fn(f64, f64) -> bool,
) -> Result<GridMask> {
    let mut inside = vec![false; nx * ny];
    for j in 0..ny {
        let y = origin[1] + j as f64 * h;
        for i in 0..nx {
            inside[j * nx + i] = member(origin[0] + i as f64 * h, y);
        }
    }
    GridMask::from_raster(nx, ny, h, origin, inside)
}

/// Rasterises a simple polygon; points on an edge are outside.
pub fn rasterize_polygon(vertices: &[[f64; 2]], h: f64) -> Result<GridMask> {
    validate_polygon(vertices)?;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for v in vertices {
        for c in 0..2 {
            lo[c] = lo[c].min(v[c]);
            hi[c] = hi[c].max(v[c]);
        }
    }
    let nx = steps(hi[0] - lo[0], h) + 1;
    let ny = steps(hi[1] - lo[1], h) + 1;
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let tol = 1e-9 * h.min(scale);
    raster_by(nx, ny, h, lo, |x, y| {
        point_in_polygon(vertices, x, y) && edge_distance(vertices, x, y) > tol
    })
}

fn point_in_polygon(v: &[[f64; 2]], x: f64, y: f64) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (v[i][0], v[i][1]);
        let (xj, yj) = (v[j][0], v[j][1]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

fn edge_distance(v: &[[f64; 2]], x: f64, y: f64) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| segment_distance(v[i], v[(i + 1) % n], [x, y]))
        .fold(f64::INFINITY, f64::min)
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    ((a[0] + t * dx - p[0]).powi(2) + (a[1] + t * dy - p[1]).powi(2)).sqrt()
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

fn segments_intersect(p1: [f64; 2], p2: [f64; 2], q1: [f64; 2], q2: [f64; 2]) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// Checks that the vertex list describes a simple polygon with positive area.
pub fn validate_polygon(v: &[[f64; 2]]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return Err(Error::InvalidPolygon(format!("{n} vertices, need at least 3")));
    }
    if v.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
        return Err(Error::InvalidPolygon("non-finite vertex".into()));
    }
    for i in 0..n {
        if v[i] == v[(i + 1) % n] {
            return Err(Error::InvalidPolygon(format!("zero-length edge at vertex {i}")));
        }
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 1..n {
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // shared vertex only: reject if the edges fold back onto each other
                let (shared, p, q) = if j == i + 1 { (b, a, d) } else { (a, b, c) };
                if orient(shared, p, q) == 0.0 {
                    let dot = (p[0] - shared[0]) * (q[0] - shared[0]) + (p[1] - shared[1]) * (q[1] - shared[1]);
                    if dot > 0.0 {
                        return Err(Error::InvalidPolygon(format!("edges {i} and {j} overlap")));
                    }
                }
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Err(Error::InvalidPolygon(format!("edges {i} and {j} intersect")));
            }
        }
    }
    let area2: f64 = (0..n).map(|i| orient([0.0, 0.0], v[i], v[(i + 1) % n])).sum();
    if area2 == 0.0 {
        return Err(Error::InvalidPolygon("zero area".into()));
    }
    Ok(())
}

/// Reads a polygon file: one `x y` pair per line, `#` starts a comment.
pub fn read_polygon(path: &Path) -> Result<Vec<[f64; 2]>> {
    parse_polygon(&fs::read_to_string(path)?)
}

pub fn parse_polygon(text: &str) -> Result<Vec<[f64; 2]>> {
    let mut out = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::InvalidInput(format!("polygon line {}: '{line}'", ln + 1)))?;
        if nums.len() != 2 {
            return Err(Error::InvalidInput(format!("polygon line {}: expected 'x y'", ln + 1)));
        }
        out.push([nums[0], nums[1]]);
    }
    validate_polygon(&out)?;
    Ok(out)
}

/// Symmetric sparse matrix in compressed-row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub dimension: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
    pub symmetric: bool,
    /// Lattice coordinates of each unknown, when the operator comes from a mask.
    pub coords: Option<Vec<[u32; 2]>>,
}

impl SparseOperator {
    /// Builds from per-row `(column, value)` lists; columns are sorted.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let dimension = rows.len();
        let mut row_ptr = Vec::with_capacity(dimension + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_by_key(|e| e.0);
            for (c, v) in r {
                col_idx.push(c);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        let mut op = Self {
            dimension,
            row_ptr,
            col_idx,
            values,
            symmetric: false,
            coords: None,
        };
        op.symmetric = op.is_symmetric();
        op
    }

    pub fn from_dense(a: &[Vec<f64>]) -> Self {
        Self::from_rows(
            a.iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|(_, v)| **v != 0.0)
                        .map(|(j, v)| (j, *v))
                        .collect()
                })
                .collect(),
        )
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_rows(d.iter().enumerate().map(|(i, &v)| vec![(i, v)]).collect())
    }

    /// `tridiag(-1, 2, -1) / h²` of size `n`.
    pub fn tridiagonal(n: usize, h: f64) -> Self {
        let s = 1.0 / (h * h);
        Self::from_rows(
            (0..n)
                .map(|i| {
                    let mut r = vec![(i, 2.0 * s)];
                    if i > 0 {
                        r.push((i - 1, -s));
                    }
                    if i + 1 < n {
                        r.push((i + 1, -s));
                    }
                    r
                })
                .collect(),
        )
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().cloned().zip(self.values[r].iter().cloned())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.row(i).find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            *yi = s;
        }
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.dimension).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.dimension]; self.dimension];
        for (i, row) in a.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        a
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dimension).map(|i| self.get(i, i)).collect()
    }
}

/// 5-point Dirichlet Laplacian on the unknowns of `mask`, in raster order.
pub fn assemble_dirichlet(mask: &GridMask) -> SparseOperator {
    let n = mask.count();
    let mut index = vec![usize::MAX; mask.nx * mask.ny];
    for (u, &k) in mask.cells.iter().enumerate() {
        index[k] = u;
    }
    let s = 1.0 / (mask.h * mask.h);
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(5 * n);
    let mut values = Vec::with_capacity(5 * n);
    let mut coords = Vec::with_capacity(n);
    row_ptr.push(0);
    for (u, &k) in mask.cells.iter().enumerate() {
        let (i, j) = ((k % mask.nx) as i64, (k / mask.nx) as i64);
        coords.push([i as u32, j as u32]);
        // raster order of neighbours gives sorted columns
        for (di, dj) in [(0i64, -1i64), (-1, 0), (0, 0), (1, 0), (0, 1)] {
            if di == 0 && dj == 0 {
                col_idx.push(u);
                values.push(4.0 * s);
            } else if mask.is_inside(i + di, j + dj) {
                col_idx.push(index[((j + dj) as usize) * mask.nx + (i + di) as usize]);
                values.push(-s);
            }
        }
        row_ptr.push(col_idx.len());
    }
    SparseOperator {
        dimension: n,
        row_ptr,
        col_idx,
        values,
        symmetric: true,
        coords: Some(coords),
    }
}

/// Unknowns within distance `eps` of the complement.
#[derive(Debug, Clone, PartialEq)]
pub struct StripSet {
    pub indices: Vec<usize>,
    pub measure: f64,
}

pub fn strip_cells(mask: &GridMask, eps: f64) -> Result<StripSet> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
    }
    let indices: Vec<usize> = mask
        .cells
        .iter()
        .enumerate()
        .filter(|(_, &k)| mask.distance[k] <= eps * (1.0 + 1e-12))
        .map(|(u, _)| u)
        .collect();
    if indices.is_empty() {
        return Err(Error::Resolution(format!(
            "strip of width {eps} contains no grid points at h = {}",
            mask.h
        )));
    }
    let measure = indices.len() as f64 * mask.h * mask.h;
    Ok(StripSet { indices, measure })
}
