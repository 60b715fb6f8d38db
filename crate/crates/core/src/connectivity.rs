//! Connectedness of sublevel sets `{z : Psi(z) <= eps}`.
//!
//! Two entry points. [`label_components`] is plain 8-connected flood fill on
//! an existing field. [`decide_connectedness`] answers the question for the
//! operator itself: it uses that `Psi` is 1-Lipschitz in `z` and that the
//! symbol moves by at most `L * pi / n` between sampled angles to build
//!
//! * a *cover*: grid cells that may meet the set. Every path inside the set
//!   stays in the cover, so anchors (sampled eigenvalues) in different cover
//!   components prove disconnection;
//! * a *sure graph*: nodes with `Psi <= eps` joined when their discs of radius
//!   `eps - Psi` overlap. Anchors in one sure component prove connection.
//!
//! When neither applies, cells on the cover boundary are split in four and
//! the test is repeated.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::field::{field_from_set, FieldEvaluator, GridSpec, PseudoField, Sequential, SymbolSchurSet};
use crate::operator::PeriodicJacobiOperator;

/// Nodes per side of the automatic grid.
pub const DEFAULT_GRID_NODES: usize = 400;
/// Upper limit on refinement rounds.
pub const MAX_REFINEMENTS: usize = 3;
/// Automatic grids are widened this many times when the set reaches the frame.
pub const MAX_GRID_EXPANSIONS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Connected,
    Disconnected,
    Indeterminate,
}

impl Verdict {
    pub fn name(&self) -> &'static str {
        match self {
            Verdict::Connected => "Connected",
            Verdict::Disconnected => "Disconnected",
            Verdict::Indeterminate => "Indeterminate",
        }
    }
}

/// Outcome of a connectivity query.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionReport {
    pub epsilon: f64,
    pub component_count: usize,
    /// Per node of `grid`, `0` outside; labels number components in
    /// row-major order of first appearance.
    pub labels: Vec<u32>,
    /// Node count per label, `component_sizes[l - 1]` for label `l`.
    pub component_sizes: Vec<usize>,
    /// Distance in `Psi` from `eps` to the nearest level where the grid
    /// picture changes: the node saddle between components when there are
    /// several, the level where the set last formed when there is one.
    pub boundary_margin: f64,
    /// Margin after the between-node and between-angle slack is charged;
    /// positive means the verdict holds for the sampled operator.
    pub certified_margin: f64,
    pub verdict: Verdict,
    pub refinement_level: usize,
    /// Empty sublevel set.
    pub vacuous: bool,
    pub touches_frame: bool,
    pub grid: GridSpec,
    /// Bound on `|Psi_continuous - Psi_sampled|` used by the cover; zero for
    /// plain labeling.
    pub theta_slack: f64,
    /// Field evaluations, including refinement nodes.
    pub nodes_evaluated: usize,
}

impl RegionReport {
    pub fn grid_spacing(&self) -> f64 {
        self.grid.spacing()
    }

    pub fn distinct_labels(&self) -> usize {
        let mut seen: Vec<u32> = self.labels.iter().copied().filter(|&l| l > 0).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// Grid used by [`decide_connectedness`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GridChoice {
    /// Bounding box of the sampled spectrum, padded, with `nx x ny` nodes.
    Auto { nx: usize, ny: usize },
    Fixed(GridSpec),
}

impl Default for GridChoice {
    fn default() -> Self {
        GridChoice::Auto {
            nx: DEFAULT_GRID_NODES,
            ny: DEFAULT_GRID_NODES,
        }
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::usage(format!("epsilon must be positive and finite, got {epsilon}")))
    }
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    /// Joins the sets; returns `(absorbed, kept)` roots, or `None` if already joined.
    fn union(&mut self, a: u32, b: u32) -> Option<(u32, u32)> {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return None;
        }
        let (small, big) = if self.size[ra as usize] < self.size[rb as usize] || (self.size[ra as usize] == self.size[rb as usize] && ra > rb) {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
        Some((small, big))
    }
}

#[derive(Clone, Copy)]
struct Edge {
    w: f64,
    u: u32,
    v: u32,
}

fn sort_edges(edges: &mut [Edge]) {
    edges.sort_unstable_by(|a, b| a.w.total_cmp(&b.w).then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v)));
}

fn half_diagonal(dx: f64, dy: f64) -> f64 {
    0.5 * dx.hypot(dy) * (1.0 + 1e-9)
}

/// 8-connected components of `{Psi <= eps}` on the field's nodes.
///
/// The margin comes from the merge tree of the field: with two or more
/// components it is the distance to the level where the first pair joins,
/// with one it is the distance down to the level where it last formed, and
/// for an empty set it is `min Psi - eps`. A multi-component answer whose
/// margin is below half a cell diagonal is `Indeterminate`, since the field
/// may dip that far between nodes.
pub fn label_components(field: &PseudoField, epsilon: f64) -> Result<RegionReport> {
    check_epsilon(epsilon)?;
    let g = field.grid;
    if field.psi.len() != g.len() || field.psi.is_empty() {
        return Err(Error::usage("field is empty or does not match its grid"));
    }
    let (nx, ny) = (g.nx, g.ny);
    let psi = &field.psi;
    let inside = |i: usize| psi[i] <= epsilon;

    let mut labels = vec![0u32; g.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..g.len() {
        if !inside(start) || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        let mut size = 0usize;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (ix, iy) = g.coords(i);
            for jy in iy.saturating_sub(1)..=(iy + 1).min(ny - 1) {
                for jx in ix.saturating_sub(1)..=(ix + 1).min(nx - 1) {
                    let j = g.index(jx, jy);
                    if labels[j] == 0 && inside(j) {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    let count = sizes.len();
    let touches_frame = (0..g.len()).any(|i| {
        let (ix, iy) = g.coords(i);
        labels[i] != 0 && g.on_frame(ix, iy)
    });

    let margin = merge_tree_margin(field, epsilon, count);
    let verdict = if touches_frame {
        Verdict::Indeterminate
    } else {
        match count {
            0 => Verdict::Disconnected,
            1 => Verdict::Connected,
            _ if margin < half_diagonal(g.dx(), g.dy()) => Verdict::Indeterminate,
            _ => Verdict::Disconnected,
        }
    };
    Ok(RegionReport {
        epsilon,
        component_count: count,
        labels,
        component_sizes: sizes,
        boundary_margin: margin,
        certified_margin: margin - half_diagonal(g.dx(), g.dy()),
        verdict,
        refinement_level: 0,
        vacuous: count == 0,
        touches_frame,
        grid: g,
        theta_slack: 0.0,
        nodes_evaluated: 0,
    })
}

fn merge_tree_margin(field: &PseudoField, epsilon: f64, count: usize) -> f64 {
    let psi = &field.psi;
    let min_psi = field.min();
    if count == 0 {
        return min_psi - epsilon;
    }
    let g = field.grid;
    let mut edges = Vec::with_capacity(4 * g.len());
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let u = g.index(ix, iy);
            let mut push = |jx: usize, jy: usize| {
                let v = g.index(jx, jy);
                edges.push(Edge {
                    w: psi[u].max(psi[v]),
                    u: u as u32,
                    v: v as u32,
                });
            };
            if ix + 1 < g.nx {
                push(ix + 1, iy);
            }
            if iy + 1 < g.ny {
                push(ix, iy + 1);
                if ix + 1 < g.nx {
                    push(ix + 1, iy + 1);
                }
                if ix > 0 {
                    push(ix - 1, iy + 1);
                }
            }
        }
    }
    sort_edges(&mut edges);
    let mut dsu = DisjointSet::new(g.len());
    let mut comp_min: Vec<f64> = psi.clone();
    let mut last_merge_below: Option<f64> = None;
    for e in edges {
        let (ru, rv) = (dsu.find(e.u), dsu.find(e.v));
        if ru == rv {
            continue;
        }
        let (mu, mv) = (comp_min[ru as usize], comp_min[rv as usize]);
        if e.w > epsilon && count >= 2 && mu <= epsilon && mv <= epsilon {
            return e.w - epsilon;
        }
        if e.w <= epsilon && mu < e.w && mv < e.w {
            last_merge_below = Some(e.w);
        }
        if e.w > epsilon && count == 1 {
            break;
        }
        let (_, kept) = dsu.union(ru, rv).expect("distinct roots");
        comp_min[kept as usize] = mu.min(mv);
    }
    match last_merge_below {
        Some(level) => epsilon - level,
        None => epsilon - min_psi,
    }
}

/// Automatic grid: bounding box of the sampled eigenvalues padded by
/// `expansion * (2 eps + 2 theta_slack)` plus 2% of the box size.
pub fn auto_grid(set: &SymbolSchurSet, epsilon: f64, nx: usize, ny: usize, expansion: f64) -> Result<GridSpec> {
    let (mut lo_re, mut hi_re, mut lo_im, mut hi_im) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for (_, l) in set.eigenvalues() {
        lo_re = lo_re.min(l.re);
        hi_re = hi_re.max(l.re);
        lo_im = lo_im.min(l.im);
        hi_im = hi_im.max(l.im);
    }
    let extent = (hi_re - lo_re).max(hi_im - lo_im).max(1e-6 * (1.0 + set.max_symbol_norm()));
    let pad = expansion * (2.0 * epsilon + 2.0 * theta_slack(set)) + 0.02 * extent;
    GridSpec::new(lo_re - pad, hi_re + pad, lo_im - pad, hi_im + pad, nx, ny)
}

/// `L * pi / n`: how far the symbol can move between neighbouring samples.
pub fn theta_slack(set: &SymbolSchurSet) -> f64 {
    set.lipschitz() * PI / set.theta_count() as f64
}

/// Decision plus the base field it was made on.
#[derive(Clone, Debug)]
pub struct Decision {
    pub report: RegionReport,
    pub field: PseudoField,
}

pub fn decide_connectedness(
    op: &PeriodicJacobiOperator,
    epsilon: f64,
    grid: GridChoice,
    theta_count: usize,
    max_refinements: usize,
) -> Result<RegionReport> {
    Ok(decide_connectedness_with(op, epsilon, grid, theta_count, max_refinements, &Sequential)?.report)
}

pub fn decide_connectedness_with(
    op: &PeriodicJacobiOperator,
    epsilon: f64,
    grid: GridChoice,
    theta_count: usize,
    max_refinements: usize,
    evaluator: &dyn FieldEvaluator,
) -> Result<Decision> {
    check_epsilon(epsilon)?;
    let set = SymbolSchurSet::new(op, theta_count)?;
    decide_on_set(&set, epsilon, grid, max_refinements, evaluator)
}

/// As [`decide_connectedness_with`] on precomputed symbol factors.
pub fn decide_on_set(
    set: &SymbolSchurSet,
    epsilon: f64,
    grid: GridChoice,
    max_refinements: usize,
    evaluator: &dyn FieldEvaluator,
) -> Result<Decision> {
    check_epsilon(epsilon)?;
    let max_refinements = max_refinements.min(MAX_REFINEMENTS);
    match grid {
        GridChoice::Fixed(g) => {
            g.validate()?;
            Ok(decide_on_grid(set, epsilon, g, max_refinements, evaluator))
        }
        GridChoice::Auto { nx, ny } => {
            let mut expansion = 1.0;
            let mut evaluated = 0;
            loop {
                let g = auto_grid(set, epsilon, nx, ny, expansion)?;
                let mut d = decide_on_grid(set, epsilon, g, max_refinements, evaluator);
                evaluated += d.report.nodes_evaluated;
                d.report.nodes_evaluated = evaluated;
                if !d.report.touches_frame || expansion >= (1 << MAX_GRID_EXPANSIONS) as f64 {
                    return Ok(d);
                }
                expansion *= 2.0;
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Leaf {
    x: i64,
    y: i64,
    size: i64,
}

impl Leaf {
    fn touches(&self, o: &Leaf) -> bool {
        self.x <= o.x + o.size && o.x <= self.x + self.size && self.y <= o.y + o.size && o.y <= self.y + self.size
    }
}

/// Quadtree over the base grid; coordinates are integers in units of the
/// finest cell.
struct Mesh {
    grid: GridSpec,
    scale: i64,
    psi: Vec<f64>,
    points: Vec<Complex64>,
    fine: BTreeMap<(i64, i64), u32>,
    leaves: Vec<Leaf>,
    cell_leaves: Vec<Vec<u32>>,
}

impl Mesh {
    fn new(grid: GridSpec, base: PseudoField, levels: usize) -> Self {
        let scale = 1i64 << levels;
        let (cx, cy) = (grid.nx - 1, grid.ny - 1);
        let mut leaves = Vec::with_capacity(cx * cy);
        let mut cell_leaves = Vec::with_capacity(cx * cy);
        for iy in 0..cy {
            for ix in 0..cx {
                cell_leaves.push(vec![leaves.len() as u32]);
                leaves.push(Leaf {
                    x: ix as i64 * scale,
                    y: iy as i64 * scale,
                    size: scale,
                });
            }
        }
        Mesh {
            points: grid.nodes(),
            grid,
            scale,
            psi: base.psi,
            fine: BTreeMap::new(),
            leaves,
            cell_leaves,
        }
    }

    fn base_len(&self) -> usize {
        self.grid.len()
    }

    fn extent(&self) -> (i64, i64) {
        ((self.grid.nx as i64 - 1) * self.scale, (self.grid.ny as i64 - 1) * self.scale)
    }

    fn point(&self, x: i64, y: i64) -> Complex64 {
        let s = self.scale;
        let g = &self.grid;
        let re = if x % s == 0 { g.re((x / s) as usize) } else { g.re_min + x as f64 * (g.dx() / s as f64) };
        let im = if y % s == 0 { g.im((y / s) as usize) } else { g.im_min + y as f64 * (g.dy() / s as f64) };
        Complex64::new(re, im)
    }

    fn node_id(&self, x: i64, y: i64) -> Option<u32> {
        let s = self.scale;
        if x % s == 0 && y % s == 0 {
            Some(self.grid.index((x / s) as usize, (y / s) as usize) as u32)
        } else {
            self.fine.get(&(x, y)).copied()
        }
    }

    fn corners(&self, l: &Leaf) -> [u32; 4] {
        let id = |x, y| self.node_id(x, y).expect("leaf corners are sampled");
        [id(l.x, l.y), id(l.x + l.size, l.y), id(l.x, l.y + l.size), id(l.x + l.size, l.y + l.size)]
    }

    fn rho(&self, size: i64) -> f64 {
        let f = size as f64 / self.scale as f64;
        half_diagonal(f * self.grid.dx(), f * self.grid.dy())
    }

    fn base_cell(&self, l: &Leaf) -> usize {
        let s = self.scale;
        (l.y / s) as usize * (self.grid.nx - 1) + (l.x / s) as usize
    }

    fn on_frame(&self, l: &Leaf) -> bool {
        let (xm, ym) = self.extent();
        l.x == 0 || l.y == 0 || l.x + l.size == xm || l.y + l.size == ym
    }

    /// Leaf containing `z`, if `z` is on the grid.
    fn locate(&self, z: Complex64) -> Option<u32> {
        let g = &self.grid;
        if !g.contains(z) {
            return None;
        }
        let s = self.scale as f64;
        let fx = (z.re - g.re_min) / g.dx() * s;
        let fy = (z.im - g.im_min) / g.dy() * s;
        let cx = ((fx / s).floor() as usize).min(g.nx - 2);
        let cy = ((fy / s).floor() as usize).min(g.ny - 2);
        let leaves = &self.cell_leaves[cy * (g.nx - 1) + cx];
        let dist = |l: &Leaf| {
            let dx = (l.x as f64 - fx).max(fx - (l.x + l.size) as f64).max(0.0);
            let dy = (l.y as f64 - fy).max(fy - (l.y + l.size) as f64).max(0.0);
            dx + dy
        };
        leaves
            .iter()
            .copied()
            .min_by(|&a, &b| dist(&self.leaves[a as usize]).total_cmp(&dist(&self.leaves[b as usize])))
    }

    /// Splits the given leaves in four; returns the number of new nodes.
    fn refine(&mut self, split: &[u32], set: &SymbolSchurSet, evaluator: &dyn FieldEvaluator) -> usize {
        let mut fresh: Vec<(i64, i64)> = Vec::new();
        for &li in split {
            let l = self.leaves[li as usize];
            let h = l.size / 2;
            for (x, y) in [(l.x + h, l.y), (l.x, l.y + h), (l.x + h, l.y + h), (l.x + l.size, l.y + h), (l.x + h, l.y + l.size)] {
                if self.node_id(x, y).is_none() {
                    let id = self.psi.len() as u32;
                    self.fine.insert((x, y), id);
                    self.psi.push(f64::NAN);
                    self.points.push(self.point(x, y));
                    fresh.push((x, y));
                }
            }
            let cell = self.base_cell(&l);
            self.cell_leaves[cell].retain(|&k| k != li);
            self.leaves[li as usize].size = h;
            self.cell_leaves[cell].push(li);
            for (x, y) in [(l.x + h, l.y), (l.x, l.y + h), (l.x + h, l.y + h)] {
                self.cell_leaves[cell].push(self.leaves.len() as u32);
                self.leaves.push(Leaf { x, y, size: h });
            }
        }
        fresh.sort_unstable_by_key(|&(x, y)| (y, x));
        let pts: Vec<Complex64> = fresh.iter().map(|&(x, y)| self.point(x, y)).collect();
        let values = evaluator.evaluate(set, &pts);
        for ((x, y), v) in fresh.iter().zip(values) {
            let id = self.fine[&(*x, *y)];
            self.psi[id as usize] = v;
        }
        let _ = self.base_len();
        fresh.len()
    }
}

struct CoverResult {
    lb: Vec<f64>,
    /// Root per leaf at the cover threshold.
    root: Vec<u32>,
    occupied_root: Vec<bool>,
    count: usize,
    /// Level where two occupied components first join above the threshold.
    merge_up: f64,
    /// Level where all anchors first share a component.
    join_all: f64,
    touches_frame: bool,
}

struct SureResult {
    count: usize,
    root: Vec<u32>,
    anchor_root: Vec<bool>,
    join_all: f64,
}

fn analyze_cover(mesh: &Mesh, anchor_leaves: &[u32], threshold: f64) -> CoverResult {
    let n = mesh.leaves.len();
    let mut lb: Vec<f64> = mesh
        .leaves
        .iter()
        .map(|l| {
            let c = mesh.corners(l);
            let m = c.iter().map(|&i| mesh.psi[i as usize]).fold(f64::INFINITY, f64::min);
            m - mesh.rho(l.size)
        })
        .collect();
    let mut occupied = vec![false; n];
    for &a in anchor_leaves {
        occupied[a as usize] = true;
        lb[a as usize] = lb[a as usize].min(0.0);
    }

    let (cx, cy) = (mesh.grid.nx - 1, mesh.grid.ny - 1);
    let mut edges = Vec::with_capacity(5 * n);
    for iy in 0..cy {
        for ix in 0..cx {
            let here = &mesh.cell_leaves[iy * cx + ix];
            for (i, &u) in here.iter().enumerate() {
                for &v in &here[i + 1..] {
                    if mesh.leaves[u as usize].touches(&mesh.leaves[v as usize]) {
                        edges.push(Edge { w: lb[u as usize].max(lb[v as usize]), u, v });
                    }
                }
            }
            let mut neighbours = [None; 4];
            if ix + 1 < cx {
                neighbours[0] = Some(iy * cx + ix + 1);
            }
            if iy + 1 < cy {
                neighbours[1] = Some((iy + 1) * cx + ix);
                if ix + 1 < cx {
                    neighbours[2] = Some((iy + 1) * cx + ix + 1);
                }
                if ix > 0 {
                    neighbours[3] = Some((iy + 1) * cx + ix - 1);
                }
            }
            for nb in neighbours.into_iter().flatten() {
                for &u in here {
                    for &v in &mesh.cell_leaves[nb] {
                        if mesh.leaves[u as usize].touches(&mesh.leaves[v as usize]) {
                            edges.push(Edge { w: lb[u as usize].max(lb[v as usize]), u, v });
                        }
                    }
                }
            }
        }
    }
    sort_edges(&mut edges);

    let mut dsu = DisjointSet::new(n);
    let mut occ = occupied.clone();
    let mut groups = occupied.iter().filter(|&&o| o).count();
    let mut snapshot: Option<(Vec<u32>, Vec<bool>, usize)> = None;
    let mut merge_up = f64::INFINITY;
    let mut join_all = if groups <= 1 { f64::NEG_INFINITY } else { f64::INFINITY };
    let take = |dsu: &mut DisjointSet, occ: &[bool], groups: usize| {
        let root: Vec<u32> = (0..n as u32).map(|i| dsu.find(i)).collect();
        (root, occ.to_vec(), groups)
    };
    for e in &edges {
        if e.w > threshold && snapshot.is_none() {
            snapshot = Some(take(&mut dsu, &occ, groups));
        }
        if let Some((absorbed, kept)) = dsu.union(e.u, e.v) {
            let both = occ[absorbed as usize] && occ[kept as usize];
            occ[kept as usize] |= occ[absorbed as usize];
            if both {
                groups -= 1;
                if e.w > threshold && merge_up.is_infinite() {
                    merge_up = e.w;
                }
                if groups == 1 {
                    join_all = e.w;
                }
            }
        }
        if snapshot.is_some() && groups <= 1 {
            break;
        }
    }
    let (root, occupied_root, count) = snapshot.unwrap_or_else(|| take(&mut dsu, &occ, groups));
    let touches_frame = mesh.leaves.iter().zip(&lb).any(|(l, &b)| b <= threshold && mesh.on_frame(l));
    CoverResult {
        lb,
        root,
        occupied_root,
        count,
        merge_up,
        join_all,
        touches_frame,
    }
}

fn analyze_sure(mesh: &Mesh, anchors: &[(usize, Complex64)], anchor_leaves: &[Option<u32>], anchor_psi: f64, epsilon: f64) -> SureResult {
    let base = mesh.psi.len();
    let n = base + anchors.len();
    let weight = |pa: f64, pb: f64, d: f64| pa.max(pb).max(0.5 * (pa + pb + d));
    let mut edges = Vec::with_capacity(6 * mesh.leaves.len());
    for l in &mesh.leaves {
        let c = mesh.corners(l);
        for i in 0..4 {
            for j in i + 1..4 {
                let (u, v) = (c[i] as usize, c[j] as usize);
                let d = (mesh.points[u] - mesh.points[v]).norm();
                edges.push(Edge {
                    w: weight(mesh.psi[u], mesh.psi[v], d),
                    u: u as u32,
                    v: v as u32,
                });
            }
        }
    }
    for (a, (&(_, z), leaf)) in anchors.iter().zip(anchor_leaves).enumerate() {
        if let Some(li) = leaf {
            for c in mesh.corners(&mesh.leaves[*li as usize]) {
                let d = (mesh.points[c as usize] - z).norm();
                edges.push(Edge {
                    w: weight(mesh.psi[c as usize], anchor_psi, d),
                    u: c,
                    v: (base + a) as u32,
                });
            }
        }
    }
    // eigenvalues at consecutive angles
    let theta_count = anchors.last().map_or(0, |a| a.0 + 1);
    let mut by_angle: Vec<Vec<usize>> = vec![Vec::new(); theta_count];
    for (a, &(k, _)) in anchors.iter().enumerate() {
        by_angle[k].push(a);
    }
    for k in 0..theta_count {
        let next = (k + 1) % theta_count;
        for &a in &by_angle[k] {
            for &b in &by_angle[next] {
                let d = (anchors[a].1 - anchors[b].1).norm();
                edges.push(Edge {
                    w: weight(anchor_psi, anchor_psi, d),
                    u: (base + a) as u32,
                    v: (base + b) as u32,
                });
            }
        }
    }
    sort_edges(&mut edges);

    let mut dsu = DisjointSet::new(n);
    let mut has_anchor = vec![false; n];
    has_anchor[base..].iter_mut().for_each(|h| *h = true);
    let mut groups = anchors.len();
    let mut at_eps: Option<(Vec<u32>, Vec<bool>, usize)> = None;
    let mut join_all = if groups <= 1 { f64::NEG_INFINITY } else { f64::INFINITY };
    for e in &edges {
        if e.w > epsilon && at_eps.is_none() {
            let root = (0..n as u32).map(|i| dsu.find(i)).collect();
            at_eps = Some((root, has_anchor.clone(), groups));
        }
        if let Some((absorbed, kept)) = dsu.union(e.u, e.v) {
            if has_anchor[absorbed as usize] && has_anchor[kept as usize] {
                groups -= 1;
                if groups == 1 {
                    join_all = e.w;
                }
            }
            has_anchor[kept as usize] |= has_anchor[absorbed as usize];
        }
        if at_eps.is_some() && groups <= 1 {
            break;
        }
    }
    let (root, anchor_root, count) = at_eps.unwrap_or_else(|| ((0..n as u32).map(|i| dsu.find(i)).collect(), has_anchor, groups));
    SureResult {
        count,
        root,
        anchor_root,
        join_all,
    }
}

/// Numbers roots by first appearance over base nodes in row-major order.
fn number_labels(grid: &GridSpec, node_root: &[Option<u32>]) -> (Vec<u32>, Vec<usize>) {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    let mut labels = vec![0u32; grid.len()];
    let mut sizes: Vec<usize> = Vec::new();
    for (i, r) in node_root.iter().enumerate() {
        if let Some(r) = r {
            let next = map.len() as u32 + 1;
            let l = *map.entry(*r).or_insert(next);
            if l as usize > sizes.len() {
                sizes.push(0);
            }
            sizes[l as usize - 1] += 1;
            labels[i] = l;
        }
    }
    (labels, sizes)
}

/// Lowest node level at which two cover components meet on the base grid.
fn node_saddle(mesh: &Mesh, anchors: &[(usize, Complex64)], located: &[Option<u32>], cover: &CoverResult) -> f64 {
    let g = &mesh.grid;
    let psi = &mesh.psi[..g.len()];
    let mut tag: Vec<Option<u32>> = vec![None; g.len()];
    for (&(_, z), leaf) in anchors.iter().zip(located) {
        if let (Some(li), Some((ix, iy))) = (leaf, g.nearest_node(z)) {
            tag[g.index(ix, iy)] = Some(cover.root[*li as usize]);
        }
    }
    let mut edges = Vec::with_capacity(4 * g.len());
    for iy in 0..g.ny {
        for ix in 0..g.nx {
            let u = g.index(ix, iy);
            let mut push = |jx: usize, jy: usize| {
                let v = g.index(jx, jy);
                edges.push(Edge { w: psi[u].max(psi[v]), u: u as u32, v: v as u32 });
            };
            if ix + 1 < g.nx {
                push(ix + 1, iy);
            }
            if iy + 1 < g.ny {
                push(ix, iy + 1);
                if ix + 1 < g.nx {
                    push(ix + 1, iy + 1);
                }
                if ix > 0 {
                    push(ix - 1, iy + 1);
                }
            }
        }
    }
    sort_edges(&mut edges);
    let mut dsu = DisjointSet::new(g.len());
    for e in edges {
        let (ru, rv) = (dsu.find(e.u), dsu.find(e.v));
        if ru == rv {
            continue;
        }
        let (tu, tv) = (tag[ru as usize], tag[rv as usize]);
        if let (Some(a), Some(b)) = (tu, tv) {
            if a != b {
                return e.w;
            }
        }
        let (_, kept) = dsu.union(ru, rv).expect("distinct roots");
        tag[kept as usize] = tu.or(tv);
    }
    f64::INFINITY
}

fn decide_on_grid(set: &SymbolSchurSet, epsilon: f64, grid: GridSpec, max_refinements: usize, evaluator: &dyn FieldEvaluator) -> Decision {
    let field = field_from_set(set, &grid, evaluator);
    let mut evaluated = grid.len();
    let mut mesh = Mesh::new(grid, field.clone(), max_refinements);
    let delta = theta_slack(set);
    let threshold = epsilon + delta;
    let anchor_psi = 1e-12 * (1.0 + set.max_symbol_norm());
    let anchors: Vec<(usize, Complex64)> = set.eigenvalues().collect();
    let mut level = 0;
    loop {
        let located: Vec<Option<u32>> = anchors.iter().map(|&(_, z)| mesh.locate(z)).collect();
        let outside = located.iter().any(Option::is_none);
        let inside: Vec<u32> = located.iter().flatten().copied().collect();
        let cover = analyze_cover(&mesh, &inside, threshold);
        let frame = cover.touches_frame || outside;

        let cover_labels = || {
            let mut node_root: Vec<Option<u32>> = vec![None; grid.len()];
            for (li, l) in mesh.leaves.iter().enumerate() {
                let r = cover.root[li];
                if cover.lb[li] <= threshold && cover.occupied_root[r as usize] {
                    for c in mesh.corners(l) {
                        if (c as usize) < grid.len() && node_root[c as usize].is_none() {
                            node_root[c as usize] = Some(r);
                        }
                    }
                }
            }
            number_labels(&grid, &node_root)
        };

        let report = |verdict, count, (margin, certified), (labels, sizes): (Vec<u32>, Vec<usize>)| RegionReport {
            epsilon,
            component_count: count,
            labels,
            component_sizes: sizes,
            boundary_margin: margin,
            certified_margin: certified,
            verdict,
            refinement_level: level,
            vacuous: false,
            touches_frame: frame,
            grid,
            theta_slack: delta,
            nodes_evaluated: evaluated,
        };

        if cover.count >= 2 {
            let verdict = if frame { Verdict::Indeterminate } else { Verdict::Disconnected };
            let saddle = node_saddle(&mesh, &anchors, &located, &cover) - epsilon;
            let r = report(verdict, cover.count, (saddle, cover.merge_up - threshold), cover_labels());
            return Decision { report: r, field };
        }

        let sure = analyze_sure(&mesh, &anchors, &located, anchor_psi, epsilon);
        if sure.count <= 1 && epsilon >= delta {
            let verdict = if frame { Verdict::Indeterminate } else { Verdict::Connected };
            let m = epsilon - sure.join_all.max(delta);
            let r = report(verdict, 1, (m, m), cover_labels());
            return Decision { report: r, field };
        }

        let margin = (sure.join_all - epsilon).min(threshold - cover.join_all).max(0.0);
        if level >= max_refinements || frame || epsilon < delta {
            let mut node_root: Vec<Option<u32>> = vec![None; grid.len()];
            for (i, slot) in node_root.iter_mut().enumerate() {
                let r = sure.root[i];
                if mesh.psi[i] <= epsilon && sure.anchor_root[r as usize] {
                    *slot = Some(r);
                }
            }
            let r = report(Verdict::Indeterminate, sure.count, (margin, -margin), number_labels(&grid, &node_root));
            return Decision { report: r, field };
        }

        // split cover cells that are not entirely inside the set
        let mut candidates: Vec<(f64, u32)> = Vec::new();
        for (li, l) in mesh.leaves.iter().enumerate() {
            if l.size < 2 || cover.lb[li] > threshold {
                continue;
            }
            let c = mesh.corners(l);
            let lo = c.iter().map(|&i| mesh.psi[i as usize]).fold(f64::INFINITY, f64::min);
            let hi = c.iter().map(|&i| mesh.psi[i as usize]).fold(f64::NEG_INFINITY, f64::max);
            if hi > epsilon {
                candidates.push((lo, li as u32));
            }
        }
        if candidates.is_empty() {
            level = max_refinements;
            continue;
        }
        candidates.sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        candidates.truncate((grid.len() / 3).max(1));
        let split: Vec<u32> = candidates.into_iter().map(|c| c.1).collect();
        evaluated += mesh.refine(&split, set, evaluator);
        level += 1;
    }
}
