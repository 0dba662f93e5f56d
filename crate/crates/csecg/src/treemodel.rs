//! Connected-subtree sparsity model over the wavelet detail subbands.
//!
//! Detail coefficients of subbands `d2..dL` form a forest of binary trees:
//! the roots live in `dL` (coarsest detail scale) and each node of `dj`
//! (`j > 2`) has two children one scale finer, at `d(j-1)`. Subband `d1`
//! carries almost no ECG energy and is excluded from the selectable node set
//! entirely. A valid model support is a parent-closed subset of this forest
//! plus, always, every scaling coefficient in `aL`.
//!
//! [`tree_approx`] computes the best approximation under this model: it keeps
//! all of `aL` and the parent-closed detail set of a given size with maximal
//! retained energy, found exactly by dynamic programming over the forest.
//! [`brute_force_subtree`] is an independent enumeration oracle for small
//! instances, used by the tests to gate that exactness.

use crate::error::{Error, Result};
use crate::wavelet::{self, WaveletCoeffs};

const BRUTE_FORCE_LIMIT: usize = 24;

/// Parent/child indexing of the selectable detail coefficients.
#[derive(Debug, Clone)]
pub struct TreeIndex {
    n: usize,
    levels: usize,
    parent: Vec<Option<usize>>,
    children: Vec<Option<[usize; 2]>>,
    selectable: Vec<usize>,
    selectable_mask: Vec<bool>,
    roots: Vec<usize>,
}

impl TreeIndex {
    /// Builds the tree relation for an `n`-point, `levels`-deep layout.
    pub fn new(n: usize, levels: usize) -> Result<Self> {
        // Reuse the wavelet-side validation of (n, levels).
        let _ = WaveletCoeffs::zeros(n, levels)?;
        let mut parent = vec![None; n];
        let mut children = vec![None; n];
        let mut selectable = Vec::new();
        let mut selectable_mask = vec![false; n];
        let mut roots = Vec::new();
        for j in 2..=levels {
            let range = wavelet::detail_range(n, j);
            for i in 0..range.len() {
                let idx = range.start + i;
                selectable.push(idx);
                selectable_mask[idx] = true;
                if j < levels {
                    parent[idx] = Some(wavelet::detail_range(n, j + 1).start + i / 2);
                } else {
                    roots.push(idx);
                }
                if j > 2 {
                    let finer = wavelet::detail_range(n, j - 1);
                    children[idx] = Some([finer.start + 2 * i, finer.start + 2 * i + 1]);
                }
            }
        }
        selectable.sort_unstable();
        Ok(Self {
            n,
            levels,
            parent,
            children,
            selectable,
            selectable_mask,
            roots,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Linear indices of all selectable nodes (subbands `d2..dL`), ascending.
    pub fn selectable(&self) -> &[usize] {
        &self.selectable
    }

    pub fn selectable_count(&self) -> usize {
        self.selectable.len()
    }

    /// Root nodes (the `dL` subband), ascending.
    pub fn roots(&self) -> &[usize] {
        &self.roots
    }

    pub fn is_selectable(&self, idx: usize) -> bool {
        idx < self.n && self.selectable_mask[idx]
    }

    /// Parent of a selectable node; `None` for roots and non-selectable indices.
    pub fn parent_of(&self, idx: usize) -> Option<usize> {
        self.parent.get(idx).copied().flatten()
    }

    /// Children of a selectable node; `None` for leaves (the `d2` subband).
    pub fn children_of(&self, idx: usize) -> Option<[usize; 2]> {
        self.children.get(idx).copied().flatten()
    }
}

/// Coefficient support split into scaling (`aL`) and detail parts.
///
/// Model projections always return the full scaling range plus a
/// parent-closed detail set; supports harvested from arbitrary vectors (for
/// the plain greedy algorithms) carry no such guarantee.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SupportSet {
    scaling: Vec<usize>,
    detail: Vec<usize>,
}

impl SupportSet {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Builds a support from raw indices, partitioning them against the
    /// scaling range of an `(n, levels)` layout.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I, n: usize, levels: usize) -> Self {
        let scaling_range = wavelet::scaling_range(n, levels);
        let mut scaling = Vec::new();
        let mut detail = Vec::new();
        for idx in indices {
            if scaling_range.contains(&idx) {
                scaling.push(idx);
            } else {
                detail.push(idx);
            }
        }
        scaling.sort_unstable();
        scaling.dedup();
        detail.sort_unstable();
        detail.dedup();
        Self { scaling, detail }
    }

    /// Support of the nonzero entries of a coefficient vector.
    pub fn from_nonzeros(coeffs: &WaveletCoeffs) -> Self {
        let indices = coeffs
            .data()
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i);
        Self::from_indices(indices, coeffs.len(), coeffs.levels())
    }

    /// The full scaling range plus the given detail indices.
    pub fn with_full_scaling(detail: Vec<usize>, n: usize, levels: usize) -> Self {
        let mut s = Self::from_indices(detail, n, levels);
        s.scaling = wavelet::scaling_range(n, levels).collect();
        s
    }

    pub fn scaling(&self) -> &[usize] {
        &self.scaling
    }

    pub fn detail(&self) -> &[usize] {
        &self.detail
    }

    pub fn len(&self) -> usize {
        self.scaling.len() + self.detail.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scaling.is_empty() && self.detail.is_empty()
    }

    /// All member indices in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        // Detail indices always precede the scaling range numerically.
        self.detail.iter().chain(self.scaling.iter()).copied()
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.detail.binary_search(&idx).is_ok() || self.scaling.binary_search(&idx).is_ok()
    }

    pub fn union(&self, other: &SupportSet) -> SupportSet {
        let merge = |a: &[usize], b: &[usize]| {
            let mut v: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        SupportSet {
            scaling: merge(&self.scaling, &other.scaling),
            detail: merge(&self.detail, &other.detail),
        }
    }

    /// Size of the intersection with another support.
    pub fn intersection_len(&self, other: &SupportSet) -> usize {
        self.iter().filter(|&i| other.contains(i)).count()
    }

    /// True when every detail member is selectable and its parent chain is in
    /// the set.
    pub fn is_parent_closed(&self, tree: &TreeIndex) -> bool {
        self.detail.iter().all(|&idx| {
            tree.is_selectable(idx)
                && tree
                    .parent_of(idx)
                    .is_none_or(|p| self.detail.binary_search(&p).is_ok())
        })
    }

    /// True when any detail member falls in the `d1` subband.
    pub fn intersects_d1(&self, n: usize) -> bool {
        let d1 = wavelet::detail_range(n, 1);
        self.detail.iter().any(|idx| d1.contains(idx))
    }
}

/// Sums `values[i]^2` over `indices` in ascending order; both the projection
/// and the brute-force oracle report energy through this one path so equal
/// supports give bit-identical energies.
pub fn retained_energy(values: &[f64], indices: &[usize]) -> f64 {
    indices.iter().map(|&i| values[i] * values[i]).sum()
}

/// Grow-only bitset over selectable-node slots.
#[derive(Debug, Clone, Default)]
struct NodeSet {
    words: Vec<u64>,
}

impl NodeSet {
    fn with_capacity(bits: usize) -> Self {
        Self {
            words: vec![0; bits.div_ceil(64)],
        }
    }

    fn insert(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    fn union_with(&mut self, other: &NodeSet) {
        for (w, o) in self.words.iter_mut().zip(&other.words) {
            *w |= o;
        }
    }

    fn iter_bits(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter(move |b| w >> b & 1 == 1).map(move |b| wi * 64 + b)
        })
    }
}

/// One (energy, selection) cell of the size-indexed table.
#[derive(Debug, Clone)]
struct Cell {
    energy: f64,
    set: NodeSet,
}

/// Size-indexed table: `cells[k]` is the best selection of exactly `k` nodes,
/// `None` when that size is unreachable.
type Table = Vec<Option<Cell>>;

fn knapsack_merge(acc: &Table, child: &Table, cap: usize) -> Table {
    let mut out: Table = vec![None; cap + 1];
    for (ka, a) in acc.iter().enumerate() {
        let Some(a) = a else { continue };
        for (kc, c) in child.iter().enumerate() {
            let Some(c) = c else { continue };
            let k = ka + kc;
            if k > cap {
                break;
            }
            let energy = a.energy + c.energy;
            // Strict improvement only: the first candidate in canonical child
            // order wins ties, keeping output deterministic.
            if out[k].as_ref().is_none_or(|cur| energy > cur.energy) {
                let mut set = a.set.clone();
                set.union_with(&c.set);
                out[k] = Some(Cell { energy, set });
            }
        }
    }
    out
}

/// Best parent-closed selections within the subtree rooted at `node`, for
/// every size from 0 to the subtree size (capped at `cap`).
fn subtree_table(
    node: usize,
    tree: &TreeIndex,
    weights: &[f64],
    slot_of: &[usize],
    cap: usize,
) -> Table {
    let nbits = tree.selectable_count();
    let mut inner: Table = vec![None; 1];
    inner[0] = Some(Cell {
        energy: 0.0,
        set: NodeSet::with_capacity(nbits),
    });
    if let Some(kids) = tree.children_of(node) {
        for kid in kids {
            let child = subtree_table(kid, tree, weights, slot_of, cap.saturating_sub(1));
            inner = knapsack_merge(&inner, &child, cap.saturating_sub(1));
        }
    }
    // Shift by one: any nonempty selection must include `node` itself.
    let mut out: Table = vec![None; (inner.len() + 1).min(cap + 1)];
    out[0] = Some(Cell {
        energy: 0.0,
        set: NodeSet::with_capacity(nbits),
    });
    for (k, cell) in inner.into_iter().enumerate() {
        let Some(cell) = cell else { continue };
        if k + 1 >= out.len() {
            break;
        }
        let mut set = cell.set;
        set.insert(slot_of[node]);
        out[k + 1] = Some(Cell {
            energy: cell.energy + weights[node] * weights[node],
            set,
        });
    }
    out
}

/// Exact maximum-energy parent-closed detail set of size `k_detail`.
fn best_detail_set(s: &WaveletCoeffs, tree: &TreeIndex, k_detail: usize) -> Result<Vec<usize>> {
    let selectable = tree.selectable_count();
    if k_detail > selectable {
        return Err(Error::DetailBudgetTooLarge {
            k_detail,
            selectable,
        });
    }
    let mut slot_of = vec![usize::MAX; s.len()];
    for (slot, &idx) in tree.selectable().iter().enumerate() {
        slot_of[idx] = slot;
    }
    let mut acc: Table = vec![None; k_detail + 1];
    acc[0] = Some(Cell {
        energy: 0.0,
        set: NodeSet::with_capacity(selectable),
    });
    for &root in tree.roots() {
        let table = subtree_table(root, tree, s.data(), &slot_of, k_detail);
        acc = knapsack_merge(&acc, &table, k_detail);
    }
    let cell = acc[k_detail]
        .as_ref()
        .expect("forest holds at least k_detail nodes");
    let mut detail: Vec<usize> = cell.iter_bits_to_indices(tree);
    detail.sort_unstable();
    Ok(detail)
}

impl Cell {
    fn iter_bits_to_indices(&self, tree: &TreeIndex) -> Vec<usize> {
        self.set
            .iter_bits()
            .map(|slot| tree.selectable()[slot])
            .collect()
    }
}

/// Best model approximation: keeps every scaling coefficient and the exact
/// maximum-energy parent-closed detail set of size `k_detail`, zeroing the
/// rest.
pub fn tree_approx(s: &WaveletCoeffs, k_detail: usize) -> Result<(WaveletCoeffs, SupportSet)> {
    let tree = TreeIndex::new(s.len(), s.levels())?;
    tree_approx_with(s, &tree, k_detail)
}

/// [`tree_approx`] against a prebuilt [`TreeIndex`].
pub fn tree_approx_with(
    s: &WaveletCoeffs,
    tree: &TreeIndex,
    k_detail: usize,
) -> Result<(WaveletCoeffs, SupportSet)> {
    debug_assert_eq!(tree.n(), s.len());
    let detail = best_detail_set(s, tree, k_detail)?;
    let support = SupportSet::with_full_scaling(detail, s.len(), s.levels());
    let mut out = WaveletCoeffs::zeros(s.len(), s.levels())?;
    for idx in support.iter() {
        out.data_mut()[idx] = s.data()[idx];
    }
    Ok((out, support))
}

/// Signal-domain projection: transform, tree-approximate, transform back.
pub fn tree_approx_signal(
    x: &[f64],
    levels: usize,
    k_detail: usize,
) -> Result<(Vec<f64>, SupportSet)> {
    let coeffs = wavelet::dwt(x, levels)?;
    let (approx, support) = tree_approx(&coeffs, k_detail)?;
    Ok((wavelet::idwt(&approx), support))
}

/// Test oracle: exhaustive enumeration of all parent-closed detail sets of
/// size `k_detail`. Exponential in the selectable count, so refuses large
/// instances.
pub fn brute_force_subtree(s: &WaveletCoeffs, k_detail: usize) -> Result<SupportSet> {
    let tree = TreeIndex::new(s.len(), s.levels())?;
    let selectable = tree.selectable_count();
    if selectable > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge {
            selectable,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    if k_detail > selectable {
        return Err(Error::DetailBudgetTooLarge {
            k_detail,
            selectable,
        });
    }
    // Parent slot per selectable node, usize::MAX for roots.
    let parent_slot: Vec<usize> = tree
        .selectable()
        .iter()
        .map(|&idx| match tree.parent_of(idx) {
            Some(p) => tree.selectable().binary_search(&p).unwrap(),
            None => usize::MAX,
        })
        .collect();
    let mut best: Option<(f64, u32)> = None;
    for mask in 0u32..1 << selectable {
        if mask.count_ones() as usize != k_detail {
            continue;
        }
        let closed = (0..selectable)
            .filter(|&slot| mask >> slot & 1 == 1)
            .all(|slot| parent_slot[slot] == usize::MAX || mask >> parent_slot[slot] & 1 == 1);
        if !closed {
            continue;
        }
        let indices: Vec<usize> = (0..selectable)
            .filter(|&slot| mask >> slot & 1 == 1)
            .map(|slot| tree.selectable()[slot])
            .collect();
        let energy = retained_energy(s.data(), &indices);
        if best.as_ref().is_none_or(|(e, _)| energy > *e) {
            best = Some((energy, mask));
        }
    }
    let (_, mask) = best.expect("at least one parent-closed set of this size exists");
    let detail: Vec<usize> = (0..selectable)
        .filter(|&slot| mask >> slot & 1 == 1)
        .map(|slot| tree.selectable()[slot])
        .collect();
    Ok(SupportSet::with_full_scaling(detail, s.len(), s.levels()))
}
