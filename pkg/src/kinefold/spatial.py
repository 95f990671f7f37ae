"""Uniform-grid spatial hash and cut-off neighbor tables.

Atom centers are bucketed on a cubic grid whose cell edge is chosen so
the bucket count tracks the atom count (~alpha * n cells).  A neighbor
query gathers every bucket whose center lies within
``d_cut + sqrt(3) * cell`` of the query cell center; the extra cell
diagonal covers the worst-case offset between atom and cell centers, so
the gathered set is a strict superset of the true cut-off neighborhood.
Exact distance filtering happens at use time, which keeps downstream
force sums identical to their brute-force definitions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError

SQRT3 = float(np.sqrt(3.0))


@dataclass(frozen=True)
class Cutoffs:
    elec: float = 9.0
    vdw: float = 5.0
    cav: float = 8.0

    def __post_init__(self):
        if min(self.elec, self.vdw, self.cav) <= 0:
            raise ConfigurationError("cutoff distances must be positive")

    def largest(self) -> float:
        return max(self.elec, self.vdw, self.cav)


@dataclass(frozen=True)
class GridConfig:
    alpha: float = 1.0
    min_cell: float = 1.0  # floors the cell edge for degenerate tiny systems
    cutoffs: Cutoffs = field(default_factory=Cutoffs)

    def __post_init__(self):
        if self.alpha <= 0:
            raise ConfigurationError("alpha must be positive")


@dataclass
class HashGrid:
    cell_size: float
    r_min: np.ndarray
    r_max: np.ndarray
    dims: np.ndarray                  # cells per axis
    cell_index: np.ndarray            # (n, 3) integer cell of each atom
    _occupied: np.ndarray = field(repr=False)      # sorted linear ids
    _starts: np.ndarray = field(repr=False)        # CSR starts into _atom_order
    _atom_order: np.ndarray = field(repr=False)    # atoms sorted by cell id
    positions: np.ndarray = field(repr=False)

    @property
    def n_atoms(self) -> int:
        return len(self._atom_order)

    def linear_ids(self, cells: np.ndarray) -> np.ndarray:
        d = self.dims
        return (cells[..., 0] * d[1] + cells[..., 1]) * d[2] + cells[..., 2]

    @property
    def buckets(self) -> dict[tuple[int, int, int], np.ndarray]:
        """Occupied cells -> atom-index arrays (for inspection and tests)."""
        out = {}
        for k in range(len(self._occupied)):
            members = self._atom_order[self._starts[k] : self._starts[k + 1]]
            lin = int(self._occupied[k])
            z = lin % self.dims[2]
            y = (lin // self.dims[2]) % self.dims[1]
            x = lin // (self.dims[1] * self.dims[2])
            out[(int(x), int(y), int(z))] = members
        return out


def build_grid(positions: np.ndarray, config: GridConfig = GridConfig()) -> HashGrid:
    positions = np.asarray(positions, float)
    if positions.ndim != 2 or positions.shape[1] != 3 or len(positions) < 1:
        raise ConfigurationError("positions must be a non-empty (n, 3) array")
    if not np.isfinite(positions).all():
        raise ConfigurationError("non-finite coordinates cannot be hashed")
    n = len(positions)
    r_min = positions.min(axis=0)
    r_max = positions.max(axis=0)
    extent = r_max - r_min
    v_bb = float(np.prod(extent))
    cell = (v_bb / (config.alpha * n)) ** (1.0 / 3.0) if v_bb > 0 else 0.0
    cell = max(cell, config.min_cell)
    dims = np.maximum(np.ceil(extent / cell).astype(np.int64), 1)
    cells = np.floor((positions - r_min) / cell).astype(np.int64)
    np.clip(cells, 0, dims - 1, out=cells)  # atoms exactly on the max face
    lin = (cells[:, 0] * dims[1] + cells[:, 1]) * dims[2] + cells[:, 2]
    order = np.argsort(lin, kind="stable")
    sorted_lin = lin[order]
    occupied, starts = np.unique(sorted_lin, return_index=True)
    starts = np.append(starts, n)
    return HashGrid(
        cell_size=float(cell),
        r_min=r_min,
        r_max=r_max,
        dims=dims,
        cell_index=cells,
        _occupied=occupied,
        _starts=starts,
        _atom_order=order,
        positions=positions,
    )


@dataclass
class NeighborTable:
    """Per-atom superset neighbor lists (sorted, self excluded)."""

    d_cut: float
    offsets: np.ndarray    # CSR offsets, length n+1
    neighbors: np.ndarray  # concatenated neighbor indices

    @property
    def n_atoms(self) -> int:
        return len(self.offsets) - 1

    def list_of(self, i: int) -> np.ndarray:
        return self.neighbors[self.offsets[i] : self.offsets[i + 1]]

    def lists(self) -> list[np.ndarray]:
        return [self.list_of(i) for i in range(self.n_atoms)]

    def pairs(self) -> tuple[np.ndarray, np.ndarray]:
        """Unordered candidate pairs (i < j), each once."""
        i = np.repeat(np.arange(self.n_atoms), np.diff(self.offsets))
        j = self.neighbors
        keep = j > i
        return i[keep], j[keep]


def _stencil(cell: float, d_cut: float) -> np.ndarray:
    """Integer cell offsets whose centers lie within d_cut + sqrt(3)*cell."""
    r_c = d_cut + SQRT3 * cell
    reach = int(np.floor(r_c / cell))
    rng = np.arange(-reach, reach + 1)
    ox, oy, oz = np.meshgrid(rng, rng, rng, indexing="ij")
    offs = np.stack([ox.ravel(), oy.ravel(), oz.ravel()], axis=1)
    keep = (offs.astype(float) ** 2).sum(axis=1) * cell * cell <= r_c * r_c
    return offs[keep]


def _segment_arange(lengths: np.ndarray) -> np.ndarray:
    """[0..l0-1, 0..l1-1, ...] for consecutive segment lengths."""
    total = int(lengths.sum())
    if total == 0:
        return np.empty(0, np.int64)
    ends = np.cumsum(lengths)
    return np.arange(total, dtype=np.int64) - np.repeat(ends - lengths, lengths)


def build_neighbor_table(grid: HashGrid, d_cut: float) -> NeighborTable:
    """Superset neighbor lists for one cut-off; expected O(n) overall."""
    if d_cut <= 0:
        raise ConfigurationError("cutoff must be positive")
    n = grid.n_atoms
    offs = _stencil(grid.cell_size, d_cut)
    # offsets larger than the grid box can never land inside it
    offs = offs[(np.abs(offs) < grid.dims).all(axis=1)]
    occ = grid._occupied
    n_occ = len(occ)
    d1, d2_, = int(grid.dims[1]), int(grid.dims[2])
    oz = occ % d2_
    oy = (occ // d2_) % d1
    ox = occ // (d1 * d2_)

    # in-box candidates, checked per axis; linear arithmetic is then exact
    inside = (
        ((ox[:, None] + offs[None, :, 0]) >= 0)
        & ((ox[:, None] + offs[None, :, 0]) < grid.dims[0])
        & ((oy[:, None] + offs[None, :, 1]) >= 0)
        & ((oy[:, None] + offs[None, :, 1]) < d1)
        & ((oz[:, None] + offs[None, :, 2]) >= 0)
        & ((oz[:, None] + offs[None, :, 2]) < d2_)
    )
    src_cell, off_idx = np.nonzero(inside)  # row-major: sorted by src_cell
    off_lin = (offs[:, 0] * d1 + offs[:, 1]) * d2_ + offs[:, 2]
    cand_lin = occ[src_cell] + off_lin[off_idx]
    hit_pos = np.searchsorted(occ, cand_lin)
    hit_pos = np.minimum(hit_pos, n_occ - 1)
    found = occ[hit_pos] == cand_lin
    src_cell = src_cell[found]
    dst_cell = hit_pos[found]

    starts = grid._starts
    counts = starts[1:] - starts[:-1]
    atom_order = grid._atom_order

    # flat gather: members of every found destination cell, grouped by source
    dst_len = counts[dst_cell]
    flat_gather = atom_order[np.repeat(starts[dst_cell], dst_len) + _segment_arange(dst_len)]
    gather_per_src = np.bincount(src_cell, weights=dst_len, minlength=n_occ).astype(np.int64)
    # sort each source segment so per-atom rows come out ascending
    seg_id = np.repeat(np.arange(n_occ), gather_per_src)
    flat_gather = flat_gather[np.lexsort((flat_gather, seg_id))]

    # every atom of a source cell sees that cell's gathered segment
    row_len = np.repeat(gather_per_src, counts)            # per atom, self included
    seg_begin = np.concatenate(([0], np.cumsum(gather_per_src)))
    row_begin = np.repeat(seg_begin[:-1], counts)
    entries_j = flat_gather[np.repeat(row_begin, row_len) + _segment_arange(row_len)]
    entries_i = np.repeat(atom_order, row_len)
    keep = entries_j != entries_i                          # drop self
    entries_i = entries_i[keep]
    entries_j = entries_j[keep]

    # rows are grouped by atom_order; re-key CSR by atom index
    lengths = np.zeros(n, np.int64)
    lengths[atom_order] = row_len - 1
    offsets = np.zeros(n + 1, np.int64)
    np.cumsum(lengths, out=offsets[1:])
    flat = np.empty(len(entries_j), np.int64)
    # scatter each row into its final slot
    row_starts_src = np.concatenate(([0], np.cumsum(row_len - 1)))
    dest_index = np.repeat(
        offsets[atom_order] - row_starts_src[:-1], row_len - 1
    ) + np.arange(len(entries_j), dtype=np.int64)
    flat[dest_index] = entries_j
    return NeighborTable(d_cut=float(d_cut), offsets=offsets, neighbors=flat)


def filtered_pairs(
    table: NeighborTable, positions: np.ndarray, d_cut: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Exact cut-off pairs (i < j) from the superset table, with distances."""
    i, j = table.pairs()
    diff = positions[i] - positions[j]
    d2 = np.einsum("ij,ij->i", diff, diff)
    keep = d2 <= d_cut * d_cut
    return i[keep], j[keep], np.sqrt(d2[keep])


def filtered_lists(
    table: NeighborTable, positions: np.ndarray, d_cut: float
) -> list[np.ndarray]:
    """Per-atom exact cut-off neighbor lists, sorted ascending."""
    n = table.n_atoms
    i = np.repeat(np.arange(n), np.diff(table.offsets))
    j = table.neighbors
    diff = positions[i] - positions[j]
    d2 = np.einsum("ij,ij->i", diff, diff)
    keep = d2 <= d_cut * d_cut
    i, j = i[keep], j[keep]
    out = []
    bounds = np.searchsorted(i, np.arange(n + 1))
    for a in range(n):
        out.append(np.sort(j[bounds[a] : bounds[a + 1]]))
    return out


def brute_force_pairs(
    positions: np.ndarray, d_cut: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All-pairs cut-off scan (no hashing); the benchmarking baseline."""
    positions = np.asarray(positions, float)
    n = len(positions)
    iu, ju = np.triu_indices(n, k=1)
    diff = positions[iu] - positions[ju]
    d2 = np.einsum("ij,ij->i", diff, diff)
    keep = d2 <= d_cut * d_cut
    return iu[keep], ju[keep], np.sqrt(d2[keep])
