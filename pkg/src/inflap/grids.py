"""Domains, space-time cylinders, parabolic boundaries, sampled fields.

A spatial domain (interval, box, or ball) is discretized on a uniform
lattice of spacing h.  Interior nodes carry the unknowns; the surrounding
ring of lattice points (box faces, or the first layer of points failing
the ball mask rule) carries prescribed data.  For balls the ring points
store a *projected* sample position on the sphere, and stencil distances
to ring neighbors use the projected geometry (Shortley-Weller style,
clamped away from zero).

The cylinder keeps time levels t_j = j T/(L-1) spanning [0, T].  Node-level
pairs are classified once into {initial, lateral, interior}; the parabolic
boundary P_T consists of the initial slab plus the lateral entries with
t < T (the t = T lateral slab is stored but is not part of P_T, matching
the half-open lateral boundary).
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "Domain",
    "CylinderGrid",
    "GridField",
    "BoundaryData",
    "Classification",
    "GridConfigError",
    "DataError",
    "build_grid",
    "classify_parabolic_boundary",
    "sample_boundary_data",
    "grid_to_json",
    "field_to_csv",
]

INTERIOR, INITIAL, LATERAL = 0, 1, 2


class GridConfigError(ValueError):
    """Degenerate or inconsistent grid configuration."""


class DataError(ValueError):
    """Boundary data violating positivity or continuity requirements."""


@dataclass(frozen=True)
class Domain:
    """Spatial region: interval [a,b], axis-aligned box, or ball.

    bounds: interval/box -> tuple of (min, max) per axis;
            ball -> (center tuple, radius).
    """

    kind: str
    bounds: tuple
    dim: int

    @staticmethod
    def interval(a, b):
        if not b > a:
            raise GridConfigError("interval requires b > a")
        return Domain("interval", ((float(a), float(b)),), 1)

    @staticmethod
    def box(bounds):
        bounds = tuple((float(a), float(b)) for a, b in bounds)
        for a, b in bounds:
            if not b > a:
                raise GridConfigError("box requires max > min on every axis")
        return Domain("box", bounds, len(bounds))

    @staticmethod
    def ball(center, radius):
        center = tuple(float(c) for c in np.atleast_1d(center))
        if not radius > 0:
            raise GridConfigError("ball requires R > 0")
        return Domain("ball", (center, float(radius)), len(center))

    # -- geometry predicates (vectorized over points of shape (..., dim)) --

    def contains(self, x):
        """Strict interior membership."""
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            c, R = self.bounds
            return np.linalg.norm(x - np.asarray(c), axis=-1) < R
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.all((x > lo) & (x < hi), axis=-1)

    def in_closure(self, x, tol=1e-12):
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            c, R = self.bounds
            return np.linalg.norm(x - np.asarray(c), axis=-1) <= R * (1 + tol) + tol
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        span = np.max(hi - lo)
        return np.all((x >= lo - tol * span) & (x <= hi + tol * span), axis=-1)

    def on_boundary(self, x, tol=1e-9):
        return self.in_closure(x, tol) & ~self.contains(x)

    def project_to_boundary(self, x):
        """Nearest boundary representative used for data sampling."""
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            c, R = self.bounds
            c = np.asarray(c)
            d = x - c
            nrm = np.linalg.norm(d, axis=-1, keepdims=True)
            nrm = np.where(nrm == 0, 1.0, nrm)
            return c + R * d / nrm
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.clip(x, lo, hi)

    def diameter(self):
        if self.kind == "ball":
            return 2.0 * self.bounds[1]
        return float(np.linalg.norm([b[1] - b[0] for b in self.bounds]))

    def boundary_distance(self, x):
        """Distance from interior points to the boundary."""
        x = np.asarray(x, dtype=float)
        if self.kind == "ball":
            c, R = self.bounds
            return R - np.linalg.norm(x - np.asarray(c), axis=-1)
        lo = np.array([b[0] for b in self.bounds])
        hi = np.array([b[1] for b in self.bounds])
        return np.min(np.minimum(x - lo, hi - x), axis=-1)


def _stencil_offsets(dim):
    offs = [z for z in itertools.product((-1, 0, 1), repeat=dim) if any(z)]
    return np.array(offs, dtype=int)


@dataclass
class CylinderGrid:
    """Uniform lattice discretization of Omega x [0, T].

    Read-only after construction; safe to share across workers.  Boundary
    ("ring") nodes carry prescribed values at their projected sample
    positions; every interior node has a full 3^n - 1 stencil whose entries
    are interior or ring nodes.
    """

    domain: Domain
    h: float
    T: float
    time_levels: int
    pos: np.ndarray           # (N, n) lattice coordinates
    sample_pos: np.ndarray    # (N, n) positions where data/fields live
    interior_mask: np.ndarray  # (N,) bool
    nbr_index: np.ndarray     # (Ni, K) node indices per canonical offset
    nbr_dist: np.ndarray      # (Ni, K) stencil distances
    offsets: np.ndarray       # (K, n) canonical offsets
    t: np.ndarray             # (L,) time levels, t[0]=0, t[-1]=T

    @property
    def n_nodes(self):
        return self.pos.shape[0]

    @property
    def dim(self):
        return self.pos.shape[1]

    @property
    def interior_idx(self):
        return np.flatnonzero(self.interior_mask)

    @property
    def boundary_idx(self):
        return np.flatnonzero(~self.interior_mask)

    @property
    def dt_level(self):
        return self.t[1] - self.t[0]

    def offset_column(self, offset):
        """Column index in the neighbor table of a canonical offset."""
        key = tuple(int(v) for v in offset)
        return self._offset_lookup[key]

    def __post_init__(self):
        self._offset_lookup = {
            tuple(int(v) for v in off): k for k, off in enumerate(self.offsets)
        }


@dataclass
class Classification:
    """Partition of node x level pairs into {interior, initial, lateral}."""

    codes: np.ndarray    # (N, L) uint8
    pt_mask: np.ndarray  # (N, L) bool: membership in P_T

    @property
    def counts(self):
        return {
            "interior": int(np.sum(self.codes == INTERIOR)),
            "initial": int(np.sum(self.codes == INITIAL)),
            "lateral": int(np.sum(self.codes == LATERAL)),
        }


def build_grid(domain, h, T, time_levels, min_interior_per_axis=3):
    """Discretize domain x [0, T] on a uniform lattice of spacing h.

    Raises GridConfigError for degenerate grids (fewer than
    ``min_interior_per_axis`` interior nodes along some axis; pass a smaller
    value deliberately for toy grids).
    """
    if h <= 0 or T <= 0:
        raise GridConfigError("h and T must be positive")
    if time_levels < 2:
        raise GridConfigError("need at least 2 time levels")
    n = domain.dim
    offsets = _stencil_offsets(n)

    if domain.kind in ("interval", "box"):
        counts = []
        axes = []
        for a, b in domain.bounds:
            steps = (b - a) / h
            m = round(steps)
            if abs(steps - m) > 1e-6 * max(1.0, abs(steps)):
                raise GridConfigError(
                    f"spacing {h} does not tile [{a}, {b}] evenly"
                )
            counts.append(m)
            axes.append(a + h * np.arange(m + 1))
        if min(counts) - 1 < min_interior_per_axis:
            raise GridConfigError(
                f"degenerate grid: {min(counts) - 1} interior nodes per axis, "
                f"need {min_interior_per_axis}"
            )
        mesh = np.meshgrid(*axes, indexing="ij")
        pos = np.stack([m.ravel() for m in mesh], axis=-1)
        ipt = np.stack(
            [g.ravel() for g in np.meshgrid(*[np.arange(c + 1) for c in counts],
                                            indexing="ij")], axis=-1)
        interior = np.all((ipt > 0) & (ipt < np.array(counts)), axis=-1)
        sample_pos = pos.copy()
        index_of = {tuple(z): i for i, z in enumerate(map(tuple, ipt))}
        lattice_int = ipt
    else:  # ball
        c, R = domain.bounds
        if 2.0 * R / h < min_interior_per_axis + 1:
            raise GridConfigError(
                f"degenerate ball grid: 2R/h = {2 * R / h:.3g} too small"
            )
        K = int(np.ceil(R / h)) + 1
        rng = np.arange(-K, K + 1)
        mesh = np.meshgrid(*([rng] * n), indexing="ij")
        lat = np.stack([m.ravel() for m in mesh], axis=-1)
        xyz = np.asarray(c) + h * lat
        r = np.linalg.norm(xyz - np.asarray(c), axis=-1)
        inside = r < R * (1 - 1e-12)
        closure = r <= R * (1 + 1e-12)
        index_all = {tuple(z): i for i, z in enumerate(map(tuple, lat))}
        interior_all = inside.copy()
        for k, z in enumerate(map(tuple, lat)):
            if not inside[k]:
                interior_all[k] = False
                continue
            ok = True
            for ax in range(n):
                for sgn in (-1, 1):
                    zz = list(z)
                    zz[ax] += sgn
                    j = index_all.get(tuple(zz))
                    if j is None or not closure[j]:
                        ok = False
                        break
                if not ok:
                    break
            interior_all[k] = ok
        # ring = non-interior lattice points adjacent (full stencil) to interior
        ring = np.zeros(lat.shape[0], dtype=bool)
        for k, z in enumerate(map(tuple, lat)):
            if not interior_all[k]:
                continue
            for off in offsets:
                j = index_all.get(tuple(np.array(z) + off))
                if j is not None and not interior_all[j]:
                    ring[j] = True
        keep = interior_all | ring
        lattice_int = lat[keep]
        pos = xyz[keep]
        interior = interior_all[keep]
        sample_pos = pos.copy()
        proj = domain.project_to_boundary(pos[~interior])
        sample_pos[~interior] = proj
        index_of = {tuple(z): i for i, z in enumerate(map(tuple, lattice_int))}

    if not np.any(interior):
        raise GridConfigError("grid has no interior nodes")

    # neighbor table for interior nodes
    int_ids = np.flatnonzero(interior)
    Kst = offsets.shape[0]
    nbr_index = np.empty((int_ids.size, Kst), dtype=np.int64)
    nbr_dist = np.empty((int_ids.size, Kst), dtype=float)
    lat_dist = h * np.linalg.norm(offsets, axis=-1)
    for row, i in enumerate(int_ids):
        z = lattice_int[i]
        for k, off in enumerate(offsets):
            j = index_of.get(tuple(z + off))
            if j is None:
                raise GridConfigError(
                    "internal error: interior node with incomplete stencil"
                )
            nbr_index[row, k] = j
            if interior[j]:
                nbr_dist[row, k] = lat_dist[k]
            else:
                d = float(np.linalg.norm(sample_pos[j] - pos[i]))
                nbr_dist[row, k] = min(max(d, 0.4 * h), 1.5 * lat_dist[k])

    t = np.linspace(0.0, T, time_levels)
    return CylinderGrid(
        domain=domain, h=float(h), T=float(T), time_levels=int(time_levels),
        pos=pos, sample_pos=sample_pos, interior_mask=interior,
        nbr_index=nbr_index, nbr_dist=nbr_dist, offsets=offsets, t=t,
    )


def classify_parabolic_boundary(grid):
    """Partition node x level pairs and mark P_T membership.

    Level 0 is the initial slab for every spatial node (corner nodes on
    the lateral boundary at t=0 count once, as initial).  Ring nodes at
    levels >= 1 are lateral; the lateral entries with t = T are excluded
    from P_T because the lateral boundary is half-open in time.
    """
    N, L = grid.n_nodes, grid.time_levels
    codes = np.full((N, L), INTERIOR, dtype=np.uint8)
    codes[:, 0] = INITIAL
    codes[~grid.interior_mask, 1:] = LATERAL
    pt = np.zeros((N, L), dtype=bool)
    pt[:, 0] = True
    before_T = grid.t < grid.T * (1.0 - 1e-12)
    pt[~grid.interior_mask, :] |= before_T[None, :]
    return Classification(codes=codes, pt_mask=pt)


@dataclass
class GridField:
    """Scalar samples on a cylinder grid: values[node, level].

    variable_tag records whether the samples are the solution phi itself
    or its logarithm eta; the transforms module converts between the two.
    """

    grid: CylinderGrid
    values: np.ndarray
    variable_tag: str = "phi"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        expect = (self.grid.n_nodes, self.grid.time_levels)
        if self.values.shape != expect:
            raise ValueError(f"field shape {self.values.shape} != {expect}")
        if self.variable_tag not in ("phi", "eta"):
            raise ValueError("variable_tag must be 'phi' or 'eta'")

    @staticmethod
    def from_function(grid, fn, variable_tag="phi"):
        """Sample fn(points, t) -> (N,) on every time level."""
        vals = np.empty((grid.n_nodes, grid.time_levels))
        for j, tj in enumerate(grid.t):
            vals[:, j] = fn(grid.sample_pos, tj)
        return GridField(grid, vals, variable_tag)

    def copy(self):
        return GridField(self.grid, self.values.copy(), self.variable_tag,
                         dict(self.meta))

    def interior(self):
        """Values at interior nodes, all levels: shape (Ni, L)."""
        return self.values[self.grid.interior_mask]

    def pt_values(self, classification=None):
        cls = classification or classify_parabolic_boundary(self.grid)
        return self.values[cls.pt_mask]


@dataclass
class BoundaryData:
    """Continuous data h on P_T: f(x) at t=0, g(x,t) on the lateral boundary.

    ``f`` maps (N, n) points to (N,) values; ``g`` maps ((N, n), t) to (N,).
    m and M are filled in by sample_boundary_data.
    """

    f: Callable
    g: Callable
    zero_lateral_ok: bool = False
    name: str = "custom"
    params: dict = field(default_factory=dict)
    m: Optional[float] = None
    M: Optional[float] = None

    def h_on(self, points, tval):
        """The combined datum h at lateral points and time tval."""
        if tval == 0.0:
            return np.asarray(self.f(points), dtype=float)
        return np.asarray(self.g(points, tval), dtype=float)


def sample_boundary_data(bd, grid, continuity_tol=1e-6):
    """Sample h on P_T; returns a GridField that is NaN off P_T.

    Records m = inf and M = sup of the samples on bd.  Raises DataError if
    any sample is nonpositive (zero allowed when bd.zero_lateral_ok) or if
    f and g disagree at the lateral boundary at t = 0.
    """
    cls = classify_parabolic_boundary(grid)
    vals = np.full((grid.n_nodes, grid.time_levels), np.nan)
    vals[:, 0] = bd.f(grid.sample_pos)
    bidx = grid.boundary_idx
    bpts = grid.sample_pos[bidx]
    for j in range(1, grid.time_levels):
        vals[bidx, j] = bd.g(bpts, grid.t[j])
    samples = vals[cls.pt_mask]
    m = float(np.min(samples))
    M = float(np.max(samples))
    floor_ok = 0.0 if bd.zero_lateral_ok else np.finfo(float).tiny
    if m < floor_ok:
        raise DataError(
            f"boundary data must be positive on P_T (min sample {m:.3g})"
            + ("" if bd.zero_lateral_ok else
               "; pass zero_lateral_ok for decay experiments")
        )
    g0 = bd.g(bpts, 0.0)
    f0 = bd.f(bpts)
    gap = float(np.max(np.abs(g0 - f0))) if bidx.size else 0.0
    if gap > continuity_tol * max(1.0, abs(M)):
        raise DataError(
            f"f and g disagree at the corner (gap {gap:.3g}); "
            "data must be continuous on P_T"
        )
    bd.m, bd.M = m, M
    out = GridField(grid, vals, "phi", meta={"m": m, "M": M,
                                             "restricted_to": "P_T"})
    return out


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def grid_to_json(grid, path=None):
    """JSON description: domain, spacing, time axis, nodes, classification."""
    dom = grid.domain
    desc = {
        "domain": {"kind": dom.kind, "bounds": dom.bounds, "dim": dom.dim},
        "h": grid.h,
        "T": grid.T,
        "time_levels": grid.time_levels,
        "nodes": [
            {
                "pos": [float(v) for v in grid.pos[i]],
                "sample_pos": [float(v) for v in grid.sample_pos[i]],
                "interior": bool(grid.interior_mask[i]),
            }
            for i in range(grid.n_nodes)
        ],
    }
    if path is not None:
        with open(path, "w") as fh:
            json.dump(desc, fh, indent=1, sort_keys=True)
    return desc


def field_to_csv(fld, path, skip_nan=True):
    """CSV rows (x..., t, value) for every stored sample."""
    grid = fld.grid
    n = grid.dim
    with open(path, "w") as fh:
        fh.write(",".join(f"x{i}" for i in range(n)) + ",t,value\n")
        for j, tj in enumerate(grid.t):
            col = fld.values[:, j]
            for i in range(grid.n_nodes):
                v = col[i]
                if skip_nan and np.isnan(v):
                    continue
                coords = ",".join(f"{c:.17g}" for c in grid.sample_pos[i])
                fh.write(f"{coords},{tj:.17g},{v:.17g}\n")
