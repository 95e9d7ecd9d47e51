"""Link robustness classes, strategic neighborhoods and greedy packing of independent tetrads."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .covariates import CovariateSpec
from .equilibrium import SimDraw, base_index
from .model import Theta


@dataclass(frozen=True)
class SurplusBounds:
    v_sup: float
    v_inf: float

    def __post_init__(self):
        if self.v_inf > self.v_sup:
            raise ValueError("v_inf exceeds v_sup")


def _box_arrays(gamma: np.ndarray, box) -> tuple[np.ndarray, np.ndarray]:
    """Per-component (lower, upper) arrays; a scalar bound b means [-b, b]."""
    if np.isscalar(box):
        hi = np.full(gamma.size, float(box))
        return -hi, hi
    box = np.asarray(box, dtype=float)
    if box.ndim == 1 and box.size == 2 and gamma.size == 1:
        return box[:1], box[1:]
    if box.shape != (gamma.size, 2):
        raise ValueError("box must be a scalar, a (lo, hi) pair or one pair per gamma component")
    return box[:, 0], box[:, 1]


def surplus_range(gamma, box) -> tuple[float, float]:
    """Max and min of x'gamma over the box; extremes sit at vertices."""
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))
    if gamma.size == 0:
        return 0.0, 0.0
    lo, hi = _box_arrays(gamma, box)
    top = np.where(gamma > 0, gamma * hi, gamma * lo).sum()
    bottom = np.where(gamma > 0, gamma * lo, gamma * hi).sum()
    return float(top), float(bottom)


def surplus_bounds(z_dyad, theta: Theta, a_i: float, a_j: float, eps_ij: float, box) -> SurplusBounds:
    """Range of the link surplus z'b + x'g + a_i + a_j + e over covariate values x in the box."""
    z = np.atleast_1d(np.asarray(z_dyad, dtype=float))
    base = float(z @ theta.beta) + a_i + a_j + eps_ij
    top, bottom = surplus_range(theta.gamma, box)
    return SurplusBounds(base + top, base + bottom)


@dataclass(frozen=True)
class RobustnessGraphs:
    D: np.ndarray
    Pi: np.ndarray

    def __post_init__(self):
        D = np.asarray(self.D, dtype=np.int8)
        Pi = np.asarray(self.Pi, dtype=np.int8)
        if np.any(D & Pi):
            raise ValueError("a link cannot be both non-robust and robustly present")
        if not (np.array_equal(D, D.T) and np.array_equal(Pi, Pi.T)):
            raise ValueError("robustness graphs must be symmetric")
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "Pi", Pi)

    @property
    def n(self) -> int:
        return self.D.shape[0]

    @classmethod
    def from_edges(cls, n: int, d_edges=(), pi_edges=()) -> "RobustnessGraphs":
        D = np.zeros((n, n), dtype=np.int8)
        Pi = np.zeros((n, n), dtype=np.int8)
        for M, edges in ((D, d_edges), (Pi, pi_edges)):
            for a, b in edges:
                M[a, b] = M[b, a] = 1
        return cls(D, Pi)


def classify_from_index(base: np.ndarray, gamma, box) -> RobustnessGraphs:
    top, bottom = surplus_range(gamma, box)
    v_sup = base + top
    v_inf = base + bottom
    D = ((v_sup > 0) & (v_inf <= 0)).astype(np.int8)
    Pi = (v_inf > 0).astype(np.int8)
    np.fill_diagonal(D, 0)
    np.fill_diagonal(Pi, 0)
    return RobustnessGraphs(D, Pi)


def classify_links(draw: SimDraw, theta: Theta, covariate: CovariateSpec | None = None, box=None) -> RobustnessGraphs:
    """Non-robust (D) and robustly present (Pi) indicators for every pair of a draw."""
    if box is None:
        cov = covariate or draw.covariate
        box = cov.box(draw.n) if cov is not None else 0.0
    base = base_index(draw.agents, draw.shocks, theta, draw.z_dyad)
    return classify_from_index(base, theta.gamma, box)


@dataclass(frozen=True)
class StrategicNeighborhoods:
    labels: np.ndarray
    components: tuple[frozenset, ...]
    neighborhoods: tuple[frozenset, ...]

    @property
    def n(self) -> int:
        return self.labels.size

    def component_of(self, i: int) -> frozenset:
        return self.components[self.labels[i]]


def strategic_neighborhoods(graphs: RobustnessGraphs) -> StrategicNeighborhoods:
    """Components of the non-robustness graph, widened by robust one-step neighbors."""
    n = graphs.n
    _, labels = connected_components(csr_matrix(graphs.D), directed=False)
    members: dict[int, list[int]] = {}
    for i, lab in enumerate(labels.tolist()):
        members.setdefault(lab, []).append(i)
    components = tuple(frozenset(members[lab]) for lab in range(len(members)))
    comp_plus = []
    for comp in components:
        idx = np.fromiter(comp, dtype=np.int64)
        reach = np.flatnonzero(graphs.Pi[idx].any(axis=0))
        comp_plus.append(frozenset(comp) | frozenset(reach.tolist()))
    neighborhoods = tuple(comp_plus[labels[i]] for i in range(n))
    return StrategicNeighborhoods(labels, components, neighborhoods)


@dataclass(frozen=True)
class PackedTetrads:
    tetrads: list[tuple[int, int, int, int]]
    dependence_sets: list[frozenset]

    def __len__(self) -> int:
        return len(self.tetrads)

    def pairwise_disjoint(self) -> bool:
        seen: set[int] = set()
        for dep in self.dependence_sets:
            if seen & dep:
                return False
            seen |= dep
        return True


def dependence_set(nbhds: StrategicNeighborhoods, tetrad: Sequence[int]) -> frozenset:
    out: set[int] = set()
    for a in tetrad:
        out |= nbhds.neighborhoods[a]
    return frozenset(out)


def _first_match(avail: list[int], z_codes: np.ndarray, target: list) -> tuple[int, ...] | None:
    """Lexicographically first 4-subset of ``avail`` whose z multiset equals ``target``."""
    need = {}
    for v in target:
        need[v] = need.get(v, 0) + 1

    def dfs(start: int, chosen: list[int]):
        if len(chosen) == 4:
            return tuple(chosen)
        for p in range(start, len(avail)):
            a = avail[p]
            v = z_codes[a]
            if need.get(v, 0) > 0:
                need[v] -= 1
                got = dfs(p + 1, chosen + [a])
                need[v] += 1
                if got is not None:
                    return got
        return None

    return dfs(0, [])


def greedy_pack_tetrads(nbhds: StrategicNeighborhoods, z_match=None, z=None) -> PackedTetrads:
    """Scan sorted quadruplets lexicographically and keep each one whose dependence set is still free.

    A quadruplet is compatible with the current selection exactly when none of its agents'
    strategic neighborhoods touches an already used agent, so the lexicographic scan reduces
    to repeatedly taking the smallest available agents. With ``z_match`` (a multiset of four
    agent characteristics, matched against ``z``) only quadruplets with those values qualify.
    """
    n = nbhds.n
    used = np.zeros(n, dtype=bool)
    tetrads, deps = [], []
    if z_match is not None:
        if z is None:
            raise ValueError("z values are required when filtering by z_match")
        z_arr = np.asarray(z)
        if z_arr.ndim > 1:
            z_codes = [tuple(r) for r in z_arr.tolist()]
            target = [tuple(np.atleast_1d(t).tolist()) for t in z_match]
        else:
            z_codes = z_arr.tolist()
            target = list(np.asarray(z_match).tolist())
        if len(target) != 4:
            raise ValueError("z_match needs four values")
    while True:
        avail = [a for a in range(n) if not any(used[b] for b in nbhds.neighborhoods[a])]
        if z_match is None:
            t = tuple(avail[:4]) if len(avail) >= 4 else None
        else:
            t = _first_match(avail, z_codes, target)
        if t is None:
            break
        dep = dependence_set(nbhds, t)
        tetrads.append(t)
        deps.append(dep)
        used[list(dep)] = True
    return PackedTetrads(tetrads, deps)


def check_tetrad_isolation(nbhds: StrategicNeighborhoods, tetrad: Sequence[int]) -> bool:
    members = set(tetrad)
    return all(nbhds.component_of(a) <= members for a in tetrad)
