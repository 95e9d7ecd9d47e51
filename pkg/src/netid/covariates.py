"""Endogenous dyadic covariates computed from a realized network, plus structural checks."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from itertools import combinations
from typing import Callable

import numpy as np

from .model import Network


class CovariateKind(str, Enum):
    COMMON_FRIENDS = "common_friends"
    JACCARD = "jaccard"
    CUSTOM = "custom"


@dataclass(frozen=True)
class CovariateSpec:
    """Which endogenous covariate to use and the box ``[lower, upper]`` it lives in.

    For common friends the box depends on ``n``; ``box(n)`` resolves it.
    Custom covariates supply ``func(adjacency, i, j)`` and must declare their bounds.
    """

    kind: CovariateKind
    lower: float | None = None
    upper: float | None = None
    func: Callable[[np.ndarray, int, int], float] | None = None

    def __post_init__(self):
        kind = CovariateKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is CovariateKind.CUSTOM:
            if self.func is None:
                raise ValueError("custom covariate needs a func")
            if self.lower is None or self.upper is None:
                raise ValueError("custom covariate must declare its bound")
        if self.lower is not None and self.upper is not None:
            if not (np.isfinite(self.lower) and np.isfinite(self.upper)) or self.lower > self.upper:
                raise ValueError("covariate bound must be a finite interval")

    @classmethod
    def common_friends(cls) -> "CovariateSpec":
        return cls(CovariateKind.COMMON_FRIENDS)

    @classmethod
    def jaccard(cls) -> "CovariateSpec":
        return cls(CovariateKind.JACCARD, 0.0, 1.0)

    @classmethod
    def custom(cls, func, lower: float, upper: float) -> "CovariateSpec":
        return cls(CovariateKind.CUSTOM, lower, upper, func)

    def box(self, n: int) -> tuple[float, float]:
        if self.kind is CovariateKind.COMMON_FRIENDS:
            return 0.0, float(max(n - 2, 0))
        if self.kind is CovariateKind.JACCARD:
            return 0.0, 1.0
        return float(self.lower), float(self.upper)


def _check_pair(i: int, j: int):
    if i == j:
        raise ValueError("covariate needs two distinct agents")


def common_friends(net: Network, i: int, j: int) -> int:
    _check_pair(i, j)
    Y = net.adjacency
    return int(np.dot(Y[i].astype(np.int64), Y[j]))


def jaccard(net: Network, i: int, j: int) -> float:
    """Jaccard overlap of the two neighbor sets; 0 when both are empty."""
    _check_pair(i, j)
    Y = net.adjacency
    inter = int(np.dot(Y[i].astype(np.int64), Y[j]))
    union = int(Y[i].sum()) + int(Y[j].sum()) - inter
    return inter / union if union > 0 else 0.0


def common_friends_matrix(Y: np.ndarray) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.int64)
    C = Y @ Y
    np.fill_diagonal(C, 0)
    return C


def jaccard_matrix(Y: np.ndarray) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.int64)
    C = Y @ Y
    d = Y.sum(axis=1)
    union = d[:, None] + d[None, :] - C
    with np.errstate(invalid="ignore", divide="ignore"):
        X = np.where(union > 0, C / np.maximum(union, 1), 0.0)
    np.fill_diagonal(X, 0.0)
    return X


def compute_all(net: Network, spec: CovariateSpec) -> np.ndarray:
    """Symmetric (n, n) table of X_ij; the diagonal is zero."""
    Y = net.adjacency
    if spec.kind is CovariateKind.COMMON_FRIENDS:
        return common_friends_matrix(Y).astype(float)
    if spec.kind is CovariateKind.JACCARD:
        return jaccard_matrix(Y)
    n = net.n
    X = np.zeros((n, n))
    lo, hi = spec.box(n)
    for i, j in combinations(range(n), 2):
        v = float(spec.func(Y, i, j))
        if not lo <= v <= hi:
            raise ValueError(f"custom covariate value {v} at ({i}, {j}) outside [{lo}, {hi}]")
        X[i, j] = X[j, i] = v
    return X


def covariate_value(Y: np.ndarray, spec: CovariateSpec, i: int, j: int) -> float:
    """Single X_ij straight from an adjacency array."""
    if spec.kind is CovariateKind.CUSTOM:
        return float(spec.func(Y, i, j))
    inter = int(np.dot(Y[i].astype(np.int64), Y[j]))
    if spec.kind is CovariateKind.COMMON_FRIENDS:
        return float(inter)
    union = int(Y[i].sum()) + int(Y[j].sum()) - inter
    return inter / union if union > 0 else 0.0


def check_local_externality(spec: CovariateSpec, net: Network) -> bool:
    """Brute force: toggling any link away from i and j must leave X_ij alone."""
    n = net.n
    base = net.adjacency.copy()
    pairs = list(combinations(range(n), 2))
    X0 = {p: covariate_value(base, spec, *p) for p in pairs}
    Y = base.copy()
    for a, b in pairs:
        Y[a, b] = Y[b, a] = 1 - Y[a, b]
        for i, j in pairs:
            if a in (i, j) or b in (i, j):
                continue
            if covariate_value(Y, spec, i, j) != X0[(i, j)]:
                return False
        Y[a, b] = Y[b, a] = base[a, b]
    return True


def tetrad_links(i, j, h, k):
    """Positive links, negative links and diagonals of the oriented tetrad (i, j, h, k)."""
    return ((i, j), (h, k)), ((i, k), (j, h)), ((i, h), (j, k))


def check_cpi(spec: CovariateSpec, net: Network, tetrad: tuple[int, int, int, int]) -> bool:
    """Covariates on the four cycle links agree under the tetrad and flipped patterns."""
    i, j, h, k = tetrad
    if len({i, j, h, k}) != 4:
        raise ValueError("tetrad agents must be distinct")
    Y = net.adjacency.copy()
    plus, minus, diag = tetrad_links(i, j, h, k)
    if any(Y[a, b] for a, b in diag):
        raise ValueError(f"tetrad {tetrad} is not admissible: a diagonal link is present")
    cycle = plus + minus

    def values(pattern_plus: int):
        for a, b in plus:
            Y[a, b] = Y[b, a] = pattern_plus
        for a, b in minus:
            Y[a, b] = Y[b, a] = 1 - pattern_plus
        return [covariate_value(Y, spec, a, b) for a, b in cycle]

    return values(1) == values(0)
