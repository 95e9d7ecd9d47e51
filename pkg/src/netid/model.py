"""Core domain types: networks, agent primitives, parameters and weighted link configurations."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

SIGMA_TOL = 1e-12


def pair(i: int, j: int) -> tuple[int, int]:
    """Canonical (min, max) form of an unordered pair."""
    if i == j:
        raise ValueError(f"pair needs two distinct agents, got ({i}, {j})")
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True, eq=False)
class Network:
    """Undirected binary network on ``n`` agents."""

    adjacency: np.ndarray

    def __post_init__(self):
        adj = np.asarray(self.adjacency)
        if adj.ndim != 2 or adj.shape[0] != adj.shape[1]:
            raise ValueError("adjacency must be a square matrix")
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency must be binary")
        if not np.array_equal(adj, adj.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(adj)):
            raise ValueError("adjacency must have a zero diagonal")
        adj = adj.astype(np.int8, copy=True)
        adj.setflags(write=False)
        object.__setattr__(self, "adjacency", adj)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Network):
            return NotImplemented
        return np.array_equal(self.adjacency, other.adjacency)

    def __hash__(self) -> int:
        return hash((self.n, self.adjacency.tobytes()))

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    @classmethod
    def empty(cls, n: int) -> "Network":
        return cls(np.zeros((n, n), dtype=np.int8))

    @classmethod
    def complete(cls, n: int) -> "Network":
        return cls(np.ones((n, n), dtype=np.int8) - np.eye(n, dtype=np.int8))

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[tuple[int, int]]) -> "Network":
        adj = np.zeros((n, n), dtype=np.int8)
        for i, j in edges:
            i, j = pair(i, j)
            adj[i, j] = adj[j, i] = 1
        return cls(adj)

    def edges(self) -> list[tuple[int, int]]:
        rows, cols = np.nonzero(np.triu(self.adjacency, 1))
        return list(zip(rows.tolist(), cols.tolist()))

    def neighbors(self, i: int) -> set[int]:
        return set(np.flatnonzero(self.adjacency[i]).tolist())

    def degree(self) -> np.ndarray:
        return self.adjacency.sum(axis=1).astype(np.int64)

    def with_links(self, updates: Mapping[tuple[int, int], int]) -> "Network":
        """Copy with the given pairs set to 0/1."""
        adj = self.adjacency.copy()
        for (i, j), v in updates.items():
            adj[i, j] = adj[j, i] = int(v)
        return Network(adj)


@dataclass(frozen=True)
class AgentData:
    """Per-agent exogenous characteristics ``Z`` (n x d_z) and fixed effects ``A``."""

    Z: np.ndarray
    A: np.ndarray
    support: np.ndarray | None = None

    def __post_init__(self):
        Z = np.asarray(self.Z, dtype=float)
        if Z.ndim == 1:
            Z = Z[:, None]
        A = np.asarray(self.A, dtype=float).reshape(-1)
        if Z.shape[0] != A.shape[0]:
            raise ValueError(f"Z has {Z.shape[0]} rows but A has {A.shape[0]} entries")
        if self.support is not None:
            sup = np.asarray(self.support, dtype=float)
            if sup.ndim == 1:
                sup = sup[:, None]
            member = (np.abs(Z[:, None, :] - sup[None, :, :]) < 1e-12).all(axis=2).any(axis=1)
            if not member.all():
                bad = int(np.flatnonzero(~member)[0])
                raise ValueError(f"Z[{bad}] is not in the declared support")
            object.__setattr__(self, "support", sup)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        return self.Z.shape[0]

    @property
    def d_z(self) -> int:
        return self.Z.shape[1]


@dataclass(frozen=True)
class ShockMatrix:
    """Symmetric matrix of pairwise shocks; the diagonal is ignored."""

    eps: np.ndarray

    def __post_init__(self):
        eps = np.array(self.eps, dtype=float)
        if eps.ndim != 2 or eps.shape[0] != eps.shape[1]:
            raise ValueError("eps must be square")
        off = ~np.eye(eps.shape[0], dtype=bool)
        if not np.array_equal(eps[off], eps.T[off]):
            raise ValueError("eps must be symmetric")
        np.fill_diagonal(eps, 0.0)
        eps.setflags(write=False)
        object.__setattr__(self, "eps", eps)

    @property
    def n(self) -> int:
        return self.eps.shape[0]


@dataclass(frozen=True)
class Theta:
    """Structural parameters: ``beta`` on exogenous and ``gamma`` on endogenous covariates."""

    beta: np.ndarray
    gamma: np.ndarray = field(default_factory=lambda: np.zeros(0))
    shock_params: dict | None = None

    def __post_init__(self):
        object.__setattr__(self, "beta", np.atleast_1d(np.asarray(self.beta, dtype=float)))
        object.__setattr__(self, "gamma", np.atleast_1d(np.asarray(self.gamma, dtype=float)))

    @property
    def d_beta(self) -> int:
        return self.beta.size

    @property
    def d_gamma(self) -> int:
        return self.gamma.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.beta, self.gamma])

    def with_gamma(self, gamma) -> "Theta":
        return Theta(self.beta, gamma, self.shock_params)


def delta_index(z_dyad, x_dyad, theta: Theta) -> float:
    """Latent index ``z'beta + x'gamma`` for one dyad."""
    z = np.atleast_1d(np.asarray(z_dyad, dtype=float))
    x = np.atleast_1d(np.asarray(x_dyad, dtype=float))
    if z.size != theta.d_beta:
        raise ValueError(f"z has dimension {z.size}, beta has {theta.d_beta}")
    if x.size != theta.d_gamma:
        raise ValueError(f"x has dimension {x.size}, gamma has {theta.d_gamma}")
    return float(z @ theta.beta + x @ theta.gamma)


def abs_diff(zi: np.ndarray, zj: np.ndarray) -> np.ndarray:
    return np.abs(zi - zj)


@dataclass(frozen=True)
class DyadCovariates:
    """Dyadic covariate tables: ``Z_dyad`` is (n, n, d_z); ``X_dyad`` is (n, n) or None."""

    Z_dyad: np.ndarray
    X_dyad: np.ndarray | None = None

    @classmethod
    def from_agents(cls, agents: AgentData, w: Callable = abs_diff, X_dyad=None) -> "DyadCovariates":
        return cls(dyadic_z(agents, w), X_dyad)


def dyadic_z(agents: AgentData, w: Callable = abs_diff) -> np.ndarray:
    """Build the (n, n, d) table ``Z_ij = w(Z_i, Z_j)``; ``w`` must be symmetric and vectorised."""
    Z = agents.Z
    table = np.asarray(w(Z[:, None, :], Z[None, :, :]), dtype=float)
    if table.ndim == 2:
        table = table[:, :, None]
    if not np.allclose(table, table.transpose(1, 0, 2)):
        raise ValueError("dyadic covariate function must be symmetric")
    return table


def reparametrize_fixed_effects(agents: AgentData) -> AgentData:
    """Switch between fixed effects added to the index and fixed effects acting as thresholds.

    ``1{z'b + x'g + A_i + A_j + e >= 0}`` equals ``1{z'b + x'g + e' >= A'_i + A'_j}``
    with ``A' = -A`` and ``e' = e``; the logistic shock law is unchanged.
    Differenced restrictions are invariant to the flip.
    """
    return AgentData(agents.Z, -agents.A, agents.support)


@dataclass(frozen=True)
class WeightedLinkConfig:
    """Signed link weights on an ordered agent set.

    Agents can be abstract slots (0..m-1) that get mapped onto actual agents
    when the configuration is matched against a network.
    """

    agents: tuple[int, ...]
    links: tuple[tuple[int, int], ...]
    weights: tuple[float, ...]
    name: str = ""

    def __post_init__(self):
        agents = tuple(int(a) for a in self.agents)
        if len(set(agents)) != len(agents):
            raise ValueError("agents must be distinct")
        links = tuple(pair(int(a), int(b)) for a, b in self.links)
        weights = tuple(float(w) for w in self.weights)
        if len(links) != len(weights):
            raise ValueError("one weight per link required")
        if len(set(links)) != len(links):
            raise ValueError("duplicate link in configuration")
        members = set(agents)
        for a, b in links:
            if a not in members or b not in members:
                raise ValueError(f"link ({a}, {b}) has an endpoint outside the agent set")
        if any(w == 0 for w in weights):
            raise ValueError("zero weights are not allowed")
        object.__setattr__(self, "agents", agents)
        object.__setattr__(self, "links", links)
        object.__setattr__(self, "weights", weights)

    @property
    def E_plus(self) -> tuple[tuple[int, int], ...]:
        return tuple(e for e, w in zip(self.links, self.weights) if w > 0)

    @property
    def E_minus(self) -> tuple[tuple[int, int], ...]:
        return tuple(e for e, w in zip(self.links, self.weights) if w < 0)

    @property
    def integer_weights(self) -> bool:
        return all(float(w).is_integer() for w in self.weights)

    def slot_links(self) -> list[tuple[int, int]]:
        """Links expressed as positions in ``agents``."""
        pos = {a: k for k, a in enumerate(self.agents)}
        return [(pos[a], pos[b]) for a, b in self.links]


def incidence_sums(cfg: WeightedLinkConfig) -> dict[int, float]:
    """Weighted incidence sum at every agent of the configuration."""
    sigma = {a: 0.0 for a in cfg.agents}
    for (a, b), w in zip(cfg.links, cfg.weights):
        sigma[a] += w
        sigma[b] += w
    return sigma


def retained_and_differenced(cfg: WeightedLinkConfig) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split agents into those whose fixed effect survives (S_R) and those differenced out (S_0)."""
    sigma = incidence_sums(cfg)
    if cfg.integer_weights:
        zero = {a: s == 0 for a, s in sigma.items()}
    else:
        zero = {a: abs(s) <= SIGMA_TOL for a, s in sigma.items()}
    S_R = tuple(a for a in cfg.agents if not zero[a])
    S_0 = tuple(a for a in cfg.agents if zero[a])
    return S_R, S_0


def fixed_effect_residual(cfg: WeightedLinkConfig, A: Sequence[float]) -> float:
    """``sum_e w_e (A_i(e) + A_j(e))`` for agent labels indexing into ``A``."""
    return float(sum(w * (A[a] + A[b]) for (a, b), w in zip(cfg.links, cfg.weights)))


# Standard configurations; slots follow the (i, j, h, k) / (i, j, k, l) naming.

def tetrad_config(i=0, j=1, h=2, k=3) -> WeightedLinkConfig:
    return WeightedLinkConfig((i, j, h, k), ((i, j), (h, k), (i, k), (j, h)), (1, 1, -1, -1), "tetrad")


def three_link_triad_config(i=0, j=1, k=2) -> WeightedLinkConfig:
    return WeightedLinkConfig((i, j, k), ((i, j), (i, k), (j, k)), (1, 1, -1), "three_link_triad")


def two_link_triad_config(i=0, j=1, k=2) -> WeightedLinkConfig:
    return WeightedLinkConfig((i, j, k), ((i, j), (i, k)), (1, -1), "two_link_triad")


def weighted_star_config(i=0, j=1, k=2, l=3) -> WeightedLinkConfig:
    return WeightedLinkConfig((i, j, k, l), ((i, j), (i, k), (i, l)), (1, 1, -2), "weighted_star")


def hexad_config(agents: Sequence[int] = (0, 1, 2, 3, 4, 5)) -> WeightedLinkConfig:
    a = tuple(agents)
    if len(a) != 6:
        raise ValueError("hexad needs six agents")
    cycle = [(a[m], a[(m + 1) % 6]) for m in range(6)]
    return WeightedLinkConfig(a, tuple(cycle), (1, -1, 1, -1, 1, -1), "hexad")


STANDARD_CONFIGS: dict[str, Callable[[], WeightedLinkConfig]] = {
    "tetrad": tetrad_config,
    "three_link_triad": three_link_triad_config,
    "two_link_triad": two_link_triad_config,
    "weighted_star": weighted_star_config,
    "hexad": hexad_config,
}
