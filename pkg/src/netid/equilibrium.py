"""Simulation designs and the best-response sweep that produces a pairwise-stable network."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .covariates import CovariateKind, CovariateSpec, compute_all
from .model import AgentData, Network, ShockMatrix, Theta, dyadic_z

DEFAULT_SWEEP_CAP = 100


class Model(str, Enum):
    BASELINE = "baseline"
    FE_ONLY = "fe_only"
    FULL = "full"


@dataclass(frozen=True)
class FixedEffects:
    sigma_A: float = 1.0
    rho: float = 0.0

    def __post_init__(self):
        if self.sigma_A < 0:
            raise ValueError("sigma_A must be non-negative")
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError("rho must lie in [0, 1]")


def grid_support(size: int, lo: float = -10.0, hi: float = 10.0) -> np.ndarray:
    """Equally spaced support with ``size`` points on [lo, hi]."""
    if size < 1:
        raise ValueError("support size must be positive")
    if size == 1:
        return np.array([(lo + hi) / 2.0])
    return np.linspace(lo, hi, size)


@dataclass(frozen=True)
class DgpSpec:
    """One of the three nested simulation designs.

    For ``baseline`` and ``fe_only`` the link index is ``Z_ij,1 * beta0 + gamma0 * Z_ij,2``,
    so ``true_theta`` puts ``gamma0`` in the second slot of ``beta``. In the ``full`` design
    Z is scalar and ``gamma0`` multiplies the endogenous covariate.
    """

    model: Model
    n: int
    gamma0: float
    beta0: tuple[float, ...] = (1.0,)
    z_support: tuple[float, ...] | None = None
    z_dim: int = 2
    z_range: tuple[float, float] = (-10.0, 10.0)
    fe: FixedEffects | None = None
    covariate: CovariateSpec | None = None
    seed: int = 0

    def __post_init__(self):
        model = Model(self.model)
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "beta0", tuple(float(b) for b in np.atleast_1d(self.beta0)))
        if self.n < 2:
            raise ValueError("need at least two agents")
        if model is Model.BASELINE and (self.fe is not None or self.covariate is not None):
            raise ValueError("baseline design has neither fixed effects nor a covariate")
        if model is Model.FE_ONLY:
            if self.fe is None:
                raise ValueError("fe_only design needs fixed-effect parameters")
            if self.covariate is not None:
                raise ValueError("fe_only design has no endogenous covariate")
        if model is Model.FULL:
            if self.fe is None or self.covariate is None:
                raise ValueError("full design needs fixed effects and a covariate")
            if self.z_support is None:
                raise ValueError("full design needs a discrete z_support")
            object.__setattr__(self, "z_dim", 1)
        if self.z_support is not None:
            object.__setattr__(self, "z_support", tuple(float(v) for v in self.z_support))

    @classmethod
    def baseline(cls, n: int = 100, gamma0: float = 1.0, seed: int = 0) -> "DgpSpec":
        return cls(Model.BASELINE, n, gamma0, seed=seed)

    @classmethod
    def fe_only(cls, n: int = 100, gamma0: float = 1.0, sigma_A: float = 1.0, rho: float = 0.0,
                seed: int = 0) -> "DgpSpec":
        return cls(Model.FE_ONLY, n, gamma0, fe=FixedEffects(sigma_A, rho), seed=seed)

    @classmethod
    def full(cls, n: int = 100, gamma0: float = 4.0, support_size: int = 21, beta0: float = 1.0,
             sigma_A: float = 1.0, rho: float = 0.0, covariate: CovariateSpec | None = None,
             z_support=None, seed: int = 0) -> "DgpSpec":
        support = grid_support(support_size) if z_support is None else np.asarray(z_support, float)
        return cls(Model.FULL, n, gamma0, (beta0,), tuple(support.tolist()), 1,
                   fe=FixedEffects(sigma_A, rho), covariate=covariate or CovariateSpec.jaccard(),
                   seed=seed)

    def true_theta(self) -> Theta:
        if self.model is Model.FULL:
            return Theta(self.beta0, (self.gamma0,))
        return Theta((self.beta0[0], self.gamma0), ())

    def with_seed(self, seed: int) -> "DgpSpec":
        return replace(self, seed=seed)


@dataclass
class SimDraw:
    agents: AgentData
    shocks: ShockMatrix
    network: Network
    x_dyad: np.ndarray | None
    converged: bool
    sweeps: int
    z_dyad: np.ndarray = field(default=None, repr=False)
    covariate: CovariateSpec | None = None

    def __post_init__(self):
        if self.z_dyad is None:
            self.z_dyad = dyadic_z(self.agents)

    @property
    def n(self) -> int:
        return self.network.n


def draw_primitives(spec: DgpSpec, rng: np.random.Generator | None = None) -> tuple[AgentData, ShockMatrix]:
    """Sample Z, A and the logistic shocks; a fresh generator seeded from ``spec.seed`` by default."""
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    n = spec.n
    support = None
    if spec.z_support is not None:
        support = np.asarray(spec.z_support, dtype=float)
        if support.ndim == 1:
            support = support[:, None]
        Z = support[rng.integers(0, support.shape[0], size=n)]
    else:
        lo, hi = spec.z_range
        Z = rng.uniform(lo, hi, size=(n, spec.z_dim))
    if spec.fe is None:
        A = np.zeros(n)
    else:
        A = spec.fe.rho * Z[:, 0] + spec.fe.sigma_A * rng.standard_normal(n)
    iu = np.triu_indices(n, 1)
    eps = np.zeros((n, n))
    eps[iu] = rng.logistic(0.0, 1.0, size=iu[0].size)
    eps = eps + eps.T
    return AgentData(Z, A, support), ShockMatrix(eps)


def base_index(agents: AgentData, shocks: ShockMatrix, theta: Theta, z_dyad=None) -> np.ndarray:
    """Everything in the link index except the endogenous term: Z_ij'b + A_i + A_j + e_ij."""
    if z_dyad is None:
        z_dyad = dyadic_z(agents)
    if z_dyad.shape[2] != theta.d_beta:
        raise ValueError(f"Z_ij has dimension {z_dyad.shape[2]}, beta has {theta.d_beta}")
    out = z_dyad @ theta.beta + agents.A[:, None] + agents.A[None, :] + shocks.eps
    np.fill_diagonal(out, 0.0)
    return out


def solve_equilibrium(agents: AgentData, shocks: ShockMatrix, theta: Theta,
                      covariate: CovariateSpec | None = None, sweep_cap: int = DEFAULT_SWEEP_CAP,
                      start: Network | None = None) -> SimDraw:
    """Asynchronous lexicographic best-response sweeps from the empty (or given) network."""
    n = agents.n
    z_dyad = dyadic_z(agents)
    base = base_index(agents, shocks, theta, z_dyad)
    Y = np.zeros((n, n), dtype=np.int64) if start is None else start.adjacency.astype(np.int64)
    gamma = theta.gamma
    interactive = covariate is not None and gamma.size > 0 and np.any(gamma != 0)
    if covariate is None and gamma.size > 0 and np.any(gamma != 0):
        raise ValueError("nonzero gamma requires a covariate spec")
    if interactive and gamma.size != 1:
        raise ValueError("the equilibrium solver supports a scalar endogenous covariate")
    g = float(gamma[0]) if gamma.size else 0.0

    if not interactive:
        # no strategic term: one shot threshold graph
        target = (base >= 0).astype(np.int64)
        np.fill_diagonal(target, 0)
        changed = not np.array_equal(Y, target)
        Y = target
        net = Network(Y)
        X = compute_all(net, covariate) if covariate is not None else None
        return SimDraw(agents, shocks, net, X, True, 2 if changed else 1, z_dyad, covariate)

    kind = covariate.kind
    C = Y @ Y
    deg = Y.sum(axis=1)
    pairs_i, pairs_j = np.triu_indices(n, 1)
    pairs = list(zip(pairs_i.tolist(), pairs_j.tolist()))
    base_l = base.tolist()
    converged = False
    sweeps = 0
    seen = {Y.tobytes()}
    for sweeps in range(1, sweep_cap + 1):
        changes = 0
        for i, j in pairs:
            if kind is CovariateKind.JACCARD:
                c = C[i, j]
                union = deg[i] + deg[j] - c
                x = c / union if union > 0 else 0.0
            elif kind is CovariateKind.COMMON_FRIENDS:
                x = C[i, j]
            else:
                x = float(covariate.func(Y, i, j))
            new = 1 if base_l[i][j] + g * x >= 0 else 0
            if new != Y[i, j]:
                d = new - Y[i, j]
                # neighbors of j gain/lose i as a common friend, and vice versa
                C[i, :] += d * Y[j]
                C[:, i] += d * Y[j]
                C[j, :] += d * Y[i]
                C[:, j] += d * Y[i]
                Y[i, j] = Y[j, i] = new
                deg[i] += d
                deg[j] += d
                changes += 1
        if changes == 0:
            converged = True
            break
        state = Y.tobytes()
        if state in seen:
            # sweeps are deterministic, so a revisited state means a cycle
            break
        seen.add(state)
    net = Network(Y)
    return SimDraw(agents, shocks, net, compute_all(net, covariate), converged, sweeps, z_dyad, covariate)


def simulate(spec: DgpSpec, theta: Theta | None = None, sweep_cap: int = DEFAULT_SWEEP_CAP) -> SimDraw:
    agents, shocks = draw_primitives(spec)
    return solve_equilibrium(agents, shocks, theta or spec.true_theta(), spec.covariate, sweep_cap)


def verify_pairwise_stability(draw: SimDraw, theta: Theta) -> bool:
    """Every pair's link status agrees with the sign of its surplus at the realized covariates."""
    index = base_index(draw.agents, draw.shocks, theta, draw.z_dyad)
    if theta.d_gamma and np.any(theta.gamma != 0):
        if draw.covariate is None:
            raise ValueError("draw carries no covariate spec")
        X = compute_all(draw.network, draw.covariate)
        index = index + float(theta.gamma[0]) * X
    want = (index >= 0).astype(np.int8)
    np.fill_diagonal(want, 0)
    return bool(np.array_equal(want, draw.network.adjacency))
