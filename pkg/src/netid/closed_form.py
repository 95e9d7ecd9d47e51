"""Population tetrad criteria for the baseline and fixed-effects-only designs.

Here the pattern probability of an oriented tetrad is a known function of the four agents'
characteristics ``x = (Z_i, Z_j, Z_h, Z_k)``: closed form without fixed effects, and a Monte
Carlo average over common fixed-effect draws otherwise. The index contrast at a candidate
parameter is deterministic given ``x``, so the criteria become optimisation problems over
``x`` in the characteristic box, solved by a candidate pool followed by multistart local search.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit, log_expit

from .delta import DeltaDistribution, default_delta
from .equilibrium import DgpSpec, Model

# the four cycle links of (i, j, h, k) as agent positions, positive links first
PLUS = ((0, 1), (2, 3))
MINUS = ((0, 3), (1, 2))
DEFAULT_MC_DRAWS = 100_000
ZERO_TOL = 1e-9


@dataclass
class PopulationModel:
    """Pattern probabilities of oriented tetrads under a baseline or fixed-effects-only design."""

    beta0: np.ndarray
    lo: float = -10.0
    hi: float = 10.0
    z_dim: int = 2
    sigma_A: float = 0.0
    rho: float = 0.0
    u: np.ndarray | None = None  # (R, 4) standard normal draws, shared across x

    @classmethod
    def from_spec(cls, spec: DgpSpec, mc_draws: int = DEFAULT_MC_DRAWS, seed: int | None = None) -> "PopulationModel":
        if spec.model is Model.FULL:
            raise ValueError("the full design has no closed-form tetrad probabilities")
        beta0 = spec.true_theta().beta
        lo, hi = spec.z_range
        if spec.model is Model.BASELINE:
            return cls(beta0, lo, hi, spec.z_dim)
        rng = np.random.default_rng(spec.seed if seed is None else seed)
        u = rng.standard_normal((mc_draws, 4))
        return cls(beta0, lo, hi, spec.z_dim, spec.fe.sigma_A, spec.fe.rho, u)

    @property
    def dim(self) -> int:
        return 4 * self.z_dim

    def with_draws(self, R: int) -> "PopulationModel":
        if self.u is None:
            return self
        return PopulationModel(self.beta0, self.lo, self.hi, self.z_dim, self.sigma_A, self.rho, self.u[:R])

    def _split(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(-1, 4, self.z_dim)

    def link_covariates(self, x: np.ndarray) -> tuple[list, list]:
        Z = self._split(x)
        plus = [np.abs(Z[:, a] - Z[:, b]) for a, b in PLUS]
        minus = [np.abs(Z[:, a] - Z[:, b]) for a, b in MINUS]
        return plus, minus

    def contrast(self, x: np.ndarray, beta: np.ndarray) -> np.ndarray:
        plus, minus = self.link_covariates(x)
        return (plus[0] + plus[1] - minus[0] - minus[1]) @ np.asarray(beta, dtype=float)

    def pattern_prob(self, x: np.ndarray) -> np.ndarray:
        """P(Y_ij = Y_hk = 1, Y_ik = Y_jh = 0 | x)."""
        plus, minus = self.link_covariates(x)
        s_plus = [p @ self.beta0 for p in plus]
        s_minus = [m @ self.beta0 for m in minus]
        if self.u is None or (self.sigma_A == 0 and self.rho == 0):
            logp = (log_expit(s_plus[0]) + log_expit(s_plus[1]) + log_expit(-s_minus[0]) + log_expit(-s_minus[1]))
            return np.exp(logp)
        Z = self._split(x)
        out = np.empty(Z.shape[0])
        for q in range(Z.shape[0]):
            A = self.rho * Z[q, :, 0][None, :] + self.sigma_A * self.u
            t = (expit(s_plus[0][q] + A[:, 0] + A[:, 1]) * expit(s_plus[1][q] + A[:, 2] + A[:, 3])
                 * expit(-(s_minus[0][q] + A[:, 0] + A[:, 3])) * expit(-(s_minus[1][q] + A[:, 1] + A[:, 2])))
            out[q] = t.mean()
        return out


def candidate_pool(model: PopulationModel, size: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points plus points pushed to the faces of the box, where extremes tend to sit."""
    d = model.dim
    uni = rng.uniform(model.lo, model.hi, size=(size, d))
    corner = rng.uniform(model.lo, model.hi, size=(size, d))
    mask = rng.random((size, d)) < 0.5
    corner[mask] = np.where(rng.random(int(mask.sum())) < 0.5, model.lo, model.hi)
    return np.vstack([uni, corner])


@dataclass
class PopulationCriterion:
    gamma: float
    q_value: float
    argmax: np.ndarray | None = None
    c: float | None = None
    in_identified_set: bool = field(init=False)

    def __post_init__(self):
        self.in_identified_set = bool(self.q_value <= ZERO_TOL)


@dataclass
class ClosedFormSearch:
    """Evaluates population criteria over a grid of candidate values for one free coefficient.

    ``free_index`` picks which component of beta is searched; the other components are held at
    their true values. ``pool_draws`` fixed-effect draws are used while searching and all draws
    when confirming or refining the best candidates.
    """

    model: PopulationModel
    free_index: int = 1
    pool_size: int = 20_000
    starts: int = 32
    refine: int = 8
    pool_draws: int = 2_000
    seed: int = 0
    F: DeltaDistribution | None = None

    def __post_init__(self):
        self.F = self.F or default_delta()
        rng = np.random.default_rng(self.seed)
        self.pool = candidate_pool(self.model, self.pool_size, rng)
        self.fast = self.model.with_draws(self.pool_draws)
        self.pool_prob = self.fast.pattern_prob(self.pool)
        self._plus, self._minus = self.model.link_covariates(self.pool)

    def beta_at(self, gamma: float) -> np.ndarray:
        b = np.array(self.model.beta0, dtype=float)
        b[self.free_index] = gamma
        return b

    def _pool_contrast(self, beta):
        return (self._plus[0] + self._plus[1] - self._minus[0] - self._minus[1]) @ beta

    def _local(self, fun, x0):
        bounds = [(self.model.lo, self.model.hi)] * self.model.dim
        res = minimize(fun, x0, method="L-BFGS-B", bounds=bounds, options={"maxiter": 200})
        return res.x, -res.fun

    def parametric(self, gamma: float) -> PopulationCriterion:
        """max(0, sup_x P_T(x) - F(contrast(x))); the flipped branch is the same by symmetry."""
        beta = self.beta_at(gamma)
        gap = self.pool_prob - self.F.cdf(self._pool_contrast(beta))
        order = np.argsort(gap)[::-1]
        best_q, best_x = -np.inf, None
        # confirm the leading pool points with all draws before any local search
        top = self.pool[order[:self.refine]]
        full_gap = self.model.pattern_prob(top) - self.F.cdf(self.model.contrast(top, beta))
        k = int(np.argmax(full_gap))
        best_q, best_x = float(full_gap[k]), top[k]
        if best_q <= ZERO_TOL:
            def neg(x):
                return -(float(self.fast.pattern_prob(x[None])[0]) - float(self.F.cdf(self.model.contrast(x[None], beta))[0]))

            for x0 in self.pool[order[:self.starts]]:
                x, _ = self._local(neg, x0)
                val = float(self.model.pattern_prob(x[None])[0] - self.F.cdf(self.model.contrast(x[None], beta))[0])
                if val > best_q:
                    best_q, best_x = val, x
                if best_q > ZERO_TOL:
                    break
        c = float(self.model.contrast(best_x[None], beta)[0])
        return PopulationCriterion(gamma, max(0.0, best_q), best_x, c)

    def nonparametric(self, gamma: float) -> PopulationCriterion:
        """sup_c [sup_{x: d(x) <= c} P_T(x) + sup_{y: d(y) < -c} P_T(y)] - 1 over the pool.

        Flipped events at y are tetrad events of the reoriented tetrad, whose contrast is -d(y).
        The c = -inf limit contributes sup P_T - 1.
        """
        beta = self.beta_at(gamma)
        d = self._pool_contrast(beta)
        p = self.pool_prob
        order = np.argsort(d)
        d_s, p_s = d[order], p[order]
        prefix = np.maximum.accumulate(p_s)
        # for threshold t = d_s[q], partner points need d(y) < -t
        pos = np.searchsorted(d_s, -d_s, side="left")
        partner = np.where(pos > 0, prefix[np.maximum(pos - 1, 0)], 0.0)
        vals = prefix + partner - 1.0
        q = int(np.argmax(vals))
        best = max(float(vals[q]), float(p.max()) - 1.0)
        return PopulationCriterion(gamma, best, self.pool[order[q]], float(d_s[q]))


def gamma_grid(lo: float = -10.0, hi: float = 10.0, step: float = 0.5) -> np.ndarray:
    if step <= 0:
        raise ValueError("grid step must be positive")
    count = int(round((hi - lo) / step))
    return lo + step * np.arange(count + 1)


def population_identified_set(spec: DgpSpec, grid=None, criterion: str = "parametric",
                              mc_draws: int = DEFAULT_MC_DRAWS, seed: int = 0, **search_kw):
    """Criterion values and membership over the grid for the baseline or fixed-effects-only design."""
    grid = gamma_grid() if grid is None else np.asarray(grid, dtype=float)
    model = PopulationModel.from_spec(spec, mc_draws, seed)
    search = ClosedFormSearch(model, seed=seed, **search_kw)
    fn = search.parametric if criterion == "parametric" else search.nonparametric
    return [fn(float(g)) for g in grid]
