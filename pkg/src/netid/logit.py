"""Point identification through admissible tetrads and the conditional logit estimator."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np
from scipy.linalg import qr
from scipy.optimize import linprog
from scipy.special import expit, log_expit

from .covariates import CovariateKind, CovariateSpec, check_cpi
from .equilibrium import SimDraw
from .model import Theta
from .restrictions import _quadruple_chunks
from .structure import StrategicNeighborhoods, check_tetrad_isolation

GRAD_TOL = 1e-8
MAX_EXACT_N = 300


class Outcome(IntEnum):
    NEITHER = -1
    FLIPPED = 0
    TETRAD = 1


@dataclass(frozen=True)
class AdmissibleTetrad:
    agents: tuple[int, int, int, int]
    diagonal_check: bool
    isolation: bool | None
    outcome: Outcome
    dZ: np.ndarray
    dX: np.ndarray


@dataclass
class AdmissibleSet:
    """Column-oriented store of admissible tetrads; ``outcome`` uses the :class:`Outcome` codes."""

    agents: np.ndarray
    outcome: np.ndarray
    dZ: np.ndarray
    dX: np.ndarray
    isolation: np.ndarray | None = None
    subsampled: bool = False

    def __len__(self) -> int:
        return self.outcome.size

    def __iter__(self):
        for q in range(len(self)):
            iso = None if self.isolation is None else bool(self.isolation[q])
            yield AdmissibleTetrad(tuple(int(a) for a in self.agents[q]), True, iso, Outcome(int(self.outcome[q])),
                                   self.dZ[q], self.dX[q])

    @classmethod
    def from_tetrads(cls, tetrads) -> "AdmissibleSet":
        tetrads = list(tetrads)
        if not tetrads:
            raise ValueError("no tetrads given")
        iso = [t.isolation for t in tetrads]
        return cls(np.array([t.agents for t in tetrads]), np.array([int(t.outcome) for t in tetrads]),
                   np.array([np.atleast_1d(t.dZ) for t in tetrads], dtype=float),
                   np.array([np.atleast_1d(t.dX) for t in tetrads], dtype=float).reshape(len(tetrads), -1),
                   None if any(v is None for v in iso) else np.array(iso, dtype=bool))

    def counts(self) -> dict[str, int]:
        return {"admissible": len(self), "tetrad": int((self.outcome == Outcome.TETRAD).sum()),
                "flipped": int((self.outcome == Outcome.FLIPPED).sum()),
                "neither": int((self.outcome == Outcome.NEITHER).sum())}

    def isolation_share(self) -> float | None:
        if self.isolation is None or len(self) == 0:
            return None
        return float(self.isolation.mean())

    def design_matrix(self) -> tuple[np.ndarray, np.ndarray]:
        keep = self.outcome != Outcome.NEITHER
        R = np.hstack([self.dZ[keep], self.dX[keep]])
        y = (self.outcome[keep] == Outcome.TETRAD).astype(float)
        return R, y


# canonical orientation (positions in the sorted 4-set) for each diagonal matching
_CANONICAL = ((0, 2, 1, 3), (0, 1, 2, 3), (0, 1, 3, 2))


def select_admissible(draw: SimDraw, nbhds: StrategicNeighborhoods | None = None, require_isolation: bool = False,
                      max_quadruples: int = 5_000_000, seed: int = 0) -> AdmissibleSet:
    """All canonical tetrads with both diagonal links absent, classified by link pattern.

    Each 4-set has three ways to pick the diagonal pair; each choice with both diagonals
    absent gives one admissible tetrad. For n above 300 a seeded sample of 4-sets is used.
    """
    if require_isolation and nbhds is None:
        raise ValueError("isolation check needs strategic neighborhoods")
    n = draw.n
    Y = draw.network.adjacency.astype(bool)
    Zd = draw.z_dyad
    X = np.zeros((n, n, 0)) if draw.x_dyad is None else np.asarray(draw.x_dyad, float)[:, :, None]
    subsampled = n > MAX_EXACT_N
    if subsampled:
        rng = np.random.default_rng(seed)
        quads = np.sort(np.array([rng.choice(n, 4, replace=False) for _ in range(max_quadruples // 100)]), axis=1)
        chunks = [quads]
    else:
        chunks = _quadruple_chunks(n)
    agents, outcome, dZ, dX = [], [], [], []
    for quad in chunks:
        for o in _CANONICAL:
            i, j, h, k = (quad[:, o[0]], quad[:, o[1]], quad[:, o[2]], quad[:, o[3]])
            ok = ~Y[i, h] & ~Y[j, k]
            if not ok.any():
                continue
            i, j, h, k = i[ok], j[ok], h[ok], k[ok]
            t = Y[i, j] & Y[h, k] & ~Y[i, k] & ~Y[j, h]
            f = ~Y[i, j] & ~Y[h, k] & Y[i, k] & Y[j, h]
            out = np.where(t, int(Outcome.TETRAD), np.where(f, int(Outcome.FLIPPED), int(Outcome.NEITHER)))
            agents.append(np.column_stack([i, j, h, k]))
            outcome.append(out)
            dZ.append(Zd[i, j] + Zd[h, k] - Zd[i, k] - Zd[j, h])
            dX.append(X[i, j] + X[h, k] - X[i, k] - X[j, h])
    if agents:
        A = np.concatenate(agents)
        res = AdmissibleSet(A, np.concatenate(outcome), np.concatenate(dZ), np.concatenate(dX), None, subsampled)
    else:
        res = AdmissibleSet(np.zeros((0, 4), np.int64), np.zeros(0, np.int64), np.zeros((0, Zd.shape[2])),
                            np.zeros((0, X.shape[2])), None, subsampled)
    if nbhds is not None:
        iso = np.array([check_tetrad_isolation(nbhds, tuple(a)) for a in res.agents.tolist()], dtype=bool)
        res.isolation = iso
        if require_isolation:
            keep = iso
            res = AdmissibleSet(res.agents[keep], res.outcome[keep], res.dZ[keep], res.dX[keep], iso[keep], subsampled)
    return res


@dataclass
class LogitFit:
    theta_hat: Theta
    loglik: float
    n_obs: int
    converged: bool
    std_err: np.ndarray | None = None
    iterations: int = 0
    dropped: list[str] = field(default_factory=list)
    counts: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {"beta": self.theta_hat.beta.tolist(), "gamma": self.theta_hat.gamma.tolist(),
                "std_err": None if self.std_err is None else self.std_err.tolist(), "loglik": self.loglik,
                "n_obs": self.n_obs, "converged": self.converged, "iterations": self.iterations,
                "dropped_columns": self.dropped, "counts": self.counts}


class RankDeficiencyError(ValueError):
    pass


class SeparationError(ValueError):
    pass


def _loglik(R, y, b):
    eta = R @ b
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def _separation_direction(R: np.ndarray, y: np.ndarray) -> np.ndarray | None:
    """A direction b with s_t r_t'b >= 0 for all t and > 0 for some t, if one exists."""
    s = np.where(y > 0, 1.0, -1.0)
    S = R * s[:, None]
    p = R.shape[1]
    res = linprog(-S.sum(axis=0), A_ub=-S, b_ub=np.zeros(S.shape[0]), bounds=[(-1, 1)] * p, method="highs")
    if res.status == 0 and -res.fun > 1e-9 * max(1.0, np.abs(S).sum()):
        return res.x
    return None


def fit_conditional_logit(data, column_names: list[str] | None = None, max_iter: int = 100) -> LogitFit:
    """Maximise sum[y * eta - log(1 + exp(eta))], eta = dZ'beta + dX'gamma, by damped Newton from zero.

    ``data`` is an :class:`AdmissibleSet`, a list of :class:`AdmissibleTetrad`, or a tuple
    ``(dZ, dX, y)``. Tetrads with neither pattern are discarded. Regressor columns that are
    identically zero are dropped and reported (their coefficients come back as NaN).
    """
    counts = {}
    if isinstance(data, tuple):
        dZ, dX, y = data
        dZ = np.asarray(dZ, float).reshape(len(y), -1)
        dX = np.asarray(dX, float).reshape(len(y), -1)
        R = np.hstack([dZ, dX])
        y = np.asarray(y, float)
        d_z = dZ.shape[1]
    else:
        if not isinstance(data, AdmissibleSet):
            data = AdmissibleSet.from_tetrads(data)
        counts = data.counts()
        R, y = data.design_matrix()
        d_z = data.dZ.shape[1]
    names = column_names or [f"dZ[{m}]" for m in range(d_z)] + [f"dX[{m}]" for m in range(R.shape[1] - d_z)]
    if R.shape[0] == 0:
        raise ValueError("no tetrad shows either pattern; nothing to fit")
    nonzero = np.any(R != 0, axis=0)
    dropped = [nm for nm, keep in zip(names, nonzero) if not keep]
    Rk = R[:, nonzero]
    kept = [nm for nm, keep in zip(names, nonzero) if keep]
    if Rk.shape[1] == 0:
        raise RankDeficiencyError("every regressor column is identically zero")
    direction = _separation_direction(Rk, y)
    if direction is not None:
        raise SeparationError("outcomes are perfectly separated by the regressors along direction "
                              + ", ".join(f"{nm}={v:+.3g}" for nm, v in zip(kept, direction)))
    _, Rr, piv = qr(Rk, mode="economic", pivoting=True)
    diag = np.abs(np.diag(Rr))
    rank = int(np.sum(diag > diag[0] * 1e-10 * max(Rk.shape))) if diag.size else 0
    if rank < Rk.shape[1]:
        bad = [kept[p] for p in piv[rank:]]
        raise RankDeficiencyError(f"regressors are collinear; deficient columns: {', '.join(bad)}")
    b = np.zeros(Rk.shape[1])
    ll = _loglik(Rk, y, b)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = expit(Rk @ b)
        grad = Rk.T @ (y - p)
        if np.max(np.abs(grad)) <= GRAD_TOL:
            converged = True
            break
        H = (Rk * (p * (1 - p))[:, None]).T @ Rk
        step = np.linalg.solve(H, grad)
        t = 1.0
        while True:
            cand = b + t * step
            ll_c = _loglik(Rk, y, cand)
            if ll_c >= ll or t < 1e-10:
                break
            t *= 0.5
        b, ll = cand, ll_c
    p = expit(Rk @ b)
    H = (Rk * (p * (1 - p))[:, None]).T @ Rk
    se_k = np.sqrt(np.diag(np.linalg.inv(H)))
    full = np.full(R.shape[1], np.nan)
    full[nonzero] = b
    se = np.full(R.shape[1], np.nan)
    se[nonzero] = se_k
    theta = Theta(full[:d_z], full[d_z:])
    return LogitFit(theta, ll, int(R.shape[0]), converged, se, it, dropped, counts)


def logodds_oracle(thresholds) -> tuple[float, float, float]:
    """Tetrad and flipped probabilities for independent links with P(Y_e = 1) = Lambda(threshold_e)."""
    a, b, c, d = (float(v) for v in thresholds)
    log_plus = log_expit(a) + log_expit(b) + log_expit(-c) + log_expit(-d)
    log_minus = log_expit(-a) + log_expit(-b) + log_expit(c) + log_expit(d)
    return float(np.exp(log_plus)), float(np.exp(log_minus)), float(log_plus - log_minus)


@dataclass
class LogOddsReport:
    checked: int
    max_abs_error: float
    cpi_violations: int

    @property
    def passed(self) -> bool:
        return self.cpi_violations == 0 and self.max_abs_error <= 1e-10


def external_common_friends(Y: np.ndarray, tetrad, a: int, b: int) -> int:
    others = np.ones(Y.shape[0], dtype=bool)
    others[list(tetrad)] = False
    return int(np.sum(Y[a, others].astype(np.int64) * Y[b, others]))


def verify_logodds_identity(draws, theta: Theta | None = None, tol: float = 1e-10) -> LogOddsReport:
    """Check log(p+/p-) = dZ'beta + dX'gamma on every admissible tetrad of common-friends draws.

    With the rest of the network frozen, each of the four cycle links forms on its own shock,
    at a threshold built from the common friends outside the tetrad. The pattern probabilities
    are products of logistic CDFs at those thresholds, fixed effects included.
    """
    if isinstance(draws, SimDraw):
        draws = [draws]
    worst = 0.0
    checked = 0
    cpi_bad = 0
    for draw in draws:
        if draw.covariate is None or draw.covariate.kind is not CovariateKind.COMMON_FRIENDS:
            raise ValueError("the log-odds check needs draws with the common-friends covariate")
        th = theta
        if th is None:
            raise ValueError("theta is required")
        Y = draw.network.adjacency.astype(np.int64)
        A = draw.agents.A
        Zd = draw.z_dyad
        g = float(th.gamma[0]) if th.d_gamma else 0.0
        adm = select_admissible(draw)
        net = draw.network
        for t_agents, dz, dx in zip(adm.agents.tolist(), adm.dZ, adm.dX):
            i, j, h, k = t_agents
            if not check_cpi(CovariateSpec.common_friends(), net, (i, j, h, k)):
                cpi_bad += 1
                continue
            thr = []
            for a, b in ((i, j), (h, k), (i, k), (j, h)):
                x_ext = external_common_friends(Y, t_agents, a, b)
                thr.append(float(Zd[a, b] @ th.beta) + g * x_ext + A[a] + A[b])
            _, _, lo = logodds_oracle(thr)
            target = float(dz @ th.beta) + (float(dx @ th.gamma) if th.d_gamma else 0.0)
            worst = max(worst, abs(lo - target))
            checked += 1
    if cpi_bad:
        raise RuntimeError(f"comparison-pattern invariance failed on {cpi_bad} tetrads")
    return LogOddsReport(checked, worst, cpi_bad)


def simulate_condlogit(n_obs: int, theta: Theta, seed: int = 0, dx_zero: bool = False):
    """Synthetic (dZ, dX, y) drawn straight from the conditional logit likelihood."""
    rng = np.random.default_rng(seed)
    dZ = rng.normal(0.0, 1.0, size=(n_obs, theta.d_beta))
    if dx_zero:
        dX = np.zeros((n_obs, theta.d_gamma))
    else:
        dX = rng.uniform(-1.0, 1.0, size=(n_obs, theta.d_gamma))
    eta = dZ @ theta.beta + dX @ theta.gamma
    y = (rng.random(n_obs) < expit(eta)).astype(float)
    return dZ, dX, y
