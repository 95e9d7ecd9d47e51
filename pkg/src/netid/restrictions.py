"""Moment-inequality restrictions from weighted link configurations and their criterion functions.

Every configuration is reduced to an :class:`EventTable`: matched units grouped into cells
of observed covariates, plus the list of units showing the configuration's link pattern
(``T`` events) or its sign-flipped pattern (``F`` events). Each event keeps the weighted
sums of link covariates over positive and negative links, so that the index contrast at any
parameter value is ``plus @ theta - minus @ theta``. Criteria are then computed exactly
from the sorted contrasts, with no discretisation of the threshold ``c``.

Shock convention: links form when ``index + e_ij >= 0``. The contrast bounded by ``F_Delta``
is ``-(e_ij + e_hk - e_ik - e_jh)``, which has the same law as the positive version.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from itertools import combinations, permutations
from typing import Iterable, Sequence

import numpy as np

from .delta import DeltaDistribution, default_delta
from .equilibrium import SimDraw
from .model import Theta, WeightedLinkConfig, retained_and_differenced, tetrad_config

DEFAULT_CELL_MIN = 10
DEFAULT_MAX_TUPLES = 2_000_000

# The six signed 4-cycles on a sorted 4-set (a, b, c, d), as positions (i, j, h, k).
ORIENTATIONS = ((0, 1, 3, 2), (0, 1, 2, 3), (0, 2, 3, 1), (0, 2, 1, 3), (0, 3, 2, 1), (0, 3, 1, 2))


# ---------------------------------------------------------------- draw encodings

def _unique_codes(values: np.ndarray, decimals: int = 9) -> tuple[np.ndarray, np.ndarray]:
    rounded = np.round(values, decimals)
    uniq, inv = np.unique(rounded, axis=0, return_inverse=True)
    return uniq, inv.reshape(-1)


@dataclass
class DrawEncoding:
    """Integer codes for agent characteristics and dyadic covariates of one draw."""

    z_codes: np.ndarray
    z_values: np.ndarray
    dyad_codes: np.ndarray
    dyad_values: np.ndarray
    W: np.ndarray
    Y: np.ndarray

    @property
    def n(self) -> int:
        return self.z_codes.size


def encode_draw(draw: SimDraw) -> DrawEncoding:
    agents = draw.agents
    n = agents.n
    if agents.support is not None:
        z_values = agents.support
        z_codes = np.argmin(np.abs(agents.Z[:, None, :] - z_values[None]).sum(axis=2), axis=1)
        dv = np.abs(z_values[:, None, :] - z_values[None, :, :]).reshape(-1, agents.d_z)
        dyad_values, _ = _unique_codes(dv)
        diffs = np.round(draw.z_dyad.reshape(-1, agents.d_z), 9)
        lookup = {tuple(r): k for k, r in enumerate(dyad_values.tolist())}
        dyad_codes = np.array([lookup[tuple(r)] for r in diffs.tolist()]).reshape(n, n)
    else:
        z_values, z_codes = _unique_codes(agents.Z)
        dyad_values, inv = _unique_codes(draw.z_dyad.reshape(-1, agents.d_z))
        dyad_codes = inv.reshape(n, n)
    parts = [draw.z_dyad]
    if draw.x_dyad is not None:
        parts.append(np.asarray(draw.x_dyad, dtype=float)[:, :, None])
    W = np.concatenate(parts, axis=2)
    Y = draw.network.adjacency.astype(bool)
    return DrawEncoding(z_codes.astype(np.int64), z_values, dyad_codes.astype(np.int64), dyad_values, W, Y)


def theta_vector(theta: Theta, width: int) -> np.ndarray:
    v = theta.as_vector()
    if v.size != width:
        raise ValueError(f"theta has {v.size} components but covariates have {width}")
    return v


def contrast(plus: np.ndarray, minus: np.ndarray, theta_vec: np.ndarray) -> np.ndarray:
    """``plus @ theta - minus @ theta`` computed column by column so results are reproducible bitwise."""
    a = np.zeros(plus.shape[0])
    b = np.zeros(minus.shape[0])
    for m, t in enumerate(theta_vec):
        a += plus[:, m] * t
        b += minus[:, m] * t
    return a - b


# ---------------------------------------------------------------- tables of events

@dataclass
class EventSet:
    cell: np.ndarray
    plus: np.ndarray
    minus: np.ndarray

    @classmethod
    def empty(cls, width: int) -> "EventSet":
        return cls(np.zeros(0, np.int64), np.zeros((0, width)), np.zeros((0, width)))

    def __len__(self) -> int:
        return self.cell.size

    def deltas(self, theta_vec: np.ndarray) -> np.ndarray:
        return contrast(self.plus, self.minus, theta_vec)


@dataclass
class EventTable:
    """Cells of matched units and the pattern events inside them, for one configuration.

    ``counts`` are numbers of enumerated (or sampled) units per cell. ``multiplicity`` is how
    many enumerated units represent the same physical configuration (its automorphism count),
    which is what ``cell_min`` is compared against after division.
    """

    name: str
    keys: np.ndarray
    counts: np.ndarray
    groups: np.ndarray
    T: EventSet
    F: EventSet
    width: int
    multiplicity: int = 1
    key_base: int = 0
    key_length: int = 4
    retained: int = 0
    sampled: bool = False

    def decode(self, key: int) -> tuple[int, ...]:
        digits = []
        for _ in range(self.key_length):
            key, r = divmod(int(key), self.key_base)
            digits.append(r)
        return tuple(reversed(digits))

    def restricted(self, cell_min: int) -> "EventTable":
        keep = self.counts >= cell_min * self.multiplicity
        if keep.all():
            return self
        remap = -np.ones(self.keys.size, dtype=np.int64)
        remap[keep] = np.arange(int(keep.sum()))

        def sub(ev: EventSet) -> EventSet:
            m = keep[ev.cell]
            return EventSet(remap[ev.cell[m]], ev.plus[m], ev.minus[m])

        return EventTable(self.name, self.keys[keep], self.counts[keep], self.groups[keep], sub(self.T),
                          sub(self.F), self.width, self.multiplicity, self.key_base, self.key_length,
                          self.retained, self.sampled)


def _merge_tables(parts: list[tuple[np.ndarray, np.ndarray, np.ndarray, list, list]], name, width, multiplicity,
                  key_base, key_length, retained, sampled, group_of_key) -> EventTable:
    """parts: per draw (keys, counts, ev_keys_T+F as arrays)."""
    all_keys = np.unique(np.concatenate([p[0] for p in parts])) if parts else np.zeros(0, np.int64)
    counts = np.zeros(all_keys.size, dtype=np.int64)
    t_sets, f_sets = [], []
    for keys, cnt, tset, fset in parts:
        counts[np.searchsorted(all_keys, keys)] += cnt
        t_sets.append(EventSet(np.searchsorted(all_keys, tset[0]), tset[1], tset[2]))
        f_sets.append(EventSet(np.searchsorted(all_keys, fset[0]), fset[1], fset[2]))

    def cat(sets: list[EventSet]) -> EventSet:
        if not sets:
            return EventSet.empty(width)
        return EventSet(np.concatenate([s.cell for s in sets]), np.concatenate([s.plus for s in sets]),
                        np.concatenate([s.minus for s in sets]))

    groups = group_of_key(all_keys)
    return EventTable(name, all_keys, counts, groups, cat(t_sets), cat(f_sets), width, multiplicity, key_base,
                      key_length, retained, sampled)


def _check_same_support(encodings: list[DrawEncoding]):
    first = encodings[0]
    for e in encodings[1:]:
        if e.dyad_values.shape != first.dyad_values.shape or not np.allclose(e.dyad_values, first.dyad_values):
            raise ValueError("draws must share the same covariate support to be pooled")
        if e.W.shape[2] != first.W.shape[2]:
            raise ValueError("draws carry different covariate dimensions")


def _as_list(draws) -> list[SimDraw]:
    return [draws] if isinstance(draws, SimDraw) else list(draws)


def _tetrad_key(p1, p2, m1, m2, K):
    lo_p = np.minimum(p1, p2)
    hi_p = np.maximum(p1, p2)
    lo_m = np.minimum(m1, m2)
    hi_m = np.maximum(m1, m2)
    return ((lo_p * K + hi_p) * K + lo_m) * K + hi_m


def _quadruple_chunks(n: int):
    """Sorted 4-sets of range(n), one chunk per smallest element."""
    if n < 4:
        return
    triples = np.array(list(combinations(range(n), 3)), dtype=np.int64)
    for a in range(n - 3):
        sub = triples[triples[:, 0] > a]
        yield np.column_stack([np.full(sub.shape[0], a, dtype=np.int64), sub])


def _tetrad_events_one(enc: DrawEncoding, K: int):
    Dc, Y, W = enc.dyad_codes, enc.Y, enc.W
    key_counts: dict[int, int] = {}
    use_bincount = K ** 4 <= 4_000_000
    dense = np.zeros(K ** 4, dtype=np.int64) if use_bincount else None
    t_cells, t_plus, t_minus = [], [], []
    for quad in _quadruple_chunks(enc.n):
        for o in ORIENTATIONS:
            i, j, h, k = (quad[:, o[0]], quad[:, o[1]], quad[:, o[2]], quad[:, o[3]])
            key = _tetrad_key(Dc[i, j], Dc[h, k], Dc[i, k], Dc[j, h], K)
            if use_bincount:
                dense += np.bincount(key, minlength=K ** 4)
            else:
                u, c = np.unique(key, return_counts=True)
                for kk, cc in zip(u.tolist(), c.tolist()):
                    key_counts[kk] = key_counts.get(kk, 0) + cc
            t = Y[i, j] & Y[h, k] & ~Y[i, k] & ~Y[j, h]
            if t.any():
                ii, jj, hh, kk_ = i[t], j[t], h[t], k[t]
                t_cells.append(key[t])
                t_plus.append(W[ii, jj] + W[hh, kk_])
                t_minus.append(W[ii, kk_] + W[jj, hh])
    if use_bincount:
        keys = np.flatnonzero(dense)
        counts = dense[keys]
    else:
        keys = np.array(sorted(key_counts), dtype=np.int64)
        counts = np.array([key_counts[k] for k in keys.tolist()], dtype=np.int64)
    width = W.shape[2]
    if t_cells:
        tc = np.concatenate(t_cells)
        tp = np.concatenate(t_plus)
        tm = np.concatenate(t_minus)
    else:
        tc, tp, tm = np.zeros(0, np.int64), np.zeros((0, width)), np.zeros((0, width))
    # a flipped pattern on (i, j, h, k) is the tetrad pattern on (i, k, h, j):
    # swap the positive and negative pairs of the key and of the covariate sums
    d3, rem = np.divmod(tc, K ** 2)
    fc = rem * K ** 2 + d3
    return keys, counts, (tc, tp, tm), (fc, tm.copy(), tp.copy())


def tetrad_table(draws, name: str = "tetrad") -> EventTable:
    """Enumerate all oriented tetrads (six per 4-set) of one or several draws."""
    draws = _as_list(draws)
    encs = [encode_draw(d) for d in draws]
    _check_same_support(encs)
    K = max(int(encs[0].dyad_values.shape[0]), 1)
    parts = [_tetrad_events_one(e, K) for e in encs]
    return _merge_tables(parts, name, encs[0].W.shape[2], 1, K, 4, 0, False,
                         lambda keys: np.zeros(keys.size, dtype=np.int64))


# ---------------------------------------------------------------- general configurations

def config_automorphisms(cfg: WeightedLinkConfig) -> list[tuple[int, ...]]:
    """Slot permutations mapping every link onto a link with the same weight."""
    m = len(cfg.agents)
    links = cfg.slot_links()
    weight = {frozenset(l): w for l, w in zip(links, cfg.weights)}
    out = []
    for perm in permutations(range(m)):
        if all(weight.get(frozenset((perm[a], perm[b]))) == w for (a, b), w in zip(links, cfg.weights)):
            out.append(perm)
    return out


def _ordered_tuples(n: int, m: int, max_tuples: int, rng: np.random.Generator):
    total = math.perm(n, m)
    if total <= max_tuples:
        perms = np.array(list(permutations(range(m))), dtype=np.int64)
        combos = np.array(list(combinations(range(n), m)), dtype=np.int64).reshape(-1, m)
        step = max(1, 250_000 // max(len(perms), 1))
        for s in range(0, combos.shape[0], step):
            c = combos[s:s + step]
            yield c[:, perms].reshape(-1, m)
        return
    left = max_tuples
    while left > 0:
        draw = rng.integers(0, n, size=(min(left, 250_000) * 2, m))
        srt = np.sort(draw, axis=1)
        ok = np.all(srt[:, 1:] != srt[:, :-1], axis=1)
        draw = draw[ok][:left]
        left -= draw.shape[0]
        yield draw


def _sorted_weighted_sum(W: np.ndarray, tuples: np.ndarray, links, weights) -> np.ndarray:
    """Order-independent sum of |w_e| * covariates over the given links."""
    if not links:
        return np.zeros((tuples.shape[0], W.shape[2]))
    stack = np.stack([abs(w) * W[tuples[:, a], tuples[:, b]] for (a, b), w in zip(links, weights)], axis=1)
    stack = np.sort(stack, axis=1)
    out = stack[:, 0].copy()
    for q in range(1, stack.shape[1]):
        out += stack[:, q]
    return out


def config_table(draws, cfg: WeightedLinkConfig, max_tuples: int = DEFAULT_MAX_TUPLES, seed: int = 0) -> EventTable:
    """Enumerate ordered agent tuples matching the slots of ``cfg`` and record pattern events.

    Cells are keyed by the characteristics of retained agents followed by the dyadic covariate
    codes of every link, canonicalised over the configuration's automorphisms. Groups collect
    cells sharing the retained agents' characteristics; restrictions take sup/inf within a group.
    Above ``max_tuples`` ordered tuples per draw, a seeded uniform sample is used instead.
    """
    draws = _as_list(draws)
    encs = [encode_draw(d) for d in draws]
    _check_same_support(encs)
    m = len(cfg.agents)
    slots = cfg.slot_links()
    S_R, _ = retained_and_differenced(cfg)
    pos = {a: p for p, a in enumerate(cfg.agents)}
    R = [pos[a] for a in S_R]
    if all(w > 0 for w in cfg.weights) and len(S_R) == m:
        warnings.warn(f"configuration {cfg.name or cfg.links} differences nothing out; "
                      "its bounds alone carry no restriction", stacklevel=2)
    autos = config_automorphisms(cfg)
    link_index = {frozenset(l): q for q, l in enumerate(slots)}
    r = len(R)
    # where each key position comes from under each automorphism
    perm_idx = []
    for perm in autos:
        idx = [R.index(perm[s]) for s in R] + [r + link_index[frozenset((perm[a], perm[b]))] for a, b in slots]
        perm_idx.append(idx)
    perm_idx = np.array(perm_idx, dtype=np.int64)
    Kz = max(int(encs[0].z_values.shape[0]), 1)
    Kd = max(int(encs[0].dyad_values.shape[0]), 1)
    K = Kd if r == 0 else max(Kz, Kd)
    L = r + len(slots)
    if L * math.log2(K) >= 62:
        raise ValueError("configuration too large for integer cell keys")
    powers = K ** np.arange(L - 1, -1, -1, dtype=np.int64)
    plus_links = [(l, w) for l, w in zip(slots, cfg.weights) if w > 0]
    minus_links = [(l, w) for l, w in zip(slots, cfg.weights) if w < 0]
    rng = np.random.default_rng(seed)
    parts = []
    sampled = False
    for enc in encs:
        if math.perm(enc.n, m) > max_tuples:
            sampled = True
        keys_acc, t_acc, f_acc = [], [], []
        for tup in _ordered_tuples(enc.n, m, max_tuples, rng):
            vec = np.empty((tup.shape[0], L), dtype=np.int64)
            for q, s in enumerate(R):
                vec[:, q] = enc.z_codes[tup[:, s]]
            for q, (a, b) in enumerate(slots):
                vec[:, r + q] = enc.dyad_codes[tup[:, a], tup[:, b]]
            key = None
            for idx in perm_idx:
                cand = vec[:, idx] @ powers
                key = cand if key is None else np.minimum(key, cand)
            keys_acc.append(key)
            t = np.ones(tup.shape[0], dtype=bool)
            f = np.ones(tup.shape[0], dtype=bool)
            for (a, b), w in zip(slots, cfg.weights):
                y = enc.Y[tup[:, a], tup[:, b]]
                if w > 0:
                    t &= y
                    f &= ~y
                else:
                    t &= ~y
                    f &= y
            for mask, acc in ((t, t_acc), (f, f_acc)):
                if mask.any():
                    sub = tup[mask]
                    acc.append((key[mask],
                                _sorted_weighted_sum(enc.W, sub, [l for l, _ in plus_links], [w for _, w in plus_links]),
                                _sorted_weighted_sum(enc.W, sub, [l for l, _ in minus_links], [w for _, w in minus_links])))
        all_keys = np.concatenate(keys_acc) if keys_acc else np.zeros(0, np.int64)
        uk, uc = np.unique(all_keys, return_counts=True)
        width = enc.W.shape[2]

        def stack(acc):
            if not acc:
                return np.zeros(0, np.int64), np.zeros((0, width)), np.zeros((0, width))
            return (np.concatenate([a[0] for a in acc]), np.concatenate([a[1] for a in acc]),
                    np.concatenate([a[2] for a in acc]))

        parts.append((uk, uc, stack(t_acc), stack(f_acc)))

    def group_of_key(keys: np.ndarray) -> np.ndarray:
        if r == 0:
            return np.zeros(keys.size, dtype=np.int64)
        prefix = keys // (K ** (L - r))
        _, g = np.unique(prefix, return_inverse=True)
        return g.reshape(-1).astype(np.int64)

    return _merge_tables(parts, cfg.name or "config", encs[0].W.shape[2], len(autos), K, L, r, sampled, group_of_key)


# ---------------------------------------------------------------- bounds at a parameter value

@dataclass
class TetradCell:
    zeta: tuple
    count: int
    n_tetrad: int
    n_flipped: int


@dataclass
class BoundTable:
    """An event table evaluated at one parameter value: sorted contrasts per cell."""

    table: EventTable
    theta: Theta
    t_cell: np.ndarray
    t_delta: np.ndarray
    f_cell: np.ndarray
    f_delta: np.ndarray

    @property
    def counts(self) -> np.ndarray:
        return self.table.counts

    @property
    def keys(self) -> np.ndarray:
        return self.table.keys

    def cells(self) -> list[TetradCell]:
        nt = np.bincount(self.t_cell, minlength=self.keys.size)
        nf = np.bincount(self.f_cell, minlength=self.keys.size)
        mult = self.table.multiplicity
        return [TetradCell(self.table.decode(k), int(c) // mult, int(a) // mult, int(b) // mult)
                for k, c, a, b in zip(self.keys.tolist(), self.counts.tolist(), nt.tolist(), nf.tolist())]

    def p_lower(self, c_grid) -> np.ndarray:
        """(cells, len(c_grid)) array of cell means of pattern * 1{contrast <= c}."""
        c_grid = np.atleast_1d(np.asarray(c_grid, dtype=float))
        out = np.empty((self.keys.size, c_grid.size))
        for q, c in enumerate(c_grid):
            hit = np.bincount(self.t_cell[self.t_delta <= c], minlength=self.keys.size)
            out[:, q] = hit / self.counts
        return out

    def p_upper(self, c_grid) -> np.ndarray:
        """(cells, len(c_grid)) array of 1 - cell means of flipped * 1{contrast > c}."""
        c_grid = np.atleast_1d(np.asarray(c_grid, dtype=float))
        out = np.empty((self.keys.size, c_grid.size))
        for q, c in enumerate(c_grid):
            hit = np.bincount(self.f_cell[self.f_delta > c], minlength=self.keys.size)
            out[:, q] = 1.0 - hit / self.counts
        return out

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([self.t_delta, self.f_delta]))


def evaluate_table(table: EventTable, theta: Theta, cell_min: int = DEFAULT_CELL_MIN) -> BoundTable:
    tab = table.restricted(cell_min)
    if tab.keys.size == 0:
        raise ValueError(f"insufficient data: no cell of '{table.name}' has at least {cell_min} matched units")
    tv = theta_vector(theta, tab.width)
    return BoundTable(tab, theta, tab.T.cell, tab.T.deltas(tv), tab.F.cell, tab.F.deltas(tv))


def estimate_pL_pU(draws_or_table, theta: Theta, c_grid=None, cell_min: int = DEFAULT_CELL_MIN):
    """Per-cell lower/upper bound estimates.

    Returns the :class:`BoundTable`; when ``c_grid`` is given, also the (p_L, p_U) arrays.
    """
    table = draws_or_table if isinstance(draws_or_table, EventTable) else tetrad_table(draws_or_table)
    bt = evaluate_table(table, theta, cell_min)
    if c_grid is None:
        return bt
    return bt, bt.p_lower(c_grid), bt.p_upper(c_grid)


# ---------------------------------------------------------------- criteria

@dataclass
class CriterionResult:
    theta: Theta
    q_value: float
    binding: list = field(default_factory=list)
    in_identified_set: bool = False

    def __post_init__(self):
        self.in_identified_set = bool(self.q_value <= 0)


def _runs(cell: np.ndarray, delta: np.ndarray):
    """Sort events by (cell, contrast); return order and per-event count of events <= / >= it in its cell."""
    order = np.lexsort((delta, cell))
    c = cell[order]
    d = delta[order]
    m = c.size
    new_cell = np.r_[True, c[1:] != c[:-1]]
    new_run = np.r_[True, (c[1:] != c[:-1]) | (d[1:] != d[:-1])]
    cell_start_pos = np.flatnonzero(new_cell)
    cell_id = np.cumsum(new_cell) - 1
    cell_start = cell_start_pos[cell_id]
    cell_end = np.r_[cell_start_pos[1:], m][cell_id]
    run_start_pos = np.flatnonzero(new_run)
    run_id = np.cumsum(new_run) - 1
    run_start = run_start_pos[run_id]
    run_end = np.r_[run_start_pos[1:], m][run_id]
    n_le = run_end - cell_start
    n_ge = cell_end - run_start
    return c, d, n_le, n_ge


def _lower_profile(bt: BoundTable, mask_cells=None):
    """Running max over cells of p_L at each distinct T contrast (ascending)."""
    cell, delta = bt.t_cell, bt.t_delta
    if mask_cells is not None:
        keep = mask_cells[cell]
        cell, delta = cell[keep], delta[keep]
    if cell.size == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0, np.int64)
    c, d, n_le, _ = _runs(cell, delta)
    val = n_le / bt.counts[c]
    order = np.argsort(d, kind="stable")
    d_s, v_s, c_s = d[order], val[order], c[order]
    run_max = np.maximum.accumulate(v_s)
    arg = _running_argmax(v_s)
    last = np.r_[d_s[1:] != d_s[:-1], True]
    return d_s[last], run_max[last], c_s[arg[last]]


def _running_argmax(v: np.ndarray) -> np.ndarray:
    idx = np.arange(v.size)
    run = np.maximum.accumulate(v)
    is_new = np.r_[True, v[1:] > run[:-1]]
    return np.maximum.accumulate(np.where(is_new, idx, 0))


def _upper_profile(bt: BoundTable, mask_cells=None):
    """F events ascending with v_e = share of flipped units in the cell with contrast >= own."""
    cell, delta = bt.f_cell, bt.f_delta
    if mask_cells is not None:
        keep = mask_cells[cell]
        cell, delta = cell[keep], delta[keep]
    if cell.size == 0:
        return np.zeros(0), np.zeros(0), np.zeros(0, np.int64)
    c, d, _, n_ge = _runs(cell, delta)
    val = n_ge / bt.counts[c]
    order = np.argsort(d, kind="stable")
    return d[order], val[order], c[order]


def _suffix_max(v: np.ndarray):
    if v.size == 0:
        return v, np.zeros(0, np.int64)
    rev = v[::-1]
    mx = np.maximum.accumulate(rev)[::-1]
    arg = (v.size - 1 - _running_argmax(rev))[::-1]
    return mx, arg


def _segmented_cummax(v: np.ndarray, seg: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Running max and its argmax, restarting at each segment; ``seg`` must be nondecreasing.

    Values are replaced by integer ranks offset per segment so the scan stays exact.
    """
    uniq, rank = np.unique(v, return_inverse=True)
    key = rank.reshape(-1).astype(np.int64) + seg.astype(np.int64) * (uniq.size + 1)
    run = np.maximum.accumulate(key)
    is_new = np.r_[True, key[1:] > run[:-1]]
    arg = np.maximum.accumulate(np.where(is_new, np.arange(v.size), 0))
    return v[arg], arg


def criterion_nonparametric(bt: BoundTable) -> CriterionResult:
    """sup_c [sup_cell p_L - inf_cell p_U] within each group, then the max over groups.

    p_L only rises at T contrasts and p_U only rises at F contrasts, so the supremum over c
    is attained at c = -inf or at one of the T contrasts; both are evaluated exactly. All
    groups are handled at once by sorting events on (group, contrast).
    """
    groups = bt.table.groups
    best, binding = -1.0, (None, -math.inf)

    # F side: per event, the share of flipped units in its cell at or above its contrast
    f_cell = np.zeros(0, np.int64)
    if bt.f_cell.size:
        c, d, _, n_ge = _runs(bt.f_cell, bt.f_delta)
        g = groups[c]
        order = np.lexsort((d, g))
        f_cell, f_d, f_g, f_v = c[order], d[order], g[order], (n_ge / bt.counts[c])[order]
        # suffix max within each group, via a running max on the reversed sequence
        rg = f_g[::-1]
        suf, rev_arg = _segmented_cummax(f_v[::-1], rg.max() - rg)
        f_suf, f_arg = suf[::-1], (f_v.size - 1 - rev_arg)[::-1]
        starts = np.flatnonzero(np.r_[True, f_g[1:] != f_g[:-1]])
        k = int(np.argmax(f_suf[starts]))
        if f_suf[starts[k]] - 1.0 > best:
            best, binding = float(f_suf[starts[k]]) - 1.0, (int(f_cell[f_arg[starts[k]]]), -math.inf)

    if bt.t_cell.size:
        c, d, n_le, _ = _runs(bt.t_cell, bt.t_delta)
        g = groups[c]
        order = np.lexsort((d, g))
        t_cell, t_d, t_g, t_v = c[order], d[order], g[order], (n_le / bt.counts[c])[order]
        t_max, t_arg = _segmented_cummax(t_v, t_g)
        last = np.r_[(t_d[1:] != t_d[:-1]) | (t_g[1:] != t_g[:-1]), True]
        t_d, t_g, t_max, t_arg = t_d[last], t_g[last], t_max[last], t_arg[last]
        gval = np.zeros(t_d.size)
        if f_cell.size:
            # first F event in the same group with contrast strictly above t
            kd = np.concatenate([f_d, t_d])
            kg = np.concatenate([f_g, t_g])
            kind = np.r_[np.zeros(f_d.size, np.int8), np.ones(t_d.size, np.int8)]
            merged = np.lexsort((kind, kd, kg))
            is_f = merged < f_d.size
            # index of the next F event at or after each merged position
            nxt = np.where(is_f, merged, np.iinfo(np.int64).max)
            nxt = np.minimum.accumulate(nxt[::-1])[::-1]
            nxt = np.r_[nxt[1:], np.iinfo(np.int64).max]
            q_pos = np.flatnonzero(~is_f)
            q_idx = merged[q_pos] - f_d.size
            cand = nxt[q_pos]
            ok = cand < f_d.size
            ok[ok] = f_g[cand[ok]] == t_g[q_idx[ok]]
            gval[q_idx[ok]] = f_suf[cand[ok]]
        vals = t_max + gval - 1.0
        q = int(np.argmax(vals))
        if vals[q] > best:
            best, binding = float(vals[q]), (int(t_cell[t_arg[q]]), float(t_d[q]))
    cell = binding[0]
    return CriterionResult(bt.theta, best, [(bt.table.decode(bt.keys[cell]) if cell is not None else None,
                                             binding[1])])


def criterion_parametric(bt: BoundTable, F_delta: DeltaDistribution | None = None) -> CriterionResult:
    """sup_c max{sup_cell p_L - F(c), F(c) - inf_cell p_U}.

    The c -> -inf and c -> +inf limits make this nonnegative, so membership means Q == 0.
    The first branch peaks at T contrasts; the second approaches its supremum from the left
    of each F contrast, where p_U has not yet jumped.
    """
    if bt.table.retained:
        raise ValueError("the parametric criterion applies to configurations that difference out all fixed effects")
    F = F_delta or default_delta()
    best, binding = 0.0, []
    t_d, t_max, t_arg = _lower_profile(bt)
    if t_d.size:
        vals = t_max - F.cdf(t_d)
        q = int(np.argmax(vals))
        if vals[q] > best:
            best, binding = float(vals[q]), [(bt.table.decode(bt.keys[t_arg[q]]), float(t_d[q]), "lower")]
    f_d, f_v, f_cell = _upper_profile(bt)
    if f_d.size:
        first = np.r_[True, f_d[1:] != f_d[:-1]]
        suf, arg = _suffix_max(f_v)
        u = f_d[first]
        vals = F.cdf(u) + suf[first] - 1.0
        q = int(np.argmax(vals))
        if vals[q] > best:
            cell = f_cell[arg[first][q]]
            best, binding = float(vals[q]), [(bt.table.decode(bt.keys[cell]), float(u[q]), "upper")]
    return CriterionResult(bt.theta, best, binding)


# ---------------------------------------------------------------- tetrad primitives on a draw

def _check_tetrad(tetrad):
    if len(set(tetrad)) != 4:
        raise ValueError("tetrad agents must be distinct")


def tetrad_indicator_terms(draw: SimDraw, tetrad, theta: Theta) -> tuple[bool, bool, float]:
    i, j, h, k = tetrad
    _check_tetrad(tetrad)
    Y = draw.network.adjacency
    pattern = bool(Y[i, j] and Y[h, k] and not Y[i, k] and not Y[j, h])
    flipped = bool(not Y[i, j] and not Y[h, k] and Y[i, k] and Y[j, h])
    enc = encode_draw(draw)
    W = enc.W
    tv = theta_vector(theta, W.shape[2])
    d = contrast((W[i, j] + W[h, k])[None], (W[i, k] + W[j, h])[None], tv)
    return pattern, flipped, float(d[0])


def shock_contrast(draw: SimDraw, tetrad) -> float:
    """Shock contrast in the threshold convention: -(e_ij + e_hk - e_ik - e_jh)."""
    i, j, h, k = tetrad
    e = draw.shocks.eps
    return float(-(e[i, j] + e[h, k] - e[i, k] - e[j, h]))


def pointwise_violations(draw: SimDraw, theta: Theta, c_grid=None) -> tuple[int, int]:
    """Count (tetrad, c) pairs where pattern * 1{index contrast <= c} > 1{shock contrast <= c}.

    By default c runs over all realized index contrasts of the draw's oriented tetrads at
    ``theta`` that show the pattern. Returns (violations, pairs checked).
    """
    enc = encode_draw(draw)
    W, Y, e = enc.W, enc.Y, draw.shocks.eps
    tv = theta_vector(theta, W.shape[2])
    deltas, shocks = [], []
    total_tetrads = 0
    for quad in _quadruple_chunks(enc.n):
        for o in ORIENTATIONS:
            i, j, h, k = (quad[:, o[0]], quad[:, o[1]], quad[:, o[2]], quad[:, o[3]])
            total_tetrads += i.size
            t = Y[i, j] & Y[h, k] & ~Y[i, k] & ~Y[j, h]
            if t.any():
                ii, jj, hh, kk = i[t], j[t], h[t], k[t]
                deltas.append(contrast(W[ii, jj] + W[hh, kk], W[ii, kk] + W[jj, hh], tv))
                shocks.append(-(e[ii, jj] + e[hh, kk] - e[ii, kk] - e[jj, hh]))
    if not deltas:
        return 0, 0
    d = np.concatenate(deltas)
    s = np.concatenate(shocks)
    grid = np.unique(d) if c_grid is None else np.sort(np.asarray(c_grid, dtype=float))
    # violation at c iff d <= c < s
    lo = np.searchsorted(grid, d, side="left")
    hi = np.searchsorted(grid, s, side="left")
    bad = int(np.maximum(hi - lo, 0).sum())
    return bad, total_tetrads * grid.size


# ---------------------------------------------------------------- general bounds and aggregation

@dataclass
class GeneralBoundResult:
    config: WeightedLinkConfig
    conditioning: tuple
    c: float
    lower: float
    upper: float


def general_cycle_bounds(draws_or_table, config: WeightedLinkConfig, theta: Theta, c: float,
                         z_conditioning=None, cell_min: int = DEFAULT_CELL_MIN,
                         max_tuples: int = DEFAULT_MAX_TUPLES) -> list[GeneralBoundResult]:
    """Lower and upper bounds per value of the retained agents' characteristics.

    ``lower`` is the sup over profiled cells of the pattern mean below ``c``; ``upper`` is one
    minus the sup of the flipped mean above ``c``. ``z_conditioning`` selects one group by the
    retained agents' characteristic codes.
    """
    table = draws_or_table if isinstance(draws_or_table, EventTable) else config_table(draws_or_table, config, max_tuples)
    bt = evaluate_table(table, theta, cell_min)
    pl = bt.p_lower([c])[:, 0]
    pu = bt.p_upper([c])[:, 0]
    groups = bt.table.groups
    out = []
    r = bt.table.retained
    for g in np.unique(groups):
        sel = groups == g
        key = bt.table.decode(bt.keys[np.flatnonzero(sel)[0]])
        zr = key[:r]
        if z_conditioning is not None and tuple(z_conditioning) != zr:
            continue
        out.append(GeneralBoundResult(config, (zr, "profiled"), float(c), float(pl[sel].max()), float(pu[sel].min())))
    return out


def triad_bound_terms(draws_or_table, theta: Theta, c: float, kind: str, z_conditioning=None,
                      cell_min: int = DEFAULT_CELL_MIN) -> list[GeneralBoundResult]:
    from .model import three_link_triad_config, two_link_triad_config
    kinds = {"three_link": three_link_triad_config, "two_link": two_link_triad_config}
    if kind not in kinds:
        raise ValueError(f"kind must be one of {sorted(kinds)}")
    return general_cycle_bounds(draws_or_table, kinds[kind](), theta, c, z_conditioning, cell_min)


def build_tables(draws, configs: Iterable[WeightedLinkConfig], max_tuples: int = DEFAULT_MAX_TUPLES,
                 seed: int = 0) -> list[EventTable]:
    """Tables for each configuration; the tetrad uses its dedicated enumerator."""
    out = []
    for cfg in configs:
        if cfg.name == "tetrad":
            out.append(tetrad_table(draws))
        else:
            out.append(config_table(draws, cfg, max_tuples, seed))
    return out


@dataclass
class AggregateResult:
    theta_grid: list[Theta]
    q_values: np.ndarray
    per_config: dict[str, np.ndarray]
    retained: list[Theta]


def aggregate_identified_set(theta_grid: Sequence[Theta], configs: Sequence[WeightedLinkConfig] | None = None,
                             draws=None, tables: Sequence[EventTable] | None = None,
                             cell_min: int = DEFAULT_CELL_MIN) -> AggregateResult:
    """Keep theta iff the max over configurations of their nonparametric criteria is <= 0."""
    if tables is None:
        if draws is None or configs is None:
            raise ValueError("need draws and configs, or prebuilt tables")
        tables = build_tables(draws, configs)
    per = {}
    usable = []
    for t in tables:
        if np.any(t.counts >= cell_min * t.multiplicity):
            usable.append(t)
        else:
            warnings.warn(f"configuration '{t.name}' has no cell with {cell_min} units; skipped", stacklevel=2)
    if not usable:
        raise ValueError("insufficient data for every configuration")
    for t in usable:
        per[t.name] = np.array([criterion_nonparametric(evaluate_table(t, th, cell_min)).q_value for th in theta_grid])
    q = np.max(np.vstack(list(per.values())), axis=0)
    kept = [th for th, v in zip(theta_grid, q) if v <= 0]
    return AggregateResult(list(theta_grid), q, per, kept)
