"""Atomic file output and simple CSV import/export."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ..equilibrium import SimDraw
from ..model import AgentData, Network

CSV_SCHEMA_VERSION = 1


def atomic_write_text(path: str | Path, text: str) -> Path:
    """Write to a temporary file in the same directory, then rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (set, frozenset)):
        return sorted(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path, payload) -> Path:
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True, default=_default) + "\n")


def csv_text(header: list[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def write_csv(path, header: list[str], rows) -> Path:
    return atomic_write_text(path, csv_text(header, rows))


def write_draw(out_dir, draw: SimDraw, stem: str = "draw") -> list[Path]:
    out_dir = Path(out_dir)
    agents = draw.agents
    rows = [[i, *agents.Z[i].tolist(), float(agents.A[i])] for i in range(agents.n)]
    zcols = [f"z{m}" for m in range(agents.d_z)]
    paths = [write_csv(out_dir / f"{stem}_agents.csv", ["agent", *zcols, "A"], rows),
             write_csv(out_dir / f"{stem}_edges.csv", ["i", "j"], draw.network.edges())]
    paths.append(write_json(out_dir / f"{stem}_summary.json", {
        "schema_version": CSV_SCHEMA_VERSION, "n": draw.n, "edges": len(draw.network.edges()),
        "converged": draw.converged, "sweeps": draw.sweeps,
        "mean_degree": float(draw.network.degree().mean())}))
    return paths


def load_agents(path) -> AgentData:
    """Agent CSV with columns agent, z0..z{d-1}, A."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError("agent file is empty")
    zcols = sorted((c for c in rows[0] if c.startswith("z")), key=lambda c: int(c[1:]))
    rows.sort(key=lambda r: int(r["agent"]))
    Z = np.array([[float(r[c]) for c in zcols] for r in rows])
    A = np.array([float(r.get("A", 0.0) or 0.0) for r in rows])
    return AgentData(Z, A)


def load_edges(path, n: int) -> Network:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return Network.from_edges(n, [(int(r["i"]), int(r["j"])) for r in rows])
