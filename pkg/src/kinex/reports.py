"""CSV report writers and the run manifest.

All writers emit deterministic bytes for deterministic inputs (floats via
repr, fixed row order), which is what makes re-run digest comparison a usable
reproducibility check.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .expfit import FIT_CSV_HEADER


def content_digest(data: bytes) -> str:
    """64-bit content hash, hex-encoded."""
    return hashlib.blake2b(data, digest_size=8).hexdigest()


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def write_fit_csv(path: Path, rows: list[str], header_note: str = "") -> None:
    lines = ["# kinex fit report" + (f"; {header_note}" if header_note else "")]
    lines.append(FIT_CSV_HEADER)
    lines.extend(rows)
    write_text(path, "\n".join(lines) + "\n")


def write_hist_csv(
    path: Path,
    edges: np.ndarray,
    counts: np.ndarray,
    density: np.ndarray,
    header_note: str = "",
) -> None:
    lines = ["# kinex wealth histogram" + (f"; {header_note}" if header_note else "")]
    lines.append("bin_lo,bin_hi,count,density")
    for lo, hi, c, d in zip(edges[:-1].tolist(), edges[1:].tolist(), counts.tolist(), density.tolist()):
        lines.append(f"{lo!r},{hi!r},{c},{d!r}")
    write_text(path, "\n".join(lines) + "\n")


def write_tau_table(path: Path, rows: list[dict], header_note: str = "") -> None:
    """One row per sweep cell: window bounds, fitted decay time, fit quality."""
    lines = ["# kinex decay-time table" + (f"; {header_note}" if header_note else "")]
    lines.append("window_lo,window_hi,tau,tau_stderr,r_squared,status")
    for r in rows:
        lines.append(
            f"{r['window_lo']!r},{r['window_hi']!r},{_fmt(r.get('tau'))},"
            f"{_fmt(r.get('tau_stderr'))},{_fmt(r.get('r_squared'))},{r['status']}"
        )
    write_text(path, "\n".join(lines) + "\n")


def write_x0_table(path: Path, rows: list[dict], header_note: str = "") -> None:
    """Plateau estimates per split parameter, with the minimum marked."""
    lines = ["# kinex plateau-vs-eps table" + (f"; {header_note}" if header_note else "")]
    lines.append("eps,x0,x0_stderr,is_argmin")
    for r in rows:
        lines.append(f"{r['eps']!r},{r['x0']!r},{r['x0_stderr']!r},{int(r['is_argmin'])}")
    write_text(path, "\n".join(lines) + "\n")


def write_lambda_bins_csv(
    path: Path, bin_lo: np.ndarray, bin_hi: np.ndarray, means: np.ndarray, header_note: str = ""
) -> None:
    lines = ["# kinex propensity-binned mean wealth" + (f"; {header_note}" if header_note else "")]
    lines.append("lambda_lo,lambda_hi,mean_wealth")
    for lo, hi, m in zip(bin_lo.tolist(), bin_hi.tolist(), means.tolist()):
        lines.append(f"{lo!r},{hi!r},{m!r}")
    write_text(path, "\n".join(lines) + "\n")


def _fmt(v) -> str:
    return "" if v is None else repr(v)


@dataclass
class RunManifest:
    """Config echo, version, timestamps and per-output content digests."""

    config: dict
    experiment: str
    version: str = __version__
    started: float = field(default_factory=time.time)
    finished: float | None = None
    outputs: dict[str, str] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    def record(self, path: Path) -> None:
        self.outputs[path.name] = content_digest(path.read_bytes())

    def close(self, out_dir: Path) -> Path:
        self.finished = time.time()
        payload = {
            "experiment": self.experiment,
            "version": self.version,
            "started": self.started,
            "finished": self.finished,
            "config": self.config,
            "outputs": self.outputs,
            "notes": self.notes,
        }
        path = out_dir / "manifest.json"
        write_text(path, json.dumps(payload, indent=2, sort_keys=True, default=str) + "\n")
        return path
