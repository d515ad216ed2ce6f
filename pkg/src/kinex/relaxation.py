"""The relaxation observable and configuration-averaged relaxation series.

The observable for one time step is the mean absolute per-agent wealth change
between the step's boundary snapshots.  A relaxation run simulates many
independent initial configurations (one RNG stream each) and averages the
observable per step; the averaged series decays toward an equilibrium plateau.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InsufficientData, InvalidParameter, ShapeError
from .exchange import ModelSpec, init_ensemble, run_time_step
from .streams import RngStream

DEFAULT_TAIL_FRACTION = 0.25


@dataclass
class RelaxationSeries:
    """Configuration-averaged relaxation observable, indexed by time step."""

    t: np.ndarray
    x_mean: np.ndarray
    n_configs: int
    n_agents: int
    master_seed: int
    spec_snapshot: ModelSpec | None = None
    spec_digest: str | None = field(default=None)

    def __len__(self) -> int:
        return len(self.t)

    def digest_label(self) -> str:
        if self.spec_snapshot is not None:
            return self.spec_snapshot.digest()
        return self.spec_digest or "na"


def mean_abs_change(prev: np.ndarray, curr: np.ndarray) -> float:
    """Mean absolute per-agent change between two wealth snapshots."""
    prev = np.asarray(prev, dtype=float)
    curr = np.asarray(curr, dtype=float)
    if prev.shape != curr.shape:
        raise ShapeError(f"snapshot shapes differ: {prev.shape} vs {curr.shape}")
    if prev.size < 1:
        raise ShapeError("empty snapshots")
    return float(np.abs(curr - prev).mean())


def _config_series(args) -> np.ndarray:
    """One configuration's observable trace; top-level so Pool can pickle it."""
    spec, n, t_max, master_seed, stream_index = args
    rng = RngStream(master_seed, stream_index)
    ens = init_ensemble(spec, n, rng)
    xs = np.empty(t_max)
    for t in range(t_max):
        xs[t] = run_time_step(ens, spec, rng) / n
    return xs


def run_relaxation(
    spec: ModelSpec,
    n: int,
    t_max: int,
    n_configs: int,
    master_seed: int,
    workers: int = 1,
) -> RelaxationSeries:
    """Average the step observable over ``n_configs`` independent configurations.

    Configuration c uses stream (master_seed, c).  Results are reduced in
    stream-index order regardless of ``workers``, so any worker count yields
    bit-identical output.
    """
    if t_max < 2:
        raise InvalidParameter(f"t_max={t_max} must be >= 2")
    if n_configs < 1:
        raise InvalidParameter(f"n_configs={n_configs} must be >= 1")
    spec.validate()

    jobs = [(spec, n, t_max, master_seed, c) for c in range(n_configs)]
    if workers > 1 and n_configs > 1:
        chunk = max(1, n_configs // (workers * 4))
        with multiprocessing.Pool(workers) as pool:
            traces = pool.map(_config_series, jobs, chunksize=chunk)
    else:
        traces = [_config_series(job) for job in jobs]

    acc = np.zeros(t_max)
    for xs in traces:  # fixed order: bitwise identical for any worker count
        acc += xs
    return RelaxationSeries(
        t=np.arange(1, t_max + 1),
        x_mean=acc / n_configs,
        n_configs=n_configs,
        n_agents=n,
        master_seed=master_seed,
        spec_snapshot=spec,
    )


def _tail_slice(series: RelaxationSeries, tail_fraction: float) -> np.ndarray:
    if not 0.0 < tail_fraction <= 0.5:
        raise InvalidParameter(f"tail_fraction={tail_fraction} outside (0, 0.5]")
    if len(series) < 10:
        raise InsufficientData(f"series has {len(series)} samples, need >= 10")
    n_tail = max(1, int(round(len(series) * tail_fraction)))
    return series.x_mean[-n_tail:]


def equilibrium_window_mean(
    series: RelaxationSeries, tail_fraction: float = DEFAULT_TAIL_FRACTION
) -> float:
    """Plateau estimate: mean of the trailing ``tail_fraction`` of the series."""
    return float(_tail_slice(series, tail_fraction).mean())


def equilibrium_window_stats(
    series: RelaxationSeries, tail_fraction: float = DEFAULT_TAIL_FRACTION
) -> tuple[float, float]:
    """Plateau mean and its standard error (tail std / sqrt(tail length))."""
    tail = _tail_slice(series, tail_fraction)
    mean = float(tail.mean())
    if tail.size < 2:
        return mean, 0.0
    return mean, float(tail.std(ddof=1) / np.sqrt(tail.size))


def write_series_csv(series: RelaxationSeries, path: str | Path, extra: dict | None = None) -> None:
    """Write ``t,x_mean`` rows with a self-describing comment header.

    Output bytes are deterministic for a given series (floats via repr), so
    identical runs produce identical files.
    """
    lines = [
        "# kinex relaxation series; t in time steps, x_mean in money units per agent",
        f"# spec={series.digest_label()} seed={series.master_seed}"
        f" n={series.n_agents} n_configs={series.n_configs}",
    ]
    if extra:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in extra.items()))
    lines.append("t,x_mean")
    for t, x in zip(series.t.tolist(), series.x_mean.tolist()):
        lines.append(f"{t},{x!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_series_csv(path: str | Path) -> RelaxationSeries:
    """Read a series written by :func:`write_series_csv`."""
    meta: dict[str, str] = {}
    ts: list[int] = []
    xs: list[float] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    k, _, v = token.partition("=")
                    meta.setdefault(k, v)
            continue
        if line.startswith("t,"):
            continue
        t_str, _, x_str = line.partition(",")
        ts.append(int(t_str))
        xs.append(float(x_str))
    return RelaxationSeries(
        t=np.asarray(ts, dtype=np.int64),
        x_mean=np.asarray(xs),
        n_configs=int(meta.get("n_configs", 0) or 0),
        n_agents=int(meta.get("n", 0) or 0),
        master_seed=int(meta.get("seed", 0) or 0),
        spec_snapshot=None,
        spec_digest=meta.get("spec"),
    )
