"""Equilibrium wealth sampling: pooled histograms and propensity-binned means."""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter
from .exchange import ModelSpec, init_ensemble, run_time_step
from .expfit import _linear_fit
from .streams import RngStream


@dataclass
class EquilibriumSample:
    """Post-equilibration state pooled over configurations."""

    wealth: np.ndarray          # final snapshot per agent, all configs
    saving: np.ndarray          # quenched propensity per agent, all configs
    wealth_time_avg: np.ndarray  # per-agent wealth averaged over sample steps
    n_configs: int
    n_agents: int


def _equilibrium_worker(args) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    spec, n, equil_steps, sample_steps, master_seed, c = args
    rng = RngStream(master_seed, c)
    ens = init_ensemble(spec, n, rng)
    for _ in range(equil_steps):
        run_time_step(ens, spec, rng)
    if sample_steps <= 0:
        return ens.wealth.copy(), ens.saving.copy(), ens.wealth.copy()
    acc = np.zeros(n)
    for _ in range(sample_steps):
        run_time_step(ens, spec, rng)
        acc += ens.wealth
    return ens.wealth.copy(), ens.saving.copy(), acc / sample_steps


def run_equilibrium(
    spec: ModelSpec,
    n: int,
    equil_steps: int,
    sample_steps: int,
    n_configs: int,
    master_seed: int,
    workers: int = 1,
) -> EquilibriumSample:
    """Equilibrate each configuration, then pool final and time-averaged wealth."""
    if n_configs < 1:
        raise InvalidParameter(f"n_configs={n_configs} must be >= 1")
    spec.validate()
    jobs = [(spec, n, equil_steps, sample_steps, master_seed, c) for c in range(n_configs)]
    if workers > 1 and n_configs > 1:
        chunk = max(1, n_configs // (workers * 4))
        with multiprocessing.Pool(workers) as pool:
            parts = pool.map(_equilibrium_worker, jobs, chunksize=chunk)
    else:
        parts = [_equilibrium_worker(job) for job in jobs]
    return EquilibriumSample(
        wealth=np.concatenate([p[0] for p in parts]),
        saving=np.concatenate([p[1] for p in parts]),
        wealth_time_avg=np.concatenate([p[2] for p in parts]),
        n_configs=n_configs,
        n_agents=n,
    )


def wealth_histogram(
    values: np.ndarray, bins: int = 50
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Equal-width histogram over [0, max observed]: (edges, counts, density)."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise InvalidParameter("no samples to histogram")
    vmax = float(values.max())
    if vmax <= 0.0:
        raise InvalidParameter("all samples are zero; histogram range is empty")
    counts, edges = np.histogram(values, bins=bins, range=(0.0, vmax))
    width = edges[1] - edges[0]
    density = counts / (values.size * width)
    return edges, counts, density


def fit_histogram_slope(
    edges: np.ndarray, counts: np.ndarray, min_count: int = 10
) -> tuple[float, float]:
    """Semi-log slope of the histogram over bins with enough statistics.

    Returns (slope, r_squared) of ln(density) against bin centers; an
    exponential distribution exp(-w/T)/T comes out as slope -1/T.
    """
    centers = 0.5 * (edges[:-1] + edges[1:])
    total = counts.sum()
    width = edges[1] - edges[0]
    mask = counts >= min_count
    if int(mask.sum()) < 3:
        raise InvalidParameter("too few well-populated bins for a slope fit")
    density = counts[mask] / (total * width)
    slope, _, r_squared, _ = _linear_fit(centers[mask], np.log(density))
    return slope, r_squared


def lambda_binned_means(
    saving: np.ndarray,
    wealth: np.ndarray,
    n_bins: int = 5,
    window: tuple[float, float] = (0.0, 1.0),
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Mean wealth per equal-width propensity bin: (bin_lo, bin_hi, mean)."""
    saving = np.asarray(saving, dtype=float)
    wealth = np.asarray(wealth, dtype=float)
    if saving.shape != wealth.shape:
        raise InvalidParameter("saving and wealth arrays must align")
    lo, hi = window
    edges = np.linspace(lo, hi, n_bins + 1)
    idx = np.clip(np.digitize(saving, edges) - 1, 0, n_bins - 1)
    means = np.empty(n_bins)
    for b in range(n_bins):
        sel = idx == b
        means[b] = wealth[sel].mean() if sel.any() else np.nan
    return edges[:-1], edges[1:], means
