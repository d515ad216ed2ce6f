"""Random resistor network relaxed by synchronous local Kirchhoff updates.

An L x L node lattice carries random bond conductances.  The top row is held
at potential 1, the bottom row at 0, and the lattice wraps horizontally
(bus-bar geometry).  One relaxation step replaces every interior potential
with the conductance-weighted average of its neighbors, computed from the
previous sweep only (Jacobi), so results do not depend on visitation order.
The per-sweep observable is the mean absolute potential change over interior
nodes, the direct analog of the wealth-model observable.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameter
from .relaxation import RelaxationSeries
from .streams import RngStream

G_FLOOR = 1e-9  # excludes zero-conductance bonds so no node is isolated

INIT_HALF = "half"
INIT_RAMP = "ramp"
INIT_RANDOM = "random"
LATTICE_INITS = (INIT_HALF, INIT_RAMP, INIT_RANDOM)


@dataclass
class ResistorLattice:
    """Node potentials plus bond conductances on the wrapped square lattice.

    ``cond_h[r, c]`` joins (r, c) to (r, (c+1) mod L); ``cond_v[r, c]`` joins
    (r, c) to (r+1, c).  Rows 0 and L-1 are boundary rows and never change.
    """

    side: int
    potential: np.ndarray
    cond_h: np.ndarray
    cond_v: np.ndarray
    g_window: tuple[float, float]
    weight_sum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.weight_sum = (
            self.cond_v[:-1, :]
            + self.cond_v[1:, :]
            + self.cond_h[1:-1, :]
            + np.roll(self.cond_h[1:-1, :], 1, axis=1)
        )

    def n_interior(self) -> int:
        return (self.side - 2) * self.side


def build_lattice(
    L: int,
    g_window: tuple[float, float],
    rng: RngStream,
    init: str = INIT_HALF,
) -> ResistorLattice:
    """Sample bond conductances uniformly in (max(g_min, 1e-9), g_max].

    The half-open orientation keeps every bond strictly positive even for a
    window starting at 0.  Horizontal bonds are drawn before vertical ones.
    """
    if L < 3:
        raise InvalidParameter(f"lattice side {L} leaves no interior rows; need L >= 3")
    g_min, g_max = g_window
    if not (0.0 <= g_min < g_max):
        raise InvalidParameter(f"conductance window ({g_min}, {g_max}) invalid")
    if init not in LATTICE_INITS:
        raise InvalidParameter(f"unknown lattice init {init!r}")

    g = rng.gen
    lo = max(g_min, G_FLOOR)
    # u in [0,1) mapped to (lo, g_max]
    cond_h = g_max - g.random((L, L)) * (g_max - lo)
    cond_v = g_max - g.random((L - 1, L)) * (g_max - lo)

    potential = np.empty((L, L))
    if init == INIT_HALF:
        potential[:] = 0.5
    elif init == INIT_RAMP:
        potential[:] = (1.0 - np.arange(L) / (L - 1))[:, None]
    else:
        potential[1:-1, :] = g.random((L - 2, L))
    potential[0, :] = 1.0
    potential[-1, :] = 0.0
    return ResistorLattice(
        side=L, potential=potential, cond_h=cond_h, cond_v=cond_v, g_window=g_window
    )


def relax_sweep(lat: ResistorLattice) -> float:
    """One synchronous sweep; every interior node moves to the weighted average
    of its neighbors from the previous sweep.  Updates in place and returns the
    mean absolute potential change over interior nodes.
    """
    V = lat.potential
    inner = V[1:-1, :]
    gh = lat.cond_h[1:-1, :]
    num = (
        lat.cond_v[:-1, :] * V[:-2, :]
        + lat.cond_v[1:, :] * V[2:, :]
        + gh * np.roll(inner, -1, axis=1)
        + np.roll(gh, 1, axis=1) * np.roll(inner, 1, axis=1)
    )
    new_inner = num / lat.weight_sum
    x = float(np.abs(new_inner - inner).mean())
    V[1:-1, :] = new_inner
    return x


def node_current_residuals(lat: ResistorLattice) -> np.ndarray:
    """Net current into each interior node, sum_nb g_nb (V_nb - V_node).

    Zero everywhere exactly at the Kirchhoff solution.
    """
    V = lat.potential
    inner = V[1:-1, :]
    gh = lat.cond_h[1:-1, :]
    inflow = (
        lat.cond_v[:-1, :] * V[:-2, :]
        + lat.cond_v[1:, :] * V[2:, :]
        + gh * np.roll(inner, -1, axis=1)
        + np.roll(gh, 1, axis=1) * np.roll(inner, 1, axis=1)
    )
    return inflow - lat.weight_sum * inner


def solve_kirchhoff_dense(lat: ResistorLattice) -> np.ndarray:
    """Exact interior potentials by direct dense solve of the Kirchhoff system.

    Independent of the sweep iteration; assembles the (n_interior x n_interior)
    conductance matrix explicitly and calls a dense linear solver.  Intended as
    a cross-check at small L.
    """
    L = lat.side
    n_rows = L - 2
    n = n_rows * L
    A = np.zeros((n, n))
    b = np.zeros(n)

    def k_of(r: int, c: int) -> int:
        return (r - 1) * L + c

    for r in range(1, L - 1):
        for c in range(L):
            k = k_of(r, c)
            neighbors = (
                (r - 1, c, lat.cond_v[r - 1, c]),
                (r + 1, c, lat.cond_v[r, c]),
                (r, (c + 1) % L, lat.cond_h[r, c]),
                (r, (c - 1) % L, lat.cond_h[r, (c - 1) % L]),
            )
            for rr, cc, g in neighbors:
                A[k, k] -= g
                if rr == 0:
                    b[k] -= g * 1.0
                elif rr == L - 1:
                    b[k] -= g * 0.0
                else:
                    A[k, k_of(rr, cc)] += g
    v = np.linalg.solve(A, b)
    return v.reshape(n_rows, L)


def _realization_series(args) -> np.ndarray:
    L, g_window, t_max, master_seed, stream_index, init = args
    lat = build_lattice(L, g_window, RngStream(master_seed, stream_index), init=init)
    xs = np.empty(t_max)
    for t in range(t_max):
        xs[t] = relax_sweep(lat)
    return xs


def run_rrn_relaxation(
    L: int,
    g_window: tuple[float, float],
    t_max: int,
    n_configs: int,
    master_seed: int,
    workers: int = 1,
    init: str = INIT_HALF,
) -> RelaxationSeries:
    """Average the sweep observable over independent conductance realizations.

    One time step equals one full lattice sweep.  Reduction order is fixed by
    stream index, so worker count does not change the result.
    """
    if t_max < 2:
        raise InvalidParameter(f"t_max={t_max} must be >= 2")
    if n_configs < 1:
        raise InvalidParameter(f"n_configs={n_configs} must be >= 1")

    jobs = [(L, g_window, t_max, master_seed, c, init) for c in range(n_configs)]
    if workers > 1 and n_configs > 1:
        chunk = max(1, n_configs // (workers * 4))
        with multiprocessing.Pool(workers) as pool:
            traces = pool.map(_realization_series, jobs, chunksize=chunk)
    else:
        traces = [_realization_series(job) for job in jobs]

    acc = np.zeros(t_max)
    for xs in traces:
        acc += xs
    return RelaxationSeries(
        t=np.arange(1, t_max + 1),
        x_mean=acc / n_configs,
        n_configs=n_configs,
        n_agents=(L - 2) * L,
        master_seed=master_seed,
        spec_snapshot=None,
        spec_digest=f"rrn-L{L}-g{g_window[0]:g}-{g_window[1]:g}",
    )
