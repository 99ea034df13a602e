"""Demand tables and SAA samples.

Every stage has its own random stream, ``SeedSequence(seed,
spawn_key=(stage,))`` on numpy's PCG64, so the draws of one stage do not
depend on which other stages were sampled or in what order.  Draws are
stored as unit deviates ``u ~ U[-1, 1]`` and scaled by each cell's expected
value, which keeps samples coupled across booking rates.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .demand import Departure, DemandSpec


def stage_rng(seed: int, stage: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stage,)))


def make_demand_spec(total_expected: float, booking_rate: float, departures, network_ods,
                     halfwidth: float = 0.2, seed: int = 0, horizon: int = None) -> DemandSpec:
    """Split ``total_expected`` over all (origin, dest, departure) cells.

    ``departures`` is a list of ``(k, latest_arrival)``.  Cell shares come from
    a symmetric Dirichlet(1) draw, so every partition of the total is equally
    likely.
    """
    if total_expected < 0:
        raise ValueError("total_expected must be >= 0")
    if not 0.0 <= booking_rate <= 1.0:
        raise ValueError("booking_rate must lie in [0, 1]")
    ods = list(network_ods)
    departures = [tuple(d) for d in departures]
    n_cells = len(ods) * len(departures)
    if n_cells == 0 and total_expected > 0:
        raise ValueError("positive demand but no OD pairs to carry it")
    if horizon is None:
        horizon = max(la for _, la in departures)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(10_000,)))
    share = rng.dirichlet(np.ones(n_cells)) if n_cells else np.zeros(0)
    amounts = total_expected * share
    deps = []
    for j, (k, la) in enumerate(departures):
        chunk = amounts[j * len(ods):(j + 1) * len(ods)]
        deps.append(Departure(k, la, tuple((r, s, float(u)) for (r, s), u in zip(ods, chunk))))
    return DemandSpec(horizon, tuple(deps), booking_rate, halfwidth)


@dataclass(frozen=True, eq=False)
class DemandSample:
    """Equiprobable realizations of the demand revealed at one stage.

    ``quantities[n, c]`` is the number of travelers for ``cells[c]`` in
    realization ``n``; ``kind`` is "prebooked", "ondemand" or "none".
    """

    stage: int
    kind: str
    cells: tuple          # ((origin, dest, k), ...)
    quantities: np.ndarray

    @property
    def size(self) -> int:
        return self.quantities.shape[0]

    @property
    def probabilities(self) -> np.ndarray:
        return np.full(self.size, 1.0 / self.size)

    def unique(self) -> "DemandSample":
        """Collapse identical realizations (zero-width noise, zero demand)."""
        if self.size > 1 and np.all(self.quantities == self.quantities[0]):
            return DemandSample(self.stage, self.kind, self.cells, self.quantities[:1])
        return self


def sample_noise(spec: DemandSpec, stage: int, count: int, seed: int = 0) -> DemandSample:
    """SAA realizations of the demand observed at ``stage``.

    Stage 1 sees the pre-booked table (all cells); a departure stage ``k``
    sees the on-demand quantities of departure ``k``; any other stage gets a
    single empty realization.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    ks = [d.k for d in spec.departures]
    if stage == 1:
        kind, rate = "prebooked", spec.booking_rate
        cells = spec.cells()
    elif stage in ks:
        kind, rate = "ondemand", 1.0 - spec.booking_rate
        cells = [c for c in spec.cells() if c[2] == stage]
    else:
        return DemandSample(stage, "none", (), np.zeros((1, 0)))
    U = rate * np.array([u for *_, u in cells], dtype=float)
    u = stage_rng(seed, stage).uniform(-1.0, 1.0, size=(count, len(cells)))
    q = U * (1.0 + spec.noise_halfwidth * u)
    q = np.clip(q, (1.0 - spec.noise_halfwidth) * U, (1.0 + spec.noise_halfwidth) * U)
    return DemandSample(stage, kind, tuple((r, s, k) for r, s, k, _ in cells), q)


def sample_all(spec: DemandSpec, count: int, seed: int = 0) -> dict:
    """Samples for stage 1 and every departure stage, keyed by stage."""
    out = {1: sample_noise(spec, 1, count, seed)}
    for d in spec.departures:
        out[d.k] = sample_noise(spec, d.k, count, seed)
    return out


def noise_to_csv(samples, path=None) -> str:
    """``stage,realization,origin,dest,quantity`` rows for audit."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["stage", "realization", "origin", "dest", "quantity"])
    for smp in samples:
        for n in range(smp.size):
            for (r, s, _k), q in zip(smp.cells, smp.quantities[n]):
                w.writerow([smp.stage, n, r, s, repr(float(q))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
