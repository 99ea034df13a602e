"""Trip demand description shared by the model compiler and the samplers."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Departure:
    k: int
    latest_arrival: int
    od: tuple  # ((origin, dest, expected), ...)

    def __post_init__(self):
        od = self.od.items() if isinstance(self.od, dict) else self.od
        od = tuple((r, s, float(u)) for (r, s), u in od) if isinstance(self.od, dict) \
            else tuple((r, s, float(u)) for r, s, u in od)
        object.__setattr__(self, "od", od)


@dataclass(frozen=True)
class DemandSpec:
    """Expected demand per (origin, dest, departure) cell.

    ``expected`` values are totals; the pre-booked share is
    ``booking_rate * expected`` and the rest is on-demand.  Realizations are
    uniform on ``[(1 - h) U, (1 + h) U]`` with ``h = noise_halfwidth``.
    """

    horizon: int
    departures: tuple
    booking_rate: float = 0.5
    noise_halfwidth: float = 0.2

    def __post_init__(self):
        object.__setattr__(self, "departures", tuple(self.departures))
        self.validate()

    def validate(self):
        T = self.horizon
        if not 0.0 <= self.booking_rate <= 1.0:
            raise ValueError(f"booking_rate must lie in [0, 1], got {self.booking_rate}")
        if not 0.0 <= self.noise_halfwidth <= 1.0:
            raise ValueError("noise_halfwidth must lie in [0, 1]")
        ks = [d.k for d in self.departures]
        if len(set(ks)) != len(ks):
            raise ValueError("duplicate departure time")
        for i, d in enumerate(self.departures):
            if d.k < 2:
                raise ValueError(f"departures[{i}].k: must be >= 2")
            if not d.k < d.latest_arrival <= T:
                raise ValueError(f"departures[{i}].latest_arrival: need k < T^k <= horizon")
            for j, (r, s, u) in enumerate(d.od):
                if u < 0:
                    raise ValueError(f"departures[{i}].od[{j}].expected: negative demand")
                if r == s:
                    raise ValueError(f"departures[{i}].od[{j}]: origin equals destination")

    def cells(self) -> list:
        """``(origin, dest, k, expected)`` in departure then listing order."""
        return [(r, s, d.k, u) for d in self.departures for r, s, u in d.od]

    def latest_arrival(self, k: int) -> int:
        for d in self.departures:
            if d.k == k:
                return d.latest_arrival
        raise KeyError(k)

    def with_rate(self, rate: float) -> "DemandSpec":
        return DemandSpec(self.horizon, self.departures, rate, self.noise_halfwidth)

    def total_expected(self) -> float:
        return sum(u for *_, u in self.cells())
