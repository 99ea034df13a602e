"""Ready-made instances: the two-node toy and the five-node line base case."""
from __future__ import annotations

from .demand import Departure, DemandSpec
from .network import Link, NetworkSpec, Node
from .sav import SavOptions, Weights
from .scenarios import DemandSample, make_demand_spec

import numpy as np


def toy2_network(cap_max: float = 10.0) -> NetworkSpec:
    nodes = [Node("A", 1.0, 0.0, cap_max), Node("B", 1.0, 0.0, cap_max)]
    links = [Link("A", "B", 1, 1.0, 1.0, 0.0, cap_max), Link("B", "A", 1, 1.0, 1.0, 0.0, cap_max)]
    return NetworkSpec(nodes, links)


def toy2(demand: float = 2.0, ondemand_values=None):
    """Two nodes, one trip A->B departing at step 2, horizon 6.

    With ``ondemand_values`` the on-demand quantity is drawn uniformly from
    that set instead of being fixed at ``demand``.  Returns ``(network,
    demand_spec, weights, options, samples)``.
    """
    net = toy2_network()
    spec = DemandSpec(6, (Departure(2, 5, (("A", "B", demand),)),), booking_rate=0.0,
                      noise_halfwidth=0.0)
    weights = Weights(1.0, 1.0, 1.0, 1.0, 100.0)
    options = SavOptions(rho=1.0, dedicated=False, saa_samples=1, seed=0)
    cell = (("A", "B", 2),)
    values = [demand] if ondemand_values is None else list(ondemand_values)
    samples = {
        1: DemandSample(1, "prebooked", cell, np.zeros((1, 1))),
        2: DemandSample(2, "ondemand", cell, np.array(values, dtype=float).reshape(-1, 1)),
    }
    return net, spec, weights, options, samples


def five_node_line(booking_rate: float = 0.5, total_demand: float = 1000.0, horizon: int = 16,
               latest_arrival: int = 10, departures=(2, 5), seed: int = 0):
    """Five-node line, unit travel times, base weights (10, 1, 1, 1)."""
    net = NetworkSpec.line(5, travel_time=1, length=1.0, link_cost=4.0, storage_cost=1.0,
                           cap_min=20.0, cap_max=80.0)
    spec = make_demand_spec(total_demand, booking_rate, [(k, latest_arrival) for k in departures],
                            net.od_pairs(), halfwidth=0.2, seed=seed, horizon=horizon)
    return net, spec, Weights(10.0, 1.0, 1.0, 1.0), SavOptions(rho=3.0, saa_samples=20, seed=seed)


def desk(booking_rate: float = 0.5, total_demand: float = 100.0, seed: int = 0):
    """Three-node line, one departure at step 2 due by step 6, horizon 8.

    Small enough that the extensive form over 20 x 20 samples solves in
    seconds, so sweep results can be checked against exact optima.
    """
    net = NetworkSpec.line(3, travel_time=1, length=1.0, link_cost=4.0, storage_cost=1.0,
                           cap_min=5.0, cap_max=40.0)
    spec = make_demand_spec(total_demand, booking_rate, [(2, 6)], net.od_pairs(), halfwidth=0.2,
                            seed=seed, horizon=8)
    return net, spec, Weights(10.0, 1.0, 1.0, 1.0), SavOptions(rho=3.0, saa_samples=20, seed=seed)
