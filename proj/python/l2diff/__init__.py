"""l2 flow diffusion: recursive solver, exact oracle and sweep-cut clustering."""

from ._core import (
    DomainError,
    Error,
    FeasibilityError,
    Graph,
    NumericalError,
    ParseError,
    UsageError,
    ValidationError,
    VerificationError,
    barbell,
    build_demand,
    conductance,
    erdos_renyi,
    exact_energy,
    grid,
    l2_diffusion,
    path,
    read_edge_list,
    ring,
    sweep_cut,
)

__version__ = "0.1.0"


def cluster(graph, seeds, mass=None, eps=1e-6, **kwargs):
    """Diffuse `mass` from `seeds` and return (cut vertices, conductance, solve result)."""
    if mass is None:
        mass = min(graph.volume, 2.0 * sum(graph.weighted_degree(s) for s in set(seeds)))
    res = l2_diffusion(graph, build_demand(graph, list(seeds), mass), eps=eps, **kwargs)
    if res["x"].max() <= 0.0:
        return [], None, res
    cut, phi = sweep_cut(graph, res["x"])
    return cut, phi, res
