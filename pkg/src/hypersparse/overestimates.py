"""Group leverage score overestimates.

``group_leverage_overestimate`` iterates row weights ``w`` inside every group:
each round asks a leverage-score overestimator for ``sigma~ >= sigma(W^{1/2} A)``
and renormalizes it per group to get the next weights. The averaged weights
certify

    max_{j in S_i} a_j^T (A^T Wbar A)^+ a_j <= tau_i,
    tau_i = r**(1/T) * mean_t sum_{j in S_i} sigma~_j^(t),

with ``sum(tau) <= r**(1/T) * nu`` when every overestimate has 1-norm at most
``nu``.
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .certify import CertReport, row_quadratic_forms
from .errors import InternalError, InvalidArgument
from .hypergraph import (
    GraphicalHypergraph,
    MatrixHypergraph,
    clique_expand,
    default_centers,
    star_expand,
    star_rows_in_clique,
    unitize,
)
from .leverage import SKETCHED, SolverConfig, make_overestimator
from . import rng

DIRECT = "direct"
STAR_LIFTED = "star-lifted"

SUM_TOLERANCE = 1e-9
RATIO_SLACK = 1e-8
NORM_TOLERANCE = 1e-9
DEFAULT_CERT_CAP = 2000
DEFAULT_RETRIES = 3


@dataclass(frozen=True, eq=False)
class GroupOverestimates:
    tau: np.ndarray
    witness_weights: np.ndarray
    nu: float
    iterations: int
    source_mode: str = DIRECT
    iteration_nu: List[float] = field(default_factory=list)
    failure_probability: float = 0.0


def default_iterations(r):
    """``max(1, ceil(ln r))``, so the blow-up ``r**(1/T)`` is at most ``e``."""
    if r < 1:
        raise InvalidArgument(f"rank must be at least 1, got {r}")
    return max(1, math.ceil(math.log(r)))


def renormalize(G: MatrixHypergraph, sigma):
    """Scale ``sigma`` so it sums to one inside every group."""
    sums = G.group_sum(sigma)
    bad = np.flatnonzero(~(sums > 0))
    if len(bad):
        raise InternalError(f"group {int(bad[0])} has zero total leverage")
    return sigma / sums[G.row_group], sums


def group_leverage_overestimate(G: MatrixHypergraph, T, overestimator) -> GroupOverestimates:
    if not G.is_unit:
        raise InvalidArgument("expected a unit hypergraph; call unitize first")
    if T < 1:
        raise InvalidArgument(f"iteration count must be positive, got {T}")
    r = G.rank
    w = 1.0 / G.group_sizes[G.row_group]
    w_sum = np.zeros(G.m)
    tau_sum = np.zeros(G.k)
    nus = []
    fail = 0.0
    for _ in range(T):
        est = overestimator(w)
        w_sum += w
        w, group_totals = renormalize(G, est.sigma)
        tau_sum += group_totals
        nus.append(float(est.nu))
        fail += est.failure_probability

    blowup = math.exp(math.log(r) / T)
    bound = getattr(overestimator, "bound", None)
    nu = blowup * (bound if bound is not None else max(nus))
    return GroupOverestimates(
        tau=blowup * tau_sum / T,
        witness_weights=w_sum / T,
        nu=nu,
        iterations=T,
        source_mode=DIRECT,
        iteration_nu=nus,
        failure_probability=min(1.0, fail),
    )


def graphical_overestimates(G: GraphicalHypergraph, factory, T=None, centers=None) -> GroupOverestimates:
    """Overestimates for the unit clique expansion of ``G`` computed on stars.

    ``factory(A)`` must return an overestimator for the matrix ``A``. The
    reweighting iteration runs on the star expansion; its ``tau'`` doubles into valid overestimates
    for every pair row (effective resistances obey the triangle inequality
    through the center), and the star witness weights are placed on the
    matching clique rows with zeros elsewhere. Zero-weight hyperedges are
    dropped first, so groups align with ``unitize(clique_expand(G))``.
    """
    keep = G.weights > 0
    G = G.drop_zero_weight()
    if centers is None:
        centers = default_centers(G)
    else:
        centers = np.asarray(centers, dtype=np.int64)[keep]
    star = unitize(star_expand(G, centers))
    if T is None:
        T = default_iterations(star.rank)
    inner = group_leverage_overestimate(star, T, factory(star.rows))
    m_clique = int((G.sizes * (G.sizes - 1) // 2).sum())
    witness = np.zeros(m_clique)
    witness[star_rows_in_clique(G, centers)] = inner.witness_weights
    return GroupOverestimates(
        tau=2.0 * inner.tau,
        witness_weights=witness,
        nu=2.0 * inner.nu,
        iterations=inner.iterations,
        source_mode=STAR_LIFTED,
        iteration_nu=inner.iteration_nu,
        failure_probability=inner.failure_probability,
    )


def certify_overestimates(G: MatrixHypergraph, O: GroupOverestimates) -> CertReport:
    """Verify the witness conditions with an exact pseudoinverse.

    Slacks: ``weight_sums`` reports the largest ``|sum_j w_j - 1|``;
    ``leverage_bound`` the largest ``a_j^T (A^T W A)^+ a_j / tau_i``;
    ``norm_bound`` the value ``||tau||_1 - nu``.
    """
    if not G.is_unit:
        G = unitize(G)
    tau = np.asarray(O.tau, dtype=np.float64)
    w = np.asarray(O.witness_weights, dtype=np.float64)
    report = CertReport()
    if tau.shape != (G.k,) or w.shape != (G.m,):
        report.add("shapes", False, None,
                   f"tau {tau.shape} / weights {w.shape} do not match k={G.k}, m={G.m}")
        return report

    dev = float(np.max(np.abs(G.group_sum(w) - 1.0), initial=0.0))
    nonneg = bool(np.all(w >= 0))
    report.add("weight_sums", dev <= SUM_TOLERANCE and nonneg, dev,
               "witness weights sum to 1 per group" + ("" if nonneg else "; negative weight found"))

    q = row_quadratic_forms(G, w)
    ratio = G.group_max(q) / np.where(tau > 0, tau, np.nan)
    worst = float(np.nanmax(ratio)) if G.k else 0.0
    positive = bool(np.all(tau > 0))
    ok = positive and worst <= 1.0 + RATIO_SLACK
    detail = "largest a_j'(A'WA)^+a_j / tau_i"
    if G.k and ok is False and positive:
        detail += f"; worst group {int(np.nanargmax(ratio))}"
    if not positive:
        detail += "; nonpositive tau"
    report.add("leverage_bound", ok, worst, detail)

    excess = float(tau.sum() - O.nu)
    report.add("norm_bound", excess <= NORM_TOLERANCE, excess, f"||tau||_1 - nu with nu={O.nu:.12g}")
    return report


def compute_overestimates(G, cfg: SolverConfig = SolverConfig(), seed=0, T=None, centers=None,
                          certify=True, cert_cap=DEFAULT_CERT_CAP, retries=DEFAULT_RETRIES):
    """Overestimates for a graphical or matrix hypergraph, with certification.

    Returns ``(unit_hypergraph, overestimates, report)`` where
    ``unit_hypergraph`` is the unit matrix hypergraph ``tau`` refers to.
    Certification runs when enabled and ``m <= cert_cap``; a sketched run that
    fails it is repeated with a fresh seed up to ``retries`` times, after which
    the last result is returned with the failing checks in the report.
    """
    graphical = isinstance(G, GraphicalHypergraph)
    if graphical:
        unit = unitize(clique_expand(G))
    else:
        unit = unitize(G)
    report = CertReport()
    do_certify = certify and unit.m <= cert_cap
    attempts = 1 + (retries if cfg.mode == SKETCHED and do_certify else 0)

    for attempt in range(attempts):
        key = rng.derive(seed, "overestimates", attempt)
        if graphical:
            O = graphical_overestimates(G, lambda A: make_overestimator(A, cfg, key), T, centers)
        else:
            O = group_leverage_overestimate(
                unit, default_iterations(unit.rank) if T is None else T, make_overestimator(unit.rows, cfg, key))
        if not do_certify:
            break
        cert = certify_overestimates(unit, O)
        if cert.overall:
            break

    if not certify:
        return unit, O, report
    if not do_certify:
        report.add("certify_overestimates", True, None, f"skipped: m={unit.m} exceeds cap {cert_cap}")
        return unit, O, report
    report.extend(cert)
    report.add("certification_attempts", cert.overall, float(attempt + 1),
               f"{attempt + 1} of {attempts} attempt(s)")
    return unit, O, report
