"""Ground-truth checks, quality measurement and random instances."""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
import scipy.sparse as sp

from . import rng
from .errors import InvalidArgument
from .hypergraph import GraphicalHypergraph, MatrixHypergraph, energy_batch, unitize
from .leverage import pinv_factor

DENOMINATOR_GUARD = 1e-14
DEFAULT_CUT_CAP = 14
RATIO_SLACK = 1e-8


@dataclass
class Check:
    name: str
    passed: bool
    worst_slack: Optional[float]
    detail: str = ""

    def to_json(self):
        slack = self.worst_slack
        if slack is not None and not np.isfinite(slack):
            slack = None
        return {"name": self.name, "pass": bool(self.passed),
                "worst_slack": None if slack is None else float(slack), "detail": self.detail}


@dataclass
class CertReport:
    checks: List[Check] = field(default_factory=list)

    @property
    def overall(self):
        return all(c.passed for c in self.checks)

    def add(self, name, passed, worst_slack, detail=""):
        self.checks.append(Check(name, bool(passed), worst_slack, detail))

    def extend(self, other):
        self.checks.extend(other.checks)
        return self

    def failed(self):
        return [c.name for c in self.checks if not c.passed]

    def check(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_json(self):
        return {"overall": self.overall, "checks": [c.to_json() for c in self.checks]}

    def lines(self):
        for c in self.checks:
            slack = "n/a" if c.worst_slack is None else f"{c.worst_slack:.6g}"
            yield f"{'PASS' if c.passed else 'FAIL'} {c.name} worst_slack={slack} {c.detail}".rstrip()


@dataclass(frozen=True)
class QualityStats:
    max_rel_err_random: float
    max_rel_err_cuts: Optional[float]
    directions_tested: int
    epsilon_target: Optional[float]

    def to_json(self):
        return {"max_rel_err_random": self.max_rel_err_random,
                "max_rel_err_cuts": self.max_rel_err_cuts,
                "directions_tested": self.directions_tested,
                "epsilon_target": self.epsilon_target}


def _unit(G):
    return G if G.is_unit else unitize(G)


def brute_force_group_leverage(G: MatrixHypergraph, w):
    """Per-group ``max_{j in S_i} a_j^T (A^T W A)^+ a_j`` from a dense SVD."""
    w = np.asarray(w, dtype=np.float64)
    q = row_quadratic_forms(G, w)
    return G.group_max(q)


def row_quadratic_forms(G: MatrixHypergraph, w):
    return pinv_factor(G.rows, w).quadratic_forms(G.rows)


def gaussian_directions(n, count, seed):
    return rng.generator(rng.derive(seed, "directions")).standard_normal((n, count))


def cut_vectors(n, start, stop):
    """Columns are the 0/1 indicator vectors of the integers ``start..stop-1``."""
    codes = np.arange(start, stop, dtype=np.int64)
    return ((codes[None, :] >> np.arange(n, dtype=np.int64)[:, None]) & 1).astype(np.float64)


def _max_rel_err(fG, fH):
    ok = fG >= DENOMINATOR_GUARD
    if not ok.any():
        return 0.0, 0
    return float(np.max(np.abs(fH[ok] / fG[ok] - 1.0))), int(ok.sum())


def measure_quality(G: MatrixHypergraph, H: MatrixHypergraph, epsilon=None,
                    n_directions=64, cut_cap=DEFAULT_CUT_CAP, seed=0, chunk=2048) -> QualityStats:
    """Largest relative energy error of ``H`` against ``G``.

    Errors are taken over seeded Gaussian directions and, when ``n <= cut_cap``,
    over every nontrivial cut indicator. Directions with ``f_G(x) < 1e-14``
    are skipped.
    """
    if G.n != H.n:
        raise InvalidArgument(f"column counts differ: {G.n} vs {H.n}")
    if n_directions < 1:
        raise InvalidArgument("need at least one direction")
    X = gaussian_directions(G.n, n_directions, seed)
    err_random, tested = _max_rel_err(energy_batch(G, X), energy_batch(H, X))
    err_cuts = None
    if G.n <= cut_cap:
        err_cuts = 0.0
        total = 2**G.n - 1
        for start in range(1, total, chunk):
            C = cut_vectors(G.n, start, min(start + chunk, total))
            e, _ = _max_rel_err(energy_batch(G, C), energy_batch(H, C))
            err_cuts = max(err_cuts, e)
    return QualityStats(err_random, err_cuts, tested, epsilon)


def group_contribution_check(G: MatrixHypergraph, tau, wbar, n_directions=64, seed=0) -> CertReport:
    """Check ``max_j <a_j,x>^2 <= tau_i x^T A^T W A x <= tau_i f_G(x)`` on random ``x``.

    Slacks are the largest observed ratio of left to right side; a check
    passes when that ratio is at most ``1 + 1e-8``.
    """
    G = _unit(G)
    tau = np.asarray(tau, dtype=np.float64)
    wbar = np.asarray(wbar, dtype=np.float64)
    X = gaussian_directions(G.n, n_directions, seed)
    sq = np.asarray(G.rows @ X) ** 2
    gmax = G.group_max(sq)
    f = gmax.sum(axis=0)
    quad = wbar @ sq

    live = quad >= DENOMINATOR_GUARD
    worst_over_form = np.max(gmax[:, live] / (tau[:, None] * quad[None, live]), initial=0.0)
    live_f = f >= DENOMINATOR_GUARD
    worst_form_over_f = np.max(quad[live_f] / f[live_f], initial=0.0)
    # a direction with vanishing quadratic form must have vanishing group terms
    null_leak = float(np.max(gmax[:, ~live], initial=0.0))

    report = CertReport()
    report.add("contribution_vs_weighted_form", worst_over_form <= 1 + RATIO_SLACK and null_leak < DENOMINATOR_GUARD,
               float(worst_over_form), f"{n_directions} directions; largest max_j<a_j,x>^2 / (tau_i x'A'WAx)")
    report.add("weighted_form_vs_energy", worst_form_over_f <= 1 + RATIO_SLACK, float(worst_form_over_f),
               "largest x'A'WAx / f_G(x)")
    total = np.max(gmax[:, live_f] / (tau[:, None] * f[None, live_f]), initial=0.0)
    report.add("group_contribution", total <= 1 + RATIO_SLACK, float(total),
               "largest max_j<a_j,x>^2 / (tau_i f_G(x))")
    return report


WEIGHT_LAWS = ("constant", "log-uniform")
KINDS = ("uniform-hypergraph", "power-law-degrees", "graph")


def generate_random(kind="uniform-hypergraph", n=20, k=50, r=4, weight_law="constant", seed=0,
                    power_law_exponent=0.8) -> GraphicalHypergraph:
    """Seeded random graphical hypergraph touching every vertex.

    Hyperedge sizes are uniform on ``[2, r]`` (always 2 for ``graph``).
    Vertices are uniform for ``uniform-hypergraph`` and ``graph`` and drawn with
    probability proportional to ``rank**-power_law_exponent`` (over a random
    vertex ranking) for ``power-law-degrees``. Vertices left isolated are then
    inserted into random hyperedges with room, or swapped in for a vertex that
    is covered elsewhere.
    """
    if kind not in KINDS:
        raise InvalidArgument(f"unknown kind {kind!r}")
    if weight_law not in WEIGHT_LAWS:
        raise InvalidArgument(f"unknown weight law {weight_law!r}")
    if kind == "graph":
        r = 2
    if not (2 <= r <= n) or k < 1 or k * r < n:
        raise InvalidArgument(f"infeasible parameters n={n}, k={k}, r={r}")
    gen = rng.generator(rng.derive(seed, "generate", kind))

    sizes = gen.integers(2, r + 1, size=k)
    p = None
    if kind == "power-law-degrees":
        ranks = gen.permutation(n) + 1
        p = ranks.astype(np.float64) ** -power_law_exponent
        p /= p.sum()
    edges = [set(gen.choice(n, size=int(s), replace=False, p=p).tolist()) for s in sizes]

    degree = np.zeros(n, dtype=np.int64)
    for e in edges:
        for v in e:
            degree[v] += 1
    for v in np.flatnonzero(degree == 0):
        roomy = [i for i, e in enumerate(edges) if len(e) < r]
        if roomy:
            edges[roomy[gen.integers(len(roomy))]].add(int(v))
        else:
            # some vertex is covered twice because k * r >= n
            candidates = [(i, u) for i, e in enumerate(edges) for u in sorted(e) if degree[u] >= 2]
            i, u = candidates[gen.integers(len(candidates))]
            edges[i].remove(u)
            edges[i].add(int(v))
            degree[u] -= 1
        degree[v] += 1

    if weight_law == "constant":
        weights = np.ones(k)
    else:
        weights = 10.0 ** gen.uniform(0.0, 3.0, size=k)
    return GraphicalHypergraph.from_edges(n, [sorted(e) for e in edges], weights)


def generate_random_matrix(n=10, k=40, r=4, density=0.5, seed=0, weighted=False) -> MatrixHypergraph:
    """Seeded random matrix hypergraph with Gaussian sparse rows.

    Group sizes are uniform on ``[1, r]`` with at least one group of size ``r``.
    """
    if n < 1 or k < 1 or r < 1:
        raise InvalidArgument("n, k and r must be positive")
    gen = rng.generator(rng.derive(seed, "generate-matrix"))
    sizes = gen.integers(1, r + 1, size=k)
    sizes[gen.integers(k)] = r
    m = int(sizes.sum())
    dense = gen.standard_normal((m, n)) * (gen.random((m, n)) < density)
    for j in np.flatnonzero(~dense.any(axis=1)):
        dense[j, gen.integers(n)] = gen.standard_normal() or 1.0
    row_group = np.repeat(np.arange(k), sizes)
    gw = 10.0 ** gen.uniform(-1.0, 1.0, size=k) if weighted else None
    return MatrixHypergraph(sp.csr_matrix(dense), row_group, gw)
