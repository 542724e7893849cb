"""Importance sampling of groups and the end-to-end sparsification pipeline."""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import rng
from .certify import DEFAULT_CUT_CAP, CertReport, QualityStats, group_contribution_check, measure_quality
from .errors import InvalidArgument
from .hypergraph import GraphicalHypergraph, MatrixHypergraph, drop_groups
from .leverage import SolverConfig
from .overestimates import DEFAULT_CERT_CAP, GroupOverestimates, compute_overestimates

CHAINING = "chaining"
DUDLEY = "dudley"
EXPLICIT = "explicit"
SCHEDULES = (CHAINING, DUDLEY, EXPLICIT)


@dataclass(frozen=True, eq=False)
class SamplingPlan:
    rho: float
    probabilities: np.ndarray
    schedule: str
    epsilon: float
    constant: float
    seed: int

    def to_json(self):
        return {"rho": self.rho, "schedule": self.schedule, "epsilon": self.epsilon,
                "constant": self.constant, "seed": self.seed}


def oversampling(m, r, epsilon, schedule=CHAINING, constant=1.0):
    """The oversampling factor ``rho`` (natural logarithms).

    chaining: ``C eps^-2 ln(m) ln(r)``; dudley: ``C eps^-2 ln(m)^3``;
    explicit: ``C``.
    """
    if schedule not in SCHEDULES:
        raise InvalidArgument(f"unknown schedule {schedule!r}")
    if not 0.0 < epsilon < 1.0:
        raise InvalidArgument(f"epsilon must lie in (0, 1), got {epsilon}")
    if not constant > 0:
        raise InvalidArgument(f"constant must be positive, got {constant}")
    if schedule == EXPLICIT:
        return float(constant)
    if m < 2 or r < 2:
        raise InvalidArgument(f"rate formulas need m >= 2 and r >= 2, got m={m}, r={r}")
    if schedule == CHAINING:
        return constant * math.log(m) * math.log(r) / epsilon**2
    return constant * math.log(m) ** 3 / epsilon**2


_SPLIT = 134217729.0  # 2**27 + 1


def _split(a):
    c = _SPLIT * a
    hi = c - (c - a)
    return hi, a - hi


def product_rounded_down(a, b):
    """``a * b`` rounded toward zero for positive operands.

    The rounding error of the floating product is recovered exactly with
    Dekker's two-product, and results that rounded up are moved down one ulp.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return np.where(err < 0, np.nextafter(p, 0.0), p)


def make_plan(tau, m, r, epsilon, schedule=CHAINING, constant=1.0, seed=0) -> SamplingPlan:
    """Keep probabilities ``p_i = min(1, rho tau_i)``.

    Products are rounded down so ``p_i <= rho tau_i`` holds exactly.
    """
    tau = np.asarray(tau, dtype=np.float64)
    if np.any(~(tau > 0)) or not np.all(np.isfinite(tau)):
        raise InvalidArgument("overestimates must be positive and finite")
    rho = oversampling(m, r, epsilon, schedule, constant)
    p = np.minimum(1.0, product_rounded_down(rho, tau))
    p.setflags(write=False)
    return SamplingPlan(rho, p, schedule, float(epsilon), float(constant), int(seed))


@dataclass(frozen=True, eq=False)
class SparsifierOutput:
    hypergraph: MatrixHypergraph
    kept_groups: np.ndarray
    plan: SamplingPlan
    expected_kept: float

    @property
    def kept(self):
        return len(self.kept_groups)


def keep_uniforms(seed, k):
    """The uniform draw of every group; group ``i`` owns counter ``i``."""
    return rng.uniform(rng.derive(seed, "subsample"), np.arange(k))


def subsample(G: MatrixHypergraph, plan: SamplingPlan) -> SparsifierOutput:
    """Keep group ``i`` with probability ``p_i`` and weight ``1/p_i``."""
    p = plan.probabilities
    if p.shape != (G.k,):
        raise InvalidArgument(f"plan has {len(p)} probabilities for {G.k} groups")
    if not G.is_unit:
        raise InvalidArgument("expected a unit hypergraph; call unitize first")
    inv = 1.0 / p
    keep = (p >= 1.0) | (keep_uniforms(plan.seed, G.k) < p)
    v = np.where(keep, inv, 0.0)
    return SparsifierOutput(G.with_weights(v), np.flatnonzero(keep), plan, math.fsum(p))


def compact(S: SparsifierOutput) -> MatrixHypergraph:
    """Drop the groups that were not kept (and their rows)."""
    return drop_groups(S.hypergraph, S.hypergraph.group_weights > 0)


@dataclass(frozen=True)
class SparsifyConfig:
    schedule: str = CHAINING
    constant: float = 1.0
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    iterations: Optional[int] = None
    centers: Optional[tuple] = None
    certify: bool = False
    cert_cap: int = DEFAULT_CERT_CAP
    directions: int = 64
    cut_cap: int = DEFAULT_CUT_CAP


@dataclass(frozen=True, eq=False)
class SparsifyResult:
    output: SparsifierOutput
    overestimates: GroupOverestimates
    report: Optional[CertReport]
    quality: Optional[QualityStats]
    unit: MatrixHypergraph

    @property
    def sparsifier(self):
        return compact(self.output)

    def sizes(self):
        return {"n": self.unit.n, "m": self.unit.m, "k": self.unit.k,
                "kept": self.output.kept, "expected_kept": self.output.expected_kept}


def sparsify(G, epsilon, cfg: SparsifyConfig = SparsifyConfig()) -> SparsifyResult:
    """Sparsify a graphical or matrix hypergraph.

    Graphical input is sampled as its unit clique expansion with overestimates
    from stars. Rank and row count enter the rate formulas clamped below at 2,
    which is what duplicating a row would do. With ``cfg.certify`` the result
    carries a certification report and quality measurements.
    """
    if not 0.0 < epsilon < 1.0:
        raise InvalidArgument(f"epsilon must lie in (0, 1), got {epsilon}")
    if not isinstance(G, (GraphicalHypergraph, MatrixHypergraph)):
        raise InvalidArgument(f"cannot sparsify {type(G).__name__}")
    unit, O, report = compute_overestimates(
        G, cfg.solver, cfg.seed, cfg.iterations, cfg.centers, cfg.certify, cfg.cert_cap)
    plan = make_plan(O.tau, max(unit.m, 2), max(unit.rank, 2), epsilon, cfg.schedule, cfg.constant, cfg.seed)
    out = subsample(unit, plan)
    quality = None
    if cfg.certify:
        report.extend(group_contribution_check(unit, O.tau, O.witness_weights, cfg.directions, cfg.seed))
        quality = measure_quality(unit, compact(out), epsilon, cfg.directions, cfg.cut_cap, cfg.seed)
    return SparsifyResult(out, O, report if cfg.certify else None, quality, unit)
