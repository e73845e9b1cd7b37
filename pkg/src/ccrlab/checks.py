"""Verification checks run by ``ccrlab run``; each returns one report record."""

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _exact as ex
from .classify import Scenario, pullback_obstruction, spectrum_type, type_one_report
from .cone_lattice import dual_cone, slab_radius
from .errors import CCRLabError, Unstable
from .fock import TruncatedFock, UnitSpec, random_probes, unit_weak_check, verify_weyl
from .index import index_of
from .pspace import boundary_compact, diff_measure, diff_measure_mc, rng_for
from .shiftrep import ShiftRep, canonical_cocycle, cocycle_residual, cocycle_space_dim, verify_rep

log = logging.getLogger("ccrlab")

# descriptive anchors of the claims each check exercises
ANCHORS = {
    "cone": "double dual equals P; e pairs positively with every ray",
    "pspace": "P-invariant closed subset of the quotient; boundary compact iff d - rank N = 1",
    "rep": "shifts on L2(A): isometries, semigroup law, range projections, purity",
    "cocycles": "additive cocycles are lambda times the indicator of A minus (x + A)",
    "fock": "Weyl relations on truncated Fock space; units from a character and a cocycle",
    "index": "Gram rank of the unit covariance kernel equals the cocycle dimension",
    "classify": "lattice equality with spectral witness; commutant M_k; pullback obstruction",
}

# dependency order; checks inside one stage are independent of each other
STAGES = (("cone",), ("pspace",), ("rep", "fock"), ("cocycles",), ("index", "classify"))

TASK_FOCK, TASK_CLASSIFY, TASK_MC = 2, 3, 4


@dataclass
class Record:
    name: str
    status: str
    metrics: dict = field(default_factory=dict)

    def as_dict(self):
        return {"name": self.name, "status": self.status, "metrics": self.metrics, "paperRef": ANCHORS[self.name]}


def _f(v) -> str:
    return ex.fmt(ex.as_fraction(v))


def _vec(v) -> list:
    return [_f(c) for c in v]


def check_cone(S: Scenario) -> Record:
    P = S.cone
    Pd = dual_cone(P)
    back = dual_cone(Pd)
    interior = all(S.e.pair(v) > 0 for v in P.rays)
    radius = float(slab_radius(P, S.e, 1)) if interior else math.inf
    ok = back.same_set(P) and interior
    return Record("cone", "pass" if ok else "fail", {
        "rays": [_vec(v) for v in P.rays],
        "dualRays": [_vec(v) for v in Pd.rays],
        "doubleDualEqual": back.same_set(P),
        "eInterior": interior,
        "slabRadius": radius,
    })


def check_pspace(S: Scenario) -> Record:
    A, w = S.pspace, S.window
    verdict = boundary_compact(A)
    a = S.point_a
    grid_mu = diff_measure(A, a, w)
    mc, err = diff_measure_mc(A, a, w, n_samples=40_000, seed=S.seed, task=TASK_MC)
    tol = 3 * err + w.cell_volume
    proper = A.nonmember_witness() is not None
    ok = abs(grid_mu - mc) <= tol and proper
    return Record("pspace", "pass" if ok else "fail", {
        "boundary": verdict.text(),
        "compact": verdict.compact,
        "dEff": verdict.d_eff,
        "measureGrid": grid_mu,
        "measureMC": mc,
        "mcStderr": err,
        "tolerance": tol,
        "proper": proper,
    })


def check_rep(S: Scenario) -> Record:
    R = ShiftRep(S.pspace, S.window, S.k)
    samples = S.generators() + [S.point_a]
    diag = verify_rep(R, samples, purity_shift=S.point_a)
    ok = diag.exact and diag.purity_monotone and diag.purity_hit is not None
    return Record("rep", "pass" if ok else "fail", diag.as_dict())


def check_cocycles(S: Scenario) -> Record:
    R = ShiftRep(S.pspace, S.window, S.k)
    gens = S.generators()
    compact = boundary_compact(S.pspace).compact
    try:
        rep = cocycle_space_dim(R, gens, S.ladder, report=True)
    except Unstable as exc:
        return Record("cocycles", "unstable", {"reason": str(exc), **{k: v for k, v in exc.details.items()}})
    c = canonical_cocycle(R, np.ones(S.k))
    residual = max(cocycle_residual(c, x, y) for x, y in itertools.product(gens, repeat=2))
    has = rep.dim >= 1
    expected = has == compact
    ok = expected and residual == 0 and (not has or rep.dim == S.k)
    m = rep.as_dict()
    m.update({"hasNonzeroCocycle": has, "expectedOutcome": expected, "canonicalResidual": residual,
              "compactBoundary": compact})
    return Record("cocycles", "pass" if ok else "fail", m)


def check_fock(S: Scenario) -> Record:
    rng = rng_for(S.seed, TASK_FOCK)
    m = min(3, S.dim)
    worst = {}
    ok = True
    for n in (10, 14):
        F = TruncatedFock(m, n)
        for _ in range(2):
            xi = _ball(rng, m)
            eta = _ball(rng, m)
            rep = verify_weyl(F, xi, eta)
            ok &= rep.within(10.0)
            for key, val in rep.as_dict().items():
                if key != "phase":
                    worst[f"n{n}.{key}"] = max(worst.get(f"n{n}.{key}", 0.0), val)
    R = ShiftRep(S.pspace, S.window, S.k)
    gens = S.generators()
    x, y = gens[0], gens[1]
    lam = 0.1 * (rng.standard_normal(S.dim) + 1j * rng.standard_normal(S.dim))
    coef = 0.5 * (rng.standard_normal(S.k) + 1j * rng.standard_normal(S.k))
    u = UnitSpec(lam, canonical_cocycle(R, coef))
    probes = random_probes(R, x, y, 3, rng, scale=0.25)
    uc = unit_weak_check(R, u, x, y, probes)
    ok &= uc.semigroup <= 1e-10 and uc.intertwining <= 1e-10
    worst.update(uc.as_dict())
    return Record("fock", "pass" if ok else "fail", worst)


def _ball(rng, m, radius=1.0):
    v = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    return v * (radius * rng.uniform(0.3, 1.0) / np.linalg.norm(v))


def check_index(S: Scenario) -> Record:
    rep = index_of(S)
    compact = boundary_compact(S.pspace).compact
    expected = S.k if compact else 0
    ok = rep.index == expected and rep.independence and rep.stabilized
    if compact:
        ok &= rep.cocycleDim == rep.index
    m = rep.as_dict()
    m["expectedIndex"] = expected
    return Record("index", "pass" if ok else "fail", m)


def check_classify(S: Scenario) -> Record:
    rng = rng_for(S.seed, TASK_CLASSIFY)
    t1 = type_one_report(S)
    compact = boundary_compact(S.pspace).compact
    obstructions = []
    for _ in range(5):
        mu = [int(v) for v in rng.integers(-5, 6, size=S.dim)]
        if not any(mu):
            mu[0] = 1
        obstructions.append(pullback_obstruction(S, mu))
    valid = all(o.valid() for o in obstructions)
    spectrum = spectrum_type(S.point_a.vector, S.lattice, S.e)
    ok = valid and t1["irreducible"] and t1["typeI"] == compact
    m = dict(t1)
    m.update({
        "pullbackWitnesses": [o.as_dict() for o in obstructions],
        "pullbackValid": valid,
        "spectrumAtPointA": str(spectrum),
    })
    return Record("classify", "pass" if ok else "fail", m)


RUNNERS = {
    "cone": check_cone,
    "pspace": check_pspace,
    "rep": check_rep,
    "cocycles": check_cocycles,
    "fock": check_fock,
    "index": check_index,
    "classify": check_classify,
}


def _run_one(name, S) -> Record:
    log.info("running check %s", name)
    try:
        return RUNNERS[name](S)
    except Unstable as exc:
        return Record(name, "unstable", {"reason": str(exc)})
    except CCRLabError as exc:
        return Record(name, "fail", {"error": type(exc).__name__, "reason": str(exc)})


def run_checks(S: Scenario, names, threads=1) -> list:
    """Run checks stage by stage; results come back in canonical order."""
    wanted = set(names)
    out = {}
    for stage in STAGES:
        todo = [n for n in stage if n in wanted]
        if not todo:
            continue
        if threads > 1 and len(todo) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for n, rec in zip(todo, pool.map(lambda n: _run_one(n, S), todo)):
                    out[n] = rec
        else:
            for n in todo:
                out[n] = _run_one(n, S)
    return [out[n] for stage in STAGES for n in stage if n in out]
