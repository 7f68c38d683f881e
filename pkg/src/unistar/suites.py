"""Verification suites run over loaded scenarios, with structured reports."""

from __future__ import annotations

import itertools
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

from .brackets import (
    PolyVector,
    bivector_from_array,
    chevalley_differential,
    function_polyvector,
    graded_jacobi_defect,
    hochschild_differential,
    jacobi_check,
    polyvector_cochain,
    vector_field,
)
from .cohomology import (
    DEGREE3_NO_LOOP_FAMILIES,
    WitnessGeometry,
    cohomology_probe,
    enumerate_family,
    enumerate_terms,
    homogeneity_defect,
)
from .geometry import Geometry, bianchi_check
from .jets import jet_suite
from .scenario import Scenario
from .star3 import (
    ORDER,
    PoissonVariation,
    ScaledStar,
    StarProduct3,
    cyclic_cocycle_defect,
    transport_derivative,
)
from .tensor import Cochain

SUITES = ("assoc3", "cocycle-s3", "dx-props", "h2-pol2", "h2-pol3", "jet", "props")


class UnknownSuiteError(ValueError):
    pass


@dataclass
class Loaded:
    scenario: Scenario
    geometry: Geometry

    @property
    def name(self) -> str:
        return self.scenario.name

    def witness(self) -> WitnessGeometry:
        return WitnessGeometry(f"{self.scenario.name}[{self.scenario.dup_mode}]", self.geometry,
                               list(self.scenario.warnings))


@dataclass
class CheckResult:
    suite: str
    scenario: str
    claim: str
    passed: bool
    detail: str = ""
    counterexample: dict | None = None
    stats: dict = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_dict(self) -> dict:
        out = asdict(self)
        out["verdict"] = self.verdict
        return out


@dataclass
class Report:
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    def extend(self, other: "Report") -> None:
        self.results.extend(other.results)

    def human(self) -> str:
        lines = []
        for r in self.results:
            line = f"{r.verdict}  {r.suite:<10} {r.scenario:<16} {r.claim}"
            if r.detail:
                line += f"  [{r.detail}]"
            lines.append(line)
            if r.counterexample:
                ce = r.counterexample
                lines.append(f"      first counterexample: args={ce.get('args')} residual={ce.get('residual')}")
        total = len(self.results)
        failed = sum(not r.passed for r in self.results)
        lines.append(f"{total - failed}/{total} checks passed")
        return "\n".join(lines)

    def to_json(self) -> dict:
        return {"passed": self.passed, "checks": [r.to_dict() for r in self.results]}


def _fmt(g: Geometry, p) -> str:
    return g.ring.format(p)


def _sweep(g: Geometry, deg_cap: int, constants: bool = True) -> list:
    return g.ring.monomials_up_to(deg_cap, include_constant=constants)


def _series_residual(g: Geometry, series) -> str:
    r = series.first_nonzero()
    return f"nu^{r}: {_fmt(g, series[r])}"


def _timed(fn: Callable[[], CheckResult]) -> CheckResult:
    t = time.perf_counter()
    res = fn()
    res.seconds = round(time.perf_counter() - t, 3)
    return res


# ---------------------------------------------------------------------------


def suite_assoc3(items: Sequence[Loaded], deg_cap: int | None = None) -> Report:
    rep = Report()
    for item in items:
        g = item.geometry
        cap = deg_cap if deg_cap is not None else item.scenario.deg_cap

        def run() -> CheckResult:
            star = StarProduct3(g)
            mons = _sweep(g, cap)
            n = 0
            for f, h, k in itertools.product(mons, repeat=3):
                n += 1
                a = star.associator(f, h, k)
                if not a.is_zero():
                    return CheckResult("assoc3", item.name, f"associator vanishes through nu^{ORDER}", False,
                                       counterexample={"args": [_fmt(g, f), _fmt(g, h), _fmt(g, k)],
                                                       "residual": _series_residual(g, a)},
                                       stats={"triples": n})
            return CheckResult("assoc3", item.name, f"associator vanishes through nu^{ORDER}", True,
                               f"{n} monomial triples, degree <= {cap}", stats={"triples": n})

        rep.results.append(_timed(run))
    return rep


def suite_cocycle_s3(items: Sequence[Loaded], deg_cap: int | None = None) -> Report:
    rep = Report()
    for item in items:
        g = item.geometry
        cap = deg_cap if deg_cap is not None else item.scenario.deg_cap

        def run() -> CheckResult:
            star = StarProduct3(g)
            mons = _sweep(g, cap)
            n = 0
            claim = "cyclic sum of {S3(u,v),w} + S3({u,v},w) vanishes"
            for u, v, w in itertools.product(mons, repeat=3):
                n += 1
                res = cyclic_cocycle_defect(star, u, v, w)
                if res != 0:
                    return CheckResult("cocycle-s3", item.name, claim, False,
                                       counterexample={"args": [_fmt(g, u), _fmt(g, v), _fmt(g, w)],
                                                       "residual": _fmt(g, res)})
            return CheckResult("cocycle-s3", item.name, claim, True, f"{n} monomial triples, degree <= {cap}",
                               stats={"triples": n})

        rep.results.append(_timed(run))
    return rep


def vector_field_basis(g: Geometry, deg_cap: int) -> list:
    """e_i times each monomial of degree <= deg_cap."""
    ring = g.ring
    out = []
    for i in range(g.d):
        for m in _sweep(g, deg_cap):
            comps = [ring.zero] * g.d
            comps[i] = m
            out.append(vector_field(ring, comps))
    return out


def suite_dx_props(items: Sequence[Loaded], deg_cap: int | None = None) -> Report:
    rep = Report()
    for item in items:
        g = item.geometry
        cap = deg_cap if deg_cap is not None else item.scenario.deg_cap
        star = StarProduct3(g)
        args = _sweep(g, cap, constants=False)

        def identity() -> CheckResult:
            claim = "D_X(f*h) = D_X f * h + f * D_X h + d/dt f *_{P+tL_XP} h through nu^3"
            n = 0
            for X in vector_field_basis(g, cap):
                Xt = X.to_tensor()
                var = PoissonVariation(star, transport_derivative(g, Xt))
                for f, h in itertools.product(args, repeat=2):
                    n += 1
                    res = star.derivation_defect(Xt, f, h, var)
                    if not res.is_zero():
                        comps = [_fmt(g, X.component((i,))) for i in range(g.d)]
                        return CheckResult("dx-props", item.name, claim, False,
                                           counterexample={"args": [comps, _fmt(g, f), _fmt(g, h)],
                                                           "residual": _series_residual(g, res)})
            return CheckResult("dx-props", item.name, claim, True,
                               f"{n} (X, f, h) cases, coefficient degree <= {cap}", stats={"cases": n})

        def inner() -> CheckResult:
            claim = "D_{X_f} h = (f*h - h*f)/(2 nu), determined through nu^2"
            n = 0
            for f in _sweep(g, cap):
                Xf = g.hamiltonian_field(f)
                for h in _sweep(g, cap):
                    n += 1
                    res = star.d_operator(Xf, h) - star.inner_derivation(f, h)
                    if not res.is_zero():
                        return CheckResult("dx-props", item.name, claim, False,
                                           counterexample={"args": [_fmt(g, f), _fmt(g, h)],
                                                           "residual": _series_residual(g, res)})
            return CheckResult("dx-props", item.name, claim, True, f"{n} (f, h) pairs", stats={"cases": n})

        rep.results.append(_timed(identity))
        rep.results.append(_timed(inner))
    return rep


def _probe_result(suite: str, label: str, claim: str, ok: bool, report) -> CheckResult:
    s = report.summary()
    return CheckResult(suite, label, claim, ok,
                       f"cocycles {s['cocycle_dim']}, coboundary rank {s['coboundary_rank']}, "
                       f"residual {s['residual']}, evaluated rank {s['evaluated_rank']} of {s['patterns']}",
                       stats=s)


def suite_h2_pol2(items: Sequence[Loaded]) -> Report:
    rep = Report()
    ws = [it.witness() for it in items]
    label = "+".join(it.name for it in items)

    def no_loop() -> CheckResult:
        r = cohomology_probe(2, True, ws)
        return _probe_result("h2-pol2", label, "no no-loop cocycles of degree 2", r.cocycle_dim == 0, r)

    def full() -> CheckResult:
        r = cohomology_probe(2, False, ws)
        ok = all(r.cocycle_in_span) and r.residual == 0
        return _probe_result("h2-pol2", label, "every degree-2 cocycle is a coboundary of nabla_r P^{ir} d_i",
                             ok, r)

    rep.results.append(_timed(no_loop))
    rep.results.append(_timed(full))
    return rep


def suite_h2_pol3(items: Sequence[Loaded], measure: Sequence[Loaded] = ()) -> Report:
    rep = Report()
    ws = [it.witness() for it in items]
    ms = [it.witness() for it in measure]
    label = "+".join(it.name for it in items)

    def run() -> CheckResult:
        r = cohomology_probe(3, True, ws, measure=ms)
        res = _probe_result("h2-pol3", label, "no-loop degree-3 cohomology: " + r.verdict, r.residual == 0, r)
        res.stats["verdict"] = r.verdict
        return res

    rep.results.append(_timed(run))
    return rep


def suite_jet(items: Sequence[Loaded], order: int | None = None, deg_cap: int | None = None) -> Report:
    rep = Report()
    for item in items:
        g = item.geometry
        N = order if order is not None else item.scenario.order
        cap = deg_cap if deg_cap is not None else item.scenario.deg_cap
        t = time.perf_counter()
        jr = jet_suite(g, N, functions=_sweep(g, cap, constants=False), seeds=(1, 2))
        elapsed = round(time.perf_counter() - t, 3)
        for c in jr.checks:
            detail = f"determined: {c.determined}" + (f"; {c.detail}" if c.detail else "")
            rep.results.append(CheckResult("jet", item.name, f"{c.name} (N={N})", c.passed, detail))
        rep.results[-1].seconds = elapsed
    return rep


def suite_props(items: Sequence[Loaded], deg_cap: int | None = None) -> Report:
    rep = Report()
    for item in items:
        g = item.geometry
        ring = g.ring
        x = [ring.x(i) for i in range(1, g.d + 1)]
        P = bivector_from_array(ring, g.P)

        def bianchi() -> CheckResult:
            b = bianchi_check(g)
            return CheckResult("props", item.name, "first and second Bianchi identities", b.ok,
                               "" if b.ok else f"{len(b.first_failures)} / {len(b.second_failures)} failures")

        def jacobi() -> CheckResult:
            return CheckResult("props", item.name, "[P, P]_SN = 0", jacobi_check(P))

        def graded() -> CheckResult:
            V = vector_field(ring, [x[(i + 1) % g.d] * x[i] for i in range(g.d)])
            bcoef = {(0, g.d - 1): x[0] * x[-1] + x[-1] ** 2}
            if g.d > 2:
                bcoef[(1, 2)] = x[0]
            B = PolyVector(ring, 2, bcoef)
            f = function_polyvector(ring, x[0] * x[-1])
            samples = [f, V, P, B]
            if g.d > 2:
                samples.append(PolyVector(ring, 3, {(0, 1, 2): x[1] + x[0] * x[-1]}))
            bad = [(a.degree, b.degree, c.degree) for a, b, c in itertools.product(samples, repeat=3)
                   if a.degree + b.degree + c.degree <= g.d + 2 and not graded_jacobi_defect(a, b, c).is_zero()]
            return CheckResult("props", item.name, "graded Jacobi identity of the Schouten bracket", not bad,
                               "" if not bad else f"fails for degrees {bad[0]}")

        star = StarProduct3(g)
        mons = [x[0], x[-1], x[0] * x[-1] + x[1], x[0] ** 2 * x[-1], x[1] ** 2]

        def hochschild() -> CheckResult:
            bad = None
            for r in (1, 2, 3):
                C = _memo_cochain(Cochain(2, lambda a, b, r=r: star.component(r, a, b)))
                dd = hochschild_differential(hochschild_differential(C))
                for args in itertools.product(mons[:2], repeat=4):
                    if dd(*args) != 0:
                        bad = (r, args)
                        break
                if bad:
                    break
            return CheckResult("props", item.name, "Hochschild differential squares to zero on C_1, C_2, C_3",
                               bad is None)

        def chevalley() -> CheckResult:
            br = g.poisson_bracket
            cochains = [
                Cochain(1, lambda a: br(x[0] * x[-1], a)),
                polyvector_cochain(PolyVector(ring, 2, {(0, 1): x[-1] ** 2})),
                Cochain(2, lambda a, b: star.component(2, a, b) - star.component(2, b, a)),
            ]
            ok = True
            for C in cochains:
                dd = chevalley_differential(br, chevalley_differential(br, _memo_cochain(C)))
                # both differentials keep cochains alternating, so distinct arguments suffice
                for args in itertools.combinations(mons, C.arity + 2):
                    if dd(*args) != 0:
                        ok = False
                        break
            return CheckResult("props", item.name, "Chevalley-Poisson differential squares to zero", ok)

        def homog_star() -> CheckResult:
            sc = ScaledStar.build(star)
            ok = all(sc.homogeneity_defect(r, a, b) == 0 for r in range(ORDER + 1) for a in mons for b in mons)
            return CheckResult("props", item.name, "C_r(tP) = t^r C_r(P)", ok)

        def homog_terms() -> CheckResult:
            terms = enumerate_terms(2, 2, False)
            for fam in DEGREE3_NO_LOOP_FAMILIES:
                terms += enumerate_family(fam, 2, True)[:2]
            bad = [t.describe() for t in terms if not homogeneity_defect(t, g).is_zero()]
            return CheckResult("props", item.name, "enumerated terms scale as t^degree under P -> tP", not bad,
                               f"{len(terms)} terms" + (f"; first failure {bad[0]}" if bad else ""))

        for fn in (bianchi, jacobi, graded, hochschild, chevalley, homog_star, homog_terms):
            rep.results.append(_timed(fn))
    return rep


def _memo_cochain(C: Cochain) -> Cochain:
    cache: dict = {}

    def fn(*args):
        key = tuple(str(a) for a in args)
        if key not in cache:
            cache[key] = C(*args)
        return cache[key]

    return Cochain(C.arity, fn)


def run_suite(name: str, items: Sequence[Loaded], *, order: int | None = None,
              deg_cap: int | None = None) -> Report:
    if name == "all":
        rep = Report()
        for s in SUITES:
            rep.extend(run_suite(s, items, order=order, deg_cap=deg_cap))
        return rep
    if name not in SUITES:
        raise UnknownSuiteError(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    if not items:
        raise ValueError("no scenarios given")
    if name == "assoc3":
        return suite_assoc3(items, deg_cap)
    if name == "cocycle-s3":
        return suite_cocycle_s3(items, deg_cap)
    if name == "dx-props":
        return suite_dx_props(items, deg_cap)
    if name == "h2-pol2":
        return suite_h2_pol2(items)
    if name == "h2-pol3":
        return suite_h2_pol3(items)
    if name == "jet":
        return suite_jet(items, order, deg_cap)
    return suite_props(items, deg_cap)
