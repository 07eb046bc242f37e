"""Scenario runner: JSON configs in, verdict tables or CSV out.

A scenario names Bernstein functions from the catalog, operator sources
(explicit matrices, random commuting recipes, Fourier models, spectral
rays), and a list of experiments wiring them together.  ``run`` executes
every experiment, collects one row per assertion, and ``emit_report``
renders the result as a per-experiment text table or as RFC-4180 CSV with
one row per assertion.

Exit codes: 0 every row PASS or INAPPLICABLE, 1 at least one assertion
failed, 2 config error, 3 numeric failure inside an experiment.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.linalg import expm

from .analysis import (boundedness_experiment, convergence_experiment,
                       holomorphy_criterion, moment_check)
from .bernstein import (BernsteinFunction, QuadratureError, cone_combine,
                        diagonal_lift, direct_sum, fractional_power, linear,
                        log1m, poisson)
from .calculus import (CatalogGapError, apply_psi, apply_psi_spectral,
                       factorization_check, generator_limit_check,
                       laplace_identity_error, subordinated)
from .semigroup import (DiagonalRayModel, OperatorTuple,
                        fourier_translation_model, make_commuting_random,
                        make_tuple)
from .spectra import mapping_check

_CATALOG_HELP = (
    ("fractional_power", "parameters {alpha}, 0 < alpha <= 1"),
    ("poisson", "no parameters"),
    ("log1m", "no parameters"),
    ("linear", "parameters {c1: [..]}, nonnegative drift"),
    ("diagonal_lift", "parameters {w: [..]}, children [phi]"),
    ("direct_sum", "children [psi1, psi2]"),
    ("cone_combination", "parameters {coefficients: [..]}, children [..]"),
)

_EXPERIMENT_KINDS = ("oracle_equivalence", "subordination", "spectral_mapping",
                     "factorization", "holomorphy", "moment_sweep",
                     "boundedness", "convergence")


class ConfigError(ValueError):
    """Config rejection carrying a JSON-path field location."""

    def __init__(self, message: str, location: str = ""):
        text = "%s (at %s)" % (message, location) if location else message
        super().__init__(text)
        self.location = location


@dataclass(frozen=True)
class Row:
    """One assertion: verdict PASS, FAIL, INAPPLICABLE, or ERROR."""

    experiment: str
    case_id: str
    quantity: str
    value: Optional[float]
    bound: Optional[float]
    verdict: str


@dataclass(frozen=True)
class ExperimentResult:
    name: str
    kind: str
    rows: tuple
    wall: float
    fallback: bool = False
    notes: tuple = ()

    @property
    def verdict(self) -> str:
        kinds = {r.verdict for r in self.rows}
        if "ERROR" in kinds:
            return "ERROR"
        if "FAIL" in kinds:
            return "FAIL"
        if kinds == {"INAPPLICABLE"}:
            return "INAPPLICABLE"
        return "PASS"


@dataclass(frozen=True)
class RunReport:
    seed: int
    tol: float
    experiments: tuple
    wall: float

    def rows(self):
        return [r for res in self.experiments for r in res.rows]

    @property
    def verdict(self) -> str:
        kinds = {r.verdict for r in self.rows()}
        return "FAIL" if ("FAIL" in kinds or "ERROR" in kinds) else "PASS"

    @property
    def exit_code(self) -> int:
        kinds = {r.verdict for r in self.rows()}
        if "ERROR" in kinds:
            return 3
        if "FAIL" in kinds:
            return 1
        return 0


@dataclass
class ScenarioConfig:
    tol: float
    seed: int
    fmt: str
    functions: dict
    function_specs: tuple
    operator_specs: tuple
    experiment_specs: tuple

    def operator_spec(self, ref: str) -> dict:
        for spec in self.operator_specs:
            if spec["id"] == ref:
                return spec
        raise KeyError(ref)


# ---------------------------------------------------------------------------
# config parsing


def _fail(message: str, location: str):
    raise ConfigError(message, location)


def _as_number(v, location: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail("expected a number", location)
    return float(v)


def _as_int(v, location: str, minimum: Optional[int] = None) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        _fail("expected an integer", location)
    if minimum is not None and v < minimum:
        _fail("must be at least %d" % minimum, location)
    return int(v)


def _as_complex_pair(v, location: str) -> list:
    # canonical form is [re, im]; bare reals are promoted
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return [float(v), 0.0]
    if isinstance(v, list) and len(v) == 2:
        return [_as_number(v[0], location + "[0]"),
                _as_number(v[1], location + "[1]")]
    _fail("expected a number or an [re, im] pair", location)


def _as_id(v, location: str) -> str:
    if not isinstance(v, str) or not v:
        _fail("expected a nonempty string id", location)
    return v


def _check_keys(raw: dict, allowed, location: str):
    for key in raw:
        if key not in allowed:
            _fail("unknown key %r" % key, location + "." + str(key))


def _parse_function(raw, idx: int, known: dict):
    loc = "functions[%d]" % idx
    if not isinstance(raw, dict):
        _fail("expected an object", loc)
    _check_keys(raw, ("id", "catalog", "parameters", "children"), loc)
    fid = _as_id(raw.get("id"), loc + ".id")
    if fid in known:
        _fail("duplicate function id %r" % fid, loc + ".id")
    catalog = _as_id(raw.get("catalog"), loc + ".catalog")
    params = raw.get("parameters", {})
    if not isinstance(params, dict):
        _fail("expected an object", loc + ".parameters")
    children = raw.get("children", [])
    if not isinstance(children, list):
        _fail("expected a list of function ids", loc + ".children")
    kids = []
    for k, ref in enumerate(children):
        ref = _as_id(ref, loc + ".children[%d]" % k)
        if ref not in known:
            _fail("unresolved function reference %r" % ref,
                  loc + ".children[%d]" % k)
        kids.append(ref)

    def need_children(count):
        if len(kids) != count:
            _fail("%r takes exactly %d children" % (catalog, count),
                  loc + ".children")

    norm_params: dict = {}
    if catalog == "fractional_power":
        need_children(0)
        alpha = _as_number(params.get("alpha"), loc + ".parameters.alpha")
        if not 0.0 < alpha <= 1.0:
            _fail("alpha must lie in (0, 1]", loc + ".parameters.alpha")
        fn = fractional_power(alpha)
        norm_params = {"alpha": alpha}
    elif catalog == "poisson":
        need_children(0)
        fn = poisson()
    elif catalog == "log1m":
        need_children(0)
        fn = log1m()
    elif catalog == "linear":
        need_children(0)
        c1 = params.get("c1", [1.0])
        if not isinstance(c1, list) or not c1:
            _fail("expected a nonempty list of numbers",
                  loc + ".parameters.c1")
        c1 = [_as_number(v, loc + ".parameters.c1[%d]" % k)
              for k, v in enumerate(c1)]
        try:
            fn = linear(c1)
        except ValueError as exc:
            _fail(str(exc), loc + ".parameters.c1")
        norm_params = {"c1": c1}
    elif catalog == "diagonal_lift":
        need_children(1)
        w = params.get("w")
        if not isinstance(w, list) or not w:
            _fail("expected a nonempty list of numbers", loc + ".parameters.w")
        w = [_as_number(v, loc + ".parameters.w[%d]" % k)
             for k, v in enumerate(w)]
        try:
            fn = diagonal_lift(known[kids[0]], w)
        except ValueError as exc:
            _fail(str(exc), loc + ".parameters.w")
        norm_params = {"w": w}
    elif catalog == "direct_sum":
        need_children(2)
        fn = direct_sum(known[kids[0]], known[kids[1]])
    elif catalog == "cone_combination":
        coeffs = params.get("coefficients")
        if not isinstance(coeffs, list) or len(coeffs) != len(kids) or not kids:
            _fail("coefficients and children must have equal positive length",
                  loc + ".parameters.coefficients")
        coeffs = [_as_number(v, loc + ".parameters.coefficients[%d]" % k)
                  for k, v in enumerate(coeffs)]
        try:
            fn = cone_combine(list(zip(coeffs, (known[r] for r in kids))))
        except ValueError as exc:
            _fail(str(exc), loc + ".parameters.coefficients")
        norm_params = {"coefficients": coeffs}
    else:
        _fail("unknown catalog id %r" % catalog, loc + ".catalog")
    spec = {"id": fid, "catalog": catalog, "parameters": norm_params,
            "children": kids}
    return fid, fn, spec


def _parse_matrices(mats, loc: str):
    if not isinstance(mats, list) or not mats:
        _fail("expected a nonempty list of matrices", loc)
    norm = []
    d = None
    for j, mat in enumerate(mats):
        mloc = "%s[%d]" % (loc, j)
        if not isinstance(mat, list) or not mat:
            _fail("malformed matrix: expected a list of rows", mloc)
        if d is None:
            d = len(mat)
        if len(mat) != d:
            _fail("malformed matrix: generators must share one size", mloc)
        rows = []
        for r, row in enumerate(mat):
            if not isinstance(row, list) or len(row) != d:
                _fail("malformed matrix: row %d is not length %d" % (r, d),
                      mloc)
            rows.append([_as_complex_pair(v, "%s[%d][%d]" % (mloc, r, c))
                         for c, v in enumerate(row)])
        norm.append(rows)
    return norm, d


def _parse_operator(raw, idx: int, seen: dict):
    loc = "operators[%d]" % idx
    if not isinstance(raw, dict):
        _fail("expected an object", loc)
    _check_keys(raw, ("id", "matrices", "random", "fourier", "ray"), loc)
    oid = _as_id(raw.get("id"), loc + ".id")
    if oid in seen:
        _fail("duplicate operator id %r" % oid, loc + ".id")
    kinds = [k for k in ("matrices", "random", "fourier", "ray") if k in raw]
    if len(kinds) != 1:
        _fail("specify exactly one of matrices, random, fourier, ray", loc)
    kind = kinds[0]
    spec = {"id": oid}
    if kind == "matrices":
        norm, d = _parse_matrices(raw["matrices"], loc + ".matrices")
        spec["matrices"] = norm
        arity = len(norm)
    elif kind == "random":
        sub = raw["random"]
        if not isinstance(sub, dict):
            _fail("expected an object", loc + ".random")
        _check_keys(sub, ("n", "d", "seed", "box"), loc + ".random")
        n = _as_int(sub.get("n"), loc + ".random.n", minimum=1)
        d = _as_int(sub.get("d"), loc + ".random.d", minimum=1)
        seed = _as_int(sub.get("seed", 0), loc + ".random.seed", minimum=0)
        rec = {"n": n, "d": d, "seed": seed}
        if "box" in sub:
            box = sub["box"]
            bloc = loc + ".random.box"
            if not isinstance(box, list) or len(box) != 2:
                _fail("expected [[re_lo, re_hi], [im_lo, im_hi]]", bloc)
            (re_lo, re_hi), (im_lo, im_hi) = (
                [_as_number(v, "%s[%d][%d]" % (bloc, a, b))
                 for b, v in enumerate(pair)]
                for a, pair in enumerate(box))
            if not (re_lo <= re_hi < 0.0):
                _fail("real range must satisfy re_lo <= re_hi < 0", bloc)
            if im_lo > im_hi:
                _fail("imaginary range is reversed", bloc)
            rec["box"] = [[re_lo, re_hi], [im_lo, im_hi]]
        spec["random"] = rec
        arity = n
    elif kind == "fourier":
        sub = raw["fourier"]
        if not isinstance(sub, dict):
            _fail("expected an object", loc + ".fourier")
        _check_keys(sub, ("K", "n"), loc + ".fourier")
        K = _as_int(sub.get("K"), loc + ".fourier.K", minimum=1)
        n = _as_int(sub.get("n", 1), loc + ".fourier.n", minimum=1)
        spec["fourier"] = {"K": K, "n": n}
        arity = n
    else:
        sub = raw["ray"]
        if not isinstance(sub, dict):
            _fail("expected an object", loc + ".ray")
        _check_keys(sub, ("theta",), loc + ".ray")
        theta = _as_number(sub.get("theta"), loc + ".ray.theta")
        if np.cos(theta) > 1e-15:
            _fail("ray must lie in the closed left half-plane",
                  loc + ".ray.theta")
        spec["ray"] = {"theta": theta}
        arity = None  # not an operator tuple
    return oid, arity, spec


def _parse_experiment(raw, idx: int, functions: dict, op_arity: dict):
    loc = "experiments[%d]" % idx
    if not isinstance(raw, dict):
        _fail("expected an object", loc)
    kind = raw.get("kind")
    if kind not in _EXPERIMENT_KINDS:
        _fail("unknown experiment kind %r" % kind, loc + ".kind")
    spec = {"kind": kind}
    if "id" in raw:
        spec["id"] = _as_id(raw["id"], loc + ".id")

    def fn_ref(key="function"):
        ref = _as_id(raw.get(key), "%s.%s" % (loc, key))
        if ref not in functions:
            _fail("unresolved function reference %r" % ref,
                  "%s.%s" % (loc, key))
        spec[key] = ref
        return functions[ref]

    def op_ref(arity=None):
        ref = _as_id(raw.get("operator"), loc + ".operator")
        if ref not in op_arity:
            _fail("unresolved operator reference %r" % ref, loc + ".operator")
        op_n = op_arity[ref]
        if op_n is None:
            _fail("experiment needs an operator tuple, not a ray model",
                  loc + ".operator")
        if arity is not None and op_n != arity:
            _fail("function arity %d does not match operator size %d"
                  % (arity, op_n), loc + ".operator")
        spec["operator"] = ref
        return ref

    allowed = {"kind", "id", "function", "operator"}
    if kind == "oracle_equivalence":
        op_ref(arity=fn_ref().n)
    elif kind == "subordination":
        allowed |= {"times"}
        fn = fn_ref()
        op_ref(arity=fn.n)
        times = raw.get("times", [0.1, 1.0, 5.0])
        if not isinstance(times, list) or not times:
            _fail("expected a nonempty list of positive times", loc + ".times")
        times = [_as_number(t, loc + ".times[%d]" % k)
                 for k, t in enumerate(times)]
        if any(t <= 0 for t in times):
            _fail("times must be positive", loc + ".times")
        spec["times"] = times
    elif kind == "spectral_mapping":
        allowed |= {"parts"}
        fn = fn_ref()
        op_ref(arity=fn.n)
        parts = raw.get("parts", [1, 2, 4, 5])
        if not isinstance(parts, list) or not parts:
            _fail("expected a nonempty list of parts 1..5", loc + ".parts")
        parts = [_as_int(p, loc + ".parts[%d]" % k) for k, p in enumerate(parts)]
        if any(p not in (1, 2, 3, 4, 5) for p in parts):
            _fail("parts must be within 1..5", loc + ".parts")
        spec["parts"] = parts
    elif kind == "factorization":
        allowed |= {"lambdas", "trials"}
        fn = fn_ref()
        op_ref(arity=fn.n)
        if "lambdas" in raw:
            lams = raw["lambdas"]
            lloc = loc + ".lambdas"
            if not isinstance(lams, list) or not lams:
                _fail("expected a nonempty list of lambda tuples", lloc)
            norm = []
            for k, lam in enumerate(lams):
                if not isinstance(lam, list) or len(lam) != fn.n:
                    _fail("lambda must list %d components" % fn.n,
                          "%s[%d]" % (lloc, k))
                pairs = [_as_complex_pair(v, "%s[%d][%d]" % (lloc, k, c))
                         for c, v in enumerate(lam)]
                if any(p[0] >= 0 for p in pairs):
                    _fail("factorization needs Re lambda_j < 0",
                          "%s[%d]" % (lloc, k))
                norm.append(pairs)
            spec["lambdas"] = norm
        else:
            spec["trials"] = _as_int(raw.get("trials", 5), loc + ".trials",
                                     minimum=1)
    elif kind == "holomorphy":
        allowed |= {"models", "bounds"}
        models = raw.get("models")
        if not isinstance(models, list) or not models:
            _fail("expected a nonempty list of models", loc + ".models")
        norm_models = []
        for k, m in enumerate(models):
            mloc = loc + ".models[%d]" % k
            if isinstance(m, str):
                if m not in op_arity:
                    _fail("unresolved operator reference %r" % m, mloc)
                if op_arity[m] not in (None, 1):
                    _fail("holomorphy model must be a ray or a one-generator "
                          "tuple", mloc)
                norm_models.append(m)
            else:
                norm_models.append(_as_number(m, mloc))
        bounds = raw.get("bounds")
        if not isinstance(bounds, list) or len(bounds) != len(norm_models):
            _fail("bounds must list one M_j per model", loc + ".bounds")
        bounds = [_as_number(b, loc + ".bounds[%d]" % k)
                  for k, b in enumerate(bounds)]
        if any(b < 1.0 for b in bounds):
            _fail("semigroup bounds are at least 1", loc + ".bounds")
        spec["models"] = norm_models
        spec["bounds"] = bounds
        if "function" in raw:
            fn = fn_ref()
            if fn.n != len(norm_models):
                _fail("function arity %d does not match %d models"
                      % (fn.n, len(norm_models)), loc + ".function")
    elif kind == "moment_sweep":
        allowed |= {"trials"}
        fn = fn_ref()
        op_ref(arity=fn.n)
        spec["trials"] = _as_int(raw.get("trials", 100), loc + ".trials",
                                 minimum=1)
    elif kind == "boundedness":
        allowed |= {"K_list"}
        fn_ref()
        K_list = raw.get("K_list", [10, 50, 100])
        if not isinstance(K_list, list) or not K_list:
            _fail("expected a nonempty list of cutoffs", loc + ".K_list")
        spec["K_list"] = [_as_int(K, loc + ".K_list[%d]" % k, minimum=1)
                          for k, K in enumerate(K_list)]
    else:  # convergence names a function list instead of one function
        allowed = {"kind", "id", "functions", "operator", "target"}
        refs = raw.get("functions")
        if not isinstance(refs, list) or len(refs) < 2:
            _fail("expected at least two function ids", loc + ".functions")
        arity = None
        for k, ref in enumerate(refs):
            ref = _as_id(ref, loc + ".functions[%d]" % k)
            if ref not in functions:
                _fail("unresolved function reference %r" % ref,
                      loc + ".functions[%d]" % k)
            if arity is None:
                arity = functions[ref].n
            elif functions[ref].n != arity:
                _fail("sequence members must share one arity",
                      loc + ".functions[%d]" % k)
        spec["functions"] = list(refs)
        op_ref(arity=arity)
        target = _as_number(raw.get("target", 1e-3), loc + ".target")
        if target <= 0:
            _fail("target must be positive", loc + ".target")
        spec["target"] = target
    _check_keys(raw, allowed, loc)
    return spec


def parse_config(document) -> ScenarioConfig:
    """Validate a scenario document and fill defaults.

    ``document`` is JSON text or an already-parsed object.  Errors carry the
    offending field location; defaults are tol 1e-6, seed 0, format text.
    """
    if isinstance(document, bytes):
        document = document.decode("utf-8")
    if isinstance(document, str):
        try:
            raw = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError("invalid JSON: %s" % exc.msg,
                              "line %d column %d" % (exc.lineno, exc.colno))
    else:
        raw = document
    if not isinstance(raw, dict):
        _fail("config must be a JSON object", "$")
    _check_keys(raw, ("tol", "seed", "format", "functions", "operators",
                      "experiments"), "$")
    tol = _as_number(raw.get("tol", 1e-6), "tol")
    if tol <= 0:
        _fail("tolerances must be positive", "tol")
    seed = _as_int(raw.get("seed", 0), "seed", minimum=0)
    fmt = raw.get("format", "text")
    if fmt not in ("text", "csv"):
        _fail("format must be text or csv", "format")

    functions: dict = {}
    function_specs = []
    for i, f in enumerate(raw.get("functions", [])):
        fid, fn, spec = _parse_function(f, i, functions)
        functions[fid] = fn
        function_specs.append(spec)

    op_arity: dict = {}
    operator_specs = []
    for i, o in enumerate(raw.get("operators", [])):
        oid, arity, spec = _parse_operator(o, i, op_arity)
        op_arity[oid] = arity
        operator_specs.append(spec)

    experiment_specs = [
        _parse_experiment(e, i, functions, op_arity)
        for i, e in enumerate(raw.get("experiments", []))]

    return ScenarioConfig(tol=tol, seed=seed, fmt=fmt, functions=functions,
                          function_specs=tuple(function_specs),
                          operator_specs=tuple(operator_specs),
                          experiment_specs=tuple(experiment_specs))


def config_document(config: ScenarioConfig) -> dict:
    """Normalized document; parse(config_document(parse(doc))) is idempotent."""
    return {"tol": config.tol, "seed": config.seed, "format": config.fmt,
            "functions": [dict(s) for s in config.function_specs],
            "operators": [dict(s) for s in config.operator_specs],
            "experiments": [dict(s) for s in config.experiment_specs]}


# ---------------------------------------------------------------------------
# execution


class _TupleInvalid(Exception):
    """Operator construction failed; experiments referencing it FAIL."""


class _BuildFailure:
    def __init__(self, message: str):
        self.message = message


def _build_operator(spec: dict):
    if "matrices" in spec:
        mats = [np.array([[complex(re, im) for re, im in row]
                          for row in mat]) for mat in spec["matrices"]]
        return make_tuple(mats)
    if "random" in spec:
        rec = spec["random"]
        box = rec.get("box")
        kwargs = {}
        if box is not None:
            kwargs["spectral_box"] = (tuple(box[0]), tuple(box[1]))
        return make_commuting_random(rec["n"], rec["d"], seed=rec["seed"],
                                     **kwargs)
    if "fourier" in spec:
        return fourier_translation_model(spec["fourier"]["K"],
                                         n=spec["fourier"]["n"])
    return DiagonalRayModel(theta=spec["ray"]["theta"])


def _operator_for(ops: dict, ref: str, tuple_only: bool = True):
    ob = ops[ref]
    if isinstance(ob, _BuildFailure):
        raise _TupleInvalid(ob.message)
    if tuple_only and not isinstance(ob, OperatorTuple):
        raise _TupleInvalid("operator %r is a ray model, not a tuple" % ref)
    return ob


def _quad_tol(tol: float) -> float:
    # quadrature budget one decade under the verdict threshold
    return min(1e-9, tol / 10.0)


def _verdict(ok) -> str:
    return "PASS" if ok else "FAIL"


def _run_oracle(name, spec, cfg, ops, seed, tol, idx):
    psi = cfg.functions[spec["function"]]
    A = _operator_for(ops, spec["operator"])
    if A.spectral is None:
        return ([Row(name, "oracle", "spectral_oracle", None, None,
                     "INAPPLICABLE")],
                False, ("operator carries no spectral data",))
    S = apply_psi_spectral(psi, A)
    Q = apply_psi(psi, A, tol=_quad_tol(tol))
    rel = float(np.linalg.norm(Q - S, 2) / max(1.0, np.linalg.norm(S, 2)))
    return ([Row(name, "norm", "relative_error", rel, tol,
                 _verdict(rel <= tol))], False, ())


def _run_subordination(name, spec, cfg, ops, seed, tol, idx):
    psi = cfg.functions[spec["function"]]
    A = _operator_for(ops, spec["operator"])
    qtol = _quad_tol(tol)
    rows = []
    try:
        G = apply_psi(psi, A, tol=qtol)
        mags = np.geomspace(0.1, 3.0, 7)
        stretch = np.linspace(1.0, 1.5, psi.n)
        s_grid = [-v * stretch for v in mags]
        for t in spec["times"]:
            S = subordinated(psi, A, t, tol=qtol)
            E = expm(t * G)
            rel = float(np.linalg.norm(S - E, 2)
                        / max(1.0, np.linalg.norm(E, 2)))
            rows.append(Row(name, "t=%g" % t, "semigroup_error", rel, tol,
                            _verdict(rel <= tol)))
            lap = laplace_identity_error(psi, t, s_grid, tol=qtol)
            rows.append(Row(name, "t=%g" % t, "laplace_error", lap, tol,
                            _verdict(lap <= tol)))
        rng = np.random.default_rng([seed, idx])
        x = rng.standard_normal(A.d)
        x = x / np.linalg.norm(x)
        t_seq = (1e-2, 1e-3, 1e-4, 1e-5)
        res = generator_limit_check(psi, A, x, t_seq)
        for t, r in zip(t_seq, res):
            rows.append(Row(name, "t=%g" % t, "generator_residual", float(r),
                            None, "PASS"))
        drift = float(np.max(np.diff(res)))
        rows.append(Row(name, "limit", "generator_monotone", drift, 0.0,
                        _verdict(drift <= 0.0)))
        rows.append(Row(name, "limit", "generator_residual_final",
                        float(res[-1]), 1e-4, _verdict(res[-1] <= 1e-4)))
    except CatalogGapError as exc:
        return ([Row(name, "family", "closed_form_family", None, None,
                     "INAPPLICABLE")],
                True, ("no closed-form subordinator family: %s" % exc,))
    return rows, False, ()


def _run_mapping(name, spec, cfg, ops, seed, tol, idx):
    psi = cfg.functions[spec["function"]]
    A = _operator_for(ops, spec["operator"])
    rows = []
    notes = []
    for part in spec["parts"]:
        rep = mapping_check(psi, A, part, tol=tol)
        if not rep.applicable:
            rows.append(Row(name, "part%d" % part, "hypothesis", None, None,
                            "INAPPLICABLE"))
            notes.append("part %d inapplicable: %s" % (part, rep.reason))
            continue
        margins = []
        for i, r in enumerate(rep.rows):
            rows.append(Row(name, "part%d:%d" % (part, i), "distance",
                            r.distance, r.threshold,
                            _verdict(r.verdict == "pass")))
            margins.append(r.threshold - r.distance)
        if margins:
            worst = float(min(margins))
            rows.append(Row(name, "part%d" % part, "worst_margin", worst, 0.0,
                            _verdict(worst >= 0.0)))
        else:
            rows.append(Row(name, "part%d" % part, "vacuous", None, None,
                            "PASS"))
    return rows, False, tuple(notes)


def _run_factorization(name, spec, cfg, ops, seed, tol, idx):
    psi = cfg.functions[spec["function"]]
    A = _operator_for(ops, spec["operator"])
    if "lambdas" in spec:
        lams = [np.array([complex(re, im) for re, im in lam])
                for lam in spec["lambdas"]]
    else:
        lams = []
        for k in range(spec["trials"]):
            rng = np.random.default_rng([seed, idx, k])
            lams.append(rng.uniform(-3.0, -0.3, A.n)
                        + 1j * rng.uniform(-2.0, 2.0, A.n))
    rows = []
    for k, lam in enumerate(lams):
        r = factorization_check(psi, A, lam, tol=_quad_tol(tol))
        rows.append(Row(name, "lambda%d" % k, "relative_residual", float(r),
                        tol, _verdict(r <= tol)))
    return rows, False, ()


def _run_holomorphy(name, spec, cfg, ops, seed, tol, idx):
    models = [m if isinstance(m, float)
              else _operator_for(ops, m, tuple_only=False)
              for m in spec["models"]]
    psi = cfg.functions[spec["function"]] if "function" in spec else None
    rep = holomorphy_criterion(models, spec["bounds"], psi=psi)
    rows = []
    for j, b in enumerate(rep.defects):
        rows.append(Row(name, "model%d" % j, "defect", float(b), 2.0,
                        _verdict(b <= 2.0)))
    rows.append(Row(name, "criterion", "weighted_sum", rep.weighted_sum, 2.0,
                    "PASS" if rep.satisfied else "INAPPLICABLE"))
    notes = ()
    if not rep.satisfied:
        notes = ("weighted defect sum %.6g reaches 2; criterion gives no "
                 "conclusion" % rep.weighted_sum,)
    if rep.measured_limsup is not None:
        cap = rep.weighted_sum + 0.05
        rows.append(Row(name, "limsup", "measured_limsup",
                        rep.measured_limsup, cap,
                        _verdict(rep.measured_limsup <= cap)))
    return rows, False, notes


def _run_moment(name, spec, cfg, ops, seed, tol, idx):
    psi = cfg.functions[spec["function"]]
    op_spec = cfg.operator_spec(spec["operator"])
    fixed = None
    if "random" not in op_spec:
        fixed = _operator_for(ops, spec["operator"])
    else:
        _operator_for(ops, spec["operator"])  # surface build failures once
    rows = []
    worst = None
    for trial in range(spec["trials"]):
        if fixed is None:
            rec = op_spec["random"]
            kwargs = {}
            if rec.get("box") is not None:
                kwargs["spectral_box"] = (tuple(rec["box"][0]),
                                          tuple(rec["box"][1]))
            A = make_commuting_random(rec["n"], rec["d"],
                                      seed=[rec["seed"], seed, trial],
                                      **kwargs)
        else:
            A = fixed
        rng = np.random.default_rng([seed, idx, trial])
        x = rng.standard_normal(A.d)
        rep = moment_check(psi, A, x)
        scale = max(1.0, rep.lhs, rep.rhs)
        bound = -(tol * 1e-3) * scale
        rows.append(Row(name, "trial%d" % trial, "slack", rep.slack, bound,
                        _verdict(rep.slack >= bound)))
        if worst is None or rep.slack < worst[1]:
            worst = (trial, rep.slack)
    rows.append(Row(name, "trial%d" % worst[0], "worst_slack", worst[1],
                    -(tol * 1e-3), _verdict(worst[1] >= -(tol * 1e-3))))
    note = "worst slack %.12g at trial%d" % (worst[1], worst[0])
    return rows, False, (note,)


def _run_boundedness(name, spec, cfg, ops, seed, tol, idx):
    psi = cfg.functions[spec["function"]]
    K_list = spec["K_list"]
    norms = boundedness_experiment(psi, K_list)
    rows = [Row(name, "K=%d" % K, "norm", float(v), None, "PASS")
            for K, v in zip(K_list, norms)]
    if len(K_list) >= 2:
        if psi.bounded:
            ratio = float(np.max(norms) / np.min(norms))
            rows.append(Row(name, "dichotomy", "max_over_min", ratio, 10.0,
                            _verdict(ratio < 10.0)))
        else:
            growth = float(norms[-1] / norms[0])
            rows.append(Row(name, "dichotomy", "growth_factor", growth, 10.0,
                            _verdict(growth > 10.0)))
    return rows, False, ()


def _run_convergence(name, spec, cfg, ops, seed, tol, idx):
    psis = [cfg.functions[r] for r in spec["functions"]]
    A = _operator_for(ops, spec["operator"])
    rng = np.random.default_rng([seed, idx])
    x = rng.standard_normal(A.d)
    x = x / np.linalg.norm(x)
    try:
        res = convergence_experiment(psis, A, x)
    except ValueError as exc:
        if "decaying" not in str(exc):
            raise
        return ([Row(name, "decay", "pointwise_decay", None, None, "FAIL")],
                False, (str(exc),))
    rows = [Row(name, ref, "residual", float(v), None, "PASS")
            for ref, v in zip(spec["functions"], res)]
    rows.append(Row(name, "final", "final_residual", float(res[-1]),
                    spec["target"], _verdict(res[-1] <= spec["target"])))
    return rows, False, ()


_RUNNERS = {
    "oracle_equivalence": _run_oracle,
    "subordination": _run_subordination,
    "spectral_mapping": _run_mapping,
    "factorization": _run_factorization,
    "holomorphy": _run_holomorphy,
    "moment_sweep": _run_moment,
    "boundedness": _run_boundedness,
    "convergence": _run_convergence,
}


def _run_experiment(cfg, spec, idx, ops, seed, tol) -> ExperimentResult:
    kind = spec["kind"]
    name = spec.get("id", "%s[%d]" % (kind, idx))
    start = time.perf_counter()
    fallback = False
    try:
        rows, fallback, notes = _RUNNERS[kind](name, spec, cfg, ops, seed,
                                               tol, idx)
    except _TupleInvalid as exc:
        rows = [Row(name, "setup", "tuple_validation", None, None, "FAIL")]
        notes = (str(exc),)
    except (QuadratureError, CatalogGapError, FloatingPointError,
            ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        rows = [Row(name, "error", type(exc).__name__, None, None, "ERROR")]
        notes = (str(exc),)
    return ExperimentResult(name=name, kind=kind, rows=tuple(rows),
                            wall=time.perf_counter() - start,
                            fallback=fallback, notes=tuple(notes))


def run(config: ScenarioConfig, seed: Optional[int] = None,
        tol: Optional[float] = None, progress=None) -> RunReport:
    """Execute every experiment; deterministic given (config, seed).

    Experiments run on a small worker pool; results keep config order.
    Operator construction failures become FAIL rows in each referencing
    experiment, module errors become ERROR rows, and partial results are
    always retained.
    """
    run_seed = config.seed if seed is None else int(seed)
    run_tol = config.tol if tol is None else float(tol)
    if run_tol <= 0:
        raise ConfigError("tolerances must be positive", "tol")
    start = time.perf_counter()
    ops = {}
    for spec in config.operator_specs:
        try:
            ops[spec["id"]] = _build_operator(spec)
        except (ValueError, np.linalg.LinAlgError) as exc:
            ops[spec["id"]] = _BuildFailure(str(exc))
    specs = list(config.experiment_specs)
    results = []
    if specs:
        workers = min(4, len(specs))
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_experiment, config, spec, i, ops,
                                   run_seed, run_tol)
                       for i, spec in enumerate(specs)]
            for i, fut in enumerate(futures):
                res = fut.result()
                if progress is not None:
                    progress("[%d/%d] %s: %s (%.2fs)"
                             % (i + 1, len(specs), res.name, res.verdict,
                                res.wall))
                results.append(res)
    return RunReport(seed=run_seed, tol=run_tol, experiments=tuple(results),
                     wall=time.perf_counter() - start)


# ---------------------------------------------------------------------------
# report rendering


def _fmt_num(v) -> str:
    return "" if v is None else "%.12g" % v


def _csv_field(s: str) -> str:
    return '"%s"' % s.replace('"', '""')


def _emit_csv(report: RunReport) -> bytes:
    lines = ["experiment,case_id,quantity,value,bound,verdict"]
    for r in report.rows():
        lines.append(",".join((_csv_field(r.experiment), _csv_field(r.case_id),
                               _csv_field(r.quantity), _fmt_num(r.value),
                               _fmt_num(r.bound), _csv_field(r.verdict))))
    return ("\n".join(lines) + "\n").encode("utf-8")


def _emit_text(report: RunReport) -> bytes:
    head = ("experiment", "kind", "rows", "fail", "wall", "verdict")
    body = []
    for res in report.experiments:
        failures = sum(r.verdict in ("FAIL", "ERROR") for r in res.rows)
        body.append((res.name, res.kind, str(len(res.rows)), str(failures),
                     "%.2fs" % res.wall, res.verdict))
    widths = [max(len(h), *(len(b[i]) for b in body)) if body else len(h)
              for i, h in enumerate(head)]

    def line(cells):
        return "  ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip()

    out = ["scenario run: seed %d, tol %g" % (report.seed, report.tol), "",
           line(head)]
    out.extend(line(b) for b in body)
    notes = []
    for res in report.experiments:
        for note in res.notes:
            notes.append("  %s: %s" % (res.name, note))
        if res.fallback:
            notes.append("  %s: closed-form fallback flagged" % res.name)
        bad = [r for r in res.rows if r.verdict in ("FAIL", "ERROR")]
        for r in bad[:5]:
            notes.append("  %s: %s %s %s exceeds %s [%s]"
                         % (res.name, r.case_id, r.quantity, _fmt_num(r.value),
                            _fmt_num(r.bound), r.verdict))
    if notes:
        out.append("")
        out.append("notes:")
        out.extend(notes)
    rows = report.rows()
    failed = sum(r.verdict in ("FAIL", "ERROR") for r in rows)
    out.append("")
    out.append("OVERALL %s (%d experiments, %d rows, %d failed; %.2fs)"
               % (report.verdict, len(report.experiments), len(rows), failed,
                  report.wall))
    return ("\n".join(out) + "\n").encode("utf-8")


def emit_report(report: RunReport, fmt: str) -> bytes:
    """text: per-experiment verdict table; csv: one row per assertion."""
    if fmt == "csv":
        return _emit_csv(report)
    if fmt == "text":
        return _emit_text(report)
    raise ValueError("format must be text or csv")


# ---------------------------------------------------------------------------
# entry point


def _load_config_text(path: str) -> str:
    p = Path(path)
    if p.is_file():
        return p.read_text(encoding="utf-8")
    name = path if path.endswith(".json") else path + ".json"
    bundled = resources.files("bpcalc") / "scenarios" / name
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise FileNotFoundError(path)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bpcalc",
        description="Bernstein-function operator calculus scenario runner")
    parser.add_argument("--list-catalog", action="store_true",
                        help="print the function catalog and exit")
    sub = parser.add_subparsers(dest="command")
    runp = sub.add_parser("run", help="execute a scenario config")
    runp.add_argument("config",
                      help="path to a JSON scenario, or a bundled name")
    runp.add_argument("--format", choices=("text", "csv"), default=None,
                      help="override the config output format")
    runp.add_argument("--seed", type=int, default=None,
                      help="override the config seed")
    runp.add_argument("--tol", type=float, default=None,
                      help="override the config tolerance")
    runp.add_argument("--out", default=None,
                      help="write the report to a file instead of stdout")
    args = parser.parse_args(argv)

    if args.list_catalog:
        width = max(len(cid) for cid, _ in _CATALOG_HELP)
        for cid, desc in _CATALOG_HELP:
            print("%s  %s" % (cid.ljust(width), desc))
        return 0
    if args.command != "run":
        parser.print_usage(sys.stderr)
        return 2

    try:
        text = _load_config_text(args.config)
    except (FileNotFoundError, OSError):
        print("config error: cannot read %r" % args.config, file=sys.stderr)
        return 2
    try:
        cfg = parse_config(text)
        report = run(cfg, seed=args.seed, tol=args.tol,
                     progress=lambda msg: print(msg, file=sys.stderr))
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    data = emit_report(report, args.format or cfg.fmt)
    if args.out:
        Path(args.out).write_bytes(data)
    else:
        sys.stdout.write(data.decode("utf-8"))
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
