"""Problem ingestion: TOML configs, a small arithmetic expression grammar,
and validation of declared constants by sampling before any solve."""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .gridfn import GridFunction, make_initial_condition
from .hamiltonians import HamiltonianModel, audit_growth_constants, get_model
from .operators import OperatorConfig
from .viscosity_fd import FDConfig

__all__ = ["ProblemConfig", "load_problem", "parse_expression", "ConfigError"]


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# expression grammar: + - * / ^ sin cos exp abs, numbers, named variables
# ---------------------------------------------------------------------------

_FUNCS = {"sin": np.sin, "cos": np.cos, "exp": np.exp, "abs": np.abs}


def _tokenize(src: str):
    out = []
    i = 0
    while i < len(src):
        c = src[i]
        if c.isspace():
            i += 1
        elif c in "+-*/^()":
            out.append((c, c))
            i += 1
        elif c.isdigit() or c == ".":
            j = i
            while j < len(src) and (src[j].isdigit() or src[j] in ".eE" or
                                    (src[j] in "+-" and src[j - 1] in "eE")):
                j += 1
            out.append(("num", float(src[i:j])))
            i = j
        elif c.isalpha() or c == "_":
            j = i
            while j < len(src) and (src[j].isalnum() or src[j] == "_"):
                j += 1
            out.append(("name", src[i:j]))
            i = j
        else:
            raise ConfigError(f"unexpected character {c!r} in expression {src!r}")
    out.append(("end", None))
    return out


def parse_expression(src: str, variables: Tuple[str, ...]) -> Callable:
    """Compile an arithmetic expression over the named variables into a
    vectorized callable taking them as keyword arguments."""
    toks = _tokenize(src)
    pos = [0]

    def peek():
        return toks[pos[0]]

    def take(kind=None):
        k, v = toks[pos[0]]
        if kind is not None and k != kind:
            raise ConfigError(f"expected {kind} at token {pos[0]} of {src!r}, got {k}")
        pos[0] += 1
        return k, v

    def atom():
        k, v = take()
        if k == "num":
            return lambda env: v
        if k == "name":
            if peek()[0] == "(":
                if v not in _FUNCS:
                    raise ConfigError(f"unknown function {v!r} (have {sorted(_FUNCS)})")
                take("(")
                inner = expr()
                take(")")
                fn = _FUNCS[v]
                return lambda env: fn(inner(env))
            if v not in variables:
                raise ConfigError(f"unknown variable {v!r}; expected one of {variables}")
            return lambda env: env[v]
        if k == "(":
            inner = expr()
            take(")")
            return inner
        raise ConfigError(f"unexpected token {k} in {src!r}")

    def unary():
        if peek()[0] == "-":
            take()
            inner = unary()
            return lambda env: -inner(env)
        if peek()[0] == "+":
            take()
            return unary()
        return power()

    def power():
        base = atom()
        if peek()[0] == "^":
            take()
            expo = unary()
            return lambda env: base(env) ** expo(env)
        return base

    def term():
        left = unary()
        while peek()[0] in ("*", "/"):
            op, _ = take()
            right = unary()
            if op == "*":
                left = (lambda l, r: lambda env: l(env) * r(env))(left, right)
            else:
                left = (lambda l, r: lambda env: l(env) / r(env))(left, right)
        return left

    def expr():
        left = term()
        while peek()[0] in ("+", "-"):
            op, _ = take()
            right = term()
            if op == "+":
                left = (lambda l, r: lambda env: l(env) + r(env))(left, right)
            else:
                left = (lambda l, r: lambda env: l(env) - r(env))(left, right)
        return left

    body = expr()
    take("end")

    def compiled(**kw):
        missing = set(variables) - set(kw)
        if missing:
            raise TypeError(f"missing variables {missing}")
        return body(kw)

    return compiled


# ---------------------------------------------------------------------------
# problem configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ProblemConfig:
    hamiltonian: HamiltonianModel
    u0: GridFunction
    domain: Tuple[float, float]
    h: float
    horizon: float
    schedule_delta: Optional[float]
    output_times: Tuple[float, ...]
    operator: OperatorConfig
    fd: FDConfig
    raw: dict = field(compare=False, repr=False, default_factory=dict)


def _build_model(section: dict) -> HamiltonianModel:
    name = section.get("name")
    if name is None:
        raise ConfigError("hamiltonian.name is required")
    if name != "expr":
        params = {}
        if "a" in section:
            params["a"] = float(section["a"])
        try:
            H = get_model(name, **params)
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        if "C" in section and float(section["C"]) != H.constant_C:
            H = HamiltonianModel(
                name=H.name, value=H.value, dq=H.dq, dp=H.dp,
                constant_C=float(section["C"]), kind=H.kind,
                integrable=H.integrable, modulus=H.modulus,
                quadratic_tail=H.quadratic_tail)
        return H
    for key in ("expr", "dq", "dp", "C"):
        if key not in section:
            raise ConfigError(
                f"expression hamiltonians need '{key}' (value plus explicit "
                "derivative expressions and a declared constant)")
    variables = ("t", "q", "p")
    fv = parse_expression(section["expr"], variables)
    fq = parse_expression(section["dq"], variables)
    fp = parse_expression(section["dp"], variables)
    return HamiltonianModel(
        name=f"expr({section['expr']})",
        value=lambda t, q, p: fv(t=t, q=q + 0.0 * np.asarray(p, float),
                                 p=p + 0.0 * np.asarray(q, float)),
        dq=lambda t, q, p: fq(t=t, q=q + 0.0 * np.asarray(p, float),
                              p=p + 0.0 * np.asarray(q, float)) + 0.0 * (np.asarray(q, float) + p),
        dp=lambda t, q, p: fp(t=t, q=q + 0.0 * np.asarray(p, float),
                              p=p + 0.0 * np.asarray(q, float)) + 0.0 * (np.asarray(q, float) + p),
        constant_C=float(section["C"]),
        kind=section.get("kind", "general"),
        integrable=bool(section.get("integrable", False)),
        modulus=float(section.get("modulus", 0.0)),
        time_dependent=bool(section.get("time_dependent", False)),
    )


def _build_u0(section: dict, domain, h) -> GridFunction:
    name = section.get("name")
    if name is None:
        raise ConfigError("initial_condition.name is required")
    if name != "expr":
        try:
            u = make_initial_condition(name, domain[0], domain[1], h,
                                       param=section.get("param"))
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
        if "lip" in section:
            u = GridFunction(u.origin, u.h, u.values, float(section["lip"]))
        return u
    if "expr" not in section or "lip" not in section:
        raise ConfigError("expression initial conditions need 'expr' and a "
                          "declared 'lip'")
    f = parse_expression(section["expr"], ("x",))
    lip = float(section["lip"])
    vals_fn = lambda x: f(x=np.asarray(x, dtype=float)) + 0.0 * np.asarray(x, float)
    u = GridFunction.from_callable(vals_fn, domain[0], domain[1], h)
    if u.measured_lip() > lip * (1 + 1e-9) + 1e-12:
        raise ConfigError(
            f"declared Lipschitz constant {lip:g} below the sampled slope "
            f"{u.measured_lip():g} of the initial condition")
    return GridFunction(u.origin, u.h, u.values, lip)


def load_problem(path) -> ProblemConfig:
    """Parse and validate a TOML problem file.

    Declared constants are audited by sampling: an undersized Hamiltonian
    growth constant or Lipschitz certificate aborts the load with a message
    naming the violated bound.
    """
    try:
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path!r} not found")
    except _toml.TOMLDecodeError as exc:
        raise ConfigError(f"TOML parse error in {path}: {exc}")

    try:
        prob = raw["problem"]
        domain = tuple(float(x) for x in prob["domain"])
        h = float(prob["h"])
        horizon = float(prob["T"])
    except KeyError as exc:
        raise ConfigError(f"missing required problem key: {exc}")
    if domain[1] <= domain[0] or h <= 0 or horizon < 0:
        raise ConfigError("problem needs domain[0] < domain[1], h > 0, T >= 0")

    H = _build_model(raw.get("hamiltonian", {}))
    audit_growth_constants(H)  # aborts when the declared constant is undersized

    u0 = _build_u0(raw.get("initial_condition", {}), domain, h)

    op_raw = raw.get("operator", {})
    operator = OperatorConfig(
        landscape_grid=(int(op_raw.get("landscape_q", 240)),
                        int(op_raw.get("landscape_p", 240))),
        window_margin=float(op_raw.get("window_margin", 2.0)),
        mollify_width=float(op_raw.get("mollify_width", 2.0)),
        tol=float(op_raw.get("tol", 1e-9)),
        cutoff_eps=float(op_raw.get("cutoff_eps", 0.5)),
    )
    fd_raw = raw.get("fd", {})
    fd = FDConfig(
        h=float(fd_raw.get("h", h)),
        cfl=float(fd_raw.get("cfl", 0.5)),
        artificial_viscosity=fd_raw.get("artificial_viscosity"),
    )
    out_times = tuple(float(x) for x in prob.get("output_times", [horizon]))
    if any(t < 0 or t > horizon + 1e-12 for t in out_times):
        raise ConfigError("output_times must lie in [0, T]")
    delta = prob.get("schedule_delta")
    return ProblemConfig(
        hamiltonian=H, u0=u0, domain=domain, h=h, horizon=horizon,
        schedule_delta=None if delta is None else float(delta),
        output_times=out_times, operator=operator, fd=fd, raw=raw,
    )
