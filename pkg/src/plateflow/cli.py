"""Command-line harness for batch solver studies.

Grammar::

    plateflow <subcommand> --config <path> [--out <dir>] [--threads N] [--seed N]

Subcommands: solve-linear, solve-nonlinear, multiplier-scan,
resonance-report, lift-div, validate.  Every run writes ``manifest.json``
(inputs, config hash, tolerance set, norms, residuals, empirical constants,
timings) into the output directory next to CSV and ``.plf`` field
containers.  Manifests are bit-identical across reruns and thread counts,
except for the ``execution`` block (thread count, timestamp, timings).

Config files are plain ``key = value`` text, ``#`` starts a comment.  Keys
(defaults in parentheses):

    T, L            periods of the time circle and the lateral torus (2*pi)
    mu_f            fluid viscosity, > 0 (1.0)
    mu_s            plate damping; 0 is allowed only for multiplier-scan
                    and resonance-report (1.0)
    n_t, n_x, n_z   truncations: odd 3..129, odd 3..129, 4..192 (5, 5, 16)
    forcing_f       momentum forcing: one expression (vertical force) or
                    three separated by ';', or file:<container> ("0")
    forcing_g       divergence datum, scalar expression or file ("0")
    forcing_h       plate forcing, scalar expression or file ("0")
    eps             data amplitude; scales parsed data and sets the Picard
                    ball radius sqrt(eps) (1.0)
    eps0            smallness-gate threshold for the plate norm (0.1)
    q               integrability exponent for reported norms (2.0)
    route           linear solve route, "lift" or "direct" ("lift")
    tol_eq, tol_bc  linear residual tolerances (1e-9)
    compat_tol      mean-compatibility tolerance for g (1e-9)
    picard_tol      fixed-point stagnation tolerance (1e-11)
    tol_nl          nonlinear residual tolerance (1e-9)
    max_iter        Picard iteration cap (25)
    k_max, xi_max   scan ranges (100, 30 for scans; 4, 2 for the
                    resonance table)
    near_factor     near-resonance classification factor (10.0)
    seed            base seed for the validation suite (0)
    threads         worker count; --threads and PLATEFLOW_THREADS override
    out             output directory ("out"); --out overrides

Forcing expressions use the variables t, x1, x2 (and x3 in the slab), the
functions sin, cos, exp, the constant pi, numeric literals, and + - * / **.
Arguments of sin and cos must be affine with integer harmonics of 2*pi/T
and 2*pi/L in the periodic variables, so every expression is exactly
representable on the lattice; exp accepts x3 only.  t, x1, x2 may appear
only inside sin/cos, divisors must be constant, and exponents must be
nonnegative integer constants.
"""

from __future__ import annotations

import argparse
import ast
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .fields import PlateField, SpectralField, forward_transform, \
    forward_transform_plate, physical_samples
from .grid import TorusGrid
from .halfspace import (
    boundedness_scan,
    multiplier_M,
    resonance_report,
    resonance_rows_to_csv,
    weighted_multiplier,
)
from .io import read_field, write_field
from .lift import IncompatibleDataError, lift_divergence, lift_estimate_check
from .modes import SolverParams, linear_residuals, solve_linear_full
from .nonlinear import (
    DegenerateDeformationError,
    PicardConfig,
    PicardDivergenceError,
    picard_solve,
    smallness_check,
)
from .norms import NormSpec, negative_norm, sobolev_norm, s_norm, x_norm, y_norm
from . import oracles

EXIT_CONFIG = 1
EXIT_INCOMPATIBLE = 2
EXIT_DIVERGENCE = 3
EXIT_VALIDATION = 4

SUBCOMMANDS = ("solve-linear", "solve-nonlinear", "multiplier-scan",
               "resonance-report", "lift-div", "validate")
ZERO_DAMPING_OK = ("multiplier-scan", "resonance-report")


class CliError(Exception):
    """Error with a CLI exit code and a machine-readable kind."""

    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


# ---- forcing expression parser ------------------------------------------------------

_FUNCTIONS = ("sin", "cos", "exp")
_PERIODIC_VARS = ("t", "x1", "x2")


def _expr_error(msg: str, node: ast.AST | None = None) -> CliError:
    loc = f" (column {node.col_offset})" if node is not None else ""
    return CliError(EXIT_CONFIG, "config", f"forcing expression error{loc}: {msg}")


def _const_value(node):
    """Fold a constant subexpression to a float, or return None."""
    if isinstance(node, ast.Constant):
        return float(node.value) if isinstance(node.value, (int, float)) else None
    if isinstance(node, ast.Name) and node.id in ("pi", "π"):
        return math.pi
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        v = _const_value(node.operand)
        if v is None:
            return None
        return v if isinstance(node.op, ast.UAdd) else -v
    if isinstance(node, ast.BinOp) and isinstance(
            node.op, (ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow)):
        a = _const_value(node.left)
        b = _const_value(node.right)
        if a is None or b is None:
            return None
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / b
        return a ** b
    return None


def _affine_parts(node, variables) -> dict:
    """Decompose into {var: coeff} plus {"": const}; raise if not affine."""
    const = _const_value(node)
    if const is not None:
        return {"": const}
    if isinstance(node, ast.Name):
        if node.id in variables:
            return {node.id: 1.0, "": 0.0}
        raise _expr_error(f"unknown name '{node.id}'", node)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.UAdd, ast.USub)):
        inner = _affine_parts(node.operand, variables)
        if isinstance(node.op, ast.USub):
            inner = {k: -v for k, v in inner.items()}
        return inner
    if isinstance(node, ast.BinOp):
        if isinstance(node.op, (ast.Add, ast.Sub)):
            left = _affine_parts(node.left, variables)
            right = _affine_parts(node.right, variables)
            sign = 1.0 if isinstance(node.op, ast.Add) else -1.0
            out = dict(left)
            for k, v in right.items():
                out[k] = out.get(k, 0.0) + sign * v
            return out
        if isinstance(node.op, ast.Mult):
            for first, second in ((node.left, node.right),
                                  (node.right, node.left)):
                c = _const_value(first)
                if c is not None:
                    inner = _affine_parts(second, variables)
                    return {k: c * v for k, v in inner.items()}
            raise _expr_error(
                "function arguments must be affine in the variables", node)
        if isinstance(node.op, ast.Div):
            c = _const_value(node.right)
            if c is None:
                raise _expr_error("divisor must be constant", node)
            inner = _affine_parts(node.left, variables)
            return {k: v / c for k, v in inner.items()}
    raise _expr_error("function arguments must be affine in the variables", node)


def _check_harmonics(parts: dict, grid: TorusGrid, node: ast.AST):
    """Reject non-integer harmonics of the lattice base frequencies."""
    base = {"t": 2.0 * math.pi / grid.t_period,
            "x1": 2.0 * math.pi / grid.l_period,
            "x2": 2.0 * math.pi / grid.l_period}
    for var, freq in base.items():
        coeff = parts.get(var, 0.0)
        harmonic = coeff / freq
        if abs(harmonic - round(harmonic)) > 1e-9:
            raise CliError(
                EXIT_CONFIG, "config",
                f"forcing expression error (column {node.col_offset}): "
                f"harmonic {coeff:g} in '{var}' is not an integer multiple "
                f"of the lattice frequency {freq:g}, so the term is not "
                "periodic on the configured domain")


class _ExprChecker(ast.NodeVisitor):
    """Validates the whitelisted grammar and periodicity constraints."""

    def __init__(self, grid: TorusGrid, variables):
        self.grid = grid
        self.variables = tuple(variables)

    def check(self, node):
        self.visit(node)

    def generic_visit(self, node):
        raise _expr_error(f"'{type(node).__name__}' is not allowed", node)

    def visit_Expression(self, node):
        self.visit(node.body)

    def visit_Constant(self, node):
        if not isinstance(node.value, (int, float)):
            raise _expr_error("only numeric literals are allowed", node)

    def visit_Name(self, node):
        if node.id in ("pi", "π"):
            return
        if node.id not in self.variables:
            raise _expr_error(f"unknown name '{node.id}'", node)
        if node.id in _PERIODIC_VARS:
            raise _expr_error(
                f"'{node.id}' may appear only inside sin/cos, where its "
                "periodicity can be checked", node)

    def visit_UnaryOp(self, node):
        if not isinstance(node.op, (ast.UAdd, ast.USub)):
            raise _expr_error("unsupported unary operator", node)
        self.visit(node.operand)

    def visit_BinOp(self, node):
        if isinstance(node.op, (ast.Add, ast.Sub, ast.Mult)):
            self.visit(node.left)
            self.visit(node.right)
        elif isinstance(node.op, ast.Div):
            if _const_value(node.right) is None:
                raise _expr_error("divisor must be constant", node)
            self.visit(node.left)
        elif isinstance(node.op, ast.Pow):
            exp = _const_value(node.right)
            if exp is None or exp < 0 or exp != int(exp):
                raise _expr_error(
                    "exponent must be a nonnegative integer constant", node)
            self.visit(node.left)
        else:
            raise _expr_error("unsupported operator", node)

    def visit_Call(self, node):
        if not isinstance(node.func, ast.Name) or node.func.id not in _FUNCTIONS:
            raise _expr_error("only sin, cos and exp may be called", node)
        if len(node.args) != 1 or node.keywords:
            raise _expr_error(f"{node.func.id} takes one argument", node)
        parts = _affine_parts(node.args[0], self.variables)
        if node.func.id == "exp":
            for var in _PERIODIC_VARS:
                if abs(parts.get(var, 0.0)) > 0.0:
                    raise _expr_error(
                        f"exp of '{var}' is never periodic; exp accepts "
                        "x3 and constants only", node)
        else:
            _check_harmonics(parts, self.grid, node)


class _ExprEvaluator(ast.NodeVisitor):
    """Evaluates a checked expression on numpy sample arrays."""

    def __init__(self, env: dict):
        self.env = env

    def visit_Expression(self, node):
        return self.visit(node.body)

    def visit_Constant(self, node):
        return float(node.value)

    def visit_Name(self, node):
        if node.id in ("pi", "π"):
            return math.pi
        return self.env[node.id]

    def visit_UnaryOp(self, node):
        v = self.visit(node.operand)
        return v if isinstance(node.op, ast.UAdd) else -v

    def visit_BinOp(self, node):
        a = self.visit(node.left)
        b = self.visit(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / b
        return a ** b

    def visit_Call(self, node):
        arg = self.visit(node.args[0])
        return getattr(np, node.func.id)(arg)


def _parse_expression(text: str, grid: TorusGrid, plate: bool):
    variables = _PERIODIC_VARS if plate else _PERIODIC_VARS + ("x3",)
    try:
        tree = ast.parse(text, mode="eval")
    except SyntaxError as exc:
        raise CliError(EXIT_CONFIG, "config",
                       f"forcing expression error (column {exc.offset}): "
                       f"{exc.msg}") from None
    _ExprChecker(grid, variables).check(tree)
    if plate:
        shape = (grid.n_t, grid.n_x, grid.n_x)
        env = {
            "t": grid.t_samples[:, None, None],
            "x1": grid.x_samples[None, :, None],
            "x2": grid.x_samples[None, None, :],
        }
    else:
        shape = (grid.n_t, grid.n_x, grid.n_x, grid.n_z + 1)
        env = {
            "t": grid.t_samples[:, None, None, None],
            "x1": grid.x_samples[None, :, None, None],
            "x2": grid.x_samples[None, None, :, None],
            "x3": grid.nodes[None, None, None, :],
        }
    values = _ExprEvaluator(env).visit(tree)
    return np.broadcast_to(np.asarray(values, float), shape).copy()


def parse_forcing(spec: str, grid: TorusGrid, kind: str,
                  base_dir: Path | None = None):
    """Build a data field from an expression string or a container path.

    kind selects the target: "f" (three slab components; a single
    expression means a vertical force), "g" (scalar slab), "h" (plate).
    """
    spec = spec.strip()
    if spec.startswith("file:"):
        path = Path(spec[5:])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        try:
            field = read_field(path, grid=grid)
        except FileNotFoundError:
            raise CliError(EXIT_CONFIG, "config",
                           f"forcing container not found: {path}") from None
        except ValueError as exc:
            raise CliError(EXIT_INCOMPATIBLE, "incompatible",
                           f"forcing container {path}: {exc}") from None
        want_plate = kind == "h"
        if want_plate != isinstance(field, PlateField):
            raise CliError(EXIT_INCOMPATIBLE, "incompatible",
                           f"forcing container {path} stores the wrong domain")
        if kind == "f" and field.components != 3:
            raise CliError(EXIT_INCOMPATIBLE, "incompatible",
                           f"momentum forcing needs 3 components, "
                           f"{path} has {field.components}")
        if kind == "g" and field.components != 1:
            raise CliError(EXIT_INCOMPATIBLE, "incompatible",
                           f"divergence datum must be scalar, "
                           f"{path} has {field.components}")
        return field

    if kind == "h":
        return forward_transform_plate(grid, _parse_expression(spec, grid, True))
    if kind == "g":
        return forward_transform(grid, _parse_expression(spec, grid, False))
    exprs = [part.strip() for part in spec.split(";")]
    if len(exprs) == 1:
        exprs = ["0", "0", exprs[0]]
    if len(exprs) != 3:
        raise CliError(EXIT_CONFIG, "config",
                       "momentum forcing takes one expression or three "
                       "';'-separated ones")
    comps = [_parse_expression(e, grid, False) for e in exprs]
    return forward_transform(grid, np.stack(comps, axis=-1), components=3)


# ---- configuration -----------------------------------------------------------------

_INT_KEYS = {"n_t", "n_x", "n_z", "max_iter", "k_max", "xi_max", "seed", "threads"}
_FLOAT_KEYS = {"T", "L", "mu_f", "mu_s", "eps", "eps0", "q", "tol_eq", "tol_bc",
               "compat_tol", "picard_tol", "tol_nl", "near_factor"}
_STR_KEYS = {"forcing_f", "forcing_g", "forcing_h", "out", "route"}


@dataclass
class ScenarioConfig:
    """Typed view of a config file; see the module docstring for the schema."""

    T: float = 2.0 * math.pi
    L: float = 2.0 * math.pi
    mu_f: float = 1.0
    mu_s: float = 1.0
    n_t: int = 5
    n_x: int = 5
    n_z: int = 16
    forcing_f: str = "0"
    forcing_g: str = "0"
    forcing_h: str = "0"
    eps: float = 1.0
    eps0: float = 0.1
    q: float = 2.0
    route: str = "lift"
    tol_eq: float = 1e-9
    tol_bc: float = 1e-9
    compat_tol: float = 1e-9
    picard_tol: float = 1e-11
    tol_nl: float = 1e-9
    max_iter: int = 25
    k_max: int = 0  # 0 means the per-subcommand default
    xi_max: int = 0
    near_factor: float = 10.0
    seed: int = 0
    threads: int = 1
    out: str = "out"

    def solver_params(self) -> SolverParams:
        return SolverParams(self.mu_f, self.mu_s, self.tol_eq, self.tol_bc,
                            self.compat_tol)

    def grid(self) -> TorusGrid:
        return TorusGrid(self.n_t, self.n_x, self.n_z, self.T, self.L)

    def tolerance_set(self) -> dict:
        return {k: getattr(self, k) for k in
                ("tol_eq", "tol_bc", "compat_tol", "picard_tol", "tol_nl",
                 "eps0")}


def _config_error(msg: str) -> CliError:
    return CliError(EXIT_CONFIG, "config", msg)


def load_config(path) -> tuple[ScenarioConfig, str]:
    """Parse a key=value file; returns the config and the raw text."""
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise _config_error(f"cannot read config {path}: {exc}") from None
    values: dict = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise _config_error(f"{path}:{lineno}: expected 'key = value'")
        key, _, val = stripped.partition("=")
        key, val = key.strip(), val.strip()
        if key in values:
            raise _config_error(f"{path}:{lineno}: duplicate key '{key}'")
        if key in _INT_KEYS:
            try:
                values[key] = int(val)
            except ValueError:
                raise _config_error(
                    f"{path}:{lineno}: '{key}' needs an integer") from None
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(val)
            except ValueError:
                raise _config_error(
                    f"{path}:{lineno}: '{key}' needs a number") from None
        elif key in _STR_KEYS:
            values[key] = val
        else:
            raise _config_error(f"{path}:{lineno}: unknown key '{key}'")
    cfg = ScenarioConfig(**values)
    _validate_config(cfg)
    return cfg, raw


def _validate_config(cfg: ScenarioConfig):
    if cfg.T <= 0 or cfg.L <= 0:
        raise _config_error("periods T and L must be positive")
    if cfg.mu_f <= 0:
        raise _config_error("mu_f must be positive")
    if cfg.mu_s < 0:
        raise _config_error("mu_s must be nonnegative")
    for name, val in (("n_t", cfg.n_t), ("n_x", cfg.n_x)):
        if val < 3 or val > 129 or val % 2 == 0:
            raise _config_error(f"{name} must be odd and within 3..129")
    if cfg.n_z < 4 or cfg.n_z > 192:
        raise _config_error("n_z must be within 4..192")
    if cfg.eps <= 0:
        raise _config_error("eps must be positive")
    if cfg.q <= 1:
        raise _config_error("q must exceed 1")
    if cfg.route not in ("lift", "direct"):
        raise _config_error("route must be 'lift' or 'direct'")
    if cfg.max_iter < 1:
        raise _config_error("max_iter must be at least 1")
    if cfg.k_max < 0 or cfg.xi_max < 0:
        raise _config_error("scan ranges must be nonnegative")
    if cfg.threads < 1:
        raise _config_error("threads must be at least 1")


# ---- manifest plumbing ---------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Path):
        return str(obj)
    return obj


def _write_manifest(out_dir: Path, doc: dict):
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(_jsonable(doc), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _base_manifest(command: str, cfg: ScenarioConfig, raw: str,
                   threads: int, seed: int) -> dict:
    return {
        "command": command,
        "config": asdict(cfg),
        "config_sha256": hashlib.sha256(raw.encode()).hexdigest(),
        "tolerances": cfg.tolerance_set(),
        "seed": seed,
        "grid": {"n_t": cfg.n_t, "n_x": cfg.n_x, "n_z": cfg.n_z,
                 "T": cfg.T, "L": cfg.L},
    }


def _write_csv(path: Path, header: list[str], rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _plate_samples_csv(path: Path, eta: PlateField):
    grid = eta.grid
    vals = physical_samples(eta)
    rows = []
    for it, tv in enumerate(grid.t_samples):
        for i1, xv in enumerate(grid.x_samples):
            for i2, yv in enumerate(grid.x_samples):
                rows.append((f"{tv:.16e}", f"{xv:.16e}", f"{yv:.16e}",
                             f"{vals[it, i1, i2]:.16e}"))
    _write_csv(path, ["t", "x1", "x2", "eta"], rows)


# ---- subcommand runners --------------------------------------------------------------


def _run_solve_linear(cfg: ScenarioConfig, out_dir: Path, threads: int,
                      seed: int, base_dir: Path) -> dict:
    grid = cfg.grid()
    f = cfg.eps * parse_forcing(cfg.forcing_f, grid, "f", base_dir)
    g = cfg.eps * parse_forcing(cfg.forcing_g, grid, "g", base_dir)
    h = cfg.eps * parse_forcing(cfg.forcing_h, grid, "h", base_dir)
    g_arg = g if g.coeffs.any() else None
    sol = solve_linear_full(f, g_arg, h, grid=grid, params=cfg.solver_params(),
                            route=cfg.route, threads=threads)
    residuals = linear_residuals(sol.u, sol.p, sol.eta, f, g_arg, h,
                                 cfg.solver_params())
    write_field(out_dir / "u.plf", sol.u)
    write_field(out_dir / "p.plf", sol.p)
    write_field(out_dir / "eta.plf", sol.eta)
    _plate_samples_csv(out_dir / "eta_samples.csv", sol.eta)
    return {
        "norms": {
            "y_norm_data": y_norm(f, g_arg, h, cfg.q),
            "x_norm_solution": x_norm(sol.u, sol.p, sol.eta, cfg.q),
            "s_norm_eta": s_norm(sol.eta, cfg.q),
        },
        "residuals": residuals,
        "empirical_constants": {"x_over_y_ratio": sol.norm_ratio},
        "outputs": ["u.plf", "p.plf", "eta.plf", "eta_samples.csv"],
    }


def _run_solve_nonlinear(cfg: ScenarioConfig, out_dir: Path, threads: int,
                         seed: int, base_dir: Path) -> dict:
    grid = cfg.grid()
    f = cfg.eps * parse_forcing(cfg.forcing_f, grid, "f", base_dir)
    h = cfg.eps * parse_forcing(cfg.forcing_h, grid, "h", base_dir)
    pc = PicardConfig(eps=cfg.eps, max_iter=cfg.max_iter,
                      picard_tol=cfg.picard_tol, tol_nl=cfg.tol_nl,
                      eps0=cfg.eps0, q=cfg.q, threads=threads,
                      params=cfg.solver_params())
    result = picard_solve(f, h, config=pc, grid=grid)
    if not result.converged:
        raise PicardDivergenceError(
            f"no convergence within {cfg.max_iter} iterations "
            f"(last step {result.trace[-1]['step']:.3e})",
            trace=result.trace)
    write_field(out_dir / "u.plf", result.u)
    write_field(out_dir / "p.plf", result.p)
    write_field(out_dir / "eta.plf", result.eta)
    _plate_samples_csv(out_dir / "eta_samples.csv", result.eta)
    trace_rows = [(step["iteration"], f"{step['x_norm']:.16e}",
                   f"{step['step']:.16e}",
                   "" if step["ratio"] is None else f"{step['ratio']:.16e}",
                   f"{step['plate_norm']:.16e}", f"{step['sup_eta']:.16e}")
                  for step in result.trace]
    _write_csv(out_dir / "picard_trace.csv",
               ["iteration", "x_norm", "step", "ratio", "plate_norm", "sup_eta"],
               trace_rows)
    ratios = [step["ratio"] for step in result.trace
              if step["ratio"] is not None]
    gate = smallness_check(result.eta, eps0=cfg.eps0, q=cfg.q)
    return {
        "converged": result.converged,
        "iterations": result.iterations,
        "ball_radius": result.radius,
        "in_ball": result.in_ball,
        "contraction_ratios": ratios,
        "max_contraction_ratio": max(ratios) if ratios else 0.0,
        "residuals": result.residuals,
        "norms": {"x_norm_solution": x_norm(result.u, result.p, result.eta,
                                            cfg.q)},
        "smallness_gate": asdict(gate),
        "outputs": ["u.plf", "p.plf", "eta.plf", "eta_samples.csv",
                    "picard_trace.csv"],
    }


def _run_multiplier_scan(cfg: ScenarioConfig, out_dir: Path, threads: int,
                         seed: int, base_dir: Path) -> dict:
    k_max = cfg.k_max or 100
    xi_max = cfg.xi_max or 30
    report = boundedness_scan(k_max, xi_max, cfg.mu_s)
    ks = np.unique(np.geomspace(1, k_max, 64).astype(int))
    rows = []
    for k in ks:
        m = multiplier_M(int(k), (1, 0), cfg.mu_s, cfg.T, cfg.L)
        w = weighted_multiplier(int(k), (1, 0), cfg.mu_s, cfg.T, cfg.L)
        rows.append(("k", int(k), f"{abs(m):.16e}", f"{abs(w):.16e}"))
    for n in np.unique(np.geomspace(1, xi_max, 64).astype(int)):
        m = multiplier_M(1, (int(n), 0), cfg.mu_s, cfg.T, cfg.L)
        w = weighted_multiplier(1, (int(n), 0), cfg.mu_s, cfg.T, cfg.L)
        rows.append(("xi", int(n), f"{abs(m):.16e}", f"{abs(w):.16e}"))
    _write_csv(out_dir / "multiplier_rays.csv",
               ["ray", "index", "abs_m", "abs_weighted"], rows)
    return {
        "scan": report.as_json_dict(),
        "empirical_constants": {
            "sup_weighted_multiplier": report.sup_weighted,
            "decay_exponent_k": report.decay_exponent_k,
            "decay_exponent_xi": report.decay_exponent_xi,
        },
        "outputs": ["multiplier_rays.csv"],
    }


def _run_resonance_report(cfg: ScenarioConfig, out_dir: Path, threads: int,
                          seed: int, base_dir: Path) -> dict:
    k_max = cfg.k_max or 4
    xi_max = cfg.xi_max or 2
    rows = resonance_report(k_max, xi_max, cfg.mu_s, cfg.near_factor,
                            cfg.T, cfg.L)
    (out_dir / "resonance.csv").write_text(resonance_rows_to_csv(rows))
    counts: dict[str, int] = {}
    for row in rows:
        counts[row.label] = counts.get(row.label, 0) + 1
    resonant = [{"k": r.k, "xi": list(r.xi)} for r in rows
                if r.label == "resonant"]
    return {
        "counts": counts,
        "resonant_points": resonant,
        "outputs": ["resonance.csv"],
    }


def _run_lift_div(cfg: ScenarioConfig, out_dir: Path, threads: int,
                  seed: int, base_dir: Path) -> dict:
    grid = cfg.grid()
    g = cfg.eps * parse_forcing(cfg.forcing_g, grid, "g", base_dir)
    result = lift_divergence(g, tol_compat=cfg.compat_tol)
    write_field(out_dir / "w.plf", result.w)
    estimates = lift_estimate_check(g, result, cfg.q)
    return {
        "residuals": {"divergence": result.residual_div,
                      "faces": result.residual_bc},
        "norms": {
            "g_w1q": sobolev_norm(g, NormSpec(0, 1, cfg.q, "slab")),
            "g_dual": negative_norm(g, q=cfg.q),
            "w_l_q": sobolev_norm(result.w, NormSpec(0, 0, cfg.q, "slab")),
            "w_w2q": sobolev_norm(result.w, NormSpec(0, 2, cfg.q, "slab")),
        },
        "empirical_constants": estimates,
        "outputs": ["w.plf"],
    }


def _run_validate(cfg: ScenarioConfig, out_dir: Path, threads: int,
                  seed: int, base_dir: Path) -> dict:
    checks = []

    def record(name, passed, values, threshold):
        checks.append({"name": name, "passed": bool(passed),
                       "values": _jsonable(values), "threshold": threshold})

    for idx in range(3):
        case = oracles.make_manufactured(seed + idx)
        res = case.constraint_residuals()
        record(f"manufactured_constraints_seed{seed + idx}",
               max(res.values()) < 1e-13, res, "max < 1e-13")

    case = oracles.make_manufactured(seed, n_z=16)
    rep = oracles.cross_validate_linear(case, q=cfg.q, threads=threads)
    record("cross_validation_paths", rep["path_discrepancy"] < 1e-9,
           {"path_discrepancy": rep["path_discrepancy"]}, "< 1e-9")
    record("cross_validation_truth",
           rep["lift_truth_rel"] < 1e-8 and rep["direct_truth_rel"] < 1e-8,
           {"lift_truth_rel": rep["lift_truth_rel"],
            "direct_truth_rel": rep["direct_truth_rel"]}, "< 1e-8")

    flat = oracles.make_manufactured(seed + 10, flat_plate=True)
    rep0 = oracles.cross_validate_linear(flat, q=cfg.q, threads=threads)
    record("cross_validation_flat_identity",
           rep0["path_discrepancy"] < 1e-12,
           {"path_discrepancy": rep0["path_discrepancy"]}, "< 1e-12")

    err8 = oracles.cross_validate_linear(
        oracles.make_manufactured(seed, n_z=8))["lift_truth_error"]
    err16 = rep["lift_truth_error"]
    drop = err8 / max(err16, 1e-300)
    record("refinement_drop", drop >= 100.0,
           {"err_nz8": err8, "err_nz16": err16, "drop": drop}, ">= 2 orders")

    grid = TorusGrid(5, 5, 8, cfg.T, cfg.L)
    dc = np.zeros((5, 5, 5, 9), complex)
    dc[2, 2, 2, :] = 1.0
    const = SpectralField(grid, dc, components=1, real=True)
    tt = grid.t_samples[:, None, None, None]
    x1 = grid.x_samples[None, :, None, None]
    zz = grid.nodes[None, None, None, :]
    shape = (5, 5, 5, 9)
    single = forward_transform(
        grid, np.broadcast_to(np.cos(tt + x1), shape).copy())
    chebf = forward_transform(
        grid, np.broadcast_to(np.sin(np.pi * zz), shape).copy())
    fd_values = {
        "const_t": oracles.fd_check(const, "t"),
        "const_x1": oracles.fd_check(const, "x1"),
        "single_mode_t": oracles.fd_check(single, "t"),
        "single_mode_x1": oracles.fd_check(single, "x1"),
        "cheb_sin": oracles.fd_check(chebf, "x3"),
    }
    record("fd_check",
           fd_values["const_t"] == 0.0 and fd_values["const_x1"] == 0.0
           and all(v < 1e-8 for v in fd_values.values()),
           fd_values, "constants exact, others < 1e-8")

    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(5):
        c = np.zeros((5, 5, 5), complex)
        c[1:4, 1:4, 1:4] = rng.normal(size=(3, 3, 3)) \
            + 1j * rng.normal(size=(3, 3, 3))
        c = 0.5 * (c + np.conj(c[::-1, ::-1, ::-1]))
        c[2, 2, 2] = 0.0
        eta = PlateField(grid, c, real=True)
        ratios.append(oracles.embedding_ratio(
            eta, m=2, m_x=0, M_t=0, alpha=2.0, r=np.inf, p=np.inf, q=cfg.q))
    record("embedding_supnorm_case", all(0 < v < 10 for v in ratios),
           {"ratios": ratios}, "bounded by 10")

    suite = {"passed": all(c["passed"] for c in checks), "checks": checks}
    with open(out_dir / "validation.json", "w") as fh:
        json.dump(_jsonable(suite), fh, sort_keys=True, indent=2)
        fh.write("\n")
    _write_csv(out_dir / "validation_summary.csv",
               ["check", "passed", "threshold"],
               [(c["name"], c["passed"], c["threshold"]) for c in checks])
    if not suite["passed"]:
        failed = [c["name"] for c in checks if not c["passed"]]
        raise CliError(EXIT_VALIDATION, "validation",
                       f"validation failed: {', '.join(failed)}")
    return {"validation": suite,
            "outputs": ["validation.json", "validation_summary.csv"]}


_RUNNERS = {
    "solve-linear": _run_solve_linear,
    "solve-nonlinear": _run_solve_nonlinear,
    "multiplier-scan": _run_multiplier_scan,
    "resonance-report": _run_resonance_report,
    "lift-div": _run_lift_div,
    "validate": _run_validate,
}


# ---- entry point ---------------------------------------------------------------------


def _resolve_threads(arg_threads, cfg: ScenarioConfig) -> int:
    if arg_threads is not None:
        return arg_threads
    env = os.environ.get("PLATEFLOW_THREADS")
    if env is not None:
        try:
            val = int(env)
        except ValueError:
            raise _config_error(
                f"PLATEFLOW_THREADS must be an integer, got {env!r}") from None
        if val < 1:
            raise _config_error("PLATEFLOW_THREADS must be at least 1")
        return val
    return cfg.threads


def _emit_error(code: int, kind: str, message: str):
    doc = {"error": {"code": code, "kind": kind, "message": message}}
    print(json.dumps(doc, sort_keys=True), file=sys.stderr)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plateflow",
        description="Spectral solver for a periodically forced fluid layer "
                    "coupled to a damped elastic plate.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--seed", type=int, default=None)
    args = parser.parse_args(argv)

    t0 = time.perf_counter()
    try:
        cfg, raw = load_config(args.config)
        if cfg.mu_s == 0.0 and args.command not in ZERO_DAMPING_OK:
            raise _config_error(
                "mu_s = 0 is reserved for multiplier-variant studies "
                "(multiplier-scan, resonance-report); the solver needs "
                "positive plate damping")
        threads = _resolve_threads(args.threads, cfg)
        if threads < 1:
            raise _config_error("threads must be at least 1")
        seed = args.seed if args.seed is not None else cfg.seed
        out_dir = Path(args.out if args.out is not None else cfg.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        base_dir = Path(args.config).resolve().parent

        doc = _base_manifest(args.command, cfg, raw, threads, seed)
        t1 = time.perf_counter()
        doc.update(_RUNNERS[args.command](cfg, out_dir, threads, seed,
                                          base_dir))
        t2 = time.perf_counter()
        # the one run-dependent block; everything else is bit-reproducible
        doc["execution"] = {
            "threads": threads,
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "seconds": {"setup": t1 - t0, "run": t2 - t1},
        }
        _write_manifest(out_dir, doc)
        return 0
    except CliError as exc:
        _emit_error(exc.code, exc.kind, str(exc))
        return exc.code
    except IncompatibleDataError as exc:
        _emit_error(EXIT_INCOMPATIBLE, "incompatible", str(exc))
        return EXIT_INCOMPATIBLE
    except (PicardDivergenceError, DegenerateDeformationError) as exc:
        _emit_error(EXIT_DIVERGENCE, "divergence", str(exc))
        return EXIT_DIVERGENCE
    except ValueError as exc:
        _emit_error(EXIT_CONFIG, "config", str(exc))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
