"""Run configuration: flat key=value text with [sections].

The format is plain configparser INI; operators come from builtin
constructors ("laplacian:n", "diag:z1,z2,...") or matrix text files
("file:path").  Everything validates early and raises ConfigError so the
CLI can map problems to its config exit code.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field

import numpy as np

from .bvp import ProblemSpec
from .errors import ConfigError
from .grids import Grid, GridFunction, cgl_grid, uniform_grid
from .io import parse_complex, read_gridfunction_csv, read_operator_file
from .operators import OperatorHandle, dirichlet_laplacian_modes, make_operator

__all__ = ["RunConfig", "load_config"]


def _parse_operator(spec_text: str, base_dir: str) -> OperatorHandle:
    kind, _, arg = spec_text.partition(":")
    kind = kind.strip().lower()
    if kind == "laplacian":
        try:
            return dirichlet_laplacian_modes(int(arg))
        except ValueError as exc:
            raise ConfigError(f"bad laplacian mode count {arg!r}") from exc
    if kind == "diag":
        try:
            entries = [parse_complex(p) for p in arg.split(",")]
        except ConfigError as exc:
            raise ConfigError(f"bad diag operator {arg!r}: {exc}") from exc
        return make_operator(np.diag(entries), label="diag")
    if kind == "file":
        path = os.path.join(base_dir, arg.strip())
        if not os.path.exists(path):
            raise ConfigError(f"operator file {path} does not exist")
        try:
            return make_operator(read_operator_file(path), label=os.path.basename(path))
        except Exception as exc:
            raise ConfigError(f"cannot read operator file {path}: {exc}") from exc
    raise ConfigError(f"unknown operator spec {spec_text!r}")


def _parse_vector(text: str, dim: int) -> np.ndarray:
    parts = [p for p in text.split(",") if p.strip()]
    vals = [parse_complex(p) for p in parts]
    if len(vals) == 1:
        return np.full(dim, vals[0], dtype=complex)
    if len(vals) != dim:
        raise ConfigError(f"vector {text!r} has {len(vals)} entries, wanted {dim}")
    return np.asarray(vals, dtype=complex)


def _forcing_profile(kind: str, arg: str, grid: Grid, a: float, b: float):
    x = grid.nodes
    if kind == "zero" or kind == "":
        return np.zeros(grid.n, dtype=complex)
    if kind == "poly":
        coeffs = [parse_complex(p) for p in arg.split(",")]
        out = np.zeros(grid.n, dtype=complex)
        for j, cj in enumerate(coeffs):
            out += cj * x**j
        return out
    if kind == "sines":
        amps = [parse_complex(p) for p in arg.split(",")]
        out = np.zeros(grid.n, dtype=complex)
        for m, am in enumerate(amps, start=1):
            out += am * np.sin(m * np.pi * (x - a) / (b - a))
        return out
    raise ConfigError(f"unknown forcing type {kind!r}")


@dataclass
class RunConfig:
    """Parsed configuration for one CLI invocation."""

    path: str
    problem: ProblemSpec
    grid: Grid
    forcing: GridFunction
    phi: tuple
    lam: complex
    solve_tol: float
    sweep: dict = field(default_factory=dict)
    evolve: dict = field(default_factory=dict)
    output_dir: str = "."


def load_config(path: str, out_dir: str | None = None) -> RunConfig:
    if not os.path.exists(path):
        raise ConfigError(f"config file {path} does not exist")
    cp = configparser.ConfigParser()
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    base_dir = os.path.dirname(os.path.abspath(path))

    if "problem" not in cp:
        raise ConfigError("config needs a [problem] section")
    prob = cp["problem"]
    try:
        a = prob.getfloat("a", 0.0)
        b = prob.getfloat("b", float(np.pi))
        k = prob.getfloat("k", 0.0)
        bc = prob.getint("bc_family", 1)
    except ValueError as exc:
        raise ConfigError(f"bad [problem] numeric value: {exc}") from exc
    A = _parse_operator(prob.get("operator", "laplacian:1"), base_dir)
    if bc not in (1, 2, 3, 4, 5):
        raise ConfigError(f"bc_family must be 1..5, got {bc}")

    gsec = cp["grid"] if "grid" in cp else {}
    try:
        n_nodes = int(gsec.get("n_nodes", 64))
    except ValueError as exc:
        raise ConfigError(f"bad n_nodes: {exc}") from exc
    kind = str(gsec.get("kind", "cgl")).lower()
    if kind == "cgl":
        grid = cgl_grid(n_nodes, a, b)
    elif kind == "uniform":
        grid = uniform_grid(n_nodes, a, b)
    else:
        raise ConfigError(f"grid kind must be cgl or uniform, got {kind!r}")

    fsec = cp["forcing"] if "forcing" in cp else {}
    ftype = str(fsec.get("type", "zero")).lower()
    if ftype == "file":
        fpath = os.path.join(base_dir, fsec.get("path", ""))
        if not os.path.exists(fpath):
            raise ConfigError(f"forcing file {fpath} does not exist")
        forcing = read_gridfunction_csv(fpath)
        if forcing.dim != A.dim:
            raise ConfigError("forcing file dimension does not match operator")
    else:
        profile = _forcing_profile(ftype, fsec.get("coefficients", ""), grid, a, b)
        weights = _parse_vector(fsec.get("component_weights", "1"), A.dim)
        forcing = GridFunction(grid, np.outer(weights, profile))

    ssec = cp["solve"] if "solve" in cp else {}
    lam = parse_complex(ssec.get("lambda", "-4")) if ssec.get("lambda") else complex(-4.0)
    phi = tuple(
        _parse_vector(ssec.get(f"phi{i}", "0"), A.dim) for i in range(1, 5)
    )
    try:
        solve_tol = float(ssec.get("tol_residual", "1e-6"))
    except ValueError as exc:
        raise ConfigError(f"bad tol_residual: {exc}") from exc
    if solve_tol <= 0:
        raise ConfigError("tol_residual must be positive")

    try:
        spec = ProblemSpec(a, b, k, A, bc, phi=phi)
    except (ValueError, Exception) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid problem: {exc}") from exc

    swsec = cp["sweep"] if "sweep" in cp else {}
    sweep = {
        "radius_min": float(swsec.get("radius_min", "1e-2")),
        "radius_max": float(swsec.get("radius_max", "1e4")),
        "n_radii": int(swsec.get("n_radii", "50")),
        "n_angles": int(swsec.get("n_angles", "10")),
        "exclusion_radius": float(swsec.get("exclusion_radius", "0.0")),
        "n_nodes": int(swsec.get("n_nodes", "40")),
    }
    if sweep["radius_min"] <= 0 or sweep["radius_max"] <= sweep["radius_min"]:
        raise ConfigError("sweep radii must satisfy 0 < radius_min < radius_max")

    evsec = cp["evolve"] if "evolve" in cp else {}
    evolve = {
        "scheme": str(evsec.get("scheme", "CONTOUR")).upper(),
        "dt": float(evsec.get("dt", "0.05")),
        "t_final": float(evsec.get("t_final", "1.0")),
        "v0": str(evsec.get("v0", "sine:1")),
        "contour_points": int(evsec.get("contour_points", "32")),
        "growth_probe": str(evsec.get("growth_probe", "false")).lower() == "true",
    }
    if evolve["dt"] <= 0 or evolve["t_final"] <= 0:
        raise ConfigError("evolve dt and t_final must be positive")

    return RunConfig(
        path=path,
        problem=spec,
        grid=grid,
        forcing=forcing,
        phi=phi,
        lam=lam,
        solve_tol=solve_tol,
        sweep=sweep,
        evolve=evolve,
        output_dir=out_dir or ".",
    )


def build_v0(cfg: RunConfig) -> GridFunction:
    """Initial data for the evolution command."""
    spec_text = cfg.evolve["v0"]
    kind, _, arg = spec_text.partition(":")
    kind = kind.strip().lower()
    grid = cfg.grid
    dim = cfg.problem.A.dim
    if kind == "zero":
        return GridFunction.zeros(grid, dim)
    if kind == "sine":
        m = int(arg) if arg else 1
        prof = np.sin(m * np.pi * (grid.nodes - grid.a) / (grid.b - grid.a))
        vals = np.tile(prof, (dim, 1)).astype(complex)
        return GridFunction(grid, vals)
    if kind == "file":
        fpath = os.path.join(os.path.dirname(os.path.abspath(cfg.path)), arg.strip())
        if not os.path.exists(fpath):
            raise ConfigError(f"v0 file {fpath} does not exist")
        return read_gridfunction_csv(fpath)
    raise ConfigError(f"unknown v0 spec {spec_text!r}")
