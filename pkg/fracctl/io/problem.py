from __future__ import annotations

import json
import pathlib
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..exceptions import ArtifactIOError, InputError
from ..kernels.diagonalization import SYMMETRY_TOL
from ..models import ScalarField, TimeProfile, make_field, make_profile

MIN_STEPS = 8


@dataclass(frozen=True)
class Numerics:
    """
    Numerical settings of a run.

    Parameters
        n_steps: int
            Grid intervals on [0, T]
        pb_tol: float
            Peano-Baker truncation tolerance
        fp_tol: float
            Relative fixed-point stopping tolerance
        max_iter: int
            Largest number of fixed-point iterations
        terminal_tol: float
            Relative terminal accuracy demanded of a synthesized control
        damping: float
            Initial damping of the fixed-point update, in (0, 1]
        n_corrector: int
            Corrector passes of the predictor-corrector
        depth_cap: int
            Largest admissible Peano-Baker depth
    """
    n_steps: int = 1000
    pb_tol: float = 1e-12
    fp_tol: float = 1e-6
    max_iter: int = 50
    terminal_tol: float = 1e-3
    damping: float = 1.0
    n_corrector: int = 1
    depth_cap: int = 200

    def __post_init__(self):
        for name in ("n_steps", "max_iter", "n_corrector", "depth_cap"):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value:
                raise InputError(f"numerics.{name} must be an integer, got {value!r}",
                                 field=f"numerics.{name}")
            object.__setattr__(self, name, int(value))
        if self.n_steps < MIN_STEPS:
            raise InputError(f"numerics.n_steps must be at least {MIN_STEPS}",
                             field="numerics.n_steps")
        if self.max_iter < 1 or self.n_corrector < 1 or self.depth_cap < 1:
            raise InputError("numerics.max_iter, n_corrector and depth_cap must be positive",
                             field="numerics")
        for name in ("pb_tol", "fp_tol", "terminal_tol"):
            value = float(getattr(self, name))
            if not np.isfinite(value) or value <= 0:
                raise InputError(f"numerics.{name} must be positive, got {value!r}",
                                 field=f"numerics.{name}")
            object.__setattr__(self, name, value)
        damping = float(self.damping)
        if not 0 < damping <= 1:
            raise InputError(f"numerics.damping must lie in (0, 1], got {damping!r}",
                             field="numerics.damping")
        object.__setattr__(self, "damping", damping)

    def to_dict(self):
        return asdict(self)


def _vector(value, length, name):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as err:
        raise InputError(f"{name} must be a list of numbers", field=name) from err
    if arr.shape != (length,):
        raise InputError(f"{name} must have length {length}, got shape {arr.shape}", field=name)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite", field=name)
    return arr


def _matrix(value, shape, name):
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as err:
        raise InputError(f"{name} must be a row-major array of numbers", field=name) from err
    if arr.shape != shape:
        raise InputError(f"{name} must have shape {shape}, got {arr.shape}", field=name)
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{name} must be finite", field=name)
    return arr


def _positive_int(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value or value < 1:
        raise InputError(f"{name} must be a positive integer, got {value!r}", field=name)
    return int(value)


@dataclass(frozen=True)
class ProblemSpec:
    """
    Validated control problem

        C D^alpha y = -A f(y) y + B u,  y(0) = y0,  y(T) = yT

    (linear runs use the time profile g in place of f).
    """
    alpha: float
    T: float
    d: int
    N: int
    A: np.ndarray
    B: np.ndarray
    y0: np.ndarray
    yT: np.ndarray
    f: ScalarField
    g: TimeProfile = None
    numerics: Numerics = field(default_factory=Numerics)
    seed: int = None
    out_dir: str = None
    source: str = None

    def to_dict(self):
        return {"alpha": self.alpha, "T": self.T, "d": self.d, "N": self.N,
                "A": self.A.tolist(), "B": self.B.tolist(),
                "y0": self.y0.tolist(), "yT": self.yT.tolist(),
                "f": self.f.to_dict(), "g": None if self.g is None else self.g.to_dict(),
                "numerics": self.numerics.to_dict(), "seed": self.seed,
                "out_dir": self.out_dir}

    def with_overrides(self, **overrides):
        """Copy with CLI overrides; None values leave the file setting in place."""
        numeric_fields = set(Numerics.__dataclass_fields__)
        num = {k: v for k, v in overrides.items() if k in numeric_fields and v is not None}
        top = {k: v for k, v in overrides.items() if k not in numeric_fields and v is not None}
        numerics = replace(self.numerics, **num) if num else self.numerics
        return replace(self, numerics=numerics, **top)


def problem_from_dict(data, source=None):
    """Validate a decoded problem document; every failure names its field."""
    if not isinstance(data, dict):
        raise InputError("problem file must contain a JSON object")
    required = ("alpha", "T", "d", "N", "A", "B", "y0", "yT", "f")
    for name in required:
        if name not in data:
            raise InputError(f"missing required field {name!r}", field=name)

    alpha = data["alpha"]
    if isinstance(alpha, bool) or not isinstance(alpha, (int, float)) or not 0 < alpha < 1:
        raise InputError(f"alpha must lie in (0, 1), got {alpha!r}", field="alpha")
    T = data["T"]
    if isinstance(T, bool) or not isinstance(T, (int, float)) or not np.isfinite(T) or T <= 0:
        raise InputError(f"T must be a positive number, got {T!r}", field="T")
    d = _positive_int(data["d"], "d")
    N = _positive_int(data["N"], "N")
    if N > d:
        raise InputError(f"N must not exceed d, got N={N}, d={d}", field="N")

    A = _matrix(data["A"], (d, d), "A")
    if np.linalg.norm(A - A.T, 2) > SYMMETRY_TOL * (1 + np.linalg.norm(A, 2)):
        raise InputError("A symmetric: A must equal its transpose within 1e-10", field="A")
    B = _matrix(data["B"], (d, N), "B")
    y0 = _vector(data["y0"], d, "y0")
    yT = _vector(data["yT"], d, "yT")
    f = make_field(data["f"])
    g = make_profile(data["g"]) if data.get("g") is not None else None

    numerics = data.get("numerics") or {}
    if not isinstance(numerics, dict):
        raise InputError("numerics must be an object", field="numerics")
    unknown = set(numerics) - set(Numerics.__dataclass_fields__)
    if unknown:
        raise InputError(f"unknown numerics entries {sorted(unknown)}", field="numerics")
    numerics = Numerics(**numerics)

    seed = data.get("seed")
    if seed is not None and (isinstance(seed, bool) or not isinstance(seed, int) or seed < 0):
        raise InputError(f"seed must be a non-negative integer, got {seed!r}", field="seed")
    out_dir = data.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise InputError("out_dir must be a string", field="out_dir")

    return ProblemSpec(alpha=float(alpha), T=float(T), d=d, N=N, A=A, B=B, y0=y0, yT=yT,
                       f=f, g=g, numerics=numerics, seed=seed, out_dir=out_dir,
                       source=None if source is None else str(source))


def load_problem(path):
    """
    Read and validate a JSON problem file.

    Parameters
        path: str or pathlib.Path
    Returns
        spec: ProblemSpec
    """
    path = pathlib.Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ArtifactIOError(f"cannot read problem file {path}: {err}", path=str(path)) from err
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise InputError(f"{path} is not valid JSON: {err}") from err
    return problem_from_dict(data, source=path)
