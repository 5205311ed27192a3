import numpy as np
from abc import ABC, abstractmethod

from ..exceptions import InputError

FIELD_KINDS = ("constant", "gauss_plus", "rational_plus")
PROFILE_KINDS = ("constant", "sinusoid")


class ScalarField(ABC):
    """
    An abstract class for the positive state-dependent factor f(y) of the
    nonlinear dynamics C D^alpha y = -A f(y) y + B u.
    """
    kind = None

    def __init__(self, c1, c2=0.0):
        c1, c2 = float(c1), float(c2)
        if not (np.isfinite(c1) and np.isfinite(c2)) or c1 < 0 or c2 < 0 or c1 + c2 <= 0:
            raise InputError(
                f"field coefficients need c1 >= 0, c2 >= 0, c1 + c2 > 0; got c1={c1}, c2={c2}",
                field="f")
        self.c1 = c1
        self.c2 = c2

    @abstractmethod
    def _shape(self, r2):
        """
        Profile part of f as a function of |y|^2.

        Parameters
            r2: np.ndarray
                Squared norms of the states
        Returns
            values: np.ndarray
                Same shape as r2
        """
        pass

    def __call__(self, y):
        """
        Evaluate f on one state or a stack of states.

        Parameters
            y: np.ndarray
                (d,) state or (n, d) states
        Returns
            values: float or np.ndarray
                f(y), (n,) for stacked input
        """
        y = np.asarray(y, dtype=float)
        r2 = np.sum(y * y, axis=-1)
        out = self.c1 + self.c2 * self._shape(r2)
        return float(out) if np.ndim(out) == 0 else out

    def to_dict(self):
        return {"kind": self.kind, "c1": self.c1, "c2": self.c2}

    def __repr__(self):
        return f"{type(self).__name__}(c1={self.c1}, c2={self.c2})"


class ConstantField(ScalarField):
    kind = "constant"

    def __init__(self, c1, c2=0.0):
        super().__init__(c1, 0.0)
        if self.c1 <= 0:
            raise InputError("constant field needs c1 > 0", field="f.c1")
        if float(c2) != 0.0:
            raise InputError("constant field takes no c2", field="f.c2")

    def _shape(self, r2):
        return np.zeros_like(r2)


class GaussPlusField(ScalarField):
    """f(y) = c1 + c2 exp(-|y|^2)"""
    kind = "gauss_plus"

    def _shape(self, r2):
        return np.exp(-r2)


class RationalPlusField(ScalarField):
    """f(y) = c1 + c2 / (1 + |y|^2)"""
    kind = "rational_plus"

    def _shape(self, r2):
        return 1.0 / (1.0 + r2)


_FIELDS = {cls.kind: cls for cls in (ConstantField, GaussPlusField, RationalPlusField)}


def make_field(descriptor):
    """Build a ScalarField from a {kind, c1, c2} descriptor."""
    if isinstance(descriptor, ScalarField):
        return descriptor
    if not isinstance(descriptor, dict) or "kind" not in descriptor:
        raise InputError("f must be an object with a 'kind' entry", field="f")
    kind = descriptor["kind"]
    if kind not in _FIELDS:
        raise InputError(f"f.kind must be one of {FIELD_KINDS}, got {kind!r}", field="f.kind")
    try:
        return _FIELDS[kind](descriptor.get("c1", 0.0), descriptor.get("c2", 0.0))
    except (TypeError, ValueError) as err:
        if isinstance(err, InputError):
            raise
        raise InputError(f"invalid coefficients in f: {err}", field="f") from err


class TimeProfile(ABC):
    """Scalar time factor g(t) of a coefficient A g(t)."""
    kind = None

    @abstractmethod
    def __call__(self, t):
        pass

    def sample(self, grid):
        from ..calculus import SampledFunction
        return SampledFunction(grid, np.broadcast_to(self(grid.nodes), (grid.n_nodes,)).astype(float))

    @abstractmethod
    def to_dict(self):
        pass


class ConstantProfile(TimeProfile):
    kind = "constant"

    def __init__(self, value=1.0):
        self.value = float(value)

    def __call__(self, t):
        return np.full(np.shape(t), self.value) if np.ndim(t) else self.value

    def to_dict(self):
        return {"kind": self.kind, "value": self.value}


class SinusoidProfile(TimeProfile):
    """g(t) = offset + amplitude sin(2 pi t / period)"""
    kind = "sinusoid"

    def __init__(self, offset=1.0, amplitude=0.5, period=1.0):
        self.offset = float(offset)
        self.amplitude = float(amplitude)
        self.period = float(period)
        if self.period <= 0:
            raise InputError("sinusoid period must be positive", field="g.period")

    def __call__(self, t):
        return self.offset + self.amplitude * np.sin(2 * np.pi * np.asarray(t) / self.period)

    def to_dict(self):
        return {"kind": self.kind, "offset": self.offset,
                "amplitude": self.amplitude, "period": self.period}


def make_profile(descriptor=None):
    """Build a TimeProfile from a descriptor; None means g = 1."""
    if descriptor is None:
        return ConstantProfile(1.0)
    if isinstance(descriptor, TimeProfile):
        return descriptor
    if not isinstance(descriptor, dict):
        raise InputError("g must be an object with a 'kind' entry", field="g")
    kind = descriptor.get("kind", "constant")
    params = {k: v for k, v in descriptor.items() if k != "kind"}
    try:
        if kind == "constant":
            return ConstantProfile(**params)
        if kind == "sinusoid":
            return SinusoidProfile(**params)
    except TypeError as err:
        raise InputError(f"invalid parameters for g: {err}", field="g") from err
    raise InputError(f"g.kind must be one of {PROFILE_KINDS}, got {kind!r}", field="g.kind")
