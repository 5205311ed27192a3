from abc import ABC, abstractmethod
from dataclasses import dataclass

import numpy as np
from sklearn.utils import check_random_state

from ..exceptions import InputError, TruncationError
from ..models import SinusoidProfile, TimeProfile

MAX_REDRAWS = 100


@dataclass(frozen=True)
class LinearInstance:
    """C D^alpha y = -A g(t) y + B u on [0, T], steering y0 to yb."""
    A: np.ndarray
    B: np.ndarray
    y0: np.ndarray
    yb: np.ndarray
    alpha: float
    T: float
    g: TimeProfile

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def N(self):
        return self.B.shape[1]


class InstanceSampler(ABC):
    """
    An abstract class for random test problems.
    """
    @abstractmethod
    def sample(self, random_state=None):
        """
        Draw one instance.

        Parameters
            random_state: None, int or np.random.RandomState
                Seed or generator, passed through check_random_state
        Returns
            instance: LinearInstance
        """
        pass

    def sample_many(self, n_samples, random_state=None):
        rs = check_random_state(random_state)
        return [self.sample(rs) for _ in range(n_samples)]


def haar_orthogonal(d, random_state=None):
    """Haar distributed orthogonal matrix from the signed QR of a Gaussian matrix."""
    rs = check_random_state(random_state)
    Q, R = np.linalg.qr(rs.standard_normal((d, d)))
    return Q * np.sign(np.diag(R))


class RandomLinearInstance(InstanceSampler):
    """
    A = Q diag(lambda) Q^T with Haar Q and lambda ~ U[0, eig_max], B standard
    normal, g(t) = 1 + 1/2 sin(2 pi t / T).

    alpha is redrawn until the kernel series of the instance truncates within
    the default depth cap; after max_redraws failures sample raises InputError.

    With uncontrollable=True the columns of B lie in an invariant eigen-subspace
    of dimension < d, so the Kalman rank is deficient (needs d >= 2).
    """
    def __init__(self, d_max=4, alpha_range=(0.4, 0.9), T=1.0, eig_max=2.0,
                 uncontrollable=False, d=None, N=None, max_redraws=MAX_REDRAWS):
        if d_max < 1:
            raise InputError("d_max must be positive", field="d_max")
        lo, hi = alpha_range
        if not 0 < lo <= hi < 1:
            raise InputError(f"alpha_range must lie in (0, 1), got {alpha_range}", field="alpha")
        if uncontrollable and (d or d_max) < 2:
            raise InputError("uncontrollable instances need d >= 2", field="d")
        self.d_max = d_max
        self.alpha_range = (float(lo), float(hi))
        self.T = float(T)
        self.eig_max = float(eig_max)
        self.uncontrollable = uncontrollable
        self.d = d
        self.N = N
        self.max_redraws = int(max_redraws)

    def sample(self, random_state=None):
        rs = check_random_state(random_state)
        d_min = 2 if self.uncontrollable else 1
        d = self.d if self.d is not None else rs.randint(d_min, self.d_max + 1)
        N = self.N if self.N is not None else rs.randint(1, d + 1)
        Q = haar_orthogonal(d, rs)
        eigenvalues = rs.uniform(0.0, self.eig_max, size=d)
        A = (Q * eigenvalues) @ Q.T
        A = 0.5 * (A + A.T)
        if self.uncontrollable:
            k = rs.randint(1, d)
            B = Q[:, :k] @ rs.standard_normal((k, N))
        else:
            B = rs.standard_normal((d, N))
        y0 = rs.standard_normal(d)
        yb = rs.standard_normal(d)
        g = SinusoidProfile(offset=1.0, amplitude=0.5, period=self.T)
        alpha = self._truncatable_alpha(eigenvalues.max() * (g.offset + abs(g.amplitude)), rs)
        return LinearInstance(A=A, B=B, y0=y0, yb=yb, alpha=float(alpha), T=self.T, g=g)

    def _truncatable_alpha(self, rate, rs):
        # kernels imports utils.logger, so the import stays local
        from ..kernels.transition import truncation_depth
        for _ in range(self.max_redraws):
            alpha = rs.uniform(*self.alpha_range)
            try:
                truncation_depth(rate * self.T ** alpha, alpha)
            except TruncationError:
                continue
            return alpha
        raise InputError(
            f"no alpha in {self.alpha_range} gave a truncatable kernel series after "
            f"{self.max_redraws} draws (rate {rate:.4g})", field="alpha")
