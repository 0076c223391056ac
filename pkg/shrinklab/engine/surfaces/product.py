"""
Analytic round products S^k x R^(n-k).

Coordinates of R^(n+1) are ordered with the k+1 coordinates of the sphere
factor first, followed by the n-k flat coordinates. For k = 0 the model is a
hyperplane and its single "sphere factor" coordinate is the normal offset.
"""

from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy.special import gammaln, ive

from ..errors import GeometryError
from ..types import RoundProductGeometry
from .base import SCHEMA_TAG


@dataclass(frozen=True)
class RoundProduct:
    """The round product S^k(radius) x R^(n-k) in R^(n+1).

    Attributes:
        ambient_dim: n + 1.
        sphere_dim: k, with 0 <= k <= n.
        radius: Sphere radius; √(2k) for a shrinker. Ignored when k = 0.
    """
    ambient_dim: int
    sphere_dim: int
    radius: Optional[float] = None

    kind = "product"

    def __post_init__(self):
        n, k = self.ambient_dim - 1, self.sphere_dim
        if n < 1 or not 0 <= k <= n:
            raise GeometryError(f"need 0 <= k <= n and n >= 1, got n={n}, k={k}")
        if self.radius is None:
            object.__setattr__(self, "radius", float(np.sqrt(2.0 * k)))
        if k >= 1 and not self.radius > 0:
            raise GeometryError(f"sphere radius must be positive, got {self.radius}")

    @property
    def dim(self) -> int:
        return self.ambient_dim - 1

    @property
    def is_closed(self) -> bool:
        return self.sphere_dim == self.dim

    @property
    def is_shrinker(self) -> bool:
        return self.sphere_dim == 0 or abs(self.radius ** 2 - 2.0 * self.sphere_dim) < 1e-12

    def geometry(self) -> RoundProductGeometry:
        """Exact H, |A|² and the F-value at (0, 1)."""
        k = self.sphere_dim
        if k == 0:
            return RoundProductGeometry(H=0.0, A2=0.0, density=1.0)
        origin = np.zeros(self.ambient_dim)
        return RoundProductGeometry(
            H=k / self.radius,
            A2=k / self.radius ** 2,
            density=self.f_value(origin, 1.0),
        )

    # =========================================================================
    # Closed-form Gaussian integrals
    # =========================================================================

    def _split(self, x0: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
        x0 = np.asarray(x0, dtype=float)
        if x0.shape != (self.ambient_dim,):
            raise GeometryError(f"centre must have {self.ambient_dim} coordinates, got {x0.shape}")
        m = self.sphere_dim + 1 if self.sphere_dim > 0 else 1
        return x0[:m], x0[m:]

    def _bessel_terms(self, d: float, t0: float) -> Tuple[float, float, float]:
        """Return (log F, ratio I_{ν+1}/I_ν at c, c) for the sphere factor."""
        k, R = self.sphere_dim, self.radius
        nu = 0.5 * (k - 1)
        c = R * d / (2.0 * t0)
        log_area = np.log(2.0) + 0.5 * (k + 1) * np.log(np.pi)
        if c < 1e-12:
            log_bessel = -gammaln(nu + 1.0)
            ratio = 0.0
        else:
            scaled = ive(nu, c)
            log_bessel = nu * np.log(2.0 / c) + np.log(scaled)
            ratio = ive(nu + 1.0, c) / scaled
        log_f = (-0.5 * k * np.log(4.0 * np.pi * t0) + k * np.log(R) + log_area
                 + log_bessel - (R - d) ** 2 / (4.0 * t0))
        return float(log_f), float(ratio), float(c)

    def f_value(self, x0: Sequence[float], t0: float) -> float:
        """F_{x0,t0} in closed form (flat factors integrate to one)."""
        if not t0 > 0:
            raise ValueError(f"t0 must be positive, got {t0}")
        a, _ = self._split(x0)
        if self.sphere_dim == 0:
            return float(np.exp(-a[0] ** 2 / (4.0 * t0)))
        log_f, _, _ = self._bessel_terms(float(np.linalg.norm(a)), t0)
        return float(np.exp(log_f))

    def f_gradient(self, x0: Sequence[float], t0: float) -> Tuple[np.ndarray, float]:
        """(∂F/∂x0, ∂F/∂t0) in closed form."""
        a, _ = self._split(x0)
        grad = np.zeros(self.ambient_dim)
        value = self.f_value(x0, t0)
        if self.sphere_dim == 0:
            grad[0] = -a[0] / (2.0 * t0) * value
            return grad, float(a[0] ** 2 / (4.0 * t0 ** 2) * value)
        k, R = self.sphere_dim, self.radius
        d = float(np.linalg.norm(a))
        _, ratio, c = self._bessel_terms(d, t0)
        dlog_dd = -d / (2.0 * t0) + R / (2.0 * t0) * ratio
        if d > 0:
            grad[:len(a)] = value * dlog_dd * a / d
        dlog_dt = -k / (2.0 * t0) + (R ** 2 + d ** 2) / (4.0 * t0 ** 2) - c / t0 * ratio
        return grad, float(value * dlog_dt)

    # =========================================================================
    # Transformations
    # =========================================================================

    def dilate(self, alpha: float) -> "RoundProduct":
        if not alpha > 0:
            raise GeometryError(f"dilation factor must be positive, got {alpha}")
        if self.sphere_dim == 0:
            return self
        return RoundProduct(self.ambient_dim, self.sphere_dim, self.radius * alpha)

    def translate(self, v: Sequence[float]) -> "RoundProduct":
        """Translate along the flat factor (an isometry of the model)."""
        a, _ = self._split(v)
        if np.any(a != 0.0):
            raise GeometryError("round products are stored centred; only flat translations apply")
        return self

    def discretize(self, n_nodes: int = 256, half_length: float = 12.0):
        """Discretize as a curve (n = 1) or a profile surface (n = 2)."""
        from . import library

        n, k = self.dim, self.sphere_dim
        if n == 1 and k == 1:
            return library.circle(radius=self.radius, n_nodes=n_nodes)
        if n == 1 and k == 0:
            return library.line(half_length=half_length, n_nodes=n_nodes | 1)
        if n == 2 and k == 2:
            return library.sphere(radius=self.radius, n_nodes=n_nodes | 1)
        if n == 2 and k == 1:
            return library.cylinder(radius=self.radius, half_length=half_length, n_nodes=n_nodes | 1)
        raise GeometryError(f"no discrete model for S^{k} x R^{n - k}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "schema": SCHEMA_TAG,
            "type": self.kind,
            "flags": {
                "ambient_dim": self.ambient_dim,
                "sphere_dim": self.sphere_dim,
                "radius": self.radius,
            },
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RoundProduct":
        flags = data["flags"]
        return cls(flags["ambient_dim"], flags["sphere_dim"], flags.get("radius"))
