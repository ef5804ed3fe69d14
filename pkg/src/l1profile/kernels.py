"""Bounded-support smoothing kernels."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

# Integer codes shared with the compiled and numpy kernel backends.
KERNEL_CODES = {"epanechnikov": 0, "triangular": 1, "boxcar": 2}


@dataclass(frozen=True)
class Kernel:
    """A symmetric density kernel supported on ``[-support_halfwidth, support_halfwidth]``.

    All three kernels integrate to one.  ``boxcar`` is discontinuous at the
    support edge, so it lacks the bounded derivative the asymptotic theory
    asks for; it is offered for experimentation only.
    """

    id: str = "epanechnikov"
    support_halfwidth: float = 1.0

    def __post_init__(self):
        if self.id not in KERNEL_CODES:
            raise ValueError(f"unknown kernel {self.id!r}; choose from {sorted(KERNEL_CODES)}")
        if self.support_halfwidth != 1.0:
            raise ValueError("only unit support half-width is implemented")
        if self.id == "boxcar":
            warnings.warn("boxcar kernel has no bounded derivative at its support edge",
                          stacklevel=3)

    @property
    def code(self) -> int:
        return KERNEL_CODES[self.id]

    @property
    def has_bounded_derivative(self) -> bool:
        return self.id != "boxcar"

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        return kernel_weights(u, self.code)


def kernel_weights(u, code):
    """Evaluate kernel ``code`` at standardized offsets ``u``.

    The arithmetic here is mirrored exactly in ``_ckernels.pyx`` so both
    backends produce bit-identical weights.
    """
    inside = np.abs(u) <= 1.0
    if code == 0:
        w = 0.75 * (1.0 - u * u)
    elif code == 1:
        w = 1.0 - np.abs(u)
    elif code == 2:
        w = np.full_like(u, 0.5)
    else:
        raise ValueError(f"bad kernel code {code}")
    return np.where(inside, w, 0.0)
