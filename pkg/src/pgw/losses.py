"""Ground losses comparing intra-space costs.

A loss ``L(a, b)`` is usable by the fast solvers when it splits as
``L(a, b) = f1(a) + f2(b) - h1(a) * h2(b)``; the four maps are applied
elementwise to the cost matrices.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

ArrayMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Loss:
    """Elementwise loss with an optional factorization.

    Parameters
    ----------
    name : str
        Label used in reports.
    pointwise : callable
        ``pointwise(a, b)`` evaluates ``L`` on broadcastable arrays.
    f1, f2, h1, h2 : callable, optional
        Factorization maps.  All four must be given, or none; a loss without
        them is dense-only and can only be used by the oracle routines.
    """

    name: str
    pointwise: Callable[[np.ndarray, np.ndarray], np.ndarray]
    f1: Optional[ArrayMap] = None
    f2: Optional[ArrayMap] = None
    h1: Optional[ArrayMap] = None
    h2: Optional[ArrayMap] = None

    def __post_init__(self):
        given = [fn is not None for fn in (self.f1, self.f2, self.h1, self.h2)]
        if any(given) and not all(given):
            raise ValueError("a factorized loss needs all of f1, f2, h1, h2")

    @property
    def factorized(self) -> bool:
        return self.f1 is not None


def _square(a, b):
    return (a - b) ** 2


square_loss = Loss(
    name="square",
    pointwise=_square,
    f1=np.square,
    f2=np.square,
    h1=lambda a: a,
    h2=lambda b: 2.0 * b,
)

LOSSES = {"square": square_loss}


def get_loss(loss) -> Loss:
    if isinstance(loss, Loss):
        return loss
    try:
        return LOSSES[loss]
    except KeyError:
        raise ValueError(f"unknown loss {loss!r}; known: {sorted(LOSSES)}") from None
