"""Input checks shared by the estimator wrappers."""
from __future__ import annotations

import numpy as np

from .exceptions import DomainError


def check_times(X, t0, T):
    """Flatten ``X`` to a 1-D float array of times inside ``[t0, T]``."""
    t = np.asarray(X, dtype=float).reshape(-1)
    if t.size == 0:
        raise DomainError("no evaluation times given")
    if not np.all(np.isfinite(t)):
        raise DomainError("evaluation times must be finite")
    if t.min() < t0 or t.max() > T:
        raise DomainError(f"evaluation times must lie in [{t0!r}, {T!r}]")
    return t
