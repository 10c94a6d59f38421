from dataclasses import dataclass, field
from typing import Optional

import numpy as np

CLASSIFICATION = "classification"
REGRESSION = "regression"


@dataclass(frozen=True)
class Dataset:
    """Feature matrix ``X`` (n x p) with labels or responses ``y``.

    Arrays are copied and marked read-only on construction.
    """

    X: np.ndarray
    y: np.ndarray
    kind: str = REGRESSION
    seed: Optional[int] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        X = np.array(self.X, dtype=float, ndmin=2)
        y = np.array(self.y, dtype=float).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
        if self.kind not in (CLASSIFICATION, REGRESSION):
            raise ValueError(f"unknown dataset kind {self.kind!r}")
        if self.kind == CLASSIFICATION and not np.all(np.isin(y, (-1.0, 1.0))):
            raise ValueError("classification labels must be -1 or +1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]
