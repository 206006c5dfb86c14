"""AboveThreshold as a reusable streaming state machine.

One noisy threshold tau ~ Lap(2/eps) is drawn per instance; each query draws
fresh mu_t ~ Lap(4/eps).  The instance answers YES at most once: the first
time q + mu_t strictly exceeds thresh + tau it reports YES and aborts, after
which every step reports ABORTED without drawing noise.  The caller is
responsible for only feeding queries of sensitivity at most 1.
"""

from __future__ import annotations

import enum

from .errors import ParameterError
from .noise import RandomSource


class SvtAnswer(enum.Enum):
    YES = "yes"
    NO = "no"
    ABORTED = "aborted"


class AboveThreshold:
    def __init__(self, eps: float, thresh: float, src: RandomSource):
        if eps <= 0:
            raise ParameterError(f"epsilon must be positive, got {eps}")
        self.eps = eps
        self.thresh = thresh
        self._src = src
        self.tau = src.laplace(2.0 / eps)
        self.aborted = False
        self.queries_answered = 0

    def step(self, q_value: float) -> SvtAnswer:
        if self.aborted:
            return SvtAnswer.ABORTED
        self.queries_answered += 1
        mu = self._src.laplace(4.0 / self.eps)
        if q_value + mu > self.thresh + self.tau:
            self.aborted = True
            return SvtAnswer.YES
        return SvtAnswer.NO


def svt_new(eps: float, thresh: float, src: RandomSource) -> AboveThreshold:
    return AboveThreshold(eps, thresh, src)


def svt_step(state: AboveThreshold, q_value: float) -> SvtAnswer:
    return state.step(q_value)
