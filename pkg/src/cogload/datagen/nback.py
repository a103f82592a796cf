"""Auditory n-back stimulus sequences and simulated responses."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from cogload.errors import CogloadError, InvalidLevel
from cogload.rng import Xoshiro256

STIMULUS_S = 1.0
RESPONSE_WINDOW_S = 2.5
TRIAL_SPACING_S = STIMULUS_S + RESPONSE_WINDOW_S


class Response(str, enum.Enum):
    MATCH = "match"
    NOMATCH = "nomatch"
    NONE = "none"


@dataclass(frozen=True)
class NbackTrial:
    digit: int
    onset_s: float
    is_target: bool
    response: Response
    rt_s: float | None


@dataclass(frozen=True)
class NbackBlock:
    level: int
    target_digit: int  # reference digit for 0-back; unused at higher levels
    trials: tuple[NbackTrial, ...]

    @property
    def digits(self) -> list[int]:
        return [t.digit for t in self.trials]


def nback_targets(digits: Sequence[int], level: int, target_digit: int | None = None) -> list[bool]:
    """Apply the n-back rule.

    Level 0 compares each digit with the fixed block target digit; level n >= 1
    compares with the digit n positions earlier (the first n trials are never
    targets).
    """
    if level not in (0, 1, 2):
        raise InvalidLevel(f"n-back level must be 0, 1 or 2, got {level}")
    if level == 0:
        if target_digit is None:
            raise CogloadError("0-back needs a block target digit")
        return [d == target_digit for d in digits]
    return [i >= level and digits[i] == digits[i - level] for i in range(len(digits))]


def gen_nback_stimuli(
    level: int,
    n_trials: int,
    target_rate: float,
    seed: int,
    onset_s: float = 0.0,
    p_correct: Sequence[float] = (0.95, 0.9, 0.8),
    p_miss: float = 0.03,
) -> NbackBlock:
    """Digit sequence whose match fraction is close to ``target_rate``.

    Each eligible trial repeats its reference digit with probability
    ``target_rate``; otherwise a different digit is drawn uniformly, so
    accidental matches never occur. Responses are simulated with a
    level-dependent accuracy and reaction times inside the response window.
    """
    if level not in (0, 1, 2):
        raise InvalidLevel(f"n-back level must be 0, 1 or 2, got {level}")
    if n_trials <= level:
        raise CogloadError(f"need more than {level} trials for {level}-back")
    if not 0 < target_rate < 1:
        raise CogloadError("target_rate must lie in (0, 1)")
    rng = Xoshiro256(seed, lanes=8)
    target_digit = rng.integers(10)
    digits: list[int] = []
    for i in range(n_trials):
        u, other = rng.uniform(), rng.integers(9)
        if level == 0:
            ref = target_digit
        elif i >= level:
            ref = digits[i - level]
        else:
            digits.append(rng.integers(10))
            continue
        if u < target_rate:
            digits.append(ref)
        else:
            digits.append(other if other < ref else other + 1)

    flags = nback_targets(digits, level, target_digit)
    trials = []
    for i, (d, tgt) in enumerate(zip(digits, flags)):
        u_miss, u_ok, z = rng.uniform(), rng.uniform(), rng.normal()
        if u_miss < p_miss:
            resp, rt = Response.NONE, None
        else:
            correct = u_ok < p_correct[level]
            resp = Response.MATCH if tgt == correct else Response.NOMATCH
            rt = float(np.clip(0.7 + 0.15 * level + 0.2 * z, 0.2, RESPONSE_WINDOW_S))
        trials.append(NbackTrial(int(d), onset_s + i * TRIAL_SPACING_S, bool(tgt), resp, rt))
    return NbackBlock(level, int(target_digit), tuple(trials))
