"""Asymmetric stabilizer code combinatorics.

A code is characterized purely by ``(n, k, dx, dz)``; the failure model
counts error weights only, so no stabilizer generators are stored. A cycle
with ``wx`` X, ``wy`` Y and ``wz`` Z single-qubit errors is correctable
when ``wx + wy <= tx`` and ``wz + wy <= tz`` (Y errors count against both
budgets); everything else is a failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

from .channel import PauliRates


@dataclass(frozen=True)
class AsymmetricCode:
    """An ``[[n, k, dx/dz]]`` code correcting ``tx`` X and ``tz`` Z errors."""

    n: int
    k: int
    dx: int
    dz: int

    def __post_init__(self):
        if not (1 <= self.dz <= self.dx <= self.n):
            raise ValueError(f"need 1 <= dz <= dx <= n, got {self}")
        if self.k < 1:
            raise ValueError(f"need k >= 1, got {self}")

    @property
    def tx(self) -> int:
        return (self.dx - 1) // 2

    @property
    def tz(self) -> int:
        return (self.dz - 1) // 2

    @property
    def name(self) -> str:
        if self.dx == self.dz:
            return f"{self.n}-{self.k}-{self.dx}"
        return f"{self.n}-{self.k}-{self.dx}-{self.dz}"


@dataclass(frozen=True)
class WeightTriple:
    """Counts of X, Y and Z single-qubit errors diagnosed in one cycle."""

    wx: int
    wy: int
    wz: int

    def __post_init__(self):
        if min(self.wx, self.wy, self.wz) < 0:
            raise ValueError(f"weights must be non-negative, got {self}")

    @property
    def w(self) -> int:
        return self.wx + self.wy + self.wz


def multinomial(n: int, wx: int, wy: int, wz: int) -> int:
    """Exact count of ways to place wx X, wy Y and wz Z errors on n qubits.

    Computed as ``n! / ((n - w)! wx! wy! wz!)`` in exact integer
    arithmetic.
    """
    if min(wx, wy, wz) < 0:
        raise ValueError("weights must be non-negative")
    w = wx + wy + wz
    if w > n:
        raise ValueError(f"total weight {w} exceeds qubit count {n}")
    return math.comb(n, wx) * math.comb(n - wx, wy) * math.comb(n - wx - wy, wz)


def correctable(code: AsymmetricCode, t: WeightTriple) -> bool:
    """True when the triple stays within both correction budgets."""
    if t.w > code.n:
        raise ValueError(f"weight {t.w} exceeds qubit count {code.n}")
    return t.wx + t.wy <= code.tx and t.wz + t.wy <= code.tz


def correctable_triples(code: AsymmetricCode) -> Iterator[tuple[int, int, int]]:
    """All (wx, wy, wz) triples the code corrects."""
    for wy in range(min(code.tx, code.tz) + 1):
        for wx in range(code.tx - wy + 1):
            for wz in range(code.tz - wy + 1):
                if wx + wy + wz <= code.n:
                    yield wx, wy, wz


def p_fail_exact(code: AsymmetricCode, rates: PauliRates) -> float:
    """Per-cycle probability of an uncorrectable error pattern.

    Computed as one minus the total probability of the correctable set,
    which is numerically benign: the correctable sum is a handful of
    dominant terms, accumulated with exact (fsum) summation.
    """
    px, py, pz = rates.px, rates.py, rates.pz
    q = 1.0 - rates.p
    n = code.n
    terms = [
        multinomial(n, wx, wy, wz)
        * px**wx
        * py**wy
        * pz**wz
        * q ** (n - wx - wy - wz)
        for wx, wy, wz in correctable_triples(code)
    ]
    return min(1.0, max(0.0, 1.0 - math.fsum(terms)))


def p_fail_leading(code: AsymmetricCode, rates: PauliRates) -> float:
    """Leading-order failure rate for small rates.

    Keeps only the lowest-weight violating patterns of each kind:
    ``C(n, tz+1) (py + pz)^(tz+1)`` for the Z budget and
    ``C(n, tx+1) (px + py)^(tx+1)`` for the X budget.
    """
    return math.comb(code.n, code.tz + 1) * (rates.py + rates.pz) ** (
        code.tz + 1
    ) + math.comb(code.n, code.tx + 1) * (rates.px + rates.py) ** (code.tx + 1)


def binomial_tail(n: int, q: float, k: int) -> float:
    """P(Bin(n, q) >= k), summed directly from the upper terms."""
    if k <= 0:
        return 1.0
    if k > n or q <= 0.0:
        return 0.0
    if q >= 1.0:
        return 1.0
    return math.fsum(
        math.comb(n, j) * q**j * (1.0 - q) ** (n - j) for j in range(k, n + 1)
    )


_CATALOG = (
    AsymmetricCode(15, 1, 7, 3),
    AsymmetricCode(31, 6, 7, 5),
    AsymmetricCode(23, 1, 7, 7),
    AsymmetricCode(5, 1, 3, 3),
)


def catalog() -> dict[str, AsymmetricCode]:
    """Reference codes keyed by name (e.g. ``15-1-7-3``)."""
    return {code.name: code for code in _CATALOG}


def code_by_name(name: str) -> AsymmetricCode:
    """Look up a cataloged code; raises ``KeyError`` with the known names."""
    codes = catalog()
    if name not in codes:
        raise KeyError(f"unknown code {name!r}; known codes: {sorted(codes)}")
    return codes[name]
