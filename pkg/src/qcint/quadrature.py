"""Certified cell brackets for smooth pieces.

On a box ``B`` of volume ``V`` and side lengths ``h_k``, a ``C^2`` function
with Hessian norm at most ``K2`` satisfies the midpoint estimate

    |int_B f - V f(c)| <= V K2 sum_k h_k**2 / 24.

Intersecting that interval with the Darboux interval ``[V min f, V max f]``
gives a bracket that shrinks quadratically for smooth pieces and remains
valid when no Hessian bound is available.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .pieces import Piece, Piecewise

MAX_CELLS = 1 << 22


@dataclass(frozen=True)
class Bracket:
    lower: float
    upper: float

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def mid(self) -> float:
        return 0.5 * (self.lower + self.upper)


def grid_cells(lo: np.ndarray, hi: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform ``n**d`` subdivision of the box ``[lo, hi]``."""
    d = len(lo)
    axes = [np.linspace(lo[k], hi[k], n + 1) for k in range(d)]
    idx = np.array(list(itertools.product(range(n), repeat=d))) if d > 1 else np.arange(n)[:, None]
    clo = np.stack([axes[k][idx[:, k]] for k in range(d)], axis=1)
    chi = np.stack([axes[k][idx[:, k] + 1] for k in range(d)], axis=1)
    return clo, chi


def cell_brackets(piece: Piece, clo: np.ndarray, chi: np.ndarray, k2: float | None) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell integral brackets (lower, upper) for a smooth piece."""
    vol = np.prod(chi - clo, axis=1)
    lo_v, hi_v = piece.enclose(clo, chi)
    lower = vol * lo_v
    upper = vol * hi_v
    if k2 is not None and math.isfinite(k2):
        mid = 0.5 * (clo + chi)
        m = piece.values(mid) * vol
        err = vol * k2 * np.sum((chi - clo) ** 2, axis=1) / 24.0
        err = err + 1e-15 * np.abs(m) + 1e-300
        lower = np.maximum(lower, m - err)
        upper = np.minimum(upper, m + err)
    return lower, upper


def integrate_piece(piece: Piece, box: tuple, tol: float) -> tuple[float, float]:
    """Integral of a smooth piece over a box with a certified error bound."""
    lo = np.array([float(v) for v in box[0]])
    hi = np.array([float(v) for v in box[1]])
    d = len(lo)
    if np.any(hi <= lo):
        return 0.0, 0.0
    k2 = piece.hessian_bound(box)
    n = 1
    best = (math.inf, 0.0)
    while True:
        clo, chi = grid_cells(lo, hi, n)
        lower, upper = cell_brackets(piece, clo, chi, k2)
        lsum, usum = math.fsum(lower), math.fsum(upper)
        width = usum - lsum
        if width < best[0]:
            best = (width, 0.5 * (lsum + usum))
        if width <= tol or (2 * n) ** d > MAX_CELLS:
            return best[1], best[0] / 2
        n *= 2


MAX_DEPTH = 48
MAX_OPEN = 4096


def _split(box: tuple) -> list[tuple]:
    lo, hi = box
    mids = [(a + b) / 2 for a, b in zip(lo, hi)]
    out = []
    for corner in itertools.product((0, 1), repeat=len(lo)):
        out.append((tuple(lo[k] if c == 0 else mids[k] for k, c in enumerate(corner)),
                    tuple(mids[k] if c == 0 else hi[k] for k, c in enumerate(corner))))
    return out


def _volume(box: tuple) -> float:
    return math.prod(float(b) - float(a) for a, b in zip(*box))


def integrate_piece_adaptive(piece: Piece, box: tuple, tol: float) -> tuple[Fraction | float, float]:
    """Like :func:`integrate_piece`, but first bisects cells on which the
    piece has neither a closed form nor a Hessian bound (for instance a
    ``min`` whose active operand changes inside the cell)."""
    exact = Fraction(0)
    floats: list[float] = []
    err = 0.0
    smooth: list[tuple] = []
    rough: list[tuple] = []
    open_cells = [box]
    depth = 0
    while open_cells:
        nxt = []
        for cell in open_cells:
            val = piece.integral(cell)
            if isinstance(val, Fraction):
                exact += val
            elif val is not None and math.isfinite(val):
                floats.append(val)
                err += 4e-16 * (1 + abs(val))
            elif val is not None:
                return val, math.inf
            elif (k2 := piece.hessian_bound(cell)) is not None and math.isfinite(k2):
                smooth.append(cell)
            else:
                nxt.append(cell)
        depth += 1
        if depth >= MAX_DEPTH or len(nxt) * 2 ** len(box[0]) > MAX_OPEN:
            rough.extend(nxt)
            break
        open_cells = [c for cell in nxt for c in _split(cell)]
    for cell in rough:
        lo = np.array([[float(v) for v in cell[0]]])
        hi = np.array([[float(v) for v in cell[1]]])
        m, M = piece.enclose(lo, hi)
        vol = _volume(cell)
        if not (math.isfinite(m[0]) and math.isfinite(M[0])):
            v, e = integrate_piece(piece, cell, tol / 2)
            floats.append(v)
            err += e
            continue
        floats.append(0.5 * (m[0] + M[0]) * vol)
        err += 0.5 * (M[0] - m[0]) * vol
    if smooth:
        total = sum(_volume(c) for c in smooth) or 1.0
        budget = max(tol - err, tol / 2)
        for cell in smooth:
            v, e = integrate_piece(piece, cell, budget * _volume(cell) / total)
            floats.append(v)
            err += e
    if not floats:
        return exact, 0.0
    return float(exact) + math.fsum(floats), err


def integrate_piecewise(pw: Piecewise, box: tuple, tol: float) -> tuple[Fraction | float, float]:
    """Integral of a piecewise function over a bounded box.

    Returns ``(value, error_bound)``; the value is an exact Fraction with
    zero error when every cell integral has an exact closed form.
    """
    exact_total = Fraction(0)
    floats: list[float] = []
    err = 0.0
    numeric: list[tuple[Piece, tuple]] = []
    for sub, piece in pw.cells_in(box):
        val = piece.integral(sub)
        if isinstance(val, Fraction):
            exact_total += val
        elif val is not None and math.isfinite(val):
            floats.append(val)
            err += 4e-16 * (1 + abs(val))
        else:
            numeric.append((sub, piece))
    if numeric:
        share = tol / len(numeric)
        for sub, piece in numeric:
            v, e = integrate_piece_adaptive(piece, sub, share)
            if isinstance(v, Fraction):
                exact_total += v
            else:
                floats.append(v)
            err += e
    if not floats and err == 0:
        return exact_total, 0.0
    return float(exact_total) + math.fsum(floats), err + 1e-16 * abs(float(exact_total))
