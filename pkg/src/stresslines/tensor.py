"""Symmetric 3x3 stress tensors: principal decomposition, degeneracy, scalar fields.

Component order is (sxx, syy, szz, txy, tyz, txz) everywhere, matching the
mesh file layout. Principal values are reported in descending order with
sigma1 >= sigma2 >= sigma3.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

COMPONENT_ORDER = ("sxx", "syy", "szz", "txy", "tyz", "txz")

# Two principal values count as near-degenerate strictly below this bound.
DEG_THRESHOLD = 1e-6

_DEG_DEN_REL = 1e-12
_DEG_DEN_ABS = 1e-300

SCALAR_SELECTORS = (
    "sigma1", "sigma2", "sigma3", "von_mises",
    "sxx", "syy", "szz", "txy", "tyz", "txz",
)

_SCALAR_ALIASES = {"vonmises": "von_mises", "vm": "von_mises"}


class StressTensor(NamedTuple):
    sxx: float
    syy: float
    szz: float
    txy: float
    tyz: float
    txz: float

    @classmethod
    def from_components(cls, comps: Sequence[float]) -> "StressTensor":
        if len(comps) != 6:
            raise ValueError("stress tensor needs 6 components")
        return cls(*(float(c) for c in comps))

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)

    def as_matrix(self) -> np.ndarray:
        sxx, syy, szz, txy, tyz, txz = self
        return np.array([
            [sxx, txy, txz],
            [txy, syy, tyz],
            [txz, tyz, szz],
        ])


@dataclass(frozen=True)
class PrincipalDecomposition:
    """Ordered principal values and unit directions.

    ``e`` holds one eigenvector per row; ``e[0]`` belongs to ``sigma[0]``.
    Rows form a right-handed orthonormal frame up to the sign convention
    (largest-magnitude component of each row is positive).
    """

    sigma: tuple[float, float, float]
    e: np.ndarray
    deg12: float
    deg23: float


def degeneracy(si: float, sj: float) -> float:
    """Relative closeness of two principal values, 0.5*|si - sj| / |si + sj|.

    The denominator is floored to stay meaningful when si + sj cancels:
    opposite-sign pairs of similar magnitude map to a huge value, which the
    near-degenerate predicate then rejects.
    """
    num = 0.5 * abs(si - sj)
    den = abs(si + sj)
    floor = _DEG_DEN_REL * (abs(si) + abs(sj) + _DEG_DEN_ABS)
    return num / max(den, floor)


def is_near_degenerate(deg: float) -> bool:
    return deg < DEG_THRESHOLD


def von_mises(t: Sequence[float]) -> float:
    sxx, syy, szz, txy, tyz, txz = t
    d = 0.5 * ((sxx - syy) ** 2 + (syy - szz) ** 2 + (szz - sxx) ** 2)
    s = 3.0 * (txy * txy + tyz * tyz + txz * txz)
    return math.sqrt(max(d + s, 0.0))


def canonical_scalar(which: str) -> str:
    """Resolve a scalar selector name, accepting the usual aliases."""
    name = _SCALAR_ALIASES.get(which, which)
    if name not in SCALAR_SELECTORS:
        raise ValueError(f"unknown scalar selector {which!r}")
    return name


def scalar_field(t: Sequence[float], which: str) -> float:
    """Evaluate one named scalar of a tensor sample."""
    which = canonical_scalar(which)
    if which == "von_mises":
        return von_mises(t)
    if which.startswith("sigma"):
        dec = decompose(t)
        return dec.sigma[int(which[-1]) - 1]
    return float(t[COMPONENT_ORDER.index(which)])


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude component is positive.

    Ties go to the first index, so the rule is deterministic for vectors
    like (a, -a, 0).
    """
    a = np.abs(v)
    i = int(np.argmax(a))
    return -v if v[i] < 0 else v


def _eigvals_closed(a00, a11, a22, a01, a12, a02):
    # Trigonometric solution of the characteristic cubic.
    p1 = a01 * a01 + a02 * a02 + a12 * a12
    if p1 == 0.0:
        vals = sorted((a00, a11, a22), reverse=True)
        return vals[0], vals[1], vals[2]
    q = (a00 + a11 + a22) / 3.0
    p2 = (a00 - q) ** 2 + (a11 - q) ** 2 + (a22 - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    b00, b11, b22 = (a00 - q) / p, (a11 - q) / p, (a22 - q) / p
    b01, b12, b02 = a01 / p, a12 / p, a02 / p
    detb = (b00 * (b11 * b22 - b12 * b12)
            - b01 * (b01 * b22 - b12 * b02)
            + b02 * (b01 * b12 - b11 * b02))
    r = min(1.0, max(-1.0, detb / 2.0))
    phi = math.acos(r) / 3.0
    e1 = q + 2.0 * p * math.cos(phi)
    e3 = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    e2 = 3.0 * q - e1 - e3
    return e1, e2, e3


def _jacobi3(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi sweeps; returns (eigenvalues, row eigenvectors) unsorted."""
    a = m.copy()
    v = np.eye(3)
    for _ in range(30):
        off = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
        if off < 1e-32:
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            apq = a[p, q]
            if apq == 0.0:
                continue
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            c = 1.0 / math.sqrt(t * t + 1.0)
            s = t * c
            rot = np.eye(3)
            rot[p, p] = rot[q, q] = c
            rot[p, q] = s
            rot[q, p] = -s
            a = rot.T @ a @ rot
            v = v @ rot
    return np.diag(a).copy(), v.T.copy()


def _vec_for(m: np.ndarray, lam: float) -> tuple[np.ndarray, float]:
    """Null-space direction of (m - lam I) via the largest row cross product."""
    d = m - lam * np.eye(3)
    c01 = np.cross(d[0], d[1])
    c02 = np.cross(d[0], d[2])
    c12 = np.cross(d[1], d[2])
    best = c01
    bn = c01 @ c01
    for c in (c02, c12):
        n = c @ c
        if n > bn:
            best, bn = c, n
    return best, bn


def decompose(t: Sequence[float]) -> PrincipalDecomposition:
    """Principal decomposition of a symmetric stress tensor.

    Uses the closed-form cubic for the eigenvalues and cross products of
    (T - lam I) rows for the eigenvectors; if the directions come out
    ill-conditioned (tight eigenvalue clusters) the whole decomposition is
    redone with Jacobi rotations. Eigenvectors are returned as rows, unit
    length, mutually orthogonal, sign-canonicalized.
    """
    sxx, syy, szz, txy, tyz, txz = (float(c) for c in t)
    scale = max(abs(sxx), abs(syy), abs(szz), abs(txy), abs(tyz), abs(txz))
    if scale == 0.0:
        return PrincipalDecomposition((0.0, 0.0, 0.0), np.eye(3), 0.0, 0.0)

    m = np.array([
        [sxx, txy, txz],
        [txy, syy, tyz],
        [txz, tyz, szz],
    ]) / scale
    l1, l2, l3 = _eigvals_closed(m[0, 0], m[1, 1], m[2, 2], m[0, 1], m[1, 2], m[0, 2])

    vecs = _vectors_from_values(m, (l1, l2, l3))
    if vecs is None:
        vals, rows = _jacobi3(m)
        order = np.argsort(-vals, kind="stable")
        l1, l2, l3 = (float(vals[i]) for i in order)
        vecs = rows[order]

    e = np.vstack([canonical_sign(v) for v in vecs])
    s1, s2, s3 = l1 * scale, l2 * scale, l3 * scale
    return PrincipalDecomposition(
        (s1, s2, s3), e, degeneracy(s1, s2), degeneracy(s2, s3))


def _vectors_from_values(m: np.ndarray, lams: tuple[float, float, float]):
    """Eigenvector rows for sorted eigenvalues, or None when unreliable."""
    l1, l2, l3 = lams
    g12, g23 = l1 - l2, l2 - l3
    span = max(abs(l1), abs(l3), 1e-30)
    # Both gaps tiny: nearly hydrostatic, axes are arbitrary; let Jacobi
    # settle it (it returns a clean orthonormal set regardless).
    if max(g12, g23) < 1e-6 * span:
        return None

    # Resolve the best-isolated value first, the opposite extreme second,
    # and close the frame with a cross product.
    if g12 >= g23:
        first, second, slot_first, slot_second = l1, l3, 0, 2
    else:
        first, second, slot_first, slot_second = l3, l1, 2, 0
    v_first, n_first = _vec_for(m, first)
    if n_first < 1e-24:
        return None
    v_first = v_first / math.sqrt(n_first)
    v_second, n_second = _vec_for(m, second)
    if n_second < 1e-24:
        return None
    v_second = v_second / math.sqrt(n_second)
    v_second = v_second - (v_second @ v_first) * v_first
    ns = v_second @ v_second
    if ns < 1e-12:
        return None
    v_second = v_second / math.sqrt(ns)
    v_mid = np.cross(v_first, v_second)

    out = np.empty((3, 3))
    out[slot_first] = v_first
    out[slot_second] = v_second
    out[1] = v_mid
    # Residual check; reject silently and let Jacobi redo anything fishy.
    for row, lam in zip(out, lams):
        r = m @ row - lam * row
        if r @ r > 1e-18:
            return None
    return out
