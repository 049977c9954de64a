"""Anharmonic coupling tensors in normal coordinates.

The physical-coordinate cubic/quartic derivative tensors are diagonal
(substrate on-site terms only), so each normal-coordinate element is a
single O(N) sum::

    L_ijk  = sum_m  c3_m lambda_mi lambda_mj lambda_mk
    M_ijkl = sum_m  c4_m lambda_mi lambda_mj lambda_mk lambda_ml

The full rank-3/rank-4 contraction is never formed.  Tensors are stored
sparsely under canonical (sorted) index keys; entries below threshold are
dropped, which keeps parity-forbidden zeros exact instead of storing
round-off noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .models import DerivativeBundle
from .modes import ModeBasis

RELATIVE_THRESHOLD = 1e-12


def _pack(keys: np.ndarray, n: int) -> np.ndarray:
    """Lexicographic integer codes for sorted index rows."""
    code = keys[:, 0].astype(np.int64)
    for c in range(1, keys.shape[1]):
        code = code * n + keys[:, c]
    return code


@dataclass
class CouplingTensors:
    """Sparse symmetric cubic/quartic couplings plus the diagonal quadratic part.

    ``omega2[i]`` is the squared frequency of mode ``i`` (the quadratic
    tensor is exactly diagonal).  ``third_keys``/``fourth_keys`` hold
    canonical ascending index rows; values are invariant under any index
    permutation.  Lookups return 0.0 for dropped or absent entries.
    """

    omega2: np.ndarray
    third_keys: np.ndarray
    third_vals: np.ndarray
    fourth_keys: np.ndarray
    fourth_vals: np.ndarray
    threshold_third: float
    threshold_fourth: float

    def __post_init__(self):
        self._n = len(self.omega2)
        self._code3 = _pack(self.third_keys, self._n)
        self._code4 = _pack(self.fourth_keys, self._n)

    @property
    def n(self) -> int:
        return self._n

    @property
    def threshold(self) -> float:
        return self.threshold_third

    def get_third(self, i: int, j: int, k: int) -> float:
        key = np.sort(np.array([[i, j, k]], dtype=np.int64), axis=1)
        code = _pack(key, self._n)[0]
        pos = np.searchsorted(self._code3, code)
        if pos < len(self._code3) and self._code3[pos] == code:
            return float(self.third_vals[pos])
        return 0.0

    def get_fourth(self, i: int, j: int, k: int, l: int) -> float:
        key = np.sort(np.array([[i, j, k, l]], dtype=np.int64), axis=1)
        code = _pack(key, self._n)[0]
        pos = np.searchsorted(self._code4, code)
        if pos < len(self._code4) and self._code4[pos] == code:
            return float(self.fourth_vals[pos])
        return 0.0

    def third_slice(self, mode: int) -> np.ndarray:
        """Dense matrix ``T[j, k] = L[mode, j, k]``."""
        self._check_mode(mode)
        n = self._n
        t = np.zeros((n, n))
        if len(self.third_vals) == 0:
            return t
        keys = self.third_keys.astype(np.int64)
        mask = np.any(keys == mode, axis=1)
        rows = keys[mask]
        vals = self.third_vals[mask]
        first = np.argmax(rows == mode, axis=1)
        keep = np.arange(3)[None, :] != first[:, None]
        rem = rows[keep].reshape(-1, 2)
        t[rem[:, 0], rem[:, 1]] = vals
        t[rem[:, 1], rem[:, 0]] = vals
        return t

    def fourth_pair_slice(self, i: int, j: int) -> np.ndarray:
        """Dense matrix ``T[k, l] = M[i, j, k, l]`` for fixed ``i, j``."""
        self._check_mode(i)
        self._check_mode(j)
        n = self._n
        t = np.zeros((n, n))
        if len(self.fourth_vals) == 0:
            return t
        keys = self.fourth_keys.astype(np.int64)
        cnt_i = np.sum(keys == i, axis=1)
        if i == j:
            mask = cnt_i >= 2
        else:
            mask = (cnt_i >= 1) & (np.sum(keys == j, axis=1) >= 1)
        rows = keys[mask]
        vals = self.fourth_vals[mask]
        m = len(vals)
        if m == 0:
            return t
        ar = np.arange(m)
        rows = rows.copy()
        rows[ar, np.argmax(rows == i, axis=1)] = -1
        rows[ar, np.argmax(rows == j, axis=1)] = -1
        rem = rows[rows >= 0].reshape(-1, 2)
        t[rem[:, 0], rem[:, 1]] = vals
        t[rem[:, 1], rem[:, 0]] = vals
        return t

    def _check_mode(self, mode: int):
        if not 0 <= mode < self._n:
            raise ConfigError(f"mode index {mode} out of range [0, {self._n})")

    def save(self, path):
        np.savez(
            path,
            omega2=self.omega2,
            third_keys=self.third_keys,
            third_vals=self.third_vals,
            fourth_keys=self.fourth_keys,
            fourth_vals=self.fourth_vals,
            thresholds=np.array([self.threshold_third, self.threshold_fourth]),
        )

    @classmethod
    def load(cls, path) -> "CouplingTensors":
        with np.load(path) as data:
            return cls(
                omega2=data["omega2"],
                third_keys=data["third_keys"],
                third_vals=data["third_vals"],
                fourth_keys=data["fourth_keys"],
                fourth_vals=data["fourth_vals"],
                threshold_third=float(data["thresholds"][0]),
                threshold_fourth=float(data["thresholds"][1]),
            )


def transform(bundle: DerivativeBundle, basis: ModeBasis,
              threshold: float | None = None) -> CouplingTensors:
    """Rotate the diagonal anharmonic tensors into normal coordinates.

    Parameters
    ----------
    bundle : DerivativeBundle
        Derivatives at a converged minimum.
    basis : ModeBasis
        Eigenbasis of the same Hessian.
    threshold : float, optional
        Absolute drop threshold for stored entries.  Default: 1e-12 times
        the largest physical-coordinate coefficient, separately per order.
    """
    w = basis.vectors
    n = w.shape[0]
    if bundle.third_diag.shape != (n,) or w.shape != (n, n):
        raise ConfigError("derivative bundle and mode basis dimensions disagree")
    c3 = bundle.third_diag
    c4 = bundle.fourth_diag
    if threshold is None:
        thr3 = RELATIVE_THRESHOLD * float(np.max(np.abs(c3)) or 1.0)
        thr4 = RELATIVE_THRESHOLD * float(np.max(np.abs(c4)) or 1.0)
    else:
        thr3 = thr4 = float(threshold)

    key_chunks3, val_chunks3 = [], []
    for i in range(n):
        u = c3 * w[:, i]
        tail = w[:, i:]
        block = tail.T @ (u[:, None] * tail)  # (j, k) >= i
        ju, ku = np.triu_indices(n - i)
        vals = block[ju, ku]
        keep = np.abs(vals) >= thr3
        if np.any(keep):
            ju, ku, vals = ju[keep], ku[keep], vals[keep]
            keys = np.column_stack([
                np.full(len(vals), i), ju + i, ku + i,
            ])
            key_chunks3.append(keys)
            val_chunks3.append(vals)
    third_keys = (np.concatenate(key_chunks3) if key_chunks3
                  else np.zeros((0, 3), dtype=np.int64)).astype(np.uint16)
    third_vals = (np.concatenate(val_chunks3) if val_chunks3
                  else np.zeros(0))

    # quartic via the pair matrix: rows are mode pairs, M = P^T diag(c4) P
    pi, pj = np.triu_indices(n)
    pairs = w[:, pi] * w[:, pj]  # (n, n_pairs), lexicographic pair order
    gram = pairs.T @ (c4[:, None] * pairs)
    key_chunks4, val_chunks4 = [], []
    n_pairs = len(pi)
    for a in range(n_pairs):
        # canonical quadruple i<=j<=k<=l needs k >= j; pair first-indices
        # are sorted, so valid partners form a contiguous tail
        start = np.searchsorted(pi, pj[a], side="left")
        vals = gram[a, start:]
        keep = np.abs(vals) >= thr4
        if np.any(keep):
            sel = np.nonzero(keep)[0] + start
            keys = np.column_stack([
                np.full(len(sel), pi[a]), np.full(len(sel), pj[a]),
                pi[sel], pj[sel],
            ])
            key_chunks4.append(keys)
            val_chunks4.append(vals[keep])
    fourth_keys = (np.concatenate(key_chunks4) if key_chunks4
                   else np.zeros((0, 4), dtype=np.int64)).astype(np.uint16)
    fourth_vals = (np.concatenate(val_chunks4) if val_chunks4
                   else np.zeros(0))

    return CouplingTensors(
        omega2=basis.freqs ** 2,
        third_keys=third_keys,
        third_vals=third_vals,
        fourth_keys=fourth_keys,
        fourth_vals=fourth_vals,
        threshold_third=thr3,
        threshold_fourth=thr4,
    )


def coupling_slice(tensors: CouplingTensors, mode: int, order: int) -> np.ndarray:
    """Per-mode coupling-strength matrix.

    Order 3 gives ``|L[mode, j, k]| / 3!`` and order 4 gives
    ``|M[mode, mode, j, k]| / 4!`` over all ``(j, k)``.
    """
    if order == 3:
        return np.abs(tensors.third_slice(mode)) / 6.0
    if order == 4:
        return np.abs(tensors.fourth_pair_slice(mode, mode)) / 24.0
    raise ConfigError(f"order must be 3 or 4, got {order}")
