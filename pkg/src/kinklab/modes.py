"""Normal-mode analysis of the relaxed chain.

Frequencies are reported highest-first, so "mode 1" is always the top of
the spectrum.  For a kink the physically interesting output is the pair of
gap-separated localized modes: the anti-symmetric shape mode and the
low-frequency translational mode pinned by lattice discreteness.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, NumericalError, SaddleError

ORTHO_TOL = 1e-10
RECON_TOL = 1e-9
DEGENERACY_RTOL = 1e-10
DEFAULT_GAP_FACTOR = 3.0
END_WEIGHT_CUTOFF = 0.5


@dataclass
class ModeBasis:
    """Eigenmodes of a Hessian, highest frequency first.

    ``vectors[:, j]`` is the unit-norm displacement pattern of mode ``j``;
    its sign is fixed so the largest-magnitude entry is positive.
    ``localized`` and ``end_modes`` hold 0-based column indices (filled in
    by :func:`classify`); ``participation`` is the inverse participation
    ratio 1/(N sum lambda^4), 1 for uniform modes and 1/N for single-site
    modes.
    """

    freqs: np.ndarray
    vectors: np.ndarray
    localized: list = field(default_factory=list)
    participation: np.ndarray | None = None
    end_modes: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.freqs)

    def mode_number(self, index: int) -> int:
        """1-based mode number (1 = highest frequency) for reports."""
        return index + 1

    def localized_high_low(self) -> tuple[int, int]:
        """Column indices of the high and low localized modes.

        The high (anti-symmetric, shape) mode comes first.  Raises unless
        exactly two localized modes were flagged.
        """
        if len(self.localized) != 2:
            raise ConfigError(
                f"expected exactly two localized modes, found {len(self.localized)}"
            )
        lo, hi = max(self.localized), min(self.localized)
        return hi, lo

    def to_json_dict(self) -> dict:
        return {
            "freqs": [float(v) for v in self.freqs],
            "vectors": [[float(v) for v in row] for row in self.vectors],
            "localized": [int(i) for i in self.localized],
            "participation": (
                None if self.participation is None
                else [float(v) for v in self.participation]
            ),
            "end_modes": [int(i) for i in self.end_modes],
        }

    @classmethod
    def from_json_dict(cls, doc: dict) -> "ModeBasis":
        part = doc.get("participation")
        return cls(
            freqs=np.asarray(doc["freqs"], dtype=float),
            vectors=np.asarray(doc["vectors"], dtype=float),
            localized=[int(i) for i in doc.get("localized", [])],
            participation=None if part is None else np.asarray(part, dtype=float),
            end_modes=[int(i) for i in doc.get("end_modes", [])],
        )


@dataclass
class ResonanceReport:
    """Multi-phonon detunings closed by a band mode.

    Entries are ``(signature, mode_number, detuning)`` with 1-based mode
    numbers, sorted by increasing ``|detuning|``.
    """

    entries: list

    def to_json_dict(self) -> dict:
        return {
            "entries": [
                {"signature": s, "mode": int(m), "detuning": float(d)}
                for s, m, d in self.entries
            ]
        }


def _reflection_canonicalize(vectors: np.ndarray, eigvals: np.ndarray) -> np.ndarray:
    """Rotate degenerate eigenvector groups onto reflection eigenstates.

    Within a numerically degenerate eigenvalue group any rotation of the
    columns is valid, so LAPACK's choice is arbitrary.  Diagonalizing the
    site-reflection operator inside each group picks the parity eigenbasis,
    which is well defined whenever the chain itself is reflection
    symmetric, and deterministic either way.  Groups are then ordered by
    parity score, even first.
    """
    n = vectors.shape[0]
    out = vectors.copy()
    scale = max(1.0, float(np.max(np.abs(eigvals))))
    start = 0
    while start < len(eigvals):
        stop = start + 1
        while (stop < len(eigvals)
               and abs(eigvals[stop] - eigvals[stop - 1]) <= DEGENERACY_RTOL * scale):
            stop += 1
        if stop - start > 1:
            block = out[:, start:stop]
            refl = block[::-1, :]  # site i -> N+1-i
            b_small = block.T @ refl
            b_small = 0.5 * (b_small + b_small.T)
            _, rot = np.linalg.eigh(b_small)
            block = block @ rot
            parity = np.einsum("ij,ij->j", block, block[::-1, :])
            order = np.argsort(-parity, kind="stable")
            out[:, start:stop] = block[:, order]
        start = stop
    return out


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def normal_modes(hessian: np.ndarray) -> ModeBasis:
    """Full symmetric eigendecomposition of a positive definite Hessian.

    Returns frequencies ``omega = sqrt(eigenvalue)`` sorted descending and
    the matching orthonormal mode matrix.  Orthonormality and Hessian
    reconstruction are asserted before returning.
    """
    hessian = np.asarray(hessian, dtype=float)
    if hessian.ndim != 2 or hessian.shape[0] != hessian.shape[1]:
        raise ConfigError(f"hessian must be square, got shape {hessian.shape}")
    if not np.array_equal(hessian, hessian.T):
        raise ConfigError("hessian must be exactly symmetric as stored")

    eigvals, eigvecs = np.linalg.eigh(hessian)
    if eigvals[0] <= 0.0:
        bad = int(np.argmin(eigvals))
        n_bad = int(np.sum(eigvals <= 0.0))
        raise SaddleError(
            f"hessian has {n_bad} non-positive eigenvalue(s); smallest is "
            f"{eigvals[bad]:.6e} (mode {len(eigvals) - bad} in descending order) "
            "-- the input configuration is not a strict minimum",
            min_hessian_eig=float(eigvals[bad]),
        )

    # descending frequency order
    eigvals = eigvals[::-1]
    eigvecs = eigvecs[:, ::-1]
    eigvecs = _reflection_canonicalize(eigvecs, eigvals)
    eigvecs = _fix_signs(eigvecs)
    freqs = np.sqrt(eigvals)

    n = hessian.shape[0]
    gram_err = float(np.max(np.abs(eigvecs.T @ eigvecs - np.eye(n))))
    if gram_err > ORTHO_TOL:
        raise NumericalError(f"mode matrix not orthonormal (error {gram_err:.3e})")
    recon = eigvecs @ (eigvals[:, None] * eigvecs.T)
    recon_err = float(np.max(np.abs(recon - hessian)))
    hnorm = float(np.max(np.abs(hessian)))
    if recon_err > RECON_TOL * hnorm:
        raise NumericalError(
            f"eigendecomposition does not reconstruct the hessian "
            f"(error {recon_err:.3e} vs bound {RECON_TOL * hnorm:.3e})"
        )
    return ModeBasis(freqs=freqs, vectors=eigvecs)


def classify(basis: ModeBasis, gap_factor: float = DEFAULT_GAP_FACTOR) -> ModeBasis:
    """Flag localized and end modes; compute participation ratios.

    End modes (more than half their weight on the two boundary particles)
    are excluded from the band statistics but stay in the basis.  A mode is
    localized when it sits outside the band, separated from it by more than
    ``gap_factor`` times the median adjacent band spacing; the check peels
    modes off both spectrum edges until no gap qualifies.
    """
    if gap_factor <= 1.0:
        raise ConfigError("gap_factor must exceed 1")
    n = basis.n
    vec = basis.vectors
    participation = 1.0 / (n * np.sum(vec ** 4, axis=0))
    end_weight = vec[0, :] ** 2 + vec[-1, :] ** 2
    end_modes = [int(j) for j in np.where(end_weight > END_WEIGHT_CUTOFF)[0]]

    interior = [j for j in range(n) if j not in end_modes]
    freqs = basis.freqs[interior]  # descending
    lo, hi = 0, len(freqs)  # band candidate window [lo, hi)
    while hi - lo > 2:
        spacings = -np.diff(freqs[lo:hi])
        median = float(np.median(spacings))
        if median <= 0.0:
            break
        peeled = False
        if freqs[lo] - freqs[lo + 1] > gap_factor * median:
            lo += 1  # lifted above the band top
            peeled = True
        if freqs[hi - 2] - freqs[hi - 1] > gap_factor * median:
            hi -= 1  # split off below the band bottom
            peeled = True
        if not peeled:
            break
    localized = [interior[j] for j in range(len(freqs)) if j < lo or j >= hi]
    return replace(
        basis,
        localized=sorted(localized),
        participation=participation,
        end_modes=end_modes,
    )


def resonances(basis: ModeBasis, i: int, j: int) -> ResonanceReport:
    """Three- and four-phonon detunings between modes ``i``, ``j`` and the band.

    ``i`` and ``j`` are 0-based column indices.  Three-phonon entries
    ``w_i - w_j - w_k`` and ``w_i + w_j - w_k`` are listed for every
    non-localized mode ``k``; four-phonon combinations
    ``w_i +- w_j +- w_k - w_l`` are truncated to the 20 smallest detunings.
    """
    n = basis.n
    if i == j or not (0 <= i < n and 0 <= j < n):
        raise ConfigError(f"need two distinct valid mode indices, got {i}, {j}")
    w = basis.freqs
    num = basis.mode_number
    others = [k for k in range(n) if k not in basis.localized and k not in (i, j)]

    entries = []
    for k in others:
        entries.append((f"w{num(i)}-w{num(j)}-w{num(k)}", num(k), w[i] - w[j] - w[k]))
        entries.append((f"w{num(i)}+w{num(j)}-w{num(k)}", num(k), w[i] + w[j] - w[k]))

    quad = []
    wk = w[others]
    m = len(others)
    for sj, sj_tag in ((1.0, "+"), (-1.0, "-")):
        for sk, sk_tag in ((1.0, "+"), (-1.0, "-")):
            # detuning grid over (k, l): w_i +- w_j +- w_k - w_l
            det = w[i] + sj * w[j] + sk * wk[:, None] - wk[None, :]
            flat = det.ravel()
            keep = np.argsort(np.abs(flat), kind="stable")[:20]
            for pos in keep:
                a, b = divmod(int(pos), m)
                quad.append((
                    f"w{num(i)}{sj_tag}w{num(j)}{sk_tag}"
                    f"w{num(others[a])}-w{num(others[b])}",
                    num(others[b]),
                    float(flat[pos]),
                ))
    quad.sort(key=lambda e: abs(e[2]))
    entries.extend(quad[:20])
    entries.sort(key=lambda e: abs(e[2]))
    return ResonanceReport(entries=entries)
