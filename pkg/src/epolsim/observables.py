"""Spectra, statistics, fidelities and entanglement diagnostics of joint states."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cavity import PolaritonBasis
from .electron import ELECTRON_LABEL
from .tensor import DensityMatrix, StateVector, partial_trace

__all__ = [
    "Distribution",
    "eels_spectrum",
    "polariton_statistics",
    "state_fidelity",
    "entanglement_entropy",
    "poisson_reference",
]

logger = logging.getLogger(__name__)

NEGATIVE_TOL = 1e-12


@dataclass(frozen=True)
class Distribution:
    """Normalized probability table over labeled outcomes.

    Round-off negatives within -1e-12 are clipped to zero and the table
    renormalized; the clipped magnitude is kept for diagnostics.  Anything
    more negative is a genuine positivity violation and rejected.
    """

    labels: tuple[str, ...]
    probabilities: np.ndarray
    clipped: float = field(default=0.0, repr=False)

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.shape != (len(self.labels),):
            raise ValueError(f"{len(self.labels)} labels but {p.shape} probabilities")
        p.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "labels", tuple(str(x) for x in self.labels))
        if p.min() < -NEGATIVE_TOL:
            raise ValueError(f"probability {p.min():.3e} below clip tolerance -{NEGATIVE_TOL}")
        total = p.sum()
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"probabilities sum to {total!r}, expected 1 within 1e-8")

    @classmethod
    def from_values(cls, labels, values) -> "Distribution":
        """Build from raw values, clipping round-off negatives and renormalizing."""
        p = np.asarray(values, dtype=float)
        if p.min() < -NEGATIVE_TOL:
            raise ValueError(f"probability {p.min():.3e} below clip tolerance -{NEGATIVE_TOL}")
        clipped = float(-p[p < 0].sum()) if (p < 0).any() else 0.0
        if clipped > 0:
            logger.debug("clipped %.3e of round-off negative probability", clipped)
            p = np.clip(p, 0.0, None)
        s = p.sum()
        if s <= 0:
            raise ValueError("probabilities sum to zero")
        return cls(tuple(str(x) for x in labels), p / s, clipped=clipped)

    def probability(self, label: str) -> float:
        try:
            return float(self.probabilities[self.labels.index(str(label))])
        except ValueError:
            raise KeyError(f"unknown label {label!r}") from None

    def entropy(self) -> float:
        """Shannon entropy in nats."""
        p = self.probabilities[self.probabilities > 0]
        return float(-(p * np.log(p)).sum())

    def total_variation(self, other: "Distribution") -> float:
        if self.labels != other.labels:
            raise ValueError("distributions are over different outcome sets")
        return 0.5 * float(np.abs(self.probabilities - other.probabilities).sum())

    def to_csv(self, path: str | Path, header: str = "label,probability"):
        with open(path, "w", newline="\n") as fh:
            fh.write(header + "\n")
            for lab, p in zip(self.labels, self.probabilities):
                fh.write(f"{lab},{p:.17g}\n")


def eels_spectrum(rho: DensityMatrix, center: int = 0, electron_label: str = ELECTRON_LABEL) -> Distribution:
    """Electron energy-change spectrum: sideband index relative to `center`.

    Traces out every non-electron factor and reads the diagonal; sidebands are
    reported as signed offsets on the cyclic ladder, ascending.
    """
    reduced = partial_trace(rho, [electron_label])
    d = reduced.space.dim
    diag = np.real(np.diag(reduced.matrix))
    offsets = ((np.arange(d) - center) + d // 2) % d - d // 2
    order = np.argsort(offsets)
    return Distribution.from_values([str(int(offsets[i])) for i in order], diag[order])


def polariton_statistics(rho: DensityMatrix, basis: PolaritonBasis, electron_label: str = ELECTRON_LABEL) -> Distribution:
    """Populations of the nonlinear-cavity eigenlevels after tracing out the electron."""
    keep = [lab for lab in rho.space.labels if lab != electron_label]
    if not keep:
        raise ValueError("state has no cavity factors")
    reduced = partial_trace(rho, keep)
    if reduced.space.dim != basis.dim:
        raise ValueError(f"cavity dimension {reduced.space.dim} does not match basis dimension {basis.dim}")
    rotated = basis.u.conj().T @ reduced.matrix @ basis.u
    return Distribution.from_values(basis.labels, np.real(np.diag(rotated)))


def state_fidelity(rho: DensityMatrix, psi: StateVector) -> float:
    """Overlap <psi| rho |psi> of a mixed state with a pure target."""
    if rho.space != psi.space:
        raise ValueError(f"spaces differ: {rho.space.labels} vs {psi.space.labels}")
    val = complex(np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes))
    if abs(val.imag) > 1e-10:
        raise ValueError(f"fidelity has imaginary part {val.imag:.3e}")
    return float(min(max(val.real, 0.0), 1.0))


def entanglement_entropy(rho: DensityMatrix, keep_labels) -> float:
    """Von Neumann entropy (nats) of the reduced state across a bipartition.

    Requires the total state to be pure (purity within 1e-8 of 1), otherwise
    the bipartite entanglement is not what this number measures.
    """
    purity = rho.purity()
    if purity < 1.0 - 1e-8:
        raise ValueError(f"total state is mixed (purity {purity!r}); entanglement entropy undefined")
    reduced = partial_trace(rho, keep_labels)
    evals = np.linalg.eigvalsh(reduced.matrix)
    evals = evals[evals > 1e-15]
    return float(max(-(evals * np.log(evals)).sum(), 0.0))


def poisson_reference(mean: float, n_max: int) -> Distribution:
    """Truncated, renormalized Poisson table on photon numbers 0..n_max."""
    if mean < 0:
        raise ValueError(f"mean must be >= 0, got {mean}")
    n = np.arange(n_max + 1)
    if mean == 0:
        p = np.zeros(n_max + 1)
        p[0] = 1.0
    else:
        logp = -mean + n * math.log(mean) - np.array([math.lgamma(k + 1) for k in n])
        p = np.exp(logp)
    return Distribution.from_values([str(int(k)) for k in n], p)
