"""Independent reference propagator for dual-route checks.

Integrates the master equation exactly as written: dense matrices in the bare
labeled basis, the static nonlinear Hamiltonian kept explicitly inside the
generator, plain fixed-step RK4.  Deliberately shares no code with the
production engine beyond the Hamiltonian builder it cross-checks.
"""
from __future__ import annotations

import numpy as np

from epolsim import DensityMatrix, SystemConfig, build_ladder


def reference_lindblad(cfg: SystemConfig, rho0: np.ndarray, steps: int) -> np.ndarray:
    dim = cfg.space.dim
    d = cfg.ladder.rungs
    b = build_ladder(cfg.ladder).matrix
    a = np.kron(np.eye(d), cfg.model.a)
    a_dag = a.conj().T
    n_op = a_dag @ a
    h_nl = np.kron(np.eye(d), cfg.model.h_nl)
    bd_a = np.kron(b.conj().T, cfg.model.a)
    g = cfg.coupling_rate
    gamma = cfg.gamma

    def rhs(t, rho):
        drive = (1j * g * np.exp(1j * cfg.delta * t)) * bd_a
        h = h_nl + drive + drive.conj().T
        out = -1j * (h @ rho - rho @ h)
        if gamma:
            out = out + gamma * (a @ rho @ a_dag - 0.5 * (n_op @ rho + rho @ n_op))
        return out

    rho = np.asarray(rho0, dtype=complex).copy()
    dt = cfg.interaction_time / steps
    for i in range(steps):
        t = i * dt
        k1 = rhs(t, rho)
        k2 = rhs(t + 0.5 * dt, rho + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, rho + 0.5 * dt * k2)
        k4 = rhs(t + dt, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        rho = 0.5 * (rho + rho.conj().T)
    return rho


def reference_steps(cfg: SystemConfig) -> int:
    """Step count resolving the raw nonlinear phases this picture retains."""
    n = cfg.model.n_cut
    rate = max(
        abs(cfg.delta),
        cfg.model.kappa * n * n,
        2.0 * abs(cfg.coupling_rate) * np.sqrt(cfg.model.dim),
        cfg.gamma * n,
    )
    return max(200, int(np.ceil(cfg.interaction_time * rate / 0.03)))
