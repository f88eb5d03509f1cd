"""Time evolution of the joint electron-cavity state and closed-form scattering matrices.

The propagator integrates the interaction-picture master equation

    drho/dt = -i [H_nl + i g e^{i dt} (bdag x a) + h.c., rho] + gamma * D[a] rho

with fixed-step RK4.  Internally the integration variable is rotated by
exp(i H_nl t) (an exact unitary change of variables, undone before results are
returned), which absorbs the stiff nonlinear phases into analytically exact
factors and leaves only the slow phase-mismatch frequencies to resolve.

Two structural facts keep the propagation cheap:

* the cyclic electron shift makes the total excitation sector (rung + cavity
  excitation, mod D) an exact symmetry, so the Hamiltonian is block-diagonal
  with one identical block per sector;
* a rung-eigenstate initial condition has no coherence between different
  sectors, and photon loss shifts bra and ket sectors together, so the density
  matrix stays sector-block-diagonal for the whole evolution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .cavity import CavityModel, PolaritonBasis, polariton_eigenbasis
from .electron import ELECTRON_LABEL, LadderConfig, build_ladder
from .tensor import DensityMatrix, Operator, StateVector, TensorSpace

__all__ = [
    "SystemConfig",
    "IntegratorConfig",
    "EvolveResult",
    "Diagnostics",
    "NumericsError",
    "TraceDriftError",
    "CutoffError",
    "WrapAroundError",
    "ConvergenceError",
    "FeasibilityReport",
    "interaction_hamiltonian",
    "evolve_lindblad",
    "scattering_linear",
    "scattering_blockade",
    "frame_align",
    "initial_state",
    "blockade_angle",
    "pair_detuning",
    "auto_steps",
    "feasibility_check",
    "check_feasibility",
]


class NumericsError(RuntimeError):
    """Numerical-quality violation in a propagation run."""


class TraceDriftError(NumericsError):
    pass


class CutoffError(NumericsError):
    """Population reached the top of the photon ladder: truncation invalid."""


class WrapAroundError(NumericsError):
    """Population reached the cyclic wrap-around rungs of the electron ladder."""


class ConvergenceError(NumericsError):
    """Step-halving changed a reported probability beyond the bound."""


@dataclass(frozen=True)
class SystemConfig:
    """Joint system: cavity model, electron ladder, coupling and rates.

    All frequencies are ratios to the cavity frequency (omega = 1, hbar = 1):
    `interaction_time` is omega*T, `delta` is the phase mismatch q0*v - omega,
    `gamma` the photon loss ratio.  `g_q` is the dimensionless coupling (the
    rate in the Hamiltonian is g_q / T).  `energy_spread` = dE/E enters the
    feasibility inequalities only, never the dynamics.
    """

    model: CavityModel
    ladder: LadderConfig
    g_q: complex
    interaction_time: float
    delta: float = 0.0
    gamma: float = 0.0
    energy_spread: float = 0.0

    def __post_init__(self):
        if self.interaction_time <= 0:
            raise ValueError(f"interaction_time must be > 0, got {self.interaction_time}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if abs(self.delta) >= 1.0:
            raise ValueError(f"|delta| must be < 1 (in units of omega), got {self.delta}")

    @property
    def space(self) -> TensorSpace:
        return self.ladder.space.tensor(self.model.space)

    @property
    def coupling_rate(self) -> complex:
        return complex(self.g_q) / self.interaction_time


@dataclass(frozen=True)
class IntegratorConfig:
    """Fixed-step RK4 controls and numerical-hygiene bounds.

    `phase_per_step` caps dt times the fastest surviving oscillation rate
    (the detunings left after the exact nonlinear-frame rotation);
    `drive_per_step` caps dt times the coupling and loss rates, which govern
    the resonant dynamics and need finer resolution per radian.  The
    step-halving gate validates whatever these caps produce.
    """

    steps: int | None = None
    phase_per_step: float = 0.12
    drive_per_step: float = 0.04
    min_steps: int = 100
    trace_bound: float = 1e-8
    cutoff_bound: float = 1e-6
    wrap_bound: float = 1e-8
    positivity_bound: float = -1e-8
    convergence_check: bool = True
    convergence_bound: float = 1e-6
    check_positivity: bool = True
    record_every: int | None = None

    def __post_init__(self):
        if self.steps is not None and self.steps < self.min_steps:
            raise ValueError(f"steps must be >= {self.min_steps} when fixed, got {self.steps}")
        if self.phase_per_step <= 0 or self.drive_per_step <= 0:
            raise ValueError("step caps must be positive")


@dataclass(frozen=True)
class Diagnostics:
    steps: int
    dt: float
    trace_error: float
    min_eigenvalue: float | None
    cutoff_occupancy: float
    wrap_occupancy: float
    halving_delta: float | None
    electron_populations: np.ndarray
    level_populations: np.ndarray  # polariton-eigenbasis populations
    photon_populations: np.ndarray


@dataclass(frozen=True)
class EvolveResult:
    state: DensityMatrix
    diagnostics: Diagnostics
    pure_state: StateVector | None = None
    trajectory: tuple | None = None


# ---------------------------------------------------------------------------
# frame preparation


class _Frame:
    """Precomputed rotated-basis data shared by all propagation paths."""

    def __init__(self, cfg: SystemConfig):
        self.cfg = cfg
        self.model = cfg.model
        self.basis: PolaritonBasis = polariton_eigenbasis(cfg.model)
        self.d = cfg.ladder.rungs
        self.m = cfg.model.dim
        self.v = self.basis.u  # bare <- eigen
        self.lam = self.basis.nonlinear_shifts()
        self.nu = self.basis.excitations.astype(int)
        self.a_pol = self.v.conj().T @ cfg.model.a @ self.v
        self.phase_rates = self.lam[:, None] - self.lam[None, :]
        self.couple = 1j * cfg.coupling_rate  # coefficient of (bdag x a)
        # sector <-> labeled joint index maps (joint index = l * m + c)
        k = np.arange(self.d)[:, None]
        c = np.arange(self.m)[None, :]
        self.rung_of = (k - self.nu[None, :]) % self.d  # (D, m): l for sector k, level c
        self.joint_of = self.rung_of * self.m + c  # (D, m)

    def a_at(self, t: float) -> np.ndarray:
        return self.a_pol * np.exp(1j * t * self.phase_rates)

    def drive_at(self, t: float) -> np.ndarray:
        """Coefficient matrix of (bdag x .) in the rotated frame at time t."""
        return (self.couple * np.exp(1j * self.cfg.delta * t)) * self.a_at(t)

    def rotate_in_vector(self, psi: np.ndarray) -> np.ndarray:
        """Bare labeled amplitudes -> eigenbasis labeled amplitudes, (D, m)."""
        return psi.reshape(self.d, self.m) @ self.v.conj()

    def rotate_out_vector(self, psi: np.ndarray, t: float) -> np.ndarray:
        """Undo the frame rotation at time t and return bare labeled amplitudes."""
        w = np.exp(-1j * self.lam * t)
        return ((psi * w[None, :]) @ self.v.T).reshape(-1)

    def rotate_in_matrix(self, rho: np.ndarray) -> np.ndarray:
        r4 = rho.reshape(self.d, self.m, self.d, self.m)
        r4 = np.einsum("ac,lckf,fe->lake", self.v.conj().T, r4, self.v, optimize=True)
        return r4.reshape(self.d * self.m, self.d * self.m)

    def rotate_out_matrix(self, rho: np.ndarray, t: float) -> np.ndarray:
        w = np.exp(-1j * self.lam * t)
        wfull = np.tile(w, self.d)
        rho = rho * np.outer(wfull, wfull.conj())
        r4 = rho.reshape(self.d, self.m, self.d, self.m)
        r4 = np.einsum("ac,lckf,fe->lake", self.v, r4, self.v.conj().T, optimize=True)
        return r4.reshape(self.d * self.m, self.d * self.m)


def _step_rates(frame: _Frame, gamma: float) -> tuple[float, float]:
    """(fastest oscillation rate, drive/loss rate) in the rotated frame."""
    support = np.abs(frame.a_pol) > 1e-14
    phase_rate = 0.0
    if support.any():
        phase_rate = max(
            float(np.max(np.abs(frame.cfg.delta + frame.phase_rates[support]))),
            float(np.max(np.abs(frame.phase_rates[support]))),
        )
    drive_rate = 2.0 * abs(frame.couple) * float(np.linalg.norm(frame.a_pol, 2))
    if gamma > 0:
        drive_rate = max(drive_rate, gamma * float(frame.nu.max()))
    return phase_rate, drive_rate


def auto_steps(cfg: SystemConfig, icfg: IntegratorConfig = IntegratorConfig()) -> int:
    """Fixed step count: resolve every surviving phase and drive rate."""
    if icfg.steps is not None:
        return icfg.steps
    phase_rate, drive_rate = _step_rates(_Frame(cfg), cfg.gamma)
    per_time = max(phase_rate / icfg.phase_per_step, drive_rate / icfg.drive_per_step)
    if per_time <= 0:
        return icfg.min_steps
    return max(icfg.min_steps, int(math.ceil(cfg.interaction_time * per_time)))


# ---------------------------------------------------------------------------
# RK4 kernels (arrays in the rotated frame)


def _run_pure(frame: _Frame, psi0: np.ndarray, steps: int, record: list | None, every: int | None):
    dt = frame.cfg.interaction_time / steps
    psi = psi0.copy()

    def rhs(psi_in: np.ndarray, drive: np.ndarray) -> np.ndarray:
        up = np.roll(psi_in, 1, axis=0) @ drive.T
        down = np.roll(psi_in, -1, axis=0) @ drive.conj()
        return -1j * (up + down)

    for i in range(steps):
        t = i * dt
        m0 = frame.drive_at(t)
        m1 = frame.drive_at(t + 0.5 * dt)
        m2 = frame.drive_at(t + dt)
        k1 = rhs(psi, m0)
        k2 = rhs(psi + 0.5 * dt * k1, m1)
        k3 = rhs(psi + 0.5 * dt * k2, m1)
        k4 = rhs(psi + dt * k3, m2)
        psi = psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if record is not None and (i + 1) % every == 0:
            record.append(((i + 1) * dt, psi.copy()))
    return psi


def _block_rhs(frame: _Frame, rb: np.ndarray, drive: np.ndarray, a_t: np.ndarray, gamma: float):
    h = drive + drive.conj().T
    out = -1j * (np.matmul(h, rb) - np.matmul(rb, h))
    if gamma > 0:
        gain = np.matmul(np.matmul(a_t, np.roll(rb, -1, axis=0)), a_t.conj().T)
        n_t = a_t.conj().T @ a_t
        anti = np.matmul(n_t, rb) + np.matmul(rb, n_t)
        out += gamma * (gain - 0.5 * anti)
    return out


def _run_block(frame: _Frame, rb0: np.ndarray, steps: int, record: list | None, every: int | None):
    dt = frame.cfg.interaction_time / steps
    gamma = frame.cfg.gamma
    rb = rb0.copy()
    for i in range(steps):
        t = i * dt
        a0, a1, a2 = frame.a_at(t), frame.a_at(t + 0.5 * dt), frame.a_at(t + dt)
        p0 = frame.couple * np.exp(1j * frame.cfg.delta * t)
        p1 = frame.couple * np.exp(1j * frame.cfg.delta * (t + 0.5 * dt))
        p2 = frame.couple * np.exp(1j * frame.cfg.delta * (t + dt))
        k1 = _block_rhs(frame, rb, p0 * a0, a0, gamma)
        k2 = _block_rhs(frame, rb + 0.5 * dt * k1, p1 * a1, a1, gamma)
        k3 = _block_rhs(frame, rb + 0.5 * dt * k2, p1 * a1, a1, gamma)
        k4 = _block_rhs(frame, rb + dt * k3, p2 * a2, a2, gamma)
        rb = rb + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        rb = 0.5 * (rb + rb.conj().transpose(0, 2, 1))
        if record is not None and (i + 1) % every == 0:
            record.append((((i + 1) * dt), rb.copy()))
    return rb


def _full_rhs(frame: _Frame, r4: np.ndarray, drive: np.ndarray, a_t: np.ndarray, gamma: float):
    d, m = frame.d, frame.m
    dim = d * m
    h = drive + drive.conj().T
    left = np.matmul(h, r4.reshape(d, m, dim)).reshape(r4.shape)
    right = np.matmul(r4.reshape(dim, d, m), h).reshape(r4.shape)
    out = -1j * (left - right)
    if gamma > 0:
        rolled = np.roll(np.roll(r4, -1, axis=0), -1, axis=2)
        g1 = np.matmul(a_t, rolled.reshape(d, m, dim)).reshape(r4.shape)
        gain = np.matmul(g1.reshape(dim, d, m), a_t.conj().T).reshape(r4.shape)
        n_t = a_t.conj().T @ a_t
        anti = np.matmul(n_t, r4.reshape(d, m, dim)).reshape(r4.shape)
        anti = anti + np.matmul(r4.reshape(dim, d, m), n_t).reshape(r4.shape)
        out += gamma * (gain - 0.5 * anti)
    return out


def _run_full(frame: _Frame, r40: np.ndarray, steps: int, record: list | None, every: int | None):
    dt = frame.cfg.interaction_time / steps
    gamma = frame.cfg.gamma
    r4 = r40.copy()
    for i in range(steps):
        t = i * dt
        a0, a1, a2 = frame.a_at(t), frame.a_at(t + 0.5 * dt), frame.a_at(t + dt)
        p0 = frame.couple * np.exp(1j * frame.cfg.delta * t)
        p1 = frame.couple * np.exp(1j * frame.cfg.delta * (t + 0.5 * dt))
        p2 = frame.couple * np.exp(1j * frame.cfg.delta * (t + dt))
        k1 = _full_rhs(frame, r4, p0 * a0, a0, gamma)
        k2 = _full_rhs(frame, r4 + 0.5 * dt * k1, p1 * a1, a1, gamma)
        k3 = _full_rhs(frame, r4 + 0.5 * dt * k2, p1 * a1, a1, gamma)
        k4 = _full_rhs(frame, r4 + dt * k3, p2 * a2, a2, gamma)
        r4 = r4 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        r4 = 0.5 * (r4 + r4.conj().transpose(2, 3, 0, 1))
        if record is not None and (i + 1) % every == 0:
            record.append((((i + 1) * dt), r4.copy()))
    return r4


# ---------------------------------------------------------------------------
# representation plumbing


def _blocks_from_labeled(frame: _Frame, rho_pol: np.ndarray) -> np.ndarray | None:
    """Gather sector blocks; None if the state has inter-sector coherence."""
    j = frame.joint_of
    rb = rho_pol[j[:, :, None], j[:, None, :]]
    total = float(np.sum(np.abs(rho_pol) ** 2))
    captured = float(np.sum(np.abs(rb) ** 2))
    if total > 0 and abs(total - captured) > 1e-13 * total:
        return None
    return rb


def _labeled_from_blocks(frame: _Frame, rb: np.ndarray) -> np.ndarray:
    dim = frame.d * frame.m
    rho = np.zeros((dim, dim), dtype=complex)
    j = frame.joint_of
    rho[j[:, :, None], j[:, None, :]] = rb
    return rho


def _full_from_labeled(frame: _Frame, rho_pol: np.ndarray) -> np.ndarray:
    j = frame.joint_of.reshape(-1)
    r = rho_pol[j[:, None], j[None, :]]
    return r.reshape(frame.d, frame.m, frame.d, frame.m)


def _labeled_from_full(frame: _Frame, r4: np.ndarray) -> np.ndarray:
    dim = frame.d * frame.m
    j = frame.joint_of.reshape(-1)
    rho = np.zeros((dim, dim), dtype=complex)
    rho[j[:, None], j[None, :]] = r4.reshape(dim, dim)
    return rho


class _Populations:
    """Reported probabilities extracted from a rotated-frame representation."""

    def __init__(self, frame: _Frame, electron: np.ndarray, level: np.ndarray, cav_pol: np.ndarray):
        self.electron = electron
        self.level = level
        cav_bare = frame.v @ cav_pol @ frame.v.conj().T
        ph = np.real(np.diag(cav_bare))
        if frame.model.kind == "jc":
            ph = ph.reshape(-1, 2).sum(axis=1)
        self.photon = ph


def _populations_from_blocks(frame: _Frame, rb: np.ndarray) -> _Populations:
    diag = np.real(np.einsum("kcc->kc", rb))
    electron = np.zeros(frame.d)
    np.add.at(electron, frame.rung_of, diag)
    level = diag.sum(axis=0)
    mask = (frame.nu[:, None] == frame.nu[None, :])
    cav_pol = rb.sum(axis=0) * mask
    return _Populations(frame, electron, level, cav_pol)


def _populations_from_full(frame: _Frame, r4: np.ndarray) -> _Populations:
    diag = np.real(np.einsum("kckc->kc", r4))
    electron = np.zeros(frame.d)
    np.add.at(electron, frame.rung_of, diag)
    level = diag.sum(axis=0)
    cav_pol = np.einsum("kcke->ce", r4)
    return _Populations(frame, electron, level, cav_pol)


def _populations_from_pure(frame: _Frame, psi: np.ndarray) -> _Populations:
    prob = np.abs(psi) ** 2  # psi is labeled (l, c) here
    electron = prob.sum(axis=1)
    level = prob.sum(axis=0)
    cav_pol = psi.T @ psi.conj()
    return _Populations(frame, electron, level, cav_pol)


# ---------------------------------------------------------------------------
# public propagation entry point


def _propagate_once(frame: _Frame, kind: str, y0, steps: int, every: int | None):
    record: list | None = [] if every else None
    if kind == "pure":
        y = _run_pure(frame, y0, steps, record, every)
    elif kind == "block":
        y = _run_block(frame, y0, steps, record, every)
    else:
        y = _run_full(frame, y0, steps, record, every)
    return y, record


def evolve_lindblad(
    state: DensityMatrix | StateVector,
    cfg: SystemConfig,
    icfg: IntegratorConfig = IntegratorConfig(),
) -> EvolveResult:
    """Propagate the joint state over the interaction window [0, T].

    Returns the final state in the plain interaction picture (static nonlinear
    Hamiltonian explicit), together with numerical diagnostics.  Raises a
    NumericsError subclass when trace drift, ladder-cutoff population,
    wrap-around population, or step-halving convergence violate their bounds.
    """
    if state.space != cfg.space:
        raise ValueError(f"state space {state.space.labels} does not match config {cfg.space.labels}")
    frame = _Frame(cfg)
    t_final = cfg.interaction_time

    pure_input = isinstance(state, StateVector)
    if pure_input and cfg.gamma == 0.0:
        kind = "pure"
        y0 = frame.rotate_in_vector(state.amplitudes)
    else:
        rho = state.to_density() if pure_input else state
        rho_pol = frame.rotate_in_matrix(rho.matrix)
        rb = _blocks_from_labeled(frame, rho_pol)
        if rb is not None:
            kind, y0 = "block", rb
        else:
            kind, y0 = "full", _full_from_labeled(frame, rho_pol)

    steps = auto_steps(cfg, icfg)
    halving_delta: float | None = None
    if icfg.convergence_check:
        base, _ = _propagate_once(frame, kind, y0, steps, None)
        fine, record = _propagate_once(frame, kind, y0, 2 * steps, icfg.record_every)
        pops_base = _extract_populations(frame, kind, base)
        pops_fine = _extract_populations(frame, kind, fine)
        halving_delta = max(
            float(np.max(np.abs(pops_base.electron - pops_fine.electron))),
            float(np.max(np.abs(pops_base.level - pops_fine.level))),
        )
        steps_used, y_final = 2 * steps, fine
    else:
        y_final, record = _propagate_once(frame, kind, y0, steps, icfg.record_every)
        steps_used = steps

    pops = _extract_populations(frame, kind, y_final)
    trace_error = abs(float(pops.electron.sum()) - 1.0)
    cutoff_occ = float(pops.photon[-2:].sum())
    wrap_occ = float(pops.electron[cfg.ladder.wrap_rungs()].sum())

    # back to the plain interaction picture, bare cavity basis
    pure_out: StateVector | None = None
    if kind == "pure":
        amp = frame.rotate_out_vector(y_final, t_final)
        nrm = np.linalg.norm(amp)
        pure_out = StateVector(cfg.space, amp / nrm)
        rho_out = np.outer(amp, amp.conj())
        rho_out = 0.5 * (rho_out + rho_out.conj().T)
        min_eig = 0.0 if icfg.check_positivity else None
        trace_error = abs(float(nrm**2) - 1.0)
    else:
        labeled = _labeled_from_blocks(frame, y_final) if kind == "block" else _labeled_from_full(frame, y_final)
        rho_out = frame.rotate_out_matrix(labeled, t_final)
        rho_out = 0.5 * (rho_out + rho_out.conj().T)
        min_eig = None
        if icfg.check_positivity:
            if kind == "block":
                min_eig = float(np.min(np.linalg.eigvalsh(y_final)))
            else:
                min_eig = float(np.min(np.linalg.eigvalsh(rho_out)))

    diag = Diagnostics(
        steps=steps_used,
        dt=t_final / steps_used,
        trace_error=trace_error,
        min_eigenvalue=min_eig,
        cutoff_occupancy=cutoff_occ,
        wrap_occupancy=wrap_occ,
        halving_delta=halving_delta,
        electron_populations=pops.electron,
        level_populations=pops.level,
        photon_populations=pops.photon,
    )
    _enforce_bounds(diag, icfg)

    trajectory = None
    if record:
        trajectory = tuple((t, _snapshot_state(frame, kind, y, t)) for t, y in record)
    result_state = DensityMatrix(cfg.space, rho_out, trace_tol=max(10 * icfg.trace_bound, 1e-7))
    return EvolveResult(state=result_state, diagnostics=diag, pure_state=pure_out, trajectory=trajectory)


def _extract_populations(frame: _Frame, kind: str, y) -> _Populations:
    if kind == "pure":
        return _populations_from_pure(frame, y)
    if kind == "block":
        return _populations_from_blocks(frame, y)
    return _populations_from_full(frame, y)


def _snapshot_state(frame: _Frame, kind: str, y, t: float):
    if kind == "pure":
        amp = frame.rotate_out_vector(y, t)
        return StateVector(frame.cfg.space, amp / np.linalg.norm(amp))
    labeled = _labeled_from_blocks(frame, y) if kind == "block" else _labeled_from_full(frame, y)
    rho = frame.rotate_out_matrix(labeled, t)
    rho = 0.5 * (rho + rho.conj().T)
    return DensityMatrix(frame.cfg.space, rho, trace_tol=1e-6)


def _enforce_bounds(diag: Diagnostics, icfg: IntegratorConfig):
    if diag.trace_error > icfg.trace_bound:
        raise TraceDriftError(f"trace drift {diag.trace_error:.3e} exceeds bound {icfg.trace_bound:.1e}")
    if diag.cutoff_occupancy > icfg.cutoff_bound:
        raise CutoffError(
            f"top-two photon levels hold {diag.cutoff_occupancy:.3e} > {icfg.cutoff_bound:.1e}; raise n_cut"
        )
    if diag.wrap_occupancy > icfg.wrap_bound:
        raise WrapAroundError(
            f"wrap-around rungs hold {diag.wrap_occupancy:.3e} > {icfg.wrap_bound:.1e}; widen the ladder"
        )
    if diag.min_eigenvalue is not None and diag.min_eigenvalue < icfg.positivity_bound:
        raise NumericsError(
            f"minimum eigenvalue {diag.min_eigenvalue:.3e} below bound {icfg.positivity_bound:.1e}"
        )
    if diag.halving_delta is not None and diag.halving_delta > icfg.convergence_bound:
        raise ConvergenceError(
            f"step halving moved a reported probability by {diag.halving_delta:.3e} "
            f"> {icfg.convergence_bound:.1e}"
        )


# ---------------------------------------------------------------------------
# Hamiltonian and closed-form scattering matrices (labeled joint space)


def interaction_hamiltonian(t: float, cfg: SystemConfig) -> Operator:
    """Interaction-picture Hamiltonian at time t on the labeled joint space.

    H(t) = H_nl + i (g_q/T) e^{i delta t} (bdag x a) - i (g_q*/T) e^{-i delta t} (b x adag).
    """
    b = build_ladder(cfg.ladder).matrix
    a = cfg.model.a
    coeff = 1j * cfg.coupling_rate * np.exp(1j * cfg.delta * t)
    drive = coeff * np.kron(b.conj().T, a)
    h = np.kron(np.eye(cfg.ladder.rungs), cfg.model.h_nl) + drive + drive.conj().T
    return Operator(cfg.space, h)


def scattering_linear(g_q: complex, model: CavityModel, ladder: LadderConfig) -> Operator:
    """Closed-form linear-cavity scattering matrix exp(g_q bdag a - g_q* b adag)."""
    b = build_ladder(ladder).matrix
    gen = g_q * np.kron(b.conj().T, model.a) - np.conj(g_q) * np.kron(b, model.a_dag)
    space = ladder.space.tensor(model.space)
    return Operator(space, expm(gen))


def scattering_blockade(
    omega: complex,
    lower: np.ndarray,
    upper: np.ndarray,
    space: TensorSpace,
    electron_label: str = ELECTRON_LABEL,
) -> Operator:
    """Two-level blockade scattering matrix on (electron ladder x cavity).

    Acts as cos|omega| on the pair subspace, transfers population between the
    pair levels with a one-rung electron shift, and is the identity on every
    other cavity level.  `lower`/`upper` are orthonormal cavity-basis vectors;
    the electron factor must come first in `space`.
    """
    if space.factors[0][0] != electron_label:
        raise ValueError(f"first factor of the space must be {electron_label!r}")
    d = space.dims[0]
    m = space.dim // d
    lo = np.asarray(lower, dtype=complex).reshape(-1)
    up = np.asarray(upper, dtype=complex).reshape(-1)
    if lo.shape != (m,) or up.shape != (m,):
        raise ValueError(f"pair vectors must have length {m}")
    for name, vec in (("lower", lo), ("upper", up)):
        if abs(np.linalg.norm(vec) - 1.0) > 1e-10:
            raise ValueError(f"{name} pair state is not normalized")
    if abs(np.vdot(lo, up)) > 1e-10:
        raise ValueError("pair states are not orthogonal")
    mag = abs(omega)
    arg = math.atan2(complex(omega).imag, complex(omega).real) if mag > 0 else 0.0
    b = np.zeros((d, d), dtype=complex)
    cols = np.arange(d)
    b[(cols - 1) % d, cols] = 1.0
    proj = np.outer(lo, lo.conj()) + np.outer(up, up.conj())
    raise_pair = np.outer(up, lo.conj())  # |upper><lower|
    mat = np.eye(space.dim, dtype=complex)
    mat += (math.cos(mag) - 1.0) * np.kron(np.eye(d), proj)
    mat += -1j * math.sin(mag) * (
        np.exp(1j * arg) * np.kron(b, raise_pair)
        + np.exp(-1j * arg) * np.kron(b.conj().T, raise_pair.conj().T)
    )
    return Operator(space, mat)


def frame_align(
    state: DensityMatrix | StateVector,
    cfg: SystemConfig,
    time: float | None = None,
):
    """Rotate a joint state by exp(+i H_nl t), aligning the propagation picture
    with the frame in which the closed-form scattering matrices act."""
    t = cfg.interaction_time if time is None else time
    basis = polariton_eigenbasis(cfg.model)
    w = basis.u @ np.diag(np.exp(1j * basis.nonlinear_shifts() * t)) @ basis.u.conj().T
    full = np.kron(np.eye(cfg.ladder.rungs), w)
    if isinstance(state, StateVector):
        return StateVector(state.space, full @ state.amplitudes)
    rotated = full @ state.matrix @ full.conj().T
    rotated = 0.5 * (rotated + rotated.conj().T)
    return DensityMatrix(state.space, rotated, trace_tol=state.trace_tol)


def initial_state(cfg: SystemConfig, cavity_level: str | None = None) -> StateVector:
    """Product state |center rung> x |cavity level> (ground level by default)."""
    basis = polariton_eigenbasis(cfg.model)
    label = cavity_level if cavity_level is not None else basis.labels[0]
    cav = basis.state(label)
    amp = np.zeros(cfg.space.dim, dtype=complex)
    l0 = cfg.ladder.center
    m = cfg.model.dim
    amp[l0 * m : (l0 + 1) * m] = cav
    return StateVector(cfg.space, amp)


def blockade_angle(model: CavityModel, lower: str, upper: str, g_q: complex) -> complex:
    """Effective Rabi angle of a pair: g_q times the pair's raising element."""
    from .cavity import pair_states

    _, _, mu = pair_states(model, lower, upper)
    return mu * complex(g_q)


def pair_detuning(model: CavityModel, lower: str, upper: str) -> float:
    """Phase mismatch q0*v - omega that tunes the electron to the pair transition."""
    basis = polariton_eigenbasis(model)
    f_lo = basis.frequencies[basis.index(lower)]
    f_up = basis.frequencies[basis.index(upper)]
    return float(f_up - f_lo - model.omega)


# ---------------------------------------------------------------------------
# feasibility inequalities


@dataclass(frozen=True)
class FeasibilityReport:
    pm_bandwidth: float  # phase-matching bandwidth ratio, 1/(omega T)
    kappa: float
    gamma: float
    energy_spread: float
    margin: float
    loss_ok: bool
    spread_ok: bool
    blockade_ok: bool

    @property
    def passed(self) -> bool:
        return self.loss_ok and self.spread_ok and self.blockade_ok

    def lines(self) -> list[str]:
        def verdict(ok: bool) -> str:
            return "pass" if ok else "FAIL"

        return [
            f"gamma/omega = {self.gamma:.3e} <= pm_bandwidth/margin = {self.pm_bandwidth / self.margin:.3e}: "
            + verdict(self.loss_ok),
            f"dE/E = {self.energy_spread:.3e} <= pm_bandwidth/margin = {self.pm_bandwidth / self.margin:.3e}: "
            + verdict(self.spread_ok),
            f"pm_bandwidth = {self.pm_bandwidth:.3e} <= kappa/margin = {self.kappa / self.margin:.3e}: "
            + verdict(self.blockade_ok),
            f"overall: {verdict(self.passed)}",
        ]


def check_feasibility(
    pm_bandwidth: float,
    kappa: float,
    gamma: float,
    energy_spread: float,
    margin: float = 10.0,
) -> FeasibilityReport:
    """Separation-of-scales inequalities for a clean blockade, with a safety margin."""
    if margin < 1:
        raise ValueError(f"margin must be >= 1, got {margin}")
    return FeasibilityReport(
        pm_bandwidth=pm_bandwidth,
        kappa=kappa,
        gamma=gamma,
        energy_spread=energy_spread,
        margin=margin,
        loss_ok=gamma <= pm_bandwidth / margin,
        spread_ok=energy_spread <= pm_bandwidth / margin,
        blockade_ok=pm_bandwidth <= kappa / margin,
    )


def feasibility_check(cfg: SystemConfig, margin: float = 10.0) -> FeasibilityReport:
    return check_feasibility(
        pm_bandwidth=1.0 / cfg.interaction_time,
        kappa=cfg.model.kappa,
        gamma=cfg.gamma,
        energy_spread=cfg.energy_spread,
        margin=margin,
    )
