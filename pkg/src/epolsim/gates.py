"""Electron-mediated gate set on (electron ladder x path register x polariton qubits).

Gates are composed from the two-level blockade scattering matrix in the
idealized closed-form regime.  Polariton qubits are two-level factors; the
electron ancilla carries a cyclic energy ladder and, where needed, a path
register (far / near-cavity trajectory).  All identities hold up to a global
phase, which is solved for explicitly rather than assumed away.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    IntegratorConfig,
    SystemConfig,
    blockade_angle,
    evolve_lindblad,
    frame_align,
    initial_state,
    scattering_blockade,
)
from .cavity import pair_states
from .electron import ELECTRON_LABEL, LadderConfig, comb_state
from .observables import state_fidelity
from .tensor import Operator, TensorSpace, embed, embed_group

__all__ = [
    "PATH_LABEL",
    "CircuitReport",
    "RotationReport",
    "IdentityCheck",
    "gate_space",
    "gate_pass",
    "cep_rz",
    "cep_rz_target",
    "r_transverse",
    "electron_hadamard",
    "spectrometer",
    "cpe_path",
    "two_polariton_cz",
    "equivalence_up_to_phase",
    "gate_identity_suite",
    "noisy_gate_fidelity",
    "CZ_TARGET",
]

PATH_LABEL = "path"

HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
CZ_TARGET = np.diag([1.0, 1.0, 1.0, -1.0]).astype(complex)

QUBIT_ZERO = np.array([1.0, 0.0], dtype=complex)
QUBIT_ONE = np.array([0.0, 1.0], dtype=complex)


def gate_space(rungs: int = 7, n_qubits: int = 1, with_path: bool = True) -> TensorSpace:
    """Joint space (electron, [path], pol1[, pol2...]) for gate composition."""
    factors: list[tuple[str, int]] = [(ELECTRON_LABEL, rungs)]
    if with_path:
        factors.append((PATH_LABEL, 2))
    if n_qubits == 1:
        factors.append(("pol", 2))
    else:
        factors.extend((f"pol{i + 1}", 2) for i in range(n_qubits))
    return TensorSpace(tuple(factors))


def equivalence_up_to_phase(u, v, tol: float = 1e-10) -> tuple[bool, float, float]:
    """(equal, phase, deviation): is u = e^{i phase} v within tol (max-entry norm)?

    The phase is arg trace(v^dag u); orthogonal operators (vanishing trace)
    report False with the raw deviation.
    """
    um = u.matrix if isinstance(u, Operator) else np.asarray(u, dtype=complex)
    vm = v.matrix if isinstance(v, Operator) else np.asarray(v, dtype=complex)
    if um.shape != vm.shape:
        raise ValueError(f"shape mismatch {um.shape} vs {vm.shape}")
    tr = complex(np.trace(vm.conj().T @ um))
    if abs(tr) < 1e-14:
        return False, 0.0, float(np.max(np.abs(um - vm)))
    theta = cmath.phase(tr)
    deviation = float(np.max(np.abs(um - np.exp(1j * theta) * vm)))
    return deviation <= tol, theta, deviation


def gate_pass(
    omega: complex,
    space: TensorSpace,
    qubit_label: str = "pol",
    conditioned_on_path: bool = False,
) -> Operator:
    """One electron-cavity interaction on the selected polariton qubit.

    With `conditioned_on_path`, the far path (|0> of the path register) is
    untouched and only the near-cavity path interacts.
    """
    d = space.dim_of(ELECTRON_LABEL)
    small = TensorSpace(((ELECTRON_LABEL, d), (qubit_label, 2)))
    s_small = scattering_blockade(omega, QUBIT_ZERO, QUBIT_ONE, small)
    s_full = embed_group(s_small.matrix, [ELECTRON_LABEL, qubit_label], space)
    if not conditioned_on_path:
        return s_full
    p0 = embed(np.diag([1.0, 0.0]).astype(complex), PATH_LABEL, space)
    p1 = embed(np.diag([0.0, 1.0]).astype(complex), PATH_LABEL, space)
    return p0 + p1 @ s_full


def cep_rz(phi: float, space: TensorSpace, qubit_label: str = "pol", conditioned: bool = True) -> Operator:
    """Electron-controlled z-rotation: two passes at |omega| = pi/2 with relative phase phi.

    On the interacting branch the polariton factor receives
    -(e^{-i phi}|0><0| + e^{i phi}|1><1|) and the electron energy marginal is
    restored exactly (the two one-rung shifts cancel).  With `conditioned`
    the space must carry a path register and the far path is left untouched.
    """
    first = gate_pass(0.5 * math.pi, space, qubit_label, conditioned_on_path=conditioned)
    second = gate_pass(0.5 * math.pi * cmath.exp(1j * phi), space, qubit_label, conditioned_on_path=conditioned)
    return second @ first


def cep_rz_target(phi: float) -> np.ndarray:
    """Polariton factor produced on the interacting branch of cep_rz."""
    return -np.diag([cmath.exp(-1j * phi), cmath.exp(1j * phi)]).astype(complex)


@dataclass(frozen=True)
class RotationReport:
    entanglement_entropy: float
    unitarity_defect: float


def r_transverse(omega_mag: float, phi: float, rungs: int = 7) -> tuple[np.ndarray, RotationReport]:
    """Transverse polariton rotation driven by a comb-state electron.

    Returns the induced 2x2 unitary cos|omega| I - i sin|omega| (cos(phi) X +
    sin(phi) Y) together with the residual electron-polariton entanglement.

    Only the `rungs` discrete comb phases 2 pi m / rungs are exact eigenstates
    of the cyclic shift, so the electron is prepared in the nearest exact comb
    and the leftover axis angle rides on the interaction phase; the output is
    then an exact product for every axis angle.
    """
    cfg = LadderConfig(rungs=rungs, center=rungs // 2)
    space = TensorSpace(((ELECTRON_LABEL, rungs), ("pol", 2)))
    comb_phase = 2.0 * math.pi * round(phi * rungs / (2.0 * math.pi)) / rungs
    pass_phase = phi - comb_phase
    s = scattering_blockade(omega_mag * cmath.exp(1j * pass_phase), QUBIT_ZERO, QUBIT_ONE, space)
    comb = comb_state(comb_phase, cfg).amplitudes
    induced = np.zeros((2, 2), dtype=complex)
    max_entropy = 0.0
    probes = [QUBIT_ZERO, QUBIT_ONE, (QUBIT_ZERO + QUBIT_ONE) / math.sqrt(2)]
    for j, probe in enumerate(probes):
        out = (s.matrix @ np.kron(comb, probe)).reshape(rungs, 2)
        sv = np.linalg.svd(out, compute_uv=False)
        p = sv**2
        p = p[p > 1e-15]
        max_entropy = max(max_entropy, float(-(p * np.log(p)).sum()))
        if j < 2:
            induced[:, j] = comb.conj() @ out
    defect = float(np.max(np.abs(induced @ induced.conj().T - np.eye(2))))
    return induced, RotationReport(entanglement_entropy=max_entropy, unitarity_defect=defect)


def electron_hadamard(space: TensorSpace) -> Operator:
    """Hadamard on the electron path register; identity elsewhere."""
    return embed(HADAMARD, PATH_LABEL, space)


def spectrometer(space: TensorSpace, center: int, loss_to_path: int = 0) -> Operator:
    """Energy-dispersive path router: an exact permutation on (rung x path).

    Flips the path register on exactly one energy sector so that, for an
    electron entering on the near path, the one-quantum-loss sector
    (rung center-1) exits on path `loss_to_path` and the gain sector on the
    other path.
    """
    if loss_to_path not in (0, 1):
        raise ValueError("loss_to_path must be 0 or 1")
    d = space.dim_of(ELECTRON_LABEL)
    flip_rung = (center - 1) % d if loss_to_path == 0 else (center + 1) % d
    mat = np.zeros((2 * d, 2 * d), dtype=complex)
    for l in range(d):
        block = PAULI_X if l == flip_rung else np.eye(2)
        mat[2 * l : 2 * l + 2, 2 * l : 2 * l + 2] = block
    return embed_group(mat, [ELECTRON_LABEL, PATH_LABEL], space)


def cpe_path(
    space: TensorSpace,
    center: int,
    qubit_label: str = "pol",
    phase_first: float = 0.0,
    phase_second: float = 0.0,
    loss_to_path: int = 0,
) -> Operator:
    """Polariton-controlled electron-path gate: pass, spectrometer, pass.

    The electron must enter on the near path at rung `center`; it leaves at
    the same rung with its path entangled to the polariton computational
    basis.  The two pass phases and the spectrometer routing are exposed as
    calibration parameters.
    """
    half_pi = 0.5 * math.pi
    first = gate_pass(half_pi * cmath.exp(1j * phase_first), space, qubit_label, conditioned_on_path=True)
    router = spectrometer(space, center, loss_to_path)
    second = gate_pass(half_pi * cmath.exp(1j * phase_second), space, qubit_label, conditioned_on_path=False)
    return second @ router @ first


@dataclass(frozen=True)
class CircuitReport:
    """Verification record for a composed circuit against its target unitary."""

    induced: np.ndarray
    target: np.ndarray
    phase: float
    deviation: float
    ancilla_entropy: float
    ancilla_fidelity_reference: float
    ancilla_state: np.ndarray
    calibration: dict
    passed: bool
    notes: tuple[str, ...] = field(default_factory=tuple)

    def to_text(self) -> str:
        lines = [
            f"passed: {self.passed}",
            f"global phase: {self.phase:.12f} rad",
            f"max deviation from e^(i phase) * target: {self.deviation:.3e}",
            f"ancilla entanglement entropy (max over probes): {self.ancilla_entropy:.3e}",
            f"ancilla fidelity to |path 0, center rung>: {self.ancilla_fidelity_reference:.12f}",
            f"calibration: {self.calibration}",
        ]
        lines.extend(f"note: {n}" for n in self.notes)
        return "\n".join(lines)


def _ancilla_tail(space: TensorSpace, center: int, path_index: int) -> np.ndarray:
    d = space.dim_of(ELECTRON_LABEL)
    anc = np.zeros(d, dtype=complex)
    anc[center] = 1.0
    path = np.zeros(2, dtype=complex)
    path[path_index] = 1.0
    return np.kron(anc, path)


def _evaluate_cz_candidate(u: np.ndarray, space: TensorSpace, center: int, probes: list[np.ndarray]):
    """Extract the induced two-polariton map and ancilla diagnostics."""
    anc_in = _ancilla_tail(space, center, path_index=1)
    anc_dim = anc_in.size
    # reference ancilla output from the uniform-superposition probe
    uniform = 0.5 * np.ones(4, dtype=complex)
    out = (u @ np.kron(anc_in, uniform)).reshape(anc_dim, 4)
    left, sv, _ = np.linalg.svd(out)
    anc_out = left[:, 0]
    k = int(np.argmax(np.abs(anc_out)))
    anc_out = anc_out * np.exp(-1j * cmath.phase(anc_out[k]))
    max_entropy = 0.0
    for chi in probes:
        o = (u @ np.kron(anc_in, chi)).reshape(anc_dim, 4)
        p = np.linalg.svd(o, compute_uv=False) ** 2
        p = p[p > 1e-15]
        max_entropy = max(max_entropy, float(-(p * np.log(p)).sum()))
    induced = np.zeros((4, 4), dtype=complex)
    for j in range(4):
        chi = np.zeros(4, dtype=complex)
        chi[j] = 1.0
        o = (u @ np.kron(anc_in, chi)).reshape(anc_dim, 4)
        induced[:, j] = anc_out.conj() @ o
    return induced, anc_out, max_entropy


def two_polariton_cz(
    rungs: int = 7,
    center: int | None = None,
    n_random: int = 20,
    seed: int = 7,
    cz_tol: float = 1e-9,
    entropy_tol: float = 1e-10,
    calibration: dict | None = None,
) -> CircuitReport:
    """Compose and verify the two-polariton controlled-Z mediated by the electron.

    Sequence: controlled-path gate on qubit 1, path-conditioned z-gate on
    qubit 2, electron Hadamard, path-conditioned z-gate on qubit 1, electron
    Hadamard.  The relative phase between the controlled-path passes and the
    spectrometer routing are calibrated by a composition search; the chosen
    setting is recorded in the report.
    """
    if center is None:
        center = rungs // 2
    space = gate_space(rungs=rungs, n_qubits=2, with_path=True)
    rng = np.random.default_rng(seed)
    probes = [np.eye(4, dtype=complex)[:, j] for j in range(4)]
    probes.append(0.5 * np.ones(4, dtype=complex))
    for _ in range(n_random):
        v = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        probes.append(v / np.linalg.norm(v))

    if calibration is not None:
        candidates = [(float(calibration["pass_phase_difference"]), int(calibration["loss_to_path"]))]
    else:
        candidates = [(k * math.pi / 4.0, lp) for lp in (0, 1) for k in range(8)]

    h = electron_hadamard(space).matrix
    rz2 = cep_rz(0.5 * math.pi, space, "pol2").matrix
    rz1 = cep_rz(0.5 * math.pi, space, "pol1").matrix

    best = None
    for delta, loss_to in candidates:
        cpe = cpe_path(space, center, "pol1", phase_first=delta, phase_second=0.0, loss_to_path=loss_to).matrix
        u = h @ rz1 @ h @ rz2 @ cpe
        induced, anc_out, entropy = _evaluate_cz_candidate(u, space, center, probes)
        ok, theta, deviation = equivalence_up_to_phase(induced, CZ_TARGET, cz_tol)
        unit_defect = float(np.max(np.abs(induced @ induced.conj().T - np.eye(4))))
        passed = ok and entropy <= entropy_tol and unit_defect <= 1e-10
        record = (passed, deviation, delta, loss_to, induced, anc_out, entropy, theta)
        if passed:
            best = record
            break
        if best is None or deviation < best[1]:
            best = record
    passed, deviation, delta, loss_to, induced, anc_out, entropy, theta = best
    ref = _ancilla_tail(space, center, path_index=0)
    fid_ref = float(abs(np.vdot(ref, anc_out)) ** 2)
    notes = []
    if not passed:
        notes.append("calibration search failed to reach the controlled-Z target")
    return CircuitReport(
        induced=induced,
        target=CZ_TARGET.copy(),
        phase=theta,
        deviation=deviation,
        ancilla_entropy=entropy,
        ancilla_fidelity_reference=fid_ref,
        ancilla_state=anc_out,
        calibration={"pass_phase_difference": delta, "loss_to_path": loss_to},
        passed=passed,
        notes=tuple(notes),
    )


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    passed: bool
    deviation: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  ({self.detail})" if self.detail else ""
        return f"{status}  {self.name}: deviation {self.deviation:.3e}{extra}"


def gate_identity_suite(
    rungs: int = 7,
    seed: int = 11,
    corrupt_cz_phase: float = 0.0,
) -> tuple[list[IdentityCheck], CircuitReport]:
    """Run the full gate-identity verification suite.

    Returns one check per identity plus the controlled-Z circuit report.
    `corrupt_cz_phase` is a negative-control hook: a nonzero value skews the
    controlled-path calibration so the CZ verification must fail.
    """
    from .cavity import build_kerr
    from .dynamics import scattering_linear
    from .electron import LadderConfig

    checks: list[IdentityCheck] = []
    rng = np.random.default_rng(seed)
    center = rungs // 2

    def add(name: str, passed: bool, deviation: float, detail: str = ""):
        checks.append(IdentityCheck(name, bool(passed), float(deviation), detail))

    # closed-form scattering matrices are unitary
    model = build_kerr(0.05, 6)
    ladder = LadderConfig(rungs=9, center=4)
    dev = scattering_linear(0.8 + 0.3j, model, ladder).unitarity_defect()
    add("linear scattering matrix unitary", dev <= 1e-12, dev)
    space1 = gate_space(rungs=rungs, n_qubits=1, with_path=True)
    dev = gate_pass(0.5 * math.pi * cmath.exp(0.4j), space1, "pol", conditioned_on_path=True).unitarity_defect()
    add("blockade pass unitary (path-conditioned)", dev <= 1e-12, dev)

    # z-rotation family: phase gate, group law, S^2 = Z chain
    free = TensorSpace(((ELECTRON_LABEL, rungs), ("pol", 2)))
    _, _, dev = equivalence_up_to_phase(cep_rz_target(0.5 * math.pi), PAULI_Z, 1e-10)
    add("two passes at relative phase pi/2 give Z (up to phase)", dev <= 1e-10, dev)
    _, _, dev = equivalence_up_to_phase(cep_rz_target(0.0), np.eye(2), 1e-10)
    add("zero relative phase gives identity (up to phase)", dev <= 1e-10, dev)
    worst = 0.0
    for _ in range(20):
        p1, p2 = rng.uniform(0, 2 * math.pi, size=2)
        lhs = cep_rz(p1, free, conditioned=False) @ cep_rz(p2, free, conditioned=False)
        rhs = cep_rz(p1 + p2, free, conditioned=False)
        _, _, dev = equivalence_up_to_phase(lhs, rhs, 1e-10)
        worst = max(worst, dev)
    add("z-rotation group law (20 random phase pairs)", worst <= 1e-10, worst)
    lhs = cep_rz(math.pi / 4, free, conditioned=False) @ cep_rz(math.pi / 4, free, conditioned=False)
    _, _, dev = equivalence_up_to_phase(lhs, cep_rz(math.pi / 2, free, conditioned=False), 1e-10)
    add("quarter-phase gate squared equals half-phase gate", dev <= 1e-10, dev)

    # electron energy marginal untouched by the two-pass z-rotation
    amp = rng.standard_normal(2 * rungs) + 1j * rng.standard_normal(2 * rungs)
    amp /= np.linalg.norm(amp)
    before = (np.abs(amp.reshape(rungs, 2)) ** 2).sum(axis=1)
    out = cep_rz(0.7, free, conditioned=False).matrix @ amp
    after = (np.abs(out.reshape(rungs, 2)) ** 2).sum(axis=1)
    dev = float(np.max(np.abs(before - after)))
    add("electron energy marginal restored by z-rotation", dev <= 1e-12, dev)

    # transverse rotations from comb-state electrons
    vx, rep = r_transverse(0.5 * math.pi, 0.0, rungs)
    dev = float(np.max(np.abs(vx - (-1j) * PAULI_X)))
    add("half-turn comb rotation equals -iX", dev <= 1e-10, dev, f"entropy {rep.entanglement_entropy:.1e}")
    vy, rep_y = r_transverse(0.25 * math.pi, 0.5 * math.pi, rungs)
    had = vx @ vy
    dev = float(np.max(np.abs(had - (-1j) * HADAMARD)))
    add("composite comb rotations give -iH", dev <= 1e-10, dev)
    ent = max(rep.entanglement_entropy, rep_y.entanglement_entropy)
    add("comb drive leaves no residual entanglement", ent <= 1e-10, ent)
    vb, _ = r_transverse(0.9, 1.3, rungs)
    vb_inv, _ = r_transverse(0.9, 1.3 + math.pi, rungs)
    dev = float(np.max(np.abs(vb @ vb_inv - np.eye(2))))
    add("antipodal comb phase inverts the rotation", dev <= 1e-12, dev)

    # controlled-path gate: polariton basis routes the electron path
    space2 = gate_space(rungs=rungs, n_qubits=1, with_path=True)
    cpe = cpe_path(space2, center, "pol").matrix
    anc = _ancilla_tail(space2, center, path_index=1)
    worst = 0.0
    for alpha, beta in ((1.0, 0.0), (0.0, 1.0), (1 / math.sqrt(2), 1 / math.sqrt(2))):
        chi = np.array([alpha, beta], dtype=complex)
        out = cpe @ np.kron(anc, chi)
        target = alpha * np.kron(_ancilla_tail(space2, center, 0), QUBIT_ZERO) + beta * np.kron(
            _ancilla_tail(space2, center, 1), QUBIT_ONE
        )
        _, _, dev = equivalence_up_to_phase(out.reshape(-1, 1), target.reshape(-1, 1), 1e-10)
        worst = max(worst, dev)
    add("controlled-path gate matches its target action", worst <= 1e-10, worst)

    h = electron_hadamard(space2)
    dev = float(np.max(np.abs((h @ h).matrix - np.eye(space2.dim))))
    add("electron Hadamard squares to identity", dev <= 1e-14, dev)

    # two-polariton controlled-Z with calibrated pass phases
    calibration = None
    if corrupt_cz_phase:
        calibration = {"pass_phase_difference": math.pi / 4 + corrupt_cz_phase, "loss_to_path": 0}
    report = two_polariton_cz(rungs=rungs, calibration=calibration)
    add(
        "two-polariton controlled-Z (up to global phase)",
        report.passed,
        report.deviation,
        f"ancilla entropy {report.ancilla_entropy:.1e}",
    )

    # universality smoke test: H T H S composed from the primitives
    t_ind = cep_rz_target(math.pi / 8)
    s_ind = cep_rz_target(math.pi / 4)
    composed = had @ t_ind @ had @ s_ind
    t_gate = np.diag([1.0, cmath.exp(1j * math.pi / 4)])
    s_gate = np.diag([1.0, 1j])
    target = HADAMARD @ t_gate @ HADAMARD @ s_gate
    _, _, dev = equivalence_up_to_phase(composed, target, 1e-9)
    add("H T H S composite matches direct construction", dev <= 1e-9, dev)

    # wrap-around rungs stay empty through a full gate sequence
    full = two_qubit_wrap_probe(rungs, center)
    add("ladder wrap-around rungs stay unpopulated", full <= 1e-12, full)

    return checks, report


def two_qubit_wrap_probe(rungs: int, center: int) -> float:
    """Max population on the cyclic wrap rungs across the CZ circuit stages."""
    space = gate_space(rungs=rungs, n_qubits=2, with_path=True)
    cfg = LadderConfig(rungs=rungs, center=center)
    wrap = cfg.wrap_rungs()
    anc = _ancilla_tail(space, center, path_index=1)
    chi = 0.5 * np.ones(4, dtype=complex)
    state = np.kron(anc, chi)
    stages = [
        cpe_path(space, center, "pol1", phase_first=math.pi / 4),
        cep_rz(0.5 * math.pi, space, "pol2"),
        electron_hadamard(space),
        cep_rz(0.5 * math.pi, space, "pol1"),
        electron_hadamard(space),
    ]
    worst = 0.0
    for op in stages:
        state = op.matrix @ state
        pops = (np.abs(state.reshape(rungs, -1)) ** 2).sum(axis=1)
        worst = max(worst, float(pops[wrap].sum()))
    return worst


def noisy_gate_fidelity(
    cfg: SystemConfig,
    lower: str,
    upper: str,
    initial_level: str | None = None,
    icfg: IntegratorConfig = IntegratorConfig(),
) -> float:
    """Fidelity of one physical (Lindblad-propagated) pass against the ideal pass.

    Replaces the closed-form scattering matrix with a full master-equation
    propagation at the configured loss and nonlinearity, aligns frames, and
    scores against the ideal two-level pass from the same initial state.
    """
    psi0 = initial_state(cfg, cavity_level=initial_level if initial_level is not None else lower)
    lo, up, _ = pair_states(cfg.model, lower, upper)
    omega = blockade_angle(cfg.model, lower, upper, cfg.g_q)
    target = scattering_blockade(omega, lo, up, cfg.space) @ psi0
    result = evolve_lindblad(psi0, cfg, icfg)
    aligned = frame_align(result.state, cfg)
    return state_fidelity(aligned, target.normalize())
