"""Scenario runner: JSON configs, named presets, parameter sweeps, CSV/JSON artifacts.

Exit codes: 0 success, 2 configuration error (the message names the offending
field), 3 numerical failure (trace drift or invalid truncation; for sweeps
only when every grid point fails).  Re-running any config produces
byte-identical outputs regardless of worker count.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from multiprocessing import get_context
from pathlib import Path

import numpy as np

from . import __version__
from .cavity import build_jc, build_kerr, pair_states, polariton_eigenbasis
from .dynamics import (
    IntegratorConfig,
    NumericsError,
    SystemConfig,
    blockade_angle,
    check_feasibility,
    evolve_lindblad,
    frame_align,
    initial_state,
    pair_detuning,
    scattering_blockade,
)
from .electron import LadderConfig
from .gates import gate_identity_suite
from .observables import eels_spectrum, polariton_statistics, state_fidelity

SCHEMA_VERSION = 1

SCENARIOS = ("evolve", "sweep_kappa", "sweep_velocity", "sweep_gq", "fidelity_map", "gates", "feasibility")
SWEEP_SCENARIOS = ("sweep_kappa", "sweep_velocity", "sweep_gq", "fidelity_map")

ENV_WORKERS = "EPOLSIM_WORKERS"


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"config field {field!r}: {message}")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# config schema


def _require_mapping(obj, path: str) -> dict:
    if not isinstance(obj, dict):
        raise ConfigError(path, f"expected an object, got {type(obj).__name__}")
    return obj


def _check_keys(obj: dict, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()):
    for key in obj:
        if key not in required and key not in optional:
            raise ConfigError(f"{path}.{key}", "unknown key")
    for key in required:
        if key not in obj:
            raise ConfigError(f"{path}.{key}", "missing required key")


def _number(obj: dict, path: str, key: str, default=None, minimum=None, maximum=None):
    if key not in obj:
        if default is None:
            raise ConfigError(f"{path}.{key}", "missing required number")
        return float(default)
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{path}.{key}", f"expected a number, got {val!r}")
    val = float(val)
    if not math.isfinite(val):
        raise ConfigError(f"{path}.{key}", "must be finite")
    if minimum is not None and val < minimum:
        raise ConfigError(f"{path}.{key}", f"must be >= {minimum}, got {val}")
    if maximum is not None and val > maximum:
        raise ConfigError(f"{path}.{key}", f"must be <= {maximum}, got {val}")
    return val


def _integer(obj: dict, path: str, key: str, default=None, minimum=None):
    if key not in obj and default is not None:
        return int(default)
    val = _number(obj, path, key, default=default, minimum=minimum)
    if val != int(val):
        raise ConfigError(f"{path}.{key}", f"expected an integer, got {val}")
    return int(val)


def _number_list(obj: dict, path: str, key: str, min_len=1):
    if key not in obj:
        raise ConfigError(f"{path}.{key}", "missing required list")
    val = obj[key]
    if not isinstance(val, list) or len(val) < min_len or not all(
        isinstance(x, (int, float)) and not isinstance(x, bool) for x in val
    ):
        raise ConfigError(f"{path}.{key}", f"expected a list of >= {min_len} numbers")
    return [float(x) for x in val]


def _complex_field(obj: dict, path: str, key: str) -> complex:
    if key not in obj:
        raise ConfigError(f"{path}.{key}", "missing required number")
    val = obj[key]
    if isinstance(val, (int, float)) and not isinstance(val, bool):
        return complex(float(val), 0.0)
    if isinstance(val, list) and len(val) == 2 and all(isinstance(x, (int, float)) for x in val):
        return complex(float(val[0]), float(val[1]))
    raise ConfigError(f"{path}.{key}", f"expected a number or [re, im], got {val!r}")


DEFAULT_PAIRS = {"kerr": ("0", "1"), "jc": ("0*", "1+")}


def normalize_config(raw: dict) -> dict:
    """Validate a raw config dict and materialize every default.

    The result is the effective config: echoing it and re-running reproduces
    identical outputs.
    """
    raw = _require_mapping(raw, "<root>")
    if "runs" in raw:
        _check_keys(raw, "<root>", ("schema_version", "runs"))
        version = _integer(raw, "<root>", "schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError("schema_version", f"unsupported version {version}")
        runs = raw["runs"]
        if not isinstance(runs, list) or not runs:
            raise ConfigError("runs", "expected a non-empty list of run configs")
        out_runs = []
        tags = set()
        for i, sub in enumerate(runs):
            sub = _require_mapping(sub, f"runs[{i}]")
            if "tag" not in sub:
                raise ConfigError(f"runs[{i}].tag", "missing required key")
            tag = str(sub["tag"])
            if tag in tags:
                raise ConfigError(f"runs[{i}].tag", f"duplicate tag {tag!r}")
            tags.add(tag)
            body = {k: v for k, v in sub.items() if k != "tag"}
            body.setdefault("schema_version", SCHEMA_VERSION)
            norm = normalize_config(body)
            norm.pop("schema_version")
            out_runs.append({"tag": tag, **norm})
        return {"schema_version": SCHEMA_VERSION, "runs": out_runs}

    _check_keys(
        raw,
        "<root>",
        ("schema_version", "scenario"),
        ("model", "electron", "loss", "pair", "initial_level", "integrator", "sweep", "gates", "feasibility"),
    )
    version = _integer(raw, "<root>", "schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError("schema_version", f"unsupported version {version}")
    scenario = raw["scenario"]
    if scenario not in SCENARIOS:
        raise ConfigError("scenario", f"must be one of {SCENARIOS}, got {scenario!r}")
    cfg: dict = {"schema_version": SCHEMA_VERSION, "scenario": scenario}

    if scenario == "feasibility":
        feas = _require_mapping(raw.get("feasibility", {}), "feasibility")
        _check_keys(feas, "feasibility", (), ("pm_bandwidth", "omega_t", "kappa_ratio", "gamma_ratio", "energy_spread", "margin"))
        if "pm_bandwidth" in feas:
            pm = _number(feas, "feasibility", "pm_bandwidth", minimum=0.0)
        elif "omega_t" in feas:
            pm = 1.0 / _number(feas, "feasibility", "omega_t", minimum=1e-12)
        else:
            raise ConfigError("feasibility.pm_bandwidth", "provide pm_bandwidth or omega_t")
        cfg["feasibility"] = {
            "pm_bandwidth": pm,
            "kappa_ratio": _number(feas, "feasibility", "kappa_ratio", minimum=0.0),
            "gamma_ratio": _number(feas, "feasibility", "gamma_ratio", default=0.0, minimum=0.0),
            "energy_spread": _number(feas, "feasibility", "energy_spread", default=0.0, minimum=0.0),
            "margin": _number(feas, "feasibility", "margin", default=10.0, minimum=1.0),
        }
        return cfg

    if scenario == "gates":
        gates = _require_mapping(raw.get("gates", {}), "gates")
        _check_keys(gates, "gates", (), ("rungs", "seed", "corrupt_cz_phase"))
        cfg["gates"] = {
            "rungs": _integer(gates, "gates", "rungs", default=7, minimum=5),
            "seed": _integer(gates, "gates", "seed", default=11, minimum=0),
            "corrupt_cz_phase": _number(gates, "gates", "corrupt_cz_phase", default=0.0),
        }
        return cfg

    model = _require_mapping(raw.get("model", {}), "model")
    _check_keys(model, "model", ("kind", "kappa_ratio", "n_cut"))
    kind = model["kind"]
    if kind not in ("kerr", "jc"):
        raise ConfigError("model.kind", f"must be 'kerr' or 'jc', got {kind!r}")
    n_cut = _integer(model, "model", "n_cut")
    if n_cut < 2:
        raise ConfigError("model.n_cut", f"must be >= 2, got {n_cut}")
    cfg["model"] = {
        "kind": kind,
        "kappa_ratio": _number(model, "model", "kappa_ratio", minimum=0.0),
        "n_cut": n_cut,
    }

    electron = _require_mapping(raw.get("electron", {}), "electron")
    _check_keys(
        electron,
        "electron",
        ("rungs", "center", "g_q"),
        ("q0_l", "wavelength_nm", "length_um", "velocity_ratio", "delta", "tune_to_pair", "energy_kev", "beta"),
    )
    rungs = _integer(electron, "electron", "rungs", minimum=3)
    center = _integer(electron, "electron", "center", minimum=0)
    if center >= rungs:
        raise ConfigError("electron.center", f"must be < rungs ({rungs}), got {center}")
    g_q = _complex_field(electron, "electron", "g_q")
    if "length_um" in electron:
        if "q0_l" in electron:
            raise ConfigError("electron.q0_l", "give q0_l or (wavelength_nm, length_um), not both")
        wavelength = _number(electron, "electron", "wavelength_nm", minimum=1e-6)
        length = _number(electron, "electron", "length_um", minimum=1e-9)
        q0_l = 2.0 * math.pi * length * 1e3 / wavelength
    else:
        q0_l = _number(electron, "electron", "q0_l", minimum=1e-9)
    tuning_keys = [k for k in ("velocity_ratio", "delta") if k in electron]
    if bool(electron.get("tune_to_pair", False)):
        tuning_keys.append("tune_to_pair")
    if len(tuning_keys) > 1:
        raise ConfigError(f"electron.{tuning_keys[1]}", "give only one of velocity_ratio, delta, tune_to_pair")
    cfg["electron"] = {
        "rungs": rungs,
        "center": center,
        "g_q": [g_q.real, g_q.imag],
        "q0_l": q0_l,
        "tune_to_pair": not tuning_keys or tuning_keys == ["tune_to_pair"],
    }
    if tuning_keys == ["velocity_ratio"]:
        cfg["electron"]["velocity_ratio"] = _number(electron, "electron", "velocity_ratio", minimum=0.1, maximum=1.9)
    elif tuning_keys == ["delta"]:
        cfg["electron"]["delta"] = _number(electron, "electron", "delta", minimum=-0.9, maximum=0.9)
    if "wavelength_nm" in electron:
        cfg["electron"]["wavelength_nm"] = _number(electron, "electron", "wavelength_nm", minimum=1e-6)
    if "energy_kev" in electron and "beta" in electron:
        raise ConfigError("electron.beta", "give energy_kev or beta, not both")
    if "energy_kev" in electron:
        cfg["electron"]["energy_kev"] = _number(electron, "electron", "energy_kev", minimum=0.0)
    if "beta" in electron:
        cfg["electron"]["beta"] = _number(electron, "electron", "beta", minimum=0.0, maximum=0.999999)

    loss = _require_mapping(raw.get("loss", {}), "loss")
    _check_keys(loss, "loss", (), ("gamma_ratio", "energy_spread"))
    cfg["loss"] = {
        "gamma_ratio": _number(loss, "loss", "gamma_ratio", default=0.0, minimum=0.0),
        "energy_spread": _number(loss, "loss", "energy_spread", default=0.0, minimum=0.0),
    }

    pair = raw.get("pair")
    if pair is None:
        lower, upper = DEFAULT_PAIRS[kind]
    else:
        pair = _require_mapping(pair, "pair")
        _check_keys(pair, "pair", ("lower", "upper"))
        lower, upper = str(pair["lower"]), str(pair["upper"])
    cfg["pair"] = {"lower": lower, "upper": upper}
    cfg["initial_level"] = str(raw.get("initial_level", lower))

    integ = _require_mapping(raw.get("integrator", {}), "integrator")
    _check_keys(
        integ,
        "integrator",
        (),
        ("steps", "phase_per_step", "drive_per_step", "convergence_check", "trace_bound", "cutoff_bound", "wrap_bound"),
    )
    steps = integ.get("steps")
    if steps is not None:
        steps = _integer(integ, "integrator", "steps", minimum=100)
    cfg["integrator"] = {
        "steps": steps,
        "phase_per_step": _number(integ, "integrator", "phase_per_step", default=0.12, minimum=1e-4),
        "drive_per_step": _number(integ, "integrator", "drive_per_step", default=0.04, minimum=1e-4),
        "convergence_check": bool(integ.get("convergence_check", True)),
        "trace_bound": _number(integ, "integrator", "trace_bound", default=1e-8, minimum=0.0),
        "cutoff_bound": _number(integ, "integrator", "cutoff_bound", default=1e-6, minimum=0.0),
        "wrap_bound": _number(integ, "integrator", "wrap_bound", default=1e-8, minimum=0.0),
    }

    sweep = raw.get("sweep")
    if scenario == "evolve":
        if sweep is not None:
            raise ConfigError("sweep", "not allowed for the evolve scenario")
    else:
        sweep = _require_mapping(sweep if sweep is not None else {}, "sweep")
        if scenario == "sweep_kappa":
            _check_keys(sweep, "sweep", ("kappa_values",), ("n_cut_values", "rungs_values"))
            kappas = _number_list(sweep, "sweep", "kappa_values")
            out = {"kappa_values": kappas}
            for key in ("n_cut_values", "rungs_values"):
                if key in sweep:
                    vals = _number_list(sweep, "sweep", key)
                    if len(vals) != len(kappas):
                        raise ConfigError(f"sweep.{key}", "length must match kappa_values")
                    out[key] = [int(v) for v in vals]
            cfg["sweep"] = out
        elif scenario == "sweep_velocity":
            _check_keys(sweep, "sweep", ("velocity_ratios",), ("n_cut_values", "rungs_values"))
            ratios = _number_list(sweep, "sweep", "velocity_ratios")
            out = {"velocity_ratios": ratios}
            for key in ("n_cut_values", "rungs_values"):
                if key in sweep:
                    vals = _number_list(sweep, "sweep", key)
                    if len(vals) != len(ratios):
                        raise ConfigError(f"sweep.{key}", "length must match velocity_ratios")
                    out[key] = [int(v) for v in vals]
            cfg["sweep"] = out
        elif scenario == "sweep_gq":
            _check_keys(sweep, "sweep", ("g_q_values",))
            cfg["sweep"] = {"g_q_values": _number_list(sweep, "sweep", "g_q_values")}
        elif scenario == "fidelity_map":
            _check_keys(sweep, "sweep", ("kappa_values", "gamma_values"), ("n_cut_values", "rungs_values"))
            kappas = _number_list(sweep, "sweep", "kappa_values")
            out = {"kappa_values": kappas, "gamma_values": _number_list(sweep, "sweep", "gamma_values")}
            for key in ("n_cut_values", "rungs_values"):
                if key in sweep:
                    vals = _number_list(sweep, "sweep", key)
                    if len(vals) != len(kappas):
                        raise ConfigError(f"sweep.{key}", "length must match kappa_values")
                    out[key] = [int(v) for v in vals]
            cfg["sweep"] = out
    return cfg


# ---------------------------------------------------------------------------
# point evaluation (must stay module-level and picklable for worker pools)


def _build_point(payload: dict):
    model = (build_kerr if payload["kind"] == "kerr" else build_jc)(payload["kappa"], payload["n_cut"])
    ladder = LadderConfig(rungs=payload["rungs"], center=payload["center"])
    if payload.get("delta") is not None:
        delta = payload["delta"]
    elif payload["tune_to_pair"]:
        delta = pair_detuning(model, payload["lower"], payload["upper"])
    else:
        delta = payload["velocity_ratio"] - 1.0
    omega_t = payload["q0_l"] / (1.0 + delta)
    cfg = SystemConfig(
        model=model,
        ladder=ladder,
        g_q=complex(*payload["g_q"]),
        interaction_time=omega_t,
        delta=delta,
        gamma=payload["gamma"],
        energy_spread=payload.get("energy_spread", 0.0),
    )
    icfg = IntegratorConfig(
        steps=payload["integrator"]["steps"],
        phase_per_step=payload["integrator"]["phase_per_step"],
        drive_per_step=payload["integrator"]["drive_per_step"],
        convergence_check=payload["integrator"]["convergence_check"],
        trace_bound=payload["integrator"]["trace_bound"],
        cutoff_bound=payload["integrator"]["cutoff_bound"],
        wrap_bound=payload["integrator"]["wrap_bound"],
    )
    return cfg, icfg


def _evaluate_point(payload: dict) -> dict:
    """Run one grid point; returns plain data for deterministic assembly."""
    cfg, icfg = _build_point(payload)
    out: dict = {"index": payload["index"], "converged": True, "reason": ""}
    try:
        psi0 = initial_state(cfg, cavity_level=payload["initial_level"])
        result = evolve_lindblad(psi0, cfg, icfg)
        basis = polariton_eigenbasis(cfg.model)
        eels = eels_spectrum(result.state, center=cfg.ladder.center)
        stats = polariton_statistics(result.state, basis)
        diag = result.diagnostics
        out.update(
            eels_labels=list(eels.labels),
            eels_probs=[float(p) for p in eels.probabilities],
            stats_labels=list(stats.labels),
            stats_probs=[float(p) for p in stats.probabilities],
            steps=diag.steps,
            trace_error=diag.trace_error,
            cutoff_occupancy=diag.cutoff_occupancy,
            wrap_occupancy=diag.wrap_occupancy,
            halving_delta=diag.halving_delta,
            min_eigenvalue=diag.min_eigenvalue,
        )
        if payload.get("want_fidelity"):
            lo, up, _ = pair_states(cfg.model, payload["lower"], payload["upper"])
            omega = blockade_angle(cfg.model, payload["lower"], payload["upper"], cfg.g_q)
            target = (scattering_blockade(omega, lo, up, cfg.space) @ psi0).normalize()
            out["fidelity"] = state_fidelity(frame_align(result.state, cfg), target)
    except (NumericsError, ValueError) as exc:
        out["converged"] = False
        out["reason"] = f"{type(exc).__name__}: {exc}"
    return out


def _point_payload(cfg: dict, index: int, **overrides) -> dict:
    payload = {
        "index": index,
        "kind": cfg["model"]["kind"],
        "kappa": cfg["model"]["kappa_ratio"],
        "n_cut": cfg["model"]["n_cut"],
        "rungs": cfg["electron"]["rungs"],
        "center": cfg["electron"]["center"],
        "g_q": tuple(cfg["electron"]["g_q"]),
        "q0_l": cfg["electron"]["q0_l"],
        "tune_to_pair": cfg["electron"]["tune_to_pair"],
        "velocity_ratio": cfg["electron"].get("velocity_ratio", 1.0),
        "delta": cfg["electron"].get("delta"),
        "gamma": cfg["loss"]["gamma_ratio"],
        "energy_spread": cfg["loss"]["energy_spread"],
        "lower": cfg["pair"]["lower"],
        "upper": cfg["pair"]["upper"],
        "initial_level": cfg["initial_level"],
        "integrator": cfg["integrator"],
        "want_fidelity": False,
    }
    payload.update(overrides)
    if payload["center"] >= payload["rungs"]:
        payload["center"] = payload["rungs"] // 2
    return payload


def _run_points(payloads: list[dict], workers: int) -> list[dict]:
    if workers <= 1 or len(payloads) <= 1:
        results = [_evaluate_point(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=workers, mp_context=get_context("spawn")) as pool:
            results = list(pool.map(_evaluate_point, payloads))
    return sorted(results, key=lambda r: r["index"])


# ---------------------------------------------------------------------------
# output writers


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            cells = [cell if isinstance(cell, str) else _fmt(cell) for cell in row]
            fh.write(",".join(cells) + "\n")


def _write_distribution(path: Path, header: list[str], labels, probs) -> None:
    total = float(np.sum(probs))
    if abs(total - 1.0) > 1e-8:
        raise NumericsError(f"distribution for {path.name} sums to {total!r}, not 1 within 1e-8")
    _write_csv(path, header, list(map(list, zip(labels, probs))))


def _write_point_files(point_dir: Path, result: dict) -> None:
    point_dir.mkdir(parents=True, exist_ok=True)
    if result["converged"]:
        _write_distribution(point_dir / "eels.csv", ["sideband", "probability"],
                            result["eels_labels"], result["eels_probs"])
        _write_distribution(point_dir / "stats.csv", ["level", "probability"],
                            result["stats_labels"], result["stats_probs"])
    else:
        (point_dir / "FAILED.txt").write_text(result["reason"] + "\n")


def _write_effective_config(out_dir: Path, cfg: dict) -> None:
    with open(out_dir / "effective_config.json", "w", newline="\n") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _diag_columns(result: dict) -> list:
    return [
        "true" if result["converged"] else "false",
        result.get("steps", 0),
        result.get("trace_error", float("nan")),
        result.get("cutoff_occupancy", float("nan")),
        result.get("wrap_occupancy", float("nan")),
        result.get("halving_delta", float("nan")) if result.get("halving_delta") is not None else 0.0,
    ]


DIAG_HEADER = ["converged", "steps", "trace_error", "cutoff_occupancy", "wrap_occupancy", "halving_delta"]


# ---------------------------------------------------------------------------
# scenario execution


HBAR_C_KEV_NM = 0.1973269804  # hbar * c


def _scenario_evolve(cfg: dict, out_dir: Path, workers: int) -> int:
    result = _evaluate_point(_point_payload(cfg, 0))
    if not result["converged"]:
        sys.stderr.write(f"numerical failure: {result['reason']}\n")
        return 3
    _write_distribution(out_dir / "eels.csv", ["sideband", "probability"],
                        result["eels_labels"], result["eels_probs"])
    _write_distribution(out_dir / "stats.csv", ["level", "probability"],
                        result["stats_labels"], result["stats_probs"])
    _write_csv(out_dir / "diagnostics.csv", DIAG_HEADER, [_diag_columns(result)])
    electron = cfg["electron"]
    beta = electron.get("beta")
    if beta is None and "energy_kev" in electron:
        from .electron import energy_to_velocity

        beta = energy_to_velocity(electron["energy_kev"])
    if beta is not None and "wavelength_nm" in electron:
        # physical energy axis: final energy = E + l * hbar * q0 * v
        quantum_kev = 2.0 * math.pi * beta * HBAR_C_KEV_NM / electron["wavelength_nm"]
        base = electron.get("energy_kev", 0.0)
        energies = [base + int(lab) * quantum_kev for lab in result["eels_labels"]]
        _write_csv(out_dir / "eels_energy.csv", ["energy_kev", "probability"],
                   list(map(list, zip(energies, result["eels_probs"]))))
    return 0


def _sweep_axis(cfg: dict) -> tuple[str, list[dict]]:
    scenario = cfg["scenario"]
    sweep = cfg["sweep"]
    payloads = []
    if scenario == "sweep_kappa":
        axis = "kappa_ratio"
        for i, kappa in enumerate(sweep["kappa_values"]):
            over = {"kappa": kappa}
            if "n_cut_values" in sweep:
                over["n_cut"] = sweep["n_cut_values"][i]
            if "rungs_values" in sweep:
                over["rungs"] = sweep["rungs_values"][i]
            payloads.append(_point_payload(cfg, i, **over))
        values = sweep["kappa_values"]
    elif scenario == "sweep_velocity":
        axis = "velocity_ratio"
        for i, ratio in enumerate(sweep["velocity_ratios"]):
            over = {"velocity_ratio": ratio, "tune_to_pair": False, "delta": None}
            if "n_cut_values" in sweep:
                over["n_cut"] = sweep["n_cut_values"][i]
            if "rungs_values" in sweep:
                over["rungs"] = sweep["rungs_values"][i]
            payloads.append(_point_payload(cfg, i, **over))
        values = sweep["velocity_ratios"]
    elif scenario == "sweep_gq":
        axis = "g_q"
        for i, g in enumerate(sweep["g_q_values"]):
            payloads.append(_point_payload(cfg, i, g_q=(g, 0.0)))
        values = sweep["g_q_values"]
    else:
        raise ConfigError("scenario", f"not a simple sweep: {scenario}")
    for p, v in zip(payloads, values):
        p["axis_value"] = v
    return axis, payloads


def _scenario_sweep(cfg: dict, out_dir: Path, workers: int) -> int:
    axis, payloads = _sweep_axis(cfg)
    results = _run_points(payloads, workers)
    values = [p["axis_value"] for p in payloads]
    stats_rows, eels_rows, summary_rows = [], [], []
    for value, result in zip(values, results):
        point_dir = out_dir / f"point_{result['index']:03d}"
        _write_point_files(point_dir, result)
        summary_rows.append([value] + _diag_columns(result))
        if result["converged"]:
            stats_rows.extend([value, lab, p] for lab, p in zip(result["stats_labels"], result["stats_probs"]))
            eels_rows.extend([value, lab, p] for lab, p in zip(result["eels_labels"], result["eels_probs"]))
    _write_csv(out_dir / "sweep_stats.csv", [axis, "level", "probability"], stats_rows)
    _write_csv(out_dir / "sweep_eels.csv", [axis, "sideband", "probability"], eels_rows)
    _write_csv(out_dir / "sweep_summary.csv", [axis] + DIAG_HEADER, summary_rows)
    if all(not r["converged"] for r in results):
        sys.stderr.write("numerical failure: every grid point failed\n")
        return 3
    return 0


def _scenario_fidelity_map(cfg: dict, out_dir: Path, workers: int) -> int:
    sweep = cfg["sweep"]
    payloads = []
    index = 0
    grid = []
    for i, kappa in enumerate(sweep["kappa_values"]):
        over: dict = {"kappa": kappa, "want_fidelity": True}
        if "n_cut_values" in sweep:
            over["n_cut"] = sweep["n_cut_values"][i]
        if "rungs_values" in sweep:
            over["rungs"] = sweep["rungs_values"][i]
        for gamma in sweep["gamma_values"]:
            payloads.append(_point_payload(cfg, index, gamma=gamma, **over))
            grid.append((kappa, gamma))
            index += 1
    results = _run_points(payloads, workers)
    rows = []
    for (kappa, gamma), result in zip(grid, results):
        fid = result.get("fidelity", float("nan")) if result["converged"] else float("nan")
        rows.append([kappa, gamma, fid, "true" if result["converged"] else "false"])
    _write_csv(out_dir / "fidelity_map.csv", ["kappa_ratio", "gamma_ratio", "fidelity", "converged"], rows)
    _write_csv(out_dir / "fidelity_diagnostics.csv", ["kappa_ratio", "gamma_ratio"] + DIAG_HEADER,
               [[k, g] + _diag_columns(r) for (k, g), r in zip(grid, results)])
    if all(not r["converged"] for r in results):
        sys.stderr.write("numerical failure: every grid point failed\n")
        return 3
    return 0


def _scenario_gates(cfg: dict, out_dir: Path, workers: int) -> int:
    gcfg = cfg["gates"]
    checks, report = gate_identity_suite(
        rungs=gcfg["rungs"], seed=gcfg["seed"], corrupt_cz_phase=gcfg["corrupt_cz_phase"]
    )
    lines = [check.line() for check in checks]
    lines.append("")
    lines.append("two-polariton controlled-Z report:")
    lines.extend("  " + ln for ln in report.to_text().splitlines())
    text = "\n".join(lines) + "\n"
    with open(out_dir / "gates_report.txt", "w", newline="\n") as fh:
        fh.write(text)
    failing = [check.name for check in checks if not check.passed]
    if failing:
        sys.stderr.write("failing gate identities: " + "; ".join(failing) + "\n")
        return 1
    return 0


def _scenario_feasibility(cfg: dict, out_dir: Path, workers: int) -> int:
    f = cfg["feasibility"]
    report = check_feasibility(
        pm_bandwidth=f["pm_bandwidth"],
        kappa=f["kappa_ratio"],
        gamma=f["gamma_ratio"],
        energy_spread=f["energy_spread"],
        margin=f["margin"],
    )
    text = "\n".join(report.lines()) + "\n"
    with open(out_dir / "feasibility.txt", "w", newline="\n") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return 0


_SCENARIO_RUNNERS = {
    "evolve": _scenario_evolve,
    "sweep_kappa": _scenario_sweep,
    "sweep_velocity": _scenario_sweep,
    "sweep_gq": _scenario_sweep,
    "fidelity_map": _scenario_fidelity_map,
    "gates": _scenario_gates,
    "feasibility": _scenario_feasibility,
}


def run_config(cfg: dict, out_dir: str | Path, workers: int = 1) -> int:
    """Execute a normalized config; returns the process exit code."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    _write_effective_config(out_dir, cfg)
    if "runs" in cfg:
        worst = 0
        for sub in cfg["runs"]:
            tag = sub["tag"]
            body = {k: v for k, v in sub.items() if k != "tag"}
            body["schema_version"] = SCHEMA_VERSION
            sub_dir = out_dir / tag
            sub_dir.mkdir(parents=True, exist_ok=True)
            _write_effective_config(sub_dir, body)
            code = _SCENARIO_RUNNERS[body["scenario"]](body, sub_dir, workers)
            worst = max(worst, code)
        return worst
    return _SCENARIO_RUNNERS[cfg["scenario"]](cfg, out_dir, workers)


# ---------------------------------------------------------------------------
# presets

Q0_L = 472.43  # q0 * L for the 532 nm mode over a 40 um interaction length


def _preset_fig3ab() -> dict:
    kappas = [0.0, 0.002, 0.004, 0.006, 0.008, 0.01, 0.012, 0.014, 0.016, 0.018, 0.02]
    n_cuts = [20, 18, 16, 14, 12, 12, 10, 10, 10, 8, 8]
    rungs = [65, 49, 49, 41, 41, 41, 33, 33, 33, 33, 33]
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": "sweep_kappa",
        "model": {"kind": "kerr", "kappa_ratio": 0.02, "n_cut": 8},
        "electron": {"rungs": 33, "center": 16, "g_q": math.pi / 2, "q0_l": Q0_L,
                     "velocity_ratio": 1.0, "energy_kev": 200.0},
        "loss": {"gamma_ratio": 1e-5},
        "pair": {"lower": "0", "upper": "1"},
        "sweep": {"kappa_values": kappas, "n_cut_values": n_cuts, "rungs_values": rungs},
    }


def _preset_fig3cd() -> dict:
    ratios = [0.97, 0.975, 0.98, 0.985, 0.99, 0.995, 1.0, 1.005, 1.01, 1.015, 1.02, 1.025, 1.03]
    n_cuts = [10, 10, 10, 12, 16, 20, 22, 20, 16, 12, 10, 10, 10]
    rungs = [33, 33, 33, 41, 49, 65, 65, 65, 49, 41, 33, 33, 33]
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": "sweep_velocity",
        "model": {"kind": "jc", "kappa_ratio": 0.02, "n_cut": 10},
        "electron": {"rungs": 33, "center": 16, "g_q": math.pi / math.sqrt(2), "q0_l": Q0_L,
                     "velocity_ratio": 1.0, "energy_kev": 20.0},
        "loss": {"gamma_ratio": 1e-5},
        "pair": {"lower": "0*", "upper": "1+"},
        "sweep": {"velocity_ratios": ratios, "n_cut_values": n_cuts, "rungs_values": rungs},
    }


def _gq_grid(stop_factor: float) -> list[float]:
    step = math.pi / 64
    n = int(round(stop_factor * math.pi / step))
    return [i * step for i in range(n + 1)]


def _preset_fig4(kind: str, pair: tuple[str, str], initial: str, n_cut: int, stop: float) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": "sweep_gq",
        "model": {"kind": kind, "kappa_ratio": 0.02, "n_cut": n_cut},
        "electron": {"rungs": 33, "center": 16, "g_q": 0.0, "q0_l": Q0_L, "tune_to_pair": True},
        "loss": {"gamma_ratio": 1e-5},
        "pair": {"lower": pair[0], "upper": pair[1]},
        "initial_level": initial,
        "sweep": {"g_q_values": _gq_grid(stop)},
    }


def _preset_fidelity_map(kind: str, pair: tuple[str, str], g_q: float, kappas: list[float],
                         n_cuts: list[int], rungs: list[int]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "scenario": "fidelity_map",
        "model": {"kind": kind, "kappa_ratio": kappas[-1], "n_cut": n_cuts[-1]},
        "electron": {"rungs": rungs[-1], "center": rungs[-1] // 2, "g_q": g_q, "q0_l": Q0_L, "tune_to_pair": True},
        "loss": {"gamma_ratio": 1e-5},
        "pair": {"lower": pair[0], "upper": pair[1]},
        "sweep": {
            "kappa_values": kappas,
            "gamma_values": [1e-5, 1e-4, 1e-3],
            "n_cut_values": n_cuts,
            "rungs_values": rungs,
        },
    }


def build_presets() -> dict[str, dict]:
    fig5_kappas = [0.005, 0.01, 0.02]
    fig5a = _preset_fidelity_map("jc", ("0*", "1-"), math.pi / math.sqrt(2), fig5_kappas, [20, 12, 10], [49, 33, 33])
    fig5b = _preset_fidelity_map("kerr", ("0", "1"), math.pi / 2, fig5_kappas, [16, 10, 8], [49, 33, 33])
    fig5c_jc = {k: v for k, v in fig5a.items() if k != "schema_version"}
    fig5c_kerr = {k: v for k, v in fig5b.items() if k != "schema_version"}
    fig5c_jc = json.loads(json.dumps(fig5c_jc))
    fig5c_kerr = json.loads(json.dumps(fig5c_kerr))
    for sub, n_cut, d in ((fig5c_jc, 10, 33), (fig5c_kerr, 8, 33)):
        sub["sweep"]["kappa_values"] = [0.02]
        sub["sweep"]["n_cut_values"] = [n_cut]
        sub["sweep"]["rungs_values"] = [d]
    smoke = {
        "schema_version": SCHEMA_VERSION,
        "scenario": "sweep_kappa",
        "model": {"kind": "kerr", "kappa_ratio": 0.05, "n_cut": 8},
        "electron": {"rungs": 21, "center": 10, "g_q": 0.6, "q0_l": 60.0, "velocity_ratio": 1.0},
        "loss": {"gamma_ratio": 1e-4},
        "pair": {"lower": "0", "upper": "1"},
        "sweep": {"kappa_values": [0.0, 0.02, 0.05]},
    }
    return {
        "fig3ab": _preset_fig3ab(),
        "fig3cd": _preset_fig3cd(),
        "fig4a": _preset_fig4("kerr", ("0", "1"), "0", 7, 0.65),
        "fig4b": _preset_fig4("kerr", ("1", "2"), "1", 9, 0.50),
        "fig4c": _preset_fig4("jc", ("0*", "1+"), "0*", 12, 0.80),
        "fig4d": _preset_fig4("jc", ("0*", "1-"), "0*", 12, 0.80),
        "fig5a": fig5a,
        "fig5b": fig5b,
        "fig5c": {
            "schema_version": SCHEMA_VERSION,
            "runs": [{"tag": "jc", **fig5c_jc}, {"tag": "kerr", **fig5c_kerr}],
        },
        "gates": {"schema_version": SCHEMA_VERSION, "scenario": "gates"},
        "smoke": smoke,
    }


# ---------------------------------------------------------------------------
# entry point


def _resolve_workers(arg_workers: int | None) -> int:
    env = os.environ.get(ENV_WORKERS)
    if env is not None:
        try:
            val = int(env)
        except ValueError:
            raise ConfigError(ENV_WORKERS, f"must be an integer, got {env!r}") from None
        if val < 1:
            raise ConfigError(ENV_WORKERS, f"must be >= 1, got {val}")
        return val
    if arg_workers is not None:
        if arg_workers < 1:
            raise ConfigError("--workers", f"must be >= 1, got {arg_workers}")
        return arg_workers
    return 1


def _load_raw_config(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError("config", f"file not found: {path}")
    try:
        with open(p) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="epolsim", description=__doc__)
    parser.add_argument("--version", action="version", version=f"epolsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("run", "run any scenario config"),
        ("sweep", "run a sweep or fidelity-map config"),
        ("gates", "run the gate-identity verification suite"),
        ("check", "run the feasibility validator"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", nargs="?", help="path to a JSON config")
        p.add_argument("--preset", help="name of a built-in config")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--workers", type=int, default=None, help="worker process count")
    args = parser.parse_args(argv)

    try:
        workers = _resolve_workers(args.workers)
        presets = build_presets()
        if args.preset is not None and args.config is not None:
            raise ConfigError("config", "give a config path or --preset, not both")
        if args.preset is not None:
            if args.preset not in presets:
                raise ConfigError("--preset", f"unknown preset {args.preset!r}; have {sorted(presets)}")
            raw = presets[args.preset]
        elif args.config is not None:
            raw = _load_raw_config(args.config)
        elif args.command == "gates":
            raw = presets["gates"]
        else:
            raise ConfigError("config", "a config path or --preset is required")
        cfg = normalize_config(raw)
        scenarios = [r["scenario"] for r in cfg["runs"]] if "runs" in cfg else [cfg["scenario"]]
        if args.command == "sweep" and not all(s in SWEEP_SCENARIOS for s in scenarios):
            raise ConfigError("scenario", f"'sweep' requires one of {SWEEP_SCENARIOS}")
        if args.command == "gates" and scenarios != ["gates"]:
            raise ConfigError("scenario", "'gates' requires a gates config")
        if args.command == "check" and scenarios != ["feasibility"]:
            raise ConfigError("scenario", "'check' requires a feasibility config")
    except ConfigError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2
    return run_config(cfg, args.out, workers)


if __name__ == "__main__":
    sys.exit(main())
