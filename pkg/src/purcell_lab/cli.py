"""Scenario-driven command line front end.

``purcell-lab run scenario.json`` loads a declarative JSON scenario, runs the
selected study (optionally distributing sweep points over a worker pool), and
writes ``<study>.csv`` plus ``manifest.json`` into the output directory.
Frequencies in scenarios are in units of the mean mirror rate (keep
``(kappa_a + kappa_b) / 2 = 1``), lengths in units of the transition
wavelength, and detection windows in inverse mirror rates. Outputs are
deterministic: floats are written in shortest round-trip form and results do
not depend on the worker count.
"""

import argparse
import csv
import json
import math
import os
import sys
from functools import partial
from multiprocessing import get_context

import numpy as np

from . import __version__
from .dipole import CouplingKernels, EmitterEnsemble, coupling_kernels, linear_chain
from .errors import PurcellLabError, ValidationError
from .fluctuations import (build_fluctuation_system, detected_statistics,
                           output_amplitudes, output_spectrum, solve_lyapunov,
                           stability)
from .freespace import (exciton_coherence, exciton_state, plane_integrated_intensity,
                        radiation_intensity, rectangular_grid)
from .kerr import kerr_correction, kerr_scaling_scan, matched_kerr_point
from .oracle import (excited_populations, free_decay_evolution, intracavity_g2,
                     intracavity_quadrature_variances, cavity_amplitude,
                     emitter_amplitudes, exciton_vector, logarithmic_negativity,
                     steady_state)
from .steadystate import (CavitySystem, ChainSpec, cooperativity_scan,
                          coupling_vector, linear_response, match_cavity,
                          solve_classical)

STUDIES = {
    "response_scan": "linear transmission/reflection/scattering spectra",
    "detected_stats": "quadrature variances, photon number and g2 of the detected field",
    "cooperativity_scan": "effective cooperativity versus emitter number, cavity matched per N",
    "kerr_scan": "third-order dipole correction versus N or emitter spacing",
    "radiation_map": "free-space intensity map of a prepared collective state",
    "free_decay": "master-equation free decay with per-site entanglement",
    "oracle_check": "master-equation cross-validation of the classical solution",
}

_SYMMETRIES = ("symmetric", "alternating", "independent")
K_E = 2.0 * math.pi


# ---------------------------------------------------------------------------
# scenario resolution and validation
# ---------------------------------------------------------------------------

def _fail(path, message):
    raise ValidationError(f"scenario.{path}: {message}")


def _as_mapping(raw, path):
    if not isinstance(raw, dict):
        _fail(path, "must be an object")
    return raw


def _number(raw, path, *, positive=False, nonneg=False):
    if isinstance(raw, bool) or not isinstance(raw, (int, float)):
        _fail(path, "must be a number")
    value = float(raw)
    if not math.isfinite(value):
        _fail(path, "must be finite")
    if positive and value <= 0.0:
        _fail(path, "must be positive")
    if nonneg and value < 0.0:
        _fail(path, "must be non-negative")
    return value


def _integer(raw, path, *, minimum=None):
    if isinstance(raw, bool) or not isinstance(raw, int):
        _fail(path, "must be an integer")
    if minimum is not None and raw < minimum:
        _fail(path, f"must be >= {minimum}")
    return int(raw)


_CAVITY_STUDIES = ("response_scan", "detected_stats", "cooperativity_scan",
                   "kerr_scan", "oracle_check")


def _resolve_rates(raw, study):
    rates = _as_mapping(raw.get("rates", {}), "rates")
    out = {
        "kappa_a": _number(rates.get("kappa_a", 1.0), "rates.kappa_a", positive=True),
        "kappa_b": _number(rates.get("kappa_b", 1.0), "rates.kappa_b", positive=True),
        "eta": _number(rates.get("eta", 0.0), "rates.eta", nonneg=True),
    }
    if "gamma" not in rates:
        _fail("rates.gamma", "required")
    out["gamma"] = _number(rates["gamma"], "rates.gamma", positive=True)
    if "g_vector" in rates:
        vec = rates["g_vector"]
        if not isinstance(vec, list) or not vec:
            _fail("rates.g_vector", "must be a nonempty list")
        out["g_vector"] = [_number(v, "rates.g_vector[]") for v in vec]
    elif "g" in rates:
        out["g"] = _number(rates["g"], "rates.g")
    elif study in _CAVITY_STUDIES:
        _fail("rates.g", "required (or provide rates.g_vector)")
    sym = rates.get("coupling_symmetry", "symmetric")
    if isinstance(sym, str):
        sym = [sym]
    if not isinstance(sym, list) or not sym or any(s not in _SYMMETRIES for s in sym):
        _fail("rates.coupling_symmetry", f"must be one or more of {_SYMMETRIES}")
    out["coupling_symmetry"] = sym
    return out


def _resolve_geometry(raw, study, scan):
    geo = _as_mapping(raw.get("geometry", {}), "geometry")
    out = {"dipole": geo.get("dipole", "y"), "axis": geo.get("axis", "x"),
           "chain": None, "positions": None}
    if "positions" in geo:
        pos = geo["positions"]
        if not isinstance(pos, list) or not pos:
            _fail("geometry.positions", "must be a nonempty list of 3-vectors")
        for i, p in enumerate(pos):
            if not isinstance(p, list) or len(p) != 3:
                _fail(f"geometry.positions[{i}]", "must be a 3-vector")
        out["positions"] = [[_number(c, "geometry.positions[][]") for c in p] for p in pos]
        return out
    chain = _as_mapping(geo.get("chain", {}), "geometry.chain")
    resolved = {}
    if "n" in chain:
        resolved["n"] = _integer(chain["n"], "geometry.chain.n", minimum=1)
    if "spacing" in chain:
        resolved["spacing"] = _number(chain["spacing"], "geometry.chain.spacing",
                                      positive=True)
    scan_axis = scan["axis"] if scan else None
    needs_n = study in ("response_scan", "detected_stats", "radiation_map",
                        "free_decay", "oracle_check") or scan_axis == "distance"
    if needs_n and "n" not in resolved:
        _fail("geometry.chain.n", "required for this study")
    spacing_from_scan = scan_axis == "distance"
    if not spacing_from_scan:
        if resolved.get("n", 1) > 1 and "spacing" not in resolved:
            _fail("geometry.chain.spacing", "required for chains with n > 1")
        if scan_axis == "n" and "spacing" not in resolved:
            _fail("geometry.chain.spacing", "required for emitter-number scans")
    resolved.setdefault("spacing", 0.25)
    out["chain"] = resolved
    return out


def _resolve_scan(raw, study):
    if study in ("radiation_map", "free_decay", "oracle_check"):
        return None
    scan = _as_mapping(raw.get("scan", {}), "scan")
    axis = scan.get("axis")
    expected = {"response_scan": ("delta",), "detected_stats": ("delta",),
                "cooperativity_scan": ("n",), "kerr_scan": ("n", "distance")}[study]
    if axis not in expected:
        _fail("scan.axis", f"must be one of {expected} for {study}")
    if axis == "n":
        if "values" in scan:
            values = scan["values"]
            if not isinstance(values, list) or len(values) < 2:
                _fail("scan.values", "must list at least two emitter numbers")
            n_values = sorted(_integer(v, "scan.values[]", minimum=1) for v in values)
        else:
            start = _integer(scan.get("start", 2), "scan.start", minimum=1)
            stop = _integer(scan.get("stop", 20), "scan.stop", minimum=start)
            step = _integer(scan.get("step", 1), "scan.step", minimum=1)
            n_values = list(range(start, stop + 1, step))
        if len(n_values) < 2:
            _fail("scan", "n scans need at least two points")
        return {"axis": "n", "values": n_values}
    if "start" not in scan or "stop" not in scan:
        _fail("scan.start", "start and stop required")
    start = _number(scan["start"], "scan.start")
    stop = _number(scan["stop"], "scan.stop")
    points = _integer(scan.get("points", 201), "scan.points", minimum=2)
    if not stop > start:
        _fail("scan.stop", "must exceed scan.start")
    if axis == "distance" and start <= 0.0:
        _fail("scan.start", "distances must be positive")
    return {"axis": axis, "start": start, "stop": stop, "points": points}


def _resolve_matching(raw):
    matching = _as_mapping(raw.get("matching", {"mode": "none"}), "matching")
    mode = matching.get("mode", "none")
    if mode not in ("none", "collective"):
        _fail("matching.mode", "must be 'none' or 'collective'")
    out = {"mode": mode}
    if "m" in matching:
        out["m"] = _integer(matching["m"], "matching.m", minimum=1)
    return out


def resolve_scenario(raw) -> dict:
    """Validate a raw scenario mapping and fill defaults."""
    raw = _as_mapping(raw, "")
    study = raw.get("study")
    if study not in STUDIES:
        _fail("study", f"must be one of {sorted(STUDIES)}")
    scan = _resolve_scan(raw, study)
    resolved = {
        "study": study,
        "rates": _resolve_rates(raw, study),
        "geometry": _resolve_geometry(raw, study, scan),
        "scan": scan,
        "matching": _resolve_matching(raw),
    }
    output = _as_mapping(raw.get("output", {}), "output")
    formats = output.get("formats", ["csv", "json"])
    if not isinstance(formats, list) or any(f not in ("csv", "json") for f in formats):
        _fail("output.formats", "must be a list drawn from ['csv', 'json']")
    resolved["output"] = {
        "directory": str(output.get("directory", ".")),
        "formats": formats,
        "debug_spectrum": bool(output.get("debug_spectrum", False)),
    }
    if study == "detected_stats":
        det = _as_mapping(raw.get("detection", {}), "detection")
        if "half_window" not in det:
            _fail("detection.half_window", "required for detected_stats")
        resolved["detection"] = {
            "half_window": _number(det["half_window"], "detection.half_window",
                                   positive=True)}
    if study == "radiation_map":
        m = _as_mapping(raw.get("map", {}), "map")
        resolved["map"] = {
            "extent": _number(m.get("extent", 4.0), "map.extent", positive=True),
            "points": _integer(m.get("points", 81), "map.points", minimum=2),
            "z": _number(m.get("z", 2.0), "map.z"),
            "state_m": _integer(m.get("state_m", 1), "map.state_m", minimum=1),
        }
    if study == "free_decay":
        d = _as_mapping(raw.get("decay", {}), "decay")
        times = d.get("times_gamma", [0.0, 10.0, 50.0, 100.0])
        if not isinstance(times, list) or not times:
            _fail("decay.times_gamma", "must be a nonempty list")
        times = [_number(t, "decay.times_gamma[]", nonneg=True) for t in times]
        if sorted(times) != times:
            _fail("decay.times_gamma", "must be sorted ascending")
        resolved["decay"] = {"times_gamma": times}
        if "state_m" in d:
            resolved["decay"]["state_m"] = _integer(d["state_m"], "decay.state_m",
                                                    minimum=1)
    if study == "oracle_check":
        o = _as_mapping(raw.get("oracle", {}), "oracle")
        resolved["oracle"] = {
            "n_max": _integer(o.get("n_max", 6), "oracle.n_max", minimum=1),
            "delta": _number(o.get("delta", 0.0), "oracle.delta"),
        }
    return resolved


# ---------------------------------------------------------------------------
# shared builders
# ---------------------------------------------------------------------------

def _build_ensemble(resolved, n_override=None) -> EmitterEnsemble:
    geo = resolved["geometry"]
    gamma = resolved["rates"]["gamma"]
    if geo["positions"] is not None:
        return EmitterEnsemble(np.asarray(geo["positions"], dtype=float),
                               _dipole_vector(geo), gamma, K_E)
    chain = geo["chain"]
    n = n_override if n_override is not None else chain.get("n")
    if n is None:
        _fail("geometry.chain.n", "required")
    return linear_chain(int(n), chain["spacing"], gamma=gamma, k_e=K_E,
                        axis=geo["axis"], dipole=geo["dipole"])


def _dipole_vector(geo):
    d = geo["dipole"]
    return d if isinstance(d, str) else np.asarray(d, dtype=float)


def _g_vector(resolved, n, symmetry):
    rates = resolved["rates"]
    if "g_vector" in rates:
        vec = np.asarray(rates["g_vector"], dtype=float)
        if vec.shape[0] != n:
            _fail("rates.g_vector", f"length {vec.shape[0]} does not match N={n}")
        return vec
    return coupling_vector(n, rates["g"], symmetry)


def _kernels_for(resolved, ensemble, symmetry) -> CouplingKernels:
    if symmetry == "independent":
        return CouplingKernels.independent(ensemble.n, resolved["rates"]["gamma"])
    return coupling_kernels(ensemble)


def _matching_shift(resolved, kernels, g_vec) -> float:
    if resolved["matching"]["mode"] == "none":
        return 0.0
    rates = resolved["rates"]
    probe = CavitySystem(rates["kappa_a"], rates["kappa_b"], 0.0, 0.0, 0.0,
                         g_vec, kernels, rates["gamma"])
    n = len(g_vec)
    m = resolved["matching"].get("m")
    if m is not None and n > 1:
        omega12 = kernels.omega[0, 1]
        guess = 2.0 * omega12 * math.cos(math.pi * m / (n + 1))
    else:
        guess = float(g_vec @ kernels.omega @ g_vec / (g_vec @ g_vec))
    return match_cavity(probe, 0.0, guess)


def _point_payload(resolved, symmetry):
    ensemble = _build_ensemble(resolved)
    kernels = _kernels_for(resolved, ensemble, symmetry)
    g_vec = _g_vector(resolved, ensemble.n, symmetry)
    shift = _matching_shift(resolved, kernels, g_vec)
    rates = resolved["rates"]
    return {
        "kappa_a": rates["kappa_a"], "kappa_b": rates["kappa_b"],
        "gamma": rates["gamma"], "eta": rates["eta"],
        "g": g_vec, "omega": kernels.omega, "gamma_matrix": kernels.gamma_matrix,
        "h": kernels.h, "shift": shift,
        "half_window": resolved.get("detection", {}).get("half_window"),
        "debug_spectrum": resolved["output"]["debug_spectrum"],
    }


def _system_at(payload, delta):
    kernels = CouplingKernels(payload["omega"], payload["gamma_matrix"], payload["h"],
                              payload["gamma"])
    return CavitySystem(payload["kappa_a"], payload["kappa_b"], delta,
                        delta + payload["shift"], payload["eta"], payload["g"],
                        kernels, payload["gamma"])


# ---------------------------------------------------------------------------
# per-point workers (top level for pickling)
# ---------------------------------------------------------------------------

def _response_point(payload, delta):
    system = _system_at(payload, delta)
    resp = linear_response(system, [system.delta_e])[0]
    kappa = system.kappa
    return (delta / kappa, resp.t_c.real, resp.t_c.imag, resp.abs_t2, resp.abs_r2,
            resp.abs_s2, resp.phi, resp.phi_emitter)


def _detected_point(payload, delta):
    system = _system_at(payload, delta)
    state = solve_classical(system)
    fsys = build_fluctuation_system(system, state)
    report = stability(fsys.m)
    s0 = output_spectrum(fsys, 0.0)
    stats = detected_statistics(s0, output_amplitudes(system, state),
                                payload["half_window"],
                                min_linewidth=abs(report.spectral_abscissa))
    row = (delta / system.kappa, stats.var_x, stats.var_y, stats.n_det,
           math.sqrt(max(stats.var_n, 0.0)), stats.g2)
    debug = None
    if payload["debug_spectrum"]:
        debug = {"delta_over_kappa": delta / system.kappa,
                 "s33": [s0.b_b.real, s0.b_b.imag],
                 "s43": [s0.bdag_b.real, s0.bdag_b.imag],
                 "s44": [s0.bdag_bdag.real, s0.bdag_bdag.imag],
                 "s34": [s0.b_bdag.real, s0.b_bdag.imag]}
    return row, debug


def _kerr_distance_point(resolved, task):
    distance, symmetry = task
    geo_n = resolved["geometry"]["chain"].get("n", 2)
    rates = resolved["rates"]
    ensemble = linear_chain(geo_n, distance, gamma=rates["gamma"], k_e=K_E,
                            axis=resolved["geometry"]["axis"],
                            dipole=resolved["geometry"]["dipole"])
    kernels = _kernels_for(resolved, ensemble, symmetry)
    g_vec = _g_vector(resolved, geo_n, symmetry)
    system = CavitySystem(rates["kappa_a"], rates["kappa_b"], 0.0, 0.0,
                          rates["eta"], g_vec, kernels, rates["gamma"])
    if resolved["matching"]["mode"] == "collective":
        _, result = matched_kerr_point(system)
    else:
        result = kerr_correction(system)
    return (distance, result.norm_beta3, abs(result.t_lin) ** 2,
            abs(result.t_nl) ** 2, symmetry)


def _pmap(fn, items, workers):
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(item) for item in items]
    ctx = get_context("fork")
    with ctx.Pool(processes=workers) as pool:
        chunk = max(1, len(items) // (workers * 4))
        return pool.map(fn, items, chunksize=chunk)


# ---------------------------------------------------------------------------
# study runners
# ---------------------------------------------------------------------------

def _delta_grid(scan):
    return np.linspace(scan["start"], scan["stop"], scan["points"])


def _run_response(resolved, workers):
    payload = _point_payload(resolved, resolved["rates"]["coupling_symmetry"][0])
    rows = _pmap(partial(_response_point, payload), _delta_grid(resolved["scan"]), workers)
    header = ("delta_over_kappa", "re_t", "im_t", "abs_t2", "abs_r2", "abs_s2",
              "phi", "phi_emitter")
    return {"csv": (header, rows)}


def _run_detected(resolved, workers):
    payload = _point_payload(resolved, resolved["rates"]["coupling_symmetry"][0])
    results = _pmap(partial(_detected_point, payload), _delta_grid(resolved["scan"]), workers)
    rows = [row for row, _ in results]
    header = ("delta_over_kappa", "var_x", "var_y", "n_det", "std_n", "g2")
    out = {"csv": (header, rows)}
    if resolved["output"]["debug_spectrum"]:
        out["extra_json"] = {"spectrum_debug.json": [d for _, d in results]}
    return out


def _chain_spec(resolved, spacing=None):
    rates = resolved["rates"]
    sp = spacing if spacing is not None else resolved["geometry"]["chain"]["spacing"]
    return ChainSpec(sp, rates["gamma"], rates["kappa_a"], rates["kappa_b"],
                     rates["g"], K_E)


def _run_cooperativity(resolved, workers):
    spec = _chain_spec(resolved)
    n_values = resolved["scan"]["values"]
    symmetries = resolved["rates"]["coupling_symmetry"]
    scans = _pmap(partial(_coop_task, spec, n_values), symmetries, workers)
    rows = []
    fits = {}
    for scan in scans:
        for n, c_eff in zip(scan.n_values, scan.c_eff):
            rows.append((int(n), float(c_eff), scan.symmetry))
        fits[scan.symmetry] = {"exponent": scan.exponent,
                               "stderr": scan.exponent_stderr}
    header = ("n", "c_eff", "symmetry")
    return {"csv": (header, rows), "extra_json": {"fit_report.json": fits}}


def _coop_task(spec, n_values, symmetry):
    return cooperativity_scan(spec, n_values, symmetry)


def _kerr_n_task(spec, n_values, eta, matched, symmetry):
    return kerr_scaling_scan(spec, n_values, symmetry, eta, match=matched)


def _run_kerr(resolved, workers):
    scan = resolved["scan"]
    symmetries = resolved["rates"]["coupling_symmetry"]
    header = ("n_or_d", "norm_beta3", "t_lin_abs2", "t_nl_abs2", "symmetry_tag")
    if scan["axis"] == "n":
        spec = _chain_spec(resolved)
        matched = resolved["matching"]["mode"] != "none"
        scans = _pmap(partial(_kerr_n_task, spec, scan["values"], resolved["rates"]["eta"],
                              matched), symmetries, workers)
        rows = []
        fits = {}
        for result in scans:
            for i, n in enumerate(result.n_values):
                rows.append((int(n), float(result.norm_beta3[i]),
                             float(result.t_lin_abs2[i]), float(result.t_nl_abs2[i]),
                             result.symmetry))
            fits[result.symmetry] = {"exponent": result.exponent,
                                     "stderr": result.exponent_stderr}
        return {"csv": (header, rows), "extra_json": {"fit_report.json": fits}}
    distances = _delta_grid(scan)
    tasks = [(float(d), sym) for sym in symmetries for d in distances]
    rows = _pmap(partial(_kerr_distance_point, resolved), tasks, workers)
    return {"csv": (header, rows)}


def _run_radiation(resolved, workers):
    del workers  # single vectorized kernel call
    ensemble = _build_ensemble(resolved)
    spec = resolved["map"]
    state = exciton_state(ensemble.n, spec["state_m"])
    coherence = exciton_coherence(state)
    xs = np.linspace(-spec["extent"], spec["extent"], spec["points"])
    points = rectangular_grid(xs, xs, spec["z"])
    intensity = radiation_intensity(ensemble, coherence, points)
    finite = intensity[np.isfinite(intensity)]
    raw_max = float(finite.max()) if finite.size else float("nan")
    norm = intensity / raw_max if raw_max > 0 else intensity
    rows = [(float(p[0]), float(p[1]), float(v)) for p, v in zip(points, norm)]
    dx = float(xs[1] - xs[0])
    head = {
        "grid": {"extent": spec["extent"], "points": spec["points"], "z": spec["z"]},
        "state_m": spec["state_m"],
        "normalization": "grid-maximum",
        "raw_max": raw_max,
        "plane_integrated_raw": plane_integrated_intensity(intensity, dx, dx),
        "skipped_points": [[float(p[0]), float(p[1])] for p, v in zip(points, intensity)
                           if not np.isfinite(v)],
    }
    header = ("x", "y", "intensity")
    return {"csv": (header, rows), "extra_json": {"radiation_map_header.json": head}}


def _run_free_decay(resolved, workers):
    del workers  # one sequential evolution
    ensemble = _build_ensemble(resolved)
    gamma = resolved["rates"]["gamma"]
    m = resolved["decay"].get("state_m", ensemble.n)
    state = exciton_state(ensemble.n, m)
    psi = exciton_vector(ensemble.n, state.coeffs)
    times_gamma = resolved["decay"]["times_gamma"]
    times = [t / gamma for t in times_gamma]
    snapshots = free_decay_evolution(ensemble, psi, times)
    rows = []
    series = {"times_gamma": times_gamma, "total_excitation": [],
              "site_negativity": [], "state_m": m}
    for t_g, snap in zip(times_gamma, snapshots):
        pops = excited_populations(snap)
        total = float(pops.sum())
        negs = [logarithmic_negativity(snap, [site]) if ensemble.n > 1 else 0.0
                for site in range(ensemble.n)]
        rows.append((t_g, total, *negs))
        series["total_excitation"].append(total)
        series["site_negativity"].append(negs)
    header = ("t_gamma", "total_excitation",
              *(f"negativity_site_{i + 1}" for i in range(ensemble.n)))
    return {"csv": (header, rows), "extra_json": {"free_decay.json": series}}


def _run_oracle_check(resolved, workers):
    del workers
    ensemble = _build_ensemble(resolved)
    rates = resolved["rates"]
    symmetry = rates["coupling_symmetry"][0]
    kernels = _kernels_for(resolved, ensemble, symmetry)
    g_vec = _g_vector(resolved, ensemble.n, symmetry)
    delta = resolved["oracle"]["delta"]
    system = CavitySystem(rates["kappa_a"], rates["kappa_b"], delta, delta,
                          rates["eta"], g_vec, kernels, rates["gamma"])
    classical = solve_classical(system)
    rho = steady_state(system, ensemble, n_max=resolved["oracle"]["n_max"])
    alpha_oracle = cavity_amplitude(rho)
    betas_oracle = emitter_amplitudes(rho)
    fsys = build_fluctuation_system(system, classical)
    v_mat = solve_lyapunov(fsys.m, fsys.d)
    var_x_lin = 0.5 + v_mat[1, 0].real + v_mat[0, 0].real
    var_y_lin = 0.5 + v_mat[1, 0].real - v_mat[0, 0].real
    var_x_or, var_y_or = intracavity_quadrature_variances(rho)

    def rel(a, b):
        return abs(a - b) / max(abs(a), abs(b), 1e-300)

    rows = [("alpha", classical.alpha.real, classical.alpha.imag,
             alpha_oracle.real, alpha_oracle.imag, rel(classical.alpha, alpha_oracle))]
    for j in range(system.n):
        rows.append((f"beta_{j + 1}", classical.beta[j].real, classical.beta[j].imag,
                     betas_oracle[j].real, betas_oracle[j].imag,
                     rel(classical.beta[j], betas_oracle[j])))
    rows.append(("var_x", var_x_lin, 0.0, var_x_or, 0.0, rel(var_x_lin, var_x_or)))
    rows.append(("var_y", var_y_lin, 0.0, var_y_or, 0.0, rel(var_y_lin, var_y_or)))
    summary = {
        "alpha": {"classical": [classical.alpha.real, classical.alpha.imag],
                  "oracle": [alpha_oracle.real, alpha_oracle.imag]},
        "beta": {"classical": [[b.real, b.imag] for b in classical.beta],
                 "oracle": [[b.real, b.imag] for b in betas_oracle]},
        "quadrature_variances": {"linearized": [var_x_lin, var_y_lin],
                                 "oracle": [var_x_or, var_y_or]},
        "intracavity_g2_oracle": intracavity_g2(rho),
    }
    header = ("quantity", "classical_re", "classical_im", "oracle_re", "oracle_im",
              "rel_diff")
    return {"csv": (header, rows), "extra_json": {"oracle_check.json": summary}}


_RUNNERS = {
    "response_scan": _run_response,
    "detected_stats": _run_detected,
    "cooperativity_scan": _run_cooperativity,
    "kerr_scan": _run_kerr,
    "radiation_map": _run_radiation,
    "free_decay": _run_free_decay,
    "oracle_check": _run_oracle_check,
}


# ---------------------------------------------------------------------------
# output writing
# ---------------------------------------------------------------------------

def _fmt_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(v) for v in row])


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_scenario(resolved, out_dir, workers, seedless=False):
    """Execute a resolved scenario; returns the list of files written."""
    os.makedirs(out_dir, exist_ok=True)
    result = _RUNNERS[resolved["study"]](resolved, workers)
    outputs = []
    formats = resolved["output"]["formats"]
    if "csv" in formats:
        name = f"{resolved['study']}.csv"
        header, rows = result["csv"]
        _write_csv(os.path.join(out_dir, name), header, rows)
        outputs.append(name)
    if "json" in formats:
        for name, payload in result.get("extra_json", {}).items():
            _write_json(os.path.join(out_dir, name), payload)
            outputs.append(name)
    manifest = {
        "library_version": __version__,
        "study": resolved["study"],
        "scenario": resolved,
        "outputs": sorted(outputs),
        "float_format": "shortest-round-trip (repr), <= 17 significant digits",
    }
    if not seedless:
        manifest["seed"] = 0
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)
    outputs.append("manifest.json")
    return outputs


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _load_scenario(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ValidationError(f"scenario file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValidationError(f"scenario file is not valid JSON: {exc}") from None


def _default_workers():
    raw = os.environ.get("PURCELL_LAB_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="purcell-lab",
                                     description="scenario-driven collective Purcell studies")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a scenario and write its artifacts")
    run_p.add_argument("scenario")
    run_p.add_argument("--out", default=None, help="output directory override")
    run_p.add_argument("--workers", type=int, default=None,
                       help="sweep worker processes (default $PURCELL_LAB_WORKERS or 1)")
    run_p.add_argument("--seedless", action="store_true",
                       help="omit the decorative seed field from the manifest "
                            "(all studies are deterministic)")
    val_p = sub.add_parser("validate", help="validate a scenario file")
    val_p.add_argument("scenario")
    sub.add_parser("list-studies", help="list available study types")
    args = parser.parse_args(argv)

    if args.command == "list-studies":
        for name in sorted(STUDIES):
            print(f"{name}: {STUDIES[name]}")
        return 0

    try:
        resolved = resolve_scenario(_load_scenario(args.scenario))
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.command == "validate":
        print(f"scenario OK: study={resolved['study']}")
        return 0

    out_dir = args.out if args.out is not None else resolved["output"]["directory"]
    workers = args.workers if args.workers is not None else _default_workers()
    try:
        outputs = run_scenario(resolved, out_dir, workers, seedless=args.seedless)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except PurcellLabError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {', '.join(outputs)} to {out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
