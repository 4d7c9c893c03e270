"""Junction description: molecule, leads, phonons, solver options and bias.

Units: hbar = e = k_B = 1.  All energies share one user-chosen unit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from typing import Any, Sequence

import numpy as np

INTERACTION_ORDERS = ("none", "born", "scba")
PHONON_PROPAGATORS = ("paper", "symmetrized")
BIAS_PROFILES = ("none", "symmetric-ramp")

_PSD_TOL = 1e-12
DEFAULT_ETA = 1e-6


class ConfigError(ValueError):
    """Invalid configuration; ``path`` names the offending field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _check_symmetric_psd(path: str, m: np.ndarray, psd: bool = True):
    if not np.all(np.isfinite(m)):
        raise ConfigError(path, "contains non-finite entries")
    if not np.allclose(m, m.T, rtol=0, atol=1e-12):
        raise ConfigError(path, "matrix must be symmetric")
    if psd and m.size:
        lo = np.linalg.eigvalsh(m).min()
        if lo < -_PSD_TOL * max(1.0, np.abs(m).max()):
            raise ConfigError(path, f"matrix must be positive semidefinite (min eigenvalue {lo:.3g})")


class _ArrayEq:
    """Field-by-field equality that understands numpy arrays."""

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray) or isinstance(b, np.ndarray):
                if not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True

    __hash__ = None


@dataclass(frozen=True, eq=False)
class LeadSpec(_ArrayEq):
    """Wide-band lead: level-width matrix, chemical potential and temperature."""

    gamma: np.ndarray
    mu: float = 0.0
    temperature: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "gamma", _frozen(self.gamma))

    def validate(self, path: str, n_levels: int):
        if self.gamma.shape != (n_levels, n_levels):
            raise ConfigError(f"{path}.gamma", f"expected shape {(n_levels, n_levels)}, got {self.gamma.shape}")
        _check_symmetric_psd(f"{path}.gamma", self.gamma)
        if not np.isfinite(self.mu):
            raise ConfigError(f"{path}.mu", "must be finite")
        if not self.temperature >= 0:
            raise ConfigError(f"{path}.temperature", "must be non-negative")


@dataclass(frozen=True, eq=False)
class PhononSpec(_ArrayEq):
    """Primary phonon modes, their coupling to the levels and the damping bath.

    ``coupling[l, i]`` couples mode ``l`` to level ``i``.
    """

    omegas: np.ndarray
    coupling: np.ndarray
    bath_gamma: np.ndarray
    bath_temperature: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "omegas", _frozen(np.atleast_1d(self.omegas)))
        object.__setattr__(self, "coupling", _frozen(self.coupling))
        object.__setattr__(self, "bath_gamma", _frozen(self.bath_gamma))

    @property
    def n_modes(self) -> int:
        return self.omegas.shape[0]

    def validate(self, path: str, n_levels: int):
        n_p = self.n_modes
        if self.omegas.ndim != 1 or n_p == 0:
            raise ConfigError(f"{path}.omegas", "must be a non-empty vector")
        if not np.all(self.omegas > 0):
            raise ConfigError(f"{path}.omegas", "all mode frequencies must be positive")
        if self.coupling.shape != (n_p, n_levels):
            raise ConfigError(f"{path}.coupling", f"expected shape {(n_p, n_levels)}, got {self.coupling.shape}")
        if not np.all(np.isfinite(self.coupling)):
            raise ConfigError(f"{path}.coupling", "contains non-finite entries")
        if self.bath_gamma.shape != (n_p, n_p):
            raise ConfigError(f"{path}.bath_gamma", f"expected shape {(n_p, n_p)}, got {self.bath_gamma.shape}")
        _check_symmetric_psd(f"{path}.bath_gamma", self.bath_gamma)
        if not self.bath_temperature >= 0:
            raise ConfigError(f"{path}.bath_temperature", "must be non-negative")


@dataclass(frozen=True, eq=False)
class JunctionSpec(_ArrayEq):
    energy: np.ndarray
    lead_a: LeadSpec
    lead_b: LeadSpec
    phonons: PhononSpec | None = None
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        object.__setattr__(self, "energy", _frozen(np.atleast_2d(self.energy)))
        self.validate()

    @property
    def n_levels(self) -> int:
        return self.energy.shape[0]

    def validate(self):
        e = self.energy
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] == 0:
            raise ConfigError("molecule.energy", f"must be a square matrix, got shape {e.shape}")
        _check_symmetric_psd("molecule.energy", e, psd=False)
        self.lead_a.validate("lead_a", self.n_levels)
        self.lead_b.validate("lead_b", self.n_levels)
        if self.phonons is not None:
            self.phonons.validate("phonons", self.n_levels)
        if not (np.isfinite(self.eta) and self.eta > 0):
            raise ConfigError("eta", "must be a positive number")


@dataclass(frozen=True)
class SolverOptions:
    omega_max: float = 20.0
    n_omega: int = 4001
    max_iter: int = 100
    tol: float = 1e-8
    mixing: float = 0.5
    interaction_order: str = "scba"
    phonon_propagator: str = "paper"
    include_hartree: bool = True

    def __post_init__(self):
        self.validate()

    def validate(self):
        p = "solver"
        if not (isinstance(self.omega_max, (int, float)) and self.omega_max > 0):
            raise ConfigError(f"{p}.omega_max", "must be positive")
        if not isinstance(self.n_omega, int) or self.n_omega < 3 or self.n_omega % 2 == 0:
            raise ConfigError(f"{p}.n_omega", "must be an odd integer >= 3 (the grid must contain omega = 0)")
        if not isinstance(self.max_iter, int) or self.max_iter < 1:
            raise ConfigError(f"{p}.max_iter", "must be a positive integer")
        if not (isinstance(self.tol, (int, float)) and self.tol > 0):
            raise ConfigError(f"{p}.tol", "must be positive")
        if not (isinstance(self.mixing, (int, float)) and 0 < self.mixing <= 1):
            raise ConfigError(f"{p}.mixing", "must lie in (0, 1]")
        if self.interaction_order not in INTERACTION_ORDERS:
            raise ConfigError(f"{p}.interaction_order", f"must be one of {INTERACTION_ORDERS}")
        if self.phonon_propagator not in PHONON_PROPAGATORS:
            raise ConfigError(f"{p}.phonon_propagator", f"must be one of {PHONON_PROPAGATORS}")
        if not isinstance(self.include_hartree, bool):
            raise ConfigError(f"{p}.include_hartree", "must be a boolean")


@dataclass(frozen=True)
class BiasSpec:
    """Applied voltage and how it shifts the molecular levels."""

    voltage: float = 0.0
    profile: str | tuple = "none"


# --------------------------------------------------------------------------
# parsing


def _get(doc: dict, key: str, path: str, required: bool = True, default=None):
    if not isinstance(doc, dict):
        raise ConfigError(path, "must be an object")
    if key not in doc:
        if required:
            raise ConfigError(f"{path}.{key}" if path else key, "missing required field")
        return default
    return doc[key]


def _matrix(value, path: str, shape=None) -> np.ndarray:
    try:
        m = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(path, "must be a numeric (nested) array") from None
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2:
        raise ConfigError(path, f"must be a matrix (row-major nested array), got {m.ndim} dimensions")
    if shape is not None and m.shape != shape:
        raise ConfigError(path, f"expected shape {shape}, got {m.shape}")
    return m


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(path, "must be a number")
    return float(value)


def _load(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError("<document>", f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<document>", "top level must be an object")
    return doc


def _lead(doc: dict, name: str, n: int) -> LeadSpec:
    d = _get(doc, name, "")
    if not isinstance(d, dict):
        raise ConfigError(name, "must be an object")
    return LeadSpec(
        gamma=_matrix(_get(d, "gamma", name), f"{name}.gamma", (n, n)),
        mu=_number(_get(d, "mu", name), f"{name}.mu"),
        temperature=_number(_get(d, "temperature", name, False, 0.0), f"{name}.temperature"),
    )


def _phonons(d, n: int) -> PhononSpec | None:
    if d is None:
        return None
    if not isinstance(d, dict):
        raise ConfigError("phonons", "must be an object")
    omegas = np.atleast_1d(np.array(_get(d, "omegas", "phonons"), dtype=float))
    n_p = omegas.shape[0]
    bath = _get(d, "bath_gamma", "phonons", False, None)
    return PhononSpec(
        omegas=omegas,
        coupling=_matrix(_get(d, "coupling", "phonons"), "phonons.coupling", (n_p, n)),
        bath_gamma=np.zeros((n_p, n_p)) if bath is None else _matrix(bath, "phonons.bath_gamma", (n_p, n_p)),
        bath_temperature=_number(_get(d, "bath_temperature", "phonons", False, 0.0), "phonons.bath_temperature"),
    )


def spec_from_dict(doc: dict) -> JunctionSpec:
    mol = _get(doc, "molecule", "")
    n = _get(mol, "n_levels", "molecule")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise ConfigError("molecule.n_levels", "must be a positive integer")
    return JunctionSpec(
        energy=_matrix(_get(mol, "energy", "molecule"), "molecule.energy", (n, n)),
        lead_a=_lead(doc, "lead_a", n),
        lead_b=_lead(doc, "lead_b", n),
        phonons=_phonons(doc.get("phonons"), n),
        eta=_number(_get(doc, "eta", "", False, DEFAULT_ETA), "eta"),
    )


def options_from_dict(doc: dict) -> SolverOptions:
    s = doc.get("solver", {})
    if not isinstance(s, dict):
        raise ConfigError("solver", "must be an object")
    known = {f.name for f in fields(SolverOptions)}
    unknown = set(s) - known
    if unknown:
        raise ConfigError(f"solver.{sorted(unknown)[0]}", "unknown option")
    for key in ("omega_max", "tol", "mixing"):
        if key in s:
            s = {**s, key: _number(s[key], f"solver.{key}")}
    return SolverOptions(**s)


def bias_from_dict(doc: dict) -> BiasSpec:
    b = doc.get("bias", {})
    if not isinstance(b, dict):
        raise ConfigError("bias", "must be an object")
    profile = b.get("profile", "none")
    if isinstance(profile, list):
        profile = tuple(_number(x, f"bias.profile[{i}]") for i, x in enumerate(profile))
    elif profile not in BIAS_PROFILES:
        raise ConfigError("bias.profile", f"must be one of {BIAS_PROFILES} or a list of level shifts")
    return BiasSpec(voltage=_number(b.get("voltage", 0.0), "bias.voltage"), profile=profile)


def parse_config(text: str) -> tuple[JunctionSpec, SolverOptions]:
    """Parse a JSON configuration document into an equilibrium spec and options."""
    doc = _load(text)
    return spec_from_dict(doc), options_from_dict(doc)


def parse_bias(text: str) -> BiasSpec:
    return bias_from_dict(_load(text))


def apply_overrides(doc: dict, overrides: Sequence[str]) -> dict:
    """Apply ``key.path=value`` overrides; values are parsed as JSON when possible."""
    doc = json.loads(json.dumps(doc))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must have the form key=value")
        key, raw = item.split("=", 1)
        try:
            value: Any = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = doc
        parts = key.strip().split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(key, f"{p} is not an object")
        node[parts[-1]] = value
    return doc


# --------------------------------------------------------------------------
# bias


def level_shifts(n_levels: int, voltage: float, profile) -> np.ndarray:
    """Diagonal level shifts for a bias profile.

    ``symmetric-ramp`` places the levels at equal spacing on a linear potential
    drop from ``+V/2`` (lead a) to ``-V/2`` (lead b).
    """
    if isinstance(profile, str):
        if profile == "none":
            return np.zeros(n_levels)
        if profile == "symmetric-ramp":
            x = np.arange(1, n_levels + 1) / (n_levels + 1)
            return voltage * (0.5 - x)
        raise ConfigError("bias.profile", f"unknown profile {profile!r}")
    shifts = np.asarray(profile, dtype=float)
    if shifts.shape != (n_levels,):
        raise ConfigError("bias.profile", f"expected {n_levels} level shifts, got {shifts.size}")
    return shifts


def apply_bias(spec: JunctionSpec, voltage: float, profile="none") -> JunctionSpec:
    """Shift the chemical potentials by ``+-V/2`` and the levels by ``profile``.

    Chemical potentials move relative to their current values, so biasing
    by ``V`` and then ``-V`` restores the original spec.
    """
    shifts = level_shifts(spec.n_levels, voltage, profile)
    return replace(
        spec,
        energy=spec.energy + np.diag(shifts),
        lead_a=replace(spec.lead_a, mu=spec.lead_a.mu + 0.5 * voltage),
        lead_b=replace(spec.lead_b, mu=spec.lead_b.mu - 0.5 * voltage),
    )


def spec_to_dict(spec: JunctionSpec) -> dict:
    def lead(l: LeadSpec):
        return {"gamma": l.gamma.tolist(), "mu": l.mu, "temperature": l.temperature}

    out = {
        "molecule": {"n_levels": spec.n_levels, "energy": spec.energy.tolist()},
        "lead_a": lead(spec.lead_a),
        "lead_b": lead(spec.lead_b),
        "eta": spec.eta,
    }
    if spec.phonons is not None:
        p = spec.phonons
        out["phonons"] = {
            "omegas": p.omegas.tolist(),
            "coupling": p.coupling.tolist(),
            "bath_gamma": p.bath_gamma.tolist(),
            "bath_temperature": p.bath_temperature,
        }
    return out


def options_to_dict(options: SolverOptions) -> dict:
    return {f.name: getattr(options, f.name) for f in fields(options)}
