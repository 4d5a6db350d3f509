"""Scenario documents: one JSON file describing a system, a state, a grid and a time list.

The structure is checked against ``scenarios/schema.json``; the physics
preconditions are then enforced by the constructors of the owning modules.
Any failure surfaces as :class:`~fermigf.errors.ScenarioError`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Union

import jsonschema
import numpy as np

from .dynamics import (
    HarmonicGaussianParams,
    SystemSpec,
    analytic_ellipse,
    analytic_moments,
    closed_form_state,
)
from .errors import FermiGFError, ScenarioError
from .fermi import EllipseCoeffs
from .measurement import ComptonConfig, PrismConstants
from .propagator import propagate_to_times
from .state import (
    GaussianParams,
    Grid,
    Moments,
    PhysicalConstants,
    WaveFunction,
    gaussian_packet,
    superpose,
)

PRESETS = ("fig1_free", "fig2_uniform_force", "fig3_squeezed", "coherent", "superposition")


@dataclass(frozen=True)
class Superposition:
    packets: tuple[GaussianParams, GaussianParams]
    weights: tuple[complex, complex] = (1.0, 1.0)


StateSpec = Union[GaussianParams, HarmonicGaussianParams, Superposition]


@dataclass(frozen=True)
class WignerSettings:
    n_p: int = 512
    n_q: int = 512
    fraction: float = 1.0 / math.e
    field_csv: bool = False

    def check(self, grid: Grid) -> None:
        n = grid.n_points
        if self.n_p & (self.n_p - 1) or self.n_p > n:
            raise ScenarioError(f"wigner n_p must be a power of two no larger than {n}")
        if n % self.n_q:
            raise ScenarioError(f"wigner n_q must divide the grid size {n}")


@dataclass(frozen=True)
class MeasurementSettings:
    n: int = 1_000_000
    prism: PrismConstants = PrismConstants(0.5, 5.0)
    csv_max_samples: int = 10_000
    compton: ComptonConfig = ComptonConfig()
    beta0_halfwidth: float = 1e-3
    reference_index: int = 0  # time sample held to the absolute accuracy bounds


@dataclass(frozen=True)
class Scenario:
    name: str
    system: SystemSpec
    state: StateSpec
    constants: PhysicalConstants = PhysicalConstants()
    grid: Grid = Grid()
    time_units: str = "tau"
    time_values: tuple[float, ...] = (0.0,)
    times: tuple[float, ...] = (0.0,)  # absolute times, same order as time_values
    max_dt: float = 1e-3
    wigner: WignerSettings = WignerSettings()
    measurement: MeasurementSettings = MeasurementSettings()
    seed: int = 0
    description: str = ""
    output_dir: str | None = None
    raw: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def is_gaussian(self) -> bool:
        return not isinstance(self.state, Superposition)

    def length_unit(self) -> float:
        """δ for free-type packets, sqrt(ħ/mω0) for the oscillator."""
        if self.system.kind == "harmonic":
            return math.sqrt(self.constants.hbar / (self.constants.mass * self.system.omega0))
        return _reference_delta(self.state)

    def momentum_unit(self) -> float:
        return self.constants.hbar / self.length_unit()

    def initial_state(self) -> WaveFunction:
        """The state at t = 0."""
        if isinstance(self.state, Superposition):
            a, b = (gaussian_packet(p, self.grid, self.constants) for p in self.state.packets)
            return superpose(a, b, *self.state.weights)
        return closed_form_state(self.system, self.state, 0.0, self.grid, self.constants)

    def closed_form_states(self) -> list[WaveFunction]:
        if not self.is_gaussian:
            raise ScenarioError(f"scenario {self.name!r} has no closed-form states")
        return [closed_form_state(self.system, self.state, t, self.grid, self.constants)
                for t in self.times]

    def oracle_states(self) -> list[WaveFunction]:
        return propagate_to_times(self.initial_state(), self.system, self.times, self.max_dt)

    def states(self) -> list[WaveFunction]:
        """Closed forms for Gaussian scenarios, propagated states otherwise."""
        return self.closed_form_states() if self.is_gaussian else self.oracle_states()

    def analytic_ellipses(self) -> list[EllipseCoeffs]:
        return [analytic_ellipse(self.system, self.state, t, self.constants) for t in self.times]

    def analytic_moments(self) -> list[Moments]:
        return [analytic_moments(self.system, self.state, t, self.constants) for t in self.times]


def _reference_delta(state: StateSpec) -> float:
    if isinstance(state, Superposition):
        return state.packets[0].delta
    if isinstance(state, GaussianParams):
        return state.delta
    raise ScenarioError("a harmonic state has no packet width delta")


def _schema() -> dict:
    return json.loads(resources.files(__package__).joinpath("scenarios/schema.json").read_text())


def _complex(w) -> complex:
    return complex(w[0], w[1]) if isinstance(w, list) else complex(w)


def _absolute_times(units: str, values, system: SystemSpec, state: StateSpec,
                    constants: PhysicalConstants) -> tuple[float, ...]:
    if units == "absolute":
        return tuple(float(v) for v in values)
    if units == "tau":
        d = _reference_delta(state)
        scale = constants.mass * d**2 / constants.hbar
        return tuple(float(v) * scale for v in values)
    if system.kind != "harmonic" or not isinstance(state, HarmonicGaussianParams):
        raise ScenarioError("time units 'phase' need a harmonic system and state")
    return tuple((float(v) - state.phi) / system.omega0 for v in values)


def scenario_from_dict(doc: dict) -> Scenario:
    """Validate and build a scenario; raises ScenarioError on any problem."""
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"scenario schema violation at {where}: {exc.message}") from None
    try:
        return _build(doc)
    except ScenarioError:
        raise
    except (ValueError, TypeError, FermiGFError) as exc:
        raise ScenarioError(f"invalid scenario {doc.get('name')!r}: {exc}") from exc


def _build(doc: dict) -> Scenario:
    sys_doc = doc["system"]
    kind = sys_doc["kind"]
    if kind == "uniform_force" and "F0" not in sys_doc:
        raise ScenarioError("uniform_force system needs F0")
    if kind == "harmonic" and "omega0" not in sys_doc:
        raise ScenarioError("harmonic system needs omega0")
    system = SystemSpec(kind, F0=float(sys_doc.get("F0", 0.0)),
                        omega0=float(sys_doc.get("omega0", 0.0)))
    constants = PhysicalConstants(**doc.get("constants", {}))
    grid = Grid(**doc.get("grid", {}))

    st = doc["state"]
    if st["kind"] == "gaussian":
        state: StateSpec = GaussianParams(st.get("q0", 0.0), st.get("p0", 0.0), st["delta"])
    elif st["kind"] == "harmonic_gaussian":
        if kind != "harmonic":
            raise ScenarioError("harmonic_gaussian state needs a harmonic system")
        if "B" in st:
            state = HarmonicGaussianParams.from_B(st["B"], system.omega0, constants,
                                                  st.get("Q0", 0.0), st.get("phi", 0.0))
        else:
            state = HarmonicGaussianParams(st["alpha"], st.get("Q0", 0.0), st.get("phi", 0.0))
    else:
        packets = tuple(GaussianParams(p.get("q0", 0.0), p.get("p0", 0.0), p["delta"])
                        for p in st["packets"])
        weights = tuple(_complex(w) for w in st.get("weights", [1.0, 1.0]))
        state = Superposition(packets, weights)
    if kind == "harmonic" and not isinstance(state, (HarmonicGaussianParams, Superposition)):
        raise ScenarioError("a harmonic system needs a harmonic_gaussian state")

    units = doc["times"].get("units", "tau")
    values = tuple(float(v) for v in doc["times"]["values"])
    times = _absolute_times(units, values, system, state, constants)

    w = doc.get("wigner", {})
    wigner = WignerSettings(w.get("n_p", 512), w.get("n_q", 512),
                            w.get("fraction", 1.0 / math.e), w.get("field_csv", False))
    wigner.check(grid)
    m = doc.get("measurement", {})
    c = m.get("compton", {})
    reference_index = 0
    if "reference_time" in m:
        matches = [i for i, v in enumerate(values) if abs(v - m["reference_time"]) <= 1e-12 * max(1.0, abs(v))]
        if not matches:
            raise ScenarioError(f"measurement reference_time {m['reference_time']} is not in the time list")
        reference_index = matches[0]
    measurement = MeasurementSettings(
        n=m.get("n", 1_000_000),
        prism=PrismConstants(m.get("c_lin", 0.5), m.get("d_quad", 5.0)),
        csv_max_samples=m.get("csv_max_samples", 10_000),
        compton=ComptonConfig(nu0=c.get("nu0", 0.02), phi=c.get("phi", 0.2)),
        beta0_halfwidth=c.get("beta0_halfwidth", 1e-3),
        reference_index=reference_index,
    )
    scn = Scenario(
        name=doc["name"], system=system, state=state, constants=constants, grid=grid,
        time_units=units, time_values=values, times=times,
        max_dt=float(doc.get("oracle", {}).get("max_dt", 1e-3)),
        wigner=wigner, measurement=measurement, seed=int(doc.get("seed", 0)),
        description=doc.get("description", ""), output_dir=doc.get("output_dir"), raw=doc,
    )
    # surface packet-out-of-box problems at load time rather than mid-run
    scn.initial_state().check_in_box()
    if scn.is_gaussian:
        scn.closed_form_states()
    return scn


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"scenario {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def preset_path(name: str):
    if name not in PRESETS:
        raise ScenarioError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    return resources.files(__package__).joinpath(f"scenarios/{name}.json")


def load_preset(name: str) -> Scenario:
    return scenario_from_dict(json.loads(preset_path(name).read_text()))


def resolve_scenario(spec: str) -> Scenario:
    """A preset name or a path to a scenario file."""
    if spec in PRESETS:
        return load_preset(spec)
    return load_scenario(spec)


def measurement_seed(seed: int, index: int) -> int:
    """Per-time-sample seed derived from the scenario seed (64-bit, order independent)."""
    return int(np.random.SeedSequence([seed, index]).generate_state(1, np.uint64)[0])
