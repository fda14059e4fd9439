"""PB trajectories pushed through the price mapping and the option pricers."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Literal

import numpy as np

from .analytic import MarketParams, call_price, put_price
from .errors import DimensionMismatchError, EsoptError, ScenarioError, UnpriceableStateError
from .pb_model import (
    InteractionMatrix,
    PBVector,
    coupling_for_fraction,
    human_impact,
    impact_delta,
    parse_dimension,
    parse_matrix,
)
from .stock_mapping import MappingParams, stock_price

DeltaMode = Literal["reference", "step"]
CSV_HEADER = ("time", "H", "delta_H", "spot", "call", "put", "priceable")


@dataclass(frozen=True)
class Step:
    time: float
    h: PBVector


@dataclass(frozen=True)
class Scenario:
    mapping: MappingParams
    market: MarketParams
    g: InteractionMatrix
    reference: PBVector
    steps: tuple[Step, ...]
    labels: tuple[str, ...] | None = None
    h_target: PBVector | None = None

    def __post_init__(self):
        validate_scenario(self)

    @property
    def dimension(self) -> int:
        return self.reference.dimension


def validate_scenario(sc: Scenario) -> None:
    """Reject malformed scenarios, naming the first offending step."""
    n = sc.reference.dimension
    if sc.g.dimension != n:
        raise DimensionMismatchError(f"g: expected {n}x{n}, got {sc.g.dimension}x{sc.g.dimension}")
    if sc.h_target is not None and sc.h_target.dimension != n:
        raise DimensionMismatchError(f"h_target: expected {n} entries, got {sc.h_target.dimension}")
    if not sc.steps:
        raise ScenarioError("steps: scenario has no steps")
    prev = -math.inf
    for i, st in enumerate(sc.steps):
        if st.h.dimension != n:
            raise ScenarioError(f"h: expected {n} entries, got {st.h.dimension}", i)
        if not math.isfinite(st.time):
            raise ScenarioError("t: time must be finite", i)
        if st.time <= prev:
            raise ScenarioError(f"t: times must be strictly increasing ({st.time!r} <= {prev!r})", i)
        if st.time > sc.market.expiry:
            raise ScenarioError(f"t: time {st.time!r} is after expiry {sc.market.expiry!r}", i)
        if st.time < sc.market.valuation_time:
            raise ScenarioError(f"t: time {st.time!r} precedes the market valuation time", i)
        prev = st.time


@dataclass(frozen=True)
class TrajectoryPoint:
    time: float
    h: PBVector
    H: float
    delta_H: float
    spot: float
    call: float
    put: float
    priceable: bool

    def row(self) -> list[str]:
        return [_fmt(self.time), _fmt(self.H), _fmt(self.delta_H), _fmt(self.spot),
                _fmt(self.call), _fmt(self.put), "true" if self.priceable else "false"]

    def to_dict(self) -> dict[str, Any]:
        return {
            "time": self.time,
            "h": self.h.values.tolist(),
            "H": self.H,
            "delta_H": self.delta_H,
            "spot": self.spot,
            "call": _json_num(self.call),
            "put": _json_num(self.put),
            "priceable": self.priceable,
        }


def _fmt(v: float) -> str:
    return f"{v:.12g}"


def _json_num(v: float):
    return None if math.isnan(v) else float(f"{v:.12g}")


def evaluate_point(
    sc: Scenario, time: float, h: PBVector, base: PBVector | None = None
) -> TrajectoryPoint:
    """Map one state to a spot and price both legs at ``time``."""
    base = sc.reference if base is None else base
    H = human_impact(h, sc.g)
    dH = impact_delta(base, h, sc.g)
    spot, ok = stock_price(sc.mapping, dH)
    if ok:
        m = sc.market.at(time)
        c, p = call_price(spot, m), put_price(spot, m)
    else:
        c = p = math.nan
    return TrajectoryPoint(time, h, H, dH, spot, c, p, ok)


def run_scenario(sc: Scenario, delta_mode: DeltaMode = "reference") -> list[TrajectoryPoint]:
    """Evaluate every step in time order.

    ``delta_mode="reference"`` measures the impact change against the fixed
    reference state; ``"step"`` measures it against the previous step (the
    reference for the first step). Unpriceable steps are kept with
    ``priceable=False`` and NaN option values.
    """
    if delta_mode not in ("reference", "step"):
        raise EsoptError(f"delta_mode: expected 'reference' or 'step', got {delta_mode!r}")
    out = []
    base = sc.reference
    for st in sc.steps:
        out.append(evaluate_point(sc, st.time, st.h, base))
        if delta_mode == "step":
            base = st.h
    return out


def strike_from_target(sc: Scenario, h_target: PBVector) -> float:
    """Strike set by the mapped price of a declared target PB state."""
    return _target_strike(sc.mapping, sc.reference, h_target, sc.g)


def _target_strike(mapping, reference, h_target, g) -> float:
    value, ok = stock_price(mapping, impact_delta(reference, h_target, g))
    if not ok:
        raise UnpriceableStateError(value, f"h_target: maps to non-positive strike {value!r}")
    return value


# --------------------------------------------------------------------------
# JSON / CSV
# --------------------------------------------------------------------------

def _require(doc: Mapping, key: str, where: str):
    if not isinstance(doc, Mapping):
        raise EsoptError(f"{where}: expected a JSON object")
    if key not in doc:
        raise EsoptError(f"{where}.{key}: missing required field" if where else f"{key}: missing required field")
    return doc[key]


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise EsoptError(f"{name}: expected a number, got {value!r}")
    return float(value)


def load_scenario(doc: Mapping[str, Any], overrides: Mapping[str, float] | None = None) -> Scenario:
    """Build a :class:`Scenario` from its JSON document.

    ``overrides`` may replace ``s0``, ``alpha``, ``sigma``, ``r``, ``strike``
    and ``expiry``.
    """
    if not isinstance(doc, Mapping):
        raise EsoptError("scenario: expected a JSON object")
    ov = dict(overrides or {})
    mp = _require(doc, "mapping", "")
    mk = _require(doc, "market", "")
    pb = _require(doc, "pb", "")
    s0 = ov.get("s0", _number(_require(mp, "s0", "mapping"), "mapping.s0"))
    alpha = ov.get("alpha", _number(_require(mp, "alpha", "mapping"), "mapping.alpha"))
    mapping = MappingParams(s0, alpha)

    n = parse_dimension(_require(pb, "dimension", "pb"))
    labels = pb.get("labels")
    if labels is not None and len(labels) != n:
        raise DimensionMismatchError(f"pb.labels: expected {n} labels, got {len(labels)}")
    g = parse_matrix(pb.get("g"), n)

    def vec(raw, name):
        if not isinstance(raw, list) or len(raw) != n:
            got = len(raw) if isinstance(raw, list) else type(raw).__name__
            raise DimensionMismatchError(f"{name}: expected {n} entries, got {got}")
        return PBVector(raw, labels)

    reference = vec(_require(doc, "reference", ""), "reference")
    h_target = vec(doc["h_target"], "h_target") if doc.get("h_target") is not None else None

    sigma = ov.get("sigma", _number(_require(mk, "sigma", "market"), "market.sigma"))
    r = ov.get("r", _number(_require(mk, "r", "market"), "market.r"))
    expiry = ov.get("expiry", _number(_require(mk, "expiry", "market"), "market.expiry"))
    if "strike" in ov:
        strike = ov["strike"]
    elif mk.get("strike") is not None:
        strike = _number(mk["strike"], "market.strike")
    elif h_target is not None:
        strike = _target_strike(mapping, reference, h_target, g)
    else:
        strike = s0
    market = MarketParams(sigma=sigma, r=r, strike=strike, expiry=expiry)

    raw_steps = _require(doc, "steps", "")
    if not isinstance(raw_steps, list):
        raise EsoptError("steps: expected an array")
    steps = []
    for i, st in enumerate(raw_steps):
        try:
            t = _number(_require(st, "t", f"steps[{i}]"), f"steps[{i}].t")
            h = vec(_require(st, "h", f"steps[{i}]"), f"steps[{i}].h")
        except ScenarioError:
            raise
        except EsoptError as exc:
            raise ScenarioError(str(exc), i) from None
        steps.append(Step(t, h))
    return Scenario(mapping, market, g, reference, tuple(steps),
                    tuple(labels) if labels else None, h_target)


def scenario_to_dict(sc: Scenario) -> dict[str, Any]:
    pb: dict[str, Any] = {"dimension": sc.dimension}
    if sc.labels:
        pb["labels"] = list(sc.labels)
    if not sc.g.is_zero:
        pb["g"] = sc.g.entries.tolist()
    doc = {
        "mapping": {"s0": sc.mapping.s0, "alpha": sc.mapping.alpha},
        "market": {"sigma": sc.market.sigma, "r": sc.market.r,
                   "strike": sc.market.strike, "expiry": sc.market.expiry},
        "pb": pb,
        "reference": sc.reference.values.tolist(),
        "steps": [{"t": st.time, "h": st.h.values.tolist()} for st in sc.steps],
    }
    if sc.h_target is not None:
        doc["h_target"] = sc.h_target.values.tolist()
    return doc


def write_csv(points: Sequence[TrajectoryPoint], fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in points:
        w.writerow(p.row())


def to_csv(points: Sequence[TrajectoryPoint]) -> str:
    buf = io.StringIO()
    write_csv(points, buf)
    return buf.getvalue()


def to_json(points: Sequence[TrajectoryPoint]) -> str:
    return json.dumps([p.to_dict() for p in points], indent=2) + "\n"


# --------------------------------------------------------------------------
# The two worked examples
# --------------------------------------------------------------------------

EXAMPLE_LABELS = (
    "climate change",
    "ocean acidification",
    "rate of biosphere loss",
    "land system change",
    "global fresh water use",
    "biogeochemical flows",
    "atmospheric aerosol loading",
    "stratospheric ozone depletion",
    "chemical pollution",
)


def co2_capture_scenario(
    s0: float = 100.0,
    alpha: float = 50.0,
    sigma: float = 0.2,
    r: float = 0.03,
    expiry: float = 2.0,
    nsteps: int = 7,
    dt: float = 0.25,
    capture_per_step: float = 0.05,
) -> Scenario:
    """Direct CO2 capture: the climate reading falls linearly, all else fixed, no coupling."""
    ref = np.array([1.5, 1.2, 1.1, 1.3, 0.8, 1.6, 0.9, 0.7, 1.0])
    steps = []
    for k in range(nsteps):
        h = ref.copy()
        h[0] -= capture_per_step * k
        steps.append(Step(k * dt, PBVector(h, EXAMPLE_LABELS)))
    return Scenario(
        MappingParams(s0, alpha),
        MarketParams(sigma=sigma, r=r, strike=s0, expiry=expiry),
        InteractionMatrix.zeros(9),
        PBVector(ref, EXAMPLE_LABELS),
        tuple(steps),
        EXAMPLE_LABELS,
    )


def ocean_coupling_scenario(
    s0: float = 100.0,
    alpha: float = 20.0,
    sigma: float = 0.2,
    r: float = 0.03,
    expiry: float = 2.0,
    self_coupling: float = 1.0,
    fraction: float = 0.1,
    nsteps: int = 7,
    dt: float = 0.25,
) -> Scenario:
    """CO2 / ocean-acidity pair with a cross term ``fraction`` of the linear terms.

    At the reference state ``h = (1, 1)`` the pair term ``2 g12 h1 h2`` equals
    ``fraction * (h1 + h2)``. Both readings then decline together.
    """
    ref = np.array([1.0, 1.0])
    g12 = coupling_for_fraction(ref[0], ref[1], fraction)
    g = InteractionMatrix([[self_coupling, g12], [g12, self_coupling]])
    labels = EXAMPLE_LABELS[:2]
    steps = []
    for k in range(nsteps):
        h = ref * (1.0 - 0.05 * k)
        steps.append(Step(k * dt, PBVector(h, labels)))
    return Scenario(
        MappingParams(s0, alpha),
        MarketParams(sigma=sigma, r=r, strike=s0, expiry=expiry),
        g,
        PBVector(ref, labels),
        tuple(steps),
        labels,
    )
