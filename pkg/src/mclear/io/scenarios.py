"""Seeded scenario generation for sample-average approximations.

Random numbers come from SplitMix64, a 64-bit generator simple enough to
re-implement in any language, so a (seed, spec) pair pins the scenario set
bit for bit.  Normal variates use the Box-Muller transform; both outputs of
each transform are consumed in order.

Published SplitMix64 outputs for seed 1234567:
    6457827717110365317, 3203168211198807973, 9817491932198370423,
    4593380528125082431, 16408922859458223821
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..model import MarketCase, ScenarioSet

_MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & _MASK
        self._spare: float | None = None

    def next_u64(self) -> int:
        self.state = (self.state + 0x9E3779B97F4A7C15) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Double in [0, 1) built from the top 53 bits."""
        return (self.next_u64() >> 11) * 2.0 ** -53

    def normal(self) -> float:
        if self._spare is not None:
            z, self._spare = self._spare, None
            return z
        u1, u2 = self.uniform(), self.uniform()
        r = math.sqrt(-2.0 * math.log(1.0 - u1))  # 1 - u1 is in (0, 1]
        t = 2.0 * math.pi * u2
        self._spare = r * math.sin(t)
        return r * math.cos(t)


class SpecError(ValueError):
    pass


KINDS = ("gen", "dem", "line")


@dataclass(frozen=True)
class EntitySpec:
    """Distribution of one uncertain capacity.

    ``dist`` is ``"normal"`` (draws clamped to [0, installed cap]) or
    ``"values"`` (an explicit list, one value per scenario).
    """

    kind: str
    id: int
    dist: str
    mean: float = 0.0
    sd: float = 0.0
    values: tuple = ()


@dataclass(frozen=True)
class ScenarioSpec:
    entities: tuple[EntitySpec, ...]
    count: int
    seed: int = 0
    version: int = field(default=1, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "entities", tuple(self.entities))
        problems = []
        if not isinstance(self.count, int) or self.count < 1:
            problems.append(f"count must be a positive integer, got {self.count!r}")
        for e in self.entities:
            if e.kind not in KINDS:
                problems.append(f"unknown entity kind {e.kind!r}")
            if e.dist == "normal":
                if not e.sd >= 0:
                    problems.append(f"{e.kind} {e.id}: sd must be >= 0")
            elif e.dist == "values":
                if isinstance(self.count, int) and len(e.values) != self.count:
                    problems.append(f"{e.kind} {e.id}: need {self.count} values")
            else:
                problems.append(f"{e.kind} {e.id}: unknown distribution {e.dist!r}")
        if problems:
            raise SpecError("; ".join(problems))


def parse_spec(text: str) -> ScenarioSpec:
    """Read a JSON scenario spec::

        {"version": 1, "count": 25, "seed": 7,
         "entities": [{"kind": "gen", "id": 55, "dist": "normal",
                       "mean": 300, "sd": 150}]}
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise SpecError("spec must be a JSON object")
    extra = set(raw) - {"version", "count", "seed", "entities"}
    if extra:
        raise SpecError(f"unknown keys {sorted(extra)}")
    if raw.get("version", 1) != 1:
        raise SpecError(f"unsupported spec version {raw.get('version')!r}")
    ents = []
    for e in raw.get("entities", []):
        extra = set(e) - {"kind", "id", "dist", "mean", "sd", "values"}
        if extra:
            raise SpecError(f"unknown entity keys {sorted(extra)}")
        try:
            ents.append(EntitySpec(e["kind"], int(e["id"]), e["dist"], float(e.get("mean", 0.0)),
                                   float(e.get("sd", 0.0)), tuple(float(v) for v in e.get("values", ()))))
        except (KeyError, TypeError, ValueError) as exc:
            raise SpecError(f"bad entity {e!r}: {exc}") from exc
    return ScenarioSpec(tuple(ents), raw.get("count", 0), int(raw.get("seed", 0)))


def clamped_normal(rng: SplitMix64, mean: float, sd: float, cap: float, k: int) -> np.ndarray:
    return np.array([min(max(mean + sd * rng.normal(), 0.0), cap) for _ in range(k)])


def generate_scenarios(spec: ScenarioSpec, case: MarketCase,
                       seed: int | None = None) -> ScenarioSet:
    """Equiprobable scenario set for ``case`` drawn according to ``spec``.

    Capacities not named in the spec stay at their installed value in every
    scenario.  Entities draw from one stream in spec order.
    """
    K = spec.count
    rng = SplitMix64(spec.seed if seed is None else seed)
    groups = {"gen": case.generators, "dem": case.demands, "line": case.lines}
    caps = {k: np.tile([x.installed_cap for x in v], (K, 1)).astype(float).reshape(K, len(v))
            for k, v in groups.items()}
    for e in spec.entities:
        pos = {x.id: i for i, x in enumerate(groups[e.kind])}
        if e.id not in pos:
            raise SpecError(f"{e.kind} {e.id} not in case")
        i = pos[e.id]
        cap = groups[e.kind][i].installed_cap
        if e.dist == "normal":
            caps[e.kind][:, i] = clamped_normal(rng, e.mean, e.sd, cap, K)
        else:
            caps[e.kind][:, i] = np.clip(e.values, 0.0, cap)
    return ScenarioSet(np.full(K, 1.0 / K), caps["gen"], caps["dem"], caps["line"])


def scenarios_to_json(sc: ScenarioSet) -> dict:
    """The ``scenarios`` section of a case file."""
    rows = lambda a: [[float(v) for v in r] for r in a]
    return {"probabilities": [float(v) for v in sc.probabilities],
            "gen_cap": rows(sc.gen_cap), "dem_cap": rows(sc.dem_cap),
            "line_cap": rows(sc.line_cap)}

