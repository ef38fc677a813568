"""Node placement for the simulated network.

A scenario consists of N transmit/receive pairs (users A_j and B_j), one
eavesdropper and one reflecting surface, all placed in a 2-D plane. Four
named configurations C1..C4 move the eavesdropper and the surface between
a fixed set of anchor points; everything is overridable through a plain
INI scenario file with sections [anchors], [params] and [run].

Default layout (meters), chosen so that the qualitative relations of the
named configurations hold (surface close to B1 for C1/C4, surface and
eavesdropper 5 m apart and far from the users for C2, eavesdropper close
to B1 for C3/C4):

    A1=(0,0)   B1=(60,0)   A2=(0,20)   B2=(60,20)
    Z=(58,2)   Y=(62,2)    W=(30,60)   V=(30,55)   X=(30,40)
"""

import configparser
import math
from dataclasses import dataclass, field

KIND_A = "A"
KIND_B = "B"
KIND_EVE = "E"
KIND_IRS = "IRS"

DEFAULT_USER_POINTS = {
    "A1": (0.0, 0.0),
    "B1": (60.0, 0.0),
    "A2": (0.0, 20.0),
    "B2": (60.0, 20.0),
}

DEFAULT_ANCHOR_POINTS = {
    "V": (30.0, 55.0),
    "W": (30.0, 60.0),
    "X": (30.0, 40.0),
    "Y": (62.0, 2.0),
    "Z": (58.0, 2.0),
}

# label -> (eavesdropper anchor, surface anchor)
NAMED_CONFIGS = {
    "C1": ("W", "Z"),
    "C2": ("W", "V"),
    "C3": ("Z", "V"),
    "C4": ("Y", "Z"),
}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True, order=True)
class NodeId:
    """Identity of one node: user A_j/B_j, the eavesdropper, or the surface."""

    kind: str
    pair: int = 0

    def __post_init__(self):
        if self.kind in (KIND_A, KIND_B):
            if self.pair < 1:
                raise ValueError(f"pair index must be >= 1, got {self.pair}")
        elif self.kind in (KIND_EVE, KIND_IRS):
            if self.pair != 0:
                raise ValueError(f"{self.kind} carries no pair index")
        else:
            raise ValueError(f"unknown node kind {self.kind!r}")

    @staticmethod
    def a(pair):
        return NodeId(KIND_A, pair)

    @staticmethod
    def b(pair):
        return NodeId(KIND_B, pair)

    @staticmethod
    def eve():
        return NodeId(KIND_EVE)

    @staticmethod
    def irs():
        return NodeId(KIND_IRS)

    @property
    def is_user(self):
        return self.kind in (KIND_A, KIND_B)

    def partner(self):
        if not self.is_user:
            raise ValueError("only users have a partner")
        other = KIND_B if self.kind == KIND_A else KIND_A
        return NodeId(other, self.pair)

    def __str__(self):
        if self.is_user:
            return f"{self.kind}{self.pair}"
        return self.kind


def user_nodes(n_pairs):
    """All users in power-vector order [A_1, B_1, ..., A_N, B_N]."""
    out = []
    for j in range(1, n_pairs + 1):
        out.append(NodeId.a(j))
        out.append(NodeId.b(j))
    return out


@dataclass(frozen=True)
class Geometry:
    """Immutable node -> 2-D position map for one scenario."""

    n_pairs: int
    positions: dict

    def __post_init__(self):
        needed = user_nodes(self.n_pairs) + [NodeId.eve(), NodeId.irs()]
        for node in needed:
            if node not in self.positions:
                raise ScenarioError(f"node {node} has no position")
        if len(self.positions) != len(needed):
            extra = set(self.positions) - set(needed)
            raise ScenarioError(f"unexpected nodes {sorted(map(str, extra))}")
        for i, a in enumerate(needed):
            for b in needed[i + 1 :]:
                if self.positions[a] == self.positions[b]:
                    raise ScenarioError(f"nodes {a} and {b} coincide")

    def nodes(self):
        return user_nodes(self.n_pairs) + [NodeId.eve(), NodeId.irs()]


def distance(geom, a, b):
    """Euclidean distance in meters between two placed nodes."""
    try:
        pa = geom.positions[a]
        pb = geom.positions[b]
    except KeyError as exc:
        raise ScenarioError(f"node {exc.args[0]} is not placed") from None
    return math.hypot(pa[0] - pb[0], pa[1] - pb[1])


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative scenario: anchor coordinates plus role assignments.

    `label` is one of C1..C4 (which fixes the eavesdropper/surface anchors
    and requires two pairs) or "custom" (roles given explicitly). User
    positions are anchor points named A1, B1, A2, ... Parameter overrides
    are raw key/value strings applied on top of the system defaults, and
    run defaults carry CLI-level settings read from a scenario file.
    """

    label: str = "custom"
    n_pairs: int = 2
    anchors: dict = field(default_factory=dict)
    eve_anchor: str = ""
    irs_anchor: str = ""
    param_overrides: dict = field(default_factory=dict)
    run_defaults: dict = field(default_factory=dict)


def default_scenario(label="C1", n_pairs=2, eve_anchor="", irs_anchor=""):
    """Scenario with the documented default coordinates.

    Named labels use the standard role table. For other pair counts the
    users are stacked in 20 m rows (A_j at x=0, B_j at x=60).
    """
    anchors = dict(DEFAULT_ANCHOR_POINTS)
    for j in range(1, n_pairs + 1):
        anchors[f"A{j}"] = (0.0, 20.0 * (j - 1))
        anchors[f"B{j}"] = (60.0, 20.0 * (j - 1))
    if label in NAMED_CONFIGS:
        eve_anchor, irs_anchor = NAMED_CONFIGS[label]
    elif not (eve_anchor and irs_anchor):
        raise ScenarioError("custom scenario needs eve_anchor and irs_anchor")
    return ScenarioConfig(
        label=label,
        n_pairs=n_pairs,
        anchors=anchors,
        eve_anchor=eve_anchor,
        irs_anchor=irs_anchor,
    )


def place_nodes(config):
    """Resolve a scenario into a concrete geometry.

    Named configurations are defined only for the two-pair layout; the
    eavesdropper and the surface are placed on their table anchors, and
    every referenced anchor must exist.
    """
    label = config.label
    if label in NAMED_CONFIGS:
        if config.n_pairs != 2:
            raise ScenarioError(f"named configuration {label} requires exactly 2 pairs")
        eve_name, irs_name = NAMED_CONFIGS[label]
    elif label == "custom":
        eve_name, irs_name = config.eve_anchor, config.irs_anchor
    else:
        raise ScenarioError(f"unknown configuration label {label!r}")

    def lookup(name):
        if name not in config.anchors:
            raise ScenarioError(f"unknown anchor name {name!r}")
        x, y = config.anchors[name]
        return (float(x), float(y))

    positions = {}
    for j in range(1, config.n_pairs + 1):
        positions[NodeId.a(j)] = lookup(f"A{j}")
        positions[NodeId.b(j)] = lookup(f"B{j}")
    positions[NodeId.eve()] = lookup(eve_name)
    positions[NodeId.irs()] = lookup(irs_name)
    return Geometry(n_pairs=config.n_pairs, positions=positions)


def _parse_point(text):
    parts = [p.strip() for p in text.replace(";", ",").split(",")]
    if len(parts) != 2:
        raise ScenarioError(f"expected 'x, y', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def load_scenario(path):
    """Read a scenario file (INI format, sections [anchors]/[params]/[run])."""
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ScenarioError(f"cannot read scenario file {path}")

    anchors = dict(DEFAULT_ANCHOR_POINTS)
    anchors.update(DEFAULT_USER_POINTS)
    if parser.has_section("anchors"):
        for key, value in parser.items("anchors"):
            anchors[key.upper()] = _parse_point(value)

    run = dict(parser.items("run")) if parser.has_section("run") else {}
    params = dict(parser.items("params")) if parser.has_section("params") else {}

    label = run.pop("config", "custom").strip()
    n_pairs = int(run.pop("pairs", 2))
    eve_anchor = run.pop("eve", "").strip().upper()
    irs_anchor = run.pop("irs", "").strip().upper()
    if label in NAMED_CONFIGS:
        eve_anchor, irs_anchor = NAMED_CONFIGS[label]
    return ScenarioConfig(
        label=label,
        n_pairs=n_pairs,
        anchors=anchors,
        eve_anchor=eve_anchor,
        irs_anchor=irs_anchor,
        param_overrides=params,
        run_defaults=run,
    )
