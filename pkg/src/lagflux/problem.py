"""Problem files and result reports.

A problem file is plain UTF-8 text made of ``[block]`` headers followed by
``key = value`` lines.  Blank lines and lines starting with ``#`` are
ignored.  Values are typed on read:

* ``3``, ``-2``            integers
* ``1/20``, ``0.5``        exact rationals (decimals are read exactly)
* ``inf``                  positive infinity
* ``unknown``              an unknown value
* ``true`` / ``false``     booleans
* ``1, 3``                 a list of any of the above
* ``1, 0; 0, 1``           a list of lists
* anything else            a bare string

Three blocks are recognised.  ``[problem]`` holds ``family``, ``[params]``
the family parameters and the optional ``[dynamics]`` block the numerical
settings ``eps``, ``delta``, ``dt``, ``samples``, ``T_max`` and ``seed``.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from .engine import InvariantBound
from .errors import ProblemParseError

FAMILIES = ("toric", "split", "chekanov", "surface", "cpn", "s2s2", "custom-model")
DYNAMICS_KEYS = ("eps", "delta", "dt", "samples", "T_max", "seed")
BLOCKS = ("problem", "params", "dynamics")

Scalar = Union[int, Fraction, float, bool, str, None]
Value = Union[Scalar, List["Value"]]

_NUMBER = re.compile(r"^[+-]?(\d+(\.\d*)?|\.\d+)([eE][+-]?\d+)?$")
_RATIO = re.compile(r"^[+-]?\d+/\d+$")
_KEY = re.compile(r"^[A-Za-z_][A-Za-z0-9_-]*$")


class Unknown:
    """Marker for the literal ``unknown``; compares equal to other markers."""

    def __eq__(self, other):
        return isinstance(other, Unknown)

    def __hash__(self):
        return hash("unknown")

    def __repr__(self):
        return "unknown"


UNKNOWN = Unknown()


def parse_scalar(text: str) -> Scalar:
    t = text.strip()
    low = t.lower()
    if low == "inf":
        return math.inf
    if low == "unknown":
        return UNKNOWN
    if low in ("true", "false"):
        return low == "true"
    if _RATIO.match(t):
        num, den = t.split("/")
        if int(den) == 0:
            raise ValueError("zero denominator")
        v = Fraction(int(num), int(den))
        return v.numerator if v.denominator == 1 else v
    if _NUMBER.match(t):
        if re.match(r"^[+-]?\d+$", t):
            return int(t)
        v = Fraction(t)
        return v.numerator if v.denominator == 1 else v
    return t


def parse_value(text: str) -> Value:
    if ";" in text:
        return [parse_value(part) if "," in part else [parse_scalar(part)] for part in text.split(";")]
    if "," in text:
        return [parse_scalar(part) for part in text.split(",")]
    return parse_scalar(text)


def render_value(v: Value) -> str:
    if isinstance(v, list):
        if v and all(isinstance(e, list) for e in v):
            return "; ".join(", ".join(render_value(x) for x in row) for row in v)
        return ", ".join(render_value(x) for x in v)
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Unknown):
        return "unknown"
    if isinstance(v, float) and math.isinf(v) and v > 0:
        return "inf"
    if isinstance(v, Fraction):
        return str(v)
    return str(v)


@dataclass
class ProblemFile:
    """One family, its parameters and optional dynamics settings."""

    family: str
    params: Dict[str, Value] = field(default_factory=dict)
    dynamics: Dict[str, Value] = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {', '.join(FAMILIES)}")
        bad = set(self.dynamics) - set(DYNAMICS_KEYS)
        if bad:
            raise ValueError(f"unknown dynamics keys {sorted(bad)}")

    @classmethod
    def parse(cls, text: str) -> "ProblemFile":
        blocks: Dict[str, Dict[str, Value]] = {}
        where: Dict[str, Tuple[int, int]] = {}
        current: Optional[str] = None
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.rstrip()
            stripped = line.strip()
            col = len(line) - len(line.lstrip()) + 1
            if not stripped or stripped.startswith("#"):
                continue
            if stripped.startswith("["):
                if not stripped.endswith("]"):
                    raise ProblemParseError("unterminated block header", lineno, col + len(stripped))
                name = stripped[1:-1].strip()
                if name not in BLOCKS:
                    raise ProblemParseError(f"unknown block [{name}]", lineno, col + 1)
                if name in blocks:
                    raise ProblemParseError(f"block [{name}] appears twice", lineno, col + 1)
                blocks[name] = {}
                current = name
                continue
            if "=" not in stripped:
                raise ProblemParseError("expected 'key = value'", lineno, col)
            if current is None:
                raise ProblemParseError("key outside of any block", lineno, col)
            key, _, rest = stripped.partition("=")
            key = key.strip()
            if not _KEY.match(key):
                raise ProblemParseError(f"invalid key {key!r}", lineno, col)
            if key in blocks[current]:
                raise ProblemParseError(f"duplicate key {key!r}", lineno, col)
            value_col = line.index("=") + 2 + (len(rest) - len(rest.lstrip()))
            if not rest.strip():
                raise ProblemParseError(f"missing value for {key!r}", lineno, value_col)
            try:
                blocks[current][key] = parse_value(rest)
            except (ValueError, ZeroDivisionError) as exc:
                raise ProblemParseError(f"bad value for {key!r}: {exc}", lineno, value_col) from None
            where[f"{current}.{key}"] = (lineno, col)
        head = blocks.get("problem", {})
        if "family" not in head:
            raise ProblemParseError("missing 'family' in [problem]", 1, 1)
        family = head["family"]
        if family not in FAMILIES:
            line, col = where["problem.family"]
            raise ProblemParseError(f"unknown family {family!r}", line, col)
        extra = set(head) - {"family"}
        if extra:
            line, col = where[f"problem.{sorted(extra)[0]}"]
            raise ProblemParseError(f"unexpected key {sorted(extra)[0]!r} in [problem]", line, col)
        dyn = blocks.get("dynamics", {})
        for key in dyn:
            if key not in DYNAMICS_KEYS:
                line, col = where[f"dynamics.{key}"]
                raise ProblemParseError(f"unknown dynamics key {key!r}", line, col)
        return cls(family, blocks.get("params", {}), dyn)

    @classmethod
    def read(cls, path) -> "ProblemFile":
        with open(path, encoding="utf-8") as fh:
            return cls.parse(fh.read())

    def render(self) -> str:
        out = ["[problem]", f"family = {self.family}"]
        if self.params:
            out += ["", "[params]"] + [f"{k} = {render_value(v)}" for k, v in self.params.items()]
        if self.dynamics:
            out += ["", "[dynamics]"] + [f"{k} = {render_value(v)}" for k, v in self.dynamics.items()]
        return "\n".join(out) + "\n"


# --- reports -------------------------------------------------------------------------

SOURCES = ("theorem", "simulation")


def _json_number(v) -> object:
    if v is None or isinstance(v, Unknown):
        return "unknown"
    if isinstance(v, bool):
        return v
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else v.numerator
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


@dataclass(frozen=True)
class ReportField:
    """A named number together with where it came from."""

    name: str
    value: object
    source: str
    tag: Optional[str] = None

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, not {self.source!r}")


@dataclass
class ResultReport:
    """What a command produced: theorem values and simulation measurements."""

    command: str
    family: str
    fields: List[ReportField] = field(default_factory=list)
    ok: bool = True
    notes: List[str] = field(default_factory=list)

    def theorem(self, name: str, value, tag: Optional[str] = None) -> None:
        self.fields.append(ReportField(name, value, "theorem", tag))

    def simulation(self, name: str, value) -> None:
        self.fields.append(ReportField(name, value, "simulation"))

    def add_bound(self, bound: InvariantBound) -> None:
        self.theorem("lower", bound.lower, bound.lower_source)
        self.theorem("upper", bound.upper, bound.upper_source)
        self.theorem("exact", bound.exact)

    def get(self, name: str) -> ReportField:
        for f in self.fields:
            if f.name == name:
                return f
        raise KeyError(name)

    def to_dict(self) -> Dict[str, object]:
        return {
            "command": self.command,
            "family": self.family,
            "ok": self.ok,
            "fields": [
                {"name": f.name, "value": _json_number(f.value), "source": f.source, "tag": f.tag}
                for f in self.fields
            ],
            "notes": list(self.notes),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False)

    def to_text(self) -> str:
        lines = [f"{self.command} ({self.family}): {'ok' if self.ok else 'FAILED'}"]
        width = max((len(f.name) for f in self.fields), default=0)
        for f in self.fields:
            shown = render_value(f.value) if not isinstance(f.value, float) or math.isinf(f.value) \
                else f"{f.value:.6g}"
            if f.value is None:
                shown = "unknown"
            tag = f" [{f.tag}]" if f.tag else ""
            lines.append(f"  {f.name:<{width}}  {shown}{tag}  ({f.source})")
        lines += [f"  note: {n}" for n in self.notes]
        return "\n".join(lines)
