"""Urn declarations, validation and replacement-matrix expansion."""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np
from scipy.sparse.csgraph import connected_components

from .combinatorics import Composition, composition_rank, enumerate_compositions
from .errors import InvalidArgument, ModelError

__all__ = [
    "Mode",
    "UrnSpec",
    "ReplacementMatrix",
    "ValidationReport",
    "build_replacement_matrix",
    "validate",
    "check_irreducible",
]


class Mode(str, enum.Enum):
    WITHOUT_REPLACEMENT = "without_replacement"
    WITH_REPLACEMENT = "with_replacement"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_"))
        except ValueError:
            raise InvalidArgument(f"unknown sampling mode {value!r}") from None


def _int_matrix(core) -> np.ndarray:
    arr = np.asarray(core)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise InvalidArgument(f"core must be a non-empty square matrix, got shape {arr.shape}")
    if not np.all(np.equal(np.mod(arr, 1), 0)):
        raise InvalidArgument("core entries must be integers")
    out = arr.astype(np.int64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class UrnSpec:
    """A (k, s, b)-urn: core matrix, sample size, start and sampling mode.

    Construction only checks shapes.  Use :func:`validate` (or
    :meth:`require_valid`) for the model rules.  When ``b`` is omitted it is
    taken from the first row sum of the core.
    """

    core: np.ndarray
    s: int
    x0: tuple[int, ...]
    mode: Mode = Mode.WITHOUT_REPLACEMENT
    b: int | None = None
    b_declared: bool = field(default=False, compare=False)

    def __post_init__(self):
        core = _int_matrix(self.core)
        object.__setattr__(self, "core", core)
        if int(self.s) != self.s:
            raise InvalidArgument(f"s must be an integer, got {self.s!r}")
        object.__setattr__(self, "s", int(self.s))
        x0 = tuple(int(v) for v in self.x0)
        if len(x0) != core.shape[0]:
            raise InvalidArgument(f"x0 has {len(x0)} entries for a {core.shape[0]}-color core")
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.b is None:
            object.__setattr__(self, "b", int(core[0].sum()))
        else:
            object.__setattr__(self, "b", int(self.b))
            object.__setattr__(self, "b_declared", True)

    def _key(self):
        return (self.core.tobytes(), self.core.shape, self.s, self.x0, self.mode, self.b)

    def __eq__(self, other):
        if not isinstance(other, UrnSpec):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @property
    def k(self) -> int:
        return self.core.shape[0]

    @property
    def tau0(self) -> int:
        return sum(self.x0)

    def tau(self, n: int) -> int:
        return self.b * n + self.tau0

    def with_mode(self, mode) -> "UrnSpec":
        return UrnSpec(self.core, self.s, self.x0, Mode.parse(mode),
                       self.b if self.b_declared else None)

    def require_valid(self) -> "UrnSpec":
        report = validate(self)
        if not report.ok:
            msgs = "; ".join(f"{rule}: {msg}" for rule, msg in report.violations)
            raise ModelError(f"invalid urn spec: {msgs}")
        return self

    @property
    def is_irreducible(self) -> bool:
        return check_irreducible(self.core, self.s)

    def to_dict(self) -> dict[str, Any]:
        return {
            "k": self.k,
            "s": self.s,
            "b": self.b,
            "core": self.core.tolist(),
            "x0": list(self.x0),
            "mode": self.mode.value,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "UrnSpec":
        try:
            core = d["core"]
            s = d["s"]
            x0 = d["x0"]
        except KeyError as exc:
            raise InvalidArgument(f"spec is missing field {exc.args[0]!r}") from None
        spec = cls(core, s, x0, d.get("mode", Mode.WITHOUT_REPLACEMENT.value), d.get("b"))
        if "k" in d and int(d["k"]) != spec.k:
            raise InvalidArgument(f"declared k={d['k']} but core is {spec.k}x{spec.k}")
        return spec

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "UrnSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InvalidArgument(f"spec is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise InvalidArgument("spec JSON must be an object")
        return cls.from_dict(data)

    @classmethod
    def load(cls, path: str | Path) -> "UrnSpec":
        return cls.from_json(Path(path).read_text())


@dataclass(frozen=True)
class ReplacementMatrix:
    rows: np.ndarray
    compositions: tuple[Composition, ...]

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.compositions]

    def row(self, draw: Sequence[int]) -> np.ndarray:
        return self.rows[composition_rank(draw)]

    def __len__(self):
        return len(self.compositions)


@dataclass
class ValidationReport:
    violations: list[tuple[str, str]] = field(default_factory=list)
    irreducible: bool = False
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "violations": [{"rule": r, "message": m} for r, m in self.violations],
            "irreducible": self.irreducible,
            "warnings": list(self.warnings),
        }


def build_replacement_matrix(core, s: int) -> ReplacementMatrix:
    """Expand a core into the full replacement matrix.

    The row for sample ``c`` is ``c @ core / s``; it must be integral.
    """
    core = _int_matrix(core)
    k = core.shape[0]
    comps = enumerate_compositions(k, s)
    parts = np.array([c.parts for c in comps], dtype=np.int64)
    num = parts @ core
    bad = np.nonzero(np.any(num % s != 0, axis=1))[0]
    if bad.size:
        c = comps[bad[0]]
        raise ModelError(
            f"sample {c.label} gives non-integer additions {num[bad[0]].tolist()}/{s}; "
            "core rows must be congruent modulo s"
        )
    rows = num // s
    rows.setflags(write=False)
    return ReplacementMatrix(rows, tuple(comps))


def check_irreducible(core, s: int | None = None) -> bool:
    """Strong connectivity of the graph ``i -> j`` where ``(A + sI)[i, j] > 0``.

    The shift only touches the diagonal, so the answer does not depend on ``s``.
    """
    core = np.asarray(core)
    if core.ndim != 2 or core.shape[0] != core.shape[1] or core.shape[0] == 0:
        raise InvalidArgument(f"core must be a non-empty square matrix, got shape {core.shape}")
    k = core.shape[0]
    if k == 1:
        return True
    adj = (core > 0).astype(np.int8)
    np.fill_diagonal(adj, 0)
    n_comp, _ = connected_components(adj, directed=True, connection="strong")
    return n_comp == 1


def validate(spec: UrnSpec) -> ValidationReport:
    report = ValidationReport()
    core, s, b = spec.core, spec.s, spec.b
    k = spec.k

    if s < 1:
        report.violations.append(("sample_size", f"s must be at least 1, got {s}"))
    if b < 1:
        report.violations.append(("balance", f"balance factor b must be at least 1, got {b}"))

    sums = core.sum(axis=1)
    off = [i for i in range(k) if sums[i] != b]
    if off:
        detail = ", ".join(f"row {i + 1} sums to {int(sums[i])}" for i in off)
        report.violations.append(("balance", f"expected every row to sum to b={b}: {detail}"))

    for i in range(k):
        for j in range(k):
            v = int(core[i, j])
            if i != j and v < 0:
                report.violations.append(
                    ("tenability", f"off-diagonal entry ({i + 1},{j + 1}) = {v} is negative"))
            elif i == j and v < -s:
                report.violations.append(
                    ("tenability", f"diagonal entry ({i + 1},{i + 1}) = {v} is below -s = {-s}"))

    if spec.tau0 < s:
        report.violations.append(
            ("initial_total", f"initial total {spec.tau0} is smaller than the sample size {s}"))

    neg = [i + 1 for i, v in enumerate(spec.x0) if v < 0]
    if neg:
        report.violations.append(("initial_counts", f"negative initial counts for colors {neg}"))

    if s >= 1:
        residues = np.mod(core, s)
        bad = [i + 1 for i in range(1, k) if not np.array_equal(residues[i], residues[0])]
        if bad:
            report.violations.append(
                ("integrality",
                 f"rows {bad} are not congruent to row 1 modulo s={s}; "
                 "derived replacement rows would not be integers"))

    report.irreducible = check_irreducible(core)
    if not report.irreducible:
        report.warnings.append("core is reducible; asymptotic results do not apply")
    return report
