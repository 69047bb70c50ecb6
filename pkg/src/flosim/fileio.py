"""Circuit, map and matrix files (schema ``flosim/1``) and report serialisation.

Files are YAML (JSON is a subset).  Modes are numbered from 1 in files and
from 0 inside the library.  Complex numbers are written ``[re, im]``.
Every validation error carries the line of the offending value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import yaml

from .flo import Circuit, Measure, QuadraticHamiltonian, Unitary, hamiltonian_to_generator
from .gaussian import GaussianMap, GaussianState, vacuum_state
from .skewlin import NotAntisymmetricError, as_skew

SCHEMA = "flosim/1"
FILE_SKEW_TOL = 1e-9


class FileFormatError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.message = message
        self.line = line
        self.source = source
        where = source or "<input>"
        if line is not None:
            where = f"{where}:{line}"
        super().__init__(f"{where}: {message}")


# -- line-tracked loading ----------------------------------------------


class Loc:
    """A parsed value together with the (1-based) line it starts on."""

    __slots__ = ("value", "line")

    def __init__(self, value, line: int):
        self.value = value
        self.line = line

    def __repr__(self):
        return f"Loc({self.value!r}, line={self.line})"


_scalars = yaml.constructor.SafeConstructor()


def _wrap(node) -> Loc:
    line = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for knode, vnode in node.value:
            key = _scalars.construct_object(knode)
            if key in out:
                raise FileFormatError(f"duplicate key {key!r}", knode.start_mark.line + 1)
            out[key] = _wrap(vnode)
        return Loc(out, line)
    if isinstance(node, yaml.SequenceNode):
        return Loc([_wrap(v) for v in node.value], line)
    return Loc(_scalars.construct_object(node), line)


def load_text(text: str, source: str | None = None) -> Loc:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = None if mark is None else mark.line + 1
        raise FileFormatError(f"parse error: {getattr(exc, 'problem', exc)}", line, source) from None
    if node is None:
        raise FileFormatError("empty document", 1, source)
    try:
        return _wrap(node)
    except FileFormatError as exc:
        raise FileFormatError(exc.message, exc.line, source) from None


# -- typed accessors ---------------------------------------------------


class _Reader:
    def __init__(self, source: str | None):
        self.source = source

    def fail(self, msg: str, loc: Loc):
        raise FileFormatError(msg, loc.line, self.source)

    def mapping(self, loc: Loc, what: str) -> dict:
        if not isinstance(loc.value, dict):
            self.fail(f"{what} must be a mapping", loc)
        return loc.value

    def field(self, m: Loc, key: str, required: bool = True) -> Loc | None:
        d = self.mapping(m, "document")
        if key not in d:
            if required:
                self.fail(f"missing field {key!r}", m)
            return None
        return d[key]

    def real(self, loc: Loc, what: str) -> float:
        v = loc.value
        if isinstance(v, bool):
            self.fail(f"{what} must be a number, got {v!r}", loc)
        if isinstance(v, str):
            # YAML 1.1 reads exponents without a dot ("1e-10") as strings
            try:
                v = float(v)
            except ValueError:
                self.fail(f"{what} must be a number, got {v!r}", loc)
        if not isinstance(v, (int, float)):
            self.fail(f"{what} must be a number", loc)
        v = float(v)
        if not math.isfinite(v):
            self.fail(f"{what} must be finite", loc)
        return v

    def complex(self, loc: Loc, what: str) -> complex:
        if isinstance(loc.value, list):
            if len(loc.value) != 2:
                self.fail(f"{what} must be a number or an [re, im] pair", loc)
            return complex(self.real(loc.value[0], what), self.real(loc.value[1], what))
        return complex(self.real(loc, what))

    def integer(self, loc: Loc, what: str) -> int:
        v = loc.value
        if isinstance(v, bool) or not isinstance(v, int):
            self.fail(f"{what} must be an integer, got {v!r}", loc)
        return v

    def matrix(self, loc: Loc, what: str, dim: int | None = None, complex_: bool = False) -> np.ndarray:
        rows = loc.value
        if not isinstance(rows, list) or not rows:
            self.fail(f"{what} must be a non-empty list of rows", loc)
        width = dim if dim is not None else len(rows)
        if len(rows) != width:
            self.fail(f"{what} needs {width} rows, got {len(rows)}", loc)
        out = np.zeros((width, width), dtype=complex if complex_ else float)
        for i, row in enumerate(rows):
            if not isinstance(row.value, list):
                self.fail(f"{what} row {i + 1} must be a list", row)
            if len(row.value) != width:
                self.fail(f"{what} row {i + 1} has length {len(row.value)}, expected {width}", row)
            for j, x in enumerate(row.value):
                out[i, j] = self.complex(x, what) if complex_ else self.real(x, what)
        return out

    def skew(self, loc: Loc, what: str, dim: int | None = None, complex_: bool = False) -> np.ndarray:
        M = self.matrix(loc, what, dim, complex_)
        if M.shape[0] % 2:
            self.fail(f"{what} has odd dimension {M.shape[0]}", loc)
        try:
            return as_skew(M, tol=FILE_SKEW_TOL)
        except NotAntisymmetricError:
            self.fail(f"{what} is not antisymmetric to {FILE_SKEW_TOL:g}", loc)

    def schema(self, doc: Loc) -> None:
        self.mapping(doc, "document")
        v = self.field(doc, "schema_version")
        if v.value != SCHEMA:
            self.fail(f"unrecognised schema_version {v.value!r}, expected {SCHEMA!r}", v)

    def mode(self, loc: Loc, n: int) -> int:
        k = self.integer(loc, "mode")
        if not 1 <= k <= n:
            self.fail(f"mode {k} out of range 1..{n}", loc)
        return k - 1


# -- circuit files -----------------------------------------------------


@dataclass(frozen=True)
class CircuitFile:
    circuit: Circuit
    initial: GaussianState
    seed: int | None = None
    op_lines: tuple[int, ...] = ()


def _amplitudes(r: _Reader, loc: Loc | None, n: int, what: str) -> dict:
    """Sparse complex entries ``[{j, k, value}]`` with 1-based ``j < k``."""
    out: dict[tuple[int, int], complex] = {}
    if loc is None:
        return out
    if not isinstance(loc.value, list):
        r.fail(f"{what} must be a list of {{j, k, value}} entries", loc)
    for entry in loc.value:
        r.mapping(entry, f"{what} entry")
        j = r.mode(r.field(entry, "j"), n)
        k = r.mode(r.field(entry, "k"), n)
        if j >= k:
            r.fail(f"{what} entry needs j < k", entry)
        if (j, k) in out:
            r.fail(f"duplicate {what} entry ({j + 1}, {k + 1})", entry)
        out[(j, k)] = r.complex(r.field(entry, "value"), what)
    return out


def _op(r: _Reader, loc: Loc, n: int):
    r.mapping(loc, "op")
    kind = r.field(loc, "kind")
    d = 2 * n
    if kind.value == "unitary":
        g = r.skew(r.field(loc, "generator"), "generator", d)
        t = r.field(loc, "time", required=False)
        return Unitary(g, 1.0 if t is None else r.real(t, "time"))
    if kind.value == "hamiltonian":
        eps_loc = r.field(loc, "eps")
        if not isinstance(eps_loc.value, list) or len(eps_loc.value) != n:
            r.fail(f"eps must list {n} on-site energies", eps_loc)
        eps = [r.real(e, "eps") for e in eps_loc.value]
        h = QuadraticHamiltonian(
            n,
            eps,
            _amplitudes(r, r.field(loc, "t", required=False), n, "t"),
            _amplitudes(r, r.field(loc, "s", required=False), n, "s"),
        )
        t = r.field(loc, "time", required=False)
        time = 1.0 if t is None else r.real(t, "time")
        # physical evolution exp(-i H time)
        return Unitary(hamiltonian_to_generator(h), -time)
    if kind.value == "measure":
        mode = r.mode(r.field(loc, "mode"), n)
        out = r.field(loc, "outcome", required=False)
        if out is None or out.value == "sample":
            return Measure(mode)
        if isinstance(out.value, bool) or out.value not in (0, 1):
            r.fail(f"outcome must be \"sample\", 0 or 1, got {out.value!r}", out)
        return Measure(mode, int(out.value))
    r.fail(f"unknown op kind {kind.value!r}", kind)


def parse_circuit(text: str, source: str | None = None) -> CircuitFile:
    r = _Reader(source)
    doc = load_text(text, source)
    r.schema(doc)
    n = r.integer(r.field(doc, "n_modes"), "n_modes")
    if n < 1:
        r.fail("n_modes must be positive", r.field(doc, "n_modes"))
    init = r.field(doc, "initial", required=False)
    if init is None or init.value == "vacuum":
        initial = vacuum_state(n)
    elif init.value == "maximally_mixed":
        initial = GaussianState(n, np.zeros((2 * n, 2 * n)))
    else:
        M = r.skew(init, "initial", 2 * n)
        try:
            initial = GaussianState(n, M)
        except ValueError as exc:
            r.fail(f"initial: {exc}", init)
    ops_loc = r.field(doc, "ops", required=False)
    ops, lines = [], []
    if ops_loc is not None:
        if not isinstance(ops_loc.value, list):
            r.fail("ops must be a list", ops_loc)
        for o in ops_loc.value:
            ops.append(_op(r, o, n))
            lines.append(o.line)
    seed_loc = r.field(doc, "seed", required=False)
    seed = None
    if seed_loc is not None and seed_loc.value is not None:
        seed = r.integer(seed_loc, "seed")
        if seed < 0:
            r.fail("seed must be non-negative", seed_loc)
    return CircuitFile(Circuit(n, tuple(ops)), initial, seed, tuple(lines))


def parse_map(text: str, source: str | None = None) -> GaussianMap:
    r = _Reader(source)
    doc = load_text(text, source)
    r.schema(doc)
    n = r.integer(r.field(doc, "n_modes"), "n_modes")
    if n < 1:
        r.fail("n_modes must be positive", r.field(doc, "n_modes"))
    d = 2 * n
    A = r.skew(r.field(doc, "A"), "A", d, complex_=True)
    B = r.matrix(r.field(doc, "B"), "B", d, complex_=True)
    D = r.skew(r.field(doc, "D"), "D", d, complex_=True)
    C = r.complex(r.field(doc, "C"), "C")
    return GaussianMap(n, A, B, D, C)


def parse_matrix(text: str, source: str | None = None) -> np.ndarray:
    """Antisymmetric matrix under key ``matrix``; real unless an entry is complex."""
    r = _Reader(source)
    doc = load_text(text, source)
    r.schema(doc)
    loc = r.field(doc, "matrix")
    M = r.matrix(loc, "matrix", complex_=True)
    if M.shape[0] % 2:
        r.fail(f"matrix has odd dimension {M.shape[0]}", loc)
    if not np.any(M.imag):
        M = M.real
    try:
        return as_skew(M, tol=FILE_SKEW_TOL)
    except NotAntisymmetricError:
        r.fail(f"matrix is not antisymmetric to {FILE_SKEW_TOL:g}", loc)


# -- output ------------------------------------------------------------


def encode_number(x):
    """Floats stay floats (``repr`` round-trips); complex values become ``[re, im]``."""
    if isinstance(x, (complex, np.complexfloating)):
        x = complex(x)
        if x.imag == 0:
            return float(x.real)
        return [float(x.real), float(x.imag)]
    if isinstance(x, (np.integer,)):
        return int(x)
    return float(x)


def encode_matrix(M) -> list:
    M = np.asarray(M)
    return [[encode_number(v) for v in row] for row in M]


def decode_matrix(rows) -> np.ndarray:
    return np.array(
        [[complex(*v) if isinstance(v, list) else v for v in row] for row in rows]
    )


def dumps(obj) -> str:
    """Deterministic JSON; Python's float repr is the shortest exact round-trip."""
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"
