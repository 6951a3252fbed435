"""Dataset model, ARFF/CSV reading and writing, encodings and distances."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

NUMERIC = "numeric"
NOMINAL = "nominal"

EUCLIDEAN = "euclidean_normalized"
MANHATTAN = "manhattan_binarized"
METRICS = (EUCLIDEAN, MANHATTAN)

# per-block contribution of a missing value (|diff| for numeric, one-hot block for nominal)
NUMERIC_MISSING_PENALTY = 1.0
NOMINAL_MISSING_PENALTY = 2.0


class ParseError(ValueError):
    """Raised for malformed ARFF/CSV input. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str
    values: tuple[str, ...] = ()
    index: int = 0

    def __post_init__(self):
        if self.kind not in (NUMERIC, NOMINAL):
            raise ValueError(f"unknown attribute kind {self.kind!r}")
        if self.kind == NOMINAL:
            if not self.values:
                raise ValueError(f"nominal attribute {self.name!r} has no values")
            if len(set(self.values)) != len(self.values):
                raise ValueError(f"nominal attribute {self.name!r} has duplicate values")

    @property
    def is_numeric(self) -> bool:
        return self.kind == NUMERIC

    def value_index(self, value: str) -> int:
        return self._lookup[value]

    @cached_property
    def _lookup(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.values)}


@dataclass(frozen=True)
class Instance:
    """One row. ``values`` holds floats (numeric), strings (nominal) or None (missing)."""

    id: int
    values: tuple
    label: str


@dataclass(frozen=True, eq=False)
class Dataset:
    attributes: tuple[Attribute, ...]
    class_attribute: Attribute
    instances: tuple[Instance, ...]
    relation: str = "data"

    def __post_init__(self):
        names = [a.name for a in self.attributes] + [self.class_attribute.name]
        if len(set(names)) != len(names):
            raise ValueError("attribute names must be unique")
        if self.class_attribute.kind != NOMINAL:
            raise ValueError("class attribute must be nominal")

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.relation == other.relation
            and self.attributes == other.attributes
            and self.class_attribute == other.class_attribute
            and self.instances == other.instances
        )

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def classes(self) -> tuple[str, ...]:
        return self.class_attribute.values

    @cached_property
    def ids(self) -> np.ndarray:
        return np.array([inst.id for inst in self.instances], dtype=np.int64)

    @cached_property
    def y(self) -> np.ndarray:
        """Class labels as indices into ``classes``."""
        cls = self.class_attribute
        return np.array([cls.value_index(i.label) for i in self.instances], dtype=np.int64)

    @cached_property
    def numeric(self) -> np.ndarray:
        """n x d float matrix; NaN for missing values and for nominal columns."""
        out = np.full((len(self.instances), len(self.attributes)), np.nan)
        for j, attr in enumerate(self.attributes):
            if attr.is_numeric:
                out[:, j] = [np.nan if i.values[j] is None else i.values[j] for i in self.instances]
        return out

    @cached_property
    def codes(self) -> np.ndarray:
        """n x d int matrix of nominal value indices; -1 for missing and numeric columns."""
        out = np.full((len(self.instances), len(self.attributes)), -1, dtype=np.int64)
        for j, attr in enumerate(self.attributes):
            if not attr.is_numeric:
                out[:, j] = [-1 if i.values[j] is None else attr.value_index(i.values[j])
                             for i in self.instances]
        return out

    @cached_property
    def missing(self) -> np.ndarray:
        return np.array([[v is None for v in i.values] for i in self.instances],
                        dtype=bool).reshape(len(self.instances), len(self.attributes))

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=len(self.classes))

    def subset(self, positions: Iterable[int]) -> "Dataset":
        """Rows at ``positions`` (in the given order); instance ids are kept."""
        rows = tuple(self.instances[p] for p in positions)
        return Dataset(self.attributes, self.class_attribute, rows, self.relation)

    def with_columns(self, attributes: Sequence[Attribute],
                     columns: Sequence[Sequence]) -> "Dataset":
        """Append attributes with per-instance values ``columns[k][row]``."""
        if not attributes:
            return self
        start = len(self.attributes)
        new_attrs = self.attributes + tuple(
            Attribute(a.name, a.kind, a.values, start + k) for k, a in enumerate(attributes))
        rows = tuple(
            Instance(inst.id, inst.values + tuple(col[r] for col in columns), inst.label)
            for r, inst in enumerate(self.instances))
        return Dataset(new_attrs, self.class_attribute, rows, self.relation)


# ---------------------------------------------------------------------------
# parsing

def _is_number(text: str) -> bool:
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def _build(relation, columns, class_index, rows, kinds, domains, line_numbers):
    attrs = []
    k = 0
    for j, name in enumerate(columns):
        if j == class_index:
            continue
        attrs.append(Attribute(name, kinds[j], tuple(domains[j]) if kinds[j] == NOMINAL else (), k))
        k += 1
    if kinds[class_index] != NOMINAL or not domains[class_index]:
        raise ParseError(f"class attribute {columns[class_index]!r} must be nominal")
    cls = Attribute(columns[class_index], NOMINAL, tuple(domains[class_index]), len(attrs))
    instances = []
    for r, (row, line) in enumerate(zip(rows, line_numbers)):
        label = row[class_index]
        if label is None:
            raise ParseError("missing class label", line)
        values = []
        for j, cell in enumerate(row):
            if j == class_index:
                continue
            if cell is None:
                values.append(None)
            elif kinds[j] == NUMERIC:
                values.append(float(cell))
            else:
                values.append(cell)
        instances.append(Instance(r, tuple(values), label))
    return Dataset(tuple(attrs), cls, tuple(instances), relation)


def _resolve_class(columns: list[str], class_column: str | None) -> int:
    if class_column is None:
        return len(columns) - 1
    if class_column not in columns:
        raise ParseError(f"class column {class_column!r} not found")
    return columns.index(class_column)


def _split_arff_row(line: str, lineno: int) -> list[str | None]:
    """Split a comma-separated ARFF row, honoring single and double quotes."""
    cells: list[str | None] = []
    buf: list[str] = []
    quote = None
    quoted = False
    i = 0
    while i < len(line):
        ch = line[i]
        if quote:
            if ch == "\\" and i + 1 < len(line):
                buf.append(line[i + 1])
                i += 1
            elif ch == quote:
                quote = None
            else:
                buf.append(ch)
        elif ch in "'\"":
            quote = ch
            quoted = True
        elif ch == ",":
            cells.append(_arff_cell(buf, quoted))
            buf, quoted = [], False
        else:
            buf.append(ch)
        i += 1
    if quote:
        raise ParseError("unterminated quote", lineno)
    cells.append(_arff_cell(buf, quoted))
    return cells


def _arff_cell(buf, quoted):
    text = "".join(buf)
    if not quoted:
        text = text.strip()
        if text == "?":
            return None
    return text


def _parse_arff_name(rest: str, lineno: int) -> tuple[str, str]:
    rest = rest.strip()
    if not rest:
        raise ParseError("attribute name missing", lineno)
    if rest[0] in "'\"":
        quote, buf, i = rest[0], [], 1
        while i < len(rest):
            ch = rest[i]
            if ch == "\\" and i + 1 < len(rest):
                buf.append(rest[i + 1])
                i += 2
                continue
            if ch == quote:
                return "".join(buf), rest[i + 1:].strip()
            buf.append(ch)
            i += 1
        raise ParseError("unterminated attribute name", lineno)
    parts = rest.split(None, 1)
    if len(parts) < 2:
        raise ParseError(f"attribute {parts[0]!r} has no type", lineno)
    return parts[0], parts[1].strip()


def _parse_arff(text: str, class_column: str | None) -> Dataset:
    relation = "data"
    columns: list[str] = []
    kinds: list[str] = []
    domains: list[list[str]] = []
    rows: list[list[str | None]] = []
    line_numbers: list[int] = []
    in_data = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            lower = line.lower()
            if lower.startswith("@relation"):
                relation = line[len("@relation"):].strip().strip("'\"") or "data"
            elif lower.startswith("@attribute"):
                name, spec = _parse_arff_name(line[len("@attribute"):], lineno)
                if spec.startswith("{"):
                    if not spec.endswith("}"):
                        raise ParseError("unterminated nominal value list", lineno)
                    values = [v for v in _split_arff_row(spec[1:-1], lineno)]
                    if any(v is None or v == "" for v in values):
                        raise ParseError("empty nominal value", lineno)
                    if len(set(values)) != len(values):
                        raise ParseError("duplicate nominal value", lineno)
                    kinds.append(NOMINAL)
                    domains.append(values)
                elif spec.lower() in ("numeric", "real", "integer"):
                    kinds.append(NUMERIC)
                    domains.append([])
                else:
                    raise ParseError(f"unsupported attribute type {spec!r}", lineno)
                if name in columns:
                    raise ParseError(f"duplicate attribute name {name!r}", lineno)
                columns.append(name)
            elif lower.startswith("@data"):
                if not columns:
                    raise ParseError("@data before any @attribute", lineno)
                in_data = True
            else:
                raise ParseError(f"unexpected header line {line!r}", lineno)
            continue
        if line.startswith("{"):
            raise ParseError("sparse ARFF rows are not supported", lineno)
        cells = _split_arff_row(line, lineno)
        if len(cells) != len(columns):
            raise ParseError(f"expected {len(columns)} values, got {len(cells)}", lineno)
        for j, cell in enumerate(cells):
            if cell is None:
                continue
            if kinds[j] == NUMERIC:
                if not _is_number(cell):
                    raise ParseError(f"non-numeric value {cell!r} for {columns[j]!r}", lineno)
            elif cell not in domains[j]:
                raise ParseError(f"unknown nominal value {cell!r} for {columns[j]!r}", lineno)
        rows.append(cells)
        line_numbers.append(lineno)
    if not in_data:
        raise ParseError("no @data section")
    if not rows:
        raise ParseError("empty dataset")
    ci = _resolve_class(columns, class_column)
    return _build(relation, columns, ci, rows, kinds, domains, line_numbers)


def _parse_csv(text: str, class_column: str | None) -> Dataset:
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("missing header row", 1) from None
    header = [h.strip() for h in header]
    if not header or any(h == "" for h in header):
        raise ParseError("empty column name in header", 1)
    if len(set(header)) != len(header):
        raise ParseError("duplicate column names", 1)
    rows, line_numbers = [], []
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", reader.line_num)
        rows.append([None if c.strip() == "" else c.strip() for c in row])
        line_numbers.append(reader.line_num)
    if not rows:
        raise ParseError("empty dataset")
    ci = _resolve_class(header, class_column)
    kinds, domains = [], []
    for j in range(len(header)):
        cells = [r[j] for r in rows if r[j] is not None]
        # an all-missing column is vacuously numeric
        if j != ci and all(_is_number(c) for c in cells):
            kinds.append(NUMERIC)
            domains.append([])
        else:
            kinds.append(NOMINAL)
            domains.append(list(dict.fromkeys(cells)))
    return _build("data", header, ci, rows, kinds, domains, line_numbers)


def parse_dataset(source: bytes | str, format: str = "arff",
                  class_column: str | None = None) -> Dataset:
    """Parse ARFF or CSV content; the class column defaults to the last one."""
    text = source.decode("utf-8-sig") if isinstance(source, bytes) else source
    if format == "arff":
        return _parse_arff(text, class_column)
    if format == "csv":
        return _parse_csv(text, class_column)
    raise ValueError(f"unknown format {format!r}")


def read_dataset(path, class_column: str | None = None, format: str | None = None) -> Dataset:
    path = str(path)
    if format is None:
        format = "csv" if path.lower().endswith(".csv") else "arff"
    with open(path, "rb") as fh:
        ds = parse_dataset(fh.read(), format, class_column)
    if format == "csv":
        # CSV has no relation line; name the dataset after its file
        ds = replace(ds, relation=Path(path).stem)
    return ds


# ---------------------------------------------------------------------------
# writing

def format_number(x: float) -> str:
    """Shortest decimal text that parses back to exactly ``x``."""
    if float(x).is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(float(x))


_ARFF_SPECIAL = set(" ,'\"{}%\t\\")


def _arff_quote(text: str) -> str:
    if text == "?" or text == "" or any(c in _ARFF_SPECIAL for c in text):
        return "'" + text.replace("\\", "\\\\").replace("'", "\\'") + "'"
    return text


def _arff_attr_line(attr: Attribute) -> str:
    if attr.is_numeric:
        kind = "numeric"
    else:
        kind = "{" + ",".join(_arff_quote(v) for v in attr.values) + "}"
    return f"@attribute {_arff_quote(attr.name)} {kind}"


def write_dataset(dataset: Dataset, format: str = "arff") -> bytes:
    """Serialize with the class attribute as the last column."""
    def cell(attr, value, missing):
        if value is None:
            return missing
        if attr.is_numeric:
            return format_number(value)
        return value

    if format == "arff":
        lines = [f"@relation {_arff_quote(dataset.relation)}", ""]
        lines += [_arff_attr_line(a) for a in dataset.attributes]
        lines += [_arff_attr_line(dataset.class_attribute), "", "@data"]
        for inst in dataset.instances:
            parts = ["?" if v is None else format_number(v) if a.is_numeric else _arff_quote(v)
                     for a, v in zip(dataset.attributes, inst.values)]
            parts.append(_arff_quote(inst.label))
            lines.append(",".join(parts))
        return ("\n".join(lines) + "\n").encode()
    if format == "csv":
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([a.name for a in dataset.attributes] + [dataset.class_attribute.name])
        for inst in dataset.instances:
            writer.writerow([cell(a, v, "") for a, v in zip(dataset.attributes, inst.values)]
                            + [inst.label])
        return buf.getvalue().encode()
    raise ValueError(f"unknown format {format!r}")


# ---------------------------------------------------------------------------
# encoding and distances

def choose_metric(dataset: Dataset) -> str:
    """Euclidean when more than half of the attributes are numeric, else Manhattan."""
    n_num = sum(a.is_numeric for a in dataset.attributes)
    return EUCLIDEAN if 2 * n_num > len(dataset.attributes) else MANHATTAN


@dataclass(frozen=True)
class Block:
    attribute: int
    start: int
    stop: int
    numeric: bool


@dataclass(frozen=True, eq=False)
class EncodedView:
    """Numeric vectors for a dataset under one metric.

    Numeric coordinates are min/max scaled with the reference statistics and
    clamped to [0, 1]; nominal attributes are one-hot blocks. Missing numeric
    coordinates are NaN and missing nominal blocks are all zero; ``missing``
    flags both per (row, attribute).
    """

    source: Dataset
    vectors: np.ndarray
    metric: str
    blocks: tuple[Block, ...]
    missing: np.ndarray
    minimum: np.ndarray = field(repr=False)
    maximum: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return len(self.vectors)

    def distance(self, i: int, j: int) -> float:
        """Distance between rows ``i`` and ``j`` (row positions in ``source``)."""
        if i == j:
            return 0.0
        return float(self._pair_matrix(np.array([i]), np.array([j]))[0, 0])

    def pairwise(self, rows: Sequence[int] | None = None,
                 cols: Sequence[int] | None = None) -> np.ndarray:
        """Distance matrix between two row sets (all rows by default)."""
        r = np.arange(len(self)) if rows is None else np.asarray(rows, dtype=np.int64)
        c = r if cols is None else np.asarray(cols, dtype=np.int64)
        out = self._pair_matrix(r, c)
        out[r[:, None] == c[None, :]] = 0.0
        return out

    @cached_property
    def full_matrix(self) -> np.ndarray:
        return self.pairwise()

    def _pair_matrix(self, r: np.ndarray, c: np.ndarray) -> np.ndarray:
        acc = np.zeros((len(r), len(c)))
        manhattan = self.metric == MANHATTAN
        for b in self.blocks:
            miss = self.missing[r, b.attribute][:, None] | self.missing[c, b.attribute][None, :]
            a = self.vectors[r, b.start:b.stop]
            z = self.vectors[c, b.start:b.stop]
            if b.numeric:
                diff = np.abs(a[:, 0][:, None] - z[:, 0][None, :])
                part = diff if manhattan else diff * diff
                part = np.where(miss, NUMERIC_MISSING_PENALTY, part)
            else:
                diff = np.abs(a[:, None, :] - z[None, :, :]).sum(axis=2)
                # one-hot: |diff| sum equals squared diff sum
                part = np.where(miss, NOMINAL_MISSING_PENALTY, diff)
            acc += part
        return acc if manhattan else np.sqrt(acc)


def encode(dataset: Dataset, metric: str | None = None,
           reference: Dataset | None = None) -> EncodedView:
    """Encode ``dataset`` for distance computations.

    Min/max statistics come from ``reference`` (defaults to ``dataset``
    itself); callers pass training folds only. A constant numeric attribute
    maps to 0.
    """
    metric = metric or choose_metric(dataset)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}")
    attrs = dataset.attributes
    if metric == EUCLIDEAN and not any(a.is_numeric for a in attrs):
        raise ValueError("euclidean_normalized needs at least one numeric attribute")
    if metric == MANHATTAN and all(a.is_numeric for a in attrs):
        raise ValueError("manhattan_binarized needs at least one nominal attribute")
    ref = reference if reference is not None else dataset
    with np.errstate(all="ignore"):
        lo = np.nanmin(np.where(np.isnan(ref.numeric), np.inf, ref.numeric), axis=0) \
            if len(ref) else np.zeros(len(attrs))
        hi = np.nanmax(np.where(np.isnan(ref.numeric), -np.inf, ref.numeric), axis=0) \
            if len(ref) else np.zeros(len(attrs))

    # euclidean: numeric block first; manhattan: one-hot blocks first
    numeric_first = metric == EUCLIDEAN
    order = sorted(range(len(attrs)), key=lambda j: (attrs[j].is_numeric != numeric_first, j))
    blocks, pos = [], 0
    for j in order:
        width = 1 if attrs[j].is_numeric else len(attrs[j].values)
        blocks.append(Block(j, pos, pos + width, attrs[j].is_numeric))
        pos += width
    n = len(dataset)
    vectors = np.zeros((n, pos))
    num, codes = dataset.numeric, dataset.codes
    for b in blocks:
        if b.numeric:
            span = hi[b.attribute] - lo[b.attribute]
            col = num[:, b.attribute]
            if not np.isfinite(span) or span <= 0:
                scaled = np.where(np.isnan(col), np.nan, 0.0)
            else:
                scaled = np.clip((col - lo[b.attribute]) / span, 0.0, 1.0)
            vectors[:, b.start] = scaled
        else:
            code = codes[:, b.attribute]
            known = code >= 0
            vectors[np.nonzero(known)[0], b.start + code[known]] = 1.0
    return EncodedView(dataset, vectors, metric, tuple(blocks), dataset.missing.copy(), lo, hi)


def distance(view: EncodedView, i: int, j: int) -> float:
    return view.distance(i, j)
