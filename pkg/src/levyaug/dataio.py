"""Delimited text formats for datasets, pseudo-example files and matrices.

A dataset file is a comment line declaring the format version, family and
dimension, a header row, then one example per row:

    # levyaug-dataset v1 family=poisson d=3
    y,t,x_1,x_2,x_3
    1,6.0,2,0,1

Vector families store the coordinates directly; Wishart rows store the
upper triangle of the symmetric matrix row-major (d(d+1)/2 columns named
m_1..).  Pseudo-example files carry the same feature block plus origin and
thinning metadata:

    # levyaug-pseudo v1 family=poisson d=3
    origin_id,alpha,y,t_tilde,x_1,x_2,x_3

Floats are written with repr so rewriting a file is byte-stable.  Errors
name the offending 1-based data row.
"""

from __future__ import annotations

import numpy as np

from .errors import DataFormatError, LevyAugError, ParameterError, SupportError
from .families import (
    Example,
    FamilyKind,
    LevyFamily,
    PseudoExample,
    check_example,
    gaussian_family,
)

__all__ = [
    "read_dataset",
    "write_dataset",
    "read_pseudo_dataset",
    "write_pseudo_dataset",
    "pack_symmetric",
    "unpack_symmetric",
    "read_matrix",
]

_DATASET_MAGIC = "levyaug-dataset"
_PSEUDO_MAGIC = "levyaug-pseudo"
_VERSION = "v1"


def pack_symmetric(m: np.ndarray) -> np.ndarray:
    """Upper triangle, row-major."""
    m = np.asarray(m, dtype=float)
    d = m.shape[0]
    iu = np.triu_indices(d)
    return m[iu]


def unpack_symmetric(values: np.ndarray, d: int) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (d * (d + 1) // 2,):
        raise DataFormatError(
            f"expected {d * (d + 1) // 2} packed entries for d={d}, got {values.shape[0]}"
        )
    m = np.zeros((d, d))
    iu = np.triu_indices(d)
    m[iu] = values
    m.T[iu] = values
    return m


def _feature_width(family: LevyFamily) -> int:
    if family.kind is FamilyKind.WISHART:
        return family.d * (family.d + 1) // 2
    return family.d


def _feature_names(family: LevyFamily) -> list[str]:
    prefix = "m" if family.kind is FamilyKind.WISHART else "x"
    return [f"{prefix}_{j + 1}" for j in range(_feature_width(family))]


def _format_features(family: LevyFamily, x: np.ndarray) -> str:
    if family.kind is FamilyKind.WISHART:
        values = pack_symmetric(x)
    else:
        values = np.asarray(x, dtype=float)
    return ",".join(repr(float(v)) for v in values)


def _parse_magic(line: str, magic: str) -> LevyFamily:
    tokens = line.strip().split()
    if (
        len(tokens) < 5
        or tokens[0] != "#"
        or tokens[1] != magic
        or tokens[2] != _VERSION
    ):
        raise DataFormatError(f"missing or unsupported '{magic} {_VERSION}' header line")
    fields = dict(tok.split("=", 1) for tok in tokens[3:] if "=" in tok)
    try:
        kind = FamilyKind(fields["family"])
        d = int(fields["d"])
    except (KeyError, ValueError) as exc:
        raise DataFormatError(f"malformed header metadata: {exc}") from None
    if kind is FamilyKind.GAUSSIAN:
        # Dataset files do not carry the covariance; identity is assumed
        # unless the caller supplies one (e.g. the CLI's --sigma).
        return gaussian_family(d)
    return LevyFamily(kind, d)


def _parse_floats(parts: list[str], row: int) -> list[float]:
    try:
        return [float(v) for v in parts]
    except ValueError:
        raise DataFormatError("non-numeric value", row=row) from None


def _features_from_values(family: LevyFamily, values: list[float], row: int):
    arr = np.asarray(values, dtype=float)
    if family.kind is FamilyKind.WISHART:
        return unpack_symmetric(arr, family.d)
    if family.kind is FamilyKind.POISSON:
        return arr  # integrality is checked by the family support check
    return arr


def write_dataset(path, family: LevyFamily, examples: list[Example]) -> None:
    with open(path, "w", encoding="utf-8") as out:
        out.write(f"# {_DATASET_MAGIC} {_VERSION} family={family.kind.value} d={family.d}\n")
        out.write("y,t," + ",".join(_feature_names(family)) + "\n")
        for ex in examples:
            out.write(f"{ex.y},{ex.t!r},{_format_features(family, ex.x)}\n")


def read_dataset(path, sigma=None) -> tuple[LevyFamily, list[Example]]:
    """Parse and validate a dataset file.

    Structural problems raise :class:`DataFormatError`; value-domain
    problems (family support, nonpositive t, bad labels) raise the
    corresponding domain error.  Both name the offending row.  ``sigma``
    overrides the identity covariance assumed for Gaussian files.
    """
    with open(path, "r", encoding="utf-8") as handle:
        lines = [ln.rstrip("\n") for ln in handle if ln.strip()]
    if not lines:
        raise DataFormatError("empty file")
    family = _parse_magic(lines[0], _DATASET_MAGIC)
    if sigma is not None:
        if family.kind is not FamilyKind.GAUSSIAN:
            raise ParameterError("a covariance override only applies to Gaussian data")
        family = gaussian_family(family.d, sigma)
    expected = ["y", "t"] + _feature_names(family)
    if len(lines) < 2 or lines[1].split(",") != expected:
        raise DataFormatError(f"expected header row {','.join(expected)!r}")
    width = _feature_width(family)
    examples = []
    for row, line in enumerate(lines[2:], start=1):
        parts = line.split(",")
        if len(parts) != 2 + width:
            raise DataFormatError(
                f"expected {2 + width} columns, got {len(parts)}", row=row
            )
        values = _parse_floats(parts, row)
        y = values[0]
        if y != int(y):
            raise DataFormatError("class label must be an integer", row=row)
        try:
            ex = Example(
                x=_features_from_values(family, values[2:], row), y=int(y), t=values[1]
            )
            check_example(family, ex)
        except DataFormatError:
            raise
        except LevyAugError as exc:
            raise type(exc)(f"row {row}: {exc}") from None
        examples.append(ex)
    return family, examples


def write_pseudo_dataset(path, family: LevyFamily, pseudo: list[PseudoExample]) -> None:
    with open(path, "w", encoding="utf-8") as out:
        out.write(f"# {_PSEUDO_MAGIC} {_VERSION} family={family.kind.value} d={family.d}\n")
        out.write("origin_id,alpha,y,t_tilde," + ",".join(_feature_names(family)) + "\n")
        for pe in pseudo:
            out.write(
                f"{pe.origin_id},{pe.alpha!r},{pe.y},{pe.t_tilde!r},"
                f"{_format_features(family, pe.x_tilde)}\n"
            )


def read_pseudo_dataset(path) -> tuple[LevyFamily, list[PseudoExample]]:
    with open(path, "r", encoding="utf-8") as handle:
        lines = [ln.rstrip("\n") for ln in handle if ln.strip()]
    if not lines:
        raise DataFormatError("empty file")
    family = _parse_magic(lines[0], _PSEUDO_MAGIC)
    expected = ["origin_id", "alpha", "y", "t_tilde"] + _feature_names(family)
    if len(lines) < 2 or lines[1].split(",") != expected:
        raise DataFormatError(f"expected header row {','.join(expected)!r}")
    width = _feature_width(family)
    pseudo = []
    for row, line in enumerate(lines[2:], start=1):
        parts = line.split(",")
        if len(parts) != 4 + width:
            raise DataFormatError(
                f"expected {4 + width} columns, got {len(parts)}", row=row
            )
        values = _parse_floats(parts, row)
        origin, y = values[0], values[2]
        if origin != int(origin) or y != int(y):
            raise DataFormatError("origin_id and y must be integers", row=row)
        try:
            features = _features_from_values(family, values[4:], row)
            if family.kind is FamilyKind.POISSON:
                if np.any(features < 0) or np.any(features != np.floor(features)):
                    raise SupportError("Poisson features must be nonnegative integers")
                features = np.asarray(features, dtype=np.int64)
            pseudo.append(
                PseudoExample(
                    x_tilde=features,
                    y=int(y),
                    origin_id=int(origin),
                    alpha=values[1],
                    t_tilde=values[3],
                )
            )
        except LevyAugError as exc:
            raise type(exc)(f"row {row}: {exc}") from None
    return family, pseudo


def read_matrix(path) -> np.ndarray:
    """A bare comma-delimited matrix (used for covariance inputs)."""
    try:
        m = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise DataFormatError(f"could not parse matrix file: {exc}") from None
    return m
