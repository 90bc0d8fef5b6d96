"""Joe–Kuo direction numbers.

A direction file is whitespace-delimited text with one header line followed by
rows ``d s a m_1 ... m_s``. Dimension 1 has no row: its direction integers are
``v_j = 2**(32 - j)``.
"""

__all__ = [
    'BIT_WIDTH',
    'DirectionEntry',
    'DirectionNumberTable',
    'export_direction_file',
    'load_direction_table',
    'load_scipy_directions',
    'MAX_DIMENSION',
    'parse_direction_file',
]

import io
import logging
import os
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, TextIO

import numpy as np

from .._typing import Uint32Matrix
from ..data import DEFAULT_DIRECTION_FILE, DirectionFile
from ..errors import InvalidM, MalformedRow, NonContiguousDimension

logger = logging.getLogger(__name__)

BIT_WIDTH = 32
MAX_DIMENSION = 21200


@dataclass(frozen=True, slots=True)
class DirectionEntry:
    dimension: int
    s: int
    a: int
    m: tuple[int, ...]

    def direction_integers(self) -> list[int]:
        s, a, m = self.s, self.a, self.m
        v = [0] * (BIT_WIDTH + 1)
        for j in range(1, min(s, BIT_WIDTH) + 1):
            v[j] = m[j - 1] << (BIT_WIDTH - j)
        for j in range(s + 1, BIT_WIDTH + 1):
            v[j] = v[j - s] ^ (v[j - s] >> s)
            for k in range(1, s):
                if (a >> (s - 1 - k)) & 1:
                    v[j] ^= v[j - k]
        return v[1:]


@dataclass(frozen=True)
class DirectionNumberTable:
    entries: tuple[DirectionEntry, ...]
    source: str = '<memory>'
    _matrices: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def max_dimension(self) -> int:
        return len(self.entries) + 1

    def direction_matrix(self, d: int = None) -> Uint32Matrix:
        """Direction integers of dimensions ``1..d`` as a read-only ``(d, 32)`` view.

        Column ``b`` holds ``v_{b+1}``. The full table is expanded once and sliced.
        """
        if (full := self._matrices.get('full')) is None:
            rows = [[1 << (BIT_WIDTH - j) for j in range(1, BIT_WIDTH + 1)]]
            rows.extend(e.direction_integers() for e in self.entries)
            full = np.array(rows, dtype=np.uint32)
            full.setflags(write=False)
            self._matrices['full'] = full
        return full if d is None else full[:d]

    def to_text(self, max_dimension: int = None) -> str:
        upper = self.max_dimension if max_dimension is None else max_dimension
        lines = ['d       s       a       m_i']
        for e in self.entries[: upper - 1]:
            lines.append(f"{e.dimension}\t{e.s}\t{e.a}\t{' '.join(map(str, e.m))}")
        return '\n'.join(lines) + '\n'


def _parse_rows(lines: Iterable[str]):
    expected_dim = 2
    for line_no, line in enumerate(lines, start=1):
        if line_no == 1 or not line.strip():
            continue
        try:
            fields = [int(x) for x in line.split()]
        except ValueError:
            raise MalformedRow(line_no, f"non-integer field in {line.strip()!r}") from None
        if len(fields) < 4:
            raise MalformedRow(line_no, f"expected at least 4 fields, got {len(fields)}")
        d, s, a, *m = fields
        if s < 1 or len(m) != s:
            raise MalformedRow(
                line_no, f"degree s={s} needs {s} initial m values, got {len(m)}"
            )
        if a < 0:
            raise MalformedRow(line_no, f"negative coefficient a={a}")
        if d != expected_dim:
            raise NonContiguousDimension(expected_dim, d)
        for i, m_i in enumerate(m, start=1):
            if m_i <= 0 or not m_i & 1 or m_i >= 1 << i:
                raise InvalidM(d, i, m_i)
        if d > MAX_DIMENSION:
            logger.debug("ignoring rows beyond dimension %d", MAX_DIMENSION)
            return
        yield DirectionEntry(d, s, a, tuple(m))
        expected_dim += 1


def parse_direction_file(text: str | TextIO, *, source: str = None) -> DirectionNumberTable:
    """Parse a Joe–Kuo direction file.

    Parameters
    ----------
    text : str | TextIO
        File contents or an open text stream. The first line is a header.

    Returns
    -------
    DirectionNumberTable

    Raises
    ------
    MalformedRow
        If a row has the wrong number of fields or a non-integer field.
    InvalidM
        If an initial ``m_i`` is even or not below ``2**i``.
    NonContiguousDimension
        If dimensions do not run 2, 3, 4, ... without gaps.

    Examples
    --------
    >>> table = parse_direction_file('d s a m\\n2 1 0 1\\n3 2 1 1 3\\n')
    >>> table.entries[1]
    DirectionEntry(dimension=3, s=2, a=1, m=(1, 3))
    >>> table.max_dimension
    3
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    if source is None:
        source = getattr(stream, 'name', '<memory>')
    table = DirectionNumberTable(tuple(_parse_rows(stream)), source=str(source))
    logger.debug("parsed %d dimensions from %s", table.max_dimension, source)
    return table


@lru_cache(maxsize=8)
def _load_cached(path: str, mtime_ns: int, size: int) -> DirectionNumberTable:
    # keyed on the file's stat so a replaced file is parsed again
    with open(path, 'r', encoding='ascii') as f:
        return parse_direction_file(f, source=path)


def load_direction_table(
    path: str | os.PathLike | DirectionFile = None,
) -> DirectionNumberTable:
    """Load a direction table from ``path``, a registered :class:`DirectionFile`,
    or the bundled 1024-dimension table when ``path`` is None."""
    if path is None:
        path = DEFAULT_DIRECTION_FILE
    if isinstance(path, DirectionFile):
        path = path.path
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"direction file not found: {str(path)!r}")
    stat = path.stat()
    return _load_cached(str(path.resolve()), stat.st_mtime_ns, stat.st_size)


def _scipy_npz() -> Path:
    import scipy.stats

    return Path(scipy.stats.__file__).parent / '_sobol_direction_numbers.npz'


def load_scipy_directions(max_dimension: int = MAX_DIMENSION) -> DirectionNumberTable:
    """Rebuild a direction table from the Joe–Kuo data that ships with SciPy.

    SciPy stores each primitive polynomial as one integer ``poly`` with the
    leading and trailing coefficients included; ``s`` is its degree and ``a``
    the inner coefficient bits.
    """
    npz = _scipy_npz()
    if not npz.exists():
        raise FileNotFoundError(f"SciPy direction data not found at {str(npz)!r}")
    with np.load(npz) as data:
        poly, vinit = data['poly'], data['vinit']
    upper = min(max_dimension, MAX_DIMENSION, len(poly))
    entries = []
    for idx in range(1, upper):
        p = int(poly[idx])
        s = p.bit_length() - 1
        a = (p >> 1) & ((1 << (s - 1)) - 1)
        m = tuple(int(x) for x in vinit[idx, :s])
        for i, m_i in enumerate(m, start=1):
            if not m_i & 1 or m_i >= 1 << i:
                raise InvalidM(idx + 1, i, m_i)
        entries.append(DirectionEntry(idx + 1, s, a, m))
    return DirectionNumberTable(tuple(entries), source=str(npz))


def export_direction_file(
    path: str | os.PathLike, max_dimension: int = MAX_DIMENSION
) -> DirectionNumberTable:
    table = load_scipy_directions(max_dimension)
    Path(path).write_text(table.to_text(), encoding='ascii')
    logger.info("wrote %d dimensions to %s", table.max_dimension, path)
    return table
