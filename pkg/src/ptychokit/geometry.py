"""Scan geometry: stack indexing, illumination schemes, sub-pixel lens shifts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "IlluminationScheme",
    "SchemeReport",
    "build_scheme",
    "shifted_probe",
    "stack_index",
    "stack_index_inverse",
    "validate_scheme",
    "window_index",
    "window_index_inverse",
]


def window_index(alpha: int, beta: int, m: int) -> int:
    """Row-major rank of window pixel (alpha, beta) within an m-by-m window.

    Zero-based on both axes; alpha indexes rows. Raises ValueError outside
    [0, m) on either axis.
    """
    if not (0 <= alpha < m and 0 <= beta < m):
        raise ValueError(f"window offset ({alpha}, {beta}) out of range for m={m}")
    return alpha * m + beta


def window_index_inverse(rank: int, m: int) -> tuple[int, int]:
    """Invert window_index: rank -> (alpha, beta)."""
    if not (0 <= rank < m * m):
        raise ValueError(f"window rank {rank} out of range for m={m}")
    return divmod(rank, m)


def stack_index(frame: int, rank: int, m: int) -> int:
    """Position of window pixel `rank` of frame `frame` in the flattened stack."""
    if frame < 0:
        raise ValueError(f"frame index {frame} must be nonnegative")
    if not (0 <= rank < m * m):
        raise ValueError(f"window rank {rank} out of range for m={m}")
    return frame * m * m + rank


def stack_index_inverse(flat: int, m: int) -> tuple[int, int]:
    """Invert stack_index: flat position -> (frame, rank)."""
    if flat < 0:
        raise ValueError(f"stack position {flat} must be nonnegative")
    return divmod(flat, m * m)


@dataclass(frozen=True)
class IlluminationScheme:
    """Scan positions for an m-by-m window over an n-by-n object grid.

    positions is a (K, 2) float array of (row, col) window offsets. Fractional
    offsets anchor at the floor corner, with the remainder realized by
    resampling the lens (see shifted_probe). Every position must keep the
    window inside the grid: 0 <= offset <= n - m on both axes.
    """

    n: int
    m: int
    positions: np.ndarray

    def __post_init__(self):
        pos = np.array(self.positions, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 2:
            raise ValueError("positions must be a (K, 2) array of (row, col) offsets")
        if pos.shape[0] < 1:
            raise ValueError("a scheme needs at least one frame position")
        if not 1 <= self.m <= self.n:
            raise ValueError(f"window size m={self.m} must lie in [1, n={self.n}]")
        if not np.all(np.isfinite(pos)):
            raise ValueError("positions must be finite")
        if pos.min(initial=0.0) < 0.0 or pos.max(initial=0.0) > self.n - self.m:
            raise ValueError(f"positions must lie in [0, {self.n - self.m}] on both axes")
        pos.setflags(write=False)
        object.__setattr__(self, "positions", pos)

    @property
    def frame_count(self) -> int:
        return int(self.positions.shape[0])

    @property
    def anchors(self) -> np.ndarray:
        """Integer window corners: floor of each position, shape (K, 2)."""
        return np.floor(self.positions).astype(np.int64)

    @property
    def fractions(self) -> np.ndarray:
        """Sub-pixel remainders in [0, 1), shape (K, 2)."""
        return self.positions - np.floor(self.positions)


def build_scheme(
    n: int,
    m: int,
    dx: float,
    dy: float,
    jitter: float = 0.0,
    shear: bool = False,
    seed: int = 0,
) -> IlluminationScheme:
    """Square-lattice scan with optional odd-row shear and seeded jitter.

    Rows sit at multiples of dy and columns at multiples of dx, keeping every
    window inside the grid (index steps stop at n - m). With shear on, odd
    rows shift right by dx/2. Jitter adds one uniform draw from
    [-jitter, jitter] per coordinate; results are clamped to [0, n - m].

    The result must pass validate_scheme: distinct positions, full coverage,
    every window overlapping another. A single jitter draw often misses
    coverage right at the grid edge (a boundary window whose floor anchor
    steps inward by one pixel orphans the outermost row or column), so the
    draw is retried with fresh seeded jitter until the scheme validates.
    If no draw can fix it, and always for violations jitter cannot cause
    (a tiling with spacing >= m has no overlap at any jitter), ValueError
    names the broken condition.
    """
    if dx <= 0 or dy <= 0:
        raise ValueError("lattice spacings must be positive")
    if jitter < 0:
        raise ValueError("jitter must be nonnegative")
    limit = n - m
    if limit < 0:
        raise ValueError(f"window size m={m} exceeds grid size n={n}")
    row_vals = np.arange(int(limit // dy) + 1) * float(dy)
    col_vals = np.arange(int(limit // dx) + 1) * float(dx)
    rows = []
    for i, y in enumerate(row_vals):
        cols = col_vals + (dx / 2.0 if shear and i % 2 == 1 else 0.0)
        cols = np.minimum(cols, float(limit))
        block = np.empty((cols.size, 2))
        block[:, 0] = y
        block[:, 1] = cols
        rows.append(block)
    base = np.concatenate(rows, axis=0)
    rng = np.random.default_rng(seed)
    attempts = 1 if jitter == 0 else 2048
    report = None
    for _ in range(attempts):
        pos = base
        if jitter > 0:
            pos = np.clip(base + rng.uniform(-jitter, jitter, size=base.shape), 0.0, float(limit))
        scheme = IlluminationScheme(n=n, m=m, positions=pos)
        report = validate_scheme(scheme)
        if report.ok:
            return scheme
    problems = []
    if report.duplicate_pairs:
        problems.append(f"{len(report.duplicate_pairs)} duplicate position pairs")
    if report.uncovered_pixels:
        problems.append(f"{report.uncovered_pixels} uncovered pixels")
    if report.isolated_frames:
        problems.append(f"windows with no overlap partner: {report.isolated_frames}")
    raise ValueError("generated scheme breaks the overlap assumptions: " + "; ".join(problems))


@dataclass(frozen=True)
class SchemeReport:
    """Validation report for an illumination scheme.

    ok is True when positions are pairwise distinct, the window squares cover
    the whole grid, and every window overlaps at least one other; a
    single-frame scheme has no overlap partner and is always reported
    isolated.
    """

    ok: bool
    duplicate_pairs: tuple[tuple[int, int], ...]
    uncovered_pixels: int
    isolated_frames: tuple[int, ...]


def validate_scheme(scheme: IlluminationScheme) -> SchemeReport:
    """Check distinctness, full coverage, and pairwise window overlap."""
    pos = scheme.positions
    count = scheme.frame_count
    duplicates = []
    order = np.lexsort((pos[:, 1], pos[:, 0]))
    for a, b in zip(order[:-1], order[1:]):
        if pos[a, 0] == pos[b, 0] and pos[a, 1] == pos[b, 1]:
            duplicates.append((int(min(a, b)), int(max(a, b))))
    anchors = scheme.anchors
    covered = np.zeros((scheme.n, scheme.n), dtype=bool)
    for ay, ax in anchors:
        covered[ay:ay + scheme.m, ax:ax + scheme.m] = True
    uncovered = int(covered.size - covered.sum())
    isolated = []
    if count > 1:
        for k in range(count):
            gaps = np.abs(anchors - anchors[k])
            overlap = (gaps[:, 0] < scheme.m) & (gaps[:, 1] < scheme.m)
            overlap[k] = False
            if not overlap.any():
                isolated.append(k)
    else:
        isolated.append(0)
    ok = not duplicates and uncovered == 0 and not isolated
    return SchemeReport(
        ok=ok,
        duplicate_pairs=tuple(duplicates),
        uncovered_pixels=uncovered,
        isolated_frames=tuple(isolated),
    )


def shifted_probe(lens: np.ndarray, frac: tuple[float, float]) -> np.ndarray:
    """Resample the lens on a grid displaced by a sub-pixel (row, col) amount.

    Output entry (i, j) is the bilinear sample of the lens at
    (i - frac_row, j - frac_col), treating the lens as zero outside its
    support; a (0, 0) shift returns an exact copy. Interpolation uses the
    a + t*(b - a) form, so a constant lens stays exactly constant on the
    interior block reached by all four neighbors.
    """
    frow, fcol = float(frac[0]), float(frac[1])
    if not (0.0 <= frow < 1.0 and 0.0 <= fcol < 1.0):
        raise ValueError("fractional shift must lie in [0, 1) on both axes")
    lens = np.asarray(lens)
    if frow == 0.0 and fcol == 0.0:
        return lens.copy()
    m0, m1 = lens.shape
    padded = np.zeros((m0 + 1, m1 + 1), dtype=lens.dtype)
    padded[1:, 1:] = lens
    here = padded[1:, 1:]
    up = padded[:-1, 1:]
    rows = here + frow * (up - here)
    left = np.zeros_like(rows)
    left[:, 1:] = rows[:, :-1]
    return rows + fcol * (left - rows)
