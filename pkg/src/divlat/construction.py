"""Integer-check matrix constructions.

Builds Latin-square LDLC matrices and the full-diversity variants used on
block-fading channels: quadrant scaling by a pair of algebraic numbers with
irrational ratio (row-scaled or checkerboard), the Latin-square flavor that
embeds 1 and 1/sqrt(d) directly in the generating sequence, the
binary-image-structured variant for iterative decoding, and its order-4
band-scaled generalization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import (
    AlgebraicScalar,
    ExactMatrix,
    is_rational_ratio,
    rational,
    read_matrix,
    write_matrix,
    format_scalar,
    parse_scalar,
)

__all__ = [
    "ConstructionError",
    "GeneratingSequence",
    "IntegerCheckMatrix",
    "BinaryImage",
    "build_latin_square_ldlc",
    "build_fd_ml",
    "build_fd_ml_random",
    "default_ml_sequence",
    "build_fd_ml_latin",
    "build_fd_bp",
    "build_fd_bp_L4",
    "assemble_blocks",
    "binary_image",
    "write_icm",
    "read_icm",
    "icm_to_text",
    "icm_from_text",
]

MAX_PLACEMENT_RETRIES = 1000
MAX_RESAMPLES = 50
COND_LIMIT = 1e12


class ConstructionError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratingSequence:
    """Sorted multiset of the d positive values carried by every row/column."""

    values: tuple[AlgebraicScalar, ...]

    def __post_init__(self):
        vals = tuple(self.values)
        floats = [float(v) for v in vals]
        if any(f <= 0 for f in floats):
            raise ValueError("generating sequence values must be positive")
        if any(a < b - 1e-15 for a, b in zip(floats, floats[1:])):
            raise ValueError("generating sequence must be sorted descending")
        object.__setattr__(self, "values", vals)

    @classmethod
    def of(cls, *values) -> "GeneratingSequence":
        vals = [v if isinstance(v, AlgebraicScalar) else rational(v) for v in values]
        vals.sort(key=float, reverse=True)
        return cls(tuple(vals))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def abs_floats(self) -> list[float]:
        return sorted((abs(float(v)) for v in self.values), reverse=True)


@dataclass
class IntegerCheckMatrix:
    """n x n integer-check matrix with its diversity annotation.

    ``theta[r][c]`` is the algebraic scale attached to row band r and column
    block c; every entry of H inside that cell is a rational multiple of it.
    """

    H: ExactMatrix
    theta: list[list[AlgebraicScalar]]
    d: int | None = None
    seq: GeneratingSequence | None = None
    name: str = "matrix"
    L: int = 2
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.H.rows

    @property
    def row_bands(self) -> int:
        return len(self.theta)

    @property
    def col_blocks(self) -> int:
        return len(self.theta[0])

    def band_of_row(self, i: int) -> int:
        return i * self.row_bands // self.n

    def block_of_col(self, j: int) -> int:
        return j * self.col_blocks // self.n

    def theta_of(self, i: int, j: int) -> AlgebraicScalar:
        return self.theta[self.band_of_row(i)][self.block_of_col(j)]

    def base_entry(self, i: int, j: int) -> AlgebraicScalar:
        """Entry with its theta scale divided out."""
        v = self.H.get(i, j)
        if v.is_zero():
            return v
        return v / self.theta_of(i, j)

    def to_float(self) -> np.ndarray:
        return self.H.to_float()


@dataclass
class BinaryImage:
    """Incidence matrix of the factor graph: 1 where H is nonzero."""

    H_b: np.ndarray
    left_degrees: np.ndarray
    right_degrees: np.ndarray


def binary_image(icm: IntegerCheckMatrix | ExactMatrix) -> BinaryImage:
    H = icm.H if isinstance(icm, IntegerCheckMatrix) else icm
    b = np.zeros((H.rows, H.cols), dtype=np.int8)
    for (r, c) in H.entries:
        b[r, c] = 1
    return BinaryImage(H_b=b, left_degrees=b.sum(axis=0), right_degrees=b.sum(axis=1))


# ---------------------------------------------------------------------------
# Random placement helpers
# ---------------------------------------------------------------------------


def _place_permutations(n: int, count: int, rng: np.random.Generator,
                        occupied: set | None = None) -> list[np.ndarray]:
    """Sample `count` permutations of [0, n) with pairwise-disjoint supports.

    Rejection sampling first; if the fill gets dense (degree 8 and up needs
    ~e^d redraws) a random swap-repair pass fixes residual collisions.
    """
    occupied = set() if occupied is None else occupied
    perms = []
    retries = 0
    for _ in range(count):
        placed = None
        while placed is None:
            p = rng.permutation(n)
            if all((i, p[i]) not in occupied for i in range(n)):
                placed = p
                break
            retries += 1
            if retries > min(MAX_PLACEMENT_RETRIES, 20 * (len(perms) + 1)):
                placed = _repair_permutation(p, occupied, rng)
                if placed is None:
                    raise ConstructionError(
                        f"could not place {count} disjoint permutations of "
                        f"size {n}")
        for i in range(n):
            occupied.add((i, int(placed[i])))
        perms.append(placed)
    return perms


def _repair_permutation(p: np.ndarray, occupied: set,
                        rng: np.random.Generator) -> np.ndarray | None:
    n = len(p)
    p = p.copy()
    for _ in range(200 * n):
        bad = [i for i in range(n) if (i, int(p[i])) in occupied]
        if not bad:
            return p
        i = bad[rng.integers(len(bad))]
        j = int(rng.integers(n))
        p[i], p[j] = p[j], p[i]
    return None


def _signs(n: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, 2, size=n) * 2 - 1


def _numerically_nonsingular(Hf: np.ndarray) -> bool:
    if Hf.shape[0] != Hf.shape[1]:
        return False
    cond = np.linalg.cond(Hf)
    return bool(np.isfinite(cond) and cond < COND_LIMIT)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------


def build_latin_square_ldlc(n: int, seq: GeneratingSequence, seed: int,
                            require_nonsingular: bool = True) -> IntegerCheckMatrix:
    """Random Latin-square LDLC: superposition of d signed permutations,
    one for each generating value, resampled on collision."""
    d = len(seq)
    if n < d:
        raise ConstructionError(f"n={n} smaller than degree d={d}")
    rng = np.random.default_rng(seed)
    for _ in range(MAX_RESAMPLES):
        perms = _place_permutations(n, d, rng)
        H = ExactMatrix(n, n)
        for p, v in zip(perms, seq):
            sg = _signs(n, rng)
            for i in range(n):
                H.set(i, int(p[i]), rational(int(sg[i])) * v)
        if not require_nonsingular or _numerically_nonsingular(H.to_float()):
            return IntegerCheckMatrix(H=H, theta=[[rational(1)]], d=d, seq=seq,
                                      name="latin-square", L=2, seed=seed)
    raise ConstructionError("failed to draw a numerically nonsingular Latin square")


def assemble_blocks(blocks: list[list[ExactMatrix]],
                    theta: list[list[AlgebraicScalar]],
                    **meta) -> IntegerCheckMatrix:
    """Stack a grid of blocks, scaling each by its theta cell.

    Low-level: no hypothesis checks, so deliberately broken inputs (equal
    thetas, rational ratios, rank-deficient blocks) can be built for the
    verifier to refute.
    """
    band_rows = [row[0].rows for row in blocks]
    block_cols = [b.cols for b in blocks[0]]
    n = sum(band_rows)
    if sum(block_cols) != n:
        raise ValueError("blocks do not form a square matrix")
    H = ExactMatrix(n, n)
    r0 = 0
    for bi, row in enumerate(blocks):
        c0 = 0
        for ci, blk in enumerate(row):
            th = theta[bi][ci]
            for (r, c), v in blk.entries.items():
                H.set(r0 + r, c0 + c, th * v)
            c0 += blk.cols
        r0 += band_rows[bi]
    return IntegerCheckMatrix(H=H, theta=theta, **meta)


def build_fd_ml(A: ExactMatrix, B: ExactMatrix, C: ExactMatrix, D: ExactMatrix,
                theta1: AlgebraicScalar, theta2: AlgebraicScalar,
                variant: str = "checkerboard", **meta) -> IntegerCheckMatrix:
    """Scale full-rank quadrants by a pair with irrational ratio.

    row-scaled: [[t1 A, t1 B], [t2 C, t2 D]];
    checkerboard: [[t1 A, t2 B], [t2 C, t1 D]].
    """
    m = A.rows
    for name, blk in (("A", A), ("B", B), ("C", C), ("D", D)):
        if blk.rows != m or blk.cols != m:
            raise ConstructionError(f"quadrant {name} is not {m}x{m}")
        if blk.exact_rank() != m:
            raise ConstructionError(f"hypothesis violated: quadrant {name} is rank-deficient")
    if is_rational_ratio(theta2, theta1):
        raise ConstructionError("hypothesis violated: theta2/theta1 is rational")
    if variant == "row-scaled":
        theta = [[theta1, theta1], [theta2, theta2]]
    elif variant == "checkerboard":
        theta = [[theta1, theta2], [theta2, theta1]]
    else:
        raise ValueError(f"unknown variant {variant!r}")
    meta.setdefault("name", f"fd-ml-{variant}")
    meta.setdefault("L", 2)
    return assemble_blocks([[A, B], [C, D]], theta, **meta)


def _quadrants(H: ExactMatrix) -> tuple[ExactMatrix, ...]:
    m = H.rows // 2
    lo, hi = range(m), range(m, 2 * m)
    return (H.submatrix(lo, lo), H.submatrix(lo, hi),
            H.submatrix(hi, lo), H.submatrix(hi, hi))


def default_ml_sequence(d: int) -> GeneratingSequence:
    """Rational generating sequence {1, 1/2, ..., 1/2} for ML bases."""
    return GeneratingSequence.of(rational(1), *[rational(Fraction(1, 2))] * (d - 1))


def build_fd_ml_random(n: int, d: int, theta1: AlgebraicScalar,
                       theta2: AlgebraicScalar, variant: str = "checkerboard",
                       seed: int = 0,
                       seq: GeneratingSequence | None = None) -> IntegerCheckMatrix:
    """Random Latin-square base with full-rank quadrants, scaled per variant.

    The diagonal quadrants carry the first ceil(d/2) generating values and the
    off-diagonal ones the rest, each as a superposition of disjoint signed
    permutations, so the base stays Latin square while each quadrant is a
    regular random matrix that is full rank with high probability.
    """
    if n % 2:
        raise ConstructionError("n must be even")
    seq = seq or default_ml_sequence(d)
    if len(seq) != d:
        raise ConstructionError("generating sequence length must equal d")
    w1 = (d + 1) // 2
    diag_vals = seq.values[:w1]
    off_vals = seq.values[w1:]
    m = n // 2
    rng = np.random.default_rng(seed)

    def draw(values):
        for _ in range(MAX_RESAMPLES):
            blk = ExactMatrix(m, m)
            occupied: set = set()
            for p, v in zip(_place_permutations(m, len(values), rng, occupied), values):
                sg = _signs(m, rng)
                for i in range(m):
                    blk.set(i, int(p[i]), rational(int(sg[i])) * v)
            if blk.exact_rank() == m:
                return blk
        raise ConstructionError("no full-rank quadrant draw found")

    for _ in range(MAX_RESAMPLES):
        A, D = draw(diag_vals), draw(diag_vals)
        B, C = draw(off_vals), draw(off_vals)
        icm = build_fd_ml(A, B, C, D, theta1, theta2, variant,
                          d=d, seq=seq, seed=seed)
        if _numerically_nonsingular(icm.to_float()):
            icm.name = f"fd-ml-{variant}"
            return icm
    raise ConstructionError("no numerically nonsingular draw found")


def build_fd_ml_latin(n: int, d: int, seed: int = 0) -> IntegerCheckMatrix:
    """Full-diversity Latin-square LDLC with the pair embedded in the values:
    generating sequence {1, theta, ..., theta}, theta = 1/sqrt(d) for odd d
    and 1/sqrt(d+1) otherwise.  Off-diagonal quadrants are permutations, the
    diagonal quadrants are regular of degree d-1."""
    if n % 2:
        raise ConstructionError("n must be even")
    if d < 2:
        raise ConstructionError("degree must be at least 2")
    theta = AlgebraicScalar.inv_sqrt(d if d % 2 else d + 1)
    m = n // 2
    rng = np.random.default_rng(seed)
    one = rational(1)
    for _ in range(MAX_RESAMPLES):
        blocks = {}
        for key in ("A", "D"):
            blk = ExactMatrix(m, m)
            for p in _place_permutations(m, d - 1, rng):
                sg = _signs(m, rng)
                for i in range(m):
                    blk.set(i, int(p[i]), rational(int(sg[i])))
            blocks[key] = blk
        for key in ("B", "C"):
            blk = ExactMatrix(m, m)
            p = rng.permutation(m)
            sg = _signs(m, rng)
            for i in range(m):
                blk.set(i, int(p[i]), rational(int(sg[i])))
            blocks[key] = blk
        if blocks["A"].exact_rank() != m or blocks["D"].exact_rank() != m:
            continue
        icm = assemble_blocks(
            [[blocks["A"], blocks["B"]], [blocks["C"], blocks["D"]]],
            [[theta, one], [one, theta]],
            d=d, seq=GeneratingSequence.of(one, *[theta] * (d - 1)),
            name="fd-ml-latin", L=2, seed=seed)
        if _numerically_nonsingular(icm.to_float()):
            return icm
    raise ConstructionError("no full-rank degree-(d-1) quadrant draw found")


def _regular_block(m: int, weight: int, value: AlgebraicScalar,
                   rng: np.random.Generator) -> ExactMatrix:
    """Random regular block of the given weight: superposed signed
    permutations, all carrying `value`."""
    blk = ExactMatrix(m, m)
    for p in _place_permutations(m, weight, rng):
        sg = _signs(m, rng)
        for i in range(m):
            blk.set(i, int(p[i]), rational(int(sg[i])) * value)
    return blk


def _perm_block(m: int, value: AlgebraicScalar, rng: np.random.Generator) -> ExactMatrix:
    return _regular_block(m, 1, value, rng)


def build_fd_bp(n: int, d: int, theta1: AlgebraicScalar, theta2: AlgebraicScalar,
                seed: int = 0,
                fill_value: AlgebraicScalar | None = None) -> IntegerCheckMatrix:
    """Full-diversity LDLC for iterative decoding (order 2).

    The binary image follows the fixed 4x4-block template
        [P 0 B P]
        [B P P 0]
        [0 P P B]
        [P B 0 P]
    with permutation blocks P and regular weight-(d-2) blocks B; the top half
    rows are scaled by theta1 and the bottom half by theta2.  The unscaled
    matrix is a Latin-square LDLC with generating sequence
    {1, v, ..., v} where v defaults to 1/sqrt(5).
    """
    if n % 4:
        raise ConstructionError("n must be divisible by 4")
    if d < 2:
        raise ConstructionError("degree must be at least 2")
    if is_rational_ratio(theta2, theta1):
        raise ConstructionError("hypothesis violated: theta2/theta1 is rational")
    v = fill_value if fill_value is not None else AlgebraicScalar.inv_sqrt(5)
    one = rational(1)
    q = n // 4
    w = d - 2
    rng = np.random.default_rng(seed)
    Z = ExactMatrix(q, q)
    for _ in range(MAX_RESAMPLES):
        # value-1 permutations sit where rows and columns each need their
        # single unit entry; everything else carries v
        p1 = _perm_block(q, one, rng)
        p2 = _perm_block(q, one, rng)
        p7 = _perm_block(q, one, rng)
        p8 = _perm_block(q, one, rng)
        p3 = _perm_block(q, v, rng)
        p4 = _perm_block(q, v, rng)
        p5 = _perm_block(q, v, rng)
        p6 = _perm_block(q, v, rng)
        b1 = _regular_block(q, w, v, rng)
        b2 = _regular_block(q, w, v, rng)
        b3 = _regular_block(q, w, v, rng)
        b4 = _regular_block(q, w, v, rng)
        grid = [[p1, Z, b2, p4],
                [b1, p2, p3, Z],
                [Z, p6, p7, b4],
                [p5, b3, Z, p8]]
        icm = assemble_blocks(
            grid,
            [[theta1] * 4, [theta1] * 4, [theta2] * 4, [theta2] * 4],
            d=d, seq=GeneratingSequence.of(one, *[v] * (d - 1)),
            name="fd-bp", L=2, seed=seed)
        # collapse the theta grid to the two column blocks used on an L=2 channel
        icm.theta = [[theta1, theta1], [theta2, theta2]]
        if _numerically_nonsingular(icm.to_float()):
            return icm
    raise ConstructionError("no numerically nonsingular draw found")


def build_fd_bp_L4(n: int, thetas: list[AlgebraicScalar],
                   seq: GeneratingSequence, seed: int = 0) -> IntegerCheckMatrix:
    """Order-4 full-diversity LDLC for iterative decoding: cyclic band template
        [B P 0 0]
        [0 B P 0]
        [0 0 B P]
        [P 0 0 B]
    with weight-2 regular blocks B, permutation blocks P, band k scaled by
    theta_k.  Degree is 3 and the unscaled matrix is Latin square."""
    if n % 4:
        raise ConstructionError("n must be divisible by 4")
    if len(thetas) != 4:
        raise ConstructionError("exactly four thetas required")
    if len(seq) != 3:
        raise ConstructionError("generating sequence of length 3 required")
    for p in range(4):
        for r in range(p + 1, 4):
            if is_rational_ratio(thetas[p], thetas[r]):
                raise ConstructionError(
                    f"hypothesis violated: theta{p + 1}/theta{r + 1} is rational")
    q = n // 4
    pv = seq.values[0]
    bv1, bv2 = seq.values[1], seq.values[2]
    rng = np.random.default_rng(seed)
    Z = ExactMatrix(q, q)
    for _ in range(MAX_RESAMPLES):
        rows = []
        for k in range(4):
            occupied: set = set()
            b = ExactMatrix(q, q)
            pa, pb = _place_permutations(q, 2, rng, occupied)
            for p, val in ((pa, bv1), (pb, bv2)):
                sg = _signs(q, rng)
                for i in range(q):
                    b.set(i, int(p[i]), rational(int(sg[i])) * val)
            pi = _perm_block(q, pv, rng)
            row = [Z, Z, Z, Z]
            row[k] = b
            row[(k + 1) % 4] = pi
            rows.append(row)
        icm = assemble_blocks(
            rows, [[thetas[k]] * 4 for k in range(4)],
            d=3, seq=seq, name="fd-bp-l4", L=4, seed=seed)
        if _numerically_nonsingular(icm.to_float()):
            return icm
    raise ConstructionError("no numerically nonsingular draw found")


# ---------------------------------------------------------------------------
# File round trip: algebra text format plus a sidecar header
# ---------------------------------------------------------------------------


def icm_to_text(icm: IntegerCheckMatrix) -> str:
    primes: set[int] = set()
    for v in icm.H.entries.values():
        primes |= v.primes()
    for row in icm.theta:
        for t in row:
            primes |= t.primes()
    if icm.seq:
        for v in icm.seq:
            primes |= v.primes()
    basis = sorted(primes)
    header = [
        f"construction {icm.name}",
        f"n {icm.n}",
        f"d {icm.d if icm.d is not None else '-'}",
        f"L {icm.L}",
        f"seed {icm.seed if icm.seed is not None else '-'}",
        f"bands {icm.row_bands} {icm.col_blocks}",
    ]
    for r, row in enumerate(icm.theta):
        for c, t in enumerate(row):
            header.append(f"theta {r} {c} {format_scalar(t, basis)}")
    if icm.seq:
        for v in icm.seq:
            header.append(f"seqval {format_scalar(v, basis)}")
    return write_matrix(icm.H, header_lines=header, extra_basis=set(basis))


def icm_from_text(text: str) -> IntegerCheckMatrix:
    H, header = read_matrix(text)
    basis: list[int] = []
    for line in text.splitlines():
        if not line.startswith("#"):
            for tok in line.split():
                if tok.startswith("basis="):
                    basis = [int(x) for x in tok[len("basis="):].split(",") if x]
            break
    meta: dict = {"name": "matrix", "L": 2, "d": None, "seed": None}
    bands = (1, 1)
    thetas: dict[tuple[int, int], AlgebraicScalar] = {}
    seqvals: list[AlgebraicScalar] = []
    for line in header:
        toks = line.split()
        if not toks:
            continue
        key = toks[0]
        if key == "construction":
            meta["name"] = toks[1]
        elif key == "n":
            pass
        elif key == "d":
            meta["d"] = None if toks[1] == "-" else int(toks[1])
        elif key == "L":
            meta["L"] = int(toks[1])
        elif key == "seed":
            meta["seed"] = None if toks[1] == "-" else int(toks[1])
        elif key == "bands":
            bands = (int(toks[1]), int(toks[2]))
        elif key == "theta":
            thetas[(int(toks[1]), int(toks[2]))] = parse_scalar(toks[3:], basis)
        elif key == "seqval":
            seqvals.append(parse_scalar(toks[1:], basis))
    theta = [[thetas.get((r, c), rational(1)) for c in range(bands[1])]
             for r in range(bands[0])]
    seq = GeneratingSequence(tuple(seqvals)) if seqvals else None
    return IntegerCheckMatrix(H=H, theta=theta, seq=seq, **meta)


def write_icm(icm: IntegerCheckMatrix, path) -> None:
    with open(path, "w") as f:
        f.write(icm_to_text(icm))


def read_icm(path) -> IntegerCheckMatrix:
    with open(path) as f:
        return icm_from_text(f.read())
