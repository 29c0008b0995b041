"""Functional simulation of memristor crossbars for negacyclic products.

A polynomial multiplication maps onto crossbars by storing the small operand
(the secret) as an n x n negacyclic matrix: column j holds the coefficients
that feed output coefficient j, so streaming the bits of the other operand
down the wordlines and summing bitline currents computes the product one
input-bit-plane per cycle.

Signed values are handled with a bias (stored value = coefficient + mu/2) and
corrected digitally using the popcount of the cycle's input bits, which a
dedicated all-ones unit column provides. Columns whose stored-bit population
exceeds half the rows are stored complemented (flip encoding) so that no
bitline current exceeds rows/2; the complement is undone after readout.

`crossbar_polymult` is the explicit per-cycle, per-sample pipeline including
noise and ADC quantization. `XbarBackend` is an algebraically identical
vectorized ideal path fast enough for large Monte-Carlo runs; the test suite
pins the two to each other bit-exactly.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .params import RingParams, DEFAULT_PARAMS
from .ring import Poly

DEFAULT_TILE_ROWS = 128
DEFAULT_TILE_COLS = 128
DEFAULT_BITS_PER_COEFF = 4

# sample-referred residual noise per unit cell-variance, calibrated once so
# the empirical decryption failure probability at 10% variance reproduces the
# published operating point (~0.22 with no retries)
DEFAULT_NOISE_GAIN = 1.07


@dataclass(frozen=True)
class NegacyclicMatrix:
    """entries[i][j] = +s[j-i] for j >= i, -s[n+j-i] for j < i."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int64)
        if e.ndim != 2 or e.shape[0] != e.shape[1]:
            raise ValueError("negacyclic matrix must be square")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def n(self) -> int:
        return self.entries.shape[0]


def build_negacyclic_matrix(s_centered: np.ndarray) -> NegacyclicMatrix:
    """Matrix whose left-product with an input coefficient vector equals the
    negacyclic (mod x^n + 1) product with s."""
    s = np.asarray(s_centered, dtype=np.int64)
    n = len(s)
    i = np.arange(n)[:, None]
    j = np.arange(n)[None, :]
    sign = np.where(j >= i, 1, -1)
    return NegacyclicMatrix(sign * s[(j - i) % n])


@dataclass
class NoiseSpec:
    """Relative Gaussian noise on per-cell currents and TIA transfers."""

    cell_variance: float = 0.0
    tia_variance: float = 0.02
    seed: int = 0

    def __post_init__(self):
        if self.cell_variance < 0 or self.tia_variance < 0:
            raise ValueError("variances must be >= 0")
        self.rng = np.random.default_rng(self.seed)


@dataclass(frozen=True)
class AdcSpec:
    bits: int
    range_max: float
    samples_per_second: float = 1e9

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("ADC resolution must be >= 1 bit")


def adc_read(value, adc: AdcSpec):
    """Round-to-nearest quantization onto [0, 2^bits - 1], clamped.

    With range_max = 2^bits - 1 and integer-valued ideal inputs the
    quantization is exact (code == value).
    """
    full = (1 << adc.bits) - 1
    code = np.rint(np.asarray(value, dtype=np.float64) * (full / adc.range_max))
    return np.clip(code, 0, full).astype(np.int64)


def adc_bits_for(range_max: int) -> int:
    """Smallest resolution whose code space covers integer levels 0..range_max."""
    return max(1, int(range_max).bit_length())


@dataclass
class CrossbarTile:
    """One physical 1-bit-per-cell array plus its all-ones unit column.

    `cells` holds the stored (possibly complemented) bit levels. `writes`
    counts physical cell-bit writes. Stuck-at faults override the stored
    level at readout time without touching the write counter.
    """

    rows: int = DEFAULT_TILE_ROWS
    cols: int = DEFAULT_TILE_COLS
    cell_bits: int = 1
    bias: int = 0
    cells: np.ndarray = None
    flip_flags: np.ndarray = None
    writes: int = 0
    stuck_faults: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cells is None:
            self.cells = np.zeros((self.rows, self.cols), dtype=np.int64)
        if self.flip_flags is None:
            self.flip_flags = np.zeros(self.cols, dtype=bool)

    def program(self, levels: np.ndarray) -> None:
        """Store a full grid of cell levels, applying flip encoding per column."""
        levels = np.asarray(levels, dtype=np.int64)
        if levels.shape != (self.rows, self.cols):
            raise ValueError("programming grid must match tile dimensions")
        top = (1 << self.cell_bits) - 1
        if levels.min() < 0 or levels.max() > top:
            raise ValueError("cell level out of range for cell_bits")
        self.flip_flags = levels.sum(axis=0) > self.rows // 2
        self.cells = np.where(self.flip_flags[None, :], top - levels, levels)
        self.writes += self.rows * self.cols * self.cell_bits

    def effective_cells(self) -> np.ndarray:
        if not self.stuck_faults:
            return self.cells
        out = self.cells.copy()
        for (r, c), level in self.stuck_faults.items():
            out[r, c] = level
        return out

    def set_stuck_fault(self, row: int, col: int, level: int) -> None:
        self.stuck_faults[(row, col)] = int(level)

    def clear_faults(self) -> None:
        self.stuck_faults.clear()


@dataclass(frozen=True)
class ProgramLayout:
    """Mapping from logical (row, coeff-column, bit-slice) to physical cells.

    Logical coefficient j, slice k occupies physical column (j*bpc + k) within
    its column block; logical rows are chunked into row blocks. One PolyMult
    at n=256 with 4-bit operands on 128x128 tiles needs 2 x 8 = 16 tiles.
    """

    logical_rows: int
    logical_cols: int
    bits_per_coeff: int
    tile_rows: int = DEFAULT_TILE_ROWS
    tile_cols: int = DEFAULT_TILE_COLS

    @property
    def row_blocks(self) -> int:
        return -(-self.logical_rows // self.tile_rows)

    @property
    def col_blocks(self) -> int:
        return -(-self.logical_cols * self.bits_per_coeff // self.tile_cols)

    @property
    def tiles_used(self) -> int:
        return self.row_blocks * self.col_blocks

    @property
    def coeff_cols_per_tile(self) -> int:
        return self.tile_cols // self.bits_per_coeff

    def locate(self, row: int, coeff_col: int, bit: int):
        """-> (tile_index, physical_row, physical_column)."""
        if not (0 <= row < self.logical_rows and 0 <= coeff_col < self.logical_cols
                and 0 <= bit < self.bits_per_coeff):
            raise ValueError("logical coordinates out of range")
        phys_col = coeff_col * self.bits_per_coeff + bit
        tile = (row // self.tile_rows) * self.col_blocks + phys_col // self.tile_cols
        return tile, row % self.tile_rows, phys_col % self.tile_cols


def program_operand(M: NegacyclicMatrix, params: RingParams = DEFAULT_PARAMS,
                    tile_rows: int = DEFAULT_TILE_ROWS,
                    tile_cols: int = DEFAULT_TILE_COLS,
                    bits_per_coeff: int = DEFAULT_BITS_PER_COEFF):
    """Bias, bit-slice and flip-encode the operand matrix into 1-bit tiles."""
    n = M.n
    bias = params.mu // 2
    biased = M.entries + bias
    if biased.min() < 0 or biased.max() >= (1 << bits_per_coeff):
        raise ValueError("biased operand does not fit bits_per_coeff")
    layout = ProgramLayout(n, n, bits_per_coeff, tile_rows, tile_cols)

    # expand to the physical bit plane: column j*bpc+k holds bit k of column j
    slices = (biased[:, :, None] >> np.arange(bits_per_coeff)) & 1
    plane = slices.reshape(n, n * bits_per_coeff)

    tiles = []
    for rb in range(layout.row_blocks):
        for cb in range(layout.col_blocks):
            grid = np.zeros((tile_rows, tile_cols), dtype=np.int64)
            rows = plane[rb * tile_rows: (rb + 1) * tile_rows,
                         cb * tile_cols: (cb + 1) * tile_cols]
            grid[: rows.shape[0], : rows.shape[1]] = rows
            tile = CrossbarTile(tile_rows, tile_cols, 1, bias)
            tile.program(grid)
            tiles.append(tile)
    return tiles, layout


@dataclass(frozen=True)
class CycleReadout:
    """Raw (pre-correction) analog bitline values for one streamed cycle."""

    columns: np.ndarray   # (num_tiles, tile_cols)
    unit: np.ndarray      # (num_tiles,) all-ones unit-column current
    ones: np.ndarray      # (num_tiles,) exact input popcount per row block


def stream_cycle(tiles, layout: ProgramLayout, input_bits: np.ndarray,
                 noise: NoiseSpec = None) -> CycleReadout:
    """Drive one bit per logical row; return raw analog column currents.

    Each active cell contributes its level times N(1, cell_variance^2) when
    noisy; a column with k active unit cells therefore reads N(k, k*var^2).
    Flipped columns are corrected digitally after ADC readout, not here.
    """
    bits = np.asarray(input_bits, dtype=np.int64)
    if len(bits) != layout.logical_rows:
        raise ValueError("input_bits length must equal logical rows")
    num_tiles = layout.tiles_used
    columns = np.zeros((num_tiles, layout.tile_cols), dtype=np.float64)
    unit = np.zeros(num_tiles, dtype=np.float64)
    ones = np.zeros(num_tiles, dtype=np.int64)
    for t, tile in enumerate(tiles):
        rb = t // layout.col_blocks
        seg = np.zeros(tile.rows, dtype=np.int64)
        chunk = bits[rb * tile.rows: (rb + 1) * tile.rows]
        seg[: len(chunk)] = chunk
        active = seg @ tile.effective_cells()
        pop = int(seg.sum())
        ones[t] = pop
        if noise is not None and noise.cell_variance > 0:
            std = noise.cell_variance
            columns[t] = active + noise.rng.normal(
                0.0, std * np.sqrt(np.maximum(active, 0)))
            unit[t] = pop + noise.rng.normal(0.0, std * math.sqrt(pop)) if pop else 0.0
        else:
            columns[t] = active
            unit[t] = pop
    return CycleReadout(columns, unit, ones)


def _corrected_columns(tiles, layout: ProgramLayout, codes: np.ndarray,
                       unit_codes: np.ndarray) -> np.ndarray:
    """Undo flip encoding digitally: true = input_popcount - raw."""
    out = np.array(codes, dtype=np.int64)
    for t, tile in enumerate(tiles):
        flip = tile.flip_flags
        out[t, flip] = unit_codes[t] - out[t, flip]
    return out


def crossbar_polymult(a: Poly, s_centered: np.ndarray,
                      params: RingParams = DEFAULT_PARAMS,
                      noise: NoiseSpec = None,
                      adc: AdcSpec = None,
                      tile_rows: int = DEFAULT_TILE_ROWS,
                      tile_cols: int = DEFAULT_TILE_COLS,
                      tiles=None, layout=None) -> Poly:
    """Full per-cycle pipeline: program, stream, ADC, correct, accumulate.

    Accumulation shifts each cycle's signed per-coefficient dot product by its
    bit weight and reduces modulo a.modulus; in ideal mode the result is
    bit-identical to the software product. Pass pre-programmed (tiles, layout)
    to model the stationary secret across many multiplications.
    """
    n = a.n
    target = a.modulus.bit_length() - 1
    if tiles is None or layout is None:
        M = build_negacyclic_matrix(s_centered)
        tiles, layout = program_operand(M, params, tile_rows, tile_cols)
    bias = tiles[0].bias
    bpc = layout.bits_per_coeff

    if adc is None:
        # cover the worst-case post-flip column current so integer levels are
        # represented exactly (a population tie at rows/2 can still read rows/2)
        peak = max(int(t.effective_cells().sum(axis=0).max()) for t in tiles)
        peak = max(peak, layout.tile_rows)  # the unit column reads up to rows
        bits = adc_bits_for(peak)
        # full scale = 2^bits - 1 >= peak keeps integer levels 1:1 with codes
        adc = AdcSpec(bits, (1 << bits) - 1)

    acc = np.zeros(n, dtype=np.int64)
    mod = np.int64(a.modulus)
    slice_w = (np.int64(1) << np.arange(bpc, dtype=np.int64))
    for cycle in range(target):
        in_bits = (a.coeffs >> cycle) & 1
        readout = stream_cycle(tiles, layout, in_bits, noise)
        codes = adc_read(readout.columns, adc)
        unit_codes = adc_read(readout.unit, adc)
        true_cols = _corrected_columns(tiles, layout, codes, unit_codes)

        # reassemble per-coefficient biased dot products from the bit slices
        per_tile = true_cols.reshape(layout.row_blocks, layout.col_blocks,
                                     layout.coeff_cols_per_tile, bpc)
        unit_sum = unit_codes.reshape(layout.row_blocks, layout.col_blocks)
        biased = (per_tile * slice_w).sum(axis=3).sum(axis=0)  # (col_blocks, ccpt)
        biased = biased.reshape(-1)[:n]
        pop_total = unit_sum[:, 0].sum()  # popcount is identical across blocks' columns
        signed = biased - bias * pop_total
        acc = (acc + ((signed % mod) << cycle)) % mod
    return Poly(acc, a.modulus)


class XbarBackend:
    """Ideal crossbar backend: vectorized, bit-exact against the pipeline.

    result = sum_c 2^c * (a_bits_c @ (M + bias)) - bias * sum_c 2^c * pc_c,
    reduced mod 2^target -- the same algebra the sampled pipeline performs,
    with the per-sample ADC loop collapsed into one integer matmul.
    """

    def __init__(self, params: RingParams = DEFAULT_PARAMS):
        self.params = params
        self.mult_count = 0
        self.cell_bits_written = 0
        self.boot_cell_bits = 0
        # boot slot holds the long-lived key-generation/decryption secret;
        # work slot holds the per-encryption ephemeral secret
        self._slots = {"boot": {}, "work": {}}

    def _install(self, s_centered: np.ndarray, slot: str) -> None:
        s = np.asarray(s_centered, dtype=np.int64)
        bias = self.params.mu // 2
        self._slots[slot] = {
            s[j].tobytes():
                (build_negacyclic_matrix(s[j]).entries + bias).astype(np.float64)
            for j in range(s.shape[0])
        }
        bits = s.size * DEFAULT_BITS_PER_COEFF
        if slot == "boot":
            self.boot_cell_bits += bits
        else:
            self.cell_bits_written += bits

    def install_boot_secret(self, s_centered: np.ndarray, params: RingParams) -> None:
        self._install(s_centered, "boot")

    def program_secret(self, s_centered: np.ndarray, params: RingParams) -> None:
        self._install(s_centered, "work")

    def _matrix_for(self, s_poly_centered: np.ndarray) -> np.ndarray:
        key = np.asarray(s_poly_centered, dtype=np.int64).tobytes()
        for slot in ("work", "boot"):
            if key in self._slots[slot]:
                return self._slots[slot][key]
        # operand was never programmed; install ad hoc (counts as writes)
        bias = self.params.mu // 2
        m = (build_negacyclic_matrix(s_poly_centered).entries + bias).astype(np.float64)
        self._slots["work"][key] = m
        self.cell_bits_written += len(s_poly_centered) * DEFAULT_BITS_PER_COEFF
        return m

    def mul_raw(self, a: Poly, s_poly_centered: np.ndarray) -> np.ndarray:
        self.mult_count += 1
        target = a.modulus.bit_length() - 1
        biased = self._matrix_for(s_poly_centered)
        bits = ((a.coeffs[None, :] >> np.arange(target)[:, None]) & 1)
        # float64 matmul is exact here (dots <= 256*8 < 2^53) and runs on BLAS
        sums = (bits.astype(np.float64) @ biased).astype(np.int64)
        pc = bits.sum(axis=1)                     # per-cycle input popcount
        signed = sums - (self.params.mu // 2) * pc[:, None]
        weights = (np.int64(1) << np.arange(target, dtype=np.int64))
        return (weights @ (signed % a.modulus)) % a.modulus

    def mul(self, a: Poly, s_poly_centered: np.ndarray) -> Poly:
        return Poly(self.mul_raw(a, s_poly_centered), a.modulus)

    def reset_counters(self) -> None:
        self.mult_count = 0
        self.cell_bits_written = 0
        self.boot_cell_bits = 0


class NoisySampleBackend(XbarBackend):
    """Crossbar backend with post-calibration sample-referred read noise.

    Raw per-cell multiplicative variation is largely removed by programming
    verification and per-column calibration; what reaches the ADC is modeled
    as an additive residual on each converted sample, Gaussian with standard
    deviation cell_variance x noise_gain in units of one cell current. A
    sample only perturbs the result when the residual crosses the rounding
    threshold, so errors are drawn sparsely: the number of affected samples
    is binomial and each error lands on a uniform (cycle, coefficient,
    bit-slice) sample with weight 2^(cycle+slice).

    Keygen runs noise-free (boot-time programming is verified off-line);
    encryption and decryption multiplications are all noisy.
    """

    def __init__(self, noise: NoiseSpec, params: RingParams = DEFAULT_PARAMS,
                 noise_gain: float = DEFAULT_NOISE_GAIN):
        super().__init__(params)
        self.noise = noise
        self.noise_gain = noise_gain
        self.noisy = True

    def _error_std(self) -> float:
        return self.noise.cell_variance * self.noise_gain

    def mul_raw(self, a: Poly, s_poly_centered: np.ndarray) -> np.ndarray:
        result = super().mul_raw(a, s_poly_centered)
        std = self._error_std()
        if not self.noisy or std <= 0:
            return result
        target = a.modulus.bit_length() - 1
        n = a.n
        blocks = -(-n // DEFAULT_TILE_ROWS)
        slices = DEFAULT_BITS_PER_COEFF
        num_samples = target * n * slices * blocks
        # P(|N(0,std)| crosses the half-LSB rounding threshold)
        p_flip = 2.0 * _phi_tail(0.5 / std)
        if p_flip <= 0:
            return result
        rng = self.noise.rng
        k = rng.binomial(num_samples, p_flip)
        if k == 0:
            return result
        result = result.copy()
        mod = a.modulus
        for _ in range(k):
            cycle = int(rng.integers(target))
            coeff = int(rng.integers(n))
            sl = int(rng.integers(slices))
            # magnitude from the conditional tail |N(0,std)| > 0.5, rounded
            u = rng.random() * _phi_tail(0.5 / std)
            mag = 1
            while _phi_tail((mag + 0.5) / std) > u:
                mag += 1
            err = mag if rng.random() < 0.5 else -mag
            result[coeff] = (result[coeff] + (err << (cycle + sl))) % mod
        return result


def _phi_tail(x: float) -> float:
    """P(N(0,1) > x)."""
    return 0.5 * math.erfc(x / math.sqrt(2.0))
