import numpy as np
import pytest

from saberxbar.params import DEFAULT_PARAMS
from saberxbar.ring import Poly, negacyclic_product
from saberxbar.pke import SoftwareBackend
from saberxbar.xbar import (NegacyclicMatrix, build_negacyclic_matrix,
                            NoiseSpec, AdcSpec, adc_read, adc_bits_for,
                            CrossbarTile, ProgramLayout, program_operand,
                            stream_cycle, crossbar_polymult, XbarBackend,
                            NoisySampleBackend, DEFAULT_NOISE_GAIN)

P = DEFAULT_PARAMS


def test_negacyclic_matrix_entry_formula():
    s = np.array([5, -2, 3])
    M = build_negacyclic_matrix(s).entries
    # entries[i][j] = +s[j-i] for j >= i, -s[n+j-i] for j < i
    want = np.array([[5, -2, 3],
                     [-3, 5, -2],
                     [2, -3, 5]])
    assert np.array_equal(M, want)


def test_negacyclic_matrix_product_equals_polymult():
    rng = np.random.default_rng(0)
    for n in (4, 16, 256):
        s = rng.integers(-4, 5, n)
        a = rng.integers(0, 1024, n)
        M = build_negacyclic_matrix(s).entries
        assert np.array_equal(a @ M, negacyclic_product(a, s))


def test_negacyclic_matrix_must_be_square():
    with pytest.raises(ValueError):
        NegacyclicMatrix(np.zeros((2, 3)))


def test_adc_read_exact_on_integers():
    adc = AdcSpec(8, (1 << 8) - 1)
    vals = np.arange(256)
    assert np.array_equal(adc_read(vals, adc), vals)
    assert adc_read(300.0, adc) == 255  # clamped
    assert adc_read(-3.0, adc) == 0


def test_adc_bits_for_covers_range():
    assert adc_bits_for(63) == 6
    assert adc_bits_for(64) == 7
    assert adc_bits_for(128) == 8
    assert adc_bits_for(0) == 1


def test_tile_flip_encoding_bounds_column_current():
    tile = CrossbarTile(rows=8, cols=4)
    levels = np.zeros((8, 4), dtype=np.int64)
    levels[:, 0] = 1          # full column -> stored complemented
    levels[:3, 1] = 1         # light column -> stored as-is
    tile.program(levels)
    assert tile.flip_flags[0] and not tile.flip_flags[1]
    assert tile.cells[:, 0].sum() == 0
    assert tile.cells[:, 1].sum() == 3
    assert tile.writes == 8 * 4


def test_tile_program_validates_shape_and_levels():
    tile = CrossbarTile(rows=4, cols=4)
    with pytest.raises(ValueError):
        tile.program(np.zeros((3, 4), dtype=np.int64))
    with pytest.raises(ValueError):
        tile.program(np.full((4, 4), 2, dtype=np.int64))


def test_tile_stuck_fault_overrides_readout_only():
    tile = CrossbarTile(rows=4, cols=4)
    tile.program(np.zeros((4, 4), dtype=np.int64))
    writes = tile.writes
    tile.set_stuck_fault(1, 2, 1)
    assert tile.effective_cells()[1, 2] == 1
    assert tile.cells[1, 2] == 0
    assert tile.writes == writes
    tile.clear_faults()
    assert tile.effective_cells()[1, 2] == 0


def test_program_layout_geometry():
    layout = ProgramLayout(256, 256, 4)
    assert layout.row_blocks == 2
    assert layout.col_blocks == 8
    assert layout.tiles_used == 16
    assert layout.coeff_cols_per_tile == 32
    # coefficient 32 bit 1 sits at the start of the second column block
    assert layout.locate(0, 32, 1) == (1, 0, 1)
    assert layout.locate(128, 0, 0) == (8, 0, 0)
    with pytest.raises(ValueError):
        layout.locate(256, 0, 0)


def test_program_operand_bits_match_matrix():
    rng = np.random.default_rng(1)
    s = rng.integers(-4, 5, P.n)
    M = build_negacyclic_matrix(s)
    tiles, layout = program_operand(M, P)
    assert len(tiles) == 16
    # reconstruct a few logical cells through the layout
    for row, coeff, bit in ((0, 0, 0), (37, 200, 3), (255, 255, 2)):
        t, pr, pc = layout.locate(row, coeff, bit)
        stored = tiles[t].cells[pr, pc]
        if tiles[t].flip_flags[pc]:
            stored = 1 - stored
        assert stored == ((M.entries[row, coeff] + 4) >> bit) & 1


def test_stream_cycle_ideal_popcounts():
    rng = np.random.default_rng(2)
    s = rng.integers(-4, 5, P.n)
    tiles, layout = program_operand(build_negacyclic_matrix(s), P)
    bits = rng.integers(0, 2, P.n)
    readout = stream_cycle(tiles, layout, bits)
    assert np.array_equal(readout.unit, readout.ones)
    # block 0 sees the first 128 input bits, block 1 the rest
    assert readout.ones[0] == bits[:128].sum()
    assert readout.ones[8] == bits[128:].sum()


def test_crossbar_polymult_matches_software_exactly():
    rng = np.random.default_rng(3)
    for _ in range(3):
        a = Poly(rng.integers(0, P.p, P.n), P.p)
        s = rng.integers(-4, 5, P.n)
        got = crossbar_polymult(a, s, P)
        assert np.array_equal(got.coeffs, negacyclic_product(a.coeffs, s) % P.p)


def test_crossbar_polymult_mod_q_width():
    rng = np.random.default_rng(4)
    a = Poly(rng.integers(0, P.q, P.n), P.q)
    s = rng.integers(-4, 5, P.n)
    got = crossbar_polymult(a, s, P)
    assert np.array_equal(got.coeffs, negacyclic_product(a.coeffs, s) % P.q)


def test_crossbar_polymult_reuses_preprogrammed_tiles():
    rng = np.random.default_rng(5)
    s = rng.integers(-4, 5, P.n)
    tiles, layout = program_operand(build_negacyclic_matrix(s), P)
    writes = sum(t.writes for t in tiles)
    for _ in range(3):
        a = Poly(rng.integers(0, P.p, P.n), P.p)
        crossbar_polymult(a, s, P, tiles=tiles, layout=layout)
    assert sum(t.writes for t in tiles) == writes


def test_stuck_fault_breaks_the_product():
    rng = np.random.default_rng(6)
    a = Poly(rng.integers(1, P.p, P.n), P.p)
    s = rng.integers(-4, 5, P.n)
    tiles, layout = program_operand(build_negacyclic_matrix(s), P)
    want = negacyclic_product(a.coeffs, s) % P.p
    # force a visible flip on a cell whose stored bit is 0
    t, r, c = 0, 0, 0
    level = 1 - int(tiles[t].cells[r, c])
    tiles[t].set_stuck_fault(r, c, level)
    got = crossbar_polymult(a, s, P, tiles=tiles, layout=layout)
    assert not np.array_equal(got.coeffs, want)


def test_xbar_backend_matches_software_backend():
    rng = np.random.default_rng(7)
    xb = XbarBackend(P)
    sw = SoftwareBackend()
    for modulus in (P.p, P.q):
        a = Poly(rng.integers(0, modulus, P.n), modulus)
        s = rng.integers(-4, 5, P.n)
        assert np.array_equal(xb.mul_raw(a, s) % modulus,
                              sw.mul_raw(a, s) % modulus)


def test_xbar_backend_write_accounting():
    rng = np.random.default_rng(8)
    xb = XbarBackend(P)
    boot = rng.integers(-4, 5, (P.l, P.n))
    xb.install_boot_secret(boot, P)
    assert xb.cell_bits_written == 0
    assert xb.boot_cell_bits == P.l * P.n * 4
    work = rng.integers(-4, 5, (P.l, P.n))
    xb.program_secret(work, P)
    assert xb.cell_bits_written == P.l * P.n * 4 == 3072
    # multiplying by either installed secret costs no further writes
    a = Poly(rng.integers(0, P.p, P.n), P.p)
    xb.mul_raw(a, boot[0])
    xb.mul_raw(a, work[1])
    assert xb.cell_bits_written == 3072


def test_noisy_backend_zero_variance_is_exact():
    rng = np.random.default_rng(9)
    nb = NoisySampleBackend(NoiseSpec(0.0), P)
    sw = SoftwareBackend()
    a = Poly(rng.integers(0, P.p, P.n), P.p)
    s = rng.integers(-4, 5, P.n)
    assert np.array_equal(nb.mul_raw(a, s), sw.mul_raw(a, s) % P.p)


def test_noisy_backend_perturbs_at_high_variance():
    rng = np.random.default_rng(10)
    nb = NoisySampleBackend(NoiseSpec(0.5, seed=1), P)
    sw = SoftwareBackend()
    a = Poly(rng.integers(0, P.p, P.n), P.p)
    s = rng.integers(-4, 5, P.n)
    diffs = sum(not np.array_equal(nb.mul_raw(a, s), sw.mul_raw(a, s) % P.p)
                for _ in range(10))
    assert diffs > 0
    nb.noisy = False
    assert np.array_equal(nb.mul_raw(a, s), sw.mul_raw(a, s) % P.p)


def test_noise_spec_validation_and_gain():
    with pytest.raises(ValueError):
        NoiseSpec(-0.1)
    assert DEFAULT_NOISE_GAIN > 0
