"""Module-LWR public-key encryption (SABER PKE).

Key generation, encryption and decryption are parameterized over a
polynomial-multiplication backend so the same code path runs on the software
algorithms and on the crossbar simulator. One operand of every multiplication
is a small centered secret; backends receive it in centered form.
"""

import zlib
from dataclasses import dataclass, field

import numpy as np

from .params import RingParams, DEFAULT_PARAMS, constants
from .ring import Poly, PolyVec, PolyMatrix, gen_matrix, sample_secret, round_shift
from .polymult import MultAlgorithm, conv_raw


@dataclass(frozen=True)
class PublicKey:
    seed_A: bytes
    b: PolyVec  # modulus p


@dataclass(frozen=True)
class SecretKey:
    s_centered: np.ndarray  # (l, n) signed, coefficients in [-mu/2, mu/2]


@dataclass(frozen=True)
class Ciphertext:
    c_m: Poly       # modulus T
    b_prime: PolyVec  # modulus p


class SoftwareBackend:
    """Multiplies with one of the software algorithms; counts PolyMult calls."""

    def __init__(self, algorithm: MultAlgorithm = MultAlgorithm.TC4K2):
        self.algorithm = algorithm
        self.mult_count = 0
        self.cell_bits_written = 0

    def install_boot_secret(self, s_centered: np.ndarray, params: RingParams) -> None:
        pass

    def program_secret(self, s_centered: np.ndarray, params: RingParams) -> None:
        pass

    def mul_raw(self, a: Poly, s_poly_centered: np.ndarray) -> np.ndarray:
        """Negacyclic product as a signed length-n array, not yet reduced
        modulo a.modulus. Feeding the centered secret directly keeps the
        intermediates small; any representative is valid before the final mod."""
        self.mult_count += 1
        conv = conv_raw(self.algorithm, a.coeffs,
                        np.asarray(s_poly_centered, dtype=np.int64))
        n = a.n
        full = np.zeros(2 * n, dtype=np.int64)
        full[: len(conv)] = conv
        return full[:n] - full[n:]

    def mul(self, a: Poly, s_poly_centered: np.ndarray) -> Poly:
        return Poly(self.mul_raw(a, s_poly_centered), a.modulus)

    def reset_counters(self) -> None:
        self.mult_count = 0
        self.cell_bits_written = 0


def _matvec_T(A: PolyMatrix, s_centered: np.ndarray, backend) -> list:
    """(A^T s)_i = sum_j A[j][i] * s_j, one backend call per product."""
    l = A.l
    out = []
    for i in range(l):
        acc = sum(backend.mul_raw(A[j, i], s_centered[j]) for j in range(l))
        out.append(Poly(acc, A.modulus))
    return out


def _matvec(A: PolyMatrix, s_centered: np.ndarray, backend) -> list:
    """(A s)_i = sum_j A[i][j] * s_j; encryption hides s' behind the
    untransposed product so that b^T s' and b'^T s cancel in decryption."""
    l = A.l
    out = []
    for i in range(l):
        acc = sum(backend.mul_raw(A[i, j], s_centered[j]) for j in range(l))
        out.append(Poly(acc, A.modulus))
    return out


def _vecvec(b: PolyVec, s_centered: np.ndarray, backend) -> Poly:
    acc = sum(backend.mul_raw(b[j], s_centered[j]) for j in range(len(b)))
    return Poly(acc, b.modulus)


def keygen(seed_A: bytes, r: bytes, params: RingParams = DEFAULT_PARAMS,
           backend=None, xof_cls=None):
    """b = round_shift((A^T s + h) mod q); pk = (seed_A, b), sk = s."""
    backend = backend or SoftwareBackend()
    cst = constants(params)
    A = gen_matrix(seed_A, params, xof_cls)
    s = sample_secret(r, params, xof_cls)
    backend.install_boot_secret(s, params)
    As = _matvec_T(A, s, backend)
    h1 = Poly(cst.h1(), params.q)
    b = PolyVec(tuple(
        round_shift(p + h1, params.eps_q, params.eps_p) for p in As
    ))
    return PublicKey(bytes(seed_A), b), SecretKey(s)


def encrypt(pk: PublicKey, m: Poly, r_prime: bytes,
            params: RingParams = DEFAULT_PARAMS, backend=None, xof_cls=None) -> Ciphertext:
    if m.modulus != 2 or m.n != params.n:
        raise ValueError("message must be a degree-n polynomial over modulus 2")
    backend = backend or SoftwareBackend()
    cst = constants(params)
    A = gen_matrix(pk.seed_A, params, xof_cls)
    s_prime = sample_secret(r_prime, params, xof_cls)
    backend.program_secret(s_prime, params)

    As = _matvec(A, s_prime, backend)
    h1_q = Poly(cst.h1(), params.q)
    b_prime = PolyVec(tuple(
        round_shift(p + h1_q, params.eps_q, params.eps_p) for p in As
    ))

    v_prime = _vecvec(pk.b, s_prime, backend)  # in R_p
    shifted_m = Poly(m.coeffs.astype(np.int64) << (params.eps_p - 1), params.p)
    pre = v_prime + Poly(cst.h1(), params.p) - shifted_m
    c_m = round_shift(pre, params.eps_p, params.eps_T)
    return Ciphertext(c_m, b_prime)


def decrypt(sk: SecretKey, ct: Ciphertext, params: RingParams = DEFAULT_PARAMS,
            backend=None) -> Poly:
    backend = backend or SoftwareBackend()
    cst = constants(params)
    v = _vecvec(ct.b_prime, sk.s_centered, backend)  # in R_p
    scaled_c = Poly(ct.c_m.coeffs.astype(np.int64) << (params.eps_p - params.eps_T),
                    params.p)
    pre = v - scaled_c + Poly(cst.h2(), params.p)
    return round_shift(pre, params.eps_p, 1)


# ---------------------------------------------------------------------------
# message <-> bytes and CRC framing

def encode_message(data: bytes, params: RingParams = DEFAULT_PARAMS) -> Poly:
    """Plaintext bit i (little-endian within bytes) becomes coefficient i."""
    if len(data) * 8 != params.n:
        raise ValueError(f"message must be exactly {params.n // 8} bytes")
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    return Poly(bits.astype(np.int64), 2)


def decode_message(m: Poly) -> bytes:
    return np.packbits(m.coeffs.astype(np.uint8), bitorder="little").tobytes()


def frame_payload(payload: bytes, params: RingParams = DEFAULT_PARAMS) -> bytes:
    """Append CRC-32 so the plaintext fills n bits; payload is n/8 - 4 bytes."""
    want = params.n // 8 - 4
    if len(payload) != want:
        raise ValueError(f"payload must be {want} bytes")
    return payload + zlib.crc32(payload).to_bytes(4, "little")


def check_frame(frame: bytes) -> bool:
    payload, crc = frame[:-4], frame[-4:]
    return zlib.crc32(payload).to_bytes(4, "little") == crc


# ---------------------------------------------------------------------------
# bit-exact serialization

def pack_values(values: np.ndarray, width: int) -> bytes:
    """Pack unsigned values little-endian, `width` bits each."""
    vals = np.asarray(values, dtype=np.int64)
    bits = (vals[:, None] >> np.arange(width)) & 1
    return np.packbits(bits.astype(np.uint8).ravel(), bitorder="little").tobytes()


def unpack_values(data: bytes, width: int, count: int) -> np.ndarray:
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8), bitorder="little")
    bits = bits[: count * width].reshape(count, width).astype(np.int64)
    return bits @ (np.int64(1) << np.arange(width, dtype=np.int64))


def pack_public_key(pk: PublicKey, params: RingParams = DEFAULT_PARAMS) -> bytes:
    return pk.seed_A + pack_values(pk.b.as_array().ravel(), params.eps_p)


def unpack_public_key(data: bytes, params: RingParams = DEFAULT_PARAMS) -> PublicKey:
    seed, rest = data[:32], data[32:]
    vals = unpack_values(rest, params.eps_p, params.l * params.n)
    return PublicKey(seed, PolyVec.from_array(vals.reshape(params.l, params.n), params.p))


def pack_secret_key(sk: SecretKey, params: RingParams = DEFAULT_PARAMS) -> bytes:
    # 4-bit two's complement per centered coefficient
    return pack_values(sk.s_centered.ravel() & 0xF, 4)


def unpack_secret_key(data: bytes, params: RingParams = DEFAULT_PARAMS) -> SecretKey:
    vals = unpack_values(data, 4, params.l * params.n)
    signed = np.where(vals >= 8, vals - 16, vals)
    return SecretKey(signed.reshape(params.l, params.n))


def pack_ciphertext(ct: Ciphertext, params: RingParams = DEFAULT_PARAMS) -> bytes:
    return (pack_values(ct.c_m.coeffs, params.eps_T)
            + pack_values(ct.b_prime.as_array().ravel(), params.eps_p))


def unpack_ciphertext(data: bytes, params: RingParams = DEFAULT_PARAMS) -> Ciphertext:
    n_cm = params.n * params.eps_T // 8
    c_m = Poly(unpack_values(data[:n_cm], params.eps_T, params.n), params.T)
    vals = unpack_values(data[n_cm:], params.eps_p, params.l * params.n)
    return Ciphertext(c_m, PolyVec.from_array(vals.reshape(params.l, params.n), params.p))
