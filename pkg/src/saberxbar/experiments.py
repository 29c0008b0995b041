"""Experiment orchestration: verification suites, noise Monte Carlo, sweeps.

Configuration is a flat dotted key=value text format, e.g.:

    operation = dec
    algorithm = TC4K2
    noise.cell_variance = 0.05
    trials = 10000
    catalog.write_energy_pj_per_cell_bit = 0.1

All runs are deterministic for a given (config, seed): every trial derives
its RNG stream from the master seed and trial index, so results do not
depend on execution order.
"""

import dataclasses
import io
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .params import RingParams, DEFAULT_PARAMS
from .ring import Poly, negacyclic_product
from .polymult import MultAlgorithm, multiply, schoolbook_mul
from .pke import (SoftwareBackend, keygen, encrypt, decrypt, encode_message,
                  decode_message, frame_payload, check_frame)
from .xbar import (XbarBackend, NoisySampleBackend, NoiseSpec, DEFAULT_NOISE_GAIN,
                   build_negacyclic_matrix, program_operand, crossbar_polymult)
from .schedule import PrecisionMap, accumulate_coefficient, truncate_to_required
from .sac import SacVariant, build_sac_tree, sac_accumulate
from .costmodel import (Operation, Architecture, ArchConfig, ComponentCatalog,
                        DEFAULT_CATALOG, CostReport, estimate)

SCHEMA_VERSION = "1"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    operation: Operation = Operation.DEC
    algorithm: MultAlgorithm = MultAlgorithm.SB
    architecture: Architecture = Architecture.BASELINE
    cell_variance: float = 0.0
    tia_variance: float = 0.02
    noise_gain: float = DEFAULT_NOISE_GAIN
    trials: int = 10_000
    max_retries: int = 0
    seed: int = 0
    catalog: ComponentCatalog = DEFAULT_CATALOG
    params: RingParams = DEFAULT_PARAMS

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.cell_variance < 0 or self.tia_variance < 0:
            raise ConfigError("variances must be >= 0")

    def as_dict(self) -> dict:
        return {
            "operation": self.operation.value,
            "algorithm": self.algorithm.value,
            "architecture": self.architecture.value,
            "noise.cell_variance": self.cell_variance,
            "noise.tia_variance": self.tia_variance,
            "noise.gain": self.noise_gain,
            "trials": self.trials,
            "max_retries": self.max_retries,
            "seed": self.seed,
            "catalog": dataclasses.asdict(self.catalog),
        }


def parse_config_text(text: str) -> dict:
    """key = value lines; '#' starts a comment; blank lines ignored."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def _enum_by_value(enum_cls, value: str, what: str):
    for member in enum_cls:
        if member.value.lower() == value.lower() or member.name.lower() == value.lower():
            return member
    valid = ", ".join(m.value for m in enum_cls)
    raise ConfigError(f"unknown {what} {value!r} (expected one of: {valid})")


_CATALOG_SCALARS = {
    "adc_rate": float,
    "write_latency_ns": float,
    "write_energy_pj_per_cell_bit": float,
    "adc_dac_fraction": float,
    "array_area_um2": float,
    "tia_sense_transfer_ns": float,
    "sac_all_full_width_root": lambda v: v.lower() in ("1", "true", "yes"),
}


def build_config(mapping: dict, base: ExperimentConfig = None) -> ExperimentConfig:
    cfg = base or ExperimentConfig()
    catalog = cfg.catalog
    updates = {}
    try:
        for key, value in mapping.items():
            if key == "operation":
                updates["operation"] = _enum_by_value(Operation, value, "operation")
            elif key == "algorithm":
                updates["algorithm"] = _enum_by_value(MultAlgorithm, value, "algorithm")
            elif key == "architecture":
                updates["architecture"] = _enum_by_value(Architecture, value,
                                                         "architecture")
            elif key == "noise.cell_variance":
                updates["cell_variance"] = float(value)
            elif key == "noise.tia_variance":
                updates["tia_variance"] = float(value)
            elif key == "noise.gain":
                updates["noise_gain"] = float(value)
            elif key == "trials":
                updates["trials"] = int(value)
            elif key == "max_retries":
                updates["max_retries"] = int(value)
            elif key == "seed":
                updates["seed"] = int(value)
            elif key.startswith("catalog."):
                name = key[len("catalog."):]
                if name not in _CATALOG_SCALARS:
                    raise ConfigError(f"unknown catalog field {name!r}")
                catalog = replace(catalog, **{name: _CATALOG_SCALARS[name](value)})
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return replace(cfg, catalog=catalog, **updates)


def load_config(path, base: ExperimentConfig = None) -> ExperimentConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return build_config(parse_config_text(text), base)


# ---------------------------------------------------------------------------
# verification

@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass(frozen=True)
class VerifyReport:
    suites: tuple

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.suites)


def _first_mismatch(got: np.ndarray, want: np.ndarray) -> str:
    idx = int(np.nonzero(got != want)[0][0])
    return f"first failing coefficient {idx}: got {int(got[idx])}, want {int(want[idx])}"


def run_verify(config: ExperimentConfig, stuck_fault=None,
               trials_per_suite: int = 25) -> VerifyReport:
    """Oracle-equivalence suites; `stuck_fault` = (tile, row, col, level)
    injects a stuck cell into the crossbar suite's programmed tiles."""
    rng = np.random.default_rng(config.seed)
    p = config.params
    suites = []

    # polymult algorithms vs schoolbook
    detail, ok = "", True
    for alg in MultAlgorithm:
        for _ in range(trials_per_suite):
            a = Poly(rng.integers(0, p.q, p.n), p.q)
            b = Poly(rng.integers(0, p.q, p.n), p.q)
            got, want = multiply(alg, a, b), schoolbook_mul(a, b)
            if got != want:
                ok = False
                detail = f"{alg.value}: " + _first_mismatch(got.coeffs, want.coeffs)
                break
        if not ok:
            break
    suites.append(SuiteResult("polymult-vs-schoolbook", ok, detail))

    # crossbar pipeline vs software, with optional fault injection
    detail, ok = "", True
    for _ in range(max(2, trials_per_suite // 8)):
        a = Poly(rng.integers(0, p.p, p.n), p.p)
        s = rng.integers(-p.mu // 2, p.mu // 2 + 1, p.n)
        tiles, layout = program_operand(build_negacyclic_matrix(s), p)
        if stuck_fault is not None:
            t, row, col, level = stuck_fault
            tiles[t].set_stuck_fault(row, col, level)
        got = crossbar_polymult(a, s, p, tiles=tiles, layout=layout)
        want = negacyclic_product(a.coeffs, s) % p.p
        if not np.array_equal(got.coeffs, want):
            ok = False
            detail = _first_mismatch(got.coeffs, want)
            if stuck_fault is not None:
                t, row, col, level = stuck_fault
                detail += (f"; injected stuck-at-{level} cell at tile {t}, "
                           f"row {row}, column {col}")
            break
    suites.append(SuiteResult("crossbar-vs-software", ok, detail))

    # SAC trees vs digital Algorithm-1 accumulation
    detail, ok = "", True
    for variant in SacVariant:
        tree = build_sac_tree(variant, 4, p.eps_p)
        for _ in range(trials_per_suite):
            grid = rng.integers(0, 64, (p.eps_p, 4))
            got = sac_accumulate(tree, grid, p.eps_p)
            want = accumulate_coefficient(grid, p.eps_p)
            if got != want:
                ok = False
                detail = f"{variant.value}: got {got}, want {want}"
                break
        if not ok:
            break
    suites.append(SuiteResult("sac-vs-digital-accumulate", ok, detail))

    # modulo truncation safety
    detail, ok = "", True
    pmap = PrecisionMap(p.eps_p)
    for _ in range(trials_per_suite * 4):
        grid = rng.integers(0, 64, (p.eps_p, 4))
        a = accumulate_coefficient(grid, p.eps_p)
        b = accumulate_coefficient(truncate_to_required(grid, pmap), p.eps_p)
        if a != b:
            ok = False
            detail = f"truncated {b} != full {a}"
            break
    suites.append(SuiteResult("truncation-safety", ok, detail))

    return VerifyReport(tuple(suites))


# ---------------------------------------------------------------------------
# noise Monte Carlo

@dataclass(frozen=True)
class FailurePoint:
    cell_variance: float
    max_retries: int
    failure_probability: float
    trials: int
    ci_half_width: float


@dataclass(frozen=True)
class FailureCurve:
    points: tuple
    config: dict

    def probability(self, variance: float, retries: int) -> float:
        for pt in self.points:
            if pt.cell_variance == variance and pt.max_retries == retries:
                return pt.failure_probability
        raise KeyError((variance, retries))


def wilson_interval(failures: int, trials: int, z: float = 1.96):
    """(center, half_width) of the 95% Wilson score interval."""
    if trials == 0:
        return 0.0, 0.0
    phat = failures / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials
                         + z * z / (4 * trials * trials)) / denom
    return center, half


DEFAULT_VARIANCE_GRID = (0.0, 0.02, 0.04, 0.05, 0.06, 0.08, 0.10)


def run_noise(config: ExperimentConfig,
              variance_grid=DEFAULT_VARIANCE_GRID,
              retries_grid=(0,)) -> FailureCurve:
    """Empirical decryption-failure curve over (variance, retries).

    Key generation is exact; encryption and every decryption attempt see
    fresh sample noise. A trial at retry budget r fails when the first r+1
    decryptions all mis-frame the CRC, so the curve is monotone in r by
    construction.
    """
    if not variance_grid or not retries_grid:
        raise ConfigError("variance and retries grids must be non-empty")
    max_r = max(retries_grid)
    points = []
    for var in variance_grid:
        fails_by_budget = {r: 0 for r in retries_grid}
        noise = NoiseSpec(var, config.tia_variance, seed=config.seed ^ 0x5ac)
        backend = NoisySampleBackend(noise, config.params, config.noise_gain)
        rng = np.random.default_rng(config.seed)
        for _ in range(config.trials):
            seed_a, r_kg, r_enc = rng.bytes(32), rng.bytes(32), rng.bytes(32)
            backend.noisy = False
            pk, sk = keygen(seed_a, r_kg, config.params, backend)
            backend.noisy = var > 0
            payload = rng.bytes(config.params.n // 8 - 4)
            msg = frame_payload(payload, config.params)
            ct = encrypt(pk, encode_message(msg, config.params), r_enc,
                         config.params, backend)
            first_success = None
            for attempt in range(max_r + 1):
                out = decode_message(decrypt(sk, ct, config.params, backend))
                if check_frame(out) and out == msg:
                    first_success = attempt
                    break
                if var == 0:
                    break  # exact mode cannot change on retry
            for r in retries_grid:
                if first_success is None or first_success > r:
                    fails_by_budget[r] += 1
        for r in retries_grid:
            _, half = wilson_interval(fails_by_budget[r], config.trials)
            points.append(FailurePoint(var, r, fails_by_budget[r] / config.trials,
                                       config.trials, half))
    return FailureCurve(tuple(points), config.as_dict())


# ---------------------------------------------------------------------------
# design-space sweeps

@dataclass(frozen=True)
class SweepRow:
    operation: str
    algorithm: str
    architecture: str
    report: CostReport = None
    error: str = ""


def default_sweep_points(operation: Operation):
    """The 5-algorithm x {Baseline, ADCShare} grid."""
    return [ArchConfig(operation, alg, arch)
            for alg in MultAlgorithm
            for arch in (Architecture.BASELINE, Architecture.ADC_SHARE)]


def run_sweep(arch_configs, catalog: ComponentCatalog = DEFAULT_CATALOG):
    """One CostReport per design point; per-row failures don't stop the sweep."""
    if not arch_configs:
        raise ConfigError("sweep needs at least one design point")
    rows = []
    for ac in arch_configs:
        try:
            rows.append(SweepRow(ac.operation.value, ac.algorithm.value,
                                 ac.architecture.value, estimate(ac, catalog)))
        except Exception as exc:  # record, continue
            rows.append(SweepRow(ac.operation.value, ac.algorithm.value,
                                 ac.architecture.value, None, str(exc)))
    return rows


_CSV_COLUMNS = ("operation", "algorithm", "architecture", "latency_ns",
                "energy_pj", "adc_pj", "write_pj", "area_um2",
                "samples_converted", "cells_written", "ce_gbit_s_mm2",
                "ee_gbit_j", "error")


def sweep_to_csv(rows, catalog: ComponentCatalog = DEFAULT_CATALOG) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    buf.write(f"# catalog={json.dumps(dataclasses.asdict(catalog), sort_keys=True)}\n")
    buf.write(",".join(_CSV_COLUMNS) + "\n")
    for row in rows:
        if row.report is None:
            vals = [row.operation, row.algorithm, row.architecture,
                    "", "", "", "", "", "", "", "", "", row.error]
        else:
            r = row.report
            vals = [row.operation, row.algorithm, row.architecture,
                    f"{r.latency_ns:.3f}", f"{r.total_energy_pj:.3f}",
                    f"{r.energy_pj['adc']:.3f}", f"{r.energy_pj['write']:.3f}",
                    f"{r.total_area_um2:.3f}", str(r.samples_converted),
                    str(r.cells_written), f"{r.ce_gbit_s_mm2:.4f}",
                    f"{r.ee_gbit_j:.4f}", ""]
        buf.write(",".join(vals) + "\n")
    return buf.getvalue()


def sweep_to_json(rows, catalog: ComponentCatalog = DEFAULT_CATALOG) -> str:
    payload = {
        "schema_version": SCHEMA_VERSION,
        "catalog": dataclasses.asdict(catalog),
        "rows": [],
    }
    for row in rows:
        entry = {"operation": row.operation, "algorithm": row.algorithm,
                 "architecture": row.architecture}
        if row.report is None:
            entry["error"] = row.error
        else:
            r = row.report
            entry.update({
                "latency_ns": r.latency_ns,
                "energy_pj": r.energy_pj,
                "total_energy_pj": r.total_energy_pj,
                "area_um2": r.area_um2,
                "total_area_um2": r.total_area_um2,
                "samples_converted": r.samples_converted,
                "cells_written": r.cells_written,
                "logical_cell_bits": r.logical_cell_bits,
                "ce_gbit_s_mm2": r.ce_gbit_s_mm2,
                "ee_gbit_j": r.ee_gbit_j,
            })
        payload["rows"].append(entry)
    return json.dumps(payload, indent=2, sort_keys=True)


def noise_to_csv(curve: FailureCurve) -> str:
    buf = io.StringIO()
    buf.write(f"# schema_version={SCHEMA_VERSION}\n")
    buf.write(f"# config={json.dumps(curve.config, sort_keys=True)}\n")
    buf.write("cell_variance,max_retries,failure_probability,trials,ci_half_width\n")
    for pt in curve.points:
        buf.write(f"{pt.cell_variance},{pt.max_retries},"
                  f"{pt.failure_probability:.6f},{pt.trials},"
                  f"{pt.ci_half_width:.6f}\n")
    return buf.getvalue()


def noise_to_json(curve: FailureCurve) -> str:
    return json.dumps({
        "schema_version": SCHEMA_VERSION,
        "config": curve.config,
        "points": [dataclasses.asdict(pt) for pt in curve.points],
    }, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# roundtrip driver (shared by the CLI and the acceptance suite)

def run_roundtrips(trials: int, seed: int = 0, backend=None,
                   params: RingParams = DEFAULT_PARAMS) -> int:
    """Full keygen/encrypt/decrypt roundtrips; returns the failure count."""
    backend = backend or XbarBackend(params)
    rng = np.random.default_rng(seed)
    failures = 0
    for _ in range(trials):
        seed_a, r_kg, r_enc = rng.bytes(32), rng.bytes(32), rng.bytes(32)
        pk, sk = keygen(seed_a, r_kg, params, backend)
        msg = frame_payload(rng.bytes(params.n // 8 - 4), params)
        ct = encrypt(pk, encode_message(msg, params), r_enc, params, backend)
        out = decode_message(decrypt(sk, ct, params, backend))
        if out != msg or not check_frame(out):
            failures += 1
    return failures
