"""Run persistence: norm series, snapshot trajectories, checkpoints, run directories.

A run produces one JSON-lines file (one object per snapshot with the norm
series and any per-snapshot fit fields), binary checkpoints of the spectral
state, and a report.  Checkpoints are little-endian: a fixed header (magic
"EMHD", format version, grid size, box length, the model exponents s and
kappa, the snapshot time) followed by the three components' complex
coefficients in row-major lattice order as interleaved float64 pairs.

Serialization is deterministic: floats are written with shortest
round-trip repr and JSON keys are sorted, so identical configurations and
seeds produce byte-identical files.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field as dc_field
from pathlib import Path

import numpy as np

from .spectral import Grid3, SpectralVectorField

CHECKPOINT_MAGIC = b"EMHD"
CHECKPOINT_VERSION = 1

SERIES_KEYS = ("l2", "hs_sigma_c", "hs_sigma_c_half_kappa", "hs_half_kappa")
FIT_KEYS = ("gevrey_lambda_hat", "gevrey_r_squared")


@dataclass
class NormSeries:
    """A time series of one norm, labeled by what was measured."""

    times: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")


@dataclass
class TrajectorySeries:
    """Snapshot fields at increasing times, with left-endpoint lookup in between."""

    times: np.ndarray
    fields: list

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=np.float64)
        if len(self.times) != len(self.fields):
            raise ValueError("times and fields must have equal length")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")

    def at(self, t: float) -> SpectralVectorField:
        """Piecewise-constant interpolation from the left."""
        idx = int(np.searchsorted(self.times, t + 1e-12, side="right")) - 1
        idx = min(max(idx, 0), len(self.fields) - 1)
        return self.fields[idx]

    @property
    def final(self) -> SpectralVectorField:
        return self.fields[-1]

    def __len__(self):
        return len(self.fields)


@dataclass
class RunRecord:
    """Everything a simulation emits: config snapshot, norm series, snapshots, status."""

    model: object
    times: list = dc_field(default_factory=list)
    series: dict = dc_field(default_factory=dict)
    snapshots: TrajectorySeries | None = None
    status: str = "completed"
    blowup_time: float | None = None
    config: dict | None = None
    traces: dict = dc_field(default_factory=dict)
    report: dict = dc_field(default_factory=dict)

    def norm_series(self, key: str) -> NormSeries:
        return NormSeries(np.asarray(self.times), np.asarray(self.series[key]), key)

    def n_snapshots(self) -> int:
        return len(self.times)


# ---------------------------------------------------------------------------
# JSON lines
# ---------------------------------------------------------------------------

def write_series_jsonl(record: RunRecord, path):
    """One sorted-key JSON object per snapshot; missing fit fields are null."""
    path = Path(path)
    with open(path, "w") as fh:
        for i, t in enumerate(record.times):
            row = {"time": float(t)}
            for key in SERIES_KEYS + FIT_KEYS:
                vals = record.series.get(key)
                val = None if vals is None else vals[i]
                if val is not None:
                    val = float(val)
                    if val != val:  # NaN has no strict-JSON form
                        val = None
                row[key] = val
            fh.write(json.dumps(row, sort_keys=True) + "\n")


def read_series_jsonl(path) -> dict:
    times = []
    series: dict = {}
    with open(path) as fh:
        for line in fh:
            row = json.loads(line)
            times.append(row.pop("time"))
            for key, val in row.items():
                series.setdefault(key, []).append(val)
    series["time"] = times
    return series


# ---------------------------------------------------------------------------
# binary checkpoints
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sII4d")  # magic, version, n_per_axis, box_length, s, kappa, time


def save_checkpoint(path, F: SpectralVectorField, s: float, kappa: float, time: float):
    path = Path(path)
    header = _HEADER.pack(CHECKPOINT_MAGIC, CHECKPOINT_VERSION, F.grid.n_per_axis,
                          F.grid.box_length, s, kappa, time)
    with open(path, "wb") as fh:
        fh.write(header)
        for comp in range(3):
            fh.write(np.ascontiguousarray(F.coeffs[comp]).astype("<c16").tobytes())


def load_checkpoint(path) -> tuple[SpectralVectorField, dict]:
    path = Path(path)
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        magic, version, n, box_length, s, kappa, time = _HEADER.unpack(raw)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: bad magic {magic!r}")
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        count = 3 * n * n * n
        data = np.frombuffer(fh.read(count * 16), dtype="<c16").astype(np.complex128)
    grid = Grid3(n, box_length)
    coeffs = data.reshape(3, n, n, n)
    field = SpectralVectorField(grid, coeffs.copy(), reality_flag=True)
    return field, {"s": s, "kappa": kappa, "time": time}


# ---------------------------------------------------------------------------
# run directories
# ---------------------------------------------------------------------------

def save_run(record: RunRecord, out_dir, config_text: str | None = None):
    """Write series.jsonl, per-snapshot checkpoints, and reports under out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_series_jsonl(record, out / "series.jsonl")
    if config_text is not None:
        (out / "config.txt").write_text(config_text)
    if record.snapshots is not None:
        ckdir = out / "checkpoints"
        ckdir.mkdir(exist_ok=True)
        s = getattr(record.model, "s", 0.0)
        kappa = getattr(record.model, "kappa", 0.0)
        for i, (t, F) in enumerate(zip(record.snapshots.times, record.snapshots.fields)):
            save_checkpoint(ckdir / f"chk_{i:06d}.emhd", F, s, kappa, float(t))
    if record.report:
        (out / "report.json").write_text(json.dumps(record.report, sort_keys=True, indent=2) + "\n")
    status = {"status": record.status, "blowup_time": record.blowup_time}
    (out / "status.json").write_text(json.dumps(status, sort_keys=True) + "\n")


def load_run(out_dir) -> RunRecord:
    """Rebuild a record from a run directory (config stays as raw text in record.config)."""
    out = Path(out_dir)
    if not (out / "series.jsonl").exists():
        raise FileNotFoundError(f"no series.jsonl under {out}")
    series = read_series_jsonl(out / "series.jsonl")
    times = series.pop("time")
    status = {"status": "completed", "blowup_time": None}
    if (out / "status.json").exists():
        status = json.loads((out / "status.json").read_text())

    snapshots = None
    model = None
    ckdir = out / "checkpoints"
    if ckdir.exists():
        fields = []
        snap_times = []
        metas = []
        for p in sorted(ckdir.glob("chk_*.emhd")):
            F, meta = load_checkpoint(p)
            fields.append(F)
            snap_times.append(meta["time"])
            metas.append(meta)
        if fields:
            snapshots = TrajectorySeries(np.asarray(snap_times), fields)
            from .dynamics import ModelParams
            model = ModelParams(s=metas[0]["s"], kappa=metas[0]["kappa"])

    config = None
    if (out / "config.txt").exists():
        config = {"text": (out / "config.txt").read_text()}

    return RunRecord(model=model, times=list(times), series=series, snapshots=snapshots,
                     status=status["status"], blowup_time=status["blowup_time"], config=config)
