"""On-disk formats: CSV outputs, lattice snapshots, checkpoints, manifests.

CSV files start with a comment block (``# key: <json>``) carrying every
parameter needed to reproduce them, then one header line naming the
columns. Reals are written with 17 significant digits so they round-trip.

Binary snapshot and checkpoint files share a layout::

    magic (8 bytes) | version (uint32 LE) | header length (uint32 LE)
    | header (UTF-8 JSON) | float64 LE payload arrays, in header order
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .lattice import LatticeGeometry, SpinLattice, build_geometry
from .observables import SpectralResult, TrajectoryRecord, extract_slice
from .simulation import RunState

SNAPSHOT_MAGIC = b"PRTHSNAP"
CHECKPOINT_MAGIC = b"PRTHCKPT"
FORMAT_VERSION = 1

_FLOAT = "%.17g"


class FormatError(ValueError):
    pass


def _comment_block(metadata: dict) -> str:
    return "".join(f"# {k}: {json.dumps(v, sort_keys=True)}\n" for k, v in metadata.items())


def write_csv(path, columns: dict, metadata: dict) -> None:
    names = list(columns)
    arrays = [np.asarray(columns[n]) for n in names]
    lines = [_comment_block(metadata), ",".join(names) + "\n"]
    for row in zip(*arrays):
        cells = []
        for v in row:
            if isinstance(v, (np.integer, int)):
                cells.append(str(int(v)))
            elif isinstance(v, float | np.floating) and np.isnan(v):
                cells.append("")
            else:
                cells.append(_FLOAT % v)
        lines.append(",".join(cells) + "\n")
    Path(path).write_text("".join(lines))


def read_csv(path) -> tuple[dict, dict]:
    """``(columns, metadata)``; empty cells read back as NaN."""
    metadata, header, rows = {}, None, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            metadata[key.strip()] = json.loads(value)
        elif header is None:
            header = line.split(",")
        elif line:
            rows.append([float(c) if c else np.nan for c in line.split(",")])
    if header is None:
        raise FormatError(f"{path}: no header line")
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}, metadata


def write_trajectory(path, record: TrajectoryRecord, metadata: dict) -> None:
    cols = {"n": record.sample_times, "t": record.times, "m": record.m, "H1": record.H1, "HT": record.HT}
    if record.d is not None:
        cols["d"] = record.d
    write_csv(path, cols, {**metadata, "period": record.period})


def read_trajectory(path) -> tuple[TrajectoryRecord, dict]:
    cols, meta = read_csv(path)
    record = TrajectoryRecord(
        cols["n"].astype(np.int64), cols["m"], cols["H1"], cols["HT"], cols.get("d"), float(meta["period"])
    )
    return record, meta


def write_spectrum(path, spectrum: SpectralResult, metadata: dict) -> None:
    meta = {
        **metadata,
        "M": spectrum.M,
        "window_start": spectrum.start,
        "omega": spectrum.omega,
        "peak_frequency": spectrum.peak_frequency,
        "peak_amplitude": spectrum.peak_amplitude,
        "is_peak": spectrum.is_peak,
        "detected_order": None if spectrum.detected_order is None else str(spectrum.detected_order),
    }
    write_csv(path, {
        "k": np.arange(spectrum.M),
        "omega_prime": spectrum.frequencies,
        "amplitude": spectrum.amplitude,
        "re": spectrum.transform.real,
        "im": spectrum.transform.imag,
    }, meta)


def write_window(path, start: int, m: np.ndarray, metadata: dict) -> None:
    write_csv(path, {"n": np.arange(start, start + m.size), "m": m}, {**metadata, "window_start": start})


def read_window(path) -> tuple[int, np.ndarray, dict]:
    cols, meta = read_csv(path)
    return int(meta["window_start"]), cols["m"], meta


def write_slice(path, lattice: SpinLattice, twin: SpinLattice | None, axis: str, layer: int, metadata: dict) -> None:
    """Plane ``i_axis == layer``; columns are the two in-plane indices, Sx, Sz, and twin differences."""
    sx, sz = extract_slice(lattice, axis, layer)
    a_name, b_name = [f"i{c}" for c in "xyz" if c != axis]
    ia, ib = np.meshgrid(np.arange(lattice.L), np.arange(lattice.L), indexing="ij")
    cols = {a_name: ia.ravel(), b_name: ib.ravel(), "Sx": sx.ravel(), "Sz": sz.ravel()}
    if twin is not None:
        tx, tz = extract_slice(twin, axis, layer)
        cols["dSx"] = (sx - tx).ravel()
        cols["dSz"] = (sz - tz).ravel()
    write_csv(path, cols, {**metadata, "axis": axis, "layer": layer})


def _write_binary(path, magic: bytes, header: dict, arrays: list) -> None:
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<II", FORMAT_VERSION, len(blob)))
        fh.write(blob)
        for arr in arrays:
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def _read_binary(path, magic: bytes) -> tuple[dict, bytes]:
    raw = Path(path).read_bytes()
    if raw[:8] != magic:
        raise FormatError(f"{path}: bad magic {raw[:8]!r}")
    version, length = struct.unpack("<II", raw[8:16])
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {version}")
    header = json.loads(raw[16 : 16 + length])
    return header, raw[16 + length :]


def save_snapshot(path, lattice: SpinLattice, header: dict, fmt: str = "csv") -> None:
    """Site-major ``(Sx, Sy, Sz)`` per site, sites in ``(iz, iy, ix)`` order.

    ``header`` should carry ``seed``, ``W`` and ``delta``; ``L`` is added.
    """
    header = {**header, "L": lattice.L}
    if fmt == "csv":
        write_csv(path, {"Sx": lattice.sx, "Sy": lattice.sy, "Sz": lattice.sz}, header)
    elif fmt == "binary":
        _write_binary(path, SNAPSHOT_MAGIC, header, [lattice.vectors])
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")


def load_snapshot(path, geometry: LatticeGeometry | None = None) -> tuple[SpinLattice, dict]:
    if Path(path).read_bytes()[:8] == SNAPSHOT_MAGIC:
        header, payload = _read_binary(path, SNAPSHOT_MAGIC)
        vectors = np.frombuffer(payload, dtype="<f8").reshape(-1, 3)
    else:
        cols, header = read_csv(path)
        vectors = np.stack([cols["Sx"], cols["Sy"], cols["Sz"]], axis=1)
    geometry = geometry or build_geometry(int(header["L"]))
    return SpinLattice(geometry, vectors.T.copy()), header


def write_checkpoint(path, state: RunState, config: dict) -> None:
    """Versioned binary checkpoint of a running simulation.

    The dynamics draws no random numbers after initialization, so the RNG
    position is fully described by the seed and the channels consumed at
    start-up; both are stored for completeness.
    """
    keys = sorted(state.samples)
    arrays = [state.spins.ravel()]
    if state.twin is not None:
        arrays.append(state.twin.ravel())
    arrays.extend(np.asarray(state.samples[k], dtype=np.float64) for k in keys)
    if state.window_m is not None:
        arrays.append(state.window_m)
    header = {
        "config": config,
        "period": state.period,
        "n_sites": int(state.spins.shape[1]),
        "twin": state.twin is not None,
        "sample_keys": keys,
        "sample_lengths": [len(state.samples[k]) for k in keys],
        "window_length": None if state.window_m is None else int(state.window_m.size),
        "rng": {"generator": "philox4x64", "seed": config.get("seed"),
                "channels_consumed": [0, 1, 2, 3] if state.twin is not None else [0, 1]},
    }
    tmp = Path(str(path) + ".tmp")
    _write_binary(tmp, CHECKPOINT_MAGIC, header, arrays)
    tmp.replace(path)


def read_checkpoint(path) -> tuple[RunState, dict]:
    header, payload = _read_binary(path, CHECKPOINT_MAGIC)
    data = np.frombuffer(payload, dtype="<f8")
    n = header["n_sites"]
    pos = 0

    def take(count):
        nonlocal pos
        out = data[pos : pos + count].copy()
        pos += count
        return out

    spins = take(3 * n).reshape(3, n)
    twin = take(3 * n).reshape(3, n) if header["twin"] else None
    samples = {}
    for key, length in zip(header["sample_keys"], header["sample_lengths"]):
        values = take(length)
        samples[key] = [int(v) for v in values] if key == "n" else values.tolist()
    window_m = take(header["window_length"]) if header["window_length"] is not None else None
    if pos != data.size:
        raise FormatError(f"{path}: {data.size - pos} trailing values")
    return RunState(int(header["period"]), spins, twin, samples, window_m), header


def write_manifest(path, manifest: dict) -> None:
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
