"""Bit-exact binary snapshot format for discrete states and trajectories.

Layout per snapshot (all little-endian):

    magic   4 bytes  b"NSV1"
    n       u32      spectral cutoff
    M       u32      step count of the owning run
    T       f64      time horizon
    alpha   f64      regularization length
    count   u32      number of stored modes
    modes   count records of (i32 kx, i32 ky, i32 kz, 6 x f64)

Each record carries re/im of the three velocity components at one wavevector.
Only a canonical half-lattice is stored -- ``kz > 0``, or ``kz == 0`` and
``ky > 0``, or ``kz == ky == 0`` and ``kx > 0`` -- in lexicographic order;
the conjugate half is implied, which makes every round-trip Hermitian by
construction.  A trajectory file is the concatenation of its M+1 state
snapshots in time order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import NSVError
from .fields import SpectralField, ball_mask
from .stepper import DiscreteTrajectory, SchemeParams

MAGIC = b"NSV1"
_HEADER = struct.Struct("<4sIIddI")
_RECORD = struct.Struct("<iii6d")


class SnapshotFormatError(NSVError):
    """Raised when bytes do not parse as a valid snapshot."""


def _canonical_half_modes(kmax: int):
    """Half-lattice wavevectors inside the ball, lexicographic in (kx,ky,kz)."""
    rng = range(-kmax, kmax + 1)
    out = []
    for kx in rng:
        for ky in rng:
            for kz in rng:
                if kx * kx + ky * ky + kz * kz > kmax * kmax:
                    continue
                if (kz > 0) or (kz == 0 and ky > 0) or (kz == 0 and ky == 0 and kx > 0):
                    out.append((kx, ky, kz))
    return out


def write_snapshot(state: SpectralField, params: SchemeParams) -> bytes:
    n = state.kmax
    modes = _canonical_half_modes(n)
    chunks = [
        _HEADER.pack(MAGIC, n, params.M, params.T, params.alpha, len(modes))
    ]
    for kx, ky, kz in modes:
        amp = state.mode((kx, ky, kz))
        chunks.append(
            _RECORD.pack(
                kx,
                ky,
                kz,
                amp[0].real,
                amp[0].imag,
                amp[1].real,
                amp[1].imag,
                amp[2].real,
                amp[2].imag,
            )
        )
    return b"".join(chunks)


@dataclass(frozen=True)
class Snapshot:
    state: SpectralField
    n: int
    M: int
    T: float
    alpha: float


def _read_one(buf: bytes, offset: int) -> tuple:
    if len(buf) - offset < _HEADER.size:
        raise SnapshotFormatError("truncated header")
    magic, n, m_steps, horizon, alpha, count = _HEADER.unpack_from(buf, offset)
    if magic != MAGIC:
        raise SnapshotFormatError(f"bad magic {magic!r}")
    offset += _HEADER.size
    need = count * _RECORD.size
    if len(buf) - offset < need:
        raise SnapshotFormatError("truncated mode table")
    size = 2 * n + 1
    coeffs = np.zeros((3, size, size, size), dtype=np.complex128)
    for _ in range(count):
        kx, ky, kz, *vals = _RECORD.unpack_from(buf, offset)
        offset += _RECORD.size
        if max(abs(kx), abs(ky), abs(kz)) > n:
            raise SnapshotFormatError(f"mode {(kx, ky, kz)} outside cube of {n}")
        amp = np.array(
            [complex(vals[0], vals[1]), complex(vals[2], vals[3]), complex(vals[4], vals[5])]
        )
        coeffs[:, kx + n, ky + n, kz + n] = amp
        coeffs[:, n - kx, n - ky, n - kz] = np.conj(amp)
    state = SpectralField(np.where(ball_mask(n, n), coeffs, 0.0), validate=False)
    snap = Snapshot(state=state, n=n, M=m_steps, T=horizon, alpha=alpha)
    return snap, offset


def read_snapshot(buf: bytes) -> Snapshot:
    snap, offset = _read_one(buf, 0)
    if offset != len(buf):
        raise SnapshotFormatError(f"{len(buf) - offset} trailing bytes")
    return snap


def write_trajectory(traj: DiscreteTrajectory) -> bytes:
    return b"".join(write_snapshot(s, traj.params) for s in traj.states)


def read_trajectory(buf: bytes) -> list:
    """Parse a concatenated snapshot stream into a list of ``Snapshot``."""
    snaps = []
    offset = 0
    while offset < len(buf):
        snap, offset = _read_one(buf, offset)
        snaps.append(snap)
    if not snaps:
        raise SnapshotFormatError("empty stream")
    return snaps
