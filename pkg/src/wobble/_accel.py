"""Counter-based standard-normal generation, the package's hot kernel.

Variates are derived statelessly from (seed, stream, counter) through a
splitmix64-style hash, mapped to (0, 1) and pushed through the AS241 inverse
normal CDF. Clouds for different test points (streams) can therefore be
generated in any order, on any worker, with identical results.

Two backends exist: a numba @njit loop and a pure-numpy fallback, selected at
import time by the WOBBLE_NO_NUMBA environment variable (any non-empty value
forces numpy). The uniform stage is bit-identical across backends; the inverse
CDF stage may differ in the last ulp where libm and numpy's vectorized
log/sqrt disagree. Run benchmarks/bench_kernels.py to compare the two.
"""

import os

import numpy as np

from . import special

_GOLDEN = 0x9E3779B97F4A7C15
_K1 = 0xBF58476D1CE4E5B9
_K2 = 0x94D049BB133111EB
_STREAM_SALT = 0xD1B54A32D192ED03
_MASK64 = (1 << 64) - 1

_U53 = 2.0 ** -53
_U54 = 2.0 ** -54

HAVE_NUMBA = False
if not os.environ.get("WOBBLE_NO_NUMBA"):
    try:
        import numba

        HAVE_NUMBA = True
    except ImportError:  # pragma: no cover
        pass


def _mix64(z: int) -> int:
    """splitmix64 finalizer on python ints (mod 2**64)."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * _K1) & _MASK64
    z ^= z >> 27
    z = (z * _K2) & _MASK64
    return z ^ (z >> 31)


def stream_key(seed: int, stream: int) -> int:
    """Derive the 64-bit key of one variate stream from (seed, stream)."""
    a = _mix64(int(seed) & _MASK64)
    b = _mix64((int(stream) & _MASK64) ^ _STREAM_SALT)
    return _mix64((a + b) & _MASK64)


def uniforms_numpy(key: int, count: int) -> np.ndarray:
    """count uniforms in (0, 1) from counters 1..count under `key`."""
    idx = np.arange(1, count + 1, dtype=np.uint64)
    z = np.uint64(key) + idx * np.uint64(_GOLDEN)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_K1)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_K2)
    z ^= z >> np.uint64(31)
    return (z >> np.uint64(11)).astype(np.float64) * _U53 + _U54


def _ppnd16_numpy(p: np.ndarray) -> np.ndarray:
    """Vectorized AS241 with the same coefficients as special._ppnd16."""
    A, B, C, D, E, F = special._A, special._B, special._C, special._D, special._E, special._F
    q = p - 0.5
    out = np.empty_like(p)

    central = np.abs(q) <= 0.425
    r = 0.180625 - q[central] * q[central]
    num = ((((((A[7] * r + A[6]) * r + A[5]) * r + A[4]) * r + A[3]) * r + A[2]) * r + A[1]) * r + A[0]
    den = ((((((B[6] * r + B[5]) * r + B[4]) * r + B[3]) * r + B[2]) * r + B[1]) * r + B[0]) * r + 1.0
    out[central] = q[central] * num / den

    t = ~central
    qt = q[t]
    r = np.sqrt(-np.log(np.where(qt < 0.0, p[t], 1.0 - p[t])))
    mid = r <= 5.0
    rm = r[mid] - 1.6
    num = ((((((C[7] * rm + C[6]) * rm + C[5]) * rm + C[4]) * rm + C[3]) * rm + C[2]) * rm + C[1]) * rm + C[0]
    den = ((((((D[6] * rm + D[5]) * rm + D[4]) * rm + D[3]) * rm + D[2]) * rm + D[1]) * rm + D[0]) * rm + 1.0
    vals = np.empty_like(r)
    vals[mid] = num / den
    rf = r[~mid] - 5.0
    num = ((((((E[7] * rf + E[6]) * rf + E[5]) * rf + E[4]) * rf + E[3]) * rf + E[2]) * rf + E[1]) * rf + E[0]
    den = ((((((F[6] * rf + F[5]) * rf + F[4]) * rf + F[3]) * rf + F[2]) * rf + F[1]) * rf + F[0]) * rf + 1.0
    vals[~mid] = num / den
    out[t] = np.where(qt < 0.0, -vals, vals)
    return out


def standard_normals_numpy(seed: int, stream: int, count: int) -> np.ndarray:
    return _ppnd16_numpy(uniforms_numpy(stream_key(seed, stream), count))


if HAVE_NUMBA:
    _ppnd16_nb = numba.njit(cache=True)(special._ppnd16)

    @numba.njit(cache=True)
    def _fill_normals(key, out):
        golden = np.uint64(_GOLDEN)
        k1 = np.uint64(_K1)
        k2 = np.uint64(_K2)
        for i in range(out.size):
            z = key + np.uint64(i + 1) * golden
            z ^= z >> np.uint64(30)
            z *= k1
            z ^= z >> np.uint64(27)
            z *= k2
            z ^= z >> np.uint64(31)
            u = float(z >> np.uint64(11)) * _U53 + _U54
            out[i] = _ppnd16_nb(u)

    def standard_normals_numba(seed: int, stream: int, count: int) -> np.ndarray:
        out = np.empty(count, dtype=np.float64)
        _fill_normals(np.uint64(stream_key(seed, stream)), out)
        return out

    standard_normals = standard_normals_numba
else:
    standard_normals = standard_normals_numpy


def backend_name() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
