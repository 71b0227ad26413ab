"""Counter-based normal variates.

Every stream is addressed by ``(master_seed, namespace, stream_seed)`` and the
value at position ``i`` depends only on that key and ``i``.  Two callers that
ask for the same key read identical numbers regardless of the order in which
streams are generated, which is what makes shared correlation channels and
parallel ensemble generation reproducible.
"""

import hashlib

import numpy as np
from scipy.special import ndtri

_TWO_POW_M53 = 2.0**-53


def stream_key(master_seed, namespace, stream_seed):
    """128-bit Philox key for a stream."""
    token = f"{int(master_seed)}|{namespace}|{stream_seed}".encode()
    return int.from_bytes(hashlib.blake2b(token, digest_size=16).digest(), "little")


def derive_seed(*parts):
    """Stable 63-bit integer seed from arbitrary printable parts."""
    token = "|".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(token, digest_size=8).digest(), "little") >> 1


def uniforms(master_seed, namespace, stream_seed, n, start=0):
    """Uniforms on the open interval (0, 1) at positions ``start .. start+n-1``."""
    if n < 0 or start < 0:
        raise ValueError("n and start must be non-negative")
    bitgen = np.random.Philox(key=stream_key(master_seed, namespace, stream_seed))
    if start:
        # Philox emits 4 words per counter step
        bitgen.advance(start // 4)
        skip = start % 4
    else:
        skip = 0
    raw = bitgen.random_raw(n + skip)[skip:]
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _TWO_POW_M53


def normals(master_seed, namespace, stream_seed, n, start=0):
    """Standard normal variates by inverse CDF of :func:`uniforms`."""
    return ndtri(uniforms(master_seed, namespace, stream_seed, n, start))
