"""Counter-based random streams for reproducible parallel path generation.

Every path owns independent lanes of uint64 words defined purely by
(seed, path index, lane, slot), so results never depend on batching or
scheduling.  The generator is the splitmix64 output function applied to an
affine counter, which passes standard statistical batteries and is cheap to
evaluate both here (vectorized numpy) and in the compiled kernels.

Lane layout used by the path kernels:
  lane 0: slot pairs (2k, 2k+1) -> Box-Muller normal pair (2k, 2k+1)
  lane 1: slot m -> thinning uniform for step m
  lane 2: slots (0, 1) -> initial-condition normal; slot 2 -> Exp(1) clock
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX_A = np.uint64(0xBF58476D1CE4E5B9)
MIX_B = np.uint64(0x94D049BB133111EB)
LANE_SALT = np.uint64(0xD1342543DE82EF95)

LANE_NORMAL = 0
LANE_THINNING = 1
LANE_AUX = 2

_INV53 = 1.0 / float(1 << 53)


def mix64(z: np.ndarray | np.uint64) -> np.ndarray | np.uint64:
    """splitmix64 finalizer; accepts uint64 scalars or arrays."""
    z = np.uint64(z) if np.isscalar(z) or isinstance(z, (int, np.integer)) else z
    with np.errstate(over="ignore"):
        z = z ^ (z >> np.uint64(30))
        z = z * MIX_A
        z = z ^ (z >> np.uint64(27))
        z = z * MIX_B
        z = z ^ (z >> np.uint64(31))
    return z


def stream_root(seed: int, path: int | np.ndarray, lane: int) -> np.uint64 | np.ndarray:
    """Root word of the (seed, path, lane) stream."""
    s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
    p = np.asarray(path, dtype=np.uint64) if not np.isscalar(path) else np.uint64(path)
    with np.errstate(over="ignore"):
        root = mix64(s)
        root = mix64(root ^ (GOLDEN * (p + np.uint64(1))))
        root = mix64(root ^ (LANE_SALT * (np.uint64(lane) + np.uint64(1))))
    return root


def raw_words(root: np.uint64 | np.ndarray, slots: np.ndarray) -> np.ndarray:
    """uint64 words at the given slot indices; broadcasts root against slots."""
    s = np.asarray(slots, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(np.add(root, GOLDEN * (s + np.uint64(1)), dtype=np.uint64))


def to_unit_open(words: np.ndarray) -> np.ndarray:
    """Map uint64 words to uniforms in (0, 1]; safe as a log argument."""
    return ((words >> np.uint64(11)).astype(np.float64) + 1.0) * _INV53


def normals_for_paths(seed: int, paths: np.ndarray, n: int) -> np.ndarray:
    """Standard-normal noise, shape (len(paths), n), lane 0 of each path.

    Normal 2k comes from the cosine branch of the Box-Muller pair built on
    slots (2k, 2k+1), normal 2k+1 from the sine branch.
    """
    n_pairs = (n + 1) // 2
    root = stream_root(seed, paths, LANE_NORMAL)[:, None]
    even = raw_words(root, np.arange(0, 2 * n_pairs, 2, dtype=np.uint64))
    odd = raw_words(root, np.arange(1, 2 * n_pairs, 2, dtype=np.uint64))
    r = np.sqrt(-2.0 * np.log(to_unit_open(even)))
    theta = (2.0 * np.pi) * to_unit_open(odd)
    out = np.empty((len(paths), 2 * n_pairs))
    out[:, 0::2] = r * np.cos(theta)
    out[:, 1::2] = r * np.sin(theta)
    return out[:, :n]


def thinning_uniforms(seed: int, paths: np.ndarray, n: int) -> np.ndarray:
    """Uniforms in (0, 1] for per-step thinning, shape (len(paths), n)."""
    root = stream_root(seed, paths, LANE_THINNING)[:, None]
    return to_unit_open(raw_words(root, np.arange(n, dtype=np.uint64)))


def initial_normals(seed: int, paths: np.ndarray) -> np.ndarray:
    """One standard normal per path for sampling the initial condition."""
    root = stream_root(seed, paths, LANE_AUX)[:, None]
    words = raw_words(root, np.arange(2, dtype=np.uint64))
    r = np.sqrt(-2.0 * np.log(to_unit_open(words[:, 0])))
    return r * np.cos((2.0 * np.pi) * to_unit_open(words[:, 1]))


def exponential_clocks(seed: int, paths: np.ndarray) -> np.ndarray:
    """One Exp(1) draw per path (the coupled-construction clock)."""
    root = stream_root(seed, paths, LANE_AUX)
    words = raw_words(root[:, None], np.array([2], dtype=np.uint64))[:, 0]
    return -np.log(to_unit_open(words))
