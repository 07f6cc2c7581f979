import numpy as np

from evodm.brain.base import Source


def ramp_frequency(step: int, target: float) -> float:
    """Stimulus bit frequency at ``step``: 50% rising by one point per step, capped at ``target``."""
    if target < 0.5:  # noqa: PLR2004
        raise ValueError(f"target must be at least 0.5, got {target}")
    return min((50 + step) / 100, target)


def ramp_schedule(max_steps: int, target: float) -> np.ndarray:
    return np.asarray([ramp_frequency(s, target) for s in range(max_steps)])


def bits_from_uniforms(is_signal: np.ndarray, freq: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Turn uniform draws into input bits.

    ``uniforms[..., 0]`` drives the left bit and ``uniforms[..., 1]`` the right bit. For source S the
    left bit is 0 and the right bit is 1 with probability ``freq`` each; N is the mirror image.
    """
    favoured_left = uniforms[..., 0] < freq
    favoured_right = uniforms[..., 1] < freq
    signal = np.asarray(is_signal, dtype=bool)
    left = np.where(signal, ~favoured_left, favoured_left)
    right = np.where(signal, favoured_right, ~favoured_right)
    return np.stack([left, right], axis=-1).astype(np.uint8)


def sample_input(source: Source, freq: float, rng: np.random.Generator) -> str:
    if not 0.5 <= freq <= 1.0:  # noqa: PLR2004
        raise ValueError(f"freq must be in [0.5, 1.0], got {freq}")
    left, right = bits_from_uniforms(np.asarray(source is Source.S), np.asarray(freq), rng.random(2))
    return f"{left}{right}"
