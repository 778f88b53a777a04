"""Model parameters, PSK constellation, phase quantizer, and channel sampler.

The channel model: a block of L unit-energy M-PSK symbols is rotated by one
phase offset that is uniform on [0, 2*pi) and constant over the block, hit by
i.i.d. circular complex Gaussian noise, and each received sample is reduced to
the index of the angular sector (out of K equal sectors) containing its phase.
K is always a positive integer multiple of M; a = K/M sectors span one
constellation step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

TWO_PI = 2.0 * math.pi


def ramp_dither(block_len: int, sectors: int) -> tuple[float, ...]:
    """Built-in dither schedule: symbol l is rotated by an extra l*2*pi/(L*K).

    Successive symbols advance by one L-th of a sector, which removes the
    exact metric ties that plague the undithered K = 2M configurations.
    """
    if block_len < 1 or sectors < 1:
        raise ValueError("block_len and sectors must be positive")
    step = TWO_PI / (block_len * sectors)
    return tuple(l * step for l in range(block_len))


@dataclass(frozen=True)
class SystemConfig:
    """Static description of one operating point.

    M        constellation order (M-PSK)
    K        number of quantizer sectors, a positive integer multiple of M
    L        block length in symbols (the phase offset is constant over a block)
    snr_db   Es/N0 in dB for unit-energy symbols
    theta0   constellation orientation: symbol m sits at theta0 + m*2*pi/M
    dither   per-symbol extra rotations, exactly L entries; all zeros means the
             standard undithered constellation. Token strings are accepted:
             "none" and "ramp" resolve via resolve_dither.
    """

    M: int
    K: int
    L: int
    snr_db: float
    theta0: float = 0.0
    dither: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.M < 2:
            raise ValueError("M must be at least 2")
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if self.K < self.M or self.K % self.M != 0:
            raise ValueError(
                "K must be a positive integer multiple of M "
                f"(got K={self.K}, M={self.M})"
            )
        d = self.dither
        if d is None:
            d = (0.0,) * self.L
        elif isinstance(d, str):
            resolved = resolve_dither(d, self.L, self.K)
            d = resolved if resolved is not None else (0.0,) * self.L
        else:
            d = tuple(float(v) for v in d)
            if len(d) != self.L:
                raise ValueError(f"dither must have exactly L={self.L} entries")
        object.__setattr__(self, "dither", d)
        object.__setattr__(self, "theta0", float(self.theta0))
        object.__setattr__(self, "snr_db", float(self.snr_db))

    @property
    def a(self) -> int:
        """Sectors per constellation step, K/M."""
        return self.K // self.M

    @property
    def snr_linear(self) -> float:
        return 10.0 ** (self.snr_db / 10.0)

    @property
    def sigma(self) -> float:
        """Per-dimension noise deviation for unit-energy symbols."""
        return math.sqrt(1.0 / (2.0 * self.snr_linear))

    @property
    def is_dithered(self) -> bool:
        return any(v != 0.0 for v in self.dither)

    @property
    def sector_width(self) -> float:
        return TWO_PI / self.K

    def with_snr(self, snr_db: float) -> "SystemConfig":
        return replace(self, snr_db=snr_db)

    def symbol_phases(self, x) -> np.ndarray:
        """Transmitted phases theta0 + x*2*pi/M + dither, one per position."""
        x = np.asarray(x, dtype=np.int64)
        if x.shape[-1] != self.L:
            raise ValueError(f"input must have L={self.L} symbols")
        if np.any((x < 0) | (x >= self.M)):
            raise ValueError("symbols must lie in 0..M-1")
        return self.theta0 + x * (TWO_PI / self.M) + np.asarray(self.dither)

    @classmethod
    def from_file(cls, path) -> "SystemConfig":
        return parse_config_text(Path(path).read_text())


def parse_config_text(text: str) -> SystemConfig:
    """Parse the key=value run-configuration format.

    Recognized keys: M, K, L, snr_db, theta0 (optional), dither (optional:
    'none', 'ramp', or a comma-separated list of L radian offsets). Blank
    lines and '#' comments are ignored.
    """
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, value = line.split("=", 1)
        fields[key.strip()] = value.strip()

    missing = [k for k in ("M", "K", "L", "snr_db") if k not in fields]
    if missing:
        raise ValueError(f"config is missing required keys: {', '.join(missing)}")

    M = int(fields["M"])
    K = int(fields["K"])
    L = int(fields["L"])
    snr_db = float(fields["snr_db"])
    theta0 = float(fields.get("theta0", "0"))
    dither = resolve_dither(fields.get("dither", "none"), L, K)
    return SystemConfig(M=M, K=K, L=L, snr_db=snr_db, theta0=theta0, dither=dither)


def resolve_dither(token: str, block_len: int, sectors: int) -> tuple[float, ...] | None:
    """Map a dither spelling ('none', 'ramp', or comma list) to offsets."""
    token = token.strip()
    if token in ("", "none"):
        return None
    if token == "ramp":
        return ramp_dither(block_len, sectors)
    try:
        values = tuple(float(v) for v in token.split(","))
    except ValueError as exc:
        raise ValueError(f"unrecognized dither token: {token!r}") from exc
    if len(values) != block_len:
        raise ValueError(f"explicit dither needs exactly L={block_len} entries")
    return values


def quantize(c: complex, K: int) -> int:
    """Sector index floor(arg(c) / (2*pi/K)) with arg taken in [0, 2*pi).

    Sector z covers [z*2*pi/K, (z+1)*2*pi/K); boundaries belong to the upper
    sector. A zero sample has no phase and is rejected.
    """
    if K < 1:
        raise ValueError("K must be positive")
    if c == 0:
        raise ValueError("zero sample has undefined phase; redraw the noise")
    ang = math.atan2(c.imag, c.real) % TWO_PI
    # ang can round to exactly 2*pi for angles just below zero; that is the
    # correct top sector, so clamp instead of wrapping to 0.
    return min(int(ang * K / TWO_PI), K - 1)


def sector_index(angles: np.ndarray, K: int) -> np.ndarray:
    """Vectorized quantizer for arrays of angles (radians, any branch)."""
    ang = np.mod(np.asarray(angles, dtype=float), TWO_PI)
    idx = np.floor(ang * K / TWO_PI).astype(np.int64)
    return np.minimum(idx, K - 1)


def modulate(x, config: SystemConfig) -> np.ndarray:
    """Unit-energy transmit samples exp(j*(theta0 + x*2*pi/M + dither))."""
    return np.exp(1j * config.symbol_phases(x))


@dataclass(frozen=True)
class ChannelDraw:
    """One sampled block: common phase offset, input, and quantized output."""

    phi: float
    x: np.ndarray
    z: np.ndarray


def sample_block(
    x,
    config: SystemConfig,
    rng: np.random.Generator,
    phi: float | None = None,
) -> ChannelDraw:
    """Draw one quantized block observation for input x.

    phi overrides the uniform block phase when given (test hook); the noise is
    always drawn from rng. Zero received samples (probability zero) trigger a
    redraw of the affected noise entries.
    """
    x = np.asarray(x, dtype=np.int64)
    phis, Z = sample_blocks(x[None, :], config, rng, phi=phi)
    return ChannelDraw(phi=float(phis[0]), x=x, z=Z[0])


def sample_blocks(
    X,
    config: SystemConfig,
    rng: np.random.Generator,
    phi: float | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized sampler: X is (n, L) ints, returns (phi (n,), Z (n, L))."""
    X = np.asarray(X, dtype=np.int64)
    n = X.shape[0]
    clean = np.exp(1j * config.symbol_phases(X))
    if phi is None:
        phis = rng.uniform(0.0, TWO_PI, size=n)
    else:
        phis = np.full(n, float(phi))
    sigma = config.sigma
    y = clean * np.exp(1j * phis)[:, None] + sigma * (
        rng.standard_normal(X.shape) + 1j * rng.standard_normal(X.shape)
    )
    dead = y == 0
    while np.any(dead):
        idx = np.nonzero(dead)
        y[idx] = clean[idx] * np.exp(1j * phis[idx[0]]) + sigma * (
            rng.standard_normal(idx[0].shape) + 1j * rng.standard_normal(idx[0].shape)
        )
        dead = y == 0
    Z = sector_index(np.angle(y), config.K)
    return phis, Z
