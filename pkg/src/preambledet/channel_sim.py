"""BPSK packet generation and received-window synthesis for ALOHA channels.

Two scenarios are supported: ``awgn`` (one packet in a window of 2N symbols)
and ``interference`` (three packets in 4N symbols, channel load 0.75).
Packets are symbol-synchronous and collisions add sample-wise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PREAMBLE_BITS = np.array([1, 1, 1, 0, 1, 0, 1, 1, 1, 0, 0, 1, 0, 0, 0, 0], dtype=np.int8)
PREAMBLE_LEN = 16
PACKET_LEN = 256
PAYLOAD_LEN = PACKET_LEN - PREAMBLE_LEN

SCENARIOS = ("awgn", "interference")


@dataclass(frozen=True)
class PreambleSequence:
    bits: np.ndarray
    symbols: np.ndarray

    @property
    def length(self) -> int:
        return len(self.bits)


def make_preamble() -> PreambleSequence:
    bits = PREAMBLE_BITS.copy()
    return PreambleSequence(bits=bits, symbols=bpsk_map(bits))


def make_packet(rng: np.random.Generator) -> np.ndarray:
    """Preamble bits followed by 240 uniform random payload bits."""
    payload = rng.integers(0, 2, size=PAYLOAD_LEN, dtype=np.int8)
    return np.concatenate([PREAMBLE_BITS, payload])


def bpsk_map(bits) -> np.ndarray:
    """Map bits to antipodal symbols, 0 -> +1 and 1 -> -1."""
    b = np.asarray(bits)
    if b.size and not np.isin(b, (0, 1)).all():
        raise ValueError("bpsk_map expects binary input")
    return 1.0 - 2.0 * b.astype(np.float64)


def awgn_sigma(snr_db: float) -> float:
    """Noise standard deviation giving Es/sigma^2 = snr_db for unit-energy symbols."""
    if not np.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite, got {snr_db!r}")
    return float(10.0 ** (-snr_db / 20.0))


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str = "awgn"
    snr_db: float = 3.0
    seed: int = 0
    window_len: int | None = None
    num_packets: int | None = None
    # None means derive from snr_db; tests use 0.0 for noise-free windows
    noise_sigma: float | None = None

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}; expected one of {SCENARIOS}")
        default_len, default_pkts = (2 * PACKET_LEN, 1) if self.scenario == "awgn" else (4 * PACKET_LEN, 3)
        if self.window_len is None:
            object.__setattr__(self, "window_len", default_len)
        if self.num_packets is None:
            object.__setattr__(self, "num_packets", default_pkts)
        if self.window_len < PACKET_LEN:
            raise ValueError("window must hold at least one full packet")
        if self.num_packets < 1:
            raise ValueError("num_packets must be >= 1")

    @property
    def sigma(self) -> float:
        return awgn_sigma(self.snr_db) if self.noise_sigma is None else float(self.noise_sigma)

    @property
    def load(self) -> float:
        return self.num_packets * PACKET_LEN / self.window_len

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "snr_db": float(self.snr_db),
            "seed": int(self.seed),
            "window_len": int(self.window_len),
            "num_packets": int(self.num_packets),
            "noise_sigma": self.noise_sigma,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        return cls(
            scenario=d["scenario"],
            snr_db=float(d["snr_db"]),
            seed=int(d["seed"]),
            window_len=d.get("window_len"),
            num_packets=d.get("num_packets"),
            noise_sigma=d.get("noise_sigma"),
        )


@dataclass
class SymbolWindow:
    samples: np.ndarray
    placements: list[int]
    noise_sigma: float
    packets: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def window_len(self) -> int:
        return len(self.samples)


def window_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for window ``index`` of a dataset seeded with ``seed``."""
    return np.random.default_rng([int(seed), int(index)])


def synth_window(cfg: ScenarioConfig, rng: np.random.Generator, starts=None) -> SymbolWindow:
    """Place ``cfg.num_packets`` packets uniformly in the window and add noise.

    ``starts`` pins the packet start indices (tests); otherwise they are drawn
    uniformly on ``[0, window_len - N]``.
    """
    w = cfg.window_len
    if starts is None:
        starts = rng.integers(0, w - PACKET_LEN + 1, size=cfg.num_packets)
    starts = [int(s) for s in starts]
    for s in starts:
        if not 0 <= s <= w - PACKET_LEN:
            raise ValueError(f"packet start {s} does not fit in window of {w}")
    samples = np.zeros(w)
    packets = []
    for s in starts:
        bits = make_packet(rng)
        packets.append(bits)
        samples[s:s + PACKET_LEN] += bpsk_map(bits)
    sigma = cfg.sigma
    if sigma > 0:
        samples += sigma * rng.standard_normal(w)
    return SymbolWindow(samples=samples, placements=starts, noise_sigma=sigma, packets=packets)
