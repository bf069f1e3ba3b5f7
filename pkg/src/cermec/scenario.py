"""System parameters and random channel realizations.

A :class:`Scenario` holds every static parameter of the network: one power
station (PS), ``K`` single-antenna wireless sensors (WSs) and an ``N``-antenna
access point (AP) with a co-located edge server.  :func:`draw_channels` turns a
scenario and an integer seed into a :class:`ChannelRealization`.

Channel amplitudes follow ``rho * d**(-beta)`` with ``rho`` Rayleigh of unit
second moment, so the power gain of a link is ``rho**2 * d**(-2*beta)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from . import kvdoc

#: Substream order used by :func:`draw_channels`; one per channel family.
CHANNEL_STREAMS = ("ps_ws", "ws_ws", "ws_ap")

_VECTOR_FIELDS = ("f_max", "C", "phi", "R_min", "d_ps_ws", "d_ws_ap")


def dbm_to_watt(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watt_to_dbm(watt: float) -> float:
    return 10.0 * math.log10(watt) + 30.0


def _frozen(a, shape, name):
    arr = np.array(a, dtype=float)
    if arr.ndim == 0:
        arr = np.full(shape, float(arr))
    if arr.shape != shape:
        raise ValueError(f"{name}: expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """Static system parameters (SI units throughout).

    Per-WS quantities (``f_max``, ``C``, ``phi``, ``R_min``, distances) accept a
    scalar, which is broadcast to all ``K`` sensors.  ``alpha`` may be
    ``math.inf`` to request max-min fairness.
    """

    K: int = 4
    N: int = 4
    T: float = 1.0
    epsilon: float = 0.0
    B: float = 1e3
    eta: float = 0.8
    P_max: float = 1.0
    f_max: np.ndarray = 1e6
    C: np.ndarray = 1e3
    phi: np.ndarray = 1e-30
    R_min: np.ndarray = 100.0
    noise_power: float = 1e-12
    alpha: float = 0.0
    d_ps_ws: np.ndarray = 10.0
    d_ws_ap: np.ndarray = 10.0
    d_ws_ws: np.ndarray = field(default=None)
    beta: float = 2.2

    def __post_init__(self):
        K = int(self.K)
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "N", int(self.N))
        for name in _VECTOR_FIELDS:
            object.__setattr__(self, name, _frozen(getattr(self, name), (K,), name))
        d = self.d_ws_ws
        if d is None:
            d = np.full((K, K), 2.5)
            np.fill_diagonal(d, 0.0)
        object.__setattr__(self, "d_ws_ws", _frozen(d, (K, K), "d_ws_ws"))
        for name in ("T", "epsilon", "B", "eta", "P_max", "noise_power", "alpha", "beta"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def T_eff(self) -> float:
        """Offloading budget ``T - epsilon``."""
        return self.T - self.epsilon

    def replace(self, **changes) -> "Scenario":
        return dataclasses.replace(self, **changes)

    def to_items(self):
        return [(f.name, getattr(self, f.name)) for f in dataclasses.fields(self)]

    def to_text(self) -> str:
        return kvdoc.dumps(self.to_items(), header="cermec scenario")

    @classmethod
    def from_text(cls, text: str) -> "Scenario":
        return scenario_from_mapping(kvdoc.loads(text))

    def same_as(self, other: "Scenario") -> bool:
        """Exact field-by-field equality."""
        for f in dataclasses.fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            if isinstance(a, np.ndarray):
                if a.shape != b.shape or not np.array_equal(a, b):
                    return False
            elif a != b:
                return False
        return True


def scenario_from_mapping(doc) -> Scenario:
    """Build a scenario from parsed ``kvdoc`` entries.

    Keys that are absent fall back to :func:`default_scenario` drawn with the
    optional ``layout_seed`` key (default 0).  ``noise_power_dbm`` is accepted
    in place of ``noise_power``.
    """
    doc = dict(doc)
    known = {f.name for f in dataclasses.fields(Scenario)} | {"layout_seed", "noise_power_dbm"}
    unknown = sorted(set(doc) - known)
    if unknown:
        key = unknown[0]
        raise kvdoc.DocumentError(f"unknown scenario key {key!r}", doc[key][1])

    def num(key, conv=kvdoc.parse_float):
        raw, line = doc[key]
        return conv(raw, key, line)

    K = num("K", kvdoc.parse_int) if "K" in doc else 4
    N = num("N", kvdoc.parse_int) if "N" in doc else 4
    seed = num("layout_seed", kvdoc.parse_int) if "layout_seed" in doc else 0
    if K < 1 or N < 1:
        raise kvdoc.DocumentError("K and N must be positive integers")
    base = default_scenario(seed=seed, K=K, N=N)
    changes = {}
    for key, (raw, line) in doc.items():
        if key in ("K", "N", "layout_seed"):
            continue
        if key == "noise_power_dbm":
            if "noise_power" in doc:
                raise kvdoc.DocumentError("give noise_power or noise_power_dbm, not both", line)
            changes["noise_power"] = dbm_to_watt(kvdoc.parse_float(raw, key, line))
        elif key == "d_ws_ws":
            changes[key] = kvdoc.parse_matrix(raw, key, line)
        elif key in _VECTOR_FIELDS:
            vec = kvdoc.parse_vector(raw, key, line)
            changes[key] = vec[0] if vec.size == 1 else vec
        else:
            changes[key] = kvdoc.parse_float(raw, key, line)
    try:
        return base.replace(**changes)
    except ValueError as exc:
        raise kvdoc.DocumentError(str(exc)) from None


def random_layout(s: Scenario, seed: int) -> Scenario:
    """Redraw all distances of ``s`` from ``seed``.

    PS-WS and WS-AP distances are uniform on (1, 15] m and inter-WS distances
    uniform on (0.5, 5] m (symmetric, zero diagonal).
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x1A7]))
    K = s.K
    d_ps = 15.0 - 14.0 * rng.random(K)
    d_ap = 15.0 - 14.0 * rng.random(K)
    upper = np.triu(5.0 - 4.5 * rng.random((K, K)), 1)
    return s.replace(d_ps_ws=d_ps, d_ws_ap=d_ap, d_ws_ws=upper + upper.T)


def default_scenario(seed: int = 0, K: int = 4, N: int = 4) -> Scenario:
    """Simulation defaults of the reference setup with a seeded random layout."""
    base = Scenario(
        K=K, N=N, T=1.0, epsilon=0.0, B=1e3, eta=0.8, P_max=1.0,
        f_max=1e6, C=1e3, phi=1e-30, R_min=100.0,
        noise_power=dbm_to_watt(-90.0), alpha=0.0, beta=2.2,
    )
    return random_layout(base, seed)


def validate(s: Scenario) -> List[str]:
    """Return one message per violated invariant, each prefixed by its field."""
    bad = []

    def check(ok, name, msg):
        if not ok:
            bad.append(f"{name}: {msg}")

    check(s.K >= 1, "K", "must be >= 1")
    check(s.N >= 1, "N", "must be >= 1")
    check(s.T > 0, "T", "must be > 0")
    check(0 <= s.epsilon < s.T, "epsilon", "must satisfy 0 <= epsilon < T")
    check(s.B > 0, "B", "must be > 0")
    check(0 < s.eta <= 1, "eta", "must lie in (0, 1]")
    check(s.P_max > 0, "P_max", "must be > 0")
    check(bool(np.all(s.f_max > 0)), "f_max", "all entries must be > 0")
    check(bool(np.all(s.C >= 1)), "C", "all entries must be >= 1")
    check(bool(np.all(s.phi > 0)), "phi", "all entries must be > 0")
    check(bool(np.all(s.R_min >= 0)), "R_min", "all entries must be >= 0")
    check(s.noise_power > 0, "noise_power", "must be > 0")
    check(s.alpha >= 0, "alpha", "must be >= 0 (inf selects max-min)")
    check(s.beta > 0, "beta", "must be > 0")
    check(bool(np.all(s.d_ps_ws > 0)), "d_ps_ws", "distances must be positive")
    check(bool(np.all(s.d_ws_ap > 0)), "d_ws_ap", "distances must be positive")
    off = ~np.eye(s.K, dtype=bool)
    check(bool(np.all(np.diag(s.d_ws_ws) == 0)) and bool(np.all(s.d_ws_ws[off] > 0)),
          "d_ws_ws", "off-diagonal distances must be positive with a zero diagonal")
    return bad


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One draw of every channel amplitude.

    Attributes
    ----------
    h : (K,) PS -> WS amplitudes.
    g_ws : (K, K) WS ``i`` -> WS ``k`` amplitudes, zero diagonal.
    g_ap : (K, N) complex WS -> AP channel vectors.
    seed : seed the draw came from (``None`` for hand-built channels).
    """

    h: np.ndarray
    g_ws: np.ndarray
    g_ap: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        h = np.array(self.h, dtype=float)
        g = np.array(self.g_ws, dtype=float)
        ap = np.array(self.g_ap, dtype=complex)
        K = h.shape[0]
        if g.shape != (K, K) or ap.ndim != 2 or ap.shape[0] != K:
            raise ValueError("inconsistent channel shapes")
        if np.any(np.diag(g) != 0):
            raise ValueError("g_ws must have a zero diagonal")
        for name, a in (("h", h), ("g_ws", g), ("g_ap", ap)):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def K(self) -> int:
        return self.h.shape[0]

    @property
    def h_gain(self) -> np.ndarray:
        """``|h_k|^2``."""
        return self.h ** 2

    @property
    def ws_gain(self) -> np.ndarray:
        """``|g_{i,k}|^2`` with row = transmitter, column = receiver."""
        return self.g_ws ** 2

    @property
    def ap_gain(self) -> np.ndarray:
        """``||g_k||^2``, the effective channel power after MRC."""
        return np.sum(np.abs(self.g_ap) ** 2, axis=1)

    def without_recycling(self) -> "ChannelRealization":
        return ChannelRealization(self.h, np.zeros_like(self.g_ws), self.g_ap, self.seed)

    def same_as(self, other: "ChannelRealization") -> bool:
        return (np.array_equal(self.h, other.h) and np.array_equal(self.g_ws, other.g_ws)
                and np.array_equal(self.g_ap, other.g_ap))


def rayleigh(rng: np.random.Generator, size) -> np.ndarray:
    """Rayleigh magnitudes with ``E[rho**2] = 1``."""
    return np.sqrt(rng.exponential(1.0, size))


def draw_channels(s: Scenario, seed: int, passive_recycling: bool = True) -> ChannelRealization:
    """Draw all channels of ``s`` deterministically from ``seed``.

    The seed is expanded with :class:`numpy.random.SeedSequence` and split into
    one PCG64 substream per channel family, in the order of
    :data:`CHANNEL_STREAMS`, so adding antennas never perturbs the PS or
    inter-WS draws.

    Inter-WS links are reciprocal (``g_ws[i, k] == g_ws[k, i]`` before the
    cap).  With ``passive_recycling`` the power gains leaving each transmitter
    are scaled so that they sum to at most one; without it the bare path-loss
    model lets short links amplify energy and the allocation problem becomes
    unbounded.
    """
    K, N = s.K, s.N
    streams = [np.random.default_rng(ss) for ss in np.random.SeedSequence(int(seed)).spawn(3)]
    h = rayleigh(streams[0], K) * s.d_ps_ws ** (-s.beta)

    rho = rayleigh(streams[1], (K, K))
    rho = np.triu(rho, 1)
    rho = rho + rho.T
    d = s.d_ws_ws + np.eye(K)
    g = rho * d ** (-s.beta)
    np.fill_diagonal(g, 0.0)
    if passive_recycling:
        out = np.sum(g ** 2, axis=1)
        scale = np.where(out > 1.0, 1.0 / np.sqrt(np.maximum(out, 1.0)), 1.0)
        g = g * scale[:, None]

    z = (streams[2].standard_normal((K, N)) + 1j * streams[2].standard_normal((K, N))) / math.sqrt(2.0)
    g_ap = z * (s.d_ws_ap ** (-s.beta))[:, None]
    return ChannelRealization(h=h, g_ws=g, g_ap=g_ap, seed=int(seed))


def recycling_loop_gain(s: Scenario, ch: ChannelRealization) -> float:
    """Spectral radius of ``eta * |g_ws|^2``; must be < 1 for a bounded problem."""
    if s.K == 1:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(s.eta * ch.ws_gain))))
