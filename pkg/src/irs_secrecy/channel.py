"""Channel sampling and effective cascaded channel assembly.

Every link is Rician: sqrt(L0 * d^-alpha) * (sqrt(beta/(beta+1)) * LoS
+ sqrt(1/(beta+1)) * NLoS), with the exponent/K-factor pair chosen per
link class. Links terminating at the reflecting surface use
(alpha_irs, beta_irs); user-user and user-eavesdropper links use
(alpha_direct, beta_direct). NLoS entries are unit-variance circularly
symmetric complex Gaussians.

Reproducibility: each link owns a counter-based Philox stream derived
from the realization seed by spawning one child SeedSequence per link,
in the fixed order

    direct user-user pairs (power-vector order, x < y), then
    user-eavesdropper coefficients (power-vector order), then
    user-surface vectors (power-vector order), then
    the eavesdropper-surface vector.

Vector entries are drawn element by element from the link's stream, so
the channels of an l-element surface are an exact prefix of the channels
of a larger surface under the same seed.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .geometry import NodeId, distance, user_nodes
from .util import db_to_linear, dbm_to_watt


@dataclass(frozen=True)
class SystemParams:
    """Physical and algorithmic constants for one scenario.

    Powers and variances are linear watts. Defaults: -30 dB reference
    path loss, exponents 2 (surface links) / 3 (direct links), K-factors
    8 / 0, noise -105 dBm, residual loop interference -100 dBm, transmit
    power between 0 and 15 dBm, all stopping tolerances 1e-2.
    """

    L: int = 20
    N: int = 2
    L0: float = db_to_linear(-30.0)
    alpha_irs: float = 2.0
    alpha_direct: float = 3.0
    beta_irs: float = 8.0
    beta_direct: float = 0.0
    sigma2: float = dbm_to_watt(-105.0)
    sigma_l2: float = dbm_to_watt(-100.0)
    Pmin: float = dbm_to_watt(0.0)
    Pmax: float = dbm_to_watt(15.0)
    eps1: float = 1e-2
    eps2: float = 1e-2
    eps3: float = 1e-2
    xi: float | None = None  # None selects the default 0.05*(L+1)
    randomization_samples: int = 100
    fp_subiter_cap: int = 25
    sca_subiter_cap: int = 8
    outer_iter_cap: int = 4

    def __post_init__(self):
        if self.L < 0 or self.N < 1:
            raise ValueError("need L >= 0 and N >= 1")
        if not (0.0 < self.Pmin <= self.Pmax):
            raise ValueError("need 0 < Pmin <= Pmax")
        for name in ("L0", "sigma2", "sigma_l2", "eps1", "eps2", "eps3"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be > 0")
        if self.xi is not None and self.xi <= 0.0:
            raise ValueError("xi must be > 0")
        if self.randomization_samples < 1:
            raise ValueError("randomization_samples must be >= 1")

    @property
    def n_users(self):
        return 2 * self.N

    @property
    def noise_legit(self):
        return self.sigma2 + self.sigma_l2

    @property
    def trust_radius(self):
        return self.xi if self.xi is not None else 0.05 * (self.L + 1)

    def with_overrides(self, overrides):
        """Apply scenario-file [params] overrides (string key/value)."""
        updates = {}
        for key, raw in overrides.items():
            key = key.strip()
            if key == "l0_db":
                updates["L0"] = db_to_linear(float(raw))
            elif key in ("sigma2_dbm", "sigma_l2_dbm", "pmin_dbm", "pmax_dbm"):
                target = {"sigma2_dbm": "sigma2", "sigma_l2_dbm": "sigma_l2",
                          "pmin_dbm": "Pmin", "pmax_dbm": "Pmax"}[key]
                updates[target] = dbm_to_watt(float(raw))
            elif key in ("l", "n", "randomization_samples", "fp_subiter_cap",
                         "sca_subiter_cap", "outer_iter_cap"):
                target = key.upper() if key in ("l", "n") else key
                updates[target] = int(raw)
            elif key in ("alpha_irs", "alpha_direct", "beta_irs", "beta_direct",
                         "sigma2", "sigma_l2", "pmin", "pmax", "eps1", "eps2",
                         "eps3", "xi", "l0"):
                target = {"pmin": "Pmin", "pmax": "Pmax", "l0": "L0"}.get(key, key)
                updates[target] = float(raw)
            else:
                raise ValueError(f"unknown parameter override {key!r}")
        return replace(self, **updates)


def user_index(node, n_pairs):
    """Power-vector index of a user: A_j -> 2(j-1), B_j -> 2(j-1)+1."""
    if not node.is_user or node.pair > n_pairs:
        raise ValueError(f"{node} is not a user of this scenario")
    return 2 * (node.pair - 1) + (0 if node.kind == "A" else 1)


@dataclass(frozen=True)
class ChannelSet:
    """All sampled coefficients for one realization.

    direct[x, y] is the reciprocal scalar coefficient between users x and
    y (power-vector indices, diagonal unused); eve_direct[x] the user-to-
    eavesdropper coefficient; irs[x] the length-L user-to-surface vector;
    eve_irs the eavesdropper-to-surface vector.
    """

    n_pairs: int
    L: int
    direct: np.ndarray
    eve_direct: np.ndarray
    irs: np.ndarray
    eve_irs: np.ndarray

    def __post_init__(self):
        n = 2 * self.n_pairs
        if self.direct.shape != (n, n) or self.eve_direct.shape != (n,):
            raise ValueError("direct coefficient arrays have wrong shape")
        if self.irs.shape != (n, self.L) or self.eve_irs.shape != (self.L,):
            raise ValueError("surface vector arrays have wrong shape")
        for a in (self.direct, self.eve_direct, self.irs, self.eve_irs):
            if not np.all(np.isfinite(a)):
                raise ValueError("non-finite channel coefficient")


def _rician_weights(beta):
    if math.isinf(beta):
        return 1.0, 0.0
    return math.sqrt(beta / (beta + 1.0)), math.sqrt(1.0 / (beta + 1.0))


def _cn_samples(rng, n):
    """n unit-variance circularly symmetric complex Gaussians, drawn
    as interleaved (re, im) pairs so prefixes are stable in n."""
    raw = rng.standard_normal(2 * n)
    return (raw[0::2] + 1j * raw[1::2]) / math.sqrt(2.0)


def _steering(geom, node, L):
    """Unit-modulus far-field array response seen from the surface."""
    px, py = geom.positions[node]
    ix, iy = geom.positions[NodeId.irs()]
    phi = math.atan2(py - iy, px - ix)
    return np.exp(1j * math.pi * np.arange(L) * math.sin(phi))


def sample_channels(geom, params, seed):
    """Draw one fading realization for every link of the scenario."""
    users = user_nodes(geom.n_pairs)
    n = len(users)
    L = params.L
    eve = NodeId.eve()
    irs = NodeId.irs()

    links = []
    for i in range(n):
        for j in range(i + 1, n):
            links.append(("direct", i, j))
    for i in range(n):
        links.append(("eve", i))
    for i in range(n):
        links.append(("irs", i))
    links.append(("eve_irs",))

    children = np.random.SeedSequence(seed).spawn(len(links))

    direct = np.zeros((n, n), dtype=complex)
    eve_direct = np.zeros(n, dtype=complex)
    irs_vecs = np.zeros((n, L), dtype=complex)
    eve_irs = np.zeros(L, dtype=complex)

    los_w_d, nlos_w_d = _rician_weights(params.beta_direct)
    los_w_i, nlos_w_i = _rician_weights(params.beta_irs)

    for link, child in zip(links, children):
        rng = np.random.Generator(np.random.Philox(child))
        if link[0] == "direct":
            _, i, j = link
            d = distance(geom, users[i], users[j])
            amp = math.sqrt(params.L0 * d ** (-params.alpha_direct))
            c = amp * (los_w_d * 1.0 + nlos_w_d * _cn_samples(rng, 1)[0])
            direct[i, j] = c
            direct[j, i] = c
        elif link[0] == "eve":
            _, i = link
            d = distance(geom, users[i], eve)
            amp = math.sqrt(params.L0 * d ** (-params.alpha_direct))
            eve_direct[i] = amp * (los_w_d * 1.0 + nlos_w_d * _cn_samples(rng, 1)[0])
        elif link[0] == "irs":
            _, i = link
            d = distance(geom, users[i], irs)
            amp = math.sqrt(params.L0 * d ** (-params.alpha_irs))
            los = _steering(geom, users[i], L)
            irs_vecs[i] = amp * (los_w_i * los + nlos_w_i * _cn_samples(rng, L))
        else:
            d = distance(geom, eve, irs)
            amp = math.sqrt(params.L0 * d ** (-params.alpha_irs))
            los = _steering(geom, eve, L)
            eve_irs = amp * (los_w_i * los + nlos_w_i * _cn_samples(rng, L))

    return ChannelSet(n_pairs=geom.n_pairs, L=L, direct=direct,
                      eve_direct=eve_direct, irs=irs_vecs, eve_irs=eve_irs)


@dataclass(frozen=True)
class EffectiveChannels:
    """Cascaded channel vectors H and their rank-one Gram matrices.

    H[x, y] (length L+1) is the effective vector between users x and y:
    the elementwise product of the two user-surface vectors followed by
    the direct coefficient. H_eve[x] is the analogous user-eavesdropper
    vector. Gram[x, y] = H H^dag, so |w^dag H|^2 = w^dag Gram w for any
    combining vector w.
    """

    n_pairs: int
    L: int
    H: np.ndarray
    H_eve: np.ndarray
    gram: np.ndarray = field(repr=False, default=None)
    gram_eve: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.gram is None:
            object.__setattr__(self, "gram",
                               np.einsum("xyi,xyj->xyij", self.H, self.H.conj()))
        if self.gram_eve is None:
            object.__setattr__(self, "gram_eve",
                               np.einsum("xi,xj->xij", self.H_eve, self.H_eve.conj()))

    @property
    def n_users(self):
        return 2 * self.n_pairs

    def zero_cascade_copy(self):
        """Same direct links, surface contribution removed."""
        H = np.zeros_like(self.H)
        H[..., -1] = self.H[..., -1]
        H_eve = np.zeros_like(self.H_eve)
        H_eve[..., -1] = self.H_eve[..., -1]
        return EffectiveChannels(n_pairs=self.n_pairs, L=self.L, H=H, H_eve=H_eve)


def build_effective(chs, geom=None):
    """Assemble effective vectors and Gram matrices from raw coefficients.

    The optional geometry is cross-checked against the channel set's pair
    count; it carries no other information at this stage.
    """
    if geom is not None and geom.n_pairs != chs.n_pairs:
        raise ValueError("geometry and channel set disagree on pair count")
    n = 2 * chs.n_pairs
    L = chs.L
    H = np.zeros((n, n, L + 1), dtype=complex)
    H[..., :L] = chs.irs[:, None, :] * chs.irs[None, :, :]
    H[..., L] = chs.direct
    idx = np.arange(n)
    H[idx, idx, :] = 0.0
    H_eve = np.zeros((n, L + 1), dtype=complex)
    H_eve[:, :L] = chs.irs * chs.eve_irs[None, :]
    H_eve[:, L] = chs.eve_direct
    return EffectiveChannels(n_pairs=chs.n_pairs, L=L, H=H, H_eve=H_eve)


def dump_channels(chs, seed, params, path):
    """Write one realization as a text fixture with a provenance header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# seed={seed} N={chs.n_pairs} L={chs.L}\n")
        fh.write(f"# L0={params.L0!r} alpha_irs={params.alpha_irs!r} "
                 f"alpha_direct={params.alpha_direct!r} beta_irs={params.beta_irs!r} "
                 f"beta_direct={params.beta_direct!r}\n")
        for name, arr in (("direct", chs.direct), ("eve_direct", chs.eve_direct),
                          ("irs", chs.irs), ("eve_irs", chs.eve_irs)):
            fh.write(f"# {name}\n")
            flat = np.atleast_2d(arr)
            for row in flat:
                fh.write(" ".join(repr(complex(v)) for v in np.atleast_1d(row)) + "\n")
