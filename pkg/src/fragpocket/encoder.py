"""Invariant 3D attention encoder and projection heads.

Atoms are tokenized as (type, coordinate) pairs. A pairwise representation
built from interatomic distances biases every attention layer, so token
updates depend on geometry only through distances: embeddings are exactly
invariant under rigid motions and, with mean pooling, under atom
permutations.

Layer update, per head:

    x'_i = x_i + W_o . concat_h[ softmax_j(Q_i K_j^T / sqrt(d_head) + q_hij) V_j ]
    q'_hij = q_hij + Q_i K_j^T / sqrt(d_head)

All numerics default to float64 so gradient checks and the bound verifier
are deterministic at desk scale; float32 is available via the config.
"""

import base64
import copy
import hashlib
import json
import math
from dataclasses import dataclass, asdict, field

import numpy as np
import torch
import torch.nn as nn

# Element vocabulary: padding slot 0 is reserved, unknown heavy atoms map to X.
ATOM_VOCAB = {"PAD": 0, "C": 1, "N": 2, "O": 3, "S": 4, "X": 5}
FROZEN_REFERENCE_SEED = 734_210_589


@dataclass
class EncoderConfig:
    vocab_size: int = len(ATOM_VOCAB)
    hidden_dim: int = 64
    num_heads: int = 4
    num_layers: int = 4
    embed_dim: int = 32
    rbf_centers: int = 16
    rbf_max_distance: float = 12.0
    # Width init spans scales geometrically: a single shared width makes the
    # summed features nearly constant in distance and blinds the encoder.
    rbf_width_range: tuple = (0.3, 4.0)
    # Init scale of the type-pair affine; controls how strongly geometry
    # steers attention before any training.
    pair_affine_scale: float = 0.1
    # Multiplier on the Q/K weight init. Large values sharpen attention
    # toward hard selection, which spreads embeddings apart; random smooth
    # attention otherwise concentrates all embeddings near one point.
    qk_init_scale: float = 1.0
    # Subtract the vocabulary mean from the type embedding table at init,
    # shrinking the composition component every pooled vector shares.
    zero_mean_types: bool = False
    pooling: str = "mean"          # "mean" or "query"
    residual: bool = True
    dtype: str = "float64"

    def __post_init__(self):
        if self.hidden_dim % self.num_heads != 0:
            raise ValueError("hidden_dim must be divisible by num_heads")
        if self.pooling not in ("mean", "query"):
            raise ValueError(f"unknown pooling {self.pooling!r}")

    @property
    def torch_dtype(self):
        return torch.float64 if self.dtype == "float64" else torch.float32


@dataclass
class HeadConfig:
    in_dim: int = 32
    hidden_dim: int = 64
    out_dim: int = 16
    dtype: str = "float64"

    @property
    def torch_dtype(self):
        return torch.float64 if self.dtype == "float64" else torch.float32


@dataclass
class TokenSeq:
    atom_types: np.ndarray
    coords: np.ndarray

    def __post_init__(self):
        self.atom_types = np.asarray(self.atom_types, dtype=np.int64)
        self.coords = np.asarray(self.coords, dtype=float).reshape(-1, 3)
        if len(self.atom_types) < 1:
            raise ValueError("token sequence needs at least one atom")
        if len(self.atom_types) != len(self.coords):
            raise ValueError("types and coordinates disagree in length")

    @classmethod
    def from_atoms(cls, atoms):
        types = [ATOM_VOCAB.get(a.element, ATOM_VOCAB["X"]) for a in atoms]
        coords = [np.asarray(a.xyz, dtype=float) for a in atoms]
        return cls(np.array(types), np.array(coords))


class PairwiseBias(nn.Module):
    """Distance-RBF pairwise representation q0, one channel per head.

    q0[h,i,j] = w[t_i,t_j,h] * sum_k exp(-|gamma_hk| (d_ij - mu_hk)^2) + b[t_i,t_j,h]

    The type-pair affine is initialized symmetrically, so q0 is symmetric
    in (i, j) at initialization.
    """

    def __init__(self, config, generator=None):
        super().__init__()
        h, k, v = config.num_heads, config.rbf_centers, config.vocab_size
        dtype = config.torch_dtype
        centers = torch.linspace(0.0, config.rbf_max_distance, k, dtype=dtype)
        self.centers = nn.Parameter(centers.repeat(h, 1))
        lo, hi = config.rbf_width_range
        widths = torch.from_numpy(np.geomspace(lo, hi, k)).to(dtype)
        self.widths = nn.Parameter(widths.repeat(h, 1))
        scale = config.pair_affine_scale
        w = scale * torch.randn(v, v, h, generator=generator, dtype=dtype)
        b = scale * torch.randn(v, v, h, generator=generator, dtype=dtype)
        self.pair_weight = nn.Parameter(0.5 * (w + w.transpose(0, 1)))
        self.pair_bias = nn.Parameter(0.5 * (b + b.transpose(0, 1)))

    def forward(self, types, coords):
        delta = coords.unsqueeze(1) - coords.unsqueeze(0)           # [L,L,3]
        d = torch.sqrt(torch.sum(delta * delta, dim=-1) + 1e-30)    # [L,L]
        diff = d.unsqueeze(0).unsqueeze(-1) - self.centers.unsqueeze(1).unsqueeze(1)
        rbf = torch.exp(-self.widths.abs().unsqueeze(1).unsqueeze(1) * diff * diff)
        rbf_sum = rbf.sum(dim=-1)                                   # [h,L,L]
        w = self.pair_weight[types][:, types]                       # [L,L,h]
        b = self.pair_bias[types][:, types]
        return w.permute(2, 0, 1) * rbf_sum + b.permute(2, 0, 1)


class AttentionLayer(nn.Module):
    def __init__(self, config, generator=None):
        super().__init__()
        d = config.hidden_dim
        dtype = config.torch_dtype
        scale = 1.0 / math.sqrt(d)

        def mat(gain=1.0):
            return nn.Parameter(gain * scale *
                                torch.randn(d, d, generator=generator, dtype=dtype))

        qk = config.qk_init_scale
        self.w_q, self.w_k, self.w_v, self.w_o = mat(qk), mat(qk), mat(), mat()
        self.num_heads = config.num_heads
        self.head_dim = d // config.num_heads
        self.residual = config.residual

    def forward(self, x, q):
        length = x.shape[0]

        def split(m):
            return m.view(length, self.num_heads, self.head_dim).permute(1, 0, 2)

        qh, kh, vh = split(x @ self.w_q), split(x @ self.w_k), split(x @ self.w_v)
        logits = qh @ kh.transpose(1, 2) / math.sqrt(self.head_dim)   # [h,L,L]
        attn = torch.softmax(logits + q, dim=-1)
        ctx = (attn @ vh).permute(1, 0, 2).reshape(length, -1)
        out = ctx @ self.w_o
        x_new = x + out if self.residual else out
        return x_new, q + logits


class PocketEncoder(nn.Module):
    """Tokens -> type embedding -> biased attention stack -> pooled unit vector."""

    def __init__(self, config=None, seed=0):
        super().__init__()
        self.config = config or EncoderConfig()
        gen = torch.Generator().manual_seed(seed)
        dtype = self.config.torch_dtype
        types = torch.randn(self.config.vocab_size, self.config.hidden_dim,
                            generator=gen, dtype=dtype)
        if self.config.zero_mean_types:
            types = types - types.mean(dim=0, keepdim=True)
        self.type_embedding = nn.Parameter(types)
        self.pair_bias = PairwiseBias(self.config, generator=gen)
        self.layers = nn.ModuleList(
            AttentionLayer(self.config, generator=gen)
            for _ in range(self.config.num_layers))
        self.out_proj = nn.Parameter(
            torch.randn(self.config.hidden_dim, self.config.embed_dim,
                        generator=gen, dtype=dtype) / math.sqrt(self.config.hidden_dim))
        if self.config.pooling == "query":
            self.pool_query = nn.Parameter(
                torch.randn(self.config.hidden_dim, generator=gen, dtype=dtype))

    def forward(self, types, coords):
        x = self.type_embedding[types]
        q = self.pair_bias(types, coords)
        for layer in self.layers:
            x, q = layer(x, q)
        if self.config.pooling == "query":
            weights = torch.softmax(
                x @ self.pool_query / math.sqrt(self.config.hidden_dim), dim=0)
            pooled = weights @ x
        else:
            pooled = x.mean(dim=0)
        v = pooled @ self.out_proj
        return v / torch.linalg.vector_norm(v)

    def encode(self, tokens, requires_grad=False):
        types = torch.from_numpy(tokens.atom_types)
        coords = torch.as_tensor(tokens.coords, dtype=self.config.torch_dtype)
        if requires_grad:
            return self(types, coords)
        with torch.no_grad():
            return self(types, coords)


class ProjectionHead(nn.Module):
    """Two-layer perceptron; optionally L2-normalizes its output."""

    def __init__(self, config=None, seed=0, normalize=False):
        super().__init__()
        self.config = config or HeadConfig()
        self.normalize = normalize
        gen = torch.Generator().manual_seed(seed)
        dtype = self.config.torch_dtype

        def linear(n_in, n_out):
            layer = nn.Linear(n_in, n_out, dtype=dtype)
            with torch.no_grad():
                layer.weight.copy_(torch.randn(n_out, n_in, generator=gen,
                                               dtype=dtype) / math.sqrt(n_in))
                layer.bias.zero_()
            return layer

        self.fc1 = linear(self.config.in_dim, self.config.hidden_dim)
        self.fc2 = linear(self.config.hidden_dim, self.config.out_dim)

    def forward(self, x):
        y = self.fc2(torch.tanh(self.fc1(x)))
        if self.normalize:
            return y / torch.linalg.vector_norm(y, dim=-1, keepdim=True)
        return y


@dataclass
class HeadPair:
    """g_T (ligand side, unconstrained) and g_S (pocket side, unit norm)."""
    ligand: ProjectionHead
    pocket: ProjectionHead

    @classmethod
    def create(cls, config=None, seed=0):
        config = config or HeadConfig()
        return cls(ligand=ProjectionHead(config, seed=seed, normalize=False),
                   pocket=ProjectionHead(config, seed=seed + 1, normalize=True))

    def parameters(self):
        yield from self.ligand.parameters()
        yield from self.pocket.parameters()


def reference_encoder_config():
    """Config of the in-repo frozen molecule encoder.

    Sharp attention and strong distance bias: a softly-initialized random
    encoder maps every input to nearly the same unit vector, which leaves
    the alignment loss with no usable signal. The trainable pocket encoder
    keeps the mild defaults and learns its own sharpness.
    """
    return EncoderConfig(pair_affine_scale=8.0, qk_init_scale=4.0,
                         zero_mean_types=True)


def frozen_reference_encoder(config=None, seed=FROZEN_REFERENCE_SEED):
    """The fixed molecule-side encoder: seeded once, never updated."""
    model = PocketEncoder(config or reference_encoder_config(), seed=seed)
    for p in model.parameters():
        p.requires_grad_(False)
    model.eval()
    return model


def parameter_checksum(module):
    """SHA-256 over all parameters in state-dict key order (float64 bytes)."""
    digest = hashlib.sha256()
    state = module.state_dict()
    for key in sorted(state):
        digest.update(key.encode())
        digest.update(state[key].detach().to(torch.float64).numpy().tobytes())
    return digest.hexdigest()


# ---------------------------------------------------------------------------
# Checkpoint container: versioned JSON with a shape manifest and content hash.
# ---------------------------------------------------------------------------

CHECKPOINT_VERSION = 1


def save_checkpoint(path, module, kind, config=None, extra=None):
    state = module.state_dict()
    tensors = {}
    hasher = hashlib.sha256()
    for key in sorted(state):
        arr = state[key].detach().to(torch.float64).numpy()
        hasher.update(key.encode())
        hasher.update(arr.tobytes())
        tensors[key] = {
            "shape": list(arr.shape),
            "data": base64.b64encode(arr.tobytes()).decode("ascii"),
        }
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "kind": kind,
        "config": asdict(config) if config is not None else None,
        "dtype": "float64",
        "tensors": tensors,
        "sha256": hasher.hexdigest(),
    }
    if extra:
        payload["extra"] = extra
    with open(path, "w") as fh:
        json.dump(payload, fh)
    return payload["sha256"]


def load_checkpoint(path):
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError("unsupported checkpoint version")
    hasher = hashlib.sha256()
    state = {}
    for key in sorted(payload["tensors"]):
        entry = payload["tensors"][key]
        raw = base64.b64decode(entry["data"])
        hasher.update(key.encode())
        hasher.update(raw)
        arr = np.frombuffer(raw, dtype=np.float64).reshape(entry["shape"]).copy()
        state[key] = torch.from_numpy(arr)
    if hasher.hexdigest() != payload["sha256"]:
        raise ValueError("checkpoint content hash mismatch")
    return payload, state


def restore_module(module, state, dtype=None):
    converted = {k: v.to(dtype) if dtype is not None else v for k, v in state.items()}
    module.load_state_dict(converted)
    return module


def clone_state(module):
    return copy.deepcopy(module.state_dict())
