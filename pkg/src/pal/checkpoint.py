"""Binary checkpoints for networks and whole agents.

Network blob layout (all little-endian):

    bytes 0..7    magic ``PALMLP01``
    bytes 8..11   format version (uint32, currently 1)
    bytes 12..15  reserved, zero
    uint32        number of layer sizes
    uint32[...]   layer sizes
    float64[...]  per weight layer: row-major weight matrix, then biases

Agent files add a section table after the same kind of 16-byte header:
a uint32 section count, then per section a uint32 name length, the UTF-8
name and a uint64 payload size; payloads follow in order. Sections are
``meta`` (a small JSON document) plus one network blob per role.
"""

from __future__ import annotations

import io
import json
import struct

import numpy as np

from . import nn
from .ddpg import DdpgAgent

MLP_MAGIC = b"PALMLP01"
AGENT_MAGIC = b"PALAGT01"
FORMAT_VERSION = 1

_AGENT_NETS = ("actor", "critic", "target_actor", "target_critic")


class CheckpointError(Exception):
    """Malformed or mismatched checkpoint data."""


def _header(magic: bytes) -> bytes:
    return magic + struct.pack("<II", FORMAT_VERSION, 0)


def _check_header(buf: bytes, magic: bytes) -> int:
    if len(buf) < 16 or buf[:8] != magic:
        raise CheckpointError(f"bad magic, expected {magic!r}")
    (version, _reserved) = struct.unpack_from("<II", buf, 8)
    if version != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    return 16


def mlp_to_bytes(mlp: nn.Mlp) -> bytes:
    out = io.BytesIO()
    out.write(_header(MLP_MAGIC))
    sizes = mlp.layer_sizes
    out.write(struct.pack("<I", len(sizes)))
    out.write(struct.pack(f"<{len(sizes)}I", *sizes))
    for w, b in zip(mlp.weights, mlp.biases):
        out.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
        out.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return out.getvalue()


def mlp_from_bytes(buf: bytes) -> nn.Mlp:
    pos = _check_header(buf, MLP_MAGIC)
    (n_sizes,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    sizes = struct.unpack_from(f"<{n_sizes}I", buf, pos)
    pos += 4 * n_sizes
    if n_sizes < 2:
        raise CheckpointError(f"checkpoint has {n_sizes} layer sizes")
    count = nn.param_count(sizes)
    expected = pos + 8 * count
    if len(buf) != expected:
        raise CheckpointError(f"checkpoint size {len(buf)} != expected {expected}")
    params = np.frombuffer(buf, dtype="<f8", count=count, offset=pos).astype(np.float64)
    mlp = nn.init_mlp(sizes, [(0.0, 0.0)] * (n_sizes - 1), np.random.default_rng(0))
    offset = 0
    for w, b in zip(mlp.weights, mlp.biases):
        w[...] = params[offset : offset + w.size].reshape(w.shape)
        offset += w.size
        b[...] = params[offset : offset + b.size]
        offset += b.size
    return mlp


def save_mlp(path, mlp: nn.Mlp) -> None:
    with open(path, "wb") as fh:
        fh.write(mlp_to_bytes(mlp))


def load_mlp(path) -> nn.Mlp:
    with open(path, "rb") as fh:
        return mlp_from_bytes(fh.read())


def agent_to_bytes(agent: DdpgAgent) -> bytes:
    meta = {
        "state_dim": agent.state_dim,
        "control_limit": agent.control_limit,
        "gamma": agent.gamma,
        "tau": agent.tau,
    }
    sections = [("meta", json.dumps(meta, sort_keys=True).encode("utf-8"))]
    for name in _AGENT_NETS:
        sections.append((name, mlp_to_bytes(getattr(agent, name))))
    out = io.BytesIO()
    out.write(_header(AGENT_MAGIC))
    out.write(struct.pack("<I", len(sections)))
    for name, payload in sections:
        encoded = name.encode("utf-8")
        out.write(struct.pack("<I", len(encoded)))
        out.write(encoded)
        out.write(struct.pack("<Q", len(payload)))
    for _, payload in sections:
        out.write(payload)
    return out.getvalue()


def agent_from_bytes(buf: bytes) -> DdpgAgent:
    pos = _check_header(buf, AGENT_MAGIC)
    (n_sections,) = struct.unpack_from("<I", buf, pos)
    pos += 4
    table = []
    for _ in range(n_sections):
        (name_len,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        name = buf[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (size,) = struct.unpack_from("<Q", buf, pos)
        pos += 8
        table.append((name, size))
    payloads = {}
    for name, size in table:
        payloads[name] = buf[pos : pos + size]
        pos += size
    if pos != len(buf):
        raise CheckpointError("trailing bytes after the last section")
    missing = {"meta", *_AGENT_NETS} - payloads.keys()
    if missing:
        raise CheckpointError(f"missing sections: {sorted(missing)}")

    meta = json.loads(payloads["meta"].decode("utf-8"))
    nets = {name: mlp_from_bytes(payloads[name]) for name in _AGENT_NETS}
    hidden = nets["actor"].layer_sizes[1:-1]
    agent = DdpgAgent(
        state_dim=int(meta["state_dim"]),
        control_limit=float(meta["control_limit"]),
        rng_init=np.random.default_rng(0),
        actor_hidden=hidden[0],
        critic_hidden=nets["critic"].layer_sizes[1],
        hidden_layers=len(hidden),
        gamma=float(meta["gamma"]),
        tau=float(meta["tau"]),
    )
    for name in _AGENT_NETS:
        target = getattr(agent, name)
        if target.layer_sizes != nets[name].layer_sizes:
            raise CheckpointError(f"section {name} has unexpected shape")
        target.params[...] = nets[name].params
    return agent


def save_agent(path, agent: DdpgAgent) -> None:
    with open(path, "wb") as fh:
        fh.write(agent_to_bytes(agent))


def load_agent(path) -> DdpgAgent:
    with open(path, "rb") as fh:
        return agent_from_bytes(fh.read())
