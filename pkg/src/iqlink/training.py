"""Training loop for the GNN decoder: BCE loss, Adam, checkpoint I/O.

A training step draws random messages, runs them through the full impaired
link at a per-codeword SNR drawn uniformly from the configured range,
decodes the resulting LLRs with the GNN forward pass, and takes one Adam
step on the mean binary cross-entropy between logits and the transmitted
code bits.  Everything is float64 and reproducible from the seed alone.
"""

import hashlib
import math
import time
from dataclasses import dataclass

import numpy as np

from . import codec
from .gnn import GnnConfig, GnnParams, backward, forward_with_cache, init_params, tensor_shapes
from .impairments import ChannelConfig, IqiParams, g_from_irr, transmit_chain
from .modem import qam_demap_llr, qam_map
from .tanner import from_parity_check

__all__ = [
    "TrainConfig",
    "AdamState",
    "Checkpoint",
    "CheckpointError",
    "TrainingDiverged",
    "bce_loss",
    "grad",
    "adam_step",
    "train",
    "save_checkpoint",
    "load_checkpoint",
    "code_digest",
    "iqi_pair",
]

CHECKPOINT_MAGIC = "iqlink-checkpoint v1"


class CheckpointError(ValueError):
    """Malformed checkpoint file or digest mismatch."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite during training."""


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 128
    steps: int = 20000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    snr_lo_db: float = 2.0
    snr_hi_db: float = 9.0
    tx_irr_db: float = math.inf
    rx_irr_db: float = math.inf
    theta_deg: float = 5.0
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.snr_hi_db < self.snr_lo_db:
            raise ValueError("snr_hi_db must be >= snr_lo_db")

    def scenario_string(self):
        return (
            f"tx_irr_db={_fmt(self.tx_irr_db)} rx_irr_db={_fmt(self.rx_irr_db)} "
            f"theta_deg={_fmt(self.theta_deg)}"
        )


def _fmt(x):
    return "inf" if math.isinf(x) else repr(float(x))


def iqi_pair(tx_irr_db, rx_irr_db, theta_deg):
    """IqiParams for both sides; an infinite IRR means an ideal front end."""

    def one(irr_value, side):
        if math.isinf(irr_value):
            return IqiParams.ideal(side)
        return IqiParams(
            g_from_irr(irr_value, math.radians(theta_deg), side),
            math.radians(theta_deg),
            side,
        )

    return one(tx_irr_db, "tx"), one(rx_irr_db, "rx")


def code_digest(H):
    """Stable identity of a parity-check matrix: SHA-256 of its canonical alist."""
    return hashlib.sha256(codec.save_alist(H).encode()).hexdigest()


def bce_loss(logits, targets):
    """Mean binary cross-entropy of logits against {0,1} targets.

    Uses the stabilized form max(z,0) - z*t + log(1+exp(-|z|)), so values
    are finite for any logit magnitude.
    """
    z = np.asarray(logits, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if z.shape != t.shape:
        raise ValueError(f"logits shape {z.shape} != targets shape {t.shape}")
    return float(np.mean(np.maximum(z, 0.0) - z * t + np.log1p(np.exp(-np.abs(z)))))


def grad(params, graph, llrs, targets):
    """Loss and reverse-mode gradients for one batch of LLR rows."""
    llrs = np.asarray(llrs, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if llrs.size == 0:
        raise ValueError("batch must be nonempty")
    logits, cache = forward_with_cache(params, graph, llrs, want_cache=True)
    loss = bce_loss(logits, targets)
    sig = 1.0 / (1.0 + np.exp(-logits))
    dlogits = (sig - targets) / logits.size
    return loss, backward(params, graph, cache, dlogits)


@dataclass
class AdamState:
    m: dict
    v: dict
    t: int = 0

    @classmethod
    def zeros(cls, params):
        return cls(
            m={k: np.zeros_like(params[k]) for k in params.names()},
            v={k: np.zeros_like(params[k]) for k in params.names()},
        )


def adam_step(params, grads, state, cfg):
    """One bias-corrected Adam update; returns fresh (params, state)."""
    t = state.t + 1
    new_m, new_v, new_t = {}, {}, {}
    for name in params.names():
        g = grads[name]
        new_m[name] = cfg.beta1 * state.m[name] + (1 - cfg.beta1) * g
        new_v[name] = cfg.beta2 * state.v[name] + (1 - cfg.beta2) * g * g
        m_hat = new_m[name] / (1 - cfg.beta1**t)
        v_hat = new_v[name] / (1 - cfg.beta2**t)
        new_t[name] = params[name] - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    return GnnParams(params.config, new_t), AdamState(m=new_m, v=new_v, t=t)


@dataclass(frozen=True)
class Checkpoint:
    version: str
    config: GnnConfig
    code_digest: str
    scenario: str
    tensors: dict
    steps: int
    rng_digest: str

    def params(self):
        return GnnParams(self.config, {k: v.copy() for k, v in self.tensors.items()})


def train(code, gnn_config, train_config, telemetry_path=None, log_every=100):
    """Train a GNN decoder for the configured IQI scenario.

    Returns the final Checkpoint.  Telemetry rows (step, loss, wall_ms) are
    appended to telemetry_path when given.  Raises TrainingDiverged if the
    loss turns NaN/Inf.
    """
    cfg = train_config
    graph = from_parity_check(code.H)
    tx, rx = iqi_pair(cfg.tx_irr_db, cfg.rx_irr_db, cfg.theta_deg)
    ch = ChannelConfig(h=1.0, snr_db=0.0)  # per-sample n0 overrides below
    rng = np.random.default_rng(cfg.seed)
    params = init_params(gnn_config, rng)
    state = AdamState.zeros(params)
    digest = code_digest(code.H)

    telemetry = open(telemetry_path, "w") if telemetry_path else None
    if telemetry:
        telemetry.write("step,loss,wall_ms\n")
    t_start = time.perf_counter()
    try:
        for step in range(1, cfg.steps + 1):
            msgs = rng.integers(0, 2, size=(cfg.batch_size, code.k_info), dtype=np.uint8)
            cw = codec.encode(code, msgs)
            padded = codec.zero_pad(cw, 2)
            x = qam_map(padded, 2)
            snr_db = rng.uniform(cfg.snr_lo_db, cfg.snr_hi_db, size=(cfg.batch_size, 1))
            n0 = 10.0 ** (-snr_db / 10.0)
            r = transmit_chain(x, tx, rx, ch, rng, n0=n0)
            llrs = codec.strip_pad_llrs(qam_demap_llr(r, ch.h, n0, 2), code.n)
            loss, grads = grad(params, graph, llrs, cw.astype(np.float64))
            if not math.isfinite(loss):
                raise TrainingDiverged(
                    f"loss became {loss} at step {step} "
                    f"(scenario {cfg.scenario_string()}, seed {cfg.seed})"
                )
            params, state = adam_step(params, grads, state, cfg)
            if telemetry and (step % log_every == 0 or step == cfg.steps):
                wall_ms = (time.perf_counter() - t_start) * 1e3
                telemetry.write(f"{step},{loss:.8e},{wall_ms:.0f}\n")
                telemetry.flush()
    finally:
        if telemetry:
            telemetry.close()

    rng_digest = hashlib.sha256(repr(rng.bit_generator.state).encode()).hexdigest()
    return Checkpoint(
        version=CHECKPOINT_MAGIC,
        config=gnn_config,
        code_digest=digest,
        scenario=cfg.scenario_string(),
        tensors={k: params[k].copy() for k in params.names()},
        steps=cfg.steps,
        rng_digest=rng_digest,
    )


def _config_string(config):
    return (
        f"vn_dim={config.vn_dim} cn_dim={config.cn_dim} msg_dim={config.msg_dim} "
        f"hidden_dim={config.hidden_dim} iters={config.iters} "
        f"share_weights_across_iters={int(config.share_weights_across_iters)}"
    )


def _parse_config_string(text):
    fields = dict(item.split("=", 1) for item in text.split())
    return GnnConfig(
        vn_dim=int(fields["vn_dim"]),
        cn_dim=int(fields["cn_dim"]),
        msg_dim=int(fields["msg_dim"]),
        hidden_dim=int(fields["hidden_dim"]),
        iters=int(fields["iters"]),
        share_weights_across_iters=bool(int(fields["share_weights_across_iters"])),
    )


def save_checkpoint(ckpt, path):
    """Write a checkpoint as text with hex-encoded float64 tensors (bit exact)."""
    tensor_lines = []
    for name in sorted(ckpt.tensors):
        arr = np.ascontiguousarray(ckpt.tensors[name], dtype=np.float64)
        dims = " ".join(str(d) for d in arr.shape)
        tensor_lines.append(f"tensor {name} {dims}")
        tensor_lines.append(arr.tobytes().hex())
    payload = "\n".join(tensor_lines) + "\n"
    payload_digest = hashlib.sha256(payload.encode()).hexdigest()
    header = "\n".join(
        [
            ckpt.version,
            f"steps {ckpt.steps}",
            f"code_digest {ckpt.code_digest}",
            f"scenario {ckpt.scenario}",
            f"config {_config_string(ckpt.config)}",
            f"rng_digest {ckpt.rng_digest}",
            f"payload_digest {payload_digest}",
        ]
    )
    with open(path, "w") as fh:
        fh.write(header + "\n" + payload)


def load_checkpoint(path, expect_code_digest=None):
    """Read a checkpoint, verifying version, payload digest and tensor shapes.

    When ``expect_code_digest`` is given it must match the stored code
    identity; otherwise the load refuses, printing both digests.
    """
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path}: not a {CHECKPOINT_MAGIC!r} file")

    header = {}
    idx = 1
    while idx < len(lines) and not lines[idx].startswith("tensor "):
        key, _, value = lines[idx].partition(" ")
        header[key] = value
        idx += 1
    for key in ("steps", "code_digest", "scenario", "config", "rng_digest", "payload_digest"):
        if key not in header:
            raise CheckpointError(f"{path}: missing header field {key!r}")

    payload = "\n".join(lines[idx:]) + "\n"
    actual = hashlib.sha256(payload.encode()).hexdigest()
    if actual != header["payload_digest"]:
        raise CheckpointError(
            f"{path}: payload digest mismatch "
            f"(stored {header['payload_digest']}, computed {actual})"
        )

    config = _parse_config_string(header["config"])
    tensors = {}
    while idx < len(lines):
        parts = lines[idx].split()
        if parts[0] != "tensor" or idx + 1 >= len(lines):
            raise CheckpointError(f"{path}: malformed tensor block at line {idx + 1}")
        name = parts[1]
        shape = tuple(int(d) for d in parts[2:])
        raw = bytes.fromhex(lines[idx + 1])
        arr = np.frombuffer(raw, dtype=np.float64).reshape(shape).copy()
        tensors[name] = arr
        idx += 2

    expected_shapes = tensor_shapes(config)
    if set(tensors) != set(expected_shapes):
        raise CheckpointError(f"{path}: tensor names do not match the stored config")
    for name, shape in expected_shapes.items():
        if tensors[name].shape != shape:
            raise CheckpointError(
                f"{path}: tensor {name} has shape {tensors[name].shape}, expected {shape}"
            )

    if expect_code_digest is not None and expect_code_digest != header["code_digest"]:
        raise CheckpointError(
            f"{path}: checkpoint was trained for a different parity-check matrix\n"
            f"  checkpoint code_digest: {header['code_digest']}\n"
            f"  requested  code_digest: {expect_code_digest}"
        )

    return Checkpoint(
        version=CHECKPOINT_MAGIC,
        config=config,
        code_digest=header["code_digest"],
        scenario=header["scenario"],
        tensors=tensors,
        steps=int(header["steps"]),
        rng_digest=header["rng_digest"],
    )
