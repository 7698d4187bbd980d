"""Probabilistic movement primitives over normalized Gaussian bases.

Each Cartesian dimension (x, y, z) carries its own weight distribution
N(mu_w, Sigma_w) over a shared basis; orientation is kept as a fixed
quaternion rather than modeled probabilistically.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .kinematics import Pose
from .trajectory import (
    Trajectory,
    Waypoint,
    resample_phase,
    TOOL_DOWN_QUAT,
)

DEFAULT_BASIS_COUNT = 20
# small enough that the ridge bias on a constant demo stays below 1e-6
DEFAULT_RIDGE = 1e-9
DEFAULT_COV_REG = 1e-8
DEFAULT_RESAMPLE = 100

DIMS = ("x", "y", "z")


class ProMPError(Exception):
    pass


class TooFewDemos(ProMPError):
    pass


class DegenerateContexts(ProMPError):
    pass


@dataclass(frozen=True)
class BasisConfig:
    n_basis: int = DEFAULT_BASIS_COUNT
    bandwidth: float = None  # squared-phase units; default 1/(2 K^2)
    ridge: float = DEFAULT_RIDGE
    noise: float = 0.0

    def __post_init__(self):
        if self.n_basis < 1:
            raise ValueError("n_basis must be >= 1")
        if self.bandwidth is None:
            object.__setattr__(self, "bandwidth", 1.0 / (2.0 * self.n_basis ** 2))
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be > 0")
        if self.ridge <= 0:
            raise ValueError("ridge must be > 0")

    def centers(self):
        """Evenly spaced centers spanning [0,1] with a 2*sqrt(h) margin."""
        if self.n_basis == 1:
            return np.array([0.5])
        m = 2.0 * np.sqrt(self.bandwidth)
        return np.linspace(-m, 1.0 + m, self.n_basis)


def basis_matrix(phases, cfg: BasisConfig):
    """n x K matrix of Gaussian bumps, each row normalized to sum to 1."""
    z = np.atleast_1d(np.asarray(phases, dtype=float))
    c = cfg.centers()
    raw = np.exp(-((z[:, None] - c[None, :]) ** 2) / (2.0 * cfg.bandwidth))
    return raw / raw.sum(axis=1, keepdims=True)


def fit_weights(series, phases, cfg: BasisConfig):
    """Ridge solution w = (Phi^T Phi + lambda I)^-1 Phi^T y."""
    y = np.asarray(series, dtype=float)
    if y.size < 2:
        raise ProMPError("need at least 2 samples to fit weights")
    phi = basis_matrix(phases, cfg)
    k = cfg.n_basis
    return np.linalg.solve(phi.T @ phi + cfg.ridge * np.eye(k), phi.T @ y)


@dataclass(frozen=True)
class ViaPoint:
    phase: float
    value: np.ndarray  # one entry per modeled dimension
    noise_var: float = 1e-12

    def __post_init__(self):
        if not 0.0 <= self.phase <= 1.0:
            raise ValueError("via-point phase must be in [0, 1]")
        if self.noise_var < 0:
            raise ValueError("observation noise variance must be >= 0")
        object.__setattr__(self, "value",
                           np.asarray(self.value, dtype=float).reshape(len(DIMS)))


@dataclass(frozen=True)
class ProMPModel:
    cfg: BasisConfig
    mean: np.ndarray  # (3, K) per-dimension weight means
    cov: np.ndarray   # (3, K, K) per-dimension weight covariances
    orientation: np.ndarray = field(default_factory=lambda: TOOL_DOWN_QUAT.copy())
    reference_duration: float = 1.0

    def __post_init__(self):
        k = self.cfg.n_basis
        mean = np.asarray(self.mean, dtype=float).reshape(len(DIMS), k)
        cov = np.asarray(self.cov, dtype=float).reshape(len(DIMS), k, k)
        for d in range(len(DIMS)):
            if np.max(np.abs(cov[d] - cov[d].T)) > 1e-10:
                raise ValueError("weight covariance must be symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "orientation",
                           np.asarray(self.orientation, dtype=float).reshape(4))

    def position_variance(self, phases):
        """Pointwise position variance phi^T Sigma phi, shape (n, 3)."""
        phi = basis_matrix(phases, self.cfg)
        return np.stack(
            [np.einsum("nk,kl,nl->n", phi, self.cov[d], phi) for d in range(len(DIMS))],
            axis=1,
        )


def _demo_matrix(demos, n_resample):
    """Resampled position array per demo, shape (n_demos, n_resample, 3)."""
    phases = np.linspace(0.0, 1.0, n_resample)
    stacks = []
    for demo in demos:
        pts = resample_phase(demo, n_resample)
        stacks.append(np.array([p.position for _, p in pts]))
    return phases, np.array(stacks)


def _fit_all_weights(demos, n_resample, cfg):
    phases, pos = _demo_matrix(demos, n_resample)
    phi = basis_matrix(phases, cfg)
    k = cfg.n_basis
    gram_inv_phi_t = np.linalg.solve(phi.T @ phi + cfg.ridge * np.eye(k), phi.T)
    # weights[demo, dim, k]
    return np.einsum("kn,mnd->mdk", gram_inv_phi_t, pos)


def train_promp(demos, n_resample=DEFAULT_RESAMPLE, cfg: BasisConfig = None,
                cov_reg=DEFAULT_COV_REG) -> ProMPModel:
    """Fit per-demo weights, then pool into a Gaussian weight distribution."""
    demos = list(demos)
    if len(demos) < 2:
        raise TooFewDemos("need at least 2 demonstrations, got %d" % len(demos))
    if cfg is None:
        cfg = BasisConfig()
    weights = _fit_all_weights(demos, n_resample, cfg)
    # canonical demo order: float summation order then cannot depend on the
    # caller's list order, keeping training permutation-invariant bit for bit
    order = sorted(range(len(demos)), key=lambda i: weights[i].tobytes())
    weights = weights[order]
    durations = [demos[i].duration for i in order]
    mean = weights.mean(axis=0)
    k = cfg.n_basis
    cov = np.empty((len(DIMS), k, k))
    for d in range(len(DIMS)):
        centered = weights[:, d, :] - mean[d]
        cov[d] = centered.T @ centered / (len(demos) - 1) + cov_reg * np.eye(k)
        cov[d] = 0.5 * (cov[d] + cov[d].T)
    orientation = demos[order[0]].waypoints[0].pose.orientation
    ref_duration = float(np.mean(durations))
    return ProMPModel(cfg=cfg, mean=mean, cov=cov, orientation=orientation,
                      reference_duration=ref_duration)


def condition(model: ProMPModel, via_points) -> ProMPModel:
    """Gaussian conditioning on via points, applied sequentially per dimension."""
    mean = model.mean.copy()
    cov = model.cov.copy()
    for via in via_points:
        phi = basis_matrix([via.phase], model.cfg)[0]
        for d in range(len(DIMS)):
            s = float(via.noise_var + phi @ cov[d] @ phi)
            if s <= 0.0:
                continue  # zero prior variance and exact observation: no update
            gain = (cov[d] @ phi) / s
            mean[d] = mean[d] + gain * (via.value[d] - phi @ mean[d])
            cov[d] = cov[d] - np.outer(gain, phi @ cov[d])
            cov[d] = 0.5 * (cov[d] + cov[d].T)
    return ProMPModel(cfg=model.cfg, mean=mean, cov=cov,
                      orientation=model.orientation,
                      reference_duration=model.reference_duration)


def _reconstruct(weights_3k, cfg, n, duration, orientation, traj_id):
    phases = np.linspace(0.0, 1.0, n)
    phi = basis_matrix(phases, cfg)
    pos = phi @ weights_3k.T  # (n, 3)
    dt = duration / (n - 1)
    waypoints = tuple(
        Waypoint(t=i * dt, pose=Pose(pos[i], orientation)) for i in range(n)
    )
    return Trajectory(id=traj_id, waypoints=waypoints, sample_period=dt)


def mean_trajectory(model: ProMPModel, n, duration=None, traj_id="promp-mean"):
    if n < 2:
        raise ProMPError("need n >= 2 output points")
    if duration is None:
        duration = model.reference_duration
    return _reconstruct(model.mean, model.cfg, n, duration, model.orientation, traj_id)


def sample_trajectory(model: ProMPModel, n, duration=None, seed=0,
                      traj_id="promp-sample"):
    """Draw w ~ N(mu, Sigma) per dimension via symmetric eigendecomposition."""
    if n < 2:
        raise ProMPError("need n >= 2 output points")
    if duration is None:
        duration = model.reference_duration
    rng = np.random.default_rng(seed)
    k = model.cfg.n_basis
    weights = np.empty((len(DIMS), k))
    for d in range(len(DIMS)):
        vals, vecs = np.linalg.eigh(model.cov[d])
        root = vecs @ np.diag(np.sqrt(np.clip(vals, 0.0, None)))
        weights[d] = model.mean[d] + root @ rng.standard_normal(k)
    return _reconstruct(weights, model.cfg, n, duration, model.orientation, traj_id)


@dataclass(frozen=True)
class ContextualProMP:
    """Weights regressed affinely on a scalar context: w(c) = A @ [1, c]."""
    cfg: BasisConfig
    affine: np.ndarray  # (3, K, 2)
    orientation: np.ndarray = field(default_factory=lambda: TOOL_DOWN_QUAT.copy())
    reference_duration: float = 1.0

    def __post_init__(self):
        a = np.asarray(self.affine, dtype=float).reshape(len(DIMS), self.cfg.n_basis, 2)
        if not np.all(np.isfinite(a)):
            raise ValueError("affine map must be finite")
        object.__setattr__(self, "affine", a)


def train_contextual(demos_with_context, n_resample=DEFAULT_RESAMPLE,
                     cfg: BasisConfig = None) -> ContextualProMP:
    pairs = list(demos_with_context)
    if len(pairs) < 2:
        raise TooFewDemos("need at least 2 demonstrations")
    contexts = np.array([float(c) for _, c in pairs])
    if np.ptp(contexts) == 0.0:
        raise DegenerateContexts("all context values are equal")
    if cfg is None:
        cfg = BasisConfig()
    demos = [t for t, _ in pairs]
    weights = _fit_all_weights(demos, n_resample, cfg)  # (m, 3, K)
    design = np.column_stack([np.ones_like(contexts), contexts])  # (m, 2)
    affine = np.empty((len(DIMS), cfg.n_basis, 2))
    for d in range(len(DIMS)):
        sol, *_ = np.linalg.lstsq(design, weights[:, d, :], rcond=None)
        affine[d] = sol.T
    ref_duration = float(np.mean([demo.duration for demo in demos]))
    return ContextualProMP(cfg=cfg, affine=affine,
                           orientation=demos[0].waypoints[0].pose.orientation,
                           reference_duration=ref_duration)


def predict_contextual(model: ContextualProMP, context, n, duration=None,
                       traj_id="promp-contextual"):
    if duration is None:
        duration = model.reference_duration
    basis = np.array([1.0, float(context)])
    weights = model.affine @ basis  # (3, K)
    return _reconstruct(weights, model.cfg, n, duration, model.orientation, traj_id)


def timestamp_to_phase(timestamp, reference_duration):
    """Marker timestamps map to phase by the mean training-demo duration."""
    if reference_duration <= 0:
        raise ProMPError("reference duration must be > 0")
    return min(1.0, max(0.0, timestamp / reference_duration))


def model_to_dict(model: ProMPModel):
    return {
        "cfg": {
            "n_basis": model.cfg.n_basis,
            "bandwidth": model.cfg.bandwidth,
            "ridge": model.cfg.ridge,
            "noise": model.cfg.noise,
        },
        "mean": model.mean.tolist(),
        "cov": model.cov.tolist(),
        "orientation": model.orientation.tolist(),
        "reference_duration": model.reference_duration,
    }


def model_from_dict(doc) -> ProMPModel:
    cfg = BasisConfig(**doc["cfg"])
    return ProMPModel(cfg=cfg, mean=np.array(doc["mean"]),
                      cov=np.array(doc["cov"]),
                      orientation=np.array(doc["orientation"]),
                      reference_duration=doc["reference_duration"])


def save_model(model: ProMPModel, path):
    with open(path, "w") as f:
        json.dump(model_to_dict(model), f)


def load_model(path) -> ProMPModel:
    with open(path) as f:
        return model_from_dict(json.load(f))
