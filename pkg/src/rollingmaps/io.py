"""File formats: CSV curves, profiles and trajectories; key/value reports; manifold specs.

All CSV files are comma separated with a single header line and numbers
written with ``%.17g`` so that a write/read round trip is exact.

curve:       t, xi_1..xi_m[, dxi_1..dxi_m]
profile:     t, kappa_1..kappa_{n-1}
trajectory:  t, xi_1..xi_m, xihat_1..xihat_k, q_11..q_nn   (q row-major)

Reports and manifold specs use INI-style ``key = value`` text (configparser).
Matrices in reports are written row-major as space-separated numbers.
"""
from __future__ import annotations

import configparser
from pathlib import Path

import numpy as np

from .curves import SampledCurve, from_samples
from .geometry import ManifoldModel, builtin_manifold, grid_manifold
from .rolling import RollingTrajectory
from .synthesis import CurvatureProfile

FMT = "%.17g"


def _write_table(path, header, data):
    data = np.asarray(data, dtype=float)
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, data, fmt=FMT, delimiter=",")


def _read_table(path):
    path = Path(path)
    with open(path) as fh:
        header = [h.strip() for h in fh.readline().strip().split(",")]
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(header):
        raise ValueError(f"{path}: {data.shape[1]} columns but {len(header)} header names")
    return header, data


def _columns(header, data, prefix):
    idx = [i for i, h in enumerate(header) if h.startswith(prefix + "_")]
    return data[:, idx]


# ------------------------------------------------------------------ curves


def write_curve(path, c: SampledCurve, with_derivatives=True):
    m = c.dim
    header = ["t"] + [f"xi_{i + 1}" for i in range(m)]
    cols = [c.t[:, None], c.xi]
    if with_derivatives:
        header += [f"dxi_{i + 1}" for i in range(m)]
        cols.append(c.dxi)
    _write_table(path, header, np.hstack(cols))


def read_curve(path, closed=False) -> SampledCurve:
    header, data = _read_table(path)
    if header[0] != "t":
        raise ValueError(f"{path}: first column must be t")
    xi = _columns(header, data, "xi")
    dxi = _columns(header, data, "dxi")
    if xi.shape[1] == 0:
        raise ValueError(f"{path}: no xi_ columns")
    return from_samples(data[:, 0], xi, dxi if dxi.shape[1] else None, closed=closed, label=Path(path).stem)


# ------------------------------------------------------------------ profiles


def write_profile(path, profile: CurvatureProfile):
    header = ["t"] + [f"kappa_{j + 1}" for j in range(profile.n - 1)]
    _write_table(path, header, np.hstack([profile.t[:, None], profile.kappa]))


def read_profile(path) -> CurvatureProfile:
    header, data = _read_table(path)
    kappa = _columns(header, data, "kappa")
    if header[0] != "t" or kappa.shape[1] == 0:
        raise ValueError(f"{path}: expected columns t, kappa_1..")
    return CurvatureProfile(data[:, 0], kappa)


# ------------------------------------------------------------------ trajectories


def write_trajectory(path, traj: RollingTrajectory):
    n = traj.q.shape[1]
    m, k = traj.x.dim, traj.x_hat.dim
    header = (["t"] + [f"xi_{i + 1}" for i in range(m)] + [f"xihat_{i + 1}" for i in range(k)]
              + [f"q_{i + 1}{j + 1}" for i in range(n) for j in range(n)])
    data = np.hstack([traj.t[:, None], traj.x.xi, traj.x_hat.xi, traj.q.reshape(len(traj), n * n)])
    _write_table(path, header, data)


def read_trajectory(path) -> RollingTrajectory:
    header, data = _read_table(path)
    t = data[:, 0]
    xi = _columns(header, data, "xi")
    xh = _columns(header, data, "xihat")
    q = _columns(header, data, "q")
    n = int(round(np.sqrt(q.shape[1])))
    if n * n != q.shape[1] or n == 0:
        raise ValueError(f"{path}: q columns do not form a square matrix")
    return RollingTrajectory(t, from_samples(t, xi, label="x"), from_samples(t, xh, label="x_hat"),
                             q.reshape(-1, n, n))


# ------------------------------------------------------------------ reports


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FMT % float(v)
    if isinstance(v, complex):
        return f"{FMT % v.real} {FMT % v.imag}"
    if isinstance(v, np.ndarray):
        return " ".join(FMT % float(a) for a in np.ravel(v))
    if v is None:
        return "none"
    return str(v)


def write_report(path, sections: dict):
    """Write ``{section: {key: value}}`` as INI text; keys keep insertion order."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    for name, items in sections.items():
        cp[name] = {k: format_value(v) for k, v in items.items()}
    with open(path, "w", newline="\n") as fh:
        cp.write(fh)


def read_report(path) -> dict:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    if not cp.read(path):
        raise FileNotFoundError(path)
    return {s: dict(cp[s]) for s in cp.sections()}


# ------------------------------------------------------------------ manifolds


def _grid_from_csv(path, name, h):
    header, data = _read_table(path)
    xi = _columns(header, data, "xi")
    phi = _columns(header, data, "phi")
    n = xi.shape[1]
    if phi.shape[1] != n * n:
        raise ValueError(f"{path}: need phi_11..phi_{n}{n} columns")
    axes = [np.unique(xi[:, i]) for i in range(n)]
    if int(np.prod([a.size for a in axes])) != xi.shape[0]:
        raise ValueError(f"{path}: points do not form a tensor grid")
    order = np.lexsort(xi.T[::-1])
    values = phi[order].reshape(tuple(a.size for a in axes) + (n, n))
    return grid_manifold(name, axes, values, h)


def load_manifold_spec(path) -> ManifoldModel:
    """Manifold from a spec file.

    [manifold]
    name = sphere_stereo        ; or any name when grid = file.csv is given
    n = 2
    bound = 1e3                 ; further numeric keys are passed as parameters
    grid = phi.csv              ; optional: tabulated frame field (xi_i, phi_ij columns)
    h = 1e-5                    ; finite-difference step for tabulated frames
    """
    cp = configparser.ConfigParser(interpolation=None)
    if not cp.read(path):
        raise FileNotFoundError(path)
    if "manifold" not in cp:
        raise ValueError(f"{path}: missing [manifold] section")
    sec = dict(cp["manifold"])
    name = sec.pop("name", None)
    if name is None:
        raise ValueError(f"{path}: missing name")
    if "grid" in sec:
        grid = Path(path).parent / sec.pop("grid")
        return _grid_from_csv(grid, name, float(sec.pop("h", 1e-5)))
    n = int(sec.pop("n")) if "n" in sec else None
    return builtin_manifold(name, n, **{k: float(v) for k, v in sec.items()})


def parse_manifold(text: str) -> ManifoldModel:
    """``name[:n]`` for a builtin model, or a path to a spec file."""
    if Path(text).is_file():
        return load_manifold_spec(text)
    name, _, dim = text.partition(":")
    return builtin_manifold(name, int(dim) if dim else None)
